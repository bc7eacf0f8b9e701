use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use disclination::analysis::{
    check_dist_oracle, check_energy_identity, check_laminate, check_lemma_a1, check_rigidity,
    check_svd, frame_indifference, frustration_check, CheckReport, LaminateWitness,
};
use disclination::energy::{EdgeWeights, MaterialLaw, Psi};
use disclination::experiments::{run_fold_study, run_sweep, SweepOptions, SweepRecord};
use disclination::io::{
    fold_csv, full_turn_copies, parse_config, parse_phi, phi_label, read_file, render_svg,
    sweep_csv, verify_jsonl, verify_text, write_config, write_file, write_lattice_dump,
    ConfigHeader, InitSpec, RenderOptions,
};
use disclination::lattice::{
    build_constraints, build_lattice, DofLayout, LatticeGraph, LatticeSpec, PHI_FIVE, PHI_REGULAR,
    PHI_SEVEN,
};
use disclination::solver::{solve_log_csv, NewtonOptions, NewtonSolver};
use disclination::{Error, Result};

#[derive(Parser)]
#[command(
    name = "discl",
    version,
    about = "Wedge disclinations on a triangular lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct LawArgs {
    /// Bond exponent p >= 2.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Volume penalty: zero, smooth, or smooth:<kappa>,<delta>.
    #[arg(long, default_value = "zero")]
    psi: String,
    /// Count boundary bonds with full weight.
    #[arg(long)]
    uniform_weights: bool,
}

impl LawArgs {
    fn law(&self) -> Result<MaterialLaw> {
        let law = MaterialLaw::new(self.p, Psi::parse(&self.psi)?)?;
        Ok(if self.uniform_weights {
            law.with_weights(EdgeWeights::Uniform)
        } else {
            law
        })
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    grad_tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Undamped, unregularized Newton iteration.
    #[arg(long)]
    plain_newton: bool,
}

impl SolverArgs {
    fn options(&self) -> Result<NewtonOptions> {
        let base = if self.plain_newton {
            NewtonOptions::plain()
        } else {
            NewtonOptions::default()
        };
        let opts = NewtonOptions {
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            ..base
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the lattice, its edge weights and the boundary pairing.
    Mesh {
        #[arg(long, default_value = "5")]
        phi: String,
        #[arg(long)]
        eps_exp: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Minimize the energy at one lattice spacing.
    Minimize {
        #[arg(long, default_value = "5")]
        phi: String,
        #[arg(long)]
        eps_exp: u32,
        /// linear:det1, linear:edge, fold:<L> or file:<path>.
        #[arg(long, default_value = "linear:det1")]
        init: String,
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Minimize for eps = 2^-1 .. 2^-k with warm starts and report rates.
    Sweep {
        #[arg(long, default_value = "5")]
        phi: String,
        #[arg(long, default_value_t = 8)]
        eps_max_exp: u32,
        /// Permit eps-max-exp above 8.
        #[arg(long)]
        allow_deep: bool,
        /// Start every level from the linear map.
        #[arg(long)]
        cold_start: bool,
        /// Also write the minimizer of every level.
        #[arg(long)]
        save_configs: bool,
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Minimize from folded initial conditions with 0..=max-folds folds.
    FoldStudy {
        #[arg(long, default_value = "5")]
        phi: String,
        #[arg(long, default_value_t = 2)]
        eps_exp: u32,
        #[arg(long, default_value_t = 3)]
        max_folds: usize,
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the numerical verifications.
    Verify {
        /// Run every check.
        #[arg(long)]
        all: bool,
        /// Run a named check (repeatable).
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Finest level of the sweeps used by the frustration checks.
        #[arg(long, default_value_t = 4)]
        eps_max_exp: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Draw a configuration file as SVG.
    Render {
        #[arg(long)]
        config: PathBuf,
        /// Number of rotated copies to draw.
        #[arg(long, conflicts_with = "all_copies")]
        copies: Option<usize>,
        /// Draw floor(2 pi / phi) rotated copies.
        #[arg(long)]
        all_copies: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

const CHECKS: [&str; 8] = [
    "svd2",
    "dist_so2",
    "lemma_a1",
    "laminate",
    "rigidity",
    "energy_identity",
    "frame_indifference",
    "frustration",
];

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("DISCL_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            Error::Config(format!(
                "DISCL_THREADS must be a positive integer, got '{value}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn lattice(phi: f64, eps_exp: u32) -> Result<LatticeGraph> {
    if eps_exp > 12 {
        return Err(Error::Config(format!(
            "eps-exp {eps_exp} is too fine (max 12)"
        )));
    }
    Ok(build_lattice(&LatticeSpec::dyadic(phi, eps_exp)?))
}

fn cmd_mesh(phi: &str, eps_exp: u32, out: &Path) -> Result<bool> {
    let phi = parse_phi(phi)?;
    let graph = lattice(phi, eps_exp)?;
    let cmap = build_constraints(&graph, phi)?;
    let path = out.join(format!("mesh_eps{eps_exp}.txt"));
    write_file(&path, &write_lattice_dump(&graph, &cmap))?;
    println!(
        "{}: {} vertices, {} edges, {} triangles",
        path.display(),
        graph.num_vertices(),
        graph.edges.len(),
        graph.triangles.len()
    );
    Ok(true)
}

fn cmd_minimize(
    phi: &str,
    eps_exp: u32,
    init: &str,
    law: &LawArgs,
    solver: &SolverArgs,
    out: &Path,
) -> Result<bool> {
    let phi = parse_phi(phi)?;
    let init = InitSpec::parse(init)?;
    let material = law.law()?;
    let opts = solver.options()?;
    let graph = lattice(phi, eps_exp)?;
    let cmap = build_constraints(&graph, phi)?;
    let layout = DofLayout::new(&graph, &cmap);
    let start = init.build(&graph, phi)?;
    let (u, report) = NewtonSolver::new(&graph, material, &layout).minimize(&start, &opts)?;
    let header = ConfigHeader {
        phi,
        n: graph.n,
        p: material.p,
        psi: material.psi,
    };
    write_file(
        &out.join(format!("config_eps{eps_exp}.txt")),
        &write_config(&header, &u),
    )?;
    write_file(
        &out.join(format!("solve_eps{eps_exp}.csv")),
        &solve_log_csv(&report),
    )?;
    let dets = disclination::analysis::triangle_dets(&graph, &u);
    println!(
        "energy={:.12e} grad_inf={:.3e} iters={} converged={} min_det={:.6} nonpos_det_count={}",
        report.final_energy(),
        report.final_grad_inf(),
        report.iterations,
        report.converged,
        dets.min,
        dets.nonpositive
    );
    Ok(report.converged)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    phi: &str,
    eps_max_exp: u32,
    allow_deep: bool,
    cold_start: bool,
    save_configs: bool,
    law: &LawArgs,
    solver: &SolverArgs,
    out: &Path,
) -> Result<bool> {
    let phi = parse_phi(phi)?;
    let material = law.law()?;
    let opts = SweepOptions {
        k_max: eps_max_exp,
        newton: solver.options()?,
        cold_start,
        allow_deep,
    };
    let record = run_sweep(phi, &material, &opts)?;
    let csv = sweep_csv(&record);
    write_file(&out.join(format!("sweep_phi{}.csv", phi_label(phi))), &csv)?;
    if save_configs {
        for ((graph, u), level) in record.minimizers.iter().zip(&record.levels) {
            let header = ConfigHeader {
                phi,
                n: graph.n,
                p: material.p,
                psi: material.psi,
            };
            write_file(
                &out.join(format!("config_eps{}.txt", level.eps_exp)),
                &write_config(&header, u),
            )?;
        }
    }
    print!("{csv}");
    Ok(record.levels.iter().all(|l| l.converged))
}

fn cmd_fold_study(
    phi: &str,
    eps_exp: u32,
    max_folds: usize,
    law: &LawArgs,
    solver: &SolverArgs,
    out: &Path,
) -> Result<bool> {
    let phi = parse_phi(phi)?;
    let material = law.law()?;
    let study = run_fold_study(phi, eps_exp, max_folds, &material, &solver.options()?)?;
    let csv = fold_csv(&study);
    write_file(&out.join(format!("fold_phi{}.csv", phi_label(phi))), &csv)?;
    print!("{csv}");
    Ok(study.results.iter().all(|r| r.converged))
}

fn cmd_verify(
    all: bool,
    checks: &[String],
    eps_max_exp: u32,
    seed: u64,
    out: &Path,
) -> Result<bool> {
    let selected: Vec<&str> = if all {
        CHECKS.to_vec()
    } else if checks.is_empty() {
        return Err(Error::Config(format!(
            "verify needs --all or --check <name> (one of {})",
            CHECKS.join(", ")
        )));
    } else {
        checks.iter().map(String::as_str).collect()
    };
    if let Some(bad) = selected.iter().find(|c| !CHECKS.contains(c)) {
        return Err(Error::Config(format!(
            "unknown check '{bad}' (one of {})",
            CHECKS.join(", ")
        )));
    }
    let harmonic = MaterialLaw::harmonic();
    let mut sweeps: Option<Vec<SweepRecord>> = None;
    let mut get_sweeps = || -> Result<Vec<SweepRecord>> {
        if sweeps.is_none() {
            let opts = SweepOptions {
                k_max: eps_max_exp,
                ..Default::default()
            };
            sweeps = Some(vec![
                run_sweep(PHI_FIVE, &harmonic, &opts)?,
                run_sweep(PHI_SEVEN, &harmonic, &opts)?,
            ]);
        }
        Ok(sweeps.clone().expect("computed above"))
    };

    let mut reports: Vec<CheckReport> = Vec::new();
    for check in selected {
        let report = match check {
            "svd2" => check_svd(10_000, seed),
            "dist_so2" => check_dist_oracle(2.0, 1000, 1_000_000, seed),
            "lemma_a1" => check_lemma_a1(100_000, seed)?,
            "laminate" => check_laminate(&LaminateWitness::default(), 2.0)?,
            "rigidity" => check_rigidity(
                &MaterialLaw::new(2.0, Psi::smoothed_default())?,
                10_000,
                seed,
            )?,
            "energy_identity" => check_energy_identity(
                &[1, 2, 4, 8],
                5,
                &MaterialLaw::new(2.0, Psi::smoothed_default())?,
                seed,
            )?,
            "frame_indifference" => {
                let sweeps = get_sweeps()?;
                let (graph, u) = sweeps[0].minimizers.last().expect("nonempty sweep");
                let worst = frame_indifference(graph, u, &harmonic, 10, seed)?;
                CheckReport {
                    check: "frame_indifference".into(),
                    pass: worst <= 1e-12,
                    min_slack: 1e-12 - worst,
                    samples: 10,
                    detail: format!("max relative change {worst:.3e}"),
                }
            }
            "frustration" => {
                let sweeps = get_sweeps()?;
                let control = control_energy()?;
                frustration_check(&sweeps, Some(control))
            }
            _ => unreachable!("validated above"),
        };
        reports.push(report);
    }
    print!("{}", verify_text(&reports));
    write_file(&out.join("verify.jsonl"), &verify_jsonl(&reports))?;
    Ok(reports.iter().all(|r| r.pass))
}

/// Minimum energy without angular mismatch at `eps = 2^-2`.
fn control_energy() -> Result<f64> {
    let graph = lattice(PHI_REGULAR, 2)?;
    let cmap = build_constraints(&graph, PHI_REGULAR)?;
    let layout = DofLayout::new(&graph, &cmap);
    let init =
        InitSpec::Linear(disclination::experiments::LinearMode::Det1).build(&graph, PHI_REGULAR)?;
    let (_, report) = NewtonSolver::new(&graph, MaterialLaw::harmonic(), &layout)
        .minimize(&init, &NewtonOptions::default())?;
    Ok(report.final_energy())
}

fn cmd_render(config: &Path, copies: Option<usize>, all_copies: bool, out: &Path) -> Result<bool> {
    let (header, u) = parse_config(&read_file(config)?)?;
    let graph = build_lattice(&LatticeSpec::new(header.phi, header.n)?);
    let copies = if all_copies {
        full_turn_copies(header.phi)
    } else {
        copies.unwrap_or(1)
    };
    if copies == 0 {
        return Err(Error::Config("copies must be at least 1".into()));
    }
    let svg = render_svg(
        &graph,
        &u,
        header.phi,
        &RenderOptions {
            copies,
            ..Default::default()
        },
    );
    let name = if header.n.is_power_of_two() {
        format!("render_eps{}.svg", header.n.trailing_zeros())
    } else {
        format!("render_n{}.svg", header.n)
    };
    let path = out.join(name);
    write_file(&path, &svg)?;
    println!("{}", path.display());
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Mesh { phi, eps_exp, out } => cmd_mesh(&phi, eps_exp, &out),
        Command::Minimize {
            phi,
            eps_exp,
            init,
            law,
            solver,
            out,
        } => cmd_minimize(&phi, eps_exp, &init, &law, &solver, &out),
        Command::Sweep {
            phi,
            eps_max_exp,
            allow_deep,
            cold_start,
            save_configs,
            law,
            solver,
            out,
        } => cmd_sweep(
            &phi,
            eps_max_exp,
            allow_deep,
            cold_start,
            save_configs,
            &law,
            &solver,
            &out,
        ),
        Command::FoldStudy {
            phi,
            eps_exp,
            max_folds,
            law,
            solver,
            out,
        } => cmd_fold_study(&phi, eps_exp, max_folds, &law, &solver, &out),
        Command::Verify {
            all,
            checks,
            eps_max_exp,
            seed,
            out,
        } => cmd_verify(all, &checks, eps_max_exp, seed, &out),
        Command::Render {
            config,
            copies,
            all_copies,
            out,
        } => cmd_render(&config, copies, all_copies, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
