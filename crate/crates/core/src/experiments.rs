//! Initial conditions and the two numerical studies: the refinement sweep
//! `eps = 2^-1 .. 2^-k` with warm starts, and the fold study at fixed `eps`.

use serde::Serialize;

use crate::analysis::triangle_dets;
use crate::energy::MaterialLaw;
use crate::error::{Error, Result};
use crate::lattice::{
    build_constraints, build_lattice, rotation, Configuration, DofLayout, LatticeGraph,
    LatticeSpec, Mat2, Vec2, PHI_REGULAR, SQRT3,
};
use crate::solver::{NewtonOptions, NewtonSolver, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMode {
    /// `det A = 1`, `A e1` parallel to `e1`.
    Det1,
    /// `A e1 = e1`.
    EdgePreserving,
}

/// The admissible linear map with `A e1 = v` and `A R_{pi/3} e1 = R_phi v`.
pub fn linear_map(phi: f64, mode: LinearMode) -> Result<Mat2> {
    let scale = match mode {
        LinearMode::EdgePreserving => 1.0,
        LinearMode::Det1 => {
            let s = phi.sin();
            if !(s > 0.0) {
                return Err(Error::InvalidAngle {
                    phi,
                    reason: "det-1 initialization needs phi in (0, pi)",
                });
            }
            (PHI_REGULAR.sin() / s).sqrt()
        }
    };
    let v = Vec2::new(scale, 0.0);
    let image = Mat2::from_columns(&[v, rotation(phi) * v]);
    let basis = Mat2::from_columns(&[
        Vec2::new(1.0, 0.0),
        rotation(PHI_REGULAR) * Vec2::new(1.0, 0.0),
    ]);
    Ok(image * basis.try_inverse().expect("lattice basis is invertible"))
}

/// Replaces slave and origin values so the constraint holds exactly.
fn admissible(graph: &LatticeGraph, phi: f64, config: &Configuration) -> Result<Configuration> {
    let cmap = build_constraints(graph, phi)?;
    DofLayout::new(graph, &cmap).make_admissible(config)
}

pub fn linear_init(graph: &LatticeGraph, phi: f64, mode: LinearMode) -> Result<Configuration> {
    let a = linear_map(phi, mode)?;
    admissible(graph, phi, &Configuration::linear(graph, &a))
}

/// Rotation by `pi/3` in lattice coordinates `(i, j) -> i e1 + j R_{pi/3} e1`.
fn rot60((i, j): (i64, i64)) -> (i64, i64) {
    (-j, i + j)
}

fn rot60_inv((i, j): (i64, i64)) -> (i64, i64) {
    (i + j, -i)
}

/// Successive folds of the plane onto hexagons of radius `N - 1, N - 2, ...`
/// (in lattice units) centred at the corner.
///
/// Inside the wedge's own sector a fold is the reflection across the chord
/// `i + j = r`; elsewhere it is the rotated copy of that reflection, so each
/// fold commutes with `R_{pi/3}` and folded bottom-edge vertices stay paired
/// with folded left-edge vertices. Sectors are half-open, `(k pi/3, (k+1) pi/3]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub radii: Vec<i64>,
}

impl FoldPlan {
    pub fn new(graph: &LatticeGraph, folds: usize) -> Result<Self> {
        let n = graph.n;
        if folds >= n {
            return Err(Error::FoldOutOfRange { folds, n });
        }
        Ok(FoldPlan {
            radii: (1..=folds).map(|l| (n - l) as i64).collect(),
        })
    }

    /// Image of the lattice point `(i, j)` after all folds.
    pub fn apply(&self, point: (i64, i64)) -> (i64, i64) {
        self.radii.iter().fold(point, |p, &r| fold_once(p, r))
    }
}

fn fold_once(point: (i64, i64), r: i64) -> (i64, i64) {
    if point == (0, 0) {
        return point;
    }
    let mut p = point;
    let mut turns = 0;
    // rotate into the sector i >= 0, j > 0
    while !(p.0 >= 0 && p.1 > 0) {
        p = rot60_inv(p);
        turns += 1;
    }
    let (i, j) = p;
    if i + j > r {
        p = (r - j, r - i);
    }
    (0..turns).fold(p, |q, _| rot60(q))
}

/// Folded lattice coordinates of every vertex.
pub fn fold_lattice_coords(graph: &LatticeGraph, folds: usize) -> Result<Vec<(i64, i64)>> {
    let plan = FoldPlan::new(graph, folds)?;
    Ok(graph
        .vertices
        .iter()
        .map(|v| plan.apply((v.i as i64, v.j as i64)))
        .collect())
}

pub fn fold_reference(graph: &LatticeGraph, folds: usize) -> Result<Vec<Vec2>> {
    let eps = graph.eps();
    Ok(fold_lattice_coords(graph, folds)?
        .into_iter()
        .map(|(i, j)| eps * Vec2::new(i as f64 + 0.5 * j as f64, 0.5 * SQRT3 * j as f64))
        .collect())
}

/// Linear map of the given mode applied to the folded reference lattice.
pub fn folded_init(
    graph: &LatticeGraph,
    phi: f64,
    folds: usize,
    mode: LinearMode,
) -> Result<Configuration> {
    let a = linear_map(phi, mode)?;
    let positions = fold_reference(graph, folds)?
        .iter()
        .map(|x| a * x)
        .collect();
    admissible(graph, phi, &Configuration { positions })
}

/// Piecewise-linear interpolation of a coarse configuration onto the lattice
/// with half the spacing.
pub fn prolong(
    coarse_graph: &LatticeGraph,
    coarse: &Configuration,
    fine_graph: &LatticeGraph,
) -> Result<Configuration> {
    if fine_graph.n != 2 * coarse_graph.n {
        return Err(Error::IncompatibleLattices {
            coarse: coarse_graph.n,
            fine: fine_graph.n,
        });
    }
    if coarse.len() != coarse_graph.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: coarse_graph.num_vertices(),
            got: coarse.len(),
        });
    }
    let at =
        |i: usize, j: usize| coarse.positions[coarse_graph.vertex_id(i, j).expect("coarse vertex")];
    let positions = fine_graph
        .vertices
        .iter()
        .map(|v| match (v.i % 2, v.j % 2) {
            (0, 0) => at(v.i / 2, v.j / 2),
            (1, 0) => 0.5 * (at(v.i / 2, v.j / 2) + at(v.i / 2 + 1, v.j / 2)),
            (0, 1) => 0.5 * (at(v.i / 2, v.j / 2) + at(v.i / 2, v.j / 2 + 1)),
            _ => 0.5 * (at(v.i / 2, v.j / 2 + 1) + at(v.i / 2 + 1, v.j / 2)),
        })
        .collect();
    Ok(Configuration { positions })
}

/// `log2((e_{4 eps} - e_{2 eps}) / (e_{2 eps} - e_eps))`.
pub fn estimate_rate(e_eps: f64, e_2eps: f64, e_4eps: f64) -> Result<f64> {
    let ratio = (e_4eps - e_2eps) / (e_2eps - e_eps);
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::NonMonotone { ratio });
    }
    Ok(ratio.log2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub k_max: u32,
    pub newton: NewtonOptions,
    /// Start every level from the linear map instead of the prolonged minimizer.
    pub cold_start: bool,
    /// Permit `k_max > 8`.
    pub allow_deep: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            k_max: 8,
            newton: NewtonOptions::default(),
            cold_start: false,
            allow_deep: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLevel {
    pub eps_exp: u32,
    pub n: usize,
    pub energy: f64,
    /// Rate from this level and the two coarser ones, when defined.
    pub p_eps: Option<f64>,
    pub min_det: f64,
    pub nonpos_det_count: usize,
    pub iterations: usize,
    pub converged: bool,
    pub report: SolveReport,
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub phi: f64,
    pub levels: Vec<SweepLevel>,
    pub minimizers: Vec<(LatticeGraph, Configuration)>,
}

impl SweepRecord {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// `(eps_exp, p_eps)` for every level where the rate is defined.
    pub fn rates(&self) -> Vec<(u32, f64)> {
        self.levels
            .iter()
            .filter_map(|l| l.p_eps.map(|p| (l.eps_exp, p)))
            .collect()
    }
}

pub fn run_sweep(phi: f64, law: &MaterialLaw, opts: &SweepOptions) -> Result<SweepRecord> {
    if opts.k_max == 0 {
        return Err(Error::Config("sweep needs k_max >= 1".into()));
    }
    if opts.k_max > 8 && !opts.allow_deep {
        return Err(Error::Config(format!(
            "k_max = {} exceeds 8; pass the override to run deeper sweeps",
            opts.k_max
        )));
    }
    let mut levels: Vec<SweepLevel> = Vec::new();
    let mut minimizers: Vec<(LatticeGraph, Configuration)> = Vec::new();
    for k in 1..=opts.k_max {
        let run = || -> Result<(LatticeGraph, Configuration, SolveReport)> {
            let graph = build_lattice(&LatticeSpec::dyadic(phi, k)?);
            let cmap = build_constraints(&graph, phi)?;
            let layout = DofLayout::new(&graph, &cmap);
            let init = match minimizers.last() {
                Some((g, u)) if !opts.cold_start => prolong(g, u, &graph)?,
                _ => linear_init(&graph, phi, LinearMode::Det1)?,
            };
            let (u, report) =
                NewtonSolver::new(&graph, *law, &layout).minimize(&init, &opts.newton)?;
            Ok((graph, u, report))
        };
        let (graph, u, report) = run().map_err(|e| e.at_level(k))?;
        let dets = triangle_dets(&graph, &u);
        let energy = report.final_energy();
        let p_eps = if levels.len() >= 2 {
            let n = levels.len();
            estimate_rate(energy, levels[n - 1].energy, levels[n - 2].energy).ok()
        } else {
            None
        };
        levels.push(SweepLevel {
            eps_exp: k,
            n: graph.n,
            energy,
            p_eps,
            min_det: dets.min,
            nonpos_det_count: dets.nonpositive,
            iterations: report.iterations,
            converged: report.converged,
            report,
        });
        minimizers.push((graph, u));
    }
    Ok(SweepRecord {
        phi,
        levels,
        minimizers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub folds: usize,
    pub energy: f64,
    pub min_det: f64,
    pub nonpos_det_count: usize,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub minimizer: Configuration,
}

#[derive(Debug, Clone)]
pub struct FoldStudy {
    pub phi: f64,
    pub graph: LatticeGraph,
    pub results: Vec<FoldResult>,
}

/// Minimizes from the folded initial conditions `L = 0..=max_folds` at `eps = 2^-eps_exp`.
pub fn run_fold_study(
    phi: f64,
    eps_exp: u32,
    max_folds: usize,
    law: &MaterialLaw,
    newton: &NewtonOptions,
) -> Result<FoldStudy> {
    let graph = build_lattice(&LatticeSpec::dyadic(phi, eps_exp)?);
    let cmap = build_constraints(&graph, phi)?;
    let layout = DofLayout::new(&graph, &cmap);
    let solver = NewtonSolver::new(&graph, *law, &layout);
    let mut results = Vec::new();
    for folds in 0..=max_folds {
        let init = folded_init(&graph, phi, folds, LinearMode::EdgePreserving)?;
        let (u, report) = solver.minimize(&init, newton)?;
        let dets = triangle_dets(&graph, &u);
        results.push(FoldResult {
            folds,
            energy: report.final_energy(),
            min_det: dets.min,
            nonpos_det_count: dets.nonpositive,
            iterations: report.iterations,
            converged: report.converged,
            minimizer: u,
        });
    }
    Ok(FoldStudy {
        phi,
        graph,
        results,
    })
}

/// Least-squares line `y = slope x + intercept` with the residual norm
/// relative to the norm of `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub relative_residual: f64,
}

impl AffineFit {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - slope * x - intercept).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = ys.iter().map(|y| y * y).sum::<f64>().sqrt();
        AffineFit {
            slope,
            intercept,
            relative_residual: res / norm,
        }
    }

    /// Abscissa where the fitted line reaches zero.
    pub fn zero_crossing(&self) -> f64 {
        -self.intercept / self.slope
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::assemble_energy;
    use crate::lattice::{PHI_FIVE, PHI_SEVEN};

    fn graph(n: usize) -> LatticeGraph {
        build_lattice(&LatticeSpec::new(PHI_FIVE, n).unwrap())
    }

    fn check_linear_map(phi: f64, mode: LinearMode) -> Mat2 {
        let a = linear_map(phi, mode).unwrap();
        let e1 = Vec2::new(1.0, 0.0);
        let lhs = a * (rotation(PHI_REGULAR) * e1);
        let rhs = rotation(phi) * (a * e1);
        assert!((lhs - rhs).norm() < 1e-14);
        a
    }

    #[test]
    fn det1_map_seven() {
        let a = check_linear_map(PHI_SEVEN, LinearMode::Det1);
        assert!((a.determinant() - 1.0).abs() < 1e-12);
        assert!((a[(0, 0)] - 1.05247).abs() < 5e-6);
    }

    #[test]
    fn det1_map_five() {
        let a = check_linear_map(PHI_FIVE, LinearMode::Det1);
        assert!((a.determinant() - 1.0).abs() < 1e-12);
        assert!((a[(0, 0)] - 0.95425).abs() < 5e-6);
    }

    #[test]
    fn edge_preserving_map_is_identity_without_mismatch() {
        let a = check_linear_map(PHI_REGULAR, LinearMode::EdgePreserving);
        assert!((a - Mat2::identity()).norm() < 1e-15);
        let g = graph(4);
        let u = linear_init(&g, PHI_REGULAR, LinearMode::EdgePreserving).unwrap();
        assert!(assemble_energy(&g, &u, &MaterialLaw::harmonic()).unwrap() < 1e-28);
    }

    #[test]
    fn det1_rejects_reflex_angles() {
        assert!(linear_map(4.0, LinearMode::Det1).is_err());
        assert!(linear_map(4.0, LinearMode::EdgePreserving).is_ok());
    }

    #[test]
    fn linear_init_is_exactly_admissible() {
        let g = graph(8);
        let u = linear_init(&g, PHI_FIVE, LinearMode::Det1).unwrap();
        let cmap = build_constraints(&g, PHI_FIVE).unwrap();
        assert_eq!(cmap.residual(&u), 0.0);
    }

    #[test]
    fn zero_folds_is_identity() {
        let g = graph(4);
        assert_eq!(fold_reference(&g, 0).unwrap(), g.reference_positions());
        assert_eq!(
            folded_init(&g, PHI_FIVE, 0, LinearMode::Det1).unwrap(),
            linear_init(&g, PHI_FIVE, LinearMode::Det1).unwrap()
        );
    }

    #[test]
    fn fold_count_is_bounded() {
        let g = graph(4);
        assert!(fold_reference(&g, 3).is_ok());
        assert!(matches!(
            fold_reference(&g, 4),
            Err(Error::FoldOutOfRange { .. })
        ));
    }

    #[test]
    fn fold_commutes_with_rotation() {
        for r in 0..6 {
            for i in -8..=8 {
                for j in -8..=8 {
                    let p = (i, j);
                    assert_eq!(fold_once(rot60(p), r), rot60(fold_once(p, r)));
                }
            }
        }
    }

    #[test]
    fn folds_preserve_edge_pairing() {
        for n in [4, 8] {
            let g = graph(n);
            let cmap = build_constraints(&g, PHI_FIVE).unwrap();
            for l in 0..n.min(4) {
                let folded = fold_lattice_coords(&g, l).unwrap();
                for sp in &cmap.pairs {
                    assert_eq!(folded[sp.slave], rot60(folded[sp.master]));
                }
            }
        }
    }

    #[test]
    fn folds_are_isometric_on_bonds() {
        let g = graph(8);
        for l in 0..4 {
            let folded = fold_reference(&g, l).unwrap();
            for e in &g.edges {
                assert!(((folded[e.a] - folded[e.b]).norm() - g.eps()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn interior_vertices_reflect_across_chord() {
        let g = graph(4);
        let folded = fold_lattice_coords(&g, 1).unwrap();
        for (v, &f) in g.vertices.iter().zip(&folded) {
            let (i, j) = (v.i as i64, v.j as i64);
            if v.i > 0 && v.j > 0 && i + j == 4 {
                assert_eq!(f, (3 - j, 3 - i));
            } else if i + j <= 3 {
                assert_eq!(f, (i, j));
            }
        }
    }

    #[test]
    fn fold_panels() {
        // after L folds of N = 4 the image is the triangle of size 4 - L plus
        // one cell hanging over the left edge at its top
        let g = graph(4);
        for l in 1..4 {
            let r = 4 - l as i64;
            let mut image = fold_lattice_coords(&g, l).unwrap();
            image.sort();
            image.dedup();
            let mut expected: Vec<(i64, i64)> = (0..=r)
                .flat_map(|j| (0..=r - j).map(move |i| (i, j)))
                .collect();
            expected.push((-1, r));
            expected.sort();
            assert_eq!(image, expected, "L = {l}");
        }
        let folded = fold_lattice_coords(&g, 1).unwrap();
        assert_eq!(folded[g.vertex_id(0, 4).unwrap()], (-1, 3));
        assert_eq!(folded[g.vertex_id(4, 0).unwrap()], (2, 1));
    }

    #[test]
    fn prolongation_reproduces_linear_maps() {
        let coarse = graph(4);
        let fine = graph(8);
        let a = Mat2::new(0.9, 0.2, -0.1, 1.3);
        let u = prolong(&coarse, &Configuration::linear(&coarse, &a), &fine).unwrap();
        for (v, p) in fine.vertices.iter().zip(&u.positions) {
            assert!((a * v.x - p).norm() < 1e-14);
        }
    }

    #[test]
    fn prolongation_averages_edge_endpoints() {
        let coarse = graph(2);
        let fine = graph(4);
        let u = Configuration {
            positions: (0..coarse.num_vertices())
                .map(|k| Vec2::new(k as f64, (k * k) as f64))
                .collect(),
        };
        let pu = prolong(&coarse, &u, &fine).unwrap();
        let c = |i, j| u.positions[coarse.vertex_id(i, j).unwrap()];
        let f = |i, j| pu.positions[fine.vertex_id(i, j).unwrap()];
        assert_eq!(f(1, 0), 0.5 * (c(0, 0) + c(1, 0)));
        assert_eq!(f(2, 1), 0.5 * (c(1, 0) + c(1, 1)));
        assert_eq!(f(1, 1), 0.5 * (c(0, 1) + c(1, 0)));
        assert_eq!(f(2, 2), c(1, 1));
    }

    #[test]
    fn prolongation_keeps_admissibility() {
        let coarse = graph(4);
        let fine = graph(8);
        let u = folded_init(&coarse, PHI_SEVEN, 2, LinearMode::Det1).unwrap();
        let pu = prolong(&coarse, &u, &fine).unwrap();
        let cmap = build_constraints(&fine, PHI_SEVEN).unwrap();
        assert!(cmap.residual(&pu) < 1e-14);
    }

    #[test]
    fn prolongation_rejects_mismatched_lattices() {
        let u = Configuration::reference(&graph(4));
        assert!(matches!(
            prolong(&graph(4), &u, &graph(6)),
            Err(Error::IncompatibleLattices { .. })
        ));
    }

    #[test]
    fn rate_of_exact_power_laws() {
        let eps: f64 = 1.0 / 64.0;
        let e = |h: f64| 1.0 - h * h;
        assert!((estimate_rate(e(eps), e(2.0 * eps), e(4.0 * eps)).unwrap() - 2.0).abs() < 1e-9);
        for q in [0.7, 1.5, 3.0] {
            for c2 in [0.1, 5.0] {
                let e = |h: f64| 2.0 - c2 * h.powf(q);
                let p = estimate_rate(e(eps), e(2.0 * eps), e(4.0 * eps)).unwrap();
                assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rate_rejects_non_monotone_energies() {
        assert!(matches!(
            estimate_rate(1.0, 2.0, 1.5),
            Err(Error::NonMonotone { .. })
        ));
        assert!(matches!(
            estimate_rate(1.0, 1.0, 0.5),
            Err(Error::NonMonotone { .. })
        ));
    }

    #[test]
    fn sweep_guard() {
        let opts = SweepOptions {
            k_max: 9,
            ..Default::default()
        };
        assert!(run_sweep(PHI_FIVE, &MaterialLaw::harmonic(), &opts).is_err());
    }

    #[test]
    fn affine_fit_exact_line() {
        let fit = AffineFit::new(&[0.0, 1.0, 2.0, 3.0], &[4.0, 3.0, 2.0, 1.0]);
        assert!((fit.slope + 1.0).abs() < 1e-14);
        assert!((fit.zero_crossing() - 4.0).abs() < 1e-12);
        assert!(fit.relative_residual < 1e-14);
    }
}
