//! Diagnostics and sampled verification of the continuum statements:
//! determinant fields, distance to SO(2), rigidity, the six-bond inequality,
//! the laminate at zero and positivity of the frustrated minimum.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{
    assemble_energy, bond_directions, bond_sum_energy, triangle_determinants, w_density,
    MaterialLaw, Psi,
};
use crate::error::{Error, Result};
use crate::experiments::SweepRecord;
use crate::lattice::{
    build_constraints, build_lattice, rotation, Configuration, DofLayout, LatticeGraph,
    LatticeSpec, Mat2, Vec2, PHI_FIVE, PHI_REGULAR,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DetSummary {
    pub dets: Vec<f64>,
    pub min: f64,
    pub nonpositive: usize,
}

pub fn triangle_dets(graph: &LatticeGraph, config: &Configuration) -> DetSummary {
    let dets = triangle_determinants(graph, config);
    let min = dets.iter().copied().fold(f64::INFINITY, f64::min);
    let nonpositive = dets.iter().filter(|&&d| d <= 0.0).count();
    DetSummary {
        dets,
        min,
        nonpositive,
    }
}

/// `A = P1 diag(sigma1, sigma2) P2` with `P1, P2` orthogonal and
/// `0 <= sigma1 <= sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd2 {
    pub sigma1: f64,
    pub sigma2: f64,
    /// `+1` when `det A >= 0`, else `-1`.
    pub det_sign: f64,
    pub p1: Mat2,
    pub p2: Mat2,
}

impl Svd2 {
    pub fn reconstruct(&self) -> Mat2 {
        self.p1 * Mat2::new(self.sigma1, 0.0, 0.0, self.sigma2) * self.p2
    }
}

/// Closed-form SVD from the conformal/anticonformal splitting
/// `A = Q R(alpha) + R R(beta) diag(1, -1)`.
pub fn svd2(a: &Mat2) -> Svd2 {
    let e = 0.5 * (a[(0, 0)] + a[(1, 1)]);
    let f = 0.5 * (a[(0, 0)] - a[(1, 1)]);
    let g = 0.5 * (a[(1, 0)] + a[(0, 1)]);
    let h = 0.5 * (a[(1, 0)] - a[(0, 1)]);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let alpha = h.atan2(e);
    let beta = g.atan2(f);
    let sx = q + r;
    let sy = q - r;
    let left = rotation(0.5 * (alpha + beta));
    let right = rotation(0.5 * (alpha - beta));
    let swap = Mat2::new(0.0, 1.0, 1.0, 0.0);
    let det_sign = if sy < 0.0 { -1.0 } else { 1.0 };
    Svd2 {
        sigma1: sy.abs(),
        sigma2: sx,
        det_sign,
        p1: left * swap * Mat2::new(det_sign, 0.0, 0.0, 1.0),
        p2: swap * right,
    }
}

/// `dist^p(A, SO(2))` in the Frobenius norm.
pub fn dist_so2(a: &Mat2, p: f64) -> f64 {
    let s = svd2(a);
    let first = if s.det_sign < 0.0 {
        s.sigma1 + 1.0
    } else {
        s.sigma1 - 1.0
    };
    let d2 = first * first + (s.sigma2 - 1.0).powi(2);
    d2.powf(0.5 * p)
}

/// Minimum of `|A - R_theta|^p` over a uniform angle grid, refined by a
/// bracketed ternary search around the best grid point.
pub fn dist_so2_grid(a: &Mat2, p: f64, table: &AngleTable) -> f64 {
    let dist2 = |c: f64, s: f64| {
        let r = Mat2::new(c, -s, s, c);
        (a - r).norm_squared()
    };
    let (mut best, mut best_k) = (f64::INFINITY, 0);
    for (k, (&c, &s)) in table.cos.iter().zip(&table.sin).enumerate() {
        let d = dist2(c, s);
        if d < best {
            best = d;
            best_k = k;
        }
    }
    let step = 2.0 * PI / table.cos.len() as f64;
    let centre = best_k as f64 * step;
    let (mut lo, mut hi) = (centre - step, centre + step);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if dist2(m1.cos(), m1.sin()) <= dist2(m2.cos(), m2.sin()) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = 0.5 * (lo + hi);
    best.min(dist2(t.cos(), t.sin())).powf(0.5 * p)
}

/// Precomputed `cos`/`sin` on `size` equispaced angles of `[0, 2 pi)`.
#[derive(Debug, Clone)]
pub struct AngleTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl AngleTable {
    pub fn new(size: usize) -> Self {
        let step = 2.0 * PI / size as f64;
        let (cos, sin) = (0..size)
            .map(|k| (k as f64 * step).cos())
            .zip((0..size).map(|k| (k as f64 * step).sin()))
            .unzip();
        AngleTable { cos, sin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub pass: bool,
    /// Smallest margin by which the checked property held (negative on failure).
    pub min_slack: f64,
    pub samples: usize,
    pub detail: String,
}

fn random_matrix(rng: &mut impl Rng, max_sigma: f64, det_sign: f64) -> Mat2 {
    let s1 = rng.gen_range(0.0..max_sigma);
    let s2 = rng.gen_range(0.0..max_sigma);
    let a = rotation(rng.gen_range(0.0..2.0 * PI));
    let b = rotation(rng.gen_range(0.0..2.0 * PI));
    a * Mat2::new(s1, 0.0, 0.0, det_sign * s2) * b
}

/// Left side minus right side of the six-bond inequality at `(sigma1, sigma2, theta)`.
pub fn lemma_a1_slack(sigma1: f64, sigma2: f64, theta: f64) -> f64 {
    let lhs: f64 = 14.0
        * (0..6)
            .map(|k| {
                let t = theta + k as f64 * PHI_REGULAR;
                let v = Vec2::new(sigma1 * t.cos(), sigma2 * t.sin());
                (v.norm() - 1.0).powi(2)
            })
            .sum::<f64>();
    let rhs = (sigma1 - 1.0).powi(2) + (sigma2 - 1.0).powi(2);
    lhs - rhs
}

pub fn check_lemma_a1(n_samples: usize, seed: u64) -> Result<CheckReport> {
    if n_samples == 0 {
        return Err(Error::Config(
            "lemma check needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..n_samples {
        let a: f64 = rng.gen_range(0.0..=10.0);
        let b: f64 = rng.gen_range(0.0..=10.0);
        let theta = rng.gen_range(0.0..PHI_REGULAR);
        let slack = lemma_a1_slack(a.min(b), a.max(b), theta);
        if slack < 0.0 {
            violations += 1;
        }
        min_slack = min_slack.min(slack);
    }
    Ok(CheckReport {
        check: "lemma_a1".into(),
        pass: violations == 0,
        min_slack,
        samples: n_samples,
        detail: format!("{violations} violations"),
    })
}

/// The four-matrix laminate with equal weights and mean zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminateWitness {
    pub matrices: [Mat2; 4],
    pub weights: [f64; 4],
}

impl Default for LaminateWitness {
    fn default() -> Self {
        let a1 = Mat2::new(1.0, 0.0, 0.0, -1.0);
        let a2 = Mat2::identity();
        LaminateWitness {
            matrices: [a1, a2, -a1, -a2],
            weights: [0.25; 4],
        }
    }
}

const LAMINATE_TOL: f64 = 1e-12;

fn is_rank_one(m: &Mat2) -> (bool, f64) {
    let s = svd2(m);
    (
        s.sigma1 <= LAMINATE_TOL && s.sigma2 > LAMINATE_TOL,
        s.sigma1,
    )
}

pub fn check_laminate(witness: &LaminateWitness, p: f64) -> Result<CheckReport> {
    let law = MaterialLaw::new(p, Psi::Zero)?;
    let [a1, a2, a3, a4] = witness.matrices;
    let mean: Mat2 = witness
        .matrices
        .iter()
        .zip(&witness.weights)
        .map(|(a, w)| a * *w)
        .sum();
    let weight_sum: f64 = witness.weights.iter().sum();
    let mut worst: f64 = mean.norm().max((weight_sum - 1.0).abs());
    let mut failures = Vec::new();
    if worst > LAMINATE_TOL {
        failures.push("mean");
    }
    for (label, m) in [
        ("rank(A1-A2)", a1 - a2),
        ("rank(A3-A4)", a3 - a4),
        ("rank(second level)", 0.5 * (a1 + a2) - 0.5 * (a3 + a4)),
    ] {
        let (ok, s) = is_rank_one(&m);
        worst = worst.max(s);
        if !ok {
            failures.push(label);
        }
    }
    for a in &witness.matrices {
        for d in bond_directions() {
            let dev = ((a.transpose() * d).norm() - 1.0).abs();
            worst = worst.max(dev);
            if dev > LAMINATE_TOL {
                failures.push("bond length");
            }
        }
        let w = w_density(a, &law);
        worst = worst.max(w);
        if w > LAMINATE_TOL {
            failures.push("W(A_i)");
        }
    }
    failures.dedup();
    Ok(CheckReport {
        check: "laminate".into(),
        pass: failures.is_empty(),
        min_slack: LAMINATE_TOL - worst,
        samples: 4,
        detail: if failures.is_empty() {
            format!("max deviation {worst:.3e}; relaxed density at 0 vanishes")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    })
}

const RIGIDITY_FLOOR: f64 = 1e-8;

/// Sampled infimum of `W(A) / dist^p(A, SO(2))`.
pub fn check_rigidity(law: &MaterialLaw, n_samples: usize, seed: u64) -> Result<CheckReport> {
    if law.psi.is_zero() {
        return Err(Error::Config(
            "rigidity check needs a volume penalty; with no penalty the ratio vanishes on reflections".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut used = 0;
    for k in 0..n_samples {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let a = random_matrix(&mut rng, 5.0, sign);
        let d = dist_so2(&a, law.p);
        if d.powf(1.0 / law.p) < RIGIDITY_FLOOR {
            continue;
        }
        used += 1;
        min_ratio = min_ratio.min(w_density(&a, law) / d);
    }
    Ok(CheckReport {
        check: "rigidity".into(),
        pass: used > 0 && min_ratio > 0.0,
        min_slack: min_ratio,
        samples: used,
        detail: format!("min W/dist^p = {min_ratio:.6e}"),
    })
}

/// Largest relative deviation between the closed form and the angle grid,
/// over `n_per_sign` matrices of each determinant sign.
pub fn check_dist_oracle(p: f64, n_per_sign: usize, grid: usize, seed: u64) -> CheckReport {
    let table = AngleTable::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mats: Vec<Mat2> = (0..2 * n_per_sign)
        .map(|k| random_matrix(&mut rng, 3.0, if k < n_per_sign { 1.0 } else { -1.0 }))
        .collect();
    let worst = mats
        .par_iter()
        .map(|a| {
            let exact = dist_so2(a, p);
            let oracle = dist_so2_grid(a, p, &table);
            (exact - oracle).abs() / oracle.max(f64::MIN_POSITIVE)
        })
        .reduce(|| 0.0, f64::max);
    CheckReport {
        check: "dist_so2".into(),
        pass: worst <= 1e-6,
        min_slack: 1e-6 - worst,
        samples: mats.len(),
        detail: format!("max relative error {worst:.3e}"),
    }
}

pub fn check_svd(n_samples: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut ordered = true;
    for k in 0..n_samples {
        let a = random_matrix(&mut rng, 5.0, if k % 2 == 0 { 1.0 } else { -1.0 });
        let s = svd2(&a);
        ordered &= s.sigma1 <= s.sigma2;
        worst = worst.max((s.reconstruct() - a).norm());
    }
    CheckReport {
        check: "svd2".into(),
        pass: ordered && worst <= 1e-12,
        min_slack: 1e-12 - worst,
        samples: n_samples,
        detail: format!("max reconstruction error {worst:.3e}"),
    }
}

/// Largest relative energy change under `n_rotations` rigid rotations.
pub fn frame_indifference(
    graph: &LatticeGraph,
    config: &Configuration,
    law: &MaterialLaw,
    n_rotations: usize,
    seed: u64,
) -> Result<f64> {
    let base = assemble_energy(graph, config, law)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_rotations {
        let r = rotation(rng.gen_range(0.0..2.0 * PI));
        let e = assemble_energy(graph, &config.rotated(&r), law)?;
        worst = worst.max((e - base).abs() / base.abs().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Reference positions plus independent uniform perturbations of size
/// `amplitude * eps`, made admissible.
pub fn random_admissible(
    graph: &LatticeGraph,
    phi: f64,
    amplitude: f64,
    rng: &mut impl Rng,
) -> Result<Configuration> {
    let h = amplitude * graph.eps();
    let raw = Configuration {
        positions: graph
            .vertices
            .iter()
            .map(|v| v.x + Vec2::new(rng.gen_range(-h..h), rng.gen_range(-h..h)))
            .collect(),
    };
    let cmap = build_constraints(graph, phi)?;
    DofLayout::new(graph, &cmap).make_admissible(&raw)
}

/// Triangle-sum energy against the weighted bond sum plus volume term on
/// random admissible configurations.
pub fn check_energy_identity(
    sizes: &[usize],
    per_size: usize,
    law: &MaterialLaw,
    seed: u64,
) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for &n in sizes {
        let graph = build_lattice(&LatticeSpec::new(PHI_FIVE, n)?);
        for _ in 0..per_size {
            let u = random_admissible(&graph, PHI_FIVE, 0.3, &mut rng)?;
            let tri = assemble_energy(&graph, &u, law)?;
            let bonds = bond_sum_energy(&graph, &u, law);
            worst = worst.max((tri - bonds).abs() / bonds.abs().max(f64::MIN_POSITIVE));
            samples += 1;
        }
    }
    Ok(CheckReport {
        check: "energy_identity".into(),
        pass: worst <= 1e-12,
        min_slack: 1e-12 - worst,
        samples,
        detail: format!("max relative difference {worst:.3e}"),
    })
}

/// Energy floor a frustrated minimizer must exceed.
pub const FRUSTRATION_FLOOR: f64 = 1e-4;
/// Energy ceiling for the unfrustrated control.
pub const CONTROL_CEILING: f64 = 1e-14;

/// Power-law extrapolation of the finest two energies of a sweep using the
/// finest observed rate, `e - (e_2eps - e) / (2^p - 1)`.
pub fn extrapolated_limit(sweep: &SweepRecord) -> Option<f64> {
    let levels = &sweep.levels;
    let last = levels.last()?;
    let prev = levels.get(levels.len().checked_sub(2)?)?;
    let p = last.p_eps?;
    Some(last.energy - (prev.energy - last.energy) / (2f64.powf(p) - 1.0))
}

/// Every converged sweep minimizer of a frustrated wedge stays above the
/// floor, as does the extrapolated limit of the sweep; the unfrustrated
/// control (if given) is at zero.
pub fn frustration_check(sweeps: &[SweepRecord], control_energy: Option<f64>) -> CheckReport {
    let mut min_slack = f64::INFINITY;
    let mut problems = Vec::new();
    let mut samples = 0;
    for sweep in sweeps {
        for level in sweep.levels.iter().filter(|l| l.converged) {
            samples += 1;
            min_slack = min_slack.min(level.energy - FRUSTRATION_FLOOR);
            if level.energy <= FRUSTRATION_FLOOR {
                problems.push(format!(
                    "phi={:.6} k={} energy {:.3e}",
                    sweep.phi, level.eps_exp, level.energy
                ));
            }
        }
        if let Some(limit) = extrapolated_limit(sweep) {
            min_slack = min_slack.min(limit - FRUSTRATION_FLOOR);
            if limit <= FRUSTRATION_FLOOR {
                problems.push(format!(
                    "phi={:.6} extrapolated limit {limit:.3e}",
                    sweep.phi
                ));
            }
        }
    }
    if let Some(e) = control_energy {
        samples += 1;
        min_slack = min_slack.min(CONTROL_CEILING - e);
        if e > CONTROL_CEILING {
            problems.push(format!("control energy {e:.3e}"));
        }
    }
    CheckReport {
        check: "frustration".into(),
        pass: problems.is_empty() && samples > 0,
        min_slack,
        samples,
        detail: if problems.is_empty() {
            "all frustrated minima positive".into()
        } else {
            problems.join("; ")
        },
    }
}
