//! Newton's method on the reduced unknowns with Tikhonov regularization
//! `(H + tau I) s = -g` and Armijo backtracking.

use serde::Serialize;

use crate::energy::{
    assemble_energy, assemble_full_gradient, reduce_gradient, Assembler, MaterialLaw,
};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, ConstraintMap, DofLayout, LatticeGraph};
use crate::sparse::{expand_block_ordering, nested_dissection, SymbolicCholesky};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Threshold on the reduced-gradient infinity norm.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Regularization of the first factorization attempt.
    pub tau0: f64,
    pub tau_growth: f64,
    /// First nonzero regularization, relative to the largest Hessian diagonal entry.
    pub tau_start: f64,
    /// Regularization beyond which the system is declared singular.
    pub tau_max: f64,
    /// Disable to take undamped, unregularized Newton steps.
    pub regularize: bool,
    pub line_search: bool,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub max_halvings: usize,
    /// Relative pivot threshold of the Cholesky factorization.
    pub pivot_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            grad_tol: 1e-10,
            max_iter: 200,
            tau0: 0.0,
            tau_growth: 10.0,
            tau_start: 1e-10,
            tau_max: 1e8,
            regularize: true,
            line_search: true,
            armijo_c: 1e-4,
            backtrack: 0.5,
            max_halvings: 40,
            pivot_tol: 1e-14,
        }
    }
}

impl NewtonOptions {
    /// Full Newton steps without regularization or line search.
    pub fn plain() -> Self {
        NewtonOptions {
            regularize: false,
            line_search: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Config("grad_tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.tau_growth > 1.0) || self.tau0 < 0.0 {
            return Err(Error::Config("tau0 must be >= 0 and tau_growth > 1".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Config("backtrack factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub grad_inf: f64,
    /// Euclidean norm of the accepted step leaving this iterate (0 at the last one).
    pub step_norm: f64,
    pub tau: f64,
    /// Step length accepted by the line search.
    pub alpha: f64,
    /// `false` when the step was accepted on the gradient-norm fallback
    /// because the predicted decrease was below the resolution of the energy.
    pub armijo: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

impl SolveReport {
    pub fn final_energy(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.energy)
    }

    pub fn final_grad_inf(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.grad_inf)
    }

    /// `g_{k+1} / g_k^2` for consecutive iterates, skipping transitions that
    /// land below [`GRADIENT_ROUNDOFF`] where the gradient is pure rounding
    /// error and the ratio measures nothing.
    pub fn quadratic_ratios(&self) -> Vec<f64> {
        self.history
            .windows(2)
            .filter(|w| w[1].grad_inf >= GRADIENT_ROUNDOFF)
            .map(|w| w[1].grad_inf / (w[0].grad_inf * w[0].grad_inf))
            .collect()
    }

    /// The last `count` entries of [`quadratic_ratios`](Self::quadratic_ratios).
    pub fn final_quadratic_ratios(&self, count: usize) -> Vec<f64> {
        let r = self.quadratic_ratios();
        r[r.len().saturating_sub(count)..].to_vec()
    }
}

/// Gradient sup-norm at which assembled gradients are dominated by rounding.
pub const GRADIENT_ROUNDOFF: f64 = 1e-13;

/// Relative size below which an energy change is roundoff.
const ENERGY_RESOLUTION: f64 = 1e-12;

/// Reusable minimizer for one lattice, law and constraint.
pub struct NewtonSolver<'a> {
    graph: &'a LatticeGraph,
    law: MaterialLaw,
    layout: &'a DofLayout,
    assembler: Assembler,
    symbolic: SymbolicCholesky,
}

impl<'a> NewtonSolver<'a> {
    pub fn new(graph: &'a LatticeGraph, law: MaterialLaw, layout: &'a DofLayout) -> Self {
        let assembler = Assembler::new(graph, layout);
        let perm = expand_block_ordering(&nested_dissection(&assembler.block_adjacency), 2);
        let symbolic = SymbolicCholesky::new(&assembler.pattern, perm);
        NewtonSolver {
            graph,
            law,
            layout,
            assembler,
            symbolic,
        }
    }

    fn energy(&self, x: &[f64]) -> Result<f64> {
        assemble_energy(self.graph, &self.layout.expand(x)?, &self.law)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let cfg = self.layout.expand(x)?;
        Ok(reduce_gradient(
            &assemble_full_gradient(self.graph, &cfg, &self.law)?,
            self.layout,
        ))
    }

    pub fn minimize(
        &self,
        init: &Configuration,
        opts: &NewtonOptions,
    ) -> Result<(Configuration, SolveReport)> {
        opts.validate()?;
        let mut x = self.layout.reduce(init)?;
        let mut energy = self.energy(&x)?;
        let mut grad = self.gradient(&x)?;
        let mut hess = self.assembler.pattern.clone();
        let mut history = Vec::new();
        let mut converged = false;

        for iter in 0..=opts.max_iter {
            let grad_inf = inf_norm(&grad);
            let mut record = IterationRecord {
                iter,
                energy,
                grad_inf,
                step_norm: 0.0,
                tau: 0.0,
                alpha: 0.0,
                armijo: true,
            };
            if grad_inf <= opts.grad_tol {
                converged = true;
                history.push(record);
                break;
            }
            if iter == opts.max_iter {
                history.push(record);
                break;
            }

            self.assembler.hessian_into(
                self.graph,
                &self.layout.expand(&x)?,
                &self.law,
                &mut hess,
            )?;
            let diag_scale = hess
                .diagonal()
                .iter()
                .fold(0.0f64, |m, d| m.max(d.abs()))
                .max(f64::MIN_POSITIVE);

            let mut tau = opts.tau0;
            let accepted = loop {
                match self.try_step(&hess, &grad, &x, energy, tau, opts)? {
                    Some(step) => break step,
                    None => {
                        if !opts.regularize {
                            return Err(Error::SingularSystem { tau });
                        }
                        tau = if tau == 0.0 {
                            opts.tau_start * diag_scale
                        } else {
                            tau * opts.tau_growth
                        };
                        if tau > opts.tau_max {
                            return Err(Error::SingularSystem { tau });
                        }
                    }
                }
            };

            record.tau = tau;
            record.alpha = accepted.alpha;
            record.step_norm = accepted.step_norm;
            record.armijo = accepted.armijo;
            history.push(record);
            x = accepted.x;
            energy = accepted.energy;
            grad = accepted.grad;
        }

        let iterations = history.len().saturating_sub(1);
        Ok((
            self.layout.expand(&x)?,
            SolveReport {
                iterations,
                history,
                converged,
            },
        ))
    }

    /// One regularized Newton direction plus line search. `None` asks for
    /// more regularization.
    fn try_step(
        &self,
        hess: &crate::sparse::CsrMatrix,
        grad: &[f64],
        x: &[f64],
        energy: f64,
        tau: f64,
        opts: &NewtonOptions,
    ) -> Result<Option<Step>> {
        let pivot_tol = if opts.regularize { opts.pivot_tol } else { 0.0 };
        let factor = match self.symbolic.factor(hess, tau, pivot_tol) {
            Ok(f) => f,
            Err(Error::NotPositiveDefinite { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut s = factor.solve(&rhs);
        let gnorm = two_norm(grad);
        let residual = |s: &[f64]| -> Vec<f64> {
            let hs = hess.mul_vec(s);
            rhs.iter()
                .zip(hs.iter().zip(s))
                .map(|(b, (h, si))| b - h - tau * si)
                .collect()
        };
        let mut r = residual(&s);
        if two_norm(&r) > 1e-10 * gnorm {
            let ds = factor.solve(&r);
            s.iter_mut().zip(&ds).for_each(|(a, b)| *a += b);
            r = residual(&s);
            if two_norm(&r) > 1e-10 * gnorm && opts.regularize {
                return Ok(None);
            }
        }
        let slope: f64 = grad.iter().zip(&s).map(|(g, d)| g * d).sum();
        if !(slope < 0.0) {
            return if opts.regularize {
                Ok(None)
            } else {
                Err(Error::SingularSystem { tau })
            };
        }

        let trial =
            |alpha: f64| -> Vec<f64> { x.iter().zip(&s).map(|(xi, si)| xi + alpha * si).collect() };
        if !opts.line_search {
            let xn = trial(1.0);
            return Ok(Some(Step {
                energy: self.energy(&xn)?,
                grad: self.gradient(&xn)?,
                x: xn,
                alpha: 1.0,
                step_norm: two_norm(&s),
                armijo: true,
            }));
        }

        // predicted decrease below what the energy can resolve: judge the
        // full step by the gradient norm instead
        if -slope <= ENERGY_RESOLUTION * energy.abs() {
            let xn = trial(1.0);
            if let (Ok(en), Ok(gn)) = (self.energy(&xn), self.gradient(&xn)) {
                if inf_norm(&gn) < inf_norm(grad) && en <= energy + ENERGY_RESOLUTION * energy.abs()
                {
                    return Ok(Some(Step {
                        x: xn,
                        energy: en,
                        grad: gn,
                        alpha: 1.0,
                        step_norm: two_norm(&s),
                        armijo: false,
                    }));
                }
            }
        }

        let mut alpha = 1.0;
        for _ in 0..=opts.max_halvings {
            let xn = trial(alpha);
            if let Ok(en) = self.energy(&xn) {
                if en <= energy + opts.armijo_c * alpha * slope {
                    if let Ok(gn) = self.gradient(&xn) {
                        return Ok(Some(Step {
                            x: xn,
                            energy: en,
                            grad: gn,
                            alpha,
                            step_norm: alpha * two_norm(&s),
                            armijo: true,
                        }));
                    }
                }
            }
            alpha *= opts.backtrack;
        }
        Ok(None)
    }
}

struct Step {
    x: Vec<f64>,
    energy: f64,
    grad: Vec<f64>,
    alpha: f64,
    step_norm: f64,
    armijo: bool,
}

pub fn newton_minimize(
    graph: &LatticeGraph,
    law: &MaterialLaw,
    _cmap: &ConstraintMap,
    layout: &DofLayout,
    init: &Configuration,
    opts: &NewtonOptions,
) -> Result<(Configuration, SolveReport)> {
    NewtonSolver::new(graph, *law, layout).minimize(init, opts)
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve log as CSV: `iter,energy,grad_inf,step_norm,tau`.
pub fn solve_log_csv(report: &SolveReport) -> String {
    let mut out = String::from("iter,energy,grad_inf,step_norm,tau\n");
    for r in &report.history {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.iter, r.energy, r.grad_inf, r.step_norm, r.tau
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{triangle_determinants, Psi};
    use crate::experiments::{linear_init, LinearMode};
    use crate::lattice::{build_constraints, build_lattice, LatticeSpec, PHI_FIVE, PHI_SEVEN};

    struct Setup {
        graph: LatticeGraph,
        cmap: ConstraintMap,
        layout: DofLayout,
    }

    fn setup(phi: f64, n: usize) -> Setup {
        let graph = build_lattice(&LatticeSpec::new(phi, n).unwrap());
        let cmap = build_constraints(&graph, phi).unwrap();
        let layout = DofLayout::new(&graph, &cmap);
        Setup {
            graph,
            cmap,
            layout,
        }
    }

    #[test]
    fn coarsest_level_converges_with_positive_dets() {
        let s = setup(PHI_FIVE, 2);
        let law = MaterialLaw::harmonic();
        let init = linear_init(&s.graph, PHI_FIVE, LinearMode::Det1).unwrap();
        let (u, rep) = newton_minimize(
            &s.graph,
            &law,
            &s.cmap,
            &s.layout,
            &init,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(rep.converged);
        assert!(rep.final_grad_inf() <= 1e-10);
        assert!(triangle_determinants(&s.graph, &u).iter().all(|&d| d > 0.0));
    }

    #[test]
    fn restart_from_minimizer_is_a_fixed_point() {
        let s = setup(PHI_SEVEN, 8);
        let law = MaterialLaw::harmonic();
        let init = linear_init(&s.graph, PHI_SEVEN, LinearMode::Det1).unwrap();
        let solver = NewtonSolver::new(&s.graph, law, &s.layout);
        let (u, _) = solver.minimize(&init, &NewtonOptions::default()).unwrap();
        let (_, rep) = solver.minimize(&u, &NewtonOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 1);
    }

    #[test]
    fn energy_never_increases_under_line_search() {
        let s = setup(PHI_FIVE, 8);
        let law = MaterialLaw::new(2.0, Psi::smoothed_default()).unwrap();
        let init = linear_init(&s.graph, PHI_FIVE, LinearMode::EdgePreserving).unwrap();
        let (_, rep) = newton_minimize(
            &s.graph,
            &law,
            &s.cmap,
            &s.layout,
            &init,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(rep.converged);
        for w in rep.history.windows(2) {
            if w[0].armijo {
                assert!(w[1].energy <= w[0].energy);
            } else {
                assert!(w[1].energy <= w[0].energy * (1.0 + ENERGY_RESOLUTION));
            }
        }
    }

    #[test]
    fn iterates_are_deterministic() {
        let s = setup(PHI_FIVE, 8);
        let law = MaterialLaw::harmonic();
        let init = linear_init(&s.graph, PHI_FIVE, LinearMode::Det1).unwrap();
        let a = newton_minimize(
            &s.graph,
            &law,
            &s.cmap,
            &s.layout,
            &init,
            &NewtonOptions::default(),
        )
        .unwrap();
        let b = newton_minimize(
            &s.graph,
            &law,
            &s.cmap,
            &s.layout,
            &init,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let s = setup(PHI_FIVE, 4);
        let law = MaterialLaw::harmonic();
        let init = linear_init(&s.graph, PHI_FIVE, LinearMode::Det1).unwrap();
        let opts = NewtonOptions {
            max_iter: 1,
            ..Default::default()
        };
        let (_, rep) = newton_minimize(&s.graph, &law, &s.cmap, &s.layout, &init, &opts).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn invalid_options_rejected() {
        let bad = NewtonOptions {
            grad_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = NewtonOptions {
            max_iter: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn solve_log_has_one_row_per_iterate() {
        let s = setup(PHI_FIVE, 2);
        let init = linear_init(&s.graph, PHI_FIVE, LinearMode::Det1).unwrap();
        let (_, rep) = newton_minimize(
            &s.graph,
            &MaterialLaw::harmonic(),
            &s.cmap,
            &s.layout,
            &init,
            &NewtonOptions::default(),
        )
        .unwrap();
        let csv = solve_log_csv(&rep);
        assert_eq!(csv.lines().count(), rep.history.len() + 1);
        assert!(csv.starts_with("iter,energy,grad_inf,step_norm,tau\n"));
    }
}
