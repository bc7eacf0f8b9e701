//! Finite-difference oracles on the reduced coordinates.

#![allow(dead_code)]

use disclination::energy::{assemble_energy, assemble_gradient, assemble_hessian, MaterialLaw};
use disclination::lattice::{ConstraintMap, DofLayout, LatticeGraph};

pub struct Reduced<'a> {
    pub graph: &'a LatticeGraph,
    pub cmap: &'a ConstraintMap,
    pub layout: &'a DofLayout,
    pub law: MaterialLaw,
}

impl Reduced<'_> {
    pub fn energy(&self, x: &[f64]) -> f64 {
        assemble_energy(self.graph, &self.layout.expand(x).unwrap(), &self.law).unwrap()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let u = self.layout.expand(x).unwrap();
        assemble_gradient(self.graph, &u, &self.law, self.cmap, self.layout).unwrap()
    }

    pub fn hessian_dense(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let u = self.layout.expand(x).unwrap();
        assemble_hessian(self.graph, &u, &self.law, self.cmap, self.layout)
            .unwrap()
            .to_dense()
    }

    /// Central differences of the energy.
    pub fn fd_gradient(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|k| {
                y[k] = x[k] + h;
                let ep = self.energy(&y);
                y[k] = x[k] - h;
                let em = self.energy(&y);
                y[k] = x[k];
                (ep - em) / (2.0 * h)
            })
            .collect()
    }

    /// Central differences of the analytic gradient, one column per coordinate.
    pub fn fd_hessian(&self, x: &[f64], h: f64) -> Vec<Vec<f64>> {
        let n = x.len();
        let mut y = x.to_vec();
        let mut cols = Vec::with_capacity(n);
        for k in 0..n {
            y[k] = x[k] + h;
            let gp = self.gradient(&y);
            y[k] = x[k] - h;
            let gm = self.gradient(&y);
            y[k] = x[k];
            cols.push(
                gp.iter()
                    .zip(&gm)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect::<Vec<_>>(),
            );
        }
        // cols[k][i] = dg_i / dx_k; return row-major H[i][k]
        (0..n)
            .map(|i| (0..n).map(|k| cols[k][i]).collect())
            .collect()
    }
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}

pub fn rel_err_matrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let fa: Vec<f64> = a.iter().flatten().copied().collect();
    let fb: Vec<f64> = b.iter().flatten().copied().collect();
    rel_err(&fa, &fb)
}
