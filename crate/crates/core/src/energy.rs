//! Energy density `W(A)`, the lattice energy `E = sum_T |T| W(grad U|_T)`
//! and its derivatives with respect to the free unknowns.
//!
//! `W(A) = sum_{e in B1} Phi(|e A| - 1) + Psi(det A)` where `e A` is the
//! row vector `e^T A`, i.e. the bond image is `A^T e`. The piecewise-linear
//! interpolant has Jacobian `J` with `J (x_b - x_a) = u_b - u_a`, so the
//! lattice gradient entering `W` is `A = J^T` and `A^T e = J e` is the
//! deformed bond.

use nalgebra::{Matrix4, Matrix6, Vector6};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{
    Configuration, ConstraintMap, DofLayout, LatticeGraph, Mat2, Role, Vec2, SQRT3,
};
use crate::sparse::CsrMatrix;

/// Bond lengths (relative to the reference spacing) at or below this value
/// make the derivatives of `|.|` meaningless.
pub const BOND_FLOOR: f64 = 1e-9;

/// Volumetric penalty `Psi(det A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psi {
    Zero,
    /// `kappa (sqrt((a - 1)^2 + delta^2) - delta)`.
    SmoothedAbs {
        kappa: f64,
        delta: f64,
    },
}

impl Psi {
    pub const DEFAULT_KAPPA: f64 = 1.0;
    pub const DEFAULT_DELTA: f64 = 1e-2;

    pub fn smoothed_default() -> Self {
        Psi::SmoothedAbs {
            kappa: Self::DEFAULT_KAPPA,
            delta: Self::DEFAULT_DELTA,
        }
    }

    pub fn value(&self, a: f64) -> f64 {
        match *self {
            Psi::Zero => 0.0,
            Psi::SmoothedAbs { kappa, delta } => {
                kappa * (((a - 1.0).powi(2) + delta * delta).sqrt() - delta)
            }
        }
    }

    pub fn d1(&self, a: f64) -> f64 {
        match *self {
            Psi::Zero => 0.0,
            Psi::SmoothedAbs { kappa, delta } => {
                kappa * (a - 1.0) / ((a - 1.0).powi(2) + delta * delta).sqrt()
            }
        }
    }

    pub fn d2(&self, a: f64) -> f64 {
        match *self {
            Psi::Zero => 0.0,
            Psi::SmoothedAbs { kappa, delta } => {
                let s = (a - 1.0).powi(2) + delta * delta;
                kappa * delta * delta / (s * s.sqrt())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Psi::Zero)
    }

    /// Short textual name, `zero` or `smooth:<kappa>,<delta>`.
    pub fn name(&self) -> String {
        match self {
            Psi::Zero => "zero".into(),
            Psi::SmoothedAbs { kappa, delta } => format!("smooth:{kappa},{delta}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(Psi::Zero);
        }
        let bad = || {
            Error::Config(format!(
                "unknown psi '{s}' (expected 'zero', 'smooth' or 'smooth:<kappa>,<delta>')"
            ))
        };
        let rest = s.strip_prefix("smooth").ok_or_else(bad)?;
        if rest.is_empty() {
            return Ok(Psi::smoothed_default());
        }
        let rest = rest.strip_prefix(':').ok_or_else(bad)?;
        let (k, d) = rest.split_once(',').ok_or_else(bad)?;
        let kappa: f64 = k.trim().parse().map_err(|_| bad())?;
        let delta: f64 = d.trim().parse().map_err(|_| bad())?;
        if !(kappa > 0.0 && delta > 0.0) {
            return Err(Error::Config("psi parameters must be positive".into()));
        }
        Ok(Psi::SmoothedAbs { kappa, delta })
    }
}

/// Boundary edges count half (standard) or fully (uniform weights).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeWeights {
    #[default]
    Standard,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialLaw {
    pub p: f64,
    pub psi: Psi,
    pub weights: EdgeWeights,
}

impl MaterialLaw {
    pub fn new(p: f64, psi: Psi) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::Config(format!("bond exponent p = {p} must be >= 2")));
        }
        if let Psi::SmoothedAbs { kappa, delta } = psi {
            if !(kappa > 0.0 && delta > 0.0) {
                return Err(Error::Config("psi parameters must be positive".into()));
            }
        }
        Ok(MaterialLaw {
            p,
            psi,
            weights: EdgeWeights::Standard,
        })
    }

    /// `p = 2`, no volumetric term.
    pub fn harmonic() -> Self {
        MaterialLaw {
            p: 2.0,
            psi: Psi::Zero,
            weights: EdgeWeights::Standard,
        }
    }

    pub fn with_weights(mut self, weights: EdgeWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn phi(&self, r: f64) -> f64 {
        r.abs().powf(self.p) / self.p
    }

    pub fn phi_d1(&self, r: f64) -> f64 {
        r.abs().powf(self.p - 1.0) * r.signum()
    }

    pub fn phi_d2(&self, r: f64) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            (self.p - 1.0) * r.abs().powf(self.p - 2.0)
        }
    }
}

/// The six unit bond directions `R_{k pi/3} e1`.
pub fn bond_directions() -> [Vec2; 6] {
    std::array::from_fn(|k| {
        let (s, c) = (k as f64 * std::f64::consts::FRAC_PI_3).sin_cos();
        Vec2::new(c, s)
    })
}

fn cofactor(a: &Mat2) -> Mat2 {
    Mat2::new(a[(1, 1)], -a[(1, 0)], -a[(0, 1)], a[(0, 0)])
}

pub fn w_density(a: &Mat2, law: &MaterialLaw) -> f64 {
    let at = a.transpose();
    bond_directions()
        .iter()
        .map(|e| law.phi((at * e).norm() - 1.0))
        .sum::<f64>()
        + law.psi.value(a.determinant())
}

/// `dW/dA`, entry `(i, j)` is the derivative with respect to `A_ij`.
pub fn w_grad(a: &Mat2, law: &MaterialLaw) -> Result<Mat2> {
    let at = a.transpose();
    let mut g = law.psi.d1(a.determinant()) * cofactor(a);
    for e in bond_directions() {
        let b = at * e;
        let len = b.norm();
        if len <= BOND_FLOOR {
            return Err(Error::DegenerateCell {
                triangle: None,
                length: len,
            });
        }
        g += law.phi_d1(len - 1.0) * e * (b / len).transpose();
    }
    Ok(g)
}

/// Second derivative of `W` as a 4x4 operator on row-major `vec(A)`
/// (`A_ij` has index `2 i + j`).
pub fn w_hess(a: &Mat2, law: &MaterialLaw) -> Result<Matrix4<f64>> {
    let at = a.transpose();
    let mut h = Matrix4::zeros();
    for e in bond_directions() {
        let b = at * e;
        let len = b.norm();
        if len <= BOND_FLOOR {
            return Err(Error::DegenerateCell {
                triangle: None,
                length: len,
            });
        }
        let bh = b / len;
        let r = len - 1.0;
        let outer = bh * bh.transpose();
        let hb = law.phi_d2(r) * outer + (law.phi_d1(r) / len) * (Mat2::identity() - outer);
        for i in 0..2 {
            for k in 0..2 {
                let s = e[i] * e[k];
                for j in 0..2 {
                    for l in 0..2 {
                        h[(2 * i + j, 2 * k + l)] += s * hb[(j, l)];
                    }
                }
            }
        }
    }
    if !law.psi.is_zero() {
        let det = a.determinant();
        let cof = cofactor(a);
        let c = nalgebra::Vector4::new(cof[(0, 0)], cof[(0, 1)], cof[(1, 0)], cof[(1, 1)]);
        h += law.psi.d2(det) * c * c.transpose();
        let d1 = law.psi.d1(det);
        h[(0, 3)] += d1;
        h[(3, 0)] += d1;
        h[(1, 2)] -= d1;
        h[(2, 1)] -= d1;
    }
    Ok(h)
}

/// Jacobian `J = [u_b - u_a | u_c - u_a] [x_b - x_a | x_c - x_a]^-1` of the
/// affine interpolant on one triangle.
pub fn cell_gradient(x: &[Vec2; 3], u: &[Vec2; 3]) -> Mat2 {
    let d = Mat2::from_columns(&[u[1] - u[0], u[2] - u[0]]);
    let m = Mat2::from_columns(&[x[1] - x[0], x[2] - x[0]]);
    d * m.try_inverse().expect("degenerate reference triangle")
}

/// Lattice gradient `A = J^T` entering `W`.
pub fn lattice_gradient(x: &[Vec2; 3], u: &[Vec2; 3]) -> Mat2 {
    cell_gradient(x, u).transpose()
}

/// Reference geometry of one triangle: `J = sum_v u_v grad_v^T`.
#[derive(Debug, Clone, Copy)]
struct Element {
    verts: [usize; 3],
    grads: [Vec2; 3],
}

fn element(graph: &LatticeGraph, t: usize) -> Element {
    let verts = graph.triangles[t];
    let x = verts.map(|v| graph.vertices[v].x);
    let m = Mat2::from_columns(&[x[1] - x[0], x[2] - x[0]]);
    let minv = m.try_inverse().expect("degenerate reference triangle");
    let gb = minv.row(0).transpose();
    let gc = minv.row(1).transpose();
    Element {
        verts,
        grads: [-(gb + gc), gb, gc],
    }
}

impl Element {
    fn lattice_gradient(&self, pos: &[Vec2]) -> Mat2 {
        // A_{sr} = sum_v grad_v[s] u_v[r]
        let mut a = Mat2::zeros();
        for (v, g) in self.verts.iter().zip(&self.grads) {
            a += g * pos[*v].transpose();
        }
        a
    }
}

struct LocalDerivs {
    grad: [Vec2; 3],
    hess: Option<Matrix6<f64>>,
}

fn local_derivs(
    el: &Element,
    pos: &[Vec2],
    law: &MaterialLaw,
    area: f64,
    t: usize,
    with_hess: bool,
) -> Result<LocalDerivs> {
    let a = el.lattice_gradient(pos);
    let tag = |e: Error| match e {
        Error::DegenerateCell { length, .. } => Error::DegenerateCell {
            triangle: Some(t),
            length,
        },
        other => other,
    };
    let g = w_grad(&a, law).map_err(tag)?;
    // dE/du_{v,r} = area sum_s G_{sr} grad_v[s]
    let grad = el.grads.map(|gv| area * g.transpose() * gv);
    let hess = if with_hess {
        let h = w_hess(&a, law).map_err(tag)?;
        let mut out = Matrix6::zeros();
        for v in 0..3 {
            for w in 0..3 {
                for r in 0..2 {
                    for q in 0..2 {
                        let mut acc = 0.0;
                        for s in 0..2 {
                            for tt in 0..2 {
                                acc +=
                                    h[(2 * s + r, 2 * tt + q)] * el.grads[v][s] * el.grads[w][tt];
                            }
                        }
                        out[(2 * v + r, 2 * w + q)] = area * acc;
                    }
                }
            }
        }
        Some(out)
    } else {
        None
    };
    Ok(LocalDerivs { grad, hess })
}

/// Extra bond term making boundary edges count fully.
fn boundary_bond_coeff(graph: &LatticeGraph) -> f64 {
    let eps = graph.eps();
    SQRT3 * eps * eps / 2.0
}

fn boundary_edges(graph: &LatticeGraph) -> impl Iterator<Item = &crate::lattice::Edge> {
    graph.edges.iter().filter(|e| e.weight < 1.0)
}

const PAR_MIN_LEN: usize = 512;

pub fn assemble_energy(
    graph: &LatticeGraph,
    config: &Configuration,
    law: &MaterialLaw,
) -> Result<f64> {
    let pos = &config.positions;
    if pos.len() != graph.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: graph.num_vertices(),
            got: pos.len(),
        });
    }
    let area = graph.triangle_area();
    // per-triangle values collected in order, summed sequentially
    let dens: Vec<f64> = (0..graph.triangles.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|t| w_density(&element(graph, t).lattice_gradient(pos), law))
        .collect();
    let mut energy = area * dens.iter().sum::<f64>();
    if law.weights == EdgeWeights::Uniform {
        let c = boundary_bond_coeff(graph);
        let eps = graph.eps();
        for e in boundary_edges(graph) {
            energy += c * law.phi((pos[e.a] - pos[e.b]).norm() / eps - 1.0);
        }
    }
    if !energy.is_finite() {
        return Err(Error::NonFiniteEnergy(energy));
    }
    Ok(energy)
}

/// Full-coordinate gradient: one vector per vertex.
pub fn assemble_full_gradient(
    graph: &LatticeGraph,
    config: &Configuration,
    law: &MaterialLaw,
) -> Result<Vec<Vec2>> {
    let pos = &config.positions;
    let area = graph.triangle_area();
    let locals: Vec<LocalDerivs> = (0..graph.triangles.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|t| local_derivs(&element(graph, t), pos, law, area, t, false))
        .collect::<Result<_>>()?;
    let mut g = vec![Vec2::zeros(); pos.len()];
    for (t, loc) in locals.iter().enumerate() {
        for (v, gv) in graph.triangles[t].iter().zip(&loc.grad) {
            g[*v] += gv;
        }
    }
    if law.weights == EdgeWeights::Uniform {
        for e in boundary_edges(graph) {
            let (ga, _) = bond_derivs(graph, law, pos[e.a] - pos[e.b])?;
            g[e.a] += ga;
            g[e.b] -= ga;
        }
    }
    Ok(g)
}

/// Gradient with respect to `u_a` of the extra boundary bond energy for
/// `d = u_a - u_b`, and the `(a, a)` Hessian block.
fn bond_derivs(graph: &LatticeGraph, law: &MaterialLaw, d: Vec2) -> Result<(Vec2, Mat2)> {
    let eps = graph.eps();
    let c = boundary_bond_coeff(graph);
    let len = d.norm();
    if len / eps <= BOND_FLOOR {
        return Err(Error::DegenerateCell {
            triangle: None,
            length: len / eps,
        });
    }
    let dh = d / len;
    let r = len / eps - 1.0;
    let outer = dh * dh.transpose();
    let g = c * law.phi_d1(r) / eps * dh;
    let h = c
        * (law.phi_d2(r) / (eps * eps) * outer
            + law.phi_d1(r) / (eps * len) * (Mat2::identity() - outer));
    Ok((g, h))
}

/// Chain-rule transform from a vertex value to its owner's unknowns.
fn transform(layout: &DofLayout, v: usize) -> Option<(usize, Mat2)> {
    match layout.roles[v] {
        Role::Free(k) => Some((k, Mat2::identity())),
        Role::Slave { .. } => layout.owner(v).map(|k| (k, layout.rotation)),
        Role::Pinned => None,
    }
}

pub fn reduce_gradient(full: &[Vec2], layout: &DofLayout) -> Vec<f64> {
    let mut g = vec![0.0; layout.reduced_dim()];
    for (v, gv) in full.iter().enumerate() {
        if let Some((k, t)) = transform(layout, v) {
            let r = t.transpose() * gv;
            g[2 * k] += r.x;
            g[2 * k + 1] += r.y;
        }
    }
    g
}

pub fn assemble_gradient(
    graph: &LatticeGraph,
    config: &Configuration,
    law: &MaterialLaw,
    _cmap: &ConstraintMap,
    layout: &DofLayout,
) -> Result<Vec<f64>> {
    Ok(reduce_gradient(
        &assemble_full_gradient(graph, config, law)?,
        layout,
    ))
}

pub fn assemble_hessian(
    graph: &LatticeGraph,
    config: &Configuration,
    law: &MaterialLaw,
    _cmap: &ConstraintMap,
    layout: &DofLayout,
) -> Result<CsrMatrix> {
    let asm = Assembler::new(graph, layout);
    let mut h = asm.pattern.clone();
    asm.hessian_into(graph, config, law, &mut h)?;
    Ok(h)
}

/// Caches the reduced Hessian sparsity and per-triangle scatter slots.
/// CSR indices of the two rows belonging to one vertex pair, when both are free.
type SlotPair = Option<(usize, usize)>;

#[derive(Debug, Clone)]
pub struct Assembler {
    /// Zero-valued matrix with the reduced Hessian pattern.
    pub pattern: CsrMatrix,
    /// For each triangle and local pair `(v, w)`: CSR index of entry
    /// `(2 owner(v), 2 owner(w))` and of `(2 owner(v) + 1, 2 owner(w))`.
    slots: Vec<[[SlotPair; 3]; 3]>,
    edge_slots: Vec<(usize, [[SlotPair; 2]; 2])>,
    transforms: Vec<Option<(usize, Mat2)>>,
    /// Free-vertex adjacency of the reduced pattern.
    pub block_adjacency: Vec<Vec<usize>>,
}

impl Assembler {
    pub fn new(graph: &LatticeGraph, layout: &DofLayout) -> Self {
        let nf = layout.free_ids.len();
        let transforms: Vec<_> = (0..graph.num_vertices())
            .map(|v| transform(layout, v))
            .collect();
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); nf];
        for tri in &graph.triangles {
            for &v in tri {
                for &w in tri {
                    if let (Some((kv, _)), Some((kw, _))) = (transforms[v], transforms[w]) {
                        blocks[kv].push(kw);
                    }
                }
            }
        }
        for b in &mut blocks {
            b.sort_unstable();
            b.dedup();
        }
        let mut row_ptr = vec![0usize; 2 * nf + 1];
        for k in 0..nf {
            let len = 2 * blocks[k].len();
            row_ptr[2 * k + 1] = row_ptr[2 * k] + len;
            row_ptr[2 * k + 2] = row_ptr[2 * k + 1] + len;
        }
        let mut col_idx = Vec::with_capacity(row_ptr[2 * nf]);
        for b in &blocks {
            for _ in 0..2 {
                for &c in b {
                    col_idx.push(2 * c);
                    col_idx.push(2 * c + 1);
                }
            }
        }
        let nnz = col_idx.len();
        let pattern = CsrMatrix {
            n: 2 * nf,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        };
        let slot = |kv: usize, kw: usize| -> (usize, usize) {
            let p = blocks[kv].binary_search(&kw).unwrap();
            (
                pattern.row_ptr[2 * kv] + 2 * p,
                pattern.row_ptr[2 * kv + 1] + 2 * p,
            )
        };
        let slots = graph
            .triangles
            .iter()
            .map(|tri| {
                std::array::from_fn(|a| {
                    std::array::from_fn(|b| match (transforms[tri[a]], transforms[tri[b]]) {
                        (Some((kv, _)), Some((kw, _))) => Some(slot(kv, kw)),
                        _ => None,
                    })
                })
            })
            .collect();
        let edge_slots = graph
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.weight < 1.0)
            .map(|(i, e)| {
                let ends = [e.a, e.b];
                (
                    i,
                    std::array::from_fn(|a| {
                        std::array::from_fn(|b| match (transforms[ends[a]], transforms[ends[b]]) {
                            (Some((kv, _)), Some((kw, _))) => Some(slot(kv, kw)),
                            _ => None,
                        })
                    }),
                )
            })
            .collect();
        let block_adjacency = blocks
            .iter()
            .enumerate()
            .map(|(k, b)| b.iter().copied().filter(|&c| c != k).collect())
            .collect();
        Assembler {
            pattern,
            slots,
            edge_slots,
            transforms,
            block_adjacency,
        }
    }

    fn scatter(values: &mut [f64], slot: (usize, usize), block: &Mat2) {
        values[slot.0] += block[(0, 0)];
        values[slot.0 + 1] += block[(0, 1)];
        values[slot.1] += block[(1, 0)];
        values[slot.1 + 1] += block[(1, 1)];
    }

    /// Overwrites `h` (which must carry this assembler's pattern) with the
    /// reduced Hessian at `config`.
    pub fn hessian_into(
        &self,
        graph: &LatticeGraph,
        config: &Configuration,
        law: &MaterialLaw,
        h: &mut CsrMatrix,
    ) -> Result<()> {
        let pos = &config.positions;
        let area = graph.triangle_area();
        let locals: Vec<LocalDerivs> = (0..graph.triangles.len())
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|t| local_derivs(&element(graph, t), pos, law, area, t, true))
            .collect::<Result<_>>()?;
        h.values.iter_mut().for_each(|v| *v = 0.0);
        for (t, loc) in locals.iter().enumerate() {
            let tri = graph.triangles[t];
            let lh = loc.hess.as_ref().unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    if let Some(slot) = self.slots[t][a][b] {
                        let (_, ta) = self.transforms[tri[a]].unwrap();
                        let (_, tb) = self.transforms[tri[b]].unwrap();
                        let blk: Mat2 = lh.fixed_view::<2, 2>(2 * a, 2 * b).into_owned();
                        Self::scatter(&mut h.values, slot, &(ta.transpose() * blk * tb));
                    }
                }
            }
        }
        if law.weights == EdgeWeights::Uniform {
            for (i, slots) in &self.edge_slots {
                let e = graph.edges[*i];
                let ends = [e.a, e.b];
                let (_, haa) = bond_derivs(graph, law, pos[e.a] - pos[e.b])?;
                for a in 0..2 {
                    for b in 0..2 {
                        if let Some(slot) = slots[a][b] {
                            let (_, ta) = self.transforms[ends[a]].unwrap();
                            let (_, tb) = self.transforms[ends[b]].unwrap();
                            let sign = if a == b { 1.0 } else { -1.0 };
                            Self::scatter(&mut h.values, slot, &(sign * ta.transpose() * haa * tb));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Energy written as a sum over bonds and triangles, used as an
/// independent cross-check of the triangle-sum assembly:
/// `(sqrt(3)/2) eps^2 sum_{(i,j)} w_ij Phi(|u_i - u_j|/eps - 1) + (sqrt(3)/2)(eps^2/2) sum_T Psi(det)`,
/// where `(i, j)` runs over ordered neighbour pairs.
pub fn bond_sum_energy(graph: &LatticeGraph, config: &Configuration, law: &MaterialLaw) -> f64 {
    let eps = graph.eps();
    let pos = &config.positions;
    let bonds: f64 = graph
        .edges
        .iter()
        .map(|e| {
            let w = match law.weights {
                EdgeWeights::Standard => e.weight,
                EdgeWeights::Uniform => 1.0,
            };
            // both orientations of the edge
            2.0 * eps * eps * w * law.phi((pos[e.a] - pos[e.b]).norm() / eps - 1.0)
        })
        .sum();
    let vol: f64 = graph
        .triangles
        .iter()
        .map(|tri| {
            let x = tri.map(|v| graph.vertices[v].x);
            let u = tri.map(|v| pos[v]);
            law.psi.value(cell_gradient(&x, &u).determinant())
        })
        .sum();
    SQRT3 / 2.0 * (bonds + eps * eps / 2.0 * vol)
}

/// Per-triangle `det J`.
pub fn triangle_determinants(graph: &LatticeGraph, config: &Configuration) -> Vec<f64> {
    (0..graph.triangles.len())
        .map(|t| {
            element(graph, t)
                .lattice_gradient(&config.positions)
                .determinant()
        })
        .collect()
}

/// Flattens a 6x6 local Hessian block into a vector helper for tests.
#[doc(hidden)]
pub fn local_hessian(
    graph: &LatticeGraph,
    config: &Configuration,
    law: &MaterialLaw,
    t: usize,
) -> Result<(Vector6<f64>, Matrix6<f64>)> {
    let loc = local_derivs(
        &element(graph, t),
        &config.positions,
        law,
        graph.triangle_area(),
        t,
        true,
    )?;
    let g = Vector6::from_fn(|i, _| loc.grad[i / 2][i % 2]);
    Ok((g, loc.hess.unwrap()))
}
