//! Reference triangular lattice on the unit equilateral triangle, the
//! rotational boundary constraint and the map between full vertex
//! coordinates and free unknowns.
//!
//! Vertices are indexed by `(i, j)` in the basis `(e1, R_{pi/3} e1)`, so the
//! three sides become coordinate conditions:
//!
//! * bottom side `j = 0`,
//! * left side `i = 0`,
//! * outer side `i + j = N`.
//!
//! Admissible deformations satisfy `u(R_{pi/3} x) = R_phi u(x)` for every
//! bottom-side vertex `x`. Bottom vertices `(i, 0)`, `i >= 1`, are masters,
//! the matching left vertices `(0, i)` are slaves whose values are computed
//! from their masters, and the origin is pinned at zero.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Counter-clockwise rotation by `theta`.
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Angle of a five-fold (positive) wedge disclination.
pub const PHI_FIVE: f64 = 2.0 * std::f64::consts::PI / 5.0;
/// Angle of a seven-fold (negative) wedge disclination.
pub const PHI_SEVEN: f64 = 2.0 * std::f64::consts::PI / 7.0;
/// Angle of the undefected lattice.
pub const PHI_REGULAR: f64 = std::f64::consts::FRAC_PI_3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub phi: f64,
    pub n: usize,
}

impl LatticeSpec {
    pub fn new(phi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("N must be at least 1".into()));
        }
        if !phi.is_finite() || phi <= 0.0 || phi >= 2.0 * std::f64::consts::PI {
            return Err(Error::InvalidAngle {
                phi,
                reason: "angle must lie in (0, 2 pi)",
            });
        }
        Ok(LatticeSpec { phi, n })
    }

    /// Lattice with spacing `2^-k`.
    pub fn dyadic(phi: f64, k: u32) -> Result<Self> {
        Self::new(phi, 1usize << k)
    }

    pub fn eps(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `false` for the undefected angle, where the constraint is a lattice symmetry.
    pub fn is_frustrated(&self) -> bool {
        (self.phi - PHI_REGULAR).abs() > 1e-14
    }
}

/// Which sides of the reference triangle a vertex or edge lies on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sides {
    pub bottom: bool,
    pub left: bool,
    pub outer: bool,
}

impl Sides {
    pub fn any(&self) -> bool {
        self.bottom || self.left || self.outer
    }

    pub fn count(&self) -> usize {
        self.bottom as usize + self.left as usize + self.outer as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub i: usize,
    pub j: usize,
    pub x: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGraph {
    pub n: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
}

impl LatticeGraph {
    pub fn eps(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertex_id(&self, i: usize, j: usize) -> Option<usize> {
        (i + j <= self.n).then(|| index_of(self.n, i, j))
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Area of every reference triangle, `sqrt(3) eps^2 / 4`.
    pub fn triangle_area(&self) -> f64 {
        let e = self.eps();
        SQRT3 * e * e / 4.0
    }

    pub fn sides_of_vertex(&self, v: usize) -> Sides {
        let Vertex { i, j, .. } = self.vertices[v];
        Sides {
            bottom: j == 0,
            left: i == 0,
            outer: i + j == self.n,
        }
    }

    pub fn sides_of_edge(&self, e: &Edge) -> Sides {
        let a = self.sides_of_vertex(e.a);
        let b = self.sides_of_vertex(e.b);
        Sides {
            bottom: a.bottom && b.bottom,
            left: a.left && b.left,
            outer: a.outer && b.outer,
        }
    }

    pub fn reference_positions(&self) -> Vec<Vec2> {
        self.vertices.iter().map(|v| v.x).collect()
    }

    /// Vertex adjacency lists, sorted.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::with_capacity(6); self.vertices.len()];
        for e in &self.edges {
            adj[e.a].push(e.b);
            adj[e.b].push(e.a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

fn index_of(n: usize, i: usize, j: usize) -> usize {
    // rows of constant j hold n + 1 - j vertices
    j * (n + 1) - j * (j.saturating_sub(1)) / 2 + i
}

/// Reference position of lattice index `(i, j)` at spacing `eps`.
pub fn lattice_point(i: usize, j: usize, eps: f64) -> Vec2 {
    Vec2::new(
        eps * (i as f64 + 0.5 * j as f64),
        eps * j as f64 * SQRT3 / 2.0,
    )
}

pub fn build_lattice(spec: &LatticeSpec) -> LatticeGraph {
    let n = spec.n;
    let eps = spec.eps();
    let mut vertices = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for j in 0..=n {
        for i in 0..=(n - j) {
            debug_assert_eq!(index_of(n, i, j), vertices.len());
            vertices.push(Vertex {
                i,
                j,
                x: lattice_point(i, j, eps),
            });
        }
    }

    let id = |i: usize, j: usize| index_of(n, i, j);
    let mut edges = Vec::with_capacity(3 * n * (n + 1) / 2);
    for j in 0..=n {
        for i in 0..=(n - j) {
            if i + j == n {
                continue;
            }
            // along e1, along R_{pi/3} e1, and the anti-diagonal closing the up triangle
            let on_bottom = j == 0;
            let on_left = i == 0;
            let on_outer = i + j + 1 == n;
            edges.push(Edge {
                a: id(i, j),
                b: id(i + 1, j),
                weight: if on_bottom { 0.5 } else { 1.0 },
            });
            edges.push(Edge {
                a: id(i, j),
                b: id(i, j + 1),
                weight: if on_left { 0.5 } else { 1.0 },
            });
            edges.push(Edge {
                a: id(i + 1, j),
                b: id(i, j + 1),
                weight: if on_outer { 0.5 } else { 1.0 },
            });
        }
    }

    let mut triangles = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..(n - j) {
            triangles.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
            if i + j + 2 <= n {
                triangles.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }

    LatticeGraph {
        n,
        vertices,
        edges,
        triangles,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlavePair {
    pub master: usize,
    pub slave: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMap {
    pub phi: f64,
    pub pinned: usize,
    pub pairs: Vec<SlavePair>,
    /// `R_phi`, applied to master values to produce slave values.
    pub rotation: Mat2,
}

pub fn build_constraints(graph: &LatticeGraph, phi: f64) -> Result<ConstraintMap> {
    let pinned = graph
        .vertex_id(0, 0)
        .ok_or(Error::InvalidSpec("lattice has no origin".into()))?;
    let mut pairs = Vec::with_capacity(graph.n);
    for (v, vert) in graph.vertices.iter().enumerate() {
        if vert.j != 0 || vert.i == 0 {
            continue;
        }
        let slave = graph
            .vertex_id(0, vert.i)
            .ok_or(Error::MissingPartner { vertex: v })?;
        pairs.push(SlavePair { master: v, slave });
    }
    Ok(ConstraintMap {
        phi,
        pinned,
        pairs,
        rotation: rotation(phi),
    })
}

impl ConstraintMap {
    /// Largest violation of `u(slave) = R_phi u(master)` and `u(origin) = 0`.
    pub fn residual(&self, config: &Configuration) -> f64 {
        let p = &config.positions;
        self.pairs
            .iter()
            .map(|sp| (p[sp.slave] - self.rotation * p[sp.master]).amax())
            .fold(p[self.pinned].amax(), f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Carries unknowns `2k, 2k + 1` of the reduced vector.
    Free(usize),
    Slave {
        master: usize,
    },
    Pinned,
}

/// Map between full per-vertex positions and the reduced vector of free unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    pub roles: Vec<Role>,
    pub free_ids: Vec<usize>,
    pub rotation: Mat2,
}

impl DofLayout {
    pub fn new(graph: &LatticeGraph, cmap: &ConstraintMap) -> Self {
        let nv = graph.num_vertices();
        let mut roles = vec![Role::Free(usize::MAX); nv];
        roles[cmap.pinned] = Role::Pinned;
        for sp in &cmap.pairs {
            roles[sp.slave] = Role::Slave { master: sp.master };
        }
        let mut free_ids = Vec::with_capacity(nv - cmap.pairs.len() - 1);
        for (v, role) in roles.iter_mut().enumerate() {
            if let Role::Free(k) = role {
                *k = free_ids.len();
                free_ids.push(v);
            }
        }
        DofLayout {
            roles,
            free_ids,
            rotation: cmap.rotation,
        }
    }

    pub fn reduced_dim(&self) -> usize {
        2 * self.free_ids.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.roles.len()
    }

    /// Free index owning the unknowns of vertex `v`, if any: itself when
    /// free, its master when slaved, nothing when pinned.
    pub fn owner(&self, v: usize) -> Option<usize> {
        match self.roles[v] {
            Role::Free(k) => Some(k),
            Role::Slave { master } => match self.roles[master] {
                Role::Free(k) => Some(k),
                _ => None,
            },
            Role::Pinned => None,
        }
    }

    pub fn expand(&self, reduced: &[f64]) -> Result<Configuration> {
        if reduced.len() != self.reduced_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.reduced_dim(),
                got: reduced.len(),
            });
        }
        let free = |k: usize| Vec2::new(reduced[2 * k], reduced[2 * k + 1]);
        let positions = self
            .roles
            .iter()
            .map(|role| match *role {
                Role::Free(k) => free(k),
                Role::Pinned => Vec2::zeros(),
                Role::Slave { master } => match self.roles[master] {
                    Role::Free(k) => self.rotation * free(k),
                    _ => Vec2::zeros(),
                },
            })
            .collect();
        Ok(Configuration { positions })
    }

    pub fn reduce(&self, config: &Configuration) -> Result<Vec<f64>> {
        if config.positions.len() != self.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: self.num_vertices(),
                got: config.positions.len(),
            });
        }
        let mut out = Vec::with_capacity(self.reduced_dim());
        for &v in &self.free_ids {
            out.push(config.positions[v].x);
            out.push(config.positions[v].y);
        }
        Ok(out)
    }

    /// Replaces slave and pinned values by the ones implied by the free vertices.
    pub fn make_admissible(&self, config: &Configuration) -> Result<Configuration> {
        self.expand(&self.reduce(config)?)
    }
}

/// Deformed vertex positions `u(x)`, one per lattice vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub positions: Vec<Vec2>,
}

impl Configuration {
    pub fn reference(graph: &LatticeGraph) -> Self {
        Configuration {
            positions: graph.reference_positions(),
        }
    }

    pub fn linear(graph: &LatticeGraph, a: &Mat2) -> Self {
        Configuration {
            positions: graph.vertices.iter().map(|v| a * v.x).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn rotated(&self, r: &Mat2) -> Self {
        Configuration {
            positions: self.positions.iter().map(|p| r * p).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize) -> LatticeGraph {
        build_lattice(&LatticeSpec::new(PHI_FIVE, n).unwrap())
    }

    #[test]
    fn smallest_lattice() {
        let g = graph(1);
        assert_eq!(g.vertices.len(), 3);
        assert_eq!(g.edges.len(), 3);
        assert!(g.edges.iter().all(|e| e.weight == 0.5));
        assert_eq!(g.triangles.len(), 1);
    }

    #[test]
    fn two_subdivisions() {
        let g = graph(2);
        assert_eq!(g.vertices.len(), 6);
        assert_eq!(g.edges.len(), 9);
        assert_eq!(g.edges.iter().filter(|e| e.weight == 0.5).count(), 6);
        assert_eq!(g.edges.iter().filter(|e| e.weight == 1.0).count(), 3);
        assert_eq!(g.triangles.len(), 4);
    }

    #[test]
    fn finest_sweep_lattice_size() {
        assert_eq!(graph(256).vertices.len(), 33153);
    }

    #[test]
    fn counts_and_euler_relation() {
        for n in 1..=64 {
            let g = graph(n);
            let (v, e, t) = (g.vertices.len(), g.edges.len(), g.triangles.len());
            assert_eq!(v, (n + 1) * (n + 2) / 2);
            assert_eq!(e, 3 * n * (n + 1) / 2);
            assert_eq!(t, n * n);
            assert_eq!(v as i64 - e as i64 + t as i64, 1);
        }
    }

    #[test]
    fn boundary_edges_are_half_weight() {
        for n in 1..=16 {
            let g = graph(n);
            let mut boundary = 0;
            for e in &g.edges {
                let on = g.sides_of_edge(e).any();
                assert_eq!(on, e.weight == 0.5, "edge {e:?}");
                boundary += on as usize;
            }
            assert_eq!(boundary, 3 * n);
            for (i, j) in [(0, 0), (n, 0), (0, n)] {
                assert_eq!(g.sides_of_vertex(g.vertex_id(i, j).unwrap()).count(), 2);
            }
        }
    }

    #[test]
    fn triangles_positive_with_reference_area() {
        let g = graph(7);
        let area = g.triangle_area();
        for t in &g.triangles {
            let [a, b, c] = t.map(|v| g.vertices[v].x);
            let signed = 0.5 * (b - a).perp(&(c - a));
            assert!((signed - area).abs() < 1e-15);
        }
    }

    #[test]
    fn vertex_positions_follow_index_convention() {
        let g = graph(4);
        let v = &g.vertices[g.vertex_id(3, 1).unwrap()];
        assert_eq!((v.i, v.j), (3, 1));
        assert!((v.x - Vec2::new(0.25 * 3.5, 0.25 * SQRT3 / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn constraint_pairs_n4() {
        let g = graph(4);
        let c = build_constraints(&g, PHI_FIVE).unwrap();
        assert_eq!(c.pairs.len(), 4);
        assert_eq!(c.pinned, g.vertex_id(0, 0).unwrap());
        let layout = DofLayout::new(&g, &c);
        assert_eq!(layout.reduced_dim(), 20);
    }

    #[test]
    fn constraint_pairs_n1() {
        let g = graph(1);
        let c = build_constraints(&g, PHI_FIVE).unwrap();
        assert_eq!(
            c.pairs,
            vec![SlavePair {
                master: g.vertex_id(1, 0).unwrap(),
                slave: g.vertex_id(0, 1).unwrap()
            }]
        );
        assert_eq!(DofLayout::new(&g, &c).reduced_dim(), 2);
    }

    #[test]
    fn slaves_are_rotated_masters() {
        let r60 = rotation(PHI_REGULAR);
        for n in 1..=32 {
            let g = graph(n);
            let c = build_constraints(&g, PHI_SEVEN).unwrap();
            let mut seen = std::collections::HashSet::new();
            for sp in &c.pairs {
                assert!(g.sides_of_vertex(sp.slave).left);
                assert!(g.sides_of_vertex(sp.master).bottom);
                let d = r60 * g.vertices[sp.master].x - g.vertices[sp.slave].x;
                assert!(d.norm() < 1e-12);
                assert!(seen.insert(sp.master) && seen.insert(sp.slave));
            }
            assert!(!seen.contains(&c.pinned));
        }
    }

    #[test]
    fn expand_zero_is_all_origin() {
        let g = graph(5);
        let c = build_constraints(&g, PHI_FIVE).unwrap();
        let layout = DofLayout::new(&g, &c);
        let cfg = layout.expand(&vec![0.0; layout.reduced_dim()]).unwrap();
        assert!(cfg.positions.iter().all(|p| *p == Vec2::zeros()));
    }

    #[test]
    fn expand_rejects_wrong_length() {
        let g = graph(3);
        let c = build_constraints(&g, PHI_FIVE).unwrap();
        let layout = DofLayout::new(&g, &c);
        assert!(matches!(
            layout.expand(&[0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expanded_linear_map_slaves_exact() {
        let g = graph(6);
        let c = build_constraints(&g, PHI_FIVE).unwrap();
        let layout = DofLayout::new(&g, &c);
        let a = Mat2::new(1.1, 0.3, -0.2, 0.9);
        let cfg = layout
            .expand(&layout.reduce(&Configuration::linear(&g, &a)).unwrap())
            .unwrap();
        for sp in &c.pairs {
            assert_eq!(
                cfg.positions[sp.slave],
                c.rotation * (a * g.vertices[sp.master].x)
            );
        }
        assert_eq!(c.residual(&cfg), 0.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(LatticeSpec::new(PHI_FIVE, 0).is_err());
        assert!(LatticeSpec::new(-1.0, 4).is_err());
        assert!(LatticeSpec::new(f64::NAN, 4).is_err());
        assert!(!LatticeSpec::new(PHI_REGULAR, 4).unwrap().is_frustrated());
    }
}
