//! Text formats: lattice dumps, configuration files, result tables, verify
//! reports and SVG renders. Floats are written with 17 significant digits so
//! every value reads back bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{triangle_dets, CheckReport};
use crate::energy::Psi;
use crate::error::{Error, Result};
use crate::experiments::{folded_init, linear_init, FoldStudy, LinearMode, SweepRecord};
use crate::lattice::{
    build_constraints, rotation, Configuration, ConstraintMap, DofLayout, Edge, LatticeGraph,
    SlavePair, Vec2, Vertex, PHI_FIVE, PHI_SEVEN,
};

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

/// `v`, `e`, `t`, `c` and `pin` records describing a lattice and its constraint.
pub fn write_lattice_dump(graph: &LatticeGraph, cmap: &ConstraintMap) -> String {
    let mut out = String::new();
    for (id, v) in graph.vertices.iter().enumerate() {
        writeln!(out, "v {id} {} {} {:.16e} {:.16e}", v.i, v.j, v.x.x, v.x.y).unwrap();
    }
    for (id, e) in graph.edges.iter().enumerate() {
        writeln!(out, "e {id} {} {} {:.16e}", e.a, e.b, e.weight).unwrap();
    }
    for (id, t) in graph.triangles.iter().enumerate() {
        writeln!(out, "t {id} {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    for p in &cmap.pairs {
        writeln!(out, "c {} {}", p.master, p.slave).unwrap();
    }
    writeln!(out, "pin {}", cmap.pinned).unwrap();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDump {
    pub graph: LatticeGraph,
    pub pairs: Vec<SlavePair>,
    pub pinned: Vec<usize>,
}

pub fn parse_lattice_dump(text: &str) -> Result<LatticeDump> {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    let mut pairs = Vec::new();
    let mut pinned = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut tok = raw.split_whitespace();
        let Some(tag) = tok.next() else { continue };
        let expect_id = |tok: Option<&str>, len: usize| -> Result<()> {
            let id: usize = field(tok, line, "id")?;
            if id != len {
                return Err(parse_err(line, format!("expected id {len}, found {id}")));
            }
            Ok(())
        };
        match tag {
            "v" => {
                expect_id(tok.next(), vertices.len())?;
                let i = field(tok.next(), line, "i")?;
                let j = field(tok.next(), line, "j")?;
                let x = field(tok.next(), line, "x")?;
                let y = field(tok.next(), line, "y")?;
                vertices.push(Vertex {
                    i,
                    j,
                    x: Vec2::new(x, y),
                });
            }
            "e" => {
                expect_id(tok.next(), edges.len())?;
                edges.push(Edge {
                    a: field(tok.next(), line, "vertex")?,
                    b: field(tok.next(), line, "vertex")?,
                    weight: field(tok.next(), line, "weight")?,
                });
            }
            "t" => {
                expect_id(tok.next(), triangles.len())?;
                triangles.push([
                    field(tok.next(), line, "vertex")?,
                    field(tok.next(), line, "vertex")?,
                    field(tok.next(), line, "vertex")?,
                ]);
            }
            "c" => pairs.push(SlavePair {
                master: field(tok.next(), line, "master")?,
                slave: field(tok.next(), line, "slave")?,
            }),
            "pin" => pinned.push(field(tok.next(), line, "vertex")?),
            other => return Err(parse_err(line, format!("unknown record '{other}'"))),
        }
        if tok.next().is_some() {
            return Err(parse_err(line, "trailing fields"));
        }
    }
    let nv = vertices.len();
    // |V| = (N + 1)(N + 2) / 2
    let n = ((((8 * nv + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if n < 2 || n * (n + 1) / 2 != nv {
        return Err(parse_err(
            0,
            format!("{nv} vertices is not a triangular count"),
        ));
    }
    let n = n - 1;
    let bad_ref = edges
        .iter()
        .flat_map(|e| [e.a, e.b])
        .chain(triangles.iter().flatten().copied())
        .chain(pairs.iter().flat_map(|p| [p.master, p.slave]))
        .chain(pinned.iter().copied())
        .any(|v| v >= nv);
    if bad_ref {
        return Err(parse_err(0, "vertex reference out of range"));
    }
    Ok(LatticeDump {
        graph: LatticeGraph {
            n,
            vertices,
            edges,
            triangles,
        },
        pairs,
        pinned,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigHeader {
    pub phi: f64,
    pub n: usize,
    pub p: f64,
    pub psi: Psi,
}

pub fn write_config(header: &ConfigHeader, config: &Configuration) -> String {
    let mut out = format!(
        "# phi={:.16e} n={} p={:.16e} psi={}\n",
        header.phi,
        header.n,
        header.p,
        header.psi.name()
    );
    for (id, u) in config.positions.iter().enumerate() {
        writeln!(out, "u {id} {:.16e} {:.16e}", u.x, u.y).unwrap();
    }
    out
}

pub fn parse_config(text: &str) -> Result<(ConfigHeader, Configuration)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let body = head
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| parse_err(1, "missing '#' header"))?;
    let (mut phi, mut n, mut p, mut psi) = (None, None, None, None);
    for kv in body.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("malformed header entry '{kv}'")))?;
        match k {
            "phi" => phi = Some(field(Some(v), 1, "phi")?),
            "n" => n = Some(field(Some(v), 1, "n")?),
            "p" => p = Some(field(Some(v), 1, "p")?),
            "psi" => psi = Some(Psi::parse(v).map_err(|e| parse_err(1, e.to_string()))?),
            _ => return Err(parse_err(1, format!("unknown header key '{k}'"))),
        }
    }
    let missing = |what: &str| parse_err(1, format!("header lacks {what}"));
    let header = ConfigHeader {
        phi: phi.ok_or_else(|| missing("phi"))?,
        n: n.ok_or_else(|| missing("n"))?,
        p: p.ok_or_else(|| missing("p"))?,
        psi: psi.ok_or_else(|| missing("psi"))?,
    };
    let mut positions = Vec::new();
    for (k, raw) in lines {
        let line = k + 1;
        let mut tok = raw.split_whitespace();
        if tok.next() != Some("u") {
            return Err(parse_err(line, "expected 'u' record"));
        }
        let id: usize = field(tok.next(), line, "id")?;
        if id != positions.len() {
            return Err(parse_err(
                line,
                format!("expected id {}, found {id}", positions.len()),
            ));
        }
        let x = field(tok.next(), line, "ux")?;
        let y = field(tok.next(), line, "uy")?;
        if tok.next().is_some() {
            return Err(parse_err(line, "trailing fields"));
        }
        positions.push(Vec2::new(x, y));
    }
    let expected = (header.n + 1) * (header.n + 2) / 2;
    if positions.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: positions.len(),
        });
    }
    Ok((header, Configuration { positions }))
}

pub fn sweep_csv(record: &SweepRecord) -> String {
    let mut out =
        String::from("phi,eps_exp,energy,p_eps,min_det,nonpos_det_count,iters,converged\n");
    for l in &record.levels {
        let p = l.p_eps.map(|p| format!("{p:.16e}")).unwrap_or_default();
        writeln!(
            out,
            "{:.16e},{},{:.16e},{},{:.16e},{},{},{}",
            record.phi,
            l.eps_exp,
            l.energy,
            p,
            l.min_det,
            l.nonpos_det_count,
            l.iterations,
            l.converged
        )
        .unwrap();
    }
    out
}

pub fn fold_csv(study: &FoldStudy) -> String {
    let mut out = String::from("phi,folds,energy,min_det,nonpos_det_count\n");
    for r in &study.results {
        writeln!(
            out,
            "{:.16e},{},{:.16e},{:.16e},{}",
            study.phi, r.folds, r.energy, r.min_det, r.nonpos_det_count
        )
        .unwrap();
    }
    out
}

pub fn verify_text(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    for r in reports {
        writeln!(
            out,
            "{} {:<12} min_slack={:.6e} samples={} {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.check,
            r.min_slack,
            r.samples,
            r.detail
        )
        .unwrap();
    }
    out
}

pub fn verify_jsonl(reports: &[CheckReport]) -> String {
    reports
        .iter()
        .map(|r| serde_json::to_string(r).expect("reports serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Number of copies `R_phi^k u`, `k = 0..copies`.
    pub copies: usize,
    pub size: f64,
    /// Shade triangles with nonpositive determinant.
    pub mark_inverted: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            copies: 1,
            size: 800.0,
            mark_inverted: true,
        }
    }
}

/// Number of whole wedges of angle `phi` around the corner, `floor(2 pi / phi)`.
pub fn full_turn_copies(phi: f64) -> usize {
    (2.0 * std::f64::consts::PI / phi + 1e-9).floor() as usize
}

/// Static SVG of the deformed lattice: bonds as line segments, inverted
/// triangles shaded, optionally with rotated copies about the origin.
pub fn render_svg(
    graph: &LatticeGraph,
    config: &Configuration,
    phi: f64,
    opts: &RenderOptions,
) -> String {
    let copies: Vec<Vec<Vec2>> = (0..opts.copies.max(1))
        .map(|k| {
            let r = rotation(k as f64 * phi);
            config.positions.iter().map(|u| r * u).collect()
        })
        .collect();
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in copies.iter().flatten() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let span = (hi - lo).max().max(f64::MIN_POSITIVE);
    let margin = 0.03 * opts.size;
    let scale = (opts.size - 2.0 * margin) / span;
    let to_px = |p: &Vec2| {
        (
            margin + (p.x - lo.x) * scale,
            opts.size - margin - (p.y - lo.y) * scale,
        )
    };
    let dets = triangle_dets(graph, config);

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">",
        s = opts.size
    )
    .unwrap();
    writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
    for (k, pos) in copies.iter().enumerate() {
        let stroke = if k == 0 { "#000000" } else { "#7a7a7a" };
        writeln!(out, "<g id=\"copy{k}\">").unwrap();
        if opts.mark_inverted {
            for (t, tri) in graph.triangles.iter().enumerate() {
                if dets.dets[t] <= 0.0 {
                    let pts: Vec<String> = tri
                        .iter()
                        .map(|&v| {
                            let (x, y) = to_px(&pos[v]);
                            format!("{x:.3},{y:.3}")
                        })
                        .collect();
                    writeln!(
                        out,
                        "<polygon points=\"{}\" fill=\"#e8a0a0\" fill-opacity=\"0.6\" stroke=\"none\"/>",
                        pts.join(" ")
                    )
                    .unwrap();
                }
            }
        }
        let mut d = String::new();
        for e in &graph.edges {
            let (x0, y0) = to_px(&pos[e.a]);
            let (x1, y1) = to_px(&pos[e.b]);
            write!(d, "M{x0:.3} {y0:.3}L{x1:.3} {y1:.3}").unwrap();
        }
        writeln!(
            out,
            "<path d=\"{d}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1\"/>"
        )
        .unwrap();
        writeln!(out, "</g>").unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}

/// `5` and `7` select `2 pi / 5` and `2 pi / 7`; anything else is radians.
pub fn parse_phi(s: &str) -> Result<f64> {
    let phi = match s.trim() {
        "5" => PHI_FIVE,
        "7" => PHI_SEVEN,
        other => other
            .parse()
            .map_err(|_| Error::Config(format!("invalid phi '{other}'")))?,
    };
    if !(phi > 0.0 && phi < 2.0 * std::f64::consts::PI) {
        return Err(Error::InvalidAngle {
            phi,
            reason: "phi must lie in (0, 2 pi)",
        });
    }
    Ok(phi)
}

/// Short tag used in output file names: `5`, `7` or the angle in radians.
pub fn phi_label(phi: f64) -> String {
    if phi == PHI_FIVE {
        "5".into()
    } else if phi == PHI_SEVEN {
        "7".into()
    } else {
        format!("{phi}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Linear(LinearMode),
    Fold(usize),
    File(PathBuf),
}

impl InitSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "invalid init '{s}' (expected linear:det1, linear:edge, fold:<L> or file:<path>)"
            ))
        };
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match (kind, arg) {
            ("linear", "det1") => Ok(InitSpec::Linear(LinearMode::Det1)),
            ("linear", "edge") => Ok(InitSpec::Linear(LinearMode::EdgePreserving)),
            ("fold", l) => Ok(InitSpec::Fold(l.parse().map_err(|_| bad())?)),
            ("file", path) if !path.is_empty() => Ok(InitSpec::File(PathBuf::from(path))),
            _ => Err(bad()),
        }
    }

    /// Builds an admissible initial configuration on `graph`.
    pub fn build(&self, graph: &LatticeGraph, phi: f64) -> Result<Configuration> {
        match self {
            InitSpec::Linear(mode) => linear_init(graph, phi, *mode),
            InitSpec::Fold(l) => folded_init(graph, phi, *l, LinearMode::EdgePreserving),
            InitSpec::File(path) => {
                let (header, config) = parse_config(&read_file(path)?)?;
                if header.n != graph.n {
                    return Err(Error::Config(format!(
                        "{}: configuration has n = {}, lattice has n = {}",
                        path.display(),
                        header.n,
                        graph.n
                    )));
                }
                let cmap = build_constraints(graph, phi)?;
                DofLayout::new(graph, &cmap).make_admissible(&config)
            }
        }
    }
}
