//! Randomly perturbed deterministic graphs.
//!
//! A base graph with small 2-balls is combined with an independent G(n, p)
//! sample by union or by symmetric difference, and the result is labeled with
//! depth-3 signatures using `ceil(ln n)` colors.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coloring::{mod_color_classes, smoothed_m};
use crate::error::{param, Error, Result};
use crate::experiments::{TrialKind, TrialRecord};
use crate::graph::{generate_er, read_edge_list_file, two_ball_sizes, union_graph, xor_graph, Graph, RngSeed};
use crate::signatures::{all_signatures, uniqueness_report, Depth};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCheck {
    pub member: bool,
    pub worst_vertex: Option<usize>,
    pub worst_size: usize,
    pub limit: f64,
}

/// Whether every 2-ball of `g` has at most `n^lambda` vertices.
pub fn in_class(g: &Graph, lambda: f64) -> Result<ClassCheck> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return param(format!("lambda must lie in (0, 1), got {lambda}"));
    }
    let limit = (g.n() as f64).powf(lambda);
    let sizes = two_ball_sizes(g);
    let worst = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(v, &s)| (v, s));
    let worst_size = worst.map_or(0, |w| w.1);
    Ok(ClassCheck {
        member: (worst_size as f64) <= limit,
        worst_vertex: worst.map(|w| w.0),
        worst_size,
        limit,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseGraph {
    Empty,
    Ring,
    /// Square torus grid; `n` must be a perfect square with side at least 3.
    Torus,
    /// Vertex `i` joined to `i +- 1, ..., i +- d/2` (mod n); `d` even.
    Circulant { d: usize },
    File { path: PathBuf },
}

impl FromStr for BaseGraph {
    type Err = Error;

    /// Accepts `empty`, `ring`, `torus`, `circulant:<d>` and `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empty" => Ok(BaseGraph::Empty),
            "ring" => Ok(BaseGraph::Ring),
            "torus" => Ok(BaseGraph::Torus),
            _ => {
                if let Some(d) = s.strip_prefix("circulant:") {
                    let d = d
                        .parse()
                        .map_err(|_| Error::Parameter(format!("bad circulant degree in {s:?}")))?;
                    Ok(BaseGraph::Circulant { d })
                } else if let Some(path) = s.strip_prefix("file:") {
                    Ok(BaseGraph::File { path: path.into() })
                } else {
                    param(format!("unknown base graph {s:?}"))
                }
            }
        }
    }
}

impl std::fmt::Display for BaseGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaseGraph::Empty => f.write_str("empty"),
            BaseGraph::Ring => f.write_str("ring"),
            BaseGraph::Torus => f.write_str("torus"),
            BaseGraph::Circulant { d } => write!(f, "circulant:{d}"),
            BaseGraph::File { path } => write!(f, "file:{}", path.display()),
        }
    }
}

pub fn make_base(base: &BaseGraph, n: usize) -> Result<Graph> {
    match base {
        BaseGraph::Empty => Ok(Graph::empty(n)),
        BaseGraph::Ring => {
            if n < 3 {
                return param(format!("ring needs n >= 3, got {n}"));
            }
            Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
        }
        BaseGraph::Torus => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n || side < 3 {
                return param(format!("torus needs a square n with side >= 3, got {n}"));
            }
            let id = |r: usize, c: usize| r * side + c;
            Graph::from_edges(
                n,
                (0..side).flat_map(|r| {
                    (0..side).flat_map(move |c| {
                        [(id(r, c), id(r, (c + 1) % side)), (id(r, c), id((r + 1) % side, c))]
                    })
                }),
            )
        }
        BaseGraph::Circulant { d } => {
            let d = *d;
            if d % 2 != 0 || d == 0 || d >= n {
                return param(format!("circulant needs even 0 < d < n, got d = {d}, n = {n}"));
            }
            Graph::from_edges(
                n,
                (0..n).flat_map(|i| (1..=d / 2).map(move |k| (i, (i + k) % n))),
            )
        }
        BaseGraph::File { path } => {
            let g = read_edge_list_file(path)?;
            if g.n() != n {
                return param(format!("base graph file has n = {}, expected {n}", g.n()));
            }
            Ok(g)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbMode {
    Union,
    Xor,
}

impl FromStr for PerturbMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" => Ok(PerturbMode::Union),
            "xor" => Ok(PerturbMode::Xor),
            _ => param(format!("unknown perturbation mode {s:?}")),
        }
    }
}

impl std::fmt::Display for PerturbMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PerturbMode::Union => "union",
            PerturbMode::Xor => "xor",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedConfig {
    pub lambda: f64,
    pub base: BaseGraph,
    pub n: usize,
    pub p: f64,
    pub mode: PerturbMode,
    pub m: usize,
}

impl SmoothedConfig {
    /// Torus-style defaults: `p = ln^2.5(n) / n` and `m = ceil(ln n)`.
    pub fn new(base: BaseGraph, n: usize, mode: PerturbMode) -> Self {
        Self {
            lambda: 0.5,
            base,
            n,
            p: default_perturbation_p(n),
            mode,
            m: smoothed_m(n.max(2)),
        }
    }
}

pub fn default_perturbation_p(n: usize) -> f64 {
    let nf = n as f64;
    (nf.ln().powf(2.5) / nf).min(1.0)
}

/// Flags for where `p` sits relative to the two upper conditions the theory
/// states: `np = o(n / ln^3 n)` and `p = o(1 / ln^3 n)`, read here as `< 1`
/// of the respective scale, and the lower condition `np = omega(ln^2 n)`,
/// read as `np > ln^2 n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationWindow {
    pub above_lower: bool,
    pub below_upper: bool,
}

pub fn perturbation_window(n: usize, p: f64) -> PerturbationWindow {
    let nf = n as f64;
    let ln = nf.ln();
    PerturbationWindow {
        above_lower: nf * p > ln * ln,
        below_upper: p * ln.powi(3) < 1.0,
    }
}

/// Composes `base` with `sample` under `mode`.
pub fn perturb(base: &Graph, sample: &Graph, mode: PerturbMode) -> Result<Graph> {
    match mode {
        PerturbMode::Union => union_graph(base, sample),
        PerturbMode::Xor => xor_graph(base, sample),
    }
}

/// One smoothed trial: sample G(n, p) from `rng`, perturb the base, label at
/// depth 3 with `cfg.m` colors and record whether all labels are distinct.
pub fn smoothed_trial(cfg: &SmoothedConfig, rng: RngSeed) -> Result<TrialRecord> {
    let base = make_base(&cfg.base, cfg.n)?;
    smoothed_trial_on(cfg, &base, rng)
}

/// [`smoothed_trial`] with a prebuilt base graph, so grids can share it.
pub fn smoothed_trial_on(cfg: &SmoothedConfig, base: &Graph, rng: RngSeed) -> Result<TrialRecord> {
    if base.n() != cfg.n {
        return Err(Error::Config(format!(
            "base graph has n = {}, config says {}",
            base.n(),
            cfg.n
        )));
    }
    let check = in_class(base, cfg.lambda)?;
    if !check.member {
        return Err(Error::Config(format!(
            "base graph {} is not in the class for lambda = {}: vertex {:?} has a 2-ball of {} > {:.1}",
            cfg.base, cfg.lambda, check.worst_vertex, check.worst_size, check.limit
        )));
    }
    let start = Instant::now();
    let sample = generate_er(cfg.n, cfg.p, rng)?;
    let g = perturb(base, &sample, cfg.mode)?;
    let mut rec = unique3_record(&g, cfg.m, cfg.p, rng)?;
    rec.kind = TrialKind::Smooth;
    rec.base = Some(cfg.base.to_string());
    rec.mode = Some(cfg.mode.to_string());
    let window = perturbation_window(cfg.n, cfg.p);
    if !(window.above_lower && window.below_upper) {
        rec.note = format!(
            "p outside window (above_lower={}, below_upper={})",
            window.above_lower, window.below_upper
        );
    }
    rec.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    Ok(rec)
}

/// Depth-3 labeling verdict for a ready graph, shared with the pure random
/// pipeline.
pub(crate) fn unique3_record(g: &Graph, m: usize, p: f64, rng: RngSeed) -> Result<TrialRecord> {
    let ca = mod_color_classes(g, m)?;
    let labels = all_signatures(g, Depth::Three, Some(m))?;
    let report = uniqueness_report(&labels);
    let mut rec = TrialRecord::new(TrialKind::Unique3, g.n(), p, rng);
    rec.m = Some(m);
    rec.edges = Some(g.edge_count());
    rec.all_unique = Some(report.all_unique);
    rec.duplicate_groups = Some(report.duplicate_groups.len());
    rec.class_min = ca.class_sizes.iter().copied().min();
    rec.class_max = ca.class_sizes.iter().copied().max();
    Ok(rec)
}
