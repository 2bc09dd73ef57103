//! Seeded experiment grids, trial records and scaling benchmarks.
//!
//! Every trial derives its randomness from `(seed, trial index)`, so a grid
//! produces the same records whether it runs serially or on the rayon pool.
//! Wall times are the only nondeterministic field and are left out of the
//! records unless `timings` is set.

use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::{choose_m, Regime};
use crate::error::{param, Error, Result};
use crate::graph::{generate_er, generate_er_with, permute, random_permutation, Graph, RngSeed};
use crate::isomorph::{match_by_signatures, verify_isomorphism, MatchOutcome};
use crate::neighborhoods::{count_degree_profiles, find_2nbr_collisions, MIN_CLASSIFY_N};
use crate::numerics::{check_pmf_bound, pmf_grid};
use crate::refinement::canonical_label;
use crate::signatures::{all_signatures, uniqueness_report, Depth};
use crate::smoothed::{
    default_perturbation_p, make_base, smoothed_trial_on, unique3_record, BaseGraph, PerturbMode,
    SmoothedConfig,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialKind {
    Unique3,
    Unique2,
    Collide2,
    Smooth,
    Match,
    Bench,
    Pmfgrid,
}

impl FromStr for TrialKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unique3" => TrialKind::Unique3,
            "unique2" => TrialKind::Unique2,
            "collide2" => TrialKind::Collide2,
            "smooth" => TrialKind::Smooth,
            "match" => TrialKind::Match,
            "bench" => TrialKind::Bench,
            "pmfgrid" => TrialKind::Pmfgrid,
            _ => return param(format!("unknown experiment kind {s:?}")),
        })
    }
}

impl std::fmt::Display for TrialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrialKind::Unique3 => "unique3",
            TrialKind::Unique2 => "unique2",
            TrialKind::Collide2 => "collide2",
            TrialKind::Smooth => "smooth",
            TrialKind::Match => "match",
            TrialKind::Bench => "bench",
            TrialKind::Pmfgrid => "pmfgrid",
        })
    }
}

/// One CSV row. Fields that do not apply to the trial kind are left empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema: u32,
    pub kind: TrialKind,
    pub n: usize,
    pub p: f64,
    pub c: Option<f64>,
    pub m: Option<usize>,
    pub seed: u64,
    pub trial: u64,
    pub edges: Option<usize>,
    pub all_unique: Option<bool>,
    pub duplicate_groups: Option<usize>,
    pub collision_found: Option<bool>,
    pub collision_groups: Option<usize>,
    pub good_count: Option<usize>,
    pub profile_count: Option<usize>,
    pub profile_bound: Option<f64>,
    pub matched_verified: Option<bool>,
    pub outcome: Option<String>,
    pub bound_satisfied: Option<bool>,
    pub max_pmf: Option<f64>,
    pub class_min: Option<usize>,
    pub class_max: Option<usize>,
    pub base: Option<String>,
    pub mode: Option<String>,
    pub note: String,
    pub wall_ms: Option<f64>,
}

impl TrialRecord {
    pub fn new(kind: TrialKind, n: usize, p: f64, rng: RngSeed) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            kind,
            n,
            p,
            c: None,
            m: None,
            seed: rng.seed,
            trial: rng.stream_id,
            edges: None,
            all_unique: None,
            duplicate_groups: None,
            collision_found: None,
            collision_groups: None,
            good_count: None,
            profile_count: None,
            profile_bound: None,
            matched_verified: None,
            outcome: None,
            bound_satisfied: None,
            max_pmf: None,
            class_min: None,
            class_max: None,
            base: None,
            mode: None,
            note: String::new(),
            wall_ms: None,
        }
    }

    /// The kind's pass/fail verdict, `None` for skipped rows.
    pub fn success(&self) -> Option<bool> {
        match self.kind {
            TrialKind::Unique3 | TrialKind::Unique2 | TrialKind::Smooth => self.all_unique,
            TrialKind::Collide2 => self.collision_found,
            TrialKind::Match => self.matched_verified,
            TrialKind::Pmfgrid => self.bound_satisfied,
            TrialKind::Bench => None,
        }
    }
}

/// How `p` is chosen for each grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "by", content = "values", rename_all = "lowercase")]
pub enum Density {
    /// `np = c ln n`.
    C(Vec<f64>),
    P(Vec<f64>),
    /// `p = ln^2.5(n) / n`, the smoothed default.
    Default,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: TrialKind,
    pub ns: Vec<usize>,
    pub density: Density,
    pub trials: u64,
    pub seed: u64,
    pub m: Option<usize>,
    pub depth: Depth,
    pub base: BaseGraph,
    pub lambda: f64,
    pub mode: PerturbMode,
    pub parallel: bool,
    pub timings: bool,
}

impl ExperimentConfig {
    pub fn new(kind: TrialKind, ns: Vec<usize>, density: Density, trials: u64, seed: u64) -> Self {
        Self {
            kind,
            ns,
            density,
            trials,
            seed,
            m: None,
            depth: Depth::Three,
            base: BaseGraph::Torus,
            lambda: 0.5,
            mode: PerturbMode::Union,
            parallel: true,
            timings: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub kind: TrialKind,
    pub n: usize,
    pub p: f64,
    pub c: Option<f64>,
    pub m: Option<usize>,
    pub trials: usize,
    pub successes: usize,
    pub skipped: usize,
    pub success_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<CellSummary>,
}

struct Cell {
    n: usize,
    p: f64,
    c: Option<f64>,
}

fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    if cfg.kind == TrialKind::Pmfgrid {
        return pmf_grid()
            .into_iter()
            .map(|(n, np)| Cell {
                n: n as usize,
                p: np / n as f64,
                c: None,
            })
            .collect();
    }
    let mut out = Vec::new();
    for &n in &cfg.ns {
        match &cfg.density {
            Density::C(cs) => out.extend(cs.iter().map(|&c| Cell {
                n,
                p: c * (n as f64).ln() / n as f64,
                c: Some(c),
            })),
            Density::P(ps) => out.extend(ps.iter().map(|&p| Cell { n, p, c: None })),
            Density::Default => out.push(Cell {
                n,
                p: default_perturbation_p(n),
                c: None,
            }),
        }
    }
    out
}

fn cell_problem(cfg: &ExperimentConfig, cell: &Cell) -> Option<String> {
    if !(0.0..=1.0).contains(&cell.p) {
        return Some(format!("skipped: p = {} outside [0, 1]", cell.p));
    }
    if cell.n == 0 {
        return Some("skipped: n = 0".into());
    }
    if cfg.kind == TrialKind::Collide2 && cell.n < MIN_CLASSIFY_N {
        return Some(format!("skipped: collide2 needs n >= {MIN_CLASSIFY_N}"));
    }
    None
}

/// Modulus for a random-graph cell: the override, else the choice for `(n, p)`.
fn cell_modulus(cfg: &ExperimentConfig, cell: &Cell) -> Result<usize> {
    match cfg.m {
        Some(m) => Ok(m),
        None => Ok(choose_m(cell.n, cell.p, Regime::Random)?.m),
    }
}

/// Runs every cell of the grid. Trials within a cell fan out over rayon when
/// `parallel` is set; records come back in (cell, trial) order either way.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridOutput> {
    if cfg.trials == 0 {
        return param("trials must be at least 1");
    }
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for cell in cells(cfg) {
        let rows = run_cell(cfg, &cell)?;
        let done: Vec<bool> = rows.iter().filter_map(|r| r.success()).collect();
        let successes = done.iter().filter(|&&s| s).count();
        summary.push(CellSummary {
            kind: cfg.kind,
            n: cell.n,
            p: cell.p,
            c: cell.c,
            m: rows.iter().find_map(|r| r.m),
            trials: done.len(),
            successes,
            skipped: rows.len() - done.len(),
            success_fraction: if done.is_empty() {
                0.0
            } else {
                successes as f64 / done.len() as f64
            },
        });
        records.extend(rows);
    }
    Ok(GridOutput { records, summary })
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<Vec<TrialRecord>> {
    let skip = |note: String| {
        let mut r = TrialRecord::new(cfg.kind, cell.n, cell.p, RngSeed::new(cfg.seed, 0));
        r.c = cell.c;
        r.note = note;
        vec![r]
    };
    if let Some(note) = cell_problem(cfg, cell) {
        return Ok(skip(note));
    }
    let trials = if cfg.kind == TrialKind::Pmfgrid { 1 } else { cfg.trials };

    // per-cell setup shared by all trials
    let needs_m = cfg.kind == TrialKind::Unique3
        || (cfg.kind == TrialKind::Match && cfg.depth == Depth::Three);
    let m = if needs_m {
        match cell_modulus(cfg, cell) {
            Ok(m) => Some(m),
            Err(e) => return Ok(skip(format!("skipped: {e}"))),
        }
    } else {
        None
    };
    let smoothed = if cfg.kind == TrialKind::Smooth {
        let mut sc = SmoothedConfig::new(cfg.base.clone(), cell.n, cfg.mode);
        sc.lambda = cfg.lambda;
        sc.p = cell.p;
        if let Some(m) = cfg.m {
            sc.m = m;
        }
        // an unusable base graph invalidates the whole cell
        let base = match make_base(&sc.base, cell.n) {
            Ok(b) => b,
            Err(e) => return Ok(skip(format!("skipped: {e}"))),
        };
        Some((sc, base))
    } else {
        None
    };

    let one = |t: u64| -> TrialRecord {
        let rng = RngSeed::new(cfg.seed, t);
        let start = Instant::now();
        let result = match cfg.kind {
            TrialKind::Unique3 => trial_unique3(cell, m.unwrap(), rng),
            TrialKind::Unique2 => trial_unique2(cell, rng),
            TrialKind::Collide2 => trial_collide2(cell, rng),
            TrialKind::Match => trial_match(cell, cfg.depth, m, rng),
            TrialKind::Smooth => {
                let (sc, base) = smoothed.as_ref().unwrap();
                smoothed_trial_on(sc, base, rng)
            }
            TrialKind::Pmfgrid => trial_pmf(cell, rng),
            TrialKind::Bench => param("bench runs through bench_scaling, not run_grid"),
        };
        let mut rec = result.unwrap_or_else(|e| {
            let mut r = TrialRecord::new(cfg.kind, cell.n, cell.p, rng);
            r.note = format!("error: {e}");
            r
        });
        rec.c = cell.c;
        rec.wall_ms = cfg.timings.then(|| start.elapsed().as_secs_f64() * 1e3);
        rec
    };
    let rows = if cfg.parallel {
        (0..trials).into_par_iter().map(one).collect()
    } else {
        (0..trials).map(one).collect()
    };
    Ok(rows)
}

fn trial_unique3(cell: &Cell, m: usize, rng: RngSeed) -> Result<TrialRecord> {
    let g = generate_er(cell.n, cell.p, rng)?;
    unique3_record(&g, m, cell.p, rng)
}

fn trial_unique2(cell: &Cell, rng: RngSeed) -> Result<TrialRecord> {
    let g = generate_er(cell.n, cell.p, rng)?;
    let report = uniqueness_report(&all_signatures(&g, Depth::Two, None)?);
    let mut rec = TrialRecord::new(TrialKind::Unique2, cell.n, cell.p, rng);
    rec.edges = Some(g.edge_count());
    rec.all_unique = Some(report.all_unique);
    rec.duplicate_groups = Some(report.duplicate_groups.len());
    Ok(rec)
}

fn trial_collide2(cell: &Cell, rng: RngSeed) -> Result<TrialRecord> {
    let g = generate_er(cell.n, cell.p, rng)?;
    let report = find_2nbr_collisions(&g, cell.p);
    let profiles = count_degree_profiles(&g, cell.p)?;
    let mut rec = TrialRecord::new(TrialKind::Collide2, cell.n, cell.p, rng);
    rec.edges = Some(g.edge_count());
    rec.collision_found = Some(report.collision_found());
    rec.collision_groups = Some(report.groups.len());
    rec.good_count = Some(report.good_count);
    rec.profile_count = Some(profiles.count);
    rec.profile_bound = Some(profiles.bound);
    rec.bound_satisfied = Some(profiles.count as f64 <= profiles.bound);
    Ok(rec)
}

/// Samples `g`, relabels it with a permutation drawn from the same stream and
/// matches the pair.
fn trial_match(cell: &Cell, depth: Depth, m: Option<usize>, rng: RngSeed) -> Result<TrialRecord> {
    let mut r = rng.rng();
    let g = generate_er_with(cell.n, cell.p, &mut r)?;
    let pi = random_permutation(cell.n, &mut r);
    let h = permute(&g, &pi)?;
    let result = match_by_signatures(&g, &h, depth, m);
    let mut rec = TrialRecord::new(TrialKind::Match, cell.n, cell.p, rng);
    rec.m = result.m;
    rec.edges = Some(g.edge_count());
    let (outcome, ok) = match &result.outcome {
        MatchOutcome::Matched { permutation } => {
            ("matched", result.verified && verify_isomorphism(&g, &h, permutation))
        }
        MatchOutcome::Ambiguous { .. } => ("ambiguous", false),
        MatchOutcome::NonIsomorphic { .. } => ("non_isomorphic", false),
    };
    rec.outcome = Some(outcome.into());
    rec.matched_verified = Some(ok);
    Ok(rec)
}

fn trial_pmf(cell: &Cell, rng: RngSeed) -> Result<TrialRecord> {
    let check = check_pmf_bound(cell.n as u64, cell.p)?;
    let mut rec = TrialRecord::new(TrialKind::Pmfgrid, cell.n, cell.p, rng);
    rec.bound_satisfied = Some(check.satisfied);
    rec.max_pmf = Some(check.max_pmf);
    rec.note = format!("bound={}", check.bound);
    Ok(rec)
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn to_csv_string(records: &[TrialRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchTarget {
    /// Depth-3 labels plus the uniqueness report.
    Label,
    /// Same pipeline on the edgeless graph.
    Empty,
    /// Three refinement rounds with certificate.
    Refine,
    /// End-to-end match of a graph against a relabeled copy.
    Match,
}

impl FromStr for BenchTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "label" => BenchTarget::Label,
            "empty" => BenchTarget::Empty,
            "refine" => BenchTarget::Refine,
            "match" => BenchTarget::Match,
            _ => return param(format!("unknown bench target {s:?}")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub edges: usize,
    pub m: usize,
    pub median_ms: f64,
    /// `median_ms` over the previous row's, empty for the first row.
    pub ratio: Option<f64>,
}

/// Median-of-`reps` wall times of `target` at `np = c ln n` for each `n`.
/// Graph generation is outside the timed region.
pub fn bench_scaling(
    target: BenchTarget,
    ns: &[usize],
    c: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if reps == 0 {
        return param("reps must be at least 1");
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return param("bench sizes must be strictly increasing");
    }
    let mut rows: Vec<BenchRow> = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let p = (c * (n as f64).ln() / n as f64).min(1.0);
        let m = choose_m(n, p, Regime::Random).map(|c| c.m).unwrap_or(1);
        let rng = RngSeed::new(seed, i as u64);
        let g = match target {
            BenchTarget::Empty => Graph::empty(n),
            _ => generate_er(n, p, rng)?,
        };
        let h = if target == BenchTarget::Match {
            let pi = random_permutation(n, &mut RngSeed::new(seed, (ns.len() + i) as u64).rng());
            Some(permute(&g, &pi)?)
        } else {
            None
        };
        let mut times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let start = Instant::now();
            match target {
                BenchTarget::Label | BenchTarget::Empty => {
                    let labels = all_signatures(&g, Depth::Three, Some(m))?;
                    std::hint::black_box(uniqueness_report(&labels));
                }
                BenchTarget::Refine => {
                    std::hint::black_box(canonical_label(&g, m)?);
                }
                BenchTarget::Match => {
                    let r = match_by_signatures(&g, h.as_ref().unwrap(), Depth::Three, Some(m));
                    std::hint::black_box(r);
                }
            }
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        times.sort_by(|a, b| a.total_cmp(b));
        let median_ms = times[reps / 2];
        let ratio = rows.last().map(|prev| median_ms / prev.median_ms);
        rows.push(BenchRow {
            n,
            edges: g.edge_count(),
            m,
            median_ms,
            ratio,
        });
    }
    Ok(rows)
}
