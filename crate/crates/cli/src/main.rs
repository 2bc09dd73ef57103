use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use graphcanon::experiments::{write_csv, CellSummary};
use graphcanon::graph::{read_edge_list_file, write_edge_list};
use graphcanon::refinement::refine_from;
use graphcanon::*;

#[derive(Parser)]
#[command(name = "graphcanon", version, about = "Canonical vertex labels for sparse random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct Output {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// Either an edge-list file or G(n, p) parameters.
#[derive(Args, Clone)]
struct Source {
    /// Edge-list file ("n m" header, then one "u v" per line).
    #[arg(long, conflicts_with_all = ["n", "p", "c"])]
    input: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, conflicts_with = "c")]
    p: Option<f64>,
    /// Density as np = c ln n.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

impl Source {
    fn p_for(&self, n: usize) -> Option<f64> {
        self.p.or_else(|| self.c.map(|c| c * (n as f64).ln() / n as f64))
    }

    /// The graph, plus the edge probability when one is known or can be
    /// estimated from the density.
    fn load(&self) -> Result<(Graph, f64)> {
        if let Some(path) = &self.input {
            let g = read_edge_list_file(path).with_context(|| format!("reading {}", path.display()))?;
            let n = g.n();
            let p = if n > 1 {
                2.0 * g.edge_count() as f64 / (n as f64 * (n - 1) as f64)
            } else {
                0.0
            };
            return Ok((g, p));
        }
        let n = self.n.context("need --input or --n")?;
        let p = self.p_for(n).context("need --p or --c with --n")?;
        Ok((generate_er(n, p, RngSeed::new(self.seed, self.stream))?, p))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Unique3,
    Unique2,
    Collide2,
    Smooth,
    Match,
    Pmfgrid,
}

impl From<KindArg> for TrialKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Unique3 => TrialKind::Unique3,
            KindArg::Unique2 => TrialKind::Unique2,
            KindArg::Collide2 => TrialKind::Collide2,
            KindArg::Smooth => TrialKind::Smooth,
            KindArg::Match => TrialKind::Match,
            KindArg::Pmfgrid => TrialKind::Pmfgrid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Union,
    Xor,
}

impl From<ModeArg> for PerturbMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Union => PerturbMode::Union,
            ModeArg::Xor => PerturbMode::Xor,
        }
    }
}

fn parse_depth(s: &str) -> Result<Depth, String> {
    match s {
        "2" => Ok(Depth::Two),
        "3" => Ok(Depth::Three),
        _ => Err(format!("depth must be 2 or 3, got {s}")),
    }
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Vertex counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', conflicts_with = "p")]
    c: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Modulus override.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "3", value_parser = parse_depth)]
    depth: Depth,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
    /// Record per-trial wall times (makes the output nondeterministic).
    #[arg(long)]
    timings: bool,
    /// Also write the per-cell summary as JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample G(n, p) and write it as an edge list.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with = "c")]
        p: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-vertex labels and a uniqueness report.
    Sign {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "3", value_parser = parse_depth)]
        depth: Depth,
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Color refinement from the degree-mod-m coloring.
    Refine {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        m: Option<usize>,
        /// Stop after this many rounds.
        #[arg(long)]
        rounds: Option<usize>,
        /// Include the full certificate in hex.
        #[arg(long)]
        certificate: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Match two edge-list files by sorted labels.
    Match {
        g1: PathBuf,
        g2: PathBuf,
        #[arg(long, default_value = "3", value_parser = parse_depth)]
        depth: Depth,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vertex pairs with isomorphic 2-neighborhoods.
    Collide2 {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
    },
    /// Perturbed base-graph trials.
    Smooth {
        #[arg(long)]
        n: usize,
        /// empty, ring, torus, circulant:<d> or file:<path>.
        #[arg(long, default_value = "torus")]
        base: String,
        #[arg(long, value_enum, default_value = "union")]
        mode: ModeArg,
        /// Defaults to ln^2.5(n) / n.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 30)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Seeded experiment grid.
    Grid {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "torus")]
        base: String,
        #[arg(long, value_enum, default_value = "union")]
        mode: ModeArg,
        /// Exit with status 2 when a cell's success fraction is below this
        /// value (0.9 when given without a value).
        #[arg(long, num_args = 0..=1, default_missing_value = "0.9")]
        assert: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Median-of-reps wall times across n at np = c ln n.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 3.0)]
        c: f64,
        /// label, empty, refine or match.
        #[arg(long, default_value = "label")]
        target: String,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// The binomial mode bound over the fixed (n, np) grid.
    Pmfgrid {
        #[command(flatten)]
        output: Output,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Rows as CSV or as a JSON array.
fn emit_rows<T: Serialize>(rows: &[T], output: &Output) -> Result<()> {
    match output.format {
        Format::Json => emit_json(&rows, output.out.as_deref()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink(output.out.as_deref())?);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn emit_records(records: &[TrialRecord], output: &Output) -> Result<()> {
    match output.format {
        Format::Json => emit_json(&records, output.out.as_deref()),
        Format::Csv => {
            let mut w = sink(output.out.as_deref())?;
            write_csv(records, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn modulus(g: &Graph, p: f64, m: Option<usize>) -> usize {
    m.unwrap_or_else(|| match choose_m(g.n(), p, Regime::Random) {
        Ok(choice) => choice.m,
        Err(_) => graphcanon::coloring::default_modulus(g),
    })
}

#[derive(Serialize)]
struct LabelRow {
    vertex: usize,
    depth: u8,
    label: String,
}

#[derive(Serialize)]
struct SignOutput {
    n: usize,
    edges: usize,
    depth: u8,
    m: Option<usize>,
    all_unique: bool,
    duplicate_groups: Vec<Vec<usize>>,
    labels: Vec<LabelRow>,
}

fn sign(source: &Source, depth: Depth, m: Option<usize>, output: &Output) -> Result<()> {
    let (g, p) = source.load()?;
    let m = (depth == Depth::Three).then(|| modulus(&g, p, m));
    let table = all_signatures(&g, depth, m)?;
    let report = uniqueness_report(&table);
    let labels: Vec<LabelRow> = (0..g.n())
        .map(|v| LabelRow {
            vertex: v,
            depth: depth.into(),
            label: table.render(v),
        })
        .collect();
    if output.format == Format::Csv {
        return emit_rows(&labels, output);
    }
    emit_json(
        &SignOutput {
            n: g.n(),
            edges: g.edge_count(),
            depth: depth.into(),
            m,
            all_unique: report.all_unique,
            duplicate_groups: report.duplicate_groups,
            labels,
        },
        output.out.as_deref(),
    )
}

#[derive(Serialize)]
struct RefineOutput {
    n: usize,
    m: usize,
    rounds: usize,
    class_count: usize,
    discrete: bool,
    stable: bool,
    /// SHA-256 of the three-round canonical certificate.
    certificate_sha256: String,
    certificate_bytes: usize,
    /// The certificate itself, hex encoded, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<String>,
    colors: Vec<u32>,
}

#[derive(Serialize)]
struct ColorRow {
    vertex: usize,
    color: u32,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn refine_cmd(
    source: &Source,
    m: Option<usize>,
    rounds: Option<usize>,
    full_certificate: bool,
    output: &Output,
) -> Result<()> {
    let (g, p) = source.load()?;
    let m = modulus(&g, p, m);
    let ca = mod_color_classes(&g, m)?;
    let stable = refine_from(&g, &ca.colors, rounds);
    if output.format == Format::Csv {
        let rows: Vec<ColorRow> = stable
            .colors
            .iter()
            .enumerate()
            .map(|(vertex, &color)| ColorRow { vertex, color })
            .collect();
        return emit_rows(&rows, output);
    }
    let cert = canonical_label(&g, m)?.certificate;
    emit_json(
        &RefineOutput {
            n: g.n(),
            m,
            rounds: stable.rounds,
            class_count: stable.class_count,
            discrete: stable.discrete,
            stable: stable.stable,
            certificate_sha256: hex(&Sha256::digest(&cert)),
            certificate_bytes: cert.len(),
            certificate: full_certificate.then(|| hex(&cert)),
            colors: stable.colors,
        },
        output.out.as_deref(),
    )
}

#[derive(Serialize)]
struct MatchOutput {
    #[serde(flatten)]
    result: MatchResult,
    millis: f64,
}

#[derive(Serialize)]
struct CollideOutput {
    n: usize,
    p: f64,
    #[serde(flatten)]
    report: CollisionReport,
}

#[derive(Serialize)]
struct PairRow {
    u: usize,
    v: usize,
    method: graphcanon::neighborhoods::CollisionMethod,
}

fn write_summary(summary: &[CellSummary], path: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        emit_json(&summary, Some(p))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen {
            n,
            p,
            c,
            seed,
            stream,
            out,
        } => {
            let p = match (p, c) {
                (Some(p), _) => p,
                (None, Some(c)) => c * (n as f64).ln() / n as f64,
                (None, None) => bail!("need --p or --c"),
            };
            let g = generate_er(n, p, RngSeed::new(seed, stream))?;
            let mut w = sink(out.as_deref())?;
            w.write_all(write_edge_list(&g).as_bytes())?;
            w.flush()?;
        }
        Command::Sign {
            source,
            depth,
            m,
            output,
        } => sign(&source, depth, m, &output)?,
        Command::Refine {
            source,
            m,
            rounds,
            certificate,
            output,
        } => refine_cmd(&source, m, rounds, certificate, &output)?,
        Command::Match {
            g1,
            g2,
            depth,
            m,
            out,
        } => {
            let a = read_edge_list_file(&g1).with_context(|| format!("reading {}", g1.display()))?;
            let b = read_edge_list_file(&g2).with_context(|| format!("reading {}", g2.display()))?;
            let start = Instant::now();
            let result = match_by_signatures(&a, &b, depth, m);
            let millis = start.elapsed().as_secs_f64() * 1e3;
            emit_json(&MatchOutput { result, millis }, out.as_deref())?;
        }
        Command::Collide2 { source, output } => {
            let (g, p) = source.load()?;
            let report = find_2nbr_collisions(&g, p);
            if output.format == Format::Csv {
                let rows: Vec<PairRow> = report
                    .pairs
                    .iter()
                    .map(|q| PairRow {
                        u: q.u,
                        v: q.v,
                        method: q.method,
                    })
                    .collect();
                emit_rows(&rows, &output)?;
            } else {
                emit_json(&CollideOutput { n: g.n(), p, report }, output.out.as_deref())?;
            }
        }
        Command::Smooth {
            n,
            base,
            mode,
            p,
            m,
            lambda,
            trials,
            seed,
            output,
        } => {
            let density = match p {
                Some(p) => Density::P(vec![p]),
                None => Density::Default,
            };
            let mut cfg = ExperimentConfig::new(TrialKind::Smooth, vec![n], density, trials, seed);
            cfg.base = base.parse()?;
            cfg.mode = mode.into();
            cfg.lambda = lambda;
            cfg.m = m;
            let out = run_grid(&cfg)?;
            emit_records(&out.records, &output)?;
        }
        Command::Grid {
            kind,
            grid,
            base,
            mode,
            assert,
            out,
            format,
        } => {
            let kind: TrialKind = kind.into();
            let density = if !grid.p.is_empty() {
                Density::P(grid.p.clone())
            } else if !grid.c.is_empty() {
                Density::C(grid.c.clone())
            } else if kind == TrialKind::Smooth || kind == TrialKind::Pmfgrid {
                Density::Default
            } else {
                bail!("need --c or --p");
            };
            let mut cfg = ExperimentConfig::new(kind, grid.n.clone(), density, grid.trials, grid.seed);
            cfg.m = grid.m;
            cfg.depth = grid.depth;
            cfg.base = base.parse()?;
            cfg.mode = mode.into();
            cfg.parallel = !grid.serial;
            cfg.timings = grid.timings;
            let result = run_grid(&cfg)?;
            emit_records(&result.records, &Output { out, format })?;
            write_summary(&result.summary, grid.summary.as_deref())?;
            if let Some(min) = assert {
                let failing: Vec<&CellSummary> = result
                    .summary
                    .iter()
                    .filter(|s| s.trials == 0 || s.success_fraction < min)
                    .collect();
                for s in &failing {
                    eprintln!(
                        "below threshold: n={} p={} success {}/{} < {min}",
                        s.n, s.p, s.successes, s.trials
                    );
                }
                if !failing.is_empty() {
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::Bench {
            n,
            c,
            target,
            reps,
            seed,
            output,
        } => {
            let rows = bench_scaling(target.parse()?, &n, c, reps, seed)?;
            emit_rows(&rows, &output)?;
        }
        Command::Pmfgrid { output } => {
            let cfg = ExperimentConfig::new(TrialKind::Pmfgrid, vec![], Density::Default, 1, 0);
            emit_records(&run_grid(&cfg)?.records, &output)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            // a closed pipe (e.g. `| head`) is not worth reporting
            let broken_pipe = e.chain().any(|c| {
                let kind = c
                    .downcast_ref::<io::Error>()
                    .map(io::Error::kind)
                    .or_else(|| c.downcast_ref::<serde_json::Error>()?.io_error_kind())
                    .or_else(|| match c.downcast_ref::<csv::Error>()?.kind() {
                        csv::ErrorKind::Io(e) => Some(e.kind()),
                        _ => None,
                    });
                kind == Some(io::ErrorKind::BrokenPipe)
            });
            if broken_pipe {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
