//! Command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use range_pta_core::solver::{compare, precision_histogram, Comparison, Solution};
use range_pta_core::{propagate, ChunkConfig, FilterMode, Program, SetKind, SolverConfig};

use crate::facts::parse_program;
use crate::report::{precision_table, savings_cell, time_space_table, RunReport};
use crate::synth::{generate, GenParams};

#[derive(Debug, Parser)]
#[command(
    name = "range-pta",
    version,
    about = "Andersen points-to analysis with interval-ranged bit-vector sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus.
    Gen(GenArgs),
    /// Solve a corpus and print a report.
    Solve(SolveArgs),
    /// Solve a corpus under two configurations and compare the solutions.
    Compare(CompareArgs),
    /// Report sparse-bitmap savings after propagation.
    Savings(RunArgs),
    /// Repeat a solve and report the median propagation time.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// TOML file with generator parameters; flags override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
    /// Overwrite an existing output file.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub interfaces: Option<usize>,
    #[arg(long)]
    pub allocs_min: Option<usize>,
    #[arg(long)]
    pub allocs_max: Option<usize>,
    #[arg(long)]
    pub vars: Option<usize>,
    #[arg(long)]
    pub statements: Option<usize>,
    #[arg(long)]
    pub store_load_ratio: Option<f64>,
    #[arg(long)]
    pub violation_rate: Option<f64>,
    #[arg(long)]
    pub fields: Option<usize>,
    #[arg(long)]
    pub pad_chunk: Option<u32>,
    #[arg(long)]
    pub arrays: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Md,
    Csv,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub corpus: PathBuf,
    #[arg(long, value_parser = parse_kind, default_value = "hybrid")]
    pub set: SetKind,
    #[arg(long, value_parser = parse_filter, default_value = "mask")]
    pub filter: FilterMode,
    /// Chunk width in bits: 8, 16, 32 or 64.
    #[arg(long, env = "RANGE_PTA_CHUNK", default_value_t = 64)]
    pub chunk: u32,
    #[arg(long, value_enum, default_value = "md")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Write per-node memberships in canonical sorted form.
    #[arg(long)]
    pub emit_solution: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub corpus: PathBuf,
    /// First configuration as `<set>:<filter>`.
    #[arg(long, value_parser = parse_pair)]
    pub a: (SetKind, FilterMode),
    /// Second configuration as `<set>:<filter>`.
    #[arg(long, value_parser = parse_pair)]
    pub b: (SetKind, FilterMode),
    #[arg(long, env = "RANGE_PTA_CHUNK", default_value_t = 64)]
    pub chunk: u32,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of repetitions.
    #[arg(short = 'n', long, default_value_t = 5)]
    pub runs: usize,
}

fn parse_kind(s: &str) -> Result<SetKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_filter(s: &str) -> Result<FilterMode, String> {
    s.parse()
        .map_err(|_| format!("unknown filter `{s}` (mask, intrinsic or none)"))
}

fn parse_pair(s: &str) -> Result<(SetKind, FilterMode), String> {
    let (k, f) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `<set>:<filter>`, got `{s}`"))?;
    Ok((parse_kind(k)?, parse_filter(f)?))
}

pub fn load_program(path: &Path) -> Result<Program> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_program(&text).with_context(|| format!("{}", path.display()))
}

pub fn solve_program(
    p: &Program,
    kind: SetKind,
    filter: FilterMode,
    chunk: u32,
) -> Result<Solution> {
    let cfg = SolverConfig::new(kind, filter).with_chunk(ChunkConfig::new(chunk)?);
    cfg.validate()?;
    let nr = p.number()?;
    Ok(propagate(&p.pag, &nr, &p.hierarchy, &cfg)?)
}

pub fn report_for(corpus: &str, p: &Program, sol: &Solution) -> RunReport {
    let cfg = sol.config();
    RunReport {
        corpus: corpus.to_string(),
        set_kind: cfg.set_kind,
        filter: cfg.filter,
        chunk_bits: cfg.chunk.bits(),
        stats: *sol.stats(),
        footprint: sol.footprint(),
        histogram: Some(precision_histogram(sol, &p.pag)),
        savings_bytes: sol.sparse_savings().ok(),
    }
}

fn corpus_name(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn emit(out: &mut dyn Write, r: &RunReport, format: Format) -> Result<()> {
    let text = match format {
        Format::Md => r.to_markdown(),
        Format::Csv => r.to_csv(),
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn gen_params(args: &GenArgs) -> Result<GenParams> {
    let mut p = match &args.params {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("{}", path.display()))?
        }
        None => GenParams::default(),
    };
    macro_rules! over {
        ($($f:ident),*) => { $( if let Some(v) = args.$f { p.$f = v; } )* };
    }
    over!(
        classes,
        max_depth,
        interfaces,
        allocs_min,
        allocs_max,
        vars,
        statements,
        store_load_ratio,
        violation_rate,
        fields,
        arrays
    );
    if args.pad_chunk.is_some() {
        p.pad_chunk = args.pad_chunk;
    }
    Ok(p)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Gen(args) => {
            let params = gen_params(&args)?;
            let text = generate(&params, args.seed)?;
            if args.out.exists() && !args.force {
                bail!("{} exists; pass --force to overwrite", args.out.display());
            }
            fs::write(&args.out, text)
                .with_context(|| format!("cannot write {}", args.out.display()))?;
        }
        Command::Solve(args) => {
            let r = &args.run;
            let p = load_program(&r.corpus)?;
            let sol = solve_program(&p, r.set, r.filter, r.chunk)?;
            if let Some(path) = &args.emit_solution {
                fs::write(path, sol.canonical_text(&p.pag))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            emit(
                out,
                &report_for(&corpus_name(&r.corpus), &p, &sol),
                r.format,
            )?;
        }
        Command::Compare(args) => {
            let p = load_program(&args.corpus)?;
            let a = solve_program(&p, args.a.0, args.a.1, args.chunk)?;
            let b = solve_program(&p, args.b.0, args.b.1, args.chunk)?;
            let cmp = compare(&a, &b)?;
            let label = |(k, f): (SetKind, FilterMode)| format!("{k}:{f}");
            writeln!(out, "a = {}, b = {}", label(args.a), label(args.b))?;
            writeln!(out, "result: {}", cmp.label())?;
            let diffs = match &cmp {
                Comparison::Incomparable { a_extra, b_extra } => {
                    writeln!(out, "b has members a lacks at {} nodes", b_extra.len())?;
                    a_extra.as_slice()
                }
                other => other.diffs(),
            };
            let extras: usize = diffs.iter().map(|d| d.extras.len()).sum();
            let slack = diffs
                .iter()
                .flat_map(|d| &d.extras)
                .filter(|(_, s)| *s)
                .count();
            writeln!(
                out,
                "nodes with extras: {}, extra members: {extras}, in slack: {slack}",
                diffs.len()
            )?;
            let ha = precision_histogram(&a, &p.pag);
            let hb = precision_histogram(&b, &p.pag);
            out.write_all(precision_table(&label(args.a), &ha, &label(args.b), &hb).as_bytes())?;
        }
        Command::Savings(r) => {
            if !matches!(
                r.set,
                SetKind::Pure | SetKind::Hybrid | SetKind::Ranged | SetKind::HybridRanged
            ) {
                bail!(range_pta_core::ptsets::SetError::UnsupportedKind(r.set));
            }
            let p = load_program(&r.corpus)?;
            let sol = solve_program(&p, r.set, r.filter, r.chunk)?;
            let saved = sol.sparse_savings()?;
            let report = report_for(&corpus_name(&r.corpus), &p, &sol);
            emit(out, &report, r.format)?;
            writeln!(
                out,
                "total/saved (MB, modeled): {}",
                savings_cell(report.footprint.total(), saved)
            )?;
        }
        Command::Bench(args) => {
            let r = &args.run;
            if args.runs == 0 {
                bail!("--runs must be positive");
            }
            let p = load_program(&r.corpus)?;
            let mut times: Vec<Duration> = Vec::new();
            let mut last = None;
            for _ in 0..args.runs {
                let sol = solve_program(&p, r.set, r.filter, r.chunk)?;
                times.push(sol.stats().wall_time.unwrap_or_default());
                last = Some(sol);
            }
            times.sort();
            let sol = last.expect("at least one run");
            let mut report = report_for(&corpus_name(&r.corpus), &p, &sol);
            report.stats.wall_time = Some(times[times.len() / 2]);
            writeln!(out, "median of {} runs", args.runs)?;
            out.write_all(time_space_table(&[report]).as_bytes())?;
        }
    }
    Ok(())
}
