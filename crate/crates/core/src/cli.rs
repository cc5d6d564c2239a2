//! Command-line front end. Exit codes: 0 success, 1 verification failure,
//! 2 bad input, 3 numerical degeneracy.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::{decomposition_doc, load_model, model_to_json, reduced_to_json, write_atomic, LoadedModel};
use crate::model::ConditionalEvolution;
use crate::operator::Operator;
use crate::reduction::{check_assumptions, equivalence_check_with_map, random_states, reduce_ce};
use crate::superop::Superoperator;
use crate::trajectories::{enumerate_distribution, sample_trajectories, total_variation, write_records, ENUMERATION_CAP};
use crate::zoo::{build, WalkUnitary, ZooSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "cereduce", version, about = "Reduce, verify and simulate quantum conditional evolutions")]
pub struct Cli {
    /// Numerical tolerance for ranks and residuals.
    #[arg(long, global = true, env = "CEREDUCE_TOL", default_value_t = 1e-9)]
    pub tol: f64,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reduce a model and write the reduced model file.
    Reduce(ReduceArgs),
    /// Check that a reduced model reproduces the full one.
    Verify(VerifyArgs),
    /// Sample trajectories.
    Simulate(SimulateArgs),
    /// Write a model from one of the built-in families.
    Zoo(ZooArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    pub input: PathBuf,
    /// Output path; defaults to `<input stem>.red.json`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub full: PathBuf,
    pub reduced: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub max_len: usize,
    #[arg(long, default_value_t = 25)]
    pub n_states: usize,
    /// Allowed output deviation.
    #[arg(long, default_value_t = 1e-8)]
    pub eq_tol: f64,
    /// Also compare the exact outcome distributions at this horizon.
    #[arg(long)]
    pub tv: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Initial state: `mixed`, `basis:J`, or `random`.
    #[arg(long, default_value = "basis:0")]
    pub initial: String,
    /// Trajectory records (JSON lines); omitted when not given.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ZooArgs {
    #[command(subcommand)]
    pub family: ZooFamily,
    /// Output path; stdout when omitted.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ZooFamily {
    /// Projectively measured quantum walk on n sites.
    Walk {
        #[arg(long)]
        n: usize,
        /// Use the Hadamard coin instead of a Haar-random unitary (n = 2).
        #[arg(long)]
        hadamard: bool,
    },
    /// Ising chain with the last spin measured.
    Ising {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
        delta: f64,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotUnital
        | Error::DegenerateAlgebra { .. }
        | Error::NoAssumptionHolds { .. }
        | Error::StateEscaped { .. }
        | Error::OutcomeImpossible { .. } => EXIT_DEGENERATE,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
        }
    };
    match run(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", cli.tol)));
    }
    match &cli.command {
        Command::Reduce(a) => cmd_reduce(cli, a, out),
        Command::Verify(a) => cmd_verify(cli, a, out),
        Command::Simulate(a) => cmd_simulate(cli, a, out),
        Command::Zoo(a) => cmd_zoo(cli, a, out, err),
    }
}

fn validated(path: &Path, tol: f64) -> Result<LoadedModel> {
    let loaded = load_model(path)?;
    let report = loaded.model.validate(tol);
    if !report.passed {
        return Err(Error::Validation(format!("{}: {}", path.display(), report.failures().join("; "))));
    }
    Ok(loaded)
}

fn default_reduced_path(input: &Path) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    input.with_file_name(format!("{stem}.red.json"))
}

fn cmd_reduce(cli: &Cli, a: &ReduceArgs, out: &mut dyn Write) -> Result<i32> {
    let output = a.output.clone().unwrap_or_else(|| default_reduced_path(&a.input));
    if output == a.input {
        return Err(Error::InvalidArgument("output path equals input path".into()));
    }
    let ce = validated(&a.input, cli.tol)?.model;
    let red = reduce_ce(&ce, cli.tol, cli.seed)?;
    let f = &red.factorization;
    let decomposition = decomposition_doc(&f.decomposition, f, &red.algebra, cli.tol);
    let assumptions = match ce.split() {
        Some(_) => Some(check_assumptions(&ce, &red.nperp, &red.algebra, cli.tol)?),
        None => None,
    };
    let (min_choi, norm_res) = red.structure_check();
    write_atomic(&output, reduced_to_json(&red)?.as_bytes())?;

    let pv = &red.provenance;
    match a.report {
        ReportFormat::Json => {
            let report = json!({
                "input": a.input,
                "output": output,
                "provenance": pv,
                "decomposition": decomposition,
                "assumptions": assumptions,
                "reduced_model": {"min_choi_eigenvalue": min_choi, "normalization_residual": norm_res},
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        ReportFormat::Text => {
            let blocks: Vec<[usize; 2]> = pv.blocks.iter().map(|b| [b.d_s, b.d_f]).collect();
            writeln!(out, "reduced dim {} / original {}", pv.reduced_dim, pv.original_dim)?;
            writeln!(out, "hilbert dim {} -> {}", pv.hilbert_dim, pv.reduced_hilbert_dim)?;
            writeln!(out, "observable subspace dim {}", pv.nperp_dim)?;
            writeln!(out, "output algebra dim {}", pv.algebra_dim)?;
            writeln!(out, "blocks {}", serde_json::to_string(&blocks)?)?;
            let r = &decomposition.residuals;
            writeln!(out, "structure residual {:.2e}, unitarity residual {:.2e}", r.structure, r.unitarity)?;
            writeln!(out, "factorization residual {:.2e}", r.factorization.max_residual())?;
            writeln!(out, "reduced model: min Choi eigenvalue {min_choi:.2e}, normalization residual {norm_res:.2e}")?;
            if let Some(asm) = &assumptions {
                writeln!(
                    out,
                    "assumptions: A1 {:.2e}, A2 {:.2e}, A3 {:.2e}, A4 {:.2e}; holding {:?}",
                    asm.a1.residual,
                    asm.a2.residual,
                    asm.a3.residual,
                    asm.a4.residual,
                    asm.holding()
                )?;
            }
            writeln!(out, "tol {:e}, seed {}, wedderburn attempts {}", pv.tol, pv.seed, pv.wedderburn_attempts)?;
            writeln!(out, "wrote {}", output.display())?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyReport {
    pass: bool,
    max_dev: f64,
    max_prob_dev: f64,
    worst_case: Option<(usize, Vec<String>)>,
    words: String,
    n_states: usize,
    total_variation: Option<TvReport>,
    eq_tol: f64,
    seed: u64,
}

#[derive(Serialize)]
struct TvReport {
    steps: usize,
    max_tv: f64,
    max_output_dev: f64,
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let full = validated(&a.full, cli.tol)?.model;
    let reduced = validated(&a.reduced, cli.tol)?;
    let phi = match &reduced.reduction {
        Some(r) => r.map.clone(),
        None if reduced.model.dim() == full.dim() => Superoperator::identity(full.dim()),
        None => {
            return Err(Error::InvalidArgument(format!(
                "{} has no reduction section and its dimension differs from the full model",
                a.reduced.display()
            )))
        }
    };
    if phi.in_dim() != full.dim() {
        return Err(Error::DimensionMismatch { expected: full.dim(), found: phi.in_dim() });
    }
    let eq = equivalence_check_with_map(&full, &reduced.model, &phi, a.max_len, a.n_states, a.eq_tol, cli.seed)?;
    let mut pass = eq.pass;
    let tv = match a.tv {
        Some(steps) => {
            let (max_tv, max_output_dev) = tv_check(&full, &reduced.model, &phi, steps, a.n_states, cli.seed)?;
            pass &= max_tv <= a.eq_tol && max_output_dev <= a.eq_tol;
            Some(TvReport { steps, max_tv, max_output_dev })
        }
        None => None,
    };
    let report = VerifyReport {
        pass,
        max_dev: eq.max_dev,
        max_prob_dev: eq.max_prob_dev,
        worst_case: eq.worst_case.clone(),
        words: eq.words.clone(),
        n_states: eq.n_states,
        total_variation: tv,
        eq_tol: a.eq_tol,
        seed: cli.seed,
    };
    match a.report {
        ReportFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        ReportFormat::Text => {
            writeln!(out, "{}", if report.pass { "PASS" } else { "FAIL" })?;
            writeln!(out, "max output deviation {:.3e} ({} states, {})", report.max_dev, report.n_states, report.words)?;
            writeln!(out, "max probability deviation {:.3e}", report.max_prob_dev)?;
            if let Some(t) = &report.total_variation {
                writeln!(out, "T = {}: max TV {:.3e}, max output deviation {:.3e}", t.steps, t.max_tv, t.max_output_dev)?;
            }
            if !report.pass {
                if let Some((state, word)) = &report.worst_case {
                    writeln!(out, "worst case: state {state}, word [{}]", word.join(", "))?;
                }
            }
            writeln!(out, "tol {:e}, seed {}", report.eq_tol, report.seed)?;
        }
    }
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn tv_check(
    full: &ConditionalEvolution,
    reduced: &ConditionalEvolution,
    phi: &Superoperator,
    steps: usize,
    n_states: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut max_tv = 0.0f64;
    let mut max_dev = 0.0f64;
    for rho in random_states(full.dim(), n_states.max(1), seed) {
        let a = enumerate_distribution(full, &rho, steps, ENUMERATION_CAP)?;
        let b = enumerate_distribution(reduced, &phi.apply(&rho)?, steps, ENUMERATION_CAP)?;
        max_tv = max_tv.max(total_variation(&a, &b)?);
        max_dev = max_dev.max(a.max_output_deviation(&b)?);
    }
    Ok((max_tv, max_dev))
}

fn initial_state(spec: &str, n: usize, seed: u64) -> Result<Operator> {
    match spec {
        "mixed" => Ok(Operator::identity(n).scale_real(1.0 / n as f64)),
        "random" => Ok(random_states(n, 1, seed).remove(0)),
        s => {
            let j = s
                .strip_prefix("basis:")
                .and_then(|j| j.parse::<usize>().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("unknown initial state `{s}`")))?;
            if j >= n {
                return Err(Error::InvalidArgument(format!("basis index {j} out of range for dimension {n}")));
            }
            Ok(Operator::ket_bra(n, j, j))
        }
    }
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let ce = validated(&a.model, cli.tol)?.model;
    let rho0 = initial_state(&a.initial, ce.dim(), cli.seed)?;
    let records = sample_trajectories(&ce, &rho0, a.steps, a.samples, cli.seed)?;
    if let Some(path) = &a.output {
        let mut buf = Vec::new();
        write_records(&records, &mut buf)?;
        write_atomic(path, &buf)?;
    }
    let count = records.len().max(1) as f64;
    let mut per_step: Vec<IndexMap<String, usize>> = Vec::with_capacity(a.steps);
    for t in 0..a.steps {
        let mut hits: IndexMap<String, usize> = ce.outcomes().iter().map(|o| (o.clone(), 0)).collect();
        for r in &records {
            *hits.get_mut(&r.outcomes[t]).expect("declared outcome") += 1;
        }
        per_step.push(hits);
    }
    let freq = |hits: &IndexMap<String, usize>, total: f64| -> IndexMap<String, f64> {
        hits.iter().map(|(k, &v)| (k.clone(), v as f64 / total)).collect()
    };
    let mut totals: IndexMap<String, usize> = ce.outcomes().iter().map(|o| (o.clone(), 0)).collect();
    for hits in &per_step {
        for (k, v) in hits {
            totals[k] += v;
        }
    }
    let totals = freq(&totals, count * a.steps.max(1) as f64);
    let per_step: Vec<_> = per_step.iter().map(|h| freq(h, count)).collect();
    let max_drift = records.iter().map(|r| r.max_drift).fold(0.0, f64::max);
    let summary = json!({
        "model": a.model,
        "steps": a.steps,
        "samples": a.samples,
        "seed": cli.seed,
        "initial": a.initial,
        "frequencies": totals,
        "per_step": per_step,
        "max_trace_drift": max_drift,
        "records": a.output,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(EXIT_OK)
}

fn cmd_zoo(cli: &Cli, a: &ZooArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let spec = match &a.family {
        ZooFamily::Walk { n, hadamard } => ZooSpec::Walk {
            n: *n,
            unitary: if *hadamard { WalkUnitary::Hadamard } else { WalkUnitary::Haar { seed: cli.seed } },
        },
        ZooFamily::Ising { n, p, delta } => ZooSpec::Ising { spins: *n, p: *p, delta: *delta },
    };
    let model = build(&spec)?;
    for w in &model.warnings {
        writeln!(err, "warning: {w}")?;
    }
    let text = model_to_json(&model.ce)?;
    match a.output.as_deref() {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => writeln!(out, "{text}")?,
    }
    Ok(EXIT_OK)
}
