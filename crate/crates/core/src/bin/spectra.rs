use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use spectra::harness::{self, report, ExperimentConfig, RunOptions, RunOutcome, RunResult};
use spectra::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_FAILED: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "spectra", version, about = "Sparse Bernoulli matrix experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability; `log` and `c*log` mean `c log(n) / n`.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    beta: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the JSON result (stdout gets the CSV either way).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Stop after this many units, leaving a checkpoint.
    #[arg(long)]
    stop_after: Option<u64>,
    /// Any other config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    #[command(name = "smin-tail")]
    SminTail(RunArgs),
    #[command(name = "corank-census")]
    CorankCensus(RunArgs),
    #[command(name = "zero-prob")]
    ZeroProb(RunArgs),
    #[command(name = "partition-check")]
    PartitionCheck(RunArgs),
    #[command(name = "expansion-audit")]
    ExpansionAudit(RunArgs),
    #[command(name = "bounds-audit")]
    BoundsAudit(RunArgs),
    #[command(name = "t23-anticoncentration")]
    T23Anticoncentration(RunArgs),
    #[command(name = "net-audit")]
    NetAudit(RunArgs),
    #[command(name = "distance-diagnostic")]
    DistanceDiagnostic(RunArgs),
    /// Continue an interrupted run from its checkpoint.
    Resume {
        #[arg(value_name = "CHECKPOINT")]
        from: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Render a stored result.
    Report {
        path: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

fn code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Checkpoint(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Config pairs from the file, then the flags, in that order.
fn pairs(experiment: Option<&str>, a: &RunArgs) -> Result<Vec<(String, String)>, Error> {
    let mut kv = match &a.config {
        Some(p) => harness::config::read_config_file(p)?,
        None => Vec::new(),
    };
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            kv.push((k.to_string(), v));
        }
    };
    push("experiment", experiment.map(str::to_string));
    push("n", a.n.map(|v| v.to_string()));
    push("p", a.p.clone());
    push("beta", a.beta.map(|v| v.to_string()));
    push("trials", a.trials.map(|v| v.to_string()));
    push("seed", a.seed.map(|v| v.to_string()));
    push("workers", a.workers.map(|v| v.to_string()));
    push("checkpoint_every", a.checkpoint_every.map(|v| v.to_string()));
    push("out", a.out.as_ref().map(|p| p.display().to_string()));
    for s in &a.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{s}`")))?;
        kv.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(kv)
}

fn emit(result: &RunResult, out: Option<&Path>, workers: usize, started: Instant) -> Result<u8, Error> {
    let secs = started.elapsed().as_secs_f64();
    if let Some(path) = out {
        result.write(path)?;
        // Timing is kept out of the result so it stays reproducible.
        let mut side = path.as_os_str().to_owned();
        side.push(".timing");
        std::fs::write(side, format!("{{\"wall_clock_seconds\": {secs}, \"workers\": {workers}}}\n"))?;
    }
    print!("{}", report::to_csv(result)?);
    eprintln!("wall clock {secs:.3} s with {workers} workers");
    Ok(if result.passed() { 0 } else { EXIT_FAILED })
}

fn outcome(o: RunOutcome, out: Option<&Path>, workers: usize, started: Instant) -> Result<u8, Error> {
    match o {
        RunOutcome::Complete(r) => emit(&r, out, workers, started),
        RunOutcome::AlreadyComplete(r) => {
            eprintln!("already complete");
            emit(&r, out, workers, started)
        }
        RunOutcome::Interrupted { done } => {
            eprintln!("interrupted after {done} units; checkpoint written");
            Ok(0)
        }
    }
}

fn run_cmd(name: &str, a: &RunArgs) -> Result<u8, Error> {
    let cfg = ExperimentConfig::from_pairs(&pairs(Some(name), a)?)?;
    let opts = RunOptions {
        checkpoint: a.checkpoint.clone(),
        stop_after: a.stop_after,
    };
    let started = Instant::now();
    let o = harness::run_with(&cfg, &opts)?;
    outcome(o, cfg.output_path.as_deref(), cfg.workers, started)
}

fn resume_cmd(ckpt: &Path, a: &RunArgs) -> Result<u8, Error> {
    let kv = pairs(None, a)?;
    // Anything beyond workers/out is checked against the stored config.
    let constrains = kv.iter().any(|(k, _)| !matches!(k.as_str(), "workers" | "out" | "output_path"));
    let expect = if constrains {
        let mut e = harness::checkpoint_config(ckpt)?;
        let last = |key: &str| kv.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        if let Some(x) = last("experiment") {
            e.experiment = x.parse()?;
        }
        let m = e.model;
        let n = last("n").map(|v| v.parse()).transpose().map_err(|_| Error::Config("bad n".into()))?.unwrap_or(m.n);
        let p = last("p").map(|v| harness::config::parse_p(v, n)).transpose()?.unwrap_or(m.p);
        let beta = last("beta").map(|v| v.parse()).transpose().map_err(|_| Error::Config("bad beta".into()))?.unwrap_or(m.beta);
        let seed = last("seed").map(|v| v.parse()).transpose().map_err(|_| Error::Config("bad seed".into()))?.unwrap_or(m.seed);
        e.model = spectra::model::ModelParams::new(n, p, beta, seed)?;
        for (k, v) in &kv {
            e.set(k, v)?;
        }
        Some(e)
    } else {
        None
    };
    let workers = a.workers.unwrap_or(1);
    let started = Instant::now();
    let (cfg, o) = harness::resume(ckpt, expect.as_ref(), workers, a.stop_after)?;
    let out = a.out.clone().or(cfg.output_path.clone());
    outcome(o, out.as_deref(), workers, started)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let res = match &cli.cmd {
        Cmd::SminTail(a) => run_cmd("smin-tail", a),
        Cmd::CorankCensus(a) => run_cmd("corank-census", a),
        Cmd::ZeroProb(a) => run_cmd("zero-prob", a),
        Cmd::PartitionCheck(a) => run_cmd("partition-check", a),
        Cmd::ExpansionAudit(a) => run_cmd("expansion-audit", a),
        Cmd::BoundsAudit(a) => run_cmd("bounds-audit", a),
        Cmd::T23Anticoncentration(a) => run_cmd("t23-anticoncentration", a),
        Cmd::NetAudit(a) => run_cmd("net-audit", a),
        Cmd::DistanceDiagnostic(a) => run_cmd("distance-diagnostic", a),
        Cmd::Resume { from, args } => resume_cmd(from, args),
        Cmd::Report { path, format } => report::report(path, format).map(|s| {
            print!("{s}");
            0
        }),
    };
    match res {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        super::Cli::command().debug_assert();
    }
}
