mod compare;
mod instance;
mod run;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use ccstream::graph::brute::brute_force_opt_capped;
use ccstream::{exact_agree, exact_disagree, Clustering, Error, InstanceKind, Objective, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use instance::{write_instance, InstanceSpec};
use run::{Algorithm, RunConfig};

#[derive(Parser)]
#[command(name = "ccstream", version, about = "Streaming correlation clustering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance as a stream file.
    Gen {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one algorithm and write its report.
    Run(Box<RunArgs>),
    /// Tabulate reports and check acceptance thresholds.
    Compare {
        /// Report files or directories of them.
        reports: Vec<PathBuf>,
    },
    /// Exact objective values of a clustering, with the brute-force optimum when small.
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
        /// JSON label array, or a run report.
        #[arg(long)]
        clustering: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 12)]
        oracle_cap: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Planted,
    PlantedRepair,
    RandomSigned,
    SparsePlanted,
    IndexGadget,
    DisjGadget,
    ThreeClusterGadget,
    Path,
    Cliques,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    kind: Option<Kind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, env = "CCSTREAM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    flip: f64,
    #[arg(long, default_value_t = 0)]
    repairs: usize,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    w_star: u64,
    #[arg(long, default_value_t = 0.8)]
    p_in: f64,
    #[arg(long, default_value_t = 0.2)]
    p_out: f64,
    /// Forces the index gadget bit or the disjointness answer.
    #[arg(long)]
    bit: Option<bool>,
    #[arg(long)]
    negatives: bool,
    /// Insert/delete pairs added on untouched pairs.
    #[arg(long, default_value_t = 0)]
    churn: usize,
}

impl InstanceArgs {
    fn spec(&self, k: Option<usize>) -> Result<InstanceSpec> {
        let kind = self.kind.ok_or_else(|| Error::InvalidInput("--kind is required".into()))?;
        let n = self.n.ok_or_else(|| Error::InvalidInput("--n is required".into()))?;
        let k = k.unwrap_or(2);
        let kind = match kind {
            Kind::Planted => InstanceKind::Planted { k, flip: self.flip },
            Kind::PlantedRepair => InstanceKind::PlantedRepair { k, repairs: self.repairs },
            Kind::RandomSigned => InstanceKind::RandomSigned { density: self.density, w_star: self.w_star },
            Kind::SparsePlanted => InstanceKind::SparsePlanted { k, p_in: self.p_in, p_out: self.p_out },
            Kind::IndexGadget => InstanceKind::IndexGadget { bit: self.bit },
            Kind::DisjGadget => InstanceKind::DisjGadget { intersecting: self.bit },
            Kind::ThreeClusterGadget => InstanceKind::ThreeClusterGadget,
            Kind::Path => InstanceKind::Path,
            Kind::Cliques => InstanceKind::Cliques { k, negatives: self.negatives },
        };
        Ok(InstanceSpec::Gen { kind, n, seed: self.seed, churn: self.churn })
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algorithm: Option<Algorithm>,
    /// Read the whole run configuration from JSON; `--out` still applies.
    #[arg(long, conflicts_with_all = ["algorithm", "input"])]
    config: Option<PathBuf>,
    /// Stream file; otherwise the instance is generated from the instance flags.
    #[arg(long = "in", conflicts_with = "kind")]
    input: Option<PathBuf>,
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value_t = 0.3)]
    eps: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    budget_edges: Option<usize>,
    #[arg(long)]
    budget_iters: Option<usize>,
    #[arg(long)]
    sample_size: Option<usize>,
    /// Multicut terminal pairs, e.g. `0-5,2-7`.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pairs: Option<Vec<(usize, usize)>>,
    /// Query clustering for bilinear-query (JSON label array).
    #[arg(long)]
    clustering: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    oracle_cap: usize,
    /// Report path; the trace goes next to it unless `--trace` is given.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').ok_or_else(|| format!("pair {s:?} is not of the form u-v"))?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

/// Labels from a JSON array or from the `clustering` field of a report.
fn read_labels(path: &PathBuf) -> Result<Vec<usize>> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let labels = if v.is_array() { v } else { v.get("clustering").cloned().unwrap_or_default() };
    serde_json::from_value(labels).map_err(|e| Error::InvalidInput(format!("{}: no clustering: {e}", path.display())))
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        if let Some(path) = &self.config {
            let mut cfg: RunConfig = serde_json::from_str(&fs::read_to_string(path)?)
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            if self.out.is_some() {
                cfg.out.clone_from(&self.out);
                cfg.trace = self.trace.clone().or_else(|| self.out.as_ref().map(|o| o.with_extension("trace.jsonl")));
            }
            return Ok(cfg);
        }
        let algorithm = self.algorithm.ok_or_else(|| Error::InvalidInput("--algorithm is required".into()))?;
        let instance = match &self.input {
            Some(path) => InstanceSpec::File { path: path.clone() },
            None => self.inst.spec(self.k)?,
        };
        let clustering = self.clustering.as_ref().map(read_labels).transpose()?;
        Ok(RunConfig {
            algorithm,
            eps: self.eps,
            delta: self.delta,
            k: self.k,
            t: self.t,
            seed: self.inst.seed,
            instance,
            budget_edges: self.budget_edges,
            budget_iters: self.budget_iters,
            sample_size: self.sample_size,
            pairs: self.pairs.clone(),
            clustering,
            oracle_cap: self.oracle_cap,
            out: self.out.clone(),
            trace: self.trace.clone().or_else(|| self.out.as_ref().map(|o| o.with_extension("trace.jsonl"))),
        })
    }
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn exit_for(err: &Error) -> ExitCode {
    if err.is_refusal() {
        ExitCode::from(2)
    } else if err.is_malformed_input() || matches!(err, Error::UnsupportedWeightClass(_) | Error::Json(_)) {
        ExitCode::from(3)
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_run(args: &RunArgs) -> Result<Option<Error>> {
    let cfg = args.config()?;
    let (report, err) = run::run(&cfg);
    let text = serde_json::to_string_pretty(&report)?;
    match &cfg.out {
        Some(path) => fs::write(path, text + "\n")?,
        None => emit(&(text + "\n"))?,
    }
    Ok(err)
}

fn cmd_compare(paths: &[PathBuf]) -> Result<()> {
    let files = compare::collect(paths)?;
    let mut reports = Vec::new();
    for f in files {
        let r = compare::load(&f)?;
        reports.push((f.file_name().map_or_else(|| f.display().to_string(), |s| s.to_string_lossy().into_owned()), r));
    }
    emit(&compare::summarize(&reports))
}

fn cmd_eval(input: &PathBuf, clustering: &PathBuf, k: Option<usize>, cap: usize) -> Result<()> {
    let loaded = InstanceSpec::File { path: input.clone() }.load()?;
    let snap = loaded.source.oracle_snapshot();
    let labels = read_labels(clustering)?;
    if labels.len() != snap.n {
        return Err(Error::InvalidInput(format!("{} labels for n = {}", labels.len(), snap.n)));
    }
    let c = Clustering::from_labels(&labels);
    let disagree = exact_disagree(&snap, &c);
    let mut out = serde_json::json!({
        "n": snap.n,
        "instance_digest": loaded.digest,
        "clusters": c.k(),
        "agree": exact_agree(&snap, &c),
        "disagree": disagree,
        "total_weight": snap.total_abs_weight(),
    });
    if snap.n <= cap {
        let (_, opt) = brute_force_opt_capped(&snap, Objective::MinDisagree, k, cap)?;
        out["oracle_min_disagree"] = opt.into();
        if opt > 0 {
            out["ratio"] = (disagree as f64 / opt as f64).into();
        } else if disagree == 0 {
            out["ratio"] = 1.0.into();
        }
    }
    emit(&(serde_json::to_string_pretty(&out)? + "\n"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Gen { inst, k, out } => inst.spec(*k).and_then(|spec| write_instance(&spec, out)).map(|l| {
            eprintln!("wrote {} updates on {} nodes, digest {}", l.source.len(), l.source.n(), l.digest);
            None
        }),
        Command::Run(args) => cmd_run(args),
        Command::Compare { reports } => cmd_compare(reports).map(|_| None),
        Command::Eval { input, clustering, k, oracle_cap } => cmd_eval(input, clustering, *k, *oracle_cap).map(|_| None),
    };
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(err)) => {
            eprintln!("error: {err}");
            exit_for(&err)
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_for(&err)
        }
    }
}
