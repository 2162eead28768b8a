//! Command-line front end: stream generation, training, protocol
//! evaluation, grid search, bound verification and tree inspection.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or bound failure,
//! 3 I/O failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use apst::harness::{
    self, chernoff_rows, grid_search, ladder_rows, rows_to_csv, run_protocol_full, summarize, verify_bounds,
    GridSpec, Model, ModelKind, ModelSpec, Protocol, ProtocolOptions,
};
use apst::sequences::{format_mask, format_symbols, load_dataset, parse_side_info};
use apst::synthgen::{self, derive_seeds, MotifMode, MotifSpec};
use apst::{
    from_json_deep, Alphabet, ApstConfig, ApproxSuffixTree, Dataset, Error, InsertPolicy, Mode, RoundRecord,
    WeightParams,
};

#[derive(Parser, Debug)]
#[command(name = "apst", version, about = "Approximate prediction suffix trees")]
struct Cli {
    /// Omit the timestamp and zero runtime fields so repeated runs are
    /// byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,

    /// Output format of the result printed after the metadata line.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Confidence parameter. Accepted for compatibility; no algorithm uses it.
    #[arg(long, global = true)]
    delta: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic motif stream with its mask and a JSON sidecar.
    Generate(GenerateArgs),
    /// Train online over a whole stream.
    Train(TrainArgs),
    /// Run the train/validate/test protocol for one configuration.
    Evaluate(EvaluateArgs),
    /// Run a hyperparameter grid and select the best configuration per seed.
    Grid(GridArgs),
    /// Check the weight-mass and mistake bounds on a trace, or print the
    /// bound tables.
    VerifyBounds(VerifyArgs),
    /// Summarize or dump a saved tree.
    InspectTree(InspectArgs),
}

#[derive(Args, Debug, Clone)]
struct MotifArgs {
    /// Motif symbols separated by commas; repeat for a mixture.
    #[arg(long = "motif", allow_hyphen_values = true, required = true)]
    motifs: Vec<String>,
    /// Repetitions of the first motif.
    #[arg(long, conflicts_with = "length")]
    reps: Option<usize>,
    /// Target length of a uniform motif mixture.
    #[arg(long)]
    length: Option<usize>,
    /// Per-symbol corruption probability.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Multiclass corruption never keeps the original symbol.
    #[arg(long)]
    exclude_original: bool,
    /// Mask only positions whose symbol actually changed.
    #[arg(long)]
    mask_effective_only: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    motif: MotifArgs,
    #[arg(long, default_value_t = 2)]
    alphabet: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sequence file; the mask and sidecar go next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 2)]
    alphabet: usize,
    #[arg(long)]
    side_info: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Pst,
    Apst,
    ApstMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Unbounded,
    SelfBounded,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unbounded => Mode::Unbounded,
            ModeArg::SelfBounded => Mode::SelfBounded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InsertArg {
    ExactOnly,
    FullNeighborhood,
}

impl From<InsertArg> for InsertPolicy {
    fn from(p: InsertArg) -> Self {
        match p {
            InsertArg::ExactOnly => InsertPolicy::ExactOnly,
            InsertArg::FullNeighborhood => InsertPolicy::FullNeighborhood,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    #[value(name = "synthetic-402040")]
    Synthetic402040,
    #[value(name = "real-3070")]
    Real3070,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Synthetic402040 => Protocol::Synthetic402040,
            ProtocolArg::Real3070 => Protocol::Real3070,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Apst)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = ModeArg::SelfBounded)]
    mode: ModeArg,
    #[arg(long, default_value_t = 4.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.9)]
    xi: f64,
    #[arg(long, default_value_t = 1)]
    epsilon: usize,
    #[arg(long, value_enum, default_value_t = InsertArg::ExactOnly)]
    insert_policy: InsertArg,
    /// Multiplier on gamma in the multiclass step size.
    #[arg(long, default_value_t = 2.0)]
    tau_gamma_factor: f64,
}

impl ModelArgs {
    fn spec(&self) -> apst::Result<ModelSpec> {
        let config = || -> apst::Result<ApstConfig> {
            let c = ApstConfig::new(WeightParams::new(self.lambda, self.xi, self.epsilon)?, self.mode.into())
                .with_insert_policy(self.insert_policy.into());
            c.validate()?;
            Ok(c)
        };
        Ok(match self.model {
            ModelArg::Pst => ModelSpec::Pst,
            ModelArg::Apst => ModelSpec::Apst { config: config()? },
            ModelArg::ApstMc => ModelSpec::ApstMc {
                config: config()?,
                tau_gamma_factor: self.tau_gamma_factor,
            },
        })
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-round JSONL trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Final hypothesis as JSON.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = ProtocolArg::Synthetic402040)]
    protocol: ProtocolArg,
    #[arg(long)]
    freeze_after_train: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Stream file; without it streams are generated from the motif flags.
    #[arg(long, conflicts_with = "motifs")]
    data: Option<PathBuf>,
    #[arg(long = "motif", allow_hyphen_values = true)]
    motifs: Vec<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Number of generated streams.
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long, default_value_t = 2)]
    alphabet: usize,
    #[arg(long)]
    side_info: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    xis: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_enum)]
    models: Option<Vec<ModelArg>>,
    #[arg(long, value_enum, default_value_t = ModeArg::SelfBounded)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = InsertArg::ExactOnly)]
    insert_policy: InsertArg,
    #[arg(long, default_value_t = 2.0)]
    tau_gamma_factor: f64,
    #[arg(long, value_enum, default_value_t = ProtocolArg::Synthetic402040)]
    protocol: ProtocolArg,
    #[arg(long)]
    freeze_after_train: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// CSV report, one row per configuration and seed.
    #[arg(long)]
    report: Option<PathBuf>,
    /// JSON summary with best picks and the best-lambda histogram.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableArg {
    Ladder,
    Chernoff,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, requires = "hypothesis", conflicts_with = "table")]
    trace: Option<PathBuf>,
    #[arg(long, requires = "trace")]
    hypothesis: Option<PathBuf>,
    /// Side-information file for models with n > 0.
    #[arg(long)]
    side_info: Option<PathBuf>,
    /// Print a bound table instead of checking a trace.
    #[arg(long, value_enum)]
    table: Option<TableArg>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4,8,12")]
    lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.7,0.9,0.99")]
    xis: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    epsilons: Vec<usize>,
    /// Largest round index of the ladder table.
    #[arg(long, default_value_t = 30)]
    max_t: usize,
    /// Depths past ceil(lambda + epsilon) in the Chernoff table.
    #[arg(long, default_value_t = 20)]
    extra_depth: usize,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    hypothesis: PathBuf,
    /// Class tree of a multiclass model.
    #[arg(long, default_value_t = 0)]
    class: usize,
    /// Also list every node.
    #[arg(long)]
    nodes: bool,
}

/// Failures mapped to exit codes.
enum Failure {
    Usage(String),
    Invalid(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => Failure::Io(io.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Ctx {
    no_timestamp: bool,
    format: Format,
}

impl Ctx {
    fn header(&self, command: &str, seed: Option<u64>, config: Value) -> CliResult<()> {
        let mut meta = json!({
            "tool": "apst",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "rng": synthgen::RNG_NAME,
            "config": config,
        });
        if !self.no_timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            meta["timestamp"] = json!(secs);
        }
        println!("{meta}");
        Ok(())
    }

    fn emit<T: Serialize>(&self, value: &T, csv_rows: Option<String>) -> CliResult<()> {
        let mut out = std::io::stdout().lock();
        match (self.format, csv_rows) {
            (Format::Csv, Some(rows)) => out.write_all(rows.as_bytes())?,
            _ => writeln!(out, "{}", serde_json::to_string_pretty(value).map_err(Error::from)?)?,
        }
        Ok(())
    }

    fn runtime(&self, ms: f64) -> f64 {
        if self.no_timestamp {
            0.0
        } else {
            ms
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(delta) = cli.delta {
        log::warn!("--delta {delta} is accepted but not used by any learner");
    }
    let ctx = Ctx {
        no_timestamp: cli.no_timestamp,
        format: cli.format,
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Grid(a) => cmd_grid(&ctx, a),
        Command::VerifyBounds(a) => cmd_verify(&ctx, a),
        Command::InspectTree(a) => cmd_inspect(&ctx, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("I/O error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn alphabet(k: usize) -> CliResult<Alphabet> {
    Ok(Alphabet::new(k)?)
}

fn motif_spec(args: &MotifArgs, alphabet: Alphabet, seed: u64) -> CliResult<MotifSpec> {
    let motifs = args
        .motifs
        .iter()
        .map(|m| synthgen::parse_motif(m, alphabet))
        .collect::<apst::Result<Vec<_>>>()?;
    let mode = match (args.reps, args.length) {
        (Some(repetitions), None) => MotifMode::RepeatSingle { repetitions },
        (None, Some(target_length)) => MotifMode::UniformMixture { target_length },
        _ => return Err(Failure::Usage("exactly one of --reps or --length is required".into())),
    };
    let spec = MotifSpec {
        alphabet,
        motifs,
        mode,
        noise_p: args.noise,
        seed,
        exclude_original: args.exclude_original,
        mask_effective_only: args.mask_effective_only,
    };
    spec.validate()?;
    Ok(spec)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn cmd_generate(ctx: &Ctx, a: GenerateArgs) -> CliResult<u8> {
    let alphabet = alphabet(a.alphabet)?;
    let spec = motif_spec(&a.motif, alphabet, a.seed)?;
    let ds = synthgen::generate(&spec)?;
    let mask = ds.corruption_mask.clone().unwrap_or_default();
    let mask_path = a.out.with_extension("mask");
    let sidecar_path = a.out.with_extension("json");
    let sidecar = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "rng": synthgen::RNG_NAME,
        "seed": a.seed,
        "spec": spec,
        "length": ds.len(),
        "corrupted": mask.iter().filter(|&&m| m).count(),
    });
    write_file(&a.out, &format_symbols(&ds.output, alphabet))?;
    write_file(&mask_path, &format_mask(&mask))?;
    write_file(&sidecar_path, &(serde_json::to_string_pretty(&sidecar).map_err(Error::from)? + "\n"))?;
    ctx.header("generate", Some(a.seed), json!(spec))?;
    ctx.emit(
        &json!({
            "sequence": a.out,
            "mask": mask_path,
            "sidecar": sidecar_path,
            "length": ds.len(),
            "corrupted": sidecar["corrupted"],
        }),
        None,
    )?;
    Ok(0)
}

fn load(args: &DataArgs) -> CliResult<Dataset> {
    let alphabet = alphabet(args.alphabet)?;
    for p in [Some(&args.data), args.side_info.as_ref(), args.mask.as_ref()].into_iter().flatten() {
        if !p.exists() {
            return Err(Failure::Io(format!("{}: no such file", p.display())));
        }
    }
    Ok(load_dataset(&args.data, alphabet, args.side_info.as_deref(), args.mask.as_deref())?)
}

fn write_trace(path: &Path, trace: &[RoundRecord]) -> CliResult<()> {
    let mut text = String::with_capacity(trace.len() * 200);
    for rec in trace {
        text.push_str(&serde_json::to_string(rec).map_err(Error::from)?);
        text.push('\n');
    }
    write_file(path, &text)
}

fn read_trace(path: &Path) -> CliResult<Vec<RoundRecord>> {
    read_file(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                Failure::Invalid(
                    Error::Parse {
                        line: i + 1,
                        msg: e.to_string(),
                    }
                    .to_string(),
                )
            })
        })
        .collect()
}

#[derive(Serialize)]
struct TrainSummary {
    model: ModelKind,
    rounds: usize,
    mistakes: usize,
    updates: usize,
    cumulative_loss: f64,
    cumulative_sq_loss: f64,
    accuracy: f64,
    final_depth: usize,
    node_count: usize,
    runtime_ms: f64,
}

fn cmd_train(ctx: &Ctx, a: TrainArgs) -> CliResult<u8> {
    let ds = load(&a.data)?;
    let spec = a.model.spec()?;
    let start = std::time::Instant::now();
    let mut model = Model::new(&spec, ds.alphabet, ds.input.dim())?;
    let trace = (1..=ds.len())
        .map(|t| model.play(&ds, t, true))
        .collect::<apst::Result<Vec<_>>>()?;
    let runtime_ms = ctx.runtime(start.elapsed().as_secs_f64() * 1e3);
    let clean: Vec<&RoundRecord> = trace.iter().filter(|r| ds.is_clean(r.t)).collect();
    let hits = clean.iter().filter(|r| r.y_hat == r.y).count();
    let summary = TrainSummary {
        model: spec.kind(),
        rounds: trace.len(),
        mistakes: trace.iter().filter(|r| r.y_hat != r.y).count(),
        updates: trace.iter().filter(|r| r.updated).count(),
        cumulative_loss: trace.iter().map(|r| r.loss).sum(),
        cumulative_sq_loss: trace.iter().map(|r| r.loss * r.loss).sum(),
        accuracy: if clean.is_empty() { f64::NAN } else { hits as f64 / clean.len() as f64 },
        final_depth: model.depth(),
        node_count: model.node_count(),
        runtime_ms,
    };
    if let Some(p) = &a.trace {
        write_trace(p, &trace)?;
    }
    if let Some(p) = &a.save {
        write_file(p, &model.to_json()?)?;
    }
    ctx.header("train", Some(a.seed), json!(spec))?;
    let csv = summary_csv(&summary)?;
    ctx.emit(&summary, Some(csv))?;
    Ok(0)
}

fn summary_csv<T: Serialize>(row: &T) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(row).map_err(|e| Failure::Invalid(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Failure::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Invalid(e.to_string()))
}

fn cmd_evaluate(ctx: &Ctx, a: EvaluateArgs) -> CliResult<u8> {
    let ds = load(&a.data)?;
    let spec = a.model.spec()?;
    let opts = ProtocolOptions {
        freeze_after_train: a.freeze_after_train,
    };
    let mut run = run_protocol_full(&ds, &spec, a.protocol.into(), opts, a.seed)?;
    run.row.runtime_ms = ctx.runtime(run.row.runtime_ms);
    if let Some(p) = &a.trace {
        write_trace(p, &run.trace)?;
    }
    if let Some(p) = &a.save {
        write_file(p, &run.model.to_json()?)?;
    }
    ctx.header("evaluate", Some(a.seed), json!({ "model": spec, "protocol": Protocol::from(a.protocol), "options": opts }))?;
    ctx.emit(&run.row, Some(rows_to_csv(std::slice::from_ref(&run.row))?))?;
    Ok(0)
}

fn cmd_grid(ctx: &Ctx, a: GridArgs) -> CliResult<u8> {
    let alphabet = alphabet(a.alphabet)?;
    let datasets: Vec<(u64, Dataset)> = match &a.data {
        Some(path) => {
            let args = DataArgs {
                data: path.clone(),
                alphabet: a.alphabet,
                side_info: a.side_info.clone(),
                mask: a.mask.clone(),
            };
            vec![(a.seed, load(&args)?)]
        }
        None => {
            if a.motifs.is_empty() {
                return Err(Failure::Usage("grid needs --data or --motif".into()));
            }
            let motif_args = MotifArgs {
                motifs: a.motifs.clone(),
                reps: a.reps,
                length: a.length,
                noise: a.noise,
                exclude_original: false,
                mask_effective_only: false,
            };
            derive_seeds(a.seed, a.seeds)
                .into_iter()
                .map(|s| {
                    let spec = motif_spec(&motif_args, alphabet, s)?;
                    Ok((s, synthgen::generate(&spec)?))
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let mut grid = GridSpec::default_for(alphabet);
    if let Some(v) = &a.lambdas {
        grid.lambdas = v.clone();
    }
    if let Some(v) = &a.xis {
        grid.xis = v.clone();
    }
    if let Some(v) = &a.epsilons {
        grid.epsilons = v.clone();
    }
    if let Some(v) = &a.models {
        grid.models = v
            .iter()
            .map(|m| match m {
                ModelArg::Pst => ModelKind::Pst,
                ModelArg::Apst => ModelKind::Apst,
                ModelArg::ApstMc => ModelKind::ApstMc,
            })
            .collect();
    }
    grid.mode = a.mode.into();
    grid.insert_policy = a.insert_policy.into();
    grid.tau_gamma_factor = a.tau_gamma_factor;
    let opts = ProtocolOptions {
        freeze_after_train: a.freeze_after_train,
    };
    let mut rows = grid_search(&datasets, &grid, a.protocol.into(), opts, a.jobs.max(1))?;
    for r in &mut rows {
        r.runtime_ms = ctx.runtime(r.runtime_ms);
    }
    let csv = rows_to_csv(&rows)?;
    let summary = summarize(&rows);
    if let Some(p) = &a.report {
        write_file(p, &csv)?;
    }
    if let Some(p) = &a.summary {
        write_file(p, &(serde_json::to_string_pretty(&summary).map_err(Error::from)? + "\n"))?;
    }
    ctx.header(
        "grid",
        Some(a.seed),
        json!({ "grid": grid, "protocol": Protocol::from(a.protocol), "options": opts, "streams": datasets.len() }),
    )?;
    ctx.emit(&summary, Some(csv))?;
    Ok(0)
}

fn cmd_verify(ctx: &Ctx, a: VerifyArgs) -> CliResult<u8> {
    if let Some(table) = a.table {
        let ok = match table {
            TableArg::Ladder => {
                let ts: Vec<usize> = (2..=a.max_t.max(2)).collect();
                let rows = ladder_rows(&a.lambdas, &a.xis, &a.epsilons, &ts)?;
                ctx.header("verify-bounds", None, json!({ "table": "ladder", "lambdas": a.lambdas, "xis": a.xis, "epsilons": a.epsilons, "max_t": a.max_t }))?;
                ctx.emit(&rows, Some(table_csv(&rows)?))?;
                rows.iter().all(|r| r.passed)
            }
            TableArg::Chernoff => {
                let rows = chernoff_rows(&a.lambdas, &a.xis, &a.epsilons, a.extra_depth)?;
                ctx.header("verify-bounds", None, json!({ "table": "chernoff", "lambdas": a.lambdas, "xis": a.xis, "epsilons": a.epsilons, "extra_depth": a.extra_depth }))?;
                ctx.emit(&rows, Some(table_csv(&rows)?))?;
                rows.iter().all(|r| r.passed)
            }
        };
        return Ok(if ok { 0 } else { 2 });
    }
    let (Some(trace_path), Some(hyp_path)) = (&a.trace, &a.hypothesis) else {
        return Err(Failure::Usage("verify-bounds needs --trace and --hypothesis, or --table".into()));
    };
    let trace = read_trace(trace_path)?;
    let model = Model::from_json(&read_file(hyp_path)?)?;
    let inputs = match &a.side_info {
        Some(p) => Some(parse_side_info(&read_file(p)?)?),
        None => None,
    };
    let report = verify_bounds(&trace, &model, inputs.as_ref())?;
    ctx.header(
        "verify-bounds",
        None,
        json!({ "model": model.kind(), "config": harness::model_config(&model), "rounds": trace.len() }),
    )?;
    ctx.emit(&report, Some(table_csv(&report.checks)?))?;
    Ok(if report.passed { 0 } else { 2 })
}

fn table_csv<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Invalid(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Invalid(e.to_string()))
}

#[derive(Serialize)]
struct NodeRow {
    /// The node's string, oldest symbol first.
    string: String,
    depth: usize,
    score: f64,
}

fn cmd_inspect(ctx: &Ctx, a: InspectArgs) -> CliResult<u8> {
    let text = read_file(&a.hypothesis)?;
    let (model_kind, tree): (Option<ModelKind>, ApproxSuffixTree) = match Model::from_json(&text) {
        Ok(Model::Pst(m)) => (Some(ModelKind::Pst), m.hyp.tree),
        Ok(Model::Apst(m)) => (Some(ModelKind::Apst), m.hyp.tree),
        Ok(Model::ApstMc(m)) => {
            let k = m.classes.len();
            let class = m
                .classes
                .into_iter()
                .nth(a.class)
                .ok_or_else(|| Failure::Invalid(format!("class {} out of range (K = {k})", a.class)))?;
            (Some(ModelKind::ApstMc), class.hyp.tree)
        }
        Err(_) => (None, from_json_deep::<ApproxSuffixTree>(&text)?),
    };
    let alphabet = Alphabet::new(tree.alphabet_size())?;
    let mut by_depth = vec![0usize; tree.max_depth() + 1];
    let rows: Vec<NodeRow> = tree
        .node_ids()
        .map(|id| {
            by_depth[tree.depth(id)] += 1;
            NodeRow {
                string: format_symbols(&tree.spelled(id), alphabet).trim_end().to_string(),
                depth: tree.depth(id),
                score: tree.score(id),
            }
        })
        .collect();
    let summary = json!({
        "model": model_kind,
        "alphabet_size": tree.alphabet_size(),
        "node_count": tree.node_count(),
        "max_depth": tree.max_depth(),
        "nodes_per_depth": &by_depth[1..],
        "score_norm_sq": tree.score_norm_sq(),
        "suffix_closed": tree.is_suffix_closed(),
    });
    ctx.header("inspect-tree", None, json!({ "hypothesis": a.hypothesis, "class": a.class }))?;
    if a.nodes {
        ctx.emit(&json!({ "summary": summary, "nodes": rows }), Some(table_csv(&rows)?))?;
    } else {
        ctx.emit(&summary, None)?;
    }
    Ok(0)
}
