//! Command-line front end: argument and config-file parsing, validation,
//! dispatch to the engine and sizing routines, and CSV output.
//!
//! A `--config FILE` of flat `key=value` lines is spliced in right after the
//! subcommand, so flags given on the command line override it and unknown
//! keys are rejected by the same parser as unknown flags.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::engine::{niche_maintenance_probability, run_observed, AlgorithmConfig, ReplacementScheme};
use crate::error::{Error, Result};
use crate::genome::Genome;
use crate::problems::{
    default_signal, pareto_oracle_bruteforce, ProblemKind, ProblemSpec, RepresentativeMode,
};
use crate::replacement::{RtsConfig, TiePolicy};
use crate::rng::RngStream;
use crate::sizing::{
    bisection_min_popsize, exact_crossing_md, max_competing_substructures, predict_eda_popsize,
    predict_niching_popsize, scalability_sweep, BisectionConfig, SizingParams, SweepRecord,
};
use crate::variation::{VariationConfig, VariationKind};

/// Header of sweep and bisection output.
pub const SWEEP_HEADER: [&str; 15] = [
    "kind", "m", "k", "d", "m_d", "ell", "algo", "replacement", "mode", "n_min_mean", "n_min_std",
    "evals_mean", "evals_std", "repeats", "master_seed",
];

#[derive(Parser, Debug)]
#[command(name = "moeda", version, about = "Multiobjective EDA experiments on trap and onemax problems")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Subcommand, Debug)]
enum CommandArgs {
    /// Evaluate genomes on a problem.
    Evaluate(Flags),
    /// Enumerate the Pareto-optimal genotypes and objective points.
    Oracle(Flags),
    /// Run the algorithm and report coverage.
    Run(Flags),
    /// Bisection for the minimum population size on one problem.
    Bisect(Flags),
    /// Bisection over a family of problem sizes.
    Sweep(Flags),
    /// Closed-form population-sizing predictions.
    Predict(Flags),
    /// Per-point probability of keeping each objective point to the end.
    NicheProb(Flags),
}

const SUBCOMMANDS: [&str; 7] = ["evaluate", "oracle", "run", "bisect", "sweep", "predict", "niche-prob"];

#[derive(clap::Args, Debug, Clone)]
struct Flags {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "trap-invtrap")]
    problem: String,
    /// Number of partitions; a comma-separated list for sweeps.
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    /// Genome length; a comma-separated list for sweeps.
    #[arg(long, value_delimiter = ',')]
    ell: Vec<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<f64>,
    /// Conflicting partitions for the overlap problem: a count or `auto`.
    #[arg(long)]
    md: Option<String>,
    #[arg(long, default_value = "mecga")]
    algo: String,
    #[arg(long, default_value = "rts")]
    replacement: String,
    #[arg(long)]
    pc: Option<f64>,
    #[arg(long)]
    pm: Option<f64>,
    /// RTS window size (default min(n, ell)).
    #[arg(long)]
    w: Option<usize>,
    #[arg(long)]
    tie_policy: Option<String>,
    /// Largest group the model search may form.
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    cap_multiplier: Option<usize>,
    #[arg(long)]
    max_generations: Option<usize>,
    #[arg(long)]
    early_stop: bool,
    #[arg(long, default_value = "genotype")]
    mode: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 16)]
    n_start: usize,
    #[arg(long, default_value_t = 1 << 22)]
    n_max: usize,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output path, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: String,
    /// Per-generation trace CSV (run command).
    #[arg(long)]
    trace: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// Maintenance horizon in generations (default 5 ell).
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    n_opt: Option<u64>,
    /// Genomes to evaluate, comma-separated bit strings.
    #[arg(long, value_delimiter = ',')]
    genome: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Evaluate,
    Oracle,
    Run,
    Bisect,
    Sweep,
    Predict,
    NicheProb,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictConfig {
    pub k: usize,
    pub m: usize,
    pub params: SizingParams,
    /// `n_opt` came from the command line rather than 2^m_d.
    pub n_opt_given: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub problems: Vec<ProblemSpec>,
    pub algo: AlgorithmConfig,
    pub mode: RepresentativeMode,
    pub seed: u64,
    pub seed_given: bool,
    pub runs: usize,
    pub bisection: BisectionConfig,
    pub n: Option<usize>,
    pub jobs: Option<usize>,
    pub out: String,
    pub trace: Option<String>,
    pub predict: Option<PredictConfig>,
    pub genomes: Vec<Genome>,
}

fn usage(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Usage(format!("--{field}: {msg}"))
}

/// Splices `--config` file entries in after the subcommand.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    if argv.len() < 2 || !SUBCOMMANDS.contains(&argv[1].as_str()) {
        return Ok(argv);
    }
    let text = fs::read_to_string(&path).map_err(|e| usage("config", format!("{path}: {e}")))?;
    let mut extra = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage("config", format!("{path}:{}: expected key=value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(usage("config", "config files cannot include other config files"));
        }
        if key == "early-stop" {
            match value {
                "true" | "1" | "yes" => extra.push("--early-stop".to_string()),
                "false" | "0" | "no" => {}
                other => return Err(usage("early-stop", format!("expected true or false, got {other:?}"))),
            }
            continue;
        }
        extra.push(format!("--{key}"));
        extra.push(value.to_string());
    }
    let mut out = argv[..2].to_vec();
    out.extend(extra);
    out.extend(argv[2..].iter().cloned());
    Ok(out)
}

fn clap_command() -> clap::Command {
    let mut cmd = Cli::command();
    for name in SUBCOMMANDS {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    cmd
}

fn parse_cli(argv: Vec<String>) -> std::result::Result<Cli, clap::Error> {
    let matches = clap_command().try_get_matches_from(argv)?;
    Cli::from_arg_matches(&matches)
}

/// Parses and validates a full argument vector (program name first).
pub fn parse_config(argv: Vec<String>) -> Result<ExperimentConfig> {
    let cli = parse_cli(expand_config(argv)?).map_err(|e| Error::Usage(e.to_string()))?;
    build_config(cli)
}

fn build_config(cli: Cli) -> Result<ExperimentConfig> {
    let (command, f) = match cli.command {
        CommandArgs::Evaluate(f) => (Command::Evaluate, f),
        CommandArgs::Oracle(f) => (Command::Oracle, f),
        CommandArgs::Run(f) => (Command::Run, f),
        CommandArgs::Bisect(f) => (Command::Bisect, f),
        CommandArgs::Sweep(f) => (Command::Sweep, f),
        CommandArgs::Predict(f) => (Command::Predict, f),
        CommandArgs::NicheProb(f) => (Command::NicheProb, f),
    };

    let (problems, predict) = if command == Command::Predict {
        (Vec::new(), Some(predict_config(&f)?))
    } else {
        (problem_family(&f)?, None)
    };
    if matches!(command, Command::Evaluate | Command::Oracle | Command::Run | Command::Bisect | Command::NicheProb)
        && problems.len() != 1
    {
        return Err(usage("m", "this command takes a single problem size"));
    }

    let algo = algorithm_config(&f)?;
    let mode: RepresentativeMode = f.mode.parse().map_err(|e| usage("mode", e))?;
    let runs = f.runs.unwrap_or(match command {
        Command::Run => 1,
        Command::NicheProb => 30,
        _ => 10,
    });
    if runs == 0 {
        return Err(usage("runs", "must be >= 1"));
    }
    if f.repeats == 0 {
        return Err(usage("repeats", "must be >= 1"));
    }
    if f.n_start < 2 {
        return Err(usage("n-start", "must be >= 2"));
    }
    if f.n_max < f.n_start {
        return Err(usage("n-max", "must be >= n-start"));
    }
    if let Some(n) = f.n {
        if n < 2 {
            return Err(usage("n", "population size must be >= 2"));
        }
        if let ReplacementScheme::Rts(RtsConfig { window: Some(w), .. }) = &algo.replacement {
            if *w > n {
                return Err(usage("w", format!("window {w} exceeds population size {n}")));
            }
        }
    } else if matches!(command, Command::Run | Command::NicheProb) {
        return Err(usage("n", "population size is required for this command"));
    }
    if f.jobs == Some(0) {
        return Err(usage("jobs", "must be >= 1"));
    }
    let genomes = f
        .genome
        .iter()
        .map(|s| s.parse::<Genome>().map_err(|e| usage("genome", e)))
        .collect::<Result<Vec<_>>>()?;
    if command == Command::Evaluate {
        if genomes.is_empty() {
            return Err(usage("genome", "at least one genome is required"));
        }
        if let Some(g) = genomes.iter().find(|g| g.len() != problems[0].ell()) {
            return Err(usage("genome", format!("{g} does not have length {}", problems[0].ell())));
        }
    }
    let (seed, seed_given) = match f.seed {
        Some(s) => (s, true),
        None => (generated_seed(), false),
    };

    Ok(ExperimentConfig {
        command,
        problems,
        algo,
        mode,
        seed,
        seed_given,
        runs,
        bisection: BisectionConfig {
            n_start: f.n_start,
            runs,
            repeats: f.repeats,
            n_max: f.n_max,
            deadline: None,
        },
        n: f.n,
        jobs: f.jobs,
        out: f.out,
        trace: f.trace,
        predict,
        genomes,
    })
}

fn generated_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    crate::rng::derive_seed(nanos, &[std::process::id() as u64])
}

fn signal_for(k: usize, d: Option<f64>) -> Result<f64> {
    match d.or_else(|| default_signal(k)) {
        Some(d) if d > 0.0 && d < 1.0 => Ok(d),
        Some(d) => Err(usage("d", format!("signal difference must lie in (0, 1), got {d}"))),
        None => Err(usage("d", format!("no default signal difference for k = {k}; give --d"))),
    }
}

fn problem_family(f: &Flags) -> Result<Vec<ProblemSpec>> {
    let kind: ProblemKind = f.problem.parse().map_err(|e| usage("problem", e))?;
    if kind == ProblemKind::OnemaxZeromax {
        for (given, name) in [(!f.m.is_empty(), "m"), (f.k.is_some(), "k"), (f.d.is_some(), "d"), (f.md.is_some(), "md")] {
            if given {
                return Err(usage(name, "does not apply to onemax-zeromax; give --ell"));
            }
        }
        if f.ell.is_empty() {
            return Err(usage("ell", "onemax-zeromax needs a genome length"));
        }
        return f
            .ell
            .iter()
            .map(|&ell| ProblemSpec::onemax_zeromax(ell).map_err(|e| usage("ell", e)))
            .collect();
    }

    let k = f.k.unwrap_or(3);
    if k < 2 {
        return Err(usage("k", "trap partitions need k >= 2"));
    }
    let d = signal_for(k, f.d)?;
    let ms: Vec<usize> = match (f.m.is_empty(), f.ell.is_empty()) {
        (false, false) => return Err(usage("ell", "give either --m or --ell for trap problems, not both")),
        (true, true) => return Err(usage("m", "the number of partitions is required")),
        (false, true) => f.m.clone(),
        (true, false) => f
            .ell
            .iter()
            .map(|&ell| {
                if ell % k == 0 && ell > 0 {
                    Ok(ell / k)
                } else {
                    Err(usage("ell", format!("{ell} is not a positive multiple of k = {k}")))
                }
            })
            .collect::<Result<_>>()?,
    };
    ms.iter()
        .map(|&m| {
            if m == 0 {
                return Err(usage("m", "must be >= 1"));
            }
            let md = match f.md.as_deref() {
                None | Some("auto") => None,
                Some(s) => {
                    let md: usize = s.parse().map_err(|_| usage("md", format!("expected a count or auto, got {s:?}")))?;
                    if md > m {
                        return Err(usage("md", format!("m_d = {md} exceeds m = {m}")));
                    }
                    Some(md)
                }
            };
            match kind {
                ProblemKind::Overlap => {
                    let md = md.unwrap_or_else(|| max_competing_substructures(m, k));
                    ProblemSpec::overlap(m, k, d, md).map_err(|e| usage("m", e))
                }
                _ => {
                    if f.md.is_some() {
                        return Err(usage("md", "only applies to the overlap problem"));
                    }
                    ProblemSpec::trap_invtrap(m, k, d).map_err(|e| usage("m", e))
                }
            }
        })
        .collect()
}

fn algorithm_config(f: &Flags) -> Result<AlgorithmConfig> {
    let kind: VariationKind = f.algo.parse().map_err(|e| usage("algo", e))?;
    let mut replacement: ReplacementScheme = f.replacement.parse().map_err(|e| usage("replacement", e))?;
    match &mut replacement {
        ReplacementScheme::Rts(cfg) => {
            if let Some(w) = f.w {
                if w == 0 {
                    return Err(usage("w", "window must be >= 1"));
                }
                cfg.window = Some(w);
            }
            if let Some(t) = &f.tie_policy {
                cfg.tie_policy = t.parse::<TiePolicy>().map_err(|e| usage("tie-policy", e))?;
            }
        }
        ReplacementScheme::Elitist => {
            if f.w.is_some() {
                return Err(usage("w", "the window only applies to rts replacement"));
            }
            if f.tie_policy.is_some() {
                return Err(usage("tie-policy", "only applies to rts replacement"));
            }
        }
    }
    let mut algo = AlgorithmConfig::new(kind, replacement);
    let mut variation = VariationConfig::new(kind);
    if let Some(pc) = f.pc {
        if !(0.0..=1.0).contains(&pc) {
            return Err(usage("pc", format!("probability must lie in [0, 1], got {pc}")));
        }
        variation.pc = pc;
    }
    if let Some(pm) = f.pm {
        if !(0.0..=1.0).contains(&pm) {
            return Err(usage("pm", format!("probability must lie in [0, 1], got {pm}")));
        }
        variation.pm = Some(pm);
    }
    if let Some(k_max) = f.k_max {
        if k_max == 0 {
            return Err(usage("k-max", "must be >= 1"));
        }
        variation.max_group = k_max;
    }
    algo.variation = variation;
    if let Some(c) = f.cap_multiplier {
        if c == 0 {
            return Err(usage("cap-multiplier", "must be >= 1"));
        }
        algo.cap_multiplier = c;
    }
    algo.max_generations = f.max_generations;
    algo.early_stop = f.early_stop;
    Ok(algo)
}

fn predict_config(f: &Flags) -> Result<PredictConfig> {
    let k = f.k.unwrap_or(3);
    if k == 0 {
        return Err(usage("k", "must be >= 1"));
    }
    let m = match f.m.as_slice() {
        [m] => *m,
        [] => return Err(usage("m", "the number of partitions is required")),
        _ => return Err(usage("m", "predict takes a single m")),
    };
    if m < 2 {
        return Err(usage("m", "predictions need m >= 2"));
    }
    if !(f.c1 > 0.0) {
        return Err(usage("c1", "must be > 0"));
    }
    if !(f.c2 > 0.0) {
        return Err(usage("c2", "must be > 0"));
    }
    if !(f.gamma > 0.0 && f.gamma < 1.0) {
        return Err(usage("gamma", "must lie in (0, 1)"));
    }
    let m_d = max_competing_substructures(m, k);
    let n_opt = f.n_opt.unwrap_or(1u64 << m_d.min(63));
    if n_opt < 2 {
        return Err(usage("n-opt", "must be >= 2"));
    }
    let t = f.t.unwrap_or(5 * m * k);
    if t == 0 {
        return Err(usage("t", "must be >= 1"));
    }
    Ok(PredictConfig {
        k,
        m,
        params: SizingParams {
            c1: f.c1,
            c2: f.c2,
            gamma: f.gamma,
            t,
            n_opt,
        },
        n_opt_given: f.n_opt.is_some(),
    })
}

/// `%g`-style rendering with 6 significant digits.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_g(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

/// Writes `bytes` to `path` through a temporary sibling and a rename;
/// `-` means standard output.
pub fn write_atomic(path: &str, bytes: &[u8]) -> Result<()> {
    if path == "-" {
        let mut out = io::stdout().lock();
        out.write_all(bytes)?;
        out.flush()?;
        return Ok(());
    }
    let target = Path::new(path);
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = target
        .file_name()
        .ok_or_else(|| Error::Io(io::Error::new(io::ErrorKind::InvalidInput, format!("{path} is not a file path"))))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, target));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        Ok(self.writer.write_record(fields)?)
    }

    fn into_bytes(self) -> Result<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| Error::Io(io::Error::other(e.to_string())))
    }
}

/// Parses any CSV this tool writes into its header and rows.
pub fn read_table(input: impl Read) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, csv::Error>>()?;
    Ok((header, rows))
}

fn sweep_fields(r: &SweepRecord) -> Vec<String> {
    vec![
        r.kind.as_str().to_string(),
        r.m.to_string(),
        r.k.to_string(),
        opt_g(r.d),
        r.m_d.to_string(),
        r.ell.to_string(),
        r.algo.clone(),
        r.replacement.clone(),
        r.mode.as_str().to_string(),
        fmt_g(r.n_min_mean),
        fmt_g(r.n_min_std),
        fmt_g(r.evals_mean),
        fmt_g(r.evals_std),
        r.repeats.to_string(),
        r.master_seed.to_string(),
    ]
}

pub fn write_sweep_csv(records: &[SweepRecord]) -> Result<Vec<u8>> {
    let mut t = Table::new(&SWEEP_HEADER)?;
    for r in records {
        t.row(sweep_fields(r))?;
    }
    t.into_bytes()
}

/// Reads sweep output back; values carry the 6 significant digits written.
pub fn read_sweep_csv(input: impl Read) -> Result<Vec<SweepRecord>> {
    let (header, rows) = read_table(input)?;
    if header != SWEEP_HEADER {
        return Err(Error::InvalidArgument(format!("unexpected sweep header {header:?}")));
    }
    let bad = |field: &str, v: &str| Error::InvalidArgument(format!("bad {field} value {v:?}"));
    let num = |field: &'static str, v: &str| v.parse::<f64>().map_err(|_| bad(field, v));
    let count = |field: &'static str, v: &str| v.parse::<usize>().map_err(|_| bad(field, v));
    rows.iter()
        .map(|r| {
            Ok(SweepRecord {
                kind: r[0].parse()?,
                m: count("m", &r[1])?,
                k: count("k", &r[2])?,
                d: if r[3].is_empty() { None } else { Some(num("d", &r[3])?) },
                m_d: count("m_d", &r[4])?,
                ell: count("ell", &r[5])?,
                algo: r[6].clone(),
                replacement: r[7].clone(),
                mode: r[8].parse()?,
                n_min_mean: num("n_min_mean", &r[9])?,
                n_min_std: num("n_min_std", &r[10])?,
                evals_mean: num("evals_mean", &r[11])?,
                evals_std: num("evals_std", &r[12])?,
                repeats: count("repeats", &r[13])?,
                master_seed: r[14].parse().map_err(|_| bad("master_seed", &r[14]))?,
            })
        })
        .collect()
}

/// Runs a validated configuration, writing its CSV output.
pub fn dispatch(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::InvalidState(e.to_string()))?;
            pool.install(|| dispatch_inner(cfg))
        }
        None => dispatch_inner(cfg),
    }
}

fn dispatch_inner(cfg: &ExperimentConfig) -> Result<()> {
    let randomized = matches!(cfg.command, Command::Run | Command::Bisect | Command::Sweep | Command::NicheProb);
    if randomized && !cfg.seed_given {
        eprintln!("seed = {}", cfg.seed);
    }
    match cfg.command {
        Command::Evaluate => write_atomic(&cfg.out, &evaluate_csv(cfg)?),
        Command::Oracle => write_atomic(&cfg.out, &oracle_csv(&cfg.problems[0])?),
        Command::Predict => write_atomic(&cfg.out, &predict_csv(cfg.predict.as_ref().expect("predict config"))?),
        Command::Run => run_command(cfg),
        Command::Bisect | Command::Sweep => sweep_command(cfg),
        Command::NicheProb => write_atomic(&cfg.out, &niche_csv(cfg)?),
    }
}

fn evaluate_csv(cfg: &ExperimentConfig) -> Result<Vec<u8>> {
    let p = &cfg.problems[0];
    let mut t = Table::new(&["genome", "f1", "f2"])?;
    for g in &cfg.genomes {
        let o = p.evaluate(g)?;
        t.row([g.to_string(), fmt_g(o.f1), fmt_g(o.f2)])?;
    }
    t.into_bytes()
}

pub fn oracle_csv(p: &ProblemSpec) -> Result<Vec<u8>> {
    let front = pareto_oracle_bruteforce(p)?;
    let mut t = Table::new(&["entry", "genome", "f1", "f2"])?;
    for g in front.genotypes().unwrap_or_default() {
        let o = p.evaluate(g)?;
        t.row(["genotype".to_string(), g.to_string(), fmt_g(o.f1), fmt_g(o.f2)])?;
    }
    let points = p.representative_set(RepresentativeMode::Objective)?;
    for o in points.points().unwrap_or_default() {
        t.row(["point".to_string(), String::new(), fmt_g(o.f1), fmt_g(o.f2)])?;
    }
    t.into_bytes()
}

pub fn predict_csv(pc: &PredictConfig) -> Result<Vec<u8>> {
    let eda = predict_eda_popsize(pc.k, pc.m, pc.params.c1)?;
    let niching = predict_niching_popsize(&pc.params)?;
    let m_d = max_competing_substructures(pc.m, pc.k);
    let crossing = exact_crossing_md(pc.k, pc.m, pc.params.c1, pc.params.c2)?;
    let mut t = Table::new(&["quantity", "value"])?;
    let rows = [
        ("k", pc.k.to_string()),
        ("m", pc.m.to_string()),
        ("c1", fmt_g(pc.params.c1)),
        ("c2", fmt_g(pc.params.c2)),
        ("gamma", fmt_g(pc.params.gamma)),
        ("t", pc.params.t.to_string()),
        ("log_base", "2".to_string()),
        ("eda_popsize", fmt_g(eda)),
        ("m_d", m_d.to_string()),
        ("n_opt", pc.params.n_opt.to_string()),
        ("niching_popsize_exact", fmt_g(niching.exact)),
        ("niching_popsize_approx", fmt_g(niching.approx)),
        ("crossing_m_d_exact", fmt_g(crossing)),
    ];
    for (q, v) in rows {
        t.row([q.to_string(), v])?;
    }
    t.into_bytes()
}

fn run_command(cfg: &ExperimentConfig) -> Result<()> {
    use rayon::prelude::*;
    let p = &cfg.problems[0];
    let n = cfg.n.expect("validated");
    let results = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut trace = Vec::new();
            let res = run_observed(p, &cfg.algo, n, cfg.mode, RngStream::new(cfg.seed, r), |rep| {
                trace.push(*rep);
                Ok(())
            })?;
            Ok((res, trace))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut t = Table::new(&[
        "run", "seed", "stream", "n", "mode", "success", "g_star", "generations_run", "evaluations",
        "evals_to_coverage", "final_coverage",
    ])?;
    for (i, (r, _)) in results.iter().enumerate() {
        t.row([
            i.to_string(),
            r.seed.to_string(),
            r.stream.to_string(),
            r.n.to_string(),
            cfg.mode.as_str().to_string(),
            r.success.to_string(),
            r.g_star.map(|g| g.to_string()).unwrap_or_default(),
            r.generations_run.to_string(),
            r.evaluations.to_string(),
            r.evaluations_to_coverage().map(|e| e.to_string()).unwrap_or_default(),
            fmt_g(r.final_coverage()),
        ])?;
    }
    if let Some(path) = &cfg.trace {
        let mut tr = Table::new(&["run", "generation", "coverage", "points_covered"])?;
        for (i, (_, trace)) in results.iter().enumerate() {
            for rep in trace {
                tr.row([
                    i.to_string(),
                    rep.generation.to_string(),
                    fmt_g(rep.coverage),
                    rep.points_covered.to_string(),
                ])?;
            }
        }
        write_atomic(path, &tr.into_bytes()?)?;
    }
    write_atomic(&cfg.out, &t.into_bytes()?)
}

fn sweep_command(cfg: &ExperimentConfig) -> Result<()> {
    let outcomes = if cfg.command == Command::Bisect {
        vec![bisection_min_popsize(&cfg.problems[0], &cfg.algo, cfg.mode, &cfg.bisection, cfg.seed)
            .map(|o| SweepRecord::new(&cfg.problems[0], &cfg.algo, cfg.mode, &o, cfg.seed))]
    } else {
        scalability_sweep(&cfg.problems, &cfg.algo, cfg.mode, &cfg.bisection, cfg.seed)?
    };
    let mut records = Vec::new();
    let mut first_error = None;
    for (p, outcome) in cfg.problems.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                eprintln!("{} m={} ell={}: {e}", p.kind(), p.m(), p.ell());
                first_error.get_or_insert(e);
            }
        }
    }
    write_atomic(&cfg.out, &write_sweep_csv(&records)?)?;
    first_error.map_or(Ok(()), Err)
}

fn niche_csv(cfg: &ExperimentConfig) -> Result<Vec<u8>> {
    let p = &cfg.problems[0];
    let n = cfg.n.expect("validated");
    let probs = niche_maintenance_probability(p, &cfg.algo, n, cfg.runs, cfg.seed)?;
    let mut t = Table::new(&["point", "f1", "f2", "probability", "n", "runs", "master_seed"])?;
    for (i, prob) in probs.iter().enumerate() {
        let o = p.front_point(i);
        t.row([
            i.to_string(),
            fmt_g(o.f1),
            fmt_g(o.f2),
            fmt_g(*prob),
            n.to_string(),
            cfg.runs.to_string(),
            cfg.seed.to_string(),
        ])?;
    }
    t.into_bytes()
}

/// Entry point for the binary: returns the process exit status.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let expanded = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match parse_cli(expanded) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = build_config(cli).and_then(|cfg| dispatch(&cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}
