//! Operator command-line surface: training runs, circuit verification,
//! gadget inspection, dataset preprocessing, and bound/statistics reports.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 run completed
//! without a positive result (no discovery / failed verification), 3
//! internal error.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use gadget_qec::analysis::{
    enumerate_errors, kl_sum, qhb, verify_distance_at_least, weight_stats, QhbVariant,
    VerifyOutcome, DEFAULT_VERIFY_BUDGET,
};
use gadget_qec::circuit::Circuit;
use gadget_qec::env::{EnvConfig, GadgetPenalty};
use gadget_qec::gadgets::{
    derive_cross_pattern, level_from_name, level_name, rule_table, weight_curve_csv, Gadget,
    Orientation, MAX_LEVEL,
};
use gadget_qec::pipeline::{dedup, motif_csv, motif_frequencies, normalize, read_dataset, write_dataset};
use gadget_qec::tableau::ObservationMode;
use gadget_qec::trainer::{run_curriculum_with, save_checkpoint, TrainerConfig};

#[derive(Parser)]
#[command(name = "gqec", about = "CSS encoding-circuit discovery engine", version)]
struct Cli {
    /// Worker threads for parallel analysis (1 = fully sequential)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the distance-curriculum training loop and export discoveries
    Train(TrainArgs),
    /// Verify a circuit file: distance check, detection sum, weight stats, QHB
    Verify {
        /// Circuit file
        file: PathBuf,
        /// Distance to verify
        #[arg(long)]
        d: usize,
    },
    /// Inspect the gadget hierarchy: rule tables, expansions, calibration
    Gadgets(GadgetArgs),
    /// Dedup + normalize a directory of circuit files; write dataset + motif CSV
    Preprocess {
        /// Directory containing circuit .txt files
        dir: PathBuf,
        /// Output directory (default: DIR/processed)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Longest motif window, in gates
        #[arg(long, default_value_t = 8)]
        window: usize,
        /// Count the Bell-pair init gates in motifs as well
        #[arg(long)]
        include_init: bool,
    },
    /// Evaluate the quantum Hamming bound for (n, k, d)
    Qhb {
        n: usize,
        k: usize,
        d: usize,
        /// Use the weakly-self-dual CSS variant of the bound
        #[arg(long)]
        self_dual: bool,
    },
    /// Per-circuit stabilizer weight statistics for a dataset, as CSV
    Stats {
        /// Dataset directory (manifest.tsv + circuit files)
        dir: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Flat key=value config file; CLI flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated gadget levels, e.g. `cx,dcx,dcx4`
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs_per_stage: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Success rate required before a warm-up stage advances
    #[arg(long)]
    advance_success_rate: Option<f64>,
    #[arg(long)]
    n_envs: Option<usize>,
    #[arg(long)]
    rollout_len: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    entropy_coef: Option<f64>,
    #[arg(long)]
    value_coef: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    minibatch: Option<usize>,
    #[arg(long)]
    ppo_epochs: Option<usize>,
    /// Comma-separated hidden layer widths
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    error_rate: Option<f64>,
    /// Observation mode: raw | canonical
    #[arg(long)]
    obs: Option<String>,
    /// Gadget-use penalty coefficient (off when absent)
    #[arg(long)]
    penalty_coef: Option<f64>,
    /// Step threshold from which the penalty applies
    #[arg(long)]
    penalty_step: Option<usize>,
    /// Output directory for log, checkpoint, and dataset
    #[arg(long, default_value = "run")]
    out: PathBuf,
}

/// Error type distinguishing usage/config problems (exit 1) from internal
/// failures (exit 3).
enum AppError {
    Usage(String),
    Internal(String),
}

impl<E: std::error::Error> From<E> for AppError {
    fn from(e: E) -> Self {
        AppError::Internal(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: failed to configure worker pool: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: Command) -> Result<u8, AppError> {
    match cmd {
        Command::Train(args) => cmd_train(args),
        Command::Verify { file, d } => cmd_verify(&file, d),
        Command::Gadgets(args) => cmd_gadgets(args),
        Command::Preprocess {
            dir,
            out,
            window,
            include_init,
        } => cmd_preprocess(&dir, out, window, include_init),
        Command::Qhb { n, k, d, self_dual } => cmd_qhb(n, k, d, self_dual),
        Command::Stats { dir } => cmd_stats(&dir),
    }
}

fn parse_levels(s: &str) -> Result<Vec<u8>, AppError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| level_from_name(t).ok_or_else(|| usage(format!("levels: unknown level `{t}`"))))
        .collect()
}

/// Flat key=value config file; `#` starts a comment.
fn load_config_file(path: &Path) -> Result<HashMap<String, String>, AppError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("config `{}`: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key=value", i + 1)))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn config_get<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, AppError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("config: bad value for `{key}`: `{v}`"))),
    }
}

fn cmd_train(args: TrainArgs) -> Result<u8, AppError> {
    let file = match &args.config {
        Some(p) => load_config_file(p)?,
        None => HashMap::new(),
    };
    // precedence: CLI flag, then config file, then default
    macro_rules! pick {
        ($flag:expr, $key:literal) => {
            match $flag {
                Some(v) => Some(v),
                None => config_get(&file, $key)?,
            }
        };
    }
    let n = pick!(args.n, "n").ok_or_else(|| usage("missing required `n`"))?;
    let k = pick!(args.k, "k").ok_or_else(|| usage("missing required `k`"))?;
    let d = pick!(args.d, "d").ok_or_else(|| usage("missing required `d`"))?;
    let levels_str: String =
        pick!(args.levels, "levels").ok_or_else(|| usage("missing required `levels`"))?;
    let levels = parse_levels(&levels_str)?;

    let mut env_cfg = EnvConfig::new(n, k, d, levels);
    if let Some(v) = pick!(args.max_steps, "max_steps") {
        env_cfg.max_steps = v;
    }
    if let Some(v) = pick!(args.error_rate, "error_rate") {
        env_cfg.error_rate = v;
    }
    if let Some(mode) = pick!(args.obs, "obs") {
        env_cfg.observation_mode = match mode.as_str() {
            "raw" => ObservationMode::Raw,
            "canonical" => ObservationMode::Canonical,
            other => return Err(usage(format!("obs: expected raw|canonical, got `{other}`"))),
        };
    }
    if let Some(coefficient) = pick!(args.penalty_coef, "penalty_coef") {
        env_cfg.penalty = Some(GadgetPenalty {
            coefficient,
            threshold_step: pick!(args.penalty_step, "penalty_step").unwrap_or(1),
        });
    }
    env_cfg
        .validate()
        .map_err(|e| usage(format!("config: {e}")))?;

    let mut cfg = TrainerConfig::default();
    if let Some(v) = pick!(args.seed, "seed") {
        cfg.seed = v;
    }
    if let Some(v) = pick!(args.epochs_per_stage, "epochs_per_stage") {
        cfg.epochs_per_stage = v;
    }
    if let Some(v) = pick!(args.patience, "patience") {
        cfg.patience = v;
    }
    if let Some(v) = pick!(args.advance_success_rate, "advance_success_rate") {
        cfg.advance_success_rate = v;
    }
    if let Some(v) = pick!(args.n_envs, "n_envs") {
        cfg.n_envs = v;
    }
    if let Some(v) = pick!(args.rollout_len, "rollout_len") {
        cfg.rollout_len = v;
    }
    if let Some(v) = pick!(args.lr, "lr") {
        cfg.lr = v;
    }
    if let Some(v) = pick!(args.clip, "clip") {
        cfg.clip = v;
    }
    if let Some(v) = pick!(args.entropy_coef, "entropy_coef") {
        cfg.entropy_coef = v;
    }
    if let Some(v) = pick!(args.value_coef, "value_coef") {
        cfg.value_coef = v;
    }
    if let Some(v) = pick!(args.gamma, "gamma") {
        cfg.gamma = v;
    }
    if let Some(v) = pick!(args.minibatch, "minibatch") {
        cfg.minibatch = v;
    }
    if let Some(v) = pick!(args.ppo_epochs, "ppo_epochs") {
        cfg.ppo_epochs = v;
    }
    if let Some(h) = pick!(args.hidden, "hidden") {
        cfg.hidden = h
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| usage(format!("hidden: bad width `{t}`")))
            })
            .collect::<Result<_, _>>()?;
    }

    fs::create_dir_all(&args.out)?;
    println!(
        "training [[{n},{k},{d}]] with levels [{}] seed {}",
        env_cfg
            .levels
            .iter()
            .map(|&l| level_name(l))
            .collect::<Vec<_>>()
            .join(","),
        cfg.seed
    );
    let (nets, result) = run_curriculum_with(&env_cfg, &cfg, |r| {
        if r.epoch % 50 == 0 {
            println!(
                "epoch {} d={} return {:.3} success {:.2} len {:.1} entropy {:.2}",
                r.epoch,
                r.stage_d,
                r.mean_normalized_return,
                r.success_rate,
                r.mean_episode_length,
                r.entropy
            );
            let _ = std::io::Write::flush(&mut std::io::stdout());
        }
    })?;
    fs::write(args.out.join("log.csv"), result.log_csv())?;
    save_checkpoint(&args.out.join("checkpoint.bin"), &nets, &cfg)?;
    for (stage_d, epoch) in &result.first_success_epoch {
        println!("stage d={stage_d}: first success at epoch {epoch}");
    }
    if result.circuits.is_empty() {
        println!("no circuit discovered ({} epochs logged)", result.log.len());
        return Ok(2);
    }
    let report = dedup(result.circuits);
    let kept: Vec<Circuit> = report.kept;
    write_dataset(&args.out.join("dataset"), &kept)?;
    println!(
        "discovered {} distinct circuit(s) ({} duplicates discarded); artifacts in {}",
        kept.len(),
        report.discarded,
        args.out.display()
    );
    Ok(0)
}

fn cmd_verify(file: &Path, d: usize) -> Result<u8, AppError> {
    let circuit = Circuit::read_file(file).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let tab = circuit.evaluate()?;
    let n = circuit.n;
    let k = circuit.k;
    println!("circuit: n={n} k={k} declared d={}", circuit.d);
    println!("cx gates: {} depth: {}", circuit.cx_count(), circuit.depth());
    let ws = weight_stats(&tab);
    println!(
        "stabilizer weights: min {} max {} mean {:.3} stddev {:.3}",
        ws.min, ws.max, ws.mean, ws.stddev
    );
    let es = enumerate_errors(n, d, 0.1)?;
    let report = kl_sum(&tab, &es)?;
    println!("sigma_KL at d={d}: {:.6}", report.sigma_kl);
    let bound = qhb(n, k, d, QhbVariant::Stabilizer);
    println!(
        "QHB (stabilizer): {} >= {} -> {}{}",
        bound.bound_lhs,
        bound.bound_rhs,
        if bound.satisfied { "satisfied" } else { "violated" },
        if bound.perfect { " (perfect)" } else { "" }
    );
    match verify_distance_at_least(&tab, d, DEFAULT_VERIFY_BUDGET)? {
        VerifyOutcome::Holds => {
            println!("distance check d={d}: PASS");
            Ok(0)
        }
        VerifyOutcome::Fails { witness } => {
            println!("distance check d={d}: FAIL");
            println!("undetected witness: {witness}");
            for &idx in report.undetected.iter().take(10) {
                println!("undetected: {}", es.errors()[idx]);
            }
            Ok(2)
        }
        VerifyOutcome::Infeasible { required, budget } => {
            println!("distance check d={d}: INFEASIBLE ({required} errors > budget {budget})");
            Ok(2)
        }
    }
}

#[derive(Args)]
struct GadgetArgs {
    /// Print the conjugation rule table for --level
    #[arg(long)]
    rules: bool,
    /// Print the temporal CX expansion for --level
    #[arg(long)]
    expand: bool,
    /// Run the brute-force cross-pattern calibration
    #[arg(long)]
    derive: bool,
    /// Print the max-propagated-weight curve as CSV
    #[arg(long)]
    curve: bool,
    #[arg(long, default_value_t = 1)]
    level: u8,
    /// Orientation: A | B
    #[arg(long, default_value = "A")]
    orientation: String,
}

fn cmd_gadgets(args: GadgetArgs) -> Result<u8, AppError> {
    if args.level > MAX_LEVEL {
        return Err(usage(format!("level must be <= {MAX_LEVEL}")));
    }
    let orientation = args
        .orientation
        .chars()
        .next()
        .and_then(Orientation::from_tag)
        .ok_or_else(|| usage("orientation must be A or B"))?;
    let mut did_something = false;
    if args.rules {
        let t = rule_table(args.level, orientation)?;
        println!(
            "{} rule table (orientation {}), max output weight {}:",
            level_name(args.level),
            orientation.tag(),
            t.max_output_weight()
        );
        print!("{}", t.render());
        did_something = true;
    }
    if args.expand {
        let m = (1usize << args.level).max(2);
        let g = Gadget {
            level: args.level,
            orientation,
            anchor: 0,
            n: m,
        };
        let gates = g.expand()?;
        println!("{} expands to {} CX gates:", level_name(args.level), gates.len());
        for (c, t) in gates {
            println!("cx {c} {t}");
        }
        did_something = true;
    }
    if args.derive {
        let cp = derive_cross_pattern()?;
        println!(
            "leaf candidates: {} block candidates: {}",
            cp.leaf_candidates.len(),
            cp.block_candidates.len()
        );
        println!("leaf pattern:  {:?}", cp.leaf);
        println!("block pattern: {:?}", cp.block);
        did_something = true;
    }
    if args.curve {
        print!("{}", weight_curve_csv()?);
        did_something = true;
    }
    if !did_something {
        return Err(usage("pick at least one of --rules, --expand, --derive, --curve"));
    }
    Ok(0)
}

fn cmd_preprocess(
    dir: &Path,
    out: Option<PathBuf>,
    window: usize,
    include_init: bool,
) -> Result<u8, AppError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "txt")
                && p.file_name()
                    .is_some_and(|f| f.to_string_lossy() != "manifest.tsv")
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(usage(format!("no circuit .txt files in {}", dir.display())));
    }
    let mut circuits = Vec::new();
    for f in &files {
        circuits
            .push(Circuit::read_file(f).map_err(|e| usage(format!("{}: {e}", f.display())))?);
    }
    let total = circuits.len();
    let report = dedup(circuits);
    for (idx, diag) in &report.rejected {
        eprintln!("rejected {}: {diag}", files[*idx].display());
    }
    let normalized: Vec<Circuit> = report.kept.iter().map(normalize).collect();
    let out = out.unwrap_or_else(|| dir.join("processed"));
    write_dataset(&out, &normalized)?;
    let motifs = motif_frequencies(&normalized, window, include_init);
    fs::write(out.join("motifs.csv"), motif_csv(&motifs))?;
    println!(
        "{} circuits read, {} kept after dedup ({} duplicates, {} rejected); dataset + motifs.csv in {}",
        total,
        normalized.len(),
        report.discarded,
        report.rejected.len(),
        out.display()
    );
    Ok(0)
}

fn cmd_qhb(n: usize, k: usize, d: usize, self_dual: bool) -> Result<u8, AppError> {
    let variant = if self_dual {
        QhbVariant::SelfDualCss
    } else {
        QhbVariant::Stabilizer
    };
    let r = qhb(n, k, d, variant);
    println!(
        "QHB for (({n},{k},{d})), {}: t={}",
        if self_dual { "self-dual CSS" } else { "stabilizer" },
        r.t
    );
    println!("{} >= {}", r.bound_lhs, r.bound_rhs);
    println!(
        "{}{}",
        if r.satisfied { "satisfied" } else { "violated" },
        if r.perfect { " with equality: perfect" } else { "" }
    );
    Ok(if r.satisfied { 0 } else { 2 })
}

fn cmd_stats(dir: &Path) -> Result<u8, AppError> {
    let entries = read_dataset(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    println!("id,file,n,k,d,cx,depth,w_min,w_max,w_mean,w_stddev");
    let mut all_weights = Vec::new();
    for (e, c) in &entries {
        let tab = c.evaluate()?;
        all_weights.extend(tab.rows().iter().map(|r| r.weight()));
        println!(
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6}",
            e.id,
            e.file,
            e.n,
            e.k,
            e.d,
            c.cx_count(),
            c.depth(),
            e.weights.min,
            e.weights.max,
            e.weights.mean,
            e.weights.stddev
        );
    }
    let agg = gadget_qec::analysis::stats_of(&all_weights);
    println!(
        "aggregate,,,,,,,{},{},{:.6},{:.6}",
        agg.min, agg.max, agg.mean, agg.stddev
    );
    Ok(0)
}
