//! The `ucn` command line.
//!
//! Every command that writes files takes `--out DIR`. Outputs are staged in a
//! sibling directory and renamed into place once complete, so a failed run
//! leaves nothing behind and an existing run directory is never touched.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::ddpg::{apc_run, evaluate, Budget, PolicyMode, PositioningEnv};
use crate::error::{Error, Result};
use crate::marl::{evaluate_random_crew, train_marl, DqnAgent, DqnAgentSet};
use crate::nn::{Checkpoint, Mlp};
use crate::solar::{
    baseline_min_uavs, build_mapping, enumerate_optimal, run_policy, train_scheduler, MappingTable, SchedulerSpec,
    ENUMERATION_LIMIT,
};
use crate::trace::{write_trace, EventWindow, Rollout, TraceHeader, TRACE_SCHEMA};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "ucn", version, about = "UAV crew simulator and learned regulators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a positioning (ddpg), crew (marl) or charging (scheduler) agent.
    Train {
        kind: TrainKind,
        #[command(flatten)]
        common: Common,
    },
    /// Roll out a checkpoint on evaluation seeds and write traces.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated seeds; defaults to `run.eval_seeds`.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Slots before and after each crew event in the summary windows.
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
        #[command(flatten)]
        common: Common,
    },
    /// Build the per-hour mapping table.
    Mapping {
        #[command(flatten)]
        common: Common,
    },
    /// Minimum serving UAVs per hour from a mapping table.
    Baseline {
        /// Reuse a mapping CSV instead of building one.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Brute-force optimal charging profile for a toy instance.
    Enumerate {
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print a short summary of a run directory.
    Report {
        run: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainKind {
    Ddpg,
    Marl,
    Scheduler,
}

impl TrainKind {
    fn name(self) -> &'static str {
        match self {
            TrainKind::Ddpg => "ddpg",
            TrainKind::Marl => "marl",
            TrainKind::Scheduler => "scheduler",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Full,
    Freeze,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment TOML. Without it every default applies.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `dotted.key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path, &self.overrides)?,
            None => ExperimentConfig::from_toml_with("", &self.overrides)?,
        };
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.run.workers = w;
        }
        if let Some(e) = self.episodes {
            cfg.run.episodes = e;
        }
        if let Some(o) = &self.out {
            cfg.run.out = Some(o.display().to_string());
        }
        Ok(cfg)
    }
}

/// What every run directory records to reproduce itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub eval_seeds: Vec<u64>,
    pub workers: usize,
    pub episodes: usize,
    pub files: Vec<String>,
}

/// A run directory under construction.
struct RunDir {
    target: PathBuf,
    staging: PathBuf,
    files: BTreeMap<String, Vec<u8>>,
}

impl RunDir {
    fn new(cfg: &ExperimentConfig, default_name: &str) -> Result<Self> {
        let target = PathBuf::from(cfg.run.out.clone().unwrap_or_else(|| format!("runs/{default_name}")));
        if target.exists() {
            return Err(Error::OutputExists(target));
        }
        let name = target.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let staging = target.with_file_name(format!(".{name}.partial-{}", std::process::id()));
        Ok(RunDir {
            target,
            staging,
            files: BTreeMap::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.to_string(), bytes.into());
    }

    fn finish(mut self, command: &str, cfg: &ExperimentConfig, mut seeds: BTreeMap<String, u64>) -> Result<PathBuf> {
        seeds.insert("run".into(), cfg.run.seed);
        seeds.insert("mapping".into(), cfg.scenario.scheduler.mapping_seed);
        self.put("config.toml", cfg.to_toml());
        let mut files: Vec<String> = self.files.keys().cloned().collect();
        files.push("manifest.json".into());
        files.sort();
        let manifest = RunManifest {
            command: command.to_string(),
            version: VERSION.to_string(),
            config_hash: identity(cfg),
            seeds,
            eval_seeds: cfg.run.eval_seeds.clone(),
            workers: cfg.run.workers,
            episodes: cfg.run.episodes,
            files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        self.put("manifest.json", text);

        if let Some(parent) = self.target.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let write = |dir: &Path, files: &BTreeMap<String, Vec<u8>>| -> Result<()> {
            for (name, bytes) in files {
                let path = dir.join(name);
                if let Some(p) = path.parent() {
                    fs::create_dir_all(p).map_err(|e| Error::io(p, e))?;
                }
                fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            }
            Ok(())
        };
        let staged = write(&self.staging, &self.files).and_then(|_| {
            if self.target.exists() {
                return Err(Error::OutputExists(self.target.clone()));
            }
            fs::rename(&self.staging, &self.target).map_err(|e| Error::io(&self.target, e))
        });
        if let Err(e) = staged {
            let _ = fs::remove_dir_all(&self.staging);
            return Err(e);
        }
        Ok(self.target)
    }
}

/// Config hash ignoring the output location, so the same experiment written to
/// two directories hashes the same.
fn identity(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.run.out = None;
    c.hash()
}

fn short_hash(cfg: &ExperimentConfig) -> String {
    identity(cfg)[..8].to_string()
}

/// Parses arguments and runs the command; returns the written directory if
/// any.
pub fn run<I, T>(args: I) -> Result<Option<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            Error::Domain(String::new())
        }
        _ => Error::config(e.to_string()),
    })?;
    execute(cli.command)
}

pub fn execute(command: Command) -> Result<Option<PathBuf>> {
    match command {
        Command::Train { kind, common } => cmd_train(kind, &common).map(Some),
        Command::Eval {
            checkpoint,
            seeds,
            window,
            mode,
            common,
        } => cmd_eval(&checkpoint, &seeds, window, mode, &common).map(Some),
        Command::Mapping { common } => cmd_mapping(&common).map(Some),
        Command::Baseline { mapping, common } => cmd_baseline(mapping.as_deref(), &common).map(Some),
        Command::Enumerate { mapping, common } => cmd_enumerate(mapping.as_deref(), &common).map(Some),
        Command::Report { run } => {
            print!("{}", report(&run)?);
            Ok(None)
        }
    }
}

pub fn cmd_train(kind: TrainKind, common: &Common) -> Result<PathBuf> {
    let cfg = common.load()?;
    let seed = cfg.run.seed;
    let mut dir = RunDir::new(&cfg, &format!("train-{}-{}-s{seed}", kind.name(), short_hash(&cfg)))?;
    let mut seeds = BTreeMap::new();
    let mut ckpt = Checkpoint::new(kind.name());
    ckpt.seeds.insert("run".into(), seed);
    match kind {
        TrainKind::Ddpg => {
            let a = &cfg.agent.ddpg;
            let mut env = PositioningEnv::new(cfg.scenario.clone(), a.oob_penalty)?;
            if a.event_boost {
                env = env.with_event_boost(a.boost_factor, a.boost_window);
            }
            let out = apc_run(env, cfg.run.workers, a.clone(), seed, Budget::episodes(cfg.run.episodes))?;
            for r in &out.curve {
                seeds.insert(format!("episode{}", r.episode), r.env_seed);
            }
            ckpt.steps.insert("train_steps".into(), out.train_steps);
            ckpt.steps.insert("transitions".into(), out.transitions);
            dir.put("curve.csv", out.curve_csv());
            let ag = out.agent;
            ckpt.networks = vec![
                ("actor".into(), ag.actor.net),
                ("critic".into(), ag.critic.net),
                ("target_actor".into(), ag.target_actor),
                ("target_critic".into(), ag.target_critic),
            ];
        }
        TrainKind::Marl => {
            let out = train_marl(&cfg.scenario, &cfg.agent.marl, cfg.run.episodes, seed)?;
            ckpt.steps.insert("episodes".into(), out.curve.len() as u64);
            ckpt.steps.insert("violations".into(), out.violations as u64);
            dir.put("curve.csv", out.curve_csv());
            ckpt.networks = out
                .agents
                .agents
                .into_iter()
                .map(|a| (format!("agent{}", a.id), a.q.net))
                .collect();
        }
        TrainKind::Scheduler => {
            let map = build_mapping(&cfg.scenario, cfg.scenario.scheduler.mapping_backend, &cfg.agent.ddpg)?;
            let spec = SchedulerSpec::new(&cfg.scenario, map)?;
            let out = train_scheduler(&spec, &cfg.agent.scheduler, cfg.run.episodes, cfg.run.workers, seed)?;
            ckpt.steps.insert("train_steps".into(), out.training.train_steps);
            dir.put("mapping.csv", spec.map.to_csv());
            dir.put("profile.csv", out.profile.to_csv());
            dir.put("profile.json", serde_json::to_string_pretty(&out.profile)? + "\n");
            dir.put("curve.csv", out.training.curve_csv());
            let ag = out.training.agent;
            ckpt.networks = vec![
                ("actor".into(), ag.actor.net),
                ("critic".into(), ag.critic.net),
                ("target_actor".into(), ag.target_actor),
                ("target_critic".into(), ag.target_critic),
            ];
        }
    }
    ckpt.meta = json!({ "config_hash": identity(&cfg) });
    dir.put("checkpoint.ucn", ckpt.to_bytes());
    dir.finish(&format!("train {}", kind.name()), &cfg, seeds)
}

fn check_dims(net: &Mlp, input: usize, output: usize) -> Result<()> {
    if net.input_dim() != input || net.output_dim() != output {
        return Err(Error::Architecture {
            expected: vec![input, output],
            found: vec![net.input_dim(), net.output_dim()],
        });
    }
    Ok(())
}

fn required<'a>(ckpt: &'a Checkpoint, name: &str, path: &Path) -> Result<&'a Mlp> {
    ckpt.network(name).ok_or_else(|| Error::Checkpoint {
        path: path.to_path_buf(),
        reason: format!("no network named {name}"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub mean_served: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub windows: Vec<EventWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub kind: String,
    pub mode: String,
    pub mean_served: f64,
    pub seeds: Vec<SeedSummary>,
}

pub fn cmd_eval(checkpoint: &Path, seeds: &[u64], window: usize, mode: Mode, common: &Common) -> Result<PathBuf> {
    let mut cfg = common.load()?;
    if !seeds.is_empty() {
        cfg.run.eval_seeds = seeds.to_vec();
    }
    let ckpt = Checkpoint::load(checkpoint)?;
    let seeds = cfg.run.eval_seeds.clone();
    let sc = &cfg.scenario;
    let n = sc.uavs.count;
    let policy_mode = match mode {
        Mode::Full => PolicyMode::Full,
        Mode::Freeze => PolicyMode::FreezeAfterEvent,
    };
    let mut dir = RunDir::new(&cfg, &format!("eval-{}-{}", ckpt.kind, short_hash(&cfg)))?;
    let mut rollouts: Vec<(u64, Rollout, Vec<EventWindow>)> = Vec::new();
    match ckpt.kind.as_str() {
        "ddpg" => {
            let actor = required(&ckpt, "actor", checkpoint)?;
            check_dims(actor, 4 * n + 1, 2 * n)?;
            for r in evaluate(actor, sc, &seeds, window, policy_mode)? {
                rollouts.push((r.seed, r.rollout, r.windows));
            }
        }
        "marl" => {
            let agents = (0..n)
                .map(|i| {
                    let net = required(&ckpt, &format!("agent{i}"), checkpoint)?;
                    check_dims(net, n + 3, crate::marl::N_ACTIONS)?;
                    Ok(DqnAgent::from_network(i, net.clone(), &cfg.agent.marl))
                })
                .collect::<Result<Vec<_>>>()?;
            if ckpt.network(&format!("agent{n}")).is_some() {
                return Err(Error::Architecture {
                    expected: vec![n],
                    found: vec![ckpt.networks.len()],
                });
            }
            let set = DqnAgentSet {
                agents,
                cfg: cfg.agent.marl.clone(),
            };
            for r in evaluate_random_crew(&set, sc, &seeds, window, policy_mode)? {
                rollouts.push((r.seed, r.rollout, r.windows));
            }
        }
        "scheduler" => {
            let actor = required(&ckpt, "actor", checkpoint)?;
            check_dims(actor, 4 * n + 1, n)?;
            let map = build_mapping(sc, sc.scheduler.mapping_backend, &cfg.agent.ddpg)?;
            let spec = SchedulerSpec::new(sc, map)?;
            let mut summaries = Vec::new();
            for &seed in &seeds {
                let profile = run_policy(&spec, actor, seed)?;
                dir.put(&format!("profiles/seed-{seed}.csv"), profile.to_csv());
                summaries.push(json!({
                    "seed": seed,
                    "objective": profile.objective,
                    "served": profile.total_served(),
                    "final_energy": profile.final_energy(),
                    "violations": profile.violations,
                }));
            }
            dir.put("summary.json", serde_json::to_string_pretty(&summaries)? + "\n");
            return dir.finish("eval scheduler", &cfg, BTreeMap::new());
        }
        other => {
            return Err(Error::Checkpoint {
                path: checkpoint.to_path_buf(),
                reason: format!("unknown checkpoint kind {other}"),
            })
        }
    }

    let mut per_seed = Vec::new();
    for (seed, rollout, windows) in rollouts {
        let header = TraceHeader {
            schema: TRACE_SCHEMA,
            seed,
            n_max: n,
            slots: rollout.records.len(),
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &header, &rollout.records)?;
        dir.put(&format!("traces/seed-{seed}.jsonl"), buf);
        per_seed.push(SeedSummary {
            seed,
            mean_served: rollout.mean_served(),
            windows,
        });
    }
    let summary = MetricsSummary {
        kind: ckpt.kind.clone(),
        mode: format!("{mode:?}").to_lowercase(),
        mean_served: per_seed.iter().map(|s| s.mean_served).sum::<f64>() / per_seed.len().max(1) as f64,
        seeds: per_seed,
    };
    dir.put("summary.json", serde_json::to_string_pretty(&summary)? + "\n");
    dir.finish(&format!("eval {}", ckpt.kind), &cfg, BTreeMap::new())
}

fn load_mapping(path: Option<&Path>, cfg: &ExperimentConfig) -> Result<MappingTable> {
    match path {
        Some(p) => MappingTable::from_csv(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        None => build_mapping(&cfg.scenario, cfg.scenario.scheduler.mapping_backend, &cfg.agent.ddpg),
    }
}

pub fn cmd_mapping(common: &Common) -> Result<PathBuf> {
    let cfg = common.load()?;
    let mut dir = RunDir::new(&cfg, &format!("mapping-{}", short_hash(&cfg)))?;
    let map = load_mapping(None, &cfg)?;
    dir.put("mapping.csv", map.to_csv());
    dir.finish("mapping", &cfg, BTreeMap::new())
}

pub fn cmd_baseline(mapping: Option<&Path>, common: &Common) -> Result<PathBuf> {
    let cfg = common.load()?;
    let mut dir = RunDir::new(&cfg, &format!("baseline-{}", short_hash(&cfg)))?;
    let map = load_mapping(mapping, &cfg)?;
    let sc = &cfg.scenario.scheduler;
    let demand = sc.demand(cfg.scenario.users.total);
    let k_min = baseline_min_uavs(&map, &demand, sc.p_min)?;
    let mut csv = String::from("hour,hour_of_day,demand,k_min,served\n");
    for (h, &k) in k_min.iter().enumerate() {
        csv.push_str(&format!("{h},{},{},{k},{}\n", sc.hour_of_day(h), demand[h], map.get(k, h).min(demand[h])));
    }
    dir.put("mapping.csv", map.to_csv());
    dir.put("baseline.csv", csv);
    dir.finish("baseline", &cfg, BTreeMap::new())
}

pub fn cmd_enumerate(mapping: Option<&Path>, common: &Common) -> Result<PathBuf> {
    let cfg = common.load()?;
    let cells = (cfg.scenario.uavs.count * cfg.scenario.scheduler.hours) as u32;
    let size = 3u128.checked_pow(cells).unwrap_or(u128::MAX);
    if size > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut dir = RunDir::new(&cfg, &format!("enumerate-{}", short_hash(&cfg)))?;
    let map = load_mapping(mapping, &cfg)?;
    let spec = SchedulerSpec::new(&cfg.scenario, map)?;
    let best = enumerate_optimal(&spec)?;
    dir.put("profile.csv", best.to_csv());
    dir.put("optimum.json", serde_json::to_string_pretty(&best)? + "\n");
    dir.finish("enumerate", &cfg, BTreeMap::new())
}

/// Manifest and key numbers of a run directory, as text.
pub fn report(run: &Path) -> Result<String> {
    let path = run.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: RunManifest = serde_json::from_str(&text)?;
    let mut out = format!(
        "command  {}\nversion  {}\nconfig   {}\nseed     {}\nfiles    {}\n",
        m.command,
        m.version,
        m.config_hash,
        m.seeds.get("run").copied().unwrap_or_default(),
        m.files.join(" ")
    );
    if let Ok(curve) = fs::read_to_string(run.join("curve.csv")) {
        let rows: Vec<&str> = curve.lines().skip(1).collect();
        let returns: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.split(',').nth(2).and_then(|v| v.parse().ok()))
            .collect();
        let tail = &returns[returns.len().saturating_sub(10)..];
        if !tail.is_empty() {
            out.push_str(&format!(
                "episodes {}\nreturn   {:.4} (mean of last {})\n",
                rows.len(),
                tail.iter().sum::<f64>() / tail.len() as f64,
                tail.len()
            ));
        }
    }
    if let Ok(s) = fs::read_to_string(run.join("summary.json")) {
        if let Ok(summary) = serde_json::from_str::<MetricsSummary>(&s) {
            out.push_str(&format!("served   {:.3} (mean over {} seeds)\n", summary.mean_served, summary.seeds.len()));
        }
    }
    if let Ok(s) = fs::read_to_string(run.join("optimum.json")) {
        let v: serde_json::Value = serde_json::from_str(&s)?;
        out.push_str(&format!("optimum  {}\n", v["objective"]));
    }
    Ok(out)
}

/// Exit status and stderr text for an error. Infeasibility and size refusals
/// are printed as JSON so scripts can act on them.
pub fn describe(err: &Error) -> (i32, String) {
    match err {
        Error::Domain(m) if m.is_empty() => (0, String::new()),
        Error::Infeasible { hour, reason } => (
            3,
            json!({ "error": "infeasible", "hour": hour, "reason": reason }).to_string(),
        ),
        Error::TooLarge { size, limit } => (
            3,
            json!({ "error": "too_large", "size": size.to_string(), "limit": limit.to_string(),
                    "message": err.to_string() })
            .to_string(),
        ),
        Error::Config(_) => (2, format!("error: {err}")),
        _ => (1, format!("error: {err}")),
    }
}
