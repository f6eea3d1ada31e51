//! Command-line interface.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::files::{
    self, load_empirical, load_registry, named_policy, policy_path, reward_path, save_empirical, save_policy,
    stored_levels, DroppedTrack, EmpiricalFile, RegistryError, EMPIRICAL_VERSION,
};
use crate::manifest::Outputs;
use crate::ngsim::{parse_trajectories, write_trajectories, ParseError};
use crate::reports::{self, SummaryDocument};
use clap::{Args, Parser, Subcommand};
use levelk_core::ingest::{
    build_empirical_policy, build_tracks, clamp_lanes, clean_tracks, mirror_lanes, reconstruct_states_actions,
};
use levelk_core::levelk::{evaluate_episode, record_rollout, train_level, Policy, ScenarioResult};
use levelk_core::validate::{aggregate, collect_probes, compare_driver, derive_gt_state_policy};
use rayon::prelude::*;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "levelk", version, about = "Level-k highway driver training and validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for evaluation and validation (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train level K against a field of level K-1 stored in the output directory.
    Train {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Crash-rate sweep of an ego policy among field drivers.
    Simulate {
        /// `level0`, `uniform` or `levelK`.
        #[arg(long)]
        ego: String,
        #[arg(long, default_value = "level0")]
        field: String,
        /// Driver counts: `N`, `A,B,C` or `FROM:TO:STEP`.
        #[arg(long)]
        nd: Option<String>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        /// Directory holding levelK.policy.json files; defaults to --out.
        #[arg(long)]
        policies: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a trajectory CSV of a population driving the ego policy.
        #[arg(long)]
        trajectories: Option<PathBuf>,
        /// Comma-separated policies assigned in turn to the trajectory
        /// vehicles instead of the ego policy, e.g. `level1,level2,level3`.
        #[arg(long)]
        population: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Clean trajectory data and extract per-driver empirical policies.
    Ingest {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare stored policies with empirical policies, state by state.
    Validate {
        /// Policy directory; repeat to validate several families.
        #[arg(long, required = true)]
        policies: Vec<PathBuf>,
        #[arg(long)]
        empirical: PathBuf,
        #[arg(long)]
        nlimit: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate every validation summary found in a directory.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the configuration in effect.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Parse `args` (program name first), run the command and return the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("levelk: {e}");
            e.code()
        }
    }
}

fn with_pool<F: FnOnce() -> Result<(), CliError> + Send>(jobs: usize, f: F) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(CliError::run)?;
    pool.install(f)
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train { level, out, common } => {
            let cfg = RunConfig::load(common.config.as_deref())?;
            with_pool(common.jobs, || cmd_train(&cfg, level, &out))
        }
        Command::Simulate {
            ego,
            field,
            nd,
            episodes,
            steps,
            policies,
            out,
            trajectories,
            population,
            common,
        } => {
            let cfg = RunConfig::load(common.config.as_deref())?;
            let nd = match nd {
                Some(s) => parse_nd(&s)?,
                None => cfg.simulate.n_d.clone(),
            };
            let args = SimulateArgs {
                ego,
                field,
                nd,
                episodes: episodes.unwrap_or(cfg.simulate.episodes),
                steps: steps.unwrap_or(cfg.simulate.steps),
                policies: policies.unwrap_or_else(|| out.clone()),
                out,
                trajectories,
                population: population
                    .map(|p| p.split(',').map(|n| n.trim().to_string()).collect())
                    .unwrap_or_default(),
            };
            with_pool(common.jobs, || cmd_simulate(&cfg, &args))
        }
        Command::Ingest { data, out, common } => {
            let cfg = RunConfig::load(common.config.as_deref())?;
            with_pool(common.jobs, || cmd_ingest(&cfg, &data, &out))
        }
        Command::Validate {
            policies,
            empirical,
            nlimit,
            out,
            common,
        } => {
            let cfg = RunConfig::load(common.config.as_deref())?;
            let n_limit = nlimit.unwrap_or(cfg.validate.n_limit);
            if n_limit == 0 {
                return Err(CliError::Config("--nlimit must be at least 1".into()));
            }
            with_pool(common.jobs, || cmd_validate(&cfg, &policies, &empirical, n_limit, &out))
        }
        Command::Report { input, out, common } => {
            let cfg = RunConfig::load(common.config.as_deref())?;
            cmd_report(&cfg, &input, &out)
        }
        Command::Config { config } => {
            print!("{}", RunConfig::load(config.as_deref())?.to_toml());
            Ok(())
        }
    }
}

fn registry_error(e: RegistryError) -> CliError {
    match e {
        RegistryError::Missing(p) => CliError::Missing(format!("policy {}", p.display())),
        RegistryError::Bad { .. } => CliError::Input(e.to_string()),
        RegistryError::Io(e) => CliError::run(e),
    }
}

pub fn parse_nd(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("cannot read driver counts {s:?}"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [from, to, step] => {
            let (from, to, step) = (num(from)?, num(to)?, num(step)?);
            if step == 0 || to < from {
                return Err(bad());
            }
            Ok((from..=to).step_by(step).collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

pub fn cmd_train(cfg: &RunConfig, level: u32, out: &Path) -> Result<(), CliError> {
    if level == 0 {
        return Err(CliError::Config("level 0 is the fixed rule-based policy".into()));
    }
    if level > cfg.levels.max_level {
        return Err(CliError::Config(format!(
            "level {level} exceeds levels.max_level = {}",
            cfg.levels.max_level
        )));
    }
    let registry = load_registry(out, level - 1).map_err(registry_error)?;
    let (policy, outcome) = train_level(level, &registry, &cfg.level_config(), cfg.seed).map_err(CliError::run)?;
    let mut outputs = Outputs::new(out, "train", cfg.hash(), cfg.seed)?;
    let policy_file = save_policy(&policy).map_err(CliError::run)?;
    outputs.write(&file_name(&policy_path(out, level)), policy_file.as_bytes())?;
    outputs.write(
        &file_name(&reward_path(out, level)),
        &reports::reward_history_csv(&outcome.history),
    )?;
    outputs.finish()
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub struct SimulateArgs {
    pub ego: String,
    pub field: String,
    pub nd: Vec<usize>,
    pub episodes: usize,
    pub steps: usize,
    pub policies: PathBuf,
    pub out: PathBuf,
    pub trajectories: Option<PathBuf>,
    /// Trajectory population; empty means the ego policy alone.
    pub population: Vec<String>,
}

pub fn cmd_simulate(cfg: &RunConfig, a: &SimulateArgs) -> Result<(), CliError> {
    let ego = named_policy(&a.ego, &a.policies).map_err(registry_error)?;
    let field = named_policy(&a.field, &a.policies).map_err(registry_error)?;
    if a.nd.iter().any(|&n| n < 2) {
        return Err(CliError::Config("every n_d must be at least 2".into()));
    }
    let population = if a.population.is_empty() {
        vec![ego.clone()]
    } else {
        a.population
            .iter()
            .map(|n| named_policy(n, &a.policies).map_err(registry_error))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut rows = Vec::with_capacity(a.nd.len());
    for &n_d in &a.nd {
        let outcomes = (0..a.episodes)
            .into_par_iter()
            .map(|e| evaluate_episode(&ego, &field, n_d, a.steps, &cfg.env, &cfg.actions, cfg.seed, e))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::run)?;
        rows.push(ScenarioResult::from_episodes(n_d, &outcomes));
    }
    let mut outputs = Outputs::new(&a.out, "simulate", cfg.hash(), cfg.seed)?;
    outputs.write(
        &format!("scenarios_{}_vs_{}.csv", a.ego, a.field),
        &reports::scenario_csv(&rows),
    )?;
    outputs.finish()?;

    if let Some(path) = &a.trajectories {
        let n_d = a.nd.first().copied().unwrap_or(2);
        let rollout = record_rollout(
            &population,
            n_d,
            cfg.simulate.trajectory_steps,
            cfg.frames_per_step(),
            &cfg.env,
            &cfg.actions,
            cfg.seed,
        )
        .map_err(CliError::run)?;
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &rollout.records, &cfg.ingest.columns, cfg.ingest.feet).map_err(CliError::run)?;
        let (dir, name) = split_path(path);
        let mut outputs = Outputs::new(&dir, "simulate", cfg.hash(), cfg.seed)?;
        outputs.write(&name, &buf)?;
        outputs.finish()?;
    }
    Ok(())
}

fn split_path(path: &Path) -> (PathBuf, String) {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    (dir, file_name(path))
}

pub fn cmd_ingest(cfg: &RunConfig, data: &Path, out: &Path) -> Result<(), CliError> {
    let file = std::fs::File::open(data).map_err(|e| CliError::io(data, e))?;
    let parsed = parse_trajectories(std::io::BufReader::new(file), &cfg.ingest.columns, cfg.ingest.feet).map_err(
        |e| match e {
            ParseError::Csv(c) if c.is_io_error() => CliError::run(c),
            other => CliError::Input(format!("{}: {other}", data.display())),
        },
    )?;
    let mut tracks = build_tracks(&parsed.records);
    clamp_lanes(&mut tracks);
    if cfg.ingest.mirror_lanes {
        mirror_lanes(&mut tracks);
    }
    let icfg = cfg.ingest_config();
    let (kept, dropped) = clean_tracks(tracks, &icfg);
    let sequences = reconstruct_states_actions(&kept, &icfg);
    let drivers = sequences.par_iter().map(build_empirical_policy).collect();
    let doc = EmpiricalFile {
        version: EMPIRICAL_VERSION,
        skipped_rows: parsed.skipped_rows,
        dropped_tracks: dropped
            .into_iter()
            .map(|(vehicle_id, e)| DroppedTrack {
                vehicle_id,
                reason: e.to_string(),
            })
            .collect(),
        drivers,
    };
    if doc.skipped_rows > 0 {
        eprintln!("levelk: skipped {} unreadable rows", doc.skipped_rows);
    }
    let (dir, name) = split_path(out);
    let mut outputs = Outputs::new(&dir, "ingest", cfg.hash(), cfg.seed)?;
    outputs.write(&name, save_empirical(&doc).as_bytes())?;
    outputs.finish()
}

fn family_label(dir: &Path) -> String {
    let name = std::fs::canonicalize(dir)
        .ok()
        .and_then(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "policies".into());
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn cmd_validate(
    cfg: &RunConfig,
    policy_dirs: &[PathBuf],
    empirical: &Path,
    n_limit: u64,
    out: &Path,
) -> Result<(), CliError> {
    let bytes = std::fs::read(empirical).map_err(|e| CliError::io(empirical, e))?;
    let emp = load_empirical(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", empirical.display())))?;
    let probes = collect_probes(&emp.drivers);
    let mut outputs = Outputs::new(out, "validate", cfg.hash(), cfg.seed)?;
    let mut labels = Vec::new();
    for dir in policy_dirs {
        let levels = stored_levels(dir, cfg.levels.max_level);
        if levels.is_empty() {
            return Err(CliError::Missing(format!("no level1.policy.json in {}", dir.display())));
        }
        let family = levels
            .iter()
            .map(|&k| files::read_policy_file(&policy_path(dir, k)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(registry_error)?;
        let encodings: Vec<&str> = family
            .iter()
            .filter_map(|p| match &p.policy {
                Policy::Network { encoding, .. } => Some(encoding.name()),
                _ => None,
            })
            .collect();
        let encoding = if encodings.windows(2).all(|w| w[0] == w[1]) {
            encodings.first().copied().unwrap_or("rule").to_string()
        } else {
            "mixed".to_string()
        };
        let gt = derive_gt_state_policy(&family, &probes, &cfg.env).map_err(CliError::run)?;
        let reports = emp
            .drivers
            .par_iter()
            .map(|d| compare_driver(d, &gt.policy, n_limit, cfg.validate.alpha))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::run)?;
        let mut label = format!("{}_n{n_limit}", family_label(dir));
        while labels.contains(&label) {
            label.push('_');
        }
        labels.push(label.clone());
        let summary = aggregate(&reports);
        let doc = SummaryDocument {
            label: label.clone(),
            encoding,
            levels: levels.clone(),
            n_limit,
            alpha: cfg.validate.alpha,
            missing_probes: gt.missing_probes.len(),
            summary,
        };
        outputs.write(&format!("{label}.drivers.csv"), &reports::driver_csv(&reports, &levels))?;
        outputs.write(&format!("{label}.colormap.csv"), &reports::color_map_csv(&doc.summary))?;
        outputs.write(&format!("{label}.summary.json"), &reports::summary_json(&doc))?;
    }
    outputs.finish()
}

pub fn cmd_report(cfg: &RunConfig, input: &Path, out: &Path) -> Result<(), CliError> {
    let entries = std::fs::read_dir(input).map_err(|e| CliError::io(input, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".summary.json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Missing(format!("no *.summary.json in {}", input.display())));
    }
    let docs = paths
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_slice::<SummaryDocument>(&bytes)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut outputs = Outputs::new(out, "report", cfg.hash(), cfg.seed)?;
    outputs.write("report.csv", &reports::table_csv(&docs))?;
    outputs.write("report.md", reports::table_markdown(&docs).as_bytes())?;
    outputs.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn driver_count_forms() {
        assert_eq!(parse_nd("75:125:5").unwrap().len(), 11);
        assert_eq!(parse_nd("20").unwrap(), vec![20]);
        assert_eq!(parse_nd("5,10").unwrap(), vec![5, 10]);
        assert!(parse_nd("1:2:0").is_err());
        assert!(parse_nd("a").is_err());
    }
}
