use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use crosswalk_core::harness::{
    export_trace, run_scenario_with, HarnessError, PomdpRuntime, ScenarioConfig, Trace, TraceFormat,
};
use crosswalk_core::pomdp::{action_labels, build_model, ModelConfig};
use crosswalk_core::qmdp::{extract_alphas, value_iteration_traced, DEFAULT_MAX_ITERS};
use crosswalk_core::world::{build_grid, count_unobservable, EgoPose, PedestrianPlacement, Scene};
use crosswalk_core::PolicyKind;

#[derive(Parser)]
#[command(name = "crosswalk", version, about = "Occluded crosswalk speed planning simulator")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the crosswalk model, run QMDP value iteration and write the policy file.
    Solve {
        /// Model config (TOML); built-in defaults when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Policy output file.
        #[arg(short, long, default_value = "policy.alpha")]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
    },
    /// Run one scenario and export its trace.
    Run {
        /// Scenario config (TOML).
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(short, long, default_value = "csv")]
        format: TraceFormat,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every `*.toml` scenario in a directory.
    Batch {
        /// Directory of scenario configs.
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(short, long, default_value = "csv")]
        format: TraceFormat,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rasterize the occupancy grid for a scene and ego pose.
    GridDump {
        /// Scene file (TOML); the reference scene when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Reference layout used without a scene file: hidden, exposed or none.
        #[arg(long, default_value = "hidden")]
        preset: String,
        #[arg(long, default_value_t = 0.0)]
        north: f64,
        #[arg(long, default_value_t = 0.0)]
        east: f64,
        /// Heading in radians from north toward east.
        #[arg(long, default_value_t = 0.0)]
        heading: f64,
        /// Output CSV (row per grid row, 0 free / 1 occupied / 2 unobservable).
        #[arg(short, long, default_value = "grid.csv")]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.command {
        Command::Solve {
            config,
            out,
            tolerance,
            max_iters,
        } => solve(config.as_deref(), &out, tolerance, max_iters),
        Command::Run {
            config,
            out_dir,
            format,
            seed,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let runtime = runtime_for(&cfg)?;
            let trace = finish_run(&cfg, &out_dir, run_scenario_with(&cfg, runtime.as_ref()))?;
            write_trace(&cfg, &trace, format, &out_dir)
        }
        Command::Batch {
            config,
            out_dir,
            format,
            seed,
        } => batch(&config, &out_dir, format, seed),
        Command::GridDump {
            config,
            preset,
            north,
            east,
            heading,
            out,
        } => {
            let scene = match config {
                Some(p) => Scene::load(&p)?,
                None => Scene::reference(parse_preset(&preset)?),
            };
            let grid = build_grid(&scene, &EgoPose { north, east, heading });
            fs::write(&out, grid.to_csv()).with_context(|| format!("writing {}", out.display()))?;
            println!("{} unobservable cells -> {}", count_unobservable(&grid), out.display());
            Ok(())
        }
    }
}

fn parse_preset(s: &str) -> Result<PedestrianPlacement> {
    Ok(match s {
        "hidden" => PedestrianPlacement::Hidden,
        "exposed" => PedestrianPlacement::Exposed,
        "none" => PedestrianPlacement::None,
        other => bail!("unknown preset {other:?} (expected hidden, exposed or none)"),
    })
}

fn solve(config: Option<&Path>, out: &Path, tolerance: f64, max_iters: usize) -> Result<()> {
    let cfg = match config {
        Some(p) => ModelConfig::load(p)?,
        None => ModelConfig::default(),
    };
    let model = build_model(&cfg)?;
    let start = std::time::Instant::now();
    let q = value_iteration_traced(&model, tolerance, max_iters, |k, r| {
        log::debug!("sweep {k}: residual {r:e}");
    })?;
    let policy = extract_alphas(&q, action_labels());
    policy.save(out)?;
    println!(
        "solved {} states x {} actions in {} sweeps ({:.2} s), residual {:e} -> {}",
        model.n_states(),
        model.n_actions(),
        q.iterations,
        start.elapsed().as_secs_f64(),
        q.residual,
        out.display()
    );
    Ok(())
}

fn runtime_for(cfg: &ScenarioConfig) -> Result<Option<PomdpRuntime>> {
    Ok(match cfg.policy {
        PolicyKind::Pomdp => Some(PomdpRuntime::for_config(cfg)?),
        _ => None,
    })
}

/// Keeps the partial trace of an aborted run next to the error.
fn finish_run(cfg: &ScenarioConfig, out_dir: &Path, result: Result<Trace, HarnessError>) -> Result<Trace> {
    match result {
        Ok(t) => Ok(t),
        Err(HarnessError::Run { message, partial }) => {
            let stem = format!("{}_partial", cfg.name);
            if let Err(e) = export_trace(&partial, TraceFormat::Csv, out_dir, &stem) {
                log::warn!("could not save partial trace: {e}");
            }
            bail!("{}: run aborted after {} steps: {message}", cfg.name, partial.rows.len())
        }
        Err(e) => Err(e.into()),
    }
}

fn write_trace(cfg: &ScenarioConfig, trace: &Trace, format: TraceFormat, out_dir: &Path) -> Result<()> {
    let files = export_trace(trace, format, out_dir, &cfg.name)?;
    let last = trace.rows.last();
    println!(
        "{}: {} rows, termination {:?}, final s {:.2} m, final speed {:.2} m/s ({} files in {})",
        cfg.name,
        trace.rows.len(),
        trace.meta.termination,
        last.map_or(0.0, |r| r.s),
        last.map_or(0.0, |r| r.ux),
        files.len(),
        out_dir.display()
    );
    Ok(())
}

fn batch(dir: &Path, out_dir: &Path, format: TraceFormat, seed: Option<u64>) -> Result<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .toml scenario configs in {}", dir.display());
    }
    let mut configs = Vec::with_capacity(files.len());
    for f in &files {
        let mut cfg = ScenarioConfig::load(f)?;
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        configs.push(cfg);
    }

    // Runs that share model and policy inputs share one solved runtime.
    let mut runtimes: HashMap<(Option<PathBuf>, Option<PathBuf>), PomdpRuntime> = HashMap::new();
    for cfg in configs.iter().filter(|c| c.policy == PolicyKind::Pomdp) {
        let key = (cfg.model_config.clone(), cfg.policy_file.clone());
        if let Entry::Vacant(slot) = runtimes.entry(key) {
            slot.insert(PomdpRuntime::for_config(cfg)?);
        }
    }

    let results: Vec<Result<Trace, HarnessError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| {
                let rt = runtimes.get(&(cfg.model_config.clone(), cfg.policy_file.clone()));
                scope.spawn(move || run_scenario_with(cfg, rt))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });

    let mut failures = 0;
    for (cfg, result) in configs.iter().zip(results) {
        match finish_run(cfg, out_dir, result).and_then(|t| write_trace(cfg, &t, format, out_dir)) {
            Ok(()) => {}
            Err(e) => {
                failures += 1;
                eprintln!("error: {e:#}");
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} scenarios failed", configs.len());
    }
    Ok(())
}
