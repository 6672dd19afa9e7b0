//! Scenario configuration and the closed-loop runner.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use super::control::{speed_control, steer_control, ControlConfig};
use super::path_builder::{build_avoidance_path, crosswalk_line_s, ego_lane_occluder, PathConfig};
use super::trace::{Termination, Trace, TraceMeta, TraceRow};
use super::HarnessError;
use crate::belief::{baseline_scale, oracle_scale, OracleTruth, PolicyKind, PomdpExecutor, StopRule};
use crate::dynamics::{step_dynamics, VehicleParams, VehicleState};
use crate::model::DiscretePomdp;
use crate::pomdp::{action_labels, build_model, ModelConfig};
use crate::qmdp::{extract_alphas, value_iteration, AlphaVectorPolicy, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};
use crate::world::{sense, EgoPose, PedestrianPlacement, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminationConfig {
    /// Speed under which the vehicle counts as standing, m/s.
    pub stuck_speed: f64,
    /// Standing time without a required stop that ends the run, s.
    pub stuck_time: f64,
    /// Distance from the CG to the occluder that ends the run, m.
    pub proximity: f64,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        Self {
            stuck_speed: 0.05,
            stuck_time: 3.0,
            proximity: 1.5,
        }
    }
}

/// One closed-loop run. See `configs/scenarios/` for annotated examples.
///
/// The scene comes from `scene_file`, an inline `[scene]` table, or the
/// built-in reference layout named by `preset` (`hidden`, `exposed`,
/// `none`), in that order of precedence. Relative file paths are resolved
/// against the config file's directory by [`ScenarioConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub policy: PolicyKind,
    pub desired_speed: f64,
    pub duration: f64,
    pub control_period: f64,
    pub decision_period: f64,
    pub seed: u64,
    pub preset: PedestrianPlacement,
    pub scene: Option<Scene>,
    pub scene_file: Option<PathBuf>,
    pub vehicle_config: Option<PathBuf>,
    pub model_config: Option<PathBuf>,
    pub policy_file: Option<PathBuf>,
    pub control: ControlConfig,
    pub path: PathConfig,
    pub stop: StopRule,
    pub termination: TerminationConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            policy: PolicyKind::Pomdp,
            desired_speed: 10.0,
            duration: 15.0,
            control_period: 0.01,
            decision_period: 0.5,
            seed: 0,
            preset: PedestrianPlacement::Hidden,
            scene: None,
            scene_file: None,
            vehicle_config: None,
            model_config: None,
            policy_file: None,
            control: ControlConfig::default(),
            path: PathConfig::default(),
            stop: StopRule::default(),
            termination: TerminationConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Reference scenario for a policy and pedestrian placement.
    pub fn reference(policy: PolicyKind, placement: PedestrianPlacement) -> Self {
        let tag = match placement {
            PedestrianPlacement::Hidden => "hidden",
            PedestrianPlacement::Exposed => "exposed",
            PedestrianPlacement::None => "clear",
        };
        Self {
            name: format!("{}-{tag}", policy.name()),
            policy,
            preset: placement,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = [
            ("duration", self.duration),
            ("control_period", self.control_period),
            ("decision_period", self.decision_period),
            ("desired_speed", self.desired_speed),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(HarnessError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let ratio = self.decision_period / self.control_period;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(HarnessError::Config(format!(
                "decision period {} is not an integer multiple of control period {}",
                self.decision_period, self.control_period
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: &FsPath) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(FsPath::new("."));
        for p in [
            &mut cfg.scene_file,
            &mut cfg.vehicle_config,
            &mut cfg.model_config,
            &mut cfg.policy_file,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_scene(&self) -> Result<Scene, HarnessError> {
        let scene = if let Some(file) = &self.scene_file {
            Scene::load(file)?
        } else if let Some(scene) = &self.scene {
            scene.clone()
        } else {
            Scene::reference(self.preset)
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn resolve_vehicle(&self) -> Result<VehicleParams, HarnessError> {
        match &self.vehicle_config {
            Some(p) => Ok(VehicleParams::load(p)?),
            None => Ok(VehicleParams::default()),
        }
    }

    pub fn resolve_model_config(&self) -> Result<ModelConfig, HarnessError> {
        match &self.model_config {
            Some(p) => Ok(ModelConfig::load(p)?),
            None => Ok(ModelConfig::default()),
        }
    }
}

/// Model and policy shared by runs of the same POMDP setup.
#[derive(Debug, Clone)]
pub struct PomdpRuntime {
    pub model: DiscretePomdp,
    pub policy: AlphaVectorPolicy,
}

impl PomdpRuntime {
    /// Builds the model and solves it with QMDP.
    pub fn solve(cfg: &ModelConfig) -> Result<Self, HarnessError> {
        let model = build_model(cfg)?;
        let q = value_iteration(&model, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS)?;
        log::info!("QMDP solved in {} sweeps (residual {:e})", q.iterations, q.residual);
        let policy = extract_alphas(&q, action_labels());
        Ok(Self { model, policy })
    }

    /// Builds the model and loads a previously solved policy.
    pub fn load(cfg: &ModelConfig, policy_file: &FsPath) -> Result<Self, HarnessError> {
        let model = build_model(cfg)?;
        let policy = AlphaVectorPolicy::load(policy_file)?;
        if policy.n_states() != model.n_states() || policy.n_actions() != model.n_actions() {
            return Err(HarnessError::Config(format!(
                "policy {} is {}x{}, model is {}x{}",
                policy_file.display(),
                policy.n_actions(),
                policy.n_states(),
                model.n_actions(),
                model.n_states()
            )));
        }
        Ok(Self { model, policy })
    }

    /// Loads or solves whatever `config` asks for.
    pub fn for_config(config: &ScenarioConfig) -> Result<Self, HarnessError> {
        let cfg = config.resolve_model_config()?;
        match &config.policy_file {
            Some(p) => Self::load(&cfg, p),
            None => Self::solve(&cfg),
        }
    }
}

/// Resolves every input and runs the scenario, solving the POMDP in-process
/// when no policy file is given.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Trace, HarnessError> {
    let runtime = match config.policy {
        PolicyKind::Pomdp => Some(PomdpRuntime::for_config(config)?),
        _ => None,
    };
    run_scenario_with(config, runtime.as_ref())
}

/// Runs a scenario against an already prepared POMDP runtime.
pub fn run_scenario_with(
    config: &ScenarioConfig,
    runtime: Option<&PomdpRuntime>,
) -> Result<Trace, HarnessError> {
    config.validate()?;
    let scene = config.resolve_scene()?;
    let params = config.resolve_vehicle()?;
    let path = build_avoidance_path(&scene, &config.path)?;
    let line = crosswalk_line_s(&path, &scene);
    let truth = OracleTruth {
        crossing_active: scene.crossing_active(),
        crosswalk_line: line,
    };
    let occluder = ego_lane_occluder(&scene).copied();

    let mut executor = match config.policy {
        PolicyKind::Pomdp => {
            let rt = runtime.ok_or_else(|| {
                HarnessError::Config("pomdp policy needs a solved model".into())
            })?;
            Some(PomdpExecutor::new(&rt.model, &rt.policy))
        }
        _ => None,
    };

    let dt = config.control_period;
    let n_steps = (config.duration / dt).round() as usize;
    let decision_every = (config.decision_period / dt).round() as usize;
    let vd = config.desired_speed;
    let ctl = &config.control;

    let mut meta = TraceMeta {
        name: config.name.clone(),
        policy: config.policy,
        seed: config.seed,
        desired_speed: vd,
        control_period: dt,
        decision_period: config.decision_period,
        duration: config.duration,
        crosswalk_line: line,
        termination: Termination::Duration,
        belief_resets: 0,
        scene: scene.clone(),
        path: path.points().to_vec(),
    };
    let mut rows: Vec<TraceRow> = Vec::with_capacity(n_steps);

    let mut state = VehicleState::at_path_start(&path);
    let mut policy_scale = 1.0;
    let mut perceived = false;
    let mut standing = 0.0;

    for k in 0..n_steps {
        let t = k as f64 * dt;
        let pose = EgoPose {
            north: state.north,
            east: state.east,
            heading: state.psi,
        };
        let (_, sensor) = sense(&scene, &pose);
        perceived |= sensor.pedestrian_detected;

        if k % decision_every == 0 {
            policy_scale = match config.policy {
                PolicyKind::Oracle => 1.0,
                PolicyKind::Baseline => baseline_scale(sensor.unobservable_count),
                PolicyKind::Pomdp => {
                    let ex = executor.as_mut().expect("executor exists for pomdp");
                    match ex.decide(&sensor) {
                        Ok(a) => a.scale(),
                        Err(e) => {
                            meta.termination = Termination::Error;
                            meta.belief_resets = ex.resets();
                            return Err(HarnessError::Run {
                                message: e.to_string(),
                                partial: Box::new(Trace { meta, rows }),
                            });
                        }
                    }
                }
            };
        }

        let (scale, stop_scale, stop_required) = match config.policy {
            PolicyKind::Oracle => {
                let scale = oracle_scale(&truth, state.s, state.ux, vd, &config.stop);
                (scale, 1.0, truth.crossing_active && state.s < line)
            }
            _ => {
                let stop_scale = if perceived {
                    config.stop.scale(state.s, state.ux, line, vd)
                } else {
                    1.0
                };
                (policy_scale, stop_scale, perceived && state.s < line)
            }
        };
        let ax = speed_control(vd, scale.min(stop_scale), state.ux, ctl.kp, ctl.max_accel);
        let steer = steer_control(&state, &path, &params, ctl);

        let (p_crossing, belief_entropy) = match &executor {
            Some(ex) => (
                Some(ex.belief().crossing_probability()),
                Some(ex.belief().entropy()),
            ),
            None => (None, None),
        };
        rows.push(TraceRow {
            t,
            north: state.north,
            east: state.east,
            heading: state.psi,
            ux: state.ux,
            s: state.s,
            e: state.e,
            ax,
            steer,
            scale,
            stop_scale,
            unobservable_count: sensor.unobservable_count,
            count_bin: sensor.count_bin,
            detected: sensor.pedestrian_detected,
            p_crossing,
            belief_entropy,
        });

        let outcome = match step_dynamics(&state, steer, ax, dt, &params, &path) {
            Ok(o) => o,
            Err(e) => {
                meta.termination = Termination::Error;
                return Err(HarnessError::Run {
                    message: e.to_string(),
                    partial: Box::new(Trace { meta, rows }),
                });
            }
        };
        state = outcome.state;

        if outcome.off_path || state.s >= path.length() - 1e-6 {
            meta.termination = Termination::PathEnd;
            break;
        }
        if let Some(o) = &occluder {
            if o.distance_to(state.north, -state.east) < config.termination.proximity {
                meta.termination = Termination::Proximity;
                break;
            }
        }
        if state.ux < config.termination.stuck_speed && !stop_required {
            standing += dt;
            if standing > config.termination.stuck_time + 1e-9 {
                meta.termination = Termination::Stuck;
                break;
            }
        } else {
            standing = 0.0;
        }
    }

    if let Some(ex) = &executor {
        meta.belief_resets = ex.resets();
    }
    Ok(Trace { meta, rows })
}
