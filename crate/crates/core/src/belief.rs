//! Discrete Bayes filter over POMDP states, the QMDP execution loop, and the
//! oracle and baseline speed-scale policies used for comparison.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DiscretePomdp;
use crate::pomdp::{Action, DiscreteState, Obs, NUM_STATES};
use crate::qmdp::{AlphaVectorPolicy, SolverError};
use crate::world::{bin_observation, SensorObservation, COUNT_BINS};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("observation {obs} has zero probability under the predicted belief")]
    ZeroMass { obs: usize },
    #[error("belief sums to {0}")]
    Unnormalized(f64),
    #[error("belief has {got} entries, model has {expected} states")]
    Length { got: usize, expected: usize },
    #[error(transparent)]
    Policy(#[from] SolverError),
}

/// Probability vector over model states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn uniform(n_states: usize) -> Self {
        Self(vec![1.0 / n_states as f64; n_states])
    }

    pub fn point_mass(n_states: usize, state: usize) -> Self {
        let mut p = vec![0.0; n_states];
        p[state] = 1.0;
        Self(p)
    }

    /// Wraps a probability vector after checking it is normalized.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self, FilterError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE
        {
            return Err(FilterError::Unnormalized(sum));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    /// Total mass on crossing states of the crosswalk model.
    pub fn crossing_probability(&self) -> f64 {
        debug_assert_eq!(self.0.len(), NUM_STATES);
        self.0
            .iter()
            .enumerate()
            .filter(|(i, _)| DiscreteState::from_index(*i).crossing)
            .map(|(_, p)| p)
            .sum()
    }
}

/// `b0`: uniform over every model state.
pub fn init_belief(model: &DiscretePomdp) -> Belief {
    Belief::uniform(model.n_states())
}

/// Predict through `T(. | s, a)`, weight by `O(o | s')`, renormalize.
pub fn belief_update(
    b: &Belief,
    action: usize,
    obs: usize,
    model: &DiscretePomdp,
) -> Result<Belief, FilterError> {
    if b.len() != model.n_states() {
        return Err(FilterError::Length {
            got: b.len(),
            expected: model.n_states(),
        });
    }
    let mut next = vec![0.0; model.n_states()];
    for (s, &p) in b.0.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for &(n, t) in model.transitions(s, action) {
            next[n as usize] += t * p;
        }
    }
    for (s, p) in next.iter_mut().enumerate() {
        *p *= model.observation_prob(obs, s);
    }
    let total: f64 = next.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(FilterError::ZeroMass { obs });
    }
    for p in &mut next {
        *p /= total;
    }
    Ok(Belief(next))
}

/// Maps the sensor summary to a model observation.
pub fn observation_of(sensor: &SensorObservation) -> Obs {
    Obs {
        count_bin: sensor.count_bin.min(COUNT_BINS - 1),
        detected: sensor.pedestrian_detected,
    }
}

/// One pass of the execution loop: pick the action from `b`, then fold in
/// the observation that followed it.
pub fn pomdp_step(
    b: &Belief,
    policy: &AlphaVectorPolicy,
    sensor: &SensorObservation,
    model: &DiscretePomdp,
) -> Result<(f64, Belief), FilterError> {
    let action = policy.best_action(b.probs())?;
    let next = belief_update(b, action, observation_of(sensor).index(), model)?;
    Ok((Action(action).scale(), next))
}

/// Stateful executor holding the belief and the action in flight.
///
/// Each call to [`PomdpExecutor::decide`] first conditions the belief on the
/// observation that arrived after the previous action, then selects the next
/// action from the updated belief.
#[derive(Debug, Clone)]
pub struct PomdpExecutor<'a> {
    model: &'a DiscretePomdp,
    policy: &'a AlphaVectorPolicy,
    belief: Belief,
    pending: Option<usize>,
    resets: usize,
}

impl<'a> PomdpExecutor<'a> {
    pub fn new(model: &'a DiscretePomdp, policy: &'a AlphaVectorPolicy) -> Self {
        Self {
            model,
            policy,
            belief: init_belief(model),
            pending: None,
            resets: 0,
        }
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    /// Number of times an impossible observation forced a reset to uniform.
    pub fn resets(&self) -> usize {
        self.resets
    }

    pub fn decide(&mut self, sensor: &SensorObservation) -> Result<Action, FilterError> {
        if let Some(prev) = self.pending {
            let obs = observation_of(sensor).index();
            self.belief = match belief_update(&self.belief, prev, obs, self.model) {
                Ok(b) => b,
                Err(FilterError::ZeroMass { obs }) => {
                    log::warn!("observation {obs} impossible under current belief; resetting to uniform");
                    self.resets += 1;
                    init_belief(self.model)
                }
                Err(e) => return Err(e),
            };
        }
        let a = self.policy.best_action(self.belief.probs())?;
        self.pending = Some(a);
        Ok(Action(a))
    }
}

/// Which speed-scale policy drives the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Oracle,
    Baseline,
    Pomdp,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Oracle, PolicyKind::Baseline, PolicyKind::Pomdp];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Oracle => "oracle",
            PolicyKind::Baseline => "baseline",
            PolicyKind::Pomdp => "pomdp",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(PolicyKind::Oracle),
            "baseline" => Ok(PolicyKind::Baseline),
            "pomdp" => Ok(PolicyKind::Pomdp),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

/// Occlusion heuristic: ten scale levels, full speed with a negligible
/// shadow and a stop in the top count bin.
pub fn baseline_scale(unobservable_count: usize) -> f64 {
    let top = (COUNT_BINS - 1) as f64;
    (top - bin_observation(unobservable_count) as f64) / top
}

/// Stop-line tracking used by the oracle and by perception-triggered stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    /// Target standstill this far before the line, m.
    pub margin: f64,
    /// Deceleration limit the vehicle can realize, m/s^2.
    pub max_decel: f64,
    /// Deceleration of the planned stop, m/s^2.
    pub trigger_decel: f64,
    /// Proportional gain of the speed loop the scale feeds, 1/s.
    pub speed_gain: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            margin: 2.0,
            max_decel: 3.0,
            trigger_decel: 2.0,
            speed_gain: 1.0,
        }
    }
}

impl StopRule {
    /// Planned speed and deceleration with `remaining` meters to the stop
    /// point.
    ///
    /// A zero scale brakes the proportional loop at `speed_gain * v`, so the
    /// last stretch follows `v = speed_gain * remaining` (an exponential
    /// approach). Farther out the plan brakes at `trigger_decel` down to the
    /// speed where the two meet.
    pub fn profile(&self, remaining: f64) -> (f64, f64) {
        let remaining = remaining.max(0.0);
        let handoff = self.trigger_decel / self.speed_gain;
        let tail = handoff / self.speed_gain;
        if remaining <= tail {
            let v = self.speed_gain * remaining;
            (v, self.speed_gain * v)
        } else {
            let v = (handoff * handoff + 2.0 * self.trigger_decel * (remaining - tail)).sqrt();
            (v, self.trigger_decel)
        }
    }

    /// Scale that brings the vehicle to rest at `line - margin`.
    ///
    /// The target speed handed to the loop is the planned speed minus the
    /// feedforward `decel / speed_gain`, so a vehicle on the plan decelerates
    /// exactly as planned and one above it brakes harder, up to `max_decel`.
    /// Far from the line the target exceeds the desired speed and the stop
    /// imposes no limit.
    pub fn scale(&self, s: f64, speed: f64, line: f64, desired_speed: f64) -> f64 {
        if s >= line {
            return 1.0;
        }
        let (v_plan, decel) = self.profile(line - self.margin - s);
        let floor = speed.max(0.0) - self.max_decel / self.speed_gain;
        let target = (v_plan - decel / self.speed_gain).max(floor);
        (target / desired_speed).clamp(0.0, 1.0)
    }
}

/// Ground truth the oracle may read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleTruth {
    /// A pedestrian is in the crosswalk.
    pub crossing_active: bool,
    /// Path distance of the crosswalk line, m.
    pub crosswalk_line: f64,
}

/// Perfect-information policy: full scale unless a crossing is active ahead,
/// in which case the crosswalk becomes a stop constraint.
pub fn oracle_scale(
    truth: &OracleTruth,
    ego_s: f64,
    ego_speed: f64,
    desired_speed: f64,
    rule: &StopRule,
) -> f64 {
    if !truth.crossing_active || ego_s >= truth.crosswalk_line {
        return 1.0;
    }
    rule.scale(ego_s, ego_speed, truth.crosswalk_line, desired_speed)
}
