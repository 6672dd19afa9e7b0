//! Discrete crosswalk POMDP: speed bin, path-distance bin and crossing flag,
//! with speed-scale actions and (occlusion bin, detection) observations.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DiscretePomdp, ModelError, PomdpBuilder};
use crate::world::COUNT_BINS;

pub const SPEED_BINS: usize = 11;
pub const DISTANCE_BINS: usize = 121;
pub const NUM_STATES: usize = SPEED_BINS * DISTANCE_BINS * 2;
pub const NUM_ACTIONS: usize = 11;
pub const NUM_OBSERVATIONS: usize = COUNT_BINS * 2;

/// Width of one speed bin, m/s.
pub const SPEED_BIN_WIDTH: f64 = 1.0;
/// Width of one distance bin, m.
pub const DISTANCE_BIN_WIDTH: f64 = 0.5;
/// Speed commanded by a scale of 1.0, m/s.
pub const MAX_SPEED: f64 = 10.0;
/// Last distance bin; reaching it ends the episode.
pub const TERMINAL_BIN: usize = DISTANCE_BINS - 1;

#[derive(Debug, Error)]
pub enum PomdpError {
    #[error("invalid model parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("failed to read model config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse model config {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiscreteState {
    pub v_bin: usize,
    pub d_bin: usize,
    pub crossing: bool,
}

impl DiscreteState {
    pub fn new(v_bin: usize, d_bin: usize, crossing: bool) -> Self {
        debug_assert!(v_bin < SPEED_BINS && d_bin < DISTANCE_BINS);
        Self {
            v_bin,
            d_bin,
            crossing,
        }
    }

    pub fn index(&self) -> usize {
        usize::from(self.crossing) * SPEED_BINS * DISTANCE_BINS + self.d_bin * SPEED_BINS + self.v_bin
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < NUM_STATES, "state index {i} out of range");
        let crossing = i >= SPEED_BINS * DISTANCE_BINS;
        let rem = i % (SPEED_BINS * DISTANCE_BINS);
        Self {
            v_bin: rem % SPEED_BINS,
            d_bin: rem / SPEED_BINS,
            crossing,
        }
    }

    /// Nearest speed bin and containing distance bin for continuous values.
    pub fn from_continuous(speed: f64, distance: f64, crossing: bool) -> Self {
        let v = (speed.max(0.0) / SPEED_BIN_WIDTH).round() as usize;
        let d = (distance.max(0.0) / DISTANCE_BIN_WIDTH).floor() as usize;
        Self::new(v.min(SPEED_BINS - 1), d.min(TERMINAL_BIN), crossing)
    }

    pub fn is_terminal(&self) -> bool {
        self.d_bin == TERMINAL_BIN
    }

    pub fn all() -> impl Iterator<Item = DiscreteState> {
        (0..NUM_STATES).map(Self::from_index)
    }
}

/// Speed-scale action `k / 10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(pub usize);

impl Action {
    pub fn scale(&self) -> f64 {
        self.0 as f64 / (NUM_ACTIONS - 1) as f64
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..NUM_ACTIONS).map(Action)
    }

    pub fn label(&self) -> String {
        format!("{:.1}", self.scale())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Obs {
    pub count_bin: usize,
    pub detected: bool,
}

impl Obs {
    pub fn index(&self) -> usize {
        usize::from(self.detected) * COUNT_BINS + self.count_bin
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < NUM_OBSERVATIONS, "observation index {i} out of range");
        Self {
            count_bin: i % COUNT_BINS,
            detected: i >= COUNT_BINS,
        }
    }
}

/// Free parameters of the crosswalk model.
///
/// Every key is optional in the TOML file:
///
/// ```toml
/// epoch = 0.5                 # s per decision
/// p_adapt = 0.75              # speed bin moves toward the command
/// distance_smear = [0.15, 0.7, 0.15]
/// crossing_persist = 0.95
/// crossing_onset = 0.05
/// discount = 0.99
/// crosswalk_bin = 80
/// occlusion_zone = [0, 71]    # inclusive distance bins
/// too_fast_bin = 6            # penalize v_bin above this in the zone
/// reward_goal = 100.0
/// reward_not_yielding = -50.0
/// reward_too_fast = -5.0
/// p_detect_crossing = 0.8
/// p_detect_clear = 0.5
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub epoch: f64,
    pub p_adapt: f64,
    pub distance_smear: [f64; 3],
    pub crossing_persist: f64,
    pub crossing_onset: f64,
    pub discount: f64,
    pub crosswalk_bin: usize,
    pub occlusion_zone: [usize; 2],
    pub too_fast_bin: usize,
    pub reward_goal: f64,
    pub reward_not_yielding: f64,
    pub reward_too_fast: f64,
    pub p_detect_crossing: f64,
    pub p_detect_clear: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            epoch: 0.5,
            p_adapt: 0.75,
            distance_smear: [0.15, 0.7, 0.15],
            crossing_persist: 0.95,
            crossing_onset: 0.05,
            discount: 0.99,
            crosswalk_bin: 80,
            occlusion_zone: [0, 71],
            too_fast_bin: 6,
            reward_goal: 100.0,
            reward_not_yielding: -50.0,
            reward_too_fast: -5.0,
            p_detect_crossing: 0.8,
            p_detect_clear: 0.5,
        }
    }
}

fn check_prob(name: &'static str, value: f64) -> Result<(), PomdpError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(PomdpError::InvalidParam { name, value })
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), PomdpError> {
        if !(self.epoch > 0.0 && self.epoch.is_finite()) {
            return Err(PomdpError::InvalidParam {
                name: "epoch",
                value: self.epoch,
            });
        }
        check_prob("p_adapt", self.p_adapt)?;
        check_prob("crossing_persist", self.crossing_persist)?;
        check_prob("crossing_onset", self.crossing_onset)?;
        check_prob("p_detect_crossing", self.p_detect_crossing)?;
        check_prob("p_detect_clear", self.p_detect_clear)?;
        for p in self.distance_smear {
            check_prob("distance_smear", p)?;
        }
        let smear: f64 = self.distance_smear.iter().sum();
        if (smear - 1.0).abs() > 1e-12 {
            return Err(PomdpError::InvalidParam {
                name: "distance_smear",
                value: smear,
            });
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(PomdpError::InvalidParam {
                name: "discount",
                value: self.discount,
            });
        }
        if self.crosswalk_bin > TERMINAL_BIN {
            return Err(PomdpError::InvalidParam {
                name: "crosswalk_bin",
                value: self.crosswalk_bin as f64,
            });
        }
        if self.occlusion_zone[0] > self.occlusion_zone[1] || self.occlusion_zone[1] > TERMINAL_BIN {
            return Err(PomdpError::InvalidParam {
                name: "occlusion_zone",
                value: self.occlusion_zone[1] as f64,
            });
        }
        if self.too_fast_bin >= SPEED_BINS {
            return Err(PomdpError::InvalidParam {
                name: "too_fast_bin",
                value: self.too_fast_bin as f64,
            });
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PomdpError> {
        let cfg: Self = toml::from_str(text).map_err(|source| PomdpError::Parse {
            path: "<string>".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self, PomdpError> {
        let text = std::fs::read_to_string(path).map_err(|source| PomdpError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: Self = toml::from_str(&text).map_err(|source| PomdpError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn in_occlusion_zone(&self, d_bin: usize) -> bool {
        (self.occlusion_zone[0]..=self.occlusion_zone[1]).contains(&d_bin)
    }
}

/// Speed bin commanded by an action.
fn commanded_bin(a: Action) -> usize {
    ((a.scale() * MAX_SPEED / SPEED_BIN_WIDTH).round() as usize).min(SPEED_BINS - 1)
}

/// Next-state distribution for `(s, a)`. Entries with equal targets are
/// merged; probabilities are positive and sum to one.
pub fn transition(cfg: &ModelConfig, s: DiscreteState, a: Action) -> Vec<(DiscreteState, f64)> {
    if s.is_terminal() {
        return vec![(s, 1.0)];
    }

    let target = commanded_bin(a);
    let speed: Vec<(usize, f64)> = if target == s.v_bin {
        vec![(s.v_bin, 1.0)]
    } else {
        let step = if target > s.v_bin { s.v_bin + 1 } else { s.v_bin - 1 };
        vec![(step, cfg.p_adapt), (s.v_bin, 1.0 - cfg.p_adapt)]
    };

    let advance = (s.v_bin as f64 * SPEED_BIN_WIDTH * cfg.epoch / DISTANCE_BIN_WIDTH).round() as usize;
    let distance: Vec<(usize, f64)> = if advance == 0 {
        vec![(s.d_bin, 1.0)]
    } else {
        (0..3)
            .map(|k| {
                let d = (s.d_bin + advance + k - 1).min(TERMINAL_BIN);
                (d, cfg.distance_smear[k])
            })
            .collect()
    };

    let crossing: [(bool, f64); 2] = if s.crossing {
        [(true, cfg.crossing_persist), (false, 1.0 - cfg.crossing_persist)]
    } else {
        [(true, cfg.crossing_onset), (false, 1.0 - cfg.crossing_onset)]
    };

    let mut out: Vec<(DiscreteState, f64)> = Vec::with_capacity(12);
    for &(v, pv) in &speed {
        for &(d, pd) in &distance {
            for &(c, pc) in &crossing {
                let p = pv * pd * pc;
                if p == 0.0 {
                    continue;
                }
                let next = DiscreteState::new(v, d, c);
                match out.iter_mut().find(|(n, _)| *n == next) {
                    Some(entry) => entry.1 += p,
                    None => out.push((next, p)),
                }
            }
        }
    }
    out
}

/// `Pr(o | s')`: uniform over count bins times the detection likelihood.
pub fn observation_prob(cfg: &ModelConfig, o: Obs, s_next: DiscreteState) -> f64 {
    let p_detect = if s_next.crossing {
        cfg.p_detect_crossing
    } else {
        cfg.p_detect_clear
    };
    let p_c = if o.detected { p_detect } else { 1.0 - p_detect };
    p_c / COUNT_BINS as f64
}

/// Expected immediate reward of taking `a` in `s`.
///
/// The goal term is paid on entering the terminal distance bin, weighted by
/// the probability of doing so this epoch.
pub fn reward(cfg: &ModelConfig, s: DiscreteState, a: Action) -> f64 {
    if s.is_terminal() {
        return 0.0;
    }
    let mut r = 0.0;
    let p_goal: f64 = transition(cfg, s, a)
        .iter()
        .filter(|(n, _)| n.is_terminal())
        .map(|(_, p)| p)
        .sum();
    r += cfg.reward_goal * p_goal.min(1.0);
    if s.crossing && s.d_bin < cfg.crosswalk_bin && a.0 > 0 {
        r += cfg.reward_not_yielding;
    }
    if s.v_bin > cfg.too_fast_bin && cfg.in_occlusion_zone(s.d_bin) {
        r += cfg.reward_too_fast;
    }
    r
}

/// `(states, actions, observations)`.
pub fn enumerate_spaces() -> (usize, usize, usize) {
    (NUM_STATES, NUM_ACTIONS, NUM_OBSERVATIONS)
}

/// Tabulates the full model.
pub fn build_model(cfg: &ModelConfig) -> Result<DiscretePomdp, PomdpError> {
    cfg.validate()?;
    let mut b = PomdpBuilder::new(NUM_STATES, NUM_ACTIONS, NUM_OBSERVATIONS, cfg.discount);
    for s in DiscreteState::all() {
        let si = s.index();
        for a in Action::all() {
            for (next, p) in transition(cfg, s, a) {
                b.add_transition(si, a.0, next.index(), p);
            }
            b.set_reward(si, a.0, reward(cfg, s, a));
        }
        for oi in 0..NUM_OBSERVATIONS {
            b.set_observation(si, oi, observation_prob(cfg, Obs::from_index(oi), s));
        }
    }
    Ok(b.build()?)
}

/// Action labels in vector order.
pub fn action_labels() -> Vec<String> {
    Action::all().map(|a| a.label()).collect()
}
