//! Tabular POMDP with sparse transition rows.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("transition row (state {state}, action {action}) sums to {sum}")]
    TransitionRow { state: usize, action: usize, sum: f64 },
    #[error("observation row for state {state} sums to {sum}")]
    ObservationRow { state: usize, sum: f64 },
    #[error("negative or non-finite probability in {0}")]
    BadProbability(&'static str),
    #[error("next-state index {0} out of range")]
    BadIndex(usize),
    #[error("discount {0} outside (0, 1)")]
    BadDiscount(f64),
    #[error("table size mismatch: {0}")]
    Shape(&'static str),
}

const ROW_TOLERANCE: f64 = 1e-12;

/// Finite POMDP. Transitions are stored row-compressed: row `s * A + a`
/// holds `(next_state, probability)` pairs. The observation model depends
/// on the reached state only.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePomdp {
    n_states: usize,
    n_actions: usize,
    n_obs: usize,
    row_start: Vec<usize>,
    entries: Vec<(u32, f64)>,
    rewards: Vec<f64>,
    observations: Vec<f64>,
    discount: f64,
}

/// Incremental construction of a [`DiscretePomdp`].
#[derive(Debug, Clone)]
pub struct PomdpBuilder {
    n_states: usize,
    n_actions: usize,
    n_obs: usize,
    rows: Vec<Vec<(u32, f64)>>,
    rewards: Vec<f64>,
    observations: Vec<f64>,
    discount: f64,
}

impl PomdpBuilder {
    pub fn new(n_states: usize, n_actions: usize, n_obs: usize, discount: f64) -> Self {
        Self {
            n_states,
            n_actions,
            n_obs,
            rows: vec![Vec::new(); n_states * n_actions],
            rewards: vec![0.0; n_states * n_actions],
            observations: vec![0.0; n_states * n_obs],
            discount,
        }
    }

    /// Adds probability mass to `next`; repeated targets are merged.
    pub fn add_transition(&mut self, state: usize, action: usize, next: usize, p: f64) {
        let row = &mut self.rows[state * self.n_actions + action];
        match row.iter_mut().find(|(n, _)| *n as usize == next) {
            Some(entry) => entry.1 += p,
            None => row.push((next as u32, p)),
        }
    }

    pub fn set_reward(&mut self, state: usize, action: usize, r: f64) {
        self.rewards[state * self.n_actions + action] = r;
    }

    pub fn set_observation(&mut self, state: usize, obs: usize, p: f64) {
        self.observations[state * self.n_obs + obs] = p;
    }

    pub fn build(self) -> Result<DiscretePomdp, ModelError> {
        let mut row_start = Vec::with_capacity(self.rows.len() + 1);
        let mut entries = Vec::new();
        row_start.push(0);
        for mut row in self.rows {
            row.retain(|&(_, p)| p != 0.0);
            row.sort_by_key(|&(n, _)| n);
            entries.extend(row);
            row_start.push(entries.len());
        }
        let model = DiscretePomdp {
            n_states: self.n_states,
            n_actions: self.n_actions,
            n_obs: self.n_obs,
            row_start,
            entries,
            rewards: self.rewards,
            observations: self.observations,
            discount: self.discount,
        };
        model.validate()?;
        Ok(model)
    }
}

impl DiscretePomdp {
    /// Builds a model from dense tables: `transition[s][a][s']`,
    /// `reward[s][a]` and `observation[s'][o]`.
    pub fn from_dense(
        transition: &[Vec<Vec<f64>>],
        reward: &[Vec<f64>],
        observation: &[Vec<f64>],
        discount: f64,
    ) -> Result<Self, ModelError> {
        let n_states = transition.len();
        let n_actions = transition.first().map_or(0, |r| r.len());
        let n_obs = observation.first().map_or(0, |r| r.len());
        if reward.len() != n_states || observation.len() != n_states {
            return Err(ModelError::Shape("state dimension"));
        }
        let mut b = PomdpBuilder::new(n_states, n_actions, n_obs, discount);
        for s in 0..n_states {
            if transition[s].len() != n_actions || reward[s].len() != n_actions {
                return Err(ModelError::Shape("action dimension"));
            }
            for a in 0..n_actions {
                if transition[s][a].len() != n_states {
                    return Err(ModelError::Shape("next-state dimension"));
                }
                for (next, &p) in transition[s][a].iter().enumerate() {
                    if p != 0.0 {
                        b.add_transition(s, a, next, p);
                    }
                }
                b.set_reward(s, a, reward[s][a]);
            }
            if observation[s].len() != n_obs {
                return Err(ModelError::Shape("observation dimension"));
            }
            for (o, &p) in observation[s].iter().enumerate() {
                b.set_observation(s, o, p);
            }
        }
        b.build()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(ModelError::BadDiscount(self.discount));
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let mut sum = 0.0;
                for &(n, p) in self.transitions(s, a) {
                    if !(p.is_finite() && p >= 0.0) {
                        return Err(ModelError::BadProbability("transition"));
                    }
                    if n as usize >= self.n_states {
                        return Err(ModelError::BadIndex(n as usize));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(ModelError::TransitionRow {
                        state: s,
                        action: a,
                        sum,
                    });
                }
                if !self.reward(s, a).is_finite() {
                    return Err(ModelError::BadProbability("reward"));
                }
            }
            let row = self.observation_row(s);
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(ModelError::BadProbability("observation"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(ModelError::ObservationRow { state: s, sum });
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_observations(&self) -> usize {
        self.n_obs
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Nonzero entries of `T(. | s, a)`, sorted by next state.
    pub fn transitions(&self, s: usize, a: usize) -> &[(u32, f64)] {
        let row = s * self.n_actions + a;
        &self.entries[self.row_start[row]..self.row_start[row + 1]]
    }

    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transitions(s, a)
            .iter()
            .find(|(n, _)| *n as usize == next)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    pub fn observation_prob(&self, o: usize, s_next: usize) -> f64 {
        self.observations[s_next * self.n_obs + o]
    }

    pub fn observation_row(&self, s_next: usize) -> &[f64] {
        &self.observations[s_next * self.n_obs..(s_next + 1) * self.n_obs]
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.rewards.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn reward_range(&self) -> (f64, f64) {
        self.rewards
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                (lo.min(r), hi.max(r))
            })
    }
}
