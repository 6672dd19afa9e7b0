//! QMDP: value iteration on the underlying MDP, one alpha vector per action,
//! and action selection by maximizing `alpha_a . b`.
//!
//! Policy file layout (UTF-8 text, whitespace separated, `#` starts a
//! comment line):
//!
//! ```text
//! qmdp-alpha 1
//! states <S> actions <A>
//! labels <label_0> ... <label_{A-1}>
//! <S values for action 0>
//! ...
//! <S values for action A-1>
//! ```
//!
//! Values are written in shortest round-trip exponent form, so a policy
//! read back is bit-identical to the one written.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use thiserror::Error;

use crate::model::DiscretePomdp;

/// Default sup-norm stopping tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Default sweep budget.
pub const DEFAULT_MAX_ITERS: usize = 10_000;

const POLICY_MAGIC: &str = "qmdp-alpha";
const POLICY_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("value iteration did not converge in {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("belief sums to {0}, expected 1")]
    UnnormalizedBelief(f64),
    #[error("belief has {got} entries, policy expects {expected}")]
    BeliefLength { got: usize, expected: usize },
    #[error("policy has non-finite entries")]
    NonFinite,
    #[error("policy file: {0}")]
    Format(String),
    #[error("policy file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// State-action values, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    /// Sweeps performed.
    pub iterations: usize,
    /// Sup-norm change of the last sweep.
    pub residual: f64,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
            iterations: 0,
            residual: 0.0,
        }
    }

    /// Builds a table from `rows[s][a]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_actions = rows.first().map_or(0, |r| r.len());
        Self {
            n_states: rows.len(),
            n_actions,
            values: rows.iter().flatten().copied().collect(),
            iterations: 0,
            residual: 0.0,
        }
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// `V(s) = max_a Q(s, a)`.
    pub fn state_values(&self) -> Vec<f64> {
        (0..self.n_states)
            .map(|s| self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    pub fn sup_distance(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// One synchronous Bellman optimality backup.
pub fn bellman_backup(model: &DiscretePomdp, q: &QTable) -> QTable {
    let v = q.state_values();
    let (ns, na) = (model.n_states(), model.n_actions());
    let gamma = model.discount();
    let mut values = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            let future: f64 = model
                .transitions(s, a)
                .iter()
                .map(|&(n, p)| p * v[n as usize])
                .sum();
            values.push(model.reward(s, a) + gamma * future);
        }
    }
    QTable {
        n_states: ns,
        n_actions: na,
        values,
        iterations: q.iterations + 1,
        residual: 0.0,
    }
}

/// Jacobi value iteration from `Q = 0` until the sup-norm change of a sweep
/// drops to `tolerance`.
pub fn value_iteration(
    model: &DiscretePomdp,
    tolerance: f64,
    max_iters: usize,
) -> Result<QTable, SolverError> {
    value_iteration_traced(model, tolerance, max_iters, |_, _| {})
}

/// Value iteration that reports `(sweep, residual)` after every sweep.
pub fn value_iteration_traced(
    model: &DiscretePomdp,
    tolerance: f64,
    max_iters: usize,
    mut on_sweep: impl FnMut(usize, f64),
) -> Result<QTable, SolverError> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(SolverError::BadTolerance(tolerance));
    }
    let mut q = QTable::zeros(model.n_states(), model.n_actions());
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_iters {
        let next = bellman_backup(model, &q);
        residual = next.sup_distance(&q);
        q = next;
        on_sweep(sweep, residual);
        if residual <= tolerance {
            q.residual = residual;
            log::debug!("value iteration converged after {sweep} sweeps, residual {residual:e}");
            return Ok(q);
        }
    }
    Err(SolverError::NotConverged {
        iterations: max_iters,
        residual,
    })
}

/// One alpha vector per action with aligned labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVectorPolicy {
    pub alphas: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

/// QMDP alpha vectors: `alpha_a(s) = Q(s, a)`.
pub fn extract_alphas(q: &QTable, labels: Vec<String>) -> AlphaVectorPolicy {
    assert_eq!(labels.len(), q.n_actions(), "one label per action");
    let alphas = (0..q.n_actions())
        .map(|a| (0..q.n_states()).map(|s| q.get(s, a)).collect())
        .collect();
    AlphaVectorPolicy { alphas, labels }
}

/// Generic labels `a0`, `a1`, ...
pub fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|a| format!("a{a}")).collect()
}

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

impl AlphaVectorPolicy {
    pub fn n_actions(&self) -> usize {
        self.alphas.len()
    }

    pub fn n_states(&self) -> usize {
        self.alphas.first().map_or(0, |a| a.len())
    }

    /// `alpha_a . b` for every action, without checking normalization.
    pub fn scores(&self, belief: &[f64]) -> Vec<f64> {
        self.alphas
            .iter()
            .map(|alpha| alpha.iter().zip(belief).map(|(x, b)| x * b).sum())
            .collect()
    }

    /// Index of the best-scoring action; ties go to the lowest index.
    pub fn argmax_unchecked(&self, belief: &[f64]) -> usize {
        let scores = self.scores(belief);
        let mut best = 0;
        for (a, &v) in scores.iter().enumerate().skip(1) {
            if v > scores[best] {
                best = a;
            }
        }
        best
    }

    /// QMDP action for a normalized belief.
    pub fn best_action(&self, belief: &[f64]) -> Result<usize, SolverError> {
        if belief.len() != self.n_states() {
            return Err(SolverError::BeliefLength {
                got: belief.len(),
                expected: self.n_states(),
            });
        }
        let sum: f64 = belief.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(SolverError::UnnormalizedBelief(sum));
        }
        Ok(self.argmax_unchecked(belief))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{POLICY_MAGIC} {POLICY_VERSION}");
        let _ = writeln!(out, "states {} actions {}", self.n_states(), self.n_actions());
        let _ = writeln!(out, "labels {}", self.labels.join(" "));
        for alpha in &self.alphas {
            let row: Vec<String> = alpha.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SolverError> {
        let bad = |m: &str| SolverError::Format(m.to_string());
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));

        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file"))?.split_whitespace().collect();
        match header.as_slice() {
            [magic, version] if *magic == POLICY_MAGIC => {
                if version.parse::<u32>().ok() != Some(POLICY_VERSION) {
                    return Err(SolverError::Format(format!("unsupported version {version}")));
                }
            }
            _ => return Err(bad("missing qmdp-alpha header")),
        }

        let dims: Vec<&str> = lines.next().ok_or_else(|| bad("missing dimensions"))?.split_whitespace().collect();
        let (n_states, n_actions) = match dims.as_slice() {
            ["states", s, "actions", a] => (
                s.parse::<usize>().map_err(|_| bad("bad state count"))?,
                a.parse::<usize>().map_err(|_| bad("bad action count"))?,
            ),
            _ => return Err(bad("malformed dimensions line")),
        };

        let label_line = lines.next().ok_or_else(|| bad("missing labels"))?;
        let mut tokens = label_line.split_whitespace();
        if tokens.next() != Some("labels") {
            return Err(bad("malformed labels line"));
        }
        let labels: Vec<String> = tokens.map(String::from).collect();
        if labels.len() != n_actions {
            return Err(bad("label count does not match action count"));
        }

        let mut alphas = Vec::with_capacity(n_actions);
        for a in 0..n_actions {
            let line = lines
                .next()
                .ok_or_else(|| SolverError::Format(format!("missing alpha row {a}")))?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| SolverError::Format(format!("alpha row {a}: {e}")))?;
            if row.len() != n_states {
                return Err(SolverError::Format(format!(
                    "alpha row {a} has {} values, expected {n_states}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite);
            }
            alphas.push(row);
        }
        if lines.next().is_some() {
            return Err(bad("trailing data after alpha rows"));
        }
        Ok(Self { alphas, labels })
    }

    pub fn save(&self, path: &FsPath) -> Result<(), SolverError> {
        std::fs::write(path, self.to_text()).map_err(|source| SolverError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &FsPath) -> Result<Self, SolverError> {
        let text = std::fs::read_to_string(path).map_err(|source| SolverError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }
}
