//! Shared generators, brute-force oracles and property checks for the
//! integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::Rng;

use crosswalk_core::belief::{baseline_scale, belief_update, Belief};
use crosswalk_core::dynamics::{
    allocate_longitudinal, brush_tire_lateral, step_dynamics, VehicleParams, VehicleState,
};
use crosswalk_core::harness::{run_scenario_with, PomdpRuntime, ScenarioConfig};
use crosswalk_core::model::DiscretePomdp;
use crosswalk_core::path::{NorthEast, Path};
use crosswalk_core::pomdp::{
    self, build_model, Action, DiscreteState, ModelConfig, Obs, NUM_ACTIONS, NUM_OBSERVATIONS,
    NUM_STATES, SPEED_BINS,
};
use crosswalk_core::qmdp::{extract_alphas, index_labels, value_iteration};
use crosswalk_core::world::{
    build_grid, cell_center, count_unobservable, pedestrian_visible, Cell, Crosswalk, EgoPose, Obstacle,
    OccupancyGrid, Pedestrian, PedestrianPlacement, RoadBounds, Scene, EGO_COL, GRID_COLS,
    GRID_RESOLUTION, GRID_ROWS,
};
use crosswalk_core::PolicyKind;

// ---------------------------------------------------------------------------
// Random tabular models

/// Dense tables `T[s][a][s']`, `R[s][a]`, `O[s'][o]`.
#[derive(Debug, Clone)]
pub struct DenseModel {
    pub t: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
    pub o: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl DenseModel {
    pub fn n_states(&self) -> usize {
        self.t.len()
    }

    pub fn n_actions(&self) -> usize {
        self.t[0].len()
    }

    pub fn n_obs(&self) -> usize {
        self.o[0].len()
    }

    pub fn to_model(&self) -> DiscretePomdp {
        DiscretePomdp::from_dense(&self.t, &self.r, &self.o, self.gamma).expect("valid random model")
    }
}

/// Random distribution with some exact zeros.
fn random_distribution<R: Rng>(rng: &mut R, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if sparse && rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 1e-3 {
            return w.into_iter().map(|x| x / total).collect();
        }
    }
}

pub fn random_dense<R: Rng>(
    rng: &mut R,
    max_states: usize,
    max_actions: usize,
    max_obs: usize,
    gamma: f64,
) -> DenseModel {
    let ns = rng.gen_range(1..=max_states);
    let na = rng.gen_range(1..=max_actions);
    let no = rng.gen_range(1..=max_obs);
    let t = (0..ns)
        .map(|_| (0..na).map(|_| random_distribution(rng, ns, true)).collect())
        .collect();
    let r = (0..ns)
        .map(|_| (0..na).map(|_| rng.gen_range(-10.0..10.0)).collect())
        .collect();
    // Strictly positive observation rows so every observation is possible.
    let o = (0..ns)
        .map(|_| {
            let w: Vec<f64> = (0..no).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
        .collect();
    DenseModel { t, r, o, gamma }
}

// ---------------------------------------------------------------------------
// Solver oracle

/// Horizon after which the finite-horizon value is within `tol` of the
/// infinite-horizon one.
pub fn dp_horizon(tol: f64, gamma: f64, r_max: f64) -> usize {
    if r_max == 0.0 {
        return 1;
    }
    ((tol * (1.0 - gamma) / r_max).ln() / gamma.ln()).ceil().max(1.0) as usize
}

/// Finite-horizon dynamic programming from `V_0 = 0`; returns `Q_H`.
pub fn dp_oracle(m: &DenseModel, horizon: usize) -> Vec<Vec<f64>> {
    let (ns, na) = (m.n_states(), m.n_actions());
    let mut v = vec![0.0; ns];
    let mut q = vec![vec![0.0; na]; ns];
    for _ in 0..horizon {
        for s in 0..ns {
            for a in 0..na {
                let mut future = 0.0;
                for s2 in 0..ns {
                    future += m.t[s][a][s2] * v[s2];
                }
                q[s][a] = m.r[s][a] + m.gamma * future;
            }
        }
        for s in 0..ns {
            v[s] = q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    q
}

// ---------------------------------------------------------------------------
// Filter oracle

/// Forward message `P(s_t, o_1..o_t | a_1..a_t)` kept unnormalized; the
/// posterior is its normalization.
pub struct ForwardOracle<'a> {
    model: &'a DenseModel,
    alpha: Vec<f64>,
}

impl<'a> ForwardOracle<'a> {
    pub fn new(model: &'a DenseModel, prior: &[f64]) -> Self {
        Self {
            model,
            alpha: prior.to_vec(),
        }
    }

    pub fn step(&mut self, action: usize, obs: usize) {
        let ns = self.model.n_states();
        let mut next = vec![0.0; ns];
        for (s2, slot) in next.iter_mut().enumerate() {
            let mut joint = 0.0;
            for s in 0..ns {
                joint += self.alpha[s] * self.model.t[s][action][s2] * self.model.o[s2][obs];
            }
            *slot = joint;
        }
        self.alpha = next;
    }

    pub fn posterior(&self) -> Vec<f64> {
        let total: f64 = self.alpha.iter().sum();
        self.alpha.iter().map(|x| x / total).collect()
    }

    /// Predictive probability of each observation under the current posterior.
    pub fn obs_distribution(&self, action: usize) -> Vec<f64> {
        let post = self.posterior();
        let ns = self.model.n_states();
        (0..self.model.n_obs())
            .map(|o| {
                let mut p = 0.0;
                for s in 0..ns {
                    for s2 in 0..ns {
                        p += post[s] * self.model.t[s][action][s2] * self.model.o[s2][o];
                    }
                }
                p
            })
            .collect()
    }
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn sample_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

// ---------------------------------------------------------------------------
// Grid oracle

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed segment-segment intersection by orientation tests.
pub fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

/// Rectangle corners in order, computed from the obstacle's pose.
pub fn rect_polygon(o: &Obstacle) -> [(f64, f64); 4] {
    let (hl, hw) = (o.length / 2.0, o.width / 2.0);
    let (ux, uy) = (o.yaw.cos(), o.yaw.sin());
    let (vx, vy) = (-uy, ux);
    let at = |a: f64, b: f64| (o.x + a * ux + b * vx, o.y + a * uy + b * vy);
    [at(hl, hw), at(-hl, hw), at(-hl, -hw), at(hl, -hw)]
}

pub fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64); 4]) -> bool {
    let signs: Vec<f64> = (0..4).map(|i| cross(poly[i], poly[(i + 1) % 4], p)).collect();
    signs.iter().all(|&c| c >= 0.0) || signs.iter().all(|&c| c <= 0.0)
}

pub fn segment_hits_rect(a: (f64, f64), b: (f64, f64), poly: &[(f64, f64); 4]) -> bool {
    point_in_polygon(a, poly)
        || point_in_polygon(b, poly)
        || (0..4).any(|i| segments_intersect(a, b, poly[i], poly[(i + 1) % 4]))
}

/// Per-cell labels by exhaustive testing of every obstacle edge.
pub fn brute_force_grid(scene: &Scene, pose: &EgoPose) -> Vec<Cell> {
    let origin = (pose.north, -pose.east);
    let polys: Vec<[(f64, f64); 4]> = scene.obstacles.iter().map(rect_polygon).collect();
    let mut cells = Vec::with_capacity(GRID_ROWS * GRID_COLS);
    for row in 0..GRID_ROWS {
        for col in 0..GRID_COLS {
            let c = (
                origin.0 + (row as f64 + 0.5) / GRID_RESOLUTION,
                origin.1 + (col as f64 - EGO_COL as f64 + 0.5) / GRID_RESOLUTION,
            );
            let cell = if polys.iter().any(|p| point_in_polygon(c, p)) {
                Cell::Occupied
            } else if polys.iter().any(|p| segment_hits_rect(origin, c, p)) {
                Cell::Unobservable
            } else {
                Cell::Free
            };
            cells.push(cell);
        }
    }
    cells
}

pub fn random_obstacle<R: Rng>(rng: &mut R, ego: (f64, f64)) -> Obstacle {
    Obstacle {
        x: ego.0 + rng.gen_range(-5.0..75.0),
        y: ego.1 + rng.gen_range(-9.0..9.0),
        length: rng.gen_range(0.5..9.0),
        width: rng.gen_range(0.5..3.0),
        yaw: if rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
        },
    }
}

/// Random scene with one to four obstacles, plus a random ego pose that is
/// not inside any obstacle.
pub fn random_scene<R: Rng>(rng: &mut R) -> (Scene, EgoPose) {
    loop {
        let pose = EgoPose {
            north: rng.gen_range(0.0..40.0),
            east: rng.gen_range(-4.0..2.0),
            heading: rng.gen_range(-0.3..0.3),
        };
        let ego = (pose.north, -pose.east);
        let n = rng.gen_range(1..=4);
        let obstacles: Vec<Obstacle> = (0..n).map(|_| random_obstacle(rng, ego)).collect();
        if obstacles.iter().any(|o| o.contains(ego.0, ego.1)) {
            continue;
        }
        let start = rng.gen_range(30.0..55.0);
        let scene = Scene {
            obstacles,
            crosswalk: Crosswalk { start, width: 3.0 },
            pedestrian: Some(Pedestrian {
                x: start + rng.gen_range(0.0..3.0),
                y: rng.gen_range(-1.8..5.4),
                present: true,
            }),
            road: RoadBounds::default(),
            path_length: 60.0,
        };
        return (scene, pose);
    }
}

// ---------------------------------------------------------------------------
// Shared fixtures

pub fn crosswalk_model() -> &'static DiscretePomdp {
    static MODEL: OnceLock<DiscretePomdp> = OnceLock::new();
    MODEL.get_or_init(|| build_model(&ModelConfig::default()).expect("default model"))
}

pub fn reference_runtime() -> &'static PomdpRuntime {
    static RT: OnceLock<PomdpRuntime> = OnceLock::new();
    RT.get_or_init(|| PomdpRuntime::solve(&ModelConfig::default()).expect("reference solve"))
}

fn rng_from(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Property checks. Each takes a generated input and fails with a message.

pub fn arb_model_config() -> impl Strategy<Value = ModelConfig> {
    (
        0.05f64..1.0,
        0.0f64..1.0,
        0.0f64..1.0,
        0.0f64..1.0,
        0.0f64..1.0,
        0.0f64..1.0,
        0.0f64..1.0,
        (0usize..=120, 0usize..=120, 0usize..=120, 0usize..SPEED_BINS),
    )
        .prop_map(|(epoch, p_adapt, w0, w1, persist, onset, p_clear, bins)| {
            let w2 = 1.0 - w0 * 0.5 - w1 * 0.5;
            let (a, b, c) = (w0 * 0.5, w1 * 0.5, w2);
            let total = a + b + c;
            let smear = [a / total, b / total, 1.0 - a / total - b / total];
            let (z0, z1) = (bins.1.min(bins.2), bins.1.max(bins.2));
            ModelConfig {
                epoch,
                p_adapt,
                distance_smear: smear,
                crossing_persist: persist,
                crossing_onset: onset,
                crosswalk_bin: bins.0,
                occlusion_zone: [z0, z1],
                too_fast_bin: bins.3,
                p_detect_clear: p_clear,
                p_detect_crossing: (p_clear + 0.3).min(1.0),
                ..ModelConfig::default()
            }
        })
}

/// Transition rows are distributions that never move backwards in distance
/// or outside the speed bins; observation rows are distributions; rewards
/// stay within their bounds; detection favors crossing states.
pub fn check_model_rows(cfg: &ModelConfig, state: usize, action: usize) -> Result<(), TestCaseError> {
    let s = DiscreteState::from_index(state);
    let a = Action(action);
    let row = pomdp::transition(cfg, s, a);
    let mut total = 0.0;
    for (n, p) in &row {
        prop_assert!(*p >= 0.0, "negative probability {p}");
        prop_assert!(n.d_bin >= s.d_bin, "distance went back from {} to {}", s.d_bin, n.d_bin);
        prop_assert!(n.v_bin < SPEED_BINS);
        prop_assert!(n.v_bin + 1 >= s.v_bin && n.v_bin <= s.v_bin + 1, "speed jumped");
        total += p;
    }
    prop_assert!((total - 1.0).abs() <= 1e-12, "transition row sums to {total}");
    let obs_total: f64 = (0..NUM_OBSERVATIONS)
        .map(|o| pomdp::observation_prob(cfg, Obs::from_index(o), s))
        .sum();
    prop_assert!((obs_total - 1.0).abs() <= 1e-12, "observation row sums to {obs_total}");
    let r = pomdp::reward(cfg, s, a);
    prop_assert!((-55.0..=100.0).contains(&r), "reward {r} out of bounds");
    if cfg.p_detect_crossing > cfg.p_detect_clear {
        for o in (0..NUM_OBSERVATIONS).map(Obs::from_index) {
            let on = pomdp::observation_prob(cfg, o, DiscreteState { crossing: true, ..s });
            let off = pomdp::observation_prob(cfg, o, DiscreteState { crossing: false, ..s });
            prop_assert_eq!(on / off > 1.0, o.detected);
        }
    }
    Ok(())
}

/// The belief is a distribution after every update of a random run, on the
/// crosswalk model and on a random small model.
pub fn check_belief_normalized(seed: u64, steps: usize) -> Result<(), TestCaseError> {
    let mut rng = rng_from(seed);
    let model = crosswalk_model();
    let mut b = Belief::uniform(NUM_STATES);
    for _ in 0..steps {
        let a = rng.gen_range(0..NUM_ACTIONS);
        let o = rng.gen_range(0..NUM_OBSERVATIONS);
        b = belief_update(&b, a, o, model).map_err(|e| TestCaseError::fail(e.to_string()))?;
        check_distribution(b.probs())?;
    }
    let dense = random_dense(&mut rng, 6, 3, 4, 0.9);
    let small = dense.to_model();
    let mut b = Belief::uniform(dense.n_states());
    for _ in 0..steps {
        let a = rng.gen_range(0..dense.n_actions());
        let o = rng.gen_range(0..dense.n_obs());
        b = belief_update(&b, a, o, &small).map_err(|e| TestCaseError::fail(e.to_string()))?;
        check_distribution(b.probs())?;
    }
    Ok(())
}

fn check_distribution(p: &[f64]) -> Result<(), TestCaseError> {
    prop_assert!(p.iter().all(|&x| x >= 0.0 && x.is_finite()), "negative or non-finite entry");
    let total: f64 = p.iter().sum();
    prop_assert!((total - 1.0).abs() <= 1e-9, "belief sums to {total}");
    Ok(())
}

/// The lateral force never exceeds the friction limit and is odd in the
/// slip angle.
pub fn check_tire(slip: f64, load: f64, stiffness: f64, friction: f64) -> Result<(), TestCaseError> {
    let f = brush_tire_lateral(slip, load, stiffness, friction).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let g = brush_tire_lateral(-slip, load, stiffness, friction).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let limit = friction * load;
    prop_assert!(f.abs() <= limit * (1.0 + 1e-12), "|{f}| exceeds {limit}");
    prop_assert!((f + g).abs() <= 1e-9 * limit.max(1.0), "not odd: {f} vs {g}");
    prop_assert!(f * slip <= 0.0, "force does not oppose slip");
    Ok(())
}

/// One step never leaves a negative speed, the longitudinal force split
/// adds up, and a vehicle at rest with no input stays put.
pub fn check_vehicle_step(ux: f64, uy: f64, r: f64, steer: f64, ax: f64) -> Result<(), TestCaseError> {
    let params = VehicleParams::default();
    let path = straight_path();
    let state = VehicleState {
        ux,
        uy,
        r,
        ..VehicleState::at_path_start(path)
    };
    let out = step_dynamics(&state, steer, ax, 0.01, &params, path).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(out.state.ux >= 0.0, "negative speed {}", out.state.ux);
    let (front, rear) = allocate_longitudinal(ax, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!((front + rear - params.mass * ax).abs() <= 1e-9 * (params.mass * ax).abs().max(1.0));

    let rest = VehicleState::at_path_start(path);
    let still = step_dynamics(&rest, 0.0, 0.0, 0.01, &params, path).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(still.state, rest);
    Ok(())
}

fn straight_path() -> &'static Path {
    static P: OnceLock<Path> = OnceLock::new();
    P.get_or_init(|| Path::straight(NorthEast::new(0.0, 0.0), 0.0, 60.0).expect("straight path"))
}

pub fn check_baseline_monotone(a: usize, b: usize) -> Result<(), TestCaseError> {
    let (lo, hi) = (a.min(b), a.max(b));
    prop_assert!(baseline_scale(hi) <= baseline_scale(lo));
    let s = baseline_scale(a);
    prop_assert!((0.0..=1.0).contains(&s));
    Ok(())
}

/// Adding an obstacle never shrinks the shadow; the grid is reproducible;
/// the ego cell is observable; a visible pedestrian's cell is observable.
pub fn check_grid(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng_from(seed);
    let (scene, pose) = random_scene(&mut rng);
    let grid = build_grid(&scene, &pose);
    prop_assert_eq!(grid.dims(), (GRID_ROWS, GRID_COLS));
    prop_assert_eq!(&grid, &build_grid(&scene, &pose));
    prop_assert!(grid.get(0, EGO_COL) != Cell::Unobservable);

    // A pedestrian standing on a cell center sees along the same ray the
    // grid uses for that cell.
    let ped = scene.pedestrian.expect("random scenes carry a pedestrian");
    if let Some((row, col)) = OccupancyGrid::cell_of(&pose, ped.x, ped.y) {
        let (cx, cy) = cell_center(&pose, row, col);
        let mut snapped = scene.clone();
        snapped.pedestrian = Some(Pedestrian { x: cx, y: cy, ..ped });
        if pedestrian_visible(&snapped, &pose) {
            prop_assert!(grid.get(row, col) == Cell::Free, "visible pedestrian in a {:?} cell", grid.get(row, col));
        }
    }

    let mut more = scene.clone();
    more.obstacles.push(random_obstacle(&mut rng, (pose.north, -pose.east)));
    if !more.obstacles.last().is_some_and(|o| o.contains(pose.north, -pose.east)) {
        let after = build_grid(&more, &pose);
        let mut covered = 0;
        for (c0, c1) in grid.cells().iter().zip(after.cells()) {
            if *c0 == Cell::Unobservable {
                prop_assert!(*c1 != Cell::Free, "a shadowed cell became free");
                covered += usize::from(*c1 == Cell::Occupied);
            }
        }
        // Shadowed cells under the new footprint turn occupied; no other
        // shadowed cell is lost.
        let (before, after) = (count_unobservable(&grid), count_unobservable(&after));
        prop_assert!(after + covered >= before, "shadow shrank from {before} to {after}");
    }
    Ok(())
}

/// Argmax ignores a positive rescaling of the belief; point-mass beliefs
/// pick an action that is greedy for that state; the returned Q passes the
/// Bellman residual check.
pub fn check_solver(seed: u64, scale: f64) -> Result<(), TestCaseError> {
    let mut rng = rng_from(seed);
    let dense = random_dense(&mut rng, 8, 4, 1, 0.9);
    let model = dense.to_model();
    let q = value_iteration(&model, 1e-6, 10_000).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let next = crosswalk_core::qmdp::bellman_backup(&model, &q);
    prop_assert!(next.sup_distance(&q) <= 1e-6 + 1e-12);
    let policy = extract_alphas(&q, index_labels(dense.n_actions()));
    let b: Vec<f64> = {
        let w: Vec<f64> = (0..dense.n_states()).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect()
    };
    let scaled: Vec<f64> = b.iter().map(|x| x * scale).collect();
    prop_assert_eq!(policy.argmax_unchecked(&b), policy.argmax_unchecked(&scaled));
    for s in 0..dense.n_states() {
        let point = Belief::point_mass(dense.n_states(), s);
        let a = policy.best_action(point.probs()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for other in 0..dense.n_actions() {
            prop_assert!(q.get(s, a) >= q.get(s, other));
        }
    }
    Ok(())
}

/// Two runs of the same short scenario are bit-identical and respect the
/// scale domain and the speed limit.
pub fn check_run_determinism(
    policy: PolicyKind,
    placement: PedestrianPlacement,
    desired_speed: f64,
    steps: usize,
    seed: u64,
) -> Result<(), TestCaseError> {
    let mut cfg = ScenarioConfig::reference(policy, placement);
    cfg.desired_speed = desired_speed;
    cfg.duration = steps as f64 * cfg.control_period;
    cfg.decision_period = 0.1;
    cfg.seed = seed;
    let rt = (policy == PolicyKind::Pomdp).then(reference_runtime);
    let a = run_scenario_with(&cfg, rt).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let b = run_scenario_with(&cfg, rt).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(a == b, "repeated runs differ");
    for row in &a.rows {
        prop_assert!(row.ux <= desired_speed + 0.5, "speed {} above limit", row.ux);
        match policy {
            PolicyKind::Oracle => prop_assert!((0.0..=1.0).contains(&row.scale)),
            PolicyKind::Pomdp => {
                let k = row.scale * 10.0;
                prop_assert!((k - k.round()).abs() < 1e-12, "pomdp scale {}", row.scale);
            }
            PolicyKind::Baseline => {
                let k = row.scale * 9.0;
                prop_assert!((k - k.round()).abs() < 1e-12, "baseline scale {}", row.scale);
            }
        }
    }
    Ok(())
}

pub fn arb_policy() -> impl Strategy<Value = PolicyKind> {
    prop_oneof![
        Just(PolicyKind::Oracle),
        Just(PolicyKind::Baseline),
        Just(PolicyKind::Pomdp)
    ]
}

pub fn arb_placement() -> impl Strategy<Value = PedestrianPlacement> {
    prop_oneof![
        Just(PedestrianPlacement::Hidden),
        Just(PedestrianPlacement::Exposed),
        Just(PedestrianPlacement::None)
    ]
}
