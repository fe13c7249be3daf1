//! Closed-loop episodes: synthesize distance traces per edge, run each
//! endpoint's estimator, apply the adaptive radius and the velocity update,
//! advance centers, and record everything against ground truth.
//!
//! Rounds are synchronous. Within round `k` every agent holds its velocity
//! constant, measures distances over `[kT, (k+1)T)`, and commits its new
//! velocity and radius at the boundary. Given the scenario and its seed the
//! run is bit-deterministic: noise is drawn per (round, edge, sample) in a
//! fixed order from a counter-based generator.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::control::{
    adaptive_radius, consensus_shape_update, position_advance, ControllerGains,
    NeighborData, ShapeTerm,
};
use crate::estimator::{
    default_n_max, estimate_neighbor, EstimateOptions, EstimateOutcome,
};
use crate::geometry::Vec2;
use crate::kinematics::{distance_trace, AgentState, DistanceTrace, Window};
use crate::num::{wrap_angle, Real};
use crate::scenario::{Mode, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("estimator failed fatally on edge ({0}, {1}): {2}")]
    Estimator(usize, usize, crate::estimator::EstimatorError),
}

/// Per-round, per-agent state snapshot (taken at window start).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentRow<T> {
    pub round: usize,
    pub agent: usize,
    pub center: Vec2<T>,
    pub velocity: Vec2<T>,
    pub radius: T,
}

/// Per-round, per-edge ground truth and the lower endpoint's estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRow<T> {
    pub round: usize,
    pub i: usize,
    pub j: usize,
    pub d_true: T,
    pub d_hat: Option<T>,
    pub v_rel_true: Vec2<T>,
    pub v_rel_hat: Option<Vec2<T>>,
    pub residual: Option<T>,
}

/// Per-round aggregate metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics<T> {
    pub round: usize,
    /// Largest center-velocity difference over all agent pairs.
    pub disagreement: T,
    /// Largest |d_ij - d*_ij| over edges carrying a desired distance.
    pub shape_error: T,
    /// Largest radius change committed at the end of the round; the agent
    /// jumps by this much on its circle when the radius switches.
    pub radius_jump: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub n_agents: usize,
    pub n_edges: usize,
    pub agent_rows: Vec<AgentRow<T>>,
    pub edge_rows: Vec<EdgeRow<T>>,
    pub rounds: Vec<RoundMetrics<T>>,
}

impl<T: Real> TimeSeries<T> {
    pub fn final_disagreement(&self) -> T {
        self.rounds.last().map(|r| r.disagreement).unwrap_or(T::zero())
    }

    pub fn final_shape_error(&self) -> T {
        self.rounds.last().map(|r| r.shape_error).unwrap_or(T::zero())
    }

    pub fn rounds_to_disagreement_below(&self, threshold: T) -> Option<usize> {
        self.rounds
            .iter()
            .find(|r| r.disagreement < threshold)
            .map(|r| r.round)
    }
}

/// Knobs that are not part of the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Bypass the estimator and feed ground truth to the controller.
    pub exact_measurements: bool,
    pub seed_override: Option<u64>,
}

/// What the controller consumes for one directed agent->neighbor edge.
#[derive(Debug, Clone, Copy)]
struct WorkingEstimate<T> {
    v_rel: Vec2<T>,
    p_rel: Vec2<T>,
    d_hat: T,
}

pub fn run(scenario: &Scenario, options: RunOptions) -> Result<TimeSeries<f64>, SimulatorError> {
    run_generic::<f64>(scenario, options)
}

pub fn run_generic<T: Real>(
    scenario: &Scenario,
    options: RunOptions,
) -> Result<TimeSeries<T>, SimulatorError> {
    scenario.validate()?;
    let graph = scenario.graph()?;
    let harmonics = scenario.harmonics()?;
    let n = scenario.agents.len();
    let edges = graph.edges().to_vec();
    let gains = ControllerGains::<T> {
        eps1: T::from_f64(scenario.eps1),
        eps2: T::from_f64(scenario.eps2),
        alpha: T::from_f64(scenario.alpha),
        window: T::from_f64(scenario.window),
    };
    let eps2_effective = match scenario.mode {
        Mode::ConsensusAndShape => gains.eps2,
        Mode::ConsensusOnly => T::zero(),
    };
    let period = gains.window;
    let m_samples = scenario.samples_per_window;
    let k_abs_max = harmonics.iter().map(|k| k.abs()).max().unwrap_or(1);
    let n_max = default_n_max(k_abs_max);

    let mut centers: Vec<Vec2<T>> = scenario
        .agents
        .iter()
        .map(|a| Vec2::new(T::from_f64(a.position.x), T::from_f64(a.position.y)))
        .collect();
    let mut velocities: Vec<Vec2<T>> = scenario
        .agents
        .iter()
        .map(|a| Vec2::new(T::from_f64(a.velocity.x), T::from_f64(a.velocity.y)))
        .collect();
    let mut radii: Vec<T> = scenario
        .agents
        .iter()
        .map(|a| T::from_f64(a.radius0))
        .collect();
    let mut phases: Vec<T> = scenario
        .agents
        .iter()
        .map(|a| T::from_f64(a.phase0))
        .collect();
    let omegas: Vec<T> = scenario
        .agents
        .iter()
        .map(|a| T::from_f64(a.omega))
        .collect();

    let seed = options.seed_override.unwrap_or(scenario.seed);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = if scenario.noise_std > 0.0 {
        Some(Normal::new(0.0, scenario.noise_std).expect("validated noise_std"))
    } else {
        None
    };

    // Last successful full estimate per directed edge, with its age in
    // windows. A failed window reuses the previous estimate for the
    // consensus term (and skips the shape term), but only for one window:
    // older estimates would inject a constant bias force.
    let mut previous: Vec<Vec<Option<(WorkingEstimate<T>, usize)>>> =
        (0..n).map(|i| vec![None; graph.neighbors(i).len()]).collect();
    let neighbor_lists: Vec<Vec<usize>> = (0..n).map(|i| graph.neighbors(i)).collect();

    let mut ts = TimeSeries {
        n_agents: n,
        n_edges: edges.len(),
        agent_rows: Vec::with_capacity(scenario.windows * n),
        edge_rows: Vec::with_capacity(scenario.windows * edges.len()),
        rounds: Vec::with_capacity(scenario.windows),
    };

    for round in 0..scenario.windows {
        for ev in &scenario.events {
            if ev.round == round {
                velocities[ev.agent] +=
                    Vec2::new(T::from_f64(ev.delta_v.x), T::from_f64(ev.delta_v.y));
            }
        }

        for (idx, agent) in (0..n).enumerate() {
            ts.agent_rows.push(AgentRow {
                round,
                agent: idx,
                center: centers[agent],
                velocity: velocities[agent],
                radius: radii[agent],
            });
        }

        let window = Window::with_harmonics(period, m_samples, harmonics.clone())
            .expect("validated window");

        // Directed estimates for this round, indexed like neighbor_lists.
        let mut fresh: Vec<Vec<Option<WorkingEstimate<T>>>> =
            (0..n).map(|i| vec![None; neighbor_lists[i].len()]).collect();
        let mut speeds: Vec<Vec<T>> =
            (0..n).map(|i| vec![T::zero(); neighbor_lists[i].len()]).collect();

        for &(i, j) in &edges {
            let state_i = AgentState::new(centers[i], velocities[i], radii[i], omegas[i], phases[i]);
            let state_j = AgentState::new(centers[j], velocities[j], radii[j], omegas[j], phases[j]);
            let d_true = (centers[j] - centers[i]).norm();
            let v_rel_true = velocities[j] - velocities[i];

            let mut row = EdgeRow {
                round,
                i,
                j,
                d_true,
                d_hat: None,
                v_rel_true,
                v_rel_hat: None,
                residual: None,
            };

            if options.exact_measurements {
                for (s, o) in [(i, j), (j, i)] {
                    let slot = neighbor_lists[s].iter().position(|&x| x == o).unwrap();
                    let est = WorkingEstimate {
                        v_rel: velocities[o] - velocities[s],
                        p_rel: centers[o] - centers[s],
                        d_hat: d_true,
                    };
                    fresh[s][slot] = Some(est);
                    speeds[s][slot] = est.v_rel.norm();
                }
                row.d_hat = Some(d_true);
                row.v_rel_hat = Some(v_rel_true);
                row.residual = Some(T::zero());
            } else {
                let mut trace = distance_trace(&state_i, &state_j, &window);
                if let Some(dist) = &noise {
                    for s in trace.samples.iter_mut() {
                        let draw: f64 = dist.sample(&mut rng);
                        *s = (*s + T::from_f64(draw)).max(T::zero());
                    }
                }
                for (s, o) in [(i, j), (j, i)] {
                    let slot = neighbor_lists[s].iter().position(|&x| x == o).unwrap();
                    let outcome = run_endpoint(
                        &trace,
                        &window,
                        harmonics[s],
                        harmonics[o],
                        radii[s],
                        phases[s],
                        n_max,
                        scenario.omega_sign_known,
                    )
                    .map_err(|e| SimulatorError::Estimator(i, j, e))?;
                    match outcome {
                        EstimateOutcome::Full { estimate, frame, .. } => {
                            let est = WorkingEstimate {
                                v_rel: frame.to_working_frame(estimate.v_hat),
                                p_rel: frame.neighbor_center(Vec2::zero(), estimate.d_hat),
                                d_hat: estimate.d_hat,
                            };
                            fresh[s][slot] = Some(est);
                            speeds[s][slot] = estimate.v_hat.norm();
                            if s == i {
                                row.d_hat = Some(estimate.d_hat);
                                row.v_rel_hat = Some(est.v_rel);
                                row.residual = Some(estimate.residual);
                            }
                        }
                        EstimateOutcome::NormOnly { speed_norm, .. } => {
                            speeds[s][slot] = speed_norm;
                        }
                    }
                }
            }
            ts.edge_rows.push(row);
        }

        // Metrics at window start.
        let mut disagreement = T::zero();
        for a in 0..n {
            for b in a + 1..n {
                disagreement = disagreement.max((velocities[a] - velocities[b]).norm());
            }
        }
        let mut shape_error = T::zero();
        for (edge_idx, &(i, j)) in edges.iter().enumerate() {
            if let Some(d_star) = graph.desired_distance(edge_idx) {
                let d = (centers[j] - centers[i]).norm();
                shape_error = shape_error.max((d - T::from_f64(d_star)).abs());
            }
        }

        // Control step.
        let mut new_velocities = velocities.clone();
        let mut new_radii = radii.clone();
        for agent in 0..n {
            let mut data = Vec::with_capacity(neighbor_lists[agent].len());
            let mut norm_list = Vec::with_capacity(neighbor_lists[agent].len());
            for (slot, &nb) in neighbor_lists[agent].iter().enumerate() {
                norm_list.push(speeds[agent][slot]);
                let edge_idx = edges
                    .iter()
                    .position(|&(a, b)| (a, b) == (agent.min(nb), agent.max(nb)))
                    .unwrap();
                let d_star = graph.desired_distance(edge_idx);
                match fresh[agent][slot] {
                    Some(est) => {
                        previous[agent][slot] = Some((est, 0));
                        data.push(NeighborData {
                            v_rel: est.v_rel,
                            shape: d_star.map(|ds| ShapeTerm {
                                p_rel: est.p_rel,
                                d_hat: est.d_hat,
                                d_star: T::from_f64(ds),
                            }),
                        });
                    }
                    None => {
                        if let Some((prev, age)) = &mut previous[agent][slot] {
                            if *age == 0 {
                                data.push(NeighborData {
                                    v_rel: prev.v_rel,
                                    shape: None,
                                });
                            }
                            *age += 1;
                        }
                    }
                }
            }
            new_velocities[agent] =
                consensus_shape_update(velocities[agent], &data, &gains, eps2_effective);
            new_radii[agent] =
                adaptive_radius(&norm_list, gains.alpha).expect("graph is connected");
        }

        let mut radius_jump = T::zero();
        for agent in 0..n {
            radius_jump = radius_jump.max((new_radii[agent] - radii[agent]).abs());
        }
        ts.rounds.push(RoundMetrics {
            round,
            disagreement,
            shape_error,
            radius_jump,
        });

        // Commit at the window boundary: centers advance under the old
        // velocity, phases continue along the old rotation.
        for agent in 0..n {
            centers[agent] = position_advance(centers[agent], velocities[agent], period);
            phases[agent] = wrap_angle(phases[agent] + omegas[agent] * period);
        }
        velocities = new_velocities;
        radii = new_radii;
    }

    Ok(ts)
}

#[allow(clippy::too_many_arguments)]
fn run_endpoint<T: Real>(
    trace: &DistanceTrace<T>,
    window: &Window<T>,
    own_k: i64,
    neighbor_k: i64,
    own_radius: T,
    own_phase: T,
    n_max: usize,
    sign_known: bool,
) -> Result<EstimateOutcome<T>, crate::estimator::EstimatorError> {
    let options = EstimateOptions {
        known_sign: if sign_known {
            Some(neighbor_k.signum())
        } else {
            None
        },
        residual_gate: None,
    };
    estimate_neighbor(
        trace,
        window,
        own_k,
        own_radius,
        own_phase,
        n_max,
        options,
    )
}

/// Reference continuous-time run: the same consensus and shape gains applied
/// as a smooth flow (no circular excitation, true states, no estimation),
/// integrated with fixed-step RK4 at `T/256`. The per-round rows sample the
/// flow at window boundaries, so final shapes are directly comparable with
/// the discrete loop.
pub fn reference_continuous_run(scenario: &Scenario) -> Result<TimeSeries<f64>, SimulatorError> {
    scenario.validate()?;
    let graph = scenario.graph()?;
    let n = scenario.agents.len();
    let edges = graph.edges().to_vec();
    let eps1 = scenario.eps1;
    let eps2 = match scenario.mode {
        Mode::ConsensusAndShape => scenario.eps2,
        Mode::ConsensusOnly => 0.0,
    };

    let mut p: Vec<Vec2<f64>> = scenario.agents.iter().map(|a| a.position).collect();
    let mut v: Vec<Vec2<f64>> = scenario.agents.iter().map(|a| a.velocity).collect();

    let deriv = |p: &[Vec2<f64>], v: &[Vec2<f64>]| -> (Vec<Vec2<f64>>, Vec<Vec2<f64>>) {
        let mut dv = vec![Vec2::zero(); n];
        for (edge_idx, &(i, j)) in edges.iter().enumerate() {
            let vd = v[j] - v[i];
            dv[i] += vd * eps1;
            dv[j] += (-vd) * eps1;
            if let Some(d_star) = graph.desired_distance(edge_idx) {
                let rel = p[j] - p[i];
                let gap = d_star * d_star - rel.dot(rel);
                let force = (-rel) * (2.0 * eps2 * gap);
                dv[i] += force;
                dv[j] += -force;
            }
        }
        (v.to_vec(), dv)
    };

    let mut ts = TimeSeries {
        n_agents: n,
        n_edges: edges.len(),
        agent_rows: Vec::new(),
        edge_rows: Vec::new(),
        rounds: Vec::new(),
    };

    let steps_per_window = 256;
    let h = scenario.window / steps_per_window as f64;
    for round in 0..scenario.windows {
        for ev in &scenario.events {
            if ev.round == round {
                v[ev.agent] += ev.delta_v;
            }
        }
        for agent in 0..n {
            ts.agent_rows.push(AgentRow {
                round,
                agent,
                center: p[agent],
                velocity: v[agent],
                radius: 0.0,
            });
        }
        for &(i, j) in &edges {
            ts.edge_rows.push(EdgeRow {
                round,
                i,
                j,
                d_true: (p[j] - p[i]).norm(),
                d_hat: None,
                v_rel_true: v[j] - v[i],
                v_rel_hat: None,
                residual: None,
            });
        }
        let mut disagreement: f64 = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                disagreement = disagreement.max((v[a] - v[b]).norm());
            }
        }
        let mut shape_error: f64 = 0.0;
        for (edge_idx, &(i, j)) in edges.iter().enumerate() {
            if let Some(d_star) = graph.desired_distance(edge_idx) {
                shape_error = shape_error.max(((p[j] - p[i]).norm() - d_star).abs());
            }
        }
        ts.rounds.push(RoundMetrics {
            round,
            disagreement,
            shape_error,
            radius_jump: 0.0,
        });

        for _ in 0..steps_per_window {
            let (k1p, k1v) = deriv(&p, &v);
            let p2: Vec<_> = (0..n).map(|i| p[i] + k1p[i] * (h / 2.0)).collect();
            let v2: Vec<_> = (0..n).map(|i| v[i] + k1v[i] * (h / 2.0)).collect();
            let (k2p, k2v) = deriv(&p2, &v2);
            let p3: Vec<_> = (0..n).map(|i| p[i] + k2p[i] * (h / 2.0)).collect();
            let v3: Vec<_> = (0..n).map(|i| v[i] + k2v[i] * (h / 2.0)).collect();
            let (k3p, k3v) = deriv(&p3, &v3);
            let p4: Vec<_> = (0..n).map(|i| p[i] + k3p[i] * h).collect();
            let v4: Vec<_> = (0..n).map(|i| v[i] + k3v[i] * h).collect();
            let (k4p, k4v) = deriv(&p4, &v4);
            for i in 0..n {
                p[i] += (k1p[i] + k2p[i] * 2.0 + k3p[i] * 2.0 + k4p[i]) * (h / 6.0);
                v[i] += (k1v[i] + k2v[i] * 2.0 + k3v[i] * 2.0 + k4v[i]) * (h / 6.0);
            }
        }
    }
    Ok(ts)
}
