//! Excitation-radius assignment and the per-window velocity update.
//!
//! Velocities of circle centers change only at window boundaries. Each round,
//! every agent sets its next circular-motion radius to `alpha` times the
//! largest estimated neighbor speed (keeping the rotation peaks identifiable
//! exactly when excitation is needed), and steps its center velocity with a
//! consensus term plus a formation-shape term:
//!
//! ```text
//! v_i' = v_i + eps1 T sum_j (v_j - v_i)
//!            + 2 eps2 T sum_j (d*_ij^2 - d_ij^2) (p_i - p_j)
//! ```
//!
//! computed from estimated quantities rotated into the agent's working frame.

use thiserror::Error;

use crate::geometry::Vec2;
use crate::linalg::Mat;
use crate::num::Real;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("interaction graph needs at least two agents")]
    TooFewAgents,
    #[error("edge ({0}, {1}) is invalid")]
    BadEdge(usize, usize),
    #[error("desired distance on edge ({0}, {1}) must be positive")]
    BadDesiredDistance(usize, usize),
    #[error("interaction graph is not connected")]
    Disconnected,
    #[error("agent has no neighbors to average over")]
    EmptyNeighborhood,
    #[error("controller gains must be positive and finite")]
    BadGains,
}

/// Undirected interaction graph with optional per-edge desired distances.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationGraph<T> {
    n_agents: usize,
    edges: Vec<(usize, usize)>,
    desired: Vec<Option<T>>,
}

impl<T: Real> FormationGraph<T> {
    /// Validates simple-graph structure and connectivity. Edges are stored
    /// with `i < j` in sorted order.
    pub fn new(
        n_agents: usize,
        edges: &[(usize, usize)],
        desired: &[Option<T>],
    ) -> Result<Self, ControlError> {
        if n_agents < 2 {
            return Err(ControlError::TooFewAgents);
        }
        assert_eq!(edges.len(), desired.len());
        let mut norm: Vec<((usize, usize), Option<T>)> = Vec::with_capacity(edges.len());
        for (&(a, b), &d) in edges.iter().zip(desired) {
            if a == b || a >= n_agents || b >= n_agents {
                return Err(ControlError::BadEdge(a, b));
            }
            if let Some(ds) = d {
                if !(ds > T::zero()) || !ds.is_finite() {
                    return Err(ControlError::BadDesiredDistance(a, b));
                }
            }
            norm.push(((a.min(b), a.max(b)), d));
        }
        norm.sort_by_key(|&(e, _)| e);
        for w in norm.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ControlError::BadEdge(w[0].0 .0, w[0].0 .1));
            }
        }
        let graph = Self {
            n_agents,
            edges: norm.iter().map(|&(e, _)| e).collect(),
            desired: norm.iter().map(|&(_, d)| d).collect(),
        };
        if !graph.connected() {
            return Err(ControlError::Disconnected);
        }
        Ok(graph)
    }

    fn connected(&self) -> bool {
        let mut seen = vec![false; self.n_agents];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &(a, b) in &self.edges {
                let other = if a == i {
                    b
                } else if b == i {
                    a
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn desired_distance(&self, edge: usize) -> Option<T> {
        self.desired[edge]
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_agents)
            .map(|i| self.neighbors(i).len())
            .max()
            .unwrap_or(0)
    }

    /// Standard graph Laplacian (degree minus adjacency); diagnostics only.
    pub fn laplacian(&self) -> Mat<T> {
        let n = self.n_agents;
        let mut m = Mat::zeros(n, n);
        for &(a, b) in &self.edges {
            *m.at_mut(a, a) += T::one();
            *m.at_mut(b, b) += T::one();
            *m.at_mut(a, b) -= T::one();
            *m.at_mut(b, a) -= T::one();
        }
        m
    }
}

/// Gains of the velocity update plus the excitation gain and window length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains<T> {
    pub eps1: T,
    pub eps2: T,
    pub alpha: T,
    pub window: T,
}

impl<T: Real> ControllerGains<T> {
    pub fn validate(&self, max_degree: usize) -> Result<Vec<String>, ControlError> {
        let ok = self.eps1 > T::zero()
            && self.eps2 >= T::zero()
            && self.alpha > T::zero()
            && self.window > T::zero()
            && self.eps1.is_finite()
            && self.eps2.is_finite();
        if !ok {
            return Err(ControlError::BadGains);
        }
        let mut warnings = Vec::new();
        // Desk-scale contraction guard for the consensus part; a violation is
        // worth flagging but small-gain stability is only asymptotic, so it
        // does not reject the configuration.
        let guard = self.eps1 * self.window * T::from_f64(max_degree as f64);
        if guard >= T::one() {
            warnings.push(format!(
                "eps1 * T * max_degree = {} >= 1; consensus step may overshoot",
                guard
            ));
        }
        Ok(warnings)
    }
}

/// Next excitation radius: `alpha` times the largest estimated neighbor speed,
/// held for the whole next window.
pub fn adaptive_radius<T: Real>(
    neighbor_speed_norms: &[T],
    alpha: T,
) -> Result<T, ControlError> {
    if neighbor_speed_norms.is_empty() {
        return Err(ControlError::EmptyNeighborhood);
    }
    Ok(alpha * neighbor_speed_norms.iter().copied().fold(T::zero(), T::max))
}

/// Shape part of one neighbor's contribution; skipped for edges whose
/// estimate failed this window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeTerm<T> {
    /// Estimated neighbor center relative to own center, working frame.
    pub p_rel: Vec2<T>,
    pub d_hat: T,
    pub d_star: T,
}

/// One neighbor's data for the velocity update, in the agent's working frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborData<T> {
    /// Estimated relative center velocity `v_j - v_i`.
    pub v_rel: Vec2<T>,
    pub shape: Option<ShapeTerm<T>>,
}

/// One velocity step. With exact data the per-edge terms are antisymmetric,
/// so the mean center velocity over the formation is invariant.
pub fn consensus_shape_update<T: Real>(
    v_i: Vec2<T>,
    neighbors: &[NeighborData<T>],
    gains: &ControllerGains<T>,
    eps2_effective: T,
) -> Vec2<T> {
    let mut consensus = Vec2::zero();
    let mut shape = Vec2::zero();
    for n in neighbors {
        consensus += n.v_rel;
        if let Some(s) = n.shape {
            let gap = s.d_star * s.d_star - s.d_hat * s.d_hat;
            shape += (-s.p_rel) * gap;
        }
    }
    let two = T::from_f64(2.0);
    v_i + consensus * (gains.eps1 * gains.window) + shape * (two * eps2_effective * gains.window)
}

/// Center advance across one window of piecewise-constant velocity.
pub fn position_advance<T: Real>(p: Vec2<T>, v: Vec2<T>, window: T) -> Vec2<T> {
    p + v * window
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn gains(eps1: f64, eps2: f64) -> ControllerGains<f64> {
        ControllerGains {
            eps1,
            eps2,
            alpha: 0.35,
            window: 2.0 * PI,
        }
    }

    #[test]
    fn adaptive_radius_examples() {
        assert_eq!(adaptive_radius(&[0.0, 0.0], 0.35).unwrap(), 0.0);
        assert_abs_diff_eq!(adaptive_radius(&[10.0], 0.35).unwrap(), 3.5, epsilon = 1e-15);
        assert_abs_diff_eq!(adaptive_radius(&[1.0, 2.0], 2.0).unwrap(), 4.0, epsilon = 1e-15);
        assert_eq!(
            adaptive_radius::<f64>(&[], 0.35).unwrap_err(),
            ControlError::EmptyNeighborhood
        );
    }

    #[test]
    fn fixed_point_of_update() {
        let g = gains(5e-2, 7e-7);
        let neighbors = vec![
            NeighborData {
                v_rel: Vec2::zero(),
                shape: Some(ShapeTerm {
                    p_rel: Vec2::new(20.0, 0.0),
                    d_hat: 20.0,
                    d_star: 20.0,
                }),
            },
            NeighborData {
                v_rel: Vec2::zero(),
                shape: Some(ShapeTerm {
                    p_rel: Vec2::new(-10.0, 17.0),
                    d_hat: 20.0,
                    d_star: 20.0,
                }),
            },
        ];
        let v = Vec2::new(1.5, -0.5);
        let v2 = consensus_shape_update(v, &neighbors, &g, g.eps2);
        assert_eq!(v2, v);
    }

    #[test]
    fn two_agent_contraction_preserves_mean() {
        let g = gains(5e-2, 0.0);
        let mut va = Vec2::new(2.0, 1.0);
        let mut vb = Vec2::new(-1.0, 3.0);
        let mean0 = (va + vb) * 0.5;
        for _ in 0..40 {
            let na = [NeighborData {
                v_rel: vb - va,
                shape: None,
            }];
            let nb = [NeighborData {
                v_rel: va - vb,
                shape: None,
            }];
            let va2 = consensus_shape_update(va, &na, &g, 0.0);
            let vb2 = consensus_shape_update(vb, &nb, &g, 0.0);
            va = va2;
            vb = vb2;
            let mean = (va + vb) * 0.5;
            assert!((mean - mean0).norm() <= 1e-13);
        }
        assert!((va - vb).norm() < 1e-2);
    }

    #[test]
    fn mean_velocity_conserved_on_graph() {
        // Exact relative data on a triangle: per-edge antisymmetry.
        let g = gains(5e-2, 7e-7);
        let vs = [
            Vec2::new(-4.0, 1.5),
            Vec2::new(3.0, -3.5),
            Vec2::new(2.0, 3.5),
        ];
        let ps = [
            Vec2::new(30.0, 15.0),
            Vec2::new(0.0, 24.0),
            Vec2::new(0.0, 0.0),
        ];
        let mut sum_before = Vec2::zero();
        let mut sum_after = Vec2::zero();
        for i in 0..3 {
            let mut nd = Vec::new();
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let p_rel = ps[j] - ps[i];
                nd.push(NeighborData {
                    v_rel: vs[j] - vs[i],
                    shape: Some(ShapeTerm {
                        p_rel,
                        d_hat: p_rel.norm(),
                        d_star: 20.0,
                    }),
                });
            }
            let v2 = consensus_shape_update(vs[i], &nd, &g, g.eps2);
            sum_before += vs[i];
            sum_after += v2;
        }
        assert!((sum_after - sum_before).norm() <= 1e-12);
    }

    #[test]
    fn gain_rescaling_is_identity() {
        // Doubling T while halving both gains leaves the step unchanged for
        // the same inputs: only the products eps*T enter.
        let neighbors = vec![NeighborData {
            v_rel: Vec2::new(0.4, -0.7),
            shape: Some(ShapeTerm {
                p_rel: Vec2::new(12.0, 5.0),
                d_hat: 13.0,
                d_star: 20.0,
            }),
        }];
        let v = Vec2::new(1.0, 2.0);
        let g1 = ControllerGains {
            eps1: 5e-2,
            eps2: 7e-7,
            alpha: 0.35,
            window: 2.0 * PI,
        };
        let g2 = ControllerGains {
            eps1: 2.5e-2,
            eps2: 3.5e-7,
            alpha: 0.35,
            window: 4.0 * PI,
        };
        let a = consensus_shape_update(v, &neighbors, &g1, g1.eps2);
        let b = consensus_shape_update(v, &neighbors, &g2, g2.eps2);
        assert_eq!(a, b);
    }

    #[test]
    fn position_advance_cases() {
        let p = position_advance(Vec2::new(1.0, 2.0), Vec2::zero(), 2.0 * PI);
        assert_eq!(p, Vec2::new(1.0, 2.0));
        let p = position_advance(Vec2::zero(), Vec2::new(1.0, 2.0), 2.0 * PI);
        assert_abs_diff_eq!(p.x, 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 4.0 * PI, epsilon = 1e-15);
    }

    #[test]
    fn laplacian_spectra() {
        let complete =
            FormationGraph::<f64>::new(3, &[(0, 1), (0, 2), (1, 2)], &[None, None, None]).unwrap();
        let ev = symmetric_eigenvalues(&complete.laplacian());
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ev[2], 3.0, epsilon = 1e-10);

        let path = FormationGraph::<f64>::new(3, &[(0, 1), (1, 2)], &[None, None]).unwrap();
        let ev = symmetric_eigenvalues(&path.laplacian());
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ev[2], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn disconnected_graph_rejected() {
        let err = FormationGraph::<f64>::new(4, &[(0, 1), (2, 3)], &[None, None]).unwrap_err();
        assert_eq!(err, ControlError::Disconnected);
    }

    #[test]
    fn duplicate_and_self_edges_rejected() {
        assert!(FormationGraph::<f64>::new(3, &[(0, 0), (1, 2)], &[None, None]).is_err());
        assert!(
            FormationGraph::<f64>::new(3, &[(0, 1), (1, 0), (1, 2)], &[None, None, None]).is_err()
        );
    }

    #[test]
    fn gain_guard_warns() {
        let g = ControllerGains {
            eps1: 0.2,
            eps2: 0.0,
            alpha: 0.35,
            window: 2.0 * PI,
        };
        let warnings = g.validate(2).unwrap();
        assert_eq!(warnings.len(), 1);
        let ok = ControllerGains {
            eps1: 5e-2,
            eps2: 7e-7,
            alpha: 0.35,
            window: 2.0 * PI,
        };
        assert!(ok.validate(2).unwrap().is_empty());
    }
}
