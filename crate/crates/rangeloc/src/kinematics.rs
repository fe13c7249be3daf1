//! Agent motion and distance-trace synthesis.
//!
//! Each agent rides a circle whose center translates at constant velocity:
//!
//! ```text
//! position(t) = center + center_velocity * t + radius * (cos(w t + phase), sin(w t + phase))
//! ```
//!
//! A measurement window of length `T` is sampled uniformly at `t_m = m T / M`,
//! producing the distance trace an agent would record against one neighbor.

use thiserror::Error;

use crate::geometry::Vec2;
use crate::num::{wrap_angle, Real};

/// One agent's motion parameters over a window: translating circle center plus
/// circular motion around it. Angles are radians, counter-clockwise positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState<T> {
    pub center: Vec2<T>,
    pub center_velocity: Vec2<T>,
    pub radius: T,
    pub omega: T,
    /// Angular position on the circle at window start, in the agent's working frame.
    pub phase: T,
}

impl<T: Real> AgentState<T> {
    pub fn new(center: Vec2<T>, center_velocity: Vec2<T>, radius: T, omega: T, phase: T) -> Self {
        debug_assert!(radius >= T::zero());
        Self {
            center,
            center_velocity,
            radius,
            omega,
            phase,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("circle centers coincide; the pair frame is undefined")]
    CoincidentCenters,
    #[error("window must contain at least two samples")]
    DegenerateWindow,
    #[error("sample count {m} below the margin for harmonic index {k}")]
    UndersampledWindow { m: usize, k: i64 },
    #[error("omega*T/(2*pi) = {value} is {deviation} from the nearest integer (tolerance {tolerance})")]
    Incommensurate {
        value: f64,
        deviation: f64,
        tolerance: f64,
    },
}

/// A measurement window: duration, sample count, and the integer harmonic
/// index of each participating agent (`k_i = omega_i * T / (2 pi)`).
#[derive(Debug, Clone, PartialEq)]
pub struct Window<T> {
    pub duration: T,
    pub sample_count: usize,
    pub harmonics: Vec<i64>,
}

impl<T: Real> Window<T> {
    /// Build a window for agents whose rotations all complete an integer number
    /// of turns in `duration`. Rejects undersampled windows (fewer than four
    /// samples per fastest turn) and frequencies off-integer beyond `tolerance`.
    pub fn commensurate(
        duration: T,
        sample_count: usize,
        omegas: &[T],
        tolerance: f64,
    ) -> Result<Self, KinematicsError> {
        if sample_count < 2 {
            return Err(KinematicsError::DegenerateWindow);
        }
        let mut harmonics = Vec::with_capacity(omegas.len());
        for &w in omegas {
            let kf = (w * duration / T::TAU()).to_f64();
            let k = kf.round();
            if (kf - k).abs() > tolerance {
                return Err(KinematicsError::Incommensurate {
                    value: kf,
                    deviation: (kf - k).abs(),
                    tolerance,
                });
            }
            harmonics.push(k as i64);
        }
        let window = Self {
            duration,
            sample_count,
            harmonics,
        };
        window.check_sampling()?;
        Ok(window)
    }

    /// Build a window from explicit harmonic indices (used when a nearby
    /// integer is accepted for an incommensurate frequency).
    pub fn with_harmonics(
        duration: T,
        sample_count: usize,
        harmonics: Vec<i64>,
    ) -> Result<Self, KinematicsError> {
        if sample_count < 2 {
            return Err(KinematicsError::DegenerateWindow);
        }
        let window = Self {
            duration,
            sample_count,
            harmonics,
        };
        window.check_sampling()?;
        Ok(window)
    }

    fn check_sampling(&self) -> Result<(), KinematicsError> {
        let kmax = self.harmonics.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0);
        if (self.sample_count as u64) < 4 * kmax {
            return Err(KinematicsError::UndersampledWindow {
                m: self.sample_count,
                k: kmax as i64,
            });
        }
        Ok(())
    }

    /// Sample instant `t_m = m T / M`.
    pub fn sample_time(&self, m: usize) -> T {
        self.duration * T::from_f64(m as f64) / T::from_f64(self.sample_count as f64)
    }
}

/// Uniform samples of the distance between two agents over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTrace<T> {
    pub samples: Vec<T>,
}

/// Position of an agent at time `t` (window-relative) in its working frame.
pub fn agent_position<T: Real>(a: &AgentState<T>, t: T) -> Vec2<T> {
    let angle = a.omega * t + a.phase;
    a.center + a.center_velocity * t + Vec2::from_angle(angle) * a.radius
}

/// Distance trace between two agents expressed in a common frame; symmetric
/// in its arguments sample for sample.
pub fn distance_trace<T: Real>(a: &AgentState<T>, b: &AgentState<T>, w: &Window<T>) -> DistanceTrace<T> {
    let samples = (0..w.sample_count)
        .map(|m| {
            let t = w.sample_time(m);
            (agent_position(b, t) - agent_position(a, t)).norm()
        })
        .collect();
    DistanceTrace { samples }
}

/// The pair frame: origin at `a`'s center, x-axis through `b`'s center at
/// window start. `rotation` maps world coordinates into this frame (the world
/// bearing of `b` from `a` is `-rotation`); `phase_in_frame` is `a`'s phase
/// expressed in the frame, the ground truth the estimator recovers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisFrame<T> {
    pub origin: Vec2<T>,
    pub rotation: T,
    pub phase_in_frame: T,
}

pub fn analysis_frame<T: Real>(
    a: &AgentState<T>,
    b: &AgentState<T>,
) -> Result<AnalysisFrame<T>, KinematicsError> {
    let delta = b.center - a.center;
    if delta.norm() == T::zero() {
        return Err(KinematicsError::CoincidentCenters);
    }
    let bearing = delta.y.atan2(delta.x);
    Ok(AnalysisFrame {
        origin: a.center,
        rotation: -bearing,
        phase_in_frame: wrap_angle(a.phase - bearing),
    })
}
