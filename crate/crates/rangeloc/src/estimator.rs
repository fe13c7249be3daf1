//! Recovery of a neighbor's relative position and velocity from one window's
//! distance spectrum.
//!
//! In the pair frame (origin at the measuring agent's circle center, x-axis
//! through the neighbor's center at window start) the squared distance is
//!
//! ```text
//! z^2(t) = (d_x^2 + d_y^2 + r1^2 + r2^2)
//!        + 2 d_x r2 cos(w2 t + p2) + 2 d_y r2 sin(w2 t + p2)
//!        - 2 d_x r1 cos(w1 t + p1) - 2 d_y r1 sin(w1 t + p1)
//!        - 2 r1 r2 cos((w1 - w2) t + (p1 - p2))
//! ```
//!
//! with `d_x = d + v_x t`, `d_y = v_y t`. Over a window holding whole numbers
//! of turns `k1 = w1 T / 2 pi`, `k2 = w2 T / 2 pi`, the coefficient at any bin
//! away from `{|k1|, |k2|, |k1-k2|}` is a linear combination of six real
//! unknowns: the drift magnitudes
//!
//! ```text
//! R = ||v||^2 T^2 / (2 pi^2)            (coefficient of 1/n^2)
//! I = (||v||^2 T^2 + 2 v_x d T) / (2 pi)  (coefficient of j/n)
//! ```
//!
//! and the complex couplings of each circle with the drift,
//!
//! ```text
//! U = r1 (j v_x + v_y) (T / 4 pi) e^{j (p1 + pi)}
//! W = r2 (j v_x + v_y) (T / 4 pi) e^{j p2}
//! ```
//!
//! entering as `2U/(n-k1) - 2 conj(U)/(n+k1)` and likewise for `W`. The solver
//! fits these six unknowns by least squares, but against the *exact DFT* of
//! the sampled basis waveforms rather than the continuum expressions above:
//! the sampled periodic extension jumps at the window boundary, and the exact
//! discrete basis absorbs the resulting endpoint and aliasing terms, so a
//! noiseless commensurate window is recovered to machine precision.
//!
//! The remaining peak bin then isolates the neighbor: subtracting the fitted
//! model at `n = |k1|` leaves `r1 d e^{j(sign(k1) p1 + pi)}`, giving `d` and
//! `p1`, and the velocity follows from `U`:
//!
//! ```text
//! v_x = Im(4 pi U / (T r1 e^{j(p1 + pi)}))
//! v_y = Re(4 pi U / (T r1 e^{j(p1 + pi)}))
//! ```

use num_complex::Complex;
use thiserror::Error;

use crate::geometry::Vec2;
use crate::kinematics::{DistanceTrace, Window};
use crate::linalg::{lstsq, Mat};
use crate::num::{wrap_angle, Real};
use crate::spectral::{spectrum_of_squared_trace, DftTable, Spectrum};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EstimatorError {
    #[error("no spectral peak above threshold; neighbor not rotating or drift too large")]
    NoPeak,
    #[error("spectrum consistent only with a neighbor sharing this agent's |omega|")]
    AmbiguousSpectrum,
    #[error("rotation-sign hypotheses are indistinguishable")]
    AmbiguousSign,
    #[error("solve indices must be distinct, positive, inside the spectrum, and off-peak")]
    InvalidIndices,
    #[error("design matrix numerically singular")]
    SingularSystem,
    #[error("own radius must be positive for full recovery")]
    DegenerateRadius,
    #[error("no window of at most {t_max} seconds brings the frequency ratio within {tol} of an integer")]
    NoWindow { t_max: f64, tol: f64 },
}

/// The four drift terms solved from off-peak bins. `quad` and `lin` are real
/// for exact data and kept complex for reporting under noise; `own_circle`
/// and `neighbor_circle` are the circle-drift couplings (the latter exposed
/// for diagnostics only).
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTerms<T> {
    pub quad: Complex<T>,
    pub lin: Complex<T>,
    pub own_circle: Complex<T>,
    pub neighbor_circle: Complex<T>,
    /// Bins the solve consumed.
    pub indices: Vec<i64>,
}

/// Full single-window estimate of one neighbor, in the pair frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborEstimate<T> {
    pub d_hat: T,
    /// Own phase at window start as seen in the pair frame, in (-pi, pi].
    pub phi1_hat: T,
    /// Neighbor center velocity relative to own center, pair-frame components.
    pub v_hat: Vec2<T>,
    pub omega2_hat: T,
    pub speed_norm: T,
    /// Norm of the model mismatch over the admissible bins.
    pub residual: T,
}

/// Rotation taking pair-frame vectors into the estimating agent's working
/// frame. Equals the working-frame bearing of the neighbor's center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLink<T> {
    pub rotation: T,
}

impl<T: Real> FrameLink<T> {
    pub fn to_working_frame(&self, v: Vec2<T>) -> Vec2<T> {
        v.rotated(self.rotation)
    }

    /// Neighbor center position reconstructed in the working frame.
    pub fn neighbor_center(&self, own_center: Vec2<T>, d_hat: T) -> Vec2<T> {
        own_center + Vec2::from_angle(self.rotation) * d_hat
    }
}

/// `rotation = own_phase - phi1_hat`: the phase is measured against the pair
/// frame's x-axis, which points from own center to the neighbor's center, so
/// the difference is exactly the neighbor's bearing in the working frame.
pub fn frame_link<T: Real>(own_phase_at_window_start: T, phi1_hat: T) -> FrameLink<T> {
    FrameLink {
        rotation: wrap_angle(own_phase_at_window_start - phi1_hat),
    }
}

/// Bins available to the solver: `1..=n_max` minus the three peak indices.
pub fn admissible_indices(n_max: usize, k1: i64, k2: i64) -> Vec<i64> {
    let banned = [k1.abs(), k2.abs(), (k1 - k2).abs()];
    (1..=n_max as i64).filter(|n| !banned.contains(n)).collect()
}

fn hypothesis_valid(k1: i64, k2: i64) -> bool {
    let a = k1.abs();
    let b = k2.abs();
    let c = (k1 - k2).abs();
    a != 0 && b != 0 && c != 0 && a != b && a != c && b != c
}

/// Sampled basis waveforms whose DFT bins form the design matrix. `omegas`
/// contributes a `t sin(w t)`, `t cos(w t)` pair per frequency after the two
/// polynomial drift shapes.
fn basis_signals<T: Real>(window: &Window<T>, omegas: &[T]) -> Vec<Vec<T>> {
    let m = window.sample_count;
    let t_of = |i: usize| window.sample_time(i);
    let period = window.duration;
    let two_pi_sq = T::from_f64(2.0) * T::PI() * T::PI();
    let mut signals = Vec::with_capacity(2 + 2 * omegas.len());
    signals.push(
        (0..m)
            .map(|i| {
                let t = t_of(i);
                two_pi_sq * t * t / (period * period) - two_pi_sq * t / period
            })
            .collect(),
    );
    signals.push(
        (0..m)
            .map(|i| T::TAU() * t_of(i) / period)
            .collect(),
    );
    let gain = T::from_f64(8.0) * T::PI() / period;
    for &w in omegas {
        let mut s_sin = Vec::with_capacity(m);
        let mut s_cos = Vec::with_capacity(m);
        for i in 0..m {
            let t = t_of(i);
            let (s, c) = (w * t).sin_cos();
            s_sin.push(gain * t * s);
            s_cos.push(gain * t * c);
        }
        signals.push(s_sin);
        signals.push(s_cos);
    }
    signals
}

struct TailFit<T> {
    coeffs: Vec<T>,
    /// DFT of each basis signal, cached for model evaluation at other bins.
    table: DftTable<T>,
    signals: Vec<Vec<T>>,
}

impl<T: Real> TailFit<T> {
    fn model_at(&self, n: i64) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (sig, &coef) in self.signals.iter().zip(&self.coeffs) {
            let b = self.table.bin(sig, n);
            acc = Complex::new(acc.re + coef * b.re, acc.im + coef * b.im);
        }
        acc
    }
}

fn fit_tails<T: Real>(
    spectrum: &Spectrum<T>,
    indices: &[i64],
    omegas: &[T],
) -> Result<TailFit<T>, EstimatorError> {
    let window = &spectrum.window;
    let signals = basis_signals(window, omegas);
    let table = DftTable::new(window.sample_count);
    let n_cols = signals.len();
    if 2 * indices.len() < n_cols {
        return Err(EstimatorError::InvalidIndices);
    }
    let mut rows = Vec::with_capacity(2 * indices.len());
    let mut rhs = Vec::with_capacity(2 * indices.len());
    for &n in indices {
        let bins: Vec<Complex<T>> = signals.iter().map(|s| table.bin(s, n)).collect();
        let c = spectrum.coefficient(n as usize);
        rows.push(bins.iter().map(|b| b.re).collect::<Vec<_>>());
        rhs.push(c.re);
        rows.push(bins.iter().map(|b| b.im).collect::<Vec<_>>());
        rhs.push(c.im);
    }
    let coeffs = lstsq(&Mat::from_rows(&rows), &rhs).ok_or(EstimatorError::SingularSystem)?;
    Ok(TailFit {
        coeffs,
        table,
        signals,
    })
}

fn validate_indices(indices: &[i64], n_max: usize, k1: i64, k2: i64) -> Result<(), EstimatorError> {
    if indices.len() < 4 {
        return Err(EstimatorError::InvalidIndices);
    }
    let mut seen = indices.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != indices.len() {
        return Err(EstimatorError::InvalidIndices);
    }
    let banned = [k1.abs(), k2.abs(), (k1 - k2).abs()];
    if indices
        .iter()
        .any(|&n| n < 1 || n > n_max as i64 || banned.contains(&n))
    {
        return Err(EstimatorError::InvalidIndices);
    }
    Ok(())
}

/// Solve the six-unknown drift system over the given bins (least squares when
/// overdetermined). `k1`, `k2` carry rotation signs.
pub fn solve_drift_terms<T: Real>(
    spectrum: &Spectrum<T>,
    k1: i64,
    k2: i64,
    indices: &[i64],
) -> Result<DriftTerms<T>, EstimatorError> {
    if !hypothesis_valid(k1, k2) {
        return Err(EstimatorError::InvalidIndices);
    }
    validate_indices(indices, spectrum.n_max(), k1, k2)?;
    let period = spectrum.window.duration;
    let w1 = T::TAU() * T::from_f64(k1 as f64) / period;
    let w2 = T::TAU() * T::from_f64(k2 as f64) / period;
    let fit = fit_tails(spectrum, indices, &[w1, w2])?;
    let c = &fit.coeffs;
    Ok(DriftTerms {
        quad: Complex::new(c[0], T::zero()),
        lin: Complex::new(c[1], T::zero()),
        own_circle: Complex::new(c[2], c[3]),
        neighbor_circle: Complex::new(c[4], c[5]),
        indices: indices.to_vec(),
    })
}

/// Invert `R = ||v||^2 T^2 / (2 pi^2)`; a slightly negative real part from
/// noise clamps to zero.
pub fn speed_from_quad<T: Real>(quad: Complex<T>, period: T) -> T {
    let two = T::from_f64(2.0);
    T::PI() * (two * quad.re.max(T::zero())).sqrt() / period
}

/// Full recovery from the solved drift terms. Returns the estimate in the
/// pair frame together with the residual over all admissible bins.
pub fn recover_neighbor<T: Real>(
    spectrum: &Spectrum<T>,
    terms: &DriftTerms<T>,
    k1: i64,
    k2: i64,
    own_radius: T,
) -> Result<NeighborEstimate<T>, EstimatorError> {
    if own_radius <= T::zero() {
        return Err(EstimatorError::DegenerateRadius);
    }
    if !hypothesis_valid(k1, k2) {
        return Err(EstimatorError::InvalidIndices);
    }
    let period = spectrum.window.duration;
    let w1 = T::TAU() * T::from_f64(k1 as f64) / period;
    let w2 = T::TAU() * T::from_f64(k2 as f64) / period;
    let fit = TailFit {
        coeffs: vec![
            terms.quad.re,
            terms.lin.re,
            terms.own_circle.re,
            terms.own_circle.im,
            terms.neighbor_circle.re,
            terms.neighbor_circle.im,
        ],
        table: DftTable::new(spectrum.window.sample_count),
        signals: basis_signals(&spectrum.window, &[w1, w2]),
    };

    let mut residual_sq = T::zero();
    for n in admissible_indices(spectrum.n_max(), k1, k2) {
        let diff = spectrum.coefficient(n as usize) - fit.model_at(n);
        residual_sq += diff.norm_sqr();
    }

    let peak = spectrum.coefficient(k1.unsigned_abs() as usize) - fit.model_at(k1.abs());
    let d_hat = peak.norm() / own_radius;
    let sign = if k1 >= 0 { T::one() } else { -T::one() };
    let phi1_hat = wrap_angle(sign * (peak.arg() - T::PI()));

    // 4 pi U / (T r1 e^{j(phi1 + pi)}) = j v_x + v_y.
    let scale = T::from_f64(4.0) * T::PI() / (period * own_radius);
    let u = terms.own_circle;
    let carrier = Complex::from_polar(T::one(), phi1_hat + T::PI());
    let v_complex = u * scale / carrier;
    let v_hat = Vec2::new(v_complex.im, v_complex.re);

    Ok(NeighborEstimate {
        d_hat,
        phi1_hat,
        v_hat,
        omega2_hat: T::TAU() * T::from_f64(k2 as f64) / period,
        speed_norm: speed_from_quad(terms.quad, period),
        residual: residual_sq.sqrt(),
    })
}

/// Residual of the best six-term fit under the hypothesis that the neighbor
/// rotates at harmonic `k2`.
fn hypothesis_residual<T: Real>(
    spectrum: &Spectrum<T>,
    k1: i64,
    k2: i64,
) -> Option<T> {
    if !hypothesis_valid(k1, k2) {
        return None;
    }
    let indices = admissible_indices(spectrum.n_max(), k1, k2);
    let terms = solve_drift_terms(spectrum, k1, k2, &indices).ok()?;
    let period = spectrum.window.duration;
    let w1 = T::TAU() * T::from_f64(k1 as f64) / period;
    let w2 = T::TAU() * T::from_f64(k2 as f64) / period;
    let fit = TailFit {
        coeffs: vec![
            terms.quad.re,
            terms.lin.re,
            terms.own_circle.re,
            terms.own_circle.im,
            terms.neighbor_circle.re,
            terms.neighbor_circle.im,
        ],
        table: DftTable::new(spectrum.window.sample_count),
        signals: basis_signals(&spectrum.window, &[w1, w2]),
    };
    let mut residual_sq = T::zero();
    for n in indices {
        let diff = spectrum.coefficient(n as usize) - fit.model_at(n);
        residual_sq += diff.norm_sqr();
    }
    Some(residual_sq.sqrt())
}

/// Locate the neighbor's harmonic index from the spectrum. The drift tails
/// are first removed with a null model (drift plus own-circle coupling, all
/// known to the agent); a bin whose residual exceeds five times the median
/// residual is a peak. When several bins stand out (the neighbor coupling
/// spills into bins adjacent to the true peak, and the difference peak is a
/// bin of its own), each candidate is scored by how well the full model
/// under that hypothesis explains the whole spectrum, with the detrended
/// prominence breaking near-perfect ties in favor of the dominant peak.
/// The magnitude of the rotation is returned; its sign is not observable
/// from bin magnitudes.
pub fn find_neighbor_peak<T: Real>(spectrum: &Spectrum<T>, k1: i64) -> Result<i64, EstimatorError> {
    let n_max = spectrum.n_max();
    let period = spectrum.window.duration;
    let own = k1.abs();
    let indices: Vec<i64> = (1..=n_max as i64).filter(|&n| n != own).collect();
    if indices.len() < 3 {
        return Err(EstimatorError::NoPeak);
    }

    let omegas: Vec<T> = if k1 != 0 {
        vec![T::TAU() * T::from_f64(k1 as f64) / period]
    } else {
        vec![]
    };
    let fit = fit_tails(spectrum, &indices, &omegas)?;
    let mut residuals: Vec<(i64, T)> = indices
        .iter()
        .map(|&n| {
            let diff = spectrum.coefficient(n as usize) - fit.model_at(n);
            (n, diff.norm())
        })
        .collect();

    let mut mags: Vec<T> = residuals.iter().map(|&(_, r)| r).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = mags[mags.len() / 2];
    let max_coeff = (1..=n_max)
        .map(|n| spectrum.coefficient(n).norm())
        .fold(T::zero(), T::max);
    // Floors keep machine-noise bins from counting as peaks: DFT roundoff
    // scales with the DC bin (the squared distance itself), so anything
    // within 1e-12 of it is indistinguishable from rounding.
    let threshold = (T::from_f64(5.0) * median)
        .max(T::from_f64(1e-9) * max_coeff)
        .max(T::from_f64(1e-12) * spectrum.coefficient(0).norm());

    let all_residuals = residuals.clone();
    residuals.retain(|&(_, r)| r > threshold);
    if residuals.is_empty() {
        return Err(EstimatorError::NoPeak);
    }
    residuals.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let top = residuals[0].1;

    // Fast path: one clearly dominant bin.
    let contested: Vec<(i64, T)> = residuals
        .iter()
        .copied()
        .take(4)
        .filter(|&(_, r)| r > T::from_f64(0.3) * top)
        .collect();
    let candidate = if contested.len() == 1 {
        contested[0].0
    } else {
        let scale = spectrum.coefficient(0).norm() + max_coeff;
        let mut scored: Vec<(i64, T, T)> = Vec::new();
        for &(bin, prominence) in &contested {
            let best = [bin, -bin]
                .into_iter()
                .filter_map(|k2| hypothesis_residual(spectrum, k1, k2))
                .min_by(|a, b| a.partial_cmp(b).unwrap());
            if let Some(r) = best {
                scored.push((bin, r, prominence));
            }
        }
        if scored.is_empty() {
            return Err(EstimatorError::NoPeak);
        }
        let r_min = scored
            .iter()
            .map(|&(_, r, _)| r)
            .fold(T::infinity(), T::min);
        // Hypotheses this close to the best fit are spectrally equivalent
        // (a peak and its difference bin explain the same data); the one
        // with the larger detrended prominence is the neighbor's own peak.
        let tie_band = (r_min + r_min).max(r_min + T::from_f64(1e-12) * scale);
        scored.retain(|&(_, r, _)| r <= tie_band);
        scored
            .iter()
            .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
            .unwrap()
            .0
    };

    // A neighbor counter-rotating at exactly |omega1| merges its coupling
    // into the own-circle poles (the null fit absorbs it) and leaves one
    // isolated difference spike at 2|k1|; nothing pins its index. A genuine
    // neighbor at 2|k1| instead spreads residual energy beyond the candidate
    // bin: coupling tails around its own poles and a difference spike at
    // 3|k1|. An isolated 2|k1| spike is therefore ambiguous.
    if candidate == 2 * own && own > 0 {
        let cand_mag = all_residuals
            .iter()
            .find(|&&(n, _)| n == candidate)
            .map(|&(_, r)| r)
            .unwrap_or(T::zero());
        let support_floor = (T::from_f64(1e-3) * cand_mag).max(threshold);
        let supported = all_residuals
            .iter()
            .any(|&(n, r)| n != candidate && r > support_floor);
        if !supported {
            return Err(EstimatorError::AmbiguousSpectrum);
        }
    }
    Ok(candidate)
}

/// Decide the neighbor's rotation direction: run the full solve under both
/// sign hypotheses (they disagree about where the difference peak
/// `|k1 - k2|` sits) and keep the one whose model explains the spectrum
/// better. A wrong hypothesis leaves the difference peak unexplained and its
/// residual is orders of magnitude above the exact-fit floor, so residuals
/// within a factor of two of each other carry no sign information and are a
/// tie (two algebraically identical fits differ only by rounding).
pub fn resolve_rotation_sign<T: Real>(
    spectrum: &Spectrum<T>,
    k1: i64,
    k2_abs: i64,
    own_radius: T,
) -> Result<(i64, NeighborEstimate<T>), EstimatorError> {
    let mut best: Option<(i64, NeighborEstimate<T>)> = None;
    let mut residuals = Vec::new();
    for sign in [1i64, -1] {
        let k2 = sign * k2_abs;
        if !hypothesis_valid(k1, k2) {
            continue;
        }
        let indices = admissible_indices(spectrum.n_max(), k1, k2);
        let terms = match solve_drift_terms(spectrum, k1, k2, &indices) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let est = recover_neighbor(spectrum, &terms, k1, k2, own_radius)?;
        residuals.push(est.residual);
        match &best {
            Some((_, prev)) if prev.residual <= est.residual => {}
            _ => best = Some((k2, est)),
        }
    }
    match best {
        None => Err(EstimatorError::AmbiguousSpectrum),
        Some((k2, est)) => {
            if residuals.len() == 2 {
                let low = residuals[0].min(residuals[1]);
                let high = residuals[0].max(residuals[1]);
                if high <= T::from_f64(2.0) * low {
                    return Err(EstimatorError::AmbiguousSign);
                }
            }
            Ok((k2, est))
        }
    }
}

/// Norm-only estimate for windows without a usable neighbor peak (tiny radii,
/// broken consensus, or non-rotating neighbors): the quadratic drift term is
/// still identifiable from the off-peak bins, and with both radii zero the
/// center distance follows from the DC bin as well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMotionEstimate<T> {
    pub speed_norm: T,
    /// Center distance at window start, valid when both radii are zero.
    pub d_hat: T,
}

pub fn linear_motion_estimate<T: Real>(
    spectrum: &Spectrum<T>,
    k1: i64,
) -> Result<LinearMotionEstimate<T>, EstimatorError> {
    let n_max = spectrum.n_max();
    let period = spectrum.window.duration;
    let indices: Vec<i64> = (1..=n_max as i64).filter(|&n| n != k1.abs()).collect();
    let omegas: Vec<T> = if k1 != 0 {
        vec![T::TAU() * T::from_f64(k1 as f64) / period]
    } else {
        vec![]
    };
    let fit = fit_tails(spectrum, &indices, &omegas)?;
    // The neighbor's peak bins are somewhere in the fitted set and can dwarf
    // a small drift term; one rejection pass removes them.
    let fit = {
        let mut residuals: Vec<(i64, T)> = indices
            .iter()
            .map(|&n| {
                let diff = spectrum.coefficient(n as usize) - fit.model_at(n);
                (n, diff.norm())
            })
            .collect();
        let mut mags: Vec<T> = residuals.iter().map(|&(_, r)| r).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = mags[mags.len() / 2];
        let cut = T::from_f64(5.0) * median;
        residuals.retain(|&(_, r)| r <= cut);
        let kept: Vec<i64> = residuals.iter().map(|&(n, _)| n).collect();
        if kept.len() < indices.len() && kept.len() >= 4 {
            fit_tails(spectrum, &kept, &omegas)?
        } else {
            fit
        }
    };
    let quad = fit.coeffs[0];
    let lin = fit.coeffs[1];
    let speed_norm = speed_from_quad(Complex::new(quad, T::zero()), period);

    // DC bin: d^2 plus the exact discrete means of the drift polynomial.
    let m = T::from_f64(spectrum.window.sample_count as f64);
    let mean_t = period * (m - T::one()) / (T::from_f64(2.0) * m);
    let mean_t2 = period * period * (m - T::one()) * (T::from_f64(2.0) * m - T::one())
        / (T::from_f64(6.0) * m * m);
    let two_pi_sq = T::from_f64(2.0) * T::PI() * T::PI();
    let a = two_pi_sq * quad / (period * period);
    let b = T::TAU() * lin / period - two_pi_sq * quad / period;
    let d_sq = spectrum.coefficient(0).re - a * mean_t2 - b * mean_t;
    Ok(LinearMotionEstimate {
        speed_norm,
        d_hat: d_sq.max(T::zero()).sqrt(),
    })
}

/// Shortest window that is a whole number of own turns while bringing the
/// neighbor's (unsigned) turn count within `tol` of an integer. Used when the
/// two rotations are incommensurate; the accepted deviation bounds the
/// estimation error.
pub fn choose_window<T: Real>(
    omega1: T,
    omega2_abs: T,
    tol: f64,
    t_max: T,
) -> Result<Window<T>, EstimatorError> {
    assert!(omega1 != T::zero() && tol > 0.0 && tol < 0.5);
    let base = T::TAU() / omega1.abs();
    let mut m = 1i64;
    loop {
        let period = base * T::from_f64(m as f64);
        if period > t_max {
            return Err(EstimatorError::NoWindow {
                t_max: t_max.to_f64(),
                tol,
            });
        }
        let k2f = (omega2_abs * period / T::TAU()).to_f64();
        let k2 = k2f.round();
        if (k2f - k2).abs() <= tol && k2 >= 1.0 {
            let k1 = if omega1 > T::zero() { m } else { -m };
            let kmax = m.max(k2 as i64) as usize;
            let samples = (8 * kmax).max(4096);
            return Window::with_harmonics(period, samples, vec![k1, k2 as i64])
                .map_err(|_| EstimatorError::NoWindow {
                    t_max: t_max.to_f64(),
                    tol,
                });
        }
        m += 1;
    }
}

/// What one endpoint learned about its neighbor this window.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimateOutcome<T> {
    /// Peak found, sign resolved, full state recovered.
    Full {
        k2: i64,
        estimate: NeighborEstimate<T>,
        frame: FrameLink<T>,
    },
    /// Only the relative speed norm could be extracted.
    NormOnly { speed_norm: T, reason: EstimatorError },
}

/// Pipeline options. `known_sign` declares the neighbor's rotation direction
/// a priori (an agreed convention) instead of resolving it from residuals;
/// `residual_gate`, when set, demotes full estimates whose residual exceeds
/// the gate to norm-only outcomes.
#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions<T> {
    pub known_sign: Option<i64>,
    pub residual_gate: Option<T>,
}

impl<T> Default for EstimateOptions<T> {
    fn default() -> Self {
        Self {
            known_sign: None,
            residual_gate: None,
        }
    }
}

/// Run the whole single-window pipeline for one endpoint: spectrum, peak
/// identification, sign resolution, drift solve, recovery, frame link.
/// Estimator failures degrade to a norm-only outcome rather than an error so
/// the control loop can keep tracking neighbor speeds.
pub fn estimate_neighbor<T: Real>(
    trace: &DistanceTrace<T>,
    window: &Window<T>,
    own_k1: i64,
    own_radius: T,
    own_phase: T,
    n_max: usize,
    options: EstimateOptions<T>,
) -> Result<EstimateOutcome<T>, EstimatorError> {
    let spectrum = spectrum_of_squared_trace(trace, window, n_max)
        .map_err(|_| EstimatorError::InvalidIndices)?;

    let norm_only = |reason: EstimatorError, spectrum: &Spectrum<T>| {
        let speed = linear_motion_estimate(spectrum, own_k1)
            .map(|l| l.speed_norm)
            .unwrap_or(T::zero());
        Ok(EstimateOutcome::NormOnly {
            speed_norm: speed,
            reason,
        })
    };

    // Without own excitation the peak bin carries no distance information;
    // the drift terms still yield the speed norm.
    if own_radius <= T::zero() {
        return norm_only(EstimatorError::DegenerateRadius, &spectrum);
    }

    let k2_abs = match find_neighbor_peak(&spectrum, own_k1) {
        Ok(k) => k,
        Err(e @ (EstimatorError::NoPeak | EstimatorError::AmbiguousSpectrum)) => {
            return norm_only(e, &spectrum)
        }
        Err(e) => return Err(e),
    };

    let resolved = match options.known_sign {
        Some(sign) => {
            let k2 = sign.signum().max(-1) * k2_abs;
            if !hypothesis_valid(own_k1, k2) {
                return norm_only(EstimatorError::AmbiguousSpectrum, &spectrum);
            }
            let indices = admissible_indices(spectrum.n_max(), own_k1, k2);
            solve_drift_terms(&spectrum, own_k1, k2, &indices)
                .and_then(|terms| recover_neighbor(&spectrum, &terms, own_k1, k2, own_radius))
                .map(|est| (k2, est))
        }
        None => resolve_rotation_sign(&spectrum, own_k1, k2_abs, own_radius),
    };

    match resolved {
        Ok((k2, estimate)) => {
            if let Some(gate) = options.residual_gate {
                if estimate.residual > gate {
                    return norm_only(EstimatorError::NoPeak, &spectrum);
                }
            }
            let frame = frame_link(own_phase, estimate.phi1_hat);
            Ok(EstimateOutcome::Full {
                k2,
                estimate,
                frame,
            })
        }
        Err(e @ (EstimatorError::AmbiguousSign | EstimatorError::AmbiguousSpectrum)) => {
            norm_only(e, &spectrum)
        }
        Err(e) => Err(e),
    }
}

/// Default bin budget for a pair whose own index is `k1` when the neighbor's
/// index is not yet known: covers any cross peak up to `2 kmax` plus spare
/// solve bins.
pub fn default_n_max(k_abs_max: i64) -> usize {
    (2 * k_abs_max + 12) as usize
}
