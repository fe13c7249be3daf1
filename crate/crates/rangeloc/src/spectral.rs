//! Fourier analysis of the squared distance trace.
//!
//! With both agents rotating an integer number of turns per window, the
//! squared distance is T-periodic up to the linear drift terms, and its
//! Fourier coefficients
//!
//! ```text
//! c_n = (1/T) \int_0^T z^2(t) e^{-j 2 pi n t / T} dt
//! ```
//!
//! decompose into a handful of closed-form pieces. The discrete counterpart is
//! the DFT of the M uniform samples, `(1/M) sum_m z^2(t_m) e^{-j 2 pi n m / M}`.
//! No windowing or tapering is applied anywhere: the estimator downstream
//! relies on the raw periodic-extension coefficients, endpoint jump included.

use num_complex::Complex;
use thiserror::Error;

use crate::kinematics::{DistanceTrace, Window};
use crate::linalg::Mat;
use crate::num::Real;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("requested bin {n_max} reaches past Nyquist for {m} samples")]
    IndexOverflow { n_max: usize, m: usize },
    #[error("coefficient undefined at index zero")]
    ZeroIndex,
    #[error("solve indices must be distinct, positive, and avoid the peak indices")]
    IndexClash,
}

/// DFT evaluator for one real signal: a full table of M twiddle factors, so a
/// bin at any index is an exact sum with no phase drift.
pub struct DftTable<T> {
    twiddles: Vec<Complex<T>>,
}

impl<T: Real> DftTable<T> {
    pub fn new(len: usize) -> Self {
        let twiddles = (0..len)
            .map(|k| {
                let angle = -T::TAU() * T::from_f64(k as f64) / T::from_f64(len as f64);
                let (s, c) = angle.sin_cos();
                Complex::new(c, s)
            })
            .collect();
        Self { twiddles }
    }

    pub fn len(&self) -> usize {
        self.twiddles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twiddles.is_empty()
    }

    /// `(1/M) sum_m x_m e^{-j 2 pi n m / M}`; `n` is taken modulo M, so
    /// negative and super-Nyquist indices are valid.
    pub fn bin(&self, samples: &[T], n: i64) -> Complex<T> {
        let m_len = self.twiddles.len();
        assert_eq!(samples.len(), m_len);
        let n_mod = n.rem_euclid(m_len as i64) as usize;
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut idx = 0usize;
        for &x in samples {
            let w = self.twiddles[idx];
            acc = Complex::new(acc.re + x * w.re, acc.im + x * w.im);
            idx += n_mod;
            if idx >= m_len {
                idx -= m_len;
            }
        }
        let scale = T::one() / T::from_f64(m_len as f64);
        Complex::new(acc.re * scale, acc.im * scale)
    }
}

/// Fourier coefficients of the squared trace, bins 0..=n_max.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub coefficients: Vec<Complex<T>>,
    pub window: Window<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn n_max(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficient(&self, n: usize) -> Complex<T> {
        self.coefficients[n]
    }
}

/// Squares the trace and takes its DFT for bins `0..=n_max`.
pub fn spectrum_of_squared_trace<T: Real>(
    trace: &DistanceTrace<T>,
    window: &Window<T>,
    n_max: usize,
) -> Result<Spectrum<T>, SpectralError> {
    let m = trace.samples.len();
    debug_assert_eq!(m, window.sample_count);
    if 2 * n_max >= m {
        return Err(SpectralError::IndexOverflow { n_max, m });
    }
    let squared: Vec<T> = trace.samples.iter().map(|&z| z * z).collect();
    let table = DftTable::new(m);
    let coefficients = (0..=n_max).map(|n| table.bin(&squared, n as i64)).collect();
    Ok(Spectrum {
        coefficients,
        window: window.clone(),
    })
}

/// Coefficient of `e^{-j 2 pi n t / T}` for `f(t) = (d + v t) cos(w t)` with
/// `w T = 2 pi k1` (whole turns). At the carrier index `n = k1`:
/// `(d + v T / 2) / 2 + j v T / (8 pi k1)`; elsewhere the ramp leaks
/// `j v T / (4 pi) * (1/(n-k1) + 1/(n+k1))`.
pub fn ramp_cosine_coefficient<T: Real>(d: T, v: T, period: T, k1: i64, n: i64) -> Complex<T> {
    assert!(k1 > 0 && n > 0 && period > T::zero());
    let two = T::from_f64(2.0);
    if n == k1 {
        let re = (d + v * period / two) / two;
        let im = v * period / (T::from_f64(8.0) * T::PI() * T::from_f64(k1 as f64));
        Complex::new(re, im)
    } else {
        let nk = T::from_f64((n - k1) as f64);
        let pk = T::from_f64((n + k1) as f64);
        let im = v * period / (T::from_f64(4.0) * T::PI()) * (nk.recip() + pk.recip());
        Complex::new(T::zero(), im)
    }
}

/// Coefficient of `e^{-j 2 pi n t / T}` for `f(t) = a t^2 + b t`, `n != 0`:
/// `a T^2 / (2 pi^2 n^2) + j (a T^2 + b T) / (2 pi n)`.
pub fn quadratic_coefficient<T: Real>(
    a: T,
    b: T,
    period: T,
    n: i64,
) -> Result<Complex<T>, SpectralError> {
    if n == 0 {
        return Err(SpectralError::ZeroIndex);
    }
    let nf = T::from_f64(n as f64);
    let two = T::from_f64(2.0);
    let re = a * period * period / (two * T::PI() * T::PI() * nf * nf);
    let im = (a * period * period + b * period) / (two * T::PI() * nf);
    Ok(Complex::new(re, im))
}

/// Design matrix of the off-peak coefficient system: row for index `n` is
/// `[1/n^2, 1/n, 1/(n-k1)+1/(n+k1), 1/(n-k2)+1/(n+k2)]`. Full rank whenever
/// the indices and `k1, k2` are six distinct positive integers.
pub fn coefficient_matrix<T: Real>(
    n_indices: &[i64],
    k1: i64,
    k2: i64,
) -> Result<Mat<T>, SpectralError> {
    if n_indices.len() < 4 || k1 <= 0 || k2 <= 0 || k1 == k2 {
        return Err(SpectralError::IndexClash);
    }
    let mut seen = n_indices.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != n_indices.len() {
        return Err(SpectralError::IndexClash);
    }
    let forbidden = [0, k1, k2, (k1 - k2).abs()];
    if n_indices.iter().any(|n| *n <= 0 || forbidden.contains(n)) {
        return Err(SpectralError::IndexClash);
    }
    let rows: Vec<Vec<T>> = n_indices
        .iter()
        .map(|&n| {
            let nf = T::from_f64(n as f64);
            vec![
                (nf * nf).recip(),
                nf.recip(),
                T::from_f64((n - k1) as f64).recip() + T::from_f64((n + k1) as f64).recip(),
                T::from_f64((n - k2) as f64).recip() + T::from_f64((n + k2) as f64).recip(),
            ]
        })
        .collect();
    Ok(Mat::from_rows(&rows))
}
