//! Signal-to-distortion ratio with a least-squares FIR projection.
//!
//! The estimate is projected onto the span of the reference and its delays
//! `0..taps`; whatever the projection cannot explain counts as distortion.
//! One tap gives the scale-invariant SDR. 512 taps approximate the usual
//! BSS-eval allowed-distortion filter for a single reference.

use alloc::vec;
use alloc::vec::Vec;


/// Reported SDR is clamped to `[-SDR_CAP_DB, SDR_CAP_DB]`; a perfect match
/// reads as the cap.
pub const SDR_CAP_DB: f64 = 200.0;
pub const DEFAULT_TAPS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("estimate has {estimate} samples but reference has {reference}")]
    LengthMismatch { estimate: usize, reference: usize },
    #[error("reference signal has zero energy")]
    ZeroReference,
    #[error("projection needs at least one tap")]
    ZeroTaps,
    #[error("{taps} taps exceed the signal length {len}")]
    TooManyTaps { taps: usize, len: usize },
    #[error("signal contains non-finite samples")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrReport {
    pub sdr_out: f64,
    pub sdr_in: f64,
    pub sdr_improvement: f64,
    pub projection_taps: usize,
}

/// Reusable SDR evaluator for one reference; the Gram matrix of the delayed
/// references is factorised once.
#[derive(Debug, Clone)]
pub struct SdrEvaluator {
    reference: Vec<f64>,
    taps: usize,
    /// Lower Cholesky factor of the `taps x taps` Gram matrix, row-major.
    chol: Vec<f64>,
}

impl SdrEvaluator {
    pub fn new(reference: &[f64], taps: usize) -> Result<Self, EvalError> {
        if taps == 0 {
            return Err(EvalError::ZeroTaps);
        }
        if taps > reference.len() {
            return Err(EvalError::TooManyTaps {
                taps,
                len: reference.len(),
            });
        }
        if !reference.iter().all(|x| x.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        let energy: f64 = reference.iter().map(|x| x * x).sum();
        if energy <= 0.0 {
            return Err(EvalError::ZeroReference);
        }
        let gram = delayed_gram(reference, taps);
        let chol = cholesky_with_loading(&gram, taps);
        Ok(Self {
            reference: reference.to_vec(),
            taps,
            chol,
        })
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn sdr(&self, estimate: &[f64]) -> Result<f64, EvalError> {
        let n = self.reference.len();
        if estimate.len() != n {
            return Err(EvalError::LengthMismatch {
                estimate: estimate.len(),
                reference: n,
            });
        }
        if !estimate.iter().all(|x| x.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        let reference = &self.reference;
        let cross: Vec<f64> = (0..self.taps)
            .map(|a| estimate[a..].iter().zip(reference).map(|(e, r)| e * r).sum())
            .collect();
        let filter = cholesky_solve(&self.chol, self.taps, &cross);

        let mut projection = vec![0.0; n];
        for (a, &g) in filter.iter().enumerate() {
            for (p, r) in projection[a..].iter_mut().zip(reference) {
                *p += g * r;
            }
        }
        let signal: f64 = projection.iter().map(|p| p * p).sum();
        let distortion: f64 = estimate.iter().zip(&projection).map(|(e, p)| (e - p) * (e - p)).sum();
        Ok(ratio_db(signal, distortion))
    }
}

fn ratio_db(signal: f64, distortion: f64) -> f64 {
    if signal <= 0.0 {
        return -SDR_CAP_DB;
    }
    if distortion <= 0.0 {
        return SDR_CAP_DB;
    }
    (10.0 * (signal / distortion).log10()).clamp(-SDR_CAP_DB, SDR_CAP_DB)
}

/// Exact Gram matrix of the zero-filled delayed references,
/// `G[a][b] = sum_n r[n - a] r[n - b]`, using
/// `G[a + 1][b + 1] = G[a][b] - r[N-1-a] r[N-1-b]`.
fn delayed_gram(reference: &[f64], taps: usize) -> Vec<f64> {
    let n = reference.len();
    let mut g = vec![0.0; taps * taps];
    for d in 0..taps {
        g[d] = reference[d..].iter().zip(reference).map(|(x, y)| x * y).sum();
    }
    for a in 0..taps - 1 {
        for b in a..taps - 1 {
            let next = g[a * taps + b] - reference[n - 1 - a] * reference[n - 1 - b];
            g[(a + 1) * taps + b + 1] = next;
        }
    }
    for a in 0..taps {
        for b in 0..a {
            g[a * taps + b] = g[b * taps + a];
        }
    }
    g
}

/// Cholesky factor, adding diagonal loading when the Gram matrix is rank
/// deficient (e.g. a pure-tone reference with many taps).
fn cholesky_with_loading(gram: &[f64], n: usize) -> Vec<f64> {
    let scale = gram[0];
    let mut loading = 0.0;
    loop {
        if let Some(l) = cholesky(gram, n, loading) {
            return l;
        }
        loading = if loading == 0.0 { 1e-12 * scale } else { loading * 10.0 };
    }
}

fn cholesky(a: &[f64], n: usize, loading: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j] + loading;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// SDR of `estimate` against `reference` in dB.
pub fn sdr(estimate: &[f64], reference: &[f64], taps: usize) -> Result<f64, EvalError> {
    SdrEvaluator::new(reference, taps)?.sdr(estimate)
}

/// Output SDR of `extracted`, input SDR of the unprocessed mixture channel,
/// and their difference.
pub fn sdr_improvement(
    extracted: &[f64],
    mixture_channel: &[f64],
    reference: &[f64],
    taps: usize,
) -> Result<SdrReport, EvalError> {
    let evaluator = SdrEvaluator::new(reference, taps)?;
    let sdr_out = evaluator.sdr(extracted)?;
    let sdr_in = evaluator.sdr(mixture_channel)?;
    Ok(SdrReport {
        sdr_out,
        sdr_in,
        sdr_improvement: sdr_out - sdr_in,
        projection_taps: taps,
    })
}
