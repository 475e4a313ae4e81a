//! Demixing-filter estimation and the extraction output stage.
//!
//! `W_i` maps the observation to separated channels via `y = W_i^H x`.
//! Column 0 is the target filter, columns `1..M` span the noise subspace.

mod run;

pub use run::{run_noisy_ilrma, AlgorithmConfig, Clock, ExtractionResult, NoisyIlrma, Progress, Regime, TraceEntry};

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result, Warning};
use crate::linalg::{self, ComplexMatrix, HermitianMatrix};
use crate::model::{NoiseWeight, SeparatedPowers, Variances};
use crate::spectrogram::Spectrogram;

/// Relative floor (against the trace) for sample-covariance eigenvalues at
/// initialisation.
pub const INIT_EIGEN_FLOOR: f64 = 1e-12;

/// Per-frequency demixing matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DemixingSystem {
    channels: usize,
    matrices: Vec<ComplexMatrix>,
}

impl DemixingSystem {
    pub fn identity(bins: usize, channels: usize) -> Self {
        Self {
            channels,
            matrices: vec![ComplexMatrix::identity(channels); bins],
        }
    }

    pub fn from_matrices(matrices: Vec<ComplexMatrix>) -> Result<Self> {
        let channels = matrices.first().map(ComplexMatrix::rows).ok_or(Error::Usage("no frequency bins"))?;
        for m in &matrices {
            if m.rows() != channels || m.cols() != channels {
                return Err(Error::DimensionMismatch {
                    what: "demixing matrix",
                    expected: channels,
                    found: m.cols().max(m.rows()),
                });
            }
        }
        Ok(Self { channels, matrices })
    }

    pub fn bins(&self) -> usize {
        self.matrices.len()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn matrix(&self, bin: usize) -> &ComplexMatrix {
        &self.matrices[bin]
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn target_filter(&self, bin: usize) -> Vec<Complex64> {
        self.matrices[bin].column(0)
    }

    /// `log |det W_i|` for every bin.
    pub fn log_abs_dets(&self) -> Result<Vec<f64>> {
        self.matrices
            .iter()
            .enumerate()
            .map(|(bin, w)| {
                let d = linalg::log_abs_det(w)?;
                if d.is_finite() {
                    Ok(d.value)
                } else {
                    Err(Error::SingularDemixing { bin })
                }
            })
            .collect()
    }
}

/// Variance-weighted observation covariances, one pair per bin:
/// `target = (1/J) sum_j x x^H / (r_s + lambda r_n)` and
/// `noise = (1/J) sum_j x x^H / r_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCovariances {
    pub target: Vec<HermitianMatrix>,
    pub noise: Vec<HermitianMatrix>,
}

pub fn build_covariances(
    observation: &Spectrogram,
    variances: &Variances,
    weight: &NoiseWeight,
) -> Result<WeightedCovariances> {
    let (i_n, j_n, m_n) = (observation.freq_bins(), observation.frames(), observation.channels());
    if j_n == 0 {
        return Err(Error::Usage("observation has no frames"));
    }
    check_dims("variance bins", i_n, variances.bins())?;
    check_dims("variance frames", j_n, variances.frames())?;
    check_dims("noise weight", i_n, weight.len())?;
    variances.validate()?;

    let mut target = Vec::with_capacity(i_n);
    let mut noise = Vec::with_capacity(i_n);
    let mut acc_s = vec![Complex64::new(0.0, 0.0); m_n * m_n];
    let mut acc_n = vec![Complex64::new(0.0, 0.0); m_n * m_n];
    for i in 0..i_n {
        acc_s.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        acc_n.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let lambda = weight.as_slice()[i];
        for j in 0..j_n {
            let idx = i * j_n + j;
            let ws = 1.0 / (variances.target[idx] + lambda * variances.noise[idx]);
            let wn = 1.0 / variances.noise[idx];
            let x = observation.vector(i, j);
            for p in 0..m_n {
                for q in p..m_n {
                    let xx = x[p] * x[q].conj();
                    acc_s[p * m_n + q] += xx * ws;
                    acc_n[p * m_n + q] += xx * wn;
                }
            }
        }
        target.push(upper_to_hermitian(&acc_s, m_n, j_n));
        noise.push(upper_to_hermitian(&acc_n, m_n, j_n));
    }
    Ok(WeightedCovariances { target, noise })
}

fn upper_to_hermitian(upper: &[Complex64], dim: usize, frames: usize) -> HermitianMatrix {
    let scale = 1.0 / frames as f64;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for p in 0..dim {
        m[(p, p)] = Complex64::new(upper[p * dim + p].re * scale, 0.0);
        for q in p + 1..dim {
            let v = upper[p * dim + q] * scale;
            m[(p, q)] = v;
            m[(q, p)] = v.conj();
        }
    }
    HermitianMatrix::symmetrized(m)
}

fn check_dims(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}

/// Output of [`update_demixing`].
#[derive(Debug, Clone, PartialEq)]
pub struct DemixingUpdate {
    pub system: DemixingSystem,
    /// Bins whose pencil was singular and kept their previous filter.
    pub fallback_bins: Vec<usize>,
}

impl DemixingUpdate {
    pub fn warnings(&self) -> impl Iterator<Item = Warning> + '_ {
        self.fallback_bins.iter().map(|&bin| Warning::SingularPencil { bin })
    }
}

/// Updates every column of every `W_i` at once from the generalized
/// eigenvectors of `(G_noise, G_target)`.
///
/// The eigenvector with the largest eigenvalue becomes the target filter,
/// normalised so that `w^H G_target w = 1`; the others become noise filters
/// normalised so that `w^H G_noise w = 1`.
pub fn update_demixing(cov: &WeightedCovariances, current: &DemixingSystem) -> Result<DemixingUpdate> {
    let i_n = current.bins();
    let m_n = current.channels();
    check_dims("target covariances", i_n, cov.target.len())?;
    check_dims("noise covariances", i_n, cov.noise.len())?;

    let mut matrices = Vec::with_capacity(i_n);
    let mut fallback_bins = Vec::new();
    for i in 0..i_n {
        match demix_bin(&cov.target[i], &cov.noise[i], m_n) {
            Some(w) => matrices.push(w),
            None => {
                fallback_bins.push(i);
                matrices.push(current.matrices[i].clone());
            }
        }
    }
    Ok(DemixingUpdate {
        system: DemixingSystem {
            channels: m_n,
            matrices,
        },
        fallback_bins,
    })
}

fn demix_bin(g_target: &HermitianMatrix, g_noise: &HermitianMatrix, m_n: usize) -> Option<ComplexMatrix> {
    if g_target.dim() != m_n || g_noise.dim() != m_n {
        return None;
    }
    let gevd = linalg::hermitian_gevd(g_noise, g_target).ok()?;
    normalized_filters(gevd.eigenvectors, g_target, g_noise)
}

/// Scales column 0 to `w^H G_target w = 1` and the rest to `w^H G_noise w = 1`.
fn normalized_filters(mut w: ComplexMatrix, g_target: &HermitianMatrix, g_noise: &HermitianMatrix) -> Option<ComplexMatrix> {
    for m in 0..w.cols() {
        let mut h = w.column(m);
        let g = if m == 0 { g_target } else { g_noise };
        let norm = g.quadratic_form(&h);
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        let inv = 1.0 / norm.sqrt();
        h.iter_mut().for_each(|z| *z *= inv);
        w.set_column(m, &h);
    }
    Some(w)
}

/// Deviations from the four stationarity conditions of the demixing cost
/// at one bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityResiduals {
    /// `|w_s^H G_s w_s - 1|`
    pub target_scale: f64,
    /// `|| W_n^H G_s w_s ||`
    pub target_cross: f64,
    /// `|| w_s^H G_n W_n ||`
    pub noise_cross: f64,
    /// `|| W_n^H G_n W_n - I ||_F`
    pub noise_gram: f64,
}

impl StationarityResiduals {
    pub fn max(&self) -> f64 {
        self.target_scale
            .max(self.target_cross)
            .max(self.noise_cross)
            .max(self.noise_gram)
    }
}

pub fn stationarity_residuals(cov: &WeightedCovariances, system: &DemixingSystem) -> Vec<StationarityResiduals> {
    let m_n = system.channels();
    (0..system.bins())
        .map(|i| {
            let w = system.matrix(i);
            let ws = w.column(0);
            let gs_ws = cov.target[i].as_matrix().mul_vec(&ws);
            let gn = &cov.noise[i];
            let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };

            let target_scale = (dot(&ws, &gs_ws) - Complex64::new(1.0, 0.0)).norm();
            let mut target_cross = 0.0;
            let mut noise_cross = 0.0;
            let mut noise_gram = 0.0;
            for p in 1..m_n {
                let wp = w.column(p);
                target_cross += dot(&wp, &gs_ws).norm_sqr();
                let gn_wp = gn.as_matrix().mul_vec(&wp);
                noise_cross += dot(&ws, &gn_wp).norm_sqr();
                for q in 1..m_n {
                    let wq = w.column(q);
                    let expected = if p == q { 1.0 } else { 0.0 };
                    noise_gram += (dot(&wq, &gn_wp) - Complex64::new(expected, 0.0)).norm_sqr();
                }
            }
            StationarityResiduals {
                target_scale,
                target_cross: target_cross.sqrt(),
                noise_cross: noise_cross.sqrt(),
                noise_gram: noise_gram.sqrt(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemixingInit {
    pub system: DemixingSystem,
    pub warnings: Vec<Warning>,
}

/// Whitening initialisation: column `m` of `W_i` is `u_m / sqrt(d_m)` for the
/// eigenpairs of the sample covariance, largest eigenvalue first.
pub fn init_demixing(observation: &Spectrogram) -> Result<DemixingInit> {
    let (i_n, j_n, m_n) = (observation.freq_bins(), observation.frames(), observation.channels());
    if j_n == 0 || m_n == 0 || i_n == 0 {
        return Err(Error::Usage("empty observation"));
    }
    let mut warnings = Vec::new();
    if j_n < m_n {
        warnings.push(Warning::FewFrames {
            frames: j_n,
            channels: m_n,
        });
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); m_n * m_n];
    let mut matrices = Vec::with_capacity(i_n);
    for i in 0..i_n {
        acc.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for j in 0..j_n {
            let x = observation.vector(i, j);
            for p in 0..m_n {
                for q in p..m_n {
                    acc[p * m_n + q] += x[p] * x[q].conj();
                }
            }
        }
        let cov = upper_to_hermitian(&acc, m_n, j_n);
        let trace = cov.trace();
        if !(trace > 0.0 && trace.is_finite()) {
            warnings.push(Warning::ZeroCovariance { bin: i });
            matrices.push(ComplexMatrix::identity(m_n));
            continue;
        }
        let eig = linalg::hermitian_eig(&cov)?;
        let floor = INIT_EIGEN_FLOOR * trace;
        let mut w = ComplexMatrix::zeros(m_n, m_n);
        for m in 0..m_n {
            let scale = 1.0 / eig.eigenvalues[m].max(floor).sqrt();
            let u: Vec<Complex64> = eig.eigenvector(m).iter().map(|z| z * scale).collect();
            w.set_column(m, &u);
        }
        matrices.push(w);
    }
    Ok(DemixingInit {
        system: DemixingSystem {
            channels: m_n,
            matrices,
        },
        warnings,
    })
}

/// Separated signals `y = W^H x` and their powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub powers: SeparatedPowers,
    pub separated: Spectrogram,
}

pub fn separate(observation: &Spectrogram, system: &DemixingSystem) -> Result<Separation> {
    let (i_n, j_n, m_n) = (observation.freq_bins(), observation.frames(), observation.channels());
    check_dims("demixing bins", i_n, system.bins())?;
    check_dims("demixing channels", m_n, system.channels())?;
    let mut separated = Spectrogram::zeros(m_n, i_n, j_n);
    let mut p1 = vec![0.0; i_n * j_n];
    let mut p_rest = vec![0.0; i_n * j_n];
    for i in 0..i_n {
        let w = system.matrix(i);
        for j in 0..j_n {
            let y = w.conj_transpose_mul_vec(observation.vector(i, j));
            p1[i * j_n + j] = y[0].norm_sqr();
            p_rest[i * j_n + j] = y[1..].iter().map(|z| z.norm_sqr()).sum();
            separated.vector_mut(i, j).copy_from_slice(&y);
        }
    }
    let powers = SeparatedPowers::new(i_n, j_n, m_n, p1, p_rest)?;
    Ok(Separation { powers, separated })
}

/// Multichannel Wiener output and any per-bin fallbacks taken.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerOutput {
    pub extracted: Spectrogram,
    pub warnings: Vec<Warning>,
}

/// `s_hat = a * r_s / (r_s + lambda r_n) * w_s^H x` with the projection-back
/// vector `a = (W^H)^{-1} e_1`.
pub fn wiener_extract(
    observation: &Spectrogram,
    system: &DemixingSystem,
    variances: &Variances,
    weight: &NoiseWeight,
) -> Result<WienerOutput> {
    let (i_n, j_n, m_n) = (observation.freq_bins(), observation.frames(), observation.channels());
    check_dims("demixing bins", i_n, system.bins())?;
    check_dims("demixing channels", m_n, system.channels())?;
    check_dims("variance bins", i_n, variances.bins())?;
    check_dims("variance frames", j_n, variances.frames())?;
    check_dims("noise weight", i_n, weight.len())?;
    variances.validate()?;

    let mut extracted = Spectrogram::zeros(m_n, i_n, j_n);
    let mut warnings = Vec::new();
    for i in 0..i_n {
        let w = system.matrix(i);
        let a = match projection_back(w) {
            Some(a) => a,
            None => {
                warnings.push(Warning::SingularDemixing { bin: i });
                let mut e1 = vec![Complex64::new(0.0, 0.0); m_n];
                e1[0] = Complex64::new(1.0, 0.0);
                e1
            }
        };
        let ws = w.column(0);
        let lambda = weight.as_slice()[i];
        for j in 0..j_n {
            let idx = i * j_n + j;
            let r_s = variances.target[idx];
            let gain = r_s / (r_s + lambda * variances.noise[idx]);
            let linear: Complex64 = ws.iter().zip(observation.vector(i, j)).map(|(w, x)| w.conj() * x).sum();
            let scaled = linear * gain;
            for (out, am) in extracted.vector_mut(i, j).iter_mut().zip(&a) {
                *out = am * scaled;
            }
        }
    }
    Ok(WienerOutput { extracted, warnings })
}

/// First column of `(W^H)^{-1}`, or `None` when `W` is singular.
pub fn projection_back(w: &ComplexMatrix) -> Option<Vec<Complex64>> {
    linalg::inverse(&w.conj_transpose()).ok().map(|inv| inv.column(0))
}
