//! Source-variance models and their majorization-minimization updates.
//!
//! The separated target channel `y1` is modelled as zero-mean complex
//! Gaussian with variance `r_s + lambda * r_n`, the remaining `M - 1`
//! channels as noise with variance `r_n`. The variances are either NMF
//! factorised ([`NmfSourceModel`]) or free per time-frequency point with an
//! inverse-gamma prior on the target ([`FreeSourceModel`]).
//!
//! All tensors indexed by `(bin, frame)` are stored bin-major, `i * J + j`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::distr::Open01;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-positive or non-finite variance at bin {bin}, frame {frame}")]
    NonPositiveVariance { bin: usize, frame: usize },
    #[error("non-positive or non-finite noise weight at bin {bin}")]
    NonPositiveWeight { bin: usize },
    #[error("separated powers contain NaN, infinite or negative values")]
    InvalidPowers,
    #[error("non-finite log-determinant at bin {bin}")]
    NonFiniteLogDet { bin: usize },
    #[error("inverse-gamma prior needs alpha > 0 and beta > 0 (got alpha={alpha}, beta={beta})")]
    InvalidPrior { alpha: f64, beta: f64 },
    #[error("basis count must be at least one")]
    NoBases,
}

/// Lower bounds applied after every update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Floors {
    /// Floor for NMF bases and activations.
    pub nmf: f64,
    /// Floor for variances and the noise weight.
    pub variance: f64,
}

impl Default for Floors {
    fn default() -> Self {
        Self {
            nmf: 1e-12,
            variance: 1e-12,
        }
    }
}

/// Powers of the separated signals `y = W^H x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedPowers {
    bins: usize,
    frames: usize,
    mic_count: usize,
    /// `|y_1|^2`
    p1: Vec<f64>,
    /// `sum_{n >= 2} |y_n|^2`
    p_rest: Vec<f64>,
}

impl SeparatedPowers {
    pub fn new(
        bins: usize,
        frames: usize,
        mic_count: usize,
        p1: Vec<f64>,
        p_rest: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if mic_count == 0 {
            return Err(ModelError::DimensionMismatch {
                what: "mic count",
                expected: 1,
                found: 0,
            });
        }
        let n = bins * frames;
        check_len("p1", n, p1.len())?;
        check_len("p_rest", n, p_rest.len())?;
        let valid = |x: &f64| x.is_finite() && *x >= 0.0;
        if !p1.iter().all(valid) || !p_rest.iter().all(valid) {
            return Err(ModelError::InvalidPowers);
        }
        if mic_count == 1 && p_rest.iter().any(|&x| x != 0.0) {
            return Err(ModelError::InvalidPowers);
        }
        Ok(Self {
            bins,
            frames,
            mic_count,
            p1,
            p_rest,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn mic_count(&self) -> usize {
        self.mic_count
    }

    pub fn target(&self) -> &[f64] {
        &self.p1
    }

    pub fn rest(&self) -> &[f64] {
        &self.p_rest
    }

    pub fn mean_target(&self) -> f64 {
        self.p1.iter().sum::<f64>() / self.p1.len().max(1) as f64
    }
}

/// Target and noise variances on the `(bin, frame)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Variances {
    bins: usize,
    frames: usize,
    pub target: Vec<f64>,
    pub noise: Vec<f64>,
}

impl Variances {
    pub fn new(bins: usize, frames: usize, target: Vec<f64>, noise: Vec<f64>) -> Result<Self, ModelError> {
        check_len("target variances", bins * frames, target.len())?;
        check_len("noise variances", bins * frames, noise.len())?;
        Ok(Self {
            bins,
            frames,
            target,
            noise,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Fails on the first non-positive or non-finite entry.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (idx, (&s, &n)) in self.target.iter().zip(&self.noise).enumerate() {
            if !(s > 0.0 && s.is_finite() && n > 0.0 && n.is_finite()) {
                return Err(ModelError::NonPositiveVariance {
                    bin: idx / self.frames,
                    frame: idx % self.frames,
                });
            }
        }
        Ok(())
    }
}

/// Per-bin weight `lambda` of the noise component in the target channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseWeight {
    lambda: Vec<f64>,
}

impl NoiseWeight {
    pub fn new(lambda: Vec<f64>) -> Result<Self, ModelError> {
        for (bin, &l) in lambda.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(ModelError::NonPositiveWeight { bin });
            }
        }
        Ok(Self { lambda })
    }

    pub fn ones(bins: usize) -> Self {
        Self { lambda: vec![1.0; bins] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// NMF variance model: `r_l[i, j] = sum_k t_l[i, k] v_l[k, j]` for `l` in
/// {target, noise}.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfSourceModel {
    bins: usize,
    frames: usize,
    basis_count: usize,
    /// `I x K`, row-major.
    pub bases_target: Vec<f64>,
    /// `K x J`, row-major.
    pub activations_target: Vec<f64>,
    pub bases_noise: Vec<f64>,
    pub activations_noise: Vec<f64>,
}

impl NmfSourceModel {
    /// Draws every factor independently from the open interval (0, 1).
    pub fn random<R: Rng + ?Sized>(bins: usize, frames: usize, basis_count: usize, rng: &mut R) -> Result<Self, ModelError> {
        if basis_count == 0 {
            return Err(ModelError::NoBases);
        }
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(Open01)).collect() };
        let bases_target = draw(bins * basis_count);
        let activations_target = draw(basis_count * frames);
        let bases_noise = draw(bins * basis_count);
        let activations_noise = draw(basis_count * frames);
        Ok(Self {
            bins,
            frames,
            basis_count,
            bases_target,
            activations_target,
            bases_noise,
            activations_noise,
        })
    }

    pub fn from_factors(
        bins: usize,
        frames: usize,
        basis_count: usize,
        bases_target: Vec<f64>,
        activations_target: Vec<f64>,
        bases_noise: Vec<f64>,
        activations_noise: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if basis_count == 0 {
            return Err(ModelError::NoBases);
        }
        check_len("target bases", bins * basis_count, bases_target.len())?;
        check_len("target activations", basis_count * frames, activations_target.len())?;
        check_len("noise bases", bins * basis_count, bases_noise.len())?;
        check_len("noise activations", basis_count * frames, activations_noise.len())?;
        Ok(Self {
            bins,
            frames,
            basis_count,
            bases_target,
            activations_target,
            bases_noise,
            activations_noise,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn basis_count(&self) -> usize {
        self.basis_count
    }

    /// Composed variances, floored at `floors.variance`.
    pub fn variances(&self, floors: &Floors) -> Variances {
        Variances {
            bins: self.bins,
            frames: self.frames,
            target: self.compose(&self.bases_target, &self.activations_target, floors.variance),
            noise: self.compose(&self.bases_noise, &self.activations_noise, floors.variance),
        }
    }

    fn compose(&self, t: &[f64], v: &[f64], floor: f64) -> Vec<f64> {
        let (i_n, j_n, k_n) = (self.bins, self.frames, self.basis_count);
        let mut r = vec![0.0; i_n * j_n];
        for i in 0..i_n {
            let row = &mut r[i * j_n..(i + 1) * j_n];
            for k in 0..k_n {
                let t_ik = t[i * k_n + k];
                let v_k = &v[k * j_n..(k + 1) * j_n];
                for (out, &vk) in row.iter_mut().zip(v_k) {
                    *out += t_ik * vk;
                }
            }
            for out in row.iter_mut() {
                *out = out.max(floor);
            }
        }
        r
    }

    /// Rescales each basis column to unit sum, pushing the factor into the
    /// matching activation row. The composed variances are unchanged.
    pub fn normalize(&mut self) {
        let (i_n, j_n, k_n) = (self.bins, self.frames, self.basis_count);
        for (t, v) in [
            (&mut self.bases_target, &mut self.activations_target),
            (&mut self.bases_noise, &mut self.activations_noise),
        ] {
            for k in 0..k_n {
                let sum: f64 = (0..i_n).map(|i| t[i * k_n + k]).sum();
                if !(sum > 0.0 && sum.is_finite()) {
                    continue;
                }
                for i in 0..i_n {
                    t[i * k_n + k] /= sum;
                }
                for x in &mut v[k * j_n..(k + 1) * j_n] {
                    *x *= sum;
                }
            }
        }
    }

    fn check_against(&self, weight: &NoiseWeight, powers: &SeparatedPowers) -> Result<(), ModelError> {
        check_len("noise weight", self.bins, weight.len())?;
        check_len("power bins", self.bins, powers.bins)?;
        check_len("power frames", self.frames, powers.frames)
    }
}

/// Unconstrained variances with an inverse-gamma prior `IG(alpha, beta)` on
/// the target variance.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeSourceModel {
    pub variances: Variances,
    alpha: f64,
    beta: f64,
}

impl FreeSourceModel {
    pub fn new(variances: Variances, alpha: f64, beta: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(ModelError::InvalidPrior { alpha, beta });
        }
        variances.validate()?;
        Ok(Self { variances, alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Negative log-density of the prior, dropping constants:
    /// `sum (alpha + 1) log r_s + beta / r_s`.
    pub fn prior_penalty(&self) -> f64 {
        self.variances
            .target
            .iter()
            .map(|&r| (self.alpha + 1.0) * r.ln() + self.beta / r)
            .sum()
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch { what, expected, found })
    }
}

fn check_cost_inputs(
    powers: &SeparatedPowers,
    variances: &Variances,
    weight: &NoiseWeight,
    logdet: &[f64],
) -> Result<(), ModelError> {
    check_len("variance bins", powers.bins, variances.bins)?;
    check_len("variance frames", powers.frames, variances.frames)?;
    check_len("noise weight", powers.bins, weight.len())?;
    check_len("log-determinants", powers.bins, logdet.len())?;
    variances.validate()?;
    if let Some(bin) = logdet.iter().position(|d| !d.is_finite()) {
        return Err(ModelError::NonFiniteLogDet { bin });
    }
    Ok(())
}

/// Negative log-likelihood of the separated signals, up to a constant.
///
/// `logdet[i]` is `log |det W_i|`.
pub fn cost(
    powers: &SeparatedPowers,
    variances: &Variances,
    weight: &NoiseWeight,
    logdet: &[f64],
) -> Result<f64, ModelError> {
    check_cost_inputs(powers, variances, weight, logdet)?;
    let (i_n, j_n) = (powers.bins, powers.frames);
    let rest_dof = (powers.mic_count - 1) as f64;
    let mut total = 0.0;
    for i in 0..i_n {
        let lambda = weight.lambda[i];
        let mut bin_sum = -2.0 * logdet[i] * j_n as f64;
        for j in 0..j_n {
            let idx = i * j_n + j;
            let r_s = variances.target[idx];
            let r_n = variances.noise[idx];
            let mix = r_s + r_n * lambda;
            bin_sum += mix.ln() + powers.p1[idx] / mix;
            if powers.mic_count > 1 {
                bin_sum += rest_dof * r_n.ln() + powers.p_rest[idx] / r_n;
            }
        }
        total += bin_sum;
    }
    Ok(total)
}

/// Cost plus the inverse-gamma penalty; the objective minimised by
/// [`update_free`].
pub fn map_objective(
    powers: &SeparatedPowers,
    model: &FreeSourceModel,
    weight: &NoiseWeight,
    logdet: &[f64],
) -> Result<f64, ModelError> {
    Ok(cost(powers, &model.variances, weight, logdet)? + model.prior_penalty())
}

/// Negative log-likelihood of the two-source jointly diagonalised Gaussian
/// model with a rank-1 target (one nonzero diagonal weight) and a full-rank
/// noise, evaluated per decorrelated channel.
///
/// The diagonal weights are `lambda[m][0]` (target) and `lambda[m][1]`
/// (noise): `(1, lambda_i)` for `m = 1` and `(0, 1)` for the rest. Channels
/// `2..M` share one variance, so their share of `p_rest` is taken as equal.
/// Serves as an independent check on [`cost`].
pub fn rc_fastmnmf_likelihood_oracle(
    powers: &SeparatedPowers,
    variances: &Variances,
    weight: &NoiseWeight,
    logdet: &[f64],
) -> Result<f64, ModelError> {
    check_cost_inputs(powers, variances, weight, logdet)?;
    let (i_n, j_n, m_n) = (powers.bins, powers.frames, powers.mic_count);
    let mut total = 0.0;
    let mut diag = vec![[0.0f64; 2]; m_n];
    for i in 0..i_n {
        diag[0] = [1.0, weight.lambda[i]];
        for d in diag.iter_mut().skip(1) {
            *d = [0.0, 1.0];
        }
        for j in 0..j_n {
            let idx = i * j_n + j;
            let source_var = [variances.target[idx], variances.noise[idx]];
            let mut nll = -2.0 * logdet[i];
            for (m, d) in diag.iter().enumerate() {
                let sigma = d[0] * source_var[0] + d[1] * source_var[1];
                let power = if m == 0 {
                    powers.p1[idx]
                } else {
                    powers.p_rest[idx] / (m_n - 1) as f64
                };
                nll += sigma.ln() + power / sigma;
            }
            total += nll;
        }
    }
    Ok(total)
}

/// The individual MM rules of one NMF sweep, in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmfRule {
    TargetBases,
    TargetActivations,
    NoiseBases,
    NoiseActivations,
    NoiseWeight,
}

impl NmfRule {
    pub const SWEEP: [NmfRule; 5] = [
        NmfRule::TargetBases,
        NmfRule::TargetActivations,
        NmfRule::NoiseBases,
        NmfRule::NoiseActivations,
        NmfRule::NoiseWeight,
    ];
}

/// Per-point weights shared by the MM numerators and denominators.
struct Auxiliary {
    /// `p1 / S^2` with `S = r_s + lambda r_n`
    p1_over_mix_sq: Vec<f64>,
    /// `1 / S`
    inv_mix: Vec<f64>,
    /// `p_rest / r_n^2`
    rest_over_noise_sq: Vec<f64>,
    /// `1 / r_n`
    inv_noise: Vec<f64>,
}

fn auxiliary(powers: &SeparatedPowers, var: &Variances, weight: &NoiseWeight) -> Auxiliary {
    let (i_n, j_n) = (powers.bins, powers.frames);
    let n = i_n * j_n;
    let mut aux = Auxiliary {
        p1_over_mix_sq: vec![0.0; n],
        inv_mix: vec![0.0; n],
        rest_over_noise_sq: vec![0.0; n],
        inv_noise: vec![0.0; n],
    };
    for i in 0..i_n {
        let lambda = weight.lambda[i];
        for j in 0..j_n {
            let idx = i * j_n + j;
            let inv_mix = 1.0 / (var.target[idx] + var.noise[idx] * lambda);
            let inv_noise = 1.0 / var.noise[idx];
            aux.inv_mix[idx] = inv_mix;
            aux.p1_over_mix_sq[idx] = powers.p1[idx] * inv_mix * inv_mix;
            aux.inv_noise[idx] = inv_noise;
            aux.rest_over_noise_sq[idx] = powers.p_rest[idx] * inv_noise * inv_noise;
        }
    }
    aux
}

/// Applies one multiplicative MM rule in place. Variances are recomposed from
/// the current factors first, so consecutive calls are sequential MM steps.
pub fn apply_nmf_rule(
    rule: NmfRule,
    model: &mut NmfSourceModel,
    weight: &mut NoiseWeight,
    powers: &SeparatedPowers,
    floors: &Floors,
) -> Result<(), ModelError> {
    model.check_against(weight, powers)?;
    let (i_n, j_n, k_n) = (model.bins, model.frames, model.basis_count);
    let var = model.variances(floors);
    let aux = auxiliary(powers, &var, weight);
    let rest_dof = (powers.mic_count - 1) as f64;
    let lambda = &weight.lambda;

    // Target rules use (p1/S^2, 1/S); noise rules the lambda-weighted target
    // terms plus the noise-channel terms.
    let num_den = |idx: usize, i: usize, noise: bool| -> (f64, f64) {
        if noise {
            (
                lambda[i] * aux.p1_over_mix_sq[idx] + aux.rest_over_noise_sq[idx],
                lambda[i] * aux.inv_mix[idx] + rest_dof * aux.inv_noise[idx],
            )
        } else {
            (aux.p1_over_mix_sq[idx], aux.inv_mix[idx])
        }
    };

    match rule {
        NmfRule::TargetBases | NmfRule::NoiseBases => {
            let noise = rule == NmfRule::NoiseBases;
            let (t, v) = if noise {
                (&mut model.bases_noise, &model.activations_noise)
            } else {
                (&mut model.bases_target, &model.activations_target)
            };
            let mut num = vec![0.0; k_n];
            let mut den = vec![0.0; k_n];
            for i in 0..i_n {
                num.iter_mut().for_each(|x| *x = 0.0);
                den.iter_mut().for_each(|x| *x = 0.0);
                for j in 0..j_n {
                    let (a, b) = num_den(i * j_n + j, i, noise);
                    for k in 0..k_n {
                        let vkj = v[k * j_n + j];
                        num[k] += a * vkj;
                        den[k] += b * vkj;
                    }
                }
                for k in 0..k_n {
                    let t_ik = &mut t[i * k_n + k];
                    *t_ik = (*t_ik * (num[k] / den[k]).sqrt()).max(floors.nmf);
                }
            }
        }
        NmfRule::TargetActivations | NmfRule::NoiseActivations => {
            let noise = rule == NmfRule::NoiseActivations;
            let (t, v) = if noise {
                (&model.bases_noise, &mut model.activations_noise)
            } else {
                (&model.bases_target, &mut model.activations_target)
            };
            let mut num = vec![0.0; k_n * j_n];
            let mut den = vec![0.0; k_n * j_n];
            for i in 0..i_n {
                for j in 0..j_n {
                    let (a, b) = num_den(i * j_n + j, i, noise);
                    for k in 0..k_n {
                        let t_ik = t[i * k_n + k];
                        num[k * j_n + j] += a * t_ik;
                        den[k * j_n + j] += b * t_ik;
                    }
                }
            }
            for ((x, n), d) in v.iter_mut().zip(&num).zip(&den) {
                *x = (*x * (n / d).sqrt()).max(floors.nmf);
            }
        }
        NmfRule::NoiseWeight => update_noise_weight(weight, &var, &aux, j_n, floors),
    }
    Ok(())
}

fn update_noise_weight(weight: &mut NoiseWeight, var: &Variances, aux: &Auxiliary, frames: usize, floors: &Floors) {
    for (i, lambda) in weight.lambda.iter_mut().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..frames {
            let idx = i * frames + j;
            num += var.noise[idx] * aux.p1_over_mix_sq[idx];
            den += var.noise[idx] * aux.inv_mix[idx];
        }
        *lambda = (*lambda * (num / den).sqrt()).max(floors.variance);
    }
}

/// One full NMF sweep: the five rules in order, then scale normalisation.
pub fn update_nmf(
    model: &mut NmfSourceModel,
    weight: &mut NoiseWeight,
    powers: &SeparatedPowers,
    floors: &Floors,
) -> Result<(), ModelError> {
    for rule in NmfRule::SWEEP {
        apply_nmf_rule(rule, model, weight, powers, floors)?;
    }
    model.normalize();
    Ok(())
}

/// The individual MAP rules of one free-model sweep, in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeRule {
    TargetVariance,
    NoiseVariance,
    NoiseWeight,
}

impl FreeRule {
    pub const SWEEP: [FreeRule; 3] = [FreeRule::TargetVariance, FreeRule::NoiseVariance, FreeRule::NoiseWeight];
}

pub fn apply_free_rule(
    rule: FreeRule,
    model: &mut FreeSourceModel,
    weight: &mut NoiseWeight,
    powers: &SeparatedPowers,
    floors: &Floors,
) -> Result<(), ModelError> {
    let (i_n, j_n) = (powers.bins, powers.frames);
    check_len("variance bins", i_n, model.variances.bins)?;
    check_len("variance frames", j_n, model.variances.frames)?;
    check_len("noise weight", i_n, weight.len())?;
    let aux = auxiliary(powers, &model.variances, weight);
    let rest_dof = (powers.mic_count - 1) as f64;
    let (alpha, beta) = (model.alpha, model.beta);
    let var = &mut model.variances;
    match rule {
        FreeRule::TargetVariance => {
            for (idx, r) in var.target.iter_mut().enumerate() {
                let num = aux.p1_over_mix_sq[idx] + beta / (*r * *r);
                let den = aux.inv_mix[idx] + (alpha + 1.0) / *r;
                *r = (*r * (num / den).sqrt()).max(floors.variance);
            }
        }
        FreeRule::NoiseVariance => {
            for i in 0..i_n {
                let lambda = weight.lambda[i];
                for j in 0..j_n {
                    let idx = i * j_n + j;
                    let num = lambda * aux.p1_over_mix_sq[idx] + aux.rest_over_noise_sq[idx];
                    let den = lambda * aux.inv_mix[idx] + rest_dof * aux.inv_noise[idx];
                    let r = &mut var.noise[idx];
                    *r = (*r * (num / den).sqrt()).max(floors.variance);
                }
            }
        }
        FreeRule::NoiseWeight => update_noise_weight(weight, var, &aux, j_n, floors),
    }
    Ok(())
}

/// One MAP sweep over target variances, noise variances and the noise weight.
pub fn update_free(
    model: &mut FreeSourceModel,
    weight: &mut NoiseWeight,
    powers: &SeparatedPowers,
    floors: &Floors,
) -> Result<(), ModelError> {
    for rule in FreeRule::SWEEP {
        apply_free_rule(rule, model, weight, powers, floors)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{positive, rng};
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const F: Floors = Floors {
        nmf: 1e-12,
        variance: 1e-12,
    };

    fn random_powers(rng: &mut ChaCha8Rng, i_n: usize, j_n: usize, m: usize) -> SeparatedPowers {
        let p1 = positive(rng, i_n * j_n, 0.0, 3.0);
        let p_rest = if m > 1 { positive(rng, i_n * j_n, 0.0, 3.0 * (m - 1) as f64) } else { vec![0.0; i_n * j_n] };
        SeparatedPowers::new(i_n, j_n, m, p1, p_rest).unwrap()
    }

    fn rel_le(after: f64, before: f64) -> bool {
        after <= before + 1e-9 * before.abs()
    }

    #[test]
    fn cost_single_point() {
        let powers = SeparatedPowers::new(1, 1, 2, vec![2.0], vec![1.0]).unwrap();
        let var = Variances::new(1, 1, vec![1.0], vec![1.0]).unwrap();
        let c = cost(&powers, &var, &NoiseWeight::ones(1), &[0.0]).unwrap();
        assert!((c - (2.0f64.ln() + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn cost_matched_powers() {
        let mut rng = rng(1);
        let (i_n, j_n, m) = (3, 4, 4);
        let r_s = positive(&mut rng, 12, 0.1, 2.0);
        let r_n = positive(&mut rng, 12, 0.1, 2.0);
        let lambda = positive(&mut rng, 3, 0.1, 2.0);
        let p1: Vec<f64> = (0..12).map(|idx| r_s[idx] + r_n[idx] * lambda[idx / j_n]).collect();
        let p_rest: Vec<f64> = r_n.iter().map(|r| 3.0 * r).collect();
        let powers = SeparatedPowers::new(i_n, j_n, m, p1.clone(), p_rest).unwrap();
        let var = Variances::new(i_n, j_n, r_s, r_n.clone()).unwrap();
        let got = cost(&powers, &var, &NoiseWeight::new(lambda).unwrap(), &[0.0; 3]).unwrap();
        let expected: f64 = (0..12).map(|idx| p1[idx].ln() + 3.0 * r_n[idx].ln() + 4.0).sum();
        assert!((got - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn cost_log_det_term() {
        let mut rng = rng(2);
        let powers = random_powers(&mut rng, 3, 5, 2);
        let var = Variances::new(3, 5, positive(&mut rng, 15, 0.5, 1.0), positive(&mut rng, 15, 0.5, 1.0)).unwrap();
        let w = NoiseWeight::ones(3);
        let base = cost(&powers, &var, &w, &[0.1, 0.2, 0.3]).unwrap();
        let doubled = cost(&powers, &var, &w, &[0.1, 0.2 + 2.0f64.ln(), 0.3]).unwrap();
        assert!((base - doubled - 2.0 * 5.0 * 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cost_rejects_bad_variances() {
        let powers = SeparatedPowers::new(1, 1, 2, vec![1.0], vec![1.0]).unwrap();
        let var = Variances::new(1, 1, vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            cost(&powers, &var, &NoiseWeight::ones(1), &[0.0]),
            Err(ModelError::NonPositiveVariance { bin: 0, frame: 0 })
        ));
    }

    #[test]
    fn powers_reject_nan() {
        assert_eq!(
            SeparatedPowers::new(1, 1, 2, vec![f64::NAN], vec![1.0]),
            Err(ModelError::InvalidPowers)
        );
    }

    /// Builds a model whose factors reproduce the given powers exactly.
    #[test]
    fn nmf_fixed_point() {
        let mut rng = rng(3);
        let (i_n, j_n, k_n, m) = (4, 6, 2, 3);
        let mut model = NmfSourceModel::random(i_n, j_n, k_n, &mut rng).unwrap();
        model.normalize();
        let mut weight = NoiseWeight::new(positive(&mut rng, i_n, 0.2, 2.0)).unwrap();
        let var = model.variances(&F);
        let p1: Vec<f64> = (0..i_n * j_n)
            .map(|idx| var.target[idx] + var.noise[idx] * weight.as_slice()[idx / j_n])
            .collect();
        let p_rest: Vec<f64> = var.noise.iter().map(|r| r * (m - 1) as f64).collect();
        let powers = SeparatedPowers::new(i_n, j_n, m, p1, p_rest).unwrap();
        let before = (model.clone(), weight.clone());
        update_nmf(&mut model, &mut weight, &powers, &F).unwrap();
        let drift = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max);
        assert!(drift(&model.bases_target, &before.0.bases_target) <= 1e-12);
        assert!(drift(&model.activations_target, &before.0.activations_target) <= 1e-12);
        assert!(drift(&model.bases_noise, &before.0.bases_noise) <= 1e-12);
        assert!(drift(&model.activations_noise, &before.0.activations_noise) <= 1e-12);
        assert!(drift(weight.as_slice(), before.1.as_slice()) <= 1e-12);
    }

    #[test]
    fn nmf_single_basis_square_root_scaling() {
        // r_n pinned at the floor: the target basis sees p1 = 4 r_s.
        let (i_n, j_n) = (1, 1);
        let mut model = NmfSourceModel::from_factors(i_n, j_n, 1, vec![0.5], vec![2.0], vec![1e-12], vec![1e-12]).unwrap();
        let mut weight = NoiseWeight::ones(1);
        let powers = SeparatedPowers::new(i_n, j_n, 2, vec![4.0], vec![0.0]).unwrap();
        apply_nmf_rule(NmfRule::TargetBases, &mut model, &mut weight, &powers, &F).unwrap();
        assert!((model.bases_target[0] / 0.5 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn nmf_per_rule_monotone_random() {
        let mut rng = rng(4);
        let (i_n, j_n, k_n, m) = (8, 10, 3, 4);
        for _ in 0..100 {
            let powers = random_powers(&mut rng, i_n, j_n, m);
            let mut model = NmfSourceModel::random(i_n, j_n, k_n, &mut rng).unwrap();
            let mut weight = NoiseWeight::ones(i_n);
            let logdet = vec![0.0; i_n];
            let mut prev = cost(&powers, &model.variances(&F), &weight, &logdet).unwrap();
            for _ in 0..3 {
                for rule in NmfRule::SWEEP {
                    apply_nmf_rule(rule, &mut model, &mut weight, &powers, &F).unwrap();
                    let now = cost(&powers, &model.variances(&F), &weight, &logdet).unwrap();
                    assert!(rel_le(now, prev), "{rule:?}: {now} > {prev}");
                    prev = now;
                }
                model.normalize();
                let now = cost(&powers, &model.variances(&F), &weight, &logdet).unwrap();
                assert!((now - prev).abs() <= 1e-12 * prev.abs());
            }
        }
    }

    #[test]
    fn free_fixed_point() {
        let mut rng = rng(5);
        let (i_n, j_n, m) = (3, 4, 4);
        let (alpha, beta) = (1.5, 0.3);
        // r_s = beta / (alpha + 1) makes the prior terms cancel in every ratio.
        let r_s = vec![beta / (alpha + 1.0); i_n * j_n];
        let r_n = positive(&mut rng, i_n * j_n, 0.1, 2.0);
        let lambda = positive(&mut rng, i_n, 0.2, 2.0);
        let p1: Vec<f64> = (0..i_n * j_n).map(|idx| r_s[idx] + r_n[idx] * lambda[idx / j_n]).collect();
        let p_rest: Vec<f64> = r_n.iter().map(|r| r * (m - 1) as f64).collect();
        let powers = SeparatedPowers::new(i_n, j_n, m, p1, p_rest).unwrap();
        let mut model = FreeSourceModel::new(Variances::new(i_n, j_n, r_s, r_n).unwrap(), alpha, beta).unwrap();
        let mut weight = NoiseWeight::new(lambda).unwrap();
        let before = (model.clone(), weight.clone());
        update_free(&mut model, &mut weight, &powers, &F).unwrap();
        let drift = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max);
        assert!(drift(&model.variances.target, &before.0.variances.target) <= 1e-12);
        assert!(drift(&model.variances.noise, &before.0.variances.noise) <= 1e-12);
        assert!(drift(weight.as_slice(), before.1.as_slice()) <= 1e-12);
    }

    #[test]
    fn free_rejects_bad_prior() {
        let var = Variances::new(1, 1, vec![1.0], vec![1.0]).unwrap();
        assert!(matches!(FreeSourceModel::new(var.clone(), -1.0, 0.0), Err(ModelError::InvalidPrior { .. })));
        assert!(matches!(FreeSourceModel::new(var, 1.0, 0.0), Err(ModelError::InvalidPrior { .. })));
    }

    /// With no target power the target variance settles where the
    /// derivative of `log(r + c) + (alpha + 1) log r + beta / r` vanishes,
    /// `c = lambda r_n`; that root is found here by bisection.
    #[test]
    fn free_zero_target_power_limit() {
        let (alpha, beta) = (1.1, 1e-3);
        let powers = SeparatedPowers::new(1, 1, 4, vec![0.0], vec![0.6]).unwrap();
        let var = Variances::new(1, 1, vec![1.0], vec![0.5]).unwrap();
        let mut model = FreeSourceModel::new(var, alpha, beta).unwrap();
        let mut weight = NoiseWeight::ones(1);
        let mut prev = model.variances.target[0];
        for _ in 0..1000 {
            update_free(&mut model, &mut weight, &powers, &F).unwrap();
            let r = model.variances.target[0];
            assert!(r <= prev * (1.0 + 1e-12));
            prev = r;
        }
        let c = weight.as_slice()[0] * model.variances.noise[0];
        let grad = |r: f64| 1.0 / (r + c) + (alpha + 1.0) / r - beta / (r * r);
        let (mut lo, mut hi) = (1e-15, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if grad(mid) < 0.0 { lo = mid } else { hi = mid }
        }
        let root = 0.5 * (lo + hi);
        assert!(((prev - root) / root).abs() < 1e-6, "{prev} vs {root}");
        assert!(prev < beta / (alpha + 1.0));
    }

    #[test]
    fn free_map_monotone_random() {
        let mut rng = rng(6);
        let (i_n, j_n, m) = (8, 10, 4);
        let powers = random_powers(&mut rng, i_n, j_n, m);
        let var = Variances::new(i_n, j_n, positive(&mut rng, 80, 0.1, 2.0), positive(&mut rng, 80, 0.1, 2.0)).unwrap();
        let beta = 1e-3 * powers.mean_target();
        let mut model = FreeSourceModel::new(var, 1.1, beta).unwrap();
        let mut weight = NoiseWeight::ones(i_n);
        let logdet = vec![0.0; i_n];
        let mut prev = map_objective(&powers, &model, &weight, &logdet).unwrap();
        for _ in 0..100 {
            for rule in FreeRule::SWEEP {
                apply_free_rule(rule, &mut model, &mut weight, &powers, &F).unwrap();
                let now = map_objective(&powers, &model, &weight, &logdet).unwrap();
                assert!(rel_le(now, prev), "{rule:?}");
                prev = now;
            }
        }
    }

    #[test]
    fn oracle_single_channel_collapse() {
        let powers = SeparatedPowers::new(1, 2, 1, vec![2.0, 0.5], vec![0.0, 0.0]).unwrap();
        let var = Variances::new(1, 2, vec![1.0, 0.25], vec![3.0, 7.0]).unwrap();
        let w = NoiseWeight::new(vec![0.5]).unwrap();
        let got = rc_fastmnmf_likelihood_oracle(&powers, &var, &w, &[0.0]).unwrap();
        let expected = (2.5f64).ln() + 2.0 / 2.5 + (3.75f64).ln() + 0.5 / 3.75;
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn oracle_target_bin_ignores_noise_with_vanishing_weight() {
        let powers = SeparatedPowers::new(1, 1, 3, vec![2.0], vec![1.0]).unwrap();
        let w = NoiseWeight::new(vec![1e-300]).unwrap();
        let a = Variances::new(1, 1, vec![0.7], vec![1.0]).unwrap();
        let b = Variances::new(1, 1, vec![0.7], vec![5.0]).unwrap();
        let noise_part = |r_n: f64| 2.0 * r_n.ln() + 1.0 / r_n;
        let la = rc_fastmnmf_likelihood_oracle(&powers, &a, &w, &[0.0]).unwrap() - noise_part(1.0);
        let lb = rc_fastmnmf_likelihood_oracle(&powers, &b, &w, &[0.0]).unwrap() - noise_part(5.0);
        assert!((la - lb).abs() < 1e-14);
        assert!((la - (0.7f64.ln() + 2.0 / 0.7)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn oracle_matches_cost(seed in 0u64..100_000, m in 1usize..6) {
            let mut rng = rng(seed);
            let (i_n, j_n) = (3, 4);
            let powers = random_powers(&mut rng, i_n, j_n, m);
            let var = Variances::new(i_n, j_n, positive(&mut rng, 12, 1e-3, 5.0), positive(&mut rng, 12, 1e-3, 5.0)).unwrap();
            let w = NoiseWeight::new(positive(&mut rng, i_n, 1e-3, 5.0)).unwrap();
            let logdet = positive(&mut rng, i_n, -3.0, 3.0);
            let a = cost(&powers, &var, &w, &logdet).unwrap();
            let b = rc_fastmnmf_likelihood_oracle(&powers, &var, &w, &logdet).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
        }

        #[test]
        fn update_ratios_are_scale_free(seed in 0u64..100_000, scale in 1e-3f64..1e3) {
            let mut rng = rng(seed);
            let (i_n, j_n, k_n, m) = (4, 5, 2, 3);
            let powers = random_powers(&mut rng, i_n, j_n, m);
            let scaled_powers = SeparatedPowers::new(
                i_n, j_n, m,
                powers.target().iter().map(|x| x * scale).collect(),
                powers.rest().iter().map(|x| x * scale).collect(),
            ).unwrap();
            let model = NmfSourceModel::random(i_n, j_n, k_n, &mut rng).unwrap();
            let mut scaled = model.clone();
            scaled.bases_target.iter_mut().for_each(|t| *t *= scale);
            scaled.bases_noise.iter_mut().for_each(|t| *t *= scale);
            for rule in NmfRule::SWEEP {
                let (mut a, mut wa) = (model.clone(), NoiseWeight::ones(i_n));
                let (mut b, mut wb) = (scaled.clone(), NoiseWeight::ones(i_n));
                apply_nmf_rule(rule, &mut a, &mut wa, &powers, &F).unwrap();
                apply_nmf_rule(rule, &mut b, &mut wb, &scaled_powers, &F).unwrap();
                let pairs = [
                    (&a.bases_target, &model.bases_target, &b.bases_target, &scaled.bases_target),
                    (&a.activations_target, &model.activations_target, &b.activations_target, &scaled.activations_target),
                    (&a.bases_noise, &model.bases_noise, &b.bases_noise, &scaled.bases_noise),
                    (&a.activations_noise, &model.activations_noise, &b.activations_noise, &scaled.activations_noise),
                ];
                for (after, before, after_s, before_s) in pairs {
                    for idx in 0..after.len() {
                        let ra = after[idx] / before[idx];
                        let rb = after_s[idx] / before_s[idx];
                        prop_assert!((ra - rb).abs() <= 1e-12 * ra.abs().max(1.0));
                    }
                }
                for (x, y) in wa.as_slice().iter().zip(wb.as_slice()) {
                    prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                }
            }

            let var = Variances::new(i_n, j_n, positive(&mut rng, 20, 0.1, 2.0), positive(&mut rng, 20, 0.1, 2.0)).unwrap();
            let free = FreeSourceModel::new(var.clone(), 1.1, 0.05).unwrap();
            let free_scaled = FreeSourceModel::new(
                Variances::new(i_n, j_n, var.target.iter().map(|x| x * scale).collect(), var.noise.iter().map(|x| x * scale).collect()).unwrap(),
                1.1, 0.05 * scale,
            ).unwrap();
            for rule in FreeRule::SWEEP {
                let (mut a, mut wa) = (free.clone(), NoiseWeight::ones(i_n));
                let (mut b, mut wb) = (free_scaled.clone(), NoiseWeight::ones(i_n));
                apply_free_rule(rule, &mut a, &mut wa, &powers, &F).unwrap();
                apply_free_rule(rule, &mut b, &mut wb, &scaled_powers, &F).unwrap();
                for idx in 0..20 {
                    let ra = a.variances.target[idx] / free.variances.target[idx];
                    let rb = b.variances.target[idx] / free_scaled.variances.target[idx];
                    prop_assert!((ra - rb).abs() <= 1e-12 * ra.abs().max(1.0));
                    let ra = a.variances.noise[idx] / free.variances.noise[idx];
                    let rb = b.variances.noise[idx] / free_scaled.variances.noise[idx];
                    prop_assert!((ra - rb).abs() <= 1e-12 * ra.abs().max(1.0));
                }
                for (x, y) in wa.as_slice().iter().zip(wb.as_slice()) {
                    prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                }
            }
        }
    }
}
