use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    build_covariances, init_demixing, separate, update_demixing, wiener_extract, DemixingSystem, WeightedCovariances,
};
use crate::error::{Error, Result, Warning};
use crate::model::{
    self, update_free, update_nmf, Floors, FreeSourceModel, NmfSourceModel, NoiseWeight, SeparatedPowers, Variances,
};
use crate::spectrogram::Spectrogram;

/// Settings for [`run_noisy_ilrma`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmConfig {
    /// NMF bases per source (target and noise each).
    pub basis_count: usize,
    pub outer_iterations: usize,
    /// Source-model sweeps per demixing update.
    pub schedule_ratio: usize,
    /// Source-model sweeps fitted to the initial separation before the
    /// first demixing update, so that it is not driven by random variances.
    pub warmup_sweeps: usize,
    /// Number of NMF iterations after which the demixing filters are frozen
    /// and the free MAP model takes over. `None` never switches.
    pub switch_iteration: Option<usize>,
    /// Inverse-gamma shape. Larger values pull the free target variances
    /// harder towards `beta / (alpha + 1)`, i.e. towards suppression.
    pub alpha: f64,
    /// Inverse-gamma scale as a multiple of the mean target-channel power at
    /// the switch.
    pub beta_scale: f64,
    pub floors: Floors,
    pub seed: u64,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            basis_count: 3,
            outer_iterations: 50,
            schedule_ratio: 10,
            warmup_sweeps: 10,
            switch_iteration: Some(4),
            alpha: 0.2,
            beta_scale: 1e-3,
            floors: Floors::default(),
            seed: 0,
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.basis_count == 0 {
            return Err(Error::Usage("basis count must be at least one"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Usage("alpha must be positive"));
        }
        if !(self.beta_scale > 0.0 && self.beta_scale.is_finite()) {
            return Err(Error::Usage("beta scale must be positive"));
        }
        if !(self.floors.nmf > 0.0 && self.floors.variance > 0.0) {
            return Err(Error::Usage("floors must be positive"));
        }
        Ok(())
    }
}

/// Which source model is being optimised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// NMF variances, demixing filters updated.
    Nmf,
    /// Free variances with the inverse-gamma prior, filters frozen.
    Free,
}

/// State summary after an iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub iteration: usize,
    pub regime: Regime,
    /// Negative log-likelihood.
    pub cost: f64,
    /// The quantity being minimised: `cost` under NMF, `cost` plus the prior
    /// penalty under the free model.
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub regime: Regime,
    pub cost: f64,
    pub objective: f64,
    /// Seconds since the run started, as reported by the caller's clock.
    pub wall_time_s: f64,
}

impl TraceEntry {
    pub fn new(progress: Progress, wall_time_s: f64) -> Self {
        Self {
            iteration: progress.iteration,
            regime: progress.regime,
            cost: progress.cost,
            objective: progress.objective,
            wall_time_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    /// Multichannel target image estimate.
    pub extracted: Spectrogram,
    pub trace: Vec<TraceEntry>,
    pub warnings: Vec<Warning>,
}

/// Monotone time source in seconds.
pub trait Clock {
    fn seconds(&mut self) -> f64;
}

impl<F: FnMut() -> f64> Clock for F {
    fn seconds(&mut self) -> f64 {
        self()
    }
}

#[derive(Debug, Clone)]
enum SourceModel {
    Nmf(NmfSourceModel),
    Free(FreeSourceModel),
}

/// Iteration state of the extractor. [`run_noisy_ilrma`] drives it to
/// completion; stepping by hand allows per-iteration inspection.
#[derive(Debug, Clone)]
pub struct NoisyIlrma<'a> {
    observation: &'a Spectrogram,
    config: AlgorithmConfig,
    system: DemixingSystem,
    sources: SourceModel,
    weight: NoiseWeight,
    powers: SeparatedPowers,
    logdet: Vec<f64>,
    iteration: usize,
    last_covariances: Option<WeightedCovariances>,
    warnings: Vec<Warning>,
}

impl<'a> NoisyIlrma<'a> {
    pub fn new(observation: &'a Spectrogram, config: AlgorithmConfig) -> Result<Self> {
        config.validate()?;
        if observation.channels() < 2 {
            return Err(Error::Usage("extraction needs at least two channels"));
        }
        if !observation.is_finite() {
            return Err(Error::Usage("observation contains non-finite values"));
        }
        let init = init_demixing(observation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let nmf = NmfSourceModel::random(observation.freq_bins(), observation.frames(), config.basis_count, &mut rng)?;
        let system = init.system;
        let separation = separate(observation, &system)?;
        let logdet = system.log_abs_dets()?;
        let mut solver = Self {
            observation,
            config,
            system,
            sources: SourceModel::Nmf(nmf),
            weight: NoiseWeight::ones(observation.freq_bins()),
            powers: separation.powers,
            logdet,
            iteration: 0,
            last_covariances: None,
            warnings: init.warnings,
        };
        solver.sweep_sources(config.warmup_sweeps)?;
        Ok(solver)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn regime(&self) -> Regime {
        match self.sources {
            SourceModel::Nmf(_) => Regime::Nmf,
            SourceModel::Free(_) => Regime::Free,
        }
    }

    pub fn system(&self) -> &DemixingSystem {
        &self.system
    }

    pub fn powers(&self) -> &SeparatedPowers {
        &self.powers
    }

    pub fn noise_weight(&self) -> &NoiseWeight {
        &self.weight
    }

    pub fn log_abs_dets(&self) -> &[f64] {
        &self.logdet
    }

    /// Covariances that fed the most recent demixing update.
    pub fn last_covariances(&self) -> Option<&WeightedCovariances> {
        self.last_covariances.as_ref()
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn variances(&self) -> Variances {
        match &self.sources {
            SourceModel::Nmf(m) => m.variances(&self.config.floors),
            SourceModel::Free(m) => m.variances.clone(),
        }
    }

    pub fn progress(&self) -> Result<Progress> {
        let (cost, objective) = match &self.sources {
            SourceModel::Nmf(m) => {
                let c = model::cost(&self.powers, &m.variances(&self.config.floors), &self.weight, &self.logdet)?;
                (c, c)
            }
            SourceModel::Free(m) => {
                let c = model::cost(&self.powers, &m.variances, &self.weight, &self.logdet)?;
                (c, c + m.prior_penalty())
            }
        };
        Ok(Progress {
            iteration: self.iteration,
            regime: self.regime(),
            cost,
            objective,
        })
    }

    /// One outer iteration: a demixing update followed by `schedule_ratio`
    /// NMF sweeps, or after the switch point `schedule_ratio` MAP sweeps with
    /// the filters frozen.
    pub fn step(&mut self) -> Result<Progress> {
        self.iteration += 1;
        let switched = self.config.switch_iteration.is_some_and(|s| self.iteration > s);
        if switched {
            if let SourceModel::Nmf(nmf) = &self.sources {
                let variances = nmf.variances(&self.config.floors);
                let beta = (self.config.beta_scale * self.powers.mean_target()).max(self.config.floors.variance);
                self.sources = SourceModel::Free(FreeSourceModel::new(variances, self.config.alpha, beta)?);
            }
        } else {
            self.update_filters()?;
        }

        self.sweep_sources(self.config.schedule_ratio)?;
        self.progress()
    }

    fn sweep_sources(&mut self, sweeps: usize) -> Result<()> {
        let floors = self.config.floors;
        for _ in 0..sweeps {
            match &mut self.sources {
                SourceModel::Nmf(m) => update_nmf(m, &mut self.weight, &self.powers, &floors)?,
                SourceModel::Free(m) => update_free(m, &mut self.weight, &self.powers, &floors)?,
            }
        }
        Ok(())
    }

    fn update_filters(&mut self) -> Result<()> {
        let variances = self.variances();
        let cov = build_covariances(self.observation, &variances, &self.weight)?;
        let update = update_demixing(&cov, &self.system)?;
        if update.fallback_bins.len() == self.system.bins() {
            return Err(Error::AllBinsSingular);
        }
        self.warnings.extend(update.warnings());
        self.system = update.system;
        self.logdet = self.system.log_abs_dets()?;
        self.powers = separate(self.observation, &self.system)?.powers;
        self.last_covariances = Some(cov);
        Ok(())
    }

    /// Wiener-filtered target image under the current parameters.
    pub fn extract(&self) -> Result<Spectrogram> {
        Ok(wiener_extract(self.observation, &self.system, &self.variances(), &self.weight)?.extracted)
    }

    fn finish(mut self, trace: Vec<TraceEntry>) -> Result<ExtractionResult> {
        let out = wiener_extract(self.observation, &self.system, &self.variances(), &self.weight)?;
        self.warnings.extend(out.warnings);
        Ok(ExtractionResult {
            extracted: out.extracted,
            trace,
            warnings: self.warnings,
        })
    }
}

/// Full extraction: whitening initialisation, random NMF factors,
/// `outer_iterations` outer iterations, then the Wiener output.
///
/// The trace holds one entry for the initial state and one per iteration.
pub fn run_noisy_ilrma<C: Clock + ?Sized>(
    observation: &Spectrogram,
    config: &AlgorithmConfig,
    clock: &mut C,
) -> Result<ExtractionResult> {
    let start = clock.seconds();
    let mut solver = NoisyIlrma::new(observation, *config)?;
    let mut trace = Vec::with_capacity(config.outer_iterations + 1);
    trace.push(TraceEntry::new(solver.progress()?, clock.seconds() - start));
    for _ in 0..config.outer_iterations {
        let progress = solver.step()?;
        trace.push(TraceEntry::new(progress, clock.seconds() - start));
    }
    solver.finish(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_spectrogram, rng};

    fn no_clock() -> impl FnMut() -> f64 {
        let mut t = 0.0;
        move || {
            t += 1.0;
            t
        }
    }

    #[test]
    fn zero_iterations_is_wiener_at_initialisation() {
        let mut rng = rng(40);
        let obs = random_spectrogram(&mut rng, 3, 5, 12);
        let config = AlgorithmConfig {
            outer_iterations: 0,
            warmup_sweeps: 0,
            seed: 9,
            ..Default::default()
        };
        let result = run_noisy_ilrma(&obs, &config, &mut no_clock()).unwrap();
        assert_eq!(result.trace.len(), 1);

        let init = init_demixing(&obs).unwrap();
        let nmf = NmfSourceModel::random(5, 12, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let expected = wiener_extract(&obs, &init.system, &nmf.variances(&Floors::default()), &NoiseWeight::ones(5)).unwrap();
        assert_eq!(result.extracted, expected.extracted);
    }

    #[test]
    fn warmup_fits_sources_to_initial_separation() {
        let mut rng = rng(42);
        let obs = random_spectrogram(&mut rng, 3, 6, 10);
        let config = AlgorithmConfig {
            outer_iterations: 0,
            warmup_sweeps: 4,
            seed: 3,
            ..Default::default()
        };
        let result = run_noisy_ilrma(&obs, &config, &mut no_clock()).unwrap();

        let init = init_demixing(&obs).unwrap();
        let powers = separate(&obs, &init.system).unwrap().powers;
        let mut nmf = NmfSourceModel::random(6, 10, 3, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut weight = NoiseWeight::ones(6);
        for _ in 0..4 {
            update_nmf(&mut nmf, &mut weight, &powers, &Floors::default()).unwrap();
        }
        let expected = wiener_extract(&obs, &init.system, &nmf.variances(&Floors::default()), &weight).unwrap();
        assert_eq!(result.extracted, expected.extracted);
    }

    #[test]
    fn rejects_single_channel() {
        let mut rng = rng(41);
        let obs = random_spectrogram(&mut rng, 1, 3, 4);
        assert!(matches!(
            run_noisy_ilrma(&obs, &AlgorithmConfig::default(), &mut no_clock()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn trace_descends_and_switches() {
        let mut rng = rng(42);
        let obs = random_spectrogram(&mut rng, 3, 6, 20);
        let config = AlgorithmConfig {
            outer_iterations: 8,
            switch_iteration: Some(3),
            ..Default::default()
        };
        let result = run_noisy_ilrma(&obs, &config, &mut no_clock()).unwrap();
        assert_eq!(result.trace.len(), 9);
        for pair in result.trace.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            assert!(b.wall_time_s > a.wall_time_s);
            if a.regime == b.regime {
                assert!(b.objective <= a.objective + 1e-9 * a.objective.abs(), "{a:?} -> {b:?}");
            }
        }
        assert_eq!(result.trace[3].regime, Regime::Nmf);
        assert_eq!(result.trace[4].regime, Regime::Free);
    }

    #[test]
    fn filters_frozen_after_switch() {
        let mut rng = rng(43);
        let obs = random_spectrogram(&mut rng, 2, 4, 10);
        let config = AlgorithmConfig {
            switch_iteration: Some(1),
            ..Default::default()
        };
        let mut solver = NoisyIlrma::new(&obs, config).unwrap();
        solver.step().unwrap();
        let frozen = solver.system().clone();
        let before = solver.variances();
        solver.step().unwrap();
        assert_eq!(solver.regime(), Regime::Free);
        assert_eq!(solver.system(), &frozen);
        assert_ne!(solver.variances(), before);
    }

    #[test]
    fn switch_seeds_free_model_from_nmf() {
        let mut rng = rng(44);
        let obs = random_spectrogram(&mut rng, 2, 4, 10);
        let config = AlgorithmConfig {
            switch_iteration: Some(1),
            schedule_ratio: 0,
            ..Default::default()
        };
        let mut solver = NoisyIlrma::new(&obs, config).unwrap();
        solver.step().unwrap();
        let nmf_vars = solver.variances();
        solver.step().unwrap();
        assert_eq!(solver.regime(), Regime::Free);
        assert_eq!(solver.variances(), nmf_vars);
    }
}
