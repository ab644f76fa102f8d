//! Seeded sample paths of `(σ_t, X_t)` and tail estimators.
//!
//! Replication `r` draws from its own ChaCha8 stream `(seed, r)`, so a
//! batch is bit-identical for a given configuration regardless of how many
//! worker threads produced it. Large runs are summarized on the fly into
//! [`TailSample`]s, which keep each replication's values above a
//! per-replication cutoff together with their time indices.

mod estimators;
mod tail;

pub use estimators::{
    asymptotic_dependence_probe, conditional_exceedance_probe, extremal_index, hill_eta,
    hill_tail_index, joint_exceedance_ratio, marginal_survival, maxima_probabilities, tail_balance,
    ExceedanceRatio, ExtremalIndex, HillEstimate, MaximaProbability, ProbePoint,
    DEFAULT_EXTREMAL_QUANTILE, LOW_POWER_EXCEEDANCES,
};
pub use tail::{Series, TailData, TailSample, DEFAULT_KEEP_FRACTION};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ModelFile, SvModel};
use crate::parallel::map_chunks;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub model: SvModel,
    /// `T`, observations per replication.
    pub path_length: usize,
    /// `L`, number of moving-average terms; coefficients past the stored
    /// list count as zero.
    pub truncation: usize,
    pub replications: usize,
    pub seed: u64,
    /// Worker threads; `0` uses the global pool. Results do not depend on it.
    pub workers: usize,
}

#[derive(Serialize)]
struct HashedConfig<'a> {
    model: &'a ModelFile,
    path_length: usize,
    truncation: usize,
    replications: usize,
    seed: u64,
}

impl SimulationConfig {
    pub fn new(model: SvModel, path_length: usize, replications: usize, seed: u64) -> Result<Self> {
        let truncation = model.coeffs.len();
        let c = Self {
            model,
            path_length,
            truncation,
            replications,
            seed,
            workers: 0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_truncation(mut self, truncation: usize) -> Result<Self> {
        self.truncation = truncation;
        self.validate()?;
        Ok(self)
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_length == 0 || self.replications == 0 {
            return Err(Error::InvalidInput("path length and replications must be at least 1".into()));
        }
        if self.truncation < self.model.coeffs.support_len() {
            return Err(Error::InvalidInput(format!(
                "truncation L = {} is shorter than the coefficient support {}",
                self.truncation,
                self.model.coeffs.support_len()
            )));
        }
        if self.path_length > u32::MAX as usize {
            return Err(Error::InvalidInput("path length exceeds 2^32 - 1".into()));
        }
        Ok(())
    }

    /// Upper bound on the coefficient mass dropped by the truncation.
    pub fn truncation_tail_bound(&self) -> f64 {
        self.model.coeffs.tail_mass_bound()
    }

    /// SHA-256 of the canonical JSON of everything that determines the
    /// output (the worker count does not).
    pub fn hash(&self) -> String {
        let file = ModelFile::from_model(&self.model);
        let canon = serde_json::to_string(&HashedConfig {
            model: &file,
            path_length: self.path_length,
            truncation: self.truncation,
            replications: self.replications,
            seed: self.seed,
        })
        .expect("config serializes");
        format!("{:x}", Sha256::digest(canon.as_bytes()))
    }
}

/// One replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub sigma: Vec<f64>,
    pub x: Vec<f64>,
}

impl Path {
    pub fn series(&self, s: Series) -> Vec<f64> {
        match s {
            Series::Sigma => self.sigma.clone(),
            Series::X => self.x.clone(),
            Series::AbsX => self.x.iter().map(|v| v.abs()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationBatch {
    pub config_hash: String,
    pub seed: u64,
    pub paths: Vec<Path>,
}

/// Non-zero moving-average taps `(i, c α_i)` with `i < L`.
fn taps(config: &SimulationConfig) -> Vec<(usize, f64)> {
    let c = config.model.coeffs.scale();
    config
        .model
        .coeffs
        .values()
        .iter()
        .enumerate()
        .take(config.truncation)
        .filter(|(_, a)| **a != 0.0)
        .map(|(i, a)| (i, c * a))
        .collect()
}

fn simulate_one(config: &SimulationConfig, taps: &[(usize, f64)], rng: &mut rand_chacha::ChaCha8Rng) -> Path {
    let t_len = config.path_length;
    let span = taps.last().map_or(0, |t| t.0);
    let mut eta = vec![0.0; t_len + span];
    config.model.eta.fill(rng, &mut eta);
    // log σ_t = Σ_i c α_i η_{t-i}, with η_{t-i} stored at index t + span - i
    let mut log_sigma = vec![0.0; t_len];
    for &(i, a) in taps {
        let src = &eta[span - i..span - i + t_len];
        for (l, e) in log_sigma.iter_mut().zip(src) {
            *l += a * e;
        }
    }
    let sigma: Vec<f64> = log_sigma.into_iter().map(f64::exp).collect();
    let x = match config.model.eps {
        crate::model::EpsFamily::PositiveConstant => sigma.clone(),
        eps => {
            let mut e = vec![0.0; t_len];
            eps.fill(rng, &mut e);
            sigma.iter().zip(&e).map(|(s, e)| s * e).collect()
        }
    };
    Path { sigma, x }
}

/// Runs every replication and maps it through `f` without keeping the
/// path; results come back in replication order.
pub fn replicate<S, F>(config: &SimulationConfig, f: F) -> Result<Vec<S>>
where
    S: Send,
    F: Fn(usize, &Path) -> S + Sync,
{
    config.validate()?;
    let taps = taps(config);
    map_chunks(config.seed, config.replications, 1, config.workers, |rng, range| {
        let path = simulate_one(config, &taps, rng);
        f(range.start, &path)
    })
}

/// All replications in memory.
pub fn simulate_paths(config: &SimulationConfig) -> Result<SimulationBatch> {
    let paths = replicate(config, |_, p| p.clone())?;
    Ok(SimulationBatch {
        config_hash: config.hash(),
        seed: config.seed,
        paths,
    })
}

/// Tail summaries of one series for every replication, keeping the top
/// `keep_fraction` of each path.
pub fn simulate_tail(config: &SimulationConfig, series: Series, keep_fraction: f64) -> Result<TailData> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("keep fraction {keep_fraction} outside (0, 1]")));
    }
    let samples = replicate(config, |_, p| TailSample::from_path(p, series, keep_fraction))?;
    Ok(TailData { series, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefficientSequence, EpsFamily, EtaFamily};

    fn model(values: Vec<f64>, eps: EpsFamily) -> SvModel {
        SvModel::new(CoefficientSequence::new(values).unwrap(), EtaFamily::Laplace, eps)
    }

    fn acf1(v: &[f64]) -> f64 {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
        let cov: f64 = v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        cov / var
    }

    #[test]
    fn iid_log_volatility_has_no_autocorrelation() {
        let t = 200_000;
        let c = SimulationConfig::new(model(vec![1.0], EpsFamily::StandardNormal), t, 1, 3).unwrap();
        let b = simulate_paths(&c).unwrap();
        let logs: Vec<f64> = b.paths[0].sigma.iter().map(|s| s.ln()).collect();
        assert!(acf1(&logs).abs() < 3.0 / (t as f64).sqrt());
        assert!(b.paths[0].sigma.iter().all(|s| *s > 0.0));
    }

    #[test]
    fn truncated_ar1_autocorrelation() {
        let coeffs = CoefficientSequence::new((0..60).map(|i| 0.6f64.powi(i)).collect()).unwrap();
        let m = SvModel::new(coeffs, EtaFamily::Laplace, EpsFamily::PositiveConstant);
        let c = SimulationConfig::new(m, 300_000, 1, 8).unwrap();
        let b = simulate_paths(&c).unwrap();
        let logs: Vec<f64> = b.paths[0].sigma.iter().map(|s| s.ln()).collect();
        // Σ α_i α_{i+1} / Σ α_i^2 for the 60-term truncation
        let a: Vec<f64> = (0..60).map(|i| 0.6f64.powi(i)).collect();
        let want = a.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / a.iter().map(|x| x * x).sum::<f64>();
        assert!((acf1(&logs) - want).abs() < 0.02);
    }

    #[test]
    fn constant_eps_returns_equal_volatility() {
        let c = SimulationConfig::new(model(vec![1.0, 0.5], EpsFamily::PositiveConstant), 1000, 2, 1).unwrap();
        let b = simulate_paths(&c).unwrap();
        for p in &b.paths {
            assert_eq!(p.sigma, p.x);
        }
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let base = SimulationConfig::new(model(vec![1.0, 0.3], EpsFamily::StandardNormal), 500, 5, 42).unwrap();
        let a = simulate_paths(&base.clone().with_workers(1)).unwrap();
        let b = simulate_paths(&base.clone().with_workers(3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.paths[0], a.paths[1]);
        let other = SimulationConfig { seed: 43, ..base.clone() };
        assert_ne!(simulate_paths(&other).unwrap().paths[0], a.paths[0]);
        assert_ne!(other.hash(), base.hash());
        assert_eq!(base.hash(), base.clone().with_workers(7).hash());
    }

    #[test]
    fn config_validation() {
        let m = model(vec![1.0, 0.0, 0.5], EpsFamily::StandardNormal);
        assert!(SimulationConfig::new(m.clone(), 0, 1, 0).is_err());
        assert!(SimulationConfig::new(m.clone(), 10, 0, 0).is_err());
        let c = SimulationConfig::new(m, 10, 1, 0).unwrap();
        assert!(c.clone().with_truncation(2).is_err());
        assert!(c.with_truncation(10).is_ok());
    }
}
