//! Tail estimators on [`TailData`].
//!
//! Thresholds are always empirical quantiles. Every estimator checks that its
//! thresholds lie above the retained range of the summaries, so a streaming
//! run with a small keep fraction gives the same answer as an exact one or
//! fails with [`Error::InsufficientData`].

use serde::Serialize;

use super::tail::{ceil_level, check_level};
use super::{simulate_tail, Series, SimulationConfig, TailData};
use crate::error::{Error, Result};
use crate::model::EtaFamily;

/// Exceedance counts below this flag a ratio as low-power.
pub const LOW_POWER_EXCEEDANCES: usize = 50;
/// Default marginal quantile defining an exceedance for the extremal index.
pub const DEFAULT_EXTREMAL_QUANTILE: f64 = 0.999;

const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceedanceRatio {
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub numerator: usize,
    pub denominator: usize,
    /// `x_u`, the empirical `u`-quantile of `min(X_t, X_{t+h})`.
    pub threshold: f64,
    pub low_power: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HillEstimate {
    pub value: f64,
    pub stderr: f64,
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalIndex {
    /// Estimate clamped to `[0, 1]`.
    pub theta: f64,
    pub raw: f64,
    pub stderr: f64,
    pub threshold: f64,
    pub block_length: usize,
    pub blocks: usize,
    pub blocks_with_exceedance: usize,
    pub exceedances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximaProbability {
    pub z: f64,
    pub empirical: f64,
    pub stderr: f64,
    /// The Fréchet limit `exp(-1/z)`.
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbePoint {
    pub u: f64,
    pub threshold: f64,
    /// `P̂(X_{t+h} > x | X_t > x)`.
    pub probability: f64,
    pub stderr: f64,
    pub conditioning: usize,
}

/// Wilson score interval for `x` successes out of `n`.
fn wilson(x: usize, n: usize) -> (f64, f64) {
    let (x, n) = (x as f64, n as f64);
    let p = x / n;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `P(X_t > s_0 x, X_{t+h} > s_h x) / P(min(X_t, X_{t+h}) > x)` at the
/// empirical `u`-quantile of the min-series.
///
/// With `s_0, s_h ≥ 1` the numerator is a subset of the denominator and the
/// interval is Wilson's; otherwise it is a Poisson normal approximation.
pub fn joint_exceedance_ratio(data: &TailData, h: usize, s0: f64, sh: f64, u: f64) -> Result<ExceedanceRatio> {
    check_level(u)?;
    if !(s0 > 0.0 && sh > 0.0) {
        return Err(Error::InvalidInput(format!("scalings ({s0}, {sh}) must be positive")));
    }
    let n = data.pair_count(h);
    if n == 0 {
        return Err(Error::InsufficientData(format!("no lag-{h} pairs")));
    }
    let mins = data.pair_min_desc(h);
    let k = n - ceil_level(u, n) + 1;
    let x = data.order_stat(&mins, k, "min-series quantile")?;
    let denominator = mins.partition_point(|m| *m > x);
    if denominator == 0 {
        return Err(Error::InsufficientData("no pair exceeds the min-series quantile".into()));
    }
    let numerator = data.count_joint(h, s0 * x, sh * x)?;
    let ratio = numerator as f64 / denominator as f64;
    let (ci_low, ci_high) = if numerator <= denominator {
        wilson(numerator, denominator)
    } else {
        let half = Z95 * (numerator as f64).sqrt() / denominator as f64;
        ((ratio - half).max(0.0), ratio + half)
    };
    Ok(ExceedanceRatio {
        ratio,
        ci_low,
        ci_high,
        numerator,
        denominator,
        threshold: x,
        low_power: denominator < LOW_POWER_EXCEEDANCES,
    })
}

/// Default number of order statistics, `⌊2√N⌋`.
fn default_k(n: usize) -> usize {
    (2.0 * (n as f64).sqrt()).floor() as usize
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k.saturating_mul(10) >= n {
        return Err(Error::InvalidInput(format!("k = {k} must satisfy 1 ≤ k < N/10 with N = {n}")));
    }
    Ok(())
}

/// Coefficient of tail dependence at lag `h`.
///
/// Margins are rank-transformed to unit Pareto, `T = (M+1)/#{X ≥ x}` over
/// the pooled marginal sample of size `M`, and the Hill estimator is applied
/// to `min(T_t, T_{t+h})` with `k` upper order statistics.
pub fn hill_eta(data: &TailData, h: usize, k: Option<usize>) -> Result<HillEstimate> {
    let n = data.pair_count(h);
    let k = k.unwrap_or_else(|| default_k(n));
    check_k(k, n)?;
    let mins = data.pair_min_desc(h);
    let floor = data.order_stat(&mins, k + 1, "min-series order statistic")?;
    let marginal = data.marginal_desc();
    // #{X ≥ m}, the rank denominator; the transform is monotone, so ordering
    // the min-series by value orders it by T as well
    let count_ge = |m: f64| marginal.partition_point(|v| *v >= m) as f64;
    let c_floor = count_ge(floor);
    let value = mins[..k].iter().map(|m| (c_floor / count_ge(*m)).ln()).sum::<f64>() / k as f64;
    Ok(HillEstimate { value, stderr: value / (k as f64).sqrt(), k, n })
}

/// Marginal tail index `1/γ̂`, with `γ̂` the Hill estimator on the top `k`
/// values. Needs positive order statistics.
pub fn hill_tail_index(data: &TailData, k: Option<usize>) -> Result<HillEstimate> {
    let n = data.total_len();
    let k = k.unwrap_or_else(|| default_k(n));
    check_k(k, n)?;
    let desc = data.marginal_desc();
    let floor = data.order_stat(&desc, k + 1, "marginal order statistic")?;
    if floor <= 0.0 {
        return Err(Error::InsufficientData("Hill floor is not positive".into()));
    }
    let gamma = desc[..k].iter().map(|v| (v / floor).ln()).sum::<f64>() / k as f64;
    let value = 1.0 / gamma;
    Ok(HillEstimate { value, stderr: value / (k as f64).sqrt(), k, n })
}

/// Blocks estimator of the extremal index.
///
/// Each replication is cut into `⌊T/b⌋` full blocks of length `b` and the
/// threshold is the pooled marginal `u`-quantile. With `B` blocks in all,
/// `N_b` of them containing an exceedance and `N_e` exceedances inside
/// blocks,
///
/// `θ̂ = log(1 - N_b/B) / (b log(1 - N_e/(B b)))`.
///
/// The reported `theta` is clamped to `[0, 1]`; `raw` keeps the unclamped
/// value.
pub fn extremal_index(data: &TailData, block_length: usize, u: f64) -> Result<ExtremalIndex> {
    check_level(u)?;
    if block_length == 0 {
        return Err(Error::InvalidInput("block length must be at least 1".into()));
    }
    let threshold = data.marginal_quantile(u)?;
    let (mut blocks, mut hit, mut exceed) = (0usize, 0usize, 0usize);
    for s in &data.samples {
        let nb = s.len / block_length;
        let end = nb * block_length;
        blocks += nb;
        let mut last_block = usize::MAX;
        for &(t, v) in &s.exceedances {
            let t = t as usize;
            if t >= end || v <= threshold {
                continue;
            }
            exceed += 1;
            let blk = t / block_length;
            if blk != last_block {
                hit += 1;
                last_block = blk;
            }
        }
    }
    if blocks == 0 {
        return Err(Error::InvalidInput(format!("paths shorter than one block of {block_length}")));
    }
    if exceed == 0 {
        return Err(Error::InsufficientData("no exceedances inside full blocks".into()));
    }
    if hit == blocks {
        return Err(Error::InsufficientData("every block has an exceedance; raise u or shorten blocks".into()));
    }
    let b = block_length as f64;
    let total = blocks as f64 * b;
    let raw = (1.0 - hit as f64 / blocks as f64).ln() / (b * (1.0 - exceed as f64 / total).ln());
    let theta = raw.clamp(0.0, 1.0);
    Ok(ExtremalIndex {
        theta,
        raw,
        stderr: theta / (hit as f64).sqrt(),
        threshold,
        block_length,
        blocks,
        blocks_with_exceedance: hit,
        exceedances: exceed,
    })
}

/// Fraction of replications whose maximum is at most `a_n z`, for each `z`.
pub fn maxima_probabilities(data: &TailData, a_n: f64, zs: &[f64]) -> Result<Vec<MaximaProbability>> {
    if !(a_n > 0.0 && a_n.is_finite()) {
        return Err(Error::InvalidInput(format!("normalizing constant {a_n} must be positive")));
    }
    let r = data.samples.len();
    if r == 0 {
        return Err(Error::InsufficientData("no replications".into()));
    }
    zs.iter()
        .map(|&z| {
            if !(z > 0.0) {
                return Err(Error::InvalidInput(format!("z = {z} must be positive")));
            }
            let below = data.samples.iter().filter(|s| s.max <= a_n * z).count();
            let p = below as f64 / r as f64;
            Ok(MaximaProbability {
                z,
                empirical: p,
                stderr: (p * (1.0 - p) / r as f64).sqrt(),
                limit: (-1.0 / z).exp(),
            })
        })
        .collect()
}

/// Empirical `P(X > x)`.
pub fn marginal_survival(data: &TailData, x: f64) -> Result<f64> {
    Ok(data.count_above(x)? as f64 / data.total_len() as f64)
}

/// `P̂(X > x) / P̂(|X| > x)` at the `u`-quantile of `|X|`. Both summaries
/// must come from the same replications.
pub fn tail_balance(x: &TailData, abs: &TailData, u: f64) -> Result<f64> {
    if x.total_len() != abs.total_len() {
        return Err(Error::InvalidInput("summaries come from different samples".into()));
    }
    let thr = abs.marginal_quantile(u)?;
    let den = abs.count_above(thr)?;
    if den == 0 {
        return Err(Error::InsufficientData("no exceedances of |X|".into()));
    }
    Ok(x.count_above(thr)? as f64 / den as f64)
}

/// `P̂(X_{t+h} > x | X_t > x)` at the marginal `u`-quantiles.
pub fn conditional_exceedance_probe(data: &TailData, h: usize, us: &[f64]) -> Result<Vec<ProbePoint>> {
    us.iter()
        .map(|&u| {
            let x = data.marginal_quantile(u)?;
            let cond = data.count_above_leading(h, x)?;
            if cond == 0 {
                return Err(Error::InsufficientData(format!("no exceedances at u = {u}")));
            }
            let p = data.count_joint(h, x, x)? as f64 / cond as f64;
            Ok(ProbePoint {
                u,
                threshold: x,
                probability: p,
                stderr: (p * (1.0 - p) / cond as f64).sqrt(),
                conditioning: cond,
            })
        })
        .collect()
}

/// Simulates `σ` under a model in the asymptotically dependent regime and
/// probes `P̂(σ_h > x | σ_0 > x)` across `us`.
///
/// The model must have custom-tail innovations with `β < -1` and some `i`
/// with `α_i = α_{i+h} = 1`. Use [`conditional_exceedance_probe`] for other
/// models.
pub fn asymptotic_dependence_probe(
    config: &SimulationConfig,
    h: usize,
    us: &[f64],
    keep_fraction: f64,
) -> Result<Vec<ProbePoint>> {
    match &config.model.eta {
        EtaFamily::CustomTail(t) if t.beta() < -1.0 => {}
        _ => {
            return Err(Error::Unsupported(
                "asymptotic dependence needs custom-tail innovations with β < -1".into(),
            ))
        }
    }
    let a = &config.model.coeffs;
    if h == 0 || !(0..a.len()).any(|i| a.get(i) == 1.0 && a.get(i + h) == 1.0) {
        return Err(Error::Unsupported(format!("no index i with α_i = α_(i+{h}) = 1")));
    }
    let data = simulate_tail(config, Series::Sigma, keep_fraction)?;
    conditional_exceedance_probe(&data, h, us)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefficientSequence, EpsFamily, SvModel};
    use crate::parallel::stream_rng;
    use crate::simulate::TailSample;
    use rand::Rng;

    fn pareto(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| 1.0 / (1.0 - rng.random::<f64>())).collect()
    }

    #[test]
    fn ratio_at_unit_scaling_is_one() {
        let d = TailData::from_series(Series::X, &[pareto(20_000, 1), pareto(20_000, 2)]);
        let r = joint_exceedance_ratio(&d, 1, 1.0, 1.0, 0.99).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.numerator, r.denominator);
        assert!(r.ci_low < 1.0 && r.ci_high == 1.0);
    }

    #[test]
    fn independent_pareto_eta_is_half() {
        let d = TailData::from_series(Series::X, &[pareto(1_000_000, 5)]);
        let e = hill_eta(&d, 1, Some(2000)).unwrap();
        assert!((e.value - 0.5).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn perfectly_dependent_eta_is_one() {
        let y = pareto(200_000, 9);
        let mut v = y.clone();
        v.extend_from_slice(&y);
        let d = TailData::from_series(Series::X, &[v]);
        let e = hill_eta(&d, y.len(), Some(2000)).unwrap();
        assert!((e.value - 1.0).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn hill_k_range_is_enforced() {
        let d = TailData::from_series(Series::X, &[pareto(1000, 1)]);
        assert!(hill_eta(&d, 1, Some(100)).is_err());
        assert!(hill_eta(&d, 1, Some(0)).is_err());
        assert!(hill_eta(&d, 1, Some(50)).is_ok());
    }

    #[test]
    fn pareto_tail_index_is_one() {
        let d = TailData::from_series(Series::X, &[pareto(1_000_000, 3)]);
        let e = hill_tail_index(&d, Some(2000)).unwrap();
        assert!((e.value - 1.0).abs() < 0.1, "{e:?}");
    }

    #[test]
    fn iid_extremal_index_is_one() {
        let d = TailData::from_series(Series::X, &[pareto(1_000_000, 4)]);
        let e = extremal_index(&d, 100, DEFAULT_EXTREMAL_QUANTILE).unwrap();
        assert!((e.theta - 1.0).abs() < 0.1, "{e:?}");
        // doubling each value makes every exceedance a pair: θ = 1/2
        let doubled: Vec<f64> = pareto(500_000, 4).into_iter().flat_map(|v| [v, v]).collect();
        let d = TailData::from_series(Series::X, &[doubled]);
        let e = extremal_index(&d, 100, DEFAULT_EXTREMAL_QUANTILE).unwrap();
        assert!((e.theta - 0.5).abs() < 0.1, "{e:?}");
    }

    #[test]
    fn streaming_matches_exact() {
        let v = pareto(100_000, 6);
        let exact = TailData::from_series(Series::X, std::slice::from_ref(&v));
        let lean = TailData { series: Series::X, samples: vec![TailSample::from_values(&v, 0.05)] };
        let a = hill_eta(&exact, 2, Some(150)).unwrap();
        let b = hill_eta(&lean, 2, Some(150)).unwrap();
        assert_eq!(a, b);
        let a = joint_exceedance_ratio(&exact, 1, 2.0, 1.5, 0.999).unwrap();
        let b = joint_exceedance_ratio(&lean, 1, 2.0, 1.5, 0.999).unwrap();
        assert_eq!(a, b);
        assert!(joint_exceedance_ratio(&lean, 1, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn maxima_of_pareto_blocks() {
        // max of n unit-Pareto values over n tends to Fréchet(1)
        let n = 1000;
        let paths: Vec<Vec<f64>> = (0..400).map(|r| pareto(n, 100 + r)).collect();
        let d = TailData { series: Series::X, samples: paths.iter().map(|p| TailSample::from_values(p, 0.01)).collect() };
        for m in maxima_probabilities(&d, n as f64, &[0.5, 1.0, 2.0]).unwrap() {
            assert!((m.empirical - m.limit).abs() < 4.0 * m.stderr + 0.01, "{m:?}");
        }
    }

    #[test]
    fn symmetric_tail_balance() {
        let mut rng = stream_rng(2, 0);
        let v: Vec<f64> = pareto(400_000, 2)
            .into_iter()
            .map(|x| if rng.random::<bool>() { x } else { -x })
            .collect();
        let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        let x = TailData::from_series(Series::X, &[v]);
        let a = TailData::from_series(Series::AbsX, &[abs]);
        assert!((tail_balance(&x, &a, 0.999).unwrap() - 0.5).abs() < 0.1);
    }

    #[test]
    fn dependence_probe_checks_its_model() {
        let coeffs = CoefficientSequence::new(vec![1.0, 1.0]).unwrap();
        let laplace = SvModel::new(coeffs.clone(), EtaFamily::Laplace, EpsFamily::PositiveConstant);
        let c = SimulationConfig::new(laplace, 100, 1, 0).unwrap();
        assert!(asymptotic_dependence_probe(&c, 1, &[0.9], 1.0).is_err());
        let light = SvModel::new(coeffs.clone(), EtaFamily::custom_tail(1.0, -0.5, None).unwrap(), EpsFamily::PositiveConstant);
        let c = SimulationConfig::new(light, 100, 1, 0).unwrap();
        assert!(asymptotic_dependence_probe(&c, 1, &[0.9], 1.0).is_err());
        let heavy = SvModel::new(coeffs, EtaFamily::custom_tail(1.0, -2.0, None).unwrap(), EpsFamily::PositiveConstant);
        let c = SimulationConfig::new(heavy, 1000, 1, 0).unwrap();
        assert!(asymptotic_dependence_probe(&c, 2, &[0.9], 1.0).is_err());
        let p = asymptotic_dependence_probe(&c, 1, &[0.9], 1.0).unwrap();
        assert!(p[0].probability > 0.0);
    }
}
