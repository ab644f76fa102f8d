//! Theory-versus-computation checks.
//!
//! Each `check_*` function runs one battery item and returns a
//! [`CheckResult`] with a verdict and plot-ready rows. The exact checks
//! compare closed forms with the solvers; the Monte Carlo checks compare
//! estimators on simulated paths with the limits predicted by the theory.
//! [`VerifyOptions::scale`] shrinks the Monte Carlo sample sizes for quick
//! runs; the tolerances stay the same, so small scales can fail.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cone::{tau, tau_numeric_oracle, SquareMatrix};
use crate::error::Result;
use crate::limit::rectangle_measure;
use crate::lp::{
    construct_from_eta, eta_profile, reduce_infinite, solve_lp, sv_lag_lp, FiniteSequence, TailLp, MAX_REDUCTION_LEN,
};
use crate::model::{normalizing_constant, tail_constants, CoefficientSequence, EpsFamily, EtaFamily, SvModel};
use crate::parallel::stream_rng;
use crate::simulate::{
    conditional_exceedance_probe, extremal_index, hill_eta, joint_exceedance_ratio, maxima_probabilities,
    simulate_tail, Series, SimulationConfig, DEFAULT_EXTREMAL_QUANTILE,
};

/// Relative tie tolerance of the brute-force LP oracle.
const ORACLE_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub workers: usize,
    /// Fraction of the full Monte Carlo replication counts, in `(0, 1]`.
    pub scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 20_240_601, workers: 0, scale: 1.0 }
    }
}

impl VerifyOptions {
    fn replications(&self, full: usize) -> usize {
        ((full as f64 * self.scale).round() as usize).max(1)
    }
}

/// One compared quantity. `pass` records whether `estimate` lies in
/// `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub label: String,
    pub estimate: f64,
    pub target: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

impl CheckRow {
    fn band(label: impl Into<String>, estimate: f64, target: f64, lower: f64, upper: f64) -> Self {
        Self {
            label: label.into(),
            estimate,
            target,
            lower,
            upper,
            pass: estimate >= lower && estimate <= upper,
        }
    }

    fn within(label: impl Into<String>, estimate: f64, target: f64, tol: f64) -> Self {
        Self::band(label, estimate, target, target - tol, target + tol)
    }

    /// Records a boolean verdict as `1`/`0` against target `1`.
    fn flag(label: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self { label: label.into(), estimate: v, target: 1.0, lower: 1.0, upper: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub rows: Vec<CheckRow>,
}

impl CheckResult {
    fn from_rows(id: u32, name: &str, rows: Vec<CheckRow>, summary: String) -> Self {
        let passed = !rows.is_empty() && rows.iter().all(|r| r.pass);
        Self { id, name: name.into(), passed, summary, rows }
    }

    /// Widest miss among failing rows, for summaries.
    fn worst(rows: &[CheckRow]) -> f64 {
        rows.iter()
            .map(|r| (r.estimate - r.target).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Every check in order.
pub fn run_battery(opts: &VerifyOptions) -> Result<VerifyReport> {
    let checks = vec![
        check_two_factor_exactness(opts.seed)?,
        check_ar1_profile()?,
        check_construction_round_trip(opts.seed)?,
        check_lp_oracle(opts.seed)?,
        check_tau_identity(opts.seed)?,
        check_truncation_stability(opts.seed)?,
        check_eta_consistency(opts)?,
        check_joint_exceedance(opts)?,
        check_extremal_index(opts)?,
        check_marginal_tail(opts)?,
        check_dependence_dichotomy(opts)?,
    ];
    Ok(VerifyReport { options: *opts, checks })
}

fn unit_or_zero(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..5) {
        0 => 0.0,
        1 => 1.0,
        2 => 0.5,
        _ => rng.random::<f64>(),
    }
}

/// Strictly decreasing `1 = α_0 > α_1 > .. > α_{n-1} > 0`.
fn decreasing_sequence(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v = vec![1.0];
    for _ in 1..n {
        let last = *v.last().unwrap();
        v.push(last * rng.random_range(0.05..0.95));
    }
    v
}

/// Strictly decreasing coefficients: the lag-`h` optimum is `κ_0 = 1 - α_h`,
/// `κ_h = 1`, objective `2 - α_h`.
pub fn check_two_factor_exactness(seed: u64) -> Result<CheckResult> {
    let mut rng = stream_rng(seed, 1);
    let mut rows = Vec::new();
    for case in 0..50 {
        let n = rng.random_range(2..12);
        let alpha = decreasing_sequence(&mut rng, n);
        let coeffs = CoefficientSequence::new(alpha.clone())?;
        for h in 1..=5 {
            let sol = solve_lp(&sv_lag_lp(&coeffs, h)?);
            let ah = coeffs.get(h);
            let mut want = vec![0.0; sol.kappa.len()];
            want[0] = 1.0 - ah;
            want[h] = 1.0;
            let err = sol
                .kappa
                .iter()
                .zip(&want)
                .map(|(k, w)| (k - w).abs())
                .fold((sol.objective - (2.0 - ah)).abs(), f64::max);
            rows.push(CheckRow::band(format!("case {case} h={h}"), err, 0.0, 0.0, 1e-12));
        }
    }
    let worst = CheckResult::worst(&rows);
    Ok(CheckResult::from_rows(
        1,
        "two-factor optimum of strictly decreasing coefficients",
        rows,
        format!("250 programs, max deviation {worst:.2e}"),
    ))
}

/// `η_h = 1/(2 - α^h)` for AR(1) coefficients.
pub fn check_ar1_profile() -> Result<CheckResult> {
    let mut rows = Vec::new();
    for alpha in [0.3, 0.5, 0.9] {
        let coeffs = CoefficientSequence::ar1(alpha, 1e-6)?;
        let lags: Vec<usize> = (1..=6).collect();
        let profile = eta_profile(&coeffs, &lags)?;
        for h in lags {
            let want = 1.0 / (2.0 - alpha.powi(h as i32));
            rows.push(CheckRow::within(format!("alpha={alpha} h={h}"), profile.eta(h).unwrap_or(f64::NAN), want, 1e-12));
        }
    }
    let worst = CheckResult::worst(&rows);
    Ok(CheckResult::from_rows(2, "AR(1) tail dependence profile", rows, format!("max deviation {worst:.2e}")))
}

/// Constructed coefficients reproduce the target profile.
pub fn check_construction_round_trip(seed: u64) -> Result<CheckResult> {
    let mut rng = stream_rng(seed, 3);
    let mut rows = Vec::new();
    for case in 0..200 {
        let m = rng.random_range(1..=6);
        let target: Vec<f64> = (0..m)
            .map(|_| match rng.random_range(0..4) {
                0 => 0.5,
                1 => 1.0,
                _ => rng.random_range(0.5..=1.0),
            })
            .collect();
        let coeffs = construct_from_eta(&target)?;
        let lags: Vec<usize> = (1..=m).collect();
        let got = eta_profile(&coeffs, &lags)?.etas();
        let err = got.iter().zip(&target).map(|(g, t)| (g - t).abs()).fold(0.0, f64::max);
        rows.push(CheckRow::band(format!("case {case} m={m}"), err, 0.0, 0.0, 1e-12));
    }
    let worst = CheckResult::worst(&rows);
    Ok(CheckResult::from_rows(3, "profile construction round trip", rows, format!("200 targets, max deviation {worst:.2e}")))
}

/// Optimal value and uniqueness of `min Σκ` s.t. `aᵀκ ≥ 1`, `bᵀκ ≥ 1`,
/// `κ ≥ 0`, by enumerating every basis of the standard form with two
/// surplus columns.
pub fn lp_brute_force(a: &[f64], b: &[f64]) -> Option<(f64, bool)> {
    let n = a.len();
    // columns of [A | -I]
    let col = |j: usize| -> (f64, f64) {
        if j < n {
            (a[j], b[j])
        } else if j == n {
            (-1.0, 0.0)
        } else {
            (0.0, -1.0)
        }
    };
    let mut points: Vec<(f64, Vec<f64>)> = Vec::new();
    for p in 0..n + 2 {
        for q in p + 1..n + 2 {
            let (c0, c1) = (col(p), col(q));
            let det = c0.0 * c1.1 - c1.0 * c0.1;
            if det.abs() < 1e-13 {
                continue;
            }
            // Cramer's rule for B x_B = (1, 1)
            let xp = (c1.1 - c1.0) / det;
            let xq = (c0.0 - c0.1) / det;
            if xp < -1e-12 || xq < -1e-12 {
                continue;
            }
            let mut kappa = vec![0.0; n];
            if p < n {
                kappa[p] = xp.max(0.0);
            }
            if q < n {
                kappa[q] = xq.max(0.0);
            }
            points.push((kappa.iter().sum(), kappa));
        }
    }
    let best = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let mut optimal: Vec<&Vec<f64>> = Vec::new();
    for (obj, k) in &points {
        if *obj <= best * (1.0 + ORACLE_TIE_TOL)
            && !optimal.iter().any(|o| o.iter().zip(k).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0)))
        {
            optimal.push(k);
        }
    }
    Some((best, optimal.len() == 1))
}

/// Enumeration solver against the brute-force basis oracle.
pub fn check_lp_oracle(seed: u64) -> Result<CheckResult> {
    let mut rng = stream_rng(seed, 4);
    let mut rows = Vec::new();
    let mut cases = 0;
    while cases < 1000 {
        let n = rng.random_range(1..=12);
        let a: Vec<f64> = (0..n).map(|_| unit_or_zero(&mut rng)).collect();
        let b: Vec<f64> = (0..n).map(|_| unit_or_zero(&mut rng)).collect();
        let Ok(lp) = TailLp::new(a.clone(), b.clone()) else { continue };
        cases += 1;
        let sol = solve_lp(&lp);
        let (obj, unique) = lp_brute_force(&a, &b).expect("a valid program is feasible");
        let rel = (sol.objective - obj).abs() / obj;
        let mut row = CheckRow::band(format!("case {cases} n={n}"), rel, 0.0, 0.0, 1e-9);
        row.pass &= sol.unique == unique;
        rows.push(row);
    }
    let mismatched = rows.iter().filter(|r| !r.pass).count();
    Ok(CheckResult::from_rows(
        4,
        "LP solver against basis enumeration",
        rows,
        format!("1000 programs, {mismatched} disagreements"),
    ))
}

/// A random matrix whose inverse is non-negative with a dominant diagonal,
/// so that `0 < τ < ∞` and `A^{-1}` maps `E^d` onto a cone that is not
/// too thin for a grid search.
fn cone_preserving(rng: &mut ChaCha8Rng, d: usize) -> Result<SquareMatrix> {
    let rows: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { rng.random_range(0.5..3.0) } else { rng.random_range(0.0..0.4) })
                .collect()
        })
        .collect();
    let inv = SquareMatrix::from_rows(rows)?
        .inverse()
        .ok_or_else(|| crate::Error::Numerical("singular draw".into()))?;
    Ok(inv)
}

/// Closed-form `τ` against the grid oracle, plus exact diagonal cases.
pub fn check_tau_identity(seed: u64) -> Result<CheckResult> {
    let mut rng = stream_rng(seed, 5);
    let mut rows = Vec::new();
    let mut done = 0;
    while done < 100 {
        let d = 2 + done % 2;
        let Ok(a) = cone_preserving(&mut rng, d) else { continue };
        let closed = tau(&a);
        if !(closed > 0.0 && closed.is_finite()) {
            continue;
        }
        let oracle = tau_numeric_oracle(&a, 400)?;
        rows.push(CheckRow::band(format!("matrix {done} d={d}"), (oracle - closed).abs() / closed, 0.0, 0.0, 1e-3));
        done += 1;
    }
    for diag in [vec![2.0, 3.0], vec![1.0, 1.0], vec![0.5, 4.0, 2.5], vec![7.0, 0.1]] {
        let a = SquareMatrix::diagonal(&diag)?;
        let want = diag.iter().cloned().fold(0.0, f64::max);
        rows.push(CheckRow::within(format!("diag {diag:?}"), tau(&a), want, 0.0));
    }
    let worst = rows[..100].iter().map(|r| r.estimate).fold(0.0, f64::max);
    Ok(CheckResult::from_rows(5, "tau closed form against grid search", rows, format!("max relative gap {worst:.2e}")))
}

/// Appending columns whose entries both lie below the negligibility
/// threshold `1/(2/sup a + 2/sup b)` changes neither the optimum nor its
/// shape, and the reduction drops them again.
pub fn check_truncation_stability(seed: u64) -> Result<CheckResult> {
    let mut rng = stream_rng(seed, 6);
    let mut rows = Vec::new();
    let mut case = 0;
    while case < 500 {
        let n = rng.random_range(1..9);
        let a: Vec<f64> = (0..n).map(|_| unit_or_zero(&mut rng)).collect();
        let b: Vec<f64> = (0..n).map(|_| unit_or_zero(&mut rng)).collect();
        let Ok(lp) = TailLp::new(a.clone(), b.clone()) else { continue };
        case += 1;
        let t = lp.negligibility_threshold();
        let extra = rng.random_range(1..12);
        let mut draw = || if rng.random_bool(0.2) { 0.0 } else { t * rng.random::<f64>() };
        let (mut ea, mut eb) = (a, b);
        for _ in 0..extra {
            ea.push(draw());
            eb.push(draw());
        }
        let ext = TailLp::new(ea.clone(), eb.clone())?;
        let (s, e) = (solve_lp(&lp), solve_lp(&ext));
        let same_kappa = s.kappa.iter().zip(&e.kappa).all(|(x, y)| x == y)
            && e.kappa[n..].iter().all(|v| *v == 0.0);
        let reduced = reduce_infinite(&FiniteSequence(&ea), &FiniteSequence(&eb), MAX_REDUCTION_LEN)?;
        let ok = same_kappa
            && s.objective == e.objective
            && s.case_tag == e.case_tag
            && reduced.len <= n
            && solve_lp(&reduced.lp).objective == s.objective;
        rows.push(CheckRow::flag(format!("case {case} n={n} +{extra}"), ok));
    }
    let bad = rows.iter().filter(|r| !r.pass).count();
    Ok(CheckResult::from_rows(6, "stability under negligible columns", rows, format!("500 extensions, {bad} changed")))
}

fn laplace_sigma_model(values: Vec<f64>) -> Result<SvModel> {
    Ok(SvModel::new(CoefficientSequence::new(values)?, EtaFamily::Laplace, EpsFamily::PositiveConstant))
}

/// Hill estimates of `η_h` on simulated volatility against the LP values.
pub fn check_eta_consistency(opts: &VerifyOptions) -> Result<CheckResult> {
    let t_len = 1_000_000;
    let zoo: Vec<(&str, Vec<f64>, Vec<usize>)> = vec![
        ("independence", vec![1.0], vec![1]),
        ("ar1(0.6)", CoefficientSequence::ar1(0.6, 1e-6)?.values().to_vec(), vec![1, 2]),
        ("decreasing(1,0.8,0.3)", vec![1.0, 0.8, 0.3], vec![1, 2]),
        ("constructed(0.8,0.5)", construct_from_eta(&[0.8, 0.5])?.values().to_vec(), vec![1, 2]),
        ("one-factor(1,0,1)", vec![1.0, 0.0, 1.0], vec![2]),
    ];
    let mut rows = Vec::new();
    for (idx, (name, values, lags)) in zoo.into_iter().enumerate() {
        let model = laplace_sigma_model(values)?;
        let profile = eta_profile(&model.coeffs, &lags)?;
        let config = SimulationConfig::new(model, t_len, opts.replications(1), opts.seed.wrapping_add(700 + idx as u64))?
            .with_workers(opts.workers);
        let data = simulate_tail(&config, Series::Sigma, 0.1)?;
        for h in lags {
            let est = hill_eta(&data, h, None)?;
            let want = profile.eta(h).unwrap_or(f64::NAN);
            rows.push(CheckRow::within(format!("{name} h={h}"), est.value, want, 0.1));
        }
    }
    let worst = CheckResult::worst(&rows);
    Ok(CheckResult::from_rows(7, "Hill eta against LP eta", rows, format!("max |eta_hat - eta| = {worst:.3}")))
}

/// Empirical joint-exceedance ratios against the rectangle limit measure.
pub fn check_joint_exceedance(opts: &VerifyOptions) -> Result<CheckResult> {
    let model = laplace_sigma_model(vec![1.0, 0.5])?;
    let lp = sv_lag_lp(&model.coeffs, 1)?;
    let sol = solve_lp(&lp);
    let config = SimulationConfig::new(model, 1_000_000, opts.replications(100), opts.seed.wrapping_add(800))?
        .with_workers(opts.workers);
    let data = simulate_tail(&config, Series::Sigma, 0.05)?;
    let mut rows = Vec::new();
    for s0 in [1.0, 2.0, 4.0] {
        for sh in [1.0, 2.0, 4.0] {
            let est = joint_exceedance_ratio(&data, 1, s0, sh, 0.999)?;
            let want = rectangle_measure(&sol, &lp, s0, sh)?;
            rows.push(CheckRow::within(format!("s0={s0} sh={sh}"), est.ratio, want, 0.08));
        }
    }
    let worst = CheckResult::worst(&rows);
    Ok(CheckResult::from_rows(
        8,
        "joint exceedances against the limit measure",
        rows,
        format!("{} pairs, max gap {worst:.3}", data.pair_count(1)),
    ))
}

/// Extremal index and normalized maxima of an AR(1) volatility.
pub fn check_extremal_index(opts: &VerifyOptions) -> Result<CheckResult> {
    let n = 100_000;
    let model = SvModel::new(CoefficientSequence::ar1(0.7, 1e-6)?, EtaFamily::Laplace, EpsFamily::PositiveConstant);
    let a_n = normalizing_constant(&model, n as f64)?;
    let config = SimulationConfig::new(model, n, opts.replications(2000), opts.seed.wrapping_add(900))?
        .with_workers(opts.workers);
    let data = simulate_tail(&config, Series::Sigma, 0.01)?;
    let theta = extremal_index(&data, 100, DEFAULT_EXTREMAL_QUANTILE)?;
    let mut rows = vec![CheckRow::band("theta", theta.theta, 1.0, 0.85, 1.0)];
    for m in maxima_probabilities(&data, a_n, &[0.5, 1.0, 2.0])? {
        rows.push(CheckRow::within(format!("P(max <= a_n z) z={}", m.z), m.empirical, m.limit, 0.03));
    }
    Ok(CheckResult::from_rows(
        9,
        "extremal index and Frechet maxima",
        rows,
        format!("theta_hat = {:.3} (raw {:.3}), a_n = {a_n:.4e}", theta.theta, theta.raw),
    ))
}

/// Log-log slope of the empirical survival over one decade of tail
/// probabilities, and its ratio to the asymptote at the `1e-4` level.
pub fn check_marginal_tail(opts: &VerifyOptions) -> Result<CheckResult> {
    let model = laplace_sigma_model(vec![1.0, 0.5])?;
    let consts = tail_constants(&model)?;
    let config = SimulationConfig::new(model, 1_000_000, opts.replications(100), opts.seed.wrapping_add(1000))?
        .with_workers(opts.workers);
    let data = simulate_tail(&config, Series::Sigma, 0.01)?;
    let m = data.total_len() as f64;
    let desc = data.marginal_desc();
    let mut pts = Vec::new();
    for j in 0..=20 {
        let p = 10f64.powf(-3.0 - j as f64 / 20.0);
        let x = data.marginal_quantile(1.0 - p)?;
        let surv = desc.partition_point(|v| *v > x) as f64 / m;
        pts.push((x.ln(), surv.ln()));
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let x4 = data.marginal_quantile(1.0 - 1e-4)?;
    let surv4 = desc.partition_point(|v| *v > x4) as f64 / m;
    let ratio = surv4 / consts.survival_asymptote(x4, 1.0);
    let rows = vec![
        CheckRow::within("log-log slope", slope, -1.0, 0.05),
        CheckRow::band("survival / asymptote at 1e-4", ratio, 1.0, 0.7, 1.4),
    ];
    Ok(CheckResult::from_rows(
        10,
        "marginal tail asymptote",
        rows,
        format!("slope {slope:.4}, ratio {ratio:.3} (K = {:.4}, beta = {})", consts.k_hat, consts.beta_hat),
    ))
}

/// Conditional exceedance probabilities across a threshold grid for a
/// `β = -2` custom-tail model and a Laplace control, both with `η_1 = 1`.
pub fn check_dependence_dichotomy(opts: &VerifyOptions) -> Result<CheckResult> {
    let grid = [0.99, 0.999, 0.9999];
    let coeffs = CoefficientSequence::new(vec![1.0, 1.0])?;
    let heavy = SvModel::new(coeffs.clone(), EtaFamily::custom_tail(1.0, -2.0, None)?, EpsFamily::PositiveConstant);
    let control = SvModel::new(coeffs, EtaFamily::Laplace, EpsFamily::PositiveConstant);
    let probe = |model: SvModel, offset: u64| -> Result<Vec<f64>> {
        let config = SimulationConfig::new(model, 1_000_000, opts.replications(100), opts.seed.wrapping_add(offset))?
            .with_workers(opts.workers);
        let data = simulate_tail(&config, Series::Sigma, 0.02)?;
        Ok(conditional_exceedance_probe(&data, 1, &grid)?
            .into_iter()
            .map(|p| p.probability)
            .collect())
    };
    let h = probe(heavy, 1100)?;
    let l = probe(control, 1200)?;
    let mut rows = Vec::new();
    for (u, p) in grid.iter().zip(&h) {
        rows.push(CheckRow::band(format!("custom tail u={u}"), *p, f64::NAN, 0.0, 1.0));
    }
    for (u, p) in grid.iter().zip(&l) {
        rows.push(CheckRow::band(format!("laplace u={u}"), *p, f64::NAN, 0.0, 1.0));
    }
    rows.push(CheckRow::flag("custom tail non-decreasing", h.windows(2).all(|w| w[1] >= w[0])));
    rows.push(CheckRow::band("custom tail final level", h[2], 0.05, 0.05, 1.0));
    rows.push(CheckRow::flag("laplace strictly decreasing", l.windows(2).all(|w| w[1] < w[0])));
    Ok(CheckResult::from_rows(
        11,
        "asymptotic dependence dichotomy",
        rows,
        format!("custom tail {h:.4?}, laplace {l:.4?}"),
    ))
}
