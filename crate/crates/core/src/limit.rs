//! Limit measures attached to solved tail programs.
//!
//! With a unique two-factor optimum `{i, j}` the joint tail is
//! `P(Y_0 > s_0 x, Y_1 > s_1 x) / P(min(Y_0, Y_1) > x) → s_0^p s_1^q` with
//! `p = (b_i - b_j)/det`, `q = (a_j - a_i)/det`, `det = a_i b_j - a_j b_i`,
//! and `p + q = -Σκ`. With a unique one-factor optimum at a balanced column
//! the limit is a ratio of expectations of minima. All measures are
//! normalized to 1 at `s = (1, 1)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cone::McConfig;
use crate::error::{Error, Result};
use crate::lp::{sv_lag_lp, CaseTag, LpSolution, TailLp};
use crate::model::{CoefficientSequence, EpsFamily, EtaFamily};
use crate::parallel::{map_chunks, mc_mean, Estimate, CHUNK_LEN};

/// Largest argument at which log-MGF slopes are evaluated for the
/// truncation bias bound.
pub const BIAS_MGF_POINT: f64 = 0.5;

/// Limit measure of `(Y_0, Y_1)` on `(0,∞)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeLimitMeasure {
    /// `ν((s_0,∞)×(s_1,∞)) = s_0^p s_1^q`.
    Rectangle { p: f64, q: f64 },
    /// Ratio of min-expectations around the single heavy column `index`
    /// with coefficient `alpha` in both rows.
    OneFactor { index: usize, alpha: f64 },
}

impl ConeLimitMeasure {
    pub fn from_solution(sol: &LpSolution, lp: &TailLp) -> Result<Self> {
        match sol.case_tag {
            CaseTag::TwoFactor { .. } => {
                let (p, q) = rectangle_exponents(sol, lp)?;
                Ok(Self::Rectangle { p, q })
            }
            CaseTag::OneFactor { i } if sol.is_balanced_one_factor(lp) => Ok(Self::OneFactor {
                index: i,
                alpha: lp.a()[i],
            }),
            CaseTag::OneFactor { .. } => Err(Error::Unsupported(
                "one-factor optimum with unequal coefficients: the limit sits on the boundary".into(),
            )),
            CaseTag::NonUnique => Err(Error::Unsupported(
                "the program has several optimal solutions".into(),
            )),
        }
    }
}

/// `(p, q)` with `ν((s_0,∞)×(s_1,∞)) = s_0^p s_1^q`.
pub fn rectangle_exponents(sol: &LpSolution, lp: &TailLp) -> Result<(f64, f64)> {
    let CaseTag::TwoFactor { i, j } = sol.case_tag else {
        return Err(Error::Unsupported(format!(
            "rectangle law needs a unique two-factor optimum, got {:?}",
            sol.case_tag
        )));
    };
    let (a, b) = (lp.a(), lp.b());
    let det = a[i] * b[j] - a[j] * b[i];
    Ok(((b[i] - b[j]) / det, (a[j] - a[i]) / det))
}

/// `s_0^{(b_i-b_j)/det} s_1^{(a_j-a_i)/det}` for a two-factor optimum.
pub fn rectangle_measure(sol: &LpSolution, lp: &TailLp, s0: f64, s1: f64) -> Result<f64> {
    check_corner(s0, s1)?;
    let (p, q) = rectangle_exponents(sol, lp)?;
    Ok(s0.powf(p) * s1.powf(q))
}

fn check_corner(s0: f64, s1: f64) -> Result<()> {
    if !(s0 > 0.0 && s1 > 0.0 && s0.is_finite() && s1.is_finite()) {
        return Err(Error::InvalidInput(format!("corner ({s0}, {s1}) must be positive")));
    }
    Ok(())
}

/// Law of the i.i.d. factors `X_m` of the power products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualFactors {
    /// Unit Pareto: `E X^e = 1/(1-e)`.
    Pareto,
    /// `X = e^η`: `E X^e = E e^{eη}`.
    Exponential(EtaFamily),
}

impl ResidualFactors {
    fn moment(&self, e: f64) -> Result<f64> {
        match self {
            ResidualFactors::Pareto => Ok(1.0 / (1.0 - e)),
            ResidualFactors::Exponential(eta) => eta.mgf(e),
        }
    }

    fn has_closed_moment(&self) -> bool {
        match self {
            ResidualFactors::Pareto => true,
            ResidualFactors::Exponential(eta) => eta.has_closed_mgf(),
        }
    }

    /// `log X`.
    fn sample_log(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ResidualFactors::Pareto => -(1.0 - rng.random::<f64>()).ln(),
            ResidualFactors::Exponential(eta) => eta.sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantD {
    /// `|det| / ((a_i - a_j)(b_j - b_i))`.
    pub prefactor: f64,
    /// `(m, e_m)` for every residual column with a non-zero exponent.
    pub exponents: Vec<(usize, f64)>,
    /// `E Π X_m^{e_m}`.
    pub moment: Estimate,
    pub value: Estimate,
}

fn d_setup(sol: &LpSolution, lp: &TailLp) -> Result<(f64, Vec<(usize, f64)>)> {
    let CaseTag::TwoFactor { i, j } = sol.case_tag else {
        return Err(Error::Unsupported(format!(
            "the constant D needs a unique two-factor optimum, got {:?}",
            sol.case_tag
        )));
    };
    let (a, b) = (lp.a(), lp.b());
    let det = a[i] * b[j] - a[j] * b[i];
    let denom = (a[i] - a[j]) * (b[j] - b[i]);
    if !(denom > 0.0) {
        return Err(Error::Numerical(format!(
            "degenerate support pair ({i}, {j}): (a_i - a_j)(b_j - b_i) = {denom}"
        )));
    }
    let mut exponents = Vec::new();
    for m in (0..lp.len()).filter(|&m| m != i && m != j) {
        let e = (a[m] * (b[j] - b[i]) + b[m] * (a[i] - a[j])) / det;
        if e >= 1.0 {
            return Err(Error::MomentDiverges(format!("residual exponent e_{m} = {e} ≥ 1")));
        }
        if e != 0.0 {
            exponents.push((m, e));
        }
    }
    Ok((det.abs() / denom, exponents))
}

fn finish(prefactor: f64, exponents: Vec<(usize, f64)>, moment: Estimate) -> ConstantD {
    ConstantD {
        prefactor,
        exponents,
        moment,
        value: Estimate {
            value: prefactor * moment.value,
            stderr: prefactor * moment.stderr,
            samples: moment.samples,
        },
    }
}

/// The constant `D` of the two-factor limit. The residual moment is a
/// closed-form product when the factor law has a closed moment function and
/// a Monte Carlo estimate otherwise.
pub fn constant_d(sol: &LpSolution, lp: &TailLp, factors: ResidualFactors, mc: McConfig) -> Result<ConstantD> {
    if !factors.has_closed_moment() {
        return constant_d_monte_carlo(sol, lp, factors, mc);
    }
    let (prefactor, exponents) = d_setup(sol, lp)?;
    let moment = exponents
        .iter()
        .try_fold(1.0, |acc, &(_, e)| factors.moment(e).map(|m| acc * m))?;
    Ok(finish(prefactor, exponents, Estimate::exact(moment)))
}

/// [`constant_d`] with the residual moment always estimated by simulation.
pub fn constant_d_monte_carlo(
    sol: &LpSolution,
    lp: &TailLp,
    factors: ResidualFactors,
    mc: McConfig,
) -> Result<ConstantD> {
    let (prefactor, exponents) = d_setup(sol, lp)?;
    let moment = if exponents.is_empty() {
        Estimate::exact(1.0)
    } else {
        mc_mean(mc.seed, mc.samples, mc.workers, |rng| {
            exponents
                .iter()
                .map(|&(_, e)| e * factors.sample_log(rng))
                .sum::<f64>()
                .exp()
        })?
    };
    Ok(finish(prefactor, exponents, moment))
}

/// Ratio of min-expectations in the balanced one-factor case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneFactorRatio {
    pub value: Estimate,
    /// Relative bias bound from truncating an infinite coefficient sequence
    /// at its stored length; zero for finitely supported sequences.
    pub truncation_bias_bound: f64,
}

/// Inputs of [`one_factor_ratio`] that describe the model.
#[derive(Debug, Clone, Copy)]
pub struct OneFactorModel<'a> {
    pub coeffs: &'a CoefficientSequence,
    pub eta: EtaFamily,
    /// `Some` for the return vector `(X_0, X_h)`, `None` for `(σ_0, σ_h)`.
    pub eps: Option<EpsFamily>,
}

/// Relative effect of dropping factors with total coefficient mass `tail`
/// from a product raised to `power`: by convexity of `log E e^{sη}`,
/// `E e^{sη} ≤ exp(s · c)` on `[0, s*]` with `c = log E e^{s*η} / s*`.
pub fn truncation_bias_bound(eta: &EtaFamily, power: f64, tail: f64) -> Result<f64> {
    if tail == 0.0 {
        return Ok(0.0);
    }
    let up = eta.mgf(BIAS_MGF_POINT)?.ln();
    let down = eta.mgf(-BIAS_MGF_POINT).map(f64::ln).unwrap_or(f64::INFINITY);
    let slope = up.max(down) / BIAS_MGF_POINT;
    Ok((slope * power * tail).exp_m1())
}

/// `E min(s_0^{-1} P_0, s_h^{-1} P_1)^{1/α_i}` over its value at `(1, 1)`,
/// with `P_0 = Π_{j ≥ h, j ≠ i} e^{η_j α_{j-h}}` and
/// `P_1 = Π_{j ≠ i} e^{η_j α_j}` (times `ε_0^+`, `ε_h^+` for returns).
///
/// Numerator and denominator share the same draws, so the homogeneity
/// `ratio(t s_0, t s_h) = t^{-1/α_i} ratio(s_0, s_h)` holds exactly.
pub fn one_factor_ratio(
    model: OneFactorModel<'_>,
    h: usize,
    i: usize,
    s0: f64,
    sh: f64,
    mc: McConfig,
) -> Result<OneFactorRatio> {
    check_corner(s0, sh)?;
    let coeffs = model.coeffs;
    let alpha_i = coeffs.get(i);
    let lag = coeffs.get_signed(i as i64 - h as i64);
    if h == 0 || i < h || alpha_i != lag || alpha_i == 0.0 {
        return Err(Error::InvalidInput(format!(
            "column {i} at lag {h} is not a balanced one-factor support (α_i = {alpha_i}, α_(i-h) = {lag})"
        )));
    }
    if mc.samples < 2 {
        return Err(Error::InvalidInput("need at least 2 Monte Carlo samples".into()));
    }
    let lp = sv_lag_lp(coeffs, h)?;
    let (a, b) = (lp.a().to_vec(), lp.b().to_vec());
    let power = 1.0 / alpha_i;
    let (ls0, lsh) = (s0.ln(), sh.ln());
    let eta = model.eta;
    let eps = model.eps;
    let buf_len = a.len();
    let parts = map_chunks(mc.seed, mc.samples, CHUNK_LEN, mc.workers, |rng, range| {
        let mut etas = vec![0.0; buf_len];
        let mut acc = [0.0f64; 5];
        for _ in range {
            eta.fill(rng, &mut etas);
            let (mut l0, mut l1) = (0.0, 0.0);
            for (m, &e) in etas.iter().enumerate() {
                if m != i {
                    l0 += a[m] * e;
                    l1 += b[m] * e;
                }
            }
            if let Some(f) = eps {
                let (e0, e1) = (f.sample(rng), f.sample(rng));
                if e0 <= 0.0 || e1 <= 0.0 {
                    continue;
                }
                l0 += e0.ln();
                l1 += e1.ln();
            }
            let num = (power * (l0 - ls0).min(l1 - lsh)).exp();
            let den = (power * l0.min(l1)).exp();
            acc[0] += num;
            acc[1] += den;
            acc[2] += num * num;
            acc[3] += den * den;
            acc[4] += num * den;
        }
        acc
    })?;
    let tot = parts.iter().fold([0.0; 5], |mut t, p| {
        for k in 0..5 {
            t[k] += p[k];
        }
        t
    });
    let n = mc.samples as f64;
    let (mn, md) = (tot[0] / n, tot[1] / n);
    if !(md > 0.0) {
        return Err(Error::Numerical("normalizing expectation vanished".into()));
    }
    let vn = tot[2] / n - mn * mn;
    let vd = tot[3] / n - md * md;
    let cov = tot[4] / n - mn * md;
    let r = mn / md;
    let var = ((vn - 2.0 * r * cov + r * r * vd) / (md * md)).max(0.0) / n;
    let tail = coeffs.tail_mass_bound();
    Ok(OneFactorRatio {
        value: Estimate { value: r, stderr: var.sqrt(), samples: mc.samples },
        truncation_bias_bound: truncation_bias_bound(&eta, power, tail)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_lag, solve_lp};

    fn seq(v: &[f64]) -> CoefficientSequence {
        CoefficientSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rectangle_exponents_from_duals() {
        for alpha_h in [0.1, 0.5, 0.8] {
            let c = seq(&[1.0, alpha_h, alpha_h / 2.0]);
            let lp = sv_lag_lp(&c, 1).unwrap();
            let sol = solve_lp(&lp);
            let (p, q) = rectangle_exponents(&sol, &lp).unwrap();
            assert!((p - (alpha_h - 1.0)).abs() < 1e-15);
            assert!((q + 1.0).abs() < 1e-15);
        }
        let c = seq(&[1.0, 0.5]);
        let lp = sv_lag_lp(&c, 1).unwrap();
        let sol = solve_lp(&lp);
        assert!((rectangle_measure(&sol, &lp, 4.0, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(rectangle_measure(&sol, &lp, 1.0, 1.0).unwrap(), 1.0);
        assert!(rectangle_measure(&sol, &lp, 0.0, 1.0).is_err());
    }

    #[test]
    fn homogeneity_of_rectangle_law() {
        let lp = TailLp::new(vec![1.0, 0.5], vec![0.5, 1.0]).unwrap();
        let sol = solve_lp(&lp);
        let base = rectangle_measure(&sol, &lp, 1.3, 0.7).unwrap();
        for t in [0.2, 3.0, 10.0] {
            let v = rectangle_measure(&sol, &lp, 1.3 * t, 0.7 * t).unwrap();
            assert!((v - t.powf(-sol.objective) * base).abs() < 1e-14 * base.max(v));
        }
    }

    #[test]
    fn rectangle_rejects_other_cases() {
        let lp = TailLp::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let sol = solve_lp(&lp);
        assert!(matches!(rectangle_measure(&sol, &lp, 1.0, 1.0), Err(Error::Unsupported(_))));
        assert!(ConeLimitMeasure::from_solution(&sol, &lp).is_err());
        let lp = TailLp::new(vec![1.0], vec![1.0]).unwrap();
        let sol = solve_lp(&lp);
        assert_eq!(
            ConeLimitMeasure::from_solution(&sol, &lp).unwrap(),
            ConeLimitMeasure::OneFactor { index: 0, alpha: 1.0 }
        );
    }

    #[test]
    fn two_factor_constant_without_residuals() {
        let lp = TailLp::new(vec![1.0, 0.5], vec![0.5, 1.0]).unwrap();
        let sol = solve_lp(&lp);
        let mc = McConfig { samples: 10, seed: 0, workers: 1 };
        let d = constant_d(&sol, &lp, ResidualFactors::Pareto, mc).unwrap();
        assert!((d.value.value - 3.0).abs() < 1e-15);
        assert_eq!(d.value.stderr, 0.0);
        assert!(d.exponents.is_empty());
    }

    #[test]
    fn pareto_constant_matches_exact_joint_tail() {
        // log-factors are Exp(1); P(Y_0 > x, Y_1 > x) in closed form at
        // t = log x, divided by P(X > x^{2/3})^2 = e^{-4t/3}.
        let t: f64 = 40.0;
        let joint = (-2.0 * t).exp() * ((2.0 * t / 3.0).exp() - 1.0)
            + 2.0 * (-t).exp() * ((-t / 3.0).exp() - (-t).exp())
            + (-2.0 * t).exp();
        let ratio = joint * (4.0 * t / 3.0).exp();
        assert!((ratio - 3.0).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn ar1_laplace_constant_monte_carlo_agrees() {
        let c = CoefficientSequence::ar1(0.5, 1e-12).unwrap();
        let lp = sv_lag_lp(&c, 1).unwrap();
        let sol = solve_lp(&lp);
        assert_eq!(sol.case_tag, CaseTag::TwoFactor { i: 0, j: 1 });
        let f = ResidualFactors::Exponential(EtaFamily::Laplace);
        let mc = McConfig { samples: 1_000_000, seed: 2024, workers: 0 };
        let exact = constant_d(&sol, &lp, f, mc).unwrap();
        // residual exponents: e_m = 2 · 0.5^m for m ≥ 2
        assert!((exact.exponents[0].1 - 0.5).abs() < 1e-15);
        let sim = constant_d_monte_carlo(&sol, &lp, f, mc).unwrap();
        assert!(sim.value.covers(exact.value.value, 3.0), "{:?} vs {}", sim.value, exact.value.value);
    }

    #[test]
    fn constant_rejects_divergent_exponent() {
        // column 2 has dual value k1 + k2 = 4/3 > 1
        let lp = TailLp::new(vec![1.0, 0.5, 1.0], vec![0.5, 1.0, 1.0]).unwrap();
        let sol = solve_lp(&lp);
        assert_eq!(sol.case_tag, CaseTag::OneFactor { i: 2 });
        let mc = McConfig { samples: 10, seed: 0, workers: 1 };
        assert!(constant_d(&sol, &lp, ResidualFactors::Pareto, mc).is_err());
    }

    fn laplace_model(c: &CoefficientSequence) -> OneFactorModel<'_> {
        OneFactorModel { coeffs: c, eta: EtaFamily::Laplace, eps: None }
    }

    #[test]
    fn one_factor_ratio_normalization_and_homogeneity() {
        let c = seq(&[1.0, 0.0, 1.0]);
        let (_, sol) = solve_lag(&c, 2).unwrap();
        assert_eq!(sol.case_tag, CaseTag::OneFactor { i: 2 });
        let mc = McConfig { samples: 100_000, seed: 4, workers: 0 };
        let one = one_factor_ratio(laplace_model(&c), 2, 2, 1.0, 1.0, mc).unwrap();
        assert_eq!(one.value.value, 1.0);
        let base = one_factor_ratio(laplace_model(&c), 2, 2, 2.0, 0.5, mc).unwrap();
        let scaled = one_factor_ratio(laplace_model(&c), 2, 2, 6.0, 1.5, mc).unwrap();
        assert!((scaled.value.value - base.value.value / 3.0).abs() < 1e-12);
        let mut prev = 1.0;
        for s0 in [1.5, 3.0, 10.0, 100.0] {
            let v = one_factor_ratio(laplace_model(&c), 2, 2, s0, 1.0, mc).unwrap().value.value;
            assert!(v <= prev);
            prev = v;
        }
        assert!(prev < 0.1);
        assert!(one_factor_ratio(laplace_model(&c), 2, 0, 1.0, 1.0, mc).is_err());
        assert!(one_factor_ratio(laplace_model(&c), 1, 2, 1.0, 1.0, mc).is_err());
    }

    #[test]
    fn one_factor_ratio_matches_quadrature() {
        // P_0 = e^{η_4}, P_1 = e^{η_0}; with U, V i.i.d. Laplace:
        // E min(e^U / s0, e^V / sh) = ∫∫ min(..) f(u) f(v).
        let expect = |s0: f64, sh: f64| {
            let (l0, lh) = (s0.ln(), sh.ln());
            let n = 4000;
            let (lo, hi) = (-40.0, 40.0);
            let du = (hi - lo) / n as f64;
            let f = |z: f64| 0.5 * (-z.abs()).exp();
            let mut total = 0.0;
            for iu in 0..n {
                let u = lo + (iu as f64 + 0.5) * du;
                // inner integral over v in closed form: split at v* = u - l0 + lh
                let cut = u - l0 + lh;
                // ∫_{v<cut} e^{v-lh} f(v) dv + e^{u-l0} P(V > cut)
                let below = if cut <= 0.0 {
                    0.25 * (2.0 * cut).exp()
                } else {
                    0.25 + 0.5 * cut
                };
                let surv = if cut >= 0.0 { 0.5 * (-cut).exp() } else { 1.0 - 0.5 * cut.exp() };
                total += f(u) * du * ((-lh).exp() * below + (u - l0).exp() * surv);
            }
            total
        };
        let oracle = expect(2.0, 1.0) / expect(1.0, 1.0);
        let c = seq(&[1.0, 0.0, 1.0]);
        let mc = McConfig { samples: 2_000_000, seed: 17, workers: 0 };
        let r = one_factor_ratio(laplace_model(&c), 2, 2, 2.0, 1.0, mc).unwrap();
        assert!(r.value.covers(oracle, 3.0), "{:?} vs {oracle}", r.value);
        assert_eq!(r.truncation_bias_bound, 0.0);
    }

    #[test]
    fn bias_bound_grows_with_discarded_mass() {
        let small = truncation_bias_bound(&EtaFamily::Laplace, 1.0, 1e-6).unwrap();
        let large = truncation_bias_bound(&EtaFamily::Laplace, 1.0, 1e-3).unwrap();
        assert!(small > 0.0 && large > small && large < 1e-2);
    }
}
