//! Tail-dependence linear programs.
//!
//! For power products `Y_0 = Π X_i^{a_i}` and `Y_1 = Π X_i^{b_i}` of i.i.d.
//! factors regularly varying with index -1, the joint tail of `(Y_0, Y_1)` is
//! governed by
//!
//! ```text
//!     Σ κ_i → min   subject to   Σ a_i κ_i ≥ 1,  Σ b_i κ_i ≥ 1,  κ ≥ 0.
//! ```
//!
//! With only two coupling rows every vertex has at most two positive
//! entries, so the program is solved exactly by enumerating singletons and
//! pairs. For a stochastic volatility model and lag `h` the factors are
//! `e^{η_{h-i}}` with `a_i = α_{i-h}` and `b_i = α_i`, and the coefficient of
//! tail dependence of `(σ_0, σ_h)` is `η_h = 1 / Σ κ_i`.

mod reduce;
mod solve;

pub use reduce::{
    reduce_infinite, DecayingSequence, FiniteSequence, Geometric, LagShift, PowerLaw, Reduction,
    MAX_REDUCTION_LEN,
};
pub use solve::{solve_lp, CaseTag, LpSolution, DETERMINANT_EPS, TIE_REL_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CoefficientSequence;

/// Coefficients of the two coupling constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailLp {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TailLp {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidInput(format!(
                "constraint rows differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("coefficients must be finite and non-negative".into()));
        }
        let max_a = a.iter().cloned().fold(0.0, f64::max);
        let max_b = b.iter().cloned().fold(0.0, f64::max);
        if !(max_a > 0.0 && max_b > 0.0) {
            return Err(Error::InvalidInput("each constraint needs a positive coefficient".into()));
        }
        Ok(Self { a, b })
    }

    /// Re-validates a deserialized program.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.a, self.b)
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `1 / (2/sup a + 2/sup b)`: columns whose coefficients both stay at or
    /// below this level never carry weight in an optimal solution.
    pub fn negligibility_threshold(&self) -> f64 {
        let max_a = self.a.iter().cloned().fold(0.0, f64::max);
        let max_b = self.b.iter().cloned().fold(0.0, f64::max);
        1.0 / (2.0 / max_a + 2.0 / max_b)
    }
}

/// `a_i = α_{i-h}` (zero for `i < h`) and `b_i = α_i`, `i = 0..len+h`.
pub fn sv_lag_lp(coeffs: &CoefficientSequence, h: usize) -> Result<TailLp> {
    if h == 0 {
        return Err(Error::InvalidInput("lag h must be at least 1".into()));
    }
    let n = coeffs.len() + h;
    let a = (0..n).map(|i| coeffs.get_signed(i as i64 - h as i64)).collect();
    let b = (0..n).map(|i| coeffs.get(i)).collect();
    TailLp::new(a, b)
}

/// Where an `η_h` value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LinearProgram,
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagEta {
    pub h: usize,
    pub eta: f64,
    pub kappa_sum: f64,
    pub case_tag: CaseTag,
    pub support: Vec<usize>,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDependenceProfile {
    pub provenance: Provenance,
    pub lags: Vec<LagEta>,
}

impl TailDependenceProfile {
    pub fn eta(&self, h: usize) -> Option<f64> {
        self.lags.iter().find(|l| l.h == h).map(|l| l.eta)
    }

    pub fn etas(&self) -> Vec<f64> {
        self.lags.iter().map(|l| l.eta).collect()
    }
}

/// Solves the lag-`h` program of a model's coefficients after dropping the
/// negligible tail columns.
pub fn solve_lag(coeffs: &CoefficientSequence, h: usize) -> Result<(Reduction, LpSolution)> {
    if h == 0 {
        return Err(Error::InvalidInput("lag h must be at least 1".into()));
    }
    let seq = FiniteSequence(coeffs.values());
    let a = LagShift { inner: &seq, shift: h };
    let reduction = reduce_infinite(&a, &seq, MAX_REDUCTION_LEN)?;
    let sol = solve_lp(&reduction.lp);
    Ok((reduction, sol))
}

/// `η_h = 1/Σκ_i` for every requested lag.
///
/// Non-unique programs still have a well-defined optimal value; such lags
/// carry `unique = false` and the `NonUnique` tag.
pub fn eta_profile(coeffs: &CoefficientSequence, lags: &[usize]) -> Result<TailDependenceProfile> {
    let lags = lags
        .iter()
        .map(|&h| {
            let (_, sol) = solve_lag(coeffs, h)?;
            Ok(LagEta {
                h,
                eta: 1.0 / sol.objective,
                kappa_sum: sol.objective,
                case_tag: sol.case_tag,
                support: sol.support.clone(),
                unique: sol.unique,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TailDependenceProfile {
        provenance: Provenance::LinearProgram,
        lags,
    })
}

/// Coefficients realizing a target profile `(η_1, .., η_m) ∈ [1/2, 1]^m`:
/// `α_{2m(i-1)} = 1` and `α_{2m(i-1)+i} = 2 - 1/η_i`, zero elsewhere.
pub fn construct_from_eta(target: &[f64]) -> Result<CoefficientSequence> {
    if target.is_empty() {
        return Err(Error::InvalidInput("target profile is empty".into()));
    }
    if let Some((i, v)) = target
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.5 && **v <= 1.0))
    {
        return Err(Error::InvalidInput(format!(
            "target η_{} = {v} outside [1/2, 1]",
            i + 1
        )));
    }
    let m = target.len();
    let mut values = vec![0.0; 2 * m * (m - 1) + m + 1];
    for (idx, &eta) in target.iter().enumerate() {
        let i = idx + 1;
        let base = 2 * m * (i - 1);
        values[base] = 1.0;
        values[base + i] = 2.0 - 1.0 / eta;
    }
    CoefficientSequence::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> CoefficientSequence {
        CoefficientSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn lag_lp_index_shift() {
        let lp = sv_lag_lp(&seq(&[1.0, 0.5]), 1).unwrap();
        assert_eq!(lp.a(), &[0.0, 1.0, 0.5]);
        assert_eq!(lp.b(), &[1.0, 0.5, 0.0]);
        assert!(sv_lag_lp(&seq(&[1.0]), 0).is_err());
    }

    #[test]
    fn independence_lag_has_eta_one_half() {
        let lp = sv_lag_lp(&seq(&[1.0]), 1).unwrap();
        assert_eq!(lp.a(), &[0.0, 1.0]);
        assert_eq!(lp.b(), &[1.0, 0.0]);
        let sol = solve_lp(&lp);
        assert_eq!(sol.kappa, vec![1.0, 1.0]);
        assert!(sol.unique);
        assert_eq!(1.0 / sol.objective, 0.5);
    }

    #[test]
    fn two_coefficient_solution() {
        let sol = solve_lp(&sv_lag_lp(&seq(&[1.0, 0.5]), 1).unwrap());
        assert!((sol.kappa[0] - 0.5).abs() < 1e-15);
        assert!((sol.kappa[1] - 1.0).abs() < 1e-15);
        assert_eq!(sol.kappa[2], 0.0);
        assert!((sol.objective - 1.5).abs() < 1e-15);
        assert_eq!(sol.case_tag, CaseTag::TwoFactor { i: 0, j: 1 });
    }

    #[test]
    fn ar1_profile() {
        let c = CoefficientSequence::ar1(0.5, 1e-9).unwrap();
        let p = eta_profile(&c, &[1, 2, 3]).unwrap();
        let want = [1.0 / 1.5, 1.0 / 1.75, 1.0 / 1.875];
        for (got, want) in p.etas().iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn decreasing_profile_and_wide_lag() {
        let p = eta_profile(&seq(&[1.0, 0.8, 0.3]), &[1]).unwrap();
        assert!((p.eta(1).unwrap() - 1.0 / 1.2).abs() < 1e-12);
        let p = eta_profile(&seq(&[1.0, 0.5]), &[5]).unwrap();
        assert_eq!(p.eta(5).unwrap(), 0.5);
    }

    #[test]
    fn construction_layout() {
        let c = construct_from_eta(&[0.8, 0.5]).unwrap();
        assert_eq!(c.len(), 7);
        assert_eq!(c.values(), &[1.0, 0.75, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let c = construct_from_eta(&[0.5]).unwrap();
        assert_eq!(c.values(), &[1.0, 0.0]);
        assert_eq!(eta_profile(&c, &[1]).unwrap().eta(1), Some(0.5));
        assert!(construct_from_eta(&[0.49]).is_err());
        assert!(construct_from_eta(&[1.01]).is_err());
        assert!(construct_from_eta(&[]).is_err());
    }

    #[test]
    fn construction_round_trip_with_endpoints() {
        let target = [0.9, 0.6, 1.0];
        let c = construct_from_eta(&target).unwrap();
        let p = eta_profile(&c, &[1, 2, 3]).unwrap();
        for (got, want) in p.etas().iter().zip(target) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn invalid_programs() {
        assert!(TailLp::new(vec![1.0], vec![1.0, 0.0]).is_err());
        assert!(TailLp::new(vec![0.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(TailLp::new(vec![-1.0], vec![1.0]).is_err());
        let lp: TailLp = serde_json::from_str(r#"{"a":[1.0,0.5],"b":[0.5,1.0]}"#).unwrap();
        assert!(lp.validated().is_ok());
        assert!(serde_json::from_str::<TailLp>(r#"{"a":[1.0],"b":[1.0],"c":[0.0]}"#).is_err());
    }
}
