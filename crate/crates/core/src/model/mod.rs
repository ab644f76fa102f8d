//! Stochastic volatility models with Gamma-type log-volatility
//!
//! `X_t = σ_t ε_t`, `log σ_t = c Σ_i α_i η_{t-i}`, with `P(η > z) ~ K z^β e^{-z}`.
//! This module holds the model data, the closed-form marginal tail
//! constants `(β̂, K̂)` of `log σ_0`, and the JSON model file.

mod coeffs;
mod file;
mod innovations;

pub use coeffs::{CoefficientSequence, UNIT_SNAP};
pub use file::{EpsSpec, EtaSpec, ModelFile};
pub use innovations::{
    CustomTail, EpsFamily, EtaFamily, CUSTOM_BODY_WIDTH, CUSTOM_TAIL_Z0_LEVEL, INVERSION_REL_TOL,
    MGF_ABS_TOL,
};

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SvModel {
    pub coeffs: CoefficientSequence,
    pub eta: EtaFamily,
    pub eps: EpsFamily,
}

impl SvModel {
    pub fn new(coeffs: CoefficientSequence, eta: EtaFamily, eps: EpsFamily) -> Self {
        Self { coeffs, eta, eps }
    }

    /// `k = |{i : α_i = 1}|`.
    pub fn unit_multiplicity(&self) -> usize {
        self.coeffs.unit_multiplicity()
    }

    /// The extremal-index/point-process results need `k = 1` when `β < -1`.
    pub fn point_process_condition_holds(&self) -> bool {
        self.eta.tail_beta() > -1.0 || self.unit_multiplicity() == 1
    }
}

/// Tail constants of `P(log σ_0 > z) ~ K̂ z^β̂ e^{-z}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalTailConstants {
    pub beta_hat: f64,
    pub k_hat: f64,
    /// Multiplicity of unit coefficients.
    pub k: usize,
}

impl MarginalTailConstants {
    /// `K̂ (log x / c)^β̂ x^{-1/c}` (for `c = 1`: `K̂ (log x)^β̂ / x`).
    pub fn survival_asymptote(&self, x: f64, scale: f64) -> f64 {
        let z = x.ln() / scale;
        self.k_hat * z.powf(self.beta_hat) * (-z).exp()
    }

    /// `a_n = (K̂ n (log n)^β̂)^c`.
    pub fn normalizing_constant(&self, n: f64, scale: f64) -> f64 {
        (self.k_hat * n * n.ln().powf(self.beta_hat)).powf(scale)
    }
}

/// `(β̂, K̂, k)` for the stationary log-volatility.
///
/// With `Λ = {n : α_n = 1}` and `k = |Λ|`:
/// `β̂ = kβ + k - 1` and `K̂ = K^k Γ(β+1)^k / Γ(k(β+1)) Π_{n∉Λ} E e^{α_n η}`
/// when `β > -1`; `β̂ = β` and `K̂ = k K (E e^η)^{k-1} Π_{n∉Λ} E e^{α_n η}`
/// when `β < -1`. Zero coefficients contribute an exact factor 1.
pub fn tail_constants(model: &SvModel) -> Result<MarginalTailConstants> {
    let beta = model.eta.tail_beta();
    let big_k = model.eta.tail_k();
    if beta == -1.0 {
        return Err(Error::InvalidModel("β = -1 is excluded".into()));
    }
    let k = model.unit_multiplicity();
    let mut residual = 1.0;
    for &a in model.coeffs.values() {
        if a == 1.0 || a == 0.0 {
            continue;
        }
        if a >= 1.0 {
            return Err(Error::MomentDiverges(format!("MGF argument {a} ≥ 1")));
        }
        residual *= model.eta.mgf(a)?;
    }
    let kf = k as f64;
    if beta > -1.0 {
        let log_k_hat = kf * big_k.ln() + kf * ln_gamma(beta + 1.0) - ln_gamma(kf * (beta + 1.0));
        Ok(MarginalTailConstants {
            beta_hat: kf * beta + kf - 1.0,
            k_hat: log_k_hat.exp() * residual,
            k,
        })
    } else {
        let e_exp = if k > 1 { model.eta.mgf(1.0)? } else { 1.0 };
        Ok(MarginalTailConstants {
            beta_hat: beta,
            k_hat: kf * big_k * e_exp.powi(k as i32 - 1) * residual,
            k,
        })
    }
}

/// Asymptotic approximation of `P(σ_0 > x)`, valid as `x → ∞`; requires `x > e`.
pub fn marginal_survival_asymptote(model: &SvModel, x: f64) -> Result<f64> {
    if !(x > std::f64::consts::E) {
        return Err(Error::InvalidInput(format!("x = {x} must exceed e")));
    }
    let c = tail_constants(model)?;
    Ok(c.survival_asymptote(x, model.coeffs.scale()))
}

/// Fréchet normalization of `max_{t ≤ n} σ_t`: `a_n = K̂ n (log n)^β̂`
/// (raised to the power `c` for a scaled model).
pub fn normalizing_constant(model: &SvModel, n: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(Error::InvalidInput(format!("n = {n} must be at least 2")));
    }
    let c = tail_constants(model)?;
    Ok(c.normalizing_constant(n, model.coeffs.scale()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(values: Vec<f64>, eta: EtaFamily) -> SvModel {
        SvModel::new(
            CoefficientSequence::new(values).unwrap(),
            eta,
            EpsFamily::StandardNormal,
        )
    }

    #[test]
    fn single_laplace_coefficient() {
        let c = tail_constants(&model(vec![1.0], EtaFamily::Laplace)).unwrap();
        assert_eq!(c.beta_hat, 0.0);
        assert!((c.k_hat - 0.5).abs() < 1e-15);
        assert_eq!(c.k, 1);
    }

    #[test]
    fn two_unit_laplace_coefficients() {
        let c = tail_constants(&model(vec![1.0, 1.0], EtaFamily::Laplace)).unwrap();
        assert_eq!(c.beta_hat, 1.0);
        assert!((c.k_hat - 0.25).abs() < 1e-15);
        assert_eq!(c.k, 2);
    }

    #[test]
    fn gamma_with_residual_factor() {
        let c = tail_constants(&model(vec![1.0, 0.5], EtaFamily::gamma(2.0).unwrap())).unwrap();
        assert_eq!(c.beta_hat, 1.0);
        assert!((c.k_hat - 4.0).abs() < 1e-13);
    }

    #[test]
    fn trailing_zeros_leave_constants_unchanged() {
        let base = model(vec![1.0, 0.5, 0.2], EtaFamily::Laplace);
        let ext = model(vec![1.0, 0.5, 0.2, 0.0, 0.0, 0.0], EtaFamily::Laplace);
        assert_eq!(tail_constants(&base).unwrap(), tail_constants(&ext).unwrap());
    }

    #[test]
    fn heavy_custom_tail_branch() {
        let eta = EtaFamily::custom_tail(1.0, -2.0, None).unwrap();
        let c1 = tail_constants(&model(vec![1.0, 0.5], eta)).unwrap();
        assert_eq!(c1.beta_hat, -2.0);
        assert!((c1.k_hat - eta.mgf(0.5).unwrap()).abs() < 1e-12);
        let c2 = tail_constants(&model(vec![1.0, 1.0], eta)).unwrap();
        assert!((c2.k_hat - 2.0 * eta.mgf(1.0).unwrap()).abs() < 1e-12);
        let m = model(vec![1.0, 1.0], eta);
        assert!(!m.point_process_condition_holds());
    }

    #[test]
    fn asymptote_substitution() {
        let m = model(vec![1.0], EtaFamily::Laplace);
        let v = marginal_survival_asymptote(&m, 10f64.exp()).unwrap();
        assert!((v - 0.5 * (-10f64).exp()).abs() < 1e-18);
        let g = model(vec![1.0, 0.5], EtaFamily::gamma(2.0).unwrap());
        let v = marginal_survival_asymptote(&g, 20f64.exp()).unwrap();
        let want = 4.0 * 20.0 * (-20f64).exp();
        assert!(((v - want) / want).abs() < 1e-12);
        assert!(marginal_survival_asymptote(&m, 2.0).is_err());
    }

    #[test]
    fn asymptote_strictly_decreasing_on_grid() {
        let g = model(vec![1.0, 1.0, 0.5], EtaFamily::gamma(3.0).unwrap());
        let c = tail_constants(&g).unwrap();
        let start = c.beta_hat.max(1.0).exp();
        let mut prev = f64::INFINITY;
        for i in 1..500 {
            let x = start * (1.0 + 0.05 * i as f64);
            let v = c.survival_asymptote(x, 1.0);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn normalizing_constants() {
        let m = model(vec![1.0], EtaFamily::Laplace);
        // K̂ = 1/2, β̂ = 0
        assert!((normalizing_constant(&m, 100.0).unwrap() - 50.0).abs() < 1e-12);
        let c = MarginalTailConstants { beta_hat: 0.0, k_hat: 1.0, k: 1 };
        assert!((c.normalizing_constant(100.0, 1.0) - 100.0).abs() < 1e-12);
        let n = 4f64.exp().round();
        let c = MarginalTailConstants { beta_hat: 1.0, k_hat: 0.5, k: 1 };
        assert!((c.normalizing_constant(n, 1.0) - 0.5 * n * n.ln()).abs() < 1e-12);
        assert!(normalizing_constant(&m, 1.0).is_err());
    }
}
