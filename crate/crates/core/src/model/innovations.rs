//! Innovation distributions: `η` drives the log-volatility, `ε` multiplies
//! the volatility.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal, StudentT};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric;

/// Survival level that fixes the default start of the custom tail.
pub const CUSTOM_TAIL_Z0_LEVEL: f64 = 0.9;
/// Width of the uniform body below `z0`.
pub const CUSTOM_BODY_WIDTH: f64 = 1.0;
/// Relative tolerance of the numeric tail inversion.
pub const INVERSION_REL_TOL: f64 = 1e-12;
/// Absolute tolerance of numerically integrated moment generating functions.
pub const MGF_ABS_TOL: f64 = 1e-10;

/// Distribution with survival `min(1, K z^β e^{-z})` above `z0` and a
/// uniform density on `[z0 - 1, z0]` carrying the remaining mass.
///
/// Only the upper tail is prescribed by the model class; the uniform body is
/// one admissible completion, not a canonical one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomTail {
    k: f64,
    beta: f64,
    z0: f64,
    tail_mass: f64,
}

impl CustomTail {
    pub fn new(k: f64, beta: f64, z0: Option<f64>) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidModel(format!("tail constant K = {k} must be positive")));
        }
        if !beta.is_finite() || beta == -1.0 {
            return Err(Error::InvalidModel(format!("tail exponent β = {beta} must differ from -1")));
        }
        let raw = |z: f64| k * z.powf(beta) * (-z).exp();
        // S is non-increasing on z ≥ max(β, 0)
        let branch = beta.max(0.0);
        let z0 = match z0 {
            Some(z0) => {
                if !(z0 > 0.0) || z0 < branch || !z0.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "z0 = {z0} must be positive and at least β = {beta}"
                    )));
                }
                if raw(z0) > 1.0 {
                    return Err(Error::InvalidModel(format!(
                        "K z0^β e^(-z0) = {} exceeds 1 at z0 = {z0}",
                        raw(z0)
                    )));
                }
                z0
            }
            None => {
                let target = CUSTOM_TAIL_Z0_LEVEL.ln();
                let g = |z: f64| k.ln() + beta * z.ln() - z - target;
                let dg = |z: f64| beta / z - 1.0;
                let start = if branch > 0.0 { branch } else { f64::MIN_POSITIVE.sqrt() };
                if g(start) <= 0.0 {
                    start
                } else {
                    let mut hi = start.max(1.0);
                    while g(hi) > 0.0 {
                        hi *= 2.0;
                    }
                    numeric::solve_monotone(g, dg, start, hi, INVERSION_REL_TOL)
                }
            }
        };
        let tail_mass = raw(z0);
        Ok(Self { k, beta, z0, tail_mass })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn lower(&self) -> f64 {
        self.z0 - CUSTOM_BODY_WIDTH
    }

    pub fn survival(&self, z: f64) -> f64 {
        if z >= self.z0 {
            (self.k * z.powf(self.beta) * (-z).exp()).min(1.0)
        } else if z <= self.lower() {
            1.0
        } else {
            let body = 1.0 - self.tail_mass;
            1.0 - body * (z - self.lower()) / CUSTOM_BODY_WIDTH
        }
    }

    /// Density of the absolutely continuous law.
    pub fn density(&self, z: f64) -> f64 {
        if z >= self.z0 {
            let s = self.k * z.powf(self.beta) * (-z).exp();
            if s >= 1.0 {
                0.0
            } else {
                s * (1.0 - self.beta / z)
            }
        } else if z >= self.lower() {
            (1.0 - self.tail_mass) / CUSTOM_BODY_WIDTH
        } else {
            0.0
        }
    }

    /// Inverse survival function for `p ∈ (0, 1]`.
    pub fn inverse_survival(&self, p: f64) -> f64 {
        if p > self.tail_mass {
            let body = 1.0 - self.tail_mass;
            return self.lower() + (1.0 - p) / body * CUSTOM_BODY_WIDTH;
        }
        let target = p.ln();
        let g = |z: f64| self.k.ln() + self.beta * z.ln() - z - target;
        let dg = |z: f64| self.beta / z - 1.0;
        if g(self.z0) <= 0.0 {
            return self.z0;
        }
        let mut hi = (self.z0 + 1.0).max(-target);
        while g(hi) > 0.0 {
            hi *= 2.0;
        }
        numeric::solve_monotone(g, dg, self.z0, hi, INVERSION_REL_TOL)
    }

    pub fn mgf(&self, s: f64) -> Result<f64> {
        if s > 1.0 || (s == 1.0 && self.beta > -1.0) {
            return Err(Error::MomentDiverges(format!(
                "E(exp({s} η)) is infinite for the custom tail with β = {}",
                self.beta
            )));
        }
        let body_mass = 1.0 - self.tail_mass;
        let (lo, hi) = (self.lower(), self.z0);
        let body = if s == 0.0 {
            body_mass
        } else {
            body_mass / CUSTOM_BODY_WIDTH * ((s * hi).exp() - (s * lo).exp()) / s
        };
        // Integration by parts: ∫_{z0}^∞ e^{sz} dF = e^{s z0} S(z0) + s ∫_{z0}^∞ e^{sz} S(z) dz.
        let (k, beta) = (self.k, self.beta);
        let boundary = (s * self.z0).exp() * self.tail_mass;
        let rest = if s == 0.0 {
            0.0
        } else if s == 1.0 {
            k * self.z0.powf(beta + 1.0) / (-beta - 1.0)
        } else {
            let log_k = k.ln();
            s * numeric::integrate_to_infinity(
                |z| (log_k + beta * z.ln() - (1.0 - s) * z).exp(),
                self.z0,
                MGF_ABS_TOL,
            )?
        };
        let tail = boundary + rest;
        Ok(body + tail)
    }
}

/// Distribution of the log-volatility innovations `η`, with tail
/// `P(η > z) ~ K z^β e^{-z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaFamily {
    /// Gamma with unit rate: `K = 1/Γ(a)`, `β = a - 1`.
    Gamma { shape: f64 },
    /// Symmetric unit-rate Laplace: `K = 1/2`, `β = 0`.
    Laplace,
    CustomTail(CustomTail),
}

impl EtaFamily {
    pub fn gamma(shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::InvalidModel(format!("Gamma shape {shape} must be positive")));
        }
        Ok(EtaFamily::Gamma { shape })
    }

    pub fn custom_tail(k: f64, beta: f64, z0: Option<f64>) -> Result<Self> {
        CustomTail::new(k, beta, z0).map(EtaFamily::CustomTail)
    }

    /// The constant `K` of the tail `K z^β e^{-z}`.
    pub fn tail_k(&self) -> f64 {
        match self {
            EtaFamily::Gamma { shape } => (-ln_gamma(*shape)).exp(),
            EtaFamily::Laplace => 0.5,
            EtaFamily::CustomTail(c) => c.k,
        }
    }

    /// The exponent `β` of the tail `K z^β e^{-z}`.
    pub fn tail_beta(&self) -> f64 {
        match self {
            EtaFamily::Gamma { shape } => shape - 1.0,
            EtaFamily::Laplace => 0.0,
            EtaFamily::CustomTail(c) => c.beta,
        }
    }

    /// Exact survival function `P(η > z)`.
    pub fn survival(&self, z: f64) -> f64 {
        match self {
            EtaFamily::Gamma { shape } => {
                if z <= 0.0 {
                    1.0
                } else {
                    gamma_ur(*shape, z)
                }
            }
            EtaFamily::Laplace => {
                if z >= 0.0 {
                    0.5 * (-z).exp()
                } else {
                    1.0 - 0.5 * z.exp()
                }
            }
            EtaFamily::CustomTail(c) => c.survival(z),
        }
    }

    /// `E(exp(s η))`.
    pub fn mgf(&self, s: f64) -> Result<f64> {
        match self {
            EtaFamily::Gamma { shape } => {
                if s >= 1.0 {
                    Err(Error::MomentDiverges(format!("Gamma MGF at s = {s} ≥ 1")))
                } else {
                    Ok((1.0 - s).powf(-shape))
                }
            }
            EtaFamily::Laplace => {
                if s.abs() >= 1.0 {
                    Err(Error::MomentDiverges(format!("Laplace MGF at |s| = {} ≥ 1", s.abs())))
                } else {
                    Ok(1.0 / (1.0 - s * s))
                }
            }
            EtaFamily::CustomTail(c) => c.mgf(s),
        }
    }

    /// Whether the MGF is available in closed form.
    pub fn has_closed_mgf(&self) -> bool {
        !matches!(self, EtaFamily::CustomTail(_))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EtaFamily::Gamma { shape } => Gamma::new(*shape, 1.0)
                .expect("validated shape")
                .sample(rng),
            EtaFamily::Laplace => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            }
            EtaFamily::CustomTail(c) => {
                let u: f64 = rng.random();
                c.inverse_survival(1.0 - u)
            }
        }
    }

    /// Fills `out` with i.i.d. draws; Gamma reuses one sampler.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            EtaFamily::Gamma { shape } => {
                let g = Gamma::new(*shape, 1.0).expect("validated shape");
                out.iter_mut().for_each(|v| *v = g.sample(rng));
            }
            _ => out.iter_mut().for_each(|v| *v = self.sample(rng)),
        }
    }
}

/// Distribution of the multiplicative innovations `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsFamily {
    StandardNormal,
    StudentT { nu: f64 },
    /// `P(ε > x) = p x^{-α}`, `P(ε < -x) = (1-p) x^{-α}` for `x ≥ 1`.
    SymmetricPareto { alpha: f64, p: f64 },
    /// `ε ≡ 1`, so that `X_t = σ_t`.
    PositiveConstant,
}

impl EpsFamily {
    pub fn student_t(nu: f64) -> Result<Self> {
        if !(nu > 1.0) || !nu.is_finite() {
            return Err(Error::InvalidModel(format!(
                "Student t degrees of freedom ν = {nu} must exceed 1"
            )));
        }
        Ok(EpsFamily::StudentT { nu })
    }

    pub fn symmetric_pareto(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidModel(format!("Pareto index {alpha} must exceed 1")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidModel(format!(
                "balance p = {p} must lie in (0, 1] so that P(ε > 0) > 0"
            )));
        }
        Ok(EpsFamily::SymmetricPareto { alpha, p })
    }

    /// Supremum of the `r` with `E|ε|^r < ∞`.
    pub fn moment_bound(&self) -> f64 {
        match self {
            EpsFamily::StandardNormal | EpsFamily::PositiveConstant => f64::INFINITY,
            EpsFamily::StudentT { nu } => *nu,
            EpsFamily::SymmetricPareto { alpha, .. } => *alpha,
        }
    }

    /// `E|ε|`.
    pub fn mean_abs(&self) -> f64 {
        match self {
            EpsFamily::StandardNormal => (2.0 / std::f64::consts::PI).sqrt(),
            EpsFamily::StudentT { nu } => {
                let lg = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0);
                2.0 * nu.sqrt() * lg.exp() / (std::f64::consts::PI.sqrt() * (nu - 1.0))
            }
            EpsFamily::SymmetricPareto { alpha, .. } => alpha / (alpha - 1.0),
            EpsFamily::PositiveConstant => 1.0,
        }
    }

    /// `E(ε⁺)`.
    pub fn mean_pos(&self) -> f64 {
        match self {
            EpsFamily::StandardNormal | EpsFamily::StudentT { .. } => 0.5 * self.mean_abs(),
            EpsFamily::SymmetricPareto { p, .. } => p * self.mean_abs(),
            EpsFamily::PositiveConstant => 1.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EpsFamily::StandardNormal => StandardNormal.sample(rng),
            EpsFamily::StudentT { nu } => StudentT::new(*nu).expect("validated ν").sample(rng),
            EpsFamily::SymmetricPareto { alpha, p } => {
                let u: f64 = rng.random();
                let mag = (1.0 - u).powf(-1.0 / alpha);
                if rng.random::<f64>() < *p {
                    mag
                } else {
                    -mag
                }
            }
            EpsFamily::PositiveConstant => 1.0,
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            EpsFamily::StudentT { nu } => {
                let t = StudentT::new(*nu).expect("validated ν");
                out.iter_mut().for_each(|v| *v = t.sample(rng));
            }
            EpsFamily::PositiveConstant => out.fill(1.0),
            _ => out.iter_mut().for_each(|v| *v = self.sample(rng)),
        }
    }
}
