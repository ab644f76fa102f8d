//! Geometry of the cone `E^d = (0,∞)^d`.
//!
//! For a matrix `A`, `τ(A) = sup_{x ∈ S^d} min((Ax)^+)` with
//! `S^d = {x ∈ E^d : min(x) = 1}`. `0 < τ(A) < ∞` exactly when `A` is
//! invertible with `A^{-1}(E^d) ⊂ E^d`, i.e. `A^{-1}` has non-negative
//! entries; then `τ(A) = max_i 1/(Σ_j A^{-1}_{ij})^+`. Otherwise `τ(A)` is
//! `0` or `∞`.
//!
//! A random diagonal matrix `diag(D)` applied to a vector that is regularly
//! varying on `E^d` with product limit measure `Π s_i^{-α_i}` yields the
//! limit `Π s_i^{-α_i} · E Π D_i^{α_i} 1{D_i > 0}` on upper rectangles.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EpsFamily;
use crate::parallel::{mc_mean, Estimate};

/// Coordinate cap of the numeric oracle's search over `S^d`.
pub const ORACLE_CAP: f64 = 1e6;
/// Grid points per free coordinate in each zoom round of the oracle.
const ZOOM_POINTS: usize = 81;
/// Half-width of the next zoom window, in current grid steps.
const ZOOM_HALF_WIDTH: f64 = 12.0;

/// Relative size below which a pivot or an inverse entry counts as zero.
const REL_EPS: f64 = 1e-12;

/// Dense row-major `d × d` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SquareMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for SquareMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<SquareMatrix> for Vec<Vec<f64>> {
    fn from(m: SquareMatrix) -> Self {
        m.entries.chunks(m.d).map(<[f64]>::to_vec).collect()
    }
}

impl SquareMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::InvalidInput("matrix is empty".into()));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("matrix is not square".into()));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { d, entries })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = values.len();
        let rows = (0..d)
            .map(|i| (0..d).map(|j| if i == j { values[i] } else { 0.0 }).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            d: self.d,
            entries: self.entries.iter().map(|v| v * c).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.d)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Gauss-Jordan inverse with partial pivoting; `None` when singular to
    /// working precision.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.d;
        let scale = self.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return None;
        }
        let mut a = self.entries.clone();
        let mut inv = Self::identity(d).expect("d ≥ 1").entries;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&r, &s| a[r * d + col].abs().total_cmp(&a[s * d + col].abs()))
                .expect("non-empty range");
            if a[pivot * d + col].abs() <= REL_EPS * scale {
                return None;
            }
            for k in 0..d {
                a.swap(col * d + k, pivot * d + k);
                inv.swap(col * d + k, pivot * d + k);
            }
            let p = a[col * d + col];
            for k in 0..d {
                a[col * d + k] /= p;
                inv[col * d + k] /= p;
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let f = a[r * d + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..d {
                    a[r * d + k] -= f * a[col * d + k];
                    inv[r * d + k] -= f * inv[col * d + k];
                }
            }
        }
        Some(Self { d, entries: inv })
    }

    /// Whether some `x ∈ E^d` has `Ax ∈ E^d`, decided as feasibility of
    /// `{x ≥ 1, Ax ≥ 1}`.
    pub fn maps_into_cone(&self) -> bool {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..self.d).map(|_| p.add_var(1.0, (1.0, f64::INFINITY))).collect();
        for row in self.entries.chunks(self.d) {
            let terms: Vec<_> = vars.iter().copied().zip(row.iter().copied()).collect();
            p.add_constraint(&terms, ComparisonOp::Ge, 1.0);
        }
        p.solve().is_ok()
    }
}

/// `τ(A)`, with `0.0` and `f64::INFINITY` as in-band values.
///
/// An invertible `A` whose inverse is entrywise non-negative gets the
/// closed form; every other matrix has `τ ∈ {0, ∞}`, and `τ = 0` exactly
/// when no point of `E^d` is mapped into `E^d`.
pub fn tau(a: &SquareMatrix) -> f64 {
    if let Some(inv) = a.inverse() {
        let scale = inv.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if inv.entries.iter().all(|v| *v >= -REL_EPS * scale) {
            return inv
                .entries
                .chunks(a.d)
                .map(|row| {
                    let s: f64 = row.iter().sum();
                    if s > 0.0 {
                        1.0 / s
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max);
        }
    }
    if a.maps_into_cone() {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Brute-force `sup min((Ax)^+)` over `S^d` with coordinates up to
/// [`ORACLE_CAP`], by a log-spaced grid on each face `{x_k = 1}` followed
/// by repeated local zooming around the best point.
pub fn tau_numeric_oracle(a: &SquareMatrix, grid_resolution: usize) -> Result<f64> {
    let d = a.dim();
    if !(2..=3).contains(&d) {
        return Err(Error::Unsupported(format!("numeric τ oracle needs d ∈ {{2, 3}}, got {d}")));
    }
    if grid_resolution < 100 {
        return Err(Error::InvalidInput("grid resolution must be at least 100".into()));
    }
    let cap = ORACLE_CAP.ln();
    let objective = |face: usize, logs: &[f64]| -> f64 {
        let mut x = vec![1.0; d];
        let mut it = logs.iter();
        for (k, v) in x.iter_mut().enumerate() {
            if k != face {
                *v = it.next().expect("d-1 free coordinates").exp();
            }
        }
        a.mul_vec(&x).into_iter().fold(f64::INFINITY, f64::min).max(0.0)
    };
    let free = d - 1;
    let first = if free == 1 { grid_resolution * 10 } else { grid_resolution };
    let mut best = 0.0f64;
    for face in 0..d {
        let mut lo = vec![0.0; free];
        let mut hi = vec![cap; free];
        let mut face_best = (0.0f64, vec![0.0; free]);
        for round in 0..40 {
            let res = if round == 0 { first } else { ZOOM_POINTS };
            let steps: Vec<f64> = (0..free).map(|k| (hi[k] - lo[k]) / (res - 1) as f64).collect();
            let mut idx = vec![0usize; free];
            loop {
                let point: Vec<f64> = (0..free).map(|k| lo[k] + idx[k] as f64 * steps[k]).collect();
                let v = objective(face, &point);
                if v > face_best.0 {
                    face_best = (v, point);
                }
                let mut k = 0;
                while k < free {
                    idx[k] += 1;
                    if idx[k] < res {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == free {
                    break;
                }
            }
            if face_best.0 == 0.0 {
                break;
            }
            for k in 0..free {
                let c = face_best.1[k];
                lo[k] = (c - ZOOM_HALF_WIDTH * steps[k]).max(0.0);
                hi[k] = (c + ZOOM_HALF_WIDTH * steps[k]).min(cap);
            }
            if steps.iter().all(|s| *s < 1e-13) {
                break;
            }
        }
        best = best.max(face_best.0);
    }
    Ok(best)
}

/// Upper-open rectangle `×_i (s_i, ∞)` with all `s_i > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeRectangle {
    lower: Vec<f64>,
}

impl ConeRectangle {
    pub fn new(lower: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("rectangle corners must be positive and finite".into()));
        }
        Ok(Self { lower })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lower.len() && x.iter().zip(&self.lower).all(|(x, s)| x > s)
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.lower.iter().map(|s| s * t).collect())
    }

    /// `Π s_i^{-α_i}`: the product measure of Pareto(α_i) axes.
    pub fn product_measure(&self, alpha: &[f64]) -> f64 {
        self.lower.iter().zip(alpha).map(|(s, a)| s.powf(-a)).product()
    }
}

/// Distribution of one diagonal entry of a random matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    Constant(f64),
    /// `exp(μ + σ N)`.
    LogNormal { mu: f64, sigma: f64 },
    /// A (signed) return innovation; only its positive part contributes.
    Eps(EpsFamily),
}

impl Multiplier {
    /// Supremum of the finite moment orders of `D^+`.
    pub fn moment_bound(&self) -> f64 {
        match self {
            Multiplier::Constant(_) | Multiplier::LogNormal { .. } => f64::INFINITY,
            Multiplier::Eps(e) => e.moment_bound(),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Multiplier::Constant(c) => *c,
            Multiplier::LogNormal { mu, sigma } => {
                let n: f64 = rng.sample(StandardNormal);
                (mu + sigma * n).exp()
            }
            Multiplier::Eps(e) => e.sample(rng),
        }
    }
}

/// Monte Carlo settings shared by the estimators in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    /// Worker threads; `0` uses the global pool. Results do not depend on it.
    pub workers: usize,
}

/// `lim P(diag(D) Z ∈ xB) / P(min(Z) > x) = E ν(diag(D)^{-1} B)` for the
/// product limit measure `ν(×(s_i, ∞)) = Π s_i^{-α_i}`.
///
/// The rectangle enters only through the factor `Π s_i^{-α_i}`; the Monte
/// Carlo part estimates `E Π (D_i^+)^{α_i}`.
pub fn breiman_limit_diagonal(
    alpha: &[f64],
    multipliers: &[Multiplier],
    rect: &ConeRectangle,
    mc: McConfig,
) -> Result<Estimate> {
    let d = rect.dim();
    if alpha.len() != d || multipliers.len() != d {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: rectangle {d}, exponents {}, multipliers {}",
            alpha.len(),
            multipliers.len()
        )));
    }
    if alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidInput("tail indices must be positive".into()));
    }
    let total: f64 = alpha.iter().sum();
    for m in multipliers {
        if !(m.moment_bound() > total) {
            return Err(Error::MomentDiverges(format!(
                "multiplier {m:?} has moments only below {}, need more than {total}",
                m.moment_bound()
            )));
        }
        if let Multiplier::Constant(c) = m {
            if !c.is_finite() {
                return Err(Error::InvalidInput("constant multiplier must be finite".into()));
            }
        }
    }
    let prefactor = rect.product_measure(alpha);
    if multipliers.iter().all(|m| matches!(m, Multiplier::Constant(_))) {
        let v: f64 = multipliers
            .iter()
            .zip(alpha)
            .map(|(m, a)| match m {
                Multiplier::Constant(c) if *c > 0.0 => c.powf(*a),
                _ => 0.0,
            })
            .product();
        return Ok(Estimate::exact(prefactor * v));
    }
    let est = mc_mean(mc.seed, mc.samples, mc.workers, |rng| {
        let mut prod = 1.0;
        for (m, a) in multipliers.iter().zip(alpha) {
            let v = m.sample(rng);
            prod *= if v > 0.0 { v.powf(*a) } else { 0.0 };
        }
        prod
    })?;
    Ok(Estimate {
        value: prefactor * est.value,
        stderr: prefactor * est.stderr,
        samples: est.samples,
    })
}
