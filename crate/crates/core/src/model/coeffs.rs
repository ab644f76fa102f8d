use serde::Serialize;

use crate::error::{Error, Result};

/// Values within this distance of 1 are stored as exactly 1, so that the
/// multiplicity of unit coefficients is well defined.
pub const UNIT_SNAP: f64 = 1e-12;

/// Finite list of log-volatility weights `α_0..α_n`.
///
/// Entries beyond the list are zero. The largest entry is exactly 1; the
/// global multiplier `c` is kept separately in `scale` and only enters the
/// simulated log-volatility (`log σ_t = c Σ α_i η_{t-i}`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSequence {
    values: Vec<f64>,
    decay_exponent: Option<f64>,
    scale: f64,
}

impl CoefficientSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidModel("coefficient list is empty".into()));
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < 0.0 || *v > 1.0 + UNIT_SNAP {
                return Err(Error::InvalidModel(format!(
                    "coefficient α_{i} = {v} outside [0, 1]"
                )));
            }
            if (*v - 1.0).abs() <= UNIT_SNAP {
                *v = 1.0;
            }
        }
        if !values.contains(&1.0) {
            return Err(Error::InvalidModel(
                "largest coefficient must equal 1 (use `scale` for other tail indices)".into(),
            ));
        }
        Ok(Self {
            values,
            decay_exponent: None,
            scale: 1.0,
        })
    }

    /// Geometric weights `α^i` (AR(1) log-volatility), truncated at the first
    /// `n` with `Σ_{i>n} α^i < tail_tol`.
    pub fn ar1(alpha: f64, tail_tol: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidModel(format!(
                "AR(1) coefficient {alpha} outside (0, 1)"
            )));
        }
        if !(tail_tol > 0.0) {
            return Err(Error::InvalidInput("tail tolerance must be positive".into()));
        }
        let mut values = vec![1.0];
        // Σ_{i>n} α^i = α^{n+1} / (1 - α)
        while alpha.powi(values.len() as i32) / (1.0 - alpha) >= tail_tol {
            values.push(alpha.powi(values.len() as i32));
        }
        Self::new(values)
    }

    /// Attach the `O(i^{-θ})` decay metadata: entries past the list are taken
    /// to satisfy `α_i ≤ α_last (n / i)^θ`, `n` being the last index.
    pub fn with_decay_exponent(mut self, theta: f64) -> Result<Self> {
        if !(theta > 1.0) || !theta.is_finite() {
            return Err(Error::InvalidModel(format!(
                "decay exponent θ = {theta} must exceed 1"
            )));
        }
        self.decay_exponent = Some(theta);
        Ok(self)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidModel(format!("scale c = {scale} must be positive")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `α_i`, zero past the end of the list.
    pub fn get(&self, i: usize) -> f64 {
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// `α_i` for a possibly negative index (zero for `i < 0`).
    pub fn get_signed(&self, i: i64) -> f64 {
        if i < 0 {
            0.0
        } else {
            self.get(i as usize)
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn decay_exponent(&self) -> Option<f64> {
        self.decay_exponent
    }

    /// One past the last nonzero coefficient.
    pub fn support_len(&self) -> usize {
        self.values
            .iter()
            .rposition(|&v| v > 0.0)
            .map_or(0, |i| i + 1)
    }

    /// Indices with `α_i = 1`.
    pub fn unit_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `k = |{i : α_i = 1}|`.
    pub fn unit_multiplicity(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1.0).count()
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        let n = self.support_len();
        n == self.values.len() && self.values.windows(2).all(|w| w[0] > w[1])
    }

    /// Upper bound on `Σ_{i ≥ len} α_i` implied by the decay metadata; zero
    /// when no metadata is attached (the list is the whole sequence).
    pub fn tail_mass_bound(&self) -> f64 {
        match self.decay_exponent {
            None => 0.0,
            Some(theta) => {
                let n = self.values.len() as f64;
                let last = *self.values.last().expect("non-empty");
                if last == 0.0 {
                    0.0
                } else {
                    // Σ_{i>n-1} last ((n-1)/i)^θ ≤ last (n-1)^θ ∫_{n-1}^∞ t^{-θ} dt
                    let m = (n - 1.0).max(1.0);
                    last * m / (theta - 1.0)
                }
            }
        }
    }

    /// The same weights extended by `extra` trailing entries.
    pub fn extended(&self, extra: &[f64]) -> Result<Self> {
        let mut values = self.values.clone();
        values.extend_from_slice(extra);
        let mut out = Self::new(values)?;
        out.scale = self.scale;
        out.decay_exponent = self.decay_exponent;
        Ok(out)
    }
}
