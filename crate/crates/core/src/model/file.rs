//! JSON model file:
//! `{"coeffs": [..], "eta": {"kind": "gamma", "shape": 2.0}, "eps": {"kind": "student_t", "nu": 5.0}, "scale": 1.0}`.

use serde::{Deserialize, Serialize};

use super::{CoefficientSequence, EpsFamily, EtaFamily, SvModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaSpec {
    Gamma {
        shape: f64,
    },
    Laplace,
    CustomTail {
        k: f64,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z0: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsSpec {
    StandardNormal,
    StudentT { nu: f64 },
    SymmetricPareto { alpha: f64, p: f64 },
    PositiveConstant,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub coeffs: Vec<f64>,
    pub eta: EtaSpec,
    pub eps: EpsSpec,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_exponent: Option<f64>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("model file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn to_model(&self) -> Result<SvModel> {
        let mut coeffs = CoefficientSequence::new(self.coeffs.clone())?.with_scale(self.scale)?;
        if let Some(theta) = self.decay_exponent {
            coeffs = coeffs.with_decay_exponent(theta)?;
        }
        let eta = match self.eta {
            EtaSpec::Gamma { shape } => EtaFamily::gamma(shape)?,
            EtaSpec::Laplace => EtaFamily::Laplace,
            EtaSpec::CustomTail { k, beta, z0 } => EtaFamily::custom_tail(k, beta, z0)?,
        };
        let eps = match self.eps {
            EpsSpec::StandardNormal => EpsFamily::StandardNormal,
            EpsSpec::StudentT { nu } => EpsFamily::student_t(nu)?,
            EpsSpec::SymmetricPareto { alpha, p } => EpsFamily::symmetric_pareto(alpha, p)?,
            EpsSpec::PositiveConstant => EpsFamily::PositiveConstant,
        };
        Ok(SvModel::new(coeffs, eta, eps))
    }

    pub fn from_model(model: &SvModel) -> Self {
        let eta = match model.eta {
            EtaFamily::Gamma { shape } => EtaSpec::Gamma { shape },
            EtaFamily::Laplace => EtaSpec::Laplace,
            EtaFamily::CustomTail(c) => EtaSpec::CustomTail {
                k: c.k(),
                beta: c.beta(),
                z0: Some(c.z0()),
            },
        };
        let eps = match model.eps {
            EpsFamily::StandardNormal => EpsSpec::StandardNormal,
            EpsFamily::StudentT { nu } => EpsSpec::StudentT { nu },
            EpsFamily::SymmetricPareto { alpha, p } => EpsSpec::SymmetricPareto { alpha, p },
            EpsFamily::PositiveConstant => EpsSpec::PositiveConstant,
        };
        Self {
            coeffs: model.coeffs.values().to_vec(),
            eta,
            eps,
            scale: model.coeffs.scale(),
            decay_exponent: model.coeffs.decay_exponent(),
        }
    }
}
