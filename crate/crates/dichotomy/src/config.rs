//! Global numeric configuration.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    /// Converts a value in nats to this base.
    pub fn from_nats(self, v: f64) -> f64 {
        match self {
            LogBase::Nats => v,
            LogBase::Bits => v / std::f64::consts::LN_2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Jacobi stopping threshold on the relative off-diagonal norm.
    pub eigen: f64,
    /// Relative gap below which eigenvalues share a cluster.
    pub cluster: f64,
    /// Width of certified beta brackets.
    pub bracket: f64,
    /// Termination width of golden-section searches.
    pub optimizer: f64,
    pub gamma_grid: usize,
    pub mu_grid: usize,
    pub alpha_grid: usize,
    pub icdf_grid: usize,
    pub tol_xi: f64,
    pub tol_alpha: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eigen: 1e-12,
            cluster: 1e-9,
            bracket: 1e-6,
            optimizer: 1e-10,
            gamma_grid: 33,
            mu_grid: 129,
            alpha_grid: 65,
            icdf_grid: 64,
            tol_xi: 1e-6,
            tol_alpha: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), String> {
        let pos = [
            ("eigen", self.eigen),
            ("cluster", self.cluster),
            ("bracket", self.bracket),
            ("optimizer", self.optimizer),
            ("tol_xi", self.tol_xi),
            ("tol_alpha", self.tol_alpha),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        if self.gamma_grid < 3 || self.mu_grid < 3 || self.alpha_grid < 3 || self.icdf_grid < 3 {
            return Err("grid sizes must be at least 3".into());
        }
        Ok(())
    }
}

/// Serializes non-finite floats as the strings "inf", "-inf" and "nan" (JSON has no literal for them).
pub mod extended_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}
