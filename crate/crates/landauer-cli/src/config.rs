//! Run configuration: JSON schema, validation, and conversion to a
//! [`SystemSpec`].
//!
//! Every model invariant is re-checked on load by funnelling the raw arrays
//! through the library constructors, so a configuration that deserializes
//! cleanly can still be rejected (non-Hermitian sample, β ≤ 0, ...). Unknown
//! keys are errors everywhere.

use std::fmt;
use std::fs;
use std::path::Path;

use landauer::{C64, EquilibriumRef, LeadCoupling, ReservoirParams, SampleSpec, SystemSpec};
use ndarray::{Array1, Array2};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// Inverse temperature that serializes as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta(pub f64);

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(self.0)
        }
    }
}

struct BetaVisitor;

impl Visitor<'_> for BetaVisitor {
    type Value = Beta;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a positive number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Beta, E> {
        Ok(Beta(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Beta, E> {
        Ok(Beta(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Beta, E> {
        Ok(Beta(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Beta, E> {
        if v == "inf" {
            Ok(Beta(f64::INFINITY))
        } else {
            Err(E::invalid_value(de::Unexpected::Str(v), &self))
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        de.deserialize_any(BetaVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub h_re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadConfig {
    pub chi_re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_im: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    pub beta: Beta,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub beta: Beta,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// Absolute tolerance handed to the band quadrature.
    pub abs_tol: f64,
    /// Sites per truncated lead for time-evolution commands.
    pub r: usize,
    /// Plateau window as fractions of `r`.
    pub window: [f64; 2],
    /// Sample count across the plateau window.
    pub window_points: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            r: 400,
            window: [0.3, 0.6],
            window_points: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sample: SampleConfig,
    pub leads: Vec<LeadConfig>,
    pub reservoirs: Vec<ReservoirConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumConfig>,
    #[serde(default)]
    pub numerics: NumericsConfig,
}

fn complex_matrix(re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>) -> Result<Array2<C64>, CliError> {
    let n = re.len();
    if re.iter().any(|row| row.len() != n) {
        return Err(CliError::Input("sample.h_re must be square".into()));
    }
    if let Some(im) = im {
        if im.len() != n || im.iter().any(|row| row.len() != n) {
            return Err(CliError::Input(
                "sample.h_im must have the same shape as h_re".into(),
            ));
        }
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        C64::new(re[i][j], im.map_or(0.0, |im| im[i][j]))
    }))
}

fn complex_vector(re: &[f64], im: Option<&Vec<f64>>, what: &str) -> Result<Array1<C64>, CliError> {
    if let Some(im) = im {
        if im.len() != re.len() {
            return Err(CliError::Input(format!(
                "{what}: chi_im must have the same length as chi_re"
            )));
        }
    }
    Ok(Array1::from_shape_fn(re.len(), |i| {
        C64::new(re[i], im.map_or(0.0, |im| im[i]))
    }))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Input(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("malformed config {}: {e}", path.display())))?;
        if !(cfg.numerics.abs_tol > 0.0) {
            return Err(CliError::Input("numerics.abs_tol must be positive".into()));
        }
        let [w0, w1] = cfg.numerics.window;
        if !(0.0 < w0 && w0 < w1) {
            return Err(CliError::Input(
                "numerics.window must satisfy 0 < w0 < w1".into(),
            ));
        }
        if cfg.numerics.window_points < 2 {
            return Err(CliError::Input(
                "numerics.window_points must be at least 2".into(),
            ));
        }
        Ok(cfg)
    }

    /// Rebuild the validated system; all model invariants are enforced here.
    pub fn to_spec(&self) -> Result<SystemSpec, CliError> {
        let h = complex_matrix(&self.sample.h_re, self.sample.h_im.as_ref())?;
        let sample = SampleSpec::new(h).map_err(|e| CliError::Input(format!("sample: {e}")))?;
        let leads = self
            .leads
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let chi = complex_vector(&l.chi_re, l.chi_im.as_ref(), &format!("lead {k}"))?;
                LeadCoupling::new(chi).map_err(|e| CliError::Input(format!("lead {k}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let reservoirs = self
            .reservoirs
            .iter()
            .enumerate()
            .map(|(k, r)| {
                ReservoirParams::new(r.beta.0, r.mu)
                    .map_err(|e| CliError::Input(format!("reservoir {k}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        SystemSpec::new(sample, leads, reservoirs).map_err(|e| CliError::Input(e.to_string()))
    }

    /// The reference equilibrium, required by linear-response commands.
    pub fn equilibrium(&self) -> Result<EquilibriumRef, CliError> {
        let eq = self.equilibrium.as_ref().ok_or_else(|| {
            CliError::Input("this command needs an \"equilibrium\" block in the config".into())
        })?;
        EquilibriumRef::new(eq.beta.0, eq.mu)
            .map_err(|e| CliError::Input(format!("equilibrium: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RESONANT: &str = r#"{
        "sample": { "h_re": [[0.0]], "h_im": [[0.0]] },
        "leads": [
            { "chi_re": [0.45], "chi_im": [0.0] },
            { "chi_re": [0.45] }
        ],
        "reservoirs": [
            { "beta": 2.0, "mu": 0.3 },
            { "beta": "inf", "mu": -0.2 }
        ],
        "equilibrium": { "beta": 1.5, "mu": 0.05 },
        "numerics": { "abs_tol": 1e-10, "r": 80, "window": [0.3, 0.6], "window_points": 11 }
    }"#;

    #[test]
    fn round_trip_is_field_identical() {
        let cfg: RunConfig = serde_json::from_str(RESONANT).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let again: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, again);
        assert!(again.reservoirs[1].beta.0.is_infinite());
        assert!(text.contains("\"inf\""));
    }

    #[test]
    fn spec_is_validated_on_load() {
        let cfg: RunConfig = serde_json::from_str(RESONANT).unwrap();
        let spec = cfg.to_spec().unwrap();
        assert_eq!(spec.n_leads(), 2);
        assert!(spec.is_time_reversal_invariant());
        assert!(spec.reservoir(1).is_zero_temperature());

        // Non-Hermitian sample must be rejected even though it parses.
        let bad = r#"{
            "sample": { "h_re": [[0.0, 1.0], [0.5, 0.0]] },
            "leads": [ { "chi_re": [0.4, 0.0] }, { "chi_re": [0.0, 0.4] } ],
            "reservoirs": [ { "beta": 1.0, "mu": 0.0 }, { "beta": 1.0, "mu": 0.0 } ]
        }"#;
        let cfg: RunConfig = serde_json::from_str(bad).unwrap();
        assert!(matches!(cfg.to_spec(), Err(CliError::Input(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let with_extra = RESONANT.replace("\"mu\": 0.05", "\"mu\": 0.05, \"extra\": 1");
        assert!(serde_json::from_str::<RunConfig>(&with_extra).is_err());
    }

    #[test]
    fn bad_beta_strings_are_rejected() {
        let bad = RESONANT.replace("\"inf\"", "\"Infinity\"");
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
    }
}
