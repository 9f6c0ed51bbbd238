//! Scenario files and parameter sweeps.
//!
//! A scenario is a JSON object with a required `market` and `curves` block
//! and optional `decision` and `sweep` blocks. Unknown keys anywhere are
//! rejected.
//!
//! ```
//! use bounty_core::io::ScenarioFile;
//!
//! let s = ScenarioFile::from_json_str(r#"{
//!     "market": {"n": 3, "l": 5, "m": 4, "c_w": 2, "c_b": 2, "r_s": 1, "W": 8,
//!                "TC_s": 40, "TC_ns": 1, "x": 0.5},
//!     "curves": {"K_s0": 1, "lambda_s": 0.1386, "K_ns0": 1, "lambda_ns": 0.0446,
//!                "R0": 100, "a": 1, "b": 0.2},
//!     "sweep": {"parameter": "decision.p_s", "from": 0, "to": 20, "steps": 40}
//! }"#)?;
//! assert_eq!(s.curves.t_max, 10.0);
//! assert!(s.decision.is_none());
//! # Ok::<(), bounty_core::Error>(())
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::scenario::{validate, MarketParams, ReleaseCurves, ValidationReport, VendorDecision};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub market: MarketParams,
    pub curves: ReleaseCurves,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<VendorDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

/// A one-parameter sweep of `steps + 1` evenly spaced values.
///
/// `parameter` is a dotted path such as `market.m`, `curves.R0` or
/// `decision.p_s`, using the same key names as the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: u32,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            return Err(Error::InvalidScenario(
                "sweep.steps must be at least 1".into(),
            ));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(Error::InvalidScenario("sweep bounds must be finite".into()));
        }
        Ok(crate::numerics::linspace(
            self.from,
            self.to,
            self.steps as usize,
        ))
    }
}

impl ScenarioFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidScenario(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Model validation plus a check of the decision block, if present.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate(&self.market, &self.curves);
        if let Some(d) = &self.decision {
            report.check_decision(&self.curves, d);
        }
        report
    }

    /// Copy with the parameter at `path` set to `value`.
    ///
    /// Integer parameters accept only non-negative integral values.
    pub fn with_parameter(&self, path: &str, value: f64) -> Result<Self> {
        let mut doc =
            serde_json::to_value(self).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        let (section, key) = path.split_once('.').ok_or_else(|| {
            Error::InvalidScenario(format!(
                "parameter path `{path}` must look like `section.key`"
            ))
        })?;
        if section == "sweep" {
            return Err(Error::InvalidScenario(
                "the sweep block cannot be swept".into(),
            ));
        }
        let slot = doc
            .get_mut(section)
            .filter(|v| v.is_object())
            .ok_or_else(|| Error::InvalidScenario(format!("scenario has no `{section}` block")))?
            .get_mut(key)
            .ok_or_else(|| Error::InvalidScenario(format!("`{section}` has no key `{key}`")))?;
        *slot = if slot.is_u64() {
            if value.fract() != 0.0 || value < 0.0 || value > f64::from(u32::MAX) {
                return Err(Error::InvalidScenario(format!(
                    "`{path}` is an integer; got {value}"
                )));
            }
            Value::from(value as u64)
        } else {
            serde_json::Number::from_f64(value)
                .map(Value::Number)
                .ok_or_else(|| {
                    Error::InvalidScenario(format!("`{path}` = {value} is not finite"))
                })?
        };
        serde_json::from_value(doc).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    /// One scenario per sweep value, with the sweep block removed.
    pub fn sweep_points(&self) -> Result<Vec<(f64, ScenarioFile)>> {
        let spec = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::InvalidScenario("scenario has no sweep block".into()))?;
        let mut base = self.clone();
        base.sweep = None;
        spec.values()?
            .into_iter()
            .map(|v| base.with_parameter(&spec.parameter, v).map(|s| (v, s)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{s0_curves, s0_market};

    fn s0() -> ScenarioFile {
        ScenarioFile {
            market: s0_market(),
            curves: s0_curves(),
            decision: Some(VendorDecision::new(5.0, 2.5, 0.5)),
            sweep: None,
        }
    }

    #[test]
    fn round_trip() {
        let text = serde_json::to_string(&s0()).unwrap();
        assert_eq!(ScenarioFile::from_json_str(&text).unwrap(), s0());
        assert!(text.contains("\"TC_s\":40.0"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut doc = serde_json::to_value(s0()).unwrap();
        doc["market"]["extra"] = Value::from(1);
        let err = ScenarioFile::from_json_str(&doc.to_string()).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let mut doc = serde_json::to_value(s0()).unwrap();
        doc["notes"] = Value::from("x");
        assert!(ScenarioFile::from_json_str(&doc.to_string()).is_err());
    }

    #[test]
    fn integer_parameters_must_be_integral() {
        assert_eq!(s0().with_parameter("market.m", 7.0).unwrap().market.m, 7);
        assert!(s0().with_parameter("market.m", 7.5).is_err());
        assert!(s0().with_parameter("market.n", -1.0).is_err());
    }

    #[test]
    fn paths_resolve_by_file_names() {
        assert_eq!(
            s0().with_parameter("market.TC_s", 50.0)
                .unwrap()
                .market
                .tc_s,
            50.0
        );
        assert_eq!(
            s0().with_parameter("curves.R0", 7.0).unwrap().curves.r0,
            7.0
        );
        assert!(s0().with_parameter("market.tc_s", 50.0).is_err());
        assert!(s0().with_parameter("p_s", 1.0).is_err());
        let mut no_decision = s0();
        no_decision.decision = None;
        assert!(no_decision.with_parameter("decision.p_s", 1.0).is_err());
    }

    #[test]
    fn sweep_expands_inclusive_grid() {
        let mut s = s0();
        s.sweep = Some(SweepSpec {
            parameter: "market.m".into(),
            from: 1.0,
            to: 10.0,
            steps: 9,
        });
        let pts = s.sweep_points().unwrap();
        let ms: Vec<u32> = pts.iter().map(|(_, p)| p.market.m).collect();
        assert_eq!(ms, (1..=10).collect::<Vec<_>>());
        assert!(pts.iter().all(|(_, p)| p.sweep.is_none()));
    }

    #[test]
    fn zero_steps_rejected() {
        let mut s = s0();
        s.sweep = Some(SweepSpec {
            parameter: "decision.p_s".into(),
            from: 0.0,
            to: 20.0,
            steps: 0,
        });
        assert!(matches!(s.sweep_points(), Err(Error::InvalidScenario(_))));
    }
}
