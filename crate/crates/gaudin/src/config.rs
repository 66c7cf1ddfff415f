//! Experiment configuration: the JSON document driving the batch CLI.

use crate::bethe::Tolerances;
use crate::error::{GaudinError, Result};
use crate::rational::{parse_rational, q_to_f64, C64, Q};
use serde::{Deserialize, Serialize};

/// Raw wire format. Points accept rational strings, plain numbers, or
/// `[re, im]` float pairs.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct ExperimentConfig {
    pub algebra: String,
    pub pipeline: String,
    /// highest weights, one coroot-pairing vector per marked point
    pub weights: Vec<Vec<i64>>,
    pub points: Vec<serde_json::Value>,
    /// chi in h*, rational strings
    pub chi: Vec<String>,
    /// optional gamma directions for the DMT pipeline, rational strings
    #[serde(default)]
    pub gamma: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Serialize, Deserialize, Debug, Clone, Default)]
pub struct ToleranceOverrides {
    pub residual: Option<f64>,
    pub dedup_radius: Option<f64>,
    pub separation_floor: Option<f64>,
    pub eigen: Option<f64>,
    pub monodromy: Option<f64>,
}

pub const PIPELINES: &[&str] = &[
    "commute",
    "dmt",
    "shift-argument",
    "bethe-census",
    "spectrum-oper",
    "monodromy",
    "oper-internal",
    "full",
];

/// Validated configuration with typed fields.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub algebra: String,
    pub pipeline: String,
    pub weights: Vec<Vec<i64>>,
    /// exact rational points when every point is rational
    pub points_q: Option<Vec<Q>>,
    pub points_c: Vec<C64>,
    pub chi: Vec<Q>,
    pub gamma: Option<Vec<Vec<Q>>>,
    pub tolerances: Tolerances,
    pub monodromy_tol: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| GaudinError::Config {
            field: "<document>".into(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<ValidatedConfig> {
        let cfg_err = |field: &str, message: String| GaudinError::Config {
            field: field.to_string(),
            message,
        };
        let g = crate::liealg::SimpleLieAlgebra::from_type(&self.algebra)
            .map_err(|e| cfg_err("algebra", e.to_string()))?;
        if !PIPELINES.contains(&self.pipeline.as_str()) {
            return Err(cfg_err(
                "pipeline",
                format!("unknown pipeline `{}`; expected one of {PIPELINES:?}", self.pipeline),
            ));
        }
        if self.weights.is_empty() {
            return Err(cfg_err("weights", "at least one highest weight required".into()));
        }
        for (i, w) in self.weights.iter().enumerate() {
            if w.len() != g.rank {
                return Err(cfg_err(
                    &format!("weights[{i}]"),
                    format!("expected {} pairings, got {}", g.rank, w.len()),
                ));
            }
            if w.iter().any(|&x| x < 0) {
                return Err(cfg_err(&format!("weights[{i}]"), "weights must be dominant".into()));
            }
        }
        if self.points.len() != self.weights.len() {
            return Err(cfg_err(
                "points",
                format!("{} points vs {} weights", self.points.len(), self.weights.len()),
            ));
        }
        let mut points_q = Some(Vec::new());
        let mut points_c = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            let field = format!("points[{i}]");
            match p {
                serde_json::Value::String(s) => {
                    let q = parse_rational(s).map_err(|e| cfg_err(&field, e.to_string()))?;
                    points_c.push(C64::new(q_to_f64(&q), 0.0));
                    if let Some(v) = points_q.as_mut() {
                        v.push(q);
                    }
                }
                serde_json::Value::Number(n) => {
                    let f = n.as_f64().ok_or_else(|| cfg_err(&field, "bad number".into()))?;
                    points_c.push(C64::new(f, 0.0));
                    match crate::rational::q_from_f64(f) {
                        Some(q) => {
                            if let Some(v) = points_q.as_mut() {
                                v.push(q);
                            }
                        }
                        None => points_q = None,
                    }
                }
                serde_json::Value::Array(a) if a.len() == 2 => {
                    let re = a[0].as_f64().ok_or_else(|| cfg_err(&field, "bad re".into()))?;
                    let im = a[1].as_f64().ok_or_else(|| cfg_err(&field, "bad im".into()))?;
                    points_c.push(C64::new(re, im));
                    if im != 0.0 {
                        points_q = None;
                    } else if let (Some(v), Some(q)) =
                        (points_q.as_mut(), crate::rational::q_from_f64(re))
                    {
                        v.push(q);
                    }
                }
                _ => {
                    return Err(cfg_err(
                        &field,
                        "expected a rational string, a number, or [re, im]".into(),
                    ))
                }
            }
        }
        for i in 0..points_c.len() {
            for j in (i + 1)..points_c.len() {
                if (points_c[i] - points_c[j]).norm() < 1e-12 {
                    return Err(cfg_err("points", "points must be pairwise distinct".into()));
                }
            }
        }
        if self.chi.len() != g.rank {
            return Err(cfg_err(
                "chi",
                format!("expected {} components, got {}", g.rank, self.chi.len()),
            ));
        }
        let chi: Vec<Q> = self
            .chi
            .iter()
            .enumerate()
            .map(|(i, s)| parse_rational(s).map_err(|e| cfg_err(&format!("chi[{i}]"), e.to_string())))
            .collect::<Result<_>>()?;
        // chi regularity is pre-checked for the pipelines that need it
        let needs_regular = matches!(
            self.pipeline.as_str(),
            "bethe-census" | "spectrum-oper" | "monodromy" | "dmt" | "full"
        );
        if needs_regular {
            let form = crate::liealg::InvariantForm::trace_form(&g);
            let wf = crate::liealg::WeightForm::new(&g, &form)?;
            crate::liealg::check_regular_weight(&g, &wf, &chi)
                .map_err(|e| cfg_err("chi", e.to_string()))?;
        }
        let gamma = match &self.gamma {
            None => None,
            Some(list) => {
                let mut out = Vec::new();
                for (i, gv) in list.iter().enumerate() {
                    if gv.len() != g.rank {
                        return Err(cfg_err(
                            &format!("gamma[{i}]"),
                            format!("expected {} components", g.rank),
                        ));
                    }
                    out.push(
                        gv.iter()
                            .map(|s| {
                                parse_rational(s)
                                    .map_err(|e| cfg_err(&format!("gamma[{i}]"), e.to_string()))
                            })
                            .collect::<Result<Vec<Q>>>()?,
                    );
                }
                Some(out)
            }
        };
        let mut tolerances = Tolerances::default();
        let mut monodromy_tol = 1e-5;
        if let Some(t) = &self.tolerances {
            if let Some(x) = t.residual {
                tolerances.residual = x;
            }
            if let Some(x) = t.dedup_radius {
                tolerances.dedup_radius = x;
            }
            if let Some(x) = t.separation_floor {
                tolerances.separation_floor = x;
            }
            if let Some(x) = t.eigen {
                tolerances.eigen = x;
            }
            if let Some(x) = t.monodromy {
                monodromy_tol = x;
            }
        }
        Ok(ValidatedConfig {
            algebra: self.algebra.clone(),
            pipeline: self.pipeline.clone(),
            weights: self.weights.clone(),
            points_q,
            points_c,
            chi,
            gamma,
            tolerances,
            monodromy_tol,
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "algebra": "A1",
            "pipeline": "commute",
            "weights": [[1],[1]],
            "points": ["0", "1"],
            "chi": ["7/5"],
            "seed": 7
        })
    }

    #[test]
    fn valid_config_roundtrip() {
        let cfg = ExperimentConfig::from_json_bytes(base().to_string().as_bytes()).unwrap();
        let v = cfg.validate().unwrap();
        assert_eq!(v.points_q.as_ref().unwrap().len(), 2);
        assert_eq!(v.seed, 7);
    }

    #[test]
    fn schema_violations_name_the_field() {
        let mut bad = base();
        bad["chi"] = serde_json::json!(["1/2", "3"]);
        let cfg = ExperimentConfig::from_json_bytes(bad.to_string().as_bytes()).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("chi"), "{err}");

        let mut bad = base();
        bad["points"] = serde_json::json!(["0", "0"]);
        let err = ExperimentConfig::from_json_bytes(bad.to_string().as_bytes())
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("points"), "{err}");

        let mut bad = base();
        bad["pipeline"] = serde_json::json!("frobnicate");
        let err = ExperimentConfig::from_json_bytes(bad.to_string().as_bytes())
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("pipeline"), "{err}");

        let mut bad = base();
        bad["weights"] = serde_json::json!([[1, 2], [1]]);
        let err = ExperimentConfig::from_json_bytes(bad.to_string().as_bytes())
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("weights[0]"), "{err}");
    }

    #[test]
    fn complex_points_disable_exact_mode() {
        let mut c = base();
        c["pipeline"] = serde_json::json!("bethe-census");
        c["points"] = serde_json::json!([[0.0, 0.5], "1"]);
        let v = ExperimentConfig::from_json_bytes(c.to_string().as_bytes())
            .unwrap()
            .validate()
            .unwrap();
        assert!(v.points_q.is_none());
        assert_eq!(v.points_c[0].im, 0.5);
    }

    #[test]
    fn non_regular_chi_rejected_when_needed() {
        let mut c = base();
        c["pipeline"] = serde_json::json!("bethe-census");
        c["chi"] = serde_json::json!(["0"]);
        let err = ExperimentConfig::from_json_bytes(c.to_string().as_bytes())
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("chi"));
    }
}
