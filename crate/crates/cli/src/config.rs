//! Scenario configuration: JSON schema, per-field parsing and validation.

use std::path::PathBuf;

use lowrank_core::estimate::OrderChoice;
use lowrank_core::RatTF;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    LowRank,
    WithInput,
}

/// True transfer functions; `w1, w2` for low-rank scenarios and
/// `f1, f2, k1, k2` for scenarios with an external input.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1: Option<RatTF>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2: Option<RatTF>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<RatTF>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<RatTF>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<RatTF>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<RatTF>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub e_variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_variance: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmaOrders {
    pub p: usize,
    pub q: usize,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    /// AR order fitted to each output channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar_order: Option<usize>,
    /// Orders of the feedback-channel fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<OrderChoice>,
    #[serde(default)]
    pub pin_b0: bool,
    /// ARMA orders for the spectral factor of `y1` (low rank) or for `K1`
    /// (external input).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arma: Option<ArmaOrders>,
    #[serde(default = "yes")]
    pub arma_refine: bool,
    /// Stage-1 orders per output channel (external input only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_orders: Option<[OrderChoice; 2]>,
    /// Also evaluate the exact chain on the true system.
    #[serde(default)]
    pub exact_chain: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub kind: Kind,
    pub system: SystemSpec,
    pub n: usize,
    pub burn_in: usize,
    pub noise: NoiseConfig,
    pub estimation: EstimationConfig,
    pub runs: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

const FIELDS: [&str; 10] = [
    "scenario_id",
    "kind",
    "system",
    "n",
    "burn_in",
    "noise",
    "estimation",
    "runs",
    "master_seed",
    "output_dir",
];

fn take<T: DeserializeOwned>(
    map: &Map<String, Value>,
    key: &str,
    errs: &mut Vec<FieldError>,
) -> Option<T> {
    match map.get(key) {
        None => {
            errs.push(FieldError::new(key, "missing"));
            None
        }
        Some(v) => match T::deserialize(v) {
            Ok(t) => Some(t),
            Err(e) => {
                errs.push(FieldError::new(key, e.to_string()));
                None
            }
        },
    }
}

impl ScenarioConfig {
    /// Parses and validates a config, reporting every offending field.
    pub fn from_json(text: &str) -> Result<Self, Vec<FieldError>> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| vec![FieldError::new("$", format!("invalid JSON: {e}"))])?;
        let Value::Object(map) = value else {
            return Err(vec![FieldError::new("$", "expected a JSON object")]);
        };
        let mut errs: Vec<FieldError> = map
            .keys()
            .filter(|k| !FIELDS.contains(&k.as_str()))
            .map(|k| FieldError::new(k.as_str(), "unknown field"))
            .collect();

        let scenario_id = take::<String>(&map, "scenario_id", &mut errs);
        let kind = take::<Kind>(&map, "kind", &mut errs);
        let system = take::<SystemSpec>(&map, "system", &mut errs);
        let n = take::<usize>(&map, "n", &mut errs);
        let burn_in = match map.get("burn_in") {
            None => Some(DEFAULT_BURN_IN),
            Some(_) => take::<usize>(&map, "burn_in", &mut errs),
        };
        let noise = take::<NoiseConfig>(&map, "noise", &mut errs);
        let estimation = take::<EstimationConfig>(&map, "estimation", &mut errs);
        let runs = take::<usize>(&map, "runs", &mut errs);
        let master_seed = take::<u64>(&map, "master_seed", &mut errs);
        let output_dir = match map.get("output_dir") {
            None | Some(Value::Null) => Some(None),
            Some(_) => take::<PathBuf>(&map, "output_dir", &mut errs).map(Some),
        };

        match (
            scenario_id,
            kind,
            system,
            n,
            burn_in,
            noise,
            estimation,
            runs,
            master_seed,
            output_dir,
        ) {
            (
                Some(scenario_id),
                Some(kind),
                Some(system),
                Some(n),
                Some(burn_in),
                Some(noise),
                Some(estimation),
                Some(runs),
                Some(master_seed),
                Some(output_dir),
            ) if errs.is_empty() => {
                let cfg = ScenarioConfig {
                    scenario_id,
                    kind,
                    system,
                    n,
                    burn_in,
                    noise,
                    estimation,
                    runs,
                    master_seed,
                    output_dir,
                };
                let errs = cfg.validate();
                if errs.is_empty() {
                    Ok(cfg)
                } else {
                    Err(errs)
                }
            }
            _ => Err(errs),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Semantic checks; every violation is reported.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        if self.scenario_id.is_empty() {
            errs.push(FieldError::new("scenario_id", "must be nonempty"));
        }
        if self.n == 0 {
            errs.push(FieldError::new("n", "must be at least 1"));
        }
        if self.runs == 0 {
            errs.push(FieldError::new("runs", "must be at least 1"));
        }
        if !(self.noise.e_variance >= 0.0 && self.noise.e_variance.is_finite()) {
            errs.push(FieldError::new(
                "noise.e_variance",
                "must be finite and >= 0",
            ));
        }
        let est = &self.estimation;
        match self.kind {
            Kind::LowRank => {
                for (name, w) in [("w1", &self.system.w1), ("w2", &self.system.w2)] {
                    match w {
                        None => errs.push(FieldError::new(format!("system.{name}"), "missing")),
                        Some(w) => check_stable_causal(&mut errs, name, w, false),
                    }
                }
                for (name, w) in [
                    ("f1", &self.system.f1),
                    ("f2", &self.system.f2),
                    ("k1", &self.system.k1),
                    ("k2", &self.system.k2),
                ] {
                    if w.is_some() {
                        errs.push(FieldError::new(
                            format!("system.{name}"),
                            "not used by low_rank scenarios",
                        ));
                    }
                }
                if self.noise.u_variance.is_some() {
                    errs.push(FieldError::new(
                        "noise.u_variance",
                        "not used by low_rank scenarios",
                    ));
                }
                if est.input_orders.is_some() {
                    errs.push(FieldError::new(
                        "estimation.input_orders",
                        "not used by low_rank scenarios",
                    ));
                }
                if est.ar_order.is_none() && est.relation.is_none() && est.arma.is_none() {
                    errs.push(FieldError::new(
                        "estimation",
                        "at least one of ar_order, relation, arma is required",
                    ));
                }
            }
            Kind::WithInput => {
                for (name, w, strict) in [
                    ("f1", &self.system.f1, true),
                    ("f2", &self.system.f2, true),
                    ("k1", &self.system.k1, false),
                    ("k2", &self.system.k2, false),
                ] {
                    match w {
                        None => errs.push(FieldError::new(format!("system.{name}"), "missing")),
                        Some(w) => check_stable_causal(&mut errs, name, w, strict),
                    }
                }
                for (name, w) in [("w1", &self.system.w1), ("w2", &self.system.w2)] {
                    if w.is_some() {
                        errs.push(FieldError::new(
                            format!("system.{name}"),
                            "not used by with_input scenarios",
                        ));
                    }
                }
                match self.noise.u_variance {
                    None => errs.push(FieldError::new("noise.u_variance", "missing")),
                    Some(v) if !(v > 0.0 && v.is_finite()) => errs.push(FieldError::new(
                        "noise.u_variance",
                        "must be finite and > 0",
                    )),
                    _ => {}
                }
                if est.input_orders.is_none() {
                    errs.push(FieldError::new("estimation.input_orders", "missing"));
                }
                if est.relation.is_none() {
                    errs.push(FieldError::new("estimation.relation", "missing"));
                }
                if est.arma.is_none() {
                    errs.push(FieldError::new("estimation.arma", "missing"));
                }
                if est.ar_order.is_some() {
                    errs.push(FieldError::new(
                        "estimation.ar_order",
                        "not used by with_input scenarios",
                    ));
                }
            }
        }
        errs
    }
}

fn check_stable_causal(errs: &mut Vec<FieldError>, name: &str, w: &RatTF, strict: bool) {
    let field = format!("system.{name}");
    if strict && !w.is_strictly_causal() {
        errs.push(FieldError::new(
            field,
            format!("{w} must be strictly causal"),
        ));
        return;
    }
    if !w.is_causal() {
        errs.push(FieldError::new(field, format!("{w} is not causal")));
        return;
    }
    match w.poles() {
        Err(e) => errs.push(FieldError::new(field, e.to_string())),
        Ok(poles) => {
            for p in poles
                .iter()
                .filter(|p| p.im >= 0.0 && p.norm() >= 1.0 - lowrank_core::ratfun::TOL_CIRCLE)
            {
                errs.push(FieldError::new(
                    field.clone(),
                    format!("unstable pole at {} (|p| = {})", p, p.norm()),
                ));
            }
        }
    }
}
