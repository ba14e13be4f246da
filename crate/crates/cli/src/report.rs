//! Self-contained JSON run reports.

use fdban_core::metrics::{Bound, EmbeddingCertificate};
use fdban_core::rational::rat_string;
use fdban_core::{Matrix, NormedSpace, Rat};
use serde_json::{json, Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Numbers as JSON; non-finite values become the strings `"inf"`, `"-inf"`, `"nan"`
/// and `-0.0` is written as `0.0`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(if x == 0.0 { 0.0 } else { x })
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn rat(x: &Rat) -> Value {
    json!(rat_string(x))
}

pub fn opt_rat(x: Option<&Rat>) -> Value {
    x.map_or(Value::Null, rat)
}

pub fn matrix(m: &Matrix) -> Value {
    serde_json::to_value(fdban_core::spaces::MapDesc::from_matrix(m)).unwrap_or(Value::Null)
}

pub fn space(s: &NormedSpace) -> Value {
    json!({ "label": s.label(), "dim": s.dim(), "description": s.to_json() })
}

pub fn bound(b: &Bound) -> Value {
    json!({
        "value": num(b.value),
        "lower": num(b.lower),
        "upper": num(b.upper),
        "exact": opt_rat(b.exact.as_ref()),
        "method": format!("{:?}", b.method).to_lowercase(),
        "certified": b.certified,
    })
}

pub fn certificate(c: &EmbeddingCertificate) -> Value {
    json!({
        "defect": num(c.defect),
        "defect_lower": num(c.defect_lower),
        "log_norm_upper": num(c.upper),
        "log_inverse_gain_upper": num(c.lower),
        "distortion": num(c.distortion()),
        "distortion_exact": opt_rat(c.distortion_exact().as_ref()),
        "exactness": format!("{:?}", c.exactness),
        "norm": bound(&c.norm),
        "gain": bound(&c.gain),
        "matrix": matrix(c.map.matrix()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Negative,
    InputError,
    Budget,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Negative => 1,
            Status::InputError => 2,
            Status::Budget => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Negative => "negative",
            Status::InputError => "input-error",
            Status::Budget => "budget",
        }
    }
}

/// Everything needed to reproduce a run. Wall time is only written on request,
/// since it would break byte stability.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: Vec<String>,
    pub seed: u64,
    pub tolerances: Map<String, Value>,
    pub inputs: Vec<Value>,
    pub status: Status,
    pub result: Value,
    pub error: Option<Value>,
    pub wall_time: Option<f64>,
}

impl RunReport {
    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command));
        m.insert("version".into(), json!(VERSION));
        m.insert("seed".into(), json!(self.seed));
        m.insert("tolerances".into(), Value::Object(self.tolerances.clone()));
        m.insert("inputs".into(), Value::Array(self.inputs.clone()));
        m.insert("status".into(), json!(self.status.name()));
        m.insert("exit_code".into(), json!(self.status.code()));
        m.insert("result".into(), self.result.clone());
        if let Some(e) = &self.error {
            m.insert("error".into(), e.clone());
        }
        if let Some(t) = self.wall_time {
            m.insert("wall_time_seconds".into(), num(t));
        }
        Value::Object(m)
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_are_strings() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(f64::NAN), json!("nan"));
        assert_eq!(num(0.5), json!(0.5));
        assert_eq!(num(-0.0).to_string(), "0.0");
    }

    #[test]
    fn render_is_stable() {
        let r = RunReport {
            command: vec!["bm".into()],
            seed: 3,
            tolerances: Map::new(),
            inputs: vec![],
            status: Status::Ok,
            result: json!({"b": 1, "a": 2}),
            error: None,
            wall_time: None,
        };
        assert_eq!(r.render(), r.clone().render());
        assert!(!r.render().contains("wall_time"));
        assert!(r.render().find("\"a\"").unwrap() < r.render().find("\"b\"").unwrap());
    }
}
