use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StudyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    FloatUniform { low: f64, high: f64 },
    FloatLogUniform { low: f64, high: f64 },
    IntUniform { low: i64, high: i64 },
    Categorical { choices: Vec<String> },
}

/// A named search dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn float(name: &str, low: f64, high: f64) -> Self {
        ParamSpec { name: name.into(), kind: ParamKind::FloatUniform { low, high } }
    }

    pub fn log_float(name: &str, low: f64, high: f64) -> Self {
        ParamSpec { name: name.into(), kind: ParamKind::FloatLogUniform { low, high } }
    }

    pub fn int(name: &str, low: i64, high: i64) -> Self {
        ParamSpec { name: name.into(), kind: ParamKind::IntUniform { low, high } }
    }

    pub fn categorical(name: &str, choices: &[&str]) -> Self {
        ParamSpec {
            name: name.into(),
            kind: ParamKind::Categorical { choices: choices.iter().map(|c| c.to_string()).collect() },
        }
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let invalid = |why: &str| Err(StudyError::InvalidSpec { name: self.name.clone(), reason: why.into() });
        match &self.kind {
            ParamKind::FloatUniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return invalid("need finite low < high");
                }
            }
            ParamKind::FloatLogUniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && *low > 0.0 && low < high) {
                    return invalid("need 0 < low < high");
                }
            }
            ParamKind::IntUniform { low, high } => {
                if low >= high {
                    return invalid("need low < high");
                }
            }
            ParamKind::Categorical { choices } => {
                if choices.is_empty() {
                    return invalid("no choices");
                }
                let mut sorted = choices.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != choices.len() {
                    return invalid("duplicate choices");
                }
            }
        }
        Ok(())
    }

    /// Whether `value` is admissible for this spec.
    pub fn contains(&self, value: &ParamValue) -> bool {
        match (&self.kind, value) {
            (ParamKind::FloatUniform { low, high }, ParamValue::Float(v))
            | (ParamKind::FloatLogUniform { low, high }, ParamValue::Float(v)) => *low <= *v && *v <= *high,
            (ParamKind::IntUniform { low, high }, ParamValue::Int(v)) => low <= v && v <= high,
            (ParamKind::Categorical { choices }, ParamValue::Categorical(c)) => choices.contains(c),
            _ => false,
        }
    }

    /// Independent draw: uniform, log-uniform for the log kind.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match &self.kind {
            ParamKind::FloatUniform { low, high } => ParamValue::Float(rng.random_range(*low..=*high)),
            ParamKind::FloatLogUniform { low, high } => {
                let v = rng.random_range(low.ln()..=high.ln()).exp();
                ParamValue::Float(v.clamp(*low, *high))
            }
            ParamKind::IntUniform { low, high } => ParamValue::Int(rng.random_range(*low..=*high)),
            ParamKind::Categorical { choices } => {
                ParamValue::Categorical(choices[rng.random_range(0..choices.len())].clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Categorical(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Float(v) => Some(*v),
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Categorical(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Categorical(c) => Some(c),
            _ => None,
        }
    }
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Categorical(c) => f.write_str(c),
        }
    }
}
