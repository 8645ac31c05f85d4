//! Line-delimited JSON messages exchanged with operator workers.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::problems::{
    is_permutation, Category, Encoding, Genome, ObjectiveBounds, Payload, ProblemInstance,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Problem description handed to the operator alongside each load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub category: Category,
    pub encoding: Encoding,
    pub n_var: usize,
    pub k: usize,
    pub bounds: Option<VariableBounds>,
    pub objective_bounds: ObjectiveBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_tour: Option<bool>,
}

impl ProblemMeta {
    pub fn from_instance(instance: &ProblemInstance) -> Self {
        let (weights, capacity, closed_tour) = match &instance.payload {
            Payload::Mokp { weights, capacity, .. } => (Some(weights.clone()), Some(*capacity), None),
            Payload::Motsp { closed_tour, .. } => (None, None, Some(*closed_tour)),
            Payload::Cmop { .. } => (None, None, None),
        };
        ProblemMeta {
            category: instance.category,
            encoding: instance.encoding,
            n_var: instance.n_var,
            k: instance.k,
            bounds: instance
                .variable_bounds()
                .map(|(lower, upper)| VariableBounds { lower, upper }),
            objective_bounds: instance.bounds.clone(),
            weights,
            capacity,
            closed_tour,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Request {
    Load {
        operator_source: String,
        problem_meta: ProblemMeta,
    },
    Step {
        seed: u64,
        parents: Vec<Vec<Value>>,
        parent_objectives: Vec<Vec<f64>>,
    },
    Shutdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Load,
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Reply {
    Ready,
    Error {
        phase: Phase,
        message: String,
        #[serde(default)]
        traceback: String,
    },
    Offspring {
        genomes: Vec<Value>,
    },
}

impl Reply {
    pub fn error(phase: Phase, message: impl Into<String>, traceback: impl Into<String>) -> Self {
        Reply::Error {
            phase,
            message: message.into(),
            traceback: traceback.into(),
        }
    }
}

/// Parses one offspring from its wire form and checks it against the instance.
pub fn decode_genome(instance: &ProblemInstance, value: &Value) -> Result<Genome, String> {
    let items = value.as_array().ok_or_else(|| format!("expected an array, got {value}"))?;
    if items.len() != instance.n_var {
        return Err(format!("expected {} values, got {}", instance.n_var, items.len()));
    }
    let genome = match instance.encoding {
        Encoding::Real => Genome::Real(
            items
                .iter()
                .map(|v| v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| format!("non-finite or non-numeric value {v}")))
                .collect::<Result<_, _>>()?,
        ),
        Encoding::Bitstring => Genome::Bits(
            items
                .iter()
                .map(|v| match v.as_u64() {
                    Some(0) => Ok(false),
                    Some(1) => Ok(true),
                    _ => Err(format!("bit value {v} is not 0 or 1")),
                })
                .collect::<Result<_, _>>()?,
        ),
        Encoding::Permutation => {
            let p: Vec<usize> = items
                .iter()
                .map(|v| v.as_u64().map(|x| x as usize).ok_or_else(|| format!("city index {v} is not a nonnegative integer")))
                .collect::<Result<_, _>>()?;
            if !is_permutation(&p) {
                return Err(format!("not a permutation of 0..{}", instance.n_var));
            }
            Genome::Perm(p)
        }
    };
    instance.validate_genome(&genome).map_err(|e| e.to_string())?;
    if !instance.feasible(&genome) {
        return Err(format!(
            "packed weight {} exceeds the capacity",
            instance.total_weight(&genome)
        ));
    }
    Ok(genome)
}
