//! Tested inequalities and their parameter tuples.

use serde::{Deserialize, Serialize};

/// Parameters a certificate was computed under. Unused fields are omitted
/// from the serialized form.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torus: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CertParams {
    pub fn new(d: usize, lambda2: u64) -> Self {
        Self { d: Some(d), lambda2: Some(lambda2), ..Self::default() }
    }
}

/// One tested inequality `left <= C * right`, reported as the ratio
/// `left / right` together with its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub kind: String,
    pub left: f64,
    pub right: f64,
    pub ratio: f64,
    pub params: CertParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl NormCertificate {
    pub fn new(kind: impl Into<String>, left: f64, right: f64, params: CertParams) -> Self {
        let ratio = if right != 0.0 {
            left / right
        } else if left == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self { kind: kind.into(), left, right, ratio, params, witness: None, notes: Vec::new() }
    }

    pub fn with_witness(mut self, witness: serde_json::Value) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}
