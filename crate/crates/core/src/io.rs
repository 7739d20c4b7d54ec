//! State file format.
//!
//! ```json
//! {"n": 3, "h": [[0.7071067811865476, 0.0], [0, 0], [0, 0]],
//!  "h_prime": [[0, 0], [0, 0], [0.7071067811865476, 0.0]]}
//! ```
//!
//! Both arrays hold `n` `[re, im]` pairs indexed by the Dicke weight `k`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::state::{Amplitude, NearSymmetricState};

/// Files whose squared norm is within this distance of 1 are rescaled;
/// anything further off is rejected.
pub const FILE_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub n: usize,
    pub h: Vec<[f64; 2]>,
    pub h_prime: Vec<[f64; 2]>,
}

impl From<&NearSymmetricState> for StateFile {
    fn from(s: &NearSymmetricState) -> Self {
        let pairs = |v: &[Amplitude]| v.iter().map(|z| [z.re, z.im]).collect();
        StateFile {
            n: s.n(),
            h: pairs(s.h()),
            h_prime: pairs(s.h_prime()),
        }
    }
}

fn amplitudes(root: &Value, field: &str, n: usize) -> Result<Vec<Amplitude>> {
    let arr = root
        .get(field)
        .ok_or_else(|| Error::parse(field, "missing"))?
        .as_array()
        .ok_or_else(|| Error::parse(field, "expected an array"))?;
    if arr.len() != n {
        return Err(Error::parse(field, format!("expected {n} entries, found {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(k, v)| {
            let name = format!("{field}[{k}]");
            let pair = v
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::parse(&name, "expected a [re, im] pair"))?;
            let mut parts = [0.0; 2];
            for (slot, x) in parts.iter_mut().zip(pair) {
                let x = x
                    .as_f64()
                    .ok_or_else(|| Error::parse(&name, "expected numbers"))?;
                if !x.is_finite() {
                    return Err(Error::parse(&name, "non-finite number"));
                }
                *slot = x;
            }
            Ok(Complex64::new(parts[0], parts[1]))
        })
        .collect()
}

/// Parses and validates a state file, rescaling it to unit norm.
pub fn parse_state(text: &str) -> Result<NearSymmetricState> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| Error::parse("<document>", e.to_string()))?;
    if !root.is_object() {
        return Err(Error::parse("<document>", "expected a JSON object"));
    }
    let n = root
        .get("n")
        .ok_or_else(|| Error::parse("n", "missing"))?
        .as_u64()
        .ok_or_else(|| Error::parse("n", "expected a non-negative integer"))? as usize;
    if n < 3 {
        return Err(Error::parse("n", format!("need at least 3 parties, got {n}")));
    }
    if n > 24 {
        return Err(Error::parse("n", format!("{n} parties exceed the dense-vector limit of 24")));
    }
    let h = amplitudes(&root, "h", n)?;
    let h_prime = amplitudes(&root, "h_prime", n)?;
    let norm: f64 = h.iter().chain(&h_prime).map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > FILE_NORM_TOL {
        return Err(Error::parse("h, h_prime", format!("squared norm {norm} is not 1")));
    }
    NearSymmetricState::from_unnormalized(h, h_prime)
}

pub fn state_to_json(s: &NearSymmetricState) -> String {
    serde_json::to_string_pretty(&StateFile::from(s)).expect("state file serializes")
}

/// Hex SHA-256 of the compact state file.
pub fn state_digest(s: &NearSymmetricState) -> String {
    let text = serde_json::to_string(&StateFile::from(s)).expect("state file serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}
