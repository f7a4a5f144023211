//! Run manifests: what was run, on which inputs, producing which bytes.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Hashed {
    pub name: String,
    pub sha256: String,
}

impl Hashed {
    pub fn new(name: impl Into<String>, bytes: &[u8]) -> Hashed {
        Hashed { name: name.into(), sha256: sha256_hex(bytes) }
    }
}

/// Identical `subcommand`, `inputs`, `parameters` and `seed` yield identical
/// output bytes; `wall_time_s` is the only field that varies between runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<Hashed>,
    pub parameters: Value,
    pub seed: u64,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<Hashed>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
