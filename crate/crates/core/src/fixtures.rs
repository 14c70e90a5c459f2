//! Golden worked-example data embedded for regression tests: one published
//! dangerous situation, the maneuvers each algorithm produced for it, the
//! scored result rows, and its conjunction tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conjunction::Conjunction;
use crate::session::{DangerousSituation, Maneuver};
use crate::{Error, Result};

static GOLDEN_JSON: &str = include_str!("golden.json");
const GOLDEN_SHA256: &str = "cacc369c34d6952197d44c0596333c99fd50f0b45ba6bfed392f854a87669be5";

/// One row of the golden result table. `dev_mean_anomaly` is None for the
/// threshold row, where no requirement applies to the mean anomaly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenResultRow {
    pub collision_probability: f64,
    pub fuel: f64,
    pub dev_a: f64,
    pub dev_e: f64,
    pub dev_i: f64,
    pub dev_raan: f64,
    pub dev_argp: f64,
    pub dev_mean_anomaly: Option<f64>,
    pub reward: f64,
}

/// The embedded worked example, transcribed verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenExample {
    pub situation: DangerousSituation,
    /// Keyed by algorithm id.
    pub maneuvers: BTreeMap<String, Maneuver>,
    /// Keyed by algorithm id plus the rows "threshold" and
    /// "without_maneuvers".
    pub result_values: BTreeMap<String, GoldenResultRow>,
    pub conjunctions_without_maneuvers: Vec<Conjunction>,
    pub conjunctions_ce_out_of_plane_auto: Vec<Conjunction>,
}

/// Parses and validates the embedded golden example. The raw bytes are
/// checksummed first, so silent corruption of the embed fails loudly.
pub fn load_golden() -> Result<GoldenExample> {
    let digest = hex_digest(GOLDEN_JSON.as_bytes());
    if digest != GOLDEN_SHA256 {
        return Err(Error::ChecksumMismatch {
            expected: GOLDEN_SHA256.to_string(),
            actual: digest,
        });
    }
    let golden: GoldenExample = serde_json::from_str(GOLDEN_JSON)
        .map_err(|e| Error::InvalidInput(format!("golden fixture parse: {e}")))?;
    golden.situation.validate()?;
    if golden.situation.debris.len() != 10 {
        return Err(Error::InvalidInput(
            "golden fixture must have 10 debris".into(),
        ));
    }
    if golden.maneuvers.len() != 9 || golden.result_values.len() != 11 {
        return Err(Error::InvalidInput(
            "golden fixture must carry 9 maneuvers and 11 result rows".into(),
        ));
    }
    for algo in crate::optimize::Algorithm::ALL {
        if !golden.maneuvers.contains_key(algo.id()) {
            return Err(Error::InvalidInput(format!(
                "golden fixture missing maneuver row {:?}",
                algo.id()
            )));
        }
    }
    if golden.conjunctions_without_maneuvers.len() != 10
        || golden.conjunctions_ce_out_of_plane_auto.len() != 4
    {
        return Err(Error::InvalidInput(
            "golden fixture conjunction tables have the wrong shape".into(),
        ));
    }
    Ok(golden)
}

/// The canonical serialization of the golden situation (the same schema the
/// CLI reads and writes), for use as an example input file.
pub fn golden_situation_json() -> Result<String> {
    let golden = load_golden()?;
    serde_json::to_string_pretty(&golden.situation)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::InvalidInput(format!("golden serialization: {e}")))
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
