use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CLUSTER_COUNT: usize = 128;
pub const DEFAULT_MASK_DENSITY: f64 = 0.5;

/// Binary inclusion vector over clusters: bit 1 = cluster included in the
/// model input, 0 = masked out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MaskVector {
    bits: Vec<bool>,
}

impl MaskVector {
    pub fn new(bits: Vec<bool>) -> MaskVector {
        MaskVector { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn included(&self, cluster: usize) -> bool {
        self.bits[cluster]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_masked(&self) -> usize {
        self.bits.iter().filter(|b| !**b).count()
    }

    /// "0101..." encoding used by the ledger file and provider payloads.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(s: &str) -> Result<MaskVector> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Data(format!("invalid mask bit {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(MaskVector { bits })
    }
}

/// Sample a mask: each cluster is independently masked out (bit 0) with
/// probability `density`.
pub fn sample_mask<R: Rng>(rng: &mut R, clusters: usize, density: f64) -> Result<MaskVector> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Config(format!("mask density must be in [0,1], got {density}")));
    }
    let bits = (0..clusters).map(|_| !(rng.gen::<f64>() < density)).collect();
    Ok(MaskVector { bits })
}
