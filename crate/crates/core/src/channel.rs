//! BPSK over the binary-input AWGN channel.
//!
//! Noise for frame `f` is drawn from ChaCha stream `f` under the channel seed,
//! so any frame can be regenerated without replaying the ones before it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub ebno_db: f64,
    /// Code rate `K/N`.
    pub rate: f64,
    pub seed: u64,
    /// Skip the noise entirely (`y = x`).
    #[serde(default)]
    pub clean: bool,
}

impl ChannelConfig {
    pub fn new(ebno_db: f64, rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::InvalidParams(format!(
                "rate must lie in (0, 1), got {rate}"
            )));
        }
        if !ebno_db.is_finite() {
            return Err(Error::InvalidParams(format!(
                "Eb/N0 must be finite, got {ebno_db}"
            )));
        }
        Ok(Self {
            ebno_db,
            rate,
            seed,
            clean: false,
        })
    }

    /// Noise variance for unit-energy BPSK: `1 / (2R·10^(Eb/N0 / 10))`.
    pub fn sigma2(&self) -> f64 {
        ebno_to_sigma2(self.ebno_db, self.rate)
    }
}

pub fn ebno_to_sigma2(ebno_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(ebno_db / 10.0))
}

/// Maps bit `c` to `1 − 2c`.
pub fn modulate(c: &BitVector) -> Vec<f64> {
    c.iter().map(|b| if b { -1.0 } else { 1.0 }).collect()
}

/// The noise stream of one frame.
pub fn frame_rng(seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index);
    rng
}

/// Adds Gaussian noise of variance `cfg.sigma2()` drawn from frame
/// `frame_index`'s stream.
pub fn transmit(x: &[f64], cfg: &ChannelConfig, frame_index: u64) -> Vec<f64> {
    if cfg.clean {
        return x.to_vec();
    }
    let sigma = cfg.sigma2().sqrt();
    let mut rng = frame_rng(cfg.seed, frame_index);
    x.iter()
        .map(|&xi| xi + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Channel LLRs `2y/σ²`.
pub fn llr(y: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    Ok(y.iter().map(|&yi| 2.0 * yi / sigma2).collect())
}
