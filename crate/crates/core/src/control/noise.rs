use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ControlError;

/// Word dropout followed by a bounded local shuffle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub drop_prob: f64,
    pub shuffle_window: usize,
}

impl NoiseConfig {
    pub const IDENTITY: NoiseConfig = NoiseConfig {
        drop_prob: 0.0,
        shuffle_window: 0,
    };

    pub fn new(drop_prob: f64, shuffle_window: usize) -> Result<Self, ControlError> {
        if !(0.0..1.0).contains(&drop_prob) {
            return Err(ControlError::BadNoise(drop_prob));
        }
        Ok(NoiseConfig {
            drop_prob,
            shuffle_window,
        })
    }
}

/// Drops each token with `drop_prob` (always keeping at least one), then
/// shuffles so that no token moves more than `shuffle_window` places.
///
/// Shuffling sorts by `i + u_i` with `u_i ~ U[0, window + 1)`; a token can only
/// be overtaken by tokens fewer than `window + 1` positions away.
pub fn noise<S: Clone>(tokens: &[S], config: NoiseConfig, seed: u64) -> Vec<S> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep: Vec<bool> = tokens
        .iter()
        .map(|_| rng.gen::<f64>() >= config.drop_prob)
        .collect();
    let mut kept: Vec<S> = tokens
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(t, _)| t.clone())
        .collect();
    if kept.is_empty() {
        kept.push(tokens[rng.gen_range(0..tokens.len())].clone());
    }
    if config.shuffle_window == 0 {
        return kept;
    }
    let span = (config.shuffle_window + 1) as f64;
    let mut keyed: Vec<(f64, S)> = kept
        .into_iter()
        .enumerate()
        .map(|(i, t)| (i as f64 + rng.gen::<f64>() * span, t))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    keyed.into_iter().map(|(_, t)| t).collect()
}
