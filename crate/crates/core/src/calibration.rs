//! Noise calibration for the unprotected design.
//!
//! Walk an ascending σ grid; at each step run CPA on 1000 unprotected traces
//! for every calibration seed. The calibrated σ is the last grid point before
//! the first one where the success rate falls below 95%.
//!
//! Calibration and evaluation use disjoint seed lists.

use rayon::prelude::*;

use crate::attack::{cpa_attack, measurements_to_disclosure, Attack};
use crate::error::Result;
use crate::leakage::{generate_set, LeakConfig};

/// Output of [`calibrate`] with the default settings, pinned.
pub const CALIBRATED_SIGMA: f64 = 8.5;

pub const SIGMA_STEP: f64 = 0.25;
pub const MAX_SIGMA: f64 = 20.0;
pub const CALIBRATION_TRACES: usize = 1000;
pub const TARGET_SUCCESS: f64 = 0.95;
pub const CALIBRATION_SEED_COUNT: u32 = 50;
pub const EVALUATION_SEED_COUNT: u32 = 20;

/// Key used for calibration and evaluation runs.
pub const EVALUATION_KEY: [u8; 16] = [
    0x3C, 0xA1, 0x5F, 0x09, 0x72, 0xE4, 0x1B, 0xD6, 0x88, 0x2E, 0x47, 0xC3, 0x90, 0x6D, 0xF1, 0x35,
];

pub fn calibration_seeds() -> Vec<u32> {
    (1..=CALIBRATION_SEED_COUNT)
        .map(|i| 0xCA1B_0000 | i)
        .collect()
}

pub fn evaluation_seeds() -> Vec<u32> {
    (1..=EVALUATION_SEED_COUNT)
        .map(|i| 0xE7A1_0000 | i)
        .collect()
}

/// Fraction of seeds for which CPA ranks `key[0]` first.
pub fn success_rate(sigma: f64, n: usize, key: &[u8; 16], seeds: &[u32]) -> Result<f64> {
    let cfg = LeakConfig::unprotected(sigma);
    let hits = seeds
        .par_iter()
        .map(|&seed| {
            let ts = generate_set(n, key, &cfg, seed, None)?;
            Ok(cpa_attack(&ts, 0)?.best_guess() == key[0])
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / seeds.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub sigma: f64,
    /// (σ, success rate) for every grid point visited.
    pub grid: Vec<(f64, f64)>,
}

pub fn calibrate() -> Result<Calibration> {
    let seeds = calibration_seeds();
    let mut grid = Vec::new();
    let mut sigma = 0.0;
    for step in 1.. {
        let candidate = step as f64 * SIGMA_STEP;
        if candidate > MAX_SIGMA {
            break;
        }
        let rate = success_rate(candidate, CALIBRATION_TRACES, &EVALUATION_KEY, &seeds)?;
        grid.push((candidate, rate));
        if rate < TARGET_SUCCESS {
            break;
        }
        sigma = candidate;
    }
    Ok(Calibration { sigma, grid })
}

/// Disclosure point per seed, CPA scanned in steps of `step`.
pub fn disclosure_counts(
    sigma: f64,
    n: usize,
    step: usize,
    key: &[u8; 16],
    seeds: &[u32],
) -> Result<Vec<Option<usize>>> {
    let cfg = LeakConfig::unprotected(sigma);
    seeds
        .par_iter()
        .map(|&seed| {
            let ts = generate_set(n, key, &cfg, seed, None)?;
            Ok(measurements_to_disclosure(&ts, 0, key[0], Attack::Cpa, step)?.disclosed_at)
        })
        .collect()
}

/// Median with "not disclosed" counted as larger than any count.
pub fn median_disclosure(counts: &[Option<usize>]) -> Option<usize> {
    let mut sorted: Vec<usize> = counts.iter().map(|c| c.unwrap_or(usize::MAX)).collect();
    sorted.sort_unstable();
    let mid = sorted.get(sorted.len().saturating_sub(1) / 2).copied()?;
    (mid != usize::MAX).then_some(mid)
}
