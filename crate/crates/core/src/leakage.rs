//! Simulated first-round power traces under a Hamming-weight model.
//!
//! One sample per modeled leak point; each sample is the sum of the Hamming
//! weights of the values present at that point plus Gaussian noise.
//!
//! Unprotected (lookup table) leak points: `x = pt ⊕ k`, `S(x)`.
//!
//! Protected (composite S-box under the block's scheduled set `i`):
//!
//! | # | point             | value(s)                                   |
//! |---|-------------------|--------------------------------------------|
//! | 0 | `add_round_key`   | `x`                                        |
//! | 1 | `mapped`          | `δᵢ(x)`                                    |
//! | 2 | `sq_lambda`       | `λ·h²`                                     |
//! | 3 | `cross`           | `(h ⊕ l)·l`                                |
//! | 4 | `norm`            | `d`                                        |
//! | 5 | `norm_inv`        | `d⁻¹`                                      |
//! | 6 | `pre_final`       | tower inverse `v`                          |
//! | 7 | `output_register` | `δᵢ⁻¹·v`, plus `δⱼ⁻¹·v`, `δₖ⁻¹·v` as decoys |
//! | 8 | `sbox_output`     | `S(x)`, only with `expose_sbox_output`     |
//!
//! The affine map after the output register is folded into the following
//! linear layer and has no leak point of its own unless
//! `expose_sbox_output` is set. With that point present the S-box output
//! leaks exactly as in the unprotected design.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::aes::{sbox_composite_stages, sbox_lut, Aes128, BlockSbox, BLOCK_LEN};
use crate::error::{Error, Result};
use crate::iso::{Catalog, ParameterSet};
use crate::sched::{BlockChoice, RandomizationContext};

const PLAINTEXT_DOMAIN: u64 = 0x7074_5f73_7472_6561;
const NOISE_DOMAIN: u64 = 0x6e6f_6973_655f_7374;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Unprotected,
    Protected,
}

impl Mode {
    pub fn code(self) -> u8 {
        match self {
            Mode::Unprotected => 0,
            Mode::Protected => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Mode::Unprotected),
            1 => Some(Mode::Protected),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Unprotected => "unprotected",
            Mode::Protected => "protected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakConfig {
    pub mode: Mode,
    pub decoys: bool,
    /// Standard deviation of the additive noise, in Hamming-weight units.
    pub noise_sigma: f64,
    pub target_byte: u8,
    /// Adds the Hamming weights of the other 15 S-box outputs to every sample.
    pub algorithmic_noise: bool,
    /// Protected mode only: adds a leak point for the post-affine S-box output.
    pub expose_sbox_output: bool,
}

impl LeakConfig {
    pub fn unprotected(noise_sigma: f64) -> Self {
        LeakConfig {
            mode: Mode::Unprotected,
            decoys: false,
            noise_sigma,
            target_byte: 0,
            algorithmic_noise: false,
            expose_sbox_output: false,
        }
    }

    pub fn protected(noise_sigma: f64, decoys: bool) -> Self {
        LeakConfig {
            mode: Mode::Protected,
            decoys,
            ..LeakConfig::unprotected(noise_sigma)
        }
    }

    pub fn samples_per_trace(&self) -> usize {
        match self.mode {
            Mode::Unprotected => 2,
            Mode::Protected => 8 + usize::from(self.expose_sbox_output),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::Config(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        if self.target_byte as usize >= BLOCK_LEN {
            return Err(Error::Config(format!(
                "target byte must be in 0..16, got {}",
                self.target_byte
            )));
        }
        if self.mode == Mode::Unprotected && (self.decoys || self.expose_sbox_output) {
            return Err(Error::Config(
                "decoys and the exposed S-box output only apply to protected mode".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakPoint {
    pub name: &'static str,
    pub values: Vec<u8>,
}

impl LeakPoint {
    fn single(name: &'static str, value: u8) -> Self {
        LeakPoint {
            name,
            values: vec![value],
        }
    }

    pub fn hamming_weight(&self) -> u32 {
        self.values.iter().map(|v| v.count_ones()).sum()
    }
}

/// The S-box implementation whose intermediates leak.
#[derive(Debug, Clone, Copy)]
pub enum LeakBackend<'a> {
    Unprotected,
    Protected {
        set: &'a ParameterSet,
        decoys: Option<[&'a ParameterSet; 2]>,
        expose_sbox_output: bool,
    },
}

/// Ordered round-1 intermediates for one state byte.
pub fn leak_points(pt_byte: u8, key_byte: u8, backend: LeakBackend<'_>) -> Vec<LeakPoint> {
    let x = pt_byte ^ key_byte;
    match backend {
        LeakBackend::Unprotected => vec![
            LeakPoint::single("add_round_key", x),
            LeakPoint::single("sbox_output", sbox_lut(x)),
        ],
        LeakBackend::Protected {
            set,
            decoys,
            expose_sbox_output,
        } => {
            let st = sbox_composite_stages(x, set);
            let inv = st.inversion;
            let mut register = vec![st.unmapped];
            if let Some(pair) = decoys {
                register.extend(pair.iter().map(|d| d.delta_inv.apply(st.pre_final())));
            }
            let mut points = vec![
                LeakPoint::single("add_round_key", x),
                LeakPoint::single("mapped", st.mapped),
                LeakPoint::single("sq_lambda", inv.sq_lambda),
                LeakPoint::single("cross", inv.cross),
                LeakPoint::single("norm", inv.norm),
                LeakPoint::single("norm_inv", inv.norm_inv),
                LeakPoint::single("pre_final", inv.result),
                LeakPoint {
                    name: "output_register",
                    values: register,
                },
            ];
            if expose_sbox_output {
                points.push(LeakPoint::single("sbox_output", st.output));
            }
            points
        }
    }
}

/// Noise-free sample vector for one byte.
pub fn hamming_samples(pt_byte: u8, key_byte: u8, backend: LeakBackend<'_>) -> Vec<u32> {
    leak_points(pt_byte, key_byte, backend)
        .iter()
        .map(LeakPoint::hamming_weight)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub plaintext: [u8; BLOCK_LEN],
    pub ciphertext: [u8; BLOCK_LEN],
    pub samples: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub config: LeakConfig,
    pub key_fingerprint: [u8; 16],
    /// Generation seed; not stored in trace files.
    pub seed: Option<u32>,
    pub traces: Vec<Trace>,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn samples_per_trace(&self) -> usize {
        self.config.samples_per_trace()
    }

    /// The first `n` traces.
    pub fn prefix(&self, n: usize) -> TraceSet {
        TraceSet {
            traces: self.traces[..n.min(self.traces.len())].to_vec(),
            ..self.clone()
        }
    }
}

/// First 16 bytes of SHA-256 over the key.
pub fn key_fingerprint(key: &[u8]) -> [u8; 16] {
    let digest = Sha256::digest(key);
    let mut out = [0u8; 16];
    out.copy_from_slice(&digest[..16]);
    out
}

fn backend_for<'a>(
    cfg: &LeakConfig,
    choice: Option<BlockChoice>,
    catalog: Option<&'a Catalog>,
) -> (LeakBackend<'a>, BlockSbox<'a>) {
    match (cfg.mode, choice, catalog) {
        (Mode::Protected, Some(choice), Some(catalog)) => {
            let set = &catalog.sets()[choice.set];
            let decoys = choice
                .decoys
                .map(|[a, b]| [&catalog.sets()[a], &catalog.sets()[b]]);
            (
                LeakBackend::Protected {
                    set,
                    decoys,
                    expose_sbox_output: cfg.expose_sbox_output,
                },
                BlockSbox::Composite(set),
            )
        }
        _ => (LeakBackend::Unprotected, BlockSbox::Lut),
    }
}

fn render_trace<R: Rng>(
    plaintext: [u8; BLOCK_LEN],
    cipher: &Aes128,
    cfg: &LeakConfig,
    choice: Option<BlockChoice>,
    catalog: Option<&Catalog>,
    noise_rng: &mut R,
) -> Trace {
    let (backend, sbox) = backend_for(cfg, choice, catalog);
    let key = cipher.schedule().round_key(0);
    let target = cfg.target_byte as usize;
    let mut weights = hamming_samples(plaintext[target], key[target], backend);
    if cfg.algorithmic_noise {
        let other: u32 = (0..BLOCK_LEN)
            .filter(|&b| b != target)
            .map(|b| sbox_lut(plaintext[b] ^ key[b]).count_ones())
            .sum();
        weights.iter_mut().for_each(|w| *w += other);
    }
    let normal = (cfg.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, cfg.noise_sigma).expect("validated sigma"));
    let samples = weights
        .into_iter()
        .map(|w| {
            let noise = normal.as_ref().map_or(0.0, |n| n.sample(noise_rng));
            (w as f64 + noise) as f32
        })
        .collect();
    Trace {
        plaintext,
        ciphertext: cipher.encrypt_with(&plaintext, sbox),
        samples,
    }
}

/// One trace; protected mode advances `ctx` by one block.
pub fn sample_trace<R: Rng>(
    plaintext: [u8; BLOCK_LEN],
    cipher: &Aes128,
    cfg: &LeakConfig,
    ctx: Option<&mut RandomizationContext>,
    noise_rng: &mut R,
) -> Result<Trace> {
    cfg.validate()?;
    match (cfg.mode, ctx) {
        (Mode::Unprotected, _) => Ok(render_trace(plaintext, cipher, cfg, None, None, noise_rng)),
        (Mode::Protected, Some(ctx)) => {
            if cfg.decoys != ctx.decoys_enabled() {
                return Err(Error::Config(
                    "decoy setting differs between config and randomization context".into(),
                ));
            }
            let choice = ctx.next_block();
            let catalog = ctx.shared_catalog();
            Ok(render_trace(
                plaintext,
                cipher,
                cfg,
                Some(choice),
                Some(&catalog),
                noise_rng,
            ))
        }
        (Mode::Protected, None) => Err(Error::Config(
            "protected mode needs a randomization context".into(),
        )),
    }
}

/// Plaintext stream for a seed; identical for both modes.
pub fn plaintext_stream(seed: u32) -> impl Iterator<Item = [u8; BLOCK_LEN]> {
    let mut rng = ChaCha8Rng::seed_from_u64(PLAINTEXT_DOMAIN ^ seed as u64);
    std::iter::repeat_with(move || rng.random())
}

fn noise_rng(seed: u32, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(NOISE_DOMAIN ^ seed as u64);
    rng.set_stream(index as u64);
    rng
}

/// `n` traces with seeded random plaintexts.
///
/// Plaintexts and schedule choices are drawn in order; each trace's noise
/// comes from its own stream, so the parallel render is deterministic.
pub fn generate_set(
    n: usize,
    key: &[u8],
    cfg: &LeakConfig,
    seed: u32,
    catalog: Option<Arc<Catalog>>,
) -> Result<TraceSet> {
    if n == 0 {
        return Err(Error::Config("trace count must be at least 1".into()));
    }
    cfg.validate()?;
    let cipher = Aes128::new(key)?;
    let plaintexts: Vec<[u8; BLOCK_LEN]> = plaintext_stream(seed).take(n).collect();
    let (choices, catalog): (Vec<Option<BlockChoice>>, Option<Arc<Catalog>>) = match cfg.mode {
        Mode::Unprotected => (vec![None; n], None),
        Mode::Protected => {
            let catalog = catalog.ok_or_else(|| {
                Error::Config("protected mode needs a parameter-set catalog".into())
            })?;
            let mut ctx = RandomizationContext::new(seed, Arc::clone(&catalog), cfg.decoys)?;
            (
                (0..n).map(|_| Some(ctx.next_block())).collect(),
                Some(catalog),
            )
        }
    };
    let traces = plaintexts
        .par_iter()
        .zip(choices.par_iter())
        .enumerate()
        .map(|(i, (pt, choice))| {
            render_trace(
                *pt,
                &cipher,
                cfg,
                *choice,
                catalog.as_deref(),
                &mut noise_rng(seed, i),
            )
        })
        .collect();
    Ok(TraceSet {
        config: *cfg,
        key_fingerprint: key_fingerprint(key),
        seed: Some(seed),
        traces,
    })
}
