//! AES-128 with interchangeable SubBytes backends.
//!
//! The lookup-table backend is the reference. The composite backend computes
//! every S-box through the three-stage route (δ into the tower, invert there,
//! δ⁻¹ back, then the affine map) for one [`ParameterSet`]. The randomized
//! backend draws a fresh parameter set per block from a
//! [`RandomizationContext`]. All three produce identical ciphertexts.

use crate::error::{Error, Result};
use crate::gf::{composite_inv_stages, gf8_inv, gf8_mul, InversionStages};
use crate::iso::ParameterSet;
use crate::sched::{BlockChoice, RandomizationContext};

pub const BLOCK_LEN: usize = 16;
pub const KEY_LEN: usize = 16;
pub const ROUNDS: usize = 10;

const AFFINE_CONST: u8 = 0x63;

/// The AES affine map over GF(2): `b ⊕ rotl¹ ⊕ rotl² ⊕ rotl³ ⊕ rotl⁴ ⊕ 0x63`.
pub const fn affine(b: u8) -> u8 {
    b ^ b.rotate_left(1) ^ b.rotate_left(2) ^ b.rotate_left(3) ^ b.rotate_left(4) ^ AFFINE_CONST
}

pub const fn inv_affine(s: u8) -> u8 {
    s.rotate_left(1) ^ s.rotate_left(3) ^ s.rotate_left(6) ^ 0x05
}

const fn build_sbox() -> [u8; 256] {
    let mut t = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        t[i] = affine(gf8_inv(i as u8));
        i += 1;
    }
    t
}

const fn build_inv_sbox(sbox: &[u8; 256]) -> [u8; 256] {
    let mut t = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        t[sbox[i] as usize] = i as u8;
        i += 1;
    }
    t
}

/// S-box table generated from field inversion and the affine map.
pub static SBOX: [u8; 256] = build_sbox();
pub static INV_SBOX: [u8; 256] = build_inv_sbox(&SBOX);

pub fn sbox_lut(x: u8) -> u8 {
    SBOX[x as usize]
}

pub fn inv_sbox_lut(y: u8) -> u8 {
    INV_SBOX[y as usize]
}

/// Every value on the composite S-box datapath for one input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SboxStages {
    pub input: u8,
    /// `δ(x)`, in the tower.
    pub mapped: u8,
    pub inversion: InversionStages,
    /// `δ⁻¹` of the tower inverse, back in field A and before the affine map.
    pub unmapped: u8,
    pub output: u8,
}

impl SboxStages {
    /// Tower-field inverse, the value the decoy matrices are applied to.
    pub fn pre_final(&self) -> u8 {
        self.inversion.result
    }
}

pub fn sbox_composite_stages(x: u8, ps: &ParameterSet) -> SboxStages {
    let mapped = ps.delta.apply(x);
    let inversion = composite_inv_stages(mapped, &ps.params);
    let unmapped = ps.delta_inv.apply(inversion.result);
    SboxStages {
        input: x,
        mapped,
        inversion,
        unmapped,
        output: affine(unmapped),
    }
}

pub fn sbox_composite(x: u8, ps: &ParameterSet) -> u8 {
    sbox_composite_stages(x, ps).output
}

pub fn inv_sbox_composite(y: u8, ps: &ParameterSet) -> u8 {
    let mapped = ps.delta.apply(inv_affine(y));
    ps.delta_inv
        .apply(composite_inv_stages(mapped, &ps.params).result)
}

/// The 4×4 byte state, column-major: byte `r + 4c` is row `r`, column `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct State(pub [u8; BLOCK_LEN]);

impl State {
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let block: [u8; BLOCK_LEN] = bytes.try_into().map_err(|_| Error::InvalidLength {
            what: "block",
            expected: BLOCK_LEN,
            actual: bytes.len(),
        })?;
        Ok(State(block))
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.0[row + 4 * col]
    }

    pub fn bytes(&self) -> [u8; BLOCK_LEN] {
        self.0
    }
}

pub fn add_round_key(s: &State, round_key: &[u8; BLOCK_LEN]) -> State {
    let mut out = *s;
    out.0.iter_mut().zip(round_key).for_each(|(b, k)| *b ^= k);
    out
}

/// Row `r` rotates left by `r`.
pub fn shift_rows(s: &State) -> State {
    let mut out = State::default();
    for r in 0..4 {
        for c in 0..4 {
            out.0[r + 4 * c] = s.0[r + 4 * ((c + r) % 4)];
        }
    }
    out
}

pub fn inv_shift_rows(s: &State) -> State {
    let mut out = State::default();
    for r in 0..4 {
        for c in 0..4 {
            out.0[r + 4 * ((c + r) % 4)] = s.0[r + 4 * c];
        }
    }
    out
}

fn mix_with(s: &State, coeffs: [u8; 4]) -> State {
    let mut out = State::default();
    for c in 0..4 {
        let col = [s.0[4 * c], s.0[4 * c + 1], s.0[4 * c + 2], s.0[4 * c + 3]];
        for r in 0..4 {
            out.0[4 * c + r] =
                (0..4).fold(0u8, |acc, k| acc ^ gf8_mul(coeffs[(k + 4 - r) % 4], col[k]));
        }
    }
    out
}

/// Multiplies each column by `{03}x³ + {01}x² + {01}x + {02}` mod `x⁴ + 1`.
pub fn mix_columns(s: &State) -> State {
    mix_with(s, [0x02, 0x03, 0x01, 0x01])
}

/// Multiplies each column by `{0b}x³ + {0d}x² + {09}x + {0e}`.
pub fn inv_mix_columns(s: &State) -> State {
    mix_with(s, [0x0e, 0x0b, 0x0d, 0x09])
}

/// Eleven 16-byte round keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundKeySchedule {
    round_keys: [[u8; BLOCK_LEN]; ROUNDS + 1],
}

impl RoundKeySchedule {
    pub fn round_key(&self, round: usize) -> &[u8; BLOCK_LEN] {
        &self.round_keys[round]
    }

    pub fn round_keys(&self) -> &[[u8; BLOCK_LEN]; ROUNDS + 1] {
        &self.round_keys
    }
}

pub fn key_expand(key: &[u8]) -> Result<RoundKeySchedule> {
    if key.len() != KEY_LEN {
        return Err(Error::InvalidLength {
            what: "key",
            expected: KEY_LEN,
            actual: key.len(),
        });
    }
    let mut words = [[0u8; 4]; 4 * (ROUNDS + 1)];
    for (i, w) in words.iter_mut().take(4).enumerate() {
        w.copy_from_slice(&key[4 * i..4 * i + 4]);
    }
    let mut rcon = 0x01u8;
    for i in 4..words.len() {
        let mut temp = words[i - 1];
        if i % 4 == 0 {
            temp.rotate_left(1);
            temp.iter_mut().for_each(|b| *b = sbox_lut(*b));
            temp[0] ^= rcon;
            rcon = gf8_mul(rcon, 0x02);
        }
        for k in 0..4 {
            words[i][k] = words[i - 4][k] ^ temp[k];
        }
    }
    let mut round_keys = [[0u8; BLOCK_LEN]; ROUNDS + 1];
    for (r, rk) in round_keys.iter_mut().enumerate() {
        for w in 0..4 {
            rk[4 * w..4 * w + 4].copy_from_slice(&words[4 * r + w]);
        }
    }
    Ok(RoundKeySchedule { round_keys })
}

/// Which S-box implementation to run.
pub enum Backend<'a> {
    Lut,
    Composite(&'a ParameterSet),
    /// Draws one parameter set (and decoys, if enabled) per block.
    Randomized(&'a mut RandomizationContext),
}

/// A fixed S-box implementation for the duration of one block.
#[derive(Debug, Clone, Copy)]
pub enum BlockSbox<'a> {
    Lut,
    Composite(&'a ParameterSet),
}

impl BlockSbox<'_> {
    pub fn forward(&self, x: u8) -> u8 {
        match self {
            BlockSbox::Lut => sbox_lut(x),
            BlockSbox::Composite(ps) => sbox_composite(x, ps),
        }
    }

    pub fn inverse(&self, y: u8) -> u8 {
        match self {
            BlockSbox::Lut => inv_sbox_lut(y),
            BlockSbox::Composite(ps) => inv_sbox_composite(y, ps),
        }
    }
}

/// AES-128 with an expanded key.
#[derive(Debug, Clone)]
pub struct Aes128 {
    schedule: RoundKeySchedule,
}

impl Aes128 {
    pub fn new(key: &[u8]) -> Result<Self> {
        Ok(Aes128 {
            schedule: key_expand(key)?,
        })
    }

    pub fn schedule(&self) -> &RoundKeySchedule {
        &self.schedule
    }

    pub fn encrypt_with(&self, block: &[u8; BLOCK_LEN], sbox: BlockSbox<'_>) -> [u8; BLOCK_LEN] {
        let mut s = add_round_key(&State(*block), self.schedule.round_key(0));
        for round in 1..=ROUNDS {
            s.0.iter_mut().for_each(|b| *b = sbox.forward(*b));
            s = shift_rows(&s);
            if round != ROUNDS {
                s = mix_columns(&s);
            }
            s = add_round_key(&s, self.schedule.round_key(round));
        }
        s.0
    }

    pub fn decrypt_with(&self, block: &[u8; BLOCK_LEN], sbox: BlockSbox<'_>) -> [u8; BLOCK_LEN] {
        let mut s = add_round_key(&State(*block), self.schedule.round_key(ROUNDS));
        for round in (0..ROUNDS).rev() {
            s = inv_shift_rows(&s);
            s.0.iter_mut().for_each(|b| *b = sbox.inverse(*b));
            s = add_round_key(&s, self.schedule.round_key(round));
            if round != 0 {
                s = inv_mix_columns(&s);
            }
        }
        s.0
    }

    pub fn encrypt_block(
        &self,
        block: &[u8; BLOCK_LEN],
        backend: &mut Backend<'_>,
    ) -> [u8; BLOCK_LEN] {
        match backend {
            Backend::Lut => self.encrypt_with(block, BlockSbox::Lut),
            Backend::Composite(ps) => self.encrypt_with(block, BlockSbox::Composite(ps)),
            Backend::Randomized(ctx) => {
                let BlockChoice { set, .. } = ctx.next_block();
                let ps = ctx
                    .catalog()
                    .get(set)
                    .expect("scheduler index within catalog");
                self.encrypt_with(block, BlockSbox::Composite(ps))
            }
        }
    }

    pub fn decrypt_block(
        &self,
        block: &[u8; BLOCK_LEN],
        backend: &mut Backend<'_>,
    ) -> [u8; BLOCK_LEN] {
        match backend {
            Backend::Lut => self.decrypt_with(block, BlockSbox::Lut),
            Backend::Composite(ps) => self.decrypt_with(block, BlockSbox::Composite(ps)),
            Backend::Randomized(ctx) => {
                let BlockChoice { set, .. } = ctx.next_block();
                let ps = ctx
                    .catalog()
                    .get(set)
                    .expect("scheduler index within catalog");
                self.decrypt_with(block, BlockSbox::Composite(ps))
            }
        }
    }
}

fn block_of(bytes: &[u8]) -> Result<[u8; BLOCK_LEN]> {
    Ok(State::from_slice(bytes)?.0)
}

pub fn encrypt_block(pt: &[u8], key: &[u8], backend: &mut Backend<'_>) -> Result<[u8; BLOCK_LEN]> {
    Ok(Aes128::new(key)?.encrypt_block(&block_of(pt)?, backend))
}

pub fn decrypt_block(ct: &[u8], key: &[u8], backend: &mut Backend<'_>) -> Result<[u8; BLOCK_LEN]> {
    Ok(Aes128::new(key)?.decrypt_block(&block_of(ct)?, backend))
}

/// ECB over a 16-byte aligned buffer.
pub fn encrypt_ecb(data: &[u8], key: &[u8], backend: &mut Backend<'_>) -> Result<Vec<u8>> {
    ecb(data, key, backend, true)
}

pub fn decrypt_ecb(data: &[u8], key: &[u8], backend: &mut Backend<'_>) -> Result<Vec<u8>> {
    ecb(data, key, backend, false)
}

fn ecb(data: &[u8], key: &[u8], backend: &mut Backend<'_>, encrypt: bool) -> Result<Vec<u8>> {
    if !data.len().is_multiple_of(BLOCK_LEN) {
        return Err(Error::InvalidLength {
            what: "ECB input (multiple of 16)",
            expected: data.len().next_multiple_of(BLOCK_LEN),
            actual: data.len(),
        });
    }
    let cipher = Aes128::new(key)?;
    let mut out = Vec::with_capacity(data.len());
    for chunk in data.chunks_exact(BLOCK_LEN) {
        let block = block_of(chunk)?;
        let res = if encrypt {
            cipher.encrypt_block(&block, backend)
        } else {
            cipher.decrypt_block(&block, backend)
        };
        out.extend_from_slice(&res);
    }
    Ok(out)
}
