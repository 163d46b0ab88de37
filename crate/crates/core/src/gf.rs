//! Bit-exact arithmetic in the AES field and in the tower field
//! GF(2²) ⊂ GF((2²)²) ⊂ GF(((2²)²)²).
//!
//! Field A is GF(2⁸) in polynomial basis modulo `x⁸ + x⁴ + x³ + x + 1`.
//! Field B is built by three degree-2 extensions:
//!
//! ```text
//! GF(2²)          x² + x + 1
//! GF((2²)²)       Y² + Y + φ      φ ∈ GF(2²)
//! GF(((2²)²)²)    Z² + Z + λ      λ ∈ GF((2²)²)
//! ```
//!
//! At every level an element is stored as `hi·T + lo` with `hi` in the upper
//! half of the bits, so a tower byte is `q_H` (bits 7..4) and `q_L`
//! (bits 3..0), and a nibble is two 2-bit halves. Inversion of zero is
//! defined as zero at every level.

use std::ops::{Add, Mul};

use crate::error::FieldError;

/// `x⁸ + x⁴ + x³ + x + 1`, with the x⁸ term.
pub const AES_POLY: u16 = 0x11B;

/// A byte in field A (polynomial basis mod `m(x)`, bit 7 = coefficient of x⁷).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Gf8(pub u8);

impl Gf8 {
    pub const ZERO: Gf8 = Gf8(0);
    pub const ONE: Gf8 = Gf8(1);

    pub fn inv(self) -> Gf8 {
        Gf8(gf8_inv(self.0))
    }
}

impl Add for Gf8 {
    type Output = Gf8;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf8) -> Gf8 {
        Gf8(self.0 ^ rhs.0)
    }
}

impl Mul for Gf8 {
    type Output = Gf8;
    fn mul(self, rhs: Gf8) -> Gf8 {
        Gf8(gf8_mul(self.0, rhs.0))
    }
}

/// Shift-and-reduce multiplication modulo `m(x)`.
pub const fn gf8_mul(a: u8, b: u8) -> u8 {
    let mut acc = 0u8;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= (AES_POLY & 0xFF) as u8;
        }
        b >>= 1;
    }
    acc
}

/// Multiplicative inverse in field A as `a^254`; `inv(0) = 0`.
pub const fn gf8_inv(a: u8) -> u8 {
    // a^254 = a^(2+4+8+16+32+64+128)
    let mut result = 1u8;
    let mut sq = gf8_mul(a, a);
    let mut i = 1;
    while i < 8 {
        result = gf8_mul(result, sq);
        sq = gf8_mul(sq, sq);
        i += 1;
    }
    if a == 0 {
        0
    } else {
        result
    }
}

/// Multiplication in GF(2²) modulo `x² + x + 1`.
pub const fn gf2_mul(a: u8, b: u8) -> u8 {
    let (a1, a0) = ((a >> 1) & 1, a & 1);
    let (b1, b0) = ((b >> 1) & 1, b & 1);
    let hh = a1 & b1;
    let hi = (a1 & b0) ^ (a0 & b1) ^ hh;
    let lo = (a0 & b0) ^ hh;
    (hi << 1) | lo
}

/// Squaring in GF(2²): `(q₁x + q₀)² = q₁x + (q₁ + q₀)`.
pub const fn gf2_sq(q: u8) -> u8 {
    let (q1, q0) = ((q >> 1) & 1, q & 1);
    (q1 << 1) | (q1 ^ q0)
}

/// Constant multiplication by φ as the XOR network for φ = {10} or {11}.
pub fn gf2_mul_phi(q: u8, phi: u8) -> Result<u8, FieldError> {
    let (q1, q0) = ((q >> 1) & 1, q & 1);
    match phi {
        // k1 = q1 + q0, k0 = q1
        0b10 => Ok(((q1 ^ q0) << 1) | q1),
        // k1 = q0, k0 = q0 + q1
        0b11 => Ok((q0 << 1) | (q0 ^ q1)),
        _ => Err(FieldError::InvalidPhi(phi)),
    }
}

/// Irreducibility constants of one tower instance.
///
/// Construction checks both polynomials by brute-force root search, so a
/// `TowerParams` value always describes a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TowerParams {
    phi: u8,
    lambda: u8,
}

impl TowerParams {
    pub fn new(phi: u8, lambda: u8) -> Result<Self, FieldError> {
        if phi > 3 || !quadratic_irreducible_gf2(phi) {
            return Err(FieldError::InvalidPhi(phi));
        }
        if lambda > 15 || !quadratic_irreducible_gf4(lambda, phi) {
            return Err(FieldError::InvalidLambda { phi, lambda });
        }
        Ok(TowerParams { phi, lambda })
    }

    pub fn phi(&self) -> u8 {
        self.phi
    }

    pub fn lambda(&self) -> u8 {
        self.lambda
    }
}

/// True if `x² + x + c` has no root in GF(2²).
pub fn quadratic_irreducible_gf2(c: u8) -> bool {
    (0..4u8).all(|y| gf2_mul(y, y) ^ y ^ c != 0)
}

/// True if `x² + x + c` has no root in GF((2²)²) built from `phi`.
pub fn quadratic_irreducible_gf4(c: u8, phi: u8) -> bool {
    (0..16u8).all(|y| mul4_raw(y, y, phi) ^ y ^ c != 0)
}

fn mul4_raw(a: u8, b: u8, phi: u8) -> u8 {
    let (ah, al) = (a >> 2, a & 3);
    let (bh, bl) = (b >> 2, b & 3);
    let hh = gf2_mul(ah, bh);
    let hi = gf2_mul(ah, bl) ^ gf2_mul(al, bh) ^ hh;
    let lo = gf2_mul(al, bl) ^ gf2_mul(hh, phi);
    (hi << 2) | lo
}

/// Multiplier in GF((2²)²): three GF(2²) products plus the ×φ reduction.
pub fn gf4_mul(a: u8, b: u8, p: &TowerParams) -> u8 {
    mul4_raw(a & 0xF, b & 0xF, p.phi)
}

/// Squarer in GF((2²)²): `(hY + l)² = h²Y + (φh² + l²)`.
pub fn gf4_sq(a: u8, p: &TowerParams) -> u8 {
    let h2 = gf2_sq((a >> 2) & 3);
    let l2 = gf2_sq(a & 3);
    (h2 << 2) | (gf2_mul(h2, p.phi) ^ l2)
}

/// Constant multiplication by λ.
///
/// λ ∈ {12, 15} use their fixed XOR networks; any other λ goes through the
/// generic multiplier.
pub fn gf4_mul_lambda(q: u8, p: &TowerParams) -> u8 {
    match lambda_network(q, p.phi, p.lambda) {
        Some(k) => k,
        None => gf4_mul(q, p.lambda, p),
    }
}

/// Hand-derived ×λ networks. `None` when no fixed network exists.
pub fn lambda_network(q: u8, phi: u8, lambda: u8) -> Option<u8> {
    let bit = |i: u8| (q >> i) & 1;
    let (q3, q2, q1, q0) = (bit(3), bit(2), bit(1), bit(0));
    let (k3, k2, k1, k0) = match (phi, lambda) {
        (0b10, 0b1100) => (q2 ^ q0, q3 ^ q2 ^ q1 ^ q0, q3, q2),
        (0b11, 0b1100) => (q2 ^ q0, q3 ^ q2 ^ q1 ^ q0, q3 ^ q2, q3),
        (0b10, 0b1111) => (q0, q1 ^ q0, q3 ^ q0, q2 ^ q1 ^ q0),
        (0b11, 0b1111) => (q0, q1 ^ q0, q3 ^ q2 ^ q0, q3 ^ q1 ^ q0),
        _ => return None,
    };
    Some((k3 << 3) | (k2 << 2) | (k1 << 1) | k0)
}

/// Inversion in GF((2²)²) by the norm method over GF(2²); `inv(0) = 0`.
pub fn gf4_inv(q: u8, p: &TowerParams) -> u8 {
    let (h, l) = ((q >> 2) & 3, q & 3);
    let phi_h2 = gf2_mul_phi(gf2_sq(h), p.phi).expect("validated phi");
    let norm = phi_h2 ^ gf2_mul(h, l) ^ gf2_sq(l);
    // d³ = 1 in GF(2²), so d⁻¹ = d²
    let norm_inv = gf2_sq(norm);
    (gf2_mul(h, norm_inv) << 2) | gf2_mul(h ^ l, norm_inv)
}

/// Multiplication in GF(((2²)²)²).
pub fn tower_mul(a: u8, b: u8, p: &TowerParams) -> u8 {
    let (ah, al) = (a >> 4, a & 0xF);
    let (bh, bl) = (b >> 4, b & 0xF);
    let hh = gf4_mul(ah, bh, p);
    let hi = gf4_mul(ah, bl, p) ^ gf4_mul(al, bh, p) ^ hh;
    let lo = gf4_mul(al, bl, p) ^ gf4_mul_lambda(hh, p);
    (hi << 4) | lo
}

/// Every intermediate of the composite-field inversion datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InversionStages {
    pub high: u8,
    pub low: u8,
    /// `λ·h²`
    pub sq_lambda: u8,
    /// `(h ⊕ l)·l`
    pub cross: u8,
    /// `d = λh² ⊕ (h ⊕ l)l`
    pub norm: u8,
    pub norm_inv: u8,
    pub result: u8,
}

/// Inversion in GF(((2²)²)²) through the squarer, ×λ, GF((2²)²) multipliers
/// and the GF((2²)²) inverter, keeping every intermediate.
pub fn composite_inv_stages(x: u8, p: &TowerParams) -> InversionStages {
    let (high, low) = (x >> 4, x & 0xF);
    let sq_lambda = gf4_mul_lambda(gf4_sq(high, p), p);
    let cross = gf4_mul(high ^ low, low, p);
    let norm = sq_lambda ^ cross;
    let norm_inv = gf4_inv(norm, p);
    let result = (gf4_mul(high, norm_inv, p) << 4) | gf4_mul(high ^ low, norm_inv, p);
    InversionStages {
        high,
        low,
        sq_lambda,
        cross,
        norm,
        norm_inv,
        result,
    }
}

pub fn tower_inv(x: u8, p: &TowerParams) -> u8 {
    composite_inv_stages(x, p).result
}

/// A byte in a tower representation, tagged with the parameter set it
/// belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompositeElement {
    value: u8,
    param_id: u32,
}

impl CompositeElement {
    pub fn new(value: u8, param_id: u32) -> Self {
        CompositeElement { value, param_id }
    }

    pub fn value(&self) -> u8 {
        self.value
    }

    pub fn param_id(&self) -> u32 {
        self.param_id
    }

    fn check_same(&self, other: &Self) -> Result<(), FieldError> {
        if self.param_id != other.param_id {
            return Err(FieldError::ParamMismatch {
                left: self.param_id,
                right: other.param_id,
            });
        }
        Ok(())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Self) -> Result<Self, FieldError> {
        self.check_same(&other)?;
        Ok(CompositeElement::new(
            self.value ^ other.value,
            self.param_id,
        ))
    }

    pub fn mul(self, other: Self, p: &TowerParams) -> Result<Self, FieldError> {
        self.check_same(&other)?;
        Ok(CompositeElement::new(
            tower_mul(self.value, other.value, p),
            self.param_id,
        ))
    }
}

pub fn composite_inv(x: CompositeElement, p: &TowerParams) -> CompositeElement {
    CompositeElement::new(tower_inv(x.value, p), x.param_id)
}
