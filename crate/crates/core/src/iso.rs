//! Search for field isomorphisms between the AES field and tower fields.
//!
//! Every (φ, λ) pair with both extension polynomials irreducible yields a
//! tower field. An isomorphism δ is fixed by where it sends `x`, which must
//! be a root β of `m(x)` in the tower; δ then maps the basis `x^j` to `β^j`.
//! `m(x)` has exactly eight roots in any GF(2⁸), so each pair gives eight
//! candidates.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{
    gf8_mul, quadratic_irreducible_gf2, quadratic_irreducible_gf4, tower_mul, TowerParams,
};
use crate::matrix::BinaryMatrix8;

/// One `{φ, λ, δ, δ⁻¹}` tuple, the unit of randomization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSet {
    pub id: u32,
    pub params: TowerParams,
    pub delta: BinaryMatrix8,
    pub delta_inv: BinaryMatrix8,
    pub gate_cost: u32,
}

impl ParameterSet {
    /// Builds a set from δ, deriving δ⁻¹ and the gate cost. Fails if δ is singular.
    pub fn from_delta(id: u32, params: TowerParams, delta: BinaryMatrix8) -> Result<Self> {
        let delta_inv = delta.inverse().ok_or_else(|| Error::InvalidParameterSet {
            id,
            reason: "delta is singular".into(),
        })?;
        let mut set = ParameterSet {
            id,
            params,
            delta,
            delta_inv,
            gate_cost: 0,
        };
        set.gate_cost = gate_cost(&set);
        Ok(set)
    }

    /// Full check: homomorphism, δ·δ⁻¹ = I and a consistent gate cost.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidParameterSet {
                id: self.id,
                reason: reason.to_string(),
            })
        };
        let check = check_isomorphism(&self.params, &self.delta);
        if !check.invertible {
            return fail("delta is singular");
        }
        if !check.fixes_one {
            return fail("delta does not map 0x01 to the tower identity");
        }
        if !check.homomorphic {
            return fail("delta does not carry field-A products to tower products");
        }
        if self.delta * self.delta_inv != BinaryMatrix8::IDENTITY {
            return fail("delta_inv is not the inverse of delta");
        }
        if self.gate_cost != gate_cost(self) {
            return fail("gate cost does not match the matrices");
        }
        Ok(())
    }
}

/// φ values with `x² + x + φ` irreducible over GF(2²), by root search.
pub fn phi_candidates() -> Vec<u8> {
    (0..4u8)
        .filter(|&phi| quadratic_irreducible_gf2(phi))
        .collect()
}

/// λ values with `x² + x + λ` irreducible over GF((2²)²) built from `phi`.
pub fn lambda_candidates(phi: u8) -> Result<Vec<u8>> {
    if phi > 3 || !quadratic_irreducible_gf2(phi) {
        return Err(crate::error::FieldError::InvalidPhi(phi).into());
    }
    Ok((0..16u8)
        .filter(|&lambda| quadratic_irreducible_gf4(lambda, phi))
        .collect())
}

/// The λ interval the construction is usually quoted with.
pub const EXPECTED_LAMBDAS: std::ops::RangeInclusive<u8> = 8..=15;

/// Difference between the brute-forced λ set and [`EXPECTED_LAMBDAS`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LambdaDiscrepancy {
    pub phi: u8,
    pub missing: Vec<u8>,
    pub unexpected: Vec<u8>,
}

impl LambdaDiscrepancy {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty()
    }
}

pub fn lambda_discrepancy(phi: u8) -> Result<LambdaDiscrepancy> {
    let found = lambda_candidates(phi)?;
    Ok(LambdaDiscrepancy {
        phi,
        missing: EXPECTED_LAMBDAS.filter(|l| !found.contains(l)).collect(),
        unexpected: found
            .iter()
            .copied()
            .filter(|l| !EXPECTED_LAMBDAS.contains(l))
            .collect(),
    })
}

/// Roots of `m(x) = x⁸ + x⁴ + x³ + x + 1` in the tower, ascending.
pub fn aes_poly_roots(p: &TowerParams) -> Vec<u8> {
    (0..=255u8)
        .filter(|&b| {
            let pow = |e: u32| (0..e).fold(1u8, |acc, _| tower_mul(acc, b, p));
            pow(8) ^ pow(4) ^ pow(3) ^ b ^ 1 == 0
        })
        .collect()
}

/// One isomorphism per root of `m(x)`; ids are the root indices 0..8.
pub fn find_isomorphisms(p: &TowerParams) -> Vec<ParameterSet> {
    aes_poly_roots(p)
        .into_iter()
        .enumerate()
        .map(|(root_index, beta)| {
            let mut cols = [0u8; 8];
            let mut power = 1u8;
            // column c multiplies input bit 7 - c, i.e. holds β^(7-c)
            for c in (0..8).rev() {
                cols[c] = power;
                power = tower_mul(power, beta, p);
            }
            ParameterSet::from_delta(root_index as u32, *p, BinaryMatrix8::from_columns(cols))
                .expect("the powers of a root of m(x) form a basis")
        })
        .collect()
}

/// All candidates over every valid (φ, λ), numbered in (φ, λ, root) order.
pub fn enumerate_all() -> Vec<ParameterSet> {
    let pairs: Vec<TowerParams> = phi_candidates()
        .into_iter()
        .flat_map(|phi| {
            lambda_candidates(phi)
                .expect("phi from phi_candidates")
                .into_iter()
                .map(move |lambda| TowerParams::new(phi, lambda).expect("brute-forced pair"))
        })
        .collect();
    let mut all: Vec<ParameterSet> = {
        use rayon::prelude::*;
        pairs.par_iter().flat_map_iter(find_isomorphisms).collect()
    };
    for (id, set) in all.iter_mut().enumerate() {
        set.id = id as u32;
    }
    all
}

/// Outcome of checking one candidate δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IsoCheck {
    pub invertible: bool,
    pub fixes_one: bool,
    pub homomorphic: bool,
}

impl IsoCheck {
    pub fn passed(&self) -> bool {
        self.invertible && self.fixes_one && self.homomorphic
    }
}

/// Exhaustive 256×256 check that `delta(a·b) = delta(a) ⊗ delta(b)`.
pub fn check_isomorphism(params: &TowerParams, delta: &BinaryMatrix8) -> IsoCheck {
    let image: Vec<u8> = (0..=255u8).map(|q| delta.apply(q)).collect();
    let invertible = delta.is_invertible();
    let fixes_one = image[1] == 1;
    let homomorphic = invertible
        && (0..=255u8).all(|a| {
            let ia = image[a as usize];
            (0..=255u8)
                .all(|b| image[gf8_mul(a, b) as usize] == tower_mul(ia, image[b as usize], params))
        });
    IsoCheck {
        invertible,
        fixes_one,
        homomorphic,
    }
}

/// True iff δ is a bijective field isomorphism from A onto the set's tower.
pub fn verify_isomorphism(ps: &ParameterSet) -> bool {
    check_isomorphism(&ps.params, &ps.delta).passed()
}

/// XOR count of δ and δ⁻¹ evaluated row by row.
pub fn gate_cost(ps: &ParameterSet) -> u32 {
    ps.delta.xor_count() + ps.delta_inv.xor_count()
}

/// The `n` cheapest sets, ties by candidate id. Ids are left untouched.
pub fn select_low_cost(all: &[ParameterSet], n: usize) -> Result<Vec<ParameterSet>> {
    if n > all.len() {
        return Err(Error::NotEnoughSets {
            requested: n,
            available: all.len(),
        });
    }
    let mut sorted: Vec<&ParameterSet> = all.iter().collect();
    sorted.sort_by_key(|s| (s.gate_cost, s.params.phi(), s.params.lambda(), s.id));
    Ok(sorted.into_iter().take(n).cloned().collect())
}

/// `∏_{i=0}^{7} (2⁸ − 2^i)`: the number of invertible GF(2)-linear maps on bytes.
pub fn linear_map_count() -> u128 {
    (0..8).map(|i| 256u128 - (1u128 << i)).product()
}

pub const CANONICAL_PHI: u8 = 0b10;
pub const CANONICAL_LAMBDA: u8 = 0b1100;

/// The reference δ for φ = {10}, λ = {1100}, as printed row by row.
pub const CANONICAL_DELTA_BITS: [[u8; 8]; 8] = [
    [1, 0, 1, 0, 0, 0, 0, 0],
    [1, 1, 0, 1, 1, 1, 1, 0],
    [1, 0, 1, 0, 1, 1, 0, 0],
    [1, 0, 1, 0, 1, 1, 1, 0],
    [1, 1, 0, 0, 0, 1, 1, 0],
    [1, 0, 0, 1, 1, 1, 1, 0],
    [0, 1, 0, 1, 0, 0, 1, 0],
    [0, 1, 0, 0, 0, 0, 1, 1],
];

pub const CANONICAL_DELTA_INV_BITS: [[u8; 8]; 8] = [
    [1, 1, 1, 0, 0, 0, 1, 0],
    [0, 1, 0, 0, 0, 1, 0, 0],
    [0, 1, 1, 0, 0, 0, 1, 0],
    [0, 1, 1, 1, 0, 1, 1, 0],
    [0, 0, 1, 1, 1, 1, 1, 0],
    [1, 0, 0, 1, 1, 1, 1, 0],
    [0, 0, 1, 1, 0, 0, 0, 0],
    [0, 1, 1, 1, 0, 1, 0, 1],
];

/// The reference parameter set, with δ⁻¹ taken from its printed form.
pub fn canonical_parameter_set() -> ParameterSet {
    let delta = BinaryMatrix8::from_bits(CANONICAL_DELTA_BITS);
    let delta_inv = BinaryMatrix8::from_bits(CANONICAL_DELTA_INV_BITS);
    let mut set = ParameterSet {
        id: 0,
        params: TowerParams::new(CANONICAL_PHI, CANONICAL_LAMBDA).expect("canonical pair"),
        delta,
        delta_inv,
        gate_cost: 0,
    };
    set.gate_cost = gate_cost(&set);
    set
}

/// A parameter set published as decimal byte lists of unknown orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrintedSet {
    pub label: &'static str,
    pub phi: u8,
    pub lambda: u8,
    pub delta: [u8; 8],
    pub delta_inv: [u8; 8],
}

pub const PRINTED_SETS: [PrintedSet; 3] = [
    PrintedSet {
        label: "phi=2,lambda=15",
        phi: 2,
        lambda: 15,
        delta: [160, 126, 114, 162, 182, 84, 16, 217],
        delta_inv: [46, 28, 174, 2, 122, 26, 144, 75],
    },
    PrintedSet {
        label: "phi=3,lambda=12",
        phi: 3,
        lambda: 12,
        delta: [160, 222, 172, 174, 202, 238, 44, 227],
        delta_inv: [102, 212, 230, 162, 10, 234, 176, 233],
    },
    PrintedSet {
        label: "phi=3,lambda=10",
        phi: 3,
        lambda: 10,
        delta: [160, 126, 172, 2, 20, 132, 130, 99],
        delta_inv: [190, 132, 62, 106, 98, 2, 112, 141],
    },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Columns,
    Rows,
}

impl Orientation {
    pub fn matrix(self, bytes: [u8; 8]) -> BinaryMatrix8 {
        match self {
            Orientation::Columns => BinaryMatrix8::from_columns(bytes),
            Orientation::Rows => BinaryMatrix8::from_rows(bytes),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrientationResult {
    pub orientation: Orientation,
    pub delta: IsoCheck,
    /// The printed δ⁻¹ read the same way is the inverse of δ.
    pub delta_inv_matches: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrintedSetVerdict {
    pub label: String,
    pub phi: u8,
    pub lambda: u8,
    pub columns: OrientationResult,
    pub rows: OrientationResult,
    /// First orientation (columns, then rows) under which δ validates.
    pub validated_as: Option<Orientation>,
    /// Fewest differing matrix bits to any enumerated δ of the same (φ, λ),
    /// under the validating orientation or, failing that, the closer one.
    pub nearest_enumerated_distance: u32,
}

impl PrintedSetVerdict {
    /// δ validates and the printed δ⁻¹ agrees with it.
    pub fn fully_consistent(&self) -> bool {
        match self.validated_as {
            Some(Orientation::Columns) => self.columns.delta_inv_matches,
            Some(Orientation::Rows) => self.rows.delta_inv_matches,
            None => false,
        }
    }
}

fn matrix_distance(a: &BinaryMatrix8, b: &BinaryMatrix8) -> u32 {
    a.rows()
        .iter()
        .zip(b.rows().iter())
        .map(|(x, y)| (x ^ y).count_ones())
        .sum()
}

/// Checks one printed set under both orientations.
pub fn check_printed_set(set: &PrintedSet) -> PrintedSetVerdict {
    let params = TowerParams::new(set.phi, set.lambda);
    let candidates = params.as_ref().map(find_isomorphisms).unwrap_or_default();
    let evaluate = |orientation: Orientation| {
        let delta = orientation.matrix(set.delta);
        let delta_inv = orientation.matrix(set.delta_inv);
        let check = match &params {
            Ok(p) => check_isomorphism(p, &delta),
            Err(_) => IsoCheck {
                invertible: delta.is_invertible(),
                fixes_one: delta.apply(1) == 1,
                homomorphic: false,
            },
        };
        let distance = candidates
            .iter()
            .map(|c| matrix_distance(&c.delta, &delta))
            .min()
            .unwrap_or(64);
        let result = OrientationResult {
            orientation,
            delta: check,
            delta_inv_matches: delta * delta_inv == BinaryMatrix8::IDENTITY,
        };
        (result, distance)
    };
    let (columns, col_dist) = evaluate(Orientation::Columns);
    let (rows, row_dist) = evaluate(Orientation::Rows);
    let validated_as = if columns.delta.passed() {
        Some(Orientation::Columns)
    } else if rows.delta.passed() {
        Some(Orientation::Rows)
    } else {
        None
    };
    let nearest_enumerated_distance = match validated_as {
        Some(Orientation::Columns) => col_dist,
        Some(Orientation::Rows) => row_dist,
        None => col_dist.min(row_dist),
    };
    PrintedSetVerdict {
        label: set.label.to_string(),
        phi: set.phi,
        lambda: set.lambda,
        columns,
        rows,
        validated_as,
        nearest_enumerated_distance,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaperSetReport {
    /// The reference bit-matrix pair, passed through the same decimal-list check.
    pub canonical: PrintedSetVerdict,
    pub printed: Vec<PrintedSetVerdict>,
}

/// Runs the orientation check on the reference pair and the three printed sets.
pub fn check_paper_sets() -> PaperSetReport {
    let canonical = canonical_parameter_set();
    let canonical_printed = PrintedSet {
        label: "canonical",
        phi: CANONICAL_PHI,
        lambda: CANONICAL_LAMBDA,
        delta: canonical.delta.rows(),
        delta_inv: canonical.delta_inv.rows(),
    };
    PaperSetReport {
        canonical: check_printed_set(&canonical_printed),
        printed: PRINTED_SETS.iter().map(check_printed_set).collect(),
    }
}

impl fmt::Display for PaperSetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:>12} {:>12} {:>12} {:>8}",
            "set", "delta", "delta_inv", "consistent", "nearest"
        )?;
        for v in std::iter::once(&self.canonical).chain(self.printed.iter()) {
            let orientation = match v.validated_as {
                Some(Orientation::Columns) => "columns",
                Some(Orientation::Rows) => "rows",
                None => "neither",
            };
            let inv = match v.validated_as {
                Some(Orientation::Columns) => v.columns.delta_inv_matches,
                Some(Orientation::Rows) => v.rows.delta_inv_matches,
                None => v.columns.delta_inv_matches || v.rows.delta_inv_matches,
            };
            writeln!(
                f,
                "{:<18} {:>12} {:>12} {:>12} {:>8}",
                v.label,
                orientation,
                if inv { "inverse" } else { "mismatch" },
                if v.fully_consistent() { "yes" } else { "no" },
                v.nearest_enumerated_distance
            )?;
        }
        Ok(())
    }
}

/// Ordered parameter sets whose ids equal their positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    sets: Vec<ParameterSet>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogRecord {
    id: u32,
    phi: u8,
    lambda: u8,
    /// Column bytes, MSB = top row, left to right.
    delta: String,
    delta_inv: String,
    gate_cost: u32,
}

fn parse_columns(field: &str, id: u32, hex_str: &str) -> Result<[u8; 8]> {
    let bytes = hex::decode(hex_str)
        .map_err(|e| Error::Catalog(format!("set {id}: {field} is not hex: {e}")))?;
    bytes
        .try_into()
        .map_err(|_| Error::Catalog(format!("set {id}: {field} must be 8 bytes")))
}

impl Catalog {
    /// Renumbers the sets 0..N in the given order.
    pub fn new(sets: Vec<ParameterSet>) -> Self {
        let sets = sets
            .into_iter()
            .enumerate()
            .map(|(i, mut s)| {
                s.id = i as u32;
                s
            })
            .collect();
        Catalog { sets }
    }

    /// The `n` cheapest sets out of the full enumeration.
    pub fn low_cost(n: usize) -> Result<Self> {
        Ok(Catalog::new(select_low_cost(&enumerate_all(), n)?))
    }

    pub fn sets(&self) -> &[ParameterSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&ParameterSet> {
        self.sets.get(id)
    }

    pub fn to_json(&self) -> String {
        let records: Vec<CatalogRecord> = self
            .sets
            .iter()
            .map(|s| CatalogRecord {
                id: s.id,
                phi: s.params.phi(),
                lambda: s.params.lambda(),
                delta: hex::encode(s.delta.columns()),
                delta_inv: hex::encode(s.delta_inv.columns()),
                gate_cost: s.gate_cost,
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&records).expect("plain records serialize");
        out.push('\n');
        out
    }

    /// Parses and fully re-verifies a catalog.
    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<CatalogRecord> =
            serde_json::from_str(text).map_err(|e| Error::Catalog(e.to_string()))?;
        let mut sets = Vec::with_capacity(records.len());
        for (pos, r) in records.into_iter().enumerate() {
            if r.id as usize != pos {
                return Err(Error::Catalog(format!(
                    "records must be sorted with ids 0..N, found id {} at position {pos}",
                    r.id
                )));
            }
            let params = TowerParams::new(r.phi, r.lambda)?;
            let set = ParameterSet {
                id: r.id,
                params,
                delta: BinaryMatrix8::from_columns(parse_columns("delta", r.id, &r.delta)?),
                delta_inv: BinaryMatrix8::from_columns(parse_columns(
                    "delta_inv",
                    r.id,
                    &r.delta_inv,
                )?),
                gate_cost: r.gate_cost,
            };
            set.validate()?;
            sets.push(set);
        }
        Ok(Catalog { sets })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Catalog::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), self.to_json()).map_err(|e| Error::io(path.as_ref(), e))
    }
}
