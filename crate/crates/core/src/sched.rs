//! Per-block choice of parameter set and decoy matrices.
//!
//! Two 16-bit Fibonacci LFSRs with feedback polynomial
//! `x¹⁶ + x¹⁴ + x¹³ + x¹¹ + 1` (period 2¹⁶ − 1) drive the choices. The main
//! register picks the parameter set and therefore has to be reproduced
//! exactly by the decryptor; the decoy register only influences leakage.
//! Neither is a cryptographically secure generator.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::iso::{Catalog, ParameterSet};

pub const LFSR_PERIOD: u32 = (1 << 16) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lfsr16 {
    state: u16,
}

impl Lfsr16 {
    pub fn new(seed: u16) -> Result<Self> {
        if seed == 0 {
            return Err(Error::ZeroLfsrState);
        }
        Ok(Lfsr16 { state: seed })
    }

    pub fn state(&self) -> u16 {
        self.state
    }

    /// Shifts once; returns the bit shifted out of position 0.
    pub fn step(&mut self) -> u8 {
        let s = self.state;
        let out = (s & 1) as u8;
        // taps 16, 14, 13, 11 -> bits 0, 2, 3, 5
        let feedback = (s ^ (s >> 2) ^ (s >> 3) ^ (s >> 5)) & 1;
        self.state = (s >> 1) | (feedback << 15);
        out
    }

    /// `k` successive output bits, the first one ending up as the MSB.
    pub fn next_bits(&mut self, k: u32) -> u32 {
        assert!(k <= 32, "at most 32 bits per draw");
        (0..k).fold(0u32, |acc, _| (acc << 1) | self.step() as u32)
    }
}

/// Choices made for one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockChoice {
    pub set: usize,
    pub decoys: Option<[usize; 2]>,
}

fn index_bits(n: usize) -> u32 {
    // ⌈log₂ n⌉
    usize::BITS - (n.max(1) - 1).leading_zeros()
}

/// Shared-seed scheduler state for one encryption or decryption stream.
#[derive(Debug, Clone)]
pub struct RandomizationContext {
    main: Lfsr16,
    decoy: Lfsr16,
    catalog: Arc<Catalog>,
    decoys_enabled: bool,
}

impl RandomizationContext {
    /// The high half of `seed` seeds the set selector, the low half the
    /// decoy selector. Neither half may be zero.
    pub fn new(seed: u32, catalog: Arc<Catalog>, decoys: bool) -> Result<Self> {
        if catalog.is_empty() {
            return Err(Error::CatalogTooSmall {
                required: 1,
                actual: 0,
            });
        }
        if decoys && catalog.len() < 3 {
            return Err(Error::CatalogTooSmall {
                required: 3,
                actual: catalog.len(),
            });
        }
        Ok(RandomizationContext {
            main: Lfsr16::new((seed >> 16) as u16)?,
            decoy: Lfsr16::new(seed as u16)?,
            catalog,
            decoys_enabled: decoys,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn shared_catalog(&self) -> Arc<Catalog> {
        Arc::clone(&self.catalog)
    }

    pub fn decoys_enabled(&self) -> bool {
        self.decoys_enabled
    }

    pub fn main_state(&self) -> u16 {
        self.main.state()
    }

    pub fn decoy_state(&self) -> u16 {
        self.decoy.state()
    }

    /// Index of the next parameter set: ⌈log₂ N⌉ main-LFSR bits mod N.
    pub fn select_param_set(&mut self) -> (usize, &ParameterSet) {
        let n = self.catalog.len();
        let idx = self.main.next_bits(index_bits(n)) as usize % n;
        (idx, &self.catalog.sets()[idx])
    }

    /// Two distinct set ids other than `exclude`, by rejection sampling.
    pub fn select_decoys(&mut self, exclude: usize) -> Result<[usize; 2]> {
        let n = self.catalog.len();
        if n < 3 {
            return Err(Error::CatalogTooSmall {
                required: 3,
                actual: n,
            });
        }
        let bits = index_bits(n);
        let mut draw = |reject: &dyn Fn(usize) -> bool| loop {
            let id = self.decoy.next_bits(bits) as usize % n;
            if !reject(id) {
                break id;
            }
        };
        let first = draw(&|id| id == exclude);
        let second = draw(&|id| id == exclude || id == first);
        Ok([first, second])
    }

    /// Set choice for the next block, plus decoys when enabled.
    pub fn next_block(&mut self) -> BlockChoice {
        let (set, _) = self.select_param_set();
        let decoys = self.decoys_enabled.then(|| {
            self.select_decoys(set)
                .expect("catalog size checked at construction")
        });
        BlockChoice { set, decoys }
    }
}
