//! AES-128 with per-block randomized composite-field S-boxes.
//!
//! The crate covers the tower-field arithmetic, the search for field
//! isomorphisms between the AES field and its tower representations, a
//! cipher whose S-box architecture is chosen per block by a shared-seed LFSR,
//! and a Hamming-weight leakage simulator with first-order attacks to
//! evaluate the countermeasure.

pub mod aes;
pub mod attack;
pub mod calibration;
pub mod error;
pub mod gf;
pub mod iso;
pub mod leakage;
pub mod matrix;
pub mod sched;
pub mod traceio;

pub use aes::{Aes128, Backend, BlockSbox};
pub use attack::{
    cpa_attack, dom_attack, measurements_to_disclosure, pearson, Attack, AttackResult, Selection,
};
pub use error::{Error, FieldError, Result};
pub use gf::TowerParams;
pub use iso::{Catalog, ParameterSet};
pub use leakage::{generate_set, LeakConfig, Mode, Trace, TraceSet};
pub use matrix::BinaryMatrix8;
pub use sched::RandomizationContext;
