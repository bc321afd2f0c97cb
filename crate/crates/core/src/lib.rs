//! Decorated rooted forests, their Hopf algebras, renormalisation maps, and
//! grid rough paths.
//!
//! The crate is organised bottom-up:
//!  - [`trees`]: decorated rooted trees and forests, canonical order,
//!    enumeration, text grammar;
//!  - [`comb`]: linear combinations over any basis;
//!  - [`forest_hopf`]: pruning coproduct, antipode, characters, and the
//!    extraction/contraction coproduct that cointeracts with it;
//!  - [`word_hopf`]: words with tree letters, shuffle and concatenation
//!    structures, anisotropic weights, non-resonance scan;
//!  - [`tree_words`]: the morphisms from forests into words;
//!  - [`linalg`]: exact dense matrices and row spaces;
//!  - [`renorm`]: renormalisation maps as audited matrices;
//!  - [`rough_paths`]: grid rough paths over both bases;
//!  - [`suites`]: seed-fixed drivers, characters, and rules;
//!  - [`oracle`]: brute-force reference implementations used by tests.

pub mod comb;
pub mod config;
pub mod error;
pub mod forest_hopf;
pub mod grossman_larson;
pub mod linalg;
pub mod oracle;
pub mod renorm;
pub mod rough_paths;
pub mod scalar;
pub mod suites;
pub mod transfer;
pub mod tree_words;
pub mod trees;
pub mod verify;
pub mod word_hopf;

pub use comb::Comb;
pub use error::{Error, Result};
pub use scalar::{Q, Scalar};
pub use trees::{Decoration, Forest, Tree};
pub use word_hopf::Word;
