//! Exact machinery for thinning measurable covers to density-zero
//! subsequences that still cover almost everywhere infinitely often.
//!
//! The crate has four layers:
//! - exact rational interval arithmetic ([`measure_sets`]) and
//!   finitely-presented index sets with certified density thresholds
//!   ([`index_sets`]);
//! - lazy cover families ([`cover_family`]) and the randomized block
//!   extractor ([`extractor`]);
//! - the density-zero ideal's pseudo-union with verified cutoffs
//!   ([`pideal`]) and certificate verification ([`verify`]);
//! - a combinatorial counterexample on Cantor space showing the
//!   interval-structure hypotheses cannot be dropped ([`counterexample`]).

pub mod budget;
pub mod counterexample;
pub mod cover_family;
pub mod error;
pub mod extractor;
pub mod index_sets;
pub mod pideal;
pub mod measure_sets;
pub mod rational;
pub mod rng;
pub mod verify;

pub use budget::Budget;
pub use error::{Error, Result};
