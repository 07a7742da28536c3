//! Combinatorics of the canonical polynomial Van der Waerden theorem.
//!
//! - [`polynomial`]: integral polynomials and family constructions
//!   (weight vectors, shift threshold, B*, scaling, `d_max`).
//! - [`coloring`]: typed colourings, restricted-growth enumeration, block
//!   colourings and interval equivalence.
//! - [`witness`]: monochromatic / rainbow / focused-set predicates, witness
//!   search and certificates.
//! - [`search`]: exhaustive computation of minimal canonical intervals.
//! - [`format`]: file formats and the colouring digest.
//! - [`cli`]: the `canonvdw` command line.

pub mod cli;
pub mod coloring;
pub mod format;
pub mod polynomial;
pub mod search;
pub mod witness;

pub use coloring::{Label, TypedColouring};
pub use polynomial::{FamilyRole, IntegralPolynomial, PolynomialFamily, WeightVector};
pub use search::{canonical_number, naive_canonical_number, SearchConfig, SearchResult};
pub use witness::{find_witness, verify_certificate, Certificate, DPolicy, WitnessQuery};
