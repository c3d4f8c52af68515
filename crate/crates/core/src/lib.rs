//! Moving-mirror radiation in a 1+1 dimensional massless scalar CFT.
//!
//! A mirror trajectory is described by its null-coordinate map
//! `x⁺ = f(x⁻)` ([`trajectory`]). From it the crate computes the radiated
//! energy flux ([`stress_tensor`]), Bogoliubov particle spectra
//! ([`spectrum`]), interval entanglement entropies ([`entropy`]), the flux
//! after a one-bit measurement ([`measurement`]), quantum energy inequality
//! bounds on firewall-like pulses ([`qei`]) and the Unruh-mode Schmidt
//! spectrum ([`unruh`]). [`verify`] collects the acceptance criteria.

// `!(a < b)` comparisons are deliberate: they also reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropy;
pub mod error;
pub mod exec;
pub mod measurement;
pub mod output;
pub mod qei;
pub mod quadrature;
pub mod spectrum;
pub mod stress_tensor;
pub mod table;
pub mod trajectory;
pub mod unruh;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use trajectory::{NullMap, Trajectory};
