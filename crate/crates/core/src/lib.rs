//! Measurement-induced entanglement (MIE) of Tomonaga-Luttinger liquids.
//!
//! The crate pairs closed-form compact-boson results with two lattice engines
//! that sample Born-rule charge measurements on the XXZ ring:
//!
//! * [`special_fn`]: elliptic `K`, Dedekind eta, winding sums.
//! * [`geometry`]: ring layouts, cross-ratio, cylinder height and nomes.
//! * [`cft_mie`]: winding integral, replica derivative, Born-averaged and
//!   forced MIE, small cross-ratio asymptotics.
//! * [`gaussian_sim`]: free-fermion (XX chain) correlation-matrix simulator.
//! * [`ed_oracle`]: exact state-vector XXZ oracle for small rings.
//! * [`runner`]: configuration-driven experiments and dataset comparison.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cft_mie;
pub mod entropy;
pub mod ed_oracle;
pub mod error;
pub mod fit;
pub mod gaussian_sim;
pub mod geometry;
pub mod quadrature;
pub mod runner;
pub mod special_fn;

pub use error::{MieError, Result};
