//! Discrete Fourier-lattice models of Hörmander spaces `H^φ` whose regularity
//! index `φ` varies regularly in the sense of Avakumović (RO class).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_report;
pub mod elliptic_model;
pub mod fit;
pub mod interpolation;
pub mod ro_class;
pub mod spectral_model;
pub mod sum;
pub mod trace_model;
