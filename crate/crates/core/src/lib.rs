//! Numerical and interval-certified dynamics of holomorphic endomorphisms of
//! the complex projective plane, organized around the saddle measure of an
//! attracting set.

// `!(x > 0.0)` is used on purpose so that NaN fails the guard
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod endo;
pub mod error;
pub mod green;
pub mod linalg;
pub mod measures;
pub mod orbits;
pub mod par;
pub mod periodic;
pub mod poly;
pub mod projgeom;
pub mod rng;
pub mod suite;

pub use error::{Error, Result};
