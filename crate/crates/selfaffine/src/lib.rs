//! Dimension theory for planar self-affine iterated function systems.
//!
//! The library is organized around a single input object, [`IfsSystem`]: an
//! ordered family of contracting affine maps of the plane. On top of it sit
//!
//! * [`ifs`]: compositions, closed-form 2x2 singular values, the singular
//!   value function `phi^s`, and directional contraction factors;
//! * [`projective`]: the induced maps on the projective line, quadrant-arc
//!   images, and a certified upper bound for the overlap growth rate;
//! * [`dimension`]: truncated-pressure root finding for the affinity
//!   dimension `d` and the moment exponent `d(q)`, plus cylinder weight
//!   models;
//! * [`conditions`]: separation, positivity, bunching and metric-bunching
//!   checkers with explicit margins;
//! * [`empirical`]: mesh rasterization, moment sums, spectrum regressions,
//!   Monte Carlo energy integrals, and the directional series diagnostic;
//! * [`fixtures`]: the canonical test systems used throughout the suite.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std`
//! feature enables nothing beyond `std` error trait integration, and the
//! `parallel` feature switches inner enumeration loops to worker pools
//! without changing any computed bit.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod conditions;
pub mod dimension;
pub mod empirical;
mod error;
pub mod fixtures;
pub mod ifs;
mod numeric;
pub mod projective;

pub use error::Error;
pub use ifs::{AffineMap, Angle, IfsSystem, SingularPair, Word};

pub type Result<T> = core::result::Result<T, Error>;
