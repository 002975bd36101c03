//! Exact-rational computable analysis on the unit interval.
//!
//! The crate builds computable points inside constructive Borel–Cantelli
//! sets: sets of the form `⋃_k ⋂_{n≥k} U_n` where the `U_n` are uniformly
//! enumerated open sets whose complements have effectively summable measure.
//! Every construction emits a replayable certificate checked with exact
//! rational arithmetic.
//!
//! Module map:
//!
//! * [`cms`]: ideal points and balls, constructive open sets, computable points.
//! * [`interval`]: finite unions of rational open intervals (the exact model).
//! * [`measures`]: the test-function family, computable measures, summability moduli.
//! * [`certified`]: directed-rounding bounds for logarithms, roots and powers.
//! * [`bc`]: Borel–Cantelli sequences, normal form, intersections, point extraction.
//! * [`ergodic`]: piecewise-affine maps, Birkhoff averages, convergence moduli.
//! * [`apps`]: normal numbers, typical points, SRB integration.

pub mod apps;
pub mod bc;
pub mod certified;
pub mod cms;
pub mod ergodic;
mod error;
pub mod interval;
pub mod measures;
pub mod piecewise;
pub mod rational;

pub use error::{Error, Result};
pub use rational::{parse_rational, q, Rational};
