//! Piecewise-affine interval maps, Birkhoff averages and the sets of
//! typical points.
//!
//! Maps are exact: every branch is affine with rational coefficients, so
//! `T^n` is affine on each cell of a finite partition and the Birkhoff
//! average `f_n` is piecewise affine. Typical points are described as
//! Borel–Cantelli sets whose layers are deviation sets of `f_n`, glued along
//! a convergence modulus.

mod birkhoff;
mod dense;
mod map;
mod modulus;
mod observable;
mod typical;

pub use birkhoff::{
    birkhoff_at, birkhoff_fn, deviation_open, deviation_union, BirkhoffBlockOpen, DEFAULT_PIECE_BUDGET,
};
pub use dense::{check_visits, DenseConfig, DenseOrbit, Visit};
pub use map::{digits, orbit, Branch, PAMap};
pub use modulus::*;
pub use observable::Observable;
pub use typical::{lebesgue_constants, lebesgue_target, modulus_for, typical_bc, ModulusProvider, ObservableConstants};
