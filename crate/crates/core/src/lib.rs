//! Convex bodies, L^p and logarithmic Minkowski combinations, volume and
//! moment estimators, and numerical checks of log-Brunn–Minkowski type
//! inequalities.

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod combine;
pub mod error;
pub mod geom;
pub mod hull;
pub mod lp;
pub mod measure;
pub mod sample;
pub mod vector;
pub mod verify;

pub use error::{Error, Result};
pub use geom::{make_hpoly, make_vpoly, Body, Rep, Subspace};
pub use vector::Vector;
