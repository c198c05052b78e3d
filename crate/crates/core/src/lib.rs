//! Exact computations in `H² × T_p` and for `PSL₂(Z[1/p])` acting on it.
//!
//! Everything is rational: tree vertices are lattice classes with
//! `Z[1/p]` offsets, horoball sizes and distance arguments are exact
//! rationals, and distances are reported as `log q` for rational `q`.

pub mod arith;
pub mod bs;
pub mod comm;
pub mod error;
pub mod horosphere;
pub mod hyperbolic;
pub mod matrix;
pub mod rigidity;
pub mod selftest;
pub mod tree;

pub use arith::{abs_p, val_p, LogDist, Prime, Rational, Valuation};
pub use error::{Error, Result};
pub use matrix::{mobius_point, BoundaryPoint, ProjMatrix};
pub use tree::{BtTree, TreeLine, TreeVertex};
