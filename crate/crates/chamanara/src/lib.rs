//! Exact-arithmetic toolkit for the Chamanara surface at contraction ratio
//! one half: the unit square with every half-edge glued to the matching half
//! of the opposite side, halving lengths indefinitely.
//!
//! The crate builds the glued square, traces geodesics exactly, decomposes the
//! surface into maximal cylinders for directions of slope `2^n`, and turns the
//! commensurable inverse moduli of those cylinders into parabolic elements of
//! the Veech group. On the hyperbolic side it implements the group
//! `G = ⟨P1, H⟩` those parabolics generate: Möbius action, element
//! classification, the fundamental domain with cusps `{∞, 3, −3}` and a free
//! side `(−1/3, 1/3)`, a reduction algorithm, and a membership test that
//! returns an expressing word.
//!
//! Everything decision-bearing runs over arbitrary-precision rationals and
//! quadratic extensions `Q(√d)` ([`exactnum`]); floating point exists only in
//! SVG coordinate emission ([`svg`]).
//!
//! See the `examples/` directory for one runnable program per capability, and
//! the `chamanara` binary for the command-line front end.

pub mod cylinders;
pub mod exactnum;
pub mod fuchsian;
pub mod report;
pub mod surface;
pub mod svg;

pub use cylinders::{decompose, Cylinder, CylinderDecomposition, CylinderKind};
pub use exactnum::{QuadRat, Rational};
pub use fuchsian::{HPoint, Mat2, Word};
pub use surface::{CutLabel, DirVec, Surface, SurfacePoint};
