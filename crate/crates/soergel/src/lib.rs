//! An exact-arithmetic engine for the bounded homotopy category of the
//! diagrammatic Hecke category.
//!
//! The crate builds Bott-Samelson bimodules concretely (morphisms are
//! matrices over the polynomial ring in the 01-basis), bounded bigraded
//! complexes over formal sums of such objects, and Rouquier complexes for
//! braid words. On top of that sit the residue/canonical-map calculus, a
//! filtered lifting engine for extending object-level structure maps to
//! complexes, and the machinery that verifies centrality of half twists,
//! full twists, and relative half twists at small Coxeter rank.
//!
//! All arithmetic is over exact rationals; a check either passes as a matrix
//! identity or fails loudly.

pub mod error;
pub mod par;
pub mod poly;
pub mod solve;

pub mod realization;

pub mod bimodule;

pub mod complex;
pub mod minimize;

pub mod rouquier;

pub mod lifting;

pub mod centralizer;

pub mod bar;

pub mod json;

pub use error::{Error, Result};
pub use poly::{Poly, Q};
pub use realization::{CoxeterType, Realization};
