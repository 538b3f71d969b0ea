//! Core algorithms for measuring filling invariants of finitely
//! presented groups and of loops in triangulated model geometries.
//!
//! The crate is organised in layers:
//!
//! * [`word`] / [`presentation`] — free-group words and finite
//!   presentations, with small-cancellation reduction.
//! * [`model`] — concrete group models (free abelian, free, genus-2
//!   surface) with exact word-problem routines plus an independent
//!   isometry-based cross-check.
//! * [`hyperbolic`] — hyperboloid-model primitives and the regular
//!   octagonal tiling underlying the surface model.

pub mod cayley;
pub mod degree;
pub mod error;
pub mod filling;
pub mod geom;
pub mod hyperbolic;
pub mod lab;
pub mod model;
pub mod norm;
pub mod numberfield;
pub mod presentation;
pub mod push;
pub mod winding;
pub mod word;

pub use error::{Error, Result};
pub use model::{Element, GroupModel};
pub use presentation::Presentation;
pub use word::Word;
