//! Energy forms on weighted graphs with killing.
//!
//! A graph carries a measure `m`, symmetric edge weights `b` and a killing
//! term `c`. The energy of `f` is
//!
//! ```text
//! E(f) = Σ_{x,y} b(x,y) (f(x) − f(y))² + Σ_x c(x) f(x)²
//! ```
//!
//! with the sum over ordered pairs, so each edge contributes twice.
//!
//! ```
//! use dirform::{generate, Family, VertexFunction};
//! use dirform::forms::energy;
//!
//! let g = generate(Family::Path { n: 3 }).unwrap();
//! let f = VertexFunction::from_vec(vec![1.0, 0.0, 0.0]);
//! assert_eq!(energy(&g, &f), 2.0);
//! ```

pub mod decomposition;
pub mod error;
pub mod forms;
pub mod function;
pub mod graph;
pub mod harmonic;
pub mod linalg;
pub mod potentials;
pub mod structure;

pub use error::{Error, Result};
pub use function::{Exhaustion, Functional, Vertex, VertexFunction, VertexSet};
pub use graph::{generate, generate_with, Edge, Family, Graph, GraphBuilder};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/forms.md")]
    mod forms {}
    #[doc = include_str!("../../../book/src/structure.md")]
    mod structure {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/infinite.md")]
    mod infinite {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
