//! Kernels of metaplectic operators, their Gaussian-smoothed magnitudes and
//! the localization manifold, with a grid-based numerical oracle.

// `!(x <= cap)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod gaussian;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod subspace;
pub mod symplectic;
pub mod tf;

pub use symplectic::{
    make_generator, symplectic_inverse, validate_symplectic, word_product, Generator,
    GeneratorWord, SymplecticError, SymplecticMatrix, Tolerances,
};
