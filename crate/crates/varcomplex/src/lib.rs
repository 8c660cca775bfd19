//! Exact symbolic calculus on jet bundles.
//!
//! The crate implements the variational bicomplex over a fibred bundle with
//! rational-coefficient differential polynomials as the scalar ring:
//!
//! - [`bundle`], [`expr`]: jet coordinates, multi-indices, partial and total
//!   derivatives, canonical normal forms;
//! - [`forms`]: the exterior algebra over `{dx, theta}` with bidegree
//!   projections, interior products and the `dx`/`dy` boundary basis;
//! - [`varops`]: `d`, `d_H`, `d_V`, the interior Euler projector `tau`, the
//!   variational operator `delta`, the Euler-Lagrange map and the first
//!   variational formula;
//! - [`inverse`]: Helmholtz checking, variational triviality, constructive
//!   `d_H`-antiderivatives and Lagrangian reconstruction;
//! - [`symmetry`]: prolonged vector fields, Lie derivatives, Noether
//!   currents and conservation checks;
//! - [`cohomlab`]: finite truncations of the bicomplex as exact sparse
//!   matrices over the rationals, Betti reports and the randomized
//!   operator-identity suite;
//! - [`parse`], [`render`]: the expression/form grammar and text, JSON and
//!   LaTeX output.
//!
//! All values are immutable and all operations pure, so everything can be
//! shared across threads. With the default `parallel` feature, matrix
//! assembly and the identity suite shard work over rayon; disabling the
//! feature gives a dependency-free sequential build with identical output.

pub mod bundle;
pub mod cohomlab;
pub mod expr;
pub mod forms;
pub mod inverse;
pub mod linalg;
mod par;
pub mod parse;
pub mod random;
pub mod render;
pub mod symmetry;
pub mod varops;

pub use bundle::{BundleSpec, JetVar, MultiIndex};
pub use cohomlab::{BettiReport, ExactnessReport, SuiteReport, TruncationSpec};
pub use expr::{Expr, UnaryFn};
pub use forms::{DyForm, Form, FormError, Generator, SourceForm};
pub use inverse::{AntiderivativeConfig, HelmholtzReport, InverseError, Verdict};
pub use symmetry::{ConservationReport, EvolutionaryField};
pub use varops::{PeelOrder, VariationalSplit};
