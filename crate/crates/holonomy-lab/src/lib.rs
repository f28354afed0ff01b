//! Numerical laboratory for parallel transport and holonomy on principal
//! bundles over low-dimensional base manifolds.
//!
//! The crate is organised in layers:
//!
//! * [`lie`] — matrix Lie groups/algebras (U(1), SU(2), SO(3), GL(n)) with
//!   exponentials, adjoint action, brackets and the generalized conjugation
//!   of `G × G` on `G`.
//! * [`geometry`] — chart-based atlases, piecewise-smooth curves and loop
//!   families, plus simplex quadrature with the oriented boundary-face
//!   decomposition.
//! * [`bundle`] — principal bundles as transition cocycles, local connection
//!   forms, gauge transformations, curvature, and the division map together
//!   with generalized gauge transformations and their star product.
//! * [`groupoid`] — an exact finite-groupoid kernel: product/opposite
//!   groupoids, actions with momentum maps, generalized conjugations and
//!   twisted-equivariant-map checks.
//! * [`transport`] — horizontal lifts and parallel transport via a
//!   commutator-free fourth-order Lie-group integrator, with the
//!   equivariance, composition, boundary-restriction and flatness laws as
//!   runnable checks.
//! * [`chen`] — Wilson loops and truncated generalized Wilson loops for
//!   BF-pairs via iterated simplex integrals.
//! * [`presets`] — the bundled atlases, bundles, connections, loops and
//!   families addressable by name from scenario files.

pub mod bundle;
pub mod chen;
pub mod geometry;
pub mod groupoid;
pub mod lie;
pub mod linalg;
pub mod presets;
pub mod transport;

pub use lie::{AlgebraElement, GroupElement, GroupSpec, Representation};
