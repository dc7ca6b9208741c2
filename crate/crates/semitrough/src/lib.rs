//! Numerical toolkit for entire spacelike constant sigma_k curvature graphs
//! in Minkowski space R^{n,1}: semitrough profiles and their Lorentz-boosted
//! families, sub-/supersolution barriers with prescribed lightlike set and
//! perturbation, spacelike cutoff functions, Legendre/Moreau duals, and a
//! desk-scale (n = 2) dual Dirichlet solver.
//!
//! The crate is organized around the objects themselves:
//!
//! - [`sphere`]: directions, geodesic caps, lightlike sets F, support
//!   functions, and the convex-hull domain in the unit ball.
//! - [`profile`]: the rotational profile f_k from its first integral, with
//!   asymptotic normalization against the unit hyperboloid.
//! - [`trough`]: standard and boosted semitroughs, their gradient formulas,
//!   inscribed/enclosing ball families, and the translation limit.
//! - [`perturb`]: the boundary perturbation q, its derived constants, and
//!   the shift maps p, p-hat.
//! - [`barrier`]: the subsolution, supersolution, spacelike cutoff, and the
//!   ordering/asymptotics report.
//! - [`dual`]: Legendre transforms, gradient maps, Moreau envelopes, and the
//!   dual-side inequality checks.
//! - [`curvature`]: elementary symmetric functions, principal curvatures of
//!   spacelike graphs, and the dual Hessian-quotient operator.
//! - [`dirichlet`]: the 2-D dual Dirichlet solver on shrunken convex
//!   domains with Legendre-back reconstruction.
//!
//! Run `cargo run -- verify-all` for the full check battery, or see the
//! `examples/` directory for one runnable program per capability.

pub mod barrier;
pub mod curvature;
pub mod error;
pub mod numerics;
pub mod perturb;
pub mod profile;
pub mod sphere;
pub mod trough;

pub use error::{Error, Result};
