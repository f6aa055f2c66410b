//! Pseudospectral solver and verification harness for the inviscid surface
//! quasi-geostrophic (SQG) equation on the unit square with homogeneous
//! Dirichlet boundary conditions,
//!
//! ```text
//!     ∂t θ + (u·∇)θ = 0,       u = ∇⊥ Λ⁻¹ θ,        θ|∂Ω = 0,
//! ```
//!
//! where Λ is the square root of the Dirichlet Laplacian. On the unit square
//! the Dirichlet eigenbasis is the product sine family, so every operator in
//! the functional calculus (spectral multipliers, dyadic frequency blocks,
//! resolvents, fractional powers) acts diagonally and exactly on the
//! truncated coefficient array.
//!
//! The crate is organised around that fact:
//!
//! - [`domain`] / [`field`]: the truncated eigenbasis, collocation
//!   transforms, derivatives and Lᵖ quadrature;
//! - [`dyadic`]: dyadic partition of unity, resolvent band-pass operators,
//!   Besov and Chemin–Lerner norms;
//! - [`nonlinear`]: the SQG velocity, the dealiased advection term N₀ and
//!   its resolvent regularisation N_μ;
//! - [`evolution`]: Picard iteration on the integral equation, an explicit
//!   RK4 cross-check, μ-sweeps and perturbation-growth experiments;
//! - [`ensemble`] / [`estimates`]: seeded random field ensembles and
//!   measured-constant verification of the functional inequalities
//!   (Bernstein, resolvent operator bounds, norm equivalence, bilinear and
//!   nonlinear estimates);
//! - [`io`]: run configuration, checkpoints, trajectory and report files.
//!
//! Core numerics are generic over the scalar type through [`FloatNum`];
//! the aliases below fix `f64`, which is what the CLI and the verification
//! suite use.

// `!(x > 0)` style guards are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod dyadic;
pub mod ensemble;
pub mod error;
pub mod estimates;
pub mod evolution;
pub mod field;
pub mod float;
pub mod io;
pub mod nonlinear;

pub use domain::{Domain, DomainSpec, QuadratureRule};
pub use dyadic::{BesovIndex, DyadicProfile};
pub use ensemble::{EnsembleSpec, SpectrumProfile};
pub use error::{Error, Result};
pub use evolution::{SolverConfig, Stepper, Trajectory};
pub use field::{GridField, SpectralField, VectorGridField};
pub use float::FloatNum;
pub use nonlinear::{Dealias, Nonlinearity, NonlinearityConfig};

/// Shared handle to a transform-ready domain.
pub type DomainRef<T> = std::sync::Arc<Domain<T>>;

/// `f64` domain handle, the default working precision.
pub type Domain64 = DomainRef<f64>;
/// `f64` spectral field.
pub type Field64 = SpectralField<f64>;
/// `f64` collocation-grid field.
pub type Grid64 = GridField<f64>;
/// `f64` trajectory.
pub type Trajectory64 = Trajectory<f64>;
