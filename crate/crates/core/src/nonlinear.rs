//! SQG velocity, advection nonlinearity N₀ and its resolvent
//! regularisation N_μ, computed pseudospectrally.
//!
//! The advection term is formed in physical space and projected back onto
//! the retained modes (Galerkin). With the 3/2 rule the pointwise product
//! is evaluated on an internal zero-padded grid whose quadrature is exact
//! for every harmonic a quadratic product can reach, so the projection is
//! the exact Galerkin truncation and the discrete transport term inherits
//! the skew symmetry `⟨(u·∇)g, g⟩ = 0` to round-off.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainSpec};
use crate::error::{Error, Result};
use crate::field::{SpectralField, VectorGridField};
use crate::float::FloatNum;
use crate::DomainRef;

/// Dealiasing strategy for the quadratic product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dealias {
    /// Evaluate products on a zero-padded grid fine enough that no aliased
    /// harmonic folds back onto the retained modes.
    #[default]
    ThreeHalves,
    /// Evaluate products on the domain's own collocation grid.
    None,
}

/// Configuration of the nonlinearity: dealiasing and the regularisation
/// strength `μ ≥ 0` (`μ = 0` selects the plain advection term N₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityConfig {
    pub dealias: Dealias,
    pub mu: f64,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self {
            dealias: Dealias::ThreeHalves,
            mu: 0.0,
        }
    }
}

impl NonlinearityConfig {
    pub fn validate(&self, spec: &DomainSpec) -> Result<()> {
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::InvalidNonlinearity(format!(
                "mu = {} must be finite and >= 0",
                self.mu
            )));
        }
        if self.dealias == Dealias::ThreeHalves && 2 * spec.grid_size < 3 * spec.mode_cutoff {
            return Err(Error::InvalidNonlinearity(format!(
                "three-halves dealiasing requires G >= 3N/2 (N = {}, G = {})",
                spec.mode_cutoff, spec.grid_size
            )));
        }
        Ok(())
    }
}

/// Smallest grid on which products of three retained harmonics integrate
/// exactly: `2 G > 3 N`.
pub(crate) fn dealias_grid_size(mode_cutoff: usize) -> usize {
    let g = (3 * mode_cutoff).div_ceil(2);
    if 2 * g <= 3 * mode_cutoff {
        g + 1
    } else {
        g
    }
}

/// The advection operator bound to one domain, with its internal
/// product-evaluation grid.
#[derive(Debug)]
pub struct Nonlinearity<T: FloatNum> {
    domain: DomainRef<T>,
    product_domain: DomainRef<T>,
    config: NonlinearityConfig,
}

impl<T: FloatNum> Nonlinearity<T> {
    pub fn new(domain: &DomainRef<T>, config: NonlinearityConfig) -> Result<Self> {
        config.validate(domain.spec())?;
        let product_domain = match config.dealias {
            Dealias::ThreeHalves => {
                let spec = DomainSpec {
                    mode_cutoff: domain.mode_cutoff(),
                    grid_size: dealias_grid_size(domain.mode_cutoff()),
                    quadrature: domain.spec().quadrature,
                };
                Domain::create(spec)?
            }
            Dealias::None => domain.clone(),
        };
        Ok(Self {
            domain: domain.clone(),
            product_domain,
            config,
        })
    }

    pub fn config(&self) -> &NonlinearityConfig {
        &self.config
    }

    pub fn domain(&self) -> &DomainRef<T> {
        &self.domain
    }

    /// SQG velocity `u = ∇⊥ Λ⁻¹ θ`, sampled on the domain grid.
    /// Divergence-free by construction (mixed partials of the stream
    /// function cancel exactly).
    pub fn velocity(&self, theta: &SpectralField<T>) -> Result<VectorGridField<T>> {
        self.check_domain(theta)?;
        Ok(theta.lambda_pow(-T::one()).perp_gradient())
    }

    /// Galerkin advection `N₀(θ, θ̃) = P_N [ (∇⊥Λ⁻¹θ · ∇) θ̃ ]`.
    pub fn advection(
        &self,
        theta: &SpectralField<T>,
        theta_t: &SpectralField<T>,
    ) -> Result<SpectralField<T>> {
        self.check_domain(theta)?;
        self.check_domain(theta_t)?;
        let pd = &self.product_domain;
        let stream = reindex(&theta.lambda_pow(-T::one()), pd);
        let u = stream.perp_gradient();
        let grad = reindex(theta_t, pd).gradient();
        let dot = u.dot(&grad)?;
        Ok(reindex(&dot.project(), &self.domain))
    }

    /// Regularised nonlinearity
    /// `N_μ(θ, θ̃) = (1+μA)⁻¹ [ (∇⊥Λ⁻¹θ · ∇) (1+μA)⁻¹ θ̃ ]`, `μ > 0`.
    pub fn regularized(
        &self,
        theta: &SpectralField<T>,
        theta_t: &SpectralField<T>,
        mu: f64,
    ) -> Result<SpectralField<T>> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidNonlinearity(format!(
                "regularized nonlinearity needs mu > 0, got {mu}; use advection for mu = 0"
            )));
        }
        let mu_t = T::from_f64_lossy(mu);
        let resolvent = |a: T| (T::one() + mu_t * a).recip();
        let smoothed = theta_t.apply_multiplier(resolvent)?;
        let advected = self.advection(theta, &smoothed)?;
        advected.apply_multiplier(resolvent)
    }

    /// `N_μ(θ, θ)` with μ from the configuration; μ = 0 selects N₀.
    pub fn apply(&self, theta: &SpectralField<T>) -> Result<SpectralField<T>> {
        if self.config.mu == 0.0 {
            self.advection(theta, theta)
        } else {
            self.regularized(theta, theta, self.config.mu)
        }
    }

    fn check_domain(&self, f: &SpectralField<T>) -> Result<()> {
        if f.domain().spec() != self.domain.spec() {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }
}

/// Re-interpret a field's coefficients on another domain with the same
/// mode cutoff (used to move between the main and the product grids).
fn reindex<T: FloatNum>(f: &SpectralField<T>, target: &DomainRef<T>) -> SpectralField<T> {
    debug_assert_eq!(f.domain().mode_cutoff(), target.mode_cutoff());
    SpectralField::from_coeff(target, f.coeff().clone())
        .expect("same mode cutoff and finite coefficients")
}
