//! The truncated Dirichlet eigenbasis on the unit square and its
//! collocation transforms.
//!
//! Eigenfunctions are `e_{mn}(x, y) = 2 sin(mπx) sin(nπy)` for
//! `m, n ∈ {1..N}`, orthonormal in L²((0,1)²), with exact eigenvalues
//! `π²(m² + n²)` of the Dirichlet Laplacian. The spectrum is bounded below
//! by `2π² > 0`, so negative fractional powers of the operator are
//! well defined on the whole truncated basis.
//!
//! A [`Domain`] owns the trigonometric tables for one `(N, G, quadrature)`
//! choice and is shared behind an `Arc` by every field living on it. All
//! tables are read-only after construction, so a domain is safe to share
//! across threads.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float::FloatNum;

/// Quadrature rule, which also fixes the collocation node family.
///
/// Both rules place `G` uniform interior nodes per axis:
///
/// - `Midpoint`: `x_i = (2i - 1) / (2G)`, weight `1/G`. On these nodes the
///   products of sine *and* cosine harmonics up to combined frequency
///   `2G - 1` integrate exactly, so Parseval identities hold for fields and
///   for their derivatives, and the dealiased Galerkin projection of a
///   quadratic product is exact. This is the default.
/// - `CompositeTrapezoid`: `x_i = i / (G + 1)`, weight `1/(G+1)`, the
///   trapezoid rule applied to the zero extension of the integrand. Exact
///   for sine-sine products, but cosine pairs (derivative fields do not
///   vanish on the boundary) pick up an O(1/G) boundary defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    #[default]
    Midpoint,
    CompositeTrapezoid,
}

/// Discretisation parameters: mode cutoff `N`, grid size `G`, quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Number of retained modes per axis; mode indices run over `1..=N`.
    pub mode_cutoff: usize,
    /// Number of interior collocation nodes per axis; `G >= N`.
    pub grid_size: usize,
    /// Quadrature rule / node family.
    pub quadrature: QuadratureRule,
}

impl DomainSpec {
    pub fn new(mode_cutoff: usize, grid_size: usize) -> Self {
        Self {
            mode_cutoff,
            grid_size,
            quadrature: QuadratureRule::default(),
        }
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureRule) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode_cutoff == 0 {
            return Err(Error::InvalidDomain("mode_cutoff must be >= 1".into()));
        }
        if self.grid_size < self.mode_cutoff {
            return Err(Error::InvalidDomain(format!(
                "grid_size ({}) must be >= mode_cutoff ({}) for transform invertibility",
                self.grid_size, self.mode_cutoff
            )));
        }
        Ok(())
    }
}

/// Exact eigenvalue of the Dirichlet Laplacian for mode `(m, n)`, `m, n >= 1`.
pub fn eigenvalue(m: usize, n: usize) -> f64 {
    debug_assert!(m >= 1 && n >= 1);
    PI * PI * ((m * m + n * n) as f64)
}

/// Smallest eigenvalue of the truncated (equivalently, full) spectrum: `2π²`.
pub fn spectrum_min() -> f64 {
    eigenvalue(1, 1)
}

/// Largest eigenvalue retained at mode cutoff `N`: `2π²N²`.
pub fn spectrum_max(mode_cutoff: usize) -> f64 {
    eigenvalue(mode_cutoff, mode_cutoff)
}

/// Transform-ready domain: collocation nodes, sine/cosine tables, the
/// diagonal Gram matrix of the discrete sine system, and the eigenvalue
/// grid of the truncated operator.
#[derive(Debug)]
pub struct Domain<T: FloatNum> {
    spec: DomainSpec,
    nodes: Array1<T>,
    weight: T,
    sin_tab: Array2<T>,
    cos_tab: Array2<T>,
    gram: Array1<T>,
    eig: Array2<T>,
    sqrt_eig: Array2<T>,
}

impl<T: FloatNum> Domain<T> {
    /// Build the domain and its trigonometric tables.
    pub fn create(spec: DomainSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let n = spec.mode_cutoff;
        let g = spec.grid_size;

        let (nodes_f64, weight): (Vec<f64>, f64) = match spec.quadrature {
            QuadratureRule::Midpoint => (
                (1..=g).map(|i| (2 * i - 1) as f64 / (2 * g) as f64).collect(),
                1.0 / g as f64,
            ),
            QuadratureRule::CompositeTrapezoid => (
                (1..=g).map(|i| i as f64 / (g + 1) as f64).collect(),
                1.0 / (g + 1) as f64,
            ),
        };

        let mut sin_tab = Array2::zeros((g, n));
        let mut cos_tab = Array2::zeros((g, n));
        for (i, &x) in nodes_f64.iter().enumerate() {
            for m in 1..=n {
                let arg = m as f64 * PI * x;
                sin_tab[[i, m - 1]] = T::from_f64_lossy(arg.sin());
                cos_tab[[i, m - 1]] = T::from_f64_lossy(arg.cos());
            }
        }

        // Diagonal of the discrete sine Gram matrix, Σ_i sin²(mπx_i).
        // Closed form: G/2 on midpoint nodes (G for m = G), (G+1)/2 on
        // trapezoid nodes; computed from the table so both grids share one
        // code path.
        let gram = Array1::from_iter(
            (0..n).map(|m| sin_tab.column(m).iter().map(|&s| s * s).sum::<T>()),
        );

        let mut eig = Array2::zeros((n, n));
        let mut sqrt_eig = Array2::zeros((n, n));
        for m in 1..=n {
            for k in 1..=n {
                let a = eigenvalue(m, k);
                eig[[m - 1, k - 1]] = T::from_f64_lossy(a);
                sqrt_eig[[m - 1, k - 1]] = T::from_f64_lossy(a.sqrt());
            }
        }

        Ok(Arc::new(Self {
            spec,
            nodes: Array1::from_iter(nodes_f64.iter().map(|&x| T::from_f64_lossy(x))),
            weight: T::from_f64_lossy(weight),
            sin_tab,
            cos_tab,
            gram,
            eig,
            sqrt_eig,
        }))
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn mode_cutoff(&self) -> usize {
        self.spec.mode_cutoff
    }

    pub fn grid_size(&self) -> usize {
        self.spec.grid_size
    }

    /// Interior collocation nodes along one axis.
    pub fn nodes(&self) -> &Array1<T> {
        &self.nodes
    }

    /// One-dimensional quadrature weight per node.
    pub fn weight(&self) -> T {
        self.weight
    }

    pub(crate) fn sin_tab(&self) -> &Array2<T> {
        &self.sin_tab
    }

    pub(crate) fn cos_tab(&self) -> &Array2<T> {
        &self.cos_tab
    }

    pub(crate) fn gram(&self) -> &Array1<T> {
        &self.gram
    }

    /// Eigenvalue grid `π²(m² + n²)` of the truncated operator.
    pub fn eigenvalues(&self) -> &Array2<T> {
        &self.eig
    }

    /// Square roots of the eigenvalue grid (the spectrum of Λ).
    pub fn sqrt_eigenvalues(&self) -> &Array2<T> {
        &self.sqrt_eig
    }
}

impl<T: FloatNum> PartialEq for Domain<T> {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_closed_form() {
        assert!((eigenvalue(1, 1) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((eigenvalue(1, 2) - 5.0 * PI * PI).abs() < 1e-13);
        assert!((eigenvalue(3, 4) - 25.0 * PI * PI).abs() < 1e-12);
        assert!((eigenvalue(1, 1) - 19.739_208_802_178_716).abs() < 1e-9);
        assert!((eigenvalue(1, 2) - 49.348_022_005_446_79).abs() < 1e-9);
    }

    #[test]
    fn spec_validation() {
        assert!(DomainSpec::new(0, 4).validate().is_err());
        assert!(DomainSpec::new(8, 4).validate().is_err());
        assert!(DomainSpec::new(8, 8).validate().is_ok());
    }

    #[test]
    fn gram_diagonal_closed_form() {
        let d = Domain::<f64>::create(DomainSpec::new(8, 12)).unwrap();
        for m in 0..8 {
            assert!((d.gram()[m] - 6.0).abs() < 1e-10, "midpoint gram = G/2");
        }
        let spec = DomainSpec::new(8, 12).with_quadrature(QuadratureRule::CompositeTrapezoid);
        let d = Domain::<f64>::create(spec).unwrap();
        for m in 0..8 {
            assert!((d.gram()[m] - 6.5).abs() < 1e-10, "trapezoid gram = (G+1)/2");
        }
    }

    #[test]
    fn nodes_are_interior() {
        for quad in [QuadratureRule::Midpoint, QuadratureRule::CompositeTrapezoid] {
            let d = Domain::<f64>::create(DomainSpec::new(4, 6).with_quadrature(quad)).unwrap();
            for &x in d.nodes() {
                assert!(x > 0.0 && x < 1.0);
            }
        }
    }
}
