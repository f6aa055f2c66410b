//! Spectral and collocation-grid representations of a scalar field.
//!
//! [`SpectralField`] stores coefficients on the truncated eigenbasis and is
//! the universal state of the solver; [`GridField`] stores point samples at
//! the interior collocation nodes and carries the Lᵖ quadrature. The two are
//! connected by the separable sine transforms [`SpectralField::to_grid`] and
//! [`GridField::project`], which invert each other to round-off whenever
//! `G >= N`.

use ndarray::{Array2, Zip};


use crate::error::{Error, Result};
use crate::float::FloatNum;
use crate::DomainRef;

/// Scalar field as coefficients `coeff[m-1][n-1]` of the orthonormal
/// eigenfunctions `e_{mn}(x,y) = 2 sin(mπx) sin(nπy)`, `m, n ∈ 1..=N`.
///
/// The represented function vanishes identically on the boundary by
/// construction. By Parseval, its L² norm is the Euclidean norm of the
/// coefficient array.
#[derive(Debug, Clone)]
pub struct SpectralField<T: FloatNum> {
    domain: DomainRef<T>,
    coeff: Array2<T>,
}

impl<T: FloatNum> SpectralField<T> {
    /// Zero field.
    pub fn zeros(domain: &DomainRef<T>) -> Self {
        let n = domain.mode_cutoff();
        Self {
            domain: domain.clone(),
            coeff: Array2::zeros((n, n)),
        }
    }

    /// Field from a coefficient array; checks shape and finiteness.
    pub fn from_coeff(domain: &DomainRef<T>, coeff: Array2<T>) -> Result<Self> {
        let n = domain.mode_cutoff();
        if coeff.dim() != (n, n) {
            return Err(Error::ShapeMismatch {
                want: n,
                got: coeff.dim(),
            });
        }
        if coeff.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("spectral coefficients"));
        }
        Ok(Self {
            domain: domain.clone(),
            coeff,
        })
    }

    /// The single eigenfunction `amplitude · e_{mn}`.
    pub fn single_mode(domain: &DomainRef<T>, m: usize, n: usize, amplitude: T) -> Result<Self> {
        let cutoff = domain.mode_cutoff();
        if m < 1 || n < 1 || m > cutoff || n > cutoff {
            return Err(Error::InvalidDomain(format!(
                "mode ({m}, {n}) outside 1..={cutoff}"
            )));
        }
        let mut f = Self::zeros(domain);
        f.coeff[[m - 1, n - 1]] = amplitude;
        Ok(f)
    }

    pub fn domain(&self) -> &DomainRef<T> {
        &self.domain
    }

    pub fn coeff(&self) -> &Array2<T> {
        &self.coeff
    }

    pub fn coeff_mut(&mut self) -> &mut Array2<T> {
        &mut self.coeff
    }

    /// L² norm via Parseval (Euclidean norm of the coefficients).
    pub fn l2_norm(&self) -> T {
        self.coeff.iter().map(|&c| c * c).sum::<T>().sqrt()
    }

    /// Coefficient inner product, which equals the L² inner product.
    pub fn inner(&self, other: &Self) -> T {
        debug_assert_eq!(self.domain.spec(), other.domain.spec());
        Zip::from(&self.coeff)
            .and(&other.coeff)
            .fold(T::zero(), |acc, &a, &b| acc + a * b)
    }

    pub fn is_finite(&self) -> bool {
        self.coeff.iter().all(|c| c.is_finite())
    }

    /// `self + c · other` in place.
    pub fn scaled_add(&mut self, c: T, other: &Self) {
        debug_assert_eq!(self.domain.spec(), other.domain.spec());
        Zip::from(&mut self.coeff)
            .and(&other.coeff)
            .for_each(|a, &b| *a += c * b);
    }

    pub fn scale(&mut self, c: T) {
        self.coeff.mapv_inplace(|a| a * c);
    }

    /// Apply the diagonal spectral multiplier `a ↦ m(a)` evaluated at the
    /// eigenvalues of the Dirichlet Laplacian.
    ///
    /// This realises `φ_j(Λ)`, `ψ_j(Λ)`, fractional powers `Λ^s` and
    /// resolvents `(1 + μA)⁻¹` along with their compositions. Fails if the
    /// multiplier is non-finite at an eigenvalue occupied by a nonzero
    /// coefficient.
    pub fn apply_multiplier(&self, multiplier: impl Fn(T) -> T) -> Result<Self> {
        let eig = self.domain.eigenvalues();
        let mut coeff = self.coeff.clone();
        let mut bad: Option<f64> = None;
        Zip::from(&mut coeff).and(eig).for_each(|c, &a| {
            let m = multiplier(a);
            if !m.is_finite() && *c != T::zero() && bad.is_none() {
                bad = Some(a.to_f64_lossy());
            }
            *c = if *c == T::zero() { T::zero() } else { *c * m };
        });
        if let Some(eigenvalue) = bad {
            return Err(Error::NonFiniteMultiplier { eigenvalue });
        }
        Ok(Self {
            domain: self.domain.clone(),
            coeff,
        })
    }

    /// Fractional power `Λ^s` of the square root of the Dirichlet
    /// Laplacian: multiplier `a ↦ a^{s/2}`.
    ///
    /// Well defined for every real `s` because the spectrum is bounded
    /// below by `2π² > 0`.
    pub fn lambda_pow(&self, s: T) -> Self {
        let half = s / T::from_f64_lossy(2.0);
        // Infallible: eigenvalues are strictly positive.
        self.apply_multiplier(|a| a.powf(half))
            .expect("powers of a strictly positive spectrum are finite")
    }

    /// Sample the field on the collocation grid: `2 S C Sᵀ` with the
    /// domain's sine table `S`.
    pub fn to_grid(&self) -> GridField<T> {
        let s = self.domain.sin_tab();
        let two = T::from_f64_lossy(2.0);
        let values = s.dot(&self.coeff).dot(&s.t()) * two;
        GridField {
            domain: self.domain.clone(),
            values,
        }
    }

    /// Exact pointwise evaluation of the sine series at `(x, y)`.
    pub fn evaluate_at(&self, x: T, y: T) -> T {
        let pi = T::PI();
        let n = self.domain.mode_cutoff();
        let mut acc = T::zero();
        for m in 1..=n {
            let sx = (T::from_usize(m).unwrap() * pi * x).sin();
            if sx == T::zero() {
                continue;
            }
            for k in 1..=n {
                let c = self.coeff[[m - 1, k - 1]];
                if c != T::zero() {
                    acc += c * sx * (T::from_usize(k).unwrap() * pi * y).sin();
                }
            }
        }
        acc + acc
    }

    /// Gradient `(∂x f, ∂y f)` evaluated exactly on the grid by
    /// term-by-term differentiation of the sine series.
    pub fn gradient(&self) -> VectorGridField<T> {
        let d = &self.domain;
        let (s, c) = (d.sin_tab(), d.cos_tab());
        let two = T::from_f64_lossy(2.0);
        let pi = T::PI();
        let n = d.mode_cutoff();

        let mut cx = self.coeff.clone();
        for m in 0..n {
            let f = T::from_usize(m + 1).unwrap() * pi;
            cx.row_mut(m).mapv_inplace(|v| v * f);
        }
        let gx = c.dot(&cx).dot(&s.t()) * two;

        let mut cy = self.coeff.clone();
        for k in 0..n {
            let f = T::from_usize(k + 1).unwrap() * pi;
            cy.column_mut(k).mapv_inplace(|v| v * f);
        }
        let gy = s.dot(&cy).dot(&c.t()) * two;

        VectorGridField {
            x: GridField {
                domain: d.clone(),
                values: gx,
            },
            y: GridField {
                domain: d.clone(),
                values: gy,
            },
        }
    }

    /// Perpendicular gradient `∇⊥ f = (-∂y f, ∂x f)` on the grid.
    pub fn perp_gradient(&self) -> VectorGridField<T> {
        let g = self.gradient();
        let mut x = g.y;
        x.values.mapv_inplace(|v| -v);
        VectorGridField { x, y: g.x }
    }

    /// Second derivatives `(∂xx f, ∂xy f, ∂yy f)` on the grid.
    pub fn hessian(&self) -> [GridField<T>; 3] {
        let d = &self.domain;
        let (s, c) = (d.sin_tab(), d.cos_tab());
        let two = T::from_f64_lossy(2.0);
        let pi = T::PI();
        let n = d.mode_cutoff();
        let freq: Vec<T> = (1..=n).map(|m| T::from_usize(m).unwrap() * pi).collect();

        let mut cxx = self.coeff.clone();
        let mut cxy = self.coeff.clone();
        let mut cyy = self.coeff.clone();
        for m in 0..n {
            for k in 0..n {
                cxx[[m, k]] = -cxx[[m, k]] * freq[m] * freq[m];
                cxy[[m, k]] *= freq[m] * freq[k];
                cyy[[m, k]] = -cyy[[m, k]] * freq[k] * freq[k];
            }
        }
        let fxx = s.dot(&cxx).dot(&s.t()) * two;
        let fxy = c.dot(&cxy).dot(&c.t()) * two;
        let fyy = s.dot(&cyy).dot(&s.t()) * two;
        let wrap = |values| GridField {
            domain: d.clone(),
            values,
        };
        [wrap(fxx), wrap(fxy), wrap(fyy)]
    }
}

/// Point samples at the `G × G` interior collocation nodes.
#[derive(Debug, Clone)]
pub struct GridField<T: FloatNum> {
    domain: DomainRef<T>,
    values: Array2<T>,
}

impl<T: FloatNum> GridField<T> {
    pub fn from_values(domain: &DomainRef<T>, values: Array2<T>) -> Result<Self> {
        let g = domain.grid_size();
        if values.dim() != (g, g) {
            return Err(Error::ShapeMismatch {
                want: g,
                got: values.dim(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid samples"));
        }
        Ok(Self {
            domain: domain.clone(),
            values,
        })
    }

    pub fn domain(&self) -> &DomainRef<T> {
        &self.domain
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<T> {
        &mut self.values
    }

    /// L² projection onto the truncated sine basis (the inverse transform
    /// on band-limited data): `Sᵀ V S` normalised by the diagonal Gram
    /// matrix of the discrete sine system.
    pub fn project(&self) -> SpectralField<T> {
        let d = &self.domain;
        let s = d.sin_tab();
        let gram = d.gram();
        let mut coeff = s.t().dot(&self.values).dot(s);
        let two = T::from_f64_lossy(2.0);
        let n = d.mode_cutoff();
        for m in 0..n {
            for k in 0..n {
                coeff[[m, k]] /= two * gram[m] * gram[k];
            }
        }
        SpectralField {
            domain: d.clone(),
            coeff,
        }
    }

    /// Lᵖ norm by composite quadrature over `(0,1)²`; `p = ∞` is the
    /// maximum over nodes. Requires `p >= 1`.
    pub fn lp_norm(&self, p: f64) -> Result<T> {
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        if p.is_infinite() {
            return Ok(self
                .values
                .iter()
                .fold(T::zero(), |acc, &v| acc.max(v.abs())));
        }
        let w = self.domain.weight();
        let cell = w * w;
        let total = if p == 2.0 {
            self.values.iter().map(|&v| v * v).sum::<T>()
        } else if p == 1.0 {
            return Ok(self.values.iter().map(|&v| v.abs()).sum::<T>() * cell);
        } else {
            let pt = T::from_f64_lossy(p);
            self.values.iter().map(|&v| v.abs().powf(pt)).sum::<T>()
        };
        let pt = T::from_f64_lossy(p);
        Ok((total * cell).powf(pt.recip()))
    }

    /// Pointwise product, used to form nonlinear terms on the grid.
    pub fn pointwise_mul(&self, other: &Self) -> Result<Self> {
        if self.domain.spec() != other.domain.spec() {
            return Err(Error::DomainMismatch);
        }
        let mut values = self.values.clone();
        Zip::from(&mut values)
            .and(&other.values)
            .for_each(|a, &b| *a *= b);
        Ok(Self {
            domain: self.domain.clone(),
            values,
        })
    }
}

/// A two-component grid field, e.g. a velocity or a gradient.
#[derive(Debug, Clone)]
pub struct VectorGridField<T: FloatNum> {
    pub x: GridField<T>,
    pub y: GridField<T>,
}

impl<T: FloatNum> VectorGridField<T> {
    /// Pointwise dot product with another vector field.
    pub fn dot(&self, other: &Self) -> Result<GridField<T>> {
        if self.x.domain.spec() != other.x.domain.spec() {
            return Err(Error::DomainMismatch);
        }
        let mut values = self.x.values.clone();
        Zip::from(&mut values)
            .and(&other.x.values)
            .and(&self.y.values)
            .and(&other.y.values)
            .for_each(|a, &bx, &ay, &by| *a = *a * bx + ay * by);
        Ok(GridField {
            domain: self.x.domain.clone(),
            values,
        })
    }

    /// Maximum over nodes of the Euclidean magnitude `√(vx² + vy²)`.
    pub fn magnitude_linf(&self) -> T {
        Zip::from(&self.x.values)
            .and(&self.y.values)
            .fold(T::zero(), |acc, &a, &b| acc.max((a * a + b * b).sqrt()))
    }

    /// Lᵖ norm of the pointwise Euclidean magnitude.
    pub fn magnitude_lp(&self, p: f64) -> Result<T> {
        let mut mag = self.x.values.clone();
        Zip::from(&mut mag)
            .and(&self.y.values)
            .for_each(|a, &b| *a = (*a * *a + b * b).sqrt());
        GridField {
            domain: self.x.domain.clone(),
            values: mag,
        }
        .lp_norm(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, DomainSpec, QuadratureRule};
    use ndarray::Array2;
    use rand::prelude::*;

    fn dom(n: usize, g: usize) -> DomainRef<f64> {
        Domain::create(DomainSpec::new(n, g)).unwrap()
    }

    #[test]
    fn single_mode_round_trip() {
        let d = dom(8, 12);
        let f = SpectralField::single_mode(&d, 1, 1, 1.0).unwrap();
        let g = f.to_grid();
        // samples are 2 sin(πx) sin(πy)
        let x = d.nodes()[3];
        let y = d.nodes()[7];
        let expect = 2.0 * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
        assert!((g.values()[[3, 7]] - expect).abs() < 1e-14);
        let back = g.project();
        let mut err: f64 = 0.0;
        for m in 0..8 {
            for n in 0..8 {
                let want = if m == 0 && n == 0 { 1.0 } else { 0.0 };
                err = err.max((back.coeff()[[m, n]] - want).abs());
            }
        }
        assert!(err < 1e-12, "round-trip err {err}");
    }

    #[test]
    fn zero_round_trip() {
        let d = dom(6, 9);
        let f = SpectralField::zeros(&d);
        let back = f.to_grid().project();
        assert_eq!(back.l2_norm(), 0.0);
    }

    #[test]
    fn multiplier_identity_and_single_mode() {
        let d = dom(8, 12);
        let f = SpectralField::single_mode(&d, 1, 1, 1.0).unwrap();
        let id = f.apply_multiplier(|_| 1.0).unwrap();
        assert_eq!(id.coeff()[[0, 0]], 1.0);

        // Λ on e_{1,1} scales by sqrt(2π²) = π√2
        let lam = f.lambda_pow(1.0);
        let want = (2.0f64).sqrt() * std::f64::consts::PI;
        assert!((lam.coeff()[[0, 0]] - want).abs() < 1e-14);

        // (1 + A)^{-1} on e_{1,1}
        let res = f.apply_multiplier(|a| 1.0 / (1.0 + a)).unwrap();
        let want = 1.0 / (1.0 + 2.0 * std::f64::consts::PI.powi(2));
        assert!((res.coeff()[[0, 0]] - want).abs() < 1e-15);
    }

    #[test]
    fn multiplier_rejects_non_finite_on_occupied_modes() {
        let d = dom(4, 6);
        let f = SpectralField::single_mode(&d, 1, 1, 1.0).unwrap();
        let r = f.apply_multiplier(|a| if a < 30.0 { f64::NAN } else { 1.0 });
        assert!(matches!(r, Err(Error::NonFiniteMultiplier { .. })));
        // Unoccupied eigenvalues may be non-finite.
        let r = f.apply_multiplier(|a| if a > 30.0 { f64::INFINITY } else { 1.0 });
        assert!(r.is_ok());
    }

    #[test]
    fn lambda_pow_special_cases() {
        let d = dom(4, 6);
        let f = SpectralField::single_mode(&d, 1, 1, 1.0).unwrap();
        let id = f.lambda_pow(0.0);
        assert_eq!(id.coeff()[[0, 0]], 1.0);
        let inv = f.lambda_pow(-1.0);
        let want = 1.0 / (2.0 * std::f64::consts::PI.powi(2)).sqrt();
        assert!((inv.coeff()[[0, 0]] - want).abs() < 1e-15);
        // s = 2 is the Laplacian: coefficient scaled by π²(m²+n²)
        let g = SpectralField::single_mode(&d, 2, 3, 1.5).unwrap();
        let lap = g.lambda_pow(2.0);
        let want = 1.5 * crate::domain::eigenvalue(2, 3);
        assert!((lap.coeff()[[1, 2]] - want).abs() < 1e-12);
    }

    #[test]
    fn gradient_single_mode_closed_form() {
        let d = dom(8, 12);
        let f = SpectralField::single_mode(&d, 1, 1, 1.0).unwrap();
        let g = f.gradient();
        let pi = std::f64::consts::PI;
        let (x, y) = (d.nodes()[2], d.nodes()[9]);
        let gx_want = 2.0 * pi * (pi * x).cos() * (pi * y).sin();
        assert!((g.x.values()[[2, 9]] - gx_want).abs() < 1e-13);
        let p = f.perp_gradient();
        let gy_want = 2.0 * pi * (pi * x).sin() * (pi * y).cos();
        assert!((p.x.values()[[2, 9]] + gy_want).abs() < 1e-13);
        assert!((p.y.values()[[2, 9]] - gx_want).abs() < 1e-13);
    }

    #[test]
    fn gradient_of_zero() {
        let d = dom(6, 9);
        let g = SpectralField::zeros(&d).gradient();
        assert_eq!(g.magnitude_linf(), 0.0);
    }

    #[test]
    fn gradient_parseval() {
        // |grad f|_L2 equals |Λ f|_L2; the oracle side is a pure
        // coefficient computation
        let d = dom(16, 25);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let coeff = Array2::from_shape_fn((16, 16), |_| rng.random_range(-1.0..1.0));
        let f = SpectralField::from_coeff(&d, coeff).unwrap();
        let g = f.gradient();
        let quad = (g.x.lp_norm(2.0).unwrap().powi(2) + g.y.lp_norm(2.0).unwrap().powi(2)).sqrt();
        let oracle = f.lambda_pow(1.0).l2_norm();
        assert!(
            (quad - oracle).abs() <= 1e-10 * oracle,
            "grad-Parseval defect {:e}",
            (quad - oracle).abs() / oracle
        );
    }

    #[test]
    fn lp_norm_constant_and_modes() {
        let d = dom(8, 96);
        let ones = GridField::from_values(&d, Array2::from_elem((96, 96), 1.0)).unwrap();
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((ones.lp_norm(p).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(ones.lp_norm(0.5).is_err());

        let e11 = SpectralField::single_mode(&d, 1, 1, 1.0).unwrap().to_grid();
        assert!((e11.lp_norm(2.0).unwrap() - 1.0).abs() < 1e-6);
        assert!((e11.lp_norm(f64::INFINITY).unwrap() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn boundary_values_vanish() {
        let d = dom(8, 12);
        let mut f = SpectralField::zeros(&d);
        f.coeff_mut().mapv_inplace(|_| 0.37);
        for t in [0.0, 0.25, 0.8, 1.0] {
            assert!(f.evaluate_at(0.0, t).abs() < 1e-12);
            assert!(f.evaluate_at(1.0, t).abs() < 1e-12);
            assert!(f.evaluate_at(t, 0.0).abs() < 1e-12);
            assert!(f.evaluate_at(t, 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_grid_round_trips_too() {
        let spec = DomainSpec::new(8, 12).with_quadrature(QuadratureRule::CompositeTrapezoid);
        let d = Domain::<f64>::create(spec).unwrap();
        let f = SpectralField::single_mode(&d, 3, 5, 2.0).unwrap();
        let back = f.to_grid().project();
        let diff = (back.coeff() - f.coeff())
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(diff < 1e-12);
    }
}
