//! Dyadic spectral localisation and Besov norms.
//!
//! The partition of unity is built from the standard smooth bump
//! `ρ(t) = exp(-1/t)`: with
//!
//! ```text
//!     χ(λ) = 1 for λ ≤ 1,   χ(λ) = ρ(2-λ) / (ρ(2-λ) + ρ(λ-1)) on (1,2),
//!     χ(λ) = 0 for λ ≥ 2,   φ₀(λ) = χ(λ) - χ(2λ),
//! ```
//!
//! one has `supp φ₀ ⊆ [1/2, 2]`, `φ₀ ≥ 0`, and the telescoping identity
//! `Σ_j φ₀(λ/2^j) = 1` for every `λ > 0`. The dyadic blocks `φ_j(Λ)`, the
//! low-pass `S_j = Σ_{k≤j} φ_k(Λ) = χ(Λ/2^j)` and the resolvent band-pass
//!
//! ```text
//!     ψ_j(Λ) = (1 + 2^{-2j-2} A)⁻¹ - (1 + 2^{-2j} A)⁻¹
//!            = ¾ · 2^{-2j} A (1 + 2^{-2j-2} A)⁻¹ (1 + 2^{-2j} A)⁻¹
//! ```
//!
//! all act as diagonal multipliers on the eigenbasis. The product form on
//! the second line shows `ψ_j ∈ [0, 1)`, so its square root is real; it is
//! also how `ψ_j` is evaluated here, which keeps `ψ_j = (ψ_j^{1/2})²` exact
//! to round-off.
//!
//! Note the scale convention: `φ_j` and `S_j` are functions of `Λ = √A` and
//! are therefore evaluated at `√a` for an eigenvalue `a` of `A`, while
//! `ψ_j` is defined directly through resolvents of `A`.

use serde::{Deserialize, Serialize};

use crate::domain::{spectrum_max, spectrum_min, DomainSpec};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::float::FloatNum;

/// Smooth transition function: 1 below 1, 0 above 2, monotone between.
pub fn chi<T: FloatNum>(lambda: T) -> T {
    let one = T::one();
    let two = one + one;
    if lambda <= one {
        one
    } else if lambda >= two {
        T::zero()
    } else {
        let rho = |t: T| (-t.recip()).exp();
        let a = rho(two - lambda);
        let b = rho(lambda - one);
        a / (a + b)
    }
}

/// Generator of the dyadic partition: `φ₀(λ) = χ(λ) - χ(2λ)`.
pub fn phi0<T: FloatNum>(lambda: T) -> T {
    chi(lambda) - chi(lambda + lambda)
}

/// Active dyadic block range for a truncated spectrum.
///
/// Outside `j_min..=j_max` every block vanishes identically on the
/// spectrum of the truncated operator; the range is padded by two blocks
/// on each side of the occupied dyadic shells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicProfile {
    pub j_min: i32,
    pub j_max: i32,
}

impl DyadicProfile {
    /// Block range covering `√a ∈ [√(2π²), √(2π²N²)]` with ±2 padding.
    pub fn for_domain(spec: &DomainSpec) -> Self {
        let lambda_min = spectrum_min().sqrt();
        let lambda_max = spectrum_max(spec.mode_cutoff).sqrt();
        Self {
            j_min: lambda_min.log2().floor() as i32 - 2,
            j_max: lambda_max.log2().ceil() as i32 + 2,
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    pub fn len(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.j_max < self.j_min
    }

    /// Worst deviation of `Σ_j φ_j(√a)` from 1 over the occupied
    /// eigenvalues, with the sum taken over `[j_min - 2, j_max + 2]`.
    pub fn partition_deviation<T: FloatNum>(&self, domain: &crate::DomainRef<T>) -> T {
        let mut worst = T::zero();
        for &sqrt_a in domain.sqrt_eigenvalues() {
            let mut sum = T::zero();
            for j in (self.j_min - 2)..=(self.j_max + 2) {
                sum += phi0(sqrt_a * pow2(-j));
            }
            worst = worst.max((sum - T::one()).abs());
        }
        worst
    }
}

/// Exact power of two as a scalar; `2^j` is representable for all
/// relevant `j`.
fn pow2<T: FloatNum>(j: i32) -> T {
    T::from_f64_lossy(f64::powi(2.0, j))
}

/// Dyadic block `φ_j(Λ) f`: multiplier `a ↦ φ₀(√a / 2^j)`.
pub fn phi_block<T: FloatNum>(f: &SpectralField<T>, j: i32) -> SpectralField<T> {
    let inv = pow2::<T>(-j);
    f.apply_multiplier(|a| phi0(a.sqrt() * inv))
        .expect("phi_0 is finite everywhere")
}

/// Low-pass `S_j f = Σ_{k ≤ j} φ_k(Λ) f`, evaluated through the telescoped
/// form `χ(Λ / 2^j)`, which the partial sums collapse to exactly.
pub fn low_pass<T: FloatNum>(f: &SpectralField<T>, j: i32) -> SpectralField<T> {
    let inv = pow2::<T>(-j);
    f.apply_multiplier(|a| chi(a.sqrt() * inv))
        .expect("chi is finite everywhere")
}

/// High-pass complement `(1 - S_j) f`.
pub fn high_pass<T: FloatNum>(f: &SpectralField<T>, j: i32) -> SpectralField<T> {
    let inv = pow2::<T>(-j);
    f.apply_multiplier(|a| T::one() - chi(a.sqrt() * inv))
        .expect("chi is finite everywhere")
}

/// Scalar symbol of the resolvent band-pass `ψ_j` at eigenvalue `a`,
/// evaluated in the positive product form.
pub fn psi_symbol<T: FloatNum>(a: T, j: i32) -> T {
    let b = a * pow2(-2 * j);
    let three_quarter = T::from_f64_lossy(0.75);
    let quarter = T::from_f64_lossy(0.25);
    three_quarter * b / ((T::one() + quarter * b) * (T::one() + b))
}

/// Resolvent band-pass `ψ_j(Λ) f`.
pub fn psi_block<T: FloatNum>(f: &SpectralField<T>, j: i32) -> SpectralField<T> {
    f.apply_multiplier(|a| psi_symbol(a, j))
        .expect("psi_j is finite everywhere")
}

/// Square-root band-pass `ψ_j(Λ)^{1/2} f`; real because `ψ_j ≥ 0`.
pub fn psi_sqrt_block<T: FloatNum>(f: &SpectralField<T>, j: i32) -> SpectralField<T> {
    f.apply_multiplier(|a| psi_symbol(a, j).sqrt())
        .expect("psi_j is finite everywhere")
}

/// Besov index triple `(s, p, q)`; `p, q ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0) || p.is_nan() {
            return Err(Error::InvalidBesovIndex(format!("p = {p}, require p >= 1")));
        }
        if !(q >= 1.0) || q.is_nan() {
            return Err(Error::InvalidBesovIndex(format!("q = {q}, require q >= 1")));
        }
        if s.is_nan() || s.is_infinite() {
            return Err(Error::InvalidBesovIndex(format!("s = {s} not finite")));
        }
        Ok(Self { s, p, q })
    }
}

/// ℓ^q accumulation of the per-block values `2^{sj} ‖·‖`; the block range
/// is finite so no tail estimate is involved.
fn lq_accumulate<T: FloatNum>(terms: impl Iterator<Item = T>, q: f64) -> T {
    if q.is_infinite() {
        terms.fold(T::zero(), |acc, t| acc.max(t))
    } else if q == 1.0 {
        terms.fold(T::zero(), |acc, t| acc + t)
    } else {
        let qt = T::from_f64_lossy(q);
        terms
            .fold(T::zero(), |acc, t| acc + t.powf(qt))
            .powf(qt.recip())
    }
}

/// Besov norm `‖f‖_{Ḃ^s_{p,q}}`: ℓ^q over the active blocks of
/// `2^{sj} ‖φ_j(Λ) f‖_{L^p}`, with the Lᵖ norms taken by quadrature on the
/// collocation grid.
pub fn besov_norm<T: FloatNum>(f: &SpectralField<T>, idx: BesovIndex) -> Result<T> {
    let profile = DyadicProfile::for_domain(f.domain().spec());
    let terms: Result<Vec<T>> = profile
        .blocks()
        .map(|j| {
            let block = phi_block(f, j);
            let lp = block.to_grid().lp_norm(idx.p)?;
            Ok(T::from_f64_lossy(f64::powi(2.0, j).powf(idx.s)) * lp)
        })
        .collect();
    Ok(lq_accumulate(terms?.into_iter(), idx.q))
}

/// Equivalent norm through the resolvent band-pass (valid for `|s-2| < 1`):
/// ℓ^q over blocks of `2^{(s-2)j} ‖ψ_j(Λ)^{1/2} Δf‖_{L^p}`.
///
/// The Laplacian is applied as `A f = Λ² f`; the sign of `Δ = -A` is
/// irrelevant inside the norm.
pub fn besov_norm_equiv<T: FloatNum>(f: &SpectralField<T>, idx: BesovIndex) -> Result<T> {
    if !((idx.s - 2.0).abs() < 1.0) {
        return Err(Error::EquivalenceRange(idx.s));
    }
    let lap = f.lambda_pow(T::from_f64_lossy(2.0));
    let profile = DyadicProfile::for_domain(f.domain().spec());
    let terms: Result<Vec<T>> = profile
        .blocks()
        .map(|j| {
            let block = psi_sqrt_block(&lap, j);
            let lp = block.to_grid().lp_norm(idx.p)?;
            Ok(T::from_f64_lossy(f64::powi(2.0, j).powf(idx.s - 2.0)) * lp)
        })
        .collect();
    Ok(lq_accumulate(terms?.into_iter(), idx.q))
}

/// Chemin–Lerner norm of a time-sampled trajectory: the time supremum is
/// taken inside the blockwise sum,
/// `Σ_j 2^{sj} max_t ‖φ_j(Λ) θ(t)‖_{L²}`,
/// with the supremum over the stored samples (no interpolation) and the
/// block L² norms evaluated via Parseval.
pub fn chemin_lerner_norm<T: FloatNum>(states: &[SpectralField<T>], s: f64) -> Result<T> {
    let first = states.first().ok_or(Error::EmptyTrajectory)?;
    let profile = DyadicProfile::for_domain(first.domain().spec());
    let mut total = T::zero();
    for j in profile.blocks() {
        let sup = states
            .iter()
            .map(|state| phi_block(state, j).l2_norm())
            .fold(T::zero(), |acc, v| acc.max(v));
        total += T::from_f64_lossy(f64::powi(2.0, j).powf(s)) * sup;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{eigenvalue, Domain, DomainSpec};
    use crate::DomainRef;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dom(n: usize, g: usize) -> DomainRef<f64> {
        Domain::create(DomainSpec::new(n, g)).unwrap()
    }

    fn random_field(d: &DomainRef<f64>, seed: u64) -> SpectralField<f64> {
        let n = d.mode_cutoff();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeff = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        SpectralField::from_coeff(d, coeff).unwrap()
    }

    #[test]
    fn chi_and_phi0_shape() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(3.0), 0.0);
        let mid = chi(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        // support and positivity of phi0
        assert_eq!(phi0(0.4), 0.0);
        assert_eq!(phi0(2.5), 0.0);
        for i in 0..200 {
            let l = 0.3 + i as f64 * 0.012;
            assert!(phi0(l) >= 0.0, "phi0({l}) < 0");
        }
        // monotone on [1,2]
        let mut prev = chi(1.0);
        for i in 1..=100 {
            let v = chi(1.0 + i as f64 / 100.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn partition_of_unity_on_spectrum() {
        for n in [16usize, 32] {
            let d = dom(n, 3 * n / 2);
            let profile = DyadicProfile::for_domain(d.spec());
            let dev = profile.partition_deviation(&d);
            assert!(dev <= 1e-12, "partition deviation {dev} at N={n}");
        }
    }

    #[test]
    fn blocks_reconstruct_field() {
        let d = dom(16, 24);
        let f = random_field(&d, 1);
        let profile = DyadicProfile::for_domain(d.spec());
        let mut sum = SpectralField::zeros(&d);
        for j in profile.blocks() {
            sum.scaled_add(1.0, &phi_block(&f, j));
        }
        sum.scaled_add(-1.0, &f);
        assert!(sum.l2_norm() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn single_mode_touches_at_most_two_blocks() {
        let d = dom(8, 12);
        let f = SpectralField::single_mode(&d, 1, 1, 1.0).unwrap();
        let profile = DyadicProfile::for_domain(d.spec());
        let active: Vec<i32> = profile
            .blocks()
            .filter(|&j| phi_block(&f, j).l2_norm() > 0.0)
            .collect();
        assert!(!active.is_empty() && active.len() <= 2, "active = {active:?}");
        // and they are consecutive
        if active.len() == 2 {
            assert_eq!(active[1], active[0] + 1);
        }
        assert_eq!(phi_block(&SpectralField::zeros(&d), 3).l2_norm(), 0.0);
    }

    #[test]
    fn almost_orthogonality_of_blocks() {
        let d = dom(16, 24);
        let f = random_field(&d, 2);
        let profile = DyadicProfile::for_domain(d.spec());
        for j in profile.blocks() {
            for k in profile.blocks() {
                if (j - k).abs() >= 2 {
                    let twice = phi_block(&phi_block(&f, j), k);
                    assert!(twice.l2_norm() <= 1e-14 * f.l2_norm());
                }
            }
        }
    }

    #[test]
    fn low_pass_telescopes() {
        let d = dom(16, 24);
        let f = random_field(&d, 3);
        let profile = DyadicProfile::for_domain(d.spec());

        let all = low_pass(&f, profile.j_max + 2);
        let mut diff = all.clone();
        diff.scaled_add(-1.0, &f);
        assert!(diff.l2_norm() <= 1e-12 * f.l2_norm());

        let none = low_pass(&f, profile.j_min - 2);
        assert_eq!(none.l2_norm(), 0.0);

        // low + high complement is exact
        let j = (profile.j_min + profile.j_max) / 2;
        let mut sum = low_pass(&f, j);
        sum.scaled_add(1.0, &high_pass(&f, j));
        sum.scaled_add(-1.0, &f);
        assert!(sum.l2_norm() <= 1e-13 * f.l2_norm());

        // S_j matches the literal block sum
        let mut literal = SpectralField::zeros(&d);
        for k in (profile.j_min - 2)..=j {
            literal.scaled_add(1.0, &phi_block(&f, k));
        }
        literal.scaled_add(-1.0, &low_pass(&f, j));
        assert!(literal.l2_norm() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn psi_symbol_values() {
        // at a = 2^{2j}: 1/(1 + 1/4) - 1/2 = 0.3
        for j in [-2, 0, 3] {
            let a = f64::powi(2.0, 2 * j);
            assert!((psi_symbol(a, j) - 0.3).abs() < 1e-15);
            // agreement of product form with the resolvent difference
            let b = a * f64::powi(2.0, -2 * j);
            let diff = 1.0 / (1.0 + 0.25 * b) - 1.0 / (1.0 + b);
            assert!((psi_symbol(a, j) - diff).abs() < 1e-15);
        }
        // range (0,1)
        for j in -3..8 {
            for &a in [19.7, 100.0, 1e4, 1e7].iter() {
                let v = psi_symbol(a, j);
                assert!(v > 0.0 && v < 1.0);
            }
        }
    }

    #[test]
    fn psi_sqrt_composes_to_psi() {
        let d = dom(12, 18);
        let f = random_field(&d, 4);
        for j in 0..8 {
            let once = psi_block(&f, j);
            let twice = psi_sqrt_block(&psi_sqrt_block(&f, j), j);
            let mut diff = once.clone();
            diff.scaled_add(-1.0, &twice);
            assert!(diff.l2_norm() <= 1e-13 * f.l2_norm());
        }
    }

    #[test]
    fn besov_norm_single_mode_scalar_oracle() {
        let d = dom(8, 12);
        let f = SpectralField::single_mode(&d, 1, 1, 1.0).unwrap();
        let idx = BesovIndex::new(0.0, 2.0, 1.0).unwrap();
        let got = besov_norm(&f, idx).unwrap();

        // oracle: direct scalar sum over blocks of phi_0(sqrt(2pi^2)/2^j),
        // since ||e11||_{L2} = 1
        let lambda = eigenvalue(1, 1).sqrt();
        let profile = DyadicProfile::for_domain(d.spec());
        let want: f64 = profile
            .blocks()
            .map(|j| phi0(lambda / f64::powi(2.0, j)))
            .sum();
        assert!((got - want).abs() < 1e-12, "got {got}, oracle {want}");
    }

    #[test]
    fn besov_norm_zero_and_homogeneity() {
        let d = dom(12, 18);
        let idx = BesovIndex::new(2.0, 2.0, 1.0).unwrap();
        assert_eq!(besov_norm(&SpectralField::zeros(&d), idx).unwrap(), 0.0);

        let f = random_field(&d, 5);
        let mut g = f.clone();
        g.scale(3.0);
        let a = besov_norm(&f, idx).unwrap();
        let b = besov_norm(&g, idx).unwrap();
        assert!((b - 3.0 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn besov_norm_equiv_range_and_single_mode_oracle() {
        let d = dom(8, 12);
        let f = SpectralField::single_mode(&d, 1, 1, 1.0).unwrap();
        let bad = BesovIndex::new(3.2, 2.0, 1.0).unwrap();
        assert!(matches!(
            besov_norm_equiv(&f, bad),
            Err(Error::EquivalenceRange(_))
        ));
        assert_eq!(
            besov_norm_equiv(&SpectralField::zeros(&d), BesovIndex::new(2.0, 2.0, 1.0).unwrap())
                .unwrap(),
            0.0
        );

        // scalar oracle: a * sum_j psi_j(a)^{1/2} at a = 2pi^2
        let idx = BesovIndex::new(2.0, 2.0, 1.0).unwrap();
        let got = besov_norm_equiv(&f, idx).unwrap();
        let a = eigenvalue(1, 1);
        let profile = DyadicProfile::for_domain(d.spec());
        let want: f64 = profile.blocks().map(|j| a * psi_symbol(a, j).sqrt()).sum();
        assert!(
            (got - want).abs() <= 1e-10 * want,
            "got {got}, oracle {want}"
        );
    }

    #[test]
    fn chemin_lerner_degenerate_cases() {
        let d = dom(12, 18);
        let f = random_field(&d, 6);
        let idx = BesovIndex::new(2.0, 2.0, 1.0).unwrap();
        let b = besov_norm(&f, idx).unwrap();

        // single state and constant-in-time trajectories match the static norm
        let single = chemin_lerner_norm(std::slice::from_ref(&f), 2.0).unwrap();
        assert!((single - b).abs() <= 1e-12 * b);
        let constant = chemin_lerner_norm(&[f.clone(), f.clone(), f.clone()], 2.0).unwrap();
        assert!((constant - b).abs() <= 1e-12 * b);

        // a zero second state contributes nothing
        let with_zero = chemin_lerner_norm(&[f.clone(), SpectralField::zeros(&d)], 2.0).unwrap();
        assert!((with_zero - b).abs() <= 1e-12 * b);

        assert!(matches!(
            chemin_lerner_norm::<f64>(&[], 2.0),
            Err(Error::EmptyTrajectory)
        ));
    }
}
