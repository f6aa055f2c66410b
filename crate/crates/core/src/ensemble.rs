//! Seeded random test-field ensembles for the verification harness.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainSpec};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::float::FloatNum;
use crate::DomainRef;

/// Coefficient magnitude profile of the random fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SpectrumProfile {
    /// Unit-variance coefficients on every mode.
    Flat,
    /// Coefficients damped by `(m² + n²)^{-r/2}`; `r = 3` puts the fields
    /// comfortably inside the critical Besov space at desk resolutions.
    Decay { r: f64 },
}

impl Default for SpectrumProfile {
    fn default() -> Self {
        Self::Decay { r: 3.0 }
    }
}

/// Reproducible ensemble description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub count: usize,
    pub profile: SpectrumProfile,
    pub seed: u64,
    /// Mode cutoffs the harness evaluates at; the grid is the dealiased
    /// default `G = 3N/2` unless overridden by the caller.
    pub resolutions: Vec<usize>,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            count: 100,
            profile: SpectrumProfile::default(),
            seed: 42,
            resolutions: vec![32, 48, 64],
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidEnsemble("count must be >= 1".into()));
        }
        if self.resolutions.is_empty() {
            return Err(Error::InvalidEnsemble("no resolutions listed".into()));
        }
        if let SpectrumProfile::Decay { r } = self.profile {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::InvalidEnsemble(format!(
                    "decay rate r = {r} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    /// Default domain used at resolution `n`.
    pub fn domain_at<T: FloatNum>(&self, n: usize) -> Result<DomainRef<T>> {
        Domain::create(DomainSpec::new(n, 3 * n / 2))
    }

    /// Generate the ensemble at resolution `n`, L²-normalised.
    ///
    /// The RNG stream is keyed by `(seed, n)`, so ensembles at different
    /// resolutions are independent but each is bit-reproducible.
    pub fn generate<T: FloatNum>(&self, domain: &DomainRef<T>) -> Result<Vec<SpectralField<T>>> {
        self.validate()?;
        let n = domain.mode_cutoff();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(n as u64);
        let mut out = Vec::with_capacity(self.count);
        for _ in 0..self.count {
            let coeff = Array2::from_shape_fn((n, n), |(mi, ki)| {
                let gauss: f64 = rng.sample(StandardNormal);
                let damp = match self.profile {
                    SpectrumProfile::Flat => 1.0,
                    SpectrumProfile::Decay { r } => {
                        let sq = ((mi + 1) * (mi + 1) + (ki + 1) * (ki + 1)) as f64;
                        sq.powf(-r / 2.0)
                    }
                };
                T::from_f64_lossy(gauss * damp)
            });
            let mut field = SpectralField::from_coeff(domain, coeff)?;
            let norm = field.l2_norm();
            if norm > T::zero() {
                field.scale(norm.recip());
            }
            out.push(field);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_seed() {
        let spec = EnsembleSpec {
            count: 3,
            seed: 7,
            ..EnsembleSpec::default()
        };
        let d = spec.domain_at::<f64>(16).unwrap();
        let a = spec.generate(&d).unwrap();
        let b = spec.generate(&d).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.coeff(), y.coeff());
        }
    }

    #[test]
    fn normalised_and_decaying() {
        let spec = EnsembleSpec {
            count: 2,
            ..EnsembleSpec::default()
        };
        let d = spec.domain_at::<f64>(24).unwrap();
        let fields = spec.generate(&d).unwrap();
        for f in &fields {
            assert!((f.l2_norm() - 1.0).abs() < 1e-12);
            // high modes carry visibly less energy than low modes
            let lo = f.coeff()[[0, 0]].abs();
            let hi = f.coeff()[[23, 23]].abs();
            assert!(hi < lo.max(0.3));
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = EnsembleSpec {
            count: 0,
            ..EnsembleSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = EnsembleSpec {
            resolutions: vec![],
            ..EnsembleSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = EnsembleSpec {
            profile: SpectrumProfile::Decay { r: f64::NAN },
            ..EnsembleSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
