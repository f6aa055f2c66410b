//! TOML run configuration with strict validation.
//!
//! Unknown keys are rejected, parse errors carry the position reported by
//! the TOML parser, and every numeric constraint of the referenced
//! modules is re-validated on load with the offending field named.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainSpec, QuadratureRule};
use crate::dyadic::BesovIndex;
use crate::ensemble::{EnsembleSpec, SpectrumProfile};
use crate::error::{Error, Result};
use crate::estimates::EstimatesConfig;
use crate::evolution::{SolverConfig, Stepper};
use crate::nonlinear::Dealias;
use crate::{Domain64, Field64};

fn default_dt() -> f64 {
    1e-3
}
fn default_window() -> f64 {
    1e-2
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    50
}
fn default_ceiling() -> f64 {
    1e6
}
fn default_horizon_constant() -> f64 {
    0.1
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_decay_rate() -> f64 {
    3.0
}
fn default_count() -> usize {
    100
}
fn default_resolutions() -> Vec<usize> {
    vec![32, 48, 64]
}
fn default_mu_list() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}
fn default_gamma() -> f64 {
    0.25
}
fn default_perturbation() -> f64 {
    1e-6
}
fn default_p() -> f64 {
    2.0
}
fn default_q() -> f64 {
    1.0
}
fn default_s() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub mode_cutoff: usize,
    pub grid_size: usize,
    #[serde(default)]
    pub quadrature: QuadratureRule,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Simulation horizon; when absent the existence-window heuristic
    /// `horizon_constant / ‖θ₀‖_{Ḃ²_{2,1}}` decides at run time.
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_max_iter")]
    pub picard_max_iter: usize,
    #[serde(default)]
    pub stepper: Stepper,
    #[serde(default = "default_ceiling")]
    pub blowup_ceiling: f64,
    #[serde(default = "default_horizon_constant")]
    pub horizon_constant: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    /// Regularisation strength for single runs; 0 is the plain advection.
    #[serde(default)]
    pub mu: f64,
    /// Decreasing ladder for sweeps.
    #[serde(default = "default_mu_list")]
    pub mu_list: Vec<f64>,
    #[serde(default)]
    pub dealias: Dealias,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    L2,
    #[serde(rename = "besov-2-2-1")]
    Besov221,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum InitialDataSection {
    /// Seeded random field with power-law coefficient decay.
    RandomDecay {
        #[serde(default = "default_decay_rate")]
        decay_rate: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        normalize: Normalization,
    },
    /// A single eigenfunction.
    SingleMode {
        mode_m: usize,
        mode_n: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// Coefficients read from a checkpoint file.
    Checkpoint { path: PathBuf },
}

impl Default for InitialDataSection {
    fn default() -> Self {
        Self::RandomDecay {
            decay_rate: default_decay_rate(),
            amplitude: default_amplitude(),
            normalize: Normalization::Besov221,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    /// Output root; falls back to `SQG_OUTPUT_ROOT` or `./runs`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_decay_rate")]
    pub decay_rate: f64,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatesSection {
    #[serde(default = "EstimatesConfig::default_resolution_slack")]
    pub resolution_slack: f64,
    #[serde(default = "EstimatesConfig::default_mu_slack")]
    pub mu_slack: f64,
    #[serde(default = "EstimatesConfig::default_psi_bound_cap")]
    pub psi_bound_cap: f64,
    #[serde(default = "EstimatesConfig::default_denominator_guard")]
    pub denominator_guard: f64,
    #[serde(default = "EstimatesConfig::default_scaling_slack")]
    pub scaling_slack: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl Default for EstimatesSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallSection {
    /// Relative size of the perturbation, `‖δθ‖ = perturbation · ‖θ₀‖`.
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
}

impl Default for GronwallSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovSection {
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: f64,
}

impl Default for BesovSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

/// Full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub initial_data: InitialDataSection,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub estimates: EstimatesSection,
    #[serde(default)]
    pub gronwall: GronwallSection,
    #[serde(default)]
    pub besov: BesovSection,
}

impl EstimatesConfig {
    fn default_resolution_slack() -> f64 {
        Self::default().resolution_slack
    }
    fn default_mu_slack() -> f64 {
        Self::default().mu_slack
    }
    fn default_psi_bound_cap() -> f64 {
        Self::default().psi_bound_cap
    }
    fn default_denominator_guard() -> f64 {
        Self::default().denominator_guard
    }
    fn default_scaling_slack() -> f64 {
        Self::default().scaling_slack
    }
}

fn constraint(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigConstraint {
        field: field.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if d.mode_cutoff == 0 {
            return Err(constraint("domain.mode_cutoff", "must be >= 1"));
        }
        if d.grid_size < d.mode_cutoff {
            return Err(constraint(
                "domain.grid_size",
                format!(
                    "must be >= mode_cutoff ({} < {})",
                    d.grid_size, d.mode_cutoff
                ),
            ));
        }

        let s = &self.solver;
        if !(s.dt > 0.0) || !s.dt.is_finite() {
            return Err(constraint("solver.dt", "must be positive and finite"));
        }
        if s.window < s.dt {
            return Err(constraint("solver.window", "must be >= dt"));
        }
        if let Some(t) = s.t_final {
            if !(t > 0.0) || !t.is_finite() {
                return Err(constraint("solver.t_final", "must be positive and finite"));
            }
            if t < s.window {
                return Err(constraint("solver.t_final", "must be >= window"));
            }
        }
        if !(s.picard_tol > 0.0) {
            return Err(constraint("solver.picard_tol", "must be positive"));
        }
        if s.picard_max_iter == 0 {
            return Err(constraint("solver.picard_max_iter", "must be >= 1"));
        }
        if !(s.blowup_ceiling > 0.0) {
            return Err(constraint("solver.blowup_ceiling", "must be positive"));
        }
        if !(s.horizon_constant > 0.0) {
            return Err(constraint("solver.horizon_constant", "must be positive"));
        }

        let nl = &self.nonlinearity;
        if !nl.mu.is_finite() || nl.mu < 0.0 {
            return Err(constraint("nonlinearity.mu", "must be finite and >= 0"));
        }
        if nl.mu_list.is_empty() {
            return Err(constraint("nonlinearity.mu_list", "must not be empty"));
        }
        if nl.mu_list.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(constraint(
                "nonlinearity.mu_list",
                "entries must be finite and positive",
            ));
        }
        if nl.mu_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(constraint(
                "nonlinearity.mu_list",
                "entries must be strictly decreasing",
            ));
        }
        if nl.dealias == Dealias::ThreeHalves && 2 * d.grid_size < 3 * d.mode_cutoff {
            return Err(constraint(
                "domain.grid_size",
                format!(
                    "three-halves dealiasing needs G >= 3N/2, got N = {}, G = {}",
                    d.mode_cutoff, d.grid_size
                ),
            ));
        }

        match &self.initial_data {
            InitialDataSection::RandomDecay {
                decay_rate,
                amplitude,
                ..
            } => {
                if !decay_rate.is_finite() || *decay_rate < 0.0 {
                    return Err(constraint(
                        "initial_data.decay_rate",
                        "must be finite and >= 0",
                    ));
                }
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(constraint("initial_data.amplitude", "must be positive"));
                }
            }
            InitialDataSection::SingleMode { mode_m, mode_n, .. } => {
                if *mode_m < 1 || *mode_n < 1 || *mode_m > d.mode_cutoff || *mode_n > d.mode_cutoff
                {
                    return Err(constraint(
                        "initial_data.mode_m",
                        format!("modes must lie in 1..={}", d.mode_cutoff),
                    ));
                }
            }
            InitialDataSection::Checkpoint { path } => {
                if path.as_os_str().is_empty() {
                    return Err(constraint("initial_data.path", "must not be empty"));
                }
            }
        }

        if self.experiment.id.is_empty() {
            return Err(constraint("experiment.id", "must not be empty"));
        }

        let e = &self.ensemble;
        if e.count == 0 {
            return Err(constraint("ensemble.count", "must be >= 1"));
        }
        if e.resolutions.is_empty() {
            return Err(constraint("ensemble.resolutions", "must not be empty"));
        }
        if e.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(constraint(
                "ensemble.resolutions",
                "must be strictly increasing",
            ));
        }

        if !(self.estimates.gamma > 0.0 && self.estimates.gamma < 0.5) {
            return Err(constraint("estimates.gamma", "must lie in (0, 1/2)"));
        }
        if !(self.gronwall.perturbation > 0.0) {
            return Err(constraint("gronwall.perturbation", "must be positive"));
        }
        BesovIndex::new(self.besov.s, self.besov.p, self.besov.q)
            .map_err(|e| constraint("besov", e.to_string()))?;
        Ok(())
    }

    pub fn domain_spec(&self) -> DomainSpec {
        DomainSpec {
            mode_cutoff: self.domain.mode_cutoff,
            grid_size: self.domain.grid_size,
            quadrature: self.domain.quadrature,
        }
    }

    pub fn build_domain(&self) -> Result<Domain64> {
        Domain::create(self.domain_spec())
    }

    /// Solver configuration; `t_final` falls back to the given horizon
    /// when the config leaves it open.
    pub fn solver_config(&self, t_final: f64) -> SolverConfig {
        SolverConfig {
            t_final: self.solver.t_final.unwrap_or(t_final),
            dt: self.solver.dt,
            window: self.solver.window,
            picard_tol: self.solver.picard_tol,
            picard_max_iter: self.solver.picard_max_iter,
            stepper: self.solver.stepper,
            blowup_ceiling: self.solver.blowup_ceiling,
            dealias: self.nonlinearity.dealias,
        }
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            count: self.ensemble.count,
            profile: SpectrumProfile::Decay {
                r: self.ensemble.decay_rate,
            },
            seed: self.experiment.seed,
            resolutions: self.ensemble.resolutions.clone(),
        }
    }

    pub fn estimates_config(&self) -> EstimatesConfig {
        EstimatesConfig {
            resolution_slack: self.estimates.resolution_slack,
            mu_slack: self.estimates.mu_slack,
            psi_bound_cap: self.estimates.psi_bound_cap,
            denominator_guard: self.estimates.denominator_guard,
            scaling_slack: self.estimates.scaling_slack,
        }
    }

    /// Construct the initial field described by `[initial_data]`.
    pub fn build_initial_data(&self, domain: &Domain64) -> Result<Field64> {
        match &self.initial_data {
            InitialDataSection::RandomDecay {
                decay_rate,
                amplitude,
                normalize,
            } => {
                let ens = EnsembleSpec {
                    count: 1,
                    profile: SpectrumProfile::Decay { r: *decay_rate },
                    seed: self.experiment.seed,
                    resolutions: vec![domain.mode_cutoff()],
                };
                let mut field = ens.generate(domain)?.pop().expect("count = 1");
                let norm = match normalize {
                    Normalization::L2 => field.l2_norm(),
                    Normalization::Besov221 => crate::dyadic::besov_norm(
                        &field,
                        BesovIndex::new(2.0, 2.0, 1.0).unwrap(),
                    )?,
                };
                if norm > 0.0 {
                    field.scale(amplitude / norm);
                }
                Ok(field)
            }
            InitialDataSection::SingleMode {
                mode_m,
                mode_n,
                amplitude,
            } => crate::field::SpectralField::single_mode(domain, *mode_m, *mode_n, *amplitude),
            InitialDataSection::Checkpoint { path } => {
                let ck = super::read_checkpoint(path)?;
                if ck.field.domain().spec() != domain.spec() {
                    return Err(constraint(
                        "initial_data.path",
                        "checkpoint resolution does not match [domain]",
                    ));
                }
                Ok(ck.field)
            }
        }
    }

    /// Output root: config value, else `SQG_OUTPUT_ROOT`, else `./runs`.
    pub fn output_root(&self) -> PathBuf {
        if let Some(dir) = &self.experiment.output_dir {
            return dir.clone();
        }
        if let Ok(env) = std::env::var("SQG_OUTPUT_ROOT") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        PathBuf::from("runs")
    }
}

/// Load and validate a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::ConfigParse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [domain]
        mode_cutoff = 32
        grid_size = 48

        [experiment]
        id = "t"
    "#;

    fn parse(s: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::ConfigParse {
            path: "<test>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_config_loads_with_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.domain.mode_cutoff, 32);
        assert_eq!(cfg.solver.dt, 1e-3);
        assert_eq!(cfg.nonlinearity.mu, 0.0);
        assert_eq!(cfg.nonlinearity.mu_list, vec![1e-1, 1e-2, 1e-3, 1e-4]);
        assert!(cfg.solver.t_final.is_none());
        assert_eq!(cfg.besov.s, 2.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = format!("{MINIMAL}\n[domain2]\nx = 1\n");
        assert!(matches!(parse(&bad), Err(Error::ConfigParse { .. })));
        let bad = MINIMAL.replace("grid_size = 48", "grid_size = 48\nwhatever = 3");
        assert!(matches!(parse(&bad), Err(Error::ConfigParse { .. })));
    }

    #[test]
    fn constraint_errors_name_the_field() {
        let bad = MINIMAL.replace("grid_size = 48", "grid_size = 16");
        match parse(&bad) {
            Err(Error::ConfigConstraint { field, .. }) => {
                assert_eq!(field, "domain.grid_size")
            }
            other => panic!("expected constraint error, got {other:?}"),
        }

        let bad = format!("{MINIMAL}\n[solver]\ndt = -0.1\n");
        match parse(&bad) {
            Err(Error::ConfigConstraint { field, .. }) => assert_eq!(field, "solver.dt"),
            other => panic!("expected constraint error, got {other:?}"),
        }

        let bad = format!("{MINIMAL}\n[nonlinearity]\nmu_list = [1e-2, 1e-1]\n");
        match parse(&bad) {
            Err(Error::ConfigConstraint { field, .. }) => {
                assert_eq!(field, "nonlinearity.mu_list")
            }
            other => panic!("expected constraint error, got {other:?}"),
        }
    }

    #[test]
    fn initial_data_variants() {
        let cfg = parse(&format!(
            "{MINIMAL}\n[initial_data]\nkind = \"single-mode\"\nmode_m = 2\nmode_n = 3\n"
        ))
        .unwrap();
        let domain = cfg.build_domain().unwrap();
        let f = cfg.build_initial_data(&domain).unwrap();
        assert!((f.coeff()[[1, 2]] - 1.0).abs() < 1e-15);

        // out-of-range mode
        let bad = format!(
            "{MINIMAL}\n[initial_data]\nkind = \"single-mode\"\nmode_m = 40\nmode_n = 1\n"
        );
        assert!(matches!(parse(&bad), Err(Error::ConfigConstraint { .. })));

        // random data is deterministic under the seed
        let cfg = parse(&format!(
            "{MINIMAL}\n[initial_data]\nkind = \"random-decay\"\nnormalize = \"l2\"\namplitude = 2.0\n"
        ))
        .unwrap();
        let a = cfg.build_initial_data(&domain).unwrap();
        let b = cfg.build_initial_data(&domain).unwrap();
        assert_eq!(a.coeff(), b.coeff());
        assert!((a.l2_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn solver_config_horizon_fallback() {
        let cfg = parse(MINIMAL).unwrap();
        let sc = cfg.solver_config(0.25);
        assert_eq!(sc.t_final, 0.25);
        let cfg = parse(&format!("{MINIMAL}\n[solver]\nt_final = 0.05\n")).unwrap();
        let sc = cfg.solver_config(0.25);
        assert_eq!(sc.t_final, 0.05);
    }
}
