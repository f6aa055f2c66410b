//! Trajectory-level invariants of the time steppers.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sqg_core::domain::{Domain, DomainSpec};
use sqg_core::dyadic::{besov_norm, BesovIndex};
use sqg_core::evolution::{rk4_solve, SolverConfig, Stepper};
use sqg_core::{DomainRef, Field64};

fn domain(n: usize, g: usize) -> DomainRef<f64> {
    Domain::create(DomainSpec::new(n, g)).unwrap()
}

fn random_field(d: &DomainRef<f64>, seed: u64, l2: f64) -> Field64 {
    let n = d.mode_cutoff();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeff = Array2::from_shape_fn((n, n), |(m, k)| {
        let a = ((m + 1) * (m + 1) + (k + 1) * (k + 1)) as f64;
        rng.random_range(-1.0..1.0) * a.powf(-1.5)
    });
    let mut f = Field64::from_coeff(d, coeff).unwrap();
    let norm = f.l2_norm();
    f.scale(l2 / norm);
    f
}

/// Largest Besov (2,2,1) jump between adjacent stored states.
fn max_adjacent_besov_jump(traj: &sqg_core::Trajectory64) -> f64 {
    let idx = BesovIndex::new(2.0, 2.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for pair in traj.states().windows(2) {
        let mut diff = pair[1].clone();
        diff.scaled_add(-1.0, &pair[0]);
        worst = worst.max(besov_norm(&diff, idx).unwrap());
    }
    worst
}

#[test]
fn besov_time_continuity_improves_with_dt() {
    let d = domain(16, 24);
    let theta0 = random_field(&d, 3, 4.0);
    let mut jumps = Vec::new();
    for dt in [2e-3, 1e-3, 5e-4] {
        let cfg = SolverConfig {
            t_final: 0.04,
            dt,
            window: 4e-3,
            stepper: Stepper::ExplicitRk4,
            ..SolverConfig::default()
        };
        let traj = rk4_solve(&theta0, 0.0, &cfg).unwrap();
        jumps.push(max_adjacent_besov_jump(&traj));
    }
    assert!(
        jumps[0] > jumps[1] && jumps[1] > jumps[2],
        "adjacent-time Besov jumps must decrease with dt: {jumps:?}"
    );
}

#[test]
fn trajectory_states_vanish_on_the_boundary() {
    let d = domain(12, 18);
    let theta0 = random_field(&d, 5, 2.0);
    let cfg = SolverConfig {
        t_final: 0.02,
        dt: 2e-3,
        window: 1e-2,
        stepper: Stepper::ExplicitRk4,
        ..SolverConfig::default()
    };
    let traj = rk4_solve(&theta0, 0.0, &cfg).unwrap();
    let samples = [0.0, 0.21, 0.5, 0.83, 1.0];
    for state in traj.states().iter().step_by(3) {
        for &t in &samples {
            assert!(state.evaluate_at(0.0, t).abs() <= 1e-12);
            assert!(state.evaluate_at(1.0, t).abs() <= 1e-12);
            assert!(state.evaluate_at(t, 0.0).abs() <= 1e-12);
            assert!(state.evaluate_at(t, 1.0).abs() <= 1e-12);
        }
    }
}
