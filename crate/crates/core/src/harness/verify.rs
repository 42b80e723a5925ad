//! Invariant report: null space, momentum-preserving commands, wrench
//! conservation, carrier averaging, reduced inertia and closed-loop energy.

use std::fmt;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acmod::{averaged_wrench, quadrature_average, quadrature_average_oracle};
use crate::control::theorem1_command;
use crate::dynamics::{assemble_system, mass_matrix};
use crate::error::HarnessError;
use crate::kinematics::{assemble_a, assemble_r, assemble_s};
use crate::magnetics::{dipole_force, net_wrench, Wrench};

use super::config::{load_scenario, InitialKind, Mode, ScenarioConfig};
use super::run::run_scenario;
use super::sampling::{random_ac_set, random_formation, random_state, separated_positions, vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Check {
            name,
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }

    /// Passes when `measured > tolerance`.
    pub fn above(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Check {
            name,
            measured,
            tolerance,
            passed: measured > tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<28} measured {:.3e}  tolerance {:.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random states or amplitude sets per check.
    pub samples: usize,
    /// Added to every entry of `S` before the null-space check.
    pub s_perturbation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 2024,
            samples: 100,
            s_perturbation: 0.0,
        }
    }
}

const WHEEL_SETS: [&[usize]; 3] = [&[4], &[0, 1, 2], &[0, 1, 2, 3, 4]];

/// Largest `|A S| / |A|` over random five-satellite states.
pub fn null_space_residual(seed: u64, samples: usize, perturbation: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let params = random_formation(&mut rng, 5, WHEEL_SETS[i % 3]);
        let st = random_state(&mut rng, &params);
        let a = assemble_a(&st, &params);
        let mut s = assemble_s(&st, &params);
        if perturbation != 0.0 {
            s.add_scalar_mut(perturbation);
        }
        worst = worst.max((&a * &s).norm() / a.norm());
    }
    worst
}

/// Largest `|R u| / max(|u|, 1)` for `u = B^-1 M S x` with random `x`.
pub fn theorem1_residual(seed: u64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let params = random_formation(&mut rng, 5, WHEEL_SETS[i % 3]);
        let st = random_state(&mut rng, &params);
        let x = DVector::from_fn(params.layout().dim_v(), |_, _| rng.gen_range(-1.0..1.0));
        let u = theorem1_command(&st, &params, &x);
        let ru = assemble_r(&st, &params) * &u;
        worst = worst.max(ru.norm() / u.norm().max(1.0));
    }
    worst
}

/// Largest relative mismatch of `f(a, b, r) + f(b, a, -r)`.
pub fn pair_cancellation(seed: u64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (a, b) = (vec3(&mut rng, 1e5), vec3(&mut rng, 1e5));
        let r = loop {
            let r = vec3(&mut rng, 20.0);
            if r.norm() > 2.0 {
                break r;
            }
        };
        let f = dipole_force(&a, &b, &r).unwrap();
        let g = dipole_force(&b, &a, &(-r)).unwrap();
        worst = worst.max((f + g).amax() / f.amax());
    }
    worst
}

/// Relative net force and net moment of a wrench set about the origin.
pub fn wrench_imbalance(positions: &[Vector3<f64>], w: &[Wrench]) -> (f64, f64) {
    let fsum: Vector3<f64> = w.iter().map(|w| w.force).sum();
    let fscale: f64 = w.iter().map(|w| w.force.norm()).sum();
    let mut lsum = Vector3::zeros();
    let mut lscale = 0.0;
    for (p, w) in positions.iter().zip(w) {
        let m = p.cross(&w.force);
        lsum += m + w.torque;
        lscale += m.norm() + w.torque.norm();
    }
    (fsum.norm() / fscale, lsum.norm() / lscale)
}

/// Largest relative imbalance of `net_wrench` over random formations of 2 to 6 satellites.
pub fn system_conservation(seed: u64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let n = 2 + i % 5;
        let p = separated_positions(&mut rng, n, 15.0, 2.0);
        let mu: Vec<_> = (0..n).map(|_| vec3(&mut rng, 1e5)).collect();
        let (f, l) = wrench_imbalance(&p, &net_wrench(&p, &mu).unwrap());
        worst = worst.max(f).max(l);
    }
    worst
}

fn relative_gap(a: &[Wrench], b: &[Wrench]) -> f64 {
    let scale = b
        .iter()
        .map(|w| w.force.amax().max(w.torque.amax()))
        .fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.force - y.force).amax().max((x.torque - y.torque).amax()))
        .fold(0.0, f64::max)
        / scale
}

/// Largest relative gap between the closed-form average and 4096-point quadrature.
pub fn averaging_gap(seed: u64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let n = 2 + i % 4;
        let p = separated_positions(&mut rng, n, 15.0, 2.0);
        let set = random_ac_set(&mut rng, n, 1e5, 8.0 * std::f64::consts::PI);
        let avg = averaged_wrench(&set, &p).unwrap();
        let quad = quadrature_average_oracle(&set, &p, 4096).unwrap();
        worst = worst.max(relative_gap(&avg, &quad));
    }
    worst
}

/// Average wrench between two satellites driven at `w` and `2w`, relative to
/// the same pair driven at a shared frequency.
pub fn distinct_frequency_ratio(seed: u64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let w = 8.0 * std::f64::consts::PI;
    for _ in 0..samples {
        let p = separated_positions(&mut rng, 2, 10.0, 2.0);
        let set = random_ac_set(&mut rng, 2, 1e5, w);
        let s = set.clone();
        let mixed = quadrature_average(
            move |t| {
                let a = s.sin[0] * (w * t).sin() + s.cos[0] * (w * t).cos();
                let b = s.sin[1] * (2.0 * w * t).sin() + s.cos[1] * (2.0 * w * t).cos();
                vec![a, b]
            },
            &p,
            2.0 * std::f64::consts::PI / w,
            4096,
        )
        .unwrap();
        let same = averaged_wrench(&set, &p).unwrap();
        let scale = same
            .iter()
            .map(|w| w.force.amax().max(w.torque.amax()))
            .fold(0.0, f64::max);
        let gap = mixed
            .iter()
            .map(|w| w.force.amax().max(w.torque.amax()))
            .fold(0.0, f64::max);
        worst = worst.max(gap / scale);
    }
    worst
}

/// Smallest eigenvalue of `S^T M S` over random states.
pub fn min_reduced_inertia(seed: u64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for i in 0..samples {
        let params = random_formation(&mut rng, 5, WHEEL_SETS[i % 3]);
        let st = random_state(&mut rng, &params);
        let s = assemble_s(&st, &params);
        let mbar: DMatrix<f64> = s.transpose() * mass_matrix(&params) * &s;
        let ev = mbar.symmetric_eigenvalues();
        best = best.min(ev.min());
        debug_assert!((assemble_system(&st, &params).m_bar - &mbar).amax() < 1e-6 * mbar.amax());
    }
    best
}

/// The maintenance preset cut to `duration`.
pub fn lyapunov_scenario(duration: f64) -> Result<ScenarioConfig, HarnessError> {
    let mut c = load_scenario("maintenance_5rw")?;
    c.duration_s = duration;
    Ok(c)
}

/// Maintenance run starting `scale` times the standard position offsets away from the targets.
pub fn offset_scenario(duration: f64, scale: f64) -> Result<ScenarioConfig, HarnessError> {
    let mut c = load_scenario("maintenance_5rw")?;
    c.duration_s = duration;
    c.initial.kind = InitialKind::Explicit;
    let offs = [
        [0.4, -0.3, 0.2],
        [-0.2, 0.5, 0.1],
        [0.3, 0.2, -0.4],
        [-0.5, -0.1, 0.3],
        [0.0, 0.0, 0.0],
    ];
    c.initial.positions_m = Some(
        c.targets
            .positions_m
            .iter()
            .zip(offs)
            .map(|(p, o)| {
                [
                    p[0] + scale * o[0],
                    p[1] + scale * o[1],
                    p[2] + scale * o[2],
                ]
            })
            .collect(),
    );
    c.initial.attitudes_mrp = Some(vec![
        [0.05, -0.02, 0.03],
        [0.0, 0.04, 0.0],
        [-0.03, 0.0, 0.02],
        [0.02, 0.02, -0.02],
        [0.0, -0.05, 0.01],
    ]);
    c.validate()?;
    Ok(c)
}

/// Largest increase of the Lyapunov function between control steps.
pub fn lyapunov_increase(duration: f64) -> Result<f64, HarnessError> {
    let m = run_scenario(&lyapunov_scenario(duration)?)?;
    Ok(m.summary.max_lyapunov_increase.unwrap_or(f64::INFINITY))
}

/// Relative drift of system angular momentum in an AC-mode run without environment,
/// starting a quarter of the standard offsets from the targets.
pub fn ac_momentum_drift(duration: f64) -> Result<f64, HarnessError> {
    let mut c = offset_scenario(duration, 0.25)?;
    c.mode = Mode::Ac;
    c.disturbances.gravity_gradient = false;
    c.disturbances.earth_field = false;
    let m = run_scenario(&c)?;
    let l0 = m.records[0].angular_momentum;
    Ok(m.summary.l_drift / l0.norm().max(1.0))
}

/// Runs every check.
pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport, HarnessError> {
    let (seed, k) = (opts.seed, opts.samples);
    let checks = vec![
        Check::at_most(
            "null_space",
            null_space_residual(seed, k, opts.s_perturbation),
            1e-12,
        ),
        Check::at_most("theorem1_commands", theorem1_residual(seed + 1, k), 1e-9),
        Check::at_most(
            "pair_force_cancellation",
            pair_cancellation(seed + 2, k),
            1e-15,
        ),
        Check::at_most(
            "system_conservation",
            system_conservation(seed + 3, k),
            1e-12,
        ),
        Check::at_most(
            "averaging_oracle",
            averaging_gap(seed + 4, k.min(50)),
            1e-10,
        ),
        Check::at_most(
            "distinct_frequency_average",
            distinct_frequency_ratio(seed + 5, 10),
            1e-10,
        ),
        Check::above(
            "reduced_inertia_min_eig",
            min_reduced_inertia(seed + 6, k),
            0.0,
        ),
        Check::at_most("lyapunov_increase", lyapunov_increase(30.0)?, 1e-9),
        Check::at_most("ac_momentum_drift", ac_momentum_drift(5.0)?, 1e-6),
    ];
    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbed_s_fails_null_space() {
        assert!(null_space_residual(3, 9, 0.0) <= 1e-12);
        let r = null_space_residual(3, 9, 1e-6);
        assert!(r > 1e-12, "{r}");
    }

    #[test]
    fn cheap_checks_pass() {
        assert!(theorem1_residual(5, 12) <= 1e-9);
        assert!(pair_cancellation(5, 200) <= 1e-15);
        assert!(system_conservation(5, 20) <= 1e-12);
        assert!(min_reduced_inertia(5, 12) > 0.0);
    }

    #[test]
    fn report_lists_tolerances() {
        let r = VerifyReport {
            checks: vec![Check::at_most("x", 1.0, 2.0), Check::above("y", 0.0, 0.0)],
        };
        let text = r.to_string();
        assert!(text.contains("PASS x") && text.contains("tolerance 2.0e0"));
        assert!(text.contains("FAIL y"));
        assert!(!r.all_passed());
    }
}
