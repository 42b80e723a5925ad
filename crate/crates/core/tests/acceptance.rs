//! Acceptance criteria 1-11. One PASS/FAIL line per criterion; the test fails
//! if any line fails. Full-orbit runs are shared between criteria.

use std::time::{Duration, Instant};

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emff_core::control::{theorem1_command, ControlCommand};
use emff_core::harness::config::{load_scenario, Controller};
use emff_core::harness::sampling::{random_formation, random_state};
use emff_core::harness::verify::{
    ac_momentum_drift, averaging_gap, distinct_frequency_ratio, min_reduced_inertia,
    null_space_residual, pair_cancellation, system_conservation, theorem1_residual,
};
use emff_core::harness::{run_scenario, RunMetrics};
use emff_core::inversion::{invert_ac, residual, InversionOptions, InversionProblem};
use emff_core::magnetics::{min_separation, MU0_4PI};

const SEED: u64 = 20_240_601;

struct Line {
    id: u32,
    name: &'static str,
    detail: String,
    passed: bool,
    elapsed: Duration,
}

struct Report(Vec<Line>);

impl Report {
    fn add(
        &mut self,
        id: u32,
        name: &'static str,
        detail: String,
        passed: bool,
        elapsed: Duration,
    ) {
        println!(
            "{} {:>2} {:<34} {}  [{:.1} s]",
            if passed { "PASS" } else { "FAIL" },
            id,
            name,
            detail,
            elapsed.as_secs_f64()
        );
        self.0.push(Line {
            id,
            name,
            detail,
            passed,
            elapsed,
        });
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed())
}

fn secs(s: f64) -> Duration {
    Duration::from_secs_f64(s)
}

fn run(
    name: &str,
    edit: impl FnOnce(&mut emff_core::harness::ScenarioConfig),
) -> (RunMetrics, Duration) {
    let mut c = load_scenario(name).unwrap();
    edit(&mut c);
    timed(|| run_scenario(&c).unwrap())
}

fn max_momentum_residual(m: &RunMetrics) -> f64 {
    m.records
        .iter()
        .map(|r| r.momentum_residual.expect("proposed controller"))
        .fold(0.0, f64::max)
}

/// Largest `|h_j - L/m| / |L/m|` over the wheel sets at the last step.
fn share_error(m: &RunMetrics) -> f64 {
    let r = m.final_record();
    let share = r.angular_momentum / r.rw_momentum.len() as f64;
    r.rw_momentum
        .iter()
        .map(|h| (h - share).norm() / share.norm())
        .fold(0.0, f64::max)
}

/// Commands from `theorem1_command` on random well-separated formations.
fn feasible_problems(count: usize) -> Vec<InversionProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let wheels: [&[usize]; 3] = [&[4], &[0, 1, 2], &[0, 1, 2, 3, 4]];
    let mut out = Vec::new();
    while out.len() < count {
        let params = random_formation(&mut rng, 5, wheels[out.len() % 3]);
        let st = random_state(&mut rng, &params);
        let positions = st.positions(&params);
        if min_separation(&positions) < 4.0 {
            continue;
        }
        let lay = params.layout();
        let x = DVector::from_fn(lay.dim_v(), |_, _| rng.gen_range(-1.0..1.0) * 1e-3);
        let u = theorem1_command(&st, &params, &x);
        let (forces, torques) = ControlCommand::from_vector(&lay, &u).inertial_wrenches(&st);
        out.push(InversionProblem {
            positions,
            forces,
            torques,
            omega_f: 8.0 * std::f64::consts::PI,
            warm_start: None,
        });
    }
    out
}

#[test]
fn acceptance() {
    let mut rep = Report(Vec::new());

    let (r, t) = timed(|| null_space_residual(SEED, 100, 0.0));
    rep.add(
        1,
        "null-space identity",
        format!("|AS|/|A| {r:.2e} <= 1e-12"),
        r <= 1e-12 && t < secs(1.0),
        t,
    );

    let (random, t2) = timed(|| theorem1_residual(SEED + 1, 100));

    let (r1, t) = timed(|| pair_cancellation(SEED + 2, 1000));
    let (r2, t_) = timed(|| system_conservation(SEED + 3, 100));
    rep.add(
        3,
        "third law and conservation",
        format!("pair {r1:.2e} <= 1e-15, system {r2:.2e} <= 1e-12"),
        r1 <= 1e-15 && r2 <= 1e-12,
        t + t_,
    );

    let ((g1, g2), t) = timed(|| {
        (
            averaging_gap(SEED + 4, 50),
            distinct_frequency_ratio(SEED + 5, 20),
        )
    });
    rep.add(
        4,
        "averaging oracle",
        format!("gap {g1:.2e} <= 1e-10, mixed frequency {g2:.2e} <= 1e-10"),
        g1 <= 1e-10 && g2 <= 1e-10 && t < secs(30.0),
        t,
    );

    let (drift, t) = timed(|| ac_momentum_drift(100.0).unwrap());
    rep.add(
        5,
        "momentum conservation, ac mode",
        format!("drift {drift:.2e} <= 1e-6"),
        drift <= 1e-6 && t < secs(60.0),
        t,
    );

    let (eig, t) = timed(|| min_reduced_inertia(SEED + 6, 100));
    rep.add(
        6,
        "reduced inertia positive definite",
        format!("min eig {eig:.3e} > 0"),
        eig > 0.0,
        t,
    );

    let (inv, t) = timed(|| {
        let opts = InversionOptions::default();
        let mut bad = 0;
        let mut iters = Vec::new();
        for p in feasible_problems(50) {
            let r = invert_ac(&p, &opts).unwrap();
            if !(r.converged && residual(&r.dipoles, &p).unwrap() <= 1e-8) {
                bad += 1;
            }
            iters.push(r.iterations);
        }
        iters.sort_unstable();
        // Coaxial pair at 10 m: a DC pair of 1e5 A m^2 gives this force, so
        // the AC amplitude has to be sqrt(2) times larger.
        let (mu, d) = (1e5_f64, 10.0_f64);
        let f = Vector3::new(6.0 * MU0_4PI * mu * mu / d.powi(4), 0.0, 0.0);
        let p = InversionProblem {
            positions: vec![Vector3::zeros(), Vector3::new(d, 0.0, 0.0)],
            forces: vec![f, -f],
            torques: vec![Vector3::zeros(); 2],
            omega_f: 8.0 * std::f64::consts::PI,
            warm_start: None,
        };
        let r = invert_ac(&p, &opts).unwrap();
        let amp_err = (0..2)
            .map(|j| {
                let a = (r.dipoles.sin[j].norm_squared() + r.dipoles.cos[j].norm_squared()).sqrt();
                (a / (2f64.sqrt() * mu) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        (bad, iters[iters.len() / 2], amp_err)
    });
    let (bad, median, amp_err) = inv;
    rep.add(
        7,
        "dipole inversion",
        format!("failures {bad}/50, median iterations {median} <= 200, coaxial amplitude error {amp_err:.2e} <= 1e-3"),
        bad == 0 && median <= 200 && amp_err <= 1e-3 && t < secs(60.0),
        t,
    );

    let (prop, t_prop) = run("maintenance_5rw", |_| {});
    let (conv, t_conv) = run("maintenance_5rw", |c| {
        c.controller = Controller::Conventional
    });
    let limit = 0.05 * prop.summary.l_max / 5.0;
    let disp = prop.h_dispersion_after(600.0);
    let ratio = conv.summary.final_h_dispersion / prop.summary.final_h_dispersion;
    rep.add(
        8,
        "maintenance, momentum sharing",
        format!("dispersion {disp:.3e} <= {limit:.3e}, conventional/proposed {ratio:.3e} >= 10"),
        disp <= limit && ratio >= 10.0 && t_prop + t_conv < secs(600.0),
        t_prop + t_conv,
    );

    let (reconf, t_reconf) = run("reconfig_3rw", |_| {});
    let dq = reconf.summary.final_dq / reconf.summary.initial_dq;
    let share = share_error(&reconf);
    rep.add(
        9,
        "reconfiguration, three wheel sets",
        format!("dq(end)/dq(0) {dq:.3e} <= 1e-2, share error {share:.3e} <= 0.1"),
        dq <= 1e-2 && share <= 0.1 && t_reconf < secs(300.0),
        t_reconf,
    );

    let (unl, t_unl) = run("maintenance_unloading", |_| {});
    let (plain, t_plain) = run("maintenance_unloading", |c| c.unloading.enabled = false);
    let l_end = plain.final_record().angular_momentum.norm();
    rep.add(
        10,
        "unloading",
        format!("max |L| {:.3e} <= 0.5 x {l_end:.3e}", unl.summary.l_max),
        unl.summary.l_max <= 0.5 * l_end && t_unl.max(t_plain) < secs(600.0),
        t_unl + t_plain,
    );

    let v_inc = prop.summary.max_lyapunov_increase.unwrap();
    rep.add(
        11,
        "Lyapunov monotonicity",
        format!("max step increase {v_inc:.3e} <= 1e-9"),
        v_inc <= 1e-9,
        t_prop,
    );

    let presets = [&prop, &reconf, &unl]
        .map(max_momentum_residual)
        .into_iter()
        .fold(0.0, f64::max);
    rep.add(
        2,
        "momentum-preserving commands",
        format!("random {random:.2e}, presets {presets:.2e} <= 1e-9"),
        random <= 1e-9 && presets <= 1e-9 && t2 < secs(5.0),
        t2,
    );

    rep.0.sort_by_key(|l| l.id);
    println!("\nsummary");
    for l in &rep.0 {
        println!(
            "{} {:>2} {:<34} {}  [{:.1} s]",
            if l.passed { "PASS" } else { "FAIL" },
            l.id,
            l.name,
            l.detail,
            l.elapsed.as_secs_f64()
        );
    }
    let failed: Vec<_> = rep.0.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
