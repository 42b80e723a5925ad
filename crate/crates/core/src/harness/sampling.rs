//! Seeded random formations, states and dipole sets for property checks.

use nalgebra::Vector3;
use rand::Rng;

use crate::acmod::AcDipoleSet;
use crate::frames::{CircularOrbit, Mrp};
use crate::kinematics::{Disturbances, FormationParams, FormationState, SatelliteParams};

pub fn vec3<R: Rng>(rng: &mut R, s: f64) -> Vector3<f64> {
    Vector3::new(
        rng.gen_range(-s..s),
        rng.gen_range(-s..s),
        rng.gen_range(-s..s),
    )
}

/// Formation of `n` satellites with varied masses and full inertia tensors;
/// wheels on the satellites listed in `rw`.
pub fn random_formation<R: Rng>(rng: &mut R, n: usize, rw: &[usize]) -> FormationParams {
    let sats = (0..n)
        .map(|j| {
            let d = [
                rng.gen_range(80.0..140.0),
                rng.gen_range(80.0..140.0),
                rng.gen_range(100.0..160.0),
            ];
            let mut s = SatelliteParams::new(rng.gen_range(100.0..300.0), d, rw.contains(&j));
            let c = rng.gen_range(-5.0..5.0);
            s.inertia[(0, 1)] = c;
            s.inertia[(1, 0)] = c;
            s
        })
        .collect();
    FormationParams::new(
        sats,
        CircularOrbit::from_altitude(700e3),
        Disturbances::default(),
    )
    .expect("random formation is valid")
}

/// State with satellites spread over tens of metres, moderate attitudes, rates and wheel momenta.
pub fn random_state<R: Rng>(rng: &mut R, params: &FormationParams) -> FormationState {
    let n = params.n();
    FormationState {
        t: rng.gen_range(0.0..6000.0),
        r: (1..n).map(|_| vec3(rng, 15.0)).collect(),
        r_dot: (1..n).map(|_| vec3(rng, 0.05)).collect(),
        sigma: (0..n).map(|_| Mrp(vec3(rng, 0.6))).collect(),
        omega: (0..n).map(|_| vec3(rng, 0.02)).collect(),
        h: (0..params.m()).map(|_| vec3(rng, 2.0)).collect(),
    }
}

/// Positions of `n` satellites at least `min_sep` apart inside a cube of half-width `half`.
pub fn separated_positions<R: Rng>(
    rng: &mut R,
    n: usize,
    half: f64,
    min_sep: f64,
) -> Vec<Vector3<f64>> {
    loop {
        let p: Vec<_> = (0..n).map(|_| vec3(rng, half)).collect();
        if crate::magnetics::min_separation(&p) > min_sep {
            return p;
        }
    }
}

/// AC set with amplitudes up to `amp` and no DC part.
pub fn random_ac_set<R: Rng>(rng: &mut R, n: usize, amp: f64, omega_f: f64) -> AcDipoleSet {
    AcDipoleSet {
        sin: (0..n).map(|_| vec3(rng, amp)).collect(),
        cos: (0..n).map(|_| vec3(rng, amp)).collect(),
        dc: vec![Vector3::zeros(); n],
        omega_f,
    }
}
