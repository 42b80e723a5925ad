//! Browser bindings for the demo page in `www/`.
//!
//! Each export wraps a plain function from [`demo`] so the numbers can be
//! tested natively.

use wasm_bindgen::prelude::*;

pub mod demo {
    use emff_core::acmod::{averaged_wrench, instantaneous_dipoles};
    use emff_core::harness::{load_scenario, run_scenario};
    use emff_core::magnetics::{dipole_force, dipole_torque};
    use emff_core::AcDipoleSet;
    use nalgebra::Vector3;

    /// Longest simulation the page may request, s.
    pub const MAX_DURATION: f64 = 120.0;

    fn planar(mu: f64, tilt_deg: f64) -> Vector3<f64> {
        let (s, c) = tilt_deg.to_radians().sin_cos();
        Vector3::new(mu * c, mu * s, 0.0)
    }

    /// Force and torque on dipole B, `separation` m from A along x. Tilts
    /// rotate each moment from the x axis within the x-y plane.
    ///
    /// Returns `[fx, fy, fz, tx, ty, tz]` in N and N m.
    pub fn pair_wrench(
        separation: f64,
        mu_a: f64,
        tilt_a_deg: f64,
        mu_b: f64,
        tilt_b_deg: f64,
    ) -> Result<Vec<f64>, String> {
        let r = Vector3::new(separation, 0.0, 0.0);
        let (a, b) = (planar(mu_a, tilt_a_deg), planar(mu_b, tilt_b_deg));
        let f = dipole_force(&a, &b, &r).map_err(|e| e.to_string())?;
        let t = dipole_torque(&a, &b, &r).map_err(|e| e.to_string())?;
        Ok(vec![f.x, f.y, f.z, t.x, t.y, t.z])
    }

    /// Axial force on B over one carrier period for coaxial coils driven as
    /// `amp_a sin(wt)` and `amp_b sin(wt + phase)`.
    ///
    /// Returns `samples` instantaneous values followed by the exact average.
    pub fn carrier_force(
        separation: f64,
        amp_a: f64,
        amp_b: f64,
        phase_deg: f64,
        samples: usize,
    ) -> Result<Vec<f64>, String> {
        if samples < 2 {
            return Err("need at least two samples".into());
        }
        let (s, c) = phase_deg.to_radians().sin_cos();
        let set = AcDipoleSet {
            sin: vec![
                Vector3::new(amp_a, 0.0, 0.0),
                Vector3::new(amp_b * c, 0.0, 0.0),
            ],
            cos: vec![Vector3::zeros(), Vector3::new(amp_b * s, 0.0, 0.0)],
            dc: vec![Vector3::zeros(); 2],
            omega_f: std::f64::consts::TAU,
        };
        let r = Vector3::new(separation, 0.0, 0.0);
        let mut out = Vec::with_capacity(samples + 1);
        for k in 0..samples {
            let m = instantaneous_dipoles(&set, k as f64 / samples as f64);
            out.push(dipole_force(&m[0], &m[1], &r).map_err(|e| e.to_string())?.x);
        }
        let avg = averaged_wrench(&set, &[Vector3::zeros(), r]).map_err(|e| e.to_string())?;
        out.push(avg[1].force.x);
        Ok(out)
    }

    /// Runs a preset for `duration` s. Rows of `[t, |dq|, |L|, h dispersion]`, flattened.
    pub fn simulate(preset: &str, duration: f64) -> Result<Vec<f64>, String> {
        if !(duration > 0.0 && duration <= MAX_DURATION) {
            return Err(format!("duration must be in (0, {MAX_DURATION}] s"));
        }
        let mut cfg = load_scenario(preset).map_err(|e| e.to_string())?;
        cfg.duration_s = duration;
        let m = run_scenario(&cfg).map_err(|e| e.to_string())?;
        Ok(m.records
            .iter()
            .flat_map(|r| {
                [
                    r.t,
                    r.dq_norm(),
                    r.angular_momentum.norm(),
                    r.h_dispersion(),
                ]
            })
            .collect())
    }

    pub fn preset_names() -> Vec<String> {
        emff_core::harness::presets::names()
            .map(String::from)
            .collect()
    }
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = pairWrench)]
pub fn pair_wrench(
    separation: f64,
    mu_a: f64,
    tilt_a_deg: f64,
    mu_b: f64,
    tilt_b_deg: f64,
) -> Result<Vec<f64>, JsError> {
    js(demo::pair_wrench(
        separation, mu_a, tilt_a_deg, mu_b, tilt_b_deg,
    ))
}

#[wasm_bindgen(js_name = carrierForce)]
pub fn carrier_force(
    separation: f64,
    amp_a: f64,
    amp_b: f64,
    phase_deg: f64,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    js(demo::carrier_force(
        separation, amp_a, amp_b, phase_deg, samples,
    ))
}

#[wasm_bindgen]
pub fn simulate(preset: &str, duration: f64) -> Result<Vec<f64>, JsError> {
    js(demo::simulate(preset, duration))
}

#[wasm_bindgen(js_name = presetNames)]
pub fn preset_names() -> Vec<String> {
    demo::preset_names()
}
