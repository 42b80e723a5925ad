//! Scenario files: TOML schema, defaults and validation.
//!
//! ```toml
//! name = "example"
//! altitude_m = 700e3
//! omega_f = 25.132741228718345   # rad/s
//! mode = "averaged"              # or "ac"
//! controller = "proposed"        # or "conventional"
//! dt_physics_s = 0.125
//! control_period_s = 0.125
//! duration_s = 600.0
//! rng_seed = 1
//!
//! [[satellites]]                 # one table per satellite; all keys optional
//! mass_kg = 200.0
//! inertia_kg_m2 = [107.0, 107.0, 134.0]
//! rw = true
//! mtq = false
//! coil_radius_m = 1.0
//! dipole_limit = 1e7
//!
//! [targets]
//! positions_m = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]
//! attitudes_mrp = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]   # optional
//!
//! [initial]
//! kind = "targets"               # "targets", "explicit" or "random"
//!
//! [disturbances]
//! gravity_gradient = true
//! earth_field = false
//!
//! [unloading]
//! enabled = false
//! gain = 0.02
//! ```
//!
//! Optional tables `[gains]`, `[conventional_gains]` and `[inversion]` override
//! controller and solver settings.

use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::control::{ConventionalGains, Gains, TargetSpec};
use crate::error::HarnessError;
use crate::frames::{CircularOrbit, Mrp};
use crate::inversion::InversionOptions;
use crate::kinematics::{Disturbances, FormationParams, FormationState, SatelliteParams};
use crate::magnetics::{default_earth_dipole_axis, far_field_valid};

use super::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Carrier-averaged wrenches.
    Averaged,
    /// Instantaneous AC wrenches; the physics step follows the carrier.
    Ac,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "averaged" => Ok(Mode::Averaged),
            "ac" => Ok(Mode::Ac),
            _ => Err(format!("unknown mode `{s}` (expected averaged or ac)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Controller {
    Proposed,
    Conventional,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SatelliteConfig {
    pub mass_kg: f64,
    pub inertia_kg_m2: [f64; 3],
    pub rw: bool,
    pub mtq: bool,
    pub coil_radius_m: f64,
    pub dipole_limit: f64,
}

impl Default for SatelliteConfig {
    fn default() -> Self {
        SatelliteConfig {
            mass_kg: 200.0,
            inertia_kg_m2: [107.0, 107.0, 134.0],
            rw: true,
            mtq: false,
            coil_radius_m: 1.0,
            dipole_limit: 1e7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsConfig {
    pub positions_m: Vec<[f64; 3]>,
    #[serde(default)]
    pub attitudes_mrp: Option<Vec<[f64; 3]>>,
    /// Target system angular momentum in `I`; static formations need zero.
    #[serde(default)]
    pub angular_momentum: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    #[default]
    Targets,
    Explicit,
    /// Uniform in a cube, redrawn until the straight paths to the targets keep twice the far-field clearance.
    Random,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub positions_m: Option<Vec<[f64; 3]>>,
    pub attitudes_mrp: Option<Vec<[f64; 3]>>,
    /// Edge of the cube sampled by `random`, m.
    pub cube_m: f64,
    /// Largest MRP norm sampled by `random`.
    pub sigma_max: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: InitialKind::Targets,
            positions_m: None,
            attitudes_mrp: None,
            cube_m: 20.0,
            sigma_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceConfig {
    pub gravity_gradient: bool,
    pub earth_field: bool,
    pub earth_dipole_axis: [f64; 3],
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        let a = default_earth_dipole_axis();
        DisturbanceConfig {
            gravity_gradient: true,
            earth_field: false,
            earth_dipole_axis: [a.x, a.y, a.z],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnloadingConfig {
    pub enabled: bool,
    pub gain: f64,
    /// 1-based index of the unloading satellite; defaults to the last MTQ carrier.
    pub chief: Option<usize>,
}

impl Default for UnloadingConfig {
    fn default() -> Self {
        UnloadingConfig {
            enabled: false,
            gain: 0.02,
            chief: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainsConfig {
    pub k1_position: f64,
    pub k1_attitude: f64,
    pub k1_xi: f64,
    pub k2_position: f64,
    pub k2_attitude: f64,
    pub k2_xi: f64,
}

impl Default for GainsConfig {
    fn default() -> Self {
        let g = Gains::default();
        GainsConfig {
            k1_position: g.k1_position,
            k1_attitude: g.k1_attitude,
            k1_xi: g.k1_xi,
            k2_position: g.k2_position,
            k2_attitude: g.k2_attitude,
            k2_xi: g.k2_xi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConventionalGainsConfig {
    pub lambda_p1: f64,
    pub lambda_p2: f64,
    pub lambda_a1: f64,
    pub lambda_a2: f64,
}

impl Default for ConventionalGainsConfig {
    fn default() -> Self {
        let g = ConventionalGains::default();
        ConventionalGainsConfig {
            lambda_p1: g.lambda_p1,
            lambda_p2: g.lambda_p2,
            lambda_a1: g.k_sigma,
            lambda_a2: g.k_omega,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub starts: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        let o = InversionOptions::default();
        InversionConfig {
            tol: o.tol,
            max_iter: o.max_iter,
            starts: o.starts,
        }
    }
}

fn default_altitude() -> f64 {
    700e3
}
fn default_omega_f() -> f64 {
    8.0 * std::f64::consts::PI
}
fn default_mode() -> Mode {
    Mode::Averaged
}
fn default_controller() -> Controller {
    Controller::Proposed
}
fn default_dt() -> f64 {
    0.125
}
fn default_control_period() -> f64 {
    0.125
}
fn default_seed() -> u64 {
    1
}

/// A complete scenario description.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_altitude")]
    pub altitude_m: f64,
    pub satellites: Vec<SatelliteConfig>,
    pub targets: TargetsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub gains: GainsConfig,
    #[serde(default)]
    pub conventional_gains: ConventionalGainsConfig,
    #[serde(default = "default_omega_f")]
    pub omega_f: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_dt")]
    pub dt_physics_s: f64,
    #[serde(default = "default_control_period")]
    pub control_period_s: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub disturbances: DisturbanceConfig,
    #[serde(default = "default_controller")]
    pub controller: Controller,
    #[serde(default)]
    pub unloading: UnloadingConfig,
    #[serde(default)]
    pub inversion: InversionConfig,
    #[serde(default = "default_seed")]
    pub rng_seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn v3(a: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Validation(msg.into())
}

impl ScenarioConfig {
    /// Parses TOML text; schema errors carry the offending field path.
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let de = toml::Deserializer::parse(text).map_err(|e| HarnessError::Schema {
            path: String::from("."),
            message: e.message().to_string(),
        })?;
        let cfg: ScenarioConfig =
            serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Schema {
                path: e.path().to_string(),
                message: e.inner().message().to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n(&self) -> usize {
        self.satellites.len()
    }

    /// Checks every constraint that the schema alone cannot express.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let n = self.n();
        if n < 2 {
            return Err(invalid(format!(
                "a formation needs at least 2 satellites, got {n}"
            )));
        }
        let positive = [
            ("altitude_m", self.altitude_m),
            ("omega_f", self.omega_f),
            ("dt_physics_s", self.dt_physics_s),
            ("control_period_s", self.control_period_s),
            ("duration_s", self.duration_s),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{k} must be positive and finite, got {v}")));
            }
        }
        if self.control_period_s < self.dt_physics_s {
            return Err(invalid(
                "control_period_s must not be shorter than dt_physics_s",
            ));
        }
        for (j, s) in self.satellites.iter().enumerate() {
            let ok = s.mass_kg > 0.0
                && s.inertia_kg_m2.iter().all(|&x| x > 0.0)
                && s.coil_radius_m > 0.0
                && s.dipole_limit > 0.0;
            if !ok {
                return Err(invalid(format!(
                    "satellites[{j}]: mass, inertia, coil radius and dipole limit must be positive"
                )));
            }
        }
        let rw = self.satellites.iter().filter(|s| s.rw).count();
        match self.controller {
            Controller::Proposed if rw == 0 => {
                return Err(invalid(
                    "the proposed controller needs at least one satellite with rw = true",
                ))
            }
            Controller::Conventional if rw != n => {
                return Err(invalid(
                    "the conventional controller needs rw = true on every satellite",
                ))
            }
            _ => {}
        }
        if self.targets.positions_m.len() != n {
            return Err(invalid(format!(
                "targets.positions_m has {} entries for {n} satellites",
                self.targets.positions_m.len()
            )));
        }
        if let Some(a) = &self.targets.attitudes_mrp {
            if a.len() != n {
                return Err(invalid(format!(
                    "targets.attitudes_mrp has {} entries for {n} satellites",
                    a.len()
                )));
            }
        }
        if self.targets.angular_momentum != [0.0; 3] {
            return Err(invalid(
                "targets.angular_momentum must be zero for a static formation",
            ));
        }
        let radii: Vec<f64> = self.satellites.iter().map(|s| s.coil_radius_m).collect();
        let tp: Vec<_> = self.targets.positions_m.iter().map(v3).collect();
        if !far_field_valid(&tp, &radii) {
            return Err(invalid(
                "target separations must exceed twice the coil radius for the far-field model",
            ));
        }
        match self.initial.kind {
            InitialKind::Explicit => {
                let p = self.initial.positions_m.as_ref().ok_or_else(|| {
                    invalid("initial.kind = \"explicit\" needs initial.positions_m")
                })?;
                if p.len() != n {
                    return Err(invalid(format!(
                        "initial.positions_m has {} entries for {n} satellites",
                        p.len()
                    )));
                }
                let ip: Vec<_> = p.iter().map(v3).collect();
                if !far_field_valid(&ip, &radii) {
                    return Err(invalid(
                        "initial separations must exceed twice the coil radius",
                    ));
                }
                if let Some(a) = &self.initial.attitudes_mrp {
                    if a.len() != n {
                        return Err(invalid(format!(
                            "initial.attitudes_mrp has {} entries for {n} satellites",
                            a.len()
                        )));
                    }
                }
            }
            InitialKind::Random => {
                let rmax = radii.iter().cloned().fold(0.0, f64::max);
                if !(self.initial.cube_m > 4.0 * rmax)
                    || !(self.initial.sigma_max > 0.0 && self.initial.sigma_max <= 1.0)
                {
                    return Err(invalid(
                        "initial.cube_m must exceed four coil radii and initial.sigma_max must lie in (0, 1]",
                    ));
                }
            }
            InitialKind::Targets => {}
        }
        let axis = v3(&self.disturbances.earth_dipole_axis);
        if !(axis.norm() > 0.0) {
            return Err(invalid("disturbances.earth_dipole_axis must be nonzero"));
        }
        if self.unloading.enabled {
            let c = self
                .chief_index()
                .ok_or_else(|| invalid("unloading needs a satellite with mtq = true"))?;
            let s = &self.satellites[c];
            if !s.mtq || !s.rw {
                return Err(invalid(format!(
                    "unloading chief {} needs both rw and mtq",
                    c + 1
                )));
            }
            if !self.disturbances.earth_field {
                return Err(invalid("unloading needs disturbances.earth_field = true"));
            }
            if !(self.unloading.gain > 0.0) {
                return Err(invalid("unloading.gain must be positive"));
            }
        }
        if self.inversion.tol <= 0.0 || self.inversion.max_iter == 0 || self.inversion.starts == 0 {
            return Err(invalid(
                "inversion.tol, max_iter and starts must be positive",
            ));
        }
        Ok(())
    }

    /// 0-based index of the unloading satellite.
    pub fn chief_index(&self) -> Option<usize> {
        match self.unloading.chief {
            Some(c) if c >= 1 && c <= self.n() => Some(c - 1),
            Some(_) => None,
            None => self.satellites.iter().rposition(|s| s.mtq),
        }
    }

    pub fn formation_params(&self) -> Result<FormationParams, HarnessError> {
        let sats = self
            .satellites
            .iter()
            .map(|s| {
                let mut p = SatelliteParams::new(s.mass_kg, s.inertia_kg_m2, s.rw);
                p.has_mtq = s.mtq;
                p.coil_radius = s.coil_radius_m;
                p.dipole_limit = s.dipole_limit;
                p
            })
            .collect();
        let dist = Disturbances {
            gravity: self.disturbances.gravity_gradient,
            earth_field: self.disturbances.earth_field,
            earth_dipole_axis: v3(&self.disturbances.earth_dipole_axis).normalize(),
        };
        Ok(FormationParams::new(
            sats,
            CircularOrbit::from_altitude(self.altitude_m),
            dist,
        )?)
    }

    /// Targets shifted so that their centre of mass is the origin.
    pub fn target_spec(&self, params: &FormationParams) -> TargetSpec {
        let p: Vec<_> = self.targets.positions_m.iter().map(v3).collect();
        let positions = centred(params, &p);
        let attitudes = match &self.targets.attitudes_mrp {
            Some(a) => a.iter().map(|s| Mrp(v3(s)).normalized()).collect(),
            None => vec![Mrp::identity(); self.n()],
        };
        TargetSpec {
            positions,
            attitudes,
        }
    }

    pub fn initial_state(&self, params: &FormationParams) -> Result<FormationState, HarnessError> {
        let n = self.n();
        let (positions, attitudes): (Vec<_>, Vec<Mrp>) = match self.initial.kind {
            InitialKind::Targets => {
                let t = self.target_spec(params);
                (t.positions, t.attitudes)
            }
            InitialKind::Explicit => {
                let p = self
                    .initial
                    .positions_m
                    .as_ref()
                    .map(|p| p.iter().map(v3).collect())
                    .unwrap_or_default();
                let a = match &self.initial.attitudes_mrp {
                    Some(a) => a.iter().map(|s| Mrp(v3(s)).normalized()).collect(),
                    None => vec![Mrp::identity(); n],
                };
                (p, a)
            }
            InitialKind::Random => self.random_initial(params)?,
        };
        let mut st = FormationState::at_rest(params, &positions)?;
        st.sigma = attitudes;
        Ok(st)
    }

    fn random_initial(
        &self,
        params: &FormationParams,
    ) -> Result<(Vec<Vector3<f64>>, Vec<Mrp>), HarnessError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let half = 0.5 * self.initial.cube_m;
        let radii: Vec<f64> = self.satellites.iter().map(|s| s.coil_radius_m).collect();
        let cube = |rng: &mut ChaCha8Rng, h: f64| {
            Vector3::new(
                rng.gen_range(-h..h),
                rng.gen_range(-h..h),
                rng.gen_range(-h..h),
            )
        };
        let targets = self.target_spec(params).positions;
        let path_radii: Vec<f64> = radii.iter().map(|r| PATH_MARGIN * r).collect();
        let clear_path = |p: &[Vector3<f64>]| {
            let p = centred(params, p);
            (0..=PATH_SAMPLES).all(|i| {
                let s = i as f64 / PATH_SAMPLES as f64;
                let q: Vec<_> = p
                    .iter()
                    .zip(&targets)
                    .map(|(a, b)| a + (b - a) * s)
                    .collect();
                far_field_valid(&q, &path_radii)
            })
        };
        let positions = (0..MAX_DRAWS)
            .map(|_| {
                (0..self.n())
                    .map(|_| cube(&mut rng, half))
                    .collect::<Vec<_>>()
            })
            .find(|p| clear_path(p))
            .ok_or_else(|| {
                invalid("no random initial positions with clear paths to the targets")
            })?;
        let smax = self.initial.sigma_max;
        let attitudes = (0..self.n())
            .map(|_| loop {
                let s = cube(&mut rng, smax);
                if s.norm() <= smax {
                    break Mrp(s);
                }
            })
            .collect();
        Ok((positions, attitudes))
    }

    pub fn inversion_options(&self) -> InversionOptions {
        InversionOptions {
            tol: self.inversion.tol,
            max_iter: self.inversion.max_iter,
            starts: self.inversion.starts,
            seed: self.rng_seed,
            ..InversionOptions::default()
        }
    }

    pub fn gains(&self) -> Gains {
        let g = &self.gains;
        Gains {
            k1_position: g.k1_position,
            k1_attitude: g.k1_attitude,
            k1_xi: g.k1_xi,
            k2_position: g.k2_position,
            k2_attitude: g.k2_attitude,
            k2_xi: g.k2_xi,
        }
    }

    pub fn conventional_gains(&self) -> ConventionalGains {
        let g = &self.conventional_gains;
        ConventionalGains {
            lambda_p1: g.lambda_p1,
            lambda_p2: g.lambda_p2,
            k_sigma: g.lambda_a1,
            k_omega: g.lambda_a2,
        }
    }

    /// Physics step and substeps per control period.
    ///
    /// In AC mode the step is at most a 64th of the carrier period. The step is
    /// shortened so that it divides the control period.
    pub fn physics_step(&self) -> (f64, usize) {
        let mut dt = self.dt_physics_s;
        if self.mode == Mode::Ac {
            dt = dt.min(2.0 * std::f64::consts::PI / self.omega_f / 64.0);
        }
        let k = (self.control_period_s / dt - 1e-9).ceil().max(1.0) as usize;
        (self.control_period_s / k as f64, k)
    }

    /// Number of control periods covering the duration.
    pub fn control_steps(&self) -> usize {
        (self.duration_s / self.control_period_s - 1e-9)
            .ceil()
            .max(1.0) as usize
    }
}

/// Points checked along the straight line from a random start to its target.
const PATH_SAMPLES: usize = 64;
/// Clearance along those paths, in multiples of the far-field limit.
const PATH_MARGIN: f64 = 2.0;
const MAX_DRAWS: usize = 100_000;

fn centred(params: &FormationParams, p: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let com = p
        .iter()
        .zip(&params.satellites)
        .map(|(r, s)| s.mass * r)
        .sum::<Vector3<f64>>()
        / params.total_mass();
    p.iter().map(|r| r - com).collect()
}

/// Loads a scenario from a preset name or a TOML file.
pub fn load_scenario(spec: &str) -> Result<ScenarioConfig, HarnessError> {
    if let Some(text) = presets::source(spec) {
        return ScenarioConfig::from_toml(text);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(HarnessError::UnknownScenario(spec.to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: spec.to_string(),
        source,
    })?;
    ScenarioConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
duration_s = 10.0
[[satellites]]
[[satellites]]
[targets]
positions_m = [[-5.0, 0.0, 0.0], [5.0, 0.0, 0.0]]
"#;

    #[test]
    fn defaults_fill_minimal_file() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.n(), 2);
        assert_eq!(c.mode, Mode::Averaged);
        assert_eq!(c.controller, Controller::Proposed);
        assert_eq!(c.satellites[0].inertia_kg_m2, [107.0, 107.0, 134.0]);
        assert_eq!(c.unloading.gain, 0.02);
        assert_eq!(c.altitude_m, 700e3);
    }

    #[test]
    fn schema_error_names_field() {
        let bad = MINIMAL.replace(
            "[[satellites]]\n[targets]",
            "[[satellites]]\nmass_kg = \"heavy\"\n[targets]",
        );
        match ScenarioConfig::from_toml(&bad) {
            Err(HarnessError::Schema { path, .. }) => assert_eq!(path, "satellites[1].mass_kg"),
            other => panic!("{other:?}"),
        }
        let unknown = format!("{MINIMAL}\n[unloading]\nenabeld = true\n");
        match ScenarioConfig::from_toml(&unknown) {
            Err(e @ HarnessError::Schema { .. }) => assert_eq!(e.exit_code(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn far_field_violation_rejected() {
        let close = MINIMAL.replace("[5.0, 0.0, 0.0]", "[-3.5, 0.0, 0.0]");
        match ScenarioConfig::from_toml(&close) {
            Err(HarnessError::Validation(m)) => assert!(m.contains("far-field")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conventional_needs_all_wheels() {
        let c = MINIMAL.replacen("[[satellites]]", "[[satellites]]\nrw = false", 1);
        assert!(ScenarioConfig::from_toml(&c).is_ok());
        let c = format!("controller = \"conventional\"\n{c}");
        assert!(matches!(
            ScenarioConfig::from_toml(&c),
            Err(HarnessError::Validation(_))
        ));
    }

    #[test]
    fn physics_step_divides_control_period() {
        let mut c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.physics_step(), (0.125, 1));
        c.mode = Mode::Ac;
        let (dt, k) = c.physics_step();
        assert_eq!(k, 32);
        assert!((dt - 0.25 / 64.0).abs() < 1e-15);
        assert_eq!(c.control_steps(), 80);
        c.control_period_s = 0.3;
        c.mode = Mode::Averaged;
        let (dt, k) = c.physics_step();
        assert_eq!(k, 3);
        assert!((dt - 0.1).abs() < 1e-15);
    }

    #[test]
    fn random_initial_is_seeded_and_valid() {
        let text = format!("{MINIMAL}\n[initial]\nkind = \"random\"\n");
        let c = ScenarioConfig::from_toml(&text).unwrap();
        let p = c.formation_params().unwrap();
        let a = c.initial_state(&p).unwrap();
        let b = c.initial_state(&p).unwrap();
        assert_eq!(a, b);
        assert!(a.sigma.iter().all(|s| s.0.norm() <= 0.5));
        assert!(far_field_valid(&a.positions(&p), &[1.0, 1.0]));
    }

    #[test]
    fn unknown_scenario() {
        assert!(matches!(
            load_scenario("no_such_preset"),
            Err(HarnessError::UnknownScenario(_))
        ));
    }
}
