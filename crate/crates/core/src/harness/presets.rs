//! Built-in scenarios.

/// Name, one-line description and TOML source of each preset.
pub const PRESETS: &[(&str, &str, &str)] = &[
    (
        "maintenance_5rw",
        "five satellites hold a static formation, wheels on all, one orbit",
        include_str!("../../presets/maintenance_5rw.toml"),
    ),
    (
        "reconfig_3rw",
        "random start to the same formation, wheels on satellites 1-3 only, one orbit",
        include_str!("../../presets/reconfig_3rw.toml"),
    ),
    (
        "maintenance_unloading",
        "asymmetric formation with MTQ unloading on the chief, one orbit",
        include_str!("../../presets/maintenance_unloading.toml"),
    ),
];

/// TOML source of a preset.
pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.2)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

#[cfg(test)]
mod tests {
    use super::super::config::{load_scenario, Controller, InitialKind};

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn all_presets_load() {
        for name in super::names() {
            let c = load_scenario(name).unwrap();
            assert_eq!(c.name, name);
            assert_eq!(c.controller, Controller::Proposed);
            c.formation_params().unwrap();
        }
    }

    #[test]
    fn maintenance_matches_tables() {
        let c = load_scenario("maintenance_5rw").unwrap();
        assert_eq!(c.n(), 5);
        for s in &c.satellites {
            assert_eq!(s.mass_kg, 200.0);
            assert_eq!(s.inertia_kg_m2, [107.0, 107.0, 134.0]);
            assert!(s.rw && !s.mtq);
        }
        let ang = [105.0, 165.0, 285.0, -15.0];
        let z = [-2.0, 2.0, -2.0, 2.0];
        for j in 0..4 {
            let p = c.targets.positions_m[j];
            assert!((p[0] - 10.0 * deg(ang[j]).cos()).abs() < 1e-12);
            assert!((p[1] - 10.0 * deg(ang[j]).sin()).abs() < 1e-12);
            assert_eq!(p[2], z[j]);
        }
        assert_eq!(c.targets.positions_m[4], [0.0; 3]);
        assert!((c.omega_f - 8.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!(!c.disturbances.earth_field);
    }

    #[test]
    fn reconfig_uses_three_wheels() {
        let c = load_scenario("reconfig_3rw").unwrap();
        let rw: Vec<bool> = c.satellites.iter().map(|s| s.rw).collect();
        assert_eq!(rw, [true, true, true, false, false]);
        assert!((c.omega_f - 16.0 * std::f64::consts::PI).abs() < 1e-14);
        assert_eq!(c.initial.kind, InitialKind::Random);
    }

    #[test]
    fn unloading_swaps_z_targets() {
        let a = load_scenario("maintenance_5rw").unwrap();
        let b = load_scenario("maintenance_unloading").unwrap();
        assert_eq!(b.targets.positions_m[1][2], a.targets.positions_m[2][2]);
        assert_eq!(b.targets.positions_m[2][2], a.targets.positions_m[1][2]);
        assert!(b.satellites[4].mtq && b.unloading.enabled);
        assert_eq!(b.chief_index(), Some(4));
        assert_eq!(b.unloading.gain, 0.02);
    }
}
