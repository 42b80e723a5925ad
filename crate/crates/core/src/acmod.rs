//! Sinusoidal dipole actuation and its time average.

use nalgebra::Vector3;

use crate::error::MagneticsError;
use crate::magnetics::{net_wrench, Dipole, Wrench};

/// Per-satellite dipoles `dc + sin * sin(wt) + cos * cos(wt)`, all in `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcDipoleSet {
    pub sin: Vec<Dipole>,
    pub cos: Vec<Dipole>,
    pub dc: Vec<Dipole>,
    /// Carrier angular frequency, rad/s.
    pub omega_f: f64,
}

impl AcDipoleSet {
    pub fn zeros(n: usize, omega_f: f64) -> Self {
        AcDipoleSet {
            sin: vec![Vector3::zeros(); n],
            cos: vec![Vector3::zeros(); n],
            dc: vec![Vector3::zeros(); n],
            omega_f,
        }
    }

    pub fn len(&self) -> usize {
        self.sin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sin.is_empty()
    }

    /// Carrier period, s.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_f
    }

    /// Largest component amplitude over all satellites and terms.
    pub fn max_amplitude(&self) -> f64 {
        self.sin
            .iter()
            .chain(&self.cos)
            .chain(&self.dc)
            .map(|m| m.norm())
            .fold(0.0, f64::max)
    }

    /// `(|sin|, |cos|, |dc|)` for satellite `j`.
    pub fn norms(&self, j: usize) -> (f64, f64, f64) {
        (self.sin[j].norm(), self.cos[j].norm(), self.dc[j].norm())
    }
}

/// Dipoles at time `t`.
pub fn instantaneous_dipoles(set: &AcDipoleSet, t: f64) -> Vec<Dipole> {
    let (s, c) = (set.omega_f * t).sin_cos();
    (0..set.len())
        .map(|j| set.dc[j] + set.sin[j] * s + set.cos[j] * c)
        .collect()
}

/// Exact one-period average of the net wrench on each satellite.
///
/// The pair wrench is bilinear, so cross terms between the constant,
/// sine and cosine parts vanish on average.
pub fn averaged_wrench(
    set: &AcDipoleSet,
    positions: &[Vector3<f64>],
) -> Result<Vec<Wrench>, MagneticsError> {
    check_len(set, positions)?;
    let ws = net_wrench(positions, &set.sin)?;
    let wc = net_wrench(positions, &set.cos)?;
    let wd = net_wrench(positions, &set.dc)?;
    Ok((0..positions.len())
        .map(|j| (ws[j] + wc[j]) * 0.5 + wd[j])
        .collect())
}

fn check_len(set: &AcDipoleSet, positions: &[Vector3<f64>]) -> Result<(), MagneticsError> {
    for len in [set.sin.len(), set.cos.len(), set.dc.len()] {
        if len != positions.len() {
            return Err(MagneticsError::DimensionMismatch {
                expected: positions.len(),
                got: len,
            });
        }
    }
    Ok(())
}

/// Mean net wrench of an arbitrary dipole history over `[0, period)` by uniform sampling.
pub fn quadrature_average<F>(
    dipoles_at: F,
    positions: &[Vector3<f64>],
    period: f64,
    samples: usize,
) -> Result<Vec<Wrench>, MagneticsError>
where
    F: Fn(f64) -> Vec<Dipole>,
{
    let mut acc = vec![Wrench::default(); positions.len()];
    for i in 0..samples {
        let t = period * i as f64 / samples as f64;
        let w = net_wrench(positions, &dipoles_at(t))?;
        for (a, b) in acc.iter_mut().zip(w) {
            *a += b;
        }
    }
    Ok(acc
        .into_iter()
        .map(|w| w * (1.0 / samples as f64))
        .collect())
}

/// Sampled average of the instantaneous wrench over one carrier period.
pub fn quadrature_average_oracle(
    set: &AcDipoleSet,
    positions: &[Vector3<f64>],
    samples: usize,
) -> Result<Vec<Wrench>, MagneticsError> {
    check_len(set, positions)?;
    quadrature_average(
        |t| instantaneous_dipoles(set, t),
        positions,
        set.period(),
        samples,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v3(range: f64) -> impl Strategy<Value = Vector3<f64>> {
        (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    fn line_positions(n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|j| Vector3::new(7.0 * j as f64, (j % 2) as f64, 0.5 * j as f64))
            .collect()
    }

    fn wrench_gap(a: &[Wrench], b: &[Wrench]) -> (f64, f64) {
        let mut gap = 0.0f64;
        let mut scale = 0.0f64;
        for (x, y) in a.iter().zip(b) {
            gap = gap
                .max((x.force - y.force).norm())
                .max((x.torque - y.torque).norm());
            scale = scale.max(x.force.norm()).max(x.torque.norm());
        }
        (gap, scale)
    }

    #[test]
    fn pure_sine_on_one_satellite_gives_nothing() {
        let mut set = AcDipoleSet::zeros(2, 8.0 * std::f64::consts::PI);
        set.sin[0] = Vector3::new(1e5, 0.0, 0.0);
        let w = averaged_wrench(&set, &line_positions(2)).unwrap();
        assert!(w
            .iter()
            .all(|w| w.force == Vector3::zeros() && w.torque == Vector3::zeros()));
    }

    #[test]
    fn phase_quadrature_pair_has_no_mean_interaction() {
        let mut set = AcDipoleSet::zeros(2, 1.0);
        set.sin[0] = Vector3::new(1e5, 0.0, 0.0);
        set.cos[1] = Vector3::new(1e5, 0.0, 0.0);
        let w = averaged_wrench(&set, &line_positions(2)).unwrap();
        assert!(w.iter().all(|w| w.force.norm() == 0.0));
    }

    #[test]
    fn distinct_frequencies_do_not_interact() {
        let w0 = 2.0 * std::f64::consts::PI / 10.0;
        let pos = line_positions(2);
        let a = Vector3::new(1e5, 2e4, 0.0);
        let b = Vector3::new(-3e4, 1e5, 5e4);
        let w = quadrature_average(
            |t| vec![a * (2.0 * w0 * t).sin(), b * (3.0 * w0 * t).sin()],
            &pos,
            10.0,
            240,
        )
        .unwrap();
        let same = quadrature_average(
            |t| vec![a * (2.0 * w0 * t).sin(), b * (2.0 * w0 * t).sin()],
            &pos,
            10.0,
            240,
        )
        .unwrap();
        let scale = same[0].force.norm();
        assert!(scale > 0.0);
        assert!(w[0].force.norm() < 1e-12 * scale);
        assert!(w[1].torque.norm() < 1e-12 * (same[1].torque.norm() + scale));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let set = AcDipoleSet::zeros(3, 1.0);
        assert!(averaged_wrench(&set, &line_positions(2)).is_err());
    }

    proptest! {
        #[test]
        fn matches_quadrature(
            s in proptest::collection::vec(v3(1e5), 4),
            c in proptest::collection::vec(v3(1e5), 4),
            d in proptest::collection::vec(v3(1e4), 4),
            wf in 1.0..60.0f64,
        ) {
            let set = AcDipoleSet { sin: s, cos: c, dc: d, omega_f: wf };
            let pos = line_positions(4);
            let exact = averaged_wrench(&set, &pos).unwrap();
            let oracle = quadrature_average_oracle(&set, &pos, 64).unwrap();
            let (gap, scale) = wrench_gap(&exact, &oracle);
            prop_assert!(gap <= 1e-10 * scale.max(1e-30));
        }

        #[test]
        fn instantaneous_at_zero_is_dc_plus_cos(
            s in proptest::collection::vec(v3(1e5), 3),
            c in proptest::collection::vec(v3(1e5), 3),
            d in proptest::collection::vec(v3(1e5), 3),
        ) {
            let set = AcDipoleSet { sin: s, cos: c.clone(), dc: d.clone(), omega_f: 3.0 };
            let m = instantaneous_dipoles(&set, 0.0);
            for j in 0..3 {
                prop_assert_eq!(m[j], d[j] + c[j]);
            }
        }
    }
}
