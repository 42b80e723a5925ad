//! Far-field dipole interactions, Earth field and gravity-gradient torque.

use nalgebra::{Matrix3, Vector3};

use crate::error::MagneticsError;
use crate::frames::{skew, Mrp, EARTH_RADIUS, MU_EARTH};

/// Vacuum permeability, H/m.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;
/// `mu0 / 4 pi`.
pub const MU0_4PI: f64 = 1e-7;
/// Earth dipole moment, A m^2.
pub const EARTH_DIPOLE_MOMENT: f64 = 8.1e22;
/// Tilt of the Earth dipole from the rotation axis, degrees.
pub const EARTH_DIPOLE_TILT_DEG: f64 = 11.0;

const MIN_SEPARATION: f64 = 1e-9;

/// Magnetic dipole moment, A m^2.
pub type Dipole = Vector3<f64>;

/// Force and torque acting on one satellite.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Wrench { force, torque }
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, o: Wrench) -> Wrench {
        Wrench::new(self.force + o.force, self.torque + o.torque)
    }
}

impl std::ops::AddAssign for Wrench {
    fn add_assign(&mut self, o: Wrench) {
        self.force += o.force;
        self.torque += o.torque;
    }
}

impl std::ops::Mul<f64> for Wrench {
    type Output = Wrench;
    fn mul(self, s: f64) -> Wrench {
        Wrench::new(self.force * s, self.torque * s)
    }
}

fn check_separation(r: &Vector3<f64>) -> Result<f64, MagneticsError> {
    let d = r.norm();
    if !(d > MIN_SEPARATION) {
        return Err(MagneticsError::Coincident { separation: d });
    }
    Ok(d)
}

/// Field matrix `G(r)` with `B = G(r) mu` for a dipole at the origin.
pub fn field_matrix(r: &Vector3<f64>) -> Result<Matrix3<f64>, MagneticsError> {
    let d = check_separation(r)?;
    let d2 = d * d;
    let d3 = d2 * d;
    Ok(MU0_4PI * (3.0 * r * r.transpose() / (d3 * d2) - Matrix3::identity() / d3))
}

/// Field of dipole `mu` at displacement `r` from it.
pub fn dipole_field(mu: &Dipole, r: &Vector3<f64>) -> Result<Vector3<f64>, MagneticsError> {
    Ok(field_matrix(r)? * mu)
}

/// Force on dipole `b` from dipole `a`, with `r` pointing from `a` to `b`.
///
/// Symmetric in the two moments and odd in `r`.
pub fn dipole_force(
    a: &Dipole,
    b: &Dipole,
    r: &Vector3<f64>,
) -> Result<Vector3<f64>, MagneticsError> {
    let d = check_separation(r)?;
    let d2 = d * d;
    let k = 3.0 * MU0_4PI / (d2 * d2 * d);
    let ar = a.dot(r);
    let br = b.dot(r);
    Ok(k * (a.dot(b) * r + ar * b + br * a - 5.0 * ar * br * r / d2))
}

/// Torque on dipole `b` from the field of dipole `a`, with `r` pointing from `a` to `b`.
pub fn dipole_torque(
    a: &Dipole,
    b: &Dipole,
    r: &Vector3<f64>,
) -> Result<Vector3<f64>, MagneticsError> {
    Ok(b.cross(&dipole_field(a, r)?))
}

/// Partial derivatives of the pair force and torque.
#[derive(Debug, Clone, Copy)]
pub struct PairJacobian {
    /// d force / d a
    pub force_a: Matrix3<f64>,
    /// d force / d b
    pub force_b: Matrix3<f64>,
    /// d torque / d a
    pub torque_a: Matrix3<f64>,
    /// d torque / d b
    pub torque_b: Matrix3<f64>,
}

/// Jacobians of [`dipole_force`] and [`dipole_torque`] with respect to the moments.
pub fn pair_jacobian(
    a: &Dipole,
    b: &Dipole,
    r: &Vector3<f64>,
) -> Result<PairJacobian, MagneticsError> {
    let g = field_matrix(r)?;
    let d = r.norm();
    let d2 = d * d;
    let k = 3.0 * MU0_4PI / (d2 * d2 * d);
    let rrt = r * r.transpose();
    let id = Matrix3::identity();
    let ar = a.dot(r);
    let br = b.dot(r);
    Ok(PairJacobian {
        force_a: k * (r * b.transpose() + b * r.transpose() + br * id - 5.0 * br * rrt / d2),
        force_b: k * (r * a.transpose() + ar * id + a * r.transpose() - 5.0 * ar * rrt / d2),
        torque_a: skew(b) * g,
        torque_b: -skew(&(g * a)),
    })
}

/// Net force and torque on each satellite from all the others.
///
/// `positions` and `dipoles` are in a common frame; the result is in that frame.
pub fn net_wrench(
    positions: &[Vector3<f64>],
    dipoles: &[Dipole],
) -> Result<Vec<Wrench>, MagneticsError> {
    if positions.len() != dipoles.len() {
        return Err(MagneticsError::DimensionMismatch {
            expected: positions.len(),
            got: dipoles.len(),
        });
    }
    let n = positions.len();
    let mut out = vec![Wrench::default(); n];
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let r = positions[j] - positions[k];
            out[j].force += dipole_force(&dipoles[k], &dipoles[j], &r)?;
            out[j].torque += dipole_torque(&dipoles[k], &dipoles[j], &r)?;
        }
    }
    Ok(out)
}

/// Unit Earth dipole axis for an equatorial reference orbit, in `I`.
pub fn default_earth_dipole_axis() -> Vector3<f64> {
    let t = EARTH_DIPOLE_TILT_DEG.to_radians();
    Vector3::new(-t.sin(), 0.0, -t.cos())
}

/// Geomagnetic field at `position` (Earth-centred, same axes as `axis`).
pub fn earth_field(
    position: &Vector3<f64>,
    axis: &Vector3<f64>,
) -> Result<Vector3<f64>, MagneticsError> {
    let d = position.norm();
    if !(d > EARTH_RADIUS) {
        return Err(MagneticsError::InsideEarth { radius: d });
    }
    dipole_field(&(EARTH_DIPOLE_MOMENT * axis.normalize()), position)
}

/// Gravity-gradient torque in body axes.
///
/// `position` is the Earth-centred position in `I`.
pub fn gravity_gradient_torque(
    inertia: &Matrix3<f64>,
    position: &Vector3<f64>,
    attitude: &Mrp,
) -> Vector3<f64> {
    let rb = attitude.dcm_b_from_i() * position;
    let d = rb.norm();
    3.0 * MU_EARTH / d.powi(5) * rb.cross(&(inertia * rb))
}

/// Far-field model validity: every separation exceeds twice the larger coil radius.
pub fn far_field_valid(positions: &[Vector3<f64>], coil_radii: &[f64]) -> bool {
    let n = positions.len();
    for j in 0..n {
        for k in (j + 1)..n {
            let limit = 2.0 * coil_radii[j].max(coil_radii[k]);
            if (positions[j] - positions[k]).norm() <= limit {
                return false;
            }
        }
    }
    true
}

/// Smallest pairwise separation.
pub fn min_separation(positions: &[Vector3<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..positions.len() {
        for k in (j + 1)..positions.len() {
            best = best.min((positions[j] - positions[k]).norm());
        }
    }
    best
}
