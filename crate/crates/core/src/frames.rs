//! Reference frames, MRP attitude algebra and the reference orbit.

use nalgebra::{Matrix3, Vector3};

use crate::error::FrameError;

/// Earth gravitational parameter, m^3/s^2.
pub const MU_EARTH: f64 = 3.986e14;
/// Mean Earth radius, m.
pub const EARTH_RADIUS: f64 = 6378e3;

const SINGULAR_DENOMINATOR: f64 = 1e-12;

/// Cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Frames used by the model.
///
/// `I` has its origin at the formation centre of mass, `x` along the radial
/// direction at epoch and `z` along the orbit normal; it does not rotate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Non-rotating formation frame.
    I,
    /// Orbital frame, rotating at the mean motion about `I`'s z axis.
    O,
    /// Body frame of satellite `j` (0-based).
    Body(usize),
    /// Earth-centred inertial frame, aligned with `I`.
    Eci,
}

impl Frame {
    /// Angular velocity of the frame relative to inertial space, in `I` components.
    /// `body_rates` holds each satellite's `(attitude, omega)` with `omega` in body axes.
    pub fn angular_velocity(
        &self,
        orbit: &CircularOrbit,
        body_rates: &[(Mrp, Vector3<f64>)],
    ) -> Option<Vector3<f64>> {
        match self {
            Frame::I | Frame::Eci => Some(Vector3::zeros()),
            Frame::O => Some(Vector3::new(0.0, 0.0, orbit.mean_motion())),
            Frame::Body(j) => body_rates.get(*j).map(|(s, w)| s.dcm_i_from_b() * w),
        }
    }
}

/// Modified Rodrigues parameters describing `B` relative to `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mrp(pub Vector3<f64>);

impl Default for Mrp {
    fn default() -> Self {
        Mrp(Vector3::zeros())
    }
}

impl Mrp {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Mrp(Vector3::new(x, y, z))
    }

    pub fn identity() -> Self {
        Self::default()
    }

    /// MRP of a rotation by `angle` about the unit vector `axis`.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        Mrp(axis.normalize() * (angle / 4.0).tan())
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    /// Alternate set `-sigma / |sigma|^2` describing the same attitude.
    pub fn shadow(&self) -> Result<Mrp, FrameError> {
        let s2 = self.norm_squared();
        if s2 == 0.0 {
            return Err(FrameError::ZeroMrp);
        }
        Ok(Mrp(-self.0 / s2))
    }

    /// Returns the set with norm at most one.
    pub fn normalized(&self) -> Mrp {
        if self.norm_squared() > 1.0 {
            Mrp(-self.0 / self.norm_squared())
        } else {
            *self
        }
    }

    /// Kinematic matrix `Z` with `sigma_dot = Z omega`.
    pub fn kinematics_matrix(&self) -> Matrix3<f64> {
        let s = &self.0;
        let s2 = s.norm_squared();
        0.25 * ((1.0 - s2) * Matrix3::identity() + 2.0 * skew(s) + 2.0 * s * s.transpose())
    }

    /// Rotation taking `I` components to body components.
    pub fn dcm_b_from_i(&self) -> Matrix3<f64> {
        let s = &self.0;
        let s2 = s.norm_squared();
        let sk = skew(s);
        let d = (1.0 + s2) * (1.0 + s2);
        Matrix3::identity() + (8.0 * sk * sk - 4.0 * (1.0 - s2) * sk) / d
    }

    /// Rotation taking body components to `I` components.
    pub fn dcm_i_from_b(&self) -> Matrix3<f64> {
        self.dcm_b_from_i().transpose()
    }

    /// MRP (norm at most one) of the rotation `dcm`, which maps `I` to body components.
    pub fn from_dcm(dcm: &Matrix3<f64>) -> Mrp {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(dcm.transpose());
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
        let (w, v) = if q.w < 0.0 {
            (-q.w, -q.vector().into_owned())
        } else {
            (q.w, q.vector().into_owned())
        };
        Mrp(v / (1.0 + w))
    }

    /// Principal rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        let n = self.normalized();
        4.0 * n.0.norm().atan()
    }
}

/// Attitude error of `sigma` relative to `sigma_d`.
///
/// Falls back to the shadow of `sigma` when the direct formula is singular.
pub fn mrp_error(sigma: &Mrp, sigma_d: &Mrp) -> Result<Mrp, FrameError> {
    match error_raw(&sigma.0, &sigma_d.0) {
        Ok(e) => Ok(e),
        Err(err) => {
            let alt = sigma.shadow().map_err(|_| err.clone())?;
            error_raw(&alt.0, &sigma_d.0)
        }
    }
}

fn error_raw(s: &Vector3<f64>, d: &Vector3<f64>) -> Result<Mrp, FrameError> {
    let s2 = s.norm_squared();
    let d2 = d.norm_squared();
    let den = 1.0 + s2 * d2 + 2.0 * s.dot(d);
    if den.abs() < SINGULAR_DENOMINATOR {
        return Err(FrameError::NearSingularComposition { denominator: den });
    }
    Ok(Mrp(
        ((1.0 - d2) * s - (1.0 - s2) * d + 2.0 * s.cross(d)) / den
    ))
}

/// Composition: attitude `sigma` whose error relative to `sigma_d` is `delta`.
pub fn mrp_compose(delta: &Mrp, sigma_d: &Mrp) -> Result<Mrp, FrameError> {
    let e = &delta.0;
    let d = &sigma_d.0;
    let e2 = e.norm_squared();
    let d2 = d.norm_squared();
    let den = 1.0 + e2 * d2 - 2.0 * e.dot(d);
    if den.abs() < SINGULAR_DENOMINATOR {
        return Err(FrameError::NearSingularComposition { denominator: den });
    }
    Ok(Mrp(
        ((1.0 - d2) * e + (1.0 - e2) * d - 2.0 * e.cross(d)) / den
    ))
}

/// Applies the shadow switch when the norm exceeds one.
pub fn shadow_switch(sigma: &Mrp) -> Mrp {
    sigma.normalized()
}

/// Circular reference orbit in the plane `z = 0` of `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularOrbit {
    pub radius: f64,
    pub mu: f64,
}

impl CircularOrbit {
    pub fn from_altitude(altitude: f64) -> Self {
        CircularOrbit {
            radius: EARTH_RADIUS + altitude,
            mu: MU_EARTH,
        }
    }

    pub fn mean_motion(&self) -> f64 {
        (self.mu / self.radius.powi(3)).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.mean_motion()
    }

    /// Radial unit vector `o_x` at time `t`, in `I`.
    pub fn radial_axis(&self, t: f64) -> Vector3<f64> {
        orbital_frame_axis(t, self.mean_motion())
    }

    /// Formation centre position relative to the Earth, in `I`.
    pub fn position(&self, t: f64) -> Vector3<f64> {
        self.radius * self.radial_axis(t)
    }

    /// Rotation taking `I` components to `O` components.
    pub fn dcm_o_from_i(&self, t: f64) -> Matrix3<f64> {
        let (s, c) = (self.mean_motion() * t).sin_cos();
        Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
    }

    /// Tidal gradient `G` with `f = m G r` for a point `r` from the formation centre.
    pub fn tidal_gradient(&self, t: f64) -> Matrix3<f64> {
        let o = self.radial_axis(t);
        self.mean_motion().powi(2) * (3.0 * o * o.transpose() - Matrix3::identity())
    }
}

/// Radial unit vector of the orbit with mean motion `n` at time `t`.
pub fn orbital_frame_axis(t: f64, n: f64) -> Vector3<f64> {
    let (s, c) = (n * t).sin_cos();
    Vector3::new(c, s, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mrp_strategy() -> impl Strategy<Value = Mrp> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Mrp::new(x, y, z))
    }

    // Independent DCM from an axis-angle pair (Rodrigues formula).
    fn axis_angle_dcm(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
        let a = axis.normalize();
        let k = skew(&a);
        // Passive rotation (I components to body components).
        (Matrix3::identity() + angle.sin() * k + (1.0 - angle.cos()) * k * k).transpose()
    }

    #[test]
    fn z_at_identity_is_quarter_identity() {
        let z = Mrp::identity().kinematics_matrix();
        assert_relative_eq!(z, Matrix3::identity() * 0.25, epsilon = 1e-15);
    }

    #[test]
    fn shadow_of_unit_x() {
        let s = Mrp::new(0.5, 0.0, 0.0).shadow().unwrap();
        assert_relative_eq!(s.0, Vector3::new(-2.0, 0.0, 0.0), epsilon = 1e-15);
        assert_eq!(Mrp::identity().shadow(), Err(FrameError::ZeroMrp));
    }

    #[test]
    fn dcm_matches_axis_angle() {
        let axis = Vector3::new(0.3, -0.5, 0.8);
        for &angle in &[0.1, 1.0, 2.5, 3.1] {
            let m = Mrp::from_axis_angle(&axis, angle);
            assert_relative_eq!(
                m.dcm_b_from_i(),
                axis_angle_dcm(&axis, angle),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn identical_attitudes_have_zero_error() {
        let s = Mrp::new(0.2, -0.1, 0.3);
        assert_relative_eq!(
            mrp_error(&s, &s).unwrap().0,
            Vector3::zeros(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn antipodal_half_turns_fall_back_to_shadow() {
        let s = Mrp::new(1.0, 0.0, 0.0);
        let d = Mrp::new(-1.0, 0.0, 0.0);
        let e = mrp_error(&s, &d).unwrap();
        assert_relative_eq!(e.0, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn orbit_rate_at_700_km() {
        let orbit = CircularOrbit::from_altitude(700e3);
        let n = (3.986e14f64 / 7.078e6f64.powi(3)).sqrt();
        assert_relative_eq!(orbit.mean_motion(), n, max_relative = 1e-15);
        assert_relative_eq!(orbit.radial_axis(0.0), Vector3::x(), epsilon = 1e-15);
        let quarter = orbit.period() / 4.0;
        assert_relative_eq!(orbit.radial_axis(quarter), Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn frame_rates() {
        let orbit = CircularOrbit::from_altitude(700e3);
        let w = Vector3::new(0.0, 0.0, 0.1);
        let rates = [(Mrp::identity(), w)];
        assert_eq!(
            Frame::I.angular_velocity(&orbit, &rates),
            Some(Vector3::zeros())
        );
        assert_eq!(Frame::Body(0).angular_velocity(&orbit, &rates), Some(w));
        assert_eq!(Frame::Body(3).angular_velocity(&orbit, &rates), None);
        assert_relative_eq!(
            Frame::O.angular_velocity(&orbit, &rates).unwrap().z,
            orbit.mean_motion()
        );
    }

    proptest! {
        #[test]
        fn shadow_preserves_attitude(s in mrp_strategy()) {
            prop_assume!(s.norm_squared() > 1e-6);
            let sh = s.shadow().unwrap();
            let a = s.dcm_b_from_i();
            let b = sh.dcm_b_from_i();
            prop_assert!((a - b).abs().max() < 1e-10);
        }

        #[test]
        fn normalized_norm_at_most_one(s in mrp_strategy()) {
            prop_assert!(s.normalized().norm_squared() <= 1.0 + 1e-12);
        }

        #[test]
        fn dcm_is_orthonormal(s in mrp_strategy()) {
            let c = s.dcm_b_from_i();
            prop_assert!((c * c.transpose() - Matrix3::identity()).abs().max() < 1e-12);
            prop_assert!((c.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn from_dcm_round_trip(s in mrp_strategy()) {
            let back = Mrp::from_dcm(&s.dcm_b_from_i());
            prop_assert!(back.norm_squared() <= 1.0 + 1e-12);
            prop_assert!((back.dcm_b_from_i() - s.dcm_b_from_i()).abs().max() < 1e-10);
        }

        #[test]
        fn error_matches_relative_dcm(s in mrp_strategy(), d in mrp_strategy()) {
            let Ok(e) = mrp_error(&s, &d) else { return Ok(()); };
            let rel = s.dcm_b_from_i() * d.dcm_b_from_i().transpose();
            prop_assert!((e.dcm_b_from_i() - rel).abs().max() < 1e-8);
        }

        #[test]
        fn compose_inverts_error(s in mrp_strategy(), d in mrp_strategy()) {
            let Ok(e) = mrp_error(&s, &d) else { return Ok(()); };
            let Ok(back) = mrp_compose(&e, &d) else { return Ok(()); };
            let same = (back.dcm_b_from_i() - s.dcm_b_from_i()).abs().max() < 1e-8;
            prop_assert!(same);
            let e2 = mrp_error(&back, &d).unwrap();
            prop_assert!((e2.dcm_b_from_i() - e.dcm_b_from_i()).abs().max() < 1e-8);
        }

        #[test]
        fn z_consistent_with_dcm_rate(s in mrp_strategy(), wx in -1.0..1.0f64, wy in -1.0..1.0f64, wz in -1.0..1.0f64) {
            // d/dt C = -[w]x C with sigma_dot = Z w
            let w = Vector3::new(wx, wy, wz);
            let h = 1e-6;
            let sdot = s.kinematics_matrix() * w;
            let cp = Mrp(s.0 + h * sdot).dcm_b_from_i();
            let cm = Mrp(s.0 - h * sdot).dcm_b_from_i();
            let fd = (cp - cm) / (2.0 * h);
            let expected = -skew(&w) * s.dcm_b_from_i();
            prop_assert!((fd - expected).abs().max() < 1e-6 * (1.0 + s.norm_squared()).powi(2));
        }
    }
}
