//! Formation state, angular momentum and the constraint-reduction matrices.
//!
//! Coordinates: positions of satellites 2..n relative to the formation centre
//! of mass in `I` (satellite 1 is implied), MRP attitudes and body rates of all
//! satellites, and reaction-wheel momenta in body axes for the wheel-carrying
//! satellites, in the order they are listed. The last wheel-carrying satellite
//! holds the dependent momentum coordinate.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::ModelError;
use crate::frames::{skew, CircularOrbit, Mrp};
use crate::magnetics::default_earth_dipole_axis;

/// Physical description of one satellite.
#[derive(Debug, Clone, PartialEq)]
pub struct SatelliteParams {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub has_rw: bool,
    pub has_mtq: bool,
    pub coil_radius: f64,
    /// Largest admissible dipole amplitude, A m^2.
    pub dipole_limit: f64,
}

impl SatelliteParams {
    pub fn new(mass: f64, inertia_diag: [f64; 3], has_rw: bool) -> Self {
        SatelliteParams {
            mass,
            inertia: Matrix3::from_diagonal(&Vector3::from(inertia_diag)),
            has_rw,
            has_mtq: false,
            coil_radius: 1.0,
            dipole_limit: 1e7,
        }
    }
}

/// Environmental effects included in the plant and in the modelled disturbance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbances {
    /// Tidal force and gravity-gradient torque.
    pub gravity: bool,
    /// Torque from the geomagnetic field on the formation dipoles.
    pub earth_field: bool,
    /// Unit Earth dipole axis in `I`.
    pub earth_dipole_axis: Vector3<f64>,
}

impl Default for Disturbances {
    fn default() -> Self {
        Disturbances {
            gravity: true,
            earth_field: false,
            earth_dipole_axis: default_earth_dipole_axis(),
        }
    }
}

/// Index layout of the stacked coordinate vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub m: usize,
}

impl Layout {
    /// Length of the full velocity vector `[r_dot, omega, xi]`.
    pub fn dim_zeta(&self) -> usize {
        6 * self.n + 3 * self.m - 3
    }

    /// Length of the independent velocity vector.
    pub fn dim_v(&self) -> usize {
        self.dim_zeta() - 3
    }

    /// Offset of satellite `j` (1-based index `j + 1`, `j >= 1`) in the position block.
    pub fn pos(&self, j: usize) -> usize {
        3 * (j - 1)
    }

    pub fn att(&self, j: usize) -> usize {
        3 * (self.n - 1) + 3 * j
    }

    /// Offset of wheel set `i` in the momentum block.
    pub fn xi(&self, i: usize) -> usize {
        6 * self.n - 3 + 3 * i
    }
}

/// Formation description shared by the dynamics, control and inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationParams {
    pub satellites: Vec<SatelliteParams>,
    pub orbit: CircularOrbit,
    pub disturbances: Disturbances,
    rw: Vec<usize>,
}

impl FormationParams {
    pub fn new(
        satellites: Vec<SatelliteParams>,
        orbit: CircularOrbit,
        disturbances: Disturbances,
    ) -> Result<Self, ModelError> {
        if satellites.is_empty() {
            return Err(ModelError::TooFewSatellites { min: 1, got: 0 });
        }
        for (index, s) in satellites.iter().enumerate() {
            let bad = |reason: &str| ModelError::BadSatellite {
                index,
                reason: reason.to_string(),
            };
            if !(s.mass > 0.0 && s.mass.is_finite()) {
                return Err(bad("mass must be positive"));
            }
            if (s.inertia - s.inertia.transpose()).abs().max() > 1e-12 * s.inertia.abs().max()
                || s.inertia.cholesky().is_none()
            {
                return Err(bad("inertia must be symmetric positive definite"));
            }
            if !(s.coil_radius > 0.0) {
                return Err(bad("coil radius must be positive"));
            }
            if !(s.dipole_limit > 0.0) {
                return Err(bad("dipole limit must be positive"));
            }
        }
        let rw: Vec<usize> = (0..satellites.len())
            .filter(|&j| satellites[j].has_rw)
            .collect();
        if rw.is_empty() {
            return Err(ModelError::NoReactionWheels);
        }
        Ok(FormationParams {
            satellites,
            orbit,
            disturbances,
            rw,
        })
    }

    pub fn n(&self) -> usize {
        self.satellites.len()
    }

    /// Number of wheel-carrying satellites.
    pub fn m(&self) -> usize {
        self.rw.len()
    }

    /// Satellite indices carrying reaction wheels, in coordinate order.
    pub fn rw_indices(&self) -> &[usize] {
        &self.rw
    }

    /// Wheel slot of satellite `j`, if it has wheels.
    pub fn rw_slot(&self, j: usize) -> Option<usize> {
        self.rw.iter().position(|&k| k == j)
    }

    pub fn layout(&self) -> Layout {
        Layout {
            n: self.n(),
            m: self.m(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.satellites.iter().map(|s| s.mass).sum()
    }

    /// Position of satellite 1 implied by the centre-of-mass constraint.
    pub fn implied_first(&self, others: &[Vector3<f64>]) -> Vector3<f64> {
        let mut acc = Vector3::zeros();
        for (j, r) in others.iter().enumerate() {
            acc += self.satellites[j + 1].mass * r;
        }
        -acc / self.satellites[0].mass
    }
}

/// Formation state at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationState {
    pub t: f64,
    /// Positions of satellites 2..n in `I`, m.
    pub r: Vec<Vector3<f64>>,
    /// Velocities of satellites 2..n in `I`, m/s.
    pub r_dot: Vec<Vector3<f64>>,
    pub sigma: Vec<Mrp>,
    /// Body rates in body axes, rad/s.
    pub omega: Vec<Vector3<f64>>,
    /// Wheel momenta in body axes, N m s, one per wheel-carrying satellite.
    pub h: Vec<Vector3<f64>>,
}

impl FormationState {
    /// State at rest with identity attitudes and the given positions of all `n` satellites.
    ///
    /// The positions are shifted so that the centre of mass sits at the origin.
    pub fn at_rest(
        params: &FormationParams,
        positions: &[Vector3<f64>],
    ) -> Result<Self, ModelError> {
        let n = params.n();
        if positions.len() != n {
            return Err(ModelError::StateShape(format!(
                "expected {n} positions, got {}",
                positions.len()
            )));
        }
        let com = positions
            .iter()
            .zip(&params.satellites)
            .map(|(r, s)| s.mass * r)
            .sum::<Vector3<f64>>()
            / params.total_mass();
        Ok(FormationState {
            t: 0.0,
            r: positions[1..].iter().map(|r| r - com).collect(),
            r_dot: vec![Vector3::zeros(); n - 1],
            sigma: vec![Mrp::identity(); n],
            omega: vec![Vector3::zeros(); n],
            h: vec![Vector3::zeros(); params.m()],
        })
    }

    pub fn check_shape(&self, params: &FormationParams) -> Result<(), ModelError> {
        let n = params.n();
        let ok = self.r.len() == n - 1
            && self.r_dot.len() == n - 1
            && self.sigma.len() == n
            && self.omega.len() == n
            && self.h.len() == params.m();
        if ok {
            Ok(())
        } else {
            Err(ModelError::StateShape(format!(
                "state sized for r={}, sigma={}, h={} but formation has n={n}, m={}",
                self.r.len(),
                self.sigma.len(),
                self.h.len(),
                params.m()
            )))
        }
    }

    /// Positions of all satellites in `I`.
    pub fn positions(&self, params: &FormationParams) -> Vec<Vector3<f64>> {
        let mut out = Vec::with_capacity(self.r.len() + 1);
        out.push(params.implied_first(&self.r));
        out.extend_from_slice(&self.r);
        out
    }

    /// Velocities of all satellites in `I`.
    pub fn velocities(&self, params: &FormationParams) -> Vec<Vector3<f64>> {
        let mut out = Vec::with_capacity(self.r_dot.len() + 1);
        out.push(params.implied_first(&self.r_dot));
        out.extend_from_slice(&self.r_dot);
        out
    }

    /// Wheel momenta in `I`.
    pub fn rw_momentum_inertial(&self, params: &FormationParams) -> Vec<Vector3<f64>> {
        params
            .rw_indices()
            .iter()
            .zip(&self.h)
            .map(|(&j, h)| self.sigma[j].dcm_i_from_b() * h)
            .collect()
    }

    /// Wheel momentum of satellite `j` in body axes (zero without wheels).
    pub fn h_of(&self, params: &FormationParams, j: usize) -> Vector3<f64> {
        params.rw_slot(j).map_or_else(Vector3::zeros, |i| self.h[i])
    }

    pub fn is_finite(&self) -> bool {
        let fin = |v: &Vector3<f64>| v.iter().all(|x| x.is_finite());
        self.t.is_finite()
            && self.r.iter().all(fin)
            && self.r_dot.iter().all(fin)
            && self.sigma.iter().all(|s| fin(&s.0))
            && self.omega.iter().all(fin)
            && self.h.iter().all(fin)
    }

    /// Flattens `[r, r_dot, sigma, omega, h]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out =
            Vec::with_capacity(3 * (2 * self.r.len() + 2 * self.sigma.len() + self.h.len()));
        for v in self.r.iter().chain(&self.r_dot) {
            out.extend_from_slice(v.as_slice());
        }
        for s in &self.sigma {
            out.extend_from_slice(s.0.as_slice());
        }
        for v in self.omega.iter().chain(&self.h) {
            out.extend_from_slice(v.as_slice());
        }
        out
    }

    /// Inverse of [`FormationState::to_flat`] using `self` as the shape template.
    pub fn with_flat(&self, t: f64, y: &[f64]) -> FormationState {
        let mut it = y.chunks_exact(3).map(Vector3::from_column_slice);
        let mut take = |k: usize| (0..k).map(|_| it.next().unwrap()).collect::<Vec<_>>();
        let r = take(self.r.len());
        let r_dot = take(self.r_dot.len());
        let sigma = take(self.sigma.len()).into_iter().map(Mrp).collect();
        let omega = take(self.omega.len());
        let h = take(self.h.len());
        FormationState {
            t,
            r,
            r_dot,
            sigma,
            omega,
            h,
        }
    }
}

/// Total angular momentum about the formation centre of mass, in `I`.
pub fn system_angular_momentum(state: &FormationState, params: &FormationParams) -> Vector3<f64> {
    let r1 = params.implied_first(&state.r);
    let mut l = Vector3::zeros();
    for j in 1..params.n() {
        l += params.satellites[j].mass * (state.r[j - 1] - r1).cross(&state.r_dot[j - 1]);
    }
    for (j, s) in params.satellites.iter().enumerate() {
        let c = state.sigma[j].dcm_i_from_b();
        l += c * (s.inertia * state.omega[j] + state.h_of(params, j));
    }
    l
}

/// Wheel momenta relative to an equal share of the system momentum, in body axes.
pub fn xi(state: &FormationState, params: &FormationParams) -> Vec<Vector3<f64>> {
    let l = system_angular_momentum(state, params);
    let m = params.m() as f64;
    params
        .rw_indices()
        .iter()
        .zip(&state.h)
        .map(|(&j, h)| h - state.sigma[j].dcm_b_from_i() * l / m)
        .collect()
}

fn put(mat: &mut DMatrix<f64>, row: usize, col: usize, block: &Matrix3<f64>) {
    mat.fixed_view_mut::<3, 3>(row, col).copy_from(block);
}

/// Constraint matrix `A` with `A zeta = 0`.
pub fn assemble_a(state: &FormationState, params: &FormationParams) -> DMatrix<f64> {
    let lay = params.layout();
    let mut a = DMatrix::zeros(3, lay.dim_zeta());
    let r1 = params.implied_first(&state.r);
    for j in 1..lay.n {
        let blk = params.satellites[j].mass * skew(&(state.r[j - 1] - r1));
        put(&mut a, 0, lay.pos(j), &blk);
    }
    for (j, s) in params.satellites.iter().enumerate() {
        put(
            &mut a,
            0,
            lay.att(j),
            &(state.sigma[j].dcm_i_from_b() * s.inertia),
        );
    }
    for (i, &j) in params.rw_indices().iter().enumerate() {
        put(&mut a, 0, lay.xi(i), &state.sigma[j].dcm_i_from_b());
    }
    a
}

/// `A` without its dependent-momentum block.
pub fn assemble_a_s(state: &FormationState, params: &FormationParams) -> DMatrix<f64> {
    let a = assemble_a(state, params);
    let dv = params.layout().dim_v();
    a.columns(0, dv).into_owned()
}

/// Basis `S` of the constraint null space, `zeta = S v`.
pub fn assemble_s(state: &FormationState, params: &FormationParams) -> DMatrix<f64> {
    let a_s = assemble_a_s(state, params);
    s_from_a_s(state, params, &a_s)
}

pub(crate) fn s_from_a_s(
    state: &FormationState,
    params: &FormationParams,
    a_s: &DMatrix<f64>,
) -> DMatrix<f64> {
    let lay = params.layout();
    let dv = lay.dim_v();
    let mut s = DMatrix::zeros(lay.dim_zeta(), dv);
    s.view_mut((0, 0), (dv, dv)).fill_with_identity();
    let jm = *params.rw_indices().last().unwrap();
    let bottom = -(state.sigma[jm].dcm_b_from_i() * a_s);
    s.view_mut((dv, 0), (3, dv)).copy_from(&bottom);
    s
}

/// Map `R` from the input vector to the rate of system angular momentum.
pub fn assemble_r(state: &FormationState, params: &FormationParams) -> DMatrix<f64> {
    let lay = params.layout();
    let mut r = DMatrix::zeros(3, lay.dim_zeta());
    let r1 = params.implied_first(&state.r);
    for j in 1..lay.n {
        put(&mut r, 0, lay.pos(j), &skew(&(state.r[j - 1] - r1)));
    }
    for j in 0..lay.n {
        put(&mut r, 0, lay.att(j), &state.sigma[j].dcm_i_from_b());
    }
    r
}

/// Independent velocities `[r_dot, omega, xi_1..xi_{m-1}]`.
pub fn pack_v(state: &FormationState, params: &FormationParams) -> DVector<f64> {
    let lay = params.layout();
    let mut v = DVector::zeros(lay.dim_v());
    for j in 1..lay.n {
        v.fixed_rows_mut::<3>(lay.pos(j))
            .copy_from(&state.r_dot[j - 1]);
    }
    for j in 0..lay.n {
        v.fixed_rows_mut::<3>(lay.att(j)).copy_from(&state.omega[j]);
    }
    let x = xi(state, params);
    for i in 0..lay.m - 1 {
        v.fixed_rows_mut::<3>(lay.xi(i)).copy_from(&x[i]);
    }
    v
}

/// Full velocity vector `[r_dot, omega, xi]`.
pub fn pack_zeta(state: &FormationState, params: &FormationParams) -> DVector<f64> {
    let lay = params.layout();
    let mut z = DVector::zeros(lay.dim_zeta());
    let v = pack_v(state, params);
    z.rows_mut(0, lay.dim_v()).copy_from(&v);
    let x = xi(state, params);
    z.fixed_rows_mut::<3>(lay.xi(lay.m - 1))
        .copy_from(&x[lay.m - 1]);
    z
}

/// Rebuilds a state from positions and attitudes of `base` and independent velocities `v`.
///
/// The wheel momenta are recovered from the momentum split, so the result
/// satisfies the constraint exactly.
pub fn unpack_v(
    base: &FormationState,
    params: &FormationParams,
    v: &DVector<f64>,
) -> FormationState {
    let lay = params.layout();
    let mut st = base.clone();
    for j in 1..lay.n {
        st.r_dot[j - 1] = v.fixed_rows::<3>(lay.pos(j)).into_owned();
    }
    for j in 0..lay.n {
        st.omega[j] = v.fixed_rows::<3>(lay.att(j)).into_owned();
    }
    let a_s = assemble_a_s(base, params);
    let jm = *params.rw_indices().last().unwrap();
    let xi_m = -(base.sigma[jm].dcm_b_from_i() * (&a_s * v));
    let mut xis: Vec<Vector3<f64>> = (0..lay.m - 1)
        .map(|i| v.fixed_rows::<3>(lay.xi(i)).into_owned())
        .collect();
    xis.push(Vector3::new(xi_m[0], xi_m[1], xi_m[2]));
    // v fixes the split of momentum, not L itself: keep the momentum of `base`.
    let l = system_angular_momentum(base, params);
    let m = lay.m as f64;
    for (i, &j) in params.rw_indices().iter().enumerate() {
        st.h[i] = xis[i] + st.sigma[j].dcm_b_from_i() * l / m;
    }
    st
}

/// Block-diagonal map from `v` to the rates of `[r, sigma, 0]`.
pub fn zhat(state: &FormationState, params: &FormationParams) -> DMatrix<f64> {
    let lay = params.layout();
    let dv = lay.dim_v();
    let mut z = DMatrix::zeros(dv, dv);
    z.view_mut((0, 0), (3 * (lay.n - 1), 3 * (lay.n - 1)))
        .fill_with_identity();
    for j in 0..lay.n {
        put(
            &mut z,
            lay.att(j),
            lay.att(j),
            &state.sigma[j].kinematics_matrix(),
        );
    }
    z
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn formation(n: usize, rw: &[usize]) -> FormationParams {
        let sats = (0..n)
            .map(|j| {
                let mut s = SatelliteParams::new(
                    150.0 + 20.0 * j as f64,
                    [107.0 + j as f64, 110.0, 134.0 - j as f64],
                    rw.contains(&j),
                );
                s.inertia[(0, 1)] = 3.0;
                s.inertia[(1, 0)] = 3.0;
                s
            })
            .collect();
        FormationParams::new(
            sats,
            CircularOrbit::from_altitude(700e3),
            Disturbances::default(),
        )
        .unwrap()
    }

    pub(crate) fn random_state(params: &FormationParams, seed: u64) -> FormationState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = |s: f64| {
            Vector3::new(
                rng.gen_range(-s..s),
                rng.gen_range(-s..s),
                rng.gen_range(-s..s),
            )
        };
        let n = params.n();
        FormationState {
            t: 0.0,
            r: (1..n).map(|_| v(15.0)).collect(),
            r_dot: (1..n).map(|_| v(0.05)).collect(),
            sigma: (0..n).map(|_| Mrp(v(0.6))).collect(),
            omega: (0..n).map(|_| v(0.02)).collect(),
            h: (0..params.m()).map(|_| v(2.0)).collect(),
        }
    }

    #[test]
    fn spinning_single_satellite() {
        let params = FormationParams::new(
            vec![SatelliteParams::new(200.0, [107.0, 107.0, 134.0], true)],
            CircularOrbit::from_altitude(700e3),
            Disturbances::default(),
        )
        .unwrap();
        let st = FormationState {
            t: 0.0,
            r: vec![],
            r_dot: vec![],
            sigma: vec![Mrp::identity()],
            omega: vec![Vector3::new(0.0, 0.0, 0.1)],
            h: vec![Vector3::zeros()],
        };
        assert_relative_eq!(
            system_angular_momentum(&st, &params),
            Vector3::new(0.0, 0.0, 13.4),
            max_relative = 1e-14
        );
    }

    #[test]
    fn shapes() {
        let p = formation(5, &[0, 1, 2, 3, 4]);
        let st = random_state(&p, 1);
        assert_eq!(assemble_a(&st, &p).shape(), (3, 42));
        assert_eq!(assemble_s(&st, &p).shape(), (42, 39));
        assert_eq!(assemble_r(&st, &p).shape(), (3, 42));
        assert_eq!(pack_v(&st, &p).len(), 39);
    }

    #[test]
    fn flat_round_trip() {
        let p = formation(3, &[1, 2]);
        let st = random_state(&p, 2);
        assert_eq!(st.with_flat(0.0, &st.to_flat()), st);
    }

    #[test]
    fn rejects_formation_without_wheels() {
        let sats = vec![SatelliteParams::new(1.0, [1.0, 1.0, 1.0], false)];
        let err = FormationParams::new(
            sats,
            CircularOrbit::from_altitude(700e3),
            Disturbances::default(),
        );
        assert_eq!(err, Err(ModelError::NoReactionWheels));
    }

    #[test]
    fn unpack_inverts_pack() {
        let p = formation(4, &[0, 2, 3]);
        let st = random_state(&p, 5);
        let v = pack_v(&st, &p);
        let back = unpack_v(&st, &p, &v);
        for (a, b) in back.h.iter().zip(&st.h) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        assert_relative_eq!(pack_v(&back, &p), v, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn constraint_and_null_space(seed in 0u64..10_000, n in 2usize..6, mask in 1u32..32) {
            let rw: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
            prop_assume!(!rw.is_empty());
            let p = formation(n, &rw);
            let st = random_state(&p, seed);
            let a = assemble_a(&st, &p);
            let zeta = pack_zeta(&st, &p);
            let scale = a.abs().max() * zeta.abs().max();
            prop_assert!((&a * &zeta).abs().max() <= 1e-12 * scale);
            let s = assemble_s(&st, &p);
            prop_assert!((&a * &s).abs().max() <= 1e-12 * a.abs().max() * s.abs().max());
            // zeta = S v
            let v = pack_v(&st, &p);
            prop_assert!((&s * &v - &zeta).abs().max() <= 1e-10 * zeta.abs().max());
        }

        #[test]
        fn momentum_via_r_matches_direct(seed in 0u64..10_000) {
            // L_dot from R u equals sum of r x f + C tau for forces balanced through satellite 1.
            let p = formation(4, &[1, 3]);
            let st = random_state(&p, seed);
            let lay = p.layout();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let u = DVector::from_fn(lay.dim_zeta(), |_, _| rng.gen_range(-1.0..1.0));
            let ldot = assemble_r(&st, &p) * &u;
            let pos = st.positions(&p);
            let mut f1 = Vector3::zeros();
            let mut direct = Vector3::zeros();
            for j in 1..lay.n {
                let f = u.fixed_rows::<3>(lay.pos(j)).into_owned();
                f1 -= f;
                direct += pos[j].cross(&f);
            }
            direct += pos[0].cross(&f1);
            for j in 0..lay.n {
                direct += st.sigma[j].dcm_i_from_b() * u.fixed_rows::<3>(lay.att(j));
            }
            let ldot = Vector3::new(ldot[0], ldot[1], ldot[2]);
            prop_assert!((ldot - direct).norm() < 1e-10 * (1.0 + direct.norm()));
        }
    }
}
