//! Equations of motion, reduced system matrices and the fixed-step integrator.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::acmod::{averaged_wrench, instantaneous_dipoles, AcDipoleSet};
use crate::error::{DynamicsError, MagneticsError};
use crate::frames::skew;
use crate::kinematics::{assemble_a_s, pack_v, s_from_a_s, FormationParams, FormationState};
use crate::magnetics::{earth_field, gravity_gradient_torque, net_wrench, Dipole};

/// Full and reduced matrices of `M zeta_dot + C zeta = B u + u_d` at one state.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub m: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub s_dot: DMatrix<f64>,
    pub a_s: DMatrix<f64>,
    /// `S^T M S`
    pub m_bar: DMatrix<f64>,
    /// `S^T (M S_dot + C S)`
    pub c_bar: DMatrix<f64>,
    /// `S^T B`
    pub b_bar: DMatrix<f64>,
}

fn put(mat: &mut DMatrix<f64>, row: usize, col: usize, block: &Matrix3<f64>) {
    mat.fixed_view_mut::<3, 3>(row, col).copy_from(block);
}

/// Generalised mass matrix.
pub fn mass_matrix(params: &FormationParams) -> DMatrix<f64> {
    let lay = params.layout();
    let mut m = DMatrix::zeros(lay.dim_zeta(), lay.dim_zeta());
    for j in 1..lay.n {
        put(
            &mut m,
            lay.pos(j),
            lay.pos(j),
            &(Matrix3::identity() * params.satellites[j].mass),
        );
    }
    for j in 0..lay.n {
        put(
            &mut m,
            lay.att(j),
            lay.att(j),
            &params.satellites[j].inertia,
        );
    }
    for i in 0..lay.m {
        put(&mut m, lay.xi(i), lay.xi(i), &Matrix3::identity());
    }
    m
}

/// Gyroscopic matrix.
pub fn gyro_matrix(state: &FormationState, params: &FormationParams) -> DMatrix<f64> {
    let lay = params.layout();
    let mut c = DMatrix::zeros(lay.dim_zeta(), lay.dim_zeta());
    for j in 0..lay.n {
        let hb = params.satellites[j].inertia * state.omega[j] + state.h_of(params, j);
        put(&mut c, lay.att(j), lay.att(j), &(-skew(&hb)));
    }
    c
}

/// Input matrix: wheel torques enter the bus with a minus sign.
pub fn input_matrix(params: &FormationParams) -> DMatrix<f64> {
    let lay = params.layout();
    let d = lay.dim_zeta();
    let mut b = DMatrix::identity(d, d);
    for (i, &j) in params.rw_indices().iter().enumerate() {
        put(&mut b, lay.att(j), lay.xi(i), &(-Matrix3::identity()));
    }
    b
}

/// Inverse of [`input_matrix`].
pub fn input_matrix_inverse(params: &FormationParams) -> DMatrix<f64> {
    let lay = params.layout();
    let d = lay.dim_zeta();
    let mut b = DMatrix::identity(d, d);
    for (i, &j) in params.rw_indices().iter().enumerate() {
        put(&mut b, lay.att(j), lay.xi(i), &Matrix3::identity());
    }
    b
}

/// Time derivative of `S` along the current velocities.
pub fn s_dot(state: &FormationState, params: &FormationParams, a_s: &DMatrix<f64>) -> DMatrix<f64> {
    let lay = params.layout();
    let dv = lay.dim_v();
    let mut a_dot = DMatrix::zeros(3, dv);
    let v1 = params.implied_first(&state.r_dot);
    for j in 1..lay.n {
        let blk = params.satellites[j].mass * skew(&(state.r_dot[j - 1] - v1));
        put(&mut a_dot, 0, lay.pos(j), &blk);
    }
    for j in 0..lay.n {
        let c = state.sigma[j].dcm_i_from_b() * skew(&state.omega[j]);
        put(
            &mut a_dot,
            0,
            lay.att(j),
            &(c * params.satellites[j].inertia),
        );
    }
    let rw = params.rw_indices();
    for (i, &j) in rw[..rw.len() - 1].iter().enumerate() {
        let c = state.sigma[j].dcm_i_from_b() * skew(&state.omega[j]);
        put(&mut a_dot, 0, lay.xi(i), &c);
    }
    let jm = *rw.last().unwrap();
    let cm = state.sigma[jm].dcm_b_from_i();
    let cm_dot = -skew(&state.omega[jm]) * cm;
    let bottom = -(cm_dot * a_s + cm * a_dot);
    let mut sd = DMatrix::zeros(lay.dim_zeta(), dv);
    sd.view_mut((dv, 0), (3, dv)).copy_from(&bottom);
    sd
}

/// Assembles the full and reduced matrices at `state`.
pub fn assemble_system(state: &FormationState, params: &FormationParams) -> SystemMatrices {
    let a_s = assemble_a_s(state, params);
    let s = s_from_a_s(state, params, &a_s);
    let sd = s_dot(state, params, &a_s);
    let m = mass_matrix(params);
    let c = gyro_matrix(state, params);
    let b = input_matrix(params);
    let st = s.transpose();
    let m_bar = &st * &m * &s;
    let c_bar = &st * (&m * &sd + &c * &s);
    let b_bar = &st * &b;
    SystemMatrices {
        m,
        c,
        b,
        s,
        s_dot: sd,
        a_s,
        m_bar,
        c_bar,
        b_bar,
    }
}

/// Modelled environmental input, split by coordinate block.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceInput {
    /// Tidal forces on satellites 2..n, in `I`.
    pub f_g: Vec<Vector3<f64>>,
    /// Gravity-gradient torques, body axes.
    pub tau_g: Vec<Vector3<f64>>,
    /// `-(1/m)` times the body-frame rate of system momentum, per wheel set.
    pub ldot_term: Vec<Vector3<f64>>,
}

impl DisturbanceInput {
    pub fn to_vector(&self, params: &FormationParams) -> DVector<f64> {
        let lay = params.layout();
        let mut u = DVector::zeros(lay.dim_zeta());
        for j in 1..lay.n {
            u.fixed_rows_mut::<3>(lay.pos(j))
                .copy_from(&self.f_g[j - 1]);
        }
        for j in 0..lay.n {
            u.fixed_rows_mut::<3>(lay.att(j)).copy_from(&self.tau_g[j]);
        }
        for i in 0..lay.m {
            u.fixed_rows_mut::<3>(lay.xi(i))
                .copy_from(&self.ldot_term[i]);
        }
        u
    }

    /// Rate of system angular momentum caused by the environment, in `I`.
    pub fn inertial_ldot(&self, state: &FormationState, params: &FormationParams) -> Vector3<f64> {
        external_ldot(state, params, &self.f_g, &self.tau_g)
    }
}

fn external_ldot(
    state: &FormationState,
    params: &FormationParams,
    f_g: &[Vector3<f64>],
    tau_g: &[Vector3<f64>],
) -> Vector3<f64> {
    let r1 = params.implied_first(&state.r);
    let mut l = Vector3::zeros();
    for j in 1..params.n() {
        l += (state.r[j - 1] - r1).cross(&f_g[j - 1]);
    }
    for j in 0..params.n() {
        l += state.sigma[j].dcm_i_from_b() * tau_g[j];
    }
    l
}

/// Tidal force on satellites 2..n, in `I`.
pub fn tidal_forces(state: &FormationState, params: &FormationParams) -> Vec<Vector3<f64>> {
    if !params.disturbances.gravity {
        return vec![Vector3::zeros(); params.n() - 1];
    }
    let g = params.orbit.tidal_gradient(state.t);
    (1..params.n())
        .map(|j| params.satellites[j].mass * (g * state.r[j - 1]))
        .collect()
}

/// Gravity-gradient torque on every satellite, body axes.
pub fn gravity_torques(state: &FormationState, params: &FormationParams) -> Vec<Vector3<f64>> {
    if !params.disturbances.gravity {
        return vec![Vector3::zeros(); params.n()];
    }
    let centre = params.orbit.position(state.t);
    let pos = state.positions(params);
    params
        .satellites
        .iter()
        .enumerate()
        .map(|(j, s)| gravity_gradient_torque(&s.inertia, &(centre + pos[j]), &state.sigma[j]))
        .collect()
}

/// Modelled disturbance input at `state`.
///
/// The momentum rate includes only external contributions; internal
/// actuation leaves the system momentum unchanged.
pub fn disturbance_input(state: &FormationState, params: &FormationParams) -> DisturbanceInput {
    let f_g = tidal_forces(state, params);
    let tau_g = gravity_torques(state, params);
    let ldot_i = external_ldot(state, params, &f_g, &tau_g);
    let l = crate::kinematics::system_angular_momentum(state, params);
    let m = params.m() as f64;
    let ldot_term = params
        .rw_indices()
        .iter()
        .map(|&j| {
            let wi = state.sigma[j].dcm_i_from_b() * state.omega[j];
            -(state.sigma[j].dcm_b_from_i() * (ldot_i - wi.cross(&l))) / m
        })
        .collect();
    DisturbanceInput {
        f_g,
        tau_g,
        ldot_term,
    }
}

/// Accelerations of satellites 2..n under `f_applied` (in `I`) and the tidal term.
pub fn translational_accel(
    state: &FormationState,
    params: &FormationParams,
    f_applied: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    let tidal = tidal_forces(state, params);
    (1..params.n())
        .map(|j| (f_applied[j - 1] + tidal[j - 1]) / params.satellites[j].mass)
        .collect()
}

/// Body angular accelerations.
///
/// `tau_applied` is the total external and actuator torque on each bus, body
/// axes; `rw_torque` is the wheel momentum rate of each wheel set.
pub fn attitude_accel(
    state: &FormationState,
    params: &FormationParams,
    tau_applied: &[Vector3<f64>],
    rw_torque: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    params
        .satellites
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let w = state.omega[j];
            let h = state.h_of(params, j);
            let hdot = params
                .rw_slot(j)
                .map_or_else(Vector3::zeros, |i| rw_torque[i]);
            let rhs = tau_applied[j] - hdot - w.cross(&(s.inertia * w + h));
            s.inertia
                .lu()
                .solve(&rhs)
                .unwrap_or_else(|| Vector3::repeat(f64::NAN))
        })
        .collect()
}

/// Actuation held over one integration step.
#[derive(Debug, Clone, Copy)]
pub enum Actuation<'a> {
    /// Prescribed forces (in `I`, one per satellite; the first is ignored)
    /// and torques (body axes).
    Wrenches {
        forces: &'a [Vector3<f64>],
        torques: &'a [Vector3<f64>],
    },
    /// Carrier-averaged wrenches of a dipole set held in `I`.
    Averaged(&'a AcDipoleSet),
    /// Instantaneous wrenches of a dipole set held in `I`.
    Ac(&'a AcDipoleSet),
}

fn earth_torques(
    state: &FormationState,
    params: &FormationParams,
    dipoles: &[Dipole],
    pos: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>, MagneticsError> {
    let centre = params.orbit.position(state.t);
    let axis = params.disturbances.earth_dipole_axis;
    dipoles
        .iter()
        .zip(pos)
        .map(|(mu, p)| Ok(mu.cross(&earth_field(&(centre + p), &axis)?)))
        .collect()
}

fn derivative(
    state: &FormationState,
    params: &FormationParams,
    act: &Actuation,
    rw_torque: &[Vector3<f64>],
) -> Result<Vec<f64>, DynamicsError> {
    let n = params.n();
    let pos = state.positions(params);
    let (forces, mut torques_i, body_torques) = match act {
        Actuation::Wrenches { forces, torques } => {
            (forces.to_vec(), vec![Vector3::zeros(); n], torques.to_vec())
        }
        Actuation::Averaged(set) => {
            let w = averaged_wrench(set, &pos)?;
            let mut ti: Vec<_> = w.iter().map(|w| w.torque).collect();
            if params.disturbances.earth_field {
                for (t, e) in ti
                    .iter_mut()
                    .zip(earth_torques(state, params, &set.dc, &pos)?)
                {
                    *t += e;
                }
            }
            (
                w.iter().map(|w| w.force).collect(),
                ti,
                vec![Vector3::zeros(); n],
            )
        }
        Actuation::Ac(set) => {
            let mu = instantaneous_dipoles(set, state.t);
            let w = net_wrench(&pos, &mu)?;
            let mut ti: Vec<_> = w.iter().map(|w| w.torque).collect();
            if params.disturbances.earth_field {
                for (t, e) in ti.iter_mut().zip(earth_torques(state, params, &mu, &pos)?) {
                    *t += e;
                }
            }
            (
                w.iter().map(|w| w.force).collect(),
                ti,
                vec![Vector3::zeros(); n],
            )
        }
    };
    let gg = gravity_torques(state, params);
    let tau: Vec<Vector3<f64>> = (0..n)
        .map(|j| {
            let ti = std::mem::take(&mut torques_i[j]);
            state.sigma[j].dcm_b_from_i() * ti + body_torques[j] + gg[j]
        })
        .collect();
    let acc = translational_accel(state, params, &forces[1..]);
    let wdot = attitude_accel(state, params, &tau, rw_torque);
    let mut out = Vec::with_capacity(state.to_flat().len());
    for v in state.r_dot.iter().chain(&acc) {
        out.extend_from_slice(v.as_slice());
    }
    for (s, w) in state.sigma.iter().zip(&state.omega) {
        out.extend_from_slice((s.kinematics_matrix() * w).as_slice());
    }
    for v in wdot.iter().chain(rw_torque) {
        out.extend_from_slice(v.as_slice());
    }
    Ok(out)
}

/// One classical fourth-order Runge-Kutta step with actuation held constant.
///
/// MRPs are switched to the short set after the step.
pub fn step_rk4(
    state: &FormationState,
    params: &FormationParams,
    act: &Actuation,
    rw_torque: &[Vector3<f64>],
    dt: f64,
) -> Result<FormationState, DynamicsError> {
    state.check_shape(params)?;
    let y0 = state.to_flat();
    let stage = |t: f64, y: &[f64]| derivative(&state.with_flat(t, y), params, act, rw_torque);
    let axpy =
        |a: f64, k: &[f64]| -> Vec<f64> { y0.iter().zip(k).map(|(y, k)| y + a * k).collect() };
    let t = state.t;
    let k1 = stage(t, &y0)?;
    let k2 = stage(t + 0.5 * dt, &axpy(0.5 * dt, &k1))?;
    let k3 = stage(t + 0.5 * dt, &axpy(0.5 * dt, &k2))?;
    let k4 = stage(t + dt, &axpy(dt, &k3))?;
    let y: Vec<f64> = (0..y0.len())
        .map(|i| y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let mut next = state.with_flat(t + dt, &y);
    if !next.is_finite() {
        return Err(DynamicsError::NonFiniteState { t: t + dt });
    }
    for s in next.sigma.iter_mut() {
        *s = s.normalized();
    }
    Ok(next)
}

/// Reduced-model acceleration `M_bar^-1 (B_bar u + S^T u_d - C_bar v)` for an input vector `u`.
pub fn reduced_accel(
    state: &FormationState,
    params: &FormationParams,
    u: &DVector<f64>,
) -> Option<DVector<f64>> {
    let sys = assemble_system(state, params);
    let ud = disturbance_input(state, params).to_vector(params);
    let v = pack_v(state, params);
    let rhs = &sys.b_bar * u + sys.s.transpose() * ud - &sys.c_bar * v;
    sys.m_bar.cholesky().map(|c| c.solve(&rhs))
}
