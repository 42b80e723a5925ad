//! Feedback laws: the momentum-aware reduced-model controller, a decoupled
//! baseline, wheel unloading and the Lyapunov function.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::dynamics::{assemble_system, disturbance_input, input_matrix_inverse, tidal_forces};
use crate::error::ControlError;
use crate::frames::{mrp_error, Mrp};
use crate::kinematics::{assemble_r, pack_v, FormationParams, FormationState, Layout};
use crate::magnetics::Dipole;

/// Diagonal gains of the reduced-model controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub k1_position: f64,
    pub k1_attitude: f64,
    pub k1_xi: f64,
    pub k2_position: f64,
    pub k2_attitude: f64,
    pub k2_xi: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Gains {
            k1_position: 150.0,
            k1_attitude: 620.0,
            k1_xi: 0.0,
            k2_position: 130.0,
            k2_attitude: 530.0,
            k2_xi: 0.01,
        }
    }
}

impl Gains {
    fn diag(lay: &Layout, p: f64, a: f64, x: f64) -> DVector<f64> {
        let np = 3 * (lay.n - 1);
        let na = 3 * lay.n;
        DVector::from_fn(lay.dim_v(), |i, _| {
            if i < np {
                p
            } else if i < np + na {
                a
            } else {
                x
            }
        })
    }

    pub fn k1(&self, lay: &Layout) -> DVector<f64> {
        Self::diag(lay, self.k1_position, self.k1_attitude, self.k1_xi)
    }

    pub fn k2(&self, lay: &Layout) -> DVector<f64> {
        Self::diag(lay, self.k2_position, self.k2_attitude, self.k2_xi)
    }
}

/// Gains of the decoupled baseline controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConventionalGains {
    pub lambda_p1: f64,
    pub lambda_p2: f64,
    pub k_sigma: f64,
    pub k_omega: f64,
}

impl Default for ConventionalGains {
    fn default() -> Self {
        ConventionalGains {
            lambda_p1: 0.0125,
            lambda_p2: 0.0125,
            k_sigma: 10.0,
            k_omega: 15.0,
        }
    }
}

/// Static formation target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    /// Target positions of all satellites in `I`; the first is implied by the others.
    pub positions: Vec<Vector3<f64>>,
    pub attitudes: Vec<Mrp>,
}

/// Commanded input: EM forces on satellites 2..n in `I`, EM torques in body
/// axes and wheel momentum rates in body axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlCommand {
    pub force: Vec<Vector3<f64>>,
    pub torque: Vec<Vector3<f64>>,
    pub h_dot: Vec<Vector3<f64>>,
}

impl ControlCommand {
    pub fn to_vector(&self, lay: &Layout) -> DVector<f64> {
        let mut u = DVector::zeros(lay.dim_zeta());
        for j in 1..lay.n {
            u.fixed_rows_mut::<3>(lay.pos(j))
                .copy_from(&self.force[j - 1]);
        }
        for j in 0..lay.n {
            u.fixed_rows_mut::<3>(lay.att(j)).copy_from(&self.torque[j]);
        }
        for i in 0..lay.m {
            u.fixed_rows_mut::<3>(lay.xi(i)).copy_from(&self.h_dot[i]);
        }
        u
    }

    pub fn from_vector(lay: &Layout, u: &DVector<f64>) -> Self {
        let get = |o: usize| u.fixed_rows::<3>(o).into_owned();
        ControlCommand {
            force: (1..lay.n).map(|j| get(lay.pos(j))).collect(),
            torque: (0..lay.n).map(|j| get(lay.att(j))).collect(),
            h_dot: (0..lay.m).map(|i| get(lay.xi(i))).collect(),
        }
    }

    /// Forces on all satellites (the first balances the rest) and torques in `I`.
    pub fn inertial_wrenches(
        &self,
        state: &FormationState,
    ) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
        let mut forces = Vec::with_capacity(self.torque.len());
        forces.push(-self.force.iter().sum::<Vector3<f64>>());
        forces.extend_from_slice(&self.force);
        let torques = self
            .torque
            .iter()
            .zip(&state.sigma)
            .map(|(t, s)| s.dcm_i_from_b() * t)
            .collect();
        (forces, torques)
    }
}

/// Output of the reduced-model controller.
#[derive(Debug, Clone)]
pub struct ProposedOutput {
    pub command: ControlCommand,
    /// `|R u| / max(|u|, 1)`: momentum change the command would cause.
    pub momentum_residual: f64,
}

/// Target wheel momenta sharing `l_d` equally, body axes.
pub fn target_rw_momentum(
    l_d: &Vector3<f64>,
    state: &FormationState,
    params: &FormationParams,
) -> Vec<Vector3<f64>> {
    let m = params.m() as f64;
    params
        .rw_indices()
        .iter()
        .map(|&j| state.sigma[j].dcm_b_from_i() * l_d / m)
        .collect()
}

/// Position and attitude error `[r - r_d, delta_sigma, 0]`.
pub fn delta_q(
    state: &FormationState,
    params: &FormationParams,
    targets: &TargetSpec,
) -> Result<DVector<f64>, ControlError> {
    let lay = params.layout();
    let mut dq = DVector::zeros(lay.dim_v());
    for j in 1..lay.n {
        dq.fixed_rows_mut::<3>(lay.pos(j))
            .copy_from(&(state.r[j - 1] - targets.positions[j]));
    }
    for j in 0..lay.n {
        let e = mrp_error(&state.sigma[j], &targets.attitudes[j])?;
        dq.fixed_rows_mut::<3>(lay.att(j)).copy_from(&e.0);
    }
    Ok(dq)
}

/// Lyapunov function of the closed loop for static targets.
pub fn lyapunov(
    state: &FormationState,
    params: &FormationParams,
    targets: &TargetSpec,
    gains: &Gains,
) -> Result<f64, ControlError> {
    let lay = params.layout();
    let sys = assemble_system(state, params);
    let v = pack_v(state, params);
    let dq = delta_q(state, params, targets)?;
    let np = 3 * (lay.n - 1);
    let kinetic = 0.5 * v.dot(&(&sys.m_bar * &v));
    let position = 0.5 * gains.k1_position * dq.rows(0, np).norm_squared();
    let attitude: f64 = (0..lay.n)
        .map(|j| (1.0 + dq.fixed_rows::<3>(lay.att(j)).norm_squared()).ln())
        .sum::<f64>()
        * 2.0
        * gains.k1_attitude;
    Ok(kinetic + position + attitude)
}

/// `B^-1 M S x` for an arbitrary reduced input `x`.
pub fn theorem1_command(
    state: &FormationState,
    params: &FormationParams,
    x: &DVector<f64>,
) -> DVector<f64> {
    let sys = assemble_system(state, params);
    input_matrix_inverse(params) * &sys.m * &sys.s * x
}

fn momentum_residual(state: &FormationState, params: &FormationParams, u: &DVector<f64>) -> f64 {
    (assemble_r(state, params) * u).norm() / u.norm().max(1.0)
}

/// Reduced-model controller for static targets.
///
/// Solves `S^T B u = -K1 dq - K2 dv - S^T u_d` with `u = B^-1 M S x`, which
/// lies in the momentum-preserving input set.
pub fn proposed_control(
    state: &FormationState,
    params: &FormationParams,
    targets: &TargetSpec,
    gains: &Gains,
) -> Result<ProposedOutput, ControlError> {
    let lay = params.layout();
    let sys = assemble_system(state, params);
    let dq = delta_q(state, params, targets)?;
    let dv = pack_v(state, params);
    let ud = disturbance_input(state, params).to_vector(params);
    let rhs = -(gains.k1(&lay).component_mul(&dq))
        - gains.k2(&lay).component_mul(&dv)
        - sys.s.transpose() * ud;
    let chol = sys
        .m_bar
        .clone()
        .cholesky()
        .ok_or(ControlError::SingularMassMatrix)?;
    let x = chol.solve(&rhs);
    let u: DVector<f64> = input_matrix_inverse(params) * (&sys.m * (&sys.s * x));
    Ok(ProposedOutput {
        momentum_residual: momentum_residual(state, params, &u),
        command: ControlCommand::from_vector(&lay, &u),
    })
}

/// Baseline: PD translation with tidal cancellation, attitude held by the wheels.
///
/// `tau_em` is the EM torque expected on each bus (body axes); the wheels
/// absorb it. Commanded EM torques are zero. Every satellite must carry wheels.
pub fn conventional_control(
    state: &FormationState,
    params: &FormationParams,
    targets: &TargetSpec,
    tau_em: &[Vector3<f64>],
    gains: &ConventionalGains,
) -> Result<ControlCommand, ControlError> {
    if params.m() != params.n() {
        return Err(ControlError::Unsupported(
            "reaction wheels on every satellite",
        ));
    }
    let n = params.n();
    let tidal = tidal_forces(state, params);
    let (l1, l2) = (gains.lambda_p1, gains.lambda_p2);
    let force = (1..n)
        .map(|j| {
            let e = targets.positions[j] - state.r[j - 1];
            let e_dot = -state.r_dot[j - 1];
            let a = l1 * e_dot + l2 * (e_dot + l1 * e);
            params.satellites[j].mass * a - tidal[j - 1]
        })
        .collect();
    let mut h_dot = Vec::with_capacity(n);
    for &j in params.rw_indices() {
        let s = &params.satellites[j];
        let w = state.omega[j];
        let h = state.h_of(params, j);
        let ds = mrp_error(&state.sigma[j], &targets.attitudes[j])?;
        h_dot.push(
            tau_em[j] - w.cross(&(s.inertia * w + h)) + gains.k_sigma * ds.0 + gains.k_omega * w,
        );
    }
    Ok(ControlCommand {
        force,
        torque: vec![Vector3::zeros(); n],
        h_dot,
    })
}

/// DC dipole whose torque in field `b` opposes the part of `h` normal to `b`.
pub fn unloading_dc_dipole(h: &Vector3<f64>, b: &Vector3<f64>, gain: f64) -> Dipole {
    let b2 = b.norm_squared();
    if b2 == 0.0 {
        return Vector3::zeros();
    }
    gain * h.cross(b) / b2
}

/// Dense `B^-1 M S`, the map from reduced inputs to admissible commands.
pub fn admissible_basis(state: &FormationState, params: &FormationParams) -> DMatrix<f64> {
    let sys = assemble_system(state, params);
    input_matrix_inverse(params) * &sys.m * &sys.s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::assemble_a;
    use crate::kinematics::tests::{formation, random_state};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn targets_for(state: &FormationState, params: &FormationParams) -> TargetSpec {
        TargetSpec {
            positions: state.positions(params),
            attitudes: state.sigma.clone(),
        }
    }

    #[test]
    fn unloading_opposes_perpendicular_momentum() {
        let h = Vector3::new(1.0, 2.0, 3.0);
        let b = Vector3::new(0.0, 0.0, 2e-5);
        let mu = unloading_dc_dipole(&h, &b, 0.02);
        let torque = mu.cross(&b);
        assert_relative_eq!(torque, Vector3::new(-0.02, -0.04, 0.0), epsilon = 1e-15);
        assert_eq!(
            unloading_dc_dipole(&h, &Vector3::zeros(), 0.02),
            Vector3::zeros()
        );
    }

    #[test]
    fn conventional_needs_wheels_everywhere() {
        let p = formation(3, &[0, 2]);
        let st = random_state(&p, 1);
        let t = targets_for(&st, &p);
        let err = conventional_control(
            &st,
            &p,
            &t,
            &[Vector3::zeros(); 3],
            &ConventionalGains::default(),
        );
        assert!(matches!(err, Err(ControlError::Unsupported(_))));
    }

    #[test]
    fn conventional_cancels_em_torque() {
        let mut p = formation(2, &[0, 1]);
        p.disturbances.gravity = false;
        let mut st = random_state(&p, 3);
        st.omega = vec![Vector3::zeros(); 2];
        st.r_dot = vec![Vector3::zeros(); 1];
        st.h = vec![Vector3::zeros(); 2];
        st.sigma = vec![Mrp::identity(); 2];
        let t = targets_for(&st, &p);
        let tau = [Vector3::new(1e-3, 0.0, 0.0), Vector3::new(0.0, -2e-3, 0.0)];
        let cmd = conventional_control(&st, &p, &t, &tau, &ConventionalGains::default()).unwrap();
        assert_eq!(cmd.h_dot, tau.to_vec());
        assert_eq!(cmd.force, vec![Vector3::zeros()]);
    }

    #[test]
    fn lyapunov_zero_at_rest_on_target() {
        let p = formation(3, &[0, 1, 2]);
        let mut st = random_state(&p, 4);
        st.r_dot.iter_mut().for_each(|v| *v = Vector3::zeros());
        st.omega.iter_mut().for_each(|v| *v = Vector3::zeros());
        st.h.iter_mut().for_each(|v| *v = Vector3::zeros());
        let t = targets_for(&st, &p);
        assert!(lyapunov(&st, &p, &t, &Gains::default()).unwrap().abs() < 1e-20);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn admissible_commands_preserve_momentum(seed in 0u64..10_000, n in 2usize..6) {
            let rw: Vec<usize> = (0..n).filter(|j| j % 2 == 1 || *j == 0).collect();
            let p = formation(n, &rw);
            let st = random_state(&p, seed);
            let lay = p.layout();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 11);
            let x = DVector::from_fn(lay.dim_v(), |_, _| rng.gen_range(-1.0..1.0));
            let u = theorem1_command(&st, &p, &x);
            let ru = assemble_r(&st, &p) * &u;
            prop_assert!(ru.norm() <= 1e-10 * u.norm().max(1.0));
            // Equivalent statement: A S = 0.
            let a = assemble_a(&st, &p);
            let s = assemble_system(&st, &p).s;
            prop_assert!((a * s).abs().max() < 1e-9);
        }

        #[test]
        fn proposed_command_is_admissible(seed in 0u64..10_000) {
            let p = formation(4, &[0, 1, 2, 3]);
            let st = random_state(&p, seed);
            let mut t = targets_for(&st, &p);
            t.positions[2] += Vector3::new(1.0, -0.5, 0.2);
            let out = proposed_control(&st, &p, &t, &Gains::default()).unwrap();
            prop_assert!(out.momentum_residual < 1e-9);
        }

        #[test]
        fn proposed_command_produces_requested_reduced_input(seed in 0u64..10_000) {
            let p = formation(3, &[1, 2]);
            let st = random_state(&p, seed);
            let mut t = targets_for(&st, &p);
            t.attitudes[0] = Mrp::new(0.1, 0.0, -0.1);
            let gains = Gains::default();
            let out = proposed_control(&st, &p, &t, &gains).unwrap();
            let lay = p.layout();
            let sys = assemble_system(&st, &p);
            let u = out.command.to_vector(&lay);
            let ud = disturbance_input(&st, &p).to_vector(&p);
            let dq = delta_q(&st, &p, &t).unwrap();
            let v = pack_v(&st, &p);
            let lhs = &sys.b_bar * u;
            let rhs = -gains.k1(&lay).component_mul(&dq) - gains.k2(&lay).component_mul(&v) - sys.s.transpose() * ud;
            prop_assert!((&lhs - &rhs).abs().max() <= 1e-8 * rhs.abs().max().max(1.0));
        }
    }
}
