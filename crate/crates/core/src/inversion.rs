//! Dipole inversion: find coil dipoles that realise commanded wrenches.
//!
//! Both problems have quadratic equality constraints in the dipole
//! amplitudes. They are solved with an augmented-Lagrangian outer loop and a
//! damped Newton inner loop on normalised variables, followed by a short
//! minimum-norm feasibility polish.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acmod::{averaged_wrench, AcDipoleSet};
use crate::error::InversionError;
use crate::magnetics::{net_wrench, pair_jacobian, Dipole, MU0_4PI};

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    /// Normalised residual at which the solve is accepted.
    pub tol: f64,
    /// Newton iteration budget per start.
    pub max_iter: usize,
    /// Random starts used without a warm start.
    pub starts: usize,
    pub seed: u64,
    /// Lower bound on the command scales used for normalisation.
    pub scale_floor: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            tol: 1e-8,
            max_iter: 200,
            starts: 4,
            seed: 0x5eed,
            scale_floor: 1e-9,
        }
    }
}

/// Commanded wrenches on all `n` satellites, everything in `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionProblem {
    pub positions: Vec<Vector3<f64>>,
    pub forces: Vec<Vector3<f64>>,
    pub torques: Vec<Vector3<f64>>,
    pub omega_f: f64,
    pub warm_start: Option<AcDipoleSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult {
    pub dipoles: AcDipoleSet,
    /// Largest normalised wrench error over all satellites.
    pub residual: f64,
    /// Sum of squared amplitudes (AC) or of squared torques (DC).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Relative conservation error of a command: net force and net moment about the origin.
pub fn conservation_error(p: &InversionProblem) -> f64 {
    let fsum: Vector3<f64> = p.forces.iter().sum();
    let fscale: f64 = p.forces.iter().map(|f| f.norm()).sum();
    let mut lsum = Vector3::zeros();
    let mut lscale = 0.0;
    for j in 0..p.positions.len() {
        let m = p.positions[j].cross(&p.forces[j]);
        lsum += m + p.torques[j];
        lscale += m.norm() + p.torques[j].norm();
    }
    let rel = |v: f64, s: f64| if s > 0.0 { v / s } else { v };
    rel(fsum.norm(), fscale).max(rel(lsum.norm(), lscale))
}

fn check_problem(p: &InversionProblem) -> Result<(), InversionError> {
    let n = p.positions.len();
    if n < 2 || p.forces.len() != n || p.torques.len() != n {
        return Err(InversionError::Shape(format!(
            "{} positions, {} forces, {} torques",
            n,
            p.forces.len(),
            p.torques.len()
        )));
    }
    if let Some(w) = &p.warm_start {
        if w.len() != n {
            return Err(InversionError::Shape(format!(
                "warm start has {} satellites",
                w.len()
            )));
        }
    }
    let rel = conservation_error(p);
    if !(rel <= 1e-9) {
        return Err(InversionError::InfeasibleCommand { relative: rel });
    }
    Ok(())
}

fn mean_separation(positions: &[Vector3<f64>]) -> f64 {
    let mut acc = 0.0;
    let mut cnt = 0.0;
    for j in 0..positions.len() {
        for k in (j + 1)..positions.len() {
            acc += (positions[j] - positions[k]).norm();
            cnt += 1.0;
        }
    }
    acc / cnt
}

#[derive(Debug, Clone, Copy)]
struct Scales {
    force: f64,
    torque: f64,
}

fn command_scales(p: &InversionProblem, floor: f64) -> Scales {
    let fmax = p.forces.iter().map(|f| f.amax()).fold(0.0, f64::max);
    let tmax = p.torques.iter().map(|t| t.amax()).fold(0.0, f64::max);
    let d = mean_separation(&p.positions);
    Scales {
        force: fmax.max(floor).max(1e-4 * tmax / d),
        torque: tmax.max(floor).max(1e-4 * fmax * d),
    }
}

/// Largest normalised wrench error of `dipoles` over every satellite.
pub fn residual(dipoles: &AcDipoleSet, problem: &InversionProblem) -> Result<f64, InversionError> {
    let sc = command_scales(problem, InversionOptions::default().scale_floor);
    residual_with(dipoles, problem, sc, true)
}

fn residual_with(
    dipoles: &AcDipoleSet,
    p: &InversionProblem,
    sc: Scales,
    torque: bool,
) -> Result<f64, InversionError> {
    let w = averaged_wrench(dipoles, &p.positions)?;
    let mut r = 0.0f64;
    for j in 0..p.positions.len() {
        r = r.max((w[j].force - p.forces[j]).amax() / sc.force);
        if torque {
            r = r.max((w[j].torque - p.torques[j]).amax() / sc.torque);
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Rows {
    Both,
    Force,
    Torque,
}

/// Jacobian of the net wrench on the satellites in `rows` with respect to all moments.
fn wrench_jacobian(
    positions: &[Vector3<f64>],
    moments: &[Dipole],
    sats: &[usize],
    rows: Rows,
) -> Result<DMatrix<f64>, InversionError> {
    let n = positions.len();
    let per = if rows == Rows::Both { 6 } else { 3 };
    let mut jac = DMatrix::zeros(per * sats.len(), 3 * n);
    for (ri, &j) in sats.iter().enumerate() {
        let base = per * ri;
        for k in 0..n {
            if k == j {
                continue;
            }
            let pj = pair_jacobian(&moments[k], &moments[j], &(positions[j] - positions[k]))?;
            let mut add = |off: usize, da: &nalgebra::Matrix3<f64>, db: &nalgebra::Matrix3<f64>| {
                let mut blk = jac.fixed_view_mut::<3, 3>(base + off, 3 * k);
                blk += da;
                let mut blk = jac.fixed_view_mut::<3, 3>(base + off, 3 * j);
                blk += db;
            };
            match rows {
                Rows::Both => {
                    add(0, &pj.force_a, &pj.force_b);
                    add(3, &pj.torque_a, &pj.torque_b);
                }
                Rows::Force => add(0, &pj.force_a, &pj.force_b),
                Rows::Torque => add(0, &pj.torque_a, &pj.torque_b),
            }
        }
    }
    Ok(jac)
}

/// Homogeneous quadratic map `q(x) = J(x) x / 2` with `J(x) = sum_k x_k T_k`.
struct QuadMap {
    tensors: Vec<DMatrix<f64>>,
    rows: usize,
}

impl QuadMap {
    fn jac(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.rows, x.len());
        for (k, t) in self.tensors.iter().enumerate() {
            let xk = x[k];
            if xk != 0.0 {
                j.zip_apply(t, |a, b| *a += xk * b);
            }
        }
        j
    }

    /// `sum_i w_i Hess(q_i)`.
    fn curvature(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let d = self.tensors.len();
        let mut k = DMatrix::zeros(d, d);
        for (r, t) in self.tensors.iter().enumerate() {
            k.row_mut(r).copy_from(&(t.tr_mul(w)).transpose());
        }
        // Exact in theory; symmetrise rounding.
        (&k + k.transpose()) * 0.5
    }
}

enum Objective {
    /// `|x|^2 / 2`
    MinNorm,
    /// `|q(x)|^2 / 2 + eps |x|^2 / 2`
    Quadratic { map: QuadMap, eps: f64 },
}

impl Objective {
    fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Objective::MinNorm => 0.5 * x.norm_squared(),
            Objective::Quadratic { map, eps } => {
                let q = map.jac(x) * x * 0.5;
                0.5 * q.norm_squared() + 0.5 * eps * x.norm_squared()
            }
        }
    }

    fn grad_hess(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        match self {
            Objective::MinNorm => (x.clone(), DMatrix::identity(x.len(), x.len())),
            Objective::Quadratic { map, eps } => {
                let j = map.jac(x);
                let q = &j * x * 0.5;
                let g = j.tr_mul(&q) + x * *eps;
                let h =
                    j.tr_mul(&j) + map.curvature(&q) + DMatrix::identity(x.len(), x.len()) * *eps;
                (g, h)
            }
        }
    }
}

struct Nlp {
    cons: QuadMap,
    target: DVector<f64>,
    obj: Objective,
}

struct Solved {
    x: DVector<f64>,
    iterations: usize,
    stationarity: f64,
}

impl Nlp {
    fn constraint(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let j = self.cons.jac(x);
        let c = &j * x * 0.5 - &self.target;
        (c, j)
    }

    fn merit(&self, x: &DVector<f64>, lam: &DVector<f64>, rho: f64) -> f64 {
        let (c, _) = self.constraint(x);
        self.obj.value(x) + lam.dot(&c) + 0.5 * rho * c.norm_squared()
    }

    fn ls_multipliers(g: &DVector<f64>, j: &DMatrix<f64>) -> DVector<f64> {
        let jjt = j * j.transpose();
        let reg = 1e-12 * jjt.diagonal().amax().max(1e-300);
        let a = jjt + DMatrix::identity(j.nrows(), j.nrows()) * reg;
        a.cholesky()
            .map(|c| -c.solve(&(j * g)))
            .unwrap_or_else(|| DVector::zeros(j.nrows()))
    }

    /// Gradient component outside the row space of the Jacobian, relative to the gradient.
    fn stationarity(&self, x: &DVector<f64>) -> f64 {
        let (g, _) = self.obj.grad_hess(x);
        let (_, j) = self.constraint(x);
        let svd = j.transpose().svd(true, false);
        let u = svd.u.unwrap();
        let cut = svd.singular_values.amax() * 1e-12;
        let mut proj = DVector::zeros(g.len());
        for (k, s) in svd.singular_values.iter().enumerate() {
            if *s > cut {
                let uk = u.column(k);
                proj += uk * uk.dot(&g);
            }
        }
        (&g - proj).norm() / g.norm().max(1e-300)
    }

    /// Newton iterations on the KKT system. The point is `None` unless they
    /// converge; the count includes failed attempts.
    fn kkt_newton(&self, x0: &DVector<f64>, budget: usize) -> (Option<DVector<f64>>, usize) {
        let dim = x0.len();
        let mut x = x0.clone();
        let (g0, _) = self.obj.grad_hess(&x);
        let (_, j0) = self.constraint(&x);
        let mut lam = Self::ls_multipliers(&g0, &j0);
        let mut last = f64::INFINITY;
        let mut best = (f64::INFINITY, x.clone());
        let mut used = 0;
        for it in 0..budget {
            let (g, h) = self.obj.grad_hess(&x);
            let (c, j) = self.constraint(&x);
            let grad_l = &g + j.tr_mul(&lam);
            let err = c.amax().max(grad_l.amax() / g.amax().max(1.0));
            if err < best.0 {
                best = (err, x.clone());
            }
            if err <= 1e-13 {
                return (Some(x), used);
            }
            if !(err < 2.0 * last) && it > 1 {
                break;
            }
            last = err;
            let rows = c.len();
            let hl = h + self.cons.curvature(&lam);
            let reg = KKT_REG * hl.diagonal().amax().max(1.0);
            let mut kkt = DMatrix::zeros(dim + rows, dim + rows);
            kkt.view_mut((0, 0), (dim, dim))
                .copy_from(&(hl + DMatrix::identity(dim, dim) * reg));
            kkt.view_mut((0, dim), (dim, rows))
                .copy_from(&j.transpose());
            kkt.view_mut((dim, 0), (rows, dim)).copy_from(&j);
            kkt.view_mut((dim, dim), (rows, rows)).fill_diagonal(-reg);
            let mut rhs = DVector::zeros(dim + rows);
            rhs.rows_mut(0, dim).copy_from(&(-grad_l));
            rhs.rows_mut(dim, rows).copy_from(&(-c));
            let Some(step) = kkt.lu().solve(&rhs) else {
                break;
            };
            if !step.iter().all(|v| v.is_finite()) {
                break;
            }
            x += step.rows(0, dim);
            lam += step.rows(dim, rows);
            used += 1;
        }
        ((best.0 <= 1e-10).then_some(best.1), used)
    }

    /// Minimum-norm Gauss-Newton: each step jumps to the least-norm point of
    /// the linearised constraint set. Fixed points are KKT points of the
    /// minimum-norm problem. Hands off to `kkt_newton` once close.
    fn min_norm_gauss_newton(&self, x0: DVector<f64>, budget: usize) -> (DVector<f64>, usize) {
        let mut x = x0;
        let mut iters = 0;
        // Newton is retried only after both measures halve.
        let mut gate = KKT_GATE;
        while iters < budget {
            let (c, j) = self.constraint(&x);
            let cn = c.norm();
            let jjt = &j * j.transpose();
            let reg = 1e-12 * jjt.diagonal().amax().max(1e-300);
            let Some(ch) = (jjt + DMatrix::identity(c.len(), c.len()) * reg).cholesky() else {
                break;
            };
            let d = j.tr_mul(&ch.solve(&(&j * &x - &c))) - &x;
            let dn = d.norm() / x.norm();
            if cn <= gate.0 && dn <= gate.1 {
                let (xn, k) = self.kkt_newton(&x, 12.min(budget - iters));
                iters += k;
                if let Some(xn) = xn {
                    return (xn, iters);
                }
                gate = (0.5 * cn, 0.5 * dn);
                if iters >= budget {
                    break;
                }
            }
            iters += 1;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = &x + &d * alpha;
                let ct = self.constraint(&trial).0.norm();
                if ct <= (1.0 - 1e-4 * alpha) * cn || (cn <= 1e-2 && ct <= 1e-2) {
                    x = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (x, iters)
    }

    fn solve(&self, x0: DVector<f64>, tol: f64, max_iter: usize, warm: bool) -> Solved {
        if matches!(self.obj, Objective::MinNorm) && !warm {
            let (x, iterations) = self.min_norm_gauss_newton(x0, max_iter);
            return Solved {
                stationarity: self.stationarity(&x),
                x,
                iterations,
            };
        }
        if warm {
            let (xn, iterations) = self.kkt_newton(&x0, 12);
            if let Some(x) = xn {
                return Solved {
                    stationarity: self.stationarity(&x),
                    x,
                    iterations,
                };
            }
        }
        let mut x = x0;
        let (g0, _) = self.obj.grad_hess(&x);
        let (mut c, j0) = self.constraint(&x);
        let mut lam = Self::ls_multipliers(&g0, &j0);
        let mut rho = 10.0;
        let mut iters = 0usize;
        let mut prev_c = c.amax();
        let mut inner_tol = 1e-3;
        'outer: for _ in 0..60 {
            loop {
                let (gf, hf) = self.obj.grad_hess(&x);
                let (cx, j) = self.constraint(&x);
                let w = &lam + &cx * rho;
                let g = &gf + j.tr_mul(&w);
                if g.amax() <= inner_tol * (1.0 + gf.amax()) {
                    break;
                }
                if iters >= max_iter {
                    break 'outer;
                }
                iters += 1;
                let h = hf + self.cons.curvature(&w) + j.tr_mul(&j) * rho;
                let Some(d) = damped_solve(&h, &g) else {
                    break 'outer;
                };
                let phi0 = self.merit(&x, &lam, rho);
                let slope = g.dot(&d);
                let mut alpha = 1.0;
                let mut accepted = false;
                for _ in 0..40 {
                    let trial = &x + &d * alpha;
                    if self.merit(&trial, &lam, rho) <= phi0 + 1e-4 * alpha * slope {
                        x = trial;
                        accepted = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            c = self.constraint(&x).0;
            let cn = c.amax();
            if cn <= 1e-3 * tol && inner_tol <= 1e-8 {
                break;
            }
            if cn <= 1e-2 {
                let (xn, k) = self.kkt_newton(&x, 12);
                iters += k;
                if let Some(xn) = xn {
                    x = xn;
                    break;
                }
            }
            lam += &c * rho;
            if cn > 0.25 * prev_c {
                rho = (rho * 10.0).min(1e10);
            }
            prev_c = cn;
            inner_tol = (inner_tol * 0.1).max(1e-9);
            if iters >= max_iter {
                break;
            }
        }
        // Minimum-norm Newton polish on the constraints alone.
        for _ in 0..8 {
            let (c, j) = self.constraint(&x);
            if c.amax() <= 1e-14 || iters >= max_iter + 8 {
                break;
            }
            let jjt = &j * j.transpose();
            let reg = 1e-14 * jjt.diagonal().amax().max(1e-300);
            let Some(ch) = (jjt + DMatrix::identity(c.len(), c.len()) * reg).cholesky() else {
                break;
            };
            let step = j.tr_mul(&ch.solve(&c));
            let trial = &x - step;
            if self.constraint(&trial).0.amax() >= c.amax() {
                break;
            }
            x = trial;
            iters += 1;
        }
        Solved {
            stationarity: self.stationarity(&x),
            x,
            iterations: iters,
        }
    }
}

/// Cholesky solve of `h d = -g`, adding diagonal damping until `h` is positive definite.
/// Constraint norm and relative step below which Newton is first tried.
const KKT_GATE: (f64, f64) = (0.1, 0.2);
const KKT_REG: f64 = 1e-8;

fn damped_solve(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().amax().max(1e-12);
    let mut mu = 0.0;
    for _ in 0..30 {
        let a = h + DMatrix::identity(h.nrows(), h.nrows()) * mu;
        if let Some(c) = a.cholesky() {
            let d = -c.solve(g);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
    }
    None
}

fn unit_tensors(
    positions: &[Vector3<f64>],
    sats: &[usize],
    rows: Rows,
) -> Result<Vec<DMatrix<f64>>, InversionError> {
    let n = positions.len();
    let mut out = Vec::with_capacity(3 * n);
    for k in 0..3 * n {
        let mut m = vec![Vector3::zeros(); n];
        m[k / 3][k % 3] = 1.0;
        out.push(wrench_jacobian(positions, &m, sats, rows)?);
    }
    Ok(out)
}

fn scale_tensors(tensors: &mut [DMatrix<f64>], row_scale: &DVector<f64>, factor: f64) {
    for t in tensors.iter_mut() {
        for (r, s) in row_scale.iter().enumerate() {
            let mut row = t.row_mut(r);
            row *= factor / s;
        }
    }
}

fn random_start(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))
}

struct Prepared {
    nlp: Nlp,
    mu_ref: f64,
    scales: Scales,
}

fn prepare_ac(p: &InversionProblem, opts: &InversionOptions) -> Result<Prepared, InversionError> {
    let n = p.positions.len();
    let sats: Vec<usize> = (1..n).collect();
    let scales = command_scales(p, opts.scale_floor);
    let d = mean_separation(&p.positions);
    let fcmd = p.forces.iter().map(|f| f.amax()).fold(0.0, f64::max);
    let tcmd = p.torques.iter().map(|t| t.amax()).fold(0.0, f64::max);
    let mu_ref = (2.0 * fcmd * d.powi(4) / (3.0 * MU0_4PI))
        .sqrt()
        .max((2.0 * tcmd * d.powi(3) / MU0_4PI).sqrt())
        .max(1e-30);
    // Solver rows use balanced scales so force and torque rows weigh alike.
    let solver = Scales {
        force: scales.force.max(scales.torque / d),
        torque: scales.torque.max(scales.force * d),
    };
    let base = unit_tensors(&p.positions, &sats, Rows::Both)?;
    let rows = 6 * (n - 1);
    let mut tensors = Vec::with_capacity(6 * n);
    for half in 0..2 {
        for t in &base {
            let mut m = DMatrix::zeros(rows, 6 * n);
            m.view_mut((0, 3 * n * half), (rows, 3 * n))
                .copy_from(&(t * 0.5));
            tensors.push(m);
        }
    }
    let mut row_scale = DVector::zeros(rows);
    let mut target = DVector::zeros(rows);
    for (ri, &j) in sats.iter().enumerate() {
        for a in 0..3 {
            row_scale[6 * ri + a] = solver.force;
            row_scale[6 * ri + 3 + a] = solver.torque;
            target[6 * ri + a] = p.forces[j][a] / solver.force;
            target[6 * ri + 3 + a] = p.torques[j][a] / solver.torque;
        }
    }
    scale_tensors(&mut tensors, &row_scale, mu_ref * mu_ref);
    Ok(Prepared {
        nlp: Nlp {
            cons: QuadMap { tensors, rows },
            target,
            obj: Objective::MinNorm,
        },
        mu_ref,
        scales,
    })
}

fn ac_from_x(x: &DVector<f64>, n: usize, mu_ref: f64, omega_f: f64) -> AcDipoleSet {
    let get = |o: usize| Vector3::new(x[o], x[o + 1], x[o + 2]) * mu_ref;
    AcDipoleSet {
        sin: (0..n).map(|j| get(3 * j)).collect(),
        cos: (0..n).map(|j| get(3 * n + 3 * j)).collect(),
        dc: vec![Vector3::zeros(); n],
        omega_f,
    }
}

fn x_from_ac(set: &AcDipoleSet, mu_ref: f64) -> DVector<f64> {
    let n = set.len();
    DVector::from_fn(6 * n, |i, _| {
        let (part, k) = (i / (3 * n), i % (3 * n));
        let v = if part == 0 {
            set.sin[k / 3]
        } else {
            set.cos[k / 3]
        };
        v[k % 3] / mu_ref
    })
}

fn ac_objective(set: &AcDipoleSet) -> f64 {
    set.sin
        .iter()
        .chain(&set.cos)
        .map(|m| m.norm_squared())
        .sum()
}

/// Minimum-power AC dipoles reproducing the commanded average wrenches.
pub fn invert_ac(
    problem: &InversionProblem,
    opts: &InversionOptions,
) -> Result<InversionResult, InversionError> {
    check_problem(problem)?;
    let n = problem.positions.len();
    if problem
        .forces
        .iter()
        .chain(&problem.torques)
        .all(|v| v.amax() == 0.0)
    {
        return Ok(InversionResult {
            dipoles: AcDipoleSet::zeros(n, problem.omega_f),
            residual: 0.0,
            objective: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let prep = prepare_ac(problem, opts)?;
    let finish = |x: &DVector<f64>,
                  iterations: usize,
                  stationarity: f64|
     -> Result<InversionResult, InversionError> {
        let dipoles = ac_from_x(x, n, prep.mu_ref, problem.omega_f);
        let residual = residual_with(&dipoles, problem, prep.scales, true)?;
        Ok(InversionResult {
            objective: ac_objective(&dipoles),
            converged: residual <= opts.tol && stationarity <= 1e-6,
            residual,
            iterations,
            dipoles,
        })
    };
    if let Some(warm) = &problem.warm_start {
        let warm = AcDipoleSet {
            dc: vec![Vector3::zeros(); n],
            ..warm.clone()
        };
        let x0 = x_from_ac(&warm, prep.mu_ref);
        let s = prep.nlp.solve(x0, opts.tol, opts.max_iter, true);
        let res = finish(&s.x, s.iterations, s.stationarity)?;
        let warm_res = residual_with(&warm, problem, prep.scales, true)?;
        let warm_obj = ac_objective(&warm);
        if warm_res <= opts.tol && (!res.converged || warm_obj < res.objective) {
            return Ok(InversionResult {
                dipoles: AcDipoleSet {
                    omega_f: problem.omega_f,
                    ..warm
                },
                residual: warm_res,
                objective: warm_obj,
                iterations: res.iterations,
                converged: true,
            });
        }
        return Ok(res);
    }
    multi_start(opts, 6 * n, |x0| {
        let s = prep.nlp.solve(x0, opts.tol, opts.max_iter, false);
        finish(&s.x, s.iterations, s.stationarity)
    })
}

/// Seeded random starts, each with the full `max_iter` budget; stops at the
/// first converged start. `iterations` counts all starts.
fn multi_start<F>(
    opts: &InversionOptions,
    dim: usize,
    mut run: F,
) -> Result<InversionResult, InversionError>
where
    F: FnMut(DVector<f64>) -> Result<InversionResult, InversionError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<InversionResult> = None;
    let mut total = 0;
    for _ in 0..opts.starts.max(1) {
        let r = run(random_start(&mut rng, dim))?;
        total += r.iterations;
        let done = r.converged;
        if best.as_ref().is_none_or(|b| r.residual < b.residual) {
            best = Some(r);
        }
        if done {
            break;
        }
    }
    let mut best = best.expect("at least one start");
    best.iterations = total;
    Ok(best)
}

/// Static dipoles meeting the commanded forces with the least total torque.
///
/// Torque commands are ignored; `objective` is the sum of squared torques.
pub fn invert_dc(
    problem: &InversionProblem,
    opts: &InversionOptions,
) -> Result<InversionResult, InversionError> {
    let mut p = problem.clone();
    // Only the forces are constrained; torques are an output.
    p.torques = vec![Vector3::zeros(); p.positions.len()];
    let fsum: Vector3<f64> = p.forces.iter().sum();
    let fscale: f64 = p.forces.iter().map(|f| f.norm()).sum();
    if p.positions.len() < 2 || p.forces.len() != p.positions.len() {
        return Err(InversionError::Shape(format!(
            "{} positions, {} forces",
            p.positions.len(),
            p.forces.len()
        )));
    }
    let rel = if fscale > 0.0 {
        fsum.norm() / fscale
    } else {
        0.0
    };
    if rel > 1e-9 {
        return Err(InversionError::InfeasibleCommand { relative: rel });
    }
    let n = p.positions.len();
    let omega_f = p.omega_f;
    let to_set = |dc: Vec<Vector3<f64>>| AcDipoleSet {
        sin: vec![Vector3::zeros(); n],
        cos: vec![Vector3::zeros(); n],
        dc,
        omega_f,
    };
    let fcmd = p.forces.iter().map(|f| f.amax()).fold(0.0, f64::max);
    if fcmd == 0.0 {
        return Ok(InversionResult {
            dipoles: to_set(vec![Vector3::zeros(); n]),
            residual: 0.0,
            objective: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let d = mean_separation(&p.positions);
    let fscale = fcmd.max(opts.scale_floor);
    let mu_ref = (fcmd * d.powi(4) / (3.0 * MU0_4PI)).sqrt();
    let sats: Vec<usize> = (1..n).collect();
    let rows = 3 * (n - 1);
    let mut ctens = unit_tensors(&p.positions, &sats, Rows::Force)?;
    let row_scale = DVector::from_element(rows, fscale);
    scale_tensors(&mut ctens, &row_scale, mu_ref * mu_ref);
    let all: Vec<usize> = (0..n).collect();
    let tunit = MU0_4PI * mu_ref * mu_ref / d.powi(3);
    let mut ttens = unit_tensors(&p.positions, &all, Rows::Torque)?;
    scale_tensors(
        &mut ttens,
        &DVector::from_element(3 * n, tunit),
        mu_ref * mu_ref,
    );
    let target = DVector::from_fn(rows, |i, _| p.forces[1 + i / 3][i % 3] / fscale);
    let nlp = Nlp {
        cons: QuadMap {
            tensors: ctens,
            rows,
        },
        target,
        obj: Objective::Quadratic {
            map: QuadMap {
                tensors: ttens,
                rows: 3 * n,
            },
            eps: 1e-6,
        },
    };
    let sc = Scales {
        force: fscale,
        torque: 1.0,
    };
    let finish = |x: &DVector<f64>,
                  iterations: usize,
                  stationarity: f64|
     -> Result<InversionResult, InversionError> {
        let dc: Vec<_> = (0..n)
            .map(|j| Vector3::new(x[3 * j], x[3 * j + 1], x[3 * j + 2]) * mu_ref)
            .collect();
        let dipoles = to_set(dc);
        let residual = residual_with(&dipoles, &p, sc, false)?;
        let w = net_wrench(&p.positions, &dipoles.dc)?;
        Ok(InversionResult {
            objective: w.iter().map(|w| w.torque.norm_squared()).sum(),
            converged: residual <= opts.tol && stationarity <= 1e-6,
            residual,
            iterations,
            dipoles,
        })
    };
    if let Some(warm) = &p.warm_start {
        let x0 = DVector::from_fn(3 * n, |i, _| warm.dc[i / 3][i % 3] / mu_ref);
        let s = nlp.solve(x0, opts.tol, opts.max_iter, true);
        let r = finish(&s.x, s.iterations, s.stationarity)?;
        if r.converged {
            return Ok(r);
        }
    }
    multi_start(opts, 3 * n, |x0| {
        let s = nlp.solve(x0, opts.tol, opts.max_iter, false);
        finish(&s.x, s.iterations, s.stationarity)
    })
}

/// Fresh seeded start when the last solve failed or exceeded a coil limit.
///
/// Returns `None` when the result can be kept.
pub fn reinitialize_policy(
    result: &InversionResult,
    limits: &[f64],
    seed: u64,
) -> Option<AcDipoleSet> {
    let n = result.dipoles.len();
    let over = (0..n).any(|j| {
        let (s, c, _) = result.dipoles.norms(j);
        s > limits[j] || c > limits[j]
    });
    if result.converged && !over {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lim = limits.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut v = || {
        Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ) * 0.1
            * lim
    };
    Some(AcDipoleSet {
        sin: (0..n).map(|_| v()).collect(),
        cos: (0..n).map(|_| v()).collect(),
        dc: vec![Vector3::zeros(); n],
        omega_f: result.dipoles.omega_f,
    })
}
