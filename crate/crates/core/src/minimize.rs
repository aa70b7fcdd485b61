//! Constrained minimization in the transformed variable `U = Psi(u)`.
//!
//! Every iterate is kept exactly feasible: a trial point is mapped back to
//! `u = Phi(U)`, the mean is removed and `u` is rescaled to unit `L^p` norm
//! before returning to `U`. The search direction is the preconditioned
//! gradient projected onto the tangent space of both constraints in the
//! `(A + mu W)^{-1}` inner product; the projection coefficients are the
//! Lagrange multipliers of the constraints.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{
    eval_objective, euler_residual, g_term_unchecked, lower_order_energy, lp_norm,
    mean_constraint, multipliers_from_identities, phi, phi_prime, psi, rms_on_rings,
    Multipliers, ProblemParams,
};
use crate::grid::{Field, PolarGrid};
use crate::precond::Precond;
use crate::rearrange::{first_moment, symmetry_report, two_point_rearrange, HalfPlane, SymmetryReport};
use crate::spectral::{eigenfield, NeumannMode, Parity};

/// Regularization of `|u|^(p-2) u` in the norm-constraint gradient.
const DELTA: f64 = 1e-8;
const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 8.0;
/// Acceptance of a failed line search: gradient within this factor of the
/// tolerance and relative objective decrease over the last steps below the drop.
const STALL_FACTOR: f64 = 100.0;
const STALL_WINDOW: usize = 10;
const STALL_DROP: f64 = 1e-10;
/// Rings excluded at each end when reporting the Euler residual.
const RESIDUAL_SKIP: usize = 2;

#[derive(Clone, Debug)]
pub enum Init {
    RandomSmooth,
    Eigenmode,
    Provided(Field),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Subspace {
    Full,
    Antisymmetric,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub constraint_tol: f64,
    pub n_starts: usize,
    pub seed: u64,
    pub init: Init,
    pub subspace: Subspace,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 4000,
            grad_tol: 1e-6,
            constraint_tol: 1e-8,
            n_starts: 1,
            seed: 0,
            init: Init::RandomSmooth,
            subspace: Subspace::Full,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.constraint_tol > 0.0) {
            return Err(Error::InvalidParams("tolerances must be positive".into()));
        }
        if self.n_starts == 0 {
            return Err(Error::InvalidParams("n_starts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// JSON description for manifests; a provided initial field is named, not dumped.
    pub fn describe(&self) -> serde_json::Value {
        let init = match self.init {
            Init::RandomSmooth => "random_smooth",
            Init::Eigenmode => "eigenmode",
            Init::Provided(_) => "provided",
        };
        serde_json::json!({
            "max_iters": self.max_iters,
            "grad_tol": self.grad_tol,
            "constraint_tol": self.constraint_tol,
            "n_starts": self.n_starts,
            "seed": self.seed,
            "init": init,
            "subspace": self.subspace,
        })
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    /// Gauge-fixed minimizer.
    pub u: Field,
    pub lambda: f64,
    /// Multipliers from the integral identities.
    pub mult: Multipliers,
    /// Multipliers read off the optimizer's tangent projection.
    pub dual: Multipliers,
    pub iterations: usize,
    pub converged: bool,
    /// Converged by objective stagnation at the nonsmooth gradient floor
    /// rather than by the gradient tolerance.
    pub stalled: bool,
    /// Relative preconditioned norm of the projected gradient at exit.
    pub grad_norm: f64,
    pub residual_rms: f64,
    pub symmetry: SymmetryReport,
    pub starts_agreement: f64,
    /// Objective of every start, in start order.
    pub start_lambdas: Vec<f64>,
    /// Objective after every accepted step of the returned start.
    pub history: Vec<f64>,
    /// Index in `history` where the post-gauge polish begins; the gauge
    /// rotation itself may raise the objective by interpolation error.
    pub polish_start: usize,
}

impl MinimizeResult {
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                grad_norm: self.grad_norm,
            })
        }
    }

    /// Summary without the field values.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lambda": self.lambda,
            "mult": self.mult,
            "dual": self.dual,
            "iterations": self.iterations,
            "converged": self.converged,
            "stalled": self.stalled,
            "grad_norm": self.grad_norm,
            "residual_rms": self.residual_rms,
            "symmetry": self.symmetry,
            "starts_agreement": self.starts_agreement,
            "start_lambdas": self.start_lambdas,
        })
    }
}

/// Discrete objective as a function of the transformed nodal values `U`.
pub fn objective_in_u(params: &ProblemParams, grid: &PolarGrid, big_u: &[f64]) -> f64 {
    let mut e = grid.dirichlet_energy(big_u);
    if !params.f_spec.is_zero() {
        let u: Vec<f64> = big_u.iter().map(|&x| phi(x, params.theta)).collect();
        e += lower_order_energy(params, grid, &u);
    }
    e
}

/// Gradient of [`objective_in_u`].
pub fn gradient_in_u(params: &ProblemParams, grid: &PolarGrid, big_u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; big_u.len()];
    grid.apply_stiffness(big_u, &mut out);
    let n_a = grid.n_a;
    let zero = params.f_spec.is_zero();
    for (k, o) in out.iter_mut().enumerate() {
        *o *= 2.0;
        if !zero {
            let t = big_u[k];
            let u = phi(t, params.theta);
            let r = grid.r_nodes[k / n_a];
            *o -= 2.0 * grid.w[k] * g_term_unchecked(r, u, params) * phi_prime(t, params.theta);
        }
    }
    out
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)` system.
fn solve_small(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty");
        a.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..=m {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][m] - s) / a[row][row];
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

struct Stationarity {
    grad_norm: f64,
    nu: [f64; 2],
    /// Preconditioned projected gradient.
    dir: Vec<f64>,
    slope: f64,
}

struct RunOutcome {
    big_u: Vec<f64>,
    iterations: usize,
    converged: bool,
    stalled: bool,
    history: Vec<f64>,
}

struct Solver<'a> {
    params: &'a ProblemParams,
    grid: &'a Arc<PolarGrid>,
    pre: Precond,
    subspace: Subspace,
    area: f64,
}

impl<'a> Solver<'a> {
    fn new(params: &'a ProblemParams, grid: &'a Arc<PolarGrid>, subspace: Subspace) -> Self {
        let mu = 1.0 / grid.domain.r_outer.powi(2);
        Self {
            params,
            grid,
            pre: Precond::new(grid, mu),
            subspace,
            area: grid.area(),
        }
    }

    fn objective(&self, big_u: &[f64]) -> f64 {
        objective_in_u(self.params, self.grid, big_u)
    }

    /// `(v - sigma v) / 2` for the mirror across the x2-axis.
    fn project_odd(&self, v: &mut [f64]) {
        let n = self.grid.n_a;
        let half = n / 2;
        let mut tmp = vec![0.0; n];
        for ring in v.chunks_exact_mut(n) {
            for j in 0..n {
                tmp[j] = 0.5 * (ring[j] - ring[(half + n - j) % n]);
            }
            ring.copy_from_slice(&tmp);
        }
    }

    /// Maps `U` onto the constraint set, or `None` when that is impossible.
    fn retract(&self, big_u: &[f64]) -> Option<Vec<f64>> {
        let th = self.params.theta;
        let p = self.params.p;
        let mut u: Vec<f64> = big_u.iter().map(|&x| phi(x, th)).collect();
        let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        match self.subspace {
            Subspace::Full => {
                let mean = self.grid.integrate_values(&u) / self.area;
                u.iter_mut().for_each(|x| *x -= mean);
            }
            Subspace::Antisymmetric => self.project_odd(&mut u),
        }
        let norm = self
            .grid
            .w
            .iter()
            .zip(&u)
            .map(|(w, x)| w * x.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p);
        let peak = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(norm > 0.0 && norm.is_finite()) || peak <= 1e-12 * scale {
            return None;
        }
        let out: Vec<f64> = u.iter().map(|&x| psi(x / norm, th)).collect();
        out.iter().all(|x| x.is_finite()).then_some(out)
    }

    fn stationarity(&self, big_u: &[f64]) -> Stationarity {
        let th = self.params.theta;
        let p = self.params.p;
        let n = big_u.len();
        let mut g = gradient_in_u(self.params, self.grid, big_u);
        let mut b1 = vec![0.0; n];
        let mut b2 = vec![0.0; n];
        for k in 0..n {
            let dphi = phi_prime(big_u[k], th);
            let u = phi(big_u[k], th);
            let w = self.grid.w[k];
            b1[k] = w * dphi;
            b2[k] = w * p * u * (u * u + DELTA * DELTA).powf(0.5 * (p - 2.0)) * dphi;
        }
        let full = self.subspace == Subspace::Full;
        if !full {
            self.project_odd(&mut g);
            self.project_odd(&mut b2);
        }
        let mut pg = vec![0.0; n];
        self.pre.solve(&g, &mut pg);
        // normals b together with P^{-1} b
        let mut normals: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(3);
        if full {
            let mut pb1 = vec![0.0; n];
            self.pre.solve(&b1, &mut pb1);
            normals.push((b1, pb1));
        }
        let mut pb2 = vec![0.0; n];
        self.pre.solve(&b2, &mut pb2);
        normals.push((b2, pb2));
        let m = normals.len();
        let mut gram = vec![vec![0.0; m + 1]; m];
        for i in 0..m {
            for j in 0..m {
                gram[i][j] = dot(&normals[i].0, &normals[j].1);
            }
            gram[i][m] = -dot(&normals[i].0, &pg);
        }
        let coef = solve_small(gram);
        let mut r = g.clone();
        let mut pr = pg.clone();
        for (c, (b, pb)) in coef.iter().zip(&normals) {
            axpy(&mut r, *c, b);
            axpy(&mut pr, *c, pb);
        }
        let nu = if full { [coef[0], coef[1]] } else { [0.0, coef[0]] };
        let rpr = dot(&r, &pr).max(0.0);
        let gpg = dot(&g, &pg);
        let grad_norm = if gpg > 0.0 { (rpr / gpg).sqrt() } else { 0.0 };
        pr.iter_mut().for_each(|x| *x = -*x);
        Stationarity {
            grad_norm,
            nu,
            dir: pr,
            slope: -rpr,
        }
    }

    fn duals(&self, st: &Stationarity) -> Multipliers {
        Multipliers {
            c: 0.5 * st.nu[0],
            d: 0.5 * self.params.p * st.nu[1],
        }
    }

    fn run(&self, start: Vec<f64>, max_iters: usize, grad_tol: f64) -> RunOutcome {
        let mut big_u = start;
        let mut j = self.objective(&big_u);
        let mut history = vec![j];
        let mut step = 1.0;
        let mut converged = false;
        let mut stalled = false;
        let mut iterations = 0;
        let mut trial = vec![0.0; big_u.len()];
        while iterations < max_iters {
            let st = self.stationarity(&big_u);
            if st.grad_norm <= grad_tol {
                converged = true;
                break;
            }
            let mut t = step;
            let mut accepted = None;
            while t > 1e-14 {
                trial.copy_from_slice(&big_u);
                axpy(&mut trial, t, &st.dir);
                if let Some(cand) = self.retract(&trial) {
                    let jt = self.objective(&cand);
                    if jt <= j + ARMIJO * t * st.slope {
                        accepted = Some((cand, jt));
                        break;
                    }
                    // minimizer of the quadratic through j, slope and jt
                    let denom = 2.0 * (jt - j - st.slope * t);
                    let tq = if denom > 0.0 { -st.slope * t * t / denom } else { 0.5 * t };
                    t = tq.clamp(0.1 * t, 0.5 * t);
                } else {
                    t *= 0.5;
                }
            }
            iterations += 1;
            match accepted {
                Some((cand, jt)) => {
                    big_u = cand;
                    j = jt;
                    history.push(j);
                    step = (2.0 * t).min(MAX_STEP);
                }
                None => {
                    // Non-Lipschitz terms (p < 2, alpha < 2) cap the attainable
                    // gradient norm; a stagnant objective near that floor counts.
                    let back = history.len().saturating_sub(STALL_WINDOW + 1);
                    let drop = (history[back] - j) / j.abs().max(f64::MIN_POSITIVE);
                    stalled = st.grad_norm <= STALL_FACTOR * grad_tol && drop <= STALL_DROP;
                    converged = stalled;
                    break;
                }
            }
        }
        RunOutcome {
            big_u,
            iterations,
            converged,
            stalled,
            history,
        }
    }

    /// Rotates the first angular moment onto `+x1` (full space only) and fixes
    /// the sign at the node nearest `(r_outer, 0)`.
    /// Rotates the first-moment axis to `+x1`, or with `Gauge::Snap` only to
    /// the nearest half-step mirror line; then fixes the sign.
    fn gauge_fix(&self, big_u: Vec<f64>, gauge: Gauge) -> Vec<f64> {
        let th = self.params.theta;
        let mut big_u = big_u;
        if gauge != Gauge::SignOnly && self.subspace == Subspace::Full {
            let u = Field::from_raw(self.grid, big_u.iter().map(|&x| phi(x, th)).collect());
            let (re, im) = first_moment(&u);
            if re.hypot(im) > 0.0 {
                let axis = im.atan2(re);
                let target = match gauge {
                    Gauge::Snap => {
                        let half = 0.5 * self.grid.da;
                        (axis / half).round() * half
                    }
                    _ => 0.0,
                };
                let rotated = u.rotate_spectral(target - axis);
                let back: Vec<f64> = rotated.values().iter().map(|&x| psi(x, th)).collect();
                if let Some(r) = self.retract(&back) {
                    big_u = r;
                }
            }
        }
        let probe = self.grid.idx(self.grid.n_r - 1, 0);
        if big_u[probe] < 0.0 {
            big_u.iter_mut().for_each(|x| *x = -*x);
        }
        big_u
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Gauge {
    Rotate,
    Snap,
    SignOnly,
}

fn random_smooth(grid: &Arc<PolarGrid>, rng: &mut ChaCha8Rng) -> Field {
    let r_out = grid.domain.r_outer;
    let mut terms = Vec::new();
    for m in 0..=3u32 {
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (c1, c2): (f64, f64) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let amp = if m == 0 { 0.3 } else { 1.0 / m as f64 };
        terms.push((m, amp * a, amp * b, c1, c2));
    }
    Field::from_polar(grid, |r, ang| {
        let s = r / r_out;
        terms
            .iter()
            .map(|&(m, a, b, c1, c2)| {
                let radial = s.powi(m.max(2) as i32) * (1.0 + c1 * s + c2 * s * s);
                let mf = m as f64;
                radial * (a * (mf * ang).cos() + b * (mf * ang).sin())
            })
            .sum()
    })
}

fn first_mode(grid: &Arc<PolarGrid>) -> Result<Field> {
    if grid.domain.is_disk() {
        let mode = NeumannMode::new(1, 1, Parity::Cos, grid.domain.r_outer)?;
        eigenfield(&mode, grid)
    } else {
        Ok(Field::from_polar(grid, |r, a| r * a.cos()))
    }
}

fn initial_field(grid: &Arc<PolarGrid>, opts: &SolveOptions, start: usize) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(start as u64));
    let base = match &opts.init {
        Init::RandomSmooth => return Ok(random_smooth(grid, &mut rng)),
        Init::Eigenmode => first_mode(grid)?,
        Init::Provided(f) => {
            if !f.grid().same_layout(grid) {
                return Err(Error::ShapeMismatch {
                    expected: grid.len(),
                    got: f.values().len(),
                });
            }
            Field::from_raw(grid, f.values().to_vec())
        }
    };
    if start == 0 {
        return Ok(base);
    }
    let noise = random_smooth(grid, &mut rng);
    let scale = 0.3 * base.l2_norm() / noise.l2_norm().max(f64::MIN_POSITIVE);
    base.zip_with(&noise, |a, b| a + scale * b)
}

struct StartResult {
    big_u: Vec<f64>,
    lambda: f64,
    iterations: usize,
    converged: bool,
    stalled: bool,
    history: Vec<f64>,
    polish_start: usize,
}

fn solve_start(solver: &Solver, opts: &SolveOptions, start: usize) -> Result<StartResult> {
    let th = solver.params.theta;
    let init = initial_field(solver.grid, opts, start)?;
    let big_u0: Vec<f64> = init.values().iter().map(|&x| psi(x, th)).collect();
    let start_u = solver
        .retract(&big_u0)
        .ok_or_else(|| Error::InfeasibleInit("initial field has no admissible component".into()))?;
    let first = solver.run(start_u, opts.max_iters, opts.grad_tol);
    let mut iterations = first.iterations;
    let mut history = first.history;
    let polish_start = history.len();
    let fixed = solver.gauge_fix(first.big_u, Gauge::Rotate);
    let polish = solver.run(fixed, opts.max_iters.saturating_sub(iterations).max(50), opts.grad_tol);
    iterations += polish.iterations;
    history.extend(polish.history);
    let converged = first.converged && polish.converged;
    let mut stalled = first.stalled || polish.stalled;
    let mut big_u = polish.big_u;
    // The rotation orbit is nearly flat, so the polish may stop with the axis
    // a fraction of a step off a grid mirror line; a tiny turn onto the line
    // and a short re-polish land on the mirror-symmetric critical point.
    if converged && solver.subspace == Subspace::Full {
        let snapped = solver.gauge_fix(big_u.clone(), Gauge::Snap);
        let again = solver.run(snapped, opts.max_iters.max(50), opts.grad_tol);
        if again.converged {
            iterations += again.iterations;
            history.extend(again.history);
            stalled |= again.stalled;
            big_u = again.big_u;
        }
    }
    let big_u = solver.gauge_fix(big_u, Gauge::SignOnly);
    let lambda = solver.objective(&big_u);
    Ok(StartResult {
        big_u,
        lambda,
        iterations,
        converged,
        stalled,
        history,
        polish_start,
    })
}

fn check_inputs(params: &ProblemParams, grid: &PolarGrid, opts: &SolveOptions) -> Result<()> {
    params.validate()?;
    opts.validate()?;
    if params.domain != grid.domain {
        return Err(Error::InvalidParams(
            "problem domain and grid domain differ".into(),
        ));
    }
    if params.dim() != 2 {
        return Err(Error::InvalidParams("only the planar problem is discretized".into()));
    }
    Ok(())
}

/// Computes the constrained infimum and a gauge-fixed minimizer.
pub fn minimize(
    params: &ProblemParams,
    grid: &Arc<PolarGrid>,
    opts: &SolveOptions,
) -> Result<MinimizeResult> {
    check_inputs(params, grid, opts)?;
    if opts.subspace == Subspace::Antisymmetric && !grid.domain.is_disk() {
        return Err(Error::InvalidDomain(
            "the antisymmetric problem is posed on a disk".into(),
        ));
    }
    let solver = Solver::new(params, grid, opts.subspace);
    let starts: Vec<StartResult> = (0..opts.n_starts)
        .into_par_iter()
        .map(|s| solve_start(&solver, opts, s))
        .collect::<Result<_>>()?;

    let start_lambdas: Vec<f64> = starts.iter().map(|s| s.lambda).collect();
    let conv: Vec<f64> = starts
        .iter()
        .filter(|s| s.converged)
        .map(|s| s.lambda)
        .collect();
    let starts_agreement = if conv.len() > 1 {
        let lo = conv.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = conv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / lo.abs().max(f64::MIN_POSITIVE)
    } else {
        0.0
    };
    let any_converged = !conv.is_empty();
    let best = starts
        .into_iter()
        .filter(|s| s.converged || !any_converged)
        .min_by(|a, b| a.lambda.total_cmp(&b.lambda))
        .expect("at least one start");

    let st = solver.stationarity(&best.big_u);
    let dual = solver.duals(&st);
    let th = params.theta;
    let u = Field::from_raw(grid, best.big_u.iter().map(|&x| phi(x, th)).collect());
    let lambda = eval_objective(params, &u);
    let mult = multipliers_from_identities(params, &u);
    let residual_rms = rms_on_rings(&euler_residual(params, &u, mult), RESIDUAL_SKIP);
    let symmetry = symmetry_report(&u)?;
    let constraints_ok = mean_constraint(&u).abs() <= opts.constraint_tol
        && (lp_norm(&u, params.p) - 1.0).abs() <= opts.constraint_tol;
    Ok(MinimizeResult {
        u,
        lambda,
        mult,
        dual,
        iterations: best.iterations,
        converged: best.converged && constraints_ok,
        stalled: best.stalled,
        grad_norm: st.grad_norm,
        residual_rms,
        symmetry,
        starts_agreement,
        start_lambdas,
        history: best.history,
        polish_start: best.polish_start,
    })
}

/// Minimization over fields that are odd under `(x1, x2) -> (-x1, x2)`.
pub fn minimize_antisymmetric(
    params: &ProblemParams,
    grid: &Arc<PolarGrid>,
    opts: &SolveOptions,
) -> Result<MinimizeResult> {
    let opts = SolveOptions {
        subspace: Subspace::Antisymmetric,
        ..opts.clone()
    };
    minimize(params, grid, &opts)
}

/// `v` on the open half-disk `{x1 > 0}`, zero elsewhere.
pub fn restrict_to_half(v: &Field) -> Field {
    let grid = v.grid();
    let half = grid.n_a as i64 / 2;
    let keep: Vec<bool> = (0..grid.n_a)
        .map(|j| grid.half_step_offset(j, 0).abs() < half)
        .collect();
    let vals = v
        .values()
        .iter()
        .enumerate()
        .map(|(k, &x)| if keep[k % grid.n_a] { x } else { 0.0 })
        .collect();
    Field::from_raw(grid, vals)
}

/// Feasible competitor built from an antisymmetric field: restriction to one
/// half-disk, mean removed, rescaled to unit `L^p` norm.
pub fn build_half_support_competitor(v_as: &Field, params: &ProblemParams) -> Result<Field> {
    let raw = restrict_to_half(v_as);
    if raw.is_zero() {
        return Err(Error::DegenerateCompetitor(
            "field vanishes on the half-disk".into(),
        ));
    }
    let mean = raw.integral() / raw.grid().area();
    let shifted = raw.map(|x| x - mean);
    let norm = lp_norm(&shifted, params.p);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateCompetitor("zero norm after centering".into()));
    }
    Ok(shifted.scale(1.0 / norm))
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationRecord {
    pub residual_rms: f64,
    pub c_identity: f64,
    pub d_identity: f64,
    pub c_dual: f64,
    pub d_dual: f64,
    /// `|d_identity - d_dual|`.
    pub multiplier_consistency: f64,
    pub mean_violation: f64,
    pub norm_violation: f64,
    /// Objective after two-point rearrangement for a fan of grid half-planes.
    pub rearranged_objectives: Vec<f64>,
    pub max_rearranged_rel_dev: f64,
    pub min_rearranged_gap: f64,
    pub passes: bool,
}

/// Tolerances used by [`certify`].
pub const CERT_MULT_REL: f64 = 1e-3;
pub const CERT_REARRANGE_REL: f64 = 1e-2;
pub const CERT_CONSTRAINT: f64 = 1e-8;
pub const CERT_DESCENT_REL: f64 = 1e-6;

pub fn certify(result: &MinimizeResult, params: &ProblemParams) -> Result<CertificationRecord> {
    if !result.converged {
        return Err(Error::Precondition("certify needs a converged result".into()));
    }
    let u = &result.u;
    let grid = u.grid();
    let lambda = result.lambda;
    let n_a = grid.n_a;
    let rearranged: Vec<f64> = (0..8)
        .map(|i| {
            let h = HalfPlane::grid_offset(grid, i * n_a / 8);
            two_point_rearrange(u, h).map(|f| eval_objective(params, &f))
        })
        .collect::<Result<_>>()?;
    let max_dev = rearranged
        .iter()
        .map(|v| (v - lambda).abs() / lambda.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let min_gap = rearranged
        .iter()
        .map(|v| v - lambda)
        .fold(f64::INFINITY, f64::min);
    let consistency = (result.mult.d - result.dual.d).abs();
    let mean_violation = mean_constraint(u).abs();
    let norm_violation = (lp_norm(u, params.p) - 1.0).abs();
    let passes = consistency <= CERT_MULT_REL * result.dual.d.abs()
        && mean_violation <= CERT_CONSTRAINT
        && norm_violation <= CERT_CONSTRAINT
        && max_dev <= CERT_REARRANGE_REL
        && min_gap >= -CERT_DESCENT_REL * lambda.abs();
    Ok(CertificationRecord {
        residual_rms: result.residual_rms,
        c_identity: result.mult.c,
        d_identity: result.mult.d,
        c_dual: result.dual.c,
        d_dual: result.dual.d,
        multiplier_consistency: consistency,
        mean_violation,
        norm_violation,
        rearranged_objectives: rearranged,
        max_rearranged_rel_dev: max_dev,
        min_rearranged_gap: min_gap,
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::FSpec;
    use crate::grid::{build_polar_grid, RadialDomain};

    fn params(theta: f64, p: f64) -> ProblemParams {
        ProblemParams::new(theta, p, FSpec::ZERO, RadialDomain::unit_disk()).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = build_polar_grid(RadialDomain::unit_disk(), 8, 16).unwrap();
        let pr = ProblemParams::new(0.2, 1.5, FSpec::power_law(0.1, 1.2), RadialDomain::unit_disk())
            .unwrap();
        let big_u: Vec<f64> = (0..g.len()).map(|k| ((k * 7919) % 13) as f64 * 0.1 - 0.6).collect();
        let grad = gradient_in_u(&pr, &g, &big_u);
        let dir: Vec<f64> = (0..g.len()).map(|k| ((k * 104729) % 17) as f64 / 17.0 - 0.5).collect();
        let h = 1e-6;
        let mut plus = big_u.clone();
        let mut minus = big_u.clone();
        axpy(&mut plus, h, &dir);
        axpy(&mut minus, -h, &dir);
        let fd = (objective_in_u(&pr, &g, &plus) - objective_in_u(&pr, &g, &minus)) / (2.0 * h);
        let an = dot(&grad, &dir);
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
    }

    #[test]
    fn retraction_is_feasible() {
        let g = build_polar_grid(RadialDomain::unit_disk(), 8, 16).unwrap();
        let pr = params(0.3, 3.0);
        let s = Solver::new(&pr, &g, Subspace::Full);
        let v: Vec<f64> = (0..g.len()).map(|k| (k as f64).sin() + 0.4).collect();
        let out = s.retract(&v).unwrap();
        let u = Field::from_raw(&g, out.iter().map(|&x| phi(x, 0.3)).collect());
        assert!(mean_constraint(&u).abs() < 1e-13);
        assert!((lp_norm(&u, 3.0) - 1.0).abs() < 1e-13);
        assert!(s.retract(&vec![1.0; g.len()]).is_none());
    }

    #[test]
    fn small_disk_eigenvalue() {
        let g = build_polar_grid(RadialDomain::unit_disk(), 24, 48).unwrap();
        let res = minimize(&params(0.0, 2.0), &g, &SolveOptions::default()).unwrap();
        assert!(res.converged);
        let exact = crate::spectral::first_eigenvalue(1.0);
        assert!((res.lambda - exact).abs() < 0.03 * exact, "{}", res.lambda);
        assert!((res.dual.d + res.lambda).abs() < 1e-6 * res.lambda);
        let (a, b) = res.history.split_at(res.polish_start);
        assert!(a.windows(2).all(|w| w[1] <= w[0]));
        assert!(b.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn antisymmetric_iterates_are_odd() {
        let g = build_polar_grid(RadialDomain::unit_disk(), 16, 32).unwrap();
        let res = minimize_antisymmetric(&params(0.1, 3.0), &g, &SolveOptions::default()).unwrap();
        let n = g.n_a;
        for i in 0..g.n_r {
            for j in 0..n {
                assert_eq!(res.u.get(i, j), -res.u.get(i, (n / 2 + n - j) % n));
            }
        }
        assert_eq!(res.dual.c, 0.0);
    }

    #[test]
    fn non_converged_is_reported() {
        let g = build_polar_grid(RadialDomain::unit_disk(), 16, 32).unwrap();
        let opts = SolveOptions {
            max_iters: 1,
            ..SolveOptions::default()
        };
        let res = minimize(&params(0.1, 2.0), &g, &opts).unwrap();
        assert!(!res.converged);
        assert!(certify(&res, &params(0.1, 2.0)).is_err());
        assert!(matches!(res.into_converged(), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn competitor_is_feasible() {
        let g = build_polar_grid(RadialDomain::unit_disk(), 12, 24).unwrap();
        let pr = params(0.1, 4.0);
        let v = Field::from_polar(&g, |r, a| r * a.cos());
        let v = v.scale(1.0 / lp_norm(&v, 4.0));
        let c = build_half_support_competitor(&v, &pr).unwrap();
        assert!(mean_constraint(&c).abs() < 1e-13);
        assert!((lp_norm(&c, 4.0) - 1.0).abs() < 1e-13);
        let raw = restrict_to_half(&v);
        assert!((lp_norm(&raw, 4.0).powi(4) - 0.5).abs() < 1e-12);
        assert!(build_half_support_competitor(&Field::zeros(&g), &pr).is_err());
    }
}
