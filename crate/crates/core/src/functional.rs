//! Parameters, the lower-order term `F`, the substitution pair `Psi`/`Phi`,
//! the discrete objective and constraints, and Euler-equation diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{grad_sq, neg_laplacian, Field, PolarGrid, RadialDomain};

/// Spatial dimension of every numerical computation in this crate.
pub const DIM: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FKind {
    Zero,
    PowerLaw,
}

/// `F(r, t) = 0` or `F(r, t) = -c0 |t|^alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FSpec {
    pub kind: FKind,
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub alpha: f64,
}

impl FSpec {
    pub const ZERO: FSpec = FSpec {
        kind: FKind::Zero,
        c0: 0.0,
        alpha: 0.0,
    };

    pub fn power_law(c0: f64, alpha: f64) -> Self {
        FSpec {
            kind: FKind::PowerLaw,
            c0,
            alpha,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == FKind::Zero || self.c0 == 0.0
    }

    #[inline]
    pub fn f(&self, _r: f64, t: f64) -> f64 {
        match self.kind {
            FKind::Zero => 0.0,
            FKind::PowerLaw => -self.c0 * t.abs().powf(self.alpha),
        }
    }

    #[inline]
    pub fn f_t(&self, _r: f64, t: f64) -> f64 {
        match self.kind {
            FKind::Zero => 0.0,
            FKind::PowerLaw => {
                if t == 0.0 {
                    0.0
                } else {
                    -self.c0 * self.alpha * t.abs().powf(self.alpha - 1.0) * t.signum()
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub theta: f64,
    pub p: f64,
    /// Sobolev exponent of the continuum function class; checked, never used.
    pub q: f64,
    #[serde(rename = "F")]
    pub f_spec: FSpec,
    pub domain: RadialDomain,
}

impl ProblemParams {
    /// Parameters with the smallest admissible `q = 2 (1 - theta)`.
    pub fn new(theta: f64, p: f64, f_spec: FSpec, domain: RadialDomain) -> Result<Self> {
        let q = if theta > 0.0 { 2.0 * (1.0 - theta) } else { 2.0 };
        let params = Self {
            theta,
            p,
            q,
            f_spec,
            domain,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn dim(&self) -> usize {
        DIM
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    /// Admissibility of `(theta, p, q, F)` for `N = 2`. `theta = 0` is accepted as
    /// the coercive reference problem, for which `q` is not checked.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        self.domain.validate()?;
        let th = self.theta;
        if !(th.is_finite() && (0.0..0.5).contains(&th)) {
            return bad(format!("theta = {th} violates 0 < 2 theta < 1"));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return bad(format!("p = {} violates 1 < p < inf", self.p));
        }
        if th > 0.0 && !(self.q >= 2.0 * (1.0 - th) && self.q < 2.0) {
            return bad(format!(
                "q = {} violates 2 (1 - theta) <= q < 2 for theta = {th}",
                self.q
            ));
        }
        if let FKind::PowerLaw = self.f_spec.kind {
            let FSpec { c0, alpha, .. } = self.f_spec;
            if !(c0.is_finite() && c0 >= 0.0) {
                return bad(format!("c0 = {c0} must be >= 0"));
            }
            if !(alpha.is_finite() && alpha > 1.0) {
                return bad(format!(
                    "alpha = {alpha} <= 1: F_t is unbounded at t = 0 and g is not defined there"
                ));
            }
            if alpha < 2.0 * th || alpha > self.p {
                return bad(format!(
                    "power law needs 2 theta <= alpha <= p (alpha = {alpha}, theta = {th}, p = {})",
                    self.p
                ));
            }
            if self.p < 2.0 {
                let scan = scan_condition_f(self);
                if !scan.holds {
                    return bad(format!(
                        "t(1+|t|)F_t - 2 theta |t| F <= 0 fails at t = {}",
                        scan.worst_t
                    ));
                }
            }
        }
        Ok(())
    }

    /// Energy density of the lower-order term, `-F(r, t) / (1 + |t|)^(2 theta)`.
    #[inline]
    pub fn lower_order_density(&self, r: f64, t: f64) -> f64 {
        if self.f_spec.is_zero() {
            return 0.0;
        }
        -self.f_spec.f(r, t) * (1.0 + t.abs()).powf(-2.0 * self.theta)
    }
}

/// Outcome of the sign scan for `t (1 + |t|) F_t - 2 theta |t| F <= 0`.
#[derive(Clone, Copy, Debug)]
pub struct ConditionScan {
    pub holds: bool,
    /// `max t d/dt [F / (1 + |t|)^(2 theta)]` over the scan.
    pub max_tddt: f64,
    pub worst_t: f64,
}

/// Log-spaced sign scan over `t in +-[1e-6, 1e6]`. `F` does not depend on `r`.
pub fn scan_condition_f(params: &ProblemParams) -> ConditionScan {
    let th = params.theta;
    let f = &params.f_spec;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_t = 0.0;
    let mut max_tddt = f64::NEG_INFINITY;
    let n = 2401;
    for k in 0..n {
        let mag = 10f64.powf(-6.0 + 12.0 * k as f64 / (n - 1) as f64);
        for t in [mag, -mag] {
            let val = t * (1.0 + t.abs()) * f.f_t(0.0, t) - 2.0 * th * t.abs() * f.f(0.0, t);
            let scale = (1.0 + t.abs()).powf(params.p + 1.0) * f.c0.max(1.0);
            let rel = val / scale;
            if rel > worst {
                worst = rel;
                worst_t = t;
            }
            let tddt = t * 2.0 * g_term_unchecked(0.0, t, params);
            max_tddt = max_tddt.max(tddt);
        }
    }
    ConditionScan {
        holds: worst <= 1e-14,
        max_tddt,
        worst_t,
    }
}

/// `Psi(xi) = sgn(xi) / (1 - theta) [(1 + |xi|)^(1 - theta) - 1]`.
#[inline]
pub fn psi(xi: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return xi;
    }
    let s = 1.0 - theta;
    xi.signum() * (s * xi.abs().ln_1p()).exp_m1() / s
}

/// `Phi = Psi^{-1}`: `sgn(eta) ([1 + (1 - theta) |eta|]^(1 / (1 - theta)) - 1)`.
#[inline]
pub fn phi(eta: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return eta;
    }
    let s = 1.0 - theta;
    eta.signum() * ((s * eta.abs()).ln_1p() / s).exp_m1()
}

/// `Phi'(eta) = (1 + |Phi(eta)|)^theta`.
#[inline]
pub fn phi_prime(eta: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return 1.0;
    }
    let s = 1.0 - theta;
    ((s * eta.abs()).ln_1p() * theta / s).exp()
}

/// `|t|^(p-2) t`, zero at `t = 0`.
#[inline]
pub fn signed_pow(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 1.0) * t.signum()
    }
}

/// Objective `sum_w |grad_h Psi(v)|^2 - F(|x|, v) / (1 + |v|)^(2 theta)`.
pub fn eval_objective(params: &ProblemParams, v: &Field) -> f64 {
    let grid = v.grid();
    let big_u: Vec<f64> = v.values().iter().map(|&x| psi(x, params.theta)).collect();
    grid.dirichlet_energy(&big_u) + lower_order_energy(params, grid, v.values())
}

pub(crate) fn lower_order_energy(params: &ProblemParams, grid: &PolarGrid, u: &[f64]) -> f64 {
    if params.f_spec.is_zero() {
        return 0.0;
    }
    let n_a = grid.n_a;
    u.iter()
        .enumerate()
        .map(|(k, &t)| {
            let r = grid.r_nodes[k / n_a];
            grid.w[k] * params.lower_order_density(r, t)
        })
        .sum()
}

pub fn mean_constraint(v: &Field) -> f64 {
    v.integral()
}

pub fn lp_norm(v: &Field, p: f64) -> f64 {
    let g = v.grid();
    g.w.iter()
        .zip(v.values())
        .map(|(w, x)| w * x.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `g(r, t) = d/dt [F(r, t) / (2 (1 + |t|)^(2 theta))]`.
pub fn g_term(r: f64, t: f64, params: &ProblemParams) -> Result<f64> {
    if params.f_spec.kind == FKind::PowerLaw && params.f_spec.alpha <= 1.0 && t == 0.0 {
        return Err(Error::NonDifferentiable(params.f_spec.alpha));
    }
    Ok(g_term_unchecked(r, t, params))
}

#[inline]
pub(crate) fn g_term_unchecked(r: f64, t: f64, params: &ProblemParams) -> f64 {
    if params.f_spec.is_zero() {
        return 0.0;
    }
    let th = params.theta;
    let a = 1.0 + t.abs();
    let f = params.f_spec.f(r, t);
    let ft = params.f_spec.f_t(r, t);
    0.5 * a.powf(-2.0 * th - 1.0) * (ft * a - 2.0 * th * f * t.signum())
}

/// `M(t) = |Phi(t)|^(p-2) Phi(t) (1 + |Phi(t)|)^theta`.
pub fn m_term(t: f64, params: &ProblemParams) -> f64 {
    let u = phi(t, params.theta);
    signed_pow(u, params.p) * (1.0 + u.abs()).powf(params.theta)
}

/// `N(r, t) = (g(r, Phi(t)) - c) (1 + |Phi(t)|)^theta`; `c` is the mean multiplier.
pub fn n_term(r: f64, t: f64, params: &ProblemParams, c: f64) -> f64 {
    let u = phi(t, params.theta);
    (g_term_unchecked(r, u, params) - c) * (1.0 + u.abs()).powf(params.theta)
}

/// Multipliers of the mean (`c`) and norm (`d`) constraints in
/// `-div(grad u / (1+|u|)^(2 theta)) - theta |grad u|^2 sgn u / (1+|u|)^(2 theta+1)
///  + c + d |u|^(p-2) u = g(|x|, u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub c: f64,
    pub d: f64,
}

/// Pointwise residual of `-Delta U + d M(U) - N(|x|, U)` with `U = Psi(u)`.
pub fn euler_residual(params: &ProblemParams, u: &Field, mult: Multipliers) -> Field {
    let th = params.theta;
    let big_u = u.map(|x| psi(x, th));
    let lap = neg_laplacian(&big_u);
    let grid = u.grid();
    let n_a = grid.n_a;
    let vals: Vec<f64> = lap
        .values()
        .iter()
        .zip(big_u.values())
        .enumerate()
        .map(|(k, (&l, &uu))| {
            let r = grid.r_nodes[k / n_a];
            l + mult.d * m_term(uu, params) - n_term(r, uu, params, mult.c)
        })
        .collect();
    Field::from_raw(grid, vals)
}

/// Weighted RMS of a field restricted to rings `skip..n_r - skip`.
pub fn rms_on_rings(f: &Field, skip: usize) -> f64 {
    let g = f.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for i in skip..g.n_r.saturating_sub(skip) {
        let w = g.ring_weight(i);
        for j in 0..g.n_a {
            let x = f.get(i, j);
            num += w * x * x;
            den += w;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

const NODAL_TOL: f64 = 1e-7;

/// `c` and `d` from the integrated Euler equation and from the equation tested
/// against `u`, all integrals by grid quadrature.
pub fn multipliers_from_identities(params: &ProblemParams, u: &Field) -> Multipliers {
    let th = params.theta;
    let grid = u.grid();
    let gs = grad_sq(u);
    let n_a = grid.n_a;
    // nodes on the nodal line, up to rounding, carry no sign
    let zero_level = NODAL_TOL * u.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (mut ug, mut grad_w, mut gsum, mut grad_sgn, mut pow_sum) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, (&x, &gk)) in u.values().iter().zip(gs.values()).enumerate() {
        let w = grid.w[k];
        let r = grid.r_nodes[k / n_a];
        let g = g_term_unchecked(r, x, params);
        let a = 1.0 + x.abs();
        let denom = a.powf(-2.0 * th - 1.0);
        ug += w * x * g;
        gsum += w * g;
        grad_w += w * gk * (1.0 + (1.0 - th) * x.abs()) * denom;
        if x.abs() > zero_level {
            grad_sgn += w * gk * x.signum() * denom;
        }
        pow_sum += w * signed_pow(x, params.p);
    }
    let d = ug - grad_w;
    let c = (gsum + th * grad_sgn - d * pow_sum) / grid.area();
    Multipliers { c, d }
}
