//! Parameter sweeps and symmetry checks, with CSV tables and JSON manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{eval_objective, lp_norm, mean_constraint, FKind, ProblemParams};
use crate::grid::{build_polar_grid, Field, PolarGrid};
use crate::minimize::{
    build_half_support_competitor, certify, minimize, minimize_antisymmetric, CertificationRecord,
    Init, MinimizeResult, SolveOptions,
};
use crate::rearrange::SymmetryReport;
use crate::spectral::first_eigenvalue;

pub const CSV_HEADER: [&str; 10] = [
    "value",
    "lambda",
    "lambda_as",
    "c",
    "d",
    "foliated_defect",
    "antisym_defect",
    "even_defect",
    "converged",
    "runtime_s",
];

/// Relative tolerance of the warm-versus-cold spot check.
pub const WARM_COLD_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    Theta,
    P,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub params_base: ProblemParams,
    pub axis: SweepAxis,
    /// Strictly increasing swept values.
    pub values: Vec<f64>,
    /// Fixed grid, or `None` for the default grid of each row.
    pub grid: Option<(usize, usize)>,
    pub opts: SolveOptions,
    pub out_dir: Option<PathBuf>,
    pub warm_start: bool,
}

impl SweepSpec {
    pub fn new(params_base: ProblemParams, axis: SweepAxis, values: Vec<f64>) -> Self {
        Self {
            params_base,
            axis,
            values,
            grid: None,
            opts: SolveOptions::default(),
            out_dir: None,
            warm_start: true,
        }
    }

    fn params_at(&self, v: f64) -> Result<ProblemParams> {
        let b = self.params_base;
        match self.axis {
            SweepAxis::Theta => ProblemParams::new(v, b.p, b.f_spec, b.domain),
            SweepAxis::P => ProblemParams::new(b.theta, v, b.f_spec, b.domain),
        }
    }

    pub fn grid_at(&self, p: f64) -> (usize, usize) {
        self.grid.unwrap_or_else(|| default_grid(p))
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParams("sweep needs at least one value".into()));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("sweep values must be strictly increasing".into()));
        }
        for &v in &self.values {
            self.params_at(v)?;
        }
        self.opts.validate()
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "params_base": self.params_base,
            "axis": self.axis,
            "values": self.values,
            "grid": self.grid,
            "opts": self.opts.describe(),
            "warm_start": self.warm_start,
        })
    }
}

/// Default resolution: sharper minimizers at large `p` need more nodes.
pub fn default_grid(p: f64) -> (usize, usize) {
    if p <= 8.0 {
        (96, 192)
    } else {
        (128, 256)
    }
}

/// One refinement step: both counts times 3/2, rounded to valid sizes.
pub fn refined_grid((n_r, n_a): (usize, usize)) -> (usize, usize) {
    let nr = (3 * n_r).div_ceil(2);
    let na = (3 * n_a).div_ceil(2).div_ceil(4) * 4;
    (nr, na)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub lambda: f64,
    pub lambda_as: Option<f64>,
    pub c: f64,
    pub d: f64,
    pub foliated_defect: f64,
    pub antisym_defect: f64,
    pub even_defect: f64,
    pub converged: bool,
    pub runtime_s: f64,
}

impl SweepRow {
    fn from_result(value: f64, r: &MinimizeResult, valid: bool, runtime_s: f64) -> Self {
        Self {
            value,
            lambda: r.lambda,
            lambda_as: None,
            c: r.mult.c,
            d: r.mult.d,
            foliated_defect: r.symmetry.foliated_defect,
            antisym_defect: r.symmetry.antisym_defect,
            even_defect: r.symmetry.even_defect,
            converged: r.converged && valid,
            runtime_s,
        }
    }

    fn csv_record(&self) -> Vec<String> {
        vec![
            self.value.to_string(),
            self.lambda.to_string(),
            self.lambda_as.map(|x| x.to_string()).unwrap_or_default(),
            self.c.to_string(),
            self.d.to_string(),
            self.foliated_defect.to_string(),
            self.antisym_defect.to_string(),
            self.even_defect.to_string(),
            self.converged.to_string(),
            format!("{:.3}", self.runtime_s),
        ]
    }

    fn manifest_entry(&self) -> serde_json::Value {
        serde_json::json!({
            "value": self.value,
            "lambda": self.lambda,
            "lambda_as": self.lambda_as,
            "c": self.c,
            "d": self.d,
            "foliated_defect": self.foliated_defect,
            "antisym_defect": self.antisym_defect,
            "even_defect": self.even_defect,
            "converged": self.converged,
        })
    }
}

/// Re-checks the result invariants before a row is written.
pub fn result_is_valid(r: &MinimizeResult, params: &ProblemParams, opts: &SolveOptions) -> bool {
    let s = &r.symmetry;
    let defects = [s.foliated_defect, s.antisym_defect, s.even_defect];
    r.lambda.is_finite()
        && r.lambda == eval_objective(params, &r.u)
        && mean_constraint(&r.u).abs() <= opts.constraint_tol
        && (lp_norm(&r.u, params.p) - 1.0).abs() <= opts.constraint_tol
        && defects.iter().all(|d| (0.0..=2.0).contains(d))
}

#[derive(Clone, Debug, Serialize)]
pub struct GridTolerance {
    pub value: f64,
    pub coarse: (usize, usize),
    pub fine: (usize, usize),
    pub lambda_coarse: f64,
    pub lambda_fine: f64,
    pub lambda_as_coarse: Option<f64>,
    pub lambda_as_fine: Option<f64>,
    /// `max |lambda_fine - lambda_coarse|` over the computed columns.
    pub grid_tol: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WarmColdCheck {
    pub values: Vec<f64>,
    pub max_rel_diff: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaFlags {
    /// Pairs `(theta_i, theta_j)` with `theta_i < theta_j` but `lambda_i < lambda_j - grid_tol`.
    pub monotonicity_violations: Vec<(f64, f64)>,
    /// `|d + lambda^2(B)|` per row.
    pub d_gap: Vec<f64>,
    pub d_gap_monotone: bool,
    pub antisym_defects: Vec<f64>,
    /// `|c| / theta` per row.
    pub c_over_theta: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ThetaSweep {
    pub rows: Vec<SweepRow>,
    pub results: Vec<MinimizeResult>,
    pub lambda2: f64,
    pub grid_tol: GridTolerance,
    pub flags: ThetaFlags,
    pub warm_cold: WarmColdCheck,
}

#[derive(Clone, Debug, Serialize)]
pub struct PFlags {
    pub lambda_as_strictly_decreasing: bool,
    /// Smallest swept `p` with `lambda_as - lambda > 3 grid_tol`.
    pub onset_p: Option<f64>,
    /// `eval_objective` of the half-support competitor per row.
    pub competitor: Vec<Option<f64>>,
    /// `lambda <= competitor` on every row where the competitor exists.
    pub competitor_bound_holds: bool,
}

#[derive(Clone, Debug)]
pub struct PSweep {
    pub rows: Vec<SweepRow>,
    pub results: Vec<MinimizeResult>,
    pub results_as: Vec<MinimizeResult>,
    pub grids: Vec<(usize, usize)>,
    pub grid_tol: GridTolerance,
    pub flags: PFlags,
    pub warm_cold: WarmColdCheck,
}

fn grid_for(params: &ProblemParams, dims: (usize, usize)) -> Result<Arc<PolarGrid>> {
    build_polar_grid(params.domain, dims.0, dims.1)
}

fn warm_opts(base: &SolveOptions, prev: Option<&Field>, grid: &Arc<PolarGrid>) -> SolveOptions {
    let mut o = base.clone();
    if let Some(f) = prev {
        if f.grid().same_layout(grid) {
            o.init = Init::Provided(f.clone());
        }
    }
    o
}

fn spot_rows(n: usize) -> Vec<usize> {
    let mut v = vec![0, n / 2, n.saturating_sub(1)];
    v.dedup();
    v
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Sweep over `theta` at `p = 2` on a disk, warm-started from large to small `theta`.
pub fn cmd_sweep_theta(spec: &SweepSpec) -> Result<ThetaSweep> {
    spec.validate()?;
    let base = spec.params_base;
    if spec.axis != SweepAxis::Theta {
        return Err(Error::Precondition("sweep-theta needs axis = Theta".into()));
    }
    if base.p != 2.0 || base.f_spec.kind != FKind::Zero || !base.domain.is_disk() {
        return Err(Error::Precondition(
            "sweep-theta is posed at p = 2 with F = 0 on a disk".into(),
        ));
    }
    let dims = spec.grid_at(base.p);
    let lambda2 = first_eigenvalue(base.domain.r_outer);

    let n = spec.values.len();
    let mut rows: Vec<Option<SweepRow>> = vec![None; n];
    let mut results: Vec<Option<MinimizeResult>> = vec![None; n];
    let mut prev: Option<Field> = None;
    for idx in (0..n).rev() {
        let v = spec.values[idx];
        let params = spec.params_at(v)?;
        let grid = grid_for(&params, dims)?;
        let opts = if spec.warm_start {
            warm_opts(&spec.opts, prev.as_ref(), &grid)
        } else {
            spec.opts.clone()
        };
        let t = Instant::now();
        let r = minimize(&params, &grid, &opts)?;
        let valid = result_is_valid(&r, &params, &opts);
        rows[idx] = Some(SweepRow::from_result(v, &r, valid, t.elapsed().as_secs_f64()));
        prev = Some(r.u.clone());
        results[idx] = Some(r);
    }
    let rows: Vec<SweepRow> = rows.into_iter().map(Option::unwrap).collect();
    let results: Vec<MinimizeResult> = results.into_iter().map(Option::unwrap).collect();

    // representative row: the largest theta, where the problem is most nonlinear
    let rep = n - 1;
    let grid_tol = {
        let params = spec.params_at(spec.values[rep])?;
        let fine = refined_grid(dims);
        let g = grid_for(&params, fine)?;
        let r = minimize(&params, &g, &spec.opts)?;
        GridTolerance {
            value: spec.values[rep],
            coarse: dims,
            fine,
            lambda_coarse: rows[rep].lambda,
            lambda_fine: r.lambda,
            lambda_as_coarse: None,
            lambda_as_fine: None,
            grid_tol: (r.lambda - rows[rep].lambda).abs(),
        }
    };
    let tol = grid_tol.grid_tol;

    let mut violations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rows[i].lambda < rows[j].lambda - tol {
                violations.push((rows[i].value, rows[j].value));
            }
        }
    }
    let d_gap: Vec<f64> = rows.iter().map(|r| (r.d + lambda2).abs()).collect();
    // in run order (decreasing theta) the gap should shrink
    let d_gap_monotone = d_gap.windows(2).all(|w| w[0] <= w[1] + tol);
    let flags = ThetaFlags {
        monotonicity_violations: violations,
        d_gap,
        d_gap_monotone,
        antisym_defects: rows.iter().map(|r| r.antisym_defect).collect(),
        c_over_theta: rows.iter().map(|r| r.c.abs() / r.value).collect(),
    };

    let mut max_rel = 0.0f64;
    let checked = spot_rows(n);
    for &i in &checked {
        let params = spec.params_at(spec.values[i])?;
        let g = grid_for(&params, dims)?;
        let cold = minimize(&params, &g, &spec.opts)?;
        max_rel = max_rel.max(rel_diff(rows[i].lambda, cold.lambda));
    }
    let warm_cold = WarmColdCheck {
        values: checked.iter().map(|&i| spec.values[i]).collect(),
        max_rel_diff: max_rel,
        ok: max_rel <= WARM_COLD_TOL,
    };

    let out = ThetaSweep {
        rows,
        results,
        lambda2,
        grid_tol,
        flags,
        warm_cold,
    };
    if let Some(dir) = &spec.out_dir {
        write_outputs(
            dir,
            "sweep_theta",
            &out.rows,
            serde_json::json!({
                "spec": spec.describe(),
                "lambda2_disk": out.lambda2,
                "grid_tol": out.grid_tol,
                "flags": out.flags,
                "warm_vs_cold": out.warm_cold,
            }),
        )?;
    }
    Ok(out)
}

/// Sweep over `p` at fixed `theta` on a disk: full and antisymmetric infima
/// and the half-support competitor built from the antisymmetric minimizer.
pub fn cmd_sweep_p(spec: &SweepSpec) -> Result<PSweep> {
    spec.validate()?;
    let base = spec.params_base;
    if spec.axis != SweepAxis::P {
        return Err(Error::Precondition("sweep-p needs axis = P".into()));
    }
    if !base.domain.is_disk() {
        return Err(Error::Precondition("sweep-p is posed on a disk".into()));
    }
    let n = spec.values.len();
    let mut rows = Vec::with_capacity(n);
    let mut results = Vec::with_capacity(n);
    let mut results_as = Vec::with_capacity(n);
    let mut grids = Vec::with_capacity(n);
    let mut competitor = Vec::with_capacity(n);
    let (mut prev, mut prev_as): (Option<Field>, Option<Field>) = (None, None);
    let opts_as = SolveOptions {
        init: Init::Eigenmode,
        n_starts: 1,
        ..spec.opts.clone()
    };
    for &v in &spec.values {
        let params = spec.params_at(v)?;
        let dims = spec.grid_at(v);
        let grid = grid_for(&params, dims)?;
        let (o_full, o_as) = if spec.warm_start {
            (
                warm_opts(&spec.opts, prev.as_ref(), &grid),
                warm_opts(&opts_as, prev_as.as_ref(), &grid),
            )
        } else {
            (spec.opts.clone(), opts_as.clone())
        };
        let t = Instant::now();
        let r = minimize(&params, &grid, &o_full)?;
        let ra = minimize_antisymmetric(&params, &grid, &o_as)?;
        let valid = result_is_valid(&r, &params, &o_full) && result_is_valid(&ra, &params, &o_as);
        let comp = build_half_support_competitor(&ra.u, &params)
            .ok()
            .map(|f| eval_objective(&params, &f));
        let mut row = SweepRow::from_result(v, &r, valid && ra.converged, t.elapsed().as_secs_f64());
        row.lambda_as = Some(ra.lambda);
        rows.push(row);
        competitor.push(comp);
        grids.push(dims);
        prev = Some(r.u.clone());
        prev_as = Some(ra.u.clone());
        results.push(r);
        results_as.push(ra);
    }

    // representative row: the largest p, the most resolution-sensitive one
    let rep = n - 1;
    let grid_tol = {
        let params = spec.params_at(spec.values[rep])?;
        let coarse = grids[rep];
        let fine = refined_grid(coarse);
        let g = grid_for(&params, fine)?;
        let r = minimize(&params, &g, &spec.opts)?;
        let ra = minimize_antisymmetric(&params, &g, &opts_as)?;
        let la = rows[rep].lambda_as.expect("antisymmetric column");
        GridTolerance {
            value: spec.values[rep],
            coarse,
            fine,
            lambda_coarse: rows[rep].lambda,
            lambda_fine: r.lambda,
            lambda_as_coarse: Some(la),
            lambda_as_fine: Some(ra.lambda),
            grid_tol: (r.lambda - rows[rep].lambda).abs().max((ra.lambda - la).abs()),
        }
    };
    let tol = grid_tol.grid_tol;
    let las: Vec<f64> = rows.iter().map(|r| r.lambda_as.unwrap()).collect();
    let onset_p = rows
        .iter()
        .find(|r| r.lambda_as.unwrap() - r.lambda > 3.0 * tol)
        .map(|r| r.value);
    let competitor_bound_holds = rows
        .iter()
        .zip(&competitor)
        .all(|(r, c)| c.map_or(true, |c| r.lambda <= c + tol));
    let flags = PFlags {
        lambda_as_strictly_decreasing: las.windows(2).all(|w| w[1] < w[0]),
        onset_p,
        competitor,
        competitor_bound_holds,
    };

    let mut max_rel = 0.0f64;
    let checked = spot_rows(n);
    for &i in &checked {
        let params = spec.params_at(spec.values[i])?;
        let g = grid_for(&params, grids[i])?;
        let cold = minimize(&params, &g, &spec.opts)?;
        let cold_as = minimize_antisymmetric(&params, &g, &opts_as)?;
        max_rel = max_rel
            .max(rel_diff(rows[i].lambda, cold.lambda))
            .max(rel_diff(las[i], cold_as.lambda));
    }
    let warm_cold = WarmColdCheck {
        values: checked.iter().map(|&i| spec.values[i]).collect(),
        max_rel_diff: max_rel,
        ok: max_rel <= WARM_COLD_TOL,
    };

    let out = PSweep {
        rows,
        results,
        results_as,
        grids,
        grid_tol,
        flags,
        warm_cold,
    };
    if let Some(dir) = &spec.out_dir {
        write_outputs(
            dir,
            "sweep_p",
            &out.rows,
            serde_json::json!({
                "spec": spec.describe(),
                "grids": out.grids,
                "grid_tol": out.grid_tol,
                "flags": out.flags,
                "onset_p_note": "empirical onset on the grids above; grid dependent, not an estimate of a constant of the continuum problem",
                "warm_vs_cold": out.warm_cold,
            }),
        )?;
    }
    Ok(out)
}

fn write_outputs(dir: &Path, stem: &str, rows: &[SweepRow], manifest: serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    let mut m = manifest;
    m["rows"] = rows.iter().map(SweepRow::manifest_entry).collect();
    fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&m)? + "\n",
    )?;
    Ok(())
}

pub const DEFAULT_FOLIATED_THRESHOLD: f64 = 5e-2;

#[derive(Clone, Debug, Serialize)]
pub struct FoliatedCheck {
    pub symmetry: SymmetryReport,
    pub certification: CertificationRecord,
    pub lambda: f64,
    pub threshold: f64,
    pub passes: bool,
}

/// Minimizes and checks foliated symmetry plus the certification record.
pub fn cmd_check_foliated(
    params: &ProblemParams,
    grid: &Arc<PolarGrid>,
    opts: &SolveOptions,
    threshold: f64,
) -> Result<(MinimizeResult, FoliatedCheck)> {
    let r = minimize(params, grid, opts)?.into_converged()?;
    let cert = certify(&r, params)?;
    let passes = r.symmetry.foliated_defect <= threshold && cert.passes;
    let check = FoliatedCheck {
        symmetry: r.symmetry,
        certification: cert,
        lambda: r.lambda,
        threshold,
        passes,
    };
    Ok((r, check))
}
