//! Two-point rearrangement, foliated Schwarz symmetrization, radial
//! mollification and symmetry diagnostics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{reflect_k2, Field, PolarGrid};

/// Open half-plane `{x : x . e > 0}` with `e = (cos phi, sin phi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal_angle: f64,
}

impl HalfPlane {
    pub fn new(normal_angle: f64) -> Self {
        Self {
            normal_angle: normal_angle.rem_euclid(2.0 * PI),
        }
    }

    /// Grid half-plane with normal at `(k + 1/2) da`; no node lies on its boundary.
    pub fn grid_offset(grid: &PolarGrid, k: usize) -> Self {
        Self::new((k as f64 + 0.5) * grid.da)
    }
}

/// All `n_a` grid half-planes with normals at `(k + 1/2) da`.
pub fn grid_half_planes(grid: &PolarGrid) -> Vec<HalfPlane> {
    (0..grid.n_a).map(|k| HalfPlane::grid_offset(grid, k)).collect()
}

/// Per angle index: +1 inside H, -1 outside, 0 on the boundary line.
fn sides(grid: &PolarGrid, k2: usize) -> Vec<i8> {
    let quarter = grid.n_a as i64 / 2;
    (0..grid.n_a)
        .map(|j| {
            let d = grid.half_step_offset(j, k2).abs();
            match d.cmp(&quarter) {
                std::cmp::Ordering::Less => 1,
                std::cmp::Ordering::Equal => 0,
                std::cmp::Ordering::Greater => -1,
            }
        })
        .collect()
}

/// `u_H`: on every reflection pair the larger value moves to the `H` side.
pub fn two_point_rearrange(f: &Field, h: HalfPlane) -> Result<Field> {
    let grid = f.grid();
    let k2 = grid.half_steps(h.normal_angle)?;
    let side = sides(grid, k2);
    let n = grid.n_a;
    let mut out = f.values().to_vec();
    for ring in out.chunks_exact_mut(n) {
        for j in 0..n {
            if side[j] == 1 {
                let m = grid.mirror_j(j, k2);
                let (a, b) = (ring[j], ring[m]);
                if b > a {
                    ring[j] = b;
                    ring[m] = a;
                }
            }
        }
    }
    Ok(Field::from_raw(grid, out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HOrder {
    /// `f = f_H`: `f(x) >= f(sigma_H x)` on `H`.
    IsUH,
    /// `sigma_H f = f_H`: `f(x) <= f(sigma_H x)` on `H`.
    IsSigmaUH,
    Neither,
}

pub fn check_h_order(f: &Field, h: HalfPlane, tol: f64) -> Result<HOrder> {
    let grid = f.grid();
    let k2 = grid.half_steps(h.normal_angle)?;
    let side = sides(grid, k2);
    let n = grid.n_a;
    let (mut ge, mut le) = (true, true);
    for ring in f.values().chunks_exact(n) {
        for j in 0..n {
            if side[j] == 1 {
                let d = ring[j] - ring[grid.mirror_j(j, k2)];
                ge &= d >= -tol;
                le &= d <= tol;
            }
        }
        if !ge && !le {
            return Ok(HOrder::Neither);
        }
    }
    Ok(if ge {
        HOrder::IsUH
    } else if le {
        HOrder::IsSigmaUH
    } else {
        HOrder::Neither
    })
}

/// Angle indices ordered by distance from the pole at `k2` half steps; among
/// nodes at equal distance the counterclockwise one comes first.
fn pole_order(grid: &PolarGrid, k2: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..grid.n_a).collect();
    idx.sort_by_key(|&j| {
        let d = grid.half_step_offset(j, k2);
        (d.abs(), if d > 0 || d == grid.n_a as i64 { 0 } else { 1 })
    });
    idx
}

/// Foliated Schwarz symmetrization about the pole at angle `k2 * da / 2`.
pub fn foliated_symmetrize_about(f: &Field, k2: usize) -> Field {
    let grid = f.grid();
    let n = grid.n_a;
    let order = pole_order(grid, k2);
    let mut out = vec![0.0; f.values().len()];
    let mut buf = vec![0.0; n];
    for (src, dst) in f.values().chunks_exact(n).zip(out.chunks_exact_mut(n)) {
        buf.copy_from_slice(src);
        buf.sort_by(|a, b| b.total_cmp(a));
        for (v, &j) in buf.iter().zip(&order) {
            dst[j] = *v;
        }
    }
    Field::from_raw(grid, out)
}

/// Foliated Schwarz symmetrization with respect to `+x1`: on each circle the
/// values are rearranged to be nonincreasing in the polar angle from `+x1`.
pub fn foliated_symmetrize(f: &Field) -> Field {
    foliated_symmetrize_about(f, 0)
}

/// Smooth, radial, nonincreasing bump supported in `[0, 1)`.
#[inline]
fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Discrete convolution with `h(|x - y| / eps)`, normalised per output node.
pub fn mollify(f: &Field, eps: f64) -> Result<Field> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps = {eps} must be > 0")));
    }
    let grid = f.grid();
    let (n_r, n) = (grid.n_r, grid.n_a);
    let cos_t = grid.cos_table();
    let vals = f.values();
    let mut out = vec![0.0; vals.len()];
    for ix in 0..n_r {
        let rx = grid.r_nodes[ix];
        let lo = grid.r_nodes.partition_point(|&r| r <= rx - eps);
        let hi = grid.r_nodes.partition_point(|&r| r < rx + eps);
        for jx in 0..n {
            let (mut num, mut den, mut others) = (0.0, 0.0, 0usize);
            for iy in lo..hi {
                let ry = grid.r_nodes[iy];
                let wy = grid.ring_weight(iy);
                for jy in 0..n {
                    let m = (jx + n - jy) % n;
                    let d2 = (rx * rx + ry * ry - 2.0 * rx * ry * cos_t[m]).max(0.0);
                    let k = bump(d2.sqrt() / eps);
                    if k > 0.0 {
                        if !(iy == ix && jy == jx) {
                            others += 1;
                        }
                        num += k * wy * vals[iy * n + jy];
                        den += k * wy;
                    }
                }
            }
            out[ix * n + jx] = if others == 0 { vals[ix * n + jx] } else { num / den };
        }
    }
    Ok(Field::from_raw(grid, out))
}

/// Axis estimate and normalized symmetry defects.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub axis_angle: f64,
    pub foliated_defect: f64,
    pub antisym_defect: f64,
    pub even_defect: f64,
}

impl SymmetryReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Mass-weighted first angular moment `sum w f e^{i a}`.
pub fn first_moment(f: &Field) -> (f64, f64) {
    let grid = f.grid();
    let (c, s) = (grid.cos_table(), grid.sin_table());
    let n = grid.n_a;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, ring) in f.values().chunks_exact(n).enumerate() {
        let w = grid.ring_weight(i);
        for j in 0..n {
            re += w * ring[j] * c[j];
            im += w * ring[j] * s[j];
        }
    }
    (re, im)
}

fn l2_diff(a: &[f64], b: &[f64], grid: &PolarGrid, sign: f64) -> f64 {
    a.iter()
        .zip(b)
        .zip(&grid.w)
        .map(|((x, y), w)| {
            let d = x + sign * y;
            w * d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Defects with respect to the pole at `k2` half steps.
pub fn defects_about(f: &Field, k2: usize) -> Result<SymmetryReport> {
    let grid = f.grid();
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    let n2 = 2 * grid.n_a;
    let sym = foliated_symmetrize_about(f, k2);
    let foliated = l2_diff(f.values(), sym.values(), grid, -1.0) / norm;
    // mirror line through the pole, and the line perpendicular to it
    let along = reflect_k2(f, (k2 + grid.n_a / 2) % n2);
    let perp = reflect_k2(f, k2);
    Ok(SymmetryReport {
        axis_angle: (k2 as f64 * 0.5 * grid.da).rem_euclid(2.0 * PI),
        foliated_defect: foliated,
        antisym_defect: l2_diff(f.values(), perp.values(), grid, 1.0) / (2.0 * norm),
        even_defect: l2_diff(f.values(), along.values(), grid, -1.0) / (2.0 * norm),
    })
}

/// Symmetry report with the pole estimated by the first angular moment. The
/// defects are measured about the nearest half grid angle, where the mirror
/// maps nodes to nodes; `axis_angle` is the unrounded estimate. Fields without a
/// first harmonic fall back to the exhaustive search.
pub fn symmetry_report(f: &Field) -> Result<SymmetryReport> {
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    let grid = f.grid();
    let (re, im) = first_moment(f);
    let mass: f64 = f
        .values()
        .iter()
        .zip(&grid.w)
        .map(|(x, w)| w * x.abs())
        .sum();
    if re.hypot(im) <= 1e-10 * mass {
        return symmetry_report_exhaustive(f);
    }
    let angle = im.atan2(re).rem_euclid(2.0 * PI);
    let n2 = 2 * grid.n_a;
    let k2 = ((angle / (0.5 * grid.da)).round() as usize) % n2;
    let mut rep = defects_about(f, k2)?;
    rep.axis_angle = angle;
    Ok(rep)
}

/// Slow verification mode: the pole minimizing the foliated defect over all
/// half grid angles.
pub fn symmetry_report_exhaustive(f: &Field) -> Result<SymmetryReport> {
    let n2 = 2 * f.grid().n_a;
    let mut best: Option<SymmetryReport> = None;
    for k2 in 0..n2 {
        let rep = defects_about(f, k2)?;
        if best.map_or(true, |b| rep.foliated_defect < b.foliated_defect - 1e-14) {
            best = Some(rep);
        }
    }
    Ok(best.expect("at least one pole"))
}
