//! Radially symmetric domains, the polar tensor grid and grid functions.
//!
//! Nodes are cell centred in both directions: `r_i = r_inner + (i + 1/2) dr` and
//! `a_j = 2 pi j / n_a`. The flat index of node `(i, j)` is `i * n_a + j`.
//!
//! The gradient is discretised on cell faces. A radial face joins rings `i` and
//! `i + 1` at the same angle, an angular face joins neighbours `j` and `j + 1` on
//! one ring. At a node the squared gradient averages the squared face differences
//! of the faces around it; a ring on the domain boundary uses its single inward
//! radial face at full weight. The discrete Dirichlet energy is then
//! `sum_faces kappa_f (f_a - f_b)^2`, which equals `integrate(grad_sq(f))` exactly,
//! and its first variation defines the discrete Laplacian.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rearrange::HalfPlane;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Disk,
    Annulus,
}

/// A disk or an annulus centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialDomain {
    pub kind: DomainKind,
    pub r_inner: f64,
    pub r_outer: f64,
}

impl RadialDomain {
    pub fn disk(radius: f64) -> Result<Self> {
        let d = Self {
            kind: DomainKind::Disk,
            r_inner: 0.0,
            r_outer: radius,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn annulus(r_inner: f64, r_outer: f64) -> Result<Self> {
        let d = Self {
            kind: DomainKind::Annulus,
            r_inner,
            r_outer,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_disk() -> Self {
        Self {
            kind: DomainKind::Disk,
            r_inner: 0.0,
            r_outer: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r_inner.is_finite() || !self.r_outer.is_finite() {
            return Err(Error::InvalidDomain("radii must be finite".into()));
        }
        if self.r_inner < 0.0 {
            return Err(Error::InvalidDomain("r_inner must be >= 0".into()));
        }
        if self.r_outer <= self.r_inner {
            return Err(Error::InvalidDomain("r_outer must exceed r_inner".into()));
        }
        match self.kind {
            DomainKind::Disk if self.r_inner != 0.0 => {
                Err(Error::InvalidDomain("a disk has r_inner = 0".into()))
            }
            DomainKind::Annulus if self.r_inner == 0.0 => {
                Err(Error::InvalidDomain("an annulus needs r_inner > 0".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn area(&self) -> f64 {
        PI * (self.r_outer * self.r_outer - self.r_inner * self.r_inner)
    }

    pub fn is_disk(&self) -> bool {
        self.kind == DomainKind::Disk
    }
}

/// Tensor polar mesh with midpoint quadrature weights and face coefficients.
#[derive(Debug)]
pub struct PolarGrid {
    pub domain: RadialDomain,
    pub n_r: usize,
    pub n_a: usize,
    pub dr: f64,
    pub da: f64,
    pub r_nodes: Vec<f64>,
    pub a_nodes: Vec<f64>,
    /// Quadrature weight per node, `r_i dr da`.
    pub w: Vec<f64>,
    ring_w: Vec<f64>,
    // per-ring weights of the outward / inward radial face in grad_sq
    alpha_out: Vec<f64>,
    alpha_in: Vec<f64>,
    /// Coefficient of the radial face between rings `i` and `i + 1`.
    kappa_r: Vec<f64>,
    /// Coefficient of every angular face on ring `i`.
    kappa_a: Vec<f64>,
    cos_a: Vec<f64>,
    sin_a: Vec<f64>,
}

/// Builds the polar grid on `domain` with `n_r` rings and `n_a` angles per ring.
pub fn build_polar_grid(domain: RadialDomain, n_r: usize, n_a: usize) -> Result<Arc<PolarGrid>> {
    domain.validate()?;
    if n_r < 2 {
        return Err(Error::InvalidGrid("n_r must be at least 2".into()));
    }
    if n_a % 4 != 0 {
        return Err(Error::InvalidGrid("n_a must be divisible by 4".into()));
    }
    if n_a < 4 {
        return Err(Error::InvalidGrid("n_a must be at least 4".into()));
    }
    let dr = (domain.r_outer - domain.r_inner) / n_r as f64;
    let da = 2.0 * PI / n_a as f64;
    let r_nodes: Vec<f64> = (0..n_r)
        .map(|i| domain.r_inner + (i as f64 + 0.5) * dr)
        .collect();
    let a_nodes: Vec<f64> = (0..n_a).map(|j| da * j as f64).collect();
    let ring_w: Vec<f64> = r_nodes.iter().map(|r| r * dr * da).collect();

    let face_r = |i: usize| domain.r_inner + (i as f64 + 1.0) * dr;
    let mut alpha_out = vec![0.0; n_r];
    let mut alpha_in = vec![0.0; n_r];
    for i in 0..n_r {
        if i + 1 < n_r {
            alpha_out[i] = if i == 0 { 1.0 } else { face_r(i) / (2.0 * r_nodes[i]) };
        }
        if i > 0 {
            alpha_in[i] = if i + 1 == n_r {
                1.0
            } else {
                face_r(i - 1) / (2.0 * r_nodes[i])
            };
        }
    }
    let kappa_r: Vec<f64> = (0..n_r - 1)
        .map(|i| (ring_w[i] * alpha_out[i] + ring_w[i + 1] * alpha_in[i + 1]) / (dr * dr))
        .collect();
    let kappa_a: Vec<f64> = (0..n_r)
        .map(|i| ring_w[i] / (r_nodes[i] * da).powi(2))
        .collect();

    // Symmetric tables so that reflected angles give bit-identical trig values.
    let mut cos_a = vec![0.0; n_a];
    let mut sin_a = vec![0.0; n_a];
    for j in 0..=n_a / 2 {
        let (s, c) = (da * j as f64).sin_cos();
        cos_a[j] = c;
        sin_a[j] = s;
        if j > 0 && j < n_a / 2 {
            cos_a[n_a - j] = c;
            sin_a[n_a - j] = -s;
        }
    }
    sin_a[0] = 0.0;
    sin_a[n_a / 2] = 0.0;
    cos_a[n_a / 4] = 0.0;
    cos_a[3 * n_a / 4] = 0.0;

    let mut w = Vec::with_capacity(n_r * n_a);
    for &rw in &ring_w {
        w.extend(std::iter::repeat(rw).take(n_a));
    }

    Ok(Arc::new(PolarGrid {
        domain,
        n_r,
        n_a,
        dr,
        da,
        r_nodes,
        a_nodes,
        w,
        ring_w,
        alpha_out,
        alpha_in,
        kappa_r,
        kappa_a,
        cos_a,
        sin_a,
    }))
}

impl PolarGrid {
    pub fn len(&self) -> usize {
        self.n_r * self.n_a
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_a + j
    }

    #[inline]
    pub fn ring_weight(&self, i: usize) -> f64 {
        self.ring_w[i]
    }

    pub fn area(&self) -> f64 {
        self.w.iter().sum()
    }

    /// Cartesian coordinates of node `k`.
    pub fn xy(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k / self.n_a, k % self.n_a);
        (self.r_nodes[i] * self.cos_a[j], self.r_nodes[i] * self.sin_a[j])
    }

    pub fn cos_table(&self) -> &[f64] {
        &self.cos_a
    }

    pub fn sin_table(&self) -> &[f64] {
        &self.sin_a
    }

    pub(crate) fn kappa_r(&self) -> &[f64] {
        &self.kappa_r
    }

    pub(crate) fn kappa_a(&self) -> &[f64] {
        &self.kappa_a
    }

    /// Same node layout (two grids built from identical arguments compare equal).
    pub fn same_layout(&self, other: &PolarGrid) -> bool {
        self.n_r == other.n_r && self.n_a == other.n_a && self.domain == other.domain
    }

    pub fn integrate_values(&self, v: &[f64]) -> f64 {
        self.w.iter().zip(v).map(|(w, x)| w * x).sum()
    }

    pub fn integrate(&self, f: &Field) -> Result<f64> {
        self.check(f)?;
        Ok(self.integrate_values(&f.values))
    }

    fn check(&self, f: &Field) -> Result<()> {
        if !self.same_layout(&f.grid) {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: f.values.len(),
            });
        }
        Ok(())
    }

    /// Squared discrete gradient at every node.
    pub fn grad_sq_values(&self, f: &[f64]) -> Vec<f64> {
        let (n_r, n_a) = (self.n_r, self.n_a);
        let mut out = vec![0.0; n_r * n_a];
        let inv_dr2 = 1.0 / (self.dr * self.dr);
        for i in 0..n_r {
            let ang = 0.5 / (self.r_nodes[i] * self.da).powi(2);
            for j in 0..n_a {
                let k = i * n_a + j;
                let jp = if j + 1 == n_a { 0 } else { j + 1 };
                let jm = if j == 0 { n_a - 1 } else { j - 1 };
                let mut s = 0.0;
                if i + 1 < n_r {
                    let d = f[k + n_a] - f[k];
                    s += self.alpha_out[i] * d * d * inv_dr2;
                }
                if i > 0 {
                    let d = f[k] - f[k - n_a];
                    s += self.alpha_in[i] * d * d * inv_dr2;
                }
                let dp = f[i * n_a + jp] - f[k];
                let dm = f[k] - f[i * n_a + jm];
                s += ang * (dp * dp + dm * dm);
                out[k] = s;
            }
        }
        out
    }

    /// `sum_faces kappa (f_a - f_b)^2`, equal to `integrate(grad_sq(f))`.
    pub fn dirichlet_energy(&self, f: &[f64]) -> f64 {
        let (n_r, n_a) = (self.n_r, self.n_a);
        let mut e = 0.0;
        for i in 0..n_r {
            let ka = self.kappa_a[i];
            let row = &f[i * n_a..(i + 1) * n_a];
            let mut s = 0.0;
            for j in 0..n_a {
                let jp = if j + 1 == n_a { 0 } else { j + 1 };
                let d = row[jp] - row[j];
                s += d * d;
            }
            e += ka * s;
            if i + 1 < n_r {
                let next = &f[(i + 1) * n_a..(i + 2) * n_a];
                let s: f64 = row.iter().zip(next).map(|(a, b)| (b - a) * (b - a)).sum();
                e += self.kappa_r[i] * s;
            }
        }
        e
    }

    /// Stiffness product `(A f)_k`; the energy gradient is `2 A f`.
    pub fn apply_stiffness(&self, f: &[f64], out: &mut [f64]) {
        let (n_r, n_a) = (self.n_r, self.n_a);
        for i in 0..n_r {
            let ka = self.kappa_a[i];
            let kin = if i > 0 { self.kappa_r[i - 1] } else { 0.0 };
            let kout = if i + 1 < n_r { self.kappa_r[i] } else { 0.0 };
            for j in 0..n_a {
                let k = i * n_a + j;
                let jp = if j + 1 == n_a { 0 } else { j + 1 };
                let jm = if j == 0 { n_a - 1 } else { j - 1 };
                let mut s = ka * (2.0 * f[k] - f[i * n_a + jp] - f[i * n_a + jm]);
                if i > 0 {
                    s += kin * (f[k] - f[k - n_a]);
                }
                if i + 1 < n_r {
                    s += kout * (f[k] - f[k + n_a]);
                }
                out[k] = s;
            }
        }
    }

    /// Node index reflected by the mirror whose half-plane normal sits at
    /// `k2 * da / 2`.
    #[inline]
    pub(crate) fn mirror_j(&self, j: usize, k2: usize) -> usize {
        let n = self.n_a;
        (k2 + n / 2 + n - j % n) % n
    }

    /// Signed angular offset of node angle `j` from the normal `k2`, in half
    /// steps, wrapped to `(-n_a, n_a]`.
    #[inline]
    pub(crate) fn half_step_offset(&self, j: usize, k2: usize) -> i64 {
        let n2 = 2 * self.n_a as i64;
        let mut d = (2 * j as i64 - k2 as i64).rem_euclid(n2);
        if d > self.n_a as i64 {
            d -= n2;
        }
        d
    }

    /// Converts a normal angle into half-step units when it is node preserving.
    pub fn half_steps(&self, angle: f64) -> Result<usize> {
        let x = angle / (0.5 * self.da);
        let k = x.round();
        if !angle.is_finite() || (x - k).abs() > 1e-9 * x.abs().max(1.0) {
            return Err(Error::NotNodePreserving(angle));
        }
        Ok((k as i64).rem_euclid(2 * self.n_a as i64) as usize)
    }
}

/// Real-valued function on the nodes of a polar grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<PolarGrid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Arc<PolarGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &Arc<PolarGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn zeros(grid: &Arc<PolarGrid>) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Arc<PolarGrid>, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    /// Samples `f(r, a)` at every node.
    pub fn from_polar(grid: &Arc<PolarGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut v = Vec::with_capacity(grid.len());
        for &r in &grid.r_nodes {
            for &a in &grid.a_nodes {
                v.push(f(r, a));
            }
        }
        Self::from_raw(grid, v)
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|x| s * x)
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check(other)?;
        Ok(Field::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate_values(&self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid
            .w
            .iter()
            .zip(&self.values)
            .map(|(w, x)| w * x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    /// Exact rotation by `steps * da` counterclockwise: `g(r, a) = f(r, a - steps da)`.
    pub fn rotate_steps(&self, steps: i64) -> Field {
        let n = self.grid.n_a;
        let s = steps.rem_euclid(n as i64) as usize;
        let mut out = vec![0.0; self.values.len()];
        for (src, dst) in self
            .values
            .chunks_exact(n)
            .zip(out.chunks_exact_mut(n))
        {
            for j in 0..n {
                dst[(j + s) % n] = src[j];
            }
        }
        Field::from_raw(&self.grid, out)
    }

    /// Trigonometric-interpolation rotation by an arbitrary angle, ring by ring.
    /// Exact for band-limited rings; used only for gauge fixing.
    pub fn rotate_spectral(&self, angle: f64) -> Field {
        let n = self.grid.n_a;
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut out = Vec::with_capacity(self.values.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for ring in self.values.chunks_exact(n) {
            for (b, &x) in buf.iter_mut().zip(ring) {
                *b = Complex64::new(x, 0.0);
            }
            fwd.process(&mut buf);
            for (m, b) in buf.iter_mut().enumerate() {
                let freq = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                if m == n / 2 {
                    *b *= (freq * angle).cos();
                } else {
                    *b *= Complex64::from_polar(1.0, -freq * angle);
                }
            }
            inv.process(&mut buf);
            out.extend(buf.iter().map(|c| c.re / n as f64));
        }
        Field::from_raw(&self.grid, out)
    }
}

/// `|grad f|^2` at every node.
pub fn grad_sq(f: &Field) -> Field {
    Field::from_raw(&f.grid, f.grid.grad_sq_values(&f.values))
}

/// `-Delta_h f`: the first variation of the discrete Dirichlet energy divided by
/// twice the node weight.
pub fn neg_laplacian(f: &Field) -> Field {
    let g = &f.grid;
    let mut out = vec![0.0; g.len()];
    g.apply_stiffness(&f.values, &mut out);
    for (o, w) in out.iter_mut().zip(&g.w) {
        *o /= w;
    }
    Field::from_raw(g, out)
}

/// Reflection applied to fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mirror {
    /// Across the x1-axis: `(x1, x2) -> (x1, -x2)`.
    X1,
    /// Across the x2-axis: `(x1, x2) -> (-x1, x2)`.
    X2,
    /// Across the boundary line of a half-plane through the origin.
    HalfPlane(HalfPlane),
}

impl Mirror {
    pub(crate) fn k2(&self, grid: &PolarGrid) -> Result<usize> {
        match self {
            Mirror::X1 => Ok(grid.n_a / 2),
            Mirror::X2 => Ok(0),
            Mirror::HalfPlane(h) => grid.half_steps(h.normal_angle),
        }
    }
}

/// `sigma f (x) = f(sigma x)`.
pub fn reflect_field(f: &Field, mirror: Mirror) -> Result<Field> {
    let k2 = mirror.k2(&f.grid)?;
    Ok(reflect_k2(f, k2))
}

pub(crate) fn reflect_k2(f: &Field, k2: usize) -> Field {
    let n = f.grid.n_a;
    let map: Vec<usize> = (0..n).map(|j| f.grid.mirror_j(j, k2)).collect();
    let mut out = vec![0.0; f.values.len()];
    for (src, dst) in f.values.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
        for j in 0..n {
            dst[j] = src[map[j]];
        }
    }
    Field::from_raw(&f.grid, out)
}

/// Text dump: header `# n_r n_a r_inner r_outer`, then one `r a value` line per
/// node in flat index order.
pub fn write_dump(f: &Field) -> String {
    let g = &f.grid;
    let mut s = String::with_capacity(g.len() * 48);
    let _ = writeln!(
        s,
        "# {} {} {} {}",
        g.n_r, g.n_a, g.domain.r_inner, g.domain.r_outer
    );
    for i in 0..g.n_r {
        for j in 0..g.n_a {
            let _ = writeln!(s, "{} {} {}", g.r_nodes[i], g.a_nodes[j], f.get(i, j));
        }
    }
    s
}

/// Parses a dump produced by [`write_dump`], rebuilding the grid from the header.
pub fn parse_dump(text: &str) -> Result<Field> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (ln, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let perr = |line: usize, msg: &str| Error::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };
    let h = header
        .strip_prefix('#')
        .ok_or_else(|| perr(ln, "missing '#' header"))?;
    let parts: Vec<&str> = h.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(perr(ln, "header must be '# n_r n_a r_inner r_outer'"));
    }
    let n_r: usize = parts[0].parse().map_err(|_| perr(ln, "bad n_r"))?;
    let n_a: usize = parts[1].parse().map_err(|_| perr(ln, "bad n_a"))?;
    let r_inner: f64 = parts[2].parse().map_err(|_| perr(ln, "bad r_inner"))?;
    let r_outer: f64 = parts[3].parse().map_err(|_| perr(ln, "bad r_outer"))?;
    let domain = if r_inner == 0.0 {
        RadialDomain::disk(r_outer)?
    } else {
        RadialDomain::annulus(r_inner, r_outer)?
    };
    let grid = build_polar_grid(domain, n_r, n_a)?;
    let mut values = Vec::with_capacity(grid.len());
    for (ln, line) in lines {
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(perr(ln, "expected 'r a value'"));
        }
        let k = values.len();
        if k >= grid.len() {
            return Err(perr(ln, "more nodes than the header declares"));
        }
        let r: f64 = cols[0].parse().map_err(|_| perr(ln, "bad r"))?;
        let a: f64 = cols[1].parse().map_err(|_| perr(ln, "bad a"))?;
        let (i, j) = (k / n_a, k % n_a);
        if (r - grid.r_nodes[i]).abs() > 1e-9 || (a - grid.a_nodes[j]).abs() > 1e-9 {
            return Err(perr(ln, "node coordinates do not match the grid"));
        }
        values.push(cols[2].parse::<f64>().map_err(|_| perr(ln, "bad value"))?);
    }
    Field::new(&grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk(n_r: usize, n_a: usize) -> Arc<PolarGrid> {
        build_polar_grid(RadialDomain::unit_disk(), n_r, n_a).unwrap()
    }

    #[test]
    fn small_disk_layout() {
        let g = unit_disk(2, 4);
        assert_eq!(g.r_nodes, vec![0.25, 0.75]);
        assert!((g.area() - PI).abs() < 1e-12 * PI);
    }

    #[test]
    fn annulus_area() {
        let g = build_polar_grid(RadialDomain::annulus(1.0, 2.0).unwrap(), 4, 8).unwrap();
        assert!((g.area() - 3.0 * PI).abs() < 1e-12 * 3.0 * PI);
        assert!(g.w.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn rejects_bad_angular_count() {
        let err = build_polar_grid(RadialDomain::unit_disk(), 8, 6).unwrap_err();
        assert!(err.to_string().contains("n_a must be divisible by 4"));
        assert!(build_polar_grid(RadialDomain::unit_disk(), 1, 8).is_err());
    }

    #[test]
    fn rejects_degenerate_domains() {
        assert!(RadialDomain::annulus(1.0, 1.0).is_err());
        assert!(RadialDomain::annulus(0.0, 1.0).is_err());
        assert!(RadialDomain::disk(-1.0).is_err());
        let bad = RadialDomain {
            kind: DomainKind::Disk,
            r_inner: 0.2,
            r_outer: 1.0,
        };
        assert!(build_polar_grid(bad, 8, 8).is_err());
    }

    #[test]
    fn integrate_constants_and_r_squared() {
        let g = unit_disk(16, 32);
        assert!((Field::constant(&g, 1.0).integral() - PI).abs() < 1e-12);
        assert_eq!(Field::zeros(&g).integral(), 0.0);
        let g = unit_disk(256, 16);
        let f = Field::from_polar(&g, |r, _| r * r);
        assert!((g.integrate(&f).unwrap() - PI / 2.0).abs() < 1e-4);
    }

    #[test]
    fn integrate_rejects_foreign_field() {
        let g1 = unit_disk(8, 8);
        let g2 = unit_disk(8, 16);
        assert!(g1.integrate(&Field::zeros(&g2)).is_err());
    }

    #[test]
    fn grad_sq_constant_is_zero() {
        let g = unit_disk(8, 16);
        assert!(grad_sq(&Field::constant(&g, 3.5)).values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn grad_sq_of_x1_on_annulus() {
        let g = build_polar_grid(RadialDomain::annulus(0.5, 1.0).unwrap(), 64, 256).unwrap();
        let f = Field::from_polar(&g, |r, a| r * a.cos());
        let gs = grad_sq(&f);
        let worst = gs.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "worst {worst}");
    }

    #[test]
    fn grad_sq_of_r_squared() {
        let g = unit_disk(256, 16);
        let gs = grad_sq(&Field::from_polar(&g, |r, _| r * r));
        // rings next to the pole carry an O(dr^2) absolute error
        for i in 1..g.n_r - 1 {
            let r = g.r_nodes[i];
            let err = (gs.get(i, 3) - 4.0 * r * r).abs();
            assert!(err < 4.0 * g.dr * g.dr, "ring {i}: {err}");
        }
    }

    #[test]
    fn energy_matches_integrated_grad_sq() {
        let g = build_polar_grid(RadialDomain::annulus(0.3, 1.2).unwrap(), 12, 24).unwrap();
        let f = Field::from_polar(&g, |r, a| (3.0 * r).sin() * (2.0 * a).cos() + r * a.sin());
        let e1 = g.dirichlet_energy(f.values());
        let e2 = grad_sq(&f).integral();
        assert!((e1 - e2).abs() < 1e-12 * e1);
    }

    #[test]
    fn stiffness_is_energy_gradient() {
        let g = unit_disk(6, 12);
        let f = Field::from_polar(&g, |r, a| r * r * (a + 0.3).cos() + 0.2 * r);
        let mut af = vec![0.0; g.len()];
        g.apply_stiffness(f.values(), &mut af);
        // quadratic form: E(f) = f . A f
        let quad: f64 = af.iter().zip(f.values()).map(|(a, b)| a * b).sum();
        assert!((quad - g.dirichlet_energy(f.values())).abs() < 1e-12 * quad);
    }

    #[test]
    fn reflections() {
        let g = unit_disk(4, 16);
        let c = Field::from_polar(&g, |_, a| a.cos());
        let s = Field::from_polar(&g, |_, a| a.sin());
        let rc = reflect_field(&c, Mirror::X1).unwrap();
        let rs = reflect_field(&s, Mirror::X1).unwrap();
        for k in 0..g.len() {
            assert!((rc.values()[k] - c.values()[k]).abs() < 1e-15);
            assert!((rs.values()[k] + s.values()[k]).abs() < 1e-15);
        }
        let f = Field::from_polar(&g, |r, a| r + (a * 3.0).sin() + a.cos() * 0.1);
        for m in [Mirror::X1, Mirror::X2, Mirror::HalfPlane(HalfPlane::new(3.0 * g.da / 2.0))] {
            let back = reflect_field(&reflect_field(&f, m).unwrap(), m).unwrap();
            assert_eq!(back.values(), f.values());
        }
        assert!(reflect_field(&f, Mirror::HalfPlane(HalfPlane::new(0.1234))).is_err());
    }

    #[test]
    fn rotation_and_reflection_preserve_energy() {
        let g = unit_disk(10, 32);
        let f = Field::from_polar(&g, |r, a| (r * 2.0).cos() * (a + 0.4).sin() + r * r * (2.0 * a).cos());
        let e = grad_sq(&f).integral();
        let i0 = f.integral();
        for h in [Mirror::X1, Mirror::X2, Mirror::HalfPlane(HalfPlane::new(5.0 * g.da / 2.0))] {
            let rf = reflect_field(&f, h).unwrap();
            assert!((grad_sq(&rf).integral() - e).abs() < 1e-12 * e);
            assert!((rf.integral() - i0).abs() < 1e-12 * e);
        }
        let rot = f.rotate_steps(7);
        assert!((grad_sq(&rot).integral() - e).abs() < 1e-12 * e);
    }

    #[test]
    fn spectral_rotation_matches_exact_shift() {
        let g = unit_disk(4, 32);
        let f = Field::from_polar(&g, |r, a| r * (a - 0.2).cos() + (3.0 * a).sin());
        let a = f.rotate_steps(3);
        let b = f.rotate_spectral(3.0 * g.da);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let c = f.rotate_spectral(0.37);
        let expect = Field::from_polar(&g, |r, a| r * (a - 0.57).cos() + (3.0 * (a - 0.37)).sin());
        for (x, y) in c.values().iter().zip(expect.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dump_roundtrip_is_bit_exact() {
        let g = build_polar_grid(RadialDomain::annulus(0.5, 1.0).unwrap(), 4, 8).unwrap();
        let f = Field::from_polar(&g, |r, a| (r * 7.1).exp() * (a * 1.3).sin() / 3.0);
        let text = write_dump(&f);
        assert!(text.starts_with("# 4 8 0.5 1\n"));
        let back = parse_dump(&text).unwrap();
        assert_eq!(back.values(), f.values());
        assert!(parse_dump("# 4 8 0.5\n").is_err());
        assert!(parse_dump("4 8 0.5 1\n").is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = unit_disk(2, 4);
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(&g, v), Err(Error::NonFinite(3))));
        assert!(Field::new(&g, vec![0.0; 7]).is_err());
    }
}
