//! Neumann spectrum of the disk: Bessel functions of integer order, the zeros
//! of their derivatives and sampled eigenfunctions.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, PolarGrid};

/// Crossover between the ascending series and Miller's backward recurrence.
const SERIES_LIMIT: f64 = 12.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannMode {
    pub n: u32,
    pub k: u32,
    pub alpha_nk: f64,
    pub radius: f64,
    pub eigenvalue: f64,
    pub parity: Parity,
}

impl NeumannMode {
    pub fn new(n: u32, k: u32, parity: Parity, radius: f64) -> Result<Self> {
        if n == 0 && parity == Parity::Sin {
            return Err(Error::Precondition("the n = 0 mode has no sine branch".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidDomain(format!("radius {radius} must be positive")));
        }
        let alpha_nk = neumann_root(n, k)?;
        Ok(Self {
            n,
            k,
            alpha_nk,
            radius,
            eigenvalue: (alpha_nk / radius).powi(2),
            parity,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mode serializes")
    }
}

/// First nonzero Neumann eigenvalue of the disk of the given radius.
pub fn first_eigenvalue(radius: f64) -> f64 {
    let a = neumann_root(1, 1).expect("first root brackets");
    (a / radius).powi(2)
}

fn series(n: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for m in 1..=n {
        term *= h / m as f64;
    }
    let h2 = h * h;
    let mut sum = term;
    let mut m = 0u32;
    loop {
        m += 1;
        term *= -h2 / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && m as f64 > h {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    sum
}

fn miller(n: u32, x: f64) -> f64 {
    let top = (x.max(n as f64) + 30.0 + (40.0 * x.max(n as f64)).sqrt()) as u32;
    let start = top + (top & 1);
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    let (mut norm, mut want) = (0.0, 0.0);
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        // j now holds the unnormalised J_{k-1}
        let order = k - 1;
        if order == n {
            want = j;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            want *= 1e-250;
        }
    }
    norm += j;
    want / norm
}

/// `J_n(x)` for integer `n >= 0` and `0 <= x <= 1000`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_LIMIT {
        series(n, x)
    } else {
        miller(n, x)
    }
}

/// Both evaluation branches, for cross-checking on their overlap.
pub fn bessel_j_branches(n: u32, x: f64) -> (f64, f64) {
    (series(n, x), miller(n, x))
}

pub fn bessel_j_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

/// Positive zero number `k` of `J_n'`; for `n = 0` the root at the origin is
/// not counted.
pub fn neumann_root(n: u32, k: u32) -> Result<f64> {
    if n > 16 || k == 0 || k > 16 {
        return Err(Error::Precondition(format!(
            "neumann_root needs n <= 16 and 1 <= k <= 16 (got n = {n}, k = {k})"
        )));
    }
    let f = |x: f64| bessel_j_prime(n, x);
    // Large-k spacing of the zeros of J_n'; the scan runs past it with margin.
    let mcmahon = if n == 0 {
        (k as f64 + 0.25) * PI
    } else {
        (k as f64 + 0.5 * n as f64 - 0.75) * PI
    };
    let limit = mcmahon.max(n as f64) + 2.0 * PI + 4.0;
    let h = 0.02;
    let mut a = 0.01;
    let mut fa = f(a);
    let mut found = 0;
    while a < limit {
        let b = a + h;
        let fb = f(b);
        if fa == 0.0 || fa.signum() != fb.signum() {
            found += 1;
            if found == k {
                return Ok(bisect(f, a, b));
            }
        }
        a = b;
        fa = fb;
    }
    Err(Error::Bracketing { n, k })
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    if fa == 0.0 {
        return a;
    }
    let sa = fa.signum();
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || b - a <= 1e-14 {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
}

/// The mode sampled on a disk grid, scaled to unit L2 norm.
pub fn eigenfield(mode: &NeumannMode, grid: &Arc<PolarGrid>) -> Result<Field> {
    if !grid.domain.is_disk() {
        return Err(Error::InvalidDomain("eigenfields need a disk".into()));
    }
    let scale = mode.alpha_nk / grid.domain.r_outer;
    let n = mode.n as f64;
    let f = Field::from_polar(grid, |r, a| {
        let ang = match mode.parity {
            Parity::Cos => (n * a).cos(),
            Parity::Sin => (n * a).sin(),
        };
        bessel_j(mode.n, scale * r) * ang
    });
    let norm = f.l2_norm();
    Ok(f.scale(1.0 / norm))
}

/// Table of modes with `n < n_max`, `k <= k_max`, sorted by eigenvalue.
pub fn mode_table(n_max: u32, k_max: u32, radius: f64) -> Result<Vec<NeumannMode>> {
    let mut modes = Vec::new();
    for n in 0..n_max {
        for k in 1..=k_max {
            modes.push(NeumannMode::new(n, k, Parity::Cos, radius)?);
        }
    }
    modes.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_polar_grid, RadialDomain};
    use crate::rearrange::symmetry_report;

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(1, 0.0), 0.0);
    }

    #[test]
    fn first_zero_of_j0() {
        assert!(bessel_j(0, 2.404826).abs() < 1e-5);
        let z = bisect(|x| bessel_j(0, x), 2.0, 3.0);
        assert!((z - 2.404_825_557_695_773).abs() < 1e-12);
    }

    #[test]
    fn reference_values() {
        // tabulated values
        let cases = [
            (0, 1.0, 0.765_197_686_557_966_6),
            (1, 1.0, 0.440_050_585_744_933_5),
            (0, 10.0, -0.245_935_764_451_348_3),
            (1, 10.0, 0.043_472_746_168_861_44),
            (5, 20.0, 0.151_169_767_982_649_6),
            (0, 100.0, 0.019_985_850_304_223_12),
        ];
        for (n, x, want) in cases {
            let got = bessel_j(n, x);
            assert!((got - want).abs() < 1e-10, "J_{n}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn branches_agree_on_overlap() {
        for n in 0..18 {
            for i in 0..=40 {
                let x = 8.0 + 0.1 * i as f64;
                let (s, m) = bessel_j_branches(n, x);
                assert!((s - m).abs() < 1e-11, "n={n} x={x}: {s} vs {m}");
            }
        }
    }

    #[test]
    fn derivative_identity() {
        for &x in &[0.3, 1.7, 5.0, 11.9, 12.1, 30.0] {
            let h = 1e-5;
            let fd = (bessel_j(0, x + h) - bessel_j(0, x - h)) / (2.0 * h);
            assert!((fd + bessel_j(1, x)).abs() < 1e-8);
        }
    }

    #[test]
    fn first_neumann_root() {
        let a = neumann_root(1, 1).unwrap();
        assert!((a - 1.841_183_781_340_659).abs() < 1e-10);
        assert!((a * a - 3.3900).abs() < 1e-4);
        assert!(neumann_root(0, 1).unwrap() > a);
        assert!(neumann_root(1, 2).unwrap() > a);
        assert!((neumann_root(0, 1).unwrap() - 3.831_705_970_207_512).abs() < 1e-10);
        assert!((neumann_root(2, 1).unwrap() - 3.054_236_928_227_14).abs() < 1e-10);
    }

    #[test]
    fn all_roots_are_zeros_and_increase() {
        for n in 0..=16 {
            let mut prev = 0.0;
            for k in 1..=16 {
                let a = neumann_root(n, k).unwrap();
                assert!(bessel_j_prime(n, a).abs() <= 1e-9, "n={n} k={k}");
                assert!(a > prev);
                prev = a;
            }
        }
        assert!(neumann_root(17, 1).is_err());
        assert!(neumann_root(0, 0).is_err());
    }

    #[test]
    fn first_mode_is_foliated_and_antisymmetric() {
        let g = build_polar_grid(RadialDomain::unit_disk(), 24, 48).unwrap();
        let m = NeumannMode::new(1, 1, Parity::Cos, 1.0).unwrap();
        let f = eigenfield(&m, &g).unwrap();
        assert!((f.l2_norm() - 1.0).abs() < 1e-12);
        assert!(f.integral().abs() < 1e-12);
        let rep = symmetry_report(&f).unwrap();
        assert!(rep.foliated_defect <= 1e-8);
        assert!(rep.even_defect <= 1e-8);
        assert!(rep.antisym_defect <= 1e-8);
    }

    #[test]
    fn modes_orthogonal() {
        let g = build_polar_grid(RadialDomain::unit_disk(), 24, 48).unwrap();
        let a = eigenfield(&NeumannMode::new(1, 1, Parity::Cos, 1.0).unwrap(), &g).unwrap();
        let b = eigenfield(&NeumannMode::new(2, 1, Parity::Cos, 1.0).unwrap(), &g).unwrap();
        let ip = a.zip_with(&b, |x, y| x * y).unwrap().integral();
        assert!(ip.abs() < 1e-8);
    }

    #[test]
    fn eigenfield_rejects_annulus() {
        let g = build_polar_grid(RadialDomain::annulus(0.5, 1.0).unwrap(), 8, 16).unwrap();
        let m = NeumannMode::new(1, 1, Parity::Cos, 1.0).unwrap();
        assert!(eigenfield(&m, &g).is_err());
    }
}
