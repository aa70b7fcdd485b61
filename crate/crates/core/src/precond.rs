//! Fast solver for `(A + mu W) x = y`, with `A` the grid stiffness matrix and `W`
//! the diagonal of quadrature weights: angular FFT, then one tridiagonal solve
//! in `r` per Fourier mode.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::PolarGrid;

pub(crate) struct Precond {
    n_r: usize,
    n_a: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Per mode `m` and ring `i` (index `m * n_r + i`): Thomas coefficients.
    cp: Vec<f64>,
    inv_den: Vec<f64>,
    sub: Vec<f64>,
}

impl Precond {
    pub(crate) fn new(grid: &PolarGrid, mu: f64) -> Self {
        let (n_r, n_a) = (grid.n_r, grid.n_a);
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n_a);
        let inv = planner.plan_fft_inverse(n_a);
        let kr = grid.kappa_r();
        let ka = grid.kappa_a();
        let mut sub = vec![0.0; n_r];
        for i in 1..n_r {
            sub[i] = -kr[i - 1];
        }
        let mut cp = vec![0.0; n_a * n_r];
        let mut inv_den = vec![0.0; n_a * n_r];
        for m in 0..n_a {
            let eig = 2.0 - 2.0 * (m as f64 * grid.da).cos();
            let base = m * n_r;
            let mut prev_cp = 0.0;
            for i in 0..n_r {
                let mut diag = ka[i] * eig + mu * grid.ring_weight(i);
                if i > 0 {
                    diag += kr[i - 1];
                }
                let sup = if i + 1 < n_r {
                    diag += kr[i];
                    -kr[i]
                } else {
                    0.0
                };
                let den = diag - sub[i] * prev_cp;
                inv_den[base + i] = 1.0 / den;
                cp[base + i] = sup / den;
                prev_cp = cp[base + i];
            }
        }
        Self {
            n_r,
            n_a,
            fwd,
            inv,
            cp,
            inv_den,
            sub,
        }
    }

    pub(crate) fn solve(&self, y: &[f64], out: &mut [f64]) {
        let (n_r, n_a) = (self.n_r, self.n_a);
        let mut buf: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for ring in buf.chunks_exact_mut(n_a) {
            self.fwd.process(ring);
        }
        for m in 0..n_a {
            let base = m * n_r;
            let mut prev = Complex64::new(0.0, 0.0);
            for i in 0..n_r {
                let k = i * n_a + m;
                let v = (buf[k] - prev * self.sub[i]) * self.inv_den[base + i];
                buf[k] = v;
                prev = v;
            }
            for i in (0..n_r.saturating_sub(1)).rev() {
                let k = i * n_a + m;
                let next = buf[k + n_a];
                buf[k] -= next * self.cp[base + i];
            }
        }
        let scale = 1.0 / n_a as f64;
        for (ring, dst) in buf.chunks_exact_mut(n_a).zip(out.chunks_exact_mut(n_a)) {
            self.inv.process(ring);
            for (d, c) in dst.iter_mut().zip(ring.iter()) {
                *d = c.re * scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_polar_grid, RadialDomain};

    #[test]
    fn inverts_shifted_stiffness() {
        for dom in [RadialDomain::unit_disk(), RadialDomain::annulus(0.5, 1.0).unwrap()] {
            let g = build_polar_grid(dom, 12, 16).unwrap();
            let mu = 0.7;
            let p = Precond::new(&g, mu);
            let x: Vec<f64> = (0..g.len()).map(|k| ((k * 37 % 11) as f64 - 5.0) * 0.1).collect();
            let mut y = vec![0.0; g.len()];
            g.apply_stiffness(&x, &mut y);
            for k in 0..g.len() {
                y[k] += mu * g.w[k] * x[k];
            }
            let mut back = vec![0.0; g.len()];
            p.solve(&y, &mut back);
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
        }
    }
}
