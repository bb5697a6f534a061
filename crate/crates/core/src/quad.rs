//! Quadrature rules shared by the transform and convolution machinery:
//! Gauss–Legendre panels, Gauss–Jacobi rules for kernels with endpoint
//! singularities, trapezoid weights on non-uniform grids, and a tanh-sinh
//! integrator used as an independent oracle in verification code.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::specfun;

/// Nodes and weights of a quadrature rule on some reference interval.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]`.
///
/// Nodes are found by Newton iteration on the Legendre recurrence; good to
/// machine precision for the modest `n` used here.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "empty rule");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            pp = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 1 {
        return (x, 1.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Jacobi rule on `[0, 1]` for the weight `(1 - x)^alpha * x^beta`,
/// `alpha, beta > -1`. Exact for polynomial factors up to degree `2n - 1`.
///
/// Built by the Golub–Welsch procedure: the symmetric tridiagonal Jacobi
/// matrix is diagonalised and the weights recovered from the first
/// eigenvector components.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Rule {
    assert!(n >= 1, "empty rule");
    assert!(alpha > -1.0 && beta > -1.0, "Jacobi exponents must exceed -1");
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let (a, b) = (alpha, beta);
    let apb = a + b;
    diag[0] = (b - a) / (apb + 2.0);
    for (k, d) in diag.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        *d = (b * b - a * a) / ((2.0 * kf + apb) * (2.0 * kf + apb + 2.0));
    }
    for (k, o) in off.iter_mut().enumerate() {
        // off[k] couples rows k and k+1, so this is B_{k+1} of the recurrence.
        let kf = (k + 1) as f64;
        let b2 = if k == 0 {
            4.0 * (1.0 + a) * (1.0 + b) / ((apb + 2.0) * (apb + 2.0) * (apb + 3.0))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + apb)
                / ((2.0 * kf + apb)
                    * (2.0 * kf + apb)
                    * (2.0 * kf + apb + 1.0)
                    * (2.0 * kf + apb - 1.0))
        };
        *o = b2.sqrt();
    }
    let (mut nodes, firsts) = tridiag_eigen(&mut diag, &mut off);
    // Total mass of (1-x)^a (1+x)^b on [-1,1].
    let mu0 = (apb + 1.0).exp2()
        * specfun::beta(a + 1.0, b + 1.0).expect("shifted Jacobi exponents are positive");
    let mut weights: Vec<f64> = firsts.iter().map(|z| mu0 * z * z).collect();
    // Map [-1,1] with weight (1-x)^a (1+x)^b onto [0,1] with (1-t)^a t^b:
    // t = (1+x)/2, and the 2^{a+b+1} mass factor is divided back out.
    for x in nodes.iter_mut() {
        *x = 0.5 * (*x + 1.0);
    }
    let scale = (-(apb + 1.0)).exp2();
    for w in weights.iter_mut() {
        *w *= scale;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| nodes[i].partial_cmp(&nodes[j]).unwrap());
    Rule {
        nodes: idx.iter().map(|&i| nodes[i]).collect(),
        weights: idx.iter().map(|&i| weights[i]).collect(),
    }
}

/// QL algorithm with implicit shifts for a symmetric tridiagonal matrix,
/// tracking only the first row of the eigenvector matrix (all Golub–Welsch
/// needs). Returns `(eigenvalues, first components)`.
fn tridiag_eigen(diag: &mut [f64], off: &mut [f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 80, "tridiagonal QL failed to converge");
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let bb = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - bb;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    (diag.to_vec(), z)
}

/// Trapezoid weights for a strictly increasing grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    assert!(n >= 2, "trapezoid needs at least two nodes");
    let mut w = vec![0.0; n];
    w[0] = 0.5 * (grid[1] - grid[0]);
    w[n - 1] = 0.5 * (grid[n - 1] - grid[n - 2]);
    for i in 1..n - 1 {
        w[i] = 0.5 * (grid[i + 1] - grid[i - 1]);
    }
    w
}

/// Tanh-sinh (double exponential) quadrature of `f` over `(a, b)`.
///
/// `f` is called as `f(x, dist)` where `dist` is the distance from `x` to the
/// nearer endpoint, computed in a cancellation-free form; integrands with
/// endpoint singularities should build the singular factor from `dist`.
/// Used as an independent cross-check oracle; it shares no machinery with the
/// Gauss rules above.
pub fn tanh_sinh<F: FnMut(f64, f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let pi_half = 0.5 * core::f64::consts::PI;
    let t_max = 6.0;
    let mut prev = f64::NAN;
    let mut total = 0.0;
    for level in 1..=11u32 {
        let h = 1.0 / f64::from(1u32 << level);
        let steps = (t_max / h) as i64;
        let mut sum = 0.0;
        for j in -steps..=steps {
            let t = h * j as f64;
            let u = pi_half * t.sinh();
            // Distance to the nearer endpoint, in a form that stays accurate
            // where tanh(u) rounds to +-1.
            let e = (-2.0 * u.abs()).exp();
            let dist = half * 2.0 * e / (1.0 + e);
            let x = if u <= 0.0 { a + dist } else { b - dist };
            if dist <= 0.0 {
                continue;
            }
            let dxdt = pi_half * half * t.cosh() / (u.cosh() * u.cosh());
            if !dxdt.is_finite() || dxdt.abs() < 1e-300 {
                continue;
            }
            let v = f(x, dist);
            if v.is_finite() {
                sum += v * dxdt;
            }
        }
        total = sum * h;
        if level >= 5 && (total - prev).abs() <= 1e-13 * total.abs().max(1.0) {
            break;
        }
        prev = total;
    }
    total
}
