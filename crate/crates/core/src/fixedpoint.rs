//! The affine convolution operator whose fixed point is the innermost Borel
//! symbol `w(u, m, eps)`, together with the Picard iteration that finds it.
//!
//! Every kernel appearing in the prepared equation has the shape
//! `u^{k'} int_0^{u^{k'}} (u^{k'} - s)^{a-1} s^b w(s^{1/k'}, m) ds/s`; the
//! parametrisation `s = (u y)^{k'}` turns it into a fixed Gauss-Jacobi
//! quadrature in `y` with weight `(1-y)^{a-1} y^{k' b}`, whose interpolation
//! stencils depend only on the output radius. The operator therefore never
//! mixes rays and is assembled once per grid.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
use num_traits::Float;

use crate::banach::{norm_weighted_diff, NormParams, RadialEval, SampledSymbol};
use crate::opalgebra::{self, coeff_to_f64, ExponentTable, OpAlgebraError};
use crate::problem::{freq_profile, ForcingProfile, ProblemSpec};
use crate::quad::{self, Rule};
use crate::specfun;

#[derive(Debug, Clone, PartialEq)]
pub enum FixedPointError {
    Argument(&'static str),
    /// Structural validation failed before the operator was assembled.
    Structure(OpAlgebraError),
    /// Observed expansion instead of contraction: advisory to enlarge the
    /// annulus inner radius (scale `Q` up) or shrink the `C_l` amplitudes.
    NonContraction { ratio: f64 },
    /// Iteration budget exhausted before the tolerance was met.
    Budget { last_delta: f64 },
    /// Forcing series truncation insufficient.
    Truncation { required: usize },
}

impl fmt::Display for FixedPointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixedPointError::Argument(m) => write!(f, "argument error: {m}"),
            FixedPointError::Structure(e) => write!(f, "structure: {e}"),
            FixedPointError::NonContraction { ratio } => write!(
                f,
                "iteration is not contracting (ratio {ratio}); enlarge the annulus inner \
                 radius r_(Q,R_D,1) or shrink the C_l amplitudes"
            ),
            FixedPointError::Budget { last_delta } => {
                write!(f, "iteration budget exhausted at step size {last_delta}")
            }
            FixedPointError::Truncation { required } => {
                write!(f, "forcing truncation too low; need about {required} terms")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FixedPointError {}

// ---------------------------------------------------------------------------
// Forcing symbol
// ---------------------------------------------------------------------------

/// Truncation order for the forcing series at radius `r_max`: adaptive when
/// the profile requests it, otherwise the fixed order is checked against the
/// 1e-10 tail target.
pub fn psi_truncation(
    profile: &ForcingProfile,
    k1: u32,
    r_max: f64,
) -> Result<usize, FixedPointError> {
    let adaptive = adaptive_psi_terms(profile, k1, r_max, 1e-16);
    if profile.truncation == 0 {
        return Ok(adaptive);
    }
    let minimum = adaptive_psi_terms(profile, k1, r_max, 1e-10);
    if profile.truncation < minimum {
        return Err(FixedPointError::Truncation { required: minimum });
    }
    Ok(profile.truncation)
}

fn adaptive_psi_terms(profile: &ForcingProfile, k1: u32, r_max: f64, rtol: f64) -> usize {
    // Work with term logarithms: the scales (1/T0)^n overflow long before
    // the terms themselves stop mattering.
    let lx = (r_max / profile.t0).ln();
    let k1 = k1 as f64;
    let mut peak = f64::NEG_INFINITY;
    let mut n = 0usize;
    loop {
        n += 1;
        let lt = n as f64 * lx - specfun::ln_gamma(n as f64 / k1 + 1.0).unwrap_or(f64::INFINITY);
        peak = peak.max(lt);
        if n > 4 && lt < peak + rtol.ln() {
            return n + 2;
        }
        if n > 20_000 {
            return n;
        }
    }
}

/// Log-scale of mode `n`: `ln(K0) + n ln(1/T0) - ln Gamma(n/k1 + 1)`.
fn ln_mode_over_gamma(profile: &ForcingProfile, k1: u32, n: usize) -> f64 {
    profile.k0.ln() + n as f64 * (1.0 / profile.t0).ln()
        - specfun::ln_gamma(n as f64 / k1 as f64 + 1.0).expect("positive argument")
}

/// Pointwise forcing Borel symbol
/// `psi(u, m, eps) = sum_{n>=1} psi_n(m, eps) u^n / Gamma(n/k1 + 1)`.
pub fn forcing_psi(
    spec: &ProblemSpec,
    u: Complex64,
    m: f64,
    _eps: Complex64,
) -> Result<Complex64, FixedPointError> {
    let n_terms = psi_truncation(&spec.forcing, spec.k1, u.norm().max(1e-12))?;
    let mut acc = Complex64::new(0.0, 0.0);
    if spec.forcing.rule != crate::problem::PsiRule::Zero {
        let (r, theta) = u.to_polar();
        let lr = r.max(1e-300).ln();
        for n in 1..=n_terms {
            if !mode_active(&spec.forcing, n as u32) {
                continue;
            }
            let lt = ln_mode_over_gamma(&spec.forcing, spec.k1, n) + n as f64 * lr;
            if lt < -700.0 {
                continue;
            }
            acc += Complex64::from_polar(lt.exp(), n as f64 * theta);
        }
    }
    Ok(acc * freq_profile(spec.beta, spec.mu, m))
}

fn mode_active(profile: &ForcingProfile, n: u32) -> bool {
    match profile.rule {
        crate::problem::PsiRule::Zero => false,
        crate::problem::PsiRule::SingleMode { n: n0 } => n == n0,
        crate::problem::PsiRule::Geometric => true,
    }
}

/// Forcing symbol on full grids, with its exact origin slope
/// `psi_1(m) / Gamma(1/k1 + 1)`.
pub fn build_psi_symbol(
    spec: &ProblemSpec,
    directions: Vec<f64>,
    radial: Vec<f64>,
    freq: Vec<f64>,
) -> Result<SampledSymbol, FixedPointError> {
    let r_max = *radial.last().ok_or(FixedPointError::Argument("empty radial grid"))?;
    let n_terms = psi_truncation(&spec.forcing, spec.k1, r_max)?;
    let k1 = spec.k1 as f64;
    let mut sym = SampledSymbol::zeros(directions, radial, freq)
        .map_err(|_| FixedPointError::Argument("bad psi grids"))?;
    // Log-scales keep the per-mode coefficients finite far beyond the range
    // where (1/T0)^n overflows.
    let lscales: Vec<f64> =
        (1..=n_terms).map(|n| ln_mode_over_gamma(&spec.forcing, spec.k1, n)).collect();
    let active: Vec<bool> = (1..=n_terms).map(|n| mode_active(&spec.forcing, n as u32)).collect();
    let phi: Vec<f64> =
        sym.freq().iter().map(|&m| freq_profile(spec.beta, spec.mu, m)).collect();
    let (nd, nr, nm) = (sym.directions().len(), sym.radial().len(), sym.freq().len());
    for d in 0..nd {
        let theta = sym.directions()[d];
        for i in 0..nr {
            let lr = sym.radial()[i].ln();
            let mut acc = Complex64::new(0.0, 0.0);
            for (nm1, (ls, act)) in lscales.iter().zip(&active).enumerate() {
                if !act {
                    continue;
                }
                let n = (nm1 + 1) as f64;
                let lt = ls + n * lr;
                if lt < -700.0 {
                    continue;
                }
                acc += Complex64::from_polar(lt.exp(), n * theta);
            }
            for j in 0..nm {
                sym.set(d, i, j, acc * phi[j]);
            }
        }
    }
    let slope0 = spec.forcing.mode_scale(1)
        / specfun::gamma(1.0 / k1 + 1.0).expect("positive argument");
    sym.set_origin_slope(phi.iter().map(|&p| Complex64::new(slope0 * p, 0.0)).collect());
    Ok(sym)
}

// ---------------------------------------------------------------------------
// Radial convolution
// ---------------------------------------------------------------------------

/// Standalone radial convolution
/// `u^{k'} int_0^{u^{k'}} (u^{k'}-s)^{a-1} s^b w(s^{1/k'}, m) ds/s`
/// for `u = r e^{i theta_d}` on a stored ray.
///
/// Uses `s = (u y)^{k'}`, which keeps `s^{1/k'}` on the ray and yields the
/// Gauss-Jacobi weight `(1-y)^{a-1} y^{k' b}` against a smooth factor.
pub fn radial_convolution(
    w: &SampledSymbol,
    d: usize,
    j: usize,
    r: f64,
    a: f64,
    b: f64,
    kprime: u32,
    n_nodes: usize,
) -> Result<Complex64, FixedPointError> {
    if !(a > 0.0) || b * kprime as f64 <= -1.0 {
        return Err(FixedPointError::Argument("kernel exponents out of range"));
    }
    let rule = quad::gauss_jacobi(n_nodes.max(8), a - 1.0, kprime as f64 * b);
    let kp = kprime as f64;
    let theta = w.directions()[d];
    let mut acc = Complex64::new(0.0, 0.0);
    for (y, gw) in rule.nodes.iter().zip(&rule.weights) {
        let sigma: f64 = (0..kprime).map(|i| y.powi(i as i32)).sum();
        let wv = w
            .interp_radial(d, j, r * y)
            .map_err(|_| FixedPointError::Argument("convolution radius beyond grid"))?;
        acc += wv * (gw * sigma.powf(a - 1.0) / y);
    }
    // u^{k'(a+b)} with the ray-aligned branch.
    let pw = kp * (a + b);
    let upow = Complex64::from_polar(r.powf(pw), theta * pw);
    Ok(acc * upow * kp)
}

/// Frequency convolution
/// `(1/sqrt(2 pi)) int C(m - m1) R_l(i m1) g(m1) dm1` on the stored grid by
/// trapezoid quadrature; `c` is evaluated analytically at off-grid arguments.
pub fn fourier_convolve<C: Fn(f64) -> Complex64>(
    mgrid: &[f64],
    trap_weights: &[f64],
    c: C,
    rl: &crate::problem::ComplexPoly,
    g_slice: &[Complex64],
    m: f64,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((&m1, &wt), &g) in mgrid.iter().zip(trap_weights).zip(g_slice) {
        acc += c(m - m1) * rl.eval_im(m1) * g * wt;
    }
    acc / (2.0 * core::f64::consts::PI).sqrt()
}

// ---------------------------------------------------------------------------
// The operator
// ---------------------------------------------------------------------------

/// One radial-convolution kernel of the prepared equation, with everything
/// that does not depend on the input symbol precomputed: per output radius,
/// the quadrature-plus-interpolation network collapsed to one real weight
/// per touched radial row, plus an origin-slope weight.
struct RcKernel {
    /// Scalar coefficient multiplying the convolution.
    scalar: f64,
    /// Power `k'(a+b)` of `u` in front (always an integer here).
    upow: u32,
    /// Per output radius: (first touched row, contiguous row weights).
    rows: Vec<(usize, Vec<f64>)>,
    /// Per output radius: weight multiplying the origin slope.
    origin: Vec<f64>,
}

/// Which sum of the prepared equation a kernel belongs to.
enum KernelRole {
    /// Leading sums (Tahara and Euler corrections), weighted by `R_D(im)`.
    Leading,
    /// Index-set sums, entering through the frequency convolution of entry
    /// `idx`.
    Index { idx: usize },
}

/// The affine operator `H_eps` on a fixed grid family. Constructing it
/// validates the problem structure and freezes all coefficient tables.
pub struct HOperator<'a> {
    spec: &'a ProblemSpec,
    pub exponents: ExponentTable,
    kernels: Vec<(KernelRole, RcKernel)>,
    /// Forcing symbol on the same grids.
    psi: SampledSymbol,
    /// 1 / P_m(u) per (direction, radius, freq).
    p_inv: Vec<Complex64>,
    /// R_D(im) on the frequency grid.
    rd_im: Vec<Complex64>,
    /// Per index entry: R_l(im) on the grid and the convolution matrix
    /// `amplitude * phi(m_j - m_j1) * trapezoid_j1 / sqrt(2 pi)`.
    index_tables: Vec<(Vec<Complex64>, Vec<f64>)>,
    grids: (usize, usize, usize),
}

fn gj_cached(cache: &mut BTreeMap<(u64, u64), Rule>, n: usize, alpha: f64, beta: f64) -> Rule {
    let key = (alpha.to_bits(), beta.to_bits());
    cache
        .entry(key)
        .or_insert_with(|| quad::gauss_jacobi(n, alpha, beta))
        .clone()
}

impl<'a> HOperator<'a> {
    /// Assemble the operator for the given ray directions and grids.
    pub fn new(
        spec: &'a ProblemSpec,
        directions: Vec<f64>,
        radial: Vec<f64>,
        freq: Vec<f64>,
        gj_nodes: usize,
    ) -> Result<Self, FixedPointError> {
        let exponents =
            opalgebra::validate_structure(spec).map_err(FixedPointError::Structure)?;
        let psi = build_psi_symbol(spec, directions, radial, freq)?;
        let kp = spec.kprime;
        let kpf = kp as f64;
        let k_pow_dd = (spec.k as f64).powi(spec.delta_d as i32);
        let mut cache: BTreeMap<(u64, u64), Rule> = BTreeMap::new();
        let mut kernels: Vec<(KernelRole, RcKernel)> = Vec::new();
        let gamma = |x: f64| specfun::gamma(x).expect("positive kernel exponent");
        let mut push_kernel = |kernels: &mut Vec<(KernelRole, RcKernel)>,
                               cache: &mut BTreeMap<(u64, u64), Rule>,
                               role: KernelRole,
                               scalar: f64,
                               a: f64,
                               b: u32|
         -> Result<(), FixedPointError> {
            let rule = gj_cached(cache, gj_nodes, a - 1.0, kpf * b as f64);
            let mut node_coeff = Vec::with_capacity(rule.len());
            for (y, gw) in rule.nodes.iter().zip(&rule.weights) {
                let sigma: f64 = (0..kp).map(|i| y.powi(i as i32)).sum();
                node_coeff.push(kpf * gw * sigma.powf(a - 1.0) / y);
            }
            // Collapse quadrature x interpolation into per-row weights.
            let nr = psi.radial().len();
            let mut rows = Vec::with_capacity(nr);
            let mut origin = Vec::with_capacity(nr);
            for &r in psi.radial() {
                let mut dense = vec![0.0f64; nr];
                let mut org = 0.0f64;
                for (&y, &coef) in rule.nodes.iter().zip(&node_coeff) {
                    let plan = psi
                        .radial_plan(r * y)
                        .map_err(|_| FixedPointError::Argument("convolution node beyond grid"))?;
                    match plan {
                        RadialEval::Origin { r: rr } => org += coef * rr,
                        RadialEval::Stencil { base, w } => {
                            for (aa, &la) in w.iter().enumerate() {
                                dense[base + aa] += coef * la;
                            }
                        }
                    }
                }
                let first = dense.iter().position(|&x| x != 0.0).unwrap_or(0);
                let last = dense.iter().rposition(|&x| x != 0.0).unwrap_or(0);
                rows.push((first, dense[first..=last.max(first)].to_vec()));
                origin.push(org);
            }
            let upow = (kpf * (a + b as f64)).round() as u32;
            kernels.push((role, RcKernel { scalar, upow, rows, origin }));
            Ok(())
        };
        // Tahara correction of the leading block: p = 1..m_D-1,
        // kernel (u^{k'}-s)^{m_D-p-1} s^p, coefficient
        // k^{dD} A_{m_D,p} (k')^p / Gamma(m_D - p).
        let tahara_md = opalgebra::tahara_expand(kp, spec.m_d)
            .map_err(FixedPointError::Structure)?;
        for p in 1..spec.m_d {
            let a_coeff = coeff_to_f64(&tahara_md[(p - 1) as usize]);
            let scalar = k_pow_dd * a_coeff * kpf.powi(p as i32) / gamma((spec.m_d - p) as f64);
            push_kernel(
                &mut kernels,
                &mut cache,
                KernelRole::Leading,
                scalar,
                (spec.m_d - p) as f64,
                p,
            )?;
        }
        // Euler corrections: q = 1..m_D-1 with d_q = (m_D - q) k', plus their
        // own Tahara sub-corrections.
        let euler_md =
            opalgebra::euler_power_expand(spec.m_d).map_err(FixedPointError::Structure)?;
        for q in 1..spec.m_d {
            let a_ql = coeff_to_f64(&crate::opalgebra::Coeff::from_integer(
                euler_md[(q - 1) as usize].clone(),
            ));
            let d_q = exponents.d[(q - 1) as usize] as f64;
            let scalar = k_pow_dd * a_ql * kpf.powi(q as i32) / gamma(d_q / kpf);
            push_kernel(&mut kernels, &mut cache, KernelRole::Leading, scalar, d_q / kpf, q)?;
            if q >= 2 {
                let tahara_q =
                    opalgebra::tahara_expand(kp, q).map_err(FixedPointError::Structure)?;
                for p in 1..q {
                    let a_qp = coeff_to_f64(&tahara_q[(p - 1) as usize]);
                    let aa = (d_q + kpf * (q - p) as f64) / kpf;
                    let scalar = k_pow_dd * a_ql * a_qp * kpf.powi(p as i32) / gamma(aa);
                    push_kernel(&mut kernels, &mut cache, KernelRole::Leading, scalar, aa, p)?;
                }
            }
        }
        // Index-set sums.
        for (idx, pair) in spec.index_set.iter().enumerate() {
            let k_pow_l1 = (spec.k as f64).powi(pair.l1 as i32);
            if pair.l2 == 0 {
                // Pure monomial tau^{k l1}: a single kernel with b = 0.
                let aa = (spec.k * pair.l1) as f64 / kpf;
                let scalar = k_pow_l1 / gamma(aa);
                push_kernel(&mut kernels, &mut cache, KernelRole::Index { idx }, scalar, aa, 0)?;
                continue;
            }
            let euler_l2 =
                opalgebra::euler_power_expand(pair.l2).map_err(FixedPointError::Structure)?;
            for q in 1..=pair.l2 {
                let a_ql = coeff_to_f64(&crate::opalgebra::Coeff::from_integer(
                    euler_l2[(q - 1) as usize].clone(),
                ));
                let e_q = exponents.e[idx][(q - 1) as usize] as f64;
                let scalar = k_pow_l1 * a_ql * kpf.powi(q as i32) / gamma(e_q / kpf);
                push_kernel(
                    &mut kernels,
                    &mut cache,
                    KernelRole::Index { idx },
                    scalar,
                    e_q / kpf,
                    q,
                )?;
                if q >= 2 {
                    let tahara_q =
                        opalgebra::tahara_expand(kp, q).map_err(FixedPointError::Structure)?;
                    for p in 1..q {
                        let a_qp = coeff_to_f64(&tahara_q[(p - 1) as usize]);
                        let aa = (e_q + kpf * (q - p) as f64) / kpf;
                        let scalar = k_pow_l1 * a_ql * a_qp * kpf.powi(p as i32) / gamma(aa);
                        push_kernel(
                            &mut kernels,
                            &mut cache,
                            KernelRole::Index { idx },
                            scalar,
                            aa,
                            p,
                        )?;
                    }
                }
            }
        }
        // 1 / P_m(u) over the grid nodes.
        let (nd, nr, nm) = (psi.directions().len(), psi.radial().len(), psi.freq().len());
        let mut p_inv = vec![Complex64::new(0.0, 0.0); nd * nr * nm];
        for d in 0..nd {
            let theta = psi.directions()[d];
            for i in 0..nr {
                let u = Complex64::from_polar(psi.radial()[i], theta);
                for j in 0..nm {
                    let p = spec.p_m(psi.freq()[j], u);
                    p_inv[(d * nr + i) * nm + j] = Complex64::new(1.0, 0.0) / p;
                }
            }
        }
        let rd_im: Vec<Complex64> =
            psi.freq().iter().map(|&m| spec.rd_poly.eval_im(m)).collect();
        let trap_weights = quad::trapezoid_weights(psi.freq());
        let sqrt_tau = (2.0 * core::f64::consts::PI).sqrt();
        let mut index_tables = Vec::with_capacity(spec.index_set.len());
        for (idx, _) in spec.index_set.iter().enumerate() {
            let rl: Vec<Complex64> =
                psi.freq().iter().map(|&m| spec.rl_polys[idx].eval_im(m)).collect();
            let amp = spec.coeff_profiles[idx].amplitude;
            let mut cmat = vec![0.0f64; nm * nm];
            for j in 0..nm {
                for j1 in 0..nm {
                    cmat[j * nm + j1] = amp
                        * freq_profile(spec.beta, spec.mu, psi.freq()[j] - psi.freq()[j1])
                        * trap_weights[j1]
                        / sqrt_tau;
                }
            }
            index_tables.push((rl, cmat));
        }
        Ok(HOperator {
            spec,
            exponents,
            kernels,
            p_inv,
            rd_im,
            index_tables,
            grids: (nd, nr, nm),
            psi,
        })
    }

    pub fn psi_symbol(&self) -> &SampledSymbol {
        &self.psi
    }

    /// Apply `H_eps` to a symbol on the operator's grids.
    pub fn apply(&self, w: &SampledSymbol, eps: Complex64) -> SampledSymbol {
        let (nd, nr, nm) = self.grids;
        let mut out = self.psi.clone();
        // Epsilon powers per index entry.
        let eps_pow: Vec<Complex64> = self
            .spec
            .index_set
            .iter()
            .zip(&self.spec.delta_l)
            .map(|(pair, &dl)| eps.powu(dl - self.spec.k * pair.l1))
            .collect();
        let mut rc_buf = vec![Complex64::new(0.0, 0.0); nm];
        let mut conv_buf = vec![Complex64::new(0.0, 0.0); nm];
        for d in 0..nd {
            let theta = w.directions()[d];
            for i in 0..nr {
                let r = w.radial()[i];
                // Accumulate all terms at this (d, i) into acc[j], then
                // divide by P_m(u) and add psi/P_m.
                let mut acc = vec![Complex64::new(0.0, 0.0); nm];
                for (role, kern) in &self.kernels {
                    // RC value for all frequencies at once.
                    for v in rc_buf.iter_mut() {
                        *v = Complex64::new(0.0, 0.0);
                    }
                    let (first, weights) = &kern.rows[i];
                    for (off, &cw) in weights.iter().enumerate() {
                        if cw == 0.0 {
                            continue;
                        }
                        let idx0 = w.index(d, *first + off, 0);
                        let vals = &w.values()[idx0..idx0 + nm];
                        for (o, v) in rc_buf.iter_mut().zip(vals) {
                            *o += v * cw;
                        }
                    }
                    let org = kern.origin[i];
                    if org != 0.0 {
                        for (o, s) in rc_buf.iter_mut().zip(w.origin_slope()) {
                            *o += s * org;
                        }
                    }
                    let upow = Complex64::from_polar(
                        r.powi(kern.upow as i32),
                        theta * kern.upow as f64,
                    ) * kern.scalar;
                    match role {
                        KernelRole::Leading => {
                            for j in 0..nm {
                                acc[j] += rc_buf[j] * upow * self.rd_im[j];
                            }
                        }
                        KernelRole::Index { idx } => {
                            let (rl, cmat) = &self.index_tables[*idx];
                            for j in 0..nm {
                                conv_buf[j] = rc_buf[j] * rl[j];
                            }
                            let fac = eps_pow[*idx] * upow;
                            for j in 0..nm {
                                let row = &cmat[j * nm..(j + 1) * nm];
                                let mut conv = Complex64::new(0.0, 0.0);
                                for (cv, &cw) in conv_buf.iter().zip(row) {
                                    conv += cv * cw;
                                }
                                acc[j] += conv * fac;
                            }
                        }
                    }
                }
                for j in 0..nm {
                    let pinv = self.p_inv[(d * nr + i) * nm + j];
                    let v = (acc[j] + self.psi.value(d, i, j)) * pinv;
                    out.set(d, i, j, v);
                }
            }
        }
        // Origin slope of the image: every convolution term vanishes at
        // least quadratically, so the slope is psi'(0)/Q(im).
        let slope: Vec<Complex64> = self
            .psi
            .origin_slope()
            .iter()
            .zip(self.psi.freq())
            .map(|(s, &m)| s / self.spec.q_poly.eval_im(m))
            .collect();
        out.set_origin_slope(slope);
        out
    }
}

/// Per-step diagnostics of the Picard iteration.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    /// Consecutive-difference ratios `|w_{n+1}-w_n| / |w_n - w_{n-1}|`.
    pub ratios: Vec<f64>,
    pub iterations: usize,
    /// Final step size in the weighted norm.
    pub final_delta: f64,
    /// Weighted norm of the returned fixed point (the certified ball radius).
    pub ball_radius: f64,
    /// Residual `|H(w) - w|` after convergence, in the weighted norm.
    pub residual: f64,
}

/// Picard iteration from `w_0 = 0` until the weighted-norm step drops below
/// `tol`. Returns the iterate together with the contraction report.
pub fn solve_fixed_point(
    op: &HOperator<'_>,
    eps: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<(SampledSymbol, ContractionReport), FixedPointError> {
    let spec = op.spec;
    let params = NormParams {
        nu: (1.0 / spec.forcing.t0).powi(spec.k1 as i32),
        beta: spec.beta,
        mu: spec.mu,
        growth_order: spec.k1 as f64,
    };
    let mut w = op.psi_symbol().clone();
    for v in w.values_mut() {
        *v = Complex64::new(0.0, 0.0);
    }
    w.set_origin_slope(vec![Complex64::new(0.0, 0.0); w.freq().len()]);
    let mut ratios = Vec::new();
    let mut prev_delta = f64::NAN;
    let mut bad_ratio_streak = 0;
    for it in 1..=max_iter.max(1) {
        let next = op.apply(&w, eps);
        let delta = norm_weighted_diff(&next, &w, &params);
        if !prev_delta.is_nan() && prev_delta > 0.0 {
            let ratio = delta / prev_delta;
            ratios.push(ratio);
            if ratio >= 1.0 {
                bad_ratio_streak += 1;
                if bad_ratio_streak >= 3 {
                    return Err(FixedPointError::NonContraction { ratio });
                }
            } else {
                bad_ratio_streak = 0;
            }
        }
        w = next;
        if delta < tol {
            let image = op.apply(&w, eps);
            let residual = norm_weighted_diff(&image, &w, &params);
            let ball_radius = crate::banach::norm_weighted(&w, &params);
            return Ok((
                w,
                ContractionReport {
                    ratios,
                    iterations: it,
                    final_delta: delta,
                    ball_radius,
                    residual,
                },
            ));
        }
        prev_delta = delta;
    }
    Err(FixedPointError::Budget { last_delta: prev_delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banach::{freq_grid, norm_weighted, radial_grid};
    use crate::problem::testcfg::example_spec;
    use crate::problem::{ComplexPoly, IndexPair};

    #[test]
    fn radial_convolution_of_linear_symbol_matches_beta() {
        // w = u: the convolution collapses to u^{k'(a+b)+1} B(a, b + 1/k').
        let cases = [(1.5f64, 2.0f64, 2u32), (0.5, 1.0, 2), (2.0, 0.0, 3), (1.0, 1.0, 1), (3.5, 2.0, 2)];
        for &(a, b, kp) in &cases {
            let radial = radial_grid(1e-6, 2.0, 1.04);
            let w = SampledSymbol::from_fn(
                alloc::vec![0.4],
                radial,
                alloc::vec![0.0],
                |_, u, _| u,
                |_| Complex64::new(1.0, 0.0),
            )
            .unwrap();
            let r = 1.3;
            let got = radial_convolution(&w, 0, 0, r, a, b, kp, 40).unwrap();
            let u = Complex64::from_polar(r, 0.4);
            let pw = kp as f64 * (a + b);
            let want = Complex64::from_polar(r.powf(pw), 0.4 * pw)
                * u
                * specfun::beta(a, b + 1.0 / kp as f64).unwrap();
            let rel = (got - want).norm() / want.norm();
            assert!(rel < 1e-10, "a={a} b={b} k'={kp}: rel {rel:.2e}");
        }
    }

    #[test]
    fn radial_convolution_elementary_case() {
        // a=1, b=1, k'=1, w=u: u int_0^u s ds = u^3/2.
        let radial = radial_grid(1e-6, 2.0, 1.05);
        let w = SampledSymbol::from_fn(
            alloc::vec![0.0],
            radial,
            alloc::vec![0.0],
            |_, u, _| u,
            |_| Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let got = radial_convolution(&w, 0, 0, 1.2, 1.0, 1.0, 1, 24).unwrap();
        let want = Complex64::new(1.2f64.powi(3) / 2.0, 0.0);
        assert!((got - want).norm() < 1e-12 * want.norm());
        // w = 0 gives 0.
        let z = SampledSymbol::zeros(alloc::vec![0.0], w.radial().to_vec(), alloc::vec![0.0]).unwrap();
        let got = radial_convolution(&z, 0, 0, 1.2, 1.0, 1.0, 1, 24).unwrap();
        assert_eq!(got, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fourier_convolution_mollifier_approximates_identity() {
        let grid = freq_grid(1.0, 1e-10, 3.0, 0.02, 1.02);
        let w = quad::trapezoid_weights(&grid);
        let g: Vec<Complex64> =
            grid.iter().map(|&m| Complex64::new((-0.3 * m * m).exp(), 0.1 * m)).collect();
        let rl = ComplexPoly::constant(1.0);
        let sqrt_tau = (2.0 * core::f64::consts::PI).sqrt();
        let mut errs = Vec::new();
        for &sigma in &[0.2f64, 0.05] {
            // Normalised so the convolution tends to g(m).
            let c = move |x: f64| {
                Complex64::new(
                    sqrt_tau / (sigma * (2.0 * core::f64::consts::PI).sqrt())
                        * (-(x * x) / (2.0 * sigma * sigma)).exp(),
                    0.0,
                )
            };
            let m0 = 0.7;
            let got = fourier_convolve(&grid, &w, c, &rl, &g, m0);
            let want_idx = grid.iter().position(|&m| (m - m0).abs() < 1e-9).unwrap();
            let err = (got - g[want_idx]).norm();
            errs.push(err);
        }
        assert!(errs[1] < errs[0] * 0.3, "mollifier error must shrink: {errs:?}");
        // C = 0 gives 0.
        let zero = |_: f64| Complex64::new(0.0, 0.0);
        let got = fourier_convolve(&grid, &w, zero, &rl, &g, 0.0);
        assert_eq!(got, Complex64::new(0.0, 0.0));
    }

    fn small_grids() -> (Vec<f64>, Vec<f64>) {
        (radial_grid(1e-6, 1.2, 1.05), freq_grid(1.0, 1e-9, 1.5, 0.25, 1.2))
    }

    #[test]
    fn h_of_zero_is_psi_over_p() {
        let spec = example_spec();
        let (radial, freq) = small_grids();
        let dirs = alloc::vec![core::f64::consts::PI / 6.0];
        let op = HOperator::new(&spec, dirs.clone(), radial.clone(), freq.clone(), 24).unwrap();
        let mut zero = op.psi_symbol().clone();
        for v in zero.values_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        zero.set_origin_slope(alloc::vec![Complex64::new(0.0, 0.0); freq.len()]);
        let img = op.apply(&zero, Complex64::new(0.05, 0.0));
        for i in 0..radial.len() {
            let u = Complex64::from_polar(radial[i], dirs[0]);
            for (j, &m) in freq.iter().enumerate() {
                let psi = forcing_psi(&spec, u, m, Complex64::new(0.05, 0.0)).unwrap();
                let want = psi / spec.p_m(m, u);
                let got = img.value(0, i, j);
                assert!(
                    (got - want).norm() <= 1e-12 * want.norm().max(1e-300),
                    "i={i} j={j}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn h_is_psi_over_p_whenever_structure_degenerates() {
        // m_D = 1 and I empty: no convolution terms at all, so H(w) = psi/P
        // for every w.
        let mut spec = example_spec();
        spec.k = 2;
        spec.kprime = 2;
        spec.delta_d = 1;
        spec.m_d = 1;
        spec.index_set.clear();
        spec.delta_l.clear();
        spec.rl_polys.clear();
        spec.coeff_profiles.clear();
        let (radial, freq) = small_grids();
        let op = HOperator::new(&spec, alloc::vec![0.9], radial.clone(), freq.clone(), 24).unwrap();
        let w = SampledSymbol::from_fn(
            alloc::vec![0.9],
            radial,
            freq,
            |_, u, m| u * u * Complex64::new((-(m * m)).exp(), 0.3),
            |_| Complex64::new(0.0, 0.0),
        )
        .unwrap();
        let img = op.apply(&w, Complex64::new(0.02, 0.01));
        let img0 = op.apply(
            &{
                let mut z = w.clone();
                for v in z.values_mut() {
                    *v = Complex64::new(0.0, 0.0);
                }
                z
            },
            Complex64::new(0.02, 0.01),
        );
        for (a, b) in img.values().iter().zip(img0.values()) {
            assert!((a - b).norm() <= 1e-14 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn operator_is_affine_in_the_symbol() {
        let spec = example_spec();
        let (radial, freq) = small_grids();
        let dirs = alloc::vec![core::f64::consts::PI / 6.0];
        let op = HOperator::new(&spec, dirs.clone(), radial.clone(), freq.clone(), 24).unwrap();
        let eps = Complex64::new(0.04, 0.02);
        let w1 = SampledSymbol::from_fn(
            dirs.clone(),
            radial.clone(),
            freq.clone(),
            |_, u, m| u * Complex64::new(1.0 / (1.0 + m * m), 0.2),
            |m| Complex64::new(1.0 / (1.0 + m * m), 0.2),
        )
        .unwrap();
        let w2 = SampledSymbol::from_fn(
            dirs.clone(),
            radial.clone(),
            freq.clone(),
            |_, u, m| u * u * Complex64::new(0.0, (-m.abs()).exp()),
            |_| Complex64::new(0.0, 0.0),
        )
        .unwrap();
        let mut zero = w1.clone();
        for v in zero.values_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        zero.set_origin_slope(alloc::vec![Complex64::new(0.0, 0.0); freq.len()]);
        let (alpha, beta) = (1.7, -0.6);
        let mut combo = w1.clone();
        combo.axpy(alpha, &w2, beta);
        let h0 = op.apply(&zero, eps);
        let h_combo = op.apply(&combo, eps);
        let h1 = op.apply(&w1, eps);
        let h2 = op.apply(&w2, eps);
        // H(aw1 + bw2) - H(0) = a(H(w1) - H(0)) + b(H(w2) - H(0)).
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for idx in 0..h0.values().len() {
            let lhs = h_combo.values()[idx] - h0.values()[idx];
            let rhs = (h1.values()[idx] - h0.values()[idx]) * alpha
                + (h2.values()[idx] - h0.values()[idx]) * beta;
            worst = worst.max((lhs - rhs).norm());
            scale = scale.max(rhs.norm());
        }
        assert!(worst <= 1e-9 * scale.max(1e-300), "affine defect {worst:.2e} at scale {scale:.2e}");
    }

    #[test]
    fn zero_forcing_fixed_point_is_zero_in_one_step() {
        let mut spec = example_spec();
        spec.forcing.rule = crate::problem::PsiRule::Zero;
        let (radial, freq) = small_grids();
        let op = HOperator::new(&spec, alloc::vec![0.5], radial, freq, 24).unwrap();
        let (w, report) = solve_fixed_point(&op, Complex64::new(0.05, 0.0), 1e-10, 10).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(w.values().iter().all(|v| v.norm() == 0.0));
        assert_eq!(report.residual, 0.0);
    }

    #[test]
    fn truncation_too_low_reported_with_requirement() {
        let mut spec = example_spec();
        spec.forcing.truncation = 2;
        let (radial, freq) = small_grids();
        match HOperator::new(&spec, alloc::vec![0.5], radial, freq, 24) {
            Err(FixedPointError::Truncation { required }) => assert!(required > 2),
            other => panic!("expected truncation error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn example_fixed_point_contracts_on_small_grids() {
        let spec = example_spec();
        let (radial, freq) = small_grids();
        let op = HOperator::new(&spec, alloc::vec![core::f64::consts::PI / 6.0], radial, freq, 32)
            .unwrap();
        let tol = 1e-10;
        let (w, report) = solve_fixed_point(&op, Complex64::new(0.05, 0.0), tol, 60).unwrap();
        assert!(report.residual <= 2.0 * tol, "residual {}", report.residual);
        // Observed contraction with comfortable margin under the paper's 1/2.
        let worst = report.ratios.iter().cloned().fold(0.0, f64::max);
        assert!(worst <= 0.55, "contraction ratio {worst}");
        let params = NormParams {
            nu: 1.0,
            beta: spec.beta,
            mu: spec.mu,
            growth_order: spec.k1 as f64,
        };
        assert!(norm_weighted(&w, &params) <= report.ball_radius + 1e-15);
    }

    #[test]
    fn iteration_count_tracks_geometric_convergence_model() {
        // n ~ log(tol)/log(ratio): quadrupling the tolerance should save
        // about log(4)/log(ratio) iterations.
        let spec = example_spec();
        let (radial, freq) = small_grids();
        let op = HOperator::new(&spec, alloc::vec![core::f64::consts::PI / 6.0], radial, freq, 32)
            .unwrap();
        let eps = Complex64::new(0.05, 0.0);
        let (_, r1) = solve_fixed_point(&op, eps, 1e-12, 80).unwrap();
        let (_, r2) = solve_fixed_point(&op, eps, 4.0 * 1e-12, 80).unwrap();
        let ratio = r1.ratios.last().cloned().unwrap_or(0.3);
        let predicted_saving = (4.0f64.ln() / ratio.ln().abs()).round() as i64;
        let actual_saving = r1.iterations as i64 - r2.iterations as i64;
        assert!(
            (actual_saving - predicted_saving).abs() <= 2,
            "saving {actual_saving} vs predicted {predicted_saving} (ratio {ratio})"
        );
    }

    #[test]
    fn index_entry_with_l2_zero_contributes_monomial_kernel() {
        // Removing the (1,0) entry must change the image: the l2 = 0 term
        // enters through the pure tau^{k l1} kernel.
        let spec = example_spec();
        let mut without = spec.clone();
        without.index_set = alloc::vec![IndexPair { l1: 1, l2: 1 }];
        without.delta_l = alloc::vec![3];
        without.rl_polys = alloc::vec![spec.rl_polys[0].clone()];
        without.coeff_profiles = alloc::vec![spec.coeff_profiles[0]];
        let (radial, freq) = small_grids();
        let dirs = alloc::vec![core::f64::consts::PI / 6.0];
        let op_full = HOperator::new(&spec, dirs.clone(), radial.clone(), freq.clone(), 24).unwrap();
        let op_trim = HOperator::new(&without, dirs.clone(), radial.clone(), freq.clone(), 24).unwrap();
        let w = SampledSymbol::from_fn(
            dirs,
            radial,
            freq,
            |_, u, m| u * Complex64::new((-0.5 * m * m).exp(), 0.0),
            |m| Complex64::new((-0.5 * m * m).exp(), 0.0),
        )
        .unwrap();
        let eps = Complex64::new(0.05, 0.0);
        let a = op_full.apply(&w, eps);
        let b = op_trim.apply(&w, eps);
        let diff: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(diff > 1e-12, "l2 = 0 entry had no effect");
    }
}
