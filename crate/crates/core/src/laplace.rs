//! Ray-quadrature Laplace transforms of orders `k'` and `k`, Fourier
//! inversion, forcing-term assembly, solution assembly `u_p(t, z, eps)` and
//! the PDE residual check.
//!
//! The transform of a sampled symbol along a ray is expressed as a linear
//! rule over the stored radial nodes: the analytic kernel is evaluated
//! exactly at panel Gauss points while the symbol is interpolated with a
//! six-point stencil, so one rule applies to every frequency slice at once.
//! The segment below the first radial node is integrated analytically
//! through the symbol's origin slope.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
use num_traits::Float;

use crate::banach::{lagrange_weights, SampledSymbol, STENCIL};
use crate::geometry::wrap_angle;
use crate::opalgebra;
use crate::problem::{ComplexPoly, ProblemSpec};
use crate::quad;
use crate::specfun;

#[derive(Debug, Clone, PartialEq)]
pub enum TransformError {
    Argument(&'static str),
    /// Kernel not damped on the requested ray.
    Direction { gamma: f64, arg_scale: f64, order: u32, damping: f64, required: f64 },
    /// The analytic tail bound beyond the stored grid cannot be met.
    Range { tail_bound: f64, r_max: f64 },
    /// Fourier strip violation: `|Im z|` must stay below `beta`.
    Strip { im_z: f64, beta: f64 },
    /// Forcing series truncation cannot reach the tail target.
    Truncation { required: usize },
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::Argument(m) => write!(f, "argument error: {m}"),
            TransformError::Direction { gamma, arg_scale, order, damping, required } => write!(
                f,
                "ray {gamma} not damped for order {order} at arg(scale) = {arg_scale}: \
                 cos = {damping} < {required}"
            ),
            TransformError::Range { tail_bound, r_max } => write!(
                f,
                "radial grid too short: tail beyond r = {r_max} bounded only by {tail_bound}"
            ),
            TransformError::Strip { im_z, beta } => {
                write!(f, "strip violation: |Im z| = {im_z} >= beta = {beta}")
            }
            TransformError::Truncation { required } => {
                write!(f, "forcing truncation too low; need about {required} terms")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TransformError {}

/// Certified growth of a symbol along its rays:
/// `|w(u, m)| <= amplitude * |u| * exp(nu |u|^order)` (m-uniform envelope).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub amplitude: f64,
    pub nu: f64,
    pub order: f64,
}

/// Linear quadrature rule for `order * int w(u) P(v) e^{-v} du/u` along a
/// stored ray, `v = (u/scale)^order`: the transform value is
/// `head_weight * origin_slope + sum_i node_weights[i] * w(r_i)`.
#[derive(Debug, Clone)]
pub struct RayRule {
    pub node_weights: Vec<Complex64>,
    pub head_weight: Complex64,
    /// Analytic bound on the neglected tail beyond the last used node.
    pub tail_bound: f64,
}

fn kernel_v(r: f64, scale_abs: f64, phase: f64, order: u32) -> Complex64 {
    let modv = (r / scale_abs).powi(order as i32);
    Complex64::from_polar(modv, phase)
}

fn eval_vpoly(poly: &[Complex64], v: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in poly.iter().rev() {
        acc = acc * v + c;
    }
    acc
}

/// Build the quadrature rule for one ray, order and scale.
///
/// `vpoly` is the polynomial kernel weight `P(v)` (ascending powers);
/// `[1]` gives the plain transform.
pub fn ray_rule(
    radial: &[f64],
    gamma: f64,
    order: u32,
    scale: Complex64,
    delta: f64,
    growth: &GrowthBound,
    vpoly: &[Complex64],
) -> Result<RayRule, TransformError> {
    if radial.len() < STENCIL {
        return Err(TransformError::Argument("radial grid shorter than the stencil"));
    }
    if scale.norm() == 0.0 || order == 0 {
        return Err(TransformError::Argument("degenerate scale or order"));
    }
    let phase = order as f64 * wrap_angle(gamma - scale.arg());
    let damping = phase.cos();
    if damping < delta {
        return Err(TransformError::Direction {
            gamma,
            arg_scale: scale.arg(),
            order,
            damping,
            required: delta,
        });
    }
    let s_abs = scale.norm();
    let n = radial.len();
    let kf = order as f64;
    // Budget for dropping the integrand: exponent >= 46 is ~1e-20.
    let spent = |r: f64| -> f64 {
        damping * (r / s_abs).powi(order as i32) - growth.nu * r.powf(growth.order)
    };
    let r_max = radial[n - 1];
    let mut tail_bound = 0.0;
    let mut i_hi = n - 1;
    if spent(r_max) < 46.0 {
        // Grid ends before the kernel has fully damped: bound the tail.
        let lambda = damping * kf * r_max.powi(order as i32 - 1) / s_abs.powi(order as i32)
            - growth.nu * growth.order * r_max.powf(growth.order - 1.0);
        if lambda <= 0.0 {
            return Err(TransformError::Range { tail_bound: f64::INFINITY, r_max });
        }
        let v_at = kernel_v(r_max, s_abs, phase, order);
        let val = kf
            * eval_vpoly(vpoly, v_at).norm()
            * growth.amplitude
            * (growth.nu * r_max.powf(growth.order)
                - damping * (r_max / s_abs).powi(order as i32))
            .exp();
        tail_bound = val / lambda;
    } else {
        // Find the last node that still matters.
        while i_hi > 6 && spent(radial[i_hi - 1]) >= 46.0 {
            i_hi -= 1;
        }
    }
    let gl = quad::gauss_legendre(6);
    let mut node_weights = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..i_hi {
        let (a, b) = (radial[i], radial[i + 1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let base = i.saturating_sub(STENCIL / 2 - 1).min(n - STENCIL);
        for (g, gw) in gl.nodes.iter().zip(&gl.weights) {
            let r = mid + half * g;
            let v = kernel_v(r, s_abs, phase, order);
            let kern = eval_vpoly(vpoly, v) * (-v).exp();
            let coef = kern * (kf * gw * half / r);
            let lw = lagrange_weights(radial, base, r);
            for (a_i, l) in lw.iter().enumerate() {
                node_weights[base + a_i] += coef * l;
            }
        }
    }
    // Head segment [0, r_0] through the origin slope: w(u) ~ slope * u, so
    // the contribution is slope * e^{i gamma} * order * int_0^{r0} P(v) e^{-v} dr.
    let r0 = radial[0];
    let mut head = Complex64::new(0.0, 0.0);
    let glh = quad::gauss_legendre(8);
    // Subdivide if the kernel scale is not resolved by one panel.
    let kernel_scale = s_abs * (1.0 / damping.max(1e-6)).powf(1.0 / kf);
    let mut cuts = vec![0.0f64];
    if r0 > 0.1 * kernel_scale {
        let mut c = 0.1 * kernel_scale;
        while c < r0 {
            cuts.push(c);
            c *= 2.0;
        }
    }
    cuts.push(r0);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (g, gw) in glh.nodes.iter().zip(&glh.weights) {
            let r = mid + half * g;
            let v = kernel_v(r, s_abs, phase, order);
            head += eval_vpoly(vpoly, v) * (-v).exp() * (gw * half);
        }
    }
    let head_weight = head * Complex64::from_polar(1.0, gamma) * kf;
    Ok(RayRule { node_weights, head_weight, tail_bound })
}

/// Apply a ray rule to direction `d` of a symbol, producing one value per
/// frequency node.
pub fn apply_ray_rule(sym: &SampledSymbol, d: usize, rule: &RayRule) -> Vec<Complex64> {
    let nm = sym.freq().len();
    let nr = sym.radial().len();
    let mut out = Vec::with_capacity(nm);
    for j in 0..nm {
        let mut acc = rule.head_weight * sym.origin_slope()[j];
        for i in 0..nr {
            let w = rule.node_weights[i];
            if w.re != 0.0 || w.im != 0.0 {
                acc += w * sym.value(d, i, j);
            }
        }
        out.push(acc);
    }
    out
}

/// Laplace transform of one frequency slice of a symbol along ray `d`:
/// `order * int_{L_gamma} w(u, m_j) exp(-(u/scale)^order) du/u`.
pub fn laplace_ray(
    sym: &SampledSymbol,
    d: usize,
    j: usize,
    order: u32,
    scale: Complex64,
    delta: f64,
    growth: &GrowthBound,
) -> Result<Complex64, TransformError> {
    let rule = ray_rule(
        sym.radial(),
        sym.directions()[d],
        order,
        scale,
        delta,
        growth,
        &[Complex64::new(1.0, 0.0)],
    )?;
    let nr = sym.radial().len();
    let mut acc = rule.head_weight * sym.origin_slope()[j];
    for i in 0..nr {
        acc += rule.node_weights[i] * sym.value(d, i, j);
    }
    Ok(acc)
}

/// Inverse Fourier transform of grid samples:
/// `(1/sqrt(2 pi)) int f(m) e^{izm} dm` by trapezoid weights on the stored
/// grid. The grid must carry the decay (`e^{-beta|m|}` profile with the kink
/// at `m = 0` on a node); `|Im z| < beta` is required.
pub fn fourier_inverse(
    mgrid: &[f64],
    vals: &[Complex64],
    z: Complex64,
    beta: f64,
) -> Result<Complex64, TransformError> {
    if mgrid.len() < 2 || mgrid.len() != vals.len() {
        return Err(TransformError::Argument("mismatched or empty frequency data"));
    }
    if !(z.im.abs() < beta) {
        return Err(TransformError::Strip { im_z: z.im.abs(), beta });
    }
    let w = quad::trapezoid_weights(mgrid);
    let mut acc = Complex64::new(0.0, 0.0);
    for ((&m, &wt), &v) in mgrid.iter().zip(&w).zip(vals) {
        let phase = Complex64::new(0.0, 1.0) * z * m;
        acc += v * phase.exp() * wt;
    }
    Ok(acc / (2.0 * core::f64::consts::PI).sqrt())
}

/// Build the order-`k'` Laplace transform of the inner symbol along the ray
/// `d` as a new one-ray symbol on the supplied `tau` radial grid in direction
/// `gamma_tau`. The origin slope of the result is
/// `Gamma(1/k') * slope_w(m)`, the exact leading series term.
pub fn build_w_symbol(
    w: &SampledSymbol,
    d: usize,
    kprime: u32,
    gamma_tau: f64,
    tau_radial: Vec<f64>,
    delta2: f64,
    growth: &GrowthBound,
) -> Result<SampledSymbol, TransformError> {
    let freq = w.freq().to_vec();
    let mut out = SampledSymbol::zeros(vec![gamma_tau], tau_radial, freq)
        .map_err(|_| TransformError::Argument("bad tau grid"))?;
    let ntau = out.radial().len();
    let one = [Complex64::new(1.0, 0.0)];
    let mut worst_tail = 0.0f64;
    for i in 0..ntau {
        let tau = Complex64::from_polar(out.radial()[i], gamma_tau);
        let rule = ray_rule(w.radial(), w.directions()[d], kprime, tau, delta2, growth, &one)?;
        worst_tail = worst_tail.max(rule.tail_bound);
        let vals = apply_ray_rule(w, d, &rule);
        for (j, v) in vals.into_iter().enumerate() {
            out.set(0, i, j, v);
        }
    }
    let g = specfun::gamma(1.0 / kprime as f64).expect("positive argument");
    let slope: Vec<Complex64> = w.origin_slope().iter().map(|s| s * g).collect();
    out.set_origin_slope(slope);
    let _ = worst_tail;
    Ok(out)
}

/// Context for evaluating the assembled solution and its derivatives: the
/// outer Borel symbol `W` on its tau-ray plus the transform parameters.
#[derive(Debug, Clone)]
pub struct SolutionContext<'a> {
    pub w_symbol: &'a SampledSymbol,
    pub k: u32,
    pub beta: f64,
    pub delta1: f64,
    pub growth: GrowthBound,
}

impl<'a> SolutionContext<'a> {
    /// `u = (k/sqrt(2 pi)) int int W(tau, m) P(v) e^{-v} e^{izm} dtau/tau dm`
    /// with `v = (tau/eps_t)^k`, the frequency weight applied inside.
    pub fn value_weighted<Fw: Fn(f64) -> Complex64>(
        &self,
        eps_t: Complex64,
        z: Complex64,
        vpoly: &[Complex64],
        freq_weight: Fw,
    ) -> Result<Complex64, TransformError> {
        let rule = ray_rule(
            self.w_symbol.radial(),
            self.w_symbol.directions()[0],
            self.k,
            eps_t,
            self.delta1,
            &self.growth,
            vpoly,
        )?;
        let mut per_m = apply_ray_rule(self.w_symbol, 0, &rule);
        for (j, v) in per_m.iter_mut().enumerate() {
            *v *= freq_weight(self.w_symbol.freq()[j]);
        }
        fourier_inverse(self.w_symbol.freq(), &per_m, z, self.beta)
    }

    /// Plain solution value `u_p(t, z, eps)` with `eps_t = eps * t`.
    pub fn value(&self, eps_t: Complex64, z: Complex64) -> Result<Complex64, TransformError> {
        self.value_weighted(eps_t, z, &[Complex64::new(1.0, 0.0)], |_| Complex64::new(1.0, 0.0))
    }
}

// ---------------------------------------------------------------------------
// Kernel-weight algebra for the representation-based derivatives
// ---------------------------------------------------------------------------

/// Apply `T^{k+1} d/dT` to a kernel weight `P(v)` (with `v = (tau/T)^k`):
/// the weight becomes `k T^k (v P - v P')`, returned together with the
/// explicit `T^k` factor applied.
pub fn vpoly_irregular(poly: &[Complex64], k: u32, t_scale: Complex64) -> Vec<Complex64> {
    let tk = t_scale.powu(k);
    let mut out = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
    for (j, &c) in poly.iter().enumerate() {
        // + k T^k v * P  -> degree j+1
        out[j + 1] += c * (k as f64) * tk;
        // - k T^k v * P' -> degree j
        out[j] -= c * (j as f64) * (k as f64) * tk;
    }
    out
}

/// Apply `T d/dT` to a kernel weight: `k (v P - v P')`.
pub fn vpoly_euler(poly: &[Complex64], k: u32) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
    for (j, &c) in poly.iter().enumerate() {
        out[j + 1] += c * (k as f64);
        out[j] -= c * (j as f64) * (k as f64);
    }
    out
}

/// Kernel weight of `(T^{k+1} d/dT)^{l1} (T d/dT)^{l2}` (rightmost factor
/// acting first) at the given scale.
pub fn vpoly_operator(l1: u32, l2: u32, k: u32, t_scale: Complex64) -> Vec<Complex64> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..l2 {
        poly = vpoly_euler(&poly, k);
    }
    for _ in 0..l1 {
        poly = vpoly_irregular(&poly, k, t_scale);
    }
    poly
}

// ---------------------------------------------------------------------------
// Forcing term
// ---------------------------------------------------------------------------

/// Forcing-term value `F_d(T, z, eps)` through the full iterated pipeline
/// (order-k' Laplace of psi, then order-k Laplace and Fourier inversion).
/// `f(t, z, eps) = F_d(eps t, z, eps)` is the same call at `T = eps t`.
#[derive(Debug, Clone)]
pub struct ForcingContext {
    /// `Psi_d` as a one-ray symbol on a tau grid.
    pub psi_outer: SampledSymbol,
    pub k: u32,
    pub beta: f64,
    pub delta1: f64,
    pub growth: GrowthBound,
}

impl ForcingContext {
    pub fn value(&self, t_scale: Complex64, z: Complex64) -> Result<Complex64, TransformError> {
        let ctx = SolutionContext {
            w_symbol: &self.psi_outer,
            k: self.k,
            beta: self.beta,
            delta1: self.delta1,
            growth: self.growth,
        };
        ctx.value(t_scale, z)
    }

    pub fn value_weighted<Fw: Fn(f64) -> Complex64>(
        &self,
        t_scale: Complex64,
        z: Complex64,
        freq_weight: Fw,
    ) -> Result<Complex64, TransformError> {
        let ctx = SolutionContext {
            w_symbol: &self.psi_outer,
            k: self.k,
            beta: self.beta,
            delta1: self.delta1,
            growth: self.growth,
        };
        ctx.value_weighted(t_scale, z, &[Complex64::new(1.0, 0.0)], freq_weight)
    }
}

/// Kappa_2-regime growth check inputs; see the spec of `build_forcing`:
/// when `kappa_1 < k` the forcing is entire with order-kappa_2 growth, when
/// `kappa_1 = k` it is analytic near the origin only.
pub fn forcing_branch(spec: &ProblemSpec) -> Option<bool> {
    opalgebra::kappa1_of(spec.k1, spec.kprime).map(|kap1| {
        let kap1 = *kap1.numer() as f64 / *kap1.denom() as f64;
        kap1 < spec.k as f64
    })
}

// ---------------------------------------------------------------------------
// PDE residual
// ---------------------------------------------------------------------------

/// Both evaluations of the PDE defect at one sample point, with the local
/// solution scale for relative comparison.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    /// Residual with t-derivatives through the exact kernel-weight identities.
    pub representation: Complex64,
    /// Residual with all derivatives by finite differences.
    pub finite_difference: Complex64,
    /// Max of |u| and the individual term magnitudes at the sample.
    pub scale: f64,
}

/// Inverse Fourier transform of the default coefficient profile
/// `amplitude * (1+|m|)^{-mu} e^{-beta|m|}` at `z`, on a dense dedicated grid.
pub fn coeff_value(amplitude: f64, beta: f64, mu: f64, z: Complex64) -> Complex64 {
    // Dense symmetric grid with the kink at zero on a node.
    let m_max = 46.0 / (beta - z.im.abs()).max(0.25);
    let n = 6000usize;
    let mut acc = Complex64::new(0.0, 0.0);
    let h = m_max / n as f64;
    for i in -(n as i64)..=(n as i64) {
        let m = i as f64 * h;
        let w = if i == -(n as i64) || i == n as i64 { 0.5 } else { 1.0 };
        let phase = Complex64::new(0.0, 1.0) * z * m;
        acc += phase.exp() * (crate::problem::freq_profile(beta, mu, m) * w);
    }
    acc * amplitude * h / (2.0 * core::f64::consts::PI).sqrt()
}

/// Evaluate the PDE defect `Q(d_z)u - R_D(d_z) eps^{k dD} (irr)^{dD}(euler)^{mD} u
/// - sum_l eps^{Dl} c_l R_l(d_z) (irr)^{l1}(euler)^{l2} u - f` at one point,
/// through two independent derivative paths.
#[allow(clippy::too_many_arguments)]
pub fn pde_residual(
    spec: &ProblemSpec,
    solution: &SolutionContext<'_>,
    forcing: &ForcingContext,
    t: Complex64,
    z: Complex64,
    eps: Complex64,
    h_t: f64,
    h_z: f64,
) -> Result<ResidualReport, TransformError> {
    let eps_t = eps * t;
    let mut scale = 0.0f64;
    // --- Representation path -------------------------------------------
    let q_term = solution.value_weighted(eps_t, z, &[Complex64::new(1.0, 0.0)], |m| {
        spec.q_poly.eval_im(m)
    })?;
    scale = scale.max(q_term.norm());
    // R_D term: eps^{k dD} (t^{k+1} d_t)^{dD} (t d_t)^{mD} u
    //        = (T^{k+1} d_T)^{dD} (T d_T)^{mD} U at T = eps t.
    let poly_d = vpoly_operator(spec.delta_d, spec.m_d, spec.k, eps_t);
    let rd_term = solution.value_weighted(eps_t, z, &poly_d, |m| spec.rd_poly.eval_im(m))?;
    scale = scale.max(rd_term.norm());
    let mut i_terms = Complex64::new(0.0, 0.0);
    for (idx, pair) in spec.index_set.iter().enumerate() {
        let poly_l = vpoly_operator(pair.l1, pair.l2, spec.k, eps_t);
        let deriv =
            solution.value_weighted(eps_t, z, &poly_l, |m| spec.rl_polys[idx].eval_im(m))?;
        let c_l = coeff_value(spec.coeff_profiles[idx].amplitude, spec.beta, spec.mu, z);
        let eps_pow = eps.powu(spec.delta_l[idx] - spec.k * pair.l1);
        let term = c_l * deriv * eps_pow;
        scale = scale.max(term.norm());
        i_terms += term;
    }
    let f_val = forcing.value(eps_t, z)?;
    scale = scale.max(f_val.norm());
    let representation = q_term - rd_term - i_terms - f_val;

    // --- Finite-difference path -----------------------------------------
    // Expand the operators into t^A d_t^B with exact coefficients and use
    // central stencils on u_p(t, z).
    let u_at = |tt: Complex64, zz: Complex64| solution.value(eps * tt, zz);
    // z-derivatives up to the polynomial degrees (central, 4th order).
    let dq = spec.q_poly.degree().max(spec.rd_poly.degree());
    let mut z_derivs: Vec<Complex64> = Vec::with_capacity(dq + 1);
    for j in 0..=dq {
        z_derivs.push(central_dz(&u_at, t, z, h_z, j)?);
    }
    let apply_poly_z = |poly: &ComplexPoly, derivs: &[Complex64]| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &c) in poly.coeffs().iter().enumerate() {
            if j < derivs.len() {
                acc += c * derivs[j];
            }
        }
        acc
    };
    let q_fd = apply_poly_z(&spec.q_poly, &z_derivs);
    // (t^{k+1} d_t)^{dD} (t d_t)^{mD} expanded in t^A d_t^B.
    let op_d = opalgebra::DiffOperator::irregular(spec.k)
        .pow(spec.delta_d)
        .compose(&opalgebra::DiffOperator::euler().pow(spec.m_d));
    let rd_fd = poly_of_dz_on_t_op(&spec.rd_poly, &op_d, solution, eps, t, z, h_t, h_z)?;
    let eps_kd = eps.powu(spec.k * spec.delta_d);
    let mut i_fd = Complex64::new(0.0, 0.0);
    for (idx, pair) in spec.index_set.iter().enumerate() {
        let op_l = opalgebra::DiffOperator::irregular(spec.k)
            .pow(pair.l1)
            .compose(&opalgebra::DiffOperator::euler().pow(pair.l2));
        let mixed = poly_of_dz_on_t_op(&spec.rl_polys[idx], &op_l, solution, eps, t, z, h_t, h_z)?;
        let c_l = coeff_value(spec.coeff_profiles[idx].amplitude, spec.beta, spec.mu, z);
        i_fd += c_l * mixed * eps.powu(spec.delta_l[idx]);
    }
    let finite_difference = q_fd - eps_kd * rd_fd - i_fd - f_val;
    Ok(ResidualReport { representation, finite_difference, scale: scale.max(1e-300) })
}

/// j-th z-derivative by 4th-order central differences (j <= 2 used here).
fn central_dz<F>(u: &F, t: Complex64, z: Complex64, h: f64, j: usize) -> Result<Complex64, TransformError>
where
    F: Fn(Complex64, Complex64) -> Result<Complex64, TransformError>,
{
    let hh = Complex64::new(h, 0.0);
    match j {
        0 => u(t, z),
        1 => {
            let um2 = u(t, z - hh * 2.0)?;
            let um1 = u(t, z - hh)?;
            let up1 = u(t, z + hh)?;
            let up2 = u(t, z + hh * 2.0)?;
            Ok((um2 - up2 + (up1 - um1) * 8.0) / (12.0 * h))
        }
        2 => {
            let um2 = u(t, z - hh * 2.0)?;
            let um1 = u(t, z - hh)?;
            let u0 = u(t, z)?;
            let up1 = u(t, z + hh)?;
            let up2 = u(t, z + hh * 2.0)?;
            Ok((-um2 - up2 + (um1 + up1) * 16.0 - u0 * 30.0) / (12.0 * h * h))
        }
        _ => Err(TransformError::Argument("z-derivative order above 2 not needed")),
    }
}

/// Apply an exact-coefficient operator `sum c t^A d_t^B` by finite
/// differences in `t` (2nd-order stencils on a shared 9-point line).
fn apply_t_operator<F>(
    op: &opalgebra::DiffOperator,
    u: &F,
    t: Complex64,
    z: Complex64,
    h: f64,
) -> Result<Complex64, TransformError>
where
    F: Fn(Complex64, Complex64) -> Result<Complex64, TransformError>,
{
    let b_max = op.terms().map(|(&(_, b), _)| b).max().unwrap_or(0) as usize;
    // Shared line of samples around t.
    let half = b_max.div_ceil(2) + 1;
    let mut line = Vec::with_capacity(2 * half + 1);
    for i in -(half as i64)..=(half as i64) {
        line.push(u(t + Complex64::new(h * i as f64, 0.0), z)?);
    }
    let deriv = |b: usize| -> Complex64 {
        // Second-order approximation of the b-th derivative: iterate the
        // central first difference b times; the centre index is preserved.
        let mut v = line.clone();
        for _ in 0..b {
            let mut next = Vec::with_capacity(v.len() - 2);
            for i in 1..v.len() - 1 {
                next.push((v[i + 1] - v[i - 1]) / (2.0 * h));
            }
            v = next;
        }
        v[v.len() / 2]
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (&(a, b), c) in op.terms() {
        let cf = opalgebra::coeff_to_f64(c);
        acc += t.powu(a) * deriv(b as usize) * cf;
    }
    Ok(acc)
}

/// `poly(d_z)` applied to the t-operator value, all by finite differences.
#[allow(clippy::too_many_arguments)]
pub(crate) fn poly_of_dz_on_t_op(
    poly: &ComplexPoly,
    op: &opalgebra::DiffOperator,
    solution: &SolutionContext<'_>,
    eps: Complex64,
    t: Complex64,
    z: Complex64,
    h_t: f64,
    h_z: f64,
) -> Result<Complex64, TransformError> {
    let u_at = |tt: Complex64, zz: Complex64| solution.value(eps * tt, zz);
    let mut derivs: Vec<Complex64> = Vec::with_capacity(poly.degree() + 1);
    for j in 0..=poly.degree() {
        // j-th z-derivative of the t-operator value.
        let g = |zz: Complex64| -> Result<Complex64, TransformError> {
            apply_t_operator(op, &u_at, t, zz, h_t)
        };
        let v = match j {
            0 => g(z)?,
            1 => {
                let um2 = g(z - Complex64::new(2.0 * h_z, 0.0))?;
                let um1 = g(z - Complex64::new(h_z, 0.0))?;
                let up1 = g(z + Complex64::new(h_z, 0.0))?;
                let up2 = g(z + Complex64::new(2.0 * h_z, 0.0))?;
                (um2 - up2 + (up1 - um1) * 8.0) / (12.0 * h_z)
            }
            2 => {
                let um2 = g(z - Complex64::new(2.0 * h_z, 0.0))?;
                let um1 = g(z - Complex64::new(h_z, 0.0))?;
                let u0 = g(z)?;
                let up1 = g(z + Complex64::new(h_z, 0.0))?;
                let up2 = g(z + Complex64::new(2.0 * h_z, 0.0))?;
                (-um2 - up2 + (um1 + up1) * 16.0 - u0 * 30.0) / (12.0 * h_z * h_z)
            }
            _ => return Err(TransformError::Argument("polynomial degree above 2 not supported")),
        };
        derivs.push(v);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &c) in poly.coeffs().iter().enumerate() {
        acc += c * derivs[j];
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banach::radial_grid;

    /// Monomial symbol u^n on the given rays, with the right origin slope.
    fn monomial_symbol(dirs: Vec<f64>, radial: Vec<f64>, n: u32) -> SampledSymbol {
        SampledSymbol::from_fn(
            dirs,
            radial,
            vec![0.0],
            |_, u, _| u.powu(n),
            |_| {
                if n == 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            },
        )
        .unwrap()
    }

    #[test]
    fn monomial_laplace_matches_gamma_values() {
        // order * int u^n exp(-(u/T)^order) du/u = Gamma(n/order) T^n.
        let mut worst = 0.0f64;
        for order in 1..=3u32 {
            for n in 1..=6u32 {
                let scale_abs = 0.08;
                for &(gamma_off, arg_t) in &[(0.0, 0.0), (0.11, 0.3), (-0.07, -1.1)] {
                    let scale = Complex64::from_polar(scale_abs, arg_t);
                    let gamma = arg_t + gamma_off;
                    let radial = radial_grid(1e-7, 8.0 * scale_abs * 46f64.powf(1.0 / order as f64), 1.03);
                    let sym = monomial_symbol(vec![gamma], radial, n);
                    let growth = GrowthBound { amplitude: 1.0, nu: 0.5, order: 1.0 };
                    let got = laplace_ray(&sym, 0, 0, order, scale, 0.3, &growth).unwrap();
                    let want = Complex64::new(
                        specfun::gamma(n as f64 / order as f64).unwrap(),
                        0.0,
                    ) * scale.powu(n);
                    let rel = (got - want).norm() / want.norm();
                    worst = worst.max(rel);
                    assert!(rel < 1e-7, "order={order} n={n} gamma_off={gamma_off}: rel {rel:.2e}");
                }
            }
        }
        assert!(worst < 1e-7, "worst {worst:.2e}");
    }

    #[test]
    fn quadratic_order_two_unit_scale() {
        // w(u) = u^2, order 2, scale 1: the value is Gamma(1) = 1.
        let radial = radial_grid(1e-7, 8.0, 1.025);
        let sym = monomial_symbol(vec![0.0], radial, 2);
        let growth = GrowthBound { amplitude: 1.0, nu: 0.5, order: 1.0 };
        let got = laplace_ray(&sym, 0, 0, 2, Complex64::new(1.0, 0.0), 0.5, &growth).unwrap();
        assert!((got - Complex64::new(1.0, 0.0)).norm() < 1e-8, "{got}");
    }

    #[test]
    fn zero_symbol_transforms_to_zero() {
        let radial = radial_grid(1e-6, 3.0, 1.05);
        let sym = SampledSymbol::zeros(vec![0.2], radial, vec![0.0]).unwrap();
        let growth = GrowthBound { amplitude: 0.0, nu: 0.1, order: 1.0 };
        let got = laplace_ray(&sym, 0, 0, 2, Complex64::new(0.3, 0.1), 0.2, &growth).unwrap();
        assert_eq!(got, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn direction_independence_for_entire_symbol() {
        // w(u) = u e^{0.7 u} is entire of order 1 < 2: two feasible rays
        // must give the same order-2 transform.
        let scale = Complex64::from_polar(0.35, 0.1);
        let growth = GrowthBound { amplitude: 1.0, nu: 0.7, order: 1.0 };
        let f = |_: f64, u: Complex64, _: f64| u * (u * 0.7).exp();
        let mut vals = Vec::new();
        for &gamma in &[0.1f64, 0.32, -0.12] {
            let radial = radial_grid(1e-7, 12.0, 1.02);
            let sym = SampledSymbol::from_fn(
                vec![gamma],
                radial,
                vec![0.0],
                f,
                |_| Complex64::new(1.0, 0.0),
            )
            .unwrap();
            vals.push(laplace_ray(&sym, 0, 0, 2, scale, 0.4, &growth).unwrap());
        }
        for v in &vals[1..] {
            let rel = (v - vals[0]).norm() / vals[0].norm();
            assert!(rel < 1e-8, "direction dependence {rel:.2e}");
        }
    }

    #[test]
    fn infeasible_direction_is_rejected() {
        let radial = radial_grid(1e-6, 3.0, 1.05);
        let sym = monomial_symbol(vec![0.0], radial, 1);
        let growth = GrowthBound { amplitude: 1.0, nu: 0.1, order: 1.0 };
        // order 2, ray at 0, scale at angle pi/2: cos(2 * pi/2) = -1.
        let res = laplace_ray(
            &sym,
            0,
            0,
            2,
            Complex64::from_polar(0.3, core::f64::consts::FRAC_PI_2),
            0.3,
            &growth,
        );
        assert!(matches!(res, Err(TransformError::Direction { .. })));
    }

    #[test]
    fn short_grid_reports_tail_failure() {
        // Strong growth, weak damping and a short grid: the tail derivative
        // turns negative and the transform must refuse.
        let radial = radial_grid(1e-5, 0.5, 1.08);
        let sym = monomial_symbol(vec![0.0], radial, 1);
        let growth = GrowthBound { amplitude: 1.0, nu: 8.0, order: 1.0 };
        let res = laplace_ray(&sym, 0, 0, 1, Complex64::new(2.0, 0.0), 0.3, &growth);
        assert!(matches!(res, Err(TransformError::Range { .. })));
    }

    #[test]
    fn lemma2_irregular_action_under_the_transform() {
        // Order-k' Laplace of k' u^{k'} w equals tau^{k'+1} d/dtau of the
        // Laplace of w, compared through central differences in tau.
        let kprime = 2u32;
        let gamma = 0.15;
        let growth = GrowthBound { amplitude: 2.0, nu: 1.0, order: 1.0 };
        let radial = radial_grid(1e-7, 14.0, 1.02);
        let w = SampledSymbol::from_fn(
            vec![gamma],
            radial.clone(),
            vec![0.0],
            |_, u, _| u * (u * 0.45).exp(),
            |_| Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let w_mult = SampledSymbol::from_fn(
            vec![gamma],
            radial,
            vec![0.0],
            |_, u, _| u.powu(kprime) * u * (u * 0.45).exp() * kprime as f64,
            |_| Complex64::new(0.0, 0.0),
        )
        .unwrap();
        let tau_r = 0.52;
        let tau = Complex64::from_polar(tau_r, gamma);
        let lhs = laplace_ray(&w_mult, 0, 0, kprime, tau, 0.5, &growth).unwrap();
        // tau^{k'+1} dW/dtau by 4th-order central differences along the ray.
        let h = 1e-3;
        let wat = |r: f64| {
            laplace_ray(&w, 0, 0, kprime, Complex64::from_polar(r, gamma), 0.5, &growth).unwrap()
        };
        let d_dr = (wat(tau_r - 2.0 * h) - wat(tau_r + 2.0 * h)
            + (wat(tau_r + h) - wat(tau_r - h)) * 8.0)
            / (12.0 * h);
        let d_dtau = d_dr * Complex64::from_polar(1.0, -gamma);
        let rhs = tau.powu(kprime + 1) * d_dtau;
        let rel = (lhs - rhs).norm() / lhs.norm().max(1e-12);
        assert!(rel < 1e-6, "Lemma-2 identity mismatch {rel:.2e}");
    }

    fn dense_uniform_grid(m_max: f64, step: f64) -> Vec<f64> {
        let n = (m_max / step) as i64;
        (-n..=n).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn fourier_closed_form_and_symmetry() {
        // f(m) = e^{-a|m|}: transform is sqrt(2/pi) a/(a^2+z^2) for real z.
        for &a in &[0.8f64, 1.5] {
            let grid = dense_uniform_grid(52.0 / a, 2.4e-4);
            let vals: Vec<Complex64> =
                grid.iter().map(|&m| Complex64::new((-a * m.abs()).exp(), 0.0)).collect();
            for &z in &[0.0f64, 0.6, -1.7] {
                let got = fourier_inverse(&grid, &vals, Complex64::new(z, 0.0), 1e9).unwrap();
                let want = (2.0 / core::f64::consts::PI).sqrt() * a / (a * a + z * z);
                assert!((got.re - want).abs() < 1e-8 * want.max(1.0), "a={a} z={z}");
                // Even real input: real output up to rounding.
                assert!(got.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_strip_violation_rejected() {
        let grid = dense_uniform_grid(20.0, 0.01);
        let vals: Vec<Complex64> =
            grid.iter().map(|&m| Complex64::new((-m.abs()).exp(), 0.0)).collect();
        let res = fourier_inverse(&grid, &vals, Complex64::new(0.0, 1.2), 1.0);
        assert!(matches!(res, Err(TransformError::Strip { .. })));
    }

    #[test]
    fn fourier_derivative_identity() {
        // F^{-1}(i m f)(z) = d/dz F^{-1}(f)(z), checked by central
        // differences; smooth profile keeps the trapezoid spectrally sharp.
        let grid = dense_uniform_grid(14.0, 0.02);
        let f: Vec<Complex64> =
            grid.iter().map(|&m| Complex64::new((-0.5 * m * m).exp(), 0.0)).collect();
        let imf: Vec<Complex64> =
            grid.iter().zip(&f).map(|(&m, &v)| Complex64::new(0.0, m) * v).collect();
        let z = Complex64::new(0.4, 0.1);
        let lhs = fourier_inverse(&grid, &imf, z, 5.0).unwrap();
        let h = 1e-4;
        let fp = fourier_inverse(&grid, &f, z + h, 5.0).unwrap();
        let fm = fourier_inverse(&grid, &f, z - h, 5.0).unwrap();
        let rhs = (fp - fm) / (2.0 * h);
        assert!((lhs - rhs).norm() < 1e-6 * lhs.norm().max(1.0));
    }

    #[test]
    fn fourier_convolution_identity() {
        // F^{-1}(f) F^{-1}(g) = F^{-1}(f * g) on smooth decaying profiles.
        let grid = dense_uniform_grid(14.0, 0.02);
        let fv = |m: f64| Complex64::new((-0.5 * m * m).exp(), 0.0);
        let gv = |m: f64| Complex64::new((-(m - 0.3) * (m - 0.3) / 3.0).exp(), 0.0);
        let f: Vec<Complex64> = grid.iter().map(|&m| fv(m)).collect();
        let g: Vec<Complex64> = grid.iter().map(|&m| gv(m)).collect();
        let w = quad::trapezoid_weights(&grid);
        let conv: Vec<Complex64> = grid
            .iter()
            .map(|&m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for ((&m1, &wt), &gval) in grid.iter().zip(&w).zip(&g) {
                    acc += fv(m - m1) * gval * wt;
                }
                acc / (2.0 * core::f64::consts::PI).sqrt()
            })
            .collect();
        let z = Complex64::new(-0.7, 0.2);
        let lhs = fourier_inverse(&grid, &f, z, 5.0).unwrap()
            * fourier_inverse(&grid, &g, z, 5.0).unwrap();
        let rhs = fourier_inverse(&grid, &conv, z, 5.0).unwrap();
        assert!((lhs - rhs).norm() < 1e-6 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn outer_symbol_of_linear_input_is_gamma_scaled() {
        // w = u g(m): W(tau) = Gamma(1/k') tau g(m) exactly.
        let kprime = 2u32;
        let g = |m: f64| Complex64::new(1.0 / (1.0 + m * m), 0.2);
        let radial = radial_grid(1e-7, 9.0, 1.03);
        let w = SampledSymbol::from_fn(
            vec![0.3],
            radial,
            vec![-1.0, 0.0, 1.4],
            |_, u, m| u * g(m),
            g,
        )
        .unwrap();
        let growth = GrowthBound { amplitude: 1.5, nu: 0.2, order: 1.0 };
        let tau_grid = radial_grid(1e-4, 1.1, 1.05);
        let wsym = build_w_symbol(&w, 0, kprime, 0.3, tau_grid, 0.3, &growth).unwrap();
        let gamma_half = specfun::gamma(0.5).unwrap();
        for i in 0..wsym.radial().len() {
            let tau = Complex64::from_polar(wsym.radial()[i], 0.3);
            for (j, &m) in wsym.freq().iter().enumerate() {
                let want = tau * g(m) * gamma_half;
                let got = wsym.value(0, i, j);
                assert!((got - want).norm() < 1e-9 * want.norm(), "i={i} m={m}");
            }
        }
        // Zero input gives the zero symbol.
        let zeros = SampledSymbol::zeros(vec![0.3], w.radial().to_vec(), w.freq().to_vec()).unwrap();
        let wz = build_w_symbol(&zeros, 0, kprime, 0.3, wsym.radial().to_vec(), 0.3, &growth).unwrap();
        assert!(wz.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn outer_symbol_growth_exponent_matches_saddle_point() {
        // w = u e^{|u|} (nu2 = 1, k1 = 1, k' = 2): along the central ray
        // log|W| grows like nu2^2/4 * tau^2 (saddle point), inside the
        // paper's envelope nu2^2 (1/delta2)^{k1/(k'-k1)}.
        let radial = radial_grid(1e-6, 110.0, 1.02);
        let w = SampledSymbol::from_fn(
            vec![0.0],
            radial,
            vec![0.0],
            |_, u, _| u * Complex64::new(u.norm(), 0.0).exp(),
            |_| Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let growth = GrowthBound { amplitude: 1.0, nu: 1.0, order: 1.0 };
        let tau_grid = radial_grid(3.0, 7.0, 1.03);
        let wsym = build_w_symbol(&w, 0, 2, 0.0, tau_grid, 0.5, &growth).unwrap();
        // Regression of log|W| on (1, ln tau, tau^2); the tau^2 coefficient
        // is the growth exponent, the log regressor absorbs the algebraic
        // prefactor of the saddle-point form.
        let rows = wsym.radial().len();
        let mut ata = [[0.0f64; 3]; 3];
        let mut atb = [0.0f64; 3];
        for i in 0..rows {
            let tau = wsym.radial()[i];
            let row = [1.0, tau.ln(), tau * tau];
            let y = wsym.value(0, i, 0).norm().ln();
            for a in 0..3 {
                for b in 0..3 {
                    ata[a][b] += row[a] * row[b];
                }
                atb[a] += row[a] * y;
            }
        }
        // Solve the 3x3 normal equations.
        let mut m3 = ata;
        let mut v3 = atb;
        for col in 0..3 {
            let piv = (col..3)
                .max_by(|&a, &b| m3[a][col].abs().partial_cmp(&m3[b][col].abs()).unwrap())
                .unwrap();
            m3.swap(col, piv);
            v3.swap(col, piv);
            for r in 0..3 {
                if r != col {
                    let f = m3[r][col] / m3[col][col];
                    for c in col..3 {
                        m3[r][c] -= f * m3[col][c];
                    }
                    v3[r] -= f * v3[col];
                }
            }
        }
        let slope = v3[2] / m3[2][2];
        assert!((slope - 0.25).abs() < 0.025, "fitted nu_1 = {slope}");
        assert!(slope <= 1.0 * (1.0 / 0.5f64), "outside the paper envelope");
    }

    #[test]
    fn kernel_weight_operators_match_lemma_actions() {
        // (T^{k+1} d/dT) weight on [1] is k T^k v; Euler weight is k(v - ...).
        let t = Complex64::new(0.4, 0.2);
        let p = vpoly_operator(1, 0, 3, t);
        assert_eq!(p.len(), 2);
        assert!((p[0]).norm() < 1e-15);
        assert!((p[1] - t.powu(3) * 3.0).norm() < 1e-15);
        let p = vpoly_operator(0, 1, 3, t);
        assert!((p[1] - Complex64::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn representation_derivatives_match_analytic_on_linear_symbol() {
        // W(tau, m) = tau g(m): U(T, z) = Gamma(1/k) T F^{-1}(g)(z), so each
        // operator value is analytic. Compare the kernel-weight path.
        let k = 3u32;
        let g = |m: f64| Complex64::new((-0.5 * m * m).exp(), 0.0);
        let tau_grid = radial_grid(1e-7, 1.4, 1.02);
        let freq = dense_uniform_grid(10.0, 0.05);
        let wsym = SampledSymbol::from_fn(
            vec![0.05],
            tau_grid,
            freq.clone(),
            |_, tau, m| tau * g(m),
            g,
        )
        .unwrap();
        let ctx = SolutionContext {
            w_symbol: &wsym,
            k,
            beta: 4.0,
            delta1: 0.4,
            growth: GrowthBound { amplitude: 1.0, nu: 0.1, order: 1.0 },
        };
        let t_scale = Complex64::from_polar(0.12, 0.03);
        let z = Complex64::new(0.3, 0.0);
        let gk = specfun::gamma(1.0 / k as f64).unwrap();
        let fz = fourier_inverse(&freq, &freq.iter().map(|&m| g(m)).collect::<Vec<_>>(), z, 4.0)
            .unwrap();
        // Plain value.
        let u = ctx.value(t_scale, z).unwrap();
        let want = fz * gk * t_scale;
        assert!((u - want).norm() < 1e-8 * want.norm(), "{u} vs {want}");
        // (T d/dT) U = U for a linear-in-T function.
        let p = vpoly_operator(0, 1, k, t_scale);
        let du = ctx.value_weighted(t_scale, z, &p, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!((du - want).norm() < 1e-8 * want.norm(), "{du} vs {want}");
        // (T^{k+1} d/dT) U = T^k U for a linear function.
        let p = vpoly_operator(1, 0, k, t_scale);
        let du = ctx.value_weighted(t_scale, z, &p, |_| Complex64::new(1.0, 0.0)).unwrap();
        let want_irr = want * t_scale.powu(k);
        assert!((du - want_irr).norm() < 1e-8 * want_irr.norm());
    }

    #[test]
    fn solution_of_linear_outer_symbol_is_bounded_to_zero() {
        // |u_p| stays bounded (indeed -> 0 linearly) as eps -> 0 on a ray.
        let g = |m: f64| Complex64::new((-0.8 * m * m).exp(), 0.0);
        let tau_grid = radial_grid(1e-8, 0.9, 1.03);
        let freq = dense_uniform_grid(8.0, 0.1);
        let wsym =
            SampledSymbol::from_fn(vec![0.0], tau_grid, freq, |_, tau, m| tau * g(m), g).unwrap();
        let ctx = SolutionContext {
            w_symbol: &wsym,
            k: 2,
            beta: 3.0,
            delta1: 0.4,
            growth: GrowthBound { amplitude: 1.0, nu: 0.1, order: 1.0 },
        };
        let t = Complex64::new(0.25, 0.0);
        let z = Complex64::new(0.1, 0.0);
        let mut prev = f64::INFINITY;
        for i in 0..8 {
            let eps = 0.05 * 0.5f64.powi(i);
            let u = ctx.value(eps * t, z).unwrap();
            assert!(u.norm() < prev * 0.9, "not shrinking at eps = {eps}");
            prev = u.norm();
        }
    }
}
