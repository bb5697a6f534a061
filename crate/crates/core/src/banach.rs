//! Discretised symbols and the weighted sup-norms the whole construction is
//! estimated in: the frequency norm on `E_(beta,mu)` and the two
//! sector norms with weight `(1+|m|)^mu e^{beta|m| - nu|u|^order} / |u|`.
//!
//! Norms computed here are suprema over the stored grid, hence lower bounds
//! of the true sups; every report downstream labels them "empirical over
//! grid".

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
use num_traits::Float;

/// Where a symbol is defined: on a disc joined with an unbounded sector, or
/// on a sector only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTag {
    DiscAndSector,
    SectorOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolError {
    Argument(&'static str),
    /// Radial interpolation asked for a radius beyond the stored grid.
    Range { r: f64, r_max: f64 },
}

impl fmt::Display for SymbolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolError::Argument(m) => write!(f, "argument error: {m}"),
            SymbolError::Range { r, r_max } => {
                write!(f, "radius {r} beyond stored grid (max {r_max})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SymbolError {}

/// A function `w(u, m)` sampled on (ray direction) x (radial grid) x
/// (frequency grid), vanishing at `u = 0`.
///
/// `origin_slope[j]` stores `lim_{u->0} w(u, m_j)/u`, shared by all rays
/// (the symbol is analytic at the origin); radial evaluation below the first
/// grid node uses it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSymbol {
    directions: Vec<f64>,
    radial: Vec<f64>,
    freq: Vec<f64>,
    values: Vec<Complex64>,
    origin_slope: Vec<Complex64>,
    pub domain: DomainTag,
}

/// Width of the local Lagrange interpolation stencils.
pub(crate) const STENCIL: usize = 8;

/// Precomputed radial evaluation plan, reusable across frequency indices.
#[derive(Debug, Clone, Copy)]
pub enum RadialEval {
    /// Local Lagrange stencil starting at `base` with fixed weights.
    Stencil { base: usize, w: [f64; STENCIL] },
    /// Below the first node: linear continuation through the origin slope.
    Origin { r: f64 },
}

impl SampledSymbol {
    pub fn zeros(directions: Vec<f64>, radial: Vec<f64>, freq: Vec<f64>) -> Result<Self, SymbolError> {
        if directions.is_empty() || radial.len() < STENCIL || freq.is_empty() {
            return Err(SymbolError::Argument(
                "need at least one direction, eight radial nodes and one frequency",
            ));
        }
        if !strictly_increasing(&radial) || radial[0] <= 0.0 {
            return Err(SymbolError::Argument("radial grid must be positive and increasing"));
        }
        if !strictly_increasing(&freq) {
            return Err(SymbolError::Argument("frequency grid must be strictly increasing"));
        }
        let n = directions.len() * radial.len() * freq.len();
        Ok(SampledSymbol {
            directions,
            origin_slope: vec![Complex64::new(0.0, 0.0); freq.len()],
            radial,
            freq,
            values: vec![Complex64::new(0.0, 0.0); n],
            domain: DomainTag::DiscAndSector,
        })
    }

    /// Build by evaluating `f(direction, u, m)` at every node, with the
    /// origin slope supplied by `slope(m)`.
    pub fn from_fn<F, G>(
        directions: Vec<f64>,
        radial: Vec<f64>,
        freq: Vec<f64>,
        mut f: F,
        mut slope: G,
    ) -> Result<Self, SymbolError>
    where
        F: FnMut(f64, Complex64, f64) -> Complex64,
        G: FnMut(f64) -> Complex64,
    {
        let mut sym = SampledSymbol::zeros(directions, radial, freq)?;
        for d in 0..sym.directions.len() {
            let theta = sym.directions[d];
            for i in 0..sym.radial.len() {
                let u = Complex64::from_polar(sym.radial[i], theta);
                for j in 0..sym.freq.len() {
                    let m = sym.freq[j];
                    let idx = sym.index(d, i, j);
                    sym.values[idx] = f(theta, u, m);
                }
            }
        }
        for j in 0..sym.freq.len() {
            sym.origin_slope[j] = slope(sym.freq[j]);
        }
        Ok(sym)
    }

    pub fn directions(&self) -> &[f64] {
        &self.directions
    }

    pub fn radial(&self) -> &[f64] {
        &self.radial
    }

    pub fn freq(&self) -> &[f64] {
        &self.freq
    }

    pub fn origin_slope(&self) -> &[Complex64] {
        &self.origin_slope
    }

    pub fn set_origin_slope(&mut self, slope: Vec<Complex64>) {
        assert_eq!(slope.len(), self.freq.len());
        self.origin_slope = slope;
    }

    #[inline]
    pub fn index(&self, d: usize, i: usize, j: usize) -> usize {
        (d * self.radial.len() + i) * self.freq.len() + j
    }

    #[inline]
    pub fn value(&self, d: usize, i: usize, j: usize) -> Complex64 {
        self.values[self.index(d, i, j)]
    }

    #[inline]
    pub fn set(&mut self, d: usize, i: usize, j: usize, v: Complex64) {
        let idx = self.index(d, i, j);
        self.values[idx] = v;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Plan the radial evaluation at radius `r` (six-point Lagrange on the
    /// stored grid, origin continuation below it).
    pub fn radial_plan(&self, r: f64) -> Result<RadialEval, SymbolError> {
        let grid = &self.radial;
        let n = grid.len();
        if r < grid[0] {
            return Ok(RadialEval::Origin { r });
        }
        let r_max = grid[n - 1];
        if r > r_max * (1.0 + 1e-12) {
            return Err(SymbolError::Range { r, r_max });
        }
        let r = r.min(r_max);
        // Binary search for the bracketing interval.
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if grid[mid] <= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let base = lo.saturating_sub(STENCIL / 2 - 1).min(n - STENCIL);
        Ok(RadialEval::Stencil { base, w: lagrange_weights(grid, base, r) })
    }

    /// Evaluate a prepared radial plan at direction `d`, frequency index `j`.
    #[inline]
    pub fn eval_plan(&self, d: usize, j: usize, plan: &RadialEval) -> Complex64 {
        match plan {
            RadialEval::Origin { r } => self.origin_slope[j] * *r,
            RadialEval::Stencil { base, w } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, wa) in w.iter().enumerate() {
                    acc += self.value(d, base + a, j) * *wa;
                }
                acc
            }
        }
    }

    /// Interpolated value `w(r e^{i theta_d}, m_j)`.
    pub fn interp_radial(&self, d: usize, j: usize, r: f64) -> Result<Complex64, SymbolError> {
        let plan = self.radial_plan(r)?;
        Ok(self.eval_plan(d, j, &plan))
    }

    /// In-place linear update `self = self * a + other * b` (grids must match).
    pub fn axpy(&mut self, a: f64, other: &SampledSymbol, b: f64) {
        assert_eq!(self.values.len(), other.values.len());
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x = *x * a + *y * b;
        }
        for (x, y) in self.origin_slope.iter_mut().zip(&other.origin_slope) {
            *x = *x * a + *y * b;
        }
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Lagrange weights at `r` for the stencil `grid[base..base+STENCIL]`.
pub(crate) fn lagrange_weights(grid: &[f64], base: usize, r: f64) -> [f64; STENCIL] {
    let mut w = [0.0f64; STENCIL];
    for a in 0..STENCIL {
        let xa = grid[base + a];
        let mut num = 1.0;
        let mut den = 1.0;
        for b in 0..STENCIL {
            if a == b {
                continue;
            }
            let xb = grid[base + b];
            num *= r - xb;
            den *= xa - xb;
        }
        w[a] = num / den;
    }
    w
}

/// Parameters of the weighted sector norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    pub nu: f64,
    pub beta: f64,
    pub mu: f64,
    /// `k_1` for the inner space, `kappa_1` for the outer space.
    pub growth_order: f64,
}

/// Sup over the grid of `(1+|m|)^mu e^{beta|m|} |f(m)|`.
pub fn norm_e_beta_mu(mgrid: &[f64], vals: &[Complex64], beta: f64, mu: f64) -> Result<f64, SymbolError> {
    if mgrid.is_empty() || mgrid.len() != vals.len() {
        return Err(SymbolError::Argument("empty or mismatched frequency data"));
    }
    let mut sup = 0.0f64;
    for (&m, v) in mgrid.iter().zip(vals) {
        let w = (1.0 + m.abs()).powf(mu) * (beta * m.abs()).exp();
        sup = sup.max(w * v.norm());
    }
    Ok(sup)
}

/// Sup over all grid nodes of
/// `(1+|m|)^mu e^{beta|m| - nu r^order} |w(r e^{i theta}, m)| / r`.
///
/// The `u = 0` node is not stored (the symbol vanishes there and the weight
/// carries `1/|u|`), so every stored node participates.
pub fn norm_weighted(sym: &SampledSymbol, p: &NormParams) -> f64 {
    let mut sup = 0.0f64;
    let nd = sym.directions().len();
    let nr = sym.radial().len();
    let nm = sym.freq().len();
    let mut mweight = Vec::with_capacity(nm);
    for &m in sym.freq() {
        mweight.push((1.0 + m.abs()).powf(p.mu) * (p.beta * m.abs()).exp());
    }
    for d in 0..nd {
        for i in 0..nr {
            let r = sym.radial()[i];
            let rad_w = (-p.nu * r.powf(p.growth_order)).exp() / r;
            for j in 0..nm {
                sup = sup.max(mweight[j] * rad_w * sym.value(d, i, j).norm());
            }
        }
    }
    sup
}

/// Weighted norm of the difference of two symbols on the same grids, without
/// materialising the difference.
pub fn norm_weighted_diff(a: &SampledSymbol, b: &SampledSymbol, p: &NormParams) -> f64 {
    assert_eq!(a.values().len(), b.values().len());
    let mut sup = 0.0f64;
    let nd = a.directions().len();
    let nr = a.radial().len();
    let nm = a.freq().len();
    for d in 0..nd {
        for i in 0..nr {
            let r = a.radial()[i];
            let rad_w = (-p.nu * r.powf(p.growth_order)).exp() / r;
            for j in 0..nm {
                let m = a.freq()[j];
                let w = (1.0 + m.abs()).powf(p.mu) * (p.beta * m.abs()).exp() * rad_w;
                sup = sup.max(w * (a.value(d, i, j) - b.value(d, i, j)).norm());
            }
        }
    }
    sup
}

// ---------------------------------------------------------------------------
// Default grids
// ---------------------------------------------------------------------------

/// Geometric radial grid from `r_min` to at least `r_max` with the given
/// ratio (clamped to at most 1.15).
pub fn radial_grid(r_min: f64, r_max: f64, ratio: f64) -> Vec<f64> {
    assert!(r_min > 0.0 && r_max > r_min);
    let q = ratio.clamp(1.0005, 1.15);
    let mut grid = vec![r_min];
    let mut r = r_min;
    while r < r_max {
        r *= q;
        grid.push(r);
    }
    grid
}

/// Geometric radial grid with a derivative cap: the step never exceeds
/// `resolve / slope(r)`, so a symbol with log-derivative bounded by
/// `slope(r)` varies by at most `resolve` between nodes.
pub fn graded_radial_grid<F: Fn(f64) -> f64>(
    r_min: f64,
    r_max: f64,
    ratio: f64,
    slope: F,
    resolve: f64,
) -> Vec<f64> {
    assert!(r_min > 0.0 && r_max > r_min && resolve > 0.0);
    let q = ratio.clamp(1.0005, 1.15) - 1.0;
    let mut grid = vec![r_min];
    let mut r = r_min;
    while r < r_max {
        let s = slope(r).max(1e-12);
        let step = (q * r).min(resolve / s);
        r += step;
        grid.push(r);
    }
    grid
}

/// Symmetric hybrid frequency grid on `[-M, M]`: linear spacing `lin_step`
/// out to `lin_span`, then geometric with the given ratio out to the point
/// where `e^{-beta |m|} < tail_eps`. Zero is always a node.
pub fn freq_grid(beta: f64, tail_eps: f64, lin_span: f64, lin_step: f64, geo_ratio: f64) -> Vec<f64> {
    assert!(beta > 0.0 && tail_eps > 0.0 && lin_step > 0.0);
    let m_max = (-(tail_eps.ln()) / beta).max(lin_span);
    let mut pos = vec![0.0f64];
    let mut m = 0.0;
    while m < lin_span {
        m += lin_step;
        pos.push(m);
    }
    let q = geo_ratio.max(1.001);
    while m < m_max {
        m = (m * q).max(m + lin_step);
        pos.push(m);
    }
    let mut grid: Vec<f64> = pos.iter().skip(1).map(|&x| -x).collect();
    grid.reverse();
    grid.extend_from_slice(&pos);
    grid
}
