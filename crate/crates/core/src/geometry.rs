//! Complex-sector geometry: the roots of `P_m(u)`, annulus containment of
//! `Q(im)/R_D(im)`, empirical sector lower-bound constants, good coverings of
//! the punctured plane, admissible data assembly, and ray-direction selection
//! for the Laplace transforms.
//!
//! All "constants" produced here (`M1`, `M2`, quotient bounds, ...) are
//! empirical grid minima/suprema over the supplied grids, not proved bounds.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
use num_traits::Float;

use crate::problem::ProblemSpec;

const TAU: f64 = 2.0 * core::f64::consts::PI;

/// Wrap an angle into `[-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    x - TAU * (x / TAU).round()
}

/// A sector at the origin: bisecting direction, aperture, optional radius
/// (`None` means unbounded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub direction: f64,
    pub aperture: f64,
    pub radius: Option<f64>,
}

impl Sector {
    pub fn unbounded(direction: f64, aperture: f64) -> Self {
        Sector { direction, aperture, radius: None }
    }

    pub fn bounded(direction: f64, aperture: f64, radius: f64) -> Self {
        Sector { direction, aperture, radius: Some(radius) }
    }

    /// Half-open angular membership: offsets in `[-ap/2, ap/2)` count, so
    /// shared boundaries are not double-counted in covering checks.
    pub fn contains_angle(&self, theta: f64) -> bool {
        let d = wrap_angle(theta - self.direction);
        -0.5 * self.aperture <= d && d < 0.5 * self.aperture
    }

    pub fn contains(&self, z: Complex64) -> bool {
        if z.norm() == 0.0 {
            return false;
        }
        if let Some(r) = self.radius {
            if z.norm() >= r {
                return false;
            }
        }
        self.contains_angle(z.arg())
    }

    /// Angular distance from the bisecting direction.
    pub fn offset_of(&self, theta: f64) -> f64 {
        wrap_angle(theta - self.direction)
    }
}

/// Bounded sectorial annulus `r1 < |z| < r2`, `|arg z - direction| <= eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub r1: f64,
    pub r2: f64,
    pub direction: f64,
    pub eta: f64,
}

impl Annulus {
    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r > self.r1 && r < self.r2 && wrap_angle(z.arg() - self.direction).abs() <= self.eta
    }
}

/// Result of an annulus-containment sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusReport {
    pub contained: bool,
    /// Violating `m` and the ratio value there, when not contained.
    pub witness: Option<(f64, Complex64)>,
}

/// Empirical sector lower-bound constants (grid minima; certified only on
/// the supplied grids).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorConstants {
    /// `min |u - q_l(m)| / (1 + |u|)` over all roots and grid nodes.
    pub m1: f64,
    /// `min |u - q_{l0}(m)| / |q_{l0}(m)|` for the best single root index.
    pub m2: f64,
    /// The root index realising `m2` (tie-break: largest grid minimum).
    pub l0: usize,
    /// Empirical constant `c` in `|P_m(u)| >= c |R_D(im)| (1+|u|)^{k delta_D - 1}`.
    pub lower_bound_factor: f64,
}

/// The admissible collection: the good covering, the Borel-plane sectors,
/// the time sector and the disc radius, together with the kernel-damping
/// margins used by the transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleData {
    /// Good covering `E_p` in the epsilon plane (bounded, radius eps0).
    pub coverings: Vec<Sector>,
    /// Unbounded sectors `U_p` where the inner Borel symbol lives.
    pub u_sectors: Vec<Sector>,
    /// Unbounded sectors `S_p` where the outer Borel map lives.
    pub s_sectors: Vec<Sector>,
    /// Bounded time sector.
    pub t_sector: Sector,
    /// Radius of the shared disc at the origin in the inner Borel plane.
    pub disc_radius: f64,
    /// Kernel damping margin for order-k rays.
    pub delta1: f64,
    /// Kernel damping margin for order-k' rays.
    pub delta2: f64,
    /// Aperture of the product sector holding eps*t.
    pub theta_kkp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    Argument(&'static str),
    /// `R_D(im)` vanished (or nearly) at the witness frequency.
    DegenerateCoefficient { m: f64 },
    /// A sector constant came out non-positive; carries the nearest approach.
    SectorRejected { m: f64, u: Complex64, root: Complex64 },
    /// Good-covering clause failures with an angular witness.
    CoveringGap { angle: f64 },
    TripleOverlap { angle: f64 },
    ConsecutiveEmpty { p: usize },
    MixedRadii,
    /// Admissibility clause failure; names the first failed clause.
    AdmissibilityFailed { clause: String },
    /// No ray direction satisfies the cone condition.
    DirectionInfeasible { arg_t: f64, k: u32 },
    Infeasible(&'static str),
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::Argument(m) => write!(f, "argument error: {m}"),
            GeometryError::DegenerateCoefficient { m } => {
                write!(f, "R_D(im) vanishes near m = {m}")
            }
            GeometryError::SectorRejected { m, u, root } => write!(
                f,
                "sector rejected: grid point u = {u} meets root {root} at m = {m}"
            ),
            GeometryError::CoveringGap { angle } => {
                write!(f, "covering leaves angle {angle} uncovered")
            }
            GeometryError::TripleOverlap { angle } => {
                write!(f, "three sectors overlap at angle {angle}")
            }
            GeometryError::ConsecutiveEmpty { p } => {
                write!(f, "sectors {p} and {} do not intersect", p + 1)
            }
            GeometryError::MixedRadii => write!(f, "covering sectors must share one radius"),
            GeometryError::AdmissibilityFailed { clause } => {
                write!(f, "admissibility failed: {clause}")
            }
            GeometryError::DirectionInfeasible { arg_t, k } => write!(
                f,
                "no ray direction satisfies cos(k(gamma - arg T)) >= delta1 for arg T = {arg_t}, k = {k}"
            ),
            GeometryError::Infeasible(m) => write!(f, "infeasible geometry: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeometryError {}

/// The `k delta_D` roots `q_l(m)` of
/// `P_m(u) = Q(im) - R_D(im) k^{delta_D} (k')^{m_D} u^{k delta_D}`.
pub fn roots_qlm(spec: &ProblemSpec, m: f64) -> Result<Vec<Complex64>, GeometryError> {
    let rd = spec.rd_poly.eval_im(m);
    if rd.norm() < 1e-300 {
        return Err(GeometryError::DegenerateCoefficient { m });
    }
    let n = spec.k_delta_d();
    let ratio = spec.q_poly.eval_im(m) / (rd * spec.leading_factor());
    let modulus = ratio.norm().powf(1.0 / n as f64);
    let base_arg = ratio.arg() / n as f64;
    Ok((0..n)
        .map(|l| {
            let theta = base_arg + TAU * l as f64 / n as f64;
            Complex64::from_polar(modulus, theta)
        })
        .collect())
}

/// Check that `Q(im)/R_D(im)` stays inside the annulus for every grid `m`.
/// An empty grid is vacuously contained.
pub fn check_annulus_containment(
    spec: &ProblemSpec,
    annulus: &Annulus,
    mgrid: &[f64],
) -> AnnulusReport {
    for &m in mgrid {
        let rd = spec.rd_poly.eval_im(m);
        let q = spec.q_poly.eval_im(m);
        if rd.norm() < 1e-300 {
            return AnnulusReport {
                contained: false,
                witness: Some((m, Complex64::new(f64::INFINITY, 0.0))),
            };
        }
        let ratio = q / rd;
        if !annulus.contains(ratio) {
            return AnnulusReport { contained: false, witness: Some((m, ratio)) };
        }
    }
    AnnulusReport { contained: true, witness: None }
}

/// Guard grid for sector-constant estimation: rays across the sector aperture
/// at the supplied radii, plus disc samples.
pub fn sector_guard_points(
    sector: &Sector,
    disc_radius: f64,
    radii: &[f64],
    n_dirs: usize,
) -> Vec<Complex64> {
    let mut pts = Vec::new();
    let nd = n_dirs.max(2);
    for i in 0..nd {
        let frac = i as f64 / (nd - 1) as f64;
        let theta = sector.direction + (frac - 0.5) * sector.aperture;
        for &r in radii {
            pts.push(Complex64::from_polar(r, theta));
        }
    }
    for i in 0..12 {
        let theta = TAU * i as f64 / 12.0;
        for j in 1..=4 {
            let r = disc_radius * j as f64 / 4.0;
            pts.push(Complex64::from_polar(r, theta));
        }
    }
    pts
}

/// Empirical `M1`, `M2` and the `P_m` lower-bound factor over the guard grid.
///
/// Rejects the sector as soon as any margin is non-positive, reporting the
/// nearest approach between the grid and the roots.
pub fn estimate_sector_constants(
    spec: &ProblemSpec,
    upoints: &[Complex64],
    mgrid: &[f64],
) -> Result<SectorConstants, GeometryError> {
    if upoints.is_empty() || mgrid.is_empty() {
        return Err(GeometryError::Argument("empty guard grids"));
    }
    let n_roots = spec.k_delta_d() as usize;
    let mut m1 = f64::INFINITY;
    let mut per_root_min = vec![f64::INFINITY; n_roots];
    let mut cp = f64::INFINITY;
    let mut nearest = (0.0f64, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), f64::INFINITY);
    for &m in mgrid {
        let roots = roots_qlm(spec, m)?;
        let rd_norm = spec.rd_poly.eval_im(m).norm();
        for &u in upoints {
            let denom = 1.0 + u.norm();
            for (l, &q) in roots.iter().enumerate() {
                let dist = (u - q).norm();
                if dist < nearest.3 {
                    nearest = (m, u, q, dist);
                }
                m1 = m1.min(dist / denom);
                per_root_min[l] = per_root_min[l].min(dist / q.norm());
            }
            let p = spec.p_m(m, u);
            let bound = rd_norm * denom.powi(spec.k_delta_d() as i32 - 1);
            cp = cp.min(p.norm() / bound);
        }
    }
    // Tie-break for l0: the root index whose grid minimum is largest.
    let (l0, &m2) = per_root_min
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("at least one root");
    if !(m1 > 0.0 && m2 > 0.0 && cp > 0.0) {
        return Err(GeometryError::SectorRejected { m: nearest.0, u: nearest.1, root: nearest.2 });
    }
    Ok(SectorConstants { m1, m2, l0, lower_bound_factor: cp })
}

/// Empirical and closed-form bounds for the quotient
/// `|P_{m1}(u) R_D(im) / (P_m(u) R_D(im1))|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientBound {
    pub empirical: f64,
    pub closed_form: f64,
}

/// Sup of the `P`-quotient over the grids, compared against the closed-form
/// envelope `sup_x (r2 + K x^{k delta_D}) / (K M1^{k delta_D} (1+x)^{k delta_D})`.
pub fn quotient_bound(
    spec: &ProblemSpec,
    upoints: &[Complex64],
    mgrid: &[f64],
    m1: f64,
    r2: f64,
) -> Result<QuotientBound, GeometryError> {
    if upoints.is_empty() || mgrid.is_empty() {
        return Err(GeometryError::Argument("empty grids"));
    }
    let mut sup = 0.0f64;
    for &u in upoints {
        let vals: Vec<f64> = mgrid
            .iter()
            .map(|&m| (spec.p_m(m, u) / spec.rd_poly.eval_im(m)).norm())
            .collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        let q = hi / lo;
        if q.is_finite() {
            sup = sup.max(q);
        }
    }
    let n = spec.k_delta_d() as i32;
    let kfac = spec.leading_factor();
    let mut closed = 1.0 / m1.powi(n); // x -> infinity limit
    closed = closed.max(r2 / (kfac * m1.powi(n)));
    let mut x = 1e-6;
    while x < 1e6 {
        let v = (r2 + kfac * x.powi(n)) / (kfac * m1.powi(n) * (1.0 + x).powi(n));
        closed = closed.max(v);
        x *= 1.12;
    }
    Ok(QuotientBound { empirical: sup, closed_form: closed })
}

// ---------------------------------------------------------------------------
// Good coverings
// ---------------------------------------------------------------------------

/// Decompose the circle by all sector boundary angles and return the midpoint
/// of each elementary arc; membership tests at these midpoints decide the
/// covering clauses without boundary ambiguity.
fn elementary_midpoints(sectors: &[Sector]) -> Vec<f64> {
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * sectors.len());
    for s in sectors {
        cuts.push(wrap_angle(s.direction - 0.5 * s.aperture));
        cuts.push(wrap_angle(s.direction + 0.5 * s.aperture));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let n = cuts.len();
    let mut mids = Vec::with_capacity(n);
    for i in 0..n {
        let lo = cuts[i];
        let hi = if i + 1 < n { cuts[i + 1] } else { cuts[0] + TAU };
        mids.push(wrap_angle(0.5 * (lo + hi)));
    }
    mids
}

/// Verify the three good-covering clauses: consecutive intersections
/// non-empty, no triple intersections, and the union covers a full punctured
/// neighbourhood of the origin. Sectors must share one radius.
pub fn verify_good_covering(sectors: &[Sector]) -> Result<(), GeometryError> {
    if sectors.len() < 2 {
        return Err(GeometryError::Argument("a good covering needs at least two sectors"));
    }
    let r0 = sectors[0].radius;
    if r0.is_none() || sectors.iter().any(|s| s.radius != r0) {
        return Err(GeometryError::MixedRadii);
    }
    let mids = elementary_midpoints(sectors);
    for &theta in &mids {
        let c = sectors.iter().filter(|s| s.contains_angle(theta)).count();
        if c == 0 {
            return Err(GeometryError::CoveringGap { angle: theta });
        }
        if c >= 3 {
            return Err(GeometryError::TripleOverlap { angle: theta });
        }
    }
    let n = sectors.len();
    for p in 0..n {
        let q = (p + 1) % n;
        let hit = mids
            .iter()
            .any(|&t| sectors[p].contains_angle(t) && sectors[q].contains_angle(t));
        if !hit {
            return Err(GeometryError::ConsecutiveEmpty { p });
        }
    }
    Ok(())
}

/// Build a good covering from prescribed apertures (sum must exceed 2 pi):
/// the total excess is distributed as equal consecutive overlaps and the
/// directions chained accordingly, starting from `first_direction`.
pub fn good_covering_from_apertures(
    apertures: &[f64],
    first_direction: f64,
    epsilon0: f64,
) -> Result<Vec<Sector>, GeometryError> {
    let n = apertures.len();
    if n < 2 {
        return Err(GeometryError::Argument("a good covering needs at least two sectors"));
    }
    let total: f64 = apertures.iter().sum();
    if total <= TAU {
        return Err(GeometryError::Infeasible("aperture sum must exceed 2 pi"));
    }
    let overlap = (total - TAU) / n as f64;
    let mut sectors = Vec::with_capacity(n);
    let mut dir = first_direction;
    for p in 0..n {
        sectors.push(Sector::bounded(wrap_angle(dir), apertures[p], epsilon0));
        let next = apertures[(p + 1) % n];
        dir += 0.5 * (apertures[p] + next) - overlap;
    }
    verify_good_covering(&sectors)?;
    Ok(sectors)
}

/// Uniform good covering of `varsigma >= 2` sectors with radius `epsilon0`.
pub fn build_good_covering(varsigma: usize, epsilon0: f64) -> Result<Vec<Sector>, GeometryError> {
    if varsigma < 2 {
        return Err(GeometryError::Argument("varsigma must be at least 2"));
    }
    let apertures = vec![TAU / varsigma as f64 * 1.10; varsigma];
    good_covering_from_apertures(&apertures, 0.0, epsilon0)
}

// ---------------------------------------------------------------------------
// Direction selection
// ---------------------------------------------------------------------------

/// Choose the integration-ray direction `gamma` with `L_gamma` inside the
/// sector and `cos(k (gamma - arg T)) >= delta1`.
///
/// Deterministic: of all feasible directions, the one closest to the
/// bisecting direction is returned.
pub fn select_direction(
    sector: &Sector,
    k: u32,
    t_scale: Complex64,
    delta1: f64,
) -> Result<f64, GeometryError> {
    if !(delta1 > 0.0 && delta1 < 1.0) {
        return Err(GeometryError::Argument("delta1 must lie in (0, 1)"));
    }
    if t_scale.norm() == 0.0 || sector.aperture <= 0.0 || k == 0 {
        return Err(GeometryError::Argument("degenerate sector, order, or scale"));
    }
    let arg_t = t_scale.arg();
    // Tiny interior margin keeps the damping strictly above delta1 so the
    // transform's own feasibility re-check cannot trip on rounding.
    let reach = (delta1.acos() - 1e-7) / k as f64;
    // Interior margin keeps the ray strictly inside the open sector.
    let margin = 1e-9 * sector.aperture.max(1.0);
    let lo_s = -0.5 * sector.aperture + margin;
    let hi_s = 0.5 * sector.aperture - margin;
    let mut best: Option<f64> = None;
    for j in -(k as i64 + 2)..=(k as i64 + 2) {
        // Candidate cone j, expressed as an offset from the bisector.
        let centre = wrap_angle(arg_t + TAU * j as f64 / k as f64 - sector.direction);
        for shift in [-TAU, 0.0, TAU] {
            let lo = centre + shift - reach;
            let hi = centre + shift + reach;
            let l = lo.max(lo_s);
            let h = hi.min(hi_s);
            if l <= h {
                let cand = l.max(0.0).min(h);
                match best {
                    Some(b) if b.abs() <= cand.abs() => {}
                    _ => best = Some(cand),
                }
            }
        }
    }
    match best {
        Some(offset) => Ok(sector.direction + offset),
        None => Err(GeometryError::DirectionInfeasible { arg_t, k }),
    }
}

// ---------------------------------------------------------------------------
// Admissible data
// ---------------------------------------------------------------------------

/// Heuristic construction of admissible data with a uniform covering:
/// directions are placed to maximise clearance from the root rays, the
/// Borel-plane apertures are chained from the covering aperture, and the
/// whole proposal is re-verified through [`verify_admissible_data`].
#[allow(clippy::too_many_arguments)]
pub fn build_admissible_data(
    spec: &ProblemSpec,
    varsigma: usize,
    mgrid: &[f64],
    t_aperture: f64,
    t_radius: f64,
    delta1: f64,
    delta2: f64,
) -> Result<AdmissibleData, GeometryError> {
    if varsigma < 2 {
        return Err(GeometryError::Argument("varsigma must be at least 2"));
    }
    let mut root_angles: Vec<f64> = Vec::new();
    for &m in mgrid {
        for q in roots_qlm(spec, m)? {
            root_angles.push(q.arg());
        }
    }
    if root_angles.is_empty() {
        return Err(GeometryError::Argument("empty frequency grid"));
    }
    // Scan offsets for the placement maximising the minimum clearance from
    // any direction d_p = offset + 2 pi p / varsigma to the root rays.
    let step = TAU / varsigma as f64;
    let mut best_offset = 0.0;
    let mut best_clearance = -1.0;
    for i in 0..720 {
        let offset = TAU * i as f64 / 720.0;
        let mut clearance = f64::INFINITY;
        for p in 0..varsigma {
            let d = offset + step * p as f64;
            for &ra in &root_angles {
                clearance = clearance.min(wrap_angle(d - ra).abs());
            }
        }
        if clearance > best_clearance {
            best_clearance = clearance;
            best_offset = offset;
        }
    }
    if best_clearance <= 0.02 {
        return Err(GeometryError::Infeasible("root rays leave no angular clearance"));
    }
    let directions: Vec<f64> =
        (0..varsigma).map(|p| wrap_angle(best_offset + step * p as f64)).collect();
    let coverings: Vec<Sector> = directions
        .iter()
        .map(|&d| Sector::bounded(d, step * 1.10, spec.epsilon0))
        .collect();
    verify_good_covering(&coverings)?;
    let theta_u = (best_clearance * 0.9).min(0.6);
    let pi = core::f64::consts::PI;
    let theta_s_cap = pi / spec.kprime as f64 + theta_u - 1e-3;
    let theta_s_need = step * 1.05;
    if theta_s_need >= theta_s_cap {
        return Err(GeometryError::Infeasible("S-sector aperture cap below covering requirement"));
    }
    let theta_s = 0.5 * (theta_s_need + theta_s_cap);
    let u_sectors: Vec<Sector> =
        directions.iter().map(|&d| Sector::unbounded(d, theta_u)).collect();
    let s_sectors: Vec<Sector> =
        directions.iter().map(|&d| Sector::unbounded(d, theta_s)).collect();
    let t_sector = Sector::bounded(0.0, t_aperture, t_radius);
    let mut min_root = f64::INFINITY;
    for &m in mgrid {
        for q in roots_qlm(spec, m)? {
            min_root = min_root.min(q.norm());
        }
    }
    let disc_radius = 0.25 * min_root;
    let theta_kkp_need = coverings[0].aperture + t_aperture;
    let theta_kkp_cap = pi / spec.k as f64 + theta_s;
    if theta_kkp_need >= theta_kkp_cap {
        return Err(GeometryError::Infeasible("product-sector aperture cap exceeded"));
    }
    let data = AdmissibleData {
        coverings,
        u_sectors,
        s_sectors,
        t_sector,
        disc_radius,
        delta1,
        delta2,
        theta_kkp: 0.5 * (theta_kkp_need + theta_kkp_cap),
    };
    verify_admissible_data(spec, &data, mgrid)?;
    Ok(data)
}

/// Per-sector entries of the admissibility report.
#[derive(Debug, Clone)]
pub struct AdmissibleReport {
    pub sector_constants: Vec<SectorConstants>,
    /// Index of a covering sector with aperture above `pi / kappa`, when one
    /// exists (the aperture criterion for promoting a solution to the
    /// kappa-sum).
    pub summability_aperture: Option<usize>,
}

/// Independent re-verification of an admissible-data proposal, walking the
/// definition clause by clause on sampled grids. This is a separate code
/// path from the constructors; every accepted proposal must pass it.
pub fn verify_admissible_data(
    spec: &ProblemSpec,
    data: &AdmissibleData,
    mgrid: &[f64],
) -> Result<AdmissibleReport, GeometryError> {
    let n = data.coverings.len();
    if n < 2 || data.u_sectors.len() != n || data.s_sectors.len() != n {
        return Err(GeometryError::AdmissibilityFailed {
            clause: String::from("sector family sizes disagree"),
        });
    }
    verify_good_covering(&data.coverings).map_err(|e| GeometryError::AdmissibilityFailed {
        clause: format!("E is not a good covering: {e}"),
    })?;
    let pi = core::f64::consts::PI;
    // Clause 1: sector constants positive on U_p union D(0, r).
    let radii: Vec<f64> = (0..24)
        .map(|i| data.disc_radius * 0.5 + (i as f64 / 23.0) * 4.0)
        .collect();
    let mut constants = Vec::with_capacity(n);
    for (p, u_sec) in data.u_sectors.iter().enumerate() {
        let pts = sector_guard_points(u_sec, data.disc_radius, &radii, 9);
        let c = estimate_sector_constants(spec, &pts, mgrid).map_err(|e| {
            GeometryError::AdmissibilityFailed {
                clause: format!("clause 1 fails for p = {p}: {e}"),
            }
        })?;
        constants.push(c);
    }
    // Clause 2: S-sectors consecutively overlapping and covering the circle.
    let mids = elementary_midpoints(&data.s_sectors);
    for &theta in &mids {
        if !data.s_sectors.iter().any(|s| s.contains_angle(theta)) {
            return Err(GeometryError::AdmissibilityFailed {
                clause: format!("clause 2.2 fails: angle {theta} uncovered by S"),
            });
        }
    }
    for p in 0..n {
        let q = (p + 1) % n;
        let hit = mids
            .iter()
            .any(|&t| data.s_sectors[p].contains_angle(t) && data.s_sectors[q].contains_angle(t));
        if !hit {
            return Err(GeometryError::AdmissibilityFailed {
                clause: format!("clause 2.1 fails: S_{p} and S_{q} do not intersect"),
            });
        }
    }
    for (p, (s, u)) in data.s_sectors.iter().zip(&data.u_sectors).enumerate() {
        if !(s.aperture > 0.0 && s.aperture < pi / spec.kprime as f64 + u.aperture) {
            return Err(GeometryError::AdmissibilityFailed {
                clause: format!("S aperture cap fails at p = {p}"),
            });
        }
    }
    // Clause 3: sampled products eps*t stay in the product sector, with
    // numerically feasible ray selections at the configured margins.
    if !(data.theta_kkp > 0.0
        && data
            .s_sectors
            .iter()
            .all(|s| data.theta_kkp < pi / spec.k as f64 + s.aperture))
    {
        return Err(GeometryError::AdmissibilityFailed {
            clause: String::from("product aperture theta_{k,k'} cap fails"),
        });
    }
    let t_radius = data.t_sector.radius.ok_or_else(|| GeometryError::AdmissibilityFailed {
        clause: String::from("time sector must be bounded"),
    })?;
    for (p, e_sec) in data.coverings.iter().enumerate() {
        let product = Sector::bounded(
            data.s_sectors[p].direction,
            data.theta_kkp,
            spec.epsilon0 * t_radius,
        );
        for ei in 0..5 {
            for ti in 0..5 {
                let eps_arg = e_sec.direction + (ei as f64 / 4.0 - 0.5) * e_sec.aperture * 0.999;
                let t_arg = data.t_sector.direction
                    + (ti as f64 / 4.0 - 0.5) * data.t_sector.aperture * 0.999;
                let eps = Complex64::from_polar(spec.epsilon0 * 0.999, eps_arg);
                let t = Complex64::from_polar(t_radius * 0.999, t_arg);
                let et = eps * t;
                if !product.contains(et) {
                    return Err(GeometryError::AdmissibilityFailed {
                        clause: format!(
                            "clause 3 fails for p = {p}: eps*t = {et} outside product sector"
                        ),
                    });
                }
                let gamma = select_direction(&data.s_sectors[p], spec.k, et, data.delta1)
                    .map_err(|e| GeometryError::AdmissibilityFailed {
                        clause: format!("order-k ray infeasible for p = {p}: {e}"),
                    })?;
                let tau_dir = Complex64::from_polar(1.0, gamma);
                select_direction(&data.u_sectors[p], spec.kprime, tau_dir, data.delta2).map_err(
                    |e| GeometryError::AdmissibilityFailed {
                        clause: format!("order-k' ray infeasible for p = {p}: {e}"),
                    },
                )?;
            }
        }
    }
    // Aperture criterion for kappa-summability (reported, not required).
    let kappa = crate::asymptotics::kappa_of(spec.k, spec.kprime);
    let kappa_f = *kappa.numer() as f64 / *kappa.denom() as f64;
    let summability_aperture =
        data.coverings.iter().position(|s| s.aperture > pi / kappa_f);
    Ok(AdmissibleReport { sector_constants: constants, summability_aperture })
}
