//! Scratch tuning harness (not shipped): jump-route ladder, symmetric geometry.
use itersum_core::asymptotics::flatness_fit;
use itersum_core::banach::{freq_grid, graded_radial_grid, norm_weighted, NormParams, SampledSymbol};
use itersum_core::fixedpoint::{solve_fixed_point, HOperator};
use itersum_core::laplace::{build_w_symbol, GrowthBound, SolutionContext};
use itersum_core::problem::*;
use itersum_core::Complex64;
use std::time::Instant;

const DEG: f64 = std::f64::consts::PI / 180.0;
const PI: f64 = std::f64::consts::PI;

fn spec(q_abs: f64, nu2: f64, cl: f64) -> ProblemSpec {
    let c_r = 0.5 / (72.0 * q_abs.powi(6));
    ProblemSpec {
        k: 3, kprime: 2, delta_d: 2, m_d: 3, k1: 1,
        index_set: vec![IndexPair { l1: 1, l2: 1 }, IndexPair { l1: 1, l2: 0 }],
        delta_l: vec![3, 3],
        rl_polys: vec![ComplexPoly::from_real(&[0.0, 1.0]); 2],
        coeff_profiles: vec![CoefficientProfile { amplitude: cl }; 2],
        q_poly: ComplexPoly::from_real(&[2.0, 2.0, 1.0]).scale(0.5),
        rd_poly: ComplexPoly::from_real(&[2.0, 2.0, 1.0]).scale(c_r),
        forcing: ForcingProfile { rule: PsiRule::Geometric, k0: 1.0, t0: 1.0 / nu2, truncation: 0 },
        beta: 1.0, mu: 2.5, epsilon0: 0.2,
    }
}

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let nuq: f64 = a.get(1).map(|s| s.parse().unwrap()).unwrap_or(2.6);
    let nuet: f64 = a.get(2).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let span: f64 = a.get(3).map(|s| s.parse().unwrap()).unwrap_or(50.0);
    let resolve: f64 = a.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.05);
    let gj: usize = a.get(5).map(|s| s.parse().unwrap()).unwrap_or(64);
    let delta_deg: f64 = a.get(6).map(|s| s.parse().unwrap()).unwrap_or(1.25);
    let et_top = 0.05;
    let nu2 = nuet / et_top;
    let q = nuq / nu2;
    let sp = spec(q, nu2, 0.005);
    println!("nu2={nu2:.1} T0={:.5} q={q:.4} span={span} resolve={resolve} gj={gj} delta={delta_deg}", sp.forcing.t0);
    let (g1, g2) = (150.0 * DEG, 210.0 * DEG);
    let bis = 180.0 * DEG;
    let dd = delta_deg * DEG;
    let rays = vec![g1, g2, PI - 2.0 * dd, PI - dd, PI + dd, PI + 2.0 * dd];
    let t0c = Instant::now();
    // u-grid: growth nu2 + root-zone boost.
    let r_max = {
        let tau_max = 0.33;
        let c = 0.5 / (tau_max * tau_max);
        (nu2 + (nu2 * nu2 + 4.0 * c * 46.0).sqrt()) / (2.0 * c) + 0.5
    };
    let boost = 10.0 / q;
    let slope = move |r: f64| nu2 + boost * (-((r - q) / (0.35 * q)).powi(2)).exp();
    let radial = graded_radial_grid(1e-8, r_max, 1.03, slope, resolve);
    let freq = freq_grid(1.0, 1e-12, 2.0, 0.08, 1.10);
    println!("Rmax={r_max:.2} NR={} NM={}", radial.len(), freq.len());
    let op = HOperator::new(&sp, rays.clone(), radial.clone(), freq.clone(), gj).unwrap();
    let (w, rep) = solve_fixed_point(&op, Complex64::from_polar(0.05, bis), 1e-13, 200).unwrap();
    let worst = rep.ratios.iter().cloned().fold(0.0, f64::max);
    println!("ratio={worst:.4} ball={:.3e} iters={} solve {:?}", rep.ball_radius, rep.iterations, t0c.elapsed());
    // Jump symbol on the slit ray (Richardson in delta), zero below q.
    let mut jump = SampledSymbol::zeros(vec![PI], radial.clone(), freq.clone()).unwrap();
    for i in 0..radial.len() {
        for j in 0..freq.len() {
            let v = if radial[i] < q { Complex64::new(0.0, 0.0) } else {
                let j1 = w.value(4, i, j) - w.value(3, i, j);  // J(delta)
                let j2 = w.value(5, i, j) - w.value(2, i, j);  // J(2 delta)
                j1 * 2.0 - j2
            };
            jump.set(0, i, j, v);
        }
    }
    let growth_w = GrowthBound { amplitude: rep.ball_radius, nu: nu2, order: 1.0 };
    let nu1 = nu2 * nu2 / 4.0 * 1.15;
    let tau_grid = graded_radial_grid(1e-9, 0.33, 1.03, |t| 2.0 * nu1 * t, resolve);
    // Own-ray outer symbols for both sectors + direct difference + wrap difference.
    let w1sym = build_w_symbol(&w, 0, 2, bis, tau_grid.clone(), 0.2, &growth_w).unwrap();
    let w2sym = build_w_symbol(&w, 1, 2, bis, tau_grid.clone(), 0.2, &growth_w).unwrap();
    let dw_wrap = build_w_symbol(&jump, 0, 2, bis, tau_grid.clone(), 0.2, &growth_w).unwrap();
    println!("symbols built {:?} NT={}", t0c.elapsed(), tau_grid.len());
    let j0 = freq.iter().position(|&m| m == 0.0).unwrap();
    println!("tau      |W1|       |dW direct|   |dW wrap|   ratio");
    for i in (0..tau_grid.len()).step_by((tau_grid.len() / 14).max(1)) {
        let t = tau_grid[i];
        let d_direct = (w2sym.value(0, i, j0) - w1sym.value(0, i, j0)).norm();
        let d_wrap = dw_wrap.value(0, i, j0).norm();
        println!("{t:.4}  {:.3e}  {d_direct:.4e}  {d_wrap:.4e}  {:.4}", w1sym.value(0, i, j0).norm(), d_wrap / d_direct.max(1e-300));
    }
    // Ladder via the wrap symbol.
    let np = NormParams { nu: nu1, beta: sp.beta, mu: sp.mu, growth_order: 2.0 };
    let rho = norm_weighted(&w1sym, &np);
    let g_out = GrowthBound { amplitude: rho, nu: nu1, order: 2.0 };
    let ctx1 = SolutionContext { w_symbol: &w1sym, k: 3, beta: 1.0, delta1: 0.2, growth: g_out };
    let ctxd = SolutionContext { w_symbol: &dw_wrap, k: 3, beta: 1.0, delta1: 0.2, growth: g_out };
    let zs: Vec<Complex64> = (0..12).map(|i| Complex64::new(-1.5 + (i % 4) as f64, -0.4 + 0.4 * (i / 4) as f64)).collect();
    let t_radii = [0.125, 0.25, 0.375, 0.5];
    let t_angles = [-2.5 * DEG, 0.0, 2.5 * DEG];
    let mut ladder = Vec::new();
    for i in 0..12 {
        let eps_abs = 0.1 * (1.0 / span).powf(i as f64 / 11.0);
        let eps = Complex64::from_polar(eps_abs, bis);
        let (mut sup_d, mut sup_u) = (0.0f64, 0.0f64);
        for &at in &t_angles {
            for &tr in &t_radii {
                let et = eps * Complex64::from_polar(tr, at);
                for &z in &zs {
                    sup_d = sup_d.max(ctxd.value(et, z).unwrap().norm());
                    sup_u = sup_u.max(ctx1.value(et, z).unwrap().norm());
                }
            }
        }
        println!("eps={eps_abs:.5}: sup|du|={sup_d:.6e}  sup|u|={sup_u:.3e}");
        ladder.push((eps_abs, sup_d));
    }
    match flatness_fit(&ladder, 1.2) {
        Ok(fit) => println!("kappa_est = {:.4}  K = {:.3e}  M = {:.4e}  r2 = {:.5}", fit.exponent_est, fit.k_est, fit.m_est, fit.r_squared),
        Err(e) => println!("fit failed: {e}"),
    }
    println!("total {:?}", t0c.elapsed());
}
