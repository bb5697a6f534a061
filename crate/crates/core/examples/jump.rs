//! Measure Delta W = W_1 - W_2 on a common tau-ray in the S-overlap.
use itersum_core::banach::{freq_grid, radial_grid};
use itersum_core::fixedpoint::{solve_fixed_point, HOperator};
use itersum_core::laplace::{build_w_symbol, GrowthBound};
use itersum_core::problem::*;
use itersum_core::Complex64;

fn spec(q_abs: f64, cl: f64) -> ProblemSpec {
    let qs = 72.0 * q_abs.powi(6);
    let t0 = 0.282 * q_abs;
    ProblemSpec {
        k: 3, kprime: 2, delta_d: 2, m_d: 3, k1: 1,
        index_set: vec![IndexPair { l1: 1, l2: 1 }, IndexPair { l1: 1, l2: 0 }],
        delta_l: vec![3, 3],
        rl_polys: vec![ComplexPoly::from_real(&[0.0, 1.0]); 2],
        coeff_profiles: vec![CoefficientProfile { amplitude: cl }; 2],
        q_poly: ComplexPoly::from_real(&[2.0, 2.0, 1.0]).scale(qs),
        rd_poly: ComplexPoly::from_real(&[2.0, 2.0, 1.0]),
        forcing: ForcingProfile { rule: PsiRule::Geometric, k0: 1.0, t0, truncation: 0 },
        beta: 1.0, mu: 2.5, epsilon0: 0.2,
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let q_abs: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.4);
    let sp = spec(q_abs, 0.1);
    let radial = radial_grid(1e-7, 11.0, 1.02);
    let freq = freq_grid(1.0, 1e-12, 2.0, 0.1, 1.10);
    let (g1, g2) = (2.4538f64, 3.6653f64); // u-ray directions (sector bisectors)
    let gt = 3.05f64; // common tau-ray in the S-overlap
    println!("damping1 = {:.3}, damping2 = {:.3}", (2.0*(g1-gt)).cos(), (2.0*(g2-gt)).cos());
    let op = HOperator::new(&sp, vec![g1, g2], radial.clone(), freq.clone(), 32).unwrap();
    let (w, rep) = solve_fixed_point(&op, Complex64::new(0.05, 0.0), 1e-13, 120).unwrap();
    println!("ratio={:.3} ball={:.3e}", rep.ratios.iter().cloned().fold(0.0, f64::max), rep.ball_radius);
    let growth = GrowthBound { amplitude: rep.ball_radius, nu: 1.0 / sp.forcing.t0, order: 1.0 };
    let tau_grid = radial_grid(0.03, 0.45, 1.06);
    let w1 = build_w_symbol(&w, 0, 2, gt, tau_grid.clone(), 0.05, &growth).unwrap();
    let w2 = build_w_symbol(&w, 1, 2, gt, tau_grid.clone(), 0.05, &growth).unwrap();
    let j0 = freq.iter().position(|&m| m == 0.0).unwrap();
    println!("tau      |W1|        |DW|       |DW|/pred(e^{{-c q^2/t^2}})");
    for i in (0..tau_grid.len()).step_by(4) {
        let tau = tau_grid[i];
        let a = w1.value(0, i, j0);
        let b = w2.value(0, i, j0);
        let cq = (2.0f64 * (std::f64::consts::PI - gt)).cos();
        let pred = (-(q_abs / tau).powi(2) * cq).exp();
        println!("{tau:.4}  {:.4e}  {:.4e}  {:.3e}", a.norm(), (a - b).norm(), (a - b).norm() / pred);
    }
}
