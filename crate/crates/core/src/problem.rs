//! Shared problem data: the structural integers, polynomials and constants
//! that define one instance of the PDE family, plus the coefficient and
//! forcing profiles consumed by the fixed-point solver.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

/// Polynomial with complex coefficients, stored in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map(|c| c.norm() == 0.0) == Some(true) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        ComplexPoly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        ComplexPoly::new(alloc::vec![Complex64::new(c, 0.0)])
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        ComplexPoly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Evaluate at `i m`, the form every symbol-side coefficient takes.
    pub fn eval_im(&self, m: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, m))
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

/// One element `(l1, l2)` of the index set `I`: the term
/// `(t^{k+1} d/dt)^{l1} (t d/dt)^{l2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct IndexPair {
    pub l1: u32,
    pub l2: u32,
}

/// Rule generating the forcing coefficient family `psi_n(m, eps)`.
///
/// Every rule is separable, `psi_n(m, eps) = s_n * phi(m)` with
/// `phi(m) = (1+|m|)^{-mu} e^{-beta |m|}`, which realises the norm bound
/// `||psi_n|| <= K0 (1/T0)^n` exactly on any grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiRule {
    /// No forcing at all.
    Zero,
    /// A single mode `n` with amplitude `K0 (1/T0)^n`.
    SingleMode { n: u32 },
    /// The default ladder `s_n = K0 (1/T0)^n` for every `n >= 1`.
    Geometric,
}

/// Forcing-term profile: the rule for `psi_n` together with its scale
/// constants and the series truncation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingProfile {
    pub rule: PsiRule,
    pub k0: f64,
    pub t0: f64,
    /// Truncation order for the Borel symbol series; `0` means adaptive.
    pub truncation: usize,
}

impl ForcingProfile {
    /// Geometric coefficient of mode `n >= 1` (without the `phi(m)` factor).
    pub fn mode_scale(&self, n: u32) -> f64 {
        match self.rule {
            PsiRule::Zero => 0.0,
            PsiRule::SingleMode { n: n0 } => {
                if n == n0 {
                    self.k0 * (1.0 / self.t0).powi(n as i32)
                } else {
                    0.0
                }
            }
            PsiRule::Geometric => self.k0 * (1.0 / self.t0).powi(n as i32),
        }
    }
}

/// Coefficient profile for one index pair: `C_l(m, eps) = amplitude * phi(m)`,
/// so that `sup_eps ||C_l||_(beta,mu) = |amplitude|` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientProfile {
    pub amplitude: f64,
}

/// The exponential-decay frequency profile `(1+|m|)^{-mu} e^{-beta |m|}`
/// shared by the default forcing and coefficient constructions.
pub fn freq_profile(beta: f64, mu: f64, m: f64) -> f64 {
    (1.0 + m.abs()).powf(-mu) * (-beta * m.abs()).exp()
}

/// Full structural description of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub k: u32,
    pub kprime: u32,
    pub delta_d: u32,
    pub m_d: u32,
    pub k1: u32,
    /// Index set `I` with, per entry, the epsilon exponent `Delta_l`, the
    /// polynomial `R_l` and the coefficient profile `C_l`.
    pub index_set: Vec<IndexPair>,
    pub delta_l: Vec<u32>,
    pub rl_polys: Vec<ComplexPoly>,
    pub coeff_profiles: Vec<CoefficientProfile>,
    pub q_poly: ComplexPoly,
    pub rd_poly: ComplexPoly,
    pub forcing: ForcingProfile,
    pub beta: f64,
    pub mu: f64,
    pub epsilon0: f64,
}

impl ProblemSpec {
    /// `k * delta_D`, the degree of `P_m(u)` in `u`.
    pub fn k_delta_d(&self) -> u32 {
        self.k * self.delta_d
    }

    /// `k^{delta_D} (k')^{m_D}`.
    pub fn leading_factor(&self) -> f64 {
        (self.k as f64).powi(self.delta_d as i32) * (self.kprime as f64).powi(self.m_d as i32)
    }

    /// `P_m(u) = Q(im) - R_D(im) k^{delta_D} (k')^{m_D} u^{k delta_D}`.
    pub fn p_m(&self, m: f64, u: Complex64) -> Complex64 {
        let lead = self.leading_factor();
        self.q_poly.eval_im(m) - self.rd_poly.eval_im(m) * lead * u.powu(self.k_delta_d())
    }

    /// Whether the fixed point depends on `eps` at all: it does not when all
    /// `Delta_l = k l1` (the epsilon powers collapse), since the shipped
    /// coefficient profiles are eps-independent.
    pub fn fixed_point_depends_on_eps(&self) -> bool {
        self.index_set
            .iter()
            .zip(&self.delta_l)
            .any(|(idx, &dl)| dl != self.k * idx.l1)
    }
}

#[cfg(test)]
pub(crate) mod testcfg {
    //! Shared reference configuration for in-crate tests: the two-level
    //! instance with k = 3, k' = 2, delta_D = 2, m_D = 3, k1 = 1 and the
    //! index set {(1,1), (1,0)}.
    use super::*;
    use alloc::vec;

    pub fn example_spec() -> ProblemSpec {
        ProblemSpec {
            k: 3,
            kprime: 2,
            delta_d: 2,
            m_d: 3,
            k1: 1,
            index_set: vec![IndexPair { l1: 1, l2: 1 }, IndexPair { l1: 1, l2: 0 }],
            delta_l: vec![3, 3],
            rl_polys: vec![ComplexPoly::from_real(&[0.0, 1.0]); 2],
            coeff_profiles: vec![CoefficientProfile { amplitude: 0.1 }; 2],
            q_poly: ComplexPoly::from_real(&[2.0, 2.0, 1.0]).scale(600.0),
            rd_poly: ComplexPoly::from_real(&[2.0, 2.0, 1.0]),
            forcing: ForcingProfile { rule: PsiRule::Geometric, k0: 1.0, t0: 1.0, truncation: 0 },
            beta: 1.0,
            mu: 2.5,
            epsilon0: 0.1,
        }
    }
}
