//! Core numerics for building and verifying sectorial solutions of a family of
//! singularly perturbed linear PDEs whose time part mixes an irregular operator
//! `t^{k+1} d/dt` with a Fuchsian operator `t d/dt`.
//!
//! The solution pipeline runs entirely in transformed variables: an innermost
//! Borel symbol `w(u, m)` is obtained as the fixed point of an affine
//! convolution operator ([`fixedpoint`]), lifted to `W(tau, m)` by a Laplace
//! transform of order `k'` and to the solution `u_p(t, z, eps)` by a Laplace
//! transform of order `k` plus Fourier inversion ([`laplace`]). The
//! [`asymptotics`] module fits the exponential-flatness and Gevrey orders that
//! the construction predicts, with `kappa = k k' / (k + k')`.
//!
//! The crate is `no_std` (with `alloc`); all IO, configuration and the CLI
//! live in the companion `itersum-cli` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod asymptotics;
pub mod banach;
pub mod fixedpoint;
pub mod geometry;
pub mod laplace;
pub mod opalgebra;
pub mod problem;
pub mod quad;
pub mod specfun;

pub use num_complex::Complex64;
