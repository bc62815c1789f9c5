#![allow(non_snake_case)]
// Matrix-valued quantities follow the usual control-theoretic notation
// (A, B, C, D, P, Q, R, S, ...); snake_case would make the formulas in
// this crate unreadable, so the lint is disabled crate-wide.

//! Solvers and verification tools for finite-horizon linear-quadratic (LQ)
//! stochastic two-player differential games.
//!
//! The state is an n-dimensional Itô process driven by a scalar Brownian
//! motion, with both players' controls entering drift and diffusion:
//!
//! ```text
//! dX(s) = [A X + B1 u1 + B2 u2 + b] ds + [C X + D1 u1 + D2 u2 + σ] dW(s),
//! X(t0) = x0,  s ∈ [t0, T].
//! ```
//!
//! Each player i minimizes a quadratic functional
//!
//! ```text
//! Ji = E{ ⟨Gi X(T), X(T)⟩ + 2⟨gi, X(T)⟩
//!         + ∫ [⟨Qi X, X⟩ + 2⟨Si X, u⟩ + ⟨Ri u, u⟩ + 2⟨qi, X⟩ + 2⟨ρi, u⟩] ds },
//! ```
//!
//! where u = (u1; u2) stacks both controls. The crate computes, via backward
//! matrix differential equations on a uniform time grid:
//!
//! * feedback Nash equilibria — a coupled pair of symmetric Riccati
//!   equations sharing one feedback gain ([`riccati::solve_closed_loop_nash`]);
//! * feedback representations of open-loop Nash equilibria — a coupled pair
//!   of generally *non-symmetric* Riccati-type equations
//!   ([`riccati::solve_open_loop_rep`]);
//! * saddle points of zero-sum games — a single symmetric Riccati equation
//!   with Moore–Penrose pseudo-inverse constraints ([`riccati::solve_zero_sum`]);
//! * single-player LQ optimal feedback — the same pseudo-inverse Riccati
//!   machinery with one controller ([`riccati::solve_slq`]);
//! * the affine offset systems that absorb inhomogeneous data
//!   (b, σ, qi, ρi, gi) and pin down the affine control parts ([`bsde`]);
//! * a Monte Carlo / deterministic verification harness: cost estimation,
//!   stationarity residuals, convexity probes, unilateral-deviation tests,
//!   and an independent discrete-time backward-induction oracle
//!   ([`simulate`]).
//!
//! All inhomogeneous data are deterministic functions of time, which makes
//! every offset backward equation an ordinary (non-stochastic) ODE and
//! forces the martingale part ζ of each offset pair (η, ζ) to vanish
//! identically; ζ is still stored so the interfaces carry the full pair.
//!
//! Built-in demonstration instances live in [`builtin`].

pub mod bsde;
pub mod builtin;
pub mod game_model;
pub mod linalg_core;
pub mod riccati;
pub mod simulate;

pub use game_model::{GameSpec, TimeGrid, ValidatedGame};
pub use linalg_core::Matrix;
