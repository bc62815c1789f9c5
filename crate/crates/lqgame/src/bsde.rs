//! Offset (inhomogeneous) backward systems: the affine parts of every
//! equilibrium and optimal control.
//!
//! With deterministic coefficients the martingale terms of these backward
//! equations vanish, so every ζ ≡ 0 and each system is a linear backward
//! ODE for the offsets η paired with an algebraic solve for the affine
//! control part v. The ζ paths are stored anyway so the interfaces mirror
//! the adjoint pairs (η, ζ).
//!
//! **Closed-loop equilibrium offsets** ([`solve_closed_loop_offsets`]),
//! given P₁, P₂, Θ* from the equilibrium solve:
//!
//! ```text
//! η̇ᵢ + Aᵀηᵢ + Θ*ᵀ[Bᵀηᵢ + DᵀPᵢσ + ρᵢ + (Rᵢ + DᵀPᵢD)v*]
//!    + (PᵢB + CᵀPᵢD + Sᵢᵀ)v* + CᵀPᵢσ + Pᵢb + qᵢ = 0,     ηᵢ(T) = gᵢ,
//! K(P) v* = −ψ,   ψ row block i = Bᵢᵀηᵢ + DᵢᵀPᵢσ + ρᵢ,ᵢ·
//! ```
//!
//! with the same coupling matrix K(P) as the equilibrium gain equation.
//!
//! **Open-loop-representation offsets** ([`solve_open_rep_offsets`]),
//! given the decoupling fields Πᵢ (note: no feedback term in the drift):
//!
//! ```text
//! η̇ᵢ + Aᵀηᵢ + (ΠᵢB + CᵀΠᵢD + Sᵢᵀ)v + CᵀΠᵢσ + Πᵢb + qᵢ = 0,  ηᵢ(T) = gᵢ,
//! K(Π) v = −ψ,   ψ row block i = Bᵢᵀηᵢ + DᵢᵀΠᵢσ + ρᵢ,ᵢ·
//! ```
//!
//! **Zero-sum / one-controller offsets** ([`solve_zero_sum_offsets`],
//! [`solve_slq_offsets`]), given the symmetric P with M = R + DᵀPD and
//! L = BᵀP + DᵀPC + S:
//!
//! ```text
//! η̇ + Aᵀη + CᵀPσ + Pb + q + Lᵀv = 0,   η(T) = g,
//! v = −M†ψ,   ψ = Bᵀη + DᵀPσ + ρ ∈ range(M)  (range condition),
//! ```
//!
//! taking the minimum-norm member of the affine family (free parameter
//! zero). The one-controller solver additionally accumulates the value
//! function pieces
//!
//! ```text
//! V(t, x) = ⟨P(t)x, x⟩ + 2⟨η(t), x⟩ + ∫ₜᵀ [⟨Pσ,σ⟩ + 2⟨η,b⟩ − ⟨M†ψ, ψ⟩] ds.
//! ```
//!
//! All offsets are integrated with the same RK4 sweep as the matrix
//! equations; P, Π, Θ* values at stage midpoints are interpolated
//! linearly from their grid samples. The applicable algebraic residual is
//! recorded at every grid point and must stay within `res_tol`.

use crate::game_model::{LqData, ValidatedGame, ZeroSumGame};
use crate::linalg_core::{inf_norm, pinv, Matrix};
use crate::riccati::{
    coupling_pair, guard_norms, lq_m_l, rk4_backward, solve_min_norm, InfeasibleReason,
    MatrixPath, SolveError, SolverOptions,
};

/// Vector-valued paths are matrix paths with a single column.
pub type VectorPath = MatrixPath;

/// Offsets of a two-player solve (and, with η₂ = −η₁, of the zero-sum
/// reduction).
#[derive(Debug, Clone)]
pub struct OffsetSolution {
    /// Player 1 adjoint offset (n×1 per grid point).
    pub eta1: VectorPath,
    /// Player 2 adjoint offset.
    pub eta2: VectorPath,
    /// Martingale coefficient of player 1 — identically zero under
    /// deterministic data, stored for interface fidelity.
    pub zeta1: VectorPath,
    /// Martingale coefficient of player 2 (identically zero).
    pub zeta2: VectorPath,
    /// Affine control offset (m×1 per grid point).
    pub v: VectorPath,
    /// Per-grid-point norm of the applicable algebraic constraint
    /// (coupling residual or range-inclusion residual).
    pub residuals: Vec<f64>,
}

/// Offsets of a one-controller solve plus the value-function pieces.
#[derive(Debug, Clone)]
pub struct SlqOffsets {
    /// Adjoint offset η (n×1 per grid point).
    pub eta: VectorPath,
    /// Martingale coefficient (identically zero; see [`OffsetSolution`]).
    pub zeta: VectorPath,
    /// Affine control offset v = −M†ψ (m×1 per grid point).
    pub v: VectorPath,
    /// Per-grid-point range-inclusion residual of ψ against M.
    pub residuals: Vec<f64>,
    /// Integrand ⟨Pσ,σ⟩ + 2⟨η,b⟩ − ⟨M†ψ,ψ⟩ at every grid point.
    pub value_integrand: Vec<f64>,
    /// Tail integral ∫_{s_k}^{T} of the integrand (entry k), accumulated
    /// with the same RK4 sweep as η.
    pub value_integral: Vec<f64>,
}

fn zero_vector_path(grid: crate::game_model::TimeGrid, dim: usize) -> VectorPath {
    MatrixPath::new(grid, vec![Matrix::zeros(dim, 1); grid.n_steps + 1])
}

fn assert_same_grid(game_steps: usize, path: &MatrixPath, what: &str) {
    assert_eq!(
        path.grid().n_steps,
        game_steps,
        "{what} was solved on a different grid"
    );
}

// ───────────────────────── closed-loop offsets ─────────────────────────

/// Solves the equilibrium offset system for (η₁, η₂, v*), eliminating v*
/// pointwise through the same coupling matrix K(P) used for Θ*.
pub fn solve_closed_loop_offsets(
    game: &ValidatedGame,
    P1: &MatrixPath,
    P2: &MatrixPath,
    Theta_star: &MatrixPath,
    opts: &SolverOptions,
) -> Result<OffsetSolution, SolveError> {
    let grid = game.grid;
    assert_same_grid(grid.n_steps, P1, "P1");
    assert_same_grid(grid.n_steps, P2, "P2");
    assert_same_grid(grid.n_steps, Theta_star, "Theta_star");
    let n_pts = grid.n_steps + 1;
    let m = game.m();

    let mut v_vals = vec![Matrix::zeros(0, 0); n_pts];
    let mut residuals = vec![0.0; n_pts];

    // Stacked rhs ψ of the affine coupling at half-grid index h.
    let psi_at = |h: usize, eta: &[Matrix], P_h: &[Matrix; 2]| -> Matrix {
        let d = &game.dynamics;
        let mut psi = Matrix::zeros(m, 1);
        for i in 0..2 {
            let rows = game.rows_of(i);
            let (Bi, Di) = if i == 0 {
                (&d.B1[h], &d.D1[h])
            } else {
                (&d.B2[h], &d.D2[h])
            };
            let rho_own = game.player[i].rho[h]
                .rows(rows.start, rows.len())
                .into_owned();
            let block = Bi.transpose() * &eta[i] + Di.transpose() * &P_h[i] * &d.sigma[h] + rho_own;
            psi.rows_mut(rows.start, rows.len()).copy_from(&block);
        }
        psi
    };

    let deriv = |h: usize, st: &[Matrix]| -> Result<Vec<Matrix>, SolveError> {
        let time = grid.half_time(h);
        let P_h = [P1.at_half(h), P2.at_half(h)];
        let Th = Theta_star.at_half(h);
        let (K, _) = coupling_pair(game, h, &P_h[0], &P_h[1]);
        let psi = psi_at(h, st, &P_h);
        let (v, _) = solve_min_norm(&K, &(-&psi), opts, time)?;
        let d = &game.dynamics;
        let (A, B, C, D) = (&d.A[h], &d.B[h], &d.C[h], &d.D[h]);
        let mut dots = Vec::with_capacity(2);
        for i in 0..2 {
            let P = &P_h[i];
            let p = &game.player[i];
            let inner = B.transpose() * &st[i]
                + D.transpose() * P * &d.sigma[h]
                + &p.rho[h]
                + (&p.R[h] + D.transpose() * P * D) * &v;
            let drift = A.transpose() * &st[i]
                + Th.transpose() * inner
                + (P * B + C.transpose() * P * D + p.S[h].transpose()) * &v
                + C.transpose() * P * &d.sigma[h]
                + P * &d.b[h]
                + &p.q[h];
            dots.push(-drift);
        }
        Ok(dots)
    };

    let post = |k: usize, st: &mut Vec<Matrix>| -> Result<(), SolveError> {
        let time = grid.time(k);
        guard_norms(st, time, opts.blowup_bound)?;
        let h = 2 * k;
        let P_h = [P1.value(k).clone(), P2.value(k).clone()];
        let (K, _) = coupling_pair(game, h, &P_h[0], &P_h[1]);
        let psi = psi_at(h, st, &P_h);
        let (v, _) = solve_min_norm(&K, &(-&psi), opts, time)?;
        residuals[k] = inf_norm(&(&K * &v + &psi));
        v_vals[k] = v;
        Ok(())
    };

    let terminal = vec![game.player[0].g.clone(), game.player[1].g.clone()];
    let states = rk4_backward(&grid, terminal, deriv, post)?;

    let mut eta1 = Vec::with_capacity(n_pts);
    let mut eta2 = Vec::with_capacity(n_pts);
    for mut st in states {
        eta2.push(st.pop().expect("two offsets per state"));
        eta1.push(st.pop().expect("two offsets per state"));
    }
    let n = game.n();
    Ok(OffsetSolution {
        eta1: MatrixPath::new(grid, eta1),
        eta2: MatrixPath::new(grid, eta2),
        zeta1: zero_vector_path(grid, n),
        zeta2: zero_vector_path(grid, n),
        v: MatrixPath::new(grid, v_vals),
        residuals,
    })
}

// ───────────────────────── open-loop-representation offsets ─────────────────────────

/// Solves the representation offset system for (η₁, η₂, v) given the
/// decoupling fields. The η drift carries no feedback term; v solves the
/// coupling K(Π) v = −ψ pointwise.
pub fn solve_open_rep_offsets(
    game: &ValidatedGame,
    Pi1: &MatrixPath,
    Pi2: &MatrixPath,
    opts: &SolverOptions,
) -> Result<OffsetSolution, SolveError> {
    let grid = game.grid;
    assert_same_grid(grid.n_steps, Pi1, "Pi1");
    assert_same_grid(grid.n_steps, Pi2, "Pi2");
    let n_pts = grid.n_steps + 1;
    let m = game.m();

    let mut v_vals = vec![Matrix::zeros(0, 0); n_pts];
    let mut residuals = vec![0.0; n_pts];

    let psi_at = |h: usize, eta: &[Matrix], Pi_h: &[Matrix; 2]| -> Matrix {
        let d = &game.dynamics;
        let mut psi = Matrix::zeros(m, 1);
        for i in 0..2 {
            let rows = game.rows_of(i);
            let (Bi, Di) = if i == 0 {
                (&d.B1[h], &d.D1[h])
            } else {
                (&d.B2[h], &d.D2[h])
            };
            let rho_own = game.player[i].rho[h]
                .rows(rows.start, rows.len())
                .into_owned();
            let block =
                Bi.transpose() * &eta[i] + Di.transpose() * &Pi_h[i] * &d.sigma[h] + rho_own;
            psi.rows_mut(rows.start, rows.len()).copy_from(&block);
        }
        psi
    };

    let deriv = |h: usize, st: &[Matrix]| -> Result<Vec<Matrix>, SolveError> {
        let time = grid.half_time(h);
        let Pi_h = [Pi1.at_half(h), Pi2.at_half(h)];
        let (K, _) = coupling_pair(game, h, &Pi_h[0], &Pi_h[1]);
        let psi = psi_at(h, st, &Pi_h);
        let (v, _) = solve_min_norm(&K, &(-&psi), opts, time)?;
        let d = &game.dynamics;
        let (A, B, C, D) = (&d.A[h], &d.B[h], &d.C[h], &d.D[h]);
        let mut dots = Vec::with_capacity(2);
        for i in 0..2 {
            let Pi = &Pi_h[i];
            let p = &game.player[i];
            let drift = A.transpose() * &st[i]
                + (Pi * B + C.transpose() * Pi * D + p.S[h].transpose()) * &v
                + C.transpose() * Pi * &d.sigma[h]
                + Pi * &d.b[h]
                + &p.q[h];
            dots.push(-drift);
        }
        Ok(dots)
    };

    let post = |k: usize, st: &mut Vec<Matrix>| -> Result<(), SolveError> {
        let time = grid.time(k);
        guard_norms(st, time, opts.blowup_bound)?;
        let h = 2 * k;
        let Pi_h = [Pi1.value(k).clone(), Pi2.value(k).clone()];
        let (K, _) = coupling_pair(game, h, &Pi_h[0], &Pi_h[1]);
        let psi = psi_at(h, st, &Pi_h);
        let (v, _) = solve_min_norm(&K, &(-&psi), opts, time)?;
        residuals[k] = inf_norm(&(&K * &v + &psi));
        v_vals[k] = v;
        Ok(())
    };

    let terminal = vec![game.player[0].g.clone(), game.player[1].g.clone()];
    let states = rk4_backward(&grid, terminal, deriv, post)?;

    let mut eta1 = Vec::with_capacity(n_pts);
    let mut eta2 = Vec::with_capacity(n_pts);
    for mut st in states {
        eta2.push(st.pop().expect("two offsets per state"));
        eta1.push(st.pop().expect("two offsets per state"));
    }
    let n = game.n();
    Ok(OffsetSolution {
        eta1: MatrixPath::new(grid, eta1),
        eta2: MatrixPath::new(grid, eta2),
        zeta1: zero_vector_path(grid, n),
        zeta2: zero_vector_path(grid, n),
        v: MatrixPath::new(grid, v_vals),
        residuals,
    })
}

// ───────────────────────── pseudo-inverse offsets ─────────────────────────

/// Shared core of the zero-sum and one-controller offset systems.
fn solve_pinv_offsets(
    data: &LqData,
    P: &MatrixPath,
    opts: &SolverOptions,
) -> Result<SlqOffsets, SolveError> {
    let grid = data.grid;
    assert_same_grid(grid.n_steps, P, "P");
    let n_pts = grid.n_steps + 1;

    let mut v_vals = vec![Matrix::zeros(0, 0); n_pts];
    let mut residuals = vec![0.0; n_pts];
    let mut integrand_vals = vec![0.0; n_pts];
    let mut integral_vals = vec![0.0; n_pts];

    // State: [η (n×1), tail value integral (1×1)].
    let deriv = |h: usize, st: &[Matrix]| -> Result<Vec<Matrix>, SolveError> {
        let time = grid.half_time(h);
        let Ph = P.at_half(h);
        let (M, L) = lq_m_l(data, h, &Ph);
        let pr = pinv(&M, opts.rel_cutoff.unwrap_or_else(|| {
            crate::linalg_core::default_rel_cutoff(M.nrows(), M.ncols())
        }))
        .map_err(|e| match e {
            crate::linalg_core::LinalgError::NonFinite => SolveError::BlowUp {
                time,
                norm: f64::INFINITY,
            },
            other => SolveError::Numerical {
                time,
                message: other.to_string(),
            },
        })?;
        let eta = &st[0];
        let psi = data.B[h].transpose() * eta + data.D[h].transpose() * &Ph * &data.sigma[h]
            + &data.rho[h];
        let v = -(&pr.pinv * &psi);
        let drift = data.A[h].transpose() * eta
            + data.C[h].transpose() * &Ph * &data.sigma[h]
            + &Ph * &data.b[h]
            + &data.q[h]
            + L.transpose() * &v;
        let integrand = (data.sigma[h].transpose() * &Ph * &data.sigma[h]
            + eta.transpose() * &data.b[h] * 2.0
            + psi.transpose() * &v)[(0, 0)];
        Ok(vec![-drift, Matrix::from_element(1, 1, -integrand)])
    };

    let post = |k: usize, st: &mut Vec<Matrix>| -> Result<(), SolveError> {
        let time = grid.time(k);
        guard_norms(st, time, opts.blowup_bound)?;
        let h = 2 * k;
        let Ph = P.value(k);
        let (M, _) = lq_m_l(data, h, Ph);
        let pr = pinv(
            &M,
            opts.rel_cutoff
                .unwrap_or_else(|| crate::linalg_core::default_rel_cutoff(M.nrows(), M.ncols())),
        )
        .map_err(|e| SolveError::Numerical {
            time,
            message: e.to_string(),
        })?;
        let psi = data.B[h].transpose() * &st[0]
            + data.D[h].transpose() * Ph * &data.sigma[h]
            + &data.rho[h];
        let residual = inf_norm(&(&psi - &M * (&pr.pinv * &psi)));
        residuals[k] = residual;
        if residual > opts.res_tol * (1.0 + inf_norm(&psi)) {
            return Err(SolveError::Infeasible {
                time,
                reason: InfeasibleReason::RangeCondition { residual },
            });
        }
        let v = -(&pr.pinv * &psi);
        integrand_vals[k] = (data.sigma[h].transpose() * Ph * &data.sigma[h]
            + st[0].transpose() * &data.b[h] * 2.0
            + psi.transpose() * &v)[(0, 0)];
        integral_vals[k] = st[1][(0, 0)];
        v_vals[k] = v;
        Ok(())
    };

    let terminal = vec![data.g.clone(), Matrix::zeros(1, 1)];
    let states = rk4_backward(&grid, terminal, deriv, post)?;

    let eta: Vec<Matrix> = states.into_iter().map(|mut st| st.swap_remove(0)).collect();
    Ok(SlqOffsets {
        eta: MatrixPath::new(grid, eta),
        zeta: zero_vector_path(grid, data.n),
        v: MatrixPath::new(grid, v_vals),
        residuals,
        value_integrand: integrand_vals,
        value_integral: integral_vals,
    })
}

/// One-controller offset system plus value-function pieces.
pub fn solve_slq_offsets(
    data: &LqData,
    P: &MatrixPath,
    opts: &SolverOptions,
) -> Result<SlqOffsets, SolveError> {
    solve_pinv_offsets(data, P, opts)
}

/// Zero-sum offset system on the reduced common data; the two players'
/// adjoint offsets are sign opposites (η₂ = −η₁).
pub fn solve_zero_sum_offsets(
    zs: &ZeroSumGame,
    P: &MatrixPath,
    opts: &SolverOptions,
) -> Result<OffsetSolution, SolveError> {
    let sol = solve_pinv_offsets(&zs.data, P, opts)?;
    let eta2 = sol.eta.map(|e| -e);
    Ok(OffsetSolution {
        eta1: sol.eta,
        eta2,
        zeta1: sol.zeta.clone(),
        zeta2: sol.zeta,
        v: sol.v,
        residuals: sol.residuals,
    })
}
