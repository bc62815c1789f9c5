//! Backward Riccati-type solvers for the two-player game and its
//! single-controller reductions.
//!
//! All four solvers integrate a terminal-value matrix ODE backward on the
//! uniform grid with the classical 4th-order Runge–Kutta scheme, and they
//! re-solve the algebraic feedback coupling at every internal stage (the
//! validated game carries coefficient samples at the interval midpoints
//! exactly for this purpose).
//!
//! **Closed-loop equilibrium** ([`solve_closed_loop_nash`]): coupled
//! symmetric equations, one per player, sharing one feedback gain Θ:
//!
//! ```text
//! Ṗᵢ + PᵢA + AᵀPᵢ + CᵀPᵢC + Qᵢ + Θᵀ(Rᵢ + DᵀPᵢD)Θ
//!    + (PᵢB + CᵀPᵢD + Sᵢᵀ)Θ + Θᵀ(BᵀPᵢ + DᵀPᵢC + Sᵢ) = 0,   Pᵢ(T) = Gᵢ,
//! K(P) Θ = −L(P),
//! ```
//!
//! where row block i of K is `Rᵢ,ᵢ· + DᵢᵀPᵢD` and row block i of L is
//! `BᵢᵀPᵢ + DᵢᵀPᵢC + Sᵢ,ᵢ·` (the player's own rows of its weights). The
//! blocks `Rᵢ,ᵢᵢ + DᵢᵀPᵢDᵢ` must stay positive semidefinite.
//!
//! **Open-loop representation** ([`solve_open_loop_rep`]): the decoupling
//! fields Πᵢ obey one-sided, generally non-symmetric equations
//!
//! ```text
//! Π̇ᵢ + ΠᵢA + AᵀΠᵢ + CᵀΠᵢC + Qᵢ + (ΠᵢB + CᵀΠᵢD + Sᵢᵀ)Θ = 0,  Πᵢ(T) = Gᵢ,
//! K(Π) Θ = −L(Π),
//! ```
//!
//! with the same coupling rows evaluated at Πᵢ. These are integrated
//! exactly as given — no symmetrization is ever applied to Πᵢ.
//!
//! **Zero-sum saddle / single-controller LQ** ([`solve_zero_sum`],
//! [`solve_slq`]): one symmetric equation with the pseudo-inverse of
//! M = R + DᵀPD eliminating the whole joint control:
//!
//! ```text
//! Ṗ + PA + AᵀP + CᵀPC + Q − LᵀM†L = 0,   L = BᵀP + DᵀPC + S,
//! range(L) ⊆ range(M),                    P(T) = G,
//! ```
//!
//! plus sign conditions: for the zero-sum game `R₁₁ + D₁ᵀPD₁ ⪰ 0` and
//! `R₂₂ + D₂ᵀPD₂ ⪯ 0`; for the one-controller problem `M ⪰ 0`.
//!
//! **Fixed-feedback evaluation** ([`solve_lyapunov`]): for a given gain
//! path Θ, the linear equations
//!
//! ```text
//! Ṗᵢ + Pᵢ(A+BΘ) + (A+BΘ)ᵀPᵢ + (C+DΘ)ᵀPᵢ(C+DΘ)
//!    + Qᵢ + ΘᵀSᵢ + SᵢᵀΘ + ΘᵀRᵢΘ = 0,   Pᵢ(T) = Gᵢ.
//! ```
//!
//! Feasibility constraints (singular couplings, definiteness margins,
//! range inclusion) are checked at grid points; the coupling solve itself
//! must additionally succeed at every internal stage. Symmetric solutions
//! are re-symmetrized by ½(P+Pᵀ) after every accepted step, and the
//! pre-correction drift is required to stay at round-off scale.

use crate::game_model::{LqData, TimeGrid, ValidatedGame, ZeroSumGame};
use crate::linalg_core::{
    all_finite, asymmetry, default_rel_cutoff, inf_norm, max_eig_sym, min_eig_sym, pinv, sym_part,
    LinalgError, Matrix, PinvResult,
};
use thiserror::Error;

// ───────────────────────── paths and options ─────────────────────────

/// A matrix-valued function of time sampled at every grid point
/// (`n_steps + 1` values, entry k at time `grid.time(k)`).
#[derive(Debug, Clone)]
pub struct MatrixPath {
    grid: TimeGrid,
    values: Vec<Matrix>,
}

impl MatrixPath {
    /// Wraps per-grid-point samples. Panics if the length is not
    /// `grid.n_steps + 1` (programming error, not data error).
    pub fn new(grid: TimeGrid, values: Vec<Matrix>) -> Self {
        assert_eq!(
            values.len(),
            grid.n_steps + 1,
            "MatrixPath needs one value per grid point"
        );
        MatrixPath { grid, values }
    }

    /// The grid the samples live on.
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Sample at grid point k.
    pub fn value(&self, k: usize) -> &Matrix {
        &self.values[k]
    }

    /// All samples in grid order.
    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    /// Sample at the initial time t0.
    pub fn initial(&self) -> &Matrix {
        &self.values[0]
    }

    /// Sample at the terminal time T.
    pub fn terminal(&self) -> &Matrix {
        &self.values[self.grid.n_steps]
    }

    /// Value at half-grid index h: exact at grid points (even h), linear
    /// interpolation at interval midpoints (odd h).
    pub fn at_half(&self, h: usize) -> Matrix {
        if h % 2 == 0 {
            self.values[h / 2].clone()
        } else {
            let k = (h - 1) / 2;
            (&self.values[k] + &self.values[k + 1]) * 0.5
        }
    }

    /// Piecewise-linear evaluation at an arbitrary time (clamped to the
    /// grid span).
    pub fn at_time(&self, s: f64) -> Matrix {
        let n = self.grid.n_steps;
        let u = ((s - self.grid.t0) / self.grid.dt()).clamp(0.0, n as f64);
        let k = (u.floor() as usize).min(n - 1);
        let w = u - k as f64;
        &self.values[k] * (1.0 - w) + &self.values[k + 1] * w
    }

    /// Largest entrywise deviation from another path on the shared grid.
    pub fn max_diff(&self, other: &MatrixPath) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| inf_norm(&(a - b)))
            .fold(0.0, f64::max)
    }

    /// Pointwise closure application, preserving the grid.
    pub fn map(&self, f: impl Fn(&Matrix) -> Matrix) -> MatrixPath {
        MatrixPath {
            grid: self.grid,
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// Numerical policy knobs shared by all solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative singular-value cutoff for pseudo-inverses; `None` uses
    /// [`default_rel_cutoff`] per matrix.
    pub rel_cutoff: Option<f64>,
    /// Condition-number bound on the retained spectrum of coupling
    /// matrices; above it the coupling counts as singular.
    pub cond_max: f64,
    /// Slack allowed on definiteness margins.
    pub psd_tol: f64,
    /// Relative consistency tolerance for algebraic solves
    /// (‖KΘ+L‖∞ ≤ res_tol·(1+‖L‖∞)).
    pub res_tol: f64,
    /// Norm bound beyond which the backward integration counts as blown
    /// up.
    pub blowup_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_cutoff: None,
            cond_max: 1e10,
            psd_tol: 1e-8,
            res_tol: 1e-8,
            blowup_bound: 1e8,
        }
    }
}

impl SolverOptions {
    fn cutoff_for(&self, M: &Matrix) -> f64 {
        self.rel_cutoff
            .unwrap_or_else(|| default_rel_cutoff(M.nrows(), M.ncols()))
    }
}

/// Reason a solve is declared infeasible.
#[derive(Debug, Clone, Error)]
pub enum InfeasibleReason {
    /// The algebraic feedback equation has no (stable) solution: either
    /// the right-hand side is inconsistent with the coupling matrix or
    /// the retained spectrum is conditioned beyond `cond_max`.
    #[error("singular feedback coupling: residual {residual:.3e}, cond {cond:.3e}")]
    SingularCoupling { residual: f64, cond: f64 },
    /// A block required to be positive semidefinite has an eigenvalue
    /// below −psd_tol.
    #[error("definiteness violation in {block}: min eigenvalue {margin:.3e}")]
    PsdViolation { block: String, margin: f64 },
    /// range(BᵀP + DᵀPC + S) ⊄ range(R + DᵀPD).
    #[error("range condition violated: residual {residual:.3e}")]
    RangeCondition { residual: f64 },
    /// A signed definiteness condition of the saddle problem fails
    /// (maximizer block not ⪰ 0 or minimizer block not ⪯ 0).
    #[error("sign condition violated in {block}: offending eigenvalue {margin:.3e}")]
    SignCondition { block: String, margin: f64 },
}

/// Failure modes of the backward solvers.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    /// A feasibility constraint fails at time `time`.
    #[error("infeasible at s = {time}: {reason}")]
    Infeasible { time: f64, reason: InfeasibleReason },
    /// The solution norm exceeded the blow-up bound.
    #[error("blow-up at s = {time}: ‖P‖∞ = {norm:.3e}")]
    BlowUp { time: f64, norm: f64 },
    /// A numerical kernel failed (SVD/eigen non-convergence or symmetry
    /// drift beyond round-off); not expected on well-scaled data.
    #[error("numerical failure at s = {time}: {message}")]
    Numerical { time: f64, message: String },
}

fn numerical(time: f64, e: LinalgError) -> SolveError {
    match e {
        LinalgError::NonFinite => SolveError::BlowUp {
            time,
            norm: f64::INFINITY,
        },
        other => SolveError::Numerical {
            time,
            message: other.to_string(),
        },
    }
}

// ───────────────────────── solution types ─────────────────────────

/// Output of [`solve_closed_loop_nash`].
#[derive(Debug, Clone)]
pub struct ClosedLoopSolution {
    /// Player 1 value matrix path (symmetric).
    pub P1: MatrixPath,
    /// Player 2 value matrix path (symmetric).
    pub P2: MatrixPath,
    /// Equilibrium feedback gain Θ* (m×n) at every grid point.
    pub Theta_star: MatrixPath,
    /// Per-grid-point minimum eigenvalues of R₁,₁₁ + D₁ᵀP₁D₁ (entry 0)
    /// and R₂,₂₂ + D₂ᵀP₂D₂ (entry 1).
    pub psd_margins: [Vec<f64>; 2],
    /// Per-grid-point residual ‖K(P)Θ* + L(P)‖∞ of the feedback
    /// stationarity equation.
    pub stationarity_residuals: Vec<f64>,
}

/// Output of [`solve_open_loop_rep`].
#[derive(Debug, Clone)]
pub struct OpenRepSolution {
    /// Player 1 decoupling field (generally non-symmetric).
    pub Pi1: MatrixPath,
    /// Player 2 decoupling field (generally non-symmetric).
    pub Pi2: MatrixPath,
    /// Representation feedback gain Θ (m×n) at every grid point.
    pub Theta: MatrixPath,
    /// Per-grid-point condition estimates of the coupling matrix K(Π).
    pub condition_numbers: Vec<f64>,
}

/// Per-grid-point feasibility certificates of the pseudo-inverse
/// Riccati solvers.
#[derive(Debug, Clone)]
pub struct PinvFeasibility {
    /// ‖(I − MM†)L‖∞ per grid point (range condition).
    pub range_residuals: Vec<f64>,
    /// Minimum eigenvalue of the block required to be ⪰ 0
    /// (R₁₁ + D₁ᵀPD₁ for the zero-sum game, all of M for the
    /// one-controller problem).
    pub psd_min_margins: Vec<f64>,
    /// Maximum eigenvalue of the minimizing player's block
    /// R₂₂ + D₂ᵀPD₂, required ⪯ 0; `None` for the one-controller
    /// problem.
    pub nsd_max_margins: Option<Vec<f64>>,
}

/// Output of [`solve_zero_sum`] and (aliased) [`solve_slq`].
#[derive(Debug, Clone)]
pub struct ZeroSumSolution {
    /// Symmetric value matrix path.
    pub P: MatrixPath,
    /// Minimum-norm feedback Θ₀ = −M†L at every grid point.
    pub Theta0: MatrixPath,
    /// Null-space projector I − M†M at every grid point (the feedback
    /// family is Θ₀ + projector·θ for arbitrary θ).
    pub projector: MatrixPath,
    /// Range/definiteness certificates per grid point.
    pub feasibility: PinvFeasibility,
}

/// One-controller solutions share the zero-sum layout.
pub type SlqSolution = ZeroSumSolution;

/// Output of [`solve_lyapunov`]: per-player cost matrices under a fixed
/// feedback gain.
#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub P1: MatrixPath,
    pub P2: MatrixPath,
}

// ───────────────────────── shared numerics ─────────────────────────

/// `base + c · dir`, entrywise over a list of equally-shaped matrices.
fn lin_comb(base: &[Matrix], c: f64, dir: &[Matrix]) -> Vec<Matrix> {
    base.iter().zip(dir).map(|(b, d)| b + d * c).collect()
}

/// Classical RK4 backward sweep on the uniform grid.
///
/// `deriv(h, state)` returns the time derivative at half-grid index h;
/// `post(k, state)` runs at every grid point (terminal first), mutating
/// the state (symmetrization) and enforcing grid-point constraints.
/// Returns the accepted states indexed by grid point.
pub(crate) fn rk4_backward<D, P>(
    grid: &TimeGrid,
    terminal: Vec<Matrix>,
    mut deriv: D,
    mut post: P,
) -> Result<Vec<Vec<Matrix>>, SolveError>
where
    D: FnMut(usize, &[Matrix]) -> Result<Vec<Matrix>, SolveError>,
    P: FnMut(usize, &mut Vec<Matrix>) -> Result<(), SolveError>,
{
    let n_steps = grid.n_steps;
    let dt = grid.dt();
    let mut out: Vec<Vec<Matrix>> = vec![Vec::new(); n_steps + 1];

    let mut cur = terminal;
    post(n_steps, &mut cur)?;
    out[n_steps] = cur.clone();

    for k in (0..n_steps).rev() {
        let h_top = 2 * (k + 1);
        let h_mid = 2 * k + 1;
        let h_bot = 2 * k;

        // Backward step of size −dt; stages at s_{k+1}, midpoint, s_k.
        let k1 = deriv(h_top, &cur)?;
        let k2 = deriv(h_mid, &lin_comb(&cur, -0.5 * dt, &k1))?;
        let k3 = deriv(h_mid, &lin_comb(&cur, -0.5 * dt, &k2))?;
        let k4 = deriv(h_bot, &lin_comb(&cur, -dt, &k3))?;

        for (i, c) in cur.iter_mut().enumerate() {
            *c += (&k1[i] + &k2[i] * 2.0 + &k3[i] * 2.0 + &k4[i]) * (-dt / 6.0);
        }

        post(k, &mut cur)?;
        out[k] = cur.clone();
    }
    Ok(out)
}

/// Finiteness/blow-up guard shared by every post hook.
pub(crate) fn guard_norms(state: &[Matrix], time: f64, bound: f64) -> Result<(), SolveError> {
    let mut norm = 0.0_f64;
    for M in state {
        if !all_finite(M) {
            return Err(SolveError::BlowUp {
                time,
                norm: f64::INFINITY,
            });
        }
        norm = norm.max(inf_norm(M));
    }
    if norm > bound {
        return Err(SolveError::BlowUp { time, norm });
    }
    Ok(())
}

/// Symmetrizes each state matrix in place after checking that the drift
/// from symmetry is at round-off scale (a large drift means the equation
/// being integrated is not symmetry-preserving — a bug, not data).
fn resymmetrize(state: &mut [Matrix], time: f64) -> Result<(), SolveError> {
    for M in state.iter_mut() {
        let drift = asymmetry(M);
        if drift > 1e-8 * (1.0 + inf_norm(M)) {
            return Err(SolveError::Numerical {
                time,
                message: format!("symmetry drift {drift:.3e} before correction"),
            });
        }
        *M = sym_part(M);
    }
    Ok(())
}

/// Minimum-norm solve of K·X = rhs with the feasibility policy of the
/// coupled solvers: consistency residual ≤ res_tol·(1+‖rhs‖∞) and
/// retained-spectrum condition number ≤ cond_max, else the coupling is
/// singular.
pub(crate) fn solve_min_norm(
    K: &Matrix,
    rhs: &Matrix,
    opts: &SolverOptions,
    time: f64,
) -> Result<(Matrix, PinvResult), SolveError> {
    let pr = pinv(K, opts.cutoff_for(K)).map_err(|e| numerical(time, e))?;
    let X = &pr.pinv * rhs;
    let residual = inf_norm(&(K * &X - rhs));
    let cond = pr.cond();
    if residual > opts.res_tol * (1.0 + inf_norm(rhs)) || cond > opts.cond_max {
        return Err(SolveError::Infeasible {
            time,
            reason: InfeasibleReason::SingularCoupling { residual, cond },
        });
    }
    Ok((X, pr))
}

/// Coupling matrix K (m×m) and affine part L (m×n) of the feedback
/// equation K·Θ = −L at half-grid index h, with row block i built from
/// the given per-player matrix `Mi` (P_i for the equilibrium equations,
/// Π_i for the representation equations):
///
/// ```text
/// K row block i = Rᵢ,ᵢ· + DᵢᵀMᵢD,    L row block i = BᵢᵀMᵢ + DᵢᵀMᵢC + Sᵢ,ᵢ·
/// ```
pub(crate) fn coupling_pair(
    game: &ValidatedGame,
    h: usize,
    M1: &Matrix,
    M2: &Matrix,
) -> (Matrix, Matrix) {
    let d = &game.dynamics;
    let (n, m) = (game.n(), game.m());
    let mut K = Matrix::zeros(m, m);
    let mut L = Matrix::zeros(m, n);
    for i in 0..2 {
        let rows = game.rows_of(i);
        let Mi = if i == 0 { M1 } else { M2 };
        let (Bi, Di) = if i == 0 {
            (&d.B1[h], &d.D1[h])
        } else {
            (&d.B2[h], &d.D2[h])
        };
        let p = &game.player[i];
        let R_rows = p.R[h].rows(rows.start, rows.len()).into_owned();
        let S_rows = p.S[h].rows(rows.start, rows.len()).into_owned();
        let K_block = R_rows + Di.transpose() * Mi * &d.D[h];
        let L_block = Bi.transpose() * Mi + Di.transpose() * Mi * &d.C[h] + S_rows;
        K.rows_mut(rows.start, rows.len()).copy_from(&K_block);
        L.rows_mut(rows.start, rows.len()).copy_from(&L_block);
    }
    (K, L)
}

/// M = R + DᵀPD and L = BᵀP + DᵀPC + S of a one-controller problem at
/// half-grid index h.
pub(crate) fn lq_m_l(data: &LqData, h: usize, P: &Matrix) -> (Matrix, Matrix) {
    let M = sym_part(&(&data.R[h] + data.D[h].transpose() * P * &data.D[h]));
    let L = data.B[h].transpose() * P + data.D[h].transpose() * P * &data.C[h] + &data.S[h];
    (M, L)
}

// ───────────────────────── closed-loop equilibrium ─────────────────────────

/// Solves the coupled symmetric equations for a closed-loop Nash
/// equilibrium, eliminating the shared feedback gain Θ* at every stage
/// through the stacked coupling K(P)Θ* = −L(P).
///
/// Grid-point checks: positive semidefiniteness of Rᵢ,ᵢᵢ + DᵢᵀPᵢDᵢ
/// (within `psd_tol`), coupling solvability, and the blow-up bound.
pub fn solve_closed_loop_nash(
    game: &ValidatedGame,
    opts: &SolverOptions,
) -> Result<ClosedLoopSolution, SolveError> {
    let grid = game.grid;
    let n_pts = grid.n_steps + 1;

    let mut theta_vals = vec![Matrix::zeros(0, 0); n_pts];
    let mut psd1 = vec![0.0; n_pts];
    let mut psd2 = vec![0.0; n_pts];
    let mut residuals = vec![0.0; n_pts];

    let deriv = |h: usize, st: &[Matrix]| -> Result<Vec<Matrix>, SolveError> {
        let time = grid.half_time(h);
        let (K, L) = coupling_pair(game, h, &st[0], &st[1]);
        let (Theta, _) = solve_min_norm(&K, &(-&L), opts, time)?;
        let d = &game.dynamics;
        let (A, B, C, D) = (&d.A[h], &d.B[h], &d.C[h], &d.D[h]);
        let mut dots = Vec::with_capacity(2);
        for i in 0..2 {
            let P = &st[i];
            let p = &game.player[i];
            let RD = &p.R[h] + D.transpose() * P * D;
            let cross = B.transpose() * P + D.transpose() * P * C + &p.S[h];
            let rhs = P * A
                + A.transpose() * P
                + C.transpose() * P * C
                + &p.Q[h]
                + Theta.transpose() * &RD * &Theta
                + cross.transpose() * &Theta
                + Theta.transpose() * &cross;
            dots.push(-rhs);
        }
        Ok(dots)
    };

    let post = |k: usize, st: &mut Vec<Matrix>| -> Result<(), SolveError> {
        let time = grid.time(k);
        guard_norms(st, time, opts.blowup_bound)?;
        resymmetrize(st, time)?;
        let h = 2 * k;
        let (K, L) = coupling_pair(game, h, &st[0], &st[1]);
        let (Theta, _) = solve_min_norm(&K, &(-&L), opts, time)?;
        residuals[k] = inf_norm(&(&K * &Theta + &L));
        for i in 0..2 {
            let rows = game.rows_of(i);
            let Di = if i == 0 {
                &game.dynamics.D1[h]
            } else {
                &game.dynamics.D2[h]
            };
            let R_own = game.player[i].R[h]
                .view((rows.start, rows.start), (rows.len(), rows.len()))
                .into_owned();
            let block = sym_part(&(R_own + Di.transpose() * &st[i] * Di));
            let margin = min_eig_sym(&block).map_err(|e| numerical(time, e))?;
            if i == 0 {
                psd1[k] = margin;
            } else {
                psd2[k] = margin;
            }
            if margin < -opts.psd_tol {
                let p = i + 1;
                return Err(SolveError::Infeasible {
                    time,
                    reason: InfeasibleReason::PsdViolation {
                        block: format!("R{p}{p}{p} + D{p}'P{p}D{p}"),
                        margin,
                    },
                });
            }
        }
        theta_vals[k] = Theta;
        Ok(())
    };

    let terminal = vec![
        sym_part(&game.player[0].G),
        sym_part(&game.player[1].G),
    ];
    let states = rk4_backward(&grid, terminal, deriv, post)?;

    let mut p1 = Vec::with_capacity(n_pts);
    let mut p2 = Vec::with_capacity(n_pts);
    for mut st in states {
        p2.push(st.pop().expect("two matrices per state"));
        p1.push(st.pop().expect("two matrices per state"));
    }
    Ok(ClosedLoopSolution {
        P1: MatrixPath::new(grid, p1),
        P2: MatrixPath::new(grid, p2),
        Theta_star: MatrixPath::new(grid, theta_vals),
        psd_margins: [psd1, psd2],
        stationarity_residuals: residuals,
    })
}

// ───────────────────────── open-loop representation ─────────────────────────

/// Solves the one-sided decoupling-field equations for the closed-loop
/// representation of open-loop equilibria. The fields Πᵢ are generally
/// non-symmetric and are integrated without any symmetry correction.
pub fn solve_open_loop_rep(
    game: &ValidatedGame,
    opts: &SolverOptions,
) -> Result<OpenRepSolution, SolveError> {
    let grid = game.grid;
    let n_pts = grid.n_steps + 1;

    let mut theta_vals = vec![Matrix::zeros(0, 0); n_pts];
    let mut conds = vec![0.0; n_pts];

    let deriv = |h: usize, st: &[Matrix]| -> Result<Vec<Matrix>, SolveError> {
        let time = grid.half_time(h);
        let (K, L) = coupling_pair(game, h, &st[0], &st[1]);
        let (Theta, _) = solve_min_norm(&K, &(-&L), opts, time)?;
        let d = &game.dynamics;
        let (A, B, C, D) = (&d.A[h], &d.B[h], &d.C[h], &d.D[h]);
        let mut dots = Vec::with_capacity(2);
        for i in 0..2 {
            let Pi = &st[i];
            let p = &game.player[i];
            let rhs = Pi * A
                + A.transpose() * Pi
                + C.transpose() * Pi * C
                + &p.Q[h]
                + (Pi * B + C.transpose() * Pi * D + p.S[h].transpose()) * &Theta;
            dots.push(-rhs);
        }
        Ok(dots)
    };

    let post = |k: usize, st: &mut Vec<Matrix>| -> Result<(), SolveError> {
        let time = grid.time(k);
        guard_norms(st, time, opts.blowup_bound)?;
        let (K, L) = coupling_pair(game, 2 * k, &st[0], &st[1]);
        let (Theta, pr) = solve_min_norm(&K, &(-&L), opts, time)?;
        conds[k] = pr.cond();
        theta_vals[k] = Theta;
        Ok(())
    };

    let terminal = vec![game.player[0].G.clone(), game.player[1].G.clone()];
    let states = rk4_backward(&grid, terminal, deriv, post)?;

    let mut pi1 = Vec::with_capacity(n_pts);
    let mut pi2 = Vec::with_capacity(n_pts);
    for mut st in states {
        pi2.push(st.pop().expect("two matrices per state"));
        pi1.push(st.pop().expect("two matrices per state"));
    }
    Ok(OpenRepSolution {
        Pi1: MatrixPath::new(grid, pi1),
        Pi2: MatrixPath::new(grid, pi2),
        Theta: MatrixPath::new(grid, theta_vals),
        condition_numbers: conds,
    })
}

// ───────────────────────── pseudo-inverse Riccati core ─────────────────────────

/// Shared backward integration of the symmetric pseudo-inverse equation.
/// `split = Some((m1, m2))` applies the zero-sum signed margins; `None`
/// requires all of M = R + DᵀPD to be ⪰ 0.
fn solve_pinv_riccati(
    data: &LqData,
    split: Option<(usize, usize)>,
    opts: &SolverOptions,
) -> Result<ZeroSumSolution, SolveError> {
    let grid = data.grid;
    let n_pts = grid.n_steps + 1;
    let m = data.m;

    let mut theta_vals = vec![Matrix::zeros(0, 0); n_pts];
    let mut proj_vals = vec![Matrix::zeros(0, 0); n_pts];
    let mut range_res = vec![0.0; n_pts];
    let mut psd_min = vec![0.0; n_pts];
    let mut nsd_max = split.map(|_| vec![0.0; n_pts]);

    let deriv = |h: usize, st: &[Matrix]| -> Result<Vec<Matrix>, SolveError> {
        let time = grid.half_time(h);
        let P = &st[0];
        let (M, L) = lq_m_l(data, h, P);
        let pr = pinv(&M, opts.cutoff_for(&M)).map_err(|e| numerical(time, e))?;
        let rhs = P * &data.A[h]
            + data.A[h].transpose() * P
            + data.C[h].transpose() * P * &data.C[h]
            + &data.Q[h]
            - L.transpose() * &pr.pinv * &L;
        Ok(vec![-rhs])
    };

    let post = |k: usize, st: &mut Vec<Matrix>| -> Result<(), SolveError> {
        let time = grid.time(k);
        guard_norms(st, time, opts.blowup_bound)?;
        resymmetrize(st, time)?;
        let h = 2 * k;
        let (M, L) = lq_m_l(data, h, &st[0]);
        let pr = pinv(&M, opts.cutoff_for(&M)).map_err(|e| numerical(time, e))?;

        let residual = inf_norm(&(&L - &M * (&pr.pinv * &L)));
        range_res[k] = residual;
        if residual > opts.res_tol * (1.0 + inf_norm(&L)) {
            return Err(SolveError::Infeasible {
                time,
                reason: InfeasibleReason::RangeCondition { residual },
            });
        }

        match split {
            Some((m1, m2)) => {
                let M11 = sym_part(&M.view((0, 0), (m1, m1)).into_owned());
                let lo = min_eig_sym(&M11).map_err(|e| numerical(time, e))?;
                psd_min[k] = lo;
                if lo < -opts.psd_tol {
                    return Err(SolveError::Infeasible {
                        time,
                        reason: InfeasibleReason::SignCondition {
                            block: "R11 + D1'PD1".into(),
                            margin: lo,
                        },
                    });
                }
                let M22 = sym_part(&M.view((m1, m1), (m2, m2)).into_owned());
                let hi = max_eig_sym(&M22).map_err(|e| numerical(time, e))?;
                nsd_max.as_mut().expect("allocated with split")[k] = hi;
                if hi > opts.psd_tol {
                    return Err(SolveError::Infeasible {
                        time,
                        reason: InfeasibleReason::SignCondition {
                            block: "R22 + D2'PD2".into(),
                            margin: hi,
                        },
                    });
                }
            }
            None => {
                let lo = min_eig_sym(&M).map_err(|e| numerical(time, e))?;
                psd_min[k] = lo;
                if lo < -opts.psd_tol {
                    return Err(SolveError::Infeasible {
                        time,
                        reason: InfeasibleReason::PsdViolation {
                            block: "R + D'PD".into(),
                            margin: lo,
                        },
                    });
                }
            }
        }

        theta_vals[k] = -(&pr.pinv * &L);
        proj_vals[k] = Matrix::identity(m, m) - &pr.pinv * &M;
        Ok(())
    };

    let states = rk4_backward(&grid, vec![sym_part(&data.G)], deriv, post)?;
    let p: Vec<Matrix> = states
        .into_iter()
        .map(|mut st| st.pop().expect("one matrix per state"))
        .collect();

    Ok(ZeroSumSolution {
        P: MatrixPath::new(grid, p),
        Theta0: MatrixPath::new(grid, theta_vals),
        projector: MatrixPath::new(grid, proj_vals),
        feasibility: PinvFeasibility {
            range_residuals: range_res,
            psd_min_margins: psd_min,
            nsd_max_margins: nsd_max,
        },
    })
}

/// Solves the zero-sum saddle Riccati equation on the reduced
/// (common-data) form, with the signed definiteness margins
/// R₁₁ + D₁ᵀPD₁ ⪰ 0 and R₂₂ + D₂ᵀPD₂ ⪯ 0 checked at every grid point.
pub fn solve_zero_sum(zs: &ZeroSumGame, opts: &SolverOptions) -> Result<ZeroSumSolution, SolveError> {
    solve_pinv_riccati(&zs.data, Some((zs.m1, zs.m2)), opts)
}

/// Solves the one-controller Riccati equation (M ⪰ 0 required), the
/// degenerate-weight generalization of the standard LQ regulator.
pub fn solve_slq(data: &LqData, opts: &SolverOptions) -> Result<SlqSolution, SolveError> {
    solve_pinv_riccati(data, None, opts)
}

// ───────────────────────── fixed-feedback evaluation ─────────────────────────

/// Integrates the linear per-player cost equations under a fixed feedback
/// gain path Θ (values interpolated linearly at stage midpoints). Only
/// blow-up can fail; no feasibility conditions apply.
pub fn solve_lyapunov(
    game: &ValidatedGame,
    Theta: &MatrixPath,
    opts: &SolverOptions,
) -> Result<LyapunovSolution, SolveError> {
    let grid = game.grid;

    let deriv = |h: usize, st: &[Matrix]| -> Result<Vec<Matrix>, SolveError> {
        let Th = Theta.at_half(h);
        let d = &game.dynamics;
        let Acl = &d.A[h] + &d.B[h] * &Th;
        let Ccl = &d.C[h] + &d.D[h] * &Th;
        let mut dots = Vec::with_capacity(2);
        for i in 0..2 {
            let P = &st[i];
            let p = &game.player[i];
            let rhs = P * &Acl
                + Acl.transpose() * P
                + Ccl.transpose() * P * &Ccl
                + &p.Q[h]
                + Th.transpose() * &p.S[h]
                + p.S[h].transpose() * &Th
                + Th.transpose() * &p.R[h] * &Th;
            dots.push(-rhs);
        }
        Ok(dots)
    };

    let post = |k: usize, st: &mut Vec<Matrix>| -> Result<(), SolveError> {
        let time = grid.time(k);
        guard_norms(st, time, opts.blowup_bound)?;
        resymmetrize(st, time)?;
        Ok(())
    };

    let terminal = vec![
        sym_part(&game.player[0].G),
        sym_part(&game.player[1].G),
    ];
    let states = rk4_backward(&grid, terminal, deriv, post)?;

    let n_pts = grid.n_steps + 1;
    let mut p1 = Vec::with_capacity(n_pts);
    let mut p2 = Vec::with_capacity(n_pts);
    for mut st in states {
        p2.push(st.pop().expect("two matrices per state"));
        p1.push(st.pop().expect("two matrices per state"));
    }
    Ok(LyapunovSolution {
        P1: MatrixPath::new(grid, p1),
        P2: MatrixPath::new(grid, p2),
    })
}

#[cfg(test)]
mod tests {
    //! Oracle values: the scalar test games below have closed-form
    //! solutions obtained by separating variables in the reduced ODEs;
    //! the expected numbers are frozen from those formulas, not from the
    //! solver under test.

    use super::*;
    use crate::game_model::{
        validate, validate_slq, zero_sum_reduce, CoefficientProfile, GameSpec, SlqProblem,
        TimeGrid,
    };
    use approx::assert_abs_diff_eq;

    fn grid01(n_steps: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, n_steps).unwrap()
    }

    fn scalar(x: f64) -> CoefficientProfile {
        CoefficientProfile::scalar(x)
    }

    fn one() -> Matrix {
        Matrix::from_element(1, 1, 1.0)
    }

    /// dX = u1 ds + u2 dW; J1 = E{X(1)² + ∫u1²}, J2 = E{−X(1)² + ∫(−X² + u2²)}.
    ///
    /// Closed forms: P1(s) = 1/(2−s), P2(s) = −((2−s)³+2)/(3(2−s)²),
    /// Θ*(s) = (−P1(s), 0).
    fn drift_vs_noise_game() -> GameSpec {
        let mut g = GameSpec::zero(1, 1, 1);
        g.B1 = scalar(1.0);
        g.D2 = scalar(1.0);
        g.players[0].R11 = scalar(1.0);
        g.players[0].G = one();
        g.players[1].Q = scalar(-1.0);
        g.players[1].R22 = scalar(1.0);
        g.players[1].G = -one();
        g
    }

    /// dX = (u1 + u2) ds + X dW; Ji = E{X(1)² + ∫ui²}.
    ///
    /// Closed forms: equilibrium P_i(s) = e^{1−s}/(3e^{1−s}−2);
    /// representation Π_i(s) = e^{1−s}/(2e^{1−s}−1).
    fn shared_drift_game() -> GameSpec {
        let mut g = GameSpec::zero(1, 1, 1);
        g.B1 = scalar(1.0);
        g.B2 = scalar(1.0);
        g.C = scalar(1.0);
        g.players[0].R11 = scalar(1.0);
        g.players[0].G = one();
        g.players[1].R22 = scalar(1.0);
        g.players[1].G = one();
        g
    }

    /// dX = (u1 + u2) ds + (u1 − u2) dW; J1 = J2 = E X(1)².
    ///
    /// The feedback coupling is identically inconsistent: K(P) is the
    /// rank-one matrix [[P, −P], [−P, P]] while the right-hand side
    /// −(P; P) sits outside its range whenever P ≠ 0.
    fn opposed_noise_game() -> GameSpec {
        let mut g = GameSpec::zero(1, 1, 1);
        g.B1 = scalar(1.0);
        g.B2 = scalar(1.0);
        g.D1 = scalar(1.0);
        g.D2 = scalar(-1.0);
        g.players[0].G = one();
        g.players[1].G = one();
        g
    }

    fn p1_closed_form(s: f64) -> f64 {
        1.0 / (2.0 - s)
    }
    fn p2_closed_form(s: f64) -> f64 {
        let w = 2.0 - s;
        -(w.powi(3) + 2.0) / (3.0 * w * w)
    }
    fn equilibrium_exp_form(s: f64) -> f64 {
        let e = (1.0 - s).exp();
        e / (3.0 * e - 2.0)
    }
    fn representation_exp_form(s: f64) -> f64 {
        let e = (1.0 - s).exp();
        e / (2.0 * e - 1.0)
    }

    #[test]
    fn closed_loop_matches_scalar_rational_forms() {
        let grid = grid01(200);
        let game = validate(&drift_vs_noise_game(), &grid).unwrap();
        let sol = solve_closed_loop_nash(&game, &SolverOptions::default()).unwrap();

        for (k, &s) in grid.times().iter().enumerate() {
            assert_abs_diff_eq!(sol.P1.value(k)[(0, 0)], p1_closed_form(s), epsilon = 1e-9);
            assert_abs_diff_eq!(sol.P2.value(k)[(0, 0)], p2_closed_form(s), epsilon = 1e-9);
        }
        // Terminal values are copied exactly.
        assert_abs_diff_eq!(sol.P1.terminal()[(0, 0)], 1.0);
        assert_abs_diff_eq!(sol.P2.terminal()[(0, 0)], -1.0);

        // Θ*(s) = (−P1(s), 0); the noise player's gain vanishes.
        let th0 = sol.Theta_star.initial();
        assert_abs_diff_eq!(th0[(0, 0)], -0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(th0[(1, 0)], 0.0, epsilon = 1e-12);

        // 1 + P2(s) ≥ 0 with equality exactly at the horizon.
        for k in 0..=grid.n_steps {
            assert!(sol.psd_margins[1][k] >= -1e-12);
        }
        assert_abs_diff_eq!(sol.psd_margins[1][grid.n_steps], 0.0, epsilon = 1e-12);
        assert!(sol
            .stationarity_residuals
            .iter()
            .all(|&r| r <= 1e-8));
    }

    #[test]
    fn closed_loop_matches_exponential_form() {
        let grid = grid01(200);
        let game = validate(&shared_drift_game(), &grid).unwrap();
        let sol = solve_closed_loop_nash(&game, &SolverOptions::default()).unwrap();
        for (k, &s) in grid.times().iter().enumerate() {
            let expected = equilibrium_exp_form(s);
            assert_abs_diff_eq!(sol.P1.value(k)[(0, 0)], expected, epsilon = 1e-9);
            assert_abs_diff_eq!(sol.P2.value(k)[(0, 0)], expected, epsilon = 1e-9);
        }
        // e/(3e−2) = 0.4416490771…
        assert_abs_diff_eq!(sol.P1.initial()[(0, 0)], 0.441_649_077_124_23, epsilon = 1e-9);
        // Both gains equal −P at every grid point.
        let th = sol.Theta_star.initial();
        assert_abs_diff_eq!(th[(0, 0)], -0.441_649_077_124_23, epsilon = 1e-9);
        assert_abs_diff_eq!(th[(1, 0)], th[(0, 0)], epsilon = 1e-12);
    }

    #[test]
    fn closed_loop_rejects_inconsistent_coupling() {
        let grid = grid01(50);
        let game = validate(&opposed_noise_game(), &grid).unwrap();
        match solve_closed_loop_nash(&game, &SolverOptions::default()) {
            Err(SolveError::Infeasible {
                time,
                reason: InfeasibleReason::SingularCoupling { residual, .. },
            }) => {
                // Detected immediately at the terminal point.
                assert_abs_diff_eq!(time, 1.0);
                assert!(residual > 0.5, "residual {residual} should be O(1)");
            }
            other => panic!("expected SingularCoupling, got {other:?}"),
        }
    }

    #[test]
    fn open_rep_matches_exponential_form() {
        let grid = grid01(200);
        let game = validate(&shared_drift_game(), &grid).unwrap();
        let sol = solve_open_loop_rep(&game, &SolverOptions::default()).unwrap();
        for (k, &s) in grid.times().iter().enumerate() {
            let expected = representation_exp_form(s);
            assert_abs_diff_eq!(sol.Pi1.value(k)[(0, 0)], expected, epsilon = 1e-9);
            assert_abs_diff_eq!(sol.Pi2.value(k)[(0, 0)], expected, epsilon = 1e-9);
        }
        // e/(2e−1) = 0.6126998…
        assert_abs_diff_eq!(sol.Pi1.initial()[(0, 0)], 0.612_699_836_780_28, epsilon = 1e-9);
        // With D = 0 the coupling matrix is the identity.
        assert!(sol.condition_numbers.iter().all(|&c| (c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn open_rep_differs_from_equilibrium_riccati() {
        // The representation field and the equilibrium matrix solve
        // different equations: at s = 0 they are far apart.
        let grid = grid01(100);
        let game = validate(&shared_drift_game(), &grid).unwrap();
        let rep = solve_open_loop_rep(&game, &SolverOptions::default()).unwrap();
        let eq = solve_closed_loop_nash(&game, &SolverOptions::default()).unwrap();
        let gap = (rep.Pi1.initial() - eq.P1.initial())[(0, 0)];
        assert!(gap > 0.1, "expected a visible gap, got {gap}");
    }

    #[test]
    fn open_rep_keeps_one_sided_asymmetry() {
        // A state-coupled game with a nonzero cross weight S produces a
        // genuinely non-symmetric decoupling field; the closed-loop
        // matrix on the same data stays symmetric.
        let mut g = GameSpec::zero(2, 1, 1);
        g.A = CoefficientProfile::constant(Matrix::from_row_slice(2, 2, &[0., 1., 0., 0.]));
        g.B1 = CoefficientProfile::constant(Matrix::from_row_slice(2, 1, &[1., 0.]));
        g.B2 = CoefficientProfile::constant(Matrix::from_row_slice(2, 1, &[0., 1.]));
        g.players[0].S1 =
            CoefficientProfile::constant(Matrix::from_row_slice(1, 2, &[0.5, 0.3]));
        g.players[0].R11 = scalar(1.0);
        g.players[0].G = Matrix::identity(2, 2);
        g.players[0].Q = CoefficientProfile::constant(Matrix::identity(2, 2));
        g.players[1].R22 = scalar(1.0);
        g.players[1].G = Matrix::identity(2, 2);
        let grid = grid01(100);
        let game = validate(&g, &grid).unwrap();

        let rep = solve_open_loop_rep(&game, &SolverOptions::default()).unwrap();
        assert!(
            asymmetry(rep.Pi1.initial()) > 1e-3,
            "decoupling field should be non-symmetric, asymmetry = {}",
            asymmetry(rep.Pi1.initial())
        );

        let eq = solve_closed_loop_nash(&game, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(asymmetry(eq.P1.initial()), 0.0);
    }

    #[test]
    fn open_rep_with_inert_controls_is_linear() {
        // B = D = R = S = 0 makes the coupling 0·Θ = 0 (feasible, Θ = 0)
        // and the field equation linear: Π1(s) = (T − s)·Q1.
        let mut g = GameSpec::zero(1, 1, 1);
        g.players[0].Q = scalar(1.0);
        let grid = grid01(64);
        let game = validate(&g, &grid).unwrap();
        let sol = solve_open_loop_rep(&game, &SolverOptions::default()).unwrap();
        for (k, &s) in grid.times().iter().enumerate() {
            assert_abs_diff_eq!(sol.Pi1.value(k)[(0, 0)], 1.0 - s, epsilon = 1e-14);
            assert_abs_diff_eq!(sol.Pi2.value(k)[(0, 0)], 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(inf_norm(sol.Theta.value(k)), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_loop_with_no_controls_reduces_to_linear() {
        // m1 = m2 = 0: the coupling is the empty system and the equations
        // are linear. With A = C = 0, Q1 = 1, G1 = 0: P1(s) = T − s.
        let mut g = GameSpec::zero(1, 0, 0);
        g.players[0].Q = scalar(1.0);
        let grid = grid01(32);
        let game = validate(&g, &grid).unwrap();
        let sol = solve_closed_loop_nash(&game, &SolverOptions::default()).unwrap();
        for (k, &s) in grid.times().iter().enumerate() {
            assert_abs_diff_eq!(sol.P1.value(k)[(0, 0)], 1.0 - s, epsilon = 1e-14);
        }
        assert_eq!(sol.Theta_star.value(0).shape(), (0, 1));
    }

    fn negate_weights(spec: &mut GameSpec) {
        // Player 2 weights = −(player 1 weights): builds a zero-sum game.
        let p1 = spec.players[0].clone();
        let neg = |prof: &CoefficientProfile| -> CoefficientProfile {
            match prof {
                CoefficientProfile::Constant(M) => CoefficientProfile::Constant(-M),
                CoefficientProfile::LinearInTime { at0, slope } => {
                    CoefficientProfile::LinearInTime {
                        at0: -at0,
                        slope: -slope,
                    }
                }
                CoefficientProfile::Sinusoid {
                    base,
                    amplitude,
                    angular_frequency,
                    phase,
                } => CoefficientProfile::Sinusoid {
                    base: -base,
                    amplitude: -amplitude,
                    angular_frequency: *angular_frequency,
                    phase: *phase,
                },
            }
        };
        spec.players[1] = crate::game_model::PlayerWeights {
            Q: neg(&p1.Q),
            S1: neg(&p1.S1),
            S2: neg(&p1.S2),
            R11: neg(&p1.R11),
            R12: neg(&p1.R12),
            R21: neg(&p1.R21),
            R22: neg(&p1.R22),
            q: neg(&p1.q),
            rho1: neg(&p1.rho1),
            rho2: neg(&p1.rho2),
            G: -p1.G.clone(),
            g: -p1.g.clone(),
        };
    }

    #[test]
    fn zero_sum_constant_rhs_is_exact() {
        // B = D = 0 ⟹ Ṗ = −Q: P(s) = G + (T−s)Q = 2 − s, reproduced
        // exactly by RK4 on a constant right-hand side.
        let mut g = GameSpec::zero(1, 1, 1);
        g.players[0].Q = scalar(1.0);
        g.players[0].R11 = scalar(1.0);
        g.players[0].R22 = scalar(-1.0);
        g.players[0].G = one();
        negate_weights(&mut g);
        let grid = grid01(16);
        let game = validate(&g, &grid).unwrap();
        let zs = zero_sum_reduce(&game, 1e-12).unwrap();
        let sol = solve_zero_sum(&zs, &SolverOptions::default()).unwrap();

        for (k, &s) in grid.times().iter().enumerate() {
            assert_abs_diff_eq!(sol.P.value(k)[(0, 0)], 2.0 - s, epsilon = 1e-14);
            // L = 0: zero minimum-norm feedback and full-range residual 0.
            assert_abs_diff_eq!(inf_norm(sol.Theta0.value(k)), 0.0);
            assert_abs_diff_eq!(sol.feasibility.range_residuals[k], 0.0);
            // M = diag(1, −1) is invertible: the family is a single point.
            assert_abs_diff_eq!(inf_norm(sol.projector.value(k)), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(sol.feasibility.psd_min_margins[k], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(
                sol.feasibility.nsd_max_margins.as_ref().unwrap()[k],
                -1.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn zero_sum_rejects_wrong_sign_minimizer() {
        // R22 > 0 for the minimizing player violates the ⪯ 0 condition
        // immediately at the terminal point.
        let mut g = GameSpec::zero(1, 1, 1);
        g.players[0].R11 = scalar(1.0);
        g.players[0].R22 = scalar(1.0);
        g.players[0].G = one();
        negate_weights(&mut g);
        let grid = grid01(8);
        let game = validate(&g, &grid).unwrap();
        let zs = zero_sum_reduce(&game, 1e-12).unwrap();
        match solve_zero_sum(&zs, &SolverOptions::default()) {
            Err(SolveError::Infeasible {
                time,
                reason: InfeasibleReason::SignCondition { block, margin },
            }) => {
                assert_abs_diff_eq!(time, 1.0);
                assert!(block.contains("R22"));
                assert_abs_diff_eq!(margin, 1.0, epsilon = 1e-14);
            }
            other => panic!("expected SignCondition, got {other:?}"),
        }
    }

    #[test]
    fn slq_scalar_riccati_matches_rational_form() {
        // Ṗ = P² with P(1) = 1 ⟹ P(s) = 1/(2−s).
        let mut slq = SlqProblem::zero(1, 1);
        slq.B = scalar(1.0);
        slq.R = scalar(1.0);
        slq.G = one();
        let grid = grid01(200);
        let data = validate_slq(&slq, &grid).unwrap();
        let sol = solve_slq(&data, &SolverOptions::default()).unwrap();
        for (k, &s) in grid.times().iter().enumerate() {
            assert_abs_diff_eq!(sol.P.value(k)[(0, 0)], 1.0 / (2.0 - s), epsilon = 1e-10);
        }
        assert_abs_diff_eq!(sol.Theta0.initial()[(0, 0)], -0.5, epsilon = 1e-10);
        assert!(sol.feasibility.nsd_max_margins.is_none());
    }

    #[test]
    fn slq_rejects_indefinite_weight() {
        let mut slq = SlqProblem::zero(1, 1);
        slq.B = scalar(1.0);
        slq.R = scalar(-1.0);
        slq.G = one();
        let data = validate_slq(&slq, &grid01(8)).unwrap();
        match solve_slq(&data, &SolverOptions::default()) {
            Err(SolveError::Infeasible {
                reason: InfeasibleReason::PsdViolation { margin, .. },
                ..
            }) => assert_abs_diff_eq!(margin, -1.0, epsilon = 1e-14),
            other => panic!("expected PsdViolation, got {other:?}"),
        }
    }

    #[test]
    fn zero_sum_with_empty_minimizer_matches_slq() {
        // m2 = 0 reduces the saddle problem to plain minimization; both
        // code paths must produce the same path.
        let mut g = GameSpec::zero(2, 2, 0);
        g.A = CoefficientProfile::constant(Matrix::from_row_slice(2, 2, &[0.1, 0.4, 0., -0.2]));
        g.B1 = CoefficientProfile::constant(Matrix::from_row_slice(2, 2, &[1., 0., 0.5, 1.]));
        g.C = CoefficientProfile::constant(Matrix::from_row_slice(2, 2, &[0.2, 0., 0., 0.2]));
        g.players[0].Q = CoefficientProfile::constant(Matrix::identity(2, 2));
        g.players[0].R11 = CoefficientProfile::constant(Matrix::identity(2, 2));
        g.players[0].G = Matrix::identity(2, 2);
        negate_weights(&mut g);
        let grid = grid01(100);
        let game = validate(&g, &grid).unwrap();
        let zs = zero_sum_reduce(&game, 1e-12).unwrap();
        let saddle = solve_zero_sum(&zs, &SolverOptions::default()).unwrap();

        let mut slq = SlqProblem::zero(2, 2);
        slq.A = g.A.clone();
        slq.B = g.B1.clone();
        slq.C = g.C.clone();
        slq.Q = g.players[0].Q.clone();
        slq.S = g.players[0].S1.clone();
        slq.R = g.players[0].R11.clone();
        slq.G = g.players[0].G.clone();
        let data = validate_slq(&slq, &grid).unwrap();
        let direct = solve_slq(&data, &SolverOptions::default()).unwrap();

        assert!(saddle.P.max_diff(&direct.P) <= 1e-13);
        assert!(saddle.Theta0.max_diff(&direct.Theta0) <= 1e-13);
    }

    #[test]
    fn zero_sum_coincides_with_representation_field() {
        // On zero-sum data the representation field of the two-player
        // form reproduces the saddle Riccati path: Π1 = P, Π2 = −P.
        let mut g = GameSpec::zero(1, 1, 1);
        g.A = scalar(0.3);
        g.B1 = scalar(1.0);
        g.B2 = scalar(0.5);
        g.C = scalar(0.1);
        g.D1 = scalar(0.2);
        g.D2 = scalar(-0.4);
        g.players[0].Q = scalar(1.0);
        g.players[0].R11 = scalar(2.0);
        g.players[0].R22 = scalar(-3.0);
        g.players[0].G = one();
        negate_weights(&mut g);
        let grid = grid01(200);
        let game = validate(&g, &grid).unwrap();

        let rep = solve_open_loop_rep(&game, &SolverOptions::default()).unwrap();
        let zs = zero_sum_reduce(&game, 1e-12).unwrap();
        let saddle = solve_zero_sum(&zs, &SolverOptions::default()).unwrap();

        assert!(rep.Pi1.max_diff(&saddle.P) <= 1e-10);
        let neg_pi2 = rep.Pi2.map(|M| -M);
        assert!(rep.Pi1.max_diff(&neg_pi2) <= 1e-10);
    }

    #[test]
    fn rk4_error_drops_sixteen_fold_per_halving() {
        let exact = equilibrium_exp_form(0.0);
        let mut errors = Vec::new();
        for n_steps in [25usize, 50, 100] {
            let grid = grid01(n_steps);
            let game = validate(&shared_drift_game(), &grid).unwrap();
            let sol = solve_closed_loop_nash(&game, &SolverOptions::default()).unwrap();
            errors.push((sol.P1.initial()[(0, 0)] - exact).abs());
        }
        assert!(
            errors[2] > 1e-13,
            "finest error {} too close to round-off to measure order",
            errors[2]
        );
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (12.0..=20.0).contains(&ratio),
                "expected ≈16× reduction, got {ratio} (errors {errors:?})"
            );
        }
    }

    #[test]
    fn lyapunov_with_zero_feedback_is_exact_on_linear_data() {
        let mut g = GameSpec::zero(1, 1, 1);
        g.players[0].Q = scalar(1.0);
        let grid = grid01(32);
        let game = validate(&g, &grid).unwrap();
        let zero_theta =
            MatrixPath::new(grid, vec![Matrix::zeros(2, 1); grid.n_steps + 1]);
        let sol = solve_lyapunov(&game, &zero_theta, &SolverOptions::default()).unwrap();
        for (k, &s) in grid.times().iter().enumerate() {
            assert_abs_diff_eq!(sol.P1.value(k)[(0, 0)], 1.0 - s, epsilon = 1e-14);
            assert_abs_diff_eq!(sol.P2.value(k)[(0, 0)], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn lyapunov_reproduces_equilibrium_cost_matrices() {
        // Feeding the equilibrium gain back through the linear evaluator
        // must reproduce the equilibrium matrices (up to the O(dt²)
        // midpoint interpolation of Θ*).
        let grid = grid01(400);
        let game = validate(&shared_drift_game(), &grid).unwrap();
        let eq = solve_closed_loop_nash(&game, &SolverOptions::default()).unwrap();
        let lyap = solve_lyapunov(&game, &eq.Theta_star, &SolverOptions::default()).unwrap();
        assert!(lyap.P1.max_diff(&eq.P1) <= 1e-5);
        assert!(lyap.P2.max_diff(&eq.P2) <= 1e-5);
    }

    #[test]
    fn lyapunov_reports_blow_up_under_destabilizing_gain() {
        // Θ ≡ 50 drives the linear backward equation like e^{100(1−s)},
        // crossing the 1e8 bound near s ≈ 0.82.
        let mut g = GameSpec::zero(1, 1, 1);
        g.B1 = scalar(1.0);
        g.players[0].G = one();
        let grid = grid01(200);
        let game = validate(&g, &grid).unwrap();
        let big_theta = MatrixPath::new(
            grid,
            vec![Matrix::from_row_slice(2, 1, &[50.0, 0.0]); grid.n_steps + 1],
        );
        match solve_lyapunov(&game, &big_theta, &SolverOptions::default()) {
            Err(SolveError::BlowUp { time, norm }) => {
                assert!((0.7..0.9).contains(&time), "blow-up time {time}");
                assert!(norm > 1e8);
            }
            other => panic!("expected BlowUp, got {other:?}"),
        }
    }

    #[test]
    fn matrix_path_interpolation() {
        let grid = grid01(2);
        let path = MatrixPath::new(
            grid,
            vec![
                Matrix::from_element(1, 1, 0.0),
                Matrix::from_element(1, 1, 2.0),
                Matrix::from_element(1, 1, 6.0),
            ],
        );
        assert_abs_diff_eq!(path.at_half(1)[(0, 0)], 1.0);
        assert_abs_diff_eq!(path.at_half(2)[(0, 0)], 2.0);
        assert_abs_diff_eq!(path.at_half(3)[(0, 0)], 4.0);
        assert_abs_diff_eq!(path.at_time(0.25)[(0, 0)], 1.0);
        assert_abs_diff_eq!(path.at_time(2.0)[(0, 0)], 6.0); // clamped
        assert_abs_diff_eq!(path.at_time(-1.0)[(0, 0)], 0.0); // clamped
    }
}
