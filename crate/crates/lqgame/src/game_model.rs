//! Game instance data model: coefficient profiles, the two-player game
//! specification, validation of dimension/symmetry invariants on a time
//! grid, the block-stacked lift used by the open-loop-representation
//! theory, and the zero-sum reduction.
//!
//! A game lives on `[t0, T]` with state dimension `n` and control
//! dimensions `m1`, `m2` (write `m = m1 + m2`). Dynamics coefficients:
//!
//! ```text
//! A : n×n    B1 : n×m1   B2 : n×m2   b : n×1      (drift)
//! C : n×n    D1 : n×m1   D2 : n×m2   σ : n×1      (diffusion)
//! ```
//!
//! Player i's weights, with the joint control u = (u1; u2) ∈ ℝ^m:
//!
//! ```text
//! Qi : n×n (sym)   Si = (Si1; Si2) : m×n    Ri = [[Ri11, Ri12],
//! qi : n×1                                        [Ri21, Ri22]] : m×m (sym)
//! ρi = (ρi1; ρi2) : m×1     Gi : n×n (sym)   gi : n×1
//! ```
//!
//! Symmetry is required blockwise: Qi, Ri11, Ri22, Gi symmetric and
//! Ri12ᵀ = Ri21, checked at every grid point. All coefficients are
//! deterministic functions of time.
//!
//! Validation materializes every coefficient on the *half grid* (grid
//! points plus interval midpoints) so that the 4th-order integrators in
//! [`crate::riccati`] can evaluate stage times exactly.

use crate::linalg_core::{all_finite, asymmetry, inf_norm, Matrix};
use thiserror::Error;

/// Uniform time grid on `[t0, T]` with `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    /// Initial time.
    pub t0: f64,
    /// Horizon (terminal time).
    pub T: f64,
    /// Number of uniform steps; the grid has `n_steps + 1` points.
    pub n_steps: usize,
}

impl TimeGrid {
    /// Creates a grid, validating `t0 < T` and `n_steps ≥ 1`.
    pub fn new(t0: f64, T: f64, n_steps: usize) -> Result<Self, ModelError> {
        if !(t0.is_finite() && T.is_finite()) || t0 >= T || n_steps == 0 {
            return Err(ModelError::BadGrid {
                t0,
                T,
                n_steps,
            });
        }
        Ok(TimeGrid { t0, T, n_steps })
    }

    /// Step size (T − t0) / n_steps.
    pub fn dt(&self) -> f64 {
        (self.T - self.t0) / self.n_steps as f64
    }

    /// Grid point s_k = t0 + k·dt.
    pub fn time(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n_steps);
        self.t0 + k as f64 * self.dt()
    }

    /// All grid points s_0 .. s_{n_steps}.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    /// Number of half-grid samples: grid points plus interval midpoints.
    pub fn n_half(&self) -> usize {
        2 * self.n_steps + 1
    }

    /// Half-grid time t0 + h·(dt/2); grid point k sits at h = 2k.
    pub fn half_time(&self, h: usize) -> f64 {
        debug_assert!(h < self.n_half());
        self.t0 + h as f64 * (0.5 * self.dt())
    }
}

/// A matrix-valued deterministic function of time.
///
/// Only closed-form profiles are supported so instances serialize exactly
/// and solvers can sample at arbitrary stage times. The shape is fixed by
/// the defining matrices. Times are absolute (not relative to `t0`).
#[derive(Debug, Clone)]
pub enum CoefficientProfile {
    /// M(s) = value.
    Constant(Matrix),
    /// M(s) = at0 + s · slope.
    LinearInTime { at0: Matrix, slope: Matrix },
    /// M(s) = base + sin(ω·s + φ) · amplitude.
    Sinusoid {
        base: Matrix,
        amplitude: Matrix,
        angular_frequency: f64,
        phase: f64,
    },
}

impl CoefficientProfile {
    /// Constant-zero profile of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CoefficientProfile::Constant(Matrix::zeros(rows, cols))
    }

    /// Constant profile from a matrix.
    pub fn constant(M: Matrix) -> Self {
        CoefficientProfile::Constant(M)
    }

    /// Constant scalar profile (1×1).
    pub fn scalar(x: f64) -> Self {
        CoefficientProfile::Constant(Matrix::from_element(1, 1, x))
    }

    /// Shape (rows, cols) of every sample.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            CoefficientProfile::Constant(M) => M.shape(),
            CoefficientProfile::LinearInTime { at0, .. } => at0.shape(),
            CoefficientProfile::Sinusoid { base, .. } => base.shape(),
        }
    }

    /// Sample the profile at absolute time `s`.
    pub fn at(&self, s: f64) -> Matrix {
        match self {
            CoefficientProfile::Constant(M) => M.clone(),
            CoefficientProfile::LinearInTime { at0, slope } => at0 + slope * s,
            CoefficientProfile::Sinusoid {
                base,
                amplitude,
                angular_frequency,
                phase,
            } => base + amplitude * (angular_frequency * s + phase).sin(),
        }
    }

    /// Internal-consistency check: all defining matrices share one shape
    /// and are finite.
    fn well_formed(&self) -> bool {
        match self {
            CoefficientProfile::Constant(M) => all_finite(M),
            CoefficientProfile::LinearInTime { at0, slope } => {
                at0.shape() == slope.shape() && all_finite(at0) && all_finite(slope)
            }
            CoefficientProfile::Sinusoid {
                base,
                amplitude,
                angular_frequency,
                phase,
            } => {
                base.shape() == amplitude.shape()
                    && all_finite(base)
                    && all_finite(amplitude)
                    && angular_frequency.is_finite()
                    && phase.is_finite()
            }
        }
    }
}

/// One player's cost weights (player index fixed by position in
/// [`GameSpec::players`]).
#[derive(Debug, Clone)]
pub struct PlayerWeights {
    /// State weight Q : n×n, symmetric.
    pub Q: CoefficientProfile,
    /// Cross weight rows S1 : m1×n (the block multiplying u1).
    pub S1: CoefficientProfile,
    /// Cross weight rows S2 : m2×n.
    pub S2: CoefficientProfile,
    /// Control weight block R11 : m1×m1, symmetric.
    pub R11: CoefficientProfile,
    /// Control weight block R12 : m1×m2 with R12ᵀ = R21.
    pub R12: CoefficientProfile,
    /// Control weight block R21 : m2×m1.
    pub R21: CoefficientProfile,
    /// Control weight block R22 : m2×m2, symmetric.
    pub R22: CoefficientProfile,
    /// Linear state weight q : n×1.
    pub q: CoefficientProfile,
    /// Linear control weight block ρ1 : m1×1.
    pub rho1: CoefficientProfile,
    /// Linear control weight block ρ2 : m2×1.
    pub rho2: CoefficientProfile,
    /// Terminal weight G : n×n, symmetric (constant).
    pub G: Matrix,
    /// Linear terminal weight g : n×1 (constant).
    pub g: Matrix,
}

impl PlayerWeights {
    /// All-zero weights for the given dimensions.
    pub fn zero(n: usize, m1: usize, m2: usize) -> Self {
        PlayerWeights {
            Q: CoefficientProfile::zeros(n, n),
            S1: CoefficientProfile::zeros(m1, n),
            S2: CoefficientProfile::zeros(m2, n),
            R11: CoefficientProfile::zeros(m1, m1),
            R12: CoefficientProfile::zeros(m1, m2),
            R21: CoefficientProfile::zeros(m2, m1),
            R22: CoefficientProfile::zeros(m2, m2),
            q: CoefficientProfile::zeros(n, 1),
            rho1: CoefficientProfile::zeros(m1, 1),
            rho2: CoefficientProfile::zeros(m2, 1),
            G: Matrix::zeros(n, n),
            g: Matrix::zeros(n, 1),
        }
    }
}

/// Full two-player game specification (coefficients as time profiles).
#[derive(Debug, Clone)]
pub struct GameSpec {
    /// State dimension.
    pub n: usize,
    /// Player 1 control dimension.
    pub m1: usize,
    /// Player 2 control dimension.
    pub m2: usize,
    /// Drift state matrix A : n×n.
    pub A: CoefficientProfile,
    /// Drift control matrix B1 : n×m1.
    pub B1: CoefficientProfile,
    /// Drift control matrix B2 : n×m2.
    pub B2: CoefficientProfile,
    /// Diffusion state matrix C : n×n.
    pub C: CoefficientProfile,
    /// Diffusion control matrix D1 : n×m1.
    pub D1: CoefficientProfile,
    /// Diffusion control matrix D2 : n×m2.
    pub D2: CoefficientProfile,
    /// Drift offset b : n×1.
    pub b: CoefficientProfile,
    /// Diffusion offset σ : n×1.
    pub sigma: CoefficientProfile,
    /// Cost weights of players 1 and 2.
    pub players: [PlayerWeights; 2],
}

impl GameSpec {
    /// Game with all coefficients zero (a convenient starting point:
    /// set only the nonzero fields).
    pub fn zero(n: usize, m1: usize, m2: usize) -> Self {
        GameSpec {
            n,
            m1,
            m2,
            A: CoefficientProfile::zeros(n, n),
            B1: CoefficientProfile::zeros(n, m1),
            B2: CoefficientProfile::zeros(n, m2),
            C: CoefficientProfile::zeros(n, n),
            D1: CoefficientProfile::zeros(n, m1),
            D2: CoefficientProfile::zeros(n, m2),
            b: CoefficientProfile::zeros(n, 1),
            sigma: CoefficientProfile::zeros(n, 1),
            players: [PlayerWeights::zero(n, m1, m2), PlayerWeights::zero(n, m1, m2)],
        }
    }

    /// Joint control dimension m = m1 + m2.
    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }
}

/// Validation and reduction errors.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    /// Grid parameters out of order or degenerate.
    #[error("invalid time grid: t0 = {t0}, T = {T}, n_steps = {n_steps}")]
    BadGrid { t0: f64, T: f64, n_steps: usize },
    /// A coefficient has the wrong shape.
    #[error("dimension mismatch for {name}: expected {expected_rows}×{expected_cols}, got {got_rows}×{got_cols}")]
    DimensionMismatch {
        name: String,
        expected_rows: usize,
        expected_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    /// A symmetry invariant fails at a grid point.
    #[error("symmetry violation for {name} at grid point {grid_index} (s = {time}): ‖·−·ᵀ‖∞ = {residual:.3e}")]
    SymmetryViolation {
        name: String,
        grid_index: usize,
        time: f64,
        residual: f64,
    },
    /// A coefficient sample contains NaN/Inf.
    #[error("non-finite sample for {name} at half-grid index {half_index}")]
    NonFinite { name: String, half_index: usize },
    /// The two players' data are not sign opposites.
    #[error("not a zero-sum game: identity {identity} violated at grid point {grid_index} with residual {residual:.3e}")]
    NotZeroSum {
        identity: String,
        grid_index: usize,
        residual: f64,
    },
}

/// Per-player coefficient tables materialized on the half grid, with the
/// cross/control weights assembled into joint-control form
/// S = (S1; S2) : m×n, R : m×m, ρ : m×1.
#[derive(Debug, Clone)]
pub struct PlayerTables {
    /// Q samples (n×n), half grid.
    pub Q: Vec<Matrix>,
    /// S = (S1; S2) samples (m×n), half grid.
    pub S: Vec<Matrix>,
    /// R samples (m×m), half grid.
    pub R: Vec<Matrix>,
    /// q samples (n×1), half grid.
    pub q: Vec<Matrix>,
    /// ρ = (ρ1; ρ2) samples (m×1), half grid.
    pub rho: Vec<Matrix>,
    /// Terminal weight G (n×n).
    pub G: Matrix,
    /// Terminal linear weight g (n×1).
    pub g: Matrix,
}

/// Dynamics coefficient tables materialized on the half grid, with the
/// control blocks also assembled as B = (B1, B2) : n×m, D : n×m.
#[derive(Debug, Clone)]
pub struct DynamicsTables {
    pub A: Vec<Matrix>,
    pub B1: Vec<Matrix>,
    pub B2: Vec<Matrix>,
    /// B = (B1, B2), n×m.
    pub B: Vec<Matrix>,
    pub C: Vec<Matrix>,
    pub D1: Vec<Matrix>,
    pub D2: Vec<Matrix>,
    /// D = (D1, D2), n×m.
    pub D: Vec<Matrix>,
    pub b: Vec<Matrix>,
    pub sigma: Vec<Matrix>,
}

/// A validated game: the original spec plus every coefficient sampled on
/// the half grid (2·n_steps + 1 samples), with all invariants checked.
#[derive(Debug, Clone)]
pub struct ValidatedGame {
    /// The problem data the samples were built from.
    pub spec: GameSpec,
    /// The grid the samples live on.
    pub grid: TimeGrid,
    /// Dynamics samples.
    pub dynamics: DynamicsTables,
    /// Per-player weight samples.
    pub player: [PlayerTables; 2],
}

impl ValidatedGame {
    /// State dimension.
    pub fn n(&self) -> usize {
        self.spec.n
    }
    /// Control dimension of player `i` (0-based).
    pub fn m_i(&self, i: usize) -> usize {
        if i == 0 {
            self.spec.m1
        } else {
            self.spec.m2
        }
    }
    /// Joint control dimension.
    pub fn m(&self) -> usize {
        self.spec.m()
    }
    /// Row range of player `i` (0-based) inside joint-control objects.
    pub fn rows_of(&self, i: usize) -> std::ops::Range<usize> {
        if i == 0 {
            0..self.spec.m1
        } else {
            self.spec.m1..self.spec.m()
        }
    }
}

fn check_profile(
    name: &str,
    prof: &CoefficientProfile,
    expected: (usize, usize),
) -> Result<(), ModelError> {
    let got = prof.shape();
    if got != expected || !prof.well_formed() {
        if got != expected {
            return Err(ModelError::DimensionMismatch {
                name: name.to_string(),
                expected_rows: expected.0,
                expected_cols: expected.1,
                got_rows: got.0,
                got_cols: got.1,
            });
        }
        return Err(ModelError::NonFinite {
            name: name.to_string(),
            half_index: 0,
        });
    }
    Ok(())
}

fn check_const(name: &str, M: &Matrix, expected: (usize, usize)) -> Result<(), ModelError> {
    if M.shape() != expected {
        return Err(ModelError::DimensionMismatch {
            name: name.to_string(),
            expected_rows: expected.0,
            expected_cols: expected.1,
            got_rows: M.nrows(),
            got_cols: M.ncols(),
        });
    }
    if !all_finite(M) {
        return Err(ModelError::NonFinite {
            name: name.to_string(),
            half_index: 0,
        });
    }
    Ok(())
}

fn materialize(
    name: &str,
    prof: &CoefficientProfile,
    grid: &TimeGrid,
) -> Result<Vec<Matrix>, ModelError> {
    let mut out = Vec::with_capacity(grid.n_half());
    for h in 0..grid.n_half() {
        let M = prof.at(grid.half_time(h));
        if !all_finite(&M) {
            return Err(ModelError::NonFinite {
                name: name.to_string(),
                half_index: h,
            });
        }
        out.push(M);
    }
    Ok(out)
}

/// Symmetry tolerance used by [`validate`]: ‖M−Mᵀ‖∞ ≤ 1e−9·(1+‖M‖∞).
fn check_symmetric_on_grid(
    name: &str,
    samples: &[Matrix],
    grid: &TimeGrid,
) -> Result<(), ModelError> {
    for k in 0..=grid.n_steps {
        let M = &samples[2 * k];
        let residual = asymmetry(M);
        if residual > 1e-9 * (1.0 + inf_norm(M)) {
            return Err(ModelError::SymmetryViolation {
                name: name.to_string(),
                grid_index: k,
                time: grid.time(k),
                residual,
            });
        }
    }
    Ok(())
}

/// Residual of the pairing R12ᵀ = R21 at every grid point.
fn check_transpose_pair_on_grid(
    name: &str,
    r12: &[Matrix],
    r21: &[Matrix],
    grid: &TimeGrid,
) -> Result<(), ModelError> {
    for k in 0..=grid.n_steps {
        let residual = inf_norm(&(r12[2 * k].transpose() - &r21[2 * k]));
        let scale = 1.0 + inf_norm(&r12[2 * k]).max(inf_norm(&r21[2 * k]));
        if residual > 1e-9 * scale {
            return Err(ModelError::SymmetryViolation {
                name: name.to_string(),
                grid_index: k,
                time: grid.time(k),
                residual,
            });
        }
    }
    Ok(())
}

/// Validates dimensions, finiteness, and the blockwise symmetry
/// invariants at every grid point, and materializes every coefficient on
/// the half grid.
pub fn validate(spec: &GameSpec, grid: &TimeGrid) -> Result<ValidatedGame, ModelError> {
    let (n, m1, m2) = (spec.n, spec.m1, spec.m2);
    if n == 0 {
        return Err(ModelError::DimensionMismatch {
            name: "n".into(),
            expected_rows: 1,
            expected_cols: 1,
            got_rows: 0,
            got_cols: 0,
        });
    }

    // Shapes first (cheap, precise errors), then materialize, then symmetry.
    check_profile("A", &spec.A, (n, n))?;
    check_profile("B1", &spec.B1, (n, m1))?;
    check_profile("B2", &spec.B2, (n, m2))?;
    check_profile("C", &spec.C, (n, n))?;
    check_profile("D1", &spec.D1, (n, m1))?;
    check_profile("D2", &spec.D2, (n, m2))?;
    check_profile("b", &spec.b, (n, 1))?;
    check_profile("sigma", &spec.sigma, (n, 1))?;
    for (i, pl) in spec.players.iter().enumerate() {
        let p = i + 1;
        check_profile(&format!("Q{p}"), &pl.Q, (n, n))?;
        check_profile(&format!("S{p}1"), &pl.S1, (m1, n))?;
        check_profile(&format!("S{p}2"), &pl.S2, (m2, n))?;
        check_profile(&format!("R{p}11"), &pl.R11, (m1, m1))?;
        check_profile(&format!("R{p}12"), &pl.R12, (m1, m2))?;
        check_profile(&format!("R{p}21"), &pl.R21, (m2, m1))?;
        check_profile(&format!("R{p}22"), &pl.R22, (m2, m2))?;
        check_profile(&format!("q{p}"), &pl.q, (n, 1))?;
        check_profile(&format!("rho{p}1"), &pl.rho1, (m1, 1))?;
        check_profile(&format!("rho{p}2"), &pl.rho2, (m2, 1))?;
        check_const(&format!("G{p}"), &pl.G, (n, n))?;
        check_const(&format!("g{p}"), &pl.g, (n, 1))?;
    }

    let A = materialize("A", &spec.A, grid)?;
    let B1 = materialize("B1", &spec.B1, grid)?;
    let B2 = materialize("B2", &spec.B2, grid)?;
    let C = materialize("C", &spec.C, grid)?;
    let D1 = materialize("D1", &spec.D1, grid)?;
    let D2 = materialize("D2", &spec.D2, grid)?;
    let b = materialize("b", &spec.b, grid)?;
    let sigma = materialize("sigma", &spec.sigma, grid)?;

    let hstack = |left: &Matrix, right: &Matrix| -> Matrix {
        let mut M = Matrix::zeros(left.nrows(), left.ncols() + right.ncols());
        M.view_mut((0, 0), left.shape()).copy_from(left);
        M.view_mut((0, left.ncols()), right.shape()).copy_from(right);
        M
    };
    let vstack = |top: &Matrix, bottom: &Matrix| -> Matrix {
        let mut M = Matrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
        M.view_mut((0, 0), top.shape()).copy_from(top);
        M.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
        M
    };

    let B: Vec<Matrix> = B1.iter().zip(&B2).map(|(x, y)| hstack(x, y)).collect();
    let D: Vec<Matrix> = D1.iter().zip(&D2).map(|(x, y)| hstack(x, y)).collect();

    let mut players_out: Vec<PlayerTables> = Vec::with_capacity(2);
    for (i, pl) in spec.players.iter().enumerate() {
        let p = i + 1;
        let Q = materialize(&format!("Q{p}"), &pl.Q, grid)?;
        let S1 = materialize(&format!("S{p}1"), &pl.S1, grid)?;
        let S2 = materialize(&format!("S{p}2"), &pl.S2, grid)?;
        let R11 = materialize(&format!("R{p}11"), &pl.R11, grid)?;
        let R12 = materialize(&format!("R{p}12"), &pl.R12, grid)?;
        let R21 = materialize(&format!("R{p}21"), &pl.R21, grid)?;
        let R22 = materialize(&format!("R{p}22"), &pl.R22, grid)?;
        let q = materialize(&format!("q{p}"), &pl.q, grid)?;
        let rho1 = materialize(&format!("rho{p}1"), &pl.rho1, grid)?;
        let rho2 = materialize(&format!("rho{p}2"), &pl.rho2, grid)?;

        check_symmetric_on_grid(&format!("Q{p}"), &Q, grid)?;
        check_symmetric_on_grid(&format!("R{p}11"), &R11, grid)?;
        check_symmetric_on_grid(&format!("R{p}22"), &R22, grid)?;
        check_transpose_pair_on_grid(&format!("R{p}12/R{p}21"), &R12, &R21, grid)?;
        {
            let residual = asymmetry(&pl.G);
            if residual > 1e-9 * (1.0 + inf_norm(&pl.G)) {
                return Err(ModelError::SymmetryViolation {
                    name: format!("G{p}"),
                    grid_index: 0,
                    time: grid.t0,
                    residual,
                });
            }
        }

        let S: Vec<Matrix> = S1.iter().zip(&S2).map(|(x, y)| vstack(x, y)).collect();
        let R: Vec<Matrix> = (0..grid.n_half())
            .map(|h| vstack(&hstack(&R11[h], &R12[h]), &hstack(&R21[h], &R22[h])))
            .collect();
        let rho: Vec<Matrix> = rho1.iter().zip(&rho2).map(|(x, y)| vstack(x, y)).collect();

        players_out.push(PlayerTables {
            Q,
            S,
            R,
            q,
            rho,
            G: pl.G.clone(),
            g: pl.g.clone(),
        });
    }
    let player1 = players_out.remove(0);
    let player2 = players_out.remove(0);

    Ok(ValidatedGame {
        spec: spec.clone(),
        grid: *grid,
        dynamics: DynamicsTables {
            A,
            B1,
            B2,
            B,
            C,
            D1,
            D2,
            D,
            b,
            sigma,
        },
        player: [player1, player2],
    })
}

// ───────────────────────── stacked (lifted) form ─────────────────────────

/// One time sample of the block-stacked lift of a two-player game.
///
/// States are duplicated (one copy per player's adjoint), controls are
/// duplicated likewise, and the per-player weights sit on the block
/// diagonal; the selector `J` extracts each player's own rows:
///
/// ```text
/// 𝐀 = diag(A, A)        𝐁 = diag(B, B)      𝐂 = diag(C, C)    𝐃 = diag(D, D)
/// 𝐐 = diag(Q1, Q2)      𝐒 = diag(S1, S2)    𝐑 = diag(R1, R2)
/// 𝐪 = (q1; q2)          𝛒 = (ρ1; ρ2)        𝐆 = diag(G1, G2)  𝐠 = (g1; g2)
/// 𝐉 = [I_{m1} 0; 0 0; 0 0; 0 I_{m2}]  (2m×m)
/// 𝐈ₖ = (I_k; I_k)  (2k×k)
/// ```
#[derive(Debug, Clone)]
pub struct StackedCoeffs {
    pub A: Matrix,
    pub B: Matrix,
    pub C: Matrix,
    pub D: Matrix,
    pub Q: Matrix,
    pub S: Matrix,
    pub R: Matrix,
    pub q: Matrix,
    pub rho: Matrix,
}

/// The stacked lift of a validated game: constant selectors plus
/// per-grid-point stacked samples.
#[derive(Debug, Clone)]
pub struct StackedGame {
    /// Selector 𝐉 : 2m×m (identity blocks in the (1,1) and (4,2) block
    /// positions).
    pub J: Matrix,
    /// Stacked identity 𝐈ₙ : 2n×n.
    pub In: Matrix,
    /// Stacked identity 𝐈ₘ : 2m×m.
    pub Im: Matrix,
    /// Stacked terminal weight 𝐆 : 2n×2n.
    pub G: Matrix,
    /// Stacked terminal linear weight 𝐠 : 2n×1.
    pub g: Matrix,
    /// Stacked time samples, one per grid point (index k).
    pub samples: Vec<StackedCoeffs>,
}

fn block_diag(a: &Matrix, d: &Matrix) -> Matrix {
    let mut M = Matrix::zeros(a.nrows() + d.nrows(), a.ncols() + d.ncols());
    M.view_mut((0, 0), a.shape()).copy_from(a);
    M.view_mut((a.nrows(), a.ncols()), d.shape()).copy_from(d);
    M
}

fn vcat(a: &Matrix, b: &Matrix) -> Matrix {
    let mut M = Matrix::zeros(a.nrows() + b.nrows(), a.ncols());
    M.view_mut((0, 0), a.shape()).copy_from(a);
    M.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    M
}

/// Builds the block-stacked lift on the grid points of a validated game.
pub fn stack(game: &ValidatedGame) -> StackedGame {
    let (m1, m2) = (game.spec.m1, game.spec.m2);
    let (n, m) = (game.n(), game.m());

    let mut J = Matrix::zeros(2 * m, m);
    J.view_mut((0, 0), (m1, m1)).copy_from(&Matrix::identity(m1, m1));
    J.view_mut((m + m1, m1), (m2, m2))
        .copy_from(&Matrix::identity(m2, m2));

    let In = vcat(&Matrix::identity(n, n), &Matrix::identity(n, n));
    let Im = vcat(&Matrix::identity(m, m), &Matrix::identity(m, m));

    let d = &game.dynamics;
    let [p1, p2] = &game.player;
    let samples = (0..=game.grid.n_steps)
        .map(|k| {
            let h = 2 * k;
            StackedCoeffs {
                A: block_diag(&d.A[h], &d.A[h]),
                B: block_diag(&d.B[h], &d.B[h]),
                C: block_diag(&d.C[h], &d.C[h]),
                D: block_diag(&d.D[h], &d.D[h]),
                Q: block_diag(&p1.Q[h], &p2.Q[h]),
                S: block_diag(&p1.S[h], &p2.S[h]),
                R: block_diag(&p1.R[h], &p2.R[h]),
                q: vcat(&p1.q[h], &p2.q[h]),
                rho: vcat(&p1.rho[h], &p2.rho[h]),
            }
        })
        .collect();

    StackedGame {
        J,
        In,
        Im,
        G: block_diag(&p1.G, &p2.G),
        g: vcat(&p1.g, &p2.g),
        samples,
    }
}

// ───────────────────────── single-controller data ─────────────────────────

/// A single-controller LQ problem materialized on the half grid. Produced
/// by [`validate_slq`] (one player) and [`zero_sum_reduce`] (the common
/// data of a zero-sum game, with the joint control as the controller).
#[derive(Debug, Clone)]
pub struct LqData {
    pub n: usize,
    pub m: usize,
    pub grid: TimeGrid,
    pub A: Vec<Matrix>,
    pub B: Vec<Matrix>,
    pub C: Vec<Matrix>,
    pub D: Vec<Matrix>,
    pub b: Vec<Matrix>,
    pub sigma: Vec<Matrix>,
    pub Q: Vec<Matrix>,
    /// S : m×n.
    pub S: Vec<Matrix>,
    /// R : m×m, symmetric.
    pub R: Vec<Matrix>,
    pub q: Vec<Matrix>,
    /// ρ : m×1.
    pub rho: Vec<Matrix>,
    pub G: Matrix,
    pub g: Matrix,
}

/// Single-controller LQ problem specification (profiles, not samples).
#[derive(Debug, Clone)]
pub struct SlqProblem {
    pub n: usize,
    pub m: usize,
    pub A: CoefficientProfile,
    pub B: CoefficientProfile,
    pub C: CoefficientProfile,
    pub D: CoefficientProfile,
    pub b: CoefficientProfile,
    pub sigma: CoefficientProfile,
    pub Q: CoefficientProfile,
    pub S: CoefficientProfile,
    pub R: CoefficientProfile,
    pub q: CoefficientProfile,
    pub rho: CoefficientProfile,
    pub G: Matrix,
    pub g: Matrix,
}

impl SlqProblem {
    /// All-zero problem of the given dimensions.
    pub fn zero(n: usize, m: usize) -> Self {
        SlqProblem {
            n,
            m,
            A: CoefficientProfile::zeros(n, n),
            B: CoefficientProfile::zeros(n, m),
            C: CoefficientProfile::zeros(n, n),
            D: CoefficientProfile::zeros(n, m),
            b: CoefficientProfile::zeros(n, 1),
            sigma: CoefficientProfile::zeros(n, 1),
            Q: CoefficientProfile::zeros(n, n),
            S: CoefficientProfile::zeros(m, n),
            R: CoefficientProfile::zeros(m, m),
            q: CoefficientProfile::zeros(n, 1),
            rho: CoefficientProfile::zeros(m, 1),
            G: Matrix::zeros(n, n),
            g: Matrix::zeros(n, 1),
        }
    }

    /// Embeds the problem as a two-player game with `m2 = 0` (player 2
    /// inert, player 1 carrying all the data). The two formulations
    /// describe the same optimization, which makes the two solver
    /// pipelines directly comparable.
    pub fn as_one_player_game(&self) -> GameSpec {
        let mut game = GameSpec::zero(self.n, self.m, 0);
        game.A = self.A.clone();
        game.B1 = self.B.clone();
        game.C = self.C.clone();
        game.D1 = self.D.clone();
        game.b = self.b.clone();
        game.sigma = self.sigma.clone();
        game.players[0].Q = self.Q.clone();
        game.players[0].S1 = self.S.clone();
        game.players[0].R11 = self.R.clone();
        game.players[0].q = self.q.clone();
        game.players[0].rho1 = self.rho.clone();
        game.players[0].G = self.G.clone();
        game.players[0].g = self.g.clone();
        game
    }
}

/// Validates and materializes a single-controller LQ problem
/// (dimensions, finiteness, symmetry of Q, R, G at grid points).
pub fn validate_slq(prob: &SlqProblem, grid: &TimeGrid) -> Result<LqData, ModelError> {
    let (n, m) = (prob.n, prob.m);
    check_profile("A", &prob.A, (n, n))?;
    check_profile("B", &prob.B, (n, m))?;
    check_profile("C", &prob.C, (n, n))?;
    check_profile("D", &prob.D, (n, m))?;
    check_profile("b", &prob.b, (n, 1))?;
    check_profile("sigma", &prob.sigma, (n, 1))?;
    check_profile("Q", &prob.Q, (n, n))?;
    check_profile("S", &prob.S, (m, n))?;
    check_profile("R", &prob.R, (m, m))?;
    check_profile("q", &prob.q, (n, 1))?;
    check_profile("rho", &prob.rho, (m, 1))?;
    check_const("G", &prob.G, (n, n))?;
    check_const("g", &prob.g, (n, 1))?;

    let Q = materialize("Q", &prob.Q, grid)?;
    let R = materialize("R", &prob.R, grid)?;
    check_symmetric_on_grid("Q", &Q, grid)?;
    check_symmetric_on_grid("R", &R, grid)?;
    let residual = asymmetry(&prob.G);
    if residual > 1e-9 * (1.0 + inf_norm(&prob.G)) {
        return Err(ModelError::SymmetryViolation {
            name: "G".into(),
            grid_index: 0,
            time: grid.t0,
            residual,
        });
    }

    Ok(LqData {
        n,
        m,
        grid: *grid,
        A: materialize("A", &prob.A, grid)?,
        B: materialize("B", &prob.B, grid)?,
        C: materialize("C", &prob.C, grid)?,
        D: materialize("D", &prob.D, grid)?,
        b: materialize("b", &prob.b, grid)?,
        sigma: materialize("sigma", &prob.sigma, grid)?,
        Q,
        S: materialize("S", &prob.S, grid)?,
        R,
        q: materialize("q", &prob.q, grid)?,
        rho: materialize("rho", &prob.rho, grid)?,
        G: prob.G.clone(),
        g: prob.g.clone(),
    })
}

// ───────────────────────── zero-sum reduction ─────────────────────────

/// A zero-sum game: the common data (taken from player 1) with the joint
/// control treated as one controller, plus the player split of the
/// control dimensions.
#[derive(Debug, Clone)]
pub struct ZeroSumGame {
    /// Player 1 control dimension.
    pub m1: usize,
    /// Player 2 control dimension.
    pub m2: usize,
    /// Common data: G, g, Q, q, S, R, ρ from player 1; dynamics shared.
    pub data: LqData,
}

/// Checks the sign identities `X1 + X2 = 0` for every weight pair on
/// every grid point (relative tolerance `tol`) and, on success, returns
/// the common data taken from player 1.
///
/// The identities are checked in the fixed order G, g, Q, q, S1, S2,
/// R11, R12, R21, R22, ρ1, ρ2; the first violation is reported.
pub fn zero_sum_reduce(game: &ValidatedGame, tol: f64) -> Result<ZeroSumGame, ModelError> {
    let [p1, p2] = &game.player;
    let grid = &game.grid;

    let violation = |identity: &str, k: usize, residual: f64| ModelError::NotZeroSum {
        identity: identity.to_string(),
        grid_index: k,
        residual,
    };

    // Terminal weights (constant).
    let check_const_pair = |name: &str, X1: &Matrix, X2: &Matrix| -> Result<(), ModelError> {
        let residual = inf_norm(&(X1 + X2));
        let scale = 1.0 + inf_norm(X1).max(inf_norm(X2));
        if residual > tol * scale {
            return Err(violation(name, 0, residual));
        }
        Ok(())
    };
    check_const_pair("G", &p1.G, &p2.G)?;
    check_const_pair("g", &p1.g, &p2.g)?;

    // Time-varying weights, every grid point. The assembled S, R, ρ tables
    // contain every block, so checking them covers the blockwise
    // identities; blocks are re-extracted for the report when one fails.
    let spec = &game.spec;
    for k in 0..=grid.n_steps {
        let s = grid.time(k);
        let pairs: [(&str, Matrix, Matrix); 10] = [
            ("Q", spec.players[0].Q.at(s), spec.players[1].Q.at(s)),
            ("q", spec.players[0].q.at(s), spec.players[1].q.at(s)),
            ("S1", spec.players[0].S1.at(s), spec.players[1].S1.at(s)),
            ("S2", spec.players[0].S2.at(s), spec.players[1].S2.at(s)),
            ("R11", spec.players[0].R11.at(s), spec.players[1].R11.at(s)),
            ("R12", spec.players[0].R12.at(s), spec.players[1].R12.at(s)),
            ("R21", spec.players[0].R21.at(s), spec.players[1].R21.at(s)),
            ("R22", spec.players[0].R22.at(s), spec.players[1].R22.at(s)),
            ("rho1", spec.players[0].rho1.at(s), spec.players[1].rho1.at(s)),
            ("rho2", spec.players[0].rho2.at(s), spec.players[1].rho2.at(s)),
        ];
        for (name, X1, X2) in &pairs {
            let residual = inf_norm(&(X1 + X2));
            let scale = 1.0 + inf_norm(X1).max(inf_norm(X2));
            if residual > tol * scale {
                return Err(violation(name, k, residual));
            }
        }
    }

    let d = &game.dynamics;
    let data = LqData {
        n: game.n(),
        m: game.m(),
        grid: *grid,
        A: d.A.clone(),
        B: d.B.clone(),
        C: d.C.clone(),
        D: d.D.clone(),
        b: d.b.clone(),
        sigma: d.sigma.clone(),
        Q: p1.Q.clone(),
        S: p1.S.clone(),
        R: p1.R.clone(),
        q: p1.q.clone(),
        rho: p1.rho.clone(),
        G: p1.G.clone(),
        g: p1.g.clone(),
    };

    Ok(ZeroSumGame {
        m1: spec.m1,
        m2: spec.m2,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// n=1, m1=m2=1 game with state-multiplicative noise, both drifts
    /// active, R1 = diag(1,0), R2 = diag(0,1), G1 = G2 = 1.
    fn sample_game() -> GameSpec {
        let mut g = GameSpec::zero(1, 1, 1);
        g.C = CoefficientProfile::scalar(1.0);
        g.B1 = CoefficientProfile::scalar(1.0);
        g.B2 = CoefficientProfile::scalar(1.0);
        g.players[0].R11 = CoefficientProfile::scalar(1.0);
        g.players[1].R22 = CoefficientProfile::scalar(1.0);
        g.players[0].G = Matrix::from_element(1, 1, 1.0);
        g.players[1].G = Matrix::from_element(1, 1, 1.0);
        g
    }

    fn grid01(n_steps: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, n_steps).unwrap()
    }

    #[test]
    fn grid_times_are_uniform() {
        let grid = grid01(4);
        assert_abs_diff_eq!(grid.dt(), 0.25);
        assert_eq!(grid.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid.n_half(), 9);
        assert_abs_diff_eq!(grid.half_time(3), 0.375);
    }

    #[test]
    fn grid_rejects_degenerate() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert!(TimeGrid::new(2.0, 1.0, 10).is_err());
    }

    #[test]
    fn profiles_sample_correctly() {
        let lin = CoefficientProfile::LinearInTime {
            at0: Matrix::from_element(1, 1, 2.0),
            slope: Matrix::from_element(1, 1, -3.0),
        };
        assert_abs_diff_eq!(lin.at(0.5)[(0, 0)], 0.5, epsilon = 1e-15);

        let sinus = CoefficientProfile::Sinusoid {
            base: Matrix::from_element(1, 1, 1.0),
            amplitude: Matrix::from_element(1, 1, 2.0),
            angular_frequency: std::f64::consts::PI,
            phase: 0.0,
        };
        assert_abs_diff_eq!(sinus.at(0.5)[(0, 0)], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn validate_accepts_sample_game() {
        let game = sample_game();
        let v = validate(&game, &grid01(10)).unwrap();
        assert_eq!(v.dynamics.B[0].shape(), (1, 2));
        assert_eq!(v.player[0].R[0].shape(), (2, 2));
        // R1 assembled = diag(1, 0).
        assert_abs_diff_eq!(v.player[0].R[0][(0, 0)], 1.0);
        assert_abs_diff_eq!(v.player[0].R[0][(1, 1)], 0.0);
        // R2 assembled = diag(0, 1).
        assert_abs_diff_eq!(v.player[1].R[0][(1, 1)], 1.0);
        // Half grid has 21 samples.
        assert_eq!(v.dynamics.A.len(), 21);
    }

    #[test]
    fn validate_rejects_wrong_dimension() {
        let mut game = sample_game();
        game.B1 = CoefficientProfile::zeros(1, 2); // should be 1×1
        match validate(&game, &grid01(4)) {
            Err(ModelError::DimensionMismatch { name, .. }) => assert_eq!(name, "B1"),
            other => panic!("expected DimensionMismatch, got {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_cross_block_mismatch() {
        // R12ᵀ ≠ R21 for player 1 (scalar blocks 0.3 vs 0.4).
        let mut game = sample_game();
        game.players[0].R12 = CoefficientProfile::scalar(0.3);
        game.players[0].R21 = CoefficientProfile::scalar(0.4);
        match validate(&game, &grid01(4)) {
            Err(ModelError::SymmetryViolation { name, residual, .. }) => {
                assert!(name.contains("R112"));
                assert_abs_diff_eq!(residual, 0.1, epsilon = 1e-12);
            }
            other => panic!("expected SymmetryViolation, got {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_asymmetric_terminal_weight() {
        let mut game = GameSpec::zero(2, 1, 1);
        game.players[1].G = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        match validate(&game, &grid01(4)) {
            Err(ModelError::SymmetryViolation { name, .. }) => assert_eq!(name, "G2"),
            other => panic!("expected SymmetryViolation, got {other:?}"),
        }
    }

    #[test]
    fn stack_selector_structure_scalar_controls() {
        let v = validate(&sample_game(), &grid01(4)).unwrap();
        let st = stack(&v);
        // 𝐉 is 4×2 with ones at (0,0) and (3,1).
        assert_eq!(st.J.shape(), (4, 2));
        let mut expected = Matrix::zeros(4, 2);
        expected[(0, 0)] = 1.0;
        expected[(3, 1)] = 1.0;
        assert_abs_diff_eq!(inf_norm(&(&st.J - &expected)), 0.0);
        // 𝐈ₙ for n=1 is (1; 1); for the joint control m=2, 𝐈ₘ is 4×2.
        assert_eq!(st.In.shape(), (2, 1));
        assert_eq!(st.Im.shape(), (4, 2));
    }

    #[test]
    fn stack_product_identities() {
        // An intentionally asymmetric-in-players game so the identities
        // are informative.
        let mut game = sample_game();
        game.players[0].S1 = CoefficientProfile::scalar(0.7);
        game.players[1].S2 = CoefficientProfile::scalar(-0.4);
        game.players[0].rho1 = CoefficientProfile::scalar(0.2);
        game.players[1].rho2 = CoefficientProfile::scalar(0.9);
        game.D1 = CoefficientProfile::scalar(0.5);
        game.D2 = CoefficientProfile::scalar(-0.25);
        let v = validate(&game, &grid01(4)).unwrap();
        let st = stack(&v);
        let k = 2; // any grid point
        let h = 2 * k;
        let sc = &st.samples[k];
        let d = &v.dynamics;
        let [p1, p2] = &v.player;

        // 𝐁𝐉 = diag(B1, B2) and 𝐃𝐉 = diag(D1, D2).
        let BJ = &sc.B * &st.J;
        assert_abs_diff_eq!(
            inf_norm(&(&BJ - &block_diag(&d.B1[h], &d.B2[h]))),
            0.0,
            epsilon = 1e-15
        );
        let DJ = &sc.D * &st.J;
        assert_abs_diff_eq!(
            inf_norm(&(&DJ - &block_diag(&d.D1[h], &d.D2[h]))),
            0.0,
            epsilon = 1e-15
        );

        // 𝐉ᵀ𝐒 = diag(S1 rows of player 1, S2 rows of player 2).
        let JtS = st.J.transpose() * &sc.S;
        let S11 = p1.S[h].rows(0, 1).into_owned();
        let S22 = p2.S[h].rows(1, 1).into_owned();
        assert_abs_diff_eq!(
            inf_norm(&(&JtS - &block_diag(&S11, &S22))),
            0.0,
            epsilon = 1e-15
        );

        // 𝐉ᵀ𝐑 = diag(R1 rows of player 1, R2 rows of player 2).
        let JtR = st.J.transpose() * &sc.R;
        let R11 = p1.R[h].rows(0, 1).into_owned();
        let R22 = p2.R[h].rows(1, 1).into_owned();
        assert_abs_diff_eq!(
            inf_norm(&(&JtR - &block_diag(&R11, &R22))),
            0.0,
            epsilon = 1e-15
        );

        // 𝐉ᵀ𝛒 = (ρ1 rows of player 1; ρ2 rows of player 2).
        let Jtrho = st.J.transpose() * &sc.rho;
        assert_abs_diff_eq!(Jtrho[(0, 0)], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(Jtrho[(1, 0)], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn stack_identity_selector_for_two_states() {
        let game = GameSpec::zero(2, 1, 1);
        let v = validate(&game, &grid01(2)).unwrap();
        let st = stack(&v);
        assert_eq!(st.In.shape(), (4, 2));
        let expected = Matrix::from_row_slice(4, 2, &[1., 0., 0., 1., 1., 0., 0., 1.]);
        assert_abs_diff_eq!(inf_norm(&(&st.In - &expected)), 0.0);
    }

    #[test]
    fn zero_sum_reduce_accepts_negated_construction() {
        let mut game = GameSpec::zero(1, 1, 1);
        game.B1 = CoefficientProfile::scalar(1.0);
        game.B2 = CoefficientProfile::scalar(1.0);
        game.players[0].Q = CoefficientProfile::scalar(1.0);
        game.players[1].Q = CoefficientProfile::scalar(-1.0);
        game.players[0].R11 = CoefficientProfile::scalar(1.0);
        game.players[1].R11 = CoefficientProfile::scalar(-1.0);
        game.players[0].R22 = CoefficientProfile::scalar(-1.0);
        game.players[1].R22 = CoefficientProfile::scalar(1.0);
        game.players[0].G = Matrix::from_element(1, 1, 1.0);
        game.players[1].G = Matrix::from_element(1, 1, -1.0);
        let v = validate(&game, &grid01(8)).unwrap();
        let zs = zero_sum_reduce(&v, 1e-12).unwrap();
        assert_eq!(zs.data.m, 2);
        // Common R = diag(1, −1) taken from player 1.
        assert_abs_diff_eq!(zs.data.R[0][(0, 0)], 1.0);
        assert_abs_diff_eq!(zs.data.R[0][(1, 1)], -1.0);
    }

    #[test]
    fn zero_sum_reduce_rejects_common_interest_game() {
        // Both players pay for the state the same way: G1 = G2 = 1 cannot
        // be zero-sum; G is the first identity checked.
        let v = validate(&sample_game(), &grid01(4)).unwrap();
        match zero_sum_reduce(&v, 1e-12) {
            Err(ModelError::NotZeroSum { identity, residual, .. }) => {
                assert_eq!(identity, "G");
                assert_abs_diff_eq!(residual, 2.0, epsilon = 1e-15);
            }
            other => panic!("expected NotZeroSum, got {other:?}"),
        }
    }

    #[test]
    fn slq_embedding_matches_validated_tables() {
        let mut slq = SlqProblem::zero(1, 1);
        slq.B = CoefficientProfile::scalar(1.0);
        slq.R = CoefficientProfile::scalar(1.0);
        slq.G = Matrix::from_element(1, 1, 1.0);
        let grid = grid01(4);
        let data = validate_slq(&slq, &grid).unwrap();
        let game = slq.as_one_player_game();
        let v = validate(&game, &grid).unwrap();
        assert_eq!(v.m(), 1);
        assert_abs_diff_eq!(
            inf_norm(&(&v.dynamics.B[0] - &data.B[0])),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            inf_norm(&(&v.player[0].R[0] - &data.R[0])),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn validate_slq_rejects_asymmetric_r() {
        let mut slq = SlqProblem::zero(1, 2);
        slq.R = CoefficientProfile::constant(Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]));
        assert!(matches!(
            validate_slq(&slq, &grid01(4)),
            Err(ModelError::SymmetryViolation { .. })
        ));
    }
}
