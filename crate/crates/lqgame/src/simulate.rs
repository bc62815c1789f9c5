//! Monte Carlo and deterministic verification harness: path simulation of
//! the controlled state equation, cost estimation, a pathwise check of the
//! adjoint stationarity identity behind closed-loop representations, a
//! deterministic convexity probe, unilateral-deviation equilibrium tests,
//! and a discrete-time backward-induction oracle that cross-checks the
//! continuous solvers.
//!
//! State paths follow the Euler–Maruyama scheme with left-endpoint
//! coefficients,
//!
//! ```text
//! X_{k+1} = X_k + (A X_k + B u_k + b) Δt + (C X_k + D u_k + σ) ΔW_k ,
//! ```
//!
//! and costs use the matching left-rectangle quadrature
//!
//! ```text
//! J ≈ E [ Σ_k Δt ( ⟨Q X_k, X_k⟩ + 2⟨S X_k, u_k⟩ + ⟨R u_k, u_k⟩
//!                  + 2⟨q, X_k⟩ + 2⟨ρ, u_k⟩ )  +  ⟨G X_N, X_N⟩ + 2⟨g, X_N⟩ ].
//! ```
//!
//! Expectations of quadratic functionals only need weak first-order
//! accuracy, and the closed-form test cases quantify the resulting bias.
//!
//! # Reproducibility
//!
//! Randomness is deterministic and scheduling-independent: each path owns a
//! counter-mode generator keyed by (seed, path index), normals are drawn by
//! a fixed-width Box–Muller transform consuming exactly two 64-bit words
//! per normal, and parallel reductions merge per-path results in path-index
//! order.  A run is therefore bit-identical across thread counts and
//! repetitions for the same (seed, grid, n_paths, instance).
//!
//! # Deviation tests
//!
//! Two quantifiers, two tests.  [`nash_deviation_test`] keeps the
//! non-deviating player's *rule*: a feedback opponent reacts to the
//! deviation through the state, which is the right reading for feedback
//! equilibria.  [`open_loop_deviation_test`] keeps the non-deviating
//! player's *realized control*: it is replayed pathwise from a recording of
//! the candidate run on the same noise, which is the right reading for
//! feedback representations of fixed-opponent equilibria.  The two tests
//! can genuinely disagree on the same feedback pair — a representation that
//! survives every frozen-opponent deviation may lose to a reacting
//! opponent, and that gap is a feature of the solution concepts, not noise.
//!
//! # Stationarity check
//!
//! For a representation pair (Θ, v) with value matrices Π_i and offsets
//! (η_i, ζ_i), the adjoint processes are reconstructed along closed-loop
//! paths through the decoupling ansatz
//!
//! ```text
//! Y_i = Π_i X + η_i ,      Z_i = Π_i (C + DΘ) X + Π_i (D v + σ) + ζ_i ,
//! ```
//!
//! and the per-player identity
//!
//! ```text
//! Bᵢᵀ Y_i + Dᵢᵀ Z_i + Sᵢ,ᵢ· X + Rᵢ,ᵢ· u + ρᵢ,ᵢ· = 0 ,      u = Θ X + v ,
//! ```
//!
//! is evaluated at every grid point; the report carries the maximum
//! absolute entry and the RMS over paths, times, and players.
//!
//! # Convexity probe
//!
//! For player i and a deterministic direction u_i(·), the probe integrates
//! the first/second moment ODEs of the homogeneous system driven by u_i
//! alone (X(t₀) = 0, m = E X, M = E X Xᵀ):
//!
//! ```text
//! ṁ = A m + B_i u_i ,
//! Ṁ = A M + M Aᵀ + C M Cᵀ + B_i u_i mᵀ + m u_iᵀ B_iᵀ
//!     + C m u_iᵀ D_iᵀ + D_i u_i mᵀ Cᵀ + D_i u_i u_iᵀ D_iᵀ ,
//! ```
//!
//! and accumulates ∫ [⟨Q^i M⟩ + 2⟨S^i_i m, u_i⟩ + ⟨R^i_{ii} u_i, u_i⟩] ds
//! plus tr(G^i M(T)), normalized by ∫ |u_i|² ds.  This removes Monte Carlo
//! noise from a sign-sensitive test; it probes a necessary condition only.
//!
//! # Discrete oracle
//!
//! The backward-induction oracle solves the exact discrete-time dynamic
//! game on the grid: with Ā = I + Δt·A and value matrices P_i⁺ from the
//! next time step, each player's one-step optimality condition stacks into
//!
//! ```text
//! row i of K_d = Rᵢ,ᵢ· + Δt BᵢᵀP_i⁺B + DᵢᵀP_i⁺D ,
//! row i of rhs = Sᵢ,ᵢ· + BᵢᵀP_i⁺Ā + DᵢᵀP_i⁺C ,          K_d Θ = −rhs ,
//! P_i = Δt (Q^i + ΘᵀS^i + S^iᵀΘ + ΘᵀR^iΘ)
//!       + (Ā + Δt BΘ)ᵀ P_i⁺ (Ā + Δt BΘ) + Δt (C + DΘ)ᵀ P_i⁺ (C + DΘ) .
//! ```
//!
//! It shares the minimum-norm feasibility policy of the continuous solvers
//! and converges to them at first order, which the test suites exploit as
//! an independent cross-check.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::ops::Range;

use crate::bsde::{OffsetSolution, SlqOffsets, VectorPath};
use crate::game_model::ValidatedGame;
use crate::linalg_core::{inf_norm, sym_part, Matrix};
use crate::riccati::{solve_min_norm, MatrixPath, SolveError, SolverOptions};

// ───────────────────────── noise and reports ─────────────────────────

/// Deterministic driving-noise description: `n_paths` independent paths of
/// Gaussian increments ΔW_k ~ N(0, Δt), reproducible from `seed`.
#[derive(Debug, Clone, Copy)]
pub struct NoisePlan {
    /// Seed of the counter-mode generator family.
    pub seed: u64,
    /// Number of sample paths.
    pub n_paths: usize,
}

/// One generator per path: the stream index of the counter-mode generator
/// is the path index, so paths are independent and any subset of paths can
/// be regenerated without touching the others.
fn path_rng(seed: u64, path: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Maps a 64-bit word to the open interval (0, 1) with 53-bit resolution.
#[inline]
pub(crate) fn unit_open(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw by Box–Muller, consuming exactly two 64-bit words:
/// z = √(−2 ln u₁) · cos(2π u₂).  The fixed word budget keeps the draw
/// sequence aligned across policies, which the paired deviation tests rely
/// on (common random numbers).
#[inline]
fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Monte Carlo estimate of a scalar functional.
#[derive(Debug, Clone, Copy)]
pub struct McReport {
    /// Sample mean over the paths.
    pub mean: f64,
    /// Standard error: sample standard deviation / √n_paths (0 for fewer
    /// than two paths).
    pub stderr: f64,
    /// Number of paths averaged.
    pub n_paths: usize,
    /// Seed the paths were generated from.
    pub seed: u64,
}

/// Two-pass mean and standard error, accumulated in index order so the
/// result does not depend on scheduling.
fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

// ───────────────────────── policies ─────────────────────────

/// One player's control rule on the grid.
#[derive(Debug, Clone)]
pub enum PlayerPolicy {
    /// Affine state feedback u_i(k) = Θ_i(k) X_k + v_i(k).
    Feedback {
        /// Gain path, m_i×n per grid point.
        theta: MatrixPath,
        /// Offset path, m_i×1 per grid point.
        v: VectorPath,
    },
    /// Deterministic open-loop control u_i(k), m_i×1 per grid point
    /// (applied on [s_k, s_{k+1}) by the left-endpoint scheme).
    Open {
        /// Control path, m_i×1 per grid point.
        u: VectorPath,
    },
}

/// A pair of player policies; mixtures (one feedback, one open) are what
/// unilateral-deviation tests are made of.
#[derive(Debug, Clone)]
pub struct Policy {
    /// Per-player rules, index 0 and 1.
    pub players: [PlayerPolicy; 2],
}

impl Policy {
    /// Splits a joint feedback pair (Θ : m×n, v : m×1) into per-player
    /// blocks along the game's control partition.
    pub fn closed_loop(game: &ValidatedGame, Theta: &MatrixPath, v: &VectorPath) -> Policy {
        let split = |i: usize| {
            let rows = game.rows_of(i);
            PlayerPolicy::Feedback {
                theta: Theta.map(|M| M.rows(rows.start, rows.len()).into_owned()),
                v: v.map(|M| M.rows(rows.start, rows.len()).into_owned()),
            }
        };
        Policy {
            players: [split(0), split(1)],
        }
    }

    /// Wraps two deterministic control paths.
    pub fn open_loop(u1: VectorPath, u2: VectorPath) -> Policy {
        Policy {
            players: [PlayerPolicy::Open { u: u1 }, PlayerPolicy::Open { u: u2 }],
        }
    }

    /// A copy of this policy with player `i` replaced — the unilateral
    /// deviation used by the equilibrium tests.
    pub fn replacing(&self, i: usize, p: PlayerPolicy) -> Policy {
        let mut players = self.players.clone();
        players[i] = p;
        Policy { players }
    }

    /// Panics unless every path matches the game's grid and control/state
    /// dimensions.
    fn check(&self, game: &ValidatedGame) {
        let n_steps = game.grid.n_steps;
        for (i, p) in self.players.iter().enumerate() {
            let mi = game.m_i(i);
            match p {
                PlayerPolicy::Feedback { theta, v } => {
                    assert_eq!(theta.grid().n_steps, n_steps, "gain path on a foreign grid");
                    assert_eq!(v.grid().n_steps, n_steps, "offset path on a foreign grid");
                    for M in theta.values() {
                        assert_eq!(M.shape(), (mi, game.n()), "gain block shape");
                    }
                    for M in v.values() {
                        assert_eq!(M.shape(), (mi, 1), "offset block shape");
                    }
                }
                PlayerPolicy::Open { u } => {
                    assert_eq!(u.grid().n_steps, n_steps, "control path on a foreign grid");
                    for M in u.values() {
                        assert_eq!(M.shape(), (mi, 1), "control block shape");
                    }
                }
            }
        }
    }

    /// Writes the joint control u_k = (u_1; u_2) for state `x` at grid
    /// point `k` into `u`.
    fn control_into(&self, game: &ValidatedGame, k: usize, x: &Matrix, u: &mut Matrix) {
        for (i, p) in self.players.iter().enumerate() {
            let rows = game.rows_of(i);
            let mut blk = u.rows_mut(rows.start, rows.len());
            match p {
                PlayerPolicy::Feedback { theta, v } => {
                    blk.copy_from(v.value(k));
                    blk.gemm(1.0, theta.value(k), x, 1.0);
                }
                PlayerPolicy::Open { u: path } => {
                    blk.copy_from(path.value(k));
                }
            }
        }
    }
}

// ───────────────────────── path simulation ─────────────────────────

/// dst += s · src, entrywise.
#[inline]
fn axpy_mat(dst: &mut Matrix, s: f64, src: &Matrix) {
    let d = dst.as_mut_slice();
    let r = src.as_slice();
    for i in 0..d.len() {
        d[i] += s * r[i];
    }
}

/// Runs one Euler–Maruyama path with the joint control assembled by
/// `control(k, X_k, &mut u)`, invoking `visit(k, X_k, u_k)` at every left
/// endpoint k = 0..n_steps−1, and returns the terminal state X_N.  Exactly
/// one normal is drawn per step.
fn run_path_with<C, F>(
    game: &ValidatedGame,
    x0: &Matrix,
    rng: &mut ChaCha12Rng,
    mut control: C,
    mut visit: F,
) -> Matrix
where
    C: FnMut(usize, &Matrix, &mut Matrix),
    F: FnMut(usize, &Matrix, &Matrix),
{
    let d = &game.dynamics;
    let dt = game.grid.dt();
    let sqrt_dt = dt.sqrt();
    let (n, m) = (game.n(), game.m());
    let mut x = x0.clone();
    let mut u = Matrix::zeros(m, 1);
    let mut drift = Matrix::zeros(n, 1);
    let mut diff = Matrix::zeros(n, 1);
    for k in 0..game.grid.n_steps {
        let h = 2 * k;
        control(k, &x, &mut u);
        visit(k, &x, &u);
        drift.copy_from(&d.b[h]);
        drift.gemm(1.0, &d.A[h], &x, 1.0);
        drift.gemm(1.0, &d.B[h], &u, 1.0);
        diff.copy_from(&d.sigma[h]);
        diff.gemm(1.0, &d.C[h], &x, 1.0);
        diff.gemm(1.0, &d.D[h], &u, 1.0);
        let dw = sqrt_dt * standard_normal(rng);
        axpy_mat(&mut x, dt, &drift);
        axpy_mat(&mut x, dw, &diff);
    }
    x
}

/// [`run_path_with`] under a fixed policy pair.
fn run_path<F>(
    game: &ValidatedGame,
    policy: &Policy,
    x0: &Matrix,
    rng: &mut ChaCha12Rng,
    visit: F,
) -> Matrix
where
    F: FnMut(usize, &Matrix, &Matrix),
{
    run_path_with(
        game,
        x0,
        rng,
        |k, x, u| policy.control_into(game, k, x, u),
        visit,
    )
}

/// Fully materialized sample paths.  Memory grows as
/// n_paths·n_steps·(n + m); intended for dumps and small diagnostics, not
/// for large Monte Carlo runs (those stream through [`mc_cost`]).
#[derive(Debug, Clone)]
pub struct PathBundle {
    /// Grid times s_0..s_N.
    pub times: Vec<f64>,
    /// states[p][k] is X_k of path p (n×1), k = 0..=n_steps.
    pub states: Vec<Vec<Matrix>>,
    /// controls[p][k] is u_k of path p (m×1), k = 0..n_steps−1.
    pub controls: Vec<Vec<Matrix>>,
    /// Largest absolute state entry seen across all paths — a blow-up
    /// diagnostic for destabilizing policies.
    pub max_abs_state: f64,
}

/// Simulates and stores `noise.n_paths` controlled paths.
pub fn simulate_paths(
    game: &ValidatedGame,
    policy: &Policy,
    x0: &Matrix,
    noise: &NoisePlan,
) -> PathBundle {
    policy.check(game);
    assert_eq!(x0.shape(), (game.n(), 1), "initial state shape");
    let n_steps = game.grid.n_steps;
    let mut states = Vec::with_capacity(noise.n_paths);
    let mut controls = Vec::with_capacity(noise.n_paths);
    let mut max_abs = 0.0_f64;
    for p in 0..noise.n_paths {
        let mut rng = path_rng(noise.seed, p);
        let mut xs = Vec::with_capacity(n_steps + 1);
        let mut us = Vec::with_capacity(n_steps);
        let xT = run_path(game, policy, x0, &mut rng, |_, x, u| {
            xs.push(x.clone());
            us.push(u.clone());
        });
        xs.push(xT);
        for x in &xs {
            max_abs = max_abs.max(inf_norm(x));
        }
        states.push(xs);
        controls.push(us);
    }
    PathBundle {
        times: game.grid.times(),
        states,
        controls,
        max_abs_state: max_abs,
    }
}

// ───────────────────────── cost estimation ─────────────────────────

/// One path's cost for `player`, generic-dimension implementation.
fn path_cost_general(
    game: &ValidatedGame,
    player: usize,
    policy: &Policy,
    x0: &Matrix,
    rng: &mut ChaCha12Rng,
) -> f64 {
    let tab = &game.player[player];
    let dt = game.grid.dt();
    let mut running = 0.0_f64;
    let mut qx = Matrix::zeros(game.n(), 1);
    let mut ru = Matrix::zeros(game.m(), 1);
    let xT = run_path(game, policy, x0, rng, |k, x, u| {
        let h = 2 * k;
        qx.gemm(1.0, &tab.Q[h], x, 0.0);
        let mut c = x.dot(&qx);
        ru.gemm(1.0, &tab.S[h], x, 0.0);
        c += 2.0 * u.dot(&ru);
        ru.gemm(1.0, &tab.R[h], u, 0.0);
        c += u.dot(&ru);
        c += 2.0 * tab.q[h].dot(x);
        c += 2.0 * tab.rho[h].dot(u);
        running += dt * c;
    });
    qx.gemm(1.0, &tab.G, &xT, 0.0);
    running + xT.dot(&qx) + 2.0 * tab.g.dot(&xT)
}

/// Flattened scalar-state (n = 1) tables: the Monte Carlo criteria run
/// ~1e8 steps on one-dimensional instances, where generic dynamic-matrix
/// arithmetic dominates the runtime; this strips it to plain `f64` work.
/// Control entries of both players are laid out contiguously per step
/// (offset k·m + j), with open-loop rows stored as zero gain plus offset,
/// so every control row is u_j = θ_j x + v_j uniformly.
struct ScalarSim {
    n_steps: usize,
    dt: f64,
    sqrt_dt: f64,
    m: usize,
    a: Vec<f64>,
    c: Vec<f64>,
    b0: Vec<f64>,
    sg: Vec<f64>,
    bu: Vec<f64>,
    du: Vec<f64>,
    qq: Vec<f64>,
    ql: Vec<f64>,
    s: Vec<f64>,
    rho: Vec<f64>,
    r: Vec<f64>,
    big_g: f64,
    lil_g: f64,
    th: Vec<f64>,
    vv: Vec<f64>,
}

impl ScalarSim {
    fn build(game: &ValidatedGame, player: usize, policy: &Policy) -> ScalarSim {
        assert_eq!(game.n(), 1);
        let n_steps = game.grid.n_steps;
        let m = game.m();
        let d = &game.dynamics;
        let tab = &game.player[player];
        let mut sim = ScalarSim {
            n_steps,
            dt: game.grid.dt(),
            sqrt_dt: game.grid.dt().sqrt(),
            m,
            a: Vec::with_capacity(n_steps),
            c: Vec::with_capacity(n_steps),
            b0: Vec::with_capacity(n_steps),
            sg: Vec::with_capacity(n_steps),
            bu: Vec::with_capacity(n_steps * m),
            du: Vec::with_capacity(n_steps * m),
            qq: Vec::with_capacity(n_steps),
            ql: Vec::with_capacity(n_steps),
            s: Vec::with_capacity(n_steps * m),
            rho: Vec::with_capacity(n_steps * m),
            r: Vec::with_capacity(n_steps * m * m),
            big_g: tab.G[(0, 0)],
            lil_g: tab.g[(0, 0)],
            th: Vec::with_capacity(n_steps * m),
            vv: Vec::with_capacity(n_steps * m),
        };
        for k in 0..n_steps {
            let h = 2 * k;
            sim.a.push(d.A[h][(0, 0)]);
            sim.c.push(d.C[h][(0, 0)]);
            sim.b0.push(d.b[h][(0, 0)]);
            sim.sg.push(d.sigma[h][(0, 0)]);
            for j in 0..m {
                sim.bu.push(d.B[h][(0, j)]);
                sim.du.push(d.D[h][(0, j)]);
            }
            sim.qq.push(tab.Q[h][(0, 0)]);
            sim.ql.push(tab.q[h][(0, 0)]);
            for j in 0..m {
                sim.s.push(tab.S[h][(j, 0)]);
                sim.rho.push(tab.rho[h][(j, 0)]);
                for l in 0..m {
                    sim.r.push(tab.R[h][(j, l)]);
                }
            }
            for (i, p) in policy.players.iter().enumerate() {
                let rows = game.rows_of(i);
                for j in 0..rows.len() {
                    match p {
                        PlayerPolicy::Feedback { theta, v } => {
                            sim.th.push(theta.value(k)[(j, 0)]);
                            sim.vv.push(v.value(k)[(j, 0)]);
                        }
                        PlayerPolicy::Open { u } => {
                            sim.th.push(0.0);
                            sim.vv.push(u.value(k)[(j, 0)]);
                        }
                    }
                }
            }
        }
        sim
    }

    /// Same scheme, quadrature, and draw sequence as the generic path; the
    /// joint control is assembled by `fill(k, x, u)` each step.
    fn drive<F>(&self, x0: f64, u: &mut [f64], rng: &mut ChaCha12Rng, mut fill: F) -> f64
    where
        F: FnMut(usize, f64, &mut [f64]),
    {
        let m = self.m;
        let dt = self.dt;
        let mut x = x0;
        let mut running = 0.0_f64;
        for k in 0..self.n_steps {
            let o = k * m;
            fill(k, x, u);
            let mut c = x * (self.qq[k] * x);
            let mut acc = 0.0;
            for j in 0..m {
                acc += u[j] * (self.s[o + j] * x);
            }
            c += 2.0 * acc;
            acc = 0.0;
            for j in 0..m {
                let mut rj = 0.0;
                for l in 0..m {
                    rj += self.r[(o + j) * m + l] * u[l];
                }
                acc += u[j] * rj;
            }
            c += acc;
            c += 2.0 * self.ql[k] * x;
            acc = 0.0;
            for j in 0..m {
                acc += self.rho[o + j] * u[j];
            }
            c += 2.0 * acc;
            running += dt * c;

            let mut drift = self.b0[k] + self.a[k] * x;
            acc = 0.0;
            for j in 0..m {
                acc += self.bu[o + j] * u[j];
            }
            drift += acc;
            let mut diff = self.sg[k] + self.c[k] * x;
            acc = 0.0;
            for j in 0..m {
                acc += self.du[o + j] * u[j];
            }
            diff += acc;
            let dw = self.sqrt_dt * standard_normal(rng);
            x += dt * drift;
            x += dw * diff;
        }
        running + self.big_g * x * x + 2.0 * self.lil_g * x
    }

    /// Cost under this view's own control tables.
    fn path_cost(&self, x0: f64, u: &mut [f64], rng: &mut ChaCha12Rng) -> f64 {
        self.drive(x0, u, rng, |k, x, u| {
            let o = k * self.m;
            for j in 0..self.m {
                u[j] = self.th[o + j] * x + self.vv[o + j];
            }
        })
    }

    /// [`Self::path_cost`] that also writes the joint control into
    /// `record[k·m + j]` — the replay source for frozen-opponent runs.
    fn path_cost_recording(
        &self,
        x0: f64,
        u: &mut [f64],
        rng: &mut ChaCha12Rng,
        record: &mut [f64],
    ) -> f64 {
        self.drive(x0, u, rng, |k, x, u| {
            let o = k * self.m;
            for j in 0..self.m {
                u[j] = self.th[o + j] * x + self.vv[o + j];
                record[o + j] = u[j];
            }
        })
    }

    /// Cost when the control rows in `rows` follow the deviation tables
    /// (θ·x + v along the deviated state) and every other row replays
    /// `record`; `self` must be the deviating player's cost view.
    #[allow(clippy::too_many_arguments)]
    fn path_cost_frozen(
        &self,
        rows: &Range<usize>,
        dth: &[f64],
        dvv: &[f64],
        record: &[f64],
        x0: f64,
        u: &mut [f64],
        rng: &mut ChaCha12Rng,
    ) -> f64 {
        let mi = rows.len();
        self.drive(x0, u, rng, |k, x, u| {
            let o = k * self.m;
            u[..self.m].copy_from_slice(&record[o..o + self.m]);
            let od = k * mi;
            for (j, row) in rows.clone().enumerate() {
                u[row] = dth[od + j] * x + dvv[od + j];
            }
        })
    }
}

/// Per-step control-row tables (θ, v) of one player's deviation on a
/// scalar state, laid out as `k·m_i + j`: open-loop rows become zero gain
/// plus offset, so every row is u_j = θ_j x + v_j uniformly.
fn scalar_dev_tables(dev: &PlayerPolicy, n_steps: usize, mi: usize) -> (Vec<f64>, Vec<f64>) {
    let mut th = Vec::with_capacity(n_steps * mi);
    let mut vv = Vec::with_capacity(n_steps * mi);
    for k in 0..n_steps {
        for j in 0..mi {
            match dev {
                PlayerPolicy::Feedback { theta, v } => {
                    th.push(theta.value(k)[(j, 0)]);
                    vv.push(v.value(k)[(j, 0)]);
                }
                PlayerPolicy::Open { u } => {
                    th.push(0.0);
                    vv.push(u.value(k)[(j, 0)]);
                }
            }
        }
    }
    (th, vv)
}

/// Per-path costs in path order (index = path = generator stream).
fn cost_samples(
    game: &ValidatedGame,
    player: usize,
    policy: &Policy,
    x0: &Matrix,
    noise: &NoisePlan,
) -> Vec<f64> {
    if game.n() == 1 {
        let sim = ScalarSim::build(game, player, policy);
        let x0s = x0[(0, 0)];
        (0..noise.n_paths)
            .into_par_iter()
            .map(|p| {
                let mut rng = path_rng(noise.seed, p);
                let mut u = vec![0.0_f64; sim.m];
                sim.path_cost(x0s, &mut u, &mut rng)
            })
            .collect()
    } else {
        (0..noise.n_paths)
            .into_par_iter()
            .map(|p| {
                let mut rng = path_rng(noise.seed, p);
                path_cost_general(game, player, policy, x0, &mut rng)
            })
            .collect()
    }
}

/// Monte Carlo estimate of player `player`'s cost under `policy` from
/// initial state `x0` at the grid start.
pub fn mc_cost(
    game: &ValidatedGame,
    player: usize,
    policy: &Policy,
    x0: &Matrix,
    noise: &NoisePlan,
) -> McReport {
    assert!(player < 2, "player index is 0 or 1");
    policy.check(game);
    assert_eq!(x0.shape(), (game.n(), 1), "initial state shape");
    let costs = cost_samples(game, player, policy, x0, noise);
    let (mean, stderr) = mean_stderr(&costs);
    McReport {
        mean,
        stderr,
        n_paths: noise.n_paths,
        seed: noise.seed,
    }
}

// ───────────────────────── value evaluation ─────────────────────────

/// Value of a one-controller solve at the grid start:
///
/// ```text
/// V(t₀, x₀) = ⟨P(t₀) x₀, x₀⟩ + 2⟨η(t₀), x₀⟩
///             + ∫ [⟨Pσ, σ⟩ + 2⟨η, b⟩ − ⟨M†ψ, ψ⟩] ds ,
/// ```
///
/// with the tail integral taken from the offset solve, which accumulates
/// it alongside η with the same integrator.
pub fn analytic_value(P: &MatrixPath, offsets: &SlqOffsets, x0: &Matrix) -> f64 {
    let quad = (x0.transpose() * P.initial() * x0)[(0, 0)];
    quad + 2.0 * offsets.eta.initial().dot(x0) + offsets.value_integral[0]
}

// ───────────────────────── stationarity check ─────────────────────────

/// Maximum and root-mean-square of a residual field sampled over paths,
/// grid points, and players.
#[derive(Debug, Clone, Copy)]
pub struct ResidualStats {
    /// Largest absolute entry seen.
    pub max_abs: f64,
    /// RMS over all sampled entries.
    pub rms: f64,
}

/// Evaluates the per-player stationarity identity along simulated
/// closed-loop paths of the pair (Θ, v), reconstructing the adjoint pair
/// through Y_i = Π_i X + η_i and Z_i = Π_i (C + DΘ) X + Π_i (Dv + σ) + ζ_i.
/// The identity is affine in X, so the residual at a grid point is the
/// algebraic defect of the representation equations scaled by the path.
#[allow(clippy::too_many_arguments)]
pub fn stationarity_residual(
    game: &ValidatedGame,
    Pi1: &MatrixPath,
    Pi2: &MatrixPath,
    offsets: &OffsetSolution,
    Theta: &MatrixPath,
    v: &VectorPath,
    x0: &Matrix,
    noise: &NoisePlan,
) -> ResidualStats {
    assert_eq!(x0.shape(), (game.n(), 1), "initial state shape");
    let n_steps = game.grid.n_steps;
    let d = &game.dynamics;
    let m = game.m();

    // lhs(k, X) = E_k X + f_k, assembled once per grid point.
    let mut lin = Vec::with_capacity(n_steps + 1);
    let mut aff = Vec::with_capacity(n_steps + 1);
    for k in 0..=n_steps {
        let h = 2 * k;
        let Thk = Theta.value(k);
        let vk = v.value(k);
        let closed_c = &d.C[h] + &d.D[h] * Thk;
        let dv_sigma = &d.D[h] * vk + &d.sigma[h];
        let mut E = Matrix::zeros(m, game.n());
        let mut f = Matrix::zeros(m, 1);
        for i in 0..2 {
            let rows = game.rows_of(i);
            let Pik = if i == 0 { Pi1.value(k) } else { Pi2.value(k) };
            let (eta, zeta) = if i == 0 {
                (offsets.eta1.value(k), offsets.zeta1.value(k))
            } else {
                (offsets.eta2.value(k), offsets.zeta2.value(k))
            };
            let (Bi, Di) = if i == 0 {
                (&d.B1[h], &d.D1[h])
            } else {
                (&d.B2[h], &d.D2[h])
            };
            let p = &game.player[i];
            let S_rows = p.S[h].rows(rows.start, rows.len()).into_owned();
            let R_rows = p.R[h].rows(rows.start, rows.len()).into_owned();
            let rho_rows = p.rho[h].rows(rows.start, rows.len()).into_owned();
            let E_blk =
                Bi.transpose() * Pik + Di.transpose() * (Pik * &closed_c) + S_rows + &R_rows * Thk;
            let f_blk = Bi.transpose() * eta
                + Di.transpose() * (Pik * &dv_sigma + zeta)
                + R_rows * vk
                + rho_rows;
            E.rows_mut(rows.start, rows.len()).copy_from(&E_blk);
            f.rows_mut(rows.start, rows.len()).copy_from(&f_blk);
        }
        lin.push(E);
        aff.push(f);
    }

    let policy = Policy::closed_loop(game, Theta, v);
    policy.check(game);
    let per_path: Vec<(f64, f64)> = (0..noise.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(noise.seed, p);
            let mut max_abs = 0.0_f64;
            let mut sum_sq = 0.0_f64;
            let mut r = Matrix::zeros(m, 1);
            let mut tally = |k: usize, x: &Matrix, r: &mut Matrix| {
                r.copy_from(&aff[k]);
                r.gemm(1.0, &lin[k], x, 1.0);
                for &val in r.iter() {
                    max_abs = max_abs.max(val.abs());
                    sum_sq += val * val;
                }
            };
            let xT = run_path(game, &policy, x0, &mut rng, |k, x, _| {
                tally(k, x, &mut r);
            });
            tally(n_steps, &xT, &mut r);
            (max_abs, sum_sq)
        })
        .collect();

    let mut max_abs = 0.0_f64;
    let mut sum_sq = 0.0_f64;
    for (mx, ss) in per_path {
        max_abs = max_abs.max(mx);
        sum_sq += ss;
    }
    let count = noise.n_paths * (n_steps + 1) * m;
    let rms = if count == 0 {
        0.0
    } else {
        (sum_sq / count as f64).sqrt()
    };
    ResidualStats { max_abs, rms }
}

// ───────────────────────── convexity probe ─────────────────────────

/// Normalized quadratic-form values of the probe, one per direction.
#[derive(Debug, Clone)]
pub struct ConvexityReport {
    /// Value / ∫|u_i|² ds per direction, in input order (0 for an
    /// identically-zero direction).
    pub per_direction: Vec<f64>,
    /// Minimum over the directions.
    pub min_normalized: f64,
}

/// Entrywise base + c·dir over a small state vector of matrices.
fn lin_state(base: &[Matrix], c: f64, dir: &[Matrix]) -> Vec<Matrix> {
    base.iter()
        .zip(dir)
        .map(|(b, d)| b + d * c)
        .collect()
}

/// Deterministic convexity probe for `player`: integrates the moment ODEs
/// of the single-player homogeneous system along each direction and
/// returns the normalized quadratic-form values.  Negative values certify
/// failure of the necessary convexity condition; nonnegative values over a
/// finite direction family prove nothing beyond the family.
pub fn convexity_probe(
    game: &ValidatedGame,
    player: usize,
    directions: &[VectorPath],
) -> ConvexityReport {
    assert!(player < 2, "player index is 0 or 1");
    assert!(!directions.is_empty(), "at least one probe direction");
    let n = game.n();
    let mi = game.m_i(player);
    let rows = game.rows_of(player);
    let d = &game.dynamics;
    let tab = &game.player[player];
    let grid = game.grid;
    let dt = grid.dt();

    let mut per_direction = Vec::with_capacity(directions.len());
    for dir in directions {
        assert_eq!(dir.grid().n_steps, grid.n_steps, "direction on a foreign grid");
        for M in dir.values() {
            assert_eq!(M.shape(), (mi, 1), "direction block shape");
        }
        // State: [m, M, cost, ∫|u|²].
        let deriv = |h: usize, y: &[Matrix]| -> Vec<Matrix> {
            let u = dir.at_half(h);
            let (mv, Mv) = (&y[0], &y[1]);
            let (Bi, Di) = if player == 0 {
                (&d.B1[h], &d.D1[h])
            } else {
                (&d.B2[h], &d.D2[h])
            };
            let bu = Bi * &u;
            let du_ = Di * &u;
            let cm = &d.C[h] * mv;
            let dm = &d.A[h] * mv + &bu;
            let dM = &d.A[h] * Mv
                + Mv * d.A[h].transpose()
                + &d.C[h] * Mv * d.C[h].transpose()
                + &bu * mv.transpose()
                + mv * bu.transpose()
                + &cm * du_.transpose()
                + &du_ * cm.transpose()
                + &du_ * du_.transpose();
            let s_m = tab.S[h].rows(rows.start, rows.len()) * mv;
            let r_u = tab.R[h].view((rows.start, rows.start), (mi, mi)) * &u;
            let dcost = tab.Q[h].dot(Mv) + 2.0 * u.dot(&s_m) + u.dot(&r_u);
            let dnorm = u.dot(&u);
            vec![
                dm,
                dM,
                Matrix::from_row_slice(1, 1, &[dcost]),
                Matrix::from_row_slice(1, 1, &[dnorm]),
            ]
        };

        let mut y = vec![
            Matrix::zeros(n, 1),
            Matrix::zeros(n, n),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
        ];
        for k in 0..grid.n_steps {
            let k1 = deriv(2 * k, &y);
            let k2 = deriv(2 * k + 1, &lin_state(&y, 0.5 * dt, &k1));
            let k3 = deriv(2 * k + 1, &lin_state(&y, 0.5 * dt, &k2));
            let k4 = deriv(2 * (k + 1), &lin_state(&y, dt, &k3));
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += (&k1[i] + &k2[i] * 2.0 + &k3[i] * 2.0 + &k4[i]) * (dt / 6.0);
            }
        }
        let value = y[2][(0, 0)] + tab.G.dot(&y[1]);
        let norm = y[3][(0, 0)];
        per_direction.push(if norm > 0.0 { value / norm } else { 0.0 });
    }
    let min_normalized = per_direction.iter().cloned().fold(f64::INFINITY, f64::min);
    ConvexityReport {
        per_direction,
        min_normalized,
    }
}

// ───────────────────────── deviation tests ─────────────────────────

/// Outcome of one unilateral deviation: paired common-random-number
/// estimate of J^i(deviation) − J^i(candidate).
#[derive(Debug, Clone)]
pub struct DeviationOutcome {
    /// Deviating player (0 or 1).
    pub player: usize,
    /// Index into that player's deviation list.
    pub index: usize,
    /// Mean cost of the candidate pair for this player.
    pub eq_mean: f64,
    /// Mean cost under the deviation.
    pub dev_mean: f64,
    /// Paired mean of (deviation − candidate) per path.
    pub diff_mean: f64,
    /// Standard error of the paired differences.
    pub diff_stderr: f64,
    /// diff_mean ≥ −3·diff_stderr.
    pub pass: bool,
}

/// Unilateral-deviation test report.
#[derive(Debug, Clone)]
pub struct NashReport {
    /// One outcome per (player, deviation).
    pub outcomes: Vec<DeviationOutcome>,
    /// True when every outcome passed.
    pub all_pass: bool,
}

/// Tests a candidate equilibrium pair against finite families of
/// unilateral deviations with common random numbers: for each deviation of
/// player i, the other player keeps the candidate rule, both runs see the
/// same noise, and the paired difference must not be significantly
/// negative (diff ≥ −3·stderr).  The candidate tested against a copy of
/// itself differs by exactly zero on every path.  A finite family can
/// refute but never certify — the quantifier over all admissible controls
/// is not testable.
pub fn nash_deviation_test(
    game: &ValidatedGame,
    candidate: &Policy,
    deviations: [&[PlayerPolicy]; 2],
    x0: &Matrix,
    noise: &NoisePlan,
) -> NashReport {
    candidate.check(game);
    let base: [Vec<f64>; 2] = [
        cost_samples(game, 0, candidate, x0, noise),
        cost_samples(game, 1, candidate, x0, noise),
    ];
    let mut outcomes = Vec::new();
    for i in 0..2 {
        let (eq_mean, _) = mean_stderr(&base[i]);
        for (index, dev) in deviations[i].iter().enumerate() {
            let trial = candidate.replacing(i, dev.clone());
            trial.check(game);
            let dev_costs = cost_samples(game, i, &trial, x0, noise);
            let diffs: Vec<f64> = dev_costs
                .iter()
                .zip(&base[i])
                .map(|(d, e)| d - e)
                .collect();
            let (dev_mean, _) = mean_stderr(&dev_costs);
            let (diff_mean, diff_stderr) = mean_stderr(&diffs);
            outcomes.push(DeviationOutcome {
                player: i,
                index,
                eq_mean,
                dev_mean,
                diff_mean,
                diff_stderr,
                pass: diff_mean >= -3.0 * diff_stderr,
            });
        }
    }
    let all_pass = outcomes.iter().all(|o| o.pass);
    NashReport { outcomes, all_pass }
}

// ───────────────────── frozen-opponent deviations ─────────────────────

/// Running-cost integrand ⟨Q X, X⟩ + 2⟨S X, u⟩ + ⟨R u, u⟩ + 2⟨q, X⟩ +
/// 2⟨ρ, u⟩ of `player` at half-grid index `h`.
fn running_cost_at(game: &ValidatedGame, player: usize, h: usize, x: &Matrix, u: &Matrix) -> f64 {
    let tab = &game.player[player];
    let mut c = x.dot(&(&tab.Q[h] * x));
    c += 2.0 * u.dot(&(&tab.S[h] * x));
    c += u.dot(&(&tab.R[h] * u));
    c += 2.0 * tab.q[h].dot(x);
    c += 2.0 * tab.rho[h].dot(u);
    c
}

/// Terminal cost ⟨G X_T, X_T⟩ + 2⟨g, X_T⟩ of `player`.
fn terminal_cost(game: &ValidatedGame, player: usize, xT: &Matrix) -> f64 {
    let tab = &game.player[player];
    xT.dot(&(&tab.G * xT)) + 2.0 * tab.g.dot(xT)
}

/// One candidate run on `rng`'s stream, recording the joint control at
/// every step; returns both players' realized costs.
fn record_run(
    game: &ValidatedGame,
    candidate: &Policy,
    x0: &Matrix,
    rng: &mut ChaCha12Rng,
    record: &mut Vec<Matrix>,
) -> [f64; 2] {
    record.clear();
    let dt = game.grid.dt();
    let mut running = [0.0_f64; 2];
    let xT = run_path(game, candidate, x0, rng, |k, x, u| {
        record.push(u.clone());
        running[0] += dt * running_cost_at(game, 0, 2 * k, x, u);
        running[1] += dt * running_cost_at(game, 1, 2 * k, x, u);
    });
    [
        running[0] + terminal_cost(game, 0, &xT),
        running[1] + terminal_cost(game, 1, &xT),
    ]
}

/// `player`'s cost when they deviate to `dev` (feedback rules see the
/// deviated state) while the other player's control rows replay the
/// recording `frozen` step for step on the same increments.
fn frozen_dev_cost(
    game: &ValidatedGame,
    player: usize,
    dev: &PlayerPolicy,
    frozen: &[Matrix],
    x0: &Matrix,
    rng: &mut ChaCha12Rng,
) -> f64 {
    let rows = game.rows_of(player);
    let dt = game.grid.dt();
    let mut running = 0.0_f64;
    let xT = run_path_with(
        game,
        x0,
        rng,
        |k, x, u| {
            u.copy_from(&frozen[k]);
            let mut blk = u.rows_mut(rows.start, rows.len());
            match dev {
                PlayerPolicy::Feedback { theta, v } => {
                    blk.copy_from(v.value(k));
                    blk.gemm(1.0, theta.value(k), x, 1.0);
                }
                PlayerPolicy::Open { u: path } => blk.copy_from(path.value(k)),
            }
        },
        |k, x, u| {
            running += dt * running_cost_at(game, player, 2 * k, x, u);
        },
    );
    running + terminal_cost(game, player, &xT)
}

/// Tests a candidate pair as a fixed-opponent (open-loop) equilibrium: for
/// each unilateral deviation of player i, the other player's control is
/// frozen pathwise at the values it realized under the candidate pair on
/// the same noise, instead of reacting through the state.  Feedback
/// deviations are evaluated along the deviated state, so the family still
/// ranges over adapted controls.  Common random numbers pair every
/// comparison, and a deviation equal to the candidate's own rule reproduces
/// the recorded run exactly, giving a paired difference of exactly zero.
/// As with [`nash_deviation_test`], a finite family can refute but never
/// certify.
pub fn open_loop_deviation_test(
    game: &ValidatedGame,
    candidate: &Policy,
    deviations: [&[PlayerPolicy]; 2],
    x0: &Matrix,
    noise: &NoisePlan,
) -> NashReport {
    candidate.check(game);
    for i in 0..2 {
        for dev in deviations[i] {
            candidate.replacing(i, dev.clone()).check(game);
        }
    }
    assert_eq!(x0.shape(), (game.n(), 1), "initial state shape");
    let n_steps = game.grid.n_steps;
    let counts = [deviations[0].len(), deviations[1].len()];

    // rows[p] = (both equilibrium costs, deviation costs in menu order:
    // player 1's menu first, then player 2's).
    let rows: Vec<([f64; 2], Vec<f64>)> = if game.n() == 1 {
        let sims = [
            ScalarSim::build(game, 0, candidate),
            ScalarSim::build(game, 1, candidate),
        ];
        let m = game.m();
        let x0s = x0[(0, 0)];
        let tables: [Vec<(Vec<f64>, Vec<f64>)>; 2] = [0, 1].map(|i| {
            deviations[i]
                .iter()
                .map(|dev| scalar_dev_tables(dev, n_steps, game.m_i(i)))
                .collect()
        });
        let row_ranges = [game.rows_of(0), game.rows_of(1)];
        (0..noise.n_paths)
            .into_par_iter()
            .map(|p| {
                let mut u = vec![0.0_f64; m];
                let mut record = vec![0.0_f64; m * n_steps];
                let mut rng = path_rng(noise.seed, p);
                let e0 = sims[0].path_cost_recording(x0s, &mut u, &mut rng, &mut record);
                let mut rng = path_rng(noise.seed, p);
                let e1 = sims[1].path_cost(x0s, &mut u, &mut rng);
                let mut devs = Vec::with_capacity(counts[0] + counts[1]);
                for i in 0..2 {
                    for (dth, dvv) in &tables[i] {
                        let mut rng = path_rng(noise.seed, p);
                        devs.push(sims[i].path_cost_frozen(
                            &row_ranges[i],
                            dth,
                            dvv,
                            &record,
                            x0s,
                            &mut u,
                            &mut rng,
                        ));
                    }
                }
                ([e0, e1], devs)
            })
            .collect()
    } else {
        (0..noise.n_paths)
            .into_par_iter()
            .map(|p| {
                let mut record = Vec::with_capacity(n_steps);
                let mut rng = path_rng(noise.seed, p);
                let eq = record_run(game, candidate, x0, &mut rng, &mut record);
                let mut devs = Vec::with_capacity(counts[0] + counts[1]);
                for i in 0..2 {
                    for dev in deviations[i] {
                        let mut rng = path_rng(noise.seed, p);
                        devs.push(frozen_dev_cost(game, i, dev, &record, x0, &mut rng));
                    }
                }
                (eq, devs)
            })
            .collect()
    };

    let mut outcomes = Vec::new();
    let mut flat = 0usize;
    for i in 0..2 {
        let eq_costs: Vec<f64> = rows.iter().map(|(e, _)| e[i]).collect();
        let (eq_mean, _) = mean_stderr(&eq_costs);
        for index in 0..counts[i] {
            let dev_costs: Vec<f64> = rows.iter().map(|(_, d)| d[flat]).collect();
            let diffs: Vec<f64> = dev_costs
                .iter()
                .zip(&eq_costs)
                .map(|(d, e)| d - e)
                .collect();
            let (dev_mean, _) = mean_stderr(&dev_costs);
            let (diff_mean, diff_stderr) = mean_stderr(&diffs);
            outcomes.push(DeviationOutcome {
                player: i,
                index,
                eq_mean,
                dev_mean,
                diff_mean,
                diff_stderr,
                pass: diff_mean >= -3.0 * diff_stderr,
            });
            flat += 1;
        }
    }
    let all_pass = outcomes.iter().all(|o| o.pass);
    NashReport { outcomes, all_pass }
}

// ───────────────────────── discrete oracle ─────────────────────────

/// Value matrices and feedback of the exact discrete-time game.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    /// Player 1 value matrices at the grid points.
    pub P1: MatrixPath,
    /// Player 2 value matrices.
    pub P2: MatrixPath,
    /// Stacked discrete feedback; the entry at the final grid point
    /// replicates the last computed one (feedback acts on steps, not
    /// points).
    pub Theta: MatrixPath,
}

/// Solves the discrete-time dynamic game on the grid by backward
/// induction (see the module notes for the recursion).  Entirely
/// independent of the differential-equation solvers — its agreement with
/// them at first order in Δt is what the cross-check tests assert.
pub fn discrete_oracle(
    game: &ValidatedGame,
    opts: &SolverOptions,
) -> Result<DiscreteSolution, SolveError> {
    let grid = game.grid;
    let n_steps = grid.n_steps;
    let dt = grid.dt();
    let (n, m) = (game.n(), game.m());
    let d = &game.dynamics;

    let mut P = [sym_part(&game.player[0].G), sym_part(&game.player[1].G)];
    let mut p1 = vec![Matrix::zeros(n, n); n_steps + 1];
    let mut p2 = vec![Matrix::zeros(n, n); n_steps + 1];
    let mut th = vec![Matrix::zeros(m, n); n_steps + 1];
    p1[n_steps] = P[0].clone();
    p2[n_steps] = P[1].clone();

    for k in (0..n_steps).rev() {
        let h = 2 * k;
        let s = grid.time(k);
        let a_bar = Matrix::identity(n, n) + &d.A[h] * dt;

        let mut K = Matrix::zeros(m, m);
        let mut rhs = Matrix::zeros(m, n);
        for i in 0..2 {
            let rows = game.rows_of(i);
            let Pi = &P[i];
            let (Bi, Di) = if i == 0 {
                (&d.B1[h], &d.D1[h])
            } else {
                (&d.B2[h], &d.D2[h])
            };
            let p = &game.player[i];
            let K_blk = p.R[h].rows(rows.start, rows.len()).into_owned()
                + Bi.transpose() * Pi * &d.B[h] * dt
                + Di.transpose() * Pi * &d.D[h];
            let rhs_blk = p.S[h].rows(rows.start, rows.len()).into_owned()
                + Bi.transpose() * Pi * &a_bar
                + Di.transpose() * Pi * &d.C[h];
            K.rows_mut(rows.start, rows.len()).copy_from(&K_blk);
            rhs.rows_mut(rows.start, rows.len()).copy_from(&rhs_blk);
        }
        let neg_rhs = -&rhs;
        let (Theta, _) = solve_min_norm(&K, &neg_rhs, opts, s)?;

        let a_cl = &a_bar + &d.B[h] * &Theta * dt;
        let c_cl = &d.C[h] + &d.D[h] * &Theta;
        for i in 0..2 {
            let p = &game.player[i];
            let quad = &p.Q[h]
                + Theta.transpose() * &p.S[h]
                + p.S[h].transpose() * &Theta
                + Theta.transpose() * &p.R[h] * &Theta;
            let next = sym_part(
                &(quad * dt + a_cl.transpose() * &P[i] * &a_cl
                    + c_cl.transpose() * &P[i] * &c_cl * dt),
            );
            if !next.iter().all(|x| x.is_finite()) || inf_norm(&next) > opts.blowup_bound {
                return Err(SolveError::BlowUp {
                    time: s,
                    norm: inf_norm(&next),
                });
            }
            P[i] = next;
        }
        p1[k] = P[0].clone();
        p2[k] = P[1].clone();
        th[k] = Theta;
    }
    th[n_steps] = th[n_steps - 1].clone();

    Ok(DiscreteSolution {
        P1: MatrixPath::new(grid, p1),
        P2: MatrixPath::new(grid, p2),
        Theta: MatrixPath::new(grid, th),
    })
}

// ───────────────────────── tests ─────────────────────────
