//! Built-in problem instances: three hand-analyzed scalar games with known
//! closed-form behavior, reproducible random instance generators for the
//! structure-coincidence checks, and stock direction/deviation families
//! for the probing harnesses.
//!
//! The three named games live on the unit horizon and are chosen so that
//! each exercises a different branch of the theory:
//!
//! * [`opposed_noise_game`] — feedback coupling identically inconsistent
//!   (no closed-loop equilibrium), yet a whole family of open-loop
//!   equilibria exists and is verifiable pathwise.
//! * [`drift_vs_noise_game`] — clean closed-loop equilibrium with a
//!   rational closed form, while the noise player's cost functional fails
//!   the convexity condition that open-loop equilibria require.
//! * [`shared_drift_game`] — both the equilibrium and the open-loop
//!   representation exist and produce genuinely different feedback fields,
//!   exhibiting the closed-loop/open-loop gap quantitatively.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::game_model::{CoefficientProfile, GameSpec, SlqProblem, TimeGrid};
use crate::linalg_core::Matrix;
use crate::riccati::MatrixPath;
use crate::simulate::{unit_open, PlayerPolicy, Policy};

fn scalar(x: f64) -> CoefficientProfile {
    CoefficientProfile::scalar(x)
}

fn one(x: f64) -> Matrix {
    Matrix::from_element(1, 1, x)
}

// ───────────────────────── named games ─────────────────────────

/// dX = (u₁ + u₂) ds + (u₁ − u₂) dW,  J¹ = J² = E X(1)².
///
/// Both players want the same thing, but their joint first-order system
/// K(P)Θ = −L(P) is the rank-one matrix [[P, −P], [−P, P]] against the
/// right-hand side −(P; P), which is inconsistent whenever P ≠ 0: no
/// closed-loop equilibrium exists on any horizon.  Open-loop equilibria
/// exist in abundance — see [`steering_burst_policy`] for a one-parameter
/// family that drives the state to zero at cost exactly zero.
pub fn opposed_noise_game() -> GameSpec {
    let mut g = GameSpec::zero(1, 1, 1);
    g.B1 = scalar(1.0);
    g.B2 = scalar(1.0);
    g.D1 = scalar(1.0);
    g.D2 = scalar(-1.0);
    g.players[0].G = one(1.0);
    g.players[1].G = one(1.0);
    g
}

/// dX = u₁ ds + u₂ dW,  J¹ = E{X(1)² + ∫u₁²},  J² = E{−X(1)² + ∫(u₂² − X²)}.
///
/// The closed-loop equilibrium is explicit: P₁(s) = 1/(2−s),
/// P₂(s) = −((2−s)³ + 2)/(3(2−s)²), Θ*(s) = (−P₁(s), 0), v* ≡ 0.  Player
/// 2's functional is strictly concave in the noise direction (the
/// convexity probe certifies a normalized value of −1/2 on the constant
/// unit direction), which rules out an open-loop equilibrium even though
/// the representation equations themselves stay solvable.
pub fn drift_vs_noise_game() -> GameSpec {
    let mut g = GameSpec::zero(1, 1, 1);
    g.B1 = scalar(1.0);
    g.D2 = scalar(1.0);
    g.players[0].R11 = scalar(1.0);
    g.players[0].G = one(1.0);
    g.players[1].Q = scalar(-1.0);
    g.players[1].R22 = scalar(1.0);
    g.players[1].G = one(-1.0);
    g
}

/// dX = (u₁ + u₂) ds + X dW,  Jⁱ = E{X(1)² + ∫uᵢ²}.
///
/// Symmetric in the players; both solution concepts exist with scalar
/// exponential closed forms that differ:
///
/// ```text
/// equilibrium      P_i(s) = e^{1−s} / (3 e^{1−s} − 2) ,   P_i(0) ≈ 0.441649 ,
/// representation   Π_i(s) = e^{1−s} / (2 e^{1−s} − 1) ,   Π_i(0) ≈ 0.612700 .
/// ```
pub fn shared_drift_game() -> GameSpec {
    let mut g = GameSpec::zero(1, 1, 1);
    g.C = scalar(1.0);
    g.B1 = scalar(1.0);
    g.B2 = scalar(1.0);
    g.players[0].R11 = scalar(1.0);
    g.players[0].G = one(1.0);
    g.players[1].R22 = scalar(1.0);
    g.players[1].G = one(1.0);
    g
}

/// One member of the open-loop equilibrium family of
/// [`opposed_noise_game`]: both players apply the constant −β x₀ / 2 on
/// [t₀, t₀ + 1/β) and zero afterwards.  The drifts add up to steer x₀ to
/// zero by t₀ + 1/β while the noise loadings cancel exactly, so the cost
/// is zero on every path — and J ≥ 0 always, making the pair an
/// equilibrium that no unilateral deviation can beat.
///
/// Panics unless 1/β is a whole number of steps of `grid` (within 1e−9
/// relative) and the burst window fits inside the horizon.
pub fn steering_burst_policy(grid: TimeGrid, beta: f64, x0: f64) -> Policy {
    assert!(beta > 0.0, "burst rate must be positive");
    let steps = 1.0 / (beta * grid.dt());
    let window = steps.round() as usize;
    assert!(
        (steps - window as f64).abs() <= 1e-9 * steps.max(1.0),
        "burst window 1/β = {steps} steps does not align with the grid"
    );
    assert!(
        window >= 1 && window <= grid.n_steps,
        "burst window {window} outside the horizon"
    );
    let values: Vec<Matrix> = (0..=grid.n_steps)
        .map(|k| one(if k < window { -beta * x0 / 2.0 } else { 0.0 }))
        .collect();
    let u = MatrixPath::new(grid, values);
    Policy::open_loop(u.clone(), u)
}

// ───────────────────────── random instances ─────────────────────────

/// Uniform draw in [lo, hi) from the next generator word.
fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit_open(rng.next_u64())
}

/// Random matrix with entries uniform in [−scale, scale].
fn random_mat(rng: &mut ChaCha12Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| uniform(rng, -scale, scale))
}

/// Homogeneous zero-sum instance (J² = −J¹ exactly) with state dimension
/// `n` and one control per player: coefficients are drawn small enough —
/// entry scale shrinking like 1/n — that the saddle Riccati equation
/// rarely escapes on the unit horizon, with R¹₁₁ ∈ [1, 2],
/// R¹₂₂ ∈ [−2, −1], and noise loadings ‖Dᵢ‖ ≤ 0.3 so the control blocks
/// keep a uniform sign margin.  Deterministic in `(seed, n)`.
pub fn random_zero_sum_instance(seed: u64, n: usize) -> GameSpec {
    assert!(n >= 1, "state dimension must be positive");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(0x5a5a + n as u64);
    let sc = 1.0 / n as f64;
    let mut g = GameSpec::zero(n, 1, 1);
    g.A = CoefficientProfile::constant(random_mat(&mut rng, n, n, 0.5 * sc));
    g.C = CoefficientProfile::constant(random_mat(&mut rng, n, n, 0.5 * sc));
    g.B1 = CoefficientProfile::constant(random_mat(&mut rng, n, 1, 0.8));
    g.B2 = CoefficientProfile::constant(random_mat(&mut rng, n, 1, 0.8));
    g.D1 = CoefficientProfile::constant(random_mat(&mut rng, n, 1, 0.3 * sc));
    g.D2 = CoefficientProfile::constant(random_mat(&mut rng, n, 1, 0.3 * sc));

    let q = crate::linalg_core::sym_part(&random_mat(&mut rng, n, n, 0.4 * sc));
    let s1 = random_mat(&mut rng, 1, n, 0.25 * sc);
    let s2 = random_mat(&mut rng, 1, n, 0.25 * sc);
    let r11 = uniform(&mut rng, 1.0, 2.0);
    let r22 = -uniform(&mut rng, 1.0, 2.0);
    let r12 = uniform(&mut rng, -0.2, 0.2);
    let g_term = crate::linalg_core::sym_part(&random_mat(&mut rng, n, n, 0.4 * sc));

    let p1 = &mut g.players[0];
    p1.Q = CoefficientProfile::constant(q.clone());
    p1.S1 = CoefficientProfile::constant(s1.clone());
    p1.S2 = CoefficientProfile::constant(s2.clone());
    p1.R11 = scalar(r11);
    p1.R12 = scalar(r12);
    p1.R21 = scalar(r12);
    p1.R22 = scalar(r22);
    p1.G = g_term.clone();

    let p2 = &mut g.players[1];
    p2.Q = CoefficientProfile::constant(-q);
    p2.S1 = CoefficientProfile::constant(-s1);
    p2.S2 = CoefficientProfile::constant(-s2);
    p2.R11 = scalar(-r11);
    p2.R12 = scalar(-r12);
    p2.R21 = scalar(-r12);
    p2.R22 = scalar(-r22);
    p2.G = -g_term;
    g
}

/// Scalar one-controller instance with a uniformly positive-definite
/// control weight (R ∈ [1, 2], |D| ≤ 0.3), nonnegative state weights so
/// the value matrix stays bounded, genuinely noisy data (σ ∈ [0.3, 1]),
/// and nonzero affine terms exercising the offset machinery.
/// Deterministic in `seed`.
pub fn random_slq_instance(seed: u64) -> SlqProblem {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(0xa5a5);
    let mut p = SlqProblem::zero(1, 1);
    p.A = scalar(uniform(&mut rng, -0.5, 0.5));
    p.B = scalar(uniform(&mut rng, -1.0, 1.0));
    p.C = scalar(uniform(&mut rng, -0.5, 0.5));
    p.D = scalar(uniform(&mut rng, -0.3, 0.3));
    p.b = scalar(uniform(&mut rng, -1.0, 1.0));
    p.sigma = scalar(uniform(&mut rng, 0.3, 1.0));
    p.Q = scalar(uniform(&mut rng, 0.0, 0.8));
    p.S = scalar(uniform(&mut rng, -0.3, 0.3));
    p.R = scalar(uniform(&mut rng, 1.0, 2.0));
    p.q = scalar(uniform(&mut rng, -0.5, 0.5));
    p.rho = scalar(uniform(&mut rng, -0.5, 0.5));
    p.G = one(uniform(&mut rng, 0.0, 1.0));
    p.g = one(uniform(&mut rng, -0.5, 0.5));
    p
}

// ───────────────────────── stock direction families ─────────────────────────

/// Probe directions for [`crate::simulate::convexity_probe`]: the first
/// `m_i` entries are the constant unit coordinate directions (so index 0
/// is the constant unit control when m_i = 1), followed by three one-step
/// impulses spread over the horizon and two half/full-period sinusoids on
/// the first coordinate.
pub fn probe_directions(grid: TimeGrid, m_i: usize) -> Vec<MatrixPath> {
    assert!(m_i >= 1, "probe directions need at least one control row");
    let n_steps = grid.n_steps;
    let path = |f: &dyn Fn(usize) -> Matrix| {
        MatrixPath::new(grid, (0..=n_steps).map(f).collect())
    };
    let coord = |j: usize, scale: f64| {
        let mut e = Matrix::zeros(m_i, 1);
        e[(j, 0)] = scale;
        e
    };

    let mut dirs = Vec::new();
    for j in 0..m_i {
        dirs.push(path(&|_| coord(j, 1.0)));
    }
    for frac in [0.2, 0.5, 0.8] {
        let k0 = ((n_steps as f64) * frac).round() as usize;
        dirs.push(path(&|k| coord(0, if k == k0 { 1.0 } else { 0.0 })));
    }
    for cycles in [0.5, 1.0] {
        dirs.push(path(&|k| {
            let tau = k as f64 / n_steps as f64;
            coord(0, (std::f64::consts::TAU * cycles * tau).sin())
        }));
    }
    dirs
}

/// Stock unilateral deviations for
/// [`crate::simulate::nash_deviation_test`]: constant pushes on each
/// coordinate, a sign-flipped constant, a mid-horizon impulse, a sinusoid,
/// the zero control, and two constant feedback rules.  `n` is the state
/// dimension (feedback deviations need it).
pub fn deviation_menu(grid: TimeGrid, m_i: usize, n: usize) -> Vec<PlayerPolicy> {
    assert!(m_i >= 1, "deviations need at least one control row");
    let n_steps = grid.n_steps;
    let path = |f: &dyn Fn(usize) -> Matrix| {
        MatrixPath::new(grid, (0..=n_steps).map(f).collect())
    };
    let coord = |j: usize, scale: f64| {
        let mut e = Matrix::zeros(m_i, 1);
        e[(j, 0)] = scale;
        e
    };

    let mut menu = Vec::new();
    for j in 0..m_i {
        menu.push(PlayerPolicy::Open {
            u: path(&|_| coord(j, 0.5)),
        });
    }
    menu.push(PlayerPolicy::Open {
        u: path(&|_| coord(0, -0.7)),
    });
    let k0 = n_steps / 3;
    menu.push(PlayerPolicy::Open {
        u: path(&|k| coord(0, if k == k0 { 2.0 } else { 0.0 })),
    });
    menu.push(PlayerPolicy::Open {
        u: path(&|k| {
            let tau = k as f64 / n_steps as f64;
            coord(0, (std::f64::consts::TAU * tau).sin())
        }),
    });
    menu.push(PlayerPolicy::Open {
        u: path(&|_| Matrix::zeros(m_i, 1)),
    });
    for gain in [0.3, -0.5] {
        menu.push(PlayerPolicy::Feedback {
            theta: path(&|_| Matrix::from_element(m_i, n, gain)),
            v: path(&|_| coord(0, 0.1 * gain)),
        });
    }
    menu
}

// ───────────────────────── tests ─────────────────────────
