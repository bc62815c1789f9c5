//! Instance-file schema and conversion to solver inputs.
//!
//! An instance is a JSON document:
//!
//! ```text
//! {
//!   "n": 1, "m1": 1, "m2": 1,
//!   "grid": { "t0": 0.0, "T": 1.0, "n_steps": 1000 },      // optional
//!   "coefficients": { "A": [[0.0]], "B1": ..., ... },       // optional
//!   "players": [ { "Q": ..., "G": [[1.0]], ... }, { ... } ],// optional
//!   "x0": [1.0]                                             // optional
//! }
//! ```
//!
//! Every coefficient is optional and defaults to zero in the shape implied
//! by (n, m1, m2). Time-varying entries (everything except the terminal
//! weights G, g) are either a constant matrix as nested row arrays or a
//! named profile object:
//!
//! ```text
//! { "profile": "constant",       "params": { "value": [[...]] } }
//! { "profile": "linear-in-time", "params": { "at_start": [[...]], "slope": [[...]] } }
//! { "profile": "sinusoid",       "params": { "base": [[...]], "amplitude": [[...]],
//!                                            "angular_frequency": 1.0, "phase": 0.0 } }
//! ```
//!
//! `linear-in-time` evaluates to `at_start + s · slope` and `sinusoid` to
//! `base + sin(ω s + φ) · amplitude` at absolute time `s`.

use anyhow::{bail, Context, Result};
use lqgame::game_model::{CoefficientProfile, SlqProblem};
use lqgame::{GameSpec, Matrix, TimeGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A matrix as nested row arrays.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileJson {
    /// Bare nested arrays mean a constant coefficient.
    Constant(Rows),
    /// A named profile with parameters.
    Named(NamedProfile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "profile", content = "params", rename_all = "kebab-case")]
pub enum NamedProfile {
    Constant {
        value: Rows,
    },
    LinearInTime {
        at_start: Rows,
        slope: Rows,
    },
    Sinusoid {
        base: Rows,
        amplitude: Rows,
        angular_frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridJson {
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_horizon")]
    pub T: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_steps() -> usize {
    1000
}

impl Default for GridJson {
    fn default() -> Self {
        GridJson {
            t0: 0.0,
            T: default_horizon(),
            n_steps: default_steps(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub A: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub B1: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub B2: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub C: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub D1: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub D2: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<ProfileJson>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub Q: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub S1: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub S2: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub R11: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub R12: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub R21: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub R22: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho1: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho2: Option<ProfileJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub G: Option<Rows>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<Rows>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    #[serde(default)]
    pub grid: GridJson,
    #[serde(default)]
    pub coefficients: CoefficientsJson,
    #[serde(default)]
    pub players: Vec<PlayerJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

/// An instance ready for the solvers.
pub struct ParsedInstance {
    pub spec: GameSpec,
    pub grid: TimeGrid,
    /// Initial state for simulation-based checks (defaults to all ones).
    pub x0: Matrix,
}

/// `sha256:<hex>` of the raw bytes; recorded in every report so artifacts
/// are traceable to their inputs.
pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

fn matrix_from(rows: &Rows, exp_rows: usize, exp_cols: usize, name: &str) -> Result<Matrix> {
    if rows.len() != exp_rows {
        bail!("{name}: expected {exp_rows} rows, got {}", rows.len());
    }
    let mut flat = Vec::with_capacity(exp_rows * exp_cols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != exp_cols {
            bail!(
                "{name}: row {} has {} entries, expected {exp_cols}",
                i + 1,
                row.len()
            );
        }
        flat.extend_from_slice(row);
    }
    Ok(Matrix::from_row_slice(exp_rows, exp_cols, &flat))
}

fn profile_from(
    p: &Option<ProfileJson>,
    exp_rows: usize,
    exp_cols: usize,
    name: &str,
) -> Result<CoefficientProfile> {
    let Some(p) = p else {
        return Ok(CoefficientProfile::zeros(exp_rows, exp_cols));
    };
    Ok(match p {
        ProfileJson::Constant(rows) => {
            CoefficientProfile::Constant(matrix_from(rows, exp_rows, exp_cols, name)?)
        }
        ProfileJson::Named(NamedProfile::Constant { value }) => {
            CoefficientProfile::Constant(matrix_from(value, exp_rows, exp_cols, name)?)
        }
        ProfileJson::Named(NamedProfile::LinearInTime { at_start, slope }) => {
            CoefficientProfile::LinearInTime {
                at0: matrix_from(at_start, exp_rows, exp_cols, &format!("{name}.at_start"))?,
                slope: matrix_from(slope, exp_rows, exp_cols, &format!("{name}.slope"))?,
            }
        }
        ProfileJson::Named(NamedProfile::Sinusoid {
            base,
            amplitude,
            angular_frequency,
            phase,
        }) => CoefficientProfile::Sinusoid {
            base: matrix_from(base, exp_rows, exp_cols, &format!("{name}.base"))?,
            amplitude: matrix_from(amplitude, exp_rows, exp_cols, &format!("{name}.amplitude"))?,
            angular_frequency: *angular_frequency,
            phase: *phase,
        },
    })
}

/// Parses raw instance bytes into a game specification, grid, and initial
/// state. Shape errors name the offending field.
pub fn parse_instance(bytes: &[u8]) -> Result<ParsedInstance> {
    let file: InstanceFile =
        serde_json::from_slice(bytes).context("instance file is not valid JSON for the schema")?;
    let (n, m1, m2) = (file.n, file.m1, file.m2);
    if file.players.len() > 2 {
        bail!("players: at most 2 entries, got {}", file.players.len());
    }

    let grid = TimeGrid::new(file.grid.t0, file.grid.T, file.grid.n_steps)
        .map_err(|e| anyhow::anyhow!("grid: {e}"))?;

    let mut spec = GameSpec::zero(n, m1, m2);
    let c = &file.coefficients;
    spec.A = profile_from(&c.A, n, n, "A")?;
    spec.B1 = profile_from(&c.B1, n, m1, "B1")?;
    spec.B2 = profile_from(&c.B2, n, m2, "B2")?;
    spec.C = profile_from(&c.C, n, n, "C")?;
    spec.D1 = profile_from(&c.D1, n, m1, "D1")?;
    spec.D2 = profile_from(&c.D2, n, m2, "D2")?;
    spec.b = profile_from(&c.b, n, 1, "b")?;
    spec.sigma = profile_from(&c.sigma, n, 1, "sigma")?;

    for (i, pj) in file.players.iter().enumerate() {
        let tag = |f: &str| format!("players[{i}].{f}");
        let p = &mut spec.players[i];
        p.Q = profile_from(&pj.Q, n, n, &tag("Q"))?;
        p.S1 = profile_from(&pj.S1, m1, n, &tag("S1"))?;
        p.S2 = profile_from(&pj.S2, m2, n, &tag("S2"))?;
        p.R11 = profile_from(&pj.R11, m1, m1, &tag("R11"))?;
        p.R12 = profile_from(&pj.R12, m1, m2, &tag("R12"))?;
        p.R21 = profile_from(&pj.R21, m2, m1, &tag("R21"))?;
        p.R22 = profile_from(&pj.R22, m2, m2, &tag("R22"))?;
        p.q = profile_from(&pj.q, n, 1, &tag("q"))?;
        p.rho1 = profile_from(&pj.rho1, m1, 1, &tag("rho1"))?;
        p.rho2 = profile_from(&pj.rho2, m2, 1, &tag("rho2"))?;
        if let Some(rows) = &pj.G {
            p.G = matrix_from(rows, n, n, &tag("G"))?;
        }
        if let Some(rows) = &pj.g {
            p.g = matrix_from(rows, n, 1, &tag("g"))?;
        }
    }

    let x0 = match &file.x0 {
        None => Matrix::from_element(n, 1, 1.0),
        Some(v) => {
            if v.len() != n {
                bail!("x0: expected {n} entries, got {}", v.len());
            }
            Matrix::from_column_slice(n, 1, v)
        }
    };

    Ok(ParsedInstance { spec, grid, x0 })
}

/// Extracts the one-controller problem (player 1 carries all the data);
/// requires `m2 = 0`.
pub fn to_slq(spec: &GameSpec) -> Result<SlqProblem> {
    if spec.m2 != 0 {
        bail!(
            "the one-controller solve requires m2 = 0, got m2 = {}",
            spec.m2
        );
    }
    let p = &spec.players[0];
    Ok(SlqProblem {
        n: spec.n,
        m: spec.m1,
        A: spec.A.clone(),
        B: spec.B1.clone(),
        C: spec.C.clone(),
        D: spec.D1.clone(),
        b: spec.b.clone(),
        sigma: spec.sigma.clone(),
        Q: p.Q.clone(),
        S: p.S1.clone(),
        R: p.R11.clone(),
        q: p.q.clone(),
        rho: p.rho1.clone(),
        G: p.G.clone(),
        g: p.g.clone(),
    })
}

// ───────────────────── serialization (for `example`) ─────────────────────

fn rows_from(M: &Matrix) -> Rows {
    (0..M.nrows())
        .map(|i| (0..M.ncols()).map(|j| M[(i, j)]).collect())
        .collect()
}

fn profile_json(p: &CoefficientProfile) -> ProfileJson {
    match p {
        CoefficientProfile::Constant(M) => ProfileJson::Constant(rows_from(M)),
        CoefficientProfile::LinearInTime { at0, slope } => {
            ProfileJson::Named(NamedProfile::LinearInTime {
                at_start: rows_from(at0),
                slope: rows_from(slope),
            })
        }
        CoefficientProfile::Sinusoid {
            base,
            amplitude,
            angular_frequency,
            phase,
        } => ProfileJson::Named(NamedProfile::Sinusoid {
            base: rows_from(base),
            amplitude: rows_from(amplitude),
            angular_frequency: *angular_frequency,
            phase: *phase,
        }),
    }
}

/// Serializes a game and grid as pretty-printed instance-file JSON, so
/// generated instances can be re-fed to `solve` and `verify`.
pub fn instance_json(spec: &GameSpec, grid: &TimeGrid, x0: &Matrix) -> Result<Vec<u8>> {
    let players = spec
        .players
        .iter()
        .map(|p| PlayerJson {
            Q: Some(profile_json(&p.Q)),
            S1: Some(profile_json(&p.S1)),
            S2: Some(profile_json(&p.S2)),
            R11: Some(profile_json(&p.R11)),
            R12: Some(profile_json(&p.R12)),
            R21: Some(profile_json(&p.R21)),
            R22: Some(profile_json(&p.R22)),
            q: Some(profile_json(&p.q)),
            rho1: Some(profile_json(&p.rho1)),
            rho2: Some(profile_json(&p.rho2)),
            G: Some(rows_from(&p.G)),
            g: Some(rows_from(&p.g)),
        })
        .collect();
    let file = InstanceFile {
        n: spec.n,
        m1: spec.m1,
        m2: spec.m2,
        grid: GridJson {
            t0: grid.t0,
            T: grid.T,
            n_steps: grid.n_steps,
        },
        coefficients: CoefficientsJson {
            A: Some(profile_json(&spec.A)),
            B1: Some(profile_json(&spec.B1)),
            B2: Some(profile_json(&spec.B2)),
            C: Some(profile_json(&spec.C)),
            D1: Some(profile_json(&spec.D1)),
            D2: Some(profile_json(&spec.D2)),
            b: Some(profile_json(&spec.b)),
            sigma: Some(profile_json(&spec.sigma)),
        },
        players,
        x0: Some((0..spec.n).map(|i| x0[(i, 0)]).collect()),
    };
    let mut bytes = serde_json::to_vec_pretty(&file)?;
    bytes.push(b'\n');
    Ok(bytes)
}
