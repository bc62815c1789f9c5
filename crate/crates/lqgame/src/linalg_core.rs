//! Dense small-matrix utilities shared by every solver in the crate:
//! Moore–Penrose pseudo-inverse, range-inclusion tests, minimum-norm
//! solution families for linear matrix equations, and symmetric
//! eigenvalue bounds.
//!
//! The pseudo-inverse M† of a matrix M is the unique matrix satisfying the
//! four Penrose identities
//!
//! ```text
//! M M† M = M,   M† M M† = M†,   (M M†)ᵀ = M M†,   (M† M)ᵀ = M† M,
//! ```
//!
//! and every solution Θ of a consistent linear equation M Θ = Ψ can be
//! written as
//!
//! ```text
//! Θ = M† Ψ + (I − M† M) Γ,   Γ arbitrary,
//! ```
//!
//! with M† Ψ the minimum-norm member. The equation is consistent exactly
//! when Ψ lies in the range of M, i.e. ‖(I − M M†) Ψ‖ = 0.
//!
//! Everything here is a pure function over immutable values; all matrices
//! are dense, double precision, and desk-scale (the solvers call these
//! routines inside ODE right-hand sides at every integration stage).

use nalgebra::DMatrix;
use thiserror::Error;

/// Dense double-precision matrix used throughout the crate.
pub type Matrix = DMatrix<f64>;

/// Errors from the linear-algebra kernel.
#[derive(Debug, Clone, Error)]
pub enum LinalgError {
    /// The SVD iteration failed to converge (pathological input).
    #[error("singular value decomposition failed to converge for a {rows}×{cols} matrix")]
    SvdFailure { rows: usize, cols: usize },
    /// The symmetric eigenvalue iteration failed to converge.
    #[error("symmetric eigenvalue decomposition failed for a {rows}×{cols} matrix")]
    EigFailure { rows: usize, cols: usize },
    /// An operation requiring a square matrix received a rectangular one.
    #[error("expected a square matrix, got {rows}×{cols}")]
    NotSquare { rows: usize, cols: usize },
    /// A matrix expected to be symmetric was asymmetric beyond tolerance.
    ///
    /// Every matrix reaching the symmetric eigenvalue routine should be a
    /// Riccati iterate kept symmetric by construction, so asymmetry this
    /// large indicates a bug upstream rather than round-off.
    #[error("matrix is not symmetric: ‖M−Mᵀ‖∞ = {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric { residual: f64, tol: f64 },
    /// A matrix contained NaN or infinite entries.
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    /// The linear system M Θ = Ψ has no solution (Ψ outside the range of M).
    #[error("linear system is inconsistent: range-inclusion residual {residual:.3e}")]
    Infeasible { residual: f64 },
}

/// Entrywise maximum-absolute-value norm ‖M‖∞ (0 for empty matrices).
pub fn inf_norm(M: &Matrix) -> f64 {
    M.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// `true` iff every entry of `M` is finite.
pub fn all_finite(M: &Matrix) -> bool {
    M.iter().all(|x| x.is_finite())
}

/// Symmetric part ½(M + Mᵀ) of a square matrix.
pub fn sym_part(M: &Matrix) -> Matrix {
    (M + M.transpose()) * 0.5
}

/// Asymmetry residual ‖M − Mᵀ‖∞.
pub fn asymmetry(M: &Matrix) -> f64 {
    inf_norm(&(M - M.transpose()))
}

/// Default relative singular-value cutoff for rank decisions:
/// `max(rows, cols) · ε · 64`.
///
/// The standard rank-revealing threshold `max(rows, cols) · ε` is widened by
/// a factor 64 because the pseudo-inverse is evaluated thousands of times
/// inside ODE right-hand sides, where iterates hover near rank transitions.
pub fn default_rel_cutoff(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * 64.0
}

/// Moore–Penrose pseudo-inverse together with rank/conditioning diagnostics.
#[derive(Debug, Clone)]
pub struct PinvResult {
    /// M† (cols × rows).
    pub pinv: Matrix,
    /// Number of singular values retained (above the cutoff).
    pub rank: usize,
    /// Absolute singular-value threshold actually used
    /// (`rel_cutoff · σ_max`).
    pub cutoff: f64,
    /// Largest singular value of M (0 for the zero matrix).
    pub sigma_max: f64,
    /// Smallest *retained* singular value (`sigma_max` if rank 0, so that
    /// the condition number of a zero matrix is reported as 1).
    pub sigma_min_retained: f64,
}

impl PinvResult {
    /// Condition number of the retained spectrum, σ_max / σ_min_retained.
    ///
    /// Rank-0 inputs report 1.0: the pseudo-inverse of the zero matrix is
    /// exact, and feasibility of a zero coefficient matrix is decided by the
    /// consistency residual, not by conditioning.
    pub fn cond(&self) -> f64 {
        if self.rank == 0 || self.sigma_max == 0.0 {
            1.0
        } else {
            self.sigma_max / self.sigma_min_retained
        }
    }
}

/// Thin singular value decomposition `A = U · diag(σ) · Vᵀ` by one-sided
/// Jacobi rotations (Hestenes): returns `(U: rows×k, σ: k, V: cols×k)` with
/// `k = min(rows, cols)` and σ ≥ 0, unordered.
///
/// Column orthogonalization keeps full relative accuracy on the small end of
/// the spectrum, which the rank decisions and feasibility margins downstream
/// depend on; bidiagonalization-based routines can mis-factor exactly
/// rank-deficient inputs.
fn jacobi_svd(A: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix), LinalgError> {
    let (rows, cols) = A.shape();
    if rows < cols {
        let (u, sigma, v) = jacobi_svd(&A.transpose())?;
        return Ok((v, sigma, u));
    }

    let mut a = A.clone();
    let mut v = Matrix::identity(cols, cols);
    let tol = 4.0 * f64::EPSILON;
    let mut converged = false;
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                // Columns already orthogonal to working precision (this also
                // covers a zero column, where apq = 0 exactly).
                if apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotation angle that zeroes ⟨a_p, a_q⟩, in the numerically
                // stable smaller-root form.
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    a[(i, p)] = cs * x - sn * y;
                    a[(i, q)] = sn * x + cs * y;
                }
                for i in 0..cols {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = cs * x - sn * y;
                    v[(i, q)] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::SvdFailure { rows, cols });
    }

    // Singular values are the column norms of the rotated matrix; left
    // vectors are the normalized columns (a zero column keeps a zero left
    // vector, which Σ⁺ annihilates anyway).
    let mut sigma = vec![0.0_f64; cols];
    let mut u = Matrix::zeros(rows, cols);
    for j in 0..cols {
        let s = a.column(j).norm();
        sigma[j] = s;
        if s > 0.0 {
            for i in 0..rows {
                u[(i, j)] = a[(i, j)] / s;
            }
        }
    }
    Ok((u, sigma, v))
}

/// Moore–Penrose pseudo-inverse via singular value decomposition.
///
/// Singular values at or below `rel_cutoff · σ_max` are treated as zero;
/// pass [`default_rel_cutoff`] unless a caller has a reason to widen it.
/// Empty matrices (zero rows or columns) pseudo-invert to the empty matrix
/// of transposed shape.
pub fn pinv(M: &Matrix, rel_cutoff: f64) -> Result<PinvResult, LinalgError> {
    let (rows, cols) = M.shape();
    if !all_finite(M) {
        return Err(LinalgError::NonFinite);
    }
    if rows == 0 || cols == 0 {
        return Ok(PinvResult {
            pinv: Matrix::zeros(cols, rows),
            rank: 0,
            cutoff: 0.0,
            sigma_max: 0.0,
            sigma_min_retained: 0.0,
        });
    }

    let (u, sigma, v) = jacobi_svd(M)?;

    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rel_cutoff * sigma_max;

    // M† = V Σ⁺ Uᵀ with Σ⁺ inverting only the retained singular values.
    let mut rank = 0usize;
    let mut sigma_min_retained = sigma_max;
    let mut scaled_ut = u.transpose();
    for (k, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            sigma_min_retained = sigma_min_retained.min(s);
            let mut row = scaled_ut.row_mut(k);
            row /= s;
        } else {
            scaled_ut.row_mut(k).fill(0.0);
        }
    }
    let pinv = v * scaled_ut;

    Ok(PinvResult {
        pinv,
        rank,
        cutoff,
        sigma_max,
        sigma_min_retained,
    })
}

/// Result of a range-inclusion test `range(Ψ) ⊆ range(M)`.
#[derive(Debug, Clone, Copy)]
pub struct RangeCheck {
    /// `residual ≤ tol`.
    pub included: bool,
    /// ‖(I − M M†) Ψ‖∞.
    pub residual: f64,
}

/// Tests `range(Ψ) ⊆ range(M)` via the projector identity
/// ‖(I − M M†) Ψ‖∞ ≤ tol. Always reports the residual.
pub fn range_inclusion(Psi: &Matrix, M: &Matrix, tol: f64) -> Result<RangeCheck, LinalgError> {
    let pr = pinv(M, default_rel_cutoff(M.nrows(), M.ncols()))?;
    Ok(range_inclusion_with(Psi, M, &pr, tol))
}

/// [`range_inclusion`] reusing an already-computed pseudo-inverse of `M`.
pub fn range_inclusion_with(Psi: &Matrix, M: &Matrix, pr: &PinvResult, tol: f64) -> RangeCheck {
    assert_eq!(
        Psi.nrows(),
        M.nrows(),
        "range_inclusion: Ψ has {} rows but M has {}",
        Psi.nrows(),
        M.nrows()
    );
    let residual = inf_norm(&(Psi - M * (&pr.pinv * Psi)));
    RangeCheck {
        included: residual <= tol,
        residual,
    }
}

/// The full solution family of a consistent linear equation M Θ = Ψ:
/// Θ = `theta0` + `projector` · Γ for arbitrary Γ.
#[derive(Debug, Clone)]
pub struct LinearFamily {
    /// Minimum-norm particular solution M† Ψ.
    pub theta0: Matrix,
    /// I − M† M, the projector onto the null space of M.
    pub projector: Matrix,
    /// Consistency residual ‖(I − M M†) Ψ‖∞ (≤ tol when returned Ok).
    pub residual: f64,
}

/// Solves M Θ = Ψ in the minimum-norm sense and returns the whole affine
/// solution family, or [`LinalgError::Infeasible`] when Ψ is not in the
/// range of M (residual compared against `tol`, absolute).
pub fn solve_linear_family(
    M: &Matrix,
    Psi: &Matrix,
    tol: f64,
) -> Result<LinearFamily, LinalgError> {
    let pr = pinv(M, default_rel_cutoff(M.nrows(), M.ncols()))?;
    let check = range_inclusion_with(Psi, M, &pr, tol);
    if !check.included {
        return Err(LinalgError::Infeasible {
            residual: check.residual,
        });
    }
    let theta0 = &pr.pinv * Psi;
    let projector = Matrix::identity(M.ncols(), M.ncols()) - &pr.pinv * M;
    Ok(LinearFamily {
        theta0,
        projector,
        residual: check.residual,
    })
}

/// Symmetry tolerance accepted by [`min_eig_sym`]: ‖M−Mᵀ‖∞ ≤ 1e−9·(1+‖M‖∞).
pub fn symmetry_tol(M: &Matrix) -> f64 {
    1e-9 * (1.0 + inf_norm(M))
}

/// Smallest eigenvalue of the symmetrized matrix ½(M + Mᵀ).
///
/// `M` must be square and symmetric within [`symmetry_tol`]; an empty
/// (0 × 0) matrix is vacuously positive semidefinite and reports +∞.
pub fn min_eig_sym(M: &Matrix) -> Result<f64, LinalgError> {
    let (rows, cols) = M.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Ok(f64::INFINITY);
    }
    if !all_finite(M) {
        return Err(LinalgError::NonFinite);
    }
    let residual = asymmetry(M);
    let tol = symmetry_tol(M);
    if residual > tol {
        return Err(LinalgError::NotSymmetric { residual, tol });
    }
    let eig = sym_part(M)
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(LinalgError::EigFailure { rows, cols })?;
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Largest eigenvalue of the symmetrized matrix, −min_eig_sym(−M).
pub fn max_eig_sym(M: &Matrix) -> Result<f64, LinalgError> {
    Ok(-min_eig_sym(&(-M))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    /// Maximum Penrose-identity residual for a (M, M†) pair.
    fn penrose_residual(M: &Matrix, Mp: &Matrix) -> f64 {
        let r1 = inf_norm(&(M * Mp * M - M));
        let r2 = inf_norm(&(Mp * M * Mp - Mp));
        let mm = M * Mp;
        let r3 = asymmetry(&mm);
        let pm = Mp * M;
        let r4 = asymmetry(&pm);
        r1.max(r2).max(r3).max(r4)
    }

    #[test]
    fn pinv_identity_is_identity() {
        let I = Matrix::identity(3, 3);
        let pr = pinv(&I, default_rel_cutoff(3, 3)).unwrap();
        assert_eq!(pr.rank, 3);
        assert_abs_diff_eq!(inf_norm(&(&pr.pinv - &I)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn pinv_diagonal_projector_is_idempotent() {
        let M = mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let pr = pinv(&M, default_rel_cutoff(2, 2)).unwrap();
        assert_eq!(pr.rank, 1);
        assert_abs_diff_eq!(inf_norm(&(&pr.pinv - &M)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn pinv_of_ones_column_is_half_half_row() {
        // (1,1)ᵀ has pseudo-inverse (0.5, 0.5); all four Penrose identities
        // hold by direct multiplication.
        let M = mat(2, 1, &[1.0, 1.0]);
        let pr = pinv(&M, default_rel_cutoff(2, 1)).unwrap();
        assert_eq!(pr.rank, 1);
        assert_eq!(pr.pinv.shape(), (1, 2));
        assert_abs_diff_eq!(pr.pinv[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(pr.pinv[(0, 1)], 0.5, epsilon = 1e-14);
        assert!(penrose_residual(&M, &pr.pinv) <= 1e-14);
    }

    #[test]
    fn pinv_zero_matrix_has_rank_zero_and_cond_one() {
        let M = Matrix::zeros(3, 2);
        let pr = pinv(&M, default_rel_cutoff(3, 2)).unwrap();
        assert_eq!(pr.rank, 0);
        assert_eq!(pr.pinv, Matrix::zeros(2, 3));
        assert_eq!(pr.cond(), 1.0);
    }

    #[test]
    fn pinv_empty_matrix() {
        let M = Matrix::zeros(0, 3);
        let pr = pinv(&M, 1e-12).unwrap();
        assert_eq!(pr.pinv.shape(), (3, 0));
        assert_eq!(pr.rank, 0);
    }

    #[test]
    fn pinv_rejects_non_finite() {
        let M = mat(1, 1, &[f64::NAN]);
        assert!(matches!(pinv(&M, 1e-12), Err(LinalgError::NonFinite)));
    }

    #[test]
    fn pinv_condition_number_of_diag() {
        let M = mat(2, 2, &[4.0, 0.0, 0.0, 0.5]);
        let pr = pinv(&M, default_rel_cutoff(2, 2)).unwrap();
        assert_eq!(pr.rank, 2);
        assert_abs_diff_eq!(pr.cond(), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn range_inclusion_contains_itself() {
        let M = mat(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let check = range_inclusion(&M.clone(), &M, 1e-10).unwrap();
        assert!(check.included);
        assert!(check.residual <= 1e-12);
    }

    #[test]
    fn range_inclusion_orthogonal_vector_fails_with_residual_one() {
        let M = mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let Psi = mat(2, 1, &[0.0, 1.0]);
        let check = range_inclusion(&Psi, &M, 1e-10).unwrap();
        assert!(!check.included);
        assert_abs_diff_eq!(check.residual, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn range_inclusion_scalar_multiple_passes() {
        let M = mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let Psi = mat(2, 1, &[3.0, 0.0]);
        let check = range_inclusion(&Psi, &M, 1e-10).unwrap();
        assert!(check.included);
    }

    #[test]
    fn family_invertible_case() {
        let M = Matrix::identity(2, 2);
        let b = mat(2, 1, &[1.5, -2.0]);
        let fam = solve_linear_family(&M, &b, 1e-10).unwrap();
        assert_abs_diff_eq!(inf_norm(&(&fam.theta0 - &b)), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(inf_norm(&fam.projector), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn family_rank_deficient_consistent_case() {
        let M = mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let Psi = mat(2, 1, &[2.0, 0.0]);
        let fam = solve_linear_family(&M, &Psi, 1e-10).unwrap();
        assert_abs_diff_eq!(fam.theta0[(0, 0)], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fam.theta0[(1, 0)], 0.0, epsilon = 1e-14);
        let expected_proj = mat(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(
            inf_norm(&(&fam.projector - &expected_proj)),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn family_inconsistent_case_is_infeasible() {
        let M = mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let Psi = mat(2, 1, &[0.0, 1.0]);
        match solve_linear_family(&M, &Psi, 1e-10) {
            Err(LinalgError::Infeasible { residual }) => {
                assert_abs_diff_eq!(residual, 1.0, epsilon = 1e-14);
            }
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn min_eig_diagonal() {
        assert_abs_diff_eq!(
            min_eig_sym(&mat(2, 2, &[2.0, 0.0, 0.0, 3.0])).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            min_eig_sym(&mat(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn min_eig_2x2_offdiagonal() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3 (characteristic
        // polynomial (2−λ)² − 1).
        let M = mat(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_abs_diff_eq!(min_eig_sym(&M).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(max_eig_sym(&M).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn min_eig_rejects_asymmetric() {
        let M = mat(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            min_eig_sym(&M),
            Err(LinalgError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn min_eig_rejects_rectangular() {
        let M = Matrix::zeros(2, 3);
        assert!(matches!(min_eig_sym(&M), Err(LinalgError::NotSquare { .. })));
    }

    #[test]
    fn min_eig_empty_matrix_is_vacuously_psd() {
        let M = Matrix::zeros(0, 0);
        assert_eq!(min_eig_sym(&M).unwrap(), f64::INFINITY);
    }

    #[test]
    fn inf_norm_empty_is_zero() {
        assert_eq!(inf_norm(&Matrix::zeros(0, 2)), 0.0);
    }
}
