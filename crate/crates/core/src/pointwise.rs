//! Pointwise linear algebra on evaluated forms: rank of a 2-form, its
//! kernel (Reeb) direction, and the Reeb vector of a contact form.
//!
//! Everything here runs on tiny dense matrices (dimension <= 7), so the
//! null-space and rank computations go through a full SVD rather than any
//! iterative scheme. Singular values below `rank_rel * max(sigma_max, 1)`
//! count as zero, which keeps the threshold scale-aware when coefficients
//! carry large exponential factors.

use crate::exterior::{CompiledForm, GeomError, KForm};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointwiseError {
    #[error("kernel is degenerate at the sample point: rank {rank} < {expected} (form is not presymplectic there)")]
    DegenerateKernel { rank: usize, expected: usize },
    #[error("matrix is not antisymmetric: |omega + omega^T| = {0}")]
    NotSkew(f64),
    #[error("form is not contact at the sample point: Reeb system residual {0}")]
    NotContactAtPoint(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Evaluated 2-form as a skew matrix `omega_ij = omega(d_i, d_j)`.
#[derive(Debug, Clone)]
pub struct SkewMatrix {
    mat: DMatrix<f64>,
}

/// Volume evaluation on a frame of tangent vectors, used to co-orient
/// kernel directions.
pub type VolumeFn<'a> = &'a dyn Fn(&[Vec<f64>]) -> f64;

pub const SKEW_TOL: f64 = 1e-12;

impl SkewMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<SkewMatrix, PointwiseError> {
        let asym = (&mat + mat.transpose()).abs().max();
        if asym > SKEW_TOL * mat.abs().max().max(1.0) {
            return Err(PointwiseError::NotSkew(asym));
        }
        Ok(SkewMatrix { mat })
    }

    pub fn from_form_at(
        omega: &KForm,
        point: &[f64],
        params: &BTreeMap<String, f64>,
    ) -> Result<SkewMatrix, PointwiseError> {
        let compiled = omega.compile(params)?;
        SkewMatrix::new(compiled.skew_matrix_at(point))
    }

    pub fn from_compiled_at(
        form: &CompiledForm,
        point: &[f64],
    ) -> Result<SkewMatrix, PointwiseError> {
        SkewMatrix::new(form.skew_matrix_at(point))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Numeric rank with scale-aware thresholding. Skew matrices have even
    /// rank; if the tolerance splits a singular-value pair, the count is
    /// rounded down to even and the `warned` flag set.
    pub fn rank(&self, rank_rel: f64) -> (usize, bool) {
        let svd = self.mat.clone().svd(false, false);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let tol = rank_rel * smax.max(1.0);
        let count = svd.singular_values.iter().filter(|&&s| s > tol).count();
        if count % 2 == 0 {
            (count, false)
        } else {
            (count - 1, true)
        }
    }

    /// Unit-norm null vector of a maximal-rank skew matrix on an
    /// odd-dimensional chart.
    ///
    /// The sign is co-oriented when `orientation` is supplied: with a
    /// transversal basis `b_1..b_2n` oriented positively by `omega^n`
    /// (Pfaffian positive), the returned `R` satisfies
    /// `orientation(R, b_1, .., b_2n) > 0`. Without an orientation the sign
    /// is deterministic: the first component of magnitude comparable to the
    /// largest is made positive.
    pub fn kernel_direction(
        &self,
        rank_rel: f64,
        orientation: Option<VolumeFn>,
    ) -> Result<DVector<f64>, PointwiseError> {
        let n = self.dim();
        let (rank, _) = self.rank(rank_rel);
        if rank + 1 != n {
            return Err(PointwiseError::DegenerateKernel {
                rank,
                expected: n - 1,
            });
        }
        let svd = self.mat.clone().svd(false, true);
        let v_t = svd.v_t.as_ref().expect("SVD with V requested");
        // Singular values sort descending: the kernel is the last row of
        // V^T, a transversal the first n-1 rows.
        let mut u: DVector<f64> = v_t.row(n - 1).transpose();
        u /= u.norm();

        let sign = match orientation {
            Some(vol) => {
                let mut basis: Vec<Vec<f64>> = (0..n - 1)
                    .map(|i| v_t.row(i).iter().copied().collect())
                    .collect();
                let k = n - 1;
                let mut restricted = DMatrix::<f64>::zeros(k, k);
                for i in 0..k {
                    for j in 0..k {
                        let bi = DVector::from_column_slice(&basis[i]);
                        let bj = DVector::from_column_slice(&basis[j]);
                        restricted[(i, j)] = (bi.transpose() * &self.mat * bj)[(0, 0)];
                    }
                }
                if pfaffian(&restricted) < 0.0 {
                    basis.swap(0, 1);
                }
                let mut frame = Vec::with_capacity(n);
                frame.push(u.iter().copied().collect::<Vec<f64>>());
                frame.extend(basis);
                if vol(&frame) >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            None => {
                let scale = u.amax();
                let lead = u
                    .iter()
                    .find(|x| x.abs() > 0.5 * scale)
                    .copied()
                    .unwrap_or(1.0);
                if lead >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        Ok(u * sign)
    }
}

/// Pfaffian of a small even-dimensional skew matrix by expansion along the
/// first row.
pub fn pfaffian(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    debug_assert_eq!(n % 2, 0);
    if n == 0 {
        return 1.0;
    }
    if n == 2 {
        return m[(0, 1)];
    }
    let mut acc = 0.0;
    for j in 1..n {
        let keep: Vec<usize> = (0..n).filter(|&k| k != 0 && k != j).collect();
        let sub = DMatrix::from_fn(n - 2, n - 2, |r, c| m[(keep[r], keep[c])]);
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * m[(0, j)] * pfaffian(&sub);
    }
    acc
}

/// Rank of a 2-form at a point; the flag reports a tolerance-split pair.
pub fn form_rank(
    omega: &KForm,
    point: &[f64],
    params: &BTreeMap<String, f64>,
    rank_rel: f64,
) -> Result<(usize, bool), PointwiseError> {
    Ok(SkewMatrix::from_form_at(omega, point, params)?.rank(rank_rel))
}

/// Co-oriented unit kernel direction of a 2-form at a point.
pub fn kernel_direction(
    omega: &KForm,
    point: &[f64],
    params: &BTreeMap<String, f64>,
    orientation: Option<&KForm>,
    rank_rel: f64,
) -> Result<DVector<f64>, PointwiseError> {
    let skew = SkewMatrix::from_form_at(omega, point, params)?;
    match orientation {
        Some(orient) => {
            let compiled = orient.compile(params)?;
            let vol = move |frame: &[Vec<f64>]| compiled.apply_to_vectors(point, frame);
            skew.kernel_direction(rank_rel, Some(&vol))
        }
        None => skew.kernel_direction(rank_rel, None),
    }
}

/// The Reeb vector of a contact form at a point: the unique solution of
/// `d alpha (R, .) = 0`, `alpha(R) = 1`, via least squares on the stacked
/// `(n+1) x n` system. Errors when the system is inconsistent (the form is
/// not contact there).
pub fn reeb_of_contact(
    alpha: &KForm,
    point: &[f64],
    params: &BTreeMap<String, f64>,
) -> Result<DVector<f64>, PointwiseError> {
    let n = alpha.dim();
    let d_alpha = alpha.exterior_derivative()?;
    let skew = SkewMatrix::from_form_at(&d_alpha, point, params)?;
    let compiled_alpha = alpha.compile(params)?;
    let mut alpha_row = DVector::<f64>::zeros(n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        alpha_row[i] = compiled_alpha.apply_to_vectors(point, &[e]);
    }

    let mut system = DMatrix::<f64>::zeros(n + 1, n);
    system.view_mut((0, 0), (n, n)).copy_from(skew.matrix());
    system
        .view_mut((n, 0), (1, n))
        .copy_from(&alpha_row.transpose());
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;

    let svd = system.clone().svd(true, true);
    let scale = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let r = svd
        .solve(&rhs, 1e-13 * scale.max(1.0))
        .map_err(|_| PointwiseError::NotContactAtPoint(f64::INFINITY))?;
    let residual = (&system * &r - &rhs).abs().max();
    if residual > 1e-8 * scale.max(1.0) {
        return Err(PointwiseError::NotContactAtPoint(residual));
    }
    Ok(r)
}
