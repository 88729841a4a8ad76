//! Dense row-major matrices, the observation mask, and the SVD kernel.
//!
//! The SVD is a one-sided Jacobi: cheap to verify, numerically accurate well
//! beyond the 1e-10 reconstruction tolerance the rest of the crate relies on,
//! and entirely adequate at the problem sizes this crate targets (min
//! dimension up to a few hundred). Randomized or truncated factorizations are
//! deliberately not implemented.

use std::ops::{Index, IndexMut};

use crate::error::{CoreError, Result};

/// Dense real matrix, row-major.
///
/// Entries are always finite; raw inputs with missing markers must be split
/// into a `(DenseMatrix, ObservationMask)` pair at the boundary (see
/// `io::split_missing`) before any arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Build from row-major data, validating shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CoreError::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(CoreError::DataLength {
                rows,
                cols,
                got: data.len(),
            });
        }
        for (idx, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(CoreError::NonFinite {
                    row: idx / cols,
                    col: idx % cols,
                    value: v,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * other`, with a shape check.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(CoreError::ShapeMismatch {
                op: "matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                let o_row = out.row_mut(i);
                for (j, &bkj) in b_row.iter().enumerate() {
                    o_row[j] += aik * bkj;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other` without materializing the transpose.
    pub fn transpose_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(CoreError::ShapeMismatch {
                op: "transpose_matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let b_row = other.row(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let o_row = out.row_mut(k);
                for (j, &bij) in b_row.iter().enumerate() {
                    o_row[j] += aik * bij;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(CoreError::ShapeMismatch {
                op: "sub",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &DenseMatrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(CoreError::ShapeMismatch {
                op: "frobenius_distance",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            let d = a - b;
            acc += d * d;
        }
        Ok(acc.sqrt())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Boolean mask over a response matrix; `true` marks an observed entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl ObservationMask {
    /// Reject all-missing masks: a response with no observed entry carries no
    /// information and every downstream quantity would be degenerate.
    pub fn new(rows: usize, cols: usize, observed: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CoreError::EmptyMatrix { rows, cols });
        }
        if observed.len() != rows * cols {
            return Err(CoreError::DataLength {
                rows,
                cols,
                got: observed.len(),
            });
        }
        if !observed.iter().any(|&o| o) {
            return Err(CoreError::EmptyMask);
        }
        Ok(Self {
            rows,
            cols,
            observed,
        })
    }

    pub fn fully_observed(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![true; rows * cols]).expect("non-empty")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Rows i..j of the mask, as a new mask. Errors if the selection has no
    /// observed entries.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut observed = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            observed.extend_from_slice(&self.observed[i * self.cols..(i + 1) * self.cols]);
        }
        Self::new(rows.len(), self.cols, observed)
    }
}

/// Select a subset of rows from a matrix (used for CV folds and data splits).
pub fn select_rows(m: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
    let mut data = Vec::with_capacity(rows.len() * m.cols());
    for &i in rows {
        data.extend_from_slice(m.row(i));
    }
    DenseMatrix {
        rows: rows.len(),
        cols: m.cols(),
        data,
    }
}

/// Thin SVD `M = U diag(s) V^T` with `k = min(rows, cols)`.
///
/// Invariants: singular values sorted descending, `U^T U = V^T V = I` within
/// 1e-8 entrywise, reconstruction within 1e-10 relative Frobenius error, and
/// the largest-magnitude entry of every left singular vector is non-negative
/// so results are deterministic.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub vt: DenseMatrix,
}

impl SvdResult {
    /// `U diag(s) V^T` for an arbitrary replacement spectrum `s`.
    pub fn recompose_with(&self, s: &[f64]) -> DenseMatrix {
        assert_eq!(s.len(), self.singular_values.len());
        let m = self.u.rows();
        let n = self.vt.cols();
        let k = s.len();
        let mut out = DenseMatrix::zeros(m, n);
        for r in 0..k {
            if s[r] == 0.0 {
                continue;
            }
            for i in 0..m {
                let uir_s = self.u[(i, r)] * s[r];
                if uir_s == 0.0 {
                    continue;
                }
                let v_row = self.vt.row(r);
                let o_row = out.row_mut(i);
                for (j, &vrj) in v_row.iter().enumerate() {
                    o_row[j] += uir_s * vrj;
                }
            }
        }
        out
    }

    pub fn recompose(&self) -> DenseMatrix {
        self.recompose_with(&self.singular_values)
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;
const JACOBI_REL_TOL: f64 = 1e-14;

/// Thin SVD via one-sided Jacobi rotations.
pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    // Rescale extreme magnitudes so the Gram products inside the Jacobi
    // sweep can neither overflow nor underflow.
    let max_abs = m.data().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if max_abs > 1e150 || (max_abs > 0.0 && max_abs < 1e-150) {
        let mut res = svd(&m.scale(1.0 / max_abs))?;
        for s in &mut res.singular_values {
            *s *= max_abs;
        }
        return Ok(res);
    }
    if m.rows() >= m.cols() {
        svd_tall(m)
    } else {
        // M = U S V^T  <=>  M^T = V S U^T
        let t = svd_tall(&m.transpose())?;
        let u = transpose_of(&t.vt);
        let vt = t.u.transpose();
        let mut res = SvdResult {
            u,
            singular_values: t.singular_values,
            vt,
        };
        fix_signs(&mut res);
        Ok(res)
    }
}

fn transpose_of(m: &DenseMatrix) -> DenseMatrix {
    m.transpose()
}

/// One-sided Jacobi on a tall matrix (rows >= cols): orthogonalize the columns
/// of A by plane rotations, accumulating them into V; then s_j = ||a_j|| and
/// u_j = a_j / s_j.
fn svd_tall(m: &DenseMatrix) -> Result<SvdResult> {
    let rows = m.rows();
    let n = m.cols();
    debug_assert!(rows >= n);

    // Column-major working copies.
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    // Columns whose norm falls to the roundoff scale of the whole matrix are
    // numerically zero; freezing them keeps exact rank deficiency from
    // stalling the relative convergence test.
    let floor = m.frobenius_norm() * f64::EPSILON * 8.0;
    let floor_sq = floor * floor;

    let mut converged = n < 2;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (app, aqq, apq) = {
                    let (cp, cq) = (&a[p], &a[q]);
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for i in 0..rows {
                        app += cp[i] * cp[i];
                        aqq += cq[i] * cq[i];
                        apq += cp[i] * cq[i];
                    }
                    (app, aqq, apq)
                };
                if app <= floor_sq || aqq <= floor_sq {
                    continue;
                }
                if apq.abs() <= JACOBI_REL_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(CoreError::SvdNoConvergence {
            rows,
            cols: n,
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut norms: Vec<f64> = a
        .iter()
        .map(|col| {
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm <= floor {
                0.0
            } else {
                norm
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut u = DenseMatrix::zeros(rows, n);
    let mut vt = DenseMatrix::zeros(n, n);
    let mut sorted_s = Vec::with_capacity(n);
    for (r, &idx) in order.iter().enumerate() {
        let s = norms[idx];
        sorted_s.push(s);
        if s > 0.0 {
            for i in 0..rows {
                u[(i, r)] = a[idx][i] / s;
            }
        }
        for j in 0..n {
            vt[(r, j)] = v[idx][j];
        }
    }
    norms.clear();

    complete_zero_columns(&mut u, &sorted_s);

    let mut res = SvdResult {
        u,
        singular_values: sorted_s,
        vt,
    };
    fix_signs(&mut res);
    Ok(res)
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for i in 0..cp.len() {
        let xp = cp[i];
        let xq = cq[i];
        cp[i] = c * xp - s * xq;
        cq[i] = s * xp + c * xq;
    }
}

/// Columns of U paired with zero singular values are unconstrained; fill them
/// with an orthonormal completion so U^T U = I still holds.
fn complete_zero_columns(u: &mut DenseMatrix, s: &[f64]) {
    let rows = u.rows();
    let k = s.len();
    for r in 0..k {
        if s[r] > 0.0 {
            continue;
        }
        // Try canonical basis vectors until one survives Gram-Schmidt.
        'candidates: for cand in 0..rows {
            let mut col = vec![0.0; rows];
            col[cand] = 1.0;
            for other in 0..k {
                if other == r || (s[other] == 0.0 && other > r) {
                    continue;
                }
                let mut dot = 0.0;
                for i in 0..rows {
                    dot += col[i] * u[(i, other)];
                }
                for i in 0..rows {
                    col[i] -= dot * u[(i, other)];
                }
            }
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.5 {
                for i in 0..rows {
                    u[(i, r)] = col[i] / norm;
                }
                break 'candidates;
            }
        }
    }
}

/// Force the largest-magnitude entry of each left singular vector non-negative.
fn fix_signs(res: &mut SvdResult) {
    let m = res.u.rows();
    let n = res.vt.cols();
    for r in 0..res.singular_values.len() {
        let mut best = 0usize;
        let mut best_abs = res.u[(0, r)].abs();
        for i in 1..m {
            let a = res.u[(i, r)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if res.u[(best, r)] < 0.0 {
            for i in 0..m {
                res.u[(i, r)] = -res.u[(i, r)];
            }
            for j in 0..n {
                res.vt[(r, j)] = -res.vt[(r, j)];
            }
        }
    }
}

/// Largest singular value, computed through the SVD kernel.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(svd(m)?.singular_values[0])
}

/// `Y - Yhat` on observed entries, 0 elsewhere.
pub fn masked_difference(
    y: &DenseMatrix,
    yhat: &DenseMatrix,
    mask: &ObservationMask,
) -> Result<DenseMatrix> {
    if y.rows() != yhat.rows() || y.cols() != yhat.cols() {
        return Err(CoreError::ShapeMismatch {
            op: "masked_difference",
            left_rows: y.rows(),
            left_cols: y.cols(),
            right_rows: yhat.rows(),
            right_cols: yhat.cols(),
        });
    }
    if y.rows() != mask.rows() || y.cols() != mask.cols() {
        return Err(CoreError::ShapeMismatch {
            op: "masked_difference",
            left_rows: y.rows(),
            left_cols: y.cols(),
            right_rows: mask.rows(),
            right_cols: mask.cols(),
        });
    }
    let mut out = DenseMatrix::zeros(y.rows(), y.cols());
    for i in 0..y.rows() {
        for j in 0..y.cols() {
            if mask.is_observed(i, j) {
                out[(i, j)] = y[(i, j)] - yhat[(i, j)];
            }
        }
    }
    Ok(out)
}
