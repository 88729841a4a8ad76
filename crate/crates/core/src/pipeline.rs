//! Real-data workflow utilities: column standardization, predictor screening
//! by cross-covariance scores, and repeated random train/test splits.

use crate::error::{CoreError, Result};
use crate::matrix::{DenseMatrix, ObservationMask};
use crate::rng::{stream, StreamPurpose};
use crate::tuning::cross_covariance;
use rand::seq::index::sample as index_sample;

/// Column means and standard deviations from a training pass; apply the same
/// transform to test data so its out-of-sample status stays intact.
#[derive(Debug, Clone)]
pub struct StandardizeParams {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Center and scale each column to unit variance over its observed entries
/// (denominator n-1). Unobserved entries are left at zero.
pub fn standardize(
    m: &DenseMatrix,
    mask: Option<&ObservationMask>,
) -> Result<(DenseMatrix, StandardizeParams)> {
    if let Some(mk) = mask {
        if mk.rows() != m.rows() || mk.cols() != m.cols() {
            return Err(CoreError::ShapeMismatch {
                op: "standardize",
                left_rows: m.rows(),
                left_cols: m.cols(),
                right_rows: mk.rows(),
                right_cols: mk.cols(),
            });
        }
    }
    let (rows, cols) = (m.rows(), m.cols());
    let mut means = vec![0.0; cols];
    let mut sds = vec![0.0; cols];
    for j in 0..cols {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..rows {
            if mask.map_or(true, |mk| mk.is_observed(i, j)) {
                sum += m[(i, j)];
                count += 1;
            }
        }
        if count < 2 {
            return Err(CoreError::ZeroVariance { column: j });
        }
        let mean = sum / count as f64;
        let mut ss = 0.0;
        for i in 0..rows {
            if mask.map_or(true, |mk| mk.is_observed(i, j)) {
                let d = m[(i, j)] - mean;
                ss += d * d;
            }
        }
        let sd = (ss / (count - 1) as f64).sqrt();
        if sd == 0.0 {
            return Err(CoreError::ZeroVariance { column: j });
        }
        means[j] = mean;
        sds[j] = sd;
    }
    let mut out = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            if mask.map_or(true, |mk| mk.is_observed(i, j)) {
                out[(i, j)] = (m[(i, j)] - means[j]) / sds[j];
            }
        }
    }
    Ok((out, StandardizeParams { means, sds }))
}

/// Apply a previously computed transform.
pub fn apply_standardization(m: &DenseMatrix, params: &StandardizeParams) -> Result<DenseMatrix> {
    if m.cols() != params.means.len() {
        return Err(CoreError::ShapeMismatch {
            op: "apply_standardization",
            left_rows: m.rows(),
            left_cols: m.cols(),
            right_rows: 1,
            right_cols: params.means.len(),
        });
    }
    let mut out = m.clone();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out[(i, j)] = (m[(i, j)] - params.means[j]) / params.sds[j];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ScreeningResult {
    /// One aggregate score per predictor: the l2 norm of its masked
    /// cross-covariance vector across responses.
    pub scores: Vec<f64>,
    /// Top predictors, sorted by score descending; ties resolve to the lower
    /// column index.
    pub selected_indices: Vec<usize>,
    pub n_selected: usize,
}

/// Rank predictors by the l2 norm of their cross-covariance with the
/// responses and keep the top `n_keep`.
pub fn screen_predictors(
    x: &DenseMatrix,
    y: &DenseMatrix,
    mask: &ObservationMask,
    n_keep: usize,
) -> Result<ScreeningResult> {
    if n_keep == 0 {
        return Err(CoreError::InvalidGrid("n_keep must be >= 1".into()));
    }
    if n_keep > x.cols() {
        return Err(CoreError::InvalidGrid(format!(
            "n_keep = {} exceeds the number of predictors {}",
            n_keep,
            x.cols()
        )));
    }
    let c = cross_covariance(x, y, mask)?;
    let scores: Vec<f64> = (0..x.cols())
        .map(|k| c.row(k).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..x.cols()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    order.truncate(n_keep);
    Ok(ScreeningResult {
        scores,
        selected_indices: order,
        n_selected: n_keep,
    })
}

/// `n_reps` independent draws of `n_test` distinct test rows (without
/// replacement); train rows are the complement. Deterministic under `seed`.
pub fn repeated_splits(
    n: usize,
    n_test: usize,
    n_reps: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if n_test == 0 || n_test >= n {
        return Err(CoreError::InvalidSplit(format!(
            "n_test must satisfy 1 <= n_test < n (got n_test = {n_test}, n = {n})"
        )));
    }
    if n_reps == 0 {
        return Err(CoreError::InvalidSplit("n_reps must be >= 1".into()));
    }
    let mut rng = stream(seed, StreamPurpose::Splits);
    let mut splits = Vec::with_capacity(n_reps);
    for _ in 0..n_reps {
        let mut test: Vec<usize> = index_sample(&mut rng, n, n_test).into_vec();
        test.sort_unstable();
        let mut in_test = vec![false; n];
        for &t in &test {
            in_test[t] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        splits.push((train, test));
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamPurpose};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn standardize_two_point_column() {
        let m = DenseMatrix::from_vec(2, 1, vec![1.0, 3.0]).unwrap();
        let (out, params) = standardize(&m, None).unwrap();
        let expect = 1.0 / 2.0f64.sqrt();
        assert!((out[(0, 0)] + expect).abs() < 1e-12);
        assert!((out[(1, 0)] - expect).abs() < 1e-12);
        assert!((params.means[0] - 2.0).abs() < 1e-15);
        assert!((params.sds[0] - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn standardize_is_idempotent() {
        let m = crate::matrix::tests_support::random(20, 3, 41);
        let (once, _) = standardize(&m, None).unwrap();
        let (twice, _) = standardize(&once, None).unwrap();
        assert!(once.frobenius_distance(&twice).unwrap() < 1e-12);
    }

    #[test]
    fn constant_column_is_an_error() {
        let m = DenseMatrix::from_vec(3, 2, vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0]).unwrap();
        match standardize(&m, None) {
            Err(CoreError::ZeroVariance { column: 1 }) => {}
            other => panic!("expected zero-variance on column 1, got {other:?}"),
        }
    }

    #[test]
    fn masked_standardization_uses_observed_entries_only() {
        let m = DenseMatrix::from_vec(3, 1, vec![1.0, 3.0, 1000.0]).unwrap();
        let mask = ObservationMask::new(3, 1, vec![true, true, false]).unwrap();
        let (out, params) = standardize(&m, Some(&mask)).unwrap();
        assert!((params.means[0] - 2.0).abs() < 1e-15);
        assert_eq!(out[(2, 0)], 0.0);
    }

    #[test]
    fn train_params_apply_to_test_without_leakage() {
        let train = crate::matrix::tests_support::random(30, 4, 61);
        let test = crate::matrix::tests_support::random(10, 4, 62);
        let (_, params) = standardize(&train, None).unwrap();
        let test_std = apply_standardization(&test, &params).unwrap();
        for j in 0..4 {
            assert!((test_std[(0, j)] - (test[(0, j)] - params.means[j]) / params.sds[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn planted_predictor_screens_first() {
        let mut rng = stream(71, StreamPurpose::Design);
        let n = 50;
        let q = 10;
        let mut y = DenseMatrix::zeros(n, q);
        for i in 0..n {
            for j in 0..q {
                y[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let mut x = DenseMatrix::zeros(n, 8);
        for i in 0..n {
            for j in 0..8 {
                x[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        // Predictor 3 duplicates response 0.
        for i in 0..n {
            x[(i, 3)] = y[(i, 0)];
        }
        let (xs, _) = standardize(&x, None).unwrap();
        let (ys, _) = standardize(&y, None).unwrap();
        let mask = ObservationMask::fully_observed(n, q);
        let res = screen_predictors(&xs, &ys, &mask, 4).unwrap();
        assert_eq!(res.selected_indices[0], 3);
        assert_eq!(res.n_selected, 4);
    }

    #[test]
    fn zero_responses_fall_back_to_index_order() {
        let x = crate::matrix::tests_support::random(10, 5, 81);
        let y = DenseMatrix::zeros(10, 3);
        let mask = ObservationMask::fully_observed(10, 3);
        let res = screen_predictors(&x, &y, &mask, 3).unwrap();
        assert!(res.scores.iter().all(|&s| s == 0.0));
        assert_eq!(res.selected_indices, vec![0, 1, 2]);
    }

    #[test]
    fn keep_all_predictors() {
        let x = crate::matrix::tests_support::random(10, 4, 82);
        let y = crate::matrix::tests_support::random(10, 2, 83);
        let mask = ObservationMask::fully_observed(10, 2);
        let res = screen_predictors(&x, &y, &mask, 4).unwrap();
        let mut sorted = res.selected_indices.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        assert!(screen_predictors(&x, &y, &mask, 5).is_err());
        assert!(screen_predictors(&x, &y, &mask, 0).is_err());
    }

    #[test]
    fn screening_is_invariant_to_response_order() {
        let x = crate::matrix::tests_support::random(15, 5, 84);
        let y = crate::matrix::tests_support::random(15, 3, 85);
        let mask = ObservationMask::fully_observed(15, 3);
        // Swap response columns 0 and 2.
        let mut y_perm = y.clone();
        for i in 0..15 {
            let tmp = y_perm[(i, 0)];
            y_perm[(i, 0)] = y_perm[(i, 2)];
            y_perm[(i, 2)] = tmp;
        }
        let a = screen_predictors(&x, &y, &mask, 5).unwrap();
        let b = screen_predictors(&x, &y_perm, &mask, 5).unwrap();
        for (sa, sb) in a.scores.iter().zip(&b.scores) {
            assert!((sa - sb).abs() < 1e-12);
        }
        assert_eq!(a.selected_indices, b.selected_indices);
    }

    #[test]
    fn splits_partition_the_rows() {
        let splits = repeated_splits(10, 9, 5, 3).unwrap();
        assert_eq!(splits.len(), 5);
        for (train, test) in &splits {
            assert_eq!(train.len(), 1);
            assert_eq!(test.len(), 9);
            let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn splits_are_seed_deterministic() {
        let a = repeated_splits(20, 6, 4, 11).unwrap();
        let b = repeated_splits(20, 6, 4, 11).unwrap();
        assert_eq!(a, b);
        let c = repeated_splits(20, 6, 4, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_preconditions() {
        assert!(repeated_splits(5, 5, 1, 0).is_err());
        assert!(repeated_splits(5, 0, 1, 0).is_err());
        assert!(repeated_splits(5, 2, 0, 0).is_err());
    }
}
