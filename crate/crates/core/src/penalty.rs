//! Scalar and spectral proximal maps for MCP, SCAD, and the nuclear norm.
//!
//! Two prox flavors live here and the distinction matters:
//!
//! * [`scalar_prox`] / [`spectral_prox`]: firm thresholding with the penalty's
//!   lambda replaced by `scale * lambda` and eta unchanged. This is the
//!   operator `prox(s; alpha*lambda)` written in the reference update rule.
//! * [`scaled_prox`] / [`spectral_prox_scaled`]: the exact global minimizer of
//!   `(x - z)^2 / 2 + step * rho(|x|)` for the *unmodified* penalty. For the
//!   nuclear norm the two coincide; for MCP/SCAD they differ whenever
//!   `step != 1` because `step * rho_{lambda,eta}` is not itself an MCP/SCAD
//!   penalty with lambda rescaled. The solver uses the scaled flavor: it is
//!   the one for which the majorize-minimize argument guarantees a monotone
//!   objective trace.

use crate::error::{CoreError, Result};
use crate::matrix::{svd, DenseMatrix};

pub const DEFAULT_MCP_ETA: f64 = 3.0;
pub const DEFAULT_SCAD_ETA: f64 = 3.7;

/// Margin under which eta values are rejected as too close to the concavity
/// bound: the closed forms assume a strongly convex scalar subproblem.
const ETA_BOUND_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyFamily {
    Mcp,
    Scad,
    Nuclear,
}

impl PenaltyFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PenaltyFamily::Mcp => "mcp",
            PenaltyFamily::Scad => "scad",
            PenaltyFamily::Nuclear => "nuclear",
        }
    }
}

impl std::str::FromStr for PenaltyFamily {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcp" => Ok(PenaltyFamily::Mcp),
            "scad" => Ok(PenaltyFamily::Scad),
            "nuclear" | "nucl" => Ok(PenaltyFamily::Nuclear),
            other => Err(CoreError::InvalidPenalty(format!(
                "unknown penalty family '{other}' (expected mcp, scad, or nuclear)"
            ))),
        }
    }
}

/// Penalty family with strength `lambda` and concavity `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub family: PenaltyFamily,
    pub lambda: f64,
    pub eta: f64,
}

impl PenaltySpec {
    pub fn new(family: PenaltyFamily, lambda: f64, eta: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(CoreError::InvalidPenalty(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        match family {
            PenaltyFamily::Mcp => {
                if !(eta > 1.0 + ETA_BOUND_MARGIN) {
                    return Err(CoreError::InvalidPenalty(format!(
                        "MCP requires eta > 1, got {eta}"
                    )));
                }
            }
            PenaltyFamily::Scad => {
                if !(eta > 2.0 + ETA_BOUND_MARGIN) {
                    return Err(CoreError::InvalidPenalty(format!(
                        "SCAD requires eta > 2, got {eta}"
                    )));
                }
            }
            PenaltyFamily::Nuclear => {}
        }
        Ok(Self {
            family,
            lambda,
            eta,
        })
    }

    pub fn mcp(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Mcp, lambda, DEFAULT_MCP_ETA)
    }

    pub fn scad(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Scad, lambda, DEFAULT_SCAD_ETA)
    }

    pub fn nuclear(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Nuclear, lambda, 0.0)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.family, lambda, self.eta)
    }
}

/// Penalty value rho(t) at t >= 0: linear-then-flat for MCP, linear-quadratic-
/// flat for SCAD, and lambda*t for the nuclear norm.
pub fn penalty_value(t: f64, spec: &PenaltySpec) -> f64 {
    debug_assert!(t >= 0.0, "penalty_value expects t >= 0, got {t}");
    let (lam, eta) = (spec.lambda, spec.eta);
    match spec.family {
        PenaltyFamily::Nuclear => lam * t,
        PenaltyFamily::Mcp => {
            if t <= eta * lam {
                lam * t - t * t / (2.0 * eta)
            } else {
                0.5 * eta * lam * lam
            }
        }
        PenaltyFamily::Scad => {
            if t <= lam {
                lam * t
            } else if t <= eta * lam {
                (-t * t + 2.0 * eta * lam * t - lam * lam) / (2.0 * (eta - 1.0))
            } else {
                (eta + 1.0) * lam * lam / 2.0
            }
        }
    }
}

/// Firm thresholding with lambda replaced by `scale * lambda`, eta unchanged.
/// Zone boundaries belong to the lower branch; the branches agree there by
/// continuity.
pub fn scalar_prox(z: f64, spec: &PenaltySpec, scale: f64) -> f64 {
    debug_assert!(scale > 0.0);
    let lam = scale * spec.lambda;
    let eta = spec.eta;
    let az = z.abs();
    let sign = if z < 0.0 { -1.0 } else { 1.0 };
    match spec.family {
        PenaltyFamily::Nuclear => sign * (az - lam).max(0.0),
        PenaltyFamily::Mcp => {
            if az <= lam {
                0.0
            } else if az <= eta * lam {
                sign * eta * (az - lam) / (eta - 1.0)
            } else {
                z
            }
        }
        PenaltyFamily::Scad => {
            if az <= lam {
                0.0
            } else if az <= 2.0 * lam {
                sign * (az - lam)
            } else if az <= eta * lam {
                sign * ((eta - 1.0) * az - eta * lam) / (eta - 2.0)
            } else {
                z
            }
        }
    }
}

/// Exact prox of the step-scaled penalty: the global minimizer of
/// `(x - z)^2 / 2 + step * rho(|x|)`.
///
/// The objective is piecewise quadratic in |x|, so the minimizer is among the
/// per-zone stationary points and the zone boundaries; all candidates are
/// enumerated and compared, which stays correct even when a large step makes
/// a zone subproblem concave. Ties resolve to the smallest |x|.
pub fn scaled_prox(z: f64, spec: &PenaltySpec, step: f64) -> f64 {
    debug_assert!(step > 0.0);
    if z < 0.0 {
        return -scaled_prox(-z, spec, step);
    }
    let (lam, eta) = (spec.lambda, spec.eta);
    if spec.family == PenaltyFamily::Nuclear {
        return (z - step * lam).max(0.0);
    }
    if lam == 0.0 {
        return z;
    }

    let objective = |x: f64| 0.5 * (x - z) * (x - z) + step * penalty_value(x, spec);
    let mut candidates = [0.0f64; 6];
    let mut len = 1usize;
    let mut push = |buf: &mut [f64; 6], len: &mut usize, v: f64| {
        buf[*len] = v;
        *len += 1;
    };
    match spec.family {
        PenaltyFamily::Mcp => {
            let denom = eta - step;
            if denom > 0.0 {
                let x1 = eta * (z - step * lam) / denom;
                if x1 > 0.0 && x1 <= eta * lam {
                    push(&mut candidates, &mut len, x1);
                }
            }
            push(&mut candidates, &mut len, eta * lam);
            if z > eta * lam {
                push(&mut candidates, &mut len, z);
            }
        }
        PenaltyFamily::Scad => {
            let soft = z - step * lam;
            if soft > 0.0 && soft <= lam {
                push(&mut candidates, &mut len, soft);
            }
            let denom = eta - 1.0 - step;
            if denom > 0.0 {
                let x2 = ((eta - 1.0) * z - step * eta * lam) / denom;
                if x2 > lam && x2 <= eta * lam {
                    push(&mut candidates, &mut len, x2);
                }
            }
            push(&mut candidates, &mut len, lam);
            push(&mut candidates, &mut len, eta * lam);
            if z > eta * lam {
                push(&mut candidates, &mut len, z);
            }
        }
        PenaltyFamily::Nuclear => unreachable!(),
    }
    let candidates = &mut candidates[..len];
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = candidates[0];
    let mut best_val = objective(best);
    for &c in &candidates[1..] {
        let v = objective(c);
        if v < best_val {
            best_val = v;
            best = c;
        }
    }
    best
}

/// Apply `scalar_prox` to the singular values of M and reconstruct. Returns
/// the matrix and the post-threshold spectrum (reused for rank reporting).
pub fn spectral_prox(
    m: &DenseMatrix,
    spec: &PenaltySpec,
    scale: f64,
) -> Result<(DenseMatrix, Vec<f64>)> {
    spectral_apply(m, |s| scalar_prox(s, spec, scale))
}

/// Apply `scaled_prox` to the singular values of M and reconstruct; this is
/// the spectral prox of `step * R` used inside the solver.
pub fn spectral_prox_scaled(
    m: &DenseMatrix,
    spec: &PenaltySpec,
    step: f64,
) -> Result<(DenseMatrix, Vec<f64>)> {
    spectral_apply(m, |s| scaled_prox(s, spec, step))
}

fn spectral_apply<F: Fn(f64) -> f64>(
    m: &DenseMatrix,
    thresh: F,
) -> Result<(DenseMatrix, Vec<f64>)> {
    let decomp = svd(m)?;
    let shrunk: Vec<f64> = decomp.singular_values.iter().map(|&s| thresh(s)).collect();
    debug_assert!(
        shrunk.windows(2).all(|w| w[0] >= w[1]),
        "monotone thresholding must preserve the descending order"
    );
    let out = decomp.recompose_with(&shrunk);
    Ok((out, shrunk))
}

/// R(M) = sum of rho over the singular values of M.
pub fn penalty_of_matrix(m: &DenseMatrix, spec: &PenaltySpec) -> Result<f64> {
    let decomp = svd(m)?;
    Ok(decomp
        .singular_values
        .iter()
        .map(|&s| penalty_value(s, spec))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mcp(lam: f64, eta: f64) -> PenaltySpec {
        PenaltySpec::new(PenaltyFamily::Mcp, lam, eta).unwrap()
    }
    fn scad(lam: f64, eta: f64) -> PenaltySpec {
        PenaltySpec::new(PenaltyFamily::Scad, lam, eta).unwrap()
    }
    fn nuclear(lam: f64) -> PenaltySpec {
        PenaltySpec::nuclear(lam).unwrap()
    }

    /// Brute-force minimizer of (x-z)^2/2 + rho(|x|; spec') with lambda
    /// replaced by lam_eff: coarse grid, then 1e-5 refinement around the
    /// coarse winner and the closed-form candidate.
    fn grid_oracle(z: f64, family: PenaltyFamily, lam_eff: f64, eta: f64, closed: f64) -> f64 {
        let spec = PenaltySpec::new(family, lam_eff, eta).unwrap();
        let f = |x: f64| 0.5 * (x - z) * (x - z) + penalty_value(x.abs(), &spec);
        let lo = -z.abs() - 1.0;
        let hi = z.abs() + 1.0;
        let coarse_step = 1e-3;
        let mut best_x = lo;
        let mut best_v = f(lo);
        let mut x = lo;
        while x <= hi {
            let v = f(x);
            if v < best_v {
                best_v = v;
                best_x = x;
            }
            x += coarse_step;
        }
        for center in [best_x, closed] {
            let mut y = center - 2.0 * coarse_step;
            while y <= center + 2.0 * coarse_step {
                let v = f(y);
                if v < best_v {
                    best_v = v;
                    best_x = y;
                }
                y += 1e-5;
            }
        }
        best_x
    }

    #[test]
    fn spec_validation() {
        assert!(PenaltySpec::new(PenaltyFamily::Mcp, 1.0, 1.0).is_err());
        assert!(PenaltySpec::new(PenaltyFamily::Mcp, 1.0, 1.0 + 1e-9).is_err());
        assert!(PenaltySpec::new(PenaltyFamily::Scad, 1.0, 2.0).is_err());
        assert!(PenaltySpec::new(PenaltyFamily::Scad, 1.0, -3.0).is_err());
        assert!(PenaltySpec::new(PenaltyFamily::Mcp, -0.1, 3.0).is_err());
        assert!(PenaltySpec::new(PenaltyFamily::Nuclear, 0.0, f64::NAN).is_ok());
    }

    #[test]
    fn penalty_value_examples() {
        assert_eq!(penalty_value(0.0, &mcp(1.0, 3.0)), 0.0);
        assert_eq!(penalty_value(0.0, &scad(1.0, 3.7)), 0.0);
        assert_eq!(penalty_value(0.0, &nuclear(2.0)), 0.0);
        // Plateaus.
        assert!((penalty_value(10.0, &mcp(1.0, 3.0)) - 1.5).abs() < 1e-15);
        assert!((penalty_value(10.0, &scad(1.0, 3.7)) - 2.35).abs() < 1e-12);
        assert_eq!(penalty_value(10.0, &nuclear(0.5)), 5.0);
    }

    #[test]
    fn penalty_value_is_continuous_and_monotone() {
        for spec in [mcp(0.8, 3.0), scad(0.8, 3.7)] {
            let knots = [spec.lambda, 2.0 * spec.lambda, spec.eta * spec.lambda];
            for k in knots {
                let below = penalty_value(k - 1e-9, &spec);
                let above = penalty_value(k + 1e-9, &spec);
                assert!((below - above).abs() < 1e-7, "jump at {k}");
            }
            let mut prev = 0.0;
            let mut t = 0.0;
            while t < 5.0 {
                let v = penalty_value(t, &spec);
                assert!(v + 1e-12 >= prev, "not monotone at {t}");
                prev = v;
                t += 0.01;
            }
        }
    }

    #[test]
    fn scalar_prox_spec_examples() {
        assert_eq!(scalar_prox(0.5, &mcp(1.0, 3.0), 1.0), 0.0);
        assert!((scalar_prox(2.0, &mcp(1.0, 3.0), 1.0) - 1.5).abs() < 1e-15);
        assert_eq!(scalar_prox(5.0, &mcp(1.0, 3.0), 1.0), 5.0);
        assert!((scalar_prox(1.5, &scad(1.0, 3.7), 1.0) - 0.5).abs() < 1e-15);
        let expected = (2.7 * 3.0 - 3.7) / 1.7;
        assert!((scalar_prox(3.0, &scad(1.0, 3.7), 1.0) - expected).abs() < 1e-12);
        assert!((scalar_prox(-2.0, &nuclear(1.0), 0.5) - (-1.5)).abs() < 1e-15);
    }

    #[test]
    fn scalar_prox_scale_applies_to_lambda() {
        // scale * lambda = 1.0 either way.
        let a = scalar_prox(2.0, &mcp(2.0, 3.0), 0.5);
        let b = scalar_prox(2.0, &mcp(1.0, 3.0), 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn scalar_prox_matches_grid_oracle() {
        let cases = [
            (PenaltyFamily::Mcp, 3.0),
            (PenaltyFamily::Scad, 3.7),
            (PenaltyFamily::Nuclear, 0.0),
        ];
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for (family, eta0) in cases {
            for _ in 0..60 {
                let z = next() * 20.0 - 10.0;
                let lam_eff = next() * 2.9 + 0.1;
                let eta = match family {
                    PenaltyFamily::Mcp => 1.2 + next() * 3.0,
                    PenaltyFamily::Scad => 2.2 + next() * 3.0,
                    PenaltyFamily::Nuclear => eta0,
                };
                let spec = PenaltySpec::new(family, lam_eff, eta).unwrap();
                let closed = scalar_prox(z, &spec, 1.0);
                let oracle = grid_oracle(z, family, lam_eff, eta, closed);
                assert!(
                    (closed - oracle).abs() <= 1e-4,
                    "{family:?} z={z} lam={lam_eff} eta={eta}: closed {closed} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn firm_thresholding_interpolates_soft_and_identity() {
        let lam = 0.9;
        for z in [-6.0, -2.3, -1.0, -0.4, 0.0, 0.7, 1.3, 2.6, 8.0] {
            let soft = scalar_prox(z, &nuclear(lam), 1.0);
            for spec in [mcp(lam, 3.0), scad(lam, 3.7)] {
                let firm = scalar_prox(z, &spec, 1.0);
                assert!(soft.abs() <= firm.abs() + 1e-12);
                assert!(firm.abs() <= z.abs() + 1e-12);
                // Odd in z.
                assert_eq!(firm, -scalar_prox(-z, &spec, 1.0));
                // Exact identity past eta * lambda.
                if z.abs() > spec.eta * lam {
                    assert_eq!(firm, z);
                }
            }
        }
    }

    #[test]
    fn scalar_prox_is_monotone() {
        for spec in [mcp(1.0, 3.0), scad(1.0, 3.7), nuclear(1.0)] {
            let mut prev = f64::NEG_INFINITY;
            let mut z = -8.0;
            while z <= 8.0 {
                let v = scalar_prox(z, &spec, 0.7);
                assert!(v >= prev - 1e-12, "{:?} not monotone at {z}", spec.family);
                prev = v;
                z += 0.01;
            }
        }
    }

    #[test]
    fn scaled_prox_minimizes_scaled_objective() {
        // Against a brute-force 1-D grid on (x-z)^2/2 + step * rho(|x|).
        let mut state = 0xc0ffee123456789u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for family in [PenaltyFamily::Mcp, PenaltyFamily::Scad, PenaltyFamily::Nuclear] {
            for _ in 0..40 {
                let z = next() * 16.0 - 8.0;
                let lam = next() * 2.0 + 0.05;
                let eta = match family {
                    PenaltyFamily::Mcp => 1.3 + next() * 3.0,
                    PenaltyFamily::Scad => 2.3 + next() * 3.0,
                    PenaltyFamily::Nuclear => 0.0,
                };
                let step = 0.05 + next() * 2.5;
                let spec = PenaltySpec::new(family, lam, eta).unwrap();
                let x_star = scaled_prox(z, &spec, step);
                let f = |x: f64| 0.5 * (x - z) * (x - z) + step * penalty_value(x.abs(), &spec);
                let fv = f(x_star);
                let mut x = -z.abs() - 1.0;
                while x <= z.abs() + 1.0 {
                    assert!(
                        fv <= f(x) + 1e-9,
                        "{family:?} z={z} lam={lam} eta={eta} step={step}: f({x_star})={fv} > f({x})={}",
                        f(x)
                    );
                    x += 1e-3;
                }
            }
        }
    }

    #[test]
    fn scaled_prox_reduces_to_scalar_prox_at_unit_step() {
        for spec in [mcp(0.8, 3.0), scad(0.8, 3.7), nuclear(0.8)] {
            for z in [-5.0, -1.1, 0.3, 0.9, 1.7, 4.0] {
                let a = scaled_prox(z, &spec, 1.0);
                let b = scalar_prox(z, &spec, 1.0);
                assert!((a - b).abs() < 1e-12, "{:?} z={z}: {a} vs {b}", spec.family);
            }
        }
    }

    #[test]
    fn spectral_prox_examples() {
        let zero = DenseMatrix::zeros(3, 3);
        let (out, s) = spectral_prox(&zero, &mcp(1.0, 3.0), 1.0).unwrap();
        assert!(out.is_zero());
        assert_eq!(s, vec![0.0; 3]);

        // Zero lambda: identity.
        let m = crate::matrix::tests_support::random(4, 3, 17);
        let (out, _) = spectral_prox(&m, &mcp(0.0, 3.0), 1.0).unwrap();
        assert!(out.frobenius_distance(&m).unwrap() < 1e-12);

        // diag(5, 2, 0.5) under MCP at lambda' = 1: diag(5, 1.5, 0).
        let mut d = DenseMatrix::zeros(3, 3);
        d[(0, 0)] = 5.0;
        d[(1, 1)] = 2.0;
        d[(2, 2)] = 0.5;
        let (out, s) = spectral_prox(&d, &mcp(1.0, 3.0), 1.0).unwrap();
        assert!((s[0] - 5.0).abs() < 1e-12);
        assert!((s[1] - 1.5).abs() < 1e-12);
        assert!(s[2].abs() < 1e-12);
        assert!((out[(0, 0)] - 5.0).abs() < 1e-10);
        assert!((out[(1, 1)] - 1.5).abs() < 1e-10);
        assert!(out[(2, 2)].abs() < 1e-10);
    }

    #[test]
    fn spectral_prox_never_increases_rank_or_singular_values() {
        let m = crate::matrix::tests_support::random(6, 5, 23);
        let before = svd(&m).unwrap().singular_values;
        for spec in [mcp(0.5, 3.0), scad(0.5, 3.7), nuclear(0.5)] {
            let (_, after) = spectral_prox(&m, &spec, 0.8).unwrap();
            for (b, a) in before.iter().zip(&after) {
                assert!(a <= b);
            }
            let rank_before = before.iter().filter(|&&s| s > 1e-12).count();
            let rank_after = after.iter().filter(|&&s| s > 1e-12).count();
            assert!(rank_after <= rank_before);
        }
    }

    #[test]
    fn penalty_of_matrix_examples() {
        let zero = DenseMatrix::zeros(2, 3);
        assert_eq!(penalty_of_matrix(&zero, &mcp(1.0, 3.0)).unwrap(), 0.0);

        // Rank-1 with sigma_1 = 10.
        let mut r1 = DenseMatrix::zeros(2, 2);
        r1[(0, 0)] = 10.0;
        assert!((penalty_of_matrix(&r1, &mcp(1.0, 3.0)).unwrap() - 1.5).abs() < 1e-12);

        let mut d = DenseMatrix::zeros(2, 2);
        d[(0, 0)] = 2.0;
        d[(1, 1)] = 3.0;
        assert!((penalty_of_matrix(&d, &nuclear(1.0)).unwrap() - 5.0).abs() < 1e-12);
    }
}
