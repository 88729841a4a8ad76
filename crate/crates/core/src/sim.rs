//! Seeded data generation for the simulation scenarios, per-replicate
//! metrics, and the replicate sweep that aggregates them.
//!
//! Every stochastic ingredient (design, factors, noise, mask, contamination,
//! test data) draws from its own RNG stream derived from the scenario seed,
//! so toggling one ingredient never changes the draws of the others.
//! Replicate r of a sweep uses `base_seed + r`.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::loss::HuberParam;
use crate::matrix::{svd, DenseMatrix, ObservationMask};
use crate::penalty::{PenaltySpec, DEFAULT_MCP_ETA, DEFAULT_SCAD_ETA};
use crate::rng::{stream, StreamPurpose};
use crate::solver::{estimated_rank, predict, FitConfig, DEFAULT_RANK_TOL_REL};
use crate::tuning::{
    cross_validate, TuningGrid, DEFAULT_CV_WINDOW, DEFAULT_K_FOLDS, DEFAULT_LAMBDA_MIN,
    DEFAULT_N_LAMBDA, DEFAULT_TAU_GRID,
};

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, StudentT};

pub const DEFAULT_N_TEST: usize = 5000;
pub const DEFAULT_OUTLIER_SD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignSpec {
    IidGaussian,
    /// Rows drawn from N(0, Sigma) with Sigma_ij = rho^|i-j|.
    Ar1 { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContaminationMode {
    /// Add a N(0, sd^2) shock to each chosen entry.
    Additive,
    /// Replace each chosen entry with a N(0, sd^2) draw.
    Replace,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Gaussian { sd: f64 },
    /// scale * t_df; variance scale^2 * df / (df - 2) for df > 2.
    ScaledT { df: f64, scale: f64 },
    /// Standard Cauchy via inverse CDF, tan(pi * (u - 1/2)).
    Cauchy,
    Contaminated {
        base: Box<NoiseSpec>,
        fraction: f64,
        outlier_sd: f64,
        mode: ContaminationMode,
    },
}

impl NoiseSpec {
    fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Gaussian { sd } => {
                if !(*sd >= 0.0) {
                    return Err(CoreError::InvalidScenario(format!(
                        "gaussian sd must be non-negative, got {sd}"
                    )));
                }
            }
            NoiseSpec::ScaledT { df, scale } => {
                if !(*df > 0.0) {
                    return Err(CoreError::InvalidScenario(format!(
                        "t degrees of freedom must be positive, got {df}"
                    )));
                }
                if !(*scale > 0.0) {
                    return Err(CoreError::InvalidScenario(format!(
                        "t scale must be positive, got {scale}"
                    )));
                }
            }
            NoiseSpec::Cauchy => {}
            NoiseSpec::Contaminated {
                base,
                fraction,
                outlier_sd,
                ..
            } => {
                if matches!(**base, NoiseSpec::Contaminated { .. }) {
                    return Err(CoreError::InvalidScenario(
                        "contaminated base noise cannot itself be contaminated".into(),
                    ));
                }
                base.validate()?;
                if !(*fraction >= 0.0 && *fraction < 1.0) {
                    return Err(CoreError::InvalidScenario(format!(
                        "contamination fraction must lie in [0, 1), got {fraction}"
                    )));
                }
                if !(*outlier_sd > 0.0) {
                    return Err(CoreError::InvalidScenario(format!(
                        "outlier sd must be positive, got {outlier_sd}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The uncontaminated noise family (test sets are never contaminated).
    fn base(&self) -> &NoiseSpec {
        match self {
            NoiseSpec::Contaminated { base, .. } => base,
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub design: DesignSpec,
    pub noise: NoiseSpec,
    pub missing_fraction: f64,
    pub n_test: usize,
    pub seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.q == 0 || self.r == 0 || self.n_test == 0 {
            return Err(CoreError::InvalidScenario(
                "n, p, q, r, n_test must all be positive".into(),
            ));
        }
        if self.r > self.p.min(self.q) {
            return Err(CoreError::InvalidScenario(format!(
                "rank r = {} exceeds min(p, q) = {}",
                self.r,
                self.p.min(self.q)
            )));
        }
        if let DesignSpec::Ar1 { rho } = self.design {
            if !(rho > -1.0 && rho < 1.0) {
                return Err(CoreError::InvalidScenario(format!(
                    "ar1 rho must lie in (-1, 1), got {rho}"
                )));
            }
        }
        if !(self.missing_fraction >= 0.0 && self.missing_fraction < 1.0) {
            return Err(CoreError::InvalidScenario(format!(
                "missing fraction must lie in [0, 1), got {}",
                self.missing_fraction
            )));
        }
        self.noise.validate()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        s
    }
}

/// Everything one replicate needs: training data with its mask, the truth,
/// and a test set in both noiseless (diagnostics) and fresh-noise (MSPE)
/// variants.
#[derive(Debug, Clone)]
pub struct SimData {
    pub x_train: DenseMatrix,
    pub y_train: DenseMatrix,
    pub mask: ObservationMask,
    pub b0: DenseMatrix,
    pub x_test: DenseMatrix,
    pub y_test_clean: DenseMatrix,
    pub y_test_noisy: DenseMatrix,
}

fn standard_cauchy(rng: &mut ChaCha8Rng) -> f64 {
    // Inverse CDF keeps draws reproducible across platforms; u = 0 would hit
    // the pole, so it is rejected.
    loop {
        let u: f64 = rng.gen();
        if u != 0.0 {
            return (std::f64::consts::PI * (u - 0.5)).tan();
        }
    }
}

fn draw_noise(spec: &NoiseSpec, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    match spec {
        NoiseSpec::Gaussian { sd } => {
            for i in 0..rows {
                for j in 0..cols {
                    let z: f64 = rng.sample(StandardNormal);
                    m[(i, j)] = sd * z;
                }
            }
        }
        NoiseSpec::ScaledT { df, scale } => {
            let t = StudentT::new(*df).expect("validated df");
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = scale * t.sample(rng);
                }
            }
        }
        NoiseSpec::Cauchy => {
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = standard_cauchy(rng);
                }
            }
        }
        NoiseSpec::Contaminated { base, .. } => {
            return draw_noise(base, rows, cols, rng);
        }
    }
    m
}

fn draw_design(spec: DesignSpec, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    match spec {
        DesignSpec::IidGaussian => {
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = rng.sample(StandardNormal);
                }
            }
        }
        DesignSpec::Ar1 { rho } => {
            // x_1 = z_1, x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j gives the
            // stationary AR(1) covariance rho^|i-j| exactly.
            let innov = (1.0 - rho * rho).sqrt();
            for i in 0..rows {
                let mut prev = 0.0;
                for j in 0..cols {
                    let z: f64 = rng.sample(StandardNormal);
                    let v = if j == 0 { z } else { rho * prev + innov * z };
                    m[(i, j)] = v;
                    prev = v;
                }
            }
        }
    }
    m
}

fn contaminate_with(
    m: &DenseMatrix,
    fraction: f64,
    outlier_sd: f64,
    mode: ContaminationMode,
    rng: &mut ChaCha8Rng,
) -> Result<DenseMatrix> {
    if !(fraction >= 0.0 && fraction < 1.0) {
        return Err(CoreError::InvalidScenario(format!(
            "contamination fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let total = m.rows() * m.cols();
    let count = ((fraction * total as f64).round() as usize).min(total.saturating_sub(1));
    let mut out = m.clone();
    if count == 0 {
        return Ok(out);
    }
    let mut chosen: Vec<usize> = index_sample(rng, total, count).into_vec();
    chosen.sort_unstable();
    let normal = Normal::new(0.0, outlier_sd).expect("validated sd");
    for idx in chosen {
        let (i, j) = (idx / m.cols(), idx % m.cols());
        let shock = normal.sample(rng);
        out[(i, j)] = match mode {
            ContaminationMode::Additive => out[(i, j)] + shock,
            ContaminationMode::Replace => shock,
        };
    }
    Ok(out)
}

/// Inject outliers into a uniformly chosen, exactly-round(fraction * total)
/// sized subset of entries.
pub fn apply_contamination(
    m: &DenseMatrix,
    fraction: f64,
    outlier_sd: f64,
    seed: u64,
    mode: ContaminationMode,
) -> Result<DenseMatrix> {
    let mut rng = stream(seed, StreamPurpose::Contamination);
    contaminate_with(m, fraction, outlier_sd, mode, &mut rng)
}

/// Generate one replicate of a scenario. Deterministic in the scenario
/// (including its seed).
pub fn generate(scenario: &SimScenario) -> Result<SimData> {
    scenario.validate()?;
    let seed = scenario.seed;
    let (n, p, q, r) = (scenario.n, scenario.p, scenario.q, scenario.r);

    let x_train = draw_design(scenario.design, n, p, &mut stream(seed, StreamPurpose::Design));

    let mut factors = stream(seed, StreamPurpose::Factors);
    let u0 = draw_design(DesignSpec::IidGaussian, p, r, &mut factors);
    let v0 = draw_design(DesignSpec::IidGaussian, q, r, &mut factors);
    let b0 = u0.matmul(&v0.transpose())?;

    let noise = draw_noise(
        &scenario.noise,
        n,
        q,
        &mut stream(seed, StreamPurpose::Noise),
    );
    let mut y_train = x_train.matmul(&b0)?;
    for i in 0..n {
        for j in 0..q {
            y_train[(i, j)] += noise[(i, j)];
        }
    }
    if let NoiseSpec::Contaminated {
        fraction,
        outlier_sd,
        mode,
        ..
    } = &scenario.noise
    {
        let mut rng = stream(seed, StreamPurpose::Contamination);
        y_train = contaminate_with(&y_train, *fraction, *outlier_sd, *mode, &mut rng)?;
    }

    let mask = if scenario.missing_fraction > 0.0 {
        let total = n * q;
        let count = ((scenario.missing_fraction * total as f64).round() as usize)
            .min(total.saturating_sub(1));
        let mut observed = vec![true; total];
        let mut rng = stream(seed, StreamPurpose::Mask);
        for idx in index_sample(&mut rng, total, count) {
            observed[idx] = false;
        }
        ObservationMask::new(n, q, observed)?
    } else {
        ObservationMask::fully_observed(n, q)
    };

    let x_test = draw_design(
        scenario.design,
        scenario.n_test,
        p,
        &mut stream(seed, StreamPurpose::TestDesign),
    );
    let y_test_clean = x_test.matmul(&b0)?;
    let test_noise = draw_noise(
        scenario.noise.base(),
        scenario.n_test,
        q,
        &mut stream(seed, StreamPurpose::TestNoise),
    );
    let mut y_test_noisy = y_test_clean.clone();
    for i in 0..scenario.n_test {
        for j in 0..q {
            y_test_noisy[(i, j)] += test_noise[(i, j)];
        }
    }

    Ok(SimData {
        x_train,
        y_train,
        mask,
        b0,
        x_test,
        y_test_clean,
        y_test_noisy,
    })
}

/// Stand-in dataset for the real-data pipeline: iid Gaussian predictors, a
/// rank-`r` coefficient matrix with standard-normal factors, Gaussian noise.
/// Lets the pipeline run end-to-end without bundling external data.
pub fn synthetic_dataset(
    n: usize,
    p: usize,
    q: usize,
    r: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if n == 0 || p == 0 || q == 0 || r == 0 || r > p.min(q) {
        return Err(CoreError::InvalidScenario(format!(
            "synthetic dataset needs positive n, p, q and r <= min(p, q); got n={n} p={p} q={q} r={r}"
        )));
    }
    if !(noise_sd >= 0.0) {
        return Err(CoreError::InvalidScenario(format!(
            "noise sd must be non-negative, got {noise_sd}"
        )));
    }
    let mut rng = stream(seed, StreamPurpose::Synthetic);
    let x = draw_design(DesignSpec::IidGaussian, n, p, &mut rng);
    let u = draw_design(DesignSpec::IidGaussian, p, r, &mut rng);
    let v = draw_design(DesignSpec::IidGaussian, q, r, &mut rng);
    let noise = draw_noise(&NoiseSpec::Gaussian { sd: noise_sd }, n, q, &mut rng);
    let mut y = x.matmul(&u.matmul(&v.transpose())?)?;
    for i in 0..n {
        for j in 0..q {
            y[(i, j)] += noise[(i, j)];
        }
    }
    Ok((x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorNorm {
    /// ||B_hat - B0||_F^2; dimensionally coherent with the MSPE normalizer.
    SquaredFrobenius,
    /// ||B_hat - B0||_2^2, for sensitivity checks.
    SquaredSpectral,
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub est_error: f64,
    pub mspe_test: f64,
    pub rank_hat: usize,
}

/// Estimation error, test MSPE = ||Y_test - X_test B_hat||_F^2 / (q n_test),
/// and the estimated rank of B_hat.
pub fn metrics(
    b_hat: &DenseMatrix,
    b0: &DenseMatrix,
    x_test: &DenseMatrix,
    y_test_noisy: &DenseMatrix,
) -> Result<SimReport> {
    metrics_with(
        b_hat,
        b0,
        x_test,
        y_test_noisy,
        ErrorNorm::SquaredFrobenius,
        DEFAULT_RANK_TOL_REL,
    )
}

pub fn metrics_with(
    b_hat: &DenseMatrix,
    b0: &DenseMatrix,
    x_test: &DenseMatrix,
    y_test_noisy: &DenseMatrix,
    norm: ErrorNorm,
    rank_tol_rel: f64,
) -> Result<SimReport> {
    let diff = b_hat.sub(b0)?;
    let est_error = match norm {
        ErrorNorm::SquaredFrobenius => diff.frobenius_norm().powi(2),
        ErrorNorm::SquaredSpectral => crate::matrix::spectral_norm(&diff)?.powi(2),
    };
    let pred = predict(x_test, b_hat)?;
    let resid = y_test_noisy.sub(&pred)?;
    let mspe_test =
        resid.frobenius_norm().powi(2) / (y_test_noisy.cols() * y_test_noisy.rows()) as f64;
    let spectrum = svd(b_hat)?.singular_values;
    let rank_hat = estimated_rank(&spectrum, rank_tol_rel);
    Ok(SimReport {
        est_error,
        mspe_test,
        rank_hat,
    })
}

/// The six benchmarked estimators: Huber variants tune tau over {0.1, 1, 10},
/// squared-loss variants pin tau = infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    HuberScad,
    HuberMcp,
    HuberNucl,
    LsqScad,
    LsqMcp,
    LsqNucl,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::HuberScad,
        Method::HuberMcp,
        Method::HuberNucl,
        Method::LsqScad,
        Method::LsqMcp,
        Method::LsqNucl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::HuberScad => "huber_scad",
            Method::HuberMcp => "huber_mcp",
            Method::HuberNucl => "huber_nucl",
            Method::LsqScad => "lsq_scad",
            Method::LsqMcp => "lsq_mcp",
            Method::LsqNucl => "lsq_nucl",
        }
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        match self {
            Method::HuberScad | Method::HuberMcp | Method::HuberNucl => {
                DEFAULT_TAU_GRID.to_vec()
            }
            _ => vec![f64::INFINITY],
        }
    }

    /// Penalty spec with a placeholder lambda (replaced along the grid).
    pub fn penalty(&self) -> PenaltySpec {
        match self {
            Method::HuberScad | Method::LsqScad => {
                PenaltySpec::new(crate::penalty::PenaltyFamily::Scad, 1.0, DEFAULT_SCAD_ETA)
                    .expect("valid default")
            }
            Method::HuberMcp | Method::LsqMcp => {
                PenaltySpec::new(crate::penalty::PenaltyFamily::Mcp, 1.0, DEFAULT_MCP_ETA)
                    .expect("valid default")
            }
            Method::HuberNucl | Method::LsqNucl => {
                PenaltySpec::nuclear(1.0).expect("valid default")
            }
        }
    }
}

impl std::str::FromStr for Method {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "huber_scad" => Ok(Method::HuberScad),
            "huber_mcp" => Ok(Method::HuberMcp),
            "huber_nucl" => Ok(Method::HuberNucl),
            "lsq_scad" => Ok(Method::LsqScad),
            "lsq_mcp" => Ok(Method::LsqMcp),
            "lsq_nucl" => Ok(Method::LsqNucl),
            other => Err(CoreError::InvalidScenario(format!(
                "unknown method '{other}' (expected one of huber_scad, huber_mcp, huber_nucl, lsq_scad, lsq_mcp, lsq_nucl)"
            ))),
        }
    }
}

/// Tuning protocol shared by every method in a sweep.
#[derive(Debug, Clone)]
pub struct MethodProtocol {
    pub k_folds: usize,
    pub n_lambda: usize,
    pub lambda_min: f64,
    pub cv_window: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub rank_tol_rel: f64,
    pub error_norm: ErrorNorm,
}

impl Default for MethodProtocol {
    fn default() -> Self {
        Self {
            k_folds: DEFAULT_K_FOLDS,
            n_lambda: DEFAULT_N_LAMBDA,
            lambda_min: DEFAULT_LAMBDA_MIN,
            cv_window: DEFAULT_CV_WINDOW,
            tol: crate::solver::DEFAULT_TOL,
            max_iter: crate::solver::DEFAULT_MAX_ITER,
            rank_tol_rel: DEFAULT_RANK_TOL_REL,
            error_norm: ErrorNorm::SquaredFrobenius,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub method: Method,
    pub selected_tau: Option<f64>,
    pub selected_lambda: Option<f64>,
    pub report: std::result::Result<SimReport, String>,
}

#[derive(Debug, Clone)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: Method,
    pub est_error: MetricSummary,
    pub mspe: MetricSummary,
    pub rank: MetricSummary,
    pub replicates_ok: usize,
    pub replicates_failed: usize,
}

#[derive(Debug, Clone)]
pub struct ReplicateTable {
    pub records: Vec<ReplicateRecord>,
    pub summaries: Vec<MethodSummary>,
}

fn mean_sd(values: &[f64]) -> MetricSummary {
    if values.is_empty() {
        return MetricSummary {
            mean: f64::NAN,
            sd: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sd = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (values.len() - 1) as f64;
        var.sqrt()
    };
    MetricSummary { mean, sd }
}

/// Fit one method on one replicate's training data via cross-validated
/// tuning, then score it on the test set.
pub fn evaluate_method(
    data: &SimData,
    method: Method,
    protocol: &MethodProtocol,
    cv_seed: u64,
) -> Result<(SimReport, f64, f64)> {
    let lambdas = {
        let lmax = crate::tuning::lambda_max(&data.x_train, &data.y_train, &data.mask)?;
        crate::tuning::log_grid(lmax, protocol.lambda_min, protocol.n_lambda)?
    };
    let grid = TuningGrid::new(method.tau_grid(), lambdas)?;
    let mut base = FitConfig::new(HuberParam::infinite(), method.penalty());
    base.tol = protocol.tol;
    base.max_iter = protocol.max_iter;
    base.rank_tol_rel = protocol.rank_tol_rel;
    let report = cross_validate(
        &data.y_train,
        &data.x_train,
        &data.mask,
        &grid,
        protocol.k_folds,
        cv_seed,
        &base,
        protocol.cv_window,
    )?;
    let sim = metrics_with(
        &report.final_fit.b_hat,
        &data.b0,
        &data.x_test,
        &data.y_test_noisy,
        protocol.error_norm,
        protocol.rank_tol_rel,
    )?;
    Ok((sim, report.selected_tau, report.selected_lambda))
}

/// Run `n_reps` seeded replicates of a scenario for each method and
/// aggregate mean/sd per metric. Replicate failures are recorded, not fatal.
/// Replicates run in parallel; the reduction order is fixed by index.
pub fn run_replicates(
    scenario: &SimScenario,
    methods: &[Method],
    protocol: &MethodProtocol,
    n_reps: usize,
) -> Result<ReplicateTable> {
    if n_reps == 0 {
        return Err(CoreError::InvalidScenario("n_reps must be >= 1".into()));
    }
    scenario.validate()?;

    let records: Vec<Vec<ReplicateRecord>> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let seed = scenario.seed.wrapping_add(rep as u64);
            let rep_scenario = scenario.with_seed(seed);
            let mut out = Vec::with_capacity(methods.len());
            match generate(&rep_scenario) {
                Ok(data) => {
                    for &method in methods {
                        let record = match evaluate_method(&data, method, protocol, seed) {
                            Ok((report, tau, lambda)) => ReplicateRecord {
                                replicate: rep,
                                seed,
                                method,
                                selected_tau: Some(tau),
                                selected_lambda: Some(lambda),
                                report: Ok(report),
                            },
                            Err(e) => ReplicateRecord {
                                replicate: rep,
                                seed,
                                method,
                                selected_tau: None,
                                selected_lambda: None,
                                report: Err(e.to_string()),
                            },
                        };
                        out.push(record);
                    }
                }
                Err(e) => {
                    for &method in methods {
                        out.push(ReplicateRecord {
                            replicate: rep,
                            seed,
                            method,
                            selected_tau: None,
                            selected_lambda: None,
                            report: Err(e.to_string()),
                        });
                    }
                }
            }
            out
        })
        .collect();

    let records: Vec<ReplicateRecord> = records.into_iter().flatten().collect();

    let summaries = methods
        .iter()
        .map(|&method| {
            let ok: Vec<&SimReport> = records
                .iter()
                .filter(|r| r.method == method)
                .filter_map(|r| r.report.as_ref().ok())
                .collect();
            let failed = records
                .iter()
                .filter(|r| r.method == method && r.report.is_err())
                .count();
            let est: Vec<f64> = ok.iter().map(|r| r.est_error).collect();
            let mspe: Vec<f64> = ok.iter().map(|r| r.mspe_test).collect();
            let rank: Vec<f64> = ok.iter().map(|r| r.rank_hat as f64).collect();
            MethodSummary {
                method,
                est_error: mean_sd(&est),
                mspe: mean_sd(&mspe),
                rank: mean_sd(&rank),
                replicates_ok: ok.len(),
                replicates_failed: failed,
            }
        })
        .collect();

    Ok(ReplicateTable { records, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_scenario() -> SimScenario {
        SimScenario {
            n: 30,
            p: 5,
            q: 4,
            r: 2,
            design: DesignSpec::IidGaussian,
            noise: NoiseSpec::Gaussian { sd: 1.0 },
            missing_fraction: 0.0,
            n_test: 40,
            seed: 11,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let s = base_scenario();
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a.x_train.data(), b.x_train.data());
        assert_eq!(a.y_train.data(), b.y_train.data());
        assert_eq!(a.b0.data(), b.b0.data());
        assert_eq!(a.y_test_noisy.data(), b.y_test_noisy.data());
    }

    #[test]
    fn zero_noise_means_exact_responses() {
        let mut s = base_scenario();
        s.noise = NoiseSpec::Gaussian { sd: 0.0 };
        let d = generate(&s).unwrap();
        let expect = d.x_train.matmul(&d.b0).unwrap();
        assert!(d.y_train.frobenius_distance(&expect).unwrap() < 1e-14);
        assert_eq!(d.mask.observed_count(), 30 * 4);
    }

    #[test]
    fn ar1_with_zero_rho_matches_iid_exactly() {
        let mut s = base_scenario();
        let iid = generate(&s).unwrap();
        s.design = DesignSpec::Ar1 { rho: 0.0 };
        let ar = generate(&s).unwrap();
        assert_eq!(iid.x_train.data(), ar.x_train.data());
    }

    #[test]
    fn ar1_lag_one_correlation_is_rho() {
        let mut rng = stream(3, StreamPurpose::Design);
        let m = draw_design(DesignSpec::Ar1 { rho: 0.5 }, 5000, 6, &mut rng);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..5000 {
            for j in 1..6 {
                num += m[(i, j)] * m[(i, j - 1)];
                den += m[(i, j - 1)] * m[(i, j - 1)];
            }
        }
        let corr = num / den;
        assert!((corr - 0.5).abs() < 0.05, "lag-1 correlation {corr}");
    }

    #[test]
    fn mask_is_independent_of_noise_family() {
        let mut s = base_scenario();
        s.missing_fraction = 0.25;
        let gaussian = generate(&s).unwrap();
        s.noise = NoiseSpec::Cauchy;
        let cauchy = generate(&s).unwrap();
        for i in 0..s.n {
            for j in 0..s.q {
                assert_eq!(
                    gaussian.mask.is_observed(i, j),
                    cauchy.mask.is_observed(i, j)
                );
            }
        }
        assert_eq!(gaussian.x_train.data(), cauchy.x_train.data());
    }

    #[test]
    fn missing_count_is_exact() {
        let mut s = base_scenario();
        s.missing_fraction = 0.2;
        let d = generate(&s).unwrap();
        let total = s.n * s.q;
        let expect_missing = (0.2 * total as f64).round() as usize;
        assert_eq!(d.mask.observed_count(), total - expect_missing);
    }

    #[test]
    fn contamination_changes_exactly_the_requested_count() {
        let m = crate::matrix::tests_support::random(200, 7, 77);
        let out = apply_contamination(&m, 0.1, 10.0, 5, ContaminationMode::Additive).unwrap();
        let changed = m
            .data()
            .iter()
            .zip(out.data())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, 140);

        let same = apply_contamination(&m, 0.0, 10.0, 5, ContaminationMode::Additive).unwrap();
        assert_eq!(same.data(), m.data());

        assert!(apply_contamination(&m, 1.0, 10.0, 5, ContaminationMode::Additive).is_err());
    }

    #[test]
    fn replace_mode_overwrites_entries() {
        let m = DenseMatrix::from_vec(2, 2, vec![100.0, 100.0, 100.0, 100.0]).unwrap();
        let out = apply_contamination(&m, 0.5, 0.1, 9, ContaminationMode::Replace).unwrap();
        let replaced: Vec<f64> = out
            .data()
            .iter()
            .copied()
            .filter(|&v| v != 100.0)
            .collect();
        assert_eq!(replaced.len(), 2);
        for v in replaced {
            assert!(v.abs() < 1.0, "replaced value {v} should be near zero");
        }
    }

    #[test]
    fn noise_moments_match_the_families() {
        let n = 1_000_000;
        let mut rng = stream(1, StreamPurpose::Noise);
        let g = draw_noise(&NoiseSpec::Gaussian { sd: 1.0 }, n, 1, &mut rng);
        let mean = g.data().iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "gaussian mean {mean}");

        let mut rng = stream(2, StreamPurpose::Noise);
        let t = draw_noise(
            &NoiseSpec::ScaledT {
                df: 3.0,
                scale: 1.5,
            },
            n,
            1,
            &mut rng,
        );
        let t_mean = t.data().iter().sum::<f64>() / n as f64;
        let t_var = t.data().iter().map(|v| v * v).sum::<f64>() / n as f64 - t_mean * t_mean;
        assert!(t_mean.abs() < 0.01, "scaled-t mean {t_mean}");
        // Var(1.5 t_3) = 1.5^2 * 3 = 6.75, within 5%.
        assert!((t_var - 6.75).abs() < 0.05 * 6.75, "scaled-t variance {t_var}");

        let mut rng = stream(3, StreamPurpose::Noise);
        let c = draw_noise(&NoiseSpec::Cauchy, n, 1, &mut rng);
        let mut vals: Vec<f64> = c.data().to_vec();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = vals[n / 2];
        assert!(median.abs() < 0.01, "cauchy median {median}");
    }

    #[test]
    fn metrics_examples() {
        let s = base_scenario();
        let d = generate(&s).unwrap();
        // B_hat = B0 against the noiseless test set: both errors vanish.
        let perfect = metrics(&d.b0, &d.b0, &d.x_test, &d.y_test_clean).unwrap();
        assert_eq!(perfect.est_error, 0.0);
        assert!(perfect.mspe_test < 1e-20);
        assert_eq!(perfect.rank_hat, 2);

        // B_hat = 0: MSPE is the signal energy over (q * n_test).
        let zero = DenseMatrix::zeros(s.p, s.q);
        let m = metrics(&zero, &d.b0, &d.x_test, &d.y_test_clean).unwrap();
        let expect = d.y_test_clean.frobenius_norm().powi(2) / (s.q * s.n_test) as f64;
        assert!((m.mspe_test - expect).abs() < 1e-12);
        assert_eq!(m.rank_hat, 0);
    }

    #[test]
    fn perfect_estimator_has_unit_mspe_under_unit_noise() {
        let mut s = base_scenario();
        s.n_test = 5000;
        let d = generate(&s).unwrap();
        let m = metrics(&d.b0, &d.b0, &d.x_test, &d.y_test_noisy).unwrap();
        assert!(
            m.mspe_test > 0.95 && m.mspe_test < 1.05,
            "mspe {}",
            m.mspe_test
        );
    }

    #[test]
    fn spectral_error_norm_is_no_larger_than_frobenius() {
        let s = base_scenario();
        let d = generate(&s).unwrap();
        let b_hat = DenseMatrix::zeros(s.p, s.q);
        let fro = metrics_with(
            &b_hat,
            &d.b0,
            &d.x_test,
            &d.y_test_clean,
            ErrorNorm::SquaredFrobenius,
            1e-6,
        )
        .unwrap();
        let spec = metrics_with(
            &b_hat,
            &d.b0,
            &d.x_test,
            &d.y_test_clean,
            ErrorNorm::SquaredSpectral,
            1e-6,
        )
        .unwrap();
        assert!(spec.est_error <= fro.est_error);
        assert!(spec.est_error > 0.0);
    }

    #[test]
    fn run_replicates_is_deterministic_and_reports_sd_zero_for_one_rep() {
        let mut s = base_scenario();
        s.n = 24;
        s.n_test = 30;
        let protocol = MethodProtocol {
            n_lambda: 4,
            max_iter: 120,
            ..Default::default()
        };
        let methods = [Method::HuberMcp];
        let t1 = run_replicates(&s, &methods, &protocol, 1).unwrap();
        assert_eq!(t1.summaries[0].est_error.sd, 0.0);
        assert_eq!(t1.summaries[0].rank.sd, 0.0);

        let t2 = run_replicates(&s, &methods, &protocol, 2).unwrap();
        let t3 = run_replicates(&s, &methods, &protocol, 2).unwrap();
        assert_eq!(
            t2.summaries[0].est_error.mean,
            t3.summaries[0].est_error.mean
        );
        assert_eq!(t2.records.len(), 2);
        // Replicate 0 of the two-rep sweep matches the one-rep sweep.
        let a = t1.records[0].report.as_ref().unwrap();
        let b = t2.records[0].report.as_ref().unwrap();
        assert_eq!(a.est_error, b.est_error);
    }

    #[test]
    fn scenario_validation_rejects_bad_fields() {
        let mut s = base_scenario();
        s.r = 10;
        assert!(s.validate().is_err());
        let mut s = base_scenario();
        s.missing_fraction = 1.0;
        assert!(s.validate().is_err());
        let mut s = base_scenario();
        s.design = DesignSpec::Ar1 { rho: 1.0 };
        assert!(s.validate().is_err());
        let mut s = base_scenario();
        s.noise = NoiseSpec::ScaledT {
            df: 0.0,
            scale: 1.0,
        };
        assert!(s.validate().is_err());
    }
}
