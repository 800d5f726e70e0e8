//! Multi-start uniqueness audit.
//!
//! A test builds a fresh seven-start bundle, runs the chosen solver from every
//! start for `T` sweeps and records, after each sweep, the mean distance of
//! starts 2..7 to start 1:
//!
//! * HOSVD: `d(t) = 1/6 sum_i (||U_i - U_1|| + ||V_i - V_1|| + ||W_i - W_1||)`
//! * ParaFac: `d'(t) = 1/6 sum_i ||X_hat_i - X_hat_1||`
//!
//! (Frobenius norms). The seven runs advance in lockstep, so no per-iteration
//! snapshots are kept. The verdict is `Unique` when every test ends with
//! `d(T) < epsilon * scale`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hosvd::{FactorSnapshot, HosvdSolver};
use crate::init::{make_init_bundle, make_init_bundle_rank, BundleSummary, InitBundle, StartLabel};
use crate::parafac::ParafacSolver;
use crate::rng::substream;
use crate::tensor::Tensor3;

pub const DEFAULT_TESTS: usize = 10;
pub const DEFAULT_HOSVD_ITERATIONS: usize = 100;
pub const DEFAULT_PARAFAC_ITERATIONS: usize = 2000;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Decomposition being audited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum Method {
    Hosvd { dims: [usize; 3] },
    Parafac { rank: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    #[serde(flatten)]
    pub method: Method,
    pub tests: usize,
    pub iterations: usize,
    pub epsilon: f64,
    pub master_seed: u64,
}

impl AuditConfig {
    /// Defaults: 10 tests, 100 sweeps, epsilon 1e-8.
    pub fn hosvd(dims: [usize; 3], master_seed: u64) -> Self {
        Self {
            method: Method::Hosvd { dims },
            tests: DEFAULT_TESTS,
            iterations: DEFAULT_HOSVD_ITERATIONS,
            epsilon: DEFAULT_EPSILON,
            master_seed,
        }
    }

    /// Defaults: 10 tests, 2000 sweeps, epsilon 1e-8.
    pub fn parafac(rank: usize, master_seed: u64) -> Self {
        Self {
            method: Method::Parafac { rank },
            tests: DEFAULT_TESTS,
            iterations: DEFAULT_PARAFAC_ITERATIONS,
            epsilon: DEFAULT_EPSILON,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tests == 0 {
            return Err(Error::arg("audit needs at least one test"));
        }
        if self.iterations == 0 {
            return Err(Error::arg("audit needs at least one iteration"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::arg(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        match self.method {
            Method::Hosvd { dims } if dims.contains(&0) => {
                Err(Error::arg("HOSVD dims must be positive"))
            }
            Method::Parafac { rank: 0 } => Err(Error::arg("ParaFac rank must be positive")),
            _ => Ok(()),
        }
    }

    /// Seed of test `index`.
    pub fn test_seed(&self, index: usize) -> u64 {
        substream(self.master_seed, index as u64)
    }
}

/// Normalization applied to the final distance before comparing with
/// epsilon: `||X||_F * sqrt(n1 m1 + n2 m2 + n3 m3)` for HOSVD, `||X||_F`
/// for ParaFac.
pub fn distance_scale(x: &Tensor3, method: &Method) -> f64 {
    let norm = x.frobenius_norm();
    match method {
        Method::Hosvd { dims } => {
            let n = x.dims();
            let entries: usize = (0..3).map(|a| n[a] * dims[a]).sum();
            norm * (entries as f64).sqrt()
        }
        Method::Parafac { .. } => norm,
    }
}

/// HOSVD distance between start 1 and the others, averaged over the others.
pub fn hosvd_distance(snapshots: &[FactorSnapshot]) -> Result<f64> {
    let (first, rest) = snapshots
        .split_first()
        .ok_or_else(|| Error::arg("no snapshots to compare"))?;
    if rest.is_empty() {
        return Err(Error::arg("need at least two snapshots"));
    }
    let mut total = 0.0;
    for s in rest {
        total += s.u.sub(&first.u)?.frobenius_norm()
            + s.v.sub(&first.v)?.frobenius_norm()
            + s.w.sub(&first.w)?.frobenius_norm();
    }
    Ok(total / rest.len() as f64)
}

/// ParaFac distance on reconstructions, averaged over starts 2..n.
pub fn parafac_distance(reconstructions: &[Tensor3]) -> Result<f64> {
    let refs: Vec<&Tensor3> = reconstructions.iter().collect();
    parafac_distance_refs(&refs)
}

fn parafac_distance_refs(recs: &[&Tensor3]) -> Result<f64> {
    let (first, rest) = recs
        .split_first()
        .ok_or_else(|| Error::arg("no reconstructions to compare"))?;
    if rest.is_empty() {
        return Err(Error::arg("need at least two reconstructions"));
    }
    let mut total = 0.0;
    for r in rest {
        total += r.distance_sq(first)?.sqrt();
    }
    Ok(total / rest.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Unique,
    NonUnique,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartTrace {
    pub label: StartLabel,
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub index: usize,
    pub seed: u64,
    pub status: TestStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub bundle: BundleSummary,
    pub d_series: Vec<f64>,
    pub final_d: Option<f64>,
    pub objective_traces: Vec<StartTrace>,
}

impl TestReport {
    pub fn min_d(&self) -> Option<f64> {
        self.d_series.iter().copied().reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub dims: [usize; 3],
    pub frobenius_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTiming {
    pub jobs: usize,
    pub total_seconds: f64,
    pub per_test_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub tensor: TensorInfo,
    /// Audited tensor is used as given; centering only applies to spectra.
    pub centering: String,
    pub scale: f64,
    pub threshold: f64,
    pub tests: Vec<TestReport>,
    pub verdict: Verdict,
    pub timing: AuditTiming,
}

/// Verdict for a set of test outcomes at a given threshold.
pub fn verdict_for(tests: &[TestReport], threshold: f64) -> Verdict {
    if tests.iter().any(|t| t.status == TestStatus::Failed) {
        return Verdict::Indeterminate;
    }
    if tests.iter().all(|t| t.final_d.is_some_and(|d| d < threshold)) {
        Verdict::Unique
    } else {
        Verdict::NonUnique
    }
}

enum Runner<'a> {
    Hosvd(Vec<HosvdSolver<'a>>),
    Parafac(Vec<ParafacSolver<'a>>),
}

/// Run one test from a given bundle. Solver failures are captured in the
/// returned report rather than propagated.
pub fn audit_test(x: &Tensor3, config: &AuditConfig, index: usize, bundle: &InitBundle) -> TestReport {
    let mut report = TestReport {
        index,
        seed: bundle.master_seed,
        status: TestStatus::Completed,
        error: None,
        bundle: bundle.summary(),
        d_series: Vec::with_capacity(config.iterations),
        final_d: None,
        objective_traces: bundle
            .starts
            .iter()
            .map(|s| StartTrace {
                label: s.label,
                objective: Vec::with_capacity(config.iterations),
            })
            .collect(),
    };
    if let Err(e) = run_lockstep(x, config, bundle, &mut report) {
        report.status = TestStatus::Failed;
        report.error = Some(e.to_string());
        report.final_d = None;
    }
    report
}

fn run_lockstep(
    x: &Tensor3,
    config: &AuditConfig,
    bundle: &InitBundle,
    report: &mut TestReport,
) -> Result<()> {
    let mut runner = match config.method {
        Method::Hosvd { dims } => Runner::Hosvd(
            bundle
                .starts
                .iter()
                .map(|s| HosvdSolver::new(x, dims, &s.v0, &s.w0))
                .collect::<Result<_>>()?,
        ),
        Method::Parafac { .. } => Runner::Parafac(
            bundle
                .starts
                .iter()
                .map(|s| ParafacSolver::new(x, &s.v0, &s.w0))
                .collect::<Result<_>>()?,
        ),
    };
    for _ in 0..config.iterations {
        let d = match &mut runner {
            Runner::Hosvd(solvers) => {
                for (s, tr) in solvers.iter_mut().zip(report.objective_traces.iter_mut()) {
                    let obj = s
                        .step()
                        .map_err(|e| Error::numerical(format!("start {}: {e}", tr.label.as_str())))?;
                    tr.objective.push(obj);
                }
                let snaps: Vec<FactorSnapshot> = solvers.iter().map(|s| s.snapshot()).collect();
                hosvd_distance(&snaps)?
            }
            Runner::Parafac(solvers) => {
                for (s, tr) in solvers.iter_mut().zip(report.objective_traces.iter_mut()) {
                    let obj = s
                        .step()
                        .map_err(|e| Error::numerical(format!("start {}: {e}", tr.label.as_str())))?;
                    tr.objective.push(obj);
                }
                let recs: Vec<&Tensor3> = solvers.iter().map(|s| s.reconstruction()).collect();
                parafac_distance_refs(&recs)?
            }
        };
        report.d_series.push(d);
    }
    report.final_d = report.d_series.last().copied();
    Ok(())
}

/// Fresh bundle for test `index`.
pub fn bundle_for_test(x: &Tensor3, config: &AuditConfig, index: usize) -> Result<InitBundle> {
    let seed = config.test_seed(index);
    match config.method {
        Method::Hosvd { dims } => make_init_bundle(x, dims, seed),
        Method::Parafac { rank } => make_init_bundle_rank(x, rank, seed),
    }
}

/// Run the audit on the global thread pool.
pub fn run_audit(x: &Tensor3, config: &AuditConfig) -> Result<AuditReport> {
    run_audit_jobs(x, config, rayon::current_num_threads())
}

/// Run the audit with up to `jobs` tests in flight. The report does not
/// depend on `jobs` apart from the timing block.
pub fn run_audit_jobs(x: &Tensor3, config: &AuditConfig, jobs: usize) -> Result<AuditReport> {
    use rayon::prelude::*;

    config.validate()?;
    if !x.is_finite() {
        return Err(Error::data("tensor contains non-finite values"));
    }
    if let Method::Hosvd { dims } = config.method {
        crate::hosvd::validate_dims(x, dims)?;
    }
    let bundles: Vec<InitBundle> = (0..config.tests)
        .map(|t| bundle_for_test(x, config, t))
        .collect::<Result<_>>()?;

    let jobs = jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::arg(format!("cannot build thread pool: {e}")))?;
    let started = Instant::now();
    let outcomes: Vec<(TestReport, f64)> = pool.install(|| {
        bundles
            .par_iter()
            .enumerate()
            .map(|(i, b)| {
                let t0 = Instant::now();
                let r = audit_test(x, config, i, b);
                (r, t0.elapsed().as_secs_f64())
            })
            .collect()
    });
    let total = started.elapsed().as_secs_f64();

    let (tests, per_test): (Vec<TestReport>, Vec<f64>) = outcomes.into_iter().unzip();
    let scale = distance_scale(x, &config.method);
    let threshold = config.epsilon * scale;
    Ok(AuditReport {
        config: config.clone(),
        tensor: TensorInfo {
            dims: x.dims(),
            frobenius_norm: x.frobenius_norm(),
        },
        centering: "none".into(),
        scale,
        threshold,
        verdict: verdict_for(&tests, threshold),
        tests,
        timing: AuditTiming {
            jobs,
            total_seconds: total,
            per_test_seconds: per_test,
        },
    })
}
