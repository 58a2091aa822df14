//! Builds problems from a [`RunConfig`], runs the chosen method, and turns
//! the result into trace rows and a summary.

use std::fs::File;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use ppl_core::kkt::rate_summary;
use ppl_core::monitor::InvariantMonitor;
use ppl_core::penalty::{quadratic_penalty_baseline, PenaltySchedule};
use ppl_core::problems::{
    complement_name, make_disk_problem, make_fairness_logistic, make_intersectional, make_mnpc_linear,
    make_nonconvex_qp, synthetic_fairness_dataset, ConstraintKind, Dataset, EoFormulation, FairnessConfig,
    SYNTHETIC_GROUP,
};
use ppl_core::{
    derive_plada_params, derive_ppala_params, run_plada, run_ppala, ConstantEstimates, PladaOverrides, PladaParams,
    PpalaOverrides, PpalaParams, ProblemSpec, SolveResult, TraceRecord, TraceSink,
};

use crate::config::{problem_key, DataFormat, EoForm, MethodName, ProblemName, RunConfig};
use crate::data::{self, GroupSource, GroupSpec, LibsvmOptions};
use crate::outputs::{write_outputs, OutputPaths, RateSummary, Residuals, Summary};

/// Environment variable capping the number of concurrent runs in a suite.
pub const THREADS_ENV: &str = "PPL_SOLVE_THREADS";

/// Keeps every `every`-th record plus the last one, and stamps wall time.
pub struct StrideSink {
    every: usize,
    start: Instant,
    pub records: Vec<TraceRecord>,
    pending: Option<TraceRecord>,
}

impl StrideSink {
    pub fn new(every: usize) -> Self {
        StrideSink {
            every: every.max(1),
            start: Instant::now(),
            records: Vec::new(),
            pending: None,
        }
    }

    /// Flushes the held-back final record and returns the trace.
    pub fn finish(mut self) -> Vec<TraceRecord> {
        if let Some(r) = self.pending.take() {
            self.records.push(r);
        }
        self.records
    }
}

impl TraceSink for StrideSink {
    fn elapsed_sec(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn record(&mut self, record: &TraceRecord) {
        if record.iter.is_multiple_of(self.every) {
            self.records.push(*record);
            self.pending = None;
        } else {
            self.pending = Some(*record);
        }
    }
}

fn group_specs(cfg: &RunConfig) -> Vec<GroupSpec> {
    let source = match (&cfg.group_column, cfg.group_feature) {
        (Some(name), _) => GroupSource::CsvColumn {
            name: name.clone(),
            values: cfg.group_values.clone(),
        },
        (None, Some(index)) => GroupSource::FeatureColumn {
            index,
            threshold: cfg.group_threshold,
        },
        (None, None) => return Vec::new(),
    };
    vec![GroupSpec {
        name: cfg.group_name.clone(),
        source,
    }]
}

/// Loads the configured data file, or generates the synthetic set. Returns
/// the dataset and the protected-group mask name.
pub fn load_dataset(cfg: &RunConfig) -> Result<(Dataset, String)> {
    let eo = cfg.problem == ProblemName::FairnessEo;
    let Some(path) = &cfg.data_path else {
        let data = synthetic_fairness_dataset(cfg.seed, cfg.synthetic_rows)?;
        let data = if cfg.scale_features {
            data::min_max_scale(&data)
        } else {
            data
        };
        return Ok((data, SYNTHETIC_GROUP.to_string()));
    };
    let file = File::open(path).with_context(|| format!("cannot open data file {}", path.display()))?;
    let specs = group_specs(cfg);
    let parsed = match cfg.data_format {
        DataFormat::Libsvm => data::parse_libsvm(
            file,
            LibsvmOptions {
                zero_one_labels: cfg.zero_one_labels,
            },
        ),
        DataFormat::Csv => {
            let groups: Vec<&str> = cfg.group_column.iter().map(String::as_str).collect();
            data::parse_csv(
                file,
                cfg.label_column.as_deref().unwrap_or_default(),
                cfg.positive_label.as_deref().unwrap_or_default(),
                &groups,
            )
        }
    }
    .with_context(|| format!("cannot parse {}", path.display()))?;
    let parsed = if cfg.scale_features {
        data::min_max_scale(&parsed)
    } else {
        parsed
    };
    let data = data::extract_group_masks(parsed, &specs, eo)?;
    Ok((data, cfg.group_name.clone()))
}

/// Constructs the configured problem instance.
pub fn build_problem(cfg: &RunConfig) -> Result<ProblemSpec> {
    let problem = match cfg.problem {
        ProblemName::Disk => make_disk_problem(),
        ProblemName::Qp => make_nonconvex_qp(cfg.seed, cfg.qp_n, cfg.qp_m)?,
        ProblemName::Mnpc => {
            let kappa = vec![cfg.mnpc_kappa; cfg.mnpc_classes.saturating_sub(1)];
            make_mnpc_linear(cfg.seed, cfg.mnpc_classes, cfg.mnpc_per_class, &kappa, cfg.mnpc_theta)?
        }
        ProblemName::FairnessDp | ProblemName::FairnessEo | ProblemName::Intersectional => {
            let (data, group) = load_dataset(cfg)?;
            let kind = match cfg.problem {
                ProblemName::FairnessDp => ConstraintKind::DemographicParity,
                ProblemName::FairnessEo => ConstraintKind::EqualizedOdds,
                _ => ConstraintKind::Intersectional,
            };
            let mut fc = FairnessConfig::new(kind, group.clone());
            fc.tolerance_c = cfg.tolerance_c;
            fc.radius = cfg.radius;
            fc.eo_formulation = match cfg.eo_formulation {
                EoForm::MaxSingleConstraint => EoFormulation::MaxSingleConstraint,
                EoForm::TwoConstraints => EoFormulation::TwoConstraints,
            };
            if kind == ConstraintKind::Intersectional {
                let groups = vec![
                    data.mask(&group)?.to_vec(),
                    data.mask(&complement_name(&group))?.to_vec(),
                ];
                make_intersectional(data, groups, &fc)?
            } else {
                make_fairness_logistic(data, &fc)?
            }
        }
    };
    Ok(problem)
}

pub fn plada_params(cfg: &RunConfig, problem: &ProblemSpec) -> ppl_core::Result<PladaParams> {
    derive_plada_params(
        cfg.alpha,
        cfg.beta,
        &problem.constants,
        &PladaOverrides {
            eta: cfg.eta,
            tau: cfg.tau,
            gamma0: Some(cfg.gamma0),
            kappa: Some(cfg.kappa),
            max_iters: Some(cfg.max_iters),
            tol: Some(cfg.tolerances()),
            x_update_mode: None,
            lambda_cap: cfg.lambda_cap,
            stop_on_kkt: Some(cfg.stop_on_kkt),
        },
    )
}

pub fn ppala_params(cfg: &RunConfig, problem: &ProblemSpec) -> ppl_core::Result<PpalaParams> {
    derive_ppala_params(
        cfg.alpha,
        cfg.beta,
        &problem.constants,
        &PpalaOverrides {
            eta: cfg.eta,
            tau: cfg.tau,
            p: Some(cfg.p),
            q: Some(cfg.q),
            max_iters: Some(cfg.max_iters),
            tol: Some(cfg.tolerances()),
            lambda_cap: cfg.lambda_cap,
            stop_on_kkt: Some(cfg.stop_on_kkt),
        },
    )
}

pub fn penalty_schedule(cfg: &RunConfig) -> PenaltySchedule {
    PenaltySchedule {
        rho0: cfg.rho0,
        growth: cfg.growth,
        rounds: cfg.rounds,
        inner_iters: cfg.inner_iters,
        eta: cfg.eta,
        tol: cfg.tolerances(),
        stop_on_kkt: cfg.stop_on_kkt,
    }
}

/// Parameters are derived before the run so that a parameter error is a
/// configuration failure, not a solver failure.
enum Prepared {
    Plada(PladaParams),
    Ppala(PpalaParams),
    Penalty(PenaltySchedule),
}

fn prepare(cfg: &RunConfig, problem: &ProblemSpec) -> Result<Prepared> {
    Ok(match cfg.method {
        MethodName::Plada => Prepared::Plada(plada_params(cfg, problem)?),
        MethodName::Ppala => Prepared::Ppala(ppala_params(cfg, problem)?),
        MethodName::Penalty => {
            let s = penalty_schedule(cfg);
            s.tol.validate()?;
            Prepared::Penalty(s)
        }
    })
}

fn run_prepared<S: TraceSink + ?Sized>(
    prepared: &Prepared,
    problem: &ProblemSpec,
    x0: Option<Vec<f64>>,
    sink: &mut S,
) -> ppl_core::Result<SolveResult> {
    match prepared {
        Prepared::Plada(p) => run_plada(problem, p, x0, sink),
        Prepared::Ppala(p) => run_ppala(problem, p, x0, sink),
        Prepared::Penalty(s) => quadratic_penalty_baseline(problem, s, x0, sink).map(|r| r.solve),
    }
}

/// Result of one run, before anything is written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub trace: Vec<TraceRecord>,
}

impl RunOutcome {
    /// False when the solver failed part-way.
    pub fn succeeded(&self) -> bool {
        self.summary.failure_iteration.is_none()
    }
}

/// Runs `cfg` on an already-built problem from `x0` (default: the domain
/// center). Solver failures after the start produce an outcome with
/// `failure_iteration` set; configuration problems are returned as errors.
pub fn execute_on(problem: &ProblemSpec, cfg: &RunConfig, x0: Option<Vec<f64>>) -> Result<RunOutcome> {
    let prepared = prepare(cfg, problem)?;
    let tol = cfg.tolerances();
    let started = Instant::now();
    let mut sink = StrideSink::new(cfg.trace_every);
    let result = run_prepared(&prepared, problem, x0, &mut sink);
    let wall = started.elapsed().as_secs_f64();
    let trace = sink.finish();
    let mut summary = Summary {
        config: cfg.clone(),
        problem_name: problem.name.clone(),
        residuals: None,
        final_objective: None,
        final_x: None,
        final_nu: None,
        iterations: 0,
        best_iter: None,
        wall_time_sec: wall,
        stop_reason: String::new(),
        converged: false,
        rate_summary: None,
        failure_iteration: None,
        error: None,
        warnings: Vec::new(),
    };
    match result {
        Ok(r) => {
            let rep = &r.final_report;
            summary.residuals = Some(Residuals {
                stationarity: rep.stationarity,
                feasibility: rep.feasibility,
                complementarity: rep.complementarity,
                dual_gap: rep.dual_gap,
            });
            summary.final_objective = Some(r.final_objective);
            summary.final_x = Some(r.state.x.clone());
            summary.final_nu = Some(rep.nu.clone());
            summary.iterations = r.iterations;
            summary.best_iter = Some(r.best_iter);
            summary.stop_reason = r.stop_reason.as_str().to_string();
            summary.converged = r.converged(&tol);
            summary.rate_summary = Some(RateSummary::from(&rate_summary(&trace, None)));
            summary.warnings = r.warnings;
        }
        Err(e) => {
            let reached = trace.last().map_or(0, |r| r.iter);
            let at = match e {
                ppl_core::Error::Divergence { iteration } => iteration,
                _ => reached + 1,
            };
            summary.iterations = reached;
            summary.stop_reason = "diverged".into();
            summary.failure_iteration = Some(at);
            summary.error = Some(e.to_string());
        }
    }
    Ok(RunOutcome { summary, trace })
}

/// Builds the problem and runs it. Nothing is written.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let problem = build_problem(cfg).with_context(|| format!("cannot build problem '{}'", problem_key(cfg.problem)))?;
    execute_on(&problem, cfg, None)
}

/// Runs `cfg` and writes trace.csv and summary.json into `out`. When the
/// problem cannot be built nothing is written. Returns the outcome and the
/// paths; check [`RunOutcome::succeeded`] for the exit status.
pub fn run_to_dir(cfg: &RunConfig, out: &Path) -> Result<(RunOutcome, OutputPaths)> {
    let outcome = execute(cfg)?;
    let paths = write_outputs(&outcome.trace, &outcome.summary, out)?;
    Ok((outcome, paths))
}

/// Number of workers for a suite of `runs` configs.
pub fn worker_count(runs: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.min(runs).max(1)
}

/// Runs independent configs in parallel, one worker per run at a time.
/// Results come back in input order.
pub fn run_suite(configs: &[RunConfig]) -> Vec<Result<RunOutcome>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunOutcome>>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..worker_count(configs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = configs.get(i) else { break };
                let outcome = execute(cfg);
                *slots[i].lock().expect("slot lock") = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every slot is filled"))
        .collect()
}

/// Outcome of the `check` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub problem_name: String,
    pub method: MethodName,
    pub steps: usize,
    pub unanchored_steps: usize,
    pub relation_failures: usize,
    pub first_relation_failure: Option<usize>,
    /// Descent is only a pass criterion for PPALA; PLADA in linearized mode
    /// reports it.
    pub descent_asserted: bool,
    pub descent_failures: usize,
    pub first_descent_failure: Option<usize>,
    pub min_descent_slack: Option<f64>,
    pub min_nu: Option<f64>,
    pub negative_nu: usize,
    pub interior_coordinates: usize,
    pub max_interior_nu: f64,
    pub interior_nu_violations: usize,
    pub passed: bool,
}

/// Runs `cfg` under the invariant monitor.
pub fn check_invariants(cfg: &RunConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    let (tally, descent_asserted) = match cfg.method {
        MethodName::Plada => {
            let params = plada_params(cfg, &problem)?;
            let mut monitor = InvariantMonitor::for_plada(&problem, &params);
            run_plada(&problem, &params, None, &mut monitor)?;
            (monitor.tally, false)
        }
        MethodName::Ppala => {
            let params = ppala_params(cfg, &problem)?;
            let mut monitor = InvariantMonitor::for_ppala(&problem, &params);
            run_ppala(&problem, &params, None, &mut monitor)?;
            (monitor.tally, true)
        }
        MethodName::Penalty => {
            anyhow::bail!("check applies to plada and ppala; the penalty baseline has no multiplier relations")
        }
    };
    let finite = |v: f64| v.is_finite().then_some(v);
    let passed = tally.relations_ok() && tally.nu_ok() && (!descent_asserted || tally.descent_ok());
    Ok(CheckReport {
        problem_name: problem.name.clone(),
        method: cfg.method,
        steps: tally.steps,
        unanchored_steps: tally.unanchored_steps,
        relation_failures: tally.relation_failures,
        first_relation_failure: tally.first_relation_failure.as_ref().map(|f| f.0),
        descent_asserted,
        descent_failures: tally.descent_failures,
        first_descent_failure: tally.first_descent_failure.as_ref().map(|f| f.0),
        min_descent_slack: finite(tally.min_descent_slack),
        min_nu: finite(tally.min_nu),
        negative_nu: tally.negative_nu,
        interior_coordinates: tally.interior_coordinates,
        max_interior_nu: tally.max_interior_nu,
        interior_nu_violations: tally.interior_nu_violations,
        passed,
    })
}

/// Declared constants of a problem next to sampled estimates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub problem_name: String,
    pub declared: ConstantsView,
    pub sampled: Option<ConstantsView>,
    pub sampling_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsView {
    pub l_f: f64,
    pub l_g: f64,
    pub m_g: f64,
    pub b_g: f64,
    pub b_u: f64,
    pub b_lambda: f64,
}

impl From<&ConstantEstimates> for ConstantsView {
    fn from(c: &ConstantEstimates) -> Self {
        ConstantsView {
            l_f: c.l_f,
            l_g: c.l_g,
            m_g: c.m_g,
            b_g: c.b_g,
            b_u: c.b_u,
            b_lambda: c.b_lambda,
        }
    }
}

/// Pairs sampled per constant estimate.
pub const ESTIMATE_SAMPLES: usize = 10_000;

pub fn estimate(cfg: &RunConfig) -> Result<ConstantsReport> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    let (sampled, sampling_error) = match problem.estimate_constants(ESTIMATE_SAMPLES, cfg.seed) {
        Ok(c) => (Some(ConstantsView::from(&c)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ConstantsReport {
        problem_name: problem.name.clone(),
        declared: ConstantsView::from(&problem.constants),
        sampled,
        sampling_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ppl_core::problem::{ConstantEstimates, FnConstraints, FnObjective, Regularizer, Smoothness};

    fn rec(iter: usize) -> TraceRecord {
        TraceRecord {
            iter,
            elapsed_sec: 0.0,
            objective: 0.0,
            feasibility: 0.0,
            stationarity: 0.0,
            complementarity: 0.0,
            dual_gap: 0.0,
            lambda_norm: 0.0,
            mu_norm: 0.0,
            delta_k: 0.0,
        }
    }

    #[test]
    fn stride_keeps_the_final_record() {
        let mut s = StrideSink::new(4);
        (0..=10).for_each(|i| s.record(&rec(i)));
        let iters: Vec<usize> = s.finish().iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![0, 4, 8, 10]);
        let mut s = StrideSink::new(5);
        (0..=10).for_each(|i| s.record(&rec(i)));
        let iters: Vec<usize> = s.finish().iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![0, 5, 10]);
    }

    #[test]
    fn zero_budget_gives_the_initial_row() {
        let cfg = RunConfig {
            max_iters: 0,
            ..Default::default()
        };
        let out = execute(&cfg).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace[0].iter, 0);
        assert!(out.succeeded());
    }

    #[test]
    fn every_problem_builds() {
        for problem in [
            ProblemName::Disk,
            ProblemName::Qp,
            ProblemName::FairnessDp,
            ProblemName::FairnessEo,
            ProblemName::Intersectional,
            ProblemName::Mnpc,
        ] {
            let cfg = RunConfig {
                problem,
                max_iters: 20,
                synthetic_rows: 200,
                ..Default::default()
            };
            let out = execute(&cfg).unwrap_or_else(|e| panic!("{problem:?}: {e:#}"));
            assert_eq!(out.summary.iterations, 20, "{problem:?}");
        }
    }

    #[test]
    fn penalty_method_runs_on_disk() {
        let cfg = RunConfig {
            method: MethodName::Penalty,
            inner_iters: 50,
            stop_on_kkt: false,
            ..Default::default()
        };
        let out = execute(&cfg).unwrap();
        assert_eq!(out.summary.iterations, 150);
        assert_eq!(out.summary.stop_reason, "budget");
    }

    #[test]
    fn divergence_is_recorded_with_its_iteration() {
        let problem = ProblemSpec::new(
            "runaway",
            1,
            1,
            Box::new(FnObjective(|x: &[f64], g: &mut [f64]| {
                g[0] = -2e3 * x[0];
                -1e3 * x[0] * x[0]
            })),
            Box::new(FnConstraints(
                |x: &[f64], v: &mut [f64], j: &mut ppl_core::linalg::Matrix| {
                    v[0] = -1.0 - 0.0 * x[0];
                    j.set(0, 0, 0.0);
                },
            )),
            Regularizer::Zero,
            ConstantEstimates::new(2e3, 0.0, 1.0, 1.0),
            Smoothness::Smooth,
        )
        .unwrap();
        let cfg = RunConfig {
            eta: Some(1.0),
            tau: Some(0.01),
            ..Default::default()
        };
        // The domain center 0 is a fixed point, so start away from it.
        let out = execute_on(&problem, &cfg, Some(vec![1.0])).unwrap();
        assert!(!out.succeeded());
        assert_eq!(out.summary.stop_reason, "diverged");
        let at = out.summary.failure_iteration.unwrap();
        assert!(at > 1 && at < 1000, "{at}");
        assert_eq!(out.trace.last().unwrap().iter + 1, at);
        assert!(out.summary.residuals.is_none());
    }

    #[test]
    fn suite_preserves_order_and_is_deterministic() {
        let cfgs: Vec<RunConfig> = (0..4)
            .map(|seed| RunConfig {
                problem: ProblemName::Qp,
                qp_n: 3,
                qp_m: 2,
                seed,
                max_iters: 200,
                ..Default::default()
            })
            .collect();
        let a = run_suite(&cfgs);
        let b = run_suite(&cfgs);
        for (i, (x, y)) in a.iter().zip(&b).enumerate() {
            let (x, y) = (x.as_ref().unwrap(), y.as_ref().unwrap());
            assert_eq!(x.summary.config.seed, i as u64);
            assert_eq!(x.summary.final_x, y.summary.final_x);
        }
    }

    #[test]
    fn check_passes_on_disk_for_both_solvers() {
        for method in [MethodName::Plada, MethodName::Ppala] {
            let cfg = RunConfig {
                method,
                max_iters: 3000,
                ..Default::default()
            };
            let rep = check_invariants(&cfg).unwrap();
            assert!(rep.passed, "{rep:?}");
            assert_eq!(rep.descent_asserted, method == MethodName::Ppala);
        }
        let cfg = RunConfig {
            method: MethodName::Penalty,
            ..Default::default()
        };
        assert!(check_invariants(&cfg).is_err());
    }

    #[test]
    fn estimate_reports_both_constant_sets() {
        let rep = estimate(&RunConfig::default()).unwrap();
        assert!((rep.declared.m_g - 4.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
        let sampled = rep.sampled.unwrap();
        assert!(sampled.m_g > 0.0 && sampled.m_g <= 1.5 * rep.declared.m_g + 1e-12);
    }

    #[test]
    fn missing_data_file_is_an_error() {
        let cfg = RunConfig {
            problem: ProblemName::FairnessDp,
            data_path: Some("/nonexistent/data.svm".into()),
            group_feature: Some(0),
            ..Default::default()
        };
        let err = execute(&cfg).unwrap_err();
        assert!(format!("{err:#}").contains("/nonexistent/data.svm"), "{err:#}");
    }
}
