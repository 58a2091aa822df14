use ppl_core::kkt::{self, descent_coefficients, DescentParams};
use ppl_core::linalg;
use ppl_core::monitor::InvariantMonitor;
use ppl_core::plada::plada_step;
use ppl_core::ppala::ppala_step;
use ppl_core::problems::*;
use ppl_core::solver::{delta_schedule_ppala, XUpdateMode};
use ppl_core::trace::{Method, StepView, TraceRecord, TraceSink, VecSink};
use ppl_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plada_defaults(p: &ProblemSpec, over: PladaOverrides) -> PladaParams {
    derive_plada_params(10.0, 0.1, &p.constants, &over).unwrap()
}

fn ppala_defaults(p: &ProblemSpec, over: PpalaOverrides) -> PpalaParams {
    derive_ppala_params(10.0, 0.2, &p.constants, &over).unwrap()
}

fn disk_kkt_state() -> IterateState {
    let (x, nu) = disk_kkt_point();
    IterateState {
        x,
        u: vec![0.0],
        z: vec![0.0],
        lambda: vec![nu],
        mu: vec![nu],
        k: 5,
    }
}

fn assert_close(a: &IterateState, b: &IterateState, tol: f64) {
    for (name, u, v) in [
        ("x", &a.x, &b.x),
        ("u", &a.u, &b.u),
        ("z", &a.z, &b.z),
        ("lambda", &a.lambda, &b.lambda),
        ("mu", &a.mu, &b.mu),
    ] {
        assert!(linalg::dist(u, v) <= tol, "{name}: {u:?} vs {v:?}");
    }
}

#[test]
fn kkt_tuple_is_a_fixed_point_of_both_steps() {
    let p = make_disk_problem();
    let s = disk_kkt_state();
    let next = plada_step(&p, &s, &plada_defaults(&p, PladaOverrides::default())).unwrap();
    assert_eq!(next.k, s.k + 1);
    assert_close(&next, &s, 1e-12);
    let next = ppala_step(&p, &s, &ppala_defaults(&p, PpalaOverrides::default())).unwrap();
    assert_close(&next, &s, 1e-12);
}

#[test]
fn inactive_constraint_recovers_unconstrained_optimum() {
    let c = [0.4, -1.1, 1.5];
    let p = make_inactive_toy(&c);
    let r = run_plada(
        &p,
        &plada_defaults(&p, PladaOverrides::default()),
        None,
        &mut trace::NullSink,
    )
    .unwrap();
    assert_eq!(r.stop_reason, StopReason::Converged);
    assert!(linalg::dist(&r.state.x, &c) < 1e-3);
    assert!(linalg::norm(&r.final_report.nu) < 1e-3);

    let r = run_ppala(
        &p,
        &ppala_defaults(&p, PpalaOverrides::default()),
        None,
        &mut trace::NullSink,
    )
    .unwrap();
    assert_eq!(r.stop_reason, StopReason::Converged);
    assert!(linalg::dist(&r.state.x, &c) < 1e-3);
    assert!(linalg::norm(&r.state.lambda) < 1e-3);
}

#[test]
fn exact_subproblem_plada_descends_on_line_and_curved_toys() {
    let cases: [(&str, ProblemSpec, &dyn solver::ExactSubproblem); 2] = [
        ("line", make_line_toy(), &LineToySubproblem),
        ("curved", make_curved_toy(), &CurvedToySubproblem),
    ];
    for (name, p, exact) in cases {
        let params = plada_defaults(
            &p,
            PladaOverrides {
                x_update_mode: Some(XUpdateMode::ExactSubproblem),
                max_iters: Some(5_000),
                stop_on_kkt: Some(false),
                ..Default::default()
            },
        );
        let mut mon = InvariantMonitor::for_plada(&p, &params);
        plada::run_plada_with(&p, &params, Some(vec![0.9]), Some(exact), &mut mon).unwrap();
        let t = &mon.tally;
        assert_eq!(t.steps, 5_000);
        // x₀ = 0.9 is infeasible, so only the first step lacks the multiplier identity.
        assert_eq!(t.unanchored_steps, 1);
        assert!(t.descent_ok(), "{name}: {t:?}");
        assert!(t.relations_ok() && t.nu_ok(), "{name}: {t:?}");
    }
}

#[test]
fn curved_toy_reaches_its_kkt_point() {
    let p = make_curved_toy();
    let params = plada_defaults(
        &p,
        PladaOverrides {
            x_update_mode: Some(XUpdateMode::ExactSubproblem),
            max_iters: Some(200_000),
            ..Default::default()
        },
    );
    let r = plada::run_plada_with(&p, &params, None, Some(&CurvedToySubproblem), &mut trace::NullSink).unwrap();
    assert_eq!(r.stop_reason, StopReason::Converged);
    assert!((r.state.x[0] + 0.5).abs() < 1e-3, "{:?}", r.state.x);
    assert!((r.final_report.nu[0] - 1.0).abs() < 1e-2, "{:?}", r.final_report.nu);
}

#[test]
fn multiplier_certificates_stay_nonnegative_and_vanish_off_the_boundary() {
    let data = synthetic_fairness_dataset(2, 300).unwrap();
    let fair = make_fairness_logistic(
        data,
        &FairnessConfig::new(ConstraintKind::DemographicParity, SYNTHETIC_GROUP),
    )
    .unwrap();
    let smooth = [
        make_disk_problem(),
        make_nonconvex_qp(3, 6, 4).unwrap(),
        make_mnpc_linear(1, 3, 50, &[0.9, 0.9], 1.0).unwrap(),
    ];
    let budget = Some(3_000);
    for p in smooth.iter().chain(Some(&fair)) {
        let params = plada_defaults(
            p,
            PladaOverrides {
                max_iters: budget,
                ..Default::default()
            },
        );
        let mut mon = InvariantMonitor::for_plada(p, &params);
        run_plada(p, &params, None, &mut mon).unwrap();
        assert!(mon.tally.nu_ok(), "plada {}: {:?}", p.name, mon.tally);
        assert!(mon.tally.interior_coordinates > 0);
        if p.smoothness == Smoothness::Smooth {
            let params = ppala_defaults(
                p,
                PpalaOverrides {
                    max_iters: budget,
                    ..Default::default()
                },
            );
            let mut mon = InvariantMonitor::for_ppala(p, &params);
            run_ppala(p, &params, None, &mut mon).unwrap();
            assert!(mon.tally.nu_ok(), "ppala {}: {:?}", p.name, mon.tally);
        }
    }
}

/// Keeps every `stride`-th state plus the δ of every step.
struct Snapshots {
    stride: usize,
    states: Vec<IterateState>,
    deltas: Vec<f64>,
}

impl TraceSink for Snapshots {
    fn record(&mut self, _: &TraceRecord) {}

    fn on_step(&mut self, step: &StepView<'_>) {
        if self.states.is_empty() {
            self.states.push(step.prev.clone());
        }
        self.deltas.push(step.delta);
        if step.next.k.is_multiple_of(self.stride) {
            self.states.push(step.next.clone());
        }
    }
}

#[test]
fn augmented_lagrangian_decreases_across_windows() {
    for p in [
        make_disk_problem(),
        make_nonconvex_qp(7, 2, 1).unwrap(),
        make_nonconvex_qp(4, 10, 3).unwrap(),
    ] {
        let params = ppala_defaults(
            &p,
            PpalaOverrides {
                max_iters: Some(10_000),
                stop_on_kkt: Some(false),
                ..Default::default()
            },
        );
        let stride = 500;
        let mut snaps = Snapshots {
            stride,
            states: Vec::new(),
            deltas: Vec::new(),
        };
        run_ppala(&p, &params, None, &mut snaps).unwrap();
        assert_eq!(snaps.states.len(), 10_000 / stride + 1);
        let dp = DescentParams {
            eta: params.eta,
            tau: params.tau,
            rho: params.rho,
        };
        let values: Vec<f64> = snaps
            .states
            .iter()
            .map(|s| kkt::eval_ppal(&p, s, params.alpha, params.beta, params.rho).unwrap())
            .collect();
        for (w, pair) in values.windows(2).enumerate() {
            let allowance: f64 = snaps.deltas[w * stride..(w + 1) * stride]
                .iter()
                .map(|d| descent_coefficients(&p.constants, &dp, *d, Method::Ppala).2)
                .sum();
            assert!(
                pair[1] <= pair[0] + allowance + 1e-9,
                "{} window {w}: {} -> {} with allowance {allowance}",
                p.name,
                pair[0],
                pair[1]
            );
        }
    }
}

#[test]
fn augmentation_accounts_for_the_lagrangian_difference() {
    let problems = [
        make_disk_problem(),
        make_nonconvex_qp(5, 4, 3).unwrap(),
        make_mnpc_linear(2, 3, 20, &[1.0, 1.0], 1.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for p in &problems {
        let (n, m) = (p.dimension(), p.num_constraints());
        let center = p.regularizer.center(n);
        for _ in 0..100 {
            let x: Vec<f64> = center.iter().map(|c| c + rng.gen_range(-0.9..0.9)).collect();
            let mut draw = |lo: f64, hi: f64| -> Vec<f64> { (0..m).map(|_| rng.gen_range(lo..hi)).collect() };
            let s = IterateState {
                x,
                u: draw(0.0, 2.0),
                z: draw(-1.0, 1.0),
                lambda: draw(-3.0, 3.0),
                mu: draw(-3.0, 3.0),
                k: 0,
            };
            let (alpha, beta) = (10.0, 0.2);
            let rho = solver::rho_from(alpha, beta);
            let aug = kkt::eval_ppal(p, &s, alpha, beta, rho).unwrap();
            let plain = kkt::eval_p_lagrangian(p, &s, alpha, beta).unwrap();
            let g = p.constraint_values(&s.x).unwrap();
            let slack_sq: f64 = g.iter().zip(&s.u).map(|(g, u)| (g + u) * (g + u)).sum();
            let expect = 0.5 * rho * slack_sq;
            assert!(
                (aug - plain - expect).abs() <= 1e-10 * (1.0 + expect.abs()),
                "{}: {aug} - {plain} != {expect}",
                p.name
            );
        }
    }
}

/// Feasible grid points over `[lo, hi]²` attaining the minimal objective,
/// with ties up to 1e-9.
fn grid_minimizers(p: &ProblemSpec, lo: f64, hi: f64, points: usize) -> (f64, Vec<[f64; 2]>) {
    let step = (hi - lo) / (points - 1) as f64;
    let mut feasible = Vec::new();
    for i in 0..points {
        for j in 0..points {
            let x = [lo + i as f64 * step, lo + j as f64 * step];
            if p.constraint_values(&x).unwrap().iter().all(|g| *g <= 0.0) {
                feasible.push((p.evaluate_objective(&x).unwrap().0, x));
            }
        }
    }
    let best = feasible.iter().map(|(f, _)| *f).fold(f64::INFINITY, f64::min);
    let argmins = feasible
        .into_iter()
        .filter(|(f, _)| *f <= best + 1e-9)
        .map(|(_, x)| x)
        .collect();
    (best, argmins)
}

#[test]
fn disk_grid_oracle_agrees_with_the_analytic_point() {
    let p = make_disk_problem();
    let (f_grid, argmins) = grid_minimizers(&p, -2.0, 2.0, 401);
    let (x_star, _) = disk_kkt_point();
    let nearest = argmins
        .iter()
        .min_by(|a, b| linalg::dist(&a[..], &x_star).total_cmp(&linalg::dist(&b[..], &x_star)))
        .unwrap();
    for i in 0..2 {
        assert!((nearest[i] - x_star[i]).abs() <= 0.01 + 1e-12, "{nearest:?}");
    }
    assert!(f_grid >= -core::f64::consts::SQRT_2 - 1e-12);
    assert!(f_grid - (-core::f64::consts::SQRT_2) <= 0.01);

    let params = derive_ppala_params(10.0, 0.2, &p.constants, &PpalaOverrides::default()).unwrap();
    let r = run_ppala(&p, &params, None, &mut trace::NullSink).unwrap();
    // A point meeting the residual tolerance may sit slightly outside the
    // disk, so it can undercut the feasible grid by at most its infeasibility.
    assert!(r.final_objective >= f_grid - 0.01);
    assert!(r.final_objective <= f_grid + 0.01);
}

#[test]
fn small_qp_matches_the_grid_oracle() {
    let p = make_nonconvex_qp(7, 2, 1).unwrap();
    let (f_grid, argmins) = grid_minimizers(&p, -1.0, 1.0, 201);
    let tol = KktTolerances::uniform(1e-3);
    let plada = run_plada(
        &p,
        &plada_defaults(&p, PladaOverrides::default()),
        None,
        &mut trace::NullSink,
    )
    .unwrap();
    let ppala = run_ppala(
        &p,
        &ppala_defaults(&p, PpalaOverrides::default()),
        None,
        &mut trace::NullSink,
    )
    .unwrap();
    for (name, r) in [("plada", plada), ("ppala", ppala)] {
        assert!(r.final_report.satisfies(&tol), "{name}: {:?}", r.final_report);
        let f = r.final_objective;
        assert!(
            (f - f_grid).abs() <= 1e-2 || f < f_grid,
            "{name}: objective {f} vs grid {f_grid} at {:?}",
            argmins[0]
        );
    }
}

#[test]
fn ppala_defaults_solve_the_disk_problem() {
    let p = make_disk_problem();
    let params = ppala_defaults(&p, PpalaOverrides::default());
    let r = run_ppala(&p, &params, None, &mut trace::NullSink).unwrap();
    let (x_star, nu_star) = disk_kkt_point();
    assert_eq!(r.stop_reason, StopReason::Converged);
    assert!(r.iterations <= 50_000);
    assert!(linalg::dist(&r.state.x, &x_star) <= 1e-3);
    assert!((r.final_report.nu[0] - nu_star).abs() <= 1e-2);
}

#[test]
fn slow_schedule_decays_like_a_square_root() {
    // With p = 1 the multiplier error shrinks roughly like k^(-1/2), so
    // quadrupling the horizon should only about halve the dual gap.
    let p = make_disk_problem();
    let params = ppala_defaults(
        &p,
        PpalaOverrides {
            p: Some(1.0),
            max_iters: Some(64_000),
            stop_on_kkt: Some(false),
            ..Default::default()
        },
    );
    let mut sink = VecSink::default();
    run_ppala(&p, &params, None, &mut sink).unwrap();
    let gap = |k: usize| sink.records[k].dual_gap;
    let ratio = gap(64_000) / gap(16_000);
    assert!(ratio > 0.4 && ratio < 0.65, "{ratio}");
    assert_eq!(delta_schedule_ppala(3, 1.0, 1.0).unwrap(), 0.25);
}

#[test]
fn identical_inputs_give_identical_traces() {
    let p = make_nonconvex_qp(11, 8, 2).unwrap();
    let params = ppala_defaults(
        &p,
        PpalaOverrides {
            max_iters: Some(2_000),
            ..Default::default()
        },
    );
    let mut a = VecSink::default();
    let mut b = VecSink::default();
    let ra = run_ppala(&p, &params, None, &mut a).unwrap();
    let rb = run_ppala(&p, &params, None, &mut b).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(ra.state, rb.state);
}
