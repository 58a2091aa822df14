use std::sync::Arc;

use ppl_core::linalg::{Features, Matrix};
use ppl_core::problem::{FnConstraints, FnObjective, Provenance};
use ppl_core::problems::*;
use ppl_core::{ConstantEstimates, ProblemSpec, Regularizer, Smoothness};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_weight_constraint_values_match_closed_forms() {
    let data = synthetic_fairness_dataset(3, 400).unwrap();
    let c = DEFAULT_TOLERANCE_C;
    for (kind, form, m) in [
        (ConstraintKind::DemographicParity, EoFormulation::MaxSingleConstraint, 1),
        (ConstraintKind::EqualizedOdds, EoFormulation::MaxSingleConstraint, 1),
        (ConstraintKind::EqualizedOdds, EoFormulation::TwoConstraints, 2),
    ] {
        let mut config = FairnessConfig::new(kind, SYNTHETIC_GROUP);
        config.eo_formulation = form;
        let p = make_fairness_logistic(data.clone(), &config).unwrap();
        let g = p.constraint_values(&vec![0.0; p.dimension()]).unwrap();
        assert_eq!(g.len(), m);
        assert!(g.iter().all(|v| (v + c).abs() <= 1e-12), "{kind:?}: {g:?}");
        let f = p.evaluate_objective(&vec![0.0; p.dimension()]).unwrap().0;
        assert!((f - std::f64::consts::LN_2).abs() <= 1e-12);
    }

    let groups = vec![vec![0, 1, 2], (10..60).collect()];
    let p = make_intersectional(
        data,
        groups,
        &FairnessConfig::new(ConstraintKind::Intersectional, SYNTHETIC_GROUP),
    )
    .unwrap();
    let g = p.constraint_values(&vec![0.0; p.dimension()]).unwrap();
    assert!(g.iter().all(|v| (v + c).abs() <= 1e-12), "{g:?}");

    for classes in [3, 4] {
        let kappa = vec![1.0; classes - 1];
        let p = make_mnpc_linear(8, classes, 25, &kappa, 1.0).unwrap();
        let zero = vec![0.0; p.dimension()];
        let half = 0.5 * (classes - 1) as f64;
        assert!((p.evaluate_objective(&zero).unwrap().0 - half).abs() <= 1e-12);
        let g = p.constraint_values(&zero).unwrap();
        assert!(g.iter().all(|v| (v - (half - 1.0)).abs() <= 1e-12), "{g:?}");
    }

    for seed in 0..5 {
        let p = make_nonconvex_qp(seed, 6, 3).unwrap();
        let g = p.constraint_values(&[0.0; 6]).unwrap();
        assert!(g.iter().all(|v| (v - QP_ORIGIN_VALUE).abs() <= 1e-12));
    }
}

/// Rebuilds `data` with rows reordered by `order`, carrying the masks along.
fn permuted(data: &Dataset, order: &[usize]) -> Dataset {
    let rows: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| (0..data.dim()).map(|j| data.features.value(i, j)).collect())
        .collect();
    let labels = order.iter().map(|&i| data.labels[i]).collect();
    let mut out = Dataset::new(Features::Dense(Matrix::from_rows(&rows)), labels).unwrap();
    let mut position = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    for (name, rows) in &data.group_masks {
        out.insert_mask(name.clone(), rows.iter().map(|&i| position[i]).collect())
            .unwrap();
    }
    out
}

#[test]
fn parity_and_odds_ignore_row_order_within_groups() {
    let data = synthetic_fairness_dataset(21, 250).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut members = data.mask(SYNTHETIC_GROUP).unwrap().to_vec();
    let mut others = data.mask("not:group").unwrap().to_vec();
    members.shuffle(&mut rng);
    others.shuffle(&mut rng);
    // Interleave the shuffled groups so row positions move across the file too.
    let mut order = Vec::with_capacity(data.rows());
    let (mut a, mut b) = (members.into_iter(), others.into_iter());
    loop {
        match (a.next(), b.next()) {
            (None, None) => break,
            (x, y) => order.extend(x.into_iter().chain(y)),
        }
    }
    let shuffled = permuted(&data, &order);

    for kind in [ConstraintKind::DemographicParity, ConstraintKind::EqualizedOdds] {
        let config = FairnessConfig::new(kind, SYNTHETIC_GROUP);
        let p = make_fairness_logistic(data.clone(), &config).unwrap();
        let q = make_fairness_logistic(shuffled.clone(), &config).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..p.dimension()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let gp = p.constraint_values(&x).unwrap();
            let gq = q.constraint_values(&x).unwrap();
            for (a, b) in gp.iter().zip(&gq) {
                assert!((a - b).abs() <= 1e-12, "{kind:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn planted_intersectional_disparity() {
    // Under w = (1) with all labels +1, group A has margins 0.5 and group B
    // margins 1.5, so A's hinge terms are 0.5 and B's are 0.
    let rows = vec![vec![0.5], vec![0.5], vec![0.5], vec![1.5], vec![1.5]];
    let data = Dataset::new(Features::Dense(Matrix::from_rows(&rows)), vec![1.0; 5]).unwrap();
    let c = 0.05;
    let mut config = FairnessConfig::new(ConstraintKind::Intersectional, "unused");
    config.tolerance_c = c;
    let p = make_intersectional(data, vec![vec![0, 1, 2], vec![3, 4]], &config).unwrap();

    let hinge = |margin: f64| (1.0f64 - margin).max(0.0);
    let mean_all = (3.0 * hinge(0.5) + 2.0 * hinge(1.5)) / 5.0;
    let g = p.constraint_values(&[1.0]).unwrap();
    assert!((g[0] - (hinge(0.5) - mean_all - c)).abs() <= 1e-12, "{g:?}");
    assert!((g[1] - (hinge(1.5) - mean_all - c)).abs() <= 1e-12, "{g:?}");
    assert!(g[0] > 0.0 && g[1] < 0.0);
}

#[test]
fn constant_objective_has_zero_sampled_smoothness() {
    let p = ProblemSpec::new(
        "constant",
        3,
        1,
        Box::new(FnObjective(|_: &[f64], g: &mut [f64]| {
            g.fill(0.0);
            4.0
        })),
        Box::new(FnConstraints(|x: &[f64], v: &mut [f64], j: &mut Matrix| {
            v[0] = x[0] - 0.5;
            j.set(0, 0, 1.0);
        })),
        Regularizer::uniform_box(3, -1.0, 1.0),
        ConstantEstimates::new(1.0, 1.0, 1.0, 1.0),
        Smoothness::Smooth,
    )
    .unwrap();
    let c = p.estimate_constants(1_000, 4).unwrap();
    assert_eq!(c.l_f, 0.0);
    assert_eq!(c.l_g, 0.0);
    assert_eq!(c.provenance, Provenance::Sampled);
}

#[test]
fn problems_can_be_evaluated_from_many_threads() {
    let p = Arc::new(make_nonconvex_qp(9, 10, 4).unwrap());
    let x: Vec<f64> = (0..10).map(|i| (i as f64 - 4.5) / 10.0).collect();
    let expect = p.evaluate_objective(&x).unwrap().0;
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (p, x) = (p.clone(), x.clone());
            std::thread::spawn(move || p.evaluate_objective(&x).unwrap().0)
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), expect);
    }
}
