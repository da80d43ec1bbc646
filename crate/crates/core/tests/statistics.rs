//! Monte Carlo estimates against the analytic values they should reproduce.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use bellsim_core::chsh::{chsh, correlation, CorrelationSet, SettingPair, SettingsQuad};
use bellsim_core::coin::{coin_trial_log, simulate_coin, wing_two_signal, FaultSpec};
use bellsim_core::models::{lhv_joint, optimal_qm_settings, reference_lhv_model, ModelKind, DEFAULT_RESOLUTION};
use bellsim_core::montecarlo::{
    expected_correlations, run, run_with_selection, ClassRates, RunConfig,
};
use bellsim_core::noise::{joint_detection_prob, ErasureRates, NoiseQuad};

#[test]
fn reference_model_respects_local_bound_on_grid() {
    let steps = 20;
    let angles: Vec<f64> = (0..steps).map(|i| i as f64 * FRAC_PI_2 / steps as f64).collect();
    let model = reference_lhv_model();
    // E depends only on the (wing I, wing II) angle pair, so tabulate it once
    let table: Vec<Vec<f64>> = angles
        .iter()
        .map(|&x| {
            angles
                .iter()
                .map(|&y| correlation(&lhv_joint(&model, x, y, DEFAULT_RESOLUTION).unwrap()).unwrap())
                .collect()
        })
        .collect();
    let mut max_s: f64 = 0.0;
    for a in 0..steps {
        for b in 0..steps {
            for c in 0..steps {
                for d in 0..steps {
                    let corr = CorrelationSet {
                        e_ab: table[a][b],
                        e_ad: table[a][d],
                        e_cb: table[c][b],
                        e_cd: table[c][d],
                    };
                    max_s = max_s.max(chsh(&corr).value());
                }
            }
        }
    }
    assert!(max_s <= 2.0 + 1e-9, "{max_s}");
    // the bound is saturated somewhere on the grid
    assert!(max_s > 2.0 - 1e-9, "{max_s}");
}

#[test]
fn coin_locality_wing_two_depends_on_orientation_only() {
    let fault = FaultSpec::new(0.4).unwrap();
    let log = coin_trial_log(2024, 5_000, &fault);
    let recorded: Vec<u8> = log
        .iter()
        .flat_map(|t| [t.cameras[2], t.cameras[3]])
        .map(|o| o.is_plus() as u8)
        .collect();
    let recomputed: Vec<u8> = log
        .iter()
        .flat_map(|t| {
            [
                wing_two_signal(t.orientation, SettingPair::AB),
                wing_two_signal(t.orientation, SettingPair::AD),
            ]
        })
        .map(|o| o.is_plus() as u8)
        .collect();
    assert_eq!(recorded, recomputed);
    // stage inputs on wing II carry the same camera signal
    for t in &log {
        for (i, &(_, b)) in t.stage_inputs.iter().enumerate() {
            let expected = if i % 2 == 0 { t.cameras[2] } else { t.cameras[3] };
            assert_eq!(b, expected);
        }
    }
}

#[test]
fn coin_converges_to_two_plus_epsilon() {
    let fault = FaultSpec::new(0.1).unwrap();
    let mut failures = 0;
    for seed in 0..10 {
        let t = simulate_coin(1_000_000, &fault, seed, 4).unwrap();
        if (t.s - 2.1).abs() >= 4.0 * t.se_s {
            failures += 1;
        }
    }
    assert!(failures <= 1, "{failures} seeds out of tolerance");
}

#[test]
fn coin_single_run_matches_table() {
    let t = simulate_coin(1_000_000, &FaultSpec::new(0.2).unwrap(), 3, 8).unwrap();
    let ad = &t.stages[1];
    let se = ((1.0f64 - 0.64) / 1e6).sqrt();
    assert!((ad.e - 0.8).abs() < 4.0 * se, "{}", ad.e);
    // only + can drop, so the (+,-) counter cell stays empty
    assert_eq!(ad.counts.n_pm, 0);
    assert!((t.s - 2.2).abs() < 4.0 * t.se_s);
}

#[test]
fn estimator_error_scales_as_inverse_sqrt() {
    let sizes = [10_000u64, 100_000, 1_000_000];
    let exact = ModelKind::Qm.correlations(&optimal_qm_settings(), 1).unwrap();
    let mut points = Vec::new();
    for &m in &sizes {
        let mut total = 0.0;
        let mut count = 0.0;
        for seed in 0..10 {
            let mut c = RunConfig::new(ModelKind::Qm, optimal_qm_settings(), m, 1000 + seed);
            c.shards = 8;
            let stats = run(&c).unwrap();
            for pair in SettingPair::ALL {
                total += (stats.pair(pair).e - exact.get(pair)).abs();
                count += 1.0;
            }
        }
        points.push(((m as f64).ln(), (total / count).ln()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
}

#[test]
fn coincidence_rate_matches_detection_probability() {
    let trials = 200_000;
    for (i, &(da, db)) in [(0.1, 0.2), (0.5, 0.5), (0.95, 0.3), (0.0, 0.7), (0.33, 0.01)]
        .iter()
        .enumerate()
    {
        let mut c = RunConfig::new(ModelKind::Qm, optimal_qm_settings(), trials, 50 + i as u64);
        let rates = ErasureRates::new(da, db).unwrap();
        c.erasure = Some(rates);
        let p = joint_detection_prob(&rates);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for stats in run(&c).unwrap().pairs {
            let rate = stats.detected as f64 / stats.emitted as f64;
            assert!((rate - p).abs() < 4.0 * se, "δ=({da},{db}): {rate} vs {p}");
        }
    }
}

#[test]
fn noisy_estimates_match_scaled_correlations() {
    let settings = SettingsQuad::new(0.2, 0.9, 1.3, 0.4).unwrap();
    for model in [ModelKind::LhvReference, ModelKind::Qm] {
        let mut c = RunConfig::new(model, settings, 200_000, 17);
        c.noise = Some(NoiseQuad::new(0.1, 0.2, 0.05, 0.3).unwrap());
        c.shards = 4;
        let expected = expected_correlations(&c, DEFAULT_RESOLUTION).unwrap();
        let stats = run(&c).unwrap();
        for pair in SettingPair::ALL {
            let p = stats.pair(pair);
            assert!(
                p.z_score(expected.get(pair)) < 4.0,
                "{model:?} {pair:?}: {} vs {}",
                p.e,
                expected.get(pair)
            );
        }
    }
}

#[test]
fn qm_run_violates_and_lhv_run_does_not() {
    let c = RunConfig::new(ModelKind::Qm, optimal_qm_settings(), 1_000_000, 7);
    let stats = run(&c).unwrap();
    assert!((stats.s - 2.0 * SQRT_2).abs() < 4.0 * stats.se_s);

    let mut lhv = c;
    lhv.model = ModelKind::LhvReference;
    let stats = run(&lhv).unwrap();
    assert!(stats.s < 2.0 + 4.0 * stats.se_s, "{}", stats.s);
}

#[test]
fn selection_bias_moves_the_correlation() {
    let c = RunConfig::new(ModelKind::Qm, optimal_qm_settings(), 1_000_000, 21);
    let fair = run_with_selection(&c, &ClassRates::new(0.5, 0.5).unwrap()).unwrap();
    let ab = fair.pair(SettingPair::AB);
    assert!(ab.e.abs() < 4.0 * ab.se, "{}", ab.e);

    let biased = run_with_selection(&c, &ClassRates::new(0.75, 0.25).unwrap()).unwrap();
    let ab = biased.pair(SettingPair::AB);
    assert!((ab.e - 0.5).abs() < 4.0 * ab.se, "{}", ab.e);

    let only_first = run_with_selection(&c, &ClassRates::new(1.0, 0.0).unwrap()).unwrap();
    assert_eq!(only_first.pair(SettingPair::AB).e, 1.0);
    assert!(only_first.pairs.iter().all(|p| p.counts.n_pm + p.counts.n_mp == 0));
}
