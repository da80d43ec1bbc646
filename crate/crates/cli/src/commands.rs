//! One function per subcommand. Each returns the report plus whether its
//! statistical self-check passed.

use bellsim_core::chsh::{chsh, correlation, CorrelationSet, JointDistribution, SettingPair, SettingsQuad};
use bellsim_core::coin::{camera_joint, coin_s, counter_correlations, counter_joint, simulate_coin, FaultSpec, FAULTY_LINK, STAGES};
use bellsim_core::loophole::{
    equilibrate_sampling_log_prob, hypergeometric_balanced_log_prob, overlap_limit_scan, s_delta,
    s_delta_range, DeltaQuad, SampleSpec,
};
use bellsim_core::models::{optimal_qm_settings, ModelKind};
use bellsim_core::montecarlo::{
    expected_correlations, expected_selection_correlations, run, run_with_selection, ClassRates, RunConfig,
};
use bellsim_core::noise::{chsh_value, critical_epsilon, noisy_correlations, s_epsilon, ErasureRates, NoiseQuad};
use serde_json::{json, Value};

use crate::args::{AnalyticArgs, CoinArgs, LoopholeCommand, ModelArg, NoiseArgs, SettingsArgs, SimulateArgs};
use crate::report::Report;
use crate::CliError;

/// z-scores above this fail the self-check.
pub const Z_LIMIT: f64 = 5.0;

pub struct CommandOutput {
    pub report: Report,
    pub self_check_passed: bool,
}

impl From<Report> for CommandOutput {
    fn from(report: Report) -> Self {
        Self {
            report,
            self_check_passed: true,
        }
    }
}

fn model_kind(m: ModelArg) -> ModelKind {
    match m {
        ModelArg::Qm => ModelKind::Qm,
        ModelArg::LhvRef => ModelKind::LhvReference,
    }
}

pub fn resolve_settings(s: &SettingsArgs) -> Result<SettingsQuad, CliError> {
    let radians = [s.a, s.b, s.c, s.d];
    let degrees = [s.a_deg, s.b_deg, s.c_deg, s.d_deg];
    let any_rad = radians.iter().any(Option::is_some);
    let any_deg = degrees.iter().any(Option::is_some);
    if s.optimal && (any_rad || any_deg) {
        return Err(CliError::Usage("--optimal cannot be combined with explicit angles".into()));
    }
    if any_rad && any_deg {
        return Err(CliError::Usage(
            "angles must be given all in radians (--a ...) or all in degrees (--a-deg ...)".into(),
        ));
    }
    if s.optimal {
        return Ok(optimal_qm_settings());
    }
    let (values, degrees_used) = if any_deg { (degrees, true) } else { (radians, false) };
    let [Some(a), Some(b), Some(c), Some(d)] = values else {
        return Err(CliError::Usage(
            "settings required: pass --optimal or all four of --a --b --c --d (or the -deg forms)".into(),
        ));
    };
    let quad = if degrees_used {
        SettingsQuad::from_degrees(a, b, c, d)?
    } else {
        SettingsQuad::new(a, b, c, d)?
    };
    Ok(quad)
}

pub fn resolve_noise(n: &NoiseArgs) -> Result<Option<NoiseQuad>, CliError> {
    let given = [n.eps, n.eps1, n.eps2, n.eps3, n.eps4];
    if given.iter().all(Option::is_none) {
        return Ok(None);
    }
    let base = n.eps.unwrap_or(0.0);
    Ok(Some(NoiseQuad::new(
        n.eps1.unwrap_or(base),
        n.eps2.unwrap_or(base),
        n.eps3.unwrap_or(base),
        n.eps4.unwrap_or(base),
    )?))
}

fn fixed<const N: usize>(flag: &str, values: &[f64]) -> Result<[f64; N], CliError> {
    values
        .try_into()
        .map_err(|_| CliError::Usage(format!("{flag} takes {N} comma-separated values, got {}", values.len())))
}

fn joint_json(pair: SettingPair, j: &JointDistribution) -> Value {
    json!({
        "pair": pair.label(),
        "p_pp": j.p_pp,
        "p_pm": j.p_pm,
        "p_mp": j.p_mp,
        "p_mm": j.p_mm,
    })
}

fn settings_json(q: &SettingsQuad) -> Value {
    json!({ "a": q.a, "b": q.b, "c": q.c, "d": q.d })
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values are plain data")
}

/// `exp(log_p)` when it is a normal float, otherwise null.
fn probability(log_p: f64) -> Value {
    let p = log_p.exp();
    if p.is_normal() {
        json!(p)
    } else {
        Value::Null
    }
}

fn z_json(z: f64) -> Value {
    if z.is_finite() {
        json!(z)
    } else {
        Value::Null
    }
}

fn analytic_inputs(args: &AnalyticArgs, settings: &SettingsQuad, noise: &Option<NoiseQuad>) -> Value {
    json!({
        "model": model_kind(args.model).label(),
        "settings": settings_json(settings),
        "noise": noise.as_ref().map(to_value),
        "resolution": args.resolution,
    })
}

pub fn cmd_analytic(args: &AnalyticArgs) -> Result<CommandOutput, CliError> {
    let settings = resolve_settings(&args.settings)?;
    let noise = resolve_noise(&args.noise)?;
    let model = model_kind(args.model);
    if args.resolution == 0 {
        return Err(CliError::Usage("--resolution must be at least 1".into()));
    }
    let joints = model.joints(&settings, args.resolution)?;
    let mut e = [0.0; 4];
    for (slot, j) in e.iter_mut().zip(&joints) {
        *slot = correlation(j)?;
    }
    let corr = CorrelationSet::from_array(e)?;
    let s = chsh(&corr);

    let mut results = json!({
        "joints": SettingPair::ALL.iter().map(|&p| joint_json(p, &joints[p.index()])).collect::<Vec<_>>(),
        "correlations": to_value(&corr),
        "s": s.value(),
        "violates_local_bound": s.violates_local_bound(),
    });
    if let Some(quad) = &noise {
        let s_eps = s_epsilon(&corr, quad);
        results["noisy_correlations"] = to_value(&noisy_correlations(&corr, quad)?);
        results["s_epsilon"] = json!(s_eps.value());
        results["noisy_violates_local_bound"] = json!(s_eps.violates_local_bound());
    }
    Ok(Report::new("analytic", analytic_inputs(args, &settings, &noise), results, None).into())
}

fn shard_count(requested: Option<usize>) -> Result<usize, CliError> {
    match requested {
        Some(0) => Err(CliError::Usage("--shards must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<CommandOutput, CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let shards = shard_count(args.shards)?;
    let a = &args.analytic;
    let settings = resolve_settings(&a.settings)?;
    let noise = resolve_noise(&a.noise)?;
    let erasure = match (args.delta_a, args.delta_b) {
        (None, None) => None,
        (da, db) => Some(ErasureRates::new(da.unwrap_or(0.0), db.unwrap_or(0.0))?),
    };
    let class_rates = match &args.class_rates {
        Some(r) => {
            let [r1, r2] = fixed::<2>("--class-rates", r)?;
            Some(ClassRates::new(r1, r2)?)
        }
        None => None,
    };

    let config = RunConfig {
        trials: args.trials,
        seed: args.seed,
        shards,
        settings,
        noise,
        erasure,
        model: model_kind(a.model),
    };
    eprintln!(
        "simulate: {} trials per setting pair, seed {}, {} shard(s)",
        args.trials, args.seed, shards
    );
    let (stats, expected) = match &class_rates {
        Some(rates) => (
            run_with_selection(&config, rates)?,
            expected_selection_correlations(&config, rates)?,
        ),
        None => (run(&config)?, expected_correlations(&config, a.resolution)?),
    };
    let expected_s = chsh(&expected).value();

    let mut z = serde_json::Map::new();
    let mut max_z: f64 = 0.0;
    for pair in SettingPair::ALL {
        let zp = stats.pair(pair).z_score(expected.get(pair));
        max_z = max_z.max(zp);
        z.insert(pair.label().into(), z_json(zp));
    }
    let zs = stats.s_z_score(expected_s);
    max_z = max_z.max(zs);
    z.insert("s".into(), z_json(zs));
    let passed = max_z <= Z_LIMIT;

    let mut inputs = analytic_inputs(a, &settings, &noise);
    inputs["trials"] = json!(args.trials);
    inputs["erasure"] = erasure.as_ref().map_or(Value::Null, to_value);
    inputs["class_rates"] = class_rates.as_ref().map_or(Value::Null, to_value);
    let results = json!({
        "mode": if class_rates.is_some() { "selection" } else { "chsh" },
        "stats": to_value(&stats),
        "analytic": {
            "correlations": to_value(&expected),
            "s": expected_s,
        },
        "z_scores": Value::Object(z),
        "self_check": {
            "z_limit": Z_LIMIT,
            "max_z": z_json(max_z),
            "passed": passed,
        },
    });
    Ok(CommandOutput {
        report: Report::new("simulate", inputs, results, Some(args.seed)),
        self_check_passed: passed,
    })
}

pub fn cmd_coin(args: &CoinArgs) -> Result<CommandOutput, CliError> {
    let fault = FaultSpec::new(args.eps)?;
    let corr = counter_correlations(&fault)?;
    let s = coin_s(fault.epsilon)?;
    let table: Vec<Value> = SettingPair::ALL
        .iter()
        .zip(STAGES)
        .map(|(&pair, stage)| {
            let mut row = json!({ "stage": stage });
            if let (Some(map), Value::Object(cells)) =
                (row.as_object_mut(), joint_json(pair, &counter_joint(pair, &fault)))
            {
                map.extend(cells);
            }
            row
        })
        .collect();
    let cameras: Vec<Value> = SettingPair::ALL
        .iter()
        .map(|&pair| joint_json(pair, &camera_joint(pair)))
        .collect();
    let mut results = json!({
        "camera_table": cameras,
        "counter_table": table,
        "correlations": to_value(&corr),
        "s": s.value(),
        "violates_local_bound": s.violates_local_bound(),
    });
    let mut inputs = json!({ "eps": fault.epsilon, "faulty_link": FAULTY_LINK, "trials": args.trials });

    let mut passed = true;
    let mut seed = None;
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        let shards = shard_count(args.shards)?;
        eprintln!("coin: {trials} trials, seed {}, {shards} shard(s)", args.seed);
        let tallies = simulate_coin(trials, &fault, args.seed, shards)?;
        let mut z = serde_json::Map::new();
        let mut max_z: f64 = 0.0;
        for (stage, pair) in tallies.stages.iter().zip(SettingPair::ALL) {
            let zp = bellsim_core::montecarlo::PairStats::from_counts(pair, trials, stage.counts)?
                .z_score(corr.get(pair));
            max_z = max_z.max(zp);
            z.insert(stage.stage.clone(), z_json(zp));
        }
        let zs = tallies.s_z_score(s.value());
        max_z = max_z.max(zs);
        z.insert("s".into(), z_json(zs));
        passed = max_z <= Z_LIMIT;
        results["simulation"] = to_value(&tallies);
        results["z_scores"] = Value::Object(z);
        results["self_check"] = json!({ "z_limit": Z_LIMIT, "max_z": z_json(max_z), "passed": passed });
        inputs["seed"] = json!(args.seed);
        seed = Some(args.seed);
    }
    Ok(CommandOutput {
        report: Report::new("coin", inputs, results, seed),
        self_check_passed: passed,
    })
}

pub fn cmd_loopholes(command: &LoopholeCommand) -> Result<CommandOutput, CliError> {
    let report = match command {
        LoopholeCommand::FairSampling { n, phi } => {
            let spec = SampleSpec::new(*n, *phi)?;
            let printed = equilibrate_sampling_log_prob(&spec);
            let balanced = hypergeometric_balanced_log_prob(&spec);
            Report::new(
                "loopholes fair-sampling",
                json!({ "n": n, "phi": phi }),
                json!({
                    "detected": spec.detected(),
                    "detected_per_class": spec.detected_per_class(),
                    "printed_formula": { "log_prob": printed, "prob": probability(printed) },
                    "hypergeometric": { "log_prob": balanced, "prob": probability(balanced) },
                }),
                None,
            )
        }
        LoopholeCommand::SDeltaRange { corr, deltas } => {
            let c = CorrelationSet::from_array(fixed::<4>("--corr", corr)?)?;
            let range = s_delta_range(&c);
            let mut results = json!({
                "low": range.low,
                "high": range.high,
                "witness": to_value(&range.witness),
                "s": chsh(&c).value(),
            });
            if let Some(d) = deltas {
                let [d1, d2, d3, d4] = fixed::<4>("--deltas", d)?;
                let quad = DeltaQuad::new(d1, d2, d3, d4);
                results["s_delta"] = json!(s_delta(&c, &quad)?.value());
            }
            Report::new(
                "loopholes s-delta-range",
                json!({ "corr": to_value(&c), "deltas": deltas }),
                results,
                None,
            )
        }
        LoopholeCommand::Overlap { n, ntot_list } => {
            let logs = overlap_limit_scan(*n, ntot_list)?;
            let table: Vec<Value> = ntot_list
                .iter()
                .zip(&logs)
                .map(|(n_tot, &lp)| json!({ "n_tot": n_tot, "log_prob": lp, "prob": probability(lp) }))
                .collect();
            let decreasing = logs.windows(2).all(|w| w[1] < w[0]);
            Report::new(
                "loopholes overlap",
                json!({ "n": n, "ntot_list": ntot_list }),
                json!({ "table": table, "strictly_decreasing": decreasing }),
                None,
            )
        }
        LoopholeCommand::Threshold { s_ideal } => {
            let eps = critical_epsilon(chsh_value(*s_ideal)?)?;
            Report::new(
                "loopholes threshold",
                json!({ "s_ideal": s_ideal }),
                json!({ "epsilon_star": eps.value() }),
                None,
            )
        }
    };
    Ok(report.into())
}
