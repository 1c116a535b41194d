//! Mode implementations. Each mode maps a validated configuration to a set of
//! named CSV artifacts plus human-readable summary lines; file IO stays in the
//! binary entry point so runs are testable in memory.

use anyhow::{anyhow, bail, Context};
use calreg_core::characterize::{
    build_universal_simulator, converse_check_fields, omnipredictor_check, verify_converse,
    verify_forward, HypothesisClass, NotionSet,
};
use calreg_core::entropy::{self, subgradient_weight, EntropyNotion};
use calreg_core::generators;
use calreg_core::lowerbound::{
    build_design, build_lb_instance, counting_demo, half_supported_pool, verify_entropy_bound,
    verify_implication, HiddenBitsSpec,
};
use calreg_core::mirror::{
    md_update, verify_md_inequality, verify_pinsker_strong_convexity, verify_softmax_lipschitz,
    ConjugatePairState,
};
use calreg_core::regularity::{
    complexity_of, run_regularity, DistinguisherFamily, RegularityInstance, RegularityOptions,
    RegularityResult, RoundingMode, WeightFamily,
};
use calreg_core::seeding::{substream, trial_substream};
use calreg_core::simplex::{
    approx_softmax, l1_distance, softmax, Distribution, FiniteDomain, FixedPointFormat, Kernel,
    SimplexVector, VectorField,
};
use calreg_core::uniform::{
    erm_calibration_oracle, erm_calibration_sample_size, erm_distinguishing_oracle,
    exact_max_violation_oracle, per_check_failure_budget, run_uniform_regularity,
    zero_calibration_oracle, zero_distinguishing_oracle, UniformInstance,
};
use rand::Rng;

use crate::config::{ExperimentConfig, Mode};
use crate::csvio::Table;
use crate::parallel::parallel_map;

/// Output of a mode run: named files plus summary lines; `exit_ok` is false
/// when a check-style mode observed a failure.
pub struct RunArtifacts {
    pub files: Vec<(String, String)>,
    pub summary: Vec<String>,
    pub exit_ok: bool,
}

const TRACE_HEADER: &[&str] = &[
    "update_index",
    "family",
    "member",
    "violation",
    "potential_before",
    "potential_after",
];

fn trace_table(result: &RegularityResult) -> Table {
    let mut table = Table::new(TRACE_HEADER);
    for rec in &result.trace {
        table.row(&[
            rec.update_index.into(),
            rec.family.as_str().into(),
            rec.member.into(),
            rec.violation.into(),
            rec.potential_before.into(),
            rec.potential_after.into(),
        ]);
    }
    table
}

fn notions_from(config: &ExperimentConfig) -> anyhow::Result<Vec<EntropyNotion>> {
    let eps_sigma = config.eps() / 3.0;
    config
        .notion_names()
        .iter()
        .map(|name| Ok(EntropyNotion::by_name(name, eps_sigma)?))
        .collect()
}

fn regularity_options(config: &ExperimentConfig) -> RegularityOptions {
    RegularityOptions {
        rounding: if config.exact_double.unwrap_or(false) {
            RoundingMode::ExactDouble
        } else {
            RoundingMode::FixedPoint
        },
        strict_bits: config.strict_bits.unwrap_or(false),
        ..Default::default()
    }
}

/// The bundled two-point instance: two points with opposite deterministic
/// labels and the single distinguisher that separates them.
fn two_point_instance(eps: f64, seed: u64) -> anyhow::Result<RegularityInstance> {
    let domain = FiniteDomain::indexed(2)?;
    let mu = Distribution::uniform(2)?;
    let target = Kernel::new(vec![
        SimplexVector::vertex(2, 0)?,
        SimplexVector::vertex(2, 1)?,
    ])?;
    let field = VectorField::new(vec![vec![1.0, -1.0], vec![-1.0, 1.0]], true)?;
    Ok(RegularityInstance::new(
        domain,
        mu,
        target,
        DistinguisherFamily::new(vec![(field, 1)])?,
        WeightFamily::empty(2),
        eps,
        seed,
    )?)
}

fn build_instance(config: &ExperimentConfig, seed: u64) -> anyhow::Result<RegularityInstance> {
    match config.instance.as_deref() {
        Some("two_point") => two_point_instance(config.eps.unwrap_or(0.1), seed),
        _ => {
            let notions = notions_from(config)?;
            Ok(generators::random_regularity_instance(
                seed,
                config.n_points(),
                config.label_count(),
                config.num_distinguishers(),
                config.eps(),
                &notions,
            )?)
        }
    }
}

pub fn run_nonuniform(config: &ExperimentConfig, seed: u64) -> anyhow::Result<RunArtifacts> {
    let instance = build_instance(config, seed)?;
    let result = run_regularity(&instance, &regularity_options(config))?;

    let trace = trace_table(&result);
    let mut summary = Table::new(&[
        "mode",
        "seed",
        "n_points",
        "label_count",
        "eps",
        "updates",
        "update_cap",
        "witness_distinguisher",
        "witness_weight",
        "complexity",
        "dual_drift_report",
    ]);
    summary.row(&[
        "nonuniform".into(),
        seed.into(),
        instance.domain.len().into(),
        instance.label_count().into(),
        instance.eps.into(),
        result.updates.into(),
        instance.update_cap().into(),
        result.witness_distinguisher.into(),
        result.witness_weight.into(),
        complexity_of(&result).into(),
        result.dual_drift_report.into(),
    ]);

    let ok = result.witness_distinguisher <= instance.eps + 1e-9
        && result.witness_weight <= instance.eps + 1e-9
        && result.updates <= instance.update_cap();
    Ok(RunArtifacts {
        files: vec![
            ("trace.csv".into(), trace.render()),
            ("summary.csv".into(), summary.render()),
        ],
        summary: vec![format!(
            "nonuniform: {} updates (cap {}), witnesses {:.4} / {:.4}",
            result.updates,
            instance.update_cap(),
            result.witness_distinguisher,
            result.witness_weight
        )],
        exit_ok: ok,
    })
}

pub fn run_uniform(config: &ExperimentConfig, seed: u64) -> anyhow::Result<RunArtifacts> {
    let n = config.n_points();
    let l = config.label_count();
    let eps = config.eps();
    let delta = config.delta();
    let trials = config.trials();
    let notion_list = notions_from(config)?;
    let budget = per_check_failure_budget(eps, delta, l);
    let oracle_a_name = config.oracle_a.clone().unwrap_or_else(|| "erm_distinguisher".into());
    let oracle_b_name = config.oracle_b.clone().unwrap_or_else(|| "erm_calibration".into());

    let outcomes = parallel_map((0..trials as u64).collect(), |_, &trial| {
        let run_seed = trial_substream(seed, "cli-uniform-seed", trial).random::<u64>();
        let mut rng = substream(run_seed, "cli-uniform-instance");
        let mu = generators::random_distribution(n, &mut rng)?;
        let target = generators::random_kernel(n, l, &mut rng)?;
        let fields: Vec<(VectorField, u64)> = (0..config.num_distinguishers())
            .map(|_| Ok((generators::random_field(n, l, &mut rng)?, 1)))
            .collect::<calreg_core::Result<_>>()?;
        let family = DistinguisherFamily::new(fields)?;
        let weights = WeightFamily::new(
            notion_list
                .iter()
                .map(|notion| Ok((subgradient_weight(notion, eps)?, 1)))
                .collect::<calreg_core::Result<Vec<_>>>()?,
            l,
        )?;
        let m_a = ((32.0 / (eps / 2.0) / (eps / 2.0))
            * (4.0 * family.len().max(1) as f64 / budget).ln())
        .ceil() as usize;
        let oracle_a = match oracle_a_name.as_str() {
            "zero" => zero_distinguishing_oracle(n, l),
            "exact_max_violation" => exact_max_violation_oracle(),
            _ => erm_distinguishing_oracle(family.clone(), m_a),
        };
        let oracle_b = match oracle_b_name.as_str() {
            "zero" => zero_calibration_oracle(l),
            _ => erm_calibration_oracle(
                weights.clone(),
                erm_calibration_sample_size(eps / 2.0, weights.len(), budget),
            )?,
        };
        let mut instance =
            UniformInstance::new(FiniteDomain::indexed(n)?, mu, target, oracle_a, oracle_b, eps, delta, run_seed)?;
        instance.audit_distinguishers = Some(family);
        instance.audit_weights = Some(weights);
        let outcome = run_uniform_regularity(&instance)?;
        let good = outcome.success
            && outcome.result.updates <= instance.kappa_cap
            && outcome.result.witness_distinguisher <= eps
            && outcome.result.witness_weight <= eps;
        Ok::<_, anyhow::Error>((
            trial,
            run_seed,
            outcome.success,
            outcome.result.updates,
            instance.kappa_cap,
            outcome.result.witness_distinguisher,
            outcome.result.witness_weight,
            good,
        ))
    });

    let mut runs = Table::new(&[
        "trial",
        "run_seed",
        "success",
        "updates",
        "update_cap",
        "witness_distinguisher",
        "witness_weight",
        "contract_met",
    ]);
    let mut good_count = 0usize;
    let mut success_count = 0usize;
    let mut total_updates = 0usize;
    for outcome in outcomes {
        let (trial, run_seed, success, updates, cap, wd, ww, good) = outcome?;
        if success {
            success_count += 1;
        }
        if good {
            good_count += 1;
        }
        total_updates += updates;
        runs.row(&[
            trial.into(),
            run_seed.into(),
            success.into(),
            updates.into(),
            cap.into(),
            wd.into(),
            ww.into(),
            good.into(),
        ]);
    }

    let mut summary = Table::new(&[
        "mode",
        "seed",
        "trials",
        "success_fraction",
        "contract_fraction",
        "mean_updates",
    ]);
    let success_fraction = success_count as f64 / trials as f64;
    let contract_fraction = good_count as f64 / trials as f64;
    summary.row(&[
        "uniform".into(),
        seed.into(),
        trials.into(),
        success_fraction.into(),
        contract_fraction.into(),
        (total_updates as f64 / trials as f64).into(),
    ]);

    Ok(RunArtifacts {
        files: vec![
            ("runs.csv".into(), runs.render()),
            ("summary.csv".into(), summary.render()),
        ],
        summary: vec![format!(
            "uniform: {good_count}/{trials} runs met the contract (success fraction {success_fraction:.3})"
        )],
        exit_ok: contract_fraction >= 1.0 - 2.0 * delta,
    })
}

pub fn run_characterize(config: &ExperimentConfig, seed: u64) -> anyhow::Result<RunArtifacts> {
    let n = config.n_points();
    let l = config.label_count();
    let eps = config.eps();
    let instances = config.trials();
    let notion_list = notions_from(config)?;
    let notions = NotionSet::new(notion_list)?;

    let mut report = Table::new(&[
        "instance_seed",
        "notion",
        "forward_slack",
        "converse_gap",
        "converse_min_divergence",
        "converse_slack",
        "omni_slack",
        "premise_holds",
        "pass",
    ]);
    let mut all_pass = true;

    let rows = parallel_map((0..instances as u64).collect(), |_, &i| {
        let inst_seed = trial_substream(seed, "cli-characterize", i).random::<u64>();
        let mut rng = substream(inst_seed, "characterize-instance");
        let mu = generators::random_distribution(n, &mut rng)?;
        let target = generators::random_kernel(n, l, &mut rng)?;
        let mut members: Vec<Kernel> = (0..config.class_size().saturating_sub(2).max(1))
            .map(|_| generators::random_kernel(n, l, &mut rng))
            .collect::<calreg_core::Result<_>>()?;
        members.push(Kernel::uniform(n, l)?);
        members.push(target.clone());
        let class = HypothesisClass::new(members)?;
        let fields: Vec<(VectorField, u64)> = converse_check_fields(&class, &notions, eps)?
            .into_iter()
            .map(|(_, _, field)| (field, 1))
            .collect();
        let family = DistinguisherFamily::new(fields)?;
        let result = build_universal_simulator(&target, &family, &notions, eps, &mu, inst_seed)?;
        let forward = verify_forward(&result.simulator, &target, &notions, eps, &mu)?;
        let omni = omnipredictor_check(&result.simulator, &target, &class, &notions, eps, &mu)?;
        let mut rows = Vec::new();
        for ((notion, fwd), om) in notions.notions().iter().zip(forward).zip(omni) {
            let conv = verify_converse(&result.simulator, &target, &class, notion, eps, &mu)?;
            let pass = fwd >= -1e-9 && conv.slack >= -1e-9 && conv.premise_holds && om >= -1e-9;
            rows.push((
                inst_seed,
                notion.name().to_string(),
                fwd,
                conv.gap,
                conv.min_divergence,
                conv.slack,
                om,
                conv.premise_holds,
                pass,
            ));
        }
        Ok::<_, anyhow::Error>(rows)
    });

    for instance_rows in rows {
        for (inst_seed, notion, fwd, gap, mind, cslack, om, premise, pass) in instance_rows? {
            all_pass &= pass;
            report.row(&[
                inst_seed.into(),
                notion.as_str().into(),
                fwd.into(),
                gap.into(),
                mind.into(),
                cslack.into(),
                om.into(),
                premise.into(),
                pass.into(),
            ]);
        }
    }

    let lines = vec![format!(
        "characterize: {} rows over {instances} instances, all_pass={all_pass}",
        report.rows()
    )];
    Ok(RunArtifacts {
        files: vec![("report.csv".into(), report.render())],
        summary: lines,
        exit_ok: all_pass,
    })
}

pub fn run_lowerbound(config: &ExperimentConfig, seed: u64) -> anyhow::Result<RunArtifacts> {
    let mut rng = substream(seed, "cli-lowerbound");
    let family = build_design(
        config.design_n(),
        config.alpha(),
        config.target_m(),
        &mut rng,
        2_000_000,
    )?;
    family.verify_invariants()?;
    let instance = build_lb_instance(&family, HiddenBitsSpec::Random(&mut rng))?;

    let mut design = Table::new(&["set_index", "elements"]);
    let rendered: Vec<String> = family
        .sets()
        .iter()
        .map(|set| {
            set.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    for (i, elements) in rendered.iter().enumerate() {
        design.row(&[i.into(), elements.as_str().into()]);
    }

    let mut report = Table::new(&["check", "value", "bound", "pass"]);
    let slack = verify_entropy_bound(&instance);
    report.row(&["entropy_bound_slack".into(), slack.into(), 0.0.into(), (slack >= 0.0).into()]);

    // Implication spot pool.
    let pool_size = config.trials() * 500;
    let mut counterexamples = 0usize;
    let mut premise_hits = 0usize;
    let m = instance.point_count();
    let l = instance.label_count();
    for j in 0..pool_size {
        let s = if j % 2 == 0 {
            let t = (j % 23) as f64 / 230.0;
            let noise = generators::random_sparse_simplex(l, 16, &mut rng)?;
            Kernel::new(
                (0..m)
                    .map(|x| {
                        SimplexVector::new(
                            instance
                                .target()
                                .row(x)
                                .coords()
                                .iter()
                                .zip(noise.coords())
                                .map(|(a, b)| (1.0 - t) * a + t * b)
                                .collect(),
                        )
                    })
                    .collect::<calreg_core::Result<_>>()?,
            )?
        } else {
            Kernel::new(
                (0..m)
                    .map(|_| generators::random_sparse_simplex(l, 8, &mut rng))
                    .collect::<calreg_core::Result<_>>()?,
            )?
        };
        let rep = verify_implication(&instance, &s)?;
        if rep.indistinguishable && rep.entropy_ok {
            premise_hits += 1;
            if rep.conclusion < 0.6 {
                counterexamples += 1;
            }
        }
    }
    report.row(&[
        "implication_counterexamples".into(),
        (counterexamples as f64).into(),
        0.0.into(),
        (counterexamples == 0).into(),
    ]);
    report.row(&[
        "implication_premise_hits".into(),
        (premise_hits as f64).into(),
        1.0.into(),
        (premise_hits >= 1).into(),
    ]);

    // Counting decay when the family is large enough.
    let mut decay_ok = true;
    if family.len() >= 40 {
        let mut fractions = Vec::new();
        for &size in &[10usize, 20, 40] {
            let sub = family.prefix(size)?;
            let mut bits_rng = substream(seed ^ 0x5eed, "cli-lb-bits");
            let sub_instance = build_lb_instance(&sub, HiddenBitsSpec::Random(&mut bits_rng))?;
            let pool = half_supported_pool(&sub_instance, 100, seed ^ 0xbeef)?;
            let fraction = counting_demo(&sub_instance, &pool, config.trials().max(50), 0.6, seed)?;
            fractions.push((size, fraction));
        }
        decay_ok = fractions[0].1 > fractions[1].1 && fractions[1].1 > fractions[2].1;
        for (size, fraction) in fractions {
            report.row(&[
                "counting_fraction".into(),
                fraction.into(),
                (size as f64).into(),
                decay_ok.into(),
            ]);
        }
    }

    let ok = slack >= 0.0 && counterexamples == 0 && decay_ok;
    Ok(RunArtifacts {
        files: vec![
            ("design.csv".into(), design.render()),
            ("lb_report.csv".into(), report.render()),
        ],
        summary: vec![format!(
            "lowerbound: m={}, entropy slack {slack:.4}, {premise_hits} premise hits, {counterexamples} counterexamples",
            family.len()
        )],
        exit_ok: ok,
    })
}

pub fn run_properties(config: &ExperimentConfig, seed: u64) -> anyhow::Result<RunArtifacts> {
    let mut report = Table::new(&["suite", "trials", "worst", "threshold", "pass"]);
    let mut all_pass = true;
    let notions = EntropyNotion::builtins(0.1)?;

    // Gap identity residuals.
    {
        let trials = 400usize;
        let mut rng = substream(seed, "props-gap");
        let mut worst: f64 = 0.0;
        for t in 0..trials {
            let n = rng.random_range(1..=32);
            let l = rng.random_range(2..=12);
            let mu = generators::random_distribution(n, &mut rng)?;
            let target = generators::random_kernel(n, l, &mut rng)?;
            let s = generators::random_kernel(n, l, &mut rng)?;
            let notion = &notions[t % notions.len()];
            let sim = notion.simulator_view(&s)?;
            worst = worst.max(
                entropy::gap_identity_residual(notion, &sim, &target, &mu)?.abs(),
            );
        }
        let pass = worst <= 1e-9;
        all_pass &= pass;
        report.row(&["gap_identity".into(), trials.into(), worst.into(), 1e-9.into(), pass.into()]);
    }

    // Mirror-descent progress inequality.
    {
        let trials = 2000usize;
        let mut rng = substream(seed, "props-md");
        let mut worst = f64::INFINITY;
        for _ in 0..trials {
            let n = rng.random_range(1..5);
            let l = rng.random_range(2..6);
            let mu = generators::random_distribution(n, &mut rng)?;
            let target = generators::random_kernel(n, l, &mut rng)?;
            let state = ConjugatePairState::from_dual(generators::random_unclamped_field(
                n, l, 2.0, &mut rng,
            )?)?;
            let signal = generators::random_field(n, l, &mut rng)?;
            let after = md_update(&state, &signal, 1.0, None, None)?;
            worst = worst.min(verify_md_inequality(&target, &state, &after, &signal, &mu)?);
        }
        let pass = worst >= -1e-9;
        all_pass &= pass;
        report.row(&["mirror_descent".into(), trials.into(), worst.into(), (-1e-9).into(), pass.into()]);
    }

    // Softmax Lipschitz and Pinsker.
    {
        let trials = 5000usize;
        let mut rng = substream(seed, "props-smooth");
        let mut worst_lip = f64::INFINITY;
        let mut worst_pinsker = f64::INFINITY;
        for _ in 0..trials {
            let l = rng.random_range(2..9);
            let h: Vec<f64> = (0..l).map(|_| rng.random_range(-5.0..5.0)).collect();
            let h2: Vec<f64> = (0..l).map(|_| rng.random_range(-5.0..5.0)).collect();
            worst_lip = worst_lip.min(verify_softmax_lipschitz(&h, &h2)?);
            let u = generators::random_simplex(l, &mut rng)?;
            let v = generators::random_simplex(l, &mut rng)?;
            worst_pinsker = worst_pinsker.min(verify_pinsker_strong_convexity(&u, &v)?);
        }
        let pass = worst_lip >= -1e-10;
        all_pass &= pass;
        report.row(&["softmax_lipschitz".into(), trials.into(), worst_lip.into(), (-1e-10).into(), pass.into()]);
        let pass = worst_pinsker >= -1e-10;
        all_pass &= pass;
        report.row(&["pinsker".into(), trials.into(), worst_pinsker.into(), (-1e-10).into(), pass.into()]);
    }

    // Approximate softmax error bound.
    {
        let trials = 500usize;
        let mut rng = substream(seed, "props-approx");
        let mut worst_ratio: f64 = 0.0;
        for _ in 0..trials {
            let l = rng.random_range(1..13);
            let eps = rng.random_range(0.02..0.49);
            let q: Vec<f64> = (0..l).map(|_| rng.random_range(-2.0..2.0)).collect();
            let bits = (6.0_f64 / eps).log2().ceil().max(1.0) as u32;
            let grid = FixedPointFormat::new(bits);
            let q_hat: Vec<f64> = q.iter().map(|&x| grid.round(x)).collect();
            let v = approx_softmax(&q_hat, eps, 2.0)?;
            let err = l1_distance(&v, &softmax(&q)?)?;
            worst_ratio = worst_ratio.max(err / eps);
        }
        let pass = worst_ratio <= 1.0;
        all_pass &= pass;
        report.row(&["approx_softmax".into(), trials.into(), worst_ratio.into(), 1.0.into(), pass.into()]);
    }

    // Boundary transform bounds.
    {
        let trials = 1000usize;
        let mut rng = substream(seed, "props-sigma");
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let l = rng.random_range(1..17);
            let eps_sigma = rng.random_range(0.01..0.49);
            let v = generators::random_sparse_simplex(l, l.div_ceil(2), &mut rng)?;
            let s = entropy::sigma_transform(&v, eps_sigma)?;
            worst = worst.max(l1_distance(&s, &v)? - 2.0 * eps_sigma);
        }
        let pass = worst <= 1e-12;
        all_pass &= pass;
        report.row(&["sigma_movement".into(), trials.into(), worst.into(), 1e-12.into(), pass.into()]);
    }

    // Subgradient inequality for the builtin notions.
    {
        let trials = 2000usize;
        let mut rng = substream(seed, "props-subgrad");
        let mut worst = f64::INFINITY;
        for t in 0..trials {
            let l = rng.random_range(2..9);
            let u = generators::random_simplex(l, &mut rng)?;
            let v = generators::random_simplex(l, &mut rng)?;
            let notion = &notions[t % notions.len()];
            let sub = notion.subgrad(&v);
            let cross: f64 = u
                .coords()
                .iter()
                .zip(v.coords())
                .zip(sub.iter())
                .map(|((a, b), g)| (a - b) * g)
                .sum();
            worst = worst.min(notion.phi(&u) - notion.phi(&v) - cross);
        }
        let pass = worst >= -1e-10;
        all_pass &= pass;
        report.row(&["subgradient_inequality".into(), trials.into(), worst.into(), (-1e-10).into(), pass.into()]);
    }

    let _ = config;
    Ok(RunArtifacts {
        files: vec![("props_report.csv".into(), report.render())],
        summary: vec![format!("properties: all_pass={all_pass}")],
        exit_ok: all_pass,
    })
}

pub fn run_mode(config: &ExperimentConfig, seed: u64) -> anyhow::Result<RunArtifacts> {
    match config.mode {
        Mode::Nonuniform => run_nonuniform(config, seed),
        Mode::Uniform => run_uniform(config, seed),
        Mode::Characterize => run_characterize(config, seed),
        Mode::Lowerbound => run_lowerbound(config, seed),
        Mode::Properties => run_properties(config, seed),
    }
}

/// Expand the sweep lists into one summary row per cell; empty sweeps
/// degenerate to a single run of the configured mode.
pub fn run_sweep(config: &ExperimentConfig, seed: u64) -> anyhow::Result<RunArtifacts> {
    let spec = config.sweep.clone().unwrap_or_default();
    if spec.is_empty() {
        return run_mode(config, seed);
    }
    if config.mode != Mode::Nonuniform {
        bail!("sweeps are supported for the nonuniform mode");
    }
    let seeds = spec.seed.unwrap_or_else(|| vec![seed]);
    let n_list = spec.n_points.unwrap_or_else(|| vec![config.n_points()]);
    let l_list = spec.label_count.unwrap_or_else(|| vec![config.label_count()]);
    let eps_list = spec.eps.unwrap_or_else(|| vec![config.eps()]);

    let mut cells = Vec::new();
    for &cell_seed in &seeds {
        for &n in &n_list {
            for &l in &l_list {
                for &eps in &eps_list {
                    cells.push((cell_seed, n, l, eps));
                }
            }
        }
    }

    let notion_names = config.notion_names();
    let results = parallel_map(cells, |_, &(cell_seed, n, l, eps)| {
        let notions: Vec<EntropyNotion> = notion_names
            .iter()
            .map(|name| EntropyNotion::by_name(name, eps / 3.0))
            .collect::<calreg_core::Result<_>>()?;
        let instance = generators::random_regularity_instance(
            cell_seed,
            n,
            l,
            config.num_distinguishers(),
            eps,
            &notions,
        )?;
        let result = run_regularity(&instance, &regularity_options(config))?;
        Ok::<_, anyhow::Error>((
            cell_seed,
            n,
            l,
            eps,
            result.updates,
            instance.update_cap(),
            result.witness_distinguisher,
            result.witness_weight,
            complexity_of(&result),
        ))
    });

    let mut table = Table::new(&[
        "seed",
        "n_points",
        "label_count",
        "eps",
        "updates",
        "update_cap",
        "witness_distinguisher",
        "witness_weight",
        "complexity",
    ]);
    let mut ok = true;
    for row in results {
        let (cell_seed, n, l, eps, updates, cap, wd, ww, complexity) =
            row.map_err(|e| anyhow!("sweep cell failed: {e:#}"))?;
        ok &= updates <= cap && wd <= eps + 1e-9 && ww <= eps + 1e-9;
        table.row(&[
            cell_seed.into(),
            n.into(),
            l.into(),
            eps.into(),
            updates.into(),
            cap.into(),
            wd.into(),
            ww.into(),
            complexity.into(),
        ]);
    }
    let rows = table.rows();
    Ok(RunArtifacts {
        files: vec![("sweep.csv".into(), table.render())],
        summary: vec![format!("sweep: {rows} cells, contracts_ok={ok}")],
        exit_ok: ok,
    })
}

/// Parse, validate, and run; used by the binary and by integration tests.
pub fn execute(config_text: &str, seed_override: Option<u64>) -> anyhow::Result<RunArtifacts> {
    let config = ExperimentConfig::parse(config_text).context("invalid configuration")?;
    let seed = seed_override.unwrap_or(config.seed);
    run_mode(&config, seed)
}
