//! Acceptance suite: one test per criterion, each printing a single pass line
//! with the measured extremes. Tolerances and instance sizes are pinned in
//! code; run with `--nocapture` to see the lines.

use std::time::Instant;

use calreg_core::entropy::{
    self, subgradient_weight, EntropyNotion, WeightFunction,
};
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
    run_regularity, DistinguisherFamily, RegularityOptions, WeightFamily,
};
use calreg_core::characterize::{
    build_universal_simulator, converse_check_fields, omnipredictor_check, verify_converse,
    verify_forward, verify_transformed, HypothesisClass, NotionSet,
};
use calreg_core::seeding::{substream, trial_substream};
use calreg_core::simplex::{
    approx_softmax, l1_distance, linf_norm, softmax, Distribution, FixedPointFormat, Kernel,
    SimplexVector, VectorField,
};
use calreg_core::uniform::{
    erm_calibration_oracle, erm_calibration_sample_size, erm_distinguishing_oracle,
    run_uniform_regularity, uniform_update_cap, CalibrationTriple, OracleContext, SampleSource,
    UniformInstance,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn draw_label(v: &SimplexVector, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in v.coords().iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    v.len() - 1
}

/// Criterion 1: the gap identity residual stays within 1e-9 across 1000
/// random instances over all four builtin notions, within 10 seconds.
#[test]
fn criterion_1_gap_identity() {
    let start = Instant::now();
    let mut rng = substream(1001, "acc-gap");
    let notions = EntropyNotion::builtins(0.1).unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let n = rng.random_range(1..=64);
        let l = rng.random_range(2..=16);
        let mu = generators::random_distribution(n, &mut rng).unwrap();
        let target = generators::random_kernel(n, l, &mut rng).unwrap();
        let s = generators::random_kernel(n, l, &mut rng).unwrap();
        let notion = &notions[trial % notions.len()];
        // Notions carrying a boundary perturbation are evaluated at the
        // perturbed simulator, which keeps the divergence finite.
        let sim = notion.simulator_view(&s).unwrap();
        let r = entropy::gap_identity_residual(notion, &sim, &target, &mu).unwrap();
        assert!(r.is_finite(), "trial {trial}: infinite residual");
        worst = worst.max(r.abs());
    }
    assert!(worst <= 1e-9, "worst residual {worst}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("criterion 1 (gap identity): PASS  worst residual {worst:.3e}, {elapsed:?}");
}

fn criterion_2_parameters() -> Vec<(u64, usize, f64)> {
    // 100 seeded instances cycling L in {2,4,8} and eps in {0.1, 0.2}.
    let combos = [(2, 0.1), (4, 0.1), (8, 0.1), (2, 0.2), (4, 0.2), (8, 0.2)];
    (0..100u64)
        .map(|seed| {
            let (l, eps) = combos[(seed as usize) % combos.len()];
            (seed, l, eps)
        })
        .collect()
}

/// Criterion 2: the boosting loop meets its contract on 100 seeded instances:
/// final violations within eps, update count within `ceil(4 ln L / eps^2)`,
/// every recorded potential drop above `eps^2/4 - 1e-9`; under 60 seconds.
#[test]
fn criterion_2_boosting_contract() {
    let start = Instant::now();
    let mut max_updates_ratio: f64 = 0.0;
    for (seed, l, eps) in criterion_2_parameters() {
        let notions = EntropyNotion::builtins(eps / 3.0).unwrap();
        let instance =
            generators::random_regularity_instance(seed, 32, l, 16, eps, &notions).unwrap();
        let result = run_regularity(&instance, &RegularityOptions::default()).unwrap();
        assert!(
            result.witness_distinguisher <= eps + 1e-9,
            "seed {seed}: distinguisher witness {}",
            result.witness_distinguisher
        );
        assert!(
            result.witness_weight <= eps + 1e-9,
            "seed {seed}: weight witness {}",
            result.witness_weight
        );
        let cap = instance.update_cap();
        assert!(result.updates <= cap, "seed {seed}: {} updates > cap {cap}", result.updates);
        max_updates_ratio = max_updates_ratio.max(result.updates as f64 / cap.max(1) as f64);
        for rec in &result.trace {
            let drop = rec.potential_before - rec.potential_after;
            assert!(
                drop > eps * eps / 4.0 - 1e-9,
                "seed {seed}: drop {drop} at update {}",
                rec.update_index
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "criterion 2 (boosting contract): PASS  max update/cap ratio {max_updates_ratio:.3}, {elapsed:?}"
    );
}

/// Criterion 3: on the same instance set, the pipeline simulator satisfies
/// the forward inequality for all four notions simultaneously.
#[test]
fn criterion_3_forward_characterization() {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    for (seed, l, eps) in criterion_2_parameters() {
        let notions = NotionSet::builtins(eps / 3.0).unwrap();
        let instance = generators::random_regularity_instance(
            seed,
            32,
            l,
            16,
            eps,
            notions.notions(),
        )
        .unwrap();
        let result = build_universal_simulator(
            &instance.target,
            &instance.distinguishers,
            &notions,
            eps,
            &instance.mu,
            seed,
        )
        .unwrap();
        let slacks =
            verify_forward(&result.simulator, &instance.target, &notions, eps, &instance.mu)
                .unwrap();
        for (notion, slack) in notions.notions().iter().zip(slacks) {
            assert!(
                slack >= -1e-9,
                "seed {seed}, {}: forward slack {slack}",
                notion.name()
            );
            worst = worst.min(slack);
        }
    }
    let elapsed = start.elapsed();
    println!("criterion 3 (forward characterization): PASS  min slack {worst:.3e}, {elapsed:?}");
}

fn converse_fixture(seed: u64) -> (Kernel, Distribution, HypothesisClass, NotionSet, f64, Kernel) {
    let eps = 0.2;
    let n = 16;
    let l = if seed % 2 == 0 { 4 } else { 2 };
    let mut rng = substream(seed, "acc-converse");
    let mu = generators::random_distribution(n, &mut rng).unwrap();
    let target = generators::random_kernel(n, l, &mut rng).unwrap();
    let notions = NotionSet::builtins(eps / 3.0).unwrap();
    let mut members: Vec<Kernel> = (0..6)
        .map(|_| generators::random_kernel(n, l, &mut rng).unwrap())
        .collect();
    members.push(Kernel::uniform(n, l).unwrap());
    members.push(target.clone());
    let class = HypothesisClass::new(members).unwrap();
    // Distinguishers closed under weight-composition with the class.
    let fields: Vec<(VectorField, u64)> = converse_check_fields(&class, &notions, eps)
        .unwrap()
        .into_iter()
        .map(|(_, _, field)| (field, 1))
        .collect();
    let family = DistinguisherFamily::new(fields).unwrap();
    let result = build_universal_simulator(&target, &family, &notions, eps, &mu, seed).unwrap();
    (target, mu, class, notions, eps, result.simulator)
}

/// Criterion 4: the converse bound holds with slack at least -1e-9 on 20
/// desk instances with an enumerated hypothesis class.
#[test]
fn criterion_4_converse_bound() {
    let start = Instant::now();
    let mut min_slack = f64::INFINITY;
    for seed in 0..20u64 {
        let (target, mu, class, notions, eps, simulator) = converse_fixture(seed);
        for notion in notions.notions() {
            let report = verify_converse(&simulator, &target, &class, notion, eps, &mu).unwrap();
            assert!(
                report.premise_holds,
                "seed {seed}, {}: pipeline output must satisfy the premise",
                notion.name()
            );
            assert!(
                report.slack >= -1e-9,
                "seed {seed}, {}: converse slack {}",
                notion.name(),
                report.slack
            );
            min_slack = min_slack.min(report.slack);
        }
    }
    let elapsed = start.elapsed();
    println!("criterion 4 (converse bound): PASS  min slack {min_slack:.3e}, {elapsed:?}");
}

/// Criterion 5: the omniprediction bound with slack 2 eps on the same
/// instances, all notions.
#[test]
fn criterion_5_omniprediction() {
    let start = Instant::now();
    let mut min_slack = f64::INFINITY;
    for seed in 0..20u64 {
        let (target, mu, class, notions, eps, simulator) = converse_fixture(seed);
        let slacks =
            omnipredictor_check(&simulator, &target, &class, &notions, eps, &mu).unwrap();
        for (notion, slack) in notions.notions().iter().zip(slacks) {
            assert!(
                slack >= -1e-9,
                "seed {seed}, {}: omni slack {slack}",
                notion.name()
            );
            min_slack = min_slack.min(slack);
        }
    }
    let elapsed = start.elapsed();
    println!("criterion 5 (omniprediction): PASS  min slack {min_slack:.3e}, {elapsed:?}");
}

/// Criterion 6: the mirror-descent progress inequality, the softmax Lipschitz
/// bound, the Pinsker bound, and the approximate-softmax error bound, over
/// randomized batches, within 10 seconds.
#[test]
fn criterion_6_mirror_descent_facts() {
    let start = Instant::now();
    let mut rng = substream(1006, "acc-md");

    // Mirror-descent inequality: 10^4 random single updates.
    let mut worst_md = f64::INFINITY;
    for _ in 0..10_000 {
        let n = rng.random_range(1..5);
        let l = rng.random_range(2..6);
        let mu = generators::random_distribution(n, &mut rng).unwrap();
        let target = generators::random_kernel(n, l, &mut rng).unwrap();
        let dual = generators::random_unclamped_field(n, l, 2.0, &mut rng).unwrap();
        let state = ConjugatePairState::from_dual(dual).unwrap();
        let signal = generators::random_field(n, l, &mut rng).unwrap();
        let after = md_update(&state, &signal, 1.0, None, None).unwrap();
        let slack = verify_md_inequality(&target, &state, &after, &signal, &mu).unwrap();
        assert!(slack >= -1e-9, "mirror-descent slack {slack}");
        worst_md = worst_md.min(slack);
    }

    // Softmax Lipschitz: 10^4 pairs.
    for _ in 0..10_000 {
        let l = rng.random_range(1..9);
        let h: Vec<f64> = (0..l).map(|_| rng.random_range(-5.0..5.0)).collect();
        let h2: Vec<f64> = (0..l).map(|_| rng.random_range(-5.0..5.0)).collect();
        let slack = verify_softmax_lipschitz(&h, &h2).unwrap();
        assert!(slack >= -1e-10, "Lipschitz slack {slack}");
    }

    // Pinsker: 10^4 pairs.
    for _ in 0..10_000 {
        let l = rng.random_range(2..9);
        let u = generators::random_simplex(l, &mut rng).unwrap();
        let v = generators::random_simplex(l, &mut rng).unwrap();
        let slack = verify_pinsker_strong_convexity(&u, &v).unwrap();
        assert!(slack >= -1e-10, "Pinsker slack {slack}");
    }

    // Approximate softmax: 10^3 trials against the exact evaluation.
    for _ in 0..1000 {
        let l = rng.random_range(1..13);
        let eps = rng.random_range(0.02..0.49);
        let q: Vec<f64> = (0..l).map(|_| rng.random_range(-2.0..2.0)).collect();
        let bits = (6.0_f64 / eps).log2().ceil().max(1.0) as u32;
        let grid = FixedPointFormat::new(bits);
        let q_hat: Vec<f64> = q.iter().map(|&x| grid.round(x)).collect();
        let v = approx_softmax(&q_hat, eps, 2.0).unwrap();
        let err = l1_distance(&v, &softmax(&q).unwrap()).unwrap();
        assert!(err <= eps, "approx softmax error {err} at eps {eps}");
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "criterion 6 (mirror-descent facts): PASS  min update slack {worst_md:.3e}, {elapsed:?}"
    );
}

/// Criterion 7: the sample-based loop with ERM oracles ends within the cap
/// with true violations within eps in at least 90% of 200 seeded runs, and
/// the ERM calibration oracle recovers a planted weight with frequency at
/// least 1 - delta over 500 trials; under 5 minutes.
#[test]
fn criterion_7_sample_based_loop() {
    let start = Instant::now();
    let n = 32;
    let l = 4;
    let eps = 0.25;
    let delta = 0.1;
    let cap = uniform_update_cap(l, eps);
    let budget = calreg_core::uniform::per_check_failure_budget(eps, delta, l);

    let mut good_runs = 0usize;
    let runs = 200usize;
    for seed in 0..runs as u64 {
        let mut rng = substream(seed, "acc-uniform-instance");
        let mu = generators::random_distribution(n, &mut rng).unwrap();
        let target = generators::random_kernel(n, l, &mut rng).unwrap();
        let fields: Vec<(VectorField, u64)> = (0..16)
            .map(|_| (generators::random_field(n, l, &mut rng).unwrap(), 1))
            .collect();
        let family = DistinguisherFamily::new(fields).unwrap();
        let notions = EntropyNotion::builtins(eps / 3.0).unwrap();
        let weights = WeightFamily::new(
            notions
                .iter()
                .map(|notion| (subgradient_weight(notion, eps).unwrap(), 1))
                .collect(),
            l,
        )
        .unwrap();
        let m_a = ((32.0 / (eps / 2.0) / (eps / 2.0)) * (4.0 * 16.0 / budget).ln()).ceil() as usize;
        let m_b = erm_calibration_sample_size(eps / 2.0, weights.len(), budget);
        let mut instance = UniformInstance::new(
            calreg_core::simplex::FiniteDomain::indexed(n).unwrap(),
            mu,
            target,
            erm_distinguishing_oracle(family.clone(), m_a),
            erm_calibration_oracle(weights.clone(), m_b).unwrap(),
            eps,
            delta,
            seed,
        )
        .unwrap();
        instance.audit_distinguishers = Some(family);
        instance.audit_weights = Some(weights);
        let outcome = run_uniform_regularity(&instance).unwrap();
        let good = outcome.success
            && outcome.result.updates <= cap
            && outcome.result.witness_distinguisher <= eps
            && outcome.result.witness_weight <= eps;
        if good {
            good_runs += 1;
        }
    }
    assert!(
        good_runs * 10 >= runs * 9,
        "only {good_runs}/{runs} runs met the contract"
    );

    // Planted-weight recovery: correlation 1/2 vs 0 at eps1 = 0.2.
    let mu = Distribution::uniform(1).unwrap();
    let g = Kernel::new(vec![SimplexVector::new(vec![0.75, 0.25]).unwrap()]).unwrap();
    let target = Kernel::new(vec![SimplexVector::new(vec![0.25, 0.75]).unwrap()]).unwrap();
    let planted = WeightFunction::constant("planted", vec![0.5, -0.5]);
    let null = WeightFunction::constant("null", vec![1.0, 1.0]);
    let family = WeightFamily::new(vec![(planted, 1), (null, 1)], 2).unwrap();
    let m = erm_calibration_sample_size(0.2, family.len(), delta);
    let oracle = erm_calibration_oracle(family, m).unwrap();
    let ctx = OracleContext { current: &g, target: &target, mu: &mu };
    let mut recovered = 0usize;
    let trials = 500usize;
    for trial in 0..trials {
        let mut rng = trial_substream(2024, "acc-planted", trial as u64);
        let mut oracle_rng = trial_substream(2024, "acc-planted-oracle", trial as u64);
        let mut source = SampleSource::new(&mu, &target).unwrap();
        let samples: Vec<CalibrationTriple> = source
            .draw_batch(m, &mut rng)
            .iter()
            .map(|s| {
                let row = g.row(s.point).clone();
                let label = draw_label(&row, &mut rng);
                CalibrationTriple { value: row, label, target_label: s.target_label }
            })
            .collect();
        if oracle.invoke(&samples, &ctx, &mut oracle_rng).unwrap().name() == "planted" {
            recovered += 1;
        }
    }
    assert!(
        recovered as f64 >= (1.0 - delta) * trials as f64,
        "recovered {recovered}/{trials}"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "criterion 7 (sample-based loop): PASS  {good_runs}/{runs} good runs, {recovered}/{trials} recoveries, {elapsed:?}"
    );
}

/// Criterion 8: design invariants exact at the standard parameters, the
/// target-entropy bound nonnegative, no counterexample to the implication in
/// a 100000-candidate stress pool, and counting decay strictly decreasing
/// over domain sizes 10/20/40; under 2 minutes.
#[test]
fn criterion_8_lowerbound_lab() {
    let start = Instant::now();
    let mut rng = substream(1008, "acc-lb");
    let family = build_design(256, 1.0 / 16.0, 50, &mut rng, 500_000).unwrap();
    assert!(family.len() >= 50);
    family.verify_invariants().unwrap();
    assert_eq!(family.intersection_budget(), 2);

    let instance = build_lb_instance(&family, HiddenBitsSpec::Random(&mut rng)).unwrap();
    let slack = verify_entropy_bound(&instance);
    assert!(slack >= 0.0, "entropy bound slack {slack}");

    // Stress pool: no candidate satisfying both premises may fall below the
    // 0.6 conclusion.
    let m = instance.point_count();
    let l = instance.label_count();
    let mut counterexamples = 0usize;
    let mut premise_hits = 0usize;
    for j in 0..100_000usize {
        let s = match j % 5 {
            // Perturbations of the target: the premise-relevant region.
            0 | 1 => {
                let t = (j % 97) as f64 / 970.0; // up to ~0.1 mixing
                let noise = generators::random_sparse_simplex(l, 16, &mut rng).unwrap();
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
                            .unwrap()
                        })
                        .collect(),
                )
                .unwrap()
            }
            2 => {
                // Mass shifted between the two halves of each set.
                let shift = (j % 11) as f64 / 10.0;
                Kernel::new(
                    (0..m)
                        .map(|x| {
                            let mut coords = vec![0.0; l];
                            let hidden = instance.half(x, instance.hidden_bits()[x]);
                            let revealed = instance.half(x, !instance.hidden_bits()[x]);
                            for &i in hidden {
                                coords[i] = (1.0 - shift) / hidden.len() as f64;
                            }
                            for &i in revealed {
                                coords[i] += shift / revealed.len() as f64;
                            }
                            SimplexVector::new(coords).unwrap()
                        })
                        .collect(),
                )
                .unwrap()
            }
            3 => Kernel::new(
                (0..m)
                    .map(|_| generators::random_sparse_simplex(l, 8, &mut rng).unwrap())
                    .collect::<Vec<_>>(),
            )
            .unwrap(),
            _ => generators::random_kernel(m, l, &mut rng).unwrap(),
        };
        let report = verify_implication(&instance, &s).unwrap();
        if report.indistinguishable && report.entropy_ok {
            premise_hits += 1;
            if report.conclusion < 0.6 {
                counterexamples += 1;
            }
        }
    }
    assert_eq!(counterexamples, 0, "implication counterexamples found");
    assert!(premise_hits > 0, "stress pool never exercised the premises");

    // Counting decay across domain sizes.
    let mut fractions = Vec::new();
    for &size in &[10usize, 20, 40] {
        let sub = family.prefix(size).unwrap();
        let mut bits_rng = substream(1018, "acc-lb-bits");
        let sub_instance = build_lb_instance(&sub, HiddenBitsSpec::Random(&mut bits_rng)).unwrap();
        let pool = half_supported_pool(&sub_instance, 100, 4242).unwrap();
        fractions.push(counting_demo(&sub_instance, &pool, 200, 0.6, 77).unwrap());
    }
    assert!(
        fractions[0] > fractions[1] && fractions[1] > fractions[2],
        "counting fractions {fractions:?}"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "criterion 8 (lower-bound lab): PASS  m={}, entropy slack {slack:.4}, {premise_hits} premise hits, decay {fractions:?}, {elapsed:?}",
        family.len()
    );
}

/// Criterion 9: the boundary perturbation moves points by at most
/// `2 eps_sigma` in l1, the perturbed Shannon subgradient respects its bound,
/// and the transformed forward inequality holds on pipeline outputs with
/// boundary targets.
#[test]
fn criterion_9_sigma_transform() {
    let start = Instant::now();
    let mut rng = substream(1009, "acc-sigma");

    for _ in 0..1000 {
        let l = rng.random_range(1..17);
        let eps_sigma = rng.random_range(0.01..0.49);
        let v = generators::random_sparse_simplex(l, l.div_ceil(2), &mut rng).unwrap();
        let s = entropy::sigma_transform(&v, eps_sigma).unwrap();
        assert!(l1_distance(&s, &v).unwrap() <= 2.0 * eps_sigma + 1e-12);
        let bound = (l as f64 / eps_sigma).ln();
        let sub: Vec<f64> = s.coords().iter().map(|&c| c.ln()).collect();
        assert!(linf_norm(&sub) <= bound + 1e-12, "subgradient bound exceeded");
    }

    // Pipeline outputs over boundary targets (deterministic rows).
    let eps = 0.2;
    for seed in 0..10u64 {
        let n = 16;
        let l = 4;
        let mut inst_rng = substream(seed, "acc-sigma-instance");
        let mu = generators::random_distribution(n, &mut inst_rng).unwrap();
        let target = generators::random_vertex_kernel(n, l, &mut inst_rng).unwrap();
        let shannon = EntropyNotion::shannon(eps / 3.0).unwrap();
        let notions = NotionSet::new(vec![shannon.clone()]).unwrap();
        let fields = (0..8)
            .map(|_| (generators::random_field(n, l, &mut inst_rng).unwrap(), 1))
            .collect();
        let family = DistinguisherFamily::new(fields).unwrap();
        let result =
            build_universal_simulator(&target, &family, &notions, eps, &mu, seed).unwrap();
        let slack =
            verify_transformed(&result.simulator, &target, &shannon, eps, &mu).unwrap();
        assert!(slack.is_finite() && slack >= -1e-9, "seed {seed}: slack {slack}");
    }

    let elapsed = start.elapsed();
    println!("criterion 9 (boundary transform): PASS  {elapsed:?}");
}
