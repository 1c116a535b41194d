//! The hardness construction: a combinatorial design of near-disjoint subsets,
//! a target kernel supported on a hidden half of each set, the identity
//! distinguisher, and the max-based convex function whose subgradient encodes
//! the hidden halves. The finite inequalities behind the construction are
//! exposed as checks, and a probabilistic counting demo exhibits the decay
//! that powers the counting argument.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::entropy::EntropyNotion;
use crate::error::{Error, Result};
use crate::seeding::trial_substream;
use crate::simplex::{
    mu_inner_product, Distribution, Kernel, SimplexVector, VectorField,
};
use rand::Rng;

/// A family of equal-sized subsets of `[n]` with bounded pairwise
/// intersections.
#[derive(Debug, Clone)]
pub struct DesignFamily {
    ground_size: usize,
    alpha: f64,
    sets: Vec<Vec<usize>>,
}

impl DesignFamily {
    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Required size of each member: `ceil(alpha n)` rounded up to even.
    pub fn required_set_size(ground_size: usize, alpha: f64) -> usize {
        let k = (alpha * ground_size as f64).ceil() as usize;
        k + (k % 2)
    }

    /// Pairwise intersection budget `floor(2 alpha^2 n)`.
    pub fn intersection_budget(&self) -> usize {
        (2.0 * self.alpha * self.alpha * self.ground_size as f64).floor() as usize
    }

    /// Exact integer verification of all three invariants.
    pub fn verify_invariants(&self) -> Result<()> {
        let min_size = (self.alpha * self.ground_size as f64).ceil() as usize;
        let budget = self.intersection_budget();
        for (i, set) in self.sets.iter().enumerate() {
            if set.len() < min_size {
                return Err(Error::Contract(format!("set {i} smaller than alpha n")));
            }
            if set.len() % 2 != 0 {
                return Err(Error::Contract(format!("set {i} has odd size")));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Contract(format!("set {i} not sorted or has duplicates")));
            }
            if set.iter().any(|&e| e >= self.ground_size) {
                return Err(Error::Contract(format!("set {i} leaves the ground set")));
            }
            for (j, other) in self.sets.iter().enumerate().take(i) {
                if intersection_size(set, other) > budget {
                    return Err(Error::Contract(format!(
                        "sets {j} and {i} intersect beyond the budget {budget}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serializable form: sorted index lists.
    pub fn to_index_lists(&self) -> Vec<Vec<usize>> {
        self.sets.clone()
    }

    /// The sub-family of the first `count` sets; invariants are inherited.
    pub fn prefix(&self, count: usize) -> Result<DesignFamily> {
        if count == 0 || count > self.sets.len() {
            return Err(Error::Domain(format!(
                "prefix of {count} sets from a family of {}",
                self.sets.len()
            )));
        }
        Ok(DesignFamily {
            ground_size: self.ground_size,
            alpha: self.alpha,
            sets: self.sets[..count].to_vec(),
        })
    }
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    // Both sorted.
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

fn sample_sorted_subset(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // Partial Fisher-Yates on an index vector.
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    let mut set = indices[..k].to_vec();
    set.sort_unstable();
    set
}

/// Build a design family by rejection sampling with greedy retention: sampled
/// subsets are kept while they meet the pairwise budget against everything
/// kept so far. Fails with the achieved size if `target_m` members cannot be
/// found within `max_attempts` samples.
pub fn build_design(
    ground_size: usize,
    alpha: f64,
    target_m: usize,
    rng: &mut ChaCha8Rng,
    max_attempts: usize,
) -> Result<DesignFamily> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if target_m == 0 {
        return Err(Error::Domain("target size must be at least 1".into()));
    }
    let k = DesignFamily::required_set_size(ground_size, alpha);
    if k == 0 || k > ground_size {
        return Err(Error::Domain(format!(
            "even set size {k} infeasible on a ground set of {ground_size}"
        )));
    }
    let budget = (2.0 * alpha * alpha * ground_size as f64).floor() as usize;
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(target_m);
    for _ in 0..max_attempts {
        if sets.len() >= target_m {
            break;
        }
        let candidate = sample_sorted_subset(ground_size, k, rng);
        if sets.iter().all(|s| intersection_size(s, &candidate) <= budget) {
            sets.push(candidate);
        }
    }
    if sets.len() < target_m {
        return Err(Error::Domain(format!(
            "design search achieved {} of {target_m} sets within {max_attempts} attempts",
            sets.len()
        )));
    }
    let family = DesignFamily {
        ground_size,
        alpha,
        sets,
    };
    family.verify_invariants()?;
    Ok(family)
}

/// How the hidden bit per set is chosen.
pub enum HiddenBitsSpec<'a> {
    Given(Vec<bool>),
    Random(&'a mut ChaCha8Rng),
}

/// The lower-bound instance: domain points are the design's sets, labels are
/// ground-set elements, the target row for a point is uniform on the hidden
/// half of its set.
#[derive(Debug, Clone)]
pub struct LowerBoundInstance {
    design: DesignFamily,
    hidden_bits: Vec<bool>,
    /// Per set: the deterministic split into two equal halves (sorted order,
    /// first half is the 0-half).
    halves: Vec<[Vec<usize>; 2]>,
    mu: Distribution,
    target: Kernel,
    identity_field: VectorField,
    /// `E[phi(target row)]`, cached for the stress checks.
    neg_entropy_target: f64,
}

impl LowerBoundInstance {
    pub fn design(&self) -> &DesignFamily {
        &self.design
    }

    pub fn hidden_bits(&self) -> &[bool] {
        &self.hidden_bits
    }

    pub fn mu(&self) -> &Distribution {
        &self.mu
    }

    pub fn target(&self) -> &Kernel {
        &self.target
    }

    /// The identity distinguisher: the indicator vector of each point's set.
    pub fn identity_field(&self) -> &VectorField {
        &self.identity_field
    }

    pub fn point_count(&self) -> usize {
        self.design.len()
    }

    pub fn label_count(&self) -> usize {
        self.design.ground_size()
    }

    /// The half of set `x` selected by bit `b`.
    pub fn half(&self, x: usize, b: bool) -> &[usize] {
        &self.halves[x][usize::from(b)]
    }
}

/// Build the instance from a design: halves split deterministically (sorted
/// order, first half is the 0-half), hidden bits supplied or drawn uniformly.
pub fn build_lb_instance(design: &DesignFamily, hidden_bits: HiddenBitsSpec<'_>) -> Result<LowerBoundInstance> {
    let m = design.len();
    if m == 0 {
        return Err(Error::Domain("design has no sets".into()));
    }
    let hidden_bits: Vec<bool> = match hidden_bits {
        HiddenBitsSpec::Given(bits) => {
            if bits.len() != m {
                return Err(Error::Shape(format!(
                    "hidden-bit vector has {} bits for {m} sets",
                    bits.len()
                )));
            }
            bits
        }
        HiddenBitsSpec::Random(rng) => (0..m).map(|_| rng.random::<bool>()).collect(),
    };
    let n = design.ground_size();
    let halves: Vec<[Vec<usize>; 2]> = design
        .sets()
        .iter()
        .map(|set| {
            let mid = set.len() / 2;
            [set[..mid].to_vec(), set[mid..].to_vec()]
        })
        .collect();
    let mu = Distribution::uniform(m)?;
    let target = Kernel::new(
        (0..m)
            .map(|x| {
                let support = &halves[x][usize::from(hidden_bits[x])];
                let mut coords = vec![0.0; n];
                let mass = 1.0 / support.len() as f64;
                for &label in support {
                    coords[label] = mass;
                }
                SimplexVector::new(coords)
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let identity_field = VectorField::new(
        design
            .sets()
            .iter()
            .map(|set| {
                let mut row = vec![0.0; n];
                for &label in set {
                    row[label] = 1.0;
                }
                row
            })
            .collect(),
        true,
    )?;
    let mut instance = LowerBoundInstance {
        design: design.clone(),
        hidden_bits,
        halves,
        mu,
        target,
        identity_field,
        neg_entropy_target: 0.0,
    };
    instance.neg_entropy_target = (0..m)
        .map(|x| instance.mu.weight(x) * phi_lb_value(&instance, instance.target.row(x)))
        .sum();
    Ok(instance)
}

fn half_mass(v: &SimplexVector, half: &[usize]) -> f64 {
    half.iter().map(|&i| v.coord(i)).sum()
}

/// The max-based convex function: the largest mass `v` places on any set's
/// revealed (non-hidden) half.
pub fn phi_lb_value(instance: &LowerBoundInstance, v: &SimplexVector) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for x in 0..instance.point_count() {
        let half = instance.half(x, !instance.hidden_bits[x]);
        best = best.max(half_mass(v, half));
    }
    best
}

/// Subgradient of the max-based function: the indicator of the maximizing
/// set's revealed half, ties to the smallest point index.
pub fn phi_lb_subgrad(instance: &LowerBoundInstance, v: &SimplexVector) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    let mut best_x = 0;
    for x in 0..instance.point_count() {
        let mass = half_mass(v, instance.half(x, !instance.hidden_bits[x]));
        if mass > best {
            best = mass;
            best_x = x;
        }
    }
    let mut out = vec![0.0; instance.label_count()];
    for &label in instance.half(best_x, !instance.hidden_bits[best_x]) {
        out[label] = 1.0;
    }
    out
}

/// The max-based function wrapped as an entropy notion, so the generic gap
/// identity and divergence machinery applies to it. The subgradient is an
/// indicator vector, so no scaling is needed.
pub fn lb_notion(instance: &LowerBoundInstance) -> Result<EntropyNotion> {
    let a = Arc::new(instance.clone());
    let b = Arc::clone(&a);
    EntropyNotion::custom(
        "lb_max_half",
        Arc::new(move |v| phi_lb_value(&a, v)),
        Arc::new(move |v| phi_lb_subgrad(&b, v)),
        None,
        1.0,
        None,
    )
}

/// Slack of the target-entropy bound: `4 alpha - E[phi(target row)] >= 0`.
pub fn verify_entropy_bound(instance: &LowerBoundInstance) -> f64 {
    4.0 * instance.design.alpha() - instance.neg_entropy_target
}

/// Outcome of checking the two premises and the conclusion for a candidate
/// simulator table.
#[derive(Debug, Clone, Copy)]
pub struct ImplicationReport {
    /// `|<s - target, identity>| <= 0.05`.
    pub indistinguishable: bool,
    /// `H(s) >= H(target) - 0.05` for the max-based function.
    pub entropy_ok: bool,
    /// The alternative premise `<s - target, subgrad o s> <= 0.05`, which
    /// implies the entropy premise through the gap identity and the
    /// nonnegativity of the divergence.
    pub calibration_ok: bool,
    /// `E <s(x), hidden half indicator>`; at least 0.6 whenever both premises
    /// hold.
    pub conclusion: f64,
}

/// Evaluate the premises and conclusion for a candidate simulator.
pub fn verify_implication(instance: &LowerBoundInstance, s: &Kernel) -> Result<ImplicationReport> {
    if s.len() != instance.point_count() || s.label_count() != instance.label_count() {
        return Err(Error::Shape("candidate table shape mismatch".into()));
    }
    let diff = s.minus(&instance.target)?;
    let correlation = mu_inner_product(&instance.mu, &diff, &instance.identity_field)?;
    let indistinguishable = correlation.abs() <= 0.05;

    let mut neg_entropy_s = 0.0;
    let neg_entropy_target = instance.neg_entropy_target;
    let mut calibration = 0.0;
    let mut conclusion = 0.0;
    for x in 0..instance.point_count() {
        let w = instance.mu.weight(x);
        neg_entropy_s += w * phi_lb_value(instance, s.row(x));
        let sub = phi_lb_subgrad(instance, s.row(x));
        let dot: f64 = s
            .row(x)
            .coords()
            .iter()
            .zip(instance.target.row(x).coords())
            .zip(sub.iter())
            .map(|((a, b), g)| (a - b) * g)
            .sum();
        calibration += w * dot;
        conclusion += w * half_mass(s.row(x), instance.half(x, instance.hidden_bits[x]));
    }
    // H = -E[phi], so H(s) >= H(target) - 0.05 reads as the flipped bound.
    let entropy_ok = neg_entropy_s <= neg_entropy_target + 0.05;
    let calibration_ok = calibration <= 0.05;
    Ok(ImplicationReport {
        indistinguishable,
        entropy_ok,
        calibration_ok,
        conclusion,
    })
}

/// A pool of target-shaped kernels built from hidden bits drawn independently
/// of the instance's.
pub fn half_supported_pool(
    instance: &LowerBoundInstance,
    count: usize,
    seed: u64,
) -> Result<Vec<Kernel>> {
    let mut pool = Vec::with_capacity(count);
    for j in 0..count {
        let mut rng = trial_substream(seed, "lb-pool", j as u64);
        let member = build_lb_instance(&instance.design, HiddenBitsSpec::Random(&mut rng))?;
        pool.push(member.target().clone());
    }
    Ok(pool)
}

/// View the instance as a boosting problem: the identity field is the single
/// distinguisher and the max-based function's subgradient is the single
/// weight, so the construction can be fed straight into the boosting loop.
pub fn as_regularity_instance(
    instance: &LowerBoundInstance,
    eps: f64,
    seed: u64,
) -> Result<crate::regularity::RegularityInstance> {
    let notion = lb_notion(instance)?;
    let weight = crate::entropy::subgradient_weight(&notion, eps)?;
    let domain = crate::simplex::FiniteDomain::from_bitstrings(
        instance
            .design
            .sets()
            .iter()
            .map(|set| {
                let mut bits = vec![b'0'; instance.design.ground_size()];
                for &e in set {
                    bits[e] = b'1';
                }
                String::from_utf8(bits).expect("ascii bits")
            })
            .collect(),
    )?;
    crate::regularity::RegularityInstance::new(
        domain,
        instance.mu.clone(),
        instance.target.clone(),
        crate::regularity::DistinguisherFamily::new(vec![(instance.identity_field.clone(), 1)])?,
        crate::regularity::WeightFamily::new(vec![(weight, 1)], instance.label_count())?,
        eps,
        seed,
    )
}

/// Redraw the hidden bits `trials` times; for each draw, measure the fraction
/// of pool members whose mass on the redrawn hidden halves reaches the
/// threshold. Returns the mean fraction over draws.
pub fn counting_demo(
    instance: &LowerBoundInstance,
    pool: &[Kernel],
    trials: usize,
    threshold: f64,
    seed: u64,
) -> Result<f64> {
    if pool.is_empty() || trials == 0 {
        return Err(Error::Domain("counting demo needs a pool and trials".into()));
    }
    let m = instance.point_count();
    let mut total = 0.0;
    for trial in 0..trials {
        let mut rng = trial_substream(seed, "lb-counting-bits", trial as u64);
        let redrawn: Vec<bool> = (0..m).map(|_| rng.random::<bool>()).collect();
        let mut successes = 0usize;
        for member in pool {
            let mut value = 0.0;
            for x in 0..m {
                value += instance.mu.weight(x) * half_mass(member.row(x), instance.half(x, redrawn[x]));
            }
            if value >= threshold {
                successes += 1;
            }
        }
        total += successes as f64 / pool.len() as f64;
    }
    Ok(total / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::gap_identity_residual;
    use crate::generators;
    use crate::seeding::substream;

    fn standard_design(seed: u64, target_m: usize) -> DesignFamily {
        let mut rng = substream(seed, "design");
        build_design(256, 1.0 / 16.0, target_m, &mut rng, 200_000).unwrap()
    }

    #[test]
    fn design_invariants_at_standard_parameters() {
        let family = standard_design(1, 50);
        assert!(family.len() >= 50);
        assert_eq!(DesignFamily::required_set_size(256, 1.0 / 16.0), 16);
        assert_eq!(family.intersection_budget(), 2);
        family.verify_invariants().unwrap();
        for set in family.sets() {
            assert_eq!(set.len(), 16);
        }
    }

    #[test]
    fn design_edge_cases() {
        let mut rng = substream(2, "design-edge");
        // A single set always succeeds in one draw.
        let one = build_design(64, 1.0 / 16.0, 1, &mut rng, 10).unwrap();
        assert_eq!(one.len(), 1);

        // Exhausted attempts fail with the achieved count in the message.
        let err = build_design(64, 1.0 / 16.0, 2, &mut rng, 1).unwrap_err();
        assert!(err.to_string().contains("achieved 1 of 2"));

        // Odd ceil(alpha n) rounds up to even.
        assert_eq!(DesignFamily::required_set_size(100, 0.03), 4);
    }

    #[test]
    fn instance_construction_properties() {
        let family = standard_design(3, 50);
        let mut rng = substream(4, "hidden-bits");
        let instance = build_lb_instance(&family, HiddenBitsSpec::Random(&mut rng)).unwrap();

        for x in 0..instance.point_count() {
            // Every target row sums to one with support size |S|/2.
            let support: usize = instance
                .target()
                .row(x)
                .coords()
                .iter()
                .filter(|&&c| c > 0.0)
                .count();
            assert_eq!(support, 8);
            // The row pairs to exactly 1 with the identity field.
            let dot: f64 = instance
                .target()
                .row(x)
                .coords()
                .iter()
                .zip(instance.identity_field().row(x))
                .map(|(a, b)| a * b)
                .sum();
            assert!((dot - 1.0).abs() < 1e-12);
        }

        // Flipping a hidden bit flips the supported half.
        let mut flipped_bits = instance.hidden_bits().to_vec();
        flipped_bits[0] = !flipped_bits[0];
        let flipped = build_lb_instance(&family, HiddenBitsSpec::Given(flipped_bits)).unwrap();
        let a = instance.target().row(0);
        let b = flipped.target().row(0);
        let overlap: f64 = a
            .coords()
            .iter()
            .zip(b.coords())
            .map(|(x, y)| x * y)
            .sum();
        assert_eq!(overlap, 0.0);
    }

    #[test]
    fn pairwise_mass_chain_exact() {
        // Per pair: <target(x'), revealed half of x> is at most
        // (2 / (alpha L)) |hidden(x') ∩ revealed(x)|, exactly.
        let family = standard_design(5, 30);
        let mut rng = substream(6, "chain");
        let instance = build_lb_instance(&family, HiddenBitsSpec::Random(&mut rng)).unwrap();
        let alpha_l = family.alpha() * family.ground_size() as f64;
        for xp in 0..instance.point_count() {
            let hidden = instance.half(xp, instance.hidden_bits()[xp]);
            for x in 0..instance.point_count() {
                let revealed = instance.half(x, !instance.hidden_bits()[x]);
                let lhs = half_mass(instance.target().row(xp), revealed);
                let inter = intersection_size(hidden, revealed) as f64;
                let rhs = 2.0 / alpha_l * inter;
                assert!(lhs <= rhs + 1e-12, "pair ({xp},{x}): {lhs} vs {rhs}");
                if xp == x {
                    assert_eq!(lhs, 0.0);
                }
            }
        }
    }

    #[test]
    fn phi_values_and_convexity() {
        let family = standard_design(7, 50);
        let mut rng = substream(8, "phi");
        let instance = build_lb_instance(&family, HiddenBitsSpec::Random(&mut rng)).unwrap();
        let l = instance.label_count();

        // At a target row the value stays within 4 alpha.
        for x in 0..instance.point_count() {
            let v = phi_lb_value(&instance, instance.target().row(x));
            assert!(v <= 4.0 * family.alpha() + 1e-12);
        }

        // At the uniform vector the value is (|S|/2) / L exactly.
        let uniform = SimplexVector::uniform(l).unwrap();
        assert!((phi_lb_value(&instance, &uniform) - 8.0 / l as f64).abs() < 1e-12);

        // Convexity at midpoints, and the subgradient inequality.
        for _ in 0..200 {
            let u = generators::random_sparse_simplex(l, 16, &mut rng).unwrap();
            let v = generators::random_sparse_simplex(l, 16, &mut rng).unwrap();
            let mid = SimplexVector::new(
                u.coords()
                    .iter()
                    .zip(v.coords())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            )
            .unwrap();
            let lhs = phi_lb_value(&instance, &mid);
            let rhs = 0.5 * (phi_lb_value(&instance, &u) + phi_lb_value(&instance, &v));
            assert!(lhs <= rhs + 1e-12);

            let sub = phi_lb_subgrad(&instance, &v);
            let cross: f64 = u
                .coords()
                .iter()
                .zip(v.coords())
                .zip(sub.iter())
                .map(|((a, b), g)| (a - b) * g)
                .sum();
            assert!(phi_lb_value(&instance, &u) - phi_lb_value(&instance, &v) >= cross - 1e-12);
        }
    }

    #[test]
    fn entropy_bound_cases() {
        let family = standard_design(9, 50);
        let mut rng = substream(10, "entropy-bound");
        let instance = build_lb_instance(&family, HiddenBitsSpec::Random(&mut rng)).unwrap();
        let slack = verify_entropy_bound(&instance);
        assert!(slack >= -1e-12);
        // The negative entropy is itself nonnegative, so the slack never
        // exceeds 4 alpha.
        assert!(slack <= 4.0 * family.alpha() + 1e-12);

        // Degenerate single-set design: the only cross term is the self term,
        // which vanishes.
        let single = family.prefix(1).unwrap();
        let instance = build_lb_instance(&single, HiddenBitsSpec::Given(vec![false])).unwrap();
        let slack = verify_entropy_bound(&instance);
        assert!((slack - 4.0 * family.alpha()).abs() < 1e-12);
    }

    #[test]
    fn implication_frozen_cases() {
        let family = standard_design(11, 40);
        let mut rng = substream(12, "implication");
        let instance = build_lb_instance(&family, HiddenBitsSpec::Random(&mut rng)).unwrap();

        // The target itself: both premises hold, conclusion is exactly 1.
        let report = verify_implication(&instance, instance.target()).unwrap();
        assert!(report.indistinguishable);
        assert!(report.entropy_ok);
        assert!(report.calibration_ok);
        assert!((report.conclusion - 1.0).abs() < 1e-12);

        // The uniform kernel: indistinguishability fails (mass on the set is
        // only |S| / L), implication vacuous.
        let uniform = Kernel::uniform(instance.point_count(), instance.label_count()).unwrap();
        let report = verify_implication(&instance, &uniform).unwrap();
        assert!(!report.indistinguishable);
        assert!(report.conclusion < 0.6);

        // Support on the revealed halves: entropy premise fails.
        let flipped_bits: Vec<bool> = instance.hidden_bits().iter().map(|b| !b).collect();
        let flipped = build_lb_instance(&family, HiddenBitsSpec::Given(flipped_bits)).unwrap();
        let report = verify_implication(&instance, flipped.target()).unwrap();
        assert!(!report.entropy_ok);
        assert!(report.conclusion < 0.6);
    }

    #[test]
    fn calibration_premise_implies_entropy_premise() {
        // Through the gap identity: calibration <= 0.05 forces the entropy
        // condition, and the custom notion agrees with the direct evaluation.
        let family = standard_design(13, 30);
        let mut rng = substream(14, "premise-routes");
        let instance = build_lb_instance(&family, HiddenBitsSpec::Random(&mut rng)).unwrap();
        let notion = lb_notion(&instance).unwrap();

        let mut checked = 0usize;
        for j in 0..200 {
            let s = random_candidate(&instance, j, &mut rng);
            let report = verify_implication(&instance, &s).unwrap();
            if report.calibration_ok {
                assert!(report.entropy_ok, "calibration route must imply the entropy route");
                checked += 1;
            }
            let residual = gap_identity_residual(&notion, &s, instance.target(), instance.mu())
                .unwrap();
            assert!(residual.abs() <= 1e-9, "gap identity residual {residual}");
        }
        assert!(checked > 0, "no candidate exercised the calibration premise");
    }

    fn random_candidate(
        instance: &LowerBoundInstance,
        j: usize,
        rng: &mut ChaCha8Rng,
    ) -> Kernel {
        let m = instance.point_count();
        let l = instance.label_count();
        match j % 3 {
            0 => generators::random_kernel(m, l, rng).unwrap(),
            1 => {
                // Mixture of the target with noise.
                let noise = generators::random_sparse_simplex(l, 16, rng).unwrap();
                let t = 0.1 + 0.8 * (j as f64 / 200.0);
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
            _ => Kernel::new(
                (0..m)
                    .map(|_| generators::random_sparse_simplex(l, 8, rng).unwrap())
                    .collect::<Vec<_>>(),
            )
            .unwrap(),
        }
    }

    #[test]
    fn boosting_on_the_hardness_instance() {
        // The construction round-trips into the boosting loop: against the
        // identity distinguisher and the max-based weight, the loop ends
        // within tolerance, and its output then satisfies both premises, so
        // the implication forces high mass on the hidden halves.
        let family = standard_design(19, 20);
        let mut rng = substream(20, "lb-boost");
        let instance = build_lb_instance(&family, HiddenBitsSpec::Random(&mut rng)).unwrap();
        let eps = 0.05;
        let reg = as_regularity_instance(&instance, eps, 3).unwrap();
        assert_eq!(reg.domain.bit_len(), Some(256));
        let result = crate::regularity::run_regularity(
            &reg,
            &crate::regularity::RegularityOptions::default(),
        )
        .unwrap();
        assert!(result.witness_distinguisher <= eps + 1e-9);
        assert!(result.witness_weight <= eps + 1e-9);
        let report = verify_implication(&instance, &result.simulator).unwrap();
        assert!(report.indistinguishable);
        assert!(report.calibration_ok);
        assert!(report.entropy_ok);
        assert!(report.conclusion >= 0.6, "conclusion {}", report.conclusion);
    }

    #[test]
    fn counting_decay_over_domain_sizes() {
        let family = standard_design(15, 40);
        let pool_seed = 77;
        let mut fractions = Vec::new();
        for &m in &[10usize, 20, 40] {
            let sub = family.prefix(m).unwrap();
            let mut rng = substream(16, "counting-bits0");
            let instance = build_lb_instance(&sub, HiddenBitsSpec::Random(&mut rng)).unwrap();
            let pool = half_supported_pool(&instance, 50, pool_seed).unwrap();
            let fraction = counting_demo(&instance, &pool, 100, 0.6, 5).unwrap();
            fractions.push(fraction);
        }
        assert!(
            fractions[0] > fractions[1] && fractions[1] > fractions[2],
            "fractions {fractions:?} not strictly decreasing"
        );

        // A constant uniform pool member never reaches the threshold.
        let sub = family.prefix(10).unwrap();
        let mut rng = substream(17, "counting-uniform");
        let instance = build_lb_instance(&sub, HiddenBitsSpec::Random(&mut rng)).unwrap();
        let uniform = Kernel::uniform(10, instance.label_count()).unwrap();
        let fraction = counting_demo(&instance, &[uniform], 50, 0.6, 9).unwrap();
        assert_eq!(fraction, 0.0);
    }
}
