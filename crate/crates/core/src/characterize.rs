//! The headline comparisons as executable checks: build one simulator that is
//! simultaneously calibrated for the subgradient weights of a whole family of
//! entropy notions and indistinguishable against a distinguisher family, then
//! verify (a) the forward entropy-versus-divergence inequality for every
//! notion at once, (b) the converse bound against an enumerated hypothesis
//! class, (c) the omniprediction bound, and (d) the transformed variant for
//! notions with a boundary perturbation.
//!
//! Scale conventions: the guarantees are stated for the scale-adjusted
//! notions (subgradients in `[-1,1]^L`), so every gap and divergence here is
//! multiplied by the notion's scale factor. Notions carrying a perturbation
//! are evaluated at the perturbed simulator, which keeps every divergence
//! finite.

use crate::entropy::{
    entropy, kernel_bregman_divergence, subgradient_weight, EntropyNotion, WeightFunction,
};
use crate::error::{Error, Result};
use crate::regularity::{
    run_regularity, DistinguisherFamily, RegularityInstance, RegularityOptions, RegularityResult,
    WeightFamily,
};
use crate::simplex::{mu_inner_product, Distribution, FiniteDomain, Kernel};

/// A family of entropy notions checked simultaneously; every member's
/// subgradient weight is built at accuracy `eps / 4` relative to the run's
/// tolerance.
#[derive(Debug, Clone)]
pub struct NotionSet {
    notions: Vec<EntropyNotion>,
}

impl NotionSet {
    pub fn new(notions: Vec<EntropyNotion>) -> Result<Self> {
        if notions.is_empty() {
            return Err(Error::Domain("empty notion family".into()));
        }
        Ok(NotionSet { notions })
    }

    pub fn builtins(eps_sigma: f64) -> Result<Self> {
        Self::new(EntropyNotion::builtins(eps_sigma)?)
    }

    pub fn notions(&self) -> &[EntropyNotion] {
        &self.notions
    }

    pub fn len(&self) -> usize {
        self.notions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notions.is_empty()
    }
}

/// An explicit finite class of kernels standing in for a bounded-complexity
/// hypothesis class.
#[derive(Debug, Clone)]
pub struct HypothesisClass {
    members: Vec<Kernel>,
}

impl HypothesisClass {
    pub fn new(members: Vec<Kernel>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Domain("empty hypothesis class".into()));
        }
        let (n, l) = (members[0].len(), members[0].label_count());
        if members.iter().any(|k| k.len() != n || k.label_count() != l) {
            return Err(Error::Shape("hypothesis class members disagree on shape".into()));
        }
        Ok(HypothesisClass { members })
    }

    pub fn members(&self) -> &[Kernel] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The reference kernel a notion measures divergences against: the perturbed
/// kernel for notions with a transform, the kernel itself otherwise.
fn reference_view(notion: &EntropyNotion, g: &Kernel) -> Result<Kernel> {
    notion.simulator_view(g)
}

/// Scale-adjusted entropy gap `scale * (H(s) - H(target))`.
pub fn scaled_gap(
    notion: &EntropyNotion,
    simulator: &Kernel,
    target: &Kernel,
    mu: &Distribution,
) -> Result<f64> {
    let scale = notion.scale(simulator.label_count());
    Ok(scale * (entropy(notion, simulator, mu)? - entropy(notion, target, mu)?))
}

/// Scale-adjusted divergence `scale * D(target || view(g))`.
pub fn scaled_divergence_to(
    notion: &EntropyNotion,
    target: &Kernel,
    g: &Kernel,
    mu: &Distribution,
) -> Result<f64> {
    let scale = notion.scale(target.label_count());
    let view = reference_view(notion, g)?;
    Ok(scale * kernel_bregman_divergence(notion, target, &view, mu)?)
}

/// Build the universal simulator: boost against the distinguisher family and
/// the subgradient weights of every notion in the family. The loop runs at
/// tolerance `eps / 2`, which delivers distinguisher correlations within
/// `eps` and weight-calibration within `eps / 2`; the remaining `eps / 2` of
/// the forward slack budget covers the subgradient approximation error.
pub fn build_universal_simulator(
    target: &Kernel,
    distinguishers: &DistinguisherFamily,
    phi: &NotionSet,
    eps: f64,
    mu: &Distribution,
    seed: u64,
) -> Result<RegularityResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0,1), got {eps}")));
    }
    let l = target.label_count();
    let weights = WeightFamily::new(
        phi.notions()
            .iter()
            .map(|notion| Ok((subgradient_weight(notion, eps)?, 1)))
            .collect::<Result<Vec<_>>>()?,
        l,
    )?;
    let domain = FiniteDomain::indexed(target.len())?;
    let instance = RegularityInstance::new(
        domain,
        mu.clone(),
        target.clone(),
        distinguishers.clone(),
        weights,
        eps / 2.0,
        seed,
    )?;
    run_regularity(&instance, &RegularityOptions::default())
}

/// Forward slack per notion:
/// `scale * [H(view(s)) - H(target) - D(target || view(s))] + eps`.
/// Nonnegative (up to float dust) for simulators produced by
/// [`build_universal_simulator`] with the same notion family and tolerance.
pub fn verify_forward(
    simulator: &Kernel,
    target: &Kernel,
    phi: &NotionSet,
    eps: f64,
    mu: &Distribution,
) -> Result<Vec<f64>> {
    phi.notions()
        .iter()
        .map(|notion| {
            let view = notion.simulator_view(simulator)?;
            let scale = notion.scale(simulator.label_count());
            let gap = entropy(notion, &view, mu)? - entropy(notion, target, mu)?;
            let divergence = kernel_bregman_divergence(notion, target, &view, mu)?;
            Ok(scale * (gap - divergence) + eps)
        })
        .collect()
}

/// The transformed forward slack for a notion with a perturbation; identical
/// to the corresponding entry of [`verify_forward`] but requires the
/// transform to be present.
pub fn verify_transformed(
    simulator: &Kernel,
    target: &Kernel,
    notion: &EntropyNotion,
    eps: f64,
    mu: &Distribution,
) -> Result<f64> {
    if notion.sigma_eps().is_none() {
        return Err(Error::Unsupported(format!(
            "notion {:?} has no boundary transform",
            notion.name()
        )));
    }
    let view = notion.simulator_view(simulator)?;
    let scale = notion.scale(simulator.label_count());
    let gap = entropy(notion, &view, mu)? - entropy(notion, target, mu)?;
    let divergence = kernel_bregman_divergence(notion, target, &view, mu)?;
    Ok(scale * (gap - divergence) + eps)
}

/// The converse distinguishers for a hypothesis class: the subgradient weight
/// of each notion composed with each class member, materialized as fields.
pub fn converse_check_fields(
    class: &HypothesisClass,
    phi: &NotionSet,
    eps: f64,
) -> Result<Vec<(WeightFunction, usize, crate::simplex::VectorField)>> {
    let mut fields = Vec::new();
    for notion in phi.notions() {
        let weight = subgradient_weight(notion, eps)?;
        for (idx, member) in class.members().iter().enumerate() {
            let field = weight.compose_with_kernel(member)?;
            fields.push((weight.clone(), idx, field));
        }
    }
    Ok(fields)
}

/// Report row for one converse check.
#[derive(Debug, Clone)]
pub struct ConverseReport {
    /// Scale-adjusted entropy gap of the candidate.
    pub gap: f64,
    /// Scale-adjusted minimum divergence over the class.
    pub min_divergence: f64,
    /// `min_divergence + eps - gap`; nonnegative when the premise held.
    pub slack: f64,
    /// Whether the candidate satisfied the indistinguishability premise
    /// against every composed field at tolerance `eps / 2`.
    pub premise_holds: bool,
}

/// Check the converse bound for one candidate simulator: if the candidate is
/// `(eps/2)`-indistinguishable from the target against every composed field
/// `weight o g` for `g` in the class, then its scale-adjusted entropy gap is
/// at most the class's minimum scale-adjusted divergence plus `eps`.
pub fn verify_converse(
    candidate: &Kernel,
    target: &Kernel,
    class: &HypothesisClass,
    notion: &EntropyNotion,
    eps: f64,
    mu: &Distribution,
) -> Result<ConverseReport> {
    let weight = subgradient_weight(notion, eps)?;
    let diff = candidate.minus(target)?;
    let mut premise_holds = true;
    for member in class.members() {
        let field = weight.compose_with_kernel(member)?;
        if mu_inner_product(mu, &diff, &field)?.abs() > eps / 2.0 + 1e-12 {
            premise_holds = false;
            break;
        }
    }
    let gap = scaled_gap(notion, candidate, target, mu)?;
    let mut min_divergence = f64::INFINITY;
    for member in class.members() {
        min_divergence = min_divergence.min(scaled_divergence_to(notion, target, member, mu)?);
    }
    Ok(ConverseReport {
        gap,
        min_divergence,
        slack: min_divergence + eps - gap,
        premise_holds,
    })
}

/// Omniprediction slack per notion:
/// `min_g scale * D(target || view(g)) + 2 eps - scale * D(target || view(s))`.
/// Nonnegative for simulators built with a distinguisher family containing
/// every composed field of the class.
pub fn omnipredictor_check(
    simulator: &Kernel,
    target: &Kernel,
    class: &HypothesisClass,
    phi: &NotionSet,
    eps: f64,
    mu: &Distribution,
) -> Result<Vec<f64>> {
    phi.notions()
        .iter()
        .map(|notion| {
            let own = scaled_divergence_to(notion, target, simulator, mu)?;
            let mut best = f64::INFINITY;
            for member in class.members() {
                best = best.min(scaled_divergence_to(notion, target, member, mu)?);
            }
            Ok(best + 2.0 * eps - own)
        })
        .collect()
}

/// Indistinguishability slack transfer under the perturbation: if `s` has
/// distinguisher correlations within `eps`, the perturbed kernel has them
/// within `eps + 2 eps_sigma`. Returns the worst observed correlation of the
/// perturbed kernel.
pub fn sigma_indistinguishability_slack(
    simulator: &Kernel,
    target: &Kernel,
    distinguishers: &DistinguisherFamily,
    eps_sigma: f64,
    mu: &Distribution,
) -> Result<f64> {
    let perturbed = Kernel::new(
        simulator
            .rows()
            .iter()
            .map(|row| crate::entropy::sigma_transform(row, eps_sigma))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let diff = perturbed.minus(target)?;
    let mut worst: f64 = 0.0;
    for member in distinguishers.members() {
        worst = worst.max(mu_inner_product(mu, &diff, &member.field)?.abs());
    }
    Ok(worst)
}
