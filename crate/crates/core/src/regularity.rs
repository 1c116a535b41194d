//! The boosting loop: starting from the near-uniform kernel, repeatedly find a
//! distinguisher the current table correlates with beyond the tolerance, or a
//! weight function witnessing miscalibration, and apply a multiplicative-
//! weights update; terminate when neither family fires. The potential against
//! the target drops by more than `eps^2 / 4` per update and starts no higher
//! than `ln L`, which caps the update count.

use crate::entropy::WeightFunction;
use crate::error::{Error, Result};
use crate::generators;
use crate::mirror::{md_update, potential, ConjugatePairState};
use crate::seeding::substream;
use crate::simplex::{
    mu_inner_product, Distribution, FiniteDomain, FixedPointFormat, Kernel, VectorField,
};

/// A bounded distinguisher with a declared structural cost.
#[derive(Debug, Clone)]
pub struct DistinguisherMember {
    pub field: VectorField,
    pub cost: u64,
}

/// A family of distinguishers; every member is verified clamped at load.
#[derive(Debug, Clone)]
pub struct DistinguisherFamily {
    members: Vec<DistinguisherMember>,
}

impl DistinguisherFamily {
    pub fn new(members: Vec<(VectorField, u64)>) -> Result<Self> {
        let members = members
            .into_iter()
            .map(|(field, cost)| {
                if !field.is_clamped() {
                    // Re-validate under the clamp contract.
                    let field = VectorField::new(field.rows().to_vec(), true)?;
                    return Ok(DistinguisherMember { field, cost });
                }
                Ok(DistinguisherMember { field, cost })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DistinguisherFamily { members })
    }

    pub fn empty() -> Self {
        DistinguisherFamily { members: Vec::new() }
    }

    pub fn members(&self) -> &[DistinguisherMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_cost(&self) -> u64 {
        self.members.iter().map(|m| m.cost).max().unwrap_or(0)
    }
}

/// A weight function with a declared structural cost.
#[derive(Debug, Clone)]
pub struct WeightMember {
    pub weight: WeightFunction,
    pub cost: u64,
}

/// A family of weight functions. Construction spot-checks each member on 100
/// seeded simplex points: outputs must be finite and of the right length (the
/// `[-1,1]` clamp is enforced by evaluation itself).
#[derive(Debug, Clone)]
pub struct WeightFamily {
    members: Vec<WeightMember>,
    label_count: usize,
}

impl WeightFamily {
    pub fn new(members: Vec<(WeightFunction, u64)>, label_count: usize) -> Result<Self> {
        if label_count == 0 {
            return Err(Error::Domain("weight family over an empty label space".into()));
        }
        let mut rng = substream(0x57a7_1c5e, "weight-family-audit");
        for (weight, _) in &members {
            for _ in 0..100 {
                let v = generators::random_simplex(label_count, &mut rng)?;
                let out = weight.eval(&v);
                if out.len() != label_count {
                    return Err(Error::Shape(format!(
                        "weight {:?} returned {} coordinates, expected {label_count}",
                        weight.name(),
                        out.len()
                    )));
                }
                if out.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite(format!("weight {:?} output", weight.name())));
                }
            }
        }
        Ok(WeightFamily {
            members: members
                .into_iter()
                .map(|(weight, cost)| WeightMember { weight, cost })
                .collect(),
            label_count,
        })
    }

    pub fn empty(label_count: usize) -> Self {
        WeightFamily { members: Vec::new(), label_count }
    }

    pub fn members(&self) -> &[WeightMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn max_cost(&self) -> u64 {
        self.members.iter().map(|m| m.cost).max().unwrap_or(0)
    }
}

/// How a violating member is chosen when several qualify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    /// First member in stored order (`+f` before `-f` for distinguishers).
    #[default]
    FirstHit,
    /// The member with the largest violation; ties resolve to scan order.
    MaxViolation,
}

/// Numeric representation of the maintained tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoundingMode {
    /// Rounded kernel tables on a fixed-point grid (the bit-budgeted regime).
    #[default]
    FixedPoint,
    /// Plain doubles everywhere, for diagnostic runs.
    ExactDouble,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RegularityOptions {
    pub selection: Selection,
    pub rounding: RoundingMode,
    /// Also keep the dual iterate on a fixed-point grid, mirroring the strict
    /// bit-accounting regime.
    pub strict_bits: bool,
}

/// A full problem instance for the boosting loop.
#[derive(Debug, Clone)]
pub struct RegularityInstance {
    pub domain: FiniteDomain,
    pub mu: Distribution,
    pub target: Kernel,
    pub distinguishers: DistinguisherFamily,
    pub weights: WeightFamily,
    pub eps: f64,
    pub seed: u64,
}

impl RegularityInstance {
    pub fn new(
        domain: FiniteDomain,
        mu: Distribution,
        target: Kernel,
        distinguishers: DistinguisherFamily,
        weights: WeightFamily,
        eps: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Domain(format!("eps must lie in (0, 1/2), got {eps}")));
        }
        let n = domain.len();
        if mu.len() != n || target.len() != n {
            return Err(Error::Shape("instance tables disagree with the domain size".into()));
        }
        let l = target.label_count();
        for m in distinguishers.members() {
            if m.field.len() != n || m.field.label_count() != l {
                return Err(Error::Shape("distinguisher shape mismatch".into()));
            }
        }
        if !weights.is_empty() && weights.label_count() != l {
            return Err(Error::Shape("weight family label count mismatch".into()));
        }
        Ok(RegularityInstance {
            domain,
            mu,
            target,
            distinguishers,
            weights,
            eps,
            seed,
        })
    }

    pub fn label_count(&self) -> usize {
        self.target.label_count()
    }

    /// Update cap `ceil(4 ln L / eps^2)` implied by the potential argument.
    pub fn update_cap(&self) -> usize {
        update_cap(self.label_count(), self.eps)
    }
}

pub fn update_cap(label_count: usize, eps: f64) -> usize {
    (4.0 * (label_count as f64).ln() / (eps * eps)).ceil() as usize
}

/// Which family produced an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateFamily {
    Distinguisher,
    Weight,
}

impl UpdateFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpdateFamily::Distinguisher => "distinguisher",
            UpdateFamily::Weight => "weight",
        }
    }
}

/// One boosting update as recorded in the trace.
#[derive(Debug, Clone)]
pub struct UpdateRecord {
    pub update_index: usize,
    pub family: UpdateFamily,
    pub member: usize,
    /// +1 or -1 for distinguishers; always +1 for weights.
    pub sign: i8,
    /// The violation that triggered the update, measured against the rounded
    /// table.
    pub violation: f64,
    /// The same correlation measured against the exact softmax table.
    pub exact_violation: f64,
    pub potential_before: f64,
    pub potential_after: f64,
}

/// Output of a boosting run.
#[derive(Debug, Clone)]
pub struct RegularityResult {
    pub simulator: Kernel,
    pub updates: usize,
    pub trace: Vec<UpdateRecord>,
    /// `max_f |<s - target, f>|` over the distinguisher family.
    pub witness_distinguisher: f64,
    /// `max_r <s - target, r o s>` over the weight family.
    pub witness_weight: f64,
    /// Bound on the accumulated dual-iterate drift: actual grid drift in the
    /// strict-bits regime, the would-be fixed-point drift otherwise.
    pub dual_drift_report: f64,
    pub eps: f64,
    pub label_count: usize,
    pub max_member_cost: u64,
}

/// Scan for a distinguisher violation: members in stored order, each with both
/// signs (`+f` then `-f`); returns `(member index, sign, value)` for the first
/// (or largest, under max selection) correlation exceeding `eps`.
pub fn find_violation_f(
    g_hat: &Kernel,
    target: &Kernel,
    family: &DistinguisherFamily,
    eps: f64,
    mu: &Distribution,
    selection: Selection,
) -> Result<Option<(usize, i8, f64)>> {
    let diff = g_hat.minus(target)?;
    let mut best: Option<(usize, i8, f64)> = None;
    for (idx, member) in family.members().iter().enumerate() {
        let value = mu_inner_product(mu, &diff, &member.field)?;
        for (sign, signed_value) in [(1i8, value), (-1i8, -value)] {
            if signed_value > eps {
                match selection {
                    Selection::FirstHit => return Ok(Some((idx, sign, signed_value))),
                    Selection::MaxViolation => {
                        if best.is_none_or(|(_, _, b)| signed_value > b) {
                            best = Some((idx, sign, signed_value));
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Scan for a calibration violation: first (or largest) member with
/// `<g_hat - target, r o g_hat> > eps`. One-sided by construction.
pub fn find_violation_r(
    g_hat: &Kernel,
    target: &Kernel,
    family: &WeightFamily,
    eps: f64,
    mu: &Distribution,
    selection: Selection,
) -> Result<Option<(usize, f64)>> {
    let diff = g_hat.minus(target)?;
    let mut best: Option<(usize, f64)> = None;
    for (idx, member) in family.members().iter().enumerate() {
        let composed = member.weight.compose_with_kernel(g_hat)?;
        let value = mu_inner_product(mu, &diff, &composed)?;
        if value > eps {
            match selection {
                Selection::FirstHit => return Ok(Some((idx, value))),
                Selection::MaxViolation => {
                    if best.is_none_or(|(_, b)| value > b) {
                        best = Some((idx, value));
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Run the boosting loop to completion.
pub fn run_regularity(
    instance: &RegularityInstance,
    options: &RegularityOptions,
) -> Result<RegularityResult> {
    let n = instance.domain.len();
    let l = instance.label_count();
    let eps = instance.eps;
    let cap = instance.update_cap();

    let primal_rounding = match options.rounding {
        RoundingMode::FixedPoint => Some(FixedPointFormat::for_l1_budget(l, eps / 10.0)?),
        RoundingMode::ExactDouble => None,
    };
    // Per-update dual budget eps / (30 kappa) from the strict bit-accounting
    // regime; the grid below keeps the per-update rounding within half of it.
    let dual_budget = eps / (30.0 * cap.max(1) as f64);
    let dual_rounding = if options.strict_bits && primal_rounding.is_some() {
        Some(FixedPointFormat::new(
            (1.0 / dual_budget).log2().ceil().max(1.0) as u32,
        ))
    } else {
        None
    };

    let mut state = ConjugatePairState::zero(n, l, primal_rounding)?;
    let initial_potential = potential(&instance.target, state.dual(), &instance.mu)?;
    state.push_potential(initial_potential);
    let mut trace: Vec<UpdateRecord> = Vec::new();

    loop {
        let mut updated = false;

        if let Some((member, sign, violation)) = find_violation_f(
            state.rounded(),
            &instance.target,
            &instance.distinguishers,
            eps,
            &instance.mu,
            options.selection,
        )? {
            let base = &instance.distinguishers.members()[member].field;
            let signal = if sign >= 0 { base.clone() } else { base.negated() };
            state = apply_update(
                instance,
                state,
                &signal,
                UpdateFamily::Distinguisher,
                member,
                sign,
                violation,
                primal_rounding,
                dual_rounding,
                &mut trace,
            )?;
            updated = true;
        }

        if let Some((member, violation)) = find_violation_r(
            state.rounded(),
            &instance.target,
            &instance.weights,
            eps,
            &instance.mu,
            options.selection,
        )? {
            // The update term is the weight composed with the table at this
            // instant, frozen as a plain field.
            let signal = instance.weights.members()[member]
                .weight
                .compose_with_kernel(state.rounded())?;
            state = apply_update(
                instance,
                state,
                &signal,
                UpdateFamily::Weight,
                member,
                1,
                violation,
                primal_rounding,
                dual_rounding,
                &mut trace,
            )?;
            updated = true;
        }

        if !updated {
            break;
        }
        if state.update_count() > cap + 1 {
            return Err(Error::Contract(format!(
                "update count {} exceeded the bound {cap} implied by the potential argument",
                state.update_count()
            )));
        }
    }

    let simulator = state.rounded().clone();
    let diff = simulator.minus(&instance.target)?;
    let mut witness_distinguisher: f64 = 0.0;
    for member in instance.distinguishers.members() {
        let v = mu_inner_product(&instance.mu, &diff, &member.field)?;
        witness_distinguisher = witness_distinguisher.max(v.abs());
    }
    let mut witness_weight = f64::NEG_INFINITY;
    for member in instance.weights.members() {
        let composed = member.weight.compose_with_kernel(&simulator)?;
        witness_weight = witness_weight.max(mu_inner_product(&instance.mu, &diff, &composed)?);
    }
    if instance.weights.is_empty() {
        witness_weight = 0.0;
    }

    let updates = state.update_count();
    let dual_drift_report = match dual_rounding {
        Some(format) => updates as f64 * format.grid() * 0.5,
        None => updates as f64 * dual_budget,
    };

    Ok(RegularityResult {
        simulator,
        updates,
        trace,
        witness_distinguisher,
        witness_weight,
        dual_drift_report,
        eps,
        label_count: l,
        max_member_cost: instance
            .distinguishers
            .max_cost()
            .max(instance.weights.max_cost()),
    })
}

#[allow(clippy::too_many_arguments)]
fn apply_update(
    instance: &RegularityInstance,
    state: ConjugatePairState,
    signal: &VectorField,
    family: UpdateFamily,
    member: usize,
    sign: i8,
    violation: f64,
    primal_rounding: Option<FixedPointFormat>,
    dual_rounding: Option<FixedPointFormat>,
    trace: &mut Vec<UpdateRecord>,
) -> Result<ConjugatePairState> {
    let potential_before = *state
        .potential_trace()
        .last()
        .expect("potential trace is seeded at initialization");
    let exact_violation =
        mu_inner_product(&instance.mu, &state.primal().minus(&instance.target)?, signal)?;
    let mut next = md_update(&state, signal, instance.eps, primal_rounding, dual_rounding)?;
    let potential_after = potential(&instance.target, next.dual(), &instance.mu)?;
    trace.push(UpdateRecord {
        update_index: next.update_count(),
        family,
        member,
        sign,
        violation,
        exact_violation,
        potential_before,
        potential_after,
    });
    next.push_potential(potential_after);
    Ok(next)
}

/// Structural complexity estimate for a finished run:
/// `(k + 1) * (max member cost + L * ceil(log2(L / eps))^3)`.
///
/// The cubic polylog factor is a fixed reporting convention standing in for
/// the per-update table-maintenance cost; the estimate is monotone in every
/// parameter.
pub fn complexity_of(result: &RegularityResult) -> u128 {
    let l = result.label_count as f64;
    let polylog = (l / result.eps).log2().ceil().max(1.0) as u128;
    let term = result.label_count as u128 * polylog.pow(3);
    (result.updates as u128 + 1) * (result.max_member_cost as u128 + term)
}
