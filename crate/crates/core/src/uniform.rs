//! Sample-based boosting: the loop sees the target only through labeled
//! samples, obtains candidate distinguishers and weight functions from
//! oracles, estimates violations empirically on fresh batches, and updates on
//! the empirical threshold. Includes the ERM instantiations of both oracle
//! kinds, success-probability amplification by repetition, and the empirical
//! distinguishability probe.

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::entropy::WeightFunction;
use crate::error::{Error, Result};
use crate::mirror::{md_update, potential, ConjugatePairState};
use crate::regularity::{
    DistinguisherFamily, RegularityResult, UpdateFamily, UpdateRecord, WeightFamily,
};
use crate::seeding::{substream, trial_substream};
use crate::simplex::{
    mu_inner_product, Distribution, FiniteDomain, FixedPointFormat, Kernel, SimplexVector,
    VectorField,
};
use rand::Rng;

/// A labeled sample `(x, y*)` with `x ~ mu` and `y*` drawn from the target row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledSample {
    pub point: usize,
    pub target_label: usize,
}

/// A triple `(x, y, y*)` where `y` is drawn from the current table's row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledTriple {
    pub point: usize,
    pub label: usize,
    pub target_label: usize,
}

/// A calibration-oracle input `(v, y, y*)`; the oracle sees the table only
/// through its value `v` at the sampled point.
#[derive(Debug, Clone)]
pub struct CalibrationTriple {
    pub value: SimplexVector,
    pub label: usize,
    pub target_label: usize,
}

fn draw_from_weights<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Sample access to `(mu, target)` with an incrementing draw counter, so the
/// fresh-sample discipline is auditable.
#[derive(Debug, Clone)]
pub struct SampleSource {
    mu: Distribution,
    target: Kernel,
    draws: u64,
}

impl SampleSource {
    pub fn new(mu: &Distribution, target: &Kernel) -> Result<Self> {
        if mu.len() != target.len() {
            return Err(Error::Shape("sample source over mismatched domain".into()));
        }
        Ok(SampleSource {
            mu: mu.clone(),
            target: target.clone(),
            draws: 0,
        })
    }

    /// One draw of `(x, y*)`.
    pub fn draw(&mut self, rng: &mut ChaCha8Rng) -> LabeledSample {
        self.draws += 1;
        let point = draw_from_weights(self.mu.weights(), rng);
        let target_label = draw_from_weights(self.target.row(point).coords(), rng);
        LabeledSample { point, target_label }
    }

    pub fn draw_batch(&mut self, m: usize, rng: &mut ChaCha8Rng) -> Vec<LabeledSample> {
        (0..m).map(|_| self.draw(rng)).collect()
    }

    /// Total `(x, y*)` draws so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// `m` draws of `(x, y)` with `x ~ mu` and `y` from the row of `g` at `x`.
pub fn sample_mu_g(
    mu: &Distribution,
    g: &Kernel,
    rng: &mut ChaCha8Rng,
    m: usize,
) -> Result<Vec<(usize, usize)>> {
    if mu.len() != g.len() {
        return Err(Error::Shape("sampling over mismatched domain".into()));
    }
    if m == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    Ok((0..m)
        .map(|_| {
            let x = draw_from_weights(mu.weights(), rng);
            let y = draw_from_weights(g.row(x).coords(), rng);
            (x, y)
        })
        .collect())
}

/// Empirical violation `(1/m) sum <g_hat(x_i) - e_{y_i*}, field(x_i)>`;
/// unbiased for the true correlation because the indicator of a drawn label
/// has the row itself as its mean.
pub fn empirical_violation(
    samples: &[LabeledSample],
    field: &VectorField,
    g_hat: &Kernel,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("empirical violation of an empty batch".into()));
    }
    if field.len() != g_hat.len() || field.label_count() != g_hat.label_count() {
        return Err(Error::Shape("empirical violation over mismatched tables".into()));
    }
    let mut total = 0.0;
    for s in samples {
        let row = field.row(s.point);
        let table_row = g_hat.row(s.point);
        let dot: f64 = table_row
            .coords()
            .iter()
            .zip(row.iter())
            .map(|(a, b)| a * b)
            .sum();
        total += dot - row[s.target_label];
    }
    Ok(total / samples.len() as f64)
}

/// Tables visible to the harness (and to the test-only table-access oracle).
pub struct OracleContext<'a> {
    pub current: &'a Kernel,
    pub target: &'a Kernel,
    pub mu: &'a Distribution,
}

type DistStrategy =
    Arc<dyn Fn(&[LabeledTriple], &OracleContext, &mut ChaCha8Rng) -> Result<VectorField> + Send + Sync>;

/// An oracle that maps `m` labeled triples to a candidate distinguisher.
#[derive(Clone)]
pub struct DistinguishingOracle {
    name: String,
    pub sample_size: usize,
    pub cost: u64,
    strategy: DistStrategy,
}

impl fmt::Debug for DistinguishingOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistinguishingOracle")
            .field("name", &self.name)
            .field("sample_size", &self.sample_size)
            .finish()
    }
}

impl DistinguishingOracle {
    pub fn new(name: &str, sample_size: usize, cost: u64, strategy: DistStrategy) -> Self {
        DistinguishingOracle {
            name: name.into(),
            sample_size,
            cost,
            strategy,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Invoke the strategy and enforce the clamp contract on its output.
    pub fn invoke(
        &self,
        samples: &[LabeledTriple],
        ctx: &OracleContext,
        rng: &mut ChaCha8Rng,
    ) -> Result<VectorField> {
        let field = (self.strategy)(samples, ctx, rng)?;
        if field.len() != ctx.current.len() || field.label_count() != ctx.current.label_count() {
            return Err(Error::Contract(format!(
                "oracle {:?} returned a field of the wrong shape",
                self.name
            )));
        }
        VectorField::new(field.rows().to_vec(), true).map_err(|_| {
            Error::Contract(format!("oracle {:?} returned an unclamped field", self.name))
        })
    }
}

type CalStrategy = Arc<
    dyn Fn(&[CalibrationTriple], &OracleContext, &mut ChaCha8Rng) -> Result<WeightFunction>
        + Send
        + Sync,
>;

/// An oracle that maps `m` calibration triples to a candidate weight function.
#[derive(Clone)]
pub struct CalibrationOracle {
    name: String,
    pub sample_size: usize,
    pub cost: u64,
    strategy: CalStrategy,
}

impl fmt::Debug for CalibrationOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CalibrationOracle")
            .field("name", &self.name)
            .field("sample_size", &self.sample_size)
            .finish()
    }
}

impl CalibrationOracle {
    pub fn new(name: &str, sample_size: usize, cost: u64, strategy: CalStrategy) -> Self {
        CalibrationOracle {
            name: name.into(),
            sample_size,
            cost,
            strategy,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn invoke(
        &self,
        samples: &[CalibrationTriple],
        ctx: &OracleContext,
        rng: &mut ChaCha8Rng,
    ) -> Result<WeightFunction> {
        (self.strategy)(samples, ctx, rng)
    }
}

/// Oracle that always returns the zero field.
pub fn zero_distinguishing_oracle(n: usize, label_count: usize) -> DistinguishingOracle {
    DistinguishingOracle::new(
        "zero",
        1,
        0,
        Arc::new(move |_samples, _ctx, _rng| VectorField::zero(n, label_count)),
    )
}

/// Oracle that always returns the zero weight function.
pub fn zero_calibration_oracle(label_count: usize) -> CalibrationOracle {
    CalibrationOracle::new(
        "zero",
        1,
        0,
        Arc::new(move |_samples, _ctx, _rng| {
            Ok(WeightFunction::constant("zero", vec![0.0; label_count]))
        }),
    )
}

/// Empirical-risk maximization over a finite distinguisher family and its
/// negations: returns the signed member with the largest empirical correlation
/// `(1/m) sum <e_{y_i} - e_{y_i*}, f(x_i)>`, ties to the first in scan order
/// (`+f` before `-f`).
pub fn erm_distinguishing_oracle(
    family: DistinguisherFamily,
    sample_size: usize,
) -> DistinguishingOracle {
    let cost = family.max_cost();
    DistinguishingOracle::new(
        "erm_distinguisher",
        sample_size,
        cost,
        Arc::new(move |samples, _ctx, _rng| {
            if family.is_empty() {
                return Err(Error::Domain("ERM over an empty family".into()));
            }
            let m = samples.len().max(1) as f64;
            let mut best: Option<(f64, usize, i8)> = None;
            for (idx, member) in family.members().iter().enumerate() {
                let mut corr = 0.0;
                for s in samples {
                    let row = member.field.row(s.point);
                    corr += row[s.label] - row[s.target_label];
                }
                corr /= m;
                for (sign, value) in [(1i8, corr), (-1i8, -corr)] {
                    if best.is_none_or(|(b, _, _)| value > b) {
                        best = Some((value, idx, sign));
                    }
                }
            }
            let (_, idx, sign) = best.expect("family is non-empty");
            let field = &family.members()[idx].field;
            Ok(if sign >= 0 { field.clone() } else { field.negated() })
        }),
    )
}

/// Sample size under which the ERM calibration oracle is a weak agnostic
/// calibration oracle with promise threshold `eps1` and output threshold
/// `eps1 / 2`: `ceil((32 / eps1^2) ln(2 |family| / delta))`.
pub fn erm_calibration_sample_size(eps1: f64, family_len: usize, delta: f64) -> usize {
    ((32.0 / (eps1 * eps1)) * (2.0 * family_len.max(1) as f64 / delta).ln()).ceil() as usize
}

/// Empirical-risk maximization over a finite weight family: returns the member
/// maximizing `(1/m) sum <v_i - e_{y_i*}, r(v_i)>`, ties to the smallest index.
///
/// Triples are grouped by identical value vectors before evaluation (the
/// values come from a finite table, so the group count is at most the domain
/// size); the selected member is unchanged.
pub fn erm_calibration_oracle(family: WeightFamily, sample_size: usize) -> Result<CalibrationOracle> {
    if family.is_empty() {
        return Err(Error::Domain("ERM over an empty weight family".into()));
    }
    let cost = family.max_cost();
    Ok(CalibrationOracle::new(
        "erm_calibration",
        sample_size,
        cost,
        Arc::new(move |samples, _ctx, _rng| {
            let m = samples.len().max(1) as f64;
            // Group by exact value vector: (value, per-label target counts).
            let mut groups: Vec<(&SimplexVector, Vec<usize>)> = Vec::new();
            for s in samples {
                match groups.iter_mut().find(|(v, _)| v.coords() == s.value.coords()) {
                    Some((v, counts)) => counts_push(v.len(), counts, s.target_label),
                    None => {
                        let mut counts = vec![0usize; s.value.len()];
                        counts[s.target_label] += 1;
                        groups.push((&s.value, counts));
                    }
                }
            }
            let mut best: Option<(f64, usize)> = None;
            for (idx, member) in family.members().iter().enumerate() {
                let mut corr = 0.0;
                for (value, counts) in &groups {
                    let w = member.weight.eval(value);
                    let group_size: usize = counts.iter().sum();
                    let dot: f64 = value
                        .coords()
                        .iter()
                        .zip(w.iter())
                        .map(|(a, b)| a * b)
                        .sum();
                    corr += dot * group_size as f64;
                    for (label, &count) in counts.iter().enumerate() {
                        corr -= w[label] * count as f64;
                    }
                }
                corr /= m;
                if best.is_none_or(|(b, _)| corr > b) {
                    best = Some((corr, idx));
                }
            }
            let (_, idx) = best.expect("family is non-empty");
            Ok(family.members()[idx].weight.clone())
        }),
    ))
}

fn counts_push(len: usize, counts: &mut Vec<usize>, label: usize) {
    debug_assert_eq!(counts.len(), len);
    counts[label] += 1;
}

/// Test-only oracle with table access: returns the pointwise sign of the gap
/// between the current table and the target, which maximizes the correlation
/// over all clamped fields.
pub fn exact_max_violation_oracle() -> DistinguishingOracle {
    DistinguishingOracle::new(
        "exact_max_violation",
        1,
        0,
        Arc::new(|_samples, ctx, _rng| {
            let values = ctx
                .current
                .rows()
                .iter()
                .zip(ctx.target.rows().iter())
                .map(|(a, b)| {
                    a.coords()
                        .iter()
                        .zip(b.coords().iter())
                        .map(|(x, y)| if x >= y { 1.0 } else { -1.0 })
                        .collect()
                })
                .collect();
            VectorField::new(values, true)
        }),
    )
}

/// A full instance for the sample-based loop.
#[derive(Debug, Clone)]
pub struct UniformInstance {
    pub domain: FiniteDomain,
    pub mu: Distribution,
    pub target: Kernel,
    pub oracle_a: DistinguishingOracle,
    pub oracle_b: CalibrationOracle,
    pub eps: f64,
    pub delta: f64,
    /// Estimation batch size for the update checks.
    pub estimation_samples: usize,
    /// Hard iteration cap; exceeding it flags a failed run rather than erroring.
    pub kappa_cap: usize,
    pub seed: u64,
    /// Optional finite classes the outcome is audited against exactly.
    pub audit_distinguishers: Option<DistinguisherFamily>,
    pub audit_weights: Option<WeightFamily>,
}

/// Per-iteration failure budget: the overall budget split across the
/// `O(log L / eps^2)` iterations the potential argument allows.
pub fn per_check_failure_budget(eps: f64, delta: f64, label_count: usize) -> f64 {
    delta * eps * eps / (64.0 * (label_count.max(2) as f64).ln())
}

/// Minimum estimation batch giving per-check accuracy `eps/4` with failure
/// probability at most the per-check budget.
pub fn required_estimation_samples(eps: f64, delta: f64, label_count: usize) -> usize {
    let budget = per_check_failure_budget(eps, delta, label_count);
    ((128.0 / (eps * eps)) * (2.0 / budget).ln()).ceil() as usize
}

/// Iteration cap `ceil(16 ln L / eps^2)` for the halved update step.
pub fn uniform_update_cap(label_count: usize, eps: f64) -> usize {
    (16.0 * (label_count.max(2) as f64).ln() / (eps * eps)).ceil() as usize
}

impl UniformInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: FiniteDomain,
        mu: Distribution,
        target: Kernel,
        oracle_a: DistinguishingOracle,
        oracle_b: CalibrationOracle,
        eps: f64,
        delta: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Domain(format!("eps must lie in (0, 1/2), got {eps}")));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::Domain(format!("delta must lie in (0, 1/2), got {delta}")));
        }
        let n = domain.len();
        if mu.len() != n || target.len() != n {
            return Err(Error::Shape("instance tables disagree with the domain size".into()));
        }
        let l = target.label_count();
        Ok(UniformInstance {
            domain,
            mu,
            target,
            oracle_a,
            oracle_b,
            eps,
            delta,
            estimation_samples: required_estimation_samples(eps, delta, l),
            kappa_cap: uniform_update_cap(l, eps),
            seed,
            audit_distinguishers: None,
            audit_weights: None,
        })
    }

    pub fn label_count(&self) -> usize {
        self.target.label_count()
    }
}

/// Which line of the loop a batch of fresh samples served.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplePhase {
    DistinguisherOracle,
    DistinguisherEstimate,
    CalibrationOracle,
    CalibrationEstimate,
}

impl SamplePhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplePhase::DistinguisherOracle => "distinguisher_oracle",
            SamplePhase::DistinguisherEstimate => "distinguisher_estimate",
            SamplePhase::CalibrationOracle => "calibration_oracle",
            SamplePhase::CalibrationEstimate => "calibration_estimate",
        }
    }
}

/// Draw-counter span consumed by one phase of one iteration.
#[derive(Debug, Clone, Copy)]
pub struct SampleSpan {
    pub iteration: usize,
    pub phase: SamplePhase,
    pub start: u64,
    pub end: u64,
}

/// Outcome of a sample-based run.
#[derive(Debug)]
pub struct UniformOutcome {
    pub result: RegularityResult,
    /// True when the loop exited because both empirical checks failed; false
    /// when the iteration cap cut it off.
    pub success: bool,
    /// Audit log of the fresh batches: spans are disjoint and increasing.
    pub sample_log: Vec<SampleSpan>,
}

/// Run the sample-based boosting loop.
pub fn run_uniform_regularity(instance: &UniformInstance) -> Result<UniformOutcome> {
    let n = instance.domain.len();
    let l = instance.label_count();
    let eps = instance.eps;
    let step = eps / 2.0;
    let threshold = 0.75 * eps;
    let rounding = Some(FixedPointFormat::for_l1_budget(l, eps / 20.0)?);

    let mut harness_rng = substream(instance.seed, "uniform-harness");
    let mut oracle_rng = substream(instance.seed, "uniform-oracle");
    let mut source = SampleSource::new(&instance.mu, &instance.target)?;

    let mut state = ConjugatePairState::zero(n, l, rounding)?;
    let initial_potential = potential(&instance.target, state.dual(), &instance.mu)?;
    state.push_potential(initial_potential);
    let mut trace: Vec<UpdateRecord> = Vec::new();
    let mut sample_log: Vec<SampleSpan> = Vec::new();
    let mut iteration = 0usize;
    let success;

    loop {
        iteration += 1;
        let mut updated = false;

        // Distinguisher phase: fresh batch for the oracle, labels for the
        // current table drawn by the harness, fresh batch for the estimate.
        let start = source.draws();
        let batch = source.draw_batch(instance.oracle_a.sample_size, &mut harness_rng);
        let triples: Vec<LabeledTriple> = batch
            .iter()
            .map(|s| LabeledTriple {
                point: s.point,
                label: draw_from_weights(state.rounded().row(s.point).coords(), &mut harness_rng),
                target_label: s.target_label,
            })
            .collect();
        sample_log.push(SampleSpan {
            iteration,
            phase: SamplePhase::DistinguisherOracle,
            start,
            end: source.draws(),
        });
        let ctx = OracleContext {
            current: state.rounded(),
            target: &instance.target,
            mu: &instance.mu,
        };
        let field = instance.oracle_a.invoke(&triples, &ctx, &mut oracle_rng)?;

        let start = source.draws();
        let estimate_batch = source.draw_batch(instance.estimation_samples, &mut harness_rng);
        sample_log.push(SampleSpan {
            iteration,
            phase: SamplePhase::DistinguisherEstimate,
            start,
            end: source.draws(),
        });
        let estimate = empirical_violation(&estimate_batch, &field, state.rounded())?;
        if estimate > threshold {
            let exact = mu_inner_product(
                &instance.mu,
                &state.primal().minus(&instance.target)?,
                &field,
            )?;
            let potential_before = *state.potential_trace().last().expect("seeded");
            let mut next = md_update(&state, &field, step, rounding, None)?;
            let potential_after = potential(&instance.target, next.dual(), &instance.mu)?;
            trace.push(UpdateRecord {
                update_index: next.update_count(),
                family: UpdateFamily::Distinguisher,
                member: 0,
                sign: 1,
                violation: estimate,
                exact_violation: exact,
                potential_before,
                potential_after,
            });
            next.push_potential(potential_after);
            state = next;
            updated = true;
        }

        // Calibration phase against the current (possibly just updated) table.
        let start = source.draws();
        let batch = source.draw_batch(instance.oracle_b.sample_size, &mut harness_rng);
        let cal_triples: Vec<CalibrationTriple> = batch
            .iter()
            .map(|s| {
                let row = state.rounded().row(s.point).clone();
                let label = draw_from_weights(row.coords(), &mut harness_rng);
                CalibrationTriple {
                    value: row,
                    label,
                    target_label: s.target_label,
                }
            })
            .collect();
        sample_log.push(SampleSpan {
            iteration,
            phase: SamplePhase::CalibrationOracle,
            start,
            end: source.draws(),
        });
        let ctx = OracleContext {
            current: state.rounded(),
            target: &instance.target,
            mu: &instance.mu,
        };
        let weight = instance.oracle_b.invoke(&cal_triples, &ctx, &mut oracle_rng)?;
        let composed = weight.compose_with_kernel(state.rounded())?;

        let start = source.draws();
        let estimate_batch = source.draw_batch(instance.estimation_samples, &mut harness_rng);
        sample_log.push(SampleSpan {
            iteration,
            phase: SamplePhase::CalibrationEstimate,
            start,
            end: source.draws(),
        });
        let estimate = empirical_violation(&estimate_batch, &composed, state.rounded())?;
        if estimate > threshold {
            let exact = mu_inner_product(
                &instance.mu,
                &state.primal().minus(&instance.target)?,
                &composed,
            )?;
            let potential_before = *state.potential_trace().last().expect("seeded");
            let mut next = md_update(&state, &composed, step, rounding, None)?;
            let potential_after = potential(&instance.target, next.dual(), &instance.mu)?;
            trace.push(UpdateRecord {
                update_index: next.update_count(),
                family: UpdateFamily::Weight,
                member: 0,
                sign: 1,
                violation: estimate,
                exact_violation: exact,
                potential_before,
                potential_after,
            });
            next.push_potential(potential_after);
            state = next;
            updated = true;
        }

        if !updated {
            success = true;
            break;
        }
        if state.update_count() > instance.kappa_cap {
            success = false;
            break;
        }
    }

    // Exact audits against the optional reference classes.
    let simulator = state.rounded().clone();
    let diff = simulator.minus(&instance.target)?;
    let witness_distinguisher = match &instance.audit_distinguishers {
        Some(family) => {
            let mut worst: f64 = 0.0;
            for member in family.members() {
                worst = worst.max(
                    mu_inner_product(&instance.mu, &diff, &member.field)?.abs(),
                );
            }
            worst
        }
        None => f64::NAN,
    };
    let witness_weight = match &instance.audit_weights {
        Some(family) => {
            let mut worst = f64::NEG_INFINITY;
            for member in family.members() {
                let composed = member.weight.compose_with_kernel(&simulator)?;
                worst = worst.max(mu_inner_product(&instance.mu, &diff, &composed)?);
            }
            if family.is_empty() {
                0.0
            } else {
                worst
            }
        }
        None => f64::NAN,
    };

    let updates = state.update_count();
    Ok(UniformOutcome {
        result: RegularityResult {
            simulator,
            updates,
            trace,
            witness_distinguisher,
            witness_weight,
            dual_drift_report: 0.0,
            eps,
            label_count: l,
            max_member_cost: instance.oracle_a.cost.max(instance.oracle_b.cost),
        },
        success,
        sample_log,
    })
}

/// Amplify a distinguishing oracle's success probability from `alpha` to
/// `1 - delta` by repetition: run `u = ceil((2/alpha) ln(4/delta))` copies on
/// disjoint batches, then keep the candidate with the best empirical estimate
/// on a fresh selection batch of `ceil((32/eps^2) ln(4u/delta))` triples. The
/// guarantee threshold degrades by a factor of two.
pub fn amplify_distinguishing_oracle(
    base: &DistinguishingOracle,
    alpha: f64,
    delta: f64,
    eps: f64,
) -> Result<DistinguishingOracle> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(delta > 0.0 && delta < 1.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain("delta and eps must lie in (0, 1)".into()));
    }
    let copies = ((2.0 / alpha) * (4.0 / delta).ln()).ceil().max(1.0) as usize;
    let selection =
        ((32.0 / (eps * eps)) * (4.0 * copies as f64 / delta).ln()).ceil() as usize;
    let base_m = base.sample_size;
    let inner = base.clone();
    Ok(DistinguishingOracle::new(
        &format!("amplified[{}]", base.name()),
        copies * base_m + selection,
        base.cost,
        Arc::new(move |samples, ctx, rng| {
            if samples.len() < copies * base_m + 1 {
                return Err(Error::Domain(format!(
                    "amplified oracle needs at least {} samples, got {}",
                    copies * base_m + 1,
                    samples.len()
                )));
            }
            let mut candidates = Vec::with_capacity(copies);
            for j in 0..copies {
                let chunk = &samples[j * base_m..(j + 1) * base_m];
                candidates.push(inner.invoke(chunk, ctx, rng)?);
            }
            let holdout = &samples[copies * base_m..];
            let mut best: Option<(f64, usize)> = None;
            for (j, field) in candidates.iter().enumerate() {
                let mut est = 0.0;
                for s in holdout {
                    let row = field.row(s.point);
                    est += row[s.label] - row[s.target_label];
                }
                est /= holdout.len() as f64;
                if best.is_none_or(|(b, _)| est > b) {
                    best = Some((est, j));
                }
            }
            let (_, j) = best.expect("at least one candidate");
            Ok(candidates[j].clone())
        }),
    ))
}

/// Empirical probability, over fresh sample batches, that the oracle's output
/// achieves true correlation above `eps` between `g` and the target.
pub fn is_distinguishable(
    g: &Kernel,
    target: &Kernel,
    mu: &Distribution,
    oracle: &DistinguishingOracle,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial required".into()));
    }
    let diff = g.minus(target)?;
    let mut hits = 0usize;
    for trial in 0..trials {
        let mut rng = trial_substream(seed, "distinguishability", trial as u64);
        let mut oracle_rng = trial_substream(seed, "distinguishability-oracle", trial as u64);
        let mut source = SampleSource::new(mu, target)?;
        let batch = source.draw_batch(oracle.sample_size, &mut rng);
        let triples: Vec<LabeledTriple> = batch
            .iter()
            .map(|s| LabeledTriple {
                point: s.point,
                label: draw_from_weights(g.row(s.point).coords(), &mut rng),
                target_label: s.target_label,
            })
            .collect();
        let ctx = OracleContext {
            current: g,
            target,
            mu,
        };
        let field = oracle.invoke(&triples, &ctx, &mut oracle_rng)?;
        if mu_inner_product(mu, &diff, &field)? > eps {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
