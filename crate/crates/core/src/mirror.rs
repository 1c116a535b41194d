//! Conjugate-pair state for the multiplicative-weights updates and the
//! potential bookkeeping behind the boosting loops, plus the smoothness,
//! Lipschitz, and strong-convexity facts as checkable slack computations.
//!
//! The conjugate pair here is always the negative-Shannon-entropy /
//! log-sum-exp pair, which is the only instantiation the boosting algorithms
//! use; the generic facts are exposed as slack checks rather than a pluggable
//! solver.

use crate::entropy::EntropyNotion;
use crate::error::{Error, Result};
use crate::simplex::{
    field_linf_norm, l1_distance, linf_norm, log_sum_exp, mu_inner_product, softmax, Distribution,
    FixedPointFormat, Kernel, SimplexVector, VectorField,
};

/// Dual iterate, its exact primal image under softmax, the rounded primal
/// table actually consumed by the boosting loop, and the recorded potential
/// values.
#[derive(Debug, Clone)]
pub struct ConjugatePairState {
    dual: VectorField,
    primal: Kernel,
    rounded: Kernel,
    update_count: usize,
    potential_trace: Vec<f64>,
}

impl ConjugatePairState {
    /// Zero dual iterate; the primal image is the uniform kernel, rounded to
    /// the given grid when one is supplied.
    pub fn zero(n: usize, label_count: usize, rounding: Option<FixedPointFormat>) -> Result<Self> {
        let dual = VectorField::new(vec![vec![0.0; label_count]; n], false)?;
        let primal = Kernel::uniform(n, label_count)?;
        let rounded = round_kernel(&primal, rounding)?;
        Ok(ConjugatePairState {
            dual,
            primal,
            rounded,
            update_count: 0,
            potential_trace: Vec::new(),
        })
    }

    /// State at an arbitrary dual iterate: the primal is its exact softmax
    /// image and the rounded table matches it.
    pub fn from_dual(dual: VectorField) -> Result<Self> {
        let primal = Kernel::new(
            dual.rows()
                .iter()
                .map(|row| softmax(row))
                .collect::<Result<Vec<_>>>()?,
        )?;
        Ok(ConjugatePairState {
            dual,
            rounded: primal.clone(),
            primal,
            update_count: 0,
            potential_trace: Vec::new(),
        })
    }

    pub fn dual(&self) -> &VectorField {
        &self.dual
    }

    /// Exact softmax of the dual iterate.
    pub fn primal(&self) -> &Kernel {
        &self.primal
    }

    /// The rounded primal table.
    pub fn rounded(&self) -> &Kernel {
        &self.rounded
    }

    pub fn update_count(&self) -> usize {
        self.update_count
    }

    pub fn potential_trace(&self) -> &[f64] {
        &self.potential_trace
    }

    pub fn push_potential(&mut self, value: f64) {
        self.potential_trace.push(value);
    }
}

fn round_kernel(kernel: &Kernel, rounding: Option<FixedPointFormat>) -> Result<Kernel> {
    match rounding {
        None => Ok(kernel.clone()),
        Some(format) => Kernel::new(
            kernel
                .rows()
                .iter()
                .map(|row| format.round_simplex(row))
                .collect::<Result<Vec<_>>>()?,
        ),
    }
}

/// One mirror-descent step: `dual' = dual - step * signal`, primal recomputed
/// through softmax, rounded table refreshed, counter incremented. The input
/// state is left untouched.
///
/// `dual_rounding`, when set, snaps the updated dual iterate to a fixed-point
/// grid before the primal is recomputed (the strict bit-accounting mode).
pub fn md_update(
    state: &ConjugatePairState,
    signal: &VectorField,
    step: f64,
    primal_rounding: Option<FixedPointFormat>,
    dual_rounding: Option<FixedPointFormat>,
) -> Result<ConjugatePairState> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let mut dual = state.dual.step_sub(signal, step)?;
    if let Some(format) = dual_rounding {
        dual = VectorField::new(
            dual.rows()
                .iter()
                .map(|row| row.iter().map(|&x| format.round(x)).collect())
                .collect(),
            false,
        )?;
    }
    let primal = Kernel::new(
        dual.rows()
            .iter()
            .map(|row| softmax(row))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let rounded = round_kernel(&primal, primal_rounding)?;
    Ok(ConjugatePairState {
        dual,
        primal,
        rounded,
        update_count: state.update_count + 1,
        potential_trace: state.potential_trace.clone(),
    })
}

/// Potential of a dual iterate against the target kernel: the mean
/// Fenchel-Young divergence `phi(target(x)) + psi(h(x)) - <target(x), h(x)>`
/// for the Shannon/log-sum-exp pair. Nonnegative; at the zero iterate it is
/// at most `ln L`.
pub fn potential(target: &Kernel, dual: &VectorField, mu: &Distribution) -> Result<f64> {
    if target.len() != dual.len() || target.len() != mu.len() {
        return Err(Error::Shape("potential over mismatched domain".into()));
    }
    if target.label_count() != dual.label_count() {
        return Err(Error::Shape("potential over mismatched labels".into()));
    }
    let mut total = 0.0;
    for i in 0..mu.len() {
        let w = mu.weight(i);
        if w == 0.0 {
            continue;
        }
        let row = target.row(i);
        let h = dual.row(i);
        let phi: f64 = row
            .coords()
            .iter()
            .map(|&c| if c > 0.0 { c * c.ln() } else { 0.0 })
            .sum();
        let dot: f64 = row.coords().iter().zip(h.iter()).map(|(a, b)| a * b).sum();
        total += w * (phi + log_sum_exp(h)? - dot);
    }
    Ok(total)
}

/// Slack of the mirror-descent progress inequality for one update in the
/// lemma's normalization (`after = md_update(before, signal, 1)`):
///
/// `[potential(before) - potential(after)] - [<primal(before) - target, signal> - |signal|_inf^2 / 2]`
///
/// Nonnegative up to float dust for every valid update.
pub fn verify_md_inequality(
    target: &Kernel,
    before: &ConjugatePairState,
    after: &ConjugatePairState,
    signal: &VectorField,
    mu: &Distribution,
) -> Result<f64> {
    let drop = potential(target, before.dual(), mu)? - potential(target, after.dual(), mu)?;
    let gain = mu_inner_product(mu, &before.primal().minus(target)?, signal)?;
    let norm = field_linf_norm(signal);
    Ok(drop - (gain - 0.5 * norm * norm))
}

/// Slack of the softmax Lipschitz bound (l-infinity in, l1 out):
/// `|h - h2|_inf - |softmax(h) - softmax(h2)|_1 >= 0`.
pub fn verify_softmax_lipschitz(h: &[f64], h2: &[f64]) -> Result<f64> {
    if h.len() != h2.len() {
        return Err(Error::Shape("Lipschitz check on mismatched lengths".into()));
    }
    let diff: Vec<f64> = h.iter().zip(h2.iter()).map(|(a, b)| a - b).collect();
    let a = softmax(h)?;
    let b = softmax(h2)?;
    Ok(linf_norm(&diff) - l1_distance(&a, &b)?)
}

/// Slack of the Pinsker-type strong-convexity bound:
/// `KL(u || v) - |u - v|_1^2 / 2 >= 0`. Returns `+inf` when the divergence is
/// infinite.
pub fn verify_pinsker_strong_convexity(u: &SimplexVector, v: &SimplexVector) -> Result<f64> {
    let kl = crate::entropy::bregman_divergence(&EntropyNotion::shannon(0.25)?, u, v)?;
    if kl.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let l1 = l1_distance(u, v)?;
    Ok(kl - 0.5 * l1 * l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::seeding::substream;
    use rand::Rng;

    #[test]
    fn potential_frozen_values() {
        let mu = Distribution::uniform(3).unwrap();
        let zero = VectorField::new(vec![vec![0.0; 4]; 3], false).unwrap();

        // Deterministic target rows: potential at the zero iterate is ln L.
        let vertices = Kernel::new(vec![
            SimplexVector::vertex(4, 0).unwrap(),
            SimplexVector::vertex(4, 1).unwrap(),
            SimplexVector::vertex(4, 3).unwrap(),
        ])
        .unwrap();
        let p = potential(&vertices, &zero, &mu).unwrap();
        assert!((p - 4f64.ln()).abs() < 1e-12);

        // Uniform target: phi(uniform) + ln L = 0.
        let uniform = Kernel::uniform(3, 4).unwrap();
        assert!(potential(&uniform, &zero, &mu).unwrap().abs() < 1e-12);

        // Conjugate pair: potential vanishes.
        let mut rng = substream(41, "pot");
        let dual = generators::random_unclamped_field(3, 4, 3.0, &mut rng).unwrap();
        let conj = Kernel::new(
            dual.rows().iter().map(|h| softmax(h).unwrap()).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(potential(&conj, &dual, &mu).unwrap().abs() < 1e-9);
    }

    #[test]
    fn potential_capped_by_ln_l_at_zero() {
        let mut rng = substream(43, "pot-cap");
        for _ in 0..500 {
            let n = rng.random_range(1..9);
            let l = rng.random_range(2..9);
            let mu = generators::random_distribution(n, &mut rng).unwrap();
            let target = generators::random_kernel(n, l, &mut rng).unwrap();
            let zero = VectorField::new(vec![vec![0.0; l]; n], false).unwrap();
            let p = potential(&target, &zero, &mu).unwrap();
            assert!(p >= -1e-10);
            assert!(p <= (l as f64).ln() + 1e-10);
        }
    }

    #[test]
    fn md_update_basics() {
        let state = ConjugatePairState::zero(1, 2, None).unwrap();

        // Zero signal: state unchanged except the counter.
        let zero = VectorField::zero(1, 2).unwrap();
        let next = md_update(&state, &zero, 0.5, None, None).unwrap();
        assert_eq!(next.update_count(), 1);
        assert_eq!(next.dual().row(0), state.dual().row(0));
        assert_eq!(next.primal().row(0), state.primal().row(0));

        // Closed form after one signed update.
        let f = VectorField::new(vec![vec![1.0, -1.0]], true).unwrap();
        let eps = 0.3;
        let next = md_update(&state, &f, eps, None, None).unwrap();
        let z = (-eps).exp() + eps.exp();
        assert!((next.primal().row(0).coord(0) - (-eps).exp() / z).abs() < 1e-12);
        assert!((next.primal().row(0).coord(1) - eps.exp() / z).abs() < 1e-12);

        // Opposite updates restore the dual exactly.
        let back = md_update(&next, &f.negated(), eps, None, None).unwrap();
        assert_eq!(back.dual().row(0), state.dual().row(0));
    }

    #[test]
    fn md_inequality_randomized() {
        let mut rng = substream(47, "md-ineq");
        for trial in 0..1000 {
            let n = rng.random_range(1..6);
            let l = rng.random_range(2..6);
            let mu = generators::random_distribution(n, &mut rng).unwrap();
            let target = generators::random_kernel(n, l, &mut rng).unwrap();
            let start = generators::random_unclamped_field(n, l, 2.0, &mut rng).unwrap();
            let state = ConjugatePairState::from_dual(start).unwrap();
            let signal = generators::random_field(n, l, &mut rng).unwrap();
            let after = md_update(&state, &signal, 1.0, None, None).unwrap();
            let slack = verify_md_inequality(&target, &state, &after, &signal, &mu).unwrap();
            assert!(slack >= -1e-9, "trial {trial}: slack {slack}");
        }
    }

    #[test]
    fn md_inequality_adversarial_target_equals_iterate() {
        let mut rng = substream(53, "md-adv");
        for _ in 0..200 {
            let n = rng.random_range(1..5);
            let l = rng.random_range(2..5);
            let mu = generators::random_distribution(n, &mut rng).unwrap();
            let start = generators::random_unclamped_field(n, l, 2.0, &mut rng).unwrap();
            let state = ConjugatePairState::from_dual(start).unwrap();
            let primal = state.primal().clone();
            let signal = generators::random_field(n, l, &mut rng).unwrap();
            let after = md_update(&state, &signal, 1.0, None, None).unwrap();
            let slack = verify_md_inequality(&primal, &state, &after, &signal, &mu).unwrap();
            assert!(slack >= -1e-9, "slack {slack}");
        }

        // Zero signal: both sides vanish.
        let mu = Distribution::uniform(2).unwrap();
        let target = Kernel::uniform(2, 3).unwrap();
        let state = ConjugatePairState::zero(2, 3, None).unwrap();
        let zero = VectorField::zero(2, 3).unwrap();
        let after = md_update(&state, &zero, 1.0, None, None).unwrap();
        let slack = verify_md_inequality(&target, &state, &after, &zero, &mu).unwrap();
        assert!(slack.abs() < 1e-12);
    }

    #[test]
    fn softmax_lipschitz_randomized() {
        assert_eq!(verify_softmax_lipschitz(&[0.4, -0.2], &[0.4, -0.2]).unwrap(), 0.0);

        // Small symmetric perturbations are the tight direction: the l1 motion
        // is delta - delta^3/3 + O(delta^5), so the slack decays cubically.
        for delta in [1e-2, 1e-3] {
            let slack = verify_softmax_lipschitz(&[0.0, 0.0], &[delta, -delta]).unwrap();
            assert!(slack >= -1e-10);
            let expected = delta * delta * delta / 3.0;
            assert!(
                (slack - expected).abs() < expected * 0.05,
                "slack {slack} expected {expected}"
            );
        }

        let mut rng = substream(59, "lips");
        for _ in 0..10_000 {
            let l = rng.random_range(1..9);
            let h: Vec<f64> = (0..l).map(|_| rng.random_range(-5.0..5.0)).collect();
            let h2: Vec<f64> = (0..l).map(|_| rng.random_range(-5.0..5.0)).collect();
            let slack = verify_softmax_lipschitz(&h, &h2).unwrap();
            assert!(slack >= -1e-10, "slack {slack}");
        }
    }

    #[test]
    fn pinsker_randomized() {
        let u = SimplexVector::uniform(2).unwrap();
        assert!(verify_pinsker_strong_convexity(&u, &u).unwrap().abs() < 1e-12);

        let vertex = SimplexVector::vertex(2, 0).unwrap();
        let slack = verify_pinsker_strong_convexity(&vertex, &u).unwrap();
        assert!((slack - (std::f64::consts::LN_2 - 0.5)).abs() < 1e-12);

        let mut rng = substream(61, "pinsker");
        for _ in 0..10_000 {
            let l = rng.random_range(2..9);
            let a = generators::random_simplex(l, &mut rng).unwrap();
            let b = generators::random_simplex(l, &mut rng).unwrap();
            let slack = verify_pinsker_strong_convexity(&a, &b).unwrap();
            assert!(slack >= -1e-10, "slack {slack}");
        }

        // Zero coordinate in the reference where mass sits: infinite slack.
        let w = SimplexVector::vertex(2, 1).unwrap();
        assert!(verify_pinsker_strong_convexity(&vertex, &w).unwrap().is_infinite());
    }

    #[test]
    fn conjugate_pair_difference_form() {
        // For a conjugate pair (g0, h0), the Fenchel-Young divergence of any g
        // against h0 equals phi(g) - phi(g0) - <g - g0, h0>.
        let sh = EntropyNotion::shannon(0.1).unwrap();
        let mut rng = substream(67, "pair-form");
        for _ in 0..1000 {
            let l = rng.random_range(2..8);
            let h0: Vec<f64> = (0..l).map(|_| rng.random_range(-3.0..3.0)).collect();
            let g0 = softmax(&h0).unwrap();
            let g = generators::random_simplex(l, &mut rng).unwrap();
            let gamma = crate::entropy::fenchel_young(&sh, &g, &h0).unwrap();
            let dot: f64 = g
                .coords()
                .iter()
                .zip(g0.coords())
                .zip(h0.iter())
                .map(|((a, b), h)| (a - b) * h)
                .sum();
            let direct = sh.phi(&g) - sh.phi(&g0) - dot;
            assert!((gamma - direct).abs() < 1e-9);
        }
    }
}
