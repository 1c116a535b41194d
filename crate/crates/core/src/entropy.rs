//! Entropy notions: a convex function on the simplex with a fixed subgradient
//! choice, an optional closed-form conjugate, a scale factor bringing the
//! subgradient into `[-1,1]^L`, and an optional boundary perturbation. Also the
//! derived quantities: entropy of a kernel, Bregman and Fenchel-Young
//! divergences, the gap identity, and rounded subgradient weight functions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::simplex::{
    log_sum_exp, mu_inner_product, Distribution, FixedPointFormat, Kernel, SimplexVector,
    VectorField,
};

type PhiFn = Arc<dyn Fn(&SimplexVector) -> f64 + Send + Sync>;
type SubgradFn = Arc<dyn Fn(&SimplexVector) -> Vec<f64> + Send + Sync>;
type PsiFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum NotionKind {
    Shannon,
    MinEntropy,
    Collision,
    SqrtCollision,
    Custom {
        phi: PhiFn,
        subgrad: SubgradFn,
        psi: Option<PsiFn>,
        scale: f64,
    },
}

/// A convex function on the simplex together with its chosen subgradient rule.
///
/// `phi` and `subgrad` are the raw (unscaled) quantities; `scale` is the
/// multiplier that brings the subgradient into `[-1,1]^L` where that bound is
/// needed, and `sigma` (when set) perturbs evaluation points away from the
/// simplex boundary before taking subgradients.
#[derive(Clone)]
pub struct EntropyNotion {
    name: String,
    kind: NotionKind,
    sigma: Option<f64>,
}

impl fmt::Debug for EntropyNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntropyNotion")
            .field("name", &self.name)
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl EntropyNotion {
    /// Negative Shannon entropy `sum v ln v`, subgradient `ln v`, conjugate
    /// log-sum-exp. The boundary perturbation is mandatory: without it the
    /// subgradient is unbounded near the boundary.
    pub fn shannon(eps_sigma: f64) -> Result<Self> {
        check_sigma(eps_sigma)?;
        Ok(EntropyNotion {
            name: "shannon".into(),
            kind: NotionKind::Shannon,
            sigma: Some(eps_sigma),
        })
    }

    /// Largest coordinate, subgradient the indicator of the smallest-index
    /// maximizer.
    pub fn min_entropy() -> Self {
        EntropyNotion {
            name: "min_entropy".into(),
            kind: NotionKind::MinEntropy,
            sigma: None,
        }
    }

    /// Squared 2-norm (collision probability), subgradient `2v`, scale 1/2.
    pub fn collision() -> Self {
        EntropyNotion {
            name: "collision".into(),
            kind: NotionKind::Collision,
            sigma: None,
        }
    }

    /// 2-norm, subgradient `v / |v|_2`, well defined on all of the simplex.
    pub fn sqrt_collision() -> Self {
        EntropyNotion {
            name: "sqrt_collision".into(),
            kind: NotionKind::SqrtCollision,
            sigma: None,
        }
    }

    pub fn custom(
        name: &str,
        phi: PhiFn,
        subgrad: SubgradFn,
        psi: Option<PsiFn>,
        scale: f64,
        sigma: Option<f64>,
    ) -> Result<Self> {
        if let Some(e) = sigma {
            check_sigma(e)?;
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!("scale must be positive, got {scale}")));
        }
        Ok(EntropyNotion {
            name: name.into(),
            kind: NotionKind::Custom { phi, subgrad, psi, scale },
            sigma,
        })
    }

    /// Notion selection by config name. `eps_sigma` is only consulted for
    /// notions that need a boundary perturbation.
    pub fn by_name(name: &str, eps_sigma: f64) -> Result<Self> {
        match name {
            "shannon" => Self::shannon(eps_sigma),
            "min_entropy" => Ok(Self::min_entropy()),
            "collision" => Ok(Self::collision()),
            "sqrt_collision" => Ok(Self::sqrt_collision()),
            other => Err(Error::Domain(format!("unknown entropy notion {other:?}"))),
        }
    }

    /// The four builtin notions, with the given perturbation for the one that
    /// needs it.
    pub fn builtins(eps_sigma: f64) -> Result<Vec<Self>> {
        Ok(vec![
            Self::shannon(eps_sigma)?,
            Self::min_entropy(),
            Self::collision(),
            Self::sqrt_collision(),
        ])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sigma_eps(&self) -> Option<f64> {
        self.sigma
    }

    /// Raw convex function value.
    pub fn phi(&self, v: &SimplexVector) -> f64 {
        match &self.kind {
            NotionKind::Shannon => v
                .coords()
                .iter()
                .map(|&c| if c > 0.0 { c * c.ln() } else { 0.0 })
                .sum(),
            NotionKind::MinEntropy => v.coords().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            NotionKind::Collision => v.coords().iter().map(|c| c * c).sum(),
            NotionKind::SqrtCollision => v.coords().iter().map(|c| c * c).sum::<f64>().sqrt(),
            NotionKind::Custom { phi, .. } => phi(v),
        }
    }

    /// The fixed subgradient choice at `v` (unscaled). For the Shannon notion
    /// this is `ln v`, with `-inf` entries on the boundary.
    pub fn subgrad(&self, v: &SimplexVector) -> Vec<f64> {
        match &self.kind {
            NotionKind::Shannon => v.coords().iter().map(|&c| c.ln()).collect(),
            NotionKind::MinEntropy => {
                let mut g = vec![0.0; v.len()];
                g[v.argmax()] = 1.0;
                g
            }
            NotionKind::Collision => v.coords().iter().map(|c| 2.0 * c).collect(),
            NotionKind::SqrtCollision => {
                let norm = v.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
                v.coords().iter().map(|c| c / norm).collect()
            }
            NotionKind::Custom { subgrad, .. } => subgrad(v),
        }
    }

    /// Closed-form convex conjugate, when one exists.
    pub fn psi(&self, h: &[f64]) -> Result<f64> {
        match &self.kind {
            NotionKind::Shannon => log_sum_exp(h),
            NotionKind::Custom { psi: Some(psi), .. } => Ok(psi(h)),
            _ => Err(Error::Unsupported(format!(
                "notion {:?} has no closed-form conjugate",
                self.name
            ))),
        }
    }

    pub fn has_conjugate(&self) -> bool {
        matches!(
            &self.kind,
            NotionKind::Shannon | NotionKind::Custom { psi: Some(_), .. }
        )
    }

    /// Multiplier bringing the (perturbed) subgradient into `[-1,1]^L`.
    pub fn scale(&self, label_count: usize) -> f64 {
        match &self.kind {
            NotionKind::Shannon => {
                let eps = self.sigma.expect("shannon carries a perturbation");
                1.0 / (label_count as f64 / eps).ln()
            }
            NotionKind::MinEntropy => 1.0,
            NotionKind::Collision => 0.5,
            NotionKind::SqrtCollision => 1.0,
            NotionKind::Custom { scale, .. } => *scale,
        }
    }

    /// The perturbed evaluation point: `sigma(v)` when a perturbation is set,
    /// `v` itself otherwise.
    pub fn sigma_point(&self, v: &SimplexVector) -> Result<SimplexVector> {
        match self.sigma {
            Some(eps) => sigma_transform(v, eps),
            None => Ok(v.clone()),
        }
    }

    /// The simulator as this notion evaluates it: perturbed rows when the
    /// notion carries a transform, the kernel itself otherwise.
    pub fn simulator_view(&self, kernel: &Kernel) -> Result<Kernel> {
        match self.sigma {
            Some(eps) => Kernel::new(
                kernel
                    .rows()
                    .iter()
                    .map(|row| sigma_transform(row, eps))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => Ok(kernel.clone()),
        }
    }

    /// Scale-adjusted subgradient at the perturbed point; bounded in
    /// `[-1,1]^L` for every builtin notion.
    pub fn scaled_sigma_subgrad(&self, v: &SimplexVector) -> Result<Vec<f64>> {
        let point = self.sigma_point(v)?;
        let scale = self.scale(v.len());
        Ok(self.subgrad(&point).iter().map(|g| g * scale).collect())
    }
}

fn check_sigma(eps_sigma: f64) -> Result<()> {
    if !(eps_sigma > 0.0 && eps_sigma < 0.5) {
        return Err(Error::Domain(format!(
            "perturbation parameter must lie in (0, 1/2), got {eps_sigma}"
        )));
    }
    Ok(())
}

/// Entropy of a kernel under `mu`: minus the mean of `phi` over the rows
/// (raw `phi`; scaling is applied only where the bounded-subgradient form of
/// the guarantees is being checked).
pub fn entropy(notion: &EntropyNotion, g: &Kernel, mu: &Distribution) -> Result<f64> {
    if g.len() != mu.len() {
        return Err(Error::Shape("entropy over mismatched domain".into()));
    }
    let mut total = 0.0;
    for i in 0..g.len() {
        let w = mu.weight(i);
        if w != 0.0 {
            total += w * notion.phi(g.row(i));
        }
    }
    Ok(-total)
}

/// Bregman divergence `phi(u) - phi(v) - <u - v, subgrad(v)>` for the notion's
/// fixed subgradient choice. Returns `+inf` when the Shannon divergence is
/// infinite (mass of `u` where `v` is exactly zero).
pub fn bregman_divergence(notion: &EntropyNotion, u: &SimplexVector, v: &SimplexVector) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape("divergence on mismatched lengths".into()));
    }
    if let NotionKind::Shannon = notion.kind {
        // KL closed form, with the boundary sentinel.
        let mut total = 0.0;
        for (&a, &b) in u.coords().iter().zip(v.coords().iter()) {
            if a > 0.0 {
                if b == 0.0 {
                    return Ok(f64::INFINITY);
                }
                total += a * (a / b).ln();
            }
        }
        return Ok(total);
    }
    let sub = notion.subgrad(v);
    let mut cross = 0.0;
    for ((&a, &b), &g) in u.coords().iter().zip(v.coords().iter()).zip(sub.iter()) {
        let diff = a - b;
        if diff != 0.0 {
            cross += diff * g;
        }
    }
    Ok(notion.phi(u) - notion.phi(v) - cross)
}

/// Mean Bregman divergence between two kernels; `+inf` propagates.
pub fn kernel_bregman_divergence(
    notion: &EntropyNotion,
    target: &Kernel,
    g: &Kernel,
    mu: &Distribution,
) -> Result<f64> {
    if target.len() != g.len() || target.len() != mu.len() {
        return Err(Error::Shape("kernel divergence over mismatched domain".into()));
    }
    if target.label_count() != g.label_count() {
        return Err(Error::Shape("kernel divergence over mismatched labels".into()));
    }
    let mut total = 0.0;
    for i in 0..target.len() {
        let w = mu.weight(i);
        if w == 0.0 {
            continue;
        }
        let d = bregman_divergence(notion, target.row(i), g.row(i))?;
        if d.is_infinite() {
            return Ok(f64::INFINITY);
        }
        total += w * d;
    }
    Ok(total)
}

/// Fenchel-Young divergence `phi(g) + psi(h) - <g, h>`; requires a closed-form
/// conjugate.
pub fn fenchel_young(notion: &EntropyNotion, g: &SimplexVector, h: &[f64]) -> Result<f64> {
    if g.len() != h.len() {
        return Err(Error::Shape("Fenchel-Young on mismatched lengths".into()));
    }
    let psi = notion.psi(h)?;
    let dot: f64 = g.coords().iter().zip(h.iter()).map(|(a, b)| a * b).sum();
    Ok(notion.phi(g) + psi - dot)
}

/// Residual of the identity
/// `[H(s) - H(target) - D(target || s)] - <target - s, subgrad o s>`,
/// computed term by term. This is an algebraic identity, so the result is
/// float dust for any finite inputs; an infinite divergence term propagates
/// as `+inf`.
pub fn gap_identity_residual(
    notion: &EntropyNotion,
    simulator: &Kernel,
    target: &Kernel,
    mu: &Distribution,
) -> Result<f64> {
    if simulator.len() != target.len() || simulator.len() != mu.len() {
        return Err(Error::Shape("gap identity over mismatched domain".into()));
    }
    if simulator.label_count() != target.label_count() {
        return Err(Error::Shape("gap identity over mismatched labels".into()));
    }
    let gap = entropy(notion, simulator, mu)? - entropy(notion, target, mu)?;
    let divergence = kernel_bregman_divergence(notion, target, simulator, mu)?;
    if divergence.is_infinite() {
        return Ok(f64::INFINITY);
    }
    // <target - simulator, subgrad o simulator>, guarded so that subgradient
    // entries at coordinates with zero difference contribute exactly zero.
    let mut cross = 0.0;
    for i in 0..mu.len() {
        let w = mu.weight(i);
        if w == 0.0 {
            continue;
        }
        let sub = notion.subgrad(simulator.row(i));
        let mut dot = 0.0;
        for ((&a, &b), &g) in target
            .row(i)
            .coords()
            .iter()
            .zip(simulator.row(i).coords().iter())
            .zip(sub.iter())
        {
            let diff = a - b;
            if diff != 0.0 {
                dot += diff * g;
            }
        }
        if dot.is_infinite() {
            return Ok(f64::INFINITY);
        }
        cross += w * dot;
    }
    Ok(gap - divergence - cross)
}

/// Mix `v` toward the uniform distribution: `(1 - eps) v + eps u`. Every
/// output coordinate is at least `eps / L`.
pub fn sigma_transform(v: &SimplexVector, eps_sigma: f64) -> Result<SimplexVector> {
    check_sigma(eps_sigma)?;
    let l = v.len() as f64;
    SimplexVector::new(
        v.coords()
            .iter()
            .map(|&c| (1.0 - eps_sigma) * c + eps_sigma / l)
            .collect(),
    )
}

/// A weight function: a map from the simplex into `[-1,1]^L`, given as a
/// callable rule.
#[derive(Clone)]
pub struct WeightFunction {
    name: String,
    rule: WeightRule,
}

#[derive(Clone)]
enum WeightRule {
    /// Scale-adjusted, perturbation-composed subgradient of a notion, rounded
    /// to a fixed-point grid.
    Subgradient {
        notion: EntropyNotion,
        format: FixedPointFormat,
    },
    /// `clamp(factor * v + offset)` with a fixed offset vector.
    Affine { factor: f64, offset: Vec<f64> },
    /// A fixed vector regardless of input.
    Constant(Vec<f64>),
    Custom(Arc<dyn Fn(&SimplexVector) -> Vec<f64> + Send + Sync>),
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction").field("name", &self.name).finish()
    }
}

impl WeightFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn affine(name: &str, factor: f64, offset: Vec<f64>) -> Self {
        WeightFunction {
            name: name.into(),
            rule: WeightRule::Affine { factor, offset },
        }
    }

    pub fn constant(name: &str, value: Vec<f64>) -> Self {
        WeightFunction {
            name: name.into(),
            rule: WeightRule::Constant(value),
        }
    }

    pub fn custom(
        name: &str,
        f: Arc<dyn Fn(&SimplexVector) -> Vec<f64> + Send + Sync>,
    ) -> Self {
        WeightFunction {
            name: name.into(),
            rule: WeightRule::Custom(f),
        }
    }

    /// Evaluate the rule; the output is clamped to `[-1,1]^L`.
    pub fn eval(&self, v: &SimplexVector) -> Vec<f64> {
        let raw: Vec<f64> = match &self.rule {
            WeightRule::Subgradient { notion, format } => notion
                .scaled_sigma_subgrad(v)
                .expect("perturbation parameters were validated at construction")
                .iter()
                .map(|&g| format.round(g))
                .collect(),
            WeightRule::Affine { factor, offset } => v
                .coords()
                .iter()
                .enumerate()
                .map(|(i, &c)| factor * c + offset.get(i).copied().unwrap_or(0.0))
                .collect(),
            WeightRule::Constant(value) => value.clone(),
            WeightRule::Custom(f) => f(v),
        };
        raw.iter().map(|&x| x.clamp(-1.0, 1.0)).collect()
    }

    /// Materialize `r o g` as a vector field over the kernel's domain.
    pub fn compose_with_kernel(&self, g: &Kernel) -> Result<VectorField> {
        VectorField::new(g.rows().iter().map(|row| self.eval(row)).collect(), true)
    }
}

/// The weight function `r` for a notion: its scale-adjusted (and
/// perturbation-composed, when set) subgradient, rounded to a fixed-point grid
/// with per-coordinate error at most `accuracy / 4`, clamped to `[-1,1]^L`.
pub fn subgradient_weight(notion: &EntropyNotion, accuracy: f64) -> Result<WeightFunction> {
    if !(accuracy > 0.0 && accuracy < 1.0) {
        return Err(Error::Domain(format!("accuracy must lie in (0,1), got {accuracy}")));
    }
    let format = FixedPointFormat::for_coordinate_accuracy(accuracy)?;
    Ok(WeightFunction {
        name: format!("subgrad[{}]", notion.name()),
        rule: WeightRule::Subgradient {
            notion: notion.clone(),
            format,
        },
    })
}

/// `mu`-weighted inner product `<a - b, w o c>` computed from tables.
pub fn weighted_residual_correlation(
    mu: &Distribution,
    a: &Kernel,
    b: &Kernel,
    weight: &WeightFunction,
    c: &Kernel,
) -> Result<f64> {
    let field = weight.compose_with_kernel(c)?;
    mu_inner_product(mu, &a.minus(b)?, &field)
}
