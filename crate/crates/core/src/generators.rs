//! Seeded random instances: simplex points, distributions, kernels, and
//! bounded fields. Simplex points are drawn uniformly (unit-rate exponentials,
//! normalized), so boundary-adjacent vectors show up regularly.

use crate::entropy::{subgradient_weight, EntropyNotion};
use crate::error::Result;
use crate::regularity::{DistinguisherFamily, RegularityInstance, WeightFamily};
use crate::seeding::substream;
use crate::simplex::{Distribution, FiniteDomain, Kernel, SimplexVector, VectorField};
use rand::Rng;

fn exp_sample<R: Rng>(rng: &mut R) -> f64 {
    // Inverse-CDF draw; the argument is kept away from 0 so ln is finite.
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    -u.ln()
}

pub fn random_simplex<R: Rng>(label_count: usize, rng: &mut R) -> Result<SimplexVector> {
    let raw: Vec<f64> = (0..label_count).map(|_| exp_sample(rng)).collect();
    let sum: f64 = raw.iter().sum();
    SimplexVector::new(raw.iter().map(|v| v / sum).collect())
}

/// A simplex point supported on at most `support` labels.
pub fn random_sparse_simplex<R: Rng>(
    label_count: usize,
    support: usize,
    rng: &mut R,
) -> Result<SimplexVector> {
    let support = support.clamp(1, label_count);
    let mut coords = vec![0.0; label_count];
    let mut picked = Vec::with_capacity(support);
    while picked.len() < support {
        let i = rng.random_range(0..label_count);
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    let raw: Vec<f64> = (0..support).map(|_| exp_sample(rng)).collect();
    let sum: f64 = raw.iter().sum();
    for (slot, mass) in picked.iter().zip(raw.iter()) {
        coords[*slot] = mass / sum;
    }
    SimplexVector::new(coords)
}

pub fn random_distribution<R: Rng>(n: usize, rng: &mut R) -> Result<Distribution> {
    let raw: Vec<f64> = (0..n).map(|_| exp_sample(rng)).collect();
    let sum: f64 = raw.iter().sum();
    Distribution::new(raw.iter().map(|v| v / sum).collect())
}

pub fn random_kernel<R: Rng>(n: usize, label_count: usize, rng: &mut R) -> Result<Kernel> {
    Kernel::new(
        (0..n)
            .map(|_| random_simplex(label_count, rng))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// A kernel whose rows are vertices (deterministic labels).
pub fn random_vertex_kernel<R: Rng>(n: usize, label_count: usize, rng: &mut R) -> Result<Kernel> {
    Kernel::new(
        (0..n)
            .map(|_| SimplexVector::vertex(label_count, rng.random_range(0..label_count)))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// A field with coordinates uniform in `[-1,1]`, clamp flag set.
pub fn random_field<R: Rng>(n: usize, label_count: usize, rng: &mut R) -> Result<VectorField> {
    VectorField::new(
        (0..n)
            .map(|_| (0..label_count).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect(),
        true,
    )
}

/// An unclamped field with coordinates uniform in `[-range, range]`.
pub fn random_unclamped_field<R: Rng>(
    n: usize,
    label_count: usize,
    range: f64,
    rng: &mut R,
) -> Result<VectorField> {
    VectorField::new(
        (0..n)
            .map(|_| {
                (0..label_count)
                    .map(|_| rng.random_range(-range..=range))
                    .collect()
            })
            .collect(),
        false,
    )
}

/// A reproducible boosting instance: random weights for the point
/// distribution, a random target kernel, `num_distinguishers` clamped fields,
/// and the subgradient weights of the given notions at accuracy `eps`.
/// Everything derives from named substreams of `seed`.
///
/// The first distinguisher is the sign pattern of the gap between the uniform
/// start and the target, so the boosting loop always has real work; the rest
/// are random fields.
pub fn random_regularity_instance(
    seed: u64,
    n: usize,
    label_count: usize,
    num_distinguishers: usize,
    eps: f64,
    notions: &[EntropyNotion],
) -> Result<RegularityInstance> {
    let mut rng = substream(seed, "instance");
    let domain = FiniteDomain::indexed(n)?;
    let mu = random_distribution(n, &mut rng)?;
    let target = random_kernel(n, label_count, &mut rng)?;
    let mut fields: Vec<(VectorField, u64)> = Vec::with_capacity(num_distinguishers);
    if num_distinguishers > 0 {
        let uniform = 1.0 / label_count as f64;
        let gap_sign = VectorField::new(
            target
                .rows()
                .iter()
                .map(|row| {
                    row.coords()
                        .iter()
                        .map(|&c| if uniform >= c { 1.0 } else { -1.0 })
                        .collect()
                })
                .collect(),
            true,
        )?;
        fields.push((gap_sign, 1));
    }
    for _ in fields.len()..num_distinguishers {
        fields.push((random_field(n, label_count, &mut rng)?, 1));
    }
    let weights = WeightFamily::new(
        notions
            .iter()
            .map(|notion| Ok((subgradient_weight(notion, eps)?, 1)))
            .collect::<Result<Vec<_>>>()?,
        label_count,
    )?;
    RegularityInstance::new(
        domain,
        mu,
        target,
        DistinguisherFamily::new(fields)?,
        weights,
        eps,
        seed,
    )
}
