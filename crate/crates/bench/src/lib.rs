//! Shared fixtures for the criterion benches: deterministic mid-sized
//! instances so timings are comparable across runs.

use calreg_core::entropy::EntropyNotion;
use calreg_core::generators;
use calreg_core::regularity::RegularityInstance;
use calreg_core::seeding::substream;
use calreg_core::simplex::{Distribution, Kernel};

pub const BENCH_SEED: u64 = 0xbe7c;

/// A boosting instance with the four builtin weight families.
pub fn boosting_instance(n: usize, label_count: usize, eps: f64) -> RegularityInstance {
    let notions = EntropyNotion::builtins(eps / 3.0).expect("valid perturbation");
    generators::random_regularity_instance(BENCH_SEED, n, label_count, 16, eps, &notions)
        .expect("valid instance")
}

/// Kernel pair plus distribution for the divergence-identity benches.
pub fn kernel_pair(n: usize, label_count: usize) -> (Kernel, Kernel, Distribution) {
    let mut rng = substream(BENCH_SEED, "bench-kernels");
    let a = generators::random_kernel(n, label_count, &mut rng).expect("kernel");
    let b = generators::random_kernel(n, label_count, &mut rng).expect("kernel");
    let mu = generators::random_distribution(n, &mut rng).expect("distribution");
    (a, b, mu)
}
