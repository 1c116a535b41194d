//! Finite-domain probability primitives: the probability simplex over a label
//! space, distributions over a finite point set, tables of simplex vectors
//! (kernels) and of bounded signal vectors (vector fields), weighted inner
//! products, and exact/approximate softmax.

use crate::error::{Error, Result};

/// Sums are accepted as exact within this tolerance.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Sums off by at most this much are silently renormalized; anything worse is
/// rejected as a data error rather than float drift.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// Number of labels; the simplex lives in `[0,1]^L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSpace(usize);

impl LabelSpace {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("label space must have at least one label".into()));
        }
        Ok(LabelSpace(count))
    }

    pub fn count(&self) -> usize {
        self.0
    }
}

/// An ordered finite set of points. Algorithms only ever use the index of a
/// point; optional bitstring ids are carried for instance constructions that
/// need them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteDomain {
    names: Vec<String>,
    bit_len: Option<usize>,
}

impl FiniteDomain {
    /// Domain of `n` anonymous points `p0..p{n-1}`.
    pub fn indexed(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("domain must contain at least one point".into()));
        }
        Ok(FiniteDomain {
            names: (0..n).map(|i| format!("p{i}")).collect(),
            bit_len: None,
        })
    }

    /// Domain whose points are named by bitstrings of a common length.
    pub fn from_bitstrings(bits: Vec<String>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Domain("domain must contain at least one point".into()));
        }
        let len = bits[0].len();
        for b in &bits {
            if b.len() != len || !b.bytes().all(|c| c == b'0' || c == b'1') {
                return Err(Error::Domain(format!("not a bitstring of length {len}: {b:?}")));
            }
        }
        let mut sorted: Vec<&String> = bits.iter().collect();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != bits.len() {
            return Err(Error::Domain("domain points must be pairwise distinct".into()));
        }
        Ok(FiniteDomain { names: bits, bit_len: Some(len) })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn bit_len(&self) -> Option<usize> {
        self.bit_len
    }
}

/// A probability distribution over the points of a finite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("distribution over an empty domain".into()));
        }
        let mut weights = weights;
        for w in &mut weights {
            if !w.is_finite() {
                return Err(Error::NonFinite("distribution weight".into()));
            }
            if *w < 0.0 {
                if *w > -SUM_TOLERANCE {
                    *w = 0.0;
                } else {
                    return Err(Error::Domain(format!("negative weight {w}")));
                }
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            if (sum - 1.0).abs() <= RENORMALIZE_TOLERANCE {
                for w in &mut weights {
                    *w /= sum;
                }
            } else {
                return Err(Error::Domain(format!("weights sum to {sum}, not 1")));
            }
        }
        Ok(Distribution { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("distribution over an empty domain".into()));
        }
        Ok(Distribution { weights: vec![1.0 / n as f64; n] })
    }

    pub fn point_mass(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::Domain(format!("point {index} outside domain of size {n}")));
        }
        let mut weights = vec![0.0; n];
        weights[index] = 1.0;
        Ok(Distribution { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A point of the probability simplex: nonnegative coordinates summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector {
    coords: Vec<f64>,
}

impl SimplexVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Domain("simplex vector must be non-empty".into()));
        }
        let mut coords = coords;
        for c in &mut coords {
            if !c.is_finite() {
                return Err(Error::NonFinite("simplex coordinate".into()));
            }
            if *c < 0.0 {
                if *c > -SUM_TOLERANCE {
                    *c = 0.0;
                } else {
                    return Err(Error::Domain(format!("negative coordinate {c}")));
                }
            }
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            if (sum - 1.0).abs() <= RENORMALIZE_TOLERANCE {
                for c in &mut coords {
                    *c /= sum;
                }
            } else {
                return Err(Error::Domain(format!("coordinates sum to {sum}, not 1")));
            }
        }
        Ok(SimplexVector { coords })
    }

    pub fn uniform(label_count: usize) -> Result<Self> {
        if label_count == 0 {
            return Err(Error::Domain("empty label space".into()));
        }
        Ok(SimplexVector { coords: vec![1.0 / label_count as f64; label_count] })
    }

    /// The point mass on one label.
    pub fn vertex(label_count: usize, label: usize) -> Result<Self> {
        if label >= label_count {
            return Err(Error::Domain(format!("label {label} outside [{label_count}]")));
        }
        let mut coords = vec![0.0; label_count];
        coords[label] = 1.0;
        Ok(SimplexVector { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coord(&self, label: usize) -> f64 {
        self.coords[label]
    }

    /// Smallest index among the largest coordinates.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.coords.iter().enumerate().skip(1) {
            if c > self.coords[best] {
                best = i;
            }
        }
        best
    }
}

/// A table assigning a simplex vector to every domain point.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: Vec<SimplexVector>,
}

impl Kernel {
    pub fn new(rows: Vec<SimplexVector>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain("kernel over an empty domain".into()));
        }
        let l = rows[0].len();
        if rows.iter().any(|r| r.len() != l) {
            return Err(Error::Shape("kernel rows disagree on label count".into()));
        }
        Ok(Kernel { rows })
    }

    /// The same simplex vector at every point.
    pub fn constant(n: usize, value: SimplexVector) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("kernel over an empty domain".into()));
        }
        Ok(Kernel { rows: vec![value; n] })
    }

    pub fn uniform(n: usize, label_count: usize) -> Result<Self> {
        Self::constant(n, SimplexVector::uniform(label_count)?)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn label_count(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, index: usize) -> &SimplexVector {
        &self.rows[index]
    }

    pub fn rows(&self) -> &[SimplexVector] {
        &self.rows
    }

    /// Pointwise difference `self - other` as an unclamped vector field.
    pub fn minus(&self, other: &Kernel) -> Result<VectorField> {
        if self.len() != other.len() || self.label_count() != other.label_count() {
            return Err(Error::Shape("kernel difference on mismatched tables".into()));
        }
        let values = self
            .rows
            .iter()
            .zip(other.rows.iter())
            .map(|(a, b)| {
                a.coords()
                    .iter()
                    .zip(b.coords().iter())
                    .map(|(x, y)| x - y)
                    .collect()
            })
            .collect();
        VectorField::new(values, false)
    }
}

/// A table assigning a real vector to every domain point. Distinguishers are
/// clamped to `[-1,1]` per coordinate; dual iterates are not.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    values: Vec<Vec<f64>>,
    clamped: bool,
}

impl VectorField {
    pub fn new(values: Vec<Vec<f64>>, clamped: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("vector field over an empty domain".into()));
        }
        let l = values[0].len();
        if l == 0 {
            return Err(Error::Domain("vector field with empty rows".into()));
        }
        for row in &values {
            if row.len() != l {
                return Err(Error::Shape("vector field rows disagree on label count".into()));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::NonFinite("vector field entry".into()));
                }
                if clamped && !(-1.0..=1.0).contains(&v) {
                    return Err(Error::Domain(format!("entry {v} outside [-1,1] in clamped field")));
                }
            }
        }
        Ok(VectorField { values, clamped })
    }

    pub fn zero(n: usize, label_count: usize) -> Result<Self> {
        Self::new(vec![vec![0.0; label_count]; n], true)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label_count(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_clamped(&self) -> bool {
        self.clamped
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.values[index]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Pointwise negation. Preserves the clamp flag.
    pub fn negated(&self) -> VectorField {
        VectorField {
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| -v).collect())
                .collect(),
            clamped: self.clamped,
        }
    }

    /// Pointwise `self - step * signal`, returned unclamped.
    pub fn step_sub(&self, signal: &VectorField, step: f64) -> Result<VectorField> {
        if self.len() != signal.len() || self.label_count() != signal.label_count() {
            return Err(Error::Shape("field update on mismatched tables".into()));
        }
        let values = self
            .values
            .iter()
            .zip(signal.values.iter())
            .map(|(h, f)| h.iter().zip(f.iter()).map(|(a, b)| a - step * b).collect())
            .collect();
        VectorField::new(values, false)
    }
}

/// Per-point rows of either a kernel or a vector field, for operations that
/// accept both.
pub trait PointTable {
    fn point_count(&self) -> usize;
    fn label_count(&self) -> usize;
    fn point_row(&self, index: usize) -> &[f64];
}

impl PointTable for Kernel {
    fn point_count(&self) -> usize {
        self.len()
    }
    fn label_count(&self) -> usize {
        self.label_count()
    }
    fn point_row(&self, index: usize) -> &[f64] {
        self.rows[index].coords()
    }
}

impl PointTable for VectorField {
    fn point_count(&self) -> usize {
        self.len()
    }
    fn label_count(&self) -> usize {
        self.label_count()
    }
    fn point_row(&self, index: usize) -> &[f64] {
        &self.values[index]
    }
}

/// Distribution-weighted inner product of two tables:
/// the mean over points of the per-point coordinate dot product.
pub fn mu_inner_product<A: PointTable + ?Sized, B: PointTable + ?Sized>(
    mu: &Distribution,
    a: &A,
    b: &B,
) -> Result<f64> {
    if a.point_count() != b.point_count() || a.point_count() != mu.len() {
        return Err(Error::Shape(format!(
            "inner product over mismatched domains: {} vs {} vs mu {}",
            a.point_count(),
            b.point_count(),
            mu.len()
        )));
    }
    if a.label_count() != b.label_count() {
        return Err(Error::Shape(format!(
            "inner product over mismatched label counts: {} vs {}",
            a.label_count(),
            b.label_count()
        )));
    }
    let mut total = 0.0;
    for i in 0..mu.len() {
        let w = mu.weight(i);
        if w == 0.0 {
            continue;
        }
        let (ra, rb) = (a.point_row(i), b.point_row(i));
        let mut dot = 0.0;
        for (x, y) in ra.iter().zip(rb.iter()) {
            dot += x * y;
        }
        total += w * dot;
    }
    Ok(total)
}

/// Numerically stabilized softmax: subtracts the maximum before exponentiating.
pub fn softmax(h: &[f64]) -> Result<SimplexVector> {
    if h.is_empty() {
        return Err(Error::Domain("softmax of an empty vector".into()));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax input".into()));
    }
    let max = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = h.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    SimplexVector::new(exps.iter().map(|e| e / sum).collect())
}

/// Log-sum-exp with max subtraction.
pub fn log_sum_exp(h: &[f64]) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::Domain("log-sum-exp of an empty vector".into()));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log-sum-exp input".into()));
    }
    let max = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = h.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Binary fixed-point grid with a fixed number of fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointFormat {
    frac_bits: u32,
}

impl FixedPointFormat {
    pub fn new(frac_bits: u32) -> Self {
        FixedPointFormat { frac_bits: frac_bits.min(52) }
    }

    /// The format whose rounding keeps a length-`label_count` simplex vector
    /// within l1 distance `budget` of the exact value: `ceil(log2(8 L / budget))`
    /// fractional bits.
    pub fn for_l1_budget(label_count: usize, budget: f64) -> Result<Self> {
        if !(budget > 0.0) || !budget.is_finite() {
            return Err(Error::Domain(format!("invalid rounding budget {budget}")));
        }
        let bits = (8.0 * label_count as f64 / budget).log2().ceil();
        Ok(Self::new(bits.max(1.0) as u32))
    }

    /// The format whose per-coordinate rounding error is at most `accuracy / 4`.
    pub fn for_coordinate_accuracy(accuracy: f64) -> Result<Self> {
        if !(accuracy > 0.0) || !accuracy.is_finite() {
            return Err(Error::Domain(format!("invalid accuracy {accuracy}")));
        }
        let bits = (8.0 / accuracy).log2().ceil();
        Ok(Self::new(bits.max(1.0) as u32))
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    /// Grid spacing `2^{-frac_bits}`.
    pub fn grid(&self) -> f64 {
        (self.frac_bits as f64 * -(2f64.ln())).exp()
    }

    pub fn round(&self, x: f64) -> f64 {
        let scale = (1u64 << self.frac_bits) as f64;
        (x * scale).round() / scale
    }

    /// Round every coordinate to the grid, then restore an exact unit sum by
    /// adding the residual to the largest coordinate. The residual is itself a
    /// grid multiple, so all coordinates stay on the grid.
    pub fn round_simplex(&self, v: &SimplexVector) -> Result<SimplexVector> {
        let mut coords: Vec<f64> = v.coords().iter().map(|&c| self.round(c)).collect();
        let sum: f64 = coords.iter().sum();
        let residual = 1.0 - sum;
        let mut largest = 0;
        for (i, &c) in coords.iter().enumerate().skip(1) {
            if c > coords[largest] {
                largest = i;
            }
        }
        coords[largest] += residual;
        if coords[largest] < 0.0 {
            // Degenerate grid for this label count; fall back to exact
            // renormalization of the nonnegative rounded values.
            coords[largest] -= residual;
            let s: f64 = coords.iter().sum();
            if s <= 0.0 {
                return SimplexVector::new(v.coords().to_vec());
            }
            for c in &mut coords {
                *c /= s;
            }
        }
        SimplexVector::new(coords)
    }
}

/// Approximate softmax under a fixed-point output contract: for any true `q`
/// with `max_y |q_hat_y - q_y| <= eps/3`, the returned vector is within l1
/// distance `eps` of `softmax(q)`, and every coordinate lies on the
/// `ceil(log2(8 L / eps))`-fractional-bit grid.
pub fn approx_softmax(q_hat: &[f64], eps: f64, bound: f64) -> Result<SimplexVector> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    if !(bound >= 2.0) || !bound.is_finite() {
        return Err(Error::Domain(format!("bound must be at least 2, got {bound}")));
    }
    if q_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("approx_softmax input".into()));
    }
    if q_hat.iter().any(|&v| v < -bound || v > bound) {
        return Err(Error::Domain(format!("coordinate outside [-{bound}, {bound}]")));
    }
    let exact = softmax(q_hat)?;
    let format = FixedPointFormat::for_l1_budget(q_hat.len(), eps)?;
    format.round_simplex(&exact)
}

/// l1 distance between two simplex vectors of matching length.
pub fn l1_distance(u: &SimplexVector, v: &SimplexVector) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape("l1 distance on mismatched lengths".into()));
    }
    Ok(u.coords()
        .iter()
        .zip(v.coords().iter())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// l-infinity norm of a real vector.
pub fn linf_norm(h: &[f64]) -> f64 {
    h.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// l1 norm of a real vector.
pub fn l1_norm(h: &[f64]) -> f64 {
    h.iter().map(|v| v.abs()).sum()
}

/// Largest per-point l-infinity norm of a field (the norm used by the
/// mirror-descent smoothness bound).
pub fn field_linf_norm(f: &VectorField) -> f64 {
    f.rows().iter().map(|row| linf_norm(row)).fold(0.0, f64::max)
}

/// Mean over `mu` of the per-point l1 distance between two kernels.
pub fn kernel_l1_distance(mu: &Distribution, a: &Kernel, b: &Kernel) -> Result<f64> {
    if a.len() != b.len() || a.len() != mu.len() {
        return Err(Error::Shape("kernel distance on mismatched domains".into()));
    }
    let mut total = 0.0;
    for i in 0..a.len() {
        total += mu.weight(i) * l1_distance(a.row(i), b.row(i))?;
    }
    Ok(total)
}
