//! Elementary local indicators `Psi(z) = max_j m_j log |z . conj(v_j)|` for a
//! basis `{v_j}` of C^n and nonnegative weights `m_j`, together with their
//! point mass, orthonormalization, and the combinatorial support structure
//! used to compare two indicators.

use crate::extreal::ExtReal;
use crate::linalg;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for the structural nonzero test on basis inner
/// products: an entry counts as nonzero when
/// `|v_k . conj(v'_l)| > tol * ||v_k|| * ||v'_l||`.
pub const RELATION_TOL: f64 = 1e-10;

/// Growth slack for the boundedness flag of [`estimate_offset`]: per-radius
/// maxima may exceed the first-radius maximum by at most this much before the
/// difference is declared unbounded. An unbounded pair grows by
/// `log 10 ~ 2.3` per radius decade, a bounded one converges.
pub const OFFSET_SLACK: f64 = 1.0;

#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis vector {index} is zero or nearly zero")]
    ZeroBasisVector { index: usize },
    #[error("basis vector {index} contains a non-finite component")]
    NonFiniteBasis { index: usize },
    #[error("weights must be nonnegative, got {value} at {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("basis is numerically dependent (relative determinant {rel_det:.3e})")]
    DependentBasis { rel_det: f64 },
    #[error("Gram-Schmidt pivot below tolerance at step {step}")]
    GramSchmidtBreakdown { step: usize },
    #[error("indicator bases must be orthonormal for this operation")]
    NotOrthonormal,
    #[error("support relation column {column} has no nonzero entry")]
    EmptyRelationColumn { column: usize },
    #[error("relation does not connect index 0 to index 0")]
    MissingLeadingRelation,
    #[error("relation submatrix is numerically singular (relative determinant {rel_det:.3e})")]
    SingularRelation { rel_det: f64 },
    #[error("no perfect matching on the relation pattern; a structurally nonzero entry was likely misclassified by the tolerance")]
    NoMatching,
    #[error("radii must be strictly decreasing and positive")]
    BadRadii,
}

/// Basis vectors `v_j` (rows) and weights `m_j` defining
/// `Psi(z) = max_j m_j log |z . conj(v_j)|`.
///
/// JSON form: `{"basis": [[[re,im],...],...], "weights": [...]}`.
/// Deserialization runs the full constructor validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IndicatorRepr")]
pub struct ElementaryIndicator {
    pub basis: Vec<Vec<Complex64>>,
    pub weights: Vec<f64>,
}

#[derive(Deserialize)]
struct IndicatorRepr {
    basis: Vec<Vec<Complex64>>,
    weights: Vec<f64>,
}

impl TryFrom<IndicatorRepr> for ElementaryIndicator {
    type Error = IndicatorError;

    fn try_from(repr: IndicatorRepr) -> Result<Self, Self::Error> {
        ElementaryIndicator::new(repr.basis, repr.weights)
    }
}

/// Monge-Ampere point mass at the origin; the product of the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassValue {
    pub tau: f64,
}

/// Result of [`ElementaryIndicator::orthonormalize`]: the orthonormalized
/// indicator plus the weight-sorting permutation that was applied first
/// (`permutation[k]` is the original index of the k-th sorted vector).
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    pub indicator: ElementaryIndicator,
    pub permutation: Vec<usize>,
}

impl ElementaryIndicator {
    pub fn new(basis: Vec<Vec<Complex64>>, weights: Vec<f64>) -> Result<Self, IndicatorError> {
        let n = basis.len();
        if n == 0 || weights.len() != n {
            return Err(IndicatorError::DimensionMismatch {
                expected: n.max(1),
                got: weights.len(),
            });
        }
        for (index, v) in basis.iter().enumerate() {
            if v.len() != n {
                return Err(IndicatorError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(IndicatorError::NonFiniteBasis { index });
            }
            if linalg::norm(v) < 1e-300 {
                return Err(IndicatorError::ZeroBasisVector { index });
            }
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(IndicatorError::NegativeWeight { index, value });
            }
        }
        let scale = linalg::row_norm_product(&basis);
        let rel_det = linalg::det(&basis).norm() / scale;
        if !(rel_det > RELATION_TOL) {
            return Err(IndicatorError::DependentBasis { rel_det });
        }
        Ok(ElementaryIndicator { basis, weights })
    }

    /// Indicator on the standard basis of C^n.
    pub fn standard(weights: Vec<f64>) -> Result<Self, IndicatorError> {
        let n = weights.len();
        let basis = (0..n)
            .map(|j| {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[j] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();
        ElementaryIndicator::new(basis, weights)
    }

    /// `max_l log |z_l|`: the single-pole indicator with unit weights.
    pub fn unit(n: usize) -> Self {
        ElementaryIndicator::standard(vec![1.0; n]).expect("standard basis is a basis")
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `max_j m_j log |z . conj(v_j)|` with the convention `0 * inf = 0`.
    ///
    /// A zero-weight term contributes `0` while its inner product is nonzero
    /// (`0 * finite`), and drops out of the max when the inner product
    /// vanishes (`0 * -inf` does not create a value). The result is `-inf`
    /// exactly when every contributing term is a positive-weight term with a
    /// vanishing inner product. If every term drops (all weights zero at
    /// `z = 0`) the value is `0`, matching the identically-zero indicator.
    pub fn eval(&self, z: &[Complex64]) -> Result<ExtReal, IndicatorError> {
        if z.len() != self.dim() {
            return Err(IndicatorError::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        let mut acc: Option<ExtReal> = None;
        for (v, &m) in self.basis.iter().zip(&self.weights) {
            let r = linalg::inner(z, v).norm();
            let term = if m == 0.0 {
                if r == 0.0 {
                    continue;
                }
                ExtReal::Finite(0.0)
            } else if r == 0.0 {
                ExtReal::NegInf
            } else {
                ExtReal::Finite(m * r.ln())
            };
            acc = Some(match acc {
                None => term,
                Some(prev) => prev.max(term),
            });
        }
        Ok(acc.unwrap_or(ExtReal::Finite(0.0)))
    }

    /// Mass `tau = prod_j m_j`, multiplied in ascending weight order so the
    /// result is bit-identical across weight permutations of the same data.
    pub fn mass(&self) -> MassValue {
        let mut sorted = self.weights.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN weights"));
        MassValue {
            tau: sorted.iter().product(),
        }
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let n = self.dim();
        for k in 0..n {
            for l in 0..n {
                let g = linalg::inner(&self.basis[k], &self.basis[l]);
                let target = if k == l { 1.0 } else { 0.0 };
                if (g.norm() - target).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the basis by an orthonormal one with the same nested spans,
    /// keeping the weights (sorted ascending first, as the span-nesting
    /// argument requires). The difference between the two indicators is then
    /// bounded near the origin; [`estimate_offset`] certifies it by sampling.
    pub fn orthonormalize(&self) -> Result<Orthonormalized, IndicatorError> {
        let n = self.dim();
        let mut permutation: Vec<usize> = (0..n).collect();
        permutation.sort_by(|&a, &b| {
            self.weights[a]
                .partial_cmp(&self.weights[b])
                .expect("non-NaN weights")
        });
        let weights: Vec<f64> = permutation.iter().map(|&j| self.weights[j]).collect();
        let mut tilde: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        for (step, &j) in permutation.iter().enumerate() {
            let mut w = self.basis[j].clone();
            let original = linalg::norm(&w);
            for prev in &tilde {
                let c = linalg::inner(&w, prev);
                linalg::axpy(&mut w, -c, prev);
            }
            // Second pass stabilizes nearly dependent inputs.
            for prev in &tilde {
                let c = linalg::inner(&w, prev);
                linalg::axpy(&mut w, -c, prev);
            }
            let len = linalg::norm(&w);
            if len <= 1e-10 * original {
                return Err(IndicatorError::GramSchmidtBreakdown { step });
            }
            tilde.push(linalg::scale(&w, Complex64::new(1.0 / len, 0.0)));
        }
        Ok(Orthonormalized {
            indicator: ElementaryIndicator::new(tilde, weights)?,
            permutation,
        })
    }
}

/// Boolean support pattern between two orthonormal bases: entry `(k, l)` is
/// true when `v_k . conj(v'_l)` is nonzero above the relative tolerance. The
/// raw inner products are kept for the numerical nonsingularity check in
/// [`find_bijection`].
#[derive(Debug, Clone)]
pub struct SupportRelation {
    pub matrix: Vec<Vec<bool>>,
    pub gram: Vec<Vec<Complex64>>,
}

impl SupportRelation {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn relates(&self, k: usize, l: usize) -> bool {
        self.matrix[k][l]
    }
}

/// Computes the support relation between two orthonormalized indicators.
/// Every column must have a nonzero entry (a column of exact zeros would mean
/// `v'_l` is orthogonal to a full basis, impossible for true bases), else the
/// data is rejected as a tolerance misclassification.
pub fn support_relation(
    psi: &ElementaryIndicator,
    psi2: &ElementaryIndicator,
    tol: f64,
) -> Result<SupportRelation, IndicatorError> {
    let n = psi.dim();
    if psi2.dim() != n {
        return Err(IndicatorError::DimensionMismatch {
            expected: n,
            got: psi2.dim(),
        });
    }
    if !psi.is_orthonormal(1e-8) || !psi2.is_orthonormal(1e-8) {
        return Err(IndicatorError::NotOrthonormal);
    }
    let gram: Vec<Vec<Complex64>> = psi
        .basis
        .iter()
        .map(|vk| psi2.basis.iter().map(|vl| linalg::inner(vk, vl)).collect())
        .collect();
    let matrix: Vec<Vec<bool>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| {
                    let scale = linalg::norm(&psi.basis[k]) * linalg::norm(&psi2.basis[l]);
                    gram[k][l].norm() > tol * scale
                })
                .collect()
        })
        .collect();
    for l in 0..n {
        if !(0..n).any(|k| matrix[k][l]) {
            return Err(IndicatorError::EmptyRelationColumn { column: l });
        }
    }
    Ok(SupportRelation { matrix, gram })
}

/// Finds a bijection `sigma` of the index range `1..n` (0-based; the leading
/// index 0 is pinned by the caller's renumbering, which must make `(0,0)`
/// related) such that `sigma(l)` relates to `l` for every column. Returns
/// `sigma` as a vector where entry `i` is the row matched to column `i + 1`.
///
/// Existence is guaranteed when the trailing submatrix of inner products is
/// nonsingular; that hypothesis is checked numerically here. Any perfect
/// matching on the nonzero pattern is acceptable, so the search is a plain
/// augmenting-path matching on the boolean submatrix.
pub fn find_bijection(rel: &SupportRelation) -> Result<Vec<usize>, IndicatorError> {
    let n = rel.dim();
    if n == 0 || !rel.matrix[0][0] {
        return Err(IndicatorError::MissingLeadingRelation);
    }
    if n == 1 {
        return Ok(Vec::new());
    }
    let m = n - 1;
    let sub: Vec<Vec<Complex64>> = (1..n)
        .map(|k| (1..n).map(|l| rel.gram[k][l]).collect())
        .collect();
    let scale = linalg::row_norm_product(&sub).max(1e-300);
    let rel_det = linalg::det(&sub).norm() / scale;
    if !(rel_det > 1e-12) {
        return Err(IndicatorError::SingularRelation { rel_det });
    }
    // Kuhn's augmenting-path matching, columns in fixed order.
    let mut match_of_row: Vec<Option<usize>> = vec![None; m];
    fn augment(
        col: usize,
        rel: &SupportRelation,
        match_of_row: &mut Vec<Option<usize>>,
        visited: &mut Vec<bool>,
    ) -> bool {
        let m = match_of_row.len();
        for row in 0..m {
            if rel.matrix[row + 1][col + 1] && !visited[row] {
                visited[row] = true;
                let free = match match_of_row[row] {
                    None => true,
                    Some(prev_col) => augment(prev_col, rel, match_of_row, visited),
                };
                if free {
                    match_of_row[row] = Some(col);
                    return true;
                }
            }
        }
        false
    }
    for col in 0..m {
        let mut visited = vec![false; m];
        if !augment(col, rel, &mut match_of_row, &mut visited) {
            return Err(IndicatorError::NoMatching);
        }
    }
    let mut sigma = vec![0usize; m];
    for (row, col) in match_of_row.iter().enumerate() {
        let col = col.expect("perfect matching assigns every row");
        sigma[col] = row + 1;
    }
    Ok(sigma)
}

/// One failed weight comparison: indices are 0-based into the respective
/// bases, and `weight < other_weight` despite the support relation.
#[derive(Debug, Clone, Serialize)]
pub struct WeightViolation {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
    pub other_weight: f64,
}

/// Report of the weight-domination check `m_k >= m'_l` for related pairs.
#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub violations: Vec<WeightViolation>,
}

impl DominationReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies `m_k >= m'_l` for every related pair `(k, l)`, as must hold
/// whenever `psi <= psi2 + C` near the origin (the caller asserts that
/// comparison; [`estimate_offset`] checks it by sampling).
pub fn check_weight_domination(
    psi: &ElementaryIndicator,
    psi2: &ElementaryIndicator,
    tol: f64,
) -> Result<DominationReport, IndicatorError> {
    let rel = support_relation(psi, psi2, tol)?;
    let mut violations = Vec::new();
    for k in 0..psi.dim() {
        for l in 0..psi2.dim() {
            if rel.relates(k, l) && psi.weights[k] < psi2.weights[l] {
                violations.push(WeightViolation {
                    row: k,
                    col: l,
                    weight: psi.weights[k],
                    other_weight: psi2.weights[l],
                });
            }
        }
    }
    Ok(DominationReport { violations })
}

/// Sampling estimate of `sup (psi - psi2)^+` on shrinking annuli.
#[derive(Debug, Clone, Serialize)]
pub struct OffsetEstimate {
    /// True when per-radius maxima stay within [`OFFSET_SLACK`] of the
    /// first-radius maximum all the way down.
    pub bounded: bool,
    /// Max over all samples of `(psi - psi2)^+`. Only a sampling estimate,
    /// not a certified supremum.
    pub c_hat: f64,
    pub per_radius_max: Vec<f64>,
}

/// Samples `psi - psi2` on annuli `max_i |z_i| = r` for each radius and flags
/// whether the positive part stays bounded as the radius shrinks.
///
/// Sampling is exponent-based: moduli are `r^{e_i}` with exponents drawn from
/// `[1, 3]` and renormalized so the largest coordinate sits on the annulus.
/// Unbounded differences between elementary indicators open up along such
/// anisotropic cones, where uniform sphere sampling would essentially never
/// land.
pub fn estimate_offset(
    psi: &ElementaryIndicator,
    psi2: &ElementaryIndicator,
    radii: &[f64],
    samples_per_radius: usize,
    seed: u64,
) -> Result<OffsetEstimate, IndicatorError> {
    let n = psi.dim();
    if psi2.dim() != n {
        return Err(IndicatorError::DimensionMismatch {
            expected: n,
            got: psi2.dim(),
        });
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) || radii[0] <= 0.0 {
        return Err(IndicatorError::BadRadii);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_radius_max = Vec::with_capacity(radii.len());
    let mut c_hat: f64 = 0.0;
    let mut saw_infinite = false;
    for &r in radii {
        let mut radius_max: f64 = 0.0;
        for _ in 0..samples_per_radius {
            let mut exps: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..3.0)).collect();
            let min = exps.iter().cloned().fold(f64::INFINITY, f64::min);
            for e in &mut exps {
                *e += 1.0 - min;
            }
            let z: Vec<Complex64> = exps
                .iter()
                .map(|&e| {
                    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                    Complex64::from_polar(r.powf(e), theta)
                })
                .collect();
            let a = psi.eval(&z)?;
            let b = psi2.eval(&z)?;
            let diff = match (a, b) {
                (ExtReal::NegInf, _) => 0.0,
                (ExtReal::Finite(_), ExtReal::NegInf) => {
                    saw_infinite = true;
                    f64::INFINITY
                }
                (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).max(0.0),
            };
            radius_max = radius_max.max(diff);
        }
        c_hat = c_hat.max(radius_max);
        per_radius_max.push(radius_max);
    }
    let baseline = per_radius_max[0];
    let bounded =
        !saw_infinite && per_radius_max.iter().all(|&m| m <= baseline + OFFSET_SLACK);
    Ok(OffsetEstimate {
        bounded,
        c_hat,
        per_radius_max,
    })
}
