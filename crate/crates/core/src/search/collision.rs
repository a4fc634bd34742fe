//! Pole-collision families and the perturbation construction that turns an
//! assignment admissible for the two-points-merged limit system into one
//! admissible for the split single-pole system at a small separation `eps`.
//!
//! Given a disk with a double preimage of a merging pair, the construction
//! (1) optionally adds a polynomial perturbation along the collision
//! direction to guarantee a nonzero derivative scalar `lambda` at the double
//! point, (2) splits the double node by `n(eps)/lambda`, (3) fixes all node
//! values exactly with a cardinal interpolation correction built from
//! Blaschke factors (disk-adapted, so near-boundary nodes do not blow up the
//! sup norm the way polynomial cardinals do), and (4) rescales the argument
//! to pull the slightly inflated range back into the closed polydisk,
//! dropping any node that the rescale pushes out of the disk.

use crate::disk::{blaschke_fn, DiskError, RationalDisk, RationalFn, POLE_HIT_TOL};
use crate::indicator::{ElementaryIndicator, IndicatorError};
use crate::linalg;
use crate::polesys::{
    check_admissible, functional, AdmissibilityReport, Assignment, FunctionalValue, Pole,
    PoleSystem, PolesysError,
};
use crate::poly::Poly;
use crate::search::minkowski_polydisk;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower bound on the derivative scalar at a split double point; below it
/// the requested `eta` is too small to control the node separation.
const LAMBDA_TOL: f64 = 1e-8;

/// Interior margin for retained nodes after the rescale.
const NODE_MARGIN: f64 = 1e-9;

/// Node-hit tolerance for the certified split assignment. The corrected
/// disk is a single rational pair whose numerator and denominator both
/// nearly vanish at near-boundary nodes, which costs a few digits at
/// evaluation time; the construction guarantees node residuals below this.
const COLLISION_HIT_TOL: f64 = 1e-10;

/// Nodes beyond this modulus get Blaschke cardinal factors (bounded on the
/// disk); interior nodes get plain normalized linear factors, which keeps
/// their denominators out of the combined rational representation and
/// preserves evaluation accuracy at the near-boundary nodes.
const NEAR_BOUNDARY: f64 = 0.95;

#[derive(Debug, Error)]
pub enum CollisionError {
    #[error("invalid collision family: {reason}")]
    Family { reason: String },
    #[error("split system is degenerate at this eps: {source}")]
    DegenerateEps { source: PolesysError },
    #[error("base assignment unusable at pole {pole}: {reason}")]
    UnclassifiableBase { pole: usize, reason: String },
    #[error("derivative scalar {lambda:.3e} below tolerance; increase eta")]
    PerturbationTooSmall { lambda: f64 },
    #[error("interpolation nodes collide: {a} vs {b}")]
    NodeCollision { a: Complex64, b: Complex64 },
    #[error("split node {node} escapes the unit disk")]
    NodeEscapes { node: Complex64 },
    #[error("range rescale failed to retain a valid configuration")]
    CannotRescale,
    #[error("could not draw a direction transverse to all collision directions")]
    GenericDirectionFailed,
    #[error(transparent)]
    Disk(#[from] DiskError),
    #[error(transparent)]
    Polesys(#[from] PolesysError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
}

/// A pole path `eps -> base + eps * slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePath {
    pub base: Vec<Complex64>,
    pub slope: Vec<Complex64>,
}

impl AffinePath {
    pub fn at(&self, eps: Complex64) -> Vec<Complex64> {
        self.base
            .iter()
            .zip(&self.slope)
            .map(|(b, s)| b + eps * s)
            .collect()
    }
}

/// Single-pole paths plus colliding pairs with their limit directions. Only
/// two-point collisions are representable: pairs are two-element by type,
/// pair limits must coincide, and all group limits stay pairwise distinct
/// (three paths sharing a limit are rejected). Because paths are affine, the
/// normalized gap direction of each pair is constant in `eps`, so the
/// direction-convergence requirement holds exactly.
#[derive(Debug, Clone)]
pub struct CollisionFamily {
    singles: Vec<AffinePath>,
    pairs: Vec<(AffinePath, AffinePath)>,
    directions: Vec<Vec<Complex64>>,
    dim: usize,
}

impl CollisionFamily {
    pub fn new(
        singles: Vec<AffinePath>,
        pairs: Vec<(AffinePath, AffinePath)>,
    ) -> Result<Self, CollisionError> {
        let dim = singles
            .first()
            .map(|p| p.base.len())
            .or_else(|| pairs.first().map(|(p, _)| p.base.len()))
            .ok_or_else(|| CollisionError::Family {
                reason: "family is empty".into(),
            })?;
        let all_paths = singles
            .iter()
            .chain(pairs.iter().flat_map(|(a, b)| [a, b]));
        for path in all_paths {
            if path.base.len() != dim || path.slope.len() != dim {
                return Err(CollisionError::Family {
                    reason: "inconsistent dimensions".into(),
                });
            }
        }
        let mut directions = Vec::with_capacity(pairs.len());
        for (j, (first, second)) in pairs.iter().enumerate() {
            let limit_gap = linalg::norm(&linalg::sub(&second.base, &first.base));
            if limit_gap > 1e-12 {
                return Err(CollisionError::Family {
                    reason: format!("pair {j} limits do not coincide (gap {limit_gap:.3e})"),
                });
            }
            let delta = linalg::sub(&second.slope, &first.slope);
            let gap = linalg::norm(&delta);
            if gap <= 1e-12 {
                return Err(CollisionError::Family {
                    reason: format!("pair {j} has no collision direction"),
                });
            }
            directions.push(linalg::scale(&delta, Complex64::new(1.0 / gap, 0.0)));
        }
        // Limit points across groups must be distinct.
        let mut limits: Vec<&Vec<Complex64>> = singles.iter().map(|p| &p.base).collect();
        limits.extend(pairs.iter().map(|(p, _)| &p.base));
        for i in 0..limits.len() {
            for j in i + 1..limits.len() {
                if linalg::norm(&linalg::sub(limits[i], limits[j])) <= 1e-12 {
                    return Err(CollisionError::Family {
                        reason: format!("limit points {i} and {j} coincide"),
                    });
                }
            }
        }
        Ok(CollisionFamily {
            singles,
            pairs,
            directions,
            dim,
        })
    }

    /// The split configuration `{(a,0), (-a,0)} x {0, eps}` in the bidisk:
    /// two pairs, each with the second point displaced vertically by `eps`.
    pub fn vertical_split_pair(a: f64) -> Result<Self, CollisionError> {
        let zero = Complex64::new(0.0, 0.0);
        let up = vec![zero, Complex64::new(1.0, 0.0)];
        let mk = |x: f64| AffinePath {
            base: vec![Complex64::new(x, 0.0), zero],
            slope: vec![zero, zero],
        };
        let mk_moving = |x: f64| AffinePath {
            base: vec![Complex64::new(x, 0.0), zero],
            slope: up.clone(),
        };
        CollisionFamily::new(vec![], vec![(mk(a), mk_moving(a)), (mk(-a), mk_moving(-a))])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_singles(&self) -> usize {
        self.singles.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn direction(&self, pair: usize) -> &[Complex64] {
        &self.directions[pair]
    }

    /// Signed complex gap `n_j(eps)` along the limit direction, and the
    /// residual transverse to it (zero for affine paths with aligned slopes).
    pub fn gap(&self, pair: usize, eps: Complex64) -> (Complex64, f64) {
        let (first, second) = &self.pairs[pair];
        let diff = linalg::sub(&second.at(eps), &first.at(eps));
        let n = linalg::inner(&diff, &self.directions[pair]);
        let mut residual = diff;
        linalg::axpy(&mut residual, -n, &self.directions[pair]);
        (n, linalg::norm(&residual))
    }

    /// Orthogonal projection onto the complement of the collision direction.
    pub fn project_transverse(&self, pair: usize, z: &[Complex64]) -> Vec<Complex64> {
        linalg::project_complement(z, &self.directions[pair])
    }

    /// Deterministic unit vector with a nonzero transverse component against
    /// every collision direction.
    pub fn generic_direction(&self, seed: u64) -> Result<Vec<Complex64>, CollisionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            let mut v: Vec<Complex64> = (0..self.dim)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let n = linalg::norm(&v);
            if n < 1e-6 {
                continue;
            }
            for c in &mut v {
                *c /= n;
            }
            let ok = (0..self.pairs.len())
                .all(|j| linalg::norm(&self.project_transverse(j, &v)) >= 0.1);
            if ok {
                return Ok(v);
            }
        }
        Err(CollisionError::GenericDirectionFailed)
    }

    /// The split system at `eps`: every point a single pole with the unit
    /// indicator. Pole order: singles first, then pair `j` contributes its
    /// two points at indices `M + 2j` and `M + 2j + 1`. Fails when points
    /// collide (in particular at `eps = 0`).
    pub fn system_at(&self, eps: Complex64) -> Result<PoleSystem, CollisionError> {
        let mut poles = Vec::new();
        let unit = ElementaryIndicator::unit(self.dim);
        for path in &self.singles {
            poles.push(Pole {
                a: path.at(eps),
                psi: unit.clone(),
            });
        }
        for (first, second) in &self.pairs {
            poles.push(Pole {
                a: first.at(eps),
                psi: unit.clone(),
            });
            poles.push(Pole {
                a: second.at(eps),
                psi: unit.clone(),
            });
        }
        PoleSystem::new(poles).map_err(|source| CollisionError::DegenerateEps { source })
    }

    /// The limit system: unit indicators at single-path limits, and at each
    /// pair limit the anisotropic indicator `max(log ||transverse||,
    /// 2 log |z . conj(v)|)`, realized as the elementary indicator on the
    /// orthonormal basis extending `v` with weights `(1, ..., 1, 2)`.
    pub fn limit_system(&self) -> Result<PoleSystem, CollisionError> {
        let mut poles = Vec::new();
        let unit = ElementaryIndicator::unit(self.dim);
        for path in &self.singles {
            poles.push(Pole {
                a: path.base.clone(),
                psi: unit.clone(),
            });
        }
        for (j, (first, _)) in self.pairs.iter().enumerate() {
            let v = &self.directions[j];
            let mut basis = linalg::orthonormal_complement(v);
            let mut weights = vec![1.0; basis.len()];
            basis.push(v.clone());
            weights.push(2.0);
            poles.push(Pole {
                a: first.base.clone(),
                psi: ElementaryIndicator::new(basis, weights)?,
            });
        }
        Ok(PoleSystem::new(poles)?)
    }
}

/// How the base assignment meets a pair's limit pole.
#[derive(Debug, Clone)]
enum PairClass {
    Empty,
    OneSimple(Complex64),
    TwoSimple(Complex64, Complex64),
    Double(Complex64),
}

/// Construction report: the sup norm of the full interpolation correction,
/// the measured range inflation, the rescale, dropped poles, and the final
/// certified data.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub eta: Complex64,
    pub lambdas: Vec<Complex64>,
    /// Interpolation nodes of the shipped correction (the origin first,
    /// then the retained preimage nodes, pre-rescale coordinates).
    pub nodes: Vec<Complex64>,
    /// Correction values at those nodes (pole target minus the perturbed
    /// disk); zero rows mean the node needed no correction.
    pub node_values: Vec<Vec<Complex64>>,
    /// Boundary sup of the correction built over the full node set, before
    /// any rescale-forced drops.
    pub sup_p: f64,
    /// Boundary sup of the correction actually shipped (after drops).
    pub sup_p_final: f64,
    /// Max over coordinates of the boundary sup of the corrected disk,
    /// before rescaling (the range inflation factor).
    pub range_inflation: f64,
    /// Argument rescale factor applied to pull the range back in.
    pub mu: f64,
    /// Pole indices of the split system whose assignments were dropped.
    pub dropped_poles: Vec<usize>,
    pub admissibility: AdmissibilityReport,
    pub functional: FunctionalValue,
}

fn classify_base(
    base: &Assignment,
    limit: &PoleSystem,
    n_singles: usize,
) -> Result<(Vec<Option<Complex64>>, Vec<PairClass>), CollisionError> {
    let mut single_nodes = Vec::with_capacity(n_singles);
    for j in 0..n_singles {
        let set = &base.preimages[j];
        match set.len() {
            0 => single_nodes.push(None),
            1 => {
                let m = base
                    .disk
                    .multiplicity(set[0], &limit.pole(j).a, &limit.pole(j).psi, POLE_HIT_TOL)?
                    .value;
                if (m - 1.0).abs() > 1e-9 {
                    return Err(CollisionError::UnclassifiableBase {
                        pole: j,
                        reason: format!("single pole carries multiplicity {m}"),
                    });
                }
                single_nodes.push(Some(set[0]));
            }
            n => {
                return Err(CollisionError::UnclassifiableBase {
                    pole: j,
                    reason: format!("single pole with {n} preimages"),
                })
            }
        }
    }
    let mut pair_classes = Vec::new();
    for pole_idx in n_singles..limit.len() {
        let set = &base.preimages[pole_idx];
        let pole = limit.pole(pole_idx);
        let class = match set.len() {
            0 => PairClass::Empty,
            1 => {
                let m = base
                    .disk
                    .multiplicity(set[0], &pole.a, &pole.psi, POLE_HIT_TOL)?
                    .value;
                if (m - 2.0).abs() <= 1e-9 {
                    PairClass::Double(set[0])
                } else if (m - 1.0).abs() <= 1e-9 {
                    PairClass::OneSimple(set[0])
                } else {
                    return Err(CollisionError::UnclassifiableBase {
                        pole: pole_idx,
                        reason: format!("pair pole with one preimage of multiplicity {m}"),
                    });
                }
            }
            2 => PairClass::TwoSimple(set[0], set[1]),
            n => {
                return Err(CollisionError::UnclassifiableBase {
                    pole: pole_idx,
                    reason: format!("pair pole with {n} preimages"),
                })
            }
        };
        pair_classes.push(class);
    }
    Ok((single_nodes, pair_classes))
}

/// Mixed cardinal interpolation system on the given nodes.
///
/// Each node contributes the vanishing factor `(b - zeta)`; near-boundary
/// nodes divide theirs by the Blaschke denominator `(1 - zeta conj(b))` so
/// the factor stays bounded by 1 on the disk (a raw linear factor there
/// would inflate the correction's sup norm by `1/(dist to b)`). All
/// cardinals share the single common denominator of those Blaschke factors:
/// stacked copies of a near-boundary denominator would make the combined
/// rational's numerator and denominator vanish together at the node and
/// destroy evaluation accuracy exactly where the hit is certified.
struct CardinalSystem {
    nodes: Vec<Complex64>,
    den_common: Poly,
}

impl CardinalSystem {
    fn new(nodes: Vec<Complex64>) -> Result<Self, CollisionError> {
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if (nodes[i] - nodes[j]).norm() < 1e-12 {
                    return Err(CollisionError::NodeCollision {
                        a: nodes[i],
                        b: nodes[j],
                    });
                }
            }
        }
        let mut den_common = Poly::one();
        for &b in &nodes {
            if b.norm() > NEAR_BOUNDARY {
                den_common = den_common.mul(&blaschke_fn(b)?.den);
            }
        }
        Ok(CardinalSystem { nodes, den_common })
    }

    /// The cardinal attached to `nodes[at]`, as `numerator / den_common`.
    /// Returns the numerator polynomial only.
    fn cardinal_numerator(&self, at: usize) -> Result<Poly, CollisionError> {
        let own = self.nodes[at];
        let mut num = Poly::one();
        let mut normalization = Complex64::new(1.0, 0.0);
        for (j, &b) in self.nodes.iter().enumerate() {
            if j == at {
                continue;
            }
            // factor (b - zeta), divided by (1 - zeta conj(b)) when b is
            // near the boundary (that denominator lives in den_common)
            num = num.mul(&Poly::new(vec![b, Complex64::new(-1.0, 0.0)]));
            let mut value_at_own = b - own;
            if b.norm() > NEAR_BOUNDARY {
                value_at_own /= Complex64::new(1.0, 0.0) - own * b.conj();
            }
            if value_at_own.norm() < 1e-14 {
                return Err(CollisionError::NodeCollision { a: b, b: own });
            }
            normalization *= value_at_own;
        }
        // den_common contains the own node's Blaschke denominator too when
        // the own node is near the boundary; cancel it in the numerator.
        if own.norm() > NEAR_BOUNDARY {
            num = num.mul(&blaschke_fn(own)?.den);
        }
        Ok(num.scale(Complex64::new(1.0, 0.0) / normalization))
    }
}

fn boundary_sup(funs: &[RationalFn], samples: usize) -> f64 {
    let mut sup = 0.0f64;
    for k in 0..samples {
        let theta = std::f64::consts::TAU * k as f64 / samples as f64;
        let zeta = Complex64::from_polar(1.0, theta);
        let norm: f64 = funs
            .iter()
            .map(|f| f.eval(zeta).norm_sqr())
            .sum::<f64>()
            .sqrt();
        sup = sup.max(norm);
    }
    sup
}

/// Builds, from an assignment admissible for the family's limit system, a
/// disk and assignment admissible for the split system at `eps`, following
/// the perturb-split-interpolate-rescale construction. Returns the split
/// system, the certified assignment, and a construction report.
pub fn perturb_to_collision(
    base: &Assignment,
    family: &CollisionFamily,
    eps: Complex64,
    eta: Complex64,
) -> Result<(PoleSystem, Assignment, PerturbationReport), CollisionError> {
    let split = family.system_at(eps)?;
    let limit = family.limit_system()?;
    if base.preimages.len() != limit.len() {
        return Err(CollisionError::UnclassifiableBase {
            pole: 0,
            reason: format!(
                "assignment has {} preimage sets, limit system {}",
                base.preimages.len(),
                limit.len()
            ),
        });
    }
    let z = base.disk.eval(Complex64::new(0.0, 0.0));
    let m_singles = family.n_singles();
    let (single_nodes, pair_classes) = classify_base(base, &limit, m_singles)?;

    // Perturbation polynomial: vanishes at 0 and every retained base node,
    // simple at each double point, squared at the other double points,
    // directed along the collision direction of its double.
    let one = Complex64::new(1.0, 0.0);
    let mut outer = Poly::monomial(one, 1);
    for node in single_nodes.iter().flatten() {
        outer = outer.mul(&Poly::linear_factor(*node));
    }
    for class in &pair_classes {
        match class {
            PairClass::TwoSimple(a, b) => {
                outer = outer
                    .mul(&Poly::linear_factor(*a))
                    .mul(&Poly::linear_factor(*b));
            }
            PairClass::OneSimple(a) => {
                outer = outer.mul(&Poly::linear_factor(*a));
            }
            _ => {}
        }
    }
    let doubles: Vec<(usize, Complex64)> = pair_classes
        .iter()
        .enumerate()
        .filter_map(|(j, class)| match class {
            PairClass::Double(a) => Some((j, *a)),
            _ => None,
        })
        .collect();
    let mut correction = vec![Poly::zero(); family.dim()];
    for &(j, alpha) in &doubles {
        let mut scalar = Poly::linear_factor(alpha);
        for &(k, beta) in &doubles {
            if k != j {
                let f = Poly::linear_factor(beta);
                scalar = scalar.mul(&f).mul(&f);
            }
        }
        let scalar = outer.mul(&scalar).scale(eta);
        for (i, acc) in correction.iter_mut().enumerate() {
            *acc = acc.add(&scalar.scale(family.direction(j)[i]));
        }
    }
    let tilde = base.disk.add_polynomial_map(&correction)?;

    // Derivative scalars and split nodes for the doubles.
    let mut lambdas = Vec::with_capacity(doubles.len());
    let mut split_nodes = Vec::with_capacity(doubles.len());
    for &(j, alpha) in &doubles {
        let derivative = tilde.derivative_at(alpha)?;
        let lambda = linalg::inner(&derivative, family.direction(j));
        if lambda.norm() < LAMBDA_TOL {
            return Err(CollisionError::PerturbationTooSmall {
                lambda: lambda.norm(),
            });
        }
        let (n_eps, _residual) = family.gap(j, eps);
        let node = alpha + n_eps / lambda;
        if node.norm() >= 1.0 - NODE_MARGIN {
            return Err(CollisionError::NodeEscapes { node });
        }
        lambdas.push(lambda);
        split_nodes.push((j, node));
    }

    // Per split-system pole: the node it is assigned (before drops).
    let mut pole_nodes: Vec<Option<Complex64>> = vec![None; split.len()];
    for (j, node) in single_nodes.iter().enumerate() {
        pole_nodes[j] = *node;
    }
    for (jp, class) in pair_classes.iter().enumerate() {
        let first_idx = m_singles + 2 * jp;
        let second_idx = first_idx + 1;
        match class {
            PairClass::Empty => {}
            PairClass::OneSimple(a) => {
                pole_nodes[first_idx] = Some(*a);
            }
            PairClass::TwoSimple(a, b) => {
                pole_nodes[first_idx] = Some(*a);
                pole_nodes[second_idx] = Some(*b);
            }
            PairClass::Double(a) => {
                pole_nodes[first_idx] = Some(*a);
                // the split node for second_idx is filled below
                let _ = second_idx;
            }
        }
    }
    for &(j, node) in &split_nodes {
        pole_nodes[m_singles + 2 * j + 1] = Some(node);
    }

    // Iteratively build the correction, measure the inflation, rescale, and
    // drop nodes the rescale pushes out.
    let z_gauge = minkowski_polydisk(&z);
    if z_gauge >= 1.0 {
        return Err(CollisionError::CannotRescale);
    }
    let mut retained = pole_nodes.clone();
    let mut dropped_poles = Vec::new();
    let mut sup_p_full: Option<f64> = None;
    let mut last: Option<(RationalDisk, f64, f64, f64)> = None;
    let mut final_nodes = Vec::new();
    let mut final_values = Vec::new();
    for _round in 0..8 {
        let mut nodes = vec![Complex64::new(0.0, 0.0)];
        for node in retained.iter().flatten() {
            nodes.push(*node);
        }
        // Interpolation values: pole target minus the perturbed disk. All
        // cardinals share one denominator; nodes already hit to rounding
        // precision contribute nothing.
        let cardinals = CardinalSystem::new(nodes.clone())?;
        let mut correction_nums: Vec<Poly> = vec![Poly::zero(); family.dim()];
        let mut node_values =
            vec![vec![Complex64::new(0.0, 0.0); family.dim()]; nodes.len()];
        let mut node_cursor = 1usize;
        for (pole_idx, node) in retained.iter().enumerate() {
            let Some(node) = node else { continue };
            let target = &split.pole(pole_idx).a;
            let value = tilde.eval(*node);
            let w: Vec<Complex64> = target.iter().zip(&value).map(|(t, v)| t - v).collect();
            let scale = 1.0 + linalg::norm(target);
            if linalg::norm(&w) > 1e-14 * scale {
                let num = cardinals.cardinal_numerator(node_cursor)?;
                for (i, acc) in correction_nums.iter_mut().enumerate() {
                    if w[i].norm() > 1e-14 * scale {
                        *acc = acc.add(&num.scale(w[i]));
                    }
                }
                node_values[node_cursor] = w;
            }
            node_cursor += 1;
        }
        final_nodes = nodes;
        final_values = node_values;
        let correction_fns: Vec<RationalFn> = correction_nums
            .into_iter()
            .map(|num| RationalFn {
                num,
                den: cardinals.den_common.clone(),
            })
            .collect();
        let sup_p = boundary_sup(&correction_fns, 1024);
        if sup_p_full.is_none() {
            sup_p_full = Some(sup_p);
        }
        let corrected = tilde.add_rational_map(&correction_fns)?;
        let range = corrected.range_check(1.0, 1024);
        let inflation = range.max_modulus.max(1.0);
        let delta_r = (inflation - 1.0) / (1.0 - z_gauge) * (1.0 + 1e-6) + 1e-9;
        let mu = 1.0 / (1.0 + delta_r);
        // Drop only the worst escapee, then rebuild: evicting one
        // near-boundary node can shrink the correction enough to save the
        // rest.
        let worst = retained
            .iter()
            .enumerate()
            .filter_map(|(pole_idx, node)| {
                node.and_then(|n| {
                    let excess = n.norm() / mu - (1.0 - NODE_MARGIN);
                    (excess > 0.0).then_some((pole_idx, excess))
                })
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite excess"));
        match worst {
            None => {
                last = Some((corrected, sup_p, inflation, mu));
                break;
            }
            Some((pole_idx, _)) => {
                retained[pole_idx] = None;
                dropped_poles.push(pole_idx);
            }
        }
    }
    let Some((corrected, sup_p_final, range_inflation, mu)) = last else {
        return Err(CollisionError::CannotRescale);
    };

    let final_disk = corrected.rescale_arg(mu);
    let preimages: Vec<Vec<Complex64>> = retained
        .iter()
        .map(|node| node.iter().map(|&n| n / mu).collect())
        .collect();
    let assignment = Assignment::new(final_disk, preimages)?;
    let range = assignment.disk.range_check(1.0, 1024);
    if !range.ok {
        return Err(CollisionError::CannotRescale);
    }
    let admissibility = check_admissible(&split, &z, &assignment, COLLISION_HIT_TOL)?;
    let value = functional(&split, &assignment, COLLISION_HIT_TOL)?;
    Ok((
        split,
        assignment,
        PerturbationReport {
            eta,
            lambdas,
            nodes: final_nodes,
            node_values: final_values,
            sup_p: sup_p_full.unwrap_or(sup_p_final),
            sup_p_final,
            range_inflation,
            mu,
            dropped_poles,
            admissibility,
            functional: value,
        },
    ))
}
