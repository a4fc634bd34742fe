//! Pole systems, admissible disk/preimage assignments, the weighted
//! log-modulus functional, and the explicit bidisk Green formulas for the
//! two-pole configuration `{(a,0), (b,0)}` with a vertical indicator and its
//! four-point splitting.

use crate::disk::{DiskError, RationalDisk};
use crate::extreal::ExtReal;
use crate::indicator::{ElementaryIndicator, IndicatorError};
use crate::linalg;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pairwise-distinctness tolerance for pole locations. Colliding poles must
/// be modeled as a collision family, never as a degenerate system.
pub const POLE_DISTINCT_TOL: f64 = 1e-12;

/// Slack for the mass-budget comparison `sum m <= tau` (the multiplicities
/// are products of weights and small integers, so this is pure rounding
/// allowance).
pub const BUDGET_TOL: f64 = 1e-9;

/// Equality margin for the Green-vs-functional lower-bound check.
pub const GREEN_MARGIN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PolesysError {
    #[error("poles {i} and {j} coincide within tolerance")]
    DuplicatePoles { i: usize, j: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("pole {index} has a non-finite coordinate")]
    NonFinitePole { index: usize },
    #[error("system is empty")]
    EmptySystem,
    #[error("assignment carries {got} preimage sets but the system has {expected} poles")]
    PreimageSetCount { expected: usize, got: usize },
    #[error("preimage point {point} lies outside the open unit disk")]
    PreimageOutsideDisk { point: Complex64 },
    #[error(transparent)]
    Disk(#[from] DiskError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
}

/// One pole: a location in the polydisk and its local indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub a: Vec<Complex64>,
    pub psi: ElementaryIndicator,
}

/// A finite set of distinct poles with indicators; masses are cached.
///
/// JSON form: `{"poles": [{"a": [[re,im],...], "psi": {...}}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoleSystemRepr", into = "PoleSystemRepr")]
pub struct PoleSystem {
    poles: Vec<Pole>,
    taus: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoleSystemRepr {
    poles: Vec<Pole>,
}

impl TryFrom<PoleSystemRepr> for PoleSystem {
    type Error = PolesysError;

    fn try_from(repr: PoleSystemRepr) -> Result<Self, Self::Error> {
        PoleSystem::new(repr.poles)
    }
}

impl From<PoleSystem> for PoleSystemRepr {
    fn from(system: PoleSystem) -> Self {
        PoleSystemRepr {
            poles: system.poles,
        }
    }
}

impl PoleSystem {
    pub fn new(poles: Vec<Pole>) -> Result<Self, PolesysError> {
        if poles.is_empty() {
            return Err(PolesysError::EmptySystem);
        }
        let dim = poles[0].a.len();
        for (index, pole) in poles.iter().enumerate() {
            if pole.a.len() != dim || pole.psi.dim() != dim {
                return Err(PolesysError::DimensionMismatch {
                    expected: dim,
                    got: pole.a.len().min(pole.psi.dim()),
                });
            }
            if pole
                .a
                .iter()
                .any(|c| !c.re.is_finite() || !c.im.is_finite())
            {
                return Err(PolesysError::NonFinitePole { index });
            }
        }
        for i in 0..poles.len() {
            for j in i + 1..poles.len() {
                let d = linalg::norm(&linalg::sub(&poles[i].a, &poles[j].a));
                if d <= POLE_DISTINCT_TOL {
                    return Err(PolesysError::DuplicatePoles { i, j });
                }
            }
        }
        let taus = poles.iter().map(|p| p.psi.mass().tau).collect();
        Ok(PoleSystem { poles, taus })
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.poles[0].a.len()
    }

    pub fn pole(&self, j: usize) -> &Pole {
        &self.poles[j]
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn tau(&self, j: usize) -> f64 {
        self.taus[j]
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    /// The subsystem of the first `n_prime` poles.
    pub fn subsystem(&self, n_prime: usize) -> Result<PoleSystem, PolesysError> {
        PoleSystem::new(self.poles[..n_prime].to_vec())
    }
}

/// A disk together with one preimage set per pole. Preimage sets are kept in
/// lexicographic order (real part, then imaginary part) so reports and
/// serialized output are deterministic.
///
/// JSON form: `{"disk": [...], "preimages": [[[re,im],...],...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentRepr")]
pub struct Assignment {
    pub disk: RationalDisk,
    pub preimages: Vec<Vec<Complex64>>,
}

#[derive(Deserialize)]
struct AssignmentRepr {
    disk: RationalDisk,
    preimages: Vec<Vec<Complex64>>,
}

impl TryFrom<AssignmentRepr> for Assignment {
    type Error = PolesysError;

    fn try_from(repr: AssignmentRepr) -> Result<Self, Self::Error> {
        Assignment::new(repr.disk, repr.preimages)
    }
}

impl Assignment {
    pub fn new(
        disk: RationalDisk,
        mut preimages: Vec<Vec<Complex64>>,
    ) -> Result<Self, PolesysError> {
        for set in &preimages {
            for &alpha in set {
                if alpha.norm() >= 1.0 {
                    return Err(PolesysError::PreimageOutsideDisk { point: alpha });
                }
            }
        }
        for set in &mut preimages {
            set.sort_by(|&a, &b| linalg::lex_cmp(a, b));
        }
        Ok(Assignment { disk, preimages })
    }
}

/// Per-point detail inside an admissibility report.
#[derive(Debug, Clone, Serialize)]
pub struct PreimageDetail {
    pub alpha: Complex64,
    pub multiplicity: f64,
    /// `||phi(alpha) - a_j||`, the membership residual.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoleReport {
    pub pole_index: usize,
    pub details: Vec<PreimageDetail>,
    pub total_multiplicity: f64,
    pub budget: f64,
    pub membership_ok: bool,
    pub budget_ok: bool,
}

/// Result of the admissibility check: the disk must send 0 to the base
/// point, every listed preimage must actually hit its pole, and each pole's
/// total multiplicity must fit its mass budget. Empty preimage sets are
/// allowed.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub base_point_ok: bool,
    pub base_residual: f64,
    pub per_pole: Vec<PoleReport>,
    pub pass: bool,
}

pub fn check_admissible(
    system: &PoleSystem,
    z: &[Complex64],
    assignment: &Assignment,
    tol_hit: f64,
) -> Result<AdmissibilityReport, PolesysError> {
    if assignment.preimages.len() != system.len() {
        return Err(PolesysError::PreimageSetCount {
            expected: system.len(),
            got: assignment.preimages.len(),
        });
    }
    if z.len() != system.dim() {
        return Err(PolesysError::DimensionMismatch {
            expected: system.dim(),
            got: z.len(),
        });
    }
    let at_zero = assignment.disk.eval(Complex64::new(0.0, 0.0));
    let base_residual = linalg::norm(&linalg::sub(&at_zero, z));
    let base_point_ok = base_residual <= tol_hit;
    let mut per_pole = Vec::with_capacity(system.len());
    let mut pass = base_point_ok;
    for (j, set) in assignment.preimages.iter().enumerate() {
        let pole = system.pole(j);
        let mut details = Vec::with_capacity(set.len());
        let mut total = 0.0;
        let mut membership_ok = true;
        for &alpha in set {
            let value = assignment.disk.eval(alpha);
            let residual = linalg::norm(&linalg::sub(&value, &pole.a));
            if residual > tol_hit {
                membership_ok = false;
            }
            let m = assignment
                .disk
                .multiplicity(alpha, &pole.a, &pole.psi, tol_hit)?
                .value;
            total += m;
            details.push(PreimageDetail {
                alpha,
                multiplicity: m,
                residual,
            });
        }
        let budget = system.tau(j);
        let budget_ok = total <= budget + BUDGET_TOL;
        pass = pass && membership_ok && budget_ok;
        per_pole.push(PoleReport {
            pole_index: j,
            details,
            total_multiplicity: total,
            budget,
            membership_ok,
            budget_ok,
        });
    }
    Ok(AdmissibilityReport {
        base_point_ok,
        base_residual,
        per_pole,
        pass,
    })
}

/// One term of the functional: `m * log |alpha|`, with `0 * inf = 0` when
/// the multiplicity vanishes at the disk center.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalTerm {
    pub pole_index: usize,
    pub alpha: Complex64,
    pub multiplicity: f64,
    pub term: ExtReal,
}

/// Value of the weighted log-modulus functional with its breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalValue {
    pub value: ExtReal,
    pub breakdown: Vec<FunctionalTerm>,
}

/// Sums `m_{phi, a_j, Psi_j}(alpha) log |alpha|` over the assignment. A
/// preimage at the disk center with positive multiplicity legitimately
/// produces `-inf`.
pub fn functional(
    system: &PoleSystem,
    assignment: &Assignment,
    tol_hit: f64,
) -> Result<FunctionalValue, PolesysError> {
    if assignment.preimages.len() != system.len() {
        return Err(PolesysError::PreimageSetCount {
            expected: system.len(),
            got: assignment.preimages.len(),
        });
    }
    let mut value = ExtReal::Finite(0.0);
    let mut breakdown = Vec::new();
    for (j, set) in assignment.preimages.iter().enumerate() {
        let pole = system.pole(j);
        for &alpha in set {
            let m = assignment
                .disk
                .multiplicity(alpha, &pole.a, &pole.psi, tol_hit)?
                .value;
            let term = if m == 0.0 {
                ExtReal::Finite(0.0)
            } else if alpha.norm() == 0.0 {
                ExtReal::NegInf
            } else {
                ExtReal::Finite(m * alpha.norm().ln())
            };
            value = value.add(term);
            breakdown.push(FunctionalTerm {
                pole_index: j,
                alpha,
                multiplicity: m,
                term,
            });
        }
    }
    Ok(FunctionalValue { value, breakdown })
}

#[derive(Debug, Clone, Serialize)]
pub struct OldPoleReport {
    pub pole_index: usize,
    pub alpha: Complex64,
    pub multiplicity: f64,
    pub tau: f64,
    /// True when the disk hits the pole with the full mass
    /// (truncated multiplicity equals `tau`).
    pub full_mass: bool,
}

/// Result of the one-preimage-per-pole, full-mass admissibility check.
#[derive(Debug, Clone, Serialize)]
pub struct OldAdmissibilityReport {
    pub base_point_ok: bool,
    pub per_pole: Vec<OldPoleReport>,
    pub pass: bool,
}

/// Old-style admissibility: exactly one preimage point per pole, each hit
/// with full mass `tau_j`. Verified through the valuations: the truncated
/// multiplicity equals `tau_j` exactly when the untruncated one reaches it.
/// Every configuration passing this check also passes [`check_admissible`]
/// with singleton preimage sets.
pub fn check_admissible_old(
    system: &PoleSystem,
    z: &[Complex64],
    disk: &RationalDisk,
    points: &[Complex64],
    tol_hit: f64,
) -> Result<OldAdmissibilityReport, PolesysError> {
    if points.len() != system.len() {
        return Err(PolesysError::PreimageSetCount {
            expected: system.len(),
            got: points.len(),
        });
    }
    let at_zero = disk.eval(Complex64::new(0.0, 0.0));
    let base_point_ok = linalg::norm(&linalg::sub(&at_zero, z)) <= tol_hit;
    let mut per_pole = Vec::with_capacity(points.len());
    let mut pass = base_point_ok;
    for (j, &alpha) in points.iter().enumerate() {
        let pole = system.pole(j);
        let m = disk.multiplicity(alpha, &pole.a, &pole.psi, tol_hit)?.value;
        let tau = system.tau(j);
        let full_mass = (m - tau).abs() <= BUDGET_TOL;
        pass = pass && full_mass;
        per_pole.push(OldPoleReport {
            pole_index: j,
            alpha,
            multiplicity: m,
            tau,
            full_mass,
        });
    }
    Ok(OldAdmissibilityReport {
        base_point_ok,
        per_pole,
        pass,
    })
}

/// Which first factor the bidisk Green formulas use. The product-set Green
/// function of `{a, b} x {0}` evaluates both disk factors at the first
/// coordinate; `Verbatim` instead pairs the second factor with `z_2`, which
/// contradicts the known value at `(0, gamma)` and is kept only as an
/// explicitly selectable variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreenFormula {
    #[default]
    Corrected,
    Verbatim,
}

fn mobius(w: Complex64, z: Complex64) -> Complex64 {
    (w - z) / (Complex64::new(1.0, 0.0) - z * w.conj())
}

fn log_modulus(v: Complex64) -> ExtReal {
    let r = v.norm();
    if r == 0.0 {
        ExtReal::NegInf
    } else {
        ExtReal::Finite(r.ln())
    }
}

/// Green function of the limit system `{((a,0), Psi_V), ((b,0), Psi_V)}` on
/// the bidisk: `max(log |phi_a(z1) phi_b(z1)|, 2 log |z2|)`.
pub fn green_bidisk_s(
    z: [Complex64; 2],
    a: Complex64,
    b: Complex64,
    formula: GreenFormula,
) -> ExtReal {
    let first = match formula {
        GreenFormula::Corrected => mobius(a, z[0]) * mobius(b, z[0]),
        GreenFormula::Verbatim => mobius(a, z[0]) * mobius(b, z[1]),
    };
    let second = log_modulus(z[1]).add(log_modulus(z[1]));
    log_modulus(first).max(second)
}

/// Green function of the split four-pole system
/// `{a, b} x {0, eps}`: `max(log |phi_a(z1) phi_b(z1)|, log |z2 phi_eps(z2)|)`.
pub fn green_bidisk_s_eps(
    z: [Complex64; 2],
    a: Complex64,
    b: Complex64,
    eps: Complex64,
    formula: GreenFormula,
) -> ExtReal {
    let first = match formula {
        GreenFormula::Corrected => mobius(a, z[0]) * mobius(b, z[0]),
        GreenFormula::Verbatim => mobius(a, z[0]) * mobius(b, z[1]),
    };
    let second = log_modulus(z[1]).add(log_modulus(mobius(eps, z[1])));
    log_modulus(first).max(second)
}

/// The Green function never exceeds the functional of an admissible
/// assignment; a violation beyond the margin signals a bug upstream (an
/// "admissible" disk beating the Green bound is impossible).
pub fn lower_bound_check(functional_value: ExtReal, green_value: ExtReal) -> bool {
    match (green_value, functional_value) {
        (ExtReal::NegInf, _) => true,
        (ExtReal::Finite(_), ExtReal::NegInf) => false,
        (ExtReal::Finite(g), ExtReal::Finite(f)) => g <= f + GREEN_MARGIN,
    }
}

/// Report of the subset-monotonicity check: an assignment admissible for the
/// leading subsystem, extended by empty preimage sets, stays admissible for
/// the full system with the same functional value.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetMonotonicityReport {
    pub sub_pass: bool,
    pub full_pass: bool,
    pub sub_value: ExtReal,
    pub full_value: ExtReal,
    pub value_unchanged: bool,
    pub pass: bool,
}

pub fn check_subset_monotonicity(
    system: &PoleSystem,
    z: &[Complex64],
    assignment: &Assignment,
    tol_hit: f64,
) -> Result<SubsetMonotonicityReport, PolesysError> {
    let n_prime = assignment.preimages.len();
    if n_prime > system.len() {
        return Err(PolesysError::PreimageSetCount {
            expected: system.len(),
            got: n_prime,
        });
    }
    let (sub_pass, sub_value) = if n_prime == 0 {
        (true, ExtReal::Finite(0.0))
    } else {
        let sub = system.subsystem(n_prime)?;
        let report = check_admissible(&sub, z, assignment, tol_hit)?;
        (report.pass, functional(&sub, assignment, tol_hit)?.value)
    };
    let mut extended_sets = assignment.preimages.clone();
    extended_sets.resize(system.len(), Vec::new());
    let extended = Assignment {
        disk: assignment.disk.clone(),
        preimages: extended_sets,
    };
    let full_report = check_admissible(system, z, &extended, tol_hit)?;
    let full_value = functional(system, &extended, tol_hit)?.value;
    let value_unchanged = match (sub_value, full_value) {
        (ExtReal::NegInf, ExtReal::NegInf) => true,
        (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() <= 1e-12,
        _ => false,
    };
    let pass = sub_pass && full_report.pass && value_unchanged;
    Ok(SubsetMonotonicityReport {
        sub_pass,
        full_pass: full_report.pass,
        sub_value,
        full_value,
        value_unchanged,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::{blaschke_fn, RationalFn, POLE_HIT_TOL};
    use crate::poly::Poly;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn c(re_: f64, im: f64) -> Complex64 {
        Complex64::new(re_, im)
    }

    fn psi_vertical() -> ElementaryIndicator {
        ElementaryIndicator::standard(vec![1.0, 2.0]).unwrap()
    }

    /// The two-pole limit system `{((a,0), Psi_V), ((-a,0), Psi_V)}`.
    fn example_system(a: f64) -> PoleSystem {
        PoleSystem::new(vec![
            Pole {
                a: vec![re(a), re(0.0)],
                psi: psi_vertical(),
            },
            Pole {
                a: vec![re(-a), re(0.0)],
                psi: psi_vertical(),
            },
        ])
        .unwrap()
    }

    /// Direct construction of the extremal example disk; the preimage data
    /// is `A_1 = {z1, z4}` for `(a, 0)` and `A_2 = {t}` for `(-a, 0)`.
    fn example_disk(a: f64, gamma: f64) -> (RationalDisk, f64, f64, f64) {
        let t = a.sqrt();
        let s = (2.0 * a / (1.0 + a * a)).sqrt();
        let z1 = (t - s) / (1.0 - t * s);
        let z4 = (t + s) / (1.0 + t * s);
        let p = Poly::new(vec![re(t), re(-1.0)]);
        let q = Poly::new(vec![re(1.0), re(-t)]);
        let p2 = p.mul(&p);
        let q2 = q.mul(&q);
        let first = RationalFn {
            num: p2.sub(&q2.scale(re(a))),
            den: q2.sub(&p2.scale(re(a))),
        };
        let mut num = Poly::constant(re(gamma / (z1 * t * z4)));
        let mut den = Poly::one();
        for &w in &[z1, t, z4] {
            let b = blaschke_fn(re(w)).unwrap();
            num = num.mul(&b.num);
            den = den.mul(&b.den);
        }
        let second = RationalFn { num, den };
        let disk = RationalDisk::new(vec![first, second]).unwrap();
        (disk, z1, t, z4)
    }

    #[test]
    fn pole_system_rejects_duplicates() {
        let err = PoleSystem::new(vec![
            Pole {
                a: vec![re(0.3), re(0.0)],
                psi: psi_vertical(),
            },
            Pole {
                a: vec![re(0.3), re(0.0)],
                psi: ElementaryIndicator::unit(2),
            },
        ]);
        assert!(matches!(err, Err(PolesysError::DuplicatePoles { .. })));
    }

    #[test]
    fn pole_system_rejects_non_finite_locations() {
        let err = PoleSystem::new(vec![Pole {
            a: vec![c(f64::NAN, 0.0), re(0.0)],
            psi: ElementaryIndicator::unit(2),
        }]);
        assert!(matches!(err, Err(PolesysError::NonFinitePole { .. })));
    }

    #[test]
    fn empty_assignment_is_admissible_with_zero_value() {
        let a = 0.64;
        let system = example_system(a);
        let z = [re(0.0), re(0.45)];
        let disk = RationalDisk::constant(&z);
        let assignment = Assignment::new(disk, vec![Vec::new(), Vec::new()]).unwrap();
        let report = check_admissible(&system, &z, &assignment, POLE_HIT_TOL).unwrap();
        assert!(report.pass);
        let value = functional(&system, &assignment, POLE_HIT_TOL).unwrap();
        assert_eq!(value.value, ExtReal::Finite(0.0));
    }

    #[test]
    fn example_assignment_is_admissible() {
        let a = 0.64;
        let gamma = 0.45;
        let system = example_system(a);
        let z = [re(0.0), re(gamma)];
        let (disk, z1, t, z4) = example_disk(a, gamma);
        let assignment =
            Assignment::new(disk, vec![vec![re(z1), re(z4)], vec![re(t)]]).unwrap();
        let report = check_admissible(&system, &z, &assignment, POLE_HIT_TOL).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.per_pole[0].total_multiplicity, 2.0);
        assert_eq!(report.per_pole[1].per_point_multiplicities(), vec![2.0]);
        let value = functional(&system, &assignment, POLE_HIT_TOL).unwrap();
        let expected = 2.0 * a.ln();
        assert!((value.value.expect_finite() - expected).abs() < 1e-10);
    }

    impl PoleReport {
        fn per_point_multiplicities(&self) -> Vec<f64> {
            self.details.iter().map(|d| d.multiplicity).collect()
        }
    }

    #[test]
    fn budget_violation_is_reported() {
        // A disk with two double preimages of (-a, 0): total multiplicity 4
        // exceeds the budget tau = 2.
        let a = 0.64;
        let t1 = 0.5;
        let t2 = -0.5;
        let b1 = blaschke_fn(re(t1)).unwrap();
        let b2 = blaschke_fn(re(t2)).unwrap();
        let b = b1.mul(&b2);
        let n2 = b.num.mul(&b.num);
        let d2 = b.den.mul(&b.den);
        let first = RationalFn {
            num: n2.sub(&d2.scale(re(a))),
            den: d2.sub(&n2.scale(re(a))),
        };
        let second = b.scale(re(0.9));
        let disk = RationalDisk::new(vec![first, second]).unwrap();
        let z = disk.eval(c(0.0, 0.0));
        let system = PoleSystem::new(vec![Pole {
            a: vec![re(-a), re(0.0)],
            psi: psi_vertical(),
        }])
        .unwrap();
        let assignment =
            Assignment::new(disk, vec![vec![re(t1), re(t2)]]).unwrap();
        let report = check_admissible(&system, &z, &assignment, POLE_HIT_TOL).unwrap();
        assert!(!report.pass);
        assert!(!report.per_pole[0].budget_ok);
        assert_eq!(report.per_pole[0].total_multiplicity, 4.0);
        assert!(report.per_pole[0].membership_ok);
    }

    #[test]
    fn functional_simple_values() {
        let system = PoleSystem::new(vec![Pole {
            a: vec![re(0.2), re(0.0)],
            psi: ElementaryIndicator::unit(2),
        }])
        .unwrap();
        // phi(zeta) = (0.2 + 0.3 zeta, 0.4 zeta) hits the pole at alpha = 0? no:
        // phi(0.0) = (0.2, 0); take A = {0.5}: phi(0.5) = (0.35, 0.2) misses.
        // Build instead a disk through the pole at 0.5.
        let disk = RationalDisk::from_polys(vec![
            Poly::new(vec![re(0.2)]),
            Poly::new(vec![re(-0.2), re(0.4)]),
        ]);
        // phi(0.5) = (0.2, 0.0) = pole
        let assignment = Assignment::new(disk, vec![vec![re(0.5)]]).unwrap();
        let value = functional(&system, &assignment, POLE_HIT_TOL).unwrap();
        assert!((value.value.expect_finite() - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn functional_zero_multiplicity_at_center_contributes_zero() {
        // alpha = 0 with multiplicity 0: the 0 * inf convention keeps the
        // term at zero instead of -inf.
        let system = PoleSystem::new(vec![Pole {
            a: vec![re(0.3), re(0.0)],
            psi: ElementaryIndicator::unit(2),
        }])
        .unwrap();
        let disk = RationalDisk::constant(&[re(0.1), re(0.0)]);
        let assignment = Assignment {
            disk,
            preimages: vec![vec![c(0.0, 0.0)]],
        };
        let value = functional(&system, &assignment, POLE_HIT_TOL).unwrap();
        assert_eq!(value.value, ExtReal::Finite(0.0));
        assert_eq!(value.breakdown[0].multiplicity, 0.0);
    }

    #[test]
    fn functional_center_hit_is_neg_inf() {
        let system = PoleSystem::new(vec![Pole {
            a: vec![re(0.0), re(0.0)],
            psi: ElementaryIndicator::unit(2),
        }])
        .unwrap();
        let disk = RationalDisk::from_polys(vec![
            Poly::monomial(re(1.0), 1),
            Poly::monomial(re(1.0), 1),
        ]);
        let assignment = Assignment::new(disk, vec![vec![c(0.0, 0.0)]]).unwrap();
        let value = functional(&system, &assignment, POLE_HIT_TOL).unwrap();
        assert!(value.value.is_neg_inf());
    }

    #[test]
    fn old_admissibility_cases() {
        let a = 0.64;
        let gamma = 0.45;
        let system = example_system(a);
        let z = [re(0.0), re(gamma)];
        let (disk, z1, t, _z4) = example_disk(a, gamma);
        // The double point t carries full mass for pole (-a, 0)...
        let report =
            check_admissible_old(&system, &z, &disk, &[re(z1), re(t)], POLE_HIT_TOL).unwrap();
        assert!(report.per_pole[1].full_mass);
        // ...but the simple preimage z1 of (a, 0) does not: the first
        // coordinate has a simple zero there.
        assert!(!report.per_pole[0].full_mass);
        assert!(!report.pass);
    }

    #[test]
    fn old_admissible_implies_new_admissible() {
        // A disk hitting a vertical-indicator pole with a critical first
        // coordinate is old-admissible, hence admissible with A = {alpha}.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let alpha = c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
            let pole = vec![
                c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)),
                c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)),
            ];
            // first coordinate vanishes doubly at alpha, second simply
            let first = Poly::from_roots(&[alpha, alpha]).scale(re(0.3));
            let second = Poly::from_roots(&[alpha]).scale(re(0.2));
            let disk = RationalDisk::from_polys(vec![
                first.add(&Poly::constant(pole[0])),
                second.add(&Poly::constant(pole[1])),
            ]);
            let system = PoleSystem::new(vec![Pole {
                a: pole.clone(),
                psi: psi_vertical(),
            }])
            .unwrap();
            let z = disk.eval(c(0.0, 0.0));
            let old =
                check_admissible_old(&system, &z, &disk, &[alpha], POLE_HIT_TOL).unwrap();
            assert!(old.pass);
            let assignment = Assignment::new(disk, vec![vec![alpha]]).unwrap();
            let new = check_admissible(&system, &z, &assignment, POLE_HIT_TOL).unwrap();
            assert!(new.pass);
        }
    }

    #[test]
    fn green_values() {
        let a = re(0.64);
        let b = re(-0.64);
        // max(log(0.64^2), 2 log 0.45) = 2 log 0.64
        let g = green_bidisk_s([re(0.0), re(0.45)], a, b, GreenFormula::Corrected);
        assert!((g.expect_finite() - 2.0 * 0.64f64.ln()).abs() < 1e-12);
        // z1 at the pole kills the first term
        let g = green_bidisk_s([re(0.64), re(0.3)], a, b, GreenFormula::Corrected);
        assert!((g.expect_finite() - 2.0 * 0.3f64.ln()).abs() < 1e-12);
        // with both poles at the origin the value at 0 is -inf
        let g = green_bidisk_s(
            [re(0.0), re(0.0)],
            re(0.0),
            re(0.0),
            GreenFormula::Corrected,
        );
        assert!(g.is_neg_inf());
    }

    #[test]
    fn green_eps_reduces_to_limit_at_zero() {
        let a = re(0.64);
        let b = re(-0.64);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let z = [
                c(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)),
                c(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)),
            ];
            let g0 = green_bidisk_s_eps(z, a, b, re(0.0), GreenFormula::Corrected);
            let g = green_bidisk_s(z, a, b, GreenFormula::Corrected);
            match (g0.finite(), g.finite()) {
                (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12),
                (a, b) => assert_eq!(a, b),
            }
        }
        // eps split below the first term: the max stays at 2 log 0.64
        let g = green_bidisk_s_eps(
            [re(0.0), re(0.45)],
            a,
            b,
            re(0.01),
            GreenFormula::Corrected,
        );
        assert!((g.expect_finite() - 2.0 * 0.64f64.ln()).abs() < 1e-12);
        // z2 = eps kills the phi_eps factor; the first term survives
        let g = green_bidisk_s_eps(
            [re(0.2), re(0.01)],
            a,
            b,
            re(0.01),
            GreenFormula::Corrected,
        );
        let expected = (mobius(a, re(0.2)) * mobius(b, re(0.2))).norm().ln();
        assert!((g.expect_finite() - expected).abs() < 1e-12);
    }

    #[test]
    fn verbatim_formula_differs() {
        let a = re(0.64);
        let b = re(-0.64);
        let z = [re(0.0), re(0.45)];
        let corrected = green_bidisk_s(z, a, b, GreenFormula::Corrected).expect_finite();
        let verbatim = green_bidisk_s(z, a, b, GreenFormula::Verbatim).expect_finite();
        // verbatim pairs phi_b with z2 and fails to reproduce 2 log a
        assert!((corrected - 2.0 * 0.64f64.ln()).abs() < 1e-12);
        assert!((verbatim - corrected).abs() > 1e-3);
    }

    #[test]
    fn lower_bound_check_cases() {
        assert!(lower_bound_check(
            ExtReal::Finite(-0.89),
            ExtReal::Finite(-0.8925)
        ));
        assert!(lower_bound_check(ExtReal::Finite(0.0), ExtReal::Finite(-5.0)));
        assert!(!lower_bound_check(
            ExtReal::Finite(-1.5),
            ExtReal::Finite(-0.89)
        ));
        assert!(lower_bound_check(ExtReal::NegInf, ExtReal::NegInf));
        assert!(!lower_bound_check(ExtReal::NegInf, ExtReal::Finite(-1.0)));
    }

    #[test]
    fn corrupted_multiplicity_fails_lower_bound() {
        // Forcing multiplicity 3 at the double point drives the claimed
        // functional below the Green bound; the check must reject it.
        let a: f64 = 0.64;
        let t = a.sqrt();
        let z1: f64 = {
            let s = (2.0 * a / (1.0 + a * a)).sqrt();
            (t - s) / (1.0 - t * s)
        };
        let z4 = -a / z1;
        let corrupted = z1.abs().ln() + 3.0 * t.ln() + z4.abs().ln();
        let green = 2.0 * a.ln();
        assert!(!lower_bound_check(
            ExtReal::Finite(corrupted),
            ExtReal::Finite(green)
        ));
    }

    #[test]
    fn subset_monotonicity_cases() {
        let a = 0.64;
        let gamma = 0.45;
        // Order the system with (-a, 0) first so the subsystem keeps it.
        let system = PoleSystem::new(vec![
            Pole {
                a: vec![re(-a), re(0.0)],
                psi: psi_vertical(),
            },
            Pole {
                a: vec![re(a), re(0.0)],
                psi: psi_vertical(),
            },
        ])
        .unwrap();
        let z = [re(0.0), re(gamma)];
        let (disk, _z1, t, _z4) = example_disk(a, gamma);
        // N' = 1: only the double point at t for (-a, 0)
        let restricted = Assignment::new(disk.clone(), vec![vec![re(t)]]).unwrap();
        let report = check_subset_monotonicity(&system, &z, &restricted, POLE_HIT_TOL).unwrap();
        assert!(report.pass, "{report:?}");
        assert!((report.sub_value.expect_finite() - 2.0 * 0.8f64.ln()).abs() < 1e-12);
        // N' = 0: empty assignment
        let empty = Assignment::new(disk.clone(), Vec::new()).unwrap();
        let report = check_subset_monotonicity(&system, &z, &empty, POLE_HIT_TOL).unwrap();
        assert!(report.pass);
        assert_eq!(report.full_value, ExtReal::Finite(0.0));
        // N' = N: identity
        let t_pt = re(t);
        let (disk2, z1, _, z4) = example_disk(a, gamma);
        let full = Assignment::new(disk2, vec![vec![t_pt], vec![re(z1), re(z4)]]).unwrap();
        let report = check_subset_monotonicity(&system, &z, &full, POLE_HIT_TOL).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn green_satisfies_submean_inequality_on_slices() {
        // Plurisubharmonicity along random complex lines: the value at the
        // center of a circle is at most the circle average.
        let a = re(0.64);
        let b = re(-0.64);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut tested = 0;
        while tested < 100 {
            let p = [
                c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)),
                c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)),
            ];
            let q = [
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            let qn = q[0].norm().max(q[1].norm());
            if qn < 1e-3 {
                continue;
            }
            let rho = rng.gen_range(0.01..0.3) * (1.0 - 0.5) / qn;
            let center = green_bidisk_s(p, a, b, GreenFormula::Corrected);
            let Some(center) = center.finite() else {
                continue;
            };
            const M: usize = 256;
            let mut mean = 0.0;
            let mut skip = false;
            for k in 0..M {
                let theta = std::f64::consts::TAU * k as f64 / M as f64;
                let zeta = Complex64::from_polar(rho, theta);
                let point = [p[0] + zeta * q[0], p[1] + zeta * q[1]];
                match green_bidisk_s(point, a, b, GreenFormula::Corrected).finite() {
                    Some(v) => mean += v,
                    None => {
                        skip = true;
                        break;
                    }
                }
            }
            if skip {
                continue;
            }
            mean /= M as f64;
            let tol = 1e-6 * (1.0 + center.abs());
            assert!(
                center <= mean + tol,
                "submean violated: center {center}, mean {mean}"
            );
            tested += 1;
        }
    }
}
