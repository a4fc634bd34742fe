//! Explicit extremal disks for the two-pole bidisk system
//! `{((a,0), Psi_V), ((-a,0), Psi_V)}` at the base point `(0, gamma)`,
//! where `Psi_V(z) = max(log |z1|, 2 log |z2|)`.
//!
//! In the narrow range `a^2 < gamma < a^{3/2}` the first coordinate is the
//! degree-2 inner function `phi_{-a}(-phi_t(zeta)^2)` with `t = sqrt(a)`: it
//! sends `t` to `-a` with a critical point there (a double hit for the
//! vertical indicator) and hits `a` at the two simple points
//! `z1 = phi_t(s)`, `z4 = phi_t(-s)`, `s = sqrt(2a/(1+a^2))`. The second
//! coordinate vanishes at all three preimages and carries the base value
//! `gamma`. The resulting functional value is `log |z1 z4 t^2| = 2 log a`.

use crate::disk::{blaschke_fn, DiskError, RationalDisk, RationalFn};
use crate::indicator::ElementaryIndicator;
use crate::polesys::{Assignment, Pole, PoleSystem, PolesysError};
use crate::poly::Poly;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExampleError {
    #[error("parameters out of range: need {low:.6} < gamma < {high:.6}, got a = {a}, gamma = {gamma}")]
    ParameterRange {
        a: f64,
        gamma: f64,
        low: f64,
        high: f64,
    },
    #[error(transparent)]
    Disk(#[from] DiskError),
    #[error(transparent)]
    Polesys(#[from] PolesysError),
}

/// A constructed example configuration: the pole system, the base point,
/// the admissible assignment, and the preimage points by name.
#[derive(Debug, Clone)]
pub struct ExampleDisk {
    pub system: PoleSystem,
    pub z: Vec<Complex64>,
    pub assignment: Assignment,
    pub zeta1: Complex64,
    pub zeta2: Complex64,
    pub zeta4: Complex64,
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn vertical_indicator() -> ElementaryIndicator {
    ElementaryIndicator::standard(vec![1.0, 2.0]).expect("standard basis")
}

/// The two-pole system `{((a,0), Psi_V), ((-a,0), Psi_V)}`.
pub fn two_pole_system(a: f64) -> Result<PoleSystem, PolesysError> {
    PoleSystem::new(vec![
        Pole {
            a: vec![re(a), re(0.0)],
            psi: vertical_indicator(),
        },
        Pole {
            a: vec![re(-a), re(0.0)],
            psi: vertical_indicator(),
        },
    ])
}

/// Builds the extremal disk for `a^2 < gamma < a^{3/2}` with preimage sets
/// `A_1 = {zeta1, zeta4}` (simple hits of `(a, 0)`) and `A_2 = {zeta2}`
/// (double hit of `(-a, 0)`).
pub fn build_example_disk(a: f64, gamma: f64) -> Result<ExampleDisk, ExampleError> {
    let low = a * a;
    let high = a.powf(1.5);
    if !(0.0 < a && a < 1.0) || !(gamma > low && gamma < high) {
        return Err(ExampleError::ParameterRange {
            a,
            gamma,
            low,
            high,
        });
    }
    let t = a.sqrt();
    let s = (2.0 * a / (1.0 + a * a)).sqrt();
    let zeta2 = t;
    let zeta1 = (t - s) / (1.0 - t * s);
    let zeta4 = (t + s) / (1.0 + t * s);

    // phi_1 = phi_{-a}(-phi_t(zeta)^2) = (P^2 - a Q^2)/(Q^2 - a P^2)
    // with P = t - zeta, Q = 1 - t zeta.
    let p = Poly::new(vec![re(t), re(-1.0)]);
    let q = Poly::new(vec![re(1.0), re(-t)]);
    let p2 = p.mul(&p);
    let q2 = q.mul(&q);
    let first = RationalFn {
        num: p2.sub(&q2.scale(re(a))),
        den: q2.sub(&p2.scale(re(a))),
    };

    // phi_2 = (gamma / (zeta1 zeta2 zeta4)) phi_{zeta1} phi_{zeta2} phi_{zeta4}
    let mut num = Poly::constant(re(gamma / (zeta1 * zeta2 * zeta4)));
    let mut den = Poly::one();
    for &w in &[zeta1, zeta2, zeta4] {
        let b = blaschke_fn(re(w))?;
        num = num.mul(&b.num);
        den = den.mul(&b.den);
    }
    let second = RationalFn { num, den };

    let disk = RationalDisk::new(vec![first, second])?;
    let assignment = Assignment::new(disk, vec![vec![re(zeta1), re(zeta4)], vec![re(zeta2)]])?;
    Ok(ExampleDisk {
        system: two_pole_system(a)?,
        z: vec![re(0.0), re(gamma)],
        assignment,
        zeta1: re(zeta1),
        zeta2: re(zeta2),
        zeta4: re(zeta4),
    })
}

/// Simple admissible disk for the wider range `gamma < a`: the first
/// coordinate `-zeta^2` hits `(a, 0)` at `i sqrt(a)` and `(-a, 0)` at
/// `sqrt(a)`, each simply, and the second coordinate vanishes at both
/// preimages with base value `gamma`. Its functional value is `log a`,
/// strictly above the Green value `2 log a`.
pub fn build_strict_gap_disk(a: f64, gamma: f64) -> Result<ExampleDisk, ExampleError> {
    if !(0.0 < a && a < 1.0) || !(gamma > 0.0 && gamma < a) {
        return Err(ExampleError::ParameterRange {
            a,
            gamma,
            low: 0.0,
            high: a,
        });
    }
    let root = a.sqrt();
    let beta1 = Complex64::new(0.0, root);
    let beta2 = re(root);
    // first coordinate: -zeta^2
    let first = RationalFn::from_poly(Poly::monomial(re(-1.0), 2));
    // second: c phi_{beta1} phi_{beta2} with c = gamma / (beta1 beta2)
    let b1 = blaschke_fn(beta1)?;
    let b2 = blaschke_fn(beta2)?;
    let c = re(gamma) / (beta1 * beta2);
    let second = b1.mul(&b2).scale(c);
    let disk = RationalDisk::new(vec![first, second])?;
    let assignment = Assignment::new(disk, vec![vec![beta1], vec![beta2]])?;
    Ok(ExampleDisk {
        system: two_pole_system(a)?,
        z: vec![re(0.0), re(gamma)],
        assignment,
        zeta1: beta1,
        zeta2: beta2,
        zeta4: beta1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::POLE_HIT_TOL;
    use crate::polesys::{check_admissible, functional};

    #[test]
    fn example_identities() {
        for &a in &[0.3f64, 0.5, 0.64] {
            let gamma = (a * a + a.powf(1.5)) / 2.0;
            let ex = build_example_disk(a, gamma).unwrap();
            let z1 = ex.zeta1;
            let z2 = ex.zeta2;
            let z4 = ex.zeta4;
            assert!((z1 * z4 + re(a)).norm() < 1e-12);
            assert!(((z1 * z2 * z4).norm() - a.powf(1.5)).abs() < 1e-12);
            let value = functional(&ex.system, &ex.assignment, POLE_HIT_TOL)
                .unwrap()
                .value
                .expect_finite();
            assert!((value - 2.0 * a.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn example_base_point_and_hits() {
        let ex = build_example_disk(0.64, 0.45).unwrap();
        let at0 = ex.assignment.disk.eval(Complex64::new(0.0, 0.0));
        assert!((at0[0] - ex.z[0]).norm() < 1e-14);
        assert!((at0[1] - ex.z[1]).norm() < 1e-14);
        let report = check_admissible(&ex.system, &ex.z, &ex.assignment, POLE_HIT_TOL).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn example_rejects_out_of_range_gamma() {
        assert!(matches!(
            build_example_disk(0.64, 0.6),
            Err(ExampleError::ParameterRange { .. })
        ));
        assert!(matches!(
            build_example_disk(0.64, 0.4),
            Err(ExampleError::ParameterRange { .. })
        ));
    }

    #[test]
    fn strict_gap_disk_is_admissible_with_log_a() {
        let a = 0.64f64;
        let gamma = 0.55; // a^{3/2} = 0.512 < gamma < a
        let ex = build_strict_gap_disk(a, gamma).unwrap();
        let report = check_admissible(&ex.system, &ex.z, &ex.assignment, POLE_HIT_TOL).unwrap();
        assert!(report.pass, "{report:?}");
        let value = functional(&ex.system, &ex.assignment, POLE_HIT_TOL)
            .unwrap()
            .value
            .expect_finite();
        assert!((value - a.ln()).abs() < 1e-10);
        // strictly above the Green value 2 log a
        assert!(value > 2.0 * a.ln() + 0.1);
    }
}
