//! Upper-bound search for the generalized Lempert functional:
//! parameterized disk families with a derivative-free optimizer, the
//! constructive disk machinery for pole collisions (rescaling, polynomial
//! perturbation, interpolation correction), and the convergence sweep that
//! tracks the split four-pole systems toward their two-pole limit.

mod collision;
mod example;
mod family;
mod lagrange;
mod simplex;
mod sweep;

pub use collision::{
    perturb_to_collision, AffinePath, CollisionError, CollisionFamily, PerturbationReport,
};
pub use example::{
    build_example_disk, build_strict_gap_disk, two_pole_system, ExampleDisk, ExampleError,
};
pub use family::{optimize_upper_bound, DiskFamily, SearchError, SearchOutcome};
pub use lagrange::{lagrange_basis, lagrange_pair_bound, LagrangeError, PairBoundReport};
pub use sweep::{convergence_sweep, EtaRule, SweepConfig, SweepError, SweepRow, SweepTable};

use crate::disk::{DiskError, RationalDisk};
use num_complex::Complex64;

/// Minkowski gauge of the unit polydisk: `max_i |z_i|`.
pub fn minkowski_polydisk(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Precomposition `zeta -> phi(mu zeta)` for `0 < mu < 1`. Multiplicities
/// move with the preimages: the rescaled disk has multiplicity at
/// `alpha / mu` equal to the original one at `alpha`.
pub fn scale_disk(phi: &RationalDisk, mu: f64) -> Result<RationalDisk, DiskError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(DiskError::BlaschkeParameter { modulus: mu });
    }
    Ok(phi.rescale_arg(mu))
}
