//! Analytic disks as rational maps `D -> C^n`, one numerator/denominator
//! pair of complex polynomials per coordinate. Taylor data at interior
//! points comes from exact series recursion on the polynomials (the
//! denominator series is inverted degree by degree), never from finite
//! differences: valuations are integers and must not be corrupted by
//! cancellation.

use crate::extreal::ExtReal;
use crate::indicator::ElementaryIndicator;
use crate::poly::Poly;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest Taylor index inspected before a valuation is declared either
/// infinite (exact zero function) or undetermined.
pub const VALUATION_CAP: usize = 64;

/// Relative tolerance deciding whether a Taylor coefficient is nonzero,
/// measured against the largest modulus in the computed window.
pub const COEFF_TOL: f64 = 1e-9;

/// Absolute tolerance on `||phi(alpha) - a||` for the pole-hit test.
pub const POLE_HIT_TOL: f64 = 1e-12;

/// Slack added to the range bound: boundary suprema of inner functions
/// evaluate to 1 up to rounding, so the pass/fail test and the reported
/// margin are taken against `scale + RANGE_TOL`.
pub const RANGE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DiskError {
    #[error("denominator of coordinate {coord} vanishes on the closed unit disk")]
    DenominatorVanishes { coord: usize },
    #[error("denominator of coordinate {coord} is the zero polynomial")]
    ZeroDenominator { coord: usize },
    #[error("coordinate {coord} carries a non-finite coefficient")]
    NonFiniteCoefficient { coord: usize },
    #[error("winding count for coordinate {coord} did not stabilize")]
    WindingUnresolved { coord: usize },
    #[error("Blaschke parameter must satisfy |w| < 1, got |w| = {modulus}")]
    BlaschkeParameter { modulus: f64 },
    #[error("expansion point must satisfy |alpha| < 1, got |alpha| = {modulus}")]
    AlphaOutsideDisk { modulus: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("valuation undetermined: coefficients vanish up to the cap {cap} but the component is not the exact zero function")]
    UndeterminedValuation { cap: usize },
    #[error("radii must be positive, strictly decreasing, and stay inside the disk around alpha")]
    BadRadii,
    #[error(transparent)]
    Indicator(#[from] crate::indicator::IndicatorError),
}

/// One coordinate of a disk: `p(zeta) / q(zeta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFn {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFn {
    pub fn from_poly(p: Poly) -> Self {
        RationalFn {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        RationalFn::from_poly(Poly::constant(c))
    }

    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        self.num.eval(zeta) / self.den.eval(zeta)
    }

    /// `self + other` over the common denominator.
    pub fn add(&self, other: &RationalFn) -> RationalFn {
        RationalFn {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    pub fn mul(&self, other: &RationalFn) -> RationalFn {
        RationalFn {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        }
    }

    pub fn scale(&self, s: Complex64) -> RationalFn {
        RationalFn {
            num: self.num.scale(s),
            den: self.den.clone(),
        }
    }

    fn rescale_arg(&self, mu: Complex64) -> RationalFn {
        RationalFn {
            num: self.num.rescale_arg(mu),
            den: self.den.rescale_arg(mu),
        }
    }

    /// Taylor coefficients of `zeta -> p(alpha + zeta)/q(alpha + zeta)` up to
    /// `order` inclusive, by matching `q~ * c = p~` degree by degree.
    fn taylor(&self, alpha: Complex64, order: usize) -> Vec<Complex64> {
        let p = self.num.shift(alpha);
        let q = self.den.shift(alpha);
        let q0 = q.coeff(0);
        let mut c: Vec<Complex64> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut acc = p.coeff(k);
            for j in 1..=k.min(q.coeffs.len().saturating_sub(1)) {
                acc -= q.coeff(j) * c[k - j];
            }
            c.push(acc / q0);
        }
        c
    }
}

/// Order of vanishing of a disk component: the first nonzero Taylor index,
/// or infinite for the identically-zero component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Valuation {
    Finite(usize),
    Infinite,
}

impl Valuation {
    pub fn as_f64(&self) -> f64 {
        match self {
            Valuation::Finite(k) => *k as f64,
            Valuation::Infinite => f64::INFINITY,
        }
    }
}

/// Generalized multiplicity of a disk at a preimage point: zero off the
/// pole, otherwise `min(min_j m_j nu_j, tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub value: f64,
}

/// Sampling estimate of the Lelong number of `Psi(phi(alpha + .) - a)` at 0.
#[derive(Debug, Clone, Serialize)]
pub struct LelongEstimate {
    /// Log-log slope between the two smallest radii (falls back to the raw
    /// ratio when only one radius is given). The raw per-radius ratios carry
    /// an `O(1/log r)` bias from the leading Taylor coefficient; the slope
    /// cancels it.
    pub estimate: f64,
    /// `min` over angular samples of `Psi(...)/log r`, one entry per radius.
    pub per_radius: Vec<f64>,
}

/// Pass/fail result of the boundary range certification. `margin` is the
/// slack against the tolerance-adjusted bound `scale + RANGE_TOL`.
#[derive(Debug, Clone, Serialize)]
pub struct RangeReport {
    pub ok: bool,
    pub scale: f64,
    pub max_modulus: f64,
    pub per_coord_max: Vec<f64>,
    pub margin: f64,
}

/// An analytic disk `D -> C^n` with rational coordinates whose denominators
/// are certified zero-free on the closed unit disk at construction.
///
/// JSON form: a bare array of coordinates `[{"num": [[re,im],...], "den":
/// [...]}, ...]`, coefficients in ascending degree. Deserialization reruns
/// the denominator certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RationalFn>", into = "Vec<RationalFn>")]
pub struct RationalDisk {
    coords: Vec<RationalFn>,
}

impl TryFrom<Vec<RationalFn>> for RationalDisk {
    type Error = DiskError;

    fn try_from(coords: Vec<RationalFn>) -> Result<Self, Self::Error> {
        RationalDisk::new(coords)
    }
}

impl From<RationalDisk> for Vec<RationalFn> {
    fn from(disk: RationalDisk) -> Self {
        disk.coords
    }
}

impl RationalDisk {
    pub fn new(coords: Vec<RationalFn>) -> Result<Self, DiskError> {
        for (i, f) in coords.iter().enumerate() {
            let finite = |p: &Poly| {
                p.coeffs
                    .iter()
                    .all(|c| c.re.is_finite() && c.im.is_finite())
            };
            if !finite(&f.num) || !finite(&f.den) {
                return Err(DiskError::NonFiniteCoefficient { coord: i });
            }
            if f.den.is_zero() {
                return Err(DiskError::ZeroDenominator { coord: i });
            }
            if zeros_in_closed_disk(&f.den, i)? > 0 {
                return Err(DiskError::DenominatorVanishes { coord: i });
            }
        }
        Ok(RationalDisk { coords })
    }

    /// Constructor for coordinates whose denominators are already certified
    /// (rescaled or numerator-modified copies of validated ones).
    fn new_unchecked(coords: Vec<RationalFn>) -> Self {
        RationalDisk { coords }
    }

    /// Crate-internal constructor for builders whose denominators are
    /// zero-free by construction (Blaschke denominators and Schur-bounded
    /// compositions). Skips the winding certification, which would otherwise
    /// dominate optimizer inner loops.
    pub(crate) fn from_certified(coords: Vec<RationalFn>) -> Self {
        RationalDisk::new_unchecked(coords)
    }

    pub fn from_polys(polys: Vec<Poly>) -> Self {
        RationalDisk::new_unchecked(polys.into_iter().map(RationalFn::from_poly).collect())
    }

    pub fn constant(values: &[Complex64]) -> Self {
        RationalDisk::new_unchecked(values.iter().map(|&c| RationalFn::constant(c)).collect())
    }

    pub fn coords(&self) -> &[RationalFn] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The disk automorphism `(w - zeta) / (1 - zeta conj(w))` exchanging 0
    /// and `w`, as a one-dimensional disk.
    pub fn blaschke(w: Complex64) -> Result<RationalDisk, DiskError> {
        Ok(RationalDisk::new_unchecked(vec![blaschke_fn(w)?]))
    }

    pub fn eval(&self, zeta: Complex64) -> Vec<Complex64> {
        self.coords.iter().map(|f| f.eval(zeta)).collect()
    }

    /// Taylor coefficients of `zeta -> phi(alpha + zeta) . conj(direction)`
    /// about 0, up to `order` inclusive.
    pub fn taylor_coeffs(
        &self,
        alpha: Complex64,
        direction: &[Complex64],
        order: usize,
    ) -> Result<Vec<Complex64>, DiskError> {
        self.check_alpha(alpha)?;
        if direction.len() != self.dim() {
            return Err(DiskError::DimensionMismatch {
                expected: self.dim(),
                got: direction.len(),
            });
        }
        let mut total = vec![Complex64::new(0.0, 0.0); order + 1];
        for (f, d) in self.coords.iter().zip(direction) {
            let dc = d.conj();
            if dc.norm() == 0.0 {
                continue;
            }
            let c = f.taylor(alpha, order);
            for (t, ck) in total.iter_mut().zip(c) {
                *t += dc * ck;
            }
        }
        Ok(total)
    }

    /// First derivative vector `phi'(alpha)`.
    pub fn derivative_at(&self, alpha: Complex64) -> Result<Vec<Complex64>, DiskError> {
        self.check_alpha(alpha)?;
        Ok(self.coords.iter().map(|f| f.taylor(alpha, 1)[1]).collect())
    }

    /// Index of the first nonzero Taylor coefficient of
    /// `phi(alpha + .) . conj(direction)`, relative to the largest modulus in
    /// the inspected window. Infinite only when the component is the exact
    /// zero rational function; a window of vanishing coefficients with a
    /// possibly nonzero tail is an explicit error, not a wrong integer.
    ///
    /// Coefficients are compared after normalizing `c_k -> c_k r^k` with
    /// `r = (1 - |alpha|)/2`. Denominator zeros sit outside the closed unit
    /// disk, so `r` is strictly inside the convergence radius and the
    /// normalized sequence decays: without this, a denominator zero just
    /// outside the disk makes raw coefficients grow geometrically and the
    /// window maximum lands in the tail instead of at the leading term.
    pub fn valuation(
        &self,
        alpha: Complex64,
        direction: &[Complex64],
    ) -> Result<Valuation, DiskError> {
        self.valuation_with(alpha, direction, COEFF_TOL)
    }

    /// [`Self::valuation`] with an explicit coefficient-nonzero tolerance.
    pub fn valuation_with(
        &self,
        alpha: Complex64,
        direction: &[Complex64],
        coeff_tol: f64,
    ) -> Result<Valuation, DiskError> {
        let raw = self.taylor_coeffs(alpha, direction, VALUATION_CAP)?;
        let r = (1.0 - alpha.norm()) / 2.0;
        let mut coeffs: Vec<Complex64> = Vec::with_capacity(raw.len());
        let mut pw = 1.0f64;
        for c in raw {
            coeffs.push(c * pw);
            pw *= r;
        }
        let window_scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        // Scale of the shifted inputs; a window this far below it is noise.
        let input_scale: f64 = self
            .coords
            .iter()
            .zip(direction)
            .map(|(f, d)| {
                if d.norm() == 0.0 {
                    0.0
                } else {
                    let p = f.num.shift(alpha);
                    let q0 = f.den.eval(alpha).norm().max(1e-300);
                    d.norm() * p.max_coeff_modulus() / q0
                }
            })
            .sum();
        if window_scale > 1e-13 * input_scale.max(1e-300) {
            let threshold = coeff_tol * window_scale;
            for (k, c) in coeffs.iter().enumerate() {
                if c.norm() > threshold {
                    return Ok(Valuation::Finite(k));
                }
            }
            unreachable!("window max exceeds its own threshold");
        }
        if self.component_is_zero(direction) {
            Ok(Valuation::Infinite)
        } else {
            Err(DiskError::UndeterminedValuation { cap: VALUATION_CAP })
        }
    }

    /// Exact-zero test for `phi . conj(direction)` via the common-denominator
    /// numerator `sum_i conj(d_i) p_i prod_{j != i} q_j`.
    fn component_is_zero(&self, direction: &[Complex64]) -> bool {
        let n = self.dim();
        let mut numerator = Poly::zero();
        let mut term_scale = 0.0f64;
        for i in 0..n {
            let dc = direction[i].conj();
            if dc.norm() == 0.0 {
                continue;
            }
            let mut term = self.coords[i].num.scale(dc);
            let mut scale = dc.norm() * self.coords[i].num.max_coeff_modulus();
            for (j, f) in self.coords.iter().enumerate() {
                if j != i {
                    term = term.mul(&f.den);
                    scale *= f.den.max_coeff_modulus();
                }
            }
            numerator = numerator.add(&term);
            term_scale += scale;
        }
        numerator.max_coeff_modulus() <= 1e-13 * term_scale.max(1e-300)
    }

    /// `phi - a` as a disk (numerators shifted; denominators untouched).
    pub fn shifted_by_pole(&self, pole: &[Complex64]) -> Result<RationalDisk, DiskError> {
        if pole.len() != self.dim() {
            return Err(DiskError::DimensionMismatch {
                expected: self.dim(),
                got: pole.len(),
            });
        }
        Ok(RationalDisk::new_unchecked(
            self.coords
                .iter()
                .zip(pole)
                .map(|(f, &a)| RationalFn {
                    num: f.num.sub(&f.den.scale(a)),
                    den: f.den.clone(),
                })
                .collect(),
        ))
    }

    /// Generalized multiplicity of the disk at `alpha` with respect to the
    /// pole `a` and the indicator `psi`: zero when the disk misses the pole
    /// (exact test at `tol_hit`), otherwise `min(min_j m_j nu_j, tau)` with
    /// the valuations taken along the basis directions of `psi`.
    pub fn multiplicity(
        &self,
        alpha: Complex64,
        pole: &[Complex64],
        psi: &ElementaryIndicator,
        tol_hit: f64,
    ) -> Result<Multiplicity, DiskError> {
        self.multiplicity_with(alpha, pole, psi, tol_hit, COEFF_TOL)
    }

    /// [`Self::multiplicity`] with an explicit coefficient tolerance for the
    /// valuations.
    pub fn multiplicity_with(
        &self,
        alpha: Complex64,
        pole: &[Complex64],
        psi: &ElementaryIndicator,
        tol_hit: f64,
        coeff_tol: f64,
    ) -> Result<Multiplicity, DiskError> {
        self.check_alpha(alpha)?;
        if pole.len() != self.dim() || psi.dim() != self.dim() {
            return Err(DiskError::DimensionMismatch {
                expected: self.dim(),
                got: pole.len().max(psi.dim()),
            });
        }
        let at_alpha = self.eval(alpha);
        let miss: f64 = at_alpha
            .iter()
            .zip(pole)
            .map(|(x, a)| (x - a).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if miss > tol_hit {
            return Ok(Multiplicity { value: 0.0 });
        }
        let shifted = self.shifted_by_pole(pole)?;
        let mut raw = f64::INFINITY;
        for (v, &m) in psi.basis.iter().zip(&psi.weights) {
            let term = if m == 0.0 {
                0.0
            } else {
                match shifted.valuation_with(alpha, v, coeff_tol)? {
                    Valuation::Infinite => f64::INFINITY,
                    Valuation::Finite(nu) => m * nu as f64,
                }
            };
            raw = raw.min(term);
        }
        let tau = psi.mass().tau;
        Ok(Multiplicity {
            value: raw.min(tau),
        })
    }

    /// Independent sampling oracle for the multiplicity before truncation by
    /// the mass: estimates `liminf Psi(phi(alpha + zeta) - a)/log |zeta|`.
    /// Evaluates only `Psi` and the disk pointwise, never Taylor data.
    pub fn numeric_lelong(
        &self,
        alpha: Complex64,
        pole: &[Complex64],
        psi: &ElementaryIndicator,
        radii: &[f64],
    ) -> Result<LelongEstimate, DiskError> {
        self.check_alpha(alpha)?;
        let max_r = 1.0 - alpha.norm();
        if radii.is_empty()
            || radii[0] <= 0.0
            || radii.windows(2).any(|w| w[1] >= w[0])
            || radii.iter().any(|&r| r >= max_r)
        {
            return Err(DiskError::BadRadii);
        }
        const ANGLES: usize = 64;
        let mut per_radius = Vec::with_capacity(radii.len());
        let mut circle_sup: Vec<ExtReal> = Vec::with_capacity(radii.len());
        for &r in radii {
            let log_r = r.ln();
            let mut min_ratio = f64::INFINITY;
            let mut sup = ExtReal::NegInf;
            for k in 0..ANGLES {
                let theta = std::f64::consts::TAU * k as f64 / ANGLES as f64;
                let zeta = alpha + Complex64::from_polar(r, theta);
                let value = self.eval(zeta);
                let shifted: Vec<Complex64> =
                    value.iter().zip(pole).map(|(x, a)| x - a).collect();
                let v = psi.eval(&shifted)?;
                sup = sup.max(v);
                let ratio = match v {
                    ExtReal::NegInf => f64::INFINITY,
                    ExtReal::Finite(x) => x / log_r,
                };
                min_ratio = min_ratio.min(ratio);
            }
            per_radius.push(min_ratio);
            circle_sup.push(sup);
        }
        let estimate = if radii.len() >= 2 {
            let last = circle_sup[circle_sup.len() - 1];
            let prev = circle_sup[circle_sup.len() - 2];
            match (prev.finite(), last.finite()) {
                (Some(u_prev), Some(u_last)) => {
                    let dlog = radii[radii.len() - 1].ln() - radii[radii.len() - 2].ln();
                    (u_last - u_prev) / dlog
                }
                _ => f64::INFINITY,
            }
        } else {
            per_radius[per_radius.len() - 1]
        };
        Ok(LelongEstimate {
            estimate,
            per_radius,
        })
    }

    /// Certifies `phi(D)` inside the closed polydisk of the given scale by
    /// sampling each coordinate on the boundary circle (maximum modulus
    /// reduces the interior sup to the boundary sup).
    pub fn range_check(&self, scale: f64, boundary_samples: usize) -> RangeReport {
        let m = boundary_samples.max(8);
        let mut per_coord_max = vec![0.0f64; self.dim()];
        for k in 0..m {
            let theta = std::f64::consts::TAU * k as f64 / m as f64;
            let zeta = Complex64::from_polar(1.0, theta);
            for (acc, f) in per_coord_max.iter_mut().zip(&self.coords) {
                *acc = acc.max(f.eval(zeta).norm());
            }
        }
        let max_modulus = per_coord_max.iter().cloned().fold(0.0, f64::max);
        let margin = scale + RANGE_TOL - max_modulus;
        RangeReport {
            ok: margin >= 0.0,
            scale,
            max_modulus,
            per_coord_max,
            margin,
        }
    }

    /// Precomposition with `zeta -> mu zeta`. Denominators stay zero-free
    /// for `0 < mu <= 1`.
    pub fn rescale_arg(&self, mu: f64) -> RationalDisk {
        let mu = Complex64::new(mu, 0.0);
        RationalDisk::new_unchecked(self.coords.iter().map(|f| f.rescale_arg(mu)).collect())
    }

    /// Adds a polynomial map `P` coordinatewise: `p_i/q_i + P_i`.
    pub fn add_polynomial_map(&self, correction: &[Poly]) -> Result<RationalDisk, DiskError> {
        if correction.len() != self.dim() {
            return Err(DiskError::DimensionMismatch {
                expected: self.dim(),
                got: correction.len(),
            });
        }
        Ok(RationalDisk::new_unchecked(
            self.coords
                .iter()
                .zip(correction)
                .map(|(f, p)| RationalFn {
                    num: f.num.add(&p.mul(&f.den)),
                    den: f.den.clone(),
                })
                .collect(),
        ))
    }

    /// Adds a rational map coordinatewise; the combined denominators are
    /// revalidated.
    pub fn add_rational_map(&self, correction: &[RationalFn]) -> Result<RationalDisk, DiskError> {
        if correction.len() != self.dim() {
            return Err(DiskError::DimensionMismatch {
                expected: self.dim(),
                got: correction.len(),
            });
        }
        RationalDisk::new(
            self.coords
                .iter()
                .zip(correction)
                .map(|(f, g)| f.add(g))
                .collect(),
        )
    }

    fn check_alpha(&self, alpha: Complex64) -> Result<(), DiskError> {
        if alpha.norm() < 1.0 {
            Ok(())
        } else {
            Err(DiskError::AlphaOutsideDisk {
                modulus: alpha.norm(),
            })
        }
    }
}

/// Blaschke factor as a rational function.
pub fn blaschke_fn(w: Complex64) -> Result<RationalFn, DiskError> {
    if w.norm() >= 1.0 {
        return Err(DiskError::BlaschkeParameter { modulus: w.norm() });
    }
    Ok(RationalFn {
        num: Poly::new(vec![w, Complex64::new(-1.0, 0.0)]),
        den: Poly::new(vec![Complex64::new(1.0, 0.0), -w.conj()]),
    })
}

/// Number of zeros of `q` in the closed unit disk by the argument principle:
/// the winding number of the boundary image, refined until every phase step
/// is unambiguous. Boundary zeros are rejected.
fn zeros_in_closed_disk(q: &Poly, coord: usize) -> Result<usize, DiskError> {
    if q.degree() == Some(0) {
        return Ok(0);
    }
    let scale = q.max_coeff_modulus();
    let mut m = 256usize;
    loop {
        let values: Vec<Complex64> = (0..m)
            .map(|k| {
                q.eval(Complex64::from_polar(
                    1.0,
                    std::f64::consts::TAU * k as f64 / m as f64,
                ))
            })
            .collect();
        // Guard only against zeros essentially on the circle; legitimate
        // products of near-boundary Blaschke denominators have small but
        // resolvable boundary minima, which the winding refinement handles.
        if values.iter().any(|v| v.norm() <= 1e-14 * scale) {
            return Err(DiskError::DenominatorVanishes { coord });
        }
        let mut total = 0.0f64;
        let mut ambiguous = false;
        for k in 0..m {
            let a = values[k];
            let b = values[(k + 1) % m];
            let step = (b / a).arg();
            if step.abs() > 1.0 {
                ambiguous = true;
                break;
            }
            total += step;
        }
        if !ambiguous {
            let winding = (total / std::f64::consts::TAU).round();
            return Ok(winding.max(0.0) as usize);
        }
        m *= 2;
        if m > 1 << 16 {
            return Err(DiskError::WindingUnresolved { coord });
        }
    }
}
