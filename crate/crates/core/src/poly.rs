//! Dense complex polynomials in one variable, coefficients in ascending
//! degree order. Degrees stay small throughout the library, so all products
//! are naive convolutions and every transform (argument shift, rescale) is an
//! exact coefficient recursion, never a finite difference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `coeffs[k]` is the coefficient of `zeta^k`. The zero polynomial is an
/// empty coefficient list. Only exactly-zero trailing coefficients are
/// trimmed; no tolerance is applied by structural operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| c.re == 0.0 && c.im == 0.0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `c * zeta^k`.
    pub fn monomial(c: Complex64, k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = c;
        Poly::new(coeffs)
    }

    /// `zeta - root`, the linear factor vanishing at `root`.
    pub fn linear_factor(root: Complex64) -> Self {
        Poly::new(vec![-root, Complex64::new(1.0, 0.0)])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial mapped to `None`.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs
            .get(k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn max_coeff_modulus(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation.
    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * zeta + c;
        }
        acc
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Poly::new(coeffs)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect();
        Poly::new(coeffs)
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs =
            vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::new(coeffs)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * Complex64::new(k as f64, 0.0))
            .collect();
        Poly::new(coeffs)
    }

    /// Coefficients of `p(alpha + zeta)`: the exact Taylor shift by repeated
    /// synthetic division (Horner's shift), no numerical differentiation.
    pub fn shift(&self, alpha: Complex64) -> Poly {
        let mut c = self.coeffs.clone();
        let n = c.len();
        if n <= 1 {
            return Poly::new(c);
        }
        for k in 0..n - 1 {
            for j in (k..n - 1).rev() {
                let t = c[j + 1] * alpha;
                c[j] += t;
            }
        }
        Poly::new(c)
    }

    /// Coefficients of `p(mu * zeta)`.
    pub fn rescale_arg(&self, mu: Complex64) -> Poly {
        let mut pow = Complex64::new(1.0, 0.0);
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let out = c * pow;
                pow *= mu;
                out
            })
            .collect();
        Poly::new(coeffs)
    }

    /// Product of linear factors `prod (zeta - r)` over the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Poly {
        let mut p = Poly::one();
        for &r in roots {
            p = p.mul(&Poly::linear_factor(r));
        }
        p
    }
}
