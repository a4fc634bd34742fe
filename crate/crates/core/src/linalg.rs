//! Small dense complex-vector helpers shared across modules. Dimensions are
//! tiny (n <= 8 in practice), so everything is plain Gaussian elimination and
//! classical Gram-Schmidt without blocking.

use num_complex::Complex64;

/// Standard hermitian product `z . conj(w) = sum_k z_k conj(w_k)`.
pub fn inner(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    debug_assert_eq!(z.len(), w.len());
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|x| x * s).collect()
}

pub fn axpy(acc: &mut [Complex64], s: Complex64, v: &[Complex64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += s * b;
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(matrix: &[Vec<Complex64>]) -> Complex64 {
    let n = matrix.len();
    let mut m: Vec<Vec<Complex64>> = matrix.to_vec();
    let mut d = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .norm()
                    .partial_cmp(&m[j][col].norm())
                    .expect("non-NaN pivot")
            })
            .expect("nonempty column");
        if m[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            d = -d;
        }
        d *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                let t = f * m[col][k];
                m[row][k] -= t;
            }
        }
    }
    d
}

/// Hadamard-style scale for relative determinant tests: product of row norms.
pub fn row_norm_product(matrix: &[Vec<Complex64>]) -> f64 {
    matrix.iter().map(|row| norm(row)).product()
}

/// Orthogonal projection of `z` onto the complement of the unit vector `v`:
/// `z - (z . conj(v)) v`.
pub fn project_complement(z: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    let c = inner(z, v);
    let mut out = z.to_vec();
    axpy(&mut out, -c, v);
    out
}

/// Completes the unit vector `v` to an orthonormal basis of C^n; returns the
/// n-1 complement vectors.
pub fn orthonormal_complement(v: &[Complex64]) -> Vec<Vec<Complex64>> {
    let n = v.len();
    let mut basis: Vec<Vec<Complex64>> = vec![v.to_vec()];
    // Seed with standard basis vectors, keeping the n-1 most independent ones.
    let mut candidates: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[k] = Complex64::new(1.0, 0.0);
            let residual = project_complement(&e, v);
            (norm(&residual), e)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("non-NaN norms"));
    for (_, e) in candidates {
        if basis.len() == n {
            break;
        }
        let mut w = e;
        for b in &basis {
            let c = inner(&w, b);
            axpy(&mut w, -c, b);
        }
        let len = norm(&w);
        if len > 1e-8 {
            basis.push(scale(&w, Complex64::new(1.0 / len, 0.0)));
        }
    }
    assert_eq!(basis.len(), n, "complement construction must complete");
    basis.remove(0);
    basis
}

/// Lexicographic order on C by real part, then imaginary part. Used to
/// canonicalize preimage sets so reports are deterministic.
pub fn lex_cmp(a: Complex64, b: Complex64) -> std::cmp::Ordering {
    a.re.partial_cmp(&b.re)
        .expect("non-NaN")
        .then(a.im.partial_cmp(&b.im).expect("non-NaN"))
}
