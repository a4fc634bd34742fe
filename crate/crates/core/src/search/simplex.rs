//! Minimal Nelder-Mead simplex minimizer. The objectives it drives are
//! nonsmooth (max/valuation branches, feasibility penalties), so a
//! derivative-free method is mandatory; restarts live in the caller.

/// Result of one simplex run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Standard Nelder-Mead with reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5. Infinite objective values (infeasible points) are ordered
/// after every finite value. Stops when the vertex spread falls below
/// `tol` or the evaluation budget runs out.
pub fn minimize(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    tol: f64,
    max_evals: usize,
) -> SimplexResult {
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(start, &mut evals);
    simplex.push((start.to_vec(), v0));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN after mapping"));
        let spread = simplex
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let f_spread = match (simplex[0].1.is_finite(), simplex[n].1.is_finite()) {
            (true, true) => (simplex[n].1 - simplex[0].1).abs(),
            _ => f64::INFINITY,
        };
        if spread < tol && f_spread < tol.max(1e-14) {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + (c - w))
            .collect();
        let fr = eval(&reflect, &mut evals);

        if fr < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let fe = eval(&expand, &mut evals);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contracted: Vec<f64> = if fr < worst.1 {
                centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(c, r)| c + 0.5 * (r - c))
                    .collect()
            } else {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + 0.5 * (w - c))
                    .collect()
            };
            let fc = eval(&contracted, &mut evals);
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = vertex
                        .0
                        .iter()
                        .zip(&best)
                        .map(|(a, b)| b + 0.5 * (a - b))
                        .collect();
                    let v = eval(&x, &mut evals);
                    *vertex = (x, v);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN after mapping"));
    SimplexResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        evaluations: evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_shifted_quadratic() {
        let mut f = |x: &[f64]| (x[0] - 1.5).powi(2) + (x[1] + 0.5).powi(2);
        let result = minimize(&mut f, &[0.0, 0.0], 0.5, 1e-10, 5000);
        assert!((result.x[0] - 1.5).abs() < 1e-6);
        assert!((result.x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn walks_into_feasible_region() {
        // Feasible only for x0 > 1; infinite elsewhere.
        let mut f = |x: &[f64]| {
            if x[0] <= 1.0 {
                f64::INFINITY
            } else {
                (x[0] - 2.0).powi(2)
            }
        };
        let result = minimize(&mut f, &[1.2, 0.0], 0.3, 1e-10, 5000);
        assert!((result.x[0] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn kinked_objective_converges() {
        let mut f = |x: &[f64]| x[0].abs().max(2.0 * x[1].abs()) + 1000.0 * (x[0] - x[1]).abs();
        let result = minimize(&mut f, &[0.7, -0.3], 0.2, 1e-12, 20000);
        assert!(result.value < 1e-8);
    }
}
