//! Dense nonnegative least squares by the Lawson–Hanson active-set method.

use nalgebra::{DMatrix, DVector};

use crate::error::{GsError, Result};

/// Relative singular-value cutoff for the passive-set least-squares solves.
const SVD_EPS: f64 = 1e-13;

/// `argmin_{x ≥ 0} ‖A x − b‖₂`.
///
/// Passive-set subproblems are solved by SVD (minimum-norm), so rank-deficient
/// designs are handled. Fails if the outer loop exceeds `3·ncols` additions.
pub fn lawson_hanson(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    if a.nrows() != b.len() {
        return Err(GsError::Dimension(format!(
            "design has {} rows, target has {}",
            a.nrows(),
            b.len()
        )));
    }
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = a.tr_mul(b).amax().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut w = a.tr_mul(&(b - a * &x));

    for _ in 0..3 * n.max(1) {
        let entering = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = entering else { return Ok(x) };
        passive[j] = true;
        loop {
            let s = solve_passive(a, b, &passive)?;
            let blocking = (0..n).filter(|&k| passive[k] && s[k] <= 0.0);
            let alpha = blocking
                .map(|k| x[k] / (x[k] - s[k]))
                .fold(f64::INFINITY, f64::min);
            if alpha.is_infinite() {
                x = s;
                break;
            }
            x += (s - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= 1e-15 * x.amax().max(1.0) {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        w = a.tr_mul(&(b - a * &x));
    }
    Err(GsError::Diverged(
        "active-set iteration limit reached".into(),
    ))
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> Result<DVector<f64>> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&k| passive[k]).collect();
    let sub = a.select_columns(&idx);
    let svd = sub.svd(true, true);
    let cutoff = SVD_EPS * svd.singular_values.max();
    let z = svd
        .solve(b, cutoff)
        .map_err(|e| GsError::Diverged(e.to_string()))?;
    let mut s = DVector::zeros(passive.len());
    for (p, &k) in idx.iter().enumerate() {
        s[k] = z[p];
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_optimum_when_positive() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = lawson_hanson(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clips_negative_direction() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![-1.0, 0.5]);
        let x = lawson_hanson(&a, &b).unwrap();
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kkt_on_random_problem() {
        let a = DMatrix::from_fn(12, 6, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 - 1.5 + 0.1 * j as f64
        });
        let b = DVector::from_fn(12, |i, _| (i % 4) as f64 - 1.0);
        let x = lawson_hanson(&a, &b).unwrap();
        let g = a.tr_mul(&(&b - &a * &x));
        for k in 0..6 {
            assert!(x[k] >= 0.0);
            assert!(g[k] <= 1e-9, "gradient {k} = {}", g[k]);
            if x[k] > 0.0 {
                assert!(g[k].abs() <= 1e-9);
            }
        }
    }
}
