//! Small complex linear-algebra helpers shared by the solvers.

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex<f64>>;

pub fn to_na(c: Complex64) -> Complex<f64> {
    Complex::new(c.re, c.im)
}

pub fn from_na(c: Complex<f64>) -> Complex64 {
    Complex64::new(c.re, c.im)
}

/// Solve a small dense system A x = b by partial-pivot elimination.
/// Returns None when the pivot collapses (singular to working precision).
pub fn solve_small(a: &[Vec<Complex64>], b: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = b.len();
    let mut m: Vec<Vec<Complex64>> = a.iter().map(|r| r.to_vec()).collect();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let (piv, mag) = (k..n)
            .map(|i| (i, m[i][k].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if mag < 1e-300 {
            return None;
        }
        m.swap(k, piv);
        rhs.swap(k, piv);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                let v = m[k][j];
                m[i][j] -= f * v;
            }
            let v = rhs[k];
            rhs[i] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    Some(x)
}

pub fn det_small(a: &[Vec<Complex64>]) -> Complex64 {
    let n = a.len();
    match n {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => {
            let m = CMat::from_fn(n, n, |i, j| to_na(a[i][j]));
            from_na(m.determinant())
        }
    }
}

/// Smallest singular value of a small matrix.
pub fn min_singular_value(a: &[Vec<Complex64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let m = a[0].len();
    if n == 1 && m == 1 {
        return a[0][0].norm();
    }
    if n == 2 && m == 2 {
        // closed form from the Gram matrix invariants
        let fro2: f64 = a.iter().flatten().map(|c| c.norm_sqr()).sum();
        let det = det_small(a).norm_sqr();
        let disc = (fro2 * fro2 - 4.0 * det).max(0.0).sqrt();
        return ((fro2 - disc) / 2.0).max(0.0).sqrt();
    }
    let mat = CMat::from_fn(n, m, |i, j| to_na(a[i][j]));
    let svd = mat.svd(false, false);
    svd.singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// All eigenvalues of a square complex matrix via the Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let (_q, t) = m.clone().schur().unpack();
    t.diagonal().iter().map(|&c| from_na(c)).collect()
}


pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dist2(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_2x2() {
        let a = vec![
            vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)],
        ];
        let b = vec![Complex64::new(5.0, 0.0), Complex64::new(10.0, 0.0)];
        let x = solve_small(&a, &b).unwrap();
        assert!((x[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((x[1] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn min_sv_matches_svd() {
        let a = vec![
            vec![Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0)],
            vec![Complex64::new(3.0, 0.5), Complex64::new(2.0, 2.0)],
        ];
        let closed = min_singular_value(&a);
        let m = CMat::from_fn(2, 2, |i, j| to_na(a[i][j]));
        let svd = m.svd(false, false);
        let direct = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((closed - direct).abs() < 1e-10, "{closed} vs {direct}");
    }
}
