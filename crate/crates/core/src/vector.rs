//! Small dense-vector helpers over `&[f64]`.
//!
//! Points and directions are plain `Vec<f64>`; dimensions are runtime values
//! (1 to a handful), so fixed-size vector types do not fit.

pub type Vector = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn scale(a: &[f64], s: f64) -> Vector {
    a.iter().map(|x| x * s).collect()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn add(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[inline]
pub fn neg(a: &[f64]) -> Vector {
    a.iter().map(|x| -x).collect()
}

/// `a + s * b`
#[inline]
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalize(a: &[f64]) -> Option<Vector> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

pub fn basis(n: usize, i: usize) -> Vector {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

pub fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn det2(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn det3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let x = cross3(b, c);
    a[0] * x[0] + a[1] * x[1] + a[2] * x[2]
}

/// Determinant of the square matrix whose rows are `rows` (n ≤ 3 closed form).
pub fn det_rows(rows: &[&[f64]]) -> f64 {
    match rows.len() {
        1 => rows[0][0],
        2 => det2(rows[0], rows[1]),
        3 => det3(rows[0], rows[1], rows[2]),
        n => {
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            m.determinant()
        }
    }
}

pub fn max_abs(points: &[Vector]) -> f64 {
    points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinants_match_nalgebra() {
        let a = [1.0, 2.0, 0.5];
        let b = [-0.3, 0.7, 2.0];
        let c = [0.1, -1.0, 3.0];
        let m = nalgebra::Matrix3::new(a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2]);
        assert!((det3(&a, &b, &c) - m.determinant()).abs() < 1e-12);
        assert_eq!(det2(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert!(normalize(&[0.0, 0.0]).is_none());
        let u = normalize(&[3.0, 4.0]).unwrap();
        assert!((norm(&u) - 1.0).abs() < 1e-15);
    }
}
