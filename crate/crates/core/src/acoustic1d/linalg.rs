use num_complex::Complex64;

/// Smallest accepted ratio between the smallest and largest pivot after
/// equilibration. Anything below is treated as a singular system.
const PIVOT_RATIO_FLOOR: f64 = 1e-14;

/// Solves the dense `n x n` system `a · x = b` (row-major `a`) by Gaussian
/// elimination with partial pivoting on an equilibrated copy. Returns `None`
/// when the system is numerically singular.
pub(crate) fn solve(mut a: Vec<Complex64>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);

    // Row equilibration, then column equilibration.
    for r in 0..n {
        let s = (0..n).map(|c| a[r * n + c].norm()).fold(0.0, f64::max);
        if s == 0.0 || !s.is_finite() {
            return None;
        }
        for c in 0..n {
            a[r * n + c] /= s;
        }
        b[r] /= s;
    }
    let mut col_scale = vec![1.0; n];
    for (c, scale) in col_scale.iter_mut().enumerate() {
        let s = (0..n).map(|r| a[r * n + c].norm()).fold(0.0, f64::max);
        if s == 0.0 {
            return None;
        }
        for r in 0..n {
            a[r * n + c] /= s;
        }
        *scale = s;
    }

    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|r| (r, a[r * n + k].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty pivot range");
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        max_pivot = max_pivot.max(pivot);
        min_pivot = min_pivot.min(pivot);
        if !(pivot > 0.0) {
            return None;
        }
        let inv = 1.0 / a[k * n + k];
        for r in k + 1..n {
            let factor = a[r * n + k] * inv;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in k..n {
                let v = a[k * n + c];
                a[r * n + c] -= factor * v;
            }
            let v = b[k];
            b[r] -= factor * v;
        }
    }
    if min_pivot < PIVOT_RATIO_FLOOR * max_pivot {
        return None;
    }

    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in k + 1..n {
            acc -= a[k * n + c] * x[c];
        }
        x[k] = acc / a[k * n + k];
    }
    for (xi, s) in x.iter_mut().zip(&col_scale) {
        *xi /= *s;
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_small_system() {
        // Badly scaled rows on purpose.
        let a = vec![c(1e12, 0.0), c(2e12, 1e12), c(0.0, 1e-9), c(3e-9, 0.0)];
        let x_true = vec![c(1.0, -2.0), c(0.5, 0.25)];
        let b = vec![
            a[0] * x_true[0] + a[1] * x_true[1],
            a[2] * x_true[0] + a[3] * x_true[1],
        ];
        let x = solve(a, b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn detects_singular() {
        let a = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)];
        assert!(solve(a, vec![c(1.0, 0.0), c(1.0, 0.0)]).is_none());
    }
}
