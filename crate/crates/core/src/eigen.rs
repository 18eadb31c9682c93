//! Eigenvalues of dense real symmetric matrices.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! iteration with Wilkinson-type shifts. Only eigenvalues are accumulated,
//! so the cost is about `4n^3/3` flops and no extra `n x n` storage.
//! The reduction reads and writes only the lower triangle, row by row.

use crate::error::{Error, Result};

/// Maximum QL sweeps spent on a single eigenvalue before giving up.
const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Dense symmetric matrix in row-major order; only the lower triangle is read.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`, read from the lower triangle.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[r * self.n + c]
    }

    /// Sets entry `(i, j)` and its mirror.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[r * self.n + c] = v;
        self.data[c * self.n + r] = v;
    }

    pub fn trace(&self) -> f64 {
        crate::numeric::compensated_sum((0..self.n).map(|i| self.data[i * self.n + i]))
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.data[i * n..i * n + i];
            let mut s = self.data[i * n + i] * x[i];
            for (k, &a) in row.iter().enumerate() {
                s += a * x[k];
                y[k] += a * x[i];
            }
            y[i] += s;
        }
        y
    }

    /// All eigenvalues, sorted nonincreasing.
    pub fn eigenvalues(self) -> Result<Vec<f64>> {
        let (d, e) = tridiagonalize(self);
        let mut values = tridiagonal_eigenvalues(d, e)?;
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(values)
    }
}

/// Householder reduction. Returns the diagonal and the subdiagonal, with
/// `e[i]` coupling rows `i - 1` and `i` (`e[0] = 0`).
fn tridiagonalize(m: SymmetricMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.n;
    let mut a = m.data;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let (head, tail) = a.split_at_mut(i * n);
        let u = &mut tail[..i];
        let scale: f64 = u.iter().map(|x| x.abs()).sum();
        if l == 0 || scale == 0.0 {
            e[i] = u[l];
            continue;
        }
        let mut h = 0.0;
        for x in u.iter_mut() {
            *x /= scale;
            h += *x * *x;
        }
        let f = u[l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        u[l] = f - g;

        // p = A_l u / h over the leading (l+1) block, lower triangle only.
        let p = &mut p[..i];
        p.fill(0.0);
        for j in 0..i {
            let row = &head[j * n..j * n + j];
            let uj = u[j];
            let mut s = head[j * n + j] * uj;
            for (k, &ajk) in row.iter().enumerate() {
                s += ajk * u[k];
                p[k] += ajk * uj;
            }
            p[j] += s;
        }
        let mut f = 0.0;
        for j in 0..i {
            p[j] /= h;
            f += p[j] * u[j];
        }
        let hh = f / (h + h);
        for j in 0..i {
            p[j] -= hh * u[j];
        }
        // A_l -= u q^T + q u^T
        for j in 0..i {
            let (uj, qj) = (u[j], p[j]);
            let row = &mut head[j * n..j * n + j + 1];
            for (k, ajk) in row.iter_mut().enumerate() {
                *ajk -= uj * p[k] + qj * u[k];
            }
        }
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    (d, e)
}

/// Implicit QL on a symmetric tridiagonal matrix; consumes the subdiagonal.
fn tridiagonal_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS_PER_EIGENVALUE {
                return Err(Error::Numeric {
                    what: format!("tridiagonal QL did not converge for eigenvalue {l} of {n}"),
                    achieved: e[l].abs(),
                    iterations: sweeps - 1,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_is_returned_exactly() {
        let diag = [0.25, 3.0, 1.0 / 9.0, 0.0, 1.0];
        let m = SymmetricMatrix::from_fn(5, |i, j| if i == j { diag[i] } else { 0.0 });
        let ev = m.eigenvalues().unwrap();
        assert_eq!(ev, vec![3.0, 1.0, 0.25, 1.0 / 9.0, 0.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2, 1], [1, 2]] has eigenvalues 3 and 1.
        let m = SymmetricMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let ev = m.eigenvalues().unwrap();
        assert!((ev[0] - 3.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn second_difference_matrix() {
        // tridiag(-1, 2, -1) of size n: 2 - 2 cos(k pi / (n + 1)).
        let n = 40;
        let m = SymmetricMatrix::from_fn(n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let ev = m.eigenvalues().unwrap();
        let mut expected: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn matches_nalgebra_on_dense_random_matrix() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 60;
        let raw: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sym = |i: usize, j: usize| raw[i * n + j] + raw[j * n + i];
        let ours = SymmetricMatrix::from_fn(n, sym).eigenvalues().unwrap();
        let reference = nalgebra::DMatrix::from_fn(n, n, sym).symmetric_eigenvalues();
        let mut reference: Vec<f64> = reference.iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn mul_vec_uses_full_symmetric_matrix() {
        let m = SymmetricMatrix::from_fn(3, |i, j| (i * 3 + j) as f64);
        // lower triangle: [0], [3, 4], [6, 7, 8]
        let y = m.mul_vec(&[1.0, 1.0, 1.0]);
        assert_eq!(y, vec![0.0 + 3.0 + 6.0, 3.0 + 4.0 + 7.0, 6.0 + 7.0 + 8.0]);
        assert_eq!(m.trace(), 12.0);
    }

    #[test]
    fn empty_and_scalar() {
        assert!(SymmetricMatrix::zeros(0).eigenvalues().unwrap().is_empty());
        let m = SymmetricMatrix::from_fn(1, |_, _| 5.0);
        assert_eq!(m.eigenvalues().unwrap(), vec![5.0]);
    }
}
