//! Minimal dense symmetric linear algebra: cyclic Jacobi eigendecomposition,
//! Lanczos extreme-eigenvalue estimation, and a small pivoted solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct Eigh<T> {
    /// Eigenvalues, descending.
    pub values: Vec<T>,
    /// vectors[j] is the unit eigenvector for values[j].
    pub vectors: Vec<Vec<T>>,
}

/// Cyclic Jacobi on a symmetric n x n row-major matrix. Sweeps until the
/// off-diagonal Frobenius norm falls below 1e-10 of the matrix scale.
pub fn jacobi_eigh<T: Real>(n: usize, matrix: &[T]) -> Eigh<T> {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let scale = matrix
        .iter()
        .fold(T::zero(), |acc, &x| acc + x * x)
        .sqrt()
        .max(T::one());
    let tol = T::of(1e-10) * scale;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if (off + off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * T::of(1e-4) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (T::of(2.0) * apq);
                let t = {
                    let root = (T::one() + tau * tau).sqrt();
                    if tau >= T::zero() {
                        T::one() / (tau + root)
                    } else {
                        -T::one() / (-tau + root)
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|k| v[k * n + j]).collect())
        .collect();
    Eigh { values, vectors }
}

/// Leading eigenpairs via Lanczos with full reorthogonalization: the `top_p`
/// largest Ritz values, descending, with their vectors mapped back through
/// the Krylov basis. Intended for `top_p` much smaller than `n`.
pub fn top_eigh_lanczos<T: Real>(
    n: usize,
    matrix: &[T],
    top_p: usize,
    steps: usize,
    seed: u64,
) -> Eigh<T> {
    assert_eq!(matrix.len(), n * n);
    let matvec = |x: &[T], out: &mut [T]| {
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc += matrix[i * n + j] * x[j];
            }
            out[i] = acc;
        }
    };
    let scale = (0..n)
        .map(|i| (0..n).map(|j| matrix[i * n + j].abs()).fold(T::zero(), T::max))
        .fold(T::zero(), T::max)
        .max(T::one());

    let m_cap = steps.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m_cap);
    let mut alphas: Vec<T> = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    let mut v: Vec<T> = (0..n).map(|_| T::of(rng.gen::<f64>() - 0.5)).collect();
    normalize(&mut v);
    let mut w = vec![T::zero(); n];
    for j in 0..m_cap {
        matvec(&v, &mut w);
        if j > 0 {
            let beta = betas[j - 1];
            let prev = &basis[j - 1];
            for i in 0..n {
                w[i] -= beta * prev[i];
            }
        }
        let alpha = dot(&w, &v);
        for i in 0..n {
            w[i] -= alpha * v[i];
        }
        for b in &basis {
            let proj = dot(&w, b);
            for i in 0..n {
                w[i] -= proj * b[i];
            }
        }
        let proj = dot(&w, &v);
        for i in 0..n {
            w[i] -= proj * v[i];
        }
        alphas.push(alpha);
        basis.push(v.clone());
        let beta = dot(&w, &w).sqrt();
        if beta <= T::of(1e-13) * scale {
            break;
        }
        betas.push(beta);
        for i in 0..n {
            v[i] = w[i] / beta;
        }
    }
    let m = alphas.len();
    let mut tri = vec![T::zero(); m * m];
    for j in 0..m {
        tri[j * m + j] = alphas[j];
        if j + 1 < m {
            tri[j * m + j + 1] = betas[j];
            tri[(j + 1) * m + j] = betas[j];
        }
    }
    let small = jacobi_eigh(m, &tri);
    let keep = top_p.min(m);
    let mut values = Vec::with_capacity(keep);
    let mut vectors = Vec::with_capacity(keep);
    for idx in 0..keep {
        values.push(small.values[idx]);
        let y = &small.vectors[idx];
        let mut x = vec![T::zero(); n];
        for (b, &yi) in basis.iter().zip(y.iter()) {
            for i in 0..n {
                x[i] += b[i] * yi;
            }
        }
        normalize(&mut x);
        vectors.push(x);
    }
    Eigh { values, vectors }
}

/// Smallest eigenvalue via Lanczos with full reorthogonalization on the
/// Gershgorin-shifted matrix cI - A (so the target becomes the largest).
pub fn min_eigenvalue_lanczos<T: Real>(n: usize, matrix: &[T], steps: usize, seed: u64) -> T {
    assert_eq!(matrix.len(), n * n);
    if n == 0 {
        return T::zero();
    }
    let shift = (0..n)
        .map(|i| {
            let mut row = matrix[i * n + i];
            for j in 0..n {
                if j != i {
                    row += matrix[i * n + j].abs();
                }
            }
            row
        })
        .fold(T::neg_infinity(), T::max)
        .max(T::zero());
    let matvec = |x: &[T], out: &mut [T]| {
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc += matrix[i * n + j] * x[j];
            }
            out[i] = shift * x[i] - acc;
        }
    };

    let m = steps.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut alphas: Vec<T> = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    let mut v: Vec<T> = (0..n).map(|_| T::of(rng.gen::<f64>() - 0.5)).collect();
    normalize(&mut v);
    let mut w = vec![T::zero(); n];
    for j in 0..m {
        matvec(&v, &mut w);
        if j > 0 {
            let beta = betas[j - 1];
            let prev = &basis[j - 1];
            for i in 0..n {
                w[i] -= beta * prev[i];
            }
        }
        let alpha = dot(&w, &v);
        for i in 0..n {
            w[i] -= alpha * v[i];
        }
        // full reorthogonalization keeps the basis clean at this scale
        for b in &basis {
            let proj = dot(&w, b);
            for i in 0..n {
                w[i] -= proj * b[i];
            }
        }
        let proj = dot(&w, &v);
        for i in 0..n {
            w[i] -= proj * v[i];
        }
        alphas.push(alpha);
        basis.push(v.clone());
        let beta = dot(&w, &w).sqrt();
        if beta <= T::of(1e-13) * shift.max(T::one()) {
            break;
        }
        betas.push(beta);
        for i in 0..n {
            v[i] = w[i] / beta;
        }
    }
    let k = alphas.len();
    let mut tri = vec![T::zero(); k * k];
    for j in 0..k {
        tri[j * k + j] = alphas[j];
        if j + 1 < k {
            tri[j * k + j + 1] = betas[j];
            tri[(j + 1) * k + j] = betas[j];
        }
    }
    let eig = jacobi_eigh(k, &tri);
    shift - eig.values[0]
}

/// Gaussian elimination with partial pivoting; None when singular.
pub fn solve_dense<T: Real>(n: usize, mut a: Vec<T>, mut b: Vec<T>) -> Option<Vec<T>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() <= T::of(1e-300) {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col * n + k] * x[k];
        }
        x[col] = acc / a[col * n + col];
    }
    Some(x)
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn normalize<T: Real>(a: &mut [T]) {
    let n = norm2(a);
    if n > T::zero() {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(n: usize, a: &[f64], eig: &Eigh<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, lam) in eig.values.iter().enumerate() {
            for i in 0..n {
                let av: f64 = (0..n).map(|k| a[i * n + k] * eig.vectors[j][k]).sum();
                worst = worst.max((av - lam * eig.vectors[j][i]).abs());
            }
        }
        worst
    }

    #[test]
    fn diagonal_matrix() {
        let a: Vec<f64> = vec![3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 7.0];
        let eig = jacobi_eigh(3, &a);
        assert!((eig.values[0] - 7.0).abs() < 1e-12);
        assert!((eig.values[1] - 3.0).abs() < 1e-12);
        assert!((eig.values[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_2x2() {
        let a: Vec<f64> = vec![2.0, 1.0, 1.0, 2.0];
        let eig = jacobi_eigh(2, &a);
        assert!((eig.values[0] - 3.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
        assert!(residual(2, &a, &eig) < 1e-10);
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 25;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in i..n {
                let x = rng.gen::<f64>() * 2.0 - 1.0;
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let eig = jacobi_eigh(n, &a);
        assert!(residual(n, &a, &eig) < 1e-8);
        for j in 0..n {
            assert!((norm2(&eig.vectors[j]) - 1.0).abs() < 1e-10);
            for l in (j + 1)..n {
                assert!(dot(&eig.vectors[j], &eig.vectors[l]).abs() < 1e-9);
            }
        }
        for j in 1..n {
            assert!(eig.values[j - 1] >= eig.values[j]);
        }
    }

    #[test]
    fn lanczos_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in i..n {
                let x = rng.gen::<f64>() * 2.0 - 1.0;
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let exact = jacobi_eigh(n, &a).values[n - 1];
        let est = min_eigenvalue_lanczos(n, &a, 60, 3);
        assert!(
            (exact - est).abs() < 1e-7 * exact.abs().max(1.0),
            "exact {exact} vs lanczos {est}"
        );
    }

    #[test]
    fn solver_round_trip() {
        let a: Vec<f64> = vec![4.0, 1.0, 0.5, 1.0, 3.0, -0.5, 0.5, -0.5, 2.0];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x_true[j]).sum())
            .collect();
        let x = solve_dense(3, a, b).unwrap();
        for k in 0..3 {
            assert!((x[k] - x_true[k]).abs() < 1e-12);
        }
        assert!(solve_dense(2, vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn f32_instantiation() {
        let a = vec![2.0f32, 1.0, 1.0, 2.0];
        let eig = jacobi_eigh(2, &a);
        assert!((eig.values[0] - 3.0).abs() < 1e-5);
    }
}
