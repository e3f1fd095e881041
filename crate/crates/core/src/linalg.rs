//! Dense linear algebra for the small blocks this problem produces.
//!
//! The hyperfine Hamiltonian block-diagonalizes into real symmetric blocks of
//! dimension ≤ 14, and the three-level elimination needs complex solves of
//! dimension ≤ 5. A cyclic Jacobi sweep and a partial-pivot LU cover both
//! without pulling in a LAPACK binding.

use num_complex::Complex;
use thiserror::Error;

use crate::float::Float;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("jacobi eigensolver failed to converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is singular to working precision")]
    Singular,
}

/// Dense column-major square matrix view helpers.
#[inline]
fn at(n: usize, r: usize, c: usize) -> usize {
    c * n + r
}

/// Eigen-decomposition of a real symmetric matrix (row/col order immaterial).
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns of a column-major matrix.
pub fn symmetric_eigen<F: Float>(a: &[F], n: usize) -> Result<(Vec<F>, Vec<F>), LinalgError> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![F::zero(); n * n];
    for i in 0..n {
        v[at(n, i, i)] = F::one();
    }
    if n <= 1 {
        return Ok((m, v));
    }

    let tol = F::of(1e-300).max(F::epsilon() * F::epsilon());
    let max_sweeps = 64;
    for _sweep in 0..max_sweeps {
        let mut off = F::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[at(n, p, q)] * m[at(n, p, q)];
            }
        }
        let scale: F = (0..n).map(|i| m[at(n, i, i)] * m[at(n, i, i)]).sum();
        if off <= tol.max(F::epsilon() * F::epsilon() * scale.max(F::one())) {
            let mut vals: Vec<(F, usize)> = (0..n).map(|i| (m[at(n, i, i)], i)).collect();
            vals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let eigvals: Vec<F> = vals.iter().map(|x| x.0).collect();
            let mut eigvecs = vec![F::zero(); n * n];
            for (dst, &(_, src)) in vals.iter().enumerate() {
                for r in 0..n {
                    eigvecs[at(n, r, dst)] = v[at(n, r, src)];
                }
            }
            return Ok((eigvals, eigvecs));
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[at(n, p, q)];
                if apq == F::zero() {
                    continue;
                }
                let app = m[at(n, p, p)];
                let aqq = m[at(n, q, q)];
                let theta = (aqq - app) / (F::two() * apq);
                // stable rotation: t = sign(θ)/(|θ| + sqrt(θ² + 1))
                let t = if theta >= F::zero() {
                    F::one() / (theta + (theta * theta + F::one()).sqrt())
                } else {
                    -F::one() / (-theta + (theta * theta + F::one()).sqrt())
                };
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = m[at(n, k, p)];
                    let akq = m[at(n, k, q)];
                    m[at(n, k, p)] = c * akp - s * akq;
                    m[at(n, k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[at(n, p, k)];
                    let aqk = m[at(n, q, k)];
                    m[at(n, p, k)] = c * apk - s * aqk;
                    m[at(n, q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[at(n, k, p)];
                    let vkq = v[at(n, k, q)];
                    v[at(n, k, p)] = c * vkp - s * vkq;
                    v[at(n, k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(LinalgError::NoConvergence(max_sweeps))
}

/// Solve A x = b for complex square A by LU with partial pivoting.
/// A is column-major and consumed; `b` is overwritten with the solution.
pub fn solve_complex<F: Float>(
    a: &mut [Complex<F>],
    b: &mut [Complex<F>],
    n: usize,
) -> Result<(), LinalgError> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let scale: F = a.iter().map(|z| z.norm_sqr()).fold(F::zero(), F::max);
    let floor = scale * F::epsilon() * F::epsilon() * F::of_usize(n * n);
    let mut piv: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (mut best, mut best_mag) = (col, a[at(n, piv[col], col)].norm_sqr());
        for r in (col + 1)..n {
            let mag = a[at(n, piv[r], col)].norm_sqr();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        if best_mag <= floor {
            return Err(LinalgError::Singular);
        }
        piv.swap(col, best);
        let prow = piv[col];
        let pivot = a[at(n, prow, col)];
        for r in (col + 1)..n {
            let row = piv[r];
            let factor = a[at(n, row, col)] / pivot;
            a[at(n, row, col)] = factor;
            for c in (col + 1)..n {
                let upper = a[at(n, prow, c)];
                a[at(n, row, c)] = a[at(n, row, c)] - factor * upper;
            }
            b[row] -= factor * b[prow];
        }
    }
    // back substitution on the permuted rows
    let mut x = vec![Complex::new(F::zero(), F::zero()); n];
    for col in (0..n).rev() {
        let mut acc = b[piv[col]];
        for c in (col + 1)..n {
            acc -= a[at(n, piv[col], c)] * x[c];
        }
        x[col] = acc / a[at(n, piv[col], col)];
    }
    b.copy_from_slice(&x);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Small deterministic LCG so the test matrices are reproducible.
    struct Lcg(u64);
    impl Lcg {
        fn next_f64(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        let mut rng = Lcg(0x5eed);
        for n in [1usize, 2, 3, 5, 9, 14] {
            let mut a = vec![0.0_f64; n * n];
            for r in 0..n {
                for c in r..n {
                    let x = rng.next_f64() * 3.0;
                    a[at(n, r, c)] = x;
                    a[at(n, c, r)] = x;
                }
            }
            let (vals, vecs) = symmetric_eigen(&a, n).unwrap();
            // ascending order
            for w in vals.windows(2) {
                assert!(w[0] <= w[1]);
            }
            // A v_i = λ_i v_i and orthonormality
            for i in 0..n {
                for r in 0..n {
                    let mut av = 0.0;
                    for c in 0..n {
                        av += a[at(n, r, c)] * vecs[at(n, c, i)];
                    }
                    assert!(
                        (av - vals[i] * vecs[at(n, r, i)]).abs() < 1e-11,
                        "residual too large for n={n}"
                    );
                }
                for j in 0..n {
                    let dot: f64 = (0..n).map(|r| vecs[at(n, r, i)] * vecs[at(n, r, j)]).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn complex_solve_roundtrip() {
        type C = Complex<f64>;
        let mut rng = Lcg(0xbead);
        for n in [1usize, 2, 4, 5] {
            let mut a = vec![C::new(0.0, 0.0); n * n];
            for e in a.iter_mut() {
                *e = C::new(rng.next_f64(), rng.next_f64());
            }
            let x_true: Vec<C> = (0..n)
                .map(|_| C::new(rng.next_f64(), rng.next_f64()))
                .collect();
            let mut b = vec![C::new(0.0, 0.0); n];
            for r in 0..n {
                for c in 0..n {
                    b[r] += a[at(n, r, c)] * x_true[c];
                }
            }
            let mut a_fact = a.clone();
            solve_complex(&mut a_fact, &mut b, n).unwrap();
            for i in 0..n {
                assert!((b[i] - x_true[i]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        type C = Complex<f64>;
        let mut a = vec![C::new(0.0, 0.0); 4];
        a[0] = C::new(1.0, 0.0);
        a[1] = C::new(2.0, 0.0);
        a[2] = C::new(2.0, 0.0);
        a[3] = C::new(4.0, 0.0);
        let mut b = vec![C::new(1.0, 0.0); 2];
        assert!(matches!(
            solve_complex(&mut a, &mut b, 2),
            Err(LinalgError::Singular)
        ));
    }
}
