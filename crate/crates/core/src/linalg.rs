//! Dense eigen-solvers.
//!
//! Two paths: a cyclic complex Jacobi sweep for full Hermitian
//! eigendecompositions, and a Householder tridiagonalization followed by
//! Sturm-sequence bisection for single eigenvalues of real symmetric
//! matrices. The second path is the hot loop of the click-pattern scan.

use num_complex::Complex;

use crate::scalar::Real;

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix stored row-major.
///
/// Returns eigenvalues in ascending order and the matching unit
/// eigenvectors as the columns of a row-major `n × n` matrix.
pub fn hermitian_eigen<T: Real>(n: usize, entries: &[Complex<T>]) -> (Vec<T>, Vec<Complex<T>>) {
    debug_assert_eq!(entries.len(), n * n);
    let mut a = entries.to_vec();
    let mut v = vec![Complex::new(T::zero(), T::zero()); n * n];
    for i in 0..n {
        v[i * n + i] = Complex::new(T::one(), T::zero());
    }
    // symmetrize away rounding noise before rotating
    for i in 0..n {
        a[i * n + i] = Complex::new(a[i * n + i].re, T::zero());
        for j in i + 1..n {
            let avg = (a[i * n + j] + a[j * n + i].conj()) * T::of(0.5);
            a[i * n + j] = avg;
            a[j * n + i] = avg.conj();
        }
    }

    let scale: T = a.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let target = T::epsilon() * scale;

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].norm_sqr())
            .sum::<T>()
            .sqrt();
        if off <= target || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r <= T::min_positive_value() {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (T::of(2.0) * r);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let phase_c = phase.conj(); // e^{-iφ}

                // columns: A ← A U
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * phase_c * s;
                    a[k * n + q] = akp * s + akq * phase_c * c;
                }
                // rows: A ← U† A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * phase * s;
                    a[q * n + k] = apk * s + aqk * phase * c;
                }
                a[p * n + q] = Complex::new(T::zero(), T::zero());
                a[q * n + p] = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - vkq * phase_c * s;
                    v[k * n + q] = vkp * s + vkq * phase_c * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i * n + i]
            .re
            .partial_cmp(&a[j * n + j].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let mut vectors = vec![Complex::new(T::zero(), T::zero()); n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + new_col] = v[row * n + old_col];
        }
    }
    (values, vectors)
}

/// Symmetric tridiagonal matrix: diagonal `d` and sub-diagonal `e`
/// (`e[i]` couples rows `i` and `i + 1`).
#[derive(Clone, Debug)]
pub struct Tridiagonal<T> {
    pub diagonal: Vec<T>,
    pub off_diagonal: Vec<T>,
}

/// Householder reduction of a real symmetric row-major matrix to
/// tridiagonal form. The input buffer is used as scratch.
pub fn tridiagonalize<T: Real>(n: usize, a: &mut [T]) -> Tridiagonal<T> {
    debug_assert_eq!(a.len(), n * n);
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n.saturating_sub(1)];
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    if n == 0 {
        return Tridiagonal { diagonal: d, off_diagonal: e };
    }
    for k in 0..n.saturating_sub(2) {
        let m = k + 1;
        let norm: T = (m..n).map(|i| a[i * n + k] * a[i * n + k]).sum::<T>().sqrt();
        d[k] = a[k * n + k];
        if norm == T::zero() {
            e[k] = T::zero();
            continue;
        }
        let x0 = a[m * n + k];
        let alpha = if x0 > T::zero() { -norm } else { norm };
        for i in m..n {
            v[i] = a[i * n + k];
        }
        v[m] = v[m] - alpha;
        let vtv: T = (m..n).map(|i| v[i] * v[i]).sum();
        if vtv == T::zero() {
            e[k] = x0;
            continue;
        }
        let beta = T::of(2.0) / vtv;
        for i in m..n {
            let mut acc = T::zero();
            for j in m..n {
                acc = acc + a[i * n + j] * v[j];
            }
            p[i] = beta * acc;
        }
        let kappa = beta * T::of(0.5) * (m..n).map(|i| v[i] * p[i]).sum::<T>();
        for i in m..n {
            p[i] = p[i] - kappa * v[i];
        }
        for i in m..n {
            for j in m..n {
                a[i * n + j] = a[i * n + j] - v[i] * p[j] - p[i] * v[j];
            }
        }
        e[k] = alpha;
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + (n - 2)];
        e[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    d[n - 1] = a[(n - 1) * n + (n - 1)];
    Tridiagonal { diagonal: d, off_diagonal: e }
}

impl<T: Real> Tridiagonal<T> {
    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: T) -> usize {
        let n = self.diagonal.len();
        let tiny = T::min_positive_value().sqrt();
        let mut count = 0;
        let mut q = T::one();
        for i in 0..n {
            let coupling = if i == 0 {
                T::zero()
            } else {
                let e = self.off_diagonal[i - 1];
                e * e / q
            };
            q = self.diagonal[i] - x - coupling;
            if q == T::zero() {
                q = -tiny;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (T, T) {
        let n = self.diagonal.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let mut radius = T::zero();
            if i > 0 {
                radius = radius + self.off_diagonal[i - 1].abs();
            }
            if i + 1 < n {
                radius = radius + self.off_diagonal[i].abs();
            }
            lo = lo.min(self.diagonal[i] - radius);
            hi = hi.max(self.diagonal[i] + radius);
        }
        (lo, hi)
    }

    /// The `index`-th eigenvalue in ascending order, by bisection.
    pub fn eigenvalue(&self, index: usize) -> T {
        let n = self.diagonal.len();
        assert!(index < n, "eigenvalue index out of range");
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs());
        if scale == T::zero() {
            return T::zero();
        }
        let widen = T::epsilon() * (scale + T::one());
        lo = lo - widen;
        hi = hi + widen;
        let resolution = T::epsilon() * scale;
        for _ in 0..200 {
            let mid = (lo + hi) * T::of(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= resolution {
                break;
            }
        }
        (lo + hi) * T::of(0.5)
    }
}

/// Largest eigenvalue of a real symmetric row-major matrix. `scratch` is
/// overwritten.
pub fn symmetric_max_eigenvalue<T: Real>(n: usize, scratch: &mut [T]) -> T {
    if n == 1 {
        return scratch[0];
    }
    tridiagonalize(n, scratch).eigenvalue(n - 1)
}

/// Smallest eigenvalue of a real symmetric row-major matrix. `scratch` is
/// overwritten.
pub fn symmetric_min_eigenvalue<T: Real>(n: usize, scratch: &mut [T]) -> T {
    if n == 1 {
        return scratch[0];
    }
    tridiagonalize(n, scratch).eigenvalue(0)
}
