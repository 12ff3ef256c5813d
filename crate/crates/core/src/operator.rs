//! Dense complex operators on small Hilbert spaces.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Pauli symbols used by the reference measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Z,
}

/// Square complex matrix, row-major, with a cached Hermitian flag.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T> {
    dim: usize,
    entries: Vec<Complex<T>>,
    hermitian: bool,
}

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

impl<T: Real> Operator<T> {
    /// Builds an operator from row-major entries. The Hermitian flag is
    /// set when the entries are Hermitian within the structure tolerance.
    pub fn new(dim: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries cannot form a square matrix of side {dim}",
                entries.len()
            )));
        }
        let mut op = Self { dim, entries, hermitian: false };
        op.hermitian = op.hermitian_within(T::structure_tolerance());
        Ok(op)
    }

    pub fn from_real(dim: usize, entries: &[T]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| c(x)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![c(T::zero()); dim * dim], hermitian: true }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.entries[i * dim + i] = c(T::one());
        }
        op
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut op = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            op.entries[i * values.len() + i] = c(v);
        }
        op
    }

    pub fn pauli(kind: Pauli) -> Self {
        let (o, z) = (T::one(), T::zero());
        let entries = match kind {
            Pauli::I => [o, z, z, o],
            Pauli::X => [z, o, o, z],
            Pauli::Z => [o, z, z, -o],
        };
        Self { dim: 2, entries: entries.iter().map(|&x| c(x)).collect(), hermitian: true }
    }

    /// `|a⟩⟨b|`.
    pub fn ket_bra(ket: &[Complex<T>], bra: &[Complex<T>]) -> Result<Self> {
        if ket.len() != bra.len() || ket.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "ket of length {} and bra of length {}",
                ket.len(),
                bra.len()
            )));
        }
        let n = ket.len();
        let mut entries = Vec::with_capacity(n * n);
        for a in ket {
            for b in bra {
                entries.push(a * b.conj());
            }
        }
        Self::new(n, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row * self.dim + col]
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    fn hermitian_within(&self, tol: T) -> bool {
        let n = self.dim;
        (0..n).all(|i| {
            (i..n).all(|j| (self.entries[i * n + j] - self.entries[j * n + i].conj()).norm() <= tol)
        })
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).fold(c(T::zero()), |a, b| a + b)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![c(T::zero()); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        Self { dim: n, entries, hermitian: self.hermitian }
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
            hermitian: self.hermitian,
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut entries = vec![c(T::zero()); dim * dim];
        for i in 0..n {
            for j in 0..n {
                let a = self.entries[i * n + j];
                if a == c(T::zero()) {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        entries[(i * m + k) * dim + (j * m + l)] = a * other.entries[k * m + l];
                    }
                }
            }
        }
        Self { dim, entries, hermitian: self.hermitian && other.hermitian }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// Real part of the entries, when every imaginary part vanishes.
    pub fn real_entries(&self) -> Option<Vec<T>> {
        let tol = T::structure_tolerance();
        self.entries.iter().all(|z| z.im.abs() <= tol).then(|| self.entries.iter().map(|z| z.re).collect())
    }

    /// Full eigendecomposition; eigenvalues ascending, eigenvectors as
    /// columns.
    pub fn eigh(&self) -> Result<(Vec<T>, Operator<T>)> {
        self.require_hermitian()?;
        let (values, vectors) = linalg::hermitian_eigen(self.dim, &self.entries);
        Ok((values, Operator { dim: self.dim, entries: vectors, hermitian: false }))
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        self.require_hermitian()?;
        if let Some(mut real) = self.real_entries() {
            let t = linalg::tridiagonalize(self.dim, &mut real);
            return Ok((0..self.dim).map(|k| t.eigenvalue(k)).collect());
        }
        Ok(linalg::hermitian_eigen(self.dim, &self.entries).0)
    }

    fn require_hermitian(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        if !self.hermitian && !self.hermitian_within(T::structure_tolerance()) {
            return Err(Error::NotHermitian);
        }
        Ok(())
    }

    /// Algebraically largest eigenvalue of a Hermitian operator.
    pub fn max_eigenvalue(&self) -> Result<T> {
        self.require_hermitian()?;
        if let Some(mut real) = self.real_entries() {
            return Ok(linalg::symmetric_max_eigenvalue(self.dim, &mut real));
        }
        let (values, _) = linalg::hermitian_eigen(self.dim, &self.entries);
        Ok(values[self.dim - 1])
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        self.require_hermitian()?;
        if let Some(mut real) = self.real_entries() {
            return Ok(linalg::symmetric_min_eigenvalue(self.dim, &mut real));
        }
        let (values, _) = linalg::hermitian_eigen(self.dim, &self.entries);
        Ok(values[0])
    }

    /// Operator (spectral) norm: the largest singular value.
    pub fn operator_norm(&self) -> Result<T> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.hermitian {
            let values = self.eigenvalues()?;
            return Ok(values[0].abs().max(values[self.dim - 1].abs()));
        }
        let gram = &self.adjoint() * self;
        let top = gram.max_eigenvalue()?;
        Ok(top.max(T::zero()).sqrt())
    }

    pub fn is_psd(&self, tol: T) -> bool {
        self.min_eigenvalue().map(|m| m >= -tol).unwrap_or(false)
    }

    /// Principal square root of a PSD operator; negative eigenvalues from
    /// rounding are clamped to zero.
    pub fn sqrt_psd(&self) -> Result<Self> {
        let (values, vectors) = self.eigh()?;
        if values[0] < -T::psd_tolerance() {
            return Err(Error::NotPsd(values[0].as_f64()));
        }
        let roots: Vec<T> = values.iter().map(|&v| v.max(T::zero()).sqrt()).collect();
        let mut out = &(&vectors * &Operator::diagonal(&roots)) * &vectors.adjoint();
        out.hermitian = true;
        out.symmetrize();
        Ok(out)
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.entries[i * n + i].im = T::zero();
            for j in i + 1..n {
                let avg = (self.entries[i * n + j] + self.entries[j * n + i].conj()) * T::of(0.5);
                self.entries[i * n + j] = avg;
                self.entries[j * n + i] = avg.conj();
            }
        }
    }

    /// Trace over every tensor factor not listed in `keep`.
    ///
    /// `dims` gives the factor dimensions in Kronecker order (first factor
    /// most significant). An empty `keep` yields the 1×1 scalar trace.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || total != self.dim || dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "factor dims {dims:?} do not multiply to {}",
                self.dim
            )));
        }
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
            return Err(Error::DimensionMismatch(format!("invalid keep set {keep:?} for {} factors", dims.len())));
        }
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
        let keep_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
        let trace_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
        let out_dim: usize = keep_dims.iter().product();
        let trace_dim: usize = trace_dims.iter().product();

        let strides: Vec<usize> = (0..dims.len()).map(|i| dims[i + 1..].iter().product()).collect();
        let compose = |keep_idx: usize, trace_idx: usize| -> usize {
            let mut full = 0;
            let mut rem = keep_idx;
            for (pos, &factor) in kept.iter().enumerate().rev() {
                full += (rem % keep_dims[pos]) * strides[factor];
                rem /= keep_dims[pos];
            }
            let mut rem = trace_idx;
            for (pos, &factor) in traced.iter().enumerate().rev() {
                full += (rem % trace_dims[pos]) * strides[factor];
                rem /= trace_dims[pos];
            }
            full
        };

        let mut entries = vec![c(T::zero()); out_dim * out_dim];
        for i in 0..out_dim {
            for j in 0..out_dim {
                let mut acc = c(T::zero());
                for t in 0..trace_dim {
                    acc = acc + self.get(compose(i, t), compose(j, t));
                }
                entries[i * out_dim + j] = acc;
            }
        }
        Ok(Self { dim: out_dim, entries, hermitian: self.hermitian })
    }
}

impl<T: Real> Add for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: Self) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl<T: Real> Sub for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: Self) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl<T: Real> Neg for &Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: Self) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        let n = self.dim;
        let mut entries = vec![c(T::zero()); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == c(T::zero()) {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] = entries[i * n + j] + a * rhs.entries[k * n + j];
                }
            }
        }
        let mut out = Operator { dim: n, entries, hermitian: false };
        out.hermitian = out.hermitian_within(T::structure_tolerance());
        out
    }
}

/// Kronecker product of a non-empty list of operators, in list order.
pub fn tensor<T: Real>(ops: &[Operator<T>]) -> Result<Operator<T>> {
    let (first, rest) = ops.split_first().ok_or(Error::EmptyTensor)?;
    Ok(rest.iter().fold(first.clone(), |acc, op| acc.kron(op)))
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> PureState<T> {
    /// Accepts amplitudes whose squared norms sum to one.
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let norm: T = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if amplitudes.is_empty() || (norm - T::one()).abs() > T::structure_tolerance() {
            return Err(Error::InvalidParameter(format!("state norm² {norm} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let norm: T = amplitudes.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm == T::zero() || !norm.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero vector".into()));
        }
        Ok(Self { amplitudes: amplitudes.into_iter().map(|z| z / norm).collect() })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![c(T::zero()); dim];
        amplitudes[index] = c(T::one());
        Self { amplitudes }
    }

    /// `|+⟩` (`sign = 1`) or `|−⟩` (`sign = -1`).
    pub fn plus_minus(sign: i8) -> Self {
        let h = T::FRAC_1_SQRT_2();
        let s = if sign >= 0 { h } else { -h };
        Self { amplitudes: vec![c(h), c(s)] }
    }

    /// `|φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
    pub fn phi_plus() -> Self {
        let h = T::FRAC_1_SQRT_2();
        Self { amplitudes: vec![c(h), c(T::zero()), c(T::zero()), c(h)] }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Self { amplitudes }
    }

    pub fn projector(&self) -> Operator<T> {
        let mut op = Operator::ket_bra(&self.amplitudes, &self.amplitudes).expect("same length");
        op.hermitian = true;
        op
    }
}

/// Gram matrix `Γ_{ll'} = ‖√S_l √S_{l'}‖` of a family of PSD operators,
/// and its norm, which upper-bounds `‖Σ S_l‖` (Popovici–Sebestyén).
pub fn gram_norm_bound<T: Real>(psd_ops: &[Operator<T>]) -> Result<(Operator<T>, T)> {
    if psd_ops.is_empty() {
        return Err(Error::InvalidParameter("empty operator family".into()));
    }
    let dim = psd_ops[0].dim();
    if psd_ops.iter().any(|op| op.dim() != dim) {
        return Err(Error::DimensionMismatch("operators in a Gram family must share a dimension".into()));
    }
    let mut roots = Vec::with_capacity(psd_ops.len());
    for op in psd_ops {
        let min = op.min_eigenvalue().map_err(|_| Error::NotPsd(f64::NAN))?;
        if min < -T::psd_tolerance() {
            return Err(Error::NotPsd(min.as_f64()));
        }
        roots.push(op.sqrt_psd()?);
    }
    let k = roots.len();
    let mut gram = vec![T::zero(); k * k];
    for l in 0..k {
        for m in l..k {
            let value = (&roots[l] * &roots[m]).operator_norm()?;
            gram[l * k + m] = value;
            gram[m * k + l] = value;
        }
    }
    let gram = Operator::from_real(k, &gram)?;
    let bound = gram.operator_norm()?;
    Ok((gram, bound))
}

/// Witness of the element-wise lemma: for real matrices with
/// `0 ≤ a_ij ≤ b_ij`, reports whether `‖a‖ ≤ ‖b‖` (up to 1e-10).
pub fn elementwise_dominance_norm_check<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::LemmaPreconditions("dimension mismatch".into()));
    }
    let tol = T::structure_tolerance();
    for (x, y) in a.entries().iter().zip(b.entries()) {
        if x.im.abs() > tol || y.im.abs() > tol {
            return Err(Error::LemmaPreconditions("entries must be real".into()));
        }
        if x.re < T::zero() || y.re < T::zero() {
            return Err(Error::LemmaPreconditions("negative entry".into()));
        }
        if x.re > y.re {
            return Err(Error::LemmaPreconditions("entrywise order a ≤ b violated".into()));
        }
    }
    Ok(a.operator_norm()? <= b.operator_norm()? + T::of(1e-10))
}
