//! Dense tensors and the multilinear primitives the inference updates use.
//!
//! Storage is row-major: the last index varies fastest. The mode-`k`
//! unfolding orders its columns with the lowest retained mode varying
//! fastest, which is the order produced by the reversed Khatri-Rao chain
//! `A⁽ᴺ⁾ ⊙ … ⊙ A⁽ᵏ⁺¹⁾ ⊙ A⁽ᵏ⁻¹⁾ ⊙ … ⊙ A⁽¹⁾`. With that pairing
//!
//! ```text
//! unfold(⟦U⟧, k) == U⁽ᵏ⁾ · khatri_rao_excluding(U, k)ᵀ
//! ```
//!
//! holds exactly. Modes are 0-based throughout the API.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// An N-way real array (N ≥ 2) in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    /// Wraps `values` with the given dimensions.
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let expected = dims.iter().product::<usize>();
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "{} values for dims {:?} (expected {})",
                values.len(),
                dims,
                expected
            )));
        }
        Ok(Self { dims, values })
    }

    /// All-zero tensor.
    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let len = dims.iter().product();
        Ok(Self {
            dims,
            values: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_dims(&dims)?;
        let len = dims.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            values.push(f(&idx));
            advance(&mut idx, &dims);
        }
        Ok(Self { dims, values })
    }

    /// Mode sizes `J_1..J_N`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of modes.
    pub fn ndims(&self) -> usize {
        self.dims.len()
    }

    /// Flat row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable flat values.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Consumes the tensor, returning the flat values.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Total number of entries.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: every mode has at least one entry.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry at a multi-index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// Row-major flat offset of a multi-index.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    /// Entrywise `self * c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::Shape(format!(
            "tensor needs at least 2 modes, got {}",
            dims.len()
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::Shape(format!("zero-sized mode in {dims:?}")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Shape(format!("dims {dims:?} overflow usize")))?;
    Ok(())
}

/// Row-major odometer increment.
fn advance(idx: &mut [usize], dims: &[usize]) {
    for n in (0..dims.len()).rev() {
        idx[n] += 1;
        if idx[n] < dims[n] {
            return;
        }
        idx[n] = 0;
    }
}

/// Column strides of the mode-`k` unfolding (0 for mode `k` itself).
fn unfold_col_strides(dims: &[usize], k: usize) -> Vec<usize> {
    let mut strides = vec![0; dims.len()];
    let mut s = 1;
    for (n, &d) in dims.iter().enumerate() {
        if n != k {
            strides[n] = s;
            s *= d;
        }
    }
    strides
}

/// Calls `f(row, col)` of the mode-`k` unfolding for every flat index in order.
fn for_each_unfold_position(dims: &[usize], k: usize, mut f: impl FnMut(usize, usize, usize)) {
    let strides = unfold_col_strides(dims, k);
    let len: usize = dims.iter().product();
    let mut idx = vec![0usize; dims.len()];
    let mut col = 0usize;
    for flat in 0..len {
        f(flat, idx[k], col);
        for n in (0..dims.len()).rev() {
            idx[n] += 1;
            if idx[n] < dims[n] {
                col += strides[n];
                break;
            }
            col -= (dims[n] - 1) * strides[n];
            idx[n] = 0;
        }
    }
}

fn check_mode(mode: usize, ndims: usize) -> Result<()> {
    if mode >= ndims {
        return Err(Error::ModeOutOfRange { mode, ndims });
    }
    Ok(())
}

/// Mode-`k` unfolding: a `J_k × Π_{n≠k} J_n` matrix.
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<DMatrix<f64>> {
    check_mode(mode, t.ndims())?;
    let rows = t.dims[mode];
    let cols = t.len() / rows;
    let mut out = DMatrix::zeros(rows, cols);
    for_each_unfold_position(&t.dims, mode, |flat, r, c| {
        out[(r, c)] = t.values[flat];
    });
    Ok(out)
}

/// Inverse of [`unfold`].
pub fn fold(m: &DMatrix<f64>, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
    check_dims(dims)?;
    check_mode(mode, dims.len())?;
    let len: usize = dims.iter().product();
    if m.nrows() != dims[mode] || m.nrows() * m.ncols() != len {
        return Err(Error::Shape(format!(
            "{}×{} matrix cannot fold along mode {mode} into {dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut values = vec![0.0; len];
    for_each_unfold_position(dims, mode, |flat, r, c| {
        values[flat] = m[(r, c)];
    });
    Ok(DenseTensor {
        dims: dims.to_vec(),
        values,
    })
}

/// Khatri-Rao product of a chain given slowest-first: `chain[0] ⊙ chain[1] ⊙ …`.
///
/// Column `l` of the result is `chain[0][:,l] ⊗ chain[1][:,l] ⊗ …`, so the
/// last matrix's row index varies fastest.
pub fn khatri_rao(chain: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let Some((last, rest)) = chain.split_last() else {
        return Err(Error::Shape("empty Khatri-Rao chain".into()));
    };
    let cols = last.ncols();
    if rest.iter().any(|m| m.ncols() != cols) {
        return Err(Error::Shape("Khatri-Rao factors differ in column count".into()));
    }
    let mut acc = (*last).clone();
    for m in rest.iter().rev() {
        let inner = acc.nrows();
        let mut next = DMatrix::zeros(m.nrows() * inner, cols);
        for l in 0..cols {
            let src = acc.column(l);
            let mut dst = next.column_mut(l);
            for i in 0..m.nrows() {
                let a = m[(i, l)];
                for (j, &b) in src.iter().enumerate() {
                    dst[i * inner + j] = a * b;
                }
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// `A⁽ᴺ⁾ ⊙ … ⊙ A⁽¹⁾` with mode `skip` left out (`None` keeps every mode).
pub fn khatri_rao_excluding(factors: &[DMatrix<f64>], skip: Option<usize>) -> Result<DMatrix<f64>> {
    if let Some(k) = skip {
        check_mode(k, factors.len())?;
    }
    let chain: Vec<&DMatrix<f64>> = factors
        .iter()
        .enumerate()
        .rev()
        .filter(|&(n, _)| Some(n) != skip)
        .map(|(_, m)| m)
        .collect();
    khatri_rao(&chain)
}

/// Elementwise product of every Gram matrix except index `skip`.
///
/// With an empty selection the result is the all-ones matrix.
pub fn hadamard_gram_excluding(grams: &[DMatrix<f64>], skip: Option<usize>) -> Result<DMatrix<f64>> {
    let Some(first) = grams.first() else {
        return Err(Error::Shape("no Gram matrices".into()));
    };
    let l = first.nrows();
    if grams.iter().any(|g| g.nrows() != l || g.ncols() != l) {
        return Err(Error::Shape("Gram matrices must all be L×L".into()));
    }
    if let Some(k) = skip {
        check_mode(k, grams.len())?;
    }
    let mut out = DMatrix::from_element(l, l, 1.0);
    for (n, g) in grams.iter().enumerate() {
        if Some(n) != skip {
            out.component_mul_assign(g);
        }
    }
    Ok(out)
}

/// Sum of squared entries.
pub fn frob_norm_sq(t: &DenseTensor) -> f64 {
    t.values.iter().map(|v| v * v).sum()
}

/// A set of N factor matrices sharing a column count `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalModel {
    factors: Vec<DMatrix<f64>>,
}

impl KruskalModel {
    /// Validates that all factors share one column count and N ≥ 2.
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::Shape("a Kruskal model needs at least 2 factors".into()));
        }
        let l = factors[0].ncols();
        if factors.iter().any(|f| f.ncols() != l) {
            return Err(Error::Shape("factor matrices differ in column count".into()));
        }
        if factors.iter().any(|f| f.nrows() == 0) {
            return Err(Error::Shape("factor with zero rows".into()));
        }
        Ok(Self { factors })
    }

    /// Factor matrices, one per mode.
    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    /// Consumes the model.
    pub fn into_factors(self) -> Vec<DMatrix<f64>> {
        self.factors
    }

    /// Column count `L`.
    pub fn rank_bound(&self) -> usize {
        self.factors[0].ncols()
    }

    /// Row counts `J_n`.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    /// `unfold(reconstruct(self), k)`'s right factor.
    pub fn khatri_rao_excluding(&self, skip: usize) -> Result<DMatrix<f64>> {
        khatri_rao_excluding(&self.factors, Some(skip))
    }

    /// The Kruskal operator `⟦U⁽¹⁾, …, U⁽ᴺ⁾⟧`.
    pub fn reconstruct(&self) -> DenseTensor {
        reconstruct(&self.factors)
    }
}

/// `⟦U⁽¹⁾, …, U⁽ᴺ⁾⟧` for conformable factors (panics on mismatched columns).
pub fn reconstruct(factors: &[DMatrix<f64>]) -> DenseTensor {
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    if factors[0].ncols() == 0 {
        return DenseTensor::zeros(dims).expect("factor dims validated");
    }
    let kr = khatri_rao_excluding(factors, Some(0)).expect("conformable factors");
    let x0 = &factors[0] * kr.transpose();
    fold(&x0, 0, &dims).expect("shape follows from factors")
}
