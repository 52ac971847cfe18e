//! Entry-by-entry tensor algebra and a reference variational sweep.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        Mat::from_fn(self.rows, other.cols, |r, c| (0..self.cols).map(|k| self.at(r, k) * other.at(k, c)).sum())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Mat {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let mut a = self.clone();
        let mut inv = Mat::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 });
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| a.at(i, col).abs().total_cmp(&a.at(j, col).abs())).unwrap();
            for c in 0..n {
                a.data.swap(col * n + c, pivot * n + c);
                inv.data.swap(col * n + c, pivot * n + c);
            }
            let d = a.at(col, col);
            for c in 0..n {
                a.set(col, c, a.at(col, c) / d);
                inv.set(col, c, inv.at(col, c) / d);
            }
            for r in 0..n {
                if r != col {
                    let f = a.at(r, col);
                    for c in 0..n {
                        a.set(r, c, a.at(r, c) - f * a.at(col, c));
                        inv.set(r, c, inv.at(r, c) - f * inv.at(col, c));
                    }
                }
            }
        }
        inv
    }
}

/// Flat row-major index of a multi-index.
pub fn flat(dims: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Every multi-index of `dims`, last index fastest.
pub fn multi_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut f| {
            let mut idx = vec![0; dims.len()];
            for n in (0..dims.len()).rev() {
                idx[n] = f % dims[n];
                f /= dims[n];
            }
            idx
        })
        .collect()
}

/// Column of entry `idx` in the mode-`k` unfolding: the remaining indices with
/// the lowest mode varying fastest.
pub fn unfold_column(dims: &[usize], idx: &[usize], k: usize) -> usize {
    let mut col = 0;
    let mut stride = 1;
    for n in 0..dims.len() {
        if n != k {
            col += idx[n] * stride;
            stride *= dims[n];
        }
    }
    col
}

/// Mode-`k` unfolding by direct definition.
pub fn unfold(dims: &[usize], values: &[f64], k: usize) -> Mat {
    let total: usize = dims.iter().product();
    let mut m = Mat::zeros(dims[k], total / dims[k]);
    for idx in multi_indices(dims) {
        m.set(idx[k], unfold_column(dims, &idx, k), values[flat(dims, &idx)]);
    }
    m
}

/// Kronecker product of two column vectors, `a ⊗ b`.
pub fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Khatri-Rao product of a chain listed slowest-first, column by column.
pub fn khatri_rao(chain: &[&Mat]) -> Mat {
    let cols = chain[0].cols;
    let columns: Vec<Vec<f64>> = (0..cols)
        .map(|l| {
            chain.iter().fold(vec![1.0], |acc, m| {
                let col: Vec<f64> = (0..m.rows).map(|r| m.at(r, l)).collect();
                kron(&acc, &col)
            })
        })
        .collect();
    let rows = columns[0].len();
    Mat::from_fn(rows, cols, |r, c| columns[c][r])
}

/// `⊙_{n≠k} A⁽ⁿ⁾` in the order `A⁽ᴺ⁾ ⊙ … ⊙ A⁽¹⁾`.
pub fn khatri_rao_excluding(factors: &[Mat], k: usize) -> Mat {
    let chain: Vec<&Mat> = factors.iter().enumerate().rev().filter(|&(n, _)| n != k).map(|(_, m)| m).collect();
    khatri_rao(&chain)
}

/// `Σ_l Π_n U⁽ⁿ⁾[i_n, l]` at every entry.
pub fn reconstruct(dims: &[usize], factors: &[Mat]) -> Vec<f64> {
    let l = factors[0].cols;
    multi_indices(dims)
        .iter()
        .map(|idx| (0..l).map(|c| idx.iter().enumerate().map(|(n, &i)| factors[n].at(i, c)).product::<f64>()).sum())
        .collect()
}

/// Inputs of one reference sweep.
#[derive(Debug, Clone)]
pub struct SweepInput {
    pub dims: Vec<usize>,
    pub y: Vec<f64>,
    pub means: Vec<Mat>,
    pub covs: Vec<Mat>,
    /// `E[1/z_l]` before the sweep.
    pub mean_inv_z: Vec<f64>,
    /// `E[β]` before the sweep.
    pub beta: f64,
    pub a0: Vec<f64>,
    pub lambda0: f64,
    pub eps: f64,
}

/// Posterior parameters after the factor, scale and noise steps.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub means: Vec<Mat>,
    pub covs: Vec<Mat>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub lambda: Vec<f64>,
    pub e: f64,
    pub f: f64,
}

/// `E[U[i,l] U[i,m]]` for a matrix-normal factor with row covariance `Σ`.
fn second_moment(m: &Mat, s: &Mat, i: usize, l: usize, c: usize) -> f64 {
    m.at(i, l) * m.at(i, c) + s.at(l, c)
}

/// `E[(⊙_{n≠k} U⁽ⁿ⁾)ᵀ(⊙_{n≠k} U⁽ⁿ⁾)]` summed over the Khatri-Rao rows.
fn kr_gram(dims: &[usize], means: &[Mat], covs: &[Mat], k: usize) -> Mat {
    let l = means[0].cols;
    let other: Vec<usize> = (0..dims.len()).filter(|&n| n != k).collect();
    let other_dims: Vec<usize> = other.iter().map(|&n| dims[n]).collect();
    Mat::from_fn(l, l, |a, b| {
        multi_indices(&other_dims)
            .iter()
            .map(|idx| {
                other
                    .iter()
                    .zip(idx)
                    .map(|(&n, &i)| second_moment(&means[n], &covs[n], i, a, b))
                    .product::<f64>()
            })
            .sum()
    })
}

/// `E‖Y − ⟦U⟧‖²` summed entry by entry.
pub fn expected_residual(dims: &[usize], y: &[f64], means: &[Mat], covs: &[Mat]) -> f64 {
    let l = means[0].cols;
    multi_indices(dims)
        .iter()
        .map(|idx| {
            let yi = y[flat(dims, idx)];
            let mean: f64 = (0..l).map(|c| idx.iter().enumerate().map(|(n, &i)| means[n].at(i, c)).product::<f64>()).sum();
            let mut sq = 0.0;
            for a in 0..l {
                for b in 0..l {
                    sq += idx
                        .iter()
                        .enumerate()
                        .map(|(n, &i)| second_moment(&means[n], &covs[n], i, a, b))
                        .product::<f64>();
                }
            }
            yi * yi - 2.0 * yi * mean + sq
        })
        .sum()
}

/// One sweep of the GH updates with `b0 = 0`: every factor in order, then
/// the scale posteriors and the noise posterior.
pub fn gh_sweep(input: &SweepInput) -> SweepOutput {
    let dims = &input.dims;
    let l = input.means[0].cols;
    let mut means = input.means.clone();
    let mut covs = input.covs.clone();
    for k in 0..dims.len() {
        let gram = kr_gram(dims, &means, &covs, k);
        let precision = Mat::from_fn(l, l, |a, b| {
            input.beta * gram.at(a, b) + if a == b { input.mean_inv_z[a] } else { 0.0 }
        });
        let cov = precision.inverse();
        let kr = khatri_rao_excluding(&means, k);
        let yk = unfold(dims, &input.y, k);
        let mut m = yk.matmul(&kr).matmul(&cov);
        m.data.iter_mut().for_each(|v| *v *= input.beta);
        means[k] = m;
        covs[k] = cov;
    }
    let z: usize = dims.iter().sum();
    let mut b = vec![0.0; l];
    for (c, bc) in b.iter_mut().enumerate() {
        for n in 0..dims.len() {
            for i in 0..dims[n] {
                *bc += means[n].at(i, c) * means[n].at(i, c);
            }
            *bc += dims[n] as f64 * covs[n].at(c, c);
        }
    }
    let total: usize = dims.iter().product();
    let resid = expected_residual(dims, &input.y, &means, &covs);
    SweepOutput {
        a: input.a0.clone(),
        b,
        lambda: vec![input.lambda0 - z as f64 / 2.0; l],
        e: input.eps + total as f64 / 2.0,
        f: input.eps + resid / 2.0,
        means,
        covs,
    }
}
