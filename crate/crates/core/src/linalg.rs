//! Dense complex linear algebra over small tensor-product Hilbert spaces.
//!
//! Basis convention: for per-site dimensions `d_0, …, d_{n-1}` the basis
//! vector `|i_0⟩⊗…⊗|i_{n-1}⟩` lives at flat index `Σ_k i_k · Π_{m>k} d_m`,
//! i.e. site 0 is the most significant digit (big-endian site order).

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result, ZeroNormChain};

pub type C64 = Complex64;

/// Squared norm at or below which a reduced state counts as annihilated.
pub const EPS_ZERO: f64 = 1e-12;

/// Allowed deviation of a stored pure state from unit norm.
pub const TOL_NORM: f64 = 1e-9;

/// Largest total Hilbert-space dimension accepted.
pub const MAX_TOTAL_DIM: usize = 1 << 16;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Ordered per-site internal dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteDims {
    dims: Vec<usize>,
    total: usize,
}

impl SiteDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::dim("at least one site is required"));
        }
        let mut total: usize = 1;
        for (site, &d) in dims.iter().enumerate() {
            if d < 2 {
                return Err(Error::dim(format!("site {site} has dimension {d} (< 2)")));
            }
            total = total
                .checked_mul(d)
                .filter(|&t| t <= MAX_TOTAL_DIM)
                .ok_or_else(|| {
                    Error::dim(format!("total dimension exceeds {MAX_TOTAL_DIM}"))
                })?;
        }
        Ok(SiteDims { dims, total })
    }

    /// `n` qubits.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, site: usize) -> usize {
        self.dims[site]
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.dims
    }

    /// Distance in the flat index between consecutive values of `site`'s digit.
    pub fn stride(&self, site: usize) -> usize {
        self.dims[site + 1..].iter().product()
    }

    /// Flat index of a basis vector given its per-site digits.
    pub fn index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.dims.len() {
            return Err(Error::dim(format!(
                "{} digits given for {} sites",
                digits.len(),
                self.dims.len()
            )));
        }
        digits
            .iter()
            .zip(&self.dims)
            .try_fold(0usize, |acc, (&i, &d)| {
                if i >= d {
                    Err(Error::dim(format!("digit {i} out of range for dimension {d}")))
                } else {
                    Ok(acc * d + i)
                }
            })
    }

    /// Per-site digits of a flat index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for r in 0..self.dim {
            list.entry(&&self.data[r * self.dim..(r + 1) * self.dim]);
        }
        list.finish()
    }
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Matrix { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::dim("empty matrix"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::dim(format!(
                    "row {r} has {} entries, matrix is {dim}x{dim}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Matrix { dim, data })
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |r, c| u[r] * v[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks(self.dim)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        Self::from_fn(n, |r, c| (0..n).map(|k| self.get(r, k) * rhs.get(k, c)).sum())
    }

    pub fn add(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Matrix) -> f64 {
        assert_eq!(self.dim, rhs.dim);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        self.rows()
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }
}

/// An operator acting on the internal space of one site.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteOperator {
    pub site: usize,
    pub matrix: Matrix,
}

impl SiteOperator {
    pub fn new(site: usize, matrix: Matrix) -> Self {
        SiteOperator { site, matrix }
    }

    fn check(&self, dims: &SiteDims) -> Result<()> {
        if self.site >= dims.n_sites() {
            return Err(Error::dim(format!(
                "operator site {} out of range for {} sites",
                self.site,
                dims.n_sites()
            )));
        }
        if self.matrix.dim() != dims.dim(self.site) {
            return Err(Error::dim(format!(
                "operator is {0}x{0} but site {1} has dimension {2}",
                self.matrix.dim(),
                self.site,
                dims.dim(self.site)
            )));
        }
        Ok(())
    }
}

/// `I ⊗ … ⊗ A ⊗ … ⊗ I` applied slice-wise, never materialized.
#[derive(Debug, Clone, Copy)]
pub struct Embedded<'a> {
    op: &'a SiteOperator,
    dims: &'a SiteDims,
}

/// Lift a site operator to the full tensor-product space.
pub fn embed<'a>(op: &'a SiteOperator, dims: &'a SiteDims) -> Result<Embedded<'a>> {
    op.check(dims)?;
    Ok(Embedded { op, dims })
}

impl Embedded<'_> {
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let total = self.dims.total();
        if v.len() != total {
            return Err(Error::dim(format!(
                "vector has length {}, space has dimension {total}",
                v.len()
            )));
        }
        let d = self.op.matrix.dim();
        let stride = self.dims.stride(self.op.site);
        let block = d * stride;
        let m = self.op.matrix.as_slice();
        let mut out = vec![ZERO; total];
        for base in (0..total).step_by(block) {
            for inner in 0..stride {
                let off = base + inner;
                for r in 0..d {
                    let row = &m[r * d..(r + 1) * d];
                    out[off + r * stride] = row
                        .iter()
                        .enumerate()
                        .map(|(c, a)| a * v[off + c * stride])
                        .sum();
                }
            }
        }
        Ok(out)
    }
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(C64::norm_sqr).sum()
}

/// Normalized vector over a tensor-product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: SiteDims,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Amplitudes must already have unit norm (within [`TOL_NORM`]).
    pub fn new(dims: SiteDims, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(Error::dim(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                dims.total()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("non-finite amplitude"));
        }
        let n = norm_sq(&amplitudes);
        if (n.sqrt() - 1.0).abs() > TOL_NORM {
            return Err(Error::param(format!("state norm is {} (expected 1)", n.sqrt())));
        }
        Ok(PureState { dims, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(dims: SiteDims, amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm_sq(&amplitudes);
        if !n.is_finite() || n <= EPS_ZERO {
            return Err(Error::param("cannot normalize a (near-)zero vector"));
        }
        let s = 1.0 / n.sqrt();
        Self::new(dims, amplitudes.into_iter().map(|z| z * s).collect())
    }

    pub fn basis(dims: SiteDims, digits: &[usize]) -> Result<Self> {
        let idx = dims.index(digits)?;
        let mut amplitudes = vec![ZERO; dims.total()];
        amplitudes[idx] = ONE;
        Ok(PureState { dims, amplitudes })
    }

    pub fn dims(&self) -> &SiteDims {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.dims.index(digits)?])
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.amplitudes)
    }

    /// Largest entrywise modulus of the amplitude difference.
    pub fn max_abs_diff(&self, other: &PureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Returns `𝒜ψ` (unnormalized) together with `‖𝒜ψ‖²`.
pub fn apply_and_norm(op: &SiteOperator, state: &PureState) -> Result<(Vec<C64>, f64)> {
    let v = embed(op, &state.dims)?.apply(&state.amplitudes)?;
    let n = norm_sq(&v);
    Ok((v, n))
}

/// Divides `vector` by `√norm_sq`; fails with an empty diagnostic chain when
/// the state has been annihilated.
pub fn normalize(dims: &SiteDims, vector: Vec<C64>, norm_sq: f64) -> Result<PureState> {
    if vector.len() != dims.total() {
        return Err(Error::dim(format!(
            "vector has length {}, space has dimension {}",
            vector.len(),
            dims.total()
        )));
    }
    if !(norm_sq > EPS_ZERO) {
        return Err(Error::ZeroNormState(Box::new(ZeroNormChain {
            target: None,
            chain: Vec::new(),
            norm_sq,
        })));
    }
    let s = 1.0 / norm_sq.sqrt();
    Ok(PureState {
        dims: dims.clone(),
        amplitudes: vector.into_iter().map(|z| z * s).collect(),
    })
}
