//! Small dense linear-algebra kernels and the proximal/projection primitives
//! the rest of the crate builds on.
//!
//! Matrices are stored row-major. Decompositions are delegated to nalgebra;
//! the wrappers here enforce nonincreasing ordering of singular values and
//! eigenvalues, which nalgebra does not guarantee.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Default tolerances used across the crate, gathered in one record.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// SVD / eigendecomposition reconstruction, relative to the input norm.
    pub factorization: f64,
    /// Symmetry check on inputs that must be symmetric.
    pub symmetry: f64,
    /// PSD floor: smallest admissible eigenvalue of a nominally PSD output.
    pub psd_floor: f64,
    /// Duality-gap stop for the block-splitting norm oracle.
    pub primal_oracle_gap: f64,
    /// Relative objective decrease stop for the restricted problem.
    pub inner_objective: f64,
    /// Relative slack on the working-set termination certificate.
    pub kkt: f64,
}

pub const DEFAULT_TOLERANCES: Tolerances = Tolerances {
    factorization: 1e-10,
    symmetry: 1e-10,
    psd_floor: -1e-10,
    primal_oracle_gap: 1e-6,
    inner_objective: 1e-9,
    kkt: 1e-3,
};

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT_TOLERANCES
    }
}

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Rank-one outer product a b^T.
    pub fn outer(a: &[f64], b: &[f64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.data.len() != self.rows * self.cols {
            return Err(Error::Shape("inconsistent dimensions".into()));
        }
        if !self.data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix entries must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| c * v).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// self += c * other
    pub fn axpy(&mut self, c: f64, other: &Self) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                let or = other.row(l);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(or) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// y = A^T x
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.rows, x.len());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    /// a^T A b
    pub fn quad_form(&self, a: &[f64], b: &[f64]) -> f64 {
        let ab = self.matvec(b);
        a.iter().zip(&ab).map(|(x, y)| x * y).sum()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn entry_l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn entry_linf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn count_nonzeros(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// Compact |rows|x|cols| copy of the entries indexed by `ri` x `ci`.
    pub fn submatrix(&self, ri: &[usize], ci: &[usize]) -> Self {
        Self::from_fn(ri.len(), ci.len(), |i, j| self.get(ri[i], ci[j]))
    }

    /// self[ri x ci] += c * block (block is compact).
    pub fn add_block(&mut self, ri: &[usize], ci: &[usize], c: f64, block: &Self) {
        debug_assert_eq!((block.rows, block.cols), (ri.len(), ci.len()));
        for (bi, &i) in ri.iter().enumerate() {
            for (bj, &j) in ci.iter().enumerate() {
                let v = self.get(i, j) + c * block.get(bi, bj);
                self.set(i, j, v);
            }
        }
    }

    /// Largest absolute deviation from symmetry; 0 for non-square input is not meaningful.
    pub fn symmetry_deviation(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                dev = dev.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        dev
    }

    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        let dev = self.symmetry_deviation();
        let scale = self.entry_linf_norm().max(1.0);
        if dev > tol * scale {
            return Err(Error::NotSymmetric { deviation: dev });
        }
        Ok(())
    }

    /// Exactly symmetrize: (A + A^T)/2.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    pub(crate) fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().copied())
    }
}

/// Thin SVD with orthonormal factors and nonincreasing singular values.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// rows x r, orthonormal columns
    pub left_vectors: DenseMatrix,
    /// length r = min(rows, cols), nonincreasing, nonnegative
    pub singular_values: Vec<f64>,
    /// cols x r, orthonormal columns
    pub right_vectors: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let r = self.singular_values.len();
        let (m, n) = (self.left_vectors.rows(), self.right_vectors.rows());
        DenseMatrix::from_fn(m, n, |i, j| {
            (0..r)
                .map(|t| {
                    self.left_vectors.get(i, t)
                        * self.singular_values[t]
                        * self.right_vectors.get(j, t)
                })
                .sum()
        })
    }
}

/// Full thin SVD, singular values sorted nonincreasing.
pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    let na = m.to_na();
    let sv = na
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or(Error::NoConvergence { what: "svd", residual: m.frobenius_norm(), iterations: 0 })?;
    let u = sv.u.expect("u requested");
    let vt = sv.v_t.expect("v_t requested");
    let r = sv.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| sv.singular_values[b].partial_cmp(&sv.singular_values[a]).unwrap());
    let singular_values: Vec<f64> = order.iter().map(|&t| sv.singular_values[t]).collect();
    let left_vectors = DenseMatrix::from_fn(m.rows(), r, |i, t| u[(i, order[t])]);
    let right_vectors = DenseMatrix::from_fn(m.cols(), r, |j, t| vt[(order[t], j)]);
    Ok(SvdResult { left_vectors, singular_values, right_vectors })
}

/// Largest singular value.
pub fn operator_norm(m: &DenseMatrix) -> f64 {
    m.to_na()
        .singular_values()
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s))
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DenseMatrix) -> f64 {
    m.to_na().singular_values().iter().sum()
}

/// Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing;
/// columns of the returned matrix are the corresponding eigenvectors.
pub fn sym_eig(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    m.check_symmetric(DEFAULT_TOLERANCES.symmetry)?;
    let eig = SymmetricEigen::new(m.symmetrized().to_na());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&t| eig.eigenvalues[t]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, t| eig.eigenvectors[(i, order[t])]);
    Ok((values, vectors))
}

/// Componentwise sign(v) * max(|v| - tau, 0).
pub fn soft_threshold_vector(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("soft threshold needs tau >= 0, got {tau}")));
    }
    Ok(v.iter().map(|&x| x.signum() * (x.abs() - tau).max(0.0)).collect())
}

/// Euclidean projection onto the l1 ball of the given radius.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("l1 ball radius must be positive, got {radius}")));
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return Ok(v.to_vec());
    }
    // sort |v| nonincreasing, find the soft-threshold level
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (i as f64 + 1.0);
        if i + 1 == mags.len() || mags[i + 1] <= t {
            tau = t;
            break;
        }
    }
    soft_threshold_vector(v, tau.max(0.0))
}

/// Singular-value soft-thresholding: minimizer of (1/2)||Z - M||_F^2 + tau ||Z||_*.
pub fn prox_trace_norm(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("prox threshold must be >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(m.clone());
    }
    let d = svd(m)?;
    let s = soft_threshold_vector(&d.singular_values, tau)?;
    Ok(SvdResult { singular_values: s, ..d }.reconstruct())
}

/// Minimizer of (1/2)||Z - M||_F^2 + tau tr(Z) over PSD Z: eigenvalue shift and clip.
pub fn prox_psd_trace(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("prox threshold must be >= 0, got {tau}")));
    }
    let (vals, q) = sym_eig(m)?;
    let clipped: Vec<f64> = vals.iter().map(|&l| (l - tau).max(0.0)).collect();
    Ok(eig_reconstruct(&clipped, &q))
}

/// Q diag(vals) Q^T
pub fn eig_reconstruct(vals: &[f64], q: &DenseMatrix) -> DenseMatrix {
    let n = q.rows();
    DenseMatrix::from_fn(n, n, |i, j| {
        (0..vals.len()).map(|t| q.get(i, t) * vals[t] * q.get(j, t)).sum()
    })
}

/// Deterministic matrix of i.i.d. standard normal entries.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut r = rng::stream(seed);
    DenseMatrix {
        rows,
        cols,
        data: (0..rows * cols).map(|_| r.sample(StandardNormal)).collect(),
    }
}

/// Deterministic vector of i.i.d. standard normal entries.
pub fn gaussian_vector(n: usize, r: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(vals: &[f64]) -> DenseMatrix {
        let n = vals.len();
        DenseMatrix::from_fn(n, n, |i, j| if i == j { vals[i] } else { 0.0 })
    }

    #[test]
    fn svd_diagonal() {
        let d = svd(&diag(&[3.0, 1.0])).unwrap();
        assert!((d.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((d.singular_values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_zero_matrix() {
        let d = svd(&DenseMatrix::zeros(2, 3)).unwrap();
        assert!(d.singular_values.iter().all(|&s| s == 0.0));
        assert_eq!(d.singular_values.len(), 2);
    }

    #[test]
    fn svd_reconstruction_random() {
        for seed in 0..20 {
            let m = gaussian_matrix(5, 4, seed);
            let d = svd(&m).unwrap();
            let err = d.reconstruct().sub(&m).frobenius_norm();
            assert!(err <= 1e-10 * m.frobenius_norm().max(1.0), "seed {seed}: err {err}");
            // ordering
            for w in d.singular_values.windows(2) {
                assert!(w[0] >= w[1]);
            }
            assert!(d.singular_values.iter().all(|&s| s >= 0.0));
            // orthonormality of U and V
            for f in [&d.left_vectors, &d.right_vectors] {
                let g = f.transpose().matmul(f);
                for i in 0..g.rows() {
                    for j in 0..g.cols() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((g.get(i, j) - want).abs() < 1e-10);
                    }
                }
            }
            // singular values match Gram eigenvalues of M^T M
            let gram = m.transpose().matmul(&m);
            let (ev, _) = sym_eig(&gram).unwrap();
            for (s, l) in d.singular_values.iter().zip(&ev) {
                assert!((s * s - l).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sym_eig_cases() {
        let (v, _) = sym_eig(&DenseMatrix::identity(3)).unwrap();
        assert!(v.iter().all(|&l| (l - 1.0).abs() < 1e-12));

        let m = DenseMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let (v, q) = sym_eig(&m).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12);
        let rec = eig_reconstruct(&v, &q);
        assert!(rec.sub(&m).frobenius_norm() < 1e-10);
    }

    #[test]
    fn sym_eig_random_reconstruction() {
        for seed in 0..10 {
            let g = gaussian_matrix(6, 6, 100 + seed);
            let m = g.add(&g.transpose()).scale(0.5);
            let (v, q) = sym_eig(&m).unwrap();
            let err = eig_reconstruct(&v, &q).sub(&m).frobenius_norm();
            assert!(err <= 1e-10 * m.frobenius_norm());
        }
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let m = DenseMatrix::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(sym_eig(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn soft_threshold_componentwise() {
        assert_eq!(soft_threshold_vector(&[3.0, -1.0, 0.5], 1.0).unwrap(), vec![2.0, 0.0, 0.0]);
        let v = [0.3, -0.7, 2.0];
        assert_eq!(soft_threshold_vector(&v, 0.0).unwrap(), v.to_vec());
        assert_eq!(soft_threshold_vector(&[5.0, 5.0], 5.0).unwrap(), vec![0.0, 0.0]);
        assert!(soft_threshold_vector(&v, -0.1).is_err());
    }

    #[test]
    fn l1_projection_examples() {
        let p = project_l1_ball(&[3.0, 1.0], 2.0).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        assert_eq!(project_l1_ball(&[0.5, 0.5], 2.0).unwrap(), vec![0.5, 0.5]);
        let p = project_l1_ball(&[1.0, 1.0, 1.0, 1.0], 2.0).unwrap();
        for x in p {
            assert!((x - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn l1_projection_is_optimal() {
        // variational characterization against random feasible perturbations
        let mut r = rng::stream(9);
        for _ in 0..25 {
            let v = gaussian_vector(12, &mut r);
            let radius = 1.5;
            let out = project_l1_ball(&v, radius).unwrap();
            let l1: f64 = out.iter().map(|x| x.abs()).sum();
            assert!(l1 <= radius + 1e-9);
            let base: f64 = v.iter().zip(&out).map(|(a, b)| (a - b) * (a - b)).sum();
            let eps = 1e-4;
            for _ in 0..40 {
                let d = gaussian_vector(12, &mut r);
                let cand: Vec<f64> = out.iter().zip(&d).map(|(o, q)| o + eps * q).collect();
                let cl1: f64 = cand.iter().map(|x| x.abs()).sum();
                if cl1 <= radius {
                    let dist: f64 = v.iter().zip(&cand).map(|(a, b)| (a - b) * (a - b)).sum();
                    assert!(base <= dist + 1e-12);
                }
            }
        }
    }

    #[test]
    fn prox_trace_norm_cases() {
        let m = diag(&[3.0, 1.0]);
        let p = prox_trace_norm(&m, 1.0).unwrap();
        assert!(p.sub(&diag(&[2.0, 0.0])).frobenius_norm() < 1e-10);
        let g = gaussian_matrix(4, 3, 1);
        assert_eq!(prox_trace_norm(&g, 0.0).unwrap(), g);
        // rank one shrink
        let a = [0.6, 0.8];
        let b = [1.0, 0.0, 0.0];
        let m = DenseMatrix::outer(&a, &b).scale(2.0);
        let p = prox_trace_norm(&m, 0.5).unwrap();
        assert!(p.sub(&DenseMatrix::outer(&a, &b).scale(1.5)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn prox_trace_norm_shrinks_singular_values() {
        for seed in 0..10 {
            let m = gaussian_matrix(5, 5, 300 + seed);
            let tau = 0.5;
            let s0 = svd(&m).unwrap().singular_values;
            let s1 = svd(&prox_trace_norm(&m, tau).unwrap()).unwrap().singular_values;
            for (a, b) in s1.iter().zip(&s0) {
                assert!(*a <= (b - tau).max(0.0) + 1e-9);
            }
        }
    }

    #[test]
    fn prox_psd_trace_cases() {
        let p = prox_psd_trace(&diag(&[3.0, -1.0]), 1.0).unwrap();
        assert!(p.sub(&diag(&[2.0, 0.0])).frobenius_norm() < 1e-10);
        let m = diag(&[2.0, 0.5]);
        assert!(prox_psd_trace(&m, 0.0).unwrap().sub(&m).frobenius_norm() < 1e-12);
        let p = prox_psd_trace(&diag(&[-1.0, -1.0]), 0.7).unwrap();
        assert!(p.frobenius_norm() < 1e-12);
        // output PSD
        for seed in 0..10 {
            let g = gaussian_matrix(5, 5, 40 + seed);
            let m = g.add(&g.transpose()).scale(0.5);
            let p = prox_psd_trace(&m, 0.3).unwrap();
            let (v, _) = sym_eig(&p).unwrap();
            assert!(v.last().copied().unwrap() >= -1e-10);
        }
    }

    #[test]
    fn gaussian_matrix_determinism_and_moments() {
        assert_eq!(gaussian_matrix(7, 5, 123), gaussian_matrix(7, 5, 123));
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let n = 1000 * 100;
        for rep in 0..1000u64 {
            let m = gaussian_matrix(10, 10, rng::repeat_seed(77, rep));
            for &v in m.data() {
                sum += v;
                sumsq += v * v;
            }
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }
}
