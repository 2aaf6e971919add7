//! Bi-truncated power iteration for the sparse rank-one subproblem, plus the
//! symmetric single-vector variant used by the PSD sparse-PCA path.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian_vector, sym_eig, svd, DenseMatrix};
use crate::matrix_norms::BlockSupport;
use crate::rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TpiConfig {
    /// relative-change stop tolerance on the Rayleigh sequence
    pub eps: f64,
    pub max_iters: usize,
    /// random initializations in addition to the warm start
    pub restarts: usize,
    /// initialize one run from the truncated dense top singular pair
    pub warm_start: bool,
    pub seed: u64,
}

impl Default for TpiConfig {
    fn default() -> Self {
        Self { eps: 1e-8, max_iters: 2000, restarts: 10, warm_start: true, seed: 0 }
    }
}

impl TpiConfig {
    pub fn with_restarts(restarts: usize, seed: u64) -> Self {
        Self { restarts, seed, ..Self::default() }
    }

    fn check(&self) -> Result<()> {
        if self.eps <= 0.0 || self.restarts < 1 {
            return Err(Error::InvalidParameter(
                "tpi config needs eps > 0 and restarts >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TpiResult {
    /// unit, at most k-sparse, embedded in the full dimension
    pub left: Vec<f64>,
    /// unit, at most q-sparse
    pub right: Vec<f64>,
    /// left^T A right (signed)
    pub rayleigh: f64,
    pub supports: BlockSupport,
    pub iterations: usize,
    pub converged: bool,
}

/// Keeps the k largest-magnitude components, zeroing the rest; ties broken by
/// smallest index.
pub fn truncate_top_k(v: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > v.len() {
        return Err(Error::InvalidParameter(format!(
            "truncation level must satisfy 1 <= k <= {}, got {k}",
            v.len()
        )));
    }
    if k == v.len() {
        return Ok(v.to_vec());
    }
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().partial_cmp(&v[a].abs()).unwrap().then(a.cmp(&b)));
    let mut out = vec![0.0; v.len()];
    for &i in &idx[..k] {
        out[i] = v[i];
    }
    Ok(out)
}

struct Run {
    left: Vec<f64>,
    right: Vec<f64>,
    rayleigh: f64,
    iterations: usize,
    converged: bool,
}

/// One bi-truncated power run from the given starting right factor; redraws
/// the start (up to a retry cap) when truncation annihilates an iterate.
fn run_from(
    a_mat: &DenseMatrix,
    k: usize,
    q: usize,
    cfg: &TpiConfig,
    mut b: Vec<f64>,
    stream: &mut impl Rng,
) -> Run {
    let m2 = a_mat.cols();
    const DEGENERATE_RETRIES: usize = 8;
    let mut retries = 0;
    let mut iterations = 0;
    loop {
        normalize(&mut b);
        let mut a = vec![0.0; a_mat.rows()];
        let mut prev: Option<f64> = None;
        let mut degenerate = false;
        let mut converged = false;
        while iterations < cfg.max_iters {
            iterations += 1;
            a = truncate_top_k(&a_mat.matvec(&b), k).expect("valid k");
            if !normalize(&mut a) {
                degenerate = true;
                break;
            }
            b = truncate_top_k(&a_mat.matvec_t(&a), q).expect("valid q");
            if !normalize(&mut b) {
                degenerate = true;
                break;
            }
            let ray: f64 = a.iter().zip(a_mat.matvec(&b)).map(|(x, y)| x * y).sum();
            if let Some(p) = prev {
                debug_assert!(
                    ray.abs() >= p.abs() - 1e-12 * p.abs().max(1.0),
                    "bi-truncated power step must not decrease |rayleigh|: {p} -> {ray}"
                );
                if p.abs() < 1e-300 {
                    // stop-rule denominator vanished
                    return Run { left: a, right: b, rayleigh: ray, iterations, converged: false };
                }
                if (ray - p).abs() / p.abs() <= cfg.eps {
                    prev = Some(ray);
                    converged = true;
                    break;
                }
            }
            prev = Some(ray);
        }
        if degenerate && retries < DEGENERATE_RETRIES {
            retries += 1;
            b = gaussian_vector(m2, stream);
            continue;
        }
        let rayleigh = prev.unwrap_or(0.0);
        return Run { left: a, right: b, rayleigh, iterations, converged };
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return false;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    true
}

/// Best sparse rank-one Rayleigh pair over a warm start plus random restarts.
pub fn ssvd_tpi(a_mat: &DenseMatrix, k: usize, q: usize, cfg: &TpiConfig) -> Result<TpiResult> {
    cfg.check()?;
    let (m1, m2) = (a_mat.rows(), a_mat.cols());
    if k == 0 || k > m1 || q == 0 || q > m2 {
        return Err(Error::InvalidParameter(format!(
            "sparsity budgets ({k}, {q}) out of range for {m1}x{m2}"
        )));
    }
    if a_mat.data().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidParameter("tpi input must not be all zero".into()));
    }
    let warm: Option<Vec<f64>> = if cfg.warm_start {
        let d = svd(a_mat)?;
        let v1: Vec<f64> = (0..m2).map(|j| d.right_vectors.get(j, 0)).collect();
        Some(truncate_top_k(&v1, q)?)
    } else {
        None
    };
    let n_runs = cfg.restarts + usize::from(warm.is_some());
    let runs: Vec<Run> = (0..n_runs)
        .into_par_iter()
        .map(|idx| {
            let mut stream = rng::stream(rng::splitmix64(cfg.seed ^ (idx as u64)));
            let b0 = match (&warm, idx) {
                (Some(w), 0) => w.clone(),
                _ => gaussian_vector(m2, &mut stream),
            };
            run_from(a_mat, k, q, cfg, b0, &mut stream)
        })
        .collect();
    // deterministic reduction: best |rayleigh|, ties to the earliest run
    let mut best = 0usize;
    for i in 1..runs.len() {
        if runs[i].rayleigh.abs() > runs[best].rayleigh.abs() {
            best = i;
        }
    }
    let total_iters: usize = runs.iter().map(|r| r.iterations).sum();
    let any_converged = runs[best].converged;
    let Run { mut left, mut right, mut rayleigh, .. } =
        runs.into_iter().nth(best).expect("nonempty runs");
    // sign convention: largest-magnitude entry of the left factor positive
    if let Some(pivot) = left
        .iter()
        .enumerate()
        .max_by(|(i, x), (j, y)| x.abs().partial_cmp(&y.abs()).unwrap().then(j.cmp(i)))
        .map(|(i, _)| i)
    {
        if left[pivot] < 0.0 {
            for v in left.iter_mut() {
                *v = -*v;
            }
            for v in right.iter_mut() {
                *v = -*v;
            }
        }
    }
    debug_assert!({
        let r: f64 = left.iter().zip(a_mat.matvec(&right)).map(|(x, y)| x * y).sum();
        (r - rayleigh).abs() <= 1e-10 * rayleigh.abs().max(1.0)
    });
    rayleigh = left.iter().zip(a_mat.matvec(&right)).map(|(x, y)| x * y).sum();
    let supports = BlockSupport::padded_from_vectors(&left, &right, k, q, m1, m2);
    Ok(TpiResult { left, right, rayleigh, supports, iterations: total_iters, converged: any_converged })
}

/// Symmetric truncated power iteration: maximizes a^T S a over unit k-sparse
/// vectors. Indefinite inputs are shifted PSD internally so every power step
/// is an ascent step; the reported Rayleigh value is for S itself.
pub fn spca_tpi_psd(s: &DenseMatrix, k: usize, cfg: &TpiConfig) -> Result<(Vec<f64>, f64)> {
    cfg.check()?;
    s.check_symmetric(1e-10)?;
    let p = s.rows();
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!("k must satisfy 1 <= k <= {p}, got {k}")));
    }
    let (evals, evecs) = sym_eig(s)?;
    let shift = (-evals.last().copied().unwrap_or(0.0)).max(0.0) * (1.0 + 1e-9) + 1e-12;
    let m = {
        let mut m = s.clone();
        for i in 0..p {
            m.set(i, i, m.get(i, i) + shift);
        }
        m
    };
    let warm: Vec<f64> = (0..p).map(|i| evecs.get(i, 0)).collect();
    let n_runs = cfg.restarts + usize::from(cfg.warm_start);
    let runs: Vec<(Vec<f64>, f64, bool)> = (0..n_runs)
        .into_par_iter()
        .map(|idx| {
            let mut stream = rng::stream(rng::splitmix64(cfg.seed ^ (idx as u64)));
            let mut a = if cfg.warm_start && idx == 0 {
                warm.clone()
            } else {
                gaussian_vector(p, &mut stream)
            };
            let mut retries = 0;
            let mut prev: Option<f64> = None;
            let mut converged = false;
            let mut iters = 0;
            loop {
                if !normalize(&mut a) {
                    a = gaussian_vector(p, &mut stream);
                    continue;
                }
                a = truncate_top_k(&m.matvec(&a), k).expect("valid k");
                if a.iter().all(|&v| v == 0.0) {
                    if retries < 8 {
                        retries += 1;
                        a = gaussian_vector(p, &mut stream);
                        continue;
                    }
                    break;
                }
                normalize(&mut a);
                let ray = m.quad_form(&a, &a);
                if let Some(pv) = prev {
                    debug_assert!(ray >= pv - 1e-10 * pv.abs().max(1.0));
                    if pv.abs() < 1e-300 {
                        break;
                    }
                    if (ray - pv).abs() / pv.abs() <= cfg.eps {
                        converged = true;
                        break;
                    }
                }
                prev = Some(ray);
                iters += 1;
                if iters >= cfg.max_iters {
                    break;
                }
            }
            let ray_s = s.quad_form(&a, &a);
            (a, ray_s, converged)
        })
        .collect();
    let mut best = 0usize;
    for i in 1..runs.len() {
        if runs[i].1 > runs[best].1 {
            best = i;
        }
    }
    let (mut a, ray, _) = runs.into_iter().nth(best).expect("nonempty");
    if let Some(pivot) = a
        .iter()
        .enumerate()
        .max_by(|(i, x), (j, y)| x.abs().partial_cmp(&y.abs()).unwrap().then(j.cmp(i)))
        .map(|(i, _)| i)
    {
        if a[pivot] < 0.0 {
            for v in a.iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok((a, ray))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::make_flat_atom;
    use crate::linalg::gaussian_matrix;

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate_top_k(&[3.0, -5.0, 1.0], 1).unwrap(), vec![0.0, -5.0, 0.0]);
        let v = [0.4, -0.2, 7.0];
        assert_eq!(truncate_top_k(&v, 3).unwrap(), v.to_vec());
        assert_eq!(truncate_top_k(&[2.0, 2.0, 1.0], 1).unwrap(), vec![2.0, 0.0, 0.0]);
        assert!(truncate_top_k(&v, 0).is_err());
        assert!(truncate_top_k(&v, 4).is_err());
    }

    #[test]
    fn recovers_sparse_rank_one() {
        let atom =
            make_flat_atom(12, 10, 3, 2, &[1, 4, 7], &[0, 5], &[1.0, -1.0, 1.0], &[1.0, 1.0])
                .unwrap();
        let a_mat = atom.materialize().scale(7.0);
        let res = ssvd_tpi(&a_mat, 3, 2, &TpiConfig::default()).unwrap();
        assert!((res.rayleigh.abs() - 7.0).abs() < 1e-9);
        assert_eq!(res.supports.rows(), &[1, 4, 7]);
        assert_eq!(res.supports.cols(), &[0, 5]);
        assert!(res.converged);
    }

    #[test]
    fn diagonal_case() {
        let mut d = DenseMatrix::zeros(3, 3);
        for (i, v) in [5.0, 3.0, 1.0].iter().enumerate() {
            d.set(i, i, *v);
        }
        let res = ssvd_tpi(&d, 1, 1, &TpiConfig::default()).unwrap();
        assert!((res.rayleigh - 5.0).abs() < 1e-10);
        assert_eq!(res.supports.rows(), &[0]);
        assert_eq!(res.supports.cols(), &[0]);
    }

    #[test]
    fn feasibility_and_normalization() {
        for seed in 0..20 {
            let a_mat = gaussian_matrix(8, 7, 900 + seed);
            let cfg = TpiConfig { seed, ..TpiConfig::default() };
            let res = ssvd_tpi(&a_mat, 3, 2, &cfg).unwrap();
            let nl: f64 = res.left.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nr: f64 = res.right.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((nl - 1.0).abs() < 1e-12 && (nr - 1.0).abs() < 1e-12);
            assert!(res.left.iter().filter(|v| **v != 0.0).count() <= 3);
            assert!(res.right.iter().filter(|v| **v != 0.0).count() <= 2);
            let ray: f64 =
                res.left.iter().zip(a_mat.matvec(&res.right)).map(|(x, y)| x * y).sum();
            assert!((ray - res.rayleigh).abs() < 1e-10);
        }
    }

    #[test]
    fn determinism_under_fixed_seed() {
        let a_mat = gaussian_matrix(10, 10, 5);
        let cfg = TpiConfig { restarts: 7, seed: 42, ..TpiConfig::default() };
        let r1 = ssvd_tpi(&a_mat, 3, 3, &cfg).unwrap();
        let r2 = ssvd_tpi(&a_mat, 3, 3, &cfg).unwrap();
        assert_eq!(r1.left, r2.left);
        assert_eq!(r1.right, r2.right);
        assert_eq!(r1.rayleigh, r2.rayleigh);
    }

    #[test]
    fn rejects_zero_input() {
        assert!(ssvd_tpi(&DenseMatrix::zeros(3, 3), 1, 1, &TpiConfig::default()).is_err());
    }

    #[test]
    fn psd_variant_cases() {
        // rank-one recovery up to sign
        let mut a = vec![0.0; 8];
        a[2] = (0.5f64).sqrt();
        a[5] = -(0.5f64).sqrt();
        let s = DenseMatrix::outer(&a, &a).scale(3.0);
        let (v, ray) = spca_tpi_psd(&s, 2, &TpiConfig::default()).unwrap();
        assert!((ray - 3.0).abs() < 1e-9);
        let dot: f64 = v.iter().zip(&a).map(|(x, y)| x * y).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-9);

        let mut d = DenseMatrix::zeros(3, 3);
        for (i, x) in [5.0, 3.0, 1.0].iter().enumerate() {
            d.set(i, i, *x);
        }
        let (v, ray) = spca_tpi_psd(&d, 2, &TpiConfig::default()).unwrap();
        assert!((ray - 5.0).abs() < 1e-10);
        assert!(v[0] != 0.0);

        let (_, ray) = spca_tpi_psd(&DenseMatrix::identity(6), 3, &TpiConfig::default()).unwrap();
        assert!((ray - 1.0).abs() < 1e-9);

        let m = DenseMatrix::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(spca_tpi_psd(&m, 1, &TpiConfig::default()).is_err());
    }

    #[test]
    fn psd_variant_handles_indefinite_input() {
        // negative definite: best k-sparse Rayleigh is the largest eigenvalue
        let mut d = DenseMatrix::zeros(3, 3);
        for (i, x) in [-1.0, -2.0, -3.0].iter().enumerate() {
            d.set(i, i, *x);
        }
        let (_, ray) = spca_tpi_psd(&d, 2, &TpiConfig::default()).unwrap();
        assert!((ray + 1.0).abs() < 1e-9);
    }
}
