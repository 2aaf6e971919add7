//! The k-support norm, the flat-atom gauge kappa_k, their duals, and the
//! exhaustive oracles used to test them.

use crate::combinatorics::{count_combinations, for_each_combination};
use crate::error::{Error, Result};
use crate::simplex;

/// Sparsity budget for a vector norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsityLevel(pub usize);

impl SparsityLevel {
    fn check(self, p: usize) -> Result<usize> {
        if self.0 == 0 || self.0 > p {
            return Err(Error::InvalidParameter(format!(
                "sparsity level must satisfy 1 <= k <= {p}, got {}",
                self.0
            )));
        }
        Ok(self.0)
    }
}

/// k-support norm value together with the split used by its closed form:
/// `head` holds the original indices whose entries enter quadratically,
/// `tail` those pooled into the averaged l1 term.
#[derive(Debug, Clone)]
pub struct KSupportBreakdown {
    pub value: f64,
    pub r: usize,
    pub head: Vec<usize>,
    pub tail: Vec<usize>,
    pub head_sq_sum: f64,
    pub tail_l1_sum: f64,
}

/// Slack applied to the boundary inequality of the r-search.
const R_SEARCH_SLACK: f64 = 1e-12;

/// k-support norm via its closed form.
pub fn theta_k(w: &[f64], k: SparsityLevel) -> Result<f64> {
    Ok(theta_k_detailed(w, k)?.value)
}

pub fn theta_k_detailed(w: &[f64], k: SparsityLevel) -> Result<KSupportBreakdown> {
    let p = w.len();
    let k = k.check(p)?;
    // order of original indices by magnitude, nonincreasing; ties by index
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        w[b].abs().partial_cmp(&w[a].abs()).unwrap().then(a.cmp(&b))
    });
    let mags: Vec<f64> = order.iter().map(|&i| w[i].abs()).collect();
    let scale = mags[0].max(1.0);
    // suffix sums: tail[i] = sum of mags[i..]
    let mut tail = vec![0.0; p + 1];
    for i in (0..p).rev() {
        tail[i] = tail[i + 1] + mags[i];
    }
    let mut chosen = None;
    for r in 0..k {
        // sum over sorted positions k-r-1 .. p-1 (0-indexed)
        let t = tail[k - r - 1] / (r + 1) as f64;
        let prev = if k - r - 1 == 0 { f64::INFINITY } else { mags[k - r - 2] };
        let next = mags[k - r - 1];
        if prev > t && t >= next - R_SEARCH_SLACK * scale {
            chosen = Some(r);
            break;
        }
    }
    // exact arithmetic guarantees a unique admissible r; floating point can
    // in principle reject all of them at a boundary, in which case the
    // all-pooled split is the safe evaluation
    let r = chosen.unwrap_or(k - 1);
    let head: Vec<usize> = order[..k - r - 1].to_vec();
    let head_sq_sum: f64 = mags[..k - r - 1].iter().map(|m| m * m).sum();
    let tail_l1_sum = tail[k - r - 1];
    let s = mags.iter().filter(|m| **m > 0.0).count();
    let tail_idx: Vec<usize> = order[k - r - 1..s.max(k - r - 1)].to_vec();
    let value = (head_sq_sum + tail_l1_sum * tail_l1_sum / (r + 1) as f64).sqrt();
    Ok(KSupportBreakdown { value, r, head, tail: tail_idx, head_sq_sum, tail_l1_sum })
}

/// Dual of the k-support norm: Euclidean norm of the k largest magnitudes.
pub fn theta_k_dual(s: &[f64], k: SparsityLevel) -> Result<f64> {
    let k = k.check(s.len())?;
    Ok(top_k_magnitudes(s, k).iter().map(|m| m * m).sum::<f64>().sqrt())
}

/// Gauge of the flat k-sparse atoms: sqrt(k) * max(||w||_inf, ||w||_1 / k).
pub fn kappa_k(w: &[f64], k: SparsityLevel) -> Result<f64> {
    let k = k.check(w.len())?;
    let linf = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    Ok((k as f64).sqrt() * linf.max(l1 / k as f64))
}

/// Dual of kappa_k: (1/sqrt(k)) * sum of the k largest magnitudes.
pub fn kappa_k_dual(s: &[f64], k: SparsityLevel) -> Result<f64> {
    let k = k.check(s.len())?;
    Ok(top_k_magnitudes(s, k).iter().sum::<f64>() / (k as f64).sqrt())
}

fn top_k_magnitudes(s: &[f64], k: usize) -> Vec<f64> {
    let mut mags: Vec<f64> = s.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    mags.truncate(k);
    mags
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualKind {
    Theta,
    Kappa,
}

const ENUMERATION_MAX_P: usize = 20;

/// Exact dual value by enumerating all C(p, k) supports.
pub fn dual_oracle_enumerate(s: &[f64], k: SparsityLevel, which: DualKind) -> Result<f64> {
    let p = s.len();
    let k = k.check(p)?;
    if p > ENUMERATION_MAX_P {
        return Err(Error::EnumerationGuard {
            candidates: count_combinations(p, k),
            limit: count_combinations(ENUMERATION_MAX_P, ENUMERATION_MAX_P / 2),
        });
    }
    let mut best = 0.0f64;
    for_each_combination(p, k, |idx| {
        let v = match which {
            DualKind::Theta => idx.iter().map(|&i| s[i] * s[i]).sum::<f64>().sqrt(),
            DualKind::Kappa => {
                idx.iter().map(|&i| s[i].abs()).sum::<f64>() / (k as f64).sqrt()
            }
        };
        best = best.max(v);
    });
    Ok(best)
}

const GAUGE_LP_MAX_P: usize = 8;
const GAUGE_LP_MAX_K: usize = 4;

/// kappa_k by linear programming over the enumerated flat atoms: minimizes the
/// total weight of a nonnegative atom combination reproducing `w`.
pub fn gauge_oracle_lp(w: &[f64], k: SparsityLevel) -> Result<f64> {
    let p = w.len();
    let k = k.check(p)?;
    if p > GAUGE_LP_MAX_P || k > GAUGE_LP_MAX_K {
        return Err(Error::InvalidParameter(format!(
            "gauge LP oracle limited to p <= {GAUGE_LP_MAX_P}, k <= {GAUGE_LP_MAX_K}, got p={p}, k={k}"
        )));
    }
    if w.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    // columns: every support x sign pattern, entries +-1/sqrt(k)
    let amp = 1.0 / (k as f64).sqrt();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for_each_combination(p, k, |idx| {
        for signs in 0..(1u32 << k) {
            let mut col = vec![0.0; p];
            for (bit, &i) in idx.iter().enumerate() {
                col[i] = if signs >> bit & 1 == 1 { -amp } else { amp };
            }
            columns.push(col);
        }
    });
    simplex::solve_min_sum(&columns, w)
}

/// A maximizing dual witness for the k-support norm built from its
/// subdifferential (free part set to zero). Satisfies theta_k_dual(alpha) <= 1
/// and <alpha, w> = theta_k(w) for any nonzero w.
pub fn theta_subgradient_witness(w: &[f64], k: SparsityLevel) -> Result<Vec<f64>> {
    let b = theta_k_detailed(w, k)?;
    if b.value == 0.0 {
        return Err(Error::InvalidParameter("subgradient witness needs w != 0".into()));
    }
    let mut alpha = vec![0.0; w.len()];
    for &i in &b.head {
        alpha[i] = w[i] / b.value;
    }
    let pooled = b.tail_l1_sum / ((b.r + 1) as f64 * b.value);
    for &i in &b.tail {
        alpha[i] = pooled * w[i].signum();
    }
    Ok(alpha)
}
