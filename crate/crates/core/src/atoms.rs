//! Atoms, atomic decompositions, experiment ground truths, and the worked
//! counterexample fixtures.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian_vector, DenseMatrix};
use crate::rng;

const UNIT_NORM_TOL: f64 = 1e-12;

/// A rank-one matrix a b^T given by two sparse unit vectors. `flat` marks
/// atoms whose nonzero entries all share the same magnitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Atom {
    left: Vec<f64>,
    right: Vec<f64>,
    left_support: Vec<usize>,
    right_support: Vec<usize>,
    flat: bool,
}

impl Atom {
    /// Builds an atom from dense factor vectors, deriving supports and the
    /// flatness flag. Both factors must have unit Euclidean norm.
    pub fn new(left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        for (name, v) in [("left", &left), ("right", &right)] {
            if v.is_empty() || !v.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite(format!("{name} factor must be finite and nonempty")));
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{name} factor must have unit norm, got {norm}"
                )));
            }
        }
        let left_support = support_of(&left);
        let right_support = support_of(&right);
        let flat = is_flat(&left, &left_support) && is_flat(&right, &right_support);
        Ok(Self { left, right, left_support, right_support, flat })
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    pub fn left_support(&self) -> &[usize] {
        &self.left_support
    }

    pub fn right_support(&self) -> &[usize] {
        &self.right_support
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.left.len(), self.right.len())
    }

    /// Sparsity budgets actually used.
    pub fn support_sizes(&self) -> (usize, usize) {
        (self.left_support.len(), self.right_support.len())
    }

    pub fn materialize(&self) -> DenseMatrix {
        DenseMatrix::outer(&self.left, &self.right)
    }

    /// Negate both the stored factor signs so the materialized matrix flips.
    pub fn negated(&self) -> Self {
        let mut a = self.clone();
        for v in a.left.iter_mut() {
            *v = -*v;
        }
        a
    }

    /// Whether this atom is symmetric (left factor equals right factor).
    pub fn is_symmetric(&self) -> bool {
        self.left.len() == self.right.len()
            && self.left.iter().zip(&self.right).all(|(a, b)| a == b)
    }
}

fn support_of(v: &[f64]) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, _)| i).collect()
}

fn is_flat(v: &[f64], support: &[usize]) -> bool {
    if support.is_empty() {
        return false;
    }
    let amp = 1.0 / (support.len() as f64).sqrt();
    support.iter().all(|&i| (v[i].abs() - amp).abs() <= UNIT_NORM_TOL)
}

/// Flat atom on explicit supports with +-1 sign patterns.
pub fn make_flat_atom(
    m1: usize,
    m2: usize,
    k: usize,
    q: usize,
    left_support: &[usize],
    right_support: &[usize],
    left_signs: &[f64],
    right_signs: &[f64],
) -> Result<Atom> {
    if left_support.len() != k || right_support.len() != q {
        return Err(Error::InvalidParameter(format!(
            "support sizes ({}, {}) do not match budgets ({k}, {q})",
            left_support.len(),
            right_support.len()
        )));
    }
    if left_signs.len() != k || right_signs.len() != q {
        return Err(Error::InvalidParameter("one sign per support entry required".into()));
    }
    if left_signs.iter().chain(right_signs).any(|s| s.abs() != 1.0) {
        return Err(Error::InvalidParameter("signs must be +-1".into()));
    }
    let left = flat_vector(m1, k, left_support, left_signs)?;
    let right = flat_vector(m2, q, right_support, right_signs)?;
    Atom::new(left, right)
}

fn flat_vector(m: usize, k: usize, support: &[usize], signs: &[f64]) -> Result<Vec<f64>> {
    let mut v = vec![0.0; m];
    let amp = 1.0 / (k as f64).sqrt();
    for (&i, &s) in support.iter().zip(signs) {
        if i >= m {
            return Err(Error::InvalidParameter(format!("support index {i} out of range {m}")));
        }
        if v[i] != 0.0 {
            return Err(Error::InvalidParameter(format!("duplicate support index {i}")));
        }
        v[i] = s * amp;
    }
    Ok(v)
}

/// Ordered list of weighted atoms; weights positive and nonincreasing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomicDecomposition {
    terms: Vec<(f64, Atom)>,
}

impl AtomicDecomposition {
    pub fn new(mut terms: Vec<(f64, Atom)>) -> Result<Self> {
        if terms.iter().any(|(w, _)| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidParameter("decomposition weights must be positive".into()));
        }
        terms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        Ok(Self { terms })
    }

    pub fn empty() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[(f64, Atom)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|(w, _)| *w).collect()
    }

    pub fn materialize(&self, m1: usize, m2: usize) -> DenseMatrix {
        let mut z = DenseMatrix::zeros(m1, m2);
        for (w, a) in &self.terms {
            for &i in a.left_support() {
                for &j in a.right_support() {
                    let v = z.get(i, j) + w * a.left()[i] * a.right()[j];
                    z.set(i, j, v);
                }
            }
        }
        z
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("decomposition serializes")
    }
}

/// Layout recipe for synthetic ground truths: r atoms with consecutive
/// support windows sharing `overlap` indices between neighbours.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthSpec {
    pub m1: usize,
    pub m2: usize,
    pub k: usize,
    pub q: usize,
    /// number of atoms
    pub r: usize,
    /// indices shared between consecutive atom supports
    pub overlap: usize,
    /// flat atoms (all nonzero factor entries of equal magnitude)
    pub flat: bool,
    pub seed: u64,
    /// randomize the +-1 pattern instead of all-positive entries
    #[serde(default)]
    pub random_signs: bool,
    /// place supports at random disjoint-capable positions instead of
    /// consecutive windows
    #[serde(default)]
    pub randomize_supports: bool,
}

impl GroundTruthSpec {
    pub fn atom(m1: usize, m2: usize, k: usize, q: usize, seed: u64) -> Self {
        Self {
            m1,
            m2,
            k,
            q,
            r: 1,
            overlap: 0,
            flat: true,
            seed,
            random_signs: false,
            randomize_supports: false,
        }
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("m1", self.m1), ("m2", self.m2), ("k", self.k), ("q", self.q), ("r", self.r)] {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.k > self.m1 || self.q > self.m2 {
            return Err(Error::InvalidParameter("sparsity exceeds dimensions".into()));
        }
        if self.overlap >= self.k.min(self.q) && self.r > 1 {
            return Err(Error::InvalidParameter(format!(
                "overlap {} must be smaller than min(k, q) = {}",
                self.overlap,
                self.k.min(self.q)
            )));
        }
        let need1 = self.r * self.k - (self.r - 1) * self.overlap;
        let need2 = self.r * self.q - (self.r - 1) * self.overlap;
        if need1 > self.m1 || need2 > self.m2 {
            return Err(Error::InvalidParameter(format!(
                "supports do not fit: need ({need1}, {need2}) within ({}, {})",
                self.m1, self.m2
            )));
        }
        Ok(())
    }
}

/// Sum of r unit-weight atoms laid out per the spec, plus the generating
/// decomposition. Deterministic in `spec.seed`.
pub fn sample_ground_truth(spec: &GroundTruthSpec) -> Result<(DenseMatrix, AtomicDecomposition)> {
    spec.check()?;
    let mut r = rng::stream(spec.seed);
    let (row_starts, col_starts) = if spec.randomize_supports {
        (random_starts(spec.m1, spec.k, spec.r, &mut r), random_starts(spec.m2, spec.q, spec.r, &mut r))
    } else {
        let step1 = spec.k - spec.overlap;
        let step2 = spec.q - spec.overlap;
        (
            (0..spec.r).map(|t| t * step1).collect::<Vec<_>>(),
            (0..spec.r).map(|t| t * step2).collect::<Vec<_>>(),
        )
    };
    let mut terms = Vec::with_capacity(spec.r);
    for t in 0..spec.r {
        let li: Vec<usize> = (row_starts[t]..row_starts[t] + spec.k).collect();
        let ri: Vec<usize> = (col_starts[t]..col_starts[t] + spec.q).collect();
        let atom = if spec.flat {
            let ls = draw_signs(spec.k, spec.random_signs, &mut r);
            let rs = draw_signs(spec.q, spec.random_signs, &mut r);
            make_flat_atom(spec.m1, spec.m2, spec.k, spec.q, &li, &ri, &ls, &rs)?
        } else {
            let mut left = vec![0.0; spec.m1];
            let lv = normalized_gaussian(spec.k, &mut r);
            for (v, &i) in lv.iter().zip(&li) {
                left[i] = *v;
            }
            let mut right = vec![0.0; spec.m2];
            let rv = normalized_gaussian(spec.q, &mut r);
            for (v, &j) in rv.iter().zip(&ri) {
                right[j] = *v;
            }
            Atom::new(left, right)?
        };
        terms.push((1.0, atom));
    }
    let d = AtomicDecomposition::new(terms)?;
    let z = d.materialize(spec.m1, spec.m2);
    Ok((z, d))
}

fn draw_signs(n: usize, random: bool, r: &mut impl Rng) -> Vec<f64> {
    if random {
        (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect()
    } else {
        vec![1.0; n]
    }
}

fn normalized_gaussian(n: usize, r: &mut impl Rng) -> Vec<f64> {
    loop {
        let v = gaussian_vector(n, r);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn random_starts(m: usize, k: usize, r: usize, rng: &mut impl Rng) -> Vec<usize> {
    // disjoint random windows; the overlap parameter is ignored on this path
    let mut starts = Vec::with_capacity(r);
    let slot = m / r;
    for t in 0..r {
        let lo = t * slot;
        let hi = lo + slot - k;
        starts.push(if hi > lo { lo + rng.random_range(0..=hi - lo) } else { lo });
    }
    starts
}

/// Spiked-covariance sample: n draws from N(0, sigma_star + sigma^2 I) and the
/// empirical second-moment matrix.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    /// n x p sample matrix, one observation per row
    pub samples: DenseMatrix,
    pub sigma_star: DenseMatrix,
    pub sigma_hat: DenseMatrix,
    /// the spike factors a_i as rows
    pub factors: Vec<Vec<f64>>,
}

pub fn sample_covariance_model(
    p: usize,
    n: usize,
    k: usize,
    blocks: usize,
    overlap: usize,
    sigma: f64,
    seed: u64,
) -> Result<CovarianceModel> {
    if p == 0 || n == 0 || k == 0 || blocks == 0 || k > p {
        return Err(Error::InvalidParameter("dimensions must be positive and k <= p".into()));
    }
    if blocks > 1 && overlap >= k {
        return Err(Error::InvalidParameter("overlap must be smaller than k".into()));
    }
    if blocks * k - (blocks - 1) * overlap > p {
        return Err(Error::InvalidParameter("spike supports do not fit in p".into()));
    }
    if sigma < 0.0 {
        return Err(Error::InvalidParameter("sigma must be nonnegative".into()));
    }
    let amp = 1.0 / (k as f64).sqrt();
    let mut factors = Vec::with_capacity(blocks);
    let mut sigma_star = DenseMatrix::zeros(p, p);
    for t in 0..blocks {
        let start = t * (k - overlap);
        let mut a = vec![0.0; p];
        for i in start..start + k {
            a[i] = amp;
        }
        for i in start..start + k {
            for j in start..start + k {
                let v = sigma_star.get(i, j) + a[i] * a[j];
                sigma_star.set(i, j, v);
            }
        }
        factors.push(a);
    }
    // covariance square root via the factor form: x = sum_i a_i g_i + sigma g
    let mut r = rng::stream(seed);
    let mut samples = DenseMatrix::zeros(n, p);
    for row in 0..n {
        let mut x = gaussian_vector(p, &mut r);
        for v in x.iter_mut() {
            *v *= sigma;
        }
        for a in &factors {
            let g: f64 = r.sample(rand_distr::StandardNormal);
            for (xi, ai) in x.iter_mut().zip(a) {
                *xi += g * ai;
            }
        }
        for (j, v) in x.into_iter().enumerate() {
            samples.set(row, j, v);
        }
    }
    // empirical second moment (uncentered, as used by the experiments)
    let mut sigma_hat = DenseMatrix::zeros(p, p);
    for row in 0..n {
        let x = samples.row(row).to_vec();
        for i in 0..p {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..p {
                let v = sigma_hat.get(i, j) + x[i] * x[j];
                sigma_hat.set(i, j, v);
            }
        }
    }
    sigma_hat = sigma_hat.scale(1.0 / n as f64);
    // enforce exact symmetry against rounding drift
    sigma_hat = sigma_hat.symmetrized();
    Ok(CovarianceModel { samples, sigma_star, sigma_hat, factors })
}

/// Worked counterexample matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureName {
    /// 3x3 all-ones
    Ones3,
    /// 4x4 all-halves
    HalfOnes4,
    /// the PSD matrix [[1,1,0],[1,2,1],[0,1,1]]
    PsdExample,
}

impl std::str::FromStr for FixtureName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ones3" => Ok(FixtureName::Ones3),
            "half_ones4" => Ok(FixtureName::HalfOnes4),
            "psd_example" => Ok(FixtureName::PsdExample),
            other => Err(Error::InvalidParameter(format!("unknown fixture '{other}'"))),
        }
    }
}

pub fn fixture(name: FixtureName) -> DenseMatrix {
    match name {
        FixtureName::Ones3 => DenseMatrix::from_fn(3, 3, |_, _| 1.0),
        FixtureName::HalfOnes4 => DenseMatrix::from_fn(4, 4, |_, _| 0.5),
        FixtureName::PsdExample => {
            DenseMatrix::new(3, 3, vec![1.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 1.0]).unwrap()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;

    #[test]
    fn flat_atom_examples() {
        let a = make_flat_atom(2, 2, 1, 1, &[0], &[0], &[1.0], &[1.0]).unwrap();
        let m = a.materialize();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.count_nonzeros(), 1);

        let a = make_flat_atom(4, 4, 2, 2, &[0, 1], &[0, 1], &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        let m = a.materialize();
        assert!((m.get(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(m.count_nonzeros(), 4);
        assert!((m.frobenius_norm() - 1.0).abs() < 1e-12);
        // entrywise l1 norm of a flat atom is sqrt(kq)
        assert!((m.entry_l1_norm() - 2.0).abs() < 1e-12);
        assert!(a.is_flat());

        assert!(make_flat_atom(4, 4, 2, 2, &[0], &[0, 1], &[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn ground_truth_examples() {
        let (z, d) = sample_ground_truth(&GroundTruthSpec::atom(20, 20, 3, 3, 1)).unwrap();
        assert_eq!(d.len(), 1);
        assert!((z.frobenius_norm() - 1.0).abs() < 1e-12);

        let spec = GroundTruthSpec { r: 3, ..GroundTruthSpec::atom(1000, 1000, 10, 10, 2) };
        let (z, d) = sample_ground_truth(&spec).unwrap();
        assert_eq!(z.count_nonzeros(), 300);
        assert_eq!(d.len(), 3);

        let spec = GroundTruthSpec { r: 3, overlap: 3, ..GroundTruthSpec::atom(40, 40, 10, 10, 2) };
        let (_, d) = sample_ground_truth(&spec).unwrap();
        let supports: Vec<&[usize]> = d.terms().iter().map(|(_, a)| a.left_support()).collect();
        let expect: Vec<Vec<usize>> =
            vec![(0..10).collect(), (7..17).collect(), (14..24).collect()];
        for s in &supports {
            assert!(expect.iter().any(|e| e.as_slice() == *s));
        }
    }

    #[test]
    fn ground_truth_determinism_and_materialization() {
        let spec = GroundTruthSpec {
            r: 2,
            overlap: 1,
            flat: false,
            random_signs: true,
            ..GroundTruthSpec::atom(15, 12, 4, 3, 99)
        };
        let (z1, d1) = sample_ground_truth(&spec).unwrap();
        let (z2, _) = sample_ground_truth(&spec).unwrap();
        assert_eq!(z1, z2);
        let err = d1.materialize(15, 12).sub(&z1).frobenius_norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn covariance_model_shape_and_psd() {
        let m = sample_covariance_model(30, 50, 5, 3, 2, 0.8, 7).unwrap();
        assert!((m.sigma_star.trace() - 3.0).abs() < 1e-10);
        assert_eq!(m.sigma_hat.symmetry_deviation(), 0.0);
        let (ev, _) = sym_eig(&m.sigma_star).unwrap();
        assert!(ev.last().copied().unwrap() >= -1e-10);
        // paper-scale setting constructible
        sample_covariance_model(200, 80, 10, 3, 3, 0.8, 0).unwrap();
        // determinism
        let m2 = sample_covariance_model(30, 50, 5, 3, 2, 0.8, 7).unwrap();
        assert_eq!(m.samples, m2.samples);
    }

    #[test]
    fn covariance_model_consistency() {
        // law of large numbers: empirical second moment approaches the truth
        let p = 20;
        let m = sample_covariance_model(p, 10_000, 4, 2, 1, 0.8, 3).unwrap();
        let mut truth = m.sigma_star.clone();
        for i in 0..p {
            truth.set(i, i, truth.get(i, i) + 0.64);
        }
        let rel = m.sigma_hat.sub(&truth).frobenius_norm() / truth.frobenius_norm();
        assert!(rel < 0.1, "relative error {rel}");
    }

    #[test]
    fn fixtures() {
        let z = fixture(FixtureName::Ones3);
        assert_eq!(z.data(), &[1.0; 9]);
        let z = fixture(FixtureName::HalfOnes4);
        assert_eq!(z.data(), &[0.5; 16]);
        let z = fixture(FixtureName::PsdExample);
        assert_eq!(z.get(1, 1), 2.0);
        assert!("nope".parse::<FixtureName>().is_err());
        let (ev, _) = sym_eig(&z).unwrap();
        assert!(ev.last().copied().unwrap() >= -1e-12);
    }

    #[test]
    fn decomposition_ordering_and_json() {
        let a1 = make_flat_atom(3, 3, 1, 1, &[0], &[0], &[1.0], &[1.0]).unwrap();
        let a2 = make_flat_atom(3, 3, 1, 1, &[1], &[1], &[1.0], &[1.0]).unwrap();
        let d = AtomicDecomposition::new(vec![(0.5, a1), (2.0, a2)]).unwrap();
        assert_eq!(d.weights(), vec![2.0, 0.5]);
        let js = d.to_json();
        let back: AtomicDecomposition = serde_json::from_str(&js).unwrap();
        assert_eq!(back.weights(), d.weights());
        assert!(AtomicDecomposition::new(vec![(
            -1.0,
            make_flat_atom(3, 3, 1, 1, &[0], &[0], &[1.0], &[1.0]).unwrap()
        )])
        .is_err());
    }
}
