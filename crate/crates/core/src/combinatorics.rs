//! Support enumeration helpers shared by the exact norm oracles.

/// Number of k-subsets of an n-set, as f64 so guards can compare against
/// fractional limits without overflow.
pub fn count_combinations(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Calls `f` on every sorted k-subset of {0, ..., n-1} in lexicographic order.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_counts() {
        assert_eq!(count_combinations(6, 2), 15.0);
        assert_eq!(count_combinations(8, 4), 70.0);
        let mut n = 0;
        for_each_combination(6, 2, |_| n += 1);
        assert_eq!(n, 15);
    }

    #[test]
    fn combinations_are_lexicographic_and_sorted() {
        let mut all = Vec::new();
        for_each_combination(5, 3, |c| all.push(c.to_vec()));
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[9], vec![2, 3, 4]);
        for w in all.windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
