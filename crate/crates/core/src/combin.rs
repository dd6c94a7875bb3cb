//! Small combinatorics helpers shared by the enumerating routines.

/// Calls `f` with every k-subset of 0..n in lexicographic order.
/// Returning `false` from `f` stops the enumeration early.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { return };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomial() {
        for n in 0..9 {
            for k in 0..=n {
                let mut c = 0u128;
                let mut last: Option<Vec<usize>> = None;
                for_each_combination(n, k, |s| {
                    if let Some(prev) = &last {
                        assert!(prev.as_slice() < s);
                    }
                    last = Some(s.to_vec());
                    c += 1;
                    true
                });
                assert_eq!(c, binomial(n, k), "n={n} k={k}");
            }
        }
        assert_eq!(binomial(23, 3), 1771);
    }
}
