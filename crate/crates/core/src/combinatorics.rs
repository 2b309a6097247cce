//! Binomial coefficients and the colexicographic k-subset numbering.

use crate::error::{invalid, Result};

/// `C(n, k)` with overflow detection.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is always integral at this point.
        let num = acc.checked_mul(u128::from(n - i))?;
        acc = num / u128::from(i + 1);
    }
    Some(acc)
}

pub(crate) fn binomial_checked(n: usize, k: usize) -> Result<u128> {
    binomial(n as u64, k as u64)
        .ok_or_else(|| invalid(format!("C({n}, {k}) overflows 128-bit counting")))
}

/// Rank of a sorted k-subset in colexicographic order: `sum_i C(c_i, i + 1)`.
pub fn colex_rank(subset: &[usize]) -> u128 {
    subset
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c as u64, i as u64 + 1).unwrap_or(u128::MAX))
        .sum()
}

/// Inverse of [`colex_rank`]: the `rank`-th k-subset of `{0..n-1}`, sorted ascending.
pub fn colex_unrank(mut rank: u128, n: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    let mut upper = n;
    for slot in (0..k).rev() {
        // largest c < upper with C(c, slot + 1) <= rank
        let mut c = upper - 1;
        loop {
            let b = binomial(c as u64, slot as u64 + 1).unwrap_or(u128::MAX);
            if b <= rank {
                rank -= b;
                break;
            }
            c -= 1;
        }
        out[slot] = c;
        upper = c;
    }
    out
}

/// Iterates all k-subsets of `{0..n-1}` in colexicographic order.
pub fn colex_subsets(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        // advance: find the lowest position that can be bumped
        let next = {
            let mut s = out.clone();
            let mut i = 0;
            loop {
                if i == k {
                    break None;
                }
                let limit = if i + 1 < k { s[i + 1] } else { n };
                if s[i] + 1 < limit {
                    s[i] += 1;
                    for (j, slot) in s.iter_mut().enumerate().take(i) {
                        *slot = j;
                    }
                    break Some(s);
                }
                i += 1;
            }
        };
        current = next;
        Some(out)
    })
}

/// Size of the intersection of two sorted index lists.
pub(crate) fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
