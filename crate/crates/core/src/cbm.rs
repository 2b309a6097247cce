//! Perfectly balanced binary hierarchies for the constant block model.
//!
//! A hierarchy on `n` objects with leaf clusters of size `m` has depth
//! `L = log2(n / m)`. Each object carries the code of its leaf cluster; bit
//! `L - 1 - t` of the code says which child it falls into at depth `t`. The
//! similarity of two objects is `mu * (lca_depth + 1)`.
//!
//! Only off-diagonal entries are vectorized: the diagonal is the same for
//! every hierarchy and carries no information about which one generated the
//! data. Both symmetric copies are kept, so the ambient dimension is `n (n - 1)`.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, colex_subsets};
use crate::error::{invalid, Result, SnmError};

/// Enumeration refuses families with more hierarchies than this.
pub const MAX_HIERARCHIES: u128 = 1_000_000;
pub const MAX_OBJECTS: usize = 16;

/// Object count and leaf-cluster size of a balanced CBM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CbmParams {
    pub n: usize,
    pub m: usize,
}

impl CbmParams {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if !n.is_power_of_two() || !m.is_power_of_two() {
            return Err(invalid(format!("n = {n} and m = {m} must be powers of two")));
        }
        if m > n {
            return Err(invalid(format!("m = {m} exceeds n = {n}")));
        }
        Ok(Self { n, m })
    }

    pub fn depth(&self) -> u32 {
        (self.n / self.m).trailing_zeros()
    }

    /// Ambient dimension of the vectorized similarity matrix.
    pub fn dimension(&self) -> usize {
        self.n * (self.n - 1)
    }

    /// Number of balanced hierarchies: `H(n) = C(n, n/2) / 2 * H(n/2)^2`, `H(m) = 1`.
    pub fn hypothesis_count(&self) -> Option<u128> {
        fn count(s: usize, m: usize) -> Option<u128> {
            if s == m {
                return Some(1);
            }
            let half = count(s / 2, m)?;
            (binomial(s as u64, s as u64 / 2)? / 2)
                .checked_mul(half)?
                .checked_mul(half)
        }
        count(self.n, self.m)
    }

    /// Coordinate of the ordered pair `(x, y)`, `x != y`, in row-major order with the diagonal skipped.
    pub fn coordinate(&self, x: usize, y: usize) -> usize {
        debug_assert_ne!(x, y);
        x * (self.n - 1) + if y < x { y } else { y - 1 }
    }

    /// Inverse of [`CbmParams::coordinate`].
    pub fn pair(&self, coord: usize) -> (usize, usize) {
        let x = coord / (self.n - 1);
        let r = coord % (self.n - 1);
        (x, if r < x { r } else { r + 1 })
    }
}

/// One hierarchy: the leaf code of every object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hierarchy {
    codes: Vec<u8>,
}

impl Hierarchy {
    pub fn leaf_codes(&self) -> &[u8] {
        &self.codes
    }

    /// Depth of the deepest cluster containing both objects.
    pub fn lca_depth(&self, depth: u32, x: usize, y: usize) -> u32 {
        let diff = u32::from(self.codes[x] ^ self.codes[y]);
        depth - (u32::BITS - diff.leading_zeros())
    }

    /// Off-diagonal similarity levels `lca_depth + 1`, in coordinate order.
    pub fn levels(&self, p: &CbmParams) -> Vec<u8> {
        let depth = p.depth();
        let mut out = Vec::with_capacity(p.dimension());
        for x in 0..p.n {
            for y in 0..p.n {
                if x != y {
                    out.push((self.lca_depth(depth, x, y) + 1) as u8);
                }
            }
        }
        out
    }

    /// Leaf clusters as sorted object lists, indexed by code.
    pub fn leaves(&self, p: &CbmParams) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); p.n / p.m];
        for (obj, &c) in self.codes.iter().enumerate() {
            out[c as usize].push(obj);
        }
        out
    }

    /// The hierarchy with objects `a` and `b` exchanged.
    pub fn swapped(&self, a: usize, b: usize) -> Hierarchy {
        let mut codes = self.codes.clone();
        codes.swap(a, b);
        Hierarchy { codes }
    }
}

/// All hierarchies of a CBM in canonical order, with a lookup from similarity
/// pattern back to index.
#[derive(Debug)]
pub struct CbmFamily {
    params: CbmParams,
    hierarchies: Vec<Hierarchy>,
    levels: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl PartialEq for CbmFamily {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
    }
}

impl CbmFamily {
    pub fn enumerate(params: CbmParams) -> Result<Arc<Self>> {
        if params.n > MAX_OBJECTS {
            return Err(SnmError::CapabilityLimit(format!(
                "CBM enumeration supports n <= {MAX_OBJECTS}, got {}",
                params.n
            )));
        }
        match params.hypothesis_count() {
            Some(c) if c <= MAX_HIERARCHIES => {}
            _ => {
                return Err(SnmError::CapabilityLimit(format!(
                    "CBM with n = {}, m = {} has more than {MAX_HIERARCHIES} hierarchies",
                    params.n, params.m
                )))
            }
        }
        let objects: Vec<usize> = (0..params.n).collect();
        let hierarchies: Vec<Hierarchy> = split(&objects, params.m)
            .into_iter()
            .map(|local| {
                let mut codes = vec![0u8; params.n];
                for (obj, c) in objects.iter().zip(local) {
                    codes[*obj] = c;
                }
                Hierarchy { codes }
            })
            .collect();
        let levels: Vec<Vec<u8>> = hierarchies.iter().map(|h| h.levels(&params)).collect();
        let index = levels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Ok(Arc::new(Self {
            params,
            hierarchies,
            levels,
            index,
        }))
    }

    pub fn params(&self) -> CbmParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.hierarchies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hierarchies.is_empty()
    }

    pub fn hierarchy(&self, j: usize) -> &Hierarchy {
        &self.hierarchies[j]
    }

    pub fn levels(&self, j: usize) -> &[u8] {
        &self.levels[j]
    }

    pub fn find(&self, h: &Hierarchy) -> Option<usize> {
        self.index.get(&h.levels(&self.params)).copied()
    }

    /// Squared distance between two hierarchies in units of `mu^2`.
    pub fn base_sq_distance(&self, i: usize, j: usize) -> f64 {
        self.levels[i]
            .iter()
            .zip(&self.levels[j])
            .map(|(&a, &b)| {
                let d = i32::from(a) - i32::from(b);
                (d * d) as u64
            })
            .sum::<u64>() as f64
    }

    /// Every exchange of an object with a member of its sibling leaf cluster,
    /// as `(a, b, neighbor index)`. There are `n m / 2` of them per hierarchy.
    pub fn elementary_swaps(&self, j: usize) -> Vec<(usize, usize, usize)> {
        let h = &self.hierarchies[j];
        let leaves = h.leaves(&self.params);
        let mut out = Vec::new();
        for pair in leaves.chunks(2) {
            if let [left, right] = pair {
                for &a in left {
                    for &b in right {
                        let k = self
                            .find(&h.swapped(a, b))
                            .expect("a swap of two objects is a balanced hierarchy");
                        out.push((a, b, k));
                    }
                }
            }
        }
        out
    }
}

// Local codes for `objs` (sorted), aligned with its order.
fn split(objs: &[usize], m: usize) -> Vec<Vec<u8>> {
    let s = objs.len();
    if s == m {
        return vec![vec![0; s]];
    }
    let half = s / 2;
    let sub_bits = (half / m).trailing_zeros();
    let rest = &objs[1..];
    let mut out = Vec::new();
    for chosen in colex_subsets(rest.len(), half - 1) {
        let mut in_left = vec![false; s];
        in_left[0] = true;
        for c in &chosen {
            in_left[c + 1] = true;
        }
        let left: Vec<usize> = (0..s).filter(|&i| in_left[i]).map(|i| objs[i]).collect();
        let right: Vec<usize> = (0..s).filter(|&i| !in_left[i]).map(|i| objs[i]).collect();
        let left_h = split(&left, m);
        let right_h = split(&right, m);
        for lh in &left_h {
            for rh in &right_h {
                let mut codes = vec![0u8; s];
                let (mut li, mut ri) = (0, 0);
                for (i, slot) in codes.iter_mut().enumerate() {
                    if in_left[i] {
                        *slot = lh[li];
                        li += 1;
                    } else {
                        *slot = (1u8 << sub_bits) | rh[ri];
                        ri += 1;
                    }
                }
                out.push(codes);
            }
        }
    }
    out
}
