//! Hypothesis families, pairwise distances and distance spectra.
//!
//! A [`Family`] is a finite set of mean vectors `mu * v_j` in `R^d`. It is either
//! *explicit* (the base vectors are stored) or *structured* (one of the
//! combinatorial families whose distances follow from counting). Structured
//! families can be astronomically large: spectra and EDF sums never enumerate
//! them, and per-vector operations materialize only the vectors they touch.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cbm::CbmFamily;
use crate::combinatorics::{binomial_checked, colex_unrank, sorted_intersection_len};
use crate::error::{invalid, Result, SnmError};
use crate::graph::Graph;

/// Structured and explicit operations that need every vector refuse larger families.
pub const MATERIALIZE_LIMIT: u128 = 10_000;

/// Which closed-form family a structured representation describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Ksets,
    Biclusters,
    Cbm,
    Stars,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    /// `k`-subsets of `[d]`, colexicographic order.
    KSets { d: usize, k: usize },
    /// Pairs (row set, column set) of `k`-subsets of `[d]`, row-major over the two
    /// colex indices; coordinate `(a, b)` of the `d x d` matrix is `a * d + b`.
    Biclusters { d: usize, k: usize },
    Cbm(Arc<CbmFamily>),
    /// One hypothesis per vertex: the indicator of its incident edges.
    Stars(Arc<Graph>),
}

impl Structure {
    pub fn kind(&self) -> FamilyKind {
        match self {
            Structure::KSets { .. } => FamilyKind::Ksets,
            Structure::Biclusters { .. } => FamilyKind::Biclusters,
            Structure::Cbm(_) => FamilyKind::Cbm,
            Structure::Stars(_) => FamilyKind::Stars,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Explicit { d: usize, vectors: Arc<Vec<Vec<f64>>> },
    Structured(Structure),
}

/// Base vector with its nonzero coordinates only.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    fn indicator(indices: Vec<usize>) -> Self {
        let values = vec![1.0; indices.len()];
        Self { indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }
}

/// A finite family of mean vectors `mu * v_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    mu: f64,
    count: u128,
    dim: usize,
    repr: Representation,
}

/// Sorted `(squared distance, multiplicity)` pairs from one hypothesis to all others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpectrum {
    pub hypothesis: usize,
    pub entries: Vec<SpectrumEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub sq_distance: f64,
    pub multiplicity: u128,
}

impl DistanceSpectrum {
    pub fn total_multiplicity(&self) -> u128 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    pub fn min_distance(&self) -> Option<f64> {
        self.entries.first().map(|e| e.sq_distance)
    }
}

impl Family {
    /// An explicit family of base vectors scaled by `mu`.
    pub fn explicit(vectors: Vec<Vec<f64>>, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        let d = vectors
            .first()
            .map(Vec::len)
            .ok_or_else(|| invalid("a family needs at least one vector"))?;
        if d == 0 {
            return Err(invalid("vectors must have positive dimension"));
        }
        for v in &vectors {
            if v.len() != d {
                return Err(SnmError::DimensionMismatch {
                    expected: d,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("vector entries must be finite"));
            }
        }
        Ok(Self {
            mu,
            count: vectors.len() as u128,
            dim: d,
            repr: Representation::Explicit {
                d,
                vectors: Arc::new(vectors),
            },
        })
    }

    pub(crate) fn structured(structure: Structure, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        let (count, dim) = match &structure {
            Structure::KSets { d, k } => (binomial_checked(*d, *k)?, *d),
            Structure::Biclusters { d, k } => {
                let c = binomial_checked(*d, *k)?;
                let count = c
                    .checked_mul(c)
                    .ok_or_else(|| invalid("bicluster count overflows 128-bit counting"))?;
                (count, d * d)
            }
            Structure::Cbm(f) => (f.len() as u128, f.params().dimension()),
            Structure::Stars(g) => (g.vertex_count() as u128, g.edge_count()),
        };
        Ok(Self {
            mu,
            count,
            dim,
            repr: Representation::Structured(structure),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Number of hypotheses `M`.
    pub fn hypothesis_count(&self) -> u128 {
        self.count
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn kind(&self) -> Option<FamilyKind> {
        match &self.repr {
            Representation::Structured(s) => Some(s.kind()),
            Representation::Explicit { .. } => None,
        }
    }

    pub fn graph(&self) -> Option<&Graph> {
        match &self.repr {
            Representation::Structured(Structure::Stars(g)) => Some(g),
            _ => None,
        }
    }

    /// `M` as a `usize`, refusing families above `limit`.
    pub fn count_within(&self, limit: u128, what: &str) -> Result<usize> {
        if self.count > limit {
            return Err(SnmError::CapabilityLimit(format!(
                "{what} needs every hypothesis explicitly; M = {} exceeds the limit of {limit}",
                self.count
            )));
        }
        Ok(self.count as usize)
    }

    /// True when every hypothesis has the same distance spectrum by construction.
    pub fn is_transitive(&self) -> bool {
        matches!(
            self.repr,
            Representation::Structured(Structure::KSets { .. } | Structure::Biclusters { .. } | Structure::Cbm(_))
        )
    }

    pub fn check_index(&self, j: usize) -> Result<()> {
        if (j as u128) < self.count {
            Ok(())
        } else {
            Err(SnmError::IndexOutOfRange {
                index: j,
                count: self.count,
            })
        }
    }

    /// Same family with signal strength `mu`.
    pub fn scale_signal(&self, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        Ok(Self {
            mu,
            ..self.clone()
        })
    }

    /// Base (unscaled) vector of hypothesis `j`, nonzeros only.
    pub fn base_sparse(&self, j: usize) -> Result<SparseVector> {
        self.check_index(j)?;
        Ok(match &self.repr {
            Representation::Explicit { vectors, .. } => {
                let (indices, values) = vectors[j]
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x != 0.0)
                    .map(|(i, &x)| (i, x))
                    .unzip();
                SparseVector { indices, values }
            }
            Representation::Structured(s) => match s {
                Structure::KSets { d, k } => SparseVector::indicator(colex_unrank(j as u128, *d, *k)),
                Structure::Biclusters { d, k } => {
                    let (rows, cols) = bicluster_sets(*d, *k, j);
                    SparseVector::indicator(
                        rows.iter()
                            .flat_map(|&a| cols.iter().map(move |&b| a * d + b))
                            .collect(),
                    )
                }
                Structure::Cbm(f) => {
                    let levels = f.levels(j);
                    SparseVector {
                        indices: (0..levels.len()).collect(),
                        values: levels.iter().map(|&l| f64::from(l)).collect(),
                    }
                }
                Structure::Stars(g) => SparseVector::indicator(g.incident_edges(j)),
            },
        })
    }

    /// Mean vector `mu * v_j`.
    pub fn vector(&self, j: usize) -> Result<Vec<f64>> {
        let mut v = self.base_sparse(j)?.to_dense(self.dim);
        v.iter_mut().for_each(|x| *x *= self.mu);
        Ok(v)
    }

    /// `||mu v_i - mu v_j||^2`, from the closed-form rule for structured families.
    pub fn pairwise_sq_distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Ok(0.0);
        }
        Ok(self.mu * self.mu * self.base_sq_distance(i, j))
    }

    fn base_sq_distance(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Representation::Explicit { vectors, .. } => {
                let diffs: Vec<f64> = vectors[i]
                    .iter()
                    .zip(&vectors[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .collect();
                pairwise_sum(&diffs)
            }
            Representation::Structured(s) => match s {
                Structure::KSets { d, k } => {
                    let a = colex_unrank(i as u128, *d, *k);
                    let b = colex_unrank(j as u128, *d, *k);
                    2.0 * (k - sorted_intersection_len(&a, &b)) as f64
                }
                Structure::Biclusters { d, k } => {
                    let (ra, ca) = bicluster_sets(*d, *k, i);
                    let (rb, cb) = bicluster_sets(*d, *k, j);
                    let shared = sorted_intersection_len(&ra, &rb) * sorted_intersection_len(&ca, &cb);
                    2.0 * (k * k - shared) as f64
                }
                Structure::Cbm(f) => f.base_sq_distance(i, j),
                Structure::Stars(g) => {
                    let adj = usize::from(g.has_edge(i, j));
                    (g.degree(i) + g.degree(j) - 2 * adj) as f64
                }
            },
        }
    }

    /// Squared distances from `j` to every other hypothesis, grouped by value.
    pub fn distance_spectrum(&self, j: usize) -> Result<DistanceSpectrum> {
        self.check_index(j)?;
        let mu2 = self.mu * self.mu;
        let base: Vec<(f64, u128)> = match &self.repr {
            Representation::Structured(Structure::KSets { d, k }) => (1..=*k)
                .map(|s| {
                    let mult = binomial_checked(*k, s)? * binomial_checked(d - k, s)?;
                    Ok((2.0 * s as f64, mult))
                })
                .collect::<Result<_>>()?,
            Representation::Structured(Structure::Biclusters { d, k }) => {
                // s_r rows and s_c columns swapped out: distance 2 (k^2 - (k - s_r)(k - s_c))
                let ways: Vec<u128> = (0..=*k)
                    .map(|s| Ok(binomial_checked(*k, s)? * binomial_checked(d - k, s)?))
                    .collect::<Result<_>>()?;
                let mut terms = Vec::new();
                for sr in 0..=*k {
                    for sc in 0..=*k {
                        if sr == 0 && sc == 0 {
                            continue;
                        }
                        let mult = ways[sr]
                            .checked_mul(ways[sc])
                            .ok_or_else(|| invalid("bicluster multiplicity overflows"))?;
                        terms.push((2.0 * (k * k - (k - sr) * (k - sc)) as f64, mult));
                    }
                }
                terms
            }
            _ => {
                let m = self.count_within(u128::from(u32::MAX), "an enumerated spectrum")?;
                (0..m)
                    .filter(|&k| k != j)
                    .map(|k| (self.base_sq_distance(j, k), 1))
                    .collect()
            }
        };
        Ok(DistanceSpectrum {
            hypothesis: j,
            entries: group_spectrum(base)
                .into_iter()
                .map(|(v, m)| SpectrumEntry {
                    sq_distance: mu2 * v,
                    multiplicity: m,
                })
                .collect(),
        })
    }

    /// The same family as an explicit list of base vectors.
    pub fn materialize(&self, limit: u128) -> Result<Family> {
        if let Representation::Explicit { .. } = self.repr {
            return Ok(self.clone());
        }
        let m = self.count_within(limit, "materialization")?;
        let vectors = (0..m)
            .map(|j| Ok(self.base_sparse(j)?.to_dense(self.dim)))
            .collect::<Result<Vec<_>>>()?;
        Family::explicit(vectors, self.mu)
    }

    /// All base vectors in sparse form.
    pub fn sparse_vectors(&self, limit: u128) -> Result<Vec<SparseVector>> {
        let m = self.count_within(limit, "sparse materialization")?;
        (0..m).map(|j| self.base_sparse(j)).collect()
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("signal strength must be finite and >= 0, got {mu}")))
    }
}

pub(crate) fn bicluster_sets(d: usize, k: usize, j: usize) -> (Vec<usize>, Vec<usize>) {
    let c = crate::combinatorics::binomial(d as u64, k as u64).expect("count checked at construction");
    let j = j as u128;
    (colex_unrank(j / c, d, k), colex_unrank(j % c, d, k))
}

fn group_spectrum(mut terms: Vec<(f64, u128)>) -> Vec<(f64, u128)> {
    terms.retain(|&(_, m)| m > 0);
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, u128)> = Vec::with_capacity(terms.len());
    for (v, m) in terms {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += m,
            _ => out.push((v, m)),
        }
    }
    out
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Bijections on coordinate indices, used as generators of a candidate invariance group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationSet {
    dim: usize,
    perms: Vec<Vec<usize>>,
}

impl PermutationSet {
    pub fn new(dim: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        for p in &perms {
            if p.len() != dim {
                return Err(SnmError::DimensionMismatch {
                    expected: dim,
                    actual: p.len(),
                });
            }
            let mut seen = vec![false; dim];
            for &x in p {
                if x >= dim || std::mem::replace(&mut seen[x], true) {
                    return Err(invalid(format!("{p:?} is not a permutation of 0..{dim}")));
                }
            }
        }
        Ok(Self { dim, perms })
    }

    /// Transpositions `(i, i + 1)`; they generate the full symmetric group.
    pub fn adjacent_transpositions(dim: usize) -> Self {
        let perms = (0..dim.saturating_sub(1))
            .map(|i| {
                let mut p: Vec<usize> = (0..dim).collect();
                p.swap(i, i + 1);
                p
            })
            .collect();
        Self { dim, perms }
    }

    /// Adjacent row swaps and adjacent column swaps of a `d x d` grid stored row-major.
    pub fn row_column_transpositions(d: usize) -> Self {
        let mut perms = Vec::new();
        for r in 0..d.saturating_sub(1) {
            let mut p: Vec<usize> = (0..d * d).collect();
            for b in 0..d {
                p.swap(r * d + b, (r + 1) * d + b);
            }
            perms.push(p);
        }
        for c in 0..d.saturating_sub(1) {
            let mut p: Vec<usize> = (0..d * d).collect();
            for a in 0..d {
                p.swap(a * d + c, a * d + c + 1);
            }
            perms.push(p);
        }
        Self { dim: d * d, perms }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.perms
    }

    /// `(P v)[p[i]] = v[i]`.
    pub fn apply(perm: &[usize], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (i, &x) in v.iter().enumerate() {
            out[perm[i]] = x;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn identity_distance_is_zero() {
        let f = zoo::make_ksets(4, 1, 1.0).unwrap();
        assert_eq!(f.pairwise_sq_distance(2, 2).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_index() {
        let f = zoo::make_ksets(4, 1, 1.0).unwrap();
        assert!(matches!(
            f.pairwise_sq_distance(0, 4),
            Err(SnmError::IndexOutOfRange { index: 4, .. })
        ));
        assert!(f.distance_spectrum(9).is_err());
    }

    #[test]
    fn ksets_singletons_distance_two() {
        let f = zoo::make_ksets(4, 1, 1.0).unwrap();
        assert_eq!(f.pairwise_sq_distance(0, 1).unwrap(), 2.0);
        let (a, b) = (f.vector(0).unwrap(), f.vector(1).unwrap());
        let explicit: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        assert_eq!(explicit, 2.0);
    }

    #[test]
    fn triangle_stars_adjacent_distance() {
        let f = zoo::make_stars(&Graph::complete(3), 1.0).unwrap();
        assert_eq!(f.pairwise_sq_distance(0, 1).unwrap(), 2.0);
    }

    #[test]
    fn ksets_spectra() {
        let f = zoo::make_ksets(4, 1, 1.0).unwrap();
        let s = f.distance_spectrum(3).unwrap();
        assert_eq!(s.entries, vec![SpectrumEntry { sq_distance: 2.0, multiplicity: 3 }]);
        let f = zoo::make_ksets(5, 2, 1.0).unwrap();
        let s = f.distance_spectrum(7).unwrap();
        assert_eq!(
            s.entries,
            vec![
                SpectrumEntry { sq_distance: 2.0, multiplicity: 6 },
                SpectrumEntry { sq_distance: 4.0, multiplicity: 3 },
            ]
        );
    }

    #[test]
    fn single_hypothesis_spectrum_is_empty() {
        let f = Family::explicit(vec![vec![1.0, 2.0]], 1.0).unwrap();
        assert!(f.distance_spectrum(0).unwrap().entries.is_empty());
    }

    #[test]
    fn scaling() {
        let f = zoo::make_ksets(5, 2, 1.0).unwrap();
        assert_eq!(f.scale_signal(1.0).unwrap(), f);
        let g = f.scale_signal(2.0).unwrap();
        assert_eq!(g.pairwise_sq_distance(0, 9).unwrap(), 4.0 * f.pairwise_sq_distance(0, 9).unwrap());
        let z = f.scale_signal(0.0).unwrap();
        assert_eq!(z.pairwise_sq_distance(0, 9).unwrap(), 0.0);
        assert!(f.scale_signal(-1.0).is_err());
    }

    #[test]
    fn explicit_rejects_ragged() {
        assert!(Family::explicit(vec![vec![1.0], vec![1.0, 2.0]], 1.0).is_err());
        assert!(Family::explicit(vec![], 1.0).is_err());
        assert!(Family::explicit(vec![vec![f64::NAN]], 1.0).is_err());
    }

    #[test]
    fn huge_ksets_spectrum_without_enumeration() {
        let f = zoo::make_ksets(100, 10, 1.0).unwrap();
        assert_eq!(f.hypothesis_count(), 17_310_309_456_440);
        let s = f.distance_spectrum(123_456_789).unwrap();
        assert_eq!(s.total_multiplicity(), f.hypothesis_count() - 1);
        assert!(f.materialize(MATERIALIZE_LIMIT).is_err());
    }

    #[test]
    fn permutation_validation() {
        assert!(PermutationSet::new(3, vec![vec![0, 0, 1]]).is_err());
        assert!(PermutationSet::new(3, vec![vec![0, 1]]).is_err());
        assert!(PermutationSet::new(3, vec![vec![2, 0, 1]]).is_ok());
        assert_eq!(PermutationSet::apply(&[1, 0], &[0.0, 2.0]), vec![2.0, 0.0]);
    }

    #[test]
    fn pairwise_sum_small_and_large() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
