//! Permutation-closure and transitivity check for unitary invariance.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Result, SnmError};
use crate::family::{Family, PermutationSet, MATERIALIZE_LIMIT};
use crate::Verdict;

/// Orbit exploration stops after visiting this many group elements.
pub const DEFAULT_GROUP_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InvarianceViolation {
    /// Generator `generator` maps hypothesis `hypothesis` outside the family.
    NotClosed { generator: usize, hypothesis: usize },
    /// The orbit of hypothesis 0 misses part of the family.
    NotTransitive { orbit_size: usize, distinct_vectors: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceCertificate {
    pub verdict: Verdict,
    pub violation: Option<InvarianceViolation>,
    pub orbit_size: usize,
    pub distinct_vectors: usize,
    pub elements_explored: usize,
}

pub fn check_unitary_invariance(family: &Family, perms: &PermutationSet) -> Result<InvarianceCertificate> {
    check_unitary_invariance_with_budget(family, perms, DEFAULT_GROUP_BUDGET)
}

/// Passes iff every generator maps the family into itself and the orbit of the
/// first vector under the generated group is the whole family.
pub fn check_unitary_invariance_with_budget(
    family: &Family,
    perms: &PermutationSet,
    budget: usize,
) -> Result<InvarianceCertificate> {
    if perms.dimension() != family.dimension() {
        return Err(SnmError::DimensionMismatch {
            expected: family.dimension(),
            actual: perms.dimension(),
        });
    }
    let m = family.count_within(MATERIALIZE_LIMIT, "the invariance check")?;
    let vectors: Vec<Vec<f64>> = (0..m)
        .map(|j| Ok(family.base_sparse(j)?.to_dense(family.dimension())))
        .collect::<Result<_>>()?;
    let mut lookup: HashMap<Vec<u64>, usize> = HashMap::with_capacity(m);
    for (j, v) in vectors.iter().enumerate() {
        lookup.entry(key(v)).or_insert(j);
    }
    let distinct = lookup.len();

    for (j, v) in vectors.iter().enumerate() {
        for (g, p) in perms.generators().iter().enumerate() {
            if !lookup.contains_key(&key(&PermutationSet::apply(p, v))) {
                return Ok(InvarianceCertificate {
                    verdict: Verdict::Fail,
                    violation: Some(InvarianceViolation::NotClosed {
                        generator: g,
                        hypothesis: j,
                    }),
                    orbit_size: 0,
                    distinct_vectors: distinct,
                    elements_explored: 0,
                });
            }
        }
    }

    // Closure holds, so the orbit stays inside the family; breadth-first over representatives.
    let mut seen = vec![false; m];
    let start = lookup[&key(&vectors[0])];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut orbit = 1;
    let mut explored = 0;
    while let Some(j) = queue.pop_front() {
        for p in perms.generators() {
            explored += 1;
            if explored > budget {
                return Ok(InvarianceCertificate {
                    verdict: Verdict::Inconclusive,
                    violation: None,
                    orbit_size: orbit,
                    distinct_vectors: distinct,
                    elements_explored: explored - 1,
                });
            }
            let image = lookup[&key(&PermutationSet::apply(p, &vectors[j]))];
            if !seen[image] {
                seen[image] = true;
                orbit += 1;
                queue.push_back(image);
            }
        }
    }
    let transitive = orbit == distinct;
    Ok(InvarianceCertificate {
        verdict: if transitive { Verdict::Pass } else { Verdict::Fail },
        violation: (!transitive).then_some(InvarianceViolation::NotTransitive {
            orbit_size: orbit,
            distinct_vectors: distinct,
        }),
        orbit_size: orbit,
        distinct_vectors: distinct,
        elements_explored: explored,
    })
}

fn key(v: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same coordinate value
    v.iter().map(|&x| (x + 0.0).to_bits()).collect()
}
