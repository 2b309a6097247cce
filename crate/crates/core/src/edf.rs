//! Exponentiated distance functions and the minimax risk bounds built on them.
//!
//! `W_j(V, alpha, B) = sum_{k != j} exp(-||v_j - v_k||_B^2 / alpha)` and
//! `W(V, alpha, B) = max_j W_j`. With `B = 1` this is the isotropic EDF.
//!
//! * MLE upper bound: the maximum risk of the MLE is at most `W(V, 8, B)`.
//! * Minimax lower bound: if `W(V, 2(1 - delta), B) >= 2^{1/(1-delta)} - 1`
//!   then every estimator has maximum risk at least `delta`.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::family::{Family, SparseVector, MATERIALIZE_LIMIT};
use crate::sampling::DesignStrategy;

/// Relative tolerance for membership in the argmax set.
pub const ARGMAX_RTOL: f64 = 1e-9;

// exponents beyond this switch the sum to log space
const LOG_SPACE_EXPONENT: f64 = 700.0;

/// Streaming sum of `mult * exp(-x)` that stays exact where the result is representable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ExpSum {
    direct: f64,
    log_max: f64,
    log_scaled: f64,
    needs_log: bool,
}

impl ExpSum {
    pub(crate) fn new() -> Self {
        Self {
            direct: 0.0,
            log_max: f64::NEG_INFINITY,
            log_scaled: 0.0,
            needs_log: false,
        }
    }

    pub(crate) fn add(&mut self, mult: f64, x: f64) {
        if mult == 0.0 {
            return;
        }
        self.direct += mult * (-x).exp();
        if x > LOG_SPACE_EXPONENT {
            self.needs_log = true;
        }
        let t = mult.ln() - x;
        if t > self.log_max {
            self.log_scaled = self.log_scaled * (self.log_max - t).exp() + 1.0;
            self.log_max = t;
        } else {
            self.log_scaled += (t - self.log_max).exp();
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.needs_log {
            (self.log_max + self.log_scaled.ln()).exp()
        } else {
            self.direct
        }
    }
}

/// Per-hypothesis values of an EDF evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum PerHypothesis {
    Each(Vec<f64>),
    /// Every one of `count` hypotheses has the same value (symmetric structured families).
    Constant { value: f64, count: u128 },
}

/// Hypotheses attaining the maximum.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgmaxSet {
    Indices(Vec<usize>),
    All(u128),
}

impl ArgmaxSet {
    pub fn contains(&self, j: usize) -> bool {
        match self {
            ArgmaxSet::Indices(v) => v.contains(&j),
            ArgmaxSet::All(n) => (j as u128) < *n,
        }
    }

    pub fn first(&self) -> usize {
        match self {
            ArgmaxSet::Indices(v) => v[0],
            ArgmaxSet::All(_) => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfReport {
    pub alpha: f64,
    /// `W = max_j W_j`.
    pub w: f64,
    pub per_hypothesis: PerHypothesis,
    pub design: Option<DesignStrategy>,
}

impl EdfReport {
    fn new(alpha: f64, per_hypothesis: PerHypothesis, design: Option<DesignStrategy>) -> Self {
        let w = match &per_hypothesis {
            PerHypothesis::Each(v) => v.iter().copied().fold(0.0, f64::max),
            PerHypothesis::Constant { value, .. } => *value,
        };
        Self {
            alpha,
            w,
            per_hypothesis,
            design,
        }
    }

    pub fn w_j(&self, j: usize) -> Option<f64> {
        match &self.per_hypothesis {
            PerHypothesis::Each(v) => v.get(j).copied(),
            PerHypothesis::Constant { value, count } => ((j as u128) < *count).then_some(*value),
        }
    }

    pub fn argmax(&self) -> ArgmaxSet {
        let cut = self.w * (1.0 - ARGMAX_RTOL);
        match &self.per_hypothesis {
            PerHypothesis::Each(v) => {
                ArgmaxSet::Indices(v.iter().enumerate().filter(|(_, &x)| x >= cut).map(|(j, _)| j).collect())
            }
            PerHypothesis::Constant { count, .. } => ArgmaxSet::All(*count),
        }
    }
}

impl Serialize for EdfReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(untagged)]
        enum Arg {
            Indices(Vec<usize>),
            All(&'static str),
        }
        #[derive(Serialize)]
        struct Out<'a> {
            alpha: f64,
            #[serde(rename = "W")]
            w: f64,
            #[serde(rename = "Wj")]
            wj: Vec<f64>,
            argmax: Arg,
            #[serde(skip_serializing_if = "Option::is_none")]
            constant_over: Option<String>,
            #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
            design: Option<&'a [f64]>,
        }
        // constant reports are expanded unless they are too large to list
        let (wj, argmax, constant_over) = match &self.per_hypothesis {
            PerHypothesis::Each(v) => (v.clone(), None, None),
            PerHypothesis::Constant { value, count } if *count <= MATERIALIZE_LIMIT => {
                let n = *count as usize;
                (vec![*value; n], Some(Arg::Indices((0..n).collect())), None)
            }
            PerHypothesis::Constant { value, count } => (vec![*value], Some(Arg::All("all")), Some(count.to_string())),
        };
        let argmax = argmax.unwrap_or_else(|| match self.argmax() {
            ArgmaxSet::Indices(v) => Arg::Indices(v),
            ArgmaxSet::All(_) => Arg::All("all"),
        });
        Out {
            alpha: self.alpha,
            w: self.w,
            wj,
            argmax,
            constant_over,
            design: self.design.as_ref().map(DesignStrategy::energies),
        }
        .serialize(s)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must be positive, got {alpha}")))
    }
}

fn w_from_spectrum(family: &Family, j: usize, alpha: f64) -> Result<f64> {
    let mut acc = ExpSum::new();
    for e in family.distance_spectrum(j)?.entries {
        acc.add(e.multiplicity as f64, e.sq_distance / alpha);
    }
    Ok(acc.value())
}

/// Isotropic EDF, evaluated through distance spectra.
pub fn edf(family: &Family, alpha: f64) -> Result<EdfReport> {
    check_alpha(alpha)?;
    let per = if family.is_transitive() {
        PerHypothesis::Constant {
            value: w_from_spectrum(family, 0, alpha)?,
            count: family.hypothesis_count(),
        }
    } else {
        let m = family.count_within(MATERIALIZE_LIMIT, "per-hypothesis EDF evaluation")?;
        PerHypothesis::Each(
            (0..m)
                .into_par_iter()
                .map(|j| w_from_spectrum(family, j, alpha))
                .collect::<Result<_>>()?,
        )
    };
    Ok(EdfReport::new(alpha, per, None))
}

/// Sampling EDF: distances in the Mahalanobis norm `||v||_B^2 = sum_i B(i) v(i)^2`.
pub fn sedf(family: &Family, alpha: f64, design: &DesignStrategy) -> Result<EdfReport> {
    check_alpha(alpha)?;
    design.check_dimension(family.dimension())?;
    let mut report = match design.uniform_value() {
        Some(c) if c > 0.0 => edf(family, alpha / c)?,
        Some(_) => {
            // B = 0: every exponent vanishes
            let others = (family.hypothesis_count() - 1) as f64;
            let per = if family.is_transitive() {
                PerHypothesis::Constant {
                    value: others,
                    count: family.hypothesis_count(),
                }
            } else {
                let m = family.count_within(MATERIALIZE_LIMIT, "per-hypothesis EDF evaluation")?;
                PerHypothesis::Each(vec![others; m])
            };
            EdfReport::new(alpha, per, None)
        }
        None => sedf_by_pairs(family, alpha, design.energies())?,
    };
    report.alpha = alpha;
    report.design = Some(design.clone());
    Ok(report)
}

/// SEDF by direct pairwise evaluation; works for any nonnegative weights.
pub(crate) fn sedf_by_pairs(family: &Family, alpha: f64, weights: &[f64]) -> Result<EdfReport> {
    let vectors = family.sparse_vectors(MATERIALIZE_LIMIT)?;
    let mu2 = family.mu() * family.mu();
    let per: Vec<f64> = (0..vectors.len())
        .into_par_iter()
        .map(|j| {
            let mut acc = ExpSum::new();
            for (k, vk) in vectors.iter().enumerate() {
                if k != j {
                    acc.add(1.0, mu2 * weighted_sq_diff(&vectors[j], vk, weights) / alpha);
                }
            }
            acc.value()
        })
        .collect();
    Ok(EdfReport::new(alpha, PerHypothesis::Each(per), None))
}

/// `sum_i w_i (a_i - b_i)^2` over the union of supports.
pub(crate) fn weighted_sq_diff(a: &SparseVector, b: &SparseVector, w: &[f64]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.nnz() || j < b.nnz() {
        let ia = a.indices.get(i).copied().unwrap_or(usize::MAX);
        let ib = b.indices.get(j).copied().unwrap_or(usize::MAX);
        let (coord, diff) = match ia.cmp(&ib) {
            std::cmp::Ordering::Less => {
                i += 1;
                (ia, a.values[i - 1])
            }
            std::cmp::Ordering::Greater => {
                j += 1;
                (ib, b.values[j - 1])
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
                (ia, a.values[i - 1] - b.values[j - 1])
            }
        };
        acc += w[coord] * diff * diff;
    }
    acc
}

fn w_at(family: &Family, alpha: f64, design: Option<&DesignStrategy>) -> Result<EdfReport> {
    match design {
        Some(b) => sedf(family, alpha, b),
        None => edf(family, alpha),
    }
}

/// `W(V, 8[, B])`, an upper bound on the maximum risk of the MLE. Values above 1 are vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBound {
    pub value: f64,
    pub vacuous: bool,
}

pub fn mle_upper_bound(family: &Family, design: Option<&DesignStrategy>) -> Result<UpperBound> {
    let value = w_at(family, 8.0, design)?.w;
    Ok(UpperBound {
        value,
        vacuous: value > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
}

/// Outcome of checking one side of the minimax sandwich at risk level `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundVerdict {
    pub delta: f64,
    pub kind: BoundKind,
    pub alpha: f64,
    pub w: f64,
    pub threshold: f64,
    pub holds: bool,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// `2^{1/(1-delta)} - 1`.
pub fn lower_bound_threshold(delta: f64) -> f64 {
    (1.0 / (1.0 - delta)).exp2() - 1.0
}

/// Holds iff `W(V, 2(1 - delta)[, B]) >= 2^{1/(1-delta)} - 1`, certifying minimax risk >= delta.
pub fn minimax_lower_bound_holds(family: &Family, delta: f64, design: Option<&DesignStrategy>) -> Result<BoundVerdict> {
    check_delta(delta)?;
    let alpha = 2.0 * (1.0 - delta);
    let w = w_at(family, alpha, design)?.w;
    let threshold = lower_bound_threshold(delta);
    Ok(BoundVerdict {
        delta,
        kind: BoundKind::Lower,
        alpha,
        w,
        threshold,
        holds: w >= threshold,
    })
}

/// Holds iff `W(V, 8[, B]) <= delta`, certifying MLE maximum risk <= delta.
pub fn mle_upper_bound_holds(family: &Family, delta: f64, design: Option<&DesignStrategy>) -> Result<BoundVerdict> {
    check_delta(delta)?;
    let w = w_at(family, 8.0, design)?.w;
    Ok(BoundVerdict {
        delta,
        kind: BoundKind::Upper,
        alpha: 8.0,
        w,
        threshold: delta,
        holds: w <= delta,
    })
}

/// Classical union bound at the minimum distance: `(M - 1) exp(-d_min^2 / 8)`.
pub fn min_distance_bound(family: &Family) -> Result<f64> {
    let m = family.hypothesis_count();
    if m < 2 {
        return Err(invalid("the min-distance bound needs at least two hypotheses"));
    }
    let d_min = if family.is_transitive() {
        family.distance_spectrum(0)?.min_distance()
    } else {
        let count = family.count_within(MATERIALIZE_LIMIT, "the min-distance bound")?;
        (0..count)
            .map(|j| family.distance_spectrum(j).map(|s| s.min_distance()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .reduce(f64::min)
    }
    .expect("M >= 2 gives a nonempty spectrum");
    Ok((m - 1) as f64 * (-d_min / 8.0).exp())
}

/// `(n m / 2) exp(-8 (m - 1) mu^2 b / alpha)`: the EDF restricted to the elementary
/// swap neighbours of a CBM hierarchy, with per-coordinate energy `b`.
pub fn cbm_neighborhood_bound(n: usize, m: usize, mu: f64, alpha: f64, energy: f64) -> f64 {
    let swaps = (n * m) as f64 / 2.0;
    swaps * (-8.0 * (m as f64 - 1.0) * mu * mu * energy / alpha).exp()
}

/// Parameters of the asymptotic minimax rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RateParams {
    Ksets { d: usize, k: usize, tau: Option<f64> },
    Biclusters { d: usize, k: usize, tau: Option<f64> },
    Cbm { n: usize, m: usize, tau: Option<f64> },
    Stars { vertices: usize, deg_min: usize, deg_max: usize },
}

/// Degree ratio above which the stars rate is flagged.
pub const STARS_DEGREE_RATIO_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateDescriptor {
    /// Critical signal strength in the isotropic model.
    pub isotropic: f64,
    /// Critical signal strength under budget `tau`, when one was given.
    pub budgeted: Option<f64>,
    pub caveat: Option<String>,
}

impl RateParams {
    /// Rate parameters for a structured family.
    pub fn for_family(family: &Family, tau: Option<f64>) -> Option<Self> {
        use crate::family::{Representation, Structure};
        match family.representation() {
            Representation::Structured(Structure::KSets { d, k }) => Some(Self::Ksets { d: *d, k: *k, tau }),
            Representation::Structured(Structure::Biclusters { d, k }) => {
                Some(Self::Biclusters { d: *d, k: *k, tau })
            }
            Representation::Structured(Structure::Cbm(f)) => Some(Self::Cbm {
                n: f.params().n,
                m: f.params().m,
                tau,
            }),
            Representation::Structured(Structure::Stars(g)) => {
                let deg = g.degrees();
                Some(Self::Stars {
                    vertices: g.vertex_count(),
                    deg_min: deg.iter().copied().min()?,
                    deg_max: deg.iter().copied().max()?,
                })
            }
            Representation::Explicit { .. } => None,
        }
    }
}

/// Evaluates the critical signal-strength expression for each example family.
pub fn closed_form_rate(params: RateParams) -> Result<RateDescriptor> {
    let check_tau = |tau: Option<f64>| -> Result<()> {
        match tau {
            Some(t) if !(t.is_finite() && t > 0.0) => Err(invalid(format!("budget must be positive, got {t}"))),
            _ => Ok(()),
        }
    };
    Ok(match params {
        RateParams::Ksets { d, k, tau } => {
            check_tau(tau)?;
            if k == 0 || k >= d {
                return Err(invalid("k-sets rate needs 1 <= k < d"));
            }
            let l = ((k * (d - k)) as f64).ln();
            RateDescriptor {
                isotropic: l.sqrt(),
                budgeted: tau.map(|t| (d as f64 / t * l).sqrt()),
                caveat: None,
            }
        }
        RateParams::Biclusters { d, k, tau } => {
            check_tau(tau)?;
            if k == 0 || k >= d {
                return Err(invalid("bicluster rate needs 1 <= k < d"));
            }
            let l = ((k * (d - k)) as f64).ln();
            let (d, k) = (d as f64, k as f64);
            RateDescriptor {
                isotropic: (l / k).sqrt(),
                budgeted: tau.map(|t| (d * d / (t * k) * l).sqrt()),
                caveat: None,
            }
        }
        RateParams::Cbm { n, m, tau } => {
            check_tau(tau)?;
            if m == 0 || m > n {
                return Err(invalid("CBM rate needs 1 <= m <= n"));
            }
            let l = ((n * m) as f64).ln();
            let (n, m) = (n as f64, m as f64);
            RateDescriptor {
                isotropic: (l / m).sqrt(),
                budgeted: tau.map(|t| (n * n * l / (m * t)).sqrt()),
                caveat: None,
            }
        }
        RateParams::Stars {
            vertices,
            deg_min,
            deg_max,
        } => {
            if deg_min == 0 || deg_max < deg_min || vertices <= deg_min {
                return Err(invalid("stars rate needs 1 <= deg_min <= deg_max < |V|"));
            }
            let ratio = deg_max as f64 / deg_min as f64;
            let l = ((vertices - deg_min) as f64).ln();
            RateDescriptor {
                isotropic: (l / deg_min as f64).sqrt(),
                budgeted: None,
                caveat: (ratio > STARS_DEGREE_RATIO_LIMIT).then(|| {
                    format!(
                        "degree ratio {ratio:.3} exceeds {STARS_DEGREE_RATIO_LIMIT}; the rate assumes a bounded max/min degree ratio"
                    )
                }),
            }
        }
    })
}
