//! Sensing-energy design: minimize `W(V, alpha, B)` over `{B >= 0, sum B = tau}`.
//!
//! The SEDF is a maximum of convex functions of `B`, so projected subgradient
//! descent applies. Stationarity is checked with the expected subgradient
//! `g(i) = E_{j~pi} sum_{k != j} D_jk(i) exp(-<B, D_jk> / alpha)`, where
//! `D_jk(i) = (mu v_j(i) - mu v_k(i))^2` and `pi` weights the maximizing
//! hypotheses: a design whose `g` is constant across coordinates is optimal.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::edf::ARGMAX_RTOL;
use crate::error::{invalid, Result, SnmError};
use crate::family::{Family, MATERIALIZE_LIMIT};
use crate::risk::csv_error;
use crate::sampling::DesignStrategy;
use crate::Verdict;

/// Largest number of stored pairwise difference entries.
pub const MAX_PAIR_ENTRIES: usize = 50_000_000;

pub const DEFAULT_CERTIFICATE_TOL: f64 = 1e-6;

/// The exponent convention used by the certificate.
pub const EXPONENT_CONVENTION: &str = "exp(-||v_k - v_j||_B^2 / alpha)";

/// Squared coordinate differences for every unordered pair of hypotheses.
#[derive(Debug, Clone)]
pub(crate) struct PairGeometry {
    dim: usize,
    m: usize,
    // pair p = (j, k) with j < k owns entries offsets[p]..offsets[p + 1]
    pairs: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    coords: Vec<usize>,
    values: Vec<f64>,
    // pair ids touching each hypothesis, ordered by the other endpoint
    incident: Vec<Vec<usize>>,
}

impl PairGeometry {
    pub(crate) fn new(family: &Family) -> Result<Self> {
        let vectors = family.sparse_vectors(MATERIALIZE_LIMIT)?;
        let mu2 = family.mu() * family.mu();
        let m = vectors.len();
        let dim = family.dimension();
        let mut geo = Self {
            dim,
            m,
            pairs: Vec::with_capacity(m * m.saturating_sub(1) / 2),
            offsets: vec![0],
            coords: Vec::new(),
            values: Vec::new(),
            incident: vec![Vec::new(); m],
        };
        let mut dense = vec![0.0; dim];
        for j in 0..m {
            for k in j + 1..m {
                for (&i, &x) in vectors[j].indices.iter().zip(&vectors[j].values) {
                    dense[i] += x;
                }
                for (&i, &x) in vectors[k].indices.iter().zip(&vectors[k].values) {
                    dense[i] -= x;
                }
                let mut touched: Vec<usize> = vectors[j].indices.iter().chain(&vectors[k].indices).copied().collect();
                touched.sort_unstable();
                touched.dedup();
                for i in touched {
                    let diff = std::mem::take(&mut dense[i]);
                    if diff != 0.0 {
                        geo.coords.push(i);
                        geo.values.push(mu2 * diff * diff);
                    }
                }
                if geo.coords.len() > MAX_PAIR_ENTRIES {
                    return Err(SnmError::CapabilityLimit(format!(
                        "pairwise differences exceed {MAX_PAIR_ENTRIES} stored entries"
                    )));
                }
                let p = geo.pairs.len();
                geo.pairs.push((j, k));
                geo.offsets.push(geo.coords.len());
                geo.incident[j].push(p);
                geo.incident[k].push(p);
            }
        }
        // incident[k] received (j, k) pairs in order of j, then (k, l) pairs in order of l
        Ok(geo)
    }

    fn entries(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[p]..self.offsets[p + 1];
        self.coords[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// `exp(-<B, D_p> / alpha)` for every pair.
    fn pair_weights(&self, b: &[f64], alpha: f64) -> Vec<f64> {
        (0..self.pairs.len())
            .map(|p| (-self.entries(p).map(|(i, v)| b[i] * v).sum::<f64>() / alpha).exp())
            .collect()
    }

    fn w_per_hypothesis(&self, weights: &[f64]) -> Vec<f64> {
        self.incident.iter().map(|ps| ps.iter().map(|&p| weights[p]).sum()).collect()
    }

    /// `sum_{k != j} D_jk exp(-<B, D_jk> / alpha)`, accumulated into `out` with factor `scale`.
    fn add_gradient(&self, j: usize, weights: &[f64], scale: f64, out: &mut [f64]) {
        for &p in &self.incident[j] {
            let w = scale * weights[p];
            for (i, v) in self.entries(p) {
                out[i] += v * w;
            }
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must be positive, got {alpha}")))
    }
}

fn argmax_set(w: &[f64]) -> Vec<usize> {
    let top = w.iter().copied().fold(0.0, f64::max);
    let cut = top * (1.0 - ARGMAX_RTOL);
    (0..w.len()).filter(|&j| w[j] >= cut).collect()
}

/// `B(i) = tau / d`.
pub fn uniform_design(d: usize, tau: f64) -> Result<DesignStrategy> {
    DesignStrategy::uniform(d, tau)
}

/// Euclidean projection onto `{B >= 0, sum B = tau}` by the sorted-threshold method.
pub fn project_budget_simplex(v: &[f64], tau: f64) -> Result<DesignStrategy> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid(format!("budget must be positive, got {tau}")));
    }
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(invalid("projection needs a nonempty finite vector"));
    }
    // shifting by the maximum keeps support entries exact when |v| >> tau
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v: Vec<f64> = v.iter().map(|x| x - top).collect();
    let mut u = v.clone();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let (mut cum, mut theta) = (0.0, 0.0);
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - tau) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    let mut b: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // large entries cost precision in `cum - tau`; re-centre the threshold on the support
    for _ in 0..4 {
        let support = b.iter().filter(|&&x| x > 0.0).count().max(1);
        let excess = b.iter().sum::<f64>() - tau;
        if excess.abs() <= f64::EPSILON * tau {
            break;
        }
        theta += excess / support as f64;
        b = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    }
    DesignStrategy::with_budget(b, tau)
}

/// Result of the stationarity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub alpha: f64,
    /// Expected subgradient magnitude `g(i)` per coordinate.
    pub g: Vec<f64>,
    /// `(max g - min g) / mean g`.
    pub deviation: f64,
    pub tolerance: f64,
    /// Weights over the argmax set, as `(hypothesis, weight)`.
    pub pi: Vec<(usize, f64)>,
    pub convention: &'static str,
}

/// Checks whether `g(i)` is constant across coordinates. `pi` weights the argmax
/// set in increasing hypothesis order and defaults to uniform.
pub fn certify_stationarity(
    family: &Family,
    alpha: f64,
    design: &DesignStrategy,
    pi: Option<&[f64]>,
    tol: f64,
) -> Result<Certificate> {
    check_alpha(alpha)?;
    design.check_dimension(family.dimension())?;
    if !(tol >= 0.0) {
        return Err(invalid("certificate tolerance must be nonnegative"));
    }
    let geo = PairGeometry::new(family)?;
    certify_with(&geo, alpha, design.energies(), pi, tol)
}

fn certify_with(geo: &PairGeometry, alpha: f64, b: &[f64], pi: Option<&[f64]>, tol: f64) -> Result<Certificate> {
    let weights = geo.pair_weights(b, alpha);
    let set = argmax_set(&geo.w_per_hypothesis(&weights));
    let pi: Vec<f64> = match pi {
        None => vec![1.0 / set.len() as f64; set.len()],
        Some(p) => {
            if p.len() != set.len() {
                return Err(SnmError::DimensionMismatch {
                    expected: set.len(),
                    actual: p.len(),
                });
            }
            let total: f64 = p.iter().sum();
            if p.iter().any(|&x| !(x >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(invalid("pi must be a probability vector over the argmax set"));
            }
            p.to_vec()
        }
    };
    let mut g = vec![0.0; geo.dim];
    for (&j, &w) in set.iter().zip(&pi) {
        geo.add_gradient(j, &weights, w, &mut g);
    }
    let (lo, hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let (deviation, verdict) = if geo.m < 2 || hi == lo {
        (0.0, Verdict::Pass)
    } else if mean > 0.0 {
        let dev = (hi - lo) / mean;
        (dev, Verdict::from_bool(hi - lo <= tol * mean))
    } else {
        // every pair weight underflowed
        (f64::INFINITY, Verdict::Inconclusive)
    };
    Ok(Certificate {
        verdict,
        alpha,
        g,
        deviation,
        tolerance: tol,
        pi: set.into_iter().zip(pi).collect(),
        convention: EXPONENT_CONVENTION,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub alpha: f64,
    pub tau: f64,
    pub max_iterations: usize,
    /// Step `c * tau / (sqrt(t) * ||g_t||)`.
    pub step_scale: f64,
    /// Converged once the best objective improves by less than this fraction over `window` iterations.
    pub tolerance: f64,
    pub window: usize,
    pub certificate_tol: f64,
}

impl OptimizerConfig {
    pub fn new(alpha: f64, tau: f64) -> Self {
        Self {
            alpha,
            tau,
            max_iterations: 5000,
            step_scale: 0.5,
            tolerance: 1e-6,
            window: 200,
            certificate_tol: DEFAULT_CERTIFICATE_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(self.alpha) && positive(self.tau) && positive(self.step_scale) && positive(self.tolerance)) {
            return Err(invalid("alpha, tau, step scale and tolerance must be positive"));
        }
        if self.max_iterations == 0 || self.window == 0 {
            return Err(invalid("iteration cap and window must be at least 1"));
        }
        if !(self.certificate_tol >= 0.0) {
            return Err(invalid("certificate tolerance must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub best_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignOutcome {
    /// Best iterate found.
    pub design: DesignStrategy,
    pub objective: f64,
    /// `Pass` when the certificate held at the start or the best objective settled;
    /// `Inconclusive` when the iteration cap was reached first.
    pub verdict: Verdict,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

impl DesignOutcome {
    /// Trace CSV: `iter,objective,best_objective`.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.trace {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Projected subgradient descent from the uniform design.
pub fn optimize_design(family: &Family, cfg: &OptimizerConfig) -> Result<DesignOutcome> {
    optimize_design_from(family, cfg, None)
}

/// Projected subgradient descent from `initial` (uniform when `None`).
pub fn optimize_design_from(
    family: &Family,
    cfg: &OptimizerConfig,
    initial: Option<&DesignStrategy>,
) -> Result<DesignOutcome> {
    cfg.validate()?;
    let d = family.dimension();
    let start = match initial {
        Some(b) => {
            b.check_dimension(d)?;
            project_budget_simplex(b.energies(), cfg.tau)?
        }
        None => uniform_design(d, cfg.tau)?,
    };
    let geo = PairGeometry::new(family)?;

    let objective = |b: &[f64]| -> (f64, Vec<f64>) {
        let weights = geo.pair_weights(b, cfg.alpha);
        let w = geo.w_per_hypothesis(&weights);
        (w.iter().copied().fold(0.0, f64::max), weights)
    };

    let mut b = start.energies().to_vec();
    let (f0, _) = objective(&b);
    let mut best = (f0, b.clone());
    let mut trace = vec![TraceRow {
        iter: 0,
        objective: f0,
        best_objective: f0,
    }];
    let done = |best: (f64, Vec<f64>), trace: Vec<TraceRow>, verdict| -> Result<DesignOutcome> {
        Ok(DesignOutcome {
            design: DesignStrategy::with_budget(best.1, cfg.tau)?,
            objective: best.0,
            verdict,
            iterations: trace.len() - 1,
            trace,
        })
    };

    if certify_with(&geo, cfg.alpha, &b, None, cfg.certificate_tol)?.verdict == Verdict::Pass {
        return done(best, trace, Verdict::Pass);
    }

    let mut g = vec![0.0; d];
    for t in 1..=cfg.max_iterations {
        let (_, weights) = objective(&b);
        let w = geo.w_per_hypothesis(&weights);
        let top = w.iter().copied().fold(0.0, f64::max);
        let j = w.iter().position(|&x| x == top).unwrap_or(0);
        // gradient of W_j is -g / alpha; only the part tangent to the budget plane matters
        g.iter_mut().for_each(|x| *x = 0.0);
        geo.add_gradient(j, &weights, 1.0 / cfg.alpha, &mut g);
        let mean = g.iter().sum::<f64>() / d as f64;
        let norm = g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>().sqrt();
        if norm <= f64::EPSILON * mean.abs() || norm == 0.0 {
            return done(best, trace, Verdict::Pass);
        }
        let step = cfg.step_scale * cfg.tau / ((t as f64).sqrt() * norm);
        // projection ignores common shifts, so step along the centred gradient only
        let moved: Vec<f64> = b.iter().zip(&g).map(|(x, gi)| x + step * (gi - mean)).collect();
        b = project_budget_simplex(&moved, cfg.tau)?.energies().to_vec();

        let (f, _) = objective(&b);
        if f < best.0 {
            best = (f, b.clone());
        }
        trace.push(TraceRow {
            iter: t,
            objective: f,
            best_objective: best.0,
        });
        if t >= cfg.window {
            let then = trace[t - cfg.window].best_objective;
            if then - best.0 <= cfg.tolerance * then {
                return done(best, trace, Verdict::Pass);
            }
        }
    }
    done(best, trace, Verdict::Inconclusive)
}
