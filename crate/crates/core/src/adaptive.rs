//! Two-phase interactive recovery of a `k x k` bicluster in a `d x d` matrix.
//!
//! Phase 1 probes uniformly random entries (with replacement) at energy `b` until
//! one reads above `mu / 2`, for at most `T = ceil((d^2 / k^2) ln(2 / delta))`
//! probes. Phase 2 measures the full row and column through the hit, again at
//! energy `b`, and reads off the active rows and columns. With
//! `b = tau / (2d + T)` the total energy never exceeds `tau`.
//!
//! Phase 2 classifies each entry by the `mu / 2` threshold and falls back to the
//! `k` largest readings when the threshold does not select exactly `k`.

use std::io::Write;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::edf::{closed_form_rate, RateParams};
use crate::error::{invalid, Result};
use crate::risk::{csv_error, wilson_interval, Z95};
use crate::sampling::RngHandle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveParams {
    pub d: usize,
    pub k: usize,
    pub mu: f64,
    pub tau: f64,
    pub delta: f64,
}

impl AdaptiveParams {
    pub fn new(d: usize, k: usize, mu: f64, tau: f64, delta: f64) -> Result<Self> {
        check(d, k, tau, delta)?;
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(invalid(format!("mu must be nonnegative, got {mu}")));
        }
        Ok(Self { d, k, mu, tau, delta })
    }

    /// Phase-1 probe cap `T`.
    pub fn probe_budget(&self) -> usize {
        probe_budget(self.d, self.k, self.delta)
    }

    /// Per-measurement energy `b = tau / (2d + T)`.
    pub fn energy(&self) -> f64 {
        self.tau / (2 * self.d + self.probe_budget()) as f64
    }
}

fn check(d: usize, k: usize, tau: f64, delta: f64) -> Result<()> {
    if k == 0 || k >= d {
        return Err(invalid(format!("need 1 <= k < d, got d={d} k={k}")));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid(format!("budget must be positive, got {tau}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn probe_ratio(d: usize, k: usize, delta: f64) -> f64 {
    let r = d as f64 / k as f64;
    r * r * (2.0 / delta).ln()
}

fn probe_budget(d: usize, k: usize, delta: f64) -> usize {
    probe_ratio(d, k, delta).ceil() as usize
}

/// Signal strength at which the tail bound guarantees success with probability
/// `1 - delta`: `sqrt((2 / b) ln(4 d^2 / delta))`, `b = tau / (2d + (d^2/k^2) ln(2/delta))`.
pub fn required_signal(d: usize, k: usize, tau: f64, delta: f64) -> Result<f64> {
    check(d, k, tau, delta)?;
    let b = tau / (2.0 * d as f64 + probe_ratio(d, k, delta));
    let d = d as f64;
    Ok((2.0 / b * (4.0 * d * d / delta).ln()).sqrt())
}

/// The non-interactive bicluster rate `sqrt((d^2 / (tau k)) ln(k (d - k)))` at the same budget.
pub fn noninteractive_rate(d: usize, k: usize, tau: f64) -> Result<f64> {
    let r = closed_form_rate(RateParams::Biclusters { d, k, tau: Some(tau) })?;
    Ok(r.budgeted.expect("budget was given"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveRun {
    pub d: usize,
    pub k: usize,
    pub mu: f64,
    pub tau: f64,
    pub delta: f64,
    /// Phase-1 cap `T`.
    pub probe_budget: usize,
    /// Energy `b` per measurement.
    pub energy: f64,
    /// Phase-1 probes used.
    pub probes: usize,
    /// Entry `(row, column)` that ended phase 1.
    pub hit: Option<(usize, usize)>,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// Whether `rows` and `cols` equal the truth, when it is known.
    pub success: Option<bool>,
    pub energy_spent: f64,
}

/// Ground-truth active rows and columns.
pub type Bicluster = (Vec<usize>, Vec<usize>);

/// Runs the sampler against a bicluster at `truth`, or against an all-zero matrix when `None`.
pub fn run_adaptive_bicluster(params: &AdaptiveParams, truth: Option<&Bicluster>, rng: &mut RngHandle) -> Result<AdaptiveRun> {
    let AdaptiveParams { d, k, mu, .. } = *params;
    let (in_rows, in_cols) = match truth {
        Some((r, c)) => {
            if r.len() != k || c.len() != k || r.iter().chain(c).any(|&i| i >= d) {
                return Err(invalid("truth must list k rows and k columns below d"));
            }
            (indicator(d, r), indicator(d, c))
        }
        None => (vec![false; d], vec![false; d]),
    };
    let t_max = params.probe_budget();
    let b = params.energy();
    let sd = 1.0 / b.sqrt();
    let threshold = mu / 2.0;
    let measure = |r: usize, c: usize, rng: &mut RngHandle| {
        let mean = if in_rows[r] && in_cols[c] { mu } else { 0.0 };
        mean + sd * rng.standard_normal()
    };

    let mut probes = 0;
    let mut hit = None;
    while probes < t_max {
        let (r, c) = (rng.index(d), rng.index(d));
        probes += 1;
        if measure(r, c, rng) > threshold {
            hit = Some((r, c));
            break;
        }
    }

    let (mut rows, mut cols) = (Vec::new(), Vec::new());
    let mut energy_spent = b * probes as f64;
    if let Some((r0, c0)) = hit {
        // column c0 reveals the active rows, row r0 the active columns
        let down: Vec<f64> = (0..d).map(|r| measure(r, c0, rng)).collect();
        let across: Vec<f64> = (0..d).map(|c| measure(r0, c, rng)).collect();
        energy_spent += b * (2 * d) as f64;
        rows = select(&down, k, threshold);
        cols = select(&across, k, threshold);
    }
    let success = truth.map(|(r, c)| hit.is_some() && rows == sorted(r) && cols == sorted(c));
    Ok(AdaptiveRun {
        d,
        k,
        mu,
        tau: params.tau,
        delta: params.delta,
        probe_budget: t_max,
        energy: b,
        probes,
        hit,
        rows,
        cols,
        success,
        energy_spent,
    })
}

fn indicator(d: usize, set: &[usize]) -> Vec<bool> {
    let mut v = vec![false; d];
    set.iter().for_each(|&i| v[i] = true);
    v
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

fn select(x: &[f64], k: usize, threshold: f64) -> Vec<usize> {
    let above: Vec<usize> = (0..x.len()).filter(|&i| x[i] > threshold).collect();
    if above.len() == k {
        return above;
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    sorted(&order[..k])
}

/// A batch of independent runs; run `i` uses stream `(seed, i)` and a bicluster
/// location drawn uniformly from that stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveBatch {
    pub params: AdaptiveParams,
    pub seed: u64,
    pub runs: Vec<AdaptiveRun>,
}

pub fn run_adaptive_batch(params: &AdaptiveParams, runs: usize, seed: u64) -> Result<AdaptiveBatch> {
    if runs == 0 {
        return Err(invalid("need at least one run"));
    }
    let runs = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngHandle::new(seed, i);
            let d = params.d;
            let rows = sorted(&sample(rng.rng_mut(), d, params.k).into_vec());
            let cols = sorted(&sample(rng.rng_mut(), d, params.k).into_vec());
            run_adaptive_bicluster(params, Some(&(rows, cols)), &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdaptiveBatch {
        params: *params,
        seed,
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchSummary {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Fraction of runs whose phase 1 ended on any reading above `mu / 2`.
    pub hit_rate: f64,
}

#[derive(Serialize)]
struct BatchRow {
    run: usize,
    seed: u64,
    mu: f64,
    tau: f64,
    success: u8,
    probes: usize,
    energy_spent: f64,
}

impl AdaptiveBatch {
    pub fn summary(&self) -> BatchSummary {
        let n = self.runs.len();
        let successes = self.runs.iter().filter(|r| r.success == Some(true)).count();
        let hits = self.runs.iter().filter(|r| r.hit.is_some()).count();
        let (ci_lo, ci_hi) = wilson_interval(successes as u64, n as u64, Z95);
        BatchSummary {
            runs: n,
            successes,
            success_rate: successes as f64 / n as f64,
            ci_lo,
            ci_hi,
            hit_rate: hits as f64 / n as f64,
        }
    }

    /// One row per run: `run,seed,mu,tau,success,probes,energy_spent`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (i, r) in self.runs.iter().enumerate() {
            w.serialize(BatchRow {
                run: i,
                seed: self.seed,
                mu: r.mu,
                tau: r.tau,
                success: u8::from(r.success == Some(true)),
                probes: r.probes,
                energy_spent: r.energy_spent,
            })
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}
