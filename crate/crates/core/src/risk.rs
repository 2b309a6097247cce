//! Monte Carlo estimates of the MLE risk `R_j = P_j[T(y) != j]`.
//!
//! Trial `t` of hypothesis `j` draws from its own stream `(seed, j * N + t)`, so
//! results do not depend on how trials are scheduled across threads.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result, SnmError};
use crate::family::Family;
use crate::sampling::{fill_observation, Decoder, RngHandle, Sensing};
use crate::Verdict;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Default cap on `N * M`.
pub const DEFAULT_TRIAL_BUDGET: u128 = 200_000_000;

/// Flatness passes when the spread is within this many pooled standard errors.
pub const FLATNESS_SE: f64 = 4.0;

/// Wilson score interval for `errors` successes in `n` trials.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisRisk {
    pub j: usize,
    pub errors: u64,
    #[serde(rename = "N")]
    pub trials: u64,
    pub phat: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    #[serde(rename = "N")]
    pub trials: u64,
    pub seed: u64,
    pub max_risk: f64,
    /// Lowest-index hypothesis attaining `max_risk`.
    pub argmax: usize,
    pub hypotheses: Vec<HypothesisRisk>,
}

impl RiskEstimate {
    pub fn worst(&self) -> &HypothesisRisk {
        &self.hypotheses[self.argmax]
    }

    /// Binomial standard error of the worst hypothesis' frequency.
    pub fn max_risk_se(&self) -> f64 {
        binomial_se(self.max_risk, self.trials)
    }

    /// Smallest per-hypothesis success probability `1 - phat_j`.
    pub fn min_success(&self) -> f64 {
        1.0 - self.max_risk
    }

    /// One row per hypothesis: `j,errors,N,phat,lo,hi`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for h in &self.hypotheses {
            w.serialize(h).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> SnmError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => SnmError::Io(e),
        other => invalid(format!("csv: {other:?}")),
    }
}

pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// MLE risk with the default trial budget.
pub fn estimate_risk(family: &Family, sensing: &Sensing, trials: u64, seed: u64) -> Result<RiskEstimate> {
    estimate_risk_with_budget(family, sensing, trials, seed, DEFAULT_TRIAL_BUDGET)
}

/// MLE risk, refusing when `trials * M` exceeds `budget`.
pub fn estimate_risk_with_budget(
    family: &Family,
    sensing: &Sensing,
    trials: u64,
    seed: u64,
    budget: u128,
) -> Result<RiskEstimate> {
    if trials == 0 {
        return Err(invalid("trials per hypothesis must be at least 1"));
    }
    sensing.check_dimension(family.dimension())?;
    let total = family.hypothesis_count().saturating_mul(trials as u128);
    if total > budget {
        return Err(SnmError::CapabilityLimit(format!(
            "{trials} trials x {} hypotheses exceeds the trial budget {budget}",
            family.hypothesis_count()
        )));
    }
    let decoder = Decoder::new(family)?;
    let means = family.sparse_vectors(crate::sampling::DECODE_LIMIT)?;
    let weights = sensing.design().map(|b| b.energies());
    let mu = family.mu();
    let d = family.dimension();
    let m = means.len();

    let hypotheses = (0..m)
        .map(|j| {
            let errors = (0..trials)
                .into_par_iter()
                .map_init(
                    || vec![0.0; d],
                    |y, t| {
                        let mut rng = RngHandle::new(seed, j as u64 * trials + t);
                        fill_observation(y, &means[j], mu, sensing, &mut rng);
                        u64::from(decoder.decode_unchecked(y, weights) != j)
                    },
                )
                .sum::<u64>();
            let (lo, hi) = wilson_interval(errors, trials, Z95);
            HypothesisRisk {
                j,
                errors,
                trials,
                phat: errors as f64 / trials as f64,
                lo,
                hi,
            }
        })
        .collect::<Vec<_>>();

    let mut argmax = 0;
    for h in &hypotheses {
        if h.errors > hypotheses[argmax].errors {
            argmax = h.j;
        }
    }
    Ok(RiskEstimate {
        trials,
        seed,
        max_risk: hypotheses[argmax].phat,
        argmax,
        hypotheses,
    })
}

/// Spread of the per-hypothesis risks, an empirical check of the flat risk
/// landscape that unitary invariance predicts. A diagnostic, not a proof.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flatness {
    /// `max_j phat_j - min_j phat_j`.
    pub spread: f64,
    /// `sqrt(2 pbar (1 - pbar) / N)`: standard error of a difference of two
    /// frequencies at the pooled rate `pbar`.
    pub pooled_se: f64,
    pub verdict: Verdict,
}

pub fn risk_landscape_flatness(est: &RiskEstimate) -> Flatness {
    let (lo, hi) = est
        .hypotheses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(h.phat), hi.max(h.phat)));
    let spread = if est.hypotheses.len() < 2 { 0.0 } else { hi - lo };
    let errors: u64 = est.hypotheses.iter().map(|h| h.errors).sum();
    let pbar = errors as f64 / (est.trials as f64 * est.hypotheses.len() as f64);
    let pooled_se = (2.0 * pbar * (1.0 - pbar) / est.trials as f64).sqrt();
    Flatness {
        spread,
        pooled_se,
        verdict: Verdict::from_bool(spread <= FLATNESS_SE * pooled_se),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::DesignStrategy;
    use crate::zoo;

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036_994).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.403_832).abs() < 1e-5 && (hi - 0.596_168).abs() < 1e-5);
        let (lo, hi) = wilson_interval(100, 100, Z95);
        assert!(hi == 1.0 && lo < 1.0);
    }

    #[test]
    fn single_hypothesis_never_errs() {
        let f = Family::explicit(vec![vec![0.3, 0.1]], 1.0).unwrap();
        let r = estimate_risk(&f, &Sensing::ISOTROPIC, 50, 1).unwrap();
        assert_eq!(r.max_risk, 0.0);
        let fl = risk_landscape_flatness(&r);
        assert_eq!(fl.spread, 0.0);
        assert_eq!(fl.verdict, Verdict::Pass);
    }

    #[test]
    fn deterministic_and_scheduling_free() {
        let f = zoo::make_ksets(5, 2, 1.0).unwrap();
        let a = estimate_risk(&f, &Sensing::ISOTROPIC, 300, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_risk(&f, &Sensing::ISOTROPIC, 300, 9).unwrap());
        assert_eq!(a, b);
        let c = estimate_risk(&f, &Sensing::ISOTROPIC, 300, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn refuses_budget_and_zero_trials() {
        let f = zoo::make_ksets(5, 2, 1.0).unwrap();
        assert!(matches!(
            estimate_risk_with_budget(&f, &Sensing::ISOTROPIC, 11, 0, 100),
            Err(SnmError::CapabilityLimit(_))
        ));
        assert!(estimate_risk(&f, &Sensing::ISOTROPIC, 0, 0).is_err());
        let b = DesignStrategy::uniform(3, 3.0).unwrap();
        assert!(estimate_risk(&f, &b.into(), 10, 0).is_err());
    }

    #[test]
    fn unsensed_family_is_pure_guessing() {
        // with B = 0 every score is ||v||_B^2 = 0 and the decoder always answers 0
        let f = zoo::make_ksets(4, 1, 3.0).unwrap();
        let b = DesignStrategy::new(vec![0.0; 4]).unwrap();
        let r = estimate_risk(&f, &b.into(), 20, 3).unwrap();
        assert_eq!(r.hypotheses[0].errors, 0);
        assert!(r.hypotheses[1..].iter().all(|h| h.errors == 20));
        assert_eq!(r.argmax, 1);
    }

    #[test]
    fn csv_layout() {
        let f = Family::explicit(vec![vec![0.0], vec![2.0]], 1.0).unwrap();
        let r = estimate_risk(&f, &Sensing::ISOTROPIC, 10, 0).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("j,errors,N,phat,lo,hi\n0,"));
        assert_eq!(text.lines().count(), 3);
    }
}
