//! Observation models and the maximum-likelihood decoder.
//!
//! Under a sensing strategy `B`, coordinate `i` is observed as
//! `y(i) = mu v_j(i) + z_i / sqrt(B(i))` with `z_i` standard normal, and
//! `y(i) = 0` exactly when `B(i) = 0`. The isotropic model is `B = 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SnmError};
use crate::family::{Family, SparseVector};

/// The generic decoder refuses families larger than this rather than subsample.
pub const DECODE_LIMIT: u128 = 1_000_000;

/// Relative tolerance between a declared budget and `sum B(i)`.
pub const BUDGET_RTOL: f64 = 1e-9;

/// Nonnegative per-coordinate sensing energies with total budget `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignJson", into = "DesignJson")]
pub struct DesignStrategy {
    tau: f64,
    energies: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DesignJson {
    tau: f64,
    #[serde(rename = "B")]
    energies: Vec<f64>,
}

impl TryFrom<DesignJson> for DesignStrategy {
    type Error = SnmError;
    fn try_from(j: DesignJson) -> Result<Self> {
        DesignStrategy::with_budget(j.energies, j.tau)
    }
}

impl From<DesignStrategy> for DesignJson {
    fn from(d: DesignStrategy) -> Self {
        DesignJson {
            tau: d.tau,
            energies: d.energies,
        }
    }
}

impl DesignStrategy {
    /// Budget taken as `sum B(i)`.
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        check_energies(&energies)?;
        let tau = energies.iter().sum();
        Ok(Self { tau, energies })
    }

    /// Checks that the declared budget matches `sum B(i)`.
    pub fn with_budget(energies: Vec<f64>, tau: f64) -> Result<Self> {
        check_energies(&energies)?;
        let total: f64 = energies.iter().sum();
        if !(tau.is_finite() && (total - tau).abs() <= BUDGET_RTOL * tau.abs().max(f64::MIN_POSITIVE)) {
            return Err(invalid(format!("energies sum to {total}, declared budget is {tau}")));
        }
        Ok(Self { tau, energies })
    }

    /// `B(i) = tau / d`.
    pub fn uniform(d: usize, tau: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("design dimension must be >= 1"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid(format!("budget must be positive, got {tau}")));
        }
        Ok(Self {
            tau,
            energies: vec![tau / d as f64; d],
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    /// The common value when every coordinate carries the same energy.
    pub fn uniform_value(&self) -> Option<f64> {
        let first = *self.energies.first()?;
        self.energies.iter().all(|&b| b == first).then_some(first)
    }

    pub(crate) fn check_dimension(&self, d: usize) -> Result<()> {
        if self.energies.len() == d {
            Ok(())
        } else {
            Err(SnmError::DimensionMismatch {
                expected: d,
                actual: self.energies.len(),
            })
        }
    }
}

fn check_energies(energies: &[f64]) -> Result<()> {
    if energies.is_empty() {
        return Err(invalid("design must have at least one coordinate"));
    }
    if let Some(b) = energies.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(invalid(format!("sensing energies must be finite and >= 0, got {b}")));
    }
    Ok(())
}

/// How observations are acquired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sensing {
    Isotropic(IsotropicTag),
    Design(DesignStrategy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsotropicTag {
    Isotropic,
}

impl Sensing {
    pub const ISOTROPIC: Sensing = Sensing::Isotropic(IsotropicTag::Isotropic);

    pub fn design(&self) -> Option<&DesignStrategy> {
        match self {
            Sensing::Design(b) => Some(b),
            Sensing::Isotropic(_) => None,
        }
    }

    pub(crate) fn check_dimension(&self, d: usize) -> Result<()> {
        match self {
            Sensing::Design(b) => b.check_dimension(d),
            Sensing::Isotropic(_) => Ok(()),
        }
    }
}

impl From<DesignStrategy> for Sensing {
    fn from(b: DesignStrategy) -> Self {
        Sensing::Design(b)
    }
}

/// A reproducible random stream identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Ziggurat standard normal.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub(crate) fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: Vec<f64>,
    pub hypothesis: Option<usize>,
    #[serde(rename = "B", with = "sensing_as_array")]
    pub sensing: Sensing,
}

// Observations carry `B` as a bare array (or the string "isotropic").
mod sensing_as_array {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{DesignStrategy, IsotropicTag, Sensing};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Isotropic(IsotropicTag),
        Energies(Vec<f64>),
    }

    pub fn serialize<S: Serializer>(s: &Sensing, ser: S) -> Result<S::Ok, S::Error> {
        match s {
            Sensing::Isotropic(t) => Repr::Isotropic(*t),
            Sensing::Design(b) => Repr::Energies(b.energies().to_vec()),
        }
        .serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Sensing, D::Error> {
        Ok(match Repr::deserialize(de)? {
            Repr::Isotropic(t) => Sensing::Isotropic(t),
            Repr::Energies(b) => Sensing::Design(DesignStrategy::new(b).map_err(serde::de::Error::custom)?),
        })
    }
}

/// Draws `y ~ P_{j,B}`. One normal variate is consumed per coordinate,
/// including unsensed ones, so streams stay aligned across designs.
pub fn sample_observation(family: &Family, j: usize, sensing: &Sensing, rng: &mut RngHandle) -> Result<Observation> {
    sensing.check_dimension(family.dimension())?;
    let mean = family.base_sparse(j)?;
    let mut y = vec![0.0; family.dimension()];
    fill_observation(&mut y, &mean, family.mu(), sensing, rng);
    Ok(Observation {
        y,
        hypothesis: Some(j),
        sensing: sensing.clone(),
    })
}

pub(crate) fn fill_observation(y: &mut [f64], mean: &SparseVector, mu: f64, sensing: &Sensing, rng: &mut RngHandle) {
    match sensing {
        Sensing::Isotropic(_) => {
            y.iter_mut().for_each(|x| *x = rng.standard_normal());
        }
        Sensing::Design(b) => {
            for (x, &e) in y.iter_mut().zip(b.energies()) {
                let z = rng.standard_normal();
                *x = if e > 0.0 { z / e.sqrt() } else { 0.0 };
            }
        }
    }
    let energies = sensing.design().map(DesignStrategy::energies);
    for (&i, &v) in mean.indices.iter().zip(&mean.values) {
        if energies.is_none_or(|b| b[i] > 0.0) {
            y[i] += mu * v;
        }
    }
}

/// Nearest-hypothesis decoder in the (weighted) Euclidean metric.
#[derive(Debug, Clone)]
pub struct Decoder {
    dim: usize,
    // mean vectors mu * v_j, nonzeros only
    means: Vec<SparseVector>,
}

impl Decoder {
    pub fn new(family: &Family) -> Result<Self> {
        let mu = family.mu();
        let means = family
            .sparse_vectors(DECODE_LIMIT)?
            .into_iter()
            .map(|mut v| {
                v.values.iter_mut().for_each(|x| *x *= mu);
                v
            })
            .collect();
        Ok(Self {
            dim: family.dimension(),
            means,
        })
    }

    pub fn hypothesis_count(&self) -> usize {
        self.means.len()
    }

    /// `argmin_j ||mu v_j - y||_B^2`, ties to the lowest index.
    pub fn decode(&self, y: &[f64], sensing: &Sensing) -> Result<usize> {
        if y.len() != self.dim {
            return Err(SnmError::DimensionMismatch {
                expected: self.dim,
                actual: y.len(),
            });
        }
        sensing.check_dimension(self.dim)?;
        Ok(self.decode_unchecked(y, sensing.design().map(DesignStrategy::energies)))
    }

    // ||v - y||_B^2 - ||y||_B^2 = sum over nonzeros of v of B(i) v(i) (v(i) - 2 y(i));
    // the dropped term is common to all hypotheses.
    pub(crate) fn decode_unchecked(&self, y: &[f64], weights: Option<&[f64]>) -> usize {
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for (j, v) in self.means.iter().enumerate() {
            let score: f64 = match weights {
                None => v.indices.iter().zip(&v.values).map(|(&i, &x)| x * (x - 2.0 * y[i])).sum(),
                Some(b) => v
                    .indices
                    .iter()
                    .zip(&v.values)
                    .map(|(&i, &x)| b[i] * x * (x - 2.0 * y[i]))
                    .sum(),
            };
            if score < best_score {
                best = j;
                best_score = score;
            }
        }
        best
    }
}

/// Decodes a single observation, using the design it carries.
pub fn mle_decode(family: &Family, obs: &Observation) -> Result<usize> {
    Decoder::new(family)?.decode(&obs.y, &obs.sensing)
}
