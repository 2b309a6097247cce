//! Family and design specifications accepted on the command line.

use std::path::Path;

use serde::Deserialize;
use snm::cbm::CbmParams;
use snm::design::{optimize_design, uniform_design, OptimizerConfig};
use snm::{zoo, BarabasiAlbert, DesignStrategy, Family, Graph, Sensing, Verdict};

use crate::error::{CliError, CliResult};

/// `{"kind": "ksets", "d": 8, "k": 2}` and friends.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Ksets { d: usize, k: usize },
    Biclusters { d: usize, k: usize },
    Cbm { n: usize, m: usize },
    Stars(StarsSpec),
    Explicit { vectors: Vec<Vec<f64>> },
}

/// Exactly one graph source.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarsSpec {
    pub graph: Option<Graph>,
    pub ba: Option<BarabasiAlbert>,
    pub path: Option<usize>,
    pub complete: Option<usize>,
}

impl StarsSpec {
    pub fn graph(&self) -> CliResult<Graph> {
        let sources = [self.graph.is_some(), self.ba.is_some(), self.path.is_some(), self.complete.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(CliError::usage("stars needs exactly one of graph, ba, path, complete"));
        }
        Ok(if let Some(g) = &self.graph {
            g.clone()
        } else if let Some(ba) = &self.ba {
            ba.generate()?
        } else if let Some(n) = self.path {
            Graph::path(n)
        } else {
            Graph::complete(self.complete.unwrap_or_default())
        })
    }
}

impl FamilySpec {
    /// Inline JSON when the argument starts with `{`, otherwise a file path.
    pub fn parse(arg: &str) -> CliResult<Self> {
        let text = read_inline_or_file(arg)?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("family spec: {e}")))
    }

    pub fn build(&self, mu: f64) -> CliResult<Family> {
        Ok(match self {
            FamilySpec::Ksets { d, k } => zoo::make_ksets(*d, *k, mu)?,
            FamilySpec::Biclusters { d, k } => zoo::make_biclusters(*d, *k, mu)?,
            FamilySpec::Cbm { n, m } => zoo::make_cbm(CbmParams::new(*n, *m)?, mu)?,
            FamilySpec::Stars(s) => zoo::make_stars(&s.graph()?, mu)?,
            FamilySpec::Explicit { vectors } => Family::explicit(vectors.clone(), mu)?,
        })
    }
}

pub fn read_inline_or_file(arg: &str) -> CliResult<String> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(Path::new(arg)).map_err(|e| CliError::usage(format!("cannot read {arg}: {e}")))
    }
}

/// `isotropic`, `uniform`, `opt`, or a path to a `{"tau", "B"}` file.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignMode {
    Isotropic,
    Uniform,
    Opt,
    File(String),
}

impl DesignMode {
    pub fn parse(s: &str) -> Self {
        match s {
            "isotropic" => Self::Isotropic,
            "uniform" => Self::Uniform,
            "opt" => Self::Opt,
            path => Self::File(path.to_string()),
        }
    }

    /// Label used in the `design_mode` column.
    pub fn label(&self) -> &str {
        match self {
            Self::Isotropic => "isotropic",
            Self::Uniform => "uniform",
            Self::Opt => "opt",
            Self::File(_) => "file",
        }
    }

    /// Resolves the sensing strategy for `family`. `opt` minimizes `W(V, alpha, B)`
    /// at the family's own signal strength and also returns the optimizer verdict.
    pub fn resolve(&self, family: &Family, tau: Option<f64>, alpha: f64) -> CliResult<(Sensing, Verdict)> {
        let d = family.dimension();
        let tau = tau.unwrap_or(d as f64);
        Ok(match self {
            Self::Isotropic => (Sensing::ISOTROPIC, Verdict::Pass),
            Self::Uniform => (uniform_design(d, tau)?.into(), Verdict::Pass),
            Self::Opt => {
                let out = optimize_design(family, &OptimizerConfig::new(alpha, tau))?;
                (out.design.into(), out.verdict)
            }
            Self::File(path) => {
                let b: DesignStrategy = serde_json::from_str(&read_inline_or_file(path)?)?;
                (b.into(), Verdict::Pass)
            }
        })
    }
}
