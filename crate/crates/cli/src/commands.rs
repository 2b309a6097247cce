use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use snm::adaptive::{noninteractive_rate, required_signal, run_adaptive_batch, AdaptiveParams};
use snm::design::{
    certify_stationarity, optimize_design_from, uniform_design, OptimizerConfig, DEFAULT_CERTIFICATE_TOL,
};
use snm::edf::{
    closed_form_rate, min_distance_bound, minimax_lower_bound_holds, mle_upper_bound, RateParams,
};
use snm::family::MATERIALIZE_LIMIT;
use snm::risk::{estimate_risk, risk_landscape_flatness};
use snm::{edf, sedf, zoo, BarabasiAlbert, DesignStrategy, Family, Graph, Sensing, Verdict};

use crate::error::{CliError, CliResult};
use crate::output::{Format, Sink};
use crate::spec::{read_inline_or_file, DesignMode, FamilySpec};

fn check_mu_grid(mu: &[f64]) -> CliResult<()> {
    if mu.is_empty() || mu.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
        return Err(CliError::usage("--mu needs one or more positive values"));
    }
    if mu.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::usage("--mu values must be strictly increasing"));
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> CliResult<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::usage(format!("{name} must be positive, got {x}")))
    }
}

fn sedf_or_edf(family: &Family, alpha: f64, sensing: &Sensing) -> CliResult<f64> {
    Ok(match sensing.design() {
        Some(b) => sedf(family, alpha, b)?.w,
        None => edf(family, alpha)?.w,
    })
}

// ---------------------------------------------------------------- family

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Family spec: inline JSON or a path to a JSON file.
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Serialize)]
struct SpectrumRow {
    hypothesis: usize,
    sq_distance: f64,
    multiplicity: u128,
}

#[derive(Serialize)]
struct FamilySummary {
    kind: String,
    d: usize,
    #[serde(rename = "M")]
    m: u128,
    mu: f64,
    transitive: bool,
    spectrum: Vec<SpectrumRow>,
}

pub fn family(a: FamilyArgs) -> CliResult<()> {
    let f = FamilySpec::parse(&a.family)?.build(a.mu)?;
    let listed = if f.is_transitive() {
        1
    } else {
        f.count_within(MATERIALIZE_LIMIT, "listing spectra")?
    };
    let mut spectrum = Vec::new();
    for j in 0..listed {
        for e in f.distance_spectrum(j)?.entries {
            spectrum.push(SpectrumRow {
                hypothesis: j,
                sq_distance: e.sq_distance,
                multiplicity: e.multiplicity,
            });
        }
    }
    eprintln!("M={}, d={}", f.hypothesis_count(), f.dimension());
    let sink = Sink::new(a.out, a.format)?;
    match a.format {
        Format::Csv => sink.table("spectrum", &spectrum, true),
        Format::Json => sink.json(
            "family",
            &FamilySummary {
                kind: f.kind().map_or("explicit".into(), |k| format!("{k:?}").to_lowercase()),
                d: f.dimension(),
                m: f.hypothesis_count(),
                mu: f.mu(),
                transitive: f.is_transitive(),
                spectrum,
            },
            true,
        ),
    }
}

// ---------------------------------------------------------------- bounds

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub family: String,
    /// Signal strengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub mu: Vec<f64>,
    /// EDF scales reported in the `W` column, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8,1")]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// isotropic | uniform | opt | FILE (`opt` minimizes W(V, 8, B)).
    #[arg(long, default_value = "isotropic")]
    pub design: String,
    /// Budget for uniform/opt designs and budgeted rates (default: d).
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Serialize)]
struct BoundsRow {
    mu: f64,
    alpha: f64,
    #[serde(rename = "W")]
    w: f64,
    #[serde(rename = "W8")]
    w8: f64,
    #[serde(rename = "W1")]
    w1: f64,
    upper_vacuous: bool,
    delta: f64,
    lower_alpha: f64,
    lower_w: f64,
    lower_threshold: f64,
    lower_holds: bool,
    upper_holds: bool,
    min_distance_bound: Option<f64>,
    rate: Option<f64>,
    rate_budgeted: Option<f64>,
    rate_caveat: Option<String>,
}

pub const BOUNDS_COLUMNS: &str = "\
bounds.csv columns:
  mu, alpha           signal strength and EDF scale of the W column
  W                   W(V, alpha[, B])
  W8, W1              W(V, 8[, B]) (MLE risk upper bound) and W(V, 1[, B])
  upper_vacuous       W8 > 1
  delta               risk level of the verdicts
  lower_alpha         2 (1 - delta)
  lower_w             W(V, lower_alpha[, B])
  lower_threshold     2^(1 / (1 - delta)) - 1
  lower_holds         lower_w >= lower_threshold: minimax risk >= delta
  upper_holds         W8 <= delta: MLE maximum risk <= delta
  min_distance_bound  (M - 1) exp(-d_min^2 / 8); empty when M = 1
  rate, rate_budgeted closed-form critical signal strength (empty for explicit families)
  rate_caveat         degree-ratio warning for stars";

pub fn bounds(a: BoundsArgs) -> CliResult<()> {
    check_mu_grid(&a.mu)?;
    for &al in &a.alpha {
        positive("alpha", al)?;
    }
    if !(a.delta > 0.0 && a.delta < 1.0) {
        return Err(CliError::usage(format!("delta must lie in (0, 1), got {}", a.delta)));
    }
    let spec = FamilySpec::parse(&a.family)?;
    let mode = DesignMode::parse(&a.design);
    let mut rows = Vec::new();
    let mut verdict = Verdict::Pass;
    for &mu in &a.mu {
        let f = spec.build(mu)?;
        let (sensing, v) = mode.resolve(&f, a.tau, 8.0)?;
        if v == Verdict::Inconclusive {
            verdict = v;
        }
        let b = sensing.design();
        let upper = mle_upper_bound(&f, b)?;
        let w1 = sedf_or_edf(&f, 1.0, &sensing)?;
        let lower = minimax_lower_bound_holds(&f, a.delta, b)?;
        let md = if f.hypothesis_count() >= 2 {
            Some(min_distance_bound(&f)?)
        } else {
            None
        };
        let tau = b.map(DesignStrategy::tau).or(a.tau);
        let rate = RateParams::for_family(&f, tau).map(closed_form_rate).transpose()?;
        for &alpha in &a.alpha {
            rows.push(BoundsRow {
                mu,
                alpha,
                w: sedf_or_edf(&f, alpha, &sensing)?,
                w8: upper.value,
                w1,
                upper_vacuous: upper.vacuous,
                delta: a.delta,
                lower_alpha: lower.alpha,
                lower_w: lower.w,
                lower_threshold: lower.threshold,
                lower_holds: lower.holds,
                upper_holds: upper.value <= a.delta,
                min_distance_bound: md,
                rate: rate.as_ref().map(|r| r.isotropic),
                rate_budgeted: rate.as_ref().and_then(|r| r.budgeted),
                rate_caveat: rate.as_ref().and_then(|r| r.caveat.clone()),
            });
        }
    }
    Sink::new(a.out, a.format)?.table("bounds", &rows, true)?;
    inconclusive_if(verdict, "design optimizer hit its iteration cap")
}

fn inconclusive_if(v: Verdict, msg: &str) -> CliResult<()> {
    if v == Verdict::Inconclusive {
        Err(CliError::Inconclusive(msg.into()))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------- design

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 8.0)]
    pub alpha: f64,
    /// Budget (default: d).
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    pub step_scale: f64,
    /// Relative improvement of the best objective below which the run has converged.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Iterations over which `--tol` is measured.
    #[arg(long, default_value_t = 200)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_CERTIFICATE_TOL)]
    pub cert_tol: f64,
    /// Starting design file (default: uniform).
    #[arg(long)]
    pub init: Option<String>,
    /// Weights over the argmax set for the certificate, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub pi: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Serialize)]
struct DesignSummary<'a> {
    verdict: Verdict,
    iterations: usize,
    objective: f64,
    uniform_objective: f64,
    design: &'a DesignStrategy,
    certificate: snm::design::Certificate,
    uniform_certificate: snm::design::Certificate,
}

pub const DESIGN_COLUMNS: &str = "\
Writes design.json ({\"tau\", \"B\"}), certificate.json and trace.csv with columns
  iter, objective, best_objective";

pub fn design(a: DesignArgs) -> CliResult<()> {
    let f = FamilySpec::parse(&a.family)?.build(a.mu)?;
    let tau = a.tau.unwrap_or(f.dimension() as f64);
    let cfg = OptimizerConfig {
        alpha: a.alpha,
        tau,
        max_iterations: a.max_iter,
        step_scale: a.step_scale,
        tolerance: a.tol,
        window: a.window,
        certificate_tol: a.cert_tol,
    };
    let init: Option<DesignStrategy> = a
        .init
        .as_deref()
        .map(|p| serde_json::from_str(&read_inline_or_file(p)?).map_err(CliError::from))
        .transpose()?;
    let out = optimize_design_from(&f, &cfg, init.as_ref())?;
    let uniform = uniform_design(f.dimension(), tau)?;
    let summary = DesignSummary {
        verdict: out.verdict,
        iterations: out.iterations,
        objective: out.objective,
        uniform_objective: sedf(&f, a.alpha, &uniform)?.w,
        design: &out.design,
        certificate: certify_stationarity(&f, a.alpha, &out.design, a.pi.as_deref(), a.cert_tol)?,
        uniform_certificate: certify_stationarity(&f, a.alpha, &uniform, None, a.cert_tol)?,
    };
    let sink = Sink::new(a.out, a.format)?;
    sink.table("trace", &out.trace, false)?;
    sink.json("design", &out.design, false)?;
    sink.json("certificate", &summary.certificate, false)?;
    sink.json("summary", &summary, true)?;
    inconclusive_if(out.verdict, "optimizer reached --max-iter before converging")
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON experiment config with any of: family, mu, alpha, tau, trials, seed, design, out.
    /// Flags override config values.
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    /// EDF scale used by `opt` designs (default 8).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Budget for uniform/opt designs (default: d).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Trials per hypothesis (default 1000).
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Design modes, comma separated: isotropic, uniform, opt, or design files.
    #[arg(long, value_delimiter = ',')]
    pub design: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExperimentConfig {
    /// A spec object, or a string holding inline JSON or a path.
    family: Option<serde_json::Value>,
    mu: Option<Vec<f64>>,
    alpha: Option<f64>,
    tau: Option<f64>,
    trials: Option<u64>,
    seed: Option<u64>,
    design: Option<Vec<String>>,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskRow {
    pub mu: f64,
    pub design_mode: String,
    pub max_risk: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub worst_hypothesis: usize,
    pub sedf8: f64,
}

#[derive(Serialize)]
struct HypothesisRow {
    mu: f64,
    design_mode: String,
    j: usize,
    errors: u64,
    #[serde(rename = "N")]
    n: u64,
    phat: f64,
    lo: f64,
    hi: f64,
}

#[derive(Serialize)]
struct FlatnessRow {
    mu: f64,
    design_mode: String,
    spread: f64,
    pooled_se: f64,
    verdict: Verdict,
}

#[derive(Serialize)]
struct AllocationRow {
    mu: f64,
    design_mode: String,
    coordinate: usize,
    energy: f64,
}

pub const SIMULATE_COLUMNS: &str = "\
risk.csv columns:
  mu                signal strength
  design_mode       isotropic | uniform | opt | file
  max_risk          max_j of the Monte Carlo error frequency
  ci_lo, ci_hi      Wilson 95% interval of the worst hypothesis
  worst_hypothesis  lowest index attaining max_risk
  sedf8             W(V, 8, B), the MLE risk upper bound
With --out DIR also: hypotheses.csv (mu, design_mode, j, errors, N, phat, lo, hi),
flatness.csv (mu, design_mode, spread, pooled_se, verdict) and
allocation.csv (mu, design_mode, coordinate, energy).";

pub fn simulate(a: SimulateArgs) -> CliResult<()> {
    let base = match &a.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&read_inline_or_file(path)?)
            .map_err(|e| CliError::usage(format!("config: {e}")))?,
        None => ExperimentConfig::default(),
    };
    let family = a
        .family
        .map(serde_json::Value::String)
        .or(base.family)
        .ok_or_else(|| CliError::usage("--family is required"))?;
    let spec = match family {
        serde_json::Value::String(s) => FamilySpec::parse(&s)?,
        v => serde_json::from_value(v).map_err(|e| CliError::usage(format!("family spec: {e}")))?,
    };
    let mu = a.mu.or(base.mu).unwrap_or_else(|| vec![1.0]);
    check_mu_grid(&mu)?;
    let alpha = positive("alpha", a.alpha.or(base.alpha).unwrap_or(8.0))?;
    let tau = a.tau.or(base.tau).map(|t| positive("tau", t)).transpose()?;
    let trials = a.trials.or(base.trials).unwrap_or(1000);
    if trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let seed = a.seed.or(base.seed).unwrap_or(0);
    let modes: Vec<DesignMode> = a
        .design
        .or(base.design)
        .unwrap_or_else(|| vec!["isotropic".into()])
        .iter()
        .map(|s| DesignMode::parse(s))
        .collect();
    let sink = Sink::new(a.out.or(base.out), a.format)?;

    let (mut risk, mut per, mut flat, mut alloc) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut verdict = Verdict::Pass;
    for &m in &mu {
        let f = spec.build(m)?;
        for mode in &modes {
            let (sensing, v) = mode.resolve(&f, tau, alpha)?;
            if v == Verdict::Inconclusive {
                verdict = v;
            }
            let label = mode.label().to_string();
            let est = estimate_risk(&f, &sensing, trials, seed)?;
            let worst = est.worst();
            risk.push(RiskRow {
                mu: m,
                design_mode: label.clone(),
                max_risk: est.max_risk,
                ci_lo: worst.lo,
                ci_hi: worst.hi,
                worst_hypothesis: est.argmax,
                sedf8: sedf_or_edf(&f, 8.0, &sensing)?,
            });
            per.extend(est.hypotheses.iter().map(|h| HypothesisRow {
                mu: m,
                design_mode: label.clone(),
                j: h.j,
                errors: h.errors,
                n: h.trials,
                phat: h.phat,
                lo: h.lo,
                hi: h.hi,
            }));
            let fl = risk_landscape_flatness(&est);
            flat.push(FlatnessRow {
                mu: m,
                design_mode: label.clone(),
                spread: fl.spread,
                pooled_se: fl.pooled_se,
                verdict: fl.verdict,
            });
            if let Some(b) = sensing.design() {
                alloc.extend(b.energies().iter().enumerate().map(|(i, &e)| AllocationRow {
                    mu: m,
                    design_mode: label.clone(),
                    coordinate: i,
                    energy: e,
                }));
            }
        }
    }
    sink.table("risk", &risk, true)?;
    sink.table("hypotheses", &per, false)?;
    sink.table("flatness", &flat, false)?;
    if !alloc.is_empty() {
        sink.table("allocation", &alloc, false)?;
    }
    inconclusive_if(verdict, "design optimizer hit its iteration cap")
}

// ---------------------------------------------------------------- adaptive

#[derive(Debug, Args)]
pub struct AdaptiveArgs {
    /// Matrix side length.
    #[arg(long = "d", default_value_t = 32)]
    pub d: usize,
    /// Bicluster side length.
    #[arg(long = "k", default_value_t = 8)]
    pub k: usize,
    /// Signal strength (default: the required signal).
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 4096.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 2000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Serialize)]
struct AdaptiveSummary {
    d: usize,
    k: usize,
    mu: f64,
    tau: f64,
    delta: f64,
    probe_budget: usize,
    energy: f64,
    required_signal: f64,
    noninteractive_rate: f64,
    /// noninteractive_rate / required_signal, to compare against sqrt(k).
    rate_ratio: f64,
    sqrt_k: f64,
    runs: snm::adaptive::BatchSummary,
    /// Minimax lower-bound verdict for non-interactive designs at (mu, tau, delta),
    /// evaluated at the uniform allocation tau / d^2 per entry.
    noninteractive_lower_bound: snm::edf::BoundVerdict,
}

pub const ADAPTIVE_COLUMNS: &str = "\
adaptive.csv columns: run, seed, mu, tau, success (0/1), probes, energy_spent.
A JSON summary (success rate, required signal, non-interactive rate and
lower-bound verdict) is written to summary.json, or stdout without --out.";

pub fn adaptive(a: AdaptiveArgs) -> CliResult<()> {
    let req = required_signal(a.d, a.k, a.tau, a.delta)?;
    let p = AdaptiveParams::new(a.d, a.k, a.mu.unwrap_or(req), a.tau, a.delta)?;
    let batch = run_adaptive_batch(&p, a.runs, a.seed)?;
    let family = zoo::make_biclusters(a.d, a.k, p.mu)?;
    let uniform = uniform_design(a.d * a.d, a.tau)?;
    let rate = noninteractive_rate(a.d, a.k, a.tau)?;
    let summary = AdaptiveSummary {
        d: a.d,
        k: a.k,
        mu: p.mu,
        tau: a.tau,
        delta: a.delta,
        probe_budget: p.probe_budget(),
        energy: p.energy(),
        required_signal: req,
        noninteractive_rate: rate,
        rate_ratio: rate / req,
        sqrt_k: (a.k as f64).sqrt(),
        runs: batch.summary(),
        noninteractive_lower_bound: minimax_lower_bound_holds(&family, a.delta, Some(&uniform))?,
    };
    let sink = Sink::new(a.out, a.format)?;
    if sink.has_dir() {
        match a.format {
            Format::Csv => {
                let mut buf = Vec::new();
                batch.write_csv(&mut buf)?;
                sink.raw("adaptive.csv", &buf)?;
            }
            Format::Json => sink.json("adaptive", &batch.runs, false)?,
        }
    }
    sink.json("summary", &summary, true)
}

// ---------------------------------------------------------------- stars

#[derive(Debug, Args)]
pub struct StarsArgs {
    #[arg(long, default_value_t = 13)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub attach: usize,
    /// Size of the complete seed graph; 5 gives 34 edges at n = 13, attach = 3.
    #[arg(long, default_value_t = 5)]
    pub core: usize,
    #[arg(long, default_value_t = 7)]
    pub graph_seed: u64,
    /// Use this graph ({"n", "edges"}) instead of generating one.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4")]
    pub mu: Vec<f64>,
    /// Budget (default: number of edges).
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 8.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Serialize)]
struct EdgeRow {
    mu: f64,
    design_mode: &'static str,
    edge: usize,
    u: usize,
    v: usize,
    energy: f64,
}

#[derive(Serialize)]
struct VertexRow {
    mu: f64,
    design_mode: &'static str,
    vertex: usize,
    degree: usize,
    success_prob: f64,
    ci_lo: f64,
    ci_hi: f64,
}

pub const STARS_COLUMNS: &str = "\
Writes graph.json ({\"n\", \"edges\"}; edge ids are positions in the list) and
  risk.csv            mu, design_mode (uniform | opt), max_risk, ci_lo, ci_hi, worst_hypothesis, sedf8
  allocation.csv      mu, design_mode, edge, u, v, energy
  vertex_success.csv  mu, design_mode, vertex, degree, success_prob, ci_lo, ci_hi
The opt design minimizes W(V, alpha, B) separately at each mu.";

pub fn stars(a: StarsArgs) -> CliResult<()> {
    check_mu_grid(&a.mu)?;
    positive("alpha", a.alpha)?;
    if a.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let g: Graph = match &a.graph {
        Some(p) => serde_json::from_str(&read_inline_or_file(p)?)?,
        None => BarabasiAlbert::new(a.n, a.attach, a.graph_seed).with_core(a.core).generate()?,
    };
    let tau = positive("tau", a.tau.unwrap_or(g.edge_count() as f64))?;
    let uniform = uniform_design(g.edge_count(), tau)?;
    let (mut risk, mut edges, mut vertices) = (Vec::new(), Vec::new(), Vec::new());
    let mut verdict = Verdict::Pass;
    for &mu in &a.mu {
        let f = zoo::make_stars(&g, mu)?;
        let opt = optimize_design_from(&f, &OptimizerConfig::new(a.alpha, tau), None)?;
        if opt.verdict == Verdict::Inconclusive {
            verdict = Verdict::Inconclusive;
        }
        for (label, b) in [("uniform", &uniform), ("opt", &opt.design)] {
            let est = estimate_risk(&f, &Sensing::from(b.clone()), a.trials, a.seed)?;
            let worst = est.worst();
            risk.push(RiskRow {
                mu,
                design_mode: label.into(),
                max_risk: est.max_risk,
                ci_lo: worst.lo,
                ci_hi: worst.hi,
                worst_hypothesis: est.argmax,
                sedf8: sedf(&f, 8.0, b)?.w,
            });
            edges.extend(g.edges().iter().zip(b.energies()).enumerate().map(|(e, (&(u, v), &energy))| EdgeRow {
                mu,
                design_mode: label,
                edge: e,
                u,
                v,
                energy,
            }));
            vertices.extend(est.hypotheses.iter().map(|h| VertexRow {
                mu,
                design_mode: label,
                vertex: h.j,
                degree: g.degree(h.j),
                success_prob: 1.0 - h.phat,
                ci_lo: 1.0 - h.hi,
                ci_hi: 1.0 - h.lo,
            }));
        }
    }
    let sink = Sink::new(a.out, a.format)?;
    sink.json("graph", &g, false)?;
    sink.table("risk", &risk, true)?;
    sink.table("allocation", &edges, false)?;
    sink.table("vertex_success", &vertices, false)?;
    inconclusive_if(verdict, "design optimizer hit its iteration cap")
}
