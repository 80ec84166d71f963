use std::fmt::Write as _;
use std::fs;

use serde::{Deserialize, Serialize};

use eivreg::{
    apply_filter, eigvalsh, gram, inverse_trace_oracle, pool_spectrum, risk_curve, risk_functional,
    risk_opt, risk_std, run_experiment, solve_optimal, ExperimentConfig, FilterKind, NoiseModel,
    RngSpec, SpectralFilter, Spectrum, Vector,
};

use eivreg::risk::risk_functional_estimate;

use crate::io::{fmt_f64, read_matrix, read_vector, spectrum_csv, vector_csv};
use crate::{CliError, Format, McArgs, RiskArgs, SolveArgs, SpectrumArgs, SweepArgs};

pub struct SolveOutput {
    pub solution: Vector,
    /// `# key: value` lines.
    pub summary: String,
}

impl SolveOutput {
    pub fn solution_csv(&self) -> String {
        vector_csv(&self.solution)
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<SolveOutput, CliError> {
    let r = read_matrix(&args.matrix)?;
    let y = read_vector(&args.rhs)?;
    if y.dim() != r.rows() {
        return Err(CliError::Input(format!(
            "matrix has {} rows but right-hand side has {} entries",
            r.rows(),
            y.dim()
        )));
    }
    let model = NoiseModel::new(args.a, args.p, args.q, r.cols(), r.rows())?;
    let d = model.derived();
    let kind: FilterKind = args.method.parse()?;
    let filter = kind.resolve(&d)?;
    let solution = match kind {
        FilterKind::Optimal => solve_optimal(&r, &y, &d)?,
        _ => apply_filter(&r, &y, &filter)?,
    };

    let spec = Spectrum::from_eigenvalues(eigvalsh(&gram(&r))?, r.cols())?;
    let mut summary = String::new();
    for (key, value) in [
        ("theta", d.theta),
        ("s", d.s),
        ("alpha", d.alpha),
        ("t", d.t),
        ("risk", risk_functional(&filter, &spec, &d)?),
        ("risk_opt", risk_opt(&spec, &d)),
        ("risk_std", risk_std(&spec, &d)),
    ] {
        let _ = writeln!(summary, "# {key}: {}", fmt_f64(value));
    }
    let _ = writeln!(summary, "# method: {kind}");
    Ok(SolveOutput { solution, summary })
}

fn parse_filters(list: &str) -> Result<Vec<FilterKind>, CliError> {
    let kinds = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<FilterKind>, _>>()?;
    if kinds.is_empty() {
        return Err(CliError::Input("empty filter list".into()));
    }
    Ok(kinds)
}

/// `filter,theory,stderr,gap_vs_opt` on a spectrum pooled from stream `(seed, 0)`.
pub fn cmd_risk(args: &RiskArgs) -> Result<String, CliError> {
    let model = NoiseModel::new(args.a, args.p, args.q, args.n, args.big_n)?;
    let d = model.derived();
    let kinds = parse_filters(&args.filters)?;
    let spec = pool_spectrum(&model, args.samples, RngSpec::new(args.seed, 0))?;
    let best = risk_functional(&SpectralFilter::optimal(&d), &spec, &d)?;
    let mut out = String::from("filter,theory,stderr,gap_vs_opt\n");
    for kind in &kinds {
        let est = risk_functional_estimate(&kind.resolve(&d)?, &spec, &d)?;
        let _ = writeln!(
            out,
            "{kind},{},{},{}",
            fmt_f64(est.mean),
            fmt_f64(est.stderr),
            fmt_f64(est.mean - best)
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub filter: String,
    pub empirical_mean: f64,
    pub stderr: f64,
    pub theory: f64,
    pub z_score: f64,
    pub theory_stderr: f64,
    pub median: f64,
    pub failures: usize,
}

pub fn mc_rows(args: &McArgs) -> Result<Vec<McRow>, CliError> {
    let model = NoiseModel::new(args.a, args.p, args.q, args.n, args.big_n)?;
    let d = model.derived();
    let kinds = parse_filters(&args.filters)?;
    let filters = kinds
        .iter()
        .map(|k| k.resolve(&d))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = ExperimentConfig {
        model,
        filters,
        trials: args.trials,
        seed: args.seed,
        spectrum_samples: args.samples,
    };
    let result = run_experiment(&cfg)?;
    Ok(kinds
        .iter()
        .zip(&result.outcomes)
        .map(|(kind, o)| McRow {
            filter: kind.to_string(),
            empirical_mean: o.empirical.mean,
            stderr: o.empirical.stderr,
            theory: o.theory.d_filter,
            z_score: o.z_score(),
            theory_stderr: o.theory.d_filter_stderr,
            median: o.empirical.median,
            failures: o.empirical.failures,
        })
        .collect())
}

pub fn render_mc(rows: &[McRow], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut out = String::from("filter,empirical_mean,stderr,theory,z_score\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.filter,
                    fmt_f64(r.empirical_mean),
                    fmt_f64(r.stderr),
                    fmt_f64(r.theory),
                    fmt_f64(r.z_score)
                );
            }
            Ok(out)
        }
        Format::Json => {
            // JSON has no infinity; divergent values become strings.
            let values: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    let num = |v: f64| {
                        if v.is_finite() {
                            serde_json::json!(v)
                        } else {
                            serde_json::json!(fmt_f64(v))
                        }
                    };
                    serde_json::json!({
                        "filter": r.filter,
                        "empirical_mean": num(r.empirical_mean),
                        "stderr": num(r.stderr),
                        "theory": num(r.theory),
                        "z_score": num(r.z_score),
                        "theory_stderr": num(r.theory_stderr),
                        "median": num(r.median),
                        "failures": r.failures,
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&values)
                .map_err(|e| CliError::Input(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn cmd_mc(args: &McArgs) -> Result<String, CliError> {
    render_mc(&mc_rows(args)?, args.format)
}

/// Eigenvalue table followed by `# key: value` summary lines.
pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<String, CliError> {
    let model = NoiseModel::new(args.a, args.p, 0.0, args.n, args.big_n)?;
    let spec = pool_spectrum(&model, args.samples, RngSpec::new(args.seed, 0))?;
    let mut out = spectrum_csv(&spec);
    let inv = spec.inverse_trace();
    let mean = spec.mean();
    let _ = writeln!(out, "# samples: {}", spec.samples());
    let _ = writeln!(out, "# mean: {}", fmt_f64(mean.mean));
    let _ = writeln!(out, "# min: {}", fmt_f64(spec.min()));
    let _ = writeln!(out, "# inverse_trace: {}", fmt_f64(inv.mean));
    let _ = writeln!(out, "# inverse_trace_stderr: {}", fmt_f64(inv.stderr));
    match inverse_trace_oracle(&model) {
        Ok(oracle) => {
            let _ = writeln!(out, "# oracle: {}", fmt_f64(oracle));
        }
        Err(_) => {
            let _ = writeln!(out, "# oracle: divergent regime");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Axis<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Copy> Axis<T> {
    fn values(&self) -> Vec<T> {
        match self {
            Axis::One(v) => vec![*v],
            Axis::Many(v) => v.clone(),
        }
    }
}

/// Grid axes accept a scalar or a list; the grid is their Cartesian product.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub a: Axis<f64>,
    pub p: Axis<f64>,
    pub q: Axis<f64>,
    pub n: Axis<usize>,
    #[serde(rename = "N")]
    pub big_n: Axis<usize>,
    #[serde(default = "default_sweep_filters")]
    pub filters: Vec<String>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_spectrum_samples")]
    pub spectrum_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_sweep_filters() -> Vec<String> {
    vec!["optimal".into(), "standard".into()]
}

fn default_trials() -> usize {
    1000
}

fn default_spectrum_samples() -> usize {
    200
}

impl SweepConfig {
    pub fn grid(&self) -> Result<Vec<NoiseModel>, CliError> {
        let mut grid = Vec::new();
        for a in self.a.values() {
            for p in self.p.values() {
                for q in self.q.values() {
                    for n in self.n.values() {
                        for big_n in self.big_n.values() {
                            grid.push(NoiseModel::new(a, p, q, n, big_n)?);
                        }
                    }
                }
            }
        }
        if grid.is_empty() {
            return Err(CliError::Input("sweep grid is empty".into()));
        }
        Ok(grid)
    }
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<String, CliError> {
    let grid = cfg.grid()?;
    let kinds = cfg
        .filters
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<FilterKind>, _>>()?;
    if kinds.is_empty() {
        return Err(CliError::Input("empty filter list".into()));
    }
    let rows = risk_curve(&grid, &kinds, cfg.trials, cfg.spectrum_samples, cfg.seed)?;
    let mut out = String::from("a,p,q,n,N,filter,theory,empirical,stderr,gap_vs_opt\n");
    for r in rows {
        let m = r.model;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(m.a()),
            fmt_f64(m.p()),
            fmt_f64(m.q()),
            m.n(),
            m.big_n(),
            r.filter,
            fmt_f64(r.theory),
            fmt_f64(r.empirical),
            fmt_f64(r.stderr),
            fmt_f64(r.gap_vs_opt)
        );
    }
    Ok(out)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    let cfg: SweepConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    run_sweep(&cfg)
}
