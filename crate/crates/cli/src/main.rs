//! `perispec` command-line front end.
//!
//! Exit codes: 0 success or ACCEPT, 1 REJECT, 2 numerical failure or malformed
//! input, 3 inconclusive.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use perispec::characterize::{
    a_max, characterize, det_scan, weighted_sums_with, Amax, CheckConfig, CheckReport,
    ConditionReport, Grid, ScanOptions, ScanSummary, Verdict,
};
use perispec::evalseries::{eval_ftilde, eval_k, SeriesBudget};
use perispec::forward::{forward_map, SpectralData};
use perispec::inverse::{
    default_samples, inverse_map, inverse_map_marchenko, marchenko_solve, v_from_s,
};
use perispec::io::{
    read_potential, read_spectral, to_json_string, write_kernel_csv, write_scan_csv, KernelSample,
    PotentialDoc, SpectralDoc,
};
use perispec::lattice::{from_halfline, to_halfline};
use perispec::{Error, Form, FourierPotential, ModelOrder, Result, Tolerances};

#[derive(Parser)]
#[command(
    name = "perispec",
    version,
    about = "Forward/inverse spectral maps for even-order periodic operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Potential JSON -> spectral data JSON.
    Forward(Common),
    /// Spectral data JSON -> potential JSON.
    Inverse {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inv: InverseOpts,
        /// Skip the characterization pre-gate verdict.
        #[arg(long)]
        force: bool,
    },
    /// Characterization verdict for spectral data.
    Check(Common),
    /// Determinant values over a grid (CSV) plus winding summary (JSON).
    DetScan {
        #[command(flatten)]
        common: Common,
        /// Summary JSON path (defaults to `<out>.json` when --out is given).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Kernel or transmission-function samples from spectral data (CSV).
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = EvalWhat::Kernel)]
        what: EvalWhat,
        /// Route for the kernel.
        #[arg(long, value_enum, default_value_t = Via::Recurrence)]
        via: Via,
        /// `start:end:count`
        #[arg(long, default_value = "0:1:5")]
        t: Range,
        /// `start:end:count`; only `u >= t` is sampled for the kernel.
        #[arg(long, default_value = "0:2:9")]
        u: Range,
        /// Summary JSON path (defaults to `<out>.json` when --out is given).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Potential -> spectral data -> potential -> spectral data, reporting both gaps.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inv: InverseOpts,
    },
    /// The constant a_m.
    Amax {
        #[command(flatten)]
        common: Common,
        /// Finite-block search size (>= 64).
        #[arg(long, default_value_t = 128)]
        search: usize,
    },
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Input JSON document.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model order; must agree with the input document when both are given.
    #[arg(long)]
    m: Option<usize>,
    /// Truncation (defaults to the input document's N).
    #[arg(long = "N")]
    n: Option<usize>,
    /// Section size for determinants (defaults to N).
    #[arg(long)]
    section: Option<usize>,
    /// Tolerance overrides, `key=value[,key=value]` with keys resonance, remainder, singular, near_pole.
    #[arg(long)]
    tol: Option<TolArg>,
    /// Scan grid `x0:ymax:nx:ny` (default 0:30:64:60).
    #[arg(long)]
    grid: Option<Grid>,
}

#[derive(Args, Clone, Debug)]
struct InverseOpts {
    #[arg(long, value_enum, default_value_t = Via::Recurrence)]
    via: Via,
    /// Coefficient form of the written potential.
    #[arg(long, value_enum, default_value_t = FormArg::Halfline)]
    form: FormArg,
    /// DFT samples for the Marchenko route (default max(8N, 64)).
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Via {
    Recurrence,
    Marchenko,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FormArg {
    Halfline,
    Periodic,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Form {
        match f {
            FormArg::Halfline => Form::Halfline,
            FormArg::Periodic => Form::Periodic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EvalWhat {
    Kernel,
    Ftilde,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct TolArg(Tolerances);

impl FromStr for TolArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut tol = Tolerances::default();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got '{part}'"))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("bad number '{value}'"))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("tolerance {key} must be positive, got {v}"));
            }
            match key.trim() {
                "resonance" => tol.resonance = v,
                "remainder" => tol.remainder = v,
                "singular" => tol.singular = v,
                "near_pole" => tol.near_pole = v,
                other => return Err(format!("unknown tolerance '{other}'")),
            }
        }
        Ok(TolArg(tol))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct Range {
    start: f64,
    end: f64,
    count: usize,
}

impl Range {
    fn points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.start],
            c => (0..c)
                .map(|i| self.start + (self.end - self.start) * i as f64 / (c - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let p: Vec<&str> = s.split(':').collect();
        let bad = || format!("range must be start:end:count, got '{s}'");
        if p.len() != 3 {
            return Err(bad());
        }
        let r = Range {
            start: p[0].trim().parse().map_err(|_| bad())?,
            end: p[1].trim().parse().map_err(|_| bad())?,
            count: p[2].trim().parse().map_err(|_| bad())?,
        };
        if !r.start.is_finite() || !r.end.is_finite() {
            return Err(bad());
        }
        Ok(r)
    }
}

/// Effective configuration, echoed into every output.
#[derive(Clone, Debug, Serialize)]
struct RunConfig {
    command: &'static str,
    input: Option<String>,
    output: Option<String>,
    m: Option<usize>,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    section: Option<usize>,
    tol: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    via: Option<Via>,
    #[serde(skip_serializing_if = "Option::is_none")]
    form: Option<FormArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    force: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<serde_json::Value>,
}

impl RunConfig {
    fn new(command: &'static str, c: &Common) -> Self {
        Self {
            command,
            input: c.input.as_ref().map(|p| p.display().to_string()),
            output: c.out.as_ref().map(|p| p.display().to_string()),
            m: c.m,
            n: c.n,
            section: None,
            tol: c.tol(),
            grid: None,
            via: None,
            form: None,
            samples: None,
            force: None,
            extra: None,
        }
    }
}

impl Common {
    fn tol(&self) -> Tolerances {
        self.tol.map(|t| t.0).unwrap_or_default()
    }

    fn read_input(&self) -> Result<String> {
        let path = self
            .input
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("--in is required".into()))?;
        Ok(fs::read_to_string(path)?)
    }

    fn check_order(&self, order: ModelOrder) -> Result<()> {
        match self.m {
            Some(m) if m != order.m() => Err(Error::InvalidInput(format!(
                "--m {m} disagrees with input document (m = {})",
                order.m()
            ))),
            _ => Ok(()),
        }
    }

    fn potential(&self) -> Result<FourierPotential> {
        let q = read_potential(&self.read_input()?)?;
        self.check_order(q.order())?;
        Ok(q)
    }

    fn spectral(&self) -> Result<SpectralData> {
        let s = read_spectral(&self.read_input()?)?;
        self.check_order(s.order())?;
        Ok(s)
    }

    fn check_config(&self, section: usize) -> CheckConfig {
        CheckConfig {
            section: Some(section),
            grid: self.grid.unwrap_or_default(),
            scan: ScanOptions::default(),
            tol: self.tol(),
            ..Default::default()
        }
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn sidecar(report: Option<&PathBuf>, out: Option<&PathBuf>) -> Option<PathBuf> {
    report.cloned().or_else(|| {
        out.map(|o| {
            let mut s = o.as_os_str().to_owned();
            s.push(".json");
            PathBuf::from(s)
        })
    })
}

fn in_form(q: FourierPotential, form: Form) -> FourierPotential {
    match (q.form(), form) {
        (Form::Halfline, Form::Periodic) => from_halfline(&q),
        (Form::Periodic, Form::Halfline) => to_halfline(&q),
        _ => q,
    }
}

#[derive(Serialize)]
struct SpectralOut {
    #[serde(flatten)]
    doc: SpectralDoc,
    config: RunConfig,
    diagnostics: ConditionReport,
}

fn run_forward(c: &Common) -> Result<u8> {
    let q = c.potential()?;
    let n = c.n.unwrap_or(q.n_max());
    let tol = c.tol();
    let (v, s) = forward_map(&q, n, &tol)?;
    let amax = a_max(q.order(), 64)?;
    let mut config = RunConfig::new("forward", c);
    config.m = Some(q.order().m());
    config.n = Some(n);
    let out = SpectralOut {
        doc: SpectralDoc::from_data(&s),
        config,
        diagnostics: weighted_sums_with(&s, Some(&v), amax.value),
    };
    emit(c.out.as_deref(), &to_json_string(&out)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct GateSummary {
    verdict: Verdict,
    reasons: Vec<String>,
    forced: bool,
}

#[derive(Serialize)]
struct PotentialOut {
    #[serde(flatten)]
    doc: PotentialDoc,
    config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    gate: Option<GateSummary>,
    /// Second reconstruction when `--via both`.
    #[serde(skip_serializing_if = "Option::is_none")]
    marchenko: Option<PotentialDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<f64>,
}

/// Reconstructions by the requested route(s), in half-line form.
fn reconstruct(
    s: &SpectralData,
    n: usize,
    via: Via,
    samples: usize,
    tol: &Tolerances,
) -> Result<(FourierPotential, Option<FourierPotential>)> {
    let s = s.with_truncation(n);
    match via {
        Via::Recurrence => Ok((inverse_map(&s, n, tol)?, None)),
        Via::Marchenko => Ok((inverse_map_marchenko(&s, n, samples, tol)?, None)),
        Via::Both => {
            let a = inverse_map(&s, n, tol)?;
            let b = inverse_map_marchenko(&s, n, samples, tol)?;
            Ok((a, Some(b)))
        }
    }
}

fn run_inverse(c: &Common, inv: &InverseOpts, force: bool) -> Result<u8> {
    let s = c.spectral()?;
    let n = c.n.unwrap_or(s.n_max());
    let section = c.section.unwrap_or(n).min(s.n_max());
    let tol = c.tol();
    let check = c.check_config(section);
    let report = characterize(&s, &check)?;
    let mut config = RunConfig::new("inverse", c);
    config.m = Some(s.order().m());
    config.n = Some(n);
    config.section = Some(section);
    config.grid = Some(check.grid);
    config.via = Some(inv.via);
    config.form = Some(inv.form);
    config.force = Some(force);
    if report.verdict == Verdict::Reject && !force {
        eprintln!("pre-gate rejected the data (use --force to invert anyway):");
        for r in &report.reasons {
            eprintln!("  {r}");
        }
        return Ok(1);
    }
    let samples = inv.samples.unwrap_or_else(|| default_samples(n));
    if inv.via != Via::Recurrence {
        config.samples = Some(samples);
    }
    let (q, alt) = reconstruct(&s, n, inv.via, samples, &tol)?;
    let deviation = alt.as_ref().map(|b| q.max_abs_diff(b));
    let form = Form::from(inv.form);
    let out = PotentialOut {
        doc: PotentialDoc::from_potential(&in_form(q, form)),
        config,
        gate: Some(GateSummary {
            verdict: report.verdict,
            reasons: report.reasons,
            forced: force,
        }),
        marchenko: alt.map(|b| PotentialDoc::from_potential(&in_form(b, form))),
        deviation,
    };
    emit(c.out.as_deref(), &to_json_string(&out)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct CheckOut {
    #[serde(flatten)]
    report: CheckReport,
    config: RunConfig,
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Accept => 0,
        Verdict::Reject => 1,
        Verdict::Inconclusive => 3,
    }
}

fn run_check(c: &Common) -> Result<u8> {
    let s = c.spectral()?;
    let section = c.section.or(c.n).unwrap_or(s.n_max()).min(s.n_max());
    let check = c.check_config(section);
    let report = characterize(&s, &check)?;
    let mut config = RunConfig::new("check", c);
    config.m = Some(s.order().m());
    config.n = Some(s.n_max());
    config.section = Some(section);
    config.grid = Some(check.grid);
    let code = verdict_code(report.verdict);
    emit(
        c.out.as_deref(),
        &to_json_string(&CheckOut { report, config })?,
    )?;
    Ok(code)
}

#[derive(Serialize)]
struct ScanOut {
    #[serde(flatten)]
    summary: ScanSummary,
    config: RunConfig,
}

fn run_detscan(c: &Common, report: Option<&PathBuf>) -> Result<u8> {
    let s = c.spectral()?;
    let section = c.section.or(c.n).unwrap_or(s.n_max()).min(s.n_max());
    let grid = c.grid.unwrap_or_default();
    let scan = det_scan(&s, grid, section, &c.tol(), ScanOptions::default())?;
    let mut csv = Vec::new();
    write_scan_csv(&scan, &mut csv)?;
    emit(
        c.out.as_deref(),
        &String::from_utf8(csv).expect("csv is ascii"),
    )?;
    let mut config = RunConfig::new("det-scan", c);
    config.m = Some(s.order().m());
    config.n = Some(s.n_max());
    config.section = Some(section);
    config.grid = Some(grid);
    if let Some(path) = sidecar(report, c.out.as_ref()) {
        let out = ScanOut {
            summary: scan.summary(),
            config,
        };
        fs::write(path, to_json_string(&out)?)?;
    }
    Ok(if scan.inconclusive.is_empty() { 0 } else { 3 })
}

#[derive(Serialize)]
struct EvalOut {
    config: RunConfig,
    rows: usize,
}

fn run_eval(
    c: &Common,
    what: EvalWhat,
    via: Via,
    ts: &Range,
    us: &Range,
    report: Option<&PathBuf>,
) -> Result<u8> {
    let s = c.spectral()?;
    let n = c.n.unwrap_or(s.n_max());
    let s = s.with_truncation(n);
    let tol = c.tol();
    let mut rows = Vec::new();
    match what {
        EvalWhat::Ftilde => {
            for &t in &ts.points() {
                for &u in &us.points() {
                    let f = eval_ftilde(t, u, &s, SeriesBudget::default());
                    rows.push(KernelSample {
                        t,
                        u,
                        k: f.value,
                        error_bound: f.error_bound,
                    });
                }
            }
        }
        EvalWhat::Kernel => {
            if via == Via::Both {
                return Err(Error::InvalidInput(
                    "eval --via both is not supported".into(),
                ));
            }
            let v = v_from_s(&s, n, &tol)?;
            for &t in &ts.points() {
                if t < 0.0 {
                    return Err(Error::InvalidInput(format!("kernel needs t >= 0, got {t}")));
                }
                let section = match via {
                    Via::Marchenko => Some(marchenko_solve(&s, t, n, &tol)?),
                    _ => None,
                };
                for &u in us.points().iter().filter(|&&u| u >= t) {
                    let series = eval_k(t, u, &v, SeriesBudget::default())?;
                    let sample = match &section {
                        // error column: deviation from the independent series route
                        Some(sec) => {
                            let k = sec.eval(u);
                            KernelSample {
                                t,
                                u,
                                k,
                                error_bound: (k - series.value).norm(),
                            }
                        }
                        None => KernelSample {
                            t,
                            u,
                            k: series.value,
                            error_bound: series.error_bound,
                        },
                    };
                    rows.push(sample);
                }
            }
        }
    }
    let mut csv = Vec::new();
    write_kernel_csv(&rows, &mut csv)?;
    emit(
        c.out.as_deref(),
        &String::from_utf8(csv).expect("csv is ascii"),
    )?;
    if let Some(path) = sidecar(report, c.out.as_ref()) {
        let mut config = RunConfig::new("eval", c);
        config.m = Some(s.order().m());
        config.n = Some(n);
        config.via = Some(via);
        config.extra = Some(serde_json::json!({ "what": what, "t": ts, "u": us }));
        fs::write(
            path,
            to_json_string(&EvalOut {
                config,
                rows: rows.len(),
            })?,
        )?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct RoundtripOut {
    config: RunConfig,
    /// `max |q - inverse(forward(q))|` (half-line coefficients).
    potential_gap: f64,
    /// `max |S - forward(inverse(S))|`.
    spectral_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    marchenko_potential_gap: Option<f64>,
}

fn run_roundtrip(c: &Common, inv: &InverseOpts) -> Result<u8> {
    let q = c.potential()?;
    let n = c.n.unwrap_or(q.n_max());
    let tol = c.tol();
    let q = to_halfline(&q).with_truncation(n);
    let (_, s) = forward_map(&q, n, &tol)?;
    let samples = inv.samples.unwrap_or_else(|| default_samples(n));
    let (back, alt) = reconstruct(&s, n, inv.via, samples, &tol)?;
    let (_, s2) = forward_map(&back, n, &tol)?;
    let mut config = RunConfig::new("roundtrip", c);
    config.m = Some(q.order().m());
    config.n = Some(n);
    config.via = Some(inv.via);
    if inv.via != Via::Recurrence {
        config.samples = Some(samples);
    }
    let out = RoundtripOut {
        config,
        potential_gap: q.max_abs_diff(&back),
        spectral_gap: s.max_abs_diff(&s2),
        marchenko_potential_gap: alt.map(|b| q.max_abs_diff(&b)),
    };
    emit(c.out.as_deref(), &to_json_string(&out)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct AmaxOut {
    #[serde(flatten)]
    amax: Amax,
    config: RunConfig,
}

fn run_amax(c: &Common, search: usize) -> Result<u8> {
    let m =
        c.m.ok_or_else(|| Error::InvalidInput("amax needs --m".into()))?;
    let amax = a_max(ModelOrder::new(m)?, search)?;
    let mut config = RunConfig::new("amax", c);
    config.extra = Some(serde_json::json!({ "search": search }));
    emit(
        c.out.as_deref(),
        &to_json_string(&AmaxOut { amax, config })?,
    )?;
    Ok(0)
}

fn configure_threads() {
    if let Some(n) = std::env::var("PERISPEC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            // only fails if a pool already exists, which cannot happen this early
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::Forward(c) => run_forward(c),
        Command::Inverse { common, inv, force } => run_inverse(common, inv, *force),
        Command::Check(c) => run_check(c),
        Command::DetScan { common, report } => run_detscan(common, report.as_ref()),
        Command::Eval {
            common,
            what,
            via,
            t,
            u,
            report,
        } => run_eval(common, *what, *via, t, u, report.as_ref()),
        Command::Roundtrip { common, inv } => run_roundtrip(common, inv),
        Command::Amax { common, search } => run_amax(common, *search),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
