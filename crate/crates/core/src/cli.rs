//! Command drivers behind the `cvqkd` binary: run manifests, range specs,
//! table rendering, transcript/report files, and replay.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::attack::{as_channel_hook, beam_splitter, AttackConfig, Strategy};
use crate::cloner::gqcm_joint_cm;
use crate::error::{domain, Error, Result};
use crate::phase_space::{pt_min_symplectic_eigenvalue, PHYSICAL_TOL};
use crate::protocol::{run_session_parallel, ChannelModel, ProtocolConfig, RoundKind, Transcript};
use crate::security::{
    build_report, pooled_variance_std_error, threshold_closed_form, threshold_numeric,
    EmpiricalSecurity, SecurityReport, ONE_WAY_THRESHOLD,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRANSCRIPT_HEADER: [&str; 12] = [
    "round",
    "kind",
    "beta_x",
    "beta_p",
    "alpha_x",
    "alpha_p",
    "zeta_x",
    "zeta_p",
    "est_x",
    "est_p",
    "eve_est_x",
    "eve_est_p",
];

/// Number of standard errors allowed in simulation verdicts.
pub const VERDICT_SIGMAS: f64 = 4.0;

/// Ten digits after the decimal point, as printed in every table.
pub fn fmt10(x: f64) -> String {
    format!("{x:.10}")
}

const EXECUTION_ONLY_KEYS: &[&str] = &["workers", "out"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            tool_version: TOOL_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }

    /// Manifest lines embedded in text outputs. The timestamp and the
    /// settings that cannot change the results (`workers`, `out`) are left
    /// out, so the files replay byte-for-byte from any directory and with
    /// any worker count.
    fn comment_lines(&self) -> Result<String> {
        let mut config = self.config.clone();
        if let Value::Object(m) = &mut config {
            for key in EXECUTION_ONLY_KEYS {
                m.remove(*key);
            }
        }
        let mut s = String::new();
        writeln!(s, "# command: {}", self.command).ok();
        writeln!(s, "# tool_version: {}", self.tool_version).ok();
        writeln!(s, "# seed: {}", self.seed).ok();
        writeln!(s, "# config: {}", serde_json::to_string(&config)?).ok();
        Ok(s)
    }
}

/// Parses `start:stop:count[:log]`, or a single number.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| domain(format!("bad number '{s}' in range '{spec}'")))
    };
    if parts.len() == 1 {
        return Ok(vec![num(parts[0])?]);
    }
    if !(3..=4).contains(&parts.len()) {
        return Err(domain(format!(
            "range must be start:stop:count[:log], got '{spec}'"
        )));
    }
    let (start, stop) = (num(parts[0])?, num(parts[1])?);
    let count: usize = parts[2]
        .parse()
        .ok()
        .filter(|&c| c >= 1)
        .ok_or_else(|| domain(format!("bad count '{}' in range '{spec}'", parts[2])))?;
    let log = match parts.get(3) {
        None => false,
        Some(&"log") => true,
        Some(other) => return Err(domain(format!("unknown range flag '{other}'"))),
    };
    if log && !(start > 0.0 && stop > 0.0) {
        return Err(domain("log range needs positive endpoints"));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = |k: usize| k as f64 / (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if log {
                (start.ln() + (stop.ln() - start.ln()) * step(k)).exp()
            } else {
                start + (stop - start) * step(k)
            }
        })
        .collect())
}

fn require_positive(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&v| !(v > 0.0)) {
        return Err(domain(format!("{what} grid must be nonempty and positive")));
    }
    Ok(())
}

// ---------------------------------------------------------------- analyze

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    pub omega_grid: String,
    pub signal_var: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeOutput {
    pub manifest: RunManifest,
    pub rows: Vec<SecurityReport>,
    pub threshold_sigma_ch_sq: f64,
    pub threshold_omega_sq: f64,
    pub one_way_threshold: f64,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<AnalyzeOutput> {
    let grid = parse_range(&args.omega_grid)?;
    require_positive(&grid, "omega_sq")?;
    let rows = grid
        .iter()
        .map(|&w| build_report(args.signal_var, w))
        .collect::<Result<Vec<_>>>()?;
    let (th, tw) = threshold_closed_form();
    Ok(AnalyzeOutput {
        manifest: RunManifest::new("analyze", args, 0)?,
        rows,
        threshold_sigma_ch_sq: th,
        threshold_omega_sq: tw,
        one_way_threshold: ONE_WAY_THRESHOLD,
    })
}

pub fn render_analyze(out: &AnalyzeOutput) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:>14} {:>14} {:>14} {:>14} {:>14} {:>14}  secure",
        "omega_sq", "sigma_ch_sq", "sigma_B_sq", "sigma_E_sq", "I_AB", "I_AE"
    )
    .ok();
    for r in &out.rows {
        writeln!(
            s,
            "{:>14} {:>14} {:>14} {:>14} {:>14} {:>14}  {}",
            fmt10(r.omega_sq),
            fmt10(r.sigma_ch_sq),
            fmt10(r.sigma_b_sq),
            fmt10(r.sigma_e_sq),
            fmt10(r.i_ab),
            fmt10(r.i_ae),
            if r.secure { "yes" } else { "no" }
        )
        .ok();
    }
    writeln!(
        s,
        "threshold sigma_ch_sq (two-way): {}",
        fmt10(out.threshold_sigma_ch_sq)
    )
    .ok();
    writeln!(
        s,
        "threshold omega_sq:              {}",
        fmt10(out.threshold_omega_sq)
    )
    .ok();
    writeln!(
        s,
        "one-way baseline sigma_ch_sq:    {}",
        fmt10(out.one_way_threshold)
    )
    .ok();
    s
}

/// Line chart of `I_AB` and `I_AE` against `ω²` with the threshold marked.
pub fn render_svg(out: &AnalyzeOutput) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let xs: Vec<f64> = out.rows.iter().map(|r| r.omega_sq).collect();
    let ys = out.rows.iter().flat_map(|r| [r.i_ab, r.i_ae]);
    let (xmin, xmax) = (
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let (ymin, ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
        (a.min(y), b.max(y))
    });
    let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
    let px = |x: f64| pad + (x - xmin) / span(xmin, xmax) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - ymin) / span(ymin, ymax) * (h - 2.0 * pad);
    let poly = |f: &dyn Fn(&SecurityReport) -> f64| {
        out.rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.omega_sq), py(f(r))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .ok();
    if let Ok(m) = out.manifest.comment_lines() {
        writeln!(s, "<!--\n{}-->", m.replace("--", "- -")).ok();
    }
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).ok();
    writeln!(
        s,
        r#"<line x1="{pad}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{b}" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    )
    .ok();
    writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        poly(&|r| r.i_ab)
    )
    .ok();
    writeln!(
        s,
        r#"<polyline fill="none" stroke="firebrick" stroke-width="2" points="{}"/>"#,
        poly(&|r| r.i_ae)
    )
    .ok();
    if (xmin..=xmax).contains(&out.threshold_omega_sq) {
        let x = px(out.threshold_omega_sq);
        writeln!(s, r#"<line x1="{x:.2}" y1="{pad}" x2="{x:.2}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#, h - pad).ok();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">omega_sq</text>"#,
        w / 2.0,
        h - 15.0
    )
    .ok();
    writeln!(
        s,
        r#"<text x="{}" y="20" font-size="12" fill="steelblue">I_AB</text>"#,
        w - 120.0
    )
    .ok();
    writeln!(
        s,
        r#"<text x="{}" y="36" font-size="12" fill="firebrick">I_AE</text>"#,
        w - 120.0
    )
    .ok();
    writeln!(s, "</svg>").ok();
    s
}

// -------------------------------------------------------------- threshold

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutput {
    pub closed_form: f64,
    pub numeric: f64,
    pub difference: f64,
    pub one_way_threshold: f64,
    pub tolerance: f64,
    /// The tolerance is finer than double precision can resolve at the root.
    pub precision_warning: bool,
}

pub fn threshold(tolerance: f64) -> Result<ThresholdOutput> {
    let (closed, _) = threshold_closed_form();
    let numeric = threshold_numeric(tolerance)?;
    let difference = (numeric - closed).abs();
    let precision_warning = tolerance < 16.0 * f64::EPSILON * closed;
    if difference > tolerance.max(16.0 * f64::EPSILON * closed) {
        return Err(Error::Inconsistent(format!(
            "numeric threshold {numeric} differs from closed form {closed} by {difference}"
        )));
    }
    Ok(ThresholdOutput {
        closed_form: closed,
        numeric,
        difference,
        one_way_threshold: ONE_WAY_THRESHOLD,
        tolerance,
        precision_warning,
    })
}

pub fn render_threshold(t: &ThresholdOutput) -> String {
    let mut s = format!(
        "{} (closed) / {} (numeric) / baseline {}\ndifference: {:e}\n",
        fmt10(t.closed_form),
        fmt10(t.numeric),
        t.one_way_threshold,
        t.difference
    );
    if t.precision_warning {
        writeln!(
            s,
            "warning: tolerance {:e} is below double-precision resolution near the root",
            t.tolerance
        )
        .ok();
    }
    s
}

// --------------------------------------------------------------- ppt scan

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PptArgs {
    pub sigma_grid: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptRow {
    pub sigma_sq: f64,
    pub pt_min_symplectic_eigenvalue: f64,
    pub separable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PptOutput {
    pub manifest: RunManifest,
    pub rows: Vec<PptRow>,
    pub all_separable: bool,
}

pub fn ppt_scan(args: &PptArgs) -> Result<PptOutput> {
    let grid = parse_range(&args.sigma_grid)?;
    require_positive(&grid, "sigma_sq")?;
    let rows = grid
        .iter()
        .map(|&s| {
            let nu = pt_min_symplectic_eigenvalue(&gqcm_joint_cm(s)?)?;
            Ok(PptRow {
                sigma_sq: s,
                pt_min_symplectic_eigenvalue: nu,
                separable: nu >= 0.5 - PHYSICAL_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_separable = rows.iter().all(|r| r.separable);
    Ok(PptOutput {
        manifest: RunManifest::new("ppt-scan", args, 0)?,
        rows,
        all_separable,
    })
}

pub fn render_ppt(out: &PptOutput) -> String {
    let mut s = format!("{:>18} {:>16}  separable\n", "sigma_sq", "pt_min_nu");
    for r in &out.rows {
        writeln!(
            s,
            "{:>18} {:>16}  {}",
            fmt10(r.sigma_sq),
            fmt10(r.pt_min_symplectic_eigenvalue),
            if r.separable { "yes" } else { "no" }
        )
        .ok();
    }
    writeln!(
        s,
        "all separable: {}",
        if out.all_separable { "yes" } else { "no" }
    )
    .ok();
    s
}

// --------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateArgs {
    pub rounds: u64,
    pub signal_var: f64,
    pub reference_var: f64,
    pub omega_sq: f64,
    pub off_probability: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub strategy: Strategy,
    /// Power transmissivity `t²` of Eve's beam splitter.
    pub transmissivity: f64,
    /// Replace the attack by a plain noisy channel.
    pub no_attack: bool,
    pub forward_noise: f64,
    pub backward_noise: f64,
}

impl Default for SimulateArgs {
    fn default() -> Self {
        let p = ProtocolConfig::default();
        Self {
            rounds: p.rounds,
            signal_var: p.signal_var,
            reference_var: p.reference_var,
            omega_sq: 0.5,
            off_probability: p.off_probability,
            seed: p.seed,
            out: PathBuf::from("cvqkd-run"),
            workers: 1,
            strategy: Strategy::BsCombine,
            transmissivity: 0.5,
            no_attack: false,
            forward_noise: 0.0,
            backward_noise: 0.0,
        }
    }
}

impl SimulateArgs {
    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            signal_var: self.signal_var,
            reference_var: self.reference_var,
            off_probability: self.off_probability,
            rounds: self.rounds,
            seed: self.seed,
        }
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        if self.no_attack {
            return ChannelModel::plain(self.forward_noise, self.backward_noise);
        }
        let cfg = AttackConfig::new(self.omega_sq)?
            .with_bs(beam_splitter(self.transmissivity)?)
            .with_strategy(self.strategy);
        Ok(ChannelModel::attacked(as_channel_hook(cfg)?))
    }

    /// Closed-form `(σ_B², σ_E², forward, backward)` for this channel.
    fn expected(&self) -> Result<(f64, Option<f64>, f64, f64)> {
        if self.no_attack {
            return Ok((
                1.0 + self.forward_noise + self.backward_noise,
                None,
                self.forward_noise,
                self.backward_noise,
            ));
        }
        let r = build_report(self.signal_var, self.omega_sq)?;
        // σ_E² holds for the balanced splitter and for the direct strategy
        let balanced = (self.transmissivity - 0.5).abs() < 1e-12
            || self.strategy == Strategy::DirectHeterodyne;
        Ok((
            r.sigma_b_sq,
            balanced.then_some(r.sigma_e_sq),
            0.5,
            self.omega_sq,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub quantity: &'static str,
    pub empirical: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    fn new(quantity: &'static str, empirical: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            quantity,
            empirical,
            expected,
            tolerance,
            pass: (empirical - expected).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub manifest: RunManifest,
    pub closed_form: Option<SecurityReport>,
    pub empirical: EmpiricalSecurity,
    pub verdicts: Vec<Verdict>,
}

fn mi_std_error(signal_var: f64, variance: f64, rounds: usize) -> f64 {
    // two-quadrature MI: dI/dv = −S / (v (v + S) ln 2)
    let dv = pooled_variance_std_error(variance, rounds);
    signal_var / (variance * (variance + signal_var) * std::f64::consts::LN_2) * dv
}

pub fn summarize(
    args: &SimulateArgs,
    transcript: &Transcript,
    manifest: RunManifest,
) -> Result<SimulationSummary> {
    let emp = EmpiricalSecurity::from_transcript(transcript)?;
    let (sb, se, fwd, bwd) = args.expected()?;
    let k = VERDICT_SIGMAS;
    let mut verdicts = vec![Verdict::new(
        "sigma_B_sq",
        emp.sigma_b_sq,
        sb,
        k * pooled_variance_std_error(sb, emp.on_rounds),
    )];
    let i_ab = crate::math::mi_two_quadratures(args.signal_var, sb)?;
    verdicts.push(Verdict::new(
        "I_AB",
        emp.i_ab,
        i_ab,
        k * mi_std_error(args.signal_var, sb, emp.on_rounds),
    ));
    if let (Some(se), Some(e), Some(ie)) = (se, emp.sigma_e_sq, emp.i_ae) {
        verdicts.push(Verdict::new(
            "sigma_E_sq",
            e,
            se,
            k * pooled_variance_std_error(se, emp.on_rounds),
        ));
        let i_ae = crate::math::mi_two_quadratures(args.signal_var, se)?;
        verdicts.push(Verdict::new(
            "I_AE",
            ie,
            i_ae,
            k * mi_std_error(args.signal_var, se, emp.on_rounds),
        ));
    }
    if let Some(n) = emp.noise {
        let tf = k * pooled_variance_std_error(1.0 + fwd, n.forward_samples);
        let tb = k * pooled_variance_std_error(1.0 + bwd, n.backward_samples);
        verdicts.push(Verdict::new("forward_noise", n.forward, fwd, tf));
        verdicts.push(Verdict::new("backward_noise", n.backward, bwd, tb));
        verdicts.push(Verdict::new(
            "sigma_ch_sq",
            n.total,
            fwd + bwd,
            (tf * tf + tb * tb).sqrt(),
        ));
    }
    let closed_form = if args.no_attack {
        None
    } else {
        Some(build_report(args.signal_var, args.omega_sq)?)
    };
    Ok(SimulationSummary {
        manifest,
        closed_form,
        empirical: emp,
        verdicts,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the transcript CSV: manifest comment lines (without timestamp),
/// then the header and one row per round. Floats use shortest round-trip
/// formatting.
pub fn write_transcript_csv<W: Write>(
    mut w: W,
    transcript: &Transcript,
    manifest: &RunManifest,
) -> Result<()> {
    w.write_all(manifest.comment_lines()?.as_bytes())?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(TRANSCRIPT_HEADER)?;
    for r in &transcript.records {
        let eve = r.eve_record.as_ref().and_then(|e| e.alpha_estimate);
        csv.write_record([
            r.index.to_string(),
            r.kind.to_string(),
            r.beta.x.to_string(),
            r.beta.p.to_string(),
            opt(r.alpha.map(|a| a.x)),
            opt(r.alpha.map(|a| a.p)),
            r.bob_outcome.x.to_string(),
            r.bob_outcome.p.to_string(),
            opt(r.bob_estimate.map(|a| a.x)),
            opt(r.bob_estimate.map(|a| a.p)),
            opt(eve.map(|a| a.x)),
            opt(eve.map(|a| a.p)),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// One parsed transcript row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TranscriptRow {
    pub round: u64,
    pub kind: String,
    pub beta_x: f64,
    pub beta_p: f64,
    pub alpha_x: Option<f64>,
    pub alpha_p: Option<f64>,
    pub zeta_x: f64,
    pub zeta_p: f64,
    pub est_x: Option<f64>,
    pub est_p: Option<f64>,
    pub eve_est_x: Option<f64>,
    pub eve_est_p: Option<f64>,
}

pub fn read_transcript_csv(path: &Path) -> Result<Vec<TranscriptRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub transcript_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: SimulationSummary,
}

/// Runs the session and writes `transcript.csv` and `summary.json` under
/// `args.out`.
pub fn simulate(args: &SimulateArgs) -> Result<SimulateOutput> {
    let manifest = RunManifest::new("simulate", args, args.seed)?;
    let channel = args.channel()?;
    let transcript = run_session_parallel(&args.protocol(), &channel, args.workers)?;
    let summary = summarize(args, &transcript, manifest)?;

    fs::create_dir_all(&args.out)?;
    let transcript_path = args.out.join("transcript.csv");
    let summary_path = args.out.join("summary.json");
    let f = std::io::BufWriter::new(fs::File::create(&transcript_path)?);
    write_transcript_csv(f, &transcript, &summary.manifest)?;
    fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(SimulateOutput {
        transcript_path,
        summary_path,
        summary,
    })
}

pub fn render_summary(s: &SimulationSummary) -> String {
    let mut out = String::new();
    let e = &s.empirical;
    writeln!(out, "rounds: {} ON, {} OFF", e.on_rounds, e.off_rounds).ok();
    if let Some(r) = &s.closed_form {
        writeln!(
            out,
            "closed form: sigma_ch_sq={} sigma_B_sq={} sigma_E_sq={} secure={}",
            fmt10(r.sigma_ch_sq),
            fmt10(r.sigma_b_sq),
            fmt10(r.sigma_e_sq),
            r.secure
        )
        .ok();
    }
    writeln!(
        out,
        "{:>16} {:>16} {:>16} {:>16}  verdict",
        "quantity", "empirical", "expected", "tolerance"
    )
    .ok();
    for v in &s.verdicts {
        writeln!(
            out,
            "{:>16} {:>16} {:>16} {:>16}  {}",
            v.quantity,
            fmt10(v.empirical),
            fmt10(v.expected),
            fmt10(v.tolerance),
            if v.pass { "ok" } else { "OUT OF TOLERANCE" }
        )
        .ok();
    }
    if let Some(gap) = e.key_rate_gap {
        writeln!(
            out,
            "empirical key-rate gap I_AB - I_AE: {} bits",
            fmt10(gap)
        )
        .ok();
    }
    out
}

/// Writes a JSON value with its manifest to `path`.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

// ----------------------------------------------------------------- replay

/// Loads a manifest from a standalone manifest file or from any output
/// that embeds one under `"manifest"`.
pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let m = v.get("manifest").cloned().unwrap_or(v);
    Ok(serde_json::from_value(m)?)
}

#[derive(Debug)]
pub enum ReplayOutput {
    Analyze(AnalyzeOutput),
    Simulate(Box<SimulateOutput>),
    Ppt(PptOutput),
}

pub fn replay(manifest: &RunManifest, out_override: Option<PathBuf>) -> Result<ReplayOutput> {
    match manifest.command.as_str() {
        "analyze" => Ok(ReplayOutput::Analyze(analyze(&serde_json::from_value(
            manifest.config.clone(),
        )?)?)),
        "ppt-scan" => Ok(ReplayOutput::Ppt(ppt_scan(&serde_json::from_value(
            manifest.config.clone(),
        )?)?)),
        "simulate" => {
            let mut args: SimulateArgs = serde_json::from_value(manifest.config.clone())?;
            if let Some(o) = out_override {
                args.out = o;
            }
            Ok(ReplayOutput::Simulate(Box::new(simulate(&args)?)))
        }
        other => Err(domain(format!("cannot replay command '{other}'"))),
    }
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 3,
        Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 3,
        Error::Inconsistent(_) => 4,
        _ => 2,
    }
}

/// `true` for ON rows.
pub fn is_on_row(row: &TranscriptRow) -> bool {
    row.kind == RoundKind::On.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_range("1e-3:1e3:100:log").unwrap();
        assert_eq!(g.len(), 100);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[99] - 1e3).abs() < 1e-9);
        assert!((g[33] / g[32] - g[1] / g[0]).abs() < 1e-9);
        for bad in [
            "",
            "a:b:c",
            "0:1",
            "0:1:0",
            "0:1:3:foo",
            "0:1:3:log",
            "1:2:3:log:x",
        ] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn analyze_rows_and_footer() {
        let out = analyze(&AnalyzeArgs {
            omega_grid: "0.5".into(),
            signal_var: 100.0,
        })
        .unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].sigma_b_sq, 2.0);
        assert_eq!(out.rows[0].sigma_e_sq, 2.5);
        assert!(out.rows[0].secure);
        let text = render_analyze(&out);
        assert!(text.contains("1.3090169944"), "{text}");

        let out = analyze(&AnalyzeArgs {
            omega_grid: "0.6:1.0:41".into(),
            signal_var: 100.0,
        })
        .unwrap();
        let flips = out
            .rows
            .windows(2)
            .filter(|w| w[0].secure != w[1].secure)
            .count();
        assert_eq!(flips, 1);
        assert!(analyze(&AnalyzeArgs {
            omega_grid: "-1:1:3".into(),
            signal_var: 100.0
        })
        .is_err());
        assert!(render_svg(&out).contains("<polyline"));
    }

    #[test]
    fn threshold_output() {
        let t = threshold(1e-10).unwrap();
        assert!(render_threshold(&t)
            .starts_with("1.3090169944 (closed) / 1.3090169944 (numeric) / baseline 0.5"));
        assert!(t.difference < 1e-10 && !t.precision_warning);
        let t = threshold(1e-15).unwrap();
        assert!(t.precision_warning);
        assert!(render_threshold(&t).contains("warning"));
        assert!(threshold(0.0).is_err());
    }

    #[test]
    fn ppt_scan_grid() {
        let out = ppt_scan(&PptArgs {
            sigma_grid: "0.5".into(),
        })
        .unwrap();
        assert!((out.rows[0].pt_min_symplectic_eigenvalue - 0.8660254038).abs() < 1e-10);
        let out = ppt_scan(&PptArgs {
            sigma_grid: "1e-3:1e3:100:log".into(),
        })
        .unwrap();
        assert!(out.all_separable);
        assert!(out
            .rows
            .iter()
            .all(|r| r.pt_min_symplectic_eigenvalue >= 0.5));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Domain("x".into())), 2);
        assert_eq!(exit_code(&Error::Inconsistent("x".into())), 4);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 3);
    }
}
