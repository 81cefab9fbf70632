//! Scenario execution: payload computation, parameter sweeps, deterministic
//! file emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use nemscat_core::coherent::{coherent_overlap, Branch};
use nemscat_core::dissipative::{
    damped_amplitudes_closed, decoherence_f, DecoherenceMethod,
};
use nemscat_core::linalg::CMat;
use nemscat_core::oracle::{run_oracle_with, BlockEvolver, BlockScratch, FockTruncation,
    LindbladBlocks, Sector};
use nemscat_core::Complex64 as C64;

use crate::config::{self, OutputKind, ResolvedScenario, ScenarioConfig};
use crate::error::CliError;
use crate::svg;

/// Worker-count cap and output format for a run.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub threads: usize,
}

impl RunOptions {
    /// Threads from `NEMSCAT_THREADS`, defaulting to the smaller of the
    /// available parallelism and four (there are at most four independent
    /// oracle blocks).
    pub fn from_env() -> Self {
        let default = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(4);
        let threads = std::env::var("NEMSCAT_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .unwrap_or(default);
        Self { threads }
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { threads: 1 }
    }
}

/// Which files to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

impl OutputFormat {
    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
    pub fn wants_svg(self) -> bool {
        matches!(self, OutputFormat::Svg | OutputFormat::Both)
    }
}

/// One table of output data. Rendering is fixed at 17 significant digits so
/// identical runs produce identical bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvPayload {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvPayload {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column_values(&self, index: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[index])
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for value in row {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&format_float(*value));
            }
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits, scientific; enough to round-trip any f64.
pub fn format_float(value: f64) -> String {
    if value.is_nan() {
        "NaN".to_string()
    } else {
        format!("{value:.16e}")
    }
}

/// Reproducibility metadata for a run. The config hash covers the canonical
/// serialized config; wall time is informational and excluded from the
/// determinism guarantee (which is about CSV/SVG bytes).
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config_sha256: String,
    pub tool_version: String,
    pub wall_time_ms: u128,
    pub used_ode_fallback: bool,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        format!(
            "{{\n  \"config_sha256\": \"{}\",\n  \"tool_version\": \"{}\",\n  \"wall_time_ms\": {},\n  \"used_ode_fallback\": {}\n}}\n",
            self.config_sha256, self.tool_version, self.wall_time_ms, self.used_ode_fallback
        )
    }
}

fn config_hash(cfg: &ScenarioConfig) -> String {
    let canonical = config::serialize_config(cfg);
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// All payloads of one scenario run, in the declaration order of `outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub outputs: Vec<(OutputKind, CsvPayload)>,
    pub manifest: Manifest,
}

/// Execute a validated scenario.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioResult, CliError> {
    cfg.validate()?;
    let started = Instant::now();
    let scenario = config::resolve(cfg)?;
    let mut fallback = false;
    let mut outputs = Vec::with_capacity(cfg.outputs.len());
    for kind in &cfg.outputs {
        let payload = match kind {
            OutputKind::Trajectory => trajectory_payload(&scenario, &mut fallback),
            OutputKind::Orbits => orbits_payload(&scenario, &mut fallback),
            OutputKind::Decoherence => decoherence_payload(&scenario)?,
            OutputKind::PMinus => p_minus_payload(&scenario)?,
            OutputKind::OracleCompare => oracle_payload(&scenario, opts)?,
        };
        outputs.push((*kind, payload));
    }
    Ok(ScenarioResult {
        outputs,
        manifest: Manifest {
            config_sha256: config_hash(cfg),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: started.elapsed().as_millis(),
            used_ode_fallback: fallback,
        },
    })
}

fn branch_amplitudes(
    scenario: &ResolvedScenario,
    t: f64,
    fallback: &mut bool,
) -> ((C64, C64), (C64, C64)) {
    let plus = damped_amplitudes_closed(
        &scenario.init,
        &scenario.model,
        &scenario.damping,
        t,
        Branch::Plus,
    );
    let minus = damped_amplitudes_closed(
        &scenario.init,
        &scenario.model,
        &scenario.damping,
        t,
        Branch::Minus,
    );
    *fallback |= plus.used_ode_fallback || minus.used_ode_fallback;
    ((plus.cavity, plus.nems), (minus.cavity, minus.nems))
}

fn trajectory_payload(scenario: &ResolvedScenario, fallback: &mut bool) -> CsvPayload {
    let mut payload = CsvPayload::new(&[
        "t",
        "re_alpha_plus",
        "im_alpha_plus",
        "re_beta_plus",
        "im_beta_plus",
        "re_alpha_minus",
        "im_alpha_minus",
        "re_beta_minus",
        "im_beta_minus",
        "norm_plus",
        "norm_minus",
    ]);
    for &t in &scenario.grid {
        let ((ap, bp), (am, bm)) = branch_amplitudes(scenario, t, fallback);
        payload.rows.push(vec![
            t,
            ap.re,
            ap.im,
            bp.re,
            bp.im,
            am.re,
            am.im,
            bm.re,
            bm.im,
            ap.norm_sqr() + bp.norm_sqr(),
            am.norm_sqr() + bm.norm_sqr(),
        ]);
    }
    payload
}

fn orbits_payload(scenario: &ResolvedScenario, fallback: &mut bool) -> CsvPayload {
    let mut payload = CsvPayload::new(&[
        "t",
        "re_alpha_plus",
        "im_alpha_plus",
        "re_alpha_minus",
        "im_alpha_minus",
        "re_beta_plus",
        "im_beta_plus",
        "re_beta_minus",
        "im_beta_minus",
    ]);
    for &t in &scenario.grid {
        let ((ap, bp), (am, bm)) = branch_amplitudes(scenario, t, fallback);
        payload.rows.push(vec![
            t, ap.re, ap.im, am.re, am.im, bp.re, bp.im, bm.re, bm.im,
        ]);
    }
    payload
}

fn decoherence_payload(scenario: &ResolvedScenario) -> Result<CsvPayload, CliError> {
    let mut payload = CsvPayload::new(&[
        "t",
        "re_f",
        "im_f",
        "abs_f_sq",
        "re_log_f",
        "im_log_f",
        "re_f_short",
        "im_f_short",
        "abs_f_sq_short",
    ]);
    for &t in &scenario.grid {
        let record = decoherence_f(
            &scenario.init,
            &scenario.model,
            &scenario.damping,
            t,
            DecoherenceMethod::Closed,
        )?;
        let dephase = (-scenario.qubit_rate * t).exp();
        let f = record.f * dephase;
        let log_f = record.log_f - scenario.qubit_rate * t;
        let short = record.f_short_time.map(|s| s * dephase);
        payload.rows.push(vec![
            t,
            f.re,
            f.im,
            f.norm_sqr(),
            log_f.re,
            log_f.im,
            short.map_or(f64::NAN, |s| s.re),
            short.map_or(f64::NAN, |s| s.im),
            short.map_or(f64::NAN, |s| s.norm_sqr()),
        ]);
    }
    Ok(payload)
}

fn p_minus_payload(scenario: &ResolvedScenario) -> Result<CsvPayload, CliError> {
    let mut payload = CsvPayload::new(&["t", "p_minus", "visibility", "phase"]);
    let mut fallback = false;
    for &t in &scenario.grid {
        let (p, interference) = p_minus_point(scenario, t, &mut fallback)?;
        payload
            .rows
            .push(vec![t, p, interference.norm(), interference.arg()]);
    }
    Ok(payload)
}

/// Readout probability and the interference term it is built from,
/// `z = f e^{-gamma_q t} <alpha_+|alpha_-> <beta_+|beta_->`, so
/// `p = (1 + Re z)/2`.
fn p_minus_point(
    scenario: &ResolvedScenario,
    t: f64,
    fallback: &mut bool,
) -> Result<(f64, C64), CliError> {
    let record = decoherence_f(
        &scenario.init,
        &scenario.model,
        &scenario.damping,
        t,
        DecoherenceMethod::Closed,
    )?;
    let ((ap, bp), (am, bm)) = branch_amplitudes(scenario, t, fallback);
    let z = record.f
        * (-scenario.qubit_rate * t).exp()
        * coherent_overlap(ap, am)
        * coherent_overlap(bp, bm);
    Ok((0.5 * (1.0 + z.re), z))
}

fn oracle_payload(scenario: &ResolvedScenario, opts: &RunOptions) -> Result<CsvPayload, CliError> {
    let section = scenario
        .oracle
        .as_ref()
        .ok_or_else(|| CliError::Config("oracle_compare requires the `oracle` section".into()))?;
    let trunc = FockTruncation::new(section.n_a, section.n_b)?;
    let (report, _diagnostics) = run_oracle_with(
        &scenario.init,
        &scenario.model,
        &scenario.damping,
        trunc,
        &scenario.grid,
        section.dt,
        block_driver(opts.threads),
    )?;

    let mut payload = CsvPayload::new(&[
        "t",
        "re_f_num",
        "im_f_num",
        "re_f_closed",
        "im_f_closed",
        "abs_err_f",
        "p_minus_num",
        "p_minus_closed",
        "fidelity_pp",
        "fidelity_mm",
    ]);
    let mut fallback = false;
    for (k, &t) in scenario.grid.iter().enumerate() {
        // The oracle models mode losses only, so the comparison column also
        // leaves the optional qubit dephasing factor out of the closed form.
        let record = decoherence_f(
            &scenario.init,
            &scenario.model,
            &scenario.damping,
            t,
            DecoherenceMethod::Closed,
        )?;
        let ((ap, bp), (am, bm)) = branch_amplitudes(scenario, t, &mut fallback);
        let p_closed = 0.5
            * (1.0
                + (record.f * coherent_overlap(ap, am) * coherent_overlap(bp, bm)).re);
        let f_num = report.f_numeric[k];
        payload.rows.push(vec![
            t,
            f_num.re,
            f_num.im,
            record.f.re,
            record.f.im,
            (f_num - record.f).norm(),
            report.p_minus_numeric[k],
            p_closed,
            report.fidelity_pp[k],
            report.fidelity_mm[k],
        ]);
    }
    Ok(payload)
}

/// Block-advance driver distributing the four sectors over at most `threads`
/// workers. Every distribution computes bitwise identical blocks because the
/// sectors never interact and each one's arithmetic is fixed-order.
pub fn block_driver(
    threads: usize,
) -> impl FnMut(&BlockEvolver, &mut LindbladBlocks, f64) {
    move |evolver, blocks, span| {
        let dim = evolver.truncation().dim();
        let workers = threads.clamp(1, 4);
        let LindbladBlocks {
            plus_plus,
            minus_minus,
            plus_minus,
            minus_plus,
        } = blocks;
        let jobs = [
            (Sector::PlusPlus, plus_plus),
            (Sector::MinusMinus, minus_minus),
            (Sector::PlusMinus, plus_minus),
            (Sector::MinusPlus, minus_plus),
        ];
        if workers == 1 {
            let mut scratch = BlockScratch::new(dim);
            for (sector, rho) in jobs {
                evolver.advance_block(sector, rho, span, &mut scratch);
            }
            return;
        }
        let mut buckets: Vec<Vec<(Sector, &mut CMat)>> =
            (0..workers).map(|_| Vec::new()).collect();
        for (j, job) in jobs.into_iter().enumerate() {
            buckets[j % workers].push(job);
        }
        std::thread::scope(|scope| {
            let mut buckets = buckets.into_iter();
            let mine = buckets.next().expect("at least one worker");
            for bucket in buckets {
                scope.spawn(move || {
                    let mut scratch = BlockScratch::new(dim);
                    for (sector, rho) in bucket {
                        evolver.advance_block(sector, rho, span, &mut scratch);
                    }
                });
            }
            let mut scratch = BlockScratch::new(dim);
            for (sector, rho) in mine {
                evolver.advance_block(sector, rho, span, &mut scratch);
            }
        });
    }
}

/// Scalar config fields addressable by [`sweep`].
pub const SWEEP_PATHS: [&str; 14] = [
    "model.chi",
    "model.omega",
    "model.kappa",
    "model.g",
    "model.lambda",
    "model.delta",
    "damping.gamma_a",
    "damping.gamma_b",
    "damping.gamma_qubit",
    "initial.alpha0_re",
    "initial.alpha0_im",
    "initial.beta0_re",
    "initial.beta0_im",
    "time.t_max",
];

fn need_model(cfg: &mut ScenarioConfig) -> Result<&mut crate::config::ModelSection, CliError> {
    cfg.model.as_mut().ok_or_else(|| {
        CliError::Config("sweeping a `model.*` path needs a `model` section".into())
    })
}

fn set_scalar(cfg: &mut ScenarioConfig, path: &str, value: f64) -> Result<(), CliError> {
    match path {
        "model.chi" => need_model(cfg)?.chi = Some(value),
        "model.omega" => need_model(cfg)?.omega = Some(value),
        "model.kappa" => need_model(cfg)?.kappa = Some(value),
        "model.g" => need_model(cfg)?.g = Some(value),
        "model.lambda" => need_model(cfg)?.lambda = Some(value),
        "model.delta" => need_model(cfg)?.delta = Some(value),
        "damping.gamma_a" => cfg.damping.gamma_a = value,
        "damping.gamma_b" => cfg.damping.gamma_b = value,
        "damping.gamma_qubit" => cfg.damping.gamma_qubit = Some(value),
        "initial.alpha0_re" => cfg.initial.alpha0_re = value,
        "initial.alpha0_im" => cfg.initial.alpha0_im = value,
        "initial.beta0_re" => cfg.initial.beta0_re = value,
        "initial.beta0_im" => cfg.initial.beta0_im = value,
        "time.t_max" => cfg.time.t_max = value,
        other => {
            return Err(CliError::Config(format!(
                "`{other}` is not a sweepable scalar; valid paths: {}",
                SWEEP_PATHS.join(", ")
            )))
        }
    }
    Ok(())
}

/// A sweep point's outcome: the scenario result and its detected revival.
type SweepSlot = Option<Result<(ScenarioResult, Option<(f64, f64)>), CliError>>;

/// Result of sweeping one scalar over an inclusive linear range.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: String,
    pub values: Vec<f64>,
    /// Per-value revival summary: `value, first_revival_time,
    /// first_revival_height` (NaN when no revival lies inside the grid).
    pub summary: CsvPayload,
    /// Requested outputs concatenated as row groups led by a `sweep_value`
    /// column, in value order.
    pub outputs: Vec<(OutputKind, CsvPayload)>,
    pub manifest: Manifest,
}

/// Run `cfg` once per value of `param` across `[from, to]`.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    opts: &RunOptions,
) -> Result<SweepResult, CliError> {
    if steps < 2 {
        return Err(CliError::Config(format!(
            "a sweep needs at least 2 steps, got {steps}"
        )));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(CliError::Config("sweep bounds must be finite".into()));
    }
    let started = Instant::now();
    let values: Vec<f64> = (0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect();

    // Validate every point up front so failures surface before any work runs.
    let mut configs = Vec::with_capacity(steps);
    for &value in &values {
        let mut point = cfg.clone();
        set_scalar(&mut point, param, value)?;
        point
            .validate()
            .map_err(|e| CliError::Config(format!("at {param} = {value}: {e}")))?;
        configs.push(point);
    }

    let mut results: Vec<SweepSlot> = (0..steps).map(|_| None).collect();
    let workers = opts.threads.clamp(1, steps);
    let mut buckets: Vec<Vec<(usize, &ScenarioConfig)>> =
        (0..workers).map(|_| Vec::new()).collect();
    for (i, point) in configs.iter().enumerate() {
        buckets[i % workers].push((i, point));
    }
    std::thread::scope(|scope| {
        let mut buckets = buckets.into_iter();
        let mine = buckets.next().expect("at least one worker");
        let handles: Vec<_> = buckets
            .map(|bucket| {
                scope.spawn(move || {
                    bucket
                        .into_iter()
                        .map(|(i, point)| (i, sweep_point(point)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut local = Vec::new();
        for (i, point) in mine {
            local.push((i, sweep_point(point)));
        }
        for (i, r) in local {
            results[i] = Some(r);
        }
        for handle in handles {
            for (i, r) in handle.join().expect("sweep worker panicked") {
                results[i] = Some(r);
            }
        }
    });

    let mut summary = CsvPayload::new(&["sweep_value", "first_revival_time", "first_revival_height"]);
    let mut grouped: Vec<(OutputKind, CsvPayload)> = cfg
        .outputs
        .iter()
        .map(|kind| {
            let mut columns = vec!["sweep_value".to_string()];
            columns.extend(template_columns(*kind));
            (
                *kind,
                CsvPayload {
                    columns,
                    rows: Vec::new(),
                },
            )
        })
        .collect();

    for (i, slot) in results.into_iter().enumerate() {
        let (result, revival) = slot.expect("every sweep point ran")?;
        let value = values[i];
        let (t_rev, height) = revival.unwrap_or((f64::NAN, f64::NAN));
        summary.rows.push(vec![value, t_rev, height]);
        for ((_, group), (_, payload)) in grouped.iter_mut().zip(result.outputs.iter()) {
            debug_assert_eq!(group.columns.len(), payload.columns.len() + 1);
            for row in &payload.rows {
                let mut grouped_row = Vec::with_capacity(row.len() + 1);
                grouped_row.push(value);
                grouped_row.extend_from_slice(row);
                group.rows.push(grouped_row);
            }
        }
    }

    Ok(SweepResult {
        param: param.to_string(),
        values,
        summary,
        outputs: grouped,
        manifest: Manifest {
            config_sha256: config_hash(cfg),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: started.elapsed().as_millis(),
            used_ode_fallback: false,
        },
    })
}

/// One sweep point: the scenario run plus its revival summary. Each point
/// runs single-threaded; the sweep itself owns the parallelism.
fn sweep_point(
    point: &ScenarioConfig,
) -> Result<(ScenarioResult, Option<(f64, f64)>), CliError> {
    let result = run_scenario(point, &RunOptions { threads: 1 })?;
    let scenario = config::resolve(point)?;
    let mut fallback = false;
    let mut probability = Vec::with_capacity(scenario.grid.len());
    let mut visibility = Vec::with_capacity(scenario.grid.len());
    for &t in &scenario.grid {
        let (p, interference) = p_minus_point(&scenario, t, &mut fallback)?;
        probability.push(p);
        visibility.push(interference.norm());
    }
    Ok((
        result,
        first_revival(&scenario.grid, &probability, &visibility),
    ))
}

fn template_columns(kind: OutputKind) -> Vec<String> {
    let template = match kind {
        OutputKind::Trajectory => &[
            "t",
            "re_alpha_plus",
            "im_alpha_plus",
            "re_beta_plus",
            "im_beta_plus",
            "re_alpha_minus",
            "im_alpha_minus",
            "re_beta_minus",
            "im_beta_minus",
            "norm_plus",
            "norm_minus",
        ][..],
        OutputKind::Orbits => &[
            "t",
            "re_alpha_plus",
            "im_alpha_plus",
            "re_alpha_minus",
            "im_alpha_minus",
            "re_beta_plus",
            "im_beta_plus",
            "re_beta_minus",
            "im_beta_minus",
        ][..],
        OutputKind::Decoherence => &[
            "t",
            "re_f",
            "im_f",
            "abs_f_sq",
            "re_log_f",
            "im_log_f",
            "re_f_short",
            "im_f_short",
            "abs_f_sq_short",
        ][..],
        OutputKind::PMinus => &["t", "p_minus", "visibility", "phase"][..],
        OutputKind::OracleCompare => &[
            "t",
            "re_f_num",
            "im_f_num",
            "re_f_closed",
            "im_f_closed",
            "abs_err_f",
            "p_minus_num",
            "p_minus_closed",
            "fidelity_pp",
            "fidelity_mm",
        ][..],
    };
    template.iter().map(|c| c.to_string()).collect()
}

/// First revival of the interference after its initial collapse, located on
/// the visibility envelope (the phase fringes under the envelope are not
/// revivals): the envelope must first fall below 0.5, then the first local
/// maximum above 0.55 counts. Returns the time and the readout probability
/// there.
pub fn first_revival(t: &[f64], p: &[f64], visibility: &[f64]) -> Option<(f64, f64)> {
    let start = visibility.iter().position(|&v| v < 0.5)?;
    for i in start.max(1)..visibility.len().saturating_sub(1) {
        let v = visibility[i];
        if v > 0.55
            && v >= visibility[i - 1]
            && v >= visibility[i + 1]
            && (v > visibility[i - 1] || v > visibility[i + 1])
        {
            return Some((t[i], p[i]));
        }
    }
    None
}

/// Write a scenario's files into `out_dir` with the given name prefix;
/// returns the paths written.
pub fn write_outputs(
    result: &ScenarioResult,
    out_dir: &Path,
    prefix: &str,
    format: OutputFormat,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (kind, payload) in &result.outputs {
        if format.wants_csv() {
            let path = out_dir.join(format!("{prefix}{}.csv", kind.file_stem()));
            fs::write(&path, payload.to_csv_string())?;
            written.push(path);
        }
        if format.wants_svg() {
            let path = out_dir.join(format!("{prefix}{}.svg", kind.file_stem()));
            let rendered = match kind {
                OutputKind::Orbits => svg::render_orbit_plot(payload)?,
                _ => {
                    let columns = default_plot_columns(*kind, payload);
                    svg::render_line_plot(payload, &columns)?
                }
            };
            fs::write(&path, rendered)?;
            written.push(path);
        }
    }
    let manifest_path = out_dir.join(format!("{prefix}manifest.json"));
    fs::write(&manifest_path, result.manifest.to_json())?;
    written.push(manifest_path);
    Ok(written)
}

/// Write a sweep's files into `out_dir`; returns the paths written.
pub fn write_sweep_outputs(
    result: &SweepResult,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let summary_path = out_dir.join("sweep_summary.csv");
    fs::write(&summary_path, result.summary.to_csv_string())?;
    written.push(summary_path);
    for (kind, payload) in &result.outputs {
        let path = out_dir.join(format!("sweep_{}.csv", kind.file_stem()));
        fs::write(&path, payload.to_csv_string())?;
        written.push(path);
    }
    if format.wants_svg() {
        let path = out_dir.join("sweep_summary.svg");
        let rendered =
            svg::render_line_plot(&result.summary, &["first_revival_time", "first_revival_height"])?;
        fs::write(&path, rendered)?;
        written.push(path);
    }
    let manifest_path = out_dir.join("sweep_manifest.json");
    fs::write(&manifest_path, result.manifest.to_json())?;
    written.push(manifest_path);
    Ok(written)
}

fn default_plot_columns(kind: OutputKind, payload: &CsvPayload) -> Vec<&'static str> {
    let candidates: &[&'static str] = match kind {
        OutputKind::PMinus => &["p_minus", "visibility"],
        OutputKind::Decoherence => &["abs_f_sq", "abs_f_sq_short"],
        OutputKind::Trajectory => &["norm_plus", "norm_minus"],
        OutputKind::OracleCompare => &["p_minus_num", "p_minus_closed"],
        OutputKind::Orbits => &[],
    };
    // Drop columns with no finite data (the short-time law outside its
    // scenario) rather than plotting an empty polyline.
    candidates
        .iter()
        .filter(|name| {
            payload
                .column_index(name)
                .map(|idx| payload.column_values(idx).any(|v| v.is_finite()))
                .unwrap_or(false)
        })
        .copied()
        .collect()
}
