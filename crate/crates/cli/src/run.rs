//! Run orchestration and table output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cbs_core::transport::normalize_unit_peak;
use cbs_core::{CbsResult, FrequencyGrid, KernelSet, Totals};
use cbs_oracle::{extract_ladder_crossed, relative_l2, ExtractionOptions, OracleSpectra};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Mode, Normalization, RunConfig};
use crate::error::{CliError, Result};

pub const SPECTRA_FILE: &str = "spectra.csv";
pub const LINES_FILE: &str = "elastic_lines.csv";
pub const TOTALS_FILE: &str = "totals.csv";
pub const KERNELS_FILE: &str = "kernels.csv";
pub const KERNEL_LINES_FILE: &str = "kernel_lines.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// What a run produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub files: Vec<PathBuf>,
    pub flagged: bool,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    /// Normalized ladder and crossed L² discrepancy against the oracle.
    pub oracle_l2: Option<(f64, f64)>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.flagged {
            2
        } else {
            0
        }
    }
}

/// One delimited table: a header line, then rows.
struct Table {
    text: String,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    fn row(&mut self, cells: &[f64]) {
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            // shortest representation that round-trips
            let _ = write!(self.text, "{c:e}");
        }
        self.text.push('\n');
    }

    fn labelled_row(&mut self, label: &str, cells: &[f64]) {
        self.text.push_str(label);
        for c in cells {
            let _ = write!(self.text, ",{c:e}");
        }
        self.text.push('\n');
    }
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Output<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.files.push(path);
        Ok(())
    }
}

fn grid_for(cfg: &RunConfig) -> Result<FrequencyGrid> {
    Ok(FrequencyGrid::for_params(&cfg.params()?, cfg.points, cfg.range)?)
}

fn grid_json(grid: &FrequencyGrid) -> Value {
    let p = grid.points();
    json!({
        "len": grid.len(),
        "min": p[0],
        "max": p[p.len() - 1],
        "inserted": grid.hints(),
    })
}

/// Per-column divisor for the requested normalization.
fn peak(values: &[f64], norm: Normalization) -> f64 {
    match norm {
        Normalization::None => 1.0,
        Normalization::UnitPeak => {
            let m = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m == 0.0 {
                1.0
            } else {
                m
            }
        }
    }
}

/// Execute `cfg` and write its tables and metadata into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&cfg.output_dir).map_err(|source| CliError::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    let mut out = Output {
        dir: &cfg.output_dir,
        files: Vec::new(),
    };
    let mut meta = serde_json::Map::new();
    let (warnings, oracle_l2) = match cfg.mode {
        Mode::Kernels => (run_kernels(cfg, &mut out, &mut meta)?, None),
        Mode::Spectra => (run_spectra(cfg, &mut out, &mut meta)?, None),
        Mode::Totals => (run_totals(cfg, &mut out, &mut meta)?, None),
        Mode::Verify => run_verify(cfg, &mut out, &mut meta)?,
        Mode::Sweep => (run_sweep(cfg, &mut out, &mut meta)?, None),
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    for w in &warnings {
        log::warn!("{w}");
    }
    let flagged = !warnings.is_empty();
    meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("config".into(), serde_json::to_value(cfg)?);
    meta.insert("wall_time_s".into(), json!(wall_time_s));
    meta.insert("flagged".into(), json!(flagged));
    meta.insert("warnings".into(), json!(warnings));
    let text = serde_json::to_string_pretty(&Value::Object(meta))? + "\n";
    out.write(METADATA_FILE, &text)?;
    Ok(RunReport {
        mode: cfg.mode,
        files: out.files,
        flagged,
        warnings,
        wall_time_s,
        oracle_l2,
    })
}

fn run_kernels(cfg: &RunConfig, out: &mut Output, meta: &mut serde_json::Map<String, Value>) -> Result<Vec<String>> {
    let k = KernelSet::new(&cfg.params()?)?;
    let grid = grid_for(cfg)?;
    let probe = k.probe(cfg.probe);
    let mut t = Table::new(&["omega_offset_over_gamma", "p0_smooth", "p1_smooth_re", "p1_smooth_im", "p2_smooth"]);
    for &w in grid.points() {
        let p1 = probe.p1_smooth(w);
        t.row(&[w / cfg.gamma, k.p0_smooth(w), p1.re, p1.im, probe.p2_smooth(w)]);
    }
    out.write(KERNELS_FILE, &t.text)?;

    let mut lines = Table::new(&["kernel", "position_over_gamma", "weight_re", "weight_im"]);
    lines.labelled_row("p0", &[0.0, k.elastic_weight(), 0.0]);
    for l in probe.p1_lines() {
        lines.labelled_row("p1", &[l.position / cfg.gamma, l.weight.re, l.weight.im]);
    }
    for l in probe.p2_lines() {
        lines.labelled_row("p2", &[l.position / cfg.gamma, l.weight.re, l.weight.im]);
    }
    out.write(KERNEL_LINES_FILE, &lines.text)?;

    let s = k.steady_state();
    meta.insert("grid".into(), grid_json(&grid));
    meta.insert(
        "steady_state".into(),
        json!({
            "excited_population": k.excited_population(),
            "sigma_minus": [s[0].re, s[0].im],
            "elastic_weight": k.elastic_weight(),
        }),
    );
    Ok(Vec::new())
}

fn write_totals(out: &mut Output, t: &Totals) -> Result<()> {
    let mut table = Table::new(&["contribution", "elastic", "inelastic", "total", "abs_error"]);
    for (name, x) in [("ladder", &t.ladder), ("crossed", &t.crossed)] {
        table.labelled_row(name, &[x.elastic, x.inelastic, x.total, x.abs_error]);
    }
    out.write(TOTALS_FILE, &table.text)
}

fn totals_warnings(t: &Totals) -> Vec<String> {
    let mut w = Vec::new();
    if !(t.ladder.converged && t.crossed.converged) {
        w.push("totals quadrature did not converge".into());
    }
    let err = t.ladder.abs_error + t.crossed.abs_error;
    if t.ladder.total < -t.ladder.abs_error {
        w.push(format!("negative ladder total {:e}", t.ladder.total));
    }
    if t.crossed.total.abs() > t.ladder.total + err {
        w.push("crossed total exceeds ladder total".into());
    }
    w
}

/// Spectra and elastic lines, optionally with oracle columns.
fn write_spectra(
    cfg: &RunConfig,
    out: &mut Output,
    meta: &mut serde_json::Map<String, Value>,
    r: &CbsResult,
    oracle: Option<&OracleSpectra>,
) -> Result<()> {
    let lad = r.ladder.smooth_values();
    let cr = r.crossed.smooth_values();
    let (pl, pc) = (peak(&lad, cfg.normalization), peak(&cr, cfg.normalization));
    // oracle values are per unit |g|² and per ordered pair
    let oscale = cfg.coupling_mod2 * cfg.pair_multiplicity;
    let oracle_cols = oracle.map(|o| {
        let ol: Vec<f64> = o.ladder.iter().map(|x| x * oscale).collect();
        let oc: Vec<f64> = o.crossed.iter().map(|x| x * oscale).collect();
        let (ql, qc) = (peak(&ol, cfg.normalization), peak(&oc, cfg.normalization));
        (ol, oc, ql, qc)
    });

    let mut header = vec!["omega_D_offset_over_gamma", "ladder_inel", "crossed_inel"];
    if oracle.is_some() {
        header.extend(["oracle_ladder_inel", "oracle_crossed_inel"]);
    }
    let mut t = Table::new(&header);
    for (i, w) in r.ladder.omega.iter().enumerate() {
        let mut row = vec![w / cfg.gamma, lad[i] / pl, cr[i] / pc];
        if let Some((ol, oc, ql, qc)) = &oracle_cols {
            row.extend([ol[i] / ql, oc[i] / qc]);
        }
        t.row(&row);
    }
    out.write(SPECTRA_FILE, &t.text)?;

    let mut header = vec!["position", "ladder_weight", "crossed_weight"];
    if oracle.is_some() {
        header.extend(["oracle_ladder_weight", "oracle_crossed_weight"]);
    }
    let mut t = Table::new(&header);
    for (pos, l, c) in r.elastic_lines() {
        let mut row = vec![pos / cfg.gamma, l / pl, c / pc];
        if let (Some(o), Some((_, _, ql, qc))) = (oracle, &oracle_cols) {
            row.extend([o.ladder_line * oscale / ql, o.crossed_line * oscale / qc]);
        }
        t.row(&row);
    }
    out.write(LINES_FILE, &t.text)?;

    meta.insert(
        "normalization".into(),
        json!({ "mode": cfg.normalization, "ladder_divisor": pl, "crossed_divisor": pc }),
    );
    meta.insert("diagnostics".into(), serde_json::to_value(&r.diagnostics)?);
    Ok(())
}

fn compute(cfg: &RunConfig, with_totals: bool) -> Result<(FrequencyGrid, CbsResult)> {
    let grid = grid_for(cfg)?;
    let r = CbsResult::compute(&cfg.params()?, &grid, &cfg.quad(), cfg.pair_multiplicity, with_totals)?;
    Ok((grid, r))
}

fn quad_json(cfg: &RunConfig, r: &CbsResult) -> Value {
    json!({
        "abs_tol": cfg.abs_tol,
        "rel_tol": cfg.rel_tol,
        "max_panels": cfg.max_panels,
        "density_tolerance": r.diagnostics.tolerance,
    })
}

fn run_spectra(cfg: &RunConfig, out: &mut Output, meta: &mut serde_json::Map<String, Value>) -> Result<Vec<String>> {
    let (grid, r) = compute(cfg, true)?;
    write_spectra(cfg, out, meta, &r, None)?;
    if let Some(t) = &r.totals {
        write_totals(out, t)?;
        meta.insert("contrast".into(), json!(t.contrast()));
    }
    meta.insert("grid".into(), grid_json(&grid));
    meta.insert("quadrature".into(), quad_json(cfg, &r));
    Ok(r.diagnostics.warnings.clone())
}

fn run_totals(cfg: &RunConfig, out: &mut Output, meta: &mut serde_json::Map<String, Value>) -> Result<Vec<String>> {
    let k = KernelSet::new(&cfg.params()?)?;
    let t = Totals::compute(&k, &cfg.quad());
    let t = Totals {
        ladder: t.ladder.scale(cfg.pair_multiplicity),
        crossed: t.crossed.scale(cfg.pair_multiplicity),
    };
    write_totals(out, &t)?;
    meta.insert("contrast".into(), json!(t.contrast()));
    meta.insert("quadrature".into(), json!({ "abs_tol": cfg.abs_tol, "rel_tol": cfg.rel_tol, "max_panels": cfg.max_panels }));
    Ok(totals_warnings(&t))
}

fn run_verify(
    cfg: &RunConfig,
    out: &mut Output,
    meta: &mut serde_json::Map<String, Value>,
) -> Result<(Vec<String>, Option<(f64, f64)>)> {
    let (grid, r) = compute(cfg, false)?;
    let opts = ExtractionOptions {
        phase_points: cfg.oracle_phase_points,
        ..ExtractionOptions::default()
    };
    let o = extract_ladder_crossed(&cfg.params()?, grid.points(), &opts)?;
    write_spectra(cfg, out, meta, &r, Some(&o))?;
    let l2 = (
        relative_l2(&r.ladder.normalized(), &normalize_unit_peak(&o.ladder)),
        relative_l2(&r.crossed.normalized(), &normalize_unit_peak(&o.crossed)),
    );
    let mut warnings = r.diagnostics.warnings.clone();
    for (name, v) in [("ladder", l2.0), ("crossed", l2.1)] {
        if !(v <= cfg.oracle_tolerance) {
            warnings.push(format!("{name} oracle discrepancy {v:e} exceeds {:e}", cfg.oracle_tolerance));
        }
    }
    meta.insert("grid".into(), grid_json(&grid));
    meta.insert("quadrature".into(), quad_json(cfg, &r));
    meta.insert(
        "oracle".into(),
        json!({
            "relative_l2_ladder": l2.0,
            "relative_l2_crossed": l2.1,
            "moduli": opts.moduli,
            "phase_points": opts.phase_points,
            "damping": opts.damping,
            "extraction": o.diagnostics,
        }),
    );
    Ok((warnings, Some(l2)))
}

fn run_sweep(cfg: &RunConfig, out: &mut Output, meta: &mut serde_json::Map<String, Value>) -> Result<Vec<String>> {
    let cells: Vec<(f64, f64)> = cfg
        .sweep_rabi
        .iter()
        .flat_map(|&r| cfg.sweep_detuning.iter().map(move |&d| (r, d)))
        .collect();
    let quad = cfg.quad();
    let results: Vec<Result<(f64, Totals)>> = cells
        .par_iter()
        .map(|&(rabi, det)| {
            let p = cfg.params_at(rabi, det)?;
            let t = Totals::compute(&KernelSet::new(&p)?, &quad);
            Ok((
                p.saturation(),
                Totals {
                    ladder: t.ladder.scale(cfg.pair_multiplicity),
                    crossed: t.crossed.scale(cfg.pair_multiplicity),
                },
            ))
        })
        .collect();
    let mut table = Table::new(&[
        "rabi_over_gamma",
        "detuning_over_gamma",
        "saturation",
        "ladder_elastic",
        "ladder_total",
        "crossed_elastic",
        "crossed_total",
        "contrast",
        "abs_error",
        "flagged",
    ]);
    let mut warnings = Vec::new();
    for (&(rabi, det), res) in cells.iter().zip(results) {
        let (s, t) = res?;
        let w = totals_warnings(&t);
        let row = [
            rabi / cfg.gamma,
            det / cfg.gamma,
            s,
            t.ladder.elastic,
            t.ladder.total,
            t.crossed.elastic,
            t.crossed.total,
            t.contrast(),
            t.ladder.abs_error + t.crossed.abs_error,
            if w.is_empty() { 0.0 } else { 1.0 },
        ];
        table.row(&row);
        warnings.extend(w.into_iter().map(|m| format!("rabi {rabi}, detuning {det}: {m}")));
    }
    out.write(SWEEP_FILE, &table.text)?;
    meta.insert("quadrature".into(), json!({ "abs_tol": cfg.abs_tol, "rel_tol": cfg.rel_tol, "max_panels": cfg.max_panels }));
    meta.insert("sweep_cells".into(), json!(cells.len()));
    Ok(warnings)
}
