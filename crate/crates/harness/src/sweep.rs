//! Parallel parameter sweeps, CSV output and per-norm rate fits.

use crate::config::{Point, SweepConfig, SweepMode};
use crate::error::{HarnessError, Result};
use crate::fit::{fit_rate, FitPoint, RateFit};
use crate::pair::{norm_names, run_matched_pair, PointResult};
use crate::plot::loglog_svg;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str = "mode,eps,delta,gamma,norm_name,value,blowup,wall_ms";

/// One CSV row. `failed` rows carry `FAILED` in the value column.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub mode: SweepMode,
    pub eps: f64,
    pub delta: f64,
    pub gamma: Option<f64>,
    pub norm_name: String,
    pub value: f64,
    pub blowup: bool,
    pub wall_ms: u64,
    pub failed: bool,
}

impl Row {
    /// Abscissa of the rate fit: `eps + delta`, `delta`, or `eps` for a gamma scan.
    pub fn h(&self) -> f64 {
        match self.mode {
            SweepMode::EpsDeltaToZero => self.eps + self.delta,
            SweepMode::DeltaToInfty => self.delta,
            SweepMode::GammaScan => self.eps,
        }
    }
}

/// Fits are grouped by gamma (for a gamma scan), eps (for `delta_to_infty`)
/// and norm name.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct FitKey {
    pub group: Option<f64>,
    pub norm_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub rows: Vec<Row>,
    pub fits: Vec<(FitKey, RateFit)>,
    /// Largest `eps` below which no point blew up; `None` if the smallest did.
    pub blowup_threshold: Option<f64>,
    pub failures: Vec<(Point, String)>,
}

impl SweepResult {
    pub fn fit(&self, group: Option<f64>, norm_name: &str) -> Option<&RateFit> {
        self.fits.iter().find(|(k, _)| k.group == group && k.norm_name == norm_name).map(|(_, f)| f)
    }

    /// Rows of one norm in CSV order.
    pub fn series(&self, norm_name: &str) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.norm_name == norm_name).collect()
    }
}

fn group_of(mode: SweepMode, r: &Row) -> Option<f64> {
    match mode {
        SweepMode::EpsDeltaToZero => None,
        SweepMode::DeltaToInfty => Some(r.eps),
        SweepMode::GammaScan => r.gamma,
    }
}

fn rows_of(mode: SweepMode, outcome: &Result<PointResult>, point: Point, keep_wall: bool) -> Vec<Row> {
    let row = |name: &str, value: f64, blowup: bool, wall_ms: u64, failed: bool| Row {
        mode,
        eps: point.eps,
        delta: point.delta,
        gamma: point.gamma,
        norm_name: name.to_string(),
        value,
        blowup,
        wall_ms: if keep_wall { wall_ms } else { 0 },
        failed,
    };
    match outcome {
        Ok(r) => r.norms.iter().map(|(n, v)| row(n, *v, r.blowup, r.wall_ms, false)).collect(),
        Err(_) => norm_names(mode).iter().map(|n| row(n, f64::NAN, false, 0, true)).collect(),
    }
}

/// Evaluates every point (in parallel), sorts the rows and fits rates.
/// Files are written when `cfg.out_dir` is set.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let points = cfg.points();
    let outcomes: Vec<Result<PointResult>> = points.par_iter().map(|&p| run_matched_pair(p, cfg)).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (p, o) in points.iter().zip(&outcomes) {
        rows.extend(rows_of(cfg.mode, o, *p, cfg.record_wall_time));
        if let Err(e) = o {
            log::error!("point eps = {}, delta = {} failed: {e}", p.eps, p.delta);
            failures.push((*p, e.to_string()));
        }
    }
    sort_rows(&mut rows);
    let result = SweepResult {
        mode: cfg.mode,
        fits: fit_rows(cfg.mode, &rows),
        blowup_threshold: blowup_threshold(&rows),
        rows,
        failures,
    };
    if let Some(dir) = &cfg.out_dir {
        write_outputs(&result, dir, cfg.plots)?;
    }
    Ok(result)
}

pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|a, b| {
        a.eps
            .total_cmp(&b.eps)
            .then(a.delta.total_cmp(&b.delta))
            .then(a.norm_name.cmp(&b.norm_name))
            .then(a.gamma.unwrap_or(f64::NAN).total_cmp(&b.gamma.unwrap_or(f64::NAN)))
    });
}

/// One fit per (group, norm) with at least three usable non-blowup points.
pub fn fit_rows(mode: SweepMode, rows: &[Row]) -> Vec<(FitKey, RateFit)> {
    let mut groups: BTreeMap<(u64, String), (Option<f64>, Vec<FitPoint>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.failed) {
        let g = group_of(mode, r);
        let key = (g.map_or(0, f64::to_bits), r.norm_name.clone());
        groups.entry(key).or_insert_with(|| (g, Vec::new())).1.push(FitPoint { h: r.h(), value: r.value, blowup: r.blowup });
    }
    let mut fits: Vec<(FitKey, RateFit)> = groups
        .into_iter()
        .filter_map(|((_, name), (g, pts))| {
            fit_rate(&pts, true).ok().map(|f| (FitKey { group: g, norm_name: name }, f))
        })
        .collect();
    fits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    fits
}

/// Largest `eps` such that no point with `eps' <= eps` blew up.
pub fn blowup_threshold(rows: &[Row]) -> Option<f64> {
    let mut eps: Vec<(f64, bool)> = rows.iter().map(|r| (r.eps, r.blowup)).collect();
    eps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = None;
    for (e, blew) in eps {
        if blew {
            break;
        }
        best = Some(e);
    }
    best
}

fn fmt_f64(x: f64) -> String {
    // Shortest round-trip representation; deterministic across platforms.
    format!("{x:?}")
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let value = if r.failed { "FAILED".to_string() } else { fmt_f64(r.value) };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.mode.name(),
            fmt_f64(r.eps),
            fmt_f64(r.delta),
            r.gamma.map(fmt_f64).unwrap_or_default(),
            r.norm_name,
            value,
            u8::from(r.blowup),
            r.wall_ms
        );
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == CSV_HEADER => {}
        _ => return Err(HarnessError::Csv { line: 1, msg: format!("expected header '{CSV_HEADER}'") }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| HarnessError::Csv { line: line_no, msg };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(err(format!("{} columns, expected 8", cols.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("'{s}': {e}")));
        let failed = cols[5] == "FAILED";
        rows.push(Row {
            mode: cols[0].parse().map_err(err)?,
            eps: num(cols[1])?,
            delta: num(cols[2])?,
            gamma: if cols[3].is_empty() { None } else { Some(num(cols[3])?) },
            norm_name: cols[4].to_string(),
            value: if failed { f64::NAN } else { num(cols[5])? },
            blowup: match cols[6] {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("blowup flag '{other}'"))),
            },
            wall_ms: cols[7].parse().map_err(|e| err(format!("wall_ms: {e}")))?,
            failed,
        });
    }
    Ok(rows)
}

pub fn fits_csv(fits: &[(FitKey, RateFit)]) -> String {
    let mut s = String::from("group,norm_name,slope,intercept,r2,points\n");
    for (k, f) in fits {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            k.group.map(fmt_f64).unwrap_or_default(),
            k.norm_name,
            fmt_f64(f.slope),
            fmt_f64(f.intercept),
            fmt_f64(f.r2),
            f.points
        );
    }
    s
}

/// Writes `results.csv`, `fits.csv` and optionally one SVG per norm.
pub fn write_outputs(result: &SweepResult, dir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = vec![dir.join("results.csv"), dir.join("fits.csv")];
    std::fs::write(&written[0], to_csv(&result.rows))?;
    std::fs::write(&written[1], fits_csv(&result.fits))?;
    if plots {
        let mut names: Vec<&str> = result.rows.iter().map(|r| r.norm_name.as_str()).collect();
        names.dedup();
        names.sort_unstable();
        names.dedup();
        for name in names {
            let mut series: BTreeMap<u64, (String, Vec<(f64, f64)>)> = BTreeMap::new();
            for r in result.series(name).into_iter().filter(|r| !r.failed) {
                let g = group_of(result.mode, r);
                let label = match (result.mode, g) {
                    (SweepMode::GammaScan, Some(g)) => format!("gamma = {g}"),
                    (SweepMode::DeltaToInfty, Some(e)) => format!("eps = {e}"),
                    _ => name.to_string(),
                };
                series.entry(g.map_or(0, f64::to_bits)).or_insert_with(|| (label, Vec::new())).1.push((r.h(), r.value));
            }
            let x_label = match result.mode {
                SweepMode::EpsDeltaToZero => "eps + delta",
                SweepMode::DeltaToInfty => "delta",
                SweepMode::GammaScan => "eps",
            };
            let svg = loglog_svg(&format!("{} {name}", result.mode), x_label, &series.into_values().collect::<Vec<_>>());
            let path = dir.join(format!("{name}.svg"));
            std::fs::write(&path, svg)?;
            written.push(path);
        }
    }
    Ok(written)
}
