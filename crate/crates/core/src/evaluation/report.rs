//! CSV reports derived from sweep cells.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::store::write_atomic;
use super::{FoldResult, SweepReport};
use crate::ensemble::OnlineMode;
use crate::error::{Error, Result};

/// `0.0`, `0.5` for tenths; full precision otherwise.
pub fn format_overlap(overlap: f64) -> String {
    let tenths = overlap * 10.0;
    if (tenths - tenths.round()).abs() < 1e-9 {
        format!("{:.1}", overlap)
    } else {
        format!("{overlap}")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    /// Keep single-activity users in cross-user aggregates.
    pub include_single_activity: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ReportPaths {
    pub long: PathBuf,
    pub summary: PathBuf,
    pub heatmaps: Vec<PathBuf>,
}

pub const LONG_HEADER: [&str; 7] = ["user", "activity", "window", "overlap", "mode", "n_windows", "accuracy"];
pub const SUMMARY_HEADER: [&str; 9] = [
    "group",
    "value",
    "mode",
    "cells",
    "windows",
    "mean",
    "variance",
    "weighted_mean",
    "flag",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::format(path, e.to_string())
}

/// Writes `long.csv`, `summary.csv` and one heatmap per user and mode.
pub fn emit_reports(report: &SweepReport, out_dir: &Path, options: ReportOptions) -> Result<ReportPaths> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = ReportPaths {
        long: out_dir.join("long.csv"),
        summary: out_dir.join("summary.csv"),
        heatmaps: Vec::new(),
    };
    write_long(&report.cells, &paths.long)?;
    write_summary(&report.cells, &paths.summary, options)?;

    let mut modes: Vec<OnlineMode> = report.cells.iter().map(|c| c.mode).collect();
    modes.sort_by_key(|m| *m as u8);
    modes.dedup();
    for user in report.users() {
        for &mode in &modes {
            let path = out_dir.join(format!("heatmap_user{user}_{mode}.csv"));
            write_heatmap(report, user, mode, &path)?;
            paths.heatmaps.push(path);
        }
    }
    Ok(paths)
}

fn write_long(cells: &[FoldResult], path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(LONG_HEADER).map_err(csv_err(path))?;
        for c in cells {
            let user = c.user_id.to_string();
            let window = c.window_size.to_string();
            let overlap = format_overlap(c.overlap);
            let mode = c.mode.as_str();
            out.write_record([
                user.as_str(),
                "all",
                &window,
                &overlap,
                mode,
                &c.windows.to_string(),
                &opt(c.accuracy()),
            ])
            .map_err(csv_err(path))?;
            for (activity, score) in &c.per_activity {
                out.write_record([
                    user.as_str(),
                    &activity.to_string(),
                    &window,
                    &overlap,
                    mode,
                    &score.windows.to_string(),
                    &opt(score.accuracy()),
                ])
                .map_err(csv_err(path))?;
            }
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}

fn write_heatmap(report: &SweepReport, user: u8, mode: OnlineMode, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["window".to_string()];
        header.extend(report.grid.overlaps.iter().map(|&o| format_overlap(o)));
        out.write_record(&header).map_err(csv_err(path))?;
        for &window in &report.grid.windows {
            let mut row = vec![window.to_string()];
            for &o in &report.grid.overlaps {
                row.push(opt(report.cell(user, window, o, mode).and_then(FoldResult::accuracy)));
            }
            out.write_record(&row).map_err(csv_err(path))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}

/// Aggregate of cell accuracies within one summary group.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GroupStats {
    pub cells: usize,
    pub windows: usize,
    pub correct: usize,
    /// Unweighted mean of cell accuracies.
    pub mean: f64,
    /// Population variance of cell accuracies.
    pub variance: f64,
}

impl GroupStats {
    pub fn from_cells<'a>(cells: impl IntoIterator<Item = &'a FoldResult>) -> Option<Self> {
        let scored: Vec<&FoldResult> = cells.into_iter().filter(|c| !c.is_empty()).collect();
        if scored.is_empty() {
            return None;
        }
        let accs: Vec<f64> = scored.iter().filter_map(|c| c.accuracy()).collect();
        let n = accs.len() as f64;
        let mean = accs.iter().sum::<f64>() / n;
        let variance = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            cells: scored.len(),
            windows: scored.iter().map(|c| c.windows).sum(),
            correct: scored.iter().map(|c| c.correct).sum(),
            mean,
            variance,
        })
    }

    /// Pooled accuracy: every window weighs the same.
    pub fn weighted_mean(&self) -> f64 {
        self.correct as f64 / self.windows as f64
    }
}

fn write_summary(cells: &[FoldResult], path: &Path, options: ReportOptions) -> Result<()> {
    let mut modes: Vec<OnlineMode> = cells.iter().map(|c| c.mode).collect();
    modes.sort_by_key(|m| *m as u8);
    modes.dedup();
    let pooled = |c: &&FoldResult| options.include_single_activity || !c.single_activity;

    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
        let mut row = |group: &str, value: String, mode: OnlineMode, stats: Option<GroupStats>, flag: &str| {
            let Some(s) = stats else { return Ok(()) };
            out.write_record([
                group,
                &value,
                mode.as_str(),
                &s.cells.to_string(),
                &s.windows.to_string(),
                &s.mean.to_string(),
                &s.variance.to_string(),
                &s.weighted_mean().to_string(),
                flag,
            ])
            .map_err(csv_err(path))
        };
        for &mode in &modes {
            let in_mode: Vec<&FoldResult> = cells.iter().filter(|c| c.mode == mode).collect();
            let shared: Vec<&FoldResult> = in_mode.iter().copied().filter(pooled).collect();
            row("all", "all".into(), mode, GroupStats::from_cells(shared.iter().copied()), "")?;

            let mut by_overlap: BTreeMap<String, Vec<&FoldResult>> = BTreeMap::new();
            let mut by_window: BTreeMap<usize, Vec<&FoldResult>> = BTreeMap::new();
            for &c in &shared {
                by_overlap.entry(format_overlap(c.overlap)).or_default().push(c);
                by_window.entry(c.window_size).or_default().push(c);
            }
            for (o, group) in by_overlap {
                row("overlap", o, mode, GroupStats::from_cells(group), "")?;
            }
            for (w, group) in by_window {
                row("window", w.to_string(), mode, GroupStats::from_cells(group), "")?;
            }

            let mut by_user: BTreeMap<u8, Vec<&FoldResult>> = BTreeMap::new();
            for &c in &in_mode {
                by_user.entry(c.user_id).or_default().push(c);
            }
            for (u, group) in by_user {
                let flag = if group.iter().any(|c| c.single_activity) { "single_activity" } else { "" };
                row("user", u.to_string(), mode, GroupStats::from_cells(group), flag)?;
            }
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}
