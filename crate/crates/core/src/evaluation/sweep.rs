//! Grid sweeps over window size and overlap.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::store::ResultsStore;
use super::{
    featurize_users, louo_split, score_fold, single_activity_flags, train_fold, FoldResult, PipelineOptions,
};
use crate::dataset::SensorStream;
use crate::ensemble::OnlineMode;
use crate::error::{Error, Result};
use crate::windowing::WindowConfig;

pub const MIN_GRID_WINDOW: usize = 100;
pub const MAX_GRID_WINDOW: usize = 1000;
pub const MAX_GRID_OVERLAP: f64 = 0.9;

/// Window sizes (samples) crossed with overlap fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub windows: Vec<usize>,
    pub overlaps: Vec<f64>,
}

impl Grid {
    pub fn new(windows: Vec<usize>, overlaps: Vec<f64>) -> Result<Self> {
        let grid = Self { windows, overlaps };
        grid.configs()?;
        Ok(grid)
    }

    /// 100..=1000 step 100 crossed with 0.0..=0.9 step 0.1.
    pub fn full() -> Self {
        Self {
            windows: (1..=10).map(|i| i * 100).collect(),
            overlaps: (0..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }

    /// Reduced 3x3 grid for quick checks.
    pub fn ci() -> Self {
        Self {
            windows: vec![100, 500, 1000],
            overlaps: vec![0.0, 0.5, 0.8],
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "full" => Ok(Self::full()),
            "ci" => Ok(Self::ci()),
            other => Err(Error::InvalidGrid(format!("unknown grid preset `{other}`"))),
        }
    }

    pub fn len(&self) -> usize {
        self.windows.len() * self.overlaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Window configurations in window-major order.
    pub fn configs(&self) -> Result<Vec<WindowConfig>> {
        if self.is_empty() {
            return Err(Error::InvalidGrid("grid has no cells".into()));
        }
        let mut out = Vec::with_capacity(self.len());
        for &w in &self.windows {
            for &o in &self.overlaps {
                out.push(WindowConfig::new(w, o).map_err(|e| Error::InvalidGrid(e.to_string()))?);
            }
        }
        Ok(out)
    }

    /// Rejects values outside 100..=1000 samples and 0.0..=0.9 overlap.
    pub fn check_standard_bounds(&self) -> Result<()> {
        if let Some(w) = self.windows.iter().find(|&&w| !(MIN_GRID_WINDOW..=MAX_GRID_WINDOW).contains(&w)) {
            return Err(Error::InvalidGrid(format!(
                "window size {w} outside {MIN_GRID_WINDOW}..={MAX_GRID_WINDOW}"
            )));
        }
        if let Some(o) = self
            .overlaps
            .iter()
            .find(|&&o| !(0.0..=MAX_GRID_OVERLAP + 1e-12).contains(&o))
        {
            return Err(Error::InvalidGrid(format!("overlap {o} outside 0.0..={MAX_GRID_OVERLAP}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub grid: Grid,
    pub modes: Vec<OnlineMode>,
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub pipeline: PipelineOptions,
    /// Directory for persisted cells.
    pub store: Option<PathBuf>,
    /// Reuse cells already present in the store.
    pub resume: bool,
    /// Restrict the test users; `None` runs every fold.
    pub test_users: Option<Vec<u8>>,
}

impl SweepOptions {
    pub fn new(grid: Grid, seed: u64) -> Self {
        Self {
            grid,
            modes: vec![OnlineMode::SupervisedFrozen, OnlineMode::SemiSupervised],
            seed,
            workers: 0,
            pipeline: PipelineOptions::default(),
            store: None,
            resume: false,
            test_users: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub grid: Grid,
    /// Sorted by user, window size, overlap, mode.
    pub cells: Vec<FoldResult>,
    /// Cells taken from the store instead of recomputed.
    pub resumed: usize,
}

impl SweepReport {
    pub fn users(&self) -> Vec<u8> {
        let mut u: Vec<u8> = self.cells.iter().map(|c| c.user_id).collect();
        u.sort_unstable();
        u.dedup();
        u
    }

    pub fn cell(&self, user: u8, window_size: usize, overlap: f64, mode: OnlineMode) -> Option<&FoldResult> {
        self.cells.iter().find(|c| {
            c.user_id == user && c.window_size == window_size && (c.overlap - overlap).abs() < 1e-9 && c.mode == mode
        })
    }
}

/// Runs every fold x window configuration x mode cell.
///
/// Each configuration featurizes all users once and trains one model per
/// fold, which is then cloned for every mode.
pub fn sweep(streams: &[SensorStream], options: &SweepOptions) -> Result<SweepReport> {
    let configs = options.grid.configs()?;
    if options.modes.is_empty() {
        return Err(Error::InvalidArgument("no evaluation mode selected".into()));
    }
    let mut folds = louo_split(streams)?;
    if let Some(users) = &options.test_users {
        folds.retain(|f| users.contains(&f.test_user));
    }
    let store = options.store.as_ref().map(ResultsStore::open).transpose()?;
    let single = single_activity_flags(streams);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;

    let per_config: Vec<Result<(Vec<FoldResult>, usize)>> = pool.install(|| {
        configs
            .par_iter()
            .map(|config| {
                let mut cells = Vec::new();
                let mut pending = Vec::new();
                for fold in &folds {
                    for &mode in &options.modes {
                        let key = ResultsStore::cell_key(
                            fold.test_user,
                            config.window_size(),
                            config.overlap(),
                            mode,
                            options.seed,
                        );
                        match store.as_ref().filter(|_| options.resume).and_then(|s| s.load(&key)) {
                            Some(done) => cells.push(done),
                            None => pending.push((fold, mode)),
                        }
                    }
                }
                let resumed = cells.len();
                if pending.is_empty() {
                    return Ok((cells, resumed));
                }
                let features = featurize_users(streams, config, options.pipeline.purity);
                let mut f = 0;
                while f < pending.len() {
                    let fold = pending[f].0;
                    let modes: Vec<OnlineMode> = pending[f..]
                        .iter()
                        .take_while(|(other, _)| other.test_user == fold.test_user)
                        .map(|&(_, m)| m)
                        .collect();
                    f += modes.len();
                    let test = features.get(&fold.test_user).map_or(&[][..], Vec::as_slice);
                    let is_single = single.get(&fold.test_user).copied().unwrap_or(false);
                    let model = if test.is_empty() {
                        None
                    } else {
                        Some(train_fold(fold, &features, &options.pipeline.ensemble)?)
                    };
                    for mode in modes {
                        let (result, records) = match &model {
                            Some(m) => {
                                let (outcome, _) =
                                    score_fold(fold, m.clone(), test, config, mode, options.seed, is_single)?;
                                (outcome.result, outcome.records)
                            }
                            None => (
                                FoldResult::from_records(fold.test_user, config, mode, options.seed, &[], is_single),
                                Vec::new(),
                            ),
                        };
                        if let Some(s) = &store {
                            s.save(&result, &records)?;
                        }
                        log::debug!(
                            "user {} W={} o={} {}: {:?}",
                            result.user_id,
                            result.window_size,
                            result.overlap,
                            mode,
                            result.accuracy()
                        );
                        cells.push(result);
                    }
                }
                Ok((cells, resumed))
            })
            .collect()
    });

    let mut cells = Vec::new();
    let mut resumed = 0;
    for r in per_config {
        let (c, n) = r?;
        cells.extend(c);
        resumed += n;
    }
    cells.sort_by(|a, b| {
        (a.user_id, a.window_size)
            .cmp(&(b.user_id, b.window_size))
            .then(a.overlap.total_cmp(&b.overlap))
            .then((a.mode as u8).cmp(&(b.mode as u8)))
    });
    Ok(SweepReport {
        seed: options.seed,
        grid: options.grid.clone(),
        cells,
        resumed,
    })
}
