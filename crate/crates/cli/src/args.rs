use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use harsweep::ensemble::UpdateStrategy;
use harsweep::evaluation::PipelineOptions;
use harsweep::windowing::DEFAULT_PURITY;
use harsweep::{EnsembleConfig, OnlineMode};

#[derive(Debug, Parser)]
#[command(name = "harsweep", version, about = "Streaming activity-recognition benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count samples per user and activity and diff them against the reference table.
    Validate {
        /// Directory holding subject101.dat .. subject109.dat.
        #[arg(long, env = "HARSWEEP_DATA_DIR")]
        data_dir: PathBuf,
    },
    /// Leave-one-user-out sweep over window size and overlap.
    Sweep(SweepArgs),
    /// Evaluate a single user at one window configuration.
    Eval(EvalArgs),
    /// Time the pipeline phases for one user and estimate energy.
    Profile(ProfileArgs),
    /// Write synthetic subject files.
    Synth {
        /// TOML spec; built-in defaults when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Destination directory for subjectNNN.dat files.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding subject101.dat .. subject109.dat.
    #[arg(long, env = "HARSWEEP_DATA_DIR", conflicts_with = "synthetic")]
    pub data_dir: Option<PathBuf>,
    /// Synthetic data spec (TOML) used instead of a dataset directory.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sup,
    Semi,
    Both,
}

impl ModeArg {
    pub fn modes(self) -> Vec<OnlineMode> {
        match self {
            Self::Sup => vec![OnlineMode::SupervisedFrozen],
            Self::Semi => vec![OnlineMode::SemiSupervised],
            Self::Both => vec![OnlineMode::SupervisedFrozen, OnlineMode::SemiSupervised],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridPreset {
    Full,
    Ci,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    All,
    Tri,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Preset grid: `full` is 100..=1000 step 100 by 0.0..=0.9 step 0.1, `ci` is 3x3.
    #[arg(long, value_enum, default_value = "full")]
    pub grid: GridPreset,
    /// Window sizes in samples, replacing the preset's.
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<usize>>,
    /// Overlap fractions, replacing the preset's.
    #[arg(long, value_delimiter = ',')]
    pub overlaps: Option<Vec<f64>>,
    /// Accept window sizes outside 100..=1000 and overlaps above 0.9.
    #[arg(long)]
    pub allow_off_grid: bool,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    /// Neighbors consulted by kNN.
    #[arg(long)]
    pub k: Option<usize>,
    /// kNN store capacity.
    #[arg(long)]
    pub capacity: Option<usize>,
    /// Hoeffding tree split confidence.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Hoeffding tree tie threshold.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Hoeffding tree grace period.
    #[arg(long)]
    pub grace: Option<u64>,
    /// Self-update confidence threshold.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Which members learn from a confident prediction.
    #[arg(long, value_enum, default_value = "all")]
    pub strategy: StrategyArg,
    /// Minimum window purity.
    #[arg(long, default_value_t = DEFAULT_PURITY)]
    pub purity: f64,
}

impl LearnerArgs {
    pub fn pipeline(&self) -> PipelineOptions {
        let mut e = EnsembleConfig::default();
        if let Some(k) = self.k {
            e.knn.k = k;
        }
        if let Some(c) = self.capacity {
            e.knn.capacity = c;
        }
        if let Some(d) = self.delta {
            e.tree.delta = d;
        }
        if let Some(t) = self.tau {
            e.tree.tie_threshold = t;
        }
        if let Some(g) = self.grace {
            e.tree.grace_period = g;
        }
        if let Some(t) = self.theta {
            e.confidence_threshold = t;
        }
        e.strategy = match self.strategy {
            StrategyArg::All => UpdateStrategy::AllMembers,
            StrategyArg::Tri => UpdateStrategy::TriTraining,
        };
        PipelineOptions {
            ensemble: e,
            purity: self.purity,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Frozen supervised model, self-updating model, or both.
    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeArg,
    /// Seed of the synthetic data and of the cell keys.
    #[arg(long)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Test users to run; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub users: Option<Vec<u8>>,
    /// Report directory; cells are stored under `<out>/cells`.
    #[arg(long)]
    pub out: PathBuf,
    /// Skip cells already stored under `--out`.
    #[arg(long)]
    pub resume: bool,
    /// Keep single-activity users in cross-user summary rows.
    #[arg(long)]
    pub include_single_activity: bool,
    #[command(flatten)]
    pub learners: LearnerArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Test user; every other user trains the model.
    #[arg(long)]
    pub user: u8,
    /// Window size in samples.
    #[arg(long)]
    pub window: usize,
    /// Overlap fraction between consecutive windows.
    #[arg(long)]
    pub overlap: f64,
    /// Frozen supervised model, self-updating model, or both.
    #[arg(long, value_enum, default_value = "semi")]
    pub mode: ModeArg,
    /// Seed of the synthetic data and of the cell key.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accept a window size outside 100..=1000 or an overlap above 0.9.
    #[arg(long)]
    pub allow_off_grid: bool,
    /// Directory for the cell JSON and audit log.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub learners: LearnerArgs,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Test user; every other user trains the model.
    #[arg(long)]
    pub user: u8,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Frozen supervised model, self-updating model, or both.
    #[arg(long, value_enum, default_value = "semi")]
    pub mode: ModeArg,
    /// Seed of the synthetic data and of the cell key.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Timed repetitions per configuration (at least 5).
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Phase power draws (TOML).
    #[arg(long, conflicts_with = "power_log")]
    pub power_model: Option<PathBuf>,
    /// Measured power trace (CSV: timestamp_seconds,watts).
    #[arg(long)]
    pub power_log: Option<PathBuf>,
    /// Directory for timing_<mode>.csv and energy_<mode>.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub learners: LearnerArgs,
}
