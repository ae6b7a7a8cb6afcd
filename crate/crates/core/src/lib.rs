//! Streaming human-activity-recognition benchmark harness.
//!
//! The pipeline mirrors an on-device recognizer: raw IMU samples are cut into
//! overlapping windows, each window becomes one 81-dimensional time-domain
//! feature vector, and a three-member incremental ensemble (kNN, Gaussian
//! naive Bayes, Hoeffding tree) classifies it. In semi-supervised mode the
//! ensemble retrains itself on its own predictions when it is confident enough.
//!
//! On top of that sit a leave-one-user-out sweep over window size and overlap
//! factor, CSV reporting, and a phase-timing profiler with a pluggable power
//! model for energy estimates.

pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod learners;
pub mod profiling;
pub mod windowing;

pub use dataset::{ActivityId, RawSample, SensorStream, SyntheticSpec};
pub use ensemble::{EnsembleConfig, EnsembleModel, OnlineMode, Prediction};
pub use error::{Error, Result};
pub use evaluation::{Fold, FoldResult, Grid, SweepReport};
pub use features::FeatureVector;
pub use windowing::{SensorWindow, WindowConfig};
