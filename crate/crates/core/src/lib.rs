//! Fixed-time synchronization of quaternion-valued memristive neural networks with mixed delays.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases fix `f64`.

pub mod analysis;
pub mod bilateral;
pub mod config;
pub mod controllers;
pub mod engine;
pub mod error;
pub mod history;
pub mod image;
pub mod model;
pub mod presets;
pub mod quat;
pub mod scalar;

pub use analysis::{
    check_thm1, check_thm2, detect_sync_time, settling_fixed_time, settling_fixed_time_split, settling_t1, settling_t2,
    settling_t3_t4, Branch, Condition, SettlingReport,
};
pub use controllers::{u_thm1, u_thm2, Controller, Thm1Gains, Thm2Gains, WindowEmbedding};
pub use engine::{integrate, sweep_thm2, DriveMode, Integrator, RunConfig, SweepParam, SweepRow, TrajectoryRecord};
pub use error::{Error, Result};
pub use history::{DelayProfile, DelaySpec, HistoryBuffer, Interpolation};
pub use model::{error_state, ActivationKind, ActivationSpec, MemristiveWeight, NetworkSpec, WeightMatrix};
pub use quat::{CayleyDickson, QVector, Quaternion};
pub use scalar::Scalar;

pub type Quaternion64 = Quaternion<f64>;
pub type Quaternion32 = Quaternion<f32>;
pub type QVector64 = QVector<f64>;
pub type QVector32 = QVector<f32>;
pub type NetworkSpec64 = NetworkSpec<f64>;
pub type RunConfig64 = RunConfig<f64>;
pub type TrajectoryRecord64 = TrajectoryRecord<f64>;
