//! JSON run configuration (`schema: 1`).
//!
//! ```json
//! {
//!   "schema": 1,
//!   "network": {
//!     "n": 2,
//!     "d": [0.5, 0.5],
//!     "a": { "dense": [[[1, 0, 0, 0], { "hat": [1, 0, 0, 0], "check": [0, 1, 0, 0], "threshold": 1 }], ...] },
//!     "b": { "banded": { "n": 256, "lower": [..], "diag": [..], "upper": [..] } },
//!     "c": { "scaled_identity": [10, 0, 0, 0] },
//!     "act_f": { "kind": "scaled_tanh", "scale": 2.0 },
//!     "act_g": { "kind": "piecewise_abs", "scale": 0.05, "lipschitz": 0.1 },
//!     "act_h": { "kind": "identity" },
//!     "delays": { "tau": { "sinusoid": { "amplitude": 0.3, "frequency": 1, "offset": 0.4 } }, "pi": 0.4 },
//!     "input": [[0, 0, 0, 0], [0, 0, 0, 0]]
//!   },
//!   "controller": { "type": "thm2", "k1": [..], "k2": [..], "k3": [..], "mu": 40, "gamma": 1.5 },
//!   "run": { "t_end": 0.5, "h": 1e-4, "drive_initial": [..], "response_initial": [..] },
//!   "image": { "path": "img.ppm", "corruption": { "missing": 0.8 }, "t_snapshots": [0.04, 0.3] }
//! }
//! ```
//!
//! A weight entry is either a bare quaternion (a constant weight) or `{hat, check, threshold}`.
//! `input`, `controller` and `image` are optional; omitted `run` fields take the
//! [`RunConfig::new`] defaults.

use crate::controllers::{Controller, Thm1Gains, Thm2Gains, WindowEmbedding};
use crate::engine::{DriveMode, RunConfig};
use crate::error::{Error, Result};
use crate::history::{DelayProfile, DelaySpec};
use crate::image::Corruption;
use crate::model::{ActivationKind, ActivationSpec, MemristiveWeight, NetworkSpec, WeightMatrix};
use crate::quat::{QVector, Quaternion};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

type Q4 = [f64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightDoc {
    Constant(Q4),
    Switching { hat: Q4, check: Q4, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixDoc {
    Dense(Vec<Vec<WeightDoc>>),
    Banded { n: usize, lower: WeightDoc, diag: WeightDoc, upper: WeightDoc },
    ScaledIdentity(Q4),
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationDoc {
    ScaledTanh {
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    PiecewiseAbs {
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayProfileDoc {
    Constant(f64),
    Sinusoid { amplitude: f64, frequency: f64, offset: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaysDoc {
    pub tau: DelayProfileDoc,
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub n: usize,
    pub d: Vec<f64>,
    pub a: MatrixDoc,
    pub b: MatrixDoc,
    pub c: MatrixDoc,
    pub act_f: ActivationDoc,
    pub act_g: ActivationDoc,
    pub act_h: ActivationDoc,
    pub delays: DelaysDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<Q4>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingDoc {
    #[default]
    SignAligned,
    RealChannel,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControllerDoc {
    #[default]
    None,
    Thm1 {
        lambda1: Vec<f64>,
        lambda2: Vec<f64>,
        lambda3: Vec<f64>,
        lambda4: Vec<f64>,
        lambda5: Vec<f64>,
        alpha: f64,
        beta: f64,
        #[serde(default)]
        embedding: EmbeddingDoc,
    },
    Thm2 {
        k1: Vec<f64>,
        k2: Vec<f64>,
        k3: Vec<f64>,
        mu: f64,
        gamma: f64,
        #[serde(default)]
        embedding: EmbeddingDoc,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveModeDoc {
    #[default]
    Free,
    Pinned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    pub t_end: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_sync_tol")]
    pub sync_tol: f64,
    #[serde(default = "yes")]
    pub freeze_on_sync: bool,
    #[serde(default = "yes")]
    pub sliding_lock: bool,
    #[serde(default)]
    pub drive_mode: DriveModeDoc,
    #[serde(default)]
    pub seed: u64,
    pub drive_initial: Vec<Q4>,
    pub response_initial: Vec<Q4>,
}

fn default_h() -> f64 {
    1e-4
}
fn default_stride() -> usize {
    1
}
fn default_sync_tol() -> f64 {
    1e-6
}
fn yes() -> bool {
    true
}
fn default_block() -> usize {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionDoc {
    Missing(f64),
    SaltPepper(f64),
}

impl From<CorruptionDoc> for Corruption {
    fn from(c: CorruptionDoc) -> Self {
        match c {
            CorruptionDoc::Missing(r) => Corruption::Missing(r),
            CorruptionDoc::SaltPepper(d) => Corruption::SaltPepper(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageDoc {
    /// PPM to recover; a synthetic test image is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default = "default_block")]
    pub block_size: usize,
    pub corruption: CorruptionDoc,
    #[serde(default)]
    pub seed: u64,
    pub t_snapshots: Vec<f64>,
}

/// Top-level configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub schema: u32,
    pub network: NetworkDoc,
    #[serde(default)]
    pub controller: ControllerDoc,
    pub run: RunDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageDoc>,
}

fn quat<T: Scalar>(c: &Q4) -> Quaternion<T> {
    Quaternion::from_f64(c[0], c[1], c[2], c[3])
}

fn q4<T: Scalar>(q: &Quaternion<T>) -> Q4 {
    q.to_array().map(|v| v.to_f64_lossy())
}

fn qvec<T: Scalar>(v: &[Q4]) -> QVector<T> {
    v.iter().map(quat).collect()
}

fn lits<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|x| T::lit(*x)).collect()
}

fn f64s<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

impl WeightDoc {
    fn build<T: Scalar>(&self) -> Result<MemristiveWeight<T>> {
        match self {
            WeightDoc::Constant(q) => Ok(MemristiveWeight::constant(quat(q))),
            WeightDoc::Switching { hat, check, threshold } => MemristiveWeight::new(quat(hat), quat(check), T::lit(*threshold)),
        }
    }

    fn of<T: Scalar>(w: &MemristiveWeight<T>) -> Self {
        if w.hat == w.check {
            WeightDoc::Constant(q4(&w.hat))
        } else {
            WeightDoc::Switching { hat: q4(&w.hat), check: q4(&w.check), threshold: w.threshold.to_f64_lossy() }
        }
    }
}

impl MatrixDoc {
    pub fn build<T: Scalar>(&self, n: usize) -> Result<WeightMatrix<T>> {
        let m = match self {
            MatrixDoc::Dense(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::config(format!("dense matrix must be {n} x {n}")));
                }
                let entries = rows.iter().flatten().map(|w| w.build()).collect::<Result<Vec<_>>>()?;
                WeightMatrix::dense(n, entries)?
            }
            MatrixDoc::Banded { n: m, lower, diag, upper } => {
                if *m != n {
                    return Err(Error::config(format!("banded matrix dimension {m} differs from n = {n}")));
                }
                WeightMatrix::OrderBanded { n, lower: lower.build()?, diag: diag.build()?, upper: upper.build()? }
            }
            MatrixDoc::ScaledIdentity(q) => WeightMatrix::scaled_identity(n, quat(q)),
            MatrixDoc::Zero => WeightMatrix::zeros(n),
        };
        Ok(m)
    }

    pub fn of<T: Scalar>(m: &WeightMatrix<T>) -> Self {
        match m {
            WeightMatrix::OrderBanded { n, lower, diag, upper } => {
                MatrixDoc::Banded { n: *n, lower: WeightDoc::of(lower), diag: WeightDoc::of(diag), upper: WeightDoc::of(upper) }
            }
            _ => {
                let n = m.dim();
                MatrixDoc::Dense((0..n).map(|p| (0..n).map(|q| WeightDoc::of(&m.entry(p, q))).collect()).collect())
            }
        }
    }
}

impl ActivationDoc {
    pub fn build<T: Scalar>(&self) -> Result<ActivationSpec<T>> {
        let (kind, lip) = match *self {
            ActivationDoc::ScaledTanh { scale, lipschitz } => (ActivationKind::ScaledTanh(T::lit(scale)), lipschitz),
            ActivationDoc::PiecewiseAbs { scale, lipschitz } => (ActivationKind::PiecewiseAbs(T::lit(scale)), lipschitz),
            ActivationDoc::Identity => (ActivationKind::Identity, None),
        };
        match lip {
            Some(l) => ActivationSpec::with_lipschitz(kind, T::lit(l)),
            None => Ok(ActivationSpec::new(kind)),
        }
    }

    pub fn of<T: Scalar>(a: &ActivationSpec<T>) -> Self {
        let auto = ActivationSpec::new(a.kind).lipschitz == a.lipschitz;
        let lipschitz = (!auto).then(|| a.lipschitz.to_f64_lossy());
        match a.kind {
            ActivationKind::ScaledTanh(s) => ActivationDoc::ScaledTanh { scale: s.to_f64_lossy(), lipschitz },
            ActivationKind::PiecewiseAbs(s) => ActivationDoc::PiecewiseAbs { scale: s.to_f64_lossy(), lipschitz },
            ActivationKind::Identity => ActivationDoc::Identity,
        }
    }
}

impl DelaysDoc {
    pub fn build<T: Scalar>(&self) -> Result<DelaySpec<T>> {
        let tau = match self.tau {
            DelayProfileDoc::Constant(c) => DelayProfile::Constant(T::lit(c)),
            DelayProfileDoc::Sinusoid { amplitude, frequency, offset } => DelayProfile::Sinusoid {
                amplitude: T::lit(amplitude),
                frequency: T::lit(frequency),
                offset: T::lit(offset),
            },
        };
        DelaySpec::new(tau, T::lit(self.pi))
    }

    pub fn of<T: Scalar>(d: &DelaySpec<T>) -> Self {
        let tau = match d.tau {
            DelayProfile::Constant(c) => DelayProfileDoc::Constant(c.to_f64_lossy()),
            DelayProfile::Sinusoid { amplitude, frequency, offset } => DelayProfileDoc::Sinusoid {
                amplitude: amplitude.to_f64_lossy(),
                frequency: frequency.to_f64_lossy(),
                offset: offset.to_f64_lossy(),
            },
        };
        DelaysDoc { tau, pi: d.pi.to_f64_lossy() }
    }
}

impl NetworkDoc {
    pub fn build<T: Scalar>(&self) -> Result<NetworkSpec<T>> {
        let n = self.n;
        let input = match &self.input {
            Some(v) => qvec(v),
            None => QVector::zeros(n),
        };
        let spec = NetworkSpec {
            n,
            d: lits(&self.d),
            a: self.a.build(n)?,
            b: self.b.build(n)?,
            c: self.c.build(n)?,
            act_f: self.act_f.build()?,
            act_g: self.act_g.build()?,
            act_h: self.act_h.build()?,
            delays: self.delays.build()?,
            input,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn of<T: Scalar>(s: &NetworkSpec<T>) -> Self {
        let input = (!s.input.iter().all(|q| *q == Quaternion::zero())).then(|| s.input.iter().map(q4).collect());
        NetworkDoc {
            n: s.n,
            d: f64s(&s.d),
            a: MatrixDoc::of(&s.a),
            b: MatrixDoc::of(&s.b),
            c: MatrixDoc::of(&s.c),
            act_f: ActivationDoc::of(&s.act_f),
            act_g: ActivationDoc::of(&s.act_g),
            act_h: ActivationDoc::of(&s.act_h),
            delays: DelaysDoc::of(&s.delays),
            input,
        }
    }
}

impl From<EmbeddingDoc> for WindowEmbedding {
    fn from(e: EmbeddingDoc) -> Self {
        match e {
            EmbeddingDoc::SignAligned => WindowEmbedding::SignAligned,
            EmbeddingDoc::RealChannel => WindowEmbedding::RealChannel,
        }
    }
}

impl From<WindowEmbedding> for EmbeddingDoc {
    fn from(e: WindowEmbedding) -> Self {
        match e {
            WindowEmbedding::SignAligned => EmbeddingDoc::SignAligned,
            WindowEmbedding::RealChannel => EmbeddingDoc::RealChannel,
        }
    }
}

impl ControllerDoc {
    pub fn build<T: Scalar>(&self) -> Controller<T> {
        match self {
            ControllerDoc::None => Controller::None,
            ControllerDoc::Thm1 { lambda1, lambda2, lambda3, lambda4, lambda5, alpha, beta, embedding } => Controller::Thm1(Thm1Gains {
                lambda1: lits(lambda1),
                lambda2: lits(lambda2),
                lambda3: lits(lambda3),
                lambda4: lits(lambda4),
                lambda5: lits(lambda5),
                alpha: T::lit(*alpha),
                beta: T::lit(*beta),
                embedding: (*embedding).into(),
            }),
            ControllerDoc::Thm2 { k1, k2, k3, mu, gamma, embedding } => Controller::Thm2(Thm2Gains {
                k1: lits(k1),
                k2: lits(k2),
                k3: lits(k3),
                mu: T::lit(*mu),
                gamma: T::lit(*gamma),
                embedding: (*embedding).into(),
            }),
        }
    }

    pub fn of<T: Scalar>(c: &Controller<T>) -> Self {
        match c {
            Controller::None => ControllerDoc::None,
            Controller::Thm1(g) => ControllerDoc::Thm1 {
                lambda1: f64s(&g.lambda1),
                lambda2: f64s(&g.lambda2),
                lambda3: f64s(&g.lambda3),
                lambda4: f64s(&g.lambda4),
                lambda5: f64s(&g.lambda5),
                alpha: g.alpha.to_f64_lossy(),
                beta: g.beta.to_f64_lossy(),
                embedding: g.embedding.into(),
            },
            Controller::Thm2(g) => ControllerDoc::Thm2 {
                k1: f64s(&g.k1),
                k2: f64s(&g.k2),
                k3: f64s(&g.k3),
                mu: g.mu.to_f64_lossy(),
                gamma: g.gamma.to_f64_lossy(),
                embedding: g.embedding.into(),
            },
        }
    }
}

impl ConfigDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ConfigDoc = serde_json::from_str(text)?;
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::config(format!("unsupported schema {} (expected {SCHEMA_VERSION})", doc.schema)));
        }
        Ok(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Builds and validates the run.
    pub fn run_config<T: Scalar>(&self) -> Result<RunConfig<T>> {
        let spec = self.network.build()?;
        let r = &self.run;
        let cfg = RunConfig {
            spec,
            controller: self.controller.build(),
            drive_initial: qvec(&r.drive_initial),
            response_initial: qvec(&r.response_initial),
            t_end: T::lit(r.t_end),
            h: T::lit(r.h),
            record_stride: r.record_stride,
            sync_tol: T::lit(r.sync_tol),
            freeze_on_sync: r.freeze_on_sync,
            sliding_lock: r.sliding_lock,
            drive_mode: match r.drive_mode {
                DriveModeDoc::Free => DriveMode::Free,
                DriveModeDoc::Pinned => DriveMode::Pinned,
            },
            seed: r.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_run<T: Scalar>(cfg: &RunConfig<T>) -> Self {
        ConfigDoc {
            schema: SCHEMA_VERSION,
            network: NetworkDoc::of(&cfg.spec),
            controller: ControllerDoc::of(&cfg.controller),
            run: RunDoc {
                t_end: cfg.t_end.to_f64_lossy(),
                h: cfg.h.to_f64_lossy(),
                record_stride: cfg.record_stride,
                sync_tol: cfg.sync_tol.to_f64_lossy(),
                freeze_on_sync: cfg.freeze_on_sync,
                sliding_lock: cfg.sliding_lock,
                drive_mode: match cfg.drive_mode {
                    DriveMode::Free => DriveModeDoc::Free,
                    DriveMode::Pinned => DriveModeDoc::Pinned,
                },
                seed: cfg.seed,
                drive_initial: cfg.drive_initial.iter().map(q4).collect(),
                response_initial: cfg.response_initial.iter().map(q4).collect(),
            },
            image: None,
        }
    }
}
