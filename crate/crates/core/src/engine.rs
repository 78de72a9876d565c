//! Fixed-step RK4 integration of the coupled drive/response/controller system.
//!
//! The integrated state is augmented with the running integrals `∫₀ᵗ h(x)`, `∫₀ᵗ h(y)` and
//! `∫₀ᵗ ‖e_p‖₁`, so every window `∫_{t−π}^{t}` is a difference of two values of an integrated
//! quantity. Past values come from cubic Hermite interpolation on the stored nodes, whose
//! derivatives are the first RK4 stage. Discontinuous sign feedback is handled with a per-component
//! sliding lock: once an error component crosses zero while the sign gain dominates the remaining
//! dynamics, the response component follows the drive exactly (equivalent control) until the
//! sign gain no longer dominates.

use crate::analysis::{detect_sync_time, settling_t3_t4, thm2_d, thm2_mu1, Branch};
use crate::controllers::{Controller, Thm2Gains};
use crate::error::{Error, Result};
use crate::history::{Interpolation, NodeStore};
use crate::model::NetworkSpec;
use crate::quat::{check_len, QVector, Quaternion};
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriveMode {
    /// The drive system evolves under its own dynamics.
    #[default]
    Free,
    /// The drive is held at its initial state (a stored equilibrium pattern).
    Pinned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub spec: NetworkSpec<T>,
    pub controller: Controller<T>,
    pub drive_initial: QVector<T>,
    pub response_initial: QVector<T>,
    pub t_end: T,
    pub h: T,
    pub record_stride: usize,
    pub sync_tol: T,
    /// Once `V < sync_tol` the response is set onto the drive and follows it exactly.
    pub freeze_on_sync: bool,
    /// Equivalent-control treatment of error components that reach zero.
    pub sliding_lock: bool,
    pub drive_mode: DriveMode,
    /// Only consumed by the corruption generators.
    pub seed: u64,
}

impl<T: Scalar> RunConfig<T> {
    /// Defaults: `h = 1e-4`, every step recorded, freeze at `V < 1e-6`, sliding lock on.
    pub fn new(spec: NetworkSpec<T>, controller: Controller<T>, drive_initial: QVector<T>, response_initial: QVector<T>, t_end: T) -> Self {
        Self {
            spec,
            controller,
            drive_initial,
            response_initial,
            t_end,
            h: T::lit(1e-4),
            record_stride: 1,
            sync_tol: T::lit(1e-6),
            freeze_on_sync: true,
            sliding_lock: true,
            drive_mode: DriveMode::Free,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let n = self.spec.n;
        check_len(n, self.drive_initial.len())?;
        check_len(n, self.response_initial.len())?;
        self.controller.validate(n)?;
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(Error::config("step h must be positive"));
        }
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(Error::config("horizon t_end must be positive"));
        }
        if self.record_stride == 0 {
            return Err(Error::config("record_stride must be at least 1"));
        }
        if let Some(scale) = self.spec.delays.min_positive_scale() {
            if self.h > scale / T::lit(10.0) * (T::one() + T::lit(1e-9)) {
                return Err(Error::config(format!(
                    "step h = {} exceeds one tenth of the smallest delay {}",
                    self.h, scale
                )));
            }
        }
        if self.spec.delays.tau.inf() == T::zero() && self.spec.delays.tau.sup() > T::zero() {
            return Err(Error::config("a time-varying delay must stay bounded away from zero"));
        }
        if !self.drive_initial.is_finite() || !self.response_initial.is_finite() {
            return Err(Error::config("initial data must be finite"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round().to_usize().unwrap_or(0).max(1)
    }
}

/// Sampled trajectory of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub times: Vec<T>,
    pub drive: Vec<QVector<T>>,
    pub response: Vec<QVector<T>>,
    pub error: Vec<QVector<T>>,
    pub v: Vec<T>,
    pub controller_norm: Vec<T>,
    /// Time at which the run froze onto the synchronized manifold.
    pub frozen_at: Option<T>,
    /// First node at which the right-hand side stopped being smooth (sign change of an error
    /// component, memristive switch, exponent switch, lock, or a delay leaving the initial interval).
    pub first_nonsmooth: Option<T>,
}

impl<T: Scalar> TrajectoryRecord<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `(t, V(t))` with `V = ‖e‖₁`.
    pub fn lyapunov_trace(&self) -> Vec<(T, T)> {
        self.times.iter().copied().zip(self.error.iter().map(|e| e.one_norm())).collect()
    }

    pub fn sync_time(&self, tol: T) -> Option<T> {
        detect_sync_time(&self.times, &self.v, tol)
    }

    /// Linear lookup of `V` at a recorded time (nearest sample).
    pub fn v_at(&self, t: T) -> T {
        let k = self.times.partition_point(|s| *s < t).min(self.times.len() - 1);
        let k = if k > 0 && (t - self.times[k - 1]).abs() < (self.times[k] - t).abs() { k - 1 } else { k };
        self.v[k]
    }

    /// Writes `t,V,u_norm` then eight columns per neuron (drive w,x,y,z then response w,x,y,z).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.drive.first().map(|d| d.len()).unwrap_or(0);
        let mut header = String::from("t,V,u_norm");
        for p in 1..=n {
            for side in ["x", "y"] {
                for c in ["w", "i", "j", "k"] {
                    header.push_str(&format!(",{side}{p}_{c}"));
                }
            }
        }
        writeln!(w, "{header}")?;
        for k in 0..self.len() {
            let mut line = format!("{},{},{}", sci(self.times[k]), sci(self.v[k]), sci(self.controller_norm[k]));
            for p in 0..n {
                for q in [self.drive[k][p], self.response[k][p]] {
                    for c in q.to_array() {
                        line.push(',');
                        line.push_str(&sci(c));
                    }
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// 17 significant digits.
pub(crate) fn sci<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

#[derive(Debug, Clone)]
struct Eval<T> {
    deriv: Vec<T>,
    /// Nominal error drift excluding the sign feedback, per error component.
    drift: Vec<T>,
    /// Magnitude of the sign feedback gain per neuron (`−gain_p`).
    sign_gain: Vec<T>,
    control: Vec<Quaternion<T>>,
}

/// Stepper over the augmented state `[x, ∫h(x), y, ∫h(y), ∫‖e_p‖₁]`.
pub struct Integrator<T: Scalar> {
    cfg: RunConfig<T>,
    n: usize,
    state: Vec<T>,
    step: usize,
    t: T,
    nodes: NodeStore<T>,
    locked: Vec<bool>,
    prev_sign: Vec<i8>,
    frozen_at: Option<T>,
    current: Eval<T>,
    thresholds: Vec<T>,
    prev_signature: Vec<bool>,
    prev_exponent_side: i8,
    first_nonsmooth: Option<T>,
    h_drive0: Vec<Quaternion<T>>,
    h_resp0: Vec<Quaternion<T>>,
    e0_norms: Vec<T>,
}

impl<T: Scalar> Integrator<T> {
    pub fn new(cfg: RunConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.spec.n;
        let mut state = vec![T::zero(); 17 * n];
        for p in 0..n {
            state[4 * p..4 * p + 4].copy_from_slice(&cfg.drive_initial[p].to_array());
            state[8 * n + 4 * p..8 * n + 4 * p + 4].copy_from_slice(&cfg.response_initial[p].to_array());
        }
        let h_drive0 = cfg.spec.act_h.eval_vec(&cfg.drive_initial);
        let h_resp0 = cfg.spec.act_h.eval_vec(&cfg.response_initial);
        let e0 = cfg.response_initial.try_sub(&cfg.drive_initial)?;
        let e0_norms = e0.iter().map(|q| q.one_norm()).collect();
        let mut thresholds: Vec<T> = Vec::new();
        for m in [&cfg.spec.a, &cfg.spec.b, &cfg.spec.c] {
            for r in m.switching_thresholds() {
                if !thresholds.contains(&r) {
                    thresholds.push(r);
                }
            }
        }
        let mut it = Self {
            n,
            state,
            step: 0,
            t: T::zero(),
            nodes: NodeStore::new(17 * n, true),
            locked: vec![false; 4 * n],
            prev_sign: vec![0; 4 * n],
            frozen_at: None,
            current: Eval { deriv: Vec::new(), drift: Vec::new(), sign_gain: Vec::new(), control: Vec::new() },
            thresholds,
            prev_signature: Vec::new(),
            prev_exponent_side: 0,
            first_nonsmooth: None,
            h_drive0,
            h_resp0,
            e0_norms,
            cfg,
        };
        it.prev_signature = it.signature();
        it.prev_exponent_side = it.exponent_side();
        it.prev_sign = it.error_signs();
        it.settle_node()?;
        Ok(it)
    }

    pub fn config(&self) -> &RunConfig<T> {
        &self.cfg
    }

    pub fn time(&self) -> T {
        self.t
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn frozen_at(&self) -> Option<T> {
        self.frozen_at
    }

    pub fn first_nonsmooth(&self) -> Option<T> {
        self.first_nonsmooth
    }

    fn block(&self, offset: usize) -> QVector<T> {
        self.state[offset..offset + 4 * self.n]
            .chunks_exact(4)
            .map(|c| Quaternion::new(c[0], c[1], c[2], c[3]))
            .collect()
    }

    pub fn drive(&self) -> QVector<T> {
        self.block(0)
    }

    pub fn response(&self) -> QVector<T> {
        self.block(8 * self.n)
    }

    pub fn error(&self) -> QVector<T> {
        self.response().try_sub(&self.drive()).expect("equal blocks")
    }

    /// `V = ‖y − x‖₁` at the current node.
    pub fn lyapunov(&self) -> T {
        let n4 = 4 * self.n;
        (0..n4).fold(T::zero(), |s, c| s + (self.state[2 * n4 + c] - self.state[c]).abs())
    }

    /// One-norm of the control applied at the current node.
    pub fn control_norm(&self) -> T {
        crate::quat::one_norm(&self.current.control)
    }

    fn controlled(&self) -> bool {
        !matches!(self.cfg.controller, Controller::None)
    }

    fn error_signs(&self) -> Vec<i8> {
        let n4 = 4 * self.n;
        (0..n4)
            .map(|c| {
                let e = self.state[2 * n4 + c] - self.state[c];
                if e > T::zero() {
                    1
                } else if e < T::zero() {
                    -1
                } else {
                    0
                }
            })
            .collect()
    }

    fn signature(&self) -> Vec<bool> {
        let (x, y) = (self.drive(), self.response());
        let mut sig = Vec::with_capacity(2 * self.n * self.thresholds.len());
        for r in &self.thresholds {
            for p in 0..self.n {
                sig.push(x[p].modulus() <= *r);
                sig.push(y[p].modulus() <= *r);
            }
        }
        sig
    }

    fn exponent_side(&self) -> i8 {
        match &self.cfg.controller {
            Controller::Thm2(_) => {
                let v = self.lyapunov();
                if v > T::one() {
                    1
                } else if v < T::one() {
                    -1
                } else {
                    0
                }
            }
            _ => 0,
        }
    }

    /// Values of the `len` columns at `offset` at a past time `s ≤ t_n`.
    fn past(&self, s: T, offset: usize, len: usize, out: &mut [T]) -> Result<()> {
        let n = self.n;
        if s <= T::zero() {
            let fill_quats = |src: &[Quaternion<T>], scale: Option<T>, out: &mut [T]| {
                for (p, q) in src.iter().enumerate() {
                    let q = scale.map_or(*q, |k| q.scale(k));
                    out[4 * p..4 * p + 4].copy_from_slice(&q.to_array());
                }
            };
            match offset / (4 * n) {
                0 => fill_quats(&self.cfg.drive_initial, None, out),
                1 => fill_quats(&self.h_drive0, Some(s), out),
                2 => fill_quats(&self.cfg.response_initial, None, out),
                3 => fill_quats(&self.h_resp0, Some(s), out),
                _ => {
                    for (o, e) in out.iter_mut().zip(&self.e0_norms) {
                        *o = *e * s;
                    }
                }
            }
            debug_assert_eq!(out.len(), len);
            return Ok(());
        }
        self.nodes.eval_range_into(s, Interpolation::CubicHermite, offset, out)
    }

    fn eval(&self, t: T, s: &[T]) -> Result<Eval<T>> {
        let n = self.n;
        let n4 = 4 * n;
        let spec = &self.cfg.spec;
        let quats = |v: &[T]| -> Vec<Quaternion<T>> { v.chunks_exact(4).map(|c| Quaternion::new(c[0], c[1], c[2], c[3])).collect() };
        let x = quats(&s[0..n4]);
        let zx = quats(&s[n4..2 * n4]);
        let y = quats(&s[2 * n4..3 * n4]);
        let zy = quats(&s[3 * n4..4 * n4]);
        let w = &s[4 * n4..4 * n4 + n];

        let tau = spec.delays.tau.eval(t);
        let (x_del, y_del) = if tau == T::zero() {
            (x.clone(), y.clone())
        } else {
            let mut buf = vec![T::zero(); n4];
            self.past(t - tau, 0, n4, &mut buf)?;
            let xd = quats(&buf);
            self.past(t - tau, 2 * n4, n4, &mut buf)?;
            (xd, quats(&buf))
        };
        let pi = spec.delays.pi;
        let (win_x, win_y, windows) = if pi > T::zero() {
            let mut buf = vec![T::zero(); n4];
            self.past(t - pi, n4, n4, &mut buf)?;
            let wx: Vec<_> = zx.iter().zip(quats(&buf)).map(|(a, b)| *a - b).collect();
            self.past(t - pi, 3 * n4, n4, &mut buf)?;
            let wy: Vec<_> = zy.iter().zip(quats(&buf)).map(|(a, b)| *a - b).collect();
            let mut wb = vec![T::zero(); n];
            self.past(t - pi, 4 * n4, n, &mut wb)?;
            let ws: Vec<T> = w.iter().zip(&wb).map(|(a, b)| *a - *b).collect();
            (wx, wy, ws)
        } else {
            (vec![Quaternion::zero(); n], vec![Quaternion::zero(); n], vec![T::zero(); n])
        };

        let mut fx = vec![Quaternion::zero(); n];
        if self.cfg.drive_mode == DriveMode::Free {
            spec.rhs_with(&x, &x_del, &win_x, &mut fx);
        }
        let mut fy = vec![Quaternion::zero(); n];
        spec.rhs_with(&y, &y_del, &win_y, &mut fy);

        let e: Vec<_> = y.iter().zip(&x).map(|(a, b)| *a - *b).collect();
        let e_del: Vec<_> = y_del.iter().zip(&x_del).map(|(a, b)| *a - *b).collect();
        let split = self.cfg.controller.split(&e, &e_del, &windows);
        let mut control = split.assemble(&e).into_inner();

        let mut drift = vec![T::zero(); n4];
        let mut sign_gain = vec![T::zero(); n];
        for p in 0..n {
            sign_gain[p] = -split.gain[p];
            let r = (fy[p] + split.smooth[p] - fx[p]).to_array();
            drift[4 * p..4 * p + 4].copy_from_slice(&r);
        }

        let mut deriv = vec![T::zero(); 17 * n];
        for p in 0..n {
            let mut dy = (fy[p] + control[p]).to_array();
            let dx = fx[p].to_array();
            let mut u = control[p].to_array();
            for c in 0..4 {
                if self.locked[4 * p + c] {
                    dy[c] = dx[c];
                    u[c] = dx[c] - fy[p].to_array()[c];
                }
            }
            control[p] = Quaternion::from(u);
            deriv[4 * p..4 * p + 4].copy_from_slice(&dx);
            deriv[2 * n4 + 4 * p..2 * n4 + 4 * p + 4].copy_from_slice(&dy);
            deriv[n4 + 4 * p..n4 + 4 * p + 4].copy_from_slice(&spec.act_h.eval(x[p]).to_array());
            deriv[3 * n4 + 4 * p..3 * n4 + 4 * p + 4].copy_from_slice(&spec.act_h.eval(y[p]).to_array());
            deriv[4 * n4 + p] = e[p].one_norm();
        }
        Ok(Eval { deriv, drift, sign_gain, control })
    }

    fn mark_nonsmooth(&mut self) {
        if self.first_nonsmooth.is_none() {
            self.first_nonsmooth = Some(self.t);
        }
    }

    /// Applies freeze/lock decisions at the current node, evaluates its derivative and stores it.
    fn settle_node(&mut self) -> Result<()> {
        let n4 = 4 * self.n;
        let controlled = self.controlled();
        if controlled && self.frozen_at.is_none() && self.cfg.freeze_on_sync && self.lyapunov() < self.cfg.sync_tol {
            let (x, rest) = self.state.split_at_mut(2 * n4);
            rest[..n4].copy_from_slice(&x[..n4]);
            self.locked.iter_mut().for_each(|l| *l = true);
            self.frozen_at = Some(self.t);
            self.mark_nonsmooth();
        }
        let mut ev = self.eval(self.t, &self.state)?;
        if controlled && self.cfg.sliding_lock && self.frozen_at.is_none() {
            let mut changed = false;
            for c in 0..n4 {
                if self.locked[c] && ev.drift[c].abs() > ev.sign_gain[c / 4] {
                    self.locked[c] = false;
                    changed = true;
                }
            }
            let signs = self.error_signs();
            let candidates: Vec<usize> = (0..n4)
                .filter(|&c| !self.locked[c] && (signs[c] == 0 || (self.prev_sign[c] != 0 && signs[c] != self.prev_sign[c])))
                .collect();
            if !candidates.is_empty() {
                let saved: Vec<T> = candidates.iter().map(|&c| self.state[2 * n4 + c]).collect();
                for &c in &candidates {
                    self.state[2 * n4 + c] = self.state[c];
                }
                let probe = self.eval(self.t, &self.state)?;
                for (&c, old) in candidates.iter().zip(saved) {
                    if probe.drift[c].abs() <= probe.sign_gain[c / 4] {
                        self.locked[c] = true;
                    } else {
                        self.state[2 * n4 + c] = old;
                    }
                }
                changed = true;
            }
            if changed {
                self.mark_nonsmooth();
                ev = self.eval(self.t, &self.state)?;
            }
        }
        let signs = self.error_signs();
        if controlled && self.step > 0 && signs.iter().zip(&self.prev_sign).any(|(a, b)| a != b) {
            self.mark_nonsmooth();
        }
        self.prev_sign = signs;
        let sig = self.signature();
        if sig != self.prev_signature {
            self.mark_nonsmooth();
            self.prev_signature = sig;
        }
        let side = self.exponent_side();
        if side != self.prev_exponent_side {
            self.mark_nonsmooth();
            self.prev_exponent_side = side;
        }
        self.nodes.push(self.t, &self.state, Some(&ev.deriv))?;
        self.current = ev;
        Ok(())
    }

    /// Advances one RK4 step.
    pub fn advance(&mut self) -> Result<()> {
        let h = self.cfg.h;
        let half = h * T::lit(0.5);
        let t0 = self.t;
        let k1 = self.current.deriv.clone();
        let stage = |base: &[T], k: &[T], a: T| -> Vec<T> { base.iter().zip(k).map(|(b, d)| *b + a * *d).collect() };
        let k2 = self.eval(t0 + half, &stage(&self.state, &k1, half))?.deriv;
        let k3 = self.eval(t0 + half, &stage(&self.state, &k2, half))?.deriv;
        let k4 = self.eval(t0 + h, &stage(&self.state, &k3, h))?.deriv;
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        for i in 0..self.state.len() {
            self.state[i] += sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]);
        }
        self.step += 1;
        self.t = T::from_usize_lossy(self.step) * h;
        if self.state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: self.t.to_f64_lossy() });
        }
        let delays = self.cfg.spec.delays;
        let tau0 = t0 - delays.tau.eval(t0);
        let tau1 = self.t - delays.tau.eval(self.t);
        let crosses = |a: T, b: T| a <= T::zero() && b > T::zero();
        if crosses(tau0, tau1) || (delays.pi > T::zero() && crosses(t0 - delays.pi, self.t - delays.pi)) {
            self.mark_nonsmooth();
        }
        self.settle_node()?;
        self.nodes.prune_before(self.t - delays.tau_max() - h);
        Ok(())
    }
}

/// Integrates the configured run and records every `record_stride`-th node plus the last one.
pub fn integrate<T: Scalar>(cfg: &RunConfig<T>) -> Result<TrajectoryRecord<T>> {
    let mut it = Integrator::new(cfg.clone())?;
    let steps = cfg.steps();
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        drive: Vec::new(),
        response: Vec::new(),
        error: Vec::new(),
        v: Vec::new(),
        controller_norm: Vec::new(),
        frozen_at: None,
        first_nonsmooth: None,
    };
    let push = |it: &Integrator<T>, rec: &mut TrajectoryRecord<T>| {
        let (x, y) = (it.drive(), it.response());
        let e = y.try_sub(&x).expect("equal blocks");
        rec.times.push(it.time());
        rec.v.push(e.one_norm());
        rec.error.push(e);
        rec.drive.push(x);
        rec.response.push(y);
        rec.controller_norm.push(it.control_norm());
    };
    push(&it, &mut rec);
    for k in 1..=steps {
        it.advance()?;
        if k % cfg.record_stride == 0 || k == steps {
            push(&it, &mut rec);
        }
    }
    rec.frozen_at = it.frozen_at();
    rec.first_nonsmooth = it.first_nonsmooth();
    Ok(rec)
}

/// Gain swept by [`sweep_thm2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    K11,
    Mu,
    Gamma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::K11 => "k11",
            SweepParam::Mu => "mu",
            SweepParam::Gamma => "gamma",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "k11" => Ok(SweepParam::K11),
            "mu" => Ok(SweepParam::Mu),
            "gamma" => Ok(SweepParam::Gamma),
            other => Err(Error::config(format!("unknown sweep parameter `{other}` (expected k11, mu or gamma)"))),
        }
    }

    fn apply<T: Scalar>(self, g: &mut Thm2Gains<T>, value: T) {
        match self {
            SweepParam::K11 => g.k1[0] = value,
            SweepParam::Mu => g.mu = value,
            SweepParam::Gamma => g.gamma = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub param: T,
    pub d: T,
    pub mu1: T,
    pub t3: Option<T>,
    pub t4: Option<T>,
    pub branch: Option<Branch>,
    pub t_sync: Option<T>,
}

/// Settling-time table over a grid of one switched-exponent gain.
///
/// With `empirical = Some(tol)` each grid point is also simulated from `cfg` (whose controller must
/// be the switched-exponent one) and the detected synchronization time is reported. Points run in
/// parallel; rows keep grid order.
pub fn sweep_thm2<T: Scalar>(cfg: &RunConfig<T>, param: SweepParam, grid: &[T], empirical: Option<T>) -> Result<Vec<SweepRow<T>>> {
    let base = match &cfg.controller {
        Controller::Thm2(g) => g.clone(),
        _ => return Err(Error::config("sweeps need the switched-exponent controller")),
    };
    grid.par_iter()
        .map(|&value| {
            let mut g = base.clone();
            param.apply(&mut g, value);
            let d = thm2_d(&cfg.spec, &g.k1);
            let mu1 = thm2_mu1(g.mu, g.gamma, cfg.spec.n);
            let est = settling_t3_t4(d, g.mu, mu1, g.gamma).ok();
            let t_sync = match empirical {
                Some(tol) => {
                    let mut run = cfg.clone();
                    run.controller = Controller::Thm2(g);
                    integrate(&run)?.sync_time(tol)
                }
                None => None,
            };
            Ok(SweepRow {
                param: value,
                d,
                mu1,
                t3: est.map(|e| e.0),
                t4: est.map(|e| e.1),
                branch: est.map(|e| e.2),
                t_sync,
            })
        })
        .collect()
}

/// Header `<param>,d,mu1,T3,T4,t_sync_empirical`; missing values are left empty.
pub fn write_sweep_csv<T: Scalar, W: Write>(rows: &[SweepRow<T>], param: SweepParam, mut w: W) -> Result<()> {
    writeln!(w, "{},d,mu1,T3,T4,t_sync_empirical", param.name())?;
    let opt = |v: Option<T>| v.map(sci).unwrap_or_default();
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", sci(r.param), sci(r.d), sci(r.mu1), opt(r.t3), opt(r.t4), opt(r.t_sync))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn ex1(controller: bool, t_end: f64) -> RunConfig<f64> {
        let ex = presets::example1::<f64>();
        let c = if controller { Controller::Thm1(ex.gains.clone()) } else { Controller::None };
        RunConfig::new(ex.spec, c, ex.drive_initial, ex.response_initial, t_end)
    }

    #[test]
    fn identical_initial_data_stay_synchronized() {
        let ex = presets::example1::<f64>();
        let mut cfg = RunConfig::new(ex.spec, Controller::None, ex.drive_initial.clone(), ex.drive_initial, 1.0);
        cfg.h = 1e-3;
        let rec = integrate(&cfg).unwrap();
        assert!(rec.v.iter().all(|v| *v < 1e-12));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ex1(true, 0.1);
        cfg.h = 0.02;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let mut cfg = ex1(true, 0.1);
        cfg.record_stride = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ex1(true, 0.1);
        cfg.t_end = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn records_follow_stride() {
        let mut cfg = ex1(true, 0.01);
        cfg.record_stride = 10;
        let rec = integrate(&cfg).unwrap();
        assert_eq!(rec.len(), 11);
        for (k, t) in rec.times.iter().enumerate() {
            assert!((t - k as f64 * 1e-3).abs() < 1e-15);
        }
        for (v, e) in rec.v.iter().zip(&rec.error) {
            assert_eq!(*v, e.one_norm());
        }
        assert!((rec.v[0] - 12.4).abs() < 1e-12);
    }

    #[test]
    fn deterministic_runs() {
        let cfg = ex1(true, 0.05);
        assert_eq!(integrate(&cfg).unwrap(), integrate(&cfg).unwrap());
    }

    #[test]
    fn frozen_state_is_invariant() {
        let cfg = ex1(true, 0.6);
        let rec = integrate(&cfg).unwrap();
        let frozen = rec.frozen_at.expect("run reaches the freeze tolerance");
        for (t, v) in rec.times.iter().zip(&rec.v) {
            if *t >= frozen {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn trajectory_csv_layout() {
        let mut cfg = ex1(true, 0.002);
        cfg.record_stride = 10;
        let rec = integrate(&cfg).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 3 + 16);
        assert!(header.starts_with("t,V,u_norm,x1_w"));
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 19);
        let cells: Vec<f64> = first.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[0], 0.0);
        assert!((cells[1] - 12.4).abs() < 1e-12, "{first}");
        assert_eq!(&cells[3..7], &[1.5, 2.0, -0.6, 0.8]);
    }

    #[test]
    fn sweep_matches_direct_evaluation() {
        let ex = presets::example1::<f64>();
        let g = presets::example2_gains(40.0, 130.0, 40.0);
        let cfg = RunConfig::new(ex.spec.clone(), Controller::Thm2(g.clone()), ex.drive_initial, ex.response_initial, 0.1);
        let rows = sweep_thm2(&cfg, SweepParam::K11, &[40.0], None).unwrap();
        assert_eq!(rows.len(), 1);
        let (t3, t4, _) = settling_t3_t4(-5.1, 40.0, 5.0, 1.5).unwrap();
        assert!((rows[0].t3.unwrap() - t3).abs() < 1e-12);
        assert!((rows[0].t4.unwrap() - t4).abs() < 1e-12);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, SweepParam::K11, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("k11,d,mu1,T3,T4,t_sync_empirical\n"));
        assert!(sweep_thm2(&ex1(true, 0.1), SweepParam::Mu, &[1.0], None).is_err());
    }
}
