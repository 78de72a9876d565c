//! Past-state storage for the discrete delay `x(t − τ(t))` and the distributed window `∫_{t−π}^{t} h(x(s)) ds`.

use crate::error::{Error, Result};
use crate::quat::{check_len, QVector, Quaternion};
use crate::scalar::Scalar;

/// Time-varying discrete delay `τ(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayProfile<T> {
    Constant(T),
    /// `amplitude·sin(frequency·t) + offset`.
    Sinusoid { amplitude: T, frequency: T, offset: T },
}

impl<T: Scalar> DelayProfile<T> {
    #[inline]
    pub fn eval(&self, t: T) -> T {
        match *self {
            DelayProfile::Constant(c) => c,
            DelayProfile::Sinusoid { amplitude, frequency, offset } => amplitude * (frequency * t).sin() + offset,
        }
    }

    /// Global supremum over all t.
    pub fn sup(&self) -> T {
        match *self {
            DelayProfile::Constant(c) => c,
            DelayProfile::Sinusoid { amplitude, offset, .. } => offset + amplitude.abs(),
        }
    }

    /// Global infimum over all t.
    pub fn inf(&self) -> T {
        match *self {
            DelayProfile::Constant(c) => c,
            DelayProfile::Sinusoid { amplitude, offset, .. } => offset - amplitude.abs(),
        }
    }
}

/// Discrete delay profile plus the distributed window length `π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySpec<T> {
    pub tau: DelayProfile<T>,
    pub pi: T,
}

impl<T: Scalar> DelaySpec<T> {
    pub fn new(tau: DelayProfile<T>, pi: T) -> Result<Self> {
        let spec = Self { tau, pi };
        spec.validate()?;
        Ok(spec)
    }

    /// No delays at all: `τ ≡ 0`, `π = 0`.
    pub fn none() -> Self {
        Self { tau: DelayProfile::Constant(T::zero()), pi: T::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.inf() >= T::zero()) || !self.tau.sup().is_finite() {
            return Err(Error::config("discrete delay must satisfy 0 <= tau(t) < inf"));
        }
        if !(self.pi >= T::zero()) || !self.pi.is_finite() {
            return Err(Error::config("distributed window pi must be finite and >= 0"));
        }
        Ok(())
    }

    /// `τ = max{sup τ(t), π}`, the length of the initial interval.
    pub fn tau_max(&self) -> T {
        self.tau.sup().max(self.pi)
    }

    /// Smallest positive delay scale, used to bound the step size. Zero delays impose no bound.
    pub fn min_positive_scale(&self) -> Option<T> {
        [self.tau.inf(), self.pi].into_iter().filter(|v| *v > T::zero()).reduce(T::min)
    }
}

/// Flat node storage shared by [`HistoryBuffer`] and the integrator.
///
/// Each node holds `width` reals and optionally their time derivatives, which enable cubic
/// Hermite interpolation.
#[derive(Debug, Clone)]
pub(crate) struct NodeStore<T> {
    width: usize,
    head: usize,
    times: Vec<T>,
    values: Vec<T>,
    slopes: Vec<T>,
    has_slopes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    /// Cubic Hermite on stored derivatives; falls back to linear if none were stored.
    CubicHermite,
}

impl<T: Scalar> NodeStore<T> {
    pub(crate) fn new(width: usize, has_slopes: bool) -> Self {
        Self { width, head: 0, times: Vec::new(), values: Vec::new(), slopes: Vec::new(), has_slopes }
    }

    pub(crate) fn len(&self) -> usize {
        self.times.len() - self.head
    }

    pub(crate) fn first_time(&self) -> Option<T> {
        self.times.get(self.head).copied()
    }

    pub(crate) fn last_time(&self) -> Option<T> {
        if self.len() == 0 {
            None
        } else {
            self.times.last().copied()
        }
    }

    pub(crate) fn push(&mut self, t: T, value: &[T], slope: Option<&[T]>) -> Result<()> {
        check_len(self.width, value.len())?;
        if let Some(last) = self.last_time() {
            if !(t > last) {
                return Err(Error::NonMonotonicTime { t: t.to_f64_lossy(), t_max: last.to_f64_lossy() });
            }
        }
        self.times.push(t);
        self.values.extend_from_slice(value);
        if self.has_slopes {
            let slope = slope.ok_or_else(|| Error::config("node store expects derivatives"))?;
            check_len(self.width, slope.len())?;
            self.slopes.extend_from_slice(slope);
        }
        Ok(())
    }

    /// Drops nodes so that the first retained node is the last one at or before `t`.
    pub(crate) fn prune_before(&mut self, t: T) {
        let live = &self.times[self.head..];
        let keep_from = live.partition_point(|s| *s <= t).saturating_sub(1);
        self.head += keep_from;
        if self.head > 1024 && self.head * 2 > self.times.len() {
            let w = self.width;
            self.times.drain(..self.head);
            self.values.drain(..self.head * w);
            if self.has_slopes {
                self.slopes.drain(..self.head * w);
            }
            self.head = 0;
        }
    }

    pub(crate) fn set_first_slope(&mut self, slope: &[T]) -> Result<()> {
        check_len(self.width, slope.len())?;
        if self.has_slopes && self.len() > 0 {
            let k = self.head;
            self.slopes[k * self.width..(k + 1) * self.width].copy_from_slice(slope);
        }
        Ok(())
    }

    fn node(&self, k: usize) -> &[T] {
        &self.values[k * self.width..(k + 1) * self.width]
    }

    fn slope(&self, k: usize) -> &[T] {
        &self.slopes[k * self.width..(k + 1) * self.width]
    }

    /// Evaluates the interpolant at `t` into `out`; exact node times return the node bitwise.
    pub(crate) fn eval_into(&self, t: T, mode: Interpolation, out: &mut [T]) -> Result<()> {
        self.eval_range_into(t, mode, 0, out)
    }

    /// Like [`NodeStore::eval_into`] for the columns `offset..offset + out.len()`.
    pub(crate) fn eval_range_into(&self, t: T, mode: Interpolation, offset: usize, out: &mut [T]) -> Result<()> {
        let (first, last) = match (self.first_time(), self.last_time()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::OutOfRange { t: t.to_f64_lossy(), t_min: f64::NAN, t_max: f64::NAN }),
        };
        if !(t >= first && t <= last) {
            return Err(Error::OutOfRange { t: t.to_f64_lossy(), t_min: first.to_f64_lossy(), t_max: last.to_f64_lossy() });
        }
        let live = &self.times[self.head..];
        let idx = live.partition_point(|s| *s < t);
        let k1 = self.head + idx;
        let cols = offset..offset + out.len();
        if self.times[k1] == t {
            out.copy_from_slice(&self.node(k1)[cols]);
            return Ok(());
        }
        let k0 = k1 - 1;
        let (t0, t1) = (self.times[k0], self.times[k1]);
        let dt = t1 - t0;
        let s = (t - t0) / dt;
        let (v0, v1) = (&self.node(k0)[cols.clone()], &self.node(k1)[cols.clone()]);
        if mode == Interpolation::CubicHermite && self.has_slopes {
            let (m0, m1) = (&self.slope(k0)[cols.clone()], &self.slope(k1)[cols]);
            let s2 = s * s;
            let s3 = s2 * s;
            let two = T::lit(2.0);
            let three = T::lit(3.0);
            let h00 = two * s3 - three * s2 + T::one();
            let h10 = (s3 - two * s2 + s) * dt;
            let h01 = three * s2 - two * s3;
            let h11 = (s3 - s2) * dt;
            for c in 0..out.len() {
                out[c] = h00 * v0[c] + h10 * m0[c] + h01 * v1[c] + h11 * m1[c];
            }
        } else {
            for c in 0..out.len() {
                out[c] = v0[c] + s * (v1[c] - v0[c]);
            }
        }
        Ok(())
    }

    /// Iterates `(time, node)` pairs with `a < time < b`.
    fn interior(&self, a: T, b: T) -> impl Iterator<Item = (T, &[T])> + '_ {
        let live = &self.times[self.head..];
        let lo = self.head + live.partition_point(|s| *s <= a);
        let hi = self.head + live.partition_point(|s| *s < b);
        (lo..hi.max(lo)).map(move |k| (self.times[k], self.node(k)))
    }
}

fn flatten<T: Scalar>(v: &[Quaternion<T>]) -> Vec<T> {
    v.iter().flat_map(|q| q.to_array()).collect()
}

fn unflatten<T: Scalar>(flat: &[T]) -> QVector<T> {
    flat.chunks_exact(4).map(|c| Quaternion::new(c[0], c[1], c[2], c[3])).collect()
}

/// Time-stamped past states with a constant initial function on `[−τ_max, 0]`.
#[derive(Debug, Clone)]
pub struct HistoryBuffer<T> {
    initial: QVector<T>,
    t_min: T,
    interpolation: Interpolation,
    nodes: NodeStore<T>,
}

impl<T: Scalar> HistoryBuffer<T> {
    /// A buffer holding the constant initial function on `[−tau_max, 0]` (node at `t = 0`).
    pub fn new(initial: QVector<T>, tau_max: T) -> Self {
        Self::with_interpolation(initial, tau_max, Interpolation::Linear)
    }

    pub fn with_interpolation(initial: QVector<T>, tau_max: T, interpolation: Interpolation) -> Self {
        let width = 4 * initial.len();
        let mut nodes = NodeStore::new(width, interpolation == Interpolation::CubicHermite);
        let flat = flatten(&initial);
        let zeros = vec![T::zero(); width];
        nodes.push(T::zero(), &flat, Some(&zeros)).expect("first node");
        Self { initial, t_min: -tau_max.abs(), interpolation, nodes }
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn t_min(&self) -> T {
        self.t_min
    }

    pub fn t_max(&self) -> T {
        self.nodes.last_time().unwrap_or(T::zero())
    }

    pub fn initial(&self) -> &QVector<T> {
        &self.initial
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 0
    }

    /// Appends a state at `t > t_max`. Under Hermite interpolation the derivative is required.
    pub fn push(&mut self, t: T, state: &QVector<T>) -> Result<()> {
        self.push_impl(t, state, None)
    }

    pub fn push_with_slope(&mut self, t: T, state: &QVector<T>, slope: &QVector<T>) -> Result<()> {
        self.push_impl(t, state, Some(slope))
    }

    fn push_impl(&mut self, t: T, state: &QVector<T>, slope: Option<&QVector<T>>) -> Result<()> {
        check_len(self.dim(), state.len())?;
        let flat = flatten(state);
        let slope_flat = match slope {
            Some(s) => {
                check_len(self.dim(), s.len())?;
                Some(flatten(s))
            }
            None if self.nodes.has_slopes => Some(vec![T::zero(); flat.len()]),
            None => None,
        };
        if slope.is_none() && self.nodes.has_slopes {
            // Without a derivative the node degrades the neighbouring cells to linear quality at best.
            self.interpolation = Interpolation::Linear;
        }
        self.nodes.push(t, &flat, slope_flat.as_deref())
    }

    /// Right derivative at `t = 0`, used by Hermite interpolation on the first cell.
    pub fn set_origin_slope(&mut self, slope: &QVector<T>) -> Result<()> {
        check_len(self.dim(), slope.len())?;
        self.nodes.set_first_slope(&flatten(slope))
    }

    /// Discards samples that can no longer be reached by a query at or after `t_now`.
    pub fn prune(&mut self, t_now: T, tau_max: T) {
        let horizon = t_now - tau_max;
        if horizon > T::zero() {
            self.nodes.prune_before(horizon);
            self.t_min = self.nodes.first_time().unwrap_or(horizon);
        }
    }

    fn check_range(&self, t: T) -> Result<()> {
        if t >= self.t_min && t <= self.t_max() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                t: t.to_f64_lossy(),
                t_min: self.t_min.to_f64_lossy(),
                t_max: self.t_max().to_f64_lossy(),
            })
        }
    }

    /// State at time `t`: the initial function for `t ≤ 0`, interpolated otherwise.
    pub fn sample(&self, t: T) -> Result<QVector<T>> {
        self.check_range(t)?;
        if t <= T::zero() && self.t_min <= T::zero() {
            return Ok(self.initial.clone());
        }
        let mut out = vec![T::zero(); 4 * self.dim()];
        self.nodes.eval_into(t, self.interpolation, &mut out)?;
        Ok(unflatten(&out))
    }

    /// `∫_{t−π}^{t} act(x(s)) ds` by the composite trapezoid rule on the stored grid.
    ///
    /// End cells are cut at interpolated endpoints; the part of the window inside the initial
    /// interval is integrated exactly since the initial function is constant.
    pub fn distributed_integral(
        &self,
        t: T,
        pi: T,
        act: impl Fn(Quaternion<T>) -> Quaternion<T>,
    ) -> Result<QVector<T>> {
        let n = self.dim();
        if pi <= T::zero() {
            return Ok(QVector::zeros(n));
        }
        let a = t - pi;
        self.check_range(a)?;
        self.check_range(t)?;
        let mut acc = QVector::zeros(n);
        let mut lo = a;
        if a < T::zero() && self.t_min <= T::zero() {
            let len = t.min(T::zero()) - a;
            for (s, x0) in acc.iter_mut().zip(self.initial.iter()) {
                *s += act(*x0).scale(len);
            }
            lo = T::zero();
        }
        if t <= lo {
            return Ok(acc);
        }
        let mut prev_t = lo;
        let mut prev = self.sample(lo)?.iter().map(|q| act(*q)).collect::<Vec<_>>();
        let half = T::lit(0.5);
        let mut add_cell = |t1: T, cur: Vec<Quaternion<T>>, prev_t: &mut T, prev: &mut Vec<Quaternion<T>>| {
            let w = (t1 - *prev_t) * half;
            for ((s, p), c) in acc.iter_mut().zip(prev.iter()).zip(cur.iter()) {
                *s += (*p + *c).scale(w);
            }
            *prev_t = t1;
            *prev = cur;
        };
        for (tn, node) in self.nodes.interior(lo, t) {
            let cur = node.chunks_exact(4).map(|c| act(Quaternion::new(c[0], c[1], c[2], c[3]))).collect();
            add_cell(tn, cur, &mut prev_t, &mut prev);
        }
        let end = self.sample(t)?.iter().map(|q| act(*q)).collect();
        add_cell(t, end, &mut prev_t, &mut prev);
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = Quaternion<f64>;

    fn line(t: f64) -> QVector<f64> {
        QVector::new(vec![Q::new(1.0 + 2.0 * t, -t, 0.5, 3.0 * t), Q::new(-0.5 * t, 0.0, t, 1.0)])
    }

    fn line_buffer(h: f64, t_end: f64) -> HistoryBuffer<f64> {
        let mut buf = HistoryBuffer::new(line(0.0), 0.7);
        let steps = (t_end / h).round() as usize;
        for k in 1..=steps {
            buf.push(k as f64 * h, &line(k as f64 * h)).unwrap();
        }
        buf
    }

    #[test]
    fn constant_history_samples_constant() {
        let c = QVector::new(vec![Q::new(1.5, 2.0, -0.6, 0.8)]);
        let mut buf = HistoryBuffer::new(c.clone(), 0.7);
        buf.push(0.1, &c).unwrap();
        buf.push(0.2, &c).unwrap();
        for t in [-0.7, -0.3, 0.0, 0.05, 0.13, 0.2] {
            assert_eq!(buf.sample(t).unwrap(), c);
        }
    }

    #[test]
    fn nodes_are_returned_bitwise() {
        let buf = line_buffer(0.1, 1.0);
        for k in 0..=10 {
            let t = k as f64 * 0.1;
            assert_eq!(buf.sample(t).unwrap(), line(t));
        }
    }

    #[test]
    fn midpoints_reproduce_a_line() {
        let buf = line_buffer(0.1, 1.0);
        for k in 0..10 {
            let t = (k as f64 + 0.5) * 0.1;
            assert!(buf.sample(t).unwrap().max_abs_diff(&line(t)) < 1e-12);
        }
    }

    #[test]
    fn out_of_range_queries_fail() {
        let buf = line_buffer(0.1, 1.0);
        assert!(matches!(buf.sample(1.01), Err(Error::OutOfRange { .. })));
        assert!(matches!(buf.sample(-0.71), Err(Error::OutOfRange { .. })));
        assert!(buf.distributed_integral(0.2, 1.0, |q| q).is_err());
    }

    #[test]
    fn pushes_must_advance() {
        let mut buf = line_buffer(0.1, 0.3);
        assert!(matches!(buf.push(0.3, &line(0.3)), Err(Error::NonMonotonicTime { .. })));
        assert!(matches!(buf.push(0.4, &QVector::zeros(3)), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn constant_window_integral() {
        let c = QVector::new(vec![Q::new(0.3, -0.2, 0.1, 0.0)]);
        let mut buf = HistoryBuffer::new(c.clone(), 0.7);
        for k in 1..=10 {
            buf.push(k as f64 * 0.05, &c).unwrap();
        }
        let tanh2 = |q: Q| q.map(|v| 2.0 * v.tanh());
        let got = buf.distributed_integral(0.5, 0.4, tanh2).unwrap();
        assert!(got.max_abs_diff(&QVector::new(vec![tanh2(c[0]).scale(0.4)])) < 1e-14);
        let straddle = buf.distributed_integral(0.2, 0.4, tanh2).unwrap();
        assert!(straddle.max_abs_diff(&QVector::new(vec![tanh2(c[0]).scale(0.4)])) < 1e-14);
        assert_eq!(buf.distributed_integral(0.3, 0.0, tanh2).unwrap(), QVector::zeros(1));
    }

    #[test]
    fn trapezoid_is_exact_on_lines() {
        let buf = line_buffer(0.01, 1.0);
        // window [0.333, 0.733] cuts cells at both ends
        let (t, pi) = (0.733, 0.4);
        let got = buf.distributed_integral(t, pi, |q| q).unwrap();
        let expect: QVector<f64> = line(t - pi / 2.0).iter().map(|q| q.scale(pi)).collect();
        assert!(got.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn trapezoid_refinement_is_second_order() {
        let f = |t: f64| QVector::new(vec![Q::new(t.sin(), (2.0 * t).cos(), t * t, (-t).exp())]);
        let integral = |h: f64| {
            let mut buf = HistoryBuffer::new(f(0.0), 0.7);
            let steps = (1.0 / h).round() as usize;
            for k in 1..=steps {
                buf.push(k as f64 * h, &f(k as f64 * h)).unwrap();
            }
            buf.distributed_integral(0.9, 0.4, |q| q).unwrap()
        };
        let (a, b, c) = (integral(0.02), integral(0.01), integral(0.005));
        let order = (a.max_abs_diff(&b) / b.max_abs_diff(&c)).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn window_norm_bounded_by_norm_integral() {
        let f = |t: f64| QVector::new(vec![Q::new(t.sin() - 0.3, (3.0 * t).cos(), -t, 0.2)]);
        let mut buf = HistoryBuffer::new(f(0.0), 0.7);
        let mut norms = HistoryBuffer::new(QVector::new(vec![Q::real(f(0.0).one_norm())]), 0.7);
        for k in 1..=200 {
            let t = k as f64 * 0.005;
            buf.push(t, &f(t)).unwrap();
            norms.push(t, &QVector::new(vec![Q::real(f(t).one_norm())])).unwrap();
        }
        let lhs = buf.distributed_integral(0.8, 0.4, |q| q).unwrap().one_norm();
        let rhs = norms.distributed_integral(0.8, 0.4, |q| q).unwrap()[0].w;
        assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn hermite_is_fourth_order_on_smooth_data() {
        let f = |t: f64| QVector::new(vec![Q::new(t.sin(), (2.0 * t).cos(), t.exp(), 0.0)]);
        let df = |t: f64| QVector::new(vec![Q::new(t.cos(), -2.0 * (2.0 * t).sin(), t.exp(), 0.0)]);
        let err = |h: f64| {
            let mut buf = HistoryBuffer::with_interpolation(f(0.0), 0.7, Interpolation::CubicHermite);
            buf.set_origin_slope(&df(0.0)).unwrap();
            let steps = (1.0 / h).round() as usize;
            for k in 1..=steps {
                let t = k as f64 * h;
                buf.push_with_slope(t, &f(t), &df(t)).unwrap();
            }
            (0..steps)
                .map(|k| {
                    let t = (k as f64 + 0.37) * h;
                    buf.sample(t).unwrap().max_abs_diff(&f(t))
                })
                .fold(0.0, f64::max)
        };
        let order = (err(0.05) / err(0.025)).log2();
        assert!(order > 3.8, "observed order {order}");
    }

    #[test]
    fn prune_keeps_reachable_window() {
        let mut buf = line_buffer(0.001, 2.0);
        buf.prune(2.0, 0.7);
        assert!(buf.t_min() <= 1.3 && buf.t_min() > 1.29);
        assert!(buf.sample(1.3).unwrap().max_abs_diff(&line(1.3)) < 1e-12);
        assert!(buf.sample(1.0).is_err());
    }

    #[test]
    fn delay_bounds() {
        let d = DelaySpec::new(DelayProfile::Sinusoid { amplitude: 0.3f64, frequency: 1.0, offset: 0.4 }, 0.4).unwrap();
        assert!((d.tau_max() - 0.7).abs() < 1e-15);
        assert!((d.min_positive_scale().unwrap() - 0.1).abs() < 1e-15);
        assert!(DelaySpec::new(DelayProfile::Constant(-0.1), 0.4).is_err());
        assert!(DelaySpec::<f64>::none().min_positive_scale().is_none());
    }
}
