//! Memristive quaternion network: switching weights, activations and drive/response right-hand sides.

use crate::error::{Error, Result};
use crate::history::{DelaySpec, HistoryBuffer};
use crate::quat::{check_len, QVector, Quaternion};
use crate::scalar::Scalar;

/// State-dependent connection weight: `hat` while `|x_p| ≤ threshold`, `check` beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristiveWeight<T> {
    pub hat: Quaternion<T>,
    pub check: Quaternion<T>,
    pub threshold: T,
}

impl<T: Scalar> MemristiveWeight<T> {
    pub fn new(hat: Quaternion<T>, check: Quaternion<T>, threshold: T) -> Result<Self> {
        if !(threshold > T::zero()) {
            return Err(Error::config("memristive threshold must be positive"));
        }
        Ok(Self { hat, check, threshold })
    }

    /// A weight that never switches.
    pub fn constant(q: Quaternion<T>) -> Self {
        Self { hat: q, check: q, threshold: T::one() }
    }

    /// Selection from the state of the receiving neuron; the boundary picks `hat`.
    #[inline]
    pub fn select(&self, x: Quaternion<T>) -> Quaternion<T> {
        if x.modulus() <= self.threshold {
            self.hat
        } else {
            self.check
        }
    }

    /// `max(‖hat‖₁, ‖check‖₁)`.
    pub fn bound(&self) -> T {
        self.hat.one_norm().max(self.check.one_norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind<T> {
    /// `scale·tanh(u)` per component.
    ScaledTanh(T),
    /// `scale·(|u + 2| − |u + 1|)` per component.
    PiecewiseAbs(T),
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationSpec<T> {
    pub kind: ActivationKind<T>,
    pub lipschitz: T,
}

impl<T: Scalar> ActivationSpec<T> {
    /// Uses the exact component-wise Lipschitz constant of `kind`.
    pub fn new(kind: ActivationKind<T>) -> Self {
        let lipschitz = match kind {
            ActivationKind::ScaledTanh(s) => s.abs(),
            ActivationKind::PiecewiseAbs(s) => T::lit(2.0) * s.abs(),
            ActivationKind::Identity => T::one(),
        };
        Self { kind, lipschitz }
    }

    pub fn with_lipschitz(kind: ActivationKind<T>, lipschitz: T) -> Result<Self> {
        if !(lipschitz > T::zero()) {
            return Err(Error::config("activation Lipschitz constant must be positive"));
        }
        Ok(Self { kind, lipschitz })
    }

    #[inline]
    pub fn scalar(&self, u: T) -> T {
        match self.kind {
            ActivationKind::ScaledTanh(s) => s * u.tanh(),
            ActivationKind::PiecewiseAbs(s) => s * ((u + T::lit(2.0)).abs() - (u + T::one()).abs()),
            ActivationKind::Identity => u,
        }
    }

    #[inline]
    pub fn eval(&self, q: Quaternion<T>) -> Quaternion<T> {
        q.map(|u| self.scalar(u))
    }

    pub fn eval_vec(&self, v: &[Quaternion<T>]) -> Vec<Quaternion<T>> {
        v.iter().map(|q| self.eval(*q)).collect()
    }
}

/// `n × n` matrix of memristive weights.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightMatrix<T> {
    /// Row-major entries `w[p·n + q]`.
    Dense { n: usize, entries: Vec<MemristiveWeight<T>> },
    /// Entries depend only on the order of `q` relative to `p`; applied in `O(n)`.
    OrderBanded {
        n: usize,
        lower: MemristiveWeight<T>,
        diag: MemristiveWeight<T>,
        upper: MemristiveWeight<T>,
    },
}

impl<T: Scalar> WeightMatrix<T> {
    pub fn dense(n: usize, entries: Vec<MemristiveWeight<T>>) -> Result<Self> {
        check_len(n * n, entries.len())?;
        Ok(WeightMatrix::Dense { n, entries })
    }

    pub fn zeros(n: usize) -> Self {
        WeightMatrix::Dense { n, entries: vec![MemristiveWeight::constant(Quaternion::zero()); n * n] }
    }

    /// Constant diagonal matrix `c·I`.
    pub fn scaled_identity(n: usize, c: Quaternion<T>) -> Self {
        let zero = MemristiveWeight::constant(Quaternion::zero());
        WeightMatrix::OrderBanded { n, lower: zero, diag: MemristiveWeight::constant(c), upper: zero }
    }

    pub fn dim(&self) -> usize {
        match self {
            WeightMatrix::Dense { n, .. } | WeightMatrix::OrderBanded { n, .. } => *n,
        }
    }

    pub fn entry(&self, p: usize, q: usize) -> MemristiveWeight<T> {
        match self {
            WeightMatrix::Dense { n, entries } => entries[p * n + q],
            WeightMatrix::OrderBanded { lower, diag, upper, .. } => match q.cmp(&p) {
                std::cmp::Ordering::Less => *lower,
                std::cmp::Ordering::Equal => *diag,
                std::cmp::Ordering::Greater => *upper,
            },
        }
    }

    /// Thresholds of the entries whose two levels differ.
    pub fn switching_thresholds(&self) -> Vec<T> {
        let entries: Vec<MemristiveWeight<T>> = match self {
            WeightMatrix::Dense { entries, .. } => entries.clone(),
            WeightMatrix::OrderBanded { lower, diag, upper, .. } => vec![*lower, *diag, *upper],
        };
        let mut out: Vec<T> = Vec::new();
        for w in entries {
            if w.hat != w.check && !out.contains(&w.threshold) {
                out.push(w.threshold);
            }
        }
        out
    }

    /// Bound matrix `w⁺_pq`.
    pub fn bounds(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        (0..n).map(|p| (0..n).map(|q| self.entry(p, q).bound()).collect()).collect()
    }

    /// `Σ_q w⁺_qp` for every `p`.
    pub fn column_bound_sums(&self) -> Vec<T> {
        let n = self.dim();
        (0..n).map(|p| (0..n).map(|q| self.entry(q, p).bound()).sum()).collect()
    }

    /// `Σ_q w⁺_pq` for every `p`.
    pub fn row_bound_sums(&self) -> Vec<T> {
        let n = self.dim();
        (0..n).map(|p| (0..n).map(|q| self.entry(p, q).bound()).sum()).collect()
    }

    /// `out_p += Σ_q w_pq(sel_p)·v_q`, weights on the left.
    pub fn apply_add(&self, sel: &[Quaternion<T>], v: &[Quaternion<T>], out: &mut [Quaternion<T>]) {
        match self {
            WeightMatrix::Dense { n, entries } => {
                for p in 0..*n {
                    let row = &entries[p * n..(p + 1) * n];
                    let mut acc = Quaternion::zero();
                    for (w, vq) in row.iter().zip(v) {
                        acc += w.select(sel[p]) * *vq;
                    }
                    out[p] += acc;
                }
            }
            WeightMatrix::OrderBanded { n, lower, diag, upper } => {
                let total = v.iter().fold(Quaternion::zero(), |s, q| s + *q);
                let mut before = Quaternion::zero();
                for p in 0..*n {
                    let after = total - before - v[p];
                    out[p] += lower.select(sel[p]) * before + diag.select(sel[p]) * v[p] + upper.select(sel[p]) * after;
                    before += v[p];
                }
            }
        }
    }
}

/// Full description of the memristive quaternion network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec<T> {
    pub n: usize,
    pub d: Vec<T>,
    pub a: WeightMatrix<T>,
    pub b: WeightMatrix<T>,
    pub c: WeightMatrix<T>,
    pub act_f: ActivationSpec<T>,
    pub act_g: ActivationSpec<T>,
    pub act_h: ActivationSpec<T>,
    pub delays: DelaySpec<T>,
    pub input: QVector<T>,
}

impl<T: Scalar> NetworkSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::config("network needs at least one neuron"));
        }
        check_len(n, self.d.len())?;
        check_len(n, self.input.len())?;
        for m in [&self.a, &self.b, &self.c] {
            check_len(n, m.dim())?;
        }
        if let Some(p) = self.d.iter().position(|d| !(*d > T::zero())) {
            return Err(Error::config(format!("self-feedback d_{} must be positive", p + 1)));
        }
        for act in [&self.act_f, &self.act_g, &self.act_h] {
            if !(act.lipschitz > T::zero()) {
                return Err(Error::config("activation Lipschitz constants must be positive"));
            }
        }
        self.delays.validate()
    }

    /// Right-hand side given the delayed state `x(t − τ(t))` and the window `∫_{t−π}^{t} h(x(s)) ds`.
    pub fn rhs_with(
        &self,
        x: &[Quaternion<T>],
        delayed: &[Quaternion<T>],
        window: &[Quaternion<T>],
        out: &mut [Quaternion<T>],
    ) {
        for p in 0..self.n {
            out[p] = x[p].scale(-self.d[p]) + self.input[p];
        }
        self.a.apply_add(x, &self.act_f.eval_vec(x), out);
        self.b.apply_add(x, &self.act_g.eval_vec(delayed), out);
        self.c.apply_add(x, window, out);
    }

    /// Drive right-hand side with delays read from `hist` (linear interpolation, trapezoid window).
    pub fn rhs_drive(&self, t: T, x: &QVector<T>, hist: &HistoryBuffer<T>) -> Result<QVector<T>> {
        check_len(self.n, x.len())?;
        check_len(self.n, hist.dim())?;
        let delayed = hist.sample(t - self.delays.tau.eval(t))?;
        let window = hist.distributed_integral(t, self.delays.pi, |q| self.act_h.eval(q))?;
        let mut out = QVector::zeros(self.n);
        self.rhs_with(x, &delayed, &window, &mut out);
        Ok(out)
    }

    /// Response right-hand side: the drive dynamics evaluated on `y` plus the control `u`.
    pub fn rhs_response(&self, t: T, y: &QVector<T>, hist_y: &HistoryBuffer<T>, u: &QVector<T>) -> Result<QVector<T>> {
        check_len(self.n, u.len())?;
        let base = self.rhs_drive(t, y, hist_y)?;
        base.try_add(u)
    }
}

/// `e = y − x`.
pub fn error_state<T: Scalar>(x: &QVector<T>, y: &QVector<T>) -> Result<QVector<T>> {
    y.try_sub(x)
}
