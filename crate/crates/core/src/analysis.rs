//! Sufficient-condition checks, settling-time estimates and empirical synchronization detection.

use crate::controllers::{Thm1Gains, Thm2Gains};
use crate::error::{Error, Result};
use crate::model::NetworkSpec;
use crate::scalar::Scalar;
use serde::Serialize;
use std::fmt;

/// Absolute slack accepted on non-strict conditions, so that exactly balanced decimal gains pass.
pub const CONDITION_TOL: f64 = 1e-9;

/// `|d|` below this selects the `d = 0` settling-time branch.
pub const ZERO_BRANCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "<")]
    Less,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
            Relation::Greater => ">",
            Relation::Less => "<",
        })
    }
}

/// One evaluated inequality `lhs (relation) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    /// Roman label of the inequality, e.g. `"(ii)"`.
    pub name: String,
    /// What the left side sums, e.g. `"column"` or `"row"`.
    pub note: String,
    /// 1-based neuron index, absent for network-wide conditions.
    pub neuron: Option<usize>,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub satisfied: bool,
}

impl Condition {
    fn new(name: &str, note: &str, neuron: Option<usize>, lhs: f64, relation: Relation, rhs: f64) -> Self {
        let satisfied = match relation {
            Relation::AtLeast => lhs >= rhs - CONDITION_TOL,
            Relation::AtMost => lhs <= rhs + CONDITION_TOL,
            Relation::Greater => lhs > rhs,
            Relation::Less => lhs < rhs,
        };
        Self { name: name.into(), note: note.into(), neuron, lhs, relation, rhs, satisfied }
    }

    /// `lhs − rhs`.
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let who = self.neuron.map(|p| format!(" p={p}")).unwrap_or_default();
        write!(
            f,
            "{}{} [{}]: {:.6} {} {:.6} -> {}",
            self.name,
            who,
            self.note,
            self.lhs,
            self.relation,
            self.rhs,
            if self.satisfied { "ok" } else { "VIOLATED" }
        )
    }
}

/// Evaluates the power-law controller conditions per neuron with column sums of the weight bounds.
pub fn check_thm1<T: Scalar>(spec: &NetworkSpec<T>, g: &Thm1Gains<T>) -> Result<Vec<Condition>> {
    g.validate()?;
    crate::quat::check_len(spec.n, g.n())?;
    let (ups, rho, iota) = (spec.act_f.lipschitz, spec.act_g.lipschitz, spec.act_h.lipschitz);
    let (ca, cb, cc) = (spec.a.column_bound_sums(), spec.b.column_bound_sums(), spec.c.column_bound_sums());
    let mut out = Vec::with_capacity(4 * spec.n);
    for p in 0..spec.n {
        let who = Some(p + 1);
        let i = spec.d[p] - g.lambda1[p] - ups * ca[p];
        out.push(Condition::new("(i)", "d_p - l1p - ups*sum_q a+_qp", who, i.to_f64_lossy(), Relation::AtLeast, 0.0));
        let ii = rho * cb[p] + g.lambda4[p];
        out.push(Condition::new("(ii)", "rho*sum_q b+_qp + l4p", who, ii.to_f64_lossy(), Relation::AtMost, 0.0));
        let iii = iota * cc[p] + g.lambda5[p];
        out.push(Condition::new("(iii)", "iota*sum_q c+_qp + l5p", who, iii.to_f64_lossy(), Relation::AtMost, 0.0));
        let iv = g.lambda2[p].min(g.lambda3[p]);
        out.push(Condition::new("(iv)", "min(l2p, l3p)", who, iv.to_f64_lossy(), Relation::Greater, 0.0));
    }
    Ok(out)
}

/// Aggregate quantities of the switched-exponent controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Thm2Check<T> {
    pub d: T,
    pub mu1: T,
    pub conditions: Vec<Condition>,
}

/// `d = max_p(−d_p − k₁p + υ Σ_q a⁺_qp)`.
pub fn thm2_d<T: Scalar>(spec: &NetworkSpec<T>, k1: &[T]) -> T {
    let ca = spec.a.column_bound_sums();
    (0..spec.n)
        .map(|p| -spec.d[p] - k1[p] + spec.act_f.lipschitz * ca[p])
        .fold(T::neg_infinity(), T::max)
}

/// `μ₁ = μ·n^(−2γ)`.
pub fn thm2_mu1<T: Scalar>(mu: T, gamma: T, n: usize) -> T {
    mu * T::from_usize_lossy(n).powf(-T::lit(2.0) * gamma)
}

/// Evaluates the switched-exponent conditions: `d < μ₁`, column sums on `B`, row sums on `C`.
pub fn check_thm2<T: Scalar>(spec: &NetworkSpec<T>, g: &Thm2Gains<T>) -> Result<Thm2Check<T>> {
    g.validate()?;
    crate::quat::check_len(spec.n, g.n())?;
    let d = thm2_d(spec, &g.k1);
    let mu1 = thm2_mu1(g.mu, g.gamma, spec.n);
    let mut conditions = vec![Condition::new("(a)", "d < mu1", None, d.to_f64_lossy(), Relation::Less, mu1.to_f64_lossy())];
    let (cb, rc) = (spec.b.column_bound_sums(), spec.c.row_bound_sums());
    for p in 0..spec.n {
        let who = Some(p + 1);
        let b = spec.act_g.lipschitz * cb[p] + g.k2[p];
        conditions.push(Condition::new("(b)", "rho*sum_q b+_qp + k2p (column)", who, b.to_f64_lossy(), Relation::AtMost, 0.0));
        let c = spec.act_h.lipschitz * rc[p] + g.k3[p];
        conditions.push(Condition::new("(c)", "iota*sum_q c+_pq + k3p (row)", who, c.to_f64_lossy(), Relation::AtMost, 0.0));
    }
    Ok(Thm2Check { d, mu1, conditions })
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::domain(what.to_string()))
    }
}

/// `(1/a)(a/b)^{(1−α)/(β−α)}(1/(β−1) + 1/(1−α))`.
pub fn settling_fixed_time<T: Scalar>(a: T, b: T, alpha: T, beta: T) -> Result<T> {
    require(a > T::zero() && b > T::zero(), "a > 0 and b > 0")?;
    require(alpha > T::zero() && alpha < T::one(), "0 < alpha < 1")?;
    require(beta > T::one(), "beta > 1")?;
    let one = T::one();
    Ok((one / a) * (a / b).powf((one - alpha) / (beta - alpha)) * (one / (beta - one) + one / (one - alpha)))
}

/// `1/(a(1−α)) + 1/(b(β−1))`.
pub fn settling_fixed_time_split<T: Scalar>(a: T, b: T, alpha: T, beta: T) -> Result<T> {
    require(a > T::zero() && b > T::zero(), "a > 0 and b > 0")?;
    require(alpha > T::zero() && alpha < T::one(), "0 < alpha < 1")?;
    require(beta > T::one(), "beta > 1")?;
    let one = T::one();
    Ok(one / (a * (one - alpha)) + one / (b * (beta - one)))
}

fn thm1_b<T: Scalar>(lambda3: T, n: usize, beta: T) -> T {
    T::from_usize_lossy(n).powf(T::lit(2.0) * (T::one() - beta)) * lambda3
}

/// Fixed-time bound instantiated with `a = λ₂`, `b = n^{2(1−β)}λ₃`.
pub fn settling_t1<T: Scalar>(lambda2: T, lambda3: T, n: usize, alpha: T, beta: T) -> Result<T> {
    require(n > 0, "n > 0")?;
    settling_fixed_time(lambda2, thm1_b(lambda3, n, beta), alpha, beta)
}

/// Two-phase bound instantiated with `a = λ₂`, `b = n^{2(1−β)}λ₃`.
pub fn settling_t2<T: Scalar>(lambda2: T, lambda3: T, n: usize, alpha: T, beta: T) -> Result<T> {
    require(n > 0, "n > 0")?;
    settling_fixed_time_split(lambda2, thm1_b(lambda3, n, beta), alpha, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "d<0")]
    Negative,
    #[serde(rename = "d=0")]
    Zero,
    #[serde(rename = "d>0")]
    Positive,
}

impl Branch {
    pub fn of<T: Scalar>(d: T) -> Self {
        if d.abs() < T::lit(ZERO_BRANCH_TOL) {
            Branch::Zero
        } else if d < T::zero() {
            Branch::Negative
        } else {
            Branch::Positive
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Negative => "d<0",
            Branch::Zero => "d=0",
            Branch::Positive => "d>0",
        })
    }
}

/// `(T₃, T₄, branch)`; `T₃` is the estimate for initial errors below 1 and replaces `μ₁` by `μ`.
pub fn settling_t3_t4<T: Scalar>(d: T, mu: T, mu1: T, gamma: T) -> Result<(T, T, Branch)> {
    require(gamma >= T::one() && gamma < T::lit(2.0), "1 <= gamma < 2")?;
    require(mu > d.max(T::zero()), "mu > max(d, 0)")?;
    require(mu1 > d, "mu1 > d")?;
    require(mu1 > T::zero(), "mu1 > 0")?;
    let one = T::one();
    let two_g = T::lit(2.0) - gamma;
    let branch = Branch::of(d);
    let (t3, t4) = match branch {
        Branch::Zero => {
            let first = one / (mu * two_g);
            (first + one / (mu * gamma), first + one / (mu1 * gamma))
        }
        Branch::Positive => {
            let first = (mu / (mu - d)).ln() / (d * two_g);
            (first + one / (gamma * (mu - d)), first + one / (gamma * (mu1 - d)))
        }
        Branch::Negative => {
            let first = (mu / (mu - d)).ln() / (d * two_g);
            let second = |m: T| (m / (m - d)).ln() / (d * gamma);
            (first + second(mu), first + second(mu1))
        }
    };
    Ok((t3, t4, branch))
}

/// A named settling-time estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub name: String,
    pub seconds: f64,
    pub branch: Option<Branch>,
}

/// Condition results plus settling-time estimates for one controller configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettlingReport {
    pub controller: String,
    pub conditions: Vec<Condition>,
    pub d: Option<f64>,
    pub mu1: Option<f64>,
    pub estimates: Vec<Estimate>,
}

impl SettlingReport {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.estimates.iter().find(|e| e.name == name).map(|e| e.seconds)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.satisfied)
    }

    pub fn thm1<T: Scalar>(spec: &NetworkSpec<T>, g: &Thm1Gains<T>) -> Result<Self> {
        let conditions = check_thm1(spec, g)?;
        let l2 = g.lambda2.iter().copied().fold(T::infinity(), T::min);
        let l3 = g.lambda3.iter().copied().fold(T::infinity(), T::min);
        let mut estimates = Vec::new();
        if let (Ok(t1), Ok(t2)) = (settling_t1(l2, l3, spec.n, g.alpha, g.beta), settling_t2(l2, l3, spec.n, g.alpha, g.beta)) {
            estimates.push(Estimate { name: "T1".into(), seconds: t1.to_f64_lossy(), branch: None });
            estimates.push(Estimate { name: "T2".into(), seconds: t2.to_f64_lossy(), branch: None });
        }
        Ok(Self { controller: "power-law".into(), conditions, d: None, mu1: None, estimates })
    }

    pub fn thm2<T: Scalar>(spec: &NetworkSpec<T>, g: &Thm2Gains<T>) -> Result<Self> {
        let check = check_thm2(spec, g)?;
        let mut estimates = Vec::new();
        if let Ok((t3, t4, branch)) = settling_t3_t4(check.d, g.mu, check.mu1, g.gamma) {
            estimates.push(Estimate { name: "T3".into(), seconds: t3.to_f64_lossy(), branch: Some(branch) });
            estimates.push(Estimate { name: "T4".into(), seconds: t4.to_f64_lossy(), branch: Some(branch) });
        }
        Ok(Self {
            controller: "switched-exponent".into(),
            conditions: check.conditions,
            d: Some(check.d.to_f64_lossy()),
            mu1: Some(check.mu1.to_f64_lossy()),
            estimates,
        })
    }
}

impl fmt::Display for SettlingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "controller: {}", self.controller)?;
        for c in &self.conditions {
            writeln!(f, "  {c}")?;
        }
        if let (Some(d), Some(mu1)) = (self.d, self.mu1) {
            writeln!(f, "d = {d:.6}, mu1 = {mu1:.6}")?;
        }
        for e in &self.estimates {
            match e.branch {
                Some(b) => writeln!(f, "{} = {:.3} ({b})", e.name, e.seconds)?,
                None => writeln!(f, "{} = {:.3}", e.name, e.seconds)?,
            }
        }
        write!(f, "conditions {}", if self.all_satisfied() { "satisfied" } else { "VIOLATED" })
    }
}

/// Smallest stored time from which `V ≤ tol` holds through the last sample.
pub fn detect_sync_time<T: Scalar>(times: &[T], v: &[T], tol: T) -> Option<T> {
    let mut first = None;
    for (t, val) in times.iter().zip(v).rev() {
        if *val <= tol {
            first = Some(*t);
        } else {
            break;
        }
    }
    first
}
