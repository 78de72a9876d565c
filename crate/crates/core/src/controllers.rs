//! The two fixed-time controllers: power-law feedback and norm-switched exponent feedback.

use crate::error::{Error, Result};
use crate::quat::{check_len, QVector, Quaternion};
use crate::scalar::Scalar;

/// How the real window integral `∫‖e_p(s)‖₁ ds` enters the quaternion control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowEmbedding {
    /// `value·sgn(e_p)`: the window opposes the error component-wise.
    #[default]
    SignAligned,
    /// `value` on the real channel only.
    RealChannel,
}

/// Gains of the power-law controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Thm1Gains<T> {
    pub lambda1: Vec<T>,
    pub lambda2: Vec<T>,
    pub lambda3: Vec<T>,
    pub lambda4: Vec<T>,
    pub lambda5: Vec<T>,
    pub alpha: T,
    pub beta: T,
    pub embedding: WindowEmbedding,
}

/// Gains of the norm-switched exponent controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Thm2Gains<T> {
    pub k1: Vec<T>,
    pub k2: Vec<T>,
    pub k3: Vec<T>,
    pub mu: T,
    pub gamma: T,
    pub embedding: WindowEmbedding,
}

impl<T: Scalar> Thm1Gains<T> {
    pub fn n(&self) -> usize {
        self.lambda1.len()
    }

    /// Shape and exponent checks. Sign conditions on λ₂, λ₃ are reported by the condition check instead.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for v in [&self.lambda2, &self.lambda3, &self.lambda4, &self.lambda5] {
            check_len(n, v.len())?;
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::config("alpha must lie in (0, 1)"));
        }
        if !(self.beta > T::one()) {
            return Err(Error::config("beta must exceed 1"));
        }
        Ok(())
    }
}

impl<T: Scalar> Thm2Gains<T> {
    pub fn n(&self) -> usize {
        self.k1.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        check_len(n, self.k2.len())?;
        check_len(n, self.k3.len())?;
        if !(self.mu > T::zero()) {
            return Err(Error::config("mu must be positive"));
        }
        if !(self.gamma >= T::one() && self.gamma < T::lit(2.0)) {
            return Err(Error::config("gamma must lie in [1, 2)"));
        }
        if self.k1.iter().any(|k| !(*k >= T::zero())) {
            return Err(Error::config("k1 entries must be non-negative"));
        }
        Ok(())
    }

    /// `γ + sgn(‖e‖₁ − 1)`.
    pub fn exponent(&self, total_norm: T) -> T {
        self.gamma + (total_norm - T::one()).signum3()
    }
}

/// Control written as `u_p = smooth_p + gain_p·sgn(e_p)`.
///
/// The integrator needs this split to tell the discontinuous part apart when an error component
/// reaches zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitControl<T> {
    pub smooth: Vec<Quaternion<T>>,
    pub gain: Vec<T>,
}

impl<T: Scalar> SplitControl<T> {
    pub fn zero(n: usize) -> Self {
        Self { smooth: vec![Quaternion::zero(); n], gain: vec![T::zero(); n] }
    }

    pub fn assemble(&self, e: &[Quaternion<T>]) -> QVector<T> {
        self.smooth
            .iter()
            .zip(&self.gain)
            .zip(e)
            .map(|((s, g), ep)| *s + ep.sign().scale(*g))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Controller<T> {
    #[default]
    None,
    Thm1(Thm1Gains<T>),
    Thm2(Thm2Gains<T>),
}

impl<T: Scalar> Controller<T> {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Controller::None => Ok(()),
            Controller::Thm1(g) => {
                check_len(n, g.n())?;
                g.validate()
            }
            Controller::Thm2(g) => {
                check_len(n, g.n())?;
                g.validate()
            }
        }
    }

    /// `windows[p] = ∫_{t−π}^{t} ‖e_p(s)‖₁ ds`.
    pub fn split(&self, e_now: &[Quaternion<T>], e_delayed: &[Quaternion<T>], windows: &[T]) -> SplitControl<T> {
        match self {
            Controller::None => SplitControl::zero(e_now.len()),
            Controller::Thm1(g) => split_thm1(g, e_now, e_delayed, windows),
            Controller::Thm2(g) => split_thm2(g, e_now, e_delayed, windows.iter().copied().sum()),
        }
    }
}

fn embed<T: Scalar>(
    embedding: WindowEmbedding,
    value: T,
    smooth: &mut Quaternion<T>,
    gain: &mut T,
) {
    match embedding {
        WindowEmbedding::SignAligned => *gain += value,
        WindowEmbedding::RealChannel => smooth.w += value,
    }
}

pub(crate) fn split_thm1<T: Scalar>(
    g: &Thm1Gains<T>,
    e_now: &[Quaternion<T>],
    e_delayed: &[Quaternion<T>],
    windows: &[T],
) -> SplitControl<T> {
    let n = e_now.len();
    let mut out = SplitControl::zero(n);
    for p in 0..n {
        let norm = e_now[p].one_norm();
        let mut smooth = e_now[p].scale(g.lambda1[p]) + e_delayed[p].scale(g.lambda4[p]);
        let mut gain = if norm > T::zero() {
            -g.lambda2[p] * norm.powf(g.alpha) - g.lambda3[p] * norm.powf(g.beta)
        } else {
            T::zero()
        };
        embed(g.embedding, g.lambda5[p] * windows[p], &mut smooth, &mut gain);
        out.smooth[p] = smooth;
        out.gain[p] = gain;
    }
    out
}

pub(crate) fn split_thm2<T: Scalar>(
    g: &Thm2Gains<T>,
    e_now: &[Quaternion<T>],
    e_delayed: &[Quaternion<T>],
    total_window: T,
) -> SplitControl<T> {
    let n = e_now.len();
    let total_norm = crate::quat::one_norm(e_now);
    let exponent = g.exponent(total_norm);
    let mut out = SplitControl::zero(n);
    for p in 0..n {
        let norm = e_now[p].one_norm();
        let mut smooth = e_now[p].scale(-g.k1[p]) + e_delayed[p].scale(g.k2[p]);
        // with γ = 1 and ‖e‖₁ < 1 the exponent is 0 and the term reduces to −μ·sgn(e_p)
        let mut gain = if norm > T::zero() { -g.mu * norm.powf(exponent) } else { T::zero() };
        embed(g.embedding, g.k3[p] * total_window, &mut smooth, &mut gain);
        out.smooth[p] = smooth;
        out.gain[p] = gain;
    }
    out
}

/// `u_p = λ₁p e_p − λ₂p [e_p]^α − λ₃p [e_p]^β + λ₄p e_p(t−τ(t)) + λ₅p ∫_{t−π}^{t} ‖e_p(s)‖₁ ds`.
pub fn u_thm1<T: Scalar>(
    g: &Thm1Gains<T>,
    e_now: &QVector<T>,
    e_delayed: &QVector<T>,
    e_norm_window: &[T],
) -> Result<QVector<T>> {
    g.validate()?;
    check_len(g.n(), e_now.len())?;
    check_len(g.n(), e_delayed.len())?;
    check_len(g.n(), e_norm_window.len())?;
    Ok(split_thm1(g, e_now, e_delayed, e_norm_window).assemble(e_now))
}

/// `u_p = −k₁p e_p + k₂p e_p(t−τ(t)) − μ [e_p]^{γ + sgn(‖e‖₁ − 1)} + k₃p Σ_q ∫_{t−π}^{t} ‖e_q(s)‖₁ ds`.
pub fn u_thm2<T: Scalar>(
    g: &Thm2Gains<T>,
    e_now: &QVector<T>,
    e_delayed: &QVector<T>,
    total_norm_window: T,
) -> Result<QVector<T>> {
    g.validate()?;
    check_len(g.n(), e_now.len())?;
    check_len(g.n(), e_delayed.len())?;
    Ok(split_thm2(g, e_now, e_delayed, total_norm_window).assemble(e_now))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;

    type Q = Quaternion<f64>;

    fn single(l: [f64; 5], alpha: f64, beta: f64) -> Thm1Gains<f64> {
        Thm1Gains {
            lambda1: vec![l[0]],
            lambda2: vec![l[1]],
            lambda3: vec![l[2]],
            lambda4: vec![l[3]],
            lambda5: vec![l[4]],
            alpha,
            beta,
            embedding: WindowEmbedding::SignAligned,
        }
    }

    #[test]
    fn vanishes_at_zero_error() {
        let g1 = presets::example1::<f64>().gains;
        let z = QVector::zeros(2);
        assert_eq!(u_thm1(&g1, &z, &z, &[0.0, 0.0]).unwrap(), z);
        let g2 = presets::example2_gains::<f64>(40.0, 130.0, 40.0);
        assert_eq!(u_thm2(&g2, &z, &z, 0.0).unwrap(), z);
    }

    #[test]
    fn single_power_term() {
        let g = single([0.0, 1.0, 0.0, 0.0, 0.0], 0.5, 2.0);
        let e = QVector::new(vec![Q::new(0.0, 4.0, 0.0, 0.0)]);
        let u = u_thm1(&g, &e, &QVector::zeros(1), &[0.0]).unwrap();
        assert!((u[0] - Q::new(0.0, -2.0, 0.0, 0.0)).one_norm() < 1e-15);
    }

    #[test]
    fn example1_gains_term_by_term() {
        let ex = presets::example1::<f64>();
        let g = &ex.gains;
        let e = crate::model::error_state(&ex.drive_initial, &ex.response_initial).unwrap();
        let e_del = e.clone();
        let w = [0.4 * e[0].one_norm(), 0.4 * e[1].one_norm()];
        let u = u_thm1(g, &e, &e_del, &w).unwrap();
        for p in 0..2 {
            let nrm = e[p].one_norm();
            let sg = e[p].sign();
            let expect = e[p].scale(g.lambda1[p]) - sg.scale(g.lambda2[p] * nrm.powf(0.6)) - sg.scale(g.lambda3[p] * nrm.powf(1.6))
                + e_del[p].scale(g.lambda4[p])
                + sg.scale(g.lambda5[p] * w[p]);
            assert!((u[p] - expect).one_norm() < 1e-12);
        }
        let mut real = g.clone();
        real.embedding = WindowEmbedding::RealChannel;
        let u_real = u_thm1(&real, &e, &e_del, &w).unwrap();
        let shift = u_real.try_sub(&u).unwrap();
        for p in 0..2 {
            let expect = Q::real(g.lambda5[p] * w[p]) - e[p].sign().scale(g.lambda5[p] * w[p]);
            assert!((shift[p] - expect).one_norm() < 1e-12);
        }
    }

    #[test]
    fn example2_gains_term_by_term() {
        let g = presets::example2_gains::<f64>(40.0, 130.0, 40.0);
        let e = QVector::new(vec![Q::new(0.3, -0.2, 0.1, 0.05), Q::new(-0.4, 0.0, 0.2, -0.1)]);
        let e_del = QVector::new(vec![Q::new(-1.0, 0.5, 0.0, 2.0), Q::new(0.1, 0.1, -0.3, 0.0)]);
        let total = 0.37;
        let u = u_thm2(&g, &e, &e_del, total).unwrap();
        let v = e.one_norm();
        let ex = if v > 1.0 { 2.5 } else if v < 1.0 { 0.5 } else { 1.5 };
        for p in 0..2 {
            let sg = e[p].sign();
            let expect = e[p].scale(-g.k1[p]) + e_del[p].scale(g.k2[p]) - sg.scale(40.0 * e[p].one_norm().powf(ex))
                + sg.scale(g.k3[p] * total);
            assert!((u[p] - expect).one_norm() < 1e-12);
        }
    }

    #[test]
    fn exponent_switches_at_unit_norm() {
        let g = presets::example2_gains::<f64>(40.0, 130.0, 40.0);
        assert_eq!(g.exponent(2.0), 2.5);
        assert_eq!(g.exponent(0.5), 0.5);
        assert_eq!(g.exponent(1.0), 1.5);
    }

    #[test]
    fn rejects_bad_gains() {
        let mut g = single([0.0, 1.0, 1.0, 0.0, 0.0], 1.0, 2.0);
        assert!(u_thm1(&g, &QVector::zeros(1), &QVector::zeros(1), &[0.0]).is_err());
        g.alpha = 0.5;
        assert!(u_thm1(&g, &QVector::zeros(2), &QVector::zeros(1), &[0.0]).is_err());
        let mut g2 = presets::example2_gains::<f64>(40.0, 130.0, 40.0);
        g2.gamma = 2.0;
        assert!(g2.validate().is_err());
    }

    fn quat() -> impl Strategy<Value = Q> {
        prop::array::uniform4(-2.0f64..2.0).prop_map(Q::from)
    }

    proptest! {
        #[test]
        fn instantaneous_block_is_odd(e in quat()) {
            let g = single([-3.0, 1.5, 2.0, 0.0, 0.0], 0.6, 1.6);
            let pos = u_thm1(&g, &QVector::new(vec![e]), &QVector::zeros(1), &[0.0]).unwrap();
            let neg = u_thm1(&g, &QVector::new(vec![-e]), &QVector::zeros(1), &[0.0]).unwrap();
            prop_assert_eq!(pos[0], -neg[0]);
        }
    }
}
