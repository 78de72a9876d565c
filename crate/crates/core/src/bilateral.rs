//! Bilateral-coefficient network (weights on both sides of the activation) and its equivalent
//! complex-pair form, used as an independent check of the quaternion arithmetic.

use crate::error::Result;
use crate::history::{DelaySpec, HistoryBuffer};
use crate::model::ActivationSpec;
use crate::quat::{check_len, CayleyDickson, QVector, Quaternion};
use crate::scalar::Scalar;
use num_complex::Complex;

/// Ordered triple product `left·mid·right`.
#[inline]
pub fn bilateral_term<T: Scalar>(left: Quaternion<T>, mid: Quaternion<T>, right: Quaternion<T>) -> Quaternion<T> {
    left * mid * right
}

/// The same triple product written out on complex pairs (`l`, `m`, `r` for left, mid, right):
///
/// ```text
/// first  = l₁m₁r₁ − l₂·conj(m₂)·r₁ − l₁m₂·conj(r₂) − l₂·conj(m₁)·conj(r₂)
/// second = l₁m₁r₂ − l₂·conj(m₂)·r₂ + l₁m₂·conj(r₁) + l₂·conj(m₁)·conj(r₁)
/// ```
pub fn bilateral_term_cd<T: Scalar>(left: CayleyDickson<T>, mid: CayleyDickson<T>, right: CayleyDickson<T>) -> CayleyDickson<T> {
    let (l1, l2) = (left.first, left.second);
    let (m1, m2) = (mid.first, mid.second);
    let (r1, r2) = (right.first, right.second);
    let first = l1 * m1 * r1 - l2 * m2.conj() * r1 - l1 * m2 * r2.conj() - l2 * m1.conj() * r2.conj();
    let second = l1 * m1 * r2 - l2 * m2.conj() * r2 + l1 * m2 * r1.conj() + l2 * m1.conj() * r1.conj();
    CayleyDickson::new(first, second)
}

/// Constant-weight bilateral network; matrices are row-major `n × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilateralSpec<T> {
    pub n: usize,
    pub d: Vec<T>,
    pub a_left: Vec<Quaternion<T>>,
    pub a_right: Vec<Quaternion<T>>,
    pub b_left: Vec<Quaternion<T>>,
    pub b_right: Vec<Quaternion<T>>,
    pub c_left: Vec<Quaternion<T>>,
    pub c_right: Vec<Quaternion<T>>,
    pub act_f: ActivationSpec<T>,
    pub act_g: ActivationSpec<T>,
    pub act_h: ActivationSpec<T>,
    pub delays: DelaySpec<T>,
    pub input: QVector<T>,
}

impl<T: Scalar> BilateralSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let nn = self.n * self.n;
        check_len(self.n, self.d.len())?;
        check_len(self.n, self.input.len())?;
        for m in [&self.a_left, &self.a_right, &self.b_left, &self.b_right, &self.c_left, &self.c_right] {
            check_len(nn, m.len())?;
        }
        if self.d.iter().any(|d| !(*d > T::zero())) {
            return Err(crate::error::Error::config("self-feedback must be positive"));
        }
        self.delays.validate()
    }
}

/// Which arithmetic evaluates the triple products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    Quaternion,
    ComplexPair,
}

/// Right-hand side from the current state, the delayed state and the window `∫h(x)`.
pub fn rhs_bilateral_with<T: Scalar>(
    spec: &BilateralSpec<T>,
    arithmetic: Arithmetic,
    x: &[Quaternion<T>],
    delayed: &[Quaternion<T>],
    window: &[Quaternion<T>],
) -> QVector<T> {
    let n = spec.n;
    let f: Vec<_> = x.iter().map(|q| spec.act_f.eval(*q)).collect();
    let g: Vec<_> = delayed.iter().map(|q| spec.act_g.eval(*q)).collect();
    match arithmetic {
        Arithmetic::Quaternion => (0..n)
            .map(|p| {
                let mut acc = x[p].scale(-spec.d[p]) + spec.input[p];
                for q in 0..n {
                    let k = p * n + q;
                    acc += bilateral_term(spec.a_left[k], f[q], spec.a_right[k]);
                    acc += bilateral_term(spec.b_left[k], g[q], spec.b_right[k]);
                    acc += bilateral_term(spec.c_left[k], window[q], spec.c_right[k]);
                }
                acc
            })
            .collect(),
        Arithmetic::ComplexPair => {
            let cd = |v: &[Quaternion<T>]| v.iter().map(|q| q.cd_split()).collect::<Vec<_>>();
            let (xs, fs, gs, ws) = (cd(x), cd(&f), cd(&g), cd(window));
            (0..n)
                .map(|p| {
                    let neg_d = Complex::new(-spec.d[p], T::zero());
                    let inp = spec.input[p].cd_split();
                    let mut first = neg_d * xs[p].first + inp.first;
                    let mut second = neg_d * xs[p].second + inp.second;
                    for q in 0..n {
                        let k = p * n + q;
                        for (l, m, r) in [
                            (spec.a_left[k], fs[q], spec.a_right[k]),
                            (spec.b_left[k], gs[q], spec.b_right[k]),
                            (spec.c_left[k], ws[q], spec.c_right[k]),
                        ] {
                            let term = bilateral_term_cd(l.cd_split(), m, r.cd_split());
                            first = first + term.first;
                            second = second + term.second;
                        }
                    }
                    Quaternion::cd_join(CayleyDickson::new(first, second))
                })
                .collect()
        }
    }
}

/// Right-hand side with delays read from `hist` (linear interpolation, trapezoid window).
pub fn rhs_bilateral<T: Scalar>(spec: &BilateralSpec<T>, t: T, x: &QVector<T>, hist: &HistoryBuffer<T>) -> Result<QVector<T>> {
    check_len(spec.n, x.len())?;
    let delayed = hist.sample(t - spec.delays.tau.eval(t))?;
    let window = hist.distributed_integral(t, spec.delays.pi, |q| spec.act_h.eval(q))?;
    Ok(rhs_bilateral_with(spec, Arithmetic::Quaternion, x, &delayed, &window))
}

/// Fixed-step RK4 of the uncontrolled bilateral network, returning the state after every step.
///
/// Stage windows extend the stored trapezoid by one trapezoid cell to the stage time.
pub fn integrate_bilateral<T: Scalar>(
    spec: &BilateralSpec<T>,
    initial: &QVector<T>,
    t_end: T,
    h: T,
    arithmetic: Arithmetic,
) -> Result<Vec<QVector<T>>> {
    spec.validate()?;
    check_len(spec.n, initial.len())?;
    let mut hist = HistoryBuffer::new(initial.clone(), spec.delays.tau_max());
    let steps = (t_end / h).round().to_usize().unwrap_or(0);
    let mut x = initial.clone();
    let mut out = vec![x.clone()];
    let half = T::lit(0.5);
    let eval = |hist: &HistoryBuffer<T>, t_n: T, x_n: &QVector<T>, t: T, xs: &QVector<T>| -> Result<QVector<T>> {
        let tau = spec.delays.tau.eval(t);
        let delayed = if tau == T::zero() { xs.clone() } else { hist.sample(t - tau)? };
        let pi = spec.delays.pi;
        let window: QVector<T> = if pi > T::zero() {
            let stored = hist.distributed_integral(t_n, pi - (t - t_n), |q| spec.act_h.eval(q))?;
            let w = (t - t_n) * half;
            stored
                .iter()
                .zip(x_n.iter().zip(xs.iter()))
                .map(|(s, (a, b))| *s + (spec.act_h.eval(*a) + spec.act_h.eval(*b)).scale(w))
                .collect()
        } else {
            QVector::zeros(spec.n)
        };
        Ok(rhs_bilateral_with(spec, arithmetic, xs, &delayed, &window))
    };
    let axpy = |a: &QVector<T>, k: &QVector<T>, s: T| -> QVector<T> { a.iter().zip(k.iter()).map(|(p, q)| *p + q.scale(s)).collect() };
    for step in 0..steps {
        let t = T::from_usize_lossy(step) * h;
        let k1 = eval(&hist, t, &x, t, &x)?;
        let k2 = eval(&hist, t, &x, t + h * half, &axpy(&x, &k1, h * half))?;
        let k3 = eval(&hist, t, &x, t + h * half, &axpy(&x, &k2, h * half))?;
        let k4 = eval(&hist, t, &x, t + h, &axpy(&x, &k3, h))?;
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        x = (0..spec.n)
            .map(|p| x[p] + (k1[p] + (k2[p] + k3[p]).scale(two) + k4[p]).scale(sixth))
            .collect();
        hist.push(T::from_usize_lossy(step + 1) * h, &x)?;
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::DelayProfile;
    use crate::model::{ActivationKind, MemristiveWeight, NetworkSpec, WeightMatrix};
    use proptest::prelude::*;

    type Q = Quaternion<f64>;

    fn quat() -> impl Strategy<Value = Q> {
        prop::array::uniform4(-1.0f64..1.0).prop_map(Q::from)
    }

    #[test]
    fn unit_factors_reduce_to_mid() {
        let m = Q::new(0.3, -1.0, 2.0, 0.5);
        assert_eq!(bilateral_term(Q::one(), m, Q::one()), m);
        assert_eq!(bilateral_term(Q::i(), Q::one(), Q::j()), Q::k());
    }

    #[test]
    fn real_inputs_have_no_second_part() {
        let r = |v: f64| Q::real(v).cd_split();
        let out = bilateral_term_cd(r(2.0), r(-1.5), r(0.5));
        assert_eq!(out.first, Complex::new(-1.5, 0.0));
        assert_eq!(out.second, Complex::new(0.0, 0.0));
    }

    #[test]
    fn left_j_matches_hamilton_chain() {
        let f = Q::new(0.7, -0.2, 0.0, 0.0);
        let via_cd = Q::cd_join(bilateral_term_cd(Q::j().cd_split(), f.cd_split(), Q::one().cd_split()));
        assert_eq!(via_cd, Q::j() * f);
    }

    proptest! {
        #[test]
        fn pair_form_matches_triple_product(l in quat(), m in quat(), r in quat()) {
            let a = bilateral_term(l, m, r);
            let b = Q::cd_join(bilateral_term_cd(l.cd_split(), m.cd_split(), r.cd_split()));
            prop_assert!((a - b).one_norm() < 1e-14);
        }
    }

    pub(crate) fn sample_spec(right_one: bool) -> BilateralSpec<f64> {
        let n = 2;
        let mk = |s: f64| -> Vec<Q> { (0..4).map(|k| Q::new(0.3 * s, -0.2 + 0.1 * k as f64, 0.4 * s, -0.1 * k as f64)).collect() };
        let right = |s: f64| if right_one { vec![Q::one(); 4] } else { mk(s) };
        BilateralSpec {
            n,
            d: vec![0.5, 0.7],
            a_left: mk(1.0),
            a_right: right(-1.0),
            b_left: mk(0.5),
            b_right: right(0.7),
            c_left: mk(-0.8),
            c_right: right(0.3),
            act_f: ActivationSpec::new(ActivationKind::ScaledTanh(2.0)),
            act_g: ActivationSpec::new(ActivationKind::ScaledTanh(0.1)),
            act_h: ActivationSpec::new(ActivationKind::ScaledTanh(0.7)),
            delays: DelaySpec { tau: DelayProfile::Sinusoid { amplitude: 0.3, frequency: 1.0, offset: 0.4 }, pi: 0.4 },
            input: QVector::zeros(n),
        }
    }

    #[test]
    fn unilateral_special_case_matches_network_rhs() {
        let bi = sample_spec(true);
        let dense = |m: &[Q]| WeightMatrix::dense(2, m.iter().map(|q| MemristiveWeight::constant(*q)).collect()).unwrap();
        let uni = NetworkSpec {
            n: 2,
            d: bi.d.clone(),
            a: dense(&bi.a_left),
            b: dense(&bi.b_left),
            c: dense(&bi.c_left),
            act_f: bi.act_f,
            act_g: bi.act_g,
            act_h: bi.act_h,
            delays: bi.delays,
            input: bi.input.clone(),
        };
        let x = QVector::new(vec![Q::new(1.5, 2.0, -0.6, 0.8), Q::new(-1.2, -1.5, 1.0, -0.5)]);
        let mut hist = HistoryBuffer::new(x.clone(), 0.7);
        hist.push(0.5, &x.iter().map(|q| q.scale(0.5)).collect()).unwrap();
        let a = rhs_bilateral(&bi, 0.5, &x, &hist).unwrap();
        let b = uni.rhs_drive(0.5, &x, &hist).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn zero_state_gives_zero() {
        let spec = sample_spec(false);
        let z = QVector::zeros(2);
        let hist = HistoryBuffer::new(z.clone(), 0.7);
        assert_eq!(rhs_bilateral(&spec, 0.0, &z, &hist).unwrap(), z);
    }

    #[test]
    fn short_dual_path_run_agrees() {
        let spec = sample_spec(false);
        let x0 = QVector::new(vec![Q::new(1.5, 2.0, -0.6, 0.8), Q::new(-1.2, -1.5, 1.0, -0.5)]);
        let a = integrate_bilateral(&spec, &x0, 0.01, 1e-4, Arithmetic::Quaternion).unwrap();
        let b = integrate_bilateral(&spec, &x0, 0.01, 1e-4, Arithmetic::ComplexPair).unwrap();
        let worst = a.iter().zip(&b).map(|(p, q)| p.max_abs_diff(q)).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }
}
