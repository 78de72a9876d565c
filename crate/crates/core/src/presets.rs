//! Built-in two-neuron network, controller gains and initial data of the worked examples, plus
//! the 256-neuron associative memory used for image recovery.

use crate::controllers::{Thm1Gains, Thm2Gains, WindowEmbedding};
use crate::history::{DelayProfile, DelaySpec};
use crate::model::{ActivationKind, ActivationSpec, MemristiveWeight, NetworkSpec, WeightMatrix};
use crate::quat::{QVector, Quaternion};
use crate::scalar::Scalar;

fn q<T: Scalar>(c: [f64; 4]) -> Quaternion<T> {
    Quaternion::from_f64(c[0], c[1], c[2], c[3])
}

fn qv<T: Scalar>(rows: &[[f64; 4]]) -> QVector<T> {
    rows.iter().map(|r| q(*r)).collect()
}

fn memristive<T: Scalar>(hat: [[[f64; 4]; 2]; 2], check: [[[f64; 4]; 2]; 2]) -> WeightMatrix<T> {
    let mut entries = Vec::with_capacity(4);
    for p in 0..2 {
        for r in 0..2 {
            entries.push(MemristiveWeight { hat: q(hat[p][r]), check: q(check[p][r]), threshold: T::one() });
        }
    }
    WeightMatrix::Dense { n: 2, entries }
}

/// Drive/response pair with its power-law gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    pub spec: NetworkSpec<T>,
    pub drive_initial: QVector<T>,
    pub response_initial: QVector<T>,
    pub gains: Thm1Gains<T>,
}

/// The two-neuron memristive network shared by the first two examples.
pub fn two_neuron_network<T: Scalar>() -> NetworkSpec<T> {
    let a = memristive(
        [
            [[1.8, -1.6, -2.3, -1.0], [-1.0, -1.5, -1.7, 1.3]],
            [[1.5, 3.5, -2.0, -1.5], [-1.5, 2.0, -1.5, -1.6]],
        ],
        [
            [[1.8, -1.6, -3.5, -2.3], [-0.6, 1.5, -1.7, 1.3]],
            [[-1.9, -1.5, -1.7, 1.3], [1.5, -2.0, 1.5, 1.2]],
        ],
    );
    let b = memristive(
        [
            [[-0.45, 0.3, -0.2, -0.35], [-0.25, 0.25, 0.1, -0.4]],
            [[0.2, -0.5, 0.35, -0.25], [0.2, -0.4, -0.18, 0.22]],
        ],
        [
            [[-0.5, 0.3, -0.2, -0.3], [-0.15, -0.2, -0.2, 0.45]],
            [[0.3, -0.65, -0.15, 0.1], [-0.44, 0.1, 0.16, 0.3]],
        ],
    );
    let c = memristive(
        [
            [[2.4, 3.0, 1.0, 2.0], [-1.5, 1.2, -2.0, 1.1]],
            [[-1.0, 2.1, -1.9, 1.3], [2.0, 2.3, 1.0, -1.8]],
        ],
        [
            [[-2.4, -2.0, -1.0, 1.6], [1.1, -2.0, 1.5, -1.6]],
            [[1.4, -1.7, 2.0, -1.4], [-2.0, -2.3, 1.0, -1.8]],
        ],
    );
    NetworkSpec {
        n: 2,
        d: vec![T::lit(0.5); 2],
        a,
        b,
        c,
        act_f: ActivationSpec::new(ActivationKind::ScaledTanh(T::lit(2.0))),
        act_g: ActivationSpec::new(ActivationKind::ScaledTanh(T::lit(0.1))),
        act_h: ActivationSpec::new(ActivationKind::ScaledTanh(T::lit(0.7))),
        delays: DelaySpec {
            tau: DelayProfile::Sinusoid { amplitude: T::lit(0.3), frequency: T::one(), offset: T::lit(0.4) },
            pi: T::lit(0.4),
        },
        input: QVector::zeros(2),
    }
}

/// Network, initial data and power-law gains of the first example.
pub fn example1<T: Scalar>() -> Example<T> {
    let lit = |v: &[f64]| v.iter().map(|x| T::lit(*x)).collect::<Vec<T>>();
    Example {
        spec: two_neuron_network(),
        drive_initial: qv(&[[1.5, 2.0, -0.6, 0.8], [-1.2, -1.5, 1.0, -0.5]]),
        response_initial: qv(&[[2.5, -2.0, -1.0, 1.2], [-3.0, 1.6, 0.8, -2.0]]),
        gains: Thm1Gains {
            lambda1: lit(&[-80.0, -50.0]),
            lambda2: lit(&[1.0, 1.0]),
            lambda3: lit(&[30.0, 35.0]),
            lambda4: lit(&[-0.26, -0.2]),
            lambda5: lit(&[-10.45, -9.35]),
            alpha: T::lit(0.6),
            beta: T::lit(1.6),
            embedding: WindowEmbedding::SignAligned,
        },
    }
}

/// Initial data of the second example as `(drive, response)`.
pub fn example2_initial<T: Scalar>() -> (QVector<T>, QVector<T>) {
    (
        qv(&[[-3.8, 4.8, -1.5, 1.6], [-4.0, 0.9, -2.3, 2.0]]),
        qv(&[[1.2, 2.5, -1.93, 0.7], [-2.3, 2.8, -1.4, -2.3]]),
    )
}

/// Switched-exponent gains of the second example with `γ = 1.5` and the given `k₁₁`, `k₁₂`, `μ`.
pub fn example2_gains<T: Scalar>(k11: f64, k12: f64, mu: f64) -> Thm2Gains<T> {
    Thm2Gains {
        k1: vec![T::lit(k11), T::lit(k12)],
        k2: vec![T::lit(-0.26), T::lit(-0.2)],
        k3: vec![T::lit(-10.25), T::lit(-9.52)],
        mu: T::lit(mu),
        gamma: T::lit(1.5),
        embedding: WindowEmbedding::SignAligned,
    }
}

/// `k₁₁` grid of the `k₁₁` table (`k₁₂ = 130`, `μ = 40`).
pub const K11_GRID: [f64; 6] = [31.0, 33.0, 34.9, 40.0, 45.0, 50.0];
/// `μ` grid of the `μ` table (`k₁₁ = 45`).
pub const MU_GRID: [f64; 6] = [8.0, 16.0, 24.0, 32.0, 40.0, 48.0];
/// `γ` grid of the `γ` table (`k₁₁ = 45`, `μ = 40`).
pub const GAMMA_GRID: [f64; 6] = [1.3, 1.4, 1.5, 1.6, 1.7, 1.8];

/// Reference `(T₃, T₄)` for the `γ` sweep; only the `γ = 1.5` column follows from the closed forms.
pub const GAMMA_REFERENCE: [(f64, f64); 6] =
    [(0.091, 0.158), (0.072, 0.134), (0.059, 0.118), (0.051, 0.106), (0.045, 0.096), (0.040, 0.089)];

/// Neurons per image block (16 × 16 pixels).
pub const BLOCK_NEURONS: usize = 256;

/// The 256-neuron associative memory whose equilibrium stores one image block.
///
/// `input` is left at zero; [`associative_memory_input`] makes a given pattern an equilibrium.
pub fn associative_memory<T: Scalar>() -> NetworkSpec<T> {
    let n = BLOCK_NEURONS;
    let c = |v: [f64; 4]| MemristiveWeight::constant(q::<T>(v));
    let a = WeightMatrix::OrderBanded {
        n,
        lower: c([-0.2, 0.2, -0.5, 0.4]),
        diag: c([2.0, 0.3, -0.2, 0.3]),
        upper: c([-0.1, 0.2, 0.3, -0.5]),
    };
    let b = WeightMatrix::OrderBanded {
        n,
        lower: c([0.04, 0.04, -0.03, 0.05]),
        diag: c([0.04, -0.05, 0.05, -0.03]),
        upper: c([0.04, -0.05, 0.05, -0.03]),
    };
    NetworkSpec {
        n,
        d: vec![T::lit(0.01); n],
        a,
        b,
        c: WeightMatrix::scaled_identity(n, Quaternion::real(T::lit(10.0))),
        act_f: ActivationSpec::new(ActivationKind::PiecewiseAbs(T::lit(0.06))),
        act_g: ActivationSpec::new(ActivationKind::PiecewiseAbs(T::lit(0.05))),
        act_h: ActivationSpec::new(ActivationKind::PiecewiseAbs(T::lit(0.01))),
        delays: DelaySpec { tau: DelayProfile::Constant(T::lit(0.01)), pi: T::lit(0.01) },
        input: QVector::zeros(n),
    }
}

/// External input `I = −(−D x* + A f(x*) + B g(x*) + π C h(x*))` that makes the constant
/// trajectory `x ≡ x*` a solution.
pub fn associative_memory_input<T: Scalar>(spec: &NetworkSpec<T>, pattern: &QVector<T>) -> QVector<T> {
    let pi = spec.delays.pi;
    let window: Vec<_> = pattern.iter().map(|x| spec.act_h.eval(*x).scale(pi)).collect();
    let mut out = vec![Quaternion::zero(); spec.n];
    let mut probe = spec.clone();
    probe.input = QVector::zeros(spec.n);
    probe.rhs_with(pattern, pattern, &window, &mut out);
    out.into_iter().map(|v| -v).collect()
}

/// Switched-exponent gains used for image recovery.
pub fn associative_memory_gains<T: Scalar>() -> Thm2Gains<T> {
    let n = BLOCK_NEURONS;
    Thm2Gains {
        k1: vec![T::lit(42.0); n],
        k2: vec![T::lit(-4.36); n],
        k3: vec![T::lit(-0.2); n],
        mu: T::lit(1.0),
        gamma: T::lit(1.5),
        embedding: WindowEmbedding::SignAligned,
    }
}
