//! Synthetic data sets for the benchmark experiments.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::filter::Butterworth;
use crate::error::{Error, Result};

/// Independent random stream for Monte Carlo run `run` under `seed`.
pub fn stream_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    White,
    Lowpass,
}

/// Linear system `y = U θ + e` where `U` is the convolution matrix of a
/// random input signal and `θ` a smooth impulse response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseSpec {
    pub n: usize,
    pub m: usize,
    pub mode: InputMode,
    /// Low-pass band edge as a fraction of Nyquist.
    pub cutoff: f64,
    pub order: usize,
    /// Samples discarded from the start of the filtered signal.
    pub burn_in: usize,
}

impl Default for InverseSpec {
    fn default() -> Self {
        Self {
            n: 200,
            m: 50,
            mode: InputMode::Lowpass,
            cutoff: 0.2,
            order: 6,
            burn_in: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InverseProblem {
    pub u: DMatrix<f64>,
    pub theta: DVector<f64>,
    pub y: DVector<f64>,
    pub sigma2: f64,
    /// The input signal that generated `U`.
    pub input: Vec<f64>,
}

/// `sin(2πt) + 0.5 sin(4πt + 0.3)` at `t = 1/m, …, 1`.
pub fn test_signal(m: usize) -> DVector<f64> {
    DVector::from_fn(m, |i, _| {
        let t = (i + 1) as f64 / m as f64;
        (2.0 * std::f64::consts::PI * t).sin() + 0.5 * (4.0 * std::f64::consts::PI * t + 0.3).sin()
    })
}

/// Population variance (divides by the length).
pub fn variance(v: &DVector<f64>) -> f64 {
    let mean = v.mean();
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64
}

/// Draws `(U, θ, y, σ²)` with `σ² = Var(U θ) / 10`.
pub fn gen_inverse_problem(rng: &mut impl Rng, spec: &InverseSpec) -> Result<InverseProblem> {
    let (n, m) = (spec.n, spec.m);
    if n <= m || m == 0 {
        return Err(Error::InvalidParameter(format!("need n > m > 0, got n = {n}, m = {m}")));
    }
    let raw: Vec<f64> = (0..n + spec.burn_in).map(|_| normal(rng)).collect();
    let input: Vec<f64> = match spec.mode {
        InputMode::White => raw[spec.burn_in..].to_vec(),
        InputMode::Lowpass => {
            let filter = Butterworth::lowpass(spec.order, spec.cutoff)?;
            filter.apply(&raw)[spec.burn_in..].to_vec()
        }
    };
    let u = DMatrix::from_fn(n, m, |i, j| if i >= j { input[i - j] } else { 0.0 });
    let theta = test_signal(m);
    let clean = &u * &theta;
    let sigma2 = variance(&clean) / 10.0;
    let sd = sigma2.sqrt();
    let y = clean.map(|v| v + sd * normal(rng));
    Ok(InverseProblem {
        u,
        theta,
        y,
        sigma2,
        input,
    })
}

/// Inputs with their outputs (or `±1` labels).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub inputs: Vec<Vec<f64>>,
    pub y: DVector<f64>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn concat(&self, other: &PointSet) -> PointSet {
        let mut inputs = self.inputs.clone();
        inputs.extend(other.inputs.iter().cloned());
        let y = DVector::from_iterator(self.len() + other.len(), self.y.iter().chain(other.y.iter()).copied());
        PointSet { inputs, y }
    }

    fn slice(inputs: &[Vec<f64>], y: &[f64]) -> PointSet {
        PointSet {
            inputs: inputs.to_vec(),
            y: DVector::from_column_slice(y),
        }
    }
}

/// Training / validation / test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: PointSet,
    pub validation: PointSet,
    pub test: PointSet,
}

impl Split {
    /// Half for training, a quarter each for validation and test, in order.
    pub fn halves(inputs: Vec<Vec<f64>>, y: Vec<f64>) -> Split {
        let n = inputs.len();
        let a = n / 2;
        let b = a + n / 4;
        Split {
            train: PointSet::slice(&inputs[..a], &y[..a]),
            validation: PointSet::slice(&inputs[a..b], &y[a..b]),
            test: PointSet::slice(&inputs[b..], &y[b..]),
        }
    }
}

/// Two classes, each a mixture of ten Gaussian clusters. Means are drawn
/// afresh on every call: `N([1 0]ᵀ, I)` for `+1`, `N([0 1]ᵀ, I)` for `−1`.
/// Each point picks a label with probability 1/2, one of its class's means
/// uniformly, then a location from `N(m_k, I/5)`.
pub fn gen_classify_mixture(rng: &mut impl Rng, size: usize) -> Split {
    let mut means =
        |c: [f64; 2]| -> Vec<[f64; 2]> { (0..10).map(|_| [c[0] + normal(rng), c[1] + normal(rng)]).collect() };
    let pos = means([1.0, 0.0]);
    let neg = means([0.0, 1.0]);
    let spread = (0.2f64).sqrt();
    let mut inputs = Vec::with_capacity(size);
    let mut labels = Vec::with_capacity(size);
    for _ in 0..size {
        let positive = rng.random_bool(0.5);
        let k = rng.random_range(0..10);
        let m = if positive { pos[k] } else { neg[k] };
        inputs.push(vec![m[0] + spread * normal(rng), m[1] + spread * normal(rng)]);
        labels.push(if positive { 1.0 } else { -1.0 });
    }
    Split::halves(inputs, labels)
}

/// Franke's bivariate test function.
pub fn franke(x: f64, y: f64) -> f64 {
    let (a, b) = (9.0 * x, 9.0 * y);
    0.75 * (-((a - 2.0).powi(2) + (b - 2.0).powi(2)) / 4.0).exp()
        + 0.75 * (-(a + 1.0).powi(2) / 49.0 - (b + 1.0) / 10.0).exp()
        + 0.5 * (-((a - 7.0).powi(2) + (b - 3.0).powi(2)) / 4.0).exp()
        - 0.2 * (-(a - 4.0).powi(2) - (b - 7.0).powi(2)).exp()
}

/// Mixture noise `0.9 N(0, 0.1²) + 0.1 N(0, 1)`; also returns whether the
/// wide component was picked.
pub fn mixture_noise(rng: &mut impl Rng) -> (f64, bool) {
    let wide = rng.random_bool(0.1);
    let sd = if wide { 1.0 } else { 0.1 };
    (sd * normal(rng), wide)
}

/// Uniform inputs on the unit square; noisy training and validation outputs,
/// noiseless test outputs.
pub fn gen_franke(rng: &mut impl Rng, size: usize) -> Split {
    let inputs: Vec<Vec<f64>> = (0..size)
        .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let noisy = size / 2 + size / 4;
    let y: Vec<f64> = inputs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = franke(x[0], x[1]);
            if i < noisy {
                f + mixture_noise(rng).0
            } else {
                f
            }
        })
        .collect();
    Split::halves(inputs, y)
}
