//! Brownian-bridge diffusion schedule between an image and its edge map.
//!
//! With trajectory ratio `r_t = t / T` and variance `delta_t = 2 (r_t - r_t^2)`
//! the forward process is
//!
//! ```text
//! q_t = (1 - r_t) x0 + r_t y + sqrt(delta_t) eps
//! ```
//!
//! and a noise predictor regresses `sqrt(delta_t) eps + r_t (y - x0)`. The
//! variance vanishes at both ends, so `q_0 = x0` and `q_T = y` exactly.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::gray::ImageGray;
use crate::seed::rng_from_seed;

pub const DEFAULT_MAX_STEP: u32 = 1000;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("timestep {t} outside [0, {max}]")]
    StepOutOfRange { t: u32, max: u32 },
    #[error("maximum timestep must be at least 1")]
    ZeroMaxStep,
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch(Vec<usize>, Vec<usize>),
    #[error("tensor data length {len} does not match shape {shape:?}")]
    BadTensor { shape: Vec<usize>, len: usize },
    #[error("value {0} outside the normalized range [-1, 1]")]
    OutOfRange(f64),
    #[error("monte carlo check needs at least 2 samples")]
    TooFewSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgeSchedule {
    pub max_step: u32,
    pub step: u32,
    pub ratio: f64,
    pub variance: f64,
}

pub fn schedule(t: u32, max_step: u32) -> Result<BridgeSchedule, BridgeError> {
    if max_step == 0 {
        return Err(BridgeError::ZeroMaxStep);
    }
    if t > max_step {
        return Err(BridgeError::StepOutOfRange { t, max: max_step });
    }
    let ratio = t as f64 / max_step as f64;
    Ok(BridgeSchedule {
        max_step,
        step: t,
        ratio,
        variance: 2.0 * (ratio - ratio * ratio),
    })
}

/// Flat real tensor with explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, BridgeError> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(BridgeError::BadTensor {
                shape,
                len: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `v / 127.5 - 1`, shape `[height, width]`.
    pub fn from_image(img: &ImageGray) -> Self {
        Self {
            shape: vec![img.height(), img.width()],
            data: img.data().iter().map(|&v| v as f64 / 127.5 - 1.0).collect(),
        }
    }

    /// Inverse of [`Tensor::from_image`] with rounding and clipping.
    pub fn to_image(&self) -> Option<ImageGray> {
        let [h, w] = self.shape[..] else { return None };
        let data = self
            .data
            .iter()
            .map(|v| ((v + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8);
        ImageGray::new(w, h, data.collect()).ok()
    }

    fn check_same(&self, other: &Tensor) -> Result<(), BridgeError> {
        if self.shape != other.shape {
            return Err(BridgeError::ShapeMismatch(
                self.shape.clone(),
                other.shape.clone(),
            ));
        }
        Ok(())
    }

    fn check_normalized(&self) -> Result<(), BridgeError> {
        match self.data.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            Some(&v) => Err(BridgeError::OutOfRange(v)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardSample {
    pub q_t: Tensor,
    pub noise: Tensor,
}

/// `q_t` for a caller-supplied noise tensor.
pub fn forward_with_noise(
    x0: &Tensor,
    y: &Tensor,
    noise: &Tensor,
    t: u32,
    max_step: u32,
) -> Result<Tensor, BridgeError> {
    x0.check_same(y)?;
    x0.check_same(noise)?;
    x0.check_normalized()?;
    y.check_normalized()?;
    let s = schedule(t, max_step)?;
    let sd = s.variance.sqrt();
    let data = x0
        .data
        .iter()
        .zip(&y.data)
        .zip(&noise.data)
        .map(|((&a, &b), &e)| (1.0 - s.ratio) * a + s.ratio * b + sd * e)
        .collect();
    Ok(Tensor {
        shape: x0.shape.clone(),
        data,
    })
}

/// Draws `eps ~ N(0, 1)` per element and returns `q_t` with the noise used.
pub fn forward_sample<R: Rng + ?Sized>(
    x0: &Tensor,
    y: &Tensor,
    t: u32,
    max_step: u32,
    rng: &mut R,
) -> Result<ForwardSample, BridgeError> {
    x0.check_same(y)?;
    let noise: Vec<f64> = (0..x0.data.len())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let noise = Tensor {
        shape: x0.shape.clone(),
        data: noise,
    };
    let q_t = forward_with_noise(x0, y, &noise, t, max_step)?;
    Ok(ForwardSample { q_t, noise })
}

/// `sqrt(delta_t) eps + r_t (y - x0)`.
pub fn training_target(
    x0: &Tensor,
    y: &Tensor,
    noise: &Tensor,
    t: u32,
    max_step: u32,
) -> Result<Tensor, BridgeError> {
    x0.check_same(y)?;
    x0.check_same(noise)?;
    let s = schedule(t, max_step)?;
    let sd = s.variance.sqrt();
    let data = x0
        .data
        .iter()
        .zip(&y.data)
        .zip(&noise.data)
        .map(|((&a, &b), &e)| sd * e + s.ratio * (b - a))
        .collect();
    Ok(Tensor {
        shape: x0.shape.clone(),
        data,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeReport {
    pub max_step: u32,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl BridgeReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn scalar_draws(
    x0: f64,
    y: f64,
    t: u32,
    max_step: u32,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>, BridgeError> {
    let mut rng = rng_from_seed(seed);
    let shape = vec![samples];
    let x0 = Tensor::filled(shape.clone(), x0);
    let y = Tensor::filled(shape, y);
    Ok(forward_sample(&x0, &y, t, max_step, &mut rng)?.q_t.data)
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Endpoint, moment and algebraic-identity checks of the forward process.
///
/// Moment checks pass when the empirical statistic lies within three
/// standard errors of its analytic value.
pub fn monte_carlo_check(
    max_step: u32,
    samples: usize,
    seed: u64,
) -> Result<BridgeReport, BridgeError> {
    if samples < 2 {
        return Err(BridgeError::TooFewSamples);
    }
    schedule(0, max_step)?;
    let mut checks = Vec::new();
    let mut rng = rng_from_seed(seed);

    let probe_len = 257;
    let x0 = Tensor::new(
        vec![probe_len],
        (0..probe_len)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect(),
    )?;
    let y = Tensor::new(
        vec![probe_len],
        (0..probe_len)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect(),
    )?;

    let q0 = forward_sample(&x0, &y, 0, max_step, &mut rng)?.q_t;
    let mismatches = q0.data.iter().zip(&x0.data).filter(|(a, b)| a != b).count();
    checks.push(CheckResult {
        name: "q_0 == x0".into(),
        passed: mismatches == 0,
        value: mismatches as f64,
        bound: 0.0,
    });
    let qt = forward_sample(&x0, &y, max_step, max_step, &mut rng)?.q_t;
    let mismatches = qt.data.iter().zip(&y.data).filter(|(a, b)| a != b).count();
    checks.push(CheckResult {
        name: "q_T == y".into(),
        passed: mismatches == 0,
        value: mismatches as f64,
        bound: 0.0,
    });

    let mid = max_step / 2;
    let delta_mid = schedule(mid, max_step)?.variance;
    let draws = scalar_draws(0.0, 0.0, mid, max_step, samples, seed ^ 0x5eed)?;
    let (_, var) = mean_var(&draws);
    let se = delta_mid * (2.0 / (samples as f64 - 1.0)).sqrt();
    checks.push(CheckResult {
        name: format!("var(q_{mid}) ~ {delta_mid}"),
        passed: (var - delta_mid).abs() <= 3.0 * se,
        value: var,
        bound: 3.0 * se,
    });

    let (a, b) = (0.8, -0.4);
    for (k, t) in [max_step / 4, mid, 3 * max_step / 4]
        .into_iter()
        .enumerate()
    {
        let s = schedule(t, max_step)?;
        let draws = scalar_draws(a, b, t, max_step, samples, seed ^ (0xa11 + k as u64))?;
        let (mean, _) = mean_var(&draws);
        let expected = (1.0 - s.ratio) * a + s.ratio * b;
        let se = (s.variance / samples as f64).sqrt();
        checks.push(CheckResult {
            name: format!("mean(q_{t}) ~ {expected}"),
            passed: (mean - expected).abs() <= 3.0 * se,
            value: mean,
            bound: 3.0 * se,
        });
    }

    let mut worst = 0.0f64;
    let stride = (max_step / 50).max(1);
    for t in (0..=max_step).step_by(stride as usize) {
        let fs = forward_sample(&x0, &y, t, max_step, &mut rng)?;
        let target = training_target(&x0, &y, &fs.noise, t, max_step)?;
        for ((q, a), g) in fs.q_t.data.iter().zip(&x0.data).zip(&target.data) {
            worst = worst.max((q - a - g).abs());
        }
    }
    checks.push(CheckResult {
        name: "q_t - x0 == target (shared noise)".into(),
        passed: worst <= 1e-12,
        value: worst,
        bound: 1e-12,
    });

    let mut asym = 0.0f64;
    let mut negative = false;
    for t in 0..=max_step {
        let d = schedule(t, max_step)?.variance;
        let e = schedule(max_step - t, max_step)?.variance;
        asym = asym.max((d - e).abs());
        negative |= d < 0.0;
    }
    checks.push(CheckResult {
        name: "delta_t >= 0 and symmetric".into(),
        passed: !negative && asym <= 1e-12,
        value: asym,
        bound: 1e-12,
    });

    Ok(BridgeReport {
        max_step,
        samples,
        seed,
        checks,
    })
}
