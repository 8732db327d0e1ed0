//! Adam with decoupled weight decay.

use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderParams, Gradients};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
struct Moments<T> {
    first: Mat<T>,
    second: Mat<T>,
}

impl<T: Scalar> Moments<T> {
    fn zeros_like(m: &Mat<T>) -> Self {
        Self {
            first: Mat::zeros(m.rows(), m.cols()),
            second: Mat::zeros(m.rows(), m.cols()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam<T> {
    config: AdamConfig,
    step_count: u64,
    w1: Moments<T>,
    w2: Moments<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig, params: &EncoderParams<T>) -> Self {
        Self {
            config,
            step_count: 0,
            w1: Moments::zeros_like(&params.w1),
            w2: Moments::zeros_like(&params.w2),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step(&mut self, params: &mut EncoderParams<T>, grads: &Gradients<T>) -> Result<()> {
        if params.w1.shape() != grads.w1.shape() || params.w2.shape() != grads.w2.shape() {
            return Err(Error::Shape(
                "gradient shapes do not match parameters".into(),
            ));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c = &self.config;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        update(&mut params.w1, &grads.w1, &mut self.w1, c, bias1, bias2);
        update(&mut params.w2, &grads.w2, &mut self.w2, c, bias1, bias2);
        Ok(())
    }
}

fn update<T: Scalar>(
    param: &mut Mat<T>,
    grad: &Mat<T>,
    moments: &mut Moments<T>,
    c: &AdamConfig,
    bias1: f64,
    bias2: f64,
) {
    let lr = T::of(c.learning_rate);
    let decay = T::one() - T::of(c.learning_rate * c.weight_decay);
    let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
    let (bias1, bias2, eps) = (T::of(bias1), T::of(bias2), T::of(c.epsilon));
    let params = param.as_mut_slice().iter_mut();
    let m = moments.first.as_mut_slice().iter_mut();
    let v = moments.second.as_mut_slice().iter_mut();
    for (((p, &g), m), v) in params.zip(grad.as_slice()).zip(m).zip(v) {
        *p *= decay;
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
