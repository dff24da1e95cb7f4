use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::arch::{Arch, OUTPUTS};
use crate::rng;
use crate::{Error, Result};

/// Weights, biases and batch-norm state. Kernel layouts are
/// `[out][in][tap]`; dense layouts are `[out][in]`.
///
/// The convolution biases are cancelled exactly by the batch norm that
/// follows each convolution, so they are frozen (not trained) and stay 0
/// after initialisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParameters {
    pub arch: Arch,
    pub conv1_w: Vec<f64>,
    pub conv1_b: Vec<f64>,
    pub bn1_gamma: Vec<f64>,
    pub bn1_beta: Vec<f64>,
    pub bn1_mean: Vec<f64>,
    pub bn1_var: Vec<f64>,
    pub conv2_w: Vec<f64>,
    pub conv2_b: Vec<f64>,
    pub bn2_gamma: Vec<f64>,
    pub bn2_beta: Vec<f64>,
    pub bn2_mean: Vec<f64>,
    pub bn2_var: Vec<f64>,
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

/// Name, shape and whether gradient descent updates the tensor.
pub type TensorSpec = (&'static str, Vec<usize>, bool);

impl NetworkParameters {
    /// Every tensor zero except unit batch-norm scales and running variances.
    pub fn zeros(arch: Arch) -> Result<Self> {
        let s = arch.shapes()?;
        let (f1, f2, k, h) = (arch.conv1_filters, arch.conv2_filters, arch.kernel, arch.hidden);
        Ok(NetworkParameters {
            arch,
            conv1_w: vec![0.0; f1 * k],
            conv1_b: vec![0.0; f1],
            bn1_gamma: vec![1.0; f1],
            bn1_beta: vec![0.0; f1],
            bn1_mean: vec![0.0; f1],
            bn1_var: vec![1.0; f1],
            conv2_w: vec![0.0; f2 * f1 * k],
            conv2_b: vec![0.0; f2],
            bn2_gamma: vec![1.0; f2],
            bn2_beta: vec![0.0; f2],
            bn2_mean: vec![0.0; f2],
            bn2_var: vec![1.0; f2],
            dense_w: vec![0.0; h * s.flat],
            dense_b: vec![0.0; h],
            out_w: vec![0.0; OUTPUTS * h],
            out_b: vec![0.0; OUTPUTS],
        })
    }

    /// He-normal weights, zero biases.
    pub fn init(arch: Arch, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        let mut r = rng::seeded(seed);
        let s = arch.shapes()?;
        let mut fill = |w: &mut [f64], fan_in: usize| {
            let d = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            w.iter_mut().for_each(|v| *v = d.sample(&mut r));
        };
        fill(&mut p.conv1_w, arch.kernel);
        fill(&mut p.conv2_w, arch.conv1_filters * arch.kernel);
        fill(&mut p.dense_w, s.flat);
        fill(&mut p.out_w, arch.hidden);
        Ok(p)
    }

    pub fn tensor_specs(&self) -> Vec<TensorSpec> {
        let a = &self.arch;
        let flat = self.dense_w.len() / a.hidden;
        let (f1, f2, k) = (a.conv1_filters, a.conv2_filters, a.kernel);
        vec![
            ("conv1_w", vec![f1, 1, k], true),
            ("conv1_b", vec![f1], false),
            ("bn1_gamma", vec![f1], true),
            ("bn1_beta", vec![f1], true),
            ("bn1_mean", vec![f1], false),
            ("bn1_var", vec![f1], false),
            ("conv2_w", vec![f2, f1, k], true),
            ("conv2_b", vec![f2], false),
            ("bn2_gamma", vec![f2], true),
            ("bn2_beta", vec![f2], true),
            ("bn2_mean", vec![f2], false),
            ("bn2_var", vec![f2], false),
            ("dense_w", vec![a.hidden, flat], true),
            ("dense_b", vec![a.hidden], true),
            ("out_w", vec![OUTPUTS, a.hidden], true),
            ("out_b", vec![OUTPUTS], true),
        ]
    }

    /// Tensors in [`tensor_specs`](Self::tensor_specs) order.
    pub fn tensors(&self) -> [&Vec<f64>; 16] {
        [
            &self.conv1_w,
            &self.conv1_b,
            &self.bn1_gamma,
            &self.bn1_beta,
            &self.bn1_mean,
            &self.bn1_var,
            &self.conv2_w,
            &self.conv2_b,
            &self.bn2_gamma,
            &self.bn2_beta,
            &self.bn2_mean,
            &self.bn2_var,
            &self.dense_w,
            &self.dense_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 16] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.bn1_gamma,
            &mut self.bn1_beta,
            &mut self.bn1_mean,
            &mut self.bn1_var,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.bn2_gamma,
            &mut self.bn2_beta,
            &mut self.bn2_mean,
            &mut self.bn2_var,
            &mut self.dense_w,
            &mut self.dense_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn trainable_count(&self) -> usize {
        self.tensor_specs()
            .iter()
            .zip(self.tensors())
            .filter(|((_, _, t), _)| *t)
            .map(|(_, v)| v.len())
            .sum()
    }

    /// Checks tensor lengths against the architecture and finiteness.
    pub fn validate(&self) -> Result<()> {
        let reference = Self::zeros(self.arch)?;
        for ((name, shape, _), (a, b)) in reference.tensor_specs().iter().zip(self.tensors().iter().zip(reference.tensors())) {
            if a.len() != b.len() {
                return Err(Error::Shape {
                    expected: format!("{name} {shape:?}"),
                    actual: format!("{} values", a.len()),
                });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} has non-finite values")));
            }
        }
        Ok(())
    }

    /// `self -= lr * grad` over trainable tensors.
    pub fn sgd_step(&mut self, grad: &NetworkParameters, lr: f64) {
        let specs = self.tensor_specs();
        for ((_, _, trainable), (p, g)) in specs.iter().zip(self.tensors_mut().into_iter().zip(grad.tensors())) {
            if *trainable {
                p.iter_mut().zip(g.iter()).for_each(|(p, g)| *p -= lr * g);
            }
        }
    }
}
