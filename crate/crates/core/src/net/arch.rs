use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Layer sizes of the convolutional classifier. Convolutions are valid
/// (no padding, stride 1); pooling windows are non-overlapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub input_len: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub kernel: usize,
    pub pool: usize,
    pub hidden: usize,
}

pub const OUTPUTS: usize = 2;

/// Derived activation lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shapes {
    pub conv1_len: usize,
    pub pool1_len: usize,
    pub conv2_len: usize,
    pub pool2_len: usize,
    pub flat: usize,
}

impl Arch {
    /// Full-size network for an input of `input_len` values.
    pub fn standard(input_len: usize) -> Self {
        Arch {
            input_len,
            conv1_filters: 64,
            conv2_filters: 32,
            kernel: 3,
            pool: 2,
            hidden: 512,
        }
    }

    /// Small network used for gradient checking.
    pub fn reduced() -> Self {
        Arch {
            input_len: 32,
            conv1_filters: 4,
            conv2_filters: 3,
            kernel: 3,
            pool: 2,
            hidden: 8,
        }
    }

    pub fn shapes(&self) -> Result<Shapes> {
        let bad = |what: &str| Error::invalid(format!("input length {} too short: {what}", self.input_len));
        if self.kernel == 0 || self.pool == 0 || self.conv1_filters == 0 || self.conv2_filters == 0 || self.hidden == 0 {
            return Err(Error::invalid("layer sizes must be positive"));
        }
        let conv1_len = (self.input_len + 1).checked_sub(self.kernel).filter(|&l| l > 0).ok_or_else(|| bad("conv1"))?;
        let pool1_len = Some(conv1_len / self.pool).filter(|&l| l > 0).ok_or_else(|| bad("pool1"))?;
        let conv2_len = (pool1_len + 1).checked_sub(self.kernel).filter(|&l| l > 0).ok_or_else(|| bad("conv2"))?;
        let pool2_len = Some(conv2_len / self.pool).filter(|&l| l > 0).ok_or_else(|| bad("pool2"))?;
        Ok(Shapes {
            conv1_len,
            pool1_len,
            conv2_len,
            pool2_len,
            flat: self.conv2_filters * pool2_len,
        })
    }
}
