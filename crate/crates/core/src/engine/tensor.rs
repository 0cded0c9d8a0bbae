//! Dense double-precision NCHW tensor.

use std::fmt;

/// Batched feature map, row-major `[batch][channel][height][width]`.
/// Vector-valued tensors (logits, pooled features) use `height = width = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub batch: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(batch: usize, channels: usize, height: usize, width: usize) -> Self {
        Tensor { batch, channels, height, width, data: vec![0.0; batch * channels * height * width] }
    }

    pub fn from_vec(
        batch: usize,
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Self {
        assert_eq!(data.len(), batch * channels * height * width, "tensor data length");
        Tensor { batch, channels, height, width, data }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Elements per batch item.
    pub fn features(&self) -> usize {
        self.channels * self.height * self.width
    }

    #[inline]
    pub fn offset(&self, b: usize, c: usize, h: usize, w: usize) -> usize {
        ((b * self.channels + c) * self.height + h) * self.width + w
    }

    #[inline]
    pub fn at(&self, b: usize, c: usize, h: usize, w: usize) -> f64 {
        self.data[self.offset(b, c, h, w)]
    }

    #[inline]
    pub fn at_mut(&mut self, b: usize, c: usize, h: usize, w: usize) -> &mut f64 {
        let i = self.offset(b, c, h, w);
        &mut self.data[i]
    }

    /// Flat `(batch, feature)` view accessor.
    #[inline]
    pub fn at2(&self, b: usize, f: usize) -> f64 {
        self.data[b * self.features() + f]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}x{}", self.batch, self.channels, self.height, self.width)
    }
}
