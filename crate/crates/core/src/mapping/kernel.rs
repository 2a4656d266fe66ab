use serde::{Deserialize, Serialize};

use super::MappingError;

pub const DEFAULT_MIN_SIZE: usize = 3;
pub const DEFAULT_STEP: usize = 2;

/// Window geometry searched per voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KernelShape {
    #[default]
    Square,
    /// Independent m×n search; reserved, rejected at estimation time.
    Rectangular,
}

/// Ascending set of odd candidate window sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    sizes: Vec<usize>,
    #[serde(default)]
    shape: KernelShape,
}

/// Largest odd integer not above min(width, height) / 8.
pub fn auto_kmax(width: usize, height: usize) -> usize {
    let k = width.min(height) / 8;
    if k.is_multiple_of(2) {
        k.saturating_sub(1)
    } else {
        k
    }
}

impl KernelSpec {
    /// Explicit size list; must be odd, at least 3 and strictly ascending.
    pub fn from_sizes(sizes: Vec<usize>) -> Result<Self, MappingError> {
        if sizes.is_empty() {
            return Err(MappingError::EmptyKernelSet);
        }
        for &s in &sizes {
            check_size(s)?;
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MappingError::InvalidKernel(format!(
                "sizes must be strictly ascending: {sizes:?}"
            )));
        }
        Ok(Self {
            sizes,
            shape: KernelShape::Square,
        })
    }

    /// `min, min + step, ...` up to and including `max`.
    pub fn range(min: usize, max: usize, step: usize) -> Result<Self, MappingError> {
        if step == 0 || !step.is_multiple_of(2) {
            return Err(MappingError::InvalidKernel(format!(
                "step must be a positive even number, got {step}"
            )));
        }
        check_size(min)?;
        if max < min {
            return Err(MappingError::ImageTooSmall {
                size: min,
                limit: max,
            });
        }
        Self::from_sizes((min..=max).step_by(step).collect())
    }

    /// Default search for an image: 3, 5, ... up to [`auto_kmax`].
    pub fn auto(width: usize, height: usize) -> Result<Self, MappingError> {
        Self::bounded(width, height, DEFAULT_MIN_SIZE, None, DEFAULT_STEP)
    }

    /// Range search with an optional explicit upper size.
    pub fn bounded(
        width: usize,
        height: usize,
        min: usize,
        max: Option<usize>,
        step: usize,
    ) -> Result<Self, MappingError> {
        let max = max.unwrap_or_else(|| auto_kmax(width, height));
        let spec = Self::range(min, max, step)?;
        spec.validate_for(width, height)?;
        Ok(spec)
    }

    pub fn with_shape(mut self, shape: KernelShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn min_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn kmax(&self) -> usize {
        *self.sizes.last().expect("nonempty")
    }

    pub fn validate_for(&self, width: usize, height: usize) -> Result<(), MappingError> {
        if self.shape == KernelShape::Rectangular {
            return Err(MappingError::NotImplemented("rectangular kernel search"));
        }
        let limit = width.min(height);
        match self.sizes.iter().find(|&&s| s > limit) {
            Some(&size) => Err(MappingError::ImageTooSmall { size, limit }),
            None => Ok(()),
        }
    }
}

pub(crate) fn check_size(size: usize) -> Result<(), MappingError> {
    if size < DEFAULT_MIN_SIZE || size.is_multiple_of(2) {
        Err(MappingError::InvalidKernel(format!(
            "window size must be odd and >= 3, got {size}"
        )))
    } else {
        Ok(())
    }
}
