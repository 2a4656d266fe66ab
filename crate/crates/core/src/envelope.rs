//! RF to envelope conversion by the magnitude of the discrete analytic signal.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::grids::{GridError, Image2D, ImageKind};

pub const MIN_AXIAL_LEN: usize = 4;

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("axial length {0} is shorter than {MIN_AXIAL_LEN}")]
    AxialTooShort(usize),
    #[error("expected an RF image, got {0}")]
    WrongKind(ImageKind),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Direction along which echo time runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Axis {
    /// Each column is one A-line (time increases with y).
    #[default]
    Columns,
    /// Each row is one A-line.
    Rows,
}

#[derive(Debug, Clone)]
pub struct RFFrame {
    pub image: Image2D,
    pub axis: Axis,
}

impl RFFrame {
    pub fn new(image: Image2D, axis: Axis) -> Result<Self, EnvelopeError> {
        if image.kind() != ImageKind::RF {
            return Err(EnvelopeError::WrongKind(image.kind()));
        }
        let axial = match axis {
            Axis::Columns => image.height(),
            Axis::Rows => image.width(),
        };
        if axial < MIN_AXIAL_LEN {
            return Err(EnvelopeError::AxialTooShort(axial));
        }
        Ok(Self { image, axis })
    }

    pub fn axial_len(&self) -> usize {
        match self.axis {
            Axis::Columns => self.image.height(),
            Axis::Rows => self.image.width(),
        }
    }
}

/// Forward/inverse transform pair for one line length.
struct AnalyticPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    len: usize,
}

impl AnalyticPlan {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    /// Replaces `buf` (the real line, as complex) by its analytic signal.
    fn apply(&self, buf: &mut [Complex64]) {
        let n = self.len;
        self.forward.process(buf);
        // DC and (even n) Nyquist keep weight 1, positive frequencies double, negative vanish.
        let nyquist = n.is_multiple_of(2).then_some(n / 2);
        for (k, v) in buf.iter_mut().enumerate().skip(1) {
            if Some(k) == nyquist {
                continue;
            }
            if 2 * k < n {
                *v *= 2.0;
            } else {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        let scale = 1.0 / n as f64;
        self.inverse.process(buf);
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Analytic signal of one real line.
pub fn analytic_signal(line: &[f64]) -> Vec<Complex64> {
    let plan = AnalyticPlan::new(line.len());
    let mut buf: Vec<Complex64> = line.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.apply(&mut buf);
    buf
}

/// Envelope (analytic-signal magnitude) of one real line.
pub fn envelope_line(line: &[f64]) -> Result<Vec<f64>, EnvelopeError> {
    if line.len() < MIN_AXIAL_LEN {
        return Err(EnvelopeError::AxialTooShort(line.len()));
    }
    Ok(analytic_signal(line).iter().map(|z| z.norm()).collect())
}

pub fn analytic_envelope(frame: &RFFrame) -> Result<Image2D, EnvelopeError> {
    let img = &frame.image;
    let (w, h) = (img.width(), img.height());
    let (n_lines, len) = match frame.axis {
        Axis::Columns => (w, h),
        Axis::Rows => (h, w),
    };
    if len < MIN_AXIAL_LEN {
        return Err(EnvelopeError::AxialTooShort(len));
    }
    let plan = AnalyticPlan::new(len);
    let data = img.data();
    let sample = |line: usize, t: usize| match frame.axis {
        Axis::Columns => data[t * w + line],
        Axis::Rows => data[line * w + t],
    };
    let process = |line: usize| -> Vec<f64> {
        let mut buf: Vec<Complex64> = (0..len)
            .map(|t| Complex64::new(sample(line, t), 0.0))
            .collect();
        plan.apply(&mut buf);
        buf.iter().map(|z| z.norm()).collect()
    };

    #[cfg(feature = "parallel")]
    let lines: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..n_lines).into_par_iter().map(process).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let lines: Vec<Vec<f64>> = (0..n_lines).map(process).collect();

    let mut out = vec![0.0; w * h];
    for (line, env) in lines.iter().enumerate() {
        for (t, &v) in env.iter().enumerate() {
            match frame.axis {
                Axis::Columns => out[t * w + line] = v,
                Axis::Rows => out[line * w + t] = v,
            }
        }
    }
    Ok(Image2D::new(w, h, ImageKind::Envelope, out)?)
}
