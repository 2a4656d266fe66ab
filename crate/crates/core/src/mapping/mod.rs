//! Parametric Nakagami maps from envelope images.
//!
//! Three estimators share one per-voxel routine:
//!
//! * [`estimate_fixed`]: one window size everywhere.
//! * [`estimate_wmc`]: voxelwise mean of several fixed-size maps.
//! * [`estimate_mkl`]: per voxel, fit every candidate size and keep the one
//!   whose fitted CDF best matches the window's empirical CDF.
//!
//! Each window fit tries the MLE first and the moment estimator second. A
//! voxel where every candidate window fails is a defect and takes the values
//! of its nearest non-defect voxel.
//!
//! Shape values are stored at f32 precision (the on-disk precision of every
//! map), which makes the shape map insensitive to last-bit noise from scaling
//! the input. Scale values keep full precision.

mod kernel;
mod window;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kernel::{auto_kmax, KernelShape, KernelSpec, DEFAULT_MIN_SIZE, DEFAULT_STEP};
pub use window::{half_extent, window_bounds, window_samples};

use crate::grids::{GridError, Image2D, ImageKind};
use crate::nakagami::{self, NakagamiError, NakagamiParams, SampleSet, MU_MAX};

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("expected an Envelope image, got {0}")]
    WrongKind(ImageKind),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("window size {size} exceeds the limit {limit} for this image")]
    ImageTooSmall { size: usize, limit: usize },
    #[error("empty kernel set")]
    EmptyKernelSet,
    #[error("voxel ({x}, {y}) is outside the image")]
    OutOfBounds { x: usize, y: usize },
    #[error("not implemented: {0}")]
    NotImplemented(&'static str),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Nakagami(#[from] NakagamiError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fixed,
    Wmc,
    Mkl,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fixed => "fixed",
            Method::Wmc => "wmc",
            Method::Mkl => "mkl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMeta {
    pub method: Method,
    pub sizes: Vec<usize>,
    /// Voxels filled from a neighbor because no window could be fitted.
    pub defect_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricResult {
    pub mu_map: Image2D,
    pub omega_map: Image2D,
    pub scale_map: Image2D,
    pub fit_map: Image2D,
    pub meta: ResultMeta,
}

/// Fitted parameters and CDF RMSE for one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFit {
    pub params: NakagamiParams,
    pub rmse: f64,
}

/// MLE with moment fallback, scored by CDF RMSE. `None` if both estimators fail.
pub fn fit_window(values: Vec<f64>) -> Option<WindowFit> {
    let samples = SampleSet::new(values).ok()?;
    let params = match nakagami::estimate_mle(&samples) {
        Ok(fit) => fit.params,
        Err(_) => nakagami::estimate_moments(&samples).ok()?,
    };
    let quality = nakagami::fit_quality(&params, &samples).ok()?;
    Some(WindowFit {
        params,
        rmse: quality.rmse,
    })
}

/// Per-voxel output before defect filling.
#[derive(Debug, Clone, Copy, PartialEq)]
struct VoxelEstimate {
    mu: f64,
    omega: f64,
    scale: f64,
    fit: f64,
}

/// Shape value as stored in the maps.
#[inline]
pub fn store_mu(mu: f64) -> f64 {
    mu as f32 as f64
}

/// Fits every size in `sizes` at `(x, y)` and keeps the smallest RMSE; ties keep the smaller size.
fn select_voxel(
    img: &Image2D,
    x: usize,
    y: usize,
    sizes: &[usize],
    buf: &mut Vec<f64>,
) -> Option<VoxelEstimate> {
    let mut best: Option<(usize, WindowFit)> = None;
    for &size in sizes {
        window::collect_window(img, x, y, size, buf);
        let Some(fit) = fit_window(buf.clone()) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, b)| fit.rmse < b.rmse) {
            best = Some((size, fit));
        }
    }
    best.map(|(size, fit)| VoxelEstimate {
        mu: store_mu(fit.params.mu()),
        omega: fit.params.omega(),
        scale: size as f64,
        fit: fit.rmse,
    })
}

fn per_voxel<T, F>(width: usize, height: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize, &mut Vec<f64>) -> T + Sync,
{
    let run = |i: usize| {
        let mut buf = Vec::new();
        f(i % width, i / width, &mut buf)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..width * height).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..width * height).map(run).collect()
    }
}

/// Replaces defects by their nearest valid voxel (Euclidean, ties to the first in
/// row-major order). With no valid voxel at all, `fallback` supplies the value.
fn fill_defects(
    width: usize,
    voxels: Vec<Option<VoxelEstimate>>,
    fallback: impl Fn(usize, usize) -> VoxelEstimate,
) -> (Vec<VoxelEstimate>, usize) {
    let valid: Vec<usize> = voxels
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_some())
        .map(|(i, _)| i)
        .collect();
    let defects = voxels.len() - valid.len();
    let filled = voxels
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Some(v) => *v,
            None if valid.is_empty() => fallback(i % width, i / width),
            None => {
                let (x, y) = ((i % width) as i64, (i / width) as i64);
                let mut nearest = valid[0];
                let mut best = i64::MAX;
                for &j in &valid {
                    let (dx, dy) = ((j % width) as i64 - x, (j / width) as i64 - y);
                    let d = dx * dx + dy * dy;
                    if d < best {
                        best = d;
                        nearest = j;
                    }
                }
                voxels[nearest].expect("valid index")
            }
        })
        .collect();
    (filled, defects)
}

fn check_input(img: &Image2D) -> Result<(), MappingError> {
    if img.kind() != ImageKind::Envelope {
        return Err(MappingError::WrongKind(img.kind()));
    }
    Ok(())
}

fn build_result(
    img: &Image2D,
    voxels: &[VoxelEstimate],
    meta: ResultMeta,
) -> Result<ParametricResult, MappingError> {
    let (w, h) = (img.width(), img.height());
    let map = |kind, f: fn(&VoxelEstimate) -> f64| {
        Image2D::new(w, h, kind, voxels.iter().map(f).collect())
    };
    Ok(ParametricResult {
        mu_map: map(ImageKind::MuMap, |v| v.mu)?,
        omega_map: map(ImageKind::OmegaMap, |v| v.omega)?,
        scale_map: map(ImageKind::ScaleMap, |v| v.scale)?,
        fit_map: map(ImageKind::FitMap, |v| v.fit)?,
        meta,
    })
}

/// Shared driver: per-voxel selection over `sizes`, then defect filling.
fn estimate_over(
    img: &Image2D,
    sizes: &[usize],
    method: Method,
) -> Result<ParametricResult, MappingError> {
    let voxels = per_voxel(img.width(), img.height(), |x, y, buf| {
        select_voxel(img, x, y, sizes, buf)
    });
    let smallest = sizes[0];
    let (filled, defect_count) = fill_defects(img.width(), voxels, |x, y| {
        // Nothing in the image could be fitted; report the zero-variance limit.
        let mut buf = Vec::new();
        window::collect_window(img, x, y, smallest, &mut buf);
        let omega = buf.iter().map(|v| v * v).sum::<f64>() / buf.len() as f64;
        VoxelEstimate {
            mu: MU_MAX,
            omega,
            scale: smallest as f64,
            fit: 1.0,
        }
    });
    build_result(
        img,
        &filled,
        ResultMeta {
            method,
            sizes: sizes.to_vec(),
            defect_count,
        },
    )
}

/// Single window size everywhere.
pub fn estimate_fixed(img: &Image2D, size: usize) -> Result<ParametricResult, MappingError> {
    check_input(img)?;
    let spec = KernelSpec::from_sizes(vec![size])?;
    spec.validate_for(img.width(), img.height())?;
    estimate_over(img, spec.sizes(), Method::Fixed)
}

/// Windows-modulated compounding: voxelwise arithmetic mean of fixed-size maps.
pub fn estimate_wmc(img: &Image2D, sizes: &[usize]) -> Result<ParametricResult, MappingError> {
    check_input(img)?;
    if sizes.is_empty() {
        return Err(MappingError::EmptyKernelSet);
    }
    let fixed = sizes
        .iter()
        .map(|&s| estimate_fixed(img, s))
        .collect::<Result<Vec<_>, _>>()?;
    let k = fixed.len() as f64;
    let mean = |pick: fn(&ParametricResult) -> &Image2D, kind| {
        let n = img.len();
        let mut acc = vec![0.0; n];
        for r in &fixed {
            for (a, v) in acc.iter_mut().zip(pick(r).data()) {
                *a += v;
            }
        }
        Image2D::new(
            img.width(),
            img.height(),
            kind,
            acc.into_iter().map(|a| a / k).collect(),
        )
    };
    Ok(ParametricResult {
        mu_map: mean(|r| &r.mu_map, ImageKind::MuMap)?,
        omega_map: mean(|r| &r.omega_map, ImageKind::OmegaMap)?,
        scale_map: mean(|r| &r.scale_map, ImageKind::ScaleMap)?,
        fit_map: mean(|r| &r.fit_map, ImageKind::FitMap)?,
        meta: ResultMeta {
            method: Method::Wmc,
            sizes: sizes.to_vec(),
            defect_count: fixed.iter().map(|r| r.meta.defect_count).sum(),
        },
    })
}

/// Multiscale kernel localization with per-voxel window selection.
pub fn estimate_mkl(img: &Image2D, spec: &KernelSpec) -> Result<ParametricResult, MappingError> {
    check_input(img)?;
    spec.validate_for(img.width(), img.height())?;
    estimate_over(img, spec.sizes(), Method::Mkl)
}

/// CDF RMSE of every candidate size at one voxel, `None` where the fit failed.
pub fn candidate_rmse(img: &Image2D, x: usize, y: usize, spec: &KernelSpec) -> Vec<Option<f64>> {
    let mut buf = Vec::new();
    spec.sizes()
        .iter()
        .map(|&s| {
            window::collect_window(img, x, y, s, &mut buf);
            fit_window(buf.clone()).map(|f| f.rmse)
        })
        .collect()
}
