//! Browser bindings: generate a phantom, map it with one of the estimators,
//! and plot the Nakagami density.

use wasm_bindgen::prelude::*;

use nakamap::evaluation;
use nakamap::grids::{self, Image2D};
use nakamap::mapping::{self, KernelSpec};
use nakamap::nakagami::{self, NakagamiParams};
use nakamap::phantom::{
    self, Arrangement, Disk, Layout, PhantomSpec, PhantomTruth, Psf, ScattererParams,
};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Gray RGBA bytes for an `ImageData` buffer.
fn rgba(img: &Image2D, lo: f64, hi: f64) -> Vec<u8> {
    let (lo, hi) = if lo < hi {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let gray = grids::render_gray(img, lo, hi).expect("range is nondegenerate");
    gray.pixels.iter().flat_map(|&g| [g, g, g, 255]).collect()
}

fn auto_rgba(img: &Image2D) -> Vec<u8> {
    rgba(
        img,
        grids::percentile(img.data(), 1.0),
        grids::percentile(img.data(), 99.0),
    )
}

#[wasm_bindgen]
pub struct Phantom {
    truth: PhantomTruth,
}

#[wasm_bindgen]
impl Phantom {
    pub fn width(&self) -> usize {
        self.truth.envelope.width()
    }

    pub fn height(&self) -> usize {
        self.truth.envelope.height()
    }

    pub fn envelope_rgba(&self) -> Vec<u8> {
        auto_rgba(&self.truth.envelope)
    }

    /// Ground-truth shape map on a fixed 0..3 scale.
    pub fn truth_rgba(&self) -> Vec<u8> {
        rgba(&self.truth.truth_mu, 0.0, MU_DISPLAY_MAX)
    }

    /// Runs `method` ("fixed", "wmc" or "mkl"); `window` is the fixed-method size.
    pub fn estimate(&self, method: &str, window: usize) -> Result<Estimate, JsError> {
        let env = &self.truth.envelope;
        let r = match method {
            "fixed" => mapping::estimate_fixed(env, window),
            "wmc" => mapping::estimate_wmc(env, &[7, 9, 11]),
            "mkl" => KernelSpec::auto(env.width(), env.height())
                .and_then(|s| mapping::estimate_mkl(env, &s)),
            other => return Err(JsError::new(&format!("unknown method {other}"))),
        }
        .map_err(js_err)?;
        let report = evaluation::evaluate(&r.mu_map, &self.truth.truth_mu, None).map_err(js_err)?;
        let sizes = &r.meta.sizes;
        Ok(Estimate {
            mu: rgba(&r.mu_map, 0.0, MU_DISPLAY_MAX),
            scale: rgba(
                &r.scale_map,
                sizes[0] as f64,
                *sizes.last().expect("nonempty") as f64,
            ),
            mad: report.mad,
            mean_mu: r.mu_map.data().iter().sum::<f64>() / r.mu_map.len() as f64,
        })
    }
}

const MU_DISPLAY_MAX: f64 = 3.0;

#[wasm_bindgen]
pub struct Estimate {
    mu: Vec<u8>,
    scale: Vec<u8>,
    mad: f64,
    mean_mu: f64,
}

#[wasm_bindgen]
impl Estimate {
    pub fn mu_rgba(&self) -> Vec<u8> {
        self.mu.clone()
    }

    /// Selected window size per voxel, smallest black.
    pub fn scale_rgba(&self) -> Vec<u8> {
        self.scale.clone()
    }

    pub fn mad(&self) -> f64 {
        self.mad
    }

    pub fn mean_mu(&self) -> f64 {
        self.mean_mu
    }
}

/// `layout` is "disk", "quadrants" or "scatterers". For scatterers, `mu_bg` and
/// `mu_in` are read as background and inclusion densities.
#[wasm_bindgen]
pub fn simulate(
    layout: &str,
    size: usize,
    seed: u32,
    mu_bg: f64,
    mu_in: f64,
) -> Result<Phantom, JsError> {
    let p = |mu: f64| NakagamiParams::new(mu, 1.0).map_err(js_err);
    let disk = Disk::centered(size, size, size as f64 / 4.0);
    let layout = match layout {
        "disk" => Layout::TwoRegionDisk {
            background: p(mu_bg)?,
            inclusion: p(mu_in)?,
            disk,
        },
        "quadrants" => Layout::QuadrantGrid([p(mu_bg)?, p(mu_in)?, p(mu_in)?, p(mu_bg)?]),
        "scatterers" => {
            let region = |density| ScattererParams {
                density,
                arrangement: Arrangement::Random,
            };
            Layout::ScattererField {
                background: region(mu_bg),
                inclusion: Some((disk, region(mu_in))),
                psf: Psf::default(),
            }
        }
        other => return Err(JsError::new(&format!("unknown layout {other}"))),
    };
    let truth = phantom::generate(&PhantomSpec {
        width: size,
        height: size,
        seed: seed.into(),
        layout,
    })
    .map_err(js_err)?;
    Ok(Phantom { truth })
}

/// `n` evenly spaced density values on `[0, x_max]`.
#[wasm_bindgen]
pub fn pdf_curve(mu: f64, omega: f64, x_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let p = NakagamiParams::new(mu, omega).map_err(js_err)?;
    let step = x_max / (n.max(2) - 1) as f64;
    (0..n)
        .map(|i| {
            nakagami::pdf(&p, i as f64 * step)
                .map(|v| v.min(1e6))
                .map_err(js_err)
        })
        .collect()
}
