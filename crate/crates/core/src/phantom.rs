//! Synthetic envelope images with known parameter maps.
//!
//! Distribution phantoms draw every voxel directly from its region's Nakagami
//! law, so the truth maps are exact. Scatterer phantoms convolve a point
//! scatterer field with a pulse and detect the envelope; their truth is the
//! MLE fit over each whole region of the generated envelope.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope::{analytic_envelope, Axis, EnvelopeError, RFFrame};
use crate::grids::{GridError, Image2D, ImageKind};
use crate::nakagami::{self, NakagamiError, NakagamiParams, SampleSet};
use crate::rng::{substream, Domain};

pub const MIN_DENSITY: f64 = 0.001;
pub const MAX_DENSITY: f64 = 1.0;
/// Scatterer amplitudes are 1 ± this fraction, uniformly.
pub const AMPLITUDE_JITTER: f64 = 0.2;
/// PSF support in standard deviations.
const PSF_SUPPORT: f64 = 4.0;

#[derive(Debug, Error)]
pub enum PhantomError {
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
    #[error("scatterer density {0} outside [{MIN_DENSITY}, {MAX_DENSITY}]")]
    DensityOutOfRange(f64),
    #[error("region {label} could not be fitted: {source}")]
    RegionFit { label: usize, source: NakagamiError },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl Disk {
    /// Disk centred in a `width`×`height` image.
    pub fn centered(width: usize, height: usize, radius: f64) -> Self {
        Self {
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
            radius,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arrangement {
    Random,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScattererParams {
    /// Scatterers per voxel.
    pub density: f64,
    pub arrangement: Arrangement,
}

/// Gaussian-modulated cosine axially, Gaussian laterally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psf {
    /// Cycles per voxel along the axial direction.
    pub center_freq: f64,
    pub axial_sigma: f64,
    pub lateral_sigma: f64,
}

impl Default for Psf {
    fn default() -> Self {
        Self {
            center_freq: 0.25,
            axial_sigma: 2.0,
            lateral_sigma: 1.5,
        }
    }
}

impl Psf {
    /// Axial wavelength in voxels.
    pub fn wavelength(&self) -> f64 {
        1.0 / self.center_freq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Homogeneous(NakagamiParams),
    /// Label 0 outside the disk, 1 inside.
    TwoRegionDisk {
        background: NakagamiParams,
        inclusion: NakagamiParams,
        disk: Disk,
    },
    /// Labels 0..4: top-left, top-right, bottom-left, bottom-right.
    QuadrantGrid([NakagamiParams; 4]),
    ScattererField {
        background: ScattererParams,
        inclusion: Option<(Disk, ScattererParams)>,
        psf: Psf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub layout: Layout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthKind {
    /// Region parameters used for sampling.
    Exact,
    /// Per-region MLE on the generated envelope.
    RegionalMle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomTruth {
    pub envelope: Image2D,
    pub truth_mu: Image2D,
    pub truth_omega: Image2D,
    pub labels: Image2D,
    pub truth_kind: TruthKind,
    /// Pre-detection RF, scatterer phantoms only.
    pub rf: Option<Image2D>,
}

pub fn generate(spec: &PhantomSpec) -> Result<PhantomTruth, PhantomError> {
    match spec.layout {
        Layout::ScattererField { .. } => generate_scatterer_phantom(spec),
        _ => generate_distribution_phantom(spec),
    }
}

fn check_dims(spec: &PhantomSpec) -> Result<(), PhantomError> {
    if spec.width == 0 || spec.height == 0 {
        return Err(PhantomError::InvalidSpec(
            "dimensions must be positive".into(),
        ));
    }
    Ok(())
}

fn check_disk(spec: &PhantomSpec, disk: &Disk) -> Result<(), PhantomError> {
    let limit = spec.width.min(spec.height) as f64 / 2.0;
    if !(disk.radius > 0.0 && disk.radius < limit) {
        return Err(PhantomError::InvalidSpec(format!(
            "radius {} must lie in (0, {limit})",
            disk.radius
        )));
    }
    Ok(())
}

/// Region label of voxel `(x, y)` and that region's parameters.
fn region_of(spec: &PhantomSpec, x: usize, y: usize) -> (usize, NakagamiParams) {
    match &spec.layout {
        Layout::Homogeneous(p) => (0, *p),
        Layout::TwoRegionDisk {
            background,
            inclusion,
            disk,
        } => {
            if disk.contains(x as f64, y as f64) {
                (1, *inclusion)
            } else {
                (0, *background)
            }
        }
        Layout::QuadrantGrid(params) => {
            let label = usize::from(x >= spec.width / 2) + 2 * usize::from(y >= spec.height / 2);
            (label, params[label])
        }
        Layout::ScattererField { .. } => unreachable!("distribution layouts only"),
    }
}

/// Voxelwise independent Nakagami draws, one counter-keyed stream per voxel.
pub fn generate_distribution_phantom(spec: &PhantomSpec) -> Result<PhantomTruth, PhantomError> {
    check_dims(spec)?;
    match &spec.layout {
        Layout::ScattererField { .. } => {
            return Err(PhantomError::InvalidSpec(
                "scatterer layout needs generate_scatterer_phantom".into(),
            ))
        }
        Layout::TwoRegionDisk { disk, .. } => check_disk(spec, disk)?,
        _ => {}
    }
    let (w, h) = (spec.width, spec.height);
    let mut env = Vec::with_capacity(w * h);
    let mut mu = Vec::with_capacity(w * h);
    let mut omega = Vec::with_capacity(w * h);
    let mut labels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (label, p) = region_of(spec, x, y);
            let mut rng = substream(spec.seed, Domain::Voxel, x as u64, y as u64);
            env.push(nakagami::draw(&nakagami::sampler(&p), &mut rng));
            mu.push(p.mu());
            omega.push(p.omega());
            labels.push(label as f64);
        }
    }
    Ok(PhantomTruth {
        envelope: Image2D::new(w, h, ImageKind::Envelope, env)?,
        truth_mu: Image2D::new(w, h, ImageKind::MuMap, mu)?,
        truth_omega: Image2D::new(w, h, ImageKind::OmegaMap, omega)?,
        labels: Image2D::new(w, h, ImageKind::Label, labels)?,
        truth_kind: TruthKind::Exact,
        rf: None,
    })
}

#[derive(Debug, Clone, Copy)]
struct Scatterer {
    x: f64,
    y: f64,
    amplitude: f64,
}

fn jittered_amplitude<R: Rng>(rng: &mut R) -> f64 {
    1.0 + rng.random_range(-AMPLITUDE_JITTER..=AMPLITUDE_JITTER)
}

/// Scatterers of one region over the padded domain `[x0, x1) × [y0, y1)`.
fn place_scatterers(
    seed: u64,
    region: u64,
    params: &ScattererParams,
    psf: &Psf,
    domain: (f64, f64, f64, f64),
    keep: impl Fn(f64, f64) -> bool,
) -> Vec<Scatterer> {
    let (x0, x1, y0, y1) = domain;
    let mut out = Vec::new();
    match params.arrangement {
        Arrangement::Random => {
            let count = (params.density * (x1 - x0) * (y1 - y0)).round() as u64;
            for k in 0..count {
                let mut rng = substream(seed, Domain::Scatterers, region, k);
                let x = rng.random_range(x0..x1);
                let y = rng.random_range(y0..y1);
                let amplitude = jittered_amplitude(&mut rng);
                if keep(x, y) {
                    out.push(Scatterer { x, y, amplitude });
                }
            }
        }
        Arrangement::Periodic => {
            // Axial spacing of one wavelength so the lattice echoes add in phase.
            let axial = psf.wavelength();
            let lateral = (1.0 / (params.density * axial)).round().max(1.0);
            let mut rng = substream(seed, Domain::Scatterers, region, u64::MAX);
            let ox = x0 + rng.random_range(0.0..lateral);
            let oy = y0 + rng.random_range(0.0..axial);
            let cols = ((x1 - ox) / lateral).ceil() as u64;
            let rows = ((y1 - oy) / axial).ceil() as u64;
            for j in 0..rows {
                for i in 0..cols {
                    let (x, y) = (ox + i as f64 * lateral, oy + j as f64 * axial);
                    let mut rng = substream(seed, Domain::Scatterers, region, j * cols + i);
                    let amplitude = jittered_amplitude(&mut rng);
                    if x < x1 && y < y1 && keep(x, y) {
                        out.push(Scatterer { x, y, amplitude });
                    }
                }
            }
        }
    }
    out
}

/// Sums every scatterer's pulse into a `width`×`height` RF image (axial = y).
fn synthesize_rf(width: usize, height: usize, scatterers: &[Scatterer], psf: &Psf) -> Vec<f64> {
    let mut rf = vec![0.0; width * height];
    let reach_x = (PSF_SUPPORT * psf.lateral_sigma).ceil();
    let reach_y = (PSF_SUPPORT * psf.axial_sigma).ceil();
    let (ka, kl) = (
        -0.5 / (psf.axial_sigma * psf.axial_sigma),
        -0.5 / (psf.lateral_sigma * psf.lateral_sigma),
    );
    let omega = 2.0 * PI * psf.center_freq;
    let span = |c: f64, reach: f64, len: usize| {
        let lo = (c - reach).ceil().max(0.0);
        let hi = (c + reach).floor().min(len as f64 - 1.0);
        (lo <= hi).then_some(lo as usize..=hi as usize)
    };
    for s in scatterers {
        let (Some(xs), Some(ys)) = (span(s.x, reach_x, width), span(s.y, reach_y, height)) else {
            continue;
        };
        for y in ys {
            let dy = y as f64 - s.y;
            let axial = s.amplitude * (ka * dy * dy).exp() * (omega * dy).cos();
            for x in xs.clone() {
                let dx = x as f64 - s.x;
                rf[y * width + x] += axial * (kl * dx * dx).exp();
            }
        }
    }
    rf
}

/// Point scatterers convolved with the PSF, then envelope-detected along columns.
pub fn generate_scatterer_phantom(spec: &PhantomSpec) -> Result<PhantomTruth, PhantomError> {
    check_dims(spec)?;
    let Layout::ScattererField {
        background,
        inclusion,
        psf,
    } = &spec.layout
    else {
        return Err(PhantomError::InvalidSpec(
            "distribution layout needs generate_distribution_phantom".into(),
        ));
    };
    for p in std::iter::once(background).chain(inclusion.as_ref().map(|(_, p)| p)) {
        if !(MIN_DENSITY..=MAX_DENSITY).contains(&p.density) {
            return Err(PhantomError::DensityOutOfRange(p.density));
        }
    }
    if let Some((disk, _)) = inclusion {
        check_disk(spec, disk)?;
    }
    if !(psf.center_freq > 0.0
        && psf.center_freq < 0.5
        && psf.axial_sigma > 0.0
        && psf.lateral_sigma > 0.0)
    {
        return Err(PhantomError::InvalidSpec(format!("invalid psf {psf:?}")));
    }
    let (w, h) = (spec.width, spec.height);
    let margin = (PSF_SUPPORT * psf.axial_sigma.max(psf.lateral_sigma)).ceil() + 1.0;
    let domain = (-margin, w as f64 + margin, -margin, h as f64 + margin);
    let disk = inclusion.as_ref().map(|(d, _)| *d);
    let inside = |x: f64, y: f64| disk.is_some_and(|d| d.contains(x, y));

    let mut scatterers =
        place_scatterers(spec.seed, 0, background, psf, domain, |x, y| !inside(x, y));
    if let Some((_, params)) = inclusion {
        scatterers.extend(place_scatterers(spec.seed, 1, params, psf, domain, inside));
    }
    let rf = Image2D::new(w, h, ImageKind::RF, synthesize_rf(w, h, &scatterers, psf))?;
    let envelope = analytic_envelope(&RFFrame::new(rf.clone(), Axis::Columns)?)?;

    let labels: Vec<usize> = (0..w * h)
        .map(|i| usize::from(inside((i % w) as f64, (i / w) as f64)))
        .collect();
    let n_regions = if inclusion.is_some() { 2 } else { 1 };
    let mut fits = Vec::with_capacity(n_regions);
    for label in 0..n_regions {
        let values: Vec<f64> = envelope
            .data()
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == label)
            .map(|(&v, _)| v)
            .collect();
        fits.push(region_fit(label, values)?);
    }
    Ok(PhantomTruth {
        truth_mu: Image2D::new(
            w,
            h,
            ImageKind::MuMap,
            labels.iter().map(|&l| fits[l].mu()).collect(),
        )?,
        truth_omega: Image2D::new(
            w,
            h,
            ImageKind::OmegaMap,
            labels.iter().map(|&l| fits[l].omega()).collect(),
        )?,
        labels: Image2D::new(
            w,
            h,
            ImageKind::Label,
            labels.iter().map(|&l| l as f64).collect(),
        )?,
        envelope,
        truth_kind: TruthKind::RegionalMle,
        rf: Some(rf),
    })
}

fn region_fit(label: usize, values: Vec<f64>) -> Result<NakagamiParams, PhantomError> {
    let samples =
        SampleSet::new(values).map_err(|source| PhantomError::RegionFit { label, source })?;
    nakagami::estimate_mle(&samples)
        .map(|f| f.params)
        .or_else(|_| nakagami::estimate_moments(&samples))
        .map_err(|source| PhantomError::RegionFit { label, source })
}

/// MLE of the envelope restricted to one label.
pub fn region_mle(truth: &PhantomTruth, label: usize) -> Result<NakagamiParams, PhantomError> {
    let values: Vec<f64> = truth
        .envelope
        .data()
        .iter()
        .zip(truth.labels.data())
        .filter(|(_, &l)| l as usize == label)
        .map(|(&v, _)| v)
        .collect();
    region_fit(label, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn np(mu: f64, omega: f64) -> NakagamiParams {
        NakagamiParams::new(mu, omega).unwrap()
    }

    fn scatter_spec(seed: u64, density: f64, arrangement: Arrangement) -> PhantomSpec {
        PhantomSpec {
            width: 64,
            height: 64,
            seed,
            layout: Layout::ScattererField {
                background: ScattererParams {
                    density,
                    arrangement,
                },
                inclusion: None,
                psf: Psf::default(),
            },
        }
    }

    #[test]
    fn homogeneous_second_moment() {
        let spec = PhantomSpec {
            width: 64,
            height: 64,
            seed: 7,
            layout: Layout::Homogeneous(np(1.0, 1.0)),
        };
        let t = generate(&spec).unwrap();
        let m2 = t.envelope.data().iter().map(|v| v * v).sum::<f64>() / 4096.0;
        assert!((0.93..=1.07).contains(&m2), "{m2}");
        assert_eq!(t.truth_kind, TruthKind::Exact);
        assert!(t.labels.data().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn disk_truth_is_constructive_and_deterministic() {
        let disk = Disk::centered(48, 40, 10.0);
        let spec = PhantomSpec {
            width: 48,
            height: 40,
            seed: 3,
            layout: Layout::TwoRegionDisk {
                background: np(0.8, 1.0),
                inclusion: np(1.5, 2.0),
                disk,
            },
        };
        let t = generate(&spec).unwrap();
        for y in 0..40 {
            for x in 0..48 {
                let inside = disk.contains(x as f64, y as f64);
                assert_eq!(t.truth_mu.get(x, y), if inside { 1.5 } else { 0.8 });
                assert_eq!(t.truth_omega.get(x, y), if inside { 2.0 } else { 1.0 });
                assert_eq!(t.labels.get(x, y), if inside { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(generate(&spec).unwrap(), t);
        let too_big = PhantomSpec {
            layout: Layout::TwoRegionDisk {
                background: np(1.0, 1.0),
                inclusion: np(1.0, 1.0),
                disk: Disk::centered(48, 40, 20.0),
            },
            ..spec
        };
        assert!(matches!(
            generate(&too_big),
            Err(PhantomError::InvalidSpec(_))
        ));
    }

    #[test]
    fn quadrant_regions_recover_shape() {
        let params = [np(0.5, 1.0), np(1.0, 1.0), np(2.0, 1.0), np(4.0, 3.0)];
        let spec = PhantomSpec {
            width: 128,
            height: 128,
            seed: 11,
            layout: Layout::QuadrantGrid(params),
        };
        let t = generate(&spec).unwrap();
        assert_eq!(t.labels.get(0, 0), 0.0);
        assert_eq!(t.labels.get(127, 0), 1.0);
        assert_eq!(t.labels.get(0, 127), 2.0);
        assert_eq!(t.labels.get(127, 127), 3.0);
        for (label, p) in params.iter().enumerate() {
            let fit = region_mle(&t, label).unwrap();
            assert!(
                (fit.mu() - p.mu()).abs() <= 0.1 * p.mu().max(1.0),
                "label {label}: {}",
                fit.mu()
            );
        }
    }

    #[test]
    fn scatterer_phantom_is_deterministic_and_nonnegative() {
        let spec = scatter_spec(5, 0.3, Arrangement::Random);
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        assert!(a.envelope.data().iter().all(|&v| v >= 0.0));
        assert_eq!(a.truth_kind, TruthKind::RegionalMle);
        let rf = a.rf.as_ref().unwrap();
        for (e, r) in a.envelope.data().iter().zip(rf.data()) {
            assert!(*e >= r.abs() - 1e-9);
        }
    }

    #[test]
    fn density_bounds() {
        assert!(matches!(
            generate(&scatter_spec(1, 2.0, Arrangement::Random)),
            Err(PhantomError::DensityOutOfRange(_))
        ));
        assert!(matches!(
            generate(&scatter_spec(1, 0.0005, Arrangement::Periodic)),
            Err(PhantomError::DensityOutOfRange(_))
        ));
    }

    #[test]
    fn scattering_regimes_order() {
        let dense = generate(&scatter_spec(42, 0.5, Arrangement::Random))
            .unwrap()
            .truth_mu
            .get(0, 0);
        let sparse = generate(&scatter_spec(42, 0.005, Arrangement::Random))
            .unwrap()
            .truth_mu
            .get(0, 0);
        let periodic = generate(&scatter_spec(42, 0.5, Arrangement::Periodic))
            .unwrap()
            .truth_mu
            .get(0, 0);
        assert!((0.7..=1.3).contains(&dense), "dense {dense}");
        assert!(sparse < dense, "sparse {sparse} dense {dense}");
        assert!(periodic > dense, "periodic {periodic} dense {dense}");
    }
}
