//! Independent reference computations for tests. Nothing here calls into the
//! mapping code; the Nakagami density is re-derived from its closed form.

#![allow(dead_code)]

use nakamap::nakagami::{self, SampleSet};
use nakamap::Image2D;

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 60)
}

/// Closed-form Nakagami density with Γ from a Stirling series (independent of the crate's Lanczos).
pub fn density(mu: f64, omega: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if mu == 0.5 {
            2.0 * (mu / omega).powf(mu) / gamma_fn(mu)
        } else if mu > 0.5 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    2.0 * (mu / omega).powf(mu) / gamma_fn(mu)
        * x.powf(2.0 * mu - 1.0)
        * (-(mu / omega) * x * x).exp()
}

/// Γ(z) via upward shift and Stirling's series.
pub fn gamma_fn(z: f64) -> f64 {
    let mut shift = 1.0;
    let mut w = z;
    while w < 15.0 {
        shift *= w;
        w += 1.0;
    }
    let series = 1.0 / (12.0 * w) - 1.0 / (360.0 * w.powi(3)) + 1.0 / (1260.0 * w.powi(5))
        - 1.0 / (1680.0 * w.powi(7));
    let ln = (w - 0.5) * w.ln() - w + 0.5 * (2.0 * std::f64::consts::PI).ln() + series;
    ln.exp() / shift
}

/// Upper integration limit beyond which the density's mass is below 1e-15.
pub fn upper_limit(mu: f64, omega: f64) -> f64 {
    (omega / mu * (mu + 40.0 + 12.0 * mu.sqrt())).sqrt()
}

/// ∫₀ˣ density by quadrature.
pub fn cdf_by_quadrature(mu: f64, omega: f64, x: f64) -> f64 {
    integrate(&|t| density(mu, omega, t), 0.0, x, 1e-13)
}

/// Root of a nondecreasing function by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, target: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-voxel maps from a direct loop over voxels and candidate sizes.
pub struct NaiveMaps {
    pub mu: Vec<f64>,
    pub omega: Vec<f64>,
    pub scale: Vec<f64>,
    pub fit: Vec<f64>,
    pub defects: usize,
}

/// Straight re-implementation of multiscale window selection: half-extent
/// ⌈(m+2)/2⌉, border truncation, MLE with moment fallback, CDF-RMSE argmin
/// with ties to the smaller size, nearest-valid defect fill, f32 shape storage.
pub fn naive_mkl(img: &Image2D, sizes: &[usize]) -> NaiveMaps {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut cells: Vec<Option<(f64, f64, f64, f64)>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let mut best: Option<(f64, f64, f64, f64)> = None;
            for &m in sizes {
                let a = ((m as f64 + 2.0) / 2.0).ceil() as i64;
                let mut vals = Vec::new();
                for yy in (y - a)..=(y + a) {
                    for xx in (x - a)..=(x + a) {
                        if xx >= 0 && yy >= 0 && xx < w && yy < h {
                            vals.push(img.get(xx as usize, yy as usize));
                        }
                    }
                }
                let s = SampleSet::new(vals).unwrap();
                let params = match nakagami::estimate_mle(&s) {
                    Ok(f) => f.params,
                    Err(_) => match nakagami::estimate_moments(&s) {
                        Ok(p) => p,
                        Err(_) => continue,
                    },
                };
                let rmse = nakagami::fit_quality(&params, &s).unwrap().rmse;
                let better = match best {
                    None => true,
                    Some((_, _, _, r)) => rmse < r,
                };
                if better {
                    best = Some((params.mu() as f32 as f64, params.omega(), m as f64, rmse));
                }
            }
            cells.push(best);
        }
    }
    let mut defects = 0;
    let mut out = Vec::with_capacity(cells.len());
    for i in 0..cells.len() as i64 {
        match cells[i as usize] {
            Some(c) => out.push(c),
            None => {
                defects += 1;
                let mut pick = None;
                let mut best_d = i64::MAX;
                for j in 0..cells.len() as i64 {
                    if cells[j as usize].is_some() {
                        let d = (j % w - i % w).pow(2) + (j / w - i / w).pow(2);
                        if d < best_d {
                            best_d = d;
                            pick = cells[j as usize];
                        }
                    }
                }
                out.push(pick.expect("test images have at least one valid voxel"));
            }
        }
    }
    NaiveMaps {
        mu: out.iter().map(|c| c.0).collect(),
        omega: out.iter().map(|c| c.1).collect(),
        scale: out.iter().map(|c| c.2).collect(),
        fit: out.iter().map(|c| c.3).collect(),
        defects,
    }
}

/// Mean absolute difference.
pub fn mad(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}
