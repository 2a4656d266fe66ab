//! Fixed phantom suite run through every estimator.

use anyhow::Context;
use serde::Serialize;

use nakamap::evaluation;
use nakamap::mapping::{KernelSpec, Method, DEFAULT_MIN_SIZE, DEFAULT_STEP};
use nakamap::nakagami::NakagamiParams;
use nakamap::phantom::{self, Disk, Layout, PhantomSpec};

use crate::{fmt_sig6, run_method, timed, BenchArgs, BenchRow, Stage, StageError};

pub const FIXED_WINDOW: usize = 3;
pub const WMC_WINDOWS: [usize; 3] = [7, 9, 11];

fn np(mu: f64) -> NakagamiParams {
    NakagamiParams::new(mu, 1.0).expect("suite parameters are valid")
}

/// Homogeneous Rayleigh field, centred disk and four quadrants.
pub fn suite(size: usize) -> Vec<(&'static str, Layout)> {
    vec![
        ("homogeneous", Layout::Homogeneous(np(1.0))),
        (
            "disk",
            Layout::TwoRegionDisk {
                background: np(0.8),
                inclusion: np(1.5),
                disk: Disk::centered(size, size, size as f64 / 4.0),
            },
        ),
        (
            "quadrants",
            Layout::QuadrantGrid([np(0.5), np(1.0), np(1.5), np(2.0)]),
        ),
    ]
}

#[derive(Serialize)]
struct BenchReport<'a> {
    seed: u64,
    size: usize,
    rows: &'a [BenchRow],
}

pub fn rows(seed: u64, size: usize) -> Result<Vec<BenchRow>, StageError> {
    let mut rows = Vec::new();
    for (name, layout) in suite(size) {
        let truth = phantom::generate(&PhantomSpec {
            width: size,
            height: size,
            seed,
            layout,
        })
        .with_context(|| format!("phantom {name}"))
        .stage("bench")?;
        for method in [Method::Fixed, Method::Wmc, Method::Mkl] {
            let (result, ms) = timed(|| {
                run_method(
                    &truth.envelope,
                    method,
                    FIXED_WINDOW,
                    &WMC_WINDOWS,
                    DEFAULT_MIN_SIZE,
                    None,
                    DEFAULT_STEP,
                )
            });
            let result = result
                .with_context(|| format!("{name}/{}", method.as_str()))
                .stage("bench")?;
            let report =
                evaluation::evaluate(&result.mu_map, &truth.truth_mu, None).stage("bench")?;
            rows.push(BenchRow {
                phantom: name.to_string(),
                method: method.as_str().to_string(),
                sizes: result.meta.sizes.clone(),
                mad: report.mad,
                rmse: report.rmse,
                defect_count: result.meta.defect_count,
                runtime_ms: ms,
            });
        }
    }
    Ok(rows)
}

/// Deterministic table; runtimes only go to the JSON report.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("phantom,method,mad,rmse\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.phantom,
            r.method,
            fmt_sig6(r.mad),
            fmt_sig6(r.rmse)
        ));
    }
    out
}

pub fn run(a: BenchArgs) -> Result<(), StageError> {
    KernelSpec::auto(a.size, a.size)
        .context("suite size")
        .stage("bench")?;
    let rows = rows(a.seed, a.size)?;
    std::fs::write(&a.out_csv, to_csv(&rows))
        .with_context(|| format!("writing {}", a.out_csv.display()))
        .stage("bench")?;
    if let Some(path) = &a.out_json {
        let json = serde_json::to_string_pretty(&BenchReport {
            seed: a.seed,
            size: a.size,
            rows: &rows,
        })
        .expect("report serializes");
        std::fs::write(path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .stage("bench")?;
    }
    Ok(())
}
