//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::process::Command;
use std::time::{Duration, Instant};

use nakamap::envelope;
use nakamap::mapping::{self, KernelSpec};
use nakamap::nakagami::{self, NakagamiParams};
use nakamap::phantom::{self, Arrangement, Disk, Layout, PhantomSpec, Psf, ScattererParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Estimator = fn(&nakamap::Image2D, &KernelSpec) -> mapping::ParametricResult;

fn np(mu: f64, omega: f64) -> NakagamiParams {
    NakagamiParams::new(mu, omega).unwrap()
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

const PDF_AT_ONE_TOL: f64 = 1e-12;
const INTEGRAL_TOL: f64 = 1e-8;
const CDF_TOL: f64 = 1e-8;

fn distribution_math() -> Outcome {
    let got = nakagami::pdf(&np(1.0, 1.0), 1.0).unwrap();
    let want = 2.0 * (-1.0f64).exp();
    ensure(
        (got - want).abs() <= PDF_AT_ONE_TOL,
        format!("pdf(1,1,1) = {got}, want {want}"),
    )?;
    let grid = [
        (0.5, 1.0),
        (0.8, 0.5),
        (1.0, 1.0),
        (1.5, 2.0),
        (3.0, 0.7),
        (10.0, 4.0),
    ];
    let mut worst_int = 0.0f64;
    for &(mu, omega) in &grid {
        let p = np(mu, omega);
        let total = oracle::integrate(
            &|x| nakagami::pdf(&p, x).unwrap(),
            0.0,
            oracle::upper_limit(mu, omega),
            1e-12,
        );
        worst_int = worst_int.max((total - 1.0).abs());
    }
    ensure(
        worst_int < INTEGRAL_TOL,
        format!("pdf integral off by {worst_int:e}"),
    )?;
    let p = np(1.5, 2.0);
    let mut worst_cdf = 0.0f64;
    for i in 1..=20 {
        let x = i as f64 * 0.15;
        let d = (nakagami::cdf(&p, x).unwrap() - oracle::cdf_by_quadrature(1.5, 2.0, x)).abs();
        worst_cdf = worst_cdf.max(d);
    }
    ensure(
        worst_cdf < CDF_TOL,
        format!("cdf vs quadrature off by {worst_cdf:e}"),
    )?;
    Ok(format!(
        "pdf(1,1,1) err {:.1e}, integral err {worst_int:.1e}, cdf err {worst_cdf:.1e}",
        (got - want).abs()
    ))
}

const MU_REL_TOL: f64 = 0.03;
const OMEGA_REL_TOL: f64 = 0.02;

fn mle_consistency() -> Outcome {
    let (mut worst_mu, mut worst_omega) = (0.0f64, 0.0f64);
    for (k, mu) in [0.5, 1.0, 2.0, 4.0].into_iter().enumerate() {
        for (j, omega) in [0.5, 2.0].into_iter().enumerate() {
            let s = nakagami::sample(&np(mu, omega), 100_000, 20_000 + (k * 2 + j) as u64).unwrap();
            let fit = nakagami::estimate_mle(&s)
                .map_err(|e| e.to_string())?
                .params;
            worst_mu = worst_mu.max((fit.mu() - mu).abs() / mu);
            worst_omega = worst_omega.max((fit.omega() - omega).abs() / omega);
        }
    }
    ensure(
        worst_mu <= MU_REL_TOL && worst_omega <= OMEGA_REL_TOL,
        format!("rel err mu {worst_mu:.4}, omega {worst_omega:.4}"),
    )?;
    Ok(format!(
        "worst rel err mu {worst_mu:.4}, omega {worst_omega:.4}"
    ))
}

fn mle_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut min_gap = f64::INFINITY;
    for case in 0..100u64 {
        let p = np(rng.random_range(0.3..5.0), rng.random_range(0.2..3.0));
        let s = nakagami::sample(&p, 64, 30_000 + case).unwrap();
        let mle = nakagami::estimate_mle(&s)
            .map_err(|e| e.to_string())?
            .params;
        let mom = nakagami::estimate_moments(&s).map_err(|e| e.to_string())?;
        let gap = nakagami::log_likelihood(&mle, &s) - nakagami::log_likelihood(&mom, &s);
        ensure(
            gap >= 0.0,
            format!("case {case}: MLE log-likelihood below moments by {}", -gap),
        )?;
        min_gap = min_gap.min(gap);
    }
    Ok(format!("100/100 cases, smallest gap {min_gap:.2e}"))
}

fn disk_phantom(size: usize, seed: u64) -> phantom::PhantomTruth {
    let layout = Layout::TwoRegionDisk {
        background: np(0.8, 1.0),
        inclusion: np(1.5, 1.0),
        disk: Disk::centered(size, size, size as f64 / 4.0),
    };
    phantom::generate(&PhantomSpec {
        width: size,
        height: size,
        seed,
        layout,
    })
    .unwrap()
}

fn oracle_equivalence() -> Outcome {
    let env = disk_phantom(16, 4).envelope;
    let got = mapping::estimate_mkl(&env, &KernelSpec::from_sizes(vec![3, 5]).unwrap())
        .map_err(|e| e.to_string())?;
    let want = oracle::naive_mkl(&env, &[3, 5]);
    let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
    ensure(same(got.mu_map.data(), &want.mu), "mu map differs".into())?;
    ensure(
        same(got.omega_map.data(), &want.omega),
        "omega map differs".into(),
    )?;
    ensure(
        same(got.scale_map.data(), &want.scale),
        "scale map differs".into(),
    )?;
    ensure(
        same(got.fit_map.data(), &want.fit),
        "fit map differs".into(),
    )?;
    Ok("mu, omega, scale and fit maps bitwise equal on 16x16".into())
}

const DISK_SEED: u64 = 42;
const MKL_MAD_LIMIT: f64 = 0.25;

fn table_analogue() -> Outcome {
    let t = disk_phantom(96, DISK_SEED);
    let fixed = mapping::estimate_fixed(&t.envelope, 3).map_err(|e| e.to_string())?;
    let spec = KernelSpec::auto(96, 96).unwrap();
    let mkl = mapping::estimate_mkl(&t.envelope, &spec).map_err(|e| e.to_string())?;
    let f = oracle::mad(fixed.mu_map.data(), t.truth_mu.data());
    let m = oracle::mad(mkl.mu_map.data(), t.truth_mu.data());
    ensure(
        m <= f && m <= MKL_MAD_LIMIT,
        format!("mkl MAD {m:.4}, fixed(3) MAD {f:.4}"),
    )?;
    Ok(format!(
        "mkl MAD {m:.4} <= fixed(3) MAD {f:.4}, limit {MKL_MAD_LIMIT}"
    ))
}

fn wmc_identity() -> Outcome {
    let env = disk_phantom(64, 6).envelope;
    let wmc = mapping::estimate_wmc(&env, &[7, 9]).map_err(|e| e.to_string())?;
    let a = mapping::estimate_fixed(&env, 7).map_err(|e| e.to_string())?;
    let b = mapping::estimate_fixed(&env, 9).map_err(|e| e.to_string())?;
    for i in 0..env.len() {
        let want = (a.mu_map.data()[i] + b.mu_map.data()[i]) / 2.0;
        ensure(
            wmc.mu_map.data()[i].to_bits() == want.to_bits(),
            format!("voxel {i} differs from the mean"),
        )?;
    }
    let single = mapping::estimate_wmc(&env, &[7]).map_err(|e| e.to_string())?;
    ensure(
        single.mu_map == a.mu_map && single.omega_map == a.omega_map,
        "single-size WMC differs from fixed".into(),
    )?;
    Ok("wmc{7,9} is the exact mean, wmc{7} equals fixed(7)".into())
}

const COSINE_TOL: f64 = 1e-9;
const MAGNITUDE_SLACK: f64 = 1e-12;

fn envelope_checks() -> Outcome {
    let line: Vec<f64> = (0..256)
        .map(|i| (2.0 * std::f64::consts::PI * 32.0 * i as f64 / 256.0).cos())
        .collect();
    let env = envelope::envelope_line(&line).map_err(|e| e.to_string())?;
    let worst = env.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    ensure(
        worst <= COSINE_TOL,
        format!("cosine envelope off by {worst:e}"),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..50 {
        let n = rng.random_range(8..300);
        let rf: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e = envelope::envelope_line(&rf).map_err(|e| e.to_string())?;
        if let Some(i) = (0..n).find(|&i| e[i] + MAGNITUDE_SLACK < rf[i].abs()) {
            return Err(format!(
                "line {k}: envelope {} below |rf| {} at {i}",
                e[i],
                rf[i].abs()
            ));
        }
    }
    Ok(format!(
        "cosine err {worst:.1e}, envelope >= |rf| on 50 lines"
    ))
}

const SCALE: f64 = 3.7;
const OMEGA_SCALE_TOL: f64 = 1e-9;

fn scale_equivariance() -> Outcome {
    let env = disk_phantom(32, 3).envelope;
    let scaled = env.map(|v| v * SCALE).unwrap();
    let spec = KernelSpec::auto(32, 32).unwrap();
    let runs: [(&str, Estimator); 3] = [
        ("fixed", |i, _| mapping::estimate_fixed(i, 5).unwrap()),
        ("wmc", |i, _| mapping::estimate_wmc(i, &[3, 5]).unwrap()),
        ("mkl", |i, s| mapping::estimate_mkl(i, s).unwrap()),
    ];
    for (name, f) in runs {
        let (a, b) = (f(&env, &spec), f(&scaled, &spec));
        ensure(a.mu_map == b.mu_map, format!("{name}: mu map changed"))?;
        ensure(
            a.scale_map == b.scale_map,
            format!("{name}: scale map changed"),
        )?;
        let worst = a
            .omega_map
            .data()
            .iter()
            .zip(b.omega_map.data())
            .map(|(x, y)| (y / (x * SCALE * SCALE) - 1.0).abs())
            .fold(0.0, f64::max);
        ensure(
            worst <= OMEGA_SCALE_TOL,
            format!("{name}: omega rel err {worst:e}"),
        )?;
    }
    Ok("mu and scale maps bitwise unchanged, omega scaled by c^2 for fixed, wmc and mkl".into())
}

fn bench_determinism(budget: Duration) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |threads: &str, name: &str| -> Result<Vec<u8>, String> {
        let csv = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_nakamap"))
            .args(["bench", "--seed", "42", "--threads", threads, "--out-csv"])
            .arg(&csv)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(
            out.status.success(),
            String::from_utf8_lossy(&out.stderr).into_owned(),
        )?;
        std::fs::read(&csv).map_err(|e| e.to_string())
    };
    let start = Instant::now();
    let a = run("1", "a.csv")?;
    let b = run("3", "b.csv")?;
    let elapsed = start.elapsed();
    ensure(a == b, "CSV differs between thread counts".into())?;
    ensure(
        a.iter().filter(|&&c| c == b'\n').count() == 10,
        "expected header plus 9 rows".into(),
    )?;
    ensure(
        elapsed <= budget,
        format!("two bench runs took {elapsed:.1?}, budget {budget:.1?}"),
    )?;
    Ok(format!(
        "byte-identical CSV for --threads 1 and 3 ({elapsed:.1?})"
    ))
}

const DENSE: f64 = 0.5;
const SPARSE: f64 = 0.005;
const RAYLEIGH_BAND: (f64, f64) = (0.7, 1.3);

fn scatterer_mu(seed: u64, density: f64, arrangement: Arrangement) -> f64 {
    let layout = Layout::ScattererField {
        background: ScattererParams {
            density,
            arrangement,
        },
        inclusion: None,
        psf: Psf::default(),
    };
    let t = phantom::generate(&PhantomSpec {
        width: 64,
        height: 64,
        seed,
        layout,
    })
    .unwrap();
    t.truth_mu.data()[0]
}

fn scatterer_ordering() -> Outcome {
    let (mut near_one, mut sparse_lower, mut periodic_higher) = (0, 0, 0);
    let mut dense_values = Vec::new();
    for seed in 0..5 {
        let dense = scatterer_mu(seed, DENSE, Arrangement::Random);
        let sparse = scatterer_mu(seed, SPARSE, Arrangement::Random);
        let periodic = scatterer_mu(seed, DENSE, Arrangement::Periodic);
        near_one += usize::from(dense >= RAYLEIGH_BAND.0 && dense <= RAYLEIGH_BAND.1);
        sparse_lower += usize::from(sparse < dense);
        periodic_higher += usize::from(periodic > dense);
        dense_values.push(format!("{dense:.2}"));
    }
    let summary = format!(
        "votes near-1 {near_one}/5, sparse<dense {sparse_lower}/5, periodic>random {periodic_higher}/5 (dense mu {})",
        dense_values.join(" ")
    );
    ensure(
        near_one >= 3 && sparse_lower >= 3 && periodic_higher >= 3,
        summary.clone(),
    )?;
    Ok(summary)
}

fn main() {
    let mut failures = 0;
    let mut report =
        |id: usize, name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| -> Duration {
            let start = Instant::now();
            let outcome = f();
            let elapsed = start.elapsed();
            let outcome = match outcome {
                Ok(detail) if elapsed > budget => {
                    Err(format!("{detail}; took {elapsed:.2?}, budget {budget:.0?}"))
                }
                other => other,
            };
            match outcome {
                Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{elapsed:.2?}]"),
                Err(detail) => {
                    failures += 1;
                    println!("criterion {id:>2} FAIL  {name}: {detail} [{elapsed:.2?}]");
                }
            }
            elapsed
        };
    let s = Duration::from_secs;
    report(1, "distribution math", s(1), &mut distribution_math);
    report(2, "MLE consistency", s(10), &mut mle_consistency);
    report(3, "MLE dominance", s(5), &mut mle_dominance);
    report(4, "brute-force oracle", s(5), &mut oracle_equivalence);
    let c5_budget = s(120);
    report(5, "disk phantom MAD", c5_budget, &mut table_analogue);
    report(6, "WMC identity", s(30), &mut wmc_identity);
    report(7, "envelope", s(1), &mut envelope_checks);
    report(8, "scale equivariance", s(10), &mut scale_equivariance);
    let budget = 2 * c5_budget;
    report(9, "bench determinism", budget, &mut || {
        bench_determinism(budget)
    });
    report(10, "scatterer ordering", s(60), &mut scatterer_ordering);
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
