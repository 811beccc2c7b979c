use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use shaft_tracker::cylinder::project_cylinder_polar;
use shaft_tracker::detection::{
    sequential_ransac_two_lines, synthesize_detection, PointSet, RansacParams,
    SyntheticDetectorParams,
};
use shaft_tracker::harness::{
    accumulated_error, generate_scenario, ransac_seed, run_tracking, tip_error_percent,
    HarnessConfig,
};
use shaft_tracker::line::{polar_difference, residual_r};
use shaft_tracker::observation::{extract_evidence, ObservationModelKind};
use shaft_tracker::rng::{stream, Domain};
use shaft_tracker::{
    silhouette_oracle, CameraIntrinsics, CylinderSpec, LumpedErrorParams, PolarLine,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn within_budget(outcome: Outcome, started: Instant, budget: Duration) -> Outcome {
    let took = started.elapsed();
    let detail = format!(
        "{}; {:.2} s of {} s",
        outcome.detail,
        took.as_secs_f64(),
        budget.as_secs()
    );
    Outcome::new(outcome.pass && took < budget, detail)
}

fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// A shaft in front of the camera, seen roughly side-on.
fn random_cylinder(rng: &mut impl Rng) -> CylinderSpec {
    loop {
        let z = rng.random_range(0.05..0.4);
        let near = Vector3::new(
            rng.random_range(-0.5..0.5) * z,
            rng.random_range(-0.4..0.4) * z,
            z,
        );
        let view = near.normalize();
        let d = random_unit(rng);
        let d = d - view * d.dot(&view);
        if d.norm() < 0.3 {
            continue;
        }
        let d = d.normalize();
        let r = rng.random_range(0.002..0.015);
        let p0 = near + d * rng.random_range(-0.1..0.1);
        match CylinderSpec::new(p0, d, r) {
            Ok(cyl) if cyl.discriminant() > 1e-8 => return cyl,
            _ => continue,
        }
    }
}

fn projection_matches_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_theta, mut worst_rho) = (0.0f64, 0.0f64);
    let mut failures = 0;
    let poses = 150;
    for _ in 0..poses {
        let cyl = random_cylinder(&mut rng);
        let analytic = match project_cylinder_polar(&cyl) {
            Ok(lines) => lines,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let oracle = match silhouette_oracle(&cyl, 32, 512) {
            Ok((a, b)) => [a, b],
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        for a in &analytic {
            let (dt, dr) = oracle
                .iter()
                .map(|o| polar_difference(a, o))
                .min_by(|x, y| (x.0.abs() + x.1.abs()).total_cmp(&(y.0.abs() + y.1.abs())))
                .expect("two oracle lines");
            worst_theta = worst_theta.max(dt.abs());
            worst_rho = worst_rho.max(dr.abs());
        }
    }
    Outcome::new(
        failures == 0 && worst_theta < 1e-3 && worst_rho < 1e-4,
        format!("{poses} poses, {failures} errors, worst |dtheta| {worst_theta:.2e} rad, worst |drho| {worst_rho:.2e}"),
    )
}

fn residual_variance() -> Outcome {
    let sigma = 1.7;
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst = 0.0f64;
    for i in 0..8 {
        let line = PolarLine::new(i as f64 * std::f64::consts::PI / 8.0 + 0.05, 250.0);
        let residuals: Vec<f64> = (0..10_000)
            .map(|_| {
                let along = rng.random_range(-300.0..300.0);
                let p = line.foot()
                    + line.direction() * along
                    + line.normal() * normal.sample(&mut rng);
                residual_r(&p, &line)
            })
            .collect();
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        worst = worst.max((var / (sigma * sigma) - 1.0).abs());
    }
    Outcome::new(
        worst < 0.05,
        format!(
            "8 angles, worst relative variance error {:.2}%",
            100.0 * worst
        ),
    )
}

fn argmax_invariance() -> Outcome {
    let cfg = HarnessConfig::default();
    let scene = cfg.scenario.scene().expect("default scene");
    let q = cfg.scenario.joints_at(0);
    let gt = cfg.scenario.gt_initial;
    let edges = scene.edge_truth(&q, &gt).expect("visible shaft");
    let beta = cfg.tracking.extraction.beta;
    let mut rng = stream(1, Domain::Detector, 0, 0);
    let frame = synthesize_detection(
        &edges,
        &SyntheticDetectorParams::noiseless(),
        beta,
        scene.camera().image_size(),
        &mut rng,
    )
    .expect("noiseless frame");

    let step = 1e-3;
    let grid: Vec<LumpedErrorParams> = (0..729)
        .map(|mut code| {
            let mut delta = [0.0; 6];
            for d in &mut delta {
                *d = ((code % 3) as f64 - 1.0) * step;
                code /= 3;
            }
            LumpedErrorParams::new(
                gt.b() + Vector3::new(delta[0], delta[1], delta[2]),
                gt.w() + Vector3::new(delta[3], delta[4], delta[5]),
            )
        })
        .collect();
    let obs = &cfg.tracking.observation;
    let ransac = cfg
        .tracking
        .ransac
        .with_seed(ransac_seed(cfg.tracking.filter.seed, 0));
    let at_gt = scene.project_edges(&q, &gt).expect("gt projects");

    let mut failed = Vec::new();
    for kind in ObservationModelKind::ALL {
        let evidence = extract_evidence(kind, &frame, &cfg.tracking.extraction, &ransac);
        let best_gt = evidence.score(&at_gt, &obs.polar, &obs.intensity);
        let best_other = grid
            .iter()
            .filter_map(|p| scene.project_edges(&q, p).ok())
            .map(|proj| evidence.score(&proj, &obs.polar, &obs.intensity))
            .fold(f64::NEG_INFINITY, f64::max);
        if evidence.is_skip() || best_other > best_gt {
            failed.push(kind.name());
        }
    }
    Outcome::new(
        failed.is_empty(),
        format!("5 models over a 3^6 grid, step {step}; failing: {failed:?}"),
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn filter_convergence() -> Outcome {
    let seeds = 0..5u64;
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in ObservationModelKind::PROPOSED {
        let started = Instant::now();
        let (mut means, mut finals) = (Vec::new(), Vec::new());
        for seed in seeds.clone() {
            let cfg = HarnessConfig::default().with_seed(seed);
            let records =
                generate_scenario(&cfg.scenario, cfg.tracking.extraction.beta).expect("scenario");
            let scene = cfg.scenario.scene().expect("scene");
            match run_tracking(&records, &scene, kind, &cfg.tracking) {
                Ok(run) => {
                    means.push(run.report.mean_pct);
                    finals.push(run.report.final_accumulated_pct());
                }
                Err(_) => {
                    means.push(f64::INFINITY);
                    finals.push(f64::INFINITY);
                }
            }
        }
        let (m, f) = (median(means), median(finals));
        let took = started.elapsed();
        pass &= m < 5.0 && f < 5.0 && took < Duration::from_secs(120);
        parts.push(format!(
            "{kind} {m:.2}%/{f:.2}% in {:.1} s",
            took.as_secs_f64()
        ));
    }
    Outcome::new(
        pass,
        format!("median mean/final accumulated: {}", parts.join(", ")),
    )
}

fn dropout_degradation() -> Outcome {
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..10u64 {
        let mut cfg = HarnessConfig::default().with_seed(seed);
        cfg.scenario.detector.endpoint_dropout_prob = 0.5;
        let records =
            generate_scenario(&cfg.scenario, cfg.tracking.extraction.beta).expect("scenario");
        let scene = cfg.scenario.scene().expect("scene");
        let mean = |kind| {
            run_tracking(&records, &scene, kind, &cfg.tracking)
                .map(|r| r.report.mean_pct)
                .unwrap_or(f64::INFINITY)
        };
        let line = mean(ObservationModelKind::LineIntensities);
        let base = mean(ObservationModelKind::EndpointToPolar);
        if line <= base {
            wins += 1;
        }
        pairs.push(format!("{line:.2}/{base:.2}"));
    }
    Outcome::new(
        wins >= 8,
        format!(
            "line-intensities <= endpoint-to-polar in {wins}/10 seeds ({})",
            pairs.join(" ")
        ),
    )
}

fn ransac_recovery() -> Outcome {
    let planted = [PolarLine::new(0.35, 180.0), PolarLine::new(1.9, 120.0)];
    let noise = Normal::new(0.0, 0.3).expect("valid sigma");
    let mut recovered = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut pts: Vec<Vector2<f64>> = Vec::with_capacity(100);
        for line in &planted {
            for _ in 0..40 {
                let along = rng.random_range(-150.0..150.0);
                pts.push(
                    line.foot() + line.direction() * along + line.normal() * noise.sample(&mut rng),
                );
            }
        }
        for _ in 0..20 {
            pts.push(Vector2::new(
                rng.random_range(-200.0..400.0),
                rng.random_range(-200.0..400.0),
            ));
        }
        let rp = RansacParams::default().with_seed(seed);
        let Ok(found) = sequential_ransac_two_lines(&PointSet::from_points(pts), &rp) else {
            continue;
        };
        let ok = found.len() == 2
            && planted.iter().all(|p| {
                found.iter().any(|f| {
                    let (dt, dr) = polar_difference(&f.line, p);
                    dt.abs() <= 0.01 && dr.abs() <= 0.5
                })
            });
        if ok {
            recovered += 1;
        }
    }
    Outcome::new(
        recovered >= 95,
        format!("{recovered}/100 seeds within 0.5 px / 0.01 rad"),
    )
}

fn cli(args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_shaft-tracker"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn simulate_and_track(dir: &Path, tag: &str, threads: &str) -> Result<(Vec<u8>, Vec<u8>), String> {
    let data = dir.join(format!("{tag}.jsonl"));
    let report = dir.join(format!("{tag}.json"));
    let (data_s, report_s) = (data.to_string_lossy(), report.to_string_lossy());
    cli(&["simulate", "--seed", "11", "--out", &data_s], threads)?;
    cli(
        &[
            "track",
            &data_s,
            "--seed",
            "11",
            "--model",
            "line-intensities",
            "--out",
            &report_s,
        ],
        threads,
    )?;
    let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    Ok((read(&data)?, read(&report)?))
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let runs: Result<Vec<_>, String> = [("a", "4"), ("b", "4"), ("c", "1")]
        .into_iter()
        .map(|(tag, threads)| simulate_and_track(dir.path(), tag, threads))
        .collect();
    match runs {
        Ok(runs) => {
            let same = runs.windows(2).all(|w| w[0] == w[1]);
            Outcome::new(
                same,
                format!("two runs on 4 threads and one on 1 thread byte-identical: {same}"),
            )
        }
        Err(e) => Outcome::new(false, format!("CLI failed: {e}")),
    }
}

fn metric_arithmetic() -> Outcome {
    let camera = CameraIntrinsics::new(1000.0, 1000.0, 960.0, 540.0, 1920, 1080).expect("camera");
    let diagonal = (1920.0f64 * 1920.0 + 1080.0 * 1080.0).sqrt();
    let pct = tip_error_percent(110.15, &camera);
    let pct_ok = (camera.diagonal() - diagonal).abs() < 1e-9
        && format!("{:.3}", camera.diagonal()) == "2202.907"
        && (pct - 100.0 * 110.15 / diagonal).abs() < 1e-6
        && format!("{pct:.2}") == "5.00";

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let errors: Vec<f64> = (0..500).map(|_| rng.random_range(0.0..20.0)).collect();
    let acc = accumulated_error(&errors).expect("nonempty");
    let prefix_ok = acc.len() == errors.len()
        && acc.iter().enumerate().all(|(k, &a)| {
            let mut sum = 0.0;
            for e in &errors[..=k] {
                sum += e;
            }
            a == sum / (k + 1) as f64
        });
    Outcome::new(
        pct_ok && prefix_ok,
        format!(
            "diagonal {:.6} px, 110.15 px -> {pct:.6}%, prefix means exact: {prefix_ok}",
            camera.diagonal()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, u64);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "projection matches silhouette oracle",
            projection_matches_oracle,
            10,
        ),
        ("residual variance equals sigma^2", residual_variance, 5),
        ("argmax at ground truth", argmax_invariance, 30),
        ("filter convergence", filter_convergence, 4 * 120),
        ("dropout degradation", dropout_degradation, 300),
        ("RANSAC planted-line recovery", ransac_recovery, 10),
        ("determinism", determinism, 600),
        ("metric arithmetic", metric_arithmetic, 5),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = within_budget(check(), started, Duration::from_secs(budget));
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {name} ({})", i + 1, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("{} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
