use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use shaft_tracker::cylinder::project_cylinder_polar;
use shaft_tracker::detection::PointSet;
use shaft_tracker::detection::{load_frames, write_frames, FrameRecord};
use shaft_tracker::harness::{
    compare_models, generate_scenario, ransac_seed, render_overlay, run_tracking, HarnessConfig,
    Overlay,
};
use shaft_tracker::line::polar_unit_to_pixel;
use shaft_tracker::observation::{extract_evidence, Evidence, ObservationModelKind};

#[derive(Parser)]
#[command(
    name = "shaft-tracker",
    version,
    about = "Track a surgical tool's lumped error from shaft line detections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario and filter seeds.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    particles: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic JSONL dataset.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track one model over a dataset and write a JSON report.
    Track {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "line-intensities")]
        model: ObservationModelKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track every model; writes CSV to --out and JSON next to it.
    Compare {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the projected shaft edges of one scenario frame.
    Project {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        frame: usize,
    },
    /// Track up to --frame and draw that frame as SVG.
    Render {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "line-intensities")]
        model: ObservationModelKind,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<HarnessConfig> {
    let mut cfg = match &common.config {
        Some(path) => HarnessConfig::load(path)?,
        None => HarnessConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(n) = common.particles {
        cfg = cfg.with_particles(n);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_dataset(path: &Path, cfg: &HarnessConfig) -> Result<Vec<FrameRecord>> {
    let size = cfg.scenario.camera.image_size();
    load_frames(path, size)
        .with_context(|| format!("opening {}", path.display()))?
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, out } => {
            let cfg = load_config(&common)?;
            let records = generate_scenario(&cfg.scenario, cfg.tracking.extraction.beta)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_frames(BufWriter::new(file), &records)?;
        }
        Command::Track {
            dataset,
            common,
            model,
            out,
        } => {
            let cfg = load_config(&common)?;
            let records = read_dataset(&dataset, &cfg)?;
            let run = run_tracking(&records, &cfg.scenario.scene()?, model, &cfg.tracking)?;
            write_text(&out, &serde_json::to_string_pretty(&run)?)?;
            println!(
                "{model}: mean {:.3}% std {:.3}% final accumulated {:.3}% skipped {}",
                run.report.mean_pct,
                run.report.std_pct,
                run.report.final_accumulated_pct(),
                run.report.skipped_frames
            );
        }
        Command::Compare {
            dataset,
            common,
            out,
        } => {
            let cfg = load_config(&common)?;
            let records = read_dataset(&dataset, &cfg)?;
            let cmp = compare_models(
                &records,
                &cfg.scenario.scene()?,
                &ObservationModelKind::ALL,
                &cfg.tracking,
            );
            let csv = cmp.to_csv();
            write_text(&out, &csv)?;
            write_text(&out.with_extension("json"), &cmp.to_json())?;
            print!("{csv}");
        }
        Command::Project { common, frame } => {
            let cfg = load_config(&common)?;
            let scene = cfg.scenario.scene()?;
            let q = cfg.scenario.joints_at(frame);
            let params = cfg.scenario.gt_initial;
            let cyl = scene.shaft_in_camera(&q, &params)?;
            let unit = project_cylinder_polar(&cyl)?;
            println!("q = {q:?}");
            for (i, l) in unit.iter().enumerate() {
                let px = polar_unit_to_pixel(l, scene.camera());
                println!(
                    "edge {i}: unit theta {:.9} rho {:.9} | pixel theta {:.9} rho {:.6}",
                    l.theta, l.rho, px.line.theta, px.line.rho
                );
            }
            let tip = scene.tip_pixel(&q, &params)?;
            println!("tip pixel: ({:.3}, {:.3})", tip.x, tip.y);
        }
        Command::Render {
            dataset,
            common,
            model,
            frame,
            out,
        } => {
            let cfg = load_config(&common)?;
            let records = read_dataset(&dataset, &cfg)?;
            if frame >= records.len() {
                bail!(
                    "frame {frame} out of range: dataset has {} frames",
                    records.len()
                );
            }
            let scene = cfg.scenario.scene()?;
            let run = run_tracking(&records[..=frame], &scene, model, &cfg.tracking)?;
            let record = &records[frame];
            let est = run.estimates[frame];
            let projected = scene.project_edges(&record.q, &est)?;
            let ransac = cfg
                .tracking
                .ransac
                .with_seed(ransac_seed(cfg.tracking.filter.seed, frame));
            let evidence =
                match extract_evidence(model, &record.frame, &cfg.tracking.extraction, &ransac) {
                    Evidence::Points(p) => p,
                    _ => PointSet::new(),
                };
            let [ex, ey] = run.estimated_tip_px[frame];
            let overlay = Overlay {
                frame: &record.frame,
                projected: &projected,
                evidence: &evidence,
                estimate_tip: Some(nalgebra::Vector2::new(ex, ey)),
                gt_tip: record.gt.map(|g| g.tip_px),
            };
            render_overlay(&overlay, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
