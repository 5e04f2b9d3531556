use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use symplane::fit::{fit_plane_from_sdf, fit_reflection_plane, PointPairSet, SdfSampleSet};
use symplane::io::{write_json, PlaneRecord, SceneBundle, CLOUD, PLANES};
use symplane::pipeline::{
    annotate_scene, bundle_diameter, cluster_scene, complete_in_bundle, detect_planes, evaluate_scene, task_seed,
    write_synthetic_bundle, PipelineConfig,
};
use symplane::synth::Shape;
use symplane::{Error, Plane, Result};

#[derive(Parser)]
#[command(name = "symplane", version, about = "Reflective symmetry planes for 3D scenes")]
struct Cli {
    /// Base seed; overrides the `seed` key of the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic scene bundle with ground truth and predictions.
    Synth(SynthArgs),
    /// Fit and cluster planes from a bundle's correspondences.
    Annotate {
        bundle: PathBuf,
    },
    /// Fit one plane from a text file of point pairs or sdf samples.
    Fit(FitArgs),
    /// Cluster the stored candidate planes of a bundle.
    Cluster {
        bundle: PathBuf,
        /// Scene diameter; defaults to the manifest value or cloud extent.
        #[arg(long)]
        diameter: Option<f64>,
    },
    /// Recover planes from the bundle's predicted signed distance maps.
    PlanesFromSdf {
        bundle: PathBuf,
    },
    /// Reflect points across planes and write completed.ply.
    Complete(CompleteArgs),
    /// Evaluate detections against ground truth and write report.json.
    Eval {
        bundle: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Output bundle directory.
    out: PathBuf,
    #[arg(long)]
    shape: Option<Shape>,
    /// Number of symmetry planes.
    #[arg(long)]
    symmetry: Option<usize>,
    #[arg(long)]
    cameras: Option<usize>,
    /// Gaussian noise on depth, as a fraction of the diameter.
    #[arg(long)]
    noise: Option<f64>,
    /// Pixel matches per correspondence record.
    #[arg(long)]
    matches: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    /// Lines of `ax ay az bx by bz`.
    #[arg(long, conflicts_with = "sdf", required_unless_present = "sdf")]
    pairs: Option<PathBuf>,
    /// Lines of `x y z s`.
    #[arg(long)]
    sdf: Option<PathBuf>,
    /// Output planes file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteArgs {
    bundle: PathBuf,
    /// Complete this image's unprojected depth instead of the bundle cloud.
    #[arg(long)]
    image: Option<String>,
    /// Planes file, relative to the bundle or absolute.
    #[arg(long, default_value = PLANES)]
    planes: String,
    /// Use the image's detected planes instead of a planes file.
    #[arg(long, requires = "image")]
    detections: bool,
}

fn read_numbers(path: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1)))?;
        if row.len() != width {
            return Err(Error::InvalidInput(format!("line {}: expected {width} numbers, got {}", i + 1, row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_plane_file(bundle: &SceneBundle, name: &str) -> Result<Vec<Plane>> {
    let records: Vec<PlaneRecord> = if Path::new(name).is_absolute() {
        symplane::io::read_json(fs::File::open(name)?, "planes")?
    } else {
        if !bundle.has(name) {
            return Err(Error::InvalidBundle(format!("missing {name}")));
        }
        bundle.read_planes(name)?
    };
    records.iter().map(PlaneRecord::plane).collect()
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synth(args) => {
            let mut settings = config.synth.clone();
            if let Some(shape) = args.shape {
                settings.scene.shape = shape;
            }
            if let Some(k) = args.symmetry {
                settings.scene.symmetry_count = k;
            }
            if let Some(c) = args.cameras {
                settings.scene.camera_count = c;
            }
            if let Some(n) = args.noise {
                settings.scene.noise_sigma = n;
            }
            if let Some(m) = args.matches {
                settings.matches_per_record = m;
            }
            let (_, scene) = write_synthetic_bundle(&args.out, &settings, config.seed)?;
            println!(
                "wrote {} ({} images, {} planes)",
                args.out.display(),
                scene.cameras.len(),
                scene.planes.len()
            );
        }
        Command::Annotate { bundle } => {
            let bundle = SceneBundle::open(bundle)?;
            let out = annotate_scene(&bundle, &config)?;
            println!(
                "{} candidates, {} planes, {} records skipped",
                out.candidates.len(),
                out.clusters.len(),
                out.failures.len()
            );
        }
        Command::Fit(args) => {
            let report = if let Some(path) = &args.pairs {
                let pairs = read_numbers(path, 6)?
                    .into_iter()
                    .map(|r| ([r[0], r[1], r[2]].into(), [r[3], r[4], r[5]].into()))
                    .collect();
                let mut fit = config.fit;
                if let Some(r) = fit.ransac.as_mut() {
                    r.seed = task_seed(config.seed, 0);
                }
                fit_reflection_plane(&PointPairSet::new(pairs)?, &fit)?
            } else {
                let path = args.sdf.as_ref().expect("clap enforces one input");
                let rows = read_numbers(path, 4)?;
                fit_plane_from_sdf(&SdfSampleSet::unweighted(rows.iter().map(|r| ([r[0], r[1], r[2]].into(), r[3]))))?
            };
            info!("rms residual {:.3e} over {} inliers", report.rms_residual, report.inlier_count);
            let record = [PlaneRecord::new(&report.plane, report.inlier_count as f64)];
            match &args.out {
                Some(path) => write_json(&mut io::BufWriter::new(fs::File::create(path)?), &record)?,
                None => write_json(&mut io::stdout().lock(), &record)?,
            }
        }
        Command::Cluster { bundle, diameter } => {
            let bundle = SceneBundle::open(bundle)?;
            let diameter = match diameter {
                Some(d) => d,
                None => bundle_diameter(&bundle)?,
            };
            let clusters = cluster_scene(&bundle, &config.cluster, diameter)?;
            println!("{} planes", clusters.len());
        }
        Command::PlanesFromSdf { bundle } => {
            let bundle = SceneBundle::open(bundle)?;
            let detections = detect_planes(&bundle, &config.sdf)?;
            let total: usize = detections.iter().map(|d| d.planes.len()).sum();
            println!("{total} planes over {} images", detections.len());
        }
        Command::Complete(args) => {
            let bundle = SceneBundle::open(&args.bundle)?;
            let planes = if args.detections {
                let image = args.image.as_deref().expect("clap enforces --image");
                let found = bundle.detections()?;
                let entry = found
                    .iter()
                    .find(|d| d.image == image)
                    .ok_or_else(|| Error::InvalidBundle(format!("no detections for {image}")))?;
                entry.planes.iter().map(PlaneRecord::plane).collect::<Result<Vec<_>>>()?
            } else {
                read_plane_file(&bundle, &args.planes)?
            };
            if args.image.is_none() && !bundle.has(CLOUD) {
                return Err(Error::InvalidBundle(format!("missing {CLOUD}")));
            }
            let cloud = complete_in_bundle(&bundle, args.image.as_deref(), &planes, config.closure_depth)?;
            println!("{} points", cloud.len());
        }
        Command::Eval { bundle } => {
            let bundle = SceneBundle::open(bundle)?;
            let report = evaluate_scene(&bundle, &config.eval)?;
            match &report.summary {
                Some(s) => {
                    print!(
                        "{} images: median geodesic {:.4} deg, median dense {:.4}",
                        s.images_evaluated, s.median_geodesic, s.median_dense_error
                    );
                    for (t, f) in &s.mean_fscore {
                        print!(", F@{t} {f:.3}");
                    }
                    println!();
                }
                None => println!("no image had a visible ground-truth plane"),
            }
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        e if e.is_degenerate_data() => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let _ = io::stderr().flush();
            ExitCode::from(exit_code(&e))
        }
    }
}
