use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use cable_haptics::commands::{self, exit_code};
use cable_haptics::config::{self, GridSpec, ResolvedConfig, RunConfig};
use cable_haptics::simulation::PlantModel;

#[derive(Parser)]
#[command(name = "cable-haptics", version, about = "Cable tension distribution for modular haptic rigs")]
struct Cli {
    /// Run config / layout file (TOML). Defaults to the four-module validation rig.
    #[arg(long, global = true)]
    layout: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the noisy plant.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    plant: Option<PlantKind>,

    /// Number of force-sphere samples.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Force-sphere radius in newtons.
    #[arg(long, global = true)]
    radius: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlantKind {
    Ideal,
    Noisy,
}

#[derive(Subcommand)]
enum Command {
    /// Solve cable tensions for one force and print the result as JSON.
    Solve {
        /// Desired force "x,y,z" in newtons.
        #[arg(long, allow_hyphen_values = true)]
        force: String,
    },
    /// Run the force-sphere validation and write CSV/JSON reports.
    Validate,
    /// Sweep a grid and report the fraction of feasible probe forces.
    Workspace {
        #[arg(long, allow_hyphen_values = true)]
        min: String,
        #[arg(long, allow_hyphen_values = true)]
        max: String,
        /// Points per axis.
        #[arg(long, default_value_t = 5)]
        resolution: usize,
    },
    /// Render a material along a trajectory.
    Material {
        #[arg(long)]
        material: PathBuf,
        /// CSV rows t,x,y,z[,vx,vy,vz].
        #[arg(long)]
        trajectory: PathBuf,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<ResolvedConfig> {
    let mut raw = match &cli.layout {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.samples {
        raw.protocol.sample_count = n;
    }
    if let Some(r) = cli.radius {
        raw.protocol.sphere_radius = r;
    }
    match cli.plant {
        Some(PlantKind::Ideal) => raw.plant = PlantModel::Ideal,
        Some(PlantKind::Noisy) if !matches!(raw.plant, PlantModel::Noisy { .. }) => {
            raw.plant = config::default_noisy_plant(cli.seed.unwrap_or(cable_haptics::simulation::DEFAULT_SEED));
        }
        _ => {}
    }
    if let (Some(s), PlantModel::Noisy { seed, .. }) = (cli.seed, &mut raw.plant) {
        *seed = s;
    }
    if let Some(dir) = &cli.out {
        raw.output.dir = Some(dir.clone());
    }
    let base = cli.layout.as_deref().and_then(Path::parent).unwrap_or(Path::new("."));
    raw.resolve(base)
}

fn sink(dir: Option<&Path>, name: &str) -> anyhow::Result<Box<dyn Write>> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            let path = d.join(name);
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            Ok(Box::new(io::BufWriter::new(file)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let cfg = load_config(&cli)?;
    let out_dir = cfg.output_dir.as_deref();
    match &cli.command {
        Command::Solve { force } => {
            let f = config::parse_vec3(force)?;
            let r = commands::cmd_solve(&cfg, &f, &mut io::stdout().lock())?;
            Ok(exit_code(r.status))
        }
        Command::Validate => {
            let dir = out_dir.unwrap_or(Path::new("validation-out"));
            let report = commands::cmd_validate(&cfg, dir)?;
            let a = &report.aggregates;
            eprintln!(
                "{} samples: mean angle {:.3} deg (max {:.3}), mean |F| {:.3} N, mean magnitude error {:.4} N, within 45 deg {:.3}",
                report.records.len(),
                a.mean_angle_error,
                a.max_angle_error,
                a.mean_measured_magnitude,
                a.mean_magnitude_error,
                a.fraction_within_45deg
            );
            let hw = &report.hardware_reference;
            eprintln!(
                "hardware reference: mean angle {} deg, mean |F| {} N, mean magnitude error {} N",
                hw.mean_angle_error_deg, hw.mean_measured_magnitude, hw.mean_magnitude_error
            );
            eprintln!("wrote {}", dir.display());
            Ok(0)
        }
        Command::Workspace { min, max, resolution } => {
            let grid = GridSpec { min: config::parse_vec3(min)?, max: config::parse_vec3(max)?, resolution: *resolution };
            grid.validate()?;
            commands::cmd_workspace(&cfg, &grid, sink(out_dir, "workspace.csv")?)?;
            Ok(0)
        }
        Command::Material { material, trajectory } => {
            let model = config::load_material(material)?;
            let file = fs::File::open(trajectory).with_context(|| format!("opening {}", trajectory.display()))?;
            let traj = config::parse_trajectory(file).with_context(|| format!("parsing {}", trajectory.display()))?;
            commands::cmd_material(&cfg, &model, &traj, sink(out_dir, "material.csv")?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
