//! Run configuration and the TOML/CSV file formats used by the CLI.
//!
//! A run config is a TOML document; every section is optional:
//!
//! ```toml
//! end_effector = [0.0, 0.0, 0.3]
//!
//! [layout]                      # or: [layout] file = "rig.toml"
//! bounds = { t_min = 0.5, t_max = 6.0 }
//! anchors = [
//!   { id = "m0", position = [1.0, 0.0, 0.0] },
//!   { id = "m1", position = [0.0, 1.0, 0.0] },
//! ]
//!
//! [solver]
//! max_iterations = 2000
//! tolerance = 1e-8
//! start_mode = "min_tension"    # or: start_mode = { custom = [1.0, 1.0] }
//!
//! [protocol]
//! sphere_radius = 1.5
//! sample_count = 182
//! hold_duration = 1.0
//! samples_per_hold = 1000
//!
//! [plant]
//! kind = "noisy"                # or "ideal"
//! force_noise_std = 0.3
//! frame_rotation_z = 0.0873
//! tension_bias = 0.1
//! seed = 42
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Without a `[layout]` section the four-module validation layout is used,
//! with its end effector unless `end_effector` is given. A custom layout
//! without `end_effector` puts the end effector at the origin.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::geometry::{ModuleLayout, Vec3};
use crate::haptics::{MaterialModel, Preset};
use crate::simulation::{default_rig_layout, PlantModel, ValidationProtocol};
use crate::solver::{SolverConfig, TensionBounds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayoutSource {
    File { file: PathBuf },
    Inline(ModuleLayout),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// Raw config as written in the file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub end_effector: Option<Vec3>,
    pub layout: Option<LayoutSource>,
    pub solver: SolverConfig,
    pub protocol: ValidationProtocol,
    pub plant: PlantModel,
    pub output: OutputConfig,
}

/// Config with the layout loaded and every nested invariant checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub layout: ModuleLayout,
    pub end_effector: Vec3,
    pub solver: SolverConfig,
    pub protocol: ValidationProtocol,
    pub plant: PlantModel,
    pub output_dir: Option<PathBuf>,
}

impl ResolvedConfig {
    pub fn bounds(&self) -> TensionBounds {
        self.layout.bounds()
    }
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        RunConfig::default().resolve(Path::new(".")).expect("default config is valid")
    }
}

impl RunConfig {
    pub fn from_toml(src: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(src)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let src = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&src).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Loads any referenced layout file (relative to `base_dir`) and checks
    /// all nested invariants.
    pub fn resolve(self, base_dir: &Path) -> anyhow::Result<ResolvedConfig> {
        let (layout, default_ee) = match self.layout {
            None => default_rig_layout(),
            Some(LayoutSource::Inline(l)) => (l, Vec3::zeros()),
            Some(LayoutSource::File { file }) => {
                let path = base_dir.join(file);
                let nested = RunConfig::load(&path)?;
                let dir = path.parent().unwrap_or(Path::new("."));
                let resolved = match nested.layout {
                    Some(LayoutSource::File { .. }) => bail!("layout file {} refers to another layout file", path.display()),
                    Some(_) => nested.resolve(dir)?,
                    None => bail!("layout file {} has no [layout] section", path.display()),
                };
                (resolved.layout, resolved.end_effector)
            }
        };
        let end_effector = self.end_effector.unwrap_or(default_ee);
        if !end_effector.iter().all(|c| c.is_finite()) {
            bail!("end_effector must be finite");
        }
        self.solver.validate()?;
        self.protocol.validate()?;
        self.plant.validate()?;
        Ok(ResolvedConfig {
            layout,
            end_effector,
            solver: self.solver,
            protocol: self.protocol,
            plant: self.plant,
            output_dir: self.output.dir,
        })
    }
}

/// Serializes a layout and end effector as a config that re-reads to the
/// same values.
pub fn layout_to_toml(layout: &ModuleLayout, end_effector: &Vec3) -> anyhow::Result<String> {
    #[derive(Serialize)]
    struct LayoutFile<'a> {
        end_effector: &'a Vec3,
        layout: &'a ModuleLayout,
    }
    Ok(toml::to_string(&LayoutFile { end_effector, layout })?)
}

/// Noisy plant used when `--plant noisy` is requested without parameters.
pub fn default_noisy_plant(seed: u64) -> PlantModel {
    PlantModel::Noisy { force_noise_std: 0.3, frame_rotation_z: 5f64.to_radians(), tension_bias: 0.1, seed }
}

/// `"x,y,z"` → vector.
pub fn parse_vec3(s: &str) -> anyhow::Result<Vec3> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("expected three comma-separated numbers, got {s:?}");
    }
    let mut v = [0.0f64; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.parse().with_context(|| format!("invalid number {p:?} in {s:?}"))?;
        if !slot.is_finite() {
            bail!("non-finite component in {s:?}");
        }
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

/// Material file: either a full model or a named preset around a center.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum MaterialFile {
    Preset {
        preset: String,
        #[serde(default)]
        center: Vec3,
    },
    Model(MaterialModel),
}

pub fn parse_material(src: &str) -> anyhow::Result<MaterialModel> {
    let model = match toml::from_str::<MaterialFile>(src)? {
        MaterialFile::Model(m) => m,
        MaterialFile::Preset { preset, center } => {
            let p = match preset.as_str() {
                "magnetic" => Preset::Magnetic,
                "textured" => Preset::Textured,
                "shaped" => Preset::Shaped,
                "vibrating" => Preset::Vibrating,
                "water" => Preset::Water,
                other => bail!("unknown material preset {other:?}"),
            };
            p.build(center)
        }
    };
    model.validate()?;
    Ok(model)
}

pub fn load_material(path: &Path) -> anyhow::Result<MaterialModel> {
    let src = fs::read_to_string(path).with_context(|| format!("reading material {}", path.display()))?;
    parse_material(&src).with_context(|| format!("parsing material {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Parses trajectory CSV rows `t,x,y,z[,vx,vy,vz]`. A non-numeric first row
/// is treated as a header. Missing velocities are finite-differenced
/// (central inside, one-sided at the ends, zero for a single row).
pub fn parse_trajectory<R: std::io::Read>(reader: R) -> anyhow::Result<Vec<TrajectoryPoint>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<(f64, Vec3, Option<Vec3>)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let nums: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let nums = match nums {
            Ok(n) => n,
            Err(_) if line == 0 => continue,
            Err(e) => bail!("trajectory row {}: {e}", line + 1),
        };
        if nums.iter().any(|v| !v.is_finite()) {
            bail!("trajectory row {}: non-finite value", line + 1);
        }
        let vel = match nums.len() {
            4 => None,
            7 => Some(Vec3::new(nums[4], nums[5], nums[6])),
            n => bail!("trajectory row {}: expected 4 or 7 columns, got {n}", line + 1),
        };
        rows.push((nums[0], Vec3::new(nums[1], nums[2], nums[3]), vel));
    }
    for w in rows.windows(2) {
        if w[1].0 < w[0].0 {
            bail!("trajectory time must be non-decreasing");
        }
    }

    let diff = |i: usize, j: usize| -> Vec3 {
        let dt = rows[j].0 - rows[i].0;
        if dt > 0.0 {
            (rows[j].1 - rows[i].1) / dt
        } else {
            Vec3::zeros()
        }
    };
    let n = rows.len();
    Ok((0..n)
        .map(|i| {
            let velocity = rows[i].2.unwrap_or_else(|| match (i, n) {
                (_, 1) => Vec3::zeros(),
                (0, _) => diff(0, 1),
                (i, n) if i == n - 1 => diff(n - 2, n - 1),
                (i, _) => diff(i - 1, i + 1),
            });
            TrajectoryPoint { time: rows[i].0, position: rows[i].1, velocity }
        })
        .collect())
}

/// Axis-aligned grid for workspace sweeps; `resolution` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: Vec3,
    pub max: Vec3,
    pub resolution: usize,
}

impl GridSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.resolution < 1 {
            bail!("grid resolution must be at least 1");
        }
        if (0..3).any(|k| self.min[k] > self.max[k]) {
            bail!("grid min must not exceed max on any axis");
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<Vec3> {
        let axis = |k: usize| -> Vec<f64> {
            let n = self.resolution;
            (0..n)
                .map(|i| {
                    if n == 1 {
                        self.min[k]
                    } else {
                        self.min[k] + (self.max[k] - self.min[k]) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        };
        let (xs, ys, zs) = (axis(0), axis(1), axis(2));
        let mut pts = Vec::with_capacity(xs.len() * ys.len() * zs.len());
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    pts.push(Vec3::new(x, y, z));
                }
            }
        }
        pts
    }
}

/// Anchors named by id, for CSV headers.
pub fn anchor_ids(layout: &ModuleLayout) -> Vec<String> {
    layout.anchors().iter().map(|a| a.id.clone()).collect()
}
