//! Force-sphere validation harness.
//!
//! A set of force vectors spread over a sphere is commanded one after another.
//! Each is solved into tensions, pushed through a plant model, held for a
//! number of sensor readings and averaged, then compared with the commanded
//! vector by angle and magnitude.

use nalgebra::{DVector, Rotation3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{structure_matrix, ModuleLayout, StructureMatrix, Vec3};
use crate::solver::{solve, SolverConfig, WRENCH_FEASIBLE_TOL};

/// Angular threshold for convincing force feedback, degrees.
pub const DIRECTION_THRESHOLD_DEG: f64 = 45.0;

const ZERO_NORM: f64 = 1e-12;

/// Figures measured on the physical four-module rig, shown next to simulated
/// results for comparison. They come from sensor and rig effects that an
/// ideal plant does not model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareReference {
    pub mean_angle_error_deg: f64,
    pub mean_measured_magnitude: f64,
    pub mean_magnitude_error: f64,
    pub direction_threshold_deg: f64,
}

pub const HARDWARE_REFERENCE: HardwareReference = HardwareReference {
    mean_angle_error_deg: 14.0,
    mean_measured_magnitude: 1.84,
    mean_magnitude_error: 0.58,
    direction_threshold_deg: DIRECTION_THRESHOLD_DEG,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationProtocol {
    /// Newtons.
    pub sphere_radius: f64,
    pub sample_count: usize,
    /// Seconds.
    pub hold_duration: f64,
    pub samples_per_hold: usize,
}

impl Default for ValidationProtocol {
    fn default() -> Self {
        Self { sphere_radius: 1.5, sample_count: 182, hold_duration: 1.0, samples_per_hold: 1000 }
    }
}

impl ValidationProtocol {
    pub fn validate(&self) -> Result<()> {
        if !(self.sphere_radius > 0.0 && self.sphere_radius.is_finite()) {
            return Err(Error::InvalidProtocol(format!("sphere_radius must be positive, got {}", self.sphere_radius)));
        }
        if self.sample_count < 1 || self.samples_per_hold < 1 {
            return Err(Error::InvalidProtocol("sample_count and samples_per_hold must be at least 1".into()));
        }
        if !(self.hold_duration >= 0.0 && self.hold_duration.is_finite()) {
            return Err(Error::InvalidProtocol(format!("hold_duration must be nonnegative, got {}", self.hold_duration)));
        }
        Ok(())
    }
}

pub const DEFAULT_SEED: u64 = 42;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantModel {
    /// The sensor reads `A·t` exactly.
    #[default]
    Ideal,
    /// Each reading is `Rz(frame_rotation_z)·A·(t + tension_bias)` plus
    /// isotropic Gaussian noise with `force_noise_std` per axis.
    Noisy {
        force_noise_std: f64,
        frame_rotation_z: f64,
        tension_bias: f64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
}

impl PlantModel {
    pub fn validate(&self) -> Result<()> {
        if let Self::Noisy { force_noise_std, frame_rotation_z, tension_bias, .. } = self {
            let finite = force_noise_std.is_finite() && frame_rotation_z.is_finite() && tension_bias.is_finite();
            if !finite || *force_noise_std < 0.0 {
                return Err(Error::InvalidPlant("noise parameters must be finite with std >= 0".into()));
            }
        }
        Ok(())
    }

    /// Average of `readings` sensor samples for tensions `t`. `stream`
    /// selects an independent noise stream.
    fn measure(&self, a: &StructureMatrix, t: &DVector<f64>, readings: usize, stream: u64) -> Result<Vec3> {
        let mut sum = Vec3::zeros();
        match *self {
            Self::Ideal => {
                let f = a.apply(t);
                for _ in 0..readings {
                    sum += f;
                }
            }
            Self::Noisy { force_noise_std, frame_rotation_z, tension_bias, seed } => {
                let biased = t.add_scalar(tension_bias);
                let f = Rotation3::from_axis_angle(&Vec3::z_axis(), frame_rotation_z) * a.apply(&biased);
                let noise = Normal::new(0.0, force_noise_std).map_err(|e| Error::InvalidPlant(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(stream));
                for _ in 0..readings {
                    let n = Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                    sum += f + n;
                }
            }
        }
        Ok(sum / readings as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub commanded: Vec3,
    pub measured: Vec3,
    pub angle_error: f64,
    pub magnitude_error: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub mean_angle_error: f64,
    pub max_angle_error: f64,
    pub mean_measured_magnitude: f64,
    pub mean_magnitude_error: f64,
    pub fraction_within_45deg: f64,
    pub feasible_count: usize,
    /// Means over wrench-feasible samples only; zero when there are none.
    pub feasible_mean_angle_error: f64,
    pub feasible_mean_magnitude_error: f64,
}

impl Aggregates {
    pub fn from_records(records: &[SampleRecord]) -> Self {
        if records.is_empty() {
            return Self::default();
        }
        let n = records.len() as f64;
        let mean = |f: &dyn Fn(&SampleRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        let feasible: Vec<&SampleRecord> = records.iter().filter(|r| r.feasible).collect();
        let feasible_mean = |f: &dyn Fn(&SampleRecord) -> f64| {
            if feasible.is_empty() {
                0.0
            } else {
                feasible.iter().map(|r| f(r)).sum::<f64>() / feasible.len() as f64
            }
        };
        Self {
            mean_angle_error: mean(&|r| r.angle_error),
            max_angle_error: records.iter().map(|r| r.angle_error).fold(0.0, f64::max),
            mean_measured_magnitude: mean(&|r| r.measured.norm()),
            mean_magnitude_error: mean(&|r| r.magnitude_error),
            fraction_within_45deg: records.iter().filter(|r| r.angle_error <= DIRECTION_THRESHOLD_DEG).count() as f64
                / n,
            feasible_count: feasible.len(),
            feasible_mean_angle_error: feasible_mean(&|r| r.angle_error),
            feasible_mean_magnitude_error: feasible_mean(&|r| r.magnitude_error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: Vec<SampleRecord>,
    #[serde(flatten)]
    pub aggregates: Aggregates,
    /// Z rotation applied to measurements after basis-vector alignment,
    /// radians. Zero for the ideal plant.
    pub frame_correction: f64,
    pub hardware_reference: HardwareReference,
}

/// `n` deterministic, near-uniform points of norm `radius` (Fibonacci lattice).
pub fn sphere_samples(n: usize, radius: f64) -> Vec<Vec3> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            let unit = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            unit.normalize() * radius
        })
        .collect()
}

/// Angle between two vectors in degrees, in `[0, 180]`.
pub fn angle_error(a: &Vec3, b: &Vec3) -> Result<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na <= ZERO_NORM || nb <= ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    let cos = (a.dot(b) / (na * nb)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

pub fn magnitude_error(a: &Vec3, b: &Vec3) -> f64 {
    (a.norm() - b.norm()).abs()
}

/// Z rotation `θ ∈ [−π, π)` minimizing `Σ‖Rz(θ)·mᵢ − dᵢ‖²`.
pub fn align_z_rotation(desired: &[Vec3; 3], measured: &[Vec3; 3]) -> Result<f64> {
    let (mut sin_sum, mut cos_sum, mut scale) = (0.0, 0.0, 0.0);
    for (d, m) in desired.iter().zip(measured) {
        if d.norm() <= ZERO_NORM || m.norm() <= ZERO_NORM {
            return Err(Error::DegenerateInput("basis vectors must be nonzero".into()));
        }
        sin_sum += d.y * m.x - d.x * m.y;
        cos_sum += d.x * m.x + d.y * m.y;
        scale += d.xy().norm() * m.xy().norm();
    }
    if scale <= ZERO_NORM || sin_sum.hypot(cos_sum) <= ZERO_NORM * scale.max(1.0) {
        return Err(Error::DegenerateInput("basis vectors have no usable XY component".into()));
    }
    let theta = sin_sum.atan2(cos_sum);
    Ok(if theta >= std::f64::consts::PI { -std::f64::consts::PI } else { theta })
}

/// Three modules on an equilateral triangle of circumradius 1 m in the
/// `z = 0` plane, a fourth 2 m above the end effector, and the end effector
/// 0.3 m above the triangle's center. Default tension bounds.
pub fn default_rig_layout() -> (ModuleLayout, Vec3) {
    rig_layout_with_radius(1.0)
}

pub fn rig_layout_with_radius(circumradius: f64) -> (ModuleLayout, Vec3) {
    let ee = Vec3::new(0.0, 0.0, 0.3);
    let mut positions: Vec<Vec3> = (0..3)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            Vec3::new(circumradius * phi.cos(), circumradius * phi.sin(), 0.0)
        })
        .collect();
    positions.push(ee + Vec3::new(0.0, 0.0, 2.0));
    let layout = ModuleLayout::from_positions(&positions, Default::default())
        .expect("default rig layout is valid for positive radius");
    (layout, ee)
}

fn record_for(commanded: Vec3, measured: Vec3, feasible: bool) -> SampleRecord {
    // a vanishing measurement carries no direction; count it as fully wrong
    let angle = angle_error(&commanded, &measured).unwrap_or(180.0);
    SampleRecord { commanded, measured, angle_error: angle, magnitude_error: magnitude_error(&measured, &commanded), feasible }
}

pub fn run_validation(
    layout: &ModuleLayout,
    ee: &Vec3,
    protocol: &ValidationProtocol,
    plant: &PlantModel,
    config: &SolverConfig,
) -> Result<ValidationReport> {
    protocol.validate()?;
    plant.validate()?;
    let a = structure_matrix(layout, ee)?;
    let bounds = layout.bounds();
    let commands = sphere_samples(protocol.sample_count, protocol.sphere_radius);
    let readings = protocol.samples_per_hold;

    let frame_correction = match plant {
        PlantModel::Ideal => 0.0,
        PlantModel::Noisy { .. } => {
            let n = protocol.sample_count as u64;
            let desired = [Vec3::x(), Vec3::y(), Vec3::z()].map(|e| e * protocol.sphere_radius);
            let mut measured = [Vec3::zeros(); 3];
            for (k, d) in desired.iter().enumerate() {
                let r = solve(&a, d, &bounds, config)?;
                measured[k] = plant.measure(&a, &r.tensions, readings, n + k as u64)?;
            }
            align_z_rotation(&desired, &measured).unwrap_or(0.0)
        }
    };
    let correction = Rotation3::from_axis_angle(&Vec3::z_axis(), frame_correction);

    let mut records = Vec::with_capacity(commands.len());
    for (i, f) in commands.iter().enumerate() {
        let r = solve(&a, f, &bounds, config)?;
        let raw = plant.measure(&a, &r.tensions, readings, i as u64)?;
        let measured = if frame_correction == 0.0 { raw } else { correction * raw };
        records.push(record_for(*f, measured, r.force_residual <= WRENCH_FEASIBLE_TOL));
    }

    Ok(ValidationReport {
        aggregates: Aggregates::from_records(&records),
        records,
        frame_correction,
        hardware_reference: HARDWARE_REFERENCE,
    })
}
