//! Implementations of the `solve`, `validate`, `workspace` and `material`
//! commands. Each writes its machine-readable output to the given sinks and
//! leaves argument parsing and process exit to the binary.
//!
//! CSV columns:
//!
//! - validation: `cx,cy,cz,mx,my,mz,angle_err_deg,mag_err_N,feasible`
//! - workspace: `x,y,z,feasible_fraction`
//! - material: `t,x,y,z,vx,vy,vz,fx,fy,fz,rx,ry,rz,status,residual_N,tension_<id>...`

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::config::{anchor_ids, layout_to_toml, GridSpec, ResolvedConfig, TrajectoryPoint};
use crate::geometry::{structure_matrix, ModuleLayout, Vec3};
use crate::haptics::{evaluate, EndEffectorState, MaterialModel};
use crate::simulation::{run_validation, Aggregates, HardwareReference, PlantModel, ValidationProtocol, ValidationReport};
use crate::solver::{is_wrench_feasible, solve, SolveResult, SolveStatus, SolverConfig};

/// Magnitude of the probe forces used for workspace sweeps, newtons.
pub const WORKSPACE_PROBE_FORCE: f64 = 0.1;

pub const VALIDATION_CSV: &str = "validation.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const LAYOUT_TOML: &str = "layout.toml";

pub fn exit_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::FeasibleExact => 0,
        SolveStatus::NearestFeasible => 2,
        SolveStatus::IterationCap => 3,
    }
}

/// Formats a float so that it parses back to the same bits.
fn num(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Serialize)]
pub struct SolveOutput<'a> {
    pub desired_force: Vec3,
    pub anchor_ids: Vec<String>,
    #[serde(flatten)]
    pub result: &'a SolveResult,
}

pub fn cmd_solve(cfg: &ResolvedConfig, force: &Vec3, out: &mut impl Write) -> anyhow::Result<SolveResult> {
    let a = structure_matrix(&cfg.layout, &cfg.end_effector)?;
    let result = solve(&a, force, &cfg.bounds(), &cfg.solver)?;
    let payload = SolveOutput { desired_force: *force, anchor_ids: anchor_ids(&cfg.layout), result: &result };
    serde_json::to_writer_pretty(&mut *out, &payload)?;
    writeln!(out)?;
    Ok(result)
}

#[derive(Debug, Serialize)]
pub struct ValidationSummary<'a> {
    pub sample_count: usize,
    #[serde(flatten)]
    pub aggregates: &'a Aggregates,
    pub frame_correction: f64,
    pub hardware_reference: &'a HardwareReference,
    pub protocol: &'a ValidationProtocol,
    pub plant: &'a PlantModel,
    pub solver: &'a SolverConfig,
    pub layout: &'a ModuleLayout,
    pub end_effector: Vec3,
}

pub fn write_validation_csv(report: &ValidationReport, out: impl Write) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cx", "cy", "cz", "mx", "my", "mz", "angle_err_deg", "mag_err_N", "feasible"])?;
    for r in &report.records {
        let c = &r.commanded;
        let m = &r.measured;
        w.write_record([
            num(c.x),
            num(c.y),
            num(c.z),
            num(m.x),
            num(m.y),
            num(m.z),
            num(r.angle_error),
            num(r.magnitude_error),
            r.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the validation protocol and writes the record CSV, the JSON summary
/// and the layout used into `out_dir`.
pub fn cmd_validate(cfg: &ResolvedConfig, out_dir: &Path) -> anyhow::Result<ValidationReport> {
    let report = run_validation(&cfg.layout, &cfg.end_effector, &cfg.protocol, &cfg.plant, &cfg.solver)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let csv_path = out_dir.join(VALIDATION_CSV);
    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_validation_csv(&report, std::io::BufWriter::new(file))?;

    let summary = ValidationSummary {
        sample_count: report.records.len(),
        aggregates: &report.aggregates,
        frame_correction: report.frame_correction,
        hardware_reference: &report.hardware_reference,
        protocol: &cfg.protocol,
        plant: &cfg.plant,
        solver: &cfg.solver,
        layout: &cfg.layout,
        end_effector: cfg.end_effector,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    fs::write(out_dir.join(SUMMARY_JSON), json)?;
    fs::write(out_dir.join(LAYOUT_TOML), layout_to_toml(&cfg.layout, &cfg.end_effector)?)?;
    Ok(report)
}

/// The 26 unit directions toward the faces, edges and corners of a cube.
pub fn canonical_directions() -> Vec<Vec3> {
    let mut dirs = Vec::with_capacity(26);
    for x in -1..=1 {
        for y in -1..=1 {
            for z in -1..=1 {
                if (x, y, z) != (0, 0, 0) {
                    dirs.push(Vec3::new(x as f64, y as f64, z as f64).normalize());
                }
            }
        }
    }
    dirs
}

/// Fraction of the 26 canonical probe forces that are wrench-feasible at
/// `point`. Points on top of an anchor score 0.
pub fn feasible_fraction(layout: &ModuleLayout, point: &Vec3) -> f64 {
    let Ok(a) = structure_matrix(layout, point) else {
        return 0.0;
    };
    let dirs = canonical_directions();
    let ok = dirs.iter().filter(|d| is_wrench_feasible(&a, &(*d * WORKSPACE_PROBE_FORCE), &layout.bounds())).count();
    ok as f64 / dirs.len() as f64
}

pub fn cmd_workspace(cfg: &ResolvedConfig, grid: &GridSpec, out: impl Write) -> anyhow::Result<Vec<(Vec3, f64)>> {
    grid.validate()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "z", "feasible_fraction"])?;
    let mut rows = Vec::new();
    for p in grid.points() {
        let frac = feasible_fraction(&cfg.layout, &p);
        w.write_record([num(p.x), num(p.y), num(p.z), num(frac)])?;
        rows.push((p, frac));
    }
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialRow {
    pub point: TrajectoryPoint,
    pub desired_force: Vec3,
    pub result: SolveResult,
}

/// Evaluates the material along the trajectory and solves tensions for the
/// resulting force at each sample. The layout's end effector follows the
/// trajectory.
pub fn cmd_material(
    cfg: &ResolvedConfig,
    material: &MaterialModel,
    trajectory: &[TrajectoryPoint],
    out: impl Write,
) -> anyhow::Result<Vec<MaterialRow>> {
    let ids = anchor_ids(&cfg.layout);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["t", "x", "y", "z", "vx", "vy", "vz", "fx", "fy", "fz", "rx", "ry", "rz", "status", "residual_N"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(ids.iter().map(|id| format!("tension_{id}")));
    w.write_record(&header)?;

    let mut rows = Vec::with_capacity(trajectory.len());
    for p in trajectory {
        let state = EndEffectorState::new(p.position, p.velocity, p.time);
        let force = evaluate(material, &state);
        let a = structure_matrix(&cfg.layout, &p.position)
            .with_context(|| format!("trajectory point at t={}", p.time))?;
        let result = solve(&a, &force, &cfg.bounds(), &cfg.solver)?;

        let mut rec = vec![num(p.time)];
        for v in [&p.position, &p.velocity, &force, &result.rendered_force] {
            rec.extend(v.iter().map(|c| num(*c)));
        }
        rec.push(format!("{:?}", result.status));
        rec.push(num(result.force_residual));
        rec.extend(result.tensions.iter().map(|t| num(*t)));
        w.write_record(&rec)?;
        rows.push(MaterialRow { point: *p, desired_force: force, result });
    }
    w.flush()?;
    Ok(rows)
}
