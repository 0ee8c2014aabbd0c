//! Bounded tension distribution by Dykstra's alternating projections.
//!
//! The feasible set is the intersection of the tension box
//! `[t_min, t_max]^m` with the equilibrium subspace `{t : A·t = f}`. Dykstra's
//! method, started at `t_start`, converges to the Euclidean projection of
//! `t_start` onto that intersection. With the default start `t_min·1` the
//! result is the feasible tension vector closest to all-minimum tension.
//!
//! When the intersection is empty the box iterates settle on the box point
//! nearest the equilibrium set and the result is reported as
//! [`SolveStatus::NearestFeasible`]. Returned tensions are always taken right
//! after a box projection, so they never leave the box.

use nalgebra::{DVector, Matrix3, Matrix3xX};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{StructureMatrix, Vec3};
use crate::linalg;

/// Residual threshold for [`is_wrench_feasible`].
pub const WRENCH_FEASIBLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensionBounds {
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for TensionBounds {
    /// 0.5 N keeps the cable taut; 6.0 N is the motor's steady-state limit.
    fn default() -> Self {
        Self { t_min: 0.5, t_max: 6.0 }
    }
}

impl TensionBounds {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        let b = Self { t_min, t_max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_min.is_finite() && self.t_max.is_finite() && 0.0 <= self.t_min && self.t_min < self.t_max {
            Ok(())
        } else {
            Err(Error::InvalidBounds { t_min: self.t_min, t_max: self.t_max })
        }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.t_min, self.t_max)
    }

    pub fn contains(&self, t: &TensionVector, slack: f64) -> bool {
        t.iter().all(|&v| v >= self.t_min - slack && v <= self.t_max + slack)
    }
}

/// Cable tensions in newtons, index-aligned with the layout's anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct TensionVector(pub DVector<f64>);

impl From<Vec<f64>> for TensionVector {
    fn from(v: Vec<f64>) -> Self {
        Self::from_vec(v)
    }
}

impl From<TensionVector> for Vec<f64> {
    fn from(t: TensionVector) -> Self {
        t.to_vec()
    }
}

impl TensionVector {
    pub fn from_vec(v: Vec<f64>) -> Self {
        Self(DVector::from_vec(v))
    }

    pub fn constant(m: usize, value: f64) -> Self {
        Self(DVector::from_element(m, value))
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }
}

impl std::ops::Deref for TensionVector {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// Start every cable at `t_min`.
    #[default]
    MinTension,
    Custom(TensionVector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Newtons; applies to the per-sweep displacement and the force residual.
    pub tolerance: f64,
    pub start_mode: StartMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iterations: 2000, tolerance: 1e-8, start_mode: StartMode::MinTension }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidSolverConfig("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidSolverConfig(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if let StartMode::Custom(t) = &self.start_mode {
            if !t.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidSolverConfig("custom start has non-finite entries".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    FeasibleExact,
    NearestFeasible,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub tensions: TensionVector,
    pub rendered_force: Vec3,
    pub force_residual: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

pub fn project_box(t: &TensionVector, bounds: &TensionBounds) -> TensionVector {
    TensionVector(t.map(|v| bounds.clamp(v)))
}

/// Orthogonal projector onto `{t : A·t = f̂}`, `f̂` being `f` projected onto
/// the range of `A`. Uses `Aᵀ(A·Aᵀ)⁺`, so rank-deficient layouts are fine.
#[derive(Debug, Clone)]
pub struct EquilibriumProjector {
    a: Matrix3xX<f64>,
    gram_pinv: Matrix3<f64>,
    force: Vec3,
}

impl EquilibriumProjector {
    pub fn new(a: &StructureMatrix, force: Vec3) -> Self {
        Self { a: a.matrix().clone(), gram_pinv: linalg::gram_pinv(a.matrix()), force }
    }

    pub fn project(&self, t: &DVector<f64>) -> DVector<f64> {
        let r = &self.a * t - self.force;
        t - self.a.transpose() * (self.gram_pinv * r)
    }

    /// Minimum-norm tension vector producing the reachable part of the force.
    pub fn particular_solution(&self) -> DVector<f64> {
        self.a.transpose() * (self.gram_pinv * self.force)
    }
}

pub fn project_equilibrium(t: &TensionVector, a: &StructureMatrix, f: &Vec3) -> TensionVector {
    TensionVector(EquilibriumProjector::new(a, *f).project(t))
}

/// Orthonormal basis of the internal-tension space `{v : A·v = 0}`;
/// dimension `m − rank(A)`.
pub fn null_space_basis(a: &StructureMatrix) -> Vec<TensionVector> {
    linalg::null_space(a.matrix()).into_iter().map(TensionVector).collect()
}

/// Dykstra's alternating projections between the equilibrium subspace and the
/// tension box.
///
/// Only the box step carries a correction term: the equilibrium set is affine,
/// so its correction always lies in the row space of `A` and projecting it
/// away is a no-op.
///
/// Sweeps during which the box iterate is frozen are fast-forwarded in closed
/// form; `iterations` counts performed sweeps.
pub fn solve(a: &StructureMatrix, f: &Vec3, bounds: &TensionBounds, config: &SolverConfig) -> Result<SolveResult> {
    bounds.validate()?;
    config.validate()?;
    let m = a.ncables();
    let start = match &config.start_mode {
        StartMode::MinTension => DVector::from_element(m, bounds.t_min),
        StartMode::Custom(t) if t.len() == m => t.0.clone(),
        StartMode::Custom(t) => return Err(Error::DimensionMismatch { expected: m, got: t.len() }),
    };

    let eq = EquilibriumProjector::new(a, *f);
    let tol = config.tolerance;
    let residual = |t: &DVector<f64>| (a.apply(t) - f).norm();

    let mut x = start;
    let mut correction = DVector::zeros(m);
    let mut prev_residual = residual(&x);
    let mut status = SolveStatus::IterationCap;
    let mut iterations = 0;
    let mut next = DVector::zeros(m);

    for k in 1..=config.max_iterations {
        iterations = k;
        let y = eq.project(&x);
        let shifted = y + &correction;
        next.iter_mut().zip(shifted.iter()).for_each(|(n, &s)| *n = bounds.clamp(s));
        correction = shifted - &next;

        let displacement = (&next - &x).amax();
        std::mem::swap(&mut x, &mut next);
        let res = residual(&x);
        if displacement <= tol {
            if res <= tol {
                status = SolveStatus::FeasibleExact;
                break;
            }
            // Small steps alone also occur during stalls and slow linear
            // convergence, so x must be a fixed point of box∘equilibrium and
            // carry a certificate that the two sets are disjoint.
            if (res - prev_residual).abs() <= tol / 10.0
                && fixed_point_defect(&eq, bounds, &x) <= tol
                && certifies_infeasible(&eq, bounds, &x)
            {
                status = SolveStatus::NearestFeasible;
                break;
            }
        }
        prev_residual = res;
        if displacement == 0.0 {
            skip_stall(&eq, bounds, &x, &mut correction);
        }
    }

    let rendered_force = a.apply(&x);
    let force_residual = (rendered_force - f).norm();
    if status == SolveStatus::IterationCap && force_residual <= tol {
        status = SolveStatus::FeasibleExact;
    }
    Ok(SolveResult { tensions: TensionVector(x), rendered_force, force_residual, status, iterations })
}

/// Fast-forwards a Dykstra stall.
///
/// While the box iterate `x` repeats exactly, every sweep sees the same
/// `y = P_eq(x)` and only adds `d = y − x` to the box correction. The stall
/// ends on the first sweep where some clamped coordinate of `y + q` crosses
/// back into the box, which is computable in closed form. All sweeps before
/// that one are applied at once.
fn skip_stall(eq: &EquilibriumProjector, bounds: &TensionBounds, x: &DVector<f64>, correction: &mut DVector<f64>) {
    let y = eq.project(x);
    let step = &y - x;
    // sweeps (from the next one) that still reproduce x
    let mut stalled = f64::INFINITY;
    for i in 0..x.len() {
        let (shifted, d) = (y[i] + correction[i], step[i]);
        let room = if x[i] == bounds.t_min && d > 0.0 {
            (bounds.t_min - shifted) / d
        } else if x[i] == bounds.t_max && d < 0.0 {
            (bounds.t_max - shifted) / d
        } else {
            continue;
        };
        stalled = stalled.min(room.floor() + 1.0);
    }
    if stalled.is_finite() && stalled > 2.0 {
        *correction += step * (stalled - 1.0);
    }
}

/// `‖x − P_box(P_eq(x))‖∞`.
fn fixed_point_defect(eq: &EquilibriumProjector, bounds: &TensionBounds, x: &DVector<f64>) -> f64 {
    eq.project(x).iter().zip(x.iter()).map(|(&y, &xi)| (bounds.clamp(y) - xi).abs()).fold(0.0, f64::max)
}

/// Farkas test at `x`. With `y = P_eq(x)`, `d = y − x = Aᵀμ` and
/// `r = f − A·y` orthogonal to the range of `A`, the multiplier `μ + r` gives
/// `(μ + r)ᵀA·t = dᵀt ≤ Σ max(dᵢ·t_min, dᵢ·t_max)` for every box tension `t`,
/// while `(μ + r)ᵀf = dᵀx + ‖d‖² + ‖r‖²`. If the bound falls short, no tension
/// in the box balances `f`. Near a nearest-feasible point the margin
/// approaches `‖d‖² + ‖r‖²`; requiring half of it keeps rounding from
/// certifying a feasible problem.
fn certifies_infeasible(eq: &EquilibriumProjector, bounds: &TensionBounds, x: &DVector<f64>) -> bool {
    let y = eq.project(x);
    let unreachable = (eq.force - &eq.a * &y).norm_squared();
    let d = y - x;
    let gap2 = d.norm_squared() + unreachable;
    if gap2 == 0.0 {
        return false;
    }
    let reach: f64 = d.iter().map(|&di| (di * bounds.t_min).max(di * bounds.t_max)).sum();
    d.dot(x) + gap2 - reach >= 0.5 * gap2
}

/// Whether some tension inside the box renders `f` to within
/// [`WRENCH_FEASIBLE_TOL`].
pub fn is_wrench_feasible(a: &StructureMatrix, f: &Vec3, bounds: &TensionBounds) -> bool {
    match solve(a, f, bounds, &SolverConfig::default()) {
        Ok(r) => r.force_residual <= WRENCH_FEASIBLE_TOL,
        Err(_) => false,
    }
}
