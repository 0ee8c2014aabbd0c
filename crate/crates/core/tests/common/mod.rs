//! Reference solvers and instance generators shared by the integration tests.
//!
//! The QP oracle solves `min ‖t − t_start‖² s.t. A·t = f, t_min ≤ t ≤ t_max`
//! by enumerating every bound-activity pattern (each cable at its lower
//! bound, at its upper bound, or free). For each pattern the free cables are
//! the Euclidean projection of `t_start` onto the remaining equality
//! constraint; the best candidate that lies in the box and satisfies
//! `A·t = f` is the optimum. Nothing here calls into the Dykstra solver.

#![allow(dead_code)]

use cable_haptics::geometry::{structure_matrix, ModuleLayout, StructureMatrix, Vec3};
use cable_haptics::solver::TensionBounds;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Feasibility slack for oracle candidates.
const CANDIDATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Activity {
    Lower,
    Upper,
    Free,
}

/// Least-norm solution of `M·x = r` via SVD; `None` if inconsistent.
fn least_norm(m: &DMatrix<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = m.clone().svd(true, true);
    let x = svd.solve(r, 1e-12).ok()?;
    if (m * &x - r).amax() > 1e-9 {
        return None;
    }
    Some(x)
}

/// Exact projection of `start` onto `{A·t = f} ∩ box`, or `None` when the
/// intersection is empty.
pub fn qp_projection(a: &StructureMatrix, f: &Vec3, bounds: &TensionBounds, start: &DVector<f64>) -> Option<DVector<f64>> {
    let mat = a.matrix();
    let m = mat.ncols();
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut pattern = vec![Activity::Lower; m];
    let total = 3usize.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        for p in pattern.iter_mut() {
            *p = match c % 3 {
                0 => Activity::Lower,
                1 => Activity::Upper,
                _ => Activity::Free,
            };
            c /= 3;
        }
        let mut t = start.clone();
        let mut rhs = DVector::from_column_slice(f.as_slice());
        let free: Vec<usize> = (0..m).filter(|&i| pattern[i] == Activity::Free).collect();
        for i in 0..m {
            let v = match pattern[i] {
                Activity::Lower => bounds.t_min,
                Activity::Upper => bounds.t_max,
                Activity::Free => continue,
            };
            t[i] = v;
            for r in 0..3 {
                rhs[r] -= mat[(r, i)] * v;
            }
        }
        if !free.is_empty() {
            // t_F = s_F + A_Fᵀ·λ with (A_F·A_Fᵀ)·λ = rhs − A_F·s_F
            let af = DMatrix::from_fn(3, free.len(), |r, k| mat[(r, free[k])]);
            let sf = DVector::from_fn(free.len(), |k, _| start[free[k]]);
            let gram = &af * af.transpose();
            let Some(lambda) = least_norm(&gram, &(&rhs - &af * &sf)) else {
                continue;
            };
            let tf = sf + af.transpose() * lambda;
            for (k, &i) in free.iter().enumerate() {
                t[i] = tf[k];
            }
        }
        let in_box = t.iter().all(|&v| v >= bounds.t_min - CANDIDATE_TOL && v <= bounds.t_max + CANDIDATE_TOL);
        let balanced = (mat * &t - f).amax() <= 1e-9;
        if in_box && balanced {
            let cost = (&t - start).norm_squared();
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, t));
            }
        }
    }
    best.map(|(_, t)| t)
}

/// Random anchors on the unit sphere around the origin; resampled until the
/// structure matrix has full rank with a comfortable smallest singular value.
pub fn random_layout(rng: &mut impl Rng, m: usize, bounds: TensionBounds) -> (ModuleLayout, StructureMatrix) {
    loop {
        let pts: Vec<Vec3> = (0..m).map(|_| random_unit(rng)).collect();
        let Ok(layout) = ModuleLayout::from_positions(&pts, bounds) else {
            continue;
        };
        let a = structure_matrix(&layout, &Vec3::zeros()).unwrap();
        let sv = a.matrix().clone().svd(false, false).singular_values;
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if sv.len() == 3 && smin > 0.1 {
            return (layout, a);
        }
    }
}

pub fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Tensions drawn strictly inside the box.
pub fn interior_tensions(rng: &mut impl Rng, m: usize, bounds: &TensionBounds) -> DVector<f64> {
    let margin = 0.05 * (bounds.t_max - bounds.t_min);
    DVector::from_fn(m, |_, _| rng.random_range(bounds.t_min + margin..bounds.t_max - margin))
}

/// `argmin ‖A·t − f‖` over the box by projected gradient descent, run well past
/// convergence. Used where the Dykstra solver must fall back to the nearest
/// feasible force.
pub fn min_residual_box(a: &StructureMatrix, f: &Vec3, bounds: &TensionBounds) -> DVector<f64> {
    let mat = a.matrix();
    let m = mat.ncols();
    let lipschitz = mat.clone().svd(false, false).singular_values.max().powi(2);
    let step = 1.0 / lipschitz;
    let mut t = DVector::from_element(m, 0.5 * (bounds.t_min + bounds.t_max));
    for _ in 0..20_000 {
        let grad = mat.transpose() * (mat * &t - f);
        t -= grad * step;
        t.iter_mut().for_each(|v| *v = v.clamp(bounds.t_min, bounds.t_max));
    }
    t
}
