//! Module anchors, layouts and the cable structure matrix.
//!
//! Cables are ideal force lines: massless, inextensible, running straight from
//! the end effector to their anchor. The end effector is a point, so the
//! structure matrix is `3 × m` and maps a tension vector to a net force.

use nalgebra::{DVector, Matrix3xX, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::solver::TensionBounds;

/// Position in meters or force in newtons, depending on context.
pub type Vec3 = Vector3<f64>;

/// Below this end-effector/anchor distance a cable direction is meaningless.
pub const DEGENERATE_DISTANCE: f64 = 1e-6;

/// Two anchors closer than this are considered coincident.
pub const COINCIDENT_ANCHORS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleAnchor {
    pub id: String,
    pub position: Vec3,
}

impl ModuleAnchor {
    pub fn new(id: impl Into<String>, position: Vec3) -> Self {
        Self { id: id.into(), position }
    }
}

/// A validated set of anchors sharing one tension box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuleLayout {
    anchors: Vec<ModuleAnchor>,
    bounds: TensionBounds,
}

impl ModuleLayout {
    pub fn new(anchors: Vec<ModuleAnchor>, bounds: TensionBounds) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidLayout("layout needs at least one anchor".into()));
        }
        bounds.validate()?;
        for (i, a) in anchors.iter().enumerate() {
            if !a.position.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidLayout(format!("anchor {:?} has a non-finite position", a.id)));
            }
            for b in &anchors[..i] {
                if b.id == a.id {
                    return Err(Error::InvalidLayout(format!("duplicate anchor id {:?}", a.id)));
                }
                if (b.position - a.position).norm() < COINCIDENT_ANCHORS {
                    return Err(Error::InvalidLayout(format!(
                        "anchors {:?} and {:?} coincide",
                        b.id, a.id
                    )));
                }
            }
        }
        Ok(Self { anchors, bounds })
    }

    /// Anchors at the given positions, named `m0`, `m1`, ...
    pub fn from_positions(positions: &[Vec3], bounds: TensionBounds) -> Result<Self> {
        let anchors = positions
            .iter()
            .enumerate()
            .map(|(i, p)| ModuleAnchor::new(format!("m{i}"), *p))
            .collect();
        Self::new(anchors, bounds)
    }

    pub fn anchors(&self) -> &[ModuleAnchor] {
        &self.anchors
    }

    pub fn bounds(&self) -> TensionBounds {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

impl<'de> Deserialize<'de> for ModuleLayout {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            anchors: Vec<ModuleAnchor>,
            #[serde(default)]
            bounds: TensionBounds,
        }
        let raw = Raw::deserialize(de)?;
        ModuleLayout::new(raw.anchors, raw.bounds).map_err(serde::de::Error::custom)
    }
}

/// Unit vectors from the end effector toward each anchor, in layout order.
pub fn cable_directions(layout: &ModuleLayout, ee: &Vec3) -> Result<Vec<Vec3>> {
    layout
        .anchors()
        .iter()
        .map(|a| {
            let d = a.position - ee;
            let len = d.norm();
            if len.is_nan() || len <= DEGENERATE_DISTANCE {
                return Err(Error::DegenerateGeometry {
                    anchor: a.id.clone(),
                    threshold: DEGENERATE_DISTANCE,
                });
            }
            Ok(d / len)
        })
        .collect()
}

/// The `3 × m` matrix whose columns are unit cable directions; `A·t` is the
/// net force on the end effector for tensions `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix(Matrix3xX<f64>);

impl StructureMatrix {
    /// Builds from raw directions, normalizing each one.
    pub fn from_directions(dirs: &[Vec3]) -> Result<Self> {
        if dirs.is_empty() {
            return Err(Error::InvalidLayout("structure matrix needs at least one column".into()));
        }
        let mut cols = Vec::with_capacity(dirs.len());
        for d in dirs {
            let n = d.norm();
            if !n.is_finite() || n <= f64::EPSILON {
                return Err(Error::ZeroVector);
            }
            cols.push(d / n);
        }
        Ok(Self(Matrix3xX::from_columns(&cols)))
    }

    pub fn matrix(&self) -> &Matrix3xX<f64> {
        &self.0
    }

    pub fn ncables(&self) -> usize {
        self.0.ncols()
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }

    /// Net force `A·t`.
    pub fn apply(&self, t: &DVector<f64>) -> Vec3 {
        &self.0 * t
    }
}

pub fn structure_matrix(layout: &ModuleLayout, ee: &Vec3) -> Result<StructureMatrix> {
    let dirs = cable_directions(layout, ee)?;
    Ok(StructureMatrix(Matrix3xX::from_columns(&dirs)))
}

/// Numerical rank of `A`, singular values below `1e-9·σ_max` counted as zero.
///
/// Rank 3 with four or more positively spanning cables means the layout is
/// redundantly actuated; anything less is underactuated.
pub fn actuation_rank(a: &StructureMatrix) -> usize {
    linalg::numerical_rank(&linalg::singular_values(a.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn layout(points: &[Vec3]) -> ModuleLayout {
        ModuleLayout::from_positions(points, TensionBounds::default()).unwrap()
    }

    fn identity_layout() -> ModuleLayout {
        layout(&[Vec3::x(), Vec3::y(), Vec3::z()])
    }

    #[test]
    fn directions_simple_cases() {
        let d = cable_directions(&layout(&[Vec3::new(1.0, 0.0, 0.0)]), &Vec3::zeros()).unwrap();
        assert_eq!(d[0], Vec3::new(1.0, 0.0, 0.0));
        let d = cable_directions(&layout(&[Vec3::new(0.0, 0.0, 2.0)]), &Vec3::zeros()).unwrap();
        assert_eq!(d[0], Vec3::new(0.0, 0.0, 1.0));
        let d = cable_directions(&layout(&[Vec3::new(1.0, 1.0, 5.0)]), &Vec3::new(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(d[0], Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn ee_on_anchor_is_degenerate() {
        let l = layout(&[Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)]);
        let err = cable_directions(&l, &Vec3::new(1.0, 0.0, 5e-7)).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry { ref anchor, .. } if anchor == "m0"));
        assert!(structure_matrix(&l, &Vec3::new(0.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn layout_validation() {
        let b = TensionBounds::default();
        assert!(ModuleLayout::new(vec![], b).is_err());
        let dup = vec![ModuleAnchor::new("a", Vec3::x()), ModuleAnchor::new("a", Vec3::y())];
        assert!(ModuleLayout::new(dup, b).is_err());
        let coincident = vec![ModuleAnchor::new("a", Vec3::x()), ModuleAnchor::new("b", Vec3::x())];
        assert!(ModuleLayout::new(coincident, b).is_err());
        let nan = vec![ModuleAnchor::new("a", Vec3::new(f64::NAN, 0.0, 0.0))];
        assert!(ModuleLayout::new(nan, b).is_err());
    }

    #[test]
    fn identity_and_antagonistic_matrices() {
        let a = structure_matrix(&identity_layout(), &Vec3::zeros()).unwrap();
        assert_eq!(a.matrix().clone(), Matrix3xX::identity(3));
        assert_eq!(actuation_rank(&a), 3);

        let pair = layout(&[Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)]);
        let a = structure_matrix(&pair, &Vec3::zeros()).unwrap();
        assert_eq!(a.column(0), Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(a.column(1), Vec3::new(-1.0, 0.0, 0.0));
        assert_eq!(actuation_rank(&a), 1);
    }

    #[test]
    fn collinear_columns_rank_one() {
        let a = StructureMatrix::from_directions(&[Vec3::x(), Vec3::x()]).unwrap();
        assert_eq!(actuation_rank(&a), 1);
    }

    fn arb_vec(r: f64) -> impl Strategy<Value = Vec3> {
        (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn translation_invariance(
            pts in proptest::collection::vec(arb_vec(3.0), 1..8),
            ee in arb_vec(0.2),
            shift in arb_vec(10.0),
        ) {
            prop_assume!(pts.iter().all(|p| (p - ee).norm() > 0.1));
            let Ok(l) = ModuleLayout::from_positions(&pts, TensionBounds::default()) else {
                return Ok(());
            };
            let moved: Vec<Vec3> = pts.iter().map(|p| p + shift).collect();
            let lm = ModuleLayout::from_positions(&moved, TensionBounds::default()).unwrap();
            let d0 = cable_directions(&l, &ee).unwrap();
            let d1 = cable_directions(&lm, &(ee + shift)).unwrap();
            for (a, b) in d0.iter().zip(&d1) {
                prop_assert!((a - b).amax() <= 1e-12);
            }
        }

        #[test]
        fn rotation_equivariance(
            pts in proptest::collection::vec(arb_vec(3.0), 1..8),
            ee in arb_vec(0.2),
            axis in arb_vec(1.0),
            angle in -3.1f64..3.1,
        ) {
            prop_assume!(pts.iter().all(|p| (p - ee).norm() > 0.1));
            prop_assume!(axis.norm() > 1e-3);
            let Ok(l) = ModuleLayout::from_positions(&pts, TensionBounds::default()) else {
                return Ok(());
            };
            let rot = Rotation3::new(axis.normalize() * angle);
            let rotated: Vec<Vec3> = pts.iter().map(|p| rot * p).collect();
            let lr = ModuleLayout::from_positions(&rotated, TensionBounds::default()).unwrap();
            let a = structure_matrix(&l, &ee).unwrap();
            let ar = structure_matrix(&lr, &(rot * ee)).unwrap();
            for i in 0..a.ncables() {
                prop_assert!((rot * a.column(i) - ar.column(i)).amax() <= 1e-12);
            }
        }

        #[test]
        fn unit_columns_and_ones_sum(
            pts in proptest::collection::vec(arb_vec(3.0), 1..8),
            ee in arb_vec(0.2),
        ) {
            prop_assume!(pts.iter().all(|p| (p - ee).norm() > 0.1));
            let Ok(l) = ModuleLayout::from_positions(&pts, TensionBounds::default()) else {
                return Ok(());
            };
            let a = structure_matrix(&l, &ee).unwrap();
            let dirs = cable_directions(&l, &ee).unwrap();
            let sum: Vec3 = dirs.iter().sum();
            let ones = DVector::from_element(a.ncables(), 1.0);
            prop_assert!((a.apply(&ones) - sum).amax() <= 1e-12);
            for i in 0..a.ncables() {
                prop_assert!((a.column(i).norm() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
