//! Virtual-material force laws.
//!
//! Each primitive maps an end-effector state to a desired force. Materials are
//! built by summing primitives in a [`MaterialModel::Composite`]; the presets
//! in [`Preset`] cover the magnetic, textured, shaped, vibrating and water
//! materials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndEffectorState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub time: f64,
}

impl EndEffectorState {
    pub fn new(position: Vec3, velocity: Vec3, time: f64) -> Self {
        Self { position, velocity, time }
    }

    pub fn at_rest(position: Vec3) -> Self {
        Self::new(position, Vec3::zeros(), 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialModel {
    /// Linear attraction toward `target`, capped at `max_force`.
    Magnetic { target: Vec3, gain: f64, max_force: f64 },
    /// One-sided penalty spring against the plane through `surface_point`.
    /// Positions with a negative signed distance along `normal` are inside.
    Spring { surface_point: Vec3, normal: Vec3, stiffness: f64 },
    Damper { coefficient: f64 },
    /// Viscous resistance to motion within the plane normal to
    /// `tangent_plane_normal`, capped at `max_force`.
    Friction { coefficient: f64, max_force: f64, tangent_plane_normal: Vec3 },
    /// `amplitude·sin(2π·frequency·t)` along `direction`. When `gate_speed`
    /// is positive the vibration is silent below that speed.
    Vibration {
        amplitude: f64,
        frequency: f64,
        direction: Vec3,
        #[serde(default)]
        gate_speed: f64,
    },
    Composite { children: Vec<MaterialModel> },
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMaterial(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

fn check_unit(name: &str, v: &Vec3) -> Result<()> {
    if (v.norm() - 1.0).abs() <= UNIT_TOL {
        Ok(())
    } else {
        Err(Error::InvalidMaterial(format!("{name} must be a unit vector, got norm {}", v.norm())))
    }
}

impl MaterialModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Magnetic { target, gain, max_force } => {
                if !target.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidMaterial("magnetic target must be finite".into()));
                }
                check_nonneg("gain", *gain)?;
                check_nonneg("max_force", *max_force)
            }
            Self::Spring { surface_point, normal, stiffness } => {
                if !surface_point.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidMaterial("surface point must be finite".into()));
                }
                check_unit("normal", normal)?;
                check_nonneg("stiffness", *stiffness)
            }
            Self::Damper { coefficient } => check_nonneg("coefficient", *coefficient),
            Self::Friction { coefficient, max_force, tangent_plane_normal } => {
                check_nonneg("coefficient", *coefficient)?;
                check_nonneg("max_force", *max_force)?;
                check_unit("tangent_plane_normal", tangent_plane_normal)
            }
            Self::Vibration { amplitude, frequency, direction, gate_speed } => {
                check_nonneg("amplitude", *amplitude)?;
                check_nonneg("frequency", *frequency)?;
                check_nonneg("gate_speed", *gate_speed)?;
                check_unit("direction", direction)
            }
            Self::Composite { children } => children.iter().try_for_each(Self::validate),
        }
    }

    /// Upper bound on the force magnitude, where one exists.
    pub fn force_cap(&self) -> Option<f64> {
        match self {
            Self::Magnetic { max_force, .. } | Self::Friction { max_force, .. } => Some(*max_force),
            Self::Vibration { amplitude, .. } => Some(*amplitude),
            Self::Spring { .. } | Self::Damper { .. } => None,
            Self::Composite { children } => children.iter().map(Self::force_cap).sum(),
        }
    }
}

pub fn evaluate(model: &MaterialModel, state: &EndEffectorState) -> Vec3 {
    match model {
        MaterialModel::Magnetic { target, gain, max_force } => {
            let d = target - state.position;
            let dist = d.norm();
            if dist <= f64::EPSILON {
                return Vec3::zeros();
            }
            d * ((gain * dist).min(*max_force) / dist)
        }
        MaterialModel::Spring { surface_point, normal, stiffness } => {
            let depth = -(state.position - surface_point).dot(normal);
            if depth > 0.0 {
                normal * (stiffness * depth)
            } else {
                Vec3::zeros()
            }
        }
        MaterialModel::Damper { coefficient } => -state.velocity * *coefficient,
        MaterialModel::Friction { coefficient, max_force, tangent_plane_normal } => {
            let n = tangent_plane_normal;
            let tangential = state.velocity - n * state.velocity.dot(n);
            let f = -tangential * *coefficient;
            let mag = f.norm();
            if mag > *max_force {
                f * (max_force / mag)
            } else {
                f
            }
        }
        MaterialModel::Vibration { amplitude, frequency, direction, gate_speed } => {
            if *gate_speed > 0.0 && state.velocity.norm() < *gate_speed {
                return Vec3::zeros();
            }
            let phase = 2.0 * std::f64::consts::PI * frequency * state.time;
            direction * (amplitude * phase.sin())
        }
        MaterialModel::Composite { children } => {
            children.iter().map(|c| evaluate(c, state)).fold(Vec3::zeros(), |acc, f| acc + f)
        }
    }
}

/// Ready-made materials around a reference point. Parameters are tuned to
/// stay inside a single motor's force range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Magnetic,
    Textured,
    Shaped,
    Vibrating,
    Water,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Self::Magnetic, Self::Textured, Self::Shaped, Self::Vibrating, Self::Water];

    pub fn build(self, center: Vec3) -> MaterialModel {
        let up = Vec3::z();
        match self {
            Self::Magnetic => MaterialModel::Magnetic { target: center, gain: 20.0, max_force: 3.0 },
            Self::Textured => MaterialModel::Composite {
                children: vec![
                    MaterialModel::Spring { surface_point: center, normal: up, stiffness: 300.0 },
                    MaterialModel::Vibration { amplitude: 0.4, frequency: 80.0, direction: up, gate_speed: 0.02 },
                    MaterialModel::Friction { coefficient: 4.0, max_force: 1.0, tangent_plane_normal: up },
                ],
            },
            Self::Shaped => MaterialModel::Spring { surface_point: center, normal: up, stiffness: 500.0 },
            Self::Vibrating => {
                MaterialModel::Vibration { amplitude: 1.0, frequency: 30.0, direction: up, gate_speed: 0.0 }
            }
            Self::Water => MaterialModel::Composite {
                children: vec![
                    MaterialModel::Damper { coefficient: 6.0 },
                    MaterialModel::Spring { surface_point: center, normal: up, stiffness: 40.0 },
                ],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(p: Vec3, v: Vec3, t: f64) -> EndEffectorState {
        EndEffectorState::new(p, v, t)
    }

    #[test]
    fn damper() {
        let f = evaluate(&MaterialModel::Damper { coefficient: 2.0 }, &state(Vec3::zeros(), Vec3::new(0.5, 0.0, 0.0), 0.0));
        assert_eq!(f, Vec3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn one_sided_spring() {
        let m = MaterialModel::Spring { surface_point: Vec3::zeros(), normal: Vec3::y(), stiffness: 100.0 };
        let inside = evaluate(&m, &EndEffectorState::at_rest(Vec3::new(0.0, -0.01, 0.0)));
        assert!((inside - Vec3::new(0.0, 1.0, 0.0)).amax() < 1e-12);
        assert_eq!(evaluate(&m, &EndEffectorState::at_rest(Vec3::new(0.0, 0.01, 0.0))), Vec3::zeros());
        assert_eq!(evaluate(&m, &EndEffectorState::at_rest(Vec3::zeros())), Vec3::zeros());
        let just_inside = evaluate(&m, &EndEffectorState::at_rest(Vec3::new(0.0, -1e-12, 0.0)));
        assert!(just_inside.norm() < 1e-9);
    }

    #[test]
    fn vibration_quarter_period() {
        let m = MaterialModel::Vibration { amplitude: 0.5, frequency: 100.0, direction: Vec3::z(), gate_speed: 0.0 };
        assert_eq!(evaluate(&m, &state(Vec3::zeros(), Vec3::zeros(), 0.0)), Vec3::zeros());
        let f = evaluate(&m, &state(Vec3::zeros(), Vec3::zeros(), 1.0 / 400.0));
        assert!((f - Vec3::new(0.0, 0.0, 0.5)).amax() < 1e-12);
    }

    #[test]
    fn gated_vibration_needs_motion() {
        let m = MaterialModel::Vibration { amplitude: 0.5, frequency: 100.0, direction: Vec3::z(), gate_speed: 0.1 };
        let t = 1.0 / 400.0;
        assert_eq!(evaluate(&m, &state(Vec3::zeros(), Vec3::new(0.05, 0.0, 0.0), t)), Vec3::zeros());
        assert!(evaluate(&m, &state(Vec3::zeros(), Vec3::new(0.2, 0.0, 0.0), t)).norm() > 0.49);
    }

    #[test]
    fn magnetic_linear_then_capped() {
        let m = MaterialModel::Magnetic { target: Vec3::new(1.0, 0.0, 0.0), gain: 3.0, max_force: 6.0 };
        assert_eq!(evaluate(&m, &EndEffectorState::at_rest(Vec3::zeros())), Vec3::new(3.0, 0.0, 0.0));
        // gain·d reaches the cap at d = 2 m; at d = 3 m the force is capped
        let far = evaluate(&m, &EndEffectorState::at_rest(Vec3::new(-2.0, 0.0, 0.0)));
        assert!((far - Vec3::new(6.0, 0.0, 0.0)).amax() < 1e-12);
        assert_eq!(evaluate(&m, &EndEffectorState::at_rest(Vec3::new(1.0, 0.0, 0.0))), Vec3::zeros());
    }

    #[test]
    fn friction_is_tangential_and_capped() {
        let m = MaterialModel::Friction { coefficient: 10.0, max_force: 1.0, tangent_plane_normal: Vec3::z() };
        let f = evaluate(&m, &state(Vec3::zeros(), Vec3::new(0.05, 0.0, 3.0), 0.0));
        assert!((f - Vec3::new(-0.5, 0.0, 0.0)).amax() < 1e-12);
        let f = evaluate(&m, &state(Vec3::zeros(), Vec3::new(0.0, 2.0, 0.0), 0.0));
        assert!((f - Vec3::new(0.0, -1.0, 0.0)).amax() < 1e-12);
    }

    #[test]
    fn two_dampers_make_one() {
        let comp = MaterialModel::Composite {
            children: vec![MaterialModel::Damper { coefficient: 1.0 }, MaterialModel::Damper { coefficient: 2.0 }],
        };
        let s = state(Vec3::zeros(), Vec3::new(0.1, -0.2, 0.3), 0.0);
        let single = evaluate(&MaterialModel::Damper { coefficient: 3.0 }, &s);
        assert!((evaluate(&comp, &s) - single).amax() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(MaterialModel::Damper { coefficient: -1.0 }.validate().is_err());
        let m = MaterialModel::Spring { surface_point: Vec3::zeros(), normal: Vec3::new(0.0, 2.0, 0.0), stiffness: 1.0 };
        assert!(m.validate().is_err());
        let nested = MaterialModel::Composite { children: vec![MaterialModel::Damper { coefficient: f64::NAN }] };
        assert!(nested.validate().is_err());
        for p in Preset::ALL {
            p.build(Vec3::new(0.0, 0.0, 0.3)).validate().unwrap();
        }
    }

    #[test]
    fn material_toml_shape() {
        let src = r#"
            type = "composite"
            [[children]]
            type = "damper"
            coefficient = 1.5
            [[children]]
            type = "vibration"
            amplitude = 0.2
            frequency = 50.0
            direction = [0.0, 0.0, 1.0]
        "#;
        let m: MaterialModel = toml::from_str(src).unwrap();
        assert_eq!(
            m,
            MaterialModel::Composite {
                children: vec![
                    MaterialModel::Damper { coefficient: 1.5 },
                    MaterialModel::Vibration { amplitude: 0.2, frequency: 50.0, direction: Vec3::z(), gate_speed: 0.0 },
                ]
            }
        );
    }

    fn arb_vec(r: f64) -> impl Strategy<Value = Vec3> {
        (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn arb_unit() -> impl Strategy<Value = Vec3> {
        arb_vec(1.0).prop_filter("nonzero", |v| v.norm() > 1e-3).prop_map(|v| v.normalize())
    }

    fn arb_primitive() -> impl Strategy<Value = MaterialModel> {
        prop_oneof![
            (arb_vec(1.0), 0.0f64..50.0, 0.0f64..6.0)
                .prop_map(|(target, gain, max_force)| MaterialModel::Magnetic { target, gain, max_force }),
            (arb_vec(1.0), arb_unit(), 0.0f64..500.0)
                .prop_map(|(surface_point, normal, stiffness)| MaterialModel::Spring { surface_point, normal, stiffness }),
            (0.0f64..10.0).prop_map(|coefficient| MaterialModel::Damper { coefficient }),
            (0.0f64..10.0, 0.0f64..3.0, arb_unit()).prop_map(|(coefficient, max_force, tangent_plane_normal)| {
                MaterialModel::Friction { coefficient, max_force, tangent_plane_normal }
            }),
            (0.0f64..2.0, 0.0f64..200.0, arb_unit(), 0.0f64..0.2).prop_map(
                |(amplitude, frequency, direction, gate_speed)| MaterialModel::Vibration {
                    amplitude,
                    frequency,
                    direction,
                    gate_speed
                }
            ),
        ]
    }

    fn arb_state() -> impl Strategy<Value = EndEffectorState> {
        (arb_vec(1.0), arb_vec(2.0), 0.0f64..10.0).prop_map(|(p, v, t)| EndEffectorState::new(p, v, t))
    }

    proptest! {
        #[test]
        fn composite_is_permutation_invariant_sum(
            children in proptest::collection::vec(arb_primitive(), 0..6),
            s in arb_state(),
            rot in 0usize..6,
        ) {
            let sum = children.iter().map(|c| evaluate(c, &s)).fold(Vec3::zeros(), |a, f| a + f);
            let mut shuffled = children.clone();
            if !shuffled.is_empty() {
                let k = rot % shuffled.len();
                shuffled.rotate_left(k);
                shuffled.reverse();
            }
            let a = evaluate(&MaterialModel::Composite { children }, &s);
            let b = evaluate(&MaterialModel::Composite { children: shuffled }, &s);
            prop_assert!((a - sum).amax() <= 1e-12);
            prop_assert!((b - sum).amax() <= 1e-12);
        }

        #[test]
        fn primitives_respect_caps_and_oppose_motion(m in arb_primitive(), s in arb_state()) {
            let f = evaluate(&m, &s);
            prop_assert!(f.iter().all(|c| c.is_finite()));
            if let Some(cap) = m.force_cap() {
                prop_assert!(f.norm() <= cap + 1e-12);
            }
            if matches!(m, MaterialModel::Damper { .. } | MaterialModel::Friction { .. }) {
                prop_assert!(f.dot(&s.velocity) <= 1e-15);
            }
        }

        #[test]
        fn spring_zero_outside_and_continuous(
            p in arb_vec(1.0), n in arb_unit(), k in 0.0f64..1000.0, h in 0.0f64..1e-6
        ) {
            let m = MaterialModel::Spring { surface_point: Vec3::zeros(), normal: n, stiffness: k };
            let outside = p - n * p.dot(&n) + n * (h + 1e-9);
            prop_assert_eq!(evaluate(&m, &EndEffectorState::at_rest(outside)), Vec3::zeros());
            let inside = p - n * p.dot(&n) - n * h;
            prop_assert!(evaluate(&m, &EndEffectorState::at_rest(inside)).norm() <= k * h * (1.0 + 1e-9) + 1e-12);
        }
    }
}
