use std::collections::BTreeMap;

use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{Bone, BoneId, Skeleton, SphereId};
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Rotation of the subtree below a joint sphere about an axis through its
/// center. The axis is expressed in the rest frame of the parent bone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bend {
    pub joint_sphere_id: SphereId,
    pub axis: Vec3,
    pub angle_rad: f64,
    /// Restricts the bend to the subtree of one child bone of the joint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bone_id: Option<BoneId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub bone_id: BoneId,
    pub angle_rad: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Anatomy {
    #[serde(default)]
    pub sphere_scales: BTreeMap<SphereId, f64>,
    #[serde(default)]
    pub bone_length_scales: BTreeMap<BoneId, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    #[serde(default = "super::one")]
    pub version: u32,
    #[serde(default)]
    pub bends: Vec<Bend>,
    #[serde(default)]
    pub twists: Vec<Twist>,
    #[serde(default)]
    pub anatomy: Anatomy,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Pose {
        Pose {
            version: 1,
            bends: Vec::new(),
            twists: Vec::new(),
            anatomy: Anatomy::default(),
        }
    }

    pub fn bend(joint_sphere_id: SphereId, axis: Vec3, angle_rad: f64) -> Pose {
        Pose::identity().with_bend(joint_sphere_id, axis, angle_rad)
    }

    pub fn with_bend(mut self, joint_sphere_id: SphereId, axis: Vec3, angle_rad: f64) -> Pose {
        self.bends.push(Bend {
            joint_sphere_id,
            axis,
            angle_rad,
            bone_id: None,
        });
        self
    }

    pub fn with_twist(mut self, bone_id: BoneId, angle_rad: f64) -> Pose {
        self.twists.push(Twist { bone_id, angle_rad });
        self
    }

    pub fn is_identity(&self) -> bool {
        self.bends.iter().all(|b| b.angle_rad == 0.0)
            && self.twists.iter().all(|t| t.angle_rad == 0.0)
            && self.anatomy.sphere_scales.values().all(|&s| s == 1.0)
            && self.anatomy.bone_length_scales.values().all(|&s| s == 1.0)
    }

    /// Checks every reference and value against `sk`.
    pub fn validate(&self, sk: &Skeleton) -> Result<()> {
        for b in &self.bends {
            let j = sk
                .sphere_idx(b.joint_sphere_id)
                .ok_or(Error::InvalidJointRef(b.joint_sphere_id))?;
            if !b.angle_rad.is_finite() {
                return Err(Error::InvalidPose(format!("bend angle at joint {} is not finite", b.joint_sphere_id)));
            }
            let n = b.axis.norm();
            if !(n.is_finite() && n > 1e-12) {
                return Err(Error::InvalidPose(format!("bend axis at joint {} is degenerate", b.joint_sphere_id)));
            }
            if let Some(id) = b.bone_id {
                let bi = sk.bone_idx(id).ok_or(Error::InvalidBoneRef(id))?;
                if sk.bones[bi].prox != j {
                    return Err(Error::InvalidBoneRef(id));
                }
            }
        }
        for t in &self.twists {
            sk.bone_idx(t.bone_id).ok_or(Error::InvalidBoneRef(t.bone_id))?;
            if !t.angle_rad.is_finite() {
                return Err(Error::InvalidPose(format!("twist of bone {} is not finite", t.bone_id)));
            }
        }
        for (&id, &s) in &self.anatomy.sphere_scales {
            sk.sphere_idx(id).ok_or(Error::InvalidJointRef(id))?;
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidPose(format!("scale of sphere {id} must be positive")));
            }
        }
        for (&id, &s) in &self.anatomy.bone_length_scales {
            sk.bone_idx(id).ok_or(Error::InvalidBoneRef(id))?;
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidPose(format!("length scale of bone {id} must be positive")));
            }
        }
        Ok(())
    }
}

impl Skeleton {
    /// Places the skeleton in `pose`. Anatomy scales are applied first, then
    /// bends and twists from the root outwards. `self` must be the rest
    /// skeleton.
    pub fn apply_pose(&self, pose: &Pose) -> Result<Skeleton> {
        pose.validate(self)?;
        let mut spheres = self.spheres.clone();
        let n_bones = self.bones.len();

        for (&id, &s) in &pose.anatomy.sphere_scales {
            spheres[self.sphere_idx(id).unwrap()].radius *= s;
        }
        // Length changes translate whole distal subtrees along the rest axis.
        for &s in &self.sphere_order {
            for b in self.child_bones(s) {
                let bone = &self.bones[b];
                let scale = pose.anatomy.bone_length_scales.get(&bone.id).copied().unwrap_or(1.0);
                if scale == 1.0 {
                    continue;
                }
                let shift = bone.axis * (bone.length * (scale - 1.0));
                for sb in self.subtree_bones(b) {
                    let d = self.bones[sb].dist;
                    spheres[d].center += shift;
                }
            }
        }

        let mut rot = vec![UnitQuaternion::identity(); n_bones];
        let mut twist = vec![0.0; n_bones];
        for t in &pose.twists {
            twist[self.bone_idx(t.bone_id).unwrap()] += t.angle_rad;
        }

        for &j in &self.sphere_order {
            // Frame of the parent bone at its distal end, twist included.
            let parent_frame = match self.parent_bone[j] {
                Some(pb) => twist_rotation(&rot[pb], &self.bones[pb], twist[pb]),
                None => UnitQuaternion::identity(),
            };
            let center = spheres[j].center;
            for bend in pose.bends.iter().filter(|b| self.sphere_idx(b.joint_sphere_id) == Some(j)) {
                if bend.angle_rad == 0.0 {
                    continue;
                }
                let axis = Unit::new_normalize(parent_frame * bend.axis);
                let q = UnitQuaternion::from_axis_angle(&axis, bend.angle_rad);
                let roots: Vec<usize> = match bend.bone_id {
                    Some(id) => vec![self.bone_idx(id).unwrap()],
                    None => self.child_bones(j).collect(),
                };
                for r in roots {
                    rotate_subtree(self, &mut spheres, &mut rot, r, center, &q, true);
                }
            }
            for c in self.child_bones(j).collect::<Vec<_>>() {
                if twist[c] == 0.0 {
                    continue;
                }
                let cp = spheres[self.bones[c].prox].center;
                let cd = spheres[self.bones[c].dist].center;
                let axis = Unit::new_normalize(cd - cp);
                let q = UnitQuaternion::from_axis_angle(&axis, twist[c]);
                rotate_subtree(self, &mut spheres, &mut rot, c, cp, &q, false);
            }
        }

        let bones = self
            .bones
            .iter()
            .enumerate()
            .map(|(i, b)| {
                Bone::build(
                    b.id,
                    (b.start, b.end),
                    (b.prox, b.dist),
                    &spheres,
                    rot[i] * b.e0,
                    (rot[i], twist[i]),
                    &self.tol,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Skeleton {
            spheres,
            bones,
            ..self.clone()
        })
    }
}

/// Rigid motion of bone `k` from `rest` to `posed`: its frame rotation and
/// own twist, about the proximal center.
pub fn bone_motion(rest: &Skeleton, posed: &Skeleton, k: usize) -> Isometry3<f64> {
    let b = &posed.bones[k];
    let r = UnitQuaternion::from_axis_angle(&Unit::new_normalize(b.axis), b.twist) * b.rotation;
    let t = b.c_prox - r * rest.bones[k].c_prox;
    Isometry3::from_parts(Translation3::from(t), r)
}

/// Posed frame of `bone` including its own twist.
fn twist_rotation(rot: &UnitQuaternion<f64>, bone: &Bone, twist: f64) -> UnitQuaternion<f64> {
    if twist == 0.0 {
        return *rot;
    }
    let u = Unit::new_normalize(rot * bone.axis);
    UnitQuaternion::from_axis_angle(&u, twist) * rot
}

/// Rotates every sphere below `root` (its distal sphere and beyond) about
/// `center`. With `include_root` the rotation is also composed into the
/// frame of `root` itself; a twist leaves the twisted bone's frame alone.
fn rotate_subtree(
    sk: &Skeleton,
    spheres: &mut [super::SphereNode],
    rot: &mut [UnitQuaternion<f64>],
    root: usize,
    center: Vec3,
    q: &UnitQuaternion<f64>,
    include_root: bool,
) {
    for b in sk.subtree_bones(root) {
        let d = sk.bones[b].dist;
        spheres[d].center = center + q * (spheres[d].center - center);
        if include_root || b != root {
            rot[b] = q * rot[b];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_mesh::{BoneRecord, SkeletonFile, SphereNode};
    use std::f64::consts::PI;

    fn chain(n: usize, radii: &[f64]) -> Skeleton {
        let spheres = (0..=n)
            .map(|i| SphereNode {
                id: i as u32,
                center: Vec3::new(4.0 * i as f64, 0.0, 0.0),
                radius: radii[i],
            })
            .collect();
        let bones = (0..n)
            .map(|i| BoneRecord {
                id: i as u32,
                start: i as u32,
                end: i as u32 + 1,
            })
            .collect();
        Skeleton::from_file(&SkeletonFile {
            version: 1,
            spheres,
            bones,
            chains: None,
            registration: None,
        })
        .unwrap()
    }

    #[test]
    fn identity_pose_is_identity() {
        let sk = chain(3, &[1.0, 0.9, 0.8, 0.7]);
        let posed = sk.apply_pose(&Pose::identity()).unwrap();
        for (a, b) in sk.spheres.iter().zip(&posed.spheres) {
            assert!((a.center - b.center).norm() < 1e-12);
            assert!((a.radius - b.radius).abs() < 1e-12);
        }
        for (a, b) in sk.bones.iter().zip(&posed.bones) {
            assert!((a.e0 - b.e0).norm() < 1e-12);
        }
    }

    #[test]
    fn single_bend_rotates_downstream_sphere() {
        let sk = chain(2, &[1.0, 1.0, 1.0]);
        let posed = sk.apply_pose(&Pose::bend(1, Vec3::z(), PI / 6.0)).unwrap();
        let c = posed.spheres[2].center;
        let expect = Vec3::new(4.0, 0.0, 0.0) + Vec3::new((PI / 6.0).cos(), (PI / 6.0).sin(), 0.0) * 4.0;
        assert!((c - expect).norm() < 1e-12);
        assert_eq!(posed.spheres[1].center, sk.spheres[1].center);
    }

    #[test]
    fn radius_scale_recomputes_cone() {
        let sk = chain(2, &[1.0, 1.0, 1.0]);
        let mut pose = Pose::identity();
        pose.anatomy.sphere_scales.insert(1, 1.1);
        let posed = sk.apply_pose(&pose).unwrap();
        assert!((posed.spheres[1].radius - 1.1).abs() < 1e-15);
        // by hand: sin α = (r₁ − r₂)/l
        assert!((posed.bones[0].sin_a - (1.0 - 1.1) / 4.0).abs() < 1e-12);
        assert!((posed.bones[1].sin_a - (1.1 - 1.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn length_scale_moves_distal_subtree() {
        let sk = chain(2, &[1.0, 1.0, 1.0]);
        let mut pose = Pose::identity();
        pose.anatomy.bone_length_scales.insert(0, 1.5);
        let posed = sk.apply_pose(&pose).unwrap();
        assert!((posed.spheres[1].center.x - 6.0).abs() < 1e-12);
        assert!((posed.spheres[2].center.x - 10.0).abs() < 1e-12);
    }

    #[test]
    fn twist_carries_child_bend_axis() {
        let sk = chain(2, &[1.0, 1.0, 1.0]);
        // twisting bone 0 by 90° about x turns a z bend axis into a -y one
        let pose = Pose::bend(1, Vec3::z(), PI / 2.0).with_twist(0, PI / 2.0);
        let posed = sk.apply_pose(&pose).unwrap();
        let c = posed.spheres[2].center;
        assert!((c - Vec3::new(4.0, 0.0, 4.0)).norm() < 1e-12, "{c:?}");
        assert_eq!(posed.bones[0].twist, PI / 2.0);
    }

    #[test]
    fn unknown_references_rejected() {
        let sk = chain(2, &[1.0, 1.0, 1.0]);
        assert_eq!(
            sk.apply_pose(&Pose::bend(9, Vec3::z(), 0.1)),
            Err(Error::InvalidJointRef(9))
        );
        assert_eq!(
            sk.apply_pose(&Pose::identity().with_twist(7, 0.1)),
            Err(Error::InvalidBoneRef(7))
        );
    }

    #[test]
    fn pose_json_roundtrip() {
        let text = r#"{"bends":[{"joint_sphere_id":1,"axis":[0,0,1],"angle_rad":0.5}],
            "twists":[{"bone_id":0,"angle_rad":0.25}],
            "anatomy":{"sphere_scales":{"1":1.1},"bone_length_scales":{}}}"#;
        let pose: Pose = serde_json::from_str(text).unwrap();
        assert_eq!(pose.version, 1);
        assert_eq!(pose.anatomy.sphere_scales[&1], 1.1);
        let back: Pose = serde_json::from_str(&serde_json::to_string(&pose).unwrap()).unwrap();
        assert_eq!(back, pose);
    }
}
