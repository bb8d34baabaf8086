//! Browser demo: bend and twist a striped three-bone model and compare the
//! baseline skinning with linear and dual-quaternion blending.

use bskin_core::baseline::Profile;
use bskin_core::deformer::export_deformed_baselines;
use bskin_core::encoder::{encode_cloud, EncodedSet};
use bskin_core::fixtures::{stripe_cloud, stripe_model};
use bskin_core::pipeline::{skin_posed, SkinOptions};
use bskin_core::reference::{bone_transforms, dqs, gaussian_weights, lbs, WeightSet};
use bskin_core::sphere_mesh::{Pose, Skeleton};
use bskin_core::Vec3;
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Studio {
    rest: Skeleton,
    set: EncodedSet,
    points: Vec<Vec3>,
    weights: WeightSet,
    bends: [f64; 2],
    twist: f64,
    method: String,
    modulation: bool,
}

fn flatten(points: &[Vec3]) -> Vec<f32> {
    points.iter().flat_map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect()
}

#[wasm_bindgen]
impl Studio {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize) -> Studio {
        let rest = stripe_model();
        let points: Vec<Vec3> = stripe_cloud(&rest, n, 1).into_iter().map(|s| s.point).collect();
        let set = encode_cloud(&rest, None, &points, Profile::Cubic).expect("fixture encodes");
        let weights = gaussian_weights(&rest, &points, 1.0).expect("positive sigma");
        Studio {
            rest,
            set,
            points,
            weights,
            bends: [0.0; 2],
            twist: 0.0,
            method: "baseline".into(),
            modulation: true,
        }
    }

    /// Bend angle (radians) at joint 0 or 1, about the view's z axis.
    pub fn set_bend(&mut self, joint: usize, angle: f64) {
        if let Some(b) = self.bends.get_mut(joint) {
            *b = angle;
        }
    }

    /// Twist (radians) of the last bone.
    pub fn set_twist(&mut self, angle: f64) {
        self.twist = angle;
    }

    /// "baseline", "lbs" or "dqs".
    pub fn set_method(&mut self, method: &str) {
        self.method = method.to_string();
    }

    pub fn set_modulation(&mut self, on: bool) {
        self.modulation = on;
    }

    fn pose(&self) -> Pose {
        Pose::bend(1, Vec3::z(), self.bends[0])
            .with_bend(2, Vec3::z(), self.bends[1])
            .with_twist(2, self.twist)
    }

    /// Posed cloud as x, y, z triples.
    pub fn skin(&self) -> Result<Vec<f32>, JsError> {
        let posed = self.rest.apply_pose(&self.pose())?;
        let out = match self.method.as_str() {
            "lbs" => lbs(&self.points, &self.weights, &bone_transforms(&self.rest, &posed)),
            "dqs" => dqs(&self.points, &self.weights, &bone_transforms(&self.rest, &posed))?,
            _ => {
                let opts = SkinOptions {
                    modulation: self.modulation,
                    ..Default::default()
                };
                skin_posed(&self.rest, &posed, &self.set, &opts)?.0
            }
        };
        Ok(flatten(&out))
    }

    /// Posed baselines as x, y, z triples, each polyline followed by a NaN
    /// triple.
    pub fn baselines(&self, count: usize) -> Result<Vec<f32>, JsError> {
        let posed = self.rest.apply_pose(&self.pose())?;
        let mut out = Vec::new();
        for b in export_deformed_baselines(&self.rest, &posed, count, 12) {
            out.extend(b.points.iter().flat_map(|p| p.map(|v| v as f32)));
            out.extend([f32::NAN; 3]);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
