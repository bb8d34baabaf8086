//! Batch commands and the HTTP service around the skinning pipeline.

use std::sync::OnceLock;

use bskin_core::encoder::EncodedSet;
use bskin_core::pipeline::{skin_posed, SkinOptions, SkinReport};
use bskin_core::reference::{bone_transforms, dqs, gaussian_weights, lbs, WeightSet};
use bskin_core::sphere_mesh::{Pose, Skeleton};
use bskin_core::{Error, Vec3};
use serde::{Deserialize, Serialize};

pub mod cli;
pub mod server;

pub use cli::run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Baseline,
    Lbs,
    Dqs,
}

/// Gaussian width factor of the reference skinners' weights.
pub const SIGMA_FACTOR: f64 = 1.0;

/// A rest skeleton with its encoded cloud; immutable once built.
pub struct Model {
    pub rest: Skeleton,
    pub set: EncodedSet,
    /// Rest positions in point-index order.
    pub points: Vec<Vec3>,
    weights: OnceLock<WeightSet>,
}

impl Model {
    pub fn new(rest: Skeleton, set: EncodedSet, points: Vec<Vec3>) -> Model {
        Model {
            rest,
            set,
            points,
            weights: OnceLock::new(),
        }
    }

    /// Rebuilds the rest positions from the encoding (identity pose).
    pub fn from_encoded(rest: Skeleton, set: EncodedSet) -> Result<Model, Error> {
        let (out, _) = skin_posed(&rest, &rest, &set, &SkinOptions::default())?;
        let points = in_point_order(&set, out);
        Ok(Model::new(rest, set, points))
    }

    fn weights(&self) -> Result<&WeightSet, Error> {
        if let Some(w) = self.weights.get() {
            return Ok(w);
        }
        let w = gaussian_weights(&self.rest, &self.points, SIGMA_FACTOR)?;
        Ok(self.weights.get_or_init(|| w))
    }

    /// Posed cloud in point-index order.
    pub fn deform(&self, pose: &Pose, method: Method, opts: &SkinOptions) -> Result<(Vec<Vec3>, Option<SkinReport>), Error> {
        self.set.check(&self.rest)?;
        let posed = self.rest.apply_pose(pose)?;
        match method {
            Method::Baseline => {
                let (out, report) = skin_posed(&self.rest, &posed, &self.set, opts)?;
                Ok((in_point_order(&self.set, out), Some(report)))
            }
            Method::Lbs => Ok((lbs(&self.points, self.weights()?, &bone_transforms(&self.rest, &posed)), None)),
            Method::Dqs => Ok((dqs(&self.points, self.weights()?, &bone_transforms(&self.rest, &posed))?, None)),
        }
    }
}

/// Reorders skinned points (encoding order) by their point index.
pub fn in_point_order(set: &EncodedSet, out: Vec<Vec3>) -> Vec<Vec3> {
    let mut ordered = vec![Vec3::zeros(); out.len()];
    for (ep, p) in set.points.iter().zip(out) {
        if let Some(slot) = ordered.get_mut(ep.point_index as usize) {
            *slot = p;
        }
    }
    ordered
}

/// Bad input (1) or internal failure (2).
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::UnsupportedFormat(_)
        | Error::Io(_)
        | Error::InvalidSkeleton(_)
        | Error::InvalidPose(_)
        | Error::InvalidJointRef(_)
        | Error::InvalidBoneRef(_)
        | Error::SkeletonMismatch
        | Error::Unregistered(_)
        | Error::NestedSpheres(..)
        | Error::OutOfRange { .. } => 1,
        _ => 2,
    }
}
