//! Weight-based skinners over the same skeleton, for comparison: linear
//! blend and dual-quaternion blend with Gaussian surface-distance weights.

use nalgebra::{Matrix3, Matrix4, Point3, Quaternion, Rotation3, UnitQuaternion};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sphere_mesh::{bone_motion, Skeleton};

pub const MAX_INFLUENCES: usize = 4;

/// Per point, up to four (bone index, weight) pairs summing to one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightSet {
    pub weights: Vec<Vec<(usize, f64)>>,
}

/// Weight of bone i ∝ exp(-d_i² / 2σ_i²), d_i the distance to the bone's
/// surface and σ_i = `sigma_factor` × its mean end radius.
pub fn gaussian_weights(sk: &Skeleton, points: &[Vec3], sigma_factor: f64) -> Result<WeightSet> {
    if !(sigma_factor > 0.0) {
        return Err(Error::OutOfRange {
            value: sigma_factor,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let weights = crate::par_map(points.len(), |i| {
        let p = &points[i];
        // log-weights, shifted by their max so the best bone never underflows
        let mut logs: Vec<(usize, f64)> = sk
            .bones
            .iter()
            .enumerate()
            .map(|(b, bone)| {
                let sigma = sigma_factor * 0.5 * (bone.r_prox + bone.r_dist);
                let d = bone.signed_distance(p).abs();
                (b, -d * d / (2.0 * sigma * sigma))
            })
            .collect();
        logs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        logs.truncate(MAX_INFLUENCES);
        let top = logs[0].1;
        let mut w: Vec<(usize, f64)> = logs.iter().map(|&(b, l)| (b, (l - top).exp())).collect();
        let sum: f64 = w.iter().map(|x| x.1).sum();
        w.iter_mut().for_each(|x| x.1 /= sum);
        w.retain(|x| x.1 > 0.0);
        w
    });
    Ok(WeightSet { weights })
}

/// Homogeneous rest-to-pose transform of every bone.
pub fn bone_transforms(rest: &Skeleton, posed: &Skeleton) -> Vec<Matrix4<f64>> {
    (0..rest.bones.len()).map(|k| bone_motion(rest, posed, k).to_homogeneous()).collect()
}

/// p' = Σ w_i M_i p.
pub fn lbs(points: &[Vec3], weights: &WeightSet, transforms: &[Matrix4<f64>]) -> Vec<Vec3> {
    crate::par_map(points.len(), |i| {
        let p = points[i].push(1.0);
        weights.weights[i]
            .iter()
            .fold(Vec3::zeros(), |acc, &(b, w)| acc + (transforms[b] * p).xyz() * w)
    })
}

/// Rotation and translation of a rigid homogeneous transform, or `None`
/// when its linear part is not a rotation.
fn rigid_parts(m: &Matrix4<f64>) -> Option<(UnitQuaternion<f64>, Vec3)> {
    let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    let bottom = m.fixed_view::<1, 4>(3, 0);
    if ortho > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 || (bottom - nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0)).abs().max() > 1e-12 {
        return None;
    }
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    Some((q, m.fixed_view::<3, 1>(0, 3).into()))
}

/// Blended rigid transform of one point's influences.
pub fn dq_blend(influences: &[(usize, f64)], parts: &[(UnitQuaternion<f64>, Vec3)]) -> (UnitQuaternion<f64>, Vec3) {
    // pivot: the heaviest influence fixes the hemisphere
    let pivot = influences.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|x| x.0).unwrap_or(0);
    let q0 = parts[pivot].0;
    let mut real = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    let mut dual = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    for &(b, w) in influences {
        let (q, t) = parts[b];
        let s = if q.coords.dot(&q0.coords) < 0.0 { -w } else { w };
        real += q.into_inner() * s;
        dual += Quaternion::from_imag(t) * q.into_inner() * (0.5 * s);
    }
    let n = real.norm();
    let real = real / n;
    let dual = dual / n;
    let t = (dual * real.conjugate() * 2.0).imag();
    (UnitQuaternion::new_unchecked(real), t)
}

/// Dual-quaternion skinning; every transform must be rigid.
pub fn dqs(points: &[Vec3], weights: &WeightSet, transforms: &[Matrix4<f64>]) -> Result<Vec<Vec3>> {
    let parts = transforms
        .iter()
        .enumerate()
        .map(|(b, m)| rigid_parts(m).ok_or(Error::NonRigidTransform(b as u32)))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::par_map(points.len(), |i| {
        let (q, t) = dq_blend(&weights.weights[i], &parts);
        (q * Point3::from(points[i])).coords + t
    }))
}
