//! Synthetic skeletons and clouds used by tests, benchmarks and the demo.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Vec3;
use crate::sphere_mesh::{BoneRecord, Skeleton, SkeletonFile, SphereNode};

/// Chain of bones through `centers`, sphere ids and bone ids counting from 0.
pub fn chain(centers: &[Vec3], radii: &[f64]) -> Skeleton {
    assert_eq!(centers.len(), radii.len());
    let spheres = centers
        .iter()
        .zip(radii)
        .enumerate()
        .map(|(i, (c, r))| SphereNode {
            id: i as u32,
            center: *c,
            radius: *r,
        })
        .collect();
    let bones = (0..centers.len() - 1)
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
    .expect("valid chain")
}

/// Straight chain along x of `n` bones of length `len`.
pub fn straight_chain(n: usize, len: f64, radii: &[f64]) -> Skeleton {
    let centers: Vec<Vec3> = (0..=n).map(|i| Vec3::new(len * i as f64, 0.0, 0.0)).collect();
    chain(&centers, radii)
}

/// Two bones of length `len` meeting at the origin with an interior
/// deviation `bend` (0 = straight) in the xy plane.
pub fn bent_pair(len: f64, radii: [f64; 3], bend: f64) -> Skeleton {
    let c0 = Vec3::new(-len, 0.0, 0.0);
    let c2 = Vec3::new(bend.cos(), bend.sin(), 0.0) * len;
    chain(&[c0, Vec3::zeros(), c2], &radii)
}

/// Three chains meeting at a junction sphere at the origin.
pub fn junction_star(len: f64, r_center: f64, r_tip: f64) -> Skeleton {
    let dirs = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0].map(|a: f64| Vec3::new(a.cos(), a.sin(), 0.0));
    let mut spheres = vec![SphereNode {
        id: 0,
        center: Vec3::zeros(),
        radius: r_center,
    }];
    let mut bones = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        spheres.push(SphereNode {
            id: i as u32 + 1,
            center: d * len,
            radius: r_tip,
        });
        bones.push(BoneRecord {
            id: i as u32,
            start: 0,
            end: i as u32 + 1,
        });
    }
    Skeleton::from_file(&SkeletonFile {
        version: 1,
        spheres,
        bones,
        chains: None,
        registration: None,
    })
    .expect("valid star")
}

/// A humanoid-like figure with 16 bones (spine, neck, head, arms, legs,
/// feet); every junction joins exactly three bones.
pub fn figure() -> Skeleton {
    let s = |id: u32, x: f64, y: f64, z: f64, r: f64| SphereNode {
        id,
        center: Vec3::new(x, y, z),
        radius: r,
    };
    let spheres = vec![
        s(0, 0.0, 0.0, 0.0, 1.4),    // pelvis
        s(1, 0.0, 0.0, 1.8, 1.3),    // chest
        s(2, 0.0, 0.0, 3.1, 1.1),    // upper chest
        s(3, 0.0, 0.0, 4.2, 0.55),   // neck
        s(4, 0.0, 0.0, 5.2, 0.9),    // head
        s(5, 2.0, 0.0, 2.9, 0.55),   // right shoulder
        s(6, 3.9, 0.0, 2.3, 0.45),   // right elbow
        s(7, 5.7, 0.0, 1.7, 0.35),   // right wrist
        s(8, -2.0, 0.0, 3.4, 0.55),  // left shoulder
        s(9, -3.9, 0.0, 2.8, 0.45),  // left elbow
        s(10, -5.7, 0.0, 2.2, 0.35), // left wrist
        s(11, 0.8, 0.0, -3.0, 0.7),  // right knee
        s(12, 0.9, 0.0, -6.0, 0.5),  // right ankle
        s(13, -0.8, 0.0, -3.0, 0.7), // left knee
        s(14, -0.9, 0.0, -6.0, 0.5), // left ankle
        s(15, 1.0, 1.3, -6.4, 0.35), // right toe
        s(16, -1.0, 1.3, -6.4, 0.35),
    ];
    let b = |id: u32, start: u32, end: u32| BoneRecord { id, start, end };
    let bones = vec![
        b(0, 0, 1),
        b(1, 1, 2),
        b(2, 2, 3),
        b(3, 3, 4),
        b(4, 1, 5),
        b(5, 5, 6),
        b(6, 6, 7),
        b(7, 2, 8),
        b(8, 8, 9),
        b(9, 9, 10),
        b(10, 0, 11),
        b(11, 11, 12),
        b(12, 0, 13),
        b(13, 13, 14),
        b(14, 12, 15),
        b(15, 14, 16),
    ];
    Skeleton::from_file(&SkeletonFile {
        version: 1,
        spheres,
        bones,
        chains: None,
        registration: None,
    })
    .expect("valid figure")
}

/// A sample of the surface of one bone with a height above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub bone: usize,
    pub point: Vec3,
}

/// `n` points over the sphere-mesh surface, offset along the surface normal
/// by `height(bone, azimuth, d)`; a fraction land on the spheres.
pub fn surface_cloud(
    sk: &Skeleton,
    n: usize,
    seed: u64,
    height: impl Fn(usize, f64, f64) -> f64,
) -> Vec<SurfaceSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = sk
        .bones
        .iter()
        .map(|b| b.generatrix_length() * (b.r_prox + b.r_dist))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut pick = rng.gen::<f64>() * total;
        let mut k = 0;
        while k + 1 < weights.len() && pick > weights[k] {
            pick -= weights[k];
            k += 1;
        }
        let bone = &sk.bones[k];
        let psi = rng.gen::<f64>() * TAU;
        if rng.gen::<f64>() < 0.15 {
            // a point on one of the two end spheres, away from the cone
            let dist_end = rng.gen::<bool>();
            let (c, r, axis) = if dist_end {
                (bone.c_dist, bone.r_dist, bone.axis)
            } else {
                (bone.c_prox, bone.r_prox, -bone.axis)
            };
            let dir = loop {
                let v = Vec3::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
                if v.norm() > 0.1 && v.norm() <= 1.0 && v.dot(&axis) > 0.3 * v.norm() {
                    break v.normalize();
                }
            };
            let h = height(k, psi, if dist_end { 1.0 } else { 0.0 });
            out.push(SurfaceSample {
                bone: k,
                point: c + dir * (r + h),
            });
            continue;
        }
        let d = rng.gen::<f64>();
        let h = height(k, psi, d);
        out.push(SurfaceSample {
            bone: k,
            point: bone.point(psi, d) + bone.normal(psi) * h,
        });
    }
    out
}

/// Three-bone chain carrying a striped relief.
pub fn stripe_model() -> Skeleton {
    chain(
        &[
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(4.0, 0.0, 0.0),
            Vec3::new(7.5, 1.0, 0.0),
            Vec3::new(10.5, 1.0, 0.5),
        ],
        &[1.0, 0.9, 0.75, 0.6],
    )
}

pub fn stripe_cloud(sk: &Skeleton, n: usize, seed: u64) -> Vec<SurfaceSample> {
    surface_cloud(sk, n, seed, |_, psi, d| {
        let stripe = if ((d * 12.0).floor() as i64) % 2 == 0 { 0.06 } else { 0.02 };
        stripe + 0.02 * (3.0 * psi).sin()
    })
}
