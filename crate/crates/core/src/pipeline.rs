//! Encode once, then re-synthesize the cloud for any pose: deform the
//! baselines, redistribute base-points by their curvilinear ratio, modulate
//! heights and fill unfolded zones.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::baseline::{end_config, EndKind, Locus, Profile};
use crate::deformer::{deformed_direction, deformed_section};
use crate::encoder::{decode_rigid, EncodedPoint, EncodedSet};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sphere_mesh::{bone_motion, End, Pose, Skeleton};

/// Lower bound on the posed `sin β` before the height blows up.
pub const EPS_SIN: f64 = 1e-6;

fn default_threshold() -> f64 {
    2.0 * std::f64::consts::FRAC_PI_3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkinOptions {
    pub version: u32,
    /// Angle profile of deformed curves (α_p).
    pub profile_position: Profile,
    /// Direction-field profile (α_d); `None` keeps the one used at encoding.
    pub profile_direction: Option<Profile>,
    pub modulation: bool,
    pub unfold_smoothing: bool,
    /// Interior joint angle below which a fold is severe enough to smooth.
    #[serde(default = "default_threshold")]
    pub fold_angle_threshold: f64,
}

impl Default for SkinOptions {
    fn default() -> Self {
        SkinOptions {
            version: 1,
            profile_position: Profile::Cubic,
            profile_direction: None,
            modulation: true,
            unfold_smoothing: true,
            fold_angle_threshold: default_threshold(),
        }
    }
}

/// h' = h sinβ / sinβ'. The flag is set when `sin_beta_new` had to be
/// clamped.
pub fn modulate_height(h: f64, sin_beta: f64, sin_beta_new: f64) -> (f64, bool) {
    if sin_beta == sin_beta_new {
        return (h, false);
    }
    let clamped = sin_beta_new <= EPS_SIN;
    (h * sin_beta / sin_beta_new.max(EPS_SIN), clamped)
}

/// A posed base-point with its direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displaced {
    pub base: Vec3,
    pub dir: Vec3,
    pub sin_beta: f64,
    pub locus: Locus,
}

pub fn displace_base_point(rest: &Skeleton, posed: &Skeleton, ep: &EncodedPoint, opts: &SkinOptions) -> Result<Displaced> {
    let k = rest.bone_idx(ep.bone).ok_or(Error::SkeletonMismatch)?;
    let field = opts.profile_direction.unwrap_or(ep.direction_profile());
    let sec = deformed_section(rest, posed, k, ep.phi, opts.profile_position, field)?;
    if sec.total_length() < 1e-12 {
        return Err(Error::SectionCollapsed);
    }
    let locus = sec.locus_at(ep.t);
    let base = sec.position(&locus);
    let (dir, sin_beta) = deformed_direction(posed, &sec, &locus, field);
    Ok(Displaced {
        base,
        dir,
        sin_beta,
        locus,
    })
}

/// Interior angle at a joint between two bones: π when straight.
pub fn interior_angle(sk: &Skeleton, sphere: usize, k: usize, m: usize) -> f64 {
    let j = sk.spheres[sphere].center;
    let far = |b: usize| {
        let bone = &sk.bones[b];
        bone.center(sk.end_at(b, sphere).other()) - j
    };
    let (a, b) = (far(k), far(m));
    a.cross(&b).norm().atan2(a.dot(&b))
}

/// Base-points over the part of a joint that the rest fold hid.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingZone {
    pub sphere: usize,
    pub bones: (usize, usize),
    /// (point index, δ) of the points whose base-point fell in the zone.
    pub members: Vec<(usize, f64)>,
}

/// Zone membership of one decoded point: the joint sphere and δ = |S b'|/3,
/// S being the image of the rest crossing on this baseline.
fn zone_of(rest: &Skeleton, posed: &Skeleton, ep: &EncodedPoint, d: &Displaced, opts: &SkinOptions) -> Option<(usize, usize, f64)> {
    let k = rest.bone_idx(ep.bone)?;
    for (idx, end) in [End::Prox, End::Dist].into_iter().enumerate() {
        let sphere = rest.bones[k].sphere(end);
        let unfolds = |m: usize| {
            let before = interior_angle(rest, sphere, k, m);
            before < opts.fold_angle_threshold && interior_angle(posed, sphere, k, m) > before
        };
        if !rest.sphere_bones[sphere].iter().any(|&m| m != k && unfolds(m)) {
            continue;
        }
        let cfg = end_config(rest, k, end, ep.phi).ok()?;
        let Some(p) = cfg.partner else { continue };
        if cfg.kind != EndKind::Concave || !unfolds(p.bone) {
            continue;
        }
        let inside = match d.locus {
            Locus::Arc { end: e, .. } => e == idx,
            Locus::Curve { d: t } => {
                if idx == 0 {
                    t < cfg.d
                } else {
                    t > cfg.d
                }
            }
        };
        if !inside {
            continue;
        }
        let sec = deformed_section(rest, posed, k, ep.phi, opts.profile_position, Profile::Cubic).ok()?;
        let s1 = sec.bone.point(sec.curve_psi(cfg.d), cfg.d);
        return Some((cfg.sphere, p.bone, (d.base - s1).norm() / 3.0));
    }
    None
}

/// Gaussian average of the heights around each zone member, over every
/// base-point within 3δ. Members whose neighbourhood is empty keep their
/// height.
pub fn smooth_heights(bases: &[Vec3], heights: &[f64], members: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let reach = members.iter().map(|m| 3.0 * m.1).fold(0.0, f64::max);
    if reach <= 0.0 || members.is_empty() {
        return members.iter().map(|&(i, _)| (i, heights[i])).collect();
    }
    // uniform grid over the base-points near the zone
    let lo = members
        .iter()
        .map(|&(i, _)| bases[i])
        .fold(Vec3::repeat(f64::INFINITY), |a, b| a.inf(&b))
        .add_scalar(-reach);
    let hi = members
        .iter()
        .map(|&(i, _)| bases[i])
        .fold(Vec3::repeat(f64::NEG_INFINITY), |a, b| a.sup(&b))
        .add_scalar(reach);
    let cell = reach.max((hi - lo).max() / 64.0);
    let key = |p: &Vec3| {
        let q = (p - lo) / cell;
        (q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64)
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in bases.iter().enumerate() {
        if p.iter().zip(lo.iter().zip(hi.iter())).all(|(x, (a, b))| x >= a && x <= b) {
            grid.entry(key(p)).or_default().push(i);
        }
    }
    crate::par_map(members.len(), |j| {
        let (i, delta) = members[j];
        let b = bases[i];
        if delta <= 0.0 {
            return (i, heights[i]);
        }
        let r = 3.0 * delta;
        let span = (r / cell).ceil() as i64;
        let c = key(&b);
        // weighted mean of the differences to this height, so a constant
        // neighbourhood returns its value exactly
        let (mut sum, mut cst) = (0.0, 0.0);
        let (mut lo, mut hi) = (heights[i], heights[i]);
        for dx in -span..=span {
            for dy in -span..=span {
                for dz in -span..=span {
                    let Some(list) = grid.get(&(c.0 + dx, c.1 + dy, c.2 + dz)) else { continue };
                    for &n in list {
                        let d2 = (bases[n] - b).norm_squared();
                        if d2 <= r * r {
                            let w = (-d2 / (2.0 * delta * delta)).exp();
                            sum += w * (heights[n] - heights[i]);
                            cst += w;
                            lo = lo.min(heights[n]);
                            hi = hi.max(heights[n]);
                        }
                    }
                }
            }
        }
        if cst > 0.0 {
            (i, (heights[i] + sum / cst).clamp(lo, hi))
        } else {
            (i, heights[i])
        }
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SkinReport {
    pub points: usize,
    /// Encoded rigidly (apex region or unresolved projection).
    pub rigid: usize,
    /// Decoding failed on the posed skeleton; moved with the bone.
    pub fallback: usize,
    pub near_tangent: usize,
    pub smoothed: usize,
    pub zones: usize,
}

struct Decoded {
    base: Vec3,
    dir: Vec3,
    h: f64,
    zone: Option<(usize, usize, f64)>,
    near_tangent: bool,
    fallback: bool,
}

fn decode(rest: &Skeleton, posed: &Skeleton, ep: &EncodedPoint, opts: &SkinOptions) -> Decoded {
    let k = rest.bone_idx(ep.bone).expect("checked");
    if !ep.rigid() {
        if let Ok(d) = displace_base_point(rest, posed, ep, opts) {
            let (h, near_tangent) = if opts.modulation {
                modulate_height(ep.h, ep.sin_beta, d.sin_beta)
            } else {
                (ep.h, false)
            };
            let zone = if opts.unfold_smoothing {
                zone_of(rest, posed, ep, &d, opts)
            } else {
                None
            };
            return Decoded {
                base: d.base,
                dir: d.dir,
                h,
                zone,
                near_tangent,
                fallback: false,
            };
        }
    }
    let p = if ep.rigid() {
        decode_rigid(posed, k, ep)
    } else {
        // rebuild at rest and carry with the bone
        let field = ep.direction_profile();
        let rest_p = crate::baseline::Section::build(rest, k, ep.phi, field)
            .map(|s| {
                let l = s.locus_at(ep.t);
                s.position(&l) + s.direction(&l).0 * ep.h
            })
            .unwrap_or_else(|_| decode_rigid(rest, k, ep));
        (bone_motion(rest, posed, k) * nalgebra::Point3::from(rest_p)).coords
    };
    Decoded {
        base: p,
        dir: Vec3::zeros(),
        h: 0.0,
        zone: None,
        near_tangent: false,
        fallback: !ep.rigid(),
    }
}

/// Deformed cloud in encoding order of `set.points`.
pub fn skin(rest: &Skeleton, set: &EncodedSet, pose: &Pose, opts: &SkinOptions) -> Result<(Vec<Vec3>, SkinReport)> {
    set.check(rest)?;
    let posed = rest.apply_pose(pose)?;
    skin_posed(rest, &posed, set, opts)
}

/// As [`skin`], with the posed skeleton already built.
pub fn skin_posed(rest: &Skeleton, posed: &Skeleton, set: &EncodedSet, opts: &SkinOptions) -> Result<(Vec<Vec3>, SkinReport)> {
    let decoded = crate::par_map(set.points.len(), |i| decode(rest, posed, &set.points[i], opts));
    let mut heights: Vec<f64> = decoded.iter().map(|d| d.h).collect();
    let mut report = SkinReport {
        points: set.points.len(),
        rigid: set.rigid_count(),
        fallback: decoded.iter().filter(|d| d.fallback).count(),
        near_tangent: decoded.iter().filter(|d| d.near_tangent).count(),
        ..Default::default()
    };
    let mut zones: Vec<SmoothingZone> = Vec::new();
    for (i, d) in decoded.iter().enumerate() {
        let Some((sphere, other, delta)) = d.zone else { continue };
        let k = rest.bone_idx(set.points[i].bone).unwrap();
        let bones = (k.min(other), k.max(other));
        match zones.iter_mut().find(|z| z.sphere == sphere && z.bones == bones) {
            Some(z) => z.members.push((i, delta)),
            None => zones.push(SmoothingZone {
                sphere,
                bones,
                members: vec![(i, delta)],
            }),
        }
    }
    if !zones.is_empty() {
        let bases: Vec<Vec3> = decoded.iter().map(|d| d.base).collect();
        let snapshot = heights.clone();
        for z in &zones {
            for (i, h) in smooth_heights(&bases, &snapshot, &z.members) {
                heights[i] = h;
            }
            report.smoothed += z.members.len();
        }
        report.zones = zones.len();
    }
    let out = decoded
        .iter()
        .zip(heights)
        .map(|(d, h)| d.base + d.dir * h)
        .collect();
    Ok((out, report))
}
