//! Encoding of a cloud as base-points on baselines plus signed heights along
//! the detail direction field.

use std::io::{Read, Write};

use crate::baseline::{locate, EndKind, Locus, Profile, Section};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sphere_mesh::{Registration, Skeleton};

pub const FLAG_ON_CAP: u32 = 1;
/// Stored in bone-local cylindrical coordinates and moved rigidly.
pub const FLAG_RIGID: u32 = 2;
/// Direction field interpolated with the cubic profile.
pub const FLAG_DIR_CUBIC: u32 = 4;
pub const FLAG_AXIS_DEGENERATE: u32 = 8;
pub const FLAG_APEX_REGION: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedPoint {
    pub point_index: u64,
    pub chain: u32,
    /// Bone id (not index) of the center bone.
    pub bone: u32,
    /// Azimuth of the baseline about the center bone.
    pub phi: f64,
    pub section: u32,
    /// Curvilinear ratio of the base-point within its section.
    pub t: f64,
    pub h: f64,
    pub sin_beta: f64,
    pub flags: u32,
}

impl EncodedPoint {
    pub fn on_cap(&self) -> bool {
        self.flags & FLAG_ON_CAP != 0
    }

    pub fn rigid(&self) -> bool {
        self.flags & FLAG_RIGID != 0
    }

    pub fn direction_profile(&self) -> Profile {
        if self.flags & FLAG_DIR_CUBIC != 0 {
            Profile::Cubic
        } else {
            Profile::Linear
        }
    }
}

/// An encoded cloud. `skeleton` is the fingerprint of the rest skeleton it
/// was encoded against, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSet {
    pub skeleton: Option<u64>,
    pub points: Vec<EncodedPoint>,
}

impl EncodedSet {
    pub fn check(&self, sk: &Skeleton) -> Result<()> {
        match self.skeleton {
            Some(h) if h != sk.fingerprint() => Err(Error::SkeletonMismatch),
            _ => {
                if self.points.iter().any(|p| sk.bone_idx(p.bone).is_none()) {
                    return Err(Error::SkeletonMismatch);
                }
                Ok(())
            }
        }
    }

    pub fn rigid_count(&self) -> usize {
        self.points.iter().filter(|p| p.rigid()).count()
    }
}

/// Base-point, direction and height of a point on a section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub locus: Locus,
    pub t: f64,
    pub base: Vec3,
    pub dir: Vec3,
    pub h: f64,
    pub sin_beta: f64,
}

/// Projects `p` on a rest section: on its arcs by the radial rule, on its
/// segment by solving for the detail ray through `p`.
pub fn project_on_section(sec: &Section, p: &Vec3, scale: f64, arcs_first: bool) -> Option<Projection> {
    let on_arc = |e: usize| -> Option<Projection> {
        let a = sec.arcs[e]?;
        let v = p - a.sphere_center;
        let dist = v.norm();
        if dist <= 0.0 {
            return None;
        }
        let dir = v / dist;
        let b = a.sphere_center + dir * a.sphere_radius;
        if (b - a.arc.center).dot(&a.arc.normal).abs() > 1e-9 * scale {
            return None;
        }
        let mut ang = a.arc.angle_of(&b);
        if ang < 0.0 {
            ang += std::f64::consts::TAU;
        }
        let sweep = a.arc.sweep();
        if ang > sweep {
            // tolerate landing on either endpoint
            let over = (ang - sweep) * a.arc.radius;
            let under = (std::f64::consts::TAU - ang) * a.arc.radius;
            if over <= 1e-9 * scale {
                ang = sweep;
            } else if under <= 1e-9 * scale {
                ang = 0.0;
            } else {
                return None;
            }
        }
        let locus = Locus::Arc { end: e, angle: ang };
        Some(Projection {
            locus,
            t: sec.t_at(&locus),
            base: sec.position(&locus),
            dir,
            h: dist - a.sphere_radius,
            sin_beta: 1.0,
        })
    };
    let on_segment = || -> Option<Projection> {
        let s = sec.project_on_segment(p, scale)?;
        let d = sec.d[0] + (sec.d[1] - sec.d[0]) * s;
        let locus = Locus::Curve { d };
        let base = sec.position(&locus);
        let (dir, sin_beta) = sec.segment_direction(d);
        Some(Projection {
            locus,
            t: sec.t_at(&locus),
            base,
            dir,
            h: (p - base).dot(&dir),
            sin_beta,
        })
    };
    if arcs_first {
        on_arc(0).or_else(|| on_arc(1)).or_else(on_segment)
    } else {
        on_segment().or_else(|| on_arc(0)).or_else(|| on_arc(1))
    }
}

/// Bone whose surface a registered point is projected on: the registered
/// bone, unless the point lies inside it and inside a neighbour whose
/// surface is further away.
fn projection_bone(sk: &Skeleton, k: usize, p: &Vec3) -> usize {
    let sd = sk.bones[k].signed_distance(p);
    if sd >= 0.0 {
        return k;
    }
    let b = &sk.bones[k];
    let mut best = (k, sd);
    for s in [b.prox, b.dist] {
        for &nb in &sk.sphere_bones[s] {
            if nb == k {
                continue;
            }
            let d = sk.bones[nb].signed_distance(p);
            if d < best.1 {
                best = (nb, d);
            }
        }
    }
    best.0
}

fn rigid_encoding(sk: &Skeleton, k: usize, p: &Vec3, flags: u32) -> EncodedPoint {
    let b = &sk.bones[k];
    let v = p - b.c_prox;
    let axial = v.dot(&b.axis);
    let radial = v - b.axis * axial;
    let rho = radial.norm();
    let phi = if rho > 0.0 {
        radial.dot(&b.e90).atan2(radial.dot(&b.e0))
    } else {
        0.0
    };
    EncodedPoint {
        point_index: 0,
        chain: sk.bone_chain[k] as u32,
        bone: b.id,
        phi,
        section: 0,
        t: axial / b.length,
        h: rho,
        sin_beta: 1.0,
        flags: flags | FLAG_RIGID,
    }
}

/// Rigid decoding in the posed frame of the bone, twist included.
pub fn decode_rigid(posed: &Skeleton, k: usize, ep: &EncodedPoint) -> Vec3 {
    let b = &posed.bones[k];
    let phi = ep.phi + b.twist;
    b.c_prox + b.axis * (ep.t * b.length) + b.radial(phi) * ep.h
}

fn reconstruct(sec: &Section, t: f64, h: f64) -> Vec3 {
    let locus = sec.locus_at(t);
    let (dir, _) = sec.direction(&locus);
    sec.position(&locus) + dir * h
}

/// Encodes one point registered to bone index `k`.
pub fn project_point(sk: &Skeleton, k: usize, p: &Vec3, field: Profile) -> EncodedPoint {
    let scale = sk.tol.diagonal;
    let tol = 1e-11 * scale;
    let dir_flag = if field == Profile::Cubic { FLAG_DIR_CUBIC } else { 0 };
    let k = projection_bone(sk, k, p);
    let mut flags = dir_flag;
    let mut tried: Vec<usize> = Vec::with_capacity(2);
    let mut bone = k;
    for _ in 0..2 {
        tried.push(bone);
        let (pt, _, zone) = sk.bones[bone].closest_surface_point(p);
        let loc = locate(sk, bone, &pt, zone);
        if loc.axis_degenerate {
            flags |= FLAG_AXIS_DEGENERATE;
        }
        let sec = match Section::build(sk, loc.bone, loc.psi, field) {
            Ok(s) => s,
            Err(_) => break,
        };
        if let Some(pr) = project_on_section(&sec, p, scale, loc.on_cap) {
            let back = reconstruct(&sec, pr.t, pr.h);
            if (back - p).norm() <= tol {
                let mut f = flags;
                if matches!(pr.locus, Locus::Arc { .. }) {
                    f |= FLAG_ON_CAP;
                }
                return EncodedPoint {
                    point_index: 0,
                    chain: sk.bone_chain[loc.bone] as u32,
                    bone: sk.bones[loc.bone].id,
                    phi: loc.psi,
                    section: u32::from(sec.ends[0].partner.is_some()),
                    t: pr.t,
                    h: pr.h,
                    sin_beta: pr.sin_beta,
                    flags: f,
                };
            }
        }
        // past a crossing anchor: the point belongs to the neighbour's side
        let next = sec
            .ends
            .iter()
            .filter(|e| e.kind == EndKind::Concave)
            .filter_map(|e| e.partner.map(|p| p.bone))
            .find(|b| !tried.contains(b));
        match next {
            Some(nb) => bone = nb,
            None => break,
        }
    }
    log::debug!("point falls outside every baseline of bone {}; encoding rigidly", sk.bones[k].id);
    rigid_encoding(sk, k, p, flags | FLAG_APEX_REGION)
}

/// Encodes every point of a cloud. Points without a registration are
/// registered to their closest bone.
pub fn encode_cloud(sk: &Skeleton, registration: Option<&Registration>, points: &[Vec3], field: Profile) -> Result<EncodedSet> {
    if let Some(r) = registration {
        if r.bones.len() != points.len() {
            return Err(Error::Unregistered(r.bones.len().min(points.len())));
        }
        if let Some(i) = r.bones.iter().position(|&b| b >= sk.bones.len()) {
            return Err(Error::Unregistered(i));
        }
    }
    let encode = |i: usize| {
        let k = registration.map_or_else(|| sk.closest_bone(&points[i]), |r| r.bones[i]);
        let mut ep = project_point(sk, k, &points[i], field);
        ep.point_index = i as u64;
        ep
    };
    let encoded = crate::par_map(points.len(), encode);
    Ok(EncodedSet {
        skeleton: Some(sk.fingerprint()),
        points: encoded,
    })
}

const MAGIC: &[u8; 4] = b"BSKN";
const VERSION: u32 = 1;
const RECORD: usize = 8 + 4 + 4 + 8 + 4 + 8 + 8 + 8 + 4;

pub fn write_encoded(w: &mut impl Write, set: &EncodedSet) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + RECORD * set.points.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(set.points.len() as u64).to_le_bytes());
    for p in &set.points {
        buf.extend_from_slice(&p.point_index.to_le_bytes());
        buf.extend_from_slice(&p.chain.to_le_bytes());
        buf.extend_from_slice(&p.bone.to_le_bytes());
        buf.extend_from_slice(&p.phi.to_le_bytes());
        buf.extend_from_slice(&p.section.to_le_bytes());
        buf.extend_from_slice(&p.t.to_le_bytes());
        buf.extend_from_slice(&p.h.to_le_bytes());
        buf.extend_from_slice(&p.sin_beta.to_le_bytes());
        buf.extend_from_slice(&p.flags.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_encoded(r: &mut impl Read) -> Result<EncodedSet> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let bad = |offset: usize, message: &str| Error::Parse {
        location: format!("byte {offset}"),
        message: message.to_string(),
    };
    if data.len() < 16 || &data[0..4] != MAGIC {
        return Err(bad(0, "missing BSKN header"));
    }
    let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(4, &format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(data[8..16].try_into().unwrap()) as usize;
    let need = count.checked_mul(RECORD).and_then(|n| n.checked_add(16));
    if need != Some(data.len()) {
        return Err(bad(data.len().min(16), &format!("expected {count} records")));
    }
    let mut points = Vec::with_capacity(count);
    let mut at = 16;
    let mut take = |n: usize| {
        let s = &data[at..at + n];
        at += n;
        s
    };
    for _ in 0..count {
        let u64_ = |b: &[u8]| u64::from_le_bytes(b.try_into().unwrap());
        let u32_ = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        let f64_ = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
        points.push(EncodedPoint {
            point_index: u64_(take(8)),
            chain: u32_(take(4)),
            bone: u32_(take(4)),
            phi: f64_(take(8)),
            section: u32_(take(4)),
            t: f64_(take(8)),
            h: f64_(take(8)),
            sin_beta: f64_(take(8)),
            flags: u32_(take(4)),
        });
    }
    Ok(EncodedSet { skeleton: None, points })
}
