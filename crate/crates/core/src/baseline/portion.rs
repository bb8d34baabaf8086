use serde::{Deserialize, Serialize};

use super::section::{Profile, Section};
use super::{cell_margin, components, support_normal, tangency_azimuth, EndKind};
use crate::error::Result;
use crate::geom::{Arc3, Vec3};
use crate::sphere_mesh::{End, Skeleton, SurfaceZone};

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineElement {
    Segment { p0: Vec3, p1: Vec3, bone: usize },
    ArcElem { arc: Arc3, sphere: usize },
}

impl BaselineElement {
    pub fn start(&self) -> Vec3 {
        match self {
            BaselineElement::Segment { p0, .. } => *p0,
            BaselineElement::ArcElem { arc, .. } => arc.start(),
        }
    }

    pub fn end(&self) -> Vec3 {
        match self {
            BaselineElement::Segment { p1, .. } => *p1,
            BaselineElement::ArcElem { arc, .. } => arc.end(),
        }
    }

    pub fn start_tangent(&self) -> Vec3 {
        match self {
            BaselineElement::Segment { p0, p1, .. } => (p1 - p0).normalize(),
            BaselineElement::ArcElem { arc, .. } => arc.tangent_at(arc.start_angle),
        }
    }

    pub fn end_tangent(&self) -> Vec3 {
        match self {
            BaselineElement::Segment { p0, p1, .. } => (p1 - p0).normalize(),
            BaselineElement::ArcElem { arc, .. } => arc.tangent_at(arc.end_angle),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorKind {
    OnArc,
    SegmentIntersection,
    /// Straight joint or cap tip.
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorPoint {
    pub position: Vec3,
    pub sphere: usize,
    pub kind: AnchorKind,
}

/// Baseline over a bone and its neighbours: ordered elements from the far
/// end of the predecessor to the far end of the successor.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePortion {
    pub elements: Vec<BaselineElement>,
    pub anchors: Vec<AnchorPoint>,
    /// (bone, azimuth) of every segment, in element order.
    pub support_plane_keys: Vec<(usize, f64)>,
    pub center: Section,
}

fn segment_of(s: &Section, reversed: bool) -> BaselineElement {
    let (a, b) = (s.curve_point(s.d[0]), s.curve_point(s.d[1]));
    let (p0, p1) = if reversed { (b, a) } else { (a, b) };
    BaselineElement::Segment {
        p0,
        p1,
        bone: s.bone_index,
    }
}

/// Portion of the baseline of bone `k` at azimuth `psi`.
pub fn build_portion(sk: &Skeleton, k: usize, psi: f64) -> Result<BaselinePortion> {
    let center = Section::build(sk, k, psi, Profile::default())?;
    let mut elements = Vec::new();
    let mut anchors = Vec::new();
    for (idx, end) in [End::Prox, End::Dist].into_iter().enumerate() {
        let cfg = center.ends[idx];
        let mut side = Vec::new();
        let anchor_kind = match cfg.kind {
            EndKind::Convex => AnchorKind::OnArc,
            EndKind::Concave => AnchorKind::SegmentIntersection,
            _ => AnchorKind::Endpoint,
        };
        anchors.push(AnchorPoint {
            position: cfg.anchor,
            sphere: cfg.sphere,
            kind: anchor_kind,
        });
        match cfg.partner {
            None => {
                // free cap, traversed towards the center segment on the proximal side
                let arc = cfg.arc.unwrap();
                side.push(BaselineElement::ArcElem { arc, sphere: cfg.sphere });
            }
            Some(p) => {
                let ps = Section::build(sk, p.bone, p.psi, Profile::default())?;
                if cfg.kind == EndKind::Convex {
                    let a = cfg.arc.unwrap();
                    let full = Arc3::from_start(a.center, cfg.v, a.normal, cfg.full_sweep);
                    side.push(BaselineElement::ArcElem { arc: full, sphere: cfg.sphere });
                }
                // partner segment oriented away from the joint
                side.push(segment_of(&ps, p.end == End::Dist));
            }
        }
        if end == End::Prox {
            // the path runs from the far side towards the center
            for e in side.into_iter().rev() {
                elements.push(reverse(e));
            }
            elements.push(segment_of(&center, false));
        } else {
            elements.extend(side);
        }
    }
    let mut keys = Vec::new();
    if let Some(p) = center.ends[0].partner {
        keys.push((p.bone, p.psi));
    }
    keys.push((k, psi));
    if let Some(p) = center.ends[1].partner {
        keys.push((p.bone, p.psi));
    }
    Ok(BaselinePortion {
        elements,
        anchors,
        support_plane_keys: keys,
        center,
    })
}

fn reverse(e: BaselineElement) -> BaselineElement {
    match e {
        BaselineElement::Segment { p0, p1, bone } => BaselineElement::Segment { p0: p1, p1: p0, bone },
        BaselineElement::ArcElem { arc, sphere } => {
            let end = arc.end();
            BaselineElement::ArcElem {
                arc: Arc3::from_start(arc.center, end, -arc.normal, arc.sweep()),
                sphere,
            }
        }
    }
}

/// Center bone and azimuth of the baseline through a surface point `pt`
/// that is closest to bone `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub bone: usize,
    pub psi: f64,
    pub on_cap: bool,
    pub axis_degenerate: bool,
}

pub fn locate(sk: &Skeleton, k: usize, pt: &Vec3, zone: SurfaceZone) -> Located {
    let bone = &sk.bones[k];
    let by_azimuth = |on_cap: bool| match bone.azimuth(pt) {
        Some(psi) => Located {
            bone: k,
            psi,
            on_cap,
            axis_degenerate: false,
        },
        None => Located {
            bone: k,
            psi: 0.0,
            on_cap,
            axis_degenerate: true,
        },
    };
    let end = match zone {
        SurfaceZone::Cone => return by_azimuth(false),
        SurfaceZone::ProxCap => End::Prox,
        SurfaceZone::DistCap => End::Dist,
    };
    let sphere = bone.sphere(end);
    let mut others: Vec<usize> = sk.sphere_bones[sphere].iter().copied().filter(|&b| b != k).collect();
    if others.is_empty() {
        return by_azimuth(true);
    }
    // most likely partners first
    others.sort_by(|&a, &b| {
        let wa = sk.bones[a].cell_coordinate(sk.end_at(a, sphere), pt);
        let wb = sk.bones[b].cell_coordinate(sk.end_at(b, sphere), pt);
        wb.total_cmp(&wa)
    });
    let eps = sk.tol.surface();
    for &m in &others {
        let n = support_normal(sk, k, m, pt);
        let Ok(comps) = components(sk, k, m, sphere, pt, &n) else { continue };
        for c in comps {
            if c.kind != EndKind::Convex {
                continue;
            }
            let a = c.v - c.circle.center;
            let b = pt - c.circle.center;
            let ang = a.cross(&b).dot(&c.circle.normal).atan2(a.dot(&b));
            let ang = if ang < -1e-12 { ang + std::f64::consts::TAU } else { ang };
            if ang > c.theta + 1e-9 {
                continue;
            }
            if others.len() > 1 && cell_margin(sk, sphere, k, m, &c.anchor) < -eps {
                continue;
            }
            return if ang <= c.anchor_angle {
                Located {
                    bone: k,
                    psi: tangency_azimuth(bone, &c.v),
                    on_cap: true,
                    axis_degenerate: false,
                }
            } else {
                Located {
                    bone: m,
                    psi: tangency_azimuth(&sk.bones[m], &c.x),
                    on_cap: true,
                    axis_degenerate: false,
                }
            };
        }
    }
    // hidden by a concave fold: extend the generatrix
    by_azimuth(true)
}

/// Portion whose baseline passes through the surface point `pt`, seen
/// from bone `k`.
pub fn select_branch(sk: &Skeleton, k: usize, pt: &Vec3) -> Result<BaselinePortion> {
    let (_, _, zone) = sk.bones[k].closest_surface_point(pt);
    let loc = locate(sk, k, pt, zone);
    build_portion(sk, loc.bone, loc.psi)
}

/// Sampled baseline of one bone, for overlays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePolyline {
    pub bone_id: u32,
    pub azimuth: f64,
    pub points: Vec<[f64; 3]>,
}

/// `count` evenly spaced baselines per bone on a rest skeleton.
pub fn export_baselines(sk: &Skeleton, count: usize, per_piece: usize) -> Vec<BaselinePolyline> {
    let mut out = Vec::new();
    for k in 0..sk.bones.len() {
        for i in 0..count {
            let psi = std::f64::consts::TAU * i as f64 / count as f64;
            let Ok(s) = Section::build(sk, k, psi, Profile::default()) else { continue };
            out.push(BaselinePolyline {
                bone_id: sk.bones[k].id,
                azimuth: psi,
                points: s.polyline(per_piece).into_iter().map(|(p, _)| [p.x, p.y, p.z]).collect(),
            });
        }
    }
    out
}
