//! Baselines after a pose change. Each end of a section is carried
//! materially to the posed skeleton, then re-resolved in an intermediate
//! plane of the joint's sheaf; the curve between the two ends turns about
//! the bone axis along an angle profile.

use crate::baseline::{
    components, end_config, end_from_component, free_end, junction_pivot_coordinate, pivot_circle, pivot_point_at,
    support_normal, Component, EndConfig, EndKind, Profile, Section,
};
use crate::error::{Error, Result};
use crate::geom::{wrap_angle, Vec3};
use crate::sphere_mesh::{Bone, End, Skeleton};

/// Cubic twist profile: 0 at `d = 0`, `tau_max` at `d = 1`, flat at both.
pub fn twist_profile(d: f64, tau_max: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::OutOfRange { value: d, lo: 0.0, hi: 1.0 });
    }
    Ok(tau_max * Profile::Cubic.weight(d))
}

/// Rotates the samples of a generatrix segment about the bone axis by an
/// angle interpolated between `angle_at_0` and `angle_at_1`.
pub fn deform_segment(bone: &Bone, psi: f64, d: &[f64], angle_at_0: f64, angle_at_1: f64, profile: Profile) -> Vec<Vec3> {
    d.iter()
        .map(|&t| bone.point(psi + angle_at_0 + (angle_at_1 - angle_at_0) * profile.weight(t), t))
        .collect()
}

/// Material azimuth of the baseline of `k` at `end` once posed: the distal
/// end turns with the bone's own twist.
fn carried_azimuth(posed: &Skeleton, k: usize, end: End, psi: f64) -> f64 {
    match end {
        End::Prox => psi,
        End::Dist => psi + posed.bones[k].twist,
    }
}

/// Whether every bone at `sphere` keeps its rest shape and the same frame
/// relative to the others: nothing to re-resolve there.
pub fn joint_is_rigid(rest: &Skeleton, posed: &Skeleton, sphere: usize) -> bool {
    let frame = |b: usize| {
        let bone = &posed.bones[b];
        match rest.end_at(b, sphere) {
            End::Prox => bone.rotation,
            End::Dist => nalgebra::UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(bone.axis), bone.twist) * bone.rotation,
        }
    };
    let bones = &rest.sphere_bones[sphere];
    let r0 = frame(bones[0]);
    bones.iter().all(|&b| {
        let (a, p) = (&rest.bones[b], &posed.bones[b]);
        let same_shape = (a.length - p.length).abs() <= 1e-12 * a.length
            && (a.r_prox - p.r_prox).abs() <= 1e-12 * a.r_prox
            && (a.r_dist - p.r_dist).abs() <= 1e-12 * a.r_dist;
        same_shape && frame(b).angle_to(&r0) <= 1e-12
    })
}

/// Resolved targets at one bent joint, seen from bone `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendTargets {
    /// Tangency points carried with their bones.
    pub v: Vec3,
    pub x: Vec3,
    pub v_new: Vec3,
    pub x_new: Vec3,
    /// Rotations about the bone axes taking `v` to `v_new` and `x` to `x_new`.
    pub theta_v: f64,
    pub theta_x: f64,
    /// Normal of the intermediate plane.
    pub plane_normal: Vec3,
    pub e_yx: Vec3,
    pub e_uv: Vec3,
    pub e_m: Vec3,
    /// Kinds of the two sheaf components interpolated (through `v`, through
    /// `x`): both convex, both concave, or mixed.
    pub interpolated: [EndKind; 2],
    /// End configuration of `k` in the intermediate plane.
    pub config: EndConfig,
}

/// Projection of `p` on a circle.
fn on_circle(c: &crate::geom::Circle, p: &Vec3) -> Vec3 {
    let v = p - c.center;
    let v = v - c.normal * v.dot(&c.normal);
    if v.norm() > 0.0 {
        c.center + v.normalize() * c.radius
    } else {
        let (x, _) = c.frame();
        c.center + x * c.radius
    }
}

/// Where the plane of a component crosses the pivot circle, on the side of
/// its anchor.
fn pivot_crossing(c: &crate::geom::Circle, comp: &Component) -> Vec3 {
    let n = comp.circle.normal;
    let (x, y) = c.frame();
    let q = comp.anchor;
    match crate::geom::solve_trig(c.radius * x.dot(&n), c.radius * y.dot(&n), (c.center - q).dot(&n)) {
        Some((a, b)) => {
            let pa = c.point_in_frame(&x, &y, a);
            let pb = c.point_in_frame(&x, &y, b);
            if (pa - q).norm() <= (pb - q).norm() {
                pa
            } else {
                pb
            }
        }
        None => on_circle(c, &q),
    }
}

/// The component of the sheaf plane through `q` that contains `q` as a
/// tangency point of `k` (`as_v`) or of `m`.
fn component_through(sk: &Skeleton, k: usize, m: usize, sphere: usize, q: &Vec3, as_v: bool) -> Result<Component> {
    let n = support_normal(sk, k, m, q);
    let comps = components(sk, k, m, sphere, q, &n)?;
    let key = |c: &Component| if as_v { (c.v - q).norm() } else { (c.x - q).norm() };
    Ok(comps.into_iter().min_by(|a, b| key(a).total_cmp(&key(b))).unwrap())
}

/// Midpoint of the shorter arc between `a` and `b` on a circle.
fn arc_midpoint(c: &crate::geom::Circle, a: &Vec3, b: &Vec3) -> Vec3 {
    let s = (a - c.center) + (b - c.center);
    if s.norm() <= 1e-12 * c.radius.max(1e-300) {
        return *a;
    }
    c.center + s.normalize() * c.radius
}

/// Resolves the new end of the baseline of `k` (material azimuth `psi` at
/// rest, end `end`) at a joint shared with bone `m`, whose baseline meets it
/// at azimuth `psi_m`.
pub fn resolve_bend_targets(
    rest: &Skeleton,
    posed: &Skeleton,
    k: usize,
    end: End,
    psi: f64,
    rest_cfg: &EndConfig,
) -> Result<BendTargets> {
    let partner = rest_cfg.partner.expect("joint end");
    let m = partner.bone;
    let sphere = rest_cfg.sphere;
    let sid = posed.spheres[sphere].id;
    let psi_v = carried_azimuth(posed, k, end, psi);
    let psi_x = carried_azimuth(posed, m, partner.end, partner.psi);
    let v = posed.bones[k].tangency(end, psi_v);
    let x = posed.bones[m].tangency(partner.end, psi_x);
    let circle = pivot_circle(posed, sphere, k, m).ok_or(Error::SheafDegenerate(sid))?;

    let comp_x = component_through(posed, k, m, sphere, &x, false)?;
    let comp_v = component_through(posed, k, m, sphere, &v, true)?;
    let e_yx = pivot_crossing(&circle, &comp_x);
    let e_uv = pivot_crossing(&circle, &comp_v);
    let mut e_m = arc_midpoint(&circle, &e_yx, &e_uv);
    if rest.is_junction(sphere) {
        // same normalized position along the pivot arc of the pair's cell
        let rest_circle = pivot_circle(rest, sphere, k, m).ok_or(Error::SheafDegenerate(sid))?;
        let rest_comp = component_through(rest, k, m, sphere, &rest_cfg.v, true)?;
        let at_rest = pivot_crossing(&rest_circle, &rest_comp);
        match junction_pivot_coordinate(rest, sphere, k, m, &at_rest)
            .ok()
            .and_then(|c| pivot_point_at(posed, sphere, k, m, c))
        {
            Some(p) => e_m = p,
            None => log::debug!("junction {sid}: pivot cell lost under pose, using arc midpoint"),
        }
    }

    let n = support_normal(posed, k, m, &e_m);
    let comps = components(posed, k, m, sphere, &e_m, &n)?;
    let comp = comps
        .into_iter()
        .min_by(|a, b| {
            let da = (pivot_crossing(&circle, a) - e_m).norm();
            let db = (pivot_crossing(&circle, b) - e_m).norm();
            da.total_cmp(&db)
        })
        .unwrap();
    let bk = &posed.bones[k];
    let bm = &posed.bones[m];
    let az = |b: &Bone, p: &Vec3| {
        let r = p - b.c_prox;
        r.dot(&b.e90).atan2(r.dot(&b.e0))
    };
    // unwrap the new azimuths next to the carried ones
    let target_v = psi_v + wrap_angle(az(bk, &comp.v) - psi_v);
    let config = end_from_component(posed, k, end, target_v, m, &comp);
    Ok(BendTargets {
        v,
        x,
        v_new: comp.v,
        x_new: comp.x,
        theta_v: target_v - psi_v,
        theta_x: wrap_angle(az(bm, &comp.x) - psi_x),
        plane_normal: n,
        e_yx,
        e_uv,
        e_m,
        interpolated: [comp_v.kind, comp_x.kind],
        config,
    })
}

/// Deformed section of the baseline of `k` at rest azimuth `psi`.
pub fn deformed_section(
    rest: &Skeleton,
    posed: &Skeleton,
    k: usize,
    psi: f64,
    profile: Profile,
    field_profile: Profile,
) -> Result<Section> {
    let mut ends = Vec::with_capacity(2);
    let mut targets = [0.0; 2];
    for (i, end) in [End::Prox, End::Dist].into_iter().enumerate() {
        let carried = carried_azimuth(posed, k, end, psi);
        let cfg = if joint_is_rigid(rest, posed, rest.bones[k].sphere(end)) {
            end_config(posed, k, end, carried)?
        } else {
            let rest_cfg = end_config(rest, k, end, psi)?;
            if rest_cfg.partner.is_some() {
                match resolve_bend_targets(rest, posed, k, end, psi, &rest_cfg) {
                    Ok(t) => t.config,
                    Err(e) => {
                        log::debug!("bend resolution failed ({e}); rebuilding end statically");
                        end_config(posed, k, end, carried)?
                    }
                }
            } else {
                free_end(&posed.bones[k], end, carried)
            }
        };
        targets[i] = carried + wrap_angle(cfg.psi - carried);
        ends.push(EndConfig { psi: targets[i], ..cfg });
    }
    Section::assemble(posed, k, [ends[0], ends[1]], targets, profile, field_profile)
}

/// Detail direction at a posed base-point, from the baseline a posed
/// skeleton would build through it. Returns the direction and `sin β`.
pub fn deformed_direction(posed: &Skeleton, sec: &Section, locus: &crate::baseline::Locus, field_profile: Profile) -> (Vec3, f64) {
    use crate::baseline::Locus;
    match *locus {
        Locus::Arc { .. } => sec.direction(locus),
        // unturned section: its own field is the one a posed build gives
        Locus::Curve { d } if sec.psi[0] == sec.psi[1] => sec.segment_direction(d),
        Locus::Curve { d } => {
            let b = sec.position(locus);
            let psi = sec.bone.azimuth(&b).unwrap_or(sec.curve_psi(d));
            match Section::build(posed, sec.bone_index, psi, field_profile) {
                Ok(flat) => {
                    let (n, _) = flat.segment_direction(d);
                    (n, n.dot(&sec.bone.normal(psi)).min(1.0))
                }
                Err(_) => (sec.bone.normal(psi), 1.0),
            }
        }
    }
}

/// A deformed baseline portion: the center section and its neighbours
/// across each joint, all deformed.
#[derive(Debug, Clone)]
pub struct DeformedPortion {
    pub center: Section,
    /// Partner sections at the proximal and distal joints.
    pub partners: [Option<Section>; 2],
}

impl DeformedPortion {
    /// Anchors of the center section.
    pub fn anchors(&self) -> [Vec3; 2] {
        [self.center.anchor(0), self.center.anchor(1)]
    }

    /// Sampled path from the far end of the proximal neighbour to the far
    /// end of the distal one.
    pub fn polyline(&self, per_piece: usize) -> Vec<Vec3> {
        let mut out = Vec::new();
        if let Some(p) = &self.partners[0] {
            let mut pts: Vec<Vec3> = p.polyline(per_piece).into_iter().map(|(x, _)| x).collect();
            if p.ends[1].sphere != self.center.ends[0].sphere {
                pts.reverse();
            }
            out.extend(pts);
        }
        out.extend(self.center.polyline(per_piece).into_iter().map(|(x, _)| x));
        if let Some(p) = &self.partners[1] {
            let mut pts: Vec<Vec3> = p.polyline(per_piece).into_iter().map(|(x, _)| x).collect();
            if p.ends[0].sphere != self.center.ends[1].sphere {
                pts.reverse();
            }
            out.extend(pts);
        }
        out
    }
}

pub fn deform_portion(rest: &Skeleton, posed: &Skeleton, k: usize, psi: f64, profile: Profile) -> Result<DeformedPortion> {
    let center = deformed_section(rest, posed, k, psi, profile, Profile::default())?;
    let mut partners = [None, None];
    for (i, end) in [End::Prox, End::Dist].into_iter().enumerate() {
        let cfg = end_config(rest, k, end, psi)?;
        if let Some(p) = cfg.partner {
            partners[i] = Some(deformed_section(rest, posed, p.bone, p.psi, profile, Profile::default())?);
        }
    }
    Ok(DeformedPortion { center, partners })
}

/// Deformed baselines for display: `count` azimuths per bone.
pub fn export_deformed_baselines(
    rest: &Skeleton,
    posed: &Skeleton,
    count: usize,
    per_piece: usize,
) -> Vec<crate::baseline::BaselinePolyline> {
    let mut out = Vec::new();
    for k in 0..rest.bones.len() {
        for i in 0..count {
            let psi = std::f64::consts::TAU * i as f64 / count as f64;
            let Ok(s) = deformed_section(rest, posed, k, psi, Profile::Cubic, Profile::Cubic) else { continue };
            out.push(crate::baseline::BaselinePolyline {
                bone_id: rest.bones[k].id,
                azimuth: psi,
                points: s.polyline(per_piece).into_iter().map(|(p, _)| [p.x, p.y, p.z]).collect(),
            });
        }
    }
    out
}

/// Whether the end of `sec` at index `end` crosses its neighbour (the fold
/// hides part of the surface).
pub fn is_folded(sec: &Section, end: usize) -> bool {
    sec.ends[end].kind == EndKind::Concave
}
