//! Baselines: curves on the sphere-mesh surface made of generatrix segments
//! and spherical arcs, built per point over at most three bones.
//!
//! A baseline is identified by its center bone and an azimuth about that
//! bone's axis. At each end of the center segment the baseline either closes
//! over a free cap, or reaches a joint sphere where it continues on a
//! neighbouring bone inside the plane through the two cone apexes.

mod junction;
mod portion;
mod section;

use crate::error::{Error, Result};
use crate::geom::{
    line_line_intersection_in_plane, plane_sphere_intersection, plane_through, solve_trig, Arc3, Circle, Line,
    Plane, PlaneSphere, Vec3,
};
use crate::sphere_mesh::{Bone, End, Skeleton};

pub use junction::{cell_margin, junction_pivot_coordinate, pivot_circle, pivot_point_at};
pub use portion::{build_portion, locate, AnchorKind, AnchorPoint, Located, export_baselines, select_branch, BaselineElement, BaselinePortion, BaselinePolyline};
pub use section::{ArcPiece, Locus, Profile, Section};

/// Angles below this are treated as a straight joint.
pub const EPS_FLAT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndKind {
    /// Free extremity closed by a meridian arc up to the cap tip.
    Free,
    /// Baseline wraps around the joint sphere on a C¹ arc.
    Convex,
    /// Generatrix lines of both bones cross before reaching the sphere.
    Concave,
    /// Straight joint: both generatrices meet at the shared tangency point.
    Flat,
}

/// Plane `w_k(x) = w_m(x)` holding the intersection circle of two cones
/// sharing a sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separator {
    pub sphere: usize,
    pub bones: (usize, usize),
    /// `q·(x − C) − rhs = w_k(x) − w_m(x)`.
    pub q: Vec3,
    pub rhs: f64,
    pub center: Vec3,
}

impl Separator {
    pub fn new(sk: &Skeleton, sphere: usize, k: usize, m: usize) -> Separator {
        let bk = &sk.bones[k];
        let bm = &sk.bones[m];
        let (ak, sk_) = bk.from_end(sk.end_at(k, sphere));
        let (am, sm) = bm.from_end(sk.end_at(m, sphere));
        let r = sk.spheres[sphere].radius;
        Separator {
            sphere,
            bones: (k, m),
            q: ak / bk.cos_a - am / bm.cos_a,
            rhs: r * (sk_ / bk.cos_a - sm / bm.cos_a),
            center: sk.spheres[sphere].center,
        }
    }

    /// `w_k(x) − w_m(x)`: positive on the side of the first bone.
    #[inline]
    pub fn value(&self, x: &Vec3) -> f64 {
        self.q.dot(&(x - self.center)) - self.rhs
    }

    pub fn plane(&self) -> Option<Plane> {
        let n2 = self.q.norm_squared();
        Plane::new(self.center + self.q * (self.rhs / n2), self.q)
    }

    pub fn signed_distance(&self, x: &Vec3) -> f64 {
        self.value(x) / self.q.norm()
    }
}

/// One of the two connected pieces of a support plane through a joint:
/// the tangency point `v` on the center bone, `x` on the partner, and how
/// they are joined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub v: Vec3,
    pub x: Vec3,
    pub kind: EndKind,
    /// Circle cut by the plane on the joint sphere, normal oriented so that
    /// the baseline turns positively about it.
    pub circle: Circle,
    /// Signed sweep from `v` to `x` on the circle; positive when convex.
    pub theta: f64,
    pub anchor: Vec3,
    /// Sweep from `v` to the anchor for convex components.
    pub anchor_angle: f64,
}

impl Component {
    pub fn arc_from_v(&self, sweep: f64) -> Arc3 {
        Arc3::from_start(self.circle.center, self.v, self.circle.normal, sweep)
    }
}

/// Partner bone of a baseline at a joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partner {
    pub bone: usize,
    pub end: End,
    pub psi: f64,
    pub x: Vec3,
}

/// How the center segment of a baseline ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndConfig {
    pub kind: EndKind,
    pub end: End,
    pub sphere: usize,
    /// Azimuth of the segment at this end, in the center bone frame.
    pub psi: f64,
    /// Tangency point of the center bone.
    pub v: Vec3,
    /// Where the section stops: cap tip, point on the separator, or `v`.
    pub anchor: Vec3,
    /// Generatrix parameter where the segment stops.
    pub d: f64,
    /// Piece of arc from `v` towards the anchor (free caps, convex joints).
    pub arc: Option<Arc3>,
    pub partner: Option<Partner>,
    /// Sweep of the whole joint arc from `v` to the partner tangency point.
    pub full_sweep: f64,
    pub tangent_plane: bool,
}

impl EndConfig {
    pub fn is_joint(&self) -> bool {
        self.partner.is_some()
    }
}

pub(crate) fn end_param(end: End) -> f64 {
    match end {
        End::Prox => 0.0,
        End::Dist => 1.0,
    }
}

/// Unit generatrix direction of `bone` at azimuth `psi`, pointing away from
/// the sphere at `end`.
pub(crate) fn away_dir(bone: &Bone, end: End, psi: f64) -> Vec3 {
    match end {
        End::Prox => bone.generatrix_dir(psi),
        End::Dist => -bone.generatrix_dir(psi),
    }
}

/// Azimuth of a tangency point `x` of `bone`, measured radially from the
/// axis.
pub(crate) fn tangency_azimuth(bone: &Bone, x: &Vec3) -> f64 {
    let v = x - bone.c_prox;
    v.dot(&bone.e90).atan2(v.dot(&bone.e0))
}

/// Meridian arc closing a free extremity, from the tangency point to the
/// cap tip on the axis.
pub fn free_cap_arc(bone: &Bone, end: End, psi: f64) -> Arc3 {
    let e = bone.radial(psi);
    let f = bone.axis.cross(&e);
    let v = bone.tangency(end, psi);
    let alpha = bone.sin_a.asin();
    match end {
        End::Prox => Arc3::from_start(bone.c_prox, v, f, std::f64::consts::FRAC_PI_2 + alpha),
        End::Dist => Arc3::from_start(bone.c_dist, v, -f, std::f64::consts::FRAC_PI_2 - alpha),
    }
}

pub fn free_end(bone: &Bone, end: End, psi: f64) -> EndConfig {
    let arc = free_cap_arc(bone, end, psi);
    let tip = match end {
        End::Prox => bone.c_prox - bone.axis * bone.r_prox,
        End::Dist => bone.c_dist + bone.axis * bone.r_dist,
    };
    EndConfig {
        kind: EndKind::Free,
        end,
        sphere: bone.sphere(end),
        psi,
        v: arc.start(),
        anchor: tip,
        d: end_param(end),
        arc: Some(arc),
        partner: None,
        full_sweep: arc.sweep(),
        tangent_plane: false,
    }
}

/// Normal of the support plane through `q` and the apexes of `k` and `m`.
/// Falls back to the meridian plane of `k` through `q` when the apexes are
/// aligned with `q` (e.g. parallel cylinders).
pub fn support_normal(sk: &Skeleton, k: usize, m: usize, q: &Vec3) -> Vec3 {
    let bk = &sk.bones[k];
    let bm = &sk.bones[m];
    plane_through(q, &bk.apex, &bm.apex, 1e-12).unwrap_or_else(|| {
        let n = bk.axis.cross(&(q - bk.c_prox));
        if n.norm() > 0.0 {
            n.normalize()
        } else {
            crate::geom::orthogonal_unit(&bk.axis)
        }
    })
}

/// Both components of the plane through `q` with normal `n` at the joint
/// sphere shared by `k` and `m`, `k` being the center bone.
pub fn components(sk: &Skeleton, k: usize, m: usize, sphere: usize, q: &Vec3, n: &Vec3) -> Result<Vec<Component>> {
    let bk = &sk.bones[k];
    let bm = &sk.bones[m];
    let ek = sk.end_at(k, sphere);
    let em = sk.end_at(m, sphere);
    let c = sk.spheres[sphere].center;
    let r = sk.spheres[sphere].radius;
    let plane = Plane::new(*q, *n).ok_or(Error::SheafDegenerate(sk.spheres[sphere].id))?;
    let circle = match plane_sphere_intersection(&plane, &c, r, 1e-13 * sk.tol.diagonal) {
        PlaneSphere::Circle(ci) => ci,
        PlaneSphere::Tangent(p) => return Ok(vec![tangent_component(&p, &plane)]),
        PlaneSphere::Disjoint => return Err(Error::TangentPlane(sk.spheres[sphere].id)),
    };
    let vs = tangent_points(&bk.apex, &circle).ok_or(Error::TangentPlane(sk.spheres[sphere].id))?;
    let xs = tangent_points(&bm.apex, &circle).ok_or(Error::TangentPlane(sk.spheres[sphere].id))?;
    let sep = Separator::new(sk, sphere, k, m);
    let mut out = Vec::with_capacity(2);
    for v in vs {
        let psi_v = tangency_azimuth(bk, &v);
        let d1 = -away_dir(bk, ek, psi_v);
        let sigma = (v - circle.center).cross(&d1).dot(n).signum();
        let sense = |x: &Vec3| {
            let psi_x = tangency_azimuth(bm, x);
            let d2 = away_dir(bm, em, psi_x);
            (x - circle.center).cross(&d2).dot(n) * sigma
        };
        let x = if sense(&xs[0]) >= sense(&xs[1]) { xs[0] } else { xs[1] };
        let oriented = Circle {
            normal: *n * sigma,
            ..circle
        };
        out.push(join(&sep, bk, ek, bm, em, v, x, oriented, &plane));
    }
    Ok(out)
}

fn tangent_component(p: &Vec3, plane: &Plane) -> Component {
    Component {
        v: *p,
        x: *p,
        kind: EndKind::Flat,
        circle: Circle {
            center: *p,
            radius: 0.0,
            normal: plane.normal,
        },
        theta: 0.0,
        anchor: *p,
        anchor_angle: 0.0,
    }
}

fn tangent_points(h: &crate::geom::HPoint, circle: &Circle) -> Option<[Vec3; 2]> {
    let (x, y) = circle.frame();
    let g = h.xyz - circle.center * h.w;
    let (a, b) = solve_trig(g.dot(&x), g.dot(&y), -h.w * circle.radius)?;
    Some([circle.point_in_frame(&x, &y, a), circle.point_in_frame(&x, &y, b)])
}

#[allow(clippy::too_many_arguments)]
fn join(sep: &Separator, bk: &Bone, ek: End, bm: &Bone, em: End, v: Vec3, x: Vec3, circle: Circle, plane: &Plane) -> Component {
    let n = circle.normal;
    let a = v - circle.center;
    let b = x - circle.center;
    let theta = a.cross(&b).dot(&n).atan2(a.dot(&b));
    let mut comp = Component {
        v,
        x,
        kind: EndKind::Flat,
        circle,
        theta,
        anchor: v,
        anchor_angle: 0.0,
    };
    if theta.abs() <= EPS_FLAT {
        return comp;
    }
    if theta > 0.0 {
        comp.kind = EndKind::Convex;
        let arc = comp.arc_from_v(theta);
        let ex = arc.x_axis;
        let ey = n.cross(&ex);
        let r = circle.radius;
        let f = |phi: f64| sep.value(&arc.point_at(phi));
        let phi = solve_trig(r * sep.q.dot(&ex), r * sep.q.dot(&ey), sep.q.dot(&(circle.center - sep.center)) - sep.rhs)
            .and_then(|(p1, p2)| {
                let tol = 1e-9;
                let norm = |p: f64| if p < -tol { p + std::f64::consts::TAU } else { p };
                let cands = [norm(p1), norm(p2)];
                cands
                    .into_iter()
                    .filter(|p| *p >= -tol && *p <= theta + tol)
                    .min_by(|p, q| (p - theta / 2.0).abs().total_cmp(&(q - theta / 2.0).abs()))
            })
            .unwrap_or_else(|| if f(0.0).abs() <= f(theta).abs() { 0.0 } else { theta })
            .clamp(0.0, theta);
        comp.anchor_angle = phi;
        comp.anchor = arc.point_at(phi);
    } else {
        let psi_v = tangency_azimuth(bk, &v);
        let psi_x = tangency_azimuth(bm, &x);
        let l1 = Line::new(v, away_dir(bk, ek, psi_v));
        let l2 = Line::new(x, away_dir(bm, em, psi_x));
        match line_line_intersection_in_plane(&l1, &l2, plane) {
            Ok(s) => {
                comp.kind = EndKind::Concave;
                comp.anchor = s;
            }
            Err(_) => comp.theta = 0.0,
        }
    }
    comp
}

/// Component of the support plane of (`k`, `psi`) at the joint `sphere`
/// with partner `m`.
pub fn pair_config(sk: &Skeleton, k: usize, end: End, psi: f64, m: usize) -> Result<EndConfig> {
    let bk = &sk.bones[k];
    let sphere = bk.sphere(end);
    let v = bk.tangency(end, psi);
    let n = support_normal(sk, k, m, &v);
    let comps = components(sk, k, m, sphere, &v, &n)?;
    let comp = comps
        .into_iter()
        .min_by(|a, b| (a.v - v).norm().total_cmp(&(b.v - v).norm()))
        .unwrap();
    Ok(end_from_component(sk, k, end, psi, m, &Component { v, ..comp }))
}

pub(crate) fn end_from_component(sk: &Skeleton, k: usize, end: End, psi: f64, m: usize, comp: &Component) -> EndConfig {
    let bk = &sk.bones[k];
    let bm = &sk.bones[m];
    let sphere = bk.sphere(end);
    let partner = Partner {
        bone: m,
        end: sk.end_at(m, sphere),
        psi: tangency_azimuth(bm, &comp.x),
        x: comp.x,
    };
    let (arc, d) = match comp.kind {
        EndKind::Convex => (Some(comp.arc_from_v(comp.anchor_angle)), end_param(end)),
        EndKind::Concave => (None, bk.param_on_generatrix(psi, &comp.anchor)),
        _ => (None, end_param(end)),
    };
    EndConfig {
        kind: comp.kind,
        end,
        sphere,
        psi,
        v: comp.v,
        anchor: comp.anchor,
        d,
        arc,
        partner: Some(partner),
        full_sweep: comp.theta.max(0.0),
        tangent_plane: comp.circle.radius == 0.0,
    }
}

/// End configuration of the baseline of (`k`, `psi`) at `end`. At junctions
/// the partner is the bone whose pair cell contains the anchor, ties going
/// to the lowest bone id.
pub fn end_config(sk: &Skeleton, k: usize, end: End, psi: f64) -> Result<EndConfig> {
    let bk = &sk.bones[k];
    let sphere = bk.sphere(end);
    let others: Vec<usize> = sk.sphere_bones[sphere].iter().copied().filter(|&b| b != k).collect();
    match others.len() {
        0 => Ok(free_end(bk, end, psi)),
        1 => pair_config(sk, k, end, psi, others[0]),
        _ => {
            let eps = sk.tol.surface();
            let mut best: Option<(f64, EndConfig)> = None;
            for &m in &others {
                let Ok(cfg) = pair_config(sk, k, end, psi, m) else { continue };
                let margin = cell_margin(sk, sphere, k, m, &cfg.anchor);
                if margin >= -eps {
                    return Ok(cfg);
                }
                if best.as_ref().is_none_or(|(b, _)| margin > *b) {
                    best = Some((margin, cfg));
                }
            }
            best.map(|(_, c)| c).ok_or(Error::SheafDegenerate(sk.spheres[sphere].id))
        }
    }
}

#[cfg(test)]
mod tests;
