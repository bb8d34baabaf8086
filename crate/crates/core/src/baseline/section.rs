use serde::{Deserialize, Serialize};

use super::{end_config, EndConfig, EndKind};
use crate::error::{Error, Result};
use crate::geom::{line_line_intersection_in_plane, Arc3, Line, Plane, Vec3};
use crate::sphere_mesh::{Bone, End, Skeleton};

/// Interpolation profile along a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Linear,
    #[default]
    Cubic,
}

impl Profile {
    #[inline]
    pub fn weight(self, s: f64) -> f64 {
        match self {
            Profile::Linear => s,
            Profile::Cubic => s * s * (3.0 - 2.0 * s),
        }
    }

    #[inline]
    pub fn slope(self, s: f64) -> f64 {
        match self {
            Profile::Linear => 1.0,
            Profile::Cubic => 6.0 * s * (1.0 - s),
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Profile::Linear),
            "cubic" => Ok(Profile::Cubic),
            _ => Err(format!("unknown profile '{s}' (expected linear or cubic)")),
        }
    }
}

/// Arc piece of a section, read from the curve endpoint towards the anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcPiece {
    pub arc: Arc3,
    pub sphere_center: Vec3,
    pub sphere_radius: f64,
}

/// Position on a section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Locus {
    /// On the arc of end 0 (proximal) or 1 (distal), at `angle` from the
    /// curve endpoint.
    Arc { end: usize, angle: f64 },
    /// On the curve at generatrix parameter `d`.
    Curve { d: f64 },
}

/// The part of a baseline owned by one bone: from the proximal anchor,
/// over an optional arc, along a curve on the cone, over an optional arc to
/// the distal anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub bone: Bone,
    pub bone_index: usize,
    pub ends: [EndConfig; 2],
    pub arcs: [Option<ArcPiece>; 2],
    /// Azimuth of the curve at `d[0]` and `d[1]`.
    pub psi: [f64; 2],
    pub d: [f64; 2],
    /// Angle profile of the curve between its end azimuths.
    pub profile: Profile,
    /// Detail directions at both segment ends, scaled for interpolation.
    pub field: [Vec3; 2],
    pub field_profile: Profile,
    /// Lengths of the proximal arc, curve and distal arc.
    pub len: [f64; 3],
}

// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];
const GL_PANELS: usize = 6;

fn arc_piece(sk: &Skeleton, cfg: &EndConfig) -> Option<ArcPiece> {
    cfg.arc.map(|arc| ArcPiece {
        arc,
        sphere_center: sk.spheres[cfg.sphere].center,
        sphere_radius: sk.spheres[cfg.sphere].radius,
    })
}

impl Section {
    /// Baseline section of bone `k` at azimuth `psi` on `sk` as built from
    /// the skeleton geometry alone.
    pub fn build(sk: &Skeleton, k: usize, psi: f64, field_profile: Profile) -> Result<Section> {
        let prox = end_config(sk, k, End::Prox, psi)?;
        let dist = end_config(sk, k, End::Dist, psi)?;
        Section::assemble(sk, k, [prox, dist], [psi, psi], Profile::Linear, field_profile)
    }

    /// Assembles a section from its end configurations and curve azimuths.
    pub fn assemble(
        sk: &Skeleton,
        k: usize,
        ends: [EndConfig; 2],
        psi: [f64; 2],
        profile: Profile,
        field_profile: Profile,
    ) -> Result<Section> {
        let bone = sk.bones[k].clone();
        let d = [ends[0].d, ends[1].d];
        if !(d[1] - d[0] > 1e-12) {
            return Err(Error::SectionCollapsed);
        }
        let arcs = [arc_piece(sk, &ends[0]), arc_piece(sk, &ends[1])];
        let mut s = Section {
            bone,
            bone_index: k,
            ends,
            arcs,
            psi,
            d,
            profile,
            field: [Vec3::zeros(); 2],
            field_profile,
            len: [0.0; 3],
        };
        s.len = [
            arcs[0].map_or(0.0, |a| a.arc.length()),
            s.curve_length_to(d[1]),
            arcs[1].map_or(0.0, |a| a.arc.length()),
        ];
        if psi[0] == psi[1] {
            s.field = s.segment_field(sk);
        }
        Ok(s)
    }

    pub fn total_length(&self) -> f64 {
        self.len[0] + self.len[1] + self.len[2]
    }

    /// Endpoint directions of the detail field on a straight segment: cone
    /// normal at arc and free ends, joint-center outward at crossing
    /// anchors, rescaled so that their blend follows the rays through the
    /// intersection of the two endpoint lines.
    fn segment_field(&self, sk: &Skeleton) -> [Vec3; 2] {
        let psi = self.psi[0];
        let nrm = self.bone.normal(psi);
        let dir = |cfg: &EndConfig| {
            if cfg.kind == EndKind::Concave {
                (cfg.anchor - sk.spheres[cfg.sphere].center).normalize()
            } else {
                nrm
            }
        };
        let n0 = dir(&self.ends[0]);
        let n1 = dir(&self.ends[1]);
        let p0 = self.curve_point(self.d[0]);
        let p1 = self.curve_point(self.d[1]);
        let meridian = Plane {
            point: p0,
            normal: self.bone.axis.cross(&self.bone.radial(psi)),
        };
        match line_line_intersection_in_plane(&Line::new(p0, n0), &Line::new(p1, n1), &meridian) {
            Ok(i) => {
                let l0 = (i - p0).dot(&n0);
                let l1 = (i - p1).dot(&n1);
                if l0 * l1 > 0.0 {
                    [n0 * l0.abs(), n1 * l1.abs()]
                } else {
                    [n0, n1]
                }
            }
            Err(_) => [n0, n1],
        }
    }

    #[inline]
    pub fn curve_psi(&self, d: f64) -> f64 {
        if self.psi[0] == self.psi[1] {
            return self.psi[0];
        }
        let s = ((d - self.d[0]) / (self.d[1] - self.d[0])).clamp(0.0, 1.0);
        self.psi[0] + (self.psi[1] - self.psi[0]) * self.profile.weight(s)
    }

    #[inline]
    pub fn curve_point(&self, d: f64) -> Vec3 {
        self.bone.point(self.curve_psi(d), d)
    }

    /// Derivative of the curve with respect to `d`.
    pub fn curve_tangent(&self, d: f64) -> Vec3 {
        let psi = self.curve_psi(d);
        let g = self.bone.point(psi, 1.0) - self.bone.point(psi, 0.0);
        let dpsi = self.curve_dpsi(d);
        let e_perp = self.bone.axis.cross(&self.bone.radial(psi));
        g + e_perp * (self.bone.section_radius(d) * dpsi)
    }

    fn curve_dpsi(&self, d: f64) -> f64 {
        if self.psi[0] == self.psi[1] {
            return 0.0;
        }
        let span = self.d[1] - self.d[0];
        let s = ((d - self.d[0]) / span).clamp(0.0, 1.0);
        (self.psi[1] - self.psi[0]) * self.profile.slope(s) / span
    }

    #[inline]
    fn curve_speed(&self, d: f64) -> f64 {
        let gl = self.bone.generatrix_length();
        let w = self.bone.section_radius(d) * self.curve_dpsi(d);
        (gl * gl + w * w).sqrt()
    }

    /// Arclength of the curve from `d[0]` to `d`.
    pub fn curve_length_to(&self, d: f64) -> f64 {
        let gl = self.bone.generatrix_length();
        if self.psi[0] == self.psi[1] {
            return gl * (d - self.d[0]);
        }
        let a = self.d[0];
        let h = (d - a) / GL_PANELS as f64;
        let mut sum = 0.0;
        for i in 0..GL_PANELS {
            let mid = a + h * (i as f64 + 0.5);
            for (x, w) in GL_X.iter().zip(GL_W.iter()) {
                sum += w * self.curve_speed(mid + 0.5 * h * x);
            }
        }
        sum * 0.5 * h
    }

    /// Generatrix parameter at arclength `s` from the start of the curve.
    pub fn curve_param_at(&self, s: f64) -> f64 {
        let span = self.d[1] - self.d[0];
        if self.len[1] <= 0.0 {
            return self.d[0];
        }
        if self.psi[0] == self.psi[1] {
            return (self.d[0] + s / self.bone.generatrix_length()).clamp(self.d[0], self.d[1]);
        }
        let mut d = self.d[0] + span * (s / self.len[1]).clamp(0.0, 1.0);
        for _ in 0..30 {
            let f = self.curve_length_to(d) - s;
            let step = f / self.curve_speed(d);
            d = (d - step).clamp(self.d[0], self.d[1]);
            if step.abs() <= 1e-15 * span.max(1.0) {
                break;
            }
        }
        d
    }

    /// Position at curvilinear ratio `t` of the section.
    pub fn locus_at(&self, t: f64) -> Locus {
        let total = self.total_length();
        let s = t.clamp(0.0, 1.0) * total;
        if s < self.len[0] {
            let a = self.arcs[0].unwrap();
            return Locus::Arc {
                end: 0,
                angle: (self.len[0] - s) / a.arc.radius,
            };
        }
        let s = s - self.len[0];
        if s <= self.len[1] || self.arcs[1].is_none() {
            return Locus::Curve {
                d: self.curve_param_at(s.min(self.len[1])),
            };
        }
        let a = self.arcs[1].unwrap();
        Locus::Arc {
            end: 1,
            angle: ((s - self.len[1]) / a.arc.radius).min(a.arc.sweep()),
        }
    }

    pub fn t_at(&self, locus: &Locus) -> f64 {
        let total = self.total_length();
        if total <= 0.0 {
            return 0.0;
        }
        let s = match *locus {
            Locus::Arc { end: 0, angle } => self.len[0] - angle * self.arcs[0].unwrap().arc.radius,
            Locus::Arc { angle, .. } => self.len[0] + self.len[1] + angle * self.arcs[1].unwrap().arc.radius,
            Locus::Curve { d } => self.len[0] + self.curve_length_to(d),
        };
        (s / total).clamp(0.0, 1.0)
    }

    pub fn position(&self, locus: &Locus) -> Vec3 {
        match *locus {
            Locus::Arc { end, angle } => self.arcs[end].unwrap().arc.point_at(angle),
            Locus::Curve { d } => self.curve_point(d),
        }
    }

    /// Unit tangent in the direction of increasing `t`.
    pub fn tangent(&self, locus: &Locus) -> Vec3 {
        match *locus {
            Locus::Arc { end: 0, angle } => -self.arcs[0].unwrap().arc.tangent_at(angle),
            Locus::Arc { end, angle } => self.arcs[end].unwrap().arc.tangent_at(angle),
            Locus::Curve { d } => self.curve_tangent(d).normalize(),
        }
    }

    /// Detail direction and `sin β` at a locus of a straight section.
    pub fn direction(&self, locus: &Locus) -> (Vec3, f64) {
        match *locus {
            Locus::Arc { end, angle } => {
                let a = self.arcs[end].unwrap();
                ((a.arc.point_at(angle) - a.sphere_center) / a.sphere_radius, 1.0)
            }
            Locus::Curve { d } => self.segment_direction(d),
        }
    }

    /// Detail direction on the segment at parameter `d` (clamped to the
    /// segment) with `sin β`, the cosine to the cone normal.
    pub fn segment_direction(&self, d: f64) -> (Vec3, f64) {
        let s = ((d - self.d[0]) / (self.d[1] - self.d[0])).clamp(0.0, 1.0);
        let w = self.field_profile.weight(s);
        let n = (self.field[0] * (1.0 - w) + self.field[1] * w).normalize();
        let cone_n = self.bone.normal(self.psi[0]);
        (n, n.dot(&cone_n).min(1.0))
    }

    pub fn anchor(&self, end: usize) -> Vec3 {
        self.ends[end].anchor
    }

    /// Solves for the base-point of `p` on the straight segment: the
    /// parameter where the detail ray passes through `p`.
    pub fn project_on_segment(&self, p: &Vec3, scale: f64) -> Option<f64> {
        let psi = self.psi[0];
        let e = self.bone.radial(psi);
        let u = self.bone.axis;
        let off = (p - self.bone.c_prox).dot(&u.cross(&e));
        if off.abs() > 1e-9 * scale {
            return None;
        }
        let to2 = |v: &Vec3| (v.dot(&u), v.dot(&e));
        let cross = |a: (f64, f64), b: (f64, f64)| a.0 * b.1 - a.1 * b.0;
        let p0 = self.curve_point(self.d[0]);
        let p1 = self.curve_point(self.d[1]);
        let q = to2(&(p - p0));
        let dd = to2(&(p1 - p0));
        let a0 = to2(&self.field[0]);
        let a1 = to2(&self.field[1]);
        let da = (a1.0 - a0.0, a1.1 - a0.1);
        // cross(q − s·D, a0 + w(s)·Δa) = 0
        let f = |s: f64| {
            let w = self.field_profile.weight(s);
            cross((q.0 - s * dd.0, q.1 - s * dd.1), (a0.0 + w * da.0, a0.1 + w * da.1))
        };
        let df = |s: f64| {
            let w = self.field_profile.weight(s);
            let dw = self.field_profile.slope(s);
            cross((-dd.0, -dd.1), (a0.0 + w * da.0, a0.1 + w * da.1)) + cross((q.0 - s * dd.0, q.1 - s * dd.1), (dw * da.0, dw * da.1))
        };
        // Linear-profile root as the seed: c0 + c1 s + c2 s² = 0.
        let c0 = cross(q, a0);
        let c1 = cross(q, da) - cross(dd, a0);
        let c2 = -cross(dd, da);
        let seed = quadratic_root_in_unit(c0, c1, c2);
        let (f0, f1) = (f(0.0), f(1.0));
        let tol = 1e-12;
        if self.field_profile == Profile::Linear {
            let s = seed?;
            return Some(polish(&f, &df, s, 0.0, 1.0));
        }
        if f0 == 0.0 {
            return Some(0.0);
        }
        if f1 == 0.0 {
            return Some(1.0);
        }
        if f0.signum() == f1.signum() {
            let s = seed.filter(|s| (-tol..=1.0 + tol).contains(s))?;
            let s = polish(&f, &df, s.clamp(0.0, 1.0), 0.0, 1.0);
            return (f(s).abs() <= 1e-12 * (f0.abs() + f1.abs())).then_some(s);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut flo = f0;
        let mut s = seed.unwrap_or(0.5).clamp(0.0, 1.0);
        for _ in 0..100 {
            let fs = f(s);
            if fs == 0.0 {
                return Some(s);
            }
            if fs.signum() == flo.signum() {
                lo = s;
                flo = fs;
            } else {
                hi = s;
            }
            let step = fs / df(s);
            let mut next = s - step;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-16 || hi - lo <= 1e-16 {
                return Some(next);
            }
            s = next;
        }
        Some(s)
    }

    /// Polyline from the proximal anchor to the distal anchor with at least
    /// `per_piece` samples on each piece.
    pub fn polyline(&self, per_piece: usize) -> Vec<(Vec3, Locus)> {
        let n = per_piece.max(2);
        let mut out = Vec::with_capacity(3 * n);
        if let Some(a) = self.arcs[0] {
            let sw = a.arc.sweep();
            for i in 0..n {
                let ang = sw * (1.0 - i as f64 / n as f64);
                let l = Locus::Arc { end: 0, angle: ang };
                out.push((self.position(&l), l));
            }
        }
        for i in 0..=n {
            let d = self.d[0] + (self.d[1] - self.d[0]) * i as f64 / n as f64;
            let l = Locus::Curve { d };
            out.push((self.position(&l), l));
        }
        if let Some(a) = self.arcs[1] {
            let sw = a.arc.sweep();
            for i in 1..=n {
                let l = Locus::Arc {
                    end: 1,
                    angle: sw * i as f64 / n as f64,
                };
                out.push((self.position(&l), l));
            }
        }
        out
    }
}

fn quadratic_root_in_unit(c0: f64, c1: f64, c2: f64) -> Option<f64> {
    let scale = c0.abs().max(c1.abs()).max(c2.abs());
    if scale == 0.0 {
        return Some(0.0);
    }
    let tol = 1e-9;
    let inside = |s: f64| s >= -tol && s <= 1.0 + tol;
    if c2.abs() <= 1e-14 * scale {
        if c1 == 0.0 {
            return None;
        }
        let s = -c0 / c1;
        return inside(s).then_some(s);
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let qq = -0.5 * (c1 + c1.signum() * sq);
    let mut roots = [qq / c2, if qq != 0.0 { c0 / qq } else { qq / c2 }];
    roots.sort_by(f64::total_cmp);
    roots.into_iter().find(|&s| inside(s))
}

/// A few safeguarded Newton steps inside `[lo, hi]`.
fn polish(f: &impl Fn(f64) -> f64, df: &impl Fn(f64) -> f64, mut s: f64, lo: f64, hi: f64) -> f64 {
    s = s.clamp(lo, hi);
    for _ in 0..4 {
        let d = df(s);
        if d == 0.0 {
            break;
        }
        let next = (s - f(s) / d).clamp(lo, hi);
        if next == s {
            break;
        }
        s = next;
    }
    s
}
