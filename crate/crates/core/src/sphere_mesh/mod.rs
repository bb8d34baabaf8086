//! Sphere-mesh skeletons: spheres joined by tangent-cone bones, organised as
//! a tree of chains.

mod pose;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use nalgebra::UnitQuaternion;

use crate::geom::{orthogonal_unit, Circle, HPoint, Tolerances, Vec3};

pub use pose::{bone_motion, Anatomy, Bend, Pose, Twist};

pub type SphereId = u32;
pub type BoneId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereNode {
    pub id: SphereId,
    pub center: Vec3,
    pub radius: f64,
}

/// Tangent cone of a bone, oriented from its first sphere to its second.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeGeometry {
    pub axis_dir: Vec3,
    /// `sin α = (r₁ − r₂) / l`, zero for cylinders.
    pub sin_alpha: f64,
    pub half_angle: f64,
    pub apex: Option<Vec3>,
    pub tangency_circle_start: Circle,
    pub tangency_circle_end: Circle,
}

/// Derives the cone tangent to both spheres. Radii closer than `eps_r` give a
/// cylinder.
pub fn derive_cone(s1: &SphereNode, s2: &SphereNode, eps_r: f64) -> Result<ConeGeometry> {
    let axis = s2.center - s1.center;
    let l = axis.norm();
    if !(l > (s1.radius - s2.radius).abs() + eps_r) {
        return Err(Error::NestedSpheres(s1.id, s2.id));
    }
    let u = axis / l;
    let cylinder = (s1.radius - s2.radius).abs() <= eps_r;
    let sin_alpha = if cylinder {
        0.0
    } else {
        (s1.radius - s2.radius) / l
    };
    let cos_alpha = (1.0 - sin_alpha * sin_alpha).sqrt();
    let apex = (!cylinder).then(|| s1.center + u * (s1.radius / sin_alpha));
    let tangency = |s: &SphereNode| Circle {
        center: s.center + u * (s.radius * sin_alpha),
        radius: s.radius * cos_alpha,
        normal: u,
    };
    Ok(ConeGeometry {
        axis_dir: u,
        sin_alpha,
        half_angle: sin_alpha.asin(),
        apex,
        tangency_circle_start: tangency(s1),
        tangency_circle_end: tangency(s2),
    })
}

/// Which end of a bone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum End {
    Prox,
    Dist,
}

impl End {
    pub fn other(self) -> End {
        match self {
            End::Prox => End::Dist,
            End::Dist => End::Prox,
        }
    }
}

/// A bone, oriented from the sphere closer to the skeleton root (`prox`) to
/// the other one (`dist`). Positions and azimuth frames are precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Bone {
    pub id: BoneId,
    /// Sphere ids as given in the skeleton file.
    pub start: SphereId,
    pub end: SphereId,
    pub prox: usize,
    pub dist: usize,
    pub c_prox: Vec3,
    pub c_dist: Vec3,
    pub r_prox: f64,
    pub r_dist: f64,
    pub length: f64,
    pub axis: Vec3,
    pub sin_a: f64,
    pub cos_a: f64,
    /// Azimuth zero direction, orthogonal to `axis`.
    pub e0: Vec3,
    pub e90: Vec3,
    /// Cone apex as a projective point (a direction for cylinders).
    pub apex: HPoint,
    /// Twist applied by the current pose, in radians.
    pub twist: f64,
    /// Rotation taking the rest bone onto the posed one, twist excluded.
    pub rotation: UnitQuaternion<f64>,
}

impl Bone {
    fn build(
        id: BoneId,
        (start, end): (SphereId, SphereId),
        (prox, dist): (usize, usize),
        spheres: &[SphereNode],
        e_ref: Vec3,
        (rotation, twist): (UnitQuaternion<f64>, f64),
        tol: &Tolerances,
    ) -> Result<Bone> {
        let sp = &spheres[prox];
        let sd = &spheres[dist];
        let cone = derive_cone(sp, sd, tol.cylinder())?;
        let axis = cone.axis_dir;
        let e0 = {
            let v = e_ref - axis * axis.dot(&e_ref);
            if v.norm() > 1e-6 {
                v.normalize()
            } else {
                orthogonal_unit(&axis)
            }
        };
        let sin_a = cone.sin_alpha;
        Ok(Bone {
            id,
            start,
            end,
            prox,
            dist,
            c_prox: sp.center,
            c_dist: sd.center,
            r_prox: sp.radius,
            r_dist: sd.radius,
            length: (sd.center - sp.center).norm(),
            axis,
            sin_a,
            cos_a: (1.0 - sin_a * sin_a).sqrt(),
            e0,
            e90: axis.cross(&e0),
            apex: HPoint {
                xyz: sp.center * sin_a + axis * sp.radius,
                w: sin_a,
            },
            twist,
            rotation,
        })
    }

    pub fn sphere(&self, end: End) -> usize {
        match end {
            End::Prox => self.prox,
            End::Dist => self.dist,
        }
    }

    pub fn center(&self, end: End) -> Vec3 {
        match end {
            End::Prox => self.c_prox,
            End::Dist => self.c_dist,
        }
    }

    pub fn radius(&self, end: End) -> f64 {
        match end {
            End::Prox => self.r_prox,
            End::Dist => self.r_dist,
        }
    }

    pub fn is_cylinder(&self) -> bool {
        self.sin_a == 0.0
    }

    /// Radial unit direction at azimuth `psi`.
    #[inline]
    pub fn radial(&self, psi: f64) -> Vec3 {
        let (s, c) = psi.sin_cos();
        self.e0 * c + self.e90 * s
    }

    /// Outward cone normal along the generatrix at azimuth `psi`.
    #[inline]
    pub fn normal(&self, psi: f64) -> Vec3 {
        self.axis * self.sin_a + self.radial(psi) * self.cos_a
    }

    /// Point of the tangency circle at `end`.
    #[inline]
    pub fn tangency(&self, end: End, psi: f64) -> Vec3 {
        self.center(end) + self.normal(psi) * self.radius(end)
    }

    /// Generatrix point at azimuth `psi` and parameter `d` (0 at the
    /// proximal tangency circle, 1 at the distal one).
    #[inline]
    pub fn point(&self, psi: f64, d: f64) -> Vec3 {
        let n = self.normal(psi);
        let p0 = self.c_prox + n * self.r_prox;
        let p1 = self.c_dist + n * self.r_dist;
        p0 + (p1 - p0) * d
    }

    /// Length of a generatrix between the two tangency circles.
    pub fn generatrix_length(&self) -> f64 {
        self.length * self.cos_a
    }

    /// Unit generatrix direction from proximal to distal.
    pub fn generatrix_dir(&self, psi: f64) -> Vec3 {
        self.axis * self.cos_a - self.radial(psi) * self.sin_a
    }

    /// Cross-section radius of the cone at generatrix parameter `d`.
    pub fn section_radius(&self, d: f64) -> f64 {
        ((1.0 - d) * self.r_prox + d * self.r_dist) * self.cos_a
    }

    /// Azimuth of `p` about the axis; `None` on the axis.
    pub fn azimuth(&self, p: &Vec3) -> Option<f64> {
        let v = p - self.c_prox;
        let x = v.dot(&self.e0);
        let y = v.dot(&self.e90);
        if x.hypot(y) <= 1e-14 * (1.0 + v.norm()) {
            return None;
        }
        Some(y.atan2(x))
    }

    /// Generatrix parameter of the orthogonal projection of `p` on the
    /// generatrix at azimuth `psi`.
    pub fn param_on_generatrix(&self, psi: f64, p: &Vec3) -> f64 {
        let p0 = self.point(psi, 0.0);
        let p1 = self.point(psi, 1.0);
        let g = p1 - p0;
        (p - p0).dot(&g) / g.norm_squared()
    }

    /// Cone orientation seen from the sphere at `end`: the unit axis pointing
    /// away from that sphere and the matching `sin α`.
    pub fn from_end(&self, end: End) -> (Vec3, f64) {
        match end {
            End::Prox => (self.axis, self.sin_a),
            End::Dist => (-self.axis, -self.sin_a),
        }
    }

    /// Normalized tangency-plane coordinate of `x` relative to the sphere at
    /// `end`: zero on the tangency circle plane, positive towards the bone.
    /// Equal values for two bones sharing a sphere define their separator
    /// plane.
    #[inline]
    pub fn cell_coordinate(&self, end: End, x: &Vec3) -> f64 {
        let (a, s) = self.from_end(end);
        ((x - self.center(end)).dot(&a) - self.radius(end) * s) / self.cos_a
    }

    /// Signed distance from `p` to the bone surface (negative inside).
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.closest_surface_point(p).1
    }

    /// Closest point on the bone surface, signed distance, and the zone the
    /// point lies in.
    pub fn closest_surface_point(&self, p: &Vec3) -> (Vec3, f64, SurfaceZone) {
        let v = p - self.c_prox;
        let a = v.dot(&self.axis);
        let radial = v - self.axis * a;
        let rho = radial.norm();
        let e = if rho > 1e-14 * (1.0 + v.norm()) {
            radial / rho
        } else {
            self.e0
        };
        let n = self.axis * self.sin_a + e * self.cos_a;
        let t1 = self.c_prox + n * self.r_prox;
        let g = self.axis * self.cos_a - e * self.sin_a;
        let s = (p - t1).dot(&g);
        let gl = self.generatrix_length();
        if s < 0.0 {
            let d = p - self.c_prox;
            let dn = d.norm();
            let dir = if dn > 0.0 { d / dn } else { -self.axis };
            (self.c_prox + dir * self.r_prox, dn - self.r_prox, SurfaceZone::ProxCap)
        } else if s > gl {
            let d = p - self.c_dist;
            let dn = d.norm();
            let dir = if dn > 0.0 { d / dn } else { self.axis };
            (self.c_dist + dir * self.r_dist, dn - self.r_dist, SurfaceZone::DistCap)
        } else {
            (t1 + g * s, (p - t1).dot(&n), SurfaceZone::Cone)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceZone {
    ProxCap,
    Cone,
    DistCap,
}

/// Interpolated radius `(1 − ρ) r₁ + ρ r₂` along a bone.
pub fn radius_at(bone: &Bone, rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::OutOfRange {
            value: rho,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok((1.0 - rho) * bone.r_prox + rho * bone.r_dist)
}

/// On-disk skeleton description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFile {
    #[serde(default = "one")]
    pub version: u32,
    pub spheres: Vec<SphereNode>,
    pub bones: Vec<BoneRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<Vec<Vec<BoneId>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registration: Option<Vec<BoneId>>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoneRecord {
    pub id: BoneId,
    pub start: SphereId,
    pub end: SphereId,
}

/// Which bone each input point belongs to, as indices into
/// [`Skeleton::bones`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registration {
    pub bones: Vec<usize>,
}

/// An immutable sphere-mesh skeleton (a tree), possibly posed.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub spheres: Vec<SphereNode>,
    pub bones: Vec<Bone>,
    /// Bone indices of each chain, root to leaf.
    pub chains: Vec<Vec<usize>>,
    pub bone_chain: Vec<usize>,
    /// Bones incident to each sphere, sorted by bone id.
    pub sphere_bones: Vec<Vec<usize>>,
    pub root: usize,
    /// Spheres in breadth-first order from the root.
    pub sphere_order: Vec<usize>,
    pub parent_bone: Vec<Option<usize>>,
    pub tol: Tolerances,
    sphere_index: HashMap<SphereId, usize>,
    bone_index: HashMap<BoneId, usize>,
}

impl Skeleton {
    /// Builds a skeleton from a file description. Chains are derived when
    /// the file does not list them.
    pub fn from_file(file: &SkeletonFile) -> Result<Skeleton> {
        let spheres = file.spheres.clone();
        let mut sphere_index = HashMap::new();
        for (i, s) in spheres.iter().enumerate() {
            if !(s.radius > 0.0) || !s.center.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidSkeleton(format!("sphere {} is invalid", s.id)));
            }
            if sphere_index.insert(s.id, i).is_some() {
                return Err(Error::InvalidSkeleton(format!("duplicate sphere id {}", s.id)));
            }
        }
        let mut bone_index = HashMap::new();
        let mut ends = Vec::with_capacity(file.bones.len());
        for (i, b) in file.bones.iter().enumerate() {
            if bone_index.insert(b.id, i).is_some() {
                return Err(Error::InvalidSkeleton(format!("duplicate bone id {}", b.id)));
            }
            let s = *sphere_index
                .get(&b.start)
                .ok_or_else(|| Error::InvalidSkeleton(format!("bone {} start {} unknown", b.id, b.start)))?;
            let e = *sphere_index
                .get(&b.end)
                .ok_or_else(|| Error::InvalidSkeleton(format!("bone {} end {} unknown", b.id, b.end)))?;
            if s == e {
                return Err(Error::InvalidSkeleton(format!("bone {} starts and ends at the same sphere", b.id)));
            }
            ends.push((s, e));
        }
        if file.bones.is_empty() {
            return Err(Error::InvalidSkeleton("no bones".into()));
        }
        if file.bones.len() + 1 != spheres.len() {
            return Err(Error::InvalidSkeleton("skeleton is not a tree".into()));
        }

        let mut sphere_bones = vec![Vec::new(); spheres.len()];
        for (i, &(s, e)) in ends.iter().enumerate() {
            sphere_bones[s].push(i);
            sphere_bones[e].push(i);
        }
        for list in &mut sphere_bones {
            list.sort_by_key(|&b| file.bones[b].id);
        }

        let chains: Vec<Vec<usize>> = match &file.chains {
            Some(chains) => chains
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|id| {
                            bone_index
                                .get(id)
                                .copied()
                                .ok_or_else(|| Error::InvalidSkeleton(format!("chain bone {id} unknown")))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?,
            None => derive_chains(&ends, &sphere_bones),
        };
        let mut bone_chain = vec![usize::MAX; ends.len()];
        for (ci, chain) in chains.iter().enumerate() {
            if chain.is_empty() {
                return Err(Error::InvalidSkeleton(format!("chain {ci} is empty")));
            }
            for w in chain.windows(2) {
                let (a0, a1) = ends[w[0]];
                let (b0, b1) = ends[w[1]];
                if !(a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1) {
                    return Err(Error::InvalidSkeleton(format!("chain {ci} is not connected")));
                }
            }
            for &b in chain {
                if bone_chain[b] != usize::MAX {
                    return Err(Error::InvalidSkeleton(format!("bone {} in several chains", file.bones[b].id)));
                }
                bone_chain[b] = ci;
            }
        }
        if let Some(b) = bone_chain.iter().position(|&c| c == usize::MAX) {
            return Err(Error::InvalidSkeleton(format!("bone {} is in no chain", file.bones[b].id)));
        }

        // Root: the sphere of the first chain's root bone not shared with the
        // next bone of that chain.
        let first = &chains[0];
        let (s0, e0) = ends[first[0]];
        let root = if first.len() > 1 {
            let (n0, n1) = ends[first[1]];
            if s0 == n0 || s0 == n1 {
                e0
            } else {
                s0
            }
        } else {
            s0
        };

        let mut parent_bone = vec![None; spheres.len()];
        let mut visited = vec![false; spheres.len()];
        let mut order = Vec::with_capacity(spheres.len());
        let mut orient = vec![(0usize, 0usize); ends.len()];
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(s) = queue.pop_front() {
            order.push(s);
            for &b in &sphere_bones[s] {
                let (a, c) = ends[b];
                let other = if a == s { c } else { a };
                if Some(b) == parent_bone[s] {
                    continue;
                }
                if visited[other] {
                    return Err(Error::InvalidSkeleton("skeleton contains a cycle".into()));
                }
                visited[other] = true;
                parent_bone[other] = Some(b);
                orient[b] = (s, other);
                queue.push_back(other);
            }
        }
        if order.len() != spheres.len() {
            return Err(Error::InvalidSkeleton("skeleton is not connected".into()));
        }

        let tol = Tolerances::new(scene_diagonal(&spheres));
        let bones = file
            .bones
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let (p, d) = orient[i];
                let axis = spheres[d].center - spheres[p].center;
                let e_ref = if axis.norm() > 0.0 {
                    orthogonal_unit(&axis)
                } else {
                    Vec3::x()
                };
                Bone::build(
                    b.id,
                    (b.start, b.end),
                    (p, d),
                    &spheres,
                    e_ref,
                    (UnitQuaternion::identity(), 0.0),
                    &tol,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Skeleton {
            spheres,
            bones,
            chains,
            bone_chain,
            sphere_bones,
            root,
            sphere_order: order,
            parent_bone,
            tol,
            sphere_index,
            bone_index,
        })
    }

    pub fn to_file(&self) -> SkeletonFile {
        SkeletonFile {
            version: 1,
            spheres: self.spheres.clone(),
            bones: self
                .bones
                .iter()
                .map(|b| BoneRecord {
                    id: b.id,
                    start: b.start,
                    end: b.end,
                })
                .collect(),
            chains: Some(
                self.chains
                    .iter()
                    .map(|c| c.iter().map(|&b| self.bones[b].id).collect())
                    .collect(),
            ),
            registration: None,
        }
    }

    pub fn sphere_idx(&self, id: SphereId) -> Option<usize> {
        self.sphere_index.get(&id).copied()
    }

    pub fn bone_idx(&self, id: BoneId) -> Option<usize> {
        self.bone_index.get(&id).copied()
    }

    /// Spheres shared by at least three bones.
    pub fn junctions(&self) -> Vec<usize> {
        (0..self.spheres.len())
            .filter(|&s| self.sphere_bones[s].len() >= 3)
            .collect()
    }

    pub fn is_junction(&self, sphere: usize) -> bool {
        self.sphere_bones[sphere].len() >= 3
    }

    /// End of `bone` located at `sphere`.
    pub fn end_at(&self, bone: usize, sphere: usize) -> End {
        if self.bones[bone].prox == sphere {
            End::Prox
        } else {
            End::Dist
        }
    }

    /// Child bones of `sphere` (those whose proximal sphere it is).
    pub fn child_bones(&self, sphere: usize) -> impl Iterator<Item = usize> + '_ {
        self.sphere_bones[sphere]
            .iter()
            .copied()
            .filter(move |&b| self.bones[b].prox == sphere)
    }

    /// Bones in the subtree hanging below `bone`, `bone` included.
    pub fn subtree_bones(&self, bone: usize) -> Vec<usize> {
        let mut out = vec![bone];
        let mut i = 0;
        while i < out.len() {
            let d = self.bones[out[i]].dist;
            out.extend(self.child_bones(d));
            i += 1;
        }
        out
    }

    /// Closest bone to `p`, by signed distance to the bone surfaces.
    pub fn closest_bone(&self, p: &Vec3) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, b) in self.bones.iter().enumerate() {
            let d = b.signed_distance(p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Registers every point to its closest bone.
    pub fn register(&self, points: &[Vec3]) -> Registration {
        Registration {
            bones: points.iter().map(|p| self.closest_bone(p)).collect(),
        }
    }

    /// Converts file bone ids to a registration.
    pub fn registration_from_ids(&self, ids: &[BoneId]) -> Result<Registration> {
        ids.iter()
            .map(|id| {
                self.bone_idx(*id)
                    .ok_or_else(|| Error::InvalidSkeleton(format!("registration bone {id} unknown")))
            })
            .collect::<Result<Vec<_>>>()
            .map(|bones| Registration { bones })
    }

    /// Stable 64-bit fingerprint of the rest geometry (FNV-1a over ids,
    /// centers and radii).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for s in &self.spheres {
            eat(&s.id.to_le_bytes());
            for c in s.center.iter() {
                eat(&c.to_le_bytes());
            }
            eat(&s.radius.to_le_bytes());
        }
        for b in &self.bones {
            eat(&b.id.to_le_bytes());
            eat(&b.start.to_le_bytes());
            eat(&b.end.to_le_bytes());
        }
        h
    }
}

fn scene_diagonal(spheres: &[SphereNode]) -> f64 {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for s in spheres {
        lo = lo.inf(&(s.center - Vec3::repeat(s.radius)));
        hi = hi.sup(&(s.center + Vec3::repeat(s.radius)));
    }
    (hi - lo).norm()
}

/// Maximal bone paths whose inner spheres have exactly two bones.
fn derive_chains(ends: &[(usize, usize)], sphere_bones: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut used = vec![false; ends.len()];
    let mut chains = Vec::new();
    let starts: Vec<usize> = (0..sphere_bones.len())
        .filter(|&s| sphere_bones[s].len() != 2)
        .collect();
    for s in starts {
        for &b0 in &sphere_bones[s] {
            if used[b0] {
                continue;
            }
            let mut chain = vec![b0];
            used[b0] = true;
            let mut at = if ends[b0].0 == s { ends[b0].1 } else { ends[b0].0 };
            while sphere_bones[at].len() == 2 {
                let next = sphere_bones[at].iter().copied().find(|&b| !used[b]);
                let Some(nb) = next else { break };
                used[nb] = true;
                chain.push(nb);
                at = if ends[nb].0 == at { ends[nb].1 } else { ends[nb].0 };
            }
            chains.push(chain);
        }
    }
    chains
}
