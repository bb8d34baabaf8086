//! 3D primitives shared by the skeleton, baseline and deformation code.
//!
//! Everything here is a pure function of its inputs. Tolerances that scale
//! with the model live in [`Tolerances`].

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Direction cross-product threshold below which two lines are parallel.
pub const EPS_PARALLEL: f64 = 1e-9;

/// Model-relative tolerances, all derived from the scene diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub diagonal: f64,
}

impl Tolerances {
    pub fn new(diagonal: f64) -> Self {
        Tolerances {
            diagonal: diagonal.max(f64::MIN_POSITIVE),
        }
    }

    pub fn coplanar(&self) -> f64 {
        1e-7 * self.diagonal
    }

    pub fn tangent(&self) -> f64 {
        1e-7 * self.diagonal
    }

    pub fn surface(&self) -> f64 {
        1e-7 * self.diagonal
    }

    /// Radius difference under which a bone is treated as a cylinder.
    pub fn cylinder(&self) -> f64 {
        1e-9 * self.diagonal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    /// Builds a plane, normalizing `normal`. Returns `None` for a zero normal.
    pub fn new(point: Vec3, normal: Vec3) -> Option<Plane> {
        let n = normal.norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        Some(Plane {
            point,
            normal: normal / n,
        })
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.normal * self.signed_distance(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec3,
    pub radius: f64,
    pub normal: Vec3,
}

impl Circle {
    /// Orthonormal in-plane frame `(x, y)` with `x × y = normal`.
    pub fn frame(&self) -> (Vec3, Vec3) {
        let x = orthogonal_unit(&self.normal);
        (x, self.normal.cross(&x))
    }

    pub fn point_in_frame(&self, x: &Vec3, y: &Vec3, angle: f64) -> Vec3 {
        self.center + (x * angle.cos() + y * angle.sin()) * self.radius
    }
}

/// A circular arc. Points are `center + radius (cos a x_axis + sin a (normal × x_axis))`
/// for `a` in `[start_angle, end_angle]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc3 {
    pub center: Vec3,
    pub radius: f64,
    pub normal: Vec3,
    pub x_axis: Vec3,
    pub start_angle: f64,
    pub end_angle: f64,
}

impl Arc3 {
    /// Arc starting at `from`, sweeping `sweep >= 0` radians about `normal`.
    pub fn from_start(center: Vec3, from: Vec3, normal: Vec3, sweep: f64) -> Arc3 {
        let d = from - center;
        let radius = d.norm();
        let x_axis = if radius > 0.0 {
            d / radius
        } else {
            orthogonal_unit(&normal)
        };
        Arc3 {
            center,
            radius,
            normal,
            x_axis,
            start_angle: 0.0,
            end_angle: sweep.max(0.0),
        }
    }

    pub fn point_at(&self, angle: f64) -> Vec3 {
        let y = self.normal.cross(&self.x_axis);
        self.center + (self.x_axis * angle.cos() + y * angle.sin()) * self.radius
    }

    /// Unit tangent in the direction of increasing angle.
    pub fn tangent_at(&self, angle: f64) -> Vec3 {
        let y = self.normal.cross(&self.x_axis);
        -self.x_axis * angle.sin() + y * angle.cos()
    }

    pub fn start(&self) -> Vec3 {
        self.point_at(self.start_angle)
    }

    pub fn end(&self) -> Vec3 {
        self.point_at(self.end_angle)
    }

    pub fn sweep(&self) -> f64 {
        self.end_angle - self.start_angle
    }

    pub fn length(&self) -> f64 {
        self.radius * self.sweep()
    }

    /// Angle of the projection of `p` on the arc plane, relative to `x_axis`.
    pub fn angle_of(&self, p: &Vec3) -> f64 {
        let d = p - self.center;
        let y = self.normal.cross(&self.x_axis);
        d.dot(&y).atan2(d.dot(&self.x_axis))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRotation {
    pub axis_point: Vec3,
    pub axis_dir: Vec3,
    pub angle: f64,
}

impl AxisRotation {
    pub fn new(axis_point: Vec3, axis_dir: Vec3, angle: f64) -> AxisRotation {
        AxisRotation {
            axis_point,
            axis_dir: axis_dir.normalize(),
            angle,
        }
    }

    pub fn rotate_vector(&self, v: &Vec3) -> Vec3 {
        rotate_vector(v, &self.axis_dir, self.angle)
    }

    pub fn inverse(&self) -> AxisRotation {
        AxisRotation {
            angle: -self.angle,
            ..*self
        }
    }
}

/// Rodrigues rotation of a free vector about a unit axis.
pub fn rotate_vector(v: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Rigid rotation of `p` about the axis line of `r`.
pub fn rotate_about_axis(p: &Vec3, r: &AxisRotation) -> Vec3 {
    r.axis_point + r.rotate_vector(&(p - r.axis_point))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlaneSphere {
    Disjoint,
    /// Plane touches the sphere within the tangency tolerance.
    Tangent(Vec3),
    Circle(Circle),
}

pub fn plane_sphere_intersection(pl: &Plane, center: &Vec3, radius: f64, eps_tan: f64) -> PlaneSphere {
    let dist = pl.signed_distance(center);
    let foot = center - pl.normal * dist;
    if (dist.abs() - radius).abs() <= eps_tan {
        return PlaneSphere::Tangent(foot);
    }
    if dist.abs() > radius {
        return PlaneSphere::Disjoint;
    }
    PlaneSphere::Circle(Circle {
        center: foot,
        radius: (radius * radius - dist * dist).max(0.0).sqrt(),
        normal: pl.normal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub point: Vec3,
    pub dir: Vec3,
}

impl Line {
    pub fn new(point: Vec3, dir: Vec3) -> Line {
        Line { point, dir }
    }
}

/// Intersection of two lines lying in `plane`. Fails with
/// [`Error::ParallelLines`] when their unit directions are parallel.
pub fn line_line_intersection_in_plane(l1: &Line, l2: &Line, plane: &Plane) -> Result<Vec3> {
    let d1 = l1.dir.normalize();
    let d2 = l2.dir.normalize();
    let cross = d1.cross(&d2);
    if cross.norm() < EPS_PARALLEL {
        return Err(Error::ParallelLines);
    }
    // Solve l1.point + a d1 = l2.point + b d2 in the plane.
    let n = plane.normal;
    let w = l2.point - l1.point;
    let a = w.cross(&d2).dot(&n) / cross.dot(&n);
    Ok(l1.point + d1 * a)
}

/// Unit vector orthogonal to `v`, built from the canonical axis most
/// orthogonal to it.
pub fn orthogonal_unit(v: &Vec3) -> Vec3 {
    let n = v.normalize();
    let a = n.x.abs();
    let b = n.y.abs();
    let c = n.z.abs();
    let axis = if a <= b && a <= c {
        Vec3::x()
    } else if b <= c {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (axis - n * n.dot(&axis)).normalize()
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Signed angle from `a` to `b` about `axis` (both projected off the axis).
pub fn signed_angle(a: &Vec3, b: &Vec3, axis: &Vec3) -> f64 {
    a.cross(b).dot(axis).atan2(a.dot(b) - a.dot(axis) * b.dot(axis))
}

/// A projective point: a finite point `xyz / w`, or a direction when `w = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    pub xyz: Vec3,
    pub w: f64,
}

impl HPoint {
    /// Direction from `q` towards the point, scaled by `w`.
    pub fn direction_from(&self, q: &Vec3) -> Vec3 {
        self.xyz - q * self.w
    }

    pub fn finite(&self) -> Option<Vec3> {
        (self.w != 0.0).then(|| self.xyz / self.w)
    }
}

/// Normal of the plane through `q` and the two projective points, or `None`
/// when they are collinear within `eps` (relative).
pub fn plane_through(q: &Vec3, a: &HPoint, b: &HPoint, eps: f64) -> Option<Vec3> {
    let da = a.direction_from(q);
    let db = b.direction_from(q);
    let n = da.cross(&db);
    let scale = da.norm() * db.norm();
    if scale == 0.0 || n.norm() <= eps * scale {
        return None;
    }
    Some(n.normalize())
}

/// Solves `a cos x + b sin x + c = 0`, returning up to two roots in `(-π, π]`.
pub fn solve_trig(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let r = a.hypot(b);
    if r == 0.0 {
        return None;
    }
    let k = -c / r;
    if k.abs() > 1.0 + 1e-12 {
        return None;
    }
    let phi = b.atan2(a);
    let delta = k.clamp(-1.0, 1.0).acos();
    Some((wrap_angle(phi + delta), wrap_angle(phi - delta)))
}
