//! Cells of a junction sphere shared by three or more bones. Each point of
//! the sphere belongs to the bone maximizing its normalized tangency-plane
//! coordinate; the boundary between two cells lies on their pivot circle.

use std::f64::consts::TAU;

use super::Separator;
use crate::error::{Error, Result};
use crate::geom::{plane_sphere_intersection, Circle, PlaneSphere, Vec3};
use crate::sphere_mesh::Skeleton;

/// How far `x` is inside the cell of the pair `(k, m)`: the smallest gap
/// between the pair's coordinates and those of every other bone at the
/// sphere. Infinite when no other bone shares the sphere.
pub fn cell_margin(sk: &Skeleton, sphere: usize, k: usize, m: usize, x: &Vec3) -> f64 {
    let w = |b: usize| sk.bones[b].cell_coordinate(sk.end_at(b, sphere), x);
    let own = w(k).min(w(m));
    sk.sphere_bones[sphere]
        .iter()
        .filter(|&&o| o != k && o != m)
        .map(|&o| own - w(o))
        .fold(f64::INFINITY, f64::min)
}

fn ordered(k: usize, m: usize) -> (usize, usize) {
    if k <= m {
        (k, m)
    } else {
        (m, k)
    }
}

/// Pivot circle of a bone pair: their separator plane cut with the joint
/// sphere, oriented by the pair in bone order.
pub fn pivot_circle(sk: &Skeleton, sphere: usize, k: usize, m: usize) -> Option<Circle> {
    let (a, b) = ordered(k, m);
    let sep = Separator::new(sk, sphere, a, b);
    let s = &sk.spheres[sphere];
    match plane_sphere_intersection(&sep.plane()?, &s.center, s.radius, 0.0) {
        PlaneSphere::Circle(c) => Some(c),
        _ => None,
    }
}

/// Angular interval `[lo, hi]` of the pivot circle inside the pair's cell,
/// in the circle frame. The whole circle when no other bone competes.
fn pivot_interval(sk: &Skeleton, sphere: usize, k: usize, m: usize, circle: &Circle) -> Option<(f64, f64)> {
    let (a, _) = ordered(k, m);
    let (x, y) = circle.frame();
    let mut iv: Option<(f64, f64)> = None;
    for &o in &sk.sphere_bones[sphere] {
        if o == k || o == m {
            continue;
        }
        let sep = Separator::new(sk, sphere, a, o);
        let ca = circle.radius * sep.q.dot(&x);
        let cb = circle.radius * sep.q.dot(&y);
        let cd = sep.value(&circle.center);
        let r = ca.hypot(cb);
        if cd >= r {
            continue;
        }
        if cd < -r {
            return None;
        }
        let mid = cb.atan2(ca);
        let half = (-cd / r).clamp(-1.0, 1.0).acos();
        let (lo, len) = (mid - half, 2.0 * half);
        iv = Some(match iv {
            None => (lo, lo + len),
            Some((plo, phi)) => {
                // express the new interval relative to the current start
                let start = (lo - plo).rem_euclid(TAU);
                let (s, e) = if start + len > TAU {
                    (0.0, start + len - TAU)
                } else {
                    (start, start + len)
                };
                let cur = phi - plo;
                let ns = s.max(0.0);
                let ne = e.min(cur);
                if ne <= ns {
                    return None;
                }
                (plo + ns, plo + ne)
            }
        });
    }
    Some(iv.unwrap_or((0.0, TAU)))
}

/// Normalized coordinate of `point` along the pivot arc of the pair
/// `(k, m)`: 0 at the arc start, 1 at its end.
pub fn junction_pivot_coordinate(sk: &Skeleton, sphere: usize, k: usize, m: usize, point: &Vec3) -> Result<f64> {
    let wrong = || Error::WrongCell(sk.bones[k].id, sk.bones[m].id);
    let circle = pivot_circle(sk, sphere, k, m).ok_or_else(wrong)?;
    let (lo, hi) = pivot_interval(sk, sphere, k, m, &circle).ok_or_else(wrong)?;
    let (x, y) = circle.frame();
    let v = point - circle.center;
    let phi = v.dot(&y).atan2(v.dot(&x));
    let rel = (phi - lo).rem_euclid(TAU);
    let len = hi - lo;
    let eps = 1e-9;
    if rel <= len + eps {
        Ok((rel / len).clamp(0.0, 1.0))
    } else if TAU - rel <= eps {
        Ok(0.0)
    } else {
        Err(wrong())
    }
}

/// Point at normalized coordinate `c` on the pivot arc of `(k, m)`.
pub fn pivot_point_at(sk: &Skeleton, sphere: usize, k: usize, m: usize, c: f64) -> Option<Vec3> {
    let circle = pivot_circle(sk, sphere, k, m)?;
    let (lo, hi) = pivot_interval(sk, sphere, k, m, &circle)?;
    let (x, y) = circle.frame();
    Some(circle.point_in_frame(&x, &y, lo + c * (hi - lo)))
}
