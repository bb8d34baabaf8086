use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::*;
use crate::fixtures::{bent_pair, junction_star, straight_chain};

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Azimuth on bone `k` whose radial direction is closest to `dir`.
fn psi_towards(sk: &Skeleton, k: usize, dir: Vec3) -> f64 {
    let b = &sk.bones[k];
    dir.dot(&b.e90).atan2(dir.dot(&b.e0))
}

#[test]
fn straight_equal_radii_is_flat() {
    let sk = straight_chain(2, 4.0, &[1.0, 1.0, 1.0]);
    let p = build_portion(&sk, 0, 0.0).unwrap();
    let joint = p.center.ends[1];
    assert_eq!(joint.kind, EndKind::Flat);
    assert!(p.elements.iter().all(|e| !matches!(e, BaselineElement::ArcElem { sphere: 1, .. })));
    let segs: Vec<_> = p
        .elements
        .iter()
        .filter_map(|e| match e {
            BaselineElement::Segment { p0, p1, .. } => Some((*p0, *p1)),
            _ => None,
        })
        .collect();
    assert_eq!(segs.len(), 2);
    let d0 = (segs[0].1 - segs[0].0).normalize();
    let d1 = (segs[1].1 - segs[1].0).normalize();
    assert!(d0.cross(&d1).norm() < 1e-12);
    let sep = Separator::new(&sk, 1, 0, 1);
    assert!(sep.signed_distance(&joint.anchor).abs() < sk.tol.surface());
}

#[test]
fn convex_side_gets_c1_arc() {
    let sk = bent_pair(4.0, [1.0, 1.0, 1.0], FRAC_PI_2);
    // outer side of the bend: away from the inner corner at +x+y... i.e. -y side of bone 0
    let psi = psi_towards(&sk, 0, -Vec3::y());
    let p = build_portion(&sk, 0, psi).unwrap();
    assert_eq!(p.center.ends[1].kind, EndKind::Convex);
    for w in p.elements.windows(2) {
        assert!((w[0].end() - w[1].start()).norm() < sk.tol.surface());
        assert!(angle_between(&w[0].end_tangent(), &w[1].start_tangent()) < 1e-6);
    }
    let anchor = p.center.ends[1].anchor;
    assert!(Separator::new(&sk, 1, 0, 1).signed_distance(&anchor).abs() < sk.tol.surface());
    assert!(((anchor - sk.spheres[1].center).norm() - 1.0).abs() < sk.tol.surface());
}

#[test]
fn concave_side_crosses_on_separator() {
    let sk = bent_pair(4.0, [1.0, 1.0, 1.0], FRAC_PI_2);
    let psi = psi_towards(&sk, 0, Vec3::y());
    let p = build_portion(&sk, 0, psi).unwrap();
    let e = p.center.ends[1];
    assert_eq!(e.kind, EndKind::Concave);
    assert!(Separator::new(&sk, 1, 0, 1).signed_distance(&e.anchor).abs() < sk.tol.surface());
    // generatrix lines meet at the anchor: the inner corner of the elbow
    assert!((e.anchor - Vec3::new(-1.0, 1.0, 0.0)).norm() < 1e-9, "{:?}", e.anchor);
    assert!(e.d < 1.0);
}

#[test]
fn free_extremity_closes_on_axis_tip() {
    let sk = straight_chain(1, 5.0, &[1.0, 0.6]);
    for psi in [0.0, 1.0, 4.0] {
        let s = Section::build(&sk, 0, psi, Profile::Cubic).unwrap();
        let b = &sk.bones[0];
        let tip_d = s.ends[1].arc.unwrap().end();
        assert!((tip_d - (b.c_dist + b.axis * b.r_dist)).norm() < 1e-12);
        let tip_p = s.ends[0].arc.unwrap().end();
        assert!((tip_p - (b.c_prox - b.axis * b.r_prox)).norm() < 1e-12);
        // C¹ between cap arc and segment
        let t_arc = s.ends[1].arc.unwrap().tangent_at(0.0);
        assert!(angle_between(&t_arc, &s.curve_tangent(1.0)) < 1e-9);
    }
}

#[test]
fn segments_and_apexes_are_coplanar() {
    let sk = bent_pair(4.0, [1.2, 0.9, 0.5], 1.0);
    for i in 0..16 {
        let psi = TAU * i as f64 / 16.0;
        let p = build_portion(&sk, 0, psi).unwrap();
        let e = p.center.ends[1];
        let n = support_normal(&sk, 0, 1, &e.v);
        let on = |x: &Vec3| (x - e.v).dot(&n).abs();
        for a in [sk.bones[0].apex.finite().unwrap(), sk.bones[1].apex.finite().unwrap()] {
            assert!(on(&a) < sk.tol.coplanar() * 10.0);
        }
        for el in &p.elements[1..] {
            if let BaselineElement::Segment { p0, p1, bone } = el {
                if *bone == 1 {
                    assert!(on(p0) < sk.tol.coplanar() && on(p1) < sk.tol.coplanar());
                }
            }
        }
    }
}

#[test]
fn parallel_cylinders_use_axis_plane() {
    let sk = straight_chain(2, 3.0, &[0.5, 0.5, 0.5]);
    let pt = Vec3::new(3.0, 0.3, 0.4);
    let p = select_branch(&sk, 0, &pt).unwrap();
    let n = support_normal(&sk, 0, 1, &pt);
    assert!(n.dot(&Vec3::x()).abs() < 1e-12);
    assert!(matches!(p.center.ends[1].kind, EndKind::Flat));
}

#[test]
fn select_branch_contains_cap_point() {
    let sk = bent_pair(4.0, [1.0, 1.0, 1.0], FRAC_PI_2);
    // points on the outer cap of the elbow
    for a in [0.1f64, 0.5, 1.0, 1.4] {
        let dir = Vec3::new(a.sin(), -a.cos(), 0.3).normalize();
        let pt = sk.spheres[1].center + dir * 1.0;
        let p = select_branch(&sk, 0, &pt).unwrap();
        let dist = p
            .elements
            .iter()
            .filter_map(|e| match e {
                BaselineElement::ArcElem { arc, .. } => {
                    let ang = arc.angle_of(&pt).rem_euclid(TAU);
                    (ang <= arc.sweep() + 1e-9).then(|| (arc.point_at(ang) - pt).norm())
                }
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);
        assert!(dist < sk.tol.surface(), "a={a} dist={dist}");
    }
}

#[test]
fn bundle_does_not_cross() {
    let sk = bent_pair(4.0, [1.0, 0.9, 0.8], PI / 3.0);
    let polys: Vec<Vec<Vec3>> = (0..64)
        .map(|i| {
            let psi = TAU * i as f64 / 64.0;
            Section::build(&sk, 0, psi, Profile::Cubic)
                .unwrap()
                .polyline(64)
                .into_iter()
                .map(|(p, _)| p)
                .collect()
        })
        .collect();
    let min_gap = crate::baseline::tests::min_polyline_gap(&polys);
    assert!(min_gap > 1e-6, "{min_gap}");
}

/// Smallest distance between samples of different polylines, ignoring the
/// free-cap tips where every baseline meets.
pub(crate) fn min_polyline_gap(polys: &[Vec<Vec3>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            let a = &polys[i];
            let b = &polys[j];
            for (ia, pa) in a.iter().enumerate().skip(4).take(a.len().saturating_sub(8)) {
                let _ = ia;
                for pb in b.iter().skip(4).take(b.len().saturating_sub(8)) {
                    best = best.min((pa - pb).norm());
                }
            }
        }
    }
    best
}

#[test]
fn pivot_coordinate_endpoints() {
    let sk = junction_star(4.0, 1.0, 0.7);
    let (k, m) = (0, 1);
    let start = pivot_point_at(&sk, 0, k, m, 0.0).unwrap();
    let end = pivot_point_at(&sk, 0, k, m, 1.0).unwrap();
    let mid = pivot_point_at(&sk, 0, k, m, 0.5).unwrap();
    assert!(junction_pivot_coordinate(&sk, 0, k, m, &start).unwrap().abs() < 1e-9);
    assert!((junction_pivot_coordinate(&sk, 0, k, m, &end).unwrap() - 1.0).abs() < 1e-9);
    assert!((junction_pivot_coordinate(&sk, 0, k, m, &mid).unwrap() - 0.5).abs() < 1e-9);
    // a point of the pivot circle deep inside the third bone's cell
    let circle = pivot_circle(&sk, 0, k, m).unwrap();
    let third = sk.bones[2].axis;
    let p = circle.center + (third - circle.normal * third.dot(&circle.normal)).normalize() * circle.radius;
    assert!(matches!(
        junction_pivot_coordinate(&sk, 0, k, m, &p),
        Err(Error::WrongCell(..))
    ));
}

#[test]
fn junction_partner_is_in_cell() {
    let sk = junction_star(4.0, 1.0, 0.7);
    for i in 0..32 {
        let psi = TAU * i as f64 / 32.0;
        let e = end_config(&sk, 0, End::Prox, psi).unwrap();
        let p = e.partner.unwrap();
        assert!(cell_margin(&sk, 0, 0, p.bone, &e.anchor) > -1e-9);
    }
}
