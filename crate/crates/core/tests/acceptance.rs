//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines come out in order; exits non-zero on any FAIL.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
use std::time::Instant;

use bskin_core::baseline::{end_config, export_baselines, EndKind, Locus, Profile, Section};
use bskin_core::deformer::{deform_portion, deformed_section, export_deformed_baselines, resolve_bend_targets, twist_profile};
use bskin_core::encoder::{encode_cloud, EncodedSet};
use bskin_core::fixtures::{chain, figure, straight_chain, stripe_cloud, stripe_model, surface_cloud};
use bskin_core::io::{load_cloud, save_cloud, Format, PointCloud};
use bskin_core::pipeline::{skin, skin_posed, smooth_heights, SkinOptions};
use bskin_core::reference::{bone_transforms, dqs, gaussian_weights, lbs};
use bskin_core::sphere_mesh::{bone_motion, End, Pose, Skeleton};
use bskin_core::Vec3;
use nalgebra::Point3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn encode(sk: &Skeleton, pts: &[Vec3]) -> EncodedSet {
    encode_cloud(sk, None, pts, Profile::Cubic).expect("encoding")
}

fn max_rel(a: &[Vec3], b: &[Vec3], diag: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm() / diag).fold(0.0, f64::max)
}

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

fn surface_distance(sk: &Skeleton, p: &Vec3) -> f64 {
    sk.bones.iter().map(|b| b.signed_distance(p)).fold(f64::INFINITY, f64::min)
}

fn round_trip_identity() -> Outcome {
    let sk = stripe_model();
    let pts: Vec<Vec3> = stripe_cloud(&sk, 100_000, 1).into_iter().map(|s| s.point).collect();
    let t0 = Instant::now();
    let set = encode(&sk, &pts);
    let t_enc = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (out, _) = skin(&sk, &set, &Pose::identity(), &SkinOptions::default()).unwrap();
    let t_skin = t1.elapsed().as_secs_f64();
    let e_stripes = max_rel(&out, &pts, sk.tol.diagonal);

    // a statue-like cloud over the figure skeleton, through a PLY file
    let fig = figure();
    let statue: Vec<Vec3> = surface_cloud(&fig, 50_000, 7, |k, psi, d| 0.04 + 0.02 * (5.0 * psi + 3.0 * k as f64).sin() * (PI * d).sin())
        .into_iter()
        .map(|s| s.point)
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("statue.ply");
    save_cloud(&PointCloud::new(statue), &path, Format::PlyBinary).unwrap();
    let loaded = load_cloud(&path).unwrap().positions;
    let t2 = Instant::now();
    let set = encode(&fig, &loaded);
    let (out, _) = skin(&fig, &set, &Pose::identity(), &SkinOptions::default()).unwrap();
    let t_statue = t2.elapsed().as_secs_f64();
    let e_statue = max_rel(&out, &loaded, fig.tol.diagonal);
    let pass = e_stripes < 1e-9 && e_statue < 1e-9 && t_enc + t_skin < 5.0 && t_statue < 5.0;
    outcome(
        pass,
        format!("stripes 1e5: err {e_stripes:.2e}, encode {t_enc:.2}s + skin {t_skin:.2}s; statue PLY 5e4: err {e_statue:.2e}, {t_statue:.2}s"),
    )
}

fn statelessness() -> Outcome {
    let sk = stripe_model();
    let pts: Vec<Vec3> = stripe_cloud(&sk, 20_000, 2).into_iter().map(|s| s.point).collect();
    let set = encode(&sk, &pts);
    let opts = SkinOptions::default();
    let pose = Pose::bend(1, Vec3::z(), 1.1).with_bend(2, Vec3::new(0.3, 0.0, 1.0), -0.7).with_twist(2, 0.8);
    let (bent, _) = skin(&sk, &set, &pose, &opts).unwrap();
    let moved = max_rel(&bent, &pts, sk.tol.diagonal);
    let (back, _) = skin(&sk, &set, &Pose::identity(), &opts).unwrap();
    let e = max_rel(&back, &pts, sk.tol.diagonal);
    outcome(e < 1e-9 && moved > 1e-2, format!("bent moved {moved:.2e}, back to identity err {e:.2e}"))
}

/// Mid-segment points of every bone; the bend is at the distal joint of
/// bone 1 in a 4-bone chain.
fn rigid_zone() -> Vec<(String, Outcome)> {
    let sk = straight_chain(4, 4.0, &[1.0, 0.95, 0.9, 0.85, 0.8]);
    let cloud = surface_cloud(&sk, 20_000, 3, |_, _, _| 0.05);
    let pts: Vec<Vec3> = cloud.iter().map(|s| s.point).collect();
    let set = encode(&sk, &pts);
    let pose = Pose::bend(2, Vec3::z(), FRAC_PI_3);
    let posed = sk.apply_pose(&pose).unwrap();
    let (out, _) = skin(&sk, &set, &pose, &SkinOptions::default()).unwrap();
    let mut dev = [0.0f64; 4];
    let mut count = [0usize; 4];
    for (i, s) in cloud.iter().enumerate() {
        let b = &sk.bones[s.bone];
        let d = (s.point - b.c_prox).dot(&b.axis) / b.length;
        if (d - 0.5).abs() >= 0.1 {
            continue;
        }
        let expect = (bone_motion(&sk, &posed, s.bone) * Point3::from(s.point)).coords;
        dev[s.bone] = dev[s.bone].max((out[i] - expect).norm() / sk.tol.diagonal);
        count[s.bone] += 1;
    }
    let far = dev[0].max(dev[3]);
    let near = dev[1].max(dev[2]);
    vec![
        (
            "rigid zone, bones not touching the bent joint".into(),
            outcome(far < 1e-6 && count[0] > 100 && count[3] > 100, format!("max rel dev {far:.2e} over {} pts", count[0] + count[3])),
        ),
        (
            "rigid zone, bones meeting at the bent joint".into(),
            outcome(near < 1e-6, format!("max rel dev {near:.2e} over {} pts", count[1] + count[2])),
        ),
    ]
}

fn twist() -> Outcome {
    let tau = 1.7;
    let f = |d: f64| twist_profile(d, tau).unwrap();
    let exact = f(0.0) == 0.0 && f(1.0) == tau && f(0.5) == 0.5 * tau;
    let h = 1e-4;
    // second-order one-sided differences, inside [0, 1]
    let s0 = (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
    let s1 = (3.0 * f(1.0) - 4.0 * f(1.0 - h) + f(1.0 - 2.0 * h)) / (2.0 * h);
    let fwd = (f(h) - f(0.0)) / h;
    outcome(
        exact && s0.abs() < 1e-6 && s1.abs() < 1e-6,
        format!("endpoints exact: {exact}; slope at 0: {s0:.1e}, at 1: {s1:.1e} (plain forward difference {fwd:.1e})"),
    )
}

fn offset_preservation() -> Outcome {
    let sk = straight_chain(2, 4.0, &[1.0, 0.9, 0.8]);
    let h = 0.1 * sk.spheres[1].radius;
    // keep only samples on the offset surface of the union (joint-sphere
    // samples can fall inside the neighbouring bone)
    let pts: Vec<Vec3> = surface_cloud(&sk, 20_000, 4, |_, _, _| h)
        .into_iter()
        .map(|s| s.point)
        .filter(|p| (sk.bones.iter().map(|b| b.signed_distance(p)).fold(f64::INFINITY, f64::min) - h).abs() < 1e-9 * h)
        .collect();
    let set = encode(&sk, &pts);
    let pose = Pose::bend(1, Vec3::z(), FRAC_PI_3);
    let posed = sk.apply_pose(&pose).unwrap();
    let dev = |modulation: bool| {
        let opts = SkinOptions { modulation, ..Default::default() };
        let (out, _) = skin_posed(&sk, &posed, &set, &opts).unwrap();
        out.iter().map(|p| (surface_distance(&posed, p) - h).abs() / h).fold(0.0, f64::max)
    };
    let (on, off) = (dev(true), dev(false));
    outcome(on < 0.02 && off > 0.05, format!("max |dist - h|/h: modulation on {:.2}%, off {:.2}%", 100.0 * on, 100.0 * off))
}

/// Base-points against a brute-force search along the same baseline:
/// the sample whose detail line passes closest to the point (heights are
/// signed, so both sides of the baseline count).
fn base_point_oracle() -> Outcome {
    let sk = chain(
        &[Vec3::new(-4.0, 0.0, 0.0), Vec3::zeros(), Vec3::new(3.0, 2.5, 0.5)],
        &[1.0, 0.85, 0.7],
    );
    let samples = surface_cloud(&sk, 1000, 5, |k, psi, d| 0.03 + 0.1 * (0.5 + 0.5 * (3.0 * psi + k as f64 + 4.0 * d).sin()));
    let pts: Vec<Vec3> = samples.iter().map(|s| s.point).collect();
    let set = encode(&sk, &pts);
    let (mut ok, mut total, mut worst) = (0, 0, 0.0f64);
    for ep in set.points.iter().filter(|e| !e.rigid()) {
        let k = sk.bone_idx(ep.bone).unwrap();
        let sec = Section::build(&sk, k, ep.phi, ep.direction_profile()).unwrap();
        let b = sec.position(&sec.locus_at(ep.t));
        let p = pts[ep.point_index as usize];
        let poly = sec.polyline(100_000 / 3);
        let miss = |(x, l): &(Vec3, Locus)| {
            let (dir, _) = sec.direction(l);
            let v = p - x;
            (v - dir * v.dot(&dir)).norm()
        };
        let best = (0..poly.len())
            .min_by(|&i, &j| miss(&poly[i]).total_cmp(&miss(&poly[j])))
            .unwrap();
        let step = [best.saturating_sub(1), (best + 1).min(poly.len() - 1)]
            .iter()
            .map(|&j| (poly[j].0 - poly[best].0).norm())
            .fold(0.0, f64::max);
        let err = (poly[best].0 - b).norm() / step.max(1e-300);
        worst = worst.max(err);
        total += 1;
        ok += (err < 2.0) as usize;
    }
    outcome(
        ok == total && total > 900,
        format!("{ok}/{total} non-degenerate base-points within 2 oracle steps (worst {worst:.2} steps)"),
    )
}

fn resampled_baselines(polys: Vec<bskin_core::baseline::BaselinePolyline>, spacing: f64) -> Vec<(u32, Vec<Vec3>)> {
    polys
        .into_iter()
        .map(|p| {
            let pts: Vec<Vec3> = p.points.iter().map(|&q| Vec3::from(q)).collect();
            let mut out = vec![pts[0]];
            for w in pts.windows(2) {
                let n = ((w[1] - w[0]).norm() / spacing).ceil().max(1.0) as usize;
                for i in 1..=n {
                    out.push(w[0] + (w[1] - w[0]) * (i as f64 / n as f64));
                }
            }
            (p.bone_id, out)
        })
        .collect()
}

fn segment_distance(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> f64 {
    // coarse-to-fine over both parameters; segments here are short
    let (u, v) = (p1 - p0, q1 - q0);
    let w = p0 - q0;
    let (a, b, c, d, e) = (u.dot(&u), u.dot(&v), v.dot(&v), u.dot(&w), v.dot(&w));
    let den = a * c - b * b;
    let mut s = if den > 1e-300 { ((b * e - c * d) / den).clamp(0.0, 1.0) } else { 0.0 };
    let t = if c > 0.0 { ((b * s + e) / c).clamp(0.0, 1.0) } else { 0.0 };
    if a > 0.0 {
        s = ((b * t - d) / a).clamp(0.0, 1.0);
    }
    (p0 + u * s - (q0 + v * t)).norm()
}

/// Pairs of same-bone baselines whose chords come closer than `eps`,
/// ignoring the cap poles where all baselines of a free end meet by
/// construction.
fn crossings(sk: &Skeleton, lines: &[(u32, Vec<Vec3>)], eps: f64, pole_margin: f64) -> usize {
    let poles: Vec<Vec3> = sk
        .bones
        .iter()
        .flat_map(|b| {
            [End::Prox, End::Dist]
                .into_iter()
                .filter(move |&end| sk.sphere_bones[b.sphere(end)].len() == 1)
                .map(move |end| {
                    let s = if end == End::Prox { -1.0 } else { 1.0 };
                    b.center(end) + b.axis * (s * b.radius(end))
                })
        })
        .collect();
    let near_pole = |x: &Vec3| poles.iter().any(|p| (x - p).norm() < pole_margin);
    let mut hits = 0;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            if lines[i].0 != lines[j].0 {
                continue;
            }
            let (a, b) = (&lines[i].1, &lines[j].1);
            'pair: for s in a.windows(2) {
                if near_pole(&s[0]) || near_pole(&s[1]) {
                    continue;
                }
                for t in b.windows(2) {
                    if (s[0] - t[0]).norm() > 4.0 * pole_margin {
                        continue;
                    }
                    if segment_distance(&s[0], &s[1], &t[0], &t[1]) < eps {
                        hits += 1;
                        break 'pair;
                    }
                }
            }
        }
    }
    hits
}

fn bundle_non_crossing() -> Outcome {
    let sk = straight_chain(2, 4.0, &[1.0, 0.9, 0.8]);
    let spacing = 0.01 * sk.tol.diagonal;
    let posed = sk.apply_pose(&Pose::bend(1, Vec3::z(), FRAC_PI_2)).unwrap();
    let rest = resampled_baselines(export_baselines(&sk, 64, 64), spacing);
    let bent = resampled_baselines(export_deformed_baselines(&sk, &posed, 64, 64), spacing);
    // two chords of curves crossing on the surface pass within twice their
    // sagitta of each other; disjoint neighbours are much further apart
    let r_min = sk.spheres.iter().map(|s| s.radius).fold(f64::INFINITY, f64::min);
    let eps = spacing * spacing / (2.0 * r_min);
    let (c0, c1) = (crossings(&sk, &rest, eps, 2.0 * spacing), crossings(&posed, &bent, eps, 2.0 * spacing));
    outcome(
        c0 == 0 && c1 == 0 && rest.len() == 128 && bent.len() == 128,
        format!("{} + {} polylines; crossings: initial {c0}, after 90° bend {c1}", rest.len(), bent.len()),
    )
}

/// Tangent mismatch at every curve/arc junction of a section.
fn c1_mismatch(sec: &Section) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in sec.arcs.iter().enumerate() {
        let Some(a) = a else { continue };
        if a.arc.sweep().abs() < 1e-9 {
            continue;
        }
        let t = sec.curve_tangent(sec.d[i]);
        let t = if i == 0 { -t } else { t };
        worst = worst.max(angle_between(&t, &a.arc.tangent_at(0.0)));
    }
    worst
}

fn c1_continuity() -> Outcome {
    let models = [
        (straight_chain(2, 4.0, &[1.0, 0.9, 0.8]), Pose::bend(1, Vec3::z(), FRAC_PI_2)),
        (
            chain(&[Vec3::new(-4.0, 0.0, 0.0), Vec3::zeros(), Vec3::new(3.0, 2.5, 0.5)], &[1.0, 0.85, 0.7]),
            Pose::bend(1, Vec3::new(0.2, 0.1, 1.0), -1.1),
        ),
        (stripe_model(), Pose::bend(1, Vec3::z(), 0.9).with_bend(2, Vec3::y(), 0.6).with_twist(1, 0.7)),
        (figure(), Pose::bend(1, Vec3::z(), 0.5).with_twist(3, 0.4)),
    ];
    let (mut worst, mut junctions) = (0.0f64, 0usize);
    for (sk, pose) in &models {
        let posed = sk.apply_pose(pose).unwrap();
        for k in 0..sk.bones.len() {
            for i in 0..64 {
                let psi = TAU * (i as f64 + 0.5) / 64.0;
                let built = Section::build(sk, k, psi, Profile::Cubic);
                let deformed = deformed_section(sk, &posed, k, psi, Profile::Cubic, Profile::Cubic);
                for sec in [built, deformed].into_iter().flatten() {
                    junctions += sec.arcs.iter().flatten().filter(|a| a.arc.sweep().abs() >= 1e-9).count();
                    worst = worst.max(c1_mismatch(&sec));
                }
            }
        }
    }
    outcome(worst < 1e-6 && junctions > 1000, format!("{junctions} segment/arc junctions, max tangent mismatch {worst:.2e} rad"))
}

/// Connected at the joint and on the posed sphere-mesh surface.
fn portion_is_sound(sk: &Skeleton, posed: &Skeleton, psi: f64) -> bool {
    let eps = posed.tol.surface();
    let Ok(dp) = deform_portion(sk, posed, 0, psi, Profile::Cubic) else { return false };
    let Some(p) = dp.partners[1].as_ref() else { return false };
    let mut good = (dp.center.anchor(1) - p.anchor(0)).norm() < eps;
    for sec in [&dp.center, p] {
        for (x, l) in sec.polyline(32) {
            let off = match l {
                Locus::Curve { .. } => sec.bone.signed_distance(&x).abs(),
                Locus::Arc { end, .. } => {
                    let a = sec.arcs[end].unwrap();
                    ((x - a.sphere_center).norm() - a.sphere_radius).abs()
                }
            };
            good &= off < eps;
        }
    }
    good
}

/// Initial side of the joint × kinds of the two sheaf components the
/// deformed end interpolates (convex, concave, one of each).
fn six_cases() -> Outcome {
    let sk = chain(
        &[Vec3::new(-4.0, 0.0, 0.0), Vec3::zeros(), Vec3::new(0.6f64.cos(), 0.6f64.sin(), 0.0) * 4.0],
        &[1.0, 0.9, 0.8],
    );
    let mut poses = Vec::new();
    for i in -7..=7 {
        for axis in [Vec3::z(), Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 1.0), Vec3::x(), Vec3::new(1.0, 1.0, 0.3)] {
            poses.push(Pose::bend(1, axis.normalize(), 0.2 * i as f64));
        }
    }
    let mut found: std::collections::BTreeMap<(String, &str), (bool, usize)> = Default::default();
    for j in 0..48 {
        let psi = TAU * j as f64 / 48.0;
        let rest_cfg = end_config(&sk, 0, End::Dist, psi).unwrap();
        if rest_cfg.kind == EndKind::Flat {
            continue;
        }
        for pose in &poses {
            let posed = sk.apply_pose(pose).unwrap();
            let Ok(t) = resolve_bend_targets(&sk, &posed, 0, End::Dist, psi, &rest_cfg) else { continue };
            let label = match t.interpolated {
                [EndKind::Convex, EndKind::Convex] => "convex",
                [EndKind::Concave, EndKind::Concave] => "concave",
                [a, b] if a != b && !t.interpolated.contains(&EndKind::Flat) => "mixed",
                _ => continue,
            };
            let e = found.entry((format!("{:?}", rest_cfg.kind).to_lowercase(), label)).or_insert((true, 0));
            e.0 &= portion_is_sound(&sk, &posed, psi);
            e.1 += 1;
        }
    }
    let covered = found.len();
    let sound = found.values().all(|v| v.0);
    let list: Vec<String> = found.iter().map(|((i, f), (ok, n))| format!("{i}->{f} x{n}{}", if *ok { "" } else { " BROKEN" })).collect();
    outcome(covered == 6 && sound, format!("{covered}/6 cases met; {}", list.join(", ")))
}

fn throughput() -> Outcome {
    let sk = figure();
    let n = 532_067;
    let pts: Vec<Vec3> = surface_cloud(&sk, n, 11, |k, psi, d| 0.03 + 0.02 * (4.0 * psi + k as f64).sin() * (PI * d).sin())
        .into_iter()
        .map(|s| s.point)
        .collect();
    let t = Instant::now();
    let set = encode(&sk, &pts);
    let t_enc = t.elapsed().as_secs_f64();
    let pose = Pose::bend(1, Vec3::z(), 0.6).with_bend(5, Vec3::x(), -0.8).with_twist(2, 0.5).with_twist(9, -0.4);
    let posed = sk.apply_pose(&pose).unwrap();
    let t = Instant::now();
    let (out, _) = skin_posed(&sk, &posed, &set, &SkinOptions::default()).unwrap();
    let t_skin = t.elapsed().as_secs_f64();
    assert_eq!(out.len(), n);
    let t = Instant::now();
    let weights = gaussian_weights(&sk, &pts, 1.0).unwrap();
    let t_w = t.elapsed().as_secs_f64();
    let tr = bone_transforms(&sk, &posed);
    let t = Instant::now();
    let _ = lbs(&pts, &weights, &tr);
    let t_lbs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let _ = dqs(&pts, &weights, &tr).unwrap();
    let t_dqs = t.elapsed().as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        t_skin <= 5.0 && t_lbs <= 5.0 && t_dqs <= 5.0,
        format!(
            "{n} pts, {} bones, {cores} core(s): skin {t_skin:.2}s, lbs {t_lbs:.2}s, dqs {t_dqs:.2}s (encode {t_enc:.2}s, weights {t_w:.2}s, once)",
            sk.bones.len()
        ),
    )
}

fn candy_wrapper() -> Outcome {
    let sk = straight_chain(2, 4.0, &[1.0, 1.0, 1.0]);
    let pose = Pose::identity().with_twist(1, PI);
    let posed = sk.apply_pose(&pose).unwrap();
    let radius = |p: &Vec3| p.yz().norm();
    // a ring in the joint plane, equidistant from both bones
    let ring: Vec<Vec3> = (0..64).map(|i| Vec3::new(4.0, 0.0, 0.0) + sk.bones[0].normal(TAU * i as f64 / 64.0) * 1.05).collect();
    let w = gaussian_weights(&sk, &ring, 1.0).unwrap();
    let even = w.weights.iter().all(|ws| ws.len() == 2 && (ws[0].1 - 0.5).abs() < 1e-9);
    let tr = bone_transforms(&sk, &posed);
    let l = lbs(&ring, &w, &tr);
    let collapse = 1.0 - l.iter().zip(&ring).map(|(a, b)| radius(a) / radius(b)).fold(0.0, f64::max);
    let dq = dqs(&ring, &w, &tr).unwrap();
    let dq_dev = dq.iter().zip(&ring).map(|(a, b)| (radius(a) / radius(b) - 1.0).abs()).fold(0.0, f64::max);
    // baseline skinning over the whole cylindrical part
    let pts: Vec<Vec3> = surface_cloud(&sk, 20_000, 12, |_, _, _| 0.05)
        .into_iter()
        .map(|s| s.point)
        .filter(|p| (0.5..7.5).contains(&p.x))
        .collect();
    let set = encode(&sk, &pts);
    let (out, _) = skin_posed(&sk, &posed, &set, &SkinOptions::default()).unwrap();
    let dev = out.iter().zip(&pts).map(|(a, b)| (radius(a) / radius(b) - 1.0).abs()).fold(0.0, f64::max);
    outcome(
        even && collapse >= 0.5 && dev < 0.05,
        format!(
            "LBS radius collapse {:.1}% at 0.5/0.5; baseline max radius change {:.3}% over {} pts (DQS {:.3}%)",
            100.0 * collapse,
            100.0 * dev,
            pts.len(),
            100.0 * dq_dev
        ),
    )
}

fn smoothing() -> Outcome {
    let n = 4000;
    let bases: Vec<Vec3> = (0..n)
        .map(|i| {
            let f = i as f64;
            Vec3::new((f * 0.731).fract(), (f * 0.377).fract(), (f * 0.113).fract() * 0.1)
        })
        .collect();
    let members: Vec<(usize, f64)> = (0..n).step_by(3).map(|i| (i, 0.01 + 0.04 * (i as f64 * 0.61).fract())).collect();
    let flat = vec![0.123; n];
    let constant = smooth_heights(&bases, &flat, &members).iter().all(|&(i, h)| h == flat[i]);
    let step: Vec<f64> = bases.iter().map(|p| if p.x < 0.5 { 0.05 } else { 0.2 }).collect();
    let out = smooth_heights(&bases, &step, &members);
    let bounded = out.iter().all(|&(_, h)| (0.05..=0.2).contains(&h));
    let changed = out.iter().filter(|&&(i, h)| h != step[i]).count();
    outcome(
        constant && bounded && changed > 0,
        format!("constant zone unchanged: {constant}; step zone within [0.05, 0.2]: {bounded} ({changed} heights changed)"),
    )
}

fn main() {
    let mut results: Vec<(String, Outcome)> = vec![
        ("round-trip identity".into(), round_trip_identity()),
        ("bend-unbend statelessness".into(), statelessness()),
    ];
    results.extend(rigid_zone());
    results.push(("twist profile".into(), twist()));
    results.push(("offset preservation".into(), offset_preservation()));
    results.push(("base-point oracle".into(), base_point_oracle()));
    results.push(("bundle non-crossing".into(), bundle_non_crossing()));
    results.push(("C1 continuity".into(), c1_continuity()));
    results.push(("six bend cases".into(), six_cases()));
    results.push(("throughput".into(), throughput()));
    results.push(("LBS candy-wrapper".into(), candy_wrapper()));
    results.push(("smoothing".into(), smoothing()));
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += (!o.pass) as usize;
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
