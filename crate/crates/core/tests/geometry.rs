use caplb::assets::{cylinder_skeleton, mini_plexus};
use caplb::geometry::{
    load_domain, read_domain, save_domain, voxelize, wall_link_fractions, IoletKind, SiteClass, SkeletonIolet,
    SkeletonNode, VesselSkeleton, VoxelDomain, VoxelizeOptions,
};
use caplb::lbm::C;
use caplb::validation::INCLINED_AXIS;
use caplb::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn vox(s: &VesselSkeleton, dx: f64) -> VoxelDomain {
    voxelize(s, dx, VoxelizeOptions::default()).unwrap()
}

/// Cylinder along z through (cx, cy), from z = 0 to z = length, inlet at the top.
fn z_cylinder(cx: f64, cy: f64, radius: f64, length: f64) -> VesselSkeleton {
    cylinder_skeleton([cx, cy, 0.5 * length], [0.0, 0.0, 1.0], 2.0 * radius, length)
}

/// Entry parameter of the ray x + t c into the infinite cylinder x^2 + y^2 = r^2 about (cx, cy).
fn ray_cylinder(x: [f64; 3], c: [f64; 3], cx: f64, cy: f64, r: f64) -> Option<f64> {
    let (px, py) = (x[0] - cx, x[1] - cy);
    let a = c[0] * c[0] + c[1] * c[1];
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * (px * c[0] + py * c[1]);
    let k = px * px + py * py - r * r;
    let disc = b * b - 4.0 * a * k;
    (disc >= 0.0).then(|| (-b + disc.sqrt()) / (2.0 * a))
}

#[test]
fn axis_aligned_slices_match_point_count() {
    let (cx, cy, r) = (0.25, 0.35, 5.0);
    let dom = vox(&z_cylinder(cx, cy, r, 40.0), 1.0);
    // brute force over the lattice plane
    let mut expected = 0usize;
    for i in -8i64..=8 {
        for j in -8i64..=8 {
            let (x, y) = (i as f64 - cx, j as f64 - cy);
            if x * x + y * y < r * r {
                expected += 1;
            }
        }
    }
    assert!((expected as f64 / (PI * r * r) - 1.0).abs() < 0.06);
    for z in 5..35 {
        let count = (0..dom.site_count())
            .filter(|&s| dom.is_fluid(s) && (dom.position(s)[2] - z as f64).abs() < 1e-9)
            .count();
        assert_eq!(count, expected, "slice z = {z}");
    }
}

#[test]
fn inclined_cylinder_volume() {
    let (d, l) = (10.0, 40.0);
    let dom = vox(&cylinder_skeleton([0.0; 3], INCLINED_AXIS, d, l), 1.0);
    let exact = PI * 0.25 * d * d * l;
    let got = dom.fluid_count() as f64;
    assert!((got / exact - 1.0).abs() < 0.02, "{got} vs {exact}");
}

#[test]
fn single_node_skeleton_rejected() {
    let s = VesselSkeleton {
        nodes: vec![SkeletonNode { id: 0, pos_um: [0.0; 3], radius_um: 2.0 }],
        edges: vec![],
        iolets: vec![],
    };
    assert!(voxelize(&s, 1.0, VoxelizeOptions::default()).is_err());
}

#[test]
fn perpendicular_link_half_way_to_wall() {
    // surface at x = 5.5 on the y = 0 line, reached perpendicularly from the site at x = 5
    let dom = vox(&z_cylinder(0.0, 0.0, 5.5, 30.0), 1.0);
    let site = dom.index(
        [0, 1, 2].map(|a| (([5.0, 0.0, 15.0][a] - dom.origin[a]) / dom.dx).round() as usize),
    );
    let link = dom.wall_links.iter().find(|l| l.site == site && C[l.dir as usize] == [1, 0, 0]).unwrap();
    assert!((link.q - 0.5).abs() < 1e-6, "q = {}", link.q);
    assert!((link.normal[0] - 1.0).abs() < 1e-6);
}

#[test]
fn fractions_match_ray_cylinder_intersection() {
    let (cx, cy, r) = (0.3, -0.2, 4.6);
    let dom = vox(&z_cylinder(cx, cy, r, 30.0), 1.0);
    let mut checked = 0;
    for l in &dom.wall_links {
        let x = dom.position(l.site);
        if !(6.0..=24.0).contains(&x[2]) {
            continue;
        }
        let c = C[l.dir as usize].map(|v| v as f64);
        let t = ray_cylinder(x, c, cx, cy, r).expect("link leaves the lumen sideways");
        assert!((l.q - t).abs() < 1e-5, "site {} dir {}: {} vs {t}", l.site, l.dir, l.q);
        checked += 1;
    }
    assert!(checked > 100);
}

fn check_link_invariants(dom: &VoxelDomain) {
    let mut has_link = vec![false; dom.site_count()];
    for l in &dom.wall_links {
        assert!(l.q > 0.0 && l.q <= 1.0);
        let n = l.normal;
        assert!(((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() - 1.0).abs() < 1e-9);
        assert!(dom.is_fluid(l.site));
        assert!(!dom.is_fluid(dom.neighbor(l.site, l.dir as usize).unwrap()));
        has_link[l.site] = true;
    }
    for s in 0..dom.site_count() {
        if dom.class[s] == SiteClass::WallAdjacent {
            assert!(has_link[s]);
        }
    }
    // every fluid-to-solid link is closed exactly once
    let mut closed = std::collections::HashSet::new();
    for (s, d) in dom.wall_links.iter().map(|l| (l.site, l.dir)).chain(dom.iolet_links.iter().map(|l| (l.site, l.dir))) {
        assert!(closed.insert((s, d)));
    }
    for s in dom.fluid_sites() {
        for i in 1..C.len() {
            let n = dom.neighbor(s, i).unwrap();
            assert_eq!(!dom.is_fluid(n), closed.contains(&(s, i as u8)), "site {s} dir {i}");
        }
    }
}

#[test]
fn plexus_links_are_consistent() {
    let dom = vox(&mini_plexus(), 1.0);
    dom.validate().unwrap();
    check_link_invariants(&dom);
    for k in 0..dom.iolets.len() {
        assert!(dom.iolet_links.iter().any(|l| l.iolet as usize == k), "iolet {k} has no links");
    }
}

#[test]
fn recomputed_fractions_are_stable() {
    let s = cylinder_skeleton([0.0; 3], INCLINED_AXIS, 7.0, 28.0);
    let dom = vox(&s, 1.0);
    let again = wall_link_fractions(&dom, &s).unwrap();
    for (a, b) in dom.wall_links.iter().zip(&again.wall_links) {
        assert!((a.q - b.q).abs() < 1e-12);
    }
}

#[test]
fn refinement_changes_volume_within_surface_slab() {
    let (d, l) = (8.0, 24.0);
    let s = cylinder_skeleton([0.1, 0.2, 0.3], INCLINED_AXIS, d, l);
    let area = PI * d * l + 2.0 * PI * 0.25 * d * d;
    for dx in [1.0, 0.5] {
        let v1 = vox(&s, dx).fluid_count() as f64 * dx.powi(3);
        let v2 = vox(&s, dx / 2.0).fluid_count() as f64 * (dx / 2.0).powi(3);
        assert!((v1 - v2).abs() <= area * dx, "dx {dx}: {v1} vs {v2}");
    }
}

#[test]
fn thin_vessel_rejected_with_segment() {
    let mut s = z_cylinder(0.0, 0.0, 2.0, 20.0);
    s.nodes[1].radius_um = 0.5;
    match voxelize(&s, 1.0, VoxelizeOptions::default()) {
        Err(Error::MinDiameter { segment, diameter_um, .. }) => {
            assert_eq!(segment, 0);
            assert!((diameter_um - 2.5).abs() < 1e-12);
        }
        other => panic!("expected a minimum-diameter error, got {other:?}"),
    }
}

#[test]
fn region_behind_unresolved_vessel_is_culled() {
    let node = |id: i64, x: f64, r: f64| SkeletonNode { id, pos_um: [x, 0.0, 0.0], radius_um: r };
    // inlet 0 - 1 - outlet 2 is resolved; 1 - 3 - 4 - 5 dead-ends behind a sub-lattice segment
    let s = VesselSkeleton {
        nodes: vec![
            node(0, 0.0, 3.0),
            node(1, 12.0, 3.0),
            SkeletonNode { id: 2, pos_um: [12.0, 12.0, 0.0], radius_um: 3.0 },
            SkeletonNode { id: 3, pos_um: [16.0, 0.5, 0.5], radius_um: 0.05 },
            SkeletonNode { id: 4, pos_um: [22.0, 0.5, 0.5], radius_um: 0.05 },
            node(5, 28.0, 3.0),
        ],
        edges: vec![[0, 1], [1, 2], [1, 3], [3, 4], [4, 5]],
        iolets: vec![
            SkeletonIolet { node: 0, kind: IoletKind::Inlet, pressure_mmhg: 10.0 },
            SkeletonIolet { node: 2, kind: IoletKind::Outlet, pressure_mmhg: 0.0 },
        ],
    };
    let dom = voxelize(&s, 1.0, VoxelizeOptions { allow_thin_vessels: true }).unwrap();
    let near_dead_end = dom.fluid_sites().filter(|&g| dom.position(g)[0] > 24.0).count();
    assert_eq!(near_dead_end, 0);
    assert!(dom.fluid_count() > 100);
}

#[test]
fn domain_file_round_trip() {
    let dom = vox(&mini_plexus(), 1.25);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plexus.clbd");
    save_domain(&dom, &path).unwrap();
    assert_eq!(load_domain(&path).unwrap(), dom);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    assert!(matches!(read_domain(bytes.as_slice()), Err(Error::Format(_))));
    bytes.truncate(20);
    assert!(read_domain(&bytes[..]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn translation_by_lattice_steps_shifts_sites(shift in prop::array::uniform3(-3i64..=3), seed in 0u8..4) {
        let dx = 1.0;
        let axis = [INCLINED_AXIS, [0.6, 0.0, 0.8], [0.0, 0.6, -0.8], [0.48, 0.6, 0.64]][seed as usize];
        let base = cylinder_skeleton([0.13, 0.27, 0.41], axis, 6.0, 18.0);
        let mut moved = base.clone();
        for n in &mut moved.nodes {
            for a in 0..3 {
                n.pos_um[a] += shift[a] as f64 * dx;
            }
        }
        let a = vox(&base, dx);
        let b = vox(&moved, dx);
        prop_assert_eq!(a.dims, b.dims);
        for k in 0..3 {
            prop_assert!((b.origin[k] - a.origin[k] - shift[k] as f64 * dx).abs() < 1e-9);
        }
        prop_assert_eq!(&a.class, &b.class);
    }
}
