//! Bundled inputs: murine viscosity samples, straight-cylinder skeletons
//! and a small synthetic capillary network.

use crate::geometry::{IoletKind, SkeletonIolet, SkeletonNode, VesselSkeleton};
use crate::tensor::normalize;

pub use crate::rheology::MURINE_VISCOSITY_CSV;

/// Synthetic capillary plexus: an artery and a vein joined by a ladder of
/// capillaries with cross-links.
pub const MINI_PLEXUS_JSON: &str = include_str!("../assets/mini_plexus.json");

pub fn mini_plexus() -> VesselSkeleton {
    VesselSkeleton::from_json_str(MINI_PLEXUS_JSON).expect("bundled network is valid")
}

/// Straight cylinder centred on `center` with the inlet at the `+axis` end and
/// the outlet at the `-axis` end. Lengths in micrometres.
pub fn cylinder_skeleton(center: [f64; 3], axis: [f64; 3], diameter: f64, length: f64) -> VesselSkeleton {
    let n = normalize(axis).expect("non-zero axis");
    let h = 0.5 * length;
    let r = 0.5 * diameter;
    let end = |s: f64| [center[0] + s * h * n[0], center[1] + s * h * n[1], center[2] + s * h * n[2]];
    VesselSkeleton {
        nodes: vec![
            SkeletonNode { id: 0, pos_um: end(1.0), radius_um: r },
            SkeletonNode { id: 1, pos_um: end(-1.0), radius_um: r },
        ],
        edges: vec![[0, 1]],
        iolets: vec![
            SkeletonIolet { node: 0, kind: IoletKind::Inlet, pressure_mmhg: 0.0 },
            SkeletonIolet { node: 1, kind: IoletKind::Outlet, pressure_mmhg: 0.0 },
        ],
    }
}

/// Parameters of the generated plexus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlexusLayout {
    pub rungs: usize,
    /// Spacing of the rungs along the artery (micrometres).
    pub pitch: f64,
    /// Distance between artery and vein (micrometres).
    pub gap: f64,
    /// Capillary segments per rung.
    pub rung_segments: usize,
    pub artery_radius: f64,
    pub vein_radius: f64,
    pub capillary_radius: f64,
    pub inlet_mmhg: f64,
    pub outlet_mmhg: f64,
}

impl Default for PlexusLayout {
    fn default() -> Self {
        PlexusLayout {
            rungs: 16,
            pitch: 12.0,
            gap: 48.0,
            rung_segments: 10,
            artery_radius: 4.0,
            vein_radius: 5.0,
            capillary_radius: 2.5,
            inlet_mmhg: 56.6,
            outlet_mmhg: 11.6,
        }
    }
}

/// Builds the ladder network. Artery along +y at x = 0, vein along +y at
/// x = gap, both in the z = 0 plane; rungs wiggle in z so the capillaries are
/// not all parallel, and every other pair of neighbouring rungs is
/// cross-linked at mid-span, which closes capillary loops.
pub fn plexus(layout: &PlexusLayout) -> VesselSkeleton {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let add = |nodes: &mut Vec<SkeletonNode>, pos: [f64; 3], r: f64| -> i64 {
        let id = nodes.len() as i64;
        nodes.push(SkeletonNode { id, pos_um: pos, radius_um: r });
        id
    };
    let lead = layout.pitch;
    let n_main = layout.rungs + 2;
    let y = |k: usize| k as f64 * layout.pitch;
    let artery: Vec<i64> = (0..n_main).map(|k| add(&mut nodes, [0.0, y(k), 0.0], layout.artery_radius)).collect();
    let vein: Vec<i64> = (0..n_main).map(|k| add(&mut nodes, [layout.gap, y(k), 0.0], layout.vein_radius)).collect();
    for k in 1..n_main {
        edges.push([artery[k - 1], artery[k]]);
        edges.push([vein[k - 1], vein[k]]);
    }
    let m = layout.rung_segments;
    let mut mids = Vec::new();
    for r in 0..layout.rungs {
        let k = r + 1;
        let mut prev = artery[k];
        let mut mid = prev;
        for j in 1..m {
            let t = j as f64 / m as f64;
            let wiggle = 0.25 * layout.pitch * (std::f64::consts::PI * t).sin() * if r % 2 == 0 { 1.0 } else { -1.0 };
            let x = t * layout.gap;
            let id = add(&mut nodes, [x, y(k) + 0.15 * layout.pitch * (2.0 * std::f64::consts::PI * t).sin(), wiggle], layout.capillary_radius);
            edges.push([prev, id]);
            if j == m / 2 {
                mid = id;
            }
            prev = id;
        }
        edges.push([prev, vein[k]]);
        mids.push(mid);
    }
    for r in (0..layout.rungs.saturating_sub(1)).step_by(2) {
        edges.push([mids[r], mids[r + 1]]);
    }
    // feeding and draining stubs beyond the ladder
    let inlet = add(&mut nodes, [0.0, -lead, 0.0], layout.artery_radius);
    edges.push([inlet, artery[0]]);
    let outlet = add(&mut nodes, [layout.gap, y(n_main - 1) + lead, 0.0], layout.vein_radius);
    edges.push([vein[n_main - 1], outlet]);
    VesselSkeleton {
        nodes,
        edges,
        iolets: vec![
            SkeletonIolet { node: inlet, kind: IoletKind::Inlet, pressure_mmhg: layout.inlet_mmhg },
            SkeletonIolet { node: outlet, kind: IoletKind::Outlet, pressure_mmhg: layout.outlet_mmhg },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_iolets_face_outward() {
        let s = cylinder_skeleton([0.0; 3], [0.0, 0.0, 2.0], 6.0, 24.0);
        s.validate().unwrap();
        let io = s.resolved_iolets().unwrap();
        assert_eq!(io[0].kind, IoletKind::Inlet);
        assert_eq!(io[0].normal, [0.0, 0.0, 1.0]);
        assert_eq!(io[1].normal, [0.0, 0.0, -1.0]);
        assert_eq!(io[0].radius, 3.0);
    }

    #[test]
    fn bundled_plexus_matches_generator() {
        let s = mini_plexus();
        assert_eq!(s, plexus(&PlexusLayout::default()));
        assert!(s.edges.len() >= 100);
    }
}
