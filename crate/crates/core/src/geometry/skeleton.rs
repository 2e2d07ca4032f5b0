//! Vessel centreline graphs and the capsule-union lumen they describe.

use crate::error::{Error, Result};
use crate::tensor::{dot, norm, sub};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IoletKind {
    Inlet,
    Outlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonNode {
    pub id: i64,
    pub pos_um: [f64; 3],
    pub radius_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonIolet {
    pub node: i64,
    pub kind: IoletKind,
    pub pressure_mmhg: f64,
}

/// Centreline graph with per-node lumen radii. Positions and radii in micrometres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VesselSkeleton {
    pub nodes: Vec<SkeletonNode>,
    pub edges: Vec<[i64; 2]>,
    #[serde(default)]
    pub iolets: Vec<SkeletonIolet>,
}

/// Cylinder with hemispherical caps; one per skeleton edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub radius: f64,
}

impl Capsule {
    /// Signed distance: negative inside.
    #[inline]
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        let ab = sub(self.b, self.a);
        let ap = sub(p, self.a);
        let t = (dot(ap, ab) / dot(ab, ab)).clamp(0.0, 1.0);
        let d = [ap[0] - t * ab[0], ap[1] - t * ab[1], ap[2] - t * ab[2]];
        norm(d) - self.radius
    }

    pub fn length(&self) -> f64 {
        norm(sub(self.b, self.a))
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// Axis-aligned bounds of the capsule grown by `margin`.
    pub fn bounds(&self, margin: f64) -> ([f64; 3], [f64; 3]) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for k in 0..3 {
            lo[k] = self.a[k].min(self.b[k]) - self.radius - margin;
            hi[k] = self.a[k].max(self.b[k]) + self.radius + margin;
        }
        (lo, hi)
    }
}

/// An iolet resolved against the node table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedIolet {
    pub node_index: usize,
    pub segment: usize,
    pub kind: IoletKind,
    pub pressure_mmhg: f64,
    pub point: [f64; 3],
    /// Unit normal pointing out of the lumen, along the terminal segment.
    pub normal: [f64; 3],
    pub radius: f64,
}

impl VesselSkeleton {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let sk: VesselSkeleton = serde_json::from_str(s)?;
        sk.validate()?;
        Ok(sk)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("skeleton serialises")
    }

    fn index_map(&self) -> Result<HashMap<i64, usize>> {
        let mut map = HashMap::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            if map.insert(n.id, i).is_some() {
                return Err(Error::Skeleton(format!("duplicate node id {}", n.id)));
            }
        }
        Ok(map)
    }

    fn edge_indices(&self) -> Result<Vec<(usize, usize)>> {
        let map = self.index_map()?;
        self.edges
            .iter()
            .map(|[a, b]| {
                let ia = *map.get(a).ok_or_else(|| Error::Skeleton(format!("edge references unknown node {a}")))?;
                let ib = *map.get(b).ok_or_else(|| Error::Skeleton(format!("edge references unknown node {b}")))?;
                Ok((ia, ib))
            })
            .collect()
    }

    /// Checks connectivity, radii, edge lengths and iolet degrees.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Skeleton("skeleton has no nodes".into()));
        }
        if self.edges.is_empty() {
            return Err(Error::Skeleton("skeleton has no edges".into()));
        }
        for n in &self.nodes {
            if !(n.radius_um > 0.0) || n.pos_um.iter().any(|x| !x.is_finite()) {
                return Err(Error::Skeleton(format!("node {} needs a positive radius and finite position", n.id)));
            }
        }
        let edges = self.edge_indices()?;
        let mut degree = vec![0usize; self.nodes.len()];
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a == b || norm(sub(self.nodes[a].pos_um, self.nodes[b].pos_um)) <= 0.0 {
                return Err(Error::Skeleton(format!("edge {k} has zero length")));
            }
            degree[a] += 1;
            degree[b] += 1;
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Skeleton(format!("skeleton is disconnected (node {} unreachable)", self.nodes[i].id)));
        }
        let map = self.index_map()?;
        let mut used = std::collections::HashSet::new();
        for io in &self.iolets {
            let i = *map.get(&io.node).ok_or_else(|| Error::Skeleton(format!("iolet references unknown node {}", io.node)))?;
            if degree[i] != 1 {
                return Err(Error::Skeleton(format!("iolet node {} has degree {}, expected 1", io.node, degree[i])));
            }
            if !used.insert(i) {
                return Err(Error::Skeleton(format!("node {} carries two iolets", io.node)));
            }
            if !io.pressure_mmhg.is_finite() {
                return Err(Error::Skeleton(format!("iolet at node {} has a non-finite pressure", io.node)));
            }
        }
        Ok(())
    }

    /// One capsule per edge; radius is the mean of the endpoint radii.
    pub fn capsules(&self) -> Vec<Capsule> {
        let edges = self.edge_indices().expect("validated skeleton");
        edges
            .iter()
            .map(|&(a, b)| Capsule {
                a: self.nodes[a].pos_um,
                b: self.nodes[b].pos_um,
                radius: 0.5 * (self.nodes[a].radius_um + self.nodes[b].radius_um),
            })
            .collect()
    }

    /// Signed distance to the capsule union (negative inside), micrometres.
    pub fn implicit_distance(&self, p: [f64; 3]) -> f64 {
        self.capsules().iter().map(|c| c.signed_distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn resolved_iolets(&self) -> Result<Vec<ResolvedIolet>> {
        let map = self.index_map()?;
        let edges = self.edge_indices()?;
        let caps = self.capsules();
        self.iolets
            .iter()
            .map(|io| {
                let i = map[&io.node];
                let seg = edges
                    .iter()
                    .position(|&(a, b)| a == i || b == i)
                    .ok_or_else(|| Error::Skeleton(format!("iolet node {} has no edge", io.node)))?;
                let (a, b) = edges[seg];
                let other = if a == i { b } else { a };
                let p = self.nodes[i].pos_um;
                let d = sub(p, self.nodes[other].pos_um);
                let l = norm(d);
                Ok(ResolvedIolet {
                    node_index: i,
                    segment: seg,
                    kind: io.kind,
                    pressure_mmhg: io.pressure_mmhg,
                    point: p,
                    normal: [d[0] / l, d[1] / l, d[2] / l],
                    radius: caps[seg].radius,
                })
            })
            .collect()
    }

    /// Total centreline length (micrometres).
    pub fn total_length(&self) -> f64 {
        self.capsules().iter().map(|c| c.length()).sum()
    }
}

/// Uniform bucket grid over capsules, for fast local distance queries.
#[derive(Debug, Clone)]
pub struct CapsuleIndex {
    capsules: Vec<Capsule>,
    origin: [f64; 3],
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<u32>>,
    margin: f64,
}

impl CapsuleIndex {
    /// `margin` bounds how far from the surface queries stay exact.
    pub fn new(capsules: Vec<Capsule>, cell: f64, margin: f64) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for c in &capsules {
            let (l, h) = c.bounds(margin);
            for k in 0..3 {
                lo[k] = lo[k].min(l[k]);
                hi[k] = hi[k].max(h[k]);
            }
        }
        let mut dims = [1usize; 3];
        for k in 0..3 {
            dims[k] = (((hi[k] - lo[k]) / cell).ceil() as usize).max(1);
        }
        let mut buckets = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        for (ci, c) in capsules.iter().enumerate() {
            let (l, h) = c.bounds(margin);
            let mut r0 = [0usize; 3];
            let mut r1 = [0usize; 3];
            for k in 0..3 {
                r0[k] = (((l[k] - lo[k]) / cell).floor().max(0.0) as usize).min(dims[k] - 1);
                r1[k] = (((h[k] - lo[k]) / cell).floor().max(0.0) as usize).min(dims[k] - 1);
            }
            for z in r0[2]..=r1[2] {
                for y in r0[1]..=r1[1] {
                    for x in r0[0]..=r1[0] {
                        buckets[x + dims[0] * (y + dims[1] * z)].push(ci as u32);
                    }
                }
            }
        }
        Self { capsules, origin: lo, cell, dims, buckets, margin }
    }

    pub fn capsules(&self) -> &[Capsule] {
        &self.capsules
    }

    /// Signed distance to the union. Exact whenever the true value is below
    /// `margin`; otherwise returns some value >= `margin`.
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let f = (p[k] - self.origin[k]) / self.cell;
            if f < 0.0 || f >= self.dims[k] as f64 {
                return self.margin.max(1.0) * 2.0;
            }
            idx[k] = f as usize;
        }
        let b = &self.buckets[idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])];
        if b.is_empty() {
            return self.margin.max(1.0) * 2.0;
        }
        b.iter().map(|&c| self.capsules[c as usize].signed_distance(p)).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn segment(r: f64) -> VesselSkeleton {
        VesselSkeleton {
            nodes: vec![
                SkeletonNode { id: 0, pos_um: [0.0, 0.0, 0.0], radius_um: r },
                SkeletonNode { id: 1, pos_um: [10.0, 0.0, 0.0], radius_um: r },
            ],
            edges: vec![[0, 1]],
            iolets: vec![],
        }
    }

    #[test]
    fn single_capsule_distances() {
        let s = segment(2.0);
        assert!((s.implicit_distance([5.0, 0.0, 0.0]) + 2.0).abs() < 1e-12);
        assert!(s.implicit_distance([5.0, 0.0, 2.0]).abs() < 1e-12);
        assert!((s.implicit_distance([5.0, 0.0, 5.0]) - 3.0).abs() < 1e-12);
        // beyond the end cap
        assert!((s.implicit_distance([13.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_failures() {
        let mut s = segment(1.0);
        s.edges.clear();
        assert!(matches!(s.validate(), Err(Error::Skeleton(_))));

        let mut s = segment(1.0);
        s.nodes[1].radius_um = 0.0;
        assert!(s.validate().is_err());

        let mut s = segment(1.0);
        s.nodes.push(SkeletonNode { id: 7, pos_um: [0.0, 5.0, 0.0], radius_um: 1.0 });
        assert!(s.validate().is_err(), "disconnected node");

        let mut s = segment(1.0);
        s.nodes[1].pos_um = [0.0; 3];
        assert!(s.validate().is_err(), "zero length edge");

        let mut s = segment(1.0);
        s.nodes.push(SkeletonNode { id: 2, pos_um: [20.0, 0.0, 0.0], radius_um: 1.0 });
        s.edges.push([1, 2]);
        s.iolets.push(SkeletonIolet { node: 1, kind: IoletKind::Inlet, pressure_mmhg: 10.0 });
        assert!(s.validate().is_err(), "iolet on a degree-2 node");
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let json = r#"{"nodes":[{"id":3,"pos_um":[0,0,0],"radius_um":1.5},{"id":9,"pos_um":[0,0,12],"radius_um":1.5}],
                      "edges":[[3,9]],
                      "iolets":[{"node":3,"kind":"inlet","pressure_mmhg":68.2},{"node":9,"kind":"outlet","pressure_mmhg":11.6}]}"#;
        let s = VesselSkeleton::from_json_str(json).unwrap();
        assert_eq!(s.iolets[0].kind, IoletKind::Inlet);
        let back = VesselSkeleton::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
        let io = s.resolved_iolets().unwrap();
        assert_eq!(io[0].normal, [0.0, 0.0, -1.0]);
        assert_eq!(io[1].normal, [0.0, 0.0, 1.0]);

        match VesselSkeleton::from_json_str("{\"nodes\": [1,") {
            Err(Error::Json(e)) => assert!(e.line() >= 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn index_matches_brute_force() {
        let s = VesselSkeleton {
            nodes: vec![
                SkeletonNode { id: 0, pos_um: [0.0, 0.0, 0.0], radius_um: 2.0 },
                SkeletonNode { id: 1, pos_um: [10.0, 3.0, 0.0], radius_um: 1.0 },
                SkeletonNode { id: 2, pos_um: [15.0, -4.0, 2.0], radius_um: 1.5 },
            ],
            edges: vec![[0, 1], [1, 2]],
            iolets: vec![],
        };
        let idx = CapsuleIndex::new(s.capsules(), 2.0, 3.0);
        for i in 0..30 {
            for j in 0..20 {
                let p = [-3.0 + i as f64 * 0.7, -8.0 + j as f64 * 0.8, 0.5];
                let exact = s.implicit_distance(p);
                let fast = idx.distance(p);
                if exact < 3.0 {
                    assert!((exact - fast).abs() < 1e-12);
                } else {
                    assert!(fast >= 3.0 - 1e-12);
                }
            }
        }
    }
}
