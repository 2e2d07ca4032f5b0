//! Regular-grid voxelization of the capsule union and wall-link extraction.

use super::skeleton::{CapsuleIndex, IoletKind, VesselSkeleton};
use crate::error::{Error, Result};
use crate::lbm::velocity_set::{C, Q};
use crate::tensor::{dot, normalize, sub};
use log::warn;
use serde::{Deserialize, Serialize};

/// Minimum vessel diameter in lattice spacings.
pub const MIN_LATTICE_DIAMETER: f64 = 3.0;
/// Bisection stops once |distance| falls below this fraction of dx and the
/// bracket is narrower than this fraction of the link.
pub const BISECTION_TOLERANCE: f64 = 1e-6;
pub const BISECTION_MAX_ITER: usize = 60;
/// Empty sites kept around the lumen bounding box.
const GRID_MARGIN: i64 = 2;
const MAX_GRID_SITES: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteClass {
    Solid,
    Fluid,
    /// Fluid site with at least one link cut by the vessel wall.
    WallAdjacent,
    /// Fluid site with at least one link crossing the plane of iolet `k`.
    Iolet(u16),
}

impl SiteClass {
    pub fn is_fluid(self) -> bool {
        !matches!(self, SiteClass::Solid)
    }
}

/// A fluid-to-solid lattice link cut by the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallLink {
    pub site: usize,
    /// Direction pointing from the fluid site into the wall.
    pub dir: u8,
    /// Fraction of the link between the site and the wall, in (0, 1].
    pub q: f64,
    /// Unit normal of the lumen surface at the cut point, pointing out of the fluid.
    pub normal: [f64; 3],
}

/// A lattice link leaving the domain through an iolet plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IoletLink {
    pub site: usize,
    pub dir: u8,
    pub iolet: u16,
    /// Fraction of the link between the site and the iolet plane.
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IoletPlane {
    pub kind: IoletKind,
    /// Plane point (micrometres).
    pub point: [f64; 3],
    /// Unit normal pointing out of the domain.
    pub normal: [f64; 3],
    /// Lumen radius at the opening (micrometres).
    pub radius: f64,
    pub pressure_mmhg: f64,
    /// Lattice density imposed at the opening.
    pub density: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VoxelizeOptions {
    /// Accept vessels thinner than three lattice spacings.
    pub allow_thin_vessels: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelDomain {
    pub dims: [usize; 3],
    /// Lattice spacing (micrometres).
    pub dx: f64,
    /// Position of site (0, 0, 0) (micrometres).
    pub origin: [f64; 3],
    pub periodic: [bool; 3],
    pub class: Vec<SiteClass>,
    pub wall_links: Vec<WallLink>,
    pub iolet_links: Vec<IoletLink>,
    pub iolets: Vec<IoletPlane>,
}

impl VoxelDomain {
    pub fn site_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.dims[0] * (ijk[1] + self.dims[1] * ijk[2])
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// Site centre (micrometres).
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        [
            self.origin[0] + c[0] as f64 * self.dx,
            self.origin[1] + c[1] as f64 * self.dx,
            self.origin[2] + c[2] as f64 * self.dx,
        ]
    }

    pub fn is_fluid(&self, idx: usize) -> bool {
        self.class[idx].is_fluid()
    }

    /// Neighbour along lattice direction `dir`, honouring periodic axes.
    #[inline]
    pub fn neighbor(&self, idx: usize, dir: usize) -> Option<usize> {
        let c = self.coords(idx);
        let mut out = [0usize; 3];
        for k in 0..3 {
            let v = c[k] as i64 + C[dir][k] as i64;
            let n = self.dims[k] as i64;
            out[k] = if v < 0 || v >= n {
                if self.periodic[k] {
                    v.rem_euclid(n) as usize
                } else {
                    return None;
                }
            } else {
                v as usize
            };
        }
        Some(self.index(out))
    }

    pub fn fluid_count(&self) -> usize {
        self.class.iter().filter(|c| c.is_fluid()).count()
    }

    pub fn fluid_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.class.iter().enumerate().filter(|(_, c)| c.is_fluid()).map(|(i, _)| i)
    }

    /// Builds a domain from a fluid mask. Every fluid-to-solid link becomes a
    /// wall link whose fraction and normal come from `wall(site, dir)`.
    pub fn from_mask(
        dims: [usize; 3],
        dx: f64,
        origin: [f64; 3],
        periodic: [bool; 3],
        fluid: &[bool],
        wall: impl Fn(usize, usize) -> (f64, [f64; 3]),
    ) -> Result<Self> {
        if fluid.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::Geometry("mask size does not match dims".into()));
        }
        let mut dom = VoxelDomain {
            dims,
            dx,
            origin,
            periodic,
            class: fluid.iter().map(|&f| if f { SiteClass::Fluid } else { SiteClass::Solid }).collect(),
            wall_links: Vec::new(),
            iolet_links: Vec::new(),
            iolets: Vec::new(),
        };
        if dom.fluid_count() == 0 {
            return Err(Error::Geometry("domain has no fluid sites".into()));
        }
        let mut links = Vec::new();
        for s in dom.fluid_sites() {
            for i in 1..Q {
                let open = dom.neighbor(s, i).map(|n| fluid[n]).unwrap_or(false);
                if !open {
                    let (q, normal) = wall(s, i);
                    links.push(WallLink { site: s, dir: i as u8, q, normal });
                }
            }
        }
        for l in &links {
            dom.class[l.site] = SiteClass::WallAdjacent;
        }
        dom.wall_links = links;
        dom.validate()?;
        Ok(dom)
    }

    /// Checks the link bookkeeping invariants.
    pub fn validate(&self) -> Result<()> {
        let mut cover = std::collections::HashMap::new();
        for l in &self.wall_links {
            if !(l.q > 0.0 && l.q <= 1.0) {
                return Err(Error::Geometry(format!("wall link at site {} dir {} has q = {}", l.site, l.dir, l.q)));
            }
            let n = dot(l.normal, l.normal).sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::Geometry(format!("wall normal at site {} is not unit length", l.site)));
            }
            if !self.is_fluid(l.site) {
                return Err(Error::Geometry(format!("solid site {} carries a wall link", l.site)));
            }
            if cover.insert((l.site, l.dir), ()).is_some() {
                return Err(Error::Geometry(format!("duplicate link at site {} dir {}", l.site, l.dir)));
            }
        }
        for l in &self.iolet_links {
            if l.iolet as usize >= self.iolets.len() {
                return Err(Error::Geometry(format!("iolet link references iolet {}", l.iolet)));
            }
            if cover.insert((l.site, l.dir), ()).is_some() {
                return Err(Error::Geometry(format!("duplicate link at site {} dir {}", l.site, l.dir)));
            }
        }
        for s in self.fluid_sites() {
            for i in 1..Q {
                let open = self.neighbor(s, i).map(|n| self.is_fluid(n)).unwrap_or(false);
                let covered = cover.contains_key(&(s, i as u8));
                if open == covered {
                    return Err(Error::Geometry(format!(
                        "site {s} dir {i}: link {} but {}",
                        if open { "is open" } else { "is closed" },
                        if covered { "has a boundary entry" } else { "has none" }
                    )));
                }
            }
        }
        Ok(())
    }

    /// Sets every iolet density from its pressure, with `reference_mmhg` at density 1.
    pub fn assign_densities(&mut self, bridge: &crate::units::UnitBridge<f64>, reference_mmhg: f64) {
        for io in &mut self.iolets {
            io.density = bridge.pressure_to_lattice_density(io.pressure_mmhg, reference_mmhg);
        }
    }
}

fn check_min_diameter(skeleton: &VesselSkeleton, dx: f64) -> Result<()> {
    let min = MIN_LATTICE_DIAMETER * dx;
    for (k, c) in skeleton.capsules().iter().enumerate() {
        if c.diameter() < min * (1.0 - 1e-12) {
            return Err(Error::MinDiameter { segment: k, diameter_um: c.diameter(), min_um: min });
        }
    }
    Ok(())
}

/// Classifies a regular grid of spacing `dx` (micrometres) against the
/// skeleton's lumen and extracts every boundary link.
pub fn voxelize(skeleton: &VesselSkeleton, dx: f64, opts: VoxelizeOptions) -> Result<VoxelDomain> {
    if !(dx > 0.0) {
        return Err(Error::domain(format!("dx must be positive, got {dx}")));
    }
    skeleton.validate()?;
    if !opts.allow_thin_vessels {
        check_min_diameter(skeleton, dx)?;
    }
    let capsules = skeleton.capsules();
    let iolets = skeleton.resolved_iolets()?;

    // grid anchored on integer multiples of dx so translations by dx shift sites exactly
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in &capsules {
        let (l, h) = c.bounds(0.0);
        for k in 0..3 {
            lo[k] = lo[k].min(l[k]);
            hi[k] = hi[k].max(h[k]);
        }
    }
    let mut first = [0i64; 3];
    let mut dims = [0usize; 3];
    for k in 0..3 {
        first[k] = (lo[k] / dx).floor() as i64 - GRID_MARGIN;
        let last = (hi[k] / dx).ceil() as i64 + GRID_MARGIN;
        dims[k] = (last - first[k] + 1) as usize;
    }
    let total = dims[0].checked_mul(dims[1]).and_then(|v| v.checked_mul(dims[2])).unwrap_or(usize::MAX);
    if total > MAX_GRID_SITES {
        return Err(Error::Geometry(format!("grid of {dims:?} sites is too large")));
    }
    let origin = [first[0] as f64 * dx, first[1] as f64 * dx, first[2] as f64 * dx];
    let pos = |ijk: [usize; 3]| -> [f64; 3] {
        [
            (first[0] + ijk[0] as i64) as f64 * dx,
            (first[1] + ijk[1] as i64) as f64 * dx,
            (first[2] + ijk[2] as i64) as f64 * dx,
        ]
    };
    let idx_of = |ijk: [usize; 3]| ijk[0] + dims[0] * (ijk[1] + dims[1] * ijk[2]);

    // signed distance, only needed to sign precision inside each capsule's box
    let mut inside = vec![false; total];
    for c in &capsules {
        let (l, h) = c.bounds(0.0);
        let mut r0 = [0usize; 3];
        let mut r1 = [0usize; 3];
        for k in 0..3 {
            r0[k] = ((l[k] / dx).floor() as i64 - first[k]).max(0) as usize;
            r1[k] = (((h[k] / dx).ceil() as i64 - first[k]) as usize).min(dims[k] - 1);
        }
        for z in r0[2]..=r1[2] {
            for y in r0[1]..=r1[1] {
                for x in r0[0]..=r1[0] {
                    let ijk = [x, y, z];
                    let i = idx_of(ijk);
                    if !inside[i] && c.signed_distance(pos(ijk)) < 0.0 {
                        inside[i] = true;
                    }
                }
            }
        }
    }

    // sites on or beyond an iolet plane near its node are cut away and remember the iolet
    let mut region: Vec<u16> = vec![u16::MAX; total];
    for (k, io) in iolets.iter().enumerate() {
        let reach = io.radius + 2.0 * dx;
        let mut r0 = [0usize; 3];
        let mut r1 = [0usize; 3];
        for a in 0..3 {
            r0[a] = (((io.point[a] - reach) / dx).floor() as i64 - first[a]).max(0) as usize;
            r1[a] = ((((io.point[a] + reach) / dx).ceil() as i64 - first[a]).max(0) as usize).min(dims[a] - 1);
        }
        for z in r0[2]..=r1[2] {
            for y in r0[1]..=r1[1] {
                for x in r0[0]..=r1[0] {
                    let ijk = [x, y, z];
                    let i = idx_of(ijk);
                    let d = sub(pos(ijk), io.point);
                    if dot(d, io.normal) >= 0.0 && dot(d, d).sqrt() <= reach {
                        inside[i] = false;
                        region[i] = k as u16;
                    }
                }
            }
        }
    }

    let mut dom = VoxelDomain {
        dims,
        dx,
        origin,
        periodic: [false; 3],
        class: inside.iter().map(|&f| if f { SiteClass::Fluid } else { SiteClass::Solid }).collect(),
        wall_links: Vec::new(),
        iolet_links: Vec::new(),
        iolets: iolets
            .iter()
            .map(|io| IoletPlane {
                kind: io.kind,
                point: io.point,
                normal: io.normal,
                radius: io.radius,
                pressure_mmhg: io.pressure_mmhg,
                density: 1.0,
            })
            .collect(),
    };
    if dom.fluid_count() == 0 {
        return Err(Error::Geometry("voxelization produced no fluid sites".into()));
    }

    let index = CapsuleIndex::new(capsules, 8.0 * dx, 4.0 * dx);
    let mut wall_links = Vec::new();
    let mut iolet_links = Vec::new();
    for s in 0..total {
        if !inside[s] {
            continue;
        }
        for i in 1..Q {
            let n = dom.neighbor(s, i).expect("grid margin keeps neighbours in range");
            if inside[n] {
                continue;
            }
            // the link leaves through the opening when it meets the plane inside the lumen
            let through_plane = (region[n] != u16::MAX).then(|| {
                let io = &dom.iolets[region[n] as usize];
                let x = dom.position(s);
                let c = [C[i][0] as f64, C[i][1] as f64, C[i][2] as f64];
                let cn = dot(c, io.normal) * dx;
                let q = if cn > 0.0 { dot(sub(io.point, x), io.normal) / cn } else { f64::NAN };
                (q, [x[0] + q * c[0] * dx, x[1] + q * c[1] * dx, x[2] + q * c[2] * dx])
            });
            match through_plane {
                Some((q, hit)) if q > 0.0 && q <= 1.0 && index.distance(hit) < 0.0 => {
                    iolet_links.push(IoletLink { site: s, dir: i as u8, iolet: region[n], q: q.max(1e-6) });
                }
                _ => wall_links.push(WallLink { site: s, dir: i as u8, q: f64::NAN, normal: [0.0; 3] }),
            }
        }
    }
    dom.wall_links = wall_links;
    dom.iolet_links = iolet_links;
    cull_unreachable(&mut dom);
    if dom.fluid_count() == 0 {
        return Err(Error::Geometry("no fluid region is connected to an iolet".into()));
    }
    fill_wall_links(&mut dom, &index)?;
    classify(&mut dom);
    dom.validate()?;
    Ok(dom)
}

/// Removes fluid regions (connected along lattice links) that touch no iolet.
fn cull_unreachable(dom: &mut VoxelDomain) {
    if dom.iolets.is_empty() {
        return;
    }
    let total = dom.site_count();
    let mut label = vec![u32::MAX; total];
    let mut keep = Vec::new();
    let mut has_iolet = vec![false; total];
    for l in &dom.iolet_links {
        has_iolet[l.site] = true;
    }
    let mut next = 0u32;
    let mut stack = Vec::new();
    for s in 0..total {
        if !dom.is_fluid(s) || label[s] != u32::MAX {
            continue;
        }
        let mut touches = false;
        let mut size = 0usize;
        label[s] = next;
        stack.push(s);
        while let Some(v) = stack.pop() {
            size += 1;
            touches |= has_iolet[v];
            for i in 1..Q {
                if let Some(n) = dom.neighbor(v, i) {
                    if dom.is_fluid(n) && label[n] == u32::MAX {
                        label[n] = next;
                        stack.push(n);
                    }
                }
            }
        }
        if !touches {
            warn!("culling {size} fluid sites not connected to any iolet");
        }
        keep.push(touches);
        next += 1;
    }
    if keep.iter().all(|&k| k) {
        return;
    }
    for s in 0..total {
        if label[s] != u32::MAX && !keep[label[s] as usize] {
            dom.class[s] = SiteClass::Solid;
        }
    }
    let class = &dom.class;
    dom.wall_links.retain(|l| class[l.site].is_fluid());
    dom.iolet_links.retain(|l| class[l.site].is_fluid());
}

fn classify(dom: &mut VoxelDomain) {
    for s in 0..dom.site_count() {
        if dom.class[s].is_fluid() {
            dom.class[s] = SiteClass::Fluid;
        }
    }
    for l in &dom.wall_links {
        dom.class[l.site] = SiteClass::WallAdjacent;
    }
    for l in &dom.iolet_links {
        dom.class[l.site] = SiteClass::Iolet(l.iolet);
    }
}

/// Recomputes wall-cut fractions and surface normals of every wall link from
/// the skeleton's implicit surface.
pub fn wall_link_fractions(domain: &VoxelDomain, skeleton: &VesselSkeleton) -> Result<VoxelDomain> {
    let index = CapsuleIndex::new(skeleton.capsules(), 8.0 * domain.dx, 4.0 * domain.dx);
    let mut out = domain.clone();
    fill_wall_links(&mut out, &index)?;
    Ok(out)
}

fn fill_wall_links(dom: &mut VoxelDomain, index: &CapsuleIndex) -> Result<()> {
    let dx = dom.dx;
    let tol = BISECTION_TOLERANCE * dx;
    let h = 1e-4 * dx;
    let positions: Vec<[f64; 3]> = dom.wall_links.iter().map(|l| dom.position(l.site)).collect();
    for (l, x) in dom.wall_links.iter_mut().zip(positions) {
        let c = [C[l.dir as usize][0] as f64 * dx, C[l.dir as usize][1] as f64 * dx, C[l.dir as usize][2] as f64 * dx];
        let at = |s: f64| [x[0] + s * c[0], x[1] + s * c[1], x[2] + s * c[2]];
        let f0 = index.distance(at(0.0));
        let f1 = index.distance(at(1.0));
        if !(f0 < 0.0 && f1 >= 0.0) {
            return Err(Error::Geometry(format!(
                "cannot bracket the wall on the link from site {} along direction {} (distances {f0}, {f1})",
                l.site, l.dir
            )));
        }
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let mut q = 1.0;
        if f1 > tol {
            for _ in 0..BISECTION_MAX_ITER {
                let m = 0.5 * (a + b);
                let fm = index.distance(at(m));
                q = m;
                if fm.abs() < tol && b - a < BISECTION_TOLERANCE {
                    break;
                }
                if fm < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
        }
        l.q = q.clamp(f64::MIN_POSITIVE, 1.0);
        let p = at(l.q);
        let g = [
            index.distance([p[0] + h, p[1], p[2]]) - index.distance([p[0] - h, p[1], p[2]]),
            index.distance([p[0], p[1] + h, p[2]]) - index.distance([p[0], p[1] - h, p[2]]),
            index.distance([p[0], p[1], p[2] + h]) - index.distance([p[0], p[1], p[2] - h]),
        ];
        l.normal = normalize(g).or_else(|| normalize(c)).expect("lattice direction is non-zero");
    }
    Ok(())
}

/// Length-weighted percentiles of the lattice diameter D/dx.
pub fn lattice_diameter_percentiles(skeleton: &VesselSkeleton, dx: f64, percentiles: &[f64]) -> Vec<f64> {
    let mut segs: Vec<(f64, f64)> = skeleton.capsules().iter().map(|c| (c.diameter() / dx, c.length())).collect();
    segs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = segs.iter().map(|s| s.1).sum();
    percentiles
        .iter()
        .map(|&p| {
            let target = p / 100.0 * total;
            let mut acc = 0.0;
            for &(d, l) in &segs {
                acc += l;
                if acc >= target {
                    return d;
                }
            }
            segs.last().map(|s| s.0).unwrap_or(0.0)
        })
        .collect()
}

/// Fraction of centreline length whose lattice diameter is at least `d_min`.
pub fn length_fraction_above(skeleton: &VesselSkeleton, dx: f64, d_min: f64) -> f64 {
    let caps = skeleton.capsules();
    let total: f64 = caps.iter().map(|c| c.length()).sum();
    caps.iter().filter(|c| c.diameter() / dx >= d_min).map(|c| c.length()).sum::<f64>() / total
}
