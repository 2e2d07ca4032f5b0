//! Converged field snapshots and the `CLBS` binary format.
//!
//! Little-endian layout, version 1:
//!
//! ```text
//! magic         b"CLBS"
//! version       u32
//! dims          3 x u32
//! dx            f64          micrometres
//! origin        3 x f64      micrometres
//! reference     f64          mmHg at lattice density 1
//! n_sites u64, then per fluid site:
//!     grid index u64, density f64, pressure f64 (Pa), velocity 3 x f64 (m/s), shear rate f64 (1/s)
//! n_wss   u64, then per wall link:
//!     position 3 x f64 (um), normal 3 x f64, traction 3 x f64 (Pa), wss f64 (Pa)
//! ```

use crate::error::{Error, Result};
use crate::geometry::{LeReader, LeWriter, VoxelDomain};
use crate::lbm::Solver;
use crate::scalar::Real;
use crate::simulation::{traction_field, TractionRecord};
use crate::units::UnitBridge;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"CLBS";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteRecord {
    /// Index into the full grid (x fastest).
    pub grid: usize,
    /// Lattice density.
    pub density: f64,
    pub pressure_pa: f64,
    pub velocity_m_per_s: [f64; 3],
    pub shear_rate_per_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub dims: [usize; 3],
    pub dx_um: f64,
    pub origin_um: [f64; 3],
    pub reference_mmhg: f64,
    /// One record per fluid site, ordered by grid index.
    pub sites: Vec<SiteRecord>,
    /// One record per wall link.
    pub wss: Vec<TractionRecord>,
}

impl FieldSnapshot {
    pub fn from_solver<T: Real>(
        solver: &Solver<T>,
        domain: &VoxelDomain,
        bridge: &UnitBridge<f64>,
        reference_mmhg: f64,
    ) -> Result<Self> {
        let sites = (0..solver.site_count())
            .map(|s| {
                let m = solver.site(s);
                let rho = m.rho.as_f64();
                SiteRecord {
                    grid: solver.grid_index(s),
                    density: rho,
                    pressure_pa: bridge.lattice_density_to_pressure_pa(rho, reference_mmhg),
                    velocity_m_per_s: m.u.map(|v| bridge.velocity_to_physical(v.as_f64())),
                    shear_rate_per_s: bridge.shear_rate_to_physical(m.shear_rate.as_f64()),
                }
            })
            .collect();
        let snap = FieldSnapshot {
            dims: domain.dims,
            dx_um: domain.dx,
            origin_um: domain.origin,
            reference_mmhg,
            sites,
            wss: traction_field(solver, domain, bridge),
        };
        snap.validate_against(domain)?;
        Ok(snap)
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.dims.iter().product::<usize>();
        if !(self.dx_um > 0.0) {
            return Err(Error::Format(format!("snapshot dx must be positive, got {}", self.dx_um)));
        }
        if let Some(w) = self.sites.windows(2).find(|w| w[0].grid >= w[1].grid) {
            return Err(Error::Format(format!("site records out of order at grid index {}", w[1].grid)));
        }
        if let Some(last) = self.sites.last() {
            if last.grid >= total {
                return Err(Error::Format(format!("grid index {} outside a grid of {total} sites", last.grid)));
            }
        }
        Ok(())
    }

    /// Checks record counts against the domain the snapshot was taken on.
    pub fn validate_against(&self, domain: &VoxelDomain) -> Result<()> {
        self.validate()?;
        if self.sites.len() != domain.fluid_count() {
            return Err(Error::Format(format!(
                "snapshot has {} site records for {} fluid sites",
                self.sites.len(),
                domain.fluid_count()
            )));
        }
        if self.wss.len() != domain.wall_links.len() {
            return Err(Error::Format(format!(
                "snapshot has {} wall records for {} wall links",
                self.wss.len(),
                domain.wall_links.len()
            )));
        }
        Ok(())
    }

    pub fn grid_coords(&self, grid: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [grid % nx, (grid / nx) % ny, grid / (nx * ny)]
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = LeWriter(w);
        w.bytes(SNAPSHOT_MAGIC)?;
        w.u32(SNAPSHOT_VERSION)?;
        for d in self.dims {
            w.u32(u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} too large")))?)?;
        }
        w.f64(self.dx_um)?;
        w.vec3(self.origin_um)?;
        w.f64(self.reference_mmhg)?;
        w.u64(self.sites.len() as u64)?;
        for s in &self.sites {
            w.u64(s.grid as u64)?;
            w.f64(s.density)?;
            w.f64(s.pressure_pa)?;
            w.vec3(s.velocity_m_per_s)?;
            w.f64(s.shear_rate_per_s)?;
        }
        w.u64(self.wss.len() as u64)?;
        for t in &self.wss {
            w.vec3(t.position)?;
            w.vec3(t.normal)?;
            w.vec3(t.traction)?;
            w.f64(t.wss)?;
        }
        w.0.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut r = LeReader(r);
        r.magic(SNAPSHOT_MAGIC)?;
        let version = r.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let dims = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
        let dx_um = r.f64()?;
        let origin_um = r.vec3()?;
        let reference_mmhg = r.f64()?;
        let n = r.u64()? as usize;
        let total = dims.iter().product::<usize>();
        if n > total {
            return Err(Error::Format(format!("{n} site records for a grid of {total} sites")));
        }
        let mut sites = Vec::with_capacity(n);
        for _ in 0..n {
            sites.push(SiteRecord {
                grid: r.u64()? as usize,
                density: r.f64()?,
                pressure_pa: r.f64()?,
                velocity_m_per_s: r.vec3()?,
                shear_rate_per_s: r.f64()?,
            });
        }
        let m = r.u64()? as usize;
        let mut wss = Vec::with_capacity(m.min(1 << 24));
        for _ in 0..m {
            wss.push(TractionRecord { position: r.vec3()?, normal: r.vec3()?, traction: r.vec3()?, wss: r.f64()? });
        }
        let snap = FieldSnapshot { dims, dx_um, origin_um, reference_mmhg, sites, wss };
        snap.validate()?;
        Ok(snap)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(std::fs::File::open(path)?))
    }
}
