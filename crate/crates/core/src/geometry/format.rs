//! `CLBD` binary domain files.
//!
//! Little-endian layout, version 1:
//!
//! ```text
//! magic    b"CLBD"
//! version  u32
//! dims     3 x u32
//! dx       f64            micrometres
//! origin   3 x f64        micrometres
//! periodic 3 x u8
//! n_iolets u32, then per iolet:
//!     kind u8 (0 inlet, 1 outlet), point 3 x f64, normal 3 x f64,
//!     radius f64, pressure_mmhg f64, density f64
//! classes  nx*ny*nz x u16 (0 solid, 1 fluid, 2 wall-adjacent, 3 + k iolet k)
//! n_wall   u64, then per link: site u64, dir u8, q f64, normal 3 x f64
//! n_iolet_links u64, then per link: site u64, dir u8, iolet u16, q f64
//! ```

use super::skeleton::IoletKind;
use super::voxel::{IoletLink, IoletPlane, SiteClass, VoxelDomain, WallLink};
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const DOMAIN_MAGIC: &[u8; 4] = b"CLBD";
pub const DOMAIN_VERSION: u32 = 1;

pub(crate) struct LeWriter<W: Write>(pub W);

impl<W: Write> LeWriter<W> {
    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.0.write_all(b)?;
        Ok(())
    }
    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }
    pub fn u16(&mut self, v: u16) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn vec3(&mut self, v: [f64; 3]) -> Result<()> {
        v.iter().try_for_each(|x| self.f64(*x))
    }
}

pub(crate) struct LeReader<R: Read>(pub R);

impl<R: Read> LeReader<R> {
    fn fill<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("unexpected end of file".into()),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }
    pub fn magic(&mut self, want: &[u8; 4]) -> Result<()> {
        let got = self.fill::<4>()?;
        if &got != want {
            return Err(Error::Format(format!("bad magic {:?}, expected {:?}", got, std::str::from_utf8(want).unwrap())));
        }
        Ok(())
    }
    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.fill::<1>()?[0])
    }
    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.fill()?))
    }
    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.fill()?))
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.fill()?))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.fill()?))
    }
    pub fn vec3(&mut self) -> Result<[f64; 3]> {
        Ok([self.f64()?, self.f64()?, self.f64()?])
    }
}

pub fn write_domain<W: Write>(dom: &VoxelDomain, w: W) -> Result<()> {
    let mut w = LeWriter(w);
    w.bytes(DOMAIN_MAGIC)?;
    w.u32(DOMAIN_VERSION)?;
    for d in dom.dims {
        w.u32(d as u32)?;
    }
    w.f64(dom.dx)?;
    w.vec3(dom.origin)?;
    for p in dom.periodic {
        w.u8(p as u8)?;
    }
    w.u32(dom.iolets.len() as u32)?;
    for io in &dom.iolets {
        w.u8(match io.kind {
            IoletKind::Inlet => 0,
            IoletKind::Outlet => 1,
        })?;
        w.vec3(io.point)?;
        w.vec3(io.normal)?;
        w.f64(io.radius)?;
        w.f64(io.pressure_mmhg)?;
        w.f64(io.density)?;
    }
    let mut buf = Vec::with_capacity(dom.class.len() * 2);
    for c in &dom.class {
        let code: u16 = match c {
            SiteClass::Solid => 0,
            SiteClass::Fluid => 1,
            SiteClass::WallAdjacent => 2,
            SiteClass::Iolet(k) => 3 + k,
        };
        buf.extend_from_slice(&code.to_le_bytes());
    }
    w.bytes(&buf)?;
    w.u64(dom.wall_links.len() as u64)?;
    for l in &dom.wall_links {
        w.u64(l.site as u64)?;
        w.u8(l.dir)?;
        w.f64(l.q)?;
        w.vec3(l.normal)?;
    }
    w.u64(dom.iolet_links.len() as u64)?;
    for l in &dom.iolet_links {
        w.u64(l.site as u64)?;
        w.u8(l.dir)?;
        w.u16(l.iolet)?;
        w.f64(l.q)?;
    }
    Ok(())
}

pub fn read_domain<R: Read>(r: R) -> Result<VoxelDomain> {
    let mut r = LeReader(r);
    r.magic(DOMAIN_MAGIC)?;
    let version = r.u32()?;
    if version != DOMAIN_VERSION {
        return Err(Error::Format(format!("unsupported domain version {version}")));
    }
    let dims = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    let dx = r.f64()?;
    let origin = r.vec3()?;
    let periodic = [r.u8()? != 0, r.u8()? != 0, r.u8()? != 0];
    let n_iolets = r.u32()? as usize;
    let mut iolets = Vec::with_capacity(n_iolets);
    for _ in 0..n_iolets {
        let kind = match r.u8()? {
            0 => IoletKind::Inlet,
            1 => IoletKind::Outlet,
            k => return Err(Error::Format(format!("unknown iolet kind {k}"))),
        };
        iolets.push(IoletPlane {
            kind,
            point: r.vec3()?,
            normal: r.vec3()?,
            radius: r.f64()?,
            pressure_mmhg: r.f64()?,
            density: r.f64()?,
        });
    }
    let total = dims[0] * dims[1] * dims[2];
    let mut class = Vec::with_capacity(total);
    for _ in 0..total {
        class.push(match r.u16()? {
            0 => SiteClass::Solid,
            1 => SiteClass::Fluid,
            2 => SiteClass::WallAdjacent,
            k => SiteClass::Iolet(k - 3),
        });
    }
    let n_wall = r.u64()? as usize;
    let mut wall_links = Vec::with_capacity(n_wall.min(total * 14));
    for _ in 0..n_wall {
        wall_links.push(WallLink { site: r.u64()? as usize, dir: r.u8()?, q: r.f64()?, normal: r.vec3()? });
    }
    let n_io = r.u64()? as usize;
    let mut iolet_links = Vec::with_capacity(n_io.min(total * 14));
    for _ in 0..n_io {
        iolet_links.push(IoletLink { site: r.u64()? as usize, dir: r.u8()?, iolet: r.u16()?, q: r.f64()? });
    }
    let dom = VoxelDomain { dims, dx, origin, periodic, class, wall_links, iolet_links, iolets };
    if dom.wall_links.iter().any(|l| l.site >= total) || dom.iolet_links.iter().any(|l| l.site >= total) {
        return Err(Error::Format("link references a site outside the grid".into()));
    }
    dom.validate()?;
    Ok(dom)
}

pub fn save_domain(dom: &VoxelDomain, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_domain(dom, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_domain(path: impl AsRef<Path>) -> Result<VoxelDomain> {
    let f = std::fs::File::open(path)?;
    read_domain(std::io::BufReader::new(f))
}
