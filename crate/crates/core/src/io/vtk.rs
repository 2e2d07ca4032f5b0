//! Legacy-VTK ASCII export, for visualization only. Values are written with
//! nine significant digits.

use super::snapshot::FieldSnapshot;
use crate::error::{Error, Result};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn vec3(v: [f64; 3]) -> String {
    format!("{} {} {}", num(v[0]), num(v[1]), num(v[2]))
}

fn check(snap: &FieldSnapshot) -> Result<()> {
    if snap.sites.is_empty() {
        return Err(Error::Format("snapshot has no fluid sites to export".into()));
    }
    snap.validate()
}

/// Structured-points file over the whole grid. Solid sites carry zeros and
/// `fluid = 0`. Spacing and origin are in micrometres.
pub fn write_fields_vtk<W: Write>(snap: &FieldSnapshot, mut w: W) -> Result<()> {
    check(snap)?;
    let [nx, ny, nz] = snap.dims;
    let n = nx * ny * nz;
    let mut slot = vec![usize::MAX; n];
    for (k, s) in snap.sites.iter().enumerate() {
        slot[s.grid] = k;
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "caplb fields (lengths in um)")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {nx} {ny} {nz}")?;
    writeln!(w, "ORIGIN {}", vec3(snap.origin_um))?;
    writeln!(w, "SPACING {}", vec3([snap.dx_um; 3]))?;
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "SCALARS fluid int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &k in &slot {
        writeln!(w, "{}", u8::from(k != usize::MAX))?;
    }
    let field = |w: &mut W, f: &dyn Fn(usize) -> String, zero: &str| -> Result<()> {
        for &k in &slot {
            if k == usize::MAX {
                writeln!(w, "{zero}")?;
            } else {
                writeln!(w, "{}", f(k))?;
            }
        }
        Ok(())
    };
    writeln!(w, "VECTORS velocity_m_per_s double")?;
    field(&mut w, &|k| vec3(snap.sites[k].velocity_m_per_s), "0 0 0")?;
    writeln!(w, "SCALARS density double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    field(&mut w, &|k| num(snap.sites[k].density), "0")?;
    writeln!(w, "SCALARS pressure_pa double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    field(&mut w, &|k| num(snap.sites[k].pressure_pa), "0")?;
    writeln!(w, "SCALARS shear_rate_per_s double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    field(&mut w, &|k| num(snap.sites[k].shear_rate_per_s), "0")?;
    w.flush()?;
    Ok(())
}

/// Polydata file with one vertex per wall link.
pub fn write_wss_vtk<W: Write>(snap: &FieldSnapshot, mut w: W) -> Result<()> {
    check(snap)?;
    let m = snap.wss.len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "caplb wall traction (positions in um)")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {m} double")?;
    for t in &snap.wss {
        writeln!(w, "{}", vec3(t.position))?;
    }
    writeln!(w, "VERTICES {m} {}", 2 * m)?;
    for k in 0..m {
        writeln!(w, "1 {k}")?;
    }
    writeln!(w, "POINT_DATA {m}")?;
    writeln!(w, "VECTORS traction_pa double")?;
    for t in &snap.wss {
        writeln!(w, "{}", vec3(t.traction))?;
    }
    writeln!(w, "NORMALS normal double")?;
    for t in &snap.wss {
        writeln!(w, "{}", vec3(t.normal))?;
    }
    writeln!(w, "SCALARS wss_pa double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for t in &snap.wss {
        writeln!(w, "{}", num(t.wss))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>_fields.vtk` and `<stem>_wss.vtk` into `dir`. Nothing is
/// written when the snapshot has no fluid sites.
pub fn export_vtk(snap: &FieldSnapshot, dir: impl AsRef<Path>, stem: &str) -> Result<[PathBuf; 2]> {
    check(snap)?;
    let dir = dir.as_ref();
    let fields = dir.join(format!("{stem}_fields.vtk"));
    let wss = dir.join(format!("{stem}_wss.vtk"));
    write_fields_vtk(snap, BufWriter::new(std::fs::File::create(&fields)?))?;
    write_wss_vtk(snap, BufWriter::new(std::fs::File::create(&wss)?))?;
    Ok([fields, wss])
}
