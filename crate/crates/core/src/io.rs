//! Serialization: snapshot CSV (lossless round trip), energy time series,
//! EOC tables (CSV plus an aligned text table), Wulff polylines and legacy
//! VTK `STRUCTURED_POINTS` output.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Fields of one stored snapshot.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: GridFunction,
    pub w: GridFunction,
    pub q: GridFunction,
    pub h: GridFunction,
}

/// Canonical snapshot file stem, shared by writers and tests.
pub fn snapshot_filename(index: usize, t: f64) -> String {
    format!("snapshot_{index:03}_t{t:.9e}")
}

/// Write `x,y,u,w,Q,H` rows, j-outer / i-inner, 17 significant digits.
pub fn write_snapshot_csv(path: &Path, snap: &Snapshot) -> Result<()> {
    let g = snap.u.grid();
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "x,y,u,w,Q,H")?;
    for j in 0..=g.n2() {
        for i in 0..=g.n1() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                g.x(i),
                g.y(j),
                snap.u.get(i, j),
                snap.w.get(i, j),
                snap.q.get(i, j),
                snap.h.get(i, j),
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Re-ingest the `u` column of a snapshot CSV onto the given grid;
/// round-trips the written values bit-exactly.
pub fn read_snapshot_u(path: &Path, grid: Grid) -> Result<GridFunction> {
    let file = BufReader::new(File::open(path)?);
    let mut lines = file.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Contract(format!("{}: empty snapshot file", path.display())))?;
    if header.trim() != "x,y,u,w,Q,H" {
        return Err(Error::Contract(format!(
            "{}: unexpected snapshot header '{}'",
            path.display(),
            header.trim()
        )));
    }
    let mut values = Vec::with_capacity(grid.node_count());
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let u = line.split(',').nth(2).ok_or_else(|| {
            Error::Contract(format!(
                "{}: row {} has fewer than 3 columns",
                path.display(),
                row + 2
            ))
        })?;
        let v: f64 = u.trim().parse().map_err(|_| {
            Error::Contract(format!(
                "{}: row {}: '{u}' is not a number",
                path.display(),
                row + 2
            ))
        })?;
        values.push(v);
    }
    if values.len() != grid.node_count() {
        return Err(Error::Contract(format!(
            "{}: {} data rows do not match the {}-node grid",
            path.display(),
            values.len(),
            grid.node_count()
        )));
    }
    GridFunction::from_values(grid, values)
}

/// Legacy-format VTK `STRUCTURED_POINTS` with one `SCALARS` block per field.
pub fn write_snapshot_vtk(path: &Path, snap: &Snapshot) -> Result<()> {
    let g = snap.u.grid();
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "willmore flow snapshot t = {:.9e}", snap.t)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {} {} 1", g.n1() + 1, g.n2() + 1)?;
    writeln!(out, "ORIGIN {:.16e} {:.16e} 0", g.x_origin(), g.y_origin())?;
    writeln!(out, "SPACING {:.16e} {:.16e} 1", g.h1(), g.h2())?;
    writeln!(out, "POINT_DATA {}", g.node_count())?;
    for (name, field) in [
        ("u", &snap.u),
        ("w", &snap.w),
        ("Q", &snap.q),
        ("H", &snap.h),
    ] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for j in 0..=g.n2() {
            for i in 0..=g.n1() {
                writeln!(out, "{:.16e}", field.get(i, j))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Write the `t,willmore,dissipation,drift` time series.
pub fn write_energy_csv(path: &Path, reports: &[crate::energy::EnergyReport]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t,willmore,dissipation,drift")?;
    for r in reports {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.willmore, r.dissipation, r.drift
        )?;
    }
    out.flush()?;
    Ok(())
}

/// One row of an EOC table; `errors` is `None` for a diverged mesh.
#[derive(Debug, Clone)]
pub struct EocRow {
    pub mesh: usize,
    pub h: f64,
    pub errors: Option<crate::mms::ErrorRecord>,
    pub eoc_l1: Option<f64>,
    pub eoc_l2: Option<f64>,
    pub eoc_linf: Option<f64>,
}

pub fn write_eoc_csv(path: &Path, rows: &[EocRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "mesh,h,err_l1,eoc_l1,err_l2,eoc_l2,err_linf,eoc_linf")?;
    for r in rows {
        match &r.errors {
            Some(e) => {
                let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
                writeln!(
                    out,
                    "{},{:.16e},{:.6e},{},{:.6e},{},{:.6e},{}",
                    r.mesh,
                    r.h,
                    e.err_l1,
                    fmt(r.eoc_l1),
                    e.err_l2,
                    fmt(r.eoc_l2),
                    e.err_linf,
                    fmt(r.eoc_linf),
                )?;
            }
            None => writeln!(out, "{},{:.16e},failed,,failed,,failed,", r.mesh, r.h)?,
        }
    }
    out.flush()?;
    Ok(())
}

/// Aligned plain-text table mirroring the CSV content.
pub fn write_eoc_table(path: &Path, title: &str, rows: &[EocRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{title}")?;
    writeln!(
        out,
        "{:>6} {:>10} {:>12} {:>7} {:>12} {:>7} {:>12} {:>7}",
        "mesh", "h", "L1 err", "EOC", "L2 err", "EOC", "Linf err", "EOC"
    )?;
    for r in rows {
        match &r.errors {
            Some(e) => {
                let fmt =
                    |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
                writeln!(
                    out,
                    "{:>6} {:>10.6} {:>12.4e} {:>7} {:>12.4e} {:>7} {:>12.4e} {:>7}",
                    r.mesh,
                    r.h,
                    e.err_l1,
                    fmt(r.eoc_l1),
                    e.err_l2,
                    fmt(r.eoc_l2),
                    e.err_linf,
                    fmt(r.eoc_linf),
                )?;
            }
            None => writeln!(
                out,
                "{:>6} {:>10.6} {:>12} {:>7} {:>12} {:>7} {:>12} {:>7}",
                r.mesh, r.h, "failed", "-", "failed", "-", "failed", "-"
            )?,
        }
    }
    out.flush()?;
    Ok(())
}

/// Wulff polyline as `theta,x,y` rows.
pub fn write_wulff_csv(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "theta,x,y")?;
    let n = points.len();
    for (k, (x, y)) in points.iter().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        writeln!(out, "{theta:.16e},{x:.16e},{y:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Ensure the output directory exists and return the joined path.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}
