//! On-disk formats: the binary snapshot container and CSV emission.
//!
//! Container layout (all little-endian):
//!
//! ```text
//! u64 num_points | f64 half_length*2 (domain length) | f64 sigma | f64 dt
//! u32 scheme tag | u64 snapshot count
//! then per snapshot: f64 time, then num_points * (f64 re, f64 im)
//! ```
//!
//! Scheme tags: 0 split-step gauge, 1 integrating-factor RK4, 2 none
//! (fields that were not produced by a time integrator).

use crate::error::{Error, Result};
use crate::evolution::{Scheme, Trajectory};
use crate::field::ComplexField;
use crate::grid::build_grid;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContainerHeader {
    pub num_points: u64,
    pub length: f64,
    pub sigma: f64,
    pub dt: f64,
    pub scheme_tag: u32,
}

pub fn scheme_tag(scheme: Option<Scheme>) -> u32 {
    match scheme {
        Some(Scheme::SplitStepGauge) => 0,
        Some(Scheme::IntegratingFactorRK4) => 1,
        None => 2,
    }
}

pub fn write_snapshot_container(
    path: &Path,
    header: &ContainerHeader,
    snapshots: &[(f64, &ComplexField)],
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&header.num_points.to_le_bytes())?;
    w.write_all(&header.length.to_le_bytes())?;
    w.write_all(&header.sigma.to_le_bytes())?;
    w.write_all(&header.dt.to_le_bytes())?;
    w.write_all(&header.scheme_tag.to_le_bytes())?;
    w.write_all(&(snapshots.len() as u64).to_le_bytes())?;
    for (t, f) in snapshots {
        if f.len() as u64 != header.num_points {
            return Err(Error::invalid_argument(
                "snapshot length does not match header",
            ));
        }
        w.write_all(&t.to_le_bytes())?;
        for z in f.values() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, sigma: f64, dt: f64, scheme: Option<Scheme>) -> Result<()> {
    let grid = traj.snapshots[0].grid();
    let header = ContainerHeader {
        num_points: grid.num_points() as u64,
        length: grid.length(),
        sigma,
        dt,
        scheme_tag: scheme_tag(scheme),
    };
    let snaps: Vec<(f64, &ComplexField)> = traj
        .times
        .iter()
        .cloned()
        .zip(traj.snapshots.iter())
        .collect();
    write_snapshot_container(path, &header, &snaps)
}

pub fn read_snapshot_container(path: &Path) -> Result<(ContainerHeader, Vec<(f64, ComplexField)>)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut u64buf = [0u8; 8];
    let mut u32buf = [0u8; 4];

    r.read_exact(&mut u64buf)?;
    let num_points = u64::from_le_bytes(u64buf);
    r.read_exact(&mut u64buf)?;
    let length = f64::from_le_bytes(u64buf);
    r.read_exact(&mut u64buf)?;
    let sigma = f64::from_le_bytes(u64buf);
    r.read_exact(&mut u64buf)?;
    let dt = f64::from_le_bytes(u64buf);
    r.read_exact(&mut u32buf)?;
    let scheme_tag = u32::from_le_bytes(u32buf);
    r.read_exact(&mut u64buf)?;
    let count = u64::from_le_bytes(u64buf);

    let grid = build_grid(num_points as usize, length / 2.0)?;
    let mut snapshots = Vec::with_capacity(count as usize);
    for _ in 0..count {
        r.read_exact(&mut u64buf)?;
        let t = f64::from_le_bytes(u64buf);
        let mut values = Vec::with_capacity(num_points as usize);
        for _ in 0..num_points {
            r.read_exact(&mut u64buf)?;
            let re = f64::from_le_bytes(u64buf);
            r.read_exact(&mut u64buf)?;
            let im = f64::from_le_bytes(u64buf);
            values.push(Complex64::new(re, im));
        }
        let mut f = ComplexField::new(grid, t, values);
        f.set_time(t);
        snapshots.push((t, f));
    }
    Ok((
        ContainerHeader {
            num_points,
            length,
            sigma,
            dt,
            scheme_tag,
        },
        snapshots,
    ))
}

/// Format a float with 17 significant digits (round-trip exact).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a CSV with a header row and 17-digit floats.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
