//! Report and snapshot files.
//!
//! Cloud snapshots are one JSON header line followed by little-endian `f64`
//! arrays `weights, phase, x0, xi0, vp.x, vp.xi, vm.x, vm.xi`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use vmlimit_core::{ParticleCloud, Trajectory};

use crate::error::HarnessError;

const CLOUD_FORMAT: &str = "vmlimit-cloud";

#[derive(Serialize, Deserialize)]
struct CloudHeader {
    format: String,
    version: u32,
    dim: usize,
    n: usize,
    seed: u64,
    t: f64,
}

fn put(w: &mut impl Write, v: &[f64]) -> std::io::Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn take(r: &mut impl Read, n: usize) -> std::io::Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

pub fn write_cloud(path: &Path, cloud: &ParticleCloud, t: f64) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = CloudHeader {
        format: CLOUD_FORMAT.into(),
        version: 1,
        dim: cloud.dim,
        n: cloud.len(),
        seed: cloud.seed,
        t,
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    put(&mut w, &cloud.weights)?;
    let phase: Vec<f64> = cloud.phase.iter().map(|&p| p as f64).collect();
    put(&mut w, &phase)?;
    put(&mut w, &cloud.x0)?;
    put(&mut w, &cloud.xi0)?;
    for tr in [&cloud.vp, &cloud.vm] {
        put(&mut w, &tr.x)?;
        put(&mut w, &tr.xi)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot; returns the cloud and its time.
pub fn read_cloud(path: &Path) -> Result<(ParticleCloud, f64), HarnessError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let h: CloudHeader = serde_json::from_str(line.trim_end())?;
    if h.format != CLOUD_FORMAT || h.version != 1 {
        return Err(HarnessError::Validation(format!("{} is not a cloud snapshot", path.display())));
    }
    let (d, n) = (h.dim, h.n);
    let weights = take(&mut r, n)?;
    let phase = take(&mut r, n)?.into_iter().map(|p| p as usize).collect();
    let x0 = take(&mut r, n * d)?;
    let xi0 = take(&mut r, n * d)?;
    let vp = Trajectory { x: take(&mut r, n * d)?, xi: take(&mut r, n * d)? };
    let vm = Trajectory { x: take(&mut r, n * d)?, xi: take(&mut r, n * d)? };
    let cloud = ParticleCloud {
        dim: d,
        seed: h.seed,
        weights,
        phase,
        x0,
        xi0,
        vp,
        vm,
    };
    Ok((cloud, h.t))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Writes a CSV with the given header and rows of numbers.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}
