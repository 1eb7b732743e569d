//! Field snapshots: one JSON header line followed by little-endian `f64` pairs.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{to_grid, Grid};
use super::{SpectralError, SpectralField};

const CONVENTION: &str = "exp(+ikx), normalized measure";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    dim: usize,
    cutoff: usize,
    components: usize,
    convention: String,
    layout: String,
}

/// Writes the header line and the coefficients, component-major, row-major in
/// `k` with the last axis fastest, each as `(re, im)`.
pub fn write_field<W: Write>(mut w: W, f: &SpectralField) -> std::io::Result<()> {
    let header = Header {
        format: "vmlimit-field".into(),
        version: 1,
        dim: f.dim(),
        cutoff: f.cutoff(),
        components: f.components(),
        convention: CONVENTION.into(),
        layout: "component-major, row-major k from -K, last axis fastest, (re, im) f64 LE".into(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for z in f.coeffs() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(mut r: R) -> Result<SpectralField, SpectralError> {
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| SpectralError::Format(e.to_string()))?;
    let h: Header =
        serde_json::from_str(line.trim_end()).map_err(|e| SpectralError::Format(e.to_string()))?;
    if h.format != "vmlimit-field" || h.convention != CONVENTION {
        return Err(SpectralError::Format(format!("unsupported header {line}")));
    }
    let n = h.components * super::mode_count(h.dim, h.cutoff);
    let mut bytes = vec![0u8; 16 * n];
    r.read_exact(&mut bytes).map_err(|e| SpectralError::Format(e.to_string()))?;
    let coeffs = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    SpectralField::from_coeffs(h.dim, h.cutoff, h.components, coeffs)
}

/// CSV dump of the grid values: coordinates followed by one column per component.
pub fn write_grid_csv<W: Write>(mut w: W, f: &SpectralField) -> std::io::Result<()> {
    let g = Grid::new(f.dim(), f.cutoff());
    let vals = to_grid(f);
    let np = g.points();
    let names = ["x1", "x2", "x3"];
    let mut head: Vec<String> = names[..f.dim()].iter().map(|s| s.to_string()).collect();
    head.extend((0..f.components()).map(|c| format!("f{c}")));
    writeln!(w, "{}", head.join(","))?;
    for p in 0..np {
        let x = g.coords(p);
        let mut row: Vec<String> = x[..f.dim()].iter().map(|v| format!("{v:.17e}")).collect();
        row.extend((0..f.components()).map(|c| format!("{:.17e}", vals[c * np + p])));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let mut f = SpectralField::zeros(2, 3, 2);
        f.add_cos(0, &[1, -3], 0.123456789);
        f.add_sin(1, &[2, 2], -1.0 / 3.0);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let g = read_field(&buf[..]).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let f = SpectralField::constant(1, 2, &[1.0]);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_field(&buf[..]).is_err());
    }
}
