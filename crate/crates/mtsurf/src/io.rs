//! CSV import/export for surfaces and invariant fields, JSON report
//! writing. Floats are serialized with 17 significant digits so reruns
//! reproduce outputs bit-identically.

use crate::error::Error;
use crate::grid::{Field, GridSpec};
use crate::invariants::InvariantField;
use crate::minkowski::Vec5;
use crate::Result;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

/// 17-significant-digit float formatting (round-trips any f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a position grid as CSV with columns x,y,f0..f4 (row-major, y
/// outer).
pub fn write_surface_csv(path: &Path, grid: &GridSpec, f: &Field<Vec5>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "x,y,f0,f1,f2,f3,f4")?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = f.at(i, j);
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_f64(grid.x(i)),
                fmt_f64(grid.y(j)),
                fmt_f64(p.0[0]),
                fmt_f64(p.0[1]),
                fmt_f64(p.0[2]),
                fmt_f64(p.0[3]),
                fmt_f64(p.0[4])
            )?;
        }
    }
    Ok(())
}

/// Read a surface CSV (columns x,y,f0..f4) and infer the uniform grid.
/// Periodicity cannot be inferred from samples; the returned spec is
/// non-periodic and callers may override the flags.
pub fn read_surface_csv(path: &Path) -> Result<(GridSpec, Field<Vec5>)> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut rows: Vec<(f64, f64, Vec5)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 {
            let expect = "x,y,f0,f1,f2,f3,f4";
            if line != expect {
                return Err(Error::Parse(format!(
                    "surface CSV header mismatch: got '{line}', want '{expect}'"
                )));
            }
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(Error::Parse(format!(
                "line {}: expected 7 comma-separated values, got {}",
                lineno + 1,
                parts.len()
            )));
        }
        let mut vals = [0.0f64; 7];
        for (k, p) in parts.iter().enumerate() {
            vals[k] = p.trim().parse::<f64>().map_err(|e| {
                Error::Parse(format!("line {}: bad float '{}': {e}", lineno + 1, p))
            })?;
        }
        rows.push((
            vals[0],
            vals[1],
            Vec5([vals[2], vals[3], vals[4], vals[5], vals[6]]),
        ));
    }
    if rows.is_empty() {
        return Err(Error::Parse("surface CSV holds no data rows".into()));
    }
    let mut xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    ys.sort_by(f64::total_cmp);
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let (nx, ny) = (xs.len(), ys.len());
    if nx * ny != rows.len() {
        return Err(Error::Parse(format!(
            "surface CSV is not a complete {nx}x{ny} lattice ({} rows)",
            rows.len()
        )));
    }
    let hx = if nx > 1 { xs[1] - xs[0] } else { 1.0 };
    let hy = if ny > 1 { ys[1] - ys[0] } else { 1.0 };
    for k in 1..nx {
        if ((xs[k] - xs[k - 1]) - hx).abs() > 1e-9 * hx.abs().max(1.0) {
            return Err(Error::Parse("x-coordinates are not uniformly spaced".into()));
        }
    }
    for k in 1..ny {
        if ((ys[k] - ys[k - 1]) - hy).abs() > 1e-9 * hy.abs().max(1.0) {
            return Err(Error::Parse("y-coordinates are not uniformly spaced".into()));
        }
    }
    let grid = GridSpec::new(
        xs[0],
        ys[0],
        hx * nx as f64,
        hy * ny as f64,
        nx,
        ny,
        false,
        false,
    )?;
    let mut field = Field::zeros(&grid);
    for (x, y, p) in rows {
        let i = ((x - grid.x0) / hx).round() as usize;
        let j = ((y - grid.y0) / hy).round() as usize;
        if i >= nx || j >= ny {
            return Err(Error::Parse(format!(
                "sample ({x},{y}) falls outside the inferred lattice"
            )));
        }
        *field.at_mut(i, j) = p;
    }
    Ok((grid, field))
}

/// Write invariant fields as CSV, one row per grid point; complex values
/// as (re, im) column pairs.
pub fn write_invariants_csv(path: &Path, field: &InvariantField) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "i,j,x,y,u,xi1_re,xi1_im,xi2_re,xi2_im,sigma_re,sigma_im,h1,h2,h,theta,q_re,q_im,Q_re,Q_im,delta_re,delta_im,K,Kperp"
    )?;
    let grid = field.grid;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let row = [
                grid.x(i),
                grid.y(j),
                field.u.at(i, j),
                field.xi1.at(i, j).re,
                field.xi1.at(i, j).im,
                field.xi2.at(i, j).re,
                field.xi2.at(i, j).im,
                field.sigma.at(i, j).re,
                field.sigma.at(i, j).im,
                field.h1.at(i, j),
                field.h2.at(i, j),
                field.h.at(i, j),
                field.theta.at(i, j),
                field.q.at(i, j).re,
                field.q.at(i, j).im,
                field.big_q.at(i, j).re,
                field.big_q.at(i, j).im,
                field.delta.at(i, j).re,
                field.delta.at(i, j).im,
                field.k_gauss.at(i, j),
                field.k_normal.at(i, j),
            ];
            write!(w, "{i},{j}")?;
            for v in row {
                write!(w, ",{}", fmt_f64(v))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Export conformal-invariant fields (κ, s) as CSV.
pub fn write_conformal_csv(
    path: &Path,
    inv: &crate::null_gauss::ConformalInvariants,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "i,j,x,y,kappa_re,kappa_im,s_re,s_im,g0,g1,g2,g3,g4")?;
    let grid = inv.grid;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = inv.kappa.at(i, j);
            let s = inv.s.at(i, j);
            let g = inv.g.at(i, j);
            write!(w, "{i},{j},{},{}", fmt_f64(grid.x(i)), fmt_f64(grid.y(j)))?;
            for v in [k.re, k.im, s.re, s.im, g.0[0], g.0[1], g.0[2], g.0[3], g.0[4]] {
                write!(w, ",{}", fmt_f64(v))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Serialize any report to pretty JSON (field order is declaration order,
/// so output is deterministic).
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Parse(format!("json serialization: {e}")))?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{flat_homogeneous_torus, FlatTorusParams};
    use crate::chart::sample_analytic_surface;

    #[test]
    fn surface_csv_roundtrip() {
        let def = flat_homogeneous_torus(FlatTorusParams { h: 1.0 }).unwrap();
        let grid = GridSpec::open_square(0.25, -0.5, 1.5, 6);
        let jet = sample_analytic_surface(&def, &grid).unwrap();
        let dir = std::env::temp_dir().join("mtsurf_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("surface.csv");
        write_surface_csv(&path, &grid, &jet.f).unwrap();
        let (g2, f2) = read_surface_csv(&path).unwrap();
        assert_eq!(g2.nx, grid.nx);
        assert_eq!(g2.ny, grid.ny);
        assert!((g2.x0 - grid.x0).abs() < 1e-12);
        assert!((g2.hx() - grid.hx()).abs() < 1e-12);
        for k in 0..f2.data.len() {
            assert!((f2.data[k] - jet.f.data[k]).norm_euclid() < 1e-15);
        }
    }

    #[test]
    fn corrupted_csv_is_rejected() {
        let dir = std::env::temp_dir().join("mtsurf_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "x,y,f0,f1,f2,f3,f4\n1,2,3,banana,5,6,7\n").unwrap();
        match read_surface_csv(&path) {
            Err(Error::Parse(msg)) => assert!(msg.contains("banana")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
