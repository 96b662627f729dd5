//! Snapshots and tables: a tiny binary format for nodal fields, CSV
//! import/export for densities and run histories, and whole-trajectory
//! directory exports.
//!
//! The binary field format is sixteen header bytes — the magic `TGF1`,
//! then dimension and nodes-per-axis as little-endian u32, then a reserved
//! u32 — followed by the row-major nodal values as little-endian f64. It is
//! deliberately dumb: byte-identical for identical inputs, so golden-file
//! tests can compare exact bytes.
//!
//! All CSV numbers are written through `Display`, which prints the shortest
//! digit string that round-trips the exact double, making text outputs as
//! reproducible as the binary ones.

use crate::diagnostics::{DiagnosticsReport, ShiftBoundRow};
use crate::error::{Error, Result};
use crate::evolve::{MfgSolution, TimeMesh};
use crate::grid::{ScalarField, TorusGrid};
use crate::measures::{fourier_moment, total_variation, Density};
use crate::stationary::OuterRecord;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Magic bytes opening every binary field file.
pub const FIELD_MAGIC: &[u8; 4] = b"TGF1";

fn bad_file(path: &Path, reason: impl Into<String>) -> Error {
    Error::BadFieldFile {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

// ── Binary field snapshots ──────────────────────────────────────────────────

/// Serializes a field: 16-byte header (magic, dimension, nodes per axis,
/// reserved zero), then the values row-major as little-endian f64.
pub fn write_field(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let grid = field.grid();
    let mut bytes = Vec::with_capacity(16 + 8 * grid.node_count());
    bytes.extend_from_slice(FIELD_MAGIC);
    bytes.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    bytes.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    bytes.extend_from_slice(&0u32.to_le_bytes());
    for &v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a field written by [`write_field`], rebuilding its grid and
/// validating magic, sizes, and finiteness.
pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.len() < 16 {
        return Err(bad_file(path, "truncated header (need 16 bytes)"));
    }
    if &bytes[..4] != FIELD_MAGIC {
        return Err(bad_file(path, "bad magic (not a field snapshot)"));
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let grid = TorusGrid::new(dim, n)
        .map_err(|e| bad_file(path, format!("unusable grid header: {e}")))?;
    let expected = 16 + 8 * grid.node_count();
    if bytes.len() != expected {
        return Err(bad_file(
            path,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ScalarField::new(grid, values).map_err(|e| bad_file(path, format!("bad payload: {e}")))
}

// ── Density tables ──────────────────────────────────────────────────────────

/// Header of a circle density table.
const HEADER_1D: &str = "i,x,m";
/// Header of a 2-torus density table.
const HEADER_2D: &str = "i0,i1,x0,x1,m";

/// Writes a density as CSV: node indices, node coordinates, and the nodal
/// value, one node per row.
pub fn export_density_csv(path: impl AsRef<Path>, m: &Density) -> Result<()> {
    let grid = m.grid();
    let mut out = String::new();
    let mut x = [0.0f64; 2];
    match grid.dim() {
        1 => {
            out.push_str(HEADER_1D);
            out.push('\n');
            for (flat, &v) in m.values().iter().enumerate() {
                grid.coords(flat, &mut x);
                out.push_str(&format!("{flat},{},{v}\n", x[0]));
            }
        }
        _ => {
            out.push_str(HEADER_2D);
            out.push('\n');
            let n = grid.n();
            for (flat, &v) in m.values().iter().enumerate() {
                grid.coords(flat, &mut x);
                out.push_str(&format!(
                    "{},{},{},{},{v}\n",
                    flat / n,
                    flat % n,
                    x[0],
                    x[1]
                ));
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_cell<T: std::str::FromStr>(cell: &str, line: usize, what: &str) -> Result<T> {
    cell.trim().parse().map_err(|_| Error::CsvParse {
        line,
        reason: format!("cannot parse {what} from {cell:?}"),
    })
}

fn check_coordinate(x: f64, index: usize, h: f64, line: usize) -> Result<()> {
    let expected = index as f64 * h;
    if (x - expected).abs() > 1e-6 {
        return Err(Error::CsvParse {
            line,
            reason: format!("coordinate {x} does not match node {index} (expected {expected})"),
        });
    }
    Ok(())
}

/// Reads a density table written by [`export_density_csv`]. Rows must cover
/// every node exactly once; values must be nonnegative and finite; total
/// mass must be within 1e-6 of 1 and is then renormalized exactly.
pub fn import_density_csv(path: impl AsRef<Path>) -> Result<Density> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::CsvParse {
        line: 1,
        reason: "empty file".to_string(),
    })?;
    let dim = match header.trim_end() {
        HEADER_1D => 1,
        HEADER_2D => 2,
        other => {
            return Err(Error::CsvParse {
                line: 1,
                reason: format!(
                    "unrecognized header {other:?} (expected {HEADER_1D:?} or {HEADER_2D:?})"
                ),
            })
        }
    };
    // First pass: raw rows, so the node count is known before indexing.
    let mut rows = Vec::new();
    for (zero_based, raw) in lines {
        let line = zero_based + 1;
        let row = raw.trim_end();
        if row.is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        let expected_cells = if dim == 1 { 3 } else { 5 };
        if cells.len() != expected_cells {
            return Err(Error::CsvParse {
                line,
                reason: format!("expected {expected_cells} columns, found {}", cells.len()),
            });
        }
        rows.push((line, cells.iter().map(|c| c.to_string()).collect::<Vec<_>>()));
    }
    let n = if dim == 1 {
        rows.len()
    } else {
        let n = (rows.len() as f64).sqrt().round() as usize;
        if n * n != rows.len() {
            return Err(Error::InvalidParameter(format!(
                "2-torus table has {} rows, not a perfect square",
                rows.len()
            )));
        }
        n
    };
    let grid = TorusGrid::new(dim, n)?;
    let mut values = vec![0.0f64; grid.node_count()];
    let mut seen = vec![false; grid.node_count()];
    for (line, cells) in rows {
        let flat = if dim == 1 {
            let i: usize = parse_cell(&cells[0], line, "node index")?;
            if i >= n {
                return Err(Error::CsvParse {
                    line,
                    reason: format!("node index {i} out of range (file has {n} rows)"),
                });
            }
            check_coordinate(parse_cell(&cells[1], line, "coordinate")?, i, grid.h(), line)?;
            i
        } else {
            let i0: usize = parse_cell(&cells[0], line, "axis-0 index")?;
            let i1: usize = parse_cell(&cells[1], line, "axis-1 index")?;
            if i0 >= n || i1 >= n {
                return Err(Error::CsvParse {
                    line,
                    reason: format!("node index ({i0}, {i1}) out of range for {n} nodes per axis"),
                });
            }
            check_coordinate(parse_cell(&cells[2], line, "coordinate")?, i0, grid.h(), line)?;
            check_coordinate(parse_cell(&cells[3], line, "coordinate")?, i1, grid.h(), line)?;
            i0 * n + i1
        };
        if seen[flat] {
            return Err(Error::CsvParse {
                line,
                reason: format!("duplicate node index {flat}"),
            });
        }
        seen[flat] = true;
        let v: f64 = parse_cell(cells.last().expect("nonempty"), line, "density value")?;
        if !v.is_finite() {
            return Err(Error::CsvParse {
                line,
                reason: format!("density value {v} is not finite"),
            });
        }
        if v < 0.0 {
            return Err(Error::CsvParse {
                line,
                reason: format!("negative density value {v}"),
            });
        }
        values[flat] = v;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::InvalidParameter(format!(
            "density table never lists node {missing}"
        )));
    }
    let mass: f64 = values.iter().sum::<f64>() * grid.cell_volume();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { mass, tol: 1e-6 });
    }
    for v in &mut values {
        *v /= mass;
    }
    Density::new(ScalarField::new(grid, values)?)
}

// ── Run tables ──────────────────────────────────────────────────────────────

/// Writes a diagnostics report: one row per sampled time with the energy
/// split, the Lyapunov value, and the identity residuals (blank at the
/// endpoints, where no centered slope exists).
pub fn write_diagnostics_csv(path: impl AsRef<Path>, report: &DiagnosticsReport) -> Result<()> {
    let mut out = String::from("t,ent,fisher,pot,phi,qen,lyap,lyap_residual_abs,lyap_residual_rel\n");
    for row in &report.rows {
        let abs = row.residual_abs.map(|v| v.to_string()).unwrap_or_default();
        let rel = row.residual_rel.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{abs},{rel}\n",
            row.t, row.entropy, row.fisher, row.potential, row.free_energy, row.q_energy,
            row.lyapunov
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes shift-bound rows as CSV.
pub fn write_shift_bound_csv(path: impl AsRef<Path>, rows: &[ShiftBoundRow]) -> Result<()> {
    let mut out = String::from("s,t,lhs,rhs,pass\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.s, row.t, row.lhs, row.rhs, row.pass
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes a stationary-solver convergence history as CSV.
pub fn write_history_csv(path: impl AsRef<Path>, history: &[OuterRecord]) -> Result<()> {
    let mut out = String::from("iter,W1_step,r_hjb,r_fp,r_const\n");
    for record in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            record.iter,
            record.gap,
            record.residual.hjb,
            record.residual.fokker_planck,
            record.residual.derivative_oscillation
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

// ── Trajectory export ───────────────────────────────────────────────────────

/// Index of a trajectory directory: the mesh, the grid, and which time
/// steps have field snapshots.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryManifest {
    pub schema: u32,
    pub dim: usize,
    pub n: usize,
    pub mesh: TimeMesh,
    pub dt: f64,
    pub snapshot_stride: usize,
    /// Mesh step of each snapshot; snapshot ordinal i lives in
    /// `u_{i:04}.tgf` / `m_{i:04}.tgf`.
    pub snapshot_steps: Vec<usize>,
}

/// Exports a solved trajectory into `dir`: `mesh.json` with the manifest,
/// strided cost/density snapshots `u_0000.tgf`, `m_0000.tgf`, … (the final
/// step always included), and `trajectory.csv` with one summary row per
/// mesh time.
pub fn export_trajectory(
    dir: impl AsRef<Path>,
    solution: &MfgSolution,
    stride: usize,
) -> Result<TrajectoryManifest> {
    if stride == 0 {
        return Err(Error::InvalidParameter(
            "snapshot stride must be at least 1".to_string(),
        ));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let last = solution.mesh.steps();
    let mut snapshot_steps: Vec<usize> = (0..=last).step_by(stride).collect();
    if snapshot_steps.last() != Some(&last) {
        snapshot_steps.push(last);
    }
    for (ordinal, &step) in snapshot_steps.iter().enumerate() {
        write_field(dir.join(format!("u_{ordinal:04}.tgf")), &solution.u_flow[step])?;
        write_field(
            dir.join(format!("m_{ordinal:04}.tgf")),
            solution.m_flow[step].field(),
        )?;
    }
    let grid = solution.m_flow[0].grid().clone();
    let uniform = Density::uniform(&grid);
    let mut first_mode = vec![0i64; grid.dim()];
    first_mode[0] = 1;
    let mut csv = String::from("i,t,u_sup,m_min,m_max,tv_uniform,q1\n");
    for (i, (u, m)) in solution.u_flow.iter().zip(&solution.m_flow).enumerate() {
        let m_min = m.values().iter().copied().fold(f64::INFINITY, f64::min);
        let m_max = m.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let q1 = fourier_moment(m, &first_mode)?.q();
        csv.push_str(&format!(
            "{i},{},{},{m_min},{m_max},{},{q1}\n",
            solution.mesh.time(i),
            u.sup_norm(),
            total_variation(m, &uniform)
        ));
    }
    fs::write(dir.join("trajectory.csv"), csv)?;
    let manifest = TrajectoryManifest {
        schema: 1,
        dim: grid.dim(),
        n: grid.n(),
        mesh: solution.mesh,
        dt: solution.mesh.dt(),
        snapshot_stride: stride,
        snapshot_steps,
    };
    let mut file = fs::File::create(dir.join("mesh.json"))?;
    file.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(manifest)
}

// ── Tests ───────────────────────────────────────────────────────────────────
