//! Flat little-endian binary dumps of Wigner functions and density matrices,
//! each paired with a JSON sidecar that carries the grid and provenance.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::density::DensityMatrix;
use super::grid::PhaseSpaceGrid;
use super::wigner::WignerFunction;
use crate::error::{EchoError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub hbar: f64,
}

impl GridHeader {
    pub fn of<T: Real>(g: &PhaseSpaceGrid<T>) -> Self {
        Self {
            n_points: g.n_points(),
            x_min: g.x_min().as_f64(),
            x_max: g.x_max().as_f64(),
            hbar: g.hbar().as_f64(),
        }
    }

    pub fn to_grid(&self) -> Result<PhaseSpaceGrid<f64>> {
        PhaseSpaceGrid::new(self.n_points, self.x_min, self.x_max, self.hbar)
    }
}

/// Sidecar describing a `.bin` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    /// `"wigner"` or `"density_matrix"`.
    pub kind: String,
    pub grid: GridHeader,
    pub time: f64,
    pub run_id: String,
    /// `[rows, cols]`.
    pub shape: [usize; 2],
    /// `"f64le"` for Wigner values, `"c128le"` (re, im interleaved) for
    /// density matrices.
    pub dtype: String,
    /// Axis meaning, row-major.
    pub layout: String,
}

fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| EchoError::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_pair(bin: &Path, payload: Vec<u8>, header: &SnapshotHeader) -> Result<()> {
    write_atomic(bin, &payload)?;
    let json = serde_json::to_vec_pretty(header).map_err(|e| EchoError::Io(e.to_string()))?;
    write_atomic(&sidecar_path(bin), &json)
}

/// Writes `W(x_i, p_j)` row-major as little-endian `f64`.
pub fn write_wigner<T: Real>(bin: &Path, w: &WignerFunction<T>, time: f64, run_id: &str) -> Result<()> {
    let n = w.grid().n_points();
    let mut payload = Vec::with_capacity(n * n * 8);
    for v in w.values().iter() {
        payload.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    let header = SnapshotHeader {
        kind: "wigner".into(),
        grid: GridHeader::of(w.grid()),
        time,
        run_id: run_id.into(),
        shape: [n, n],
        dtype: "f64le".into(),
        layout: "rows: x_i = x_min + i dx; cols: p_j = (j - n/2) dp".into(),
    };
    write_pair(bin, payload, &header)
}

/// Writes `rho(x_i, x_j)` row-major as interleaved little-endian `f64` pairs.
pub fn write_density<T: Real>(bin: &Path, rho: &DensityMatrix<T>, time: f64, run_id: &str) -> Result<()> {
    let n = rho.grid().n_points();
    let mut payload = Vec::with_capacity(n * n * 16);
    for c in rho.elements().iter() {
        payload.extend_from_slice(&c.re.as_f64().to_le_bytes());
        payload.extend_from_slice(&c.im.as_f64().to_le_bytes());
    }
    let header = SnapshotHeader {
        kind: "density_matrix".into(),
        grid: GridHeader::of(rho.grid()),
        time,
        run_id: run_id.into(),
        shape: [n, n],
        dtype: "c128le".into(),
        layout: "rows: x_i; cols: x_j; x_k = x_min + k dx".into(),
    };
    write_pair(bin, payload, &header)
}

pub fn read_header(bin: &Path) -> Result<SnapshotHeader> {
    let text = fs::read(sidecar_path(bin))?;
    serde_json::from_slice(&text).map_err(|e| EchoError::Io(e.to_string()))
}

pub fn read_wigner(bin: &Path) -> Result<(SnapshotHeader, WignerFunction<f64>)> {
    let header = read_header(bin)?;
    if header.kind != "wigner" || header.dtype != "f64le" {
        return Err(EchoError::Io(format!("{} is not a Wigner snapshot", bin.display())));
    }
    let bytes = fs::read(bin)?;
    let [r, c] = header.shape;
    if bytes.len() != r * c * 8 {
        return Err(EchoError::Io(format!("{}: truncated payload", bin.display())));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let grid = header.grid.to_grid()?;
    let arr = ndarray::Array2::from_shape_vec((r, c), values)
        .map_err(|e| EchoError::Io(e.to_string()))?;
    let w = WignerFunction::from_values(grid, arr)?;
    Ok((header, w))
}
