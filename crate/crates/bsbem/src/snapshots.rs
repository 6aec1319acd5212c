//! Solver-agnostic snapshot files: a TOML sidecar plus a raw payload.
//!
//! The payload holds `n_nodes * n_samples * n_times` little-endian IEEE-754
//! doubles in column-major order, where column `s * n_times + j` is the
//! field of sample `s` at time index `j` (sample-major ordering). The
//! sidecar names the payload file relative to its own directory.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use bsbem_core::pod::SnapshotMatrix;
use bsbem_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const FORMAT_NAME: &str = "bsbem-snapshots";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub n_nodes: usize,
    pub n_samples: usize,
    pub n_times: usize,
    pub ordering: String,
    pub layout: String,
    pub endianness: String,
    pub dtype: String,
    pub payload: PathBuf,
    pub times: Vec<f64>,
    pub parameter_names: Vec<String>,
    /// Physical parameter values, one row per sample.
    pub parameters: Vec<Vec<f64>>,
    /// Optional node coordinates, one row per node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<Vec<f64>>>,
}

/// A validated snapshot set.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub snapshots: SnapshotMatrix,
    pub times: Vec<f64>,
    pub parameter_names: Vec<String>,
    pub parameters: Vec<Vec<f64>>,
    pub coordinates: Option<Vec<Vec<f64>>>,
}

/// Writes `set` as `sidecar` plus a payload named after it with a `.bin`
/// extension.
pub fn write_snapshots(sidecar: &Path, set: &SnapshotSet) -> CliResult<()> {
    let payload_name = PathBuf::from(
        sidecar
            .with_extension("bin")
            .file_name()
            .ok_or_else(|| CliError::config(format!("{} is not a file path", sidecar.display())))?,
    );
    let s = &set.snapshots;
    let header = SnapshotHeader {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        n_nodes: s.n_nodes(),
        n_samples: s.n_samples(),
        n_times: s.n_times(),
        ordering: "sample-major".into(),
        layout: "column-major".into(),
        endianness: "little".into(),
        dtype: "f64".into(),
        payload: payload_name.clone(),
        times: set.times.clone(),
        parameter_names: set.parameter_names.clone(),
        parameters: set.parameters.clone(),
        coordinates: set.coordinates.clone(),
    };
    let text = toml::to_string(&header).map_err(|e| CliError::format(sidecar, e.to_string()))?;
    std::fs::write(sidecar, text).map_err(|e| CliError::io(sidecar, e))?;

    let payload = sidecar.with_file_name(payload_name);
    let file = File::create(&payload).map_err(|e| CliError::io(&payload, e))?;
    let mut w = BufWriter::new(file);
    let values = s.values();
    for c in 0..values.ncols() {
        for i in 0..values.nrows() {
            let v = values[(i, c)];
            w.write_all(&v.to_le_bytes()).map_err(|e| CliError::io(&payload, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(&payload, e))
}

/// Reads and validates the sidecar only.
pub fn read_header(sidecar: &Path) -> CliResult<SnapshotHeader> {
    let text = std::fs::read_to_string(sidecar).map_err(|e| CliError::io(sidecar, e))?;
    let header: SnapshotHeader =
        toml::from_str(&text).map_err(|e| CliError::format(sidecar, format!("bad metadata: {e}")))?;
    let bad = |m: String| Err(CliError::format(sidecar, m));
    let expect = [
        ("format", header.format.as_str(), FORMAT_NAME),
        ("ordering", &header.ordering, "sample-major"),
        ("layout", &header.layout, "column-major"),
        ("endianness", &header.endianness, "little"),
        ("dtype", &header.dtype, "f64"),
    ];
    for (key, got, want) in expect {
        if got != want {
            return bad(format!("{key} = {got:?}, expected {want:?}"));
        }
    }
    if header.version != FORMAT_VERSION {
        return bad(format!("unsupported version {} (expected {FORMAT_VERSION})", header.version));
    }
    if header.n_nodes == 0 || header.n_samples == 0 || header.n_times == 0 {
        return bad("n_nodes, n_samples and n_times must be positive".into());
    }
    if header.times.len() != header.n_times {
        return bad(format!("times lists {} values for n_times = {}", header.times.len(), header.n_times));
    }
    if header.parameters.len() != header.n_samples {
        return bad(format!(
            "parameters has {} rows for n_samples = {}",
            header.parameters.len(),
            header.n_samples
        ));
    }
    let dim = header.parameter_names.len();
    if dim == 0 {
        return bad("parameter_names is empty".into());
    }
    if let Some(s) = header.parameters.iter().position(|row| row.len() != dim) {
        return bad(format!("parameter row {s} does not have {dim} entries"));
    }
    if let Some(coords) = &header.coordinates {
        if coords.len() != header.n_nodes {
            return bad(format!("coordinates has {} rows for n_nodes = {}", coords.len(), header.n_nodes));
        }
        let d = coords.first().map_or(0, Vec::len);
        if d == 0 || coords.iter().any(|c| c.len() != d) {
            return bad("coordinate rows must share a positive length".into());
        }
    }
    let finite = header.times.iter().chain(header.parameters.iter().flatten()).all(|v| v.is_finite());
    if !finite {
        return bad("non-finite time or parameter value".into());
    }
    Ok(header)
}

/// Reads a snapshot set, rejecting size mismatches and non-finite values.
pub fn read_snapshots(sidecar: &Path) -> CliResult<SnapshotSet> {
    let header = read_header(sidecar)?;
    let payload = sidecar.with_file_name(&header.payload);
    let (n_e, n_s, n_t) = (header.n_nodes, header.n_samples, header.n_times);
    let cols = n_s * n_t;
    let expected = (n_e * cols * 8) as u64;
    let file = File::open(&payload).map_err(|e| CliError::io(&payload, e))?;
    let actual = file.metadata().map_err(|e| CliError::io(&payload, e))?.len();
    if actual != expected {
        return Err(CliError::format(
            &payload,
            format!("payload holds {actual} bytes, expected {expected} ({n_e} x {cols} f64)"),
        ));
    }
    let mut r = BufReader::new(file);
    let mut values = Matrix::zeros(n_e, cols);
    let mut buf = vec![0u8; n_e * 8];
    for c in 0..cols {
        r.read_exact(&mut buf).map_err(|e| CliError::io(&payload, e))?;
        let col = values.col_as_slice_mut(c);
        for (i, chunk) in buf.chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            if !v.is_finite() {
                return Err(CliError::format(
                    &payload,
                    format!(
                        "non-finite value {v} at node {i}, column {c} (sample {}, time index {})",
                        c / n_t,
                        c % n_t
                    ),
                ));
            }
            col[i] = v;
        }
    }
    let snapshots = SnapshotMatrix::new(values, n_s, n_t)?;
    Ok(SnapshotSet {
        snapshots,
        times: header.times,
        parameter_names: header.parameter_names,
        parameters: header.parameters,
        coordinates: header.coordinates,
    })
}
