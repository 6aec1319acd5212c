//! Surrogate container file.
//!
//! Layout:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `BSBEMSUR` |
//! | 8     | metadata length `n` (u64, little endian) |
//! | n     | UTF-8 TOML metadata ([`ContainerMeta`]) |
//! | rest  | arrays listed in `metadata.arrays`, in order, each column-major little-endian f64 |
//!
//! Array offsets count from the first byte after the metadata. The
//! metadata carries the SHA-256 of that array section.

use std::path::Path;

use bsbem_core::pod::{PodBasis, TemporalModes};
use bsbem_core::rom::{RomConfig, Surrogate};
use bsbem_core::sampling::{Marginal, Parameter, UncertainInput};
use bsbem_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"BSBEMSUR";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputMeta {
    pub name: String,
    pub kind: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayMeta {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerMeta {
    pub version: u32,
    pub library_version: String,
    pub build_hash: String,
    pub rng: String,
    pub seed: u64,
    pub degrees: Vec<usize>,
    pub elements: Vec<usize>,
    pub eps_t: f64,
    pub eps_s: f64,
    pub oversample: usize,
    pub n_samples: usize,
    pub rank_deficient: bool,
    pub pod_tolerance: f64,
    pub energy_ratio: f64,
    pub numerical_rank: usize,
    pub inputs: Vec<InputMeta>,
    pub payload_sha256: String,
    pub arrays: Vec<ArrayMeta>,
}

/// A surrogate plus what the command-line tool stores next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateFile {
    pub surrogate: Surrogate,
    pub build_hash: String,
    /// `N_e x d` node coordinates, when known.
    pub coordinates: Option<Matrix>,
}

fn push_array(name: &str, m: &Matrix, arrays: &mut Vec<ArrayMeta>, payload: &mut Vec<u8>) {
    arrays.push(ArrayMeta {
        name: name.into(),
        rows: m.nrows(),
        cols: m.ncols(),
        offset: payload.len() as u64,
    });
    for c in 0..m.ncols() {
        for v in m.col_as_slice(c) {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
}

fn column(values: &[f64]) -> Matrix {
    Matrix::from_fn(values.len(), 1, |i, _| values[i])
}

impl SurrogateFile {
    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let s = &self.surrogate;
        let mut arrays = Vec::new();
        let mut payload = Vec::new();
        push_array("modes", &s.basis.modes, &mut arrays, &mut payload);
        push_array("singular_values", &column(&s.basis.singular_values), &mut arrays, &mut payload);
        for (l, x) in s.temporal.modes.iter().enumerate() {
            push_array(&format!("temporal_{l}"), x, &mut arrays, &mut payload);
        }
        push_array("coefficients", &s.coefficients, &mut arrays, &mut payload);
        push_array("times", &column(&s.times), &mut arrays, &mut payload);
        if let Some(c) = &self.coordinates {
            push_array("coordinates", c, &mut arrays, &mut payload);
        }
        let inputs = s
            .inputs
            .params()
            .iter()
            .map(|p| {
                let (lower, upper) = p.marginal.support();
                InputMeta {
                    name: p.name.clone(),
                    kind: p.marginal.kind().into(),
                    lower,
                    upper,
                }
            })
            .collect();
        let meta = ContainerMeta {
            version: CONTAINER_VERSION,
            library_version: env!("CARGO_PKG_VERSION").into(),
            build_hash: self.build_hash.clone(),
            rng: bsbem_core::sampling::RNG_ALGORITHM.into(),
            seed: s.config.seed,
            degrees: s.config.degrees.clone(),
            elements: s.config.elements.clone(),
            eps_t: s.config.eps_t,
            eps_s: s.config.eps_s,
            oversample: s.config.oversample,
            n_samples: s.n_samples,
            rank_deficient: s.rank_deficient,
            pod_tolerance: s.basis.tolerance,
            energy_ratio: s.basis.energy_ratio,
            numerical_rank: s.basis.numerical_rank,
            inputs,
            payload_sha256: sha256_hex(&payload),
            arrays,
        };
        let text = toml::to_string(&meta).map_err(|e| CliError::format("<container>", e.to_string()))?;
        let mut out = Vec::with_capacity(16 + text.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(text.len() as u64).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    /// Parses a container; `origin` is used in error messages.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> CliResult<Self> {
        let bad = |m: String| CliError::format(origin, m);
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a surrogate container (bad magic)".into()));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let meta_end = usize::try_from(n)
            .ok()
            .and_then(|n| n.checked_add(16))
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| bad(format!("metadata length {n} exceeds the file")))?;
        let text = std::str::from_utf8(&bytes[16..meta_end]).map_err(|e| bad(format!("metadata is not UTF-8: {e}")))?;
        let meta: ContainerMeta = toml::from_str(text).map_err(|e| bad(format!("bad metadata: {e}")))?;
        if meta.version != CONTAINER_VERSION {
            return Err(bad(format!(
                "container version {} is not supported (expected {CONTAINER_VERSION})",
                meta.version
            )));
        }
        let payload = &bytes[meta_end..];
        if sha256_hex(payload) != meta.payload_sha256 {
            return Err(bad("array section checksum mismatch".into()));
        }

        let mut cursor = 0u64;
        let mut arrays = std::collections::BTreeMap::new();
        for a in &meta.arrays {
            let len = (a.rows * a.cols * 8) as u64;
            if a.offset != cursor || cursor + len > payload.len() as u64 {
                return Err(bad(format!("array {} has an inconsistent offset or size", a.name)));
            }
            let start = a.offset as usize;
            let data = &payload[start..start + len as usize];
            let mut m = Matrix::zeros(a.rows, a.cols);
            for (k, chunk) in data.chunks_exact(8).enumerate() {
                m[(k % a.rows.max(1), k / a.rows.max(1))] = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            }
            arrays.insert(a.name.clone(), m);
            cursor += len;
        }
        if cursor != payload.len() as u64 {
            return Err(bad("trailing bytes after the last array".into()));
        }
        let mut take = |name: &str| arrays.remove(name).ok_or_else(|| bad(format!("missing array {name}")));
        let modes = take("modes")?;
        let singular_values = take("singular_values")?.col_as_slice(0).to_vec();
        let mut temporal = TemporalModes::default();
        for l in 0..modes.ncols() {
            temporal.modes.push(take(&format!("temporal_{l}"))?);
        }
        let coefficients = take("coefficients")?;
        let times = take("times")?.col_as_slice(0).to_vec();
        let coordinates = arrays.remove("coordinates");
        if let Some(extra) = arrays.keys().next() {
            return Err(bad(format!("unexpected array {extra}")));
        }

        let inputs = UncertainInput::new(
            meta.inputs
                .iter()
                .map(|p| match p.kind.as_str() {
                    "uniform" => Ok(Parameter {
                        name: p.name.clone(),
                        marginal: Marginal::Uniform {
                            lower: p.lower,
                            upper: p.upper,
                        },
                    }),
                    other => Err(bad(format!("unsupported marginal {other:?}"))),
                })
                .collect::<CliResult<Vec<_>>>()?,
        )
        .map_err(|e| bad(e.to_string()))?;
        let config = RomConfig {
            degrees: meta.degrees,
            elements: meta.elements,
            eps_t: meta.eps_t,
            eps_s: meta.eps_s,
            oversample: meta.oversample,
            seed: meta.seed,
        };
        let space = config.space().map_err(|e| bad(e.to_string()))?;
        let ranks: usize = temporal.modes.iter().map(|x| x.ncols()).sum();
        let consistent = coefficients.nrows() == space.n_global()
            && coefficients.ncols() == ranks
            && temporal.modes.iter().all(|x| x.nrows() == times.len())
            && coordinates.as_ref().is_none_or(|c| c.nrows() == modes.nrows());
        if !consistent {
            return Err(bad("array shapes are inconsistent with each other".into()));
        }
        let surrogate = Surrogate {
            basis: PodBasis {
                modes,
                singular_values,
                tolerance: meta.pod_tolerance,
                energy_ratio: meta.energy_ratio,
                numerical_rank: meta.numerical_rank,
            },
            temporal,
            coefficients,
            space,
            inputs,
            times,
            config,
            n_samples: meta.n_samples,
            rank_deficient: meta.rank_deficient,
        };
        Ok(Self {
            surrogate,
            build_hash: meta.build_hash,
            coordinates,
        })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}
