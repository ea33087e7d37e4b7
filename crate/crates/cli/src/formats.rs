//! On-disk formats.
//!
//! ACS1 binary matrix, little-endian:
//!
//! ```text
//! offset 0   4 bytes  magic "ACS1"
//! offset 4   u32      rows
//! offset 8   u32      cols
//! offset 12  payload  rows·cols u8 (states) or rows·cols f64 (reals), row-major
//! ```
//!
//! The payload type follows from the file length. Models are a 1-row f64
//! matrix holding W (row-major, n_hidden × n_visible), then a, then b, with a
//! JSON sidecar naming each tensor.
//!
//! CSV files start with `#`-prefixed preamble lines: the schema version
//! (`# acs-csv <major>.<minor>`), the config hash and the seed. Readers reject
//! an unknown major version.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use acs_core::targets::RbmModel;
use acs_core::State;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"ACS1";
pub const CSV_MAJOR: u32 = 1;
pub const CSV_MINOR: u32 = 0;
pub const JSON_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Matrix {
    U8 { rows: usize, cols: usize, data: Vec<u8> },
    F64 { rows: usize, cols: usize, data: Vec<f64> },
}

impl Matrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Matrix::U8 { rows, cols, .. } | Matrix::F64 { rows, cols, .. } => (*rows, *cols),
        }
    }
}

fn header(rows: usize, cols: usize) -> CliResult<Vec<u8>> {
    let r = u32::try_from(rows).map_err(|_| CliError::Runtime(format!("{rows} rows exceed u32")))?;
    let c = u32::try_from(cols).map_err(|_| CliError::Runtime(format!("{cols} columns exceed u32")))?;
    let mut out = MAGIC.to_vec();
    out.extend_from_slice(&r.to_le_bytes());
    out.extend_from_slice(&c.to_le_bytes());
    Ok(out)
}

pub fn encode_matrix(m: &Matrix) -> CliResult<Vec<u8>> {
    let (rows, cols) = m.shape();
    let mut out = header(rows, cols)?;
    match m {
        Matrix::U8 { data, .. } => out.extend_from_slice(data),
        Matrix::F64 { data, .. } => data.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> CliResult<Matrix> {
    let bad = |m: &str| CliError::Runtime(format!("malformed ACS1 file: {m}"));
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(bad("missing ACS1 magic"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[12..];
    let n = rows * cols;
    if payload.len() == n {
        Ok(Matrix::U8 {
            rows,
            cols,
            data: payload.to_vec(),
        })
    } else if payload.len() == 8 * n {
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Matrix::F64 { rows, cols, data })
    } else {
        Err(bad(&format!("payload of {} bytes fits neither u8 nor f64 for {rows}x{cols}", payload.len())))
    }
}

pub fn write_matrix(path: &Path, m: &Matrix) -> CliResult<()> {
    fs::write(path, encode_matrix(m)?)?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    decode_matrix(&bytes)
}

pub fn states_to_matrix(states: &[State], dims: usize) -> CliResult<Matrix> {
    let mut data = Vec::with_capacity(states.len() * dims);
    for s in states {
        for &v in s.values() {
            data.push(u8::try_from(v).map_err(|_| CliError::Runtime(format!("state value {v} exceeds u8")))?);
        }
    }
    Ok(Matrix::U8 {
        rows: states.len(),
        cols: dims,
        data,
    })
}

pub fn matrix_to_states(m: &Matrix) -> CliResult<Vec<State>> {
    match m {
        Matrix::U8 { cols, data, .. } => {
            if *cols == 0 {
                return Ok(Vec::new());
            }
            Ok(data
                .chunks_exact(*cols)
                .map(|r| State::new(r.iter().map(|&v| v as u32).collect()))
                .collect())
        }
        Matrix::F64 { .. } => Err(CliError::Runtime("expected a u8 state matrix, found f64".into())),
    }
}

pub fn write_states(path: &Path, states: &[State], dims: usize) -> CliResult<()> {
    write_matrix(path, &states_to_matrix(states, dims)?)
}

pub fn read_states(path: &Path) -> CliResult<Vec<State>> {
    matrix_to_states(&read_matrix(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub format_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub n_visible: usize,
    pub n_hidden: usize,
    pub tensors: Vec<TensorEntry>,
    /// SHA-256 of the ACS1 file.
    pub sha256: String,
}

pub fn sidecar_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("json")
}

pub fn write_model(path: &Path, model: &RbmModel, config_hash: &str, seed: u64) -> CliResult<()> {
    let (nv, nh) = (model.n_visible(), model.n_hidden());
    let data: Vec<f64> = model
        .weights()
        .iter()
        .chain(model.hidden_bias())
        .chain(model.visible_bias())
        .copied()
        .collect();
    let bytes = encode_matrix(&Matrix::F64 {
        rows: 1,
        cols: data.len(),
        data,
    })?;
    fs::write(path, &bytes)?;
    let sidecar = ModelSidecar {
        format_version: JSON_FORMAT_VERSION,
        config_hash: config_hash.to_string(),
        seed,
        n_visible: nv,
        n_hidden: nh,
        tensors: vec![
            TensorEntry {
                name: "W".into(),
                offset: 0,
                shape: vec![nh, nv],
            },
            TensorEntry {
                name: "a".into(),
                offset: nh * nv,
                shape: vec![nh],
            },
            TensorEntry {
                name: "b".into(),
                offset: nh * nv + nh,
                shape: vec![nv],
            },
        ],
        sha256: sha256_hex(&bytes),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(())
}

pub fn read_model(path: &Path) -> CliResult<RbmModel> {
    let side_path = sidecar_path(path);
    let sidecar: ModelSidecar = serde_json::from_str(
        &fs::read_to_string(&side_path).map_err(|e| CliError::Runtime(format!("{}: {e}", side_path.display())))?,
    )?;
    if sidecar.format_version != JSON_FORMAT_VERSION {
        return Err(CliError::Runtime(format!("unsupported model format version {}", sidecar.format_version)));
    }
    let bytes = fs::read(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    if sha256_hex(&bytes) != sidecar.sha256 {
        return Err(CliError::Runtime(format!("{} does not match its sidecar checksum", path.display())));
    }
    let data = match decode_matrix(&bytes)? {
        Matrix::F64 { data, .. } => data,
        Matrix::U8 { .. } => return Err(CliError::Runtime("model payload must be f64".into())),
    };
    let tensor = |name: &str| -> CliResult<Vec<f64>> {
        let t = sidecar
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| CliError::Runtime(format!("model sidecar lacks tensor {name}")))?;
        let len: usize = t.shape.iter().product();
        data.get(t.offset..t.offset + len)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| CliError::Runtime(format!("tensor {name} runs past the payload")))
    };
    Ok(RbmModel::new(tensor("W")?, tensor("a")?, tensor("b")?)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the preamble and returns a CSV writer over the same file.
pub fn csv_writer(path: &Path, config_hash: &str, seed: Option<u64>) -> CliResult<csv::Writer<fs::File>> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# acs-csv {CSV_MAJOR}.{CSV_MINOR}")?;
    writeln!(f, "# config_hash {config_hash}")?;
    match seed {
        Some(s) => writeln!(f, "# seed {s}")?,
        None => writeln!(f, "# seed all")?,
    }
    Ok(csv::Writer::from_writer(f))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Runtime(format!("CSV lacks column {name}")))
    }
}

pub fn read_csv(path: &Path) -> CliResult<CsvTable> {
    let f = fs::File::open(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut reader = BufReader::new(f);
    let mut config_hash = String::new();
    let mut seed = None;
    let mut version_seen = false;
    let mut rest = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let Some(body) = line.strip_prefix('#') else {
            rest.push_str(&line);
            break;
        };
        let mut parts = body.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some("acs-csv"), Some(v)) => {
                let major: u32 = v
                    .split('.')
                    .next()
                    .and_then(|m| m.parse().ok())
                    .ok_or_else(|| CliError::Runtime(format!("bad CSV version {v}")))?;
                if major != CSV_MAJOR {
                    return Err(CliError::Runtime(format!(
                        "{}: CSV schema major version {major} is not supported (expected {CSV_MAJOR})",
                        path.display()
                    )));
                }
                version_seen = true;
            }
            (Some("config_hash"), Some(h)) => config_hash = h.to_string(),
            (Some("seed"), Some(s)) => seed = s.parse().ok(),
            _ => {}
        }
    }
    if !version_seen {
        return Err(CliError::Runtime(format!("{}: missing acs-csv version line", path.display())));
    }
    reader.read_to_string(&mut rest)?;
    let mut csv = csv::Reader::from_reader(rest.as_bytes());
    let headers = csv.headers()?.iter().map(str::to_string).collect();
    let rows = csv
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok(CsvTable {
        config_hash,
        seed,
        headers,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip_and_layout() {
        let m = Matrix::U8 {
            rows: 2,
            cols: 3,
            data: vec![0, 1, 1, 2, 0, 255],
        };
        let bytes = encode_matrix(&m).unwrap();
        assert_eq!(&bytes[..12], &[b'A', b'C', b'S', b'1', 2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(decode_matrix(&bytes).unwrap(), m);
        let f = Matrix::F64 {
            rows: 1,
            cols: 2,
            data: vec![1.5, -0.25],
        };
        let bytes = encode_matrix(&f).unwrap();
        assert_eq!(bytes.len(), 12 + 16);
        assert_eq!(&bytes[12..20], &1.5f64.to_le_bytes());
        assert_eq!(decode_matrix(&bytes).unwrap(), f);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(decode_matrix(b"ACS2\0\0\0\0\0\0\0\0").is_err());
        let mut bytes = encode_matrix(&Matrix::U8 {
            rows: 2,
            cols: 2,
            data: vec![0; 4],
        })
        .unwrap();
        bytes.push(0);
        assert!(decode_matrix(&bytes).is_err());
    }
}
