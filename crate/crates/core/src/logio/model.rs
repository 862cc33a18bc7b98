//! Plain-text matrix files: a `rows cols` header line, then one line of
//! space-separated decimals per row. Values are written in Rust's shortest
//! round-trip form, so reading a written file restores it bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::agents::{Agent, AgentModel, AgentSpec, PolicyModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

pub fn write_matrix_to(m: &Matrix) -> String {
    assert_eq!(m.data.len(), m.rows * m.cols, "matrix data does not match its shape");
    let mut out = format!("{} {}\n", m.rows, m.cols);
    for r in 0..m.rows {
        let row = &m.data[r * m.cols..(r + 1) * m.cols];
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix_from(text: &str) -> Result<Matrix, ModelFileError> {
    let bad = |line: usize, message: String| ModelFileError::Malformed { line, message };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "missing shape header".into()))?;
    let shape: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|e| bad(1, format!("bad shape header: {e}")))?;
    let [rows, cols] = shape[..] else {
        return Err(bad(1, "shape header must be `rows cols`".into()));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let number = r + 2;
        let line = lines.next().ok_or_else(|| bad(number, format!("expected {rows} rows")))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| bad(number, format!("{e}")))?;
        if values.len() != cols {
            return Err(bad(number, format!("expected {cols} values, found {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(bad(number, format!("non-finite value {v}")));
        }
        data.extend(values);
    }
    if let Some((i, _)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
        return Err(bad(rows + 2 + i, "trailing data after the last row".into()));
    }
    Ok(Matrix { rows, cols, data })
}

pub fn write_matrix(m: &Matrix, path: &Path) -> Result<(), ModelFileError> {
    std::fs::write(path, write_matrix_to(m)).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_matrix(path: &Path) -> Result<Matrix, ModelFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_matrix_from(&text)
}

impl From<&PolicyModel> for Matrix {
    fn from(m: &PolicyModel) -> Self {
        Matrix {
            rows: m.num_actions(),
            cols: m.dim(),
            data: m.weights().to_vec(),
        }
    }
}

/// File name of an agent's model inside a model directory.
pub fn model_file_name(label: &str) -> String {
    format!("{label}.model")
}

/// Writes the model of every agent that has one (linear weights as a
/// `P × (P+1)` matrix, popularity as `1 × P`). Returns the written paths.
pub fn save_agents(agents: &[Agent], dir: &Path) -> Result<Vec<PathBuf>, ModelFileError> {
    std::fs::create_dir_all(dir).map_err(|source| ModelFileError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for agent in agents {
        let matrix = match &agent.model {
            AgentModel::None => continue,
            AgentModel::Popularity(freq) => Matrix {
                rows: 1,
                cols: freq.len(),
                data: freq.clone(),
            },
            AgentModel::Linear(m) => Matrix::from(m),
        };
        let path = dir.join(model_file_name(&agent.label()));
        write_matrix(&matrix, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Rebuilds agents from their specs and the files written by
/// [`save_agents`], checking each shape against `num_products`.
pub fn load_agents(specs: &[AgentSpec], num_products: usize, dir: &Path) -> Result<Vec<Agent>, ModelFileError> {
    specs
        .iter()
        .map(|spec| {
            let mut agent = Agent::untrained(spec.clone(), num_products);
            let expected = match agent.model {
                AgentModel::None => return Ok(agent),
                AgentModel::Popularity(_) => (1, num_products),
                AgentModel::Linear(_) => (num_products, num_products + 1),
            };
            let path = dir.join(model_file_name(&agent.label()));
            let m = read_matrix(&path)?;
            if (m.rows, m.cols) != expected {
                return Err(ModelFileError::Malformed {
                    line: 1,
                    message: format!(
                        "{}: shape {}x{} does not match {}x{}",
                        path.display(),
                        m.rows,
                        m.cols,
                        expected.0,
                        expected.1
                    ),
                });
            }
            agent.model = match agent.model {
                AgentModel::Popularity(_) => AgentModel::Popularity(m.data),
                _ => AgentModel::Linear(PolicyModel::from_weights(m.rows, m.cols, m.data)),
            };
            Ok(agent)
        })
        .collect()
}
