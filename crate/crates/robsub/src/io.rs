//! File formats: Matrix Market and headerless CSV matrices, one-column CSV
//! vectors, and whitespace edge lists.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use nalgebra_sparse::io::{load_coo_from_matrix_market_file, save_to_matrix_market_file};
use nalgebra_sparse::CooMatrix;
use robsub_core::{CsrMatrix, Matrix, WeightVector};

use crate::error::CliError;

/// Reads `.mtx` as Matrix Market (sparse result) and anything else as a
/// headerless comma-separated dense matrix.
pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let is_mtx = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx"));
    if is_mtx {
        read_matrix_market(path)
    } else {
        Ok(Matrix::Dense(read_csv_matrix(path)?))
    }
}

pub fn read_matrix_market(path: &Path) -> Result<Matrix, CliError> {
    let coo: CooMatrix<f64> = load_coo_from_matrix_market_file(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let trip: Vec<(usize, usize, f64)> = coo.triplet_iter().map(|(i, j, &v)| (i, j, v)).collect();
    let csr = CsrMatrix::from_triplets(coo.nrows(), coo.ncols(), &trip)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(Matrix::Sparse(csr))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_csv_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Io(format!("{}: record {}: {e}", path.display(), line + 1)))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::Io(format!(
                    "{}: record {} has {} fields, expected {}",
                    path.display(),
                    line + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

/// One value per line (a single CSV column).
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let m = read_csv_matrix(path)?;
    if m.ncols() != 1 {
        return Err(CliError::Io(format!("{}: expected one column, found {}", path.display(), m.ncols())));
    }
    Ok(m.iter().copied().collect())
}

pub fn read_weights(path: &Path) -> Result<WeightVector, CliError> {
    WeightVector::new(read_vector(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Undirected edges, one `u v` pair per line; `#` starts a comment. Returns
/// the vertex count (largest index + 1) and the edges.
pub fn read_edge_list(path: &Path) -> Result<(usize, Vec<(usize, usize)>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_edge_list(text: &str) -> Result<(usize, Vec<(usize, usize)>), String> {
    let mut edges = Vec::new();
    let mut n = 0;
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(format!("line {}: expected two vertex indices", ln + 1));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|e| format!("line {}: {e}", ln + 1));
        let (u, v) = (parse(parts[0])?, parse(parts[1])?);
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v));
    }
    Ok((n, edges))
}

/// Writes every entry of a dense matrix, zeros included, in coordinate form.
pub fn write_matrix_market(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    let (r, c) = m.shape();
    let mut coo = CooMatrix::new(r, c);
    for j in 0..c {
        for i in 0..r {
            coo.push(i, j, m[(i, j)]);
        }
    }
    save_to_matrix_market_file(&coo, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_sparse_matrix_market(path: &Path, m: &CsrMatrix) -> Result<(), CliError> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            coo.push(i, j, v);
        }
    }
    save_to_matrix_market_file(&coo, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for x in v {
        w.write_record([format!("{x:e}")]).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
