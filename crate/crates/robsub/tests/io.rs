use std::fs;

use nalgebra::DMatrix;
use robsub::error::CliError;
use robsub::io::{parse_edge_list, read_matrix, read_vector, read_weights, write_matrix_market, write_vector};
use robsub_core::Error;

#[test]
fn matrix_market_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.mtx");
    let m = DMatrix::from_row_slice(2, 3, &[1.5, 0.0, -2.0, 0.0, 3.25, 1e-300]);
    write_matrix_market(&p, &m).unwrap();
    assert_eq!(read_matrix(&p).unwrap().to_dense(), m);
}

#[test]
fn matrix_market_symmetric_and_array() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.mtx");
    fs::write(&p, "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4\n2 1 -1\n").unwrap();
    assert_eq!(read_matrix(&p).unwrap().to_dense(), DMatrix::from_row_slice(2, 2, &[4.0, -1.0, -1.0, 0.0]));
    let q = dir.path().join("d.mtx");
    fs::write(&q, "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
    assert_eq!(read_matrix(&q).unwrap().to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
}

#[test]
fn csv_matrix_and_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.csv");
    fs::write(&p, "1, 2,3\n# comment\n4,5,6\n").unwrap();
    assert_eq!(read_matrix(&p).unwrap().to_dense(), DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
    let ragged = dir.path().join("r.csv");
    fs::write(&ragged, "1,2\n3\n").unwrap();
    assert!(matches!(read_matrix(&ragged), Err(CliError::Io(_))));
    let v = dir.path().join("v.csv");
    write_vector(&v, &[0.1, -2.0, 1e10]).unwrap();
    assert_eq!(read_vector(&v).unwrap(), [0.1, -2.0, 1e10]);
    let w = dir.path().join("w.csv");
    fs::write(&w, "1\n0.5\n").unwrap();
    assert!(matches!(read_weights(&w), Err(CliError::Config(_))));
}

#[test]
fn edge_lists() {
    assert_eq!(parse_edge_list("0 1\n\n# x\n1 2 # y\n").unwrap(), (3, vec![(0, 1), (1, 2)]));
    assert!(parse_edge_list("0 1 2\n").is_err());
    assert!(parse_edge_list("a b\n").is_err());
}

#[test]
fn error_classes_map_to_exit_codes() {
    assert_eq!(CliError::from(Error::NonRegularGraph).exit_code(), 3);
    assert_eq!(CliError::from(Error::ZeroScores).exit_code(), 4);
    assert_eq!(CliError::from(Error::RecursionDepth { depth: 9, limit: 8 }).exit_code(), 4);
    assert_eq!(CliError::Io("x".into()).exit_code(), 2);
}
