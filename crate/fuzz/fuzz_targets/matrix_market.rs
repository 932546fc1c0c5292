#![no_main]

use libfuzzer_sys::fuzz_target;

use fuzzydr::sparse::SparseMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = SparseMatrix::parse_matrix_market(data) {
        // anything that parses must satisfy the CSR invariants and
        // survive a write/re-read round trip
        m.validate().expect("parsed matrix must be valid");
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let again = SparseMatrix::parse_matrix_market(&buf).unwrap();
        assert_eq!(m.to_dense(), again.to_dense());
    }
});
