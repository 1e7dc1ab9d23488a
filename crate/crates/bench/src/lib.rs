//! Criterion benchmarks for the fraclab operators; see benches/operators.rs.
