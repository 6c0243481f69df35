//! Benchmarks live in `benches/`; this library only hosts shared fixtures.

use katugampola::{Grading, Mesh};

pub fn bench_mesh(n: usize) -> Mesh {
    Mesh::new(1.0, 2.0, 1.0, n, 3.0, Grading::Left).expect("valid mesh")
}
