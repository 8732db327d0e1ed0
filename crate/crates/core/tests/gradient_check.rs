//! Backward pass through loss and encoder against central differences.

mod support;

use support::{embedding_check, instances, weight_check, TOL};

#[test]
fn weights_match_finite_differences() {
    for (seed, inst) in instances(0, 25) {
        let err = weight_check(&inst);
        assert!(err <= TOL, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn embeddings_match_finite_differences() {
    for (seed, inst) in instances(100, 25) {
        let err = embedding_check(&inst);
        assert!(err <= TOL, "seed {seed}: relative error {err:e}");
    }
}
