//! Shared fixtures for the criterion benches.

use idcfuse::{
    normalize, synthesize_pair, textured_reference, PixelGrid, ScalarField, SynthesisSpec,
};

/// A synthetic multi-focus pair of side `size` and its sharp reference.
pub fn fixture(size: usize, seed: u64) -> (PixelGrid, PixelGrid, PixelGrid) {
    let reference = textured_reference(size, size, seed).expect("positive size");
    let (a, b) = synthesize_pair(&reference, &SynthesisSpec::default()).expect("size >= 2");
    (a, b, reference)
}

/// Normalized stimuli with the complementary weights the pipeline would use.
pub fn network_inputs(size: usize, seed: u64) -> [ScalarField; 4] {
    let (a, b, _) = fixture(size, seed);
    let outcome = idcfuse::fuse(&a, &b, &idcfuse::FusionConfig::default()).expect("valid fixture");
    [
        normalize(&a),
        normalize(&b),
        outcome.weight_a,
        outcome.weight_b,
    ]
}
