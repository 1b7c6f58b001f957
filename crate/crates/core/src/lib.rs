//! Multi-focus image fusion driven by a dual-channel pulse-coupled neural
//! network with an additive fusion pool.
//!
//! The pipeline is:
//!
//! 1. compute a focus-measure map for each source ([`measure`]);
//! 2. turn the two maps into complementary sigmoid weights ([`weighting`]);
//! 3. run the network on the normalized sources ([`pcnn`]);
//! 4. read the fused image off the network output ([`pipeline::fuse`]).
//!
//! [`metrics`] provides the reference-based quality criteria and
//! [`pipeline`] also generates synthetic multi-focus pairs for testing.

pub mod error;
pub mod grid;
pub mod measure;
pub mod metrics;
pub mod pcnn;
pub mod pipeline;
pub mod weighting;

pub use error::{FusionError, Result};
pub use grid::{convolve3x3, normalize, quantize, window_sum, Kernel3x3, PixelGrid, ScalarField};
pub use measure::{measure_map, MeasureConfig, MeasureKind};
pub use metrics::{
    average_cross_entropy, cross_entropy, psnr, rmse, ssim, ssim_with_mode, MetricsReport, SsimMode,
};
pub use pcnn::{
    idc_step, run_dc, run_idc, run_model, ModelKind, Network, NetworkInputs, NeuronState,
    OpCounters, PcnnConfig, PcnnRun,
};
pub use pipeline::{
    evaluate, fuse, fuse_and_evaluate, measure_sweep, synthesize_pair, textured_reference,
    FusionConfig, FusionOutcome, SplitMode, SweepRow, SynthesisSpec,
};
pub use weighting::{weights_from_measures, WeightConfig};
