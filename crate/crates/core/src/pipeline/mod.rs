//! End-to-end fusion: focus measure, weighting, network, quantization.

mod synth;

use std::time::Instant;

pub use synth::{gaussian_blur, synthesize_pair, textured_reference, SplitMode, SynthesisSpec};

use crate::error::{ensure_same_dims, Result};
use crate::grid::{normalize, quantize, PixelGrid, ScalarField};
use crate::measure::{measure_map, MeasureConfig, MeasureKind};
use crate::metrics::{average_cross_entropy, psnr, rmse, ssim, MetricsReport};
use crate::pcnn::{run_model, ModelKind, OpCounters, PcnnConfig};
use crate::weighting::{weights_from_measures, WeightConfig};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FusionConfig {
    pub measure: MeasureKind,
    pub measure_cfg: MeasureConfig,
    pub weight_cfg: WeightConfig,
    pub pcnn_cfg: PcnnConfig,
    pub model: ModelKind,
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        self.measure_cfg.validate()?;
        self.weight_cfg.validate()?;
        self.pcnn_cfg.validate()
    }

    pub fn label(&self) -> String {
        format!("{}+{}", self.model, self.measure)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub fused: PixelGrid,
    /// Network output before quantization.
    pub output: ScalarField,
    pub weight_a: ScalarField,
    pub weight_b: ScalarField,
    pub counters: OpCounters,
    /// Pixels whose negative pulse was clamped to 0.
    pub clamped: usize,
    /// Wall time of measure, weighting, network and quantization; excludes I/O.
    pub wall_time_seconds: f64,
}

/// Fuses two registered images.
pub fn fuse(a: &PixelGrid, b: &PixelGrid, cfg: &FusionConfig) -> Result<FusionOutcome> {
    ensure_same_dims(a.dims(), b.dims())?;
    cfg.validate()?;
    let start = Instant::now();

    let sa = normalize(a);
    let sb = normalize(b);
    let da = measure_map(cfg.measure, &sa, &cfg.measure_cfg)?;
    let db = measure_map(cfg.measure, &sb, &cfg.measure_cfg)?;
    let (weight_a, weight_b) = weights_from_measures(&da, &db, &cfg.weight_cfg)?;
    let run = run_model(cfg.model, &sa, &sb, &weight_a, &weight_b, &cfg.pcnn_cfg)?;
    let fused = quantize(&run.output);

    let wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(FusionOutcome {
        fused,
        output: run.output,
        weight_a,
        weight_b,
        counters: run.counters,
        clamped: run.clamped,
        wall_time_seconds,
    })
}

/// CE against the sources; RMSE, PSNR and SSIM against the reference.
pub fn evaluate(
    fused: &PixelGrid,
    a: &PixelGrid,
    b: &PixelGrid,
    reference: &PixelGrid,
) -> Result<MetricsReport> {
    ensure_same_dims(fused.dims(), a.dims())?;
    ensure_same_dims(fused.dims(), b.dims())?;
    ensure_same_dims(fused.dims(), reference.dims())?;
    let ce = average_cross_entropy(a, b, fused)?;
    let err = rmse(fused, reference)?;
    Ok(MetricsReport {
        ce,
        rmse: err,
        psnr: psnr(err),
        ssim: ssim(fused, reference)?,
        wall_time_seconds: 0.0,
        counters: None,
    })
}

/// Fuses and evaluates in one go, carrying timing and counters into the report.
pub fn fuse_and_evaluate(
    a: &PixelGrid,
    b: &PixelGrid,
    reference: &PixelGrid,
    cfg: &FusionConfig,
) -> Result<(FusionOutcome, MetricsReport)> {
    let outcome = fuse(a, b, cfg)?;
    let mut report = evaluate(&outcome.fused, a, b, reference)?;
    report.wall_time_seconds = outcome.wall_time_seconds;
    report.counters = Some(outcome.counters);
    Ok((outcome, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub measure: MeasureKind,
    pub model: ModelKind,
    pub report: MetricsReport,
}

impl SweepRow {
    pub fn label(&self) -> String {
        format!("{}+{}", self.model, self.measure)
    }
}

/// Every focus measure under both models: 8 rows, DC rows first.
pub fn measure_sweep(
    a: &PixelGrid,
    b: &PixelGrid,
    reference: &PixelGrid,
    base: &FusionConfig,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(8);
    for model in [ModelKind::Dc, ModelKind::Idc] {
        for measure in MeasureKind::ALL {
            let cfg = FusionConfig {
                measure,
                model,
                ..*base
            };
            let (_, report) = fuse_and_evaluate(a, b, reference, &cfg)?;
            rows.push(SweepRow {
                measure,
                model,
                report,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::FusionError;

    #[test]
    fn identical_inputs_fuse_to_themselves() {
        let x = textured_reference(24, 20, 3).unwrap();
        for model in ModelKind::ALL {
            let cfg = FusionConfig {
                model,
                ..FusionConfig::default()
            };
            assert_eq!(fuse(&x, &x, &cfg).unwrap().fused, x);
        }
    }

    #[test]
    fn fusion_beats_either_source() {
        let reference = textured_reference(64, 64, 21).unwrap();
        let (a, b) = synthesize_pair(&reference, &SynthesisSpec::default()).unwrap();
        let out = fuse(&a, &b, &FusionConfig::default()).unwrap();
        let fused = rmse(&out.fused, &reference).unwrap();
        assert!(fused <= rmse(&a, &reference).unwrap());
        assert!(fused <= rmse(&b, &reference).unwrap());
    }

    #[test]
    fn swapping_sources_changes_at_most_one_level() {
        let reference = textured_reference(48, 40, 8).unwrap();
        let spec = SynthesisSpec {
            split: SplitMode::Quadrants,
            ..SynthesisSpec::default()
        };
        let (a, b) = synthesize_pair(&reference, &spec).unwrap();
        let cfg = FusionConfig::default();
        let ab = fuse(&a, &b, &cfg).unwrap().fused;
        let ba = fuse(&b, &a, &cfg).unwrap().fused;
        for (p, q) in ab.data().iter().zip(ba.data()) {
            assert!(p.abs_diff(*q) <= 1);
        }
    }

    #[test]
    fn pre_quantization_output_is_weighted_average() {
        let reference = textured_reference(40, 40, 2).unwrap();
        let (a, b) = synthesize_pair(&reference, &SynthesisSpec::default()).unwrap();
        let out = fuse(&a, &b, &FusionConfig::default()).unwrap();
        let (sa, sb) = (normalize(&a), normalize(&b));
        for i in 0..sa.data().len() {
            let expected =
                out.weight_a.data()[i] * sa.data()[i] + out.weight_b.data()[i] * sb.data()[i];
            assert!((out.output.data()[i] - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn evaluation_of_perfect_fusion() {
        let x = textured_reference(16, 16, 1).unwrap();
        let r = evaluate(&x, &x, &x, &x).unwrap();
        assert_eq!(r.rmse, 0.0);
        assert_eq!(r.psnr, f64::INFINITY);
        assert_eq!(r.ssim, 1.0);
        assert_eq!(r.ce, 0.0);
    }

    #[test]
    fn evaluation_psnr_is_consistent() {
        let reference = textured_reference(32, 32, 6).unwrap();
        let (a, b) = synthesize_pair(&reference, &SynthesisSpec::default()).unwrap();
        let r = evaluate(&a, &a, &b, &reference).unwrap();
        assert!(r.rmse > 0.0);
        assert!((r.psnr - 10.0 * (255.0f64 * 255.0 / (r.rmse * r.rmse)).log10()).abs() < 1e-9);
    }

    #[test]
    fn sweep_has_eight_rows() {
        let x = textured_reference(16, 16, 4).unwrap();
        let rows = measure_sweep(&x, &x, &x, &FusionConfig::default()).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.report.ssim == 1.0));
        assert!(rows.iter().all(|r| r.report.counters.is_some()));
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let a = PixelGrid::filled(8, 8, 1).unwrap();
        let b = PixelGrid::filled(8, 9, 1).unwrap();
        assert!(matches!(
            fuse(&a, &b, &FusionConfig::default()),
            Err(FusionError::DimensionMismatch { .. })
        ));
        assert!(evaluate(&a, &a, &a, &b).is_err());
    }

    #[test]
    fn too_small_for_measure_rejected() {
        let a = PixelGrid::filled(2, 2, 1).unwrap();
        assert!(matches!(
            fuse(&a, &a, &FusionConfig::default()),
            Err(FusionError::InvalidInput(_))
        ));
    }
}
