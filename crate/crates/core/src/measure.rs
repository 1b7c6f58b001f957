//! Per-pixel focus (sharpness) measures.
//!
//! All measures share the same `(2N+1)^2` window so they can be swapped for
//! one another in the fusion pipeline. They operate on normalized stimuli.

use std::fmt;
use std::str::FromStr;

use crate::error::{FusionError, Result};
use crate::grid::{clamp_index, window_sum, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MeasureKind {
    Variance,
    SpatialFrequency,
    EnergyOfLaplacian,
    #[default]
    SumModifiedLaplacian,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 4] = [
        MeasureKind::Variance,
        MeasureKind::SpatialFrequency,
        MeasureKind::SumModifiedLaplacian,
        MeasureKind::EnergyOfLaplacian,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            MeasureKind::Variance => "var",
            MeasureKind::SpatialFrequency => "sf",
            MeasureKind::EnergyOfLaplacian => "eol",
            MeasureKind::SumModifiedLaplacian => "sml",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for MeasureKind {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "var" | "variance" => Ok(MeasureKind::Variance),
            "sf" => Ok(MeasureKind::SpatialFrequency),
            "eol" => Ok(MeasureKind::EnergyOfLaplacian),
            "sml" => Ok(MeasureKind::SumModifiedLaplacian),
            other => Err(FusionError::InvalidInput(format!(
                "unknown measure '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    /// Window radius N; the window side is `2N + 1`.
    pub window_radius: usize,
    /// Modified-Laplacian terms below this value are dropped from the SML sum.
    pub threshold: f64,
    /// Sample spacing of the modified Laplacian.
    pub step: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            window_radius: 2,
            threshold: 0.0,
            step: 1,
        }
    }
}

impl MeasureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(FusionError::InvalidInput(format!(
                "measure threshold must be a nonnegative number, got {}",
                self.threshold
            )));
        }
        if self.step == 0 {
            return Err(FusionError::InvalidInput(
                "measure step must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `|2I(x,y) - I(x-k,y) - I(x+k,y)| + |2I(x,y) - I(x,y-k) - I(x,y+k)|`.
pub fn modified_laplacian(img: &ScalarField, step: usize) -> Result<ScalarField> {
    if step == 0 {
        return Err(FusionError::InvalidInput(
            "modified Laplacian step must be at least 1".into(),
        ));
    }
    let min_side = 2 * step + 1;
    let (w, h) = img.dims();
    if w < min_side || h < min_side {
        return Err(FusionError::InvalidInput(format!(
            "image {w}x{h} is smaller than {min_side}x{min_side} required by step {step}"
        )));
    }
    let k = step as isize;
    let out = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x as isize, y as isize)))
        .map(|(x, y)| {
            let c = 2.0 * img.get_clamped(x, y);
            let horiz = c - img.get_clamped(x - k, y) - img.get_clamped(x + k, y);
            let vert = c - img.get_clamped(x, y - k) - img.get_clamped(x, y + k);
            horiz.abs() + vert.abs()
        })
        .collect();
    Ok(ScalarField::from_raw(w, h, out))
}

/// Sum of modified Laplacian over the `(2N+1)^2` window.
pub fn sml_map(img: &ScalarField, cfg: &MeasureConfig) -> Result<ScalarField> {
    cfg.validate()?;
    let ml = modified_laplacian(img, cfg.step)?;
    let t = cfg.threshold;
    let kept = if t > 0.0 {
        ml.map(|v| if v >= t { v } else { 0.0 })
    } else {
        ml
    };
    Ok(window_sum(&kept, cfg.window_radius))
}

/// Local variance (mean squared deviation from the window mean).
pub fn variance_map(img: &ScalarField, cfg: &MeasureConfig) -> Result<ScalarField> {
    cfg.validate()?;
    let count = window_count(cfg.window_radius);
    let sums = window_sum(img, cfg.window_radius);
    let sq_sums = window_sum(&img.map(|v| v * v), cfg.window_radius);
    sums.zip_map(&sq_sums, |s, s2| {
        let mean = s / count;
        (s2 / count - mean * mean).max(0.0)
    })
}

/// Windowed spatial frequency `sqrt(RF^2 + CF^2)`.
///
/// RF and CF are the RMS of backward first differences along rows and
/// columns respectively; the difference at the first column/row is zero.
pub fn sf_map(img: &ScalarField, cfg: &MeasureConfig) -> Result<ScalarField> {
    cfg.validate()?;
    let (w, h) = img.dims();
    let row_diff_sq = ScalarField::from_raw(
        w,
        h,
        (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| {
                let d = img.get(x, y) - img.get(x.saturating_sub(1), y);
                d * d
            })
            .collect(),
    );
    let col_diff_sq = ScalarField::from_raw(
        w,
        h,
        (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| {
                let d = img.get(x, y) - img.get(x, y.saturating_sub(1));
                d * d
            })
            .collect(),
    );
    let count = window_count(cfg.window_radius);
    let rf2 = window_sum(&row_diff_sq, cfg.window_radius);
    let cf2 = window_sum(&col_diff_sq, cfg.window_radius);
    rf2.zip_map(&cf2, |r, c| ((r + c) / count).sqrt())
}

/// Windowed energy of the 4-neighbour Laplacian, `sum (Ixx + Iyy)^2`.
pub fn eol_map(img: &ScalarField, cfg: &MeasureConfig) -> Result<ScalarField> {
    cfg.validate()?;
    let (w, h) = img.dims();
    let energy = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let left = img.get(clamp_index(x as isize - 1, w), y);
            let right = img.get(clamp_index(x as isize + 1, w), y);
            let up = img.get(x, clamp_index(y as isize - 1, h));
            let down = img.get(x, clamp_index(y as isize + 1, h));
            let lap = left + right + up + down - 4.0 * img.get(x, y);
            lap * lap
        })
        .collect();
    Ok(window_sum(
        &ScalarField::from_raw(w, h, energy),
        cfg.window_radius,
    ))
}

pub fn measure_map(
    kind: MeasureKind,
    img: &ScalarField,
    cfg: &MeasureConfig,
) -> Result<ScalarField> {
    match kind {
        MeasureKind::Variance => variance_map(img, cfg),
        MeasureKind::SpatialFrequency => sf_map(img, cfg),
        MeasureKind::EnergyOfLaplacian => eol_map(img, cfg),
        MeasureKind::SumModifiedLaplacian => sml_map(img, cfg),
    }
}

fn window_count(radius: usize) -> f64 {
    let side = (2 * radius + 1) as f64;
    side * side
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn impulse(side: usize, v: f64) -> ScalarField {
        let c = side / 2;
        ScalarField::from_fn(side, side, |x, y| if x == c && y == c { v } else { 0.0 }).unwrap()
    }

    fn cfg(n: usize) -> MeasureConfig {
        MeasureConfig {
            window_radius: n,
            ..MeasureConfig::default()
        }
    }

    // Naive per-window oracles, written against `get_clamped` only.

    fn naive_window<F: Fn(isize, isize) -> f64>(
        w: usize,
        h: usize,
        n: usize,
        f: F,
    ) -> Vec<Vec<f64>> {
        let r = n as isize;
        let mut out = vec![vec![]; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = (x + dx).clamp(0, w as isize - 1);
                        let sy = (y + dy).clamp(0, h as isize - 1);
                        out[(y as usize) * w + x as usize].push(f(sx, sy));
                    }
                }
            }
        }
        out
    }

    fn naive_sml(img: &ScalarField, n: usize) -> Vec<f64> {
        let ml = |x: isize, y: isize| {
            let c = img.get_clamped(x, y);
            (-img.get_clamped(x - 1, y) + 2.0 * c - img.get_clamped(x + 1, y)).abs()
                + (-img.get_clamped(x, y - 1) + 2.0 * c - img.get_clamped(x, y + 1)).abs()
        };
        naive_window(img.width(), img.height(), n, ml)
            .into_iter()
            .map(|win| win.iter().sum())
            .collect()
    }

    fn naive_var(img: &ScalarField, n: usize) -> Vec<f64> {
        naive_window(img.width(), img.height(), n, |x, y| img.get_clamped(x, y))
            .into_iter()
            .map(|win| {
                let m = win.iter().sum::<f64>() / win.len() as f64;
                win.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / win.len() as f64
            })
            .collect()
    }

    fn naive_sf(img: &ScalarField, n: usize) -> Vec<f64> {
        let dx = |x: isize, y: isize| {
            let d = img.get_clamped(x, y) - img.get_clamped(x - 1, y);
            d * d
        };
        let dy = |x: isize, y: isize| {
            let d = img.get_clamped(x, y) - img.get_clamped(x, y - 1);
            d * d
        };
        let rows = naive_window(img.width(), img.height(), n, dx);
        let cols = naive_window(img.width(), img.height(), n, dy);
        rows.into_iter()
            .zip(cols)
            .map(|(r, c)| {
                let cnt = r.len() as f64;
                (r.iter().sum::<f64>() / cnt + c.iter().sum::<f64>() / cnt).sqrt()
            })
            .collect()
    }

    fn naive_eol(img: &ScalarField, n: usize) -> Vec<f64> {
        let lap = |x: isize, y: isize| {
            let l = img.get_clamped(x - 1, y)
                + img.get_clamped(x + 1, y)
                + img.get_clamped(x, y - 1)
                + img.get_clamped(x, y + 1)
                - 4.0 * img.get_clamped(x, y);
            l * l
        };
        naive_window(img.width(), img.height(), n, lap)
            .into_iter()
            .map(|win| win.iter().sum())
            .collect()
    }

    #[test]
    fn modified_laplacian_examples() {
        let c = ScalarField::filled(5, 5, 0.4).unwrap();
        assert!(modified_laplacian(&c, 1)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));

        let ramp = ScalarField::from_fn(7, 7, |x, _| x as f64 * 0.1).unwrap();
        let ml = modified_laplacian(&ramp, 1).unwrap();
        for y in 0..7 {
            for x in 1..6 {
                assert!(ml.get(x, y).abs() < 1e-12);
            }
        }

        let v = 0.7;
        let ml = modified_laplacian(&impulse(5, v), 1).unwrap();
        assert!((ml.get(2, 2) - 4.0 * v).abs() < 1e-12);
        for (x, y) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert!((ml.get(x, y) - v).abs() < 1e-12);
        }
        assert_eq!(ml.get(1, 1), 0.0);
    }

    #[test]
    fn modified_laplacian_rejects_small_images() {
        let small = ScalarField::zeros(2, 5).unwrap();
        assert!(matches!(
            modified_laplacian(&small, 1),
            Err(FusionError::InvalidInput(_))
        ));
        let ok = ScalarField::zeros(5, 5).unwrap();
        assert!(modified_laplacian(&ok, 2).is_ok());
        assert!(modified_laplacian(&ok, 3).is_err());
    }

    #[test]
    fn sml_impulse_centre_is_window_total() {
        let v = 0.6;
        let img = impulse(5, v);
        let map = sml_map(&img, &MeasureConfig::default()).unwrap();
        // Brute-force total of nonzero ML terms in the 5x5 window: 4v + 4 * v.
        let expected = naive_sml(&img, 2)[2 * 5 + 2];
        assert!((expected - 8.0 * v).abs() < 1e-12);
        assert!((map.get(2, 2) - expected).abs() < 1e-12);
    }

    #[test]
    fn sml_threshold_above_max_zeroes_map() {
        let img = impulse(7, 1.0);
        let c = MeasureConfig {
            threshold: 4.5,
            ..MeasureConfig::default()
        };
        assert!(sml_map(&img, &c).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sml_threshold_excludes_small_terms() {
        // Centre term 4 survives T = 2, neighbour terms of 1 do not.
        let img = impulse(7, 1.0);
        let c = MeasureConfig {
            threshold: 2.0,
            window_radius: 1,
            step: 1,
        };
        let map = sml_map(&img, &c).unwrap();
        assert!((map.get(3, 3) - 4.0).abs() < 1e-12);
        assert!((map.get(2, 3) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn variance_examples() {
        let c = ScalarField::filled(6, 6, 0.3).unwrap();
        assert!(variance_map(&c, &cfg(2))
            .unwrap()
            .data()
            .iter()
            .all(|&v| v.abs() < 1e-15));

        let board = ScalarField::from_fn(6, 6, |x, y| ((x + y) % 2) as f64).unwrap();
        let var = variance_map(&board, &cfg(1)).unwrap();
        let p: f64 = 5.0 / 9.0;
        for (x, y) in [(2, 2), (3, 2), (2, 3)] {
            assert!((var.get(x, y) - p * (1.0 - p)).abs() < 1e-12);
        }

        let one = ScalarField::filled(1, 1, 0.8).unwrap();
        assert_eq!(variance_map(&one, &cfg(2)).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn sf_examples() {
        let c = ScalarField::filled(6, 6, 0.3).unwrap();
        assert!(sf_map(&c, &cfg(2))
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));

        let vert = ScalarField::from_fn(10, 10, |x, _| (x % 2) as f64).unwrap();
        let horiz = ScalarField::from_fn(10, 10, |_, y| (y % 2) as f64).unwrap();
        let sv = sf_map(&vert, &cfg(1)).unwrap();
        let sh = sf_map(&horiz, &cfg(1)).unwrap();
        for y in 2..8 {
            for x in 2..8 {
                assert!((sv.get(x, y) - 1.0).abs() < 1e-12);
                assert!((sh.get(y, x) - sv.get(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eol_examples() {
        let c = ScalarField::filled(6, 6, 0.3).unwrap();
        assert!(eol_map(&c, &cfg(2))
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));

        let ramp = ScalarField::from_fn(8, 8, |x, _| x as f64 * 0.05).unwrap();
        let e = eol_map(&ramp, &cfg(0)).unwrap();
        for y in 0..8 {
            for x in 1..7 {
                assert!(e.get(x, y) < 1e-24);
            }
        }

        let v = 0.5;
        let e = eol_map(&impulse(5, v), &cfg(0)).unwrap();
        assert!((e.get(2, 2) - (4.0 * v) * (4.0 * v)).abs() < 1e-12);
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let c = ScalarField::filled(8, 8, 0.5).unwrap();
        let d = MeasureConfig::default();
        for kind in MeasureKind::ALL {
            let m = measure_map(kind, &c, &d).unwrap();
            assert_eq!(m.dims(), (8, 8));
            assert!(m.data().iter().all(|&v| v.abs() < 1e-15));
        }
        let img = impulse(9, 0.9);
        assert_eq!(
            measure_map(MeasureKind::SumModifiedLaplacian, &img, &d).unwrap(),
            sml_map(&img, &d).unwrap()
        );
    }

    #[test]
    fn invalid_config_rejected() {
        let img = ScalarField::zeros(8, 8).unwrap();
        let bad = MeasureConfig {
            threshold: -1.0,
            ..MeasureConfig::default()
        };
        assert!(sml_map(&img, &bad).is_err());
        let bad = MeasureConfig {
            step: 0,
            ..MeasureConfig::default()
        };
        assert!(variance_map(&img, &bad).is_err());
    }

    #[test]
    fn kind_parsing() {
        for kind in MeasureKind::ALL {
            assert_eq!(kind.short_name().parse::<MeasureKind>().unwrap(), kind);
        }
        assert!("tenengrad".parse::<MeasureKind>().is_err());
    }

    fn random_field() -> impl Strategy<Value = ScalarField> {
        prop::collection::vec(0.0f64..1.0, 256).prop_map(|d| ScalarField::new(16, 16, d).unwrap())
    }

    proptest! {
        #[test]
        fn maps_match_naive_loops(img in random_field(), n in 0usize..4) {
            let c = cfg(n);
            let checks: [(ScalarField, Vec<f64>); 4] = [
                (sml_map(&img, &c).unwrap(), naive_sml(&img, n)),
                (variance_map(&img, &c).unwrap(), naive_var(&img, n)),
                (sf_map(&img, &c).unwrap(), naive_sf(&img, n)),
                (eol_map(&img, &c).unwrap(), naive_eol(&img, n)),
            ];
            for (fast, slow) in &checks {
                for (a, b) in fast.data().iter().zip(slow) {
                    prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
            }
        }

        #[test]
        fn maps_are_nonnegative_and_shift_invariant(img in random_field(), shift in -5.0f64..5.0) {
            let shifted = img.map(|v| v + shift);
            let c = MeasureConfig::default();
            for kind in MeasureKind::ALL {
                let base = measure_map(kind, &img, &c).unwrap();
                let moved = measure_map(kind, &shifted, &c).unwrap();
                prop_assert!(base.data().iter().all(|&v| v >= 0.0));
                for (a, b) in base.data().iter().zip(moved.data()) {
                    prop_assert!((a - b).abs() < 1e-9, "{kind}: {a} vs {b}");
                }
            }
        }

        #[test]
        fn sml_equals_window_sum_of_ml(img in random_field(), n in 0usize..4) {
            let c = cfg(n);
            let direct = window_sum(&modified_laplacian(&img, 1).unwrap(), n);
            prop_assert_eq!(sml_map(&img, &c).unwrap(), direct);
        }
    }
}
