//! Synthetic multi-focus pairs: a sharp reference with complementary
//! regions defocused by a Gaussian blur.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FusionError, Result};
use crate::grid::{clamp_index, PixelGrid};
use crate::metrics::gaussian_taps;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SplitMode {
    /// A blurred on the left half, B on the right half.
    #[default]
    VerticalHalves,
    /// A blurred on the top half, B on the bottom half.
    HorizontalHalves,
    /// A blurred on the top-left and bottom-right quadrants, B on the others.
    Quadrants,
}

impl SplitMode {
    /// Whether (x, y) belongs to the region blurred in image A.
    pub fn in_first_region(self, x: usize, y: usize, width: usize, height: usize) -> bool {
        let left = x < width / 2;
        let top = y < height / 2;
        match self {
            SplitMode::VerticalHalves => left,
            SplitMode::HorizontalHalves => top,
            SplitMode::Quadrants => left == top,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            SplitMode::VerticalHalves => "vertical",
            SplitMode::HorizontalHalves => "horizontal",
            SplitMode::Quadrants => "quadrants",
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for SplitMode {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vertical" | "vertical-halves" => Ok(SplitMode::VerticalHalves),
            "horizontal" | "horizontal-halves" => Ok(SplitMode::HorizontalHalves),
            "quadrants" => Ok(SplitMode::Quadrants),
            other => Err(FusionError::InvalidInput(format!(
                "unknown split mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisSpec {
    pub split: SplitMode,
    pub blur_sigma: f64,
    /// Kernel radius; `None` means `ceil(3 * sigma)`.
    pub blur_radius: Option<usize>,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        Self {
            split: SplitMode::VerticalHalves,
            blur_sigma: 2.0,
            blur_radius: None,
        }
    }
}

impl SynthesisSpec {
    pub fn radius(&self) -> usize {
        self.blur_radius
            .unwrap_or_else(|| (3.0 * self.blur_sigma).ceil() as usize)
            .max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.blur_sigma.is_finite() && self.blur_sigma > 0.0) {
            return Err(FusionError::InvalidInput(format!(
                "blur sigma must be positive, got {}",
                self.blur_sigma
            )));
        }
        if self.blur_radius == Some(0) {
            return Err(FusionError::InvalidInput(
                "blur radius must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Separable Gaussian blur with a normalized, truncated kernel and replicate padding.
pub fn gaussian_blur(img: &PixelGrid, sigma: f64, radius: usize) -> PixelGrid {
    let taps = gaussian_taps(sigma, radius);
    let (w, h) = img.dims();
    let r = radius as isize;
    let src: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();

    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            horiz[y * w + x] = (-r..=r)
                .zip(&taps)
                .map(|(d, t)| t * row[clamp_index(x as isize + d, w)])
                .sum();
        }
    }
    let data = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let v: f64 = (-r..=r)
                .zip(&taps)
                .map(|(d, t)| t * horiz[clamp_index(y as isize + d, h) * w + x])
                .sum();
            (v.clamp(0.0, 255.0) + 0.5).floor() as u8
        })
        .collect();
    PixelGrid::new(w, h, data).expect("blur preserves shape")
}

/// Builds a pair from a sharp reference: A is blurred on the first region,
/// B on its complement.
pub fn synthesize_pair(
    reference: &PixelGrid,
    spec: &SynthesisSpec,
) -> Result<(PixelGrid, PixelGrid)> {
    spec.validate()?;
    let (w, h) = reference.dims();
    if w < 2 || h < 2 {
        return Err(FusionError::InvalidInput(format!(
            "reference must be at least 2x2, got {w}x{h}"
        )));
    }
    let blurred = gaussian_blur(reference, spec.blur_sigma, spec.radius());
    let pick = |blur_first: bool| {
        PixelGrid::from_fn(w, h, |x, y| {
            if spec.split.in_first_region(x, y, w, h) == blur_first {
                blurred.get(x, y)
            } else {
                reference.get(x, y)
            }
        })
    };
    Ok((pick(true)?, pick(false)?))
}

/// A deterministic textured test image: a random mix of oriented
/// sinusoids, hard-edged blocks and per-pixel noise.
pub fn textured_reference(width: usize, height: usize, seed: u64) -> Result<PixelGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            let freq = rng.gen_range(0.03..0.3);
            let angle = rng.gen_range(0.0..std::f64::consts::PI);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = rng.gen_range(12.0..28.0);
            (freq * angle.cos(), freq * angle.sin(), phase, amp)
        })
        .collect();
    let blocks: Vec<(usize, usize, usize, usize, f64)> = (0..12)
        .map(|_| {
            let x0 = rng.gen_range(0..width);
            let y0 = rng.gen_range(0..height);
            let bw = rng.gen_range(1..=(width / 4).max(1));
            let bh = rng.gen_range(1..=(height / 4).max(1));
            (x0, y0, bw, bh, rng.gen_range(-40.0..40.0))
        })
        .collect();
    let noise: Vec<f64> = (0..width * height)
        .map(|_| rng.gen_range(-18.0..18.0))
        .collect();

    PixelGrid::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut v = 128.0 + noise[y * width + x];
        for &(fx, fy, phase, amp) in &waves {
            v += amp * (std::f64::consts::TAU * (fx * xf + fy * yf) + phase).sin();
        }
        for &(x0, y0, bw, bh, delta) in &blocks {
            if (x0..x0 + bw).contains(&x) && (y0..y0 + bh).contains(&y) {
                v += delta;
            }
        }
        (v.clamp(0.0, 255.0) + 0.5).floor() as u8
    })
}
