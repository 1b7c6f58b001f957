//! Reference-based fusion quality metrics: cross entropy, RMSE, PSNR, SSIM.

use crate::error::{ensure_same_dims, FusionError, Result};
use crate::grid::PixelGrid;
use crate::pcnn::OpCounters;

/// Probability floor substituted for empty bins of the second distribution.
pub const CE_EPSILON: f64 = 1e-12;

/// SSIM stabilizers for 8-bit data: `(0.01 * 255)^2` and `(0.03 * 255)^2`.
pub const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

/// Intensity histogram over the 256 gray levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    counts: [u64; 256],
    total: u64,
}

impl Histogram256 {
    pub fn of(img: &PixelGrid) -> Self {
        let mut counts = [0u64; 256];
        for &v in img.data() {
            counts[v as usize] += 1;
        }
        Self {
            counts,
            total: img.data().len() as u64,
        }
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn probability(&self, level: u8) -> f64 {
        self.counts[level as usize] as f64 / self.total as f64
    }
}

/// `sum p_i log2(p_i / q_i)` with `p` from `src` and `q` from `fused`.
pub fn cross_entropy(src: &PixelGrid, fused: &PixelGrid) -> Result<f64> {
    ensure_same_dims(src.dims(), fused.dims())?;
    let p = Histogram256::of(src);
    let q = Histogram256::of(fused);
    let ce = (0..=255u8)
        .filter(|&i| p.counts[i as usize] > 0)
        .map(|i| {
            let pi = p.probability(i);
            let qi = match q.probability(i) {
                v if v > 0.0 => v,
                _ => CE_EPSILON,
            };
            pi * (pi / qi).log2()
        })
        .sum();
    Ok(ce)
}

/// Mean of the two directed cross entropies from each source to the fused image.
pub fn average_cross_entropy(a: &PixelGrid, b: &PixelGrid, fused: &PixelGrid) -> Result<f64> {
    Ok((cross_entropy(a, fused)? + cross_entropy(b, fused)?) / 2.0)
}

pub fn rmse(f: &PixelGrid, r: &PixelGrid) -> Result<f64> {
    ensure_same_dims(f.dims(), r.dims())?;
    let sum: f64 = f
        .data()
        .iter()
        .zip(r.data())
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum();
    Ok((sum / f.data().len() as f64).sqrt())
}

/// `10 log10(255^2 / rmse^2)` in dB; `+inf` when `rmse == 0`.
pub fn psnr(rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / (rmse * rmse)).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SsimMode {
    /// Mean SSIM over 11x11 Gaussian windows (sigma 1.5), valid region only.
    #[default]
    Windowed,
    /// One SSIM evaluation over whole-image statistics.
    Global,
}

/// Windowed SSIM between a fused image and a reference.
pub fn ssim(f: &PixelGrid, r: &PixelGrid) -> Result<f64> {
    ssim_with_mode(f, r, SsimMode::Windowed)
}

pub fn ssim_with_mode(f: &PixelGrid, r: &PixelGrid, mode: SsimMode) -> Result<f64> {
    ensure_same_dims(f.dims(), r.dims())?;
    match mode {
        SsimMode::Windowed => windowed_ssim(f, r),
        SsimMode::Global => Ok(global_ssim(f, r)),
    }
}

fn ssim_index(mu_x: f64, mu_y: f64, var_x: f64, var_y: f64, cov: f64) -> f64 {
    let mu_xy = mu_x * mu_y;
    ((2.0 * mu_xy + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2))
}

fn global_ssim(f: &PixelGrid, r: &PixelGrid) -> f64 {
    let n = f.data().len() as f64;
    let xs = f.data().iter().map(|&v| f64::from(v));
    let ys = r.data().iter().map(|&v| f64::from(v));
    let mu_x = xs.clone().sum::<f64>() / n;
    let mu_y = ys.clone().sum::<f64>() / n;
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in xs.zip(ys) {
        vx += (x - mu_x) * (x - mu_x);
        vy += (y - mu_y) * (y - mu_y);
        cov += (x - mu_x) * (y - mu_y);
    }
    ssim_index(mu_x, mu_y, vx / n, vy / n, cov / n)
}

pub(crate) fn gaussian_taps(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable "valid" filtering of a row-major buffer.
fn filter_valid(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w + 1 - k, h + 1 - k);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (t, tap) in taps.iter().enumerate() {
            let src = &horiz[(y + t) * ow..(y + t + 1) * ow];
            for (o, s) in out[y * ow..(y + 1) * ow].iter_mut().zip(src) {
                *o += tap * s;
            }
        }
    }
    out
}

fn windowed_ssim(f: &PixelGrid, r: &PixelGrid) -> Result<f64> {
    let (w, h) = f.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(FusionError::InvalidInput(format!(
            "windowed SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let taps = gaussian_taps(SSIM_SIGMA, SSIM_WINDOW / 2);
    let x: Vec<f64> = f.data().iter().map(|&v| f64::from(v)).collect();
    let y: Vec<f64> = r.data().iter().map(|&v| f64::from(v)).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();

    let mu_x = filter_valid(&x, w, h, &taps);
    let mu_y = filter_valid(&y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);

    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            ssim_index(
                mx,
                my,
                e_xx[i] - mx * mx,
                e_yy[i] - my * my,
                e_xy[i] - mx * my,
            )
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}

/// One evaluation row: the four criteria plus timing and optional counters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub ce: f64,
    pub rmse: f64,
    /// dB; `+inf` for identical images.
    pub psnr: f64,
    pub ssim: f64,
    pub wall_time_seconds: f64,
    pub counters: Option<OpCounters>,
}
