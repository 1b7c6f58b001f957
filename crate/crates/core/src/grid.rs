//! Raster and scalar-field primitives.
//!
//! Every windowed operator in this crate uses replicate (clamp-to-edge)
//! padding: a sample outside the grid takes the value of the nearest edge
//! pixel.

use crate::error::{ensure_same_dims, FusionError, Result};

/// An 8-bit grayscale raster, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_shape(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        check_shape(width, height, width * height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// A real-valued grid sharing image dimensions.
///
/// Used for stimuli, focus-measure maps, weights and neuron state alike.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    /// Builds a field, rejecting non-finite samples.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(FusionError::InvalidInput(format!(
                "non-finite value {} at index {i}",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Internal constructor for data already known to be well formed.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with replicate padding.
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_dims(self.dims(), other.dims())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_raw(self.width, self.height, data))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

fn check_shape(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(FusionError::InvalidInput(format!(
            "grid dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(FusionError::InvalidInput(format!(
            "data length {len} does not match {width}x{height}"
        )));
    }
    Ok(())
}

/// A 3x3 neighbourhood weight matrix, row-major, centre at index 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel3x3 {
    weights: [f64; 9],
}

impl Kernel3x3 {
    /// Linking weights: corners 1, edge midpoints 0.5, no self-excitation.
    pub const LINKING: Kernel3x3 = Kernel3x3 {
        weights: [1.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 1.0],
    };

    pub fn new(weights: [f64; 9]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(FusionError::InvalidInput(
                "kernel weights must be finite".into(),
            ));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64; 9] {
        &self.weights
    }

    /// Weight applied to the sample at offset (dx, dy), each in -1..=1.
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        self.weights[((dy + 1) * 3 + (dx + 1)) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

impl Default for Kernel3x3 {
    fn default() -> Self {
        Self::LINKING
    }
}

/// Maps intensities to stimuli on the fixed scale `v / 255`.
pub fn normalize(img: &PixelGrid) -> ScalarField {
    let data = img.data.iter().map(|&v| f64::from(v) / 255.0).collect();
    ScalarField::from_raw(img.width, img.height, data)
}

/// Inverse of [`normalize`]: clamp to [0, 1], scale by 255, round half up.
pub fn quantize(field: &ScalarField) -> PixelGrid {
    let data = field
        .data
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8)
        .collect();
    PixelGrid {
        width: field.width,
        height: field.height,
        data,
    }
}

/// 3x3 neighbourhood weighting with replicate padding.
///
/// `out(x, y) = sum k(dx, dy) * field(x + dx, y + dy)`.
pub fn convolve3x3(field: &ScalarField, kernel: &Kernel3x3) -> ScalarField {
    let (w, h) = field.dims();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let rows = [y.saturating_sub(1), y, (y + 1).min(h - 1)];
        for x in 0..w {
            let cols = [x.saturating_sub(1), x, (x + 1).min(w - 1)];
            let mut acc = 0.0;
            for (ky, &sy) in rows.iter().enumerate() {
                let row = &field.data[sy * w..(sy + 1) * w];
                for (kx, &sx) in cols.iter().enumerate() {
                    acc += kernel.weights[ky * 3 + kx] * row[sx];
                }
            }
            out[y * w + x] = acc;
        }
    }
    ScalarField::from_raw(w, h, out)
}

/// Sum over the `(2 * radius + 1)^2` window centred on each pixel.
///
/// Replicate padding clamps each axis independently, so the sum separates
/// into a horizontal pass followed by a vertical pass.
pub fn window_sum(field: &ScalarField, radius: usize) -> ScalarField {
    if radius == 0 {
        return field.clone();
    }
    let (w, h) = field.dims();
    let r = radius as isize;

    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        let row = &field.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for dx in -r..=r {
                acc += row[clamp_index(x as isize + dx, w)];
            }
            horiz[y * w + x] = acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for dy in -r..=r {
            let sy = clamp_index(y as isize + dy, h);
            let src = &horiz[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
    ScalarField::from_raw(w, h, out)
}

#[inline]
pub(crate) fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_window_sum(f: &ScalarField, radius: usize) -> ScalarField {
        let r = radius as isize;
        ScalarField::from_fn(f.width(), f.height(), |x, y| {
            let mut s = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    s += f.get_clamped(x as isize + dx, y as isize + dy);
                }
            }
            s
        })
        .unwrap()
    }

    #[test]
    fn normalize_examples() {
        let img = PixelGrid::new(3, 1, vec![0, 255, 51]).unwrap();
        let s = normalize(&img);
        assert_eq!(s.data(), &[0.0, 1.0, 0.2]);
    }

    #[test]
    fn quantize_examples() {
        let f = ScalarField::new(3, 1, vec![0.0, 1.2, 0.5]).unwrap();
        assert_eq!(quantize(&f).data(), &[0, 255, 128]);
        let neg = ScalarField::new(1, 1, vec![-0.3]).unwrap();
        assert_eq!(quantize(&neg).data(), &[0]);
    }

    #[test]
    fn quantize_inverts_normalize_for_every_level() {
        let img = PixelGrid::new(256, 1, (0..=255).collect()).unwrap();
        assert_eq!(quantize(&normalize(&img)), img);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PixelGrid::new(0, 3, vec![]).is_err());
        assert!(PixelGrid::new(2, 2, vec![1, 2, 3]).is_err());
        assert!(ScalarField::new(1, 1, vec![f64::NAN]).is_err());
        assert!(ScalarField::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn convolve_zero_field() {
        let f = ScalarField::zeros(4, 3).unwrap();
        let out = convolve3x3(&f, &Kernel3x3::LINKING);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn convolve_centre_impulse() {
        let f =
            ScalarField::from_fn(3, 3, |x, y| if (x, y) == (1, 1) { 1.0 } else { 0.0 }).unwrap();
        let out = convolve3x3(&f, &Kernel3x3::LINKING);
        assert_eq!(out.data(), &[1.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 1.0]);
    }

    #[test]
    fn convolve_constant_is_six_times() {
        let f = ScalarField::filled(5, 4, 0.3).unwrap();
        let out = convolve3x3(&f, &Kernel3x3::LINKING);
        for &v in out.data() {
            assert!((v - 6.0 * 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn window_sum_examples() {
        let f = ScalarField::from_fn(4, 4, |x, y| (x * 7 + y) as f64).unwrap();
        assert_eq!(window_sum(&f, 0), f);

        let c = ScalarField::filled(6, 5, 1.5).unwrap();
        for &v in window_sum(&c, 1).data() {
            assert!((v - 13.5).abs() < 1e-12);
        }

        let ones = ScalarField::filled(5, 5, 1.0).unwrap();
        assert_eq!(window_sum(&ones, 2).get(2, 2), 25.0);
    }

    #[test]
    fn single_pixel_grid() {
        let f = ScalarField::filled(1, 1, 2.0).unwrap();
        assert_eq!(window_sum(&f, 3).get(0, 0), 98.0);
        assert_eq!(convolve3x3(&f, &Kernel3x3::LINKING).get(0, 0), 12.0);
    }

    fn field_strategy(w: usize, h: usize) -> impl Strategy<Value = ScalarField> {
        prop::collection::vec(-1.0f64..1.0, w * h)
            .prop_map(move |d| ScalarField::new(w, h, d).unwrap())
    }

    proptest! {
        #[test]
        fn window_sum_matches_brute_force(f in field_strategy(16, 16), radius in 0usize..5) {
            let fast = window_sum(&f, radius);
            let slow = brute_window_sum(&f, radius);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn convolve_is_linear(
            f in field_strategy(9, 7),
            g in field_strategy(9, 7),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let k = Kernel3x3::LINKING;
            let combo = f.zip_map(&g, |x, y| a * x + b * y).unwrap();
            let lhs = convolve3x3(&combo, &k);
            let cf = convolve3x3(&f, &k);
            let cg = convolve3x3(&g, &k);
            let rhs = cf.zip_map(&cg, |x, y| a * x + b * y).unwrap();
            for (l, r) in lhs.data().iter().zip(rhs.data()) {
                prop_assert!((l - r).abs() < 1e-12);
            }
        }

        #[test]
        fn convolving_constant_gives_constant(c in -5.0f64..5.0, w in 1usize..8, h in 1usize..8) {
            let f = ScalarField::filled(w, h, c).unwrap();
            let out = convolve3x3(&f, &Kernel3x3::LINKING);
            let first = out.data()[0];
            prop_assert!(out.data().iter().all(|&v| v == first));
        }

        #[test]
        fn quantize_normalize_round_trip(data in prop::collection::vec(any::<u8>(), 1..200)) {
            let img = PixelGrid::new(data.len(), 1, data).unwrap();
            prop_assert_eq!(quantize(&normalize(&img)), img);
        }
    }
}
