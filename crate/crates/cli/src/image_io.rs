//! Image file I/O.
//!
//! Binary PGM (P5, maxval 255) is the canonical format and is written
//! byte-exactly as `P5\n<width> <height>\n255\n` followed by the raw
//! row-major samples. PNG is accepted on input; colour PNGs are reduced to
//! luma with `round(0.299 R + 0.587 G + 0.114 B)`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use idcfuse::PixelGrid;
use thiserror::Error;

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },

    #[error("{}: bad {}: {}", path.display(), err.field, err.reason)]
    Format { path: PathBuf, err: PgmError },

    #[error("{}: {source}", path.display())]
    Png {
        path: PathBuf,
        source: image::ImageError,
    },
}

/// A PGM decoding failure naming the offending header field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad {field}: {reason}")]
pub struct PgmError {
    pub field: &'static str,
    pub reason: String,
}

impl PgmError {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

pub fn encode_pgm(img: &PixelGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

/// Like [`encode_pgm`] but with a `# comment` line after the magic number.
pub fn encode_pgm_with_comment(img: &PixelGrid, comment: &str) -> Vec<u8> {
    let comment = comment.replace(['\n', '\r'], " ");
    let mut out = format!("P5\n# {comment}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &'static str) -> Result<usize, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::new(field, "expected a decimal number"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| PgmError::new(field, "number out of range"))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<PixelGrid, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::new("magic", "expected P5"));
    }
    let mut reader = HeaderReader { bytes, pos: 2 };
    let width = reader.number("width")?;
    let height = reader.number("height")?;
    let maxval = reader.number("maxval")?;
    if width == 0 {
        return Err(PgmError::new("width", "must be positive"));
    }
    if height == 0 {
        return Err(PgmError::new("height", "must be positive"));
    }
    if maxval != 255 {
        return Err(PgmError::new(
            "maxval",
            format!("{maxval} unsupported, only 255 is accepted"),
        ));
    }
    match bytes.get(reader.pos) {
        Some(b) if b.is_ascii_whitespace() => reader.pos += 1,
        _ => return Err(PgmError::new("maxval", "missing whitespace before raster")),
    }
    let len = width
        .checked_mul(height)
        .ok_or_else(|| PgmError::new("width", "image too large"))?;
    let raster = &bytes[reader.pos..];
    if raster.len() < len {
        return Err(PgmError::new(
            "raster",
            format!("expected {len} bytes, found {}", raster.len()),
        ));
    }
    PixelGrid::new(width, height, raster[..len].to_vec())
        .map_err(|e| PgmError::new("raster", e.to_string()))
}

fn luma(r: u8, g: u8, b: u8) -> u8 {
    let v = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    (v + 0.5).floor().min(255.0) as u8
}

fn decode_png(bytes: &[u8]) -> Result<PixelGrid, image::ImageError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = if img.color().has_color() {
        img.to_rgb8()
            .pixels()
            .map(|p| luma(p[0], p[1], p[2]))
            .collect()
    } else {
        img.to_luma8().into_raw()
    };
    Ok(PixelGrid::new(w, h, data).expect("decoder returns consistent dimensions"))
}

/// Loads a P5 PGM or PNG file, sniffing the format from its signature.
pub fn load_image(path: &Path) -> Result<PixelGrid, ImageIoError> {
    let bytes = fs::read(path).map_err(|source| ImageIoError::Read {
        path: path.to_owned(),
        source,
    })?;
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes).map_err(|source| ImageIoError::Png {
            path: path.to_owned(),
            source,
        })
    } else {
        decode_pgm(&bytes).map_err(|err| ImageIoError::Format {
            path: path.to_owned(),
            err,
        })
    }
}

pub fn save_image(img: &PixelGrid, path: &Path) -> Result<(), ImageIoError> {
    write_bytes(path, &encode_pgm(img))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), ImageIoError> {
    fs::write(path, bytes).map_err(|source| ImageIoError::Write {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_two_by_two() {
        let bytes = b"P5\n2 2\n255\n\x00\x80\xff\x07";
        let img = decode_pgm(bytes).unwrap();
        assert_eq!(img.dims(), (2, 2));
        assert_eq!(img.data(), &[0, 128, 255, 7]);
    }

    #[test]
    fn one_pixel_file_is_twelve_bytes() {
        let img = PixelGrid::new(1, 1, vec![0]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(bytes, b"P5\n1 1\n255\n\x00");
        assert_eq!(bytes.len(), 12);
    }

    #[test]
    fn rejects_sixteen_bit_maxval() {
        let err = decode_pgm(b"P5\n1 1\n65535\n\x00\x00").unwrap_err();
        assert_eq!(err.field, "maxval");
    }

    #[test]
    fn header_errors_name_the_field() {
        assert_eq!(decode_pgm(b"P2\n1 1\n255\n0").unwrap_err().field, "magic");
        assert_eq!(
            decode_pgm(b"P5\nx 1\n255\n\x00").unwrap_err().field,
            "width"
        );
        assert_eq!(decode_pgm(b"P5\n1\n").unwrap_err().field, "height");
        assert_eq!(decode_pgm(b"P5\n0 1\n255\n").unwrap_err().field, "width");
        assert_eq!(
            decode_pgm(b"P5\n2 2\n255\n\x00").unwrap_err().field,
            "raster"
        );
        assert_eq!(decode_pgm(b"P5\n1 1\n255").unwrap_err().field, "maxval");
    }

    #[test]
    fn comments_in_header_are_skipped() {
        let img = PixelGrid::new(3, 1, vec![9, 8, 7]).unwrap();
        let bytes = encode_pgm_with_comment(&img, "scale_max=0.5");
        assert!(bytes.starts_with(b"P5\n# scale_max=0.5\n3 1\n255\n"));
        assert_eq!(decode_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn luma_weights() {
        assert_eq!(luma(255, 255, 255), 255);
        assert_eq!(luma(0, 0, 0), 0);
        assert_eq!(luma(255, 0, 0), 76);
        assert_eq!(luma(0, 255, 0), 150);
        assert_eq!(luma(0, 0, 255), 29);
    }

    #[test]
    fn decodes_png_gray_and_rgb() {
        use image::{ImageBuffer, Luma, Rgb};
        let mut buf = Vec::new();
        let gray: ImageBuffer<Luma<u8>, _> = ImageBuffer::from_raw(2, 1, vec![10u8, 200]).unwrap();
        gray.write_to(&mut io::Cursor::new(&mut buf), image::ImageFormat::Png)
            .unwrap();
        assert_eq!(decode_png(&buf).unwrap().data(), &[10, 200]);

        let mut buf = Vec::new();
        let rgb: ImageBuffer<Rgb<u8>, _> = ImageBuffer::from_raw(1, 1, vec![10u8, 20, 30]).unwrap();
        rgb.write_to(&mut io::Cursor::new(&mut buf), image::ImageFormat::Png)
            .unwrap();
        assert_eq!(decode_png(&buf).unwrap().data(), &[luma(10, 20, 30)]);
    }

    proptest! {
        #[test]
        fn pgm_round_trip(w in 1usize..40, h in 1usize..40, seed in any::<u64>()) {
            let img = PixelGrid::from_fn(w, h, |x, y| {
                (seed.wrapping_mul(6364136223846793005).wrapping_add((x * 31 + y * 17) as u64) >> 56) as u8
            }).unwrap();
            let bytes = encode_pgm(&img);
            let header = format!("P5\n{w} {h}\n255\n");
            prop_assert!(bytes.starts_with(header.as_bytes()));
            let back = decode_pgm(&bytes).unwrap();
            prop_assert_eq!(encode_pgm(&back), bytes);
        }
    }
}
