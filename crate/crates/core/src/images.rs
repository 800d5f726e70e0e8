//! PGM decoding, bilinear resizing and directory ingestion.
//!
//! Binary (`P5`, 8- or 16-bit) and ASCII (`P2`) graymaps are accepted. Pixel
//! values are rescaled to `[0, 255]` as `v * 255 / maxval`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Grayscale image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format {
                offset: start as u64,
                message: format!("expected {what}"),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Format {
                offset: start as u64,
                message: format!("{what} out of range"),
            })
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'5' || bytes[1] == b'2') {
        return Err(Error::Format {
            offset: 0,
            message: "not a PGM file (expected P5 or P2 magic)".into(),
        });
    }
    let binary = bytes[1] == b'5';
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format {
            offset: h.pos as u64,
            message: "image has zero size".into(),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format {
            offset: h.pos as u64,
            message: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    let n = width * height;
    let scale = 255.0 / maxval as f64;
    let mut pixels = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = h.pos + 1;
        let bpp = if maxval < 256 { 1 } else { 2 };
        let need = start + n * bpp;
        if bytes.len() < need {
            return Err(Error::Format {
                offset: bytes.len() as u64,
                message: format!("raster truncated: expected {need} bytes, got {}", bytes.len()),
            });
        }
        for p in 0..n {
            let o = start + p * bpp;
            let v = if bpp == 1 {
                bytes[o] as usize
            } else {
                ((bytes[o] as usize) << 8) | bytes[o + 1] as usize
            };
            if v > maxval {
                return Err(Error::Format {
                    offset: o as u64,
                    message: format!("pixel value {v} exceeds maxval {maxval}"),
                });
            }
            pixels.push(v as f64 * scale);
        }
    } else {
        for _ in 0..n {
            let off = h.pos;
            let v = h.number("pixel value")?;
            if v > maxval {
                return Err(Error::Format {
                    offset: off as u64,
                    message: format!("pixel value {v} exceeds maxval {maxval}"),
                });
            }
            pixels.push(v as f64 * scale);
        }
    }
    Ok(GrayImage {
        height,
        width,
        pixels,
    })
}

/// Bilinear resize with half-pixel centers and edge clamping: output pixel
/// `(r, c)` samples the source at `((r + 0.5) * H / h - 0.5, (c + 0.5) * W / w - 0.5)`.
pub fn resize_bilinear(img: &GrayImage, height: usize, width: usize) -> GrayImage {
    if img.height == height && img.width == width {
        return img.clone();
    }
    let coord = |dst: usize, src_len: usize, dst_len: usize| -> (usize, usize, f64) {
        let s = ((dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5)
            .clamp(0.0, (src_len - 1) as f64);
        let lo = s.floor() as usize;
        let hi = (lo + 1).min(src_len - 1);
        (lo, hi, s - lo as f64)
    };
    let mut pixels = Vec::with_capacity(height * width);
    for r in 0..height {
        let (r0, r1, fr) = coord(r, img.height, height);
        for c in 0..width {
            let (c0, c1, fc) = coord(c, img.width, width);
            let top = img.get(r0, c0) * (1.0 - fc) + img.get(r0, c1) * fc;
            let bottom = img.get(r1, c0) * (1.0 - fc) + img.get(r1, c1) * fc;
            pixels.push(top * (1.0 - fr) + bottom * fr);
        }
    }
    GrayImage {
        height,
        width,
        pixels,
    }
}

/// Stack every image in `dir` (sorted by file name, dot-files skipped) into
/// an `h x w x count` tensor. Without `target` all images must share a size.
pub fn ingest_images(dir: impl AsRef<Path>, target: Option<(usize, usize)>) -> Result<Tensor3> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| !n.starts_with('.'))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::data(format!("no images found in {}", dir.display())));
    }
    if let Some((h, w)) = target {
        if h == 0 || w == 0 {
            return Err(Error::arg("target size must be positive"));
        }
    }

    let mut images = Vec::with_capacity(files.len());
    let mut failures = Vec::new();
    for f in &files {
        match fs::read(f).map_err(|e| Error::io(f, e)).and_then(|b| parse_pgm(&b)) {
            Ok(img) => images.push(img),
            Err(e) => failures.push(format!("{}: {e}", f.display())),
        }
    }
    if !failures.is_empty() {
        return Err(Error::data(format!(
            "{} of {} files could not be read:\n  {}",
            failures.len(),
            files.len(),
            failures.join("\n  ")
        )));
    }
    let (h, w) = target.unwrap_or((images[0].height, images[0].width));
    if target.is_none() {
        if let Some((i, img)) = images
            .iter()
            .enumerate()
            .find(|(_, im)| (im.height, im.width) != (h, w))
        {
            return Err(Error::data(format!(
                "{} is {}x{} but the first image is {h}x{w}; pass a target size",
                files[i].display(),
                img.height,
                img.width
            )));
        }
    }
    let mut x = Tensor3::zeros(h, w, images.len());
    for (k, img) in images.iter().enumerate() {
        let img = resize_bilinear(img, h, w);
        for r in 0..h {
            for c in 0..w {
                x.set(r, c, k, img.get(r, c));
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5(width: usize, height: usize, px: &[u8]) -> Vec<u8> {
        let mut b = format!("P5\n# test image\n{width} {height}\n255\n").into_bytes();
        b.extend_from_slice(px);
        b
    }

    #[test]
    fn parses_p5_pass_through() {
        let img = parse_pgm(&p5(2, 2, &[0, 255, 128, 64])).unwrap();
        assert_eq!(img.pixels, vec![0.0, 255.0, 128.0, 64.0]);
    }

    #[test]
    fn parses_p2_and_rescales() {
        let img = parse_pgm(b"P2\n3 1\n# c\n15\n0 15 5\n").unwrap();
        assert_eq!(img.pixels, vec![0.0, 255.0, 85.0]);
    }

    #[test]
    fn parses_16_bit() {
        let mut b = b"P5 1 1 65535\n".to_vec();
        b.extend_from_slice(&[0xFF, 0xFF]);
        assert_eq!(parse_pgm(&b).unwrap().pixels, vec![255.0]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(parse_pgm(&p5(2, 2, &[1, 2, 3])).is_err());
        assert!(parse_pgm(b"P5\n0 2\n255\n").is_err());
    }

    #[test]
    fn constant_images_stay_constant() {
        let img = GrayImage {
            height: 3,
            width: 5,
            pixels: vec![42.0; 15],
        };
        let r = resize_bilinear(&img, 7, 2);
        assert!(r.pixels.iter().all(|&v| (v - 42.0).abs() < 1e-12));
    }

    #[test]
    fn checkerboard_downsample() {
        // Source sample points for 4 -> 2 fall at 0.5 and 2.5, halfway
        // between pixels, so every output averages a 2x2 block: two 255s and
        // two 0s give 127.5.
        let px: Vec<f64> = (0..16)
            .map(|p| if (p / 4 + p % 4) % 2 == 0 { 255.0 } else { 0.0 })
            .collect();
        let img = GrayImage {
            height: 4,
            width: 4,
            pixels: px,
        };
        let r = resize_bilinear(&img, 2, 2);
        assert_eq!(r.pixels, vec![127.5; 4]);
    }

    #[test]
    fn upsample_clamps_edges() {
        let img = GrayImage {
            height: 1,
            width: 2,
            pixels: vec![0.0, 100.0],
        };
        let r = resize_bilinear(&img, 1, 4);
        // centers map to -0.25, 0.25, 0.75, 1.25 -> clamped to [0, 1]
        assert_eq!(r.pixels, vec![0.0, 25.0, 75.0, 100.0]);
    }
}
