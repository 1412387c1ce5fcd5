//! Raster file formats.
//!
//! * `ascii`: first line `height width`, then `height` lines of `width`
//!   whitespace-separated decimals. Values are written with the shortest
//!   representation that round-trips, so write then read is lossless.
//! * `raw`: 16-byte little-endian header (`SPKL`, u32 width, u32 height,
//!   u32 version = 1) followed by `width * height` f64 values, row-major.
//! * `pgm16`: binary P5 with maxval 65535. Values are linearly quantized from
//!   `[min, max]`; a constant image writes all zeros. For viewing only.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::Raster;

const RAW_MAGIC: &[u8; 4] = b"SPKL";
const RAW_VERSION: u32 = 1;
const RAW_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    Ascii,
    RawF64,
    Pgm16,
}

impl RasterFormat {
    /// Guesses the format from a file extension; anything unknown is raw.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("txt" | "asc" | "ascii") => RasterFormat::Ascii,
            Some("pgm") => RasterFormat::Pgm16,
            _ => RasterFormat::RawF64,
        }
    }
}

impl FromStr for RasterFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii" | "ascii-matrix" => Ok(RasterFormat::Ascii),
            "raw" | "raw-f64-le" => Ok(RasterFormat::RawF64),
            "pgm" | "pgm16" => Ok(RasterFormat::Pgm16),
            other => Err(Error::InvalidArgument(format!("unknown raster format {other:?}"))),
        }
    }
}

pub fn read_raster(path: impl AsRef<Path>, format: RasterFormat) -> Result<Raster> {
    let bytes = fs::read(path)?;
    decode(&bytes, format)
}

pub fn write_raster(img: &Raster, path: impl AsRef<Path>, format: RasterFormat) -> Result<()> {
    let bytes = encode(img, format);
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn encode(img: &Raster, format: RasterFormat) -> Vec<u8> {
    match format {
        RasterFormat::Ascii => encode_ascii(img).into_bytes(),
        RasterFormat::RawF64 => encode_raw(img),
        RasterFormat::Pgm16 => encode_pgm16(img),
    }
}

pub fn decode(bytes: &[u8], format: RasterFormat) -> Result<Raster> {
    match format {
        RasterFormat::Ascii => decode_ascii(bytes),
        RasterFormat::RawF64 => decode_raw(bytes),
        RasterFormat::Pgm16 => decode_pgm(bytes),
    }
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Converts construction failures of decoded data into format errors.
fn build(width: usize, height: usize, data: Vec<f64>) -> Result<Raster> {
    Raster::new(width, height, data).map_err(|e| format_err(e.to_string()))
}

fn encode_ascii(img: &Raster) -> String {
    let mut out = format!("{} {}\n", img.height(), img.width());
    for r in 0..img.height() {
        let line: Vec<String> = img.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn decode_ascii(bytes: &[u8]) -> Result<Raster> {
    let text = std::str::from_utf8(bytes).map_err(|_| format_err("ascii raster is not UTF-8"))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| format_err("empty ascii raster"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format_err(format!("bad ascii header {header:?}")))?;
    let [height, width] = dims[..] else {
        return Err(format_err(format!(
            "ascii header must be \"height width\", got {header:?}"
        )));
    };
    let mut data = Vec::with_capacity(width * height);
    let mut rows = 0;
    for line in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| format_err(format!("bad value {tok:?} in row {rows}")))?;
            data.push(v);
        }
        if data.len() - before != width {
            return Err(format_err(format!(
                "row {rows} has {} values, expected {width}",
                data.len() - before
            )));
        }
        rows += 1;
    }
    if rows != height {
        return Err(format_err(format!("found {rows} rows, expected {height}")));
    }
    build(width, height, data)
}

fn encode_raw(img: &Raster) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + 8 * img.data().len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&RAW_VERSION.to_le_bytes());
    for v in img.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_raw(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < RAW_HEADER_LEN || &bytes[..4] != RAW_MAGIC {
        return Err(format_err("missing SPKL header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (width, height, version) = (word(4) as usize, word(8) as usize, word(12));
    if version != RAW_VERSION {
        return Err(format_err(format!("unsupported raw version {version}")));
    }
    let body = &bytes[RAW_HEADER_LEN..];
    if body.len() != 8 * width * height {
        return Err(format_err(format!(
            "raw body holds {} bytes, expected {} for {width}x{height}",
            body.len(),
            8 * width * height
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    build(width, height, data)
}

/// Linear quantization of `[min, max]` onto `0..=65535`.
pub fn quantize_u16(img: &Raster) -> Vec<u16> {
    let (lo, hi) = img.min_max();
    let range = hi - lo;
    img.data()
        .iter()
        .map(|&v| {
            if range > 0.0 {
                ((v - lo) / range * 65535.0).round() as u16
            } else {
                0
            }
        })
        .collect()
}

fn encode_pgm16(img: &Raster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    for q in quantize_u16(img) {
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

/// Reads a binary PGM. 8- and 16-bit maxvals are accepted; values are the
/// raw gray levels.
fn decode_pgm(bytes: &[u8]) -> Result<Raster> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(format_err(format!("expected P5 magic, got {:?}", fields[0])));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format_err(format!("bad PGM header field {s:?}")))
    };
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(format!("PGM maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let body = bytes.get(pos..).unwrap_or(&[]);
    let wide = maxval > 255;
    let expected = width * height * if wide { 2 } else { 1 };
    if body.len() != expected {
        return Err(format_err(format!(
            "PGM body holds {} bytes, expected {expected}",
            body.len()
        )));
    }
    let data = if wide {
        body.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect()
    } else {
        body.iter().map(|&b| b as f64).collect()
    };
    build(width, height, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Raster {
        Raster::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn raw_round_trip() {
        let img = sample();
        let back = decode(&encode(&img, RasterFormat::RawF64), RasterFormat::RawF64).unwrap();
        assert_eq!(back, img);
        assert_eq!(encode(&img, RasterFormat::RawF64).len(), 16 + 32);
    }

    #[test]
    fn ascii_layout() {
        let text = String::from_utf8(encode(&sample(), RasterFormat::Ascii)).unwrap();
        assert_eq!(text, "2 2\n1 2\n3 4\n");
    }

    #[test]
    fn constant_pgm_quantizes_to_zero() {
        let img = Raster::filled(3, 2, 42.0).unwrap();
        let bytes = encode(&img, RasterFormat::Pgm16);
        assert!(bytes.starts_with(b"P5\n3 2\n65535\n"));
        let back = decode(&bytes, RasterFormat::Pgm16).unwrap();
        assert!(back.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pgm_spans_full_range() {
        let back = decode(&encode(&sample(), RasterFormat::Pgm16), RasterFormat::Pgm16).unwrap();
        // (v - 1) / 3 * 65535
        assert_eq!(back.data(), &[0.0, 21845.0, 43690.0, 65535.0]);
    }

    #[test]
    fn malformed_inputs() {
        let cases: [(&[u8], RasterFormat); 6] = [
            (b"2 2\n1 2\n3\n", RasterFormat::Ascii),
            (b"2 2\n1 2\n", RasterFormat::Ascii),
            (b"2 2\n1 -2\n3 4\n", RasterFormat::Ascii),
            (b"2\n1 2\n", RasterFormat::Ascii),
            (b"SPKX\0\0\0\0\0\0\0\0\0\0\0\0", RasterFormat::RawF64),
            (b"P2\n1 1\n255\n0", RasterFormat::Pgm16),
        ];
        for (bytes, fmt) in cases {
            assert!(
                matches!(decode(bytes, fmt), Err(Error::Format(_))),
                "{:?}",
                String::from_utf8_lossy(bytes)
            );
        }
        let mut raw = encode(&sample(), RasterFormat::RawF64);
        raw.pop();
        assert!(matches!(decode(&raw, RasterFormat::RawF64), Err(Error::Format(_))));
    }

    #[test]
    fn pgm_header_comments_and_8bit() {
        let bytes = b"P5\n# made by hand\n2 1\n255\n\x00\xff";
        let img = decode(bytes, RasterFormat::Pgm16).unwrap();
        assert_eq!(img.data(), &[0.0, 255.0]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        write_raster(&sample(), &path, RasterFormat::from_path(&path)).unwrap();
        assert_eq!(read_raster(&path, RasterFormat::Ascii).unwrap(), sample());
    }

    proptest! {
        #[test]
        fn lossless_round_trips(
            w in 1usize..6, h in 1usize..6,
            vals in proptest::collection::vec(0.0f64..1e6, 36)
        ) {
            let img = Raster::new(w, h, vals[..w * h].to_vec()).unwrap();
            for fmt in [RasterFormat::Ascii, RasterFormat::RawF64] {
                let back = decode(&encode(&img, fmt), fmt).unwrap();
                prop_assert_eq!(back.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                                img.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            }
        }
    }
}
