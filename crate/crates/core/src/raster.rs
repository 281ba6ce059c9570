//! Lossless 8-bit grayscale file I/O: PNG and binary PGM (P5).

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::{ColorType, ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};
use thiserror::Error;

use crate::pixel::PixelGrid;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported file extension (expected .png or .pgm)")]
    UnknownFormat { path: PathBuf },
    #[error("{path}: malformed image: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("{path}: expected 8-bit grayscale, found {found}")]
    NotGray8 { path: PathBuf, found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    PngGray8,
    PgmBinary,
}

impl RasterFormat {
    pub fn from_path(path: &Path) -> Result<Self, RasterError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("png") => Ok(Self::PngGray8),
            Some("pgm") => Ok(Self::PgmBinary),
            _ => Err(RasterError::UnknownFormat {
                path: path.to_path_buf(),
            }),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RasterError + '_ {
    move |source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> RasterError {
    RasterError::Malformed {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn load_image(path: &Path) -> Result<PixelGrid, RasterError> {
    let format = RasterFormat::from_path(path)?;
    let bytes = fs::read(path).map_err(io_err(path))?;
    match format {
        RasterFormat::PngGray8 => decode_png(&bytes, path),
        RasterFormat::PgmBinary => decode_pgm(&bytes, path),
    }
}

/// Writes atomically: the image goes to a temporary file in the destination
/// directory and is renamed into place, so failures leave no partial file.
pub fn save_image(image: &PixelGrid, path: &Path) -> Result<(), RasterError> {
    let bytes = match RasterFormat::from_path(path)? {
        RasterFormat::PngGray8 => encode_png(image),
        RasterFormat::PgmBinary => encode_pgm(image),
    };
    write_atomic(path, &bytes)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RasterError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| RasterError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn encode_png(image: &PixelGrid) -> Vec<u8> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(
            image.as_bytes(),
            image.width() as u32,
            image.height() as u32,
            ExtendedColorType::L8,
        )
        .expect("in-memory PNG encoding of a valid L8 buffer");
    out
}

pub fn decode_png(bytes: &[u8], path: &Path) -> Result<PixelGrid, RasterError> {
    let reader = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
    let decoded = reader
        .decode()
        .map_err(|e| malformed(path, e.to_string()))?;
    if decoded.color() != ColorType::L8 {
        return Err(RasterError::NotGray8 {
            path: path.to_path_buf(),
            found: format!("{:?}", decoded.color()),
        });
    }
    let gray = decoded.into_luma8();
    let (w, h) = gray.dimensions();
    PixelGrid::new(w as usize, h as usize, gray.into_raw()).map_err(|e| malformed(path, e.to_string()))
}

pub fn encode_pgm(image: &PixelGrid) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.as_bytes().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(image.as_bytes());
    out
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<PixelGrid, RasterError> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| malformed(path, "empty file"))?;
    match magic {
        b"P5" => {}
        b"P6" | b"P3" => {
            return Err(RasterError::NotGray8 {
                path: path.to_path_buf(),
                found: "PPM color".into(),
            })
        }
        _ => return Err(malformed(path, "not a binary PGM (P5) file")),
    }
    let mut number = |what: &str| -> Result<usize, RasterError> {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| malformed(path, format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(path, format!("invalid {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(RasterError::NotGray8 {
            path: path.to_path_buf(),
            found: format!("maxval {maxval}"),
        });
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed(path, "missing raster data"));
    }
    pos += 1;
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| malformed(path, "dimensions overflow"))?;
    let data = &bytes[pos..];
    if data.len() != expected {
        return Err(malformed(
            path,
            format!("expected {expected} raster bytes, found {}", data.len()),
        ));
    }
    PixelGrid::new(width, height, data.to_vec()).map_err(|e| malformed(path, e.to_string()))
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}
