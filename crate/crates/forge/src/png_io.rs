//! PNG encoding with fixed settings so identical images give identical bytes.

use std::io::Cursor;
use std::path::Path;

use illusion_forge_core::raster::RasterImage;

#[derive(Debug, thiserror::Error)]
pub enum PngError {
    #[error("png encode: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("unsupported png layout {0:?}/{1:?}; expected 8-bit RGB")]
    Unsupported(png::ColorType, png::BitDepth),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// 8-bit RGB, no alpha, no ancillary chunks. Compression and filtering are
/// pinned so the output depends only on the pixels.
pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>, PngError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width(), img.height());
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Balanced);
        enc.set_filter(png::Filter::Up);
        let mut writer = enc.write_header()?;
        writer.write_image_data(img.pixels())?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<RasterImage, PngError> {
    let reader = png::Decoder::new(Cursor::new(bytes));
    let mut reader = reader.read_info()?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Rgb || depth != png::BitDepth::Eight {
        return Err(PngError::Unsupported(color, depth));
    }
    let size = reader.output_buffer_size().ok_or(PngError::Unsupported(color, depth))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf)?;
    buf.truncate(info.buffer_size());
    RasterImage::from_raw(info.width, info.height, buf).map_err(|_| PngError::Unsupported(color, depth))
}

pub fn write_png(path: &Path, img: &RasterImage) -> Result<(), PngError> {
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|source| PngError::Io { path: path.display().to_string(), source })
}

pub fn read_png(path: &Path) -> Result<RasterImage, PngError> {
    let bytes = std::fs::read(path).map_err(|source| PngError::Io { path: path.display().to_string(), source })?;
    decode_png(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_white_pixel() {
        let img = RasterImage::filled(1, 1, [255, 255, 255]);
        let back = decode_png(&encode_png(&img).unwrap()).unwrap();
        assert_eq!(back.pixels(), &[255, 255, 255]);
    }

    #[test]
    fn encode_is_a_fixpoint() {
        let mut img = RasterImage::filled(9, 7, [10, 200, 30]);
        img.set_pixel(3, 4, [1, 2, 3]);
        let once = encode_png(&img).unwrap();
        let twice = encode_png(&decode_png(&once).unwrap()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn only_critical_chunks() {
        let bytes = encode_png(&RasterImage::filled(4, 4, [0, 0, 0])).unwrap();
        let mut names = Vec::new();
        let mut pos = 8;
        while pos < bytes.len() {
            let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
            names.push(String::from_utf8(bytes[pos + 4..pos + 8].to_vec()).unwrap());
            pos += 12 + len;
        }
        assert_eq!(names.first().map(String::as_str), Some("IHDR"));
        assert_eq!(names.last().map(String::as_str), Some("IEND"));
        assert!(names.iter().all(|n| matches!(n.as_str(), "IHDR" | "IDAT" | "IEND")), "{names:?}");
    }
}
