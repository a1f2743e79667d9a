use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::image::{Stage, TactileImage};
use crate::error::{Error, Result};

/// `<stem>_<stage>_<w>x<h>.png`
pub fn image_file_name(stem: &str, img: &TactileImage) -> String {
    format!("{stem}_{}_{}x{}.png", img.stage().as_str(), img.width(), img.height())
}

/// Writes an 8-bit grayscale PNG.
pub fn write_png(path: &Path, img: &TactileImage) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), img.width() as u32, img.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(&img.to_u8())?;
    writer.finish()?;
    Ok(())
}

/// Reads an 8- or 16-bit grayscale PNG.
pub fn read_png(path: &Path, stage: Stage) -> Result<TactileImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::Dataset(format!(
            "{} is {:?}, expected grayscale",
            path.display(),
            info.color_type
        )));
    }
    let bytes = &buf[..info.buffer_size()];
    let pixels: Vec<f64> = match info.bit_depth {
        png::BitDepth::Eight => bytes.iter().map(|&v| f64::from(v) / 255.0).collect(),
        png::BitDepth::Sixteen => bytes
            .chunks_exact(2)
            .map(|p| f64::from(u16::from_be_bytes([p[0], p[1]])) / 65535.0)
            .collect(),
        other => {
            return Err(Error::Dataset(format!(
                "{}: unsupported bit depth {other:?}",
                path.display()
            )))
        }
    };
    TactileImage::new(info.width as usize, info.height as usize, stage, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_lossless_on_u8_levels() {
        let dir = tempfile::tempdir().unwrap();
        let img = TactileImage::from_fn(240, 135, Stage::Processed, |c, r| ((c + 3 * r) % 256) as f64 / 255.0)
            .unwrap();
        let path = dir.path().join(image_file_name("s0", &img));
        assert!(path.ends_with("s0_processed_240x135.png"));
        write_png(&path, &img).unwrap();
        assert_eq!(read_png(&path, Stage::Processed).unwrap(), img);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_png(Path::new("/nonexistent/x.png"), Stage::Raw),
            Err(Error::Io { .. })
        ));
    }
}
