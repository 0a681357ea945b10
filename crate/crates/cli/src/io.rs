//! Image decoding and PNG writing.

use std::path::Path;

use abcd_core::{GrayImage, ImageBuffer};
use image::{DynamicImage, ImageFormat};

use crate::error::{CliError, CliResult};

/// Decodes any supported file into 8-bit RGB, or 8-bit gray for
/// single-channel sources.
pub fn load_image(path: &Path) -> CliResult<ImageBuffer> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
    decode_image(&bytes).map_err(|e| e.context(path.display()))
}

pub fn decode_image(bytes: &[u8]) -> CliResult<ImageBuffer> {
    let img = image::load_from_memory(bytes).map_err(|e| CliError::io(format!("decode failed: {e}")))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let buf = match img {
        DynamicImage::ImageLuma8(g) => ImageBuffer::new(w, h, 1, g.into_raw()),
        other => ImageBuffer::new(w, h, 3, other.to_rgb8().into_raw()),
    };
    Ok(buf?)
}

fn save(img: DynamicImage, path: &Path) -> CliResult<()> {
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))
}

pub fn save_rgb_png(img: &ImageBuffer, path: &Path) -> CliResult<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let dynamic = if img.channels() == 1 {
        DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, img.data().to_vec()).expect("sized buffer"))
    } else {
        DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, img.data().to_vec()).expect("sized buffer"))
    };
    save(dynamic, path)
}

pub fn save_gray_png(img: &GrayImage, path: &Path) -> CliResult<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    save(
        DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, img.data().to_vec()).expect("sized buffer")),
        path,
    )
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(format!("creating {}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageBuffer::from_rgb_fn(7, 5, |x, y| [x as u8 * 30, y as u8 * 40, 9]);
        let path = dir.path().join("a.png");
        save_rgb_png(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);

        let gray = GrayImage::from_fn(4, 3, |x, y| (x * 10 + y) as u8);
        save_gray_png(&gray, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!((back.channels(), back.data()), (1, gray.data()));
    }

    #[test]
    fn garbage_is_io_failure() {
        let err = decode_image(b"not an image").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert_eq!(load_image(Path::new("/nonexistent/x.png")).unwrap_err().exit_code(), 3);
    }
}
