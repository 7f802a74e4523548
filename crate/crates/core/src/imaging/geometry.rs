use alloc::format;
use alloc::vec::Vec;

use super::{RgbImage, TileSpec};
use crate::{Error, Result};

/// Crop side in source pixels for matching `dst`'s physical width:
/// `round_half_up(dst.um / src.um * src.px)`.
pub fn crop_side(src: TileSpec, dst: TileSpec) -> Result<u32> {
    src.validate()?;
    dst.validate()?;
    if dst.um > src.um {
        return Err(Error::invalid(format!(
            "cannot crop outward: target {} um exceeds source {} um",
            dst.um, src.um
        )));
    }
    let side = libm::floor(dst.um / src.um * src.px as f64 + 0.5) as u32;
    Ok(side.clamp(1, src.px))
}

/// Sub-rectangle copy. The rectangle must lie inside the image.
pub fn crop(image: &RgbImage, x0: u32, y0: u32, w: u32, h: u32) -> Result<RgbImage> {
    if x0 as u64 + w as u64 > image.width() as u64 || y0 as u64 + h as u64 > image.height() as u64 {
        return Err(Error::invalid(format!(
            "crop {w}x{h}+{x0}+{y0} exceeds {}x{} image",
            image.width(),
            image.height()
        )));
    }
    let stride = image.width() as usize * 3;
    let mut data = Vec::with_capacity(w as usize * h as usize * 3);
    for y in y0..y0 + h {
        let start = y as usize * stride + x0 as usize * 3;
        data.extend_from_slice(&image.as_bytes()[start..start + w as usize * 3]);
    }
    RgbImage::new(w, h, data)
}

/// Bilinear resize with half-pixel centres; identity when sizes match.
pub fn resize_bilinear(image: &RgbImage, out_w: u32, out_h: u32) -> Result<RgbImage> {
    if image.is_empty() || out_w == 0 || out_h == 0 {
        return Err(Error::invalid("cannot resize an empty raster"));
    }
    if out_w == image.width() && out_h == image.height() {
        return Ok(image.clone());
    }
    let (in_w, in_h) = (image.width() as usize, image.height() as usize);
    let axis = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|o| {
                let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let i0 = libm::floor(s) as usize;
                let i1 = (i0 + 1).min(inp - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = axis(out_w as usize, in_w);
    let ys = axis(out_h as usize, in_h);
    let src = image.as_bytes();
    let px = |x: usize, y: usize, c: usize| src[(y * in_w + x) * 3 + c] as f64;
    let mut data = Vec::with_capacity(out_w as usize * out_h as usize * 3);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..3 {
                let top = px(x0, y0, c) * (1.0 - fx) + px(x1, y0, c) * fx;
                let bottom = px(x0, y1, c) * (1.0 - fx) + px(x1, y1, c) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                data.push(libm::round(v).clamp(0.0, 255.0) as u8);
            }
        }
    }
    RgbImage::new(out_w, out_h, data)
}

/// Crops the centre of a square `src` tile to `dst`'s physical width and
/// resizes it to `dst.px` square.
pub fn center_crop_resize(image: &RgbImage, src: TileSpec, dst: TileSpec) -> Result<RgbImage> {
    if image.width() != src.px || image.height() != src.px {
        return Err(Error::invalid(format!(
            "image is {}x{}, source spec expects {}x{}",
            image.width(),
            image.height(),
            src.px,
            src.px
        )));
    }
    let side = crop_side(src, dst)?;
    let offset = (src.px - side) / 2;
    let cropped = if side == src.px { image.clone() } else { crop(image, offset, offset, side, side)? };
    resize_bilinear(&cropped, dst.px, dst.px)
}

/// Side-by-side concatenation in the given order.
pub fn merge_trio(images: [&RgbImage; 3]) -> Result<RgbImage> {
    let height = images[0].height();
    if images.iter().any(|i| i.height() != height) {
        return Err(Error::invalid(format!(
            "trio heights differ: {}, {}, {}",
            images[0].height(),
            images[1].height(),
            images[2].height()
        )));
    }
    let width: u32 = images.iter().map(|i| i.width()).sum();
    let mut data = Vec::with_capacity(width as usize * height as usize * 3);
    for y in 0..height as usize {
        for img in images {
            let stride = img.width() as usize * 3;
            data.extend_from_slice(&img.as_bytes()[y * stride..(y + 1) * stride]);
        }
    }
    RgbImage::new(width, height, data)
}
