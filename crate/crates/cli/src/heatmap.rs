use std::path::Path;

use image::{GrayImage, Luma};
use nearsamp_core::imaging::ImagingGrid;

/// One pixel per grid node, `y` increasing upwards, value 1 white.
pub fn render(grid: &ImagingGrid) -> GrayImage {
    let (nx, ny) = (grid.spec.nx, grid.spec.ny);
    GrayImage::from_fn(nx as u32, ny as u32, |x, y| {
        let v = grid.at(x as usize, ny - 1 - y as usize).clamp(0.0, 1.0);
        Luma([(v * 255.0).round() as u8])
    })
}

pub fn save(grid: &ImagingGrid, path: &Path) -> image::ImageResult<()> {
    render(grid).save_with_format(path, image::ImageFormat::Png)
}
