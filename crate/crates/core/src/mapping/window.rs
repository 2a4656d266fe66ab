use crate::grids::Image2D;
use crate::nakagami::SampleSet;

use super::kernel::check_size;
use super::MappingError;

/// Half-extent a = ⌈(m + 2) / 2⌉ of a window of nominal side m.
pub fn half_extent(size: usize) -> usize {
    (size + 2).div_ceil(2)
}

/// Inclusive `(x0, x1, y0, y1)` of the window around `(cx, cy)`, truncated at the borders.
pub fn window_bounds(
    width: usize,
    height: usize,
    cx: usize,
    cy: usize,
    size: usize,
) -> (usize, usize, usize, usize) {
    let a = half_extent(size);
    (
        cx.saturating_sub(a),
        (cx + a).min(width - 1),
        cy.saturating_sub(a),
        (cy + a).min(height - 1),
    )
}

/// Appends the window's samples to `buf` in ascending row-major order.
pub(crate) fn collect_window(img: &Image2D, cx: usize, cy: usize, size: usize, buf: &mut Vec<f64>) {
    let (x0, x1, y0, y1) = window_bounds(img.width(), img.height(), cx, cy, size);
    let w = img.width();
    let data = img.data();
    buf.clear();
    for y in y0..=y1 {
        buf.extend_from_slice(&data[y * w + x0..=y * w + x1]);
    }
}

pub fn window_samples(
    img: &Image2D,
    cx: usize,
    cy: usize,
    size: usize,
) -> Result<SampleSet, MappingError> {
    check_size(size)?;
    if cx >= img.width() || cy >= img.height() {
        return Err(MappingError::OutOfBounds { x: cx, y: cy });
    }
    let mut buf = Vec::new();
    collect_window(img, cx, cy, size, &mut buf);
    Ok(SampleSet::new(buf)?)
}
