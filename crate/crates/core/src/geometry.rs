//! Sensor array geometry.
//!
//! The modeled sensor is a 132x104 pixel array read out in 2x2 pixel quads,
//! giving a 66x52 quad grid. These dimensions are fixed properties of the
//! readout hardware; all indexing in the crate derives from them.

/// Pixel columns.
pub const WIDTH: usize = 132;
/// Pixel rows.
pub const HEIGHT: usize = 104;
/// Quad (2x2 block) columns.
pub const QUAD_COLS: usize = WIDTH / 2;
/// Quad (2x2 block) rows.
pub const QUAD_ROWS: usize = HEIGHT / 2;
/// Total pixels, and therefore the maximum events a single frame can carry.
pub const PIXELS: usize = WIDTH * HEIGHT;
/// Total quads, and therefore the readout word count of one frame.
pub const QUADS: usize = QUAD_COLS * QUAD_ROWS;

/// Array dimensions of the modeled sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorGeometry {
    pub width: usize,
    pub height: usize,
    pub quad_cols: usize,
    pub quad_rows: usize,
}

impl SensorGeometry {
    /// The DVS132S array: 132x104 pixels, 66x52 quads.
    pub const DVS132S: SensorGeometry = SensorGeometry {
        width: WIDTH,
        height: HEIGHT,
        quad_cols: QUAD_COLS,
        quad_rows: QUAD_ROWS,
    };

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn quads(&self) -> usize {
        self.quad_cols * self.quad_rows
    }
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self::DVS132S
    }
}
