//! Event-frame rendering.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

use evpipe_core::event::{EventFrame, Polarity};
use evpipe_core::geometry::{HEIGHT, WIDTH};
use evpipe_core::saer::{decode_bytes, STREAM_BYTES};

/// Renders a frame as a binary PPM: ON events red, OFF events green,
/// background white.
pub fn render_frame_ppm(frame: &EventFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(WIDTH * HEIGHT * 3 + 32);
    write!(out, "P6\n{} {}\n255\n", WIDTH, HEIGHT).expect("in-memory write");
    for y in 0..HEIGHT as u16 {
        for x in 0..WIDTH as u16 {
            let rgb: [u8; 3] = match frame.polarity_at(x, y) {
                Some(Polarity::On) => [255, 0, 0],
                Some(Polarity::Off) => [0, 255, 0],
                None => [255, 255, 255],
            };
            out.extend_from_slice(&rgb);
        }
    }
    out
}

/// Loads the `index`-th stored frame from a trace directory and renders it.
pub fn render_from_trace(trace_dir: &Path, index: usize) -> Result<Vec<u8>> {
    let bin_path = trace_dir.join("frames.bin");
    let bytes = fs::read(&bin_path)
        .with_context(|| format!("cannot read stored frames {}", bin_path.display()))?;
    let frame_count = bytes.len() / STREAM_BYTES;
    if bytes.len() % STREAM_BYTES != 0 {
        bail!("{} is not a whole number of {}-byte streams", bin_path.display(), STREAM_BYTES);
    }
    if index >= frame_count {
        bail!("frame index {index} out of range: trace holds {frame_count} frames");
    }
    let stream = &bytes[index * STREAM_BYTES..(index + 1) * STREAM_BYTES];
    let frame = decode_bytes(stream).context("stored stream is malformed")?;
    Ok(render_frame_ppm(&frame))
}
