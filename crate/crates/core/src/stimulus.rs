//! Brightness stimuli.
//!
//! A stimulus produces one brightness frame per sample instant, either from a
//! synthetic generator (moving bar, moving disk) or from a directory of 8-bit
//! PGM images taken in lexicographic order. Synthetic generators can add
//! seeded per-pixel log-brightness jitter; a given (seed, sample) pair always
//! yields the same frame.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dvs::BrightnessFrame;
use crate::geometry::{HEIGHT, PIXELS, WIDTH};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: not an 8-bit binary PGM: {reason}")]
    PgmFormat { path: PathBuf, reason: String },
    #[error("{path}: image is {got_w}x{got_h}, expected {}x{}", WIDTH, HEIGHT)]
    PgmSize { path: PathBuf, got_w: usize, got_h: usize },
    #[error("{path}: no .pgm files found")]
    EmptyDirectory { path: PathBuf },
    #[error(transparent)]
    Brightness(#[from] crate::dvs::DvsError),
}

/// A vertical bar sweeping horizontally, wrapping at the array edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingBar {
    pub bar_width_px: usize,
    pub velocity_px_per_sample: f64,
    pub background_lum: f64,
    pub bar_lum: f64,
    pub jitter_log_sigma: f64,
}

/// A filled disk translating at constant velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingDisk {
    pub radius_px: f64,
    pub start_x: f64,
    pub start_y: f64,
    pub velocity_x_px_per_sample: f64,
    pub velocity_y_px_per_sample: f64,
    pub background_lum: f64,
    pub disk_lum: f64,
    pub jitter_log_sigma: f64,
}

/// A sample-indexed brightness source.
#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    MovingBar(MovingBar),
    MovingDisk(MovingDisk),
    /// Pre-rendered frames, e.g. loaded from a PGM directory. Sampling past
    /// the end holds the last frame.
    Frames(Vec<BrightnessFrame>),
}

impl Stimulus {
    /// The brightness frame at one sample instant. `seed` drives the jitter
    /// of synthetic generators and is ignored by pre-rendered frames.
    pub fn frame(&self, sample_index: u64, seed: u64) -> BrightnessFrame {
        match self {
            Stimulus::MovingBar(bar) => bar.frame(sample_index, seed),
            Stimulus::MovingDisk(disk) => disk.frame(sample_index, seed),
            Stimulus::Frames(frames) => {
                let last = frames.len().saturating_sub(1);
                frames[(sample_index as usize).min(last)].clone()
            }
        }
    }

    /// Number of frames for pre-rendered sources, unbounded otherwise.
    pub fn sample_count(&self) -> Option<usize> {
        match self {
            Stimulus::Frames(frames) => Some(frames.len()),
            _ => None,
        }
    }
}

fn jitter_rng(seed: u64, sample_index: u64) -> SplitMix64 {
    SplitMix64::new(seed ^ sample_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn apply_jitter(values: &mut [f64], sigma: f64, seed: u64, sample_index: u64) {
    if sigma <= 0.0 {
        return;
    }
    let mut rng = jitter_rng(seed, sample_index);
    for v in values.iter_mut() {
        // Clamp so extreme deviates on bright pixels cannot overflow to inf.
        *v = (*v * (sigma * rng.next_normal()).exp()).min(f64::MAX);
    }
}

impl MovingBar {
    fn frame(&self, sample_index: u64, seed: u64) -> BrightnessFrame {
        let pos = (self.velocity_px_per_sample * sample_index as f64).floor() as i64;
        let mut values = vec![self.background_lum; PIXELS];
        for dx in 0..self.bar_width_px as i64 {
            let col = (pos + dx).rem_euclid(WIDTH as i64) as usize;
            for y in 0..HEIGHT {
                values[y * WIDTH + col] = self.bar_lum;
            }
        }
        apply_jitter(&mut values, self.jitter_log_sigma, seed, sample_index);
        BrightnessFrame::new(values).expect("generator emits valid luminance")
    }
}

impl MovingDisk {
    fn frame(&self, sample_index: u64, seed: u64) -> BrightnessFrame {
        let t = sample_index as f64;
        let cx = self.start_x + self.velocity_x_px_per_sample * t;
        let cy = self.start_y + self.velocity_y_px_per_sample * t;
        let r2 = self.radius_px * self.radius_px;
        let mut values = vec![self.background_lum; PIXELS];
        for y in 0..HEIGHT {
            for x in 0..WIDTH {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                if dx * dx + dy * dy <= r2 {
                    values[y * WIDTH + x] = self.disk_lum;
                }
            }
        }
        apply_jitter(&mut values, self.jitter_log_sigma, seed, sample_index);
        BrightnessFrame::new(values).expect("generator emits valid luminance")
    }
}

/// Loads a binary 8-bit PGM (P5) of the sensor's dimensions, normalizing
/// pixel values to [0, 1].
pub fn load_pgm(path: &Path) -> Result<BrightnessFrame, StimulusError> {
    let bytes = fs::read(path).map_err(|source| StimulusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format_err = |reason: &str| StimulusError::PgmFormat {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };

    let mut cursor = 0usize;
    let mut token = || -> Result<String, StimulusError> {
        // Skip whitespace and `#` comment lines between header tokens.
        loop {
            match bytes.get(cursor) {
                Some(b) if b.is_ascii_whitespace() => cursor += 1,
                Some(b'#') => {
                    while cursor < bytes.len() && bytes[cursor] != b'\n' {
                        cursor += 1;
                    }
                }
                Some(_) => break,
                None => return Err(format_err("truncated header")),
            }
        }
        let start = cursor;
        while cursor < bytes.len() && !bytes[cursor].is_ascii_whitespace() {
            cursor += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..cursor]).into_owned())
    };

    if token()? != "P5" {
        return Err(format_err("missing P5 magic"));
    }
    let width: usize = token()?.parse().map_err(|_| format_err("bad width"))?;
    let height: usize = token()?.parse().map_err(|_| format_err("bad height"))?;
    let maxval: usize = token()?.parse().map_err(|_| format_err("bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(format_err("maxval outside 1..=255"));
    }
    if width != WIDTH || height != HEIGHT {
        return Err(StimulusError::PgmSize { path: path.to_path_buf(), got_w: width, got_h: height });
    }
    // Exactly one whitespace byte separates the header from the raster.
    cursor += 1;
    let raster = bytes.get(cursor..cursor + PIXELS).ok_or_else(|| format_err("truncated raster"))?;
    let values = raster.iter().map(|&b| b as f64 / maxval as f64).collect();
    Ok(BrightnessFrame::new(values)?)
}

/// Loads every `.pgm` in a directory in lexicographic filename order, one
/// image per sample instant.
pub fn load_pgm_dir(dir: &Path) -> Result<Vec<BrightnessFrame>, StimulusError> {
    let entries = fs::read_dir(dir).map_err(|source| StimulusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(StimulusError::EmptyDirectory { path: dir.to_path_buf() });
    }
    paths.iter().map(|p| load_pgm(p)).collect()
}

/// Writes a brightness frame as a binary 8-bit PGM, clamping values to [0, 1].
pub fn write_pgm(path: &Path, frame: &BrightnessFrame) -> Result<(), StimulusError> {
    let mut out = Vec::with_capacity(PIXELS + 32);
    write!(out, "P5\n{} {}\n255\n", WIDTH, HEIGHT).expect("in-memory write");
    out.extend(frame.values().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    fs::write(path, out).map_err(|source| StimulusError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bar() -> MovingBar {
        MovingBar {
            bar_width_px: 4,
            velocity_px_per_sample: 2.0,
            background_lum: 0.1,
            bar_lum: 0.9,
            jitter_log_sigma: 0.0,
        }
    }

    #[test]
    fn bar_moves_and_wraps() {
        let b = bar();
        let f0 = b.frame(0, 0);
        assert_eq!(f0.get(0, 10), 0.9);
        assert_eq!(f0.get(3, 10), 0.9);
        assert_eq!(f0.get(4, 10), 0.1);
        let f1 = b.frame(1, 0);
        assert_eq!(f1.get(1, 10), 0.1);
        assert_eq!(f1.get(2, 10), 0.9);
        // One full sweep later the bar is back at the origin.
        let f_wrap = b.frame(66, 0);
        assert!(f_wrap == f0);
    }

    #[test]
    fn zero_contrast_bar_is_constant() {
        let b = MovingBar { bar_lum: 0.1, ..bar() };
        let f = b.frame(3, 9);
        assert!(f.values().iter().all(|&v| v == 0.1));
    }

    #[test]
    fn disk_covers_its_center() {
        let d = MovingDisk {
            radius_px: 5.0,
            start_x: 30.0,
            start_y: 40.0,
            velocity_x_px_per_sample: 1.0,
            velocity_y_px_per_sample: 0.0,
            background_lum: 0.2,
            disk_lum: 0.8,
            jitter_log_sigma: 0.0,
        };
        let f = d.frame(0, 0);
        assert_eq!(f.get(30, 40), 0.8);
        assert_eq!(f.get(30, 50), 0.2);
        let f10 = d.frame(10, 0);
        assert_eq!(f10.get(40, 40), 0.8);
        assert_eq!(f10.get(30, 40), 0.2);
    }

    #[test]
    fn jitter_is_seed_deterministic() {
        let b = MovingBar { jitter_log_sigma: 0.05, ..bar() };
        assert!(b.frame(4, 99) == b.frame(4, 99));
        assert!(b.frame(4, 99) != b.frame(4, 100));
        assert!(b.frame(4, 99) != b.frame(5, 99));
    }

    #[test]
    fn pgm_roundtrip() {
        let b = bar();
        let frame = b.frame(7, 0);
        let dir = std::env::temp_dir().join(format!("evpipe-pgm-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("frame.pgm");
        write_pgm(&path, &frame).unwrap();
        let loaded = load_pgm(&path).unwrap();
        // 8-bit quantization: within half a grey level.
        for (a, b) in frame.values().iter().zip(loaded.values()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-9);
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn pgm_dir_is_lexicographic() {
        let dir = std::env::temp_dir().join(format!("evpipe-pgmdir-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let b = bar();
        // Written out of order on purpose.
        write_pgm(&dir.join("b_frame.pgm"), &b.frame(1, 0)).unwrap();
        write_pgm(&dir.join("a_frame.pgm"), &b.frame(0, 0)).unwrap();
        let frames = load_pgm_dir(&dir).unwrap();
        assert_eq!(frames.len(), 2);
        // 8-bit quantization applies, so compare loosely.
        assert!((frames[0].get(0, 0) - 0.9).abs() < 0.01); // bar at origin in sample 0
        assert!((frames[1].get(0, 0) - 0.1).abs() < 0.01);
        assert_eq!(Stimulus::Frames(frames).sample_count(), Some(2));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn pgm_rejects_bad_magic_and_size() {
        let dir = std::env::temp_dir().join(format!("evpipe-pgmbad-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p2 = dir.join("ascii.pgm");
        fs::write(&p2, b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
        assert!(matches!(load_pgm(&p2), Err(StimulusError::PgmFormat { .. })));
        let small = dir.join("small.pgm");
        fs::write(&small, b"P5\n2 2\n255\n\0\0\0\0").unwrap();
        assert!(matches!(load_pgm(&small), Err(StimulusError::PgmSize { .. })));
        fs::remove_dir_all(&dir).unwrap();
    }
}
