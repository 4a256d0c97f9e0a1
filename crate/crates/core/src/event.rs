//! Events and event frames.
//!
//! An [`Event`] is one polarity change at one pixel; an [`EventFrame`] is the
//! synchronous snapshot of every pixel's pending ON/OFF bit captured on a
//! sample request. Frames are stored as two bitmaps (one per polarity) and a
//! pixel never holds both polarities within the same frame.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::geometry::{HEIGHT, PIXELS, QUAD_COLS, QUAD_ROWS, WIDTH};

/// 64-bit words needed to hold one bit per pixel.
pub const BITMAP_WORDS: usize = PIXELS.div_ceil(64);

/// Direction of a brightness change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    /// Brightness increase.
    On,
    /// Brightness decrease.
    Off,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::On => Polarity::Off,
            Polarity::Off => Polarity::On,
        }
    }
}

/// A single sensor event: location, polarity and microsecond timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub t_us: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t_us: u64, x: u16, y: u16, polarity: Polarity) -> Result<Self, FrameError> {
        if (x as usize) < WIDTH && (y as usize) < HEIGHT {
            Ok(Event { t_us, x, y, polarity })
        } else {
            Err(FrameError::PixelOutOfRange { x, y })
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("pixel ({x}, {y}) outside the 132x104 sensor array")]
    PixelOutOfRange { x: u16, y: u16 },
    #[error("quad ({qx}, {qy}) outside the 66x52 quad grid")]
    QuadOutOfRange { qx: usize, qy: usize },
    #[error("pixel ({x}, {y}) already holds the opposite polarity")]
    ConflictingPolarity { x: u16, y: u16 },
    #[error("bitmap must hold {expected} words, got {got}")]
    WrongWordCount { expected: usize, got: usize },
    #[error("bitmap word {word} sets both polarities for one pixel")]
    OverlappingPolarities { word: usize },
    #[error("bitmap sets bits past the end of the pixel array")]
    TailBitsSet,
}

/// One bit per pixel, row-major, pixel (x, y) at bit y * WIDTH + x.
#[derive(Clone, PartialEq, Eq)]
struct Bitmap {
    words: Box<[u64; BITMAP_WORDS]>,
}

/// Bits of the last word that fall inside the pixel array.
const TAIL_MASK: u64 = {
    let used = PIXELS % 64;
    if used == 0 {
        u64::MAX
    } else {
        (1u64 << used) - 1
    }
};

impl Bitmap {
    fn empty() -> Self {
        Bitmap { words: Box::new([0; BITMAP_WORDS]) }
    }

    fn from_words(words: &[u64]) -> Result<Self, FrameError> {
        if words.len() != BITMAP_WORDS {
            return Err(FrameError::WrongWordCount { expected: BITMAP_WORDS, got: words.len() });
        }
        if words[BITMAP_WORDS - 1] & !TAIL_MASK != 0 {
            return Err(FrameError::TailBitsSet);
        }
        let mut out = Self::empty();
        out.words.copy_from_slice(words);
        Ok(out)
    }

    #[inline]
    fn get(&self, idx: usize) -> bool {
        self.words[idx / 64] >> (idx % 64) & 1 != 0
    }

    #[inline]
    fn set(&mut self, idx: usize) {
        self.words[idx / 64] |= 1 << (idx % 64);
    }

    #[inline]
    fn clear(&mut self, idx: usize) {
        self.words[idx / 64] &= !(1 << (idx % 64));
    }

    fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Snapshot of all pending ON/OFF bits at one sample instant.
#[derive(Clone, PartialEq, Eq)]
pub struct EventFrame {
    sample_index: u64,
    on: Bitmap,
    off: Bitmap,
}

#[inline]
fn pixel_index(x: u16, y: u16) -> usize {
    y as usize * WIDTH + x as usize
}

impl EventFrame {
    /// A frame with no events.
    pub fn empty(sample_index: u64) -> Self {
        EventFrame { sample_index, on: Bitmap::empty(), off: Bitmap::empty() }
    }

    /// Builds a frame directly from per-polarity bitmap words.
    ///
    /// Rejects overlapping polarities and bits outside the pixel array.
    pub fn from_bitmaps(sample_index: u64, on: &[u64], off: &[u64]) -> Result<Self, FrameError> {
        let on = Bitmap::from_words(on)?;
        let off = Bitmap::from_words(off)?;
        for (i, (a, b)) in on.words.iter().zip(off.words.iter()).enumerate() {
            if a & b != 0 {
                return Err(FrameError::OverlappingPolarities { word: i });
            }
        }
        Ok(EventFrame { sample_index, on, off })
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    pub fn with_sample_index(mut self, sample_index: u64) -> Self {
        self.sample_index = sample_index;
        self
    }

    /// Sets the event bit for one pixel.
    ///
    /// Setting the same polarity twice is a no-op; setting the opposite
    /// polarity is rejected, a pixel carries at most one event per frame.
    pub fn set(&mut self, x: u16, y: u16, polarity: Polarity) -> Result<(), FrameError> {
        if (x as usize) >= WIDTH || (y as usize) >= HEIGHT {
            return Err(FrameError::PixelOutOfRange { x, y });
        }
        let idx = pixel_index(x, y);
        let (target, other) = match polarity {
            Polarity::On => (&mut self.on, &self.off),
            Polarity::Off => (&mut self.off, &self.on),
        };
        if other.get(idx) {
            return Err(FrameError::ConflictingPolarity { x, y });
        }
        target.set(idx);
        Ok(())
    }

    /// Clears any event at the pixel.
    pub fn clear(&mut self, x: u16, y: u16) {
        if (x as usize) < WIDTH && (y as usize) < HEIGHT {
            let idx = pixel_index(x, y);
            self.on.clear(idx);
            self.off.clear(idx);
        }
    }

    /// The event at a pixel, if any.
    pub fn polarity_at(&self, x: u16, y: u16) -> Option<Polarity> {
        if (x as usize) >= WIDTH || (y as usize) >= HEIGHT {
            return None;
        }
        let idx = pixel_index(x, y);
        if self.on.get(idx) {
            Some(Polarity::On)
        } else if self.off.get(idx) {
            Some(Polarity::Off)
        } else {
            None
        }
    }

    /// Number of set event bits, ON plus OFF.
    pub fn event_count(&self) -> usize {
        self.on.count_ones() + self.off.count_ones()
    }

    /// The 8-bit packing of the 2x2 pixel block at quad (qx, qy).
    ///
    /// The four pixels are taken row-major within the quad, each contributing
    /// an ON bit then an OFF bit; pixel (2qx, 2qy) occupies the two most
    /// significant bits.
    pub fn quad_events(&self, qx: usize, qy: usize) -> Result<u8, FrameError> {
        if qx >= QUAD_COLS || qy >= QUAD_ROWS {
            return Err(FrameError::QuadOutOfRange { qx, qy });
        }
        Ok(self.quad_byte(qx, qy))
    }

    pub(crate) fn quad_byte(&self, qx: usize, qy: usize) -> u8 {
        debug_assert!(qx < QUAD_COLS && qy < QUAD_ROWS);
        let mut byte = 0u8;
        for (slot, (dy, dx)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            let idx = pixel_index((2 * qx + dx) as u16, (2 * qy + dy) as u16);
            let shift = 6 - 2 * slot;
            if self.on.get(idx) {
                byte |= 0b10 << shift;
            }
            if self.off.get(idx) {
                byte |= 0b01 << shift;
            }
        }
        byte
    }

    /// Iterates set events in row-major pixel order.
    pub fn iter_events(&self) -> impl Iterator<Item = (u16, u16, Polarity)> + '_ {
        (0..PIXELS).filter_map(move |idx| {
            let x = (idx % WIDTH) as u16;
            let y = (idx / WIDTH) as u16;
            self.polarity_at(x, y).map(|p| (x, y, p))
        })
    }

    /// True when both frames carry exactly the same event bits
    /// (sample indices may differ).
    pub fn events_eq(&self, other: &EventFrame) -> bool {
        self.on == other.on && self.off == other.off
    }

    pub fn is_empty(&self) -> bool {
        self.event_count() == 0
    }

    /// Expands the frame into per-pixel events stamped with `t_us`.
    pub fn to_events(&self, t_us: u64) -> Vec<Event> {
        self.iter_events()
            .map(|(x, y, p)| Event { t_us, x, y, polarity: p })
            .collect()
    }

    pub fn on_words(&self) -> &[u64] {
        &self.on.words[..]
    }

    pub fn off_words(&self) -> &[u64] {
        &self.off.words[..]
    }
}

impl fmt::Debug for EventFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventFrame")
            .field("sample_index", &self.sample_index)
            .field("event_count", &self.event_count())
            .finish()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EventTextError {
    #[error("line {line}: expected `t_us,x,y,p`, got {got:?}")]
    BadRecord { line: usize, got: String },
    #[error("line {line}: {source}")]
    BadPixel { line: usize, source: FrameError },
}

/// Writes events in the canonical text form, one `t_us,x,y,p` record per line.
pub fn write_events<W: Write>(mut w: W, events: &[Event]) -> io::Result<()> {
    for e in events {
        let p = match e.polarity {
            Polarity::On => 1,
            Polarity::Off => 0,
        };
        writeln!(w, "{},{},{},{}", e.t_us, e.x, e.y, p)?;
    }
    Ok(())
}

/// Parses the canonical `t_us,x,y,p` text form. Blank lines are skipped.
pub fn parse_events(text: &str) -> Result<Vec<Event>, EventTextError> {
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let bad = || EventTextError::BadRecord { line, got: raw.to_string() };
        let mut fields = trimmed.split(',');
        let t_us: u64 = fields.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let x: u16 = fields.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let y: u16 = fields.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let p: u8 = fields.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        if fields.next().is_some() {
            return Err(bad());
        }
        let polarity = match p {
            1 => Polarity::On,
            0 => Polarity::Off,
            _ => return Err(bad()),
        };
        events.push(
            Event::new(t_us, x, y, polarity)
                .map_err(|source| EventTextError::BadPixel { line, source })?,
        );
    }
    Ok(events)
}
