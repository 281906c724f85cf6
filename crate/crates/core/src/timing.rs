//! Serial vibration schedules and character transfer rate.
//!
//! Every dot of a character is one cycle of `dot_on` vibration followed by
//! `dot_off` silence, dots fire one at a time in ascending order, and the
//! character gap follows the last cycle. A character with `d` dots therefore
//! occupies `d * (dot_on + dot_off) + char_gap` milliseconds. All times are
//! integer milliseconds.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braille::{BrailleCell, Token};

pub const DEFAULT_DOT_ON_MS: u64 = 300;
pub const DEFAULT_DOT_OFF_MS: u64 = 300;
pub const DEFAULT_CHAR_GAP_MS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimingError {
    #[error("cannot schedule a blank cell")]
    EmptyCell,
    #[error("invalid timing: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub dot_on_ms: u64,
    pub dot_off_ms: u64,
    pub char_gap_ms: u64,
    pub word_gap_ms: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig::with_char_gap(DEFAULT_CHAR_GAP_MS)
    }
}

impl TimingConfig {
    pub fn new(
        dot_on_ms: u64,
        dot_off_ms: u64,
        char_gap_ms: u64,
        word_gap_ms: u64,
    ) -> Result<Self, TimingError> {
        let cfg = TimingConfig {
            dot_on_ms,
            dot_off_ms,
            char_gap_ms,
            word_gap_ms,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default dot timing, the given character gap and a word gap of twice it.
    pub fn with_char_gap(char_gap_ms: u64) -> Self {
        TimingConfig {
            dot_on_ms: DEFAULT_DOT_ON_MS,
            dot_off_ms: DEFAULT_DOT_OFF_MS,
            char_gap_ms,
            word_gap_ms: 2 * char_gap_ms,
        }
    }

    pub fn validate(&self) -> Result<(), TimingError> {
        if self.dot_on_ms == 0 {
            return Err(TimingError::InvalidConfig("dot_on must be positive"));
        }
        if self.dot_off_ms == 0 {
            return Err(TimingError::InvalidConfig("dot_off must be positive"));
        }
        if self.word_gap_ms < self.char_gap_ms {
            return Err(TimingError::InvalidConfig("word_gap must be >= char_gap"));
        }
        Ok(())
    }

    /// One dot cycle: vibration plus the silence after it.
    pub fn dot_pitch_ms(&self) -> u64 {
        self.dot_on_ms + self.dot_off_ms
    }

    /// Time a cell occupies before the next character may start.
    pub fn char_window_ms(&self, cell: BrailleCell) -> u64 {
        cell.dot_count() as u64 * self.dot_pitch_ms() + self.char_gap_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VibrationEvent {
    /// Braille dot index, 1..=6.
    pub node: u8,
    pub start_ms: u64,
    pub duration_ms: u64,
}

impl VibrationEvent {
    pub fn end_ms(&self) -> u64 {
        self.start_ms + self.duration_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharWindow {
    pub symbol: char,
    pub cell: BrailleCell,
    pub start_ms: u64,
    pub end_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub events: Vec<VibrationEvent>,
    pub characters: Vec<CharWindow>,
    pub total_duration_ms: u64,
}

impl Schedule {
    /// Line format: `event <node> <start_ms> <duration_ms>`, then
    /// `char <symbol> <start_ms> <end_ms>`, then `total <ms>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(out, "event {} {} {}", e.node, e.start_ms, e.duration_ms);
        }
        for c in &self.characters {
            let _ = writeln!(out, "char {} {} {}", c.symbol, c.start_ms, c.end_ms);
        }
        let _ = writeln!(out, "total {}", self.total_duration_ms);
        out
    }
}

fn push_char(
    schedule: &mut Schedule,
    symbol: char,
    cell: BrailleCell,
    cfg: &TimingConfig,
    origin: u64,
) -> Result<u64, TimingError> {
    if cell.is_blank() {
        return Err(TimingError::EmptyCell);
    }
    let pitch = cfg.dot_pitch_ms();
    for (p, dot) in cell.dots().enumerate() {
        schedule.events.push(VibrationEvent {
            node: dot,
            start_ms: origin + p as u64 * pitch,
            duration_ms: cfg.dot_on_ms,
        });
    }
    let end_ms = origin + cfg.char_window_ms(cell);
    schedule.characters.push(CharWindow {
        symbol,
        cell,
        start_ms: origin,
        end_ms,
    });
    schedule.total_duration_ms = end_ms;
    Ok(end_ms)
}

/// Schedule a single cell starting at `origin`.
pub fn schedule_char(
    cell: BrailleCell,
    cfg: &TimingConfig,
    origin: u64,
) -> Result<Schedule, TimingError> {
    let mut schedule = Schedule::default();
    let symbol = crate::braille::decode_cell(cell, crate::braille::DecodeMode::Letter).unwrap_or(
        if cell == BrailleCell::NUMBER_INDICATOR {
            crate::braille::NUMBER_INDICATOR_SYMBOL
        } else {
            '?'
        },
    );
    push_char(&mut schedule, symbol, cell, cfg, origin)?;
    Ok(schedule)
}

/// Schedule encoded text from time zero.
///
/// A word break directly after a character stretches that character's
/// trailing silence from `char_gap` to `word_gap`; any other word break
/// (leading, or a repeated space) adds a full `word_gap` of silence.
pub fn schedule_text(tokens: &[Token], cfg: &TimingConfig) -> Result<Schedule, TimingError> {
    let mut schedule = Schedule::default();
    let mut cursor = 0u64;
    let mut after_cell = false;
    for token in tokens {
        match *token {
            Token::Cell { symbol, cell } => {
                cursor = push_char(&mut schedule, symbol, cell, cfg, cursor)?;
                after_cell = true;
            }
            Token::WordBreak => {
                cursor += if after_cell {
                    cfg.word_gap_ms - cfg.char_gap_ms
                } else {
                    cfg.word_gap_ms
                };
                after_cell = false;
            }
        }
    }
    schedule.total_duration_ms = cursor;
    Ok(schedule)
}

/// Seconds per dot cycle at the default 300 ms on / 300 ms off.
pub const DEFAULT_DOT_PITCH_S: f64 = (DEFAULT_DOT_ON_MS + DEFAULT_DOT_OFF_MS) as f64 / 1000.0;

/// Characters per second for a character of `dots` dots followed by
/// `char_gap_s` seconds of silence.
pub fn ctr_char(dots: usize, char_gap_s: f64) -> f64 {
    ctr_char_with_pitch(dots, char_gap_s, DEFAULT_DOT_PITCH_S)
}

pub fn ctr_char_with_pitch(dots: usize, char_gap_s: f64, dot_pitch_s: f64) -> f64 {
    1.0 / (dot_pitch_s * dots as f64 + char_gap_s)
}

/// Best case is `a` (one dot), worst case is `q` (five dots).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtrSummary {
    pub max: f64,
    pub min: f64,
    pub avg: f64,
}

pub const CTR_MAX_DOTS: usize = 1;
pub const CTR_MIN_DOTS: usize = 5;

pub fn ctr_average(char_gap_s: f64) -> f64 {
    ctr_summary(char_gap_s).avg
}

pub fn ctr_summary(char_gap_s: f64) -> CtrSummary {
    let max = ctr_char(CTR_MAX_DOTS, char_gap_s);
    let min = ctr_char(CTR_MIN_DOTS, char_gap_s);
    CtrSummary {
        max,
        min,
        avg: (max + min) / 2.0,
    }
}
