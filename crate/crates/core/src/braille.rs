//! Six-dot braille cells and the grade-1 character table used by the band.
//!
//! Dots are numbered the usual way: 1-2-3 down the left column, 4-5-6 down
//! the right. Only lowercase letters and digits are representable; uppercase
//! input is folded to lowercase and digit runs are prefixed with a single
//! number indicator.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BrailleError {
    #[error("unsupported character {ch:?} at position {position}")]
    UnsupportedCharacter { ch: char, position: usize },
    #[error("no {mode} maps to cell [{cell}]")]
    UnknownCell { cell: BrailleCell, mode: DecodeMode },
    #[error("dot {0} is outside 1..=6")]
    InvalidDot(u8),
}

/// A set of raised dots, stored as a bitmask (bit `k-1` is dot `k`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BrailleCell(u8);

impl BrailleCell {
    pub const BLANK: BrailleCell = BrailleCell(0);
    /// Dots 3-4-5-6.
    pub const NUMBER_INDICATOR: BrailleCell = BrailleCell(0b11_1100);

    const fn from_mask(mask: u8) -> Self {
        BrailleCell(mask & 0b11_1111)
    }

    pub fn from_dots(dots: &[u8]) -> Result<Self, BrailleError> {
        let mut mask = 0u8;
        for &d in dots {
            if !(1..=6).contains(&d) {
                return Err(BrailleError::InvalidDot(d));
            }
            mask |= 1 << (d - 1);
        }
        Ok(BrailleCell(mask))
    }

    pub fn contains(self, dot: u8) -> bool {
        (1..=6).contains(&dot) && self.0 & (1 << (dot - 1)) != 0
    }

    /// Raised dots in ascending order.
    pub fn dots(self) -> impl Iterator<Item = u8> {
        (1..=6u8).filter(move |&d| self.contains(d))
    }

    pub fn dot_count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_blank(self) -> bool {
        self.0 == 0
    }

    pub fn mask(self) -> u8 {
        self.0
    }
}

impl fmt::Display for BrailleCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in self.dots() {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for BrailleCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BrailleCell{{{self}}}")
    }
}

impl TryFrom<Vec<u8>> for BrailleCell {
    type Error = BrailleError;

    fn try_from(dots: Vec<u8>) -> Result<Self, Self::Error> {
        BrailleCell::from_dots(&dots)
    }
}

impl From<BrailleCell> for Vec<u8> {
    fn from(cell: BrailleCell) -> Self {
        cell.dots().collect()
    }
}

// Bitmask literal helper: dots listed as a decimal string, e.g. 1245.
const fn cell(digits: u32) -> BrailleCell {
    let mut mask = 0u8;
    let mut rest = digits;
    while rest > 0 {
        let d = (rest % 10) as u8;
        mask |= 1 << (d - 1);
        rest /= 10;
    }
    BrailleCell::from_mask(mask)
}

const LETTERS: [BrailleCell; 26] = [
    cell(1),     // a
    cell(12),    // b
    cell(14),    // c
    cell(145),   // d
    cell(15),    // e
    cell(124),   // f
    cell(1245),  // g
    cell(125),   // h
    cell(24),    // i
    cell(245),   // j
    cell(13),    // k
    cell(123),   // l
    cell(134),   // m
    cell(1345),  // n
    cell(135),   // o
    cell(1234),  // p
    cell(12345), // q
    cell(1235),  // r
    cell(234),   // s
    cell(2345),  // t
    cell(136),   // u
    cell(1236),  // v
    cell(2456),  // w
    cell(1346),  // x
    cell(13456), // y
    cell(1356),  // z
];

/// Which table [`decode_cell`] searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Letter,
    Digit,
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeMode::Letter => f.write_str("letter"),
            DecodeMode::Digit => f.write_str("digit"),
        }
    }
}

/// Cell for a letter or digit. Digits return the cell of their paired letter
/// (`1`..`9` → `a`..`i`, `0` → `j`); the number indicator is the caller's job.
pub fn encode_char(c: char) -> Result<BrailleCell, BrailleError> {
    let lower = c.to_ascii_lowercase();
    match lower {
        'a'..='z' => Ok(LETTERS[(lower as u8 - b'a') as usize]),
        '1'..='9' => Ok(LETTERS[(lower as u8 - b'1') as usize]),
        '0' => Ok(LETTERS[9]),
        _ => Err(BrailleError::UnsupportedCharacter { ch: c, position: 0 }),
    }
}

pub fn decode_cell(cell: BrailleCell, mode: DecodeMode) -> Result<char, BrailleError> {
    let idx = LETTERS.iter().position(|&c| c == cell);
    match (mode, idx) {
        (DecodeMode::Letter, Some(i)) => Ok((b'a' + i as u8) as char),
        (DecodeMode::Digit, Some(i)) if i < 9 => Ok((b'1' + i as u8) as char),
        (DecodeMode::Digit, Some(9)) => Ok('0'),
        _ => Err(BrailleError::UnknownCell { cell, mode }),
    }
}

/// One element of an encoded text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Token {
    /// `symbol` is the source character, or `'#'` for the number indicator.
    Cell {
        symbol: char,
        cell: BrailleCell,
    },
    WordBreak,
}

impl Token {
    pub fn cell(self) -> Option<BrailleCell> {
        match self {
            Token::Cell { cell, .. } => Some(cell),
            Token::WordBreak => None,
        }
    }
}

/// What [`encode_text`] does with characters it cannot encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnsupportedPolicy {
    #[default]
    Strict,
    /// Drop the character as if it were absent from the input.
    Skip,
}

pub const NUMBER_INDICATOR_SYMBOL: char = '#';

pub fn encode_text(text: &str, policy: UnsupportedPolicy) -> Result<Vec<Token>, BrailleError> {
    let mut tokens = Vec::with_capacity(text.len() + 1);
    let mut in_digits = false;
    for (position, ch) in text.chars().enumerate() {
        let lower = ch.to_ascii_lowercase();
        match lower {
            ' ' => {
                in_digits = false;
                tokens.push(Token::WordBreak);
            }
            'a'..='z' => {
                in_digits = false;
                tokens.push(Token::Cell {
                    symbol: lower,
                    cell: encode_char(lower)?,
                });
            }
            '0'..='9' => {
                if !in_digits {
                    tokens.push(Token::Cell {
                        symbol: NUMBER_INDICATOR_SYMBOL,
                        cell: BrailleCell::NUMBER_INDICATOR,
                    });
                    in_digits = true;
                }
                tokens.push(Token::Cell {
                    symbol: lower,
                    cell: encode_char(lower)?,
                });
            }
            _ => match policy {
                UnsupportedPolicy::Strict => {
                    return Err(BrailleError::UnsupportedCharacter { ch, position })
                }
                UnsupportedPolicy::Skip => {}
            },
        }
    }
    Ok(tokens)
}

/// Human-readable table, one `symbol dots` line per entry: letters, digits,
/// then the number indicator.
pub fn table_dump() -> String {
    let mut out = String::new();
    for ch in ('a'..='z').chain('0'..='9') {
        let c = encode_char(ch).expect("table covers letters and digits");
        out.push_str(&format!("{ch} {c}\n"));
    }
    out.push_str(&format!(
        "{NUMBER_INDICATOR_SYMBOL} {}\n",
        BrailleCell::NUMBER_INDICATOR
    ));
    out
}
