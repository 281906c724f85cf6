//! Reading-speed experiment engine.
//!
//! A session belongs to one subject at one character gap. Each transmitted
//! word goes through the full host → band → emulator path and is kept as a
//! record; the subject's guess is scored character by character. Sessions
//! live in a [`SessionStore`], optionally persisted as append-only files.

mod store;
pub mod words;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emulator::{apply_commands, EmulatorError, MotorTimeline};
use crate::link::{link_roundtrip, EmissionLog, LinkError};
use crate::stats::StatsError;
use crate::timing::{TimingConfig, DEFAULT_DOT_OFF_MS, DEFAULT_DOT_ON_MS};

pub use store::{SessionReport, SessionStore};

/// Character gaps swept in the reading study, longest first.
pub const STUDY_GAPS_MS: [u64; 7] = [2000, 1500, 1200, 1000, 800, 500, 400];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainerError {
    #[error("session {0} not found")]
    UnknownSession(String),
    #[error("session {0} is closed")]
    SessionClosed(String),
    #[error("record {0} not found")]
    UnknownRecord(usize),
    #[error("guess has {got} characters, word has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("record {0} already scored")]
    AlreadyScored(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("rating {0} outside 0..=10")]
    InvalidRating(u8),
    #[error("not enough scored sessions for a report")]
    InsufficientData,
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Emulator(#[from] EmulatorError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("storage: {0}")]
    Storage(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialConfig {
    pub word_length: usize,
    pub words_per_block: usize,
    pub gaps_ms: Vec<u64>,
    /// Informational only.
    pub familiarization_min: u32,
    pub dot_on_ms: u64,
    pub dot_off_ms: u64,
    pub seed: Option<u64>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            word_length: 3,
            words_per_block: 10,
            gaps_ms: STUDY_GAPS_MS.to_vec(),
            familiarization_min: 15,
            dot_on_ms: DEFAULT_DOT_ON_MS,
            dot_off_ms: DEFAULT_DOT_OFF_MS,
            seed: None,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<(), TrainerError> {
        let bad = |m: &str| Err(TrainerError::InvalidConfig(m.to_string()));
        if self.word_length == 0 {
            return bad("word_length must be positive");
        }
        if self.gaps_ms.contains(&0) {
            return bad("gaps must be positive");
        }
        let mut sorted = self.gaps_ms.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.gaps_ms.len() {
            return bad("gaps must be distinct");
        }
        if self.dot_on_ms == 0 || self.dot_off_ms == 0 {
            return bad("dot timing must be positive");
        }
        Ok(())
    }

    pub fn timing(&self, char_gap_ms: u64) -> TimingConfig {
        TimingConfig {
            dot_on_ms: self.dot_on_ms,
            dot_off_ms: self.dot_off_ms,
            char_gap_ms,
            word_gap_ms: 2 * char_gap_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Closed,
}

/// Output of pushing one word through the link and the emulator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transmission {
    pub emissions: EmissionLog,
    /// Relative to the start of the word.
    pub timeline: MotorTimeline,
}

impl Transmission {
    pub fn run(word: &str, timing: &TimingConfig) -> Result<Self, TrainerError> {
        let run = link_roundtrip(word, timing)?;
        let mut timeline = apply_commands(&run.commands)?;
        timeline.extend_to(run.emissions.end_ms);
        Ok(Transmission {
            emissions: run.emissions,
            timeline,
        })
    }

    pub fn makespan_ms(&self) -> u64 {
        self.timeline.horizon_ms()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guess {
    pub text: String,
    /// Positional match against the sent word.
    pub correct: Vec<bool>,
}

impl Guess {
    pub fn correct_count(&self) -> usize {
        self.correct.iter().filter(|&&c| c).count()
    }

    pub fn accuracy_pct(&self) -> f64 {
        if self.correct.is_empty() {
            return 0.0;
        }
        100.0 * self.correct_count() as f64 / self.correct.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordRecord {
    pub id: usize,
    pub word: String,
    /// Session clock when the first byte went out.
    pub sent_at_ms: u64,
    pub transmission: Transmission,
    pub guess: Option<Guess>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub subject: String,
    pub char_gap_ms: u64,
    pub config: TrialConfig,
    pub seed: u64,
    /// Suggested practice words, picked from `seed`.
    pub words: Vec<String>,
    pub records: Vec<WordRecord>,
    pub rating: Option<u8>,
    pub status: SessionStatus,
    /// Virtual time consumed by all transmissions so far.
    pub clock_ms: u64,
}

impl Session {
    pub fn new(
        id: String,
        subject: String,
        char_gap_ms: u64,
        mut config: TrialConfig,
    ) -> Result<Self, TrainerError> {
        config.validate()?;
        if char_gap_ms == 0 {
            return Err(TrainerError::InvalidConfig(
                "char gap must be positive".into(),
            ));
        }
        let seed = *config.seed.get_or_insert_with(rand::random);
        let words = words::pick_words(config.word_length, config.words_per_block, seed);
        Ok(Session {
            id,
            subject,
            char_gap_ms,
            config,
            seed,
            words,
            records: Vec::new(),
            rating: None,
            status: SessionStatus::Active,
            clock_ms: 0,
        })
    }

    pub fn timing(&self) -> TimingConfig {
        self.config.timing(self.char_gap_ms)
    }

    fn ensure_active(&self) -> Result<(), TrainerError> {
        match self.status {
            SessionStatus::Active => Ok(()),
            SessionStatus::Closed => Err(TrainerError::SessionClosed(self.id.clone())),
        }
    }

    pub fn transmit_word(&mut self, word: &str) -> Result<&WordRecord, TrainerError> {
        self.ensure_active()?;
        let transmission = Transmission::run(word, &self.timing())?;
        let id = self.records.len();
        let sent_at_ms = self.clock_ms;
        self.clock_ms += transmission.emissions.end_ms;
        self.records.push(WordRecord {
            id,
            word: word.to_ascii_lowercase(),
            sent_at_ms,
            transmission,
            guess: None,
        });
        Ok(&self.records[id])
    }

    pub fn record_guess(
        &mut self,
        record_id: usize,
        guess: &str,
    ) -> Result<&WordRecord, TrainerError> {
        self.ensure_active()?;
        let record = self
            .records
            .get_mut(record_id)
            .ok_or(TrainerError::UnknownRecord(record_id))?;
        if record.guess.is_some() {
            return Err(TrainerError::AlreadyScored(record_id));
        }
        let guess = guess.to_ascii_lowercase();
        let expected = record.word.chars().count();
        let got = guess.chars().count();
        if expected != got {
            return Err(TrainerError::LengthMismatch { expected, got });
        }
        let correct = record
            .word
            .chars()
            .zip(guess.chars())
            .map(|(a, b)| a == b)
            .collect();
        record.guess = Some(Guess {
            text: guess,
            correct,
        });
        Ok(record)
    }

    pub fn rate(&mut self, rating: u8) -> Result<(), TrainerError> {
        if rating > 10 {
            return Err(TrainerError::InvalidRating(rating));
        }
        self.rating = Some(rating);
        Ok(())
    }

    pub fn close(&mut self) {
        self.status = SessionStatus::Closed;
    }

    /// (correct, total) characters over scored records.
    pub fn char_counts(&self) -> (usize, usize) {
        self.records
            .iter()
            .filter_map(|r| r.guess.as_ref())
            .fold((0, 0), |(c, t), g| {
                (c + g.correct_count(), t + g.correct.len())
            })
    }

    /// Percentage of correctly read characters, `None` before any guess.
    pub fn accuracy_pct(&self) -> Option<f64> {
        match self.char_counts() {
            (_, 0) => None,
            (c, t) => Some(100.0 * c as f64 / t as f64),
        }
    }
}

/// Build the gap-level report from a set of sessions: each session with at
/// least one scored word contributes its accuracy as one observation.
pub fn session_report<'a>(
    sessions: impl IntoIterator<Item = &'a Session>,
    gaps_ms: Option<&[u64]>,
    reference_ms: Option<u64>,
    family: crate::stats::Family,
) -> Result<SessionReport, TrainerError> {
    store::build_report(sessions, gaps_ms, reference_ms, family)
}
