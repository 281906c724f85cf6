//! Software model of a vibrotactile braille band.
//!
//! * [`braille`]: six-dot cells and the letter/digit table.
//! * [`timing`]: serial vibration schedules and character transfer rate.
//! * [`link`]: paced host transmitter and the band's byte receiver.
//! * [`emulator`]: node geometry and the motor timeline.
//! * [`stats`]: one-way ANOVA and Bonferroni/Holm pairwise comparisons.
//! * [`trainer`]: reading-speed sessions, scoring and persistence.

pub mod braille;
pub mod emulator;
pub mod link;
pub mod stats;
pub mod timing;
pub mod trainer;

pub use braille::{BrailleCell, Token};
pub use timing::{Schedule, TimingConfig, VibrationEvent};
