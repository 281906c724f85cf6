//! Phone to band byte link.
//!
//! The host side turns text into a paced byte stream on a virtual clock; it
//! is the only place character and word gaps come from. The band side is a
//! byte-at-a-time state machine that looks each symbol up in the braille
//! table and expands it into multiplexer channel selects and motor pulses.
//!
//! Wire format:
//!
//! * data: one ASCII byte per symbol. Lowercase letters, digits, `#` (the
//!   number indicator, sent by the host before every digit run) and space.
//! * config: `0x1B, param, value_hi, value_lo` with `param` one of
//!   [`ConfigParam`].

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braille::{
    encode_char, encode_text, BrailleCell, BrailleError, Token, UnsupportedPolicy,
    NUMBER_INDICATOR_SYMBOL,
};
use crate::timing::{TimingConfig, VibrationEvent, DEFAULT_DOT_OFF_MS, DEFAULT_DOT_ON_MS};

pub const ESCAPE: u8 = 0x1B;
/// Mux channels 0..=5 drive dots 1..=6; 6 and 7 are not wired.
pub const MUX_CHANNELS: u8 = 8;
pub const WIRED_CHANNELS: u8 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("byte 0x{0:02x} is not a mapped symbol")]
    UnknownByte(u8),
    #[error("unknown config parameter 0x{0:02x}")]
    UnknownParameter(u8),
    #[error("config value {value} is not valid for {param:?}")]
    InvalidConfigValue { param: ConfigParam, value: u16 },
    #[error("{0} ms does not fit in a 16-bit config value")]
    ValueOutOfRange(u64),
    #[error(transparent)]
    Braille(#[from] BrailleError),
    #[error(transparent)]
    Timing(#[from] crate::timing::TimingError),
}

/// Deterministic millisecond clock. Only moves forward.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VirtualClock {
    now_ms: u64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(now_ms: u64) -> Self {
        VirtualClock { now_ms }
    }

    pub fn now(&self) -> u64 {
        self.now_ms
    }

    pub fn advance_to(&mut self, t_ms: u64) {
        self.now_ms = self.now_ms.max(t_ms);
    }

    pub fn advance_by(&mut self, delta_ms: u64) {
        self.now_ms += delta_ms;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ConfigParam {
    DotOn = 0x01,
    DotOff = 0x02,
    /// Minimum silence the band itself inserts after every character.
    MinCharGap = 0x03,
}

impl ConfigParam {
    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0x01 => Some(ConfigParam::DotOn),
            0x02 => Some(ConfigParam::DotOff),
            0x03 => Some(ConfigParam::MinCharGap),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkFrame {
    Data(u8),
    Config { param: ConfigParam, value: u16 },
}

impl LinkFrame {
    pub fn to_bytes(self) -> Vec<u8> {
        match self {
            LinkFrame::Data(b) => vec![b],
            LinkFrame::Config { param, value } => {
                let [hi, lo] = value.to_be_bytes();
                vec![ESCAPE, param as u8, hi, lo]
            }
        }
    }
}

/// Config frames that bring a freshly booted band to `cfg`'s dot timing.
pub fn config_frames(cfg: &TimingConfig) -> Result<Vec<LinkFrame>, LinkError> {
    let as_u16 = |ms: u64| u16::try_from(ms).map_err(|_| LinkError::ValueOutOfRange(ms));
    Ok(vec![
        LinkFrame::Config {
            param: ConfigParam::DotOn,
            value: as_u16(cfg.dot_on_ms)?,
        },
        LinkFrame::Config {
            param: ConfigParam::DotOff,
            value: as_u16(cfg.dot_off_ms)?,
        },
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedByte {
    pub at_ms: u64,
    pub byte: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmissionLog {
    pub bytes: Vec<TimedByte>,
    /// When the last character's window (including its trailing gap) closes.
    pub end_ms: u64,
}

/// Pace `text` onto the wire. Every byte leaves when the previous symbol's
/// window `d * (dot_on + dot_off) + char_gap` has elapsed; a space is sent
/// as the word silence begins and stretches it to `word_gap`.
///
/// The whole text is validated before the clock moves.
pub fn host_transmit(
    text: &str,
    cfg: &TimingConfig,
    clock: &mut VirtualClock,
) -> Result<EmissionLog, LinkError> {
    cfg.validate()?;
    let tokens = encode_text(text, UnsupportedPolicy::Strict)?;
    let mut log = EmissionLog::default();
    let mut send_at = clock.now();
    let mut after_symbol = false;
    for token in tokens {
        clock.advance_to(send_at);
        match token {
            Token::Cell { symbol, cell } => {
                log.bytes.push(TimedByte {
                    at_ms: clock.now(),
                    byte: symbol as u8,
                });
                send_at = clock.now() + cfg.char_window_ms(cell);
                after_symbol = true;
            }
            Token::WordBreak => {
                log.bytes.push(TimedByte {
                    at_ms: clock.now(),
                    byte: b' ',
                });
                send_at = clock.now()
                    + if after_symbol {
                        cfg.word_gap_ms - cfg.char_gap_ms
                    } else {
                        cfg.word_gap_ms
                    };
                after_symbol = false;
            }
        }
    }
    clock.advance_to(send_at);
    log.end_ms = clock.now();
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum CommandOp {
    SelectChannel { channel: u8 },
    TriggerPulse { duration_ms: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActuationCommand {
    pub at_ms: u64,
    #[serde(flatten)]
    pub op: CommandOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReceiverMode {
    #[default]
    Idle,
    Escaped,
    EscapedParam(ConfigParam),
    EscapedValue {
        param: ConfigParam,
        high: u8,
    },
}

/// A character accepted by the band whose vibration window has not closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingChar {
    pub symbol: u8,
    pub start_ms: u64,
    pub end_ms: u64,
}

/// Band-side receiver. Characters that arrive mid-vibration are queued and
/// start when the motors free up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receiver {
    mode: ReceiverMode,
    pending: VecDeque<PendingChar>,
    busy_until: u64,
    dot_on_ms: u64,
    dot_off_ms: u64,
    min_char_gap_ms: u64,
}

impl Default for Receiver {
    fn default() -> Self {
        Receiver {
            mode: ReceiverMode::Idle,
            pending: VecDeque::new(),
            busy_until: 0,
            dot_on_ms: DEFAULT_DOT_ON_MS,
            dot_off_ms: DEFAULT_DOT_OFF_MS,
            min_char_gap_ms: 0,
        }
    }
}

fn symbol_cell(byte: u8) -> Option<BrailleCell> {
    match byte {
        b'a'..=b'z' | b'0'..=b'9' => encode_char(byte as char).ok(),
        b'A'..=b'Z' => encode_char(byte.to_ascii_lowercase() as char).ok(),
        b if b == NUMBER_INDICATOR_SYMBOL as u8 => Some(BrailleCell::NUMBER_INDICATOR),
        _ => None,
    }
}

impl Receiver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mode(&self) -> ReceiverMode {
        self.mode
    }

    pub fn busy_until(&self) -> u64 {
        self.busy_until
    }

    pub fn dot_on_ms(&self) -> u64 {
        self.dot_on_ms
    }

    pub fn dot_off_ms(&self) -> u64 {
        self.dot_off_ms
    }

    pub fn min_char_gap_ms(&self) -> u64 {
        self.min_char_gap_ms
    }

    /// Characters still vibrating or waiting, oldest first.
    pub fn pending(&self) -> impl Iterator<Item = &PendingChar> {
        self.pending.iter()
    }

    /// Consume one byte received at `now_ms`. On error the byte is dropped
    /// and any partial config frame is abandoned.
    pub fn feed(&mut self, byte: u8, now_ms: u64) -> Result<Vec<ActuationCommand>, LinkError> {
        while self.pending.front().is_some_and(|p| p.end_ms <= now_ms) {
            self.pending.pop_front();
        }
        match self.mode {
            ReceiverMode::Idle => self.feed_data(byte, now_ms),
            ReceiverMode::Escaped => match ConfigParam::from_id(byte) {
                Some(param) => {
                    self.mode = ReceiverMode::EscapedParam(param);
                    Ok(Vec::new())
                }
                None => {
                    self.mode = ReceiverMode::Idle;
                    Err(LinkError::UnknownParameter(byte))
                }
            },
            ReceiverMode::EscapedParam(param) => {
                self.mode = ReceiverMode::EscapedValue { param, high: byte };
                Ok(Vec::new())
            }
            ReceiverMode::EscapedValue { param, high } => {
                self.mode = ReceiverMode::Idle;
                self.apply_config(param, u16::from_be_bytes([high, byte]))?;
                Ok(Vec::new())
            }
        }
    }

    /// Feed a run of timed bytes, logging and dropping bad ones.
    pub fn feed_chunk(&mut self, chunk: &[TimedByte]) -> Vec<ActuationCommand> {
        let mut out = Vec::new();
        for tb in chunk {
            match self.feed(tb.byte, tb.at_ms) {
                Ok(cmds) => out.extend(cmds),
                Err(e) => log::warn!("dropping byte 0x{:02x} at {} ms: {e}", tb.byte, tb.at_ms),
            }
        }
        out
    }

    fn apply_config(&mut self, param: ConfigParam, value: u16) -> Result<(), LinkError> {
        let ms = u64::from(value);
        match param {
            ConfigParam::DotOn | ConfigParam::DotOff if value == 0 => {
                Err(LinkError::InvalidConfigValue { param, value })
            }
            ConfigParam::DotOn => {
                self.dot_on_ms = ms;
                Ok(())
            }
            ConfigParam::DotOff => {
                self.dot_off_ms = ms;
                Ok(())
            }
            ConfigParam::MinCharGap => {
                self.min_char_gap_ms = ms;
                Ok(())
            }
        }
    }

    fn feed_data(&mut self, byte: u8, now_ms: u64) -> Result<Vec<ActuationCommand>, LinkError> {
        if byte == ESCAPE {
            self.mode = ReceiverMode::Escaped;
            return Ok(Vec::new());
        }
        if byte == b' ' {
            return Ok(Vec::new());
        }
        let cell = symbol_cell(byte).ok_or(LinkError::UnknownByte(byte))?;
        let start = now_ms.max(self.busy_until);
        let pitch = self.dot_on_ms + self.dot_off_ms;
        let mut cmds = Vec::with_capacity(2 * cell.dot_count());
        for (p, dot) in cell.dots().enumerate() {
            let at_ms = start + p as u64 * pitch;
            cmds.push(ActuationCommand {
                at_ms,
                op: CommandOp::SelectChannel { channel: dot - 1 },
            });
            cmds.push(ActuationCommand {
                at_ms,
                op: CommandOp::TriggerPulse {
                    duration_ms: self.dot_on_ms,
                },
            });
        }
        let end = start + cell.dot_count() as u64 * pitch + self.min_char_gap_ms;
        self.busy_until = end;
        self.pending.push_back(PendingChar {
            symbol: byte,
            start_ms: start,
            end_ms: end,
        });
        Ok(cmds)
    }
}

/// Collapse select/pulse pairs into vibration events (channel `k` is dot
/// `k + 1`). Pulses without a select at the same instant are skipped.
pub fn pulse_events(cmds: &[ActuationCommand]) -> Vec<VibrationEvent> {
    let mut selected: Option<(u8, u64)> = None;
    let mut events = Vec::new();
    for cmd in cmds {
        match cmd.op {
            CommandOp::SelectChannel { channel } => selected = Some((channel, cmd.at_ms)),
            CommandOp::TriggerPulse { duration_ms } => {
                if let Some((channel, at)) = selected.take() {
                    if at == cmd.at_ms {
                        events.push(VibrationEvent {
                            node: channel + 1,
                            start_ms: cmd.at_ms,
                            duration_ms,
                        });
                    }
                }
            }
        }
    }
    events
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRun {
    /// Everything put on the wire, config preamble included.
    pub wire: Vec<TimedByte>,
    pub emissions: EmissionLog,
    pub commands: Vec<ActuationCommand>,
}

/// Host and a freshly booted band wired together: the host first sends
/// config frames for `cfg`'s dot timing, then the paced text.
pub fn link_roundtrip(text: &str, cfg: &TimingConfig) -> Result<LinkRun, LinkError> {
    let mut clock = VirtualClock::new();
    let preamble = config_frames(cfg)?;
    let emissions = host_transmit(text, cfg, &mut clock)?;
    let mut wire: Vec<TimedByte> = preamble
        .into_iter()
        .flat_map(LinkFrame::to_bytes)
        .map(|byte| TimedByte { at_ms: 0, byte })
        .collect();
    wire.extend_from_slice(&emissions.bytes);
    let mut receiver = Receiver::new();
    let commands = receiver.feed_chunk(&wire);
    Ok(LinkRun {
        wire,
        emissions,
        commands,
    })
}
