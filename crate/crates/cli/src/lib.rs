//! Headless entry points. [`run`] is the whole program minus process
//! plumbing, so tests can drive it with an argument list and a buffer.

use std::error::Error;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use brailleband::braille::{encode_text, table_dump, Token, UnsupportedPolicy};
use brailleband::emulator::{apply_commands, validate_geometry, BandGeometry, FOREARM_TPDT_MM};
use brailleband::link::{link_roundtrip, CommandOp, ESCAPE};
use brailleband::stats::{
    read_raw_csv, read_summary_csv, reading_study_summaries, Family, StatsReport, DEFAULT_ALPHA,
};
use brailleband::timing::{
    ctr_summary, schedule_text, TimingConfig, DEFAULT_DOT_OFF_MS, DEFAULT_DOT_ON_MS,
};
use brailleband::trainer::{SessionStatus, SessionStore, TrialConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

type CmdResult = Result<(), Box<dyn Error>>;

#[derive(Debug, Parser)]
#[command(
    name = "brailleband",
    version,
    about = "Braille over a vibrating wristband"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    /// JSON
    Structured,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    AllPairs,
    SelectedPairs,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::AllPairs => Family::AllPairs,
            FamilyArg::SelectedPairs => Family::SelectedPairs,
        }
    }
}

#[derive(Debug, Args)]
struct TimingArgs {
    /// Silence after each character, ms.
    #[arg(long)]
    gap: u64,
    #[arg(long, default_value_t = DEFAULT_DOT_ON_MS)]
    dot_on: u64,
    #[arg(long, default_value_t = DEFAULT_DOT_OFF_MS)]
    dot_off: u64,
    /// Silence between words, ms [default: twice the gap].
    #[arg(long)]
    word_gap: Option<u64>,
}

impl TimingArgs {
    fn config(&self) -> Result<TimingConfig, Box<dyn Error>> {
        let word_gap = self.word_gap.unwrap_or(2 * self.gap);
        Ok(TimingConfig::new(
            self.dot_on,
            self.dot_off,
            self.gap,
            word_gap,
        )?)
    }
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Reference gap for the pairwise table [default: best mean].
    #[arg(long)]
    reference: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "all-pairs")]
    family: FamilyArg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the braille cell of every character.
    Encode {
        text: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print the full braille table.
    Table {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print the vibration schedule for a text.
    Schedule {
        text: String,
        #[command(flatten)]
        timing: TimingArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Show the paced bytes on the wire and the band's actuation commands.
    Transmit {
        text: String,
        #[command(flatten)]
        timing: TimingArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Send a text through the link and print the motor timeline.
    Emulate {
        text: String,
        #[command(flatten)]
        timing: TimingArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Character transfer rate for a gap in seconds.
    Ctr {
        #[arg(long)]
        gap: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Check node spacing against the two-point discrimination threshold.
    Geometry {
        #[arg(long, default_value_t = FOREARM_TPDT_MM)]
        tpdt: f64,
        /// Shrink or stretch the default layout.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Move one node, after scaling: DOT:ALONG_MM:AROUND_MM. Repeatable.
        #[arg(long, value_parser = parse_placement)]
        place: Vec<(u8, f64, f64)>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// ANOVA and pairwise tests over accuracy data [default: embedded study table].
    Stats {
        /// CSV with gap_ms,mean,sd,n.
        #[arg(long, conflicts_with = "raw")]
        summary: Option<PathBuf>,
        /// CSV with subject,gap_ms,accuracy_pct.
        #[arg(long)]
        raw: Option<PathBuf>,
        #[command(flatten)]
        stats: StatsArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Report over the sessions in a store.
    Report {
        #[arg(long)]
        store: PathBuf,
        /// Comma-separated gaps to include [default: all].
        #[arg(long, value_delimiter = ',')]
        gaps: Option<Vec<u64>>,
        #[arg(long)]
        reference: Option<u64>,
        #[arg(long, value_enum, default_value = "all-pairs")]
        family: FamilyArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Work with trainer sessions directly on a store directory.
    Session {
        #[arg(long, global = true)]
        store: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text", global = true)]
        format: Format,
        #[command(subcommand)]
        action: SessionAction,
    },
    /// Run the HTTP trainer service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Persist sessions here; in memory when absent.
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum SessionAction {
    Create {
        #[arg(long)]
        subject: String,
        #[arg(long)]
        gap: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        word_length: Option<usize>,
        #[arg(long)]
        words_per_block: Option<usize>,
    },
    Show {
        id: String,
    },
    Transmit {
        id: String,
        word: String,
    },
    Guess {
        id: String,
        record: usize,
        guess: String,
    },
    Timeline {
        id: String,
        record: usize,
    },
    Rating {
        id: String,
        rating: u8,
    },
    Close {
        id: String,
    },
}

/// Parse `args` (program name first) and execute. Returns the exit code:
/// 0 on success, 1 on data errors, 2 on usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn emit(
    out: &mut dyn Write,
    format: Format,
    text: impl FnOnce() -> String,
    value: impl FnOnce() -> Value,
) -> CmdResult {
    match format {
        Format::Text => out.write_all(text().as_bytes())?,
        Format::Structured => writeln!(out, "{}", serde_json::to_string_pretty(&value())?)?,
    }
    Ok(())
}

fn parse_placement(raw: &str) -> Result<(u8, f64, f64), String> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [dot, along, around] = parts[..] else {
        return Err("expected DOT:ALONG_MM:AROUND_MM".into());
    };
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    Ok((
        dot.parse().map_err(|e| format!("{dot:?}: {e}"))?,
        num(along)?,
        num(around)?,
    ))
}

/// Four decimals, trailing zeros dropped: 0.6250 -> 0.625, 0.2500 -> 0.25.
pub fn fmt_rate(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

fn execute(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Encode { text, format } => {
            let tokens = encode_text(&text, UnsupportedPolicy::Strict)?;
            emit(
                out,
                format,
                || {
                    tokens
                        .iter()
                        .map(|t| match t {
                            Token::Cell { symbol, cell } => format!("{symbol}: {cell}\n"),
                            Token::WordBreak => "space: -\n".to_string(),
                        })
                        .collect()
                },
                || {
                    Value::Array(
                        tokens
                            .iter()
                            .map(|t| match t {
                                Token::Cell { symbol, cell } => {
                                    json!({"symbol": symbol.to_string(), "dots": cell.dots().collect::<Vec<_>>()})
                                }
                                Token::WordBreak => json!({"word_break": true}),
                            })
                            .collect(),
                    )
                },
            )
        }
        Command::Table { format } => {
            let dump = table_dump();
            emit(
                out,
                format,
                || dump.clone(),
                || {
                    Value::Array(
                        dump.lines()
                            .filter_map(|l| l.split_once(' '))
                            .map(|(s, d)| json!({"symbol": s, "dots": d}))
                            .collect(),
                    )
                },
            )
        }
        Command::Schedule {
            text,
            timing,
            format,
        } => {
            let cfg = timing.config()?;
            let schedule = schedule_text(&encode_text(&text, UnsupportedPolicy::Strict)?, &cfg)?;
            emit(out, format, || schedule.to_text(), || json!(schedule))
        }
        Command::Transmit {
            text,
            timing,
            format,
        } => {
            let run = link_roundtrip(&text, &timing.config()?)?;
            emit(
                out,
                format,
                || {
                    let mut s = String::new();
                    // bytes still to come in the current config frame
                    let mut in_frame = 0;
                    for b in &run.wire {
                        let shown = if in_frame > 0 {
                            in_frame -= 1;
                            String::new()
                        } else if b.byte == ESCAPE {
                            in_frame = 3;
                            " config".to_string()
                        } else if b.byte == b' ' {
                            " space".to_string()
                        } else {
                            format!(" {}", b.byte as char)
                        };
                        s.push_str(&format!("byte {} 0x{:02x}{shown}\n", b.at_ms, b.byte));
                    }
                    for c in &run.commands {
                        match c.op {
                            CommandOp::SelectChannel { channel } => {
                                s.push_str(&format!("select {} {channel}\n", c.at_ms))
                            }
                            CommandOp::TriggerPulse { duration_ms } => {
                                s.push_str(&format!("pulse {} {duration_ms}\n", c.at_ms))
                            }
                        }
                    }
                    s.push_str(&format!("end {}\n", run.emissions.end_ms));
                    s
                },
                || json!(run),
            )
        }
        Command::Emulate {
            text,
            timing,
            format,
        } => {
            let run = link_roundtrip(&text, &timing.config()?)?;
            let mut timeline = apply_commands(&run.commands)?;
            timeline.extend_to(run.emissions.end_ms);
            emit(
                out,
                format,
                || timeline.to_text(),
                || json!({"horizon_ms": timeline.horizon_ms(), "events": timeline.events()}),
            )
        }
        Command::Ctr { gap, format } => {
            if !(gap.is_finite() && gap >= 0.0) {
                return Err(
                    format!("gap must be a non-negative number of seconds, got {gap}").into(),
                );
            }
            let c = ctr_summary(gap);
            emit(
                out,
                format,
                || {
                    format!(
                        "max {} min {} avg {}\n",
                        fmt_rate(c.max),
                        fmt_rate(c.min),
                        fmt_rate(c.avg)
                    )
                },
                || json!(c),
            )
        }
        Command::Geometry {
            tpdt,
            scale,
            place,
            format,
        } => {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(format!("scale must be positive, got {scale}").into());
            }
            let mut nodes = BandGeometry::default().scaled(scale).nodes().to_vec();
            for (dot, along, around) in place {
                let node = nodes
                    .iter_mut()
                    .find(|n| n.dot == dot)
                    .ok_or("dot must be 1-6")?;
                node.along_mm = along;
                node.around_mm = around;
            }
            let geometry = BandGeometry::from_nodes(nodes)?;
            let violations = validate_geometry(&geometry, tpdt);
            emit(
                out,
                format,
                || {
                    let mut s = String::new();
                    for n in geometry.nodes() {
                        s.push_str(&format!(
                            "node {} {:.2} {:.2}\n",
                            n.dot, n.along_mm, n.around_mm
                        ));
                    }
                    for v in &violations {
                        s.push_str(&format!(
                            "violation {} {} {:.2}\n",
                            v.dots.0, v.dots.1, v.distance_mm
                        ));
                    }
                    s.push_str(if violations.is_empty() {
                        "ok\n"
                    } else {
                        "fail\n"
                    });
                    s
                },
                || json!({"tpdt_mm": tpdt, "nodes": geometry.nodes(), "violations": violations}),
            )?;
            if violations.is_empty() {
                Ok(())
            } else {
                Err(format!("{} node pair(s) closer than {tpdt} mm", violations.len()).into())
            }
        }
        Command::Stats {
            summary,
            raw,
            stats,
            format,
        } => {
            let summaries = match (summary, raw) {
                (Some(path), _) => read_summary_csv(
                    File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?,
                )?,
                (None, Some(path)) => read_raw_csv(
                    File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?,
                )?
                .iter()
                .map(|g| g.summarize())
                .collect::<Result<_, _>>()?,
                (None, None) => reading_study_summaries(),
            };
            let report =
                StatsReport::build(summaries, stats.reference, stats.alpha, stats.family.into())?;
            emit(out, format, || report.to_text(), || json!(report))
        }
        Command::Report {
            store,
            gaps,
            reference,
            family,
            format,
        } => {
            let store = SessionStore::open(&store)?;
            let report = store.report(gaps.as_deref(), reference, family.into())?;
            emit(
                out,
                format,
                || {
                    let mut s = report.stats.to_text();
                    s.push_str("\nSessions per gap\n");
                    for (g, n) in &report.sessions_per_gap {
                        s.push_str(&format!("{g:>8}  {n:>4}\n"));
                    }
                    match report.usability_mean {
                        Some(m) => s.push_str(&format!("\nUsability mean {m:.2}\n")),
                        None => s.push_str("\nUsability mean unavailable\n"),
                    }
                    s
                },
                || json!(report),
            )
        }
        Command::Session {
            store,
            format,
            action,
        } => {
            let dir = store.ok_or("session commands need --store DIR")?;
            session(&SessionStore::open(&dir)?, action, format, out)
        }
        Command::Serve { port, host, store } => {
            let store = Arc::new(match store {
                Some(dir) => SessionStore::open(dir)?,
                None => SessionStore::in_memory(),
            });
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                writeln!(out, "listening on http://{}", listener.local_addr()?)?;
                out.flush()?;
                brailleband_service::serve(listener, store).await?;
                Ok(())
            })
        }
    }
}

fn session(
    store: &SessionStore,
    action: SessionAction,
    format: Format,
    out: &mut dyn Write,
) -> CmdResult {
    match action {
        SessionAction::Create {
            subject,
            gap,
            seed,
            word_length,
            words_per_block,
        } => {
            let mut config = TrialConfig {
                seed,
                ..TrialConfig::default()
            };
            if let Some(n) = word_length {
                config.word_length = n;
            }
            if let Some(n) = words_per_block {
                config.words_per_block = n;
            }
            let s = store.create(&subject, gap, config)?;
            emit(
                out,
                format,
                || {
                    format!(
                        "session {}\nseed {}\nwords {}\n",
                        s.id,
                        s.seed,
                        s.words.join(" ")
                    )
                },
                || json!(s),
            )
        }
        SessionAction::Show { id } => {
            let s = store.session(&id)?;
            emit(
                out,
                format,
                || {
                    let mut t = format!(
                        "session {}\nsubject {}\ngap {}\nstatus {}\n",
                        s.id,
                        s.subject,
                        s.char_gap_ms,
                        match s.status {
                            SessionStatus::Active => "active",
                            SessionStatus::Closed => "closed",
                        }
                    );
                    for r in &s.records {
                        match &r.guess {
                            Some(g) => t.push_str(&format!(
                                "record {} {} {} {:.2}\n",
                                r.id,
                                r.word,
                                g.text,
                                g.accuracy_pct()
                            )),
                            None => t.push_str(&format!("record {} {} -\n", r.id, r.word)),
                        }
                    }
                    if let Some(a) = s.accuracy_pct() {
                        t.push_str(&format!("accuracy {a:.2}\n"));
                    }
                    if let Some(r) = s.rating {
                        t.push_str(&format!("rating {r}\n"));
                    }
                    t
                },
                || json!(s),
            )
        }
        SessionAction::Transmit { id, word } => {
            let r = store.transmit(&id, &word)?;
            emit(
                out,
                format,
                || {
                    format!(
                        "record {}\nsent_at {}\nduration {}\n",
                        r.id,
                        r.sent_at_ms,
                        r.transmission.makespan_ms()
                    )
                },
                || json!(r),
            )
        }
        SessionAction::Guess { id, record, guess } => {
            let r = store.guess(&id, record, &guess)?;
            let g = r.guess.as_ref().expect("just scored");
            let session_acc = store.session(&id)?.accuracy_pct().unwrap_or(0.0);
            emit(
                out,
                format,
                || {
                    let marks: String = g
                        .correct
                        .iter()
                        .map(|&c| if c { '+' } else { '-' })
                        .collect();
                    format!(
                        "record {} {} {} {marks}\naccuracy {:.2}\nsession {:.2}\n",
                        r.id,
                        r.word,
                        g.text,
                        g.accuracy_pct(),
                        session_acc
                    )
                },
                || json!({"record": r, "accuracy_pct": g.accuracy_pct(), "session_accuracy_pct": session_acc}),
            )
        }
        SessionAction::Timeline { id, record } => {
            let t = store.timeline(&id, record)?;
            emit(
                out,
                format,
                || t.to_text(),
                || json!({"horizon_ms": t.horizon_ms(), "events": t.events()}),
            )
        }
        SessionAction::Rating { id, rating } => {
            let s = store.rate(&id, rating)?;
            emit(out, format, || format!("rating {rating}\n"), || json!(s))
        }
        SessionAction::Close { id } => {
            let s = store.close(&id)?;
            emit(
                out,
                format,
                || format!("session {} closed\n", s.id),
                || json!(s),
            )
        }
    }
}
