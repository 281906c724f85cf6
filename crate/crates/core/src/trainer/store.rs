use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::{Session, TrainerError, TrialConfig, WordRecord};
use crate::emulator::MotorTimeline;
use crate::stats::{usability_mean, Family, RawGroup, StatsReport};

/// One line of a session file. Replaying the lines in order through the
/// session methods rebuilds the session, transmissions included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum SessionEvent {
    Created {
        id: String,
        subject: String,
        char_gap_ms: u64,
        config: TrialConfig,
        seed: u64,
    },
    Transmitted {
        word: String,
    },
    Guessed {
        record_id: usize,
        guess: String,
    },
    Rated {
        rating: u8,
    },
    Closed,
}

impl SessionEvent {
    fn apply(&self, session: &mut Session) -> Result<(), TrainerError> {
        match self {
            SessionEvent::Created { .. } => {
                Err(TrainerError::Storage("duplicate created event".into()))
            }
            SessionEvent::Transmitted { word } => session.transmit_word(word).map(|_| ()),
            SessionEvent::Guessed { record_id, guess } => {
                session.record_guess(*record_id, guess).map(|_| ())
            }
            SessionEvent::Rated { rating } => session.rate(*rating),
            SessionEvent::Closed => {
                session.close();
                Ok(())
            }
        }
    }
}

fn storage<E: std::fmt::Display>(e: E) -> TrainerError {
    TrainerError::Storage(e.to_string())
}

/// Concurrent session registry. Each session sits behind its own lock so
/// requests against one session are serialized while different sessions
/// proceed independently. With a directory, every change is appended to
/// `<dir>/<id>.jsonl` before it becomes visible.
#[derive(Debug)]
pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: Mutex<u64>,
}

impl Default for SessionStore {
    fn default() -> Self {
        SessionStore {
            dir: None,
            sessions: RwLock::new(BTreeMap::new()),
            next_id: Mutex::new(1),
        }
    }
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Open (creating if needed) a store directory and reload its sessions.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, TrainerError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(storage)?;
        let mut sessions = BTreeMap::new();
        let mut next_id = 1;
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(storage)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let session = load_session(&path)?;
            if let Ok(n) = session.id.parse::<u64>() {
                next_id = next_id.max(n + 1);
            }
            sessions.insert(session.id.clone(), Arc::new(Mutex::new(session)));
        }
        Ok(SessionStore {
            dir: Some(dir),
            sessions: RwLock::new(sessions),
            next_id: Mutex::new(next_id),
        })
    }

    fn path_for(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    fn append(&self, id: &str, event: &SessionEvent) -> Result<(), TrainerError> {
        let Some(path) = self.path_for(id) else {
            return Ok(());
        };
        let mut line = serde_json::to_string(event).map_err(storage)?;
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(storage)?;
        file.write_all(line.as_bytes()).map_err(storage)
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<Session>>, TrainerError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| TrainerError::UnknownSession(id.to_string()))
    }

    /// Apply `event` to the session and persist it; on a storage failure the
    /// session is left untouched.
    fn mutate(&self, id: &str, event: SessionEvent) -> Result<Session, TrainerError> {
        let handle = self.handle(id)?;
        let mut session = handle.lock();
        if self.dir.is_some() {
            let mut next = session.clone();
            event.apply(&mut next)?;
            self.append(id, &event)?;
            *session = next;
        } else {
            event.apply(&mut session)?;
        }
        Ok(session.clone())
    }

    pub fn create(
        &self,
        subject: &str,
        char_gap_ms: u64,
        config: TrialConfig,
    ) -> Result<Session, TrainerError> {
        let id = {
            let mut next = self.next_id.lock();
            let id = format!("{:06}", *next);
            *next += 1;
            id
        };
        let session = Session::new(id.clone(), subject.to_string(), char_gap_ms, config)?;
        self.append(
            &id,
            &SessionEvent::Created {
                id: id.clone(),
                subject: session.subject.clone(),
                char_gap_ms,
                config: session.config.clone(),
                seed: session.seed,
            },
        )?;
        self.sessions
            .write()
            .insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    pub fn transmit(&self, id: &str, word: &str) -> Result<WordRecord, TrainerError> {
        let s = self.mutate(
            id,
            SessionEvent::Transmitted {
                word: word.to_string(),
            },
        )?;
        Ok(s.records.last().expect("just transmitted").clone())
    }

    pub fn guess(
        &self,
        id: &str,
        record_id: usize,
        guess: &str,
    ) -> Result<WordRecord, TrainerError> {
        let s = self.mutate(
            id,
            SessionEvent::Guessed {
                record_id,
                guess: guess.to_string(),
            },
        )?;
        Ok(s.records[record_id].clone())
    }

    pub fn rate(&self, id: &str, rating: u8) -> Result<Session, TrainerError> {
        self.mutate(id, SessionEvent::Rated { rating })
    }

    pub fn close(&self, id: &str) -> Result<Session, TrainerError> {
        self.mutate(id, SessionEvent::Closed)
    }

    pub fn session(&self, id: &str) -> Result<Session, TrainerError> {
        Ok(self.handle(id)?.lock().clone())
    }

    pub fn timeline(&self, id: &str, record_id: usize) -> Result<MotorTimeline, TrainerError> {
        let handle = self.handle(id)?;
        let session = handle.lock();
        session
            .records
            .get(record_id)
            .map(|r| r.transmission.timeline.clone())
            .ok_or(TrainerError::UnknownRecord(record_id))
    }

    /// Snapshot of every session, ordered by id.
    pub fn sessions(&self) -> Vec<Session> {
        let handles: Vec<_> = self.sessions.read().values().cloned().collect();
        handles.iter().map(|h| h.lock().clone()).collect()
    }

    pub fn report(
        &self,
        gaps_ms: Option<&[u64]>,
        reference_ms: Option<u64>,
        family: Family,
    ) -> Result<SessionReport, TrainerError> {
        let snapshot = self.sessions();
        build_report(&snapshot, gaps_ms, reference_ms, family)
    }
}

fn load_session(path: &Path) -> Result<Session, TrainerError> {
    let file = File::open(path).map_err(storage)?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| storage(format!("{} is empty", path.display())))?
        .map_err(storage)?;
    let mut session = match serde_json::from_str(&first).map_err(storage)? {
        SessionEvent::Created {
            id,
            subject,
            char_gap_ms,
            mut config,
            seed,
        } => {
            config.seed = Some(seed);
            Session::new(id, subject, char_gap_ms, config)?
        }
        other => return Err(storage(format!("{} starts with {other:?}", path.display()))),
    };
    for line in lines {
        let line = line.map_err(storage)?;
        if line.trim().is_empty() {
            continue;
        }
        let event: SessionEvent = serde_json::from_str(&line).map_err(storage)?;
        event.apply(&mut session)?;
    }
    Ok(session)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub stats: StatsReport,
    /// Sessions contributing at each gap, including gaps left out of the
    /// statistics for having fewer than two.
    pub sessions_per_gap: Vec<(u64, usize)>,
    pub usability_mean: Option<f64>,
}

pub(super) fn build_report<'a>(
    sessions: impl IntoIterator<Item = &'a Session>,
    gaps_ms: Option<&[u64]>,
    reference_ms: Option<u64>,
    family: Family,
) -> Result<SessionReport, TrainerError> {
    let mut by_gap: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut ratings = Vec::new();
    for s in sessions {
        if gaps_ms.is_some_and(|g| !g.contains(&s.char_gap_ms)) {
            continue;
        }
        if let Some(r) = s.rating {
            ratings.push(f64::from(r));
        }
        if let Some(acc) = s.accuracy_pct() {
            by_gap.entry(s.char_gap_ms).or_default().push(acc);
        }
    }
    // longest gap first
    let sessions_per_gap: Vec<(u64, usize)> =
        by_gap.iter().rev().map(|(&g, v)| (g, v.len())).collect();
    let summaries = by_gap
        .into_iter()
        .rev()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(g, v)| RawGroup::new(g, v).summarize())
        .collect::<Result<Vec<_>, _>>()?;
    if summaries.is_empty() {
        return Err(TrainerError::InsufficientData);
    }
    let stats = StatsReport::build(summaries, reference_ms, crate::stats::DEFAULT_ALPHA, family)?;
    Ok(SessionReport {
        stats,
        sessions_per_gap,
        usability_mean: usability_mean(&ratings).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrialConfig {
        TrialConfig {
            seed: Some(7),
            ..TrialConfig::default()
        }
    }

    #[test]
    fn empty_store_has_no_report() {
        let store = SessionStore::in_memory();
        assert_eq!(
            store.report(None, None, Family::AllPairs).unwrap_err(),
            TrainerError::InsufficientData
        );
    }

    #[test]
    fn single_gap_summary_only() {
        let store = SessionStore::in_memory();
        for (i, guess) in ["cat", "cbt"].iter().enumerate() {
            let s = store.create(&format!("s{i}"), 1000, cfg()).unwrap();
            store.transmit(&s.id, "cat").unwrap();
            store.guess(&s.id, 0, guess).unwrap();
        }
        let r = store.report(None, None, Family::AllPairs).unwrap();
        assert_eq!(r.stats.summaries.len(), 1);
        assert!(r.stats.anova.is_none());
    }

    #[test]
    fn ids_are_sequential() {
        let store = SessionStore::in_memory();
        assert_eq!(store.create("a", 1000, cfg()).unwrap().id, "000001");
        assert_eq!(store.create("b", 1000, cfg()).unwrap().id, "000002");
        assert!(matches!(
            store.session("000009"),
            Err(TrainerError::UnknownSession(_))
        ));
    }

    #[test]
    fn persisted_sessions_reload_identically() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let s = store.create("s1", 800, TrialConfig::default()).unwrap();
        store.transmit(&s.id, "cat").unwrap();
        store.transmit(&s.id, "dog").unwrap();
        store.guess(&s.id, 1, "dig").unwrap();
        assert!(store.guess(&s.id, 1, "dog").is_err());
        store.rate(&s.id, 9).unwrap();
        store.close(&s.id).unwrap();
        assert!(store.transmit(&s.id, "cat").is_err());
        let before = store.sessions();

        let reopened = SessionStore::open(dir.path()).unwrap();
        assert_eq!(reopened.sessions(), before);
        assert_eq!(reopened.create("s2", 800, cfg()).unwrap().id, "000002");
    }

    #[test]
    fn rejected_events_are_not_persisted() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let s = store.create("s1", 800, cfg()).unwrap();
        assert!(store.transmit(&s.id, "no!").is_err());
        let text = fs::read_to_string(dir.path().join(format!("{}.jsonl", s.id))).unwrap();
        assert_eq!(text.lines().count(), 1);
    }
}
