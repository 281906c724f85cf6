use std::sync::Arc;
use std::thread;

use brailleband::stats::Family;
use brailleband::trainer::{session_report, Session, SessionStore, TrainerError, TrialConfig};
use proptest::prelude::*;

fn seeded(seed: u64) -> TrialConfig {
    TrialConfig {
        seed: Some(seed),
        ..TrialConfig::default()
    }
}

/// A closed session at `gap` whose guesses get `correct` of every
/// `word.len()` characters right.
fn scored_session(
    store: &SessionStore,
    subject: &str,
    gap: u64,
    word: &str,
    wrong: usize,
) -> Session {
    let s = store.create(subject, gap, seeded(1)).unwrap();
    let rec = store.transmit(&s.id, word).unwrap();
    let guess: String = word
        .chars()
        .enumerate()
        .map(|(i, c)| {
            if i < wrong {
                if c == 'z' {
                    'y'
                } else {
                    'z'
                }
            } else {
                c
            }
        })
        .collect();
    store.guess(&s.id, rec.id, &guess).unwrap();
    store.close(&s.id).unwrap()
}

#[test]
fn same_seed_same_session() {
    let a = Session::new("a".into(), "s".into(), 800, seeded(99)).unwrap();
    let b = Session::new("a".into(), "s".into(), 800, seeded(99)).unwrap();
    assert_eq!(a, b);
    let c = Session::new("a".into(), "s".into(), 800, seeded(100)).unwrap();
    assert_ne!(a.words, c.words);
}

#[test]
fn transmissions_accumulate_clock() {
    let store = SessionStore::in_memory();
    let s = store.create("s", 500, seeded(3)).unwrap();
    let a = store.transmit(&s.id, "ab").unwrap();
    let b = store.transmit(&s.id, "c").unwrap();
    assert_eq!(a.sent_at_ms, 0);
    // a: 1 dot, b: 2 dots, each + 500 ms gap
    assert_eq!(b.sent_at_ms, 600 + 500 + 1200 + 500);
    assert_eq!(
        store.session(&s.id).unwrap().clock_ms,
        b.sent_at_ms + 1200 + 500
    );
}

#[test]
fn closed_sessions_reject_changes() {
    let store = SessionStore::in_memory();
    let s = store.create("s", 500, seeded(3)).unwrap();
    store.close(&s.id).unwrap();
    assert!(matches!(
        store.transmit(&s.id, "cat"),
        Err(TrainerError::SessionClosed(_))
    ));
    assert!(matches!(
        store.transmit("999999", "cat"),
        Err(TrainerError::UnknownSession(_))
    ));
}

#[test]
fn concurrent_sessions_persist_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(SessionStore::open(dir.path()).unwrap());
    let handles: Vec<_> = (0..8)
        .map(|i| {
            let store = Arc::clone(&store);
            thread::spawn(move || {
                let s = store
                    .create(&format!("sub{i}"), 1000 + 100 * i, seeded(i))
                    .unwrap();
                for w in ["cat", "dog", "sun"] {
                    let r = store.transmit(&s.id, w).unwrap();
                    store.guess(&s.id, r.id, "cot").unwrap();
                }
                store.rate(&s.id, (i % 11) as u8).unwrap();
                s.id
            })
        })
        .collect();
    let mut ids: Vec<String> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    ids.sort();
    let expected: Vec<String> = (1..=8).map(|n| format!("{n:06}")).collect();
    assert_eq!(ids, expected);

    let before = store.sessions();
    drop(store);
    let reloaded = SessionStore::open(dir.path()).unwrap();
    assert_eq!(reloaded.sessions(), before);
    // ids continue after the highest stored one
    assert_eq!(reloaded.create("new", 800, seeded(0)).unwrap().id, "000009");
}

#[test]
fn report_requires_two_sessions_per_gap() {
    let store = SessionStore::in_memory();
    scored_session(&store, "a", 1000, "cat", 0);
    assert_eq!(
        store.report(None, None, Family::AllPairs),
        Err(TrainerError::InsufficientData)
    );
    scored_session(&store, "b", 1000, "cat", 1);
    scored_session(&store, "c", 500, "cat", 1);
    let r = store.report(None, None, Family::AllPairs).unwrap();
    assert_eq!(r.sessions_per_gap, vec![(1000, 2), (500, 1)]);
    assert_eq!(r.stats.summaries.len(), 1);
    assert!(r.stats.anova.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn report_ignores_session_order(
        wrongs in proptest::collection::vec((0usize..3, 0usize..10), 6..16),
        order in Just(()).prop_perturb(|_, mut rng| rng.next_u64()),
    ) {
        let gaps = [1500u64, 800, 400];
        let store = SessionStore::in_memory();
        let mut sessions: Vec<Session> = wrongs.iter().enumerate()
            .map(|(i, &(g, w))| scored_session(&store, &format!("s{i}"), gaps[g], "abcdefghij", w))
            .collect();
        let forward = session_report(&sessions, None, None, Family::AllPairs);
        // deterministic shuffle driven by `order`
        let n = sessions.len();
        let mut state = order;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            sessions.swap(i, (state >> 33) as usize % (i + 1));
        }
        let shuffled = session_report(&sessions, None, None, Family::AllPairs);
        match (forward, shuffled) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.sessions_per_gap, b.sessions_per_gap);
                prop_assert_eq!(a.stats.summaries.len(), b.stats.summaries.len());
                for (x, y) in a.stats.summaries.iter().zip(&b.stats.summaries) {
                    prop_assert_eq!(x.treatment_ms, y.treatment_ms);
                    prop_assert!((x.mean - y.mean).abs() < 1e-9);
                    prop_assert!((x.sd - y.sd).abs() < 1e-9);
                }
                match (a.stats.anova, b.stats.anova) {
                    (Some(x), Some(y)) => prop_assert!((x.f_stat - y.f_stat).abs() < 1e-9 * x.f_stat.max(1.0)),
                    (x, y) => prop_assert_eq!(x.is_some(), y.is_some()),
                }
            }
            (a, b) => prop_assert_eq!(a.is_ok(), b.is_ok()),
        }
    }
}
