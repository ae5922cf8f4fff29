mod common;

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use itcsp::animator::{Session, DEFAULT_TAU_BUDGET};
use itcsp::service::{ServiceError, SessionManager};

fn manager() -> SessionManager {
    let mut m = SessionManager::new();
    assert_eq!(m.add_dir(&common::models_dir()).unwrap(), 2);
    m
}

#[test]
fn sessions_start_with_the_initial_menu() {
    let m = manager();
    let p = m.create("patrol", &[]).unwrap();
    assert_eq!(p.menu.events.len(), 8);
    assert_eq!(p.menu.kind, "choices");
    assert_eq!(p.menu.events[1].channel, "Cal_PatrolMod");
    assert_eq!(p.menu.events[1].payload_text, "(Din,-3)");
    assert_eq!(m.create("chemical", &[]).unwrap().menu.events.len(), 22);
    assert_eq!(m.create("nope", &[]).unwrap_err(), ServiceError::UnknownModel("nope".into()));
    assert_eq!(m.create("nope", &[]).unwrap_err().status(), 404);
    assert_eq!(m.models().len(), 2);
}

#[test]
fn choices_advance_and_bad_indices_change_nothing() {
    let m = manager();
    let id = m.create("patrol", &[]).unwrap().id;
    let menu = m.choose(&id, 2).unwrap();
    assert_eq!(menu.events.len(), 1);
    assert_eq!(menu.events[0].channel, "Right_PatrolMod");
    assert_eq!(menu.history_len, 1);

    let err = m.choose(&id, 99).unwrap_err();
    assert_eq!(err, ServiceError::InvalidIndex { index: 99, size: 1 });
    assert_eq!(err.status(), 400);
    assert_eq!(m.menu(&id).unwrap(), menu);
    assert_eq!(m.history(&id).unwrap().len(), 1);
    assert!(m.choose(&id, 0).is_err());
}

#[test]
fn history_grows_and_reset_clears_it() {
    let m = manager();
    let id = m.create("patrol", &[]).unwrap().id;
    assert!(m.history(&id).unwrap().is_empty());
    for k in [2, 1, 1] {
        m.choose(&id, k).unwrap();
    }
    let h = m.history(&id).unwrap();
    let texts: Vec<String> = h.iter().map(|e| format!("{} {}", e.channel, e.payload_text)).collect();
    assert_eq!(texts, ["Cal_PatrolMod (Din,-3)", "Right_PatrolMod (Dout,-2)", "Right_PatrolMod (Dout,-2)"]);
    assert_eq!(h.iter().map(|e| e.index).collect::<Vec<_>>(), [1, 2, 3]);
    let menu = m.reset(&id).unwrap();
    assert_eq!(menu.events.len(), 8);
    assert!(m.history(&id).unwrap().is_empty());
}

#[test]
fn a_terminated_session_keeps_its_history() {
    let m = manager();
    let id = m.create("chemical", &[]).unwrap().id;
    let mut last = None;
    for k in [1, 9, 1, 1] {
        last = Some(m.choose(&id, k).unwrap());
    }
    let last = last.unwrap();
    assert_eq!(last.kind, "terminated");
    assert_eq!(last.text, "Terminated: ()");
    let err = m.choose(&id, 1).unwrap_err();
    assert_eq!(err, ServiceError::Finished("terminated"));
    assert_eq!(err.status(), 409);
    assert_eq!(m.history(&id).unwrap().len(), 4);
}

#[test]
fn menu_text_matches_the_command_line_rendering() {
    let m = manager();
    let (_, t) = common::module("patrol");
    let mut local = Session::start(t, DEFAULT_TAU_BUDGET);
    let id = m.create("patrol", &[]).unwrap().id;
    for k in [2, 1, 1, 1, 1, 1, 1, 3] {
        let remote = m.choose(&id, k).unwrap();
        local.choose(k).unwrap();
        assert_eq!(remote.text, local.menu().render());
        let joined: Vec<String> = remote.events.iter().map(|e| format!("{} {}", e.channel, e.payload_text)).collect();
        assert_eq!(joined, common::names(local.menu()));
    }
}

#[test]
fn config_overrides_recompile() {
    let m = manager();
    let c = m.create("patrol", &["min_int=-2".into(), "max_int=2".into()]).unwrap();
    assert_eq!(c.menu.events.len(), 6);
    assert!(matches!(m.create("patrol", &["max_int=1".into()]), Err(ServiceError::InvalidConfig(_))));
    assert!(matches!(m.create("patrol", &["min_int=9".into()]), Err(ServiceError::InvalidConfig(_))));
}

#[test]
fn idle_sessions_expire() {
    let m = manager().with_idle(Duration::from_millis(50));
    let id = m.create("patrol", &[]).unwrap().id;
    assert_eq!(m.session_count(), 1);
    thread::sleep(Duration::from_millis(120));
    assert_eq!(m.choose(&id, 1).unwrap_err(), ServiceError::UnknownSession(id.clone()));
    assert_eq!(m.session_count(), 0);
}

#[test]
fn concurrent_sessions_keep_separate_histories() {
    let m = Arc::new(manager());
    let ids: Vec<String> = (0..8).map(|_| m.create("patrol", &[]).unwrap().id).collect();
    let handles: Vec<_> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let (m, id) = (m.clone(), id.clone());
            thread::spawn(move || {
                // Each thread calibrates to its own position, then walks.
                let cal = 2 + (i % 7);
                let mut chosen = vec![cal];
                m.choose(&id, cal).unwrap();
                for step in 0..20 {
                    let menu = m.menu(&id).unwrap();
                    let k = 1 + (i + step) % menu.events.len();
                    m.choose(&id, k).unwrap();
                    chosen.push(k);
                    thread::yield_now();
                }
                chosen
            })
        })
        .collect();
    let choices: Vec<Vec<usize>> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    let (_, t) = common::module("patrol");
    for (id, picks) in ids.iter().zip(&choices) {
        let mut local = Session::start(t.clone(), DEFAULT_TAU_BUDGET);
        for k in picks {
            local.choose(*k).unwrap();
        }
        let remote: Vec<String> =
            m.history(id).unwrap().iter().map(|e| format!("{} {}", e.channel, e.payload_text)).collect();
        let expected: Vec<String> = local.history().iter().map(|e| e.display()).collect();
        assert_eq!(remote, expected);
    }
}

#[test]
fn one_session_serialises_concurrent_choices() {
    let m = Arc::new(manager());
    let id = m.create("patrol", &[]).unwrap().id;
    m.choose(&id, 6).unwrap(); // Cal 1: patrols forever with one-event menus.
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let (m, id) = (m.clone(), id.clone());
            thread::spawn(move || {
                for _ in 0..10 {
                    m.choose(&id, 1).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(m.history(&id).unwrap().len(), 81);
}
