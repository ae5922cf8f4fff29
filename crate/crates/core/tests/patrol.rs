mod common;

use common::{module, names, scenario, squash};
use itcsp::animator::{replay, trace_member, Outcome, Session, DEFAULT_TAU_BUDGET};
use itcsp::model::Model;
use itcsp::semantics::{compile, module_alphabet};

/// Menu lines of the first patrol transcript, as published.
const PAPER_INITIAL: &str = "Events: (1) Reset_PatrolMod Din; (2) Cal_PatrolMod (Din,-3); (3) Cal_PatrolMod (Din,-2);
         (4) Cal_PatrolMod (Din,-1); (5) Cal_PatrolMod (Din,0); (6) Cal_PatrolMod (Din,1);
         (7) Cal_PatrolMod (Din,2); (8) Cal_PatrolMod (Din,3);";
const PAPER_CENTRE: &str = "Events: (1) Right_PatrolMod (Dout,0); (2) Cal_PatrolMod (Din,-3); (3) Cal_PatrolMod (Din,-2);
         (4) Cal_PatrolMod (Din,-1); (5) Cal_PatrolMod (Din,0); (6) Cal_PatrolMod (Din,1);
         (7) Cal_PatrolMod (Din,2); (8) Cal_PatrolMod (Din,3);";

#[test]
fn scenario_pr1_menus_match_the_transcript() {
    common::patrol_pr1().unwrap();
}

#[test]
fn rendered_menus_equal_the_printed_lines() {
    let (_, t) = module("patrol");
    let mut s = Session::start(t, DEFAULT_TAU_BUDGET);
    assert_eq!(squash(&s.menu().render()), squash(PAPER_INITIAL));
    s.choose(2).unwrap();
    for _ in 0..5 {
        s.choose(1).unwrap();
    }
    assert_eq!(squash(&s.menu().render()), squash(PAPER_CENTRE));
}

#[test]
fn scenarios_pr2_and_pr3_cycle() {
    common::patrol_scenarios_2_3().unwrap();
    common::patrol_cyclic("patrol-scenario2.txt", 10).unwrap();
}

#[test]
fn scenario1_is_accepted_for_42_events() {
    let (m, t) = module("patrol");
    let r = replay(&t, &scenario(&m, "patrol-scenario1.txt"), 42, DEFAULT_TAU_BUDGET);
    assert_eq!(r.outcome, Outcome::StepLimit);
    assert_eq!(r.accepted, 42);
}

#[test]
fn reset_is_offered_only_at_the_start_of_a_round() {
    common::reset_gating().unwrap();
}

#[test]
fn reset_is_never_offered_while_patrolling() {
    let (m, t) = module("patrol");
    for file in ["patrol-scenario2.txt", "patrol-scenario3.txt"] {
        let sc = scenario(&m, file);
        let mut s = Session::start(t.clone(), DEFAULT_TAU_BUDGET);
        s.choose_event(sc.event_at(0).unwrap()).unwrap();
        for i in 1..30 {
            assert!(!names(s.menu()).iter().any(|n| n.starts_with("Reset")), "{file} step {i}");
            s.choose_event(sc.event_at(i).unwrap()).unwrap();
        }
    }
}

#[test]
fn reset_away_from_the_centre_is_refused() {
    let (m, t) = module("patrol");
    let r = replay(&t, &scenario(&m, "patrol-reset.txt"), 6, DEFAULT_TAU_BUDGET);
    match &r.outcome {
        Outcome::Refused { event, menu, ended: None } => {
            assert_eq!(event.display(), "Left_PatrolMod (Dout,-1)");
            assert_eq!(menu.len(), 1);
            assert_eq!(r.accepted, 1);
        }
        other => panic!("expected a refusal, got {other:?}"),
    }
    let r = replay(&t, &scenario(&m, "patrol-reset-right.txt"), 6, DEFAULT_TAU_BUDGET);
    match &r.outcome {
        Outcome::Refused { event, .. } => {
            assert_eq!(event.display(), "Reset_PatrolMod Din");
            assert_eq!(r.accepted, 2);
        }
        other => panic!("expected a refusal, got {other:?}"),
    }
}

#[test]
fn nondeterminism_in_the_middle_section_goes_right() {
    let (m, t) = module("patrol");
    let a = module_alphabet(&m);
    let ev = |s: &str| a.iter().find(|e| e.display() == s).unwrap().clone();
    let right = [ev("Cal_PatrolMod (Din,-1)"), ev("Right_PatrolMod (Dout,0)"), ev("Right_PatrolMod (Dout,0)")];
    assert!(trace_member(&t, &right, DEFAULT_TAU_BUDGET));
    let left = [ev("Cal_PatrolMod (Din,-1)"), ev("Left_PatrolMod (Dout,-2)")];
    assert!(!trace_member(&t, &left, DEFAULT_TAU_BUDGET));
}

#[test]
fn a_smaller_integer_range_shrinks_the_menu() {
    let text = std::fs::read_to_string(common::models_dir().join("patrol.json")).unwrap();
    let m = Model::from_json_str(&text, &["min_int=-2".into(), "max_int=2".into()]).unwrap();
    let s = Session::start(compile(&m), DEFAULT_TAU_BUDGET);
    assert_eq!(s.menu().len(), 6);
    assert!(Model::from_json_str(&text, &["min_int=5".into()]).is_err());
    assert!(Model::from_json_str(&text, &["nonsense".into()]).is_err());
}

#[test]
fn the_alphabet_names_every_platform_event() {
    let (m, _) = module("patrol");
    let a = module_alphabet(&m);
    // reset in, cal/left/right in both directions over -3..3.
    assert!(a.iter().any(|e| e.display() == "Reset_PatrolMod Din"));
    assert_eq!(a.iter().filter(|e| e.chan.name().starts_with("cal")).count(), 14);
}
