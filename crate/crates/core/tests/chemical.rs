mod common;

use common::{module, names, scenario, squash};
use itcsp::animator::{replay, Menu, Outcome, Session, DEFAULT_TAU_BUDGET};

/// Menu size, pick and event of every row of the weak-reading transcript,
/// including the rows the published transcript comments out.
const ACD2_FULL: [(usize, usize, &str); 17] = [
    (22, 1, "RandomWalkCall ()"),
    (21, 4, "Gas (Din,[(1, 0)])"),
    (22, 1, "MoveCall (1,Chemical_Angle_Front)"),
    (24, 2, "Obstacle (Din,Location_Loc_right)"),
    (23, 1, "Odometer (Din,0)"),
    (22, 1, "MoveCall (1,Chemical_Angle_Left)"),
    (21, 8, "Gas (Din,[(0, 0),(1, 0)])"),
    (22, 1, "MoveCall (1,Chemical_Angle_Front)"),
    (24, 1, "Obstacle (Din, Location_Loc_left)"),
    (23, 2, "Odometer (Din,1)"),
    (23, 1, "Odometer (Din,0)"),
    (22, 1, "MoveCall (1,Chemical_Angle_Right)"),
    (21, 4, "Gas (Din,[(1, 0)])"),
    (22, 1, "MoveCall (1,Chemical_Angle_Front)"),
    (24, 2, "Obstacle (Din,Location_Loc_right)"),
    (23, 1, "Odometer (Din,0)"),
    (22, 1, "Stuck_timeout Din"),
];

#[test]
fn scenario_acd1_stops_flags_and_terminates() {
    common::chemical_acd1().unwrap();
    let (m, t) = module("chemical");
    let r = replay(&t, &scenario(&m, "chemical-acd1.txt"), 10, DEFAULT_TAU_BUDGET);
    assert_eq!(r.outcome, Outcome::Completed);
}

#[test]
fn the_terminated_run_returns_unit() {
    let (_, t) = module("chemical");
    let mut s = Session::start(t, DEFAULT_TAU_BUDGET);
    for k in [1, 9, 1, 1] {
        s.choose(k).unwrap();
    }
    assert!(matches!(s.menu(), Menu::Terminated(itcsp::Value::Unit)));
    assert!(s.choose(1).is_err());
    assert_eq!(s.history().len(), 4);
}

#[test]
fn scenario_acd2_prefix_replays() {
    common::chemical_acd2_prefix().unwrap();
}

#[test]
fn scenario_acd2_follows_every_row_including_the_commented_tail() {
    let (_, t) = module("chemical");
    let mut s = Session::start(t, DEFAULT_TAU_BUDGET);
    for (i, (size, pick, text)) in ACD2_FULL.iter().enumerate() {
        assert_eq!(s.menu().len(), *size, "row {}", i + 1);
        assert_eq!(squash(&names(s.menu())[pick - 1]), squash(text), "row {}", i + 1);
        s.choose(*pick).unwrap();
    }
    assert_eq!(s.menu().len(), 22);
    assert_eq!(names(s.menu())[0], "ShortRandomWalkCall ()");
}

#[test]
fn gas_readings_never_block_while_the_turn_buffer_is_full() {
    // After a weak reading the main controller keeps reading gas and
    // sending turns; the asynchronous buffer is overwritten, so the reading
    // loop never waits for the other controller.
    let (_, t) = module("chemical");
    let mut s = Session::start(t, DEFAULT_TAU_BUDGET);
    s.choose(1).unwrap();
    for round in 0..6 {
        let gas = names(s.menu()).iter().position(|n| n == "Gas (Din,[(1,0)])");
        let Some(k) = gas else { panic!("round {round}: no gas reading offered: {}", s.menu().render()) };
        s.choose(k + 1).unwrap();
    }
}

#[test]
fn no_gas_returns_to_the_initial_menu() {
    let (_, t) = module("chemical");
    let mut s = Session::start(t, DEFAULT_TAU_BUDGET);
    let initial = names(s.menu());
    s.choose(1).unwrap();
    s.choose(1).unwrap(); // Gas []
    assert_eq!(names(s.menu()), initial);
}
