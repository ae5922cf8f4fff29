mod common;

use std::io::Cursor;

use itcsp::animator::{animate, Scenario};
use itcsp::semantics::module_alphabet;

fn run(model: &str, input: &str) -> String {
    let (m, t) = common::module(model);
    let mut out = Vec::new();
    animate(t, &m.banner, 10_000, &mut Cursor::new(input.as_bytes()), &mut out, true).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn animation_prints_the_paper_style_transcript() {
    let out = run("chemical", "1\n9\n1\n1\n");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "Starting ITree animation...");
    assert!(lines[1].starts_with("Events: (1) RandomWalkCall (); (2) Gas (Din,[]);"));
    assert_eq!(lines[2], "[Choose: 1-22]: 1");
    assert_eq!(lines[4], "[Choose: 1-21]: 9");
    assert_eq!(lines[5], "Events: (1) MoveCall (0,Chemical_Angle_Front);");
    assert_eq!(lines[7], "Events: (1) Flag Dout;");
    assert_eq!(lines.last(), Some(&"Terminated: ()"));
}

#[test]
fn bad_input_asks_again() {
    let out = run("patrol", "x\n0\n9\n2\n");
    assert_eq!(out.matches("Please enter a number between 1 and 8.").count(), 3);
    assert!(out.contains("Events: (1) Right_PatrolMod (Dout,-2);"));
}

#[test]
fn end_of_input_stops_cleanly() {
    let out = run("patrol", "");
    assert!(out.ends_with("[Choose: 1-8]: \n"));
}

#[test]
fn scenarios_parse_menu_text_loosely() {
    let (m, _) = common::module("patrol");
    let a = module_alphabet(&m);
    let sc = Scenario::parse("s", "# comment\ncal_PatrolMod(Din, -3)\n@repeat\nRight_PatrolMod (Dout,-2) # note\n", &a)
        .unwrap();
    assert_eq!(sc.trace.len(), 2);
    assert_eq!(sc.repeat_from, Some(1));
    assert_eq!(sc.event_at(5).unwrap().display(), "Right_PatrolMod (Dout,-2)");
    assert_eq!(sc.name, "s");

    let err = Scenario::parse("s", "Cal_PatrolMod (Din,-3)\nFly_PatrolMod Din\n", &a).unwrap_err();
    assert_eq!(err.line, 2);
    assert!(Scenario::parse("s", "@repeat\n@repeat\n", &a).is_err());
    assert!(Scenario::parse("s", "Cal_PatrolMod (Din,1)\n@repeat\n", &a).is_err());
    let empty = Scenario::parse("s", "", &a).unwrap();
    assert!(empty.event_at(0).is_none());
}
