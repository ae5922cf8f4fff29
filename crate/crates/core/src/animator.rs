//! Stepping through a compiled module: menus, sessions, scenario replay and
//! bounded trace membership.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use proptest::test_runner::{RngAlgorithm, TestRng};
use proptest::prelude::Rng;

use crate::event::Event;
use crate::itree::{observe, Choices, ITree, Observation};
use crate::value::Value;

pub const DEFAULT_TAU_BUDGET: usize = 10_000;

/// What the environment sees after silent steps are compressed.
#[derive(Clone, Debug)]
pub enum Menu {
    Choices(Arc<Choices>),
    Terminated(Value),
    Stuck,
    /// More than the budget of silent steps in a row.
    TauBudget(usize),
}

impl Menu {
    pub fn of(t: &ITree, budget: usize) -> Menu {
        match observe(t, budget).0 {
            Observation::Choices(c) => Menu::Choices(c),
            Observation::Terminated(v) => Menu::Terminated(v),
            Observation::Stuck => Menu::Stuck,
            Observation::TauBudgetExceeded(n) => Menu::TauBudget(n),
        }
    }

    /// Enabled events in menu order; empty unless the menu offers choices.
    pub fn events(&self) -> Vec<Event> {
        match self {
            Menu::Choices(c) => c.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Menu::Choices(c) => c.len(),
            _ => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Menu::Choices(_) => "choices",
            Menu::Terminated(_) => "terminated",
            Menu::Stuck => "stuck",
            Menu::TauBudget(_) => "tau_budget",
        }
    }

    /// `Events: (1) A; (2) B;`, or the closing line of a finished run.
    pub fn render(&self) -> String {
        match self {
            Menu::Choices(c) => {
                let mut s = String::from("Events:");
                for (i, e) in c.keys().enumerate() {
                    s.push_str(&format!(" ({}) {};", i + 1, e.display()));
                }
                s
            }
            Menu::Terminated(v) => format!("Terminated: {v}"),
            Menu::Stuck => "Deadlocked: no events enabled".to_string(),
            Menu::TauBudget(n) => format!("Diverging: {n} internal steps without a visible event"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ChooseError {
    #[error("choice {index} is out of range 1-{size}")]
    OutOfRange { index: usize, size: usize },
    #[error("event {0} is not enabled")]
    NotEnabled(String),
    #[error("the run has {0}; no further choices")]
    Finished(&'static str),
}

/// An animation in progress. `history` replayed from `initial` reaches
/// `current`.
#[derive(Clone)]
pub struct Session {
    initial: ITree,
    current: ITree,
    menu: Menu,
    history: Vec<Event>,
    tau_budget: usize,
}

impl Session {
    pub fn start(tree: ITree, tau_budget: usize) -> Session {
        let menu = Menu::of(&tree, tau_budget);
        Session { initial: tree.clone(), current: tree, menu, history: Vec::new(), tau_budget }
    }

    pub fn menu(&self) -> &Menu {
        &self.menu
    }

    pub fn history(&self) -> &[Event] {
        &self.history
    }

    pub fn tau_budget(&self) -> usize {
        self.tau_budget
    }

    pub fn current(&self) -> &ITree {
        &self.current
    }

    /// Chooses the `index`-th menu entry, counting from 1.
    pub fn choose(&mut self, index: usize) -> Result<&Menu, ChooseError> {
        let choices = self.choices()?;
        let Some((e, k)) = (index >= 1).then(|| choices.get_index(index - 1)).flatten() else {
            return Err(ChooseError::OutOfRange { index, size: choices.len() });
        };
        let (e, next) = (e.clone(), k.force());
        Ok(self.advance(e, next))
    }

    pub fn choose_event(&mut self, e: &Event) -> Result<&Menu, ChooseError> {
        let choices = self.choices()?;
        let Some(k) = choices.get(e) else {
            return Err(ChooseError::NotEnabled(e.display()));
        };
        let next = k.force();
        Ok(self.advance(e.clone(), next))
    }

    pub fn reset(&mut self) -> &Menu {
        *self = Session::start(self.initial.clone(), self.tau_budget);
        &self.menu
    }

    fn choices(&self) -> Result<Arc<Choices>, ChooseError> {
        match &self.menu {
            Menu::Choices(c) => Ok(c.clone()),
            Menu::Terminated(_) => Err(ChooseError::Finished("terminated")),
            Menu::Stuck => Err(ChooseError::Finished("deadlocked")),
            Menu::TauBudget(_) => Err(ChooseError::Finished("exceeded its internal step budget")),
        }
    }

    fn advance(&mut self, e: Event, next: ITree) -> &Menu {
        self.history.push(e);
        self.menu = Menu::of(&next, self.tau_budget);
        self.current = next;
        &self.menu
    }
}

/// A trace to replay; events from `repeat_from` on repeat forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub trace: Vec<Event>,
    pub repeat_from: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

fn normalise(text: &str) -> String {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_lowercase().chain(cs).collect(),
        None => s,
    }
}

impl Scenario {
    /// Parses one event per line, written as menus print them. `#` starts a
    /// comment, `name: X` names the scenario, and a line `@repeat` marks
    /// where the repeating part begins.
    pub fn parse(name: &str, text: &str, alphabet: &[Event]) -> Result<Scenario, ScenarioError> {
        let by_text: std::collections::HashMap<String, &Event> =
            alphabet.iter().map(|e| (normalise(&e.display()), e)).collect();
        let mut sc = Scenario { name: name.to_string(), trace: Vec::new(), repeat_from: None };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let err = |message: String| ScenarioError { line: i + 1, message };
            if line.is_empty() {
                continue;
            }
            if let Some(n) = line.strip_prefix("name:") {
                sc.name = n.trim().to_string();
                continue;
            }
            if line == "@repeat" {
                if sc.repeat_from.is_some() {
                    return Err(err("`@repeat` given twice".into()));
                }
                sc.repeat_from = Some(sc.trace.len());
                continue;
            }
            match by_text.get(&normalise(line)) {
                Some(e) => sc.trace.push((*e).clone()),
                None => return Err(err(format!("`{line}` is not an event of the module"))),
            }
        }
        if sc.repeat_from == Some(sc.trace.len()) && !sc.trace.is_empty() {
            return Err(ScenarioError { line: text.lines().count(), message: "nothing follows `@repeat`".into() });
        }
        Ok(sc)
    }

    pub fn finite(name: &str, trace: Vec<Event>) -> Scenario {
        Scenario { name: name.to_string(), trace, repeat_from: None }
    }

    /// The `i`-th event of the unrolled trace.
    pub fn event_at(&self, i: usize) -> Option<&Event> {
        if i < self.trace.len() {
            return self.trace.get(i);
        }
        let from = self.repeat_from?;
        let cycle = self.trace.len() - from;
        if cycle == 0 {
            return None;
        }
        self.trace.get(from + (i - from) % cycle)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Every event of a finite trace was accepted.
    Completed,
    /// A repeating trace was followed for the whole step limit.
    StepLimit,
    Refused { event: Event, menu: Vec<Event>, ended: Option<&'static str> },
    /// Too many internal steps; possibly livelock rather than refusal.
    Divergence,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub scenario: String,
    pub accepted: usize,
    pub outcome: Outcome,
}

impl Report {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, Outcome::Completed | Outcome::StepLimit)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            Outcome::Completed => write!(f, "{}: accepted all {} events", self.scenario, self.accepted),
            Outcome::StepLimit => write!(f, "{}: accepted {} events (step limit)", self.scenario, self.accepted),
            Outcome::Divergence => {
                write!(f, "{}: possible divergence after {} events", self.scenario, self.accepted)
            }
            Outcome::Refused { event, menu, ended } => {
                write!(f, "{}: refused {} after {} events; ", self.scenario, event.display(), self.accepted)?;
                match ended {
                    Some(why) => write!(f, "the run has {why}"),
                    None => {
                        let names: Vec<String> = menu.iter().map(Event::display).collect();
                        write!(f, "enabled: {}", names.join("; "))
                    }
                }
            }
        }
    }
}

/// Follows `sc` for at most `max_steps` events.
pub fn replay(tree: &ITree, sc: &Scenario, max_steps: usize, tau_budget: usize) -> Report {
    let mut s = Session::start(tree.clone(), tau_budget);
    let mut accepted = 0;
    let report = |accepted, outcome| Report { scenario: sc.name.clone(), accepted, outcome };
    while accepted < max_steps {
        let Some(e) = sc.event_at(accepted) else {
            return report(accepted, Outcome::Completed);
        };
        match s.menu() {
            Menu::TauBudget(_) => return report(accepted, Outcome::Divergence),
            Menu::Choices(c) if c.contains_key(e) => {
                s.choose_event(e).expect("enabled");
                accepted += 1;
            }
            m => {
                let ended = match m {
                    Menu::Terminated(_) => Some("terminated"),
                    Menu::Stuck => Some("deadlocked"),
                    _ => None,
                };
                return report(accepted, Outcome::Refused { event: e.clone(), menu: m.events(), ended });
            }
        }
    }
    if sc.event_at(accepted).is_none() {
        return report(accepted, Outcome::Completed);
    }
    if matches!(s.menu(), Menu::TauBudget(_)) {
        return report(accepted, Outcome::Divergence);
    }
    report(accepted, Outcome::StepLimit)
}

/// Whether `trace` is a behaviour of `tree` under the animation semantics.
pub fn trace_member(tree: &ITree, trace: &[Event], tau_budget: usize) -> bool {
    replay(tree, &Scenario::finite("trace", trace.to_vec()), trace.len(), tau_budget).passed()
}

/// Interactive loop in the transcript style: a menu line, a prompt, the
/// choice read from `input`. Ends on termination, deadlock, divergence or
/// end of input. With `echo` the choice is written after the prompt.
pub fn animate(
    tree: ITree,
    banner: &str,
    tau_budget: usize,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    echo: bool,
) -> std::io::Result<Session> {
    let mut s = Session::start(tree, tau_budget);
    writeln!(out, "{banner}")?;
    loop {
        writeln!(out, "{}", s.menu().render())?;
        if !matches!(s.menu(), Menu::Choices(_)) {
            return Ok(s);
        }
        let n = s.menu().len();
        let mut line = String::new();
        loop {
            write!(out, "[Choose: 1-{n}]: ")?;
            out.flush()?;
            line.clear();
            if input.read_line(&mut line)? == 0 {
                writeln!(out)?;
                return Ok(s);
            }
            if echo {
                writeln!(out, "{}", line.trim())?;
            }
            match line.trim().parse::<usize>() {
                Ok(k) if (1..=n).contains(&k) => break,
                _ => writeln!(out, "Please enter a number between 1 and {n}.")?,
            }
        }
        s.choose(line.trim().parse().expect("checked")).expect("in range");
    }
}

/// Findings of a bounded exploration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sweep {
    pub menus: usize,
    pub duplicate_menus: usize,
    pub divergences: usize,
    pub max_taus: usize,
}

/// Explores `walks` seeded random paths of up to `depth` choices each, plus
/// every path of length `exhaustive`, checking each menu.
pub fn sweep(tree: &ITree, depth: usize, walks: usize, exhaustive: usize, seed: u64, tau_budget: usize) -> Sweep {
    let mut out = Sweep::default();
    let check = |t: &ITree, out: &mut Sweep| -> Option<Arc<Choices>> {
        let (obs, taus) = observe(t, tau_budget);
        out.max_taus = out.max_taus.max(taus);
        match obs {
            Observation::Choices(c) => {
                out.menus += 1;
                let distinct: HashSet<String> = c.keys().map(Event::display).collect();
                if distinct.len() != c.len() {
                    out.duplicate_menus += 1;
                }
                Some(c)
            }
            Observation::TauBudgetExceeded(_) => {
                out.divergences += 1;
                None
            }
            _ => None,
        }
    };
    let mut frontier = vec![tree.clone()];
    for _ in 0..=exhaustive {
        let mut next = Vec::new();
        for t in &frontier {
            if let Some(c) = check(t, &mut out) {
                next.extend(c.iter().map(|(_, k)| k.force()));
            }
        }
        frontier = next;
    }
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = TestRng::from_seed(RngAlgorithm::ChaCha, &key);
    for _ in 0..walks {
        let mut t = tree.clone();
        for _ in 0..depth {
            let Some(c) = check(&t, &mut out) else { break };
            let i = (rng.next_u64() % c.len() as u64) as usize;
            t = c.get_index(i).expect("index").1.force();
        }
    }
    out
}
