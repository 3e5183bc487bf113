//! Coupling of the colored step process with the two-species process.
//!
//! Colors `1..=L+1` are paired with the second-class particles `0*..L*`
//! and color `n + L + 1` with first-class particle `n`. The colored system
//! is simulated; every colored event is transferred to the two-species
//! system through the current pairing `f`:
//!
//! * a jump into a vacancy is copied by the paired two-species particle;
//! * an exchange of colors `r > s` whose partners have the same class
//!   exchanges the pairing `f(r) <-> f(s)` and leaves the two-species
//!   configuration alone;
//! * an exchange whose partners have different classes keeps the pairing
//!   and exchanges the two two-species particles.
//!
//! Under this rule the leftmost second-class particle always sits at the
//! leftmost of the colors `1..=L+1`, which [`CoupledState::check_identity`]
//! verifies along whole trajectories.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Event, Mode, Outcome, RunStats, SimState};
use crate::lattice::{init_colored_step, init_two_species, Color, ModelParams, Window};
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    First,
    Second,
}

impl LabelKind {
    /// Two-species color carried by particles of this class.
    pub fn color(self) -> Color {
        match self {
            LabelKind::First => Color::FIRST_CLASS,
            LabelKind::Second => Color::SECOND_CLASS,
        }
    }
}

/// Index of a two-species particle: first-class `k >= 1` or second-class `k*`
/// with `k` in `[0, L]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub kind: LabelKind,
    pub index: u32,
}

impl Label {
    pub fn first(index: u32) -> Self {
        Self {
            kind: LabelKind::First,
            index,
        }
    }

    pub fn second(index: u32) -> Self {
        Self {
            kind: LabelKind::Second,
            index,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LabelKind::First => write!(f, "{}", self.index),
            LabelKind::Second => write!(f, "{}*", self.index),
        }
    }
}

/// The pairing `f`: color -> two-species label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingStatus {
    l: u32,
    /// Indexed by color; slot 0 is unused.
    labels: Vec<Label>,
}

impl CouplingStatus {
    /// The initial pairing for colors `1..=max_color`.
    pub fn initial(l: u32, max_color: u32) -> Self {
        let mut labels = Vec::with_capacity(max_color as usize + 1);
        labels.push(Label::second(u32::MAX));
        for c in 1..=max_color {
            labels.push(if c <= l + 1 {
                Label::second(c - 1)
            } else {
                Label::first(c - l - 1)
            });
        }
        Self { l, labels }
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn get(&self, color: Color) -> Option<Label> {
        if color.is_empty() {
            return None;
        }
        self.labels.get(color.0 as usize).copied()
    }

    pub fn colors(&self) -> impl Iterator<Item = (Color, Label)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .skip(1)
            .map(|(c, &l)| (Color(c as u32), l))
    }

    fn swap(&mut self, a: Color, b: Color) {
        self.labels.swap(a.0 as usize, b.0 as usize);
    }

    /// `f` is injective, second-class indices are exactly `0..=L` and
    /// first-class indices are positive.
    pub fn is_bijection(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.labels.len());
        let mut second = 0u32;
        for (_, label) in self.colors() {
            if !seen.insert(label) {
                return false;
            }
            match label.kind {
                LabelKind::Second if label.index <= self.l => second += 1,
                LabelKind::First if label.index >= 1 => {}
                _ => return false,
            }
        }
        second == self.l + 1
    }
}

/// Colored and two-species systems advanced by one shared event stream.
#[derive(Clone, Debug)]
pub struct CoupledState {
    colored: SimState,
    twospec: SimState,
    status: CouplingStatus,
    /// Sites of first-class particles by index (slot 0 unused).
    first_sites: Vec<i64>,
    /// Sites of second-class particles by starred index.
    second_sites: Vec<i64>,
}

/// Class a colored particle projects to.
fn class_of(color: Color, l: u32) -> Color {
    match color.0 {
        0 => Color::EMPTY,
        c if c <= l + 1 => Color::SECOND_CLASS,
        _ => Color::FIRST_CLASS,
    }
}

impl CoupledState {
    /// Colored step data and two-species data with the initial pairing.
    pub fn new(params: ModelParams, window: Window) -> Result<Self> {
        let colored = SimState::new(init_colored_step(window)?, params, Mode::Colored)?;
        let twospec = SimState::new(init_two_species(&params, window)?, params, Mode::TwoSpecies)?;
        let max_color = colored.config().particle_count() as u32;
        let status = CouplingStatus::initial(params.l(), max_color);
        Self::from_parts(colored, twospec, status)
    }

    /// Assembles a coupled state, placing each two-species label at the site
    /// of its paired color. Invariants are not checked here.
    pub fn from_parts(colored: SimState, twospec: SimState, status: CouplingStatus) -> Result<Self> {
        if colored.mode() != Mode::Colored || twospec.mode() != Mode::TwoSpecies {
            return Err(Error::Config("coupling needs a colored and a two-species state".into()));
        }
        if colored.config().window() != twospec.config().window() {
            return Err(Error::Config("coupled systems must share a window".into()));
        }
        let mut first_sites = vec![i64::MIN];
        let mut second_sites = Vec::new();
        for (color, label) in status.colors() {
            let site = colored.position_of_color(color)?;
            let slots = match label.kind {
                LabelKind::First => &mut first_sites,
                LabelKind::Second => &mut second_sites,
            };
            let i = label.index as usize;
            if slots.len() <= i {
                slots.resize(i + 1, i64::MIN);
            }
            slots[i] = site;
        }
        Ok(Self {
            colored,
            twospec,
            status,
            first_sites,
            second_sites,
        })
    }

    pub fn colored(&self) -> &SimState {
        &self.colored
    }

    pub fn two_species(&self) -> &SimState {
        &self.twospec
    }

    pub fn status(&self) -> &CouplingStatus {
        &self.status
    }

    pub fn l(&self) -> u32 {
        self.status.l
    }

    pub fn clock(&self) -> f64 {
        self.colored.clock()
    }

    /// Two-species site of `label`.
    pub fn label_site(&self, label: Label) -> Option<i64> {
        let slots = match label.kind {
            LabelKind::First => &self.first_sites,
            LabelKind::Second => &self.second_sites,
        };
        slots
            .get(label.index as usize)
            .copied()
            .filter(|&s| s != i64::MIN)
    }

    fn label_site_mut(&mut self, label: Label) -> &mut i64 {
        match label.kind {
            LabelKind::First => &mut self.first_sites[label.index as usize],
            LabelKind::Second => &mut self.second_sites[label.index as usize],
        }
    }

    /// Checks that the partner of the colored particle at `site` sits on the
    /// same two-species site with a matching class.
    fn check_partner_at(&self, site: i64) -> Result<Label> {
        let color = self.colored.config().color_at(site);
        let label = self
            .status
            .get(color)
            .ok_or_else(|| Error::CorruptedState(format!("color {color} at {site} has no partner")))?;
        let held = self.twospec.config().color_at(site);
        if self.label_site(label) != Some(site) || held != label.kind.color() {
            return Err(Error::CorruptedState(format!(
                "color {color} at site {site} is paired with {label} at {:?}, two-species site holds {held}",
                self.label_site(label)
            )));
        }
        Ok(label)
    }

    /// Draws one colored event and transfers it to the two-species system.
    pub fn step(&mut self, stream: &mut RngStream) -> Result<(Event, Outcome)> {
        let event = self.colored.next_event(stream)?;
        self.apply(event)
    }

    /// Applies a colored event and its two-species counterpart.
    pub fn apply(&mut self, mut event: Event) -> Result<(Event, Outcome)> {
        let mover = self.check_partner_at(event.site)?;
        let target = event.target();
        let displaced = if self.colored.config().is_occupied(target) {
            Some(self.check_partner_at(target)?)
        } else {
            None
        };
        let outcome = self.colored.apply_event(&mut event)?;
        let window = self.twospec.config().window();
        match outcome {
            Outcome::Suppressed => {}
            Outcome::Moved { from, to } => {
                if self.twospec.config().is_occupied(to) {
                    return Err(Error::CorruptedState(format!(
                        "two-species target {to} of {mover} is occupied"
                    )));
                }
                self.twospec
                    .config_mut()
                    .move_to_vacancy(window.offset(from), window.offset(to));
                *self.label_site_mut(mover) = to;
            }
            Outcome::Swapped {
                from,
                to,
                mover: r,
                displaced: s,
            } => {
                let other = displaced.expect("swap target is occupied");
                if mover.kind == other.kind {
                    self.status.swap(r, s);
                } else {
                    self.twospec
                        .config_mut()
                        .swap_particles(window.offset(from), window.offset(to));
                    *self.label_site_mut(mover) = to;
                    *self.label_site_mut(other) = from;
                }
            }
        }
        self.twospec.set_clock(event.time);
        Ok((event, outcome))
    }

    /// Steps until the next event would fall after `t_end`; the observer sees
    /// the coupled state after every applied event.
    pub fn run_until_with<F>(
        &mut self,
        t_end: f64,
        stream: &mut RngStream,
        mut observer: F,
    ) -> Result<RunStats>
    where
        F: FnMut(&CoupledState, &Event),
    {
        let mut stats = RunStats::default();
        loop {
            let event = self.colored.next_event(stream)?;
            if event.time > t_end {
                break;
            }
            let (event, _) = self.apply(event)?;
            stats.events += 1;
            stats.accepted += u64::from(event.accepted);
            observer(self, &event);
        }
        self.colored.set_clock(t_end);
        self.twospec.set_clock(t_end);
        Ok(stats)
    }

    /// Leftmost second-class particle equals the leftmost of colors `1..=L+1`.
    pub fn check_identity(&self) -> bool {
        let lhs = self.twospec.leftmost_second_class();
        let rhs = self
            .colored
            .leftmost_of_colors((1..=self.l() + 1).map(Color));
        matches!((lhs, rhs), (Ok(a), Ok(b)) if a == b)
    }

    /// The class projection of the colored configuration equals the
    /// two-species configuration site by site.
    pub fn check_projection(&self) -> bool {
        let l = self.l();
        let colored = self.colored.config();
        let twospec = self.twospec.config();
        colored.window() == twospec.window()
            && colored
                .occupancy()
                .iter()
                .zip(twospec.occupancy())
                .all(|(&c, &d)| class_of(c, l) == d)
    }

    /// Full check of the pairing: bijection, and every partner on its
    /// color's site with the right class.
    pub fn check_labels(&self) -> Result<()> {
        if !self.status.is_bijection() {
            return Err(Error::CorruptedState("pairing is not a bijection".into()));
        }
        for (site, _) in self.colored.config().iter_particles() {
            self.check_partner_at(site)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Direction;
    use crate::lattice::Configuration;

    fn coupled(p: f64, l: u32, lo: i64, hi: i64) -> CoupledState {
        CoupledState::new(ModelParams::new(p, l).unwrap(), Window::new(lo, hi).unwrap()).unwrap()
    }

    fn ring(s: &mut CoupledState, site: i64, direction: Direction) -> Outcome {
        let event = Event {
            time: s.clock() + 0.5,
            site,
            direction,
            accepted: false,
        };
        s.apply(event).unwrap().1
    }

    #[test]
    fn initial_pairing() {
        let s = coupled(1.0, 0, -4, 3);
        assert_eq!(s.status().get(Color(1)), Some(Label::second(0)));
        assert_eq!(s.status().get(Color(2)), Some(Label::first(1)));
        assert_eq!(s.status().get(Color(5)), Some(Label::first(4)));
        assert!(s.status().is_bijection());
        assert!(s.check_projection());
        assert!(s.check_identity());
        s.check_labels().unwrap();

        let s = coupled(0.7, 2, -6, 3);
        assert_eq!(s.status().get(Color(3)), Some(Label::second(2)));
        assert_eq!(s.status().get(Color(4)), Some(Label::first(1)));
        assert_eq!(s.label_site(Label::second(2)), Some(-2));
        assert_eq!(s.two_species().leftmost_second_class().unwrap(), -2);
        assert!(s.check_identity());
        assert_eq!(Label::second(2).to_string(), "2*");
    }

    #[test]
    fn same_class_exchange_swaps_pairing_only() {
        // L = 0: colors 3 and 2 at sites -2 and -1 are both paired with
        // first-class particles.
        let mut s = coupled(0.7, 0, -4, 3);
        let before = s.two_species().config().clone();
        let out = ring(&mut s, -2, Direction::Right);
        assert!(matches!(out, Outcome::Swapped { mover: Color(3), displaced: Color(2), .. }));
        assert_eq!(s.status().get(Color(3)), Some(Label::first(1)));
        assert_eq!(s.status().get(Color(2)), Some(Label::first(2)));
        assert_eq!(s.two_species().config(), &before);
        assert!(s.check_projection() && s.check_identity());
        s.check_labels().unwrap();
    }

    #[test]
    fn cross_class_exchange_swaps_two_species_particles() {
        // L = 0: color 2 (first class 1) at -1 jumps onto color 1 (0*) at 0.
        let mut s = coupled(0.7, 0, -4, 3);
        let id_before = s.check_identity();
        ring(&mut s, -1, Direction::Right);
        assert_eq!(s.status().get(Color(2)), Some(Label::first(1)));
        assert_eq!(s.status().get(Color(1)), Some(Label::second(0)));
        let two = s.two_species().config();
        assert_eq!(two.color_at(-1), Color::SECOND_CLASS);
        assert_eq!(two.color_at(0), Color::FIRST_CLASS);
        assert_eq!(s.label_site(Label::first(1)), Some(0));
        assert_eq!(s.label_site(Label::second(0)), Some(-1));
        assert!(id_before && s.check_identity() && s.check_projection());
        s.check_labels().unwrap();
    }

    #[test]
    fn vacancy_jump_is_copied() {
        let mut s = coupled(0.7, 1, -4, 3);
        assert_eq!(ring(&mut s, 0, Direction::Right), Outcome::Moved { from: 0, to: 1 });
        assert_eq!(s.two_species().config().color_at(1), Color::SECOND_CLASS);
        assert_eq!(s.label_site(Label::second(0)), Some(1));
        // Leftmost of {1, 2} is now color 2 at -1.
        assert_eq!(s.two_species().leftmost_second_class().unwrap(), -1);
        assert!(s.check_identity() && s.check_projection());
    }

    #[test]
    fn suppressed_event_changes_nothing_but_time() {
        let mut s = coupled(0.7, 1, -4, 3);
        let before = s.two_species().config().clone();
        assert_eq!(ring(&mut s, 0, Direction::Left), Outcome::Suppressed);
        assert_eq!(s.two_species().config(), &before);
        assert_eq!(s.two_species().clock(), s.clock());
    }

    #[test]
    fn detectors_catch_corruption() {
        let params = ModelParams::new(0.7, 1).unwrap();
        let w = Window::new(-4, 3).unwrap();
        let colored = SimState::new(init_colored_step(w).unwrap(), params, Mode::Colored).unwrap();
        let mut two: Configuration = init_two_species(&params, w).unwrap();
        two.replace(2, Color::FIRST_CLASS).unwrap();
        let twospec = SimState::new(two, params, Mode::TwoSpecies).unwrap();
        let status = CouplingStatus::initial(1, 5);
        let s = CoupledState::from_parts(colored.clone(), twospec, status.clone()).unwrap();
        assert!(!s.check_projection());
        assert!(s.check_identity());

        let mut two = init_two_species(&params, w).unwrap();
        two.replace(0, Color::FIRST_CLASS).unwrap();
        let twospec = SimState::new(two, params, Mode::TwoSpecies).unwrap();
        let mut bad = CoupledState::from_parts(colored, twospec, status).unwrap();
        assert!(!bad.check_projection());
        assert!(bad.check_labels().is_err());
        let err = bad.apply(Event {
            time: 1.0,
            site: 0,
            direction: Direction::Right,
            accepted: false,
        });
        assert!(matches!(err, Err(Error::CorruptedState(_))));
    }

    #[test]
    fn short_trajectories_keep_every_invariant() {
        for (p, l) in [(1.0, 0), (0.7, 2), (0.9, 5)] {
            for trial in 0..20 {
                let mut s = coupled(p, l, -60, 50);
                let mut stream = RngStream::new(11, trial);
                let mut checked = 0u64;
                s.run_until_with(8.0, &mut stream, |st, _| {
                    assert!(st.check_identity());
                    assert!(st.check_projection());
                    checked += 1;
                })
                .unwrap();
                s.check_labels().unwrap();
                assert!(checked > 0);
            }
        }
    }
}
