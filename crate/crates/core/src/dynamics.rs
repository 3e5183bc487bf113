//! Continuous-time dynamics by uniformization.
//!
//! With `N` particles the superposition of their rate-1 clocks is a Poisson
//! process of rate `N`. Each event draws, in this order, the waiting time
//! `-ln(u1) / N`, the mover `particles[floor(u2 * N)]` and the direction
//! (right iff `u3 < p`). A mover swaps with its target iff the target's
//! color is strictly lower, a vacancy being color 0. Jumps that would leave
//! the window are suppressed.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::lattice::{Color, Configuration, ModelParams};
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    TwoSpecies,
    Colored,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    #[inline]
    pub fn step(self) -> i64 {
        match self {
            Direction::Left => -1,
            Direction::Right => 1,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Left => "left",
            Direction::Right => "right",
        })
    }
}

/// A clock ring: when, who (by site before the jump), which way, and whether
/// the swap rule let it through.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub site: i64,
    pub direction: Direction,
    pub accepted: bool,
}

impl Event {
    pub fn target(&self) -> i64 {
        self.site + self.direction.step()
    }
}

/// What an applied event did to the configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Blocked by the swap rule or by the window edge.
    Suppressed,
    /// The mover jumped onto a vacancy.
    Moved { from: i64, to: i64 },
    /// The mover exchanged places with a lower color.
    Swapped {
        from: i64,
        to: i64,
        mover: Color,
        displaced: Color,
    },
}

impl Outcome {
    pub fn accepted(&self) -> bool {
        !matches!(self, Outcome::Suppressed)
    }
}

/// `true` iff a particle of color `src` may exchange with the content `dst`
/// of its target site.
#[inline]
pub fn swap_permitted(src: Color, dst: Color) -> bool {
    dst < src
}

/// Tracks `sum(-ln u1)` against a budget `rate * (t_end - t0)`.
///
/// The running product of the `u1` draws is kept above `floor`; only when it
/// falls below `threshold` is a logarithm taken, either to fold the product
/// into the budget or to detect that the horizon has been passed.
struct Horizon {
    remaining: f64,
    committed: f64,
    product: f64,
    threshold: f64,
}

impl Horizon {
    const FLOOR: f64 = 1e-250;

    fn new(budget: f64) -> Self {
        let mut h = Self {
            remaining: budget,
            committed: 0.0,
            product: 1.0,
            threshold: 0.0,
        };
        h.reset_threshold();
        h
    }

    fn reset_threshold(&mut self) {
        self.threshold = (-self.remaining).exp().max(Self::FLOOR);
    }

    /// Accounts for one waiting time `-ln(u1)`; `false` once the horizon is
    /// exceeded.
    #[inline(always)]
    fn admit(&mut self, u1: f64) -> bool {
        let next = self.product * u1;
        if next >= self.threshold {
            self.product = next;
            return true;
        }
        // u1 == 0 has probability 2^-53; clamp instead of producing +inf.
        let used = -self.product.ln() - u1.max(f64::MIN_POSITIVE).ln();
        if used > self.remaining {
            return false;
        }
        self.remaining -= used;
        self.committed += used;
        self.product = 1.0;
        self.reset_threshold();
        true
    }

    /// `sum(-ln u1)` over admitted draws.
    fn elapsed(&self) -> f64 {
        self.committed - self.product.ln()
    }
}

/// Event counts from a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub events: u64,
    pub accepted: u64,
}

impl std::ops::AddAssign for RunStats {
    fn add_assign(&mut self, rhs: Self) {
        self.events += rhs.events;
        self.accepted += rhs.accepted;
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    config: Configuration,
    clock: f64,
    params: ModelParams,
    mode: Mode,
}

impl SimState {
    /// Checks that the configuration's colors fit the mode.
    pub fn new(config: Configuration, params: ModelParams, mode: Mode) -> Result<Self> {
        let max_color = match mode {
            Mode::Single => Some(1),
            Mode::TwoSpecies => Some(2),
            Mode::Colored => None,
        };
        if let Some(max) = max_color {
            if let Some((site, c)) = config.iter_particles().find(|(_, c)| c.0 > max) {
                return Err(Error::Config(format!(
                    "color {c} at site {site} is not allowed in {mode:?} mode"
                )));
            }
        } else if !config.tracks_colors() {
            return Err(Error::Config(
                "colored mode needs a configuration with distinct tracked colors".into(),
            ));
        }
        Ok(Self {
            config,
            clock: 0.0,
            params,
            mode,
        })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub(crate) fn config_mut(&mut self) -> &mut Configuration {
        &mut self.config
    }

    pub(crate) fn set_clock(&mut self, t: f64) {
        self.clock = t;
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Samples the next clock ring, consuming exactly three uniforms.
    #[inline]
    pub fn next_event(&self, stream: &mut RngStream) -> Result<Event> {
        let u1 = stream.next_uniform();
        let u2 = stream.next_uniform();
        let u3 = stream.next_uniform();
        self.event_from_uniforms(u1, u2, u3)
    }

    /// The event that [`next_event`](Self::next_event) produces for given draws.
    #[inline]
    pub fn event_from_uniforms(&self, u1: f64, u2: f64, u3: f64) -> Result<Event> {
        let n = self.config.particle_count();
        if n == 0 {
            return Err(Error::NoParticles);
        }
        // u1 == 0 has probability 2^-53; clamp instead of producing +inf.
        let wait = -u1.max(f64::MIN_POSITIVE).ln() / n as f64;
        let k = ((u2 * n as f64) as usize).min(n - 1);
        let direction = if u3 < self.params.p() {
            Direction::Right
        } else {
            Direction::Left
        };
        Ok(Event {
            time: self.clock + wait,
            site: self.config.particle_site(k),
            direction,
            accepted: false,
        })
    }

    /// Applies `event`, moving the clock to its time and filling in
    /// `event.accepted`.
    pub fn apply_event(&mut self, event: &mut Event) -> Result<Outcome> {
        if event.time.is_nan() || event.time <= self.clock {
            return Err(Error::InvalidEvent(format!(
                "event time {} does not exceed clock {}",
                event.time, self.clock
            )));
        }
        let window = self.config.window();
        if !window.contains(event.site) || self.config.color_at(event.site).is_empty() {
            return Err(Error::InvalidEvent(format!(
                "no particle at site {}",
                event.site
            )));
        }
        let outcome = self.apply_unchecked(event.time, window.offset(event.site), event.direction);
        event.accepted = outcome.accepted();
        Ok(outcome)
    }

    #[inline]
    fn apply_unchecked(&mut self, time: f64, from: usize, direction: Direction) -> Outcome {
        self.clock = time;
        let to = match direction {
            Direction::Right if from + 1 < self.config.window().len() => from + 1,
            Direction::Left if from > 0 => from - 1,
            _ => return Outcome::Suppressed,
        };
        self.apply_move(from, to)
    }

    /// Attempts to move the particle at offset `from` onto offset `to`.
    #[inline(always)]
    fn apply_move(&mut self, from: usize, to: usize) -> Outcome {
        let mover = self.config.color_at_offset(from);
        let displaced = self.config.color_at_offset(to);
        if !swap_permitted(mover, displaced) {
            return Outcome::Suppressed;
        }
        let window = self.config.window();
        if displaced.is_empty() {
            self.config.move_to_vacancy(from, to);
            Outcome::Moved {
                from: window.site(from),
                to: window.site(to),
            }
        } else {
            self.config.swap_particles(from, to);
            Outcome::Swapped {
                from: window.site(from),
                to: window.site(to),
                mover,
                displaced,
            }
        }
    }

    /// Runs until the next event would fall after `t_end`, then sets the
    /// clock to `t_end`.
    pub fn run_until(&mut self, t_end: f64, stream: &mut RngStream) -> Result<RunStats> {
        self.run_loop(t_end, stream, None::<fn(&Event, &Outcome, &Configuration)>)
    }

    /// [`run_until`](Self::run_until) with an observer that sees every
    /// applied event, in order, together with the updated configuration.
    pub fn run_until_with<F>(&mut self, t_end: f64, stream: &mut RngStream, observer: F) -> Result<RunStats>
    where
        F: FnMut(&Event, &Outcome, &Configuration),
    {
        self.run_loop(t_end, stream, Some(observer))
    }

    /// Shared event loop. Waiting times are accumulated as a product of the
    /// `u1` draws so the horizon test needs no logarithm per event; both
    /// public entry points therefore stop on exactly the same event.
    #[inline(always)]
    fn run_loop<F>(&mut self, t_end: f64, stream: &mut RngStream, mut observer: Option<F>) -> Result<RunStats>
    where
        F: FnMut(&Event, &Outcome, &Configuration),
    {
        if t_end < self.clock {
            return Err(Error::InvalidEvent(format!(
                "cannot run backwards from {} to {t_end}",
                self.clock
            )));
        }
        let n = self.config.particle_count();
        if n == 0 {
            return Err(Error::NoParticles);
        }
        let rate = n as f64;
        let p = self.params.p();
        let len = self.config.window().len();
        let start = self.clock;
        let mut horizon = Horizon::new(rate * (t_end - start));
        let mut stats = RunStats::default();
        loop {
            let u1 = stream.next_uniform();
            let u2 = stream.next_uniform();
            let u3 = stream.next_uniform();
            if !horizon.admit(u1) {
                break;
            }
            let k = ((u2 * rate) as usize).min(n - 1);
            let from = self.config.particles[k] as usize;
            let to = if u3 < p { from + 1 } else { from.wrapping_sub(1) };
            stats.events += 1;
            let outcome = if to < len {
                self.apply_move(from, to)
            } else {
                Outcome::Suppressed
            };
            let accepted = outcome.accepted();
            stats.accepted += u64::from(accepted);
            if let Some(obs) = observer.as_mut() {
                let time = start + horizon.elapsed() / rate;
                self.clock = time;
                let event = Event {
                    time,
                    site: self.config.window().site(from),
                    direction: if to > from { Direction::Right } else { Direction::Left },
                    accepted,
                };
                obs(&event, &outcome, &self.config);
            }
        }
        self.clock = t_end;
        Ok(stats)
    }

    pub fn position_of_color(&self, c: Color) -> Result<i64> {
        if self.mode != Mode::Colored {
            return Err(Error::Domain("color positions need colored mode".into()));
        }
        self.config.position_of(c).ok_or(Error::MissingColor(c.0))
    }

    pub fn leftmost_of_colors(&self, colors: impl IntoIterator<Item = Color>) -> Result<i64> {
        let mut min: Option<i64> = None;
        for c in colors {
            let x = self.position_of_color(c)?;
            min = Some(min.map_or(x, |m| m.min(x)));
        }
        min.ok_or_else(|| Error::Domain("empty color set".into()))
    }

    /// Position of the leftmost second-class particle.
    pub fn leftmost_second_class(&self) -> Result<i64> {
        if self.mode != Mode::TwoSpecies {
            return Err(Error::Domain("second-class particles need two-species mode".into()));
        }
        self.config
            .leftmost_with(Color::SECOND_CLASS)
            .ok_or_else(|| Error::Domain("no second-class particle".into()))
    }
}

/// Writes one CSV row per applied event: `time,site,direction,accepted`.
pub struct EventTrace<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> EventTrace<W> {
    pub fn new(inner: W) -> Self {
        Self {
            writer: csv::Writer::from_writer(inner),
        }
    }

    pub fn record(&mut self, event: &Event) -> csv::Result<()> {
        self.writer.serialize(event)
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.writer.flush()?;
        self.writer
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))
    }
}
