//! Windowed lattice configurations, model parameters and initial data.
//!
//! Colors follow one convention everywhere: `0` is a vacancy and a larger
//! color always displaces a smaller one. Two-species configurations use
//! `2` for first-class and `1` for second-class particles. The colored step
//! initial data puts color `n + 1` at site `-n`, so colors `1..=L+1` sit on
//! the second-class block `[-L, 0]` of the two-species initial data.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[repr(transparent)]
#[serde(transparent)]
pub struct Color(pub u32);

impl Color {
    pub const EMPTY: Color = Color(0);
    pub const SECOND_CLASS: Color = Color(1);
    pub const FIRST_CLASS: Color = Color(2);

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Inclusive range of lattice sites `[lo, hi]` that the dynamics may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    lo: i64,
    hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::Config(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `[-(ceil(safety * t_max) + l + 10), ceil(safety * t_max) + 10]`.
    ///
    /// Every clock rings Poisson(t) times by time `t`, so nothing started near
    /// the origin reaches distance `safety * t` except with exponentially
    /// small probability once `safety > 1`.
    pub fn light_cone(t_max: f64, l: u32, safety: f64) -> Self {
        assert!(t_max >= 0.0 && t_max.is_finite(), "t_max must be finite and >= 0");
        assert!(safety >= 1.0, "safety factor must be >= 1");
        let reach = (safety * t_max).ceil() as i64;
        Self {
            lo: -(reach + i64::from(l) + 10),
            hi: reach + 10,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: i64) -> bool {
        (self.lo..=self.hi).contains(&site)
    }

    #[inline]
    pub fn offset(&self, site: i64) -> usize {
        debug_assert!(self.contains(site));
        (site - self.lo) as usize
    }

    #[inline]
    pub fn site(&self, offset: usize) -> i64 {
        self.lo + offset as i64
    }

    /// Smallest window containing both.
    pub fn union(&self, other: &Window) -> Window {
        Window {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

pub fn make_window(t_max: f64, l: u32, safety: f64) -> Window {
    Window::light_cone(t_max, l, safety)
}

/// Jump probabilities and the size `L` of the second-class block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    p: f64,
    l: u32,
}

impl ModelParams {
    /// `p` is the right-jump probability and must lie in `(1/2, 1]`.
    pub fn new(p: f64, l: u32) -> Result<Self> {
        if !(p > 0.5 && p <= 1.0) {
            return Err(Error::Config(format!("p = {p} is outside (1/2, 1]")));
        }
        Ok(Self { p, l })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Asymmetry `p - q`.
    pub fn gamma(&self) -> f64 {
        2.0 * self.p - 1.0
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn is_tasep(&self) -> bool {
        self.p == 1.0
    }
}

const VACANT: u32 = u32::MAX;

/// Occupancy of every site in a window together with an index of occupied
/// sites (for uniform particle selection) and, in colored mode, the inverse
/// map from color to site.
#[derive(Clone, Debug)]
pub struct Configuration {
    window: Window,
    occupancy: Vec<Color>,
    /// Offsets of occupied sites; a particle's slot follows its site.
    pub(crate) particles: Vec<u32>,
    /// Offset -> index into `particles`, or `VACANT`.
    slot: Vec<u32>,
    /// Color -> offset, present only when colors are distinct.
    color_position: Option<Vec<u32>>,
}

impl Configuration {
    /// Builds a configuration from one color per site, left to right.
    /// With `track_colors` every nonzero color must be distinct.
    pub fn from_colors(window: Window, occupancy: Vec<Color>, track_colors: bool) -> Result<Self> {
        if occupancy.len() != window.len() {
            return Err(Error::Config(format!(
                "{} colors supplied for window {window} of {} sites",
                occupancy.len(),
                window.len()
            )));
        }
        if occupancy.len() >= VACANT as usize {
            return Err(Error::Config("window too large".into()));
        }
        let mut particles = Vec::new();
        let mut slot = vec![VACANT; occupancy.len()];
        for (off, c) in occupancy.iter().enumerate() {
            if !c.is_empty() {
                slot[off] = particles.len() as u32;
                particles.push(off as u32);
            }
        }
        let color_position = if track_colors {
            let max = occupancy.iter().map(|c| c.0).max().unwrap_or(0) as usize;
            let mut pos = vec![VACANT; max + 1];
            for (off, c) in occupancy.iter().enumerate() {
                if c.is_empty() {
                    continue;
                }
                if pos[c.0 as usize] != VACANT {
                    return Err(Error::Config(format!("color {c} appears twice")));
                }
                pos[c.0 as usize] = off as u32;
            }
            Some(pos)
        } else {
            None
        };
        Ok(Self {
            window,
            occupancy,
            particles,
            slot,
            color_position,
        })
    }

    /// Builds a configuration from a per-site rule.
    pub fn from_fn(window: Window, track_colors: bool, f: impl Fn(i64) -> Color) -> Result<Self> {
        let occupancy = (window.lo..=window.hi).map(f).collect();
        Self::from_colors(window, occupancy, track_colors)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn tracks_colors(&self) -> bool {
        self.color_position.is_some()
    }

    /// Color at `site`, or `None` outside the window.
    pub fn get(&self, site: i64) -> Option<Color> {
        self.window
            .contains(site)
            .then(|| self.occupancy[self.window.offset(site)])
    }

    /// Color at `site`; sites outside the window read as empty.
    pub fn color_at(&self, site: i64) -> Color {
        self.get(site).unwrap_or(Color::EMPTY)
    }

    pub fn is_occupied(&self, site: i64) -> bool {
        !self.color_at(site).is_empty()
    }

    pub fn occupancy(&self) -> &[Color] {
        &self.occupancy
    }

    pub fn particle_count(&self) -> usize {
        self.particles.len()
    }

    /// Site of the `k`-th entry of the particle index.
    pub fn particle_site(&self, k: usize) -> i64 {
        self.window.site(self.particles[k] as usize)
    }

    /// Site holding `color` (colored configurations only).
    pub fn position_of(&self, color: Color) -> Option<i64> {
        let pos = self.color_position.as_ref()?;
        match pos.get(color.0 as usize) {
            Some(&off) if off != VACANT && !color.is_empty() => Some(self.window.site(off as usize)),
            _ => None,
        }
    }

    /// Sites and colors of all occupied sites, left to right.
    pub fn iter_particles(&self) -> impl Iterator<Item = (i64, Color)> + '_ {
        self.occupancy
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(off, &c)| (self.window.site(off), c))
    }

    /// Leftmost site holding exactly `color`.
    pub fn leftmost_with(&self, color: Color) -> Option<i64> {
        self.occupancy
            .iter()
            .position(|&c| c == color)
            .map(|off| self.window.site(off))
    }

    pub fn count_by_color(&self) -> BTreeMap<Color, usize> {
        let mut counts = BTreeMap::new();
        for (_, c) in self.iter_particles() {
            *counts.entry(c).or_insert(0) += 1;
        }
        counts
    }

    /// Maps every site through `f` (vacancies included).
    pub fn project(&self, f: impl Fn(Color) -> Color) -> Vec<Color> {
        self.occupancy.iter().map(|&c| f(c)).collect()
    }

    #[inline]
    pub(crate) fn color_at_offset(&self, off: usize) -> Color {
        self.occupancy[off]
    }

    /// Moves the particle at offset `from` onto the vacant offset `to`.
    #[inline]
    pub(crate) fn move_to_vacancy(&mut self, from: usize, to: usize) {
        debug_assert!(self.occupancy[to].is_empty() && !self.occupancy[from].is_empty());
        let c = self.occupancy[from];
        self.occupancy[to] = c;
        self.occupancy[from] = Color::EMPTY;
        let k = self.slot[from];
        self.particles[k as usize] = to as u32;
        self.slot[to] = k;
        self.slot[from] = VACANT;
        if let Some(pos) = self.color_position.as_mut() {
            pos[c.0 as usize] = to as u32;
        }
    }

    /// Exchanges the particles at two occupied offsets.
    #[inline]
    pub(crate) fn swap_particles(&mut self, a: usize, b: usize) {
        debug_assert!(!self.occupancy[a].is_empty() && !self.occupancy[b].is_empty());
        self.occupancy.swap(a, b);
        if let Some(pos) = self.color_position.as_mut() {
            pos[self.occupancy[a].0 as usize] = a as u32;
            pos[self.occupancy[b].0 as usize] = b as u32;
        }
    }

    /// Overwrites the content of `site`, keeping every index consistent.
    pub fn replace(&mut self, site: i64, color: Color) -> Result<()> {
        if !self.window.contains(site) {
            return Err(Error::Config(format!("site {site} outside {}", self.window)));
        }
        let off = self.window.offset(site);
        let old = self.occupancy[off];
        if let Some(pos) = self.color_position.as_mut() {
            if !color.is_empty() && color != old {
                if pos.get(color.0 as usize).is_some_and(|&o| o != VACANT) {
                    return Err(Error::Config(format!("color {color} already present")));
                }
                if pos.len() <= color.0 as usize {
                    pos.resize(color.0 as usize + 1, VACANT);
                }
            }
            if !old.is_empty() {
                pos[old.0 as usize] = VACANT;
            }
            if !color.is_empty() {
                pos[color.0 as usize] = off as u32;
            }
        }
        match (old.is_empty(), color.is_empty()) {
            (true, false) => {
                self.slot[off] = self.particles.len() as u32;
                self.particles.push(off as u32);
            }
            (false, true) => {
                let k = self.slot[off] as usize;
                self.particles.swap_remove(k);
                if k < self.particles.len() {
                    self.slot[self.particles[k] as usize] = k as u32;
                }
                self.slot[off] = VACANT;
            }
            _ => {}
        }
        self.occupancy[off] = color;
        Ok(())
    }

    /// Full-scan consistency check of occupancy, particle index and color map.
    pub fn audit(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("inconsistent configuration: {m}")));
        let occupied = self.occupancy.iter().filter(|c| !c.is_empty()).count();
        if occupied != self.particles.len() {
            return bad(format!(
                "{occupied} occupied sites but {} indexed particles",
                self.particles.len()
            ));
        }
        for (k, &off) in self.particles.iter().enumerate() {
            if self.occupancy[off as usize].is_empty() {
                return bad(format!("indexed particle {k} sits on a vacancy"));
            }
            if self.slot[off as usize] != k as u32 {
                return bad(format!("slot of offset {off} does not point back to {k}"));
            }
        }
        for (off, &s) in self.slot.iter().enumerate() {
            if (s == VACANT) != self.occupancy[off].is_empty() {
                return bad(format!("slot/occupancy disagree at offset {off}"));
            }
        }
        if let Some(pos) = &self.color_position {
            let mut seen = 0usize;
            for (c, &off) in pos.iter().enumerate() {
                if off == VACANT {
                    continue;
                }
                if c == 0 || self.occupancy[off as usize].0 as usize != c {
                    return bad(format!("color map sends {c} to offset {off}"));
                }
                seen += 1;
            }
            if seen != occupied {
                return bad(format!("{seen} mapped colors for {occupied} particles"));
            }
        }
        Ok(())
    }
}

impl PartialEq for Configuration {
    /// Two configurations are equal when they hold the same colors on the
    /// same window; the internal order of the particle index is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window && self.occupancy == other.occupancy
    }
}

fn require(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(what()))
    }
}

/// First class on `[lo, -L-1]`, second class on `[-L, 0]`, empty to the right.
pub fn init_two_species(params: &ModelParams, window: Window) -> Result<Configuration> {
    let l = i64::from(params.l());
    require(window.lo() < -l && window.hi() >= 1, || {
        format!("window {window} too small for L = {l}")
    })?;
    Configuration::from_fn(window, false, |x| {
        if x > 0 {
            Color::EMPTY
        } else if x >= -l {
            Color::SECOND_CLASS
        } else {
            Color::FIRST_CLASS
        }
    })
}

/// Color `n + 1` at site `-n` for every site `<= 0` in the window.
pub fn init_colored_step(window: Window) -> Result<Configuration> {
    require(window.lo() <= 0 && window.hi() >= 0, || {
        format!("window {window} must contain the origin")
    })?;
    Configuration::from_fn(window, true, |x| {
        if x > 0 {
            Color::EMPTY
        } else {
            Color((1 - x) as u32)
        }
    })
}

/// Every site `<= 0` holds color 1.
pub fn init_asep_step(window: Window) -> Result<Configuration> {
    require(window.lo() <= 0 && window.hi() >= 0, || {
        format!("window {window} must contain the origin")
    })?;
    Configuration::from_fn(window, false, |x| {
        if x > 0 {
            Color::EMPTY
        } else {
            Color(1)
        }
    })
}

/// What happens at the origin when the lone second-class particle sits
/// at `-L < 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OriginRule {
    /// The origin holds a first-class particle.
    #[default]
    Occupied,
    /// The origin is left empty.
    Empty,
}

/// A single second-class particle at `-L`, first-class particles on every
/// other site `<= 0` (subject to `origin`), empty to the right.
pub fn init_single_second_class(
    l: u32,
    window: Window,
    origin: OriginRule,
) -> Result<Configuration> {
    let l = i64::from(l);
    require(window.lo() <= -l && window.hi() >= 0, || {
        format!("window {window} too small for L = {l}")
    })?;
    Configuration::from_fn(window, false, |x| {
        if x > 0 || (x == 0 && l > 0 && origin == OriginRule::Empty) {
            Color::EMPTY
        } else if x == -l {
            Color::SECOND_CLASS
        } else {
            Color::FIRST_CLASS
        }
    })
}
