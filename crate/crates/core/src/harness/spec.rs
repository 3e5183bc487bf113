use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lattice::{ModelParams, OriginRule};
use crate::stats::block_prob_target;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Speed,
    CouplingAudit,
    Identity,
    Block,
    FitAlpha,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Speed,
        ExperimentKind::CouplingAudit,
        ExperimentKind::Identity,
        ExperimentKind::Block,
        ExperimentKind::FitAlpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Speed => "speed",
            ExperimentKind::CouplingAudit => "coupling-audit",
            ExperimentKind::Identity => "identity",
            ExperimentKind::Block => "block",
            ExperimentKind::FitAlpha => "fit-alpha",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Spec(format!("unknown experiment kind {s:?}")))
    }
}

/// Initial data of the speed and fit experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    /// `L + 1` second-class particles on `[-L, 0]`, first class to the left.
    TwoSpecies,
    /// One second-class particle at `-L` among first-class particles.
    SingleSecondClass,
}

impl InitialData {
    fn name(self) -> &'static str {
        match self {
            InitialData::TwoSpecies => "two-species",
            InitialData::SingleSecondClass => "single-second-class",
        }
    }
}

impl FromStr for InitialData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-species" => Ok(InitialData::TwoSpecies),
            "single-second-class" | "single" => Ok(InitialData::SingleSecondClass),
            _ => Err(Error::Spec(format!("unknown initial data {s:?}"))),
        }
    }
}

fn origin_name(o: OriginRule) -> &'static str {
    match o {
        OriginRule::Occupied => "occupied",
        OriginRule::Empty => "empty",
    }
}

fn parse_origin(s: &str) -> Result<OriginRule> {
    match s {
        "occupied" => Ok(OriginRule::Occupied),
        "empty" => Ok(OriginRule::Empty),
        _ => Err(Error::Spec(format!("unknown origin rule {s:?}"))),
    }
}

/// Everything that determines an experiment's report.
///
/// The same keys are used by [`ExperimentSpec::set`], the flat key-value
/// config files and the command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub p: f64,
    pub l: u32,
    pub t: f64,
    pub n_trials: u64,
    pub master_seed: u64,
    /// Light-cone factor of the simulation window.
    pub safety: f64,
    pub init: InitialData,
    pub origin: OriginRule,
    /// CDF table grid: `s_steps` points from `s_lo` to `s_hi`.
    pub s_lo: f64,
    pub s_hi: f64,
    pub s_steps: u32,
    /// Identity experiment: sites `I`, colors `J` and shift `P`.
    pub sites: Vec<i64>,
    pub colors: Vec<u32>,
    pub shift: i64,
    /// Block experiment: scaled position `s` and extra observation times.
    pub block_s: f64,
    pub t_grid: Vec<f64>,
    /// KS bound for speed and fit experiments; unset means
    /// `1.36 / sqrt(n) + 0.0165`.
    pub ks_max: Option<f64>,
    /// Speed experiment: allowed gap between empirical and analytic median.
    pub median_tol: Option<f64>,
    pub z_max: f64,
    pub block_tol: f64,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
}

impl ExperimentSpec {
    /// Defaults mirror the flagship run: `t = 500`, `10_000` trials.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut spec = Self {
            kind,
            p: 1.0,
            l: 0,
            t: 500.0,
            n_trials: 10_000,
            master_seed: 42,
            safety: 5.0,
            init: InitialData::TwoSpecies,
            origin: OriginRule::Occupied,
            s_lo: -1.0,
            s_hi: 1.0,
            s_steps: 201,
            sites: Vec::new(),
            colors: Vec::new(),
            shift: 0,
            block_s: 0.0,
            t_grid: Vec::new(),
            ks_max: None,
            median_tol: None,
            z_max: 3.0,
            block_tol: 0.02,
            alpha_min: None,
            alpha_max: None,
        };
        match kind {
            ExperimentKind::FitAlpha => spec.init = InitialData::SingleSecondClass,
            ExperimentKind::CouplingAudit => {
                spec.t = 50.0;
                spec.n_trials = 1000;
            }
            ExperimentKind::Identity => {
                spec.p = 0.7;
                spec.t = 1.0;
                spec.n_trials = 200_000;
                spec.sites = vec![-1];
                spec.colors = vec![1, 2];
                spec.shift = 1;
            }
            ExperimentKind::Block => {
                spec.p = 0.75;
                spec.l = 1;
                spec.t = 1000.0;
                spec.n_trials = 20_000;
                spec.block_s = 0.1;
                spec.t_grid = vec![200.0, 500.0];
            }
            ExperimentKind::Speed => {}
        }
        spec
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.p, self.l).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn ks_threshold(&self) -> f64 {
        self.ks_max
            .unwrap_or_else(|| 1.36 / (self.n_trials as f64).sqrt() + 0.0165)
    }

    /// Observation times of the block experiment, ascending, ending at `t`.
    pub fn block_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self.t_grid.iter().copied().chain([self.t]).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    /// CDF table abscissae.
    pub fn s_grid(&self) -> Vec<f64> {
        match self.s_steps {
            0 => Vec::new(),
            1 => vec![self.s_lo],
            k => (0..k)
                .map(|i| self.s_lo + (self.s_hi - self.s_lo) * f64::from(i) / f64::from(k - 1))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Spec(m));
        let params = self.params()?;
        if self.n_trials < 1 {
            return fail("n_trials must be at least 1".into());
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return fail(format!("t = {} must be finite and >= 0", self.t));
        }
        if !(self.safety >= 1.0 && self.safety.is_finite()) {
            return fail(format!("safety = {} must be >= 1", self.safety));
        }
        if self.s_steps > 0 && !(self.s_lo < self.s_hi || self.s_steps == 1) {
            return fail("s-grid needs lo < hi".into());
        }
        match self.kind {
            ExperimentKind::Speed | ExperimentKind::FitAlpha => {
                if self.t <= 0.0 {
                    return fail("speed experiments need t > 0".into());
                }
                if self.kind == ExperimentKind::FitAlpha && self.init != InitialData::SingleSecondClass {
                    return fail("fit-alpha runs single-second-class initial data".into());
                }
                if let (Some(a), Some(b)) = (self.alpha_min, self.alpha_max) {
                    if a > b {
                        return fail(format!("alpha range [{a}, {b}] is empty"));
                    }
                }
            }
            ExperimentKind::Identity => {
                if self.sites.windows(2).any(|w| w[0] >= w[1]) {
                    return fail("I must be strictly ascending".into());
                }
                if self.sites.iter().any(|&i| i > self.shift) {
                    return fail(format!("every site of I must be <= P = {}", self.shift));
                }
                if self.colors.first() == Some(&0) || self.colors.windows(2).any(|w| w[0] >= w[1]) {
                    return fail("J must be strictly ascending and >= 1".into());
                }
                if self.sites.is_empty() && self.colors.is_empty() {
                    return fail("identity experiment needs I or J".into());
                }
            }
            ExperimentKind::Block => {
                block_prob_target(self.block_s, params.gamma(), self.l)
                    .map_err(|e| Error::Spec(e.to_string()))?;
                if self.t_grid.iter().any(|&u| u.is_nan() || u < 0.0 || u > self.t) {
                    return fail("t-grid entries must lie in [0, t]".into());
                }
            }
            ExperimentKind::CouplingAudit => {}
        }
        Ok(())
    }

    /// Keys meaningful for this spec's kind, in a stable order.
    pub fn keys(&self) -> Vec<&'static str> {
        let mut keys = vec!["kind", "p", "L", "t", "n", "seed", "safety"];
        match self.kind {
            ExperimentKind::Speed => keys.extend(["init", "origin", "s-grid", "ks-max", "median-tol"]),
            ExperimentKind::FitAlpha => {
                keys.extend(["origin", "s-grid", "ks-max", "alpha-min", "alpha-max"])
            }
            ExperimentKind::Identity => keys.extend(["I", "J", "P", "z-max"]),
            ExperimentKind::Block => keys.extend(["s", "t-grid", "tol"]),
            ExperimentKind::CouplingAudit => {}
        }
        keys
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |e: &dyn fmt::Display| Error::Spec(format!("bad value {v:?} for {key}: {e}"));
        fn num<T: FromStr>(v: &str) -> std::result::Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| e.to_string())
        }
        fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
        where
            T::Err: fmt::Display,
        {
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|x| num(x.trim())).collect()
        }
        fn opt(v: &str) -> std::result::Result<Option<f64>, String> {
            if v.is_empty() || v == "none" {
                Ok(None)
            } else {
                num(v).map(Some)
            }
        }
        if !self.keys().contains(&key) {
            return Err(Error::Spec(format!("key {key:?} does not apply to {}", self.kind)));
        }
        match key {
            "kind" => {
                let kind: ExperimentKind = v.parse()?;
                if kind != self.kind {
                    return Err(Error::Spec(format!("config is for {kind}, not {}", self.kind)));
                }
            }
            "p" => self.p = num(v).map_err(|e| bad(&e))?,
            "L" => self.l = num(v).map_err(|e| bad(&e))?,
            "t" => self.t = num(v).map_err(|e| bad(&e))?,
            "n" => self.n_trials = num(v).map_err(|e| bad(&e))?,
            "seed" => self.master_seed = num(v).map_err(|e| bad(&e))?,
            "safety" => self.safety = num(v).map_err(|e| bad(&e))?,
            "init" => self.init = v.parse()?,
            "origin" => self.origin = parse_origin(v)?,
            "s-grid" => {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                let [lo, hi, steps] = parts[..] else {
                    return Err(bad(&"expected lo,hi,steps"));
                };
                self.s_lo = num(lo).map_err(|e| bad(&e))?;
                self.s_hi = num(hi).map_err(|e| bad(&e))?;
                self.s_steps = num(steps).map_err(|e| bad(&e))?;
            }
            "I" => self.sites = list(v).map_err(|e| bad(&e))?,
            "J" => self.colors = list(v).map_err(|e| bad(&e))?,
            "P" => self.shift = num(v).map_err(|e| bad(&e))?,
            "s" => self.block_s = num(v).map_err(|e| bad(&e))?,
            "t-grid" => self.t_grid = list(v).map_err(|e| bad(&e))?,
            "ks-max" => self.ks_max = opt(v).map_err(|e| bad(&e))?,
            "median-tol" => self.median_tol = opt(v).map_err(|e| bad(&e))?,
            "z-max" => self.z_max = num(v).map_err(|e| bad(&e))?,
            "tol" => self.block_tol = num(v).map_err(|e| bad(&e))?,
            "alpha-min" => self.alpha_min = opt(v).map_err(|e| bad(&e))?,
            "alpha-max" => self.alpha_max = opt(v).map_err(|e| bad(&e))?,
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        Ok(())
    }

    /// Textual value of one key, in the format [`set`](Self::set) accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        fn join<T: ToString>(xs: &[T]) -> String {
            xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        fn opt(x: Option<f64>) -> String {
            x.map_or_else(|| "none".to_string(), |v| v.to_string())
        }
        Some(match key {
            "kind" => self.kind.to_string(),
            "p" => self.p.to_string(),
            "L" => self.l.to_string(),
            "t" => self.t.to_string(),
            "n" => self.n_trials.to_string(),
            "seed" => self.master_seed.to_string(),
            "safety" => self.safety.to_string(),
            "init" => self.init.name().to_string(),
            "origin" => origin_name(self.origin).to_string(),
            "s-grid" => format!("{},{},{}", self.s_lo, self.s_hi, self.s_steps),
            "I" => join(&self.sites),
            "J" => join(&self.colors),
            "P" => self.shift.to_string(),
            "s" => self.block_s.to_string(),
            "t-grid" => join(&self.t_grid),
            "ks-max" => opt(self.ks_max),
            "median-tol" => opt(self.median_tol),
            "z-max" => self.z_max.to_string(),
            "tol" => self.block_tol.to_string(),
            "alpha-min" => opt(self.alpha_min),
            "alpha-max" => opt(self.alpha_max),
            _ => return None,
        })
    }

    /// Flat `key = value` document that [`from_config`](Self::from_config)
    /// reads back into an identical spec.
    pub fn to_config(&self) -> String {
        self.keys()
            .into_iter()
            .map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Spec(format!("line {}: expected key = value", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(pairs)
    }

    pub fn from_config(kind: ExperimentKind, text: &str) -> Result<Self> {
        let mut spec = Self::new(kind);
        for (k, v) in Self::parse_config(text)? {
            spec.set(&k, &v)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_for_every_kind() {
        for kind in ExperimentKind::ALL {
            let mut spec = ExperimentSpec::new(kind);
            spec.master_seed = 7;
            spec.safety = 1.5;
            spec.ks_max = Some(0.1 + 0.2);
            let text = spec.to_config();
            let back = ExperimentSpec::from_config(kind, &text).unwrap();
            if matches!(kind, ExperimentKind::Speed | ExperimentKind::FitAlpha) {
                assert_eq!(back, spec, "{kind}");
            } else {
                assert_eq!(back.to_config(), text, "{kind}");
            }
        }
    }

    #[test]
    fn unknown_and_foreign_keys_rejected() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Speed);
        assert!(spec.set("bogus", "1").is_err());
        assert!(spec.set("I", "-1").is_err());
        assert!(spec.set("kind", "block").is_err());
        assert!(spec.set("p", "abc").is_err());
        assert!(ExperimentSpec::parse_config("p 0.7").is_err());
    }

    #[test]
    fn identity_sets_validated() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Identity);
        spec.validate().unwrap();
        spec.set("I", "-1,-2").unwrap();
        assert!(spec.validate().is_err());
        spec.set("I", "-2,2").unwrap();
        assert!(spec.validate().is_err());
        spec.set("I", "-2,-1").unwrap();
        spec.set("J", "0,1").unwrap();
        assert!(spec.validate().is_err());
        spec.set("J", "2,1").unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn basic_validation() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Speed);
        spec.n_trials = 0;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(ExperimentKind::Speed);
        spec.p = 0.4;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(ExperimentKind::FitAlpha);
        spec.init = InitialData::TwoSpecies;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(ExperimentKind::Block);
        spec.block_s = 0.6;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(ExperimentKind::CouplingAudit);
        spec.t = 0.0;
        spec.validate().unwrap();
    }

    #[test]
    fn grids() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Block);
        assert_eq!(spec.block_times(), vec![200.0, 500.0, 1000.0]);
        spec.t_grid = vec![1000.0, 200.0];
        assert_eq!(spec.block_times(), vec![200.0, 1000.0]);
        let mut s = ExperimentSpec::new(ExperimentKind::Speed);
        s.set("s-grid", "-1,1,5").unwrap();
        assert_eq!(s.s_grid(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!((s.ks_threshold() - 0.03).abs() < 1e-3);
    }
}
