use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coupling::CoupledState;
use crate::dynamics::{Direction, Event, Mode, RunStats, SimState};
use crate::lattice::{
    init_asep_step, init_colored_step, init_single_second_class, init_two_species, make_window,
    Color, Window,
};
use crate::rng::RngStream;
use crate::{Error, Result};

use super::spec::{ExperimentKind, ExperimentSpec, InitialData};

/// The first failed coupling check of a trial, with the event that caused it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `identity`, `projection` or `labels`.
    pub check: String,
    pub event_index: u64,
    pub time: f64,
    pub site: i64,
    pub direction: Option<Direction>,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "observable", rename_all = "kebab-case")]
pub enum TrialOutcome {
    /// Terminal position of the leftmost second-class particle.
    Speed { position: i64, speed: f64 },
    Coupling {
        identity_violations: u64,
        projection_violations: u64,
        first_violation: Option<Violation>,
    },
    Identity { single_hit: bool, colored_hit: bool, colored_events: u64 },
    /// Block indicator at each observation time.
    Block { hits: Vec<bool> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub master_seed: u64,
    pub p: f64,
    #[serde(rename = "L")]
    pub l: u32,
    pub t: f64,
    pub events: u64,
    pub accepted: u64,
    pub wall_time_s: f64,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
}

impl TrialRecord {
    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &TrialRecord) -> bool {
        let mut a = self.clone();
        a.wall_time_s = other.wall_time_s;
        a == *other
    }
}

type Tracer<'a> = Option<&'a mut dyn FnMut(&Event)>;

/// Runs trial `index` of `spec`. The spec should already be validated.
pub fn run_trial(spec: &ExperimentSpec, index: u64) -> Result<TrialRecord> {
    trial(spec, index, None)
}

/// Like [`run_trial`], also handing every event to `trace` in order.
/// Identity trials trace the single-species side, then the colored side.
pub fn run_trial_traced(
    spec: &ExperimentSpec,
    index: u64,
    trace: &mut dyn FnMut(&Event),
) -> Result<TrialRecord> {
    trial(spec, index, Some(trace))
}

fn trial(spec: &ExperimentSpec, index: u64, tracer: Tracer<'_>) -> Result<TrialRecord> {
    let started = Instant::now();
    let (stats, outcome) = match spec.kind {
        ExperimentKind::Speed | ExperimentKind::FitAlpha => speed_trial(spec, index, tracer)?,
        ExperimentKind::CouplingAudit => coupling_trial(spec, index, tracer)?,
        ExperimentKind::Identity => identity_trial(spec, index, tracer)?,
        ExperimentKind::Block => block_trial(spec, index, tracer)?,
    };
    Ok(TrialRecord {
        trial_index: index,
        master_seed: spec.master_seed,
        p: spec.p,
        l: spec.l,
        t: spec.t,
        events: stats.events,
        accepted: stats.accepted,
        wall_time_s: started.elapsed().as_secs_f64(),
        outcome,
    })
}

fn run(state: &mut SimState, t: f64, stream: &mut RngStream, tracer: &mut Tracer<'_>) -> Result<RunStats> {
    match tracer {
        Some(f) => state.run_until_with(t, stream, |ev, _, _| f(ev)),
        None => state.run_until(t, stream),
    }
}

fn speed_trial(spec: &ExperimentSpec, index: u64, mut tracer: Tracer<'_>) -> Result<(RunStats, TrialOutcome)> {
    let params = spec.params()?;
    let window = make_window(spec.t, spec.l, spec.safety);
    let config = match spec.init {
        InitialData::TwoSpecies => init_two_species(&params, window)?,
        InitialData::SingleSecondClass => init_single_second_class(spec.l, window, spec.origin)?,
    };
    let mut state = SimState::new(config, params, Mode::TwoSpecies)?;
    let mut stream = RngStream::new(spec.master_seed, index);
    let stats = run(&mut state, spec.t, &mut stream, &mut tracer)?;
    let position = state.leftmost_second_class()?;
    Ok((
        stats,
        TrialOutcome::Speed {
            position,
            speed: position as f64 / spec.t,
        },
    ))
}

fn coupling_trial(spec: &ExperimentSpec, index: u64, mut tracer: Tracer<'_>) -> Result<(RunStats, TrialOutcome)> {
    let params = spec.params()?;
    let mut state = CoupledState::new(params, make_window(spec.t, spec.l, spec.safety))?;
    let mut stream = RngStream::new(spec.master_seed, index);
    let mut identity_violations = 0;
    let mut projection_violations = 0;
    let mut first: Option<Violation> = None;
    let mut count = 0u64;

    let mut audit = |s: &CoupledState, ev: Option<&Event>, count: u64| {
        for (ok, check, tally) in [
            (s.check_identity(), "identity", &mut identity_violations),
            (s.check_projection(), "projection", &mut projection_violations),
        ] {
            if !ok {
                *tally += 1;
                first.get_or_insert_with(|| Violation {
                    check: check.to_string(),
                    event_index: count,
                    time: ev.map_or(0.0, |e| e.time),
                    site: ev.map_or(0, |e| e.site),
                    direction: ev.map(|e| e.direction),
                    accepted: ev.is_some_and(|e| e.accepted),
                });
            }
        }
    };
    audit(&state, None, 0);
    let stats = state.run_until_with(spec.t, &mut stream, |s, ev| {
        count += 1;
        if let Some(f) = tracer.as_mut() {
            f(ev);
        }
        audit(s, Some(ev), count);
    })?;
    if let Err(e) = state.check_labels() {
        projection_violations += 1;
        first.get_or_insert_with(|| Violation {
            check: format!("labels: {e}"),
            event_index: count,
            time: spec.t,
            site: 0,
            direction: None,
            accepted: false,
        });
    }
    Ok((
        stats,
        TrialOutcome::Coupling {
            identity_violations,
            projection_violations,
            first_violation: first,
        },
    ))
}

/// Window holding the light cone, the observed sites and the initial sites
/// of the observed colors.
fn identity_window(spec: &ExperimentSpec) -> Result<Window> {
    let cone = make_window(spec.t, 0, spec.safety);
    let j_max = i64::from(spec.colors.last().copied().unwrap_or(1));
    let lo = spec.sites.first().copied().unwrap_or(0).min(1 - j_max) - 10;
    let hi = (spec.shift + j_max).max(spec.sites.last().copied().unwrap_or(0)) + 10;
    Ok(cone.union(&Window::new(lo, hi)?))
}

fn identity_trial(spec: &ExperimentSpec, index: u64, mut tracer: Tracer<'_>) -> Result<(RunStats, TrialOutcome)> {
    let params = spec.params()?;
    let window = identity_window(spec)?;

    let mut single = SimState::new(init_asep_step(window)?, params, Mode::Single)?;
    let mut stream = RngStream::new(spec.master_seed, 2 * index);
    let mut stats = run(&mut single, spec.t, &mut stream, &mut tracer)?;
    let cfg = single.config();
    let single_hit = spec.sites.iter().all(|&x| cfg.is_occupied(x))
        && spec.colors.iter().all(|&j| cfg.is_occupied(spec.shift + i64::from(j)));

    let mut colored = SimState::new(init_colored_step(window)?, params, Mode::Colored)?;
    let mut stream = RngStream::new(spec.master_seed, 2 * index + 1);
    let colored_stats = run(&mut colored, spec.t, &mut stream, &mut tracer)?;
    let cfg = colored.config();
    let mut colored_hit = spec.sites.iter().all(|&x| cfg.is_occupied(x));
    for &j in &spec.colors {
        colored_hit &= colored.position_of_color(Color(j))? > spec.shift;
    }
    let colored_events = colored_stats.events;
    stats += colored_stats;
    Ok((
        stats,
        TrialOutcome::Identity {
            single_hit,
            colored_hit,
            colored_events,
        },
    ))
}

fn block_trial(spec: &ExperimentSpec, index: u64, mut tracer: Tracer<'_>) -> Result<(RunStats, TrialOutcome)> {
    let params = spec.params()?;
    let times = spec.block_times();
    let t_max = *times.last().ok_or_else(|| Error::Spec("no block times".into()))?;
    let window = make_window(t_max, spec.l, spec.safety);
    let mut state = SimState::new(init_asep_step(window)?, params, Mode::Single)?;
    let mut stream = RngStream::new(spec.master_seed, index);
    let mut stats = RunStats::default();
    let mut hits = Vec::with_capacity(times.len());
    for &t in &times {
        stats += run(&mut state, t, &mut stream, &mut tracer)?;
        let x0 = (spec.block_s * t).floor() as i64;
        let cfg = state.config();
        hits.push((x0..=x0 + i64::from(spec.l)).all(|x| cfg.is_occupied(x)));
    }
    Ok((stats, TrialOutcome::Block { hits }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_record_consistent() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Speed);
        spec.t = 20.0;
        let rec = run_trial(&spec, 3).unwrap();
        let TrialOutcome::Speed { position, speed } = rec.outcome else {
            panic!("wrong outcome");
        };
        assert_eq!(speed * spec.t, position as f64);
        assert!(rec.events > 0);
        let again = run_trial(&spec, 3).unwrap();
        assert!(rec.same_result(&again));
    }

    #[test]
    fn identity_at_time_zero() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Identity);
        spec.t = 0.0;
        spec.sites = vec![-3, -1];
        spec.colors = vec![1, 2];
        spec.shift = -2;
        let rec = run_trial(&spec, 0).unwrap();
        assert_eq!(rec.events, 0);
        assert!(matches!(rec.outcome, TrialOutcome::Identity { single_hit: true, colored_hit: true, .. }));
        spec.shift = 1;
        let rec = run_trial(&spec, 0).unwrap();
        assert!(matches!(rec.outcome, TrialOutcome::Identity { single_hit: false, colored_hit: false, .. }));
    }

    #[test]
    fn coupling_trial_clean() {
        let mut spec = ExperimentSpec::new(ExperimentKind::CouplingAudit);
        spec.p = 0.7;
        spec.l = 2;
        spec.t = 5.0;
        let rec = run_trial(&spec, 1).unwrap();
        assert_eq!(
            rec.outcome,
            TrialOutcome::Coupling {
                identity_violations: 0,
                projection_violations: 0,
                first_violation: None
            }
        );
    }

    #[test]
    fn record_json_shape() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Block);
        spec.t = 10.0;
        spec.t_grid = vec![5.0];
        let rec = run_trial(&spec, 0).unwrap();
        let text = serde_json::to_string(&rec).unwrap();
        assert!(text.contains("\"observable\":\"block\""));
        let back: TrialRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn traced_equals_untraced() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Identity);
        spec.t = 3.0;
        let mut n = 0u64;
        let traced = run_trial_traced(&spec, 5, &mut |_| n += 1).unwrap();
        assert!(traced.same_result(&run_trial(&spec, 5).unwrap()));
        assert_eq!(n, traced.events);
    }
}
