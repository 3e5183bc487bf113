use serde::{Deserialize, Serialize};

use crate::stats::{binomial_se, block_prob_target, fit_alpha, EmpiricalCdf, SpeedLaw};
use crate::{Error, Result};

use super::spec::{ExperimentKind, ExperimentSpec};
use super::trial::{TrialOutcome, TrialRecord, Violation};

pub const SCHEMA_VERSION: u32 = 1;

/// Order-free tally of trial records. `merge` is commutative and
/// associative, so any grouping of records yields the same summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub trials: u64,
    pub events: u64,
    data: Tally,
}

#[derive(Clone, Debug, PartialEq)]
enum Tally {
    Empty,
    Speeds(Vec<f64>),
    Coupling {
        identity: u64,
        projection: u64,
        first: Option<(u64, Violation)>,
    },
    Identity { single: u64, colored: u64 },
    Block(Vec<u64>),
}

impl Default for Aggregate {
    fn default() -> Self {
        Self {
            trials: 0,
            events: 0,
            data: Tally::Empty,
        }
    }
}

impl Aggregate {
    pub fn from_record(rec: &TrialRecord) -> Self {
        let data = match &rec.outcome {
            TrialOutcome::Speed { speed, .. } => Tally::Speeds(vec![*speed]),
            TrialOutcome::Coupling {
                identity_violations,
                projection_violations,
                first_violation,
            } => Tally::Coupling {
                identity: *identity_violations,
                projection: *projection_violations,
                first: first_violation.clone().map(|v| (rec.trial_index, v)),
            },
            TrialOutcome::Identity {
                single_hit,
                colored_hit,
                ..
            } => Tally::Identity {
                single: u64::from(*single_hit),
                colored: u64::from(*colored_hit),
            },
            TrialOutcome::Block { hits } => Tally::Block(hits.iter().map(|&h| u64::from(h)).collect()),
        };
        Self {
            trials: 1,
            events: rec.events,
            data,
        }
    }

    pub fn merge(self, other: Aggregate) -> Result<Aggregate> {
        let data = match (self.data, other.data) {
            (Tally::Empty, d) | (d, Tally::Empty) => d,
            (Tally::Speeds(mut a), Tally::Speeds(b)) => {
                a.extend(b);
                a.sort_by(f64::total_cmp);
                Tally::Speeds(a)
            }
            (
                Tally::Coupling { identity: i1, projection: p1, first: f1 },
                Tally::Coupling { identity: i2, projection: p2, first: f2 },
            ) => Tally::Coupling {
                identity: i1 + i2,
                projection: p1 + p2,
                first: match (f1, f2) {
                    (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
                    (a, b) => a.or(b),
                },
            },
            (Tally::Identity { single: s1, colored: c1 }, Tally::Identity { single: s2, colored: c2 }) => {
                Tally::Identity {
                    single: s1 + s2,
                    colored: c1 + c2,
                }
            }
            (Tally::Block(a), Tally::Block(b)) if a.len() == b.len() => {
                Tally::Block(a.iter().zip(&b).map(|(x, y)| x + y).collect())
            }
            _ => return Err(Error::Spec("cannot merge records of different observables".into())),
        };
        Ok(Aggregate {
            trials: self.trials + other.trials,
            events: self.events + other.events,
            data,
        })
    }

    pub fn summarize(&self, spec: &ExperimentSpec) -> Result<Summary> {
        match (&self.data, spec.kind) {
            (Tally::Speeds(v), ExperimentKind::Speed) => speed_summary(self, v, spec).map(Summary::Speed),
            (Tally::Speeds(v), ExperimentKind::FitAlpha) => fit_summary(self, v, spec).map(Summary::FitAlpha),
            (Tally::Coupling { identity, projection, first }, ExperimentKind::CouplingAudit) => {
                Ok(Summary::CouplingAudit(CouplingSummary {
                    trials: self.trials,
                    events_checked: self.events,
                    identity_violations: *identity,
                    projection_violations: *projection,
                    first_violation: first.clone().map(|(trial_index, violation)| FirstViolation {
                        trial_index,
                        violation,
                    }),
                    pass: identity + projection == 0,
                }))
            }
            (Tally::Identity { single, colored }, ExperimentKind::Identity) => {
                let n = self.trials;
                let p1 = *single as f64 / n as f64;
                let p2 = *colored as f64 / n as f64;
                let (se1, se2) = (binomial_se(p1, n), binomial_se(p2, n));
                let se = se1.hypot(se2);
                let diff = (p1 - p2).abs();
                let z = if diff == 0.0 { 0.0 } else { diff / se };
                Ok(Summary::Identity(IdentitySummary {
                    n,
                    events: self.events,
                    p_single: p1,
                    p_colored: p2,
                    se_single: se1,
                    se_colored: se2,
                    se_combined: se,
                    z,
                    z_max: spec.z_max,
                    pass: z <= spec.z_max,
                }))
            }
            (Tally::Block(hits), ExperimentKind::Block) => block_summary(self, hits, spec).map(Summary::Block),
            (Tally::Empty, _) => Err(Error::Spec("no trial records".into())),
            _ => Err(Error::Spec(format!("records do not match a {} experiment", spec.kind))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub s: f64,
    pub empirical_cdf: f64,
    pub theoretical_cdf: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fitted_cdf: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedSummary {
    pub n: u64,
    pub events: u64,
    /// Scale of the reference law, `2p - 1`.
    pub alpha: f64,
    pub ks: f64,
    pub ks_max: f64,
    pub median: f64,
    pub theoretical_median: f64,
    pub median_tol: Option<f64>,
    pub mean: f64,
    pub theoretical_mean: f64,
    pub curve: Vec<CurvePoint>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub n: u64,
    pub events: u64,
    pub alpha_hat: f64,
    pub sse: f64,
    /// KS distance to the fitted law.
    pub ks_fitted: f64,
    /// KS distance to the law with `alpha = 2p - 1`.
    pub ks_gamma: f64,
    pub ks_max: Option<f64>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub curve: Vec<CurvePoint>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstViolation {
    pub trial_index: u64,
    pub violation: Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub trials: u64,
    pub events_checked: u64,
    pub identity_violations: u64,
    pub projection_violations: u64,
    pub first_violation: Option<FirstViolation>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub n: u64,
    pub events: u64,
    pub p_single: f64,
    pub p_colored: f64,
    pub se_single: f64,
    pub se_colored: f64,
    pub se_combined: f64,
    pub z: f64,
    pub z_max: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPoint {
    pub t: f64,
    pub position: i64,
    pub hits: u64,
    pub estimate: f64,
    pub se: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub n: u64,
    pub events: u64,
    pub s: f64,
    pub target: f64,
    pub tol: f64,
    pub points: Vec<BlockPoint>,
    /// `|estimate - target|` never grows by more than two combined
    /// standard errors from one time to the next.
    pub monotone: bool,
    pub within_tol: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Summary {
    Speed(SpeedSummary),
    CouplingAudit(CouplingSummary),
    Identity(IdentitySummary),
    Block(BlockSummary),
    FitAlpha(FitSummary),
}

impl Summary {
    pub fn passed(&self) -> bool {
        match self {
            Summary::Speed(s) => s.pass,
            Summary::CouplingAudit(s) => s.pass,
            Summary::Identity(s) => s.pass,
            Summary::Block(s) => s.pass,
            Summary::FitAlpha(s) => s.pass,
        }
    }

    pub fn curve(&self) -> Option<&[CurvePoint]> {
        match self {
            Summary::Speed(s) => Some(&s.curve),
            Summary::FitAlpha(s) => Some(&s.curve),
            _ => None,
        }
    }

    /// One-line human summary.
    pub fn headline(&self) -> String {
        match self {
            Summary::Speed(s) => format!(
                "n={} ks={:.4} (max {:.4}) median={:.4} (law {:.4})",
                s.n, s.ks, s.ks_max, s.median, s.theoretical_median
            ),
            Summary::FitAlpha(s) => format!(
                "n={} alpha_hat={:.4} ks_fitted={:.4} ks_gamma={:.4}",
                s.n, s.alpha_hat, s.ks_fitted, s.ks_gamma
            ),
            Summary::CouplingAudit(s) => format!(
                "trials={} events={} identity_violations={} projection_violations={}",
                s.trials, s.events_checked, s.identity_violations, s.projection_violations
            ),
            Summary::Identity(s) => format!(
                "n={} single={:.5} colored={:.5} se={:.5} z={:.3} (max {})",
                s.n, s.p_single, s.p_colored, s.se_combined, s.z, s.z_max
            ),
            Summary::Block(s) => {
                let pts: Vec<String> = s
                    .points
                    .iter()
                    .map(|p| format!("t={}: {:.4}±{:.4}", p.t, p.estimate, p.se))
                    .collect();
                format!("target={:.4} {} monotone={}", s.target, pts.join(" "), s.monotone)
            }
        }
    }
}

/// Everything an experiment produced. `summary` is a pure function of
/// `spec` and `records`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub spec: ExperimentSpec,
    pub summary: Summary,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl Report {
    /// Sorts `records` and summarizes them; they must cover trial indices
    /// `0..n_trials` exactly once.
    pub fn from_records(spec: ExperimentSpec, mut records: Vec<TrialRecord>) -> Result<Report> {
        records.sort_by_key(|r| r.trial_index);
        let complete = records.len() as u64 == spec.n_trials
            && records.iter().enumerate().all(|(i, r)| r.trial_index == i as u64);
        if !complete {
            return Err(Error::Spec(format!(
                "records do not cover trials 0..{} exactly once",
                spec.n_trials
            )));
        }
        let agg = records
            .iter()
            .map(Aggregate::from_record)
            .try_fold(Aggregate::default(), Aggregate::merge)?;
        let summary = agg.summarize(&spec)?;
        Ok(Report {
            schema_version: SCHEMA_VERSION,
            spec,
            summary,
            records,
        })
    }

    pub fn passed(&self) -> bool {
        self.summary.passed()
    }
}

fn curve(spec: &ExperimentSpec, ecdf: &EmpiricalCdf, law: &SpeedLaw, fitted: Option<&SpeedLaw>) -> Vec<CurvePoint> {
    spec.s_grid()
        .into_iter()
        .map(|s| CurvePoint {
            s,
            empirical_cdf: ecdf.eval(s),
            theoretical_cdf: law.cdf(s),
            fitted_cdf: fitted.map(|f| f.cdf(s)),
        })
        .collect()
}

fn speed_summary(agg: &Aggregate, speeds: &[f64], spec: &ExperimentSpec) -> Result<SpeedSummary> {
    let params = spec.params()?;
    let law = SpeedLaw::for_params(&params);
    let ecdf = EmpiricalCdf::new(speeds.to_vec())?;
    let ks = ecdf.ks_distance(|s| law.cdf(s))?;
    let median = ecdf.median().unwrap_or(f64::NAN);
    let ks_max = spec.ks_threshold();
    let median_ok = spec
        .median_tol
        .is_none_or(|tol| (median - law.median()).abs() <= tol);
    Ok(SpeedSummary {
        n: agg.trials,
        events: agg.events,
        alpha: law.alpha(),
        ks,
        ks_max,
        median,
        theoretical_median: law.median(),
        median_tol: spec.median_tol,
        mean: ecdf.mean().unwrap_or(f64::NAN),
        theoretical_mean: law.mean(),
        curve: curve(spec, &ecdf, &law, None),
        pass: ks <= ks_max && median_ok,
    })
}

/// With an alpha range the range decides; an explicit `ks_max` adds a bound
/// on the fitted KS distance, which is the sole criterion without a range.
fn fit_summary(agg: &Aggregate, speeds: &[f64], spec: &ExperimentSpec) -> Result<FitSummary> {
    let params = spec.params()?;
    let ecdf = EmpiricalCdf::new(speeds.to_vec())?;
    let fit = fit_alpha(&ecdf, spec.l)?;
    let fitted = SpeedLaw::new(fit.alpha, spec.l)?;
    let gamma_law = SpeedLaw::for_params(&params);
    let ks_fitted = ecdf.ks_distance(|s| fitted.cdf(s))?;
    let ks_gamma = ecdf.ks_distance(|s| gamma_law.cdf(s))?;
    let has_range = spec.alpha_min.is_some() || spec.alpha_max.is_some();
    let in_range = spec.alpha_min.is_none_or(|a| fit.alpha >= a)
        && spec.alpha_max.is_none_or(|b| fit.alpha <= b);
    let ks_ok = match spec.ks_max {
        Some(k) => ks_fitted <= k,
        None => has_range || ks_fitted <= spec.ks_threshold(),
    };
    Ok(FitSummary {
        n: agg.trials,
        events: agg.events,
        alpha_hat: fit.alpha,
        sse: fit.sse,
        ks_fitted,
        ks_gamma,
        ks_max: spec.ks_max,
        alpha_min: spec.alpha_min,
        alpha_max: spec.alpha_max,
        curve: curve(spec, &ecdf, &gamma_law, Some(&fitted)),
        pass: in_range && ks_ok,
    })
}

fn block_summary(agg: &Aggregate, hits: &[u64], spec: &ExperimentSpec) -> Result<BlockSummary> {
    let params = spec.params()?;
    let target = block_prob_target(spec.block_s, params.gamma(), spec.l)?;
    let n = agg.trials;
    let times = spec.block_times();
    if times.len() != hits.len() {
        return Err(Error::Spec("block records do not match the time grid".into()));
    }
    let points: Vec<BlockPoint> = times
        .iter()
        .zip(hits)
        .map(|(&t, &h)| {
            let estimate = h as f64 / n as f64;
            BlockPoint {
                t,
                position: (spec.block_s * t).floor() as i64,
                hits: h,
                estimate,
                se: binomial_se(estimate, n),
                error: (estimate - target).abs(),
            }
        })
        .collect();
    let monotone = points
        .windows(2)
        .all(|w| w[1].error <= w[0].error + 2.0 * w[0].se.hypot(w[1].se));
    let last = points.last().ok_or_else(|| Error::Spec("empty time grid".into()))?;
    let within_tol = last.error <= spec.block_tol;
    Ok(BlockSummary {
        n,
        events: agg.events,
        s: spec.block_s,
        target,
        tol: spec.block_tol,
        points,
        monotone,
        within_tol,
        pass: monotone && within_tol,
    })
}
