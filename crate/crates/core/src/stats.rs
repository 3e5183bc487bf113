//! Limiting speed laws, empirical CDFs, Kolmogorov-Smirnov distances and the
//! least-squares fit of the speed-law scale.

use serde::{Deserialize, Serialize};

use crate::lattice::ModelParams;
use crate::rng::RngStream;
use crate::{Error, Result};

/// Law of the minimum of `L + 1` independent uniforms on `[-alpha, alpha]`:
/// `P(U >= s) = ((1 - s / alpha) / 2)^(L + 1)` on the support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedLaw {
    alpha: f64,
    l: u32,
}

impl SpeedLaw {
    pub fn new(alpha: f64, l: u32) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("scale alpha = {alpha} must be positive")));
        }
        Ok(Self { alpha, l })
    }

    /// The law with `alpha = gamma = p - q`.
    pub fn for_params(params: &ModelParams) -> Self {
        Self {
            alpha: params.gamma(),
            l: params.l(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    fn exponent(&self) -> i32 {
        self.l as i32 + 1
    }

    /// `P(U >= s)`.
    pub fn survival(&self, s: f64) -> f64 {
        if s <= -self.alpha {
            1.0
        } else if s >= self.alpha {
            0.0
        } else {
            ((1.0 - s / self.alpha) / 2.0).powi(self.exponent())
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        1.0 - self.survival(s)
    }

    /// `s` with `cdf(s) = u`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.from_uniform(1.0 - u)
    }

    /// Inverse-survival transform `alpha * (1 - 2 v^(1/(L+1)))`.
    pub fn from_uniform(&self, v: f64) -> f64 {
        self.alpha * (1.0 - 2.0 * v.powf(1.0 / f64::from(self.exponent())))
    }

    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        self.from_uniform(stream.next_uniform())
    }

    pub fn median(&self) -> f64 {
        self.from_uniform(0.5)
    }

    pub fn mean(&self) -> f64 {
        let m = f64::from(self.exponent());
        self.alpha * (1.0 - 2.0 * m / (m + 1.0))
    }
}

pub fn speed_survival(s: f64, alpha: f64, l: u32) -> Result<f64> {
    Ok(SpeedLaw::new(alpha, l)?.survival(s))
}

pub fn sample_speed_law(law: &SpeedLaw, stream: &mut RngStream) -> f64 {
    law.sample(stream)
}

/// Large-time probability that the `L + 1` sites from `s t` on are all
/// occupied in step-initial ASEP.
pub fn block_prob_target(s: f64, gamma: f64, l: u32) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 || s.abs() > gamma {
        return Err(Error::Domain(format!("|s| = {} exceeds gamma = {gamma}", s.abs())));
    }
    let sigma = ((1.0 - s / gamma) / 2.0).powi(2);
    Ok(sigma.powf(f64::from(l + 1) / 2.0))
}

pub fn binomial_se(phat: f64, n: u64) -> f64 {
    (phat * (1.0 - phat) / n as f64).sqrt()
}

/// Asymptotic one-sample KS critical value `sqrt(-ln(level / 2) / 2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Domain("NaN sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn count_le(&self, x: f64) -> usize {
        self.samples.partition_point(|&v| v <= x)
    }

    /// `#{samples <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.count_le(x) as f64 / self.len() as f64
    }

    /// `#{samples >= x} / n`.
    pub fn survival(&self, x: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let below = self.samples.partition_point(|&v| v < x);
        (self.len() - below) as f64 / self.len() as f64
    }

    /// Smallest sample `x` with `eval(x) >= q`.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let k = ((q * self.len() as f64).ceil() as usize).clamp(1, self.len());
        Some(self.samples[k - 1])
    }

    /// Midpoint median.
    pub fn median(&self) -> Option<f64> {
        let n = self.len();
        match n {
            0 => None,
            _ if n % 2 == 1 => Some(self.samples[n / 2]),
            _ => Some((self.samples[n / 2 - 1] + self.samples[n / 2]) / 2.0),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.samples.iter().sum::<f64>() / self.len() as f64)
    }

    /// `sup |F_n - F|` for a continuous reference `cdf`.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Domain("KS distance of an empty sample".into()));
        }
        let n = self.len() as f64;
        Ok(self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                ((i + 1) as f64 / n - f).abs().max((i as f64 / n - f).abs())
            })
            .fold(0.0, f64::max))
    }

    /// `(x, F_n(x), multiplicity)` for each distinct sample value.
    fn steps(&self) -> Vec<(f64, f64, f64)> {
        let n = self.len() as f64;
        let mut out: Vec<(f64, f64, f64)> = Vec::new();
        for (i, &x) in self.samples.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == x => {
                    last.1 = (i + 1) as f64 / n;
                    last.2 += 1.0;
                }
                _ => out.push((x, (i + 1) as f64 / n, 1.0)),
            }
        }
        out
    }
}

pub fn ks_distance(ecdf: &EmpiricalCdf, cdf: impl Fn(f64) -> f64) -> Result<f64> {
    ecdf.ks_distance(cdf)
}

/// Two-sample KS statistic `sup |F_a - F_b|`, exact in the presence of ties.
pub fn ks_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("KS distance of an empty sample".into()));
    }
    let (xa, xb) = (a.samples(), b.samples());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Least-squares estimate of the speed-law scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    /// Sum over samples of squared gaps between empirical and model CDF.
    pub sse: f64,
}

const ALPHA_LO: f64 = 1e-3;
const ALPHA_HI: f64 = 1.0;
const ALPHA_TOL: f64 = 1e-4;
const GRID_STEP: f64 = 1e-3;

/// Minimizes `sum_i (F_n(x_i) - F_alpha(x_i))^2` over `alpha` in
/// `(0.001, 1]`, where `F_alpha` is the CDF of [`SpeedLaw`] with scale
/// `alpha` and the given `L`.
pub fn fit_alpha(ecdf: &EmpiricalCdf, l: u32) -> Result<AlphaFit> {
    if ecdf.len() < 10 {
        return Err(Error::Fit(format!("{} samples, need at least 10", ecdf.len())));
    }
    let steps = ecdf.steps();
    if steps.len() == 1 {
        return Err(Error::Fit("all samples are equal".into()));
    }
    let objective = |alpha: f64| -> f64 {
        let law = SpeedLaw { alpha, l };
        steps
            .iter()
            .map(|&(x, f, w)| w * (f - law.cdf(x)).powi(2))
            .sum()
    };

    let (lo, hi) = (ALPHA_LO, ALPHA_HI);
    let descends_to_lo = objective(lo) < objective(lo + GRID_STEP);
    let descends_to_hi = objective(hi) < objective(hi - GRID_STEP);
    let (a, b) = if descends_to_lo && descends_to_hi {
        // Not unimodal on the bracket; locate the basin on a grid first.
        let cells = ((hi - lo) / GRID_STEP).round() as usize;
        let best = (0..=cells)
            .map(|k| lo + k as f64 * GRID_STEP)
            .map(|x| (x, objective(x)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .map(|(x, _)| x)
            .unwrap_or(hi);
        ((best - GRID_STEP).max(lo), (best + GRID_STEP).min(hi))
    } else {
        (lo, hi)
    };
    let alpha = golden_section(objective, a, b, ALPHA_TOL);
    Ok(AlphaFit {
        alpha,
        sse: objective(alpha),
    })
}

/// Golden-section minimization on `[a, b]` until the bracket is narrower
/// than `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (a + b);
    // The endpoints of the original bracket are candidates too.
    [mid, a, b]
        .into_iter()
        .min_by(|p, q| f(*p).total_cmp(&f(*q)))
        .unwrap_or(mid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn survival_values() {
        assert!(close(speed_survival(0.0, 1.0, 0).unwrap(), 0.5, 1e-15));
        assert!(close(speed_survival(0.2, 0.4, 2).unwrap(), 0.015625, 1e-15));
        assert_eq!(speed_survival(-0.4, 0.4, 3).unwrap(), 1.0);
        assert_eq!(speed_survival(0.4, 0.4, 3).unwrap(), 0.0);
        assert_eq!(speed_survival(-7.0, 0.4, 3).unwrap(), 1.0);
        assert!(speed_survival(0.0, 0.0, 0).is_err());
        assert!(speed_survival(0.0, -1.0, 0).is_err());
    }

    #[test]
    fn inverse_transform_boundaries() {
        let law = SpeedLaw::new(0.4, 2).unwrap();
        assert!(close(law.from_uniform(0.0), 0.4, 1e-15));
        assert!(close(law.from_uniform(1.0), -0.4, 1e-15));
        // survival(0) = 1/8, so V = 1/8 maps to the origin.
        assert!(close(law.survival(0.0), 0.125, 1e-15));
        assert!(close(law.from_uniform(0.125), 0.0, 1e-15));
        for u in [0.01, 0.3, 0.5, 0.77, 0.99] {
            assert!(close(law.cdf(law.quantile(u)), u, 1e-12));
        }
        assert!(close(law.median(), -0.234_960_420_787_279_86, 1e-12));
    }

    #[test]
    fn block_target_values() {
        assert!(close(block_prob_target(0.1, 0.5, 1).unwrap(), 0.16, 1e-15));
        assert!(close(block_prob_target(0.0, 0.3, 0).unwrap(), 0.5, 1e-15));
        assert_eq!(block_prob_target(0.5, 0.5, 2).unwrap(), 0.0);
        assert!(block_prob_target(0.6, 0.5, 1).is_err());
        for k in -10..=10 {
            let s = 0.04 * f64::from(k);
            for l in 0..4 {
                assert!(close(
                    block_prob_target(s, 0.4, l).unwrap(),
                    speed_survival(s, 0.4, l).unwrap(),
                    1e-14
                ));
            }
        }
    }

    #[test]
    fn binomial_standard_errors() {
        assert!(close(binomial_se(0.5, 100), 0.05, 1e-15));
        assert_eq!(binomial_se(0.0, 10), 0.0);
        assert!(close(binomial_se(0.16, 20_000), 0.002_592_296_279, 1e-11));
    }

    #[test]
    fn ks_small_samples() {
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        let one = EmpiricalCdf::new(vec![0.5]).unwrap();
        assert!(close(one.ks_distance(uniform).unwrap(), 0.5, 1e-15));
        let two = EmpiricalCdf::new(vec![0.75, 0.25]).unwrap();
        assert!(close(two.ks_distance(uniform).unwrap(), 0.25, 1e-15));
        assert!(EmpiricalCdf::new(vec![]).unwrap().ks_distance(uniform).is_err());
        assert!(EmpiricalCdf::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn ecdf_evaluation() {
        let e = EmpiricalCdf::new(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(e.samples(), &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(3.0), 1.0);
        assert_eq!(e.survival(2.0), 0.75);
        assert_eq!(e.survival(2.5), 0.25);
        assert_eq!(e.median(), Some(2.0));
        assert_eq!(e.quantile(0.5), Some(2.0));
        assert_eq!(e.quantile(0.0), Some(1.0));
        assert_eq!(e.quantile(1.0), Some(3.0));
    }

    #[test]
    fn two_sample_ks_with_ties() {
        let a = EmpiricalCdf::new(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let b = EmpiricalCdf::new(vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(close(ks_two_sample(&a, &b).unwrap(), 0.25, 1e-15));
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        let c = EmpiricalCdf::new(vec![5.0, 6.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &c).unwrap(), 1.0);
    }

    #[test]
    fn fit_recovers_alpha_from_exact_quantiles() {
        let law = SpeedLaw::new(0.5, 1).unwrap();
        let n = 2000;
        let xs = (0..n).map(|i| law.quantile((i as f64 + 0.5) / n as f64)).collect();
        let fit = fit_alpha(&EmpiricalCdf::new(xs).unwrap(), 1).unwrap();
        assert!(close(fit.alpha, 0.5, 1e-3), "alpha {}", fit.alpha);
        assert!(fit.sse < 1e-3);
    }

    #[test]
    fn fit_is_deterministic_and_rejects_degenerate_data() {
        let law = SpeedLaw::new(0.875, 2).unwrap();
        let mut s = RngStream::new(8, 8);
        let xs: Vec<f64> = (0..5000).map(|_| law.sample(&mut s)).collect();
        let e = EmpiricalCdf::new(xs).unwrap();
        assert_eq!(fit_alpha(&e, 2).unwrap(), fit_alpha(&e, 2).unwrap());
        assert!(fit_alpha(&EmpiricalCdf::new(vec![0.1; 50]).unwrap(), 0).is_err());
        assert!(fit_alpha(&EmpiricalCdf::new(vec![0.1, 0.2]).unwrap(), 0).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-6);
        assert!(close(x, 0.3, 1e-6));
        let edge = golden_section(|x| x, 0.2, 1.0, 1e-6);
        assert!(close(edge, 0.2, 1e-6));
    }

    #[test]
    fn critical_values() {
        assert!(close(ks_critical_value(1, 0.05), 1.358, 1e-3));
        assert!(close(ks_critical_value(10_000, 0.01), 0.01628, 1e-4));
    }
}
