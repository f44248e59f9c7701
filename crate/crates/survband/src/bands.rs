//! Point-wise percentile confidence intervals and simultaneous confidence
//! bands (naive bootstrap, KS, proportional-KS) built from bootstrap
//! replicate curves around an ensemble center.
//!
//! All sup statistics are evaluated on the curves' common grid; curves are
//! step functions, so no refinement between grid points is attempted.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survest::SurvCurve;

/// Truncation range for the proportional-KS weight.
const WEIGHT_TRUNC: (f64, f64) = (0.01, 0.99);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandMethod {
    Naive,
    Ks,
    PropKs,
}

impl BandMethod {
    pub const ALL: [BandMethod; 3] = [BandMethod::Naive, BandMethod::Ks, BandMethod::PropKs];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "naive" => Ok(BandMethod::Naive),
            "ks" => Ok(BandMethod::Ks),
            "prop_ks" => Ok(BandMethod::PropKs),
            other => Err(Error::Contract(format!("unknown band method '{other}'"))),
        }
    }
}

impl fmt::Display for BandMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandMethod::Naive => write!(f, "naive"),
            BandMethod::Ks => write!(f, "ks"),
            BandMethod::PropKs => write!(f, "prop_ks"),
        }
    }
}

/// B bootstrap curves plus the ensemble center and the single-run base
/// curve, all on one grid.
pub struct BootstrapReplicates {
    pub curves: Vec<SurvCurve>,
    pub center: SurvCurve,
    pub base: SurvCurve,
}

impl BootstrapReplicates {
    pub fn new(curves: Vec<SurvCurve>, center: SurvCurve, base: SurvCurve) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Contract("need at least one bootstrap curve".into()));
        }
        if !curves.iter().all(|c| c.same_grid(&center)) || !base.same_grid(&center) {
            return Err(Error::Contract("replicate curves are on different grids".into()));
        }
        Ok(BootstrapReplicates { curves, center, base })
    }
}

/// A simultaneous band: `base` is guaranteed to lie between `lower` and
/// `upper` at every grid point.
#[derive(Debug, Clone)]
pub struct BandResult {
    pub lower: SurvCurve,
    pub upper: SurvCurve,
    pub method: BandMethod,
    pub level: f64,
    /// The bootstrap critical value d (or d^p for the proportional band).
    pub critical: f64,
}

impl BandResult {
    pub fn export_csv(&self, base: &SurvCurve, time_map: impl Fn(f64) -> f64) -> String {
        let mut out = String::from("t,lower,base,upper\n");
        for (k, &t) in self.lower.grid.points().iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                time_map(t),
                self.lower.values[k],
                base.values[k],
                self.upper.values[k]
            ));
        }
        out
    }
}

/// Empirical quantile: the smallest sorted value whose empirical CDF is at
/// least `p` (lower/type-1 convention).
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Contract("quantile of an empty sequence".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Contract(format!("quantile level {p} not in [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // smallest i (1-based) with i/n >= p; correct the float index both ways
    let mut i = (p * n as f64).ceil() as usize;
    i = i.clamp(1, n);
    while i > 1 && (i - 1) as f64 / n as f64 >= p {
        i -= 1;
    }
    while i < n && (i as f64 / n as f64) < p {
        i += 1;
    }
    Ok(sorted[i - 1])
}

/// Point-wise percentile interval for a scalar estimand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseCi {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Percentile interval `[base - q_{1-beta}, base - q_alpha]` where the
/// quantiles are of the bootstrap deviations from the ensemble center; the
/// confidence level is `1 - alpha - beta`.
pub fn pointwise_ci(
    estimates: &[f64],
    center: f64,
    base: f64,
    alpha: f64,
    beta: f64,
) -> Result<PointwiseCi> {
    if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
        return Err(Error::Contract(format!(
            "invalid tail levels alpha={alpha}, beta={beta}"
        )));
    }
    let deviations: Vec<f64> = estimates.iter().map(|e| e - center).collect();
    let lo_q = quantile(&deviations, 1.0 - beta)?;
    let hi_q = quantile(&deviations, alpha)?;
    Ok(PointwiseCi {
        lower: base - lo_q,
        upper: base - hi_q,
        level: 1.0 - alpha - beta,
    })
}

fn sup_abs_diff(a: &SurvCurve, b: &SurvCurve) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

/// Proportional-KS weight at one curve value: `sqrt(s*(1 - s*))` with `s*`
/// truncated to [0.01, 0.99].
fn prop_weight(s: f64) -> f64 {
    let s = s.clamp(WEIGHT_TRUNC.0, WEIGHT_TRUNC.1);
    (s * (1.0 - s)).sqrt()
}

fn clipped_band(
    reps: &BootstrapReplicates,
    method: BandMethod,
    level: f64,
    critical: f64,
    half_width: impl Fn(usize) -> f64,
) -> Result<BandResult> {
    let grid = reps.base.grid.clone();
    let lower: Vec<f64> = reps
        .base
        .values
        .iter()
        .enumerate()
        .map(|(k, &v)| (v - half_width(k)).max(0.0))
        .collect();
    let upper: Vec<f64> = reps
        .base
        .values
        .iter()
        .enumerate()
        .map(|(k, &v)| (v + half_width(k)).min(1.0))
        .collect();
    Ok(BandResult {
        lower: SurvCurve { grid: grid.clone(), values: lower },
        upper: SurvCurve { grid, values: upper },
        method,
        level,
        critical,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Contract(format!("alpha = {alpha} not in (0, 1)")));
    }
    Ok(())
}

/// Fixed-width KS band: the critical value is the `1 - alpha` quantile of
/// the sup deviations of the bootstrap curves from the ensemble center; the
/// band is `base -/+ d` clipped to [0, 1].
pub fn ks_band(reps: &BootstrapReplicates, alpha: f64) -> Result<BandResult> {
    check_alpha(alpha)?;
    let d: Vec<f64> = reps.curves.iter().map(|c| sup_abs_diff(c, &reps.center)).collect();
    let critical = quantile(&d, 1.0 - alpha)?;
    clipped_band(reps, BandMethod::Ks, 1.0 - alpha, critical, |_| critical)
}

/// Naive bootstrap band: identical to [`ks_band`] but with deviations
/// measured from the base curve instead of the ensemble center.
pub fn naive_band(reps: &BootstrapReplicates, alpha: f64) -> Result<BandResult> {
    check_alpha(alpha)?;
    let d: Vec<f64> = reps.curves.iter().map(|c| sup_abs_diff(c, &reps.base)).collect();
    let critical = quantile(&d, 1.0 - alpha)?;
    clipped_band(reps, BandMethod::Naive, 1.0 - alpha, critical, |_| critical)
}

/// Weighted (proportional-KS) band: each replicate's sup deviation is
/// divided by that replicate's own truncated weight curve, and the final
/// half-width is the base curve's weight times the critical value.
pub fn prop_ks_band(reps: &BootstrapReplicates, alpha: f64) -> Result<BandResult> {
    check_alpha(alpha)?;
    let d: Vec<f64> = reps
        .curves
        .iter()
        .map(|c| {
            c.values
                .iter()
                .zip(&reps.center.values)
                .map(|(s, m)| (s - m).abs() / prop_weight(*s))
                .fold(0.0, f64::max)
        })
        .collect();
    let critical = quantile(&d, 1.0 - alpha)?;
    let base_w: Vec<f64> = reps.base.values.iter().map(|&s| prop_weight(s)).collect();
    clipped_band(reps, BandMethod::PropKs, 1.0 - alpha, critical, |k| base_w[k] * critical)
}

pub fn band_by_method(reps: &BootstrapReplicates, method: BandMethod, alpha: f64) -> Result<BandResult> {
    match method {
        BandMethod::Naive => naive_band(reps, alpha),
        BandMethod::Ks => ks_band(reps, alpha),
        BandMethod::PropKs => prop_ks_band(reps, alpha),
    }
}

/// Half the grid-average width: `(1 / (2 |T|)) * sum_t (U - L)`.
pub fn band_width(band: &BandResult) -> f64 {
    let n = band.lower.values.len() as f64;
    band.upper
        .values
        .iter()
        .zip(&band.lower.values)
        .map(|(u, l)| u - l)
        .sum::<f64>()
        / (2.0 * n)
}

/// A band covers a curve iff `lower <= curve <= upper` at every grid point
/// (closed interval at both bounds).
pub fn covers(band: &BandResult, curve: &SurvCurve) -> bool {
    band.lower
        .values
        .iter()
        .zip(&band.upper.values)
        .zip(&curve.values)
        .all(|((l, u), s)| *l <= *s && *s <= *u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survest::TimeGrid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::new((1..=n).map(|i| i as f64).collect()).unwrap())
    }

    fn flat(g: &Arc<TimeGrid>, v: f64) -> SurvCurve {
        SurvCurve::new(g.clone(), vec![v; g.len()]).unwrap()
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap(), 3.0);
        assert_eq!(quantile(&[7.5; 9], 0.33).unwrap(), 7.5);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 1.0).unwrap(), 3.0);
        assert_eq!(quantile(&[0.1, 0.2, 0.3, 0.4, 0.5], 0.8).unwrap(), 0.4);
        assert!(quantile(&[], 0.5).is_err());
    }

    #[test]
    fn quantile_matches_scan_oracle() {
        // sort-based oracle: scan for the smallest value with ECDF >= p
        fn oracle(values: &[f64], p: f64) -> f64 {
            let mut s = values.to_vec();
            s.sort_by(f64::total_cmp);
            let n = s.len();
            for (i, v) in s.iter().enumerate() {
                if (i + 1) as f64 / n as f64 >= p {
                    return *v;
                }
            }
            *s.last().unwrap()
        }
        let mut rng = crate::rng::stream(31, &[0]);
        use rand::Rng;
        for _ in 0..1000 {
            let n = rng.random_range(1..40);
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let p: f64 = rng.random_range(0.0..=1.0);
            assert_eq!(quantile(&values, p).unwrap(), oracle(&values, p));
        }
    }

    #[test]
    fn pointwise_ci_degenerate_and_symmetric() {
        let ci = pointwise_ci(&[2.0; 40], 2.0, 0.7, 0.05, 0.05).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.7, 0.7));
        assert_abs_diff_eq!(ci.level, 0.9, epsilon = 1e-12);

        // symmetric deviations +-c around the center
        let c = 0.3;
        let estimates: Vec<f64> = (0..50)
            .map(|i| if i % 2 == 0 { 1.0 + c } else { 1.0 - c })
            .collect();
        let ci = pointwise_ci(&estimates, 1.0, 0.5, 0.1, 0.1).unwrap();
        assert_abs_diff_eq!(ci.lower, 0.5 - c, epsilon = 1e-12);
        assert_abs_diff_eq!(ci.upper, 0.5 + c, epsilon = 1e-12);

        assert!(pointwise_ci(&estimates, 1.0, 0.5, 0.6, 0.5).is_err());
    }

    #[test]
    fn naive_centering_widens_intervals_under_optimizer_noise() {
        // Scalar analogue of the variance decomposition: estimates carry
        // data noise plus independent optimizer noise; centering the
        // deviations at the noisy base instead of the noise-free center
        // widens the average interval.
        use rand::Rng;
        let mut rng = crate::rng::stream(77, &[0]);
        let (v1, v2) = (0.5, 0.4);
        let mut widen = 0usize;
        let trials = 400;
        for _ in 0..trials {
            let z2_base: f64 = rng.random_range(-1.0..1.0) * (3.0 * v2).sqrt();
            let center = 0.0; // ensemble average of optimizer noise ~ 0
            let base = z2_base;
            let estimates: Vec<f64> = (0..60)
                .map(|_| {
                    let d: f64 = rng.random_range(-1.0..1.0) * (3.0 * v1).sqrt();
                    let o: f64 = rng.random_range(-1.0..1.0) * (3.0 * v2).sqrt();
                    d + o
                })
                .collect();
            let ens = pointwise_ci(&estimates, center, base, 0.05, 0.05).unwrap();
            let naive = pointwise_ci(&estimates, base, base, 0.05, 0.05).unwrap();
            // same draw set; the naive version recenters at the base
            if naive.upper - naive.lower >= ens.upper - ens.lower {
                widen += 1;
            }
        }
        assert!(widen as f64 / trials as f64 > 0.5, "widened in {widen}/{trials}");
    }

    #[test]
    fn ks_band_quantile_rule() {
        let g = grid(5);
        let center = flat(&g, 0.5);
        let base = flat(&g, 0.5);
        // curves at sup distances 0.1 .. 0.5 from the center
        let curves: Vec<SurvCurve> = (1..=5)
            .map(|i| flat(&g, 0.5 - 0.1 * i as f64))
            .collect();
        let reps = BootstrapReplicates::new(curves, center, base).unwrap();
        let band = ks_band(&reps, 0.2).unwrap();
        assert_abs_diff_eq!(band.critical, 0.4, epsilon = 1e-12);
        for k in 0..5 {
            assert_abs_diff_eq!(band.lower.values[k], 0.1, epsilon = 1e-12);
            assert_abs_diff_eq!(band.upper.values[k], 0.9, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_deviation_bands_collapse_to_base() {
        let g = grid(4);
        let center = flat(&g, 0.6);
        let base = flat(&g, 0.55);
        let curves = vec![flat(&g, 0.6); 8];
        let reps = BootstrapReplicates::new(curves, center, base).unwrap();
        for method in BandMethod::ALL {
            let band = band_by_method(&reps, method, 0.1).unwrap();
            if method == BandMethod::Naive {
                // deviations measured from base (0.05), not zero
                assert_abs_diff_eq!(band.critical, 0.05, epsilon = 1e-12);
            } else {
                assert_eq!(band.critical, 0.0);
                assert_eq!(band.lower.values, reps.base.values);
                assert_eq!(band.upper.values, reps.base.values);
            }
        }
    }

    #[test]
    fn upper_clipping() {
        let g = grid(3);
        let base = flat(&g, 0.95);
        let center = flat(&g, 0.95);
        let curves = vec![flat(&g, 0.85)]; // d = 0.1
        let reps = BootstrapReplicates::new(curves, center, base).unwrap();
        let band = ks_band(&reps, 0.5).unwrap();
        assert_abs_diff_eq!(band.critical, 0.1, epsilon = 1e-12);
        for k in 0..3 {
            assert_abs_diff_eq!(band.upper.values[k], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(band.lower.values[k], 0.85, epsilon = 1e-12);
        }
    }

    #[test]
    fn prop_weight_values() {
        assert_abs_diff_eq!(prop_weight(0.5), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(prop_weight(0.999), (0.99f64 * 0.01).sqrt(), epsilon = 1e-6);
        assert_abs_diff_eq!(prop_weight(0.999), 0.09950, epsilon = 1e-5);
        assert_abs_diff_eq!(prop_weight(0.0001), (0.01f64 * 0.99).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn prop_ks_uses_replicate_weights_and_base_weight() {
        let g = grid(2);
        let base = SurvCurve::new(g.clone(), vec![0.9, 0.4]).unwrap();
        let center = SurvCurve::new(g.clone(), vec![0.8, 0.5]).unwrap();
        let rep = SurvCurve::new(g.clone(), vec![0.7, 0.3]).unwrap();
        let reps = BootstrapReplicates::new(vec![rep], center, base).unwrap();
        let band = prop_ks_band(&reps, 0.5).unwrap();
        // d^p = max(|0.7-0.8|/w(0.7), |0.3-0.5|/w(0.3))
        let expect = (0.1 / prop_weight(0.7)).max(0.2 / prop_weight(0.3));
        assert_abs_diff_eq!(band.critical, expect, epsilon = 1e-12);
        // half-width at grid point k is w(base_k) * d^p
        assert_abs_diff_eq!(
            band.upper.values[1] - band.lower.values[1],
            2.0 * prop_weight(0.4) * expect,
            epsilon = 1e-12
        );
    }

    #[test]
    fn naive_equals_ks_when_base_is_center() {
        let g = grid(6);
        let mut rng = crate::rng::stream(8, &[0]);
        use rand::Rng;
        let center = SurvCurve::new(
            g.clone(),
            (0..6).map(|k| 0.95 - 0.1 * k as f64).collect(),
        )
        .unwrap();
        let curves: Vec<SurvCurve> = (0..20)
            .map(|_| {
                let off: f64 = rng.random_range(-0.05..0.05);
                SurvCurve::new(
                    g.clone(),
                    center.values.iter().map(|v| (v + off).clamp(0.0, 1.0)).collect(),
                )
                .unwrap()
            })
            .collect();
        let reps = BootstrapReplicates::new(curves, center.clone(), center.clone()).unwrap();
        let a = naive_band(&reps, 0.1).unwrap();
        let b = ks_band(&reps, 0.1).unwrap();
        assert_eq!(a.critical, b.critical);
        assert_eq!(a.lower.values, b.lower.values);
        assert_eq!(a.upper.values, b.upper.values);
    }

    #[test]
    fn single_replicate_naive_band_width() {
        let g = grid(3);
        let base = flat(&g, 0.5);
        let center = flat(&g, 0.5);
        let curves = vec![flat(&g, 0.38)];
        let reps = BootstrapReplicates::new(curves, center, base).unwrap();
        let band = naive_band(&reps, 0.25).unwrap();
        assert_abs_diff_eq!(band.critical, 0.12, epsilon = 1e-12);
        assert_abs_diff_eq!(band_width(&band), 0.12, epsilon = 1e-12);
    }

    #[test]
    fn band_width_examples() {
        let g = grid(10);
        let band = BandResult {
            lower: flat(&g, 0.4),
            upper: flat(&g, 0.6),
            method: BandMethod::Ks,
            level: 0.9,
            critical: 0.1,
        };
        assert_abs_diff_eq!(band_width(&band), 0.1, epsilon = 1e-12);
        let zero = BandResult {
            lower: flat(&g, 0.4),
            upper: flat(&g, 0.4),
            method: BandMethod::Ks,
            level: 0.9,
            critical: 0.0,
        };
        assert_eq!(band_width(&zero), 0.0);
    }

    #[test]
    fn coverage_is_closed_at_the_boundary() {
        let g = grid(3);
        let band = BandResult {
            lower: SurvCurve::new(g.clone(), vec![0.5, 0.4, 0.3]).unwrap(),
            upper: SurvCurve::new(g.clone(), vec![0.9, 0.8, 0.7]).unwrap(),
            method: BandMethod::Ks,
            level: 0.9,
            critical: 0.2,
        };
        let on_lower = SurvCurve::new(g.clone(), vec![0.6, 0.5, 0.3]).unwrap();
        assert!(covers(&band, &on_lower));
        let below = SurvCurve::new(g.clone(), vec![0.6, 0.5, 0.29]).unwrap();
        assert!(!covers(&band, &below));
    }

    /// Synthetic replicate sets with injected optimizer noise, mirroring the
    /// variance decomposition: curve = truth + data noise + optimizer noise.
    fn noisy_reps(
        rng: &mut crate::rng::SeedStream,
        g: &Arc<TimeGrid>,
        b: usize,
        sd_data: f64,
        sd_opt: f64,
    ) -> (BootstrapReplicates, SurvCurve) {
        use rand_distr::{Distribution, Normal};
        let truth: Vec<f64> = g.points().iter().map(|&t| (-0.08 * t).exp()).collect();
        let n_data = Normal::new(0.0, sd_data).unwrap();
        let n_opt = Normal::new(0.0, sd_opt).unwrap();
        let data_shift: Vec<f64> = truth.iter().map(|_| n_data.sample(rng)).collect();
        let perturb = |base: &[f64], d1: &[f64], rng: &mut crate::rng::SeedStream| {
            let vals: Vec<f64> = base
                .iter()
                .zip(d1)
                .map(|(t, d)| (t + d + n_opt.sample(rng)).clamp(0.0, 1.0))
                .collect();
            // sort descending to keep the curve monotone without changing
            // its sup distance structure materially
            let mut v = vals;
            v.sort_by(|a, b| b.total_cmp(a));
            SurvCurve::new(g.clone(), v).unwrap()
        };
        let base = perturb(&truth, &data_shift, rng);
        // ensemble center: average of many runs on the same data
        let m = 40;
        let mut center_vals = vec![0.0; g.len()];
        for _ in 0..m {
            let c = perturb(&truth, &data_shift, rng);
            for (acc, v) in center_vals.iter_mut().zip(&c.values) {
                *acc += v / m as f64;
            }
        }
        center_vals.sort_by(|a, b| b.total_cmp(a));
        let center = SurvCurve::new(g.clone(), center_vals).unwrap();
        let curves: Vec<SurvCurve> = (0..b)
            .map(|_| {
                let boot_shift: Vec<f64> = data_shift
                    .iter()
                    .map(|d| d + n_data.sample(rng))
                    .collect();
                perturb(&truth, &boot_shift, rng)
            })
            .collect();
        let truth_curve = SurvCurve::new(g.clone(), truth).unwrap();
        (BootstrapReplicates::new(curves, center, base).unwrap(), truth_curve)
    }

    #[test]
    fn naive_critical_exceeds_ks_under_optimizer_noise() {
        let g = grid(25);
        let mut rng = crate::rng::stream(42, &[9]);
        let mut naive_sum = 0.0;
        let mut ks_sum = 0.0;
        let trials = 60;
        for _ in 0..trials {
            let (reps, _) = noisy_reps(&mut rng, &g, 60, 0.02, 0.02);
            naive_sum += naive_band(&reps, 0.1).unwrap().critical;
            ks_sum += ks_band(&reps, 0.1).unwrap().critical;
        }
        assert!(
            naive_sum > ks_sum,
            "mean naive critical {} vs ks {}",
            naive_sum / trials as f64,
            ks_sum / trials as f64
        );
    }

    #[test]
    fn ks_width_below_naive_width_under_optimizer_noise() {
        let g = grid(25);
        let mut rng = crate::rng::stream(43, &[9]);
        let mut naive_w = 0.0;
        let mut ks_w = 0.0;
        for _ in 0..60 {
            let (reps, _) = noisy_reps(&mut rng, &g, 60, 0.015, 0.03);
            naive_w += band_width(&naive_band(&reps, 0.1).unwrap());
            ks_w += band_width(&ks_band(&reps, 0.1).unwrap());
        }
        assert!(ks_w < naive_w, "ks width {ks_w} vs naive {naive_w}");
    }

    proptest! {
        #[test]
        fn band_invariants_hold(seed in 0u64..500, alpha in 0.02f64..0.5) {
            let g = grid(12);
            let mut rng = crate::rng::stream(seed, &[3]);
            let (reps, _) = noisy_reps(&mut rng, &g, 25, 0.03, 0.02);
            for method in BandMethod::ALL {
                let band = band_by_method(&reps, method, alpha).unwrap();
                for k in 0..g.len() {
                    prop_assert!(band.lower.values[k] >= 0.0);
                    prop_assert!(band.upper.values[k] <= 1.0);
                    prop_assert!(band.lower.values[k] <= reps.base.values[k]);
                    prop_assert!(reps.base.values[k] <= band.upper.values[k]);
                }
                // nesting in the confidence level
                let wider = band_by_method(&reps, method, alpha / 2.0).unwrap();
                prop_assert!(wider.critical >= band.critical - 1e-15);
                for k in 0..g.len() {
                    prop_assert!(wider.lower.values[k] <= band.lower.values[k] + 1e-12);
                    prop_assert!(wider.upper.values[k] >= band.upper.values[k] - 1e-12);
                }
            }
            // KS band has constant width 2d wherever neither side clips
            let ks = ks_band(&reps, alpha).unwrap();
            for k in 0..g.len() {
                let lo = ks.lower.values[k];
                let hi = ks.upper.values[k];
                if lo > 0.0 && hi < 1.0 {
                    prop_assert!((hi - lo - 2.0 * ks.critical).abs() < 1e-12);
                }
            }
        }
    }
}
