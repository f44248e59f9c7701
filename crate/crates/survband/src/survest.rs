//! Breslow baseline cumulative hazard, conditional survival curves on a
//! common time grid, and the ensemble log-risk estimator.
//!
//! All operations are pure. Curves produced by this module are step
//! functions: the cumulative hazard jumps at observed event times and is
//! constant in between, so a curve can be evaluated on any grid, including
//! grid points beyond the last observed event time (the curve is flat
//! there). The caller decides the time scale; fit data and grids only have
//! to share it.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Log-risk values are clamped to this range before exponentiation in the
/// Breslow sums; outside it the curve is 0/1 to machine precision anyway.
pub const LOG_RISK_CLAMP: f64 = 30.0;

fn clamp_exp(g: f64) -> f64 {
    g.clamp(-LOG_RISK_CLAMP, LOG_RISK_CLAMP).exp()
}

/// A strictly increasing evaluation grid with upper end `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    tau: f64,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Contract("time grid must be nonempty".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Contract("time grid contains non-finite points".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract("time grid must be strictly increasing".into()));
        }
        let tau = *points.last().unwrap();
        Ok(TimeGrid { points, tau })
    }

    /// Uniform grid `start, start+step, ..., <= stop` (inclusive up to
    /// floating-point granularity).
    pub fn uniform(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || stop < start {
            return Err(Error::Contract("invalid uniform grid".into()));
        }
        let k = ((stop - start) / step + 1e-9).floor() as usize;
        TimeGrid::new((0..=k).map(|i| start + i as f64 * step).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Apply a strictly increasing map to every grid point.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<TimeGrid> {
        TimeGrid::new(self.points.iter().map(|&t| f(t)).collect())
    }
}

/// A survival function sampled on a grid; values in [0, 1], non-increasing.
#[derive(Debug, Clone)]
pub struct SurvCurve {
    pub grid: Arc<TimeGrid>,
    pub values: Vec<f64>,
}

impl SurvCurve {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract("curve length does not match grid".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Contract("curve values outside [0, 1]".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            return Err(Error::Contract("curve values must be non-increasing".into()));
        }
        Ok(SurvCurve { grid, values })
    }

    pub fn same_grid(&self, other: &SurvCurve) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }
}

/// Pointwise arithmetic mean of curves sharing one grid. This is the
/// curve-space ensemble; the default pipeline instead plugs the ensemble
/// log-risk into the Breslow estimator, but both are available.
pub fn mean_curves(curves: &[SurvCurve]) -> Result<SurvCurve> {
    let first = curves.first().ok_or_else(|| Error::Contract("empty curve list".into()))?;
    if !curves.iter().all(|c| c.same_grid(first)) {
        return Err(Error::Contract("curves are on different grids".into()));
    }
    let m = curves.len() as f64;
    let values = (0..first.values.len())
        .map(|k| curves.iter().map(|c| c.values[k]).sum::<f64>() / m)
        .collect();
    SurvCurve::new(first.grid.clone(), values)
}

/// Log relative risk g(t, x). Implementations must be safe for concurrent
/// evaluation.
pub trait RiskFunction: Sync {
    fn eval(&self, t: f64, x: &[f64]) -> f64;

    /// Evaluate on the cross product `times x rows(xs)`, returning a
    /// `[times.len(), xs.nrows()]` matrix. The default loops; batched
    /// implementations override this.
    fn eval_matrix(&self, times: &[f64], xs: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((times.len(), xs.nrows()));
        for (i, &t) in times.iter().enumerate() {
            for (j, row) in xs.rows().into_iter().enumerate() {
                out[[i, j]] = self.eval(t, row.as_slice().unwrap());
            }
        }
        out
    }
}

/// Constant log risk; `ZERO_RISK` reduces Breslow to Nelson-Aalen.
#[derive(Debug, Clone, Copy)]
pub struct ConstRisk(pub f64);

pub const ZERO_RISK: ConstRisk = ConstRisk(0.0);

impl RiskFunction for ConstRisk {
    fn eval(&self, _t: f64, _x: &[f64]) -> f64 {
        self.0
    }
}

impl<F: Fn(f64, &[f64]) -> f64 + Sync> RiskFunction for F {
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self(t, x)
    }
}

/// Pointwise arithmetic mean of M member log risks.
pub struct EnsembleG<R: RiskFunction> {
    members: Vec<R>,
}

/// Build the M-member ensemble log risk.
pub fn ensemble_g<R: RiskFunction>(members: Vec<R>) -> Result<EnsembleG<R>> {
    if members.is_empty() {
        return Err(Error::Contract("ensemble needs at least one member".into()));
    }
    Ok(EnsembleG { members })
}

impl<R: RiskFunction> EnsembleG<R> {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[R] {
        &self.members
    }
}

impl<R: RiskFunction> RiskFunction for EnsembleG<R> {
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.members.iter().map(|m| m.eval(t, x)).sum::<f64>() / self.members.len() as f64
    }

    fn eval_matrix(&self, times: &[f64], xs: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut acc = self.members[0].eval_matrix(times, xs);
        for m in &self.members[1..] {
            acc += &m.eval_matrix(times, xs);
        }
        acc /= self.members.len() as f64;
        acc
    }
}

/// Step-function estimate of the cumulative baseline hazard: one increment
/// per distinct observed event time, tied events sharing one denominator.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BreslowBaseline {
    pub event_times: Vec<f64>,
    pub increments: Vec<f64>,
}

impl BreslowBaseline {
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.increments
            .iter()
            .map(|&d| {
                acc += d;
                acc
            })
            .collect()
    }

    pub fn last_event_time(&self) -> f64 {
        *self.event_times.last().unwrap()
    }
}

/// Fit the baseline over all records of `ds`.
pub fn breslow_fit(ds: &Dataset, g: &impl RiskFunction) -> Result<BreslowBaseline> {
    let rows: Vec<usize> = (0..ds.len()).collect();
    breslow_fit_rows(ds, &rows, g)
}

/// Fit the baseline over the given rows (a multiset: repeated rows count
/// repeatedly, as in a bootstrap resample).
///
/// For each distinct event time `t_i` with `d_i` events, the increment is
/// `d_i / sum_{j: t_j >= t_i} exp(g(t_i, x_j))`.
pub fn breslow_fit_rows(ds: &Dataset, rows: &[usize], g: &impl RiskFunction) -> Result<BreslowBaseline> {
    if rows.is_empty() {
        return Err(Error::Contract("empty fitting data".into()));
    }
    // Sort row positions by observed time ascending.
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        ds.records[rows[a]]
            .time
            .total_cmp(&ds.records[rows[b]].time)
    });
    let times: Vec<f64> = order.iter().map(|&p| ds.records[rows[p]].time).collect();
    let events: Vec<bool> = order.iter().map(|&p| ds.records[rows[p]].event).collect();

    // Distinct event times (ascending) and their multiplicities.
    let mut event_times: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        if events[i] {
            if event_times.last() == Some(&t) {
                *counts.last_mut().unwrap() += 1.0;
            } else {
                event_times.push(t);
                counts.push(1.0);
            }
        }
    }
    if event_times.is_empty() {
        return Err(Error::Contract("fitting data contains no events".into()));
    }

    // Covariate matrix in time order.
    let d = ds.dim();
    let mut xs = Array2::zeros((rows.len(), d));
    for (k, &p) in order.iter().enumerate() {
        for (j, &v) in ds.records[rows[p]].x.iter().enumerate() {
            xs[[k, j]] = v;
        }
    }

    // Risk-set start position for each distinct event time (first sorted row
    // with time >= t_i); non-decreasing, so a single forward sweep suffices.
    let n = rows.len();
    let mut starts = Vec::with_capacity(event_times.len());
    let mut pos = 0;
    for &t in &event_times {
        while pos < n && times[pos] < t {
            pos += 1;
        }
        starts.push(pos);
    }

    // Evaluate g in chunks of event times over the union risk suffix of the
    // chunk, which avoids most of the sub-risk-set entries.
    const CHUNK: usize = 64;
    let mut increments = vec![0.0; event_times.len()];
    let mut i = 0;
    while i < event_times.len() {
        let hi = (i + CHUNK).min(event_times.len());
        let suffix_start = starts[i];
        let gmat = g.eval_matrix(
            &event_times[i..hi],
            xs.slice(ndarray::s![suffix_start.., ..]),
        );
        for (r, k) in (i..hi).enumerate() {
            let from = starts[k] - suffix_start;
            let denom: f64 = gmat
                .row(r)
                .iter()
                .skip(from)
                .map(|&v| clamp_exp(v))
                .sum();
            increments[k] = counts[k] / denom;
        }
        i = hi;
    }

    Ok(BreslowBaseline { event_times, increments })
}

/// Conditional survival curve `exp(-sum_{t_i <= t} dH0(t_i) exp(g(t_i, x)))`
/// evaluated on `grid`; value 1 before the first event time and flat beyond
/// the last one.
pub fn survival_curve(
    baseline: &BreslowBaseline,
    g: &impl RiskFunction,
    x: &[f64],
    grid: &Arc<TimeGrid>,
) -> Result<SurvCurve> {
    let xs = Array2::from_shape_vec((1, x.len()), x.to_vec())
        .map_err(|e| Error::Contract(e.to_string()))?;
    let gvals = g.eval_matrix(&baseline.event_times, xs.view());
    let gcol = gvals.index_axis(Axis(1), 0);

    // Cumulative hazard at each event time for this x.
    let mut cum = Vec::with_capacity(baseline.event_times.len());
    let mut acc = 0.0;
    for (inc, gv) in baseline.increments.iter().zip(gcol.iter()) {
        acc += inc * clamp_exp(*gv);
        cum.push(acc);
    }

    let mut values = Vec::with_capacity(grid.len());
    let mut j = 0usize; // number of event times <= current grid point
    for &t in grid.points() {
        while j < baseline.event_times.len() && baseline.event_times[j] <= t {
            j += 1;
        }
        let h = if j == 0 { 0.0 } else { cum[j - 1] };
        values.push((-h).exp());
    }
    SurvCurve::new(grid.clone(), values)
}

/// Curve export: one `(t, S)` row per grid point.
pub fn curve_to_csv(curve: &SurvCurve, time_map: impl Fn(f64) -> f64) -> String {
    let mut out = String::from("t,S\n");
    for (t, v) in curve.grid.points().iter().zip(&curve.values) {
        out.push_str(&format!("{},{}\n", time_map(*t), v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SurvRecord;
    use approx::assert_abs_diff_eq;

    fn ds_from(times: &[f64], events: &[bool]) -> Dataset {
        let records = times
            .iter()
            .zip(events)
            .map(|(&t, &e)| SurvRecord { x: vec![t * 0.5 - 1.0], time: t, event: e })
            .collect();
        Dataset::new(records, vec!["x1".into()]).unwrap()
    }

    /// Independent Nelson-Aalen estimator over (time, event) pairs.
    fn nelson_aalen(times: &[f64], events: &[bool]) -> (Vec<f64>, Vec<f64>) {
        let mut distinct: Vec<f64> = times
            .iter()
            .zip(events)
            .filter(|(_, &e)| e)
            .map(|(&t, _)| t)
            .collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let mut incs = Vec::new();
        for &t in &distinct {
            let d = times.iter().zip(events).filter(|(&tj, &ej)| tj == t && ej).count();
            let at_risk = times.iter().filter(|&&tj| tj >= t).count();
            incs.push(d as f64 / at_risk as f64);
        }
        (distinct, incs)
    }

    #[test]
    fn breslow_hand_example() {
        let ds = ds_from(&[1.0, 2.0, 3.0], &[true, true, true]);
        let b = breslow_fit(&ds, &ZERO_RISK).unwrap();
        assert_eq!(b.event_times, vec![1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(b.increments[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.increments[1], 1.0 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.increments[2], 1.0, epsilon = 1e-15);
        let cum = b.cumulative();
        assert_abs_diff_eq!(cum[2], 11.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn breslow_equals_nelson_aalen_exhaustive() {
        // Every event pattern with >= 1 event for n <= 8, on distinct and on
        // tied time vectors.
        for n in 1..=8usize {
            let distinct: Vec<f64> = (1..=n).map(|i| i as f64).collect();
            let tied: Vec<f64> = (1..=n).map(|i| ((i + 1) / 2) as f64).collect();
            for times in [&distinct, &tied] {
                for mask in 1..(1u32 << n) {
                    let events: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                    let ds = ds_from(times, &events);
                    let b = breslow_fit(&ds, &ZERO_RISK).unwrap();
                    let (na_t, na_i) = nelson_aalen(times, &events);
                    assert_eq!(b.event_times, na_t);
                    for (a, e) in b.increments.iter().zip(&na_i) {
                        assert!((a - e).abs() < 1e-12, "n={n} mask={mask}: {a} vs {e}");
                    }
                }
            }
        }
    }

    #[test]
    fn breslow_no_events_is_error() {
        // Bypass Dataset validation with a manual record list.
        let ds = Dataset {
            records: vec![SurvRecord { x: vec![0.0], time: 1.0, event: true }],
            feature_names: vec!["x1".into()],
            standardization: None,
        };
        let rows = [0usize; 0];
        assert!(breslow_fit_rows(&ds, &rows, &ZERO_RISK).is_err());
    }

    #[test]
    fn constant_g_shifts_increments_but_not_curve() {
        let ds = ds_from(&[1.0, 2.0, 4.0, 5.0], &[true, false, true, true]);
        let c = 0.7;
        let b0 = breslow_fit(&ds, &ZERO_RISK).unwrap();
        let bc = breslow_fit(&ds, &ConstRisk(c)).unwrap();
        for (i0, ic) in b0.increments.iter().zip(&bc.increments) {
            assert_abs_diff_eq!(ic * c.exp(), *i0, epsilon = 1e-12);
        }
        let grid = Arc::new(TimeGrid::new(vec![1.0, 2.0, 3.0, 4.5, 5.0]).unwrap());
        let s0 = survival_curve(&b0, &ZERO_RISK, &[0.3], &grid).unwrap();
        let sc = survival_curve(&bc, &ConstRisk(c), &[0.3], &grid).unwrap();
        for (a, b) in s0.values.iter().zip(&sc.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn survival_curve_hand_example() {
        let ds = ds_from(&[1.0, 2.0, 3.0], &[true, true, true]);
        let b = breslow_fit(&ds, &ZERO_RISK).unwrap();
        let grid = Arc::new(TimeGrid::new(vec![0.5, 1.0, 2.0, 3.0]).unwrap());
        let s = survival_curve(&b, &ZERO_RISK, &[0.0], &grid).unwrap();
        assert_abs_diff_eq!(s.values[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.values[1], (-1.0f64 / 3.0).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.values[2], (-5.0f64 / 6.0).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.values[3], (-11.0f64 / 6.0).exp(), epsilon = 1e-12);
    }

    #[test]
    fn survival_curve_is_flat_beyond_last_event() {
        let ds = ds_from(&[1.0, 2.0], &[true, true]);
        let b = breslow_fit(&ds, &ZERO_RISK).unwrap();
        let grid = Arc::new(TimeGrid::new(vec![2.0, 5.0, 50.0]).unwrap());
        let s = survival_curve(&b, &ZERO_RISK, &[0.0], &grid).unwrap();
        assert_eq!(s.values[0], s.values[1]);
        assert_eq!(s.values[1], s.values[2]);
    }

    #[test]
    fn survival_curve_invariant_to_record_order() {
        let ds = ds_from(&[3.0, 1.0, 4.0, 2.0], &[true, true, false, true]);
        let ds_sorted = ds_from(&[1.0, 2.0, 3.0, 4.0], &[true, true, true, false]);
        let g = |t: f64, x: &[f64]| 0.3 * x[0] + 0.01 * t;
        let grid = Arc::new(TimeGrid::uniform(0.5, 4.0, 0.5).unwrap());
        let a = survival_curve(&breslow_fit(&ds, &g).unwrap(), &g, &[0.2], &grid).unwrap();
        let b = survival_curve(&breslow_fit(&ds_sorted, &g).unwrap(), &g, &[0.2], &grid).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn breslow_chunking_matches_direct_evaluation() {
        // More than one chunk of event times, nontrivial g.
        let n = 180;
        let times: Vec<f64> = (0..n).map(|i| 0.5 + (i % 97) as f64 * 0.37).collect();
        let events: Vec<bool> = (0..n).map(|i| i % 3 != 0).collect();
        let ds = ds_from(&times, &events);
        let g = |t: f64, x: &[f64]| (0.4 * x[0] - 0.02 * t).sin() * 0.8;
        let fit = breslow_fit(&ds, &g).unwrap();
        // direct reference computation
        for (k, &t_i) in fit.event_times.iter().enumerate() {
            let d = times.iter().zip(&events).filter(|(&tj, &ej)| tj == t_i && ej).count() as f64;
            let denom: f64 = ds
                .records
                .iter()
                .filter(|r| r.time >= t_i)
                .map(|r| g(t_i, &r.x).exp())
                .sum();
            assert_abs_diff_eq!(fit.increments[k], d / denom, epsilon = 1e-12);
        }
    }

    #[test]
    fn ensemble_mean_and_bounds() {
        let members: Vec<ConstRisk> = vec![ConstRisk(1.0), ConstRisk(2.0), ConstRisk(3.0)];
        let ens = ensemble_g(members).unwrap();
        assert_abs_diff_eq!(ens.eval(0.3, &[1.0]), 2.0, epsilon = 1e-15);
        assert_eq!(ens.size(), 3);

        let single = ensemble_g(vec![ConstRisk(0.5)]).unwrap();
        assert_abs_diff_eq!(single.eval(9.0, &[0.0]), 0.5, epsilon = 1e-15);

        assert!(ensemble_g(Vec::<ConstRisk>::new()).is_err());

        // mean stays within member bounds pointwise
        let fns: Vec<Box<dyn Fn(f64, &[f64]) -> f64 + Sync>> = vec![
            Box::new(|t: f64, x: &[f64]| t + x[0]),
            Box::new(|t: f64, x: &[f64]| t * x[0]),
        ];
        let vals: Vec<f64> = fns.iter().map(|f| f(0.7, &[2.0])).collect();
        let ens2 = ensemble_g(fns).unwrap();
        let v = ens2.eval(0.7, &[2.0]);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= lo && v <= hi);
    }

    #[test]
    fn mean_curves_identity_and_average() {
        let grid = Arc::new(TimeGrid::new(vec![1.0, 2.0]).unwrap());
        let a = SurvCurve::new(grid.clone(), vec![0.9, 0.5]).unwrap();
        let b = SurvCurve::new(grid.clone(), vec![0.7, 0.3]).unwrap();
        let m = mean_curves(&[a.clone(), b]).unwrap();
        assert_abs_diff_eq!(m.values[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(m.values[1], 0.4, epsilon = 1e-15);
        let one = mean_curves(&[a.clone()]).unwrap();
        assert_eq!(one.values, a.values);
    }

    #[test]
    fn grid_contracts() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![2.0, 1.0]).is_err());
        let g = TimeGrid::uniform(0.1, 27.0, 0.1).unwrap();
        assert_eq!(g.len(), 270);
        assert_abs_diff_eq!(g.points()[0], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(g.tau(), 27.0, epsilon = 1e-9);
    }

    #[test]
    fn curve_contracts() {
        let grid = Arc::new(TimeGrid::new(vec![1.0, 2.0]).unwrap());
        assert!(SurvCurve::new(grid.clone(), vec![0.5]).is_err());
        assert!(SurvCurve::new(grid.clone(), vec![0.5, 0.7]).is_err());
        assert!(SurvCurve::new(grid.clone(), vec![1.2, 0.7]).is_err());
        assert!(SurvCurve::new(grid, vec![0.9, 0.7]).is_ok());
    }
}
