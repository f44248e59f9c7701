//! Case-control-sampled partial-likelihood training.
//!
//! Each event i is paired with `n_controls` subjects drawn uniformly with
//! replacement from its risk set {j : t_j >= t_i, j != i}; the loss is the
//! mean over events of `log(1 + sum_j exp{g(t_i, x_j) - g(t_i, x_i)})`,
//! computed with a log-sum-exp formulation. Controls are resampled every
//! epoch on the training rows; the validation batch is drawn once per run
//! so early stopping compares like with like.

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::dataset::{Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::rng::SeedStream;

use super::net::HazardNet;
use super::{EarlyStopper, NetConfig, TrainReport};

/// Case/control row positions for every event in a row set. Positions index
/// into the row slice the pairs were drawn from, so bootstrap multisets work
/// transparently (duplicated rows count as distinct at-risk subjects).
#[derive(Debug, Clone)]
pub struct CaseControlPairs {
    pub cases: Vec<usize>,
    pub controls: Vec<Vec<usize>>,
    /// Events whose risk set beyond themselves was empty.
    pub without_controls: usize,
}

/// Draw case-control pairs over `(times, events)`.
pub fn draw_case_controls(
    times: &[f64],
    events: &[bool],
    n_controls: usize,
    rng: &mut SeedStream,
) -> CaseControlPairs {
    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    // rank of each position in the sorted order
    let mut rank = vec![0usize; n];
    for (r, &p) in order.iter().enumerate() {
        rank[p] = r;
    }
    let sorted_times: Vec<f64> = order.iter().map(|&p| times[p]).collect();

    let mut cases = Vec::new();
    let mut controls = Vec::new();
    let mut without = 0;
    for p in 0..n {
        if !events[p] {
            continue;
        }
        // first sorted index with time >= t_p
        let first = sorted_times.partition_point(|&t| t < times[p]);
        let len = n - first;
        cases.push(p);
        if len <= 1 {
            without += 1;
            controls.push(Vec::new());
            continue;
        }
        let own = rank[p] - first;
        let picks = (0..n_controls)
            .map(|_| {
                let k = rng.random_range(0..len - 1);
                let k = if k >= own { k + 1 } else { k };
                order[first + k]
            })
            .collect();
        controls.push(picks);
    }
    CaseControlPairs { cases, controls, without_controls: without }
}

/// Stacked network inputs for a list of events: for each event the case row
/// comes first, followed by its control rows, all at the case's time.
pub struct CaseControlBatch {
    pub inputs: Array2<f64>,
    /// Number of controls per event, in row order.
    pub groups: Vec<usize>,
    /// Dataset record index of every input row.
    pub record_rows: Vec<usize>,
}

/// Assemble inputs `[t_case, x]` for the chosen events (`which` indexes into
/// `pairs`), reading records through `rows`.
pub fn assemble_batch(
    ds: &Dataset,
    rows: &[usize],
    pairs: &CaseControlPairs,
    which: &[usize],
) -> CaseControlBatch {
    let d = ds.dim();
    let total: usize = which.iter().map(|&e| 1 + pairs.controls[e].len()).sum();
    let mut inputs = Array2::zeros((total, d + 1));
    let mut groups = Vec::with_capacity(which.len());
    let mut record_rows = Vec::with_capacity(total);
    let mut r = 0;
    for &e in which {
        let case_row = rows[pairs.cases[e]];
        let t = ds.records[case_row].time;
        let mut fill = |row_idx: usize| {
            inputs[[r, 0]] = t;
            for (k, &v) in ds.records[row_idx].x.iter().enumerate() {
                inputs[[r, k + 1]] = v;
            }
            record_rows.push(row_idx);
            r += 1;
        };
        fill(case_row);
        for &c in &pairs.controls[e] {
            fill(rows[c]);
        }
        groups.push(pairs.controls[e].len());
    }
    CaseControlBatch { inputs, groups, record_rows }
}

/// Mean over events of `log(1 + sum_j exp{g_ctrl_j - g_case})`, stabilized.
pub fn ccl_loss_from_g(g: &[f64], groups: &[usize]) -> f64 {
    let mut pos = 0;
    let mut total = 0.0;
    for &k in groups {
        let case = g[pos];
        let mut m = 0.0f64;
        for j in 1..=k {
            m = m.max(g[pos + j] - case);
        }
        let mut s = (-m).exp();
        for j in 1..=k {
            s += (g[pos + j] - case - m).exp();
        }
        total += m + s.ln();
        pos += 1 + k;
    }
    total / groups.len() as f64
}

/// Gradient of [`ccl_loss_from_g`] with respect to each g value.
pub fn ccl_grad_from_g(g: &[f64], groups: &[usize]) -> Vec<f64> {
    let n = groups.len() as f64;
    let mut dg = vec![0.0; g.len()];
    let mut pos = 0;
    for &k in groups {
        let case = g[pos];
        let mut m = 0.0f64;
        for j in 1..=k {
            m = m.max(g[pos + j] - case);
        }
        let mut denom = (-m).exp();
        for j in 1..=k {
            denom += (g[pos + j] - case - m).exp();
        }
        let mut p_sum = 0.0;
        for j in 1..=k {
            let p = (g[pos + j] - case - m).exp() / denom;
            dg[pos + j] = p / n;
            p_sum += p;
        }
        dg[pos] = -p_sum / n;
        pos += 1 + k;
    }
    dg
}

/// Inference-mode loss of a network on an assembled batch.
pub fn ccl_loss(net: &HazardNet, batch: &CaseControlBatch) -> Result<f64> {
    let g = net.infer_batch(batch.inputs.view())?;
    Ok(ccl_loss_from_g(g.as_slice().unwrap(), &batch.groups))
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(lr: f64, n_params: usize) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    fn step(&mut self, net: &mut HazardNet, grad_flat: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut i = 0;
        net.visit_params_mut(&mut |p| {
            let g = grad_flat[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            *p -= self.lr * mhat / (vhat.sqrt() + self.eps);
            i += 1;
        });
        debug_assert_eq!(i, grad_flat.len());
    }
}

/// Train on the plan's training rows with its validation rows for stopping.
pub fn train(ds: &Dataset, plan: &SplitPlan, cfg: &NetConfig) -> Result<(HazardNet, TrainReport)> {
    train_on_rows(ds, &plan.train_indices, &plan.valid_indices, cfg)
}

/// Train on an explicit row multiset (`train_rows` may repeat rows, as in a
/// bootstrap resample); `valid_rows` are only ever used for the validation
/// loss. Deterministic given `(ds, rows, cfg)`.
pub fn train_on_rows(
    ds: &Dataset,
    train_rows: &[usize],
    valid_rows: &[usize],
    cfg: &NetConfig,
) -> Result<(HazardNet, TrainReport)> {
    cfg.validate()?;
    if train_rows.is_empty() || valid_rows.is_empty() {
        return Err(Error::Config("empty training or validation rows".into()));
    }
    let t_train: Vec<f64> = train_rows.iter().map(|&i| ds.records[i].time).collect();
    let e_train: Vec<bool> = train_rows.iter().map(|&i| ds.records[i].event).collect();
    if !e_train.iter().any(|&e| e) {
        return Err(Error::Config("training rows contain no events".into()));
    }
    let t_valid: Vec<f64> = valid_rows.iter().map(|&i| ds.records[i].time).collect();
    let e_valid: Vec<bool> = valid_rows.iter().map(|&i| ds.records[i].event).collect();
    if !e_valid.iter().any(|&e| e) {
        return Err(Error::Config("validation rows contain no events".into()));
    }

    let mut rng = SeedStream::seed_from_u64(cfg.seed);
    let mut net = HazardNet::init(cfg, ds.dim() + 1, &mut rng)?;
    let mut adam = Adam::new(cfg.learning_rate, net.param_count());

    // fixed validation control draw for the whole run
    let valid_pairs = draw_case_controls(&t_valid, &e_valid, cfg.n_controls, &mut rng);
    let valid_order: Vec<usize> = (0..valid_pairs.cases.len()).collect();
    let valid_batch = assemble_batch(ds, valid_rows, &valid_pairs, &valid_order);

    let valid_set: HashSet<usize> = valid_rows.iter().copied().collect();

    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best_net = net.clone();
    let mut train_hist = Vec::new();
    let mut valid_hist = Vec::new();
    let mut stopped_early = false;
    let mut without_controls = 0;
    let mut valid_rows_in_gradients = 0;
    let mut epochs_run = 0;

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        let pairs = draw_case_controls(&t_train, &e_train, cfg.n_controls, &mut rng);
        without_controls = pairs.without_controls;
        let mut event_order: Vec<usize> = (0..pairs.cases.len()).collect();
        event_order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut loss_events = 0usize;
        for chunk in event_order.chunks(cfg.batch_size) {
            let batch = assemble_batch(ds, train_rows, &pairs, chunk);
            valid_rows_in_gradients +=
                batch.record_rows.iter().filter(|r| valid_set.contains(r)).count();
            let dropout_rng = if cfg.dropout_rate > 0.0 { Some(&mut rng) } else { None };
            let (g, cache) = net.forward_train(batch.inputs.view(), true, dropout_rng)?;
            let gs = g.as_slice().unwrap();
            loss_sum += ccl_loss_from_g(gs, &batch.groups) * chunk.len() as f64;
            loss_events += chunk.len();
            let dg = ndarray::Array1::from(ccl_grad_from_g(gs, &batch.groups));
            let grads = net.backward(&cache, &dg);
            adam.step(&mut net, &grads.flatten());
        }
        train_hist.push(loss_sum / loss_events as f64);

        let valid_loss = ccl_loss(&net, &valid_batch)?;
        valid_hist.push(valid_loss);
        let (improved, stop) = stopper.observe(epoch, valid_loss);
        if improved {
            best_net = net.clone();
        }
        if stop {
            stopped_early = true;
            break;
        }
    }

    let report = TrainReport {
        epochs_run,
        best_epoch: stopper.best_epoch,
        train_loss_history: train_hist,
        valid_loss_history: valid_hist,
        stopped_early,
        events_without_controls: without_controls,
        valid_rows_in_gradients,
    };
    Ok((best_net, report))
}
