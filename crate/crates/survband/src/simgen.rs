//! Synthetic right-censored survival data for the five simulation settings,
//! generated by closed-form inverse-transform sampling, together with the
//! exact truth oracle S(t|x) used for coverage evaluation.
//!
//! All hazards have the form `h(t|x) = h0(t) exp{g(t, x)}`:
//!
//! * S1: `h0 = 0.1`, `g(x) = b'x`, `b = (0.44, 0.66, 0.88)`, x ~ U[-1,1]^3,
//!   censoring Exp(1/30) truncated at t = 30 (about 30% censored).
//! * S2: as S1 with `g(x) = b'x + 2/3 (x1^2 + x3^2 + x1x2 + x1x3 + x2x3)`
//!   (about 20% censored).
//! * S3: `h0 = 0.02`, `g(t, x) = a(x) + b(x) t` with
//!   `a(x) = b'x + 2/3 (x1^2 + x3^2 + x1x2 + x1x3 + x2x3) + x3` and
//!   `b(x) = {0.2 (x1 + x2) + 0.5 x1 x2}^2`; rest as S1.
//! * S4: `h0(t) = 0.1 t`,
//!   `g(x) = x1^2 x2^3 + ln(x3 + 1) + sqrt(x4 x5 + 1) + exp(x5 / 2) - 8.2`,
//!   covariates from a Gaussian copula on [0, 2] with correlation 0.5,
//!   censoring Exp(1/28) truncated at t = 34 (about 50% censored).
//! * S5: as S4 with
//!   `g(x) = {x1^2 x2^3 + ln(x3 + 1) + sqrt(x4 x5 + 1) + exp(x5 / 2)}^2 / 20 - 6.0`
//!   and censoring Exp(1/45) (about 60% censored).
//!
//! Evaluation grids: S1-S3 use [0.1, 27] in steps of 0.1; S4-S5 use [2, 34]
//! in steps of 0.1.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::dataset::{Dataset, SurvRecord};
use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::survest::{SurvCurve, TimeGrid};

pub const BETA: [f64; 3] = [0.44, 0.66, 0.88];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SettingId {
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl SettingId {
    pub fn from_number(k: usize) -> Result<Self> {
        match k {
            1 => Ok(SettingId::S1),
            2 => Ok(SettingId::S2),
            3 => Ok(SettingId::S3),
            4 => Ok(SettingId::S4),
            5 => Ok(SettingId::S5),
            _ => Err(Error::Contract(format!("unknown setting {k}"))),
        }
    }

    pub fn number(&self) -> usize {
        match self {
            SettingId::S1 => 1,
            SettingId::S2 => 2,
            SettingId::S3 => 3,
            SettingId::S4 => 4,
            SettingId::S5 => 5,
        }
    }
}

/// One generative law: hazard pieces, covariate law, censoring and grid.
#[derive(Debug, Clone)]
pub struct SimSetting {
    pub id: SettingId,
    /// Rate of the exponential censoring time.
    pub censor_rate_param: f64,
    /// Administrative censoring time; also the upper end of observation.
    pub admin_cutoff: f64,
}

impl SimSetting {
    pub fn new(id: SettingId) -> Self {
        let (censor_rate_param, admin_cutoff) = match id {
            SettingId::S1 | SettingId::S2 | SettingId::S3 => (1.0 / 30.0, 30.0),
            SettingId::S4 => (1.0 / 28.0, 34.0),
            SettingId::S5 => (1.0 / 45.0, 34.0),
        };
        SimSetting { id, censor_rate_param, admin_cutoff }
    }

    /// Covariate dimension: 3 for S1-S3, 5 for S4-S5.
    pub fn dim(&self) -> usize {
        match self.id {
            SettingId::S1 | SettingId::S2 | SettingId::S3 => 3,
            SettingId::S4 | SettingId::S5 => 5,
        }
    }

    /// The reporting grid for this setting.
    pub fn grid(&self) -> TimeGrid {
        match self.id {
            SettingId::S1 | SettingId::S2 | SettingId::S3 => {
                TimeGrid::uniform(0.1, 27.0, 0.1).unwrap()
            }
            SettingId::S4 | SettingId::S5 => TimeGrid::uniform(2.0, 34.0, 0.1).unwrap(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Contract(format!(
                "setting {:?} expects {} covariates, got {}",
                self.id,
                self.dim(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Log relative risk g(t, x).
    pub fn g_eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self.id {
            SettingId::S1 => dot(&BETA, x),
            SettingId::S2 => dot(&BETA, x) + nonlin3(x),
            SettingId::S3 => s3_a(x) + s3_b(x) * t,
            SettingId::S4 => s4_core(x) - 8.2,
            SettingId::S5 => {
                let c = s4_core(x);
                c * c / 20.0 - 6.0
            }
        })
    }

    /// Cumulative hazard H(t|x), closed form per setting.
    pub fn cum_hazard(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self.id {
            SettingId::S1 | SettingId::S2 => 0.1 * t * self.g_eval(0.0, x)?.exp(),
            SettingId::S3 => {
                let a = s3_a(x).exp();
                let b = s3_b(x);
                if b == 0.0 {
                    0.02 * a * t
                } else {
                    0.02 * a * (b * t).exp_m1() / b
                }
            }
            SettingId::S4 | SettingId::S5 => 0.05 * t * t * self.g_eval(0.0, x)?.exp(),
        })
    }

    /// Solve `H(t*|x) = -ln u` for t*, the inverse-transform event time.
    pub fn sample_event_time(&self, x: &[f64], u: f64) -> Result<f64> {
        self.check_dim(x)?;
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Contract(format!("u = {u} not in (0, 1)")));
        }
        let target = -u.ln();
        Ok(match self.id {
            SettingId::S1 | SettingId::S2 => target / (0.1 * self.g_eval(0.0, x)?.exp()),
            SettingId::S3 => {
                let a = s3_a(x).exp();
                let b = s3_b(x);
                if b == 0.0 {
                    target / (0.02 * a)
                } else {
                    // ln(1 + b * target / (0.02 a)) / b; the argument of ln
                    // is >= 1 because b >= 0 and target > 0.
                    (b * target / (0.02 * a)).ln_1p() / b
                }
            }
            SettingId::S4 | SettingId::S5 => {
                (target / (0.05 * self.g_eval(0.0, x)?.exp())).sqrt()
            }
        })
    }

    /// Draw one covariate vector from the setting's law.
    pub fn sample_covariates(&self, rng: &mut SeedStream) -> Vec<f64> {
        match self.id {
            SettingId::S1 | SettingId::S2 | SettingId::S3 => {
                (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()
            }
            SettingId::S4 | SettingId::S5 => gaussian_copula_unit2(rng),
        }
    }

    pub fn sample_covariate_set(&self, n: usize, rng: &mut SeedStream) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample_covariates(rng)).collect()
    }

    pub fn oracle(&self) -> TruthOracle {
        TruthOracle { setting: self.clone() }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Shared nonlinear term of S2/S3: 2/3 (x1^2 + x3^2 + x1x2 + x1x3 + x2x3).
fn nonlin3(x: &[f64]) -> f64 {
    2.0 / 3.0 * (x[0] * x[0] + x[2] * x[2] + x[0] * x[1] + x[0] * x[2] + x[1] * x[2])
}

fn s3_a(x: &[f64]) -> f64 {
    dot(&BETA, x) + nonlin3(x) + x[2]
}

fn s3_b(x: &[f64]) -> f64 {
    let v = 0.2 * (x[0] + x[1]) + 0.5 * x[0] * x[1];
    v * v
}

/// Common core of the S4/S5 risk:
/// `x1^2 x2^3 + ln(x3 + 1) + sqrt(x4 x5 + 1) + exp(x5 / 2)`.
fn s4_core(x: &[f64]) -> f64 {
    x[0] * x[0] * x[1] * x[1] * x[1]
        + (x[2] + 1.0).ln()
        + (x[3] * x[4] + 1.0).sqrt()
        + (x[4] / 2.0).exp()
}

/// Standard normal CDF.
fn phi(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Five margins on [0, 2] from an equicorrelated (rho = 0.5) Gaussian
/// copula: z_j = sqrt(0.5) z0 + sqrt(0.5) e_j, x_j = 2 Phi(z_j).
fn gaussian_copula_unit2(rng: &mut SeedStream) -> Vec<f64> {
    let z0: f64 = StandardNormal.sample(rng);
    (0..5)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            let z = (0.5f64).sqrt() * (z0 + e);
            2.0 * phi(z)
        })
        .collect()
}

/// Exact conditional survival function of a setting.
#[derive(Debug, Clone)]
pub struct TruthOracle {
    setting: SimSetting,
}

impl TruthOracle {
    pub fn setting(&self) -> &SimSetting {
        &self.setting
    }

    pub fn g(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.setting.g_eval(t, x)
    }

    pub fn s_true(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok((-self.setting.cum_hazard(t, x)?).exp())
    }
}

/// Exact truth curve on a grid.
pub fn truth_curve(oracle: &TruthOracle, x: &[f64], grid: &Arc<TimeGrid>) -> Result<SurvCurve> {
    let values = grid
        .points()
        .iter()
        .map(|&t| oracle.s_true(t, x))
        .collect::<Result<Vec<_>>>()?;
    SurvCurve::new(grid.clone(), values)
}

/// A generated dataset plus the latent (pre-censoring) event times, which
/// the generator checks rely on.
#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: Dataset,
    pub oracle: TruthOracle,
    pub latent_event_times: Vec<f64>,
}

/// Generate `n` records: draw x from the covariate law, t* by inversion and
/// c ~ Exp(rate) truncated at the administrative cutoff; emit
/// `(x, min(t*, c), 1{t* <= c})`.
pub fn generate(setting: &SimSetting, n: usize, rng: &mut SeedStream) -> Result<(Dataset, TruthOracle)> {
    let full = generate_full(setting, n, rng)?;
    Ok((full.dataset, full.oracle))
}

/// As [`generate`], also returning the latent event times.
pub fn generate_full(setting: &SimSetting, n: usize, rng: &mut SeedStream) -> Result<Generated> {
    if n == 0 {
        return Err(Error::Contract("need n >= 1".into()));
    }
    let exp = Exp::new(setting.censor_rate_param)
        .map_err(|e| Error::Contract(format!("bad censoring rate: {e}")))?;
    let mut records = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    for _ in 0..n {
        let x = setting.sample_covariates(rng);
        let u = positive_unit(rng);
        let t_star = setting.sample_event_time(&x, u)?;
        let c = exp.sample(rng).min(setting.admin_cutoff);
        let event = t_star <= c;
        records.push(SurvRecord { x, time: t_star.min(c), event });
        latent.push(t_star);
    }
    let names = (1..=setting.dim()).map(|j| format!("x{j}")).collect();
    let dataset = Dataset::new(records, names)?;
    Ok(Generated { dataset, oracle: setting.oracle(), latent_event_times: latent })
}

/// Generate `n` records at a fixed covariate vector; used to compare the
/// generator against the truth curve via Kaplan-Meier.
pub fn generate_at(setting: &SimSetting, x: &[f64], n: usize, rng: &mut SeedStream) -> Result<Dataset> {
    setting.check_dim(x)?;
    let exp = Exp::new(setting.censor_rate_param)
        .map_err(|e| Error::Contract(format!("bad censoring rate: {e}")))?;
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let u = positive_unit(rng);
        let t_star = setting.sample_event_time(x, u)?;
        let c = exp.sample(rng).min(setting.admin_cutoff);
        records.push(SurvRecord {
            x: x.to_vec(),
            time: t_star.min(c),
            event: t_star <= c,
        });
    }
    let names = (1..=setting.dim()).map(|j| format!("x{j}")).collect();
    Dataset::new(records, names)
}

fn positive_unit(rng: &mut SeedStream) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
