//! Fixed strategy pairs evaluated under randomly perturbed load setpoints.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumResult;
use crate::error::{Error, Result};
use crate::game::{Action, Game, PayoffModel};
use crate::grid::{GridCase, StiffnessModel};
use crate::par::par_map;

/// Redraws allowed per model before giving up.
pub const MAX_REDRAWS: usize = 100;

/// Lower clip of the loss under a perturbed model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClipWindow {
    /// The nominal model's index, so all models share one window.
    #[default]
    Nominal,
    /// Each model's own unattacked index.
    PerModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertainModelSet {
    pub sigma: f64,
    pub seed: u64,
    /// Perturbed setpoint vectors, one per model.
    pub models: Vec<Vec<f64>>,
    /// Unattacked instability index of each model.
    pub delta_nominal: Vec<f64>,
    /// Redraws spent on each model.
    pub redraws: Vec<usize>,
}

impl UncertainModelSet {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// `m` setpoint vectors `Q_L^n (1 + eps)` with `eps ~ N(0, sigma^2)` drawn
/// model by model, load by load from one seeded stream. A model whose
/// unattacked index reaches 1 is redrawn from the same stream.
pub fn generate_models(
    case: &GridCase,
    model: &StiffnessModel,
    sigma: f64,
    m: usize,
    seed: u64,
) -> Result<UncertainModelSet> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(
            "sigma",
            format!("sigma = {sigma}; need a finite value >= 0"),
        ));
    }
    if m == 0 {
        return Err(Error::invalid("model count", "need at least one model"));
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = case.q_l_nominal();
    let mut set = UncertainModelSet {
        sigma,
        seed,
        models: Vec::with_capacity(m),
        delta_nominal: Vec::with_capacity(m),
        redraws: Vec::with_capacity(m),
    };
    for i in 0..m {
        let mut redraws = 0;
        loop {
            let draw: Vec<f64> = q.iter().map(|&x| x * (1.0 + normal.sample(&mut rng))).collect();
            let delta = model.instability_index(&draw);
            if delta < 1.0 {
                set.models.push(draw);
                set.delta_nominal.push(delta);
                set.redraws.push(redraws);
                break;
            }
            if redraws == MAX_REDRAWS {
                return Err(Error::TooStressed {
                    model: i,
                    retries: MAX_REDRAWS,
                    sigma,
                });
            }
            redraws += 1;
            log::info!("model {i}: unattacked index {delta:.4} >= 1, redrawing");
        }
    }
    Ok(set)
}

fn model_payoff(game: &Game, q_l: &[f64], delta_i: f64, clip: ClipWindow) -> PayoffModel {
    let floor = match clip {
        ClipWindow::Nominal => game.delta_nominal(),
        ClipWindow::PerModel => delta_i,
    };
    PayoffModel::with_setpoints(game.case(), game.model(), game.config(), q_l, floor)
}

/// Attacker utility of `(a, d)` with `q_l` in place of the nominal setpoints.
pub fn utility_under_model(game: &Game, q_l: &[f64], a: &Action, d: &Action, clip: ClipWindow) -> f64 {
    let delta_i = game.model().instability_index(q_l);
    model_payoff(game, q_l, delta_i, clip).attacker_utility(a, d)
}

/// Relative change, in percent, of the equilibrium attacker utility under each model.
pub fn utility_mismatch(set: &UncertainModelSet, game: &Game, eq: &EquilibriumResult, clip: ClipWindow) -> Vec<f64> {
    let nominal = game.payoff().attacker_utility(&eq.a_star, &eq.d_star);
    let idx: Vec<usize> = (0..set.len()).collect();
    par_map(&idx, |&i| {
        let u = model_payoff(game, &set.models[i], set.delta_nominal[i], clip).attacker_utility(&eq.a_star, &eq.d_star);
        ((nominal - u) / nominal).abs() * 100.0
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantile of sorted data: position `p (n - 1)`.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Five-number summary and mean; quartiles interpolate linearly between
/// order statistics.
pub fn summary_stats(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::invalid("non-empty sample", "no values to summarize"));
    }
    if let Some(v) = values.iter().find(|v| v.is_nan()) {
        return Err(Error::invalid("finite sample", format!("value {v}")));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(Summary {
        min: s[0],
        q1: quantile(&s, 0.25),
        median: quantile(&s, 0.5),
        q3: quantile(&s, 0.75),
        max: s[s.len() - 1],
        mean: values.iter().sum::<f64>() / values.len() as f64,
    })
}
