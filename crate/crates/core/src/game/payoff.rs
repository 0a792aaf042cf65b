//! Clipped-loss utilities.
//!
//! The hot path relies on linearity of the stress map: `Q_crit^-1 Q_L^j` is
//! the nominal stress plus one precomputed response column per successfully
//! attacked load, minus the scaled compensation columns. Outcomes of the
//! fractional entries are visited in Gray-code order so each step adds or
//! removes a single column.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{Action, GameConfig, Player};
use crate::grid::{inf_norm, GridCase, StiffnessModel};

/// `Clip(x; (floor, 1))`.
pub fn clip_loss(x: f64, floor: f64) -> f64 {
    if x <= floor {
        floor
    } else if x >= 1.0 {
        1.0
    } else {
        x
    }
}

/// Loss of one outcome, computed directly through the stiffness factorization.
pub fn performance_loss(model: &StiffnessModel, case: &GridCase, a: &Action, d: &Action, mask: &[bool]) -> f64 {
    performance_loss_at(model, case, case.q_l_nominal(), model.delta_nominal(), a, d, mask)
}

/// [`performance_loss`] for an arbitrary base setpoint vector and clip floor.
pub fn performance_loss_at(
    model: &StiffnessModel,
    case: &GridCase,
    q_l_base: &[f64],
    floor: f64,
    a: &Action,
    d: &Action,
    mask: &[bool],
) -> f64 {
    let inc = super::attack_increment(case, a, mask);
    let q_d = case.q_d_max();
    let q_l: Vec<f64> = (0..case.n_loads())
        .map(|k| q_l_base[k] + inc[k] - d.value(k) * q_d[k])
        .collect();
    clip_loss(model.instability_index(&q_l), floor)
}

/// Attacker (or defender) utility of a strategy pair on the nominal model.
pub fn expected_utility(
    model: &StiffnessModel,
    case: &GridCase,
    cfg: &GameConfig,
    a: &Action,
    d: &Action,
    player: Player,
) -> f64 {
    PayoffModel::new(case, model, cfg).utility(a, d, player)
}

/// A utility value with its Monte Carlo standard error (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    /// `Some(n)` when the value is a mean over `n` sampled outcomes.
    pub samples: Option<usize>,
}

/// Precomputed stress responses for fast utility evaluation.
#[derive(Clone, Debug)]
pub struct PayoffModel {
    n_loads: usize,
    base_stress: Vec<f64>,
    attack_response: Vec<Vec<f64>>,
    defense_response: Vec<Vec<f64>>,
    floor: f64,
    support_limit: usize,
    mc_samples: usize,
    seed: u64,
}

impl PayoffModel {
    pub fn new(case: &GridCase, model: &StiffnessModel, cfg: &GameConfig) -> Self {
        Self::with_setpoints(case, model, cfg, case.q_l_nominal(), model.delta_nominal())
    }

    /// Payoffs with `q_l_base` in place of the nominal setpoints and
    /// `floor` as the lower clip of the loss.
    pub fn with_setpoints(
        case: &GridCase,
        model: &StiffnessModel,
        cfg: &GameConfig,
        q_l_base: &[f64],
        floor: f64,
    ) -> Self {
        let k = case.n_loads();
        let column = |scale: f64, j: usize| {
            let mut e = vec![0.0; k];
            e[j] = scale;
            model.solve(&e)
        };
        let q_a = case.attack_magnitude();
        let q_d = case.q_d_max();
        PayoffModel {
            n_loads: k,
            base_stress: model.solve(q_l_base),
            attack_response: (0..k).map(|j| column(q_a[j], j)).collect(),
            defense_response: (0..k).map(|j| column(q_d[j], j)).collect(),
            floor,
            support_limit: cfg.mc_support_threshold,
            mc_samples: cfg.mc_samples,
            seed: cfg.seed,
        }
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn clip(&self, x: f64) -> f64 {
        clip_loss(x, self.floor)
    }

    /// Stress vector with the defense applied and every level-1 attack successful.
    fn start(&self, a: &Action, d: &Action) -> Vec<f64> {
        let mut x = self.base_stress.clone();
        for k in 0..self.n_loads {
            if d.levels()[k] > 0 {
                let v = d.value(k);
                for (xi, ri) in x.iter_mut().zip(&self.defense_response[k]) {
                    *xi -= v * ri;
                }
            }
        }
        let top = a.n_levels() - 1;
        for k in 0..self.n_loads {
            if a.levels()[k] == top {
                add(&mut x, &self.attack_response[k]);
            }
        }
        x
    }

    /// Loss of a single outcome through the precomputed responses.
    pub fn loss(&self, a: &Action, d: &Action, mask: &[bool]) -> f64 {
        let zero = Action::zeros(a.len(), a.n_levels());
        let mut x = self.start(&zero, d);
        for ((&hit, &l), col) in mask.iter().zip(a.levels()).zip(&self.attack_response) {
            if hit && l > 0 {
                add(&mut x, col);
            }
        }
        self.clip(inf_norm(&x))
    }

    /// Expected loss over all outcomes; errors when the fractional support
    /// exceeds the exact-enumeration limit.
    pub fn exact(&self, a: &Action, d: &Action) -> Result<f64> {
        let frac = a.fractional_indices();
        if frac.len() > self.support_limit {
            return Err(Error::SupportOverflow {
                fractional: frac.len(),
                limit: self.support_limit,
            });
        }
        let p: Vec<f64> = frac.iter().map(|&k| a.value(k)).collect();
        let mut x = self.start(a, d);
        let mut gray = 0u64;
        let mut total = 0.0;
        for step in 0u64..1 << frac.len() {
            if step > 0 {
                let bit = step.trailing_zeros() as usize;
                let col = &self.attack_response[frac[bit]];
                if gray >> bit & 1 == 0 {
                    add(&mut x, col);
                } else {
                    sub(&mut x, col);
                }
                gray ^= 1 << bit;
            }
            let mut prob = 1.0;
            for (bit, &pk) in p.iter().enumerate() {
                prob *= if gray >> bit & 1 == 1 { pk } else { 1.0 - pk };
            }
            total += prob * self.clip(inf_norm(&x));
        }
        Ok(total)
    }

    /// Sample mean of the loss over `samples` outcomes drawn from a stream
    /// keyed on `(seed, a)`; every defense sees the same draws for a given attack.
    pub fn monte_carlo(&self, a: &Action, d: &Action, samples: usize, seed: u64) -> Estimate {
        let frac = a.fractional_indices();
        let p: Vec<f64> = frac.iter().map(|&k| a.value(k)).collect();
        let start = self.start(a, d);
        let mut rng = ChaCha8Rng::seed_from_u64(stream_key(seed, a));
        let (mut mean, mut m2) = (0.0, 0.0);
        let mut x = vec![0.0; self.n_loads];
        for n in 1..=samples.max(1) {
            x.copy_from_slice(&start);
            for (&k, &pk) in frac.iter().zip(&p) {
                if rng.random::<f64>() < pk {
                    add(&mut x, &self.attack_response[k]);
                }
            }
            let loss = self.clip(inf_norm(&x));
            let delta = loss - mean;
            mean += delta / n as f64;
            m2 += delta * (loss - mean);
        }
        let n = samples.max(1) as f64;
        let std_error = if n > 1.0 { (m2 / (n - 1.0) / n).sqrt() } else { 0.0 };
        Estimate {
            value: mean,
            std_error,
            samples: Some(samples.max(1)),
        }
    }

    /// Exact expectation when the support fits, otherwise the seeded Monte Carlo mean.
    pub fn evaluate(&self, a: &Action, d: &Action) -> Estimate {
        match self.exact(a, d) {
            Ok(value) => Estimate {
                value,
                std_error: 0.0,
                samples: None,
            },
            Err(_) => self.monte_carlo(a, d, self.mc_samples, self.seed),
        }
    }

    pub fn attacker_utility(&self, a: &Action, d: &Action) -> f64 {
        self.evaluate(a, d).value
    }

    pub fn defender_utility(&self, a: &Action, d: &Action) -> f64 {
        -self.attacker_utility(a, d)
    }

    pub fn utility(&self, a: &Action, d: &Action, player: Player) -> f64 {
        match player {
            Player::Attacker => self.attacker_utility(a, d),
            Player::Defender => self.defender_utility(a, d),
        }
    }
}

fn add(x: &mut [f64], col: &[f64]) {
    for (xi, ci) in x.iter_mut().zip(col) {
        *xi += ci;
    }
}

fn sub(x: &mut [f64], col: &[f64]) {
    for (xi, ci) in x.iter_mut().zip(col) {
        *xi -= ci;
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_key(seed: u64, a: &Action) -> u64 {
    let mut h = splitmix64(seed ^ u64::from(a.n_levels()));
    for &l in a.levels() {
        h = splitmix64(h ^ u64::from(l));
    }
    h
}
