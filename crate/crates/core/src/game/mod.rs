//! Action spaces, attack outcomes and the zero-sum utilities of the
//! attacker-defender game.

mod action;
mod outcome;
mod payoff;

use serde::{Deserialize, Serialize};

pub(crate) use action::within_budget;
pub use action::{count_feasible, enumerate_budgeted, genes, Action, AttackAction, DefenseAction};
pub use outcome::{attack_increment, enumerate_outcomes, Outcome};
pub use payoff::{clip_loss, expected_utility, performance_loss, performance_loss_at, Estimate, PayoffModel};

use crate::error::{Error, Result};
use crate::grid::{GridCase, StiffnessModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Attacker,
    Defender,
}

/// Costs, level counts and evaluation settings of one game instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub gamma_a: f64,
    pub gamma_d: f64,
    pub attack_levels: u8,
    pub defense_levels: u8,
    /// Largest number of fractional attack entries evaluated exactly.
    pub mc_support_threshold: usize,
    pub mc_samples: usize,
    pub seed: u64,
    /// Refuse exhaustive enumeration above this many feasible actions.
    pub enumeration_cap: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            gamma_a: 0.0,
            gamma_d: 0.0,
            attack_levels: 3,
            defense_levels: 3,
            mc_support_threshold: 20,
            mc_samples: 100_000,
            seed: 42,
            enumeration_cap: 100_000_000,
        }
    }
}

impl GameConfig {
    pub fn new(gamma_a: f64, gamma_d: f64) -> Self {
        GameConfig {
            gamma_a,
            gamma_d,
            ..Self::default()
        }
    }

    pub fn with_levels(mut self, attack: u8, defense: u8) -> Self {
        self.attack_levels = attack;
        self.defense_levels = defense;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn gamma(&self, player: Player) -> f64 {
        match player {
            Player::Attacker => self.gamma_a,
            Player::Defender => self.gamma_d,
        }
    }

    pub fn levels(&self, player: Player) -> u8 {
        match player {
            Player::Attacker => self.attack_levels,
            Player::Defender => self.defense_levels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("gamma_a", self.gamma_a), ("gamma_d", self.gamma_d)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::invalid("nonnegative costs", format!("{name} = {g}")));
            }
        }
        if self.attack_levels < 2 || self.defense_levels < 2 {
            return Err(Error::invalid(
                "level count",
                format!(
                    "L_a = {}, L_d = {}; need at least 2",
                    self.attack_levels, self.defense_levels
                ),
            ));
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("mc_samples", "need at least one sample"));
        }
        Ok(())
    }
}

/// All feasible actions of `player`, in lexicographic order.
pub fn enumerate_actions(case: &GridCase, cfg: &GameConfig, player: Player) -> Result<Vec<Action>> {
    enumerate_budgeted(case, player, cfg.levels(player), cfg.gamma(player), cfg.enumeration_cap)
}

/// A case, its stiffness model, a configuration and the matching payoffs.
#[derive(Clone, Debug)]
pub struct Game {
    case: GridCase,
    model: StiffnessModel,
    cfg: GameConfig,
    payoff: PayoffModel,
}

impl Game {
    pub fn new(case: GridCase, cfg: GameConfig) -> Result<Self> {
        cfg.validate()?;
        let model = StiffnessModel::build(&case)?;
        let payoff = PayoffModel::new(&case, &model, &cfg);
        Ok(Game {
            case,
            model,
            cfg,
            payoff,
        })
    }

    /// Same case and payoffs under different per-load costs.
    pub fn with_costs(&self, gamma_a: f64, gamma_d: f64) -> Self {
        let mut g = self.clone();
        g.cfg.gamma_a = gamma_a;
        g.cfg.gamma_d = gamma_d;
        g
    }

    pub fn case(&self) -> &GridCase {
        &self.case
    }

    pub fn model(&self) -> &StiffnessModel {
        &self.model
    }

    pub fn config(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn payoff(&self) -> &PayoffModel {
        &self.payoff
    }

    pub fn delta_nominal(&self) -> f64 {
        self.model.delta_nominal()
    }

    pub fn actions(&self, player: Player) -> Result<Vec<Action>> {
        enumerate_actions(&self.case, &self.cfg, player)
    }

    pub fn attacker_utility(&self, a: &Action, d: &Action) -> f64 {
        self.payoff.attacker_utility(a, d)
    }

    pub fn zero(&self, player: Player) -> Action {
        Action::zeros(self.case.n_loads(), self.cfg.levels(player))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_load_case() -> GridCase {
        GridCase::from_json_str(
            r#"{"n_loads": 2, "n_gens": 1,
                "B": [[-10, 2, 8], [2, -10, 8], [8, 8, -16]],
                "V_G": [1.0], "Q_L_nominal": [0.5, 0.5],
                "q_a_max": [1.0, 1.0], "q_d_max": [1.0, 0.0], "ctrl_buses": [1]}"#,
        )
        .unwrap()
    }

    #[test]
    fn enumerates_unit_budget_in_lex_order() {
        let case = two_load_case();
        let cfg = GameConfig::new(1.0, 0.0);
        let acts = enumerate_actions(&case, &cfg, Player::Attacker).unwrap();
        let levels: Vec<&[u8]> = acts.iter().map(|a| a.levels()).collect();
        assert_eq!(levels, vec![&[0, 0][..], &[0, 1], &[0, 2], &[1, 0], &[1, 1], &[2, 0]]);
    }

    #[test]
    fn defender_only_on_controllable_loads() {
        let case = two_load_case();
        let acts = enumerate_actions(&case, &GameConfig::new(0.0, 0.0), Player::Defender).unwrap();
        assert_eq!(acts.len(), 3);
        assert!(acts.iter().all(|d| d.levels()[1] == 0));
    }

    #[test]
    fn prohibitive_cost_leaves_zero_action() {
        let case = two_load_case();
        let acts = enumerate_actions(&case, &GameConfig::new(10.0, 0.0), Player::Attacker).unwrap();
        assert_eq!(acts.len(), 1);
        assert!(acts[0].is_zero());
    }

    #[test]
    fn cap_is_enforced() {
        let case = two_load_case();
        let mut cfg = GameConfig::new(0.0, 0.0);
        cfg.enumeration_cap = 8;
        let err = enumerate_actions(&case, &cfg, Player::Attacker).unwrap_err();
        assert!(matches!(err, Error::Capacity { count: 9, cap: 8, .. }));
    }

    #[test]
    fn config_validation() {
        assert!(GameConfig::new(-1.0, 0.0).validate().is_err());
        assert!(GameConfig::new(0.0, f64::NAN).validate().is_err());
        assert!(GameConfig::new(0.0, 0.0).with_levels(1, 3).validate().is_err());
        assert!(GameConfig::default().validate().is_ok());
    }

    #[test]
    fn zero_sum_and_idle_loss() {
        let game = Game::new(two_load_case(), GameConfig::new(0.0, 0.0)).unwrap();
        let a = Action::new(vec![1, 2], 3).unwrap();
        let d = Action::new(vec![1, 0], 3).unwrap();
        let ua = game.payoff().attacker_utility(&a, &d);
        assert_eq!(ua + game.payoff().defender_utility(&a, &d), 0.0);
        let z = game.zero(Player::Attacker);
        assert_eq!(
            game.attacker_utility(&z, &game.zero(Player::Defender)),
            game.delta_nominal()
        );
    }

    #[test]
    fn superposition_matches_direct_solve() {
        let case = two_load_case();
        let model = StiffnessModel::build(&case).unwrap();
        let payoff = PayoffModel::new(&case, &model, &GameConfig::default());
        let a = Action::new(vec![1, 2], 3).unwrap();
        let d = Action::new(vec![2, 0], 3).unwrap();
        for mask in [[false, false], [true, false], [false, true], [true, true]] {
            let fast = payoff.loss(&a, &d, &mask);
            let slow = performance_loss(&model, &case, &a, &d, &mask);
            assert!((fast - slow).abs() < 1e-12, "{mask:?}: {fast} vs {slow}");
        }
    }

    #[test]
    fn monte_carlo_near_exact() {
        let case = two_load_case();
        let model = StiffnessModel::build(&case).unwrap();
        let payoff = PayoffModel::new(&case, &model, &GameConfig::default());
        let a = Action::new(vec![1, 1], 3).unwrap();
        let d = Action::zeros(2, 3);
        let exact = payoff.exact(&a, &d).unwrap();
        let mc = payoff.monte_carlo(&a, &d, 20_000, 42);
        assert!((mc.value - exact).abs() <= 3.0 * mc.std_error + 1e-12);
        assert_eq!(mc, payoff.monte_carlo(&a, &d, 20_000, 42));
    }
}
