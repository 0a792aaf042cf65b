//! Cost-based backward induction.
//!
//! The follower (attacker) best-responds to every feasible defense; the
//! leader (defender) then picks the defense whose induced response hurts it
//! least. Both selections prefer, among utilities within [`UTILITY_TOL`] of
//! the best, the action with the smallest level sum and then the
//! lexicographically smallest level vector.

use crate::equilibrium::{EquilibriumResult, Metadata, Method};
use crate::error::Result;
use crate::game::{enumerate_budgeted, Action, Game, PayoffModel, Player};
use crate::par::{par_map, par_range};

/// Utilities closer than this count as equal when forming tie sets.
pub const UTILITY_TOL: f64 = 1e-9;

/// Index of the preferred candidate: highest utility up to [`UTILITY_TOL`],
/// then smallest level sum, then lexicographic order.
pub fn select_best<'a, I>(candidates: I) -> Option<(usize, f64)>
where
    I: IntoIterator<Item = (usize, &'a Action, f64)>,
    I::IntoIter: Clone,
{
    let it = candidates.into_iter();
    let best = it.clone().map(|(_, _, u)| u).fold(f64::NEG_INFINITY, f64::max);
    it.filter(|&(_, _, u)| u >= best - UTILITY_TOL)
        .min_by(|x, y| (x.1.level_sum(), x.1).cmp(&(y.1.level_sum(), y.1)))
        .map(|(i, _, u)| (i, u))
}

/// A follower response: the chosen attack and its attacker utility.
#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub action: Action,
    pub u_attacker: f64,
}

/// Attacker utilities for every attack/defense pair of two action lists,
/// stored defense-major.
#[derive(Clone, Debug)]
pub struct PayoffTable {
    attacks: Vec<Action>,
    defenses: Vec<Action>,
    values: Vec<f64>,
}

/// Indices into a [`PayoffTable`] and the resulting attacker utility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableSolution {
    pub attack: usize,
    pub defense: usize,
    pub u_attacker: f64,
}

/// Indices of an RD solution and both defender utilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableRd {
    pub attack: usize,
    pub defense: usize,
    pub estimated_attack: usize,
    pub u_defender: f64,
    pub u_defender_estimated: f64,
}

impl PayoffTable {
    /// Evaluates all pairs; defenses are processed in parallel.
    pub fn build(payoff: &PayoffModel, attacks: Vec<Action>, defenses: Vec<Action>) -> Self {
        let rows = par_map(&defenses, |d| {
            attacks
                .iter()
                .map(|a| payoff.attacker_utility(a, d))
                .collect::<Vec<_>>()
        });
        PayoffTable {
            values: rows.concat(),
            attacks,
            defenses,
        }
    }

    /// Wraps precomputed defense-major utilities.
    pub(crate) fn from_values(attacks: Vec<Action>, defenses: Vec<Action>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), attacks.len() * defenses.len());
        PayoffTable {
            attacks,
            defenses,
            values,
        }
    }

    /// Table over every action affordable at costs `(gamma_a, gamma_d)`; the
    /// result also serves any costs at least as large.
    pub fn for_costs(game: &Game, gamma_a: f64, gamma_d: f64) -> Result<Self> {
        let cfg = game.config();
        let attacks = enumerate_budgeted(
            game.case(),
            Player::Attacker,
            cfg.attack_levels,
            gamma_a,
            cfg.enumeration_cap,
        )?;
        let defenses = enumerate_budgeted(
            game.case(),
            Player::Defender,
            cfg.defense_levels,
            gamma_d,
            cfg.enumeration_cap,
        )?;
        Ok(Self::build(game.payoff(), attacks, defenses))
    }

    pub fn attacks(&self) -> &[Action] {
        &self.attacks
    }

    pub fn defenses(&self) -> &[Action] {
        &self.defenses
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn utility(&self, attack: usize, defense: usize) -> f64 {
        self.values[defense * self.attacks.len() + attack]
    }

    /// Lowest-cost best response to defense `defense` among attacks
    /// affordable at `gamma_a`.
    pub fn best_response(&self, defense: usize, gamma_a: f64) -> Option<(usize, f64)> {
        let row = &self.values[defense * self.attacks.len()..][..self.attacks.len()];
        select_best(
            self.attacks
                .iter()
                .zip(row)
                .enumerate()
                .filter(|(_, (a, _))| a.is_affordable(gamma_a))
                .map(|(i, (a, &u))| (i, a, u)),
        )
    }

    /// Leader choice when the follower responds under `gamma_follow`.
    /// Returns `(defense, response, u_attacker)`.
    fn lead(&self, gamma_follow: f64, gamma_d: f64) -> Option<(usize, usize, f64)> {
        let responses: Vec<Option<(usize, usize, f64)>> = self
            .defenses
            .iter()
            .enumerate()
            .map(|(j, d)| {
                if !d.is_affordable(gamma_d) {
                    return None;
                }
                self.best_response(j, gamma_follow).map(|(i, u)| (j, i, u))
            })
            .collect();
        let chosen = select_best(responses.iter().flatten().map(|&(j, _, u)| (j, &self.defenses[j], -u)))?;
        responses[chosen.0]
    }

    /// CBSE restricted to the actions affordable at `(gamma_a, gamma_d)`.
    pub fn solve(&self, gamma_a: f64, gamma_d: f64) -> Option<TableSolution> {
        self.lead(gamma_a, gamma_d)
            .map(|(defense, attack, u_attacker)| TableSolution {
                attack,
                defense,
                u_attacker,
            })
    }

    /// Robust defense: the defender plans against an attacker paying
    /// `gamma_a_est`, the attacker then responds under its true `gamma_a`.
    pub fn solve_rd(&self, gamma_a_est: f64, gamma_a: f64, gamma_d: f64) -> Option<TableRd> {
        let (defense, estimated_attack, u_est) = self.lead(gamma_a_est, gamma_d)?;
        let (attack, u) = self.best_response(defense, gamma_a)?;
        Some(TableRd {
            attack,
            defense,
            estimated_attack,
            u_defender: -u,
            u_defender_estimated: -u_est,
        })
    }

    fn result(&self, game: &Game, s: TableSolution) -> EquilibriumResult {
        EquilibriumResult::evaluate(
            Method::Cbbi,
            game,
            self.attacks[s.attack].clone(),
            self.defenses[s.defense].clone(),
            Metadata {
                evaluations: Some(self.len() as u64),
                ..Metadata::default()
            },
        )
    }
}

/// The attacker's lowest-cost best response to `d` under per-load cost `gamma`.
pub fn best_response(game: &Game, d: &Action, gamma: f64) -> Result<Response> {
    let cfg = game.config();
    let attacks = enumerate_budgeted(
        game.case(),
        Player::Attacker,
        cfg.attack_levels,
        gamma,
        cfg.enumeration_cap,
    )?;
    let utilities = par_map(&attacks, |a| game.payoff().attacker_utility(a, d));
    let (i, u) = select_best(attacks.iter().zip(&utilities).enumerate().map(|(i, (a, &u))| (i, a, u)))
        .expect("the zero attack is always feasible");
    Ok(Response {
        action: attacks[i].clone(),
        u_attacker: u,
    })
}

/// Cost-based Stackelberg equilibrium by exhaustive backward induction.
pub fn solve_cbse(game: &Game) -> Result<EquilibriumResult> {
    let cfg = game.config();
    let table = PayoffTable::for_costs(game, cfg.gamma_a, cfg.gamma_d)?;
    let s = table
        .solve(cfg.gamma_a, cfg.gamma_d)
        .expect("zero actions are always feasible");
    Ok(table.result(game, s))
}

/// CBSEs at every `(gamma_a, gamma_d)` point, sharing one payoff table.
/// Results are in input order.
pub fn sweep_cbse(game: &Game, points: &[(f64, f64)]) -> Result<Vec<EquilibriumResult>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let min_a = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let min_d = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let table = PayoffTable::for_costs(game, min_a, min_d)?;
    Ok(par_range(points.len(), |i| {
        let (ga, gd) = points[i];
        let g = game.with_costs(ga, gd);
        let s = table.solve(ga, gd).expect("zero actions are always feasible");
        table.result(&g, s)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(levels: &[u8]) -> Action {
        Action::new(levels.to_vec(), 3).unwrap()
    }

    #[test]
    fn prefers_utility_then_cost_then_lex() {
        let a = [act(&[0, 2]), act(&[1, 1]), act(&[2, 0]), act(&[0, 1])];
        let pick = |u: [f64; 4]| {
            select_best(a.iter().zip(u).enumerate().map(|(i, (x, u))| (i, x, u)))
                .unwrap()
                .0
        };
        assert_eq!(pick([0.5, 0.5, 0.5, 0.4]), 0);
        assert_eq!(pick([0.5, 0.5, 0.5, 0.5 - 1e-10]), 3);
        assert_eq!(pick([0.5, 0.6, 0.5, 0.5]), 1);
        assert_eq!(pick([0.5, 0.5, 0.6 - 1e-12, 0.6]), 3);
    }

    #[test]
    fn empty_candidates() {
        assert!(select_best(std::iter::empty::<(usize, &Action, f64)>()).is_none());
    }
}
