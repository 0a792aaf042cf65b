use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Player;
use crate::grid::GridCase;

/// Relative slack on the budget test `gamma * ||a||_1 <= 1`, so grid values
/// such as `4 * 0.075` do not flip feasibility through rounding.
const BUDGET_RTOL: f64 = 1e-9;

/// A per-load investment vector stored as integer level indices.
///
/// Level `l` out of `n_levels` stands for the fraction `l / (n_levels - 1)`.
/// The derived ordering is lexicographic on the level vector, which is the
/// enumeration order and the final tie-breaker of every solver.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    levels: Vec<u8>,
    n_levels: u8,
}

pub type AttackAction = Action;
pub type DefenseAction = Action;

impl Action {
    pub fn new(levels: Vec<u8>, n_levels: u8) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::invalid(
                "level count",
                format!("{n_levels} levels; need at least 2"),
            ));
        }
        if let Some(&l) = levels.iter().find(|&&l| l >= n_levels) {
            return Err(Error::invalid(
                "level count",
                format!("level {l} out of range for {n_levels} levels"),
            ));
        }
        Ok(Action { levels, n_levels })
    }

    pub fn zeros(len: usize, n_levels: u8) -> Self {
        Action {
            levels: vec![0; len],
            n_levels,
        }
    }

    pub(crate) fn from_levels_unchecked(levels: Vec<u8>, n_levels: u8) -> Self {
        debug_assert!(levels.iter().all(|&l| l < n_levels));
        Action { levels, n_levels }
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn n_levels(&self) -> u8 {
        self.n_levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    fn top(&self) -> u8 {
        self.n_levels - 1
    }

    /// Investment fraction at load `k`, in `[0, 1]`.
    pub fn value(&self, k: usize) -> f64 {
        f64::from(self.levels[k]) / f64::from(self.top())
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.value(k)).collect()
    }

    pub fn level_sum(&self) -> u32 {
        self.levels.iter().map(|&l| u32::from(l)).sum()
    }

    pub fn l1(&self) -> f64 {
        f64::from(self.level_sum()) / f64::from(self.top())
    }

    pub fn cost(&self, gamma: f64) -> f64 {
        gamma * self.l1()
    }

    pub fn is_affordable(&self, gamma: f64) -> bool {
        within_budget(self.level_sum(), self.top(), gamma)
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|&l| l == 0)
    }

    /// Entries strictly between 0 and 1.
    pub fn fractional_indices(&self) -> Vec<usize> {
        let top = self.top();
        (0..self.len())
            .filter(|&k| self.levels[k] != 0 && self.levels[k] != top)
            .collect()
    }

    /// Compact text form `l1;l2;...;lK/L`, e.g. `0;2;1/3`.
    pub fn encode(&self) -> String {
        let body: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        format!("{}/{}", body.join(";"), self.n_levels)
    }

    pub fn decode(text: &str) -> Result<Self> {
        let bad = || Error::invalid("action encoding", format!("cannot parse `{text}`"));
        let (body, n) = text.rsplit_once('/').ok_or_else(bad)?;
        let n_levels: u8 = n.trim().parse().map_err(|_| bad())?;
        let levels = if body.is_empty() {
            Vec::new()
        } else {
            body.split(';')
                .map(|s| s.trim().parse::<u8>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        };
        Action::new(levels, n_levels)
    }

    /// Checks the player-specific structural constraints (length, support on
    /// controllable loads for the defender) and the budget.
    pub fn check_feasible(&self, case: &GridCase, player: Player, gamma: f64) -> Result<()> {
        if self.len() != case.n_loads() {
            return Err(Error::invalid(
                "action length",
                format!("{} entries for {} loads", self.len(), case.n_loads()),
            ));
        }
        if player == Player::Defender {
            if let Some(k) = (0..self.len()).find(|&k| self.levels[k] != 0 && !case.is_controllable(k)) {
                return Err(Error::invalid(
                    "defense support",
                    format!("load bus {} has no control device", case.load_bus_ids()[k]),
                ));
            }
        }
        if !self.is_affordable(gamma) {
            return Err(Error::invalid(
                "budget",
                format!("cost {:.6} exceeds 1 at gamma = {gamma}", self.cost(gamma)),
            ));
        }
        Ok(())
    }
}

pub(crate) fn within_budget(level_sum: u32, top: u8, gamma: f64) -> bool {
    gamma * f64::from(level_sum) <= f64::from(top) * (1.0 + BUDGET_RTOL)
}

/// Largest affordable level sum over `genes` positions.
fn max_level_sum(genes: usize, top: u8, gamma: f64) -> u32 {
    let full = genes as u32 * u32::from(top);
    (0..=full).rev().find(|&s| within_budget(s, top, gamma)).unwrap_or(0)
}

/// Indices of the entries a player may invest in.
pub fn genes(case: &GridCase, player: Player) -> Vec<usize> {
    match player {
        Player::Attacker => (0..case.n_loads()).collect(),
        Player::Defender => case.ctrl_indices().to_vec(),
    }
}

/// Number of level vectors over `genes` positions whose level sum fits the budget.
pub fn count_feasible(genes: usize, n_levels: u8, gamma: f64) -> u128 {
    let top = n_levels - 1;
    let budget = max_level_sum(genes, top, gamma) as usize;
    // ways[s] = vectors so far with level sum s
    let mut ways = vec![0u128; budget + 1];
    ways[0] = 1;
    for _ in 0..genes {
        let mut next = vec![0u128; budget + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for l in 0..=usize::from(top) {
                if s + l > budget {
                    break;
                }
                next[s + l] = next[s + l].saturating_add(w);
            }
        }
        ways = next;
    }
    ways.iter().fold(0u128, |acc, &w| acc.saturating_add(w))
}

/// All feasible actions of `player` under per-load cost `gamma`, in
/// lexicographic order of the level vector.
pub fn enumerate_budgeted(case: &GridCase, player: Player, n_levels: u8, gamma: f64, cap: u64) -> Result<Vec<Action>> {
    if n_levels < 2 {
        return Err(Error::invalid(
            "level count",
            format!("{n_levels} levels; need at least 2"),
        ));
    }
    let positions = genes(case, player);
    let count = count_feasible(positions.len(), n_levels, gamma);
    if count > u128::from(cap) {
        return Err(Error::Capacity { player, count, cap });
    }
    let top = n_levels - 1;
    let budget = max_level_sum(positions.len(), top, gamma);
    let mut out = Vec::with_capacity(count as usize);
    let mut levels = vec![0u8; case.n_loads()];
    fill(&positions, 0, budget, top, &mut levels, n_levels, &mut out);
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

fn fill(
    positions: &[usize],
    depth: usize,
    remaining: u32,
    top: u8,
    levels: &mut Vec<u8>,
    n_levels: u8,
    out: &mut Vec<Action>,
) {
    if depth == positions.len() {
        out.push(Action::from_levels_unchecked(levels.clone(), n_levels));
        return;
    }
    let k = positions[depth];
    for l in 0..=top {
        if u32::from(l) > remaining {
            break;
        }
        levels[k] = l;
        fill(
            positions,
            depth + 1,
            remaining - u32::from(l),
            top,
            levels,
            n_levels,
            out,
        );
    }
    levels[k] = 0;
}
