//! Bidirectional co-evolution of attacker and defender populations.
//!
//! Each generation the defenders are scored against their best response
//! inside the attacker population. Attackers are scored against the
//! best-scoring defenders: by their worst utility over all defenders tied
//! for the top score, so a single rotating incumbent cannot purge attacks
//! that succeed against the other equally good defenses. Both populations then reproduce by
//! roulette selection, single-point crossover and per-gene reset mutation;
//! feasible children join their parents and the best `S` survive. When the
//! loop stops, backward induction over the surviving action sets picks the
//! reported strategy pair.
//!
//! Random draws come from one ChaCha8 stream in a fixed order: initial
//! attackers, initial defenders, then per generation the attacker
//! reproduction followed by the defender reproduction. Within a
//! reproduction all selection draws come first, then one crossover coin
//! (and cut point when crossing) per parent pair, then mutation coins gene
//! by gene, each gene visiting the children in order.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cbbi::{select_best, PayoffTable, Response, UTILITY_TOL};
use crate::equilibrium::{EquilibriumResult, Metadata, Method, TraceRow};
use crate::error::{Error, Result};
use crate::game::{genes, within_budget, Action, Game, Player};
use crate::par::par_map;

const ROULETTE_EPS: f64 = 1e-6;
const MAX_REJECTIONS: usize = 1000;
/// Fitness resolution used when ranking survivors.
const RANK_QUANTUM: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub pop_a: usize,
    pub pop_d: usize,
    pub p_c: f64,
    pub p_m: f64,
    pub generations: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            pop_a: 30,
            pop_d: 20,
            p_c: 0.85,
            p_m: 0.05,
            generations: 30,
            seed: 42,
        }
    }
}

impl GaParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [("S_a", self.pop_a), ("S_d", self.pop_d)] {
            if s == 0 || s % 2 != 0 {
                return Err(Error::invalid("even population sizes", format!("{name} = {s}")));
            }
        }
        for (name, p) in [("P_c", self.p_c), ("P_m", self.p_m)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid("probabilities in (0, 1]", format!("{name} = {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub action: Action,
    pub fitness: f64,
    pub cost: f64,
    /// Generation in which this action first appeared in the population.
    pub first_seen: usize,
}

impl Individual {
    fn new(action: Action, gamma: f64, first_seen: usize) -> Self {
        Individual {
            cost: action.cost(gamma),
            action,
            fitness: f64::NAN,
            first_seen,
        }
    }
}

/// Uniform draw from the affordable level vectors supported on `positions`.
///
/// Tries rejection sampling from the full lattice first; when the feasible
/// set is too thin for that, draws exactly by counting completions.
fn sample_feasible(rng: &mut ChaCha8Rng, positions: &[usize], n_loads: usize, n_levels: u8, gamma: f64) -> Action {
    let top = n_levels - 1;
    let mut levels = vec![0u8; n_loads];
    for _ in 0..MAX_REJECTIONS {
        for &k in positions {
            levels[k] = rng.random_range(0..n_levels);
        }
        let sum: u32 = levels.iter().map(|&l| u32::from(l)).sum();
        if within_budget(sum, top, gamma) {
            return Action::from_levels_unchecked(levels, n_levels);
        }
    }
    let full = positions.len() as u32 * u32::from(top);
    let budget = (0..=full).rev().find(|&s| within_budget(s, top, gamma)).unwrap_or(0) as usize;
    // ways[r][b]: vectors over r genes with level sum at most b
    let mut ways = vec![vec![1u128; budget + 1]];
    for r in 1..=positions.len() {
        let prev = &ways[r - 1];
        let row = (0..=budget)
            .map(|b| (0..=usize::from(top).min(b)).fold(0u128, |acc, l| acc.saturating_add(prev[b - l])))
            .collect();
        ways.push(row);
    }
    let mut remaining = budget;
    levels.iter_mut().for_each(|l| *l = 0);
    for (i, &k) in positions.iter().enumerate() {
        let rest = &ways[positions.len() - i - 1];
        let total = ways[positions.len() - i][remaining];
        let mut pick = rng.random_range(0..total);
        for l in 0..=usize::from(top).min(remaining) {
            let w = rest[remaining - l];
            if pick < w {
                levels[k] = l as u8;
                remaining -= l;
                break;
            }
            pick -= w;
        }
    }
    Action::from_levels_unchecked(levels, n_levels)
}

/// Attacker utilities cached by strategy pair.
#[derive(Debug)]
struct Evaluator<'g> {
    game: &'g Game,
    cache: HashMap<(Action, Action), f64>,
}

impl<'g> Evaluator<'g> {
    fn new(game: &'g Game) -> Self {
        Evaluator {
            game,
            cache: HashMap::new(),
        }
    }

    fn evaluations(&self) -> u64 {
        self.cache.len() as u64
    }

    /// `u[j][i] = U^a(attacks[i], defenses[j])`.
    fn matrix(&mut self, attacks: &[&Action], defenses: &[&Action]) -> Vec<Vec<f64>> {
        let mut missing = Vec::new();
        let mut seen = HashSet::new();
        for &d in defenses {
            for &a in attacks {
                let key = (a.clone(), d.clone());
                if !self.cache.contains_key(&key) && seen.insert(key.clone()) {
                    missing.push(key);
                }
            }
        }
        let payoff = self.game.payoff();
        let values = par_map(&missing, |(a, d)| payoff.attacker_utility(a, d));
        self.cache.extend(missing.into_iter().zip(values));
        defenses
            .iter()
            .map(|&d| attacks.iter().map(|&a| self.cache[&(a.clone(), d.clone())]).collect())
            .collect()
    }
}

/// Within-population best response of the attackers to each defense:
/// `(attacker index, attacker utility)` per defense.
fn responses(u: &[Vec<f64>], attacks: &[&Action]) -> Vec<(usize, f64)> {
    u.iter()
        .map(|row| {
            select_best(attacks.iter().zip(row).enumerate().map(|(i, (&a, &v))| (i, a, v)))
                .expect("attacker population is non-empty")
        })
        .collect()
}

/// Co-evolution state between generations.
#[derive(Debug)]
pub struct Coevolution<'g> {
    game: &'g Game,
    params: GaParams,
    rng: ChaCha8Rng,
    eval: Evaluator<'g>,
    seen_a: HashMap<Action, usize>,
    seen_d: HashMap<Action, usize>,
    attackers: Vec<Individual>,
    defenders: Vec<Individual>,
    incumbent: usize,
    /// Defenders whose score ties the incumbent's.
    tied: Vec<usize>,
    generation: usize,
    trace: Vec<TraceRow>,
}

impl<'g> Coevolution<'g> {
    /// Draws the initial populations.
    pub fn new(game: &'g Game, params: GaParams) -> Result<Self> {
        params.validate()?;
        let cfg = game.config();
        let case = game.case();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let ga = genes(case, Player::Attacker);
        let gd = genes(case, Player::Defender);
        let attackers: Vec<Individual> = (0..params.pop_a)
            .map(|_| {
                let a = sample_feasible(&mut rng, &ga, case.n_loads(), cfg.attack_levels, cfg.gamma_a);
                Individual::new(a, cfg.gamma_a, 0)
            })
            .collect();
        let defenders: Vec<Individual> = (0..params.pop_d)
            .map(|_| {
                let d = sample_feasible(&mut rng, &gd, case.n_loads(), cfg.defense_levels, cfg.gamma_d);
                Individual::new(d, cfg.gamma_d, 0)
            })
            .collect();
        let seen = |pop: &[Individual]| pop.iter().map(|x| (x.action.clone(), 0)).collect();
        let mut evo = Coevolution {
            game,
            rng,
            eval: Evaluator::new(game),
            seen_a: seen(&attackers),
            seen_d: seen(&defenders),
            attackers,
            defenders,
            incumbent: 0,
            tied: Vec::new(),
            generation: 0,
            trace: Vec::new(),
            params,
        };
        evo.evaluate();
        Ok(evo)
    }

    pub fn attackers(&self) -> &[Individual] {
        &self.attackers
    }

    pub fn defenders(&self) -> &[Individual] {
        &self.defenders
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    /// Index of the best defender of the current generation.
    pub fn incumbent(&self) -> usize {
        self.incumbent
    }

    /// Assigns fitness to both populations and records a trace row.
    fn evaluate(&mut self) {
        let attacks: Vec<&Action> = self.attackers.iter().map(|x| &x.action).collect();
        let defenses: Vec<&Action> = self.defenders.iter().map(|x| &x.action).collect();
        let u = self.eval.matrix(&attacks, &defenses);
        for (d, (_, ua)) in self.defenders.iter_mut().zip(responses(&u, &attacks)) {
            d.fitness = -ua;
        }
        let (best, _) = select_best(
            self.defenders
                .iter()
                .enumerate()
                .map(|(j, d)| (j, &d.action, d.fitness)),
        )
        .expect("defender population is non-empty");
        self.incumbent = best;
        let top = self.defenders[best].fitness;
        self.tied = (0..self.defenders.len())
            .filter(|&j| self.defenders[j].fitness >= top - UTILITY_TOL)
            .collect();
        for (i, a) in self.attackers.iter_mut().enumerate() {
            a.fitness = self.tied.iter().map(|&j| u[j][i]).fold(f64::INFINITY, f64::min);
        }
        let best_fit_a = self
            .attackers
            .iter()
            .map(|x| x.fitness)
            .fold(f64::NEG_INFINITY, f64::max);
        let best_fit_d = self.defenders[best].fitness;
        self.trace.push(TraceRow {
            generation: self.generation,
            best_fit_a,
            best_fit_d,
            u_attacker_of_incumbent: -best_fit_d,
        });
    }

    /// Both populations consist of a single repeated action.
    pub fn converged(&self) -> bool {
        let uniform = |pop: &[Individual]| pop.windows(2).all(|w| w[0].action == w[1].action);
        uniform(&self.attackers) && uniform(&self.defenders)
    }

    /// One round of reproduction and survivor selection, then re-evaluation.
    pub fn step(&mut self) {
        let cfg = self.game.config().clone();
        let case = self.game.case();
        let next = self.generation + 1;

        let children_a = reproduce(
            &mut self.rng,
            &self.attackers,
            &genes(case, Player::Attacker),
            cfg.attack_levels,
            cfg.gamma_a,
            &self.params,
        );
        let children_d = reproduce(
            &mut self.rng,
            &self.defenders,
            &genes(case, Player::Defender),
            cfg.defense_levels,
            cfg.gamma_d,
            &self.params,
        );

        // children are scored in the context their parents were scored in
        let tied: Vec<Action> = self.tied.iter().map(|&j| self.defenders[j].action.clone()).collect();
        let tied_refs: Vec<&Action> = tied.iter().collect();
        let child_refs: Vec<&Action> = children_a.iter().collect();
        let ua = self.eval.matrix(&child_refs, &tied_refs);
        let worst: Vec<f64> = (0..children_a.len())
            .map(|i| ua.iter().map(|row| row[i]).fold(f64::INFINITY, f64::min))
            .collect();
        let mut merged_a = self.attackers.clone();
        for (a, &u) in children_a.into_iter().zip(&worst) {
            let first = *self.seen_a.entry(a.clone()).or_insert(next);
            let mut ind = Individual::new(a, cfg.gamma_a, first);
            ind.fitness = u;
            merged_a.push(ind);
        }

        let attacks: Vec<&Action> = self.attackers.iter().map(|x| &x.action).collect();
        let child_refs: Vec<&Action> = children_d.iter().collect();
        let ud = self.eval.matrix(&attacks, &child_refs);
        let resp = responses(&ud, &attacks);
        let mut merged_d = self.defenders.clone();
        for (d, (_, u)) in children_d.into_iter().zip(resp) {
            let first = *self.seen_d.entry(d.clone()).or_insert(next);
            let mut ind = Individual::new(d, cfg.gamma_d, first);
            ind.fitness = -u;
            merged_d.push(ind);
        }

        self.attackers = survivors(merged_a, self.params.pop_a);
        self.defenders = survivors(merged_d, self.params.pop_d);
        self.generation = next;
        self.evaluate();
    }

    /// Runs until convergence or the generation limit.
    pub fn run(&mut self) {
        while self.generation < self.params.generations && !self.converged() {
            self.step();
        }
    }

    /// Backward induction over the distinct surviving actions.
    pub fn finish(mut self) -> EquilibriumResult {
        let uniq = |pop: &[Individual]| {
            let mut v: Vec<Action> = pop.iter().map(|x| x.action.clone()).collect();
            v.sort();
            v.dedup();
            v
        };
        let attacks = uniq(&self.attackers);
        let defenses = uniq(&self.defenders);
        let a_refs: Vec<&Action> = attacks.iter().collect();
        let d_refs: Vec<&Action> = defenses.iter().collect();
        let values = self.eval.matrix(&a_refs, &d_refs).concat();
        let table = PayoffTable::from_values(attacks, defenses, values);
        let cfg = self.game.config();
        let s = table
            .solve(cfg.gamma_a, cfg.gamma_d)
            .expect("populations hold only feasible actions");
        EquilibriumResult::evaluate(
            Method::Bpega,
            self.game,
            table.attacks()[s.attack].clone(),
            table.defenses()[s.defense].clone(),
            Metadata {
                seed: Some(self.params.seed),
                generations: Some(self.generation),
                evaluations: Some(self.eval.evaluations()),
                trace: std::mem::take(&mut self.trace),
                ..Metadata::default()
            },
        )
    }
}

fn roulette(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let total = *cumulative.last().expect("non-empty population");
    let r = rng.random::<f64>() * total;
    cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1)
}

/// Feasible children of one population, in birth order.
fn reproduce(
    rng: &mut ChaCha8Rng,
    pop: &[Individual],
    positions: &[usize],
    n_levels: u8,
    gamma: f64,
    params: &GaParams,
) -> Vec<Action> {
    let min = pop.iter().map(|x| x.fitness).fold(f64::INFINITY, f64::min);
    let mut acc = 0.0;
    let cumulative: Vec<f64> = pop
        .iter()
        .map(|x| {
            acc += x.fitness - min + ROULETTE_EPS;
            acc
        })
        .collect();
    let parents: Vec<usize> = (0..pop.len()).map(|_| roulette(rng, &cumulative)).collect();

    let mut children: Vec<Vec<u8>> = Vec::with_capacity(pop.len());
    for pair in parents.chunks(2) {
        let mut c1 = pop[pair[0]].action.levels().to_vec();
        let mut c2 = pop[pair[1]].action.levels().to_vec();
        if rng.random::<f64>() < params.p_c && positions.len() >= 2 {
            let cut = rng.random_range(1..positions.len());
            for &k in &positions[cut..] {
                std::mem::swap(&mut c1[k], &mut c2[k]);
            }
        }
        children.push(c1);
        children.push(c2);
    }
    for &k in positions {
        for child in children.iter_mut() {
            if rng.random::<f64>() < params.p_m {
                child[k] = rng.random_range(0..n_levels);
            }
        }
    }
    let top = n_levels - 1;
    children
        .into_iter()
        .filter(|c| within_budget(c.iter().map(|&l| u32::from(l)).sum(), top, gamma))
        .map(|c| Action::from_levels_unchecked(c, n_levels))
        .collect()
}

/// Sorts by fitness (descending), cost, seniority and level vector; keeps `size`.
fn survivors(mut merged: Vec<Individual>, size: usize) -> Vec<Individual> {
    merged.sort_by_cached_key(|x| {
        (
            std::cmp::Reverse((x.fitness / RANK_QUANTUM).round() as i64),
            x.action.level_sum(),
            x.first_seen,
            x.action.clone(),
        )
    });
    let mut seen = HashSet::new();
    let (mut kept, spare): (Vec<_>, Vec<_>) = merged.into_iter().partition(|x| seen.insert(x.action.clone()));
    kept.extend(spare);
    kept.truncate(size);
    kept
}

/// Initial populations for `game`, seeded by `params.seed`.
pub fn init_populations(game: &Game, params: &GaParams) -> Result<(Vec<Individual>, Vec<Individual>)> {
    let evo = Coevolution::new(game, params.clone())?;
    Ok((evo.attackers, evo.defenders))
}

/// Full co-evolution followed by backward induction over the final populations.
pub fn run_bpega(game: &Game, params: &GaParams) -> Result<EquilibriumResult> {
    let mut evo = Coevolution::new(game, params.clone())?;
    evo.run();
    log::debug!(
        "bpega: {} generations, {} evaluations, converged = {}",
        evo.generation(),
        evo.eval.evaluations(),
        evo.converged()
    );
    Ok(evo.finish())
}

/// Attacker-only evolutionary search for a best response to a fixed `d`
/// under per-load cost `gamma`, for action spaces too large to enumerate.
pub fn ga_best_response(game: &Game, d: &Action, gamma: f64, params: &GaParams) -> Result<Response> {
    params.validate()?;
    let cfg = game.config();
    let case = game.case();
    let positions = genes(case, Player::Attacker);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(1);
    let mut eval = Evaluator::new(game);
    let mut seen = HashMap::new();
    let score = |eval: &mut Evaluator, actions: Vec<Action>, seen: &mut HashMap<Action, usize>, t| {
        let refs: Vec<&Action> = actions.iter().collect();
        let u = eval.matrix(&refs, &[d]).remove(0);
        actions
            .into_iter()
            .zip(u)
            .map(|(a, f)| {
                let first = *seen.entry(a.clone()).or_insert(t);
                let mut ind = Individual::new(a, gamma, first);
                ind.fitness = f;
                ind
            })
            .collect::<Vec<_>>()
    };
    let init: Vec<Action> = (0..params.pop_a)
        .map(|_| sample_feasible(&mut rng, &positions, case.n_loads(), cfg.attack_levels, gamma))
        .collect();
    let mut pop = score(&mut eval, init, &mut seen, 0);
    for t in 1..=params.generations {
        if pop.windows(2).all(|w| w[0].action == w[1].action) {
            break;
        }
        let children = reproduce(&mut rng, &pop, &positions, cfg.attack_levels, gamma, params);
        let mut merged = pop;
        merged.extend(score(&mut eval, children, &mut seen, t));
        pop = survivors(merged, params.pop_a);
    }
    let (i, u) =
        select_best(pop.iter().enumerate().map(|(i, x)| (i, &x.action, x.fitness))).expect("population is non-empty");
    Ok(Response {
        action: pop[i].action.clone(),
        u_attacker: u,
    })
}
