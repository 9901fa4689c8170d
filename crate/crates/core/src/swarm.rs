//! Per-agent kernels: pheromone-biased movement and the threshold-governed
//! pick/drop votes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::habitat::{AgentId, Habitat, ItemId, Pos};
use crate::item::DataItem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteRule {
    /// Act when `2 * sum >= n`.
    AtLeastHalf,
    /// Act when `2 * sum > n`.
    MoreThanHalf,
}

impl VoteRule {
    #[inline]
    pub fn passes(self, sum: usize, n: usize) -> bool {
        match self {
            VoteRule::AtLeastHalf => 2 * sum >= n,
            VoteRule::MoreThanHalf => 2 * sum > n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntParams {
    /// Osmotropotactic sensitivity.
    pub beta: f64,
    /// Inverse sensory capacity.
    pub delta: f64,
    /// Constant pheromone deposit per step.
    pub eta: f64,
    /// Evaporation rate per sweep.
    pub evaporation: f64,
    /// Item-count divisor of the deposit term.
    pub a: f64,
    pub k1: f64,
    pub k2: f64,
    /// Item-count response threshold.
    pub theta_items: f64,
    /// Steepness exponent of the item-count response.
    pub resp_exponent: f64,
    /// Turn weights for 0, 45, 90, 135 and 180 degrees.
    pub dir_weights: [f64; 5],
    pub d_max: f64,
    pub vote_rule: VoteRule,
}

impl Default for AntParams {
    fn default() -> Self {
        Self {
            beta: 3.5,
            delta: 0.2,
            eta: 0.07,
            evaporation: 0.015,
            a: 400.0,
            k1: 0.1,
            k2: 0.3,
            theta_items: 5.0,
            resp_exponent: 2.0,
            dir_weights: [1.0, 1.0 / 2.0, 1.0 / 4.0, 1.0 / 12.0, 1.0 / 20.0],
            d_max: 1.0,
            vote_rule: VoteRule::AtLeastHalf,
        }
    }
}

impl AntParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta", self.beta),
            ("delta", self.delta),
            ("a", self.a),
            ("k1", self.k1),
            ("k2", self.k2),
            ("theta_items", self.theta_items),
            ("resp_exponent", self.resp_exponent),
            ("d_max", self.d_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be non-negative, got {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.evaporation) {
            return Err(Error::Config(format!(
                "evaporation must lie in [0, 1), got {}",
                self.evaporation
            )));
        }
        let w = &self.dir_weights;
        if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Config("direction weights must be non-negative".into()));
        }
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::Config("at least one direction weight must be positive".into()));
        }
        if w.iter().any(|&x| x > w[0]) {
            return Err(Error::Config(
                "the straight-ahead direction weight must be the maximum".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntAgent {
    pub id: AgentId,
    pub pos: Pos,
    /// Index into [`crate::habitat::DIRECTIONS`].
    pub heading: u8,
    pub carrying: Option<ItemId>,
}

impl AntAgent {
    pub fn new(id: AgentId, pos: Pos, heading: u8) -> Self {
        debug_assert!(heading < 8);
        Self {
            id,
            pos,
            heading,
            carrying: None,
        }
    }

    pub fn is_laden(&self) -> bool {
        self.carrying.is_some()
    }
}

#[inline]
fn sensed(sigma: f64, params: &AntParams) -> f64 {
    (1.0 + sigma / (1.0 + params.delta * sigma)).powf(params.beta)
}

/// Relative attractiveness `(1 + σ/(1 + δσ))^β` of a cell with pheromone `σ`.
pub fn pheromone_weight(sigma: f64, params: &AntParams) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pheromone density must be non-negative, got {sigma}"
        )));
    }
    Ok(sensed(sigma, params))
}

/// Circular difference between two direction indices, folded into `[0, 4]`.
#[inline]
pub fn turn_between(heading: u8, dir: u8) -> usize {
    let d = (dir as i32 - heading as i32).rem_euclid(8) as usize;
    d.min(8 - d)
}

pub fn direction_weight(turn: usize, params: &AntParams) -> f64 {
    let t = turn % 8;
    params.dir_weights[t.min(8 - t)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub dir: u8,
    pub pos: Pos,
    pub prob: f64,
}

/// Unnormalised move weights for each of the 8 directions; `0.0` for cells
/// held by another agent.
fn move_weights(habitat: &Habitat, agent: &AntAgent, params: &AntParams) -> ([f64; 8], f64) {
    let mut weights = [0.0; 8];
    let mut total = 0.0;
    for (dir, w) in weights.iter_mut().enumerate() {
        let p = habitat.offset(agent.pos, dir);
        match habitat.agent_at(p) {
            Some(other) if other != agent.id => continue,
            _ => {}
        }
        let turn = turn_between(agent.heading, dir as u8);
        let dw = params.dir_weights[turn];
        if dw == 0.0 {
            continue;
        }
        *w = sensed(habitat.pheromone_at(p), params) * dw;
        total += *w;
    }
    (weights, total)
}

/// Normalised transition probabilities over the admissible neighbours.
///
/// Empty when every neighbour is held by another agent or every admissible
/// weight is zero.
pub fn transition_distribution(
    habitat: &Habitat,
    agent: &AntAgent,
    params: &AntParams,
) -> Vec<Transition> {
    let (weights, total) = move_weights(habitat, agent, params);
    if total <= 0.0 {
        return Vec::new();
    }
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(dir, &w)| Transition {
            dir: dir as u8,
            pos: habitat.offset(agent.pos, dir),
            prob: w / total,
        })
        .collect()
}

/// Samples one move; the agent stays put (heading unchanged) when no
/// neighbour is admissible.
pub fn step_move<R: Rng + ?Sized>(
    agent: &mut AntAgent,
    habitat: &mut Habitat,
    params: &AntParams,
    rng: &mut R,
) -> bool {
    let (weights, total) = move_weights(habitat, agent, params);
    if total <= 0.0 {
        return false;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (dir, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            chosen = Some(dir);
            if u < acc {
                break;
            }
        }
    }
    // Rounding can leave `u` marginally above the accumulated sum; the last
    // positive-weight direction absorbs it.
    let Some(dir) = chosen else { return false };
    let target = habitat.offset(agent.pos, dir);
    habitat.take_agent(agent.pos);
    habitat
        .put_agent(target, agent.id)
        .expect("admissible target cell is free of other agents");
    agent.pos = target;
    agent.heading = dir as u8;
    true
}

/// Root-mean-square feature difference scaled by `1/d_max`, clamped to `[0, 1]`.
pub fn normalized_distance(a: &[f64], b: &[f64], d_max: f64) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "feature vectors must have equal non-zero length, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(rms_distance(a, b, d_max))
}

#[inline]
fn rms_distance(a: &[f64], b: &[f64], d_max: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    ((sq / a.len() as f64).sqrt() / d_max).clamp(0.0, 1.0)
}

/// Response to the number of items around a site: `n^k / (n^k + θ^k)`.
pub fn chi(n: usize, params: &AntParams) -> f64 {
    let s = (n as f64).powf(params.resp_exponent);
    s / (s + params.theta_items.powf(params.resp_exponent))
}

pub fn drop_response(d: f64, params: &AntParams) -> f64 {
    let r = params.k1 / (params.k1 + d);
    r * r
}

pub fn pick_response(d: f64, params: &AntParams) -> f64 {
    let r = d / (params.k2 + d);
    r * r
}

pub fn pick_probability(chi_val: f64, eps_val: f64) -> f64 {
    (1.0 - chi_val) * eps_val
}

pub fn drop_probability(chi_val: f64, rho_val: f64) -> f64 {
    chi_val * rho_val
}

/// Pheromone laid by an agent with `n` items in its neighbourhood.
pub fn deposit_amount(n: usize, params: &AntParams) -> f64 {
    params.eta + n as f64 / params.a
}

/// One Bernoulli vote per neighbouring item; returns `(votes, n)`.
fn vote<R: Rng + ?Sized>(
    habitat: &Habitat,
    pos: Pos,
    focal: &[f64],
    items: &[DataItem],
    params: &AntParams,
    rng: &mut R,
    prob: impl Fn(f64, f64) -> f64,
) -> (usize, usize) {
    let mut neighbours = [0 as ItemId; 8];
    let mut n = 0;
    for p in habitat.neighborhood8(pos) {
        if let Some(item) = habitat.item_at(p) {
            neighbours[n] = item;
            n += 1;
        }
    }
    let chi_val = chi(n, params);
    let mut sum = 0;
    for &other in &neighbours[..n] {
        let d = rms_distance(focal, &items[other as usize].features, params.d_max);
        let p = prob(chi_val, d);
        if rng.random::<f64>() < p {
            sum += 1;
        }
    }
    (sum, n)
}

/// Pickup votes cast by the neighbours of the item at `pos`; returns
/// `(votes, n)`.
pub fn pick_tally<R: Rng + ?Sized>(
    habitat: &Habitat,
    pos: Pos,
    focal: &[f64],
    items: &[DataItem],
    params: &AntParams,
    rng: &mut R,
) -> (usize, usize) {
    vote(habitat, pos, focal, items, params, rng, |c, d| {
        pick_probability(c, pick_response(d, params))
    })
}

/// Drop votes for placing an item with features `focal` at `pos`.
pub fn drop_tally<R: Rng + ?Sized>(
    habitat: &Habitat,
    pos: Pos,
    focal: &[f64],
    items: &[DataItem],
    params: &AntParams,
    rng: &mut R,
) -> (usize, usize) {
    vote(habitat, pos, focal, items, params, rng, |c, d| {
        drop_probability(c, drop_response(d, params))
    })
}

/// Pickup attempt by an unladen agent standing on an item.
pub fn try_pick<R: Rng + ?Sized>(
    agent: &mut AntAgent,
    habitat: &mut Habitat,
    items: &[DataItem],
    params: &AntParams,
    rng: &mut R,
) -> Result<bool> {
    if agent.is_laden() {
        return Err(Error::Precondition("try_pick called on a laden agent".into()));
    }
    let Some(focal) = habitat.item_at(agent.pos) else {
        return Err(Error::Precondition("try_pick called on an empty cell".into()));
    };
    let (sum, n) = pick_tally(habitat, agent.pos, &items[focal as usize].features, items, params, rng);
    if n == 0 || params.vote_rule.passes(sum, n) {
        habitat.take_item(agent.pos);
        agent.carrying = Some(focal);
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Drop attempt by a laden agent standing on an empty cell. Never drops on
/// an isolated site.
pub fn try_drop<R: Rng + ?Sized>(
    agent: &mut AntAgent,
    habitat: &mut Habitat,
    items: &[DataItem],
    params: &AntParams,
    rng: &mut R,
) -> Result<bool> {
    let Some(carried) = agent.carrying else {
        return Err(Error::Precondition("try_drop called on an unladen agent".into()));
    };
    if habitat.item_at(agent.pos).is_some() {
        return Err(Error::Precondition("try_drop called on an occupied cell".into()));
    }
    let (sum, n) = drop_tally(habitat, agent.pos, &items[carried as usize].features, items, params, rng);
    if n >= 1 && params.vote_rule.passes(sum, n) {
        habitat.put_item(agent.pos, carried)?;
        agent.carrying = None;
        Ok(true)
    } else {
        Ok(false)
    }
}
