//! The ACLUSTER driver and its measurements.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::habitat::{AgentId, Habitat, ItemId, Pos};
use crate::item::DataItem;
use crate::swarm::{self, AntAgent, AntParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ColonyConfig {
    pub width: usize,
    pub height: usize,
    pub n_ants: usize,
    pub t_max: u64,
    pub params: AntParams,
    pub seed: u64,
    /// Snapshot at step 0 and every multiple of this up to `t_max`.
    pub snapshot_every: Option<u64>,
    /// Additional explicit snapshot steps.
    pub snapshot_at: Vec<u64>,
    pub entropy_block: usize,
    /// Item conservation is audited every this many steps.
    pub conservation_every: u64,
}

impl ColonyConfig {
    /// Grid and ant count sized for `n_items` with the default density rules.
    pub fn for_items(n_items: usize) -> Self {
        let side = default_side(n_items);
        Self {
            width: side,
            height: side,
            n_ants: default_ants(side * side),
            t_max: 1_000_000,
            params: AntParams::default(),
            seed: 0,
            snapshot_every: None,
            snapshot_at: Vec::new(),
            entropy_block: 3,
            conservation_every: 10_000,
        }
    }

    pub fn validate(&self, n_items: usize) -> Result<()> {
        self.params.validate()?;
        if self.width < 3 || self.height < 3 {
            return Err(Error::Config(format!(
                "grid must be at least 3x3, got {}x{}",
                self.width, self.height
            )));
        }
        if n_items == 0 {
            return Err(Error::Config("no items to cluster".into()));
        }
        let cells = self.width * self.height;
        if n_items > cells || self.n_ants > cells - n_items {
            return Err(Error::Config(format!(
                "{} items and {} ants do not fit a {}x{} grid",
                n_items, self.n_ants, self.width, self.height
            )));
        }
        if self.t_max < 1 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        if self.entropy_block == 0 {
            return Err(Error::Config("entropy block must be positive".into()));
        }
        if self.snapshot_every == Some(0) || self.conservation_every == 0 {
            return Err(Error::Config("checkpoint intervals must be positive".into()));
        }
        Ok(())
    }
}

/// Grid side giving roughly four cells per item.
pub fn default_side(n_items: usize) -> usize {
    ((2.0 * (n_items as f64).sqrt()).ceil() as usize).max(3)
}

/// Ant count at a density of 0.023 ants per cell.
pub fn default_ants(cells: usize) -> usize {
    // 23/1000 in integer arithmetic avoids 0.023 * 1000 rounding up.
    (cells * 23).div_ceil(1000)
}

/// Steps at which entropy is recorded: 0, `ceil(10^(k/4))` for k = 0, 1, ...
/// and `t_max`.
pub fn entropy_checkpoints(t_max: u64) -> Vec<u64> {
    let mut steps = vec![0];
    for k in 0.. {
        let step = if k % 4 == 0 {
            10u64.checked_pow(k / 4)
        } else {
            Some(10f64.powf(k as f64 / 4.0).ceil() as u64)
        };
        match step {
            Some(s) if s <= t_max => steps.push(s),
            _ => break,
        }
    }
    steps.push(t_max);
    steps.dedup();
    steps
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub csv: String,
    pub pheromone_pgm: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConservationCheck {
    pub step: u64,
    pub on_grid: usize,
    pub carried: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// Final grid position of every item, indexed by item id.
    pub placements: Vec<Pos>,
    pub entropy_trace: Vec<(u64, f64)>,
    pub snapshots: Vec<Snapshot>,
    pub conservation: Vec<ConservationCheck>,
    pub habitat: Habitat,
    pub seed: u64,
}

impl SimulationResult {
    pub fn entropy_csv(&self) -> String {
        let mut out = String::from("step,entropy\n");
        for (step, e) in &self.entropy_trace {
            let _ = writeln!(out, "{step},{e}");
        }
        out
    }
}

/// A live simulation. [`run`] drives one to completion; the struct is public
/// so callers can single-step and inspect it.
pub struct Colony<'a> {
    config: ColonyConfig,
    items: &'a [DataItem],
    habitat: Habitat,
    agents: Vec<AntAgent>,
    rng: ChaCha8Rng,
    step: u64,
}

impl<'a> Colony<'a> {
    /// Scatters items and agents uniformly at random.
    pub fn new(config: ColonyConfig, items: &'a [DataItem]) -> Result<Self> {
        config.validate(items.len())?;
        if let Some(f) = items.first().map(|i| i.features.len()) {
            if f == 0 || items.iter().any(|i| i.features.len() != f) {
                return Err(Error::InvalidArgument(
                    "items must share a non-empty feature length".into(),
                ));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut habitat = Habitat::new(config.width, config.height)?;
        let mut cells: Vec<usize> = (0..habitat.n_cells()).collect();
        cells.shuffle(&mut rng);
        for (id, &cell) in cells.iter().take(items.len()).enumerate() {
            habitat.put_item(habitat.pos_of(cell), id as ItemId)?;
        }
        cells.shuffle(&mut rng);
        let mut agents = Vec::with_capacity(config.n_ants);
        for (id, &cell) in cells.iter().take(config.n_ants).enumerate() {
            let pos = habitat.pos_of(cell);
            habitat.put_agent(pos, id as AgentId)?;
            agents.push(AntAgent::new(id as AgentId, pos, rng.random_range(0..8)));
        }
        Ok(Self {
            config,
            items,
            habitat,
            agents,
            rng,
            step: 0,
        })
    }

    pub fn habitat(&self) -> &Habitat {
        &self.habitat
    }

    pub fn agents(&self) -> &[AntAgent] {
        &self.agents
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One sweep: every agent acts in index order, then the field evaporates.
    pub fn sweep(&mut self) -> Result<()> {
        let params = &self.config.params;
        for agent in &mut self.agents {
            let on_item = self.habitat.item_at(agent.pos).is_some();
            match (agent.is_laden(), on_item) {
                (false, true) => {
                    swarm::try_pick(agent, &mut self.habitat, self.items, params, &mut self.rng)?;
                }
                (true, false) => {
                    swarm::try_drop(agent, &mut self.habitat, self.items, params, &mut self.rng)?;
                }
                _ => {}
            }
            swarm::step_move(agent, &mut self.habitat, params, &mut self.rng);
            let n = self.habitat.count_items_around(agent.pos);
            self.habitat.deposit(agent.pos, swarm::deposit_amount(n, params))?;
        }
        self.habitat.evaporate(params.evaporation)?;
        self.step += 1;
        Ok(())
    }

    /// Drops every carried item on the nearest item-free cell, scanning
    /// square rings outward from the agent.
    pub fn force_drop(&mut self) -> Result<()> {
        for agent in &mut self.agents {
            let Some(item) = agent.carrying else { continue };
            let target = nearest_free_cell(&self.habitat, agent.pos).ok_or_else(|| {
                Error::Invariant("no free cell left for a carried item".into())
            })?;
            self.habitat.put_item(target, item)?;
            agent.carrying = None;
        }
        Ok(())
    }

    pub fn carried(&self) -> usize {
        self.agents.iter().filter(|a| a.is_laden()).count()
    }

    fn audit(&self) -> Result<ConservationCheck> {
        let check = ConservationCheck {
            step: self.step,
            on_grid: self.habitat.items_on_grid(),
            carried: self.carried(),
        };
        if check.on_grid + check.carried != self.items.len() {
            return Err(Error::Invariant(format!(
                "item conservation broken at step {}: {} on grid + {} carried != {}",
                check.step,
                check.on_grid,
                check.carried,
                self.items.len()
            )));
        }
        Ok(check)
    }

    fn snapshot(&self) -> Snapshot {
        snapshot(&self.habitat, self.items, self.step)
    }

    fn wants_snapshot(&self, step: u64) -> bool {
        self.config.snapshot_every.is_some_and(|every| step.is_multiple_of(every))
            || self.config.snapshot_at.contains(&step)
    }

    /// Runs to `t_max` and collects traces, snapshots and final placements.
    pub fn run_to_end(mut self) -> Result<SimulationResult> {
        let t_max = self.config.t_max;
        let block = self.config.entropy_block;
        let checkpoints = entropy_checkpoints(t_max);
        let mut next_checkpoint = 0;
        let mut entropy_trace = Vec::with_capacity(checkpoints.len());
        let mut snapshots = Vec::new();
        let mut conservation = vec![self.audit()?];

        if checkpoints[0] == 0 {
            entropy_trace.push((0, spatial_entropy(&self.habitat, block)?));
            next_checkpoint = 1;
        }
        if self.wants_snapshot(0) {
            snapshots.push(self.snapshot());
        }
        while self.step < t_max {
            self.sweep()?;
            let t = self.step;
            if t == t_max {
                self.force_drop()?;
            }
            if t.is_multiple_of(self.config.conservation_every) || t == t_max {
                conservation.push(self.audit()?);
            }
            if next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t {
                entropy_trace.push((t, spatial_entropy(&self.habitat, block)?));
                next_checkpoint += 1;
            }
            if self.wants_snapshot(t) {
                snapshots.push(self.snapshot());
            }
        }

        let mut placements = vec![Pos::new(0, 0); self.items.len()];
        let mut seen = vec![false; self.items.len()];
        for (pos, item) in self.habitat.occupied() {
            placements[item as usize] = pos;
            seen[item as usize] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invariant("an item is missing from the final grid".into()));
        }
        Ok(SimulationResult {
            placements,
            entropy_trace,
            snapshots,
            conservation,
            habitat: self.habitat,
            seed: self.config.seed,
        })
    }
}

pub fn run(config: &ColonyConfig, items: &[DataItem]) -> Result<SimulationResult> {
    Colony::new(config.clone(), items)?.run_to_end()
}

fn nearest_free_cell(habitat: &Habitat, origin: Pos) -> Option<Pos> {
    let max_r = habitat.width().max(habitat.height()) as i64;
    for r in 0..=max_r {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs().max(dy.abs()) != r {
                    continue;
                }
                let p = habitat.wrap(origin.x as i64 + dx, origin.y as i64 + dy);
                if habitat.item_at(p).is_none() {
                    return Some(p);
                }
            }
        }
    }
    None
}

/// Shannon entropy (natural log) of item counts over `block`-sided tiles;
/// tiles on the right and bottom edges may be truncated.
pub fn spatial_entropy(habitat: &Habitat, block: usize) -> Result<f64> {
    if block == 0 {
        return Err(Error::InvalidArgument("entropy block must be positive".into()));
    }
    let tiles_x = habitat.width().div_ceil(block);
    let tiles_y = habitat.height().div_ceil(block);
    let mut counts = vec![0usize; tiles_x * tiles_y];
    let mut total = 0usize;
    for (pos, _) in habitat.occupied() {
        counts[(pos.y / block) * tiles_x + pos.x / block] += 1;
        total += 1;
    }
    if total == 0 {
        return Ok(0.0);
    }
    let total = total as f64;
    Ok(-counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// Cluster id per item, indexed by item id.
    pub labels: Vec<usize>,
    pub n_clusters: usize,
}

impl ClusterAssignment {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("item_id,cluster_id\n");
        for (item, c) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "{item},{c}");
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of item-holding cells, linking any two within
/// toroidal Chebyshev distance `link_radius`.
///
/// Cluster ids are ordered by descending size, ties broken by the smallest
/// member position in `(x, y)` order. Item ids on the grid must be exactly
/// `0..m`.
pub fn extract_clusters(habitat: &Habitat, link_radius: usize) -> Result<ClusterAssignment> {
    if link_radius == 0 {
        return Err(Error::InvalidArgument("link radius must be positive".into()));
    }
    let occupied: Vec<(Pos, ItemId)> = habitat.occupied().collect();
    if occupied.is_empty() {
        return Err(Error::Precondition("no items on the grid".into()));
    }
    let m = occupied.len();
    let mut slot_of_cell: HashMap<usize, usize> = HashMap::with_capacity(m);
    for (slot, (pos, _)) in occupied.iter().enumerate() {
        slot_of_cell.insert(habitat.index(*pos), slot);
    }
    let r = link_radius as i64;
    let mut sets = DisjointSet::new(m);
    for (slot, (pos, _)) in occupied.iter().enumerate() {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let q = habitat.wrap(pos.x as i64 + dx, pos.y as i64 + dy);
                if let Some(&other) = slot_of_cell.get(&habitat.index(q)) {
                    sets.union(slot, other);
                }
            }
        }
    }

    // root -> (size, smallest member)
    let mut components: HashMap<usize, (usize, Pos)> = HashMap::new();
    for (slot, (pos, _)) in occupied.iter().enumerate() {
        let root = sets.find(slot);
        let entry = components.entry(root).or_insert((0, *pos));
        entry.0 += 1;
        entry.1 = entry.1.min(*pos);
    }
    let mut order: Vec<(usize, usize, Pos)> = components
        .into_iter()
        .map(|(root, (size, min))| (root, size, min))
        .collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let id_of_root: HashMap<usize, usize> = order
        .iter()
        .enumerate()
        .map(|(id, (root, _, _))| (*root, id))
        .collect();

    let mut labels = vec![usize::MAX; m];
    for (slot, (_, item)) in occupied.iter().enumerate() {
        let item = *item as usize;
        if item >= m {
            return Err(Error::InvalidArgument(format!(
                "item ids on the grid are not contiguous: found {item} with {m} items"
            )));
        }
        labels[item] = id_of_root[&sets.find(slot)];
    }
    Ok(ClusterAssignment {
        labels,
        n_clusters: order.len(),
    })
}

/// Size-weighted mean of each cluster's majority-class fraction.
pub fn purity(assignment: &ClusterAssignment, labels: &[Option<u32>]) -> Result<f64> {
    if labels.len() != assignment.labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} assigned items",
            labels.len(),
            assignment.labels.len()
        )));
    }
    let mut counts: Vec<HashMap<u32, usize>> = vec![HashMap::new(); assignment.n_clusters];
    for (item, (&cluster, label)) in assignment.labels.iter().zip(labels).enumerate() {
        let label = label.ok_or_else(|| {
            Error::InvalidArgument(format!("item {item} has no true class label"))
        })?;
        *counts[cluster].entry(label).or_default() += 1;
    }
    let majority: usize = counts
        .iter()
        .map(|c| c.values().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / assignment.labels.len() as f64)
}

pub fn snapshot(habitat: &Habitat, items: &[DataItem], step: u64) -> Snapshot {
    Snapshot {
        step,
        csv: habitat.to_csv(|id| items.get(id as usize).and_then(|i| i.true_label)),
        pheromone_pgm: habitat.pheromone_pgm(),
    }
}
