//! Toroidal grid shared by all agents.
//!
//! Each cell holds at most one item and at most one agent; an agent may stand
//! on an item's cell. The pheromone field is a separate dense array that only
//! grows through [`Habitat::deposit`] and shrinks through
//! [`Habitat::evaporate`].

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type ItemId = u32;
pub type AgentId = u32;

/// The eight compass offsets, clockwise from north. `y` grows southwards.
pub const DIRECTIONS: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Cell {
    pub item: Option<ItemId>,
    pub agent: Option<AgentId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Habitat {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    pheromone: Vec<f64>,
}

impl Habitat {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::InvalidDimension(format!(
                "habitat must be at least 3x3, got {width}x{height}"
            )));
        }
        let n = width * height;
        Ok(Self {
            width,
            height,
            cells: vec![Cell::default(); n],
            pheromone: vec![0.0; n],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn index(&self, pos: Pos) -> usize {
        debug_assert!(pos.x < self.width && pos.y < self.height);
        pos.y * self.width + pos.x
    }

    #[inline]
    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(index % self.width, index / self.width)
    }

    pub fn contains(&self, pos: Pos) -> bool {
        pos.x < self.width && pos.y < self.height
    }

    /// Maps any signed coordinate pair onto the torus.
    #[inline]
    pub fn wrap(&self, x: i64, y: i64) -> Pos {
        Pos::new(
            x.rem_euclid(self.width as i64) as usize,
            y.rem_euclid(self.height as i64) as usize,
        )
    }

    #[inline]
    pub fn offset(&self, pos: Pos, dir: usize) -> Pos {
        let (dx, dy) = DIRECTIONS[dir];
        self.wrap(pos.x as i64 + dx, pos.y as i64 + dy)
    }

    /// The 8 wrapped neighbours of `pos` in N, NE, E, SE, S, SW, W, NW order.
    pub fn neighborhood8(&self, pos: Pos) -> [Pos; 8] {
        std::array::from_fn(|dir| self.offset(pos, dir))
    }

    pub fn cell(&self, pos: Pos) -> &Cell {
        &self.cells[self.index(pos)]
    }

    pub fn item_at(&self, pos: Pos) -> Option<ItemId> {
        self.cells[self.index(pos)].item
    }

    pub fn agent_at(&self, pos: Pos) -> Option<AgentId> {
        self.cells[self.index(pos)].agent
    }

    pub fn count_items_around(&self, pos: Pos) -> usize {
        self.neighborhood8(pos)
            .iter()
            .filter(|p| self.item_at(**p).is_some())
            .count()
    }

    /// Places `item` on an empty item slot.
    pub fn put_item(&mut self, pos: Pos, item: ItemId) -> Result<()> {
        let i = self.index(pos);
        if let Some(existing) = self.cells[i].item {
            return Err(Error::Precondition(format!(
                "cell ({}, {}) already holds item {existing}",
                pos.x, pos.y
            )));
        }
        self.cells[i].item = Some(item);
        Ok(())
    }

    pub fn take_item(&mut self, pos: Pos) -> Option<ItemId> {
        let i = self.index(pos);
        self.cells[i].item.take()
    }

    pub fn put_agent(&mut self, pos: Pos, agent: AgentId) -> Result<()> {
        let i = self.index(pos);
        if let Some(existing) = self.cells[i].agent {
            return Err(Error::Precondition(format!(
                "cell ({}, {}) already holds agent {existing}",
                pos.x, pos.y
            )));
        }
        self.cells[i].agent = Some(agent);
        Ok(())
    }

    pub fn take_agent(&mut self, pos: Pos) -> Option<AgentId> {
        let i = self.index(pos);
        self.cells[i].agent.take()
    }

    pub fn pheromone_at(&self, pos: Pos) -> f64 {
        self.pheromone[self.index(pos)]
    }

    pub fn pheromone(&self) -> &[f64] {
        &self.pheromone
    }

    pub fn deposit(&mut self, pos: Pos, amount: f64) -> Result<()> {
        if !(amount >= 0.0) || !amount.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "deposit amount must be finite and non-negative, got {amount}"
            )));
        }
        let i = self.index(pos);
        self.pheromone[i] += amount;
        Ok(())
    }

    /// Multiplies every pheromone value by `1 - rate`.
    pub fn evaporate(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "evaporation rate must lie in [0, 1), got {rate}"
            )));
        }
        let keep = 1.0 - rate;
        self.pheromone.iter_mut().for_each(|p| *p *= keep);
        Ok(())
    }

    pub fn items_on_grid(&self) -> usize {
        self.cells.iter().filter(|c| c.item.is_some()).count()
    }

    /// All `(pos, item)` pairs in row-major order.
    pub fn occupied(&self) -> impl Iterator<Item = (Pos, ItemId)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.item.map(|item| (self.pos_of(i), item)))
    }

    /// Snapshot CSV: `x,y,item_id,class_label`, one row per occupied cell in
    /// row-major order. An unknown label is written as an empty field.
    pub fn to_csv(&self, label_of: impl Fn(ItemId) -> Option<u32>) -> String {
        let mut out = String::from("x,y,item_id,class_label\n");
        for (pos, item) in self.occupied() {
            let label = label_of(item).map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", pos.x, pos.y, item, label);
        }
        out
    }

    /// Binary (P5) PGM of the pheromone field, linearly scaled so the maximum
    /// maps to 255. An all-zero field renders black.
    pub fn pheromone_pgm(&self) -> Vec<u8> {
        let max = self.pheromone.iter().cloned().fold(0.0_f64, f64::max);
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pheromone.iter().map(|&p| {
            if max > 0.0 {
                (p / max * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        }));
        out
    }

    pub fn write_pheromone_pgm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.pheromone_pgm())
            .map_err(|e| Error::io(path, e))
    }
}
