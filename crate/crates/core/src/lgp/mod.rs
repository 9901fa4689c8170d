//! Linear genetic programming: a portable register VM, block-aligned
//! variation operators and a steady-state evolver over migrating demes.

mod evolve;
mod program;
mod variation;

pub use evolve::{
    correlation_coefficient, evolve, fitness_rmse, migrate, tournament, Case, Deme,
    EvolutionHistory, EvolutionOutcome, HistoryRecord, TournamentLog,
};
pub use program::{
    clamp_value, Compiled, Instruction, Opcode, Operand, Program, Shape, MAX_CALC_REGISTERS,
    PROTECTED_EPS, VALUE_LIMIT,
};
pub use variation::{crossover, crossover_at, mutate, random_program, MutationKind};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub tournament_size: usize,
    pub max_tournaments: u64,
    pub mutation_freq: f64,
    pub crossover_freq: f64,
    pub n_demes: usize,
    pub max_size: usize,
    pub min_init: usize,
    pub max_init: usize,
    /// Fitness cases sampled per tournament.
    pub subset_size: usize,
    pub n_calc_registers: usize,
    pub n_constants: usize,
    pub constant_range: (f64, f64),
    /// Standard deviation of the constant perturbation mutation.
    pub constant_sigma: f64,
    pub opcodes: Vec<Opcode>,
    pub migration_interval: u64,
    pub migration_count: usize,
    pub checkpoint_interval: u64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 500,
            tournament_size: 4,
            max_tournaments: 120_000,
            mutation_freq: 0.9,
            crossover_freq: 0.8,
            n_demes: 10,
            max_size: 512,
            min_init: 4,
            max_init: 32,
            subset_size: 100,
            n_calc_registers: 8,
            n_constants: 32,
            constant_range: (-1.0, 1.0),
            constant_sigma: 0.1,
            opcodes: Opcode::ARITHMETIC.to_vec(),
            migration_interval: 1000,
            migration_count: 1,
            checkpoint_interval: 1000,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_demes == 0 || self.population_size == 0 {
            return fail("population and deme count must be positive".into());
        }
        if !self.population_size.is_multiple_of(self.n_demes) {
            return fail(format!(
                "population size {} is not divisible by {} demes",
                self.population_size, self.n_demes
            ));
        }
        if self.tournament_size < 2 || !self.tournament_size.is_multiple_of(2) {
            return fail(format!(
                "tournament size must be even and at least 2, got {}",
                self.tournament_size
            ));
        }
        if self.deme_size() < self.tournament_size {
            return fail(format!(
                "deme size {} is smaller than the tournament",
                self.deme_size()
            ));
        }
        if self.subset_size == 0 {
            return fail("subset size must be positive".into());
        }
        if self.max_size == 0 || self.min_init == 0 || self.min_init > self.max_init {
            return fail("program size bounds are inconsistent".into());
        }
        for (name, p) in [("mutation", self.mutation_freq), ("crossover", self.crossover_freq)] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} frequency must lie in [0, 1], got {p}"));
            }
        }
        if self.opcodes.is_empty() {
            return fail("the function set is empty".into());
        }
        let (lo, hi) = self.constant_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return fail("constant range is invalid".into());
        }
        if !(self.constant_sigma >= 0.0) {
            return fail("constant sigma must be non-negative".into());
        }
        if self.migration_interval == 0 || self.checkpoint_interval == 0 {
            return fail("migration and checkpoint intervals must be positive".into());
        }
        if self.n_demes > 1 && self.migration_count >= self.deme_size() {
            return fail("migration count must be smaller than the deme size".into());
        }
        Shape {
            n_calc: self.n_calc_registers,
            n_inputs: 0,
            n_consts: self.n_constants,
        }
        .validate()
    }

    pub fn deme_size(&self) -> usize {
        self.population_size / self.n_demes
    }

    pub fn shape(&self, n_inputs: usize) -> Shape {
        Shape {
            n_calc: self.n_calc_registers,
            n_inputs,
            n_consts: self.n_constants,
        }
    }
}
