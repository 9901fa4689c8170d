//! Steady-state tournaments inside demes, ring migration and the evolution
//! driver.
//!
//! Each deme owns its own random stream, and tournaments are dealt to demes
//! round-robin. Between two migration or checkpoint events the demes are
//! independent, so they run in parallel without affecting reproducibility.

use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::program::{Compiled, Program};
use super::variation::{crossover, mutate, random_program};
use super::EvolutionConfig;
use crate::config::derive_seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub inputs: Vec<f64>,
    pub target: f64,
}

impl Case {
    pub fn new(inputs: Vec<f64>, target: f64) -> Self {
        Self { inputs, target }
    }
}

fn sq_error_sum<'a>(compiled: &Compiled, regs: &mut [f64], cases: impl Iterator<Item = &'a Case>) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for c in cases {
        let e = compiled.run_unchecked(regs, &c.inputs) - c.target;
        sum += e * e;
        n += 1;
    }
    (sum, n)
}

fn check_arity(program: &Program, cases: &[Case]) -> Result<()> {
    if let Some(c) = cases.iter().find(|c| c.inputs.len() != program.n_inputs) {
        return Err(Error::Decode(format!(
            "program expects {} inputs, case has {}",
            program.n_inputs,
            c.inputs.len()
        )));
    }
    Ok(())
}

/// Root-mean-square error of `program` over `cases`.
pub fn fitness_rmse(program: &Program, cases: &[Case]) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument("no fitness cases".into()));
    }
    check_arity(program, cases)?;
    let compiled = program.compile()?;
    let mut regs = compiled.registers(program);
    let (sum, n) = sq_error_sum(&compiled, &mut regs, cases.iter());
    Ok((sum / n as f64).sqrt())
}

fn subset_rmse(program: &Program, cases: &[Case], subset: &[usize]) -> f64 {
    let compiled = Compiled::new_unchecked(program);
    let mut regs = compiled.registers(program);
    let (sum, n) = sq_error_sum(&compiled, &mut regs, subset.iter().map(|&i| &cases[i]));
    (sum / n as f64).sqrt()
}

/// Pearson product-moment correlation.
pub fn correlation_coefficient(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "series lengths {} and {} must be equal and non-zero",
            pred.len(),
            actual.len()
        )));
    }
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let ma = actual.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, a) in pred.iter().zip(actual) {
        let (dp, da) = (p - mp, a - ma);
        sxy += dp * da;
        sxx += dp * dp;
        syy += da * da;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("a series has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deme {
    pub programs: Vec<Program>,
    /// Most recent fitness of each individual (RMSE, lower is better).
    pub fitness: Vec<f64>,
}

impl Deme {
    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    /// Index of the lowest recorded fitness; ties go to the lower index.
    pub fn best(&self) -> usize {
        let mut best = 0;
        for (i, &f) in self.fitness.iter().enumerate() {
            if f < self.fitness[best] {
                best = i;
            }
        }
        best
    }

    fn ranked(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.fitness[a].total_cmp(&self.fitness[b]).then(a.cmp(&b)));
        order
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentLog {
    /// Contestants in sampling order.
    pub contestants: Vec<usize>,
    /// Subset fitness of each contestant, aligned with `contestants`.
    pub fitness: Vec<f64>,
    pub winners: Vec<usize>,
    pub losers: Vec<usize>,
}

/// One steady-state tournament: the better half of `tournament_size`
/// distinct contestants breed, and their offspring overwrite the worse half.
pub fn tournament<R: Rng + ?Sized>(
    deme: &mut Deme,
    cases: &[Case],
    config: &EvolutionConfig,
    rng: &mut R,
) -> TournamentLog {
    let k = config.tournament_size;
    let contestants = index::sample(rng, deme.len(), k).into_vec();
    let subset = index::sample(rng, cases.len(), config.subset_size.min(cases.len())).into_vec();
    let fitness: Vec<f64> = contestants
        .iter()
        .map(|&i| subset_rmse(&deme.programs[i], cases, &subset))
        .collect();
    for (&i, &f) in contestants.iter().zip(&fitness) {
        deme.fitness[i] = f;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
    let winners: Vec<usize> = order[..k / 2].iter().map(|&o| contestants[o]).collect();
    let losers: Vec<usize> = order[k / 2..].iter().map(|&o| contestants[o]).collect();

    for (pair, slots) in winners.chunks(2).zip(losers.chunks(2)) {
        let mut children = if pair.len() == 2 && rng.random_bool(config.crossover_freq) {
            let (a, b) = crossover(&deme.programs[pair[0]], &deme.programs[pair[1]], config.max_size, rng);
            vec![a, b]
        } else {
            pair.iter().map(|&w| deme.programs[w].clone()).collect()
        };
        for child in &mut children {
            if rng.random_bool(config.mutation_freq) {
                mutate(child, config, rng);
            }
        }
        for (child, &slot) in children.into_iter().zip(slots) {
            deme.fitness[slot] = subset_rmse(&child, cases, &subset);
            deme.programs[slot] = child;
        }
    }
    TournamentLog {
        contestants,
        fitness,
        winners,
        losers,
    }
}

/// Ring migration: the best `migration_count` of deme `i` are copied into
/// deme `i + 1`, each replacing a uniformly chosen individual that is not
/// the receiving deme's best. Returns the number of copies made.
pub fn migrate<R: Rng + ?Sized>(demes: &mut [Deme], config: &EvolutionConfig, rng: &mut R) -> usize {
    let d = demes.len();
    if d < 2 {
        return 0;
    }
    let emigrants: Vec<Vec<(Program, f64)>> = demes
        .iter()
        .map(|deme| {
            deme.ranked()
                .into_iter()
                .take(config.migration_count)
                .map(|i| (deme.programs[i].clone(), deme.fitness[i]))
                .collect()
        })
        .collect();
    let mut copies = 0;
    for (i, group) in emigrants.into_iter().enumerate() {
        let target = &mut demes[(i + 1) % d];
        let protected = target.best();
        let candidates: Vec<usize> = (0..target.len()).filter(|&j| j != protected).collect();
        let picks = index::sample(rng, candidates.len(), group.len().min(candidates.len()));
        for (pick, (program, fitness)) in picks.into_iter().zip(group) {
            let slot = candidates[pick];
            target.programs[slot] = program;
            target.fitness[slot] = fitness;
            copies += 1;
        }
    }
    copies
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRecord {
    pub tournament: u64,
    /// Full training RMSE of the individual with the best recorded fitness.
    pub best_rmse: f64,
    /// Mean of the recorded (subset) fitness over the whole population.
    pub mean_rmse: f64,
    pub mean_length: f64,
    pub validation_rmse: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolutionHistory {
    pub records: Vec<HistoryRecord>,
}

impl EvolutionHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tournament,best_rmse,mean_rmse,mean_length,validation_rmse\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.tournament, r.best_rmse, r.mean_rmse, r.mean_length, r.validation_rmse
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionOutcome {
    /// Program with the lowest validation RMSE seen at any checkpoint.
    pub best: Program,
    pub best_validation_rmse: f64,
    pub history: EvolutionHistory,
    pub demes: Vec<Deme>,
}

/// Seed of deme `d`'s private stream.
fn deme_seed(seed: u64, d: usize) -> u64 {
    derive_seed(seed, 1000 + d as u64)
}

pub fn evolve(config: &EvolutionConfig, train: &[Case], validation: &[Case]) -> Result<EvolutionOutcome> {
    config.validate()?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation cases must be non-empty".into(),
        ));
    }
    let n_inputs = train[0].inputs.len();
    if train.iter().chain(validation).any(|c| c.inputs.len() != n_inputs) {
        return Err(Error::InvalidArgument("fitness cases disagree on input arity".into()));
    }
    if train.iter().chain(validation).any(|c| !c.target.is_finite() || c.inputs.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidArgument("fitness cases must be finite".into()));
    }
    config.shape(n_inputs).validate()?;

    let mut rngs: Vec<ChaCha8Rng> = (0..config.n_demes)
        .map(|d| ChaCha8Rng::seed_from_u64(deme_seed(config.seed, d)))
        .collect();
    let mut migration_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 999));
    let mut demes: Vec<Deme> = rngs
        .par_iter_mut()
        .map(|rng| {
            let programs: Vec<Program> = (0..config.deme_size())
                .map(|_| random_program(config, n_inputs, rng))
                .collect();
            let all: Vec<usize> = (0..train.len()).collect();
            let fitness = programs.iter().map(|p| subset_rmse(p, train, &all)).collect();
            Deme { programs, fitness }
        })
        .collect();

    let mut history = EvolutionHistory::default();
    let mut best: Option<(Program, f64)> = None;
    checkpoint(&demes, 0, train, validation, &mut history, &mut best)?;

    let mut done = 0u64;
    let max = config.max_tournaments;
    while done < max {
        let next_migration = (done / config.migration_interval + 1) * config.migration_interval;
        let next_checkpoint = (done / config.checkpoint_interval + 1) * config.checkpoint_interval;
        let until = next_migration.min(next_checkpoint).min(max);
        let d = config.n_demes as u64;
        demes
            .par_iter_mut()
            .zip(rngs.par_iter_mut())
            .enumerate()
            .for_each(|(i, (deme, rng))| {
                // Tournament k belongs to deme k mod D.
                let first = done + ((i as u64 + d - done % d) % d);
                let mut k = first;
                while k < until {
                    tournament(deme, train, config, rng);
                    k += d;
                }
            });
        done = until;
        if done.is_multiple_of(config.migration_interval) {
            migrate(&mut demes, config, &mut migration_rng);
        }
        if done.is_multiple_of(config.checkpoint_interval) || done == max {
            checkpoint(&demes, done, train, validation, &mut history, &mut best)?;
        }
    }

    let (best, best_validation_rmse) = best.expect("the initial checkpoint always records a best");
    Ok(EvolutionOutcome {
        best,
        best_validation_rmse,
        history,
        demes,
    })
}

fn checkpoint(
    demes: &[Deme],
    tournament: u64,
    train: &[Case],
    validation: &[Case],
    history: &mut EvolutionHistory,
    best: &mut Option<(Program, f64)>,
) -> Result<()> {
    let mut leader: Option<(&Program, f64)> = None;
    let (mut fit_sum, mut len_sum, mut n) = (0.0, 0usize, 0usize);
    for deme in demes {
        for (p, &f) in deme.programs.iter().zip(&deme.fitness) {
            if leader.is_none_or(|(_, lf)| f < lf) {
                leader = Some((p, f));
            }
            fit_sum += f;
            len_sum += p.len();
            n += 1;
        }
    }
    let (leader, _) = leader.expect("population is non-empty");
    let validation_rmse = fitness_rmse(leader, validation)?;
    history.records.push(HistoryRecord {
        tournament,
        best_rmse: fitness_rmse(leader, train)?,
        mean_rmse: fit_sum / n as f64,
        mean_length: len_sum as f64 / n as f64,
        validation_rmse,
    });
    if best.as_ref().is_none_or(|(_, v)| validation_rmse < *v) {
        *best = Some((leader.clone(), validation_rmse));
    }
    Ok(())
}
