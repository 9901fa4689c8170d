//! Program initialisation and variation.
//!
//! Crossover only cuts between whole instructions. Mutation may rewrite a
//! single field inside an instruction, so it can act below the instruction
//! boundary.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::program::{Instruction, Operand, Program, Shape};
use super::EvolutionConfig;

fn random_operand<R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Operand {
    let mut kinds = [0u8; 3];
    let mut n = 0;
    for (kind, count) in [(0u8, shape.n_calc), (1, shape.n_inputs), (2, shape.n_consts)] {
        if count > 0 {
            kinds[n] = kind;
            n += 1;
        }
    }
    match kinds[rng.random_range(0..n)] {
        0 => Operand::Calc(rng.random_range(0..shape.n_calc) as u16),
        1 => Operand::Input(rng.random_range(0..shape.n_inputs) as u16),
        _ => Operand::Const(rng.random_range(0..shape.n_consts) as u16),
    }
}

fn random_instruction<R: Rng + ?Sized>(
    config: &EvolutionConfig,
    shape: &Shape,
    rng: &mut R,
) -> Instruction {
    Instruction::new(
        config.opcodes[rng.random_range(0..config.opcodes.len())],
        rng.random_range(0..shape.n_calc) as u8,
        random_operand(shape, rng),
        random_operand(shape, rng),
    )
}

/// A fresh program whose length is uniform in `[min_init, max_init]`
/// (capped at `max_size`) with a uniformly drawn constant pool.
pub fn random_program<R: Rng + ?Sized>(
    config: &EvolutionConfig,
    n_inputs: usize,
    rng: &mut R,
) -> Program {
    let shape = config.shape(n_inputs);
    let hi = config.max_init.min(config.max_size);
    let lo = config.min_init.min(hi);
    let len = rng.random_range(lo..=hi);
    let (cl, ch) = config.constant_range;
    let constants = (0..config.n_constants)
        .map(|_| if cl < ch { rng.random_range(cl..ch) } else { cl })
        .collect();
    let code = (0..len).map(|_| random_instruction(config, &shape, rng)).collect();
    Program {
        code,
        constants,
        n_calc: shape.n_calc,
        n_inputs,
    }
}

/// Swaps `p1[s1.0..s1.1]` with `p2[s2.0..s2.1]`.
pub fn crossover_at(
    p1: &Program,
    p2: &Program,
    s1: (usize, usize),
    s2: (usize, usize),
) -> (Program, Program) {
    let splice = |base: &Program, seg: (usize, usize), donor: &Program, dseg: (usize, usize)| {
        let mut code = Vec::with_capacity(base.len() - (seg.1 - seg.0) + (dseg.1 - dseg.0));
        code.extend_from_slice(&base.code[..seg.0]);
        code.extend_from_slice(&donor.code[dseg.0..dseg.1]);
        code.extend_from_slice(&base.code[seg.1..]);
        Program {
            code,
            ..base.clone()
        }
    };
    (splice(p1, s1, p2, s2), splice(p2, s2, p1, s1))
}

fn random_segment<R: Rng + ?Sized>(len: usize, rng: &mut R) -> (usize, usize) {
    let start = rng.random_range(0..len);
    let seg_len = rng.random_range(1..=len - start);
    (start, start + seg_len)
}

const CROSSOVER_ATTEMPTS: usize = 16;

/// Two-point crossover on instruction boundaries. Segments are resampled
/// until both children fit `[1, max_size]`; after repeated failure the
/// parents are returned unchanged.
pub fn crossover<R: Rng + ?Sized>(
    p1: &Program,
    p2: &Program,
    max_size: usize,
    rng: &mut R,
) -> (Program, Program) {
    for _ in 0..CROSSOVER_ATTEMPTS {
        let s1 = random_segment(p1.len(), rng);
        let s2 = random_segment(p2.len(), rng);
        let len1 = p1.len() - (s1.1 - s1.0) + (s2.1 - s2.0);
        let len2 = p2.len() - (s2.1 - s2.0) + (s1.1 - s1.0);
        if (1..=max_size).contains(&len1) && (1..=max_size).contains(&len2) {
            return crossover_at(p1, p2, s1, s2);
        }
    }
    (p1.clone(), p2.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    Field,
    Constant,
    Insert,
    Delete,
}

/// Applies one mutation chosen uniformly from field rewrite, constant
/// perturbation and instruction insert/delete; returns which one happened.
pub fn mutate<R: Rng + ?Sized>(
    program: &mut Program,
    config: &EvolutionConfig,
    rng: &mut R,
) -> MutationKind {
    let kind = match rng.random_range(0..3) {
        0 => MutationKind::Field,
        1 => MutationKind::Constant,
        _ if rng.random_bool(0.5) => MutationKind::Insert,
        _ => MutationKind::Delete,
    };
    let kind = match kind {
        MutationKind::Insert if program.len() >= config.max_size => MutationKind::Field,
        MutationKind::Delete if program.len() <= 1 => MutationKind::Field,
        MutationKind::Constant if program.constants.is_empty() => MutationKind::Field,
        k => k,
    };
    let shape = program.shape();
    match kind {
        MutationKind::Field => {
            let i = rng.random_range(0..program.len());
            let ins = &mut program.code[i];
            match rng.random_range(0..4) {
                0 => ins.op = config.opcodes[rng.random_range(0..config.opcodes.len())],
                1 => ins.dst = rng.random_range(0..shape.n_calc) as u8,
                2 => ins.src1 = random_operand(&shape, rng),
                _ => ins.src2 = random_operand(&shape, rng),
            }
        }
        MutationKind::Constant => {
            let i = rng.random_range(0..program.constants.len());
            let noise = Normal::new(0.0, config.constant_sigma)
                .expect("validated non-negative sigma")
                .sample(rng);
            program.constants[i] += noise;
        }
        MutationKind::Insert => {
            let at = rng.random_range(0..=program.len());
            let ins = random_instruction(config, &shape, rng);
            program.code.insert(at, ins);
        }
        MutationKind::Delete => {
            let at = rng.random_range(0..program.len());
            program.code.remove(at);
        }
    }
    kind
}
