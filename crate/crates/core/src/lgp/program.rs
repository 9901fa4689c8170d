//! Register-machine genome and interpreter.
//!
//! Every instruction packs into one 32-bit block:
//!
//! ```text
//!  31   28 27   24 23          12 11           0
//! +-------+-------+--------------+--------------+
//! |opcode |  dst  |     src1     |     src2     |
//! +-------+-------+--------------+--------------+
//! ```
//!
//! An operand field is a 2-bit kind (calculation register, input, constant)
//! followed by a 10-bit index. Unary opcodes ignore `src2`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const PROTECTED_EPS: f64 = 1e-9;
pub const VALUE_LIMIT: f64 = 1e12;
pub const MAX_CALC_REGISTERS: usize = 16;
pub const MAX_OPERAND_INDEX: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    DivProtected,
    Abs,
    SqrtProtected,
    Sin,
    Cos,
}

impl Opcode {
    pub const ALL: [Opcode; 8] = [
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::DivProtected,
        Opcode::Abs,
        Opcode::SqrtProtected,
        Opcode::Sin,
        Opcode::Cos,
    ];

    pub const ARITHMETIC: [Opcode; 4] = [Opcode::Add, Opcode::Sub, Opcode::Mul, Opcode::DivProtected];

    fn code(self) -> u32 {
        self as u32
    }

    fn from_code(code: u32) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::DivProtected => "div",
            Opcode::Abs => "abs",
            Opcode::SqrtProtected => "sqrt",
            Opcode::Sin => "sin",
            Opcode::Cos => "cos",
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, Opcode::Abs | Opcode::SqrtProtected | Opcode::Sin | Opcode::Cos)
    }

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let v = match self {
            Opcode::Add => a + b,
            Opcode::Sub => a - b,
            Opcode::Mul => a * b,
            Opcode::DivProtected => {
                if b.abs() < PROTECTED_EPS {
                    1.0
                } else {
                    a / b
                }
            }
            Opcode::Abs => a.abs(),
            Opcode::SqrtProtected => a.abs().sqrt(),
            Opcode::Sin => a.sin(),
            Opcode::Cos => a.cos(),
        };
        clamp_value(v)
    }
}

impl FromStr for Opcode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Opcode::ALL
            .into_iter()
            .find(|op| op.mnemonic() == s)
            .ok_or_else(|| Error::Decode(format!("unknown opcode `{s}`")))
    }
}

#[inline]
pub fn clamp_value(v: f64) -> f64 {
    if v.is_nan() {
        VALUE_LIMIT
    } else {
        v.clamp(-VALUE_LIMIT, VALUE_LIMIT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    Calc(u16),
    Input(u16),
    Const(u16),
}

impl Operand {
    fn encode(self) -> u32 {
        let (kind, idx) = match self {
            Operand::Calc(i) => (0u32, i),
            Operand::Input(i) => (1, i),
            Operand::Const(i) => (2, i),
        };
        (kind << 10) | (idx as u32 & 0x3ff)
    }

    fn decode(bits: u32) -> Result<Self> {
        let idx = (bits & 0x3ff) as u16;
        match (bits >> 10) & 0b11 {
            0 => Ok(Operand::Calc(idx)),
            1 => Ok(Operand::Input(idx)),
            2 => Ok(Operand::Const(idx)),
            k => Err(Error::Decode(format!("invalid operand kind {k}"))),
        }
    }

    fn in_range(self, shape: &Shape) -> bool {
        match self {
            Operand::Calc(i) => (i as usize) < shape.n_calc,
            Operand::Input(i) => (i as usize) < shape.n_inputs,
            Operand::Const(i) => (i as usize) < shape.n_consts,
        }
    }

    /// Index into the flat register file `[calc | inputs | constants]`.
    fn flat(self, shape: &Shape) -> usize {
        match self {
            Operand::Calc(i) => i as usize,
            Operand::Input(i) => shape.n_calc + i as usize,
            Operand::Const(i) => shape.n_calc + shape.n_inputs + i as usize,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Calc(i) => write!(f, "r{i}"),
            Operand::Input(i) => write!(f, "i{i}"),
            Operand::Const(i) => write!(f, "c{i}"),
        }
    }
}

impl FromStr for Operand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Decode(format!("malformed operand `{s}`"));
        let (kind, idx) = s.split_at_checked(1).ok_or_else(bad)?;
        let idx: u16 = idx.parse().map_err(|_| bad())?;
        if idx as usize >= MAX_OPERAND_INDEX {
            return Err(bad());
        }
        match kind {
            "r" => Ok(Operand::Calc(idx)),
            "i" => Ok(Operand::Input(idx)),
            "c" => Ok(Operand::Const(idx)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Opcode,
    pub dst: u8,
    pub src1: Operand,
    pub src2: Operand,
}

impl Instruction {
    pub fn new(op: Opcode, dst: u8, src1: Operand, src2: Operand) -> Self {
        Self { op, dst, src1, src2 }
    }

    pub fn encode(self) -> u32 {
        (self.op.code() << 28)
            | ((self.dst as u32 & 0xf) << 24)
            | (self.src1.encode() << 12)
            | self.src2.encode()
    }

    pub fn decode(word: u32) -> Result<Self> {
        let op = Opcode::from_code(word >> 28)
            .ok_or_else(|| Error::Decode(format!("invalid opcode in {word:#010x}")))?;
        Ok(Self {
            op,
            dst: ((word >> 24) & 0xf) as u8,
            src1: Operand::decode((word >> 12) & 0xfff)?,
            src2: Operand::decode(word & 0xfff)?,
        })
    }

    fn in_range(&self, shape: &Shape) -> bool {
        (self.dst as usize) < shape.n_calc && self.src1.in_range(shape) && self.src2.in_range(shape)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "r{} = {} {} {}",
            self.dst,
            self.op.mnemonic(),
            self.src1,
            self.src2
        )
    }
}

/// Register-file dimensions shared by every program of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub n_calc: usize,
    pub n_inputs: usize,
    pub n_consts: usize,
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        if self.n_calc == 0 || self.n_calc > MAX_CALC_REGISTERS {
            return Err(Error::Config(format!(
                "calculation registers must be in 1..={MAX_CALC_REGISTERS}, got {}",
                self.n_calc
            )));
        }
        if self.n_inputs > MAX_OPERAND_INDEX || self.n_consts > MAX_OPERAND_INDEX {
            return Err(Error::Config(format!(
                "at most {MAX_OPERAND_INDEX} inputs and constants are addressable"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub code: Vec<Instruction>,
    pub constants: Vec<f64>,
    pub n_calc: usize,
    pub n_inputs: usize,
}

impl Program {
    pub fn shape(&self) -> Shape {
        Shape {
            n_calc: self.n_calc,
            n_inputs: self.n_inputs,
            n_consts: self.constants.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    /// Checks every index against the register file and the length bound.
    pub fn validate(&self, max_size: usize) -> Result<()> {
        let shape = self.shape();
        shape.validate().map_err(|e| Error::Decode(e.to_string()))?;
        if self.code.is_empty() || self.code.len() > max_size {
            return Err(Error::Decode(format!(
                "program length {} outside [1, {max_size}]",
                self.code.len()
            )));
        }
        if let Some((i, ins)) = self.code.iter().enumerate().find(|(_, ins)| !ins.in_range(&shape)) {
            return Err(Error::Decode(format!("instruction {i} `{ins}` out of range")));
        }
        if self.constants.iter().any(|c| !c.is_finite()) {
            return Err(Error::Decode("non-finite constant".into()));
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u32> {
        self.code.iter().map(|i| i.encode()).collect()
    }

    pub fn from_words(words: &[u32], constants: Vec<f64>, n_calc: usize, n_inputs: usize) -> Result<Self> {
        let code = words.iter().map(|&w| Instruction::decode(w)).collect::<Result<_>>()?;
        let p = Program { code, constants, n_calc, n_inputs };
        p.validate(usize::MAX)?;
        Ok(p)
    }

    pub fn compile(&self) -> Result<Compiled> {
        self.validate(usize::MAX)?;
        Ok(Compiled::new_unchecked(self))
    }

    /// Runs the program once on `inputs`; the output is calculation register 0.
    pub fn execute(&self, inputs: &[f64]) -> Result<f64> {
        let compiled = self.compile()?;
        let mut regs = compiled.registers(self);
        compiled.run(&mut regs, inputs)
    }

    /// Textual disassembly; [`Program::parse`] reads it back exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# antlgp program\n");
        let _ = writeln!(out, "inputs {}", self.n_inputs);
        let _ = writeln!(out, "registers {}", self.n_calc);
        let _ = writeln!(out, "constants {}", self.constants.len());
        for (i, c) in self.constants.iter().enumerate() {
            let _ = writeln!(out, "c{i} {c:?}");
        }
        let _ = writeln!(out, "code {}", self.code.len());
        for ins in &self.code {
            let _ = writeln!(out, "{ins}  # {:#010x}", ins.encode());
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut n_inputs = None;
        let mut n_calc = None;
        let mut n_consts = None;
        let mut constants = Vec::new();
        let mut code = Vec::new();
        let mut n_code = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::Decode(format!("line {}: {m}: `{raw}`", lineno + 1));
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let count = |t: &[&str]| -> Result<usize> {
                t.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| err("expected a count"))
            };
            match tokens[0] {
                "inputs" => n_inputs = Some(count(&tokens)?),
                "registers" => n_calc = Some(count(&tokens)?),
                "constants" => n_consts = Some(count(&tokens)?),
                "code" => n_code = Some(count(&tokens)?),
                t if t.starts_with('c') && tokens.len() == 2 => {
                    let idx: usize = t[1..].parse().map_err(|_| err("bad constant index"))?;
                    if idx != constants.len() {
                        return Err(err("constants must be listed in order"));
                    }
                    let v: f64 = tokens[1].parse().map_err(|_| err("bad constant value"))?;
                    constants.push(v);
                }
                t if t.starts_with('r') => {
                    if tokens.len() != 5 || tokens[1] != "=" {
                        return Err(err("expected `rD = op SRC1 SRC2`"));
                    }
                    let dst: u8 = t[1..].parse().map_err(|_| err("bad destination"))?;
                    code.push(Instruction::new(
                        tokens[2].parse()?,
                        dst,
                        tokens[3].parse()?,
                        tokens[4].parse()?,
                    ));
                }
                _ => return Err(err("unrecognised line")),
            }
        }
        let missing = |what: &str| Error::Decode(format!("missing `{what}` header"));
        let program = Program {
            code,
            constants,
            n_calc: n_calc.ok_or_else(|| missing("registers"))?,
            n_inputs: n_inputs.ok_or_else(|| missing("inputs"))?,
        };
        if n_consts != Some(program.constants.len()) {
            return Err(Error::Decode("constant count does not match header".into()));
        }
        if n_code.is_some_and(|n| n != program.code.len()) {
            return Err(Error::Decode("instruction count does not match header".into()));
        }
        program.validate(usize::MAX)?;
        Ok(program)
    }
}

#[derive(Debug, Clone, Copy)]
struct Step {
    op: Opcode,
    dst: u16,
    a: u16,
    b: u16,
}

/// A program lowered to flat register indices with structural introns
/// (instructions that cannot influence register 0) removed.
#[derive(Debug, Clone)]
pub struct Compiled {
    steps: Vec<Step>,
    shape: Shape,
}

impl Compiled {
    /// Lowers a program already known to be valid.
    pub(crate) fn new_unchecked(program: &Program) -> Self {
        let shape = program.shape();
        let mut live = [false; MAX_CALC_REGISTERS];
        live[0] = true;
        let mut keep = vec![false; program.code.len()];
        for (i, ins) in program.code.iter().enumerate().rev() {
            let dst = ins.dst as usize;
            if !live[dst] {
                continue;
            }
            keep[i] = true;
            live[dst] = false;
            if let Operand::Calc(r) = ins.src1 {
                live[r as usize] = true;
            }
            if !ins.op.is_unary() {
                if let Operand::Calc(r) = ins.src2 {
                    live[r as usize] = true;
                }
            }
        }
        let steps = program
            .code
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(ins, _)| Step {
                op: ins.op,
                dst: ins.dst as u16,
                a: ins.src1.flat(&shape) as u16,
                b: ins.src2.flat(&shape) as u16,
            })
            .collect();
        Self { steps, shape }
    }

    pub fn effective_len(&self) -> usize {
        self.steps.len()
    }

    /// A register file with the constant pool loaded.
    pub fn registers(&self, program: &Program) -> Vec<f64> {
        let mut regs = vec![0.0; self.shape.n_calc + self.shape.n_inputs + self.shape.n_consts];
        regs[self.shape.n_calc + self.shape.n_inputs..].copy_from_slice(&program.constants);
        regs
    }

    pub fn run(&self, regs: &mut [f64], inputs: &[f64]) -> Result<f64> {
        if inputs.len() != self.shape.n_inputs {
            return Err(Error::Decode(format!(
                "program expects {} inputs, got {}",
                self.shape.n_inputs,
                inputs.len()
            )));
        }
        Ok(self.run_unchecked(regs, inputs))
    }

    #[inline]
    pub(crate) fn run_unchecked(&self, regs: &mut [f64], inputs: &[f64]) -> f64 {
        let n_calc = self.shape.n_calc;
        regs[..n_calc].fill(1.0);
        regs[n_calc..n_calc + inputs.len()].copy_from_slice(inputs);
        for s in &self.steps {
            regs[s.dst as usize] = s.op.apply(regs[s.a as usize], regs[s.b as usize]);
        }
        regs[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(code: Vec<Instruction>, consts: Vec<f64>, n_inputs: usize) -> Program {
        Program { code, constants: consts, n_calc: 8, n_inputs }
    }

    #[test]
    fn adds_two_inputs() {
        let p = prog(
            vec![Instruction::new(Opcode::Add, 0, Operand::Input(0), Operand::Input(1))],
            vec![],
            2,
        );
        assert_eq!(p.execute(&[2.0, 3.0]).unwrap(), 5.0);
    }

    #[test]
    fn protected_division() {
        let p = prog(
            vec![Instruction::new(Opcode::DivProtected, 0, Operand::Input(0), Operand::Const(0))],
            vec![0.0],
            1,
        );
        assert_eq!(p.execute(&[7.5]).unwrap(), 1.0);
        assert_eq!(Opcode::DivProtected.apply(1.0, 1e-10), 1.0);
        assert_eq!(Opcode::DivProtected.apply(1.0, -2.0), -0.5);
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let p = prog(
            vec![Instruction::new(Opcode::Add, 0, Operand::Input(0), Operand::Input(1))],
            vec![],
            2,
        );
        assert!(matches!(p.execute(&[]), Err(Error::Decode(_))));
    }

    #[test]
    fn registers_start_at_one_and_values_clamp() {
        let p = prog(
            vec![Instruction::new(Opcode::Add, 0, Operand::Calc(0), Operand::Calc(1))],
            vec![],
            0,
        );
        assert_eq!(p.execute(&[]).unwrap(), 2.0);
        let mut code = vec![];
        for _ in 0..10 {
            code.push(Instruction::new(Opcode::Mul, 1, Operand::Calc(1), Operand::Const(0)));
        }
        code.push(Instruction::new(Opcode::Sub, 0, Operand::Calc(2), Operand::Calc(1)));
        let p = prog(code, vec![1e6], 0);
        assert_eq!(p.execute(&[]).unwrap(), 1.0 - VALUE_LIMIT);
        assert_eq!(clamp_value(f64::NAN), VALUE_LIMIT);
        assert_eq!(Opcode::SqrtProtected.apply(-4.0, 0.0), 2.0);
    }

    #[test]
    fn introns_do_not_change_results() {
        let code = vec![
            Instruction::new(Opcode::Mul, 3, Operand::Input(0), Operand::Input(0)),
            Instruction::new(Opcode::Add, 1, Operand::Input(0), Operand::Const(0)),
            Instruction::new(Opcode::Mul, 0, Operand::Calc(1), Operand::Input(1)),
            Instruction::new(Opcode::Sin, 5, Operand::Calc(0), Operand::Calc(3)),
        ];
        let p = prog(code, vec![0.5], 2);
        let c = p.compile().unwrap();
        assert_eq!(c.effective_len(), 2);
        assert_eq!(p.execute(&[1.0, 2.0]).unwrap(), 3.0);
    }

    #[test]
    fn encoding_round_trips() {
        for op in Opcode::ALL {
            let ins = Instruction::new(op, 7, Operand::Const(1023), Operand::Input(5));
            assert_eq!(Instruction::decode(ins.encode()).unwrap(), ins);
        }
        assert!(Instruction::decode(0xF000_0000).is_err());
        assert!(Instruction::decode(0x0000_0C00).is_err());
    }

    #[test]
    fn text_round_trips() {
        let p = prog(
            vec![
                Instruction::new(Opcode::Sub, 2, Operand::Input(1), Operand::Const(1)),
                Instruction::new(Opcode::SqrtProtected, 0, Operand::Calc(2), Operand::Input(0)),
            ],
            vec![0.1, -0.333_333_333_333_333_3],
            2,
        );
        let text = p.to_text();
        assert!(text.contains("r0 = sqrt r2 i0"));
        assert_eq!(Program::parse(&text).unwrap(), p);
        assert!(Program::parse("inputs 1\nregisters 8\nconstants 0\nr9 = add i0 i0\n").is_err());
        assert!(Program::parse("inputs 1\nregisters 8\nconstants 0\nr0 = pow i0 i0\n").is_err());
    }
}
