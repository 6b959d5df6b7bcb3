//! NAND-only synthesis with common-subexpression sharing.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::expr::BoolExpr;
use crate::error::{Error, Result};
use crate::logic::Digit;

/// Operand of a NAND gate: a circuit input, an earlier gate, or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NandRef {
    Input(usize),
    Gate(usize),
    Const(bool),
}

/// Topologically ordered NAND circuit; gate `k` only references inputs and gates `< k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NandDag {
    pub inputs: Vec<String>,
    pub gates: Vec<(NandRef, NandRef)>,
    pub output: NandRef,
}

struct Builder {
    inputs: Vec<String>,
    gates: Vec<(NandRef, NandRef)>,
    seen: HashMap<(NandRef, NandRef), usize>,
}

impl Builder {
    fn nand(&mut self, x: NandRef, y: NandRef) -> NandRef {
        let key = if x <= y { (x, y) } else { (y, x) };
        if let Some(&k) = self.seen.get(&key) {
            return NandRef::Gate(k);
        }
        let k = self.gates.len();
        self.gates.push((x, y));
        self.seen.insert(key, k);
        NandRef::Gate(k)
    }

    fn lower(&mut self, e: &BoolExpr) -> NandRef {
        match e {
            BoolExpr::Var(name) => {
                let i = self.inputs.iter().position(|n| n == name).expect("inputs collected up front");
                NandRef::Input(i)
            }
            BoolExpr::Const(c) => NandRef::Const(*c),
            BoolExpr::Not(x) => {
                let x = self.lower(x);
                self.nand(x, x)
            }
            BoolExpr::Nand(a, b) => {
                let (a, b) = (self.lower(a), self.lower(b));
                self.nand(a, b)
            }
            BoolExpr::And(a, b) => {
                let (a, b) = (self.lower(a), self.lower(b));
                let g = self.nand(a, b);
                self.nand(g, g)
            }
            BoolExpr::Or(a, b) => {
                let (a, b) = (self.lower(a), self.lower(b));
                let na = self.nand(a, a);
                let nb = self.nand(b, b);
                self.nand(na, nb)
            }
            BoolExpr::Xor(a, b) => {
                let (a, b) = (self.lower(a), self.lower(b));
                let g1 = self.nand(a, b);
                let g2 = self.nand(a, g1);
                let g3 = self.nand(b, g1);
                self.nand(g2, g3)
            }
        }
    }
}

/// Rewrite an expression into NAND gates, sharing identical gates.
pub fn to_nand(expr: &BoolExpr) -> NandDag {
    let mut b = Builder {
        inputs: expr.variables(),
        gates: Vec::new(),
        seen: HashMap::new(),
    };
    let output = b.lower(expr);
    NandDag {
        inputs: b.inputs,
        gates: b.gates,
        output,
    }
}

impl NandDag {
    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Bind named inputs to digits in declaration order.
    pub fn bind(&self, inputs: &HashMap<String, Digit>) -> Result<Vec<Digit>> {
        self.inputs
            .iter()
            .map(|name| {
                inputs
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::UnboundVariable(name.clone()))
            })
            .collect()
    }

    /// Boolean evaluation of the gate list.
    pub fn evaluate(&self, inputs: &HashMap<String, Digit>) -> Result<Digit> {
        let bound = self.bind(inputs)?;
        let mut values: Vec<bool> = Vec::with_capacity(self.gates.len());
        let get = |r: NandRef, values: &[bool]| match r {
            NandRef::Input(i) => bound[i].as_bool(),
            NandRef::Gate(k) => values[k],
            NandRef::Const(c) => c,
        };
        for &(x, y) in &self.gates {
            let out = !(get(x, &values) & get(y, &values));
            values.push(out);
        }
        Ok(Digit::from_bool(get(self.output, &values)))
    }

    /// Longest path from an input to each gate, starting at 0.
    pub fn levels(&self) -> Vec<usize> {
        let mut level: Vec<usize> = Vec::with_capacity(self.gates.len());
        for &(x, y) in &self.gates {
            let of = |r: NandRef| match r {
                NandRef::Gate(k) => level[k] + 1,
                _ => 0,
            };
            let l = of(x).max(of(y));
            level.push(l);
        }
        level
    }

    fn ref_name(&self, r: NandRef) -> String {
        match r {
            NandRef::Input(i) => self.inputs[i].clone(),
            NandRef::Gate(k) => format!("g{}", k + 1),
            NandRef::Const(c) => u8::from(c).to_string(),
        }
    }

    /// Text netlist: an `inputs` line, one `gK = x NAND y` line per gate
    /// (gates numbered from 1) and an `output` line.
    pub fn to_netlist(&self) -> String {
        let mut out = String::new();
        out.push_str("inputs");
        for name in &self.inputs {
            out.push(' ');
            out.push_str(name);
        }
        out.push('\n');
        for (k, &(x, y)) in self.gates.iter().enumerate() {
            let _ = writeln!(out, "g{} = {} NAND {}", k + 1, self.ref_name(x), self.ref_name(y));
        }
        let _ = writeln!(out, "output {}", self.ref_name(self.output));
        out
    }
}
