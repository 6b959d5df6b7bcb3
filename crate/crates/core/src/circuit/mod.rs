//! Boolean expressions compiled to NAND networks of oscillators.

mod compile;
mod expr;
mod nand;

pub use compile::{
    compile, compile_xor_paper, evaluate_coupled, evaluate_coupled_with, evaluate_staged, evaluate_staged_with,
    CircuitConfig, CircuitNode, Operand, COUPLED_PERIODS_PER_STAGE, STAGE_PERIODS,
};
pub use expr::{oracle_evaluate, parse_expr, BoolExpr};
pub use nand::{to_nand, NandDag, NandRef};
