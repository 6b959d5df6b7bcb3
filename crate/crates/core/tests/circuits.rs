mod common;

use common::{assignments, bindings, random_expr};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stno::circuit::{
    compile, compile_xor_paper, evaluate_coupled, evaluate_staged, oracle_evaluate, parse_expr, to_nand, CircuitConfig,
};
use stno::forcing::DEFAULT_GAIN;
use stno::logic::{CarrierSpec, Digit};
use stno::network::{StnoParams, DEFAULT_TAU_PERIODS};

fn tau() -> f64 {
    DEFAULT_TAU_PERIODS * CarrierSpec::default().period()
}

fn build(text: &str) -> CircuitConfig {
    let dag = to_nand(&parse_expr(text).unwrap());
    compile(&dag, StnoParams::default(), CarrierSpec::default(), DEFAULT_GAIN, tau()).unwrap()
}

#[test]
fn synthesized_dags_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let vars = ["a", "b", "c", "d"];
    for _ in 0..200 {
        let expr = random_expr(&mut rng, &vars, 5);
        assert!(expr.depth() <= 5);
        let dag = to_nand(&expr);
        for env in assignments(&dag.inputs) {
            assert_eq!(dag.evaluate(&env).unwrap(), oracle_evaluate(&expr, &env).unwrap(), "{expr}");
        }
    }
}

#[test]
fn simulated_circuits_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let vars = ["a", "b", "c"];
    for _ in 0..20 {
        let expr = random_expr(&mut rng, &vars, 4);
        let dag = to_nand(&expr);
        let cfg = compile(&dag, StnoParams::default(), CarrierSpec::default(), DEFAULT_GAIN, tau()).unwrap();
        for bits in 0..8 {
            let env = bindings(&vars, bits);
            assert_eq!(evaluate_staged(&cfg, &env).unwrap(), oracle_evaluate(&expr, &env).unwrap(), "{expr}");
        }
    }
}

#[test]
fn full_adder_adds() {
    let sum = build("a ^ b ^ cin");
    let carry = build("a & b | cin & (a ^ b)");
    for bits in 0..8 {
        let env = bindings(&["a", "b", "cin"], bits);
        let total = bits.count_ones() as u8;
        assert_eq!(evaluate_staged(&sum, &env).unwrap().as_u8(), total & 1, "row {bits:03b}");
        assert_eq!(evaluate_staged(&carry, &env).unwrap().as_u8(), total >> 1, "row {bits:03b}");
    }
}

#[test]
fn ripple_carry_addition_of_two_bit_numbers() {
    let sum = build("a ^ b ^ cin");
    let carry = build("a & b | cin & (a ^ b)");
    for x in 0u8..4 {
        for y in 0u8..4 {
            let mut cin = Digit::Zero;
            let mut out = 0u8;
            for bit in 0..2 {
                let env = [
                    ("a".to_string(), Digit::from_bool(x >> bit & 1 == 1)),
                    ("b".to_string(), Digit::from_bool(y >> bit & 1 == 1)),
                    ("cin".to_string(), cin),
                ]
                .into();
                out |= evaluate_staged(&sum, &env).unwrap().as_u8() << bit;
                cin = evaluate_staged(&carry, &env).unwrap();
            }
            out |= cin.as_u8() << 2;
            assert_eq!(out, x + y);
        }
    }
}

#[test]
fn xor_in_both_builds_and_both_modes() {
    let stencil = compile_xor_paper(StnoParams::default(), CarrierSpec::default(), DEFAULT_GAIN, tau()).unwrap();
    let nand = build("a ^ b");
    let period = CarrierSpec::default().period();
    for cfg in [&stencil, &nand] {
        let t_end = cfg.stage_count() as f64 * 4.0 * period;
        for bits in 0..4 {
            let env = bindings(&["a", "b"], bits);
            let expected = Digit::from_bool((bits & 1) ^ (bits >> 1) == 1);
            let staged = evaluate_staged(cfg, &env).unwrap();
            let coupled = evaluate_coupled(cfg, &env, t_end).unwrap();
            assert_eq!(staged, expected);
            assert_eq!(coupled, staged);
        }
    }
}
