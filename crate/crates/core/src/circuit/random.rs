use rand::Rng;

use super::{Circuit, CircuitBuilder, NodeId};
use crate::fp_system::ArithOp;
use crate::rational::Rational;
use crate::seed;

/// Shape of a random circuit for fuzzing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomCircuitSpec {
    pub inputs: usize,
    /// Total node count, at least `inputs + 1`.
    pub nodes: usize,
    pub allow_select: bool,
    pub allow_div: bool,
    /// Cap on the polynomial degree of any node, which keeps exact
    /// rationals from growing without bound.
    pub max_degree: u32,
}

impl Default for RandomCircuitSpec {
    fn default() -> Self {
        RandomCircuitSpec {
            inputs: 1,
            nodes: 12,
            allow_select: true,
            allow_div: true,
            max_degree: 64,
        }
    }
}

/// Deterministic random circuit: every input appears first, then a mix of
/// constants and operations over earlier nodes; the last node is the output.
pub fn random_circuit(spec: &RandomCircuitSpec, seed_value: u64) -> Circuit {
    assert!(spec.inputs >= 1, "at least one input");
    let total = spec.nodes.max(spec.inputs + 1);
    let mut rng = seed::rng(seed_value, &[0x6369_7263]);
    let mut b = CircuitBuilder::new(spec.inputs).name(format!("random_{seed_value}"));
    let mut degree: Vec<u32> = Vec::with_capacity(total);
    for i in 0..spec.inputs {
        b.input(i);
        degree.push(1);
    }
    while b.len() < total {
        let n = b.len();
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> NodeId { rng.gen_range(0..n) };
        let roll: u32 = rng.gen_range(0..100);
        if roll < 15 {
            let num: i64 = rng.gen_range(-8..=8);
            let den: i64 = rng.gen_range(1..=4);
            b.constant(Rational::new(num.into(), den.into()));
            degree.push(0);
        } else if roll < 25 && spec.allow_select && n >= 3 {
            let (t, y, z) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            b.select(t, y, z);
            degree.push(degree[y].max(degree[z]));
        } else {
            let (l, r) = (pick(&mut rng), pick(&mut rng));
            let mut op = match rng.gen_range(0..4) {
                0 => ArithOp::Add,
                1 => ArithOp::Sub,
                2 => ArithOp::Mul,
                _ if spec.allow_div => ArithOp::Div,
                _ => ArithOp::Mul,
            };
            let product = degree[l] + degree[r];
            if matches!(op, ArithOp::Mul | ArithOp::Div) && product > spec.max_degree {
                op = ArithOp::Add;
            }
            b.arith(op, l, r);
            degree.push(match op {
                ArithOp::Add | ArithOp::Sub => degree[l].max(degree[r]),
                _ => product,
            });
        }
    }
    let out = b.len() - 1;
    b.build(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_circuit, serialize, validate};

    #[test]
    fn deterministic_and_valid() {
        let spec = RandomCircuitSpec {
            inputs: 2,
            nodes: 50,
            ..Default::default()
        };
        for s in 0..20 {
            let c = random_circuit(&spec, s);
            assert_eq!(c, random_circuit(&spec, s));
            assert_eq!(c.len(), 50);
            assert!(validate(&c.to_raw()).is_empty());
            assert_eq!(parse_circuit(&serialize(&c)).unwrap(), c);
        }
    }
}
