use super::{Circuit, Node, NodeId};
use crate::fp_system::ArithOp;
use crate::rational::Rational;

/// Incremental construction of a circuit. Ids are dense and the builder can
/// only reference existing nodes, so every built circuit is valid by
/// construction.
///
/// ```
/// use fplab::circuit::CircuitBuilder;
/// use fplab::Rational;
///
/// let mut b = CircuitBuilder::new(1);
/// let x = b.input(0);
/// let one = b.constant(Rational::from_integer(1.into()));
/// let f = b.sub(x, one);
/// let c = b.build(f);
/// assert_eq!(c.arith_count(), 1);
/// ```
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    arity: usize,
    nodes: Vec<Node>,
    name: Option<String>,
}

impl CircuitBuilder {
    pub fn new(input_arity: usize) -> Self {
        CircuitBuilder {
            arity: input_arity,
            nodes: Vec::new(),
            name: None,
        }
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    fn push(&mut self, node: Node) -> NodeId {
        for p in node.parents() {
            assert!(p < self.nodes.len(), "reference to unknown node {p}");
        }
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn input(&mut self, index: usize) -> NodeId {
        assert!(index < self.arity, "input index {index} out of range");
        self.push(Node::Input(index))
    }

    pub fn constant(&mut self, value: Rational) -> NodeId {
        self.push(Node::Const(value))
    }

    pub fn constant_int(&mut self, value: i64) -> NodeId {
        self.constant(Rational::from_integer(value.into()))
    }

    pub fn arith(&mut self, op: ArithOp, lhs: NodeId, rhs: NodeId) -> NodeId {
        self.push(Node::Arith { op, lhs, rhs })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.arith(ArithOp::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.arith(ArithOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.arith(ArithOp::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.arith(ArithOp::Div, a, b)
    }

    pub fn select(&mut self, test: NodeId, if_negative: NodeId, if_nonnegative: NodeId) -> NodeId {
        self.push(Node::Select {
            test,
            if_negative,
            if_nonnegative,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn build(self, output: NodeId) -> Circuit {
        assert!(output < self.nodes.len(), "output {output} is not a node");
        let labels = (0..self.nodes.len() as u64).collect();
        Circuit::assemble(self.name, self.arity, self.nodes, labels, output)
    }
}

/// Small named circuits used across tests, examples and the CLI.
pub mod library {
    use super::*;

    /// `f(x) = x − c`.
    pub fn minus_const(c: Rational) -> Circuit {
        let mut b = CircuitBuilder::new(1).name("x_minus_c");
        let x = b.input(0);
        let k = b.constant(c);
        let f = b.sub(x, k);
        b.build(f)
    }

    /// `f(x) = x`.
    pub fn identity() -> Circuit {
        let mut b = CircuitBuilder::new(1).name("identity");
        let x = b.input(0);
        b.build(x)
    }

    /// `f(y) = −1 − y²`.
    pub fn neg_one_minus_square() -> Circuit {
        let mut b = CircuitBuilder::new(1).name("neg_one_minus_square");
        let y = b.input(0);
        let m1 = b.constant_int(-1);
        let sq = b.mul(y, y);
        let f = b.sub(m1, sq);
        b.build(f)
    }

    /// `f(y) = y²`.
    pub fn square() -> Circuit {
        let mut b = CircuitBuilder::new(1).name("square");
        let y = b.input(0);
        let f = b.mul(y, y);
        b.build(f)
    }
}
