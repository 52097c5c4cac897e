//! Algebraic circuits and their evaluation semantics.
//!
//! A circuit is a DAG of input, constant, arithmetic and selection nodes
//! stored in topological order with one designated output. Evaluation follows
//! the canonical procedure: every node is computed in order, and a selection
//! `(ξ, y, z)` returns `y` when `ξ < 0` and `z` otherwise.
//!
//! Four semantics are provided:
//!
//! * [`eval_exact`]: exact rational evaluation.
//! * [`eval_rounded`]: one concrete ε-evaluation, where every input,
//!   constant and arithmetic result is multiplied by some `(1+δ)`; the
//!   realized `δ` sequence is recorded so it can be replayed.
//! * [`eval_interval`]: an enclosure of every ε-evaluation at a point.
//! * [`eval_interval_box`]: the same over a box of inputs.

mod builder;
mod eval;
mod interval;
mod random;
mod text;
mod validate;

use std::fmt;

use thiserror::Error;

use crate::fp_system::ArithOp;
use crate::rational::Rational;

pub use builder::{library, CircuitBuilder};
pub use eval::{
    eval_exact, eval_interval, eval_interval_box, eval_interval_with, eval_rounded, AmbiguityFlags,
    DeltaTrace, EvalError, EvalOutcome, EvalValue, IntervalOptions, PerturbationMode, Sign,
    SiteKind, Verdict,
};
pub use interval::Interval;
pub use random::{random_circuit, RandomCircuitSpec};
pub use text::{parse_circuit, parse_raw, serialize};
pub use validate::{validate, RawCircuit, RawKind, RawNode, Rule, Violation};

/// Dense index of a node inside a [`Circuit`].
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Input(usize),
    Const(Rational),
    Arith {
        op: ArithOp,
        lhs: NodeId,
        rhs: NodeId,
    },
    Select {
        test: NodeId,
        if_negative: NodeId,
        if_nonnegative: NodeId,
    },
}

impl Node {
    pub fn parents(&self) -> Vec<NodeId> {
        match *self {
            Node::Input(_) | Node::Const(_) => Vec::new(),
            Node::Arith { lhs, rhs, .. } => vec![lhs, rhs],
            Node::Select {
                test,
                if_negative,
                if_nonnegative,
            } => vec![test, if_negative, if_nonnegative],
        }
    }

    /// Inputs, constants and arithmetic results carry a perturbation site;
    /// selections are error-free.
    pub fn site_kind(&self) -> Option<SiteKind> {
        match self {
            Node::Input(_) => Some(SiteKind::Input),
            Node::Const(_) => Some(SiteKind::Const),
            Node::Arith { .. } => Some(SiteKind::Arith),
            Node::Select { .. } => None,
        }
    }
}

/// A validated algebraic circuit. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    name: Option<String>,
    input_arity: usize,
    nodes: Vec<Node>,
    labels: Vec<u64>,
    output: NodeId,
    site_of: Vec<Option<usize>>,
    site_count: usize,
}

impl Circuit {
    fn assemble(
        name: Option<String>,
        input_arity: usize,
        nodes: Vec<Node>,
        labels: Vec<u64>,
        output: NodeId,
    ) -> Circuit {
        let mut site_of = Vec::with_capacity(nodes.len());
        let mut site_count = 0;
        for node in &nodes {
            if node.site_kind().is_some() {
                site_of.push(Some(site_count));
                site_count += 1;
            } else {
                site_of.push(None);
            }
        }
        Circuit {
            name,
            input_arity,
            nodes,
            labels,
            output,
            site_of,
            site_count,
        }
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn output(&self) -> NodeId {
        self.output
    }

    /// The id this node carries in the text format.
    pub fn label(&self, id: NodeId) -> u64 {
        self.labels[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of arithmetic nodes; the arithmetic cost of one evaluation.
    pub fn arith_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Arith { .. }))
            .count()
    }

    /// Number of perturbation sites (inputs, constants, arithmetic nodes).
    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn site_of(&self, id: NodeId) -> Option<usize> {
        self.site_of[id]
    }

    pub fn has_selection(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::Select { .. }))
    }

    pub fn has_division(&self) -> bool {
        self.nodes.iter().any(|n| {
            matches!(
                n,
                Node::Arith {
                    op: ArithOp::Div,
                    ..
                }
            )
        })
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid circuit: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { violations: Vec<Violation> },
}

impl CircuitError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            CircuitError::Invalid { violations } => violations,
            CircuitError::Syntax { .. } => &[],
        }
    }
}
