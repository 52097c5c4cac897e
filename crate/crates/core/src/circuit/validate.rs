use std::collections::HashMap;
use std::fmt;

use super::{Circuit, CircuitError, Node};
use crate::fp_system::ArithOp;
use crate::rational::Rational;

/// Node kind as written, before arity and ordering are checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawKind {
    Input(usize),
    Const(Rational),
    Arith(ArithOp),
    Select,
}

impl RawKind {
    fn arity(&self) -> usize {
        match self {
            RawKind::Input(_) | RawKind::Const(_) => 0,
            RawKind::Arith(_) => 2,
            RawKind::Select => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNode {
    pub id: u64,
    pub kind: RawKind,
    pub parents: Vec<u64>,
    /// Source line, when parsed from text.
    pub line: Option<usize>,
}

/// An unchecked circuit graph, as read from text or assembled by hand.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawCircuit {
    pub name: Option<String>,
    pub inputs: Option<usize>,
    pub nodes: Vec<RawNode>,
    pub outputs: Vec<(u64, Option<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    MissingInputs,
    IdsNotIncreasing { previous: u64 },
    ForwardReference { parent: u64 },
    UnknownReference { parent: u64 },
    Arity { expected: usize, found: usize },
    InputIndexOutOfRange { index: usize, arity: usize },
    MissingOutput,
    MultipleOutputs { count: usize },
    UnknownOutput { id: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: Option<u64>,
    pub line: Option<usize>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(node) = self.node {
            write!(f, "node {node}: ")?;
        }
        match &self.rule {
            Rule::MissingInputs => f.write_str("missing `inputs` declaration"),
            Rule::IdsNotIncreasing { previous } => {
                write!(f, "id does not increase (previous id {previous})")
            }
            Rule::ForwardReference { parent } => {
                write!(f, "forward reference to node {parent}")
            }
            Rule::UnknownReference { parent } => write!(f, "reference to undefined node {parent}"),
            Rule::Arity { expected, found } => {
                write!(f, "in-degree {found}, expected {expected}")
            }
            Rule::InputIndexOutOfRange { index, arity } => {
                write!(f, "input index {index} out of range for {arity} inputs")
            }
            Rule::MissingOutput => f.write_str("no output node designated"),
            Rule::MultipleOutputs { count } => {
                write!(f, "{count} output nodes designated, expected exactly one")
            }
            Rule::UnknownOutput { id } => write!(f, "output refers to undefined node {id}"),
        }
    }
}

/// Checks every structural invariant; an empty list means the graph is a
/// well-formed single-output circuit.
pub fn validate(raw: &RawCircuit) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |node: Option<u64>, line: Option<usize>, rule: Rule| {
        out.push(Violation { node, line, rule })
    };
    if raw.inputs.is_none() {
        push(None, None, Rule::MissingInputs);
    }
    let position: HashMap<u64, usize> = raw
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id, i))
        .collect();
    let mut previous: Option<u64> = None;
    for (index, node) in raw.nodes.iter().enumerate() {
        if let Some(prev) = previous {
            if node.id <= prev {
                push(Some(node.id), node.line, Rule::IdsNotIncreasing { previous: prev });
            }
        }
        previous = Some(previous.map_or(node.id, |p| p.max(node.id)));
        let expected = node.kind.arity();
        if node.parents.len() != expected {
            push(Some(node.id), node.line, Rule::Arity {
                expected,
                found: node.parents.len(),
            });
        }
        for &parent in &node.parents {
            match position.get(&parent) {
                None => {
                    push(Some(node.id), node.line, Rule::UnknownReference { parent });
                }
                Some(&p) if p >= index => {
                    push(Some(node.id), node.line, Rule::ForwardReference { parent });
                }
                Some(_) => {}
            }
        }
        if let (RawKind::Input(i), Some(n)) = (&node.kind, raw.inputs) {
            if *i >= n {
                push(Some(node.id), node.line, Rule::InputIndexOutOfRange { index: *i, arity: n });
            }
        }
    }
    match raw.outputs.len() {
        0 => push(None, None, Rule::MissingOutput),
        1 => {}
        count => push(None, raw.outputs[1].1, Rule::MultipleOutputs { count }),
    }
    for &(id, line) in &raw.outputs {
        if !position.contains_key(&id) {
            push(Some(id), line, Rule::UnknownOutput { id });
        }
    }
    out
}

impl Circuit {
    pub fn from_raw(raw: &RawCircuit) -> Result<Circuit, CircuitError> {
        let violations = validate(raw);
        if !violations.is_empty() {
            return Err(CircuitError::Invalid { violations });
        }
        let position: HashMap<u64, usize> = raw
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i))
            .collect();
        let nodes = raw
            .nodes
            .iter()
            .map(|n| {
                let p = |i: usize| position[&n.parents[i]];
                match &n.kind {
                    RawKind::Input(i) => Node::Input(*i),
                    RawKind::Const(c) => Node::Const(c.clone()),
                    RawKind::Arith(op) => Node::Arith {
                        op: *op,
                        lhs: p(0),
                        rhs: p(1),
                    },
                    RawKind::Select => Node::Select {
                        test: p(0),
                        if_negative: p(1),
                        if_nonnegative: p(2),
                    },
                }
            })
            .collect();
        let labels = raw.nodes.iter().map(|n| n.id).collect();
        Ok(Circuit::assemble(
            raw.name.clone(),
            raw.inputs.expect("validated"),
            nodes,
            labels,
            position[&raw.outputs[0].0],
        ))
    }

    pub fn to_raw(&self) -> RawCircuit {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let (kind, parents) = match node {
                    Node::Input(k) => (RawKind::Input(*k), vec![]),
                    Node::Const(c) => (RawKind::Const(c.clone()), vec![]),
                    Node::Arith { op, lhs, rhs } => (RawKind::Arith(*op), vec![*lhs, *rhs]),
                    Node::Select {
                        test,
                        if_negative,
                        if_nonnegative,
                    } => (RawKind::Select, vec![*test, *if_negative, *if_nonnegative]),
                };
                RawNode {
                    id: self.labels[i],
                    kind,
                    parents: parents.into_iter().map(|p| self.labels[p]).collect(),
                    line: None,
                }
            })
            .collect();
        RawCircuit {
            name: self.name.clone(),
            inputs: Some(self.input_arity),
            nodes,
            outputs: vec![(self.labels[self.output], None)],
        }
    }
}
