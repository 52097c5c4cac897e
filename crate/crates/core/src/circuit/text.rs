//! Line-based circuit text format.
//!
//! ```text
//! # f(x) = x - 1
//! circuit sub1
//! inputs 1
//! node 0 input 0
//! node 1 const 1
//! node 2 sub 0 1
//! output 2
//! ```

use std::fmt::Write;

use super::validate::{RawCircuit, RawKind, RawNode};
use super::{Circuit, CircuitError, Node};
use crate::fp_system::ArithOp;
use crate::rational::parse_rational;

fn syntax(line: usize, message: impl Into<String>) -> CircuitError {
    CircuitError::Syntax {
        line,
        message: message.into(),
    }
}

/// Parses text into an unchecked graph. Only lexical and per-line syntax
/// errors are reported here; structural rules are left to [`super::validate`].
pub fn parse_raw(text: &str) -> Result<RawCircuit, CircuitError> {
    let mut raw = RawCircuit::default();
    for (index, full) in text.lines().enumerate() {
        let line = index + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let int = |w: &str, what: &str| -> Result<u64, CircuitError> {
            w.parse()
                .map_err(|_| syntax(line, format!("expected {what}, found `{w}`")))
        };
        match words[0] {
            "circuit" => {
                if words.len() != 2 {
                    return Err(syntax(line, "expected `circuit <name>`"));
                }
                raw.name = Some(words[1].to_string());
            }
            "inputs" => {
                if words.len() != 2 {
                    return Err(syntax(line, "expected `inputs <n>`"));
                }
                if raw.inputs.is_some() {
                    return Err(syntax(line, "duplicate `inputs` declaration"));
                }
                raw.inputs = Some(int(words[1], "input count")? as usize);
            }
            "output" => {
                if words.len() != 2 {
                    return Err(syntax(line, "expected `output <id>`"));
                }
                raw.outputs.push((int(words[1], "node id")?, Some(line)));
            }
            "node" => {
                if words.len() < 3 {
                    return Err(syntax(line, "expected `node <id> <kind> ...`"));
                }
                let id = int(words[1], "node id")?;
                let args = &words[3..];
                let (kind, parents) = match words[2] {
                    "input" => {
                        if args.len() != 1 {
                            return Err(syntax(line, "expected `node <id> input <index>`"));
                        }
                        (RawKind::Input(int(args[0], "input index")? as usize), vec![])
                    }
                    "const" => {
                        if args.len() != 1 {
                            return Err(syntax(line, "expected `node <id> const <rational>`"));
                        }
                        let value = parse_rational(args[0])
                            .map_err(|e| syntax(line, e.to_string()))?;
                        (RawKind::Const(value), vec![])
                    }
                    "select" => (
                        RawKind::Select,
                        args.iter()
                            .map(|a| int(a, "node id"))
                            .collect::<Result<_, _>>()?,
                    ),
                    other => {
                        let op: ArithOp = match other {
                            "add" | "sub" | "mul" | "div" => other.parse().expect("keyword"),
                            _ => return Err(syntax(line, format!("unknown node kind `{other}`"))),
                        };
                        (
                            RawKind::Arith(op),
                            args.iter()
                                .map(|a| int(a, "node id"))
                                .collect::<Result<_, _>>()?,
                        )
                    }
                };
                raw.nodes.push(RawNode {
                    id,
                    kind,
                    parents,
                    line: Some(line),
                });
            }
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    Ok(raw)
}

pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    Circuit::from_raw(&parse_raw(text)?)
}

pub fn serialize(c: &Circuit) -> String {
    let mut s = String::new();
    if let Some(name) = c.name() {
        writeln!(s, "circuit {name}").unwrap();
    }
    writeln!(s, "inputs {}", c.input_arity()).unwrap();
    for (id, node) in c.nodes().iter().enumerate() {
        let label = c.label(id);
        match node {
            Node::Input(i) => writeln!(s, "node {label} input {i}"),
            Node::Const(v) => writeln!(s, "node {label} const {v}"),
            Node::Arith { op, lhs, rhs } => writeln!(
                s,
                "node {label} {} {} {}",
                op.keyword(),
                c.label(*lhs),
                c.label(*rhs)
            ),
            Node::Select {
                test,
                if_negative,
                if_nonnegative,
            } => writeln!(
                s,
                "node {label} select {} {} {}",
                c.label(*test),
                c.label(*if_negative),
                c.label(*if_nonnegative)
            ),
        }
        .unwrap();
    }
    writeln!(s, "output {}", c.label(c.output())).unwrap();
    s
}
