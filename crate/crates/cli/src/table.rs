use std::time::Instant;

use anyhow::Result;
use fplab::rational::to_f64;
use fplab::{ExtRational, Rational};

/// One CSV record plus whether it met an `--expect` assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cells: Vec<String>,
    pub expectation: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(header: &'static [&'static str], rows: Vec<Row>) -> Self {
        debug_assert!(rows.iter().all(|r| r.cells.len() == header.len()));
        Table { header, rows }
    }

    pub fn expectation_failures(&self) -> usize {
        self.rows.iter().filter(|r| r.expectation == Some(false)).count()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header)?;
        for row in &self.rows {
            w.write_record(&row.cells)?;
        }
        Ok(w.into_inner()?)
    }
}

/// Wall-clock column: milliseconds when timing is on, `0` otherwise so that
/// reruns stay byte-identical.
pub struct Stopwatch(Option<Instant>);

impl Stopwatch {
    pub fn start(timing: bool) -> Self {
        Stopwatch(timing.then(Instant::now))
    }

    pub fn cell(&self) -> String {
        self.0.map_or_else(|| "0".into(), |t| t.elapsed().as_millis().to_string())
    }
}

pub fn point(x: &[Rational]) -> String {
    x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

pub fn sci(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:.6e}")
    }
}

pub fn approx(x: &Rational) -> String {
    sci(to_f64(x))
}

pub fn ext_approx(x: &ExtRational) -> String {
    sci(x.to_f64())
}

pub fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.into()
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// `u_mach = 2^-k_mach`, exactly.
pub fn u_of(k_mach: u32) -> String {
    fplab::rational::pow2(-(k_mach as i64)).to_string()
}
