//! Text summaries of CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use crate::commands::{
    CONDITION_HEADER, DECIDE_HEADER, EVAL_HEADER, HIERARCHY_HEADER, SIGN1D_HEADER, SQRT_HEADER,
};

const SCHEMAS: &[(&str, &[&str])] = &[
    ("eval", EVAL_HEADER),
    ("condition", CONDITION_HEADER),
    ("decide", DECIDE_HEADER),
    ("sign1d", SIGN1D_HEADER),
    ("sqrt", SQRT_HEADER),
    ("hierarchy", HIERARCHY_HEADER),
];

/// Rows of one schema, addressed by column name.
struct Records {
    header: &'static [&'static str],
    rows: Vec<csv::StringRecord>,
}

impl Records {
    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| *h == name).expect("known column")
    }

    fn get<'a>(&self, row: &'a csv::StringRecord, name: &str) -> &'a str {
        row.get(self.col(name)).unwrap_or("")
    }

    fn num(&self, row: &csv::StringRecord, name: &str) -> f64 {
        self.get(row, name).parse().unwrap_or(f64::NAN)
    }
}

fn read(paths: &[PathBuf]) -> Result<(&'static str, Records)> {
    let mut schema: Option<(&'static str, &'static [&'static str], &Path)> = None;
    let mut rows = Vec::new();
    for path in paths {
        let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
        let header: Vec<String> = reader
            .headers()
            .with_context(|| format!("{}: no CSV header", path.display()))?
            .iter()
            .map(str::to_string)
            .collect();
        let (name, known) = SCHEMAS
            .iter()
            .find(|(_, h)| h.iter().eq(header.iter()))
            .ok_or_else(|| anyhow!("{}: schema mismatch: header is not one written by fplab", path.display()))?;
        match schema {
            None => schema = Some((name, known, path)),
            Some((first, _, first_path)) if first != *name => bail!(
                "schema mismatch: {} holds {first} rows but {} holds {name} rows",
                first_path.display(),
                path.display()
            ),
            Some(_) => {}
        }
        for (i, record) in reader.records().enumerate() {
            rows.push(record.with_context(|| format!("{}: record {}", path.display(), i + 2))?);
        }
    }
    let (name, header, _) = schema.expect("at least one input");
    Ok((name, Records { header, rows }))
}

fn pct(num: usize, den: usize) -> String {
    if den == 0 {
        "n/a".into()
    } else {
        format!("{:.1}%", 100.0 * num as f64 / den as f64)
    }
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    for r in rows {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
}

/// Sort key placing numeric k_mach values in order and `inf` last.
fn kmach_key(s: &str) -> (u64, String) {
    (s.parse().unwrap_or(u64::MAX), s.to_string())
}

fn expectations(r: &Records) -> (usize, usize) {
    let asserted: Vec<_> = r.rows.iter().filter(|row| !r.get(row, "expected").is_empty()).collect();
    let met = asserted.iter().filter(|row| r.get(row, "expect_ok") == "yes").count();
    (met, asserted.len())
}

fn verdicts(out: &mut String, name: &str, r: &Records, labels: &[&str]) {
    let count = |rows: &[&csv::StringRecord], v: &str| rows.iter().filter(|row| r.get(row, "verdict") == v).count();
    let all: Vec<&csv::StringRecord> = r.rows.iter().collect();
    let mut circuits: Vec<&str> = r.rows.iter().map(|row| r.get(row, "circuit")).collect();
    circuits.sort_unstable();
    circuits.dedup();
    let (met, asserted) = expectations(r);
    let counts: Vec<String> = labels.iter().map(|l| format!("{l} {}", count(&all, l))).collect();
    let _ = write!(out, "{name}: {} rows over {} circuits; {}", r.rows.len(), circuits.len(), counts.join(", "));
    if asserted > 0 {
        let _ = write!(out, "; expectations met {met}/{asserted} ({})", pct(met, asserted));
    }
    out.push('\n');
    let mut by_k: BTreeMap<(u64, String), Vec<&csv::StringRecord>> = BTreeMap::new();
    for row in &r.rows {
        by_k.entry(kmach_key(r.get(row, "k_mach"))).or_default().push(row);
    }
    if by_k.len() > 1 {
        let mut header = vec!["k_mach", "rows"];
        header.extend(labels);
        let rows: Vec<Vec<String>> = by_k
            .iter()
            .map(|((_, k), rows)| {
                let mut cells = vec![k.clone(), rows.len().to_string()];
                cells.extend(labels.iter().map(|l| count(rows, l).to_string()));
                cells
            })
            .collect();
        table(out, &header, &rows);
    }
}

fn sqrt_summary(out: &mut String, r: &Records) {
    let within = r.rows.iter().filter(|row| r.get(row, "within_eps") == "yes").count();
    let _ = writeln!(out, "sqrt: {} runs; relative error below epsilon in {within} ({})", r.rows.len(), pct(within, r.rows.len()));
    let mut by_eps: BTreeMap<String, Vec<&csv::StringRecord>> = BTreeMap::new();
    for row in &r.rows {
        by_eps.entry(r.get(row, "epsilon").to_string()).or_default().push(row);
    }
    let stats = |rows: &[&csv::StringRecord], col: &str| {
        let v: Vec<f64> = rows.iter().map(|row| r.num(row, col)).collect();
        let max = v.iter().cloned().fold(0.0, f64::max);
        let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
        (max, mean)
    };
    let rows: Vec<Vec<String>> = by_eps
        .iter()
        .map(|(eps, rows)| {
            let (max, mean) = stats(rows, "rel_error");
            let (bound, _) = stats(rows, "error_bound");
            let ok = rows.iter().filter(|row| r.get(row, "within_eps") == "yes").count();
            vec![eps.clone(), rows.len().to_string(), format!("{max:.3e}"), format!("{mean:.3e}"), format!("{bound:.3e}"), format!("{ok}/{}", rows.len())]
        })
        .collect();
    table(out, &["epsilon", "runs", "max_rel_error", "mean_rel_error", "max_bound", "below_eps"], &rows);
    let mut by_k: BTreeMap<(u64, String), Vec<&csv::StringRecord>> = BTreeMap::new();
    for row in &r.rows {
        by_k.entry(kmach_key(r.get(row, "k_mach"))).or_default().push(row);
    }
    let rows: Vec<Vec<String>> = by_k
        .iter()
        .map(|((_, k), rows)| {
            let (max, mean) = stats(rows, "rel_error");
            vec![k.clone(), rows.len().to_string(), format!("{mean:.3e}"), format!("{max:.3e}")]
        })
        .collect();
    out.push('\n');
    table(out, &["k_mach", "runs", "mean_rel_error", "max_rel_error"], &rows);
}

fn hierarchy_summary(out: &mut String, r: &Records) {
    let correct = r.rows.iter().filter(|row| r.get(row, "correct") == "yes").count();
    let at_rule: Vec<_> = r.rows.iter().filter(|row| r.get(row, "k_mach") == r.get(row, "rule_k_mach")).collect();
    let rule_ok = at_rule.iter().filter(|row| r.get(row, "correct") == "yes").count();
    let _ = writeln!(
        out,
        "hierarchy: {} rows; decide agrees with membership in {correct} ({}); at the sufficient precision {rule_ok}/{} ({})",
        r.rows.len(),
        pct(correct, r.rows.len()),
        at_rule.len(),
        pct(rule_ok, at_rule.len())
    );
    let mut by_mu: BTreeMap<(u64, String), Vec<&csv::StringRecord>> = BTreeMap::new();
    for row in &r.rows {
        by_mu.entry(kmach_key(r.get(row, "log2_mu"))).or_default().push(row);
    }
    let rows: Vec<Vec<String>> = by_mu
        .iter()
        .map(|((_, l), rows)| {
            let ks: Vec<u64> = rows.iter().filter_map(|row| r.get(row, "rule_k_mach").parse().ok()).collect();
            let range = match (ks.iter().min(), ks.iter().max()) {
                (Some(a), Some(b)) if a == b => a.to_string(),
                (Some(a), Some(b)) => format!("{a}..{b}"),
                _ => "-".into(),
            };
            let ok = rows.iter().filter(|row| r.get(row, "correct") == "yes").count();
            let witnesses = rows.iter().filter(|row| !r.get(row, "witness_delta").is_empty()).count();
            vec![l.clone(), rows.len().to_string(), range, format!("{ok}/{}", rows.len()), witnesses.to_string()]
        })
        .collect();
    table(out, &["log2_mu", "rows", "required_k_mach", "correct", "witnesses"], &rows);
}

fn condition_summary(out: &mut String, r: &Records) {
    let _ = writeln!(out, "condition: {} rows", r.rows.len());
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            ["circuit", "kind", "point", "verdict", "mu_approx", "direction", "k_mach"]
                .iter()
                .map(|c| {
                    let v = r.get(row, c);
                    if v.is_empty() { "-".to_string() } else { v.to_string() }
                })
                .collect()
        })
        .collect();
    table(out, &["circuit", "kind", "point", "verdict", "mu", "direction", "k_mach"], &rows);
}

/// Summary text for CSV files of a single kind.
pub fn report(paths: &[PathBuf]) -> Result<String> {
    let (name, records) = read(paths)?;
    let mut out = String::new();
    match name {
        "decide" => verdicts(&mut out, "decide", &records, &["yes", "no", "unsure"]),
        "sign1d" => verdicts(&mut out, "sign1d", &records, &["yes", "no", "unsure"]),
        "eval" => verdicts(&mut out, "eval", &records, &["in", "out", "unsure"]),
        "sqrt" => sqrt_summary(&mut out, &records),
        "hierarchy" => hierarchy_summary(&mut out, &records),
        "condition" => condition_summary(&mut out, &records),
        _ => unreachable!("schemas are listed above"),
    }
    Ok(out)
}
