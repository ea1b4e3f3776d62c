//! CSV row schema, deterministic formatting, and the pivot layout.
//!
//! Values print with 10 significant digits and a `.` decimal separator;
//! rows are sorted by `(p_i, p_d, quantity, L)` before writing so output
//! bytes are reproducible for fixed flags and seed.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use didcap::ChannelParams;

#[derive(Debug, Clone)]
pub struct CsvRow {
    pub p_i: f64,
    pub p_d: f64,
    pub quantity: String,
    pub l: Option<usize>,
    pub value: f64,
    pub aux: String,
    pub converged: bool,
}

impl CsvRow {
    pub fn new(params: ChannelParams, quantity: &str, l: Option<usize>, value: f64) -> Self {
        Self {
            p_i: params.p_i(),
            p_d: params.p_d(),
            quantity: quantity.to_string(),
            l,
            value,
            aux: String::new(),
            converged: true,
        }
    }

    pub fn aux(mut self, aux: impl Into<String>) -> Self {
        self.aux = aux.into();
        self
    }

    pub fn converged(mut self, converged: bool) -> Self {
        self.converged = converged;
        self
    }
}

pub fn row_order(a: &CsvRow, b: &CsvRow) -> Ordering {
    a.p_i
        .total_cmp(&b.p_i)
        .then(a.p_d.total_cmp(&b.p_d))
        .then(a.quantity.cmp(&b.quantity))
        .then(a.l.cmp(&b.l))
}

/// 10 significant digits, plain decimal notation.
pub fn sig10(v: f64) -> String {
    if v == 0.0 {
        return "0.000000000".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (9 - exp).clamp(0, 25) as usize;
    format!("{v:.decimals$}")
}

fn header() -> &'static str {
    "p_i,p_d,quantity,L,value,aux,converged\n"
}

fn format_row(r: &CsvRow) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        sig10(r.p_i),
        sig10(r.p_d),
        r.quantity,
        r.l.map_or(String::new(), |l| l.to_string()),
        sig10(r.value),
        r.aux,
        r.converged
    )
}

pub fn write_rows(path: Option<&Path>, rows: &[CsvRow]) -> std::io::Result<()> {
    let mut sorted: Vec<&CsvRow> = rows.iter().collect();
    sorted.sort_by(|a, b| row_order(a, b));
    let mut text = String::from(header());
    for r in sorted {
        text.push_str(&format_row(r));
    }
    write_text(path, &text)
}

/// Pivot layout: one row per parameter point, one column per quantity
/// (windowed quantities get `_L<k>` suffixes), for direct plotting.
pub fn write_pivot(path: Option<&Path>, rows: &[CsvRow]) -> std::io::Result<()> {
    let mut cols: BTreeSet<String> = BTreeSet::new();
    let mut keys: BTreeSet<(u64, u64)> = BTreeSet::new();
    for r in rows {
        cols.insert(col_name(r));
        keys.insert((r.p_i.to_bits(), r.p_d.to_bits()));
    }
    let cols: Vec<String> = cols.into_iter().collect();
    let mut text = String::from("p_i,p_d");
    for c in &cols {
        text.push(',');
        text.push_str(c);
    }
    text.push('\n');
    for (pi_bits, pd_bits) in keys {
        let (p_i, p_d) = (f64::from_bits(pi_bits), f64::from_bits(pd_bits));
        text.push_str(&format!("{},{}", sig10(p_i), sig10(p_d)));
        for c in &cols {
            let cell = rows
                .iter()
                .find(|r| {
                    r.p_i.to_bits() == pi_bits && r.p_d.to_bits() == pd_bits && &col_name(r) == c
                })
                .map(|r| sig10(r.value))
                .unwrap_or_default();
            text.push(',');
            text.push_str(&cell);
        }
        text.push('\n');
    }
    write_text(path, &text)
}

fn col_name(r: &CsvRow) -> String {
    match r.l {
        Some(l) => format!("{}_L{l}", r.quantity.trim_end_matches("_L")),
        None => r.quantity.clone(),
    }
}

pub fn write_text(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
        }
    }
}
