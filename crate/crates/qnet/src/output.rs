//! Tables and their CSV/JSON renderings.
//!
//! Decimals are written as strings in JSON so that no digit is lost to a
//! binary float on the way back in.

use std::path::{Path, PathBuf};

use qnet_core::measures::{StationaryResult, WaitConvention};
use qnet_core::simulator::SimulationResult;
use qnet_core::{PrecisionContext, Real, TransitionMatrix};
use serde_json::{Map, Value};

use crate::config::{Format, OutputKind};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    m.insert((*name).to_string(), cell.json());
                }
                Value::Object(m)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&Value::Array(rows)).expect("serializable");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Decimal formatting: full working precision, or `round` places half-even.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    pub digits: usize,
    pub round: Option<usize>,
}

impl Style {
    pub fn new(ctx: &PrecisionContext, round: Option<usize>) -> Self {
        Style { digits: ctx.digits(), round }
    }

    pub fn real(&self, v: &Real) -> String {
        match self.round {
            Some(k) => v.to_fixed_string(k),
            None => v.to_sig_string(self.digits),
        }
    }

    pub fn float(&self, v: f64) -> String {
        match self.round {
            Some(k) => format!("{v:.k$}"),
            None => format!("{v}"),
        }
    }

    fn text(&self, v: &Real) -> Cell {
        Cell::Text(self.real(v))
    }
}

pub fn stationary_table(r: &StationaryResult, style: Style) -> Table {
    let mut t = Table::new(&["n", "pi", "p"]);
    for (n, p) in r.time_average.probabilities.iter().enumerate() {
        t.rows.push(vec![Cell::Int(n as u64), style.text(r.arrival.get(n)), style.text(p)]);
    }
    t
}

pub fn performance_report(r: &StationaryResult, sigma: Option<&Real>, style: Style) -> Table {
    let rep = &r.report;
    let mut t = Table::new(&["metric", "value"]);
    let mut push = |name: &str, cell: Cell| t.rows.push(vec![Cell::Text(name.to_string()), cell]);
    if let Some(s) = sigma {
        push("sigma", style.text(s));
    }
    push("N", Cell::Int(r.arrival.n as u64));
    push("L", style.text(&rep.l));
    push("Lq", style.text(&rep.lq));
    push("W", style.text(&rep.w));
    push("Wq", style.text(&rep.wq));
    push("lambda_eff", style.text(&rep.lambda_eff));
    push("blocking_time_avg", style.text(&rep.blocking_time_avg));
    push("W_offered", style.text(&rep.w_offered));
    push("tail_mass", style.text(&r.time_average.tail_mass));
    let convention = match rep.convention {
        WaitConvention::EffectiveRate => "effective_rate",
        WaitConvention::OfferedRate => "offered_rate",
    };
    push("convention", Cell::Text(convention.to_string()));
    t
}

pub fn pmf_data(r: &StationaryResult, style: Style) -> Table {
    let mut t = Table::new(&["n", "p"]);
    for (n, p) in r.time_average.probabilities.iter().enumerate() {
        t.rows.push(vec![Cell::Int(n as u64), style.text(p)]);
    }
    t
}

pub fn cdf_data(r: &StationaryResult, ctx: &PrecisionContext, style: Style) -> Table {
    let mut t = Table::new(&["n", "cdf"]);
    for (n, v) in r.time_average.cdf(ctx).iter().enumerate() {
        t.rows.push(vec![Cell::Int(n as u64), style.text(v)]);
    }
    t
}

/// Nonzero entries only; the matrices are lower Hessenberg (or close to it).
pub fn matrix_dump(p: &TransitionMatrix, style: Style) -> Table {
    let mut t = Table::new(&["i", "j", "p"]);
    for (i, row) in p.rows().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                t.rows.push(vec![Cell::Int(i as u64), Cell::Int(j as u64), style.text(v)]);
            }
        }
    }
    t
}

pub fn simulated_table(s: &SimulationResult, style: Style) -> Table {
    let mut t = Table::new(&["n", "pi", "p", "source", "pi_se", "p_se"]);
    for n in 0..s.time_avg_freq.len() {
        t.rows.push(vec![
            Cell::Int(n as u64),
            Cell::Text(style.float(s.pre_arrival_freq[n])),
            Cell::Text(style.float(s.time_avg_freq[n])),
            Cell::Text(String::from("simulated")),
            Cell::Text(style.float(s.standard_errors.pre_arrival[n])),
            Cell::Text(style.float(s.standard_errors.time_average[n])),
        ]);
    }
    t
}

/// Analytic rows (empty SE columns) followed by simulated rows.
pub fn comparison_table(r: &StationaryResult, s: &SimulationResult, style: Style) -> Table {
    let mut t = simulated_table(s, style);
    let analytic: Vec<Vec<Cell>> = r
        .time_average
        .probabilities
        .iter()
        .enumerate()
        .map(|(n, p)| {
            vec![
                Cell::Int(n as u64),
                style.text(r.arrival.get(n)),
                style.text(p),
                Cell::Text(String::from("analytic")),
                Cell::Text(String::new()),
                Cell::Text(String::new()),
            ]
        })
        .collect();
    t.rows.splice(0..0, analytic);
    t
}

pub fn simulated_report(s: &SimulationResult, style: Style) -> Table {
    let mut t = Table::new(&["metric", "value"]);
    let mut push = |name: &str, cell: Cell| t.rows.push(vec![Cell::Text(name.to_string()), cell]);
    push("L", Cell::Text(style.float(s.mean_in_system())));
    push("accepted_fraction", Cell::Text(style.float(s.accepted_fraction)));
    push("arrivals", Cell::Int(s.arrivals_simulated));
    push("warmup", Cell::Int(s.warmup));
    push("seed", Cell::Int(s.seed));
    push("horizon", Cell::Text(style.float(s.horizon)));
    push("accepted", Cell::Int(s.accepted));
    push("served", Cell::Int(s.served));
    push("final_in_system", Cell::Int(s.final_in_system));
    t
}

pub fn simulated_pmf(s: &SimulationResult, style: Style) -> Table {
    let mut t = Table::new(&["n", "p"]);
    for (n, p) in s.time_avg_freq.iter().enumerate() {
        t.rows.push(vec![Cell::Int(n as u64), Cell::Text(style.float(*p))]);
    }
    t
}

pub fn simulated_cdf(s: &SimulationResult, style: Style) -> Table {
    let mut t = Table::new(&["n", "cdf"]);
    let mut acc = 0.0;
    for (n, p) in s.time_avg_freq.iter().enumerate() {
        acc += p;
        t.rows.push(vec![Cell::Int(n as u64), Cell::Text(style.float(acc))]);
    }
    t
}

/// `<dir>/<stem>.<output>.<ext>`
pub fn output_path(dir: &Path, stem: &str, kind: OutputKind, format: Format) -> PathBuf {
    dir.join(format!("{stem}.{}.{}", kind.name(), format.extension()))
}

pub fn write(path: &Path, table: &Table, format: Format) -> Result<(), CliError> {
    std::fs::write(path, table.render(format)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
