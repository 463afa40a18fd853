//! Phase-timing benchmark over a list of dependency trees, repeated for a
//! number of rounds against one shared pool.

use std::fmt::Write as _;
use std::time::Duration;

use crate::depset::DependencyTree;
use crate::engine::{DependencyInput, Engine, EngineError};
use crate::stitch::StitchOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub round: usize,
    /// Tree label, or `total` for a round's cumulative row.
    pub tree: String,
    pub deps: u64,
    pub pool: Duration,
    pub uch: Duration,
    pub stitch: Duration,
    pub generations: u64,
    pub avoided: u64,
    pub parses: u64,
}

impl BenchRow {
    pub fn total(&self) -> Duration {
        self.pool + self.uch + self.stitch
    }

    fn accumulate(&mut self, other: &BenchRow) {
        self.deps += other.deps;
        self.pool += other.pool;
        self.uch += other.uch;
        self.stitch += other.stitch;
        self.generations += other.generations;
        self.avoided += other.avoided;
        self.parses += other.parses;
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    /// Per-tree rows followed by one `total` row per round.
    pub rows: Vec<BenchRow>,
}

const HEADER: [&str; 10] = [
    "round", "tree", "deps", "poolMs", "uchMs", "stitchMs", "totalMs", "generations",
    "avoided", "parses",
];

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1000.0)
}

impl BenchReport {
    pub fn round_total(&self, round: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.round == round && r.tree == "total")
    }

    fn records(&self) -> impl Iterator<Item = [String; 10]> + '_ {
        self.rows.iter().map(|r| {
            [
                r.round.to_string(),
                r.tree.clone(),
                r.deps.to_string(),
                ms(r.pool),
                ms(r.uch),
                ms(r.stitch),
                ms(r.total()),
                r.generations.to_string(),
                r.avoided.to_string(),
                r.parses.to_string(),
            ]
        })
    }

    /// One object per row, keyed like the CSV header.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .records()
            .map(|r| {
                let mut obj = serde_json::Map::new();
                for (i, (key, cell)) in HEADER.iter().zip(r).enumerate() {
                    let value = match i {
                        1 => serde_json::Value::String(cell),
                        _ => serde_json::from_str(&cell).expect("numeric cell"),
                    };
                    obj.insert(key.to_string(), value);
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for record in self.records() {
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Right-aligned plain-text table.
    pub fn to_text(&self) -> String {
        let records: Vec<[String; 10]> = self.records().collect();
        let mut widths = HEADER.map(str::len);
        for r in &records {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &mut dyn Iterator<Item = &str>| {
            let row: Vec<String> = cells
                .zip(widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            writeln!(out, "{}", row.join("  ")).unwrap();
        };
        line(&mut HEADER.iter().copied());
        for r in &records {
            line(&mut r.iter().map(String::as_str));
        }
        out
    }
}

/// Stitches every tree once per round in order, recording one row per
/// run plus a cumulative row per round.
pub fn run_bench(
    engine: &Engine,
    trees: &[(String, DependencyTree)],
    rounds: usize,
    options: &StitchOptions,
) -> Result<BenchReport, EngineError> {
    let mut report = BenchReport::default();
    for round in 1..=rounds {
        let mut total = BenchRow {
            round,
            tree: "total".to_string(),
            deps: 0,
            pool: Duration::ZERO,
            uch: Duration::ZERO,
            stitch: Duration::ZERO,
            generations: 0,
            avoided: 0,
            parses: 0,
        };
        for (label, tree) in trees {
            let run = engine.run(&DependencyInput::Tree(tree.clone()), options)?;
            let phases = run.phases();
            let row = BenchRow {
                round,
                tree: label.clone(),
                deps: run.requests,
                pool: phases.pool,
                uch: phases.uch,
                stitch: phases.stitch,
                generations: run.generations,
                avoided: run.requests - run.generations,
                parses: run.parses,
            };
            total.accumulate(&row);
            report.rows.push(row);
        }
        report.rows.push(total);
    }
    Ok(report)
}
