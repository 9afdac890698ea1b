//! Grid sweeps that measure averaged error terms against the theorem
//! right-hand sides and label every row by regime.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use divprog_core::arith::{gcd, Interval};
use divprog_core::main_term::{error_terms, sum_abs_and_signed, ErrorTermRecord, ResidueSet, SetMode};
use divprog_core::voronoi::{VoronoiExpansion, VoronoiOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, SetSpec};
use crate::error::{CliError, Result};
use crate::report::{float_value, render_json, write_file, Cell, Format, Table};
use crate::theorems;

pub const INTERVAL_COLUMNS: [&str; 11] = [
    "x", "q", "a_len", "b", "cardinality", "dropped", "y", "measured", "rhs", "ratio", "in_regime",
];
pub const SET_COLUMNS: [&str; 12] = [
    "x", "q", "a_len", "sample", "set", "cardinality", "dropped", "y", "measured", "rhs", "ratio", "in_regime",
];
pub const EXCEPTIONAL_COLUMNS: [&str; 8] = ["x", "q", "kappa", "threshold", "count", "envelope", "ratio", "in_regime"];
pub const VORONOI_COLUMNS: [&str; 11] = [
    "x", "q", "y", "a", "r_exact", "r_voronoi", "residual", "budget", "r_smoothed", "ratio", "in_regime",
];

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub table: Table,
    pub summary: Value,
    pub breaches: Vec<String>,
}

#[cfg(feature = "parallel")]
fn map_ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_ordered<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

fn grid_pairs(cfg: &ExperimentConfig) -> Vec<(u64, u64)> {
    cfg.x
        .iter()
        .flat_map(|&x| cfg.q.iter().map(move |&q| (x, q)))
        .collect()
}

fn set_sizes(spec: &SetSpec, q: u64) -> Vec<u64> {
    match spec {
        SetSpec::Sizes { a, .. } => a.clone(),
        SetSpec::Exponents { exponents, .. } => exponents
            .iter()
            .map(|e| ((q as f64).powf(*e).round() as u64).max(1))
            .collect(),
        SetSpec::Files(_) | SetSpec::None => Vec::new(),
    }
}

fn offsets(spec: &SetSpec) -> &[u64] {
    match spec {
        SetSpec::Sizes { b, .. } | SetSpec::Exponents { b, .. } => b,
        _ => &[],
    }
}

/// Records for the given residues, which must be below `q`.
fn pick(records: &[ErrorTermRecord], residues: &[u64]) -> Vec<ErrorTermRecord> {
    residues.iter().map(|&a| records[a as usize]).collect()
}

/// `size` distinct residues from `[1, q-1]`, drawn from stream `stream` of
/// a ChaCha8 generator seeded with `seed`.
pub fn random_set(seed: u64, stream: u64, q: u64, size: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = (q - 1) as usize;
    let mut v: Vec<u64> = rand::seq::index::sample(&mut rng, n, (size as usize).min(n))
        .into_iter()
        .map(|i| i as u64 + 1)
        .collect();
    v.sort_unstable();
    v
}

fn read_residue_file(path: &Path) -> Result<Vec<u64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_residue_list(&text).map_err(|msg| CliError::Usage(format!("{}: {msg}", path.display())))
}

/// Integers separated by whitespace or commas; `#` starts a comment.
pub fn parse_residue_list(text: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            out.push(tok.parse().map_err(|_| format!("line {}: bad residue {tok:?}", i + 1))?);
        }
    }
    Ok(out)
}

fn ratio(measured: f64, rhs: f64) -> f64 {
    measured / rhs
}

fn interval_rows(cfg: &ExperimentConfig) -> Result<Table> {
    let prime = cfg.kind == ExperimentKind::IntervalPrime;
    let mut table = Table::new(&INTERVAL_COLUMNS);
    let per_pair = map_ordered(&grid_pairs(cfg), |&(x, q)| -> Result<Vec<Vec<Cell>>> {
        let records = error_terms(x, q)?;
        let mut rows = Vec::new();
        for a_len in set_sizes(&cfg.sets, q) {
            for &b in offsets(&cfg.sets) {
                let set = ResidueSet::Interval(Interval::new(b, a_len));
                let resolved = set.resolve(q, SetMode::Lenient)?;
                let (d_sum, e_sum) = sum_abs_and_signed(&pick(&records, &resolved.residues));
                let (xf, qf, af) = (x as f64, q as f64, a_len as f64);
                let (measured, rhs, in_regime) = if prime {
                    (
                        d_sum,
                        theorems::interval_prime_rhs(af, xf, qf),
                        theorems::interval_prime_regime(af, xf, qf),
                    )
                } else {
                    (
                        e_sum.abs(),
                        theorems::interval_any_rhs(af, xf, qf),
                        theorems::interval_any_regime(af, xf, qf),
                    )
                };
                rows.push(vec![
                    x.into(),
                    q.into(),
                    a_len.into(),
                    b.into(),
                    resolved.residues.len().into(),
                    resolved.dropped.into(),
                    cfg.y.resolve(xf, qf, af, cfg.epsilon).into(),
                    measured.into(),
                    rhs.into(),
                    ratio(measured, rhs).into(),
                    in_regime.into(),
                ]);
            }
        }
        Ok(rows)
    });
    for rows in per_pair {
        for row in rows? {
            table.push(row);
        }
    }
    Ok(table)
}

fn arbitrary_set_rows(cfg: &ExperimentConfig) -> Result<Table> {
    let mut table = Table::new(&SET_COLUMNS);
    let files: Vec<(String, Vec<u64>)> = match &cfg.sets {
        SetSpec::Files(paths) => paths
            .iter()
            .map(|p| {
                let full = cfg.base_dir.join(p);
                Ok((p.display().to_string(), read_residue_file(&full)?))
            })
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };
    let pairs = grid_pairs(cfg);
    let indexed: Vec<(usize, (u64, u64))> = pairs.into_iter().enumerate().collect();
    let per_pair = map_ordered(&indexed, |&(pair_idx, (x, q))| -> Result<Vec<Vec<Cell>>> {
        let records = error_terms(x, q)?;
        let mut sets: Vec<(u64, u64, String, ResidueSet)> = Vec::new();
        for (name, list) in &files {
            sets.push((list.len() as u64, 0, name.clone(), ResidueSet::List(list.clone())));
        }
        for (k, a_len) in set_sizes(&cfg.sets, q).into_iter().enumerate() {
            for sample in 0..cfg.samples {
                // One stream per (grid pair, size, sample) keeps rows
                // independent of the thread schedule.
                let stream = ((pair_idx as u64) << 32) | ((k as u64) << 16) | sample;
                let list = random_set(cfg.seed, stream, q, a_len);
                sets.push((a_len, sample, format!("random:{stream}"), ResidueSet::List(list)));
            }
        }
        let mut rows = Vec::new();
        for (a_len, sample, name, set) in sets {
            let resolved = set.resolve(q, SetMode::Lenient)?;
            let (d_sum, _) = sum_abs_and_signed(&pick(&records, &resolved.residues));
            let (xf, qf) = (x as f64, q as f64);
            let af = resolved.residues.len().max(1) as f64;
            let rhs = theorems::arbitrary_set_rhs(af, xf, qf);
            rows.push(vec![
                x.into(),
                q.into(),
                a_len.into(),
                sample.into(),
                name.into(),
                resolved.residues.len().into(),
                resolved.dropped.into(),
                cfg.y.resolve(xf, qf, af, cfg.epsilon).into(),
                d_sum.into(),
                rhs.into(),
                ratio(d_sum, rhs).into(),
                theorems::arbitrary_set_regime(af, xf, qf, cfg.epsilon).into(),
            ]);
        }
        Ok(rows)
    });
    for rows in per_pair {
        for row in rows? {
            table.push(row);
        }
    }
    Ok(table)
}

fn exceptional_rows(cfg: &ExperimentConfig) -> Result<Table> {
    let mut table = Table::new(&EXCEPTIONAL_COLUMNS);
    let per_pair = map_ordered(&grid_pairs(cfg), |&(x, p)| -> Result<Vec<Vec<Cell>>> {
        let records = error_terms(x, p)?;
        Ok(cfg
            .kappa
            .iter()
            .map(|&kappa| {
                let xf = x as f64;
                let threshold = xf.powf(1.0 / 3.0 - kappa);
                let count = records.iter().filter(|r| r.a != 0 && r.r >= threshold).count();
                let envelope = theorems::exceptional_envelope(xf, p as f64, kappa);
                vec![
                    x.into(),
                    p.into(),
                    kappa.into(),
                    threshold.into(),
                    count.into(),
                    envelope.into(),
                    (count as f64 / envelope).into(),
                    theorems::exceptional_regime(xf, p as f64, kappa).into(),
                ]
            })
            .collect())
    });
    for rows in per_pair {
        for row in rows? {
            table.push(row);
        }
    }
    Ok(table)
}

fn voronoi_rows(cfg: &ExperimentConfig) -> Result<Table> {
    let mut table = Table::new(&VORONOI_COLUMNS);
    let options = VoronoiOptions {
        epsilon: cfg.epsilon,
        truncation_factor: cfg.truncation_factor,
        ..VoronoiOptions::default()
    };
    for (x, q) in grid_pairs(cfg) {
        let (xf, qf) = (x as f64, q as f64);
        let raw_y = cfg.y.raw(xf, qf, 1.0, cfg.epsilon);
        let y = cfg.y.resolve(xf, qf, 1.0, cfg.epsilon);
        let in_regime = (1.0..=xf / 2.0).contains(&raw_y);
        let expansion = VoronoiExpansion::new(x, q, y, options)?;
        let residues: Vec<i64> = match &cfg.residues {
            Some(list) => list.iter().map(|&a| a as i64).collect(),
            None => (1..q).filter(|&a| gcd(a, q) == 1).map(|a| a as i64).collect(),
        };
        let checks = map_ordered(&residues, |&a| expansion.check(a));
        for c in checks {
            let c = c?;
            table.push(vec![
                x.into(),
                q.into(),
                y.into(),
                c.a.into(),
                c.r_exact.into(),
                c.r_voronoi.into(),
                c.residual.into(),
                c.budget.into(),
                c.r_smoothed.into(),
                (c.residual / c.budget).into(),
                in_regime.into(),
            ]);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioStats {
    /// Grid points, not rows.
    pub points: usize,
    pub max: Option<f64>,
    /// Smallest positive ratio.
    pub min_positive: Option<f64>,
}

impl RatioStats {
    fn add(&mut self, r: f64) {
        self.points += 1;
        self.max = Some(self.max.map_or(r, |m| m.max(r)));
        if r > 0.0 {
            self.min_positive = Some(self.min_positive.map_or(r, |m| m.min(r)));
        }
    }

    /// `max / min_positive`.
    pub fn variation(&self) -> Option<f64> {
        Some(self.max? / self.min_positive?)
    }

    fn to_json(self) -> Value {
        json!({
            "points": self.points,
            "max_ratio": self.max.map_or(Value::Null, float_value),
            "min_positive_ratio": self.min_positive.map_or(Value::Null, float_value),
            "variation": self.variation().map_or(Value::Null, float_value),
        })
    }
}

/// Columns that identify a grid point; rows differing only elsewhere (the
/// random sample, say) belong to the same point.
const POINT_COLUMNS: [&str; 6] = ["x", "q", "a_len", "b", "kappa", "a"];

/// Ratio statistics split by the `in_regime` column. Each grid point
/// contributes the largest ratio among its rows.
pub fn regime_stats(table: &Table) -> (RatioStats, RatioStats) {
    let ri = table.column("ratio").expect("sweep tables have a ratio column");
    let gi = table.column("in_regime").expect("sweep tables have a regime column");
    let key_cols: Vec<usize> = POINT_COLUMNS.iter().filter_map(|c| table.column(c)).collect();
    let mut points: BTreeMap<(Vec<String>, bool), f64> = BTreeMap::new();
    for row in &table.rows {
        let Cell::Float(r) = row[ri] else { continue };
        let key: Vec<String> = key_cols.iter().map(|&k| format!("{:?}", row[k])).collect();
        let entry = points.entry((key, row[gi] == Cell::Bool(true))).or_insert(r);
        *entry = entry.max(r);
    }
    let mut inside = RatioStats::default();
    let mut outside = RatioStats::default();
    for ((_, g), r) in points {
        if g {
            inside.add(r);
        } else {
            outside.add(r);
        }
    }
    (inside, outside)
}

pub fn run_theorem_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let mut table = match cfg.kind {
        ExperimentKind::IntervalPrime | ExperimentKind::IntervalAny => interval_rows(cfg)?,
        ExperimentKind::ArbitrarySet => arbitrary_set_rows(cfg)?,
        ExperimentKind::ExceptionalSet => exceptional_rows(cfg)?,
        ExperimentKind::Voronoi => voronoi_rows(cfg)?,
    };
    table.meta("experiment", &cfg.id);
    table.meta("kind", cfg.kind.name());
    table.meta("seed", cfg.seed);
    table.meta_float("epsilon", cfg.epsilon);
    table.meta("y_policy", cfg.y.name());
    if cfg.kind == ExperimentKind::ArbitrarySet {
        table.meta("rng", "ChaCha8");
    }

    let (inside, outside) = regime_stats(&table);
    let mut breaches = Vec::new();
    if let Some(t) = cfg.thresholds {
        if let (Some(limit), Some(max)) = (t.max_ratio, inside.max) {
            if !(max <= limit) {
                breaches.push(format!("max in-regime ratio {max} exceeds {limit}"));
            }
        }
        if let Some(limit) = t.max_variation {
            match inside.variation() {
                Some(v) if v <= limit => {}
                Some(v) => breaches.push(format!("in-regime ratio variation {v} exceeds {limit}")),
                None => breaches.push("no positive in-regime ratios to measure variation".into()),
            }
        }
    }
    let summary = json!({
        "experiment": cfg.id,
        "kind": cfg.kind.name(),
        "seed": cfg.seed,
        "epsilon": float_value(cfg.epsilon),
        "y_policy": cfg.y.name(),
        "rows": table.rows.len(),
        "in_regime": inside.to_json(),
        "out_of_regime": outside.to_json(),
        "thresholds": cfg.thresholds.map_or(Value::Null, |t| json!({
            "max_ratio": t.max_ratio.map_or(Value::Null, float_value),
            "max_variation": t.max_variation.map_or(Value::Null, float_value),
        })),
        "breaches": breaches,
    });
    Ok(SweepOutcome {
        table,
        summary,
        breaches,
    })
}

/// Writes `<output>.<ext>` and `<output>.summary.json` under `out_dir`.
pub fn write_sweep(outcome: &SweepOutcome, cfg: &ExperimentConfig, out_dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    let rows = out_dir.join(format!("{}.{}", cfg.output, format.extension()));
    let summary = out_dir.join(format!("{}.summary.json", cfg.output));
    write_file(&rows, &outcome.table.render(format))?;
    write_file(&summary, &render_json(&outcome.summary))?;
    Ok(vec![rows, summary])
}
