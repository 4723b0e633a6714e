use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::SweepCell;
use super::stats::{mean, paired_bootstrap_p, sample_std};
use crate::planner::{DecisionKind, EpisodeRecord};

/// Per-episode record written as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub label: String,
    pub condition: String,
    pub seed: usize,
    pub task: usize,
    pub rollout: usize,
    pub success: bool,
    pub steps: usize,
    pub waypoints: usize,
    pub final_goal: usize,
    pub reachable: usize,
    pub fallback: usize,
}

impl EpisodeSummary {
    pub(crate) fn new(
        label: &str,
        condition: &str,
        (seed, task, rollout): (usize, usize, usize),
        record: &EpisodeRecord,
        waypoints: usize,
    ) -> Self {
        let count = |k| record.trace.iter().filter(|s| s.kind == Some(k)).count();
        Self {
            label: label.to_owned(),
            condition: condition.to_owned(),
            seed,
            task,
            rollout,
            success: record.success,
            steps: record.steps,
            waypoints,
            final_goal: count(DecisionKind::FinalGoal),
            reachable: count(DecisionKind::FarthestReachable),
            fallback: count(DecisionKind::FallbackNext),
        }
    }
}

pub fn records_to_jsonl(records: &[EpisodeSummary]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Success rates in percent, keyed by `(seed, task)`.
fn cell_rates(records: &[&EpisodeSummary]) -> BTreeMap<(usize, usize), f64> {
    let mut counts: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = counts.entry((r.seed, r.task)).or_default();
        e.0 += usize::from(r.success);
        e.1 += 1;
    }
    counts
        .into_iter()
        .map(|(k, (s, n))| (k, 100.0 * s as f64 / n as f64))
        .collect()
}

/// Per-seed success averaged over tasks, in seed order.
fn seed_means(rates: &BTreeMap<(usize, usize), f64>) -> Vec<f64> {
    let mut by_seed: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (&(seed, _), &r) in rates {
        by_seed.entry(seed).or_default().push(r);
    }
    by_seed.values().map(|v| mean(v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub condition: String,
    /// Task index, or `all` for the across-task average.
    pub task: String,
    pub success_mean: f64,
    pub success_std: f64,
    pub n_seeds: usize,
}

/// Success mean and sample standard deviation across seeds, per
/// (label, condition, task), plus an `all` row per (label, condition).
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ResultTable {
    pub rows: Vec<TableRow>,
}

impl ResultTable {
    pub fn from_records(records: &[EpisodeSummary]) -> Self {
        let mut groups: Vec<((String, String), Vec<&EpisodeSummary>)> = Vec::new();
        for r in records {
            let key = (r.label.clone(), r.condition.clone());
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(r),
                None => groups.push((key, vec![r])),
            }
        }
        let mut rows = Vec::new();
        for ((label, condition), recs) in groups {
            let rates = cell_rates(&recs);
            let mut by_task: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for (&(_, task), &r) in &rates {
                by_task.entry(task).or_default().push(r);
            }
            let row = |task: String, xs: &[f64]| TableRow {
                label: label.clone(),
                condition: condition.clone(),
                task,
                success_mean: mean(xs),
                success_std: sample_std(xs),
                n_seeds: xs.len(),
            };
            for (task, xs) in &by_task {
                rows.push(row(task.to_string(), xs));
            }
            rows.push(row("all".into(), &seed_means(&rates)));
        }
        Self { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,condition,task,success_mean,success_std,n_seeds\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.2},{:.2},{}",
                r.label, r.condition, r.task, r.success_mean, r.success_std, r.n_seeds
            )
            .unwrap();
        }
        out
    }
}

/// Paired TTGS-versus-base summary for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub label: String,
    pub base_mean: f64,
    pub base_std: f64,
    pub ttgs_mean: f64,
    pub ttgs_std: f64,
    pub lift: f64,
    pub pooled_std: f64,
    /// One-sided paired bootstrap p-value over (seed, task) cells.
    pub p_value: f64,
}

impl Comparison {
    pub fn new(label: &str, base: &[EpisodeSummary], ttgs: &[EpisodeSummary], resamples: usize, seed: u64) -> Self {
        let b = cell_rates(&base.iter().collect::<Vec<_>>());
        let t = cell_rates(&ttgs.iter().collect::<Vec<_>>());
        let keys: Vec<_> = b.keys().filter(|k| t.contains_key(k)).copied().collect();
        let bv: Vec<f64> = keys.iter().map(|k| b[k]).collect();
        let tv: Vec<f64> = keys.iter().map(|k| t[k]).collect();
        let (bs, ts) = (seed_means(&b), seed_means(&t));
        let (base_std, ttgs_std) = (sample_std(&bs), sample_std(&ts));
        Self {
            label: label.to_owned(),
            base_mean: mean(&bs),
            base_std,
            ttgs_mean: mean(&ts),
            ttgs_std,
            lift: mean(&ts) - mean(&bs),
            pooled_std: ((base_std.powi(2) + ttgs_std.powi(2)) / 2.0).sqrt(),
            p_value: paired_bootstrap_p(&bv, &tv, resamples, seed),
        }
    }

    /// TTGS is not worse than base by more than two pooled deviations.
    pub fn robust(&self) -> bool {
        self.ttgs_mean >= self.base_mean - 2.0 * self.pooled_std
    }

    pub const CSV_HEADER: &'static str = "label,base_mean,base_std,ttgs_mean,ttgs_std,lift,pooled_std,p_value";

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{:.6}",
            self.label, self.base_mean, self.base_std, self.ttgs_mean, self.ttgs_std, self.lift, self.pooled_std, self.p_value
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_fields())
    }
}

/// One sweep cell: its comparison, or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub outcome: Result<Comparison, String>,
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("tau,budget,m,{},robust,status\n", Comparison::CSV_HEADER);
    for r in rows {
        let c = r.cell;
        match &r.outcome {
            Ok(cmp) => writeln!(out, "{},{},{},{},{},ok", c.tau, c.budget, c.m, cmp.csv_fields(), cmp.robust()),
            Err(e) => writeln!(
                out,
                "{},{},{},{},,,,,,,,,\"error: {}\"",
                c.tau,
                c.budget,
                c.m,
                cell_label(c),
                e.replace('"', "'")
            ),
        }
        .unwrap();
    }
    out
}

pub fn cell_label(c: SweepCell) -> String {
    format!("tau={}_T={}_M={}", c.tau, c.budget, c.m)
}
