//! Aggregate tables over run records. A failed run scores 0.0 wherever a
//! quality average is taken.

use std::collections::BTreeMap;

use serde::Serialize;

use super::records::{RunRecord, Strategy};
use super::runner::GroundTruth;
use crate::llm::SessionStatus;

/// Candidates within this distance of the best true quality count as best.
pub const BEST_BUFFER: f64 = 0.02;
const EPS: f64 = 1e-9;

fn q(x: Option<f64>) -> f64 {
    x.unwrap_or(0.0)
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn by_provider(records: &[RunRecord], strategy: Strategy) -> BTreeMap<&str, Vec<&RunRecord>> {
    let mut m: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.strategy == strategy) {
        m.entry(r.provider.as_str()).or_default().push(r);
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub provider: String,
    pub runs: usize,
    pub avg_iterations: f64,
    /// Runs accepted on the first attempt.
    pub without_errors: usize,
    pub auto_adjusted: usize,
    pub failures: usize,
    pub avg_quality: f64,
    pub avg_total_secs: f64,
    /// Total time over total iterations.
    pub avg_iteration_secs: f64,
}

pub fn baseline_summaries(records: &[RunRecord]) -> Vec<BaselineSummary> {
    by_provider(records, Strategy::Baseline)
        .into_iter()
        .map(|(provider, rs)| {
            let iterations: u32 = rs.iter().map(|r| r.iterations).sum();
            let total: f64 = rs.iter().map(|r| r.total_secs).sum();
            BaselineSummary {
                provider: provider.to_string(),
                runs: rs.len(),
                avg_iterations: mean(rs.iter().map(|r| r.iterations as f64)),
                without_errors: rs.iter().filter(|r| r.iterations == 1 && r.status == SessionStatus::Succeeded).count(),
                auto_adjusted: rs.iter().filter(|r| r.auto_fixed).count(),
                failures: rs.iter().filter(|r| r.status == SessionStatus::Failed).count(),
                avg_quality: mean(rs.iter().map(|r| q(r.quality))),
                avg_total_secs: mean(rs.iter().map(|r| r.total_secs)),
                avg_iteration_secs: if iterations == 0 { 0.0 } else { total / iterations as f64 },
            }
        })
        .collect()
}

/// Whether a self-evaluation pick is among the best candidates (`subset`)
/// and whether it is the best one (`exact`). Best means a true quality at
/// least the maximum minus [`BEST_BUFFER`].
pub fn match_kind(true_quality: &[f64], selected: usize) -> (bool, bool) {
    let best = true_quality.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let Some(&picked) = true_quality.get(selected) else { return (false, false) };
    (picked >= best - BEST_BUFFER - EPS, picked >= best - EPS)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfEvalSummary {
    pub provider: String,
    pub criteria: &'static str,
    pub runs: usize,
    /// Lowest and highest of the per-position averages over R1..Rk.
    pub without_range: (f64, f64),
    pub subset: usize,
    pub exact: usize,
    pub avg_with: f64,
}

pub fn self_eval_summaries(records: &[RunRecord]) -> Vec<SelfEvalSummary> {
    let mut out = Vec::new();
    for (strategy, criteria) in [(Strategy::SelfEvalGeneral, "General"), (Strategy::SelfEvalConformance, "Conformance")] {
        for (provider, rs) in by_provider(records, strategy) {
            let k = rs.iter().map(|r| r.candidates.len()).max().unwrap_or(0);
            let per_position: Vec<f64> = (0..k)
                .map(|j| mean(rs.iter().map(|r| q(r.candidates.get(j).and_then(|c| c.quality)))))
                .collect();
            let without_range = per_position
                .iter()
                .fold(None, |acc: Option<(f64, f64)>, &x| Some(acc.map_or((x, x), |(lo, hi)| (lo.min(x), hi.max(x)))))
                .unwrap_or((0.0, 0.0));
            let (mut subset, mut exact) = (0, 0);
            for r in &rs {
                if let Some(sel) = r.selected {
                    let truth: Vec<f64> = r.candidates.iter().map(|c| q(c.quality)).collect();
                    let (s, e) = match_kind(&truth, sel);
                    subset += s as usize;
                    exact += e as usize;
                }
            }
            out.push(SelfEvalSummary {
                provider: provider.to_string(),
                criteria,
                runs: rs.len(),
                without_range,
                subset,
                exact,
                avg_with: mean(rs.iter().map(|r| q(r.quality))),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementSummary {
    pub provider: String,
    /// Description variant for input optimization; "full" otherwise.
    pub variant: String,
    pub runs: usize,
    pub before: f64,
    pub after: f64,
    pub increased: usize,
    pub max_improvement: f64,
    pub max_decline: f64,
}

fn improvement(provider: &str, variant: &str, rs: &[&RunRecord]) -> ImprovementSummary {
    let deltas: Vec<f64> = rs.iter().map(|r| q(r.quality) - q(r.quality_before)).collect();
    ImprovementSummary {
        provider: provider.to_string(),
        variant: variant.to_string(),
        runs: rs.len(),
        before: mean(rs.iter().map(|r| q(r.quality_before))),
        after: mean(rs.iter().map(|r| q(r.quality))),
        increased: deltas.iter().filter(|&&d| d > EPS).count(),
        max_improvement: deltas.iter().copied().fold(0.0, f64::max),
        max_decline: deltas.iter().copied().fold(0.0, f64::min),
    }
}

pub fn input_opt_summaries(records: &[RunRecord]) -> Vec<ImprovementSummary> {
    let mut out = Vec::new();
    for (provider, rs) in by_provider(records, Strategy::InputOpt) {
        for variant in ["full", "medium", "short"] {
            let sub: Vec<&RunRecord> = rs.iter().copied().filter(|r| r.variant == variant).collect();
            if !sub.is_empty() {
                out.push(improvement(provider, variant, &sub));
            }
        }
    }
    out
}

pub fn output_opt_summaries(records: &[RunRecord]) -> Vec<ImprovementSummary> {
    by_provider(records, Strategy::OutputOpt).into_iter().map(|(p, rs)| improvement(p, "full", &rs)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    /// File stem, e.g. `table1_error_handling`.
    pub name: String,
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, title: &str, headers: &[&str]) -> Self {
        Table {
            name: name.into(),
            title: title.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>, row: &[String]| w.write_record(row).expect("in-memory write");
        write(&mut w, &self.headers);
        for r in &self.rows {
            write(&mut w, r);
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Columns padded to equal width; first column left-aligned, the rest
    /// right-aligned.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                std::iter::once(&self.headers)
                    .chain(&self.rows)
                    .map(|r| r.get(c).map_or(0, |s| s.chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |row: &[String]| {
            row.iter()
                .enumerate()
                .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = format!("{}\n{}\n", self.title, line(&self.headers));
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

fn f2(x: f64) -> String {
    format!("{x:.2}")
}

fn signed(x: f64) -> String {
    if x < 0.0 {
        format!("{x:.2}")
    } else {
        format!("+{x:.2}")
    }
}

fn variant_name(v: &str) -> &str {
    match v {
        "full" => "Long (Original)",
        "medium" => "Medium-Length (50-80%)",
        "short" => "Short (15-35%)",
        other => other,
    }
}

/// Builds all six tables. Tables without matching records have no rows.
pub fn emit_reports(records: &[RunRecord], ground_truth: &[GroundTruth]) -> Vec<Table> {
    let base = baseline_summaries(records);

    let mut t1 = Table::new(
        "table1_error_handling",
        "Error handling",
        &[
            "Model",
            "Avg. Num. Iterations",
            "Num. Cases without Errors",
            "Num. Cases with Auto-Adjustment",
            "Num. Cases with Failures",
        ],
    );
    let mut t2 = Table::new("table2_quality", "Average quality scores", &["Model", "Avg. Score"]);
    let mut t3 = Table::new(
        "table3_time",
        "Time efficiency",
        &["Model", "Avg. Total Time (sec)", "Avg. Time per Iteration (sec)"],
    );
    for s in &base {
        t1.rows.push(vec![
            s.provider.clone(),
            f2(s.avg_iterations),
            s.without_errors.to_string(),
            s.auto_adjusted.to_string(),
            s.failures.to_string(),
        ]);
        t2.rows.push(vec![s.provider.clone(), f2(s.avg_quality)]);
        t3.rows.push(vec![s.provider.clone(), f2(s.avg_total_secs), f2(s.avg_iteration_secs)]);
    }
    if !ground_truth.is_empty() {
        t2.rows.push(vec!["Ground Truth".into(), f2(mean(ground_truth.iter().map(|g| g.quality)))]);
    }

    let mut t4 = Table::new(
        "table4_self_evaluation",
        "Self-evaluation",
        &[
            "LLM",
            "Avg. Quality Without Self-Eval. (R1-R4)",
            "Evaluation Criteria",
            "Subset Match",
            "Exact Match",
            "Avg. Quality With Self-Eval.",
        ],
    );
    for s in self_eval_summaries(records) {
        t4.rows.push(vec![
            s.provider,
            format!("{}-{}", f2(s.without_range.0), f2(s.without_range.1)),
            s.criteria.to_string(),
            format!("{}/{}", s.subset, s.runs),
            format!("{}/{}", s.exact, s.runs),
            f2(s.avg_with),
        ]);
    }

    let mut t5 = Table::new(
        "table5_input_optimization",
        "Input optimization",
        &[
            "LLM",
            "Description Length",
            "Avg. Quality Before Self-Improvement",
            "Avg. Quality After Self-Improvement",
            "Cases With Increased Quality",
        ],
    );
    for s in input_opt_summaries(records) {
        t5.rows.push(vec![
            s.provider,
            variant_name(&s.variant).to_string(),
            f2(s.before),
            f2(s.after),
            format!("{}/{}", s.increased, s.runs),
        ]);
    }

    let mut t6 = Table::new(
        "table6_output_optimization",
        "Output optimization",
        &[
            "LLM",
            "Avg. Quality Before Self-Improvement",
            "Avg. Quality After Self-Improvement",
            "Max. Improvement",
            "Max. Decline",
        ],
    );
    for s in output_opt_summaries(records) {
        t6.rows.push(vec![s.provider, f2(s.before), f2(s.after), signed(s.max_improvement), signed(s.max_decline)]);
    }
    vec![t1, t2, t3, t4, t5, t6]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::records::tests::record;
    use crate::bench::records::CandidateRecord;

    fn cand(qual: f64) -> CandidateRecord {
        CandidateRecord { status: SessionStatus::Succeeded, iterations: 1, quality: Some(qual) }
    }

    #[test]
    fn buffer_semantics() {
        assert_eq!(match_kind(&[0.90, 0.89], 1), (true, false));
        assert_eq!(match_kind(&[0.90, 0.89], 0), (true, true));
        assert_eq!(match_kind(&[0.90, 0.87], 1), (false, false));
        assert_eq!(match_kind(&[0.90, 0.88], 1), (true, false));
    }

    #[test]
    fn all_first_attempt_counts_every_fixture() {
        let recs: Vec<RunRecord> = ["a", "b", "c"].iter().map(|f| record(f, Strategy::Baseline)).collect();
        let s = &baseline_summaries(&recs)[0];
        assert_eq!((s.without_errors, s.failures, s.runs), (3, 0, 3));
    }

    #[test]
    fn failed_runs_score_zero() {
        let mut bad = record("b", Strategy::Baseline);
        bad.status = SessionStatus::Failed;
        bad.quality = None;
        bad.iterations = 15;
        let s = &baseline_summaries(&[record("a", Strategy::Baseline), bad])[0];
        assert_eq!(s.avg_quality, 0.5);
        assert_eq!(s.avg_iterations, 8.0);
        assert_eq!(s.failures, 1);
    }

    #[test]
    fn tables_have_fixed_columns() {
        let mut se = record("a", Strategy::SelfEvalGeneral);
        se.candidates = vec![cand(0.9), cand(0.89), cand(0.5), cand(0.7)];
        se.selected = Some(1);
        let mut oo = record("a", Strategy::OutputOpt);
        oo.quality_before = Some(0.5);
        oo.quality = Some(0.8);
        let recs = vec![record("a", Strategy::Baseline), se, oo];
        let gt = vec![GroundTruth { fixture: "a".into(), fitness: 1.0, precision: 0.96, quality: 0.98 }];
        let tables = emit_reports(&recs, &gt);
        assert_eq!(tables.len(), 6);
        assert_eq!(tables[0].headers.len(), 5);
        assert_eq!(tables[1].rows.last().unwrap(), &vec!["Ground Truth".to_string(), "0.98".into()]);
        assert_eq!(tables[3].rows[0][1], "0.50-0.90");
        assert_eq!(tables[3].rows[0][3], "1/1");
        assert_eq!(tables[3].rows[0][4], "0/1");
        assert_eq!(tables[5].rows[0][3], "+0.30");
        assert_eq!(tables[5].rows[0][4], "+0.00");
        let csv = tables[2].to_csv();
        assert!(csv.starts_with("Model,Avg. Total Time (sec),Avg. Time per Iteration (sec)\n"));
        let text = tables[0].to_text();
        assert!(text.lines().nth(1).unwrap().starts_with("Model"));
    }
}
