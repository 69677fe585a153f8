//! Trial-log analysis: per-block measures, resolution × FOV ANOVA, Tukey HSD
//! over conditions, acuity table and box-plot series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::error::{Error, Result};
use crate::session::{group_blocks, BlockReport, TrialRecord};
use crate::stats::{anova2, significance_stars, tukey_hsd, AnovaTable, BoxStats, FactorialData, TukeyResult};
use crate::stimuli::TestFamily;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    PerformancePct,
    MeanRtS,
    AcuityLogmar,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::PerformancePct => "performance_pct",
            Measure::MeanRtS => "mean_rt_s",
            Measure::AcuityLogmar => "acuity_logmar",
        }
    }

    fn of(self, block: &BlockReport) -> Option<f64> {
        match self {
            Measure::PerformancePct => Some(block.summary.performance_pct),
            Measure::MeanRtS => block.summary.mean_rt_s,
            Measure::AcuityLogmar => block.acuity.as_ref().map(|a| a.logmar),
        }
    }
}

/// One condition's distribution of a block-level measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub condition: String,
    pub phosphene_count: usize,
    pub fov_deg: f64,
    pub stats: BoxStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureAnalysis {
    pub test: TestFamily,
    pub measure: Measure,
    pub cells: Vec<CellStats>,
    pub anova: Option<AnovaTable>,
    pub tukey: Option<TukeyResult>,
    /// Why the tests were skipped, when they were.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcuityRow {
    pub condition: String,
    pub phosphene_count: usize,
    pub fov_deg: f64,
    pub n_blocks: usize,
    pub mean_logmar: f64,
    pub sd_logmar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n_records: usize,
    pub blocks: Vec<BlockReport>,
    pub analyses: Vec<MeasureAnalysis>,
    pub acuity: Vec<AcuityRow>,
}

/// Condition key ordered by (phosphene count, FOV).
#[derive(Clone, Copy, Debug)]
struct CondKey(usize, f64);

impl PartialEq for CondKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for CondKey {}

impl PartialOrd for CondKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CondKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp(&other.0).then(self.1.total_cmp(&other.1))
    }
}

pub fn analyze(records: &[TrialRecord], alpha: f64) -> Result<AnalysisReport> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let blocks: Vec<BlockReport> = group_blocks(records)
        .iter()
        .map(|b| BlockReport::from_records(b, false))
        .collect::<Result<_>>()?;

    // condition label -> parsed condition; one label per (count, fov)
    let mut labels: BTreeMap<CondKey, String> = BTreeMap::new();
    let mut keyed = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let c: Condition = b.condition.parse()?;
        let key = CondKey(c.phosphene_count, c.fov_deg);
        match labels.get(&key) {
            Some(l) if *l != b.condition => {
                return Err(Error::MixedRecords(format!(
                    "labels {l:?} and {:?} for the same condition",
                    b.condition
                )))
            }
            _ => {
                labels.insert(key, b.condition.clone());
            }
        }
        keyed.push((key, b));
    }

    let mut tests: Vec<TestFamily> = blocks.iter().map(|b| b.test).collect();
    tests.sort_by_key(|t| TestFamily::ALL.iter().position(|x| x == t));
    tests.dedup();

    let mut analyses = Vec::new();
    for &test in &tests {
        let mut measures = vec![Measure::PerformancePct, Measure::MeanRtS];
        if test == TestFamily::Landolt {
            measures.push(Measure::AcuityLogmar);
        }
        for measure in measures {
            let mut values: BTreeMap<CondKey, Vec<f64>> = BTreeMap::new();
            for (key, b) in keyed.iter().filter(|(_, b)| b.test == test) {
                let slot = values.entry(*key).or_default();
                if let Some(v) = measure.of(b) {
                    slot.push(v);
                }
            }
            analyses.push(analyze_measure(test, measure, &values, &labels, alpha));
        }
    }

    let mut acuity = Vec::new();
    for a in analyses.iter().filter(|a| a.measure == Measure::AcuityLogmar) {
        for c in &a.cells {
            acuity.push(AcuityRow {
                condition: c.condition.clone(),
                phosphene_count: c.phosphene_count,
                fov_deg: c.fov_deg,
                n_blocks: c.stats.n,
                mean_logmar: c.stats.mean,
                sd_logmar: c.stats.sd,
            });
        }
    }

    Ok(AnalysisReport {
        n_records: records.len(),
        blocks,
        analyses,
        acuity,
    })
}

fn analyze_measure(
    test: TestFamily,
    measure: Measure,
    values: &BTreeMap<CondKey, Vec<f64>>,
    labels: &BTreeMap<CondKey, String>,
    alpha: f64,
) -> MeasureAnalysis {
    let cells = values
        .iter()
        .filter_map(|(k, v)| {
            BoxStats::from_values(v).map(|stats| CellStats {
                condition: labels[k].clone(),
                phosphene_count: k.0,
                fov_deg: k.1,
                stats,
            })
        })
        .collect();
    let mut out = MeasureAnalysis {
        test,
        measure,
        cells,
        anova: None,
        tukey: None,
        note: None,
    };

    let mut counts: Vec<usize> = values.keys().map(|k| k.0).collect();
    counts.dedup();
    let mut fovs: Vec<f64> = values.keys().map(|k| k.1).collect();
    fovs.sort_by(f64::total_cmp);
    fovs.dedup();

    let grid: Option<Vec<Vec<Vec<f64>>>> = counts
        .iter()
        .map(|&n| fovs.iter().map(|&f| values.get(&CondKey(n, f)).cloned()).collect())
        .collect();
    let anova = grid.ok_or_else(|| Error::InsufficientData("not every resolution × FOV cell was run".into())).and_then(|cells| {
        let data = FactorialData::new(
            "resolution",
            "fov",
            counts.iter().map(|n| format!("{n}ph")).collect(),
            fovs.iter().map(|f| format!("{f}deg")).collect(),
            cells,
        )?;
        anova2(&data)
    });
    match anova {
        Ok(t) => out.anova = Some(t),
        Err(e) => out.note = Some(format!("ANOVA skipped: {e}")),
    }

    let groups: Vec<(String, Vec<f64>)> = values.iter().map(|(k, v)| (labels[k].clone(), v.clone())).collect();
    match tukey_hsd(&groups, alpha) {
        Ok(t) => out.tukey = Some(t),
        Err(e) => {
            let msg = format!("Tukey skipped: {e}");
            out.note = Some(match out.note.take() {
                Some(n) => format!("{n}; {msg}"),
                None => msg,
            });
        }
    }
    out
}

impl AnalysisReport {
    /// Box-plot series: one row per (test, measure, condition).
    pub fn plot_csv(&self) -> String {
        let mut s = String::from("test,measure,condition,phosphene_count,fov_deg,n,min,q1,median,q3,max,mean,sd\n");
        for a in &self.analyses {
            for c in &a.cells {
                let b = &c.stats;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    a.test,
                    a.measure.as_str(),
                    c.condition,
                    c.phosphene_count,
                    c.fov_deg,
                    b.n,
                    b.min,
                    b.q1,
                    b.median,
                    b.q3,
                    b.max,
                    b.mean,
                    b.sd
                );
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Aligned plain-text report.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} trials in {} blocks", self.n_records, self.blocks.len());
        for a in &self.analyses {
            let _ = writeln!(s, "\n== {} / {} ==", a.test, a.measure.as_str());
            let _ = writeln!(
                s,
                "{:<14} {:>4} {:>10} {:>10} {:>10} {:>10} {:>10}",
                "condition", "n", "q1", "median", "q3", "mean", "sd"
            );
            for c in &a.cells {
                let b = &c.stats;
                let _ = writeln!(
                    s,
                    "{:<14} {:>4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                    c.condition, b.n, b.q1, b.median, b.q3, b.mean, b.sd
                );
            }
            if let Some(t) = &a.anova {
                let _ = writeln!(
                    s,
                    "\n{:<20} {:>12} {:>6} {:>12} {:>10} {:>12} {:>4}",
                    "source", "sum_sq", "df", "mean_sq", "F", "p", ""
                );
                for r in &t.rows {
                    let (f, p, stars) = match (r.f, r.p) {
                        (Some(f), Some(p)) => (format!("{f:.4}"), format!("{p:.4e}"), significance_stars(p)),
                        _ => (String::new(), String::new(), ""),
                    };
                    let _ = writeln!(
                        s,
                        "{:<20} {:>12.4} {:>6} {:>12.4} {:>10} {:>12} {:>4}",
                        r.name, r.sum_sq, r.df, r.mean_sq, f, p, stars
                    );
                }
            }
            if let Some(t) = &a.tukey {
                let _ = writeln!(
                    s,
                    "\nTukey HSD (alpha {}): {:<12} {:<12} {:>10} {:>8} {:>12} {:>4}",
                    t.alpha, "group_i", "group_j", "diff", "q", "p_adj", ""
                );
                for c in &t.comparisons {
                    let _ = writeln!(
                        s,
                        "{:<22}{:<12} {:<12} {:>10.4} {:>8.4} {:>12.4e} {:>4}",
                        "",
                        c.group_i,
                        c.group_j,
                        c.mean_diff,
                        c.q_stat,
                        c.p_adj,
                        significance_stars(c.p_adj)
                    );
                }
            }
            if let Some(n) = &a.note {
                let _ = writeln!(s, "note: {n}");
            }
        }
        if !self.acuity.is_empty() {
            let _ = writeln!(s, "\n== acuity (logMAR) ==");
            let _ = writeln!(s, "{:<14} {:>6} {:>8} {:>4} {:>10} {:>10}", "condition", "count", "fov", "n", "mean", "sd");
            for r in &self.acuity {
                let _ = writeln!(
                    s,
                    "{:<14} {:>6} {:>8} {:>4} {:>10.4} {:>10.4}",
                    r.condition, r.phosphene_count, r.fov_deg, r.n_blocks, r.mean_logmar, r.sd_logmar
                );
            }
        }
        s
    }
}
