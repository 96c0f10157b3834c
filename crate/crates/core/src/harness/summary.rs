//! Group-wise aggregation of episode rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::batch::EpisodeRow;
use super::stats::{mean, sample_std, welch_t_test};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("no episode rows to summarise")]
pub struct EmptyInput;

/// Names of the aggregated performance measures, in column order.
pub const MEASURES: [&str; 9] = [
    "pm1_1", "pm1_2", "pm2_1", "pm2_2", "pm2_3", "pm3_1", "pm3_2", "pm4_1", "pm4_2",
];

/// Value of a named measure; `None` where it is undefined for the episode.
pub fn measure(row: &EpisodeRow, name: &str) -> Option<f64> {
    match name {
        "pm1_1" => Some(row.pm1_1),
        "pm1_2" => Some(row.pm1_2),
        "pm2_1" => row.pm2_1,
        "pm2_2" => row.pm2_2,
        "pm2_3" => row.pm2_3,
        "pm3_1" => Some(row.pm3_1),
        "pm3_2" => Some(row.pm3_2),
        "pm4_1" => Some(row.pm4_1),
        "pm4_2" => row.pm4_2,
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Stat {
    fn of(values: &[f64]) -> Self {
        Stat {
            mean: mean(values),
            std: sample_std(values),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub ratio: f64,
    pub kind: String,
    pub malicious_fraction: f64,
    pub weighting: String,
    pub w_max: f64,
    pub n: usize,
    /// Indexed like [`MEASURES`].
    pub stats: [Stat; 9],
}

impl SummaryRow {
    pub fn stat(&self, name: &str) -> Option<Stat> {
        MEASURES
            .iter()
            .position(|m| *m == name)
            .map(|i| self.stats[i])
    }
}

fn collect(rows: &[&EpisodeRow], name: &str) -> Vec<f64> {
    rows.iter().filter_map(|r| measure(r, name)).collect()
}

fn stats_of(rows: &[&EpisodeRow]) -> [Stat; 9] {
    MEASURES.map(|m| Stat::of(&collect(rows, m)))
}

/// Groups rows by key, keeping groups in order of first appearance.
fn group_by<K: PartialEq>(
    rows: &[EpisodeRow],
    key: impl Fn(&EpisodeRow) -> K,
) -> Vec<(K, Vec<&EpisodeRow>)> {
    let mut groups: Vec<(K, Vec<&EpisodeRow>)> = Vec::new();
    for r in rows {
        let k = key(r);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, members)) => members.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    groups
}

/// Mean and sample standard deviation of every measure per
/// (ratio, kind, malicious fraction, weighting, w_max) group.
pub fn summarize(rows: &[EpisodeRow]) -> Result<Vec<SummaryRow>, EmptyInput> {
    if rows.is_empty() {
        return Err(EmptyInput);
    }
    let groups = group_by(rows, |r| {
        (
            r.ratio.to_bits(),
            r.kind.clone(),
            r.malicious_fraction.to_bits(),
            r.weighting.clone(),
            r.w_max.to_bits(),
        )
    });
    Ok(groups
        .into_iter()
        .map(|(_, members)| {
            let first = members[0];
            SummaryRow {
                ratio: first.ratio,
                kind: first.kind.clone(),
                malicious_fraction: first.malicious_fraction,
                weighting: first.weighting.clone(),
                w_max: first.w_max,
                n: members.len(),
                stats: stats_of(&members),
            }
        })
        .collect())
}

/// One point of a plot series: a weighting configuration at one malicious
/// fraction, pooled over ratios and kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub label: String,
    pub weighting: String,
    pub w_max: f64,
    pub x: f64,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

pub fn label(weighting: &str, w_max: f64) -> String {
    format!("{weighting}:{w_max}")
}

pub fn plot_points(rows: &[EpisodeRow], measure_name: &str) -> Vec<PlotPoint> {
    group_by(rows, |r| {
        (
            r.weighting.clone(),
            r.w_max.to_bits(),
            r.malicious_fraction.to_bits(),
        )
    })
    .into_iter()
    .map(|(_, members)| {
        let values = collect(&members, measure_name);
        let first = members[0];
        PlotPoint {
            label: label(&first.weighting, first.w_max),
            weighting: first.weighting.clone(),
            w_max: first.w_max,
            x: first.malicious_fraction,
            mean: mean(&values),
            std: sample_std(&values),
            n: values.len(),
        }
    })
    .collect()
}

/// Welch comparison of two weighting configurations at one malicious fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub measure: String,
    pub group_a: String,
    pub group_b: String,
    /// A malicious fraction, or `mean` for the average over fractions.
    pub malicious_fraction: String,
    pub n_a: usize,
    pub n_b: usize,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p_value: Option<f64>,
}

/// Compares every pair of weighting configurations on commit accuracy and
/// time at each malicious fraction, then averages the p-values per pair.
pub fn significance(rows: &[EpisodeRow]) -> Vec<Comparison> {
    let configs: Vec<(String, u64)> = group_by(rows, |r| (r.weighting.clone(), r.w_max.to_bits()))
        .into_iter()
        .map(|(k, _)| k)
        .collect();
    let fractions: Vec<u64> = group_by(rows, |r| r.malicious_fraction.to_bits())
        .into_iter()
        .map(|(k, _)| k)
        .collect();
    let mut out = Vec::new();
    for m in ["pm3_1", "pm3_2"] {
        for i in 0..configs.len() {
            for j in i + 1..configs.len() {
                let (a, b) = (&configs[i], &configs[j]);
                let (la, lb) = (
                    label(&a.0, f64::from_bits(a.1)),
                    label(&b.0, f64::from_bits(b.1)),
                );
                let mut ps = Vec::new();
                for &f in &fractions {
                    let pick = |c: &(String, u64)| -> Vec<f64> {
                        rows.iter()
                            .filter(|r| {
                                r.weighting == c.0
                                    && r.w_max.to_bits() == c.1
                                    && r.malicious_fraction.to_bits() == f
                            })
                            .filter_map(|r| measure(r, m))
                            .collect()
                    };
                    let (xa, xb) = (pick(a), pick(b));
                    let test = welch_t_test(&xa, &xb).ok();
                    if let Some(t) = test {
                        ps.push(t.p_value);
                    }
                    out.push(Comparison {
                        measure: m.to_string(),
                        group_a: la.clone(),
                        group_b: lb.clone(),
                        malicious_fraction: f64::from_bits(f).to_string(),
                        n_a: xa.len(),
                        n_b: xb.len(),
                        t: test.map(|t| t.t),
                        df: test.map(|t| t.df),
                        p_value: test.map(|t| t.p_value),
                    });
                }
                out.push(Comparison {
                    measure: m.to_string(),
                    group_a: la,
                    group_b: lb,
                    malicious_fraction: "mean".to_string(),
                    n_a: 0,
                    n_b: 0,
                    t: None,
                    df: None,
                    p_value: mean(&ps),
                });
            }
        }
    }
    out
}
