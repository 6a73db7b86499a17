//! Experiment reports: aggregates, baselines and their file formats.
//!
//! A report serializes either as one JSON document (configuration, per-trial
//! records, aggregates, baselines) or as a CSV of per-trial rows plus a
//! summary JSON holding everything except the records. Loading either form
//! recomputes the aggregates and baselines and rejects files that disagree.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{harmonic_number, ExperimentConfig, ExperimentKind, TrialRecord};

/// Column order of the per-trial CSV.
pub const CSV_HEADER: [&str; 11] = [
    "trial",
    "kind",
    "n",
    "m",
    "seed",
    "total_proposals",
    "mean_doctor_rank",
    "mean_hospital_rank",
    "hstar_rank_hpda",
    "hstar_rank_dpda",
    "ybar",
];

/// Indicator metric: proposals to the rejecting hospital at most `3 ln n`.
pub const YBAR_TAIL_METRIC: &str = "ybar_le_3ln_n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub count: u64,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub sd: f64,
    /// Standard error of the mean.
    pub se: f64,
    pub min: f64,
    pub max: f64,
}

/// Summary statistics of one metric.
pub fn summarize_values(metric: &str, values: &[f64]) -> Result<MetricSummary> {
    if values.is_empty() {
        return Err(Error::NoTrials);
    }
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let sd = if count > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(MetricSummary {
        metric: metric.to_string(),
        count: count as u64,
        mean,
        sd,
        se: sd / (count as f64).sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub name: String,
    pub formula: String,
    pub value: f64,
}

/// Reference quantities for a market with `n` doctors. `ln` is the natural log.
pub fn baselines(n: usize) -> Vec<Baseline> {
    let h = harmonic_number(n);
    let nf = n as f64;
    let mut out = vec![
        Baseline {
            name: "harmonic".into(),
            formula: "H_n".into(),
            value: h,
        },
        Baseline {
            name: "two_harmonic".into(),
            formula: "2 H_n".into(),
            value: 2.0 * h,
        },
        Baseline {
            name: "lazy_total".into(),
            formula: "n H_n".into(),
            value: nf * h,
        },
        Baseline {
            name: "hospital_rank_floor".into(),
            formula: "n / (1 + H_n)".into(),
            value: nf / (1.0 + h),
        },
        Baseline {
            name: "three_ln_n".into(),
            formula: "3 ln n".into(),
            value: 3.0 * nf.ln(),
        },
    ];
    if n >= 2 {
        out.push(Baseline {
            name: "long_side_floor".into(),
            formula: "n / (6 ln n)".into(),
            value: nf / (6.0 * nf.ln()),
        });
    }
    out
}

/// Everything in a report except the per-trial records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub config: ExperimentConfig,
    pub aggregates: Vec<MetricSummary>,
    pub baselines: Vec<Baseline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<MetricSummary>,
    pub baselines: Vec<Baseline>,
}

fn metric_columns(records: &[TrialRecord]) -> Vec<(&'static str, Vec<f64>)> {
    let column = |f: &dyn Fn(&TrialRecord) -> Option<f64>| records.iter().filter_map(f).collect::<Vec<_>>();
    let mut columns = vec![
        ("total_proposals", column(&|r| r.total_proposals.map(|v| v as f64))),
        ("mean_doctor_rank", column(&|r| r.mean_doctor_rank)),
        ("mean_hospital_rank", column(&|r| r.mean_hospital_rank)),
        ("hstar_rank_hpda", column(&|r| r.hstar_rank_hpda.map(|v| v as f64))),
        ("hstar_rank_dpda", column(&|r| r.hstar_rank_dpda.map(|v| v as f64))),
        ("ybar", column(&|r| r.ybar.map(|v| v as f64))),
        (
            YBAR_TAIL_METRIC,
            column(&|r| r.ybar.map(|y| if (y as f64) <= 3.0 * (r.n as f64).ln() { 1.0 } else { 0.0 })),
        ),
    ];
    columns.retain(|(_, values)| !values.is_empty());
    columns
}

/// Aggregates over every metric that at least one record carries.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<MetricSummary>> {
    if records.is_empty() {
        return Err(Error::NoTrials);
    }
    metric_columns(records)
        .into_iter()
        .map(|(name, values)| summarize_values(name, &values))
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn same_summaries(a: &[MetricSummary], b: &[MetricSummary]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.metric == y.metric
                && x.count == y.count
                && close(x.mean, y.mean)
                && close(x.sd, y.sd)
                && close(x.se, y.se)
                && close(x.min, y.min)
                && close(x.max, y.max)
        })
}

fn same_baselines(a: &[Baseline], b: &[Baseline]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| x.name == y.name && x.formula == y.formula && close(x.value, y.value))
}

impl ExperimentReport {
    pub fn from_records(config: ExperimentConfig, records: Vec<TrialRecord>) -> Result<Self> {
        let aggregates = aggregate(&records)?;
        let baselines = baselines(config.market.num_doctors());
        Ok(ExperimentReport {
            config,
            records,
            aggregates,
            baselines,
        })
    }

    /// Checks that records match the configuration and that aggregates and
    /// baselines equal their recomputation.
    pub fn validate(&self) -> Result<()> {
        self.config
            .validate()
            .map_err(|e| Error::InvalidReport(format!("bad configuration: {e}")))?;
        if self.records.len() as u64 != self.config.trials {
            return Err(Error::InvalidReport(format!(
                "{} records for {} trials",
                self.records.len(),
                self.config.trials
            )));
        }
        let (n, m) = (self.config.market.num_doctors(), self.config.market.num_hospitals());
        for (i, r) in self.records.iter().enumerate() {
            if r.trial != i as u64 || r.kind != self.config.kind || r.n != n || r.m != m {
                return Err(Error::InvalidReport(format!(
                    "record {i} does not belong to this experiment"
                )));
            }
        }
        if !same_summaries(&self.aggregates, &aggregate(&self.records)?) {
            return Err(Error::InvalidReport(
                "aggregates differ from the per-trial records".into(),
            ));
        }
        if !same_baselines(&self.baselines, &baselines(n)) {
            return Err(Error::InvalidReport("baselines differ from their formulas".into()));
        }
        Ok(())
    }

    pub fn aggregate(&self, metric: &str) -> Option<&MetricSummary> {
        self.aggregates.iter().find(|a| a.metric == metric)
    }

    pub fn baseline(&self, name: &str) -> Option<&Baseline> {
        self.baselines.iter().find(|b| b.name == name)
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            config: self.config.clone(),
            aggregates: self.aggregates.clone(),
            baselines: self.baselines.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a full JSON report.
    pub fn from_json(text: &str) -> Result<Self> {
        let report: ExperimentReport = serde_json::from_str(text)?;
        report.validate()?;
        Ok(report)
    }

    /// Rebuilds a report from a summary and the CSV rows, validating both.
    pub fn from_parts(summary: ReportSummary, records: Vec<TrialRecord>) -> Result<Self> {
        let report = ExperimentReport {
            config: summary.config,
            records,
            aggregates: summary.aggregates,
            baselines: summary.baselines,
        };
        report.validate()?;
        Ok(report)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_csv(&self.records, writer)
    }
}

/// Writes records with [`CSV_HEADER`]; inapplicable fields are empty.
pub fn write_csv<W: Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses per-trial rows. The header must be exactly [`CSV_HEADER`].
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidReport(format!(
            "unexpected CSV header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    input
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// One line of a printed summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub metric: String,
    pub count: u64,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub min: f64,
    pub max: f64,
    /// Reference quantity the metric is compared against, if any.
    pub baseline: Option<Baseline>,
}

fn baseline_for(kind: ExperimentKind, metric: &str) -> Option<&'static str> {
    use ExperimentKind::*;
    match (kind, metric) {
        (Balanced | CouplingCheck, "total_proposals") => Some("lazy_total"),
        (Balanced | CouplingCheck, "mean_doctor_rank") => Some("harmonic"),
        (Balanced | CouplingCheck, "mean_hospital_rank") => Some("hospital_rank_floor"),
        (Unbalanced, "mean_doctor_rank") => Some("three_ln_n"),
        (Unbalanced, "hstar_rank_hpda") => Some("long_side_floor"),
        (RejectorTail, "ybar") => Some("harmonic"),
        (RejectorTail, "total_proposals") => Some("lazy_total"),
        _ => None,
    }
}

/// Aggregates of `report` with the baseline each metric is read against.
pub fn summarize(report: &ExperimentReport) -> Result<Vec<SummaryRow>> {
    let aggregates = aggregate(&report.records)?;
    Ok(aggregates
        .into_iter()
        .map(|a| {
            let baseline = baseline_for(report.config.kind, &a.metric)
                .and_then(|name| report.baseline(name))
                .cloned()
                .or_else(|| {
                    (a.metric == YBAR_TAIL_METRIC).then(|| Baseline {
                        name: "markov_floor".into(),
                        formula: "1/2".into(),
                        value: 0.5,
                    })
                });
            SummaryRow {
                metric: a.metric,
                count: a.count,
                mean: a.mean,
                sd: a.sd,
                se: a.se,
                min: a.min,
                max: a.max,
                baseline,
            }
        })
        .collect())
}

/// Plain-text table of summary rows.
pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<20} {:>8} {:>12} {:>12} {:>10} {:>10} {:>10}  {}\n",
        "metric", "count", "mean", "sd", "se", "min", "max", "baseline"
    );
    for r in rows {
        let baseline = r
            .baseline
            .as_ref()
            .map(|b| format!("{} = {:.4}", b.formula, b.value))
            .unwrap_or_default();
        out.push_str(&format!(
            "{:<20} {:>8} {:>12.4} {:>12.4} {:>10.4} {:>10.4} {:>10.4}  {}\n",
            r.metric, r.count, r.mean, r.sd, r.se, r.min, r.max, baseline
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_experiment, ExperimentConfig};

    #[test]
    fn summary_of_nothing_is_an_error() {
        assert!(matches!(summarize_values("x", &[]), Err(Error::NoTrials)));
        assert!(matches!(aggregate(&[]), Err(Error::NoTrials)));
    }

    #[test]
    fn constant_metric() {
        let s = summarize_values("x", &[3.5; 10]).unwrap();
        assert_eq!((s.mean, s.sd, s.se, s.min, s.max), (3.5, 0.0, 0.0, 3.5, 3.5));
        let one = summarize_values("x", &[2.0]).unwrap();
        assert_eq!(one.sd, 0.0);
        let s = summarize_values("x", &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_tamper_detection() {
        let report = run_experiment(&ExperimentConfig::rejector_tail(20, 30, 5).unwrap()).unwrap();
        let json = report.to_json().unwrap();
        assert_eq!(ExperimentReport::from_json(&json).unwrap(), report);

        let mut tampered = report.clone();
        tampered.records[3].ybar = Some(tampered.records[3].ybar.unwrap() + 1);
        assert!(matches!(
            ExperimentReport::from_json(&tampered.to_json().unwrap()),
            Err(Error::InvalidReport(_))
        ));
        let mut tampered = report.clone();
        tampered.baselines[0].value += 1.0;
        assert!(ExperimentReport::from_json(&tampered.to_json().unwrap()).is_err());
        let mut tampered = report;
        tampered.records.pop();
        assert!(ExperimentReport::from_json(&tampered.to_json().unwrap()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        for config in [
            ExperimentConfig::balanced(6, 12, 1).unwrap(),
            ExperimentConfig::unbalanced(6, 12, 1).unwrap(),
            ExperimentConfig::rejector_tail(6, 12, 1).unwrap(),
            ExperimentConfig::coupling_check(6, 12, 1).unwrap(),
        ] {
            let report = run_experiment(&config).unwrap();
            let mut buf = Vec::new();
            report.write_csv(&mut buf).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert!(text.starts_with(&CSV_HEADER.join(",")));
            let records = read_csv(buf.as_slice()).unwrap();
            let back = ExperimentReport::from_parts(report.summary(), records).unwrap();
            assert_eq!(back, report);
        }
    }

    #[test]
    fn csv_empty_fields() {
        let report = run_experiment(&ExperimentConfig::rejector_tail(3, 1, 1).unwrap()).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let row = String::from_utf8(buf).unwrap().lines().nth(1).unwrap().to_string();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[1], "rejector-tail");
        assert!(fields[6].is_empty() && fields[7].is_empty() && fields[8].is_empty() && fields[9].is_empty());
        assert!(!fields[10].is_empty());
    }

    #[test]
    fn csv_rejects_wrong_header() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn summary_rows_carry_baselines() {
        let report = run_experiment(&ExperimentConfig::rejector_tail(10, 20, 2).unwrap()).unwrap();
        let rows = summarize(&report).unwrap();
        let ybar = rows.iter().find(|r| r.metric == "ybar").unwrap();
        assert_eq!(ybar.baseline.as_ref().unwrap().formula, "H_n");
        let tail = rows.iter().find(|r| r.metric == YBAR_TAIL_METRIC).unwrap();
        assert_eq!(tail.baseline.as_ref().unwrap().value, 0.5);
        assert!(render_summary(&rows).contains("ybar"));
    }

    #[test]
    fn long_side_floor_value() {
        let b = baselines(500);
        let floor = b.iter().find(|b| b.name == "long_side_floor").unwrap().value;
        assert!((floor - 13.409).abs() < 1e-3, "{floor}");
        assert!(baselines(1).iter().all(|b| b.name != "long_side_floor"));
    }
}
