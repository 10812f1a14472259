//! Raw simulation records, the summaries computed from them, and their CSV
//! and JSON encodings.
//!
//! Every summary is a pure function of the record sets, so reading the CSV
//! files back and calling [`Summary::from_records`] reproduces the emitted
//! summary exactly.
//!
//! CSV conventions: floats are written with 17 significant digits
//! (`{:.16e}`), infinities as `inf`/`-inf`, booleans as `1`/`0`, and a
//! value that does not apply to a row is left empty.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Experiment, ExperimentConfig};
use crate::cvalue::{ContingencyTable, Report};
use crate::error::{Error, Result};

/// Column order of the main record file.
pub const RECORD_COLUMNS: [&str; 9] = [
    "grid_value",
    "alpha",
    "replicate",
    "win",
    "bound",
    "c_value",
    "selected",
    "loss_default",
    "loss_alt",
];
pub const SURE_COLUMNS: [&str; 5] = ["grid_value", "replicate", "sure", "selected", "win"];
pub const CONVERGENCE_COLUMNS: [&str; 5] = ["m", "replicate", "dist_approx_map", "dist_mle_truth", "dist_map_truth"];
pub const SEQUENTIAL_COLUMNS: [&str; 10] = [
    "grid_value",
    "alpha",
    "replicate",
    "c_first",
    "c_second",
    "reported",
    "loss_default",
    "loss_alt",
    "loss_third",
    "mis_selected",
];

/// One (grid point, α, replicate) outcome. `alpha` is empty for experiments
/// that only compare losses; everything after `replicate` is empty for a
/// dropped replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub grid_value: f64,
    pub alpha: Option<f64>,
    pub replicate: usize,
    pub win: Option<f64>,
    pub bound: Option<f64>,
    pub c_value: Option<f64>,
    pub selected: Option<bool>,
    pub loss_default: Option<f64>,
    pub loss_alt: Option<f64>,
}

/// The SURE comparator on the same replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SureRecord {
    pub grid_value: f64,
    pub replicate: usize,
    pub sure: f64,
    pub selected: bool,
    pub win: f64,
}

/// Distances for the logistic approximation-rate study; the distances are
/// empty when the MLE does not exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub m: usize,
    pub replicate: usize,
    pub dist_approx_map: Option<f64>,
    pub dist_mle_truth: Option<f64>,
    pub dist_map_truth: Option<f64>,
}

/// Which of three estimates a sequential comparison ends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequentialChoice {
    Default,
    Alternative,
    Third,
}

impl SequentialChoice {
    fn code(self) -> u8 {
        match self {
            SequentialChoice::Default => 0,
            SequentialChoice::Alternative => 1,
            SequentialChoice::Third => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(SequentialChoice::Default),
            1 => Some(SequentialChoice::Alternative),
            2 => Some(SequentialChoice::Third),
            _ => None,
        }
    }
}

/// Default vs alternative, then (only if the alternative won) alternative vs
/// a third estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialRecord {
    pub grid_value: f64,
    pub alpha: f64,
    pub replicate: usize,
    pub c_first: f64,
    pub c_second: f64,
    pub reported: SequentialChoice,
    pub loss_default: f64,
    pub loss_alt: f64,
    pub loss_third: f64,
    pub mis_selected: bool,
}

/// A binomial proportion with its standard error `√(p(1−p)/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub estimate: f64,
    pub se: f64,
    pub n: usize,
}

impl Proportion {
    pub fn from_counts(hits: usize, n: usize) -> Self {
        if n == 0 {
            return Proportion { estimate: 0.0, se: 0.0, n };
        }
        let p = hits as f64 / n as f64;
        Proportion {
            estimate: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }
}

/// A Monte Carlo mean with standard error `sd / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanEstimate { mean: 0.0, se: 0.0, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        MeanEstimate { mean, se, n }
    }
}

/// Per (grid point, α) aggregates of the two-stage rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub grid_value: f64,
    pub alpha: f64,
    /// `P[W ≥ b(y, α)]`.
    pub coverage: Proportion,
    /// `P[c > α]`.
    pub selection: Proportion,
    /// `P[c > α and W ≤ 0]`.
    pub mistake: Proportion,
    /// `P[c > α and W < 0]`: the two-stage estimate is strictly worse than
    /// the default.
    pub worse_than_default: Proportion,
    pub risk_two_stage: MeanEstimate,
    pub contingency: ContingencyTable,
}

/// Per grid point aggregates that do not depend on α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub grid_value: f64,
    pub risk_default: MeanEstimate,
    pub risk_alt: MeanEstimate,
    /// Mean of `loss_alt − loss_default`.
    pub risk_difference: MeanEstimate,
    /// `P[W < 0]`.
    pub default_smaller_loss: Proportion,
    pub median_c_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SureSummary {
    pub grid_value: f64,
    pub contingency: ContingencyTable,
    pub wrong: Proportion,
    pub alternative: Proportion,
}

/// Least-squares slopes of `ln(distance)` on `ln(M)` over all usable rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub slope_approx_map: f64,
    pub slope_mle_truth: f64,
    pub slope_map_truth: f64,
    pub rows: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialSummary {
    pub grid_value: f64,
    pub alpha: f64,
    pub mis_selection: Proportion,
    pub third_reported: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub record_count: usize,
    /// Replicates whose records are empty (no MLE).
    pub dropped_replicates: usize,
    pub cells: Vec<CellSummary>,
    pub grid: Vec<GridSummary>,
    pub sure: Vec<SureSummary>,
    pub convergence: Option<ConvergenceSummary>,
    pub sequential: Vec<SequentialSummary>,
}

/// Keys in order of first appearance.
fn ordered_groups<T, K: Copy + Eq + std::hash::Hash>(items: &[T], key: impl Fn(&T) -> K) -> Vec<(K, Vec<&T>)> {
    let mut index: HashMap<K, usize> = HashMap::new();
    let mut groups: Vec<(K, Vec<&T>)> = Vec::new();
    for item in items {
        let k = key(item);
        let slot = *index.entry(k).or_insert_with(|| {
            groups.push((k, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(item);
    }
    groups
}

fn report_of(selected: bool) -> Report {
    if selected {
        Report::Alternative
    } else {
        Report::Default
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Slope of the least-squares line through `(x, y)`; `None` without spread
/// in `x`.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    Some(sxy / sxx)
}

fn cell_summaries(records: &[Record]) -> Vec<CellSummary> {
    let with_alpha: Vec<&Record> = records.iter().filter(|r| r.alpha.is_some()).collect();
    let groups = ordered_groups(&with_alpha, |r| (r.grid_value.to_bits(), r.alpha.map(f64::to_bits)));
    groups
        .into_iter()
        .map(|((g, a), rows)| {
            let mut covered = (0, 0);
            let mut selected = 0;
            let mut mistakes = 0;
            let mut worse = 0;
            let mut decided = 0;
            let mut two_stage = Vec::new();
            let mut table = ContingencyTable::default();
            for r in rows {
                if let (Some(w), Some(b)) = (r.win, r.bound) {
                    covered.1 += 1;
                    if w >= b {
                        covered.0 += 1;
                    }
                }
                if let (Some(w), Some(s)) = (r.win, r.selected) {
                    decided += 1;
                    selected += s as usize;
                    mistakes += (s && w <= 0.0) as usize;
                    worse += (s && w < 0.0) as usize;
                    table.add(w, report_of(s));
                }
                if let (Some(s), Some(ld), Some(la)) = (r.selected, r.loss_default, r.loss_alt) {
                    two_stage.push(if s { la } else { ld });
                }
            }
            CellSummary {
                grid_value: f64::from_bits(g),
                alpha: f64::from_bits(a.expect("filtered")),
                coverage: Proportion::from_counts(covered.0, covered.1),
                selection: Proportion::from_counts(selected, decided),
                mistake: Proportion::from_counts(mistakes, decided),
                worse_than_default: Proportion::from_counts(worse, decided),
                risk_two_stage: MeanEstimate::from_values(&two_stage),
                contingency: table,
            }
        })
        .collect()
}

fn grid_summaries(records: &[Record]) -> Vec<GridSummary> {
    // One row per replicate: the first α seen at each grid point.
    let groups = ordered_groups(records, |r| r.grid_value.to_bits());
    groups
        .into_iter()
        .map(|(g, rows)| {
            let first_alpha = rows[0].alpha.map(f64::to_bits);
            let mut ld = Vec::new();
            let mut la = Vec::new();
            let mut diff = Vec::new();
            let mut cs = Vec::new();
            let mut smaller = 0;
            for r in rows.iter().filter(|r| r.alpha.map(f64::to_bits) == first_alpha) {
                if let (Some(d), Some(a)) = (r.loss_default, r.loss_alt) {
                    ld.push(d);
                    la.push(a);
                    diff.push(a - d);
                }
                if let Some(w) = r.win {
                    smaller += (w < 0.0) as usize;
                }
                if let Some(c) = r.c_value {
                    cs.push(c);
                }
            }
            let usable = rows
                .iter()
                .filter(|r| r.alpha.map(f64::to_bits) == first_alpha && r.win.is_some())
                .count();
            GridSummary {
                grid_value: f64::from_bits(g),
                risk_default: MeanEstimate::from_values(&ld),
                risk_alt: MeanEstimate::from_values(&la),
                risk_difference: MeanEstimate::from_values(&diff),
                default_smaller_loss: Proportion::from_counts(smaller, usable),
                median_c_value: median(&mut cs),
            }
        })
        .collect()
}

fn dropped_replicates(records: &[Record]) -> usize {
    let mut seen = BTreeSet::new();
    for r in records.iter().filter(|r| r.win.is_none()) {
        seen.insert((r.grid_value.to_bits(), r.replicate));
    }
    seen.len()
}

fn sure_summaries(records: &[SureRecord]) -> Vec<SureSummary> {
    ordered_groups(records, |r| r.grid_value.to_bits())
        .into_iter()
        .map(|(g, rows)| {
            let mut table = ContingencyTable::default();
            for r in &rows {
                table.add(r.win, report_of(r.selected));
            }
            let n = table.total();
            SureSummary {
                grid_value: f64::from_bits(g),
                contingency: table,
                wrong: Proportion::from_counts(table.dll_ar + table.all_dr, n),
                alternative: Proportion::from_counts(table.dll_ar + table.all_ar, n),
            }
        })
        .collect()
}

fn convergence_summary(records: &[ConvergenceRecord]) -> Option<ConvergenceSummary> {
    if records.is_empty() {
        return None;
    }
    let mut pts = (Vec::new(), Vec::new(), Vec::new());
    let mut dropped = 0;
    for r in records {
        match (r.dist_approx_map, r.dist_mle_truth, r.dist_map_truth) {
            (Some(a), Some(b), Some(c)) => {
                let x = (r.m as f64).ln();
                pts.0.push((x, a.ln()));
                pts.1.push((x, b.ln()));
                pts.2.push((x, c.ln()));
            }
            _ => dropped += 1,
        }
    }
    Some(ConvergenceSummary {
        slope_approx_map: ols_slope(&pts.0)?,
        slope_mle_truth: ols_slope(&pts.1)?,
        slope_map_truth: ols_slope(&pts.2)?,
        rows: pts.0.len(),
        dropped,
    })
}

fn sequential_summaries(records: &[SequentialRecord]) -> Vec<SequentialSummary> {
    ordered_groups(records, |r| (r.grid_value.to_bits(), r.alpha.to_bits()))
        .into_iter()
        .map(|((g, a), rows)| {
            let n = rows.len();
            let mis = rows.iter().filter(|r| r.mis_selected).count();
            let third = rows.iter().filter(|r| r.reported == SequentialChoice::Third).count();
            SequentialSummary {
                grid_value: f64::from_bits(g),
                alpha: f64::from_bits(a),
                mis_selection: Proportion::from_counts(mis, n),
                third_reported: Proportion::from_counts(third, n),
            }
        })
        .collect()
}

impl Summary {
    pub fn from_records(
        experiment: Experiment,
        records: &[Record],
        sure: &[SureRecord],
        convergence: &[ConvergenceRecord],
        sequential: &[SequentialRecord],
    ) -> Summary {
        Summary {
            experiment,
            record_count: records.len(),
            dropped_replicates: dropped_replicates(records),
            cells: cell_summaries(records),
            grid: grid_summaries(records),
            sure: sure_summaries(sure),
            convergence: convergence_summary(convergence),
            sequential: sequential_summaries(sequential),
        }
    }

    pub fn cell(&self, grid_value: f64, alpha: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.grid_value == grid_value && c.alpha == alpha)
    }

    pub fn grid_point(&self, grid_value: f64) -> Option<&GridSummary> {
        self.grid.iter().find(|g| g.grid_value == grid_value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub sure_records: Vec<SureRecord>,
    pub convergence_records: Vec<ConvergenceRecord>,
    pub sequential_records: Vec<SequentialRecord>,
    pub summary: Summary,
    /// Distinct numerical warnings raised while running, sorted.
    pub warnings: Vec<String>,
}

/// What goes into the JSON summary file.
#[derive(Debug, Serialize)]
struct SummaryDocument<'a> {
    config: &'a ExperimentConfig,
    summary: &'a Summary,
    warnings: &'a [String],
}

pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn write_rows<W: io::Write>(w: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::WriterBuilder::new().from_writer(w);
    out.write_record(header).map_err(io_err)?;
    for row in rows {
        out.write_record(&row).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

impl SimulationReport {
    pub fn write_records_csv<W: io::Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            &RECORD_COLUMNS,
            self.records.iter().map(|r| {
                vec![
                    format_f64(r.grid_value),
                    opt_f64(r.alpha),
                    r.replicate.to_string(),
                    opt_f64(r.win),
                    opt_f64(r.bound),
                    opt_f64(r.c_value),
                    r.selected.map(flag).unwrap_or_default(),
                    opt_f64(r.loss_default),
                    opt_f64(r.loss_alt),
                ]
            }),
        )
    }

    pub fn write_sure_csv<W: io::Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            &SURE_COLUMNS,
            self.sure_records.iter().map(|r| {
                vec![
                    format_f64(r.grid_value),
                    r.replicate.to_string(),
                    format_f64(r.sure),
                    flag(r.selected),
                    format_f64(r.win),
                ]
            }),
        )
    }

    pub fn write_convergence_csv<W: io::Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            &CONVERGENCE_COLUMNS,
            self.convergence_records.iter().map(|r| {
                vec![
                    r.m.to_string(),
                    r.replicate.to_string(),
                    opt_f64(r.dist_approx_map),
                    opt_f64(r.dist_mle_truth),
                    opt_f64(r.dist_map_truth),
                ]
            }),
        )
    }

    pub fn write_sequential_csv<W: io::Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            &SEQUENTIAL_COLUMNS,
            self.sequential_records.iter().map(|r| {
                vec![
                    format_f64(r.grid_value),
                    format_f64(r.alpha),
                    r.replicate.to_string(),
                    format_f64(r.c_first),
                    format_f64(r.c_second),
                    r.reported.code().to_string(),
                    format_f64(r.loss_default),
                    format_f64(r.loss_alt),
                    format_f64(r.loss_third),
                    flag(r.mis_selected),
                ]
            }),
        )
    }

    pub fn summary_json(&self) -> Result<String> {
        let doc = SummaryDocument {
            config: &self.config,
            summary: &self.summary,
            warnings: &self.warnings,
        };
        let mut s = serde_json::to_string_pretty(&doc).map_err(io_err)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `records.csv` and `summary.json` into `dir` (created if
    /// needed), plus `sure.csv`, `convergence.csv` and `sequential.csv` when
    /// the experiment produced those rows. Returns the paths written.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        let mut emit = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> Result<()>| -> Result<()> {
            let path = dir.join(name);
            let mut buf = Vec::new();
            f(&mut buf)?;
            fs::write(&path, buf).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            written.push(path);
            Ok(())
        };
        emit("records.csv", &|b| self.write_records_csv(b))?;
        if !self.sure_records.is_empty() {
            emit("sure.csv", &|b| self.write_sure_csv(b))?;
        }
        if !self.convergence_records.is_empty() {
            emit("convergence.csv", &|b| self.write_convergence_csv(b))?;
        }
        if !self.sequential_records.is_empty() {
            emit("sequential.csv", &|b| self.write_sequential_csv(b))?;
        }
        emit("summary.json", &|b| {
            b.extend_from_slice(self.summary_json()?.as_bytes());
            Ok(())
        })?;
        Ok(written)
    }
}

fn read_table<R: io::Read>(r: R, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let found = rdr.headers().map_err(io_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::invalid(format!(
            "unexpected CSV header {:?}, expected {:?}",
            found.iter().collect::<Vec<_>>(),
            header
        )));
    }
    rdr.records().map(|r| r.map_err(io_err)).collect()
}

fn parse_f64(s: &str, row: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::invalid(format!("row {row}: cannot parse '{s}' as a number")))
}

fn parse_opt_f64(s: &str, row: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, row).map(Some)
    }
}

fn parse_usize(s: &str, row: usize) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| Error::invalid(format!("row {row}: cannot parse '{s}' as a count")))
}

fn parse_flag(s: &str, row: usize) -> Result<bool> {
    match s {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(Error::invalid(format!("row {row}: expected 0 or 1, got '{s}'"))),
    }
}

pub fn read_records_csv<R: io::Read>(r: R) -> Result<Vec<Record>> {
    read_table(r, &RECORD_COLUMNS)?
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let row = i + 2;
            Ok(Record {
                grid_value: parse_f64(&f[0], row)?,
                alpha: parse_opt_f64(&f[1], row)?,
                replicate: parse_usize(&f[2], row)?,
                win: parse_opt_f64(&f[3], row)?,
                bound: parse_opt_f64(&f[4], row)?,
                c_value: parse_opt_f64(&f[5], row)?,
                selected: if f[6].is_empty() { None } else { Some(parse_flag(&f[6], row)?) },
                loss_default: parse_opt_f64(&f[7], row)?,
                loss_alt: parse_opt_f64(&f[8], row)?,
            })
        })
        .collect()
}

pub fn read_sure_csv<R: io::Read>(r: R) -> Result<Vec<SureRecord>> {
    read_table(r, &SURE_COLUMNS)?
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let row = i + 2;
            Ok(SureRecord {
                grid_value: parse_f64(&f[0], row)?,
                replicate: parse_usize(&f[1], row)?,
                sure: parse_f64(&f[2], row)?,
                selected: parse_flag(&f[3], row)?,
                win: parse_f64(&f[4], row)?,
            })
        })
        .collect()
}

pub fn read_convergence_csv<R: io::Read>(r: R) -> Result<Vec<ConvergenceRecord>> {
    read_table(r, &CONVERGENCE_COLUMNS)?
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let row = i + 2;
            Ok(ConvergenceRecord {
                m: parse_usize(&f[0], row)?,
                replicate: parse_usize(&f[1], row)?,
                dist_approx_map: parse_opt_f64(&f[2], row)?,
                dist_mle_truth: parse_opt_f64(&f[3], row)?,
                dist_map_truth: parse_opt_f64(&f[4], row)?,
            })
        })
        .collect()
}

pub fn read_sequential_csv<R: io::Read>(r: R) -> Result<Vec<SequentialRecord>> {
    read_table(r, &SEQUENTIAL_COLUMNS)?
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let row = i + 2;
            let code = parse_usize(&f[5], row)?;
            Ok(SequentialRecord {
                grid_value: parse_f64(&f[0], row)?,
                alpha: parse_f64(&f[1], row)?,
                replicate: parse_usize(&f[2], row)?,
                c_first: parse_f64(&f[3], row)?,
                c_second: parse_f64(&f[4], row)?,
                reported: u8::try_from(code)
                    .ok()
                    .and_then(SequentialChoice::from_code)
                    .ok_or_else(|| Error::invalid(format!("row {row}: unknown choice code {code}")))?,
                loss_default: parse_f64(&f[6], row)?,
                loss_alt: parse_f64(&f[7], row)?,
                loss_third: parse_f64(&f[8], row)?,
                mis_selected: parse_flag(&f[9], row)?,
            })
        })
        .collect()
}
