use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{categorize, compute_sue_gapped, EconError};
use crate::mwe::WeightMatrix;

/// Control columns of the earnings file, in file order.
pub const CONTROL_NAMES: [&str; 8] = [
    "lag_sue",
    "bm",
    "roe",
    "accruals",
    "size",
    "dividend",
    "z_score",
    "asset_growth",
];

/// Document key shared with the sentence files: `company_year`.
pub fn doc_key(company_id: &str, fiscal_year: i32) -> String {
    format!("{company_id}_{fiscal_year}")
}

/// One row of the earnings file. Empty fields read as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarningsRow {
    pub company_id: String,
    pub fiscal_year: i32,
    pub earnings: Option<f64>,
    pub lag_sue: Option<f64>,
    pub bm: Option<f64>,
    pub roe: Option<f64>,
    pub accruals: Option<f64>,
    pub size: Option<f64>,
    pub dividend: Option<f64>,
    pub z_score: Option<f64>,
    pub asset_growth: Option<f64>,
}

impl EarningsRow {
    pub fn control(&self, name: &str) -> Option<f64> {
        match name {
            "lag_sue" => self.lag_sue,
            "bm" => self.bm,
            "roe" => self.roe,
            "accruals" => self.accruals,
            "size" => self.size,
            "dividend" => self.dividend,
            "z_score" => self.z_score,
            "asset_growth" => self.asset_growth,
            _ => None,
        }
    }
}

pub fn read_earnings<R: Read>(reader: R) -> Result<Vec<EarningsRow>, EconError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .map(|r| r.map_err(|e| EconError::Csv(e.to_string())))
        .collect()
}

pub fn write_earnings<W: std::io::Write>(writer: W, rows: &[EarningsRow]) -> Result<(), EconError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| EconError::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelConfig {
    pub tau: f64,
    /// Controls used as regressors, a subset of [`CONTROL_NAMES`].
    pub controls: Vec<String>,
    /// Take a missing `lag_sue` from the firm's computed SUE of the prior year.
    pub fill_lag_sue: bool,
}

impl Default for PanelConfig {
    fn default() -> Self {
        PanelConfig {
            tau: 0.5,
            controls: CONTROL_NAMES.iter().map(|s| s.to_string()).collect(),
            fill_lag_sue: true,
        }
    }
}

impl PanelConfig {
    pub fn validate(&self) -> Result<(), EconError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(EconError::InvalidTau(self.tau));
        }
        if let Some(bad) = self.controls.iter().find(|c| !CONTROL_NAMES.contains(&c.as_str())) {
            return Err(EconError::UnknownControl(bad.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmYear {
    pub company_id: String,
    pub fiscal_year: i32,
    pub earnings: f64,
    /// Values of [`Panel::controls`], in that order.
    pub controls: Vec<f64>,
    pub sue: f64,
    pub outcome: i8,
}

impl FirmYear {
    pub fn doc_id(&self) -> String {
        doc_key(&self.company_id, self.fiscal_year)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub filings: usize,
    pub earnings_rows: usize,
    pub matched: usize,
    pub dropped_missing_sue: usize,
    pub dropped_missing_controls: usize,
    pub degenerate_firms: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub controls: Vec<String>,
    pub tau: f64,
    pub rows: Vec<FirmYear>,
    pub report: MergeReport,
}

impl Panel {
    /// Counts of outcomes -1, 0 and +1.
    pub fn category_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for r in &self.rows {
            c[(r.outcome + 1) as usize] += 1;
        }
        c
    }
}

/// SUE of every firm-year with a defined value. Firms whose history is too
/// short or constant are listed separately.
pub fn sue_table(earnings: &[EarningsRow]) -> Result<(BTreeMap<(String, i32), f64>, Vec<String>), EconError> {
    let mut by_firm: BTreeMap<&str, BTreeMap<i32, Option<f64>>> = BTreeMap::new();
    for r in earnings {
        let years = by_firm.entry(r.company_id.as_str()).or_default();
        if years.insert(r.fiscal_year, r.earnings).is_some() {
            return Err(EconError::DuplicateKey(r.company_id.clone(), r.fiscal_year));
        }
    }
    let mut out = BTreeMap::new();
    let mut degenerate = Vec::new();
    for (firm, years) in by_firm {
        let (Some(&lo), Some(&hi)) = (years.keys().next(), years.keys().next_back()) else {
            continue;
        };
        let series: Vec<Option<f64>> = (lo..=hi).map(|y| years.get(&y).copied().flatten()).collect();
        match compute_sue_gapped(&series) {
            Ok(sue) => {
                for (k, s) in sue.into_iter().enumerate() {
                    if let Some(s) = s {
                        out.insert((firm.to_string(), lo + k as i32), s);
                    }
                }
            }
            Err(EconError::DegenerateSeries | EconError::InsufficientHistory(_)) => {
                degenerate.push(firm.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    Ok((out, degenerate))
}

/// Inner join of filing keys with the earnings rows. Firm-years without a
/// SUE or with a missing control are dropped and counted.
pub fn merge_firm_years(
    filings: &[(String, i32)],
    earnings: &[EarningsRow],
    cfg: &PanelConfig,
) -> Result<Panel, EconError> {
    cfg.validate()?;
    let (sue, degenerate) = sue_table(earnings)?;
    let by_key: HashMap<(&str, i32), &EarningsRow> = earnings
        .iter()
        .map(|r| ((r.company_id.as_str(), r.fiscal_year), r))
        .collect();
    let keys: BTreeSet<&(String, i32)> = filings.iter().collect();
    let mut report = MergeReport {
        filings: keys.len(),
        earnings_rows: earnings.len(),
        degenerate_firms: degenerate.len(),
        ..Default::default()
    };
    let mut rows = Vec::new();
    for key in keys {
        let Some(row) = by_key.get(&(key.0.as_str(), key.1)) else {
            continue;
        };
        report.matched += 1;
        let (Some(&s), Some(e)) = (sue.get(key), row.earnings) else {
            report.dropped_missing_sue += 1;
            continue;
        };
        let controls: Option<Vec<f64>> = cfg
            .controls
            .iter()
            .map(|c| {
                let v = row.control(c);
                if v.is_none() && c == "lag_sue" && cfg.fill_lag_sue {
                    sue.get(&(key.0.clone(), key.1 - 1)).copied()
                } else {
                    v
                }
            })
            .collect();
        let Some(controls) = controls.filter(|c| c.iter().all(|v| v.is_finite())) else {
            report.dropped_missing_controls += 1;
            continue;
        };
        rows.push(FirmYear {
            company_id: key.0.clone(),
            fiscal_year: key.1,
            earnings: e,
            controls,
            sue: s,
            outcome: categorize(Some(s), cfg.tau)?,
        });
    }
    report.kept = rows.len();
    Ok(Panel {
        controls: cfg.controls.clone(),
        tau: cfg.tau,
        rows,
        report,
    })
}

/// Regressors without the intercept, which the fitter adds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub columns: Vec<String>,
    pub doc_ids: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<i8>,
    /// How many leading columns are controls.
    pub n_controls: usize,
}

/// Controls followed by the weight of each selected expression.
pub fn design_matrix(
    panel: &Panel,
    weights: Option<&WeightMatrix>,
    selected: &[String],
) -> Result<Design, EconError> {
    let mut columns = panel.controls.clone();
    let mut expr_cols = Vec::new();
    if !selected.is_empty() {
        let w = weights.ok_or_else(|| EconError::Alignment("no weight matrix for selected expressions".into()))?;
        for s in selected {
            let j = w
                .column(s)
                .ok_or_else(|| EconError::Alignment(format!("expression '{s}' not in weight matrix")))?;
            expr_cols.push(j);
            columns.push(s.clone());
        }
    }
    let doc_index: HashMap<&str, usize> = weights
        .map(|w| w.documents.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect())
        .unwrap_or_default();
    let mut x = Vec::with_capacity(panel.rows.len());
    let mut doc_ids = Vec::with_capacity(panel.rows.len());
    for r in &panel.rows {
        let id = r.doc_id();
        let mut row = r.controls.clone();
        if let Some(w) = weights {
            let d = *doc_index
                .get(id.as_str())
                .ok_or_else(|| EconError::Alignment(format!("document '{id}' not in weight matrix")))?;
            row.extend(expr_cols.iter().map(|&j| w.values[d][j]));
        }
        x.push(row);
        doc_ids.push(id);
    }
    Ok(Design {
        columns,
        doc_ids,
        x,
        y: panel.rows.iter().map(|r| r.outcome).collect(),
        n_controls: panel.controls.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "company_id,fiscal_year,earnings,lag_sue,bm,roe,accruals,size,dividend,z_score,asset_growth
acme,2001,1.0,,0.5,0.1,0.01,5.0,0.0,2.0,0.1
acme,2002,2.0,,0.6,0.1,0.02,5.1,0.0,2.1,0.1
acme,2003,4.0,0.3,0.7,0.2,0.01,5.2,0.1,2.2,0.2
acme,2004,3.0,0.2,0.8,0.1,0.03,5.3,0.1,,0.1
";

    fn keys(v: &[(&str, i32)]) -> Vec<(String, i32)> {
        v.iter().map(|(c, y)| (c.to_string(), *y)).collect()
    }

    #[test]
    fn csv_with_blanks() {
        let rows = read_earnings(CSV.as_bytes()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].lag_sue, None);
        assert_eq!(rows[3].z_score, None);
        let mut buf = Vec::new();
        write_earnings(&mut buf, &rows).unwrap();
        assert_eq!(read_earnings(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn join_and_drops() {
        let rows = read_earnings(CSV.as_bytes()).unwrap();
        let filings = keys(&[("acme", 2002), ("acme", 2003), ("acme", 2004), ("other", 2003), ("acme", 1999)]);
        let cfg = PanelConfig::default();
        let p = merge_firm_years(&filings, &rows, &cfg).unwrap();
        assert_eq!(p.report.matched, 3);
        assert_eq!(p.report.dropped_missing_controls, 2);
        assert_eq!(p.rows.len(), 1);
        let without_z = PanelConfig {
            controls: vec!["bm".into(), "roe".into()],
            ..cfg.clone()
        };
        let p = merge_firm_years(&filings, &rows, &without_z).unwrap();
        assert_eq!(p.rows.len(), 3);
        assert_eq!(p.rows[2].outcome, -1);
        // lag_sue of 2002 is filled from the 2001 SUE, which does not exist.
        let lag_only = PanelConfig {
            controls: vec!["lag_sue".into()],
            ..cfg
        };
        let p = merge_firm_years(&filings, &rows, &lag_only).unwrap();
        assert_eq!(p.report.dropped_missing_controls, 1);
        assert_eq!(p.rows[0].fiscal_year, 2003);
    }

    #[test]
    fn duplicate_key() {
        let mut rows = read_earnings(CSV.as_bytes()).unwrap();
        rows.push(rows[1].clone());
        assert!(matches!(
            merge_firm_years(&[], &rows, &PanelConfig::default()),
            Err(EconError::DuplicateKey(_, 2002))
        ));
    }

    #[test]
    fn design_alignment() {
        let rows = read_earnings(CSV.as_bytes()).unwrap();
        let cfg = PanelConfig {
            controls: vec!["bm".into(), "roe".into()],
            ..Default::default()
        };
        let p = merge_firm_years(&keys(&[("acme", 2003), ("acme", 2004)]), &rows, &cfg).unwrap();
        let d = design_matrix(&p, None, &[]).unwrap();
        assert_eq!(d.columns, ["bm", "roe"]);
        let w = WeightMatrix {
            documents: vec!["acme_2003".into(), "acme_2004".into()],
            expressions: vec!["could be adversely".into(), "will successfully".into()],
            values: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
        };
        let sel = vec!["will successfully".to_string()];
        let d = design_matrix(&p, Some(&w), &sel).unwrap();
        assert_eq!(d.columns, ["bm", "roe", "will successfully"]);
        assert_eq!(d.x[1], [0.8, 0.1, 0.4]);
        let mut short = w.clone();
        short.documents.pop();
        short.values.pop();
        assert!(matches!(design_matrix(&p, Some(&short), &sel), Err(EconError::Alignment(_))));
        assert!(matches!(
            design_matrix(&p, Some(&w), &["nope".to_string()]),
            Err(EconError::Alignment(_))
        ));
    }
}
