use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{CovFlavor, EconError, MlogitFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Significance {
    Positive,
    Negative,
    NotSignificant,
}

impl Significance {
    pub const ALL: [Significance; 3] = [Significance::Positive, Significance::Negative, Significance::NotSignificant];

    pub fn of(coef: f64, p: f64, sig_level: f64) -> Self {
        if !(p < sig_level) || coef == 0.0 {
            Significance::NotSignificant
        } else if coef > 0.0 {
            Significance::Positive
        } else {
            Significance::Negative
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Significance::Positive => "+",
            Significance::Negative => "-",
            Significance::NotSignificant => "NSS",
        }
    }
}

/// Ordinal strength of an expression as an earnings indicator; `First` is
/// the strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rank {
    First,
    Second,
    Third,
    Fourth,
    Fifth,
}

impl Rank {
    pub fn ordinal(self) -> u8 {
        self as u8 + 1
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rank::First => "1st",
            Rank::Second => "2nd",
            Rank::Third => "3rd",
            Rank::Fourth => "4th",
            Rank::Fifth => "5th",
        })
    }
}

impl std::str::FromStr for Rank {
    type Err = EconError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace(' ', "").as_str() {
            "1st" => Ok(Rank::First),
            "2nd" => Ok(Rank::Second),
            "3rd" => Ok(Rank::Third),
            "4th" => Ok(Rank::Fourth),
            "5th" => Ok(Rank::Fifth),
            _ => Err(EconError::InvalidConfig(format!("unknown rank '{s}'"))),
        }
    }
}

/// Rank from the significance in the `Y = -1` and `Y = +1` equations.
pub fn rank_from(s_neg: Significance, s_pos: Significance) -> Rank {
    use Significance::*;
    match (s_neg, s_pos) {
        (Positive, Negative) | (Negative, Positive) => Rank::First,
        (Positive, NotSignificant) | (NotSignificant, Positive) => Rank::Second,
        (Negative, NotSignificant) | (NotSignificant, Negative) => Rank::Third,
        (Positive, Positive) | (Negative, Negative) => Rank::Fourth,
        (NotSignificant, NotSignificant) => Rank::Fifth,
    }
}

pub fn rank_mwe(coef_neg: f64, p_neg: f64, coef_pos: f64, p_pos: f64, sig_level: f64) -> Rank {
    rank_from(
        Significance::of(coef_neg, p_neg, sig_level),
        Significance::of(coef_pos, p_pos, sig_level),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Intercept,
    Control,
    Mwe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    pub id: String,
    pub kind: VariableKind,
    pub variable: String,
    pub coef_neg: f64,
    pub p_neg: f64,
    pub coef_pos: f64,
    pub p_pos: f64,
    /// Set for expressions only.
    pub rank: Option<Rank>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub tau: f64,
    pub sig_level: f64,
    pub covariance: CovFlavor,
    pub observations: usize,
    /// Outcomes -1, 0 and +1.
    pub category_counts: [usize; 3],
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Equation behind the first and second coefficient columns.
    pub equations: [String; 2],
    pub rows: Vec<RankResult>,
}

impl RegressionReport {
    pub fn from_fit(
        fit: &MlogitFit,
        n_controls: usize,
        flavor: CovFlavor,
        sig_level: f64,
        tau: f64,
        category_counts: [usize; 3],
    ) -> Self {
        let p = fit.p_values(flavor);
        let mut rows = Vec::new();
        for j in 0..fit.k() {
            let (neg, pos) = (fit.param_index(-1, j).unwrap_or(0), fit.param_index(1, j).unwrap_or(0));
            let kind = if j == 0 {
                VariableKind::Intercept
            } else if j <= n_controls {
                VariableKind::Control
            } else {
                VariableKind::Mwe
            };
            let (coef_neg, coef_pos) = (fit.coef(-1, j), fit.coef(1, j));
            rows.push(RankResult {
                id: match kind {
                    VariableKind::Mwe => format!("v{}", j - n_controls),
                    _ => String::new(),
                },
                kind,
                variable: fit.columns[j].clone(),
                coef_neg,
                p_neg: p[neg],
                coef_pos,
                p_pos: p[pos],
                rank: (kind == VariableKind::Mwe).then(|| rank_mwe(coef_neg, p[neg], coef_pos, p[pos], sig_level)),
            });
        }
        RegressionReport {
            tau,
            sig_level,
            covariance: flavor,
            observations: fit.observations,
            category_counts,
            log_likelihood: fit.log_likelihood,
            iterations: fit.iterations,
            equations: ["Y=-1".into(), "Y=+1".into()],
            rows,
        }
    }

    pub fn expressions(&self) -> impl Iterator<Item = &RankResult> {
        self.rows.iter().filter(|r| r.kind == VariableKind::Mwe)
    }

    /// Expressions ordered by rank, then by their order in the fit.
    pub fn ranked(&self) -> Vec<&RankResult> {
        let mut v: Vec<&RankResult> = self.expressions().collect();
        v.sort_by_key(|r| r.rank);
        v
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("id\tkind\tvariable\tcoef_neg\tp_neg\tcoef_pos\tp_pos\tR(w)\n");
        for r in &self.rows {
            let kind = match r.kind {
                VariableKind::Intercept => "intercept",
                VariableKind::Control => "control",
                VariableKind::Mwe => "mwe",
            };
            s.push_str(&format!(
                "{}\t{kind}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                r.id,
                r.variable,
                r.coef_neg,
                r.p_neg,
                r.coef_pos,
                r.p_pos,
                r.rank.map_or("-".to_string(), |k| k.to_string())
            ));
        }
        s
    }
}

/// `expression<TAB>polarity` per line.
pub fn read_polarity<R: BufRead>(reader: R) -> Result<HashMap<String, String>, EconError> {
    let mut out = HashMap::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((e, p)) = line.split_once('\t') {
            out.insert(e.trim().to_lowercase(), p.trim().to_string());
        }
    }
    Ok(out)
}

/// Opinion holder, expression, polarity and rank, one row per ranked
/// expression. Missing holders and polarities are left empty.
pub fn polarity_table(
    report: &RegressionReport,
    polarity: &HashMap<String, String>,
    holders: &HashMap<String, String>,
) -> String {
    let mut s = String::from("holder\tmwe\tpolarity\tR(w)\n");
    for r in report.ranked() {
        let key = r.variable.to_lowercase();
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            holders.get(&r.variable).map_or("", String::as_str),
            r.variable,
            polarity.get(&key).map_or("", String::as_str),
            r.rank.map_or("-".to_string(), |k| k.to_string())
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use Significance::*;

    #[test]
    fn truth_table() {
        let expected = [
            ((Positive, Negative), Rank::First),
            ((Negative, Positive), Rank::First),
            ((Positive, NotSignificant), Rank::Second),
            ((NotSignificant, Positive), Rank::Second),
            ((Negative, NotSignificant), Rank::Third),
            ((NotSignificant, Negative), Rank::Third),
            ((Positive, Positive), Rank::Fourth),
            ((Negative, Negative), Rank::Fourth),
            ((NotSignificant, NotSignificant), Rank::Fifth),
        ];
        for a in Significance::ALL {
            for b in Significance::ALL {
                let hits: Vec<_> = expected.iter().filter(|(k, _)| *k == (a, b)).collect();
                assert_eq!(hits.len(), 1);
                assert_eq!(rank_from(a, b), hits[0].1);
                assert_eq!(rank_from(b, a), rank_from(a, b));
            }
        }
    }

    #[test]
    fn printed_rows() {
        assert_eq!(rank_mwe(11.19, 0.015, -1.931, 0.708, 0.05), Rank::Second);
        assert_eq!(rank_mwe(-3.568, 0.325, -10.53, 0.020, 0.05), Rank::Third);
        assert_eq!(rank_mwe(-0.984, 0.712, 2.222, 0.314, 0.05), Rank::Fifth);
        assert_eq!(rank_mwe(1.0, 0.05, 1.0, 0.01, 0.05), Rank::Second);
    }

    #[test]
    fn rank_text() {
        for r in [Rank::First, Rank::Second, Rank::Third, Rank::Fourth, Rank::Fifth] {
            assert_eq!(r.to_string().parse::<Rank>().unwrap(), r);
        }
        assert_eq!("3 rd".parse::<Rank>().unwrap(), Rank::Third);
        assert_eq!(Rank::Fifth.ordinal(), 5);
    }
}
