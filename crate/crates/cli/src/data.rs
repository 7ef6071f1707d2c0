//! Tabular inputs. The CSV schema is detected from the header:
//! `population,arm,events,total` for counts or `population,p0,p1` for risks.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use cost_core::meta::StudyRecord;
use cost_core::{risks_from_counts, ArmCounts, RiskPair};
use serde::{Deserialize, Serialize};

use crate::output::{round_sig, Envelope};
use crate::{usage, Failure};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Data {
    Counts(Vec<CountRow>),
    Risks(Vec<RiskRow>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub population: String,
    pub arm: String,
    pub events: u64,
    pub total: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub population: String,
    pub p0: f64,
    pub p1: f64,
}

/// One population with its risks and, when read from counts, the arms.
#[derive(Clone, Debug)]
pub struct Population {
    pub name: String,
    pub risks: RiskPair,
    pub counts: Option<(ArmCounts, ArmCounts)>,
}

const COUNTS_HEADER: [&str; 4] = ["population", "arm", "events", "total"];
const RISKS_HEADER: [&str; 3] = ["population", "p0", "p1"];

/// Reads a CSV file or the inline data of a JSON output document.
pub fn read(path: &Path) -> Result<Data, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let env: Envelope =
            serde_json::from_str(&text).with_context(|| format!("{} is not a valid output document", path.display()))?;
        let data = env.config.get("data").cloned().ok_or_else(|| anyhow!("{} carries no input data", path.display()))?;
        return Ok(serde_json::from_value(data)?);
    }
    parse_csv(&text).map_err(|e| match e {
        Failure::Data(e) => Failure::Data(e.context(format!("{}", path.display()))),
        other => other,
    })
}

pub fn parse_csv(text: &str) -> Result<Data, Failure> {
    if text.trim().is_empty() {
        return Err(usage("input file is empty"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let column = |name: &str| header.iter().position(|h| h == name);
    let matches = |cols: &[&str]| header.len() == cols.len() && cols.iter().all(|c| column(c).is_some());
    let counts = matches(&COUNTS_HEADER);
    if !counts && !matches(&RISKS_HEADER) {
        return Err(Failure::Data(anyhow!(
            "line 1: unrecognized header {:?}; expected population,arm,events,total or population,p0,p1",
            header.join(",")
        )));
    }
    let mut count_rows = Vec::new();
    let mut risk_rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |name: &str| rec.get(column(name).unwrap()).unwrap_or("");
        let parse_err = |name: &str, e: &dyn std::fmt::Display| anyhow!("line {line}: column {name}: {e} ({:?})", field(name));
        let population = field("population").to_string();
        if population.is_empty() {
            return Err(Failure::Data(anyhow!("line {line}: empty population")));
        }
        if counts {
            let int = |name: &str| field(name).parse::<u64>().map_err(|e| parse_err(name, &e));
            count_rows.push(CountRow {
                population,
                arm: field("arm").to_string(),
                events: int("events")?,
                total: int("total")?,
            });
            let row = count_rows.last().unwrap();
            arm_is_treated(&row.arm).map_err(|e| anyhow!("line {line}: {e}"))?;
            ArmCounts::new(row.events, row.total).map_err(|e| anyhow!("line {line}: {e}"))?;
        } else {
            let prob = |name: &str| field(name).parse::<f64>().map_err(|e| parse_err(name, &e));
            let row = RiskRow {
                population,
                p0: prob("p0")?,
                p1: prob("p1")?,
            };
            RiskPair::new(row.p0, row.p1).map_err(|e| anyhow!("line {line}: {e}"))?;
            risk_rows.push(row);
        }
    }
    if count_rows.is_empty() && risk_rows.is_empty() {
        return Err(usage("input file has a header but no rows"));
    }
    Ok(if counts {
        Data::Counts(count_rows)
    } else {
        Data::Risks(risk_rows)
    })
}

fn arm_is_treated(arm: &str) -> anyhow::Result<bool> {
    match arm.to_ascii_lowercase().as_str() {
        "treated" | "treatment" | "exposed" | "1" => Ok(true),
        "control" | "untreated" | "unexposed" | "0" => Ok(false),
        other => bail!("arm must be treated or control, got {other:?}"),
    }
}

/// Risks from counts get the same 12-digit rounding as risks read from text,
/// so both schemas describe a population identically.
fn rounded(r: RiskPair) -> RiskPair {
    RiskPair {
        p0: round_sig(r.p0),
        p1: round_sig(r.p1),
    }
}

/// Groups rows into populations in order of first appearance.
pub fn populations(data: &Data) -> Result<Vec<Population>, Failure> {
    match data {
        Data::Risks(rows) => {
            let mut out: Vec<Population> = Vec::new();
            for r in rows {
                if out.iter().any(|p| p.name == r.population) {
                    return Err(Failure::Data(anyhow!("population {:?} appears twice", r.population)));
                }
                out.push(Population {
                    name: r.population.clone(),
                    risks: RiskPair::new(r.p0, r.p1).with_context(|| format!("population {:?}", r.population))?,
                    counts: None,
                });
            }
            Ok(out)
        }
        Data::Counts(rows) => {
            let mut arms: Vec<(String, Option<ArmCounts>, Option<ArmCounts>)> = Vec::new();
            for r in rows {
                let idx = match arms.iter().position(|a| a.0 == r.population) {
                    Some(i) => i,
                    None => {
                        arms.push((r.population.clone(), None, None));
                        arms.len() - 1
                    }
                };
                let counts = ArmCounts::new(r.events, r.total).with_context(|| format!("population {:?}", r.population))?;
                let slot = if arm_is_treated(&r.arm)? {
                    &mut arms[idx].1
                } else {
                    &mut arms[idx].2
                };
                if slot.replace(counts).is_some() {
                    return Err(Failure::Data(anyhow!("population {:?} has arm {:?} twice", r.population, r.arm)));
                }
            }
            arms.into_iter()
                .map(|(name, t, c)| match (t, c) {
                    (Some(t), Some(c)) => Ok(Population {
                        risks: rounded(risks_from_counts(t, c)?),
                        counts: Some((t, c)),
                        name,
                    }),
                    _ => Err(Failure::Data(anyhow!("population {name:?} needs both a treated and a control arm"))),
                })
                .collect()
        }
    }
}

pub fn studies(data: &Data) -> Result<Vec<StudyRecord>, Failure> {
    if matches!(data, Data::Risks(_)) {
        return Err(Failure::Data(anyhow!(
            "heterogeneity needs event counts (population,arm,events,total), not risks"
        )));
    }
    populations(data)?
        .into_iter()
        .map(|p| {
            let (t, c) = p.counts.expect("counts rows carry arms");
            Ok(StudyRecord::new(p.name, t, c)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_counts_schema() {
        let d = parse_csv("population,arm,events,total\ns,treated,3,100\ns,control,2,100\n").unwrap();
        let pops = populations(&d).unwrap();
        assert_eq!(pops.len(), 1);
        assert_eq!(pops[0].risks, RiskPair { p0: 0.02, p1: 0.03 });
    }

    #[test]
    fn detects_risks_schema_any_column_order() {
        let d = parse_csv("p1, population ,p0\n0.03,s,0.02\n").unwrap();
        assert_eq!(
            d,
            Data::Risks(vec![RiskRow {
                population: "s".into(),
                p0: 0.02,
                p1: 0.03
            }])
        );
    }

    #[test]
    fn bad_row_names_line() {
        let err = parse_csv("population,p0,p1\na,0.1,0.2\nb,0.1,x\n").unwrap_err();
        assert!(matches!(err, Failure::Data(_)));
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_csv("population,arm,events,total\na,treated,5,4\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn empty_input_is_usage_error() {
        assert!(matches!(parse_csv(""), Err(Failure::Usage(_))));
        assert!(matches!(parse_csv("population,p0,p1\n"), Err(Failure::Usage(_))));
    }

    #[test]
    fn unknown_header_rejected() {
        assert!(matches!(parse_csv("a,b\n1,2\n"), Err(Failure::Data(_))));
    }

    #[test]
    fn missing_arm_rejected() {
        let d = parse_csv("population,arm,events,total\ns,treated,3,100\n").unwrap();
        assert!(populations(&d).is_err());
        let d = parse_csv("population,arm,events,total\ns,treated,3,100\ns,1,3,100\n").unwrap();
        assert!(populations(&d).is_err());
    }
}
