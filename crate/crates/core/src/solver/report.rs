use std::fmt::Write as _;

use crate::error::{Error, Result};

/// One outer iteration of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Hierarchy level, 0 at the coarsest.
    pub level: usize,
    /// 1-based within the level.
    pub iteration: usize,
    pub lambda: f64,
    pub observed_loss: f64,
    /// Coarse terms weighted by their base weights, without λ.
    pub coarse_loss: f64,
    pub pof: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub records: Vec<IterationRecord>,
}

impl SolveReport {
    pub const HEADER: &'static str = "level,iteration,lambda,observed_loss,coarse_loss,pof,seconds";

    pub fn push(&mut self, r: IterationRecord) {
        self.records.push(r);
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Records of one level.
    pub fn level(&self, level: usize) -> impl Iterator<Item = &IterationRecord> {
        self.records.iter().filter(move |r| r.level == level)
    }

    /// Header plus one row per record. Floats use the shortest
    /// representation that parses back exactly; a missing PoF is empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.records {
            let pof = r.pof.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.level, r.iteration, r.lambda, r.observed_loss, r.coarse_loss, pof, r.seconds
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == Self::HEADER => {}
            _ => return Err(Error::InvalidArgument("report header missing or wrong".into())),
        }
        let mut records = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::InvalidArgument(format!("report line {}: {what}", n + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad("expected 7 fields"));
            }
            let float = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer"));
            records.push(IterationRecord {
                level: int(f[0])?,
                iteration: int(f[1])?,
                lambda: float(f[2])?,
                observed_loss: float(f[3])?,
                coarse_loss: float(f[4])?,
                pof: if f[5].is_empty() { None } else { Some(float(f[5])?) },
                seconds: float(f[6])?,
            });
        }
        Ok(SolveReport { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec(
            (0usize..5, 1usize..300, any::<f64>(), any::<f64>(), any::<f64>(), prop::option::of(any::<f64>()), 0.0f64..10.0),
            0..20,
        )) {
            let rows: Vec<_> = rows.into_iter().filter(|r| r.2.is_finite() && r.3.is_finite() && r.4.is_finite() && r.5.is_none_or(f64::is_finite)).collect();
            let report = SolveReport {
                records: rows.into_iter().map(|(level, iteration, lambda, observed_loss, coarse_loss, pof, seconds)| IterationRecord {
                    level, iteration, lambda, observed_loss, coarse_loss, pof, seconds,
                }).collect(),
            };
            let back = SolveReport::from_csv(&report.to_csv()).unwrap();
            prop_assert_eq!(back, report);
        }
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(SolveReport::from_csv("a,b\n").is_err());
        let r = SolveReport::from_csv(&format!("{}\n0,1,1,2,3,,0\n", SolveReport::HEADER)).unwrap();
        assert_eq!(r.records[0].pof, None);
    }
}
