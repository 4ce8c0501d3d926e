//! Long-format `(x, y, series)` exports of run tables.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::Table;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LqPartial,
    EntropyTerms,
    Ledger,
    CapacityTrend,
    OuterDecay,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] =
        [PlotKind::LqPartial, PlotKind::EntropyTerms, PlotKind::Ledger, PlotKind::CapacityTrend, PlotKind::OuterDecay];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlotKind::LqPartial => "lq_partial",
            PlotKind::EntropyTerms => "entropy_terms",
            PlotKind::Ledger => "ledger",
            PlotKind::CapacityTrend => "capacity_trend",
            PlotKind::OuterDecay => "outer_decay",
        }
    }

    /// The run table the plot is read from.
    pub fn source(&self) -> &'static str {
        match self {
            PlotKind::LqPartial => "certificate.csv",
            PlotKind::EntropyTerms => "entropy_terms.csv",
            PlotKind::Ledger => "ledger.csv",
            PlotKind::CapacityTrend => "capacity_trend.csv",
            PlotKind::OuterDecay => "outer_decay.csv",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown plot kind '{s}'")))
    }
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Result<Self> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::MissingTable(path.display().to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingTable(format!("column {name}")))
    }
}

/// Builds the long-format table for `kind` from the run in `dir`.
pub fn plotdata(dir: &Path, kind: PlotKind) -> Result<Table> {
    let csv = Csv::read(&dir.join(kind.source()))?;
    let mut out = Table::new(&["x", "y", "series"]);
    let mut emit = |x: &str, y: &str, series: String| {
        if !y.is_empty() {
            out.push(vec![x.to_string(), y.to_string(), series]);
        }
    };
    match kind {
        PlotKind::LqPartial | PlotKind::EntropyTerms => {
            let x = csv.column("j")?;
            let prefix = if kind == PlotKind::LqPartial { "lq_partial_" } else { "" };
            let series: Vec<(usize, String)> = csv
                .header
                .iter()
                .enumerate()
                .filter(|(i, h)| *i != x && h.starts_with(prefix))
                .map(|(i, h)| (i, h[prefix.len()..].to_string()))
                .collect();
            if series.is_empty() {
                return Err(Error::MissingTable(format!("{prefix}* columns in {}", kind.source())));
            }
            for (i, name) in &series {
                for r in &csv.rows {
                    emit(&r[x], &r[*i], name.clone());
                }
            }
        }
        PlotKind::Ledger => {
            let (x, y, s) = (csv.column("j")?, csv.column("norm_upper")?, csv.column("r")?);
            for r in &csv.rows {
                emit(&r[x], &r[y], format!("r={}", r[s].parse::<f64>().map_or(r[s].clone(), |v| v.to_string())));
            }
        }
        PlotKind::CapacityTrend => {
            let (x, y, s) = (csv.column("stage")?, csv.column("upper")?, csv.column("p")?);
            for r in &csv.rows {
                emit(&r[x], &r[y], format!("p={}", r[s].parse::<f64>().map_or(r[s].clone(), |v| v.to_string())));
            }
        }
        PlotKind::OuterDecay => {
            let (x, y, s) = (csv.column("n")?, csv.column("abs")?, csv.column("j")?);
            for r in &csv.rows {
                emit(&r[x], &r[y], format!("j={}", r[s]));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_rows_become_long_format() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("ledger.csv"), "r,j,norm_upper\n1.5000000000000000e0,1,2.5e0\n").unwrap();
        let t = plotdata(dir.path(), PlotKind::Ledger).unwrap();
        assert_eq!(t.render(), "x,y,series\n1,2.5e0,r=1.5\n");
    }

    #[test]
    fn missing_table_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(plotdata(dir.path(), PlotKind::OuterDecay), Err(Error::MissingTable(_))));
    }
}
