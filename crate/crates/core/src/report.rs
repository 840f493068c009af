//! Plot-ready CSV tables.

use std::io::Write;

use crate::adaptive::{EvalMethod, SweepRow};
use crate::error::{Error, Result};
use crate::hypothesis::{ClassifierMethod, ClassifierReport};
use crate::worstcase::WorstcaseRow;

pub const IDENTIFY_HEADER: [&str; 7] = ["strategy", "n", "p", "tests_per_person", "method", "seed", "std_error"];
pub const WORSTCASE_HEADER: [&str; 8] = [
    "strategy",
    "n",
    "p",
    "tests_per_person",
    "method",
    "seed",
    "std_error",
    "worstcase",
];
pub const CLASSIFY_HEADER: [&str; 12] = [
    "p0", "p1", "N", "L", "V", "tau", "rho", "PF", "PD", "EG", "method", "seed",
];

fn csv_error(e: csv::Error) -> Error {
    Error::input(format!("cannot write table: {e}"))
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    Ok(w)
}

fn seed_field(seed: Option<u64>) -> String {
    seed.map(|s| s.to_string()).unwrap_or_default()
}

pub fn write_identify_table<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(out, &IDENTIFY_HEADER)?;
    for row in rows {
        let seed = match row.report.method {
            EvalMethod::ExactEnumeration => None,
            EvalMethod::MonteCarlo { seed, .. } => Some(seed),
        };
        w.write_record([
            row.strategy.to_string(),
            row.n.to_string(),
            row.p.to_string(),
            row.report.tests_per_person.to_string(),
            row.report.method.label().to_string(),
            seed_field(seed),
            (row.report.std_error() / row.n as f64).to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::input(format!("cannot write table: {e}")))
}

pub fn write_worstcase_table<W: Write>(out: W, rows: &[WorstcaseRow]) -> Result<()> {
    let mut w = writer(out, &WORSTCASE_HEADER)?;
    for row in rows {
        w.write_record([
            row.strategy.to_string(),
            row.n.to_string(),
            row.p.to_string(),
            row.iid_tests_per_person.to_string(),
            "exact".to_string(),
            String::new(),
            "0".to_string(),
            row.worstcase_tests_per_person.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::input(format!("cannot write table: {e}")))
}

pub fn write_classify_table<W: Write>(out: W, reports: &[ClassifierReport]) -> Result<()> {
    let mut w = writer(out, &CLASSIFY_HEADER)?;
    for r in reports {
        let seed = match r.method {
            ClassifierMethod::ExactEnumeration => None,
            ClassifierMethod::MonteCarlo { seed, .. } => Some(seed),
        };
        w.write_record([
            r.pair.p0.to_string(),
            r.pair.p1.to_string(),
            r.config.pool_size.to_string(),
            r.config.subpools.to_string(),
            r.config.threshold.to_string(),
            r.config.start_level.to_string(),
            r.config.sensitivity.to_string(),
            r.pf.to_string(),
            r.pd.to_string(),
            r.expected_tests.to_string(),
            r.method.label().to_string(),
            seed_field(seed),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::input(format!("cannot write table: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::{sweep_tests_per_person, EvalMode, StrategyKind};
    use crate::domain::NoiseModel;

    #[test]
    fn identify_table_layout() {
        let rows = sweep_tests_per_person(
            StrategyKind::Individual,
            &[4],
            &[0.3],
            NoiseModel::NOISELESS,
            EvalMode::Exact,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_identify_table(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "strategy,n,p,tests_per_person,method,seed,std_error\nindividual,4,0.3,1,exact,,0\n"
        );
    }
}
