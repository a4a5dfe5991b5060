use std::io::Write;

use serde::{Deserialize, Serialize};

use super::pareto::{pareto_front, TradeoffPoint};
use crate::error::{Error, Result};

/// One evaluated network in a results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task: String,
    pub method: String,
    pub decoder: Option<usize>,
    pub test_mse: f64,
    pub nonzeros: usize,
    pub selected: bool,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format {
        what: "csv",
        reason: e.to_string(),
    }
}

fn write_rows<'a, W: Write>(out: W, rows: impl IntoIterator<Item = &'a ReportRow>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// All rows sorted by task, then method, then decoder.
pub fn write_summary_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (a.task.as_str(), a.method.as_str(), a.decoder).cmp(&(b.task.as_str(), b.method.as_str(), b.decoder))
    });
    write_rows(out, sorted)
}

/// The per-task non-dominated rows in (test MSE, nonzeros).
pub fn write_pareto_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut tasks: Vec<&str> = rows.iter().map(|r| r.task.as_str()).collect();
    tasks.sort_unstable();
    tasks.dedup();
    let mut front = Vec::new();
    for task in tasks {
        let members: Vec<&ReportRow> = rows.iter().filter(|r| r.task == task).collect();
        let points: Vec<TradeoffPoint> = members
            .iter()
            .map(|r| TradeoffPoint {
                mse: r.test_mse,
                nonzeros: r.nonzeros,
            })
            .collect();
        front.extend(pareto_front(&points).into_iter().map(|i| members[i]));
    }
    write_rows(out, front)
}
