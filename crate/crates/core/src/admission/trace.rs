//! Workload trace CSV: `id,arrival,size,deadline`.

use std::collections::HashSet;
use std::io::{Read, Write};

use super::queue::WorkloadRequest;
use crate::error::{Error, Result};
use crate::time::{format_time, parse_time};

const HEADER: [&str; 4] = ["id", "arrival", "size", "deadline"];

/// Reads a trace. Times may be ISO-8601 UTC or seconds; ids must be unique.
pub fn read_workload_csv<R: Read>(reader: R, source: &str) -> Result<Vec<WorkloadRequest>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(format!("{source}:1"), e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::parse(
            format!("{source}:1"),
            format!("expected header `{}`", HEADER.join(",")),
        ));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::parse(format!("{source}:{row}"), e.to_string()))?;
        let field = |k: usize| record.get(k).unwrap_or_default();
        let time = |k: usize| {
            parse_time(field(k)).ok_or_else(|| {
                Error::parse(format!("{source}:{row}:{}", k + 1), format!("bad time `{}`", field(k)))
            })
        };
        let id = field(0).to_string();
        if id.is_empty() {
            return Err(Error::parse(format!("{source}:{row}:1"), "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::parse(format!("{source}:{row}:1"), format!("duplicate id `{id}`")));
        }
        let arrival = time(1)?;
        let size: f64 = field(2)
            .parse()
            .map_err(|_| Error::parse(format!("{source}:{row}:3"), format!("bad size `{}`", field(2))))?;
        let deadline = time(3)?;
        let req = WorkloadRequest {
            id,
            arrival,
            size,
            deadline,
        };
        req.validate()
            .map_err(|e| Error::parse(format!("{source}:{row}"), e.to_string()))?;
        out.push(req);
    }
    Ok(out)
}

pub fn write_workload_csv<W: Write>(writer: W, requests: &[WorkloadRequest]) -> Result<()> {
    let to_err = |e: csv::Error| Error::parse("<output>", e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER).map_err(to_err)?;
    for r in requests {
        w.write_record([
            r.id.clone(),
            format_time(r.arrival),
            r.size.to_string(),
            format_time(r.deadline),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::parse("<output>", e.to_string()))?;
    Ok(())
}
