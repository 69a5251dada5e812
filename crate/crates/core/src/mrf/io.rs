//! Model files (canonical JSON) and sample files (CSV with a `v0,v1,...`
//! header).

use std::io::{Read, Write};

use super::graph::GraphStructure;
use super::model::DiscreteMRF;
use super::sampling::SampleSet;
use crate::canonical::to_canonical_json;
use crate::error::{Error, Result};

pub fn model_to_json(mrf: &DiscreteMRF) -> Result<String> {
    to_canonical_json(mrf)
}

pub fn model_from_json(text: &str) -> Result<DiscreteMRF> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_samples<W: Write>(samples: &SampleSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = samples.graph().vertex_count();
    w.write_record((0..d).map(|v| format!("v{v}")))?;
    for row in samples.rows() {
        w.write_record(row.iter().map(|s| s.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(reader: R, graph: &GraphStructure) -> Result<SampleSet> {
    let mut r = csv::Reader::from_reader(reader);
    let d = graph.vertex_count();
    let headers = r.headers()?.clone();
    let expected: Vec<String> = (0..d).map(|v| format!("v{v}")).collect();
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::InvalidArgument(format!(
            "sample header must be v0..v{}, got {:?}",
            d.saturating_sub(1),
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("sample row {i}: {e}")))?;
        rows.push(row);
    }
    SampleSet::new(graph.clone(), rows)
}
