use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{PipelineError, RunContext, TOOL_VERSION};
use crate::volume::write_atomic;

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    write_atomic(path, bytes).map_err(PipelineError::from)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| PipelineError::table(path, e))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// Writes `comment`, a header row and the records, atomically.
pub(crate) fn write_csv<I, R>(path: &Path, comment: &str, header: &[String], rows: I) -> Result<(), PipelineError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut buf = Vec::new();
    buf.extend_from_slice(comment.as_bytes());
    buf.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(|e| PipelineError::table(path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| PipelineError::table(path, e))?;
        }
        w.flush().map_err(|e| PipelineError::io(path, e))?;
    }
    write_bytes(path, &buf)
}

/// Prefixes CSV produced by another writer with the provenance comment.
pub(crate) fn write_with_comment(path: &Path, comment: &str, body: &[u8]) -> Result<(), PipelineError> {
    let mut buf = Vec::with_capacity(body.len() + comment.len() + 1);
    buf.extend_from_slice(comment.as_bytes());
    buf.push(b'\n');
    buf.extend_from_slice(body);
    write_bytes(path, &buf)
}

/// A CSV read back with its leading comment line stripped.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub comment: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_commented_csv(path: &Path) -> Result<CsvTable, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let (comment, body) = match text.strip_prefix('#') {
        Some(rest) => {
            let (line, body) = rest.split_once('\n').unwrap_or((rest, ""));
            (Some(format!("#{line}")), body)
        }
        None => (None, text.as_str()),
    };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = r
        .headers()
        .map_err(|e| PipelineError::table(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(|e| PipelineError::table(path, e))?;
    Ok(CsvTable { comment, header, rows })
}

/// One invocation of a pipeline command, appended to `<out>/runs.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub command: String,
    pub manifest_hash: String,
    pub tool_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub status: String,
    pub detail: Option<String>,
}

pub(crate) fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

impl RunRecord {
    pub fn start(ctx: &RunContext, command: &str) -> Self {
        let started = now_ms();
        Self {
            run_id: format!("{started}-{}", std::process::id()),
            command: command.to_string(),
            manifest_hash: ctx.manifest.hash.clone(),
            tool_version: TOOL_VERSION.to_string(),
            started_unix_ms: started,
            finished_unix_ms: started,
            status: "running".into(),
            detail: None,
        }
    }

    pub fn finish<T>(mut self, ctx: &RunContext, result: &Result<T, PipelineError>) -> Result<(), PipelineError> {
        self.finished_unix_ms = now_ms();
        match result {
            Ok(_) => self.status = "ok".into(),
            Err(e) => {
                self.status = "error".into();
                self.detail = Some(e.to_string());
            }
        }
        self.append(&ctx.out)
    }

    fn append(&self, out: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(out).map_err(|e| PipelineError::io(out, e))?;
        let path = out.join("runs.jsonl");
        let mut line = serde_json::to_string(self).map_err(|e| PipelineError::table(&path, e))?;
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| PipelineError::io(&path, e))?;
        f.write_all(line.as_bytes()).map_err(|e| PipelineError::io(&path, e))
    }

    /// All records of a run directory, oldest first.
    pub fn read_all(out: &Path) -> Result<Vec<RunRecord>, PipelineError> {
        let path = out.join("runs.jsonl");
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
            Err(e) => return Err(PipelineError::io(&path, e)),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| PipelineError::table(&path, e)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_comment() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let header = vec!["a".to_string(), "b".to_string()];
        write_csv(&path, "# hello", &header, vec![vec!["1", "x,y"], vec!["2", ""]]).unwrap();
        let t = read_commented_csv(&path).unwrap();
        assert_eq!(t.comment.as_deref(), Some("# hello"));
        assert_eq!(t.header, header);
        assert_eq!(t.rows, vec![vec!["1", "x,y"], vec!["2", ""]]);
        assert_eq!(t.column("b"), Some(1));
    }
}
