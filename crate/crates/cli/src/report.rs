//! Deterministic report assembly: JSON and CSV tables with byte-stable
//! output. Timestamps and wall times go to a separate metadata file so
//! reruns with the same seed produce byte-identical reports.

use serde_json::Value;
use std::io::Write;
use std::path::Path;
use tichain::{Error, Result};

/// One report table: named rows of key-value cells. Keys serialize in
/// sorted order (serde_json maps are BTree-backed), so output is stable.
pub struct Table {
    pub command: String,
    pub rows: Vec<Value>,
}

impl Table {
    pub fn new(command: &str) -> Self {
        Table {
            command: command.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Value) {
        self.rows.push(row);
    }

    /// True iff every row's `pass` field is true.
    pub fn all_pass(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.get("pass").and_then(Value::as_bool).unwrap_or(false))
    }

    pub fn write_json(&self, dir: &Path) -> Result<()> {
        let doc = serde_json::json!({
            "command": self.command,
            "rows": self.rows,
        });
        let path = dir.join(format!("{}.json", self.command));
        let mut text = serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::Structural(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let path = dir.join(format!("{}.csv", self.command));
        let file = std::fs::File::create(&path)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))?;
        let mut w = csv::Writer::from_writer(file);
        // fixed column set: sorted union of keys across rows
        let mut cols: Vec<String> = Vec::new();
        for row in &self.rows {
            if let Value::Object(map) = row {
                for k in map.keys() {
                    if !cols.contains(k) {
                        cols.push(k.clone());
                    }
                }
            }
        }
        cols.sort();
        w.write_record(&cols).map_err(|e| Error::Structural(e.to_string()))?;
        for row in &self.rows {
            let cells: Vec<String> = cols
                .iter()
                .map(|c| match row.get(c) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                })
                .collect();
            w.write_record(&cells).map_err(|e| Error::Structural(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Structural(e.to_string()))?;
        Ok(())
    }
}

/// Appends run timing to the metadata file (the only file allowed to
/// differ between identical reruns).
pub fn write_metadata(dir: &Path, entries: &[(String, u128)]) -> Result<()> {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let path = dir.join("metadata.json");
    let doc = serde_json::json!({
        "unix_timestamp": now,
        "wall_ms": entries
            .iter()
            .map(|(k, v)| serde_json::json!({"command": k, "ms": *v as u64}))
            .collect::<Vec<_>>(),
    });
    let file = std::fs::File::create(&path)
        .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))?;
    let mut file = std::io::BufWriter::new(file);
    writeln!(
        file,
        "{}",
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Structural(e.to_string()))?
    )
    .map_err(|e| Error::Domain(e.to_string()))?;
    Ok(())
}

/// Deterministic parallel map: the cells are distributed round-robin to
/// `workers` threads and the outputs collected back in input order.
pub fn par_map<T, U, F>(items: Vec<T>, workers: usize, f: F) -> Vec<Result<U>>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U> + Sync,
{
    let workers = workers.max(1);
    let items: Vec<(usize, T)> = items.into_iter().enumerate().collect();
    let mut out: Vec<Option<Result<U>>> = items.iter().map(|_| None).collect();
    let chunks: Vec<Vec<(usize, T)>> = {
        let mut chunks: Vec<Vec<(usize, T)>> = (0..workers).map(|_| Vec::new()).collect();
        for (i, item) in items {
            chunks[i % workers].push((i, item));
        }
        chunks
    };
    std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| scope.spawn(|| chunk.into_iter().map(|(i, t)| (i, f(t))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                out[i] = Some(r);
            }
        }
    });
    out.into_iter().map(|o| o.expect("missing cell")).collect()
}
