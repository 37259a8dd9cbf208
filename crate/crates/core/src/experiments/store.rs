//! Append-only JSON-lines persistence with one writer thread.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Sender};
use std::thread::JoinHandle;

use super::replica::ReplicaRecord;
use crate::error::{Error, Result};

/// Reads a records file. A final line cut off mid-write is dropped and
/// truncated away so appending can resume cleanly.
pub fn load_records(path: &Path) -> Result<Vec<ReplicaRecord>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut good_len = 0u64;
    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        let read = reader
            .read_line(&mut line)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let complete = line.ends_with('\n');
        if line.trim().is_empty() {
            good_len += read as u64;
            continue;
        }
        // An unterminated last line is an interrupted write; the replica is
        // simply recomputed.
        if !complete {
            break;
        }
        let r =
            serde_json::from_str::<ReplicaRecord>(line.trim_end()).map_err(|e| Error::Config {
                field: format!("{} line {line_no}", path.display()),
                message: e.to_string(),
            })?;
        records.push(r);
        good_len += read as u64;
    }
    let len = std::fs::metadata(path)
        .map_err(|e| Error::io(format!("stat {}", path.display()), e))?
        .len();
    if len > good_len {
        let f = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        f.set_len(good_len)
            .map_err(|e| Error::io(format!("truncating {}", path.display()), e))?;
    }
    Ok(records)
}

pub fn write_records(path: &Path, records: &[ReplicaRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Owns the records file; replicas send finished records over a channel.
pub struct RecordWriter {
    tx: Option<Sender<ReplicaRecord>>,
    handle: Option<JoinHandle<Result<()>>>,
}

impl RecordWriter {
    pub fn spawn(path: PathBuf) -> Result<Self> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let (tx, rx) = channel::<ReplicaRecord>();
        let handle = std::thread::spawn(move || -> Result<()> {
            for rec in rx {
                let mut line = serde_json::to_string(&rec)?;
                line.push('\n');
                file.write_all(line.as_bytes())
                    .map_err(|e| Error::io(format!("appending to {}", path.display()), e))?;
            }
            file.flush()
                .map_err(|e| Error::io(format!("flushing {}", path.display()), e))
        });
        Ok(RecordWriter {
            tx: Some(tx),
            handle: Some(handle),
        })
    }

    pub fn sender(&self) -> Sender<ReplicaRecord> {
        self.tx.clone().expect("writer is open")
    }

    /// Closes the channel and waits for every record to hit the file.
    pub fn finish(mut self) -> Result<()> {
        self.tx.take();
        match self.handle.take().map(JoinHandle::join) {
            Some(Ok(r)) => r,
            Some(Err(_)) => Err(Error::invalid("record writer thread panicked")),
            None => Ok(()),
        }
    }
}

impl Drop for RecordWriter {
    fn drop(&mut self) {
        self.tx.take();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
