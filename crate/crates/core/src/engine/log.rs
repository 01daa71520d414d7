use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use super::{EngineError, Trial};

/// Receives one snapshot per trial state transition.
pub trait TrialSink: Send {
    fn record(&mut self, trial: &Trial) -> io::Result<()>;
    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NullSink;

impl TrialSink for NullSink {
    fn record(&mut self, _: &Trial) -> io::Result<()> {
        Ok(())
    }
}

/// Keeps records in memory; clones share the same buffer.
#[derive(Debug, Clone, Default)]
pub struct MemorySink(Arc<Mutex<Vec<Trial>>>);

impl MemorySink {
    pub fn records(&self) -> Vec<Trial> {
        self.0.lock().expect("sink lock").clone()
    }
}

impl TrialSink for MemorySink {
    fn record(&mut self, trial: &Trial) -> io::Result<()> {
        self.0.lock().expect("sink lock").push(trial.clone());
        Ok(())
    }
}

/// Appends one JSON object per line. Each record is flushed so a crash loses
/// at most the line being written.
pub struct JsonlSink {
    out: BufWriter<File>,
}

impl JsonlSink {
    pub fn append(path: &Path) -> io::Result<Self> {
        let file = File::options().create(true).append(true).open(path)?;
        Ok(Self { out: BufWriter::new(file) })
    }

    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(Self { out: BufWriter::new(File::create(path)?) })
    }
}

impl TrialSink for JsonlSink {
    fn record(&mut self, trial: &Trial) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, trial)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }

    fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Reads a JSONL trial log. Blank lines are skipped; a truncated final line
/// is dropped.
pub fn read_log(path: &Path) -> Result<Vec<Trial>, EngineError> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(t) => out.push(t),
            Err(_) if Some(i) == last => break,
            Err(e) => {
                return Err(EngineError::Replay {
                    index: i,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}
