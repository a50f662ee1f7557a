use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::command::CommandKind;
use super::execute::{CommandTrace, Outcome};
use crate::{Error, Result};

/// Counts and rates for one group of commands. Success and abnormal rates
/// are `None` when nothing was executed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub received: usize,
    pub executed: usize,
    pub success: usize,
    pub abnormal: usize,
    pub response_rate: f64,
    pub success_rate: Option<f64>,
    pub abnormal_rate: Option<f64>,
}

impl Rates {
    fn add(&mut self, t: &CommandTrace) {
        self.received += 1;
        if t.gated {
            self.executed += 1;
        }
        match t.outcome {
            Outcome::Success => self.success += 1,
            Outcome::Abnormal => self.abnormal += 1,
            _ => {}
        }
    }

    fn finish(mut self) -> Self {
        self.response_rate = self.executed as f64 / self.received as f64;
        let e = self.executed as f64;
        self.success_rate = (self.executed > 0).then(|| self.success as f64 / e);
        self.abnormal_rate = (self.executed > 0).then(|| self.abnormal as f64 / e);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandMetrics {
    pub overall: Rates,
    /// Only kinds that occur.
    pub per_kind: BTreeMap<CommandKind, Rates>,
}

pub fn command_metrics(traces: &[CommandTrace]) -> Result<CommandMetrics> {
    if traces.is_empty() {
        return Err(Error::InvalidInput("no command traces".into()));
    }
    let mut overall = Rates::default();
    let mut per_kind: BTreeMap<CommandKind, Rates> = BTreeMap::new();
    for t in traces {
        overall.add(t);
        per_kind.entry(t.command.kind).or_default().add(t);
    }
    Ok(CommandMetrics {
        overall: overall.finish(),
        per_kind: per_kind.into_iter().map(|(k, r)| (k, r.finish())).collect(),
    })
}

fn fmt_rate(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"))
}

/// CSV with one row per kind plus an `overall` row.
pub fn metrics_csv(m: &CommandMetrics) -> String {
    let mut s = String::from("scope,received,executed,success,abnormal,response_rate,success_rate,abnormal_rate\n");
    let mut row = |name: &str, r: &Rates| {
        s.push_str(&format!(
            "{name},{},{},{},{},{:.6},{},{}\n",
            r.received,
            r.executed,
            r.success,
            r.abnormal,
            r.response_rate,
            fmt_rate(r.success_rate),
            fmt_rate(r.abnormal_rate)
        ));
    };
    for (k, r) in &m.per_kind {
        row(k.name(), r);
    }
    row("overall", &m.overall);
    s
}

pub fn write_metrics_csv(path: &Path, m: &CommandMetrics) -> Result<()> {
    std::fs::write(path, metrics_csv(m))?;
    Ok(())
}

pub fn write_traces(path: &Path, traces: &[CommandTrace]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for t in traces {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_traces(path: &Path) -> Result<Vec<CommandTrace>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), k + 1)))?);
    }
    Ok(out)
}
