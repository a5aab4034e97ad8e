//! Atomic result emission: every file is written to a temporary sibling and
//! renamed into place, so interrupted runs never leave truncated artifacts.

use homog_core::CellRecord;
use std::io::Write;
use std::path::Path;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut body = serde_json::to_string_pretty(value).expect("report serialization");
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

/// Plot-ready trace shared by the density sequence and the regime sweeps.
pub fn trace_csv(records: &[CellRecord], use_eps: bool) -> String {
    let mut out = String::from("t_or_eps,g_hat_or_total,bulk,surface,crack_measure,n_bad\n");
    for r in records {
        let key = if use_eps {
            r.eps.to_string()
        } else {
            r.t.to_string()
        };
        out.push_str(&format!(
            "{key},{},{},{},{},{}\n",
            r.g_hat, r.bulk, r.surface, r.crack_measure, r.n_bad
        ));
    }
    out
}

pub fn residual_csv(history: &[f64]) -> String {
    let mut out = String::from("iter,relative_residual\n");
    for (i, r) in history.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, r));
    }
    out
}
