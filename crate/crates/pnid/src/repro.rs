//! Reproducibility block written next to every output: the resolved
//! configuration (itself a valid `--config` file) preceded by comment lines
//! giving the command line, versions and input hashes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::Result;
use crate::export;

pub struct ReproBlock<'a> {
    pub command: &'a [String],
    pub config: &'a RunConfig,
    pub inputs: Vec<(String, String)>,
    pub worker_threads: usize,
}

impl ReproBlock<'_> {
    pub fn render(&self) -> String {
        let mut out = String::from("# pnid reproducibility block\n");
        let _ = writeln!(out, "# command: {}", self.command.join(" "));
        let _ = writeln!(out, "# pnid {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# worker threads: {} (outputs do not depend on this)", self.worker_threads);
        for (k, v) in &self.inputs {
            let _ = writeln!(out, "# input {k}: {v}");
        }
        out.push_str("# re-run: the same command with `--config <this file>`\n\n");
        out.push_str(&self.config.to_toml());
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        export::write(path, &self.render())
    }
}

/// Where the block goes: `<dir>/repro.toml` for directory outputs,
/// `<file>.repro.toml` for single-file outputs.
pub fn block_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("repro.toml")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".repro.toml");
        PathBuf::from(s)
    }
}
