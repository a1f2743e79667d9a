use std::path::{Path, PathBuf};

use serde::Serialize;

use super::analysis::Check;
use super::config::RunConfig;
use crate::error::{Error, Result};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "TACTILE_HAND_OUT";

pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

/// Timestamped directory holding everything one run produced.
#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
    started: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    seed: u64,
    profile: String,
    started: &'a str,
    version: &'a str,
    passed: bool,
    checks: &'a [Check],
    config: &'a RunConfig,
}

impl RunDir {
    pub fn create(root: &Path, experiment: &str) -> Result<Self> {
        let now = chrono::Local::now();
        let stamp = now.format("%Y%m%d-%H%M%S").to_string();
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        for n in 0.. {
            let name = if n == 0 {
                format!("{experiment}-{stamp}")
            } else {
                format!("{experiment}-{stamp}-{n}")
            };
            let path = root.join(name);
            match std::fs::create_dir(&path) {
                Ok(()) => {
                    return Ok(Self {
                        path,
                        started: now.to_rfc3339(),
                    })
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(Error::io(&path, e)),
            }
        }
        unreachable!()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.file(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// Resolved config as TOML plus a manifest with seed, checks and config.
    pub fn finish(&self, experiment: &str, cfg: &RunConfig, checks: &[Check]) -> Result<()> {
        self.write_text("config.toml", &cfg.to_toml())?;
        self.write_json(
            "manifest.json",
            &Manifest {
                experiment,
                seed: cfg.seed,
                profile: cfg.profile.to_string(),
                started: &self.started,
                version: env!("CARGO_PKG_VERSION"),
                passed: checks.iter().all(|c| c.passed),
                checks,
                config: cfg,
            },
        )?;
        Ok(())
    }
}
