//! Result persistence. Every file is written to a temporary sibling and
//! renamed into place, so a reader never sees a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use distill_core::analysis::{Provenance, Table};

use crate::config::{canonical_text, Config};
use crate::error::CliError;

/// Hash of the configuration that determines the results. The output
/// directory is excluded so the same run written elsewhere is byte-identical.
pub fn config_hash(config: &Config) -> String {
    let mut c = config.clone().resolved();
    c.run.output_dir = None;
    hex::encode(Sha256::digest(canonical_text(&c).as_bytes()))
}

pub fn provenance(config: &Config) -> Provenance {
    Provenance {
        config_sha256: config_hash(config),
        seed: config.clone().resolved().run.seed.unwrap_or(0),
    }
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Runtime(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::Runtime(format!("writing {}: {e}", path.display())));
    }
    Ok(())
}

/// Everything one command produces, assembled before anything is written.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    pub fn table(&mut self, name: &str, table: &Table, prov: &Provenance) {
        self.files.push((format!("{name}.csv"), table.render(prov)));
    }

    pub fn raw(&mut self, file: &str, text: String) {
        self.files.push((file.to_string(), text));
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for (name, text) in &self.files {
            let path = dir.join(name);
            write_atomic(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}
