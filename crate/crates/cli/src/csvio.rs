//! CSV emission with round-trip-exact floats: 17 significant decimal digits
//! reproduce every f64 bit pattern.

use crate::CliError;
use std::io::Write;
use std::path::Path;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        CsvWriter { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self, dir: &Path, name: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
        f.write_all(self.buf.as_bytes())
            .map_err(|e| CliError::Validation(format!("write failed for {}: {e}", path.display())))?;
        Ok(())
    }
}
