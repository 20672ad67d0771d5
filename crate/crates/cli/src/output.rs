//! Output files, each opening with a metadata header: version line first,
//! then the command, the config echo, and the seed.

use std::path::{Path, PathBuf};

use rankdesign::ingest::format_decimal;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const VERSION_LINE: &str = concat!("rankdesign ", env!("CARGO_PKG_VERSION"));

pub struct Output {
    dir: PathBuf,
    command: &'static str,
    config: Value,
    seed: Option<u64>,
    written: Vec<PathBuf>,
}

/// Rounds every non-integer number to 12 significant digits.
fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                let r: f64 = format_decimal(x).parse().unwrap_or(x);
                if let Some(num) = serde_json::Number::from_f64(r) {
                    *n = num;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

impl Output {
    pub fn new(
        dir: &Path,
        command: &'static str,
        config: &impl Serialize,
        seed: Option<u64>,
    ) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut config =
            serde_json::to_value(config).map_err(|e| CliError::Usage(e.to_string()))?;
        round_numbers(&mut config);
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            config,
            seed,
            written: Vec::new(),
        })
    }

    fn header(&self, comment: &str) -> String {
        let seed = self.seed.map_or("none".to_owned(), |s| s.to_string());
        format!(
            "{comment} {VERSION_LINE}\n{comment} command: {}\n{comment} config: {}\n{comment} seed: {seed}\n",
            self.command, self.config
        )
    }

    fn write(&mut self, name: &str, contents: String) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// `#`-commented header followed by `body` (CSV or TSV).
    pub fn text(
        &mut self,
        name: &str,
        extra: &[(&str, String)],
        body: &str,
    ) -> Result<(), CliError> {
        let mut s = self.header("#");
        for (k, v) in extra {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str(body);
        self.write(name, s)
    }

    pub fn dot(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let s = self.header("//") + body;
        self.write(name, s)
    }

    pub fn json(&mut self, name: &str, result: &impl Serialize) -> Result<(), CliError> {
        let mut result =
            serde_json::to_value(result).map_err(|e| CliError::Usage(e.to_string()))?;
        round_numbers(&mut result);
        let doc = json!({
            "version": VERSION_LINE,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "result": result,
        });
        let mut s =
            serde_json::to_string_pretty(&doc).map_err(|e| CliError::Usage(e.to_string()))?;
        s.push('\n');
        self.write(name, s)
    }

    pub fn finish(self) {
        for p in self.written {
            println!("{}", p.display());
        }
    }
}
