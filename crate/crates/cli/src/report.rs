//! Report assembly: human-readable paragraphs or line-delimited
//! `key=value` records.
//!
//! Reports buffer fully before printing, so a failing run emits nothing on
//! stdout. Floats render with six decimals in records mode to keep output
//! byte-reproducible.

use std::fmt::Write as _;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum ReportFormat {
    #[default]
    Records,
    Human,
}

pub fn fmt_f64(value: f64) -> String {
    format!("{value:.6}")
}

pub struct Report {
    format: ReportFormat,
    buffer: String,
}

impl Report {
    pub fn new(format: ReportFormat) -> Self {
        Self {
            format,
            buffer: String::new(),
        }
    }

    /// Emits one structured record (records mode) and skips in human mode.
    pub fn record(&mut self, kind: &str, fields: &[(&str, String)]) {
        if self.format != ReportFormat::Records {
            return;
        }
        write!(self.buffer, "record={kind}").unwrap();
        for (key, value) in fields {
            write!(self.buffer, " {key}={value}").unwrap();
        }
        self.buffer.push('\n');
    }

    /// Emits one human-readable line (human mode) and skips in records mode.
    pub fn line(&mut self, text: impl AsRef<str>) {
        if self.format != ReportFormat::Human {
            return;
        }
        self.buffer.push_str(text.as_ref());
        self.buffer.push('\n');
    }

    pub fn print(self) {
        print!("{}", self.buffer);
    }
}
