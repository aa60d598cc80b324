//! CSV tables with a `#` metadata preamble.

use std::io::Write;

use anyhow::Result;

use crate::config::RunConfig;

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    // adding 0.0 maps -0.0 to 0.0
    format!("{:.16e}", x + 0.0)
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn write_metadata(w: &mut dyn Write, cfg: &RunConfig) -> Result<()> {
    writeln!(w, "# adelim {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# command: {}", cfg.command)?;
    writeln!(w, "# seed: {}", cfg.seed)?;
    writeln!(w, "# config:")?;
    for line in cfg.to_toml()?.lines() {
        if line.is_empty() {
            writeln!(w, "#")?;
        } else {
            writeln!(w, "#   {line}")?;
        }
    }
    Ok(())
}

pub fn write_table(w: &mut dyn Write, t: &Table) -> Result<()> {
    writeln!(w, "{}", t.header.join(","))?;
    for r in &t.rows {
        writeln!(w, "{}", r.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn metadata_lines_are_comments() {
        let mut cfg = RunConfig::default();
        cfg.command = "wpg".into();
        let mut buf = Vec::new();
        write_metadata(&mut buf, &cfg).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().all(|l| l.starts_with('#')));
        assert!(text.contains("# command: wpg"));
    }
}
