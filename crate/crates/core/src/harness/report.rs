//! Check rows, summary verdict and the CSV form used for baselines.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported value without a pass/fail contract.
    Info,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "PASS" => Ok(Verdict::Pass),
            "FAIL" => Ok(Verdict::Fail),
            "INFO" => Ok(Verdict::Info),
            other => Err(Error::Schema(format!("unknown verdict `{other}`"))),
        }
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// One check. `constants` and `detail` are `;`-separated `key=value` lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub check: String,
    pub field: String,
    pub band: String,
    pub constants: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub verdict: Verdict,
    pub detail: String,
}

impl Row {
    pub fn new(check: &str, field: &str) -> Self {
        Self {
            check: check.into(),
            field: field.into(),
            band: String::new(),
            constants: String::new(),
            min: f64::NAN,
            max: f64::NAN,
            mean: f64::NAN,
            verdict: Verdict::Info,
            detail: String::new(),
        }
    }

    pub fn band(mut self, lo: f64, hi: f64) -> Self {
        self.band = format!("[{lo};{hi}]");
        self
    }

    pub fn constants(mut self, c: impl Into<String>) -> Self {
        self.constants = c.into();
        self
    }

    /// Single-value rows put the value in all three columns.
    pub fn value(mut self, v: f64) -> Self {
        (self.min, self.max, self.mean) = (v, v, v);
        self
    }

    pub fn stats(mut self, min: f64, max: f64, mean: f64) -> Self {
        (self.min, self.max, self.mean) = (min, max, mean);
        self
    }

    pub fn verdict(mut self, pass: bool) -> Self {
        self.verdict = Verdict::from_pass(pass);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn key(&self) -> (String, String) {
        (self.check.clone(), self.field.clone())
    }
}

/// Run metadata written as `#` lines ahead of the CSV header.
#[derive(Clone, Debug, PartialEq)]
pub struct RunInfo {
    pub manifest: String,
    pub seed: u64,
    pub grid: String,
    pub h: f64,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub info: RunInfo,
    pub rows: Vec<Row>,
}

pub const CSV_HEADER: &str = "check,field,band,constants,min,max,mean,verdict,detail";

/// 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_num(s: &str) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Schema(format!("`{s}` is not a number"))),
    }
}

fn clean(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

impl Report {
    pub fn new(info: RunInfo) -> Self {
        Self { info, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// PASS iff every non-informational row passes.
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    pub fn to_csv(&self) -> String {
        let i = &self.info;
        let mut s = String::new();
        let _ = writeln!(s, "# manifest={}", clean(&i.manifest));
        let _ = writeln!(s, "# seed={}", i.seed);
        let _ = writeln!(s, "# grid={}", clean(&i.grid));
        let _ = writeln!(s, "# h={}", fmt_num(i.h));
        let _ = writeln!(s, "# version={}", i.version);
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                clean(&r.check),
                clean(&r.field),
                clean(&r.band),
                clean(&r.constants),
                fmt_num(r.min),
                fmt_num(r.max),
                fmt_num(r.mean),
                r.verdict.as_str(),
                clean(&r.detail)
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut lines = text.lines().peekable();
        while let Some(l) = lines.peek() {
            let Some(rest) = l.strip_prefix("# ") else { break };
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
            lines.next();
        }
        let get = |k: &str| meta.get(k).cloned().ok_or_else(|| Error::Schema(format!("report lacks `# {k}=`")));
        let info = RunInfo {
            manifest: get("manifest")?,
            seed: get("seed")?.parse().map_err(|_| Error::Schema("seed is not an integer".into()))?,
            grid: get("grid")?,
            h: parse_num(&get("h")?)?,
            version: get("version")?,
        };
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            Some(h) => return Err(Error::Schema(format!("unexpected header `{h}`"))),
            None => return Err(Error::Schema("report has no header".into())),
        }
        let mut rows = Vec::new();
        for (n, l) in lines.enumerate() {
            if l.is_empty() {
                continue;
            }
            let c: Vec<&str> = l.split(',').collect();
            if c.len() != 9 {
                return Err(Error::Schema(format!("row {} has {} columns, expected 9", n + 1, c.len())));
            }
            rows.push(Row {
                check: c[0].into(),
                field: c[1].into(),
                band: c[2].into(),
                constants: c[3].into(),
                min: parse_num(c[4])?,
                max: parse_num(c[5])?,
                mean: parse_num(c[6])?,
                verdict: Verdict::parse(c[7])?,
                detail: c[8].into(),
            });
        }
        Ok(Self { info, rows })
    }

    /// Human-readable summary, one line per row plus the verdict.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = writeln!(s, "{:4} {:<28} max={}", r.verdict.as_str(), r.check, fmt_num(r.max));
        }
        let _ = writeln!(s, "SUMMARY {} ({} rows, {} failed)", if self.pass() { "PASS" } else { "FAIL" }, self.rows.len(), self.failures().count());
        s
    }
}
