//! Plain-text field files.
//!
//! ```text
//! # accal-field
//! dim 2
//! shape 65 65
//! lo 0 0
//! hi 1 1
//! h 0.015625
//! name u
//! provenance analytic
//! values
//! -9.9999999999999989e-01
//! ...
//! ```
//!
//! Values are written with 17 significant digits so a read gives back the
//! same bits.

use std::fmt::Write as _;
use std::path::Path;

use super::{Grid, Provenance, ScalarField};
use crate::error::{Error, Result};

const MAGIC: &str = "# accal-field";

pub fn to_string(u: &ScalarField) -> String {
    let g = u.grid();
    let join = |v: Vec<String>| v.join(" ");
    let mut s = String::with_capacity(32 * g.len() + 256);
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "dim {}", g.dim());
    let _ = writeln!(s, "shape {}", join(g.shape().iter().map(|n| n.to_string()).collect()));
    let _ = writeln!(s, "lo {}", join(g.lo().iter().map(|v| format!("{v:?}")).collect()));
    let _ = writeln!(s, "hi {}", join((0..g.dim()).map(|a| format!("{:?}", g.hi(a))).collect()));
    let _ = writeln!(s, "h {:?}", g.h());
    let _ = writeln!(s, "name {}", u.name);
    let _ = writeln!(s, "provenance {}", u.provenance.as_str());
    for n in &u.notes {
        let _ = writeln!(s, "note {n}");
    }
    s.push_str("values\n");
    for v in u.values() {
        let _ = writeln!(s, "{v:.16e}");
    }
    s
}

pub fn from_str(text: &str) -> Result<ScalarField> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(Error::Parse("missing field header".into()));
    }
    let mut dim = None;
    let mut shape = Vec::new();
    let mut lo = Vec::new();
    let mut h = None;
    let mut name = String::new();
    let mut prov = Provenance::Loaded;
    let mut notes = Vec::new();
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
    for line in lines.by_ref() {
        let line = line.trim();
        if line == "values" {
            break;
        }
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "dim" => dim = Some(rest.trim().parse::<usize>().map_err(|e| Error::Parse(format!("dim: {e}")))?),
            "shape" => {
                shape = rest
                    .split_whitespace()
                    .map(|s| s.parse::<usize>().map_err(|e| Error::Parse(format!("shape: {e}"))))
                    .collect::<Result<_>>()?
            }
            "lo" => lo = rest.split_whitespace().map(num).collect::<Result<_>>()?,
            "hi" => {}
            "h" => h = Some(num(rest.trim())?),
            "name" => name = rest.to_string(),
            "provenance" => prov = Provenance::parse(rest.trim())?,
            "note" => notes.push(rest.to_string()),
            "" => {}
            other => return Err(Error::Parse(format!("unknown header key `{other}`"))),
        }
    }
    let dim = dim.ok_or_else(|| Error::Parse("missing dim".into()))?;
    let h = h.ok_or_else(|| Error::Parse("missing h".into()))?;
    let grid = Grid::new(dim, &shape, &lo, h)?;
    let values = lines
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(num)
        .collect::<Result<Vec<f64>>>()?;
    let mut f = ScalarField::new(grid, values, name, prov)?;
    f.notes = notes;
    Ok(f)
}

pub fn write(u: &ScalarField, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(u))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<ScalarField> {
    from_str(&std::fs::read_to_string(path)?)
}
