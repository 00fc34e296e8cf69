//! Experiment manifests: flat TOML with one level of sections.
//!
//! ```toml
//! name = "example"
//! seed = 7
//!
//! [potential]
//! name = "canonical"            # or coefficients = [c0, c1, ...]
//!
//! [grid]
//! dim = 2
//! lo = -2.5
//! hi = 2.5
//! h = 0.0078125
//!
//! [field]
//! source = "planar"             # planar | solved | file
//! angle_deg = 20.0              # or direction = [a1, a2]
//! offset = 0.1
//!
//! [params]
//! delta = 0.1
//! theta0 = "floor:0.9"          # or a number; eq311/remark32 only
//! # c1 = 0.3 or c2 = 0.5 for eq414/remark42
//!
//! [diffeo]
//! kind = "eq311"
//!
//! [perimeter]
//! weights = ["exp_theta", "grad_w", "unit"]
//! ```
//!
//! Every key is documented on [`Manifest::parse`].

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::diffeo::{ADescriptor, DiffeoKind, InverseH};
use crate::error::{Error, Result};
use crate::field::Grid;
use crate::model1d::DoubleWellPotential;
use crate::perimeter::{CompetitorSpec, WeightKind};
use crate::pfunction::QMode;
use crate::solver::Boundary;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldSource {
    Planar { direction: Vec<f64>, offset: f64 },
    Solved { boundary: Boundary, tolerance: Option<f64>, max_iterations: Option<usize> },
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Theta0Policy {
    Value(f64),
    /// Fraction of the measured gradient floor on `{|u| ≤ 1 − δ}`.
    FloorFraction(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub h: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::cube(self.dim, self.lo, self.hi, self.h)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub delta: f64,
    pub theta0: Option<Theta0Policy>,
    pub q_mode: QMode,
    pub grad_floor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffeoSpec {
    pub kind: DiffeoKind,
    pub step: f64,
    pub t_max: f64,
    pub inv_h: Option<InverseH>,
    pub a: Option<ADescriptor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallSpec {
    /// `None`: the facet of `{w = 0}` nearest to the domain centre.
    pub center: Option<Vec<f64>>,
    /// Radius as a fraction of `r_max = d₀/2`.
    pub guard_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub equipartition: f64,
    pub modica: f64,
    pub qsq: f64,
    pub identity: f64,
    /// Sign noise band is `sign_factor · h`.
    pub sign_factor: f64,
    /// Gap slack is `gap_factor · h · 𝒫̃(E)`.
    pub gap_factor: f64,
    /// Competitors with excess above `excess_factor · h` need a positive gap.
    pub excess_factor: f64,
    pub divergence: f64,
    pub homogeneity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            equipartition: 1e-8,
            modica: 1e-3,
            qsq: 1e-4,
            identity: 1e-2,
            sign_factor: 10.0,
            gap_factor: 10.0,
            excess_factor: 20.0,
            divergence: 1e-2,
            homogeneity: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    pub potential: DoubleWellPotential,
    pub profile_t_max: f64,
    pub profile_step: f64,
    /// Absent only for file fields, whose grid comes from the file.
    pub grid: Option<GridSpec>,
    pub field: FieldSource,
    pub params: Params,
    pub diffeo: DiffeoSpec,
    pub weights: Vec<WeightKind>,
    pub ball: BallSpec,
    pub competitors: CompetitorSpec,
    pub tolerances: Tolerances,
    table: Table,
}

const TOP_KEYS: &[&str] = &[
    "name", "seed", "potential", "profile", "grid", "field", "params", "diffeo", "perimeter", "competitors",
    "tolerances",
];

fn manifest_err(key: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Manifest { key: key.into(), msg: msg.into() }
}

/// One `[section]` with key tracking.
struct Section<'a> {
    name: &'a str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn of(root: &'a Table, name: &'a str) -> Result<Self> {
        match root.get(name) {
            None => Ok(Self { name, table: None }),
            Some(Value::Table(t)) => Ok(Self { name, table: Some(t) }),
            Some(_) => Err(manifest_err(name, "must be a table")),
        }
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        if let Some(t) = self.table {
            for (k, v) in t {
                if !keys.contains(&k.as_str()) {
                    return Err(manifest_err(self.key(k), "unknown key"));
                }
                if matches!(v, Value::Table(_)) {
                    return Err(manifest_err(self.key(k), "nested tables are not allowed"));
                }
            }
        }
        Ok(())
    }

    fn has(&self, k: &str) -> bool {
        self.table.is_some_and(|t| t.contains_key(k))
    }

    fn raw(&self, k: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(k))
    }

    fn f64(&self, k: &str) -> Result<Option<f64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(manifest_err(self.key(k), "expected a number")),
        }
    }

    fn f64_or(&self, k: &str, default: f64) -> Result<f64> {
        Ok(self.f64(k)?.unwrap_or(default))
    }

    fn positive(&self, k: &str, default: f64) -> Result<f64> {
        let v = self.f64_or(k, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(manifest_err(self.key(k), format!("must be positive and finite, got {v}")));
        }
        Ok(v)
    }

    fn u64(&self, k: &str) -> Result<Option<u64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Integer(v)) if *v >= 0 => Ok(Some(*v as u64)),
            Some(_) => Err(manifest_err(self.key(k), "expected a non-negative integer")),
        }
    }

    fn str(&self, k: &str) -> Result<Option<&'a str>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(manifest_err(self.key(k), "expected a string")),
        }
    }

    fn bool(&self, k: &str, default: bool) -> Result<bool> {
        match self.raw(k) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(manifest_err(self.key(k), "expected true or false")),
        }
    }

    fn f64_list(&self, k: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(x) => Ok(*x as f64),
                    _ => Err(manifest_err(self.key(k), "expected an array of numbers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(manifest_err(self.key(k), "expected an array of numbers")),
        }
    }

    fn str_list(&self, k: &str) -> Result<Option<Vec<&'a str>>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_str().ok_or_else(|| manifest_err(self.key(k), "expected an array of strings")))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(manifest_err(self.key(k), "expected an array of strings")),
        }
    }

    /// Wraps a module error with this key.
    fn wrap<T>(&self, k: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| manifest_err(self.key(k), e.to_string()))
    }
}

impl Manifest {
    /// Parses and validates a manifest.
    ///
    /// Top level: `name` (string), `seed` (integer, default 1).
    ///
    /// * `[potential]` `name = "canonical"` or `coefficients = [..]` (ascending powers)
    /// * `[profile]` `t_max` (12), `step` (1e-3)
    /// * `[grid]` `dim` (2 or 3), `lo`, `hi`, `h`; optional for file fields
    /// * `[field]` `source`; planar: `direction` or `angle_deg` (2D), `offset`;
    ///   solved: `boundary` (`planar:a1,..,an,offset` | `constant:v` | `file:PATH`),
    ///   `tolerance`, `max_iterations`; file: `path`
    /// * `[params]` `delta` in (0, 1), `c1` or `c2` in (0, 1), `theta0` (number or
    ///   `"floor:f"`), `q_mode` (`"qsq"` | `"q"`), `grad_floor` (1e-8)
    /// * `[diffeo]` `kind` (eq311 | eq414 | remark32 | remark42), `step` (1e-3),
    ///   `t_max` (1e300), `inv_h` (remark32, default `"const:1"`), `a` (remark42)
    /// * `[perimeter]` `weights` (array of exp_theta, power_alpha, grad_w, unit),
    ///   `ball_center` (array), `guard_fraction` in (0, 1) (0.9)
    /// * `[competitors]` `count` (100), `seed` (top-level seed), `amplitude` ([0.02, 0.3]),
    ///   `include_zero`, `include_chord` (true)
    /// * `[tolerances]` `equipartition`, `modica`, `qsq`, `identity`, `sign_factor`,
    ///   `gap_factor`, `excess_factor`, `divergence`, `homogeneity`
    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            let msg = e.message().to_string();
            Error::Manifest { key: "<document>".into(), msg }
        })?;
        Self::from_table(table)
    }

    /// Reads a manifest; relative file paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut m = Self::parse(&text)?;
        if let FieldSource::File(p) = &mut m.field {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(m)
    }

    pub fn from_table(table: Table) -> Result<Self> {
        for (k, v) in &table {
            if !TOP_KEYS.contains(&k.as_str()) {
                return Err(manifest_err(k.clone(), "unknown key"));
            }
            if matches!(k.as_str(), "name" | "seed") && matches!(v, Value::Table(_)) {
                return Err(manifest_err(k.clone(), "must be a scalar"));
            }
        }
        let name = match table.get("name") {
            None => "unnamed".to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(manifest_err("name", "expected a string")),
        };
        let seed = match table.get("seed") {
            None => 1,
            Some(Value::Integer(v)) if *v >= 0 => *v as u64,
            Some(_) => return Err(manifest_err("seed", "expected a non-negative integer")),
        };

        let pot_s = Section::of(&table, "potential")?;
        pot_s.allow(&["name", "coefficients"])?;
        let potential = match (pot_s.str("name")?, pot_s.f64_list("coefficients")?) {
            (Some(_), Some(_)) => return Err(manifest_err("potential", "give either name or coefficients")),
            (Some(n), None) => pot_s.wrap("name", DoubleWellPotential::by_name(n))?,
            (None, Some(c)) => DoubleWellPotential::polynomial(c),
            (None, None) => DoubleWellPotential::canonical(),
        };

        let prof = Section::of(&table, "profile")?;
        prof.allow(&["t_max", "step"])?;
        let profile_t_max = prof.positive("t_max", 12.0)?;
        let profile_step = prof.positive("step", 1e-3)?;

        let field_s = Section::of(&table, "field")?;
        field_s.allow(&["source", "direction", "angle_deg", "offset", "boundary", "tolerance", "max_iterations", "path"])?;
        let source = field_s.str("source")?.ok_or_else(|| manifest_err("field.source", "missing"))?;
        let only = |allowed: &[&str]| -> Result<()> {
            for k in ["direction", "angle_deg", "offset", "boundary", "tolerance", "max_iterations", "path"] {
                if field_s.has(k) && !allowed.contains(&k) {
                    return Err(manifest_err(field_s.key(k), format!("not used by the `{source}` field source")));
                }
            }
            Ok(())
        };

        let grid_s = Section::of(&table, "grid")?;
        grid_s.allow(&["dim", "lo", "hi", "h"])?;
        let grid = if grid_s.table.is_some() {
            let dim = grid_s.u64("dim")?.unwrap_or(2) as usize;
            if !(dim == 2 || dim == 3) {
                return Err(manifest_err("grid.dim", format!("must be 2 or 3, got {dim}")));
            }
            let lo = grid_s.f64("lo")?.ok_or_else(|| manifest_err("grid.lo", "missing"))?;
            let hi = grid_s.f64("hi")?.ok_or_else(|| manifest_err("grid.hi", "missing"))?;
            let h = grid_s.f64("h")?.ok_or_else(|| manifest_err("grid.h", "missing"))?;
            let spec = GridSpec { dim, lo, hi, h };
            grid_s.wrap("h", spec.build())?;
            Some(spec)
        } else {
            None
        };

        let field = match source {
            "planar" => {
                only(&["direction", "angle_deg", "offset"])?;
                let dim = grid.as_ref().ok_or_else(|| manifest_err("grid", "missing"))?.dim;
                let direction = match (field_s.f64_list("direction")?, field_s.f64("angle_deg")?) {
                    (Some(_), Some(_)) => {
                        return Err(manifest_err("field.angle_deg", "give either direction or angle_deg"))
                    }
                    (Some(d), None) => d,
                    (None, Some(a)) if dim == 2 => {
                        let r = a.to_radians();
                        vec![r.cos(), r.sin()]
                    }
                    (None, Some(_)) => return Err(manifest_err("field.angle_deg", "only available in 2D")),
                    (None, None) => return Err(manifest_err("field.direction", "missing")),
                };
                if direction.len() != dim {
                    return Err(manifest_err("field.direction", format!("needs {dim} components")));
                }
                let n = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (n - 1.0).abs() > 1e-12 {
                    return Err(manifest_err("field.direction", format!("must be a unit vector, |a| = {n}")));
                }
                FieldSource::Planar { direction, offset: field_s.f64_or("offset", 0.0)? }
            }
            "solved" => {
                only(&["boundary", "tolerance", "max_iterations"])?;
                if grid.is_none() {
                    return Err(manifest_err("grid", "missing"));
                }
                let b = field_s.str("boundary")?.ok_or_else(|| manifest_err("field.boundary", "missing"))?;
                let boundary = field_s.wrap("boundary", Boundary::parse(b))?;
                let tolerance = field_s.f64("tolerance")?;
                if tolerance.is_some_and(|t| !(t > 0.0)) {
                    return Err(manifest_err("field.tolerance", "must be positive"));
                }
                let max_iterations = field_s.u64("max_iterations")?.map(|v| v as usize);
                FieldSource::Solved { boundary, tolerance, max_iterations }
            }
            "file" => {
                only(&["path"])?;
                let p = field_s.str("path")?.ok_or_else(|| manifest_err("field.path", "missing"))?;
                FieldSource::File(PathBuf::from(p))
            }
            other => return Err(manifest_err("field.source", format!("unknown source `{other}`"))),
        };

        let ps = Section::of(&table, "params")?;
        ps.allow(&["c1", "c2", "delta", "theta0", "q_mode", "grad_floor"])?;
        let delta = ps.f64("delta")?.ok_or_else(|| manifest_err("params.delta", "missing"))?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(manifest_err(
                "params.delta",
                format!("must lie in (0, 1); the band |u| <= 1 - delta is undefined for delta = {delta}"),
            ));
        }
        let unit_open = |k: &str| -> Result<Option<f64>> {
            match ps.f64(k)? {
                Some(v) if !(v > 0.0 && v < 1.0) => Err(manifest_err(ps.key(k), format!("must lie in (0, 1), got {v}"))),
                v => Ok(v),
            }
        };
        let (c1, c2) = (unit_open("c1")?, unit_open("c2")?);
        if c1.is_some() && c2.is_some() {
            return Err(manifest_err("params.c2", "give either c1 or c2"));
        }
        let theta0 = match ps.raw("theta0") {
            None => None,
            Some(Value::String(s)) => {
                let f = s
                    .strip_prefix("floor:")
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| manifest_err("params.theta0", format!("expected a number or `floor:f`, got `{s}`")))?;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(manifest_err("params.theta0", format!("floor fraction must lie in (0, 1], got {f}")));
                }
                Some(Theta0Policy::FloorFraction(f))
            }
            Some(_) => {
                let v = ps.f64("theta0")?.expect("present");
                if !(v > 0.0 && v < std::f64::consts::FRAC_1_SQRT_2) {
                    return Err(manifest_err("params.theta0", format!("must lie in (0, 1/sqrt 2), got {v}")));
                }
                Some(Theta0Policy::Value(v))
            }
        };
        let q_mode = match ps.str("q_mode")? {
            None => QMode::Qsq,
            Some(s) => ps.wrap("q_mode", QMode::parse(s))?,
        };
        let grad_floor = ps.positive("grad_floor", crate::field::DEFAULT_GRAD_FLOOR)?;

        let ds = Section::of(&table, "diffeo")?;
        ds.allow(&["kind", "step", "t_max", "inv_h", "a"])?;
        let kind_s = ds.str("kind")?.ok_or_else(|| manifest_err("diffeo.kind", "missing"))?;
        let kind = ds.wrap("kind", DiffeoKind::parse(kind_s))?;
        let inv_h = ds.str("inv_h")?.map(|s| ds.wrap("inv_h", InverseH::parse(s))).transpose()?;
        let a = ds.str("a")?.map(|s| ds.wrap("a", ADescriptor::parse(s))).transpose()?;
        if inv_h.is_some() && kind != DiffeoKind::Remark32 {
            return Err(manifest_err("diffeo.inv_h", "only used by remark32"));
        }
        if a.is_some() && kind != DiffeoKind::Remark42 {
            return Err(manifest_err("diffeo.a", "only used by remark42"));
        }
        match kind {
            DiffeoKind::Eq311 | DiffeoKind::Remark32 => {
                if theta0.is_none() {
                    return Err(manifest_err("params.theta0", format!("required by diffeo kind {}", kind.as_str())));
                }
            }
            DiffeoKind::Eq414 => {
                if c1.is_none() && c2.is_none() {
                    return Err(manifest_err("params.c2", "eq414 needs c1 or c2"));
                }
            }
            DiffeoKind::Remark42 => {
                if a.is_none() {
                    return Err(manifest_err("diffeo.a", "required by remark42"));
                }
            }
        }
        let diffeo = DiffeoSpec {
            kind,
            step: ds.positive("step", 1e-3)?,
            t_max: ds.positive("t_max", 1e300)?,
            inv_h: if kind == DiffeoKind::Remark32 { Some(inv_h.unwrap_or(InverseH::Constant(1.0))) } else { None },
            a,
        };

        let pers = Section::of(&table, "perimeter")?;
        pers.allow(&["weights", "ball_center", "guard_fraction"])?;
        let weights = match pers.str_list("weights")? {
            None => vec![WeightKind::GradW, WeightKind::Unit],
            Some(list) => {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                for s in list {
                    let k = pers.wrap("weights", WeightKind::parse(s))?;
                    if !seen.insert(s) {
                        return Err(manifest_err("perimeter.weights", format!("`{s}` listed twice")));
                    }
                    out.push(k);
                }
                out
            }
        };
        for k in &weights {
            match k {
                WeightKind::ExpTheta if theta0.is_none() => {
                    return Err(manifest_err("perimeter.weights", "exp_theta needs params.theta0"))
                }
                WeightKind::PowerAlpha if c1.is_none() && c2.is_none() => {
                    return Err(manifest_err("perimeter.weights", "power_alpha needs params.c1 or params.c2"))
                }
                _ => {}
            }
        }
        let center = pers.f64_list("ball_center")?;
        if let (Some(c), Some(g)) = (&center, &grid) {
            if c.len() != g.dim {
                return Err(manifest_err("perimeter.ball_center", format!("needs {} components", g.dim)));
            }
        }
        let guard_fraction = pers.f64_or("guard_fraction", 0.9)?;
        if !(guard_fraction > 0.0 && guard_fraction < 1.0) {
            return Err(manifest_err("perimeter.guard_fraction", format!("must lie in (0, 1), got {guard_fraction}")));
        }

        let cs = Section::of(&table, "competitors")?;
        cs.allow(&["count", "seed", "amplitude", "include_zero", "include_chord"])?;
        let defaults = CompetitorSpec::default();
        let amplitude = match cs.f64_list("amplitude")? {
            None => defaults.amplitude,
            Some(v) if v.len() == 2 && v[0] > 0.0 && v[0] <= v[1] && v[1] < 0.9 => (v[0], v[1]),
            Some(v) => {
                return Err(manifest_err("competitors.amplitude", format!("expected [lo, hi] with 0 < lo <= hi < 0.9, got {v:?}")))
            }
        };
        let competitors = CompetitorSpec {
            count: cs.u64("count")?.map_or(defaults.count, |v| v as usize),
            seed: cs.u64("seed")?.unwrap_or(seed),
            amplitude,
            include_zero: cs.bool("include_zero", defaults.include_zero)?,
            include_chord: cs.bool("include_chord", defaults.include_chord)?,
        };

        let ts = Section::of(&table, "tolerances")?;
        ts.allow(&[
            "equipartition", "modica", "qsq", "identity", "sign_factor", "gap_factor", "excess_factor", "divergence",
            "homogeneity",
        ])?;
        let d = Tolerances::default();
        let tolerances = Tolerances {
            equipartition: ts.positive("equipartition", d.equipartition)?,
            modica: ts.positive("modica", d.modica)?,
            qsq: ts.positive("qsq", d.qsq)?,
            identity: ts.positive("identity", d.identity)?,
            sign_factor: ts.positive("sign_factor", d.sign_factor)?,
            gap_factor: ts.positive("gap_factor", d.gap_factor)?,
            excess_factor: ts.positive("excess_factor", d.excess_factor)?,
            divergence: ts.positive("divergence", d.divergence)?,
            homogeneity: ts.positive("homogeneity", d.homogeneity)?,
        };

        Ok(Self {
            name,
            seed,
            potential,
            profile_t_max,
            profile_step,
            grid,
            field,
            params: Params { c1, c2, delta, theta0, q_mode, grad_floor },
            diffeo,
            weights,
            ball: BallSpec { center, guard_fraction },
            competitors,
            tolerances,
            table,
        })
    }

    /// Replaces the seed (top level and competitors) and/or the grid spacing.
    pub fn with_overrides(&self, seed: Option<u64>, h: Option<f64>) -> Result<Self> {
        let mut t = self.table.clone();
        if let Some(s) = seed {
            t.insert("seed".into(), Value::Integer(s as i64));
            if let Some(Value::Table(c)) = t.get_mut("competitors") {
                c.remove("seed");
            }
        }
        if let Some(h) = h {
            match t.get_mut("grid") {
                Some(Value::Table(g)) => {
                    g.insert("h".into(), Value::Float(h));
                }
                _ => return Err(manifest_err("grid.h", "cannot override h without a [grid] section")),
            }
        }
        let mut m = Self::from_table(t)?;
        if let (FieldSource::File(p), FieldSource::File(orig)) = (&mut m.field, &self.field) {
            *p = orig.clone();
        }
        Ok(m)
    }

    /// A planar field becomes a Dirichlet solve with the same front as
    /// boundary data; other sources are returned unchanged.
    pub fn with_solved_field(&self) -> Result<Self> {
        let FieldSource::Planar { direction, offset } = &self.field else {
            return Ok(self.clone());
        };
        let mut spec: Vec<String> = direction.iter().map(|v| format!("{v:?}")).collect();
        spec.push(format!("{offset:?}"));
        let mut t = self.table.clone();
        let mut f = Table::new();
        f.insert("source".into(), Value::String("solved".into()));
        f.insert("boundary".into(), Value::String(format!("planar:{}", spec.join(","))));
        t.insert("field".into(), Value::Table(f));
        Self::from_table(t)
    }

    /// Effective manifest as TOML, overrides included.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.table).expect("tables serialize")
    }

    /// Grid spacing if known without loading a field file.
    pub fn h(&self) -> Option<f64> {
        self.grid.as_ref().map(|g| g.h)
    }
}

const THM31: &str = include_str!("../../manifests/thm31_planar_2d.toml");
const THM41: &str = include_str!("../../manifests/thm41_planar_2d.toml");

/// Names of the manifests shipped with the crate.
pub const BUNDLED: &[&str] = &["thm31_planar_2d", "thm41_planar_2d"];

/// Text of a bundled manifest.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "thm31_planar_2d" => Some(THM31),
        "thm41_planar_2d" => Some(THM41),
        _ => None,
    }
}
