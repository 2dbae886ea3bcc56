//! Flat `[section]` / `key = value` run configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use wvn_core::lattice::check_wavenumber;
use wvn_core::{Boundary, ModelSpec, Potential, Wigner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Thresholds,
    EnergySet,
    CommutatorCheck,
    AnnihilationSweep,
    MourreScan,
    LapScan,
    Decay,
    HsCheck,
    DumpOperator,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Thresholds => "thresholds",
            Experiment::EnergySet => "energy-set",
            Experiment::CommutatorCheck => "commutator-check",
            Experiment::AnnihilationSweep => "annihilation-sweep",
            Experiment::MourreScan => "mourre-scan",
            Experiment::LapScan => "lap-scan",
            Experiment::Decay => "decay",
            Experiment::HsCheck => "hs-check",
            Experiment::DumpOperator => "dump-operator",
        }
    }

    fn needs_model(self) -> bool {
        self != Experiment::HsCheck
    }

    fn needs_boxes(self) -> bool {
        !matches!(self, Experiment::Thresholds | Experiment::EnergySet | Experiment::HsCheck)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = Result<T, ConfigError>;

fn err<T>(line: usize, message: impl Into<String>) -> Res<T> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Geometry {
    pub d: usize,
    pub boundary: Boundary,
    /// Box half-widths `L`; empty when the experiment needs no box.
    pub half_widths: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChoice {
    Position,
    Dilation,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MourreOperator {
    Laplacian,
    Hamiltonian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HsFunction {
    Window,
    Bracket,
    Integrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DumpTarget {
    Laplacian,
    Wigner,
    Potential,
    Hamiltonian,
    Dilation,
    WignerK,
    WignerB,
    LaplacianCommutator,
    PotentialCommutator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Thresholds {
        oracle_grid: Option<usize>,
        curve_samples: usize,
    },
    EnergySet {
        grid_n: usize,
        tol: Option<f64>,
        refine: bool,
    },
    CommutatorCheck {
        tol: f64,
        probe_j_max: Option<usize>,
    },
    AnnihilationSweep {
        e_min: f64,
        e_max: f64,
        count: usize,
        width: f64,
        margin_fraction: f64,
        sharp: bool,
        snap: bool,
        tol: f64,
    },
    MourreScan {
        operator: MourreOperator,
        e_lo: f64,
        e_hi: f64,
        margin_fraction: f64,
    },
    LapScan {
        e_grid: Vec<f64>,
        y_count: usize,
        s: f64,
        weight: WeightChoice,
        deflate: bool,
        expect: Option<Vec<Expectation>>,
    },
    Decay {
        e_lo: f64,
        e_hi: f64,
        margin_fraction: f64,
        s: f64,
        t_max: f64,
        dt: f64,
        site: Option<Vec<i64>>,
        max_ratio: f64,
    },
    HsCheck {
        count: usize,
        dim: usize,
        scale: f64,
        functions: Vec<HsFunction>,
        h: f64,
        order: usize,
        tol: f64,
    },
    DumpOperator {
        operator: DumpTarget,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub model: ModelSpec,
    pub geometry: Geometry,
    pub params: Params,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

/// `pi/3`, `2pi/3`, `2*pi/3`, `-pi`, `1/3`, or a decimal.
pub fn parse_real(text: &str) -> Option<f64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t.strip_prefix('+').unwrap_or(&t)),
    };
    if body.is_empty() {
        return None;
    }
    let value = if let Some((pre, post)) = body.split_once("pi") {
        let pre = pre.strip_suffix('*').unwrap_or(pre);
        let coef = if pre.is_empty() { 1.0 } else { pre.parse::<f64>().ok()? };
        let div = if post.is_empty() {
            1.0
        } else {
            post.strip_prefix('/')?.parse::<f64>().ok()?
        };
        coef * PI / div
    } else if let Some((a, b)) = body.split_once('/') {
        a.parse::<f64>().ok()? / b.parse::<f64>().ok()?
    } else {
        body.parse::<f64>().ok()?
    };
    (value.is_finite()).then_some(sign * value)
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn finish(self) -> Res<()> {
        if let Some((key, e)) = self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            return err(e.line, format!("unknown key `{key}` in [{}]", self.name));
        }
        Ok(())
    }

    fn real(&mut self, key: &str) -> Res<Option<f64>> {
        self.take(key)
            .map(|e| parse_real(&e.value).ok_or(ConfigError {
                line: e.line,
                message: format!("`{key}`: expected a number or a multiple of pi, got `{}`", e.value),
            }))
            .transpose()
    }

    fn real_or(&mut self, key: &str, default: f64) -> Res<f64> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn required_real(&mut self, key: &str) -> Res<f64> {
        let line = self.line;
        self.real(key)?
            .ok_or_else(|| ConfigError {
                line,
                message: format!("missing key `{key}` in [{}]", self.name),
            })
    }

    fn positive(&mut self, key: &str, default: f64) -> Res<f64> {
        let line = self.entries.get(key).map_or(self.line, |e| e.line);
        let v = self.real_or(key, default)?;
        if !(v > 0.0) {
            return err(line, format!("`{key}` must be > 0, got {v}"));
        }
        Ok(v)
    }

    fn integer(&mut self, key: &str) -> Res<Option<usize>> {
        self.take(key)
            .map(|e| {
                e.value.trim().parse::<usize>().map_err(|_| ConfigError {
                    line: e.line,
                    message: format!("`{key}`: expected a non-negative integer, got `{}`", e.value),
                })
            })
            .transpose()
    }

    fn integer_or(&mut self, key: &str, default: usize) -> Res<usize> {
        Ok(self.integer(key)?.unwrap_or(default))
    }

    fn boolean_or(&mut self, key: &str, default: bool) -> Res<bool> {
        match self.take(key) {
            None => Ok(default),
            Some(e) => match e.value.trim().to_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => err(e.line, format!("`{key}`: expected true or false, got `{}`", e.value)),
            },
        }
    }

    fn word(&mut self, key: &str) -> Option<(String, usize)> {
        self.take(key).map(|e| (e.value.trim().to_lowercase(), e.line))
    }

    fn reals(&mut self, key: &str) -> Res<Option<(Vec<f64>, bool, usize)>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let (items, is_list) = split_list(&e.value);
        let mut out = Vec::with_capacity(items.len());
        for it in items {
            out.push(parse_real(it).ok_or(ConfigError {
                line: e.line,
                message: format!("`{key}`: cannot parse `{it}` as a number"),
            })?);
        }
        Ok(Some((out, is_list, e.line)))
    }

    fn integers<T: std::str::FromStr>(&mut self, key: &str) -> Res<Option<(Vec<T>, usize)>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let (items, _) = split_list(&e.value);
        let mut out = Vec::with_capacity(items.len());
        for it in items {
            out.push(it.parse::<T>().map_err(|_| ConfigError {
                line: e.line,
                message: format!("`{key}`: cannot parse `{it}` as an integer"),
            })?);
        }
        Ok(Some((out, e.line)))
    }
}

/// Items of `a, b, c` or `[a, b, c]`; the flag reports list syntax.
fn split_list(value: &str) -> (Vec<&str>, bool) {
    let v = value.trim();
    let (inner, bracketed) = match v.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        Some(inner) => (inner, true),
        None => (v, false),
    };
    let items: Vec<&str> = inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    (items, bracketed || inner.contains(','))
}

const SECTIONS: [&str; 3] = ["model", "geometry", "experiment"];

fn split_sections(text: &str) -> Res<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let name = name.trim().to_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                return err(line, format!("unknown section [{name}]"));
            }
            if sections.contains_key(&name) {
                return err(line, format!("section [{name}] appears twice"));
            }
            sections.insert(
                name.clone(),
                Section {
                    name: name.clone(),
                    line,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return err(line, format!("expected `key = value`, got `{content}`"));
        };
        let Some(sec) = current.as_ref() else {
            return err(line, "key outside of any section");
        };
        let key = key.trim().to_lowercase();
        let section = sections.get_mut(sec).expect("current section exists");
        if section.entries.contains_key(&key) {
            return err(line, format!("duplicate key `{key}`"));
        }
        section.entries.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line,
            },
        );
    }
    Ok(sections)
}

fn parse_model(sec: &mut Section, d: usize) -> Res<ModelSpec> {
    let (variant, vline) = sec.word("variant").unwrap_or(("isotropic".into(), sec.line));
    let q = sec.reals("q")?;
    let k = sec.reals("k")?;
    let wigner = match variant.as_str() {
        "free" | "none" => {
            if let Some((_, _, line)) = q.as_ref().or(k.as_ref()) {
                return err(*line, "free model takes no q or k");
            }
            Wigner::None
        }
        "isotropic" | "w" => {
            let (q, qlist, qline) = q.ok_or(ConfigError {
                line: sec.line,
                message: "missing key `q` in [model]".into(),
            })?;
            let (k, klist, kline) = k.ok_or(ConfigError {
                line: sec.line,
                message: "missing key `k` in [model]".into(),
            })?;
            if qlist || q.len() != 1 {
                return err(qline, "isotropic variant takes a scalar q");
            }
            if klist || k.len() != 1 {
                return err(kline, "isotropic variant takes a scalar k");
            }
            if q[0] == 0.0 {
                return err(qline, "q must be nonzero");
            }
            if check_wavenumber(k[0]).is_err() {
                return err(kline, format!("k = {} lies in pi*Z", k[0]));
            }
            Wigner::Isotropic { q: q[0], k: k[0] }
        }
        "wprime" | "separable" => {
            let (q, qlist, qline) = q.ok_or(ConfigError {
                line: sec.line,
                message: "missing key `q` in [model]".into(),
            })?;
            let (k, klist, kline) = k.ok_or(ConfigError {
                line: sec.line,
                message: "missing key `k` in [model]".into(),
            })?;
            if !qlist {
                return err(qline, "variant Wprime needs a vector q, e.g. `q = [0.5, 0.5]`");
            }
            if !klist {
                return err(kline, "variant Wprime needs a vector k, e.g. `k = [pi/3, pi/3]`");
            }
            if q.len() != d || k.len() != d {
                return err(qline, format!("variant Wprime needs {d} entries in q and k"));
            }
            if q.contains(&0.0) {
                return err(qline, "each q_i must be nonzero");
            }
            if let Some(bad) = k.iter().find(|&&x| check_wavenumber(x).is_err()) {
                return err(kline, format!("k_i = {bad} lies in pi*Z"));
            }
            Wigner::Separable { q, k }
        }
        other => return err(vline, format!("unknown variant `{other}` (free, isotropic, Wprime)")),
    };
    let (v_kind, kline) = sec.word("v_kind").unwrap_or(("none".into(), sec.line));
    let potential = match v_kind.as_str() {
        "none" => Potential::None,
        "inverse_power" | "short_range" => {
            let c = sec.required_real("v_c")?;
            let rho_line = sec.entries.get("v_rho").map_or(sec.line, |e| e.line);
            let rho = sec.required_real("v_rho")?;
            if !(c >= 0.0) {
                return err(kline, format!("v_C must be >= 0, got {c}"));
            }
            if !(rho > 0.0) {
                return err(rho_line, format!("v_rho must be > 0, got {rho}"));
            }
            if v_kind == "inverse_power" {
                Potential::InversePower { c, rho }
            } else {
                Potential::ShortRange { c, rho }
            }
        }
        other => return err(kline, format!("unknown v_kind `{other}` (none, inverse_power, short_range)")),
    };
    Ok(ModelSpec { wigner, potential })
}

fn parse_geometry(sec: Option<&mut Section>, exp: Experiment) -> Res<Geometry> {
    let Some(sec) = sec else {
        return Ok(Geometry {
            d: 1,
            boundary: Boundary::Dirichlet,
            half_widths: Vec::new(),
        });
    };
    let d_line = sec.entries.get("d").map_or(sec.line, |e| e.line);
    let d = sec.integer_or("d", 1)?;
    if d == 0 || d > 3 {
        return err(d_line, format!("d must be 1, 2 or 3, got {d}"));
    }
    let boundary = match sec.word("boundary") {
        None => Boundary::Dirichlet,
        Some((b, line)) => match b.as_str() {
            "dirichlet" => Boundary::Dirichlet,
            "periodic" => Boundary::Periodic,
            other => return err(line, format!("unknown boundary `{other}` (dirichlet, periodic)")),
        },
    };
    let half_widths = match sec.integers::<usize>("l")? {
        Some((v, line)) => {
            if v.is_empty() || v.contains(&0) {
                return err(line, "`l` needs positive half-widths");
            }
            if v.windows(2).any(|p| p[0] >= p[1]) {
                return err(line, "`l` must be strictly increasing");
            }
            v
        }
        None if exp.needs_boxes() => return err(sec.line, "missing key `l` in [geometry]"),
        None => Vec::new(),
    };
    Ok(Geometry { d, boundary, half_widths })
}

fn parse_window(sec: &mut Section) -> Res<(f64, f64, f64)> {
    let line = sec.line;
    let lo = sec.required_real("e_lo")?;
    let hi = sec.required_real("e_hi")?;
    if !(lo < hi) {
        return err(line, format!("window needs e_lo < e_hi, got [{lo}, {hi}]"));
    }
    let m = sec.positive("margin_fraction", 0.3)?;
    if m >= 1.0 {
        return err(line, "margin_fraction must lie in (0, 1)");
    }
    Ok((lo, hi, m))
}

fn parse_params(sec: &mut Section, exp: Experiment, geo: &Geometry, model: &ModelSpec) -> Res<Params> {
    let top = 4.0 * geo.d as f64;
    Ok(match exp {
        Experiment::Thresholds => Params::Thresholds {
            oracle_grid: sec.integer("oracle_grid")?,
            curve_samples: sec.integer_or("curve_samples", 401)?.max(2),
        },
        Experiment::EnergySet => {
            let line = sec.entries.get("grid_n").map_or(sec.line, |e| e.line);
            let grid_n = sec.integer_or("grid_n", 256)?;
            if grid_n < 64 {
                return err(line, "grid_n must be at least 64");
            }
            if geo.d < 2 {
                return err(sec.line, "energy-set needs d >= 2");
            }
            if !matches!(model.wigner, Wigner::Isotropic { .. }) {
                return err(sec.line, "energy-set needs the isotropic variant");
            }
            Params::EnergySet {
                grid_n,
                tol: sec.real("tol")?,
                refine: sec.boolean_or("refine", true)?,
            }
        }
        Experiment::CommutatorCheck => Params::CommutatorCheck {
            tol: sec.positive("tol", 1e-12)?,
            probe_j_max: sec.integer("probe_j_max")?,
        },
        Experiment::AnnihilationSweep => {
            let line = sec.line;
            let e_min = sec.real_or("e_min", 0.0)?;
            let e_max = sec.real_or("e_max", top)?;
            let count = sec.integer_or("count", 41)?;
            if !(e_min < e_max) || count < 2 {
                return err(line, "sweep needs e_min < e_max and count >= 2");
            }
            let sharp = match sec.word("mode") {
                None => false,
                Some((m, l)) => match m.as_str() {
                    "smooth" => false,
                    "sharp" => true,
                    other => return err(l, format!("unknown mode `{other}` (smooth, sharp)")),
                },
            };
            if geo.boundary != Boundary::Periodic {
                return err(line, "annihilation-sweep needs boundary = periodic");
            }
            Params::AnnihilationSweep {
                e_min,
                e_max,
                count,
                width: sec.positive("width", 0.4)?,
                margin_fraction: sec.positive("margin_fraction", 0.3)?,
                sharp,
                snap: sec.boolean_or("snap", false)?,
                tol: sec.positive("tol", 1e-12)?,
            }
        }
        Experiment::MourreScan => {
            let operator = match sec.word("operator") {
                None => MourreOperator::Hamiltonian,
                Some((o, l)) => match o.as_str() {
                    "laplacian" => MourreOperator::Laplacian,
                    "hamiltonian" => MourreOperator::Hamiltonian,
                    other => return err(l, format!("unknown operator `{other}` (laplacian, hamiltonian)")),
                },
            };
            let (e_lo, e_hi, margin_fraction) = parse_window(sec)?;
            Params::MourreScan {
                operator,
                e_lo,
                e_hi,
                margin_fraction,
            }
        }
        Experiment::LapScan => {
            let (e_grid, _, line) = sec.reals("e_grid")?.ok_or(ConfigError {
                line: sec.line,
                message: "missing key `e_grid` in [experiment]".into(),
            })?;
            if e_grid.is_empty() {
                return err(line, "e_grid is empty");
            }
            if let Some(e) = e_grid.iter().find(|e| !(0.0..=top).contains(*e)) {
                return err(line, format!("energy {e} outside [0, {top}]"));
            }
            if geo.half_widths.len() < 2 {
                return err(sec.line, "lap-scan needs at least two boxes in `l`");
            }
            let s_line = sec.entries.get("s").map_or(sec.line, |e| e.line);
            let s = sec.real_or("s", 1.0)?;
            if !(s > 0.5) {
                return err(s_line, format!("s must exceed 1/2, got {s}"));
            }
            let weight = match sec.word("weight") {
                None => WeightChoice::Position,
                Some((w, l)) => match w.as_str() {
                    "position" => WeightChoice::Position,
                    "dilation" => WeightChoice::Dilation,
                    "both" => WeightChoice::Both,
                    other => return err(l, format!("unknown weight `{other}` (position, dilation, both)")),
                },
            };
            let expect = match sec.take("expect") {
                None => None,
                Some(e) => {
                    let (items, _) = split_list(&e.value);
                    let mut v = Vec::new();
                    for it in items {
                        v.push(match it.to_lowercase().as_str() {
                            "pass" => Expectation::Pass,
                            "fail" => Expectation::Fail,
                            "inconclusive" => Expectation::Inconclusive,
                            other => return err(e.line, format!("unknown verdict `{other}`")),
                        });
                    }
                    if v.len() != e_grid.len() {
                        return err(e.line, "`expect` needs one verdict per e_grid entry");
                    }
                    Some(v)
                }
            };
            let yl = sec.entries.get("y_count").map_or(sec.line, |e| e.line);
            let y_count = sec.integer_or("y_count", 10)?;
            if y_count < 2 {
                return err(yl, "y_count must be at least 2");
            }
            Params::LapScan {
                e_grid,
                y_count,
                s,
                weight,
                deflate: sec.boolean_or("deflate", false)?,
                expect,
            }
        }
        Experiment::Decay => {
            let (e_lo, e_hi, margin_fraction) = parse_window(sec)?;
            let line = sec.line;
            let s = sec.real_or("s", 0.6)?;
            if !(s >= 0.0) {
                return err(line, "s must be >= 0");
            }
            let t_max = sec.positive("t_max", 200.0)?;
            let dt = sec.positive("dt", 0.5)?;
            if dt > t_max {
                return err(line, "dt must not exceed t_max");
            }
            let site = match sec.integers::<i64>("site")? {
                None => None,
                Some((v, l)) => {
                    if v.len() != geo.d {
                        return err(l, format!("site needs {} coordinates", geo.d));
                    }
                    Some(v)
                }
            };
            if geo.half_widths.len() != 1 {
                return err(line, "decay runs on a single box; give one value in `l`");
            }
            Params::Decay {
                e_lo,
                e_hi,
                margin_fraction,
                s,
                t_max,
                dt,
                site,
                max_ratio: sec.positive("max_ratio", 1.2)?,
            }
        }
        Experiment::HsCheck => {
            let functions = match sec.take("functions") {
                None => vec![HsFunction::Window, HsFunction::Bracket, HsFunction::Integrated],
                Some(e) => {
                    let (items, _) = split_list(&e.value);
                    let mut v = Vec::new();
                    for it in items {
                        v.push(match it.to_lowercase().as_str() {
                            "window" => HsFunction::Window,
                            "bracket" => HsFunction::Bracket,
                            "integrated" => HsFunction::Integrated,
                            other => {
                                return err(e.line, format!("unknown function `{other}` (window, bracket, integrated)"))
                            }
                        });
                    }
                    if v.is_empty() {
                        return err(e.line, "functions is empty");
                    }
                    v
                }
            };
            let ol = sec.entries.get("order").map_or(sec.line, |e| e.line);
            let order = sec.integer_or("order", 3)?;
            if !(1..=5).contains(&order) {
                return err(ol, "order must lie in 1..=5");
            }
            Params::HsCheck {
                count: sec.integer_or("count", 10)?.max(1),
                dim: sec.integer_or("dim", 16)?.max(1),
                scale: sec.positive("scale", 0.25)?,
                functions,
                h: sec.positive("h", 0.02)?,
                order,
                tol: sec.positive("tol", 1e-6)?,
            }
        }
        Experiment::DumpOperator => {
            let (o, l) = sec.word("operator").ok_or(ConfigError {
                line: sec.line,
                message: "missing key `operator` in [experiment]".into(),
            })?;
            let operator = match o.as_str() {
                "laplacian" => DumpTarget::Laplacian,
                "wigner" => DumpTarget::Wigner,
                "potential" => DumpTarget::Potential,
                "hamiltonian" => DumpTarget::Hamiltonian,
                "dilation" => DumpTarget::Dilation,
                "wigner_k" => DumpTarget::WignerK,
                "wigner_b" => DumpTarget::WignerB,
                "laplacian_commutator" => DumpTarget::LaplacianCommutator,
                "potential_commutator" => DumpTarget::PotentialCommutator,
                other => return err(l, format!("unknown operator `{other}`")),
            };
            if geo.half_widths.len() != 1 {
                return err(sec.line, "dump-operator needs a single box in `l`");
            }
            Params::DumpOperator { operator }
        }
    })
}

/// Parses and validates `text` for `experiment`. A `name` key in
/// `[experiment]`, when present, must agree with the requested experiment.
pub fn parse_config(text: &str, experiment: Experiment) -> Result<RunConfig, ConfigError> {
    let mut sections = split_sections(text)?;
    let mut exp_sec = sections.remove("experiment").ok_or(ConfigError {
        line: 0,
        message: "missing section [experiment]".into(),
    })?;
    if let Some((name, line)) = exp_sec.word("name") {
        if name != experiment.name() {
            return err(line, format!("config is for `{name}`, but `{}` was requested", experiment.name()));
        }
    }
    let mut geo_sec = sections.remove("geometry");
    if geo_sec.is_none() && experiment.needs_boxes() {
        return err(0, "missing section [geometry]");
    }
    let geometry = parse_geometry(geo_sec.as_mut(), experiment)?;
    let model = match sections.remove("model") {
        Some(mut sec) => {
            let m = parse_model(&mut sec, geometry.d)?;
            sec.finish()?;
            m
        }
        None if experiment.needs_model() => return err(0, "missing section [model]"),
        None => ModelSpec::free(),
    };
    if let Some(sec) = geo_sec {
        sec.finish()?;
    }
    let output_dir = exp_sec.take("output_dir").map(|e| PathBuf::from(e.value));
    let seed = exp_sec.integer("seed")?.unwrap_or(0) as u64;
    let params = parse_params(&mut exp_sec, experiment, &geometry, &model)?;
    exp_sec.finish()?;
    Ok(RunConfig {
        experiment,
        model,
        geometry,
        params,
        output_dir,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAP: &str = "\
[model]
variant = isotropic
q = 0.5
k = pi/3
v_kind = inverse_power
v_C = 0.3
v_rho = 1

[geometry]
d = 1
l = 128, 256, 512

[experiment]
e_grid = 2, 0.2679491924311228, 0
weight = dilation
";

    #[test]
    fn angles() {
        let third = parse_real("pi/3").unwrap();
        assert_eq!(format!("{third:.10}"), "1.0471975512");
        assert_eq!(parse_real("2*pi/3"), parse_real("2pi/3"));
        assert_eq!(parse_real("-pi"), Some(-PI));
        assert_eq!(parse_real("1/4"), Some(0.25));
        assert_eq!(parse_real("1e-3"), Some(1e-3));
        assert_eq!(parse_real("pi/0"), None);
        assert_eq!(parse_real("two"), None);
    }

    #[test]
    fn full_lap_config() {
        let c = parse_config(LAP, Experiment::LapScan).unwrap();
        assert_eq!(c.geometry.half_widths, vec![128, 256, 512]);
        assert_eq!(c.model.potential, Potential::InversePower { c: 0.3, rho: 1.0 });
        match c.params {
            Params::LapScan { e_grid, weight, .. } => {
                assert_eq!(e_grid.len(), 3);
                assert_eq!(weight, WeightChoice::Dilation);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inverse_power_example() {
        let text = "[model]\nvariant = free\nv_kind = inverse_power\nv_C = 1\nv_rho = 1\n[geometry]\nl = 4\n[experiment]\noperator = potential\n";
        let c = parse_config(text, Experiment::DumpOperator).unwrap();
        let v = c.model.potential_at(&[3]).unwrap();
        assert!((v - 10f64.powf(-0.5)).abs() < 1e-15);
    }

    fn line_of(text: &str, exp: Experiment) -> (usize, String) {
        let e = parse_config(text, exp).unwrap_err();
        (e.line, e.message)
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad_k = LAP.replace("k = pi/3", "k = pi");
        assert_eq!(line_of(&bad_k, Experiment::LapScan).0, 4);
        let bad_rho = LAP.replace("v_rho = 1", "v_rho = 0");
        assert_eq!(line_of(&bad_rho, Experiment::LapScan).0, 7);
        let unknown = LAP.replace("weight = dilation", "wieght = dilation");
        let (line, msg) = line_of(&unknown, Experiment::LapScan);
        assert_eq!(line, 15);
        assert!(msg.contains("wieght"));
        let empty = LAP.replace("e_grid = 2, 0.2679491924311228, 0", "e_grid = []");
        assert_eq!(line_of(&empty, Experiment::LapScan).0, 14);
        let missing = LAP.replace("[geometry]\nd = 1\nl = 128, 256, 512\n", "");
        assert!(line_of(&missing, Experiment::LapScan).1.contains("[geometry]"));
    }

    #[test]
    fn wprime_requires_vectors() {
        let text = "[model]\nvariant = Wprime\nq = 0.5\nk = [pi/3, pi/3]\n[geometry]\nd = 2\nl = 4\n[experiment]\noperator = wigner\n";
        let (line, msg) = line_of(text, Experiment::DumpOperator);
        assert_eq!(line, 3);
        assert!(msg.contains("vector q"));
        let ok = text.replace("q = 0.5", "q = [0.5, 0.5]");
        assert!(parse_config(&ok, Experiment::DumpOperator).is_ok());
    }

    #[test]
    fn experiment_name_must_match() {
        let text = format!("{LAP}name = decay\n");
        assert!(line_of(&text, Experiment::LapScan).1.contains("decay"));
    }
}
