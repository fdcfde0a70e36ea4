//! Command implementations behind the `condcw` binary.
//!
//! Each command renders its whole output file in memory, so identical inputs
//! give byte-identical files regardless of how grid points were scheduled.
//! CSV files start with a `#` line holding the resolved parameters, followed
//! by a column header; JSON files carry the same data under `"meta"`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{invalid, Error, Result};
use crate::exactn::{convergence_study, errors_nonincreasing, exact_moments};
use crate::mcsim::{run_chain, ChainConfig, Dynamics, RNG_ALGORITHM};
use crate::model::{magnetization_from_z, FiniteModel, ModelParams};
use crate::phase::{beta_double_star, beta_star, classify_region, classify_transition, Region};
use crate::solver::{directional_limits, minimize_free_energy};

pub const TOOL: &str = concat!("condcw ", env!("CARGO_PKG_VERSION"));

/// Largest tolerated error of the exact `<m_N>` at the largest size.
pub const COMPARE_FINAL_ERROR: f64 = 1e-3;
/// Largest single rise tolerated in the error sequence.
pub const COMPARE_INVERSION: f64 = 1e-5;
/// Monte Carlo estimates must sit within this many standard errors.
pub const COMPARE_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SweepH,
    SweepBeta,
    Diagram,
    Solve,
    Limits,
    Exact,
    Mc,
    Compare,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SweepH => "sweep-h",
            Mode::SweepBeta => "sweep-beta",
            Mode::Diagram => "diagram",
            Mode::Solve => "solve",
            Mode::Limits => "limits",
            Mode::Exact => "exact",
            Mode::Mc => "mc",
            Mode::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Parameters shared by all commands. Doubles as the flag set of every
/// subcommand and as the schema of the `--config` JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// JSON file with any of these keys; flags given on the command line win
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Inverse temperature
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Pinned-plus fraction
    #[arg(long = "s", allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Pinned-minus fraction
    #[arg(long = "r", allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// External field
    #[arg(long = "h", allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta_max: Option<f64>,
    /// Diagram only: evaluate each cell at this multiple of its beta*
    #[arg(long, allow_negative_numbers = true)]
    pub beta_factor: Option<f64>,
    /// Grid size (per axis for the diagram)
    #[arg(long)]
    pub points: Option<usize>,
    /// System size(s), comma separated
    #[arg(long = "n", value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Measured Monte Carlo sweeps
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Discarded Monte Carlo sweeps (default: sweeps / 10)
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, value_enum)]
    pub dynamics: Option<Dynamics>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ValueEnum for Dynamics {
    fn value_variants<'a>() -> &'a [Self] {
        &[Dynamics::Metropolis, Dynamics::Glauber]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl Settings {
    /// Field-wise overlay: every value set in `top` replaces the one here.
    pub fn overlay(mut self, top: &Settings) -> Settings {
        overlay!(
            self,
            top,
            config,
            beta,
            s,
            r,
            h,
            h_min,
            h_max,
            beta_min,
            beta_max,
            beta_factor,
            points,
            n,
            seed,
            sweeps,
            burn_in,
            dynamics,
            format,
            out
        );
        self
    }

    pub fn from_config_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Command-line settings on top of the config file they name, if any.
    pub fn resolve(cli: Settings) -> Result<Settings> {
        match &cli.config {
            Some(path) => Ok(Settings::from_config_file(path)?.overlay(&cli)),
            None => Ok(cli),
        }
    }
}

/// A command together with its resolved parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: Mode,
    pub settings: Settings,
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| invalid(format!("missing --{flag}")))
}

/// `count` evenly spaced values from `start` to `stop`.
fn linspace(start: f64, stop: f64, count: usize, what: &str) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(invalid(format!(
            "{what}: need at least 2 points (got {count})"
        )));
    }
    if !(start.is_finite() && stop.is_finite() && stop > start) {
        return Err(invalid(format!(
            "{what}: need finite start < stop (got {start}, {stop})"
        )));
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// 17 significant digits, no negative zero.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Blank,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(t) => t.clone(),
            Cell::Blank => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(if *x == 0.0 { 0.0 } else { *x }),
            Cell::Int(i) => json!(i),
            Cell::Text(t) => json!(t),
            Cell::Blank => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<&str> for Cell {
    fn from(t: &str) -> Self {
        Cell::Text(t.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Blank, Cell::Num)
    }
}

struct Table {
    meta: Vec<(&'static str, Cell)>,
    columns: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn header_line(&self) -> String {
        let mut line = format!("# {TOOL}");
        for (k, v) in &self.meta {
            let _ = write!(line, " {k}={}", v.csv());
        }
        line
    }

    fn meta_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("tool".into(), json!(TOOL));
        for (k, v) in &self.meta {
            map.insert((*k).into(), v.json());
        }
        Value::Object(map)
    }

    fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => {
                let mut out = self.header_line();
                out.push('\n');
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                Ok(out)
            }
            OutputFormat::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| ((*c).to_string(), v.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let doc = json!({ "meta": self.meta_json(), "rows": rows });
                let mut s = serde_json::to_string_pretty(&doc)?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

fn sweep_h(st: &Settings) -> Result<Table> {
    let beta = need(st.beta, "beta")?;
    let s = need(st.s, "s")?;
    let r = need(st.r, "r")?;
    let (h_min, h_max) = (need(st.h_min, "h-min")?, need(st.h_max, "h-max")?);
    let points = need(st.points, "points")?;
    ModelParams::new(beta, s, r, 0.0)?;
    let grid = linspace(h_min, h_max, points, "h range")?;

    let singular = r - s;
    let replaced = if singular >= h_min && singular <= h_max {
        grid.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - singular).abs().total_cmp(&(b.1 - singular).abs()))
            .map(|(i, _)| i)
    } else {
        None
    };
    let limits = directional_limits(beta, s, r)?;

    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, &h)| -> Result<Vec<Vec<Cell>>> {
            if Some(i) == replaced {
                return Ok(vec![
                    vec![
                        singular.into(),
                        limits.m_minus.into(),
                        limits.z_minus.into(),
                        "minus".into(),
                    ],
                    vec![
                        singular.into(),
                        limits.m_plus.into(),
                        limits.z_plus.into(),
                        "plus".into(),
                    ],
                ]);
            }
            let p = ModelParams::new(beta, s, r, h)?;
            let set = minimize_free_energy(&p)?;
            let z = set.unique().ok_or_else(|| Error::Ambiguous {
                z: set.minimizers[0],
            })?;
            Ok(vec![vec![
                h.into(),
                magnetization_from_z(&p, z).into(),
                z.into(),
                "regular".into(),
            ]])
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    Ok(Table {
        meta: vec![
            ("command", "sweep-h".into()),
            ("beta", beta.into()),
            ("s", s.into()),
            ("r", r.into()),
            ("h-min", h_min.into()),
            ("h-max", h_max.into()),
            ("points", points.into()),
        ],
        columns: &["h", "m", "z", "branch"],
        rows,
    })
}

fn sweep_beta(st: &Settings) -> Result<Table> {
    let s = need(st.s, "s")?;
    let r = need(st.r, "r")?;
    let (b_min, b_max) = (
        need(st.beta_min, "beta-min")?,
        need(st.beta_max, "beta-max")?,
    );
    let points = need(st.points, "points")?;
    let grid = linspace(b_min, b_max, points, "beta range")?;
    let rows = grid
        .par_iter()
        .map(|&beta| -> Result<Vec<Cell>> {
            let rep = classify_transition(s, r, beta)?;
            Ok(vec![
                beta.into(),
                rep.limits.m_minus.into(),
                rep.limits.m_plus.into(),
                rep.limits.jump.into(),
                rep.regime.as_str().into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        meta: vec![
            ("command", "sweep-beta".into()),
            ("s", s.into()),
            ("r", r.into()),
            ("beta-min", b_min.into()),
            ("beta-max", b_max.into()),
            ("points", points.into()),
        ],
        columns: &["beta", "m_minus", "m_plus", "jump", "regime"],
        rows,
    })
}

fn diagram(st: &Settings) -> Result<Table> {
    let points = need(st.points, "points")?;
    if points < 2 {
        return Err(invalid(format!(
            "diagram: need at least 2 points per axis (got {points})"
        )));
    }
    let beta_at: Box<dyn Fn(f64) -> f64 + Sync> = match (st.beta, st.beta_factor) {
        (Some(_), Some(_)) => return Err(invalid("give either --beta or --beta-factor, not both")),
        (Some(b), None) => {
            crate::model::validate_beta(b)?;
            Box::new(move |_| b)
        }
        (None, Some(f)) => {
            crate::model::validate_beta(f)?;
            Box::new(move |bstar| f * bstar)
        }
        (None, None) => return Err(invalid("missing --beta or --beta-factor")),
    };

    let cells: Vec<(f64, f64)> = (0..points)
        .flat_map(|i| {
            (0..points).map(move |j| (i as f64 / points as f64, j as f64 / points as f64))
        })
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(s, r)| -> Result<Vec<Cell>> {
            let region = match classify_region(s, r) {
                Ok(region) => region,
                Err(Error::InvalidParameter(_)) => {
                    return Ok(vec![
                        s.into(),
                        r.into(),
                        Cell::Blank,
                        Cell::Blank,
                        "invalid".into(),
                        Cell::Blank,
                    ])
                }
                Err(e) => return Err(e),
            };
            let bstar = beta_star(s, r)?;
            let bss = match region {
                Region::OffDiagonalSmall => Some(beta_double_star(s, r)?),
                _ => None,
            };
            let rep = classify_transition(s, r, beta_at(bstar))?;
            Ok(vec![
                s.into(),
                r.into(),
                bstar.into(),
                bss.into(),
                region.as_str().into(),
                rep.regime.as_str().into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut meta = vec![("command", "diagram".into()), ("points", points.into())];
    match (st.beta, st.beta_factor) {
        (Some(b), _) => meta.push(("beta", b.into())),
        (_, Some(f)) => meta.push(("beta-factor", f.into())),
        _ => {}
    }
    Ok(Table {
        meta,
        columns: &[
            "s",
            "r",
            "beta_star",
            "beta_double_star",
            "region",
            "regime",
        ],
        rows,
    })
}

fn solve(st: &Settings) -> Result<Table> {
    let (beta, s, r, h) = (
        need(st.beta, "beta")?,
        need(st.s, "s")?,
        need(st.r, "r")?,
        need(st.h, "h")?,
    );
    let p = ModelParams::new(beta, s, r, h)?;
    let set = minimize_free_energy(&p)?;
    let rows = set
        .minimizers
        .iter()
        .zip(&set.curvature)
        .map(|(&z, &c)| {
            vec![
                z.into(),
                magnetization_from_z(&p, z).into(),
                set.value.into(),
                c.into(),
            ]
        })
        .collect();
    Ok(Table {
        meta: vec![
            ("command", "solve".into()),
            ("beta", beta.into()),
            ("s", s.into()),
            ("r", r.into()),
            ("h", h.into()),
        ],
        columns: &["z", "m", "free_energy", "curvature"],
        rows,
    })
}

fn limits(st: &Settings) -> Result<Table> {
    let (beta, s, r) = (need(st.beta, "beta")?, need(st.s, "s")?, need(st.r, "r")?);
    let rep = classify_transition(s, r, beta)?;
    let l = rep.limits;
    Ok(Table {
        meta: vec![
            ("command", "limits".into()),
            ("beta", beta.into()),
            ("s", s.into()),
            ("r", r.into()),
        ],
        columns: &[
            "beta_star",
            "beta_double_star",
            "region",
            "regime",
            "m_minus",
            "m_plus",
            "z_plus",
            "jump",
        ],
        rows: vec![vec![
            rep.beta_star.into(),
            rep.beta_double_star.into(),
            rep.region.as_str().into(),
            rep.regime.as_str().into(),
            l.m_minus.into(),
            l.m_plus.into(),
            l.z_plus.into(),
            l.jump.into(),
        ]],
    })
}

fn first_n(st: &Settings) -> Result<usize> {
    st.n.as_ref()
        .and_then(|v| v.first().copied())
        .ok_or_else(|| invalid("missing --n"))
}

fn exact(st: &Settings) -> Result<Table> {
    let (beta, s, r, h) = (
        need(st.beta, "beta")?,
        need(st.s, "s")?,
        need(st.r, "r")?,
        need(st.h, "h")?,
    );
    let sizes = st.n.clone().ok_or_else(|| invalid("missing --n"))?;
    let rows = sizes
        .par_iter()
        .map(|&n| -> Result<Vec<Cell>> {
            let fm = FiniteModel::from_fractions(n, s, r)?;
            let ex = exact_moments(&fm, beta, h)?;
            Ok(vec![
                n.into(),
                fm.n_plus().into(),
                fm.n_minus().into(),
                fm.n_free().into(),
                fm.s_n().into(),
                fm.r_n().into(),
                ex.log_partition.into(),
                ex.mean_magnetization.into(),
                ex.mean_free_spin.into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        meta: vec![
            ("command", "exact".into()),
            ("beta", beta.into()),
            ("s", s.into()),
            ("r", r.into()),
            ("h", h.into()),
        ],
        columns: &[
            "n",
            "n_plus",
            "n_minus",
            "n_free",
            "s_n",
            "r_n",
            "log_partition",
            "mean_magnetization",
            "mean_free_spin",
        ],
        rows,
    })
}

fn chain_config(st: &Settings, n: usize) -> Result<ChainConfig> {
    let (beta, s, r, h) = (
        need(st.beta, "beta")?,
        need(st.s, "s")?,
        need(st.r, "r")?,
        need(st.h, "h")?,
    );
    let sweeps = need(st.sweeps, "sweeps")?;
    let fm = FiniteModel::from_fractions(n, s, r)?;
    let mut cfg = ChainConfig::new(fm, beta, h, st.seed.unwrap_or(0), sweeps);
    if let Some(b) = st.burn_in {
        cfg.burn_in_sweeps = b;
    }
    cfg.dynamics = st.dynamics.unwrap_or_default();
    Ok(cfg)
}

fn mc(st: &Settings) -> Result<Table> {
    let n = first_n(st)?;
    let cfg = chain_config(st, n)?;
    let est = run_chain(&cfg)?;
    Ok(Table {
        meta: vec![
            ("command", "mc".into()),
            ("beta", cfg.beta.into()),
            ("s", need(st.s, "s")?.into()),
            ("r", need(st.r, "r")?.into()),
            ("h", cfg.h.into()),
            ("n", n.into()),
            ("sweeps", cfg.sweeps.into()),
            ("burn-in", cfg.burn_in_sweeps.into()),
            ("dynamics", cfg.dynamics.as_str().into()),
            ("rng", RNG_ALGORITHM.into()),
            ("seed", Cell::Int(cfg.seed)),
        ],
        columns: &[
            "n",
            "n_plus",
            "n_minus",
            "n_free",
            "mean_magnetization",
            "std_error",
            "mean_free_spin",
            "acceptance_rate",
            "final_sector",
        ],
        rows: vec![vec![
            n.into(),
            cfg.model.n_plus().into(),
            cfg.model.n_minus().into(),
            cfg.model.n_free().into(),
            est.mean_magnetization.into(),
            est.std_error.into(),
            est.mean_free_spin.into(),
            est.acceptance_rate.into(),
            est.final_sector.into(),
        ]],
    })
}

/// Solver vs exact-N vs Monte Carlo at one parameter point, as JSON.
///
/// Monte Carlo runs only when `sweeps` is set, at the smallest requested size.
pub fn compare_report(st: &Settings) -> Result<Value> {
    let (beta, s, r, h) = (
        need(st.beta, "beta")?,
        need(st.s, "s")?,
        need(st.r, "r")?,
        need(st.h, "h")?,
    );
    let mut sizes = st.n.clone().ok_or_else(|| invalid("missing --n"))?;
    if sizes.is_empty() {
        return Err(invalid("missing --n"));
    }
    sizes.sort_unstable();
    sizes.dedup();
    let (m_inf, rows) = convergence_study(s, r, beta, h, &sizes)?;
    let decreasing = errors_nonincreasing(&rows, COMPARE_INVERSION);
    let final_error = rows.last().map_or(f64::INFINITY, |row| row.error);

    let mut meta = Map::new();
    meta.insert("tool".into(), json!(TOOL));
    meta.insert("command".into(), json!("compare"));
    for (k, v) in [("beta", beta), ("s", s), ("r", r), ("h", h)] {
        meta.insert(k.into(), json!(v));
    }
    meta.insert("n".into(), json!(sizes));

    let mut checks = Map::new();
    checks.insert("error_nonincreasing".into(), json!(decreasing));
    checks.insert(
        "final_error_below_tolerance".into(),
        json!(final_error < COMPARE_FINAL_ERROR),
    );

    let mut mc_rows = Vec::new();
    if st.sweeps.is_some() {
        let cfg = chain_config(st, sizes[0])?;
        let est = run_chain(&cfg)?;
        let exact_m = rows[0].mean_magnetization;
        let deviation = (est.mean_magnetization - exact_m).abs();
        let within = deviation <= COMPARE_SIGMAS * est.std_error;
        meta.insert("sweeps".into(), json!(cfg.sweeps));
        meta.insert("burn-in".into(), json!(cfg.burn_in_sweeps));
        meta.insert("dynamics".into(), json!(cfg.dynamics.as_str()));
        meta.insert("rng".into(), json!(RNG_ALGORITHM));
        meta.insert("seed".into(), json!(cfg.seed));
        checks.insert("mc_within_3_sigma".into(), json!(within));
        mc_rows.push(json!({
            "n": sizes[0],
            "mean_magnetization": est.mean_magnetization,
            "std_error": est.std_error,
            "acceptance_rate": est.acceptance_rate,
            "exact_mean_magnetization": exact_m,
            "deviation": deviation,
        }));
    }

    Ok(json!({
        "meta": Value::Object(meta),
        "m_inf": m_inf,
        "exact": rows,
        "mc": mc_rows,
        "checks": Value::Object(checks),
    }))
}

/// Renders the output file of a command.
pub fn render(spec: &SweepSpec) -> Result<String> {
    let st = &spec.settings;
    let format = st.format.unwrap_or_default();
    let table = match spec.mode {
        Mode::SweepH => sweep_h(st)?,
        Mode::SweepBeta => sweep_beta(st)?,
        Mode::Diagram => diagram(st)?,
        Mode::Solve => solve(st)?,
        Mode::Limits => limits(st)?,
        Mode::Exact => exact(st)?,
        Mode::Mc => mc(st)?,
        Mode::Compare => {
            if format == OutputFormat::Csv && st.format.is_some() {
                return Err(invalid("compare writes JSON only"));
            }
            let mut s = serde_json::to_string_pretty(&compare_report(st)?)?;
            s.push('\n');
            return Ok(s);
        }
    };
    table.render(format)
}

/// Renders a command and writes it to `--out`, or stdout.
pub fn run(spec: &SweepSpec) -> Result<()> {
    let text = render(spec)?;
    match &spec.settings.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(f: impl FnOnce(&mut Settings)) -> Settings {
        let mut st = Settings::default();
        f(&mut st);
        st
    }

    fn spec(mode: Mode, st: Settings) -> SweepSpec {
        SweepSpec { mode, settings: st }
    }

    #[test]
    fn float_format_is_fixed() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-0.0), "0.0000000000000000e0");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn overlay_prefers_top() {
        let base = settings(|s| {
            s.beta = Some(1.0);
            s.s = Some(0.1);
        });
        let top = settings(|s| s.beta = Some(2.0));
        let merged = base.overlay(&top);
        assert_eq!((merged.beta, merged.s), (Some(2.0), Some(0.1)));
    }

    #[test]
    fn config_keys_match_flags() {
        let st: Settings = serde_json::from_str(
            r#"{"beta": 3, "s": 0.2, "r": 0.2, "h-min": -0.5, "h-max": 0.5, "points": 11,
                "n": [500, 1000], "seed": 4, "sweeps": 100, "format": "json", "out": "x.json"}"#,
        )
        .unwrap();
        assert_eq!(st.h_min, Some(-0.5));
        assert_eq!(st.n, Some(vec![500, 1000]));
        assert_eq!(st.format, Some(OutputFormat::Json));
        assert!(serde_json::from_str::<Settings>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn sweep_h_layout() {
        let st = settings(|s| {
            s.beta = Some(3.0);
            s.s = Some(0.2);
            s.r = Some(0.2);
            s.h_min = Some(-0.5);
            s.h_max = Some(0.5);
            s.points = Some(11);
        });
        let out = render(&spec(Mode::SweepH, st)).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert!(lines[0].starts_with("# condcw "));
        assert_eq!(lines[1], "h,m,z,branch");
        assert_eq!(lines.len(), 2 + 12);
        assert!(lines[7].ends_with(",minus") && lines[8].ends_with(",plus"));
        assert!(!out.contains('\r'));
    }

    #[test]
    fn sweep_h_rejects_bad_ranges() {
        let st = settings(|s| {
            s.beta = Some(3.0);
            s.s = Some(0.2);
            s.r = Some(0.2);
            s.h_min = Some(0.5);
            s.h_max = Some(-0.5);
            s.points = Some(11);
        });
        assert!(render(&spec(Mode::SweepH, st.clone()))
            .unwrap_err()
            .is_validation());
        let st = Settings {
            points: Some(1),
            h_min: Some(-1.0),
            ..st
        };
        assert!(render(&spec(Mode::SweepH, st)).unwrap_err().is_validation());
    }

    #[test]
    fn diagram_cells() {
        let st = settings(|s| {
            s.points = Some(50);
            s.beta = Some(2.0);
        });
        let out = render(&spec(Mode::Diagram, st)).unwrap();
        let rows: Vec<Vec<&str>> = out
            .lines()
            .skip(2)
            .map(|l| l.split(',').collect())
            .collect();
        assert_eq!(rows.len(), 2500);
        let find = |s: f64, r: f64| {
            rows.iter()
                .find(|row| row[0] == fmt_f64(s) && row[1] == fmt_f64(r))
                .unwrap()
                .clone()
        };
        let cell = find(0.2, 0.1);
        assert!((cell[2].parse::<f64>().unwrap() - 1.428571).abs() < 1e-6);
        assert!((cell[3].parse::<f64>().unwrap() - 1.438410).abs() < 1e-6);
        assert_eq!(cell[4], "OffDiagonalSmall");
        let cell = find(0.6, 0.2);
        assert_eq!((cell[3], cell[4]), ("", "Dominant"));
        for i in 0..50 {
            let x = i as f64 / 50.0;
            let cell = find(x, x);
            assert_eq!(cell[4], if x < 0.5 { "Diagonal" } else { "invalid" });
        }
        assert_eq!(find(0.6, 0.4)[4], "invalid");
    }

    #[test]
    fn diagram_needs_exactly_one_temperature() {
        let st = settings(|s| s.points = Some(4));
        assert!(render(&spec(Mode::Diagram, st.clone())).is_err());
        let both = Settings {
            beta: Some(1.0),
            beta_factor: Some(2.0),
            ..st
        };
        assert!(render(&spec(Mode::Diagram, both)).is_err());
    }

    #[test]
    fn solve_reports_both_wells_on_singular_slice() {
        let st = settings(|s| {
            s.beta = Some(2.0);
            s.s = Some(0.0);
            s.r = Some(0.0);
            s.h = Some(0.0);
        });
        let out = render(&spec(Mode::Solve, st)).unwrap();
        assert_eq!(out.lines().count(), 4);
    }

    #[test]
    fn json_output_parses() {
        let st = settings(|s| {
            s.beta = Some(2.0);
            s.s = Some(0.2);
            s.r = Some(0.1);
            s.format = Some(OutputFormat::Json);
        });
        let out = render(&spec(Mode::Limits, st)).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["rows"][0]["regime"], "AsymmetricFlip");
        assert_eq!(v["meta"]["command"], "limits");
    }

    #[test]
    fn compare_symmetric_subcritical_point() {
        let st = settings(|s| {
            s.beta = Some(0.5);
            s.s = Some(0.0);
            s.r = Some(0.0);
            s.h = Some(0.0);
            s.n = Some(vec![500, 1000, 2000]);
            s.sweeps = Some(2000);
            s.seed = Some(1);
        });
        let v = compare_report(&st).unwrap();
        assert_eq!(v["m_inf"], 0.0);
        for row in v["exact"].as_array().unwrap() {
            assert_eq!(row["mean_magnetization"], 0.0);
        }
        assert_eq!(v["checks"]["mc_within_3_sigma"], true);
        assert_eq!(v["checks"]["error_nonincreasing"], true);
    }

    #[test]
    fn missing_parameters_are_validation_errors() {
        for mode in [
            Mode::SweepH,
            Mode::SweepBeta,
            Mode::Solve,
            Mode::Limits,
            Mode::Exact,
            Mode::Mc,
            Mode::Compare,
        ] {
            let err = render(&spec(mode, Settings::default())).unwrap_err();
            assert!(err.is_validation(), "{mode:?}: {err}");
        }
    }
}
