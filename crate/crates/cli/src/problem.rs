//! Problem-file schema (TOML) with key=value overrides and validation that
//! names the offending key.

use semilin::expr::{parse, Expr, Params};
use semilin::geometry::{
    from_orbit_volume_expr, model_space, revolution_surface, revolution_surface_from_tables,
    warped_r3, GeometrySpec, ModelKind,
};
use semilin::expr::Bindings;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug)]
pub struct CliError {
    pub message: String,
    /// 2 for a demanded falsified-hypothesis failure, else 1.
    pub exit_code: i32,
}

impl CliError {
    pub fn new(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            exit_code: 1,
        }
    }

    pub fn key(key: &str, message: impl std::fmt::Display) -> Self {
        CliError {
            message: format!("invalid `{}`: {}", key, message),
            exit_code: 1,
        }
    }
}

impl From<semilin::Error> for CliError {
    fn from(e: semilin::Error) -> Self {
        CliError::new(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// TOML number or the strings "inf"/"-inf".
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Extended {
    Number(f64),
    Named(ExtendedName),
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub enum ExtendedName {
    #[serde(rename = "inf")]
    PosInf,
    #[serde(rename = "-inf")]
    NegInf,
}

impl Extended {
    pub fn value(self) -> f64 {
        match self {
            Extended::Number(v) => v,
            Extended::Named(ExtendedName::PosInf) => f64::INFINITY,
            Extended::Named(ExtendedName::NegInf) => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub kind: Option<String>,
    pub n: Option<u32>,
    pub profile_r: Option<String>,
    pub profile_z: Option<String>,
    pub t_range: Option<[f64; 2]>,
    pub profile_r_csv: Option<String>,
    pub profile_z_csv: Option<String>,
    #[serde(rename = "A")]
    pub orbit_volume: Option<String>,
    pub domain: Option<[Extended; 2]>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub f: Option<String>,
    #[serde(rename = "L1")]
    pub l1: Option<String>,
    #[serde(rename = "L2")]
    pub l2: Option<String>,
    pub h: Option<String>,
    pub b: Option<String>,
    pub phi: Option<String>,
    pub u: Option<String>,
    pub du: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub kind: Option<String>,
    pub tol: Option<f64>,
    pub r0: Option<f64>,

    // ivp
    pub r_init: Option<f64>,
    pub u0: Option<f64>,
    pub du0: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub coordinate: Option<String>,
    pub from_pole: Option<bool>,

    // bvp
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,

    // picard
    pub variant: Option<String>,
    pub a: Option<f64>,
    pub c: Option<f64>,
    pub sigma: Option<f64>,

    // audit
    pub r_box: Option<[f64; 2]>,
    pub y_box: Option<[f64; 2]>,
    pub ymax: Option<f64>,
    pub window_s: Option<[f64; 2]>,
    pub thetas: Option<Vec<f64>>,
    pub fail_on_falsified: Option<bool>,
    // completeness-bound box for phi(t, x1, x2)
    pub x1_box: Option<[f64; 2]>,
    pub x2_box: Option<[f64; 2]>,
    pub c_bound: Option<f64>,

    // nonexistence
    pub initial: Option<Vec<[f64; 3]>>,
    pub windows: Option<Vec<f64>>,
    pub solve_window: Option<[f64; 2]>,

    // uniqueness
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    pub data: Option<[f64; 2]>,
    pub perturb: Option<f64>,
    pub tol2: Option<f64>,

    // verify
    pub nr: Option<Vec<usize>>,
    pub ntheta_factor: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub geometry: Option<GeometrySection>,
    pub problem: Option<ProblemSection>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub task: TaskSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Parse the file, apply `--set key=value` overrides on the raw TOML tree,
/// then deserialize.
pub fn load(path: &Path, overrides: &[String]) -> CliResult<(ProblemFile, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(format!("cannot read problem file {}: {}", path.display(), e)))?;
    let mut value: toml::Value = toml::from_str(&text)
        .map_err(|e| CliError::new(format!("problem file is not valid TOML: {}", e)))?;
    for ov in overrides {
        apply_override(&mut value, ov)?;
    }
    let canonical = toml::to_string(&value).unwrap_or_else(|_| text.clone());
    let file: ProblemFile = value
        .try_into()
        .map_err(|e| CliError::new(format!("problem file: {}", e)))?;
    Ok((file, canonical))
}

fn apply_override(root: &mut toml::Value, spec: &str) -> CliResult<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::key("--set", format!("expected key=value, got `{}`", spec)))?;
    // parse the value as a TOML literal (float, int, bool, array, string)
    let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {}", raw))
        .ok()
        .and_then(|t| t.get("v").cloned())
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| CliError::key(path, "path does not address a table"))?;
        if i + 1 == segments.len() {
            table.insert(seg.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}

pub fn parse_named_expr(
    section: &str,
    name: &str,
    text: &Option<String>,
    params: &Params,
) -> CliResult<Option<Expr>> {
    match text {
        None => Ok(None),
        Some(t) => parse(t, params)
            .map(Some)
            .map_err(|e| CliError::key(&format!("{}.{}", section, name), e)),
    }
}

pub fn require<T>(value: Option<T>, key: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::key(key, "missing required key"))
}

/// Two-column numeric CSV (t, value); `#`-prefixed lines and a non-numeric
/// first row (header) are skipped.
pub fn read_table(base: &Path, rel: &str, key: &str) -> CliResult<Vec<(f64, f64)>> {
    let path: PathBuf = if Path::new(rel).is_absolute() {
        rel.into()
    } else {
        base.parent().unwrap_or_else(|| Path::new(".")).join(rel)
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::key(key, format!("cannot read {}: {}", path.display(), e)))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, b) = (cols.next(), cols.next());
        match (
            a.and_then(|v| v.parse::<f64>().ok()),
            b.and_then(|v| v.parse::<f64>().ok()),
        ) {
            (Some(a), Some(b)) => rows.push((a, b)),
            _ if lineno == 0 => continue, // header row
            _ => {
                return Err(CliError::key(
                    key,
                    format!("line {} of {} is not two numbers", lineno + 1, path.display()),
                ))
            }
        }
    }
    if rows.len() < 2 {
        return Err(CliError::key(key, "table needs at least two rows"));
    }
    Ok(rows)
}

pub fn build_geometry(
    file: &ProblemFile,
    problem_path: &Path,
    params: &Params,
) -> CliResult<Arc<GeometrySpec>> {
    let section = file
        .geometry
        .as_ref()
        .ok_or_else(|| CliError::key("geometry", "missing required section"))?;
    let kind = require(section.kind.clone(), "geometry.kind")?;
    let geom = match kind.as_str() {
        "euclidean" | "sphere" | "hyperbolic" => {
            let n = require(section.n, "geometry.n")?;
            let model = match kind.as_str() {
                "euclidean" => ModelKind::Euclidean,
                "sphere" => ModelKind::Sphere,
                _ => ModelKind::Hyperbolic,
            };
            model_space(model, n).map_err(|e| CliError::key("geometry.n", e))?
        }
        "warped_r3" => warped_r3(),
        "revolution" => {
            let name = section.name.clone().unwrap_or_else(|| "revolution".to_string());
            if let (Some(r_csv), Some(z_csv)) = (&section.profile_r_csv, &section.profile_z_csv) {
                let rt = read_table(problem_path, r_csv, "geometry.profile_r_csv")?;
                let zt = read_table(problem_path, z_csv, "geometry.profile_z_csv")?;
                revolution_surface_from_tables(&name, &rt, &zt)
                    .map_err(|e| CliError::key("geometry.profile_r_csv", e))?
            } else {
                let r_text = require(section.profile_r.clone(), "geometry.profile_r")?;
                let z_text = require(section.profile_z.clone(), "geometry.profile_z")?;
                let t_range = require(section.t_range, "geometry.t_range")?;
                let r_expr = parse(&r_text, params)
                    .map_err(|e| CliError::key("geometry.profile_r", e))?;
                let z_expr = parse(&z_text, params)
                    .map_err(|e| CliError::key("geometry.profile_z", e))?;
                let radius = Arc::new(move |t: f64| r_expr.eval(&Bindings::new().t(t)));
                let height = Arc::new(move |t: f64| z_expr.eval(&Bindings::new().t(t)));
                revolution_surface(&name, radius, height, t_range[0], t_range[1])
                    .map_err(|e| CliError::key("geometry.profile_r", e))?
            }
        }
        "orbit_volume" => {
            let a_text = require(section.orbit_volume.clone(), "geometry.A")?;
            let domain = require(section.domain, "geometry.domain")?;
            let a_expr = parse(&a_text, params).map_err(|e| CliError::key("geometry.A", e))?;
            let name = section.name.clone().unwrap_or_else(|| "orbit_volume".to_string());
            from_orbit_volume_expr(
                &name,
                &a_expr,
                (domain[0].value(), domain[1].value()),
                section.n.unwrap_or(2),
            )
            .map_err(|e| CliError::key("geometry.A", e))?
        }
        other => {
            return Err(CliError::key(
                "geometry.kind",
                format!(
                    "unknown kind `{}` (euclidean, sphere, hyperbolic, warped_r3, revolution, orbit_volume)",
                    other
                ),
            ))
        }
    };
    Ok(Arc::new(geom))
}
