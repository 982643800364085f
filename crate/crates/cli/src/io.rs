//! Input readers and output row types.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{json, Value};
use womble::graph::{AreaGeometry, Ring};
use womble::{AdjacencyInput, AreaGraph};

use crate::error::{invalid, CliError, CliResult};

/// Parsed areas file.
#[derive(Debug, Clone)]
pub struct AreasTable {
    pub ids: Vec<String>,
    pub y: Vec<u64>,
    pub e: Vec<f64>,
    pub columns: Vec<String>,
    /// `values[k][c]`; `None` for an empty or `NA` cell.
    pub values: Vec<Vec<Option<f64>>>,
}

fn reader(path: &Path) -> CliResult<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(file))
}

fn records(path: &Path) -> CliResult<Vec<csv::StringRecord>> {
    reader(path)?.records().map(|r| r.map_err(|e| CliError::csv(path, e))).collect()
}

fn parse_count(s: &str) -> Option<u64> {
    s.parse::<u64>().ok().or_else(|| {
        let v: f64 = s.parse().ok()?;
        (v >= 0.0 && v.fract() == 0.0 && v < 9.0e15).then_some(v as u64)
    })
}

pub fn read_areas(path: &Path) -> CliResult<AreasTable> {
    let rows = records(path)?;
    let header = rows.first().ok_or_else(|| invalid(format!("{}: empty areas file", path.display())))?;
    let head: Vec<&str> = header.iter().collect();
    if head.len() < 3 || head[0] != "area_id" || head[1] != "y" || head[2] != "E" {
        return Err(invalid(format!("{}: header must start with `area_id,y,E`", path.display())));
    }
    let columns: Vec<String> = head[3..].iter().map(|s| s.to_string()).collect();
    let mut t = AreasTable { ids: vec![], y: vec![], e: vec![], columns, values: vec![] };
    for (line, row) in rows.iter().enumerate().skip(1) {
        if row.len() != head.len() {
            return Err(invalid(format!("{}: row {} has {} fields, expected {}", path.display(), line + 1, row.len(), head.len())));
        }
        let y = parse_count(&row[1])
            .ok_or_else(|| invalid(format!("{}: row {}: y must be a non-negative integer", path.display(), line + 1)))?;
        let e: f64 = row[2]
            .parse()
            .ok()
            .filter(|v: &f64| *v > 0.0 && v.is_finite())
            .ok_or_else(|| invalid(format!("{}: row {}: E must be a positive number", path.display(), line + 1)))?;
        let values = row
            .iter()
            .skip(3)
            .map(|c| {
                if c.is_empty() || c.eq_ignore_ascii_case("na") {
                    Ok(None)
                } else {
                    c.parse::<f64>()
                        .map(Some)
                        .map_err(|_| invalid(format!("{}: row {}: `{c}` is not a number", path.display(), line + 1)))
                }
            })
            .collect::<CliResult<Vec<_>>>()?;
        t.ids.push(row[0].to_string());
        t.y.push(y);
        t.e.push(e);
        t.values.push(values);
    }
    if t.ids.is_empty() {
        return Err(invalid(format!("{}: no areas", path.display())));
    }
    Ok(t)
}

impl AreasTable {
    /// Covariate matrix for the chosen columns (all columns when `spec` is
    /// `None`). Missing cells become NaN and are rejected downstream with the
    /// metric and area named.
    pub fn select(&self, spec: Option<&str>) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
        let names: Vec<String> = match spec {
            None => self.columns.clone(),
            Some(s) => s.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect(),
        };
        let idx = names
            .iter()
            .map(|n| {
                self.columns
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| invalid(format!("metric column `{n}` not found in areas file")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let cov = self.values.iter().map(|row| idx.iter().map(|&c| row[c].unwrap_or(f64::NAN)).collect()).collect();
        Ok((names, cov))
    }
}

/// Pair list with optional `area_id_1,area_id_2` header, or a headerless
/// square 0/1 matrix in areas-file order; told apart by shape.
pub fn read_adjacency(path: &Path, ids: &[String]) -> CliResult<AdjacencyInput> {
    let rows = records(path)?;
    let n = ids.len();
    let is_matrix = rows.len() == n && rows.iter().all(|r| r.len() == n && r.iter().all(|c| c == "0" || c == "1"));
    if is_matrix {
        let m = rows.iter().map(|r| r.iter().map(|c| u8::from(c == "1")).collect()).collect();
        return Ok(AdjacencyInput::Matrix(m));
    }
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut pairs = Vec::new();
    for (line, r) in rows.iter().enumerate() {
        if line == 0 && r.len() == 2 && &r[0] == "area_id_1" && &r[1] == "area_id_2" {
            continue;
        }
        if r.len() != 2 {
            return Err(invalid(format!(
                "{}: row {} is neither a border pair nor a row of a {n}x{n} 0/1 matrix",
                path.display(),
                line + 1
            )));
        }
        let a = *index.get(&r[0]).ok_or_else(|| womble::Error::UnknownAreaId(r[0].to_string()))?;
        let b = *index.get(&r[1]).ok_or_else(|| womble::Error::UnknownAreaId(r[1].to_string()))?;
        pairs.push((a, b));
    }
    Ok(AdjacencyInput::Pairs(pairs))
}

fn parse_ring(v: &Value) -> Option<Ring> {
    v.as_array()?
        .iter()
        .map(|p| {
            let c = p.as_array()?;
            Some([c.first()?.as_f64()?, c.get(1)?.as_f64()?])
        })
        .collect()
}

/// Polygon rings per area from a FeatureCollection whose features carry an
/// `area_id` property. Areas without a feature get no rings.
pub fn read_geojson(path: &Path, ids: &[String]) -> CliResult<Vec<AreaGeometry>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let bad = |what: &str| invalid(format!("{}: {what}", path.display()));
    let features = doc.get("features").and_then(Value::as_array).ok_or_else(|| bad("not a FeatureCollection"))?;
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut out = vec![AreaGeometry { rings: vec![] }; ids.len()];
    for f in features {
        let id = match f.get("properties").and_then(|p| p.get("area_id")) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(bad("feature without an `area_id` property")),
        };
        let Some(&k) = index.get(id.as_str()) else { continue };
        let geom = f.get("geometry").ok_or_else(|| bad("feature without geometry"))?;
        let coords = geom.get("coordinates").ok_or_else(|| bad("geometry without coordinates"))?;
        let polygons: Vec<&Value> = match geom.get("type").and_then(Value::as_str) {
            Some("Polygon") => vec![coords],
            Some("MultiPolygon") => coords.as_array().map(|a| a.iter().collect()).unwrap_or_default(),
            _ => return Err(bad("only Polygon and MultiPolygon geometries are supported")),
        };
        for poly in polygons {
            for ring in poly.as_array().ok_or_else(|| bad("malformed polygon"))? {
                out[k].rings.push(parse_ring(ring).ok_or_else(|| bad("malformed ring"))?);
            }
        }
    }
    Ok(out)
}

type Segment = ([f64; 2], [f64; 2]);

fn segments(g: &AreaGeometry) -> Vec<Segment> {
    g.rings.iter().flat_map(|r| r.windows(2).map(|w| (w[0], w[1]))).filter(|(a, b)| a != b).collect()
}

fn same_segment(s: &Segment, t: &Segment) -> bool {
    (s.0 == t.0 && s.1 == t.1) || (s.0 == t.1 && s.1 == t.0)
}

/// Shared edges of two polygons, chained into polylines.
pub fn shared_lines(a: &AreaGeometry, b: &AreaGeometry) -> Vec<Vec<[f64; 2]>> {
    let sb = segments(b);
    let shared: Vec<Segment> = segments(a).into_iter().filter(|s| sb.iter().any(|t| same_segment(s, t))).collect();
    let mut lines: Vec<Vec<[f64; 2]>> = Vec::new();
    for (p, q) in shared {
        match lines.last_mut() {
            Some(line) if *line.last().unwrap() == p => line.push(q),
            _ => lines.push(vec![p, q]),
        }
    }
    lines
}

/// LineString features along every flagged border that has shared polygon
/// edges.
pub fn boundary_overlay(graph: &AreaGraph, flagged: &[bool], w_mean: &[f64]) -> Option<Value> {
    let geometry = graph.geometry()?;
    let ids = graph.area_ids();
    let mut features = Vec::new();
    for (b, &(k, j)) in graph.borders().iter().enumerate() {
        if !flagged[b] {
            continue;
        }
        for line in shared_lines(&geometry[k], &geometry[j]) {
            features.push(json!({
                "type": "Feature",
                "properties": { "area_id_1": ids[k], "area_id_2": ids[j], "w_mean": w_mean[b] },
                "geometry": { "type": "LineString", "coordinates": line },
            }));
        }
    }
    Some(json!({ "type": "FeatureCollection", "features": features }))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| CliError::csv(path, e))).collect()
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub param: String,
    /// Chain index, or `all` for the pooled row.
    pub chain: String,
    pub median: f64,
    pub mean: f64,
    #[serde(rename = "ci2.5")]
    pub ci_lower: f64,
    #[serde(rename = "ci97.5")]
    pub ci_upper: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub area_id: String,
    #[serde(rename = "R_median")]
    pub median: f64,
    #[serde(rename = "R_ci2.5")]
    pub ci_lower: f64,
    #[serde(rename = "R_ci97.5")]
    pub ci_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub area_id_1: String,
    pub area_id_2: String,
    pub w_median: u8,
    pub w_mean: f64,
    pub is_boundary: bool,
    pub blv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectCsvRow {
    pub metric: String,
    pub estimate: f64,
    #[serde(rename = "ci2.5")]
    pub ci_lower: f64,
    #[serde(rename = "ci97.5")]
    pub ci_upper: f64,
    pub alpha_min: f64,
    pub effect: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DicRow {
    pub dic: f64,
    pub p_d: f64,
    pub mean_deviance: f64,
    pub boundaries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub param: String,
    pub psrf: Option<f64>,
    pub acceptance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlvRow {
    pub area_id_1: String,
    pub area_id_2: String,
    pub blv: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub k1: f64,
    pub k2: f64,
    pub replicates: usize,
    #[serde(rename = "BA")]
    pub ba: f64,
    #[serde(rename = "NBA")]
    pub nba: f64,
    pub bias: f64,
    #[serde(rename = "RMSE")]
    pub rmse: f64,
    #[serde(rename = "BA_se")]
    pub ba_se: f64,
    #[serde(rename = "NBA_se")]
    pub nba_se: f64,
    pub bias_se: f64,
    #[serde(rename = "RMSE_se")]
    pub rmse_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    #[serde(rename = "BA")]
    pub ba: f64,
    #[serde(rename = "NBA")]
    pub nba: f64,
    pub bias: f64,
    #[serde(rename = "RMSE")]
    pub rmse: f64,
    pub boundaries_detected: usize,
    pub true_boundaries: usize,
    pub alpha_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranRow {
    #[serde(rename = "I")]
    pub statistic: f64,
    pub p_value: f64,
    pub n_permutations: usize,
    pub residual_type: String,
    pub weights: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SiteRow {
    pub area_id: String,
    pub x: f64,
    pub y: f64,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExpectedRow {
    pub area_id: String,
    #[serde(rename = "E")]
    pub e: f64,
}
