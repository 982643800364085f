//! Areal contiguity structure, covariate dissimilarity metrics, and the
//! deterministic border-weight rule `w_kj(alpha)`.
//!
//! A border `(k, j)` is kept in the neighbourhood matrix when
//! `exp(-sum_i z_kji * alpha_i) >= 0.5` and removed (declared a boundary)
//! otherwise. Metrics are absolute covariate differences scaled by their
//! sample standard deviation over all borders.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::scalar::{sorted, Real};

/// Planar ring, closed or open.
pub type Ring = Vec<[f64; 2]>;

/// Geometry of one area: every ring of every polygon part.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AreaGeometry {
    pub rings: Vec<Ring>,
}

/// Raw adjacency as supplied by the user.
#[derive(Debug, Clone)]
pub enum AdjacencyInput {
    /// Unordered index pairs; duplicates in either orientation are merged.
    Pairs(Vec<(usize, usize)>),
    /// Square symmetric 0/1 matrix with zero diagonal.
    Matrix(Vec<Vec<u8>>),
}

#[derive(Debug, Clone)]
pub struct AreaGraph {
    area_ids: Vec<String>,
    borders: Vec<(usize, usize)>,
    incident: Vec<Vec<(usize, usize)>>,
    components: usize,
    centroids: Option<Vec<[f64; 2]>>,
    geometry: Option<Vec<AreaGeometry>>,
}

/// Builds an [`AreaGraph`] from area identifiers and a border list or matrix.
///
/// Disconnected graphs are legal; the component count is available through
/// [`AreaGraph::n_components`].
pub fn build_graph(area_ids: Vec<String>, input: AdjacencyInput) -> Result<AreaGraph> {
    let n = area_ids.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut seen_ids = HashMap::with_capacity(n);
    for (i, id) in area_ids.iter().enumerate() {
        if seen_ids.insert(id.as_str(), i).is_some() {
            return Err(Error::DuplicateAreaId(id.clone()));
        }
    }

    let mut set = BTreeSet::new();
    match input {
        AdjacencyInput::Pairs(pairs) => {
            for (a, b) in pairs {
                for index in [a, b] {
                    if index >= n {
                        return Err(Error::IndexOutOfRange { index, n });
                    }
                }
                if a == b {
                    return Err(Error::SelfLoop(a));
                }
                set.insert((a.min(b), a.max(b)));
            }
        }
        AdjacencyInput::Matrix(rows) => {
            if rows.len() != n {
                return Err(Error::NotSquare { rows: rows.len(), row: 0, len: n });
            }
            for (r, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::NotSquare { rows: n, row: r, len: row.len() });
                }
            }
            for k in 0..n {
                for j in 0..n {
                    let v = rows[k][j];
                    if v > 1 {
                        return Err(Error::NonBinary(k, j));
                    }
                    if v != rows[j][k] {
                        return Err(Error::Asymmetric(k, j));
                    }
                    if k == j && v != 0 {
                        return Err(Error::SelfLoop(k));
                    }
                    if k < j && v == 1 {
                        set.insert((k, j));
                    }
                }
            }
        }
    }

    let borders: Vec<(usize, usize)> = set.into_iter().collect();
    let mut incident = vec![Vec::new(); n];
    for (b, &(k, j)) in borders.iter().enumerate() {
        incident[k].push((j, b));
        incident[j].push((k, b));
    }
    let components = count_components(n, &incident);
    Ok(AreaGraph {
        area_ids,
        borders,
        incident,
        components,
        centroids: None,
        geometry: None,
    })
}

fn count_components(n: usize, incident: &[Vec<(usize, usize)>]) -> usize {
    let mut seen = vec![false; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &(u, _) in &incident[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
    }
    count
}

impl AreaGraph {
    /// Graph on areas named `"0".."n-1"`.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        build_graph((0..n).map(|i| i.to_string()).collect(), AdjacencyInput::Pairs(pairs.to_vec()))
    }

    pub fn n(&self) -> usize {
        self.area_ids.len()
    }

    pub fn n_borders(&self) -> usize {
        self.borders.len()
    }

    pub fn n_components(&self) -> usize {
        self.components
    }

    pub fn area_ids(&self) -> &[String] {
        &self.area_ids
    }

    /// Borders as `(k, j)` with `k < j`, sorted.
    pub fn borders(&self) -> &[(usize, usize)] {
        &self.borders
    }

    /// `(neighbour, border index)` pairs of area `k`.
    pub fn incident(&self, k: usize) -> &[(usize, usize)] {
        &self.incident[k]
    }

    pub fn border_index(&self, k: usize, j: usize) -> Option<usize> {
        self.incident[k].iter().find(|&&(u, _)| u == j).map(|&(_, b)| b)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.area_ids.iter().position(|a| a == id)
    }

    pub fn centroids(&self) -> Option<&[[f64; 2]]> {
        self.centroids.as_deref()
    }

    pub fn geometry(&self) -> Option<&[AreaGeometry]> {
        self.geometry.as_deref()
    }

    pub fn with_centroids(mut self, centroids: Vec<[f64; 2]>) -> Result<Self> {
        if centroids.len() != self.n() {
            return Err(Error::LengthMismatch { what: "centroids", got: centroids.len(), expected: self.n() });
        }
        self.centroids = Some(centroids);
        Ok(self)
    }

    pub fn with_geometry(mut self, geometry: Vec<AreaGeometry>) -> Result<Self> {
        if geometry.len() != self.n() {
            return Err(Error::LengthMismatch { what: "geometry", got: geometry.len(), expected: self.n() });
        }
        self.geometry = Some(geometry);
        Ok(self)
    }
}

/// Standardised border dissimilarity metrics.
#[derive(Debug, Clone)]
pub struct DissimilarityData<T> {
    metric_names: Vec<String>,
    raw: Option<Vec<Vec<T>>>,
    // Row-major: border b occupies [b*q, (b+1)*q).
    border_metrics: Vec<T>,
    scales: Vec<T>,
    n_borders: usize,
}

fn sample_sd<T: Real>(xs: &[T]) -> T {
    let n = T::of_usize(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (ss / (n - T::one())).sqrt()
}

/// Computes `|z_ki - z_ji| / sigma_i` for every border and metric.
///
/// `covariates[k][i]` is the value of metric `i` in area `k`.
pub fn compute_border_metrics<T: Real>(
    graph: &AreaGraph,
    metric_names: Vec<String>,
    covariates: &[Vec<T>],
) -> Result<DissimilarityData<T>> {
    let n = graph.n();
    let q = metric_names.len();
    if q == 0 {
        return Err(Error::InvalidParameter("at least one metric is required".into()));
    }
    if covariates.len() != n {
        return Err(Error::CovariateShape { got: covariates.len(), expected: n });
    }
    for (k, row) in covariates.iter().enumerate() {
        if row.len() != q {
            return Err(Error::LengthMismatch { what: "covariate row", got: row.len(), expected: q });
        }
        for (i, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::MissingValue { metric: metric_names[i].clone(), area: k });
            }
        }
    }
    let per_metric: Vec<Vec<T>> = (0..q)
        .map(|i| {
            graph
                .borders()
                .iter()
                .map(|&(k, j)| (covariates[k][i] - covariates[j][i]).abs())
                .collect()
        })
        .collect();
    let mut dis = DissimilarityData::from_border_values(graph, metric_names, per_metric)?;
    dis.raw = Some(covariates.to_vec());
    Ok(dis)
}

impl<T: Real> DissimilarityData<T> {
    /// Standardises raw non-negative border values, one vector per metric.
    pub fn from_border_values(
        graph: &AreaGraph,
        metric_names: Vec<String>,
        raw_borders: Vec<Vec<T>>,
    ) -> Result<Self> {
        let scales = raw_borders
            .iter()
            .zip(&metric_names)
            .map(|(vals, name)| {
                if vals.len() < 2 {
                    return Err(Error::TooFewBorders(name.clone()));
                }
                let sd = sample_sd(vals);
                if !(sd > T::zero()) || !sd.is_finite() {
                    return Err(Error::ConstantMetric(name.clone()));
                }
                Ok(sd)
            })
            .collect::<Result<Vec<T>>>()?;
        let scaled = raw_borders
            .into_iter()
            .zip(&scales)
            .map(|(vals, &s)| vals.into_iter().map(|v| v / s).collect())
            .collect();
        Self::assemble(graph, metric_names, scaled, scales)
    }

    /// Uses the supplied border values as-is (unit scales).
    pub fn from_standardized(
        graph: &AreaGraph,
        metric_names: Vec<String>,
        border_values: Vec<Vec<T>>,
    ) -> Result<Self> {
        let q = metric_names.len();
        Self::assemble(graph, metric_names, border_values, vec![T::one(); q])
    }

    /// A metric-free data set: every border always kept.
    pub fn empty(graph: &AreaGraph) -> Self {
        DissimilarityData {
            metric_names: Vec::new(),
            raw: None,
            border_metrics: Vec::new(),
            scales: Vec::new(),
            n_borders: graph.n_borders(),
        }
    }

    fn assemble(
        graph: &AreaGraph,
        metric_names: Vec<String>,
        per_metric: Vec<Vec<T>>,
        scales: Vec<T>,
    ) -> Result<Self> {
        let q = metric_names.len();
        let nb = graph.n_borders();
        if per_metric.len() != q {
            return Err(Error::LengthMismatch { what: "metric list", got: per_metric.len(), expected: q });
        }
        let mut border_metrics = vec![T::zero(); nb * q];
        for (i, vals) in per_metric.iter().enumerate() {
            if vals.len() != nb {
                return Err(Error::LengthMismatch { what: "border metric", got: vals.len(), expected: nb });
            }
            for (b, &v) in vals.iter().enumerate() {
                if !v.is_finite() || v < T::zero() {
                    return Err(Error::InvalidParameter(format!(
                        "metric `{}` is negative or non-finite on border {b}",
                        metric_names[i]
                    )));
                }
                border_metrics[b * q + i] = v;
            }
        }
        Ok(DissimilarityData { metric_names, raw: None, border_metrics, scales, n_borders: nb })
    }

    pub fn q(&self) -> usize {
        self.metric_names.len()
    }

    pub fn n_borders(&self) -> usize {
        self.n_borders
    }

    pub fn metric_names(&self) -> &[String] {
        &self.metric_names
    }

    pub fn scales(&self) -> &[T] {
        &self.scales
    }

    /// Per-area covariates, when the metrics were computed from them.
    pub fn raw(&self) -> Option<&[Vec<T>]> {
        self.raw.as_deref()
    }

    /// Standardised metric vector of border `b`.
    #[inline]
    pub fn border(&self, b: usize) -> &[T] {
        let q = self.q();
        &self.border_metrics[b * q..(b + 1) * q]
    }

    pub fn metric_values(&self, i: usize) -> Vec<T> {
        (0..self.n_borders).map(|b| self.border(b)[i]).collect()
    }

    fn check_metric(&self, i: usize) -> Result<()> {
        if i >= self.q() {
            return Err(Error::MetricOutOfRange { index: i, q: self.q() });
        }
        Ok(())
    }

    pub fn check_alpha(&self, alpha: &[T]) -> Result<()> {
        if alpha.len() != self.q() {
            return Err(Error::AlphaLength { got: alpha.len(), expected: self.q() });
        }
        for (index, &a) in alpha.iter().enumerate() {
            if !(a >= T::zero()) || !a.is_finite() {
                return Err(Error::NegativeAlpha { index, value: a.to_f64_lossy() });
            }
        }
        Ok(())
    }

    /// `true` when border `b` is kept (`w = 1`) under `alpha`.
    #[inline]
    pub fn keeps_border(&self, b: usize, alpha: &[T]) -> bool {
        let s: T = self.border(b).iter().zip(alpha).map(|(&z, &a)| z * a).sum();
        border_kept(s)
    }
}

#[inline]
fn border_kept<T: Real>(linear_predictor: T) -> bool {
    (-linear_predictor).exp() >= T::of(0.5)
}

/// Binary border weights `w_kj(alpha)` and their row sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyState {
    pub w: Vec<bool>,
    pub row_sums: Vec<usize>,
    pub boundary_count: usize,
}

impl AdjacencyState {
    /// Builds the state from an explicit border pattern.
    pub fn from_pattern(graph: &AreaGraph, w: Vec<bool>) -> Result<Self> {
        if w.len() != graph.n_borders() {
            return Err(Error::LengthMismatch { what: "border pattern", got: w.len(), expected: graph.n_borders() });
        }
        let mut row_sums = vec![0; graph.n()];
        let mut boundary_count = 0;
        for (&(k, j), &keep) in graph.borders().iter().zip(&w) {
            if keep {
                row_sums[k] += 1;
                row_sums[j] += 1;
            } else {
                boundary_count += 1;
            }
        }
        Ok(AdjacencyState { w, row_sums, boundary_count })
    }

    /// Every border kept.
    pub fn all_kept(graph: &AreaGraph) -> Self {
        Self::from_pattern(graph, vec![true; graph.n_borders()]).expect("pattern length matches")
    }

    pub fn n_kept(&self) -> usize {
        self.w.len() - self.boundary_count
    }
}

/// Evaluates the border-weight rule for every border.
pub fn evaluate_w<T: Real>(
    graph: &AreaGraph,
    dis: &DissimilarityData<T>,
    alpha: &[T],
) -> Result<AdjacencyState> {
    dis.check_alpha(alpha)?;
    if dis.n_borders() != graph.n_borders() {
        return Err(Error::LengthMismatch { what: "dissimilarity borders", got: dis.n_borders(), expected: graph.n_borders() });
    }
    Ok(evaluate_w_unchecked(graph, dis, alpha))
}

pub(crate) fn evaluate_w_unchecked<T: Real>(
    graph: &AreaGraph,
    dis: &DissimilarityData<T>,
    alpha: &[T],
) -> AdjacencyState {
    let w = (0..graph.n_borders()).map(|b| dis.keeps_border(b, alpha)).collect();
    AdjacencyState::from_pattern(graph, w).expect("pattern length matches")
}

fn step_down<T: Real>(a: T) -> T {
    a - a * T::epsilon()
}

fn step_up<T: Real>(a: T) -> T {
    a + a * T::epsilon()
}

/// Largest coefficient at which a border with value `z` is still kept,
/// starting from `ln 2 / z` and correcting for rounding.
fn keep_threshold<T: Real>(z: T) -> T {
    let mut a = T::LN_2() / z;
    while !border_kept(z * a) {
        a = step_down(a);
    }
    a
}

/// Threshold below which metric `i` on its own cannot remove any border:
/// `-ln(0.5) / max_b z_bi`.
///
/// The returned value is rounded down if needed so that evaluating the rule
/// at exactly this coefficient (other components zero) yields no boundary.
pub fn alpha_min<T: Real>(dis: &DissimilarityData<T>, i: usize) -> Result<T> {
    dis.check_metric(i)?;
    let zmax = dis.metric_values(i).into_iter().fold(T::zero(), T::max);
    if !(zmax > T::zero()) {
        return Err(Error::AllZeroMetric(dis.metric_names[i].clone()));
    }
    Ok(keep_threshold(zmax))
}

/// Upper limit of the uniform prior on one coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaUpper<T> {
    /// `M_i`: at most `fraction` of borders become boundaries when this
    /// metric acts alone at `alpha_i = M_i`.
    pub m: T,
    /// `-ln(0.5) / min z`: the value past which this metric on its own removes
    /// every border with a positive metric. Infinite if no metric is positive.
    pub natural_limit: T,
}

/// Prior upper limit `M_i = -ln(0.5) / z_(r)`, with `z_(r)` the lower
/// nearest-rank `(1 - fraction)` quantile of metric `i` over borders.
pub fn alpha_prior_upper<T: Real>(
    dis: &DissimilarityData<T>,
    i: usize,
    max_boundary_fraction: f64,
) -> Result<AlphaUpper<T>> {
    dis.check_metric(i)?;
    if !(max_boundary_fraction > 0.0 && max_boundary_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "max boundary fraction must lie in (0, 1], got {max_boundary_fraction}"
        )));
    }
    let z = sorted(&dis.metric_values(i));
    let nb = z.len();
    if nb == 0 {
        return Err(Error::NoBorders);
    }
    let rank = (((1.0 - max_boundary_fraction) * nb as f64) - 1e-9).ceil().clamp(1.0, nb as f64) as usize;
    let zq = z[rank - 1];
    if !(zq > T::zero()) {
        return Err(Error::ZeroQuantile(dis.metric_names[i].clone()));
    }
    let m = keep_threshold(zq);
    let natural_limit = match z.iter().copied().find(|&v| v > T::zero()) {
        Some(zmin) => {
            let mut a = T::LN_2() / zmin;
            while border_kept(zmin * a) {
                a = step_up(a);
            }
            a
        }
        None => T::infinity(),
    };
    Ok(AlphaUpper { m, natural_limit })
}
