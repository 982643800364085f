//! Simulation study: Matérn log-risk surfaces with piecewise-constant means,
//! Poisson counts, border metrics of tunable quality, and the boundary
//! agreement scorecard.
//!
//! Data generation works in `f64`; the fitted model is the same generic
//! sampler used everywhere else, instantiated at `f64`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::boundary::classify_boundaries;
use crate::error::{Error, Result};
use crate::graph::{AreaGeometry, AreaGraph, DissimilarityData};
use crate::mcmc::{run_chains, ChainConfig, ObservedData};
use crate::scalar::{quantile_sorted, sorted};
use crate::seed::{derive_seed, stream_rng, Stream, StreamRng};

/// Largest range the calibration will consider, relative to the largest
/// inter-centroid distance.
const RANGE_CAP_FACTOR: f64 = 1e6;

/// Modified Bessel function of the second kind, `K_nu(x)` for `x > 0`, from
/// `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt` by the trapezoidal rule
/// (spectrally accurate for this doubly-exponentially decaying integrand).
fn bessel_k(nu: f64, x: f64) -> f64 {
    let upper = ((700.0 / x) + 1.0).acosh().max(1.0) + 1.0;
    let h = 2e-3;
    let steps = (upper / h).ceil() as usize;
    let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
    let mut sum = 0.5 * f(0.0);
    for i in 1..=steps {
        sum += f(i as f64 * h);
    }
    sum * h
}

/// Matérn correlation at distance `d` with smoothness `kappa`, scaled so that
/// `a = sqrt(2 kappa) d / range`. Half-integer smoothness 0.5, 1.5 and 2.5
/// use closed forms; for 2.5 this is `(1 + a + a^2/3) exp(-a)`.
pub fn matern_correlation(d: f64, range: f64, kappa: f64) -> f64 {
    assert!(d >= 0.0 && range > 0.0 && kappa > 0.0, "invalid Matérn arguments");
    let a = (2.0 * kappa).sqrt() * d / range;
    if a == 0.0 {
        return 1.0;
    }
    if kappa == 0.5 {
        (-a).exp()
    } else if kappa == 1.5 {
        (1.0 + a) * (-a).exp()
    } else if kappa == 2.5 {
        (1.0 + a + a * a / 3.0) * (-a).exp()
    } else {
        if a > 700.0 {
            return 0.0;
        }
        (2.0_f64.powf(1.0 - kappa) / gamma(kappa) * a.powf(kappa) * bessel_k(kappa, a)).clamp(0.0, 1.0)
    }
}

/// Which area pairs enter the median correlation used for calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairSet {
    #[default]
    All,
    Adjacent,
}

fn pair_distances(graph: &AreaGraph, pairs: PairSet) -> Result<Vec<f64>> {
    let c = graph
        .centroids()
        .ok_or_else(|| Error::InvalidParameter("simulation requires area centroids".into()))?;
    let dist = |a: usize, b: usize| ((c[a][0] - c[b][0]).powi(2) + (c[a][1] - c[b][1]).powi(2)).sqrt();
    let d: Vec<f64> = match pairs {
        PairSet::All => (0..c.len()).flat_map(|a| (a + 1..c.len()).map(move |b| (a, b))).map(|(a, b)| dist(a, b)).collect(),
        PairSet::Adjacent => graph.borders().iter().map(|&(a, b)| dist(a, b)).collect(),
    };
    if d.is_empty() || d.iter().all(|&x| x == 0.0) {
        return Err(Error::Calibration("centroids are all coincident".into()));
    }
    Ok(sorted(&d))
}

fn median_correlation(sorted_d: &[f64], range: f64, kappa: f64) -> f64 {
    // Correlation is monotone in distance, so the median correlation comes
    // from the median distance(s).
    let n = sorted_d.len();
    if n % 2 == 1 {
        matern_correlation(sorted_d[n / 2], range, kappa)
    } else {
        0.5 * (matern_correlation(sorted_d[n / 2 - 1], range, kappa) + matern_correlation(sorted_d[n / 2], range, kappa))
    }
}

/// Finds the range at which the median pairwise correlation equals
/// `target` (to within 1e-9) by bisection on `ln range`.
pub fn calibrate_range(graph: &AreaGraph, target: f64, kappa: f64, pairs: PairSet) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Calibration(format!("target correlation must lie in (0, 1), got {target}")));
    }
    let d = pair_distances(graph, pairs)?;
    let dmax = *d.last().unwrap();
    let mut lo = dmax * 1e-9;
    let mut hi = dmax * RANGE_CAP_FACTOR;
    if median_correlation(&d, hi, kappa) < target {
        return Err(Error::Calibration(format!("target {target} needs a range beyond {hi}")));
    }
    if median_correlation(&d, lo, kappa) > target {
        return Err(Error::Calibration(format!("target {target} needs a range below {lo}")));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if median_correlation(&d, mid, kappa) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    let range = (lo * hi).sqrt();
    let got = median_correlation(&d, range, kappa);
    if (got - target).abs() > 1e-9 {
        return Err(Error::Calibration(format!("bisection stalled at correlation {got}")));
    }
    Ok(range)
}

/// A `rows x cols` rook-contiguity lattice with unit cells, centroids at cell
/// centres and square cell geometry.
pub fn lattice(rows: usize, cols: usize) -> Result<AreaGraph> {
    let mut pairs = Vec::new();
    let mut ids = Vec::with_capacity(rows * cols);
    let mut centroids = Vec::with_capacity(rows * cols);
    let mut geometry = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            ids.push(format!("r{r:02}c{c:02}"));
            let (x, y) = (c as f64, r as f64);
            centroids.push([x + 0.5, y + 0.5]);
            geometry.push(AreaGeometry {
                rings: vec![vec![[x, y], [x + 1.0, y], [x + 1.0, y + 1.0], [x, y + 1.0], [x, y]]],
            });
            if c + 1 < cols {
                pairs.push((v, v + 1));
            }
            if r + 1 < rows {
                pairs.push((v, v + cols));
            }
        }
    }
    crate::graph::build_graph(ids, crate::graph::AdjacencyInput::Pairs(pairs))?
        .with_centroids(centroids)?
        .with_geometry(geometry)
}

/// Background (label 0) plus five rectangular blocks, laid out for a 16x16
/// lattice and scaled proportionally for other sizes. On 16x16 the blocks
/// (3x3, 3x3, 2x3, 2x2, 2x2) give 50 true boundaries out of 480 borders.
pub fn default_partition(rows: usize, cols: usize) -> Vec<usize> {
    // (row, col, height, width) on the 16x16 reference layout.
    const BLOCKS: [(usize, usize, usize, usize); 5] =
        [(2, 2, 3, 3), (2, 10, 3, 3), (10, 2, 2, 3), (8, 8, 2, 2), (12, 12, 2, 2)];
    let scale = |v: usize, n: usize| (v * n) / 16;
    let mut labels = vec![0; rows * cols];
    for (g, &(r0, c0, h, w)) in BLOCKS.iter().enumerate() {
        let (r0, c0) = (scale(r0, rows), scale(c0, cols));
        let (h, w) = (scale(h, rows).max(1), scale(w, cols).max(1));
        for r in r0..(r0 + h).min(rows) {
            for c in c0..(c0 + w).min(cols) {
                labels[r * cols + c] = g + 1;
            }
        }
    }
    labels
}

/// Borders whose endpoints carry different labels.
pub fn true_boundaries(graph: &AreaGraph, partition: &[usize]) -> Vec<bool> {
    graph.borders().iter().map(|&(k, j)| partition[k] != partition[j]).collect()
}

/// Marginal variance of the log-risk field in the default scenario. At this
/// scale the block offsets k1 in 0.05..0.4 range from barely visible to
/// clear-cut against the background variation between neighbours.
pub const DEFAULT_FIELD_VARIANCE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub graph: AreaGraph,
    /// Group label per area; label 0 is the background.
    pub partition: Vec<usize>,
    pub k1: f64,
    pub k2: f64,
    pub kappa: f64,
    /// Marginal variance of the Gaussian field.
    pub field_variance: f64,
    pub target_median_correlation: f64,
    pub pairs: PairSet,
    pub expected: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

impl SimConfig {
    /// The desk-scale scenario on a `rows x cols` lattice with constant `E`.
    pub fn lattice_default(rows: usize, cols: usize, k1: f64, k2: f64, expected: f64) -> Result<Self> {
        let graph = lattice(rows, cols)?;
        let n = graph.n();
        Ok(SimConfig {
            graph,
            partition: default_partition(rows, cols),
            k1,
            k2,
            kappa: 2.5,
            field_variance: DEFAULT_FIELD_VARIANCE,
            target_median_correlation: 0.5,
            pairs: PairSet::All,
            expected: vec![expected; n],
            replicates: 20,
            seed: 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n();
        if self.partition.len() != n {
            return Err(Error::LengthMismatch { what: "partition", got: self.partition.len(), expected: n });
        }
        if self.expected.len() != n {
            return Err(Error::LengthMismatch { what: "expected counts", got: self.expected.len(), expected: n });
        }
        if self.expected.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidParameter("expected counts must be positive".into()));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParameter("Matérn smoothness must be positive".into()));
        }
        if !(self.field_variance > 0.0 && self.field_variance.is_finite()) {
            return Err(Error::InvalidParameter("field variance must be positive".into()));
        }
        if !(self.k1 >= 0.0 && self.k2 >= 0.0) {
            return Err(Error::InvalidParameter("k1 and k2 must be non-negative".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("at least one replicate is required".into()));
        }
        Ok(())
    }

    pub fn true_boundaries(&self) -> Vec<bool> {
        true_boundaries(&self.graph, &self.partition)
    }
}

/// Draws log-risk surfaces `phi ~ N(m, Sigma)` with `m_k = k1` off the
/// background and `Sigma` the unit-variance Matérn correlation matrix.
#[derive(Debug, Clone)]
pub struct SurfaceGenerator {
    mean: Vec<f64>,
    chol: DMatrix<f64>,
    pub range: f64,
    /// Whether the covariance needed the diagonal jitter to factorise.
    pub jittered: bool,
}

impl SurfaceGenerator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        let range = calibrate_range(&config.graph, config.target_median_correlation, config.kappa, config.pairs)?;
        let c = config.graph.centroids().expect("calibration checked centroids");
        let n = c.len();
        let cov = DMatrix::from_fn(n, n, |a, b| {
            let d = ((c[a][0] - c[b][0]).powi(2) + (c[a][1] - c[b][1]).powi(2)).sqrt();
            matern_correlation(d, range, config.kappa)
        });
        let (chol, jittered) = match cov.clone().cholesky() {
            Some(ch) => (ch.l(), false),
            None => {
                let jittered = cov + DMatrix::identity(n, n) * 1e-10;
                let ch = jittered.cholesky().ok_or(Error::NotPositiveDefinite { pivot: 0 })?;
                (ch.l(), true)
            }
        };
        let chol = chol * config.field_variance.sqrt();
        let mean = config.partition.iter().map(|&g| if g == 0 { 0.0 } else { config.k1 }).collect();
        Ok(SurfaceGenerator { mean, chol, range, jittered })
    }

    /// Returns `(phi, R = exp(phi))`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let n = self.mean.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| rand_distr::StandardNormal.sample(rng)));
        let x = &self.chol * z;
        let phi: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v + m).collect();
        let risk = phi.iter().map(|p| p.exp()).collect();
        (phi, risk)
    }
}

/// Raw border metric `|N(1, 0.5^2)|` off true boundaries and
/// `|N(1 + k2, 0.5^2)|` on them.
pub fn gen_dissimilarity<R: Rng + ?Sized>(truth: &[bool], k2: f64, rng: &mut R) -> Vec<f64> {
    let off = Normal::new(1.0, 0.5).expect("valid normal");
    let on = Normal::new(1.0 + k2, 0.5).expect("valid normal");
    truth
        .iter()
        .map(|&b| if b { on.sample(rng) } else { off.sample(rng) }.abs())
        .collect()
}

/// `y_k ~ Poisson(E_k R_k)` independently.
pub fn gen_counts<R: Rng + ?Sized>(risk: &[f64], expected: &[f64], rng: &mut R) -> Vec<u64> {
    risk.iter()
        .zip(expected)
        .map(|(&r, &e)| {
            let lambda = e * r;
            if !(lambda > 0.0) {
                0
            } else {
                Poisson::new(lambda).expect("positive finite rate").sample(rng) as u64
            }
        })
        .collect()
}

/// Everything generated for one replicate.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub phi: Vec<f64>,
    pub risk: Vec<f64>,
    pub counts: Vec<u64>,
    pub metric: Vec<f64>,
}

pub fn simulate_replicate(config: &SimConfig, surface: &SurfaceGenerator, rng: &mut StreamRng) -> SimulatedData {
    let (phi, risk) = surface.draw(rng);
    let metric = gen_dissimilarity(&config.true_boundaries(), config.k2, rng);
    let counts = gen_counts(&risk, &config.expected, rng);
    SimulatedData { phi, risk, counts, metric }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub ba: f64,
    pub nba: f64,
    pub bias: f64,
    pub rmse: f64,
    pub boundaries_detected: usize,
    pub true_boundaries: usize,
    pub alpha_median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScore {
    pub ba: f64,
    pub nba: f64,
    pub bias: f64,
    pub rmse: f64,
    pub ba_se: f64,
    pub nba_se: f64,
    pub bias_se: f64,
    pub rmse_se: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub score: SimScore,
    pub replicates: Vec<ReplicateResult>,
}

/// Percentage agreement on true boundaries and true non-boundaries.
pub fn agreement(truth: &[bool], detected: &[bool]) -> (f64, f64) {
    let (mut tb, mut hit, mut tn, mut keep) = (0usize, 0usize, 0usize, 0usize);
    for (&t, &d) in truth.iter().zip(detected) {
        if t {
            tb += 1;
            hit += d as usize;
        } else {
            tn += 1;
            keep += (!d) as usize;
        }
    }
    let pct = |a: usize, b: usize| if b == 0 { f64::NAN } else { 100.0 * a as f64 / b as f64 };
    (pct(hit, tb), pct(keep, tn))
}

/// Relative bias and RMSE of estimated risks, both in percent.
pub fn relative_errors(estimate: &[f64], truth: &[f64]) -> (f64, f64) {
    let n = truth.len() as f64;
    let rel: Vec<f64> = estimate.iter().zip(truth).map(|(e, t)| (e - t) / t).collect();
    let bias = 100.0 * rel.iter().sum::<f64>() / n;
    let rmse = 100.0 * (rel.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    (bias, rmse)
}

fn fit_replicate(config: &SimConfig, surface: &SurfaceGenerator, chain_config: &ChainConfig<f64>, r: usize) -> Result<ReplicateResult> {
    let mut rng = stream_rng(config.seed, Stream::Replicate, r as u64);
    let sim = simulate_replicate(config, surface, &mut rng);
    let truth = config.true_boundaries();
    let dis = DissimilarityData::from_border_values(&config.graph, vec!["z".into()], vec![sim.metric])?;
    let data = ObservedData::new(sim.counts, config.expected.clone())?;
    let chains = ChainConfig { seed: derive_seed(config.seed, Stream::Replicate, r as u64), ..chain_config.clone() };
    let samples = run_chains(&data, &config.graph, &dis, &chains)?;
    let set = classify_boundaries(&samples)?;
    let detected: Vec<bool> = set.borders.iter().map(|b| b.is_boundary).collect();
    let (ba, nba) = agreement(&truth, &detected);
    let risk_hat: Vec<f64> = (0..config.graph.n())
        .map(|k| quantile_sorted(&sorted(&samples.risk_draws(k)), 0.5))
        .collect();
    let (bias, rmse) = relative_errors(&risk_hat, &sim.risk);
    Ok(ReplicateResult {
        replicate: r,
        ba,
        nba,
        bias,
        rmse,
        boundaries_detected: set.boundary_count,
        true_boundaries: truth.iter().filter(|&&t| t).count(),
        alpha_median: quantile_sorted(&sorted(&samples.alpha_draws(0)), 0.5),
    })
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Runs every replicate (concurrently), fitting the boundary model to each,
/// and averages the scorecard.
pub fn run_study(config: &SimConfig, chain_config: &ChainConfig<f64>) -> Result<StudyResult> {
    config.validate()?;
    chain_config.validate()?;
    let surface = SurfaceGenerator::new(config)?;
    let replicates = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            fit_replicate(config, &surface, chain_config, r)
                .map_err(|e| Error::Replicate { replicate: r, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&ReplicateResult) -> f64| replicates.iter().map(f).collect::<Vec<_>>();
    let (ba, ba_se) = mean_se(&col(|r| r.ba));
    let (nba, nba_se) = mean_se(&col(|r| r.nba));
    let (bias, bias_se) = mean_se(&col(|r| r.bias));
    let (rmse, rmse_se) = mean_se(&col(|r| r.rmse));
    Ok(StudyResult {
        score: SimScore { ba, nba, bias, rmse, ba_se, nba_se, bias_se, rmse_se, replicates: replicates.len() },
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn matern_closed_form_values() {
        assert_eq!(matern_correlation(0.0, 1.0, 2.5), 1.0);
        let a = 5.0_f64.sqrt();
        let want = (1.0 + a + 5.0 / 3.0) * (-a).exp();
        assert!((matern_correlation(1.0, 1.0, 2.5) - want).abs() < 1e-15);
        assert!((want - 0.52399).abs() < 1e-4);
        assert!(matern_correlation(1e4, 1.0, 2.5) < 1e-100);
    }

    #[test]
    fn bessel_route_agrees_with_closed_forms() {
        for &kappa in &[0.5_f64, 1.5, 2.5] {
            for &d in &[0.05_f64, 0.3, 1.0, 2.7, 6.0] {
                let a = (2.0 * kappa).sqrt() * d;
                let general = 2.0_f64.powf(1.0 - kappa) / gamma(kappa) * a.powf(kappa) * bessel_k(kappa, a);
                assert!((general - matern_correlation(d, 1.0, kappa)).abs() < 1e-10, "kappa {kappa} d {d}");
            }
        }
        // Non-half-integer smoothness stays a valid, decreasing correlation.
        let c1 = matern_correlation(0.5, 1.0, 1.0);
        let c2 = matern_correlation(1.0, 1.0, 1.0);
        assert!(c1 < 1.0 && c2 < c1 && c2 > 0.0);
    }

    #[test]
    fn two_point_calibration_inverts_correlation() {
        let g = AreaGraph::from_pairs(2, &[(0, 1)]).unwrap().with_centroids(vec![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let target = matern_correlation(1.0, 1.0, 2.5);
        let range = calibrate_range(&g, target, 2.5, PairSet::All).unwrap();
        assert!((range - 1.0).abs() < 1e-8, "{range}");
    }

    #[test]
    fn calibration_near_one_hits_the_cap() {
        let g = AreaGraph::from_pairs(2, &[(0, 1)]).unwrap().with_centroids(vec![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(calibrate_range(&g, 1.0 - 1e-15, 2.5, PairSet::All), Err(Error::Calibration(_))));
        assert!(calibrate_range(&g, 1.0, 2.5, PairSet::All).is_err());
        let same = AreaGraph::from_pairs(2, &[(0, 1)]).unwrap().with_centroids(vec![[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(calibrate_range(&same, 0.5, 2.5, PairSet::All).is_err());
    }

    #[test]
    fn lattice_calibration_reproduces_target() {
        let g = lattice(16, 16).unwrap();
        let range = calibrate_range(&g, 0.5, 2.5, PairSet::All).unwrap();
        // Recompute the median over all pairs directly.
        let c = g.centroids().unwrap();
        let mut corr = Vec::new();
        for a in 0..c.len() {
            for b in a + 1..c.len() {
                let d = ((c[a][0] - c[b][0]).powi(2) + (c[a][1] - c[b][1]).powi(2)).sqrt();
                corr.push(matern_correlation(d, range, 2.5));
            }
        }
        let med = quantile_sorted(&sorted(&corr), 0.5);
        assert!((med - 0.5).abs() < 1e-6, "{med}");
    }

    #[test]
    fn default_partition_gives_about_ten_percent_boundaries() {
        let g = lattice(16, 16).unwrap();
        assert_eq!(g.n_borders(), 480);
        let truth = true_boundaries(&g, &default_partition(16, 16));
        assert_eq!(truth.iter().filter(|&&t| t).count(), 50);
        let labels = default_partition(16, 16);
        assert_eq!((1..=5).filter(|g| labels.contains(g)).count(), 5);
    }

    #[test]
    fn zero_k1_gives_zero_mean_surface() {
        let mut cfg = SimConfig::lattice_default(6, 6, 0.0, 3.0, 100.0).unwrap();
        cfg.replicates = 1;
        let s = SurfaceGenerator::new(&cfg).unwrap();
        assert!(s.mean.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn k2_zero_metric_ignores_truth() {
        let truth = vec![true, false, true, false];
        let mut a = StreamRng::seed_from_u64(4);
        let mut b = StreamRng::seed_from_u64(4);
        let x = gen_dissimilarity(&truth, 0.0, &mut a);
        let y = gen_dissimilarity(&[false; 4], 0.0, &mut b);
        assert_eq!(x, y);
    }

    #[test]
    fn boundary_metric_mean_shifts_by_k2() {
        let truth = vec![true; 20_000];
        let mut rng = StreamRng::seed_from_u64(8);
        let x = gen_dissimilarity(&truth, 3.0, &mut rng);
        let m = x.iter().sum::<f64>() / x.len() as f64;
        // |N(4, 0.25)| has mean 4 to many digits; SE = 0.5 / sqrt(20000).
        assert!((m - 4.0_f64).abs() < 3.0 * 0.5 / 20_000f64.sqrt(), "{m}");
    }

    #[test]
    fn counts_follow_expected_mean() {
        let reps = 2000;
        let mut rng = StreamRng::seed_from_u64(9);
        let y = gen_counts(&vec![1.0; reps], &vec![1000.0; reps], &mut rng);
        let m = y.iter().sum::<u64>() as f64 / reps as f64;
        assert!((m - 1000.0).abs() < 3.0 * (1000.0 / reps as f64).sqrt(), "{m}");
        assert_eq!(gen_counts(&[0.0], &[5.0], &mut rng), vec![0]);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SimConfig::lattice_default(8, 8, 0.4, 3.0, 100.0).unwrap();
        let s = SurfaceGenerator::new(&cfg).unwrap();
        let a = simulate_replicate(&cfg, &s, &mut stream_rng(5, Stream::Replicate, 2));
        let b = simulate_replicate(&cfg, &s, &mut stream_rng(5, Stream::Replicate, 2));
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.metric, b.metric);
        assert_eq!(a.phi, b.phi);
    }

    #[test]
    fn agreement_scores() {
        let truth = [true, true, false, false, false];
        let det = [true, false, false, true, false];
        let (ba, nba) = agreement(&truth, &det);
        assert_eq!(ba, 50.0);
        assert!((nba - 200.0 / 3.0).abs() < 1e-12);
        let (bias, rmse) = relative_errors(&[1.1, 0.9], &[1.0, 1.0]);
        assert!(bias.abs() < 1e-12);
        assert!((rmse - 10.0).abs() < 1e-9);
    }
}
