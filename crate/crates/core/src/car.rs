//! Leroux conditional autoregressive prior on the log-risk surface.
//!
//! `phi ~ N(mu 1, tau2 Q^{-1})` with `Q = rho W* + (1 - rho) I`, where `W*`
//! has the kept-border counts on its diagonal and `-w_kj` off it.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{AdjacencyState, AreaGraph};
use crate::scalar::Real;
use crate::sparse::{CholeskyFactor, SymbolicCholesky};

#[derive(Debug, Clone, PartialEq)]
pub struct CarParams<T> {
    pub mu: T,
    pub tau2: T,
    pub rho: T,
    pub alpha: Vec<T>,
}

impl<T: Real> CarParams<T> {
    pub fn new(mu: T, tau2: T, rho: T, alpha: Vec<T>) -> Result<Self> {
        let p = CarParams { mu, tau2, rho, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau2 > T::zero()) || !self.tau2.is_finite() {
            return Err(Error::InvalidParameter(format!("tau2 must be positive, got {}", self.tau2)));
        }
        check_rho(self.rho)?;
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        Ok(())
    }
}

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if !(rho >= T::zero() && rho < T::one()) {
        return Err(Error::InvalidParameter(format!("rho must lie in [0, 1), got {rho}")));
    }
    Ok(())
}

/// Symbolic analysis of one graph's precision pattern, reused for every
/// border configuration and every value of `rho`.
#[derive(Debug, Clone)]
pub struct PrecisionBuilder {
    sym: Arc<SymbolicCholesky>,
    borders: Arc<Vec<(usize, usize)>>,
    diag_slots: Vec<usize>,
    border_slots: Vec<usize>,
}

impl PrecisionBuilder {
    pub fn new(graph: &AreaGraph) -> Self {
        let sym = SymbolicCholesky::analyze(graph.n(), graph.borders());
        let diag_slots = (0..graph.n()).map(|k| sym.slot(k, k)).collect();
        let border_slots = graph.borders().iter().map(|&(k, j)| sym.slot(k, j)).collect();
        PrecisionBuilder {
            sym: Arc::new(sym),
            borders: Arc::new(graph.borders().to_vec()),
            diag_slots,
            border_slots,
        }
    }

    pub fn symbolic(&self) -> &SymbolicCholesky {
        &self.sym
    }

    pub fn build<T: Real>(&self, adj: &AdjacencyState, rho: T) -> Result<PrecisionStructure<T>> {
        check_rho(rho)?;
        let n = self.diag_slots.len();
        if adj.row_sums.len() != n || adj.w.len() != self.borders.len() {
            return Err(Error::LengthMismatch { what: "adjacency state", got: adj.w.len(), expected: self.borders.len() });
        }
        let one_minus = T::one() - rho;
        let diag: Vec<T> = adj.row_sums.iter().map(|&s| rho * T::of_usize(s) + one_minus).collect();
        let off: Vec<T> = adj.w.iter().map(|&w| if w { -rho } else { T::zero() }).collect();
        let mut values = vec![T::zero(); self.sym.nnz_upper()];
        for (k, &slot) in self.diag_slots.iter().enumerate() {
            values[slot] = diag[k];
        }
        for (b, &slot) in self.border_slots.iter().enumerate() {
            values[slot] = off[b];
        }
        let factor = self.sym.factor(&values)?;
        let log_det = factor.log_det(&self.sym);
        Ok(PrecisionStructure {
            rho,
            diag,
            off,
            log_det,
            factor,
            sym: Arc::clone(&self.sym),
            borders: Arc::clone(&self.borders),
        })
    }
}

/// `Q = rho W* + (1 - rho) I` with its factorisation and log-determinant.
#[derive(Debug, Clone)]
pub struct PrecisionStructure<T> {
    rho: T,
    diag: Vec<T>,
    off: Vec<T>,
    log_det: T,
    factor: CholeskyFactor<T>,
    sym: Arc<SymbolicCholesky>,
    borders: Arc<Vec<(usize, usize)>>,
}

/// One-off convenience wrapper; MCMC code keeps a [`PrecisionBuilder`].
pub fn build_precision<T: Real>(
    graph: &AreaGraph,
    adj: &AdjacencyState,
    rho: T,
) -> Result<PrecisionStructure<T>> {
    PrecisionBuilder::new(graph).build(adj, rho)
}

impl<T: Real> PrecisionStructure<T> {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn log_det(&self) -> T {
        self.log_det
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    /// Off-diagonal value `Q_kj` for each border, in graph border order.
    pub fn border_values(&self) -> &[T] {
        &self.off
    }

    /// `x^T Q x`.
    pub fn quad_form(&self, x: &[T]) -> T {
        let two = T::of(2.0);
        let d: T = self.diag.iter().zip(x).map(|(&q, &v)| q * v * v).sum();
        let o: T = self
            .borders
            .iter()
            .zip(&self.off)
            .map(|(&(k, j), &q)| q * x[k] * x[j])
            .sum();
        d + two * o
    }

    /// `Q x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out: Vec<T> = self.diag.iter().zip(x).map(|(&q, &v)| q * v).collect();
        for (&(k, j), &q) in self.borders.iter().zip(&self.off) {
            out[k] = out[k] + q * x[j];
            out[j] = out[j] + q * x[k];
        }
        out
    }

    /// Solves `Q x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.factor.solve(&self.sym, b)
    }

    /// Dense copy of `Q`, row-major.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.n();
        let mut m = vec![vec![T::zero(); n]; n];
        for k in 0..n {
            m[k][k] = self.diag[k];
        }
        for (&(k, j), &q) in self.borders.iter().zip(&self.off) {
            m[k][j] = q;
            m[j][k] = q;
        }
        m
    }

    /// Draw from `N(mu 1, tau2 Q^{-1})`.
    pub fn sample<R: Rng + ?Sized>(&self, mu: T, tau2: T, rng: &mut R) -> Vec<T> {
        let z: Vec<T> = (0..self.n()).map(|_| T::std_normal(rng)).collect();
        let sd = tau2.sqrt();
        self.factor.solve_lt(&self.sym, &z).into_iter().map(|v| mu + sd * v).collect()
    }
}

/// Log-density of `phi` under the CAR prior, normalising constant included.
///
/// `mu` and `tau2` come from `params`; `Q` (and hence `rho` and the border
/// pattern) from `prec`.
pub fn log_density_phi<T: Real>(phi: &[T], params: &CarParams<T>, prec: &PrecisionStructure<T>) -> Result<T> {
    if phi.len() != prec.n() {
        return Err(Error::LengthMismatch { what: "phi", got: phi.len(), expected: prec.n() });
    }
    let centred: Vec<T> = phi.iter().map(|&p| p - params.mu).collect();
    Ok(log_density_centred(prec.quad_form(&centred), params.tau2, prec))
}

/// Density from a pre-computed quadratic form `(phi - mu)^T Q (phi - mu)`.
pub(crate) fn log_density_centred<T: Real>(quad: T, tau2: T, prec: &PrecisionStructure<T>) -> T {
    let half = T::of(0.5);
    let n = T::of_usize(prec.n());
    -half * n * (T::TAU() * tau2).ln() + half * prec.log_det() - half * quad / tau2
}

/// Mean and variance of `phi_k` given every other component.
pub fn full_conditional_phi<T: Real>(
    k: usize,
    phi: &[T],
    params: &CarParams<T>,
    graph: &AreaGraph,
    adj: &AdjacencyState,
) -> (T, T) {
    let rho = params.rho;
    let mut sum = T::zero();
    for &(j, b) in graph.incident(k) {
        if adj.w[b] {
            sum = sum + phi[j];
        }
    }
    let denom = rho * T::of_usize(adj.row_sums[k]) + T::one() - rho;
    ((rho * sum + (T::one() - rho) * params.mu) / denom, params.tau2 / denom)
}
