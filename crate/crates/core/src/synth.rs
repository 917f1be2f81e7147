//! Ground-truth linear Gaussian SEM generator used as a test oracle.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{DataError, ReturnsPanel};
use crate::structure::Dag;

/// Coefficient magnitudes drawn by [`SemSpec::random`].
pub const COEF_RANGE: (f64, f64) = (0.3, 0.9);

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("AR coefficient {value} of node {node} is outside (-1, 1)")]
    NonStationary { node: usize, value: f64 },
    #[error("noise sd {value} of node {node} must be positive")]
    InvalidNoise { node: usize, value: f64 },
    #[error("coefficient on {parent} -> {child} does not match a DAG edge or is not finite")]
    InvalidCoefficient { parent: usize, child: usize },
    #[error("{got} entries for {expected} nodes")]
    Length { got: usize, expected: usize },
    #[error("series length {t} too short; need more than {needed}")]
    TooShort { t: usize, needed: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Random DAG over a uniformly random topological order, each forward edge
/// present independently with probability `expected_degree / (n - 1)`.
pub fn random_dag(n: usize, expected_degree: f64, seed: u64) -> Dag {
    let p = if n > 1 { (expected_degree / (n - 1) as f64).clamp(0.0, 1.0) } else { 0.0 };
    random_dag_with_prob(n, p, seed)
}

pub fn random_dag_with_prob(n: usize, p: f64, seed: u64) -> Dag {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                edges.push((order[a], order[b]));
            }
        }
    }
    Dag::from_edges(n, &edges).expect("forward edges of an order are acyclic")
}

/// Linear Gaussian SEM with optional AR(1) terms:
/// `X_i,t = ar_i X_i,t-1 + sum_j beta_ji X_j,t + e_i,t`, `e ~ N(0, sd_i^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemSpec {
    pub dag: Dag,
    /// `(parent, child, beta)` for every DAG edge.
    pub coefficients: Vec<(usize, usize, f64)>,
    pub noise_sd: Vec<f64>,
    pub ar: Vec<f64>,
    pub seed: u64,
}

impl SemSpec {
    /// Unit noise, no AR terms, and coefficients uniform on `±[0.3, 0.9]`.
    pub fn random(dag: Dag, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0ef);
        let coefficients = dag
            .edges()
            .into_iter()
            .map(|(p, c)| {
                let mag = rng.random_range(COEF_RANGE.0..COEF_RANGE.1);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                (p, c, sign * mag)
            })
            .collect();
        let n = dag.n_nodes();
        Self { dag, coefficients, noise_sd: vec![1.0; n], ar: vec![0.0; n], seed }
    }

    pub fn n_nodes(&self) -> usize {
        self.dag.n_nodes()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let n = self.n_nodes();
        for v in [self.noise_sd.len(), self.ar.len()] {
            if v != n {
                return Err(SynthError::Length { got: v, expected: n });
            }
        }
        if let Some((node, &value)) = self.ar.iter().enumerate().find(|(_, a)| !(a.abs() < 1.0)) {
            return Err(SynthError::NonStationary { node, value });
        }
        if let Some((node, &value)) = self.noise_sd.iter().enumerate().find(|(_, s)| !(**s > 0.0) || !s.is_finite()) {
            return Err(SynthError::InvalidNoise { node, value });
        }
        let edges = self.dag.edges();
        for &(parent, child, b) in &self.coefficients {
            if !b.is_finite() || edges.binary_search(&(parent, child)).is_err() {
                return Err(SynthError::InvalidCoefficient { parent, child });
            }
        }
        if self.coefficients.len() != edges.len() {
            return Err(SynthError::Length { got: self.coefficients.len(), expected: edges.len() });
        }
        Ok(())
    }

    /// `B[child, parent] = beta`.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let n = self.n_nodes();
        let mut b = DMatrix::zeros(n, n);
        for &(p, c, beta) in &self.coefficients {
            b[(c, p)] = beta;
        }
        b
    }

    /// Stationary covariance of `X_t`. Without AR terms this is
    /// `(I - B)^-1 D (I - B)^-T`.
    pub fn population_covariance(&self) -> DMatrix<f64> {
        let n = self.n_nodes();
        let inv = (DMatrix::identity(n, n) - self.coefficient_matrix())
            .try_inverse()
            .expect("I - B is unit triangular up to permutation");
        let d = DMatrix::from_diagonal(&DVector::from_iterator(n, self.noise_sd.iter().map(|s| s * s)));
        let innovation = &inv * d * inv.transpose();
        let mut transition = &inv * DMatrix::from_diagonal(&DVector::from_column_slice(&self.ar));
        // Doubling: S_{k+1} = S_k + P_k S_k P_k^T, P_{k+1} = P_k^2.
        let mut cov = innovation;
        for _ in 0..64 {
            if transition.amax() == 0.0 {
                break;
            }
            cov = &cov + &transition * &cov * transition.transpose();
            transition = &transition * &transition;
        }
        cov
    }
}

/// Asset codes `X1..Xn`, zero-padded so lexicographic order is index order.
pub fn node_names(n: usize) -> Vec<String> {
    let width = n.max(1).to_string().len();
    (1..=n).map(|i| format!("X{i:0width$}")).collect()
}

/// `t` consecutive weekdays starting at 2000-01-03.
pub fn business_days(t: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let mut out = Vec::with_capacity(t);
    while out.len() < t {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Simulates `t` observations. The initial state is drawn from the
/// stationary distribution, so the output has no burn-in transient.
pub fn simulate_sem(spec: &SemSpec, t: usize) -> Result<ReturnsPanel, SynthError> {
    spec.validate()?;
    let n = spec.n_nodes();
    let max_parents = (0..n).map(|i| spec.dag.parents(i).len()).max().unwrap_or(0);
    let needed = 10 * (max_parents + 1);
    if t <= needed {
        return Err(SynthError::TooShort { t, needed });
    }
    let b = spec.coefficient_matrix();
    let order = spec.dag.topological_order();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let chol = spec.population_covariance().cholesky().expect("stationary covariance is positive definite");
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let mut prev = chol.l() * z;

    let mut data = DMatrix::zeros(t, n);
    for r in 0..t {
        let mut x = DVector::zeros(n);
        for &i in &order {
            let e: f64 = StandardNormal.sample(&mut rng);
            let parents: f64 = spec.dag.parents(i).iter().map(|&j| b[(i, j)] * x[j]).sum();
            x[i] = spec.ar[i] * prev[i] + parents + spec.noise_sd[i] * e;
        }
        data.set_row(r, &x.transpose());
        prev = x;
    }
    Ok(ReturnsPanel::new(business_days(t), node_names(n), data)?)
}
