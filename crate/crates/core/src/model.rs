//! SDE models `dy = λ(y) dt + σ(y) dB` on the positive cone.
//!
//! A model is a pair of evaluators writing into caller-owned buffers, so the
//! integrators can run without per-step allocation. Diffusion matrices are
//! stored row-major with `dim()` rows and `noise_dim()` columns.

use std::fmt;

use crate::error::{Error, Result};
use crate::state::{check_positive, PositiveState};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                what: "matrix data length",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    what: "matrix row length",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Trace (Frobenius) norm `sqrt(trace(BᵀB))`.
    pub fn norm(&self) -> f64 {
        crate::state::norm(&self.data)
    }
}

/// An SDE with state dimension `d` driven by an `m`-dimensional Brownian motion.
///
/// Evaluators must be pure: equal inputs give bit-identical outputs. They are
/// shared read-only across worker threads.
pub trait SdeModel: Send + Sync {
    fn name(&self) -> &str;

    /// State dimension `d`.
    fn dim(&self) -> usize;

    /// Noise dimension `m`.
    fn noise_dim(&self) -> usize;

    /// Writes `λ(y)` into `out` (length `d`).
    fn drift_into(&self, y: &[f64], out: &mut [f64]);

    /// Writes `σ(y)` into `out`, row-major `d × m`.
    fn diffusion_into(&self, y: &[f64], out: &mut [f64]);

    /// Whether the evaluators are meaningful off the positive cone.
    ///
    /// The truncated EM baseline needs this to keep integrating after a
    /// component turns non-positive.
    fn extends_to_reals(&self) -> bool {
        false
    }

    fn eval_drift(&self, y: &PositiveState) -> Result<Vec<f64>> {
        self.check_state(y.as_slice())?;
        let mut out = vec![0.0; self.dim()];
        self.drift_into(y.as_slice(), &mut out);
        Ok(out)
    }

    fn eval_diffusion(&self, y: &PositiveState) -> Result<Matrix> {
        self.check_state(y.as_slice())?;
        let mut out = Matrix::zeros(self.dim(), self.noise_dim());
        self.diffusion_into(y.as_slice(), &mut out.data);
        Ok(out)
    }

    #[doc(hidden)]
    fn check_state(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::Dimension {
                what: "state",
                expected: self.dim(),
                got: y.len(),
            });
        }
        check_positive(y)
    }
}

/// Stochastic Lotka–Volterra competition model
/// `dy = diag(y)[(b + A y) dt + diag(μ) dB]` with one Brownian channel per species.
#[derive(Debug, Clone, PartialEq)]
pub struct LotkaVolterra {
    name: String,
    b: Vec<f64>,
    a: Matrix,
    mu: Vec<f64>,
}

impl LotkaVolterra {
    pub fn new(b: Vec<f64>, a: Matrix, mu: Vec<f64>) -> Result<Self> {
        let d = b.len();
        if d == 0 {
            return Err(Error::Parameter("empty growth vector".into()));
        }
        if a.rows() != d || a.cols() != d {
            return Err(Error::Dimension {
                what: "interaction matrix",
                expected: d,
                got: if a.rows() != d { a.rows() } else { a.cols() },
            });
        }
        if mu.len() != d {
            return Err(Error::Dimension {
                what: "noise intensities",
                expected: d,
                got: mu.len(),
            });
        }
        if b.iter().chain(a.as_slice()).chain(&mu).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite coefficient".into()));
        }
        Ok(Self {
            name: format!("lv{d}"),
            b,
            a,
            mu,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn growth(&self) -> &[f64] {
        &self.b
    }

    pub fn interaction(&self) -> &Matrix {
        &self.a
    }

    pub fn noise(&self) -> &[f64] {
        &self.mu
    }
}

/// Builds a [`LotkaVolterra`] model from `b`, `A` and `μ`.
pub fn make_lv_model(b: Vec<f64>, a: Matrix, mu: Vec<f64>) -> Result<LotkaVolterra> {
    LotkaVolterra::new(b, a, mu)
}

impl SdeModel for LotkaVolterra {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    fn noise_dim(&self) -> usize {
        self.b.len()
    }

    fn drift_into(&self, y: &[f64], out: &mut [f64]) {
        let d = self.b.len();
        for i in 0..d {
            let mut f = self.b[i];
            for (aij, yj) in self.a.row(i).iter().zip(y) {
                f += aij * yj;
            }
            out[i] = y[i] * f;
        }
    }

    fn diffusion_into(&self, y: &[f64], out: &mut [f64]) {
        let d = self.b.len();
        out.fill(0.0);
        for i in 0..d {
            out[i * d + i] = y[i] * self.mu[i];
        }
    }

    fn extends_to_reals(&self) -> bool {
        true
    }
}

/// The fixed three-species Lotka–Volterra system with state-dependent noise
/// intensities, all three equations driven by one shared Brownian motion.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ThreeSpeciesLv;

impl ThreeSpeciesLv {
    /// Noise intensities `(N1, N2, N3)` so that `σ(y) = (y1 N1, y2 N2, y3 N3)ᵀ`.
    pub fn intensities(y: &[f64]) -> [f64; 3] {
        let s = y[0] + y[1] + y[2];
        let n1 = 7.0 + (y[0].sin() + y[1].sin() + y[2].sin()) / (1.0 + s);
        let n2 = 2.0 + s / (1.0 + s * s);
        let n3 = 5.0 + (y[0].cos() + y[1].cos()) / (1.0 + y[2] * y[2]);
        [n1, n2, n3]
    }
}

/// The three-species preset ("lv3").
pub fn make_lv3_model() -> ThreeSpeciesLv {
    ThreeSpeciesLv
}

impl SdeModel for ThreeSpeciesLv {
    fn name(&self) -> &str {
        "lv3"
    }

    fn dim(&self) -> usize {
        3
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn drift_into(&self, y: &[f64], out: &mut [f64]) {
        out[0] = 50.0 * y[0] - 55.0 * y[0] * y[0];
        out[1] = 30.0 * y[1] - 10.0 * y[1] * y[1];
        out[2] = 20.0 * y[2] - 15.0 * y[2] * y[2];
    }

    fn diffusion_into(&self, y: &[f64], out: &mut [f64]) {
        let n = Self::intensities(y);
        for i in 0..3 {
            out[i] = y[i] * n[i];
        }
    }

    // The rational noise terms are defined off the cone except where
    // `y1 + y2 + y3 = -1`; there the baseline produces non-finite values and
    // the path is counted as having left the cone.
    fn extends_to_reals(&self) -> bool {
        true
    }
}

type Evaluator = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A model assembled from closures.
pub struct FnModel {
    name: String,
    dim: usize,
    noise_dim: usize,
    drift: Evaluator,
    diffusion: Evaluator,
    extends: bool,
}

impl FnModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        noise_dim: usize,
        drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        diffusion: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            noise_dim,
            drift: Box::new(drift),
            diffusion: Box::new(diffusion),
            extends: false,
        }
    }

    /// Declares that the evaluators may be called off the positive cone.
    pub fn extending_to_reals(mut self) -> Self {
        self.extends = true;
        self
    }
}

impl fmt::Debug for FnModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .finish_non_exhaustive()
    }
}

impl SdeModel for FnModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn drift_into(&self, y: &[f64], out: &mut [f64]) {
        (self.drift)(y, out)
    }

    fn diffusion_into(&self, y: &[f64], out: &mut [f64]) {
        (self.diffusion)(y, out)
    }

    fn extends_to_reals(&self) -> bool {
        self.extends
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: &[f64]) -> PositiveState {
        PositiveState::new(v.to_vec()).unwrap()
    }

    fn lv2() -> LotkaVolterra {
        make_lv_model(vec![2.0, 4.0], Matrix::diag(&[-4.0, -4.0]), vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn lv_drift_at_unit_state() {
        assert_eq!(lv2().eval_drift(&ps(&[1.0, 1.0])).unwrap(), vec![-2.0, 0.0]);
    }

    #[test]
    fn zero_coefficient_model_is_inert() {
        let m = make_lv_model(vec![0.0, 0.0], Matrix::zeros(2, 2), vec![0.0, 0.0]).unwrap();
        let y = ps(&[1.0, 1.0]);
        assert_eq!(m.eval_drift(&y).unwrap(), vec![0.0, 0.0]);
        assert_eq!(m.eval_diffusion(&y).unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn lv_diffusion_is_diagonal() {
        let s = lv2().eval_diffusion(&ps(&[3.0, 5.0])).unwrap();
        assert_eq!(s, Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 10.0]]).unwrap());
    }

    #[test]
    fn lv_rejects_dimension_mismatch() {
        assert!(make_lv_model(vec![1.0, 2.0], Matrix::zeros(3, 3), vec![1.0, 1.0]).is_err());
        assert!(make_lv_model(vec![1.0, 2.0], Matrix::zeros(2, 2), vec![1.0]).is_err());
        assert!(lv2().eval_drift(&ps(&[1.0])).is_err());
    }

    #[test]
    fn lv3_drift_values() {
        let m = make_lv3_model();
        assert_eq!(m.eval_drift(&ps(&[1.0, 1.0, 1.0])).unwrap(), vec![-5.0, 20.0, 5.0]);
        assert_eq!(
            m.eval_drift(&ps(&[0.5, 2.0, 1.0])).unwrap(),
            vec![11.25, 20.0, 5.0]
        );
    }

    #[test]
    fn lv3_diffusion_by_hand() {
        let s = make_lv3_model().eval_diffusion(&ps(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!((s.rows(), s.cols()), (3, 1));
        let sin1 = 1f64.sin();
        let cos1 = 1f64.cos();
        assert!((s.get(0, 0) - (7.0 + 3.0 * sin1 / 4.0)).abs() < 1e-14);
        assert!((s.get(0, 0) - 7.6311).abs() < 1e-4);
        assert!((s.get(1, 0) - 2.3).abs() < 1e-14);
        assert!((s.get(2, 0) - (5.0 + cos1)).abs() < 1e-14);
    }

    #[test]
    fn domain_errors_on_boundary() {
        assert!(matches!(
            PositiveState::new(vec![0.0, 1.0, 1.0]),
            Err(Error::Domain { component: 0, .. })
        ));
        let m = make_lv3_model();
        assert!(m.check_state(&[1.0, -1.0, 1.0]).is_err());
    }
}
