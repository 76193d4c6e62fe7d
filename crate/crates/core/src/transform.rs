//! The logarithmic change of variables `z = ln y` and the transformed
//! coefficients
//!
//! ```text
//! λ̃ⁱ(z) = λⁱ(eᶻ)/e^{zᵢ} − ½ Σⱼ (σⁱʲ(eᶻ))² / e^{2zᵢ}
//! σ̃ⁱʲ(z) = σⁱʲ(eᶻ)/e^{zᵢ}
//! ```
//!
//! The squared term uses the Euclidean norm of row `i` of σ.

use crate::error::{Error, Result};
use crate::model::{Matrix, SdeModel};
use crate::state::{LogState, PositiveState};

/// Largest admissible `|zᵢ|`. `e^700` is finite and `e^-700` is positive in `f64`.
pub const SAFE_EXPONENT: f64 = 700.0;

pub fn to_log(y: &PositiveState) -> LogState {
    // ln of a positive finite double is finite.
    LogState::new(y.as_slice().iter().map(|v| v.ln()).collect())
        .expect("log of a positive state is finite")
}

pub fn to_positive(z: &LogState) -> Result<PositiveState> {
    check_exponent(z.as_slice())?;
    PositiveState::new(z.as_slice().iter().map(|v| v.exp()).collect())
}

pub(crate) fn check_exponent(z: &[f64]) -> Result<()> {
    for (i, v) in z.iter().enumerate() {
        if !(v.abs() <= SAFE_EXPONENT) {
            return Err(Error::Overflow {
                component: i,
                value: *v,
                bound: SAFE_EXPONENT,
            });
        }
    }
    Ok(())
}

/// Scratch buffers for evaluating transformed coefficients without allocation.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub(crate) y: Vec<f64>,
    pub(crate) lam: Vec<f64>,
    pub(crate) sig: Vec<f64>,
}

impl Workspace {
    pub fn new(dim: usize, noise_dim: usize) -> Self {
        Self {
            y: vec![0.0; dim],
            lam: vec![0.0; dim],
            sig: vec![0.0; dim * noise_dim],
        }
    }

    pub fn for_model(model: &dyn SdeModel) -> Self {
        Self::new(model.dim(), model.noise_dim())
    }
}

/// Writes `λ̃(z)` into `drift` and `σ̃(z)` (row-major `d × m`) into `diffusion`.
pub(crate) fn log_coefficients_into(
    model: &dyn SdeModel,
    z: &[f64],
    ws: &mut Workspace,
    drift: &mut [f64],
    diffusion: &mut [f64],
) -> Result<()> {
    check_exponent(z)?;
    let m = model.noise_dim();
    for (yi, zi) in ws.y.iter_mut().zip(z) {
        *yi = zi.exp();
    }
    model.drift_into(&ws.y, &mut ws.lam);
    model.diffusion_into(&ws.y, &mut ws.sig);
    for i in 0..z.len() {
        let yi = ws.y[i];
        let row = &ws.sig[i * m..(i + 1) * m];
        let mut sq = 0.0;
        for s in row {
            sq += s * s;
        }
        drift[i] = ws.lam[i] / yi - 0.5 * sq / (yi * yi);
        for (out, s) in diffusion[i * m..(i + 1) * m].iter_mut().zip(row) {
            *out = s / yi;
        }
    }
    Ok(())
}

fn check_dim(model: &dyn SdeModel, z: &LogState) -> Result<()> {
    if z.dim() != model.dim() {
        return Err(Error::Dimension {
            what: "log state",
            expected: model.dim(),
            got: z.dim(),
        });
    }
    Ok(())
}

/// `λ̃(z)`.
pub fn log_drift(model: &dyn SdeModel, z: &LogState) -> Result<Vec<f64>> {
    check_dim(model, z)?;
    let mut ws = Workspace::for_model(model);
    let mut drift = vec![0.0; model.dim()];
    let mut diff = vec![0.0; model.dim() * model.noise_dim()];
    log_coefficients_into(model, z.as_slice(), &mut ws, &mut drift, &mut diff)?;
    Ok(drift)
}

/// `σ̃(z)`.
pub fn log_diffusion(model: &dyn SdeModel, z: &LogState) -> Result<Matrix> {
    check_dim(model, z)?;
    let mut ws = Workspace::for_model(model);
    let mut drift = vec![0.0; model.dim()];
    let mut diff = vec![0.0; model.dim() * model.noise_dim()];
    log_coefficients_into(model, z.as_slice(), &mut ws, &mut drift, &mut diff)?;
    Matrix::from_row_major(model.dim(), model.noise_dim(), diff)
}
