//! Co-integration of the differential and an adapted coframe along the
//! evolution flow: `d' = μ_{*e}(X̂)d` and `(e^i)' = Σ_j X̂_{ij} e^j`, i.e.
//! `U' = X̂ U` for the matrix of coframe rows. The metric at time `t` is the
//! one making the evolved coframe orthonormal, `g_t = UᵀU` in the fixed
//! frame, and it satisfies `g' = 2 g Q` with `Q = U⁻¹ X̂ U`.

use nalgebra::Matrix5;

use super::rk::{integrate_ivp, IvpConfig, IvpError, StopReason};
use super::FlowError;
use crate::liealg::{mu_action, mu_star, GLTransform, LieDifferential, DIM};
use crate::torsion::{gauge_matrix_at, matrix_rows};

#[derive(Debug, Clone, PartialEq)]
pub struct CoframeConfig {
    pub ivp: IvpConfig,
    /// Relative hypo tolerance for the gauge matrix along the flow; looser
    /// than the fixture tolerance because integration error accumulates.
    pub rhs_tol: f64,
}

impl Default for CoframeConfig {
    fn default() -> Self {
        CoframeConfig {
            ivp: IvpConfig::default(),
            rhs_tol: 1e-6,
        }
    }
}

/// Time series of the co-integrated flow.
#[derive(Debug, Clone)]
pub struct CoframeTrajectory {
    pub ts: Vec<f64>,
    pub d: Vec<LieDifferential<f64>>,
    /// Coframe rows: `e^i(t) = Σ_j U_ij η^j` in the fixed initial frame.
    pub u: Vec<Matrix5<f64>>,
    /// Gauge matrices `X̂(t)` in the evolved frame.
    pub xhat: Vec<Matrix5<f64>>,
    pub blown_up: bool,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl CoframeTrajectory {
    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// Metric Gram matrix in the fixed frame at sample `i`.
    pub fn gram(&self, i: usize) -> Matrix5<f64> {
        self.u[i].transpose() * self.u[i]
    }

    /// Gauge matrix expressed in the fixed frame, `Q_η = U⁻¹ X̂ U`.
    pub fn gauge_fixed_frame(&self, i: usize) -> Option<Matrix5<f64>> {
        let uinv = self.u[i].try_inverse()?;
        Some(uinv * self.xhat[i] * self.u[i])
    }

    /// Residual of the frame-compatibility identity at sample `i`: the
    /// initial differential expressed in the evolved coframe must equal
    /// `d(t)`.
    pub fn compatibility_residual(&self, d0: &LieDifferential<f64>, i: usize) -> f64 {
        let ut: Vec<Vec<f64>> = (0..DIM)
            .map(|r| (0..DIM).map(|c| self.u[i][(c, r)]).collect())
            .collect();
        match GLTransform::new(ut).and_then(|g| mu_action(&g, d0)) {
            Ok(expressed) => expressed.add(&self.d[i].scaled(&-1.0)).norm_inf(),
            Err(_) => f64::INFINITY,
        }
    }
}

fn pack(d: &LieDifferential<f64>, u: &Matrix5<f64>) -> Vec<f64> {
    let mut y = d.to_flat();
    for i in 0..DIM {
        for j in 0..DIM {
            y.push(u[(i, j)]);
        }
    }
    y
}

fn unpack(y: &[f64]) -> (LieDifferential<f64>, Matrix5<f64>) {
    let d = LieDifferential::from_flat(&y[..50]);
    let u = Matrix5::from_fn(|i, j| y[50 + i * DIM + j]);
    (d, u)
}

/// Integrate the coupled system from `d0` with the identity coframe.
/// `sample_times` forces mesh nodes (useful for finite-difference stencils).
pub fn coframe_evolve(
    d0: &LieDifferential<f64>,
    t_span: (f64, f64),
    cfg: &CoframeConfig,
    sample_times: &[f64],
) -> Result<CoframeTrajectory, FlowError> {
    let rhs_tol = cfg.rhs_tol;
    let rhs = move |_t: f64, y: &[f64]| -> Result<Vec<f64>, String> {
        let (d, u) = unpack(y);
        let xhat = gauge_matrix_at(&d, rhs_tol).map_err(|e| e.to_string())?;
        let dd = mu_star(&matrix_rows(&xhat), &d);
        let du = xhat * u;
        Ok(pack(&dd, &du))
    };
    let y0 = pack(d0, &Matrix5::identity());
    let sol = match integrate_ivp(rhs, t_span.0, t_span.1, &y0, &cfg.ivp, sample_times) {
        Ok(sol) => sol,
        Err((IvpError::StepSizeUnderflow { t }, _partial)) => {
            return Err(FlowError::Integrator(format!(
                "step size underflow at t = {t}"
            )))
        }
        Err((e, _)) => return Err(FlowError::Integrator(e.to_string())),
    };
    let mut out = CoframeTrajectory {
        ts: sol.ts.clone(),
        d: Vec::with_capacity(sol.ts.len()),
        u: Vec::with_capacity(sol.ts.len()),
        xhat: Vec::with_capacity(sol.ts.len()),
        blown_up: sol.stop == StopReason::BlowUp,
        steps_accepted: sol.steps_accepted,
        steps_rejected: sol.steps_rejected,
    };
    for y in &sol.ys {
        let (d, u) = unpack(y);
        let xhat = gauge_matrix_at(&d, rhs_tol).map_err(FlowError::Torsion)?;
        out.d.push(d);
        out.u.push(u);
        out.xhat.push(xhat);
    }
    Ok(out)
}
