//! The evolution flow on the three families of hypo nilpotent differentials:
//! reduced parameter ODEs, numerical integration with first-integral
//! monitoring, orbit classification, and coframe/metric evolution.
//!
//! Family coordinates:
//! * `M1`: `(λ, μ, h, k)` with
//!   `d = (λe³⁵, he³⁵+ke¹⁵, 0, −λe²⁵+he¹⁵+μe³⁵, 0)`;
//! * `M2`: `(x, y, h, k, λ, μ)`, subject to
//!   `rk [[x,y,λ,μ],[h,k,x,y]] < 2`, with
//!   `d = (0, xe³⁴+λe³⁵, 0, x(e¹⁴−e²³)−ye³⁴+λe¹⁵−μe³⁵,
//!         −h(e¹⁴−e²³)+ke³⁴−xe¹⁵+ye³⁵)`;
//! * `M3`: `(λ, μ)` with `d = (0,0,0,0,(λ+μ)e¹²+(λ−μ)e³⁴)`.

pub mod classify;
pub mod coframe;
pub mod rk;

pub use classify::{classify_orbit, OrbitClass, OrbitLabel};
pub use coframe::{coframe_evolve, CoframeConfig, CoframeTrajectory};
pub use rk::{IvpConfig, StopReason};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::liealg::{LieDifferential, DIM};
use crate::scalar::Scalar;
use crate::su2::{is_hypo, standard_triple};
use crate::torsion::{flow_rhs, su2_basis, TorsionError};

/// Relative tolerance for the M2 rank condition and classification margins.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("wrong parameter count for {family:?}: expected {expected}, got {got}")]
    BadParamCount {
        family: Family,
        expected: usize,
        got: usize,
    },
    #[error("M2 rank condition violated: largest minor {0:.3e}")]
    RankCondition(f64),
    #[error("step size underflow at t = {t}; partial trajectory retained")]
    StepSizeUnderflow { t: f64, partial: Box<Trajectory> },
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error(transparent)]
    Torsion(#[from] TorsionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    M1,
    M2,
    M3,
}

impl Family {
    pub fn param_count(&self) -> usize {
        match self {
            Family::M1 => 4,
            Family::M2 => 6,
            Family::M3 => 2,
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Family::M1 => &["lambda", "mu", "h", "k"],
            Family::M2 => &["x", "y", "h", "k", "lambda", "mu"],
            Family::M3 => &["lambda", "mu"],
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(Family::M1),
            "m2" => Ok(Family::M2),
            "m3" => Ok(Family::M3),
            other => Err(format!("unknown family '{other}' (expected m1, m2 or m3)")),
        }
    }
}

/// A parameter point of one of the families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub family: Family,
    pub params: Vec<f64>,
}

impl FamilyPoint {
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self, FlowError> {
        if params.len() != family.param_count() {
            return Err(FlowError::BadParamCount {
                family,
                expected: family.param_count(),
                got: params.len(),
            });
        }
        let p = FamilyPoint { family, params };
        if family == Family::M2 {
            let m = p.m2_rank_residual();
            let scale = p.params.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if m > MEMBERSHIP_TOL * scale * scale {
                return Err(FlowError::RankCondition(m));
            }
        }
        Ok(p)
    }

    /// Largest 2×2 minor of the M2 membership matrix (zero for members).
    pub fn m2_rank_residual(&self) -> f64 {
        assert_eq!(self.family, Family::M2);
        let [x, y, h, k, l, mu] = self.params[..] else {
            unreachable!()
        };
        let minors = [
            x * k - y * h,
            x * x - l * h,
            x * y - mu * h,
            y * x - l * k,
            y * y - mu * k,
            l * y - mu * x,
        ];
        minors.iter().fold(0.0f64, |a, m| a.max(m.abs()))
    }

    pub fn differential(&self) -> LieDifferential<f64> {
        family_differential(self.family, &self.params)
    }

    pub fn rhs(&self) -> Vec<f64> {
        family_rhs(self.family, &self.params)
    }

    pub fn norm_inf(&self) -> f64 {
        self.params.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }
}

/// The family differential at a parameter vector (no membership checks).
pub fn family_differential<S: Scalar>(family: Family, p: &[S]) -> LieDifferential<S> {
    use crate::exterior::Form;
    let mono = |idx: &[usize], c: S| Form::monomial(DIM, idx, c);
    let zero = || Form::<S>::zero(DIM, 2);
    let images: [Form<S>; 5] = match family {
        Family::M1 => {
            let [l, mu, h, k] = [&p[0], &p[1], &p[2], &p[3]];
            [
                mono(&[3, 5], l.clone()),
                mono(&[3, 5], h.clone()).add(&mono(&[1, 5], k.clone())),
                zero(),
                // (−λe² + he¹ + μe³) ∧ e⁵
                mono(&[2, 5], -l.clone())
                    .add(&mono(&[1, 5], h.clone()))
                    .add(&mono(&[3, 5], mu.clone())),
                zero(),
            ]
        }
        Family::M2 => {
            let [x, y, h, k, l, mu] = [&p[0], &p[1], &p[2], &p[3], &p[4], &p[5]];
            [
                zero(),
                mono(&[3, 4], x.clone()).add(&mono(&[3, 5], l.clone())),
                zero(),
                mono(&[1, 4], x.clone())
                    .add(&mono(&[2, 3], -x.clone()))
                    .add(&mono(&[3, 4], -y.clone()))
                    .add(&mono(&[1, 5], l.clone()))
                    .add(&mono(&[3, 5], -mu.clone())),
                mono(&[1, 4], -h.clone())
                    .add(&mono(&[2, 3], h.clone()))
                    .add(&mono(&[3, 4], k.clone()))
                    .add(&mono(&[1, 5], -x.clone()))
                    .add(&mono(&[3, 5], y.clone())),
            ]
        }
        Family::M3 => {
            let [l, mu] = [&p[0], &p[1]];
            [
                zero(),
                zero(),
                zero(),
                zero(),
                mono(&[1, 2], l.clone() + mu.clone()).add(&mono(&[3, 4], l.clone() - mu.clone())),
            ]
        }
    };
    LieDifferential::new(images).expect("family images are grade-2")
}

/// Right-hand side of the reduced ODE on the family parameters.
pub fn family_rhs_generic<S: Scalar>(family: Family, p: &[S]) -> Vec<S> {
    let half = |x: S| x / S::from_int(2);
    let three_half = |x: S| x * S::from_int(3) / S::from_int(2);
    let two = S::from_int(2);
    match family {
        Family::M1 => {
            let [l, mu, h, k] = [&p[0], &p[1], &p[2], &p[3]];
            vec![
                -(mu.clone() * l.clone()),
                -(three_half(mu.clone() * mu.clone())
                    + two.clone() * h.clone() * h.clone()
                    + two * l.clone() * l.clone()
                    + half(mu.clone() * k.clone())),
                -(mu.clone() * h.clone()) - S::from_int(2) * h.clone() * k.clone(),
                -half(mu.clone() * k.clone()) - three_half(k.clone() * k.clone()),
            ]
        }
        Family::M2 => {
            let [x, y, h, k, l, mu] = [&p[0], &p[1], &p[2], &p[3], &p[4], &p[5]];
            let s = mu.clone() + k.clone();
            let sigma = h.clone() + l.clone();
            vec![
                x.clone() * s.clone(),
                two.clone() * x.clone() * sigma.clone() + three_half(y.clone() * s.clone()),
                h.clone() * s.clone(),
                two.clone() * h.clone() * sigma.clone() + three_half(k.clone() * s.clone()),
                l.clone() * s.clone(),
                two * l.clone() * sigma + three_half(mu.clone() * s),
            ]
        }
        Family::M3 => {
            let [l, mu] = [&p[0], &p[1]];
            vec![
                mu.clone() * mu.clone() + S::from_int(2) * l.clone() * l.clone(),
                S::from_int(3) * l.clone() * mu.clone(),
            ]
        }
    }
}

pub fn family_rhs(family: Family, p: &[f64]) -> Vec<f64> {
    family_rhs_generic(family, p)
}

/// A named first integral evaluated at a point; `None` where the defining
/// denominator vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedIntegral {
    pub name: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstIntegralSet {
    pub family: Family,
    pub values: Vec<NamedIntegral>,
}

/// Numerator, denominator and their gradients for the rational first
/// integrals, shared by the floating evaluation and the exact conservation
/// test.
fn integral_parts<S: Scalar>(family: Family, idx: usize, p: &[S]) -> (S, S, Vec<S>, Vec<S>) {
    let int = S::from_int;
    match (family, idx) {
        (Family::M1, 0) => {
            // (h² − λ² − kμ) / (hλ)
            let [l, mu, h, k] = [&p[0], &p[1], &p[2], &p[3]];
            let n = h.clone() * h.clone() - l.clone() * l.clone() - k.clone() * mu.clone();
            let d = h.clone() * l.clone();
            let gn = vec![
                -(int(2) * l.clone()),
                -k.clone(),
                int(2) * h.clone(),
                -mu.clone(),
            ];
            let gd = vec![h.clone(), S::zero(), l.clone(), S::zero()];
            (n, d, gn, gd)
        }
        (Family::M1, 1) => {
            // k⁴λ / h³
            let [l, _mu, h, k] = [&p[0], &p[1], &p[2], &p[3]];
            let k2 = k.clone() * k.clone();
            let k3 = k2.clone() * k.clone();
            let n = k3.clone() * k.clone() * l.clone();
            let d = h.clone() * h.clone() * h.clone();
            let gn = vec![
                k3.clone() * k.clone(),
                S::zero(),
                S::zero(),
                int(4) * k3 * l.clone(),
            ];
            let gd = vec![
                S::zero(),
                S::zero(),
                int(3) * h.clone() * h.clone(),
                S::zero(),
            ];
            (n, d, gn, gd)
        }
        (Family::M1, 2) => {
            // k²(6h² − 2λ² − 3μk + 3k²) / h³
            let [l, mu, h, k] = [&p[0], &p[1], &p[2], &p[3]];
            let k2 = k.clone() * k.clone();
            let inner = int(6) * h.clone() * h.clone()
                - int(2) * l.clone() * l.clone()
                - int(3) * mu.clone() * k.clone()
                + int(3) * k2.clone();
            let n = k2.clone() * inner;
            let d = h.clone() * h.clone() * h.clone();
            let gn = vec![
                -(int(4) * l.clone() * k2.clone()),
                -(int(3) * k2.clone() * k.clone()),
                int(12) * h.clone() * k2.clone(),
                int(12) * h.clone() * h.clone() * k.clone()
                    - int(4) * l.clone() * l.clone() * k.clone()
                    - int(9) * mu.clone() * k2.clone()
                    + int(12) * k2 * k.clone(),
            ];
            let gd = vec![
                S::zero(),
                S::zero(),
                int(3) * h.clone() * h.clone(),
                S::zero(),
            ];
            (n, d, gn, gd)
        }
        (Family::M2, 0) => {
            // (h+λ)³ / ((μ+k)² + 4(h+λ)²), params (x,y,h,k,λ,μ)
            let [_x, _y, h, k, l, mu] = [&p[0], &p[1], &p[2], &p[3], &p[4], &p[5]];
            let sigma = h.clone() + l.clone();
            let s = mu.clone() + k.clone();
            let n = sigma.clone() * sigma.clone() * sigma.clone();
            let d = s.clone() * s.clone() + int(4) * sigma.clone() * sigma.clone();
            let dsig = int(3) * sigma.clone() * sigma.clone();
            let gn = vec![
                S::zero(),
                S::zero(),
                dsig.clone(),
                S::zero(),
                dsig,
                S::zero(),
            ];
            let dd_sig = int(8) * sigma;
            let dd_s = int(2) * s;
            let gd = vec![
                S::zero(),
                S::zero(),
                dd_sig.clone(),
                dd_s.clone(),
                dd_sig,
                dd_s,
            ];
            (n, d, gn, gd)
        }
        (Family::M3, 0) => {
            // (λ² − μ²)³ / μ⁴
            let [l, mu] = [&p[0], &p[1]];
            let q = l.clone() * l.clone() - mu.clone() * mu.clone();
            let q2 = q.clone() * q.clone();
            let n = q2.clone() * q.clone();
            let mu2 = mu.clone() * mu.clone();
            let d = mu2.clone() * mu2.clone();
            let gn = vec![int(6) * l.clone() * q2.clone(), -(int(6) * mu.clone() * q2)];
            let gd = vec![S::zero(), int(4) * mu2 * mu.clone()];
            (n, d, gn, gd)
        }
        _ => panic!("no integral {idx} for {family:?}"),
    }
}

fn integral_count(family: Family) -> usize {
    match family {
        Family::M1 => 3,
        Family::M2 => 1,
        Family::M3 => 1,
    }
}

fn integral_name(family: Family, idx: usize) -> &'static str {
    match (family, idx) {
        (Family::M1, 0) => "(h^2-lambda^2-k*mu)/(h*lambda)",
        (Family::M1, 1) => "k^4*lambda/h^3",
        (Family::M1, 2) => "k^2*(6h^2-2lambda^2-3mu*k+3k^2)/h^3",
        (Family::M2, 0) => "(h+lambda)^3/((mu+k)^2+4(h+lambda)^2)",
        (Family::M3, 0) => "(lambda^2-mu^2)^3/mu^4",
        _ => unreachable!(),
    }
}

/// Evaluate the named first integrals; entries whose denominator is below
/// the relative floor are flagged undefined rather than computed.
pub fn first_integrals(p: &FamilyPoint) -> FirstIntegralSet {
    first_integrals_at(p.family, &p.params)
}

pub fn first_integrals_at(family: Family, params: &[f64]) -> FirstIntegralSet {
    let scale = params.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let values = (0..integral_count(family))
        .map(|idx| {
            let (n, d, _, _) = integral_parts::<f64>(family, idx, params);
            // the denominators are homogeneous of degree 2, 3, 3, 2, 4
            let deg = match (family, idx) {
                (Family::M1, 0) => 2,
                (Family::M1, 1) | (Family::M1, 2) => 3,
                (Family::M2, 0) => 2,
                (Family::M3, 0) => 4,
                _ => unreachable!(),
            };
            let floor = 1e-12 * scale.powi(deg);
            let value = if d.abs() > floor { Some(n / d) } else { None };
            NamedIntegral {
                name: integral_name(family, idx).to_string(),
                value,
            }
        })
        .collect();
    FirstIntegralSet { family, values }
}

/// Exact defect `Ṅ·D − N·Ḋ` of the idx-th integral along the flow; zero as a
/// polynomial identity, checkable at rational points.
pub fn conservation_defect_exact<S: Scalar>(family: Family, idx: usize, p: &[S]) -> S {
    let (n, d, gn, gd) = integral_parts(family, idx, p);
    let f = family_rhs_generic(family, p);
    let dot = |g: &[S]| -> S {
        let mut acc = S::zero();
        for (gi, fi) in g.iter().zip(f.iter()) {
            acc = acc + gi.clone() * fi.clone();
        }
        acc
    };
    dot(&gn) * d - n * dot(&gd)
}

/// One recorded sample of an integrated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: Vec<f64>,
    pub integrals: Vec<Option<f64>>,
    pub hypo_residual: f64,
}

/// An integrated parameter trajectory with per-sample diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub family: Family,
    pub params0: Vec<f64>,
    pub t_span: (f64, f64),
    pub config: IvpConfig,
    pub samples: Vec<TrajectorySample>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub blown_up: bool,
    #[serde(skip)]
    pub derivs: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Cubic Hermite interpolation of the parameter state.
    pub fn sample_state(&self, t: f64) -> Vec<f64> {
        let sol = rk::IvpSolution {
            ts: self.samples.iter().map(|s| s.t).collect(),
            ys: self.samples.iter().map(|s| s.state.clone()).collect(),
            fs: if self.derivs.len() == self.samples.len() {
                self.derivs.clone()
            } else {
                self.samples
                    .iter()
                    .map(|s| family_rhs(self.family, &s.state))
                    .collect()
            },
            steps_accepted: self.steps_accepted,
            steps_rejected: self.steps_rejected,
            stop: rk::StopReason::Completed,
        };
        sol.sample_at(t)
    }

    /// Worst relative drift of each defined first integral against its
    /// initial value.
    pub fn integral_drifts(&self) -> Vec<Option<f64>> {
        let count = self.samples[0].integrals.len();
        (0..count)
            .map(|i| {
                let first = self.samples[0].integrals[i]?;
                let mut worst = 0.0f64;
                for s in &self.samples {
                    let v = s.integrals[i]?;
                    worst = worst.max((v - first).abs() / first.abs().max(1e-12));
                }
                Some(worst)
            })
            .collect()
    }
}

/// Integrate the reduced ODE of a family point, recording first integrals
/// and the hypo residual at every accepted step. Stops early with the
/// blow-up flag when the state norm exceeds the configured ceiling.
pub fn integrate(
    p0: &FamilyPoint,
    t_span: (f64, f64),
    cfg: &IvpConfig,
) -> Result<Trajectory, FlowError> {
    let family = p0.family;
    let rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>, String> { Ok(family_rhs(family, y)) };
    let result = rk::integrate_ivp(rhs, t_span.0, t_span.1, &p0.params, cfg, &[]);
    let (sol, underflow_t) = match result {
        Ok(sol) => (sol, None),
        Err((rk::IvpError::StepSizeUnderflow { t }, partial)) => (partial, Some(t)),
        Err((e, _)) => return Err(FlowError::Integrator(e.to_string())),
    };
    let triple = standard_triple();
    let samples: Vec<TrajectorySample> = sol
        .ts
        .iter()
        .zip(&sol.ys)
        .map(|(&t, y)| {
            let d = family_differential(family, y);
            TrajectorySample {
                t,
                state: y.clone(),
                integrals: first_integrals_at(family, y)
                    .values
                    .into_iter()
                    .map(|v| v.value)
                    .collect(),
                hypo_residual: is_hypo(&d, &triple),
            }
        })
        .collect();
    let traj = Trajectory {
        family,
        params0: p0.params.clone(),
        t_span,
        config: cfg.clone(),
        samples,
        steps_accepted: sol.steps_accepted,
        steps_rejected: sol.steps_rejected,
        blown_up: sol.stop == rk::StopReason::BlowUp,
        derivs: sol.fs,
    };
    match underflow_t {
        Some(t) => Err(FlowError::StepSizeUnderflow {
            t,
            partial: Box::new(traj),
        }),
        None => Ok(traj),
    }
}

/// Split the flow tangent at a family point into an su(2) frame motion plus
/// a family-parameter velocity, by least squares over the spanning
/// directions. Returns the parameter velocity and the residual.
///
/// For M3 (and the `x = 0` slice of M2) the su(2) part vanishes and the
/// tangent is already tangent to the parametrisation; at generic M1 and M2
/// points a nonzero frame motion is removed.
pub fn project_family_tangent(p: &FamilyPoint) -> Result<(Vec<f64>, f64), FlowError> {
    let d = p.differential();
    let xt = flow_rhs(&d, crate::torsion::HYPO_TOL)?;
    let target = xt.to_flat();

    let nparams = p.family.param_count();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for z in su2_basis() {
        let rows = crate::torsion::matrix_rows(&z);
        columns.push(crate::liealg::mu_star(&rows, &d).to_flat());
    }
    for j in 0..nparams {
        let mut unit = vec![0.0; nparams];
        unit[j] = 1.0;
        columns.push(family_differential(p.family, &unit).to_flat());
    }
    let a = DMatrix::from_fn(50, columns.len(), |r, c| columns[c][r]);
    let b = nalgebra::DVector::from_vec(target.clone());
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&b, 1e-13).expect("least squares");
    let residual = (&a * &sol - &b).norm();
    Ok((sol.as_slice()[3..3 + nparams].to_vec(), residual))
}
