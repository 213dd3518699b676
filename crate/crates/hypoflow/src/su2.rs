//! SU(2)-structures on a 5-dimensional oriented vector space.
//!
//! A structure is encoded either by a triple `(ω₁, ψ₂, ψ₃)` of a 2-form and
//! two 3-forms together with an orientation, or by a quadruple
//! `(α, ω₁, ω₂, ω₃)`. The triple form is intrinsic; [`validate`] tests the
//! five defining conditions and recovers the quadruple:
//!
//! * `α_{ψ₂} = α_{ψ₃}`,
//! * `ω₁ ∧ ψ₂ = 0 = ω₁ ∧ ψ₃`,
//! * `(X_{ω₁} ⌟ ψ₂) ∧ ψ₃ = 0`,
//! * `V²(ω₁, ψ₂) > 0`,
//! * `ω₁(Y, Z) ≥ 0` whenever `Y ⌟ ψ₂ = Z ⌟ ψ₃`,
//!
//! with `X_ω = A(ω²)`, `α_ψ = A*((Aψ)²)` and `V²(ω, ψ) = α_ψ(X_ω)`.
//! Scalars here are quoted relative to the standard volume `e^{12345}`
//! (so "`V² > 0`" is a plain sign test).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::exterior::{
    big_a, big_a_star, contract, evaluate1, top_coefficient, wedge, wedge_mv, Form, MultiVector,
    WeightedForm, WeightedMultiVector,
};
use crate::liealg::{extend_d, LieDifferential, DIM};

/// Default relative tolerance for the equality conditions; inputs are exact
/// expressions, so residuals are round-off.
pub const VALIDATE_TOL: f64 = 1e-9;

/// `V²` below this multiple of the input scale is treated as degenerate.
pub const V2_DEGENERATE: f64 = 1e-18;

pub type F = Form<f64>;
pub type Mv = MultiVector<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Su2Error {
    #[error("triple rejected: {0}")]
    Rejected(RejectionReport),
    #[error("V² = {0:.3e} is not positive")]
    NonPositiveV2(f64),
    #[error("V² = {0:.3e} is degenerate (below {1:.1e} of scale)")]
    DegenerateV2(f64, f64),
    #[error("quadruple is not a valid SU(2)-structure: {0}")]
    InvalidQuadruple(String),
    #[error("form has wrong shape for this operation")]
    Shape,
}

/// Names of the five conditions of the validity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Condition {
    AlphaAgreement,
    Omega1Psi2,
    Omega1Psi3,
    CrossContraction,
    PositiveV2,
    SignCondition,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConditionResidual {
    pub condition: Condition,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RejectionReport {
    pub residuals: Vec<ConditionResidual>,
}

impl std::fmt::Display for RejectionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let failed: Vec<String> = self
            .residuals
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{:?} (residual {:.3e})", r.condition, r.residual))
            .collect();
        write!(f, "failed conditions: {}", failed.join(", "))
    }
}

/// The defining forms `(ω₁, ψ₂, ψ₃)` plus background orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct SU2Triple {
    pub omega1: F,
    pub psi2: F,
    pub psi3: F,
    /// +1 or −1: sign of the chosen volume form relative to `e^{12345}`.
    pub orientation: i8,
}

/// The quadruple description `(α, ω₁, ω₂, ω₃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SU2Quadruple {
    pub alpha: F,
    pub omega1: F,
    pub omega2: F,
    pub omega3: F,
}

/// Outcome of a successful validation: the recovered quadruple together with
/// the Reeb-type vector `X` (with `α(X) = 1`) and the volume scalar `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSU2 {
    pub quadruple: SU2Quadruple,
    pub x: Mv,
    pub v: f64,
    pub residuals: Vec<ConditionResidual>,
}

/// A point of the Hamiltonian phase space: `(ω₁, ψ₂, ψ₃, υ)` with both
/// volume functionals positive.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianPoint {
    pub omega1: F,
    pub psi2: F,
    pub psi3: F,
    pub upsilon: F,
}

/// The model triple stabilised by SU(2) ⊂ GL⁺(5,ℝ).
pub fn standard_triple() -> SU2Triple {
    SU2Triple {
        omega1: F::monomial(DIM, &[1, 2], 1.0).add(&F::monomial(DIM, &[3, 4], 1.0)),
        psi2: F::monomial(DIM, &[1, 3, 5], 1.0).add(&F::monomial(DIM, &[4, 2, 5], 1.0)),
        psi3: F::monomial(DIM, &[1, 4, 5], 1.0).add(&F::monomial(DIM, &[2, 3, 5], 1.0)),
        orientation: 1,
    }
}

pub fn standard_quadruple() -> SU2Quadruple {
    SU2Quadruple {
        alpha: F::basis(DIM, 5),
        omega1: F::monomial(DIM, &[1, 2], 1.0).add(&F::monomial(DIM, &[3, 4], 1.0)),
        omega2: F::monomial(DIM, &[1, 3], 1.0).add(&F::monomial(DIM, &[4, 2], 1.0)),
        omega3: F::monomial(DIM, &[1, 4], 1.0).add(&F::monomial(DIM, &[2, 3], 1.0)),
    }
}

/// `X_ω = A(ω ∧ ω)`, a volume-weighted vector; depends on `ω` only through `ω²`.
pub fn x_of(omega: &F) -> WeightedMultiVector<f64> {
    let sq = wedge(omega, omega).expect("ω² of a 2-form");
    big_a(&sq)
}

/// `X_υ = 2 A(υ)` for a 4-form, normalised so `X_υ = X_ω` when `υ = ½ω²`.
pub fn x_of4(upsilon: &F) -> WeightedMultiVector<f64> {
    let mut out = big_a(upsilon);
    out.value = out.value.scaled(&2.0);
    out
}

/// `α_ψ = A*((Aψ)²)`, a volume-weighted 1-form.
pub fn alpha_of(psi: &F) -> WeightedForm<f64> {
    let a_psi = big_a(psi);
    let sq = wedge_mv(&a_psi.value, &a_psi.value).expect("square of a 2-vector");
    let mut out = big_a_star(&sq);
    // (Aψ)² carries vol², A* contributes one inverse volume: net weight one.
    out.vol.scale *= a_psi.vol.scale * a_psi.vol.scale;
    out
}

/// `V²(ω, ψ) = α_ψ(X_ω)`, as a multiple of the squared standard volume.
pub fn v_squared(omega: &F, psi: &F) -> f64 {
    let alpha = alpha_of(psi);
    let x = x_of(omega);
    evaluate1(&alpha.flatten(), &x.flatten()).expect("grade-1 pairing")
}

/// `V²(ψ, υ) = α_ψ(X_υ)`.
pub fn v_squared4(psi: &F, upsilon: &F) -> f64 {
    let alpha = alpha_of(psi);
    let x = x_of4(upsilon);
    evaluate1(&alpha.flatten(), &x.flatten()).expect("grade-1 pairing")
}

fn form_eval_2(omega: &F, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
    // ω(Y,Z) with the no-1/k! evaluation convention
    let tuples = crate::exterior::index_tuples(DIM, 2);
    let mut acc = 0.0;
    for (idx, c) in omega.coeffs().iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let (i, j) = (tuples[idx][0] as usize, tuples[idx][1] as usize);
        acc += c * (y[i] * z[j] - y[j] * z[i]);
    }
    acc
}

/// Evaluate the five conditions of the validity test; on success return the
/// recovered structure `(α, ω₂, ω₃)` exactly as in the constructive proof.
pub fn validate(t: &SU2Triple, tol: f64) -> Result<ValidatedSU2, RejectionReport> {
    let scale2 = t.omega1.norm_inf().powi(2).max(f64::MIN_POSITIVE);
    let scale3 = t.psi2.norm_inf().max(t.psi3.norm_inf()).powi(2);

    let alpha2 = alpha_of(&t.psi2).flatten();
    let alpha3 = alpha_of(&t.psi3).flatten();
    let r_alpha =
        alpha2.sub(&alpha3).norm_inf() / alpha2.norm_inf().max(alpha3.norm_inf()).max(scale3);

    let w12 = wedge(&t.omega1, &t.psi2).expect("2+3");
    let w13 = wedge(&t.omega1, &t.psi3).expect("2+3");
    let wscale = t.omega1.norm_inf() * t.psi2.norm_inf().max(t.psi3.norm_inf());
    let r_w12 = w12.norm_inf() / wscale.max(f64::MIN_POSITIVE);
    let r_w13 = w13.norm_inf() / wscale.max(f64::MIN_POSITIVE);

    let x_omega = x_of(&t.omega1);
    let cross = wedge(
        &contract(&x_omega.flatten(), &t.psi2).expect("contract"),
        &t.psi3,
    )
    .expect("2+3");
    let r_cross =
        cross.norm_inf() / (scale2 * t.psi2.norm_inf() * t.psi3.norm_inf()).max(f64::MIN_POSITIVE);

    let v2 = v_squared(&t.omega1, &t.psi2) * f64::from(t.orientation);
    let v2_scale = scale2 * scale3;

    // sign condition: the quadratic form ω₁(Y,Z) on the solution space of
    // Y⌟ψ₂ = Z⌟ψ₃ must be positive semidefinite and not identically zero
    let mut m = DMatrix::<f64>::zeros(10, 10);
    for col in 0..DIM {
        let y = Mv::basis(DIM, col + 1);
        let c2 = contract(&y, &t.psi2).expect("contract");
        let c3 = contract(&y, &t.psi3).expect("contract");
        for row in 0..10 {
            m[(row, col)] = c2.coeffs()[row];
            m[(row, col + DIM)] = -c3.coeffs()[row];
        }
    }
    let svd = m.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let vt = svd.v_t.as_ref().expect("svd with v requested");
    let mut null_basis: Vec<DVector<f64>> = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= 1e-9 * smax.max(f64::MIN_POSITIVE) {
            null_basis.push(vt.row(i).transpose());
        }
    }
    for i in svd.singular_values.len()..10 {
        null_basis.push(vt.row(i).transpose());
    }
    let (sign_residual, sign_ok) = if null_basis.is_empty() {
        (0.0, false)
    } else {
        let n = null_basis.len();
        let mut q = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let yi = null_basis[i].rows(0, DIM).into_owned();
                let zi = null_basis[i].rows(DIM, DIM).into_owned();
                let yj = null_basis[j].rows(0, DIM).into_owned();
                let zj = null_basis[j].rows(DIM, DIM).into_owned();
                q[(i, j)] =
                    0.5 * (form_eval_2(&t.omega1, &yi, &zj) + form_eval_2(&t.omega1, &yj, &zi));
            }
        }
        let eig = q.symmetric_eigen();
        let lam_min = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let lam_max = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let qscale = t.omega1.norm_inf().max(f64::MIN_POSITIVE);
        let ok = lam_min >= -1e-10 * qscale && lam_max > 1e-10 * qscale;
        (lam_min.min(0.0).abs() / qscale, ok)
    };

    let residuals = vec![
        ConditionResidual {
            condition: Condition::AlphaAgreement,
            residual: r_alpha,
            passed: r_alpha <= tol,
        },
        ConditionResidual {
            condition: Condition::Omega1Psi2,
            residual: r_w12,
            passed: r_w12 <= tol,
        },
        ConditionResidual {
            condition: Condition::Omega1Psi3,
            residual: r_w13,
            passed: r_w13 <= tol,
        },
        ConditionResidual {
            condition: Condition::CrossContraction,
            residual: r_cross,
            passed: r_cross <= tol,
        },
        ConditionResidual {
            condition: Condition::PositiveV2,
            residual: v2,
            passed: v2 > V2_DEGENERATE * v2_scale,
        },
        ConditionResidual {
            condition: Condition::SignCondition,
            residual: sign_residual,
            passed: sign_ok,
        },
    ];
    if residuals.iter().any(|r| !r.passed) {
        return Err(RejectionReport { residuals });
    }

    let v = f64::from(t.orientation) * v2.sqrt();
    let alpha = alpha2.scaled(&(1.0 / v));
    let x = x_omega.flatten().scaled(&(1.0 / v));
    let omega2 = contract(&x, &t.psi2).expect("contract");
    let omega3 = contract(&x, &t.psi3).expect("contract");
    Ok(ValidatedSU2 {
        quadruple: SU2Quadruple {
            alpha,
            omega1: t.omega1.clone(),
            omega2,
            omega3,
        },
        x,
        v,
        residuals,
    })
}

/// Metric and quaternionic operators attached to a valid quadruple.
#[derive(Debug, Clone)]
pub struct MetricAndJ {
    /// Gram matrix in the coordinate frame (the adapted coframe is
    /// orthonormal for it).
    pub gram: DMatrix<f64>,
    /// `J₁, J₂, J₃` acting on tangent vectors of `ker α` (zero on the Reeb
    /// direction), coordinate matrices.
    pub j_vec: [DMatrix<f64>; 3],
    /// The same operators acting on 1-forms annihilating `X`.
    pub j_form: [DMatrix<f64>; 3],
    /// The Reeb-type vector `X` with `α(X) = 1`, `X ⌟ ω_i = 0`.
    pub x: Mv,
}

fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(b, 1e-12).expect("svd solve");
    let residual = (a * &sol - b).norm();
    (sol, residual)
}

/// Orthonormal basis of the orthogonal complement of a nonzero vector,
/// via QR of the matrix completing `v` with identity columns.
fn orthogonal_complement(v: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = v.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    m.set_column(0, v);
    // pick the identity columns least aligned with v to complete the frame
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap());
    for (c, &idx) in order.iter().take(n - 1).enumerate() {
        m[(idx, c + 1)] = 1.0;
    }
    let qr = m.qr();
    let q = qr.q();
    (1..n).map(|i| q.column(i).into_owned()).collect()
}

/// Reconstruct the Reeb vector of a quadruple by solving `α(X) = 1`,
/// `X ⌟ ω_i = 0`.
fn reeb_vector(q: &SU2Quadruple) -> Result<Mv, Su2Error> {
    let mut a = DMatrix::<f64>::zeros(1 + 3 * 10, DIM);
    let mut b = DVector::<f64>::zeros(1 + 3 * 10);
    for col in 0..DIM {
        a[(0, col)] = q.alpha.coeffs()[col];
    }
    b[0] = 1.0;
    for (block, omega) in [&q.omega1, &q.omega2, &q.omega3].into_iter().enumerate() {
        for col in 0..DIM {
            let c = contract(&Mv::basis(DIM, col + 1), omega).expect("contract");
            for row in 0..DIM {
                a[(1 + block * 10 + row, col)] = c.coeffs()[row];
            }
        }
    }
    let (sol, residual) = solve_least_squares(&a, &b);
    let scale = q.alpha.norm_inf().max(q.omega1.norm_inf()).max(1e-300);
    if residual > 1e-7 * scale {
        return Err(Su2Error::InvalidQuadruple(format!(
            "no common Reeb vector (residual {residual:.3e})"
        )));
    }
    Ok(Mv::from_coeffs(DIM, 1, sol.iter().cloned().collect()))
}

/// Construct the metric making the adapted coframe orthonormal together with
/// the three almost-complex operators on `ker α`.
///
/// `J_i` is pinned by the defining relations `Y⌟ω_j = (J_iY)⌟ω_k` (vectors)
/// and `γ∧ω_j = (J_iγ)∧ω_k` (forms) over even permutations `(i,j,k)`.
pub fn metric_and_j(q: &SU2Quadruple) -> Result<MetricAndJ, Su2Error> {
    let x = reeb_vector(q)?;
    let xvec = DVector::from_iterator(DIM, x.coeffs().iter().cloned());
    let arow = DVector::from_iterator(DIM, q.alpha.coeffs().iter().cloned());

    // basis of ker α (vectors): orthogonal complement of the coefficient row
    let ker = orthogonal_complement(&arow);

    // J_i on vectors: solve (J_iY)⌟ω_k = Y⌟ω_j with J_iY in ker α
    let omegas = [&q.omega1, &q.omega2, &q.omega3];
    let perms = [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)];
    let contract_matrix = |omega: &F| -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::zeros(DIM, DIM);
        for col in 0..DIM {
            let c = contract(&Mv::basis(DIM, col + 1), omega).expect("contract");
            for row in 0..DIM {
                m[(row, col)] = c.coeffs()[row];
            }
        }
        m
    };
    let mut j_vec: [DMatrix<f64>; 3] = std::array::from_fn(|_| DMatrix::zeros(DIM, DIM));
    for (i, j, k) in perms {
        let mj = contract_matrix(omegas[j]);
        let mk = contract_matrix(omegas[k]);
        let mut kmat = DMatrix::<f64>::zeros(DIM, DIM - 1);
        for (c, v) in ker.iter().enumerate() {
            kmat.set_column(c, v);
        }
        let a = &mk * &kmat;
        let mut jm = DMatrix::<f64>::zeros(DIM, DIM);
        for col in 0..DIM {
            let y = DVector::from_iterator(DIM, (0..DIM).map(|r| if r == col { 1.0 } else { 0.0 }));
            // project the argument to ker α: J_i X := 0
            let yk = &y - &xvec * arow.dot(&y);
            let b = &mj * yk;
            let (sol, res) = solve_least_squares(&a, &b);
            if res > 1e-7 * q.omega1.norm_inf().max(1e-300) {
                return Err(Su2Error::InvalidQuadruple(format!(
                    "J solve inconsistent (residual {res:.3e})"
                )));
            }
            jm.set_column(col, &(&kmat * sol));
        }
        j_vec[i] = jm;
    }

    // J_i on forms: (J_iγ)∧ω_k = γ∧ω_j with J_iγ annihilating X
    let wedge_matrix = |omega: &F| -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::zeros(10, DIM);
        for col in 0..DIM {
            let w = wedge(&F::basis(DIM, col + 1), omega).expect("1+2");
            for row in 0..10 {
                m[(row, col)] = w.coeffs()[row];
            }
        }
        m
    };
    let annx = orthogonal_complement(&xvec);
    let mut j_form: [DMatrix<f64>; 3] = std::array::from_fn(|_| DMatrix::zeros(DIM, DIM));
    for (i, j, k) in perms {
        let wj = wedge_matrix(omegas[j]);
        let wk = wedge_matrix(omegas[k]);
        let mut kmat = DMatrix::<f64>::zeros(DIM, DIM - 1);
        for (c, v) in annx.iter().enumerate() {
            kmat.set_column(c, v);
        }
        let a = &wk * &kmat;
        let mut jm = DMatrix::<f64>::zeros(DIM, DIM);
        for col in 0..DIM {
            let gamma =
                DVector::from_iterator(DIM, (0..DIM).map(|r| if r == col { 1.0 } else { 0.0 }));
            // project to the annihilator of X: J_i α := 0
            let gk = &gamma - &arow * gamma.dot(&xvec);
            let b = &wj * gk;
            let (sol, res) = solve_least_squares(&a, &b);
            if res > 1e-7 * q.omega1.norm_inf().max(1e-300) {
                return Err(Su2Error::InvalidQuadruple(format!(
                    "form-J solve inconsistent (residual {res:.3e})"
                )));
            }
            jm.set_column(col, &(&kmat * sol));
        }
        j_form[i] = jm;
    }

    // metric: g(Y,Z) = ω₁(PY, J₁PZ) + α(Y)α(Z), P the ker-α projection
    let proj = DMatrix::identity(DIM, DIM) - &xvec * arow.transpose();
    let mut gram = DMatrix::<f64>::zeros(DIM, DIM);
    for a_idx in 0..DIM {
        for b_idx in 0..DIM {
            let ya = proj.column(a_idx).into_owned();
            let yb = proj.column(b_idx).into_owned();
            let jyb = &j_vec[0] * yb;
            gram[(a_idx, b_idx)] = form_eval_2(&q.omega1, &ya, &jyb) + arow[a_idx] * arow[b_idx];
        }
    }
    // enforce exact symmetry against round-off
    let gram = (gram.clone() + gram.transpose()) * 0.5;
    if gram.clone().cholesky().is_none() {
        return Err(Su2Error::InvalidQuadruple(
            "recovered metric is not positive definite".into(),
        ));
    }

    Ok(MetricAndJ {
        gram,
        j_vec,
        j_form,
        x,
    })
}

/// Adapted coframe `(u¹,…,u⁵ = α)`: the quadruple takes its normal form in
/// these coordinates. Deterministic: `u¹` is the normalised `ker α`
/// projection of the coordinate 1-form with the largest surviving norm.
pub fn adapted_coframe(q: &SU2Quadruple) -> Result<[F; 5], Su2Error> {
    let mj = metric_and_j(q)?;
    let ginv = mj
        .gram
        .clone()
        .try_inverse()
        .ok_or_else(|| Su2Error::InvalidQuadruple("metric not invertible".into()))?;
    let xvec = DVector::from_iterator(DIM, mj.x.coeffs().iter().cloned());
    let arow = DVector::from_iterator(DIM, q.alpha.coeffs().iter().cloned());

    let mut best: Option<(f64, DVector<f64>)> = None;
    for c in 0..DIM {
        let mut gamma = DVector::<f64>::zeros(DIM);
        gamma[c] = 1.0;
        let proj = &gamma - &arow * gamma.dot(&xvec);
        let norm2 = (proj.transpose() * &ginv * &proj)[(0, 0)];
        if best.as_ref().is_none_or(|(n, _)| norm2 > *n + 1e-12) {
            best = Some((norm2, proj));
        }
    }
    let (norm2, seed) = best.expect("five candidates");
    let u1 = seed / norm2.sqrt();
    let u2 = &mj.j_form[0] * &u1;
    let u3 = &mj.j_form[1] * &u1;
    let u4 = &mj.j_form[2] * &u1;

    let to_form = |v: &DVector<f64>| F::from_coeffs(DIM, 1, v.iter().cloned().collect());
    Ok([
        to_form(&u1),
        to_form(&u2),
        to_form(&u3),
        to_form(&u4),
        q.alpha.clone(),
    ])
}

/// Hypo residual: max norm of `(d̂ω₁, d̂ψ₂, d̂ψ₃)`.
pub fn is_hypo(d: &LieDifferential<f64>, t: &SU2Triple) -> f64 {
    extend_d(d, &t.omega1)
        .norm_inf()
        .max(extend_d(d, &t.psi2).norm_inf())
        .max(extend_d(d, &t.psi3).norm_inf())
}

/// Residual forms of the hypo conditions, used for linearised checks.
pub fn hypo_residual_forms(d: &LieDifferential<f64>, t: &SU2Triple) -> [F; 3] {
    [
        extend_d(d, &t.omega1),
        extend_d(d, &t.psi2),
        extend_d(d, &t.psi3),
    ]
}

fn v_of(omega: &F, psi: &F) -> Result<f64, Su2Error> {
    let v2 = v_squared(omega, psi);
    let scale = (omega.norm_inf().powi(2) * psi.norm_inf().powi(2)).max(f64::MIN_POSITIVE);
    if v2 <= 0.0 {
        return Err(Su2Error::NonPositiveV2(v2));
    }
    if v2 < V2_DEGENERATE * scale * scale {
        return Err(Su2Error::DegenerateV2(v2, V2_DEGENERATE));
    }
    Ok(v2.sqrt())
}

fn v_of4(psi: &F, upsilon: &F) -> Result<f64, Su2Error> {
    let v2 = v_squared4(psi, upsilon);
    let scale = (psi.norm_inf().powi(2) * upsilon.norm_inf()).max(f64::MIN_POSITIVE);
    if v2 <= 0.0 {
        return Err(Su2Error::NonPositiveV2(v2));
    }
    if v2 < V2_DEGENERATE * scale * scale {
        return Err(Su2Error::DegenerateV2(v2, V2_DEGENERATE));
    }
    Ok(v2.sqrt())
}

/// Differential of `V` at `(ω, ψ)` applied to a variation `(σ, φ)`:
/// `dV(σ,φ) = ω̂∧σ + ψ̂∧φ` with `ω̂ = (V⁻¹α_ψ)∧ω` and `ψ̂ = (V⁻¹X_ω)⌟ψ`.
pub fn dv(omega: &F, psi: &F, sigma: &F, phi: &F) -> Result<f64, Su2Error> {
    let v = v_of(omega, psi)?;
    let alpha = alpha_of(psi).flatten().scaled(&(1.0 / v));
    let omega_hat = wedge(&alpha, omega).map_err(|_| Su2Error::Shape)?;
    let x = x_of(omega).flatten().scaled(&(1.0 / v));
    let psi_hat = contract(&x, psi).map_err(|_| Su2Error::Shape)?;
    let t1 = top_coefficient(&wedge(&omega_hat, sigma).map_err(|_| Su2Error::Shape)?)
        .map_err(|_| Su2Error::Shape)?;
    let t2 = top_coefficient(&wedge(&psi_hat, phi).map_err(|_| Su2Error::Shape)?)
        .map_err(|_| Su2Error::Shape)?;
    Ok(t1 + t2)
}

/// Differential of `V` at `(ψ, υ)` applied to `(φ, σ)`:
/// `dV(φ,σ) = ψ̌∧φ + (V⁻¹α_ψ)∧σ` with `ψ̌ = (V⁻¹X_υ)⌟ψ`.
pub fn dv4(psi: &F, upsilon: &F, phi: &F, sigma: &F) -> Result<f64, Su2Error> {
    let v = v_of4(psi, upsilon)?;
    let x = x_of4(upsilon).flatten().scaled(&(1.0 / v));
    let psi_check = contract(&x, psi).map_err(|_| Su2Error::Shape)?;
    let alpha = alpha_of(psi).flatten().scaled(&(1.0 / v));
    let t1 = top_coefficient(&wedge(&psi_check, phi).map_err(|_| Su2Error::Shape)?)
        .map_err(|_| Su2Error::Shape)?;
    let t2 = top_coefficient(&wedge(&alpha, sigma).map_err(|_| Su2Error::Shape)?)
        .map_err(|_| Su2Error::Shape)?;
    Ok(t1 + t2)
}

/// Derived forms of a phase-space point (`α₂ = α₃` exactly when the point
/// defines a structure).
#[derive(Debug, Clone)]
pub struct DerivedForms {
    pub alpha2: F,
    pub alpha3: F,
    pub omega2: F,
    pub omega3: F,
}

pub fn derived_forms(p: &HamiltonianPoint) -> Result<DerivedForms, Su2Error> {
    let v12 = v_of(&p.omega1, &p.psi2)?;
    let v34 = v_of4(&p.psi3, &p.upsilon)?;
    let alpha2 = alpha_of(&p.psi2).flatten().scaled(&(1.0 / v12));
    let alpha3 = alpha_of(&p.psi3).flatten().scaled(&(1.0 / v34));
    let omega2 = contract(&x_of(&p.omega1).flatten().scaled(&(1.0 / v12)), &p.psi2)
        .map_err(|_| Su2Error::Shape)?;
    let omega3 = contract(&x_of4(&p.upsilon).flatten().scaled(&(1.0 / v34)), &p.psi3)
        .map_err(|_| Su2Error::Shape)?;
    Ok(DerivedForms {
        alpha2,
        alpha3,
        omega2,
        omega3,
    })
}

/// Skew gradient of the pointwise Hamiltonian on the algebra `d`:
/// `(−d̂α₃, −d̂ω₃, d̂ω₂, −ω₁∧d̂α₂)`.
pub fn skew_gradient(p: &HamiltonianPoint, d: &LieDifferential<f64>) -> Result<[F; 4], Su2Error> {
    let df = derived_forms(p)?;
    let d_alpha3 = extend_d(d, &df.alpha3);
    let d_omega3 = extend_d(d, &df.omega3);
    let d_omega2 = extend_d(d, &df.omega2);
    let d_alpha2 = extend_d(d, &df.alpha2);
    Ok([
        d_alpha3.neg(),
        d_omega3.neg(),
        d_omega2,
        wedge(&p.omega1, &d_alpha2)
            .map_err(|_| Su2Error::Shape)?
            .neg(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(indices: &[usize]) -> F {
        F::monomial(DIM, indices, 1.0)
    }

    #[test]
    fn x_of_values() {
        let omega = e(&[1, 2]).add(&e(&[3, 4]));
        let x = x_of(&omega);
        assert_eq!(x.value, Mv::monomial(DIM, &[5], 2.0));
        // degenerate ω
        assert!(x_of(&e(&[1, 2])).value.is_zero());
        // X_υ consistency for υ = ½ω²
        let upsilon = e(&[1, 2, 3, 4]);
        assert_eq!(x_of4(&upsilon).value, x.value);
    }

    #[test]
    fn alpha_of_values() {
        let psi = e(&[1, 3, 5]).add(&e(&[4, 2, 5]));
        let a = alpha_of(&psi).flatten();
        assert_eq!(a, F::monomial(DIM, &[5], 2.0));
        // decomposable 3-form has (Aψ)² = 0
        assert!(alpha_of(&e(&[1, 2, 3])).value.is_zero());
        // homogeneity of degree 2
        let a2 = alpha_of(&psi.scaled(&3.0)).flatten();
        assert_eq!(a2, a.scaled(&9.0));
    }

    #[test]
    fn v_squared_fixtures() {
        let t = standard_triple();
        let v2 = v_squared(&t.omega1, &t.psi2);
        assert_eq!(v2, 4.0); // V is twice the fixed volume form
        let psi_bad = e(&[1, 2, 5]).add(&e(&[3, 4, 5]).scaled(&-1.0));
        assert!(v_squared(&t.omega1, &psi_bad) < 0.0);
        assert_eq!(v_squared(&e(&[1, 2]), &t.psi2), 0.0);
        // the 4-form route agrees on the standard structure
        let upsilon = e(&[1, 2, 3, 4]);
        assert_eq!(v_squared4(&t.psi3, &upsilon), 4.0);
    }

    #[test]
    fn validate_standard_triple() {
        let t = standard_triple();
        let v = validate(&t, VALIDATE_TOL).expect("standard triple is valid");
        assert!((v.v - 2.0).abs() < 1e-14);
        assert_eq!(v.quadruple.alpha, e(&[5]));
        assert_eq!(v.quadruple.omega2, e(&[1, 3]).add(&e(&[4, 2])));
        assert_eq!(v.quadruple.omega3, e(&[1, 4]).add(&e(&[2, 3])));
        assert_eq!(v.x, Mv::monomial(DIM, &[5], 1.0));
    }

    #[test]
    fn validate_rejects_swap_by_sign_condition() {
        let t = standard_triple();
        let swapped = SU2Triple {
            omega1: t.omega1.clone(),
            psi2: t.psi3.clone(),
            psi3: t.psi2.clone(),
            orientation: 1,
        };
        let err = validate(&swapped, VALIDATE_TOL).unwrap_err();
        let sign = err
            .residuals
            .iter()
            .find(|r| r.condition == Condition::SignCondition)
            .unwrap();
        assert!(!sign.passed);
        // the other equality conditions still hold for the swap
        assert!(err
            .residuals
            .iter()
            .filter(|r| matches!(
                r.condition,
                Condition::AlphaAgreement | Condition::Omega1Psi2 | Condition::Omega1Psi3
            ))
            .all(|r| r.passed));
    }

    #[test]
    fn recovery_identities_on_standard() {
        let t = standard_triple();
        let v = validate(&t, VALIDATE_TOL).unwrap();
        // V = ω₁² ∧ α = ω₂ ∧ ψ₂ = ω₃ ∧ ψ₃
        let via_alpha = top_coefficient(
            &wedge(&wedge(&t.omega1, &t.omega1).unwrap(), &v.quadruple.alpha).unwrap(),
        )
        .unwrap();
        assert!((via_alpha - v.v).abs() < 1e-13);
        let via_psi2 = top_coefficient(&wedge(&v.quadruple.omega2, &t.psi2).unwrap()).unwrap();
        assert!((via_psi2 - v.v).abs() < 1e-13);
        let via_psi3 = top_coefficient(&wedge(&v.quadruple.omega3, &t.psi3).unwrap()).unwrap();
        assert!((via_psi3 - v.v).abs() < 1e-13);
        // α(X) = 1, X ⌟ ω₁ = 0
        assert!((evaluate1(&v.quadruple.alpha, &v.x).unwrap() - 1.0).abs() < 1e-14);
        assert!(contract(&v.x, &t.omega1).unwrap().norm_inf() < 1e-14);
    }

    #[test]
    fn metric_and_j_standard() {
        let q = standard_quadruple();
        let mj = metric_and_j(&q).unwrap();
        assert!((mj.gram.clone() - DMatrix::<f64>::identity(DIM, DIM)).norm() < 1e-12);
        // J₁e¹ = e² on forms, J₁e₁ = e₂ on vectors (defining relations)
        let mut u1 = DVector::<f64>::zeros(DIM);
        u1[0] = 1.0;
        let j1u1 = &mj.j_form[0] * &u1;
        assert!((j1u1[1] - 1.0).abs() < 1e-12);
        let j1e1 = &mj.j_vec[0] * &u1;
        assert!((j1e1[1] - 1.0).abs() < 1e-12);
        // quaternion relations on ker α
        for i in 0..3 {
            let sq = &mj.j_vec[i] * &mj.j_vec[i];
            for a in 0..4 {
                for b in 0..4 {
                    let expected = if a == b { -1.0 } else { 0.0 };
                    assert!((sq[(a, b)] - expected).abs() < 1e-11);
                }
            }
        }
        let j1j2 = &mj.j_vec[0] * &mj.j_vec[1];
        assert!((&j1j2 - &mj.j_vec[2]).norm() < 1e-11);
    }

    #[test]
    fn adapted_coframe_standard_is_identity() {
        let q = standard_quadruple();
        let u = adapted_coframe(&q).unwrap();
        for (i, ui) in u.iter().enumerate() {
            let diff = ui.sub(&F::basis(DIM, i + 1)).norm_inf();
            assert!(diff < 1e-12, "u{} deviates by {diff}", i + 1);
        }
    }

    #[test]
    fn dv_finite_difference() {
        let t = standard_triple();
        let sigma = e(&[1, 2]).scaled(&0.3).add(&e(&[2, 5]).scaled(&-0.7));
        let phi = e(&[1, 2, 3]).scaled(&0.4).add(&e(&[2, 4, 5]).scaled(&0.9));
        let analytic = dv(&t.omega1, &t.psi2, &sigma, &phi).unwrap();
        let h = 1e-6;
        let vp = v_squared(
            &t.omega1.add(&sigma.scaled(&h)),
            &t.psi2.add(&phi.scaled(&h)),
        )
        .sqrt();
        let vm = v_squared(
            &t.omega1.add(&sigma.scaled(&-h)),
            &t.psi2.add(&phi.scaled(&-h)),
        )
        .sqrt();
        let fd = (vp - vm) / (2.0 * h);
        assert!(
            (analytic - fd).abs() < 1e-6 * analytic.abs().max(1.0),
            "dv {analytic} vs fd {fd}"
        );
        // Euler relation: V is degree-1 homogeneous in the ω slot
        let euler = dv(&t.omega1, &t.psi2, &t.omega1, &F::zero(DIM, 3)).unwrap();
        assert!((euler - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dv4_finite_difference() {
        let t = standard_triple();
        let upsilon = e(&[1, 2, 3, 4]);
        let phi = e(&[1, 3, 5]).scaled(&0.2).add(&e(&[2, 3, 4]).scaled(&-0.5));
        let sigma4 = e(&[1, 2, 3, 4])
            .scaled(&0.6)
            .add(&e(&[1, 2, 3, 5]).scaled(&0.1));
        let analytic = dv4(&t.psi3, &upsilon, &phi, &sigma4).unwrap();
        let h = 1e-6;
        let vp = v_squared4(
            &t.psi3.add(&phi.scaled(&h)),
            &upsilon.add(&sigma4.scaled(&h)),
        )
        .sqrt();
        let vm = v_squared4(
            &t.psi3.add(&phi.scaled(&-h)),
            &upsilon.add(&sigma4.scaled(&-h)),
        )
        .sqrt();
        let fd = (vp - vm) / (2.0 * h);
        assert!((analytic - fd).abs() < 1e-6 * analytic.abs().max(1.0));
    }

    #[test]
    fn dv_rejects_nonpositive_v2() {
        let t = standard_triple();
        let psi_bad = e(&[1, 2, 5]).add(&e(&[3, 4, 5]).scaled(&-1.0));
        assert!(matches!(
            dv(&t.omega1, &psi_bad, &e(&[1, 2]), &e(&[1, 2, 3])),
            Err(Su2Error::NonPositiveV2(_))
        ));
    }

    #[test]
    fn skew_gradient_m3_first_component() {
        // at a third-family point with the standard structure and υ = ½ω₁²,
        // the first component is −d̂α = −((λ+μ)e¹² + (λ−μ)e³⁴)
        let (l, mu) = (0.6, -1.1);
        let d = crate::flow::family_differential(crate::flow::Family::M3, &[l, mu]);
        let t = standard_triple();
        let p = HamiltonianPoint {
            omega1: t.omega1.clone(),
            psi2: t.psi2.clone(),
            psi3: t.psi3.clone(),
            upsilon: e(&[1, 2, 3, 4]),
        };
        let grad = skew_gradient(&p, &d).unwrap();
        let expected =
            Form::monomial(DIM, &[1, 2], -(l + mu)).add(&Form::monomial(DIM, &[3, 4], -(l - mu)));
        assert!(grad[0].sub(&expected).norm_inf() < 1e-13);
    }

    #[test]
    fn skew_gradient_abelian_fixed_point() {
        let t = standard_triple();
        let p = HamiltonianPoint {
            omega1: t.omega1.clone(),
            psi2: t.psi2.clone(),
            psi3: t.psi3.clone(),
            upsilon: e(&[1, 2, 3, 4]),
        };
        let d = LieDifferential::zero();
        let grad = skew_gradient(&p, &d).unwrap();
        for g in &grad {
            assert!(g.is_zero());
        }
    }
}
