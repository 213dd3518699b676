//! Intrinsic torsion of a hypo pair and the symmetric gauge matrix driving
//! the evolution flow.
//!
//! A hypo structure `(α, ω_i)` on an algebra `d` satisfies the structure
//! equations
//!
//! ```text
//! dα  = α∧β + f ω₁ + ω⁻
//! dω₂ = β∧ω₂ + g α∧ω₃ + α∧σ₂⁻
//! dω₃ = β∧ω₃ − g α∧ω₂ + α∧σ₃⁻
//! ```
//!
//! with `β` a 1-form on `ker α`, `f, g` scalars, and `ω⁻, σ₂⁻, σ₃⁻` in
//! `Λ²₋(ker α)`. Components are taken in an adapted coframe with the
//! normalisation `ω⁻ = 2ω⁻_a(u¹²−u³⁴) + 2ω⁻_b(u¹³−u⁴²) + 2ω⁻_c(u¹⁴−u²³)`
//! (and likewise for the `σ`'s), `β = β₁u¹+…+β₄u⁴`.
//!
//! [`gauge_matrix`] assembles these into the symmetric matrix
//! `Q = [[−f/2·id + Q̃, J₁β], [(J₁β)ᵀ, f+g]]`, and [`flow_rhs`] pushes it
//! through the infinitesimal frame action to produce the tangent vector of
//! the induced flow on the variety of differentials.

use nalgebra::Matrix5;
use thiserror::Error;

use crate::exterior::{wedge, Form};
use crate::liealg::{extend_d, invert, mu_action, mu_star, GLTransform, LieDifferential, DIM};
use crate::su2::{adapted_coframe, standard_quadruple, standard_triple, SU2Quadruple, Su2Error};

/// Default relative tolerance on the hypo residual and the extraction
/// residuals; family fixtures are exact, so residuals are round-off.
pub const HYPO_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorsionError {
    #[error("pair is not hypo: residual {0:.3e} exceeds {1:.3e}")]
    NotHypo(f64, f64),
    #[error("structure equations violated: projection residual {0:.3e} exceeds {1:.3e}")]
    ResidualTooLarge(f64, f64),
    #[error("invalid quadruple: {0}")]
    BadStructure(#[from] Su2Error),
    #[error("adapted frame change is singular")]
    SingularFrame,
}

/// Components `(β, f, g, ω⁻, σ₂⁻, σ₃⁻)` of the hypo intrinsic torsion,
/// expressed in an adapted coframe (stored alongside for conversions).
#[derive(Debug, Clone, PartialEq)]
pub struct HypoTorsion {
    pub beta: [f64; 4],
    pub f: f64,
    pub g: f64,
    pub omega_minus: [f64; 3],
    pub sigma2_minus: [f64; 3],
    pub sigma3_minus: [f64; 3],
    /// Adapted coframe (coordinates in the ambient frame).
    pub coframe: [Form<f64>; 5],
    /// Largest projection residual of the extraction.
    pub residual: f64,
}

impl HypoTorsion {
    fn lambda_minus_form(c: &[f64; 3], coframe: &[Form<f64>; 5]) -> Form<f64> {
        let w = |i: usize, j: usize| wedge(&coframe[i - 1], &coframe[j - 1]).expect("1+1");
        let basis = [
            w(1, 2).sub(&w(3, 4)),
            w(1, 3).sub(&w(4, 2)),
            w(1, 4).sub(&w(2, 3)),
        ];
        let mut out = Form::zero(DIM, 2);
        for (ci, bi) in c.iter().zip(basis.iter()) {
            out = out.add(&bi.scaled(&(2.0 * ci)));
        }
        out
    }

    /// `ω⁻` as a 2-form in ambient coordinates.
    pub fn omega_minus_form(&self) -> Form<f64> {
        Self::lambda_minus_form(&self.omega_minus, &self.coframe)
    }

    pub fn sigma2_minus_form(&self) -> Form<f64> {
        Self::lambda_minus_form(&self.sigma2_minus, &self.coframe)
    }

    pub fn sigma3_minus_form(&self) -> Form<f64> {
        Self::lambda_minus_form(&self.sigma3_minus, &self.coframe)
    }

    /// `β` as a 1-form in ambient coordinates.
    pub fn beta_form(&self) -> Form<f64> {
        let mut out = Form::zero(DIM, 1);
        for (bi, ui) in self.beta.iter().zip(self.coframe.iter()) {
            out = out.add(&ui.scaled(bi));
        }
        out
    }
}

/// Symmetric 5×5 gauge matrix assembled from the torsion.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeMatrix {
    pub q: Matrix5<f64>,
}

/// Extract the torsion of `(d, q)`; the pair must be hypo within `tol`
/// (relative to the coefficient scale of `d`).
pub fn hypo_torsion(
    d: &LieDifferential<f64>,
    q: &SU2Quadruple,
    tol: f64,
) -> Result<HypoTorsion, TorsionError> {
    let coframe = adapted_coframe(q)?;
    // frame change to adapted coordinates: the matrix sending e^i to u^i has
    // the coframe coefficient vectors as columns; the differential expressed
    // in adapted coordinates is the frame action applied to d.
    let ut: Vec<Vec<f64>> = (0..DIM)
        .map(|r| (0..DIM).map(|c| coframe[c].coeffs()[r]).collect())
        .collect();
    let g = GLTransform::new(ut).map_err(|_| TorsionError::SingularFrame)?;
    let d_adapted = mu_action(&g, d).map_err(|_| TorsionError::SingularFrame)?;
    let mut t = hypo_torsion_standard(&d_adapted, tol)?;
    t.coframe = coframe;
    Ok(t)
}

/// Torsion extraction at the standard quadruple `(e⁵, ω₁, ω₂, ω₃)`.
pub fn hypo_torsion_standard(
    d: &LieDifferential<f64>,
    tol: f64,
) -> Result<HypoTorsion, TorsionError> {
    let triple = standard_triple();
    let quad = standard_quadruple();
    let scale = d.norm_inf().max(f64::MIN_POSITIVE);
    let hypo_res = crate::su2::is_hypo(d, &triple);
    if hypo_res > tol * scale {
        return Err(TorsionError::NotHypo(hypo_res, tol * scale));
    }

    let c2 = |f: &Form<f64>, i: usize, j: usize| f.coeff(&[i, j]);

    // dα = α∧β + fω₁ + ω⁻: kerα components of de⁵ give β, the rest splits
    // over {ω₁, ω₂, ω₃, Λ²₋}
    let d_alpha = d.image(4).clone();
    let beta = [
        -c2(&d_alpha, 1, 5),
        -c2(&d_alpha, 2, 5),
        -c2(&d_alpha, 3, 5),
        -c2(&d_alpha, 4, 5),
    ];
    let f = (c2(&d_alpha, 1, 2) + c2(&d_alpha, 3, 4)) / 2.0;
    let r_f2 = (c2(&d_alpha, 1, 3) - c2(&d_alpha, 2, 4)) / 2.0;
    let r_f3 = (c2(&d_alpha, 1, 4) + c2(&d_alpha, 2, 3)) / 2.0;
    let omega_minus = [
        (c2(&d_alpha, 1, 2) - c2(&d_alpha, 3, 4)) / 4.0,
        (c2(&d_alpha, 1, 3) + c2(&d_alpha, 2, 4)) / 4.0,
        (c2(&d_alpha, 1, 4) - c2(&d_alpha, 2, 3)) / 4.0,
    ];

    let beta_form = {
        let mut out = Form::zero(DIM, 1);
        for (i, bi) in beta.iter().enumerate() {
            out = out.add(&Form::basis(DIM, i + 1).scaled(bi));
        }
        out
    };

    // dω₂ − β∧ω₂ = g α∧ω₃ + α∧σ₂⁻ (+ residuals)
    let p2 = extend_d(d, &quad.omega2).sub(&wedge(&beta_form, &quad.omega2).expect("1+2"));
    let q2 = |i: usize, j: usize| p2.coeff(&[i, j, 5]);
    let g_from2 = (q2(1, 4) + q2(2, 3)) / 2.0;
    let r2_w1 = (q2(1, 2) + q2(3, 4)) / 2.0;
    let r2_w2 = (q2(1, 3) - q2(2, 4)) / 2.0;
    let sigma2_minus = [
        (q2(1, 2) - q2(3, 4)) / 4.0,
        (q2(1, 3) + q2(2, 4)) / 4.0,
        (q2(1, 4) - q2(2, 3)) / 4.0,
    ];
    let r2_pure: f64 = [
        p2.coeff(&[1, 2, 3]),
        p2.coeff(&[1, 2, 4]),
        p2.coeff(&[1, 3, 4]),
        p2.coeff(&[2, 3, 4]),
    ]
    .iter()
    .fold(0.0f64, |m, x| m.max(x.abs()));

    // dω₃ − β∧ω₃ = −g α∧ω₂ + α∧σ₃⁻ (+ residuals)
    let p3 = extend_d(d, &quad.omega3).sub(&wedge(&beta_form, &quad.omega3).expect("1+2"));
    let q3 = |i: usize, j: usize| p3.coeff(&[i, j, 5]);
    let g_from3 = -(q3(1, 3) - q3(2, 4)) / 2.0;
    let r3_w1 = (q3(1, 2) + q3(3, 4)) / 2.0;
    let r3_w3 = (q3(1, 4) + q3(2, 3)) / 2.0;
    let sigma3_minus = [
        (q3(1, 2) - q3(3, 4)) / 4.0,
        (q3(1, 3) + q3(2, 4)) / 4.0,
        (q3(1, 4) - q3(2, 3)) / 4.0,
    ];
    let r3_pure: f64 = [
        p3.coeff(&[1, 2, 3]),
        p3.coeff(&[1, 2, 4]),
        p3.coeff(&[1, 3, 4]),
        p3.coeff(&[2, 3, 4]),
    ]
    .iter()
    .fold(0.0f64, |m, x| m.max(x.abs()));

    let residual = [
        r_f2.abs(),
        r_f3.abs(),
        r2_w1.abs(),
        r2_w2.abs(),
        r2_pure,
        r3_w1.abs(),
        r3_w3.abs(),
        r3_pure,
        (g_from2 - g_from3).abs(),
    ]
    .iter()
    .fold(0.0f64, |m, x| m.max(*x));
    if residual > tol * scale {
        return Err(TorsionError::ResidualTooLarge(residual, tol * scale));
    }

    Ok(HypoTorsion {
        beta,
        f,
        g: g_from2,
        omega_minus,
        sigma2_minus,
        sigma3_minus,
        coframe: std::array::from_fn(|i| Form::basis(DIM, i + 1)),
        residual,
    })
}

/// Assemble the symmetric gauge matrix from the torsion components; the
/// `J₁β` block uses the adapted-frame action `J₁β = (−β₂, β₁, −β₄, β₃)`.
pub fn gauge_matrix(t: &HypoTorsion) -> GaugeMatrix {
    let [wa, wb, wc] = t.omega_minus;
    let [s2a, s2b, s2c] = t.sigma2_minus;
    let [s3a, s3b, s3c] = t.sigma3_minus;
    let mut q = Matrix5::<f64>::zeros();
    let tilde = [
        [s2c - s3b - wa, s2b + s3c, -s2a - wc, -s3a + wb],
        [s2b + s3c, -s2c + s3b - wa, -s3a - wb, s2a - wc],
        [-s2a - wc, -s3a - wb, -s2c - s3b + wa, s2b - s3c],
        [-s3a + wb, s2a - wc, s2b - s3c, s2c + s3b + wa],
    ];
    for i in 0..4 {
        for j in 0..4 {
            q[(i, j)] = tilde[i][j] - if i == j { t.f / 2.0 } else { 0.0 };
        }
    }
    let j1b = [-t.beta[1], t.beta[0], -t.beta[3], t.beta[2]];
    for i in 0..4 {
        q[(i, 4)] = j1b[i];
        q[(4, i)] = j1b[i];
    }
    q[(4, 4)] = t.f + t.g;
    GaugeMatrix { q }
}

/// Gauge matrix of a differential that is hypo for the standard structure.
pub fn gauge_matrix_at(d: &LieDifferential<f64>, tol: f64) -> Result<Matrix5<f64>, TorsionError> {
    Ok(gauge_matrix(&hypo_torsion_standard(d, tol)?).q)
}

/// Tangent vector of the induced flow at `d`: the infinitesimal frame action
/// of the (symmetric) gauge matrix applied to `d`.
pub fn flow_rhs(d: &LieDifferential<f64>, tol: f64) -> Result<LieDifferential<f64>, TorsionError> {
    let xhat = gauge_matrix_at(d, tol)?;
    Ok(mu_star(&matrix_rows(&xhat), d))
}

/// Basis of the stabiliser algebra su(2) acting on 1-form coordinates
/// (each annihilates `ω₁, ω₂, ω₃` and `e⁵`).
pub fn su2_basis() -> [Matrix5<f64>; 3] {
    let mut z1 = Matrix5::<f64>::zeros();
    // e¹ ↦ −e², e² ↦ e¹, e³ ↦ e⁴, e⁴ ↦ −e³
    z1[(1, 0)] = -1.0;
    z1[(0, 1)] = 1.0;
    z1[(3, 2)] = 1.0;
    z1[(2, 3)] = -1.0;
    let mut z2 = Matrix5::<f64>::zeros();
    // e¹ ↦ −e³, e³ ↦ e¹, e² ↦ −e⁴, e⁴ ↦ e²
    z2[(2, 0)] = -1.0;
    z2[(0, 2)] = 1.0;
    z2[(3, 1)] = -1.0;
    z2[(1, 3)] = 1.0;
    let mut z3 = Matrix5::<f64>::zeros();
    // e¹ ↦ −e⁴, e⁴ ↦ e¹, e² ↦ e³, e³ ↦ −e²
    z3[(3, 0)] = -1.0;
    z3[(0, 3)] = 1.0;
    z3[(2, 1)] = 1.0;
    z3[(1, 2)] = -1.0;
    [z1, z2, z3]
}

/// The extra u(1) generator of the hypo symmetry group U(2) (rotates
/// `ω₂ + iω₃`, fixes `ω₁` and `e⁵`).
pub fn u1_generator() -> Matrix5<f64> {
    let mut z = Matrix5::<f64>::zeros();
    // e¹ ↦ −e², e² ↦ e¹, e³ ↦ −e⁴, e⁴ ↦ e³
    z[(1, 0)] = -1.0;
    z[(0, 1)] = 1.0;
    z[(3, 2)] = -1.0;
    z[(2, 3)] = 1.0;
    z
}

/// Row-major nested representation of a 5×5 matrix, as consumed by the
/// frame-action helpers.
pub fn matrix_rows(m: &Matrix5<f64>) -> Vec<Vec<f64>> {
    (0..DIM)
        .map(|i| (0..DIM).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Wrap a 5×5 matrix as a frame transform, checking invertibility.
pub fn gl_from_matrix(m: &Matrix5<f64>) -> Result<GLTransform<f64>, TorsionError> {
    let rows = matrix_rows(m);
    if invert(&rows).is_none() {
        return Err(TorsionError::SingularFrame);
    }
    GLTransform::new(rows).map_err(|_| TorsionError::SingularFrame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{Family, FamilyPoint};
    use crate::liealg::expm;

    fn m1(l: f64, mu: f64, h: f64, k: f64) -> LieDifferential<f64> {
        FamilyPoint::new(Family::M1, vec![l, mu, h, k])
            .unwrap()
            .differential()
    }

    fn m3(l: f64, mu: f64) -> LieDifferential<f64> {
        FamilyPoint::new(Family::M3, vec![l, mu])
            .unwrap()
            .differential()
    }

    #[test]
    fn torsion_of_zero() {
        let t = hypo_torsion_standard(&LieDifferential::zero(), HYPO_TOL).unwrap();
        assert_eq!(t.beta, [0.0; 4]);
        assert_eq!(t.f, 0.0);
        assert_eq!(t.g, 0.0);
        assert_eq!(t.omega_minus, [0.0; 3]);
        assert_eq!(t.sigma2_minus, [0.0; 3]);
        assert_eq!(t.sigma3_minus, [0.0; 3]);
    }

    #[test]
    fn torsion_m1_components() {
        let (l, mu, h, k) = (0.6, -0.3, 1.1, 0.8);
        let t = hypo_torsion_standard(&m1(l, mu, h, k), HYPO_TOL).unwrap();
        assert!(t.beta.iter().all(|b| b.abs() < 1e-14));
        assert!(t.f.abs() < 1e-14);
        assert!(t.omega_minus.iter().all(|w| w.abs() < 1e-14));
        assert!((t.sigma2_minus[0] + h / 2.0).abs() < 1e-14);
        assert!(t.sigma2_minus[1].abs() < 1e-14);
        assert!((t.sigma2_minus[2] - (k - mu) / 4.0).abs() < 1e-14);
        assert!((t.g - (k + mu) / 2.0).abs() < 1e-14);
        assert!((t.sigma3_minus[0] - l / 2.0).abs() < 1e-14);
        assert!((t.sigma3_minus[1] + (mu + k) / 4.0).abs() < 1e-14);
        assert!(t.sigma3_minus[2].abs() < 1e-14);
    }

    #[test]
    fn torsion_m3_components() {
        let (l, mu) = (0.7, -1.2);
        let t = hypo_torsion_standard(&m3(l, mu), HYPO_TOL).unwrap();
        assert!(t.beta.iter().all(|b| b.abs() < 1e-14));
        assert!((t.f - l).abs() < 1e-14);
        assert!(t.g.abs() < 1e-14);
        // ω⁻ = μ(e¹²−e³⁴) means component a = μ/2 with the factor-2 normalisation
        assert!((t.omega_minus[0] - mu / 2.0).abs() < 1e-14);
        assert!(t.omega_minus[1].abs() < 1e-14);
        assert!(t.omega_minus[2].abs() < 1e-14);
        assert!(t.sigma2_minus.iter().all(|s| s.abs() < 1e-14));
        assert!(t.sigma3_minus.iter().all(|s| s.abs() < 1e-14));
        let om = t.omega_minus_form();
        let expected = Form::monomial(DIM, &[1, 2], mu).add(&Form::monomial(DIM, &[3, 4], -mu));
        assert!(om.sub(&expected).norm_inf() < 1e-14);
    }

    #[test]
    fn torsion_rejects_non_hypo() {
        let mut images: [Form<f64>; 5] = std::array::from_fn(|_| Form::zero(DIM, 2));
        images[4] = Form::monomial(DIM, &[1, 5], 1.0);
        let d = LieDifferential::new(images).unwrap();
        assert!(matches!(
            hypo_torsion_standard(&d, HYPO_TOL),
            Err(TorsionError::NotHypo(_, _))
        ));
    }

    #[test]
    fn gauge_matrix_m1_matches_closed_form() {
        let (l, mu, h, k) = (0.9, 0.4, -0.7, 1.3);
        let q = gauge_matrix_at(&m1(l, mu, h, k), HYPO_TOL).unwrap();
        let expected = Matrix5::from_rows(&[
            [k / 2.0, 0.0, h / 2.0, -l / 2.0, 0.0].into(),
            [0.0, -k / 2.0, -l / 2.0, -h / 2.0, 0.0].into(),
            [h / 2.0, -l / 2.0, mu / 2.0, 0.0, 0.0].into(),
            [-l / 2.0, -h / 2.0, 0.0, -mu / 2.0, 0.0].into(),
            [0.0, 0.0, 0.0, 0.0, (k + mu) / 2.0].into(),
        ]);
        assert!((q - expected).norm() < 1e-13);
    }

    #[test]
    fn gauge_matrix_m3_is_diagonal() {
        let (l, mu) = (1.4, -0.6);
        let q = gauge_matrix_at(&m3(l, mu), HYPO_TOL).unwrap();
        let expected = Matrix5::from_diagonal(
            &[
                -(mu + l) / 2.0,
                -(mu + l) / 2.0,
                (mu - l) / 2.0,
                (mu - l) / 2.0,
                l,
            ]
            .into(),
        );
        assert!((q - expected).norm() < 1e-13);
    }

    #[test]
    fn gauge_matrix_m2_matches_closed_form() {
        let (x, y, h, k, l, mu) = (0.5, 1.0, 0.25, 0.5, 1.0, 2.0);
        let p = FamilyPoint::new(Family::M2, vec![x, y, h, k, l, mu]).unwrap();
        let q = gauge_matrix_at(&p.differential(), HYPO_TOL).unwrap();
        let expected = Matrix5::from_rows(&[
            [0.0, 0.0, (l + h) / 2.0, 0.0, 0.0].into(),
            [0.0, 0.0, 0.0, (-l + h) / 2.0, x].into(),
            [(l + h) / 2.0, 0.0, -(k + mu) / 2.0, 0.0, 0.0].into(),
            [0.0, (-l + h) / 2.0, 0.0, (-k + mu) / 2.0, -y].into(),
            [0.0, x, 0.0, -y, (k - mu) / 2.0].into(),
        ]);
        assert!((q - expected).norm() < 1e-13, "got {q}");
    }

    #[test]
    fn gauge_matrix_is_symmetric_bitwise() {
        let q = gauge_matrix_at(&m1(0.3, 0.9, -0.2, 0.5), HYPO_TOL).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(q[(i, j)], q[(j, i)]);
            }
        }
    }

    #[test]
    fn flow_rhs_matches_m1_display() {
        // the unprojected tangent at an M1 point, from the closed-form display
        let (l, mu, h, k) = (0.8, -0.5, 0.6, 1.1);
        let out = flow_rhs(&m1(l, mu, h, k), HYPO_TOL).unwrap();
        let f = |pairs: &[(f64, [usize; 2])]| {
            let mut acc = Form::zero(DIM, 2);
            for (c, ij) in pairs {
                acc = acc.add(&Form::monomial(DIM, &[ij[0], ij[1]], *c));
            }
            acc
        };
        let expected = [
            f(&[(-1.5 * l * mu, [3, 5]), (l * l, [2, 5]), (-l * h, [1, 5])]),
            f(&[
                (-1.5 * k * k - 0.5 * k * mu - h * h, [1, 5]),
                (0.5 * k * l, [4, 5]),
                (-1.5 * mu * h - 1.5 * k * h, [3, 5]),
                (l * h, [2, 5]),
            ]),
            f(&[(-0.5 * k * l, [1, 5])]),
            f(&[
                (1.5 * l * mu, [2, 5]),
                (-1.5 * mu * h - 1.5 * k * h, [1, 5]),
                (-l * l - 0.5 * k * mu - 1.5 * mu * mu - h * h, [3, 5]),
            ]),
            Form::zero(DIM, 2),
        ];
        for i in 0..5 {
            let diff = out.image(i).sub(&expected[i]).norm_inf();
            assert!(diff < 1e-12, "component {i} differs by {diff}");
        }
    }

    #[test]
    fn flow_rhs_m3_display() {
        let (l, mu) = (0.4, 1.7);
        let out = flow_rhs(&m3(l, mu), HYPO_TOL).unwrap();
        let c12 = (mu * mu + 2.0 * l * l) + 3.0 * l * mu;
        let c34 = (mu * mu + 2.0 * l * l) - 3.0 * l * mu;
        let expected = Form::monomial(DIM, &[1, 2], c12).add(&Form::monomial(DIM, &[3, 4], c34));
        assert!(out.image(4).sub(&expected).norm_inf() < 1e-13);
        for i in 0..4 {
            assert!(out.image(i).is_zero());
        }
        // abelian critical point
        let zero = flow_rhs(&LieDifferential::zero(), HYPO_TOL).unwrap();
        assert_eq!(zero, LieDifferential::zero());
    }

    #[test]
    fn torsion_from_general_adapted_frame_matches_standard() {
        let d = m1(0.8, -0.5, 0.6, 1.1);
        let t_std = hypo_torsion_standard(&d, HYPO_TOL).unwrap();
        let t_quad = hypo_torsion(&d, &standard_quadruple(), HYPO_TOL).unwrap();
        assert!((t_std.f - t_quad.f).abs() < 1e-12);
        assert!((t_std.g - t_quad.g).abs() < 1e-12);
        for i in 0..3 {
            assert!((t_std.omega_minus[i] - t_quad.omega_minus[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_equivariance_under_u2() {
        // X̂_{μ(g)d} = Ad(g⁻¹) X̂_d for g in the hypo symmetry group
        let d = m1(0.8, -0.5, 0.6, 1.1);
        let basis = su2_basis();
        let mut gens: Vec<Matrix5<f64>> = basis.to_vec();
        gens.push(u1_generator());
        for (idx, z) in gens.iter().enumerate() {
            for s in [0.3, -0.7] {
                let zb = matrix_rows(&(z * s));
                let gmat = expm(&zb);
                let g = GLTransform::new(gmat.clone()).unwrap();
                let gd = mu_action(&g, &d).unwrap();
                let q_gd = gauge_matrix_at(&gd, 1e-6).unwrap();
                let q_d = gauge_matrix_at(&d, HYPO_TOL).unwrap();
                let gm = Matrix5::from_fn(|i, j| gmat[i][j]);
                let ginv = gm.try_inverse().unwrap();
                let ad = ginv * q_d * gm;
                assert!(
                    (q_gd - ad).norm() < 1e-9,
                    "equivariance fails for generator {idx}, s={s}"
                );
            }
        }
    }
}
