//! Left-invariant Riemannian geometry on the framed algebras: Levi-Civita
//! connection via the Koszul formula, curvature, the Gauss-equation
//! tangential curvature of the generalized cylinder, holonomy-rank reports,
//! a finite-difference Ricci oracle for the cylinder metric `g_t + dt²`, and
//! trace-integral obstruction reports for extending a metric across a
//! special orbit.
//!
//! Conventions: brackets are read off the differential by
//! `[η_a, η_b] = −(d η^k)(η_a, η_b) η_k`; curvature is
//! `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}` with `R(X,Y,Z,W) = g(R(X,Y)Z, W)`
//! and sectional curvature `K(X,Y) = R(X,Y,Y,X)` on orthonormal pairs. The
//! cylinder has unit normal `∂_t`, second fundamental form
//! `II(X,Y) = −½ ġ(X,Y)`, and the Gauss identity
//! `R^tang(X,Y,Z,W) = R⁵(X,Y,Z,W) − II(Y,Z)II(X,W) + II(X,Z)II(Y,W)`
//! (the relative sign is pinned by the curvature span of the third family;
//! see `docs/conventions.md`).

use nalgebra::{DMatrix, DVector, Matrix5, Matrix6};
use thiserror::Error;

use crate::exterior::index_tuples;
use crate::flow::coframe::{coframe_evolve, CoframeConfig};
use crate::flow::rk::{integrate_ivp, IvpConfig, IvpError};
use crate::flow::{family_differential, family_rhs, Family, FlowError, Trajectory};
use crate::liealg::{LieDifferential, DIM};
use crate::torsion::{gauge_matrix_at, TorsionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error(transparent)]
    Torsion(#[from] TorsionError),
    #[error("flow error: {0}")]
    Flow(String),
    #[error("subspace is not invariant under the gauge matrix: off-block norm {0:.3e}")]
    NotInvariant(f64),
    #[error("bad subspace: {0}")]
    BadSubspace(String),
    #[error("insufficient samples for the finite-difference stencil")]
    InsufficientSamples,
}

impl From<FlowError> for CurvatureError {
    fn from(e: FlowError) -> Self {
        CurvatureError::Flow(e.to_string())
    }
}

/// A framed algebra with a left-invariant metric given by its Gram matrix in
/// the coordinate frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftInvariantMetric {
    pub d: LieDifferential<f64>,
    pub gram: Matrix5<f64>,
}

impl LeftInvariantMetric {
    pub fn new(d: LieDifferential<f64>, gram: Matrix5<f64>) -> Result<Self, CurvatureError> {
        if gram.cholesky().is_none() {
            return Err(CurvatureError::NotPositiveDefinite);
        }
        Ok(LeftInvariantMetric { d, gram })
    }

    pub fn standard(d: LieDifferential<f64>) -> Self {
        LeftInvariantMetric {
            d,
            gram: Matrix5::identity(),
        }
    }
}

/// Connection coefficients `∇_{η_i} η_j = Σ_k Γ[i][j][k] η_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub gamma: [[[f64; DIM]; DIM]; DIM],
}

impl Connection {
    /// The operator `∇_v` as a matrix acting on coordinate vectors.
    pub fn operator(&self, v: &DVector<f64>) -> Matrix5<f64> {
        Matrix5::from_fn(|k, j| (0..DIM).map(|i| v[i] * self.gamma[i][j][k]).sum())
    }

    fn op_basis(&self, i: usize) -> Matrix5<f64> {
        Matrix5::from_fn(|k, j| self.gamma[i][j][k])
    }
}

fn brackets(d: &LieDifferential<f64>) -> [[[f64; DIM]; DIM]; DIM] {
    let mut c = [[[0.0; DIM]; DIM]; DIM];
    let sc = d.structure_constants();
    for a in 0..DIM {
        for b in 0..DIM {
            for k in 0..DIM {
                c[a][b][k] = sc[a][b][k];
            }
        }
    }
    c
}

/// Levi-Civita connection from the Koszul formula
/// `2g(∇_x y, z) = g([x,y],z) − g([y,z],x) + g([z,x],y)`.
pub fn levi_civita(m: &LeftInvariantMetric) -> Result<Connection, CurvatureError> {
    let ginv = m
        .gram
        .try_inverse()
        .ok_or(CurvatureError::NotPositiveDefinite)?;
    let c = brackets(&m.d);
    let pair = |a: usize, b: usize, z: usize| -> f64 {
        // g([η_a, η_b], η_z)
        (0..DIM).map(|k| c[a][b][k] * m.gram[(k, z)]).sum()
    };
    let mut gamma = [[[0.0; DIM]; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            let mut k_low = [0.0; DIM];
            for (z, slot) in k_low.iter_mut().enumerate() {
                *slot = 0.5 * (pair(i, j, z) - pair(j, z, i) + pair(z, i, j));
            }
            for mth in 0..DIM {
                gamma[i][j][mth] = (0..DIM).map(|z| ginv[(mth, z)] * k_low[z]).sum();
            }
        }
    }
    Ok(Connection { gamma })
}

/// Curvature stored as the symmetric 10×10 coefficient matrix
/// `M[(kl),(ij)] = R(η_i, η_j, η_k, η_l)` over lexicographic index pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureForm {
    pub matrix: DMatrix<f64>,
}

impl CurvatureForm {
    pub fn riemann(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let (ci, si) = pair_index(i, j);
        let (ck, sk) = pair_index(k, l);
        match (ci, ck) {
            (Some(col), Some(row)) => si * sk * self.matrix[(row, col)],
            _ => 0.0,
        }
    }

    /// Numerical rank by singular values, relative threshold `rel_tol·σ_max`.
    pub fn rank(&self, rel_tol: f64) -> (usize, Vec<f64>) {
        let svd = self.matrix.clone().svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let smax = sv.first().cloned().unwrap_or(0.0);
        let rank = sv.iter().filter(|s| **s > rel_tol * smax).count();
        (rank, sv)
    }

    /// Orthonormal basis of the image (as 2-form coefficient vectors).
    pub fn image_basis(&self, rel_tol: f64) -> Vec<Vec<f64>> {
        let svd = self.matrix.clone().svd(true, false);
        let u = svd.u.as_ref().expect("u requested");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let mut out = Vec::new();
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s > rel_tol * smax {
                out.push(u.column(i).iter().cloned().collect());
            }
        }
        out
    }

    /// Ricci tensor `Ric_{bc} = g^{il} R(η_i, η_b, η_c, η_l)`.
    pub fn ricci(&self, gram: &Matrix5<f64>) -> Matrix5<f64> {
        let ginv = gram.try_inverse().expect("positive definite");
        Matrix5::from_fn(|b, c| {
            let mut acc = 0.0;
            for i in 0..DIM {
                for l in 0..DIM {
                    acc += ginv[(i, l)] * self.riemann(i, b, c, l);
                }
            }
            acc
        })
    }
}

/// Position of the ordered pair `(i,j)` among increasing 2-tuples plus the
/// antisymmetry sign; `None` on the diagonal.
fn pair_index(i: usize, j: usize) -> (Option<usize>, f64) {
    if i == j {
        return (None, 0.0);
    }
    let (a, b, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
    let tuples = index_tuples(DIM, 2);
    let pos = tuples
        .iter()
        .position(|t| t[0] as usize == a && t[1] as usize == b)
        .expect("valid pair");
    (Some(pos), s)
}

/// Curvature of the five-dimensional metric:
/// `R(η_i,η_j) = [∇_i, ∇_j] − ∇_{[η_i,η_j]}`.
pub fn curvature5(m: &LeftInvariantMetric) -> Result<CurvatureForm, CurvatureError> {
    let conn = levi_civita(m)?;
    let c = brackets(&m.d);
    let ops: Vec<Matrix5<f64>> = (0..DIM).map(|i| conn.op_basis(i)).collect();
    let tuples = index_tuples(DIM, 2);
    let mut matrix = DMatrix::<f64>::zeros(10, 10);
    for (col, tup) in tuples.iter().enumerate() {
        let (i, j) = (tup[0] as usize, tup[1] as usize);
        let mut op = ops[i] * ops[j] - ops[j] * ops[i];
        for mth in 0..DIM {
            if c[i][j][mth] != 0.0 {
                op -= ops[mth] * c[i][j][mth];
            }
        }
        // lower the output index: R_{ijkl} = g(R(ηi,ηj)ηk, ηl)
        let lowered = m.gram * op;
        for (row, tup_out) in tuples.iter().enumerate() {
            let (k, l) = (tup_out[0] as usize, tup_out[1] as usize);
            matrix[(row, col)] = lowered[(l, k)];
        }
    }
    Ok(CurvatureForm { matrix })
}

/// Tangential curvature of the generalized cylinder via the Gauss equation,
/// with second fundamental form `II = −gQ` (the sign of `II` is immaterial;
/// the relative sign of the correction is fixed by the third family's span).
pub fn tangential_curvature(
    m: &LeftInvariantMetric,
    q: &Matrix5<f64>,
) -> Result<CurvatureForm, CurvatureError> {
    let five = curvature5(m)?;
    let ii_raw = m.gram * q;
    let ii = (ii_raw + ii_raw.transpose()) * 0.5;
    let tuples = index_tuples(DIM, 2);
    let mut matrix = five.matrix.clone();
    for (col, tup) in tuples.iter().enumerate() {
        let (i, j) = (tup[0] as usize, tup[1] as usize);
        for (row, tup_out) in tuples.iter().enumerate() {
            let (k, l) = (tup_out[0] as usize, tup_out[1] as usize);
            matrix[(row, col)] += -ii[(j, k)] * ii[(i, l)] + ii[(i, k)] * ii[(j, l)];
        }
    }
    Ok(CurvatureForm { matrix })
}

/// Relative singular-value threshold for curvature ranks.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HolonomyReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Orthonormal spanning 2-forms of the image (coefficient vectors over
    /// lexicographic pairs).
    pub image_basis: Vec<Vec<f64>>,
    /// Whether the rank respects the su(3) bound (≤ 8).
    pub within_su3_bound: bool,
    /// Closed-form irreducibility test for third-family points:
    /// `3λ²+μ² ≠ ±4μλ` and `λμ(λ²−μ²) ≠ 0`.
    pub m3_irreducible: Option<bool>,
    pub verdict: String,
}

/// Evaluate the holonomy rank criterion at a metric with gauge matrix `q`;
/// pass the `(λ, μ)` parameters for third-family points to add the
/// closed-form irreducibility check.
pub fn holonomy_rank(
    m: &LeftInvariantMetric,
    q: &Matrix5<f64>,
    m3_params: Option<(f64, f64)>,
) -> Result<HolonomyReport, CurvatureError> {
    let omega = tangential_curvature(m, q)?;
    let (rank, singular_values) = omega.rank(RANK_TOL);
    let image_basis = omega.image_basis(RANK_TOL);
    let m3_irreducible = m3_params.map(|(l, mu)| {
        let scale = l.abs().max(mu.abs()).max(f64::MIN_POSITIVE).powi(2);
        let c1 = (3.0 * l * l + mu * mu - 4.0 * mu * l).abs() > 1e-9 * scale;
        let c2 = (3.0 * l * l + mu * mu + 4.0 * mu * l).abs() > 1e-9 * scale;
        let c3 = (l * mu * (l * l - mu * mu)).abs() > 1e-9 * scale * scale;
        c1 && c2 && c3
    });
    let verdict = if rank == 8 {
        "holonomy = SU(3) by rank criterion".to_string()
    } else {
        format!("holonomy reducible or undetermined (rank {rank} < 8)")
    };
    Ok(HolonomyReport {
        rank,
        singular_values,
        image_basis,
        within_su3_bound: rank <= 8,
        m3_irreducible,
        verdict,
    })
}

fn five_point_first(stencil: &[Matrix5<f64>; 5], h: f64) -> Matrix5<f64> {
    (-stencil[4] + stencil[3] * 8.0 - stencil[1] * 8.0 + stencil[0]) / (12.0 * h)
}

fn five_point_second(stencil: &[Matrix5<f64>; 5], h: f64) -> Matrix5<f64> {
    (-stencil[4] + stencil[3] * 16.0 - stencil[2] * 30.0 + stencil[1] * 16.0 - stencil[0])
        / (12.0 * h * h)
}

/// Ricci tensor of the cylinder metric `g_t + dt²` from a five-point stencil
/// of metric samples `g(t−2h), g(t−h), g(t), g(t+h), g(t+2h)`.
///
/// Blocks (indices 0..4 tangent in the fixed frame, 5 the normal):
/// * tangential: `Ric⁵ − ½g̈ + ½ġg⁻¹ġ − ½tr(S)·ġ` with `S = ½g⁻¹ġ`;
/// * normal: `Ric(ν,ν) = −tr(S′) − tr(S²)`;
/// * mixed: `Ric(X,ν) = Σ_a g([Γ_{E_a}, S]X, E_a)` over an orthonormal
///   frame (the Codazzi contraction; the derivative-of-trace term vanishes
///   because commutators are traceless).
pub fn cylinder_ricci_from_samples(
    d: &LieDifferential<f64>,
    stencil: &[Matrix5<f64>; 5],
    h: f64,
) -> Result<Matrix6<f64>, CurvatureError> {
    let g = stencil[2];
    let ginv = g.try_inverse().ok_or(CurvatureError::NotPositiveDefinite)?;
    let gdot = five_point_first(stencil, h);
    let gddot = five_point_second(stencil, h);

    let m = LeftInvariantMetric::new(d.clone(), g)?;
    let ric5 = curvature5(&m)?.ricci(&g);
    let conn = levi_civita(&m)?;

    let s = ginv * gdot * 0.5;
    let sdot = ginv * gddot * 0.5 - ginv * gdot * ginv * gdot * 0.5;
    let tr_s = s.trace();

    let tang = ric5 - gddot * 0.5 + gdot * ginv * gdot * 0.5 - gdot * (0.5 * tr_s);

    let ric_nn = -(sdot.trace()) - (s * s).trace();

    // orthonormal frame from the Cholesky factor: G = LLᵀ, E_a = L⁻ᵀ columns
    let chol = g.cholesky().ok_or(CurvatureError::NotPositiveDefinite)?;
    let linv_t = chol
        .l()
        .try_inverse()
        .ok_or(CurvatureError::NotPositiveDefinite)?
        .transpose();
    let mut ric_mixed = [0.0; DIM];
    for (x, slot) in ric_mixed.iter_mut().enumerate() {
        let mut acc = 0.0;
        for a in 0..DIM {
            let ea = linv_t.column(a).into_owned();
            let gamma_ea = conn.operator(&DVector::from_iterator(DIM, ea.iter().cloned()));
            let bracket = gamma_ea * s - s * gamma_ea;
            // g((∇_{E_a}S)η_x, E_a)
            let v = g * bracket.column(x);
            acc += ea.dot(&v);
        }
        *slot = acc;
    }

    let mut out = Matrix6::<f64>::zeros();
    for i in 0..DIM {
        for j in 0..DIM {
            out[(i, j)] = tang[(i, j)];
        }
        out[(i, DIM)] = ric_mixed[i];
        out[(DIM, i)] = ric_mixed[i];
    }
    out[(DIM, DIM)] = ric_nn;
    Ok(out)
}

/// Ricci of the cylinder over an evolving hypo structure: co-integrates the
/// coframe to the stencil times and differentiates the metric there.
pub fn cylinder_ricci_along_flow(
    d0: &LieDifferential<f64>,
    t: f64,
    h: f64,
    cfg: &CoframeConfig,
) -> Result<Matrix6<f64>, CurvatureError> {
    let stencil_times: Vec<f64> = (-2..=2).map(|j| t + j as f64 * h).collect();
    let t_end = t + 3.0 * h;
    let traj = coframe_evolve(d0, (0.0, t_end), cfg, &stencil_times)?;
    let mut grams: Vec<Matrix5<f64>> = Vec::with_capacity(5);
    for &ts in &stencil_times {
        let idx = traj
            .ts
            .iter()
            .position(|&s| (s - ts).abs() < 1e-10 * ts.abs().max(1.0))
            .ok_or(CurvatureError::InsufficientSamples)?;
        grams.push(traj.gram(idx));
    }
    // the differential of the underlying fixed algebra is the initial one
    let stencil: [Matrix5<f64>; 5] = std::array::from_fn(|i| grams[i]);
    cylinder_ricci_from_samples(d0, &stencil, h)
}

/// Independent reference route for the cylinder Ricci: treat
/// `{u¹(t),…,u⁵(t), dt}` (from a Cholesky factorisation of the metric) as a
/// 6-dimensional orthonormal coframe and apply the constant-metric Koszul
/// and curvature formulas to its structure functions, differentiating the
/// connection coefficients in `t` by central differences. Used to
/// cross-validate [`cylinder_ricci_from_samples`]; returns Ricci in the same
/// fixed-frame coordinates.
pub fn cylinder_ricci_frame_oracle(
    d: &LieDifferential<f64>,
    g_of_t: &dyn Fn(f64) -> Matrix5<f64>,
    t: f64,
    h: f64,
) -> Result<Matrix6<f64>, CurvatureError> {
    const N: usize = 6;
    let c5 = brackets(d);

    // structure functions of the 6-frame at a given time
    let gamma_at = |tt: f64| -> Result<Vec<Vec<Vec<f64>>>, CurvatureError> {
        let g = g_of_t(tt);
        let chol = g.cholesky().ok_or(CurvatureError::NotPositiveDefinite)?;
        let u = chol.l().transpose(); // G = UᵀU
        let uinv = u.try_inverse().ok_or(CurvatureError::NotPositiveDefinite)?;
        // A = U'U⁻¹ by five-point differencing of the Cholesky factor
        let hh = h / 4.0;
        let us: Vec<Matrix5<f64>> = (-2..=2)
            .map(|j| {
                let gs = g_of_t(tt + j as f64 * hh);
                gs.cholesky().expect("spd").l().transpose()
            })
            .collect();
        let ustencil: [Matrix5<f64>; 5] = std::array::from_fn(|i| us[i]);
        let udot = five_point_first(&ustencil, hh);
        let a = udot * uinv;

        let mut gamma = vec![vec![vec![0.0; N]; N]; N];
        for i in 0..DIM {
            for j in 0..DIM {
                for mth in 0..DIM {
                    let mut acc = 0.0;
                    for aa in 0..DIM {
                        for bb in 0..DIM {
                            for cc in 0..DIM {
                                acc +=
                                    uinv[(aa, i)] * uinv[(bb, j)] * c5[aa][bb][cc] * u[(mth, cc)];
                            }
                        }
                    }
                    gamma[i][j][mth] = acc;
                }
            }
        }
        // [E_6, E_j] = −Σ_i A_ij E_i
        for j in 0..DIM {
            for i in 0..DIM {
                gamma[DIM][j][i] = -a[(i, j)];
                gamma[j][DIM][i] = a[(i, j)];
            }
        }
        Ok(gamma)
    };

    type Coeffs = Vec<Vec<Vec<f64>>>;
    let christoffel = |gamma: &Coeffs| -> Coeffs {
        // Γ^c_{ab} = ½(γ^c_{ab} − γ^a_{bc} + γ^b_{ca}) in an orthonormal frame
        let mut out = vec![vec![vec![0.0; N]; N]; N];
        for a in 0..N {
            for b in 0..N {
                for c in 0..N {
                    out[a][b][c] = 0.5 * (gamma[a][b][c] - gamma[b][c][a] + gamma[c][a][b]);
                }
            }
        }
        out
    };

    let gam0 = christoffel(&gamma_at(t)?);
    let gp = christoffel(&gamma_at(t + h)?);
    let gm = christoffel(&gamma_at(t - h)?);
    let gp2 = christoffel(&gamma_at(t + 2.0 * h)?);
    let gm2 = christoffel(&gamma_at(t - 2.0 * h)?);
    let mut gam_dot = vec![vec![vec![0.0; N]; N]; N];
    for a in 0..N {
        for b in 0..N {
            for c in 0..N {
                gam_dot[a][b][c] = (-gp2[a][b][c] + 8.0 * gp[a][b][c] - 8.0 * gm[a][b][c]
                    + gm2[a][b][c])
                    / (12.0 * h);
            }
        }
    }
    let gamma0 = gamma_at(t)?;

    // R(E_a,E_b)E_c = ∇_a ∇_b E_c − ∇_b ∇_a E_c − ∇_{[E_a,E_b]} E_c,
    // where only E_6 = ∂_t differentiates the coefficients
    let riemann = |a: usize, b: usize, c: usize, e: usize| -> f64 {
        let mut acc = 0.0;
        if a == DIM {
            acc += gam_dot[b][c][e];
        }
        if b == DIM {
            acc -= gam_dot[a][c][e];
        }
        for f in 0..N {
            acc += gam0[b][c][f] * gam0[a][f][e] - gam0[a][c][f] * gam0[b][f][e];
            acc -= gamma0[a][b][f] * gam0[f][c][e];
        }
        acc
    };

    let mut ric_frame = Matrix6::<f64>::zeros();
    for b in 0..N {
        for c in 0..N {
            let mut acc = 0.0;
            for a in 0..N {
                acc += riemann(a, b, c, a);
            }
            ric_frame[(b, c)] = acc;
        }
    }

    // back to fixed-frame coordinates: Ric_η(η_p, η_q) = Σ U_mp U_nq Ric(E_m, E_n)
    let g = g_of_t(t);
    let u = g
        .cholesky()
        .ok_or(CurvatureError::NotPositiveDefinite)?
        .l()
        .transpose();
    let mut out = Matrix6::<f64>::zeros();
    for p in 0..DIM {
        for q in 0..DIM {
            let mut acc = 0.0;
            for mm in 0..DIM {
                for nn in 0..DIM {
                    acc += u[(mm, p)] * u[(nn, q)] * ric_frame[(mm, nn)];
                }
            }
            out[(p, q)] = acc;
        }
        let mut acc = 0.0;
        for mm in 0..DIM {
            acc += u[(mm, p)] * ric_frame[(mm, DIM)];
        }
        out[(p, DIM)] = acc;
        out[(DIM, p)] = acc;
    }
    out[(DIM, DIM)] = ric_frame[(DIM, DIM)];
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DivergenceVerdict {
    NegativeInfinity,
    Finite,
    PositiveInfinity,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ObstructionReport {
    pub family: Family,
    pub w_dim: usize,
    /// `(t, partial integral of tr X̂|_W)` samples toward the boundary time.
    pub samples: Vec<(f64, f64)>,
    pub verdict: DivergenceVerdict,
    pub threshold: f64,
    /// Largest off-block norm of the gauge matrix over the trajectory
    /// samples (invariance of `W`).
    pub invariance_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionConfig {
    /// Magnitude past which a monotone partial integral is declared
    /// divergent.
    pub threshold: f64,
    /// Budget in the compactified time (the state is radially rescaled, so
    /// this is roughly arc length on the parameter sphere).
    pub tau_max: f64,
    pub ivp: IvpConfig,
}

impl Default for ObstructionConfig {
    fn default() -> Self {
        ObstructionConfig {
            threshold: 1e3,
            tau_max: 2e4,
            ivp: IvpConfig {
                rtol: 1e-8,
                atol: 1e-8,
                max_steps: 4_000_000,
                norm_ceiling: f64::INFINITY,
            },
        }
    }
}

/// Numerically integrate `tr(X̂|_W)` along the flow toward the forward
/// boundary of the maximal interval, and classify the divergence.
///
/// The reduced flows are degree-2 homogeneous and blow up in finite time, so
/// the integration runs in a radially compactified form: with `p = e^ρ q`,
/// `|q| = 1` and `dτ = e^ρ dt`, the sphere component, log-radius, clock and
/// partial integral stay finite while
/// `∫ tr X̂(p)|_W dt = ∫ tr X̂(q)|_W dτ` (the gauge matrix is linear in the
/// parameters). Divergence is declared when the partial integrals pass the
/// configured threshold monotonically with the integrand bounded away from
/// zero; converged tails are declared finite.
pub fn trace_integral(
    traj: &Trajectory,
    w_columns: &DMatrix<f64>,
    cfg: &ObstructionConfig,
) -> Result<ObstructionReport, CurvatureError> {
    let family = traj.family;
    let nparams = family.param_count();
    if w_columns.nrows() != DIM || w_columns.ncols() == 0 || w_columns.ncols() > DIM {
        return Err(CurvatureError::BadSubspace(format!(
            "expected a 5×k matrix of basis columns, got {}×{}",
            w_columns.nrows(),
            w_columns.ncols()
        )));
    }
    // orthonormalise W
    let qr = w_columns.clone().qr();
    let wq = qr.q().columns(0, w_columns.ncols()).into_owned();
    let proj = &wq * wq.transpose();

    // invariance of W along the supplied trajectory
    let mut invariance_residual = 0.0f64;
    for s in &traj.samples {
        let d = family_differential(family, &s.state);
        let xhat = gauge_matrix_at(&d, 1e-6)?;
        let xd = DMatrix::from_fn(DIM, DIM, |i, j| xhat[(i, j)]);
        let off = (&xd * &proj) - (&proj * &xd * &proj);
        let scale = xd.norm().max(f64::MIN_POSITIVE);
        invariance_residual = invariance_residual.max(off.norm() / scale);
    }
    if invariance_residual > 1e-8 {
        return Err(CurvatureError::NotInvariant(invariance_residual));
    }

    let p0 = &traj.params0;
    let r0: f64 = p0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r0 == 0.0 {
        return Ok(ObstructionReport {
            family,
            w_dim: w_columns.ncols(),
            samples: vec![(traj.t_span.0, 0.0)],
            verdict: DivergenceVerdict::Finite,
            threshold: cfg.threshold,
            invariance_residual,
        });
    }

    let trace_w = |params: &[f64]| -> Result<f64, String> {
        let d = family_differential(family, params);
        let xhat = gauge_matrix_at(&d, 1e-5).map_err(|e| e.to_string())?;
        let xd = DMatrix::from_fn(DIM, DIM, |i, j| xhat[(i, j)]);
        Ok((wq.transpose() * &xd * &wq).trace())
    };

    // state: (q[0..n], ρ, I, t); integrate in chunks of compactified time and
    // stop early once the partial integral clears the threshold or converges
    let mut y: Vec<f64> = p0.iter().map(|x| x / r0).collect();
    y.push(r0.ln());
    y.push(0.0);
    y.push(traj.t_span.0);
    let rhs = |_tau: f64, y: &[f64]| -> Result<Vec<f64>, String> {
        let q = &y[..nparams];
        let f = family_rhs(family, q);
        let qdotf: f64 = q.iter().zip(&f).map(|(a, b)| a * b).sum();
        let mut dy: Vec<f64> = f.iter().zip(q).map(|(fi, qi)| fi - qdotf * qi).collect();
        dy.push(qdotf);
        dy.push(trace_w(q)?);
        dy.push((-y[nparams]).exp());
        Ok(dy)
    };
    let chunk = 250.0f64;
    let mut tau = 0.0f64;
    let mut tail: Vec<Vec<f64>> = vec![y.clone()];
    let mut samples: Vec<(f64, f64)> = vec![(y[nparams + 2], y[nparams + 1])];
    let mut prev_chunk_end = 0.0f64;
    let mut converged_chunks = 0usize;
    while tau < cfg.tau_max {
        let t_next = (tau + chunk).min(cfg.tau_max);
        let sol = match integrate_ivp(&rhs, tau, t_next, &y, &cfg.ivp, &[]) {
            Ok(sol) => sol,
            Err((IvpError::StepSizeUnderflow { .. }, partial)) => partial,
            Err((e, _)) => return Err(CurvatureError::Flow(e.to_string())),
        };
        let stride = (sol.ts.len() / 40).max(1);
        for (i, ys) in sol.ys.iter().enumerate() {
            if i % stride == 0 || i + 1 == sol.ts.len() {
                samples.push((ys[nparams + 2], ys[nparams + 1]));
            }
        }
        let n_keep = 50.min(sol.ys.len());
        tail = sol.ys[sol.ys.len() - n_keep..].to_vec();
        y = sol.ys.last().expect("nonempty").clone();
        tau = *sol.ts.last().expect("nonempty");
        let i_now = y[nparams + 1];
        if i_now.abs() > 1.05 * cfg.threshold {
            break;
        }
        if (i_now - prev_chunk_end).abs() < 1e-9 * i_now.abs().max(1.0) {
            converged_chunks += 1;
            if converged_chunks >= 3 {
                break;
            }
        } else {
            converged_chunks = 0;
        }
        prev_chunk_end = i_now;
        if tau + 1e-9 < t_next {
            break; // step-size underflow inside the chunk
        }
    }

    // verdict from the tail: monotone past the threshold with the integrand
    // bounded away from zero, otherwise converged ⇒ finite
    let last = tail.last().expect("nonempty");
    let i_final = last[nparams + 1];
    let tail_slope = trace_w(&last[..nparams]).unwrap_or(0.0);
    let monotone_tail = {
        let mut ok = true;
        for w in tail.windows(2) {
            let a = w[0][nparams + 1];
            let b = w[1][nparams + 1];
            if i_final > 0.0 && b < a - 1e-9 {
                ok = false;
            }
            if i_final < 0.0 && b > a + 1e-9 {
                ok = false;
            }
        }
        ok
    };
    let verdict = if i_final < -cfg.threshold && monotone_tail && tail_slope < -1e-12 {
        DivergenceVerdict::NegativeInfinity
    } else if i_final > cfg.threshold && monotone_tail && tail_slope > 1e-12 {
        DivergenceVerdict::PositiveInfinity
    } else if converged_chunks >= 3 || tail_slope.abs() < 1e-10 {
        DivergenceVerdict::Finite
    } else {
        DivergenceVerdict::Indeterminate
    };

    Ok(ObstructionReport {
        family,
        w_dim: w_columns.ncols(),
        samples,
        verdict,
        threshold: cfg.threshold,
        invariance_residual,
    })
}

/// Convenience constructor for common invariant subspaces.
pub fn subspace(kind: &str) -> Result<DMatrix<f64>, CurvatureError> {
    let cols: Vec<usize> = match kind {
        "full" => (0..DIM).collect(),
        "e5" => vec![4],
        "e1e2" => vec![0, 1],
        "e1e3" => vec![0, 2],
        other => {
            return Err(CurvatureError::BadSubspace(format!(
                "unknown subspace '{other}' (expected full, e5, e1e2, e1e3)"
            )))
        }
    };
    let mut m = DMatrix::<f64>::zeros(DIM, cols.len());
    for (c, &row) in cols.iter().enumerate() {
        m[(row, c)] = 1.0;
    }
    Ok(m)
}
