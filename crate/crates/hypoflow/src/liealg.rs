//! Framed 5-dimensional Lie algebras as points of the variety of linear maps
//! `d : (ℝ⁵)* → Λ²(ℝ⁵)*` whose derivation extension squares to zero, the
//! right GL(5) action `(μ(g)d)(β) = g⁻¹ d(gβ)`, its infinitesimal version,
//! and isomorphism-class fingerprinting of the nine nilpotent algebras.
//!
//! Vectors of 1-form coefficients are coordinate columns in the `e^i` basis;
//! a matrix `g` acts on a 1-form by ordinary matrix-vector multiplication and
//! on higher grades by the multiplicative extension.

use thiserror::Error;

use crate::exterior::{extend_to_grade, wedge, Form};
use crate::scalar::Scalar;

pub const DIM: usize = 5;

/// Default tolerance for the Jacobi residual of floating-point inputs, whose
/// residuals are pure round-off.
pub const JACOBI_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieAlgError {
    #[error("matrix is singular (|det| = {0:.3e})")]
    Singular(f64),
    #[error("Jacobi residual {0:.3e} exceeds tolerance {1:.3e}")]
    NotJacobi(f64, f64),
    #[error("lower central series does not terminate: not nilpotent")]
    NotNilpotent,
    #[error("fingerprint matches no entry of the classification table: {0:?}")]
    UnknownClass(StructureFingerprint),
    #[error("image forms must have dim 5 and grade 2")]
    BadShape,
}

/// A point of the variety: the five 2-forms `d e¹, …, d e⁵`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieDifferential<S> {
    images: [Form<S>; 5],
}

impl<S: Scalar> LieDifferential<S> {
    pub fn new(images: [Form<S>; 5]) -> Result<Self, LieAlgError> {
        for f in &images {
            if f.dim() != DIM || f.grade() != 2 {
                return Err(LieAlgError::BadShape);
            }
        }
        Ok(LieDifferential { images })
    }

    pub fn zero() -> Self {
        LieDifferential {
            images: std::array::from_fn(|_| Form::zero(DIM, 2)),
        }
    }

    pub fn image(&self, i: usize) -> &Form<S> {
        &self.images[i]
    }

    pub fn images(&self) -> &[Form<S>; 5] {
        &self.images
    }

    /// Apply `d` to a 1-form by linearity.
    pub fn apply(&self, a: &Form<S>) -> Form<S> {
        assert_eq!(a.grade(), 1);
        let mut out = Form::zero(DIM, 2);
        for (i, c) in a.coeffs().iter().enumerate() {
            if !c.is_zero() {
                out = out.add(&self.images[i].scaled(c));
            }
        }
        out
    }

    pub fn norm_inf(&self) -> f64 {
        self.images.iter().map(|f| f.norm_inf()).fold(0.0, f64::max)
    }

    /// Flat 50-coefficient view (five 2-forms, 10 coefficients each).
    pub fn to_flat(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(50);
        for f in &self.images {
            out.extend(f.coeffs().iter().cloned());
        }
        out
    }

    pub fn from_flat(flat: &[S]) -> Self {
        assert_eq!(flat.len(), 50);
        LieDifferential {
            images: std::array::from_fn(|i| {
                Form::from_coeffs(DIM, 2, flat[10 * i..10 * (i + 1)].to_vec())
            }),
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LieDifferential<T> {
        LieDifferential {
            images: std::array::from_fn(|i| self.images[i].map(&f)),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        LieDifferential {
            images: std::array::from_fn(|i| self.images[i].add(&other.images[i])),
        }
    }

    pub fn scaled(&self, c: &S) -> Self {
        LieDifferential {
            images: std::array::from_fn(|i| self.images[i].scaled(c)),
        }
    }

    /// Structure constants of the underlying bracket, `[e_a, e_b] = Σ_k c^k_{ab} e_k`
    /// with `c^k_{ab} = −(d e^k)(e_a, e_b)`.
    pub fn structure_constants(&self) -> Vec<Vec<Vec<S>>> {
        let mut c = vec![vec![vec![S::zero(); DIM]; DIM]; DIM];
        for a in 0..DIM {
            for b in (a + 1)..DIM {
                for k in 0..DIM {
                    let v = -self.images[k].coeff(&[a + 1, b + 1]);
                    c[a][b][k] = v.clone();
                    c[b][a][k] = -v;
                }
            }
        }
        c
    }
}

/// Invertible frame change, acting on 1-form coordinate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GLTransform<S> {
    matrix: Vec<Vec<S>>,
}

impl<S: Scalar> GLTransform<S> {
    pub fn new(matrix: Vec<Vec<S>>) -> Result<Self, LieAlgError> {
        assert_eq!(matrix.len(), DIM);
        let inv = invert(&matrix);
        match inv {
            Some(_) => Ok(GLTransform { matrix }),
            None => Err(LieAlgError::Singular(0.0)),
        }
    }

    pub fn identity() -> Self {
        GLTransform {
            matrix: (0..DIM)
                .map(|i| {
                    (0..DIM)
                        .map(|j| if i == j { S::one() } else { S::zero() })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn matrix(&self) -> &Vec<Vec<S>> {
        &self.matrix
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub(crate) fn invert<S: Scalar>(m: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = m.len();
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut inv: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { S::one() } else { S::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r1, &r2| {
            a[r1][col]
                .magnitude()
                .partial_cmp(&a[r2][col].magnitude())
                .unwrap()
        })?;
        if a[pivot][col].is_zero() {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].clone() / p.clone();
            inv[col][j] = inv[col][j].clone() / p.clone();
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].clone() - f.clone() * a[col][j].clone();
                inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Some(inv)
}

/// Rank by Gaussian elimination; pivots below `tol · max|entry|` are treated
/// as zero (exact scalars ignore the tolerance).
pub(crate) fn rank<S: Scalar>(rows: &[Vec<S>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let scale = rows
        .iter()
        .flat_map(|r| r.iter().map(|x| x.magnitude()))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let thresh = tol * scale;
    let ncols = rows[0].len();
    let mut a: Vec<Vec<S>> = rows.to_vec();
    let mut rank = 0usize;
    for col in 0..ncols {
        let pivot = (rank..a.len()).max_by(|&r1, &r2| {
            a[r1][col]
                .magnitude()
                .partial_cmp(&a[r2][col].magnitude())
                .unwrap()
        });
        let pivot = match pivot {
            Some(p) => p,
            None => break,
        };
        if a[pivot][col].is_negligible(thresh) {
            continue;
        }
        a.swap(rank, pivot);
        let p = a[rank][col].clone();
        for r in rank + 1..a.len() {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / p.clone();
            for j in col..ncols {
                a[r][j] = a[r][j].clone() - f.clone() * a[rank][j].clone();
            }
        }
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    rank
}

/// Extend `d` to the full exterior algebra via the Leibniz rule; zero on
/// grade 0 and equal to `d` on grade 1.
pub fn extend_d<S: Scalar>(d: &LieDifferential<S>, a: &Form<S>) -> Form<S> {
    let k = a.grade();
    if k == 0 {
        return Form::zero(DIM, 2.min(DIM));
    }
    if k == 1 {
        return d.apply(a);
    }
    let tuples = crate::exterior::index_tuples(DIM, k);
    let mut out = Form::zero(DIM, k + 1);
    for (ia, ca) in a.coeffs().iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        let tup = &tuples[ia];
        for (pos, &i) in tup.iter().enumerate() {
            // (−1)^pos e^{I<pos} ∧ d e^i ∧ e^{I>pos}
            let before: Vec<usize> = tup[..pos].iter().map(|&v| v as usize + 1).collect();
            let after: Vec<usize> = tup[pos + 1..].iter().map(|&v| v as usize + 1).collect();
            let mut term = Form::monomial(DIM, &before, S::one());
            term = wedge(&term, &d.images[i as usize]).expect("grade bounded");
            term = wedge(&term, &Form::monomial(DIM, &after, S::one())).expect("grade bounded");
            let term = term.scaled(ca);
            out = out.add(&if pos % 2 == 0 { term } else { term.neg() });
        }
    }
    out
}

/// Max norm of `d̂(d e^i)` over `i`; zero exactly when `d` lies on the variety.
pub fn jacobi_residual<S: Scalar>(d: &LieDifferential<S>) -> f64 {
    (0..DIM)
        .map(|i| extend_d(d, &d.images[i]).norm_inf())
        .fold(0.0, f64::max)
}

/// The right action `(μ(g)d)(β) = g⁻¹ d(gβ)`, with `g⁻¹` extended to 2-forms.
pub fn mu_action<S: Scalar>(
    g: &GLTransform<S>,
    d: &LieDifferential<S>,
) -> Result<LieDifferential<S>, LieAlgError> {
    let ginv = invert(&g.matrix).ok_or(LieAlgError::Singular(0.0))?;
    let images = std::array::from_fn(|i| {
        // d(g e^i) by columns of g, then push through the 2-form extension of g⁻¹
        let mut img = Form::zero(DIM, 2);
        for r in 0..DIM {
            if !g.matrix[r][i].is_zero() {
                img = img.add(&d.images[r].scaled(&g.matrix[r][i]));
            }
        }
        extend_to_grade(&ginv, &img)
    });
    Ok(LieDifferential { images })
}

/// Derivative at the identity of `t ↦ μ(exp(tB))d`:
/// `(μ_{*e}(B)d)(β) = d(Bβ) − B̂(dβ)` with `B̂` the degree-0 derivation
/// extension of `B` to 2-forms.
pub fn mu_star<S: Scalar>(b: &[Vec<S>], d: &LieDifferential<S>) -> LieDifferential<S> {
    assert_eq!(b.len(), DIM);
    let images = std::array::from_fn(|i| {
        let mut first = Form::zero(DIM, 2);
        for r in 0..DIM {
            if !b[r][i].is_zero() {
                first = first.add(&d.images[r].scaled(&b[r][i]));
            }
        }
        first.sub(&derivation_extension_2(b, &d.images[i]))
    });
    LieDifferential { images }
}

/// Degree-0 derivation extension of a matrix on 1-forms to 2-forms:
/// `B̂(a∧b) = Ba∧b + a∧Bb`.
pub(crate) fn derivation_extension_2<S: Scalar>(b: &[Vec<S>], f: &Form<S>) -> Form<S> {
    let tuples = crate::exterior::index_tuples(DIM, 2);
    let mut out = Form::zero(DIM, 2);
    for (idx, c) in f.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let (i, j) = (tuples[idx][0] as usize, tuples[idx][1] as usize);
        let ei = Form::basis(DIM, i + 1);
        let ej = Form::basis(DIM, j + 1);
        let bi = apply_matrix_1(b, &ei);
        let bj = apply_matrix_1(b, &ej);
        let term = wedge(&bi, &ej).unwrap().add(&wedge(&ei, &bj).unwrap());
        out = out.add(&term.scaled(c));
    }
    out
}

pub(crate) fn apply_matrix_1<S: Scalar>(b: &[Vec<S>], a: &Form<S>) -> Form<S> {
    let mut out = Form::zero(DIM, 1);
    for r in 0..DIM {
        let mut acc = S::zero();
        for c in 0..DIM {
            if !b[r][c].is_zero() && !a.coeffs()[c].is_zero() {
                acc = acc + b[r][c].clone() * a.coeffs()[c].clone();
            }
        }
        out.coeffs_mut()[r] = acc;
    }
    out
}

/// Matrix exponential by scaling and squaring with a truncated series,
/// accurate to machine precision for the moderate norms used in tests.
pub fn expm(b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = b.len();
    let norm: f64 = b
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    let a: Vec<Vec<f64>> = b
        .iter()
        .map(|row| row.iter().map(|x| x * scale).collect())
        .collect();
    let mut result = identity_f64(n);
    let mut term = identity_f64(n);
    for k in 1..=20 {
        term = mat_mul(&term, &a);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        result = mat_add(&result, &term);
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

fn identity_f64(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn mat_add(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

/// Linear-algebra invariants separating the nine nilpotent isomorphism
/// classes: first Betti number, lower central series dimensions, centre and
/// derived-algebra dimensions, and the rank of the quadratic map
/// `β ↦ (dβ)²` (the tie-break between the two filiform classes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureFingerprint {
    pub b1: usize,
    pub lower_central_dims: Vec<usize>,
    pub center_dim: usize,
    pub derived_dim: usize,
    pub wedge_square_rank: usize,
}

/// The nine isomorphism classes of 5-dimensional nilpotent Lie algebras,
/// named by a representative differential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum NilpotentClass {
    Abelian,
    N02,       // (0,0,0,0,12)
    N0234,     // (0,0,0,0,12+34)
    N1213,     // (0,0,0,12,13)
    N1214,     // (0,0,0,12,14)  = n₄ ⊕ ℝ
    N121324,   // (0,0,0,12,13+24)
    N121314,   // (0,0,12,13,14)
    N12131423, // (0,0,12,13,14+23)
    N121323,   // (0,0,12,13,23)
}

impl NilpotentClass {
    pub fn label(&self) -> &'static str {
        match self {
            NilpotentClass::Abelian => "(0,0,0,0,0)",
            NilpotentClass::N02 => "(0,0,0,0,12)",
            NilpotentClass::N0234 => "(0,0,0,0,12+34)",
            NilpotentClass::N1213 => "(0,0,0,12,13)",
            NilpotentClass::N1214 => "(0,0,0,12,14)",
            NilpotentClass::N121324 => "(0,0,0,12,13+24)",
            NilpotentClass::N121314 => "(0,0,12,13,14)",
            NilpotentClass::N12131423 => "(0,0,12,13,14+23)",
            NilpotentClass::N121323 => "(0,0,12,13,23)",
        }
    }

    pub fn all() -> [NilpotentClass; 9] {
        [
            NilpotentClass::Abelian,
            NilpotentClass::N02,
            NilpotentClass::N0234,
            NilpotentClass::N1213,
            NilpotentClass::N1214,
            NilpotentClass::N121324,
            NilpotentClass::N121314,
            NilpotentClass::N12131423,
            NilpotentClass::N121323,
        ]
    }

    /// A representative differential with integer coefficients.
    pub fn representative<S: Scalar>(&self) -> LieDifferential<S> {
        let m = |spec: &[&[usize]]| -> LieDifferential<S> {
            let mut images: [Form<S>; 5] = std::array::from_fn(|_| Form::zero(DIM, 2));
            for (i, monos) in spec.iter().enumerate() {
                let mut f = Form::zero(DIM, 2);
                for chunk in monos.chunks(2) {
                    f = f.add(&Form::monomial(DIM, &[chunk[0], chunk[1]], S::one()));
                }
                images[i] = f;
            }
            LieDifferential { images }
        };
        match self {
            NilpotentClass::Abelian => m(&[&[], &[], &[], &[], &[]]),
            NilpotentClass::N02 => m(&[&[], &[], &[], &[], &[1, 2]]),
            NilpotentClass::N0234 => m(&[&[], &[], &[], &[], &[1, 2, 3, 4]]),
            NilpotentClass::N1213 => m(&[&[], &[], &[], &[1, 2], &[1, 3]]),
            NilpotentClass::N1214 => m(&[&[], &[], &[], &[1, 2], &[1, 4]]),
            NilpotentClass::N121324 => m(&[&[], &[], &[], &[1, 2], &[1, 3, 2, 4]]),
            NilpotentClass::N121314 => m(&[&[], &[], &[1, 2], &[1, 3], &[1, 4]]),
            NilpotentClass::N12131423 => m(&[&[], &[], &[1, 2], &[1, 3], &[1, 4, 2, 3]]),
            NilpotentClass::N121323 => m(&[&[], &[], &[1, 2], &[1, 3], &[2, 3]]),
        }
    }
}

impl std::fmt::Display for NilpotentClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Span dimension of a set of vectors given as rows.
fn span_dim<S: Scalar>(vectors: &[Vec<S>], tol: f64) -> usize {
    rank(vectors, tol)
}

/// Compute the fingerprint; errors if the Jacobi residual exceeds `tol`.
pub fn fingerprint<S: Scalar>(
    d: &LieDifferential<S>,
    tol: f64,
) -> Result<StructureFingerprint, LieAlgError> {
    let res = jacobi_residual(d);
    let scale = d.norm_inf().max(1.0);
    if res > tol * scale {
        return Err(LieAlgError::NotJacobi(res, tol * scale));
    }

    // b1 = dim ker d = 5 − rank of the 5×10 coefficient matrix
    let d_rows: Vec<Vec<S>> = d.images.iter().map(|f| f.coeffs().to_vec()).collect();
    let rank_d = rank(&d_rows, tol);
    let b1 = DIM - rank_d;

    let c = d.structure_constants();
    let bracket = |v: &[S], w: &[S]| -> Vec<S> {
        let mut out = vec![S::zero(); DIM];
        for a in 0..DIM {
            if v[a].is_zero() {
                continue;
            }
            for b in 0..DIM {
                if w[b].is_zero() {
                    continue;
                }
                for k in 0..DIM {
                    if !c[a][b][k].is_zero() {
                        out[k] = out[k].clone() + v[a].clone() * w[b].clone() * c[a][b][k].clone();
                    }
                }
            }
        }
        out
    };
    let basis: Vec<Vec<S>> = (0..DIM)
        .map(|i| {
            (0..DIM)
                .map(|j| if i == j { S::one() } else { S::zero() })
                .collect()
        })
        .collect();

    // lower central series: g⁰ = g, g^{i+1} = [g, g^i]. Bracket vectors are
    // renormalised every step and dropped below an absolute floor tied to the
    // input scale, so round-off debris cannot masquerade as a new layer.
    let d_scale = d.norm_inf().max(1.0);
    let floor = if tol == 0.0 { 0.0 } else { tol * d_scale };
    let mut lower_central_dims = vec![DIM];
    let mut current: Vec<Vec<S>> = basis.clone();
    loop {
        let mut next: Vec<Vec<S>> = Vec::new();
        for v in &basis {
            for w in &current {
                let bw = bracket(v, w);
                let mag = bw.iter().map(|x| x.magnitude()).fold(0.0, f64::max);
                if mag > floor && bw.iter().any(|x| !x.is_zero()) {
                    // rescale by the dominant entry so later thresholds see
                    // O(1) coefficients (any nonzero scaling preserves spans)
                    let pivot = bw
                        .iter()
                        .max_by(|a, b| a.magnitude().partial_cmp(&b.magnitude()).unwrap())
                        .expect("nonempty")
                        .clone();
                    next.push(bw.iter().map(|x| x.clone() / pivot.clone()).collect());
                }
            }
        }
        let dim_next = span_dim(&next, tol);
        lower_central_dims.push(dim_next);
        if dim_next == 0 || lower_central_dims.len() > DIM + 1 {
            break;
        }
        current = next;
    }

    let derived_dim = lower_central_dims[1];

    // centre: kernel of X ↦ ([e_1,X],…,[e_5,X]) stacked as a 25×5 system
    let mut ad_rows: Vec<Vec<S>> = Vec::with_capacity(DIM * DIM);
    for a in 0..DIM {
        for k in 0..DIM {
            ad_rows.push((0..DIM).map(|b| c[a][b][k].clone()).collect());
        }
    }
    let center_dim = DIM - rank(&ad_rows, tol);

    // rank of the quadratic map β ↦ (dβ)², polarised over basis pairs; the
    // same absolute floor guards against round-off in products that cancel
    let mut squares: Vec<Vec<S>> = Vec::new();
    let sq_floor = if tol == 0.0 {
        0.0
    } else {
        tol * d_scale * d_scale
    };
    for i in 0..DIM {
        for j in i..DIM {
            let w = wedge(&d.images[i], &d.images[j]).expect("4-form");
            let mag = w.norm_inf();
            if mag > sq_floor && !w.is_zero() {
                let pivot = w
                    .coeffs()
                    .iter()
                    .max_by(|a, b| a.magnitude().partial_cmp(&b.magnitude()).unwrap())
                    .expect("nonempty")
                    .clone();
                squares.push(
                    w.coeffs()
                        .iter()
                        .map(|x| x.clone() / pivot.clone())
                        .collect(),
                );
            }
        }
    }
    let wedge_square_rank = span_dim(&squares, tol);

    Ok(StructureFingerprint {
        b1,
        lower_central_dims,
        center_dim,
        derived_dim,
        wedge_square_rank,
    })
}

/// Classify a nilpotent differential by comparing its fingerprint against the
/// table computed from the nine exact representatives.
pub fn iso_class<S: Scalar>(
    d: &LieDifferential<S>,
    tol: f64,
) -> Result<NilpotentClass, LieAlgError> {
    let fp = fingerprint(d, tol)?;
    if *fp.lower_central_dims.last().unwrap() != 0 {
        return Err(LieAlgError::NotNilpotent);
    }
    for class in NilpotentClass::all() {
        let rep: LieDifferential<crate::scalar::Rational> = class.representative();
        let rep_fp = fingerprint(&rep, 0.0).expect("representatives are exact");
        if rep_fp == fp {
            return Ok(class);
        }
    }
    Err(LieAlgError::UnknownClass(fp))
}
