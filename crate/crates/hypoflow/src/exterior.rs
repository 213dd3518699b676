//! Graded exterior algebra over an oriented n-dimensional real vector space
//! (n = 5 or 6), with wedge, interior product, the duality pairing, and the
//! isomorphisms `A : Λ^k T* → Λ^{n-k} T ⊗ Λ^n T*` and its dual `A*`.
//!
//! Coefficients are stored densely, indexed by lexicographically ordered
//! strictly increasing multi-indices; all signs come from counted
//! transpositions. Under the standard metric and orientation `A` coincides
//! with the Hodge star on every basis form.
//!
//! Conventions (see also `docs/conventions.md`):
//! * pairing `⟨η₁∧…∧η_k, v₁∧…∧v_k⟩ = (1/k!) det(η_i(v_j))`;
//! * evaluation of a form on vectors carries no `1/k!`:
//!   `(e¹∧e²)(e₁,e₂) = 1`;
//! * the identification `ΛⁿT* ⊗ ΛⁿT ≅ ℝ` is `(η, v) ↦ n!⟨η, v⟩`, so the
//!   product of top coefficients;
//! * interior product: `(X⌟a)(Y₁,…,Y_{k−1}) = a(X, Y₁,…,Y_{k−1})`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExteriorError {
    #[error("ambient dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("grades incompatible with the operation: {0} and {1}")]
    GradeMismatch(usize, usize),
    #[error("wedge overflows the top grade: {0} + {1} > dim {2}")]
    GradeOverflow(usize, usize, usize),
    #[error("expected a grade-{expected} argument, got grade {got}")]
    WrongGrade { expected: usize, got: usize },
    #[error("operation requires dimension {expected}, got {got}")]
    WrongDim { expected: usize, got: usize },
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Strictly increasing multi-indices of length `k` in `0..n`, lex order.
pub(crate) fn index_tuples(n: usize, k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut cur: Vec<u8> = (0..k as u8).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        // advance to the next increasing tuple
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < (n - k + i) as u8 {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Lexicographic rank of an increasing tuple among `index_tuples(n, k)`.
pub(crate) fn tuple_rank(n: usize, tuple: &[u8]) -> usize {
    let k = tuple.len();
    let mut rank = 0usize;
    let mut prev: i64 = -1;
    for (pos, &t) in tuple.iter().enumerate() {
        for c in (prev + 1) as u8..t {
            rank += binomial(n - 1 - c as usize, k - 1 - pos);
        }
        prev = t as i64;
    }
    rank
}

/// Merge two disjoint increasing tuples, returning the merged tuple and the
/// sign of the permutation that sorts the concatenation. `None` on overlap.
pub(crate) fn merge_sign(a: &[u8], b: &[u8]) -> Option<(Vec<u8>, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut sign = 1i32;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining entries of a
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, sign))
}

fn complement(n: usize, tuple: &[u8]) -> Vec<u8> {
    (0..n as u8).filter(|i| !tuple.contains(i)).collect()
}

/// Shared dense storage for forms and multivectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedCoeffs<S> {
    dim: usize,
    grade: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> GradedCoeffs<S> {
    fn zero(dim: usize, grade: usize) -> Self {
        assert!(grade <= dim, "grade {grade} exceeds dimension {dim}");
        GradedCoeffs {
            dim,
            grade,
            coeffs: vec![S::zero(); binomial(dim, grade)],
        }
    }

    fn from_coeffs(dim: usize, grade: usize, coeffs: Vec<S>) -> Self {
        assert_eq!(
            coeffs.len(),
            binomial(dim, grade),
            "coefficient vector length must be C(dim, grade)"
        );
        GradedCoeffs { dim, grade, coeffs }
    }
}

macro_rules! graded_value {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name<S>(GradedCoeffs<S>);

        impl<S: Scalar> $name<S> {
            pub fn zero(dim: usize, grade: usize) -> Self {
                $name(GradedCoeffs::zero(dim, grade))
            }

            /// Dense coefficients in lex multi-index order.
            pub fn from_coeffs(dim: usize, grade: usize, coeffs: Vec<S>) -> Self {
                $name(GradedCoeffs::from_coeffs(dim, grade, coeffs))
            }

            /// Basis monomial with coefficient `c`; `indices` are 1-based,
            /// not necessarily sorted. Repeated indices give zero.
            pub fn monomial(dim: usize, indices: &[usize], c: S) -> Self {
                let mut v = Self::zero(dim, indices.len());
                let mut idx: Vec<u8> = indices.iter().map(|&i| (i - 1) as u8).collect();
                // sort by adjacent transpositions, tracking the sign
                let mut sign = 1i32;
                for i in 1..idx.len() {
                    let mut j = i;
                    while j > 0 && idx[j - 1] > idx[j] {
                        idx.swap(j - 1, j);
                        sign = -sign;
                        j -= 1;
                    }
                }
                if idx.windows(2).any(|w| w[0] == w[1]) {
                    return v;
                }
                let r = tuple_rank(dim, &idx);
                v.0.coeffs[r] = if sign > 0 { c } else { -c };
                v
            }

            /// Grade-1 coordinate basis element `index` (1-based).
            pub fn basis(dim: usize, index: usize) -> Self {
                Self::monomial(dim, &[index], S::one())
            }

            pub fn dim(&self) -> usize {
                self.0.dim
            }

            pub fn grade(&self) -> usize {
                self.0.grade
            }

            pub fn coeffs(&self) -> &[S] {
                &self.0.coeffs
            }

            pub fn coeffs_mut(&mut self) -> &mut [S] {
                &mut self.0.coeffs
            }

            /// Coefficient of the (1-based, increasing) multi-index.
            pub fn coeff(&self, indices: &[usize]) -> S {
                let idx: Vec<u8> = indices.iter().map(|&i| (i - 1) as u8).collect();
                debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
                self.0.coeffs[tuple_rank(self.0.dim, &idx)].clone()
            }

            pub fn is_zero(&self) -> bool {
                self.0.coeffs.iter().all(|c| c.is_zero())
            }

            /// Largest coefficient magnitude.
            pub fn norm_inf(&self) -> f64 {
                self.0
                    .coeffs
                    .iter()
                    .map(|c| c.magnitude())
                    .fold(0.0, f64::max)
            }

            pub fn scaled(&self, c: &S) -> Self {
                $name(GradedCoeffs {
                    dim: self.0.dim,
                    grade: self.0.grade,
                    coeffs: self
                        .0
                        .coeffs
                        .iter()
                        .map(|x| x.clone() * c.clone())
                        .collect(),
                })
            }

            pub fn add(&self, other: &Self) -> Self {
                assert_eq!(self.0.dim, other.0.dim);
                assert_eq!(self.0.grade, other.0.grade);
                $name(GradedCoeffs {
                    dim: self.0.dim,
                    grade: self.0.grade,
                    coeffs: self
                        .0
                        .coeffs
                        .iter()
                        .zip(&other.0.coeffs)
                        .map(|(a, b)| a.clone() + b.clone())
                        .collect(),
                })
            }

            pub fn sub(&self, other: &Self) -> Self {
                self.add(&other.neg())
            }

            pub fn neg(&self) -> Self {
                $name(GradedCoeffs {
                    dim: self.0.dim,
                    grade: self.0.grade,
                    coeffs: self.0.coeffs.iter().map(|x| -x.clone()).collect(),
                })
            }

            /// Map the coefficients into another scalar type.
            pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> $name<T> {
                $name(GradedCoeffs {
                    dim: self.0.dim,
                    grade: self.0.grade,
                    coeffs: self.0.coeffs.iter().map(f).collect(),
                })
            }
        }
    };
}

graded_value!(
    Form,
    "An element of `Λ^k T*`: dense coefficients over increasing multi-indices."
);
graded_value!(
    MultiVector,
    "An element of `Λ^k T`, stored like [`Form`] but interpreted in the tangent algebra."
);

impl Form<f64> {
    pub fn to_f64(&self) -> Form<f64> {
        self.clone()
    }
}

/// An element of `Λⁿ T*` (or, for `A*` outputs, its dual line `Λⁿ T`):
/// `scale · e^{1…n}`. The orientation is the sign of `scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeElement<S> {
    pub scale: S,
}

impl<S: Scalar> VolumeElement<S> {
    pub fn standard() -> Self {
        VolumeElement { scale: S::one() }
    }

    pub fn orientation(&self) -> i8 {
        let m = self.scale.to_f64();
        if m > 0.0 {
            1
        } else if m < 0.0 {
            -1
        } else {
            0
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.scale.is_zero()
    }
}

/// Multivector tagged with the power of `ΛⁿT*` it is weighted by.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMultiVector<S> {
    pub value: MultiVector<S>,
    pub vol: VolumeElement<S>,
}

/// Form tagged with a `ΛⁿT*` weight (outputs of `A*` collapse their
/// `ΛⁿT` tag against accumulated `ΛⁿT*` weights).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedForm<S> {
    pub value: Form<S>,
    pub vol: VolumeElement<S>,
}

impl<S: Scalar> WeightedMultiVector<S> {
    /// Multiply the volume weight into the coefficients.
    pub fn flatten(&self) -> MultiVector<S> {
        self.value.scaled(&self.vol.scale)
    }
}

impl<S: Scalar> WeightedForm<S> {
    pub fn flatten(&self) -> Form<S> {
        self.value.scaled(&self.vol.scale)
    }
}

fn check_dims(a: usize, b: usize) -> Result<(), ExteriorError> {
    if a != b {
        Err(ExteriorError::DimMismatch(a, b))
    } else {
        Ok(())
    }
}

fn wedge_coeffs<S: Scalar>(
    dim: usize,
    ga: usize,
    gb: usize,
    a: &[S],
    b: &[S],
) -> Result<Vec<S>, ExteriorError> {
    if ga + gb > dim {
        return Err(ExteriorError::GradeOverflow(ga, gb, dim));
    }
    let ta = index_tuples(dim, ga);
    let tb = index_tuples(dim, gb);
    let mut out = vec![S::zero(); binomial(dim, ga + gb)];
    for (ia, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (ib, cb) in b.iter().enumerate() {
            if cb.is_zero() {
                continue;
            }
            if let Some((merged, sign)) = merge_sign(&ta[ia], &tb[ib]) {
                let r = tuple_rank(dim, &merged);
                let term = ca.clone() * cb.clone();
                let term = if sign > 0 { term } else { -term };
                out[r] = out[r].clone() + term;
            }
        }
    }
    Ok(out)
}

/// Exterior product of forms.
pub fn wedge<S: Scalar>(a: &Form<S>, b: &Form<S>) -> Result<Form<S>, ExteriorError> {
    check_dims(a.dim(), b.dim())?;
    let coeffs = wedge_coeffs(a.dim(), a.grade(), b.grade(), a.coeffs(), b.coeffs())?;
    Ok(Form::from_coeffs(a.dim(), a.grade() + b.grade(), coeffs))
}

/// Exterior product of multivectors.
pub fn wedge_mv<S: Scalar>(
    a: &MultiVector<S>,
    b: &MultiVector<S>,
) -> Result<MultiVector<S>, ExteriorError> {
    check_dims(a.dim(), b.dim())?;
    let coeffs = wedge_coeffs(a.dim(), a.grade(), b.grade(), a.coeffs(), b.coeffs())?;
    Ok(MultiVector::from_coeffs(
        a.dim(),
        a.grade() + b.grade(),
        coeffs,
    ))
}

/// Interior product `X ⌟ a` of a vector into a form; antiderivation of
/// degree −1 with `(X⌟a)(Y₁,…) = a(X, Y₁,…)`, so `e₁ ⌟ e¹² = e²`.
///
/// The companion last-argument contraction `ι̃_X a = (−1)^{k−1} X⌟a` is the
/// one appearing in the duality identity `Y∧(Aψ) = A(ι̃_Y ψ)`; the two agree
/// on odd grades (see `docs/conventions.md`).
pub fn contract<S: Scalar>(x: &MultiVector<S>, a: &Form<S>) -> Result<Form<S>, ExteriorError> {
    check_dims(x.dim(), a.dim())?;
    if x.grade() != 1 {
        return Err(ExteriorError::WrongGrade {
            expected: 1,
            got: x.grade(),
        });
    }
    if a.grade() == 0 {
        return Err(ExteriorError::WrongGrade {
            expected: 1,
            got: 0,
        });
    }
    let dim = a.dim();
    let tuples = index_tuples(dim, a.grade());
    let mut out: Form<S> = Form::zero(dim, a.grade() - 1);
    for (ia, ca) in a.coeffs().iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        let tup = &tuples[ia];
        for (pos, &i) in tup.iter().enumerate() {
            let xi = &x.coeffs()[i as usize];
            if xi.is_zero() {
                continue;
            }
            let rest: Vec<u8> = tup
                .iter()
                .enumerate()
                .filter(|(p, _)| *p != pos)
                .map(|(_, &v)| v)
                .collect();
            let r = tuple_rank(dim, &rest);
            let term = xi.clone() * ca.clone();
            let term = if pos % 2 == 0 { term } else { -term };
            out.coeffs_mut()[r] = out.coeffs()[r].clone() + term;
        }
    }
    Ok(out)
}

/// Duality pairing `⟨a, m⟩ = (1/k!) det(…)`, extended bilinearly. On basis
/// elements `⟨e^I, e_J⟩ = δ_IJ / k!`.
pub fn pairing<S: Scalar>(a: &Form<S>, m: &MultiVector<S>) -> Result<S, ExteriorError> {
    check_dims(a.dim(), m.dim())?;
    if a.grade() != m.grade() {
        return Err(ExteriorError::GradeMismatch(a.grade(), m.grade()));
    }
    let mut factorial = 1i64;
    for i in 2..=a.grade() as i64 {
        factorial *= i;
    }
    let mut acc = S::zero();
    for (ca, cm) in a.coeffs().iter().zip(m.coeffs()) {
        acc = acc + ca.clone() * cm.clone();
    }
    Ok(acc / S::from_int(factorial))
}

/// Evaluation of a 1-form on a vector, `α(X)`.
pub fn evaluate1<S: Scalar>(a: &Form<S>, x: &MultiVector<S>) -> Result<S, ExteriorError> {
    if a.grade() != 1 || x.grade() != 1 {
        return Err(ExteriorError::GradeMismatch(a.grade(), x.grade()));
    }
    pairing(a, x)
}

/// The isomorphism `A : Λ^k T* → Λ^{n−k} T ⊗ Λⁿ T*`, defined by
/// `k!⟨γ, η⟩ = η ∧ Aγ`. On basis forms `A e^I = sgn(I, I^c) e_{I^c} ⊗ e^{1…n}`;
/// with the standard metric this is the Hodge star.
pub fn big_a<S: Scalar>(a: &Form<S>) -> WeightedMultiVector<S> {
    let dim = a.dim();
    let k = a.grade();
    let tuples = index_tuples(dim, k);
    let mut out = MultiVector::zero(dim, dim - k);
    for (ia, ca) in a.coeffs().iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        let comp = complement(dim, &tuples[ia]);
        let (_, sign) = merge_sign(&tuples[ia], &comp).expect("complement is disjoint");
        let r = tuple_rank(dim, &comp);
        out.coeffs_mut()[r] = if sign > 0 { ca.clone() } else { -ca.clone() };
    }
    WeightedMultiVector {
        value: out,
        vol: VolumeElement::standard(),
    }
}

/// The mirror isomorphism `A* : Λ^k T → Λ^{n−k} T* ⊗ Λⁿ T`.
pub fn big_a_star<S: Scalar>(m: &MultiVector<S>) -> WeightedForm<S> {
    let dim = m.dim();
    let k = m.grade();
    let tuples = index_tuples(dim, k);
    let mut out = Form::zero(dim, dim - k);
    for (im, cm) in m.coeffs().iter().enumerate() {
        if cm.is_zero() {
            continue;
        }
        let comp = complement(dim, &tuples[im]);
        let (_, sign) = merge_sign(&tuples[im], &comp).expect("complement is disjoint");
        let r = tuple_rank(dim, &comp);
        out.coeffs_mut()[r] = if sign > 0 { cm.clone() } else { -cm.clone() };
    }
    WeightedForm {
        value: out,
        vol: VolumeElement::standard(),
    }
}

/// Top coefficient of a top-grade form, i.e. its value in `ΛⁿT*` relative to
/// the standard volume.
pub fn top_coefficient<S: Scalar>(a: &Form<S>) -> Result<S, ExteriorError> {
    if a.grade() != a.dim() {
        return Err(ExteriorError::WrongGrade {
            expected: a.dim(),
            got: a.grade(),
        });
    }
    Ok(a.coeffs()[0].clone())
}

/// Extend a linear map on 1-forms (matrix acting on coordinate columns) to
/// grade-`k` forms multiplicatively.
pub fn extend_to_grade<S: Scalar>(matrix: &[Vec<S>], a: &Form<S>) -> Form<S> {
    let dim = a.dim();
    debug_assert_eq!(matrix.len(), dim);
    let k = a.grade();
    if k == 0 {
        return a.clone();
    }
    let tuples = index_tuples(dim, k);
    let mut out = Form::zero(dim, k);
    for (ia, ca) in a.coeffs().iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        // image of e^{i1} ∧ … ∧ e^{ik} under the extension
        let mut acc = Form::monomial(dim, &[], S::one());
        for &i in &tuples[ia] {
            let mut img = Form::zero(dim, 1);
            for r in 0..dim {
                img.coeffs_mut()[r] = matrix[r][i as usize].clone();
            }
            acc = wedge(&acc, &img).expect("grade bounded by k");
        }
        out = out.add(&acc.scaled(ca));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    type F = Form<f64>;
    type Mv = MultiVector<f64>;

    fn e(indices: &[usize]) -> F {
        F::monomial(5, indices, 1.0)
    }

    fn ev(indices: &[usize]) -> Mv {
        Mv::monomial(5, indices, 1.0)
    }

    #[test]
    fn binomials_and_tuples() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(6, 3), 20);
        let t = index_tuples(5, 2);
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], vec![0, 1]);
        assert_eq!(t[9], vec![3, 4]);
        for (r, tup) in t.iter().enumerate() {
            assert_eq!(tuple_rank(5, tup), r);
        }
    }

    #[test]
    fn wedge_basis_products() {
        let w = wedge(&e(&[1]), &e(&[2])).unwrap();
        assert_eq!(w, e(&[1, 2]));
        let z = wedge(&e(&[1]), &e(&[1])).unwrap();
        assert!(z.is_zero());
        // (e12 + e34)^2 = 2 e1234
        let omega = e(&[1, 2]).add(&e(&[3, 4]));
        let sq = wedge(&omega, &omega).unwrap();
        assert_eq!(sq.coeff(&[1, 2, 3, 4]), 2.0);
        // graded anticommutativity on odd grades
        let a = e(&[1]).add(&e(&[3]).scaled(&2.0));
        let b = e(&[2]).add(&e(&[5]).scaled(&-1.0));
        let ab = wedge(&a, &b).unwrap();
        let ba = wedge(&b, &a).unwrap();
        assert_eq!(ab, ba.neg());
    }

    #[test]
    fn wedge_associative() {
        let a = e(&[1, 2]).add(&e(&[3, 4]).scaled(&0.5));
        let b = e(&[3]).add(&e(&[5]).scaled(&-2.0));
        let c = e(&[4]);
        let l = wedge(&wedge(&a, &b).unwrap(), &c).unwrap();
        let r = wedge(&a, &wedge(&b, &c).unwrap()).unwrap();
        assert_eq!(l, r);
    }

    #[test]
    fn contract_conventions() {
        // e1 ⌟ e12 = e2
        let r = contract(&ev(&[1]), &e(&[1, 2])).unwrap();
        assert_eq!(r, e(&[2]));
        // e5 ⌟ (e12 + e34) = 0
        let r = contract(&ev(&[5]), &e(&[1, 2]).add(&e(&[3, 4]))).unwrap();
        assert!(r.is_zero());
        // e5 ⌟ (e135 + e425) and the nilpotency X⌟(X⌟a) = 0
        let psi = e(&[1, 3, 5]).add(&e(&[4, 2, 5]));
        let r = contract(&ev(&[5]), &psi).unwrap();
        assert_eq!(r, e(&[1, 3]).add(&e(&[4, 2])));
        let rr = contract(&ev(&[5]), &r).unwrap();
        assert!(rr.is_zero());
    }

    #[test]
    fn contract_antiderivation() {
        let x = ev(&[1])
            .add(&ev(&[3]).scaled(&-2.0))
            .add(&ev(&[5]).scaled(&0.7));
        let a = e(&[1, 2]).add(&e(&[3, 4]).scaled(&1.5));
        let b = e(&[5]).add(&e(&[2]).scaled(&-0.3));
        let lhs = contract(&x, &wedge(&a, &b).unwrap()).unwrap();
        let xa = contract(&x, &a).unwrap();
        let xb = contract(&x, &b).unwrap();
        // grade of a is even here
        let rhs = wedge(&xa, &b).unwrap().add(&wedge(&a, &xb).unwrap());
        for (l, r) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            assert!((l - r).abs() < 1e-14);
        }
    }

    #[test]
    fn pairing_values() {
        assert_eq!(pairing(&e(&[1, 2]), &ev(&[1, 2])).unwrap(), 0.5);
        assert_eq!(pairing(&e(&[1, 2]), &ev(&[3, 4])).unwrap(), 0.0);
        let top = pairing(&e(&[1, 2, 3, 4, 5]), &ev(&[1, 2, 3, 4, 5])).unwrap();
        assert!((top - 1.0 / 120.0).abs() < 1e-16);
    }

    #[test]
    fn big_a_matches_hodge_star_on_all_basis_forms() {
        // independent Hodge oracle: *e^I = sgn(I, I^c) e^{I^c}
        for k in 0..=5usize {
            for tup in index_tuples(5, k) {
                let indices: Vec<usize> = tup.iter().map(|&i| i as usize + 1).collect();
                let a = F::monomial(5, &indices, 1.0);
                let out = big_a(&a);
                assert_eq!(out.vol, VolumeElement::standard());
                let comp = complement(5, &tup);
                let (_, sign) = merge_sign(&tup, &comp).unwrap();
                let comp_idx: Vec<usize> = comp.iter().map(|&i| i as usize + 1).collect();
                let expected = Mv::monomial(5, &comp_idx, sign as f64);
                assert_eq!(out.value, expected);
            }
        }
        // the two spec fixtures
        let out = big_a(&e(&[1, 2, 3, 4]));
        assert_eq!(out.value, ev(&[5]));
        let out = big_a(&e(&[5]));
        assert_eq!(out.value, ev(&[1, 2, 3, 4]));
        // linearity
        let out = big_a(&e(&[1, 2, 3, 4]).scaled(&2.0));
        assert_eq!(out.value, ev(&[5]).scaled(&2.0));
    }

    #[test]
    fn a_star_inverts_a_in_dim_5() {
        // in dimension 5, k(5−k) is even for every k, so A*∘A = id exactly
        for k in 0..=5usize {
            for tup in index_tuples(5, k) {
                let indices: Vec<usize> = tup.iter().map(|&i| i as usize + 1).collect();
                let a = F::monomial(5, &indices, 1.0);
                let round = big_a_star(&big_a(&a).value);
                assert_eq!(round.value, a);
            }
        }
    }

    #[test]
    fn a_star_pairing_compatibility() {
        // γ ∧ A*η = k!⟨γ, η⟩ · vol on random inputs
        for k in 1..=4usize {
            let n = binomial(5, k);
            for trial in 0..20 {
                let ga: Vec<f64> = (0..n)
                    .map(|i| ((trial * 7 + i * 13) % 11) as f64 - 5.0)
                    .collect();
                let ec: Vec<f64> = (0..n)
                    .map(|i| ((trial * 3 + i * 5) % 9) as f64 - 4.0)
                    .collect();
                let gamma = F::from_coeffs(5, k, ga);
                let eta = Mv::from_coeffs(5, k, ec);
                let fact: f64 = (1..=k).product::<usize>() as f64;
                let lhs = wedge(&gamma, &big_a_star(&eta).flatten()).unwrap().coeffs()[0];
                let rhs = fact * pairing(&gamma, &eta).unwrap();
                assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn volume_element_orientation() {
        let v = VolumeElement { scale: -2.5f64 };
        assert_eq!(v.orientation(), -1);
        assert!(v.is_valid());
        let z = VolumeElement { scale: 0.0f64 };
        assert_eq!(z.orientation(), 0);
        assert!(!z.is_valid());
    }

    #[test]
    fn extend_matrix_action() {
        // scaling matrix acts by c^k on grade k
        let c = 3.0f64;
        let m: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| if i == j { c } else { 0.0 }).collect())
            .collect();
        let a = e(&[1, 2]).add(&e(&[4, 5]).scaled(&-2.0));
        let img = extend_to_grade(&m, &a);
        assert_eq!(img, a.scaled(&(c * c)));
    }
}
