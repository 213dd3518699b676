//! Hypo SU(2)-structure geometry on 5-dimensional nilpotent Lie algebras.
//!
//! The crate is organised around a chain of increasingly specialised layers:
//!
//! * [`exterior`] — graded exterior algebra over an oriented 5- or
//!   6-dimensional real vector space, together with the isomorphisms `A` and
//!   `A*` between forms and volume-weighted multivectors.
//! * [`liealg`] — the variety of framed 5-dimensional Lie algebras (linear
//!   maps `d` from 1-forms to 2-forms with `d̂∘d = 0`), the right GL(5)
//!   action, its infinitesimal version, and isomorphism-class fingerprinting
//!   of nilpotent algebras.
//! * [`su2`] — SU(2)-structures encoded by a triple `(ω₁, ψ₂, ψ₃)`: the
//!   operators `X_ω`, `α_ψ`, `V²`, the validity test with recovery of
//!   `(α, ω₂, ω₃)`, metrics and quaternionic operators, and the pointwise
//!   Hamiltonian quantities.
//! * [`torsion`] — intrinsic-torsion components of a hypo pair, the symmetric
//!   gauge matrix they assemble into, and the induced vector field on the
//!   variety of differentials.
//! * [`flow`] — numerical integration of the evolution flow, the reduced
//!   parameter ODEs on the three nilpotent families, first integrals, orbit
//!   classification, and coframe/metric evolution.
//! * [`curvature`] — left-invariant Riemannian geometry: Levi-Civita
//!   connection, curvature, the Gauss-equation tangential curvature of the
//!   generalized cylinder, holonomy-rank reports, a Ricci-flatness oracle for
//!   the cylinder metric, and trace-integral obstruction reports.
//! * [`io`] — the plain-text form-file format and JSON/CSV trajectory export.
//!
//! Coefficients are generic over [`scalar::Scalar`]; `f64` drives the flows
//! and curvature, while exact rationals back the classification results.

// index loops mirror the tensor formulas; iterator rewrites obscure them
#![allow(clippy::needless_range_loop)]
#![allow(clippy::result_large_err)]

pub mod curvature;
pub mod exterior;
pub mod flow;
pub mod io;
pub mod liealg;
pub mod scalar;
pub mod su2;
pub mod torsion;

pub use scalar::{Rational, Scalar};
