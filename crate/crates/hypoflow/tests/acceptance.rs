//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured figure (run with `--nocapture` to see them). Tolerances are
//! pinned in the asserts.

use std::time::Instant;

use nalgebra::{DMatrix, Matrix5};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use hypoflow::curvature::{
    cylinder_ricci_along_flow, cylinder_ricci_from_samples, subspace, tangential_curvature,
    trace_integral, DivergenceVerdict, LeftInvariantMetric, ObstructionConfig, RANK_TOL,
};
use hypoflow::exterior::{
    big_a, big_a_star, contract, extend_to_grade, pairing, wedge, wedge_mv, Form, MultiVector,
};
use hypoflow::flow::coframe::{coframe_evolve, CoframeConfig};
use hypoflow::flow::{
    classify_orbit, family_differential, integrate, project_family_tangent, Family, FamilyPoint,
    IvpConfig, OrbitClass,
};
use hypoflow::liealg::{iso_class, LieDifferential, NilpotentClass, DIM};
use hypoflow::scalar::{ratio, Rational};
use hypoflow::su2::{standard_triple, v_squared, validate, Condition, SU2Triple};
use hypoflow::torsion::{flow_rhs, gauge_matrix_at};

fn rng() -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(0x5u64 << 32 | 0x2026)
}

fn random_form(rng: &mut ChaCha20Rng, grade: usize) -> Form<f64> {
    let n = Form::<f64>::zero(DIM, grade).coeffs().len();
    Form::from_coeffs(
        DIM,
        grade,
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

#[test]
fn criterion_01_operator_identities() {
    let start = Instant::now();
    let mut rng = rng();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=4usize);
        let gamma = random_form(&mut rng, k);
        let beta = random_form(&mut rng, DIM - k);
        let fact_k: f64 = (1..=k).product::<usize>() as f64;
        let fact_nk: f64 = (1..=(DIM - k)).product::<usize>() as f64;

        // identity 1: k!⟨γ, Aβ⟩ = β∧γ
        let lhs1 = fact_k * pairing(&gamma, &big_a(&beta).flatten()).unwrap();
        let rhs1 = wedge(&beta, &gamma).unwrap().coeffs()[0];
        worst = worst.max((lhs1 - rhs1).abs() / rhs1.abs().max(1.0));

        // identity 2: (5−k)!⟨Aγ, β⟩ = k!⟨γ, Aβ⟩
        let a_gamma = big_a(&gamma).flatten();
        let beta_as_mv = MultiVector::from_coeffs(DIM, DIM - k, beta.coeffs().to_vec());
        let a_gamma_as_form = Form::from_coeffs(DIM, DIM - k, a_gamma.coeffs().to_vec());
        let lhs2 = fact_nk * pairing(&a_gamma_as_form, &beta_as_mv).unwrap();
        worst = worst.max((lhs2 - lhs1).abs() / lhs1.abs().max(1.0));

        // identity 3: Y∧(Aψ) = A(ι̃_Y ψ) with ι̃ the last-argument
        // contraction used by the identity block; in terms of the first-slot
        // interior product this is ι̃_Y ψ = (−1)^{k−1} Y⌟ψ
        let y =
            MultiVector::from_coeffs(DIM, 1, (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let psi = random_form(&mut rng, k);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let iota = contract(&y, &psi).unwrap().scaled(&sign);
        let lhs3 = wedge_mv(&y, &big_a(&psi).flatten()).unwrap();
        let rhs3 = big_a(&iota).flatten();
        worst = worst.max(lhs3.sub(&rhs3).norm_inf() / rhs3.norm_inf().max(1.0));
    }
    assert!(worst < 1e-12, "worst relative identity error {worst:.3e}");

    // Hodge-star oracle, exact on every basis form: *e^I = sgn(I, I^c) e^{I^c}
    for k in 0..=DIM {
        let n = Form::<f64>::zero(DIM, k).coeffs().len();
        for idx in 0..n {
            let mut coeffs = vec![0.0; n];
            coeffs[idx] = 1.0;
            let f = Form::from_coeffs(DIM, k, coeffs);
            let a = big_a(&f);
            // independent sign computation by counting transpositions
            let tuples = all_tuples(k);
            let tuple = &tuples[idx];
            let comp: Vec<usize> = (1..=DIM).filter(|i| !tuple.contains(i)).collect();
            let mut joined: Vec<usize> = tuple.clone();
            joined.extend(&comp);
            let mut sign = 1.0f64;
            let mut v = joined.clone();
            for i in 0..v.len() {
                for j in (i + 1)..v.len() {
                    if v[i] > v[j] {
                        v.swap(i, j);
                        sign = -sign;
                    }
                }
            }
            let expected = MultiVector::monomial(DIM, &comp, sign);
            assert_eq!(a.value, expected, "Hodge mismatch on index {idx} grade {k}");
            // round trip through the dual isomorphism is the identity in dim 5
            assert_eq!(big_a_star(&a.value).value, f);
        }
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "criterion 1 runtime {dt:?} >= 1 s");
    println!("criterion 01 PASS: A-identities worst rel err {worst:.3e}, Hodge table exact, runtime {dt:?}");
}

fn all_tuples(k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            out.push(acc.clone());
            return;
        }
        for i in start..=DIM {
            acc.push(i);
            rec(i + 1, k - 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, k, &mut Vec::new(), &mut out);
    out
}

#[test]
fn criterion_02_prop21_roundtrip() {
    let t = standard_triple();
    let v = validate(&t, 1e-9).expect("standard triple accepted");
    assert!(v.quadruple.alpha.sub(&Form::basis(DIM, 5)).norm_inf() < 1e-12);
    let omega2 = Form::monomial(DIM, &[1, 3], 1.0).add(&Form::monomial(DIM, &[4, 2], 1.0));
    let omega3 = Form::monomial(DIM, &[1, 4], 1.0).add(&Form::monomial(DIM, &[2, 3], 1.0));
    assert!(v.quadruple.omega2.sub(&omega2).norm_inf() < 1e-12);
    assert!(v.quadruple.omega3.sub(&omega3).norm_inf() < 1e-12);

    let swapped = SU2Triple {
        omega1: t.omega1.clone(),
        psi2: t.psi3.clone(),
        psi3: t.psi2.clone(),
        orientation: 1,
    };
    let rejection = validate(&swapped, 1e-9).expect_err("swap must be rejected");
    let sign = rejection
        .residuals
        .iter()
        .find(|r| r.condition == Condition::SignCondition)
        .expect("sign condition evaluated");
    assert!(!sign.passed, "swap must fail the sign condition");

    let mut rng = rng();
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let g = loop {
            let m: Vec<Vec<f64>> = (0..DIM)
                .map(|_| (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let det = DMatrix::from_fn(DIM, DIM, |i, j| m[i][j]).determinant();
            if det.abs() < 0.2 {
                continue;
            }
            if det > 0.0 {
                break m;
            }
            let mut m = m;
            for x in m[0].iter_mut() {
                *x = -*x;
            }
            break m;
        };
        let pulled = SU2Triple {
            omega1: extend_to_grade(&g, &t.omega1),
            psi2: extend_to_grade(&g, &t.psi2),
            psi3: extend_to_grade(&g, &t.psi3),
            orientation: 1,
        };
        let v =
            validate(&pulled, 1e-7).unwrap_or_else(|e| panic!("pullback {trial} rejected: {e}"));
        let q = &v.quadruple;
        let sq = wedge(&q.omega1, &q.omega1).unwrap();
        for (a, b, delta) in [
            (&q.omega2, &q.omega2, 1.0),
            (&q.omega3, &q.omega3, 1.0),
            (&q.omega2, &q.omega3, 0.0),
            (&q.omega1, &q.omega2, 0.0),
            (&q.omega1, &q.omega3, 0.0),
        ] {
            let w = wedge(a, b).unwrap();
            worst = worst.max(w.sub(&sq.scaled(&delta)).norm_inf() / sq.norm_inf());
        }
    }
    assert!(worst < 1e-10, "worst quadruple residual {worst:.3e}");
    println!("criterion 02 PASS: standard triple recovered, swap rejected by the sign condition, 100 pullbacks accepted (worst residual {worst:.3e})");
}

#[test]
fn criterion_03_v_squared_sign_fixture() {
    let t = standard_triple();
    let psi_bad = Form::monomial(DIM, &[1, 2, 5], 1.0).add(&Form::monomial(DIM, &[3, 4, 5], -1.0));
    let neg = v_squared(&t.omega1, &psi_bad);
    assert!(neg < 0.0, "V² should be negative, got {neg}");
    let v2 = v_squared(&t.omega1, &t.psi2);
    assert_eq!(v2, 4.0, "V must be twice the fixed volume form");
    println!("criterion 03 PASS: V²(e12+e34, e125−e345) = {neg} < 0 and V(standard) = 2·vol");
}

fn dyadic(rng: &mut ChaCha20Rng) -> f64 {
    // exactly representable parameters so the trace identities are bitwise
    rng.gen_range(-32..=32i32) as f64 / 16.0
}

fn random_point(rng: &mut ChaCha20Rng, family: Family) -> FamilyPoint {
    match family {
        Family::M1 => FamilyPoint::new(family, (0..4).map(|_| dyadic(rng)).collect()).unwrap(),
        Family::M2 => {
            let (s, t) = (dyadic(rng), dyadic(rng));
            let (a, b) = (dyadic(rng), dyadic(rng));
            let l = [s * t, s * s, t * t];
            FamilyPoint::new(
                family,
                vec![a * l[0], b * l[0], a * l[1], b * l[1], a * l[2], b * l[2]],
            )
            .unwrap()
        }
        Family::M3 => FamilyPoint::new(family, (0..2).map(|_| dyadic(rng)).collect()).unwrap(),
    }
}

#[test]
fn criterion_04_gauge_matrices() {
    let mut rng = rng();
    let m1 = |p: &[f64]| -> Matrix5<f64> {
        let (l, mu, h, k) = (p[0], p[1], p[2], p[3]);
        Matrix5::from_rows(&[
            [k / 2.0, 0.0, h / 2.0, -l / 2.0, 0.0].into(),
            [0.0, -k / 2.0, -l / 2.0, -h / 2.0, 0.0].into(),
            [h / 2.0, -l / 2.0, mu / 2.0, 0.0, 0.0].into(),
            [-l / 2.0, -h / 2.0, 0.0, -mu / 2.0, 0.0].into(),
            [0.0, 0.0, 0.0, 0.0, (k + mu) / 2.0].into(),
        ])
    };
    let m2 = |p: &[f64]| -> Matrix5<f64> {
        let (x, y, h, k, l, mu) = (p[0], p[1], p[2], p[3], p[4], p[5]);
        Matrix5::from_rows(&[
            [0.0, 0.0, (l + h) / 2.0, 0.0, 0.0].into(),
            [0.0, 0.0, 0.0, (-l + h) / 2.0, x].into(),
            [(l + h) / 2.0, 0.0, -(k + mu) / 2.0, 0.0, 0.0].into(),
            [0.0, (-l + h) / 2.0, 0.0, (-k + mu) / 2.0, -y].into(),
            [0.0, x, 0.0, -y, (k - mu) / 2.0].into(),
        ])
    };
    let m3 = |p: &[f64]| -> Matrix5<f64> {
        let (l, mu) = (p[0], p[1]);
        Matrix5::from_diagonal(
            &[
                -(mu + l) / 2.0,
                -(mu + l) / 2.0,
                (mu - l) / 2.0,
                (mu - l) / 2.0,
                l,
            ]
            .into(),
        )
    };
    let mut worst = 0.0f64;
    for family in [Family::M1, Family::M2, Family::M3] {
        for _ in 0..50 {
            let p = random_point(&mut rng, family);
            let q = gauge_matrix_at(&p.differential(), 1e-8).expect("family points are hypo");
            let expected = match family {
                Family::M1 => m1(&p.params),
                Family::M2 => m2(&p.params),
                Family::M3 => m3(&p.params),
            };
            let err = (q - expected).abs().max();
            worst = worst.max(err);
            // trace identities hold exactly (dyadic parameters)
            let tr_expected = match family {
                Family::M1 => (p.params[1] + p.params[3]) / 2.0,
                Family::M2 => -(p.params[5] + p.params[3]) / 2.0,
                Family::M3 => -p.params[0],
            };
            assert_eq!(
                q.trace(),
                tr_expected,
                "trace identity not exact on {family:?} at {:?}",
                p.params
            );
        }
    }
    assert!(worst < 1e-10, "worst entrywise error {worst:.3e}");
    println!("criterion 04 PASS: gauge matrices match the closed forms at 150 points (worst {worst:.3e}), traces exact");
}

#[test]
fn criterion_05_reduced_ode_correctness() {
    let mut rng = rng();
    // M1 and generic M2 need the su(2) frame motion removed; M3 is already
    // tangent to its parametrisation
    let mut worst_proj = 0.0f64;
    let mut worst_vel = 0.0f64;
    for family in [Family::M1, Family::M2] {
        for _ in 0..50 {
            let p = random_point(&mut rng, family);
            let (vel, residual) = project_family_tangent(&p).unwrap();
            worst_proj = worst_proj.max(residual);
            for (a, b) in vel.iter().zip(p.rhs()) {
                worst_vel = worst_vel.max((a - b).abs());
            }
        }
    }
    assert!(worst_proj < 1e-9, "projection residual {worst_proj:.3e}");
    assert!(worst_vel < 1e-9, "velocity mismatch {worst_vel:.3e}");

    let mut worst_m3 = 0.0f64;
    for _ in 0..50 {
        let p = random_point(&mut rng, Family::M3);
        let xt = flow_rhs(&p.differential(), 1e-8).unwrap();
        let expected = family_differential(Family::M3, &p.rhs());
        worst_m3 = worst_m3.max(xt.add(&expected.scaled(&-1.0)).norm_inf());
    }
    assert!(worst_m3 < 1e-9, "M3 unprojected mismatch {worst_m3:.3e}");
    println!(
        "criterion 05 PASS: projected tangents match the reduced ODEs on M1/M2 \
         (residual {worst_proj:.3e}, velocity {worst_vel:.3e}); M3 unprojected ({worst_m3:.3e}). \
         Note: generic M2 points need the su(2) projection, like M1."
    );
}

#[test]
fn criterion_06_first_integral_conservation() {
    let start = Instant::now();
    let mut rng = rng();
    let mut worst = 0.0f64;
    for family in [Family::M1, Family::M2, Family::M3] {
        let mut done = 0usize;
        while done < 20 {
            let mut p = random_point(&mut rng, family);
            let scale = 0.25 / p.norm_inf().max(0.25);
            for x in p.params.iter_mut() {
                *x *= scale;
            }
            let traj = integrate(&p, (0.0, 1.0), &IvpConfig::default()).expect("integrates");
            assert!(!traj.blown_up, "unexpected blow-up from a small start");
            for drift in traj.integral_drifts().into_iter().flatten() {
                worst = worst.max(drift);
            }
            done += 1;
        }
    }
    let dt = start.elapsed();
    assert!(worst < 1e-6, "worst relative drift {worst:.3e}");
    assert!(
        dt.as_secs_f64() < 10.0,
        "criterion 6 runtime {dt:?} >= 10 s"
    );
    println!("criterion 06 PASS: every defined invariant drifts < 1e-6 over unit time (worst {worst:.3e}), runtime {dt:?}");
}

#[test]
fn criterion_07_ol_closed_form() {
    // s(0) = 2 puts the pole of s(t) = 2/(1−3t) at t = 1/3, inside the span
    let theta: f64 = std::f64::consts::FRAC_PI_6;
    let (mu, k) = (2.0 * theta.cos().powi(2), 2.0 * theta.sin().powi(2));
    let y = 2.0 * theta.sin() * theta.cos();
    let p = FamilyPoint::new(Family::M2, vec![0.0, y, 0.0, k, 0.0, mu]).unwrap();
    let cfg = IvpConfig {
        rtol: 1e-12,
        atol: 1e-12,
        norm_ceiling: 1e4,
        ..IvpConfig::default()
    };
    let traj = integrate(&p, (0.0, 0.5), &cfg).unwrap();
    assert!(traj.blown_up, "the pole must be flagged as a blow-up");
    let t_last = traj.samples.last().unwrap().t;
    assert!(
        (t_last - 1.0 / 3.0).abs() < 0.01,
        "blow-up at {t_last}, expected near 1/3"
    );
    let mut worst = 0.0f64;
    for s in &traj.samples {
        let s_num = s.state[5] + s.state[3];
        let s_exact = 2.0 / (1.0 - 3.0 * s.t);
        worst = worst.max((s_num - s_exact).abs() / s_exact.abs());
    }
    assert!(worst < 1e-8, "closed-form drift {worst:.3e}");

    // coframe factors (1−3t)^{∓1/3} of the eigendirections
    let d0 = p.differential();
    let ctraj = coframe_evolve(&d0, (0.0, 0.30), &CoframeConfig::default(), &[]).unwrap();
    let (c, s) = (theta.cos(), theta.sin());
    let mut worst_frame = 0.0f64;
    for (idx, &t) in ctraj.ts.iter().enumerate() {
        let u = &ctraj.u[idx];
        let f_plus = (1.0 - 3.0 * t).powf(-1.0 / 3.0);
        let f_minus = (1.0 - 3.0 * t).powf(1.0 / 3.0);
        for col in 0..DIM {
            let e = |row: usize| u[(row, col)];
            let big_e = c * e(3) - s * e(4);
            let big_e0 = [0.0, 0.0, 0.0, c, -s][col];
            worst_frame = worst_frame.max((big_e - f_plus * big_e0).abs() / f_plus);
            let big_f = s * e(3) + c * e(4);
            let big_f0 = [0.0, 0.0, 0.0, s, c][col];
            worst_frame = worst_frame.max((big_f - f_minus * big_f0).abs());
            let e3_exp = if col == 2 { f_minus } else { 0.0 };
            worst_frame = worst_frame.max((e(2) - e3_exp).abs());
        }
    }
    assert!(worst_frame < 1e-6, "coframe factor drift {worst_frame:.3e}");
    println!("criterion 07 PASS: s(t) = 2/(1−3t) to {worst:.3e} up to the flagged pole at t ≈ 1/3; coframe factors (1−3t)^(±1/3) to {worst_frame:.3e}");
}

#[test]
fn criterion_08_curvature_span() {
    let mut rng = rng();
    let m3_generators = |l: f64, mu: f64| -> Vec<Vec<f64>> {
        let q = l * l - mu * mu;
        let f = |pairs: &[(f64, [usize; 2])]| -> Vec<f64> {
            let mut form = Form::zero(DIM, 2);
            for (c, ij) in pairs {
                form = form.add(&Form::monomial(DIM, &[ij[0], ij[1]], *c));
            }
            form.coeffs().to_vec()
        };
        vec![
            f(&[(0.5 * q, [3, 4]), ((l + mu) * (l + mu), [1, 2])]),
            f(&[(q, [2, 4]), (q, [1, 3])]),
            f(&[(-q, [1, 4]), (q, [2, 3])]),
            f(&[(3.0 * l * l + 4.0 * mu * l + mu * mu, [1, 5])]),
            f(&[(3.0 * l * l + 4.0 * mu * l + mu * mu, [2, 5])]),
            f(&[(0.5 * q, [1, 2]), ((l - mu) * (l - mu), [3, 4])]),
            f(&[(3.0 * l * l - 4.0 * mu * l + mu * mu, [3, 5])]),
            f(&[(3.0 * l * l - 4.0 * mu * l + mu * mu, [4, 5])]),
        ]
    };
    let projector = |vs: &[Vec<f64>]| -> DMatrix<f64> {
        let m = DMatrix::from_fn(10, vs.len(), |r, c| vs[c][r]);
        let svd = m.svd(true, false);
        let u = svd.u.as_ref().unwrap();
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let cols: Vec<_> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 1e-12 * smax)
            .map(|(i, _)| u.column(i).into_owned())
            .collect();
        let q = DMatrix::from_fn(10, cols.len(), |r, c| cols[c][r]);
        &q * q.transpose()
    };

    let omega_at = |l: f64, mu: f64| {
        let d = family_differential(Family::M3, &[l, mu]);
        let q = gauge_matrix_at(&d, 1e-8).unwrap();
        tangential_curvature(&LeftInvariantMetric::standard(d), &q).unwrap()
    };

    let mut worst_dist = 0.0f64;
    let mut found = 0usize;
    while found < 10 {
        let l: f64 = rng.gen_range(0.3..2.0);
        let mu: f64 = rng.gen_range(0.3..2.0);
        let margin = 0.1;
        if (3.0 * l * l + mu * mu - 4.0 * mu * l).abs() < margin
            || (3.0 * l * l + mu * mu + 4.0 * mu * l).abs() < margin
            || (l * mu * (l * l - mu * mu)).abs() < 0.05
        {
            continue;
        }
        found += 1;
        let omega = omega_at(l, mu);
        let (rank, _) = omega.rank(RANK_TOL);
        assert_eq!(rank, 8, "rank at ({l},{mu})");
        let dist =
            (projector(&omega.image_basis(RANK_TOL)) - projector(&m3_generators(l, mu))).norm();
        worst_dist = worst_dist.max(dist);
    }
    assert!(worst_dist < 1e-8, "subspace distance {worst_dist:.3e}");

    assert!(
        omega_at(1.0, 1.0).rank(RANK_TOL).0 < 8,
        "(1,1) must degenerate"
    );
    assert_eq!(
        omega_at(1.0, 3.0).rank(RANK_TOL).0,
        6,
        "(1,3) must have rank 6"
    );
    println!("criterion 08 PASS: span equals the eight generators at 10 points (distance {worst_dist:.3e}); rank drops at (1,1); rank 6 at (1,3)");
}

#[test]
fn criterion_09_ricci_flatness_oracle() {
    // abelian, constant metric: exactly zero
    let d = LieDifferential::zero();
    let g = Matrix5::identity();
    let ric = cylinder_ricci_from_samples(&d, &[g, g, g, g, g], 1e-3).unwrap();
    assert_eq!(ric.norm(), 0.0, "flat case must be exactly zero");

    // O_l with s(0) = 1 (pole at t = 2/3): Ricci along the flow
    let theta: f64 = 0.7;
    let (mu, k) = (theta.cos().powi(2), theta.sin().powi(2));
    let y = theta.sin() * theta.cos();
    let d0 = family_differential(Family::M2, &[0.0, y, 0.0, k, 0.0, mu]);
    let cfg = CoframeConfig {
        ivp: IvpConfig {
            rtol: 1e-12,
            atol: 1e-12,
            ..IvpConfig::default()
        },
        rhs_tol: 1e-6,
    };
    let mut worst_ol = 0.0f64;
    for t in [0.05, 0.2, 0.4] {
        let ric = cylinder_ricci_along_flow(&d0, t, 1e-3, &cfg).unwrap();
        worst_ol = worst_ol.max(ric.norm());
    }
    assert!(worst_ol < 1e-5, "O_l Ricci norm {worst_ol:.3e}");

    // third family, A = −1 orbit: explicit metric from the hyperbolic-frame
    // parametrisation μ = cosh³s, λ = sinh s cosh²s, ds/dt = cosh³s
    let s_of = |dt_off: f64, s0: f64| -> f64 {
        let n = 4000usize;
        let h = dt_off / n as f64;
        let mut s = s0;
        for _ in 0..n {
            let f = |s: f64| s.cosh().powi(3);
            let k1 = f(s);
            let k2 = f(s + 0.5 * h * k1);
            let k3 = f(s + 0.5 * h * k2);
            let k4 = f(s + h * k3);
            s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        s
    };
    let s0 = 0.8f64;
    let g_of = |dt_off: f64| -> Matrix5<f64> {
        let s = s_of(dt_off, s0);
        let f1 = 1.0 / (s.cosh() * (1.0 + s.tanh()).sqrt());
        let f3 = (1.0 + s.tanh()).sqrt();
        let f5 = s.cosh();
        Matrix5::from_diagonal(&[f1 * f1, f1 * f1, f3 * f3, f3 * f3, f5 * f5].into())
    };
    // the algebra presented in the frame of that parametrisation
    let d_eta = family_differential(Family::M3, &[1.0, 0.0]);
    let h = 1e-3;
    let stencil: [Matrix5<f64>; 5] = std::array::from_fn(|i| g_of((i as f64 - 2.0) * h));
    let ric = cylinder_ricci_from_samples(&d_eta, &stencil, h).unwrap();
    // sanity: the parametrisation matches the A = −1 isoline
    let (l, mu) = (s0.sinh() * s0.cosh().powi(2), s0.cosh().powi(3));
    let a_const = (l * l - mu * mu).powi(3) / mu.powi(4);
    assert!((a_const + 1.0).abs() < 1e-12, "A = {a_const}, expected −1");
    assert!(ric.norm() < 1e-5, "A=−1 Ricci norm {:.3e}", ric.norm());
    println!(
        "criterion 09 PASS: flat case exactly 0; O_l Ricci ≤ {worst_ol:.3e}; A=−1 frame Ricci {:.3e}",
        ric.norm()
    );
}

#[test]
fn criterion_10_classification_table() {
    let start = Instant::now();
    let r = |n: i64, d: i64| ratio(n, d);
    let zero = || r(0, 1);

    // the six hierarchy classes from family representatives, exact mode
    let cases: Vec<(LieDifferential<Rational>, NilpotentClass)> = vec![
        (
            family_differential(Family::M1, &[r(1, 1), zero(), zero(), r(1, 1)]),
            NilpotentClass::N121314,
        ),
        (
            family_differential(
                Family::M2,
                &[r(1, 1), r(2, 1), r(1, 1), r(2, 1), r(1, 1), r(2, 1)],
            ),
            NilpotentClass::N121324,
        ),
        (
            family_differential(Family::M3, &[r(2, 1), r(1, 1)]),
            NilpotentClass::N0234,
        ),
        // degeneration: λ = h = 0 with k, μ ≠ 0 lands on (0,0,0,12,13)
        (
            family_differential(Family::M1, &[zero(), r(1, 1), zero(), r(2, 1)]),
            NilpotentClass::N1213,
        ),
        // degeneration: x = h = λ = 0 lands on (0,0,0,0,12)
        (
            family_differential(
                Family::M2,
                &[zero(), r(1, 1), zero(), r(1, 1), zero(), r(1, 1)],
            ),
            NilpotentClass::N02,
        ),
        (LieDifferential::zero(), NilpotentClass::Abelian),
    ];
    for (d, expected) in &cases {
        let got = iso_class(d, 0.0).expect("exact classification");
        assert_eq!(got, *expected, "wrong class");
    }

    // λ = h = μ = 0, k ≠ 0 degenerates further, to (0,0,0,0,12)
    let d = family_differential(Family::M1, &[zero(), zero(), zero(), r(1, 1)]);
    assert_eq!(iso_class(&d, 0.0).unwrap(), NilpotentClass::N02);

    // third-family overlap with the second: μ² > λ² matches the slice
    // x = y = λ = μ = 0 of the second family
    let m3_pt = family_differential(Family::M3, &[r(3, 1), r(5, 1)]);
    // k = 2λ, h = sqrt(μ²−λ²) = 4
    let overlap = family_differential(
        Family::M2,
        &[zero(), zero(), r(4, 1), r(6, 1), zero(), zero()],
    );
    assert_eq!(
        iso_class(&m3_pt, 0.0).unwrap(),
        NilpotentClass::N0234,
        "μ² > λ² third-family point"
    );
    assert_eq!(
        iso_class(&overlap, 0.0).unwrap(),
        NilpotentClass::N0234,
        "second-family overlap slice"
    );

    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 5.0, "criterion 10 runtime {dt:?} >= 5 s");
    println!("criterion 10 PASS: six fixtures map to the six hierarchy classes, degenerations verified, exact mode, runtime {dt:?}");
}

#[test]
fn criterion_11_obstruction_reproduction() {
    // first family flowing into its blow-up: ∫ tr X̂ decreases monotonically
    // past −10³
    let p = FamilyPoint::new(Family::M1, vec![0.0, -1.0, 0.0, 0.0]).unwrap();
    let traj = integrate(&p, (0.0, 0.4), &IvpConfig::default()).unwrap();
    let w = subspace("full").unwrap();
    let report = trace_integral(&traj, &w, &ObstructionConfig::default()).unwrap();
    assert_eq!(report.verdict, DivergenceVerdict::NegativeInfinity);
    let mut prev = f64::INFINITY;
    for (_, v) in &report.samples {
        assert!(
            *v <= prev + 1e-9,
            "partial sums must decrease monotonically"
        );
        prev = *v;
    }
    let last_m1 = report.samples.last().unwrap().1;
    assert!(last_m1 < -1e3, "last partial sum {last_m1}");

    // O_l toward t = 2/3 (s(0) = 1): ∫(μ+k) = 2·∫ tr X̂|_{W₊}
    let theta: f64 = 0.7;
    let (mu, k) = (theta.cos().powi(2), theta.sin().powi(2));
    let y = theta.sin() * theta.cos();
    let p = FamilyPoint::new(Family::M2, vec![0.0, y, 0.0, k, 0.0, mu]).unwrap();
    let traj = integrate(&p, (0.0, 0.6), &IvpConfig::default()).unwrap();
    let mut w = DMatrix::<f64>::zeros(DIM, 1);
    w[(3, 0)] = theta.cos();
    w[(4, 0)] = -theta.sin();
    let report = trace_integral(&traj, &w, &ObstructionConfig::default()).unwrap();
    assert_eq!(report.verdict, DivergenceVerdict::PositiveInfinity);
    let last_ol = report.samples.last().unwrap().1;
    assert!(
        2.0 * last_ol > 1e3,
        "∫(μ+k) = {} must exceed 1e3",
        2.0 * last_ol
    );
    println!("criterion 11 PASS: M1 trace integral verdict −∞ (last partial {last_m1:.3e}); O_l verdict +∞ with ∫(μ+k) = {:.3e}", 2.0 * last_ol);
}

#[test]
fn orbit_label_fixtures() {
    // supporting check: the classifier agrees with the worked examples
    let l = classify_orbit(
        &FamilyPoint::new(Family::M1, vec![0.0, 1.0, 0.0, 0.0]).unwrap(),
        1e-8,
    );
    assert_eq!(l.class, OrbitClass::M1MuAxis);
    let l = classify_orbit(&FamilyPoint::new(Family::M3, vec![1.0, 2.0]).unwrap(), 1e-8);
    match l.class {
        OrbitClass::M3NegA { a } => assert!((a + 27.0 / 16.0).abs() < 1e-12),
        other => panic!("expected the negative-A class, got {other:?}"),
    }
}
