//! Orbit classification for the reduced flows, following the taxonomy of
//! invariant semi-algebraic sets: sign symmetries are applied to bring a
//! point into the normal region of its class, equalities are tested with a
//! relative margin, and points inside the margin band come back
//! `Unclassified` rather than guessed.

use serde::{Deserialize, Serialize};

use super::{Family, FamilyPoint};

/// Relative margin for equality and strict-inequality predicates.
pub const CLASSIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OrbitClass {
    /// The origin, the unique critical point.
    Critical,
    /// M1 `{h = 0 = k = λ, μ > 0}`.
    M1MuAxis,
    /// M1 `{μ = k > 0, h = 0 = λ}`.
    M1MuEqualsK,
    /// M1 orbit of `O₂`: `h = λ = 0`, `(μ−k)⁴/(μ³k³) = A`, normalised to
    /// `μ > k`; for `A > 0` the sign of `k` picks one of two orbits.
    M1O2 { a: f64, k_positive: Option<bool> },
    /// M1 orbit of `O₃`: `k = 0`, `(μ²+4(h²+λ²))²/(h²+λ²)³ = A`, direction
    /// `[h:λ]` with `h, λ ≥ 0`.
    M1O3 { a: f64, p: [f64; 2] },
    /// M1 orbit of `O₄`: `h = 0`, normalised to `k > 0, λ > 0`.
    M1O4 { a: f64, b: f64 },
    /// M1 orbit of `O₅`: `λ = 0`, normalised to `h > 0, k > 0`.
    M1O5 { a: f64, b: f64 },
    /// M1 generic orbit `O₆` with its curve parameter `s`.
    M1O6 { a: f64, b: f64, c: f64, s: f64 },
    /// M2 orbit `O_{A,l}`: all six parameters positive, constant `A` and the
    /// line `l = [x : h : λ]` on the quadric.
    M2OAl { a: f64, l: [f64; 3] },
    /// M2 orbit `O_l`: `x = h = λ = 0`, `l = [y : k : μ]`.
    M2Ol { l: [f64; 3] },
    /// M3 `{μ = 0, λ > 0}`.
    M3LambdaAxis,
    /// M3 `{(λ²−μ²)³ = Aμ⁴, λ, μ > 0}` with `A ≥ 0`.
    M3NonnegA { a: f64 },
    /// M3 `{(λ²−μ²)³ = Aμ⁴, μ > 0}` with `A < 0`.
    M3NegA { a: f64 },
    /// Inside a margin band or outside the taxonomy.
    Unclassified { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitLabel {
    pub family: Family,
    pub class: OrbitClass,
    /// Sign flips applied to reach the normal region.
    pub applied_symmetry: Vec<String>,
}

struct Gate {
    scale: f64,
    tol: f64,
}

impl Gate {
    fn zero(&self, x: f64) -> bool {
        x.abs() <= self.tol * self.scale
    }

    fn pos(&self, x: f64) -> bool {
        x > self.tol * self.scale
    }

    /// Strictly away from zero (either sign).
    fn nonzero(&self, x: f64) -> bool {
        x.abs() > self.tol * self.scale
    }
}

fn unclassified(family: Family, reason: impl Into<String>) -> OrbitLabel {
    OrbitLabel {
        family,
        class: OrbitClass::Unclassified {
            reason: reason.into(),
        },
        applied_symmetry: Vec::new(),
    }
}

/// Classify a family point into the orbit taxonomy.
pub fn classify_orbit(p: &FamilyPoint, tol: f64) -> OrbitLabel {
    match p.family {
        Family::M1 => classify_m1(&p.params, tol),
        Family::M2 => classify_m2(&p.params, tol),
        Family::M3 => classify_m3(&p.params, tol),
    }
}

// M1 symmetries: flip λ; flip h; flip (μ,k) jointly.
const M1_FLIPS: [&str; 3] = ["lambda->-lambda", "h->-h", "(mu,k)->-(mu,k)"];

fn m1_apply(params: &[f64], mask: u8) -> [f64; 4] {
    let [mut l, mut mu, mut h, mut k] = [params[0], params[1], params[2], params[3]];
    if mask & 1 != 0 {
        l = -l;
    }
    if mask & 2 != 0 {
        h = -h;
    }
    if mask & 4 != 0 {
        mu = -mu;
        k = -k;
    }
    [l, mu, h, k]
}

fn mask_names(mask: u8, names: &[&'static str]) -> Vec<String> {
    names
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, n)| n.to_string())
        .collect()
}

fn classify_m1(params: &[f64], tol: f64) -> OrbitLabel {
    let family = Family::M1;
    let scale = params.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return OrbitLabel {
            family,
            class: OrbitClass::Critical,
            applied_symmetry: Vec::new(),
        };
    }
    let g = Gate { scale, tol };
    let [l0, mu0, h0, k0] = [params[0], params[1], params[2], params[3]];

    // margin band: any coordinate that is neither clearly zero nor clearly
    // nonzero blocks an honest classification
    for (name, v) in [("lambda", l0), ("mu", mu0), ("h", h0), ("k", k0)] {
        if !g.zero(v) && !g.nonzero(v) {
            return unclassified(family, format!("{name} inside the margin band"));
        }
    }

    let zl = g.zero(l0);
    let zh = g.zero(h0);
    let zk = g.zero(k0);
    let zmu = g.zero(mu0);

    if zk && zh && zl {
        // μ ≠ 0 here since scale > 0
        for mask in [0u8, 4] {
            let [_, mu, _, _] = m1_apply(params, mask);
            if g.pos(mu) {
                return OrbitLabel {
                    family,
                    class: OrbitClass::M1MuAxis,
                    applied_symmetry: mask_names(mask, &M1_FLIPS),
                };
            }
        }
        return unclassified(family, "mu axis normalisation failed");
    }

    if zk {
        // O₃: k = 0, (h, λ) ≠ 0; normalise h ≥ 0 and λ ≥ 0 independently
        let mut mask = 0u8;
        if h0 < 0.0 {
            mask |= 2;
        }
        if l0 < 0.0 {
            mask |= 1;
        }
        let [l, mu, h, _] = m1_apply(params, mask);
        let r2 = h * h + l * l;
        let a = (mu * mu + 4.0 * r2).powi(2) / r2.powi(3);
        let r = r2.sqrt();
        return OrbitLabel {
            family,
            class: OrbitClass::M1O3 {
                a,
                p: [h / r, l / r],
            },
            applied_symmetry: mask_names(mask, &M1_FLIPS),
        };
    }

    if zh && zl {
        // O₂ family: normalise μ − k > 0 unless μ = k
        if g.zero(mu0 - k0) {
            for mask in [0u8, 4] {
                let [_, mu, _, k] = m1_apply(params, mask);
                if g.pos(mu) && g.pos(k) {
                    return OrbitLabel {
                        family,
                        class: OrbitClass::M1MuEqualsK,
                        applied_symmetry: mask_names(mask, &M1_FLIPS),
                    };
                }
            }
            return unclassified(family, "mu=k normalisation failed");
        }
        let mask = if mu0 - k0 > 0.0 { 0u8 } else { 4 };
        let [_, mu, _, k] = m1_apply(params, mask);
        if zmu {
            // μ = 0 is the boundary of the (μ−k)⁴/(μ³k³) chart
            return unclassified(family, "mu = 0 on the O2 chart");
        }
        let a = (mu - k).powi(4) / (mu.powi(3) * k.powi(3));
        let k_positive = if a > 0.0 { Some(k > 0.0) } else { None };
        return OrbitLabel {
            family,
            class: OrbitClass::M1O2 { a, k_positive },
            applied_symmetry: mask_names(mask, &M1_FLIPS),
        };
    }

    if zh {
        // O₄: h = 0, k ≠ 0, λ ≠ 0; normalise k > 0 and λ > 0
        let mut mask = 0u8;
        if l0 < 0.0 {
            mask |= 1;
        }
        if k0 < 0.0 {
            mask |= 4;
        }
        let [l, mu, _, k] = m1_apply(params, mask);
        let b = (3.0 * k * mu + 2.0 * l * l - 3.0 * k * k) / (k * k * l);
        let a = 27.0 * (l * l + k * mu).powi(3) / (k.powi(4) * l.powi(4));
        return OrbitLabel {
            family,
            class: OrbitClass::M1O4 { a, b },
            applied_symmetry: mask_names(mask, &M1_FLIPS),
        };
    }

    if zl {
        // O₅: λ = 0, h ≠ 0, k ≠ 0; normalise h > 0 and k > 0
        let mut mask = 0u8;
        if h0 < 0.0 {
            mask |= 2;
        }
        if k0 < 0.0 {
            mask |= 4;
        }
        let [_, mu, h, k] = m1_apply(params, mask);
        let a = k.powi(4) * (mu * k - h * h) / h.powi(4);
        let b = k * k * (mu * k - 2.0 * h * h - k * k) / h.powi(3);
        if g.zero(a) && g.zero(b) {
            return unclassified(family, "O5 with A = B = 0");
        }
        return OrbitLabel {
            family,
            class: OrbitClass::M1O5 { a, b },
            applied_symmetry: mask_names(mask, &M1_FLIPS),
        };
    }

    // O₆: all of λ, h, k nonzero; normalise B > 0, C > 0, k > 0
    for mask in 0u8..8 {
        let [l, mu, h, k] = m1_apply(params, mask);
        let i1 = (h * h - l * l - k * mu) / (h * l);
        let i2 = k.powi(4) * l / h.powi(3);
        let i3 = k * k * (6.0 * h * h - 2.0 * l * l - 3.0 * mu * k + 3.0 * k * k) / h.powi(3);
        let (a, b, c) = (3.0 * i1, 3.0 * i2, i3);
        if b <= 0.0 || c <= 0.0 || k <= 0.0 {
            continue;
        }
        // curve parameter from h = (1/3)s²Bλ, sign fixed by the λ(s) formula
        let s_sq = 3.0 * h / (b * l);
        if s_sq <= 0.0 {
            continue;
        }
        let s_abs = s_sq.sqrt();
        for s in [s_abs, -s_abs] {
            let den = s.powi(4) * b * b + 3.0 + a * b * s * s + b * c * s.powi(3);
            if den.abs() < tol * scale {
                continue;
            }
            let l_formula = s.powi(3) * b * b / den;
            if (l_formula - l).abs() <= 1e-6 * l.abs().max(tol * scale) {
                return OrbitLabel {
                    family,
                    class: OrbitClass::M1O6 { a, b, c, s },
                    applied_symmetry: mask_names(mask, &M1_FLIPS),
                };
            }
        }
    }
    unclassified(
        family,
        "no O6 normalisation matches the curve parametrisation",
    )
}

// M2 symmetries: flip (x,h,λ); flip (y,k,μ); flip (x,y).
const M2_FLIPS: [&str; 3] = ["(x,h,lambda)->-", "(y,k,mu)->-", "(x,y)->-"];

fn m2_apply(params: &[f64], mask: u8) -> [f64; 6] {
    let [mut x, mut y, mut h, mut k, mut l, mut mu] = [
        params[0], params[1], params[2], params[3], params[4], params[5],
    ];
    if mask & 1 != 0 {
        x = -x;
        h = -h;
        l = -l;
    }
    if mask & 2 != 0 {
        y = -y;
        k = -k;
        mu = -mu;
    }
    if mask & 4 != 0 {
        x = -x;
        y = -y;
    }
    [x, y, h, k, l, mu]
}

fn classify_m2(params: &[f64], tol: f64) -> OrbitLabel {
    let family = Family::M2;
    let scale = params.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return OrbitLabel {
            family,
            class: OrbitClass::Critical,
            applied_symmetry: Vec::new(),
        };
    }
    let g = Gate { scale, tol };
    let [x0, _y0, h0, _k0, l0, _mu0] = [
        params[0], params[1], params[2], params[3], params[4], params[5],
    ];

    let triple1_zero = g.zero(x0) && g.zero(h0) && g.zero(l0);
    if triple1_zero {
        // O_l: normalise (y,k,μ) ≥ 0
        for mask in [0u8, 2] {
            let [_, y, _, k, _, mu] = m2_apply(params, mask);
            if y >= -tol * scale && k >= -tol * scale && mu >= -tol * scale {
                if g.zero(k) && g.zero(mu) {
                    return unclassified(family, "(k,mu) = (0,0) is not on any O_l");
                }
                if !g.zero(y * y - k * mu) {
                    return unclassified(family, "y^2 = k*mu violated");
                }
                let n = (y * y + k * k + mu * mu).sqrt();
                return OrbitLabel {
                    family,
                    class: OrbitClass::M2Ol {
                        l: [y / n, k / n, mu / n],
                    },
                    applied_symmetry: mask_names(mask, &M2_FLIPS),
                };
            }
        }
        return unclassified(family, "O_l normalisation failed");
    }

    // O_{A,l}: all six strictly positive after normalisation
    for mask in 0u8..8 {
        let q = m2_apply(params, mask);
        if q.iter().all(|v| g.pos(*v)) {
            let [x, _, h, k, l, mu] = q;
            let sigma = h + l;
            let s = mu + k;
            let a = sigma.powi(3) / (s * s + 4.0 * sigma * sigma);
            let n = (x * x + h * h + l * l).sqrt();
            return OrbitLabel {
                family,
                class: OrbitClass::M2OAl {
                    a,
                    l: [x / n, h / n, l / n],
                },
                applied_symmetry: mask_names(mask, &M2_FLIPS),
            };
        }
    }
    unclassified(
        family,
        "parameters not in the positive region of O_{A,l} nor on O_l",
    )
}

// M3 symmetries: flip λ; flip μ.
const M3_FLIPS: [&str; 2] = ["lambda->-lambda", "mu->-mu"];

fn m3_apply(params: &[f64], mask: u8) -> [f64; 2] {
    let [mut l, mut mu] = [params[0], params[1]];
    if mask & 1 != 0 {
        l = -l;
    }
    if mask & 2 != 0 {
        mu = -mu;
    }
    [l, mu]
}

fn classify_m3(params: &[f64], tol: f64) -> OrbitLabel {
    let family = Family::M3;
    let scale = params.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return OrbitLabel {
            family,
            class: OrbitClass::Critical,
            applied_symmetry: Vec::new(),
        };
    }
    let g = Gate { scale, tol };
    let [l0, mu0] = [params[0], params[1]];
    if !g.zero(mu0) && !g.nonzero(mu0) {
        return unclassified(family, "mu inside the margin band");
    }
    if g.zero(mu0) {
        let mask = if l0 > 0.0 { 0u8 } else { 1 };
        let [l, _] = m3_apply(params, mask);
        if g.pos(l) {
            return OrbitLabel {
                family,
                class: OrbitClass::M3LambdaAxis,
                applied_symmetry: mask_names(mask, &M3_FLIPS),
            };
        }
        return unclassified(family, "lambda axis normalisation failed");
    }
    let mask_mu = if mu0 > 0.0 { 0u8 } else { 2 };
    let [l_raw, mu] = m3_apply(params, mask_mu);
    let q = l_raw * l_raw - mu * mu;
    if g.zero(q / scale) {
        // λ² = μ²: the A = 0 isoline; normalise λ > 0
        let mask = mask_mu | if l_raw > 0.0 { 0 } else { 1 };
        return OrbitLabel {
            family,
            class: OrbitClass::M3NonnegA { a: 0.0 },
            applied_symmetry: mask_names(mask, &M3_FLIPS),
        };
    }
    let a = q.powi(3) / mu.powi(4);
    if a > 0.0 {
        let mask = mask_mu | if l_raw > 0.0 { 0 } else { 1 };
        OrbitLabel {
            family,
            class: OrbitClass::M3NonnegA { a },
            applied_symmetry: mask_names(mask, &M3_FLIPS),
        }
    } else {
        OrbitLabel {
            family,
            class: OrbitClass::M3NegA { a },
            applied_symmetry: mask_names(mask_mu, &M3_FLIPS),
        }
    }
}
