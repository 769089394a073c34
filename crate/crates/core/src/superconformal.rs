//! Coordinate changes `z = f(x) + λ(x)θ`, `ζ = ψ(x) + g(x)θ` and their
//! superconformality, both in the ordinary sense and near a Ramond puncture.

use num_traits::Zero;
use rand::Rng;
use serde_json::Value;

use crate::error::{Error, Result, ResultExt};
use crate::grassmann::{int, Grassmann, Parity, Rational};
use crate::json;
use crate::random::{random_element, random_unit};
use crate::supermatrix::SuperMatrix;
use crate::superseries::{d_theta, invert_series, substitute, SuperSeries};

pub const DEFAULT_TRUNC_ORDER: i64 = 4;

/// The four θ-free series of a coordinate change, all cut to one truncation
/// order. `f` and `g` have even coefficients, `λ` and `ψ` odd ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateChange {
    f: SuperSeries,
    lambda: SuperSeries,
    psi: SuperSeries,
    g: SuperSeries,
}

impl CoordinateChange {
    pub fn new(f: SuperSeries, lambda: SuperSeries, psi: SuperSeries, g: SuperSeries) -> Result<Self> {
        let n = f.num_generators();
        let trunc = [&f, &lambda, &psi, &g].iter().map(|s| s.trunc_order()).min().unwrap_or(0);
        let named = [
            ("f", &f, Parity::Even),
            ("lambda", &lambda, Parity::Odd),
            ("psi", &psi, Parity::Odd),
            ("g", &g, Parity::Even),
        ];
        for (name, s, parity) in named {
            let check = || -> Result<()> {
                if s.num_generators() != n {
                    return Err(Error::GeneratorMismatch {
                        left: n,
                        right: s.num_generators(),
                    });
                }
                if s.pole_order() > 0 || !s.is_theta_free() || s.weight() != 0 {
                    return Err(Error::PreconditionViolated(
                        "must be a plain power series in x with weight 0".into(),
                    ));
                }
                if !s.coefficients_have_parity(parity) {
                    return Err(Error::MixedParity);
                }
                Ok(())
            };
            check().at(name)?;
        }
        if !f.a(0).is_zero() {
            return Err(Error::PreconditionViolated("f(0) must vanish".into()).at("f"));
        }
        if trunc < 1 || f.a(1).body().is_zero() {
            return Err(Error::PreconditionViolated("f'(0) must have invertible body".into()).at("f"));
        }
        Ok(CoordinateChange {
            f: f.truncate(trunc),
            lambda: lambda.truncate(trunc),
            psi: psi.truncate(trunc),
            g: g.truncate(trunc),
        })
    }

    pub fn identity(num_generators: usize, trunc: i64) -> Self {
        let n = num_generators;
        let zero = SuperSeries::from_terms(n, 0, trunc, []);
        CoordinateChange {
            f: SuperSeries::z(n, trunc),
            lambda: zero.clone(),
            psi: zero,
            g: SuperSeries::one(n, trunc),
        }
    }

    /// Reads the change off `z(x, θ)` and `ζ(x, θ)`.
    pub fn from_coordinates(z: &SuperSeries, zeta: &SuperSeries) -> Result<Self> {
        let n = z.num_generators();
        let split = |s: &SuperSeries, odd_b: bool| {
            let low = s.lowest_exponent();
            let top = s.trunc_order();
            let plain = |pick_b: bool| {
                let terms = (low..=top).map(|k| {
                    let c = if pick_b { s.b(k) } else { s.a(k) };
                    let c = if pick_b && odd_b { -c } else { c };
                    (k, c, Grassmann::zero(n))
                });
                SuperSeries::from_terms(n, 0, top, terms.collect::<Vec<_>>())
            };
            (plain(false), plain(true))
        };
        // λθ = θ(−λ) for odd λ
        let (f, lambda) = split(z, true);
        let (psi, g) = split(zeta, false);
        CoordinateChange::new(f, lambda, psi, g)
    }

    pub fn num_generators(&self) -> usize {
        self.f.num_generators()
    }
    pub fn trunc_order(&self) -> i64 {
        self.f.trunc_order()
    }
    pub fn f(&self) -> &SuperSeries {
        &self.f
    }
    pub fn lambda(&self) -> &SuperSeries {
        &self.lambda
    }
    pub fn psi(&self) -> &SuperSeries {
        &self.psi
    }
    pub fn g(&self) -> &SuperSeries {
        &self.g
    }

    /// `z = f + λθ` as a series in `x | θ`.
    pub fn z_series(&self) -> SuperSeries {
        let n = self.num_generators();
        let terms: Vec<_> = (0..=self.trunc_order())
            .map(|k| (k, self.f.a(k), -self.lambda.a(k)))
            .collect();
        SuperSeries::from_terms(n, 0, self.trunc_order(), terms)
    }

    /// `ζ = ψ + gθ` as a series in `x | θ`.
    pub fn zeta_series(&self) -> SuperSeries {
        let n = self.num_generators();
        let terms: Vec<_> = (0..=self.trunc_order())
            .map(|k| (k, self.psi.a(k), self.g.a(k)))
            .collect();
        SuperSeries::from_terms(n, 0, self.trunc_order(), terms)
    }

    /// First `self`, then `outer`: the coordinates of `outer` expressed in
    /// the source chart of `self`.
    pub fn then(&self, outer: &CoordinateChange) -> Result<CoordinateChange> {
        let z = substitute(&outer.z_series(), self)?;
        let zeta = substitute(&outer.zeta_series(), self)?;
        CoordinateChange::from_coordinates(&z, &zeta)
    }

    pub fn to_json(&self) -> Value {
        json::object(vec![
            ("num_generators", Value::from(self.num_generators() as u64)),
            ("f", self.f.to_json()),
            ("lambda", self.lambda.to_json()),
            ("psi", self.psi.to_json()),
            ("g", self.g.to_json()),
        ])
    }

    /// Parses `{"f", "lambda", "psi", "g"}`. When `g` and `λ` are absent they
    /// are solved from the Ramond equations with `g(0) = branch_sign`.
    pub fn from_json(v: &Value, num_generators: usize, branch_sign: i64) -> Result<Self> {
        let n = num_generators;
        let series = |name: &str| SuperSeries::from_json(json::field(v, name)?, n).at(name);
        let f = series("f")?;
        let psi = series("psi")?;
        match (v.get("g"), v.get("lambda")) {
            (Some(_), Some(_)) => CoordinateChange::new(f, series("lambda")?, psi, series("g")?),
            (None, None) => ramond_completion(f, psi, branch_sign),
            _ => Err(Error::Malformed("give both `g` and `lambda`, or neither".into())),
        }
    }
}

fn is_zero_to_trunc(s: &SuperSeries) -> bool {
    s.is_zero()
}

/// Vanishing of `D_θ z − ζ · D_θ ζ`.
pub fn is_superconformal(c: &CoordinateChange) -> bool {
    superconformal_defect(c).map(|d| is_zero_to_trunc(&d)).unwrap_or(false)
}

pub fn superconformal_defect(c: &CoordinateChange) -> Result<SuperSeries> {
    let zeta = c.zeta_series();
    d_theta(&c.z_series()).sub(&zeta.mul(&d_theta(&zeta))?)
}

/// The two identities characterizing a change near a Ramond puncture:
/// `λ − fgψ` and `fg² + λψg − (x f′ − x f ψ ψ′)`.
pub fn ramond_defects(c: &CoordinateChange) -> Result<(SuperSeries, SuperSeries)> {
    ramond_defects_of(&c.f, &c.lambda, &c.psi, &c.g)
}

/// Same as [`ramond_defects`] on raw series, without the chart-change checks.
pub fn ramond_defects_of(
    f: &SuperSeries,
    lambda: &SuperSeries,
    psi: &SuperSeries,
    g: &SuperSeries,
) -> Result<(SuperSeries, SuperSeries)> {
    let x = SuperSeries::z(f.num_generators(), f.trunc_order());
    let first = lambda.sub(&f.mul(g)?.mul(psi)?)?;
    let lhs = f.mul(g)?.mul(g)?.add(&lambda.mul(psi)?.mul(g)?)?;
    let rhs = x
        .mul(&f.derivative())?
        .sub(&x.mul(f)?.mul(psi)?.mul(&psi.derivative())?)?;
    Ok((first, lhs.sub(&rhs)?))
}

pub fn is_ramond_superconformal(c: &CoordinateChange) -> bool {
    ramond_defects(c)
        .map(|(a, b)| is_zero_to_trunc(&a) && is_zero_to_trunc(&b))
        .unwrap_or(false)
}

/// `(g(0)², λ′(0)ψ(0))`, which the Ramond lemma pins to `(1, 0)`.
pub fn ramond_boundary_constraints(c: &CoordinateChange) -> Result<(Grassmann, Grassmann)> {
    if !is_ramond_superconformal(c) {
        return Err(Error::NotRamondSuperconformal);
    }
    let g0 = c.g.a(0);
    Ok((&g0 * &g0, &c.lambda.a(1) * &c.psi.a(0)))
}

/// Change of basis from `{1, x | θ, xθ}` to `{1, z | ζ, zζ}` in `O/O(−2F)`.
pub fn quotient_change_matrix(c: &CoordinateChange) -> Result<SuperMatrix> {
    if !is_ramond_superconformal(c) {
        return Err(Error::NotRamondSuperconformal);
    }
    let n = c.num_generators();
    let zero = Grassmann::zero(n);
    let f1 = c.f.a(1);
    let (psi0, psi1) = (c.psi.a(0), c.psi.a(1));
    let (g0, g1) = (c.g.a(0), c.g.a(1));
    let l1 = c.lambda.a(1);
    let entries = vec![
        vec![Grassmann::one(n), zero.clone(), psi0.clone(), zero.clone()],
        vec![zero.clone(), f1.clone(), psi1, &f1 * &psi0],
        vec![zero.clone(), zero.clone(), g0.clone(), zero.clone()],
        vec![zero, l1, g1, &f1 * &g0],
    ];
    SuperMatrix::new(n, (2, 2), (2, 2), entries)
}

/// Rewrites a change-of-basis matrix whose entries are left coefficients
/// (`new = Σ c · old`) into the right-coefficient form (`new = Σ old · c`)
/// under which composition is matrix multiplication: odd entries in odd
/// rows change sign.
pub fn left_to_right_coefficients(m: &SuperMatrix) -> SuperMatrix {
    let mut out = m.clone();
    for i in m.row_layout().0..m.rows() {
        for j in 0..m.cols() {
            let x = m.get(i, j);
            let flipped = &x.involution() - x;
            // involution(x) − x = −2·(odd part)
            out.set(i, j, x + &flipped);
        }
    }
    out
}

/// `D*_θ = ∂_θ + xθ ∂_x`: `(a_k + θ b_k) x^k ↦ b_k x^k + θ k a_k x^k`.
pub fn d_star_theta(f: &SuperSeries) -> SuperSeries {
    let n = f.num_generators();
    let terms: Vec<_> = f
        .terms()
        .flat_map(|(k, a, b)| [(k, b.clone(), Grassmann::zero(n)), (k, Grassmann::zero(n), a.scale(&int(k)))])
        .collect();
    SuperSeries::from_terms(n, f.weight(), f.trunc_order(), terms)
}

/// Square root of a θ-free series with constant term 1, with `g(0) = sign`.
fn sqrt_unit_series(u: &SuperSeries, sign: i64) -> Result<SuperSeries> {
    let n = u.num_generators();
    if !u.a(0).is_one() {
        return Err(Error::PreconditionViolated("square root needs constant term 1".into()));
    }
    let g0 = Grassmann::from_int(n, sign);
    let half_inv = Rational::new(sign.into(), 2.into());
    let mut g = vec![g0];
    for k in 1..=u.trunc_order() {
        let mut acc = u.a(k);
        for i in 1..k {
            acc = &acc - &(&g[i as usize] * &g[(k - i) as usize]);
        }
        g.push(acc.scale(&half_inv));
    }
    Ok(SuperSeries::from_plain(g, n, u.trunc_order()))
}

/// Completes `f` and `ψ` to a Ramond change: `g² = (x/f) f′ − xψψ′`,
/// `λ = fgψ`.
pub fn ramond_completion(f: SuperSeries, psi: SuperSeries, branch_sign: i64) -> Result<CoordinateChange> {
    if branch_sign != 1 && branch_sign != -1 {
        return Err(Error::PreconditionViolated("branch sign must be 1 or -1".into()));
    }
    let n = f.num_generators();
    let trunc = f.trunc_order().min(psi.trunc_order());
    if !f.a(0).is_zero() || f.a(1).body().is_zero() {
        return Err(Error::PreconditionViolated("f(0) = 0 and f'(0) invertible are required".into()).at("f"));
    }
    let x = SuperSeries::z(n, trunc + 1);
    let f_over_x = SuperSeries::from_plain((1..=trunc).map(|k| f.a(k)).collect(), n, trunc - 1);
    let x_over_f = invert_series(&f_over_x)?;
    let rhs = x_over_f
        .mul(&f.derivative())?
        .sub(&x.mul(&psi)?.mul(&psi.derivative())?)?;
    let g = sqrt_unit_series(&rhs, branch_sign)?;
    let lambda = f.mul(&g)?.mul(&psi)?;
    CoordinateChange::new(f, lambda, psi, g)
}

/// Random change satisfying `D_θ z = ζ D_θ ζ` and fixing the origin, so
/// `ψ(0) = λ(0) = 0` as well as `f(0) = 0`.
///
/// In θ-left form `z = A + θB`, `ζ = C + θE`, the condition reads
/// `B = CE` and `A′ = E² − CC′`; `C` and `E` are drawn freely.
pub fn random_superconformal<R: Rng>(rng: &mut R, num_generators: usize, trunc: i64) -> CoordinateChange {
    let n = num_generators;
    let plain = |rng: &mut R, parity: Parity, len: i64| {
        let cs: Vec<_> = (0..=len).map(|_| random_element(rng, n, parity, 2)).collect();
        SuperSeries::from_plain(cs, n, len)
    };
    let c = plain(rng, Parity::Odd, trunc);
    let c = c.sub(&SuperSeries::constant(c.a(0), trunc)).expect("same weight");
    let mut e = plain(rng, Parity::Even, trunc);
    let e0 = random_unit(rng, n, 2);
    e = e.add(&SuperSeries::constant(&e0 - &e.a(0), trunc)).expect("same weight");
    let b = c.mul(&e).expect("same generators");
    let a_prime = e.mul(&e).unwrap().sub(&c.mul(&c.derivative()).unwrap()).unwrap();
    let a_terms: Vec<_> = (0..trunc)
        .map(|k| a_prime.a(k).scale(&Rational::new(1.into(), (k + 1).into())))
        .collect();
    let a = SuperSeries::from_plain(
        std::iter::once(Grassmann::zero(n)).chain(a_terms).collect(),
        n,
        trunc,
    );
    let lambda_terms: Vec<_> = (0..=trunc).map(|k| -b.a(k)).collect();
    let lambda = SuperSeries::from_plain(lambda_terms, n, trunc);
    CoordinateChange::new(a, lambda, c, e).expect("valid by construction")
}

/// Random change near a Ramond puncture, built from random `f` and `ψ`.
pub fn random_ramond<R: Rng>(rng: &mut R, num_generators: usize, trunc: i64, branch_sign: i64) -> CoordinateChange {
    let n = num_generators;
    // x/f loses one order, so f and ψ are drawn one order further
    let mut fs = vec![Grassmann::zero(n), random_unit(rng, n, 2)];
    fs.extend((2..=trunc + 1).map(|_| random_element(rng, n, Parity::Even, 2)));
    let f = SuperSeries::from_plain(fs, n, trunc + 1);
    let psis: Vec<_> = (0..=trunc + 1).map(|_| random_element(rng, n, Parity::Odd, 2)).collect();
    let psi = SuperSeries::from_plain(psis, n, trunc + 1);
    ramond_completion(f, psi, branch_sign).expect("valid by construction")
}
