//! Truncated super Laurent series in one chart `z | θ`.
//!
//! A series is `Σ_k (a_k + θ b_k) z^k · [dz|dθ]^j` for `k` from `−N` to the
//! truncation order `M`; coefficients beyond `M` are unknown. The odd
//! coordinate sits to the left of `b_k`, so `res σ = b_{−1}` and
//! `D_θ (a + θ b) = b + θ ∂_z a`.

use num_traits::Zero;
use serde_json::Value;

use crate::error::{Error, Result, ResultExt};
use crate::grassmann::{int, Grassmann, Parity};
use crate::json;
use crate::superconformal::{is_superconformal, CoordinateChange};

/// Coefficient pair `(a, b)` standing for `a + θ b`.
pub type Pair = (Grassmann, Grassmann);

fn pair_zero(n: usize) -> Pair {
    (Grassmann::zero(n), Grassmann::zero(n))
}

fn pair_is_zero(p: &Pair) -> bool {
    p.0.is_zero() && p.1.is_zero()
}

/// `(a₁ + θb₁)(a₂ + θb₂) = a₁a₂ + θ(â₁b₂ + b₁a₂)`.
fn pair_mul(x: &Pair, y: &Pair) -> Pair {
    (&x.0 * &y.0, &(&x.0.involution() * &y.1) + &(&x.1 * &y.0))
}

fn pair_add(x: &Pair, y: &Pair) -> Pair {
    (&x.0 + &y.0, &x.1 + &y.1)
}

fn pair_sub(x: &Pair, y: &Pair) -> Pair {
    (&x.0 - &y.0, &x.1 - &y.1)
}

fn pair_invert(x: &Pair) -> Result<Pair> {
    let c = x.0.invert().map_err(|_| Error::NonInvertibleLeading)?;
    let d = -(&(&x.0.involution().invert()? * &x.1) * &c);
    Ok((c, d))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperSeries {
    num_generators: usize,
    weight: i64,
    low: i64,
    trunc: i64,
    coeffs: Vec<Pair>,
}

/// `α(σ) = dθ · f + ϖ · D_θ f` with `ϖ = dz − θ dθ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneFormLocal {
    pub dtheta_part: SuperSeries,
    pub varpi_part: SuperSeries,
}

impl SuperSeries {
    /// Builds `Σ_{k=−N}^{M} (a_k + θ b_k) z^k`; `coeffs[i]` holds exponent `i − N`.
    pub fn new(
        num_generators: usize,
        weight: i64,
        pole_order: usize,
        trunc_order: usize,
        coeffs: Vec<Pair>,
    ) -> Result<Self> {
        if coeffs.len() != pole_order + trunc_order + 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficient pairs, got {}",
                pole_order + trunc_order + 1,
                coeffs.len()
            )));
        }
        for (a, b) in &coeffs {
            for x in [a, b] {
                if x.num_generators() != num_generators {
                    return Err(Error::GeneratorMismatch {
                        left: num_generators,
                        right: x.num_generators(),
                    });
                }
            }
        }
        Ok(Self::raw(num_generators, weight, -(pole_order as i64), trunc_order as i64, coeffs))
    }

    /// Sparse constructor: unspecified exponents in `[low, trunc]` are zero.
    pub fn from_terms<I>(num_generators: usize, weight: i64, trunc: i64, terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, Grassmann, Grassmann)>,
    {
        let terms: Vec<_> = terms.into_iter().collect();
        let low = terms.iter().map(|t| t.0).min().unwrap_or(0).min(0);
        let mut coeffs = vec![pair_zero(num_generators); (trunc - low + 1).max(0) as usize];
        for (k, a, b) in terms {
            if k <= trunc {
                let slot = &mut coeffs[(k - low) as usize];
                *slot = pair_add(slot, &(a, b));
            }
        }
        Self::raw(num_generators, weight, low, trunc, coeffs)
    }

    fn raw(num_generators: usize, weight: i64, low: i64, trunc: i64, coeffs: Vec<Pair>) -> Self {
        let mut s = SuperSeries {
            num_generators,
            weight,
            low,
            trunc,
            coeffs,
        };
        s.canonicalize();
        s
    }

    fn canonicalize(&mut self) {
        let n = self.num_generators;
        self.coeffs.truncate((self.trunc - self.low + 1).max(0) as usize);
        while self.low > 0 {
            self.low -= 1;
            if self.low <= self.trunc {
                self.coeffs.insert(0, pair_zero(n));
            }
        }
        let strip = self
            .coeffs
            .iter()
            .take_while(|p| pair_is_zero(p))
            .count()
            .min((-self.low) as usize);
        self.coeffs.drain(..strip);
        self.low += strip as i64;
    }

    /// The constant `c` known to order `trunc`.
    pub fn constant(c: Grassmann, trunc: i64) -> Self {
        let n = c.num_generators();
        Self::from_terms(n, 0, trunc, [(0, c, Grassmann::zero(n))])
    }

    pub fn one(num_generators: usize, trunc: i64) -> Self {
        Self::constant(Grassmann::one(num_generators), trunc)
    }

    /// The odd coordinate `θ`.
    pub fn theta(num_generators: usize, trunc: i64) -> Self {
        let n = num_generators;
        Self::from_terms(n, 0, trunc, [(0, Grassmann::zero(n), Grassmann::one(n))])
    }

    /// The even coordinate `z`.
    pub fn z(num_generators: usize, trunc: i64) -> Self {
        let n = num_generators;
        Self::from_terms(n, 0, trunc, [(1, Grassmann::one(n), Grassmann::zero(n))])
    }

    /// A θ-free series `Σ c_k z^k` with `cs[i]` at exponent `i`.
    pub fn from_plain(cs: Vec<Grassmann>, num_generators: usize, trunc: i64) -> Self {
        let n = num_generators;
        Self::from_terms(
            n,
            0,
            trunc,
            cs.into_iter()
                .enumerate()
                .map(|(k, c)| (k as i64, c, Grassmann::zero(n))),
        )
    }

    pub fn num_generators(&self) -> usize {
        self.num_generators
    }
    pub fn weight(&self) -> i64 {
        self.weight
    }
    pub fn pole_order(&self) -> usize {
        (-self.low).max(0) as usize
    }
    pub fn trunc_order(&self) -> i64 {
        self.trunc
    }
    pub fn lowest_exponent(&self) -> i64 {
        self.low
    }

    pub fn with_weight(mut self, weight: i64) -> Self {
        self.weight = weight;
        self
    }

    /// Coefficient pair at exponent `k`, or `None` beyond the truncation order.
    pub fn coeff(&self, k: i64) -> Option<Pair> {
        if k > self.trunc {
            return None;
        }
        if k < self.low {
            return Some(pair_zero(self.num_generators));
        }
        Some(self.coeffs[(k - self.low) as usize].clone())
    }

    /// `a_k`, zero outside the stored range.
    pub fn a(&self, k: i64) -> Grassmann {
        self.get(k).map_or_else(|| Grassmann::zero(self.num_generators), |p| p.0.clone())
    }

    /// `b_k`, zero outside the stored range.
    pub fn b(&self, k: i64) -> Grassmann {
        self.get(k).map_or_else(|| Grassmann::zero(self.num_generators), |p| p.1.clone())
    }

    fn get(&self, k: i64) -> Option<&Pair> {
        if k < self.low || k > self.trunc {
            None
        } else {
            self.coeffs.get((k - self.low) as usize)
        }
    }

    /// Known terms as `(k, a_k, b_k)`, skipping zero pairs.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &Grassmann, &Grassmann)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, p)| !pair_is_zero(p))
            .map(move |(i, (a, b))| (self.low + i as i64, a, b))
    }

    /// First exponent with a nonzero pair, or `trunc + 1` if all known terms vanish.
    pub fn valuation(&self) -> i64 {
        self.coeffs
            .iter()
            .position(|p| !pair_is_zero(p))
            .map_or(self.trunc + 1, |i| self.low + i as i64)
    }

    /// True when every known coefficient is zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(pair_is_zero)
    }

    /// True when every coefficient (`a_k` and `b_k`) has parity `p`.
    pub fn coefficients_have_parity(&self, p: Parity) -> bool {
        self.coeffs.iter().all(|(a, b)| a.has_parity(p) && b.has_parity(p))
    }

    pub fn is_theta_free(&self) -> bool {
        self.coeffs.iter().all(|p| p.1.is_zero())
    }

    /// Drops everything above exponent `m`.
    pub fn truncate(&self, m: i64) -> Self {
        if m >= self.trunc {
            return self.clone();
        }
        Self::raw(self.num_generators, self.weight, self.low, m, self.coeffs.clone())
    }

    /// Equality of weights and of every coefficient both series know.
    pub fn agrees_with(&self, other: &SuperSeries) -> bool {
        if self.weight != other.weight || self.num_generators != other.num_generators {
            return false;
        }
        let top = self.trunc.min(other.trunc);
        let bottom = self.low.min(other.low);
        (bottom..=top).all(|k| self.coeff(k) == other.coeff(k))
    }

    fn check_generators(&self, other: &SuperSeries) -> Result<()> {
        if self.num_generators != other.num_generators {
            return Err(Error::GeneratorMismatch {
                left: self.num_generators,
                right: other.num_generators,
            });
        }
        Ok(())
    }

    fn combine(&self, other: &SuperSeries, op: fn(&Pair, &Pair) -> Pair) -> Result<SuperSeries> {
        self.check_generators(other)?;
        if self.weight != other.weight {
            return Err(Error::WeightMismatch(self.weight, other.weight));
        }
        let n = self.num_generators;
        let low = self.low.min(other.low);
        let trunc = self.trunc.min(other.trunc);
        let zero = pair_zero(n);
        let coeffs = (low..=trunc)
            .map(|k| {
                op(
                    self.get(k).unwrap_or(&zero),
                    other.get(k).unwrap_or(&zero),
                )
            })
            .collect();
        Ok(Self::raw(n, self.weight, low, trunc, coeffs))
    }

    pub fn add(&self, other: &SuperSeries) -> Result<SuperSeries> {
        self.combine(other, pair_add)
    }

    pub fn sub(&self, other: &SuperSeries) -> Result<SuperSeries> {
        self.combine(other, pair_sub)
    }

    pub fn neg(&self) -> SuperSeries {
        let coeffs = self.coeffs.iter().map(|(a, b)| (-a, -b)).collect();
        Self::raw(self.num_generators, self.weight, self.low, self.trunc, coeffs)
    }

    /// Cauchy product. The result is known up to
    /// `min(M₁ + v₂, M₂ + v₁)` where `v` is the valuation.
    pub fn mul(&self, other: &SuperSeries) -> Result<SuperSeries> {
        self.check_generators(other)?;
        let n = self.num_generators;
        let trunc = (self.trunc + other.valuation()).min(other.trunc + self.valuation());
        let low = self.low + other.low;
        let mut coeffs = vec![pair_zero(n); (trunc - low + 1).max(0) as usize];
        for (i, x) in self.coeffs.iter().enumerate() {
            if pair_is_zero(x) {
                continue;
            }
            for (j, y) in other.coeffs.iter().enumerate() {
                let k = self.low + i as i64 + other.low + j as i64;
                if k > trunc {
                    break;
                }
                if pair_is_zero(y) {
                    continue;
                }
                let slot = &mut coeffs[(k - low) as usize];
                *slot = pair_add(slot, &pair_mul(x, y));
            }
        }
        Ok(Self::raw(n, self.weight + other.weight, low, trunc, coeffs))
    }

    /// Left multiplication by a constant.
    pub fn scale(&self, c: &Grassmann) -> SuperSeries {
        let cp = (c.clone(), Grassmann::zero(self.num_generators));
        let coeffs = self.coeffs.iter().map(|p| pair_mul(&cp, p)).collect();
        Self::raw(self.num_generators, self.weight, self.low, self.trunc, coeffs)
    }

    pub fn pow(&self, exp: i64) -> Result<SuperSeries> {
        let base = if exp < 0 { invert_series(self)? } else { self.clone() };
        let mut out = SuperSeries::one(self.num_generators, self.trunc.max(0).max(base.trunc))
            .with_weight(0);
        for _ in 0..exp.unsigned_abs() {
            out = out.mul(&base)?;
        }
        Ok(out)
    }

    /// `∂_z`, coefficientwise on `a` and `b`.
    pub fn derivative(&self) -> SuperSeries {
        let n = self.num_generators;
        let terms = self
            .terms()
            .filter(|(k, _, _)| *k != 0)
            .map(|(k, a, b)| (k - 1, a.scale(&int(k)), b.scale(&int(k))))
            .collect::<Vec<_>>();
        Self::from_terms(n, self.weight, self.trunc - 1, terms)
    }

    pub fn to_json(&self) -> Value {
        json::object(vec![
            ("weight", Value::from(self.weight)),
            ("pole_order", Value::from(self.pole_order() as u64)),
            ("trunc_order", Value::from(self.trunc)),
            (
                "terms",
                Value::Array(
                    self.terms()
                        .map(|(k, a, b)| {
                            json::object(vec![
                                ("k", Value::from(k)),
                                ("a", json::element_to_json(a)),
                                ("b", json::element_to_json(b)),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }

    pub fn from_json(v: &Value, num_generators: usize) -> Result<SuperSeries> {
        let n = num_generators;
        let weight = match v.get("weight") {
            None => 0,
            Some(_) => json::int_field(v, "weight")?,
        };
        let pole_order = match v.get("pole_order") {
            None => 0,
            Some(_) => json::int_field(v, "pole_order")?,
        };
        let trunc = json::int_field(v, "trunc_order")?;
        if pole_order < 0 || trunc < 0 {
            return Err(Error::Malformed("pole and truncation orders must be nonnegative".into()));
        }
        let mut terms = Vec::new();
        for (i, t) in json::array_field(v, "terms")?.iter().enumerate() {
            let parse = || -> Result<(i64, Grassmann, Grassmann)> {
                let k = json::int_field(t, "k")?;
                if k < -pole_order || k > trunc {
                    return Err(Error::Malformed(format!(
                        "exponent {k} lies outside [-{pole_order}, {trunc}]"
                    )));
                }
                let elem = |name: &str| match t.get(name) {
                    None => Ok(Grassmann::zero(n)),
                    Some(x) => json::element_from_json(x, n).at(name),
                };
                Ok((k, elem("a")?, elem("b")?))
            };
            terms.push(parse().at(format!("terms[{i}]"))?);
        }
        let mut s = Self::from_terms(n, weight, trunc, terms);
        if s.pole_order() > pole_order as usize {
            return Err(Error::Malformed("terms below the declared pole order".into()));
        }
        s.canonicalize();
        Ok(s)
    }
}

/// Multiplicative inverse `z^{−v} (u₀ + u₁z + …)⁻¹` of `z^v (u₀ + u₁z + …)`.
///
/// The leading pair `u₀ = a_v + θ b_v` must have `a_v` with invertible body.
/// The weight is negated and the result is known to order `M − 2v`.
pub fn invert_series(f: &SuperSeries) -> Result<SuperSeries> {
    let n = f.num_generators;
    let v = f.valuation();
    if v > f.trunc {
        return Err(Error::NonInvertibleLeading);
    }
    let unit: Vec<&Pair> = (v..=f.trunc).map(|k| f.get(k).expect("in range")).collect();
    if unit[0].0.body().is_zero() {
        return Err(Error::NonInvertibleLeading);
    }
    let lead_inv = pair_invert(unit[0])?;
    let mut h: Vec<Pair> = vec![lead_inv.clone()];
    for k in 1..unit.len() {
        let mut acc = pair_zero(n);
        for i in 1..=k {
            acc = pair_add(&acc, &pair_mul(unit[i], &h[k - i]));
        }
        let hk = pair_mul(&lead_inv, &acc);
        h.push((-&hk.0, -&hk.1));
    }
    let trunc = f.trunc - 2 * v;
    Ok(SuperSeries::raw(n, -f.weight, -v, trunc, h))
}

/// `D_θ = ∂_θ + θ ∂_z`: `(a_k + θ b_k) z^k ↦ b_k z^k + θ k a_k z^{k−1}`.
///
/// The weight is left unchanged.
pub fn d_theta(f: &SuperSeries) -> SuperSeries {
    let n = f.num_generators;
    let mut terms = Vec::new();
    for (k, a, b) in f.terms() {
        terms.push((k, b.clone(), Grassmann::zero(n)));
        if k != 0 {
            terms.push((k - 1, Grassmann::zero(n), a.scale(&int(k))));
        }
    }
    SuperSeries::from_terms(n, f.weight, f.trunc - 1, terms)
}

fn expect_weight(f: &SuperSeries, expected: i64) -> Result<()> {
    if f.weight == expected {
        Ok(())
    } else {
        Err(Error::WrongWeight {
            expected,
            found: f.weight,
        })
    }
}

/// `res σ = b_{−1}` for a section of `ω`.
pub fn residue(sigma: &SuperSeries) -> Result<Grassmann> {
    expect_weight(sigma, 1)?;
    Ok(sigma.b(-1))
}

/// Residue of `(z − z₀ − θθ₀)⁻¹ f [dz|dθ]`, namely `(D_θ f)(z₀ | θ₀)`.
///
/// `f` must be regular and `z₀` nilpotent (or zero); the evaluation then
/// terminates and needs `D_θ f` only up to the nilpotency index of `z₀`.
pub fn residue_simple_pole(f: &SuperSeries, z0: &Grassmann, theta0: &Grassmann) -> Result<Grassmann> {
    expect_weight(f, 0)?;
    let n = f.num_generators;
    if z0.num_generators() != n || theta0.num_generators() != n {
        return Err(Error::GeneratorMismatch {
            left: n,
            right: if z0.num_generators() != n {
                z0.num_generators()
            } else {
                theta0.num_generators()
            },
        });
    }
    if !z0.has_parity(Parity::Even) {
        return Err(Error::PreconditionViolated("z0 must be even".into()));
    }
    if !theta0.has_parity(Parity::Odd) {
        return Err(Error::PreconditionViolated("theta0 must be odd".into()));
    }
    if !z0.body().is_zero() {
        return Err(Error::PreconditionViolated(
            "z0 must be nilpotent; only shifts inside the nilpotent directions are supported".into(),
        ));
    }
    if f.pole_order() > 0 {
        return Err(Error::PreconditionViolated("f must be regular at the puncture".into()));
    }
    // D_θ f = Σ (b_k + θ (k+1) a_{k+1}) z^k
    let mut power = Grassmann::one(n);
    let mut k = 0;
    let mut total = Grassmann::zero(n);
    while !power.is_zero() {
        let b = f.coeff(k).ok_or(Error::EvaluationOutsideTruncation)?.1;
        let mut value = b;
        if !theta0.is_zero() {
            let a_next = f.coeff(k + 1).ok_or(Error::EvaluationOutsideTruncation)?.0;
            value = &value + &(theta0 * &a_next.scale(&int(k + 1)));
        }
        total = &total + &(&value * &power);
        power = &power * z0;
        k += 1;
    }
    Ok(total)
}

/// Splits a section of `ω` as `dθ f + ϖ D_θ f`. Both parts are cut to the
/// common truncation order and carry weight 0.
pub fn alpha(sigma: &SuperSeries) -> Result<OneFormLocal> {
    expect_weight(sigma, 1)?;
    let f = sigma.clone().with_weight(0);
    let df = d_theta(&f);
    Ok(OneFormLocal {
        dtheta_part: f.truncate(df.trunc),
        varpi_part: df,
    })
}

/// `f(z(x, θ), ζ(x, θ))` re-expanded in the chart `x | θ`. The weight is kept.
pub fn substitute(f: &SuperSeries, c: &CoordinateChange) -> Result<SuperSeries> {
    let n = f.num_generators;
    if c.num_generators() != n {
        return Err(Error::GeneratorMismatch {
            left: n,
            right: c.num_generators(),
        });
    }
    let cap = f.trunc.max(0);
    let z = c.z_series();
    let zeta = c.zeta_series();
    let one = SuperSeries::one(n, cap);
    let mut result = SuperSeries::from_terms(n, 0, cap, []);

    let mut add_term = |k: i64, power: &SuperSeries| -> Result<()> {
        let (a, b) = f.coeff(k).expect("exponent within range");
        if a.is_zero() && b.is_zero() {
            return Ok(());
        }
        // (a_k + ζ b_k) · Z^k; ζ·b_k is a right scalar multiple.
        let zeta_b = zeta.mul(&SuperSeries::constant(b, cap))?;
        let coeff = SuperSeries::constant(a, cap).add(&zeta_b)?;
        result = result.add(&coeff.mul(power)?)?;
        Ok(())
    };

    let mut power = one.clone();
    for k in 0..=f.trunc {
        add_term(k, &power)?;
        power = power.mul(&z)?;
    }
    if f.low < 0 {
        let z_inv = invert_series(&z)?;
        let mut power = z_inv.clone();
        for k in 1..=(-f.low) {
            add_term(-k, &power)?;
            power = power.mul(&z_inv)?;
        }
    }
    Ok(result.truncate(f.trunc).with_weight(f.weight))
}

/// Pull-back of a section of `ω^j`: `substitute(f, c) · (D_θ ζ)^j`.
pub fn transform_section(f: &SuperSeries, c: &CoordinateChange) -> Result<SuperSeries> {
    if !is_superconformal(c) {
        return Err(Error::NotSuperconformal);
    }
    let pulled = substitute(f, c)?;
    let factor = d_theta(&c.zeta_series()).pow(f.weight)?;
    Ok(pulled.with_weight(0).mul(&factor)?.with_weight(f.weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::rat;
    use crate::random::random_element;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const N: usize = 4;

    fn g(v: i64) -> Grassmann {
        Grassmann::from_int(N, v)
    }
    fn e(i: usize) -> Grassmann {
        Grassmann::generator(N, i).unwrap()
    }
    fn zero() -> Grassmann {
        Grassmann::zero(N)
    }

    fn random_series(seed: u64, weight: i64, pole: i64, trunc: i64, parity: Parity) -> SuperSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<_> = (-pole..=trunc)
            .map(|k| {
                (
                    k,
                    random_element(&mut rng, N, parity, 3),
                    random_element(&mut rng, N, parity.flip(), 3),
                )
            })
            .collect();
        SuperSeries::from_terms(N, weight, trunc, terms)
    }

    /// Independent `∂_z`: shift indices by hand.
    fn shifted_derivative(f: &SuperSeries) -> Vec<(i64, Grassmann, Grassmann)> {
        (f.lowest_exponent() - 1..f.trunc_order())
            .map(|k| {
                let next = k + 1;
                let factor = rat(next, 1);
                (k, f.a(next).scale(&factor), f.b(next).scale(&factor))
            })
            .collect()
    }

    #[test]
    fn theta_products() {
        let t = SuperSeries::theta(N, 3);
        let one = SuperSeries::one(N, 3);
        let p = one.add(&t).unwrap().mul(&one.sub(&t).unwrap()).unwrap();
        assert!(p.agrees_with(&one));
        assert!(t.mul(&t).unwrap().is_zero());
    }

    #[test]
    fn geometric_series() {
        let f = SuperSeries::from_terms(N, 0, 5, [(0, g(1), zero()), (1, g(-1), zero())]);
        let inv = invert_series(&f).unwrap();
        assert_eq!(inv.trunc_order(), 5);
        for k in 0..=5 {
            assert_eq!(inv.a(k), g(1));
        }
    }

    #[test]
    fn pole_times_z() {
        let f = SuperSeries::from_terms(N, 0, 2, [(-1, zero(), g(1))]);
        let p = f.mul(&SuperSeries::z(N, 2)).unwrap();
        assert!(p.agrees_with(&SuperSeries::theta(N, 2)));
        assert_eq!(p.pole_order(), 0);
    }

    #[test]
    fn truncation_min_rule() {
        let f = SuperSeries::from_terms(N, 0, 0, [(-1, g(1), zero())]);
        let p = f.mul(&f).unwrap();
        assert_eq!(p.trunc_order(), -1);
        assert_eq!(p.pole_order(), 2);
        let bad = SuperSeries::from_terms(N, 1, 0, [(0, g(1), zero())]);
        assert_eq!(f.add(&bad), Err(Error::WeightMismatch(0, 1)));
    }

    #[test]
    fn invert_rejects_nilpotent_lead() {
        let f = SuperSeries::from_terms(N, 0, 3, [(0, &e(0) * &e(1), zero())]);
        assert_eq!(invert_series(&f), Err(Error::NonInvertibleLeading));
        let theta = SuperSeries::theta(N, 3);
        assert_eq!(invert_series(&theta), Err(Error::NonInvertibleLeading));
    }

    #[test]
    fn invert_with_odd_part() {
        let f = SuperSeries::from_terms(N, 0, 4, [(0, g(2), e(0)), (1, e(1) * e(2), g(3))]);
        let p = f.mul(&invert_series(&f).unwrap()).unwrap();
        assert!(p.agrees_with(&SuperSeries::one(N, 4)));
        let q = invert_series(&f).unwrap().mul(&f).unwrap();
        assert!(q.agrees_with(&SuperSeries::one(N, 4)));
    }

    #[test]
    fn d_theta_basics() {
        let one = SuperSeries::one(N, 3);
        assert!(d_theta(&SuperSeries::theta(N, 3)).agrees_with(&one));
        assert!(d_theta(&SuperSeries::z(N, 3)).agrees_with(&SuperSeries::theta(N, 3)));
    }

    #[test]
    fn residues() {
        let s = SuperSeries::from_terms(N, 1, 2, [(-1, zero(), g(1))]);
        assert_eq!(residue(&s).unwrap(), g(1));
        let hol = SuperSeries::from_terms(N, 1, 2, [(0, g(1), g(5))]);
        assert!(residue(&hol).unwrap().is_zero());
        let c1 = &e(0) * &e(1);
        let s = SuperSeries::from_terms(N, 1, 2, [(-1, g(1), c1.clone())]);
        assert_eq!(residue(&s).unwrap(), c1);
        let w0 = s.clone().with_weight(0);
        assert_eq!(residue(&w0), Err(Error::WrongWeight { expected: 1, found: 0 }));
    }

    #[test]
    fn simple_pole_residues() {
        let c0 = &g(3) + &(&e(0) * &e(1));
        let c1 = &g(2) + &(&e(2) * &e(3));
        let f = SuperSeries::from_terms(N, 0, 0, [(0, c0, c1.clone())]);
        let z0 = &e(0) * &e(2);
        assert_eq!(residue_simple_pole(&f, &zero(), &zero()).unwrap(), c1);
        assert_eq!(
            residue_simple_pole(&f, &zero(), &e(1)),
            Err(Error::EvaluationOutsideTruncation)
        );
        let f1 = SuperSeries::from_terms(N, 0, 1, [(0, g(3), c1.clone())]);
        assert_eq!(residue_simple_pole(&f1, &zero(), &e(1)).unwrap(), c1);
        let f2 = SuperSeries::from_terms(N, 0, 2, [(0, g(3), c1.clone())]);
        assert_eq!(residue_simple_pole(&f2, &z0, &e(1)).unwrap(), c1);
        let fz = SuperSeries::z(N, 2);
        assert!(residue_simple_pole(&fz, &zero(), &zero()).unwrap().is_zero());
        // D_θ(θ z) = z, so the value at z₀ is z₀ itself
        let theta_z = SuperSeries::from_terms(N, 0, 2, [(1, zero(), g(1))]);
        assert_eq!(residue_simple_pole(&theta_z, &z0, &e(3)).unwrap(), z0);
        let short = theta_z.truncate(1);
        assert_eq!(
            residue_simple_pole(&short, &z0, &e(3)),
            Err(Error::EvaluationOutsideTruncation)
        );
        assert!(residue_simple_pole(&theta_z, &g(1), &e(3)).is_err());
    }

    #[test]
    fn alpha_examples() {
        let t = SuperSeries::theta(N, 3).with_weight(1);
        let al = alpha(&t).unwrap();
        assert!(al.dtheta_part.agrees_with(&SuperSeries::theta(N, 3)));
        assert!(al.varpi_part.agrees_with(&SuperSeries::one(N, 3)));
        let one = SuperSeries::one(N, 3).with_weight(1);
        let al = alpha(&one).unwrap();
        assert!(al.varpi_part.is_zero());
        let z = SuperSeries::z(N, 3).with_weight(1);
        let al = alpha(&z).unwrap();
        assert!(al.dtheta_part.agrees_with(&SuperSeries::z(N, 3)));
        assert!(al.varpi_part.agrees_with(&SuperSeries::theta(N, 3)));
        assert_eq!(al.dtheta_part.trunc_order(), al.varpi_part.trunc_order());
    }

    #[test]
    fn json_roundtrip() {
        let s = random_series(5, 2, 2, 3, Parity::Even);
        let back = SuperSeries::from_json(&s.to_json(), N).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #[test]
        fn d_theta_squared_is_d_z(seed in any::<u64>(), pole in 0i64..3) {
            let f = random_series(seed, 0, pole, 4, Parity::Even);
            let dd = d_theta(&d_theta(&f));
            let oracle = SuperSeries::from_terms(N, 0, f.trunc_order() - 1, shifted_derivative(&f));
            prop_assert!(dd.agrees_with(&oracle));
            prop_assert_eq!(dd.trunc_order(), 2);
        }

        #[test]
        fn d_theta_is_odd_derivation(seed in any::<u64>(), odd_f in any::<bool>()) {
            let pf = if odd_f { Parity::Odd } else { Parity::Even };
            let f = random_series(seed, 0, 1, 4, pf);
            let h = random_series(seed ^ 0x55, 0, 1, 4, Parity::Even);
            let lhs = d_theta(&f.mul(&h).unwrap());
            let first = d_theta(&f).mul(&h).unwrap();
            let second = f.mul(&d_theta(&h)).unwrap();
            let rhs = if odd_f { first.sub(&second) } else { first.add(&second) }.unwrap();
            prop_assert!(lhs.agrees_with(&rhs));
        }

        #[test]
        fn product_is_associative(seed in any::<u64>()) {
            let a = random_series(seed, 0, 1, 3, Parity::Even);
            let b = random_series(seed.wrapping_add(1), 0, 2, 3, Parity::Odd);
            let c = random_series(seed.wrapping_add(2), 0, 0, 3, Parity::Even);
            let l = a.mul(&b).unwrap().mul(&c).unwrap();
            let r = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert!(l.agrees_with(&r));
        }
    }
}
