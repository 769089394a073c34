//! Super Mumford form coefficients from transition and residue data.
//!
//! A Ramond family is described by the local expansions of fixed bases of
//! `π_*ω^j` at the zeros `q_1, …, q_r` of a distinguished odd section `t′`,
//! together with `t′ = z f_k(z | θ) [dz|dθ]` near each `q_k`. An NS family
//! uses the expansions at the zeros `p_1, …, p_{g−1}` of an odd section `ν′`.
//!
//! Every local expansion is written `c⁻ + c⁺θ` with the coefficient on the
//! left, as in the displays it is read from.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::{Error, Result, ResultExt};
use crate::grassmann::{Grassmann, Parity};
use crate::json;
use crate::moduli_ranks::{ns_rank, r_value, ramond_rank};
use crate::random::{random_element, random_unit};
use crate::supermatrix::{invert_square, SuperMatrix};
use crate::superseries::{invert_series, residue_simple_pole, SuperSeries};

/// `c⁻ + c⁺θ`, the value of a section near a marked point modulo `z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub minus: Grassmann,
    pub plus: Grassmann,
}

pub type Table = Vec<Vec<Expansion>>;

impl Expansion {
    pub fn new(minus: Grassmann, plus: Grassmann) -> Self {
        Expansion { minus, plus }
    }

    pub fn zero(n: usize) -> Self {
        Expansion::new(Grassmann::zero(n), Grassmann::zero(n))
    }

    /// As a θ-left superseries known to order 0.
    fn series(&self) -> SuperSeries {
        let n = self.minus.num_generators();
        SuperSeries::from_terms(n, 0, 0, [(0, self.minus.clone(), self.plus.involution())])
    }

    pub fn to_json(&self) -> Value {
        json::object(vec![
            ("minus", json::element_to_json(&self.minus)),
            ("plus", json::element_to_json(&self.plus)),
        ])
    }

    pub fn from_json(v: &Value, n: usize) -> Result<Self> {
        if !v.is_object() {
            return Err(Error::Malformed("expansion must be an object with `minus` and `plus`".into()));
        }
        let part = |name: &str| match v.get(name) {
            None => Ok(Grassmann::zero(n)),
            Some(x) => json::element_from_json(x, n).at(name),
        };
        Ok(Expansion::new(part("minus")?, part("plus")?))
    }
}

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

/// Shape and parities of one expansion table.
struct TableShape {
    name: &'static str,
    rows: usize,
    cols: usize,
    minus: Parity,
    plus: Parity,
}

fn check_element(x: &Grassmann, n: usize, p: Parity) -> Result<()> {
    if x.num_generators() != n {
        return Err(Error::GeneratorMismatch {
            left: n,
            right: x.num_generators(),
        });
    }
    if !x.has_parity(p) {
        return Err(Error::WrongParity {
            expected: parity_name(p),
        });
    }
    Ok(())
}

fn check_table(table: &Table, shape: &TableShape, n: usize) -> Result<()> {
    let name = shape.name;
    if table.len() != shape.rows {
        return Err(Error::DimensionMismatch(format!(
            "table `{name}` has {} rows, the rank table requires {}",
            table.len(),
            shape.rows
        )));
    }
    for (j, row) in table.iter().enumerate() {
        if row.len() != shape.cols {
            return Err(Error::DimensionMismatch(format!(
                "row {j} of `{name}` has {} expansions, expected one per marked point ({})",
                row.len(),
                shape.cols
            )));
        }
        for (k, e) in row.iter().enumerate() {
            check_element(&e.minus, n, shape.minus).at(format!("{name}[{j}][{k}].minus"))?;
            check_element(&e.plus, n, shape.plus).at(format!("{name}[{j}][{k}].plus"))?;
        }
    }
    Ok(())
}

fn table_to_json(t: &Table) -> Value {
    Value::Array(
        t.iter()
            .map(|row| Value::Array(row.iter().map(Expansion::to_json).collect()))
            .collect(),
    )
}

fn table_from_json(doc: &Value, name: &str, n: usize) -> Result<Table> {
    let rows = match doc.get(name) {
        None => return Ok(Vec::new()),
        Some(v) => v
            .as_array()
            .ok_or_else(|| Error::Malformed(format!("field `{name}` must be an array")))?,
    };
    rows.iter()
        .enumerate()
        .map(|(j, row)| {
            let row = row
                .as_array()
                .ok_or_else(|| Error::Malformed("each table row must be an array".into()))
                .at(format!("{name}[{j}]"))?;
            row.iter()
                .enumerate()
                .map(|(k, e)| Expansion::from_json(e, n).at(format!("{name}[{j}][{k}]")))
                .collect()
        })
        .collect()
}

fn nonneg(x: i64, what: &str) -> Result<usize> {
    usize::try_from(x).map_err(|_| Error::DimensionMismatch(format!("rank table gives a negative count for {what}")))
}

/// Table sizes of a Ramond family, read off the rank table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RamondSizes {
    pub r: usize,
    pub xi: usize,
    pub phi: usize,
    pub sigma: usize,
    pub tau: usize,
    pub eta: usize,
    pub psi: usize,
}

impl RamondSizes {
    pub fn new(g: i64, n_r: i64) -> Result<Self> {
        let o0 = ramond_rank(g, n_r, 0, 0)?;
        let o1 = ramond_rank(g, n_r, 1, 0)?;
        let om1 = ramond_rank(g, n_r, -1, 0)?;
        let om2 = ramond_rank(g, n_r, -2, 0)?;
        // π_*O = ⟨1 | tφ_i, ξ_j⟩ and π_*ω = ⟨φ_i⟩
        let phi = o1.even;
        let xi = nonneg(o0.odd as i64 - phi as i64, "xi")?;
        // besides σ and τ, π_*ω⁻¹ holds g + r − 1 even and one odd multiple of t
        let sigma = nonneg(om1.even as i64 - phi as i64 - xi as i64, "sigma")?;
        let tau = nonneg(om1.odd as i64 - 1, "tau")?;
        // and π_*ω⁻² multiples of t times the bases above, then η and ψ
        let eta = nonneg(om2.even as i64 - 1 - tau as i64, "eta")?;
        let psi = nonneg(om2.odd as i64 - (phi + xi + sigma) as i64, "psi")?;
        let r = nonneg(r_value(g, n_r)?, "r")?;
        Ok(RamondSizes {
            r,
            xi,
            phi,
            sigma,
            tau,
            eta,
            psi,
        })
    }
}

/// Expansion data of a Ramond family at the zeros of `t′`.
///
/// `f[k]` is the unit with `t′ = z f_k [dz|dθ]` near `q_{k+1}`. Every table is
/// indexed `[basis element][point]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamondInput {
    pub num_generators: usize,
    pub g: i64,
    pub n_r: i64,
    pub f: Vec<SuperSeries>,
    pub xi: Table,
    pub phi: Table,
    pub sigma: Table,
    pub tau: Table,
    pub eta: Table,
    pub psi: Table,
}

impl RamondInput {
    pub fn sizes(&self) -> Result<RamondSizes> {
        RamondSizes::new(self.g, self.n_r)
    }

    /// Checks every size against the rank table, every parity, and that each
    /// `f_k` is an even unit. No Berezinian is touched.
    pub fn validate(&self) -> Result<RamondSizes> {
        let s = self.sizes()?;
        let n = self.num_generators;
        let (even, odd) = (Parity::Even, Parity::Odd);
        if self.f.len() != s.r {
            return Err(Error::DimensionMismatch(format!(
                "expected r = {} local units f, got {}",
                s.r,
                self.f.len()
            )));
        }
        let shape = |name, rows, minus, plus| TableShape {
            name,
            rows,
            cols: s.r,
            minus,
            plus,
        };
        check_table(&self.xi, &shape("xi", s.xi, odd, even), n)?;
        check_table(&self.phi, &shape("phi", s.phi, even, odd), n)?;
        check_table(&self.sigma, &shape("sigma", s.sigma, even, odd), n)?;
        check_table(&self.tau, &shape("tau", s.tau, even, odd), n)?;
        check_table(&self.eta, &shape("eta", s.eta, odd, even), n)?;
        check_table(&self.psi, &shape("psi", s.psi, odd, even), n)?;
        for (k, f) in self.f.iter().enumerate() {
            check_unit(f, n).at(format!("q_{}", k + 1))?;
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Value {
        json::object(vec![
            ("family", Value::from("ramond")),
            ("num_generators", Value::from(self.num_generators as u64)),
            ("g", Value::from(self.g)),
            ("n_R", Value::from(self.n_r)),
            ("f", Value::Array(self.f.iter().map(SuperSeries::to_json).collect())),
            ("xi", table_to_json(&self.xi)),
            ("phi", table_to_json(&self.phi)),
            ("sigma", table_to_json(&self.sigma)),
            ("tau", table_to_json(&self.tau)),
            ("eta", table_to_json(&self.eta)),
            ("psi", table_to_json(&self.psi)),
        ])
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let n = json::num_generators_of(doc)?;
        let f = json::array_field(doc, "f")?
            .iter()
            .enumerate()
            .map(|(k, v)| SuperSeries::from_json(v, n).at(format!("f[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        Ok(RamondInput {
            num_generators: n,
            g: json::int_field(doc, "g")?,
            n_r: json::int_field(doc, "n_R")?,
            f,
            xi: table_from_json(doc, "xi", n)?,
            phi: table_from_json(doc, "phi", n)?,
            sigma: table_from_json(doc, "sigma", n)?,
            tau: table_from_json(doc, "tau", n)?,
            eta: table_from_json(doc, "eta", n)?,
            psi: table_from_json(doc, "psi", n)?,
        })
    }
}

fn check_unit(f: &SuperSeries, n: usize) -> Result<()> {
    if f.num_generators() != n {
        return Err(Error::GeneratorMismatch {
            left: n,
            right: f.num_generators(),
        });
    }
    if f.pole_order() > 0 || f.trunc_order() < 0 {
        return Err(Error::PreconditionViolated("f must be regular and known at z = 0".into()));
    }
    for (k, a, b) in f.terms() {
        if !a.has_parity(Parity::Even) || !b.has_parity(Parity::Odd) {
            return Err(Error::WrongParity { expected: "even" }).at(format!("f.z^{k}"));
        }
    }
    if f.a(0).body().is_zero() {
        return Err(Error::NonInvertibleLeading);
    }
    Ok(())
}

/// Table sizes of an NS family with `g − 1` zeros of `ν′`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NsSizes {
    pub points: usize,
    pub phi: usize,
    pub chi: usize,
    pub psi: usize,
    pub sigma: usize,
    pub rho: usize,
}

impl NsSizes {
    pub fn new(g: i64) -> Result<Self> {
        let w1 = ns_rank(g, 1, 0)?;
        let w2 = ns_rank(g, 2, 0)?;
        let w3 = ns_rank(g, 3, 0)?;
        // π_*ω = ⟨φ_i, ν′ξ | ν′⟩
        let phi = nonneg(w1.even as i64 - 1, "phi")?;
        // π_*ω² = ⟨ν′², χ_i | ν′φ_i, ν′²ξ, ψ_i⟩
        let chi = nonneg(w2.even as i64 - 1, "chi")?;
        let psi = nonneg(w2.odd as i64 - phi as i64 - 1, "psi")?;
        // π_*ω³ = ⟨ν′²φ_i, ν′³ξ, ν′ψ_i, σ_i | ν′³, ν′χ_i, ρ_i⟩
        let sigma = nonneg(w3.even as i64 - (phi + 1 + psi) as i64, "sigma")?;
        let rho = nonneg(w3.odd as i64 - 1 - chi as i64, "rho")?;
        Ok(NsSizes {
            points: nonneg(g - 1, "points")?,
            phi,
            chi,
            psi,
            sigma,
            rho,
        })
    }
}

/// Expansion data of an NS family at the zeros of `ν′`, plus the punctures.
///
/// `alpha` and `beta` are indexed `[basis element][puncture]`, all other
/// tables `[basis element][zero of ν′]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NsInput {
    pub num_generators: usize,
    pub g: i64,
    pub n_ns: usize,
    pub phi: Table,
    pub chi: Table,
    pub psi: Table,
    pub sigma: Table,
    pub rho: Table,
    /// Expansions of the odd function `ξ`; checked but not used.
    pub xi: Option<Vec<Expansion>>,
    /// Normalization entry of `M₃`, the coefficient fixing the lift of `ξ`.
    pub xi_inv: Grassmann,
    pub alpha: Table,
    pub beta: Table,
}

impl NsInput {
    pub fn sizes(&self) -> Result<NsSizes> {
        NsSizes::new(self.g)
    }

    pub fn validate(&self) -> Result<NsSizes> {
        let s = self.sizes()?;
        let n = self.num_generators;
        let shape = |name, rows, cols| TableShape {
            name,
            rows,
            cols,
            minus: Parity::Odd,
            plus: Parity::Even,
        };
        let p = s.points;
        check_table(&self.phi, &shape("phi", s.phi, p), n)?;
        check_table(&self.chi, &shape("chi", s.chi, p), n)?;
        check_table(&self.psi, &shape("psi", s.psi, p), n)?;
        check_table(&self.sigma, &shape("sigma", s.sigma, p), n)?;
        check_table(&self.rho, &shape("rho", s.rho, p), n)?;
        if let Some(xi) = &self.xi {
            check_table(&vec![xi.clone()], &shape("xi", 1, p), n)?;
        }
        check_element(&self.xi_inv, n, Parity::Even).at("xi_inv")?;
        check_table(&self.alpha, &shape("alpha", self.n_ns, self.n_ns), n)?;
        check_table(&self.beta, &shape("beta", self.n_ns, self.n_ns), n)?;
        Ok(s)
    }

    pub fn to_json(&self) -> Value {
        let mut entries = vec![
            ("family", Value::from("ns")),
            ("num_generators", Value::from(self.num_generators as u64)),
            ("g", Value::from(self.g)),
            ("n_NS", Value::from(self.n_ns as u64)),
            ("phi", table_to_json(&self.phi)),
            ("chi", table_to_json(&self.chi)),
            ("psi", table_to_json(&self.psi)),
            ("sigma", table_to_json(&self.sigma)),
            ("rho", table_to_json(&self.rho)),
            ("xi_inv", json::element_to_json(&self.xi_inv)),
            ("alpha", table_to_json(&self.alpha)),
            ("beta", table_to_json(&self.beta)),
        ];
        if let Some(xi) = &self.xi {
            entries.push(("xi", Value::Array(xi.iter().map(Expansion::to_json).collect())));
        }
        json::object(entries)
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let n = json::num_generators_of(doc)?;
        let n_ns = match doc.get("n_NS") {
            None => 0,
            Some(_) => nonneg(json::int_field(doc, "n_NS")?, "n_NS")?,
        };
        let xi = match doc.get("xi") {
            None => None,
            Some(v) => Some(
                v.as_array()
                    .ok_or_else(|| Error::Malformed("field `xi` must be an array".into()))?
                    .iter()
                    .enumerate()
                    .map(|(k, e)| Expansion::from_json(e, n).at(format!("xi[{k}]")))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(NsInput {
            num_generators: n,
            g: json::int_field(doc, "g")?,
            n_ns,
            phi: table_from_json(doc, "phi", n)?,
            chi: table_from_json(doc, "chi", n)?,
            psi: table_from_json(doc, "psi", n)?,
            sigma: table_from_json(doc, "sigma", n)?,
            rho: table_from_json(doc, "rho", n)?,
            xi,
            xi_inv: json::element_from_json(json::field(doc, "xi_inv")?, n).at("xi_inv")?,
            alpha: table_from_json(doc, "alpha", n)?,
            beta: table_from_json(doc, "beta", n)?,
        })
    }
}

/// Which one-sided inverse to use when a construction needs a choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseChoice {
    #[default]
    Canonical,
    Seeded(u64),
}

impl InverseChoice {
    fn left(self, m: &SuperMatrix, salt: u64) -> Result<SuperMatrix> {
        match self {
            InverseChoice::Canonical => m.left_inverse(),
            InverseChoice::Seeded(seed) => m.left_inverse_randomized(seed ^ salt),
        }
    }

    fn right(self, m: &SuperMatrix, salt: u64) -> Result<SuperMatrix> {
        match self {
            InverseChoice::Canonical => m.right_inverse(),
            InverseChoice::Seeded(seed) => m.right_inverse_randomized(seed ^ salt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MumfordFormResult {
    pub coefficient: Grassmann,
    pub formal_tag: String,
    /// Berezinians of the matrices that were multiplied together, by name.
    pub intermediates: BTreeMap<String, Grassmann>,
}

impl MumfordFormResult {
    pub fn to_json(&self) -> Value {
        let inter = self
            .intermediates
            .iter()
            .map(|(k, v)| (k.clone(), json::element_to_json(v)))
            .collect::<serde_json::Map<_, _>>();
        json::object(vec![
            ("coefficient", json::element_to_json(&self.coefficient)),
            ("formal_tag", Value::from(self.formal_tag.clone())),
            ("intermediates", Value::Object(inter)),
        ])
    }
}

pub const RAMOND_TAG: &str = "d_{−1}·d_{1/2}^{−5}";
pub const NS_TAG: &str = "d_{3/2}·d_{1/2}^{−5}";
pub const NS_PUNCTURED_TAG: &str = "d^N_{3/2}·(δ^N_{3/2})^{−1}·d_{1/2}^{−5}";

fn local_units(f: &[SuperSeries]) -> Result<Vec<SuperSeries>> {
    f.iter()
        .enumerate()
        .map(|(k, f)| invert_series(f).at(format!("q_{}", k + 1)))
        .collect()
}

/// `res_{q} (h · s / t)` where `u = 1/f` near `q`, `s` is `1` or `θ`.
fn res_at(h: Option<&Expansion>, with_theta: bool, u: &SuperSeries) -> Result<Grassmann> {
    let n = u.num_generators();
    let mut prod = u.clone().with_weight(0);
    if with_theta {
        prod = SuperSeries::theta(n, 0).mul(&prod)?;
    }
    if let Some(h) = h {
        prod = h.series().mul(&prod)?;
    }
    let zero = Grassmann::zero(n);
    residue_simple_pole(&prod, &zero, &zero)
}

fn residue_a(xi: &Table, us: &[SuperSeries], n: usize) -> Result<SuperMatrix> {
    let r = us.len();
    let mut rows = Vec::with_capacity(2 * r);
    for with_theta in [false, true] {
        for (k, u) in us.iter().enumerate() {
            let mut row = xi
                .iter()
                .map(|x| res_at(Some(&x[k]), with_theta, u))
                .collect::<Result<Vec<_>>>()?;
            row.push(res_at(None, with_theta, u)?);
            rows.push(row);
        }
    }
    SuperMatrix::new(n, (r, r), (xi.len(), 1), rows)
}

fn residue_b(phi: &Table, us: &[SuperSeries], n: usize) -> Result<SuperMatrix> {
    let r = us.len();
    let mut rows = Vec::with_capacity(2 * r);
    for with_theta in [true, false] {
        for (k, u) in us.iter().enumerate() {
            rows.push(
                phi.iter()
                    .map(|p| res_at(Some(&p[k]), with_theta, u))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
    }
    SuperMatrix::new(n, (r, r), (phi.len(), 0), rows)
}

/// Residue pairing of `π_*O` against `H⁰(ω|_{Dt})`.
///
/// Rows are the functionals `1_k, θ_k` (`k = 1..r`), columns
/// `ξ_1, …, ξ_{r−1}` followed by `1`; the odd column `1` is placed last so
/// that the layout is even-first.
pub fn residue_matrix_a(input: &RamondInput) -> Result<SuperMatrix> {
    input.validate()?;
    let us = local_units(&input.f)?;
    residue_a(&input.xi, &us, input.num_generators).at("A'")
}

/// Residue pairing of `π_*ω` against `H⁰(ω|_{Dt})` with the roles of the
/// two summands exchanged.
///
/// Rows are `θϖ_1, …, θϖ_r` followed by `ϖ_1, …, ϖ_r`, so that the even
/// rows come first; columns are `φ_1, …, φ_g`.
pub fn residue_matrix_b(input: &RamondInput) -> Result<SuperMatrix> {
    input.validate()?;
    let us = local_units(&input.f)?;
    residue_b(&input.phi, &us, input.num_generators).at("B'")
}

fn require_left_inverse(l: &SuperMatrix, m: &SuperMatrix, name: &str) -> Result<()> {
    let prod = l.multiply(m).at(name)?;
    if prod != SuperMatrix::identity(m.num_generators(), m.col_layout()) {
        return Err(Error::PreconditionViolated(format!("{name} is not a left inverse"))).at(name);
    }
    Ok(())
}

/// `M₀`: the basis `1|_T, ξ̃*_1.., ξ|_T.., 1̃*` of `H⁰(O_{Dt})` in the
/// coordinates `1_k, θ_k`, with the lifts read off the left inverse
/// `a_left` of [`residue_matrix_a`].
pub fn build_m0(input: &RamondInput, a_left: &SuperMatrix) -> Result<SuperMatrix> {
    let s = input.validate()?;
    let n = input.num_generators;
    let r = s.r;
    let a_prime = residue_matrix_a(input)?;
    require_left_inverse(a_left, &a_prime, "A")?;
    let l = a_left.entries();
    let mut rows = Vec::with_capacity(2 * r);
    for (half, lead) in [(0, Grassmann::one(n)), (r, Grassmann::zero(n))] {
        for k in 0..r {
            let i = half + k;
            let mut row = vec![lead.clone()];
            row.extend((0..r - 1).map(|j| l[j][i].clone()));
            row.extend(input.xi.iter().map(|x| {
                if half == 0 {
                    x[k].minus.clone()
                } else {
                    x[k].plus.clone()
                }
            }));
            row.push(l[r - 1][i].clone());
            rows.push(row);
        }
    }
    SuperMatrix::new(n, (r, r), (r, r), rows).at("M0")
}

/// `M_{−1/2}`: the basis `τ.., b.., σ..` of `H⁰(ω^{−1}|_{Dt})` in the
/// coordinates `θϖ_k | ϖ_k`, with the lifts `b` given by the left inverse
/// `b_left` of [`residue_matrix_b`].
pub fn build_m_minus_half(input: &RamondInput, b_left: &SuperMatrix) -> Result<SuperMatrix> {
    let s = input.validate()?;
    let n = input.num_generators;
    let b_prime = residue_matrix_b(input)?;
    require_left_inverse(b_left, &b_prime, "B")?;
    let mut rows: Vec<Vec<Grassmann>> = Vec::with_capacity(2 * s.r);
    rows.extend(input.tau.iter().map(|t| split_row(t, false)));
    rows.extend(b_left.entries().iter().cloned());
    rows.extend(input.sigma.iter().map(|t| split_row(t, true)));
    SuperMatrix::new(n, (s.r, s.r), (s.r, s.r), rows).at("M-1/2")
}

/// `M_{−1}`: the basis `η.. | ψ..` of `H⁰(ω^{−2}|_{Dt})` in the coordinates
/// `θϖ²_k | ϖ²_k`.
pub fn build_m_minus_one(input: &RamondInput) -> Result<SuperMatrix> {
    let s = input.validate()?;
    let mut rows: Vec<Vec<Grassmann>> = Vec::with_capacity(2 * s.r);
    rows.extend(input.eta.iter().map(|t| split_row(t, true)));
    rows.extend(input.psi.iter().map(|t| split_row(t, false)));
    SuperMatrix::new(input.num_generators, (s.r, s.r), (s.r, s.r), rows).at("M-1")
}

/// `[c⁺.. | c⁻..]` when `plus_first`, otherwise `[c⁻.. | c⁺..]`.
fn split_row(row: &[Expansion], plus_first: bool) -> Vec<Grassmann> {
    let (first, second): (Vec<_>, Vec<_>) = row
        .iter()
        .map(|e| {
            if plus_first {
                (e.plus.clone(), e.minus.clone())
            } else {
                (e.minus.clone(), e.plus.clone())
            }
        })
        .unzip();
    first.into_iter().chain(second).collect()
}

fn ber(m: &SuperMatrix, name: &str) -> Result<Grassmann> {
    m.berezinian().at(name)
}

fn divide(num: &Grassmann, den: &Grassmann, what: &str) -> Result<Grassmann> {
    Ok(num * &den.invert().at(what)?)
}

pub fn mumford_ramond(input: &RamondInput) -> Result<MumfordFormResult> {
    mumford_ramond_with(input, InverseChoice::Canonical)
}

/// `(Ber M₀)² / (Ber M_{−1} · Ber M_{−1/2})`, using `choice` for both left
/// inverses.
pub fn mumford_ramond_with(input: &RamondInput, choice: InverseChoice) -> Result<MumfordFormResult> {
    input.validate()?;
    let a_prime = residue_matrix_a(input)?;
    let b_prime = residue_matrix_b(input)?;
    let a_left = choice.left(&a_prime, 0).at("A'")?;
    let b_left = choice.left(&b_prime, 0x9e37_79b9_7f4a_7c15).at("B'")?;
    let m0 = build_m0(input, &a_left)?;
    let mh = build_m_minus_half(input, &b_left)?;
    let m1 = build_m_minus_one(input)?;
    let (d0, dh, d1) = (ber(&m0, "M0")?, ber(&mh, "M-1/2")?, ber(&m1, "M-1")?);
    let coefficient = divide(&(&d0 * &d0), &(&d1 * &dh), "Ber(M-1)·Ber(M-1/2)")?;
    Ok(MumfordFormResult {
        coefficient,
        formal_tag: RAMOND_TAG.into(),
        intermediates: BTreeMap::from([("M0".into(), d0), ("M-1/2".into(), dh), ("M-1".into(), d1)]),
    })
}

/// `A₁`: the rows `[φ⁺.. | φ⁻..]` of the forms `φ_j` at the zeros of `ν′`.
pub fn build_a1(input: &NsInput) -> Result<SuperMatrix> {
    let s = input.validate()?;
    let rows = input.phi.iter().map(|t| split_row(t, true)).collect();
    SuperMatrix::new(input.num_generators, (s.phi, 0), (s.points, s.points), rows).at("A1")
}

/// `M₁ = [A₁; B₁ᵗ]`, where `B₁` is a right inverse of `A₁` with its two
/// column blocks exchanged, i.e. `B₁ᵗ` is dual to `A₁` under the pairing of
/// `dz` with `θ dθ`.
pub fn build_m1(input: &NsInput, choice: InverseChoice) -> Result<SuperMatrix> {
    let s = input.validate()?;
    let n = input.num_generators;
    let p = s.points;
    let swapped = input.phi.iter().map(|t| split_row(t, false)).collect();
    let a1_swapped = SuperMatrix::new(n, (0, s.phi), (p, p), swapped).at("A1")?;
    let b1 = choice.right(&a1_swapped, 0).at("A1")?;
    let mut rows: Vec<Vec<Grassmann>> = build_a1(input)?.entries().to_vec();
    rows.extend(b1.transpose().entries().iter().cloned());
    SuperMatrix::new(n, (p, p), (p, p), rows).at("M1")
}

pub fn build_m2(input: &NsInput) -> Result<SuperMatrix> {
    let s = input.validate()?;
    let n = input.num_generators;
    let p = s.points;
    let mut rows: Vec<Vec<Grassmann>> = input.chi.iter().map(|t| split_row(t, true)).collect();
    rows.extend(input.psi.iter().map(|t| split_row(t, false)));
    let mut last = vec![Grassmann::zero(n); 2 * p];
    last[2 * p - 1] = Grassmann::one(n);
    rows.push(last);
    SuperMatrix::new(n, (p, p), (p, p), rows).at("M2")
}

pub fn build_m3(input: &NsInput) -> Result<SuperMatrix> {
    let s = input.validate()?;
    let n = input.num_generators;
    let p = s.points;
    if input.xi_inv.body().is_zero() {
        return Err(Error::NonInvertibleNormalization).at("xi_inv").at("M3");
    }
    let mut rows: Vec<Vec<Grassmann>> = input.rho.iter().map(|t| split_row(t, true)).collect();
    let mut norm = vec![Grassmann::zero(n); 2 * p];
    norm[0] = input.xi_inv.clone();
    rows.push(norm);
    rows.extend(input.sigma.iter().map(|t| split_row(t, false)));
    SuperMatrix::new(n, (p, p), (p, p), rows).at("M3")
}

/// `M′`: the expansions `α.. | β..` at the NS punctures.
pub fn build_mprime(input: &NsInput) -> Result<SuperMatrix> {
    input.validate()?;
    let m = input.n_ns;
    if m == 0 {
        return Err(Error::PreconditionViolated("the punctured form needs at least one NS puncture".into()))
            .at("M'");
    }
    let mut rows: Vec<Vec<Grassmann>> = input.alpha.iter().map(|t| split_row(t, true)).collect();
    rows.extend(input.beta.iter().map(|t| split_row(t, false)));
    SuperMatrix::new(input.num_generators, (m, m), (m, m), rows).at("M'")
}

pub fn mumford_ns(input: &NsInput) -> Result<MumfordFormResult> {
    mumford_ns_with(input, InverseChoice::Canonical)
}

/// `Ber M₃ · Ber M₂ / (Ber M₁)²`.
pub fn mumford_ns_with(input: &NsInput, choice: InverseChoice) -> Result<MumfordFormResult> {
    input.validate()?;
    let m1 = build_m1(input, choice)?;
    let m2 = build_m2(input)?;
    let m3 = build_m3(input)?;
    let (d1, d2, d3) = (ber(&m1, "M1")?, ber(&m2, "M2")?, ber(&m3, "M3")?);
    let coefficient = divide(&(&d3 * &d2), &(&d1 * &d1), "(Ber M1)^2")?;
    Ok(MumfordFormResult {
        coefficient,
        formal_tag: NS_TAG.into(),
        intermediates: BTreeMap::from([("M1".into(), d1), ("M2".into(), d2), ("M3".into(), d3)]),
    })
}

pub fn mumford_ns_punctured(input: &NsInput) -> Result<MumfordFormResult> {
    mumford_ns_punctured_with(input, InverseChoice::Canonical)
}

/// The unpunctured coefficient divided by `Ber M′`.
pub fn mumford_ns_punctured_with(input: &NsInput, choice: InverseChoice) -> Result<MumfordFormResult> {
    let mp = build_mprime(input)?;
    let mut out = mumford_ns_with(input, choice)?;
    let dp = ber(&mp, "M'")?;
    out.coefficient = divide(&out.coefficient, &dp, "Ber M'")?;
    out.formal_tag = NS_PUNCTURED_TAG.into();
    out.intermediates.insert("M'".into(), dp);
    Ok(out)
}

fn delta(n: usize, i: usize, j: usize) -> Grassmann {
    Grassmann::from_int(n, (i == j) as i64)
}

fn table_with(rows: usize, cols: usize, mut entry: impl FnMut(usize, usize) -> Expansion) -> Table {
    (0..rows).map(|j| (0..cols).map(|k| entry(j, k)).collect()).collect()
}

impl RamondInput {
    /// Genus 2 with 8 Ramond punctures, chosen so that `M₀`, `M_{−1/2}` and
    /// `M_{−1}` all have Berezinian 1.
    pub fn identity_fixture(num_generators: usize) -> Self {
        let n = num_generators;
        let (g, n_r) = (2, 8);
        let s = RamondSizes::new(g, n_r).expect("valid genus and puncture count");
        let r = s.r;
        let zero = || Expansion::zero(n);
        let one = || Grassmann::one(n);
        let z = || Grassmann::zero(n);
        RamondInput {
            num_generators: n,
            g,
            n_r,
            f: (0..r).map(|_| SuperSeries::one(n, 1)).collect(),
            // ξ_j has plus part 1 at q_{j+1}
            xi: table_with(s.xi, r, |j, k| if k == j + 1 { Expansion::new(z(), one()) } else { zero() }),
            phi: table_with(s.phi, r, |j, k| if k == j + 1 { Expansion::new(one(), z()) } else { zero() }),
            sigma: table_with(s.sigma, r, |j, k| Expansion::new(delta(n, j, k), z())),
            tau: table_with(s.tau, r, |j, k| Expansion::new(delta(n, j, k), z())),
            eta: table_with(s.eta, r, |j, k| Expansion::new(z(), delta(n, j, k))),
            psi: table_with(s.psi, r, |j, k| Expansion::new(z(), delta(n, j, k))),
        }
    }

    /// Seeded input obeying the residue theorem on the curve, which is what
    /// makes the coefficient independent of the chosen left inverses.
    ///
    /// The residues of `1/t′` and `ξ_j/t′` are made to sum to zero (with the
    /// odd parts `ξ⁻` vanishing), and every `τ_j`, `σ_j` is solved so that its
    /// restriction pairs to zero with each `φ_i`.
    pub fn random(seed: u64, g: i64, n_r: i64, num_generators: usize) -> Result<Self> {
        let mut last = Error::PreconditionViolated("no attempts".into());
        for attempt in 0..64u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(attempt));
            match random_ramond_attempt(&mut rng, g, n_r, num_generators).and_then(|inp| {
                if mumford_ramond(&inp)?.coefficient.body().is_zero() {
                    return Err(Error::NotInvertible);
                }
                Ok(inp)
            }) {
                Ok(inp) => return Ok(inp),
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}

fn random_ramond_attempt(rng: &mut ChaCha8Rng, g: i64, n_r: i64, n: usize) -> Result<RamondInput> {
    let s = RamondSizes::new(g, n_r)?;
    let r = s.r;
    let even = |rng: &mut ChaCha8Rng| random_element(rng, n, Parity::Even, 2);
    let odd = |rng: &mut ChaCha8Rng| random_element(rng, n, Parity::Odd, 2);
    let unit = |rng: &mut ChaCha8Rng| random_unit(rng, n, 2);

    // u_k = 1/f_k with Σ_k b₀(u_k) = 0
    let mut lead: Vec<(Grassmann, Grassmann)> = (0..r).map(|_| (unit(rng), odd(rng))).collect();
    let b_sum = lead[..r - 1].iter().fold(Grassmann::zero(n), |acc, (_, b)| &acc + b);
    lead[r - 1].1 = -&b_sum;
    let f = lead
        .iter()
        .map(|(a, b)| {
            let tail = (1..=2).map(|k| (k, even(rng), odd(rng))).collect::<Vec<_>>();
            let u = SuperSeries::from_terms(n, 0, 2, std::iter::once((0, a.clone(), b.clone())).chain(tail));
            invert_series(&u)
        })
        .collect::<Result<Vec<_>>>()?;

    // Σ_k ξ_j^{k,+} a₀(u_k) = 0
    let last_inv = lead[r - 1].0.invert()?;
    let xi = (0..s.xi)
        .map(|_| {
            let mut plus: Vec<Grassmann> = (0..r - 1).map(|_| unit(rng)).collect();
            let acc = plus.iter().zip(&lead).fold(Grassmann::zero(n), |acc, (x, (a, _))| &acc + &(x * a));
            plus.push(-&(&acc * &last_inv));
            plus.into_iter().map(|p| Expansion::new(Grassmann::zero(n), p)).collect()
        })
        .collect::<Table>();

    let phi = table_with(s.phi, r, |_, _| Expansion::new(unit(rng), odd(rng)));
    let us = local_units(&f)?;
    let b_prime = residue_b(&phi, &us, n)?;
    let gsz = s.phi;
    let head: Vec<Vec<Grassmann>> = b_prime.entries()[..gsz].to_vec();
    let head_inv = invert_square(&head, n).map_err(|_| Error::BodyRankDeficient)?;

    // the first g entries of v (standard order) solve v·B′ = 0
    let annihilate = |mut v: Vec<Grassmann>| -> Vec<Grassmann> {
        let rest: Vec<Grassmann> = (0..gsz)
            .map(|i| {
                (gsz..2 * r).fold(Grassmann::zero(n), |acc, c| &acc + &(&v[c] * &b_prime.entries()[c][i]))
            })
            .collect();
        for j in 0..gsz {
            let y = (0..gsz).fold(Grassmann::zero(n), |acc, i| &acc + &(&rest[i] * &head_inv[i][j]));
            v[j] = -&y;
        }
        v
    };
    let tau = (0..s.tau)
        .map(|_| {
            let mut v: Vec<Grassmann> = (0..r).map(|_| even(rng)).collect();
            v.extend((0..r).map(|_| odd(rng)));
            let v = annihilate(v);
            (0..r).map(|k| Expansion::new(v[k].clone(), v[r + k].clone())).collect()
        })
        .collect::<Table>();
    let sigma = (0..s.sigma)
        .map(|j| {
            let mut v: Vec<Grassmann> = (0..r).map(|_| odd(rng)).collect();
            v.extend((0..r).map(|k| if k == j { unit(rng) } else { even(rng) }));
            let v = annihilate(v);
            (0..r).map(|k| Expansion::new(v[r + k].clone(), v[k].clone())).collect()
        })
        .collect::<Table>();
    let eta = table_with(s.eta, r, |j, k| {
        Expansion::new(odd(rng), if j == k { unit(rng) } else { even(rng) })
    });
    let psi = table_with(s.psi, r, |j, k| {
        Expansion::new(odd(rng), if j == k { unit(rng) } else { even(rng) })
    });
    Ok(RamondInput {
        num_generators: n,
        g,
        n_r,
        f,
        xi,
        phi,
        sigma,
        tau,
        eta,
        psi,
    })
}

impl NsInput {
    /// Genus 3 with `n_ns` punctures, every Berezinian equal to 1.
    pub fn identity_fixture(num_generators: usize, n_ns: usize) -> Self {
        let n = num_generators;
        let g = 3;
        let s = NsSizes::new(g).expect("valid genus");
        let p = s.points;
        let z = || Grassmann::zero(n);
        let plus_delta = |j: usize, k: usize| Expansion::new(z(), delta(n, j, k));
        NsInput {
            num_generators: n,
            g,
            n_ns,
            phi: table_with(s.phi, p, plus_delta),
            chi: table_with(s.chi, p, plus_delta),
            psi: table_with(s.psi, p, plus_delta),
            sigma: table_with(s.sigma, p, plus_delta),
            // ρ_1 and the normalization row form [[0, 1], [−1, 0]]
            rho: table_with(s.rho, p, |j, k| Expansion::new(z(), delta(n, j + 1, k))),
            xi: None,
            xi_inv: Grassmann::from_int(n, -1),
            alpha: table_with(n_ns, n_ns, plus_delta),
            beta: table_with(n_ns, n_ns, plus_delta),
        }
    }

    /// Seeded input with `φ⁻ = 0`, so that the row space of `A₁` already
    /// contains every change of the dual lift `B₁` and `Ber M₁` does not
    /// depend on it.
    pub fn random(seed: u64, g: i64, n_ns: usize, num_generators: usize) -> Result<Self> {
        let n = num_generators;
        let s = NsSizes::new(g)?;
        let p = s.points;
        let mut last = Error::PreconditionViolated("no attempts".into());
        for attempt in 0..64u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(attempt));
            let mut entry = |diag: bool, with_minus: bool| {
                let plus = if diag {
                    random_unit(&mut rng, n, 2)
                } else {
                    random_element(&mut rng, n, Parity::Even, 2)
                };
                let minus = if with_minus {
                    random_element(&mut rng, n, Parity::Odd, 2)
                } else {
                    Grassmann::zero(n)
                };
                Expansion::new(minus, plus)
            };
            // `shift` places the unit entries so that each matrix has an
            // invertible body, as in the identity fixture
            let mut table = |rows: usize, cols: usize, with_minus: bool, shift: usize| {
                table_with(rows, cols, |j, k| entry(j + shift == k, with_minus))
            };
            let phi = table(s.phi, p, false, 0);
            let chi = table(s.chi, p, true, 0);
            let psi = table(s.psi, p, true, 0);
            let sigma = table(s.sigma, p, true, 0);
            let rho = table(s.rho, p, true, 1);
            let alpha = table(n_ns, n_ns, true, 0);
            let beta = table(n_ns, n_ns, true, 0);
            let xi_inv = random_unit(&mut rng, n, 2);
            let inp = NsInput {
                num_generators: n,
                g,
                n_ns,
                phi,
                chi,
                psi,
                sigma,
                rho,
                xi: None,
                xi_inv,
                alpha,
                beta,
            };
            let check = if n_ns > 0 {
                mumford_ns_punctured(&inp)
            } else {
                mumford_ns(&inp)
            };
            match check {
                Ok(out) if !out.coefficient.body().is_zero() => return Ok(inp),
                Ok(_) => last = Error::NotInvertible,
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}
