//! Acceptance suite: one line per criterion, exact comparisons throughout.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use supermumford::grassmann::Rational;
use supermumford::moduli_ranks::{ns_rank, ramond_rank, RankPair};
use supermumford::mumford::{
    build_mprime, mumford_ns, mumford_ns_punctured, mumford_ns_with, mumford_ramond, mumford_ramond_with,
    InverseChoice, NsInput, RamondInput,
};
use supermumford::random::{random_element, random_unit};
use supermumford::superconformal::{
    is_ramond_superconformal, quotient_change_matrix, random_ramond, random_superconformal,
};
use supermumford::superseries::{residue, transform_section, SuperSeries};
use supermumford::{Grassmann, Parity, SuperMatrix};

type Check = Result<String, String>;

/// Number, name, time limit in seconds, body.
type Criterion = (u32, &'static str, Option<u64>, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Product computed term by term, sign from counting inversions.
fn naive_mul(x: &Grassmann, y: &Grassmann) -> Grassmann {
    let n = x.num_generators();
    let mut terms: Vec<(Vec<usize>, Rational)> = Vec::new();
    for (gx, cx) in x.terms() {
        for (gy, cy) in y.terms() {
            if gx.iter().any(|g| gy.contains(g)) {
                continue;
            }
            let inversions = gx.iter().map(|a| gy.iter().filter(|b| *b < a).count()).sum::<usize>();
            let mut gens: Vec<usize> = gx.iter().chain(&gy).copied().collect();
            gens.sort_unstable();
            let c = cx * cy;
            terms.push((gens, if inversions % 2 == 0 { c } else { -c }));
        }
    }
    Grassmann::from_terms(n, terms).unwrap()
}

fn parity_of(rng: &mut ChaCha8Rng) -> Parity {
    if rng.gen_bool(0.5) {
        Parity::Even
    } else {
        Parity::Odd
    }
}

fn det2(m: [[&Grassmann; 2]; 2]) -> Grassmann {
    &(m[0][0] * m[1][1]) - &(m[0][1] * m[1][0])
}

/// `Ber = det A · det(D − C A⁻¹ B)⁻¹` for a (2|2) matrix, the other Schur
/// complement from the one the library uses.
fn ber_oracle(m: &SuperMatrix) -> Grassmann {
    let e = |i: usize, j: usize| m.get(i, j).clone();
    let det_a = det2([[m.get(0, 0), m.get(0, 1)], [m.get(1, 0), m.get(1, 1)]]);
    let inv_det = det_a.invert().unwrap();
    let a_inv = [
        [&e(1, 1) * &inv_det, -&(&e(0, 1) * &inv_det)],
        [-&(&e(1, 0) * &inv_det), &e(0, 0) * &inv_det],
    ];
    let s: [[Grassmann; 2]; 2] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = e(2 + i, 2 + j);
            for (k, row) in a_inv.iter().enumerate() {
                for (l, x) in row.iter().enumerate() {
                    acc = &acc - &(&(&e(2 + i, k) * x) * &e(l, 2 + j));
                }
            }
            acc
        })
    });
    let det_s = det2([[&s[0][0], &s[0][1]], [&s[1][0], &s[1][1]]]);
    &det_a * &det_s.invert().unwrap()
}

fn random_even_22(rng: &mut ChaCha8Rng, n: usize) -> SuperMatrix {
    let mut entries = vec![vec![Grassmann::zero(n); 4]; 4];
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let odd_entry = (i < 2) != (j < 2);
            *x = if odd_entry {
                random_element(rng, n, Parity::Odd, 3)
            } else if i == j {
                random_unit(rng, n, 3)
            } else {
                random_element(rng, n, Parity::Even, 2)
            };
        }
    }
    SuperMatrix::new(n, (2, 2), (2, 2), entries).unwrap()
}

fn grassmann_axioms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let count = 500;
    for i in 0..count {
        let n = 1 + i % 6;
        let (px, py, pz) = (parity_of(&mut rng), parity_of(&mut rng), parity_of(&mut rng));
        let x = random_element(&mut rng, n, px, 4);
        let y = random_element(&mut rng, n, py, 4);
        let z = random_element(&mut rng, n, pz, 4);
        let xy = &x * &y;
        ensure(xy == naive_mul(&x, &y), || format!("product differs from the term-wise oracle at {i}"))?;
        let yx = &y * &x;
        let swapped = if px == Parity::Odd && py == Parity::Odd { -&yx } else { yx };
        ensure(xy == swapped, || format!("supercommutativity fails at {i}"))?;
        ensure(&xy * &z == &x * &(&y * &z), || format!("associativity fails at {i}"))?;
        let u = random_unit(&mut rng, n, 4);
        let inv = u.invert().map_err(|e| e.to_string())?;
        let one = Grassmann::one(n);
        ensure(naive_mul(&u, &inv) == one && naive_mul(&inv, &u) == one, || {
            format!("inverse is not two-sided at {i}")
        })?;
    }
    Ok(format!("{count} random triples with up to 6 generators"))
}

fn berezinian_multiplicative() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 4;
    for i in 0..100 {
        let m = random_even_22(&mut rng, n);
        let k = random_even_22(&mut rng, n);
        let bm = m.berezinian().map_err(|e| e.to_string())?;
        let bk = k.berezinian().map_err(|e| e.to_string())?;
        ensure(bm == ber_oracle(&m), || format!("Ber disagrees with the Schur oracle at {i}"))?;
        let bmk = m.multiply(&k).and_then(|p| p.berezinian()).map_err(|e| e.to_string())?;
        ensure(bmk == &bm * &bk, || format!("Ber(MN) != Ber(M) Ber(N) at {i}"))?;
    }
    for p in 0..=4 {
        for q in 0..=4 {
            if p + q == 0 {
                continue;
            }
            let b = SuperMatrix::identity(n, (p, q)).berezinian().map_err(|e| e.to_string())?;
            ensure(b.is_one(), || format!("Ber(I) != 1 for layout ({p}|{q})"))?;
        }
    }
    Ok("100 random (2|2) pairs, identities up to (4|4)".into())
}

fn multiplication_matrix() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..50 {
        let n = 1 + i % 5;
        let f0 = random_unit(&mut rng, n, 4);
        let f1 = random_element(&mut rng, n, Parity::Odd, 4);
        let m = SuperMatrix::new(n, (1, 1), (1, 1), vec![vec![f0.clone(), Grassmann::zero(n)], vec![f1, f0]])
            .map_err(|e| e.to_string())?;
        let b = m.berezinian().map_err(|e| e.to_string())?;
        ensure(b.is_one(), || format!("Ber m_f = {b:?} at {i}"))?;
    }
    Ok("50 random f = f0 + f1 alpha".into())
}

fn ramond_changes() -> Check {
    for seed in 0..50u64 {
        let sign = if seed % 2 == 0 { 1 } else { -1 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_ramond(&mut rng, 4, 4, sign);
        ensure(is_ramond_superconformal(&c), || format!("change {seed} is not Ramond"))?;
        let g0 = c.g().a(0);
        ensure((&g0 * &g0).is_one(), || format!("g(0)^2 != 1 for {seed}"))?;
        ensure((&c.lambda().a(1) * &c.psi().a(0)).is_zero(), || format!("lambda'(0) psi(0) != 0 for {seed}"))?;
        let a = quotient_change_matrix(&c).map_err(|e| e.to_string())?;
        let b = a.berezinian().map_err(|e| e.to_string())?;
        ensure(b.is_one() && ber_oracle(&a).is_one(), || format!("Ber A != 1 for {seed}"))?;
    }
    Ok("50 changes to order 4, both branch signs".into())
}

fn pole_section(rng: &mut ChaCha8Rng, n: usize, trunc: i64) -> SuperSeries {
    let pole = rng.gen_range(0..=3i64);
    let terms: Vec<_> = (-pole..=trunc)
        .map(|k| {
            (
                k,
                random_element(rng, n, Parity::Even, 2),
                random_element(rng, n, Parity::Odd, 2),
            )
        })
        .collect();
    SuperSeries::from_terms(n, 1, trunc, terms)
}

fn residue_invariance() -> Check {
    let (n, trunc) = (4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut nonzero = 0;
    for i in 0..50 {
        let c = random_superconformal(&mut rng, n, trunc);
        let sigma = pole_section(&mut rng, n, trunc);
        let moved = transform_section(&sigma, &c).map_err(|e| e.to_string())?;
        let before = residue(&sigma).map_err(|e| e.to_string())?;
        let after = residue(&moved).map_err(|e| e.to_string())?;
        ensure(before == after, || format!("residue changed for sample {i}"))?;
        nonzero += usize::from(!before.is_zero());
    }
    Ok(format!("50 sections with poles up to order 3 ({nonzero} nonzero residues)"))
}

fn rank_tables() -> Check {
    // rows of the two Ramond tables, rank π_*ω^j and rank R¹π_*ω^j
    let ramond_paper = |g: i64, n: i64| -> Vec<(i64, u8, (i64, i64))> {
        vec![
            (-2, 0, (n + 3 - 3 * g, 3 * n / 2 + 2 - 2 * g)),
            (-1, 0, (n + 1 - g, n / 2 + 2 - 2 * g)),
            (0, 0, (1, n / 2)),
            (1, 0, (g, 0)),
            (-2, 1, (0, 0)),
            (-1, 1, (0, 0)),
            (0, 1, (g, 0)),
            (1, 1, (1, n / 2)),
        ]
    };
    for (g, n) in [(2, 8), (2, 10), (3, 14)] {
        for (j, i, (e, o)) in ramond_paper(g, n) {
            let got = ramond_rank(g, n, j, i).map_err(|e| e.to_string())?;
            ensure(got == RankPair::new(e as usize, o as usize), || {
                format!("Ramond g={g} n_R={n} j={j} i={i}: {got} vs {e} | {o}")
            })?;
        }
    }
    let ns_paper = |g: i64| vec![(0, (1, 1)), (1, (g, 1)), (2, (g, 2 * g - 2)), (3, (3 * g - 3, 2 * g - 2)), (-1, (1, 0))];
    for g in [2, 3] {
        for (j, (e, o)) in ns_paper(g) {
            let got = ns_rank(g, j, 0).map_err(|e| e.to_string())?;
            ensure(got == RankPair::new(e as usize, o as usize), || {
                format!("NS g={g} j={j}: {got} vs {e} | {o}")
            })?;
        }
    }
    Ok("24 Ramond rows and 10 NS statements".into())
}

fn ramond_pipeline() -> Check {
    let fixture = mumford_ramond(&RamondInput::identity_fixture(4)).map_err(|e| e.to_string())?;
    ensure(fixture.coefficient.is_one(), || format!("identity fixture gives {:?}", fixture.coefficient))?;
    for seed in 0..20u64 {
        let inp = RamondInput::random(seed, 2, 8, 4).map_err(|e| e.to_string())?;
        let a = mumford_ramond(&inp).map_err(|e| e.to_string())?;
        let b = mumford_ramond_with(&inp, InverseChoice::Seeded(1000 + seed)).map_err(|e| e.to_string())?;
        ensure(a.coefficient == b.coefficient, || format!("left inverses change the coefficient for seed {seed}"))?;
    }
    // a wrong table size must win over a degenerate unit that arithmetic would trip on
    let mut bad = RamondInput::identity_fixture(2);
    bad.tau.push(bad.tau[0].clone());
    bad.f[0] = SuperSeries::from_terms(2, 0, 1, [(1, Grassmann::one(2), Grassmann::zero(2))]);
    let err = mumford_ramond(&bad).err().ok_or("oversized input was accepted")?;
    ensure(err.kind() == "DimensionMismatch", || format!("rejected with {} instead", err.kind()))?;
    Ok("identity fixture is 1, 20 seeds agree across left inverses, sizes checked first".into())
}

fn ns_pipeline() -> Check {
    let fixture = mumford_ns(&NsInput::identity_fixture(4, 2)).map_err(|e| e.to_string())?;
    ensure(fixture.coefficient.is_one(), || format!("identity fixture gives {:?}", fixture.coefficient))?;
    for seed in 0..20u64 {
        let inp = NsInput::random(seed, 3, 2, 4).map_err(|e| e.to_string())?;
        let a = mumford_ns(&inp).map_err(|e| e.to_string())?;
        let b = mumford_ns_with(&inp, InverseChoice::Seeded(1000 + seed)).map_err(|e| e.to_string())?;
        ensure(a.coefficient == b.coefficient, || format!("B1 changes the coefficient for seed {seed}"))?;
        let p = mumford_ns_punctured(&inp).map_err(|e| e.to_string())?;
        let mp = build_mprime(&inp).and_then(|m| m.berezinian()).map_err(|e| e.to_string())?;
        ensure(&p.coefficient * &mp == a.coefficient, || format!("punctured form inconsistent for seed {seed}"))?;
    }
    Ok("identity fixture is 1, 20 seeds agree across B1 and Ber M'".into())
}

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn run_cli(args: &[String]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_supermumford"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn cli_determinism() -> Check {
    let with = |verb: &[&str], file: &str| -> Vec<String> {
        let mut v: Vec<String> = verb.iter().map(|s| s.to_string()).collect();
        v.extend(["--input".to_string(), fixture(file)]);
        v
    };
    let commands: Vec<Vec<String>> = vec![
        with(&["ber"], "mf.json"),
        with(&["leftinv", "--seed", "3"], "mf.json"),
        with(&["residue"], "section.json"),
        with(&["alpha"], "section.json"),
        with(&["check-superconformal"], "ramond_change.json"),
        vec!["check-superconformal".into(), "--seed".into(), "4".into(), "--branch-sign".into(), "-1".into()],
        vec!["ranks".into(), "--family".into(), "ramond".into(), "--g".into(), "2".into(), "--nr".into(), "8".into()],
        vec!["ranks".into(), "--family".into(), "ns".into(), "--g".into(), "3".into()],
        with(&["mumford", "ramond"], "ramond_identity.json"),
        with(&["mumford", "ramond", "--left-inverse-seed", "7"], "ramond_random.json"),
        with(&["mumford", "ns"], "ns_identity.json"),
        with(&["mumford", "ns", "--punctured"], "ns_random.json"),
        with(&["validate"], "ramond_random.json"),
        with(&["validate", "ns"], "ns_random.json"),
    ];
    for args in &commands {
        let first = run_cli(args);
        let second = run_cli(args);
        ensure(first.0 == 0, || format!("`{}` exited with {}", args.join(" "), first.0))?;
        ensure(first == second, || format!("`{}` is not deterministic", args.join(" ")))?;
    }
    let (_, ber) = run_cli(&with(&["ber"], "mf.json"));
    ensure(ber == b"{\"ber\":\"1\"}\n", || "ber of m_f is not {\"ber\":\"1\"}".into())?;
    let (_, id) = run_cli(&with(&["mumford", "ramond"], "ramond_identity.json"));
    let id: serde_json::Value = serde_json::from_slice(&id).map_err(|e| e.to_string())?;
    ensure(id["coefficient"] == "1" && id["formal_tag"] == "d_{−1}·d_{1/2}^{−5}", || {
        format!("identity fixture printed {id}")
    })?;
    let (ranks_code, ranks) = run_cli(&commands[6]);
    let ranks: serde_json::Value = serde_json::from_slice(&ranks).map_err(|e| e.to_string())?;
    ensure(ranks_code == 0 && ranks["ranks"]["j=0, i=0"] == serde_json::json!([1, 4]), || {
        format!("ranks printed {ranks}")
    })?;
    let (code, out) = run_cli(&with(&["mumford", "ramond"], "malformed.json"));
    let err: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    ensure(code == 1 && err["error_kind"] == "Malformed", || format!("malformed input gave {code}: {err}"))?;
    let (code, out) = run_cli(&with(&["mumford", "ramond"], "ramond_degenerate.json"));
    let err: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    ensure(
        code == 2 && err["error_kind"] == "NonInvertibleLeading" && err["location"] == "q_1",
        || format!("domain error gave {code}: {err}"),
    )?;
    Ok(format!("{} commands run twice, exit codes 1 and 2 checked", commands.len()))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "Grassmann ring axioms", Some(5), grassmann_axioms),
        (2, "Berezinian multiplicativity", Some(10), berezinian_multiplicative),
        (3, "Ber m_f = 1", None, multiplication_matrix),
        (4, "Ramond coordinate changes", None, ramond_changes),
        (5, "residue coordinate invariance", None, residue_invariance),
        (6, "rank tables", None, rank_tables),
        (7, "Ramond pipeline", Some(30), ramond_pipeline),
        (8, "NS pipeline", None, ns_pipeline),
        (9, "CLI determinism", None, cli_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, limit, body) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(body))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(secs)) if elapsed > Duration::from_secs(secs) => {
                Err(format!("took {:.2}s, limit {secs}s", elapsed.as_secs_f64()))
            }
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {id} ({name}): PASS [{detail}; {:.2}s]", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL [{why}; {:.2}s]", elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
