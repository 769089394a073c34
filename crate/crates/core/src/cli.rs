//! Batch front end: one verb per call, JSON in, JSON out.
//!
//! Exit status 0 on success, 2 for domain errors and 1 for usage errors or
//! malformed input. Errors are reported as `{error_kind, location, message}`.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::Error;
use crate::json::{self, element_to_json, num_generators_of};
use crate::moduli_ranks::{ns_table, r_value, ramond_table};
use crate::mumford::{self, InverseChoice, NsInput, RamondInput};
use crate::superconformal::{self as sc, CoordinateChange, DEFAULT_TRUNC_ORDER};
use crate::supermatrix::SuperMatrix;
use crate::superseries::{self as ss, SuperSeries};
use crate::Grassmann;

#[derive(Parser, Debug)]
#[command(name = "supermumford", version, about = "Exact super Riemann surface calculus and super Mumford forms")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Debug)]
struct Input {
    /// JSON document to read.
    #[arg(long, conflicts_with = "json")]
    input: Option<PathBuf>,
    /// Inline JSON document.
    #[arg(long)]
    json: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Ramond,
    Ns,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Ramond => "ramond",
            Family::Ns => "ns",
        }
    }
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Berezinian of a supermatrix.
    Ber(Input),
    /// Left inverse of a supermatrix with at least as many rows as columns.
    Leftinv {
        #[command(flatten)]
        input: Input,
        /// Use the randomized left inverse with this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Residue of a weight-1 series, or of `f/(z − z0 − θθ0)` given `{series, z0, theta0}`.
    Residue(Input),
    /// Split a weight-1 series into its `dθ` and `ϖ` parts.
    Alpha(Input),
    /// Report the superconformal and Ramond conditions of a coordinate change.
    CheckSuperconformal {
        #[command(flatten)]
        input: Input,
        /// Draw a random Ramond change instead of reading one.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_TRUNC_ORDER)]
        trunc_order: i64,
        /// Sign of g(0) when g and λ are solved for.
        #[arg(long, default_value_t = 1, allow_hyphen_values = true, value_parser = parse_sign)]
        branch_sign: i64,
        /// Odd generators of a randomly drawn change.
        #[arg(long, default_value_t = 4)]
        num_generators: usize,
    },
    /// Rank table of the direct images.
    Ranks {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        g: i64,
        /// Number of Ramond punctures.
        #[arg(long)]
        nr: Option<i64>,
    },
    /// Super Mumford form coefficient.
    Mumford {
        #[arg(value_enum)]
        family: Family,
        #[command(flatten)]
        input: Input,
        /// Divide by Ber M′ (NS only).
        #[arg(long)]
        punctured: bool,
        /// Use seeded randomized left inverses.
        #[arg(long)]
        left_inverse_seed: Option<u64>,
    },
    /// Check table sizes and parities of a Mumford input without computing.
    Validate {
        /// Defaults to the document's `family` field.
        #[arg(value_enum)]
        family: Option<Family>,
        #[command(flatten)]
        input: Input,
    },
}

fn parse_sign(s: &str) -> Result<i64, String> {
    match s {
        "1" | "+1" => Ok(1),
        "-1" => Ok(-1),
        _ => Err(format!("branch sign must be +1 or -1, got `{s}`")),
    }
}

/// Exit status and the text destined for each stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Usage(String),
    Input(Error),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::Malformed(_) => Failure::Input(e),
            _ => Failure::Domain(e),
        }
    }
}

fn error_json(e: &Error) -> Value {
    json::object(vec![
        ("error_kind", Value::from(e.kind())),
        ("location", e.location().map(Value::from).unwrap_or(Value::Null)),
        ("message", Value::from(e.root().to_string())),
    ])
}

/// Parses `args` (program name first) and runs the verb.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    match dispatch(cli.verb) {
        Ok(v) => Outcome {
            code: 0,
            stdout: format!("{v}\n"),
            stderr: String::new(),
        },
        Err(Failure::Usage(msg)) => Outcome {
            code: 1,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
        Err(Failure::Input(e)) => Outcome {
            code: 1,
            stdout: format!("{}\n", error_json(&e)),
            stderr: String::new(),
        },
        Err(Failure::Domain(e)) => Outcome {
            code: 2,
            stdout: format!("{}\n", error_json(&e)),
            stderr: String::new(),
        },
    }
}

fn load(input: &Input) -> Result<Value, Failure> {
    let text = match (&input.input, &input.json) {
        (Some(path), _) => fs::read_to_string(path)
            .map_err(|e| Failure::Input(Error::Malformed(format!("cannot read {}: {e}", path.display()))))?,
        (None, Some(text)) => text.clone(),
        (None, None) => return Err(Failure::Usage("pass the document with --input or --json".into())),
    };
    serde_json::from_str(&text).map_err(|e| Failure::Input(Error::Malformed(format!("invalid JSON: {e}"))))
}

fn matrix(doc: &Value) -> Result<SuperMatrix, Error> {
    SuperMatrix::from_json(doc, num_generators_of(doc)?)
}

fn series(doc: &Value) -> Result<SuperSeries, Error> {
    SuperSeries::from_json(doc, num_generators_of(doc)?)
}

fn dispatch(verb: Verb) -> Result<Value, Failure> {
    match verb {
        Verb::Ber(input) => {
            let m = matrix(&load(&input)?)?;
            Ok(json::object(vec![("ber", element_to_json(&m.berezinian()?))]))
        }
        Verb::Leftinv { input, seed } => {
            let m = matrix(&load(&input)?)?;
            let l = match seed {
                None => m.left_inverse()?,
                Some(s) => m.left_inverse_randomized(s)?,
            };
            Ok(json::object(vec![("left_inverse", l.to_json())]))
        }
        Verb::Residue(input) => residue(&load(&input)?).map_err(Failure::from),
        Verb::Alpha(input) => {
            let parts = ss::alpha(&series(&load(&input)?)?)?;
            Ok(json::object(vec![
                ("dtheta_part", parts.dtheta_part.to_json()),
                ("varpi_part", parts.varpi_part.to_json()),
            ]))
        }
        Verb::CheckSuperconformal {
            input,
            seed,
            trunc_order,
            branch_sign,
            num_generators,
        } => {
            if trunc_order < 1 {
                return Err(Failure::Usage("--trunc-order must be at least 1".into()));
            }
            let change = match (seed, input.input.is_some() || input.json.is_some()) {
                (Some(_), true) => return Err(Failure::Usage("give either an input or --seed, not both".into())),
                (Some(s), false) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    sc::random_ramond(&mut rng, num_generators, trunc_order, branch_sign)
                }
                (None, _) => {
                    let doc = load(&input)?;
                    let c = CoordinateChange::from_json(&doc, num_generators_of(&doc)?, branch_sign)?;
                    cap(c, trunc_order)?
                }
            };
            Ok(report(&change))
        }
        Verb::Ranks { family, g, nr } => ranks(family, g, nr),
        Verb::Mumford {
            family,
            input,
            punctured,
            left_inverse_seed,
        } => {
            let doc = load(&input)?;
            let choice = left_inverse_seed.map_or(InverseChoice::Canonical, InverseChoice::Seeded);
            let out = match family {
                Family::Ramond if punctured => {
                    return Err(Failure::Usage("--punctured applies to the NS family only".into()))
                }
                Family::Ramond => mumford::mumford_ramond_with(&RamondInput::from_json(&doc)?, choice)?,
                Family::Ns => {
                    let inp = NsInput::from_json(&doc)?;
                    if punctured {
                        mumford::mumford_ns_punctured_with(&inp, choice)?
                    } else {
                        mumford::mumford_ns_with(&inp, choice)?
                    }
                }
            };
            Ok(out.to_json())
        }
        Verb::Validate { family, input } => {
            let doc = load(&input)?;
            let family = match family {
                Some(f) => f,
                None => match doc.get("family").and_then(Value::as_str) {
                    Some("ramond") => Family::Ramond,
                    Some("ns") => Family::Ns,
                    _ => return Err(Failure::Usage("name the family, or set `family` in the document".into())),
                },
            };
            let sizes = match family {
                Family::Ramond => {
                    let s = RamondInput::from_json(&doc)?.validate()?;
                    serde_json::json!({
                        "r": s.r, "xi": s.xi, "phi": s.phi, "sigma": s.sigma,
                        "tau": s.tau, "eta": s.eta, "psi": s.psi,
                    })
                }
                Family::Ns => {
                    let inp = NsInput::from_json(&doc)?;
                    let s = inp.validate()?;
                    serde_json::json!({
                        "points": s.points, "phi": s.phi, "chi": s.chi, "psi": s.psi,
                        "sigma": s.sigma, "rho": s.rho, "n_NS": inp.n_ns,
                    })
                }
            };
            Ok(json::object(vec![
                ("valid", Value::Bool(true)),
                ("family", Value::from(family.name())),
                ("sizes", sizes),
            ]))
        }
    }
}

fn residue(doc: &Value) -> Result<Value, Error> {
    let n = num_generators_of(doc)?;
    let value = match doc.get("series") {
        None => ss::residue(&SuperSeries::from_json(doc, n)?)?,
        Some(s) => {
            let point = |name: &str| match doc.get(name) {
                None => Ok(Grassmann::zero(n)),
                Some(v) => json::element_from_json(v, n),
            };
            ss::residue_simple_pole(&SuperSeries::from_json(s, n)?, &point("z0")?, &point("theta0")?)?
        }
    };
    Ok(json::object(vec![("residue", element_to_json(&value))]))
}

/// Forgets everything above `trunc` in each of the four series.
fn cap(c: CoordinateChange, trunc: i64) -> Result<CoordinateChange, Error> {
    if c.trunc_order() <= trunc {
        return Ok(c);
    }
    CoordinateChange::new(
        c.f().truncate(trunc),
        c.lambda().truncate(trunc),
        c.psi().truncate(trunc),
        c.g().truncate(trunc),
    )
}

fn report(c: &CoordinateChange) -> Value {
    let constraints = match sc::ramond_boundary_constraints(c) {
        Ok((g0sq, lp)) => json::object(vec![
            ("g0_squared", element_to_json(&g0sq)),
            ("lambda1_psi0", element_to_json(&lp)),
        ]),
        Err(_) => Value::Null,
    };
    let quotient_ber = sc::quotient_change_matrix(c)
        .and_then(|m| m.berezinian())
        .map(|b| element_to_json(&b))
        .unwrap_or(Value::Null);
    json::object(vec![
        ("change", c.to_json()),
        ("superconformal", Value::Bool(sc::is_superconformal(c))),
        ("ramond_superconformal", Value::Bool(sc::is_ramond_superconformal(c))),
        ("constraints", constraints),
        ("quotient_ber", quotient_ber),
    ])
}

fn ranks(family: Family, g: i64, nr: Option<i64>) -> Result<Value, Failure> {
    let (table, mut head) = match (family, nr) {
        (Family::Ramond, None) => return Err(Failure::Usage("the Ramond table needs --nr".into())),
        (Family::Ramond, Some(n)) => (
            ramond_table(g, n)?,
            vec![("n_R", Value::from(n)), ("r", Value::from(r_value(g, n)?))],
        ),
        (Family::Ns, None) => (ns_table(g)?, vec![]),
        (Family::Ns, Some(_)) => return Err(Failure::Usage("--nr applies to the Ramond family only".into())),
    };
    let ranks = table
        .into_iter()
        .map(|(j, i, p)| (format!("j={j}, i={i}"), serde_json::json!([p.even, p.odd])))
        .collect::<serde_json::Map<_, _>>();
    head.extend([
        ("family", Value::from(family.name())),
        ("g", Value::from(g)),
        ("ranks", Value::Object(ranks)),
    ]);
    Ok(json::object(head))
}
