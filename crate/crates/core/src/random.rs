//! Seeded random elements, used by the randomized left inverse and by test
//! fixtures.

use rand::Rng;

use crate::grassmann::{int, rat, Grassmann, Parity};

/// Random element of the given parity with small integer-over-small-integer
/// coefficients. `max_terms` bounds the number of monomials drawn.
pub fn random_element<R: Rng>(rng: &mut R, n: usize, parity: Parity, max_terms: usize) -> Grassmann {
    let mut out = Grassmann::zero(n);
    let terms = rng.gen_range(0..=max_terms);
    for _ in 0..terms {
        let mut gens = Vec::new();
        for g in 0..n {
            if rng.gen_bool(0.4) {
                gens.push(g);
            }
        }
        let wanted = match parity {
            Parity::Even => 0,
            Parity::Odd => 1,
        };
        if gens.len() % 2 != wanted {
            if n == 0 {
                continue;
            }
            let g = rng.gen_range(0..n);
            match gens.iter().position(|&x| x == g) {
                Some(pos) => {
                    gens.remove(pos);
                }
                None => {
                    gens.push(g);
                    gens.sort_unstable();
                }
            }
        }
        let coeff = rat(rng.gen_range(-4..=4), rng.gen_range(1..=3));
        let term = Grassmann::from_terms(n, [(gens, coeff)]).expect("indices are in range");
        out = &out + &term;
    }
    out
}

/// Random even element whose body is a nonzero rational.
pub fn random_unit<R: Rng>(rng: &mut R, n: usize, max_terms: usize) -> Grassmann {
    let mut body = 0;
    while body == 0 {
        body = rng.gen_range(-3..=3);
    }
    let soul = random_element(rng, n, Parity::Even, max_terms).soul();
    &Grassmann::scalar(n, int(body)) + &soul
}
