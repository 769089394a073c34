//! Ranks `even | odd` of the direct images `R^i π_* ω^j`.
//!
//! Both families obey `R¹π_*ω^j ≅ (π_*ω^{1−j})^*` with the parity of each
//! summand preserved, which is how the `i = 1` columns below arise.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RankPair {
    pub even: usize,
    pub odd: usize,
}

impl RankPair {
    pub const fn new(even: usize, odd: usize) -> Self {
        RankPair { even, odd }
    }

    pub fn total(&self) -> usize {
        self.even + self.odd
    }
}

impl fmt::Display for RankPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {}", self.even, self.odd)
    }
}

pub const RAMOND_J: std::ops::RangeInclusive<i64> = -2..=1;
pub const NS_J: std::ops::RangeInclusive<i64> = -1..=3;

fn check_ramond(g: i64, n_r: i64) -> Result<()> {
    if g < 2 {
        return Err(Error::PreconditionViolated(format!("genus must be at least 2, got {g}")));
    }
    if n_r < 0 || n_r % 2 != 0 {
        return Err(Error::PreconditionViolated(format!(
            "number of Ramond punctures must be even and nonnegative, got {n_r}"
        )));
    }
    if n_r <= 6 * g - 6 {
        return Err(Error::PreconditionViolated(format!(
            "need n_R > 6g - 6 = {}, got {n_r}",
            6 * g - 6
        )));
    }
    Ok(())
}

fn pair(even: i64, odd: i64) -> RankPair {
    RankPair::new(even as usize, odd as usize)
}

/// `π_*ω^j` for `i = 0`, `R¹π_*ω^j` for `i = 1`, with `n_R` Ramond punctures.
pub fn ramond_rank(g: i64, n_r: i64, j: i64, i: u8) -> Result<RankPair> {
    check_ramond(g, n_r)?;
    let h = n_r / 2;
    let rank = match (i, j) {
        (0, -2) => pair(n_r + 3 - 3 * g, 3 * h + 2 - 2 * g),
        (0, -1) => pair(n_r + 1 - g, h + 2 - 2 * g),
        (0, 0) => pair(1, h),
        (0, 1) => pair(g, 0),
        (1, -2) | (1, -1) => pair(0, 0),
        (1, 0) => pair(g, 0),
        (1, 1) => pair(1, h),
        _ => {
            return Err(Error::PreconditionViolated(format!(
                "no Ramond rank tabulated for j = {j}, i = {i}"
            )))
        }
    };
    Ok(rank)
}

/// Ranks for an unpunctured family with an odd spin structure.
///
/// The `i = 1` values are derived from the `i = 0` statements by duality
/// rather than tabulated.
pub fn ns_rank(g: i64, j: i64, i: u8) -> Result<RankPair> {
    if g < 2 {
        return Err(Error::PreconditionViolated(format!("genus must be at least 2, got {g}")));
    }
    let direct = |j: i64| -> Option<RankPair> {
        Some(match j {
            -1 => pair(1, 0),
            0 => pair(1, 1),
            1 => pair(g, 1),
            2 => pair(g, 2 * g - 2),
            3 => pair(3 * g - 3, 2 * g - 2),
            // ω^{−2} has no sections: its summands have degree 2 − 2g and 1 − g
            -2 => pair(0, 0),
            _ => return None,
        })
    };
    let out_of_range = || Error::PreconditionViolated(format!("no NS rank tabulated for j = {j}, i = {i}"));
    if !NS_J.contains(&j) {
        return Err(out_of_range());
    }
    match i {
        0 => direct(j).ok_or_else(out_of_range),
        1 => direct(1 - j).ok_or_else(out_of_range),
        _ => Err(out_of_range()),
    }
}

/// `r = n_R/2 − g + 1`, the number of zeros of the distinguished section `t′`.
pub fn r_value(g: i64, n_r: i64) -> Result<i64> {
    if n_r % 2 != 0 {
        return Err(Error::PreconditionViolated(format!("n_R must be even, got {n_r}")));
    }
    Ok(n_r / 2 - g + 1)
}

pub fn ramond_table(g: i64, n_r: i64) -> Result<Vec<(i64, u8, RankPair)>> {
    let mut out = Vec::new();
    for j in RAMOND_J {
        for i in 0..=1 {
            out.push((j, i, ramond_rank(g, n_r, j, i)?));
        }
    }
    Ok(out)
}

pub fn ns_table(g: i64) -> Result<Vec<(i64, u8, RankPair)>> {
    let mut out = Vec::new();
    for j in NS_J {
        for i in 0..=1 {
            out.push((j, i, ns_rank(g, j, i)?));
        }
    }
    Ok(out)
}
