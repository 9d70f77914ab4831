//! Random logistics problems of growing size.
//!
//! Each city is a star: its last location is the airport and every other
//! location is two-way adjacent to it. Airports are adjacent to each other.
//! A static `route` table gives the next hop from any location towards any
//! other, so `deliver` never loops. One truck per city starts at the
//! city's first location; the plane starts at the airport of the first
//! box's city.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const ROUTING_DOMAIN: &str = include_str!("../fixtures/logistics-routing.htd");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub boxes: usize,
    pub cities: usize,
    pub locs_per_city: usize,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("a single location leaves nowhere to deliver to")]
    OneLocation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub domain: String,
    pub problem: String,
}

fn loc(city: usize, i: usize, per: usize) -> String {
    format!("l{}", city * per + i + 1)
}

/// Domain and problem texts for `spec`. The same spec always gives the
/// same bytes.
pub fn gen_logistics(spec: GenSpec) -> Result<Generated, GenError> {
    let GenSpec { boxes, cities, locs_per_city: per, seed } = spec;
    for (n, name) in [(boxes, "boxes"), (cities, "cities"), (per, "locations per city")] {
        if n == 0 {
            return Err(GenError::Zero(name));
        }
    }
    if cities * per < 2 {
        return Err(GenError::OneLocation);
    }
    let airport = |c: usize| loc(c, per - 1, per);
    let city_of = |l: usize| l / per;
    let is_airport = |l: usize| l % per == per - 1;
    let n = cities * per;

    let mut init: Vec<String> = Vec::new();
    for c in 0..cities {
        for i in 0..per {
            init.push(format!("(in-city {} c{})", loc(c, i, per), c + 1));
        }
    }
    for c in 0..cities {
        for d in 0..cities {
            let rel = if c == d { "same-city" } else { "different-city" };
            init.push(format!("({rel} c{} c{})", c + 1, d + 1));
        }
    }
    for c in 0..cities {
        for i in 0..per - 1 {
            init.push(format!("(adjacent {} {})", loc(c, i, per), airport(c)));
            init.push(format!("(adjacent {} {})", airport(c), loc(c, i, per)));
        }
        for d in (0..cities).filter(|d| *d != c) {
            init.push(format!("(adjacent {} {})", airport(c), airport(d)));
        }
    }
    // next hop from a to b
    for a in 0..n {
        for b in (0..n).filter(|b| *b != a) {
            let (ca, cb) = (city_of(a), city_of(b));
            let next = if ca == cb {
                if is_airport(a) || is_airport(b) {
                    b
                } else {
                    ca * per + per - 1
                }
            } else if is_airport(a) {
                cb * per + per - 1
            } else {
                ca * per + per - 1
            };
            init.push(format!("(route l{} l{} l{})", a + 1, b + 1, next + 1));
        }
    }
    for c in 0..cities {
        init.push(format!("(truck-at t{} {})", c + 1, loc(c, 0, per)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trips: Vec<(usize, usize)> = (0..boxes)
        .map(|_| {
            let from = rng.gen_range(0..n);
            let to = rng.gen_range(0..n - 1);
            (from, if to >= from { to + 1 } else { to })
        })
        .collect();
    init.push(format!("(plane-at p1 {})", airport(city_of(trips[0].0))));
    let mut goals = Vec::new();
    for (k, (from, to)) in trips.iter().enumerate() {
        init.push(format!("(box-at b{} l{})", k + 1, from + 1));
        goals.push(format!("(g{} (deliver b{} l{} l{}))", k + 1, k + 1, from + 1, to + 1));
    }

    let mut problem = format!(
        "(define (problem logistics-b{boxes}-c{cities}-l{per}-s{seed})\n  (:domain logistics-routing)\n  (:init"
    );
    for f in &init {
        let _ = write!(problem, "\n    {f}");
    }
    problem.push_str(")\n  (:network\n    (:tasks");
    for g in &goals {
        let _ = write!(problem, "\n      {g}");
    }
    problem.push(')');
    if boxes > 1 {
        let chain: Vec<String> = (1..=boxes).map(|k| format!("g{k}")).collect();
        let _ = write!(problem, "\n    (:order ({}))", chain.join(" "));
    }
    problem.push_str("))\n");
    Ok(Generated { domain: ROUTING_DOMAIN.to_owned(), problem })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let spec = GenSpec { boxes: 3, cities: 2, locs_per_city: 3, seed: 11 };
        assert_eq!(gen_logistics(spec).unwrap(), gen_logistics(spec).unwrap());
        let other = gen_logistics(GenSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(gen_logistics(spec).unwrap().problem, other.problem);
    }

    #[test]
    fn zero_counts_are_rejected() {
        let spec = GenSpec { boxes: 0, cities: 1, locs_per_city: 2, seed: 1 };
        assert_eq!(gen_logistics(spec), Err(GenError::Zero("boxes")));
        assert_eq!(gen_logistics(GenSpec { boxes: 1, locs_per_city: 1, ..spec }), Err(GenError::OneLocation));
    }
}
