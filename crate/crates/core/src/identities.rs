//! The algebraic identity battery: norm identity, Plücker relation, and
//! DSL round-trips over fixed and random maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dsl::{parse_map, parse_real};
use crate::mapcore::{gauss_components, norm_defect_of, plucker_relation_defect, MapR4R2};
use crate::poly::{Exponent, Poly4};
use crate::sphere::Vec4;

pub const IDENTITY_TOLERANCE: f64 = 1e-9;

pub const BATTERY: [&str; 6] = [
    "F = z*w",
    "F = z*conj(w)",
    "F = z^2 - w^3",
    "F = z^3 - w^4",
    "f = x; g = y",
    "f = x*u - y*v + x^3; g = x*v + y*u - u*v^2",
];

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IdentityRow {
    pub map: String,
    pub check: &'static str,
    pub value: f64,
    pub pass: bool,
}

/// Deliberate defects for exercising the failure path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Computes the Gauss triples from a slightly perturbed `f`.
    PerturbTriples,
}

fn monomials_up_to(max_degree: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    for a in 0..=max_degree {
        for b in 0..=max_degree - a {
            for c in 0..=max_degree - a - b {
                for d in 0..=max_degree - a - b - c {
                    if a + b + c + d > 0 {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

fn random_poly<R: Rng>(rng: &mut R, monomials: &[Exponent]) -> Poly4 {
    let mut terms = Vec::new();
    for e in monomials {
        if rng.gen_bool(0.4) {
            terms.push((rng.gen_range(-3i32..=3) as f64, *e));
        }
    }
    Poly4::from_terms(terms)
}

/// A map with small integer coefficients, zero constant term and degree at
/// most `max_degree`.
pub fn random_map<R: Rng>(rng: &mut R, max_degree: u32) -> MapR4R2 {
    let monomials = monomials_up_to(max_degree);
    let f = random_poly(rng, &monomials);
    let g = random_poly(rng, &monomials);
    let text = format!("f = {f}; g = {g}");
    MapR4R2::new(f, g, text).expect("no constant term")
}

/// Uniform points in the unit ball of ℝ⁴.
pub fn random_ball_points<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec4> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p: Vec4 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        if p.iter().map(|t| t * t).sum::<f64>() <= 1.0 {
            out.push(p);
        }
    }
    out
}

fn rows_for(map: &MapR4R2, label: &str, points: &[Vec4], fault: Option<Fault>) -> Vec<IdentityRow> {
    let comps = match fault {
        Some(Fault::PerturbTriples) => {
            let bumped = map.f() + &Poly4::monomial(1e-3, [1, 1, 0, 0]);
            let m = MapR4R2::new(bumped, map.g().clone(), "").expect("no constant term");
            gauss_components(&m)
        }
        None => gauss_components(map),
    };
    let norm = norm_defect_of(&comps, map, points);
    let rel = plucker_relation_defect(map, points).relative;
    let round_trip = parse_real(&map.to_string()).is_ok_and(|m| m.same_map(map));
    vec![
        IdentityRow {
            map: label.to_string(),
            check: "norm-identity",
            value: norm,
            pass: norm < IDENTITY_TOLERANCE,
        },
        IdentityRow {
            map: label.to_string(),
            check: "plucker-relation",
            value: rel,
            pass: rel < IDENTITY_TOLERANCE,
        },
        IdentityRow {
            map: label.to_string(),
            check: "dsl-round-trip",
            value: if round_trip { 0.0 } else { 1.0 },
            pass: round_trip,
        },
    ]
}

/// Runs the battery on [`BATTERY`] plus `n_random` random maps of degree at
/// most 3, each at `points_per_map` random points of the unit ball.
pub fn identity_suite(n_random: usize, seed: u64, points_per_map: usize, fault: Option<Fault>) -> Vec<IdentityRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for src in BATTERY {
        let map = parse_map(src).expect("battery maps parse").map;
        let pts = random_ball_points(&mut rng, points_per_map);
        rows.extend(rows_for(&map, src, &pts, fault));
    }
    for k in 0..n_random {
        let map = random_map(&mut rng, 3);
        let pts = random_ball_points(&mut rng, points_per_map);
        rows.extend(rows_for(&map, &format!("random #{k}"), &pts, fault));
    }
    rows
}
