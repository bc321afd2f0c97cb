//! Deterministic drivers, characters, and rules shared by tests, the
//! acceptance gate, and the command line. Everything here is seed-fixed or
//! written out in closed form so reruns are byte-reproducible.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::renorm::{root_extraction_rule, BphzCharacter, LocalRule};
use crate::rough_paths::{DriverPath, Polynomial};
use crate::scalar::{q, q_int, Q};
use crate::trees::{chain2, chain3, dot, Decoration, Tree};

pub const TRUNC_DEFAULT: u32 = 4;
pub const DEC_DEFAULT: Decoration = 1;
pub const DEPTH_DEFAULT: u32 = 6;
/// Tolerance for float-mode identity checks.
pub const FLOAT_TOL: f64 = 1e-10;
/// Seeds for the random counterterm characters.
pub const BPHZ_SEEDS: [u64; 3] = [11, 23, 47];

/// 6/25: the largest regularity with floor(1/gamma) = 4 kept exactly
/// rational and non-resonant.
pub fn gamma_default() -> Q {
    q(6, 25)
}

/// Two-branch cherry with all decorations 1.
pub fn cherry() -> Tree {
    Tree::node(1, vec![dot(1), dot(1)])
}

/// 4-chain with all decorations 1.
pub fn chain4() -> Tree {
    Tree::node(1, vec![chain3(1, 1, 1)])
}

/// x^0 = t, x^1 = t^2.
pub fn poly_driver_one(depth: u32) -> Result<DriverPath<Q>> {
    DriverPath::from_global_polys(
        depth,
        vec![
            Polynomial::linear(q_int(0), q_int(1)),
            Polynomial::from_coeffs(vec![q_int(0), q_int(0), q_int(1)]),
        ],
    )
}

/// x^0 = t, x^1 = t^3/3 - t/2; the rough component changes direction
/// inside [0, 1].
pub fn poly_driver_two(depth: u32) -> Result<DriverPath<Q>> {
    DriverPath::from_global_polys(
        depth,
        vec![
            Polynomial::linear(q_int(0), q_int(1)),
            Polynomial::from_coeffs(vec![q_int(0), q(-1, 2), q_int(0), q(1, 3)]),
        ],
    )
}

/// Every component equal to t.
pub fn all_t_driver(depth: u32) -> Result<DriverPath<Q>> {
    let t = Polynomial::linear(q_int(0), q_int(1));
    DriverPath::from_global_polys(depth, vec![t.clone(), t])
}

/// Seed-fixed piecewise-linear walk: component 0 is t, component 1 a
/// uniform-increment walk scaled to the grid cell square root.
pub fn walk_driver(depth: u32, seed: u64) -> Result<DriverPath<f64>> {
    let points = (1usize << depth) + 1;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = 1.0 / f64::powf(2.0, depth as f64 / 2.0);
    let time: Vec<f64> = (0..points).map(|k| k as f64 / (1u64 << depth) as f64).collect();
    let mut walk = Vec::with_capacity(points);
    let mut acc = 0.0;
    walk.push(acc);
    for _ in 1..points {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        acc += (2.0 * u - 1.0) * scale;
        walk.push(acc);
    }
    DriverPath::piecewise_linear(depth, vec![time, walk])
}

/// The three seed-fixed counterterm characters of the acceptance family.
pub fn random_characters(trunc: u32, d: Decoration) -> Result<Vec<BphzCharacter>> {
    BPHZ_SEEDS.iter().map(|s| BphzCharacter::random(trunc, d, *s)).collect()
}

/// Hand rule with a value on the single node, which forces the loosened
/// tie mode (the root redecoration keeps the node count).
pub fn hand_rule_loosened(gamma: &Q) -> Result<LocalRule> {
    let values: BTreeMap<Tree, Q> = vec![
        (dot(1), q(1, 2)),
        (chain2(1, 1), q(-1, 3)),
        (cherry(), q(1, 5)),
        (chain4(), q(-1, 7)),
    ]
    .into_iter()
    .collect();
    let v = BphzCharacter::new(TRUNC_DEFAULT, DEC_DEFAULT, values)?;
    root_extraction_rule(&v, gamma)
}

/// Hand rule supported on sizes >= 2 only; every correction strictly drops
/// the node count, so the strict mode applies.
pub fn hand_rule_strict(gamma: &Q) -> Result<LocalRule> {
    let values: BTreeMap<Tree, Q> = vec![
        (chain2(1, 1), q(1, 2)),
        (cherry(), q(-1, 3)),
        (chain3(1, 1, 1), q(1, 7)),
    ]
    .into_iter()
    .collect();
    let v = BphzCharacter::new(TRUNC_DEFAULT, DEC_DEFAULT, values)?;
    root_extraction_rule(&v, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough_paths::BranchedRP;

    #[test]
    fn drivers_are_reproducible_and_liftable() {
        let a = walk_driver(3, 7).unwrap();
        let b = walk_driver(3, 7).unwrap();
        for k in 0..a.n_points() {
            assert_eq!(a.value(1, k), b.value(1, k));
        }
        let g = gamma_default();
        for x in [poly_driver_one(3).unwrap(), poly_driver_two(3).unwrap()] {
            let lift = BranchedRP::canonical_lift(&x, 3, &g).unwrap();
            assert!(lift.check_chen().exact);
        }
    }

    #[test]
    fn hand_rules_have_the_advertised_modes() {
        let g = gamma_default();
        assert!(!hand_rule_loosened(&g).unwrap().is_strict());
        assert!(hand_rule_strict(&g).unwrap().is_strict());
    }

    #[test]
    fn seeded_characters_are_distinct() {
        let chars = random_characters(TRUNC_DEFAULT, DEC_DEFAULT).unwrap();
        assert_eq!(chars.len(), 3);
        assert_ne!(chars[0], chars[1]);
        assert_ne!(chars[1], chars[2]);
    }
}
