//! The release gate: one self-contained suite per verified claim, each
//! returning a pass/fail report with a localized counterexample on failure.
//! Tolerances are pinned here; exact lanes require literal zero. Internal
//! errors never escape, they fail the owning suite instead.

use crate::error::Result;
use crate::forest_hopf::{
    antipode_forest, comb_product, coproduct_forest, coproduct_tree, tensor_product,
    unit_comb, ForestComb, Tensor3Comb, TensorComb,
};
use crate::grossman_larson::{
    check_commute_against, check_commute_iso, compute_basis, iso_psi, iso_psi_inverse,
    tilde_map,
};
use crate::oracle::coproduct_by_cuts;
use crate::renorm::{
    accept, bar_map, bphz_map, check_analytic_condition,
    check_cointeraction as check_map_cointeraction, check_local_pair, local_map,
    psi_commute_defect, BphzCharacter, RenormMatrix,
};
use crate::rough_paths::BranchedRP;
use crate::scalar::{q, q_int, Q, Scalar};
use crate::suites::{
    gamma_default, hand_rule_loosened, hand_rule_strict, poly_driver_one, poly_driver_two,
    random_characters, walk_driver, BPHZ_SEEDS, DEC_DEFAULT, DEPTH_DEFAULT, FLOAT_TOL,
    TRUNC_DEFAULT,
};
use crate::transfer::{
    branched_to_anisotropic, g_action, g_from_renorm_explicit, g_from_renorm_recursive,
    transfer_identity_defect, GFamily,
};
use crate::trees::{chain2, dot, enumerate_forests, enumerate_trees, Forest, Tree};
use crate::word_hopf::Word;
use std::collections::BTreeMap;

/// Truncation of the isomorphism suite; the basis is cubic in the dual
/// dimension, so it runs one level below the transfer scale.
pub const ISO_TRUNC: u32 = 3;

/// Outcome of one suite.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({"name": self.name, "pass": self.pass, "detail": self.detail})
    }
}

fn guarded(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> CheckReport {
    match body() {
        Ok((pass, detail)) => CheckReport { name, pass, detail },
        Err(e) => CheckReport { name, pass: false, detail: format!("error: {e}") },
    }
}

/// Suite names in execution order.
pub const SUITE_NAMES: [&str; 9] = [
    "hopf-axioms",
    "cointeraction",
    "renorm-family",
    "word-map-square",
    "transfer-identity",
    "g-formulas",
    "holder-action",
    "word-iso",
    "mutation-sensitivity",
];

/// Runs every suite in order.
pub fn run_all() -> Vec<CheckReport> {
    SUITE_NAMES.iter().map(|n| run_suite(n).expect("listed suite")).collect()
}

/// Runs one suite by name.
pub fn run_suite(name: &str) -> Result<CheckReport> {
    match name {
        "hopf-axioms" => Ok(check_hopf_axioms()),
        "cointeraction" => Ok(check_cointeraction_suite()),
        "renorm-family" => Ok(check_renorm_family()),
        "word-map-square" => Ok(check_word_map_square()),
        "transfer-identity" => Ok(check_transfer_identity()),
        "g-formulas" => Ok(check_g_formulas()),
        "holder-action" => Ok(check_holder_action()),
        "word-iso" => Ok(check_word_iso()),
        "mutation-sensitivity" => Ok(check_mutation_sensitivity()),
        other => Err(crate::error::Error::Config {
            message: format!("unknown suite `{other}`; known: {}", SUITE_NAMES.join(", ")),
        }),
    }
}

pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// Machine-readable report for the whole gate.
pub fn reports_to_json(reports: &[CheckReport]) -> String {
    let rows: Vec<serde_json::Value> = reports.iter().map(CheckReport::to_json_value).collect();
    let doc = serde_json::json!({"pass": all_pass(reports), "checks": rows});
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
    text.push('\n');
    text
}

/// Both triple tensors obtained by splitting either slot of an already
/// split element; zero exactly when the splitting is coassociative.
fn coassociativity_defect(top: &TensorComb) -> Tensor3Comb {
    let mut left3 = Tensor3Comb::zero();
    let mut right3 = Tensor3Comb::zero();
    for ((l, r), c) in top.iter() {
        for ((a, b), c2) in coproduct_forest(l).iter() {
            left3.add_term((a.clone(), b.clone(), r.clone()), c * c2);
        }
        for ((a, b), c2) in coproduct_forest(r).iter() {
            right3.add_term((l.clone(), a.clone(), b.clone()), c * c2);
        }
    }
    left3.sub(&right3)
}

/// Coassociativity, the antipode identities, multiplicativity of the
/// coproduct, and the cut-enumeration oracle, all exact within 4 nodes.
pub fn check_hopf_axioms() -> CheckReport {
    guarded("hopf-axioms", || {
        let forests = enumerate_forests(TRUNC_DEFAULT, DEC_DEFAULT)?;
        for f in &forests {
            let delta = coproduct_forest(f);
            if !coassociativity_defect(&delta).is_zero() {
                return Ok((false, format!("coassociativity fails on {f}")));
            }
            let mut conv_left = ForestComb::zero();
            let mut conv_right = ForestComb::zero();
            for ((l, r), c) in delta.iter() {
                conv_left
                    .add_scaled(&comb_product(&antipode_forest(l), &ForestComb::basis(r.clone())), c);
                conv_right
                    .add_scaled(&comb_product(&ForestComb::basis(l.clone()), &antipode_forest(r)), c);
            }
            let expected = if f.is_empty() { unit_comb() } else { ForestComb::zero() };
            if conv_left != expected || conv_right != expected {
                return Ok((false, format!("antipode identity fails on {f}")));
            }
        }
        let mut products = 0usize;
        for f in &forests {
            for g in &forests {
                if f.size() + g.size() > TRUNC_DEFAULT {
                    continue;
                }
                products += 1;
                let lhs = coproduct_forest(&f.product(g));
                let rhs = tensor_product(&coproduct_forest(f), &coproduct_forest(g));
                if !lhs.sub(&rhs).is_zero() {
                    return Ok((false, format!("coproduct not multiplicative on {f} and {g}")));
                }
            }
        }
        let trees = enumerate_trees(TRUNC_DEFAULT, DEC_DEFAULT)?;
        for t in &trees {
            if coproduct_by_cuts(t) != coproduct_tree(t) {
                return Ok((false, format!("cut oracle disagrees on {t}")));
            }
        }
        Ok((true, format!(
            "coassociativity, antipode, and multiplicativity exact on {} forests ({} products); cut oracle matches on {} trees",
            forests.len(),
            products,
            trees.len()
        )))
    })
}

/// Compatibility of the extraction coproduct with the splitting coproduct,
/// exact on trees within 3 nodes.
pub fn check_cointeraction_suite() -> CheckReport {
    guarded("cointeraction", || {
        match crate::forest_hopf::check_cointeraction(3, DEC_DEFAULT) {
            Ok(()) => {
                Ok((true, "extraction against splitting exact on all trees within 3 nodes".into()))
            }
            Err(e) => Ok((false, format!("{e}"))),
        }
    })
}

/// The acceptance family: identity, the three seeded counterterm maps, and
/// the two hand-written local rules' primary maps.
fn accepted_family(gamma: &Q) -> Result<Vec<(String, RenormMatrix)>> {
    let mut out = vec![(
        "identity".to_string(),
        RenormMatrix::identity(TRUNC_DEFAULT, DEC_DEFAULT)?,
    )];
    for (k, v) in random_characters(TRUNC_DEFAULT, DEC_DEFAULT)?.iter().enumerate() {
        out.push((format!("seeded-{}", BPHZ_SEEDS[k]), bphz_map(v)?));
    }
    let (loosened, _) = local_map(&hand_rule_loosened(gamma)?)?;
    out.push(("rule-loosened".to_string(), loosened));
    let (strict, _) = local_map(&hand_rule_strict(gamma)?)?;
    out.push(("rule-strict".to_string(), strict));
    Ok(out)
}

/// Every family member passes the full audit; the local rules additionally
/// satisfy the paired-map identities.
pub fn check_renorm_family() -> CheckReport {
    guarded("renorm-family", || {
        let gamma = gamma_default();
        let mut audited = 0usize;
        for (k, v) in random_characters(TRUNC_DEFAULT, DEC_DEFAULT)?.iter().enumerate() {
            let label = format!("seeded-{}", BPHZ_SEEDS[k]);
            let m = bphz_map(v)?;
            if let Err(e) = accept(&m, &gamma) {
                return Ok((false, format!("{label}: {e}")));
            }
            let co = check_map_cointeraction(&m, TRUNC_DEFAULT)?;
            if !co.ok {
                let at = co
                    .counterexample
                    .map(|(t, _)| t.to_string())
                    .unwrap_or_default();
                return Ok((false, format!("{label}: cointeraction fails at {at}")));
            }
            let an = check_analytic_condition(&m, &gamma)?;
            if !an.ok {
                let (t, term, why) = &an.witnesses[0];
                return Ok((false, format!("{label}: regularity fails at {t} -> {term}: {why}")));
            }
            audited += 1;
        }
        for (label, rule) in [
            ("rule-loosened", hand_rule_loosened(&gamma)?),
            ("rule-strict", hand_rule_strict(&gamma)?),
        ] {
            let (m, ring) = local_map(&rule)?;
            if let Err(e) = accept(&m, &gamma) {
                return Ok((false, format!("{label}: {e}")));
            }
            let an = check_analytic_condition(&m, &gamma)?;
            if !an.ok {
                let (t, term, why) = &an.witnesses[0];
                return Ok((false, format!("{label}: regularity fails at {t} -> {term}: {why}")));
            }
            let pair = check_local_pair(&m, &ring, TRUNC_DEFAULT)?;
            if !pair.gated_ok() {
                let at = pair
                    .counterexample
                    .map(|(t, _)| t.to_string())
                    .unwrap_or_default();
                return Ok((false, format!("{label}: paired-map identities fail at {at}")));
            }
            audited += 1;
        }
        Ok((true, format!(
            "{audited} maps pass the full audit within {TRUNC_DEFAULT} nodes; both local rules satisfy the paired-map identities"
        )))
    })
}

/// The word expansion commutes with every accepted map against its
/// letterwise companion, exact on trees within 3 nodes.
pub fn check_word_map_square() -> CheckReport {
    guarded("word-map-square", || {
        let gamma = gamma_default();
        let maps = accepted_family(&gamma)?;
        for (label, m) in &maps {
            let wm = bar_map(m, &gamma)?;
            if let Some((t, _)) = psi_commute_defect(m, &wm, 3)? {
                return Ok((false, format!("{label}: square fails at {t}")));
            }
        }
        Ok((true, format!(
            "{} accepted maps commute with the word expansion within 3 nodes",
            maps.len()
        )))
    })
}

/// Tree components of the lifted word path reproduce the branched values on
/// every grid pair; the lifted path itself satisfies Chen and the shuffle
/// character property.
pub fn check_transfer_identity() -> CheckReport {
    guarded("transfer-identity", || {
        let gamma = gamma_default();
        for (label, driver) in [
            ("poly-one", poly_driver_one(DEPTH_DEFAULT)?),
            ("poly-two", poly_driver_two(DEPTH_DEFAULT)?),
        ] {
            let x = BranchedRP::canonical_lift(&driver, TRUNC_DEFAULT, &gamma)?;
            let xbar = branched_to_anisotropic(&x, FLOAT_TOL)?;
            let (worst, exact) = transfer_identity_defect(&x, &xbar)?;
            if !exact {
                return Ok((false, format!("{label}: transfer defect {worst:.3e} not exactly zero")));
            }
            let chen = xbar.check_chen();
            if !chen.exact {
                return Ok((false, format!(
                    "{label}: word-side Chen defect {:.3e}",
                    chen.max_abs_defect
                )));
            }
            if let Some((a, b, (u, v), d)) = xbar.shuffle_defect(0.0) {
                return Ok((false, format!(
                    "{label}: shuffle defect {d:.3e} at ({a}, {b}) on {u} | {v}"
                )));
            }
        }
        for (k, seed) in BPHZ_SEEDS.iter().enumerate() {
            let x = BranchedRP::canonical_lift(&walk_driver(DEPTH_DEFAULT, *seed)?, TRUNC_DEFAULT, &gamma)?;
            let xbar = branched_to_anisotropic(&x, FLOAT_TOL)?;
            let (worst, _) = transfer_identity_defect(&x, &xbar)?;
            if worst > FLOAT_TOL {
                return Ok((false, format!(
                    "walk-{seed}: transfer defect {worst:.3e} above {FLOAT_TOL:.0e}"
                )));
            }
            if k == 0 {
                let chen = xbar.check_chen();
                if !chen.passes(FLOAT_TOL) {
                    return Ok((false, format!(
                        "walk-{seed}: word-side Chen defect {:.3e}",
                        chen.max_abs_defect
                    )));
                }
                if let Some((a, b, (u, v), d)) = xbar.shuffle_defect(FLOAT_TOL) {
                    return Ok((false, format!(
                        "walk-{seed}: shuffle defect {d:.3e} at ({a}, {b}) on {u} | {v}"
                    )));
                }
            }
        }
        Ok((true, format!(
            "identity exact on both closed-form drivers and within {FLOAT_TOL:.0e} on {} walks at depth {DEPTH_DEFAULT}; lifted words pass Chen and shuffle",
            BPHZ_SEEDS.len()
        )))
    })
}

/// Level-1 counterterm paths against their closed form
/// g(letter) = v(letter) * value(0, k, zero-decorated node).
fn level_one_defect<S: Scalar>(
    g: &GFamily<S>,
    v: &BphzCharacter,
    x: &BranchedRP<S>,
    tol: f64,
) -> Result<Option<String>> {
    for dec in 0..=x.dec_bound() {
        let letter = dot(dec);
        let factor = S::from_q(&v.eval_tree(&letter));
        for k in 0..x.n_points() {
            let want = factor.mul(&x.value_tree(0, k, &dot(0))?);
            let defect = g.value(&letter, k).sub(&want);
            let bad = if S::EXACT { !defect.is_zero() } else { defect.to_f64().abs() > tol };
            if bad {
                return Ok(Some(format!(
                    "level-1 closed form fails for {letter} at grid index {k}"
                )));
            }
        }
    }
    Ok(None)
}

/// The explicit counterterm family equals the recursive one entrywise, and
/// the single-node paths match their closed form.
pub fn check_g_formulas() -> CheckReport {
    guarded("g-formulas", || {
        let gamma = gamma_default();
        let chars = random_characters(TRUNC_DEFAULT, DEC_DEFAULT)?;
        let x1 = BranchedRP::canonical_lift(&poly_driver_one(DEPTH_DEFAULT)?, TRUNC_DEFAULT, &gamma)?;
        let x2 = BranchedRP::canonical_lift(&poly_driver_two(DEPTH_DEFAULT)?, TRUNC_DEFAULT, &gamma)?;
        let mut combos = Vec::new();
        for (k, v) in chars.iter().enumerate() {
            combos.push((format!("seeded-{} on poly-one", BPHZ_SEEDS[k]), v, &x1));
        }
        combos.push((format!("seeded-{} on poly-two", BPHZ_SEEDS[0]), &chars[0], &x2));
        for (label, v, x) in &combos {
            let m = bphz_map(v)?;
            let ge = g_from_renorm_explicit(&m, x, FLOAT_TOL)?;
            let gr = g_from_renorm_recursive(&m, x, FLOAT_TOL)?;
            let diff = ge.max_abs_diff(&gr);
            if diff != 0.0 {
                return Ok((false, format!(
                    "{label}: explicit and recursive families differ by {diff:.3e}"
                )));
            }
            if let Some(msg) = level_one_defect(&ge, v, x, 0.0)? {
                return Ok((false, format!("{label}: {msg}")));
            }
        }
        let xw = BranchedRP::canonical_lift(
            &walk_driver(DEPTH_DEFAULT, BPHZ_SEEDS[0])?,
            TRUNC_DEFAULT,
            &gamma,
        )?;
        let m = bphz_map(&chars[0])?;
        let ge = g_from_renorm_explicit(&m, &xw, FLOAT_TOL)?;
        let gr = g_from_renorm_recursive(&m, &xw, FLOAT_TOL)?;
        let diff = ge.max_abs_diff(&gr);
        if diff > FLOAT_TOL {
            return Ok((false, format!(
                "seeded-{} on walk-{}: families differ by {diff:.3e} above {FLOAT_TOL:.0e}",
                BPHZ_SEEDS[0], BPHZ_SEEDS[0]
            )));
        }
        if let Some(msg) = level_one_defect(&ge, &chars[0], &xw, FLOAT_TOL)? {
            return Ok((false, format!("walk lane: {msg}")));
        }
        Ok((true, format!(
            "explicit equals recursive on {} exact combinations and one walk within {FLOAT_TOL:.0e}; level-1 closed form reproduced",
            combos.len()
        )))
    })
}

/// Entrywise gap between two branched paths of the same shape.
fn branched_max_diff<S: Scalar>(a: &BranchedRP<S>, b: &BranchedRP<S>) -> Result<(f64, bool)> {
    let trees = enumerate_trees(a.trunc(), a.dec_bound())?;
    let points = a.n_points();
    let mut worst = 0.0f64;
    let mut exact = true;
    for s in 0..points {
        for t in s + 1..points {
            for tree in &trees {
                let d = a.value_tree(s, t, tree)?.sub(&b.value_tree(s, t, tree)?);
                if !d.is_zero() {
                    exact = false;
                }
                worst = worst.max(d.to_f64().abs());
            }
        }
    }
    Ok((worst, exact))
}

/// Acting by two counterterm families in sequence equals acting by their
/// sum, on the seed-fixed walks.
pub fn check_holder_action() -> CheckReport {
    guarded("holder-action", || {
        let gamma = gamma_default();
        let chars = random_characters(TRUNC_DEFAULT, DEC_DEFAULT)?;
        let m1 = bphz_map(&chars[0])?;
        let m2 = bphz_map(&chars[1])?;
        let mut worst_overall = 0.0f64;
        for seed in BPHZ_SEEDS {
            let x = BranchedRP::canonical_lift(
                &walk_driver(DEPTH_DEFAULT, seed)?,
                TRUNC_DEFAULT,
                &gamma,
            )?;
            let g1 = g_from_renorm_explicit(&m1, &x, FLOAT_TOL)?;
            let g2 = g_from_renorm_explicit(&m2, &x, FLOAT_TOL)?;
            let stepwise = g_action(&g2, &g_action(&g1, &x, FLOAT_TOL)?, FLOAT_TOL)?;
            let joint = g_action(&g1.add(&g2)?, &x, FLOAT_TOL)?;
            let (diff, _) = branched_max_diff(&stepwise, &joint)?;
            if diff > FLOAT_TOL {
                return Ok((false, format!(
                    "walk-{seed}: additivity defect {diff:.3e} above {FLOAT_TOL:.0e}"
                )));
            }
            worst_overall = worst_overall.max(diff);
        }
        Ok((true, format!(
            "additivity within {FLOAT_TOL:.0e} on {} walks (worst {worst_overall:.3e})",
            BPHZ_SEEDS.len()
        )))
    })
}

/// Maps accepted at the isomorphism truncation.
fn iso_family() -> Result<Vec<(String, RenormMatrix)>> {
    let mut out = vec![(
        "identity".to_string(),
        RenormMatrix::identity(ISO_TRUNC, DEC_DEFAULT)?,
    )];
    for seed in BPHZ_SEEDS {
        out.push((
            format!("seeded-{seed}"),
            bphz_map(&BphzCharacter::random(ISO_TRUNC, DEC_DEFAULT, seed)?)?,
        ));
    }
    let values: BTreeMap<Tree, Q> =
        [(dot(1), q(1, 2)), (chain2(1, 1), q(-1, 3))].into_iter().collect();
    out.push((
        "hand".to_string(),
        bphz_map(&BphzCharacter::new(ISO_TRUNC, DEC_DEFAULT, values)?)?,
    ));
    Ok(out)
}

/// The generator basis is certified, the word image of a lifted path passes
/// Chen and shuffle exactly and inverts back, and every accepted map
/// commutes with its word-side companion.
pub fn check_word_iso() -> CheckReport {
    guarded("word-iso", || {
        let gamma = gamma_default();
        let basis = compute_basis(ISO_TRUNC, DEC_DEFAULT)?;
        if basis.flagged() {
            return Ok((false, "fallback generators were required; the tree basis is incomplete".into()));
        }
        basis.audit()?;
        let counts = basis.generator_counts();
        let dims = basis.degree_dims();
        if counts != vec![2, 3, 6] || dims != vec![2, 7, 26] {
            return Ok((false, format!("unexpected basis profile: counts {counts:?}, dims {dims:?}")));
        }
        let mut lifts = Vec::new();
        for (label, driver) in [
            ("poly-one", poly_driver_one(DEPTH_DEFAULT)?),
            ("poly-two", poly_driver_two(DEPTH_DEFAULT)?),
        ] {
            let x = BranchedRP::canonical_lift(&driver, ISO_TRUNC, &gamma)?;
            let y = iso_psi(&x, &basis)?;
            let chen = y.check_chen();
            if !chen.exact {
                return Ok((false, format!(
                    "{label}: word-side Chen defect {:.3e}",
                    chen.max_abs_defect
                )));
            }
            if let Some((a, b, (u, v), d)) = y.shuffle_defect(0.0) {
                return Ok((false, format!(
                    "{label}: shuffle defect {d:.3e} at ({a}, {b}) on {u} | {v}"
                )));
            }
            let back: BranchedRP<Q> = iso_psi_inverse(&y, &basis, &gamma)?;
            let (diff, round_trip_exact) = branched_max_diff(&back, &x)?;
            if !round_trip_exact {
                return Ok((false, format!("{label}: round trip off by {diff:.3e}")));
            }
            lifts.push(x);
        }
        let family = iso_family()?;
        for (label, m) in &family {
            let report = check_commute_iso(m, &lifts[0], &basis)?;
            if !report.passes(0.0) {
                return Ok((false, format!(
                    "{label}: commutation defect {:.3e} over {} pairs",
                    report.max_abs_defect, report.pairs
                )));
            }
        }
        Ok((true, format!(
            "basis certified (counts {counts:?} against dims {dims:?}); word image passes Chen, shuffle, and round trip exactly; commutation exact for {} maps",
            family.len()
        )))
    })
}

/// Every suite's comparator detects a single tampered entry: the guard
/// against vacuous passes. Probes run at reduced scale.
pub fn check_mutation_sensitivity() -> CheckReport {
    guarded("mutation-sensitivity", || {
        let gamma = gamma_default();
        let mut caught: Vec<&str> = Vec::new();

        // A spurious splitting term trips the coassociativity comparator.
        let mut delta = coproduct_forest(&Forest::single(chain2(1, 1)));
        delta.add_term((Forest::single(dot(0)), Forest::empty()), q_int(1));
        if coassociativity_defect(&delta).is_zero() {
            return Ok((false, "tampered splitting kept coassociativity".into()));
        }
        caught.push("coassociativity");

        // A single matrix entry trips the map cointeraction check.
        let v = BphzCharacter::random(ISO_TRUNC, DEC_DEFAULT, BPHZ_SEEDS[0])?;
        let mut m_bad = bphz_map(&v)?;
        m_bad.perturb(&Forest::single(dot(0)), &Forest::single(chain2(1, 1)), &q(1, 7))?;
        if check_map_cointeraction(&m_bad, ISO_TRUNC)?.ok {
            return Ok((false, "tampered map kept its cointeraction".into()));
        }
        caught.push("map cointeraction");

        // A mismatched companion trips the word-map square.
        let m = bphz_map(&v)?;
        let wm = bar_map(&m, &gamma)?;
        let mut m_shift = bphz_map(&v)?;
        m_shift.perturb(&Forest::single(dot(1)), &Forest::single(chain2(1, 1)), &q(1, 5))?;
        if psi_commute_defect(&m_shift, &wm, ISO_TRUNC)?.is_none() {
            return Ok((false, "mismatched companion kept the word-map square".into()));
        }
        caught.push("word-map square");

        // A perturbed tree value trips the branched Chen sweep.
        let x = BranchedRP::canonical_lift(&poly_driver_one(2)?, ISO_TRUNC, &gamma)?;
        let mut x_bad = x.clone();
        x_bad.perturb(0, 2, &dot(1), &q(1, 9))?;
        if x_bad.check_chen().exact {
            return Ok((false, "perturbed branched path kept Chen".into()));
        }
        caught.push("branched Chen");

        // A perturbed word value trips the transfer identity.
        let xbar = branched_to_anisotropic(&x, FLOAT_TOL)?;
        let mut xbar_bad = xbar.clone();
        xbar_bad.perturb(0, 2, &Word::single(dot(1)), &q(1, 9))?;
        let (worst, exact) = transfer_identity_defect(&x, &xbar_bad)?;
        if exact || worst == 0.0 {
            return Ok((false, "perturbed word path kept the transfer identity".into()));
        }
        caught.push("transfer identity");

        // The same perturbation trips the word-side Chen sweep.
        if xbar_bad.check_chen().exact {
            return Ok((false, "perturbed word path kept Chen".into()));
        }
        caught.push("word Chen");

        // A bumped family sample trips the two-formula comparison.
        let ge = g_from_renorm_explicit(&m, &x, FLOAT_TOL)?;
        let gr = g_from_renorm_recursive(&m, &x, FLOAT_TOL)?;
        let mut g_bad = ge.clone();
        let mut path: Vec<Q> = g_bad.path(&chain2(1, 1)).map(<[Q]>::to_vec).unwrap_or_default();
        path[2] = &path[2] + &q(1, 11);
        g_bad.set_path(chain2(1, 1), path)?;
        if g_bad.max_abs_diff(&gr) == 0.0 {
            return Ok((false, "bumped counterterm family matched the recursive one".into()));
        }
        caught.push("family comparison");

        // The bumped family also trips the additivity comparator.
        let v2 = BphzCharacter::random(ISO_TRUNC, DEC_DEFAULT, BPHZ_SEEDS[1])?;
        let m2 = bphz_map(&v2)?;
        let g2 = g_from_renorm_explicit(&m2, &x, FLOAT_TOL)?;
        let stepwise = g_action(&g2, &g_action(&ge, &x, FLOAT_TOL)?, FLOAT_TOL)?;
        let joint = g_action(&g_bad.add(&g2)?, &x, FLOAT_TOL)?;
        let (diff, _) = branched_max_diff(&stepwise, &joint)?;
        if diff == 0.0 {
            return Ok((false, "bumped counterterm family kept additivity".into()));
        }
        caught.push("action additivity");

        // A dropped image term trips the commutation sweep.
        let basis = compute_basis(ISO_TRUNC, DEC_DEFAULT)?;
        let mut tm = tilde_map(&m, &gamma, &basis)?;
        tm.perturb(&dot(0), &Word::single(dot(1)), &q(-1, 2))?;
        let report = check_commute_against(&m, &x, &basis, &tm)?;
        if report.passes(0.0) {
            return Ok((false, "tampered companion map kept commutation".into()));
        }
        caught.push("iso commutation");

        // A tampered change-of-basis entry trips the audit.
        let mut basis_bad = basis.clone();
        basis_bad.perturb_to_forest(2, 0, 1, &q_int(1))?;
        if basis_bad.audit().is_ok() {
            return Ok((false, "tampered change of basis passed the audit".into()));
        }
        caught.push("basis audit");

        Ok((true, format!("{} tampering probes detected: {}", caught.len(), caught.join(", "))))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn suite_names_are_distinct_and_unknown_names_fail() {
        let set: BTreeSet<&str> = SUITE_NAMES.into_iter().collect();
        assert_eq!(set.len(), SUITE_NAMES.len());
        assert!(run_suite("no-such-suite").is_err());
    }

    #[test]
    fn reports_render_as_json() {
        let reports = vec![
            CheckReport { name: "hopf-axioms", pass: true, detail: "ok".into() },
            CheckReport { name: "cointeraction", pass: false, detail: "bad".into() },
        ];
        assert!(!all_pass(&reports));
        let text = reports_to_json(&reports);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["pass"], serde_json::json!(false));
        assert_eq!(doc["checks"][0]["name"], serde_json::json!("hopf-axioms"));
    }
}
