mod support;

use proptest::prelude::*;
use specloop_core::ltl::{
    equivalent, evaluate, parse, print, validate_fragment, Bound, EquivStatus, Formula, LassoTrace, Letter, PrintMode,
};
use support::oracle;

const ATOMS: &[&str] = &["a", "b", "c"];

fn arb_formula(max_depth: u32) -> impl Strategy<Value = Formula> {
    let leaf =
        prop_oneof![prop::sample::select(ATOMS).prop_map(Formula::atom), Just(Formula::True), Just(Formula::False),];
    leaf.prop_recursive(max_depth, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::finally),
            inner.clone().prop_map(Formula::globally),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::implies(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::iff(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::until(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::weak_until(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::release(l, r)),
        ]
    })
}

fn arb_until_free() -> impl Strategy<Value = Formula> {
    let leaf = prop::sample::select(ATOMS).prop_map(Formula::atom);
    leaf.prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::or(l, r)),
        ]
    })
}

fn arb_trace() -> impl Strategy<Value = LassoTrace> {
    let letter = (0u64..8).prop_map(Letter);
    (prop::collection::vec(letter.clone(), 0..=3), prop::collection::vec(letter, 1..=3))
        .prop_map(|(p, q)| LassoTrace::from_letters(ATOMS.iter().map(|s| s.to_string()).collect(), p, q).unwrap())
}

proptest! {
    #[test]
    fn print_parse_round_trip(f in arb_formula(5)) {
        for mode in [PrintMode::Minimal, PrintMode::Full] {
            let text = print(&f, mode);
            prop_assert_eq!(parse(&text).unwrap(), f.clone(), "{}", text);
        }
    }

    #[test]
    fn evaluate_matches_brute_force(f in arb_formula(4), t in arb_trace()) {
        prop_assert_eq!(evaluate(&f, &t).unwrap(), oracle::brute_force(&f, &t));
    }

    #[test]
    fn until_free_reads_only_next_depth_positions(f in arb_until_free(), t in arb_trace()) {
        prop_assert_eq!(evaluate(&f, &t).unwrap(), oracle::until_free(&f, &t));
    }

    #[test]
    fn derived_operator_laws(f in arb_formula(2), g in arb_formula(2), t in arb_trace()) {
        let ev = |x: &Formula| evaluate(x, &t).unwrap();
        prop_assert_eq!(ev(&Formula::finally(f.clone())), ev(&Formula::until(Formula::True, f.clone())));
        prop_assert_eq!(
            ev(&Formula::globally(f.clone())),
            ev(&Formula::not(Formula::finally(Formula::not(f.clone()))))
        );
        prop_assert_eq!(
            ev(&Formula::weak_until(f.clone(), g.clone())),
            ev(&Formula::or(Formula::until(f.clone(), g.clone()), Formula::globally(f.clone())))
        );
        prop_assert_eq!(
            ev(&Formula::release(f.clone(), g.clone())),
            ev(&Formula::not(Formula::until(Formula::not(f.clone()), Formula::not(g.clone()))))
        );
    }

    #[test]
    fn equivalence_is_reflexive(f in arb_formula(4), p in 0usize..=2, q in 1usize..=2) {
        let v = equivalent(&f, &f, Bound { max_prefix: p, max_loop: q }).unwrap();
        prop_assert_eq!(v.status, EquivStatus::EquivalentUpToBound);
    }

    #[test]
    fn witnesses_separate_and_agree_with_enumeration(
        f in arb_formula(3).prop_filter("two atoms", |f| f.atoms().len() <= 2),
        g in arb_formula(3).prop_filter("two atoms", |f| f.atoms().len() <= 2),
    ) {
        let v = equivalent(&f, &g, Bound { max_prefix: 2, max_loop: 2 }).unwrap();
        let naive = oracle::naive_distinguishable(&f, &g, 2, 2);
        prop_assert_eq!(v.status == EquivStatus::Distinguished, naive);
        if let Some(w) = v.witness {
            prop_assert_ne!(evaluate(&f, &w).unwrap(), evaluate(&g, &w).unwrap());
            prop_assert!(w.prefix().len() <= 2 && w.cycle().len() <= 2);
        }
    }

    #[test]
    fn fragments_accept_every_formula(f in arb_formula(3)) {
        let text = print(&f, PrintMode::Minimal);
        prop_assert!(validate_fragment(&text).is_ok());
        let holed = format!("-> {}", text);
        prop_assert!(validate_fragment(&holed).is_ok());
    }
}

#[test]
fn worked_examples_against_oracle() {
    let cases: &[(&str, &[&[&str]], &[&[&str]], bool)] = &[
        ("G a", &[], &[&["a"]], true),
        ("a U b", &[&["a"], &["a", "b"]], &[&[]], true),
        ("G (a -> (b | X b))", &[&["a"]], &[&[]], false),
    ];
    for (text, prefix, cycle, want) in cases {
        let f = parse(text).unwrap();
        let t = LassoTrace::new(&["a", "b"], prefix, cycle).unwrap();
        assert_eq!(oracle::brute_force(&f, &t), *want, "oracle on {text}");
        assert_eq!(evaluate(&f, &t).unwrap(), *want, "evaluate on {text}");
    }
}
