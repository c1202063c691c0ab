//! Sugared constructs evaluate to what a direct computation gives.

mod common;

use common::{compile, int, run_globals};
use proptest::collection::btree_set;
use proptest::prelude::*;
use rulelang::value::{Relation, Value};
use std::collections::BTreeSet;

const PROGRAM: &str = "
c := count(S)
s := sum(S)
mn := min(S)
mx := max(S)
J := {(a, d) : (a, b) in E, (=b, d) in E | True}
F := {x : x in S | x > 3 and not (x in T)}
ex := some (a, b) in E | a is b
al := each x in S | x > 0
w := None
ifSome (a, b) in E | lt(b, a) { w := (a, b) }
k := 2
Y := new set
for (=k, y) in E { Y.add(y) }
";

fn ints(s: &BTreeSet<i64>) -> Relation {
    s.iter().map(|&x| vec![int(x)]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn sugar_matches_direct_computation(
        s in btree_set(0i64..10, 0..8),
        t in btree_set(0i64..10, 0..5),
        e in btree_set((0i64..5, 0i64..5), 0..10),
    ) {
        let srel = ints(&s);
        let trel = ints(&t);
        let erel: Relation = e.iter().map(|&(a, b)| vec![int(a), int(b)]).collect();
        let p = compile(PROGRAM);
        let mut m = rulelang::runtime::Machine::new(&p, Default::default()).unwrap();
        for (g, r) in [("S", &srel), ("T", &trel), ("E", &erel)] {
            m.bind_global_set(g, r).unwrap();
        }
        m.run().unwrap();
        let g = |n: &str| m.global(n).cloned().unwrap();
        prop_assert_eq!(g("c"), int(s.len() as i64));
        prop_assert_eq!(g("s"), int(s.iter().sum()));
        prop_assert_eq!(g("mn"), s.first().map_or(Value::None, |&x| int(x)));
        prop_assert_eq!(g("mx"), s.last().map_or(Value::None, |&x| int(x)));
        let join: Relation = e.iter()
            .flat_map(|&(a, b)| e.iter().filter(move |&&(b2, _)| b2 == b).map(move |&(_, d)| vec![int(a), int(d)]))
            .collect();
        prop_assert_eq!(m.global_rows("J").unwrap(), join);
        let f: BTreeSet<i64> = s.iter().copied().filter(|x| *x > 3 && !t.contains(x)).collect();
        prop_assert_eq!(m.global_rows("F").unwrap(), ints(&f));
        prop_assert_eq!(g("ex"), Value::Bool(e.iter().any(|(a, b)| a == b)));
        prop_assert_eq!(g("al"), Value::Bool(s.iter().all(|&x| x > 0)));
        match g("w") {
            Value::None => prop_assert!(!e.iter().any(|(a, b)| b < a)),
            Value::Tuple(w) => {
                let (a, b) = (w[0].clone(), w[1].clone());
                prop_assert!(b < a && erel.contains(&vec![a, b]));
            }
            other => prop_assert!(false, "w = {other}"),
        }
        let y: BTreeSet<i64> = e.iter().filter(|(a, _)| *a == 2).map(|(_, b)| *b).collect();
        prop_assert_eq!(m.global_rows("Y").unwrap(), ints(&y));
    }
}

#[test]
fn while_some_reaches_a_fixpoint() {
    let e: Relation = [(0, 1), (1, 2), (2, 3), (3, 0)].iter().map(|&(a, b)| vec![int(a), int(b)]).collect();
    let src = "T := new set\nfor p in E { T.add(p) }\n\
               whileSome (x, z) in T, (=z, y) in E | not ((x, y) in T) { T.add((x, y)) }";
    let got = run_globals(src, &[("E", &e)], &["T"]);
    assert_eq!(got["T"].as_ref().unwrap().len(), 16);
}
