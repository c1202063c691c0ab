use super::*;
use crate::syntax::ast::Hyp;
use crate::syntax::parse_program;
use proptest::prelude::*;

fn ruleset(src: &str) -> RuleSetDecl {
    parse_program(src).unwrap().rulesets.remove(0)
}

fn g(n: &str) -> PredRef {
    PredRef::Global(n.into())
}

fn set(ps: &[PredRef]) -> PredSet {
    ps.iter().cloned().collect()
}

#[test]
fn trans_classification() {
    let info = classify(&ruleset("rules trans_rs { path(x,y) if edge(x,y)  path(x,y) if edge(x,z), path(z,y) }"));
    assert_eq!(info.base(), set(&[g("edge")]));
    assert_eq!(info.derived(), set(&[g("path")]));
    assert_eq!(info.deps[&g("path")], set(&[g("edge"), g("path")]));
    assert!(fully_depends(&info, &g("path"), &set(&[g("edge")])));
}

#[test]
fn local_predicates_are_params() {
    let info = classify(&ruleset("rules trans_rs(edge, path) { path(x,y) if edge(x,y) }"));
    assert_eq!(info.base_params, set(&[PredRef::Param("edge".into())]));
    assert_eq!(info.derived_params, set(&[PredRef::Param("path".into())]));
    assert!(info.base_vars.is_empty() && info.derived_vars.is_empty());
}

#[test]
fn single_fact_rule() {
    let info = classify(&ruleset("rules r { p(1,2) }"));
    assert!(info.base().is_empty());
    assert_eq!(info.derived(), set(&[g("p")]));
    assert!(fully_depends(&info, &g("p"), &PredSet::new()));
}

#[test]
fn trans_rh_needs_roles() {
    let src = "class H { rules transRH_rs { self.transRH(x,y) if self.RH(x,y)  self.transRH(x,y) if self.RH(x,z), self.transRH(z,y)  self.transRH(x,x) if self.ROLES(x) } }";
    let decl = parse_program(src).unwrap().classes[0].rulesets[0].clone();
    let info = classify(&decl);
    let rh = PredRef::SelfField("RH".into());
    let roles = PredRef::SelfField("ROLES".into());
    let t = PredRef::SelfField("transRH".into());
    assert!(!fully_depends(&info, &t, &set(&[rh.clone()])));
    assert!(fully_depends(&info, &t, &set(&[rh.clone(), roles.clone()])));
    assert!(fully_depends(&info, &t, &info.base()));

    let inst = instantiate(&decl, Origin::Class("H".into()), 7);
    let preds = predicates(&inst.rules);
    assert_eq!(
        preds,
        set(&[
            PredRef::Inst(7, "RH".into()),
            PredRef::Inst(7, "ROLES".into()),
            PredRef::Inst(7, "transRH".into())
        ])
    );
}

#[test]
fn instantiate_lowers_globals_and_keeps_params() {
    let inst = instantiate(&ruleset("rules w { win(x) if move(x,y), not win(y) }"), Origin::Global, 0);
    assert_eq!(predicates(&inst.rules), set(&[PredRef::Inst(0, "move".into()), PredRef::Inst(0, "win".into())]));
    let inst = instantiate(&ruleset("rules t(edge, path) { path(x,y) if edge(x,y) }"), Origin::Global, 0);
    assert_eq!(predicates(&inst.rules), set(&[PredRef::Param("edge".into()), PredRef::Param("path".into())]));
}

#[test]
fn slice_examples() {
    let tr = ruleset("rules t { path(x,y) if edge(x,y)  path(x,y) if edge(x,z), path(z,y) }").rules;
    assert_eq!(slice(&tr, &set(&[g("edge")])).len(), 2);
    assert!(slice(&tr, &PredSet::new()).is_empty());
    let chains = ruleset("rules c { p(x) if q(x)  r(x) if s(x) }").rules;
    let sl = slice(&chains, &set(&[g("q")]));
    assert_eq!(sl.len(), 1);
    assert_eq!(sl[0].head.pred, g("p"));
    assert_eq!(undefined_preds(&chains, &set(&[g("q")])), set(&[g("r")]));
}

#[test]
fn stratify_modsg_and_win() {
    let modsg = ruleset(
        "rules m { sg(x,y) if par(x,p), par(y,p)  nonsg(x,y) if par(x,y)  nonsg(x,y) if par(x,z), nonsg(z,y)  sg2(x,y) if sg(x,y), not nonsg(x,y) }",
    )
    .rules;
    let strata = stratify(&modsg).unwrap();
    assert_eq!(strata.len(), 2);
    assert!(strata[0].contains(&g("sg")) && strata[0].contains(&g("nonsg")));
    assert_eq!(strata[1], set(&[g("sg2")]));

    let win = ruleset("rules w { win(x) if move(x,y), not win(y) }").rules;
    assert_eq!(stratify(&win).unwrap_err().head, g("win"));

    let tc = ruleset("rules t { path(x,y) if edge(x,y)  path(x,y) if edge(x,z), path(z,y) }").rules;
    assert_eq!(stratify(&tc).unwrap().len(), 1);
}

#[test]
fn explain_lists_strata() {
    let info = classify(&ruleset("rules w { win(x) if move(x,y), not win(y) }"));
    let text = explain(&info);
    assert!(text.contains("base variables: {move}"), "{text}");
    assert!(text.contains("not stratified"), "{text}");
}

// ---------- properties over random rule graphs ----------

fn rule_graph() -> impl Strategy<Value = Vec<Rule>> {
    let hyp = (0usize..6, any::<bool>());
    let rule = (0usize..6, prop::collection::vec(hyp, 1..4));
    prop::collection::vec(rule, 1..7).prop_map(|rs| {
        rs.into_iter()
            .map(|(h, body)| Rule {
                head: Atom { pred: g(&format!("p{h}")), args: vec![Term::Var("x".into())] },
                body: body
                    .into_iter()
                    .map(|(b, neg)| Hyp { negated: neg, atom: Atom { pred: g(&format!("p{b}")), args: vec![Term::Var("x".into())] } })
                    .collect(),
            })
            .collect()
    })
}

/// Brute force: stratified iff no negative edge h -> b where b reaches h.
fn has_negative_cycle(rules: &[Rule]) -> bool {
    let preds: Vec<PredRef> = predicates(rules).into_iter().collect();
    let n = preds.len();
    let pos = |p: &PredRef| preds.iter().position(|q| q == p).unwrap();
    let mut reach = vec![vec![false; n]; n];
    for r in rules {
        for h in &r.body {
            reach[pos(&r.head.pred)][pos(&h.atom.pred)] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    rules.iter().any(|r| {
        r.body.iter().any(|h| h.negated && (h.atom.pred == r.head.pred || reach[pos(&h.atom.pred)][pos(&r.head.pred)]))
    })
}

proptest! {
    #[test]
    fn classification_partitions_predicates(rules in rule_graph()) {
        let info = classify_rules("r", &rules);
        let base = info.base();
        let derived = info.derived();
        prop_assert!(base.is_disjoint(&derived));
        let all: PredSet = base.union(&derived).cloned().collect();
        prop_assert_eq!(all, predicates(&rules));
    }

    #[test]
    fn slice_is_monotone_and_sound(rules in rule_graph(), k1 in prop::collection::btree_set(0usize..6, 0..6), extra in prop::collection::btree_set(0usize..6, 0..6)) {
        let known1: PredSet = k1.iter().map(|i| g(&format!("p{i}"))).collect();
        let known2: PredSet = known1.iter().cloned().chain(extra.iter().map(|i| g(&format!("p{i}")))).collect();
        let s1 = slice(&rules, &known1);
        let s2 = slice(&rules, &known2);
        for r in &s1 {
            prop_assert!(s2.contains(r));
        }
        let info = classify_rules("r", &rules);
        for r in &s1 {
            prop_assert!(fully_depends(&info, &r.head.pred, &known1));
        }
    }

    #[test]
    fn stratify_iff_no_negative_cycle(rules in rule_graph()) {
        let res = stratify(&rules);
        prop_assert_eq!(res.is_ok(), !has_negative_cycle(&rules));
        if let Ok(strata) = res {
            let level = |p: &PredRef| strata.iter().position(|s| s.contains(p));
            for r in &rules {
                let lh = level(&r.head.pred).unwrap();
                for h in &r.body {
                    if let Some(lb) = level(&h.atom.pred) {
                        if h.negated { prop_assert!(lb < lh); } else { prop_assert!(lb <= lh); }
                    }
                }
            }
        }
    }
}
