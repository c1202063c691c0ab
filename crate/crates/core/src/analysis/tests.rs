use super::*;
use crate::desugar::desugar_all;
use crate::syntax::parse_program;

fn core(src: &str) -> Program {
    desugar_all(parse_program(src).unwrap_or_else(|d| panic!("{d:?}")))
}

const TRANS: &str = "rules trans_rs {\n path(x,y) if edge(x,y)\n path(x,y) if edge(x,z), path(z,y)\n}\n";

#[test]
fn derived_assignment_is_a_diagnostic_in_no_alias_mode() {
    let p = core(&format!("{TRANS}edge := {{(1,2)}}\npath := {{}}"));
    let d = check_updates(&p, Mode::NoAlias).unwrap_err();
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, "derived-update");
    assert_eq!(d[0].loc.line, 6);
}

#[test]
fn alias_checked_mode_reports_without_failing() {
    let p = core(&format!("{TRANS}edge := {{(1,2)}}\npath := {{}}"));
    let r = check_updates(&p, Mode::AliasChecked).unwrap();
    assert_eq!(r.count(SiteKind::DerivedUpdateError), 1);
    assert!(r.count(SiteKind::BaseUpdate) >= 2);
}

#[test]
fn add_on_derived_set_is_flagged() {
    let p = core(&format!("{TRANS}path.add((1,2))"));
    assert!(check_updates(&p, Mode::NoAlias).is_err());
}

#[test]
fn self_fields_resolve_against_class_and_ancestors() {
    let src = "class A { rules r { self.p(x) if self.q(x) } }\n\
               class B extends A { def ok() { self.q := {1} }\n def bad() { self.p.add(3) } }";
    let d = check_updates(&core(src), Mode::NoAlias).unwrap_err();
    assert_eq!(d.len(), 1);
    assert!(d[0].message.contains("self.p"));
    let r = check_updates(&core(src), Mode::AliasChecked).unwrap();
    assert!(r.sites.iter().any(|s| s.target == "self.q" && s.kind == SiteKind::BaseUpdate));
}

#[test]
fn other_receivers_are_unrelated() {
    let src = "class A { rules r { self.p(x) if self.q(x) } }\na := new A\na.p := 1";
    let r = check_updates(&core(src), Mode::NoAlias).unwrap();
    assert!(r.sites.iter().any(|s| s.target == "?.p" && s.kind == SiteKind::Unrelated));
}

#[test]
fn every_mutation_is_a_site() {
    let src = "S := new set\nS.add(1)\nS.del(1)\nx := 2\nc := new sequence\nc.add(1)";
    let r = check_updates(&core(src), Mode::NoAlias).unwrap();
    assert_eq!(r.sites.len(), 6);
    assert!(r.explain().starts_with("1:1: unrelated a_gv.S\n"));
}

#[test]
fn infer_checks() {
    let rs = "rules trans_rs(edge, path) {\n path(x,y) if edge(x,y)\n path(x,y) if edge(x,z), path(z,y)\n}\nRH := {(1,2)}\n";
    assert!(local_infer_check(&core(&format!("{rs}r := infer(path, edge=RH, rules=trans_rs)"))).is_empty());
    let d = local_infer_check(&core(&format!("{rs}r := infer(edge, rules=trans_rs)")));
    assert_eq!(d.iter().map(|d| d.code).collect::<Vec<_>>(), ["bad-query"]);
    let d = local_infer_check(&core(&format!("{rs}r := infer(path, zig=RH, rules=trans_rs)")));
    assert_eq!(d.iter().map(|d| d.code).collect::<Vec<_>>(), ["bad-kwarg"]);
    let d = local_infer_check(&core(&format!("{rs}r := infer(path, rules=nope)")));
    assert_eq!(d.iter().map(|d| d.code).collect::<Vec<_>>(), ["unknown-ruleset"]);
}

#[test]
fn infer_on_self_and_on_objects() {
    let src = "class G { rules r(k) { self.p(x) if k(x), self.q(x) }\n def m(s) { self.out := self.infer(self.p, k=s, rules=r) } }\n\
               g := new G\nS := {1}\nz := g.infer(self.p, k=S, rules=r)";
    assert!(local_infer_check(&core(src)).is_empty());
}

#[test]
fn infer_targets_are_update_sites() {
    let rs = "rules t(edge, path) { path(x,y) if edge(x,y) }\nRH := {(1,2)}\n";
    let r = check_updates(&core(&format!("{rs}res := infer(path, edge=RH, rules=t)")), Mode::NoAlias).unwrap();
    assert!(r.sites.iter().any(|s| s.target == "a_gv.res"));
}
