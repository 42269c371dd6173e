mod common;

use capsafe::encoding::{cap_to_dl, decode_text, dl_to_cap, encode_text, hypergraph_round_trip_holds, program_round_trip_holds};
use capsafe::gen::{random_config, random_model, random_positive_program, GenParams};
use capsafe::modelfile::to_text;
use capsafe::safety::is_safe;
use capsafe::AtomSet;
use rand::Rng;

#[test]
fn least_model_is_the_closure() {
    let mut r = common::rng(21);
    for _ in 0..300 {
        let n = r.gen_range(1..=12);
        let m = r.gen_range(0..=24);
        let sm = random_model(&mut r, &GenParams { fact_prob: 0.05, ..GenParams::new(n, m, 4) });
        let enc = cap_to_dl(&sm);
        let a = random_config(&mut r, n, 0.25);
        let model = enc.program.eval(&enc.labels.wrap(&a)).unwrap().true_atoms;
        assert_eq!(enc.labels.strip(&model), common::closure(&sm, &a));
        assert_eq!(model.contains(enc.labels.forbidden_atom()), !is_safe(&sm, &a));
        assert!(hypergraph_round_trip_holds(&sm, &enc));
    }
}

#[test]
fn program_hypergraph_program() {
    let mut r = common::rng(22);
    for _ in 0..300 {
        let n = r.gen_range(1..=10);
        let m = r.gen_range(0..=20);
        let p = random_positive_program(&mut r, n, m, 4);
        assert!(program_round_trip_holds(&p));
        let h = dl_to_cap(&p).unwrap();
        let d: AtomSet = (0..n).filter(|_| r.gen_bool(0.3)).map(capsafe::AtomId::from_index).collect();
        assert_eq!(h.closure(&d), p.eval(&d).unwrap().true_atoms);
    }
}

#[test]
fn text_encode_decode_reproduces_the_model() {
    let mut r = common::rng(23);
    for _ in 0..100 {
        let n = r.gen_range(0..=8);
        let mut p = GenParams::new(n, 12, 3);
        p.forbidden = r.gen_range(0..=2);
        let sm = random_model(&mut r, &p);
        let back = decode_text(&encode_text(&sm)).unwrap();
        assert_eq!(to_text(&back, &AtomSet::new()), to_text(&sm, &AtomSet::new()));
    }
}

#[test]
fn dl_to_cap_rejects_negation() {
    let p = capsafe::datalog::Program::parse("% atoms a, b\n% stratum 1\nb :- !a.\n").unwrap();
    assert!(dl_to_cap(&p).is_err());
}
