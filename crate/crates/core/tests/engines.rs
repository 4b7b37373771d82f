use dla_core::rational::int;
use dla_core::solve::{compile, solve_with_witness};
use dla_core::{generate, parse, Engine, Family, Formula, FormulaAst, GenConfig, MatrixMode, Point, SolveOptions, Verdict};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::TwoCnf), Just(Family::RandomStructure)]
}

fn small_formula() -> impl Strategy<Value = Formula> {
    (family(), 1usize..=4, 1usize..=4, any::<u64>())
        .prop_map(|(family, n, m, seed)| generate(&GenConfig::new(family, n, m, seed)))
}

fn verdict(f: &Formula, opts: SolveOptions) -> Option<Verdict> {
    let out = solve_with_witness(f, &opts);
    if let Some(w) = &out.witness {
        assert!(f.evaluate(w).unwrap(), "witness violates {f}");
    }
    out.report.verdict
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matrix_modes_and_oracles_agree(f in small_formula()) {
        let split = verdict(&f, SolveOptions { engine: Engine::Split, ..Default::default() });
        prop_assert!(split.is_some());
        for matrix in [None, Some(MatrixMode::Merged), Some(MatrixMode::PerInstance)] {
            prop_assert_eq!(verdict(&f, SolveOptions { matrix, ..Default::default() }), split);
        }
        prop_assert_eq!(verdict(&f, SolveOptions { engine: Engine::Lazy, ..Default::default() }), split);
    }

    #[test]
    fn counters_match_implications(f in small_formula()) {
        for matrix in [None, Some(MatrixMode::Merged)] {
            let c = compile(&f, &SolveOptions { matrix, ..Default::default() }).unwrap();
            let k = c.bfm.counters;
            prop_assert_eq!(c.bfm.implications.len(), k.resolvents + k.contradictions);
            prop_assert_eq!(c.bfm.table.len() - c.bfm.table.num_original(), k.derived_predicates);
            prop_assert!(k.derived_predicates <= k.resolvents);
        }
    }

    #[test]
    fn rendering_parses_to_the_same_formula(
        f in small_formula(),
        values in proptest::collection::vec(-6i64..=6, 4),
    ) {
        let g = parse(&f.render()).unwrap();
        prop_assert_eq!(parse(&g.render()).unwrap().render(), g.render());
        let at = |h: &Formula| -> Point {
            h.vars.iter().map(|n| {
                let i: usize = n[1..].parse().unwrap();
                (h.var_id(n).unwrap(), int(values[i - 1]))
            }).collect()
        };
        prop_assert_eq!(f.evaluate(&at(&f)).unwrap(), g.evaluate(&at(&g)).unwrap());
    }
}

#[test]
fn equalities_and_negations_survive_normalization() {
    let f = parse("x = 2 & !(y < x) & y != 3").unwrap();
    for engine in [Engine::Bfm, Engine::Split, Engine::Lazy] {
        assert_eq!(verdict(&f, SolveOptions { engine, ..Default::default() }), Some(Verdict::Sat));
    }
    let f = parse("x = 2 & !(y < x) & y <= 2 & y != 2").unwrap();
    for engine in [Engine::Bfm, Engine::Split, Engine::Lazy] {
        assert_eq!(verdict(&f, SolveOptions { engine, ..Default::default() }), Some(Verdict::Unsat));
    }
}

fn flattened(node: &FormulaAst) -> FormulaAst {
    match node {
        FormulaAst::And(cs) => FormulaAst::and(cs.iter().map(flattened)),
        FormulaAst::Or(cs) => FormulaAst::or(cs.iter().map(flattened)),
        FormulaAst::Not(c) => FormulaAst::not(flattened(c)),
        FormulaAst::Atom(_) => node.clone(),
    }
}

#[test]
fn generator_outputs_round_trip() {
    for family in [Family::TwoCnf, Family::RandomStructure] {
        for seed in 0..100 {
            let f = generate(&GenConfig::new(family, 5, 6, seed));
            let g = parse(&f.render()).unwrap();
            assert_eq!(g.vars, f.vars);
            assert_eq!(g.root, flattened(&f.root), "{family} seed {seed}");
        }
    }
}
