use std::time::Instant;

use molpilot_chem::parse_smiles;
use molpilot_chem::scoring::Property;
use molpilot_core::docking::Docker;
use molpilot_core::evaluate::Evaluator;
use molpilot_core::generator::FragmentLibrary;
use molpilot_core::optimizer::{ga_optimize, GAConfig, Objective};
use molpilot_core::pocket::{parse_pocket, synthetic_pdb};

fn alkanes() -> Vec<molpilot_chem::MolecularGraph> {
    (1..=20).map(|n| parse_smiles(&"C".repeat(n)).unwrap()).collect()
}

fn evaluator() -> Evaluator {
    Evaluator::new(parse_pocket(&synthetic_pdb(120)).unwrap(), vec![], Docker::Surrogate)
}

#[test]
fn qed_rises_from_alkanes() {
    let lib = FragmentLibrary::builtin();
    let t = Instant::now();
    let cfg = GAConfig { rng_seed: 1, ..GAConfig::default() };
    let r = ga_optimize(&alkanes(), &Objective::single(Property::Qed).unwrap(), &cfg, &evaluator(), lib.fragments()).unwrap();
    assert!(t.elapsed().as_secs() < 60);
    assert_eq!(r.trace.len(), 51);
    let first = r.trace.first().unwrap();
    let last = r.trace.last().unwrap();
    assert!(last.median - first.median >= 0.1, "median {} -> {}", first.median, last.median);
    for w in r.trace.windows(2) {
        assert!(w[1].best >= w[0].best);
    }
    assert_eq!(r.population.len(), 100);
    assert!((r.population[0].fitness - last.best).abs() < 1e-12);
}

#[test]
fn same_seed_same_population() {
    let lib = FragmentLibrary::builtin();
    let cfg = GAConfig { population_size: 30, generations: 8, rng_seed: 9, ..GAConfig::default() };
    let obj = Objective::weighted(1.0, 0.5, 0.0).unwrap();
    let keys = |seed| {
        let cfg = GAConfig { rng_seed: seed, ..cfg };
        let r = ga_optimize(&alkanes(), &obj, &cfg, &evaluator(), lib.fragments()).unwrap();
        r.population.iter().map(|i| i.key.clone()).collect::<Vec<_>>()
    };
    assert_eq!(keys(9), keys(9));
    assert_ne!(keys(9), keys(10));
}

#[test]
fn vna_objective_prefers_pocket_sized_molecules() {
    let lib = FragmentLibrary::builtin();
    let cfg = GAConfig { population_size: 30, generations: 15, rng_seed: 3, ..GAConfig::default() };
    let r = ga_optimize(&alkanes()[..5], &Objective::single(Property::Vna).unwrap(), &cfg, &evaluator(), lib.fragments()).unwrap();
    assert!(r.trace.last().unwrap().best > r.trace[0].best);
}
