use molpilot_chem::{canonical_key, parse_smiles, write_smiles};
use molpilot_core::edit::{crossover, mutate};
use molpilot_core::generator::FragmentLibrary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STARTS: &[&str] = &[
    "CCO",
    "c1ccccc1",
    "CC(=O)Oc1ccccc1C(=O)O",
    "CN1CCC[C@H]1c1cccnc1",
    "O=C(O)c1ccncc1",
    "C1CCNCC1",
    "c1ccc2[nH]ccc2c1",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
];

/// Every edit yields a graph that survives a write/parse round trip.
#[test]
fn ten_thousand_mutations_stay_valid() {
    let lib = FragmentLibrary::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut pool: Vec<_> = STARTS.iter().map(|s| parse_smiles(s).unwrap()).collect();
    for i in 0..10_000 {
        let g = &pool[rng.random_range(0..pool.len())];
        let child = if i % 5 == 4 {
            let other = &pool[rng.random_range(0..pool.len())];
            crossover(g, other, &mut rng).unwrap_or_else(|| g.clone())
        } else {
            mutate(g, lib.fragments(), 1.0, &mut rng)
        };
        let smiles = write_smiles(&child);
        let back = parse_smiles(&smiles).unwrap_or_else(|e| panic!("step {i}: {smiles} does not reparse: {e}"));
        assert_eq!(canonical_key(&back), canonical_key(&child), "step {i}");
        if child.heavy_atom_count() <= 40 {
            let slot = rng.random_range(0..pool.len().max(32));
            if slot < pool.len() {
                pool[slot] = child;
            } else {
                pool.push(child);
            }
        }
    }
}
