mod common;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{all_dags, class_key, class_patterns, pattern_distance, pattern_of, PopulationTest};
use necof::ci::{correlation_matrix, CorrMatrix};
use necof::structure::{
    apply_meek_rules, enumerate_dags, learn_skeleton, learn_skeleton_with, orient_colliders, Cpdag, Dag,
};
use necof::synth::{node_names, random_dag, simulate_sem, SemSpec};

fn learn_population(spec: &SemSpec) -> Cpdag {
    let names = node_names(spec.n_nodes());
    let corr = CorrMatrix::from_covariance(names, &spec.population_covariance(), 1_000_000).unwrap();
    apply_meek_rules(&orient_colliders(&learn_skeleton_with(&PopulationTest { corr: &corr }, None)))
}

#[test]
fn population_oracle_recovers_every_five_node_class() {
    let classes = class_patterns(5);
    let dags = all_dags(5);
    assert_eq!(dags.len(), 29281);
    let wrong: Vec<usize> = dags
        .iter()
        .enumerate()
        .filter(|(k, edges)| {
            let spec = SemSpec::random(Dag::from_edges(5, edges).unwrap(), *k as u64);
            pattern_distance(&pattern_of(&learn_population(&spec)), &classes[&class_key(5, edges)]) != 0
        })
        .map(|(k, _)| k)
        .collect();
    assert!(wrong.is_empty(), "{} misidentified classes, first {:?}", wrong.len(), &wrong[..wrong.len().min(5)]);
}

#[test]
fn extensions_reduce_back_to_their_cpdag() {
    for seed in 0..200 {
        let dag = random_dag(6, 2.0, seed);
        let cpdag = dag.to_cpdag();
        let ext = enumerate_dags(&cpdag, 256).unwrap();
        assert!(ext.dags.contains(&dag), "seed {seed}: generating DAG missing from its class");
        for d in &ext.dags {
            assert_eq!(d.to_cpdag(), cpdag, "seed {seed}");
            assert_eq!(d.v_structures(), dag.v_structures());
        }
    }
}

#[test]
fn extension_count_matches_brute_force_class_size() {
    let dags = all_dags(4);
    for edges in &dags {
        let key = class_key(4, edges);
        let class_size = dags.iter().filter(|d| class_key(4, d) == key).count();
        let cpdag = Dag::from_edges(4, edges).unwrap().to_cpdag();
        assert_eq!(enumerate_dags(&cpdag, 256).unwrap().dags.len(), class_size, "{edges:?}");
    }
}

#[test]
fn skeleton_is_invariant_under_column_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for seed in 0..30 {
        let spec = SemSpec::random(random_dag(6, 2.0, seed), seed);
        let panel = simulate_sem(&spec, 800).unwrap();
        let names = node_names(6);
        let base = learn_skeleton(&correlation_matrix(panel.returns().as_view(), &names).unwrap(), 0.05, None).unwrap();

        let mut perm: Vec<usize> = (0..6).collect();
        perm.shuffle(&mut rng);
        let data = panel.returns();
        let permuted = DMatrix::from_fn(data.nrows(), 6, |t, k| data[(t, perm[k])]);
        let pnames: Vec<String> = perm.iter().map(|&c| names[c].clone()).collect();
        let skel = learn_skeleton(&correlation_matrix(permuted.as_view(), &pnames).unwrap(), 0.05, None).unwrap();

        let mut mapped: Vec<(usize, usize)> =
            skel.edges().into_iter().map(|(a, b)| (perm[a].min(perm[b]), perm[a].max(perm[b]))).collect();
        mapped.sort_unstable();
        assert_eq!(mapped, base.edges(), "seed {seed}");
    }
}
