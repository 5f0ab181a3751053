use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treedist::eaf::{extract_replug_sequence, replay_replug_sequence, replug_distance};
use treedist::generate::{numbered_taxa, random_tree, random_walk_pair};
use treedist::maf::{tbr_distance, tbr_lower_bound_approx};
use treedist::matching::{maximum_matching, minimum_edge_cover, ClauseGraph};
use treedist::moves::spr_neighbors;
use treedist::reduce::reduce_pair;
use treedist::search::{is_spr_path, uspr_distance, SearchOptions};
use treedist::{parse_newick, UTree};

fn tree(n: usize, seed: u64) -> UTree {
    random_tree(&numbered_taxa(n), &mut ChaCha8Rng::seed_from_u64(seed))
}

fn walk(n: usize, steps: usize, seed: u64) -> (UTree, UTree) {
    random_walk_pair(&numbered_taxa(n), steps, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn newick_round_trip(n in 3usize..40, seed: u64) {
        let t = tree(n, seed);
        let back = parse_newick(&t.to_string()).unwrap();
        prop_assert_eq!(back.canonical_form(), t.canonical_form());
    }

    #[test]
    fn neighbourhood_size(n in 4usize..13, seed: u64) {
        let t = tree(n, seed);
        prop_assert_eq!(spr_neighbors(&t).unwrap().len(), 2 * (n - 3) * (2 * n - 7));
    }

    #[test]
    fn distances_are_ordered_and_symmetric(n in 6usize..13, steps in 1usize..5, seed: u64) {
        let (a, b) = walk(n, steps, seed);
        let atbr = tbr_lower_bound_approx(&a, &b).unwrap();
        let tbr = tbr_distance(&a, &b).unwrap();
        let (replug, eaf) = replug_distance(&a, &b).unwrap();
        let r = uspr_distance(&a, &b, SearchOptions::default()).unwrap();
        prop_assert!(atbr <= tbr && tbr <= replug && replug <= r.distance && r.distance <= steps);
        prop_assert_eq!(tbr_distance(&b, &a).unwrap(), tbr);
        prop_assert_eq!(replug_distance(&b, &a).unwrap().0, replug);
        prop_assert_eq!(uspr_distance(&b, &a, SearchOptions::default()).unwrap().distance, r.distance);
        prop_assert_eq!(r.path.len(), r.distance + 1);
        prop_assert!(is_spr_path(&r.path).unwrap());
        let weight = 2 * (eaf.component_count() as i64 - 1) - eaf.phi_count() as i64;
        prop_assert_eq!(weight, replug as i64);
        let moves = extract_replug_sequence(&a, &b, &eaf).unwrap();
        prop_assert_eq!(moves.len(), replug);
        prop_assert!(replay_replug_sequence(&a, &b, &moves).unwrap());
    }

    #[test]
    fn reduction_keeps_distances(n in 8usize..16, steps in 1usize..4, seed: u64) {
        let (a, b) = walk(n, steps, seed);
        let (ra, rb, receipt) = reduce_pair(&a, &b).unwrap();
        prop_assert!(receipt.reduced_leaf_count <= n);
        prop_assert_eq!(tbr_distance(&ra, &rb).unwrap(), tbr_distance(&a, &b).unwrap());
        prop_assert_eq!(replug_distance(&ra, &rb).unwrap().0, replug_distance(&a, &b).unwrap().0);
        let full = uspr_distance(&a, &b, SearchOptions::default()).unwrap().distance;
        prop_assert_eq!(uspr_distance(&ra, &rb, SearchOptions::default()).unwrap().distance, full);
    }

    #[test]
    fn edge_cover_covers(n in 1usize..10, raw in prop::collection::vec((0usize..10, 0usize..10), 0..20)) {
        let mut g = ClauseGraph::new(n);
        for (var, &(a, b)) in raw.iter().enumerate() {
            g.add_variable(var, &[a % n, b % n]);
        }
        let m = maximum_matching(&g);
        let mut used = vec![false; n];
        for &i in &m {
            let (a, b, _) = g.edges[i];
            prop_assert!(!used[a] && !used[b]);
            used[a] = true;
            used[b] = true;
        }
        if let Ok(cover) = minimum_edge_cover(&g) {
            let mut covered = vec![false; n];
            for &var in &cover {
                for &(a, b, v) in &g.edges {
                    if v == var { covered[a] = true; covered[b] = true; }
                }
                for &(a, v) in &g.loops {
                    if v == var { covered[a] = true; }
                }
            }
            prop_assert!(covered.iter().all(|&c| c));
            prop_assert_eq!(cover.len(), n - m.len());
        }
    }
}
