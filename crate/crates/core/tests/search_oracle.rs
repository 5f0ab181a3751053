use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treedist::generate::{all_trees, numbered_taxa, random_tree, random_walk_pair};
use treedist::oracle::bfs_uspr;
use treedist::search::{is_spr_path, uspr_distance, Estimator, SearchOptions};

#[test]
fn uspr_matches_bfs_on_five_leaves() {
    let trees = all_trees(&numbered_taxa(5));
    for a in &trees {
        for b in &trees {
            let r = uspr_distance(a, b, SearchOptions::default()).unwrap();
            assert_eq!(r.distance, bfs_uspr(a, b).unwrap(), "{a} {b}");
            assert_eq!(r.path.len(), r.distance + 1);
            assert!(is_spr_path(&r.path).unwrap());
        }
    }
}

#[test]
fn uspr_matches_bfs_on_six_and_seven_leaves() {
    let mut rng = ChaCha8Rng::seed_from_u64(76);
    for i in 0..300 {
        let taxa = numbered_taxa(6 + i % 2);
        let a = random_tree(&taxa, &mut rng);
        let b = random_tree(&taxa, &mut rng);
        let r = uspr_distance(&a, &b, SearchOptions::default()).unwrap();
        assert_eq!(r.distance, bfs_uspr(&a, &b).unwrap(), "{a} {b}");
        assert!(is_spr_path(&r.path).unwrap());
        assert_eq!(r.path[0].canonical_key(), a.canonical_key());
        assert_eq!(r.path.last().unwrap().canonical_key(), b.canonical_key());
    }
}

#[test]
fn truncated_ladder_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let taxa = numbered_taxa(8);
    for _ in 0..20 {
        let (a, b) = random_walk_pair(&taxa, 4, &mut rng);
        let full = uspr_distance(&a, &b, SearchOptions::default()).unwrap();
        let tbr = uspr_distance(&a, &b, SearchOptions { top: Estimator::Dtbr, ..Default::default() }).unwrap();
        assert_eq!(full.distance, tbr.distance, "{a} {b}");
        assert_eq!(full.distance, bfs_uspr(&a, &b).unwrap());
    }
}

#[test]
fn fixed_seed_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let taxa = numbered_taxa(12);
    for _ in 0..5 {
        let (a, b) = random_walk_pair(&taxa, 4, &mut rng);
        let opts = SearchOptions { seed: 17, ..Default::default() };
        let r1 = uspr_distance(&a, &b, opts).unwrap();
        let r2 = uspr_distance(&a, &b, opts).unwrap();
        assert_eq!(r1.distance, r2.distance);
        assert_eq!(r1.stats.trees_explored, r2.stats.trees_explored);
        assert_eq!(r1.stats.heuristic_calls, r2.stats.heuristic_calls);
        let k1: Vec<_> = r1.path.iter().map(|t| t.canonical_key()).collect();
        let k2: Vec<_> = r2.path.iter().map(|t| t.canonical_key()).collect();
        assert_eq!(k1, k2);
    }
}
