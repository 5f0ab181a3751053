use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treedist::generate::{all_trees, numbered_taxa, random_tree};
use treedist::maf::{
    enumerate_afs_raw, enumerate_mafs, is_agreement_forest, is_maximal, tbr_approx_cuts,
    tbr_distance, tbr_lower_bound_approx,
};
use treedist::oracle::exhaustive_maf;

#[test]
fn mafs_match_oracle_on_five_leaves() {
    let trees = all_trees(&numbered_taxa(5));
    for a in &trees {
        for b in &trees {
            let (min, mafs) = exhaustive_maf(a, b).unwrap();
            assert_eq!(tbr_distance(a, b).unwrap(), min - 1);
            assert_eq!(enumerate_mafs(a, b, 5).unwrap(), mafs, "{a} {b}");
        }
    }
}

#[test]
fn mafs_match_oracle_on_six_leaves() {
    let taxa = numbered_taxa(6);
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..150 {
        let a = random_tree(&taxa, &mut rng);
        let b = random_tree(&taxa, &mut rng);
        let (min, mafs) = exhaustive_maf(&a, &b).unwrap();
        assert_eq!(tbr_distance(&a, &b).unwrap(), min - 1);
        assert_eq!(enumerate_mafs(&a, &b, 6).unwrap(), mafs, "{a} {b}");
    }
}

#[test]
fn search_tree_size_and_forest_validity() {
    let taxa = numbered_taxa(12);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let a = random_tree(&taxa, &mut rng);
        let b = random_tree(&taxa, &mut rng);
        let d = tbr_distance(&a, &b).unwrap();
        for k in d..=d + 1 {
            let (afs, stats) = enumerate_afs_raw(&a, &b, k).unwrap();
            assert!(stats.leaves <= 4u64.pow(k as u32), "{} > 4^{k}", stats.leaves);
            for f in &afs {
                assert!(f.cuts() <= k);
                assert!(is_agreement_forest(&a, &b, &f.blocks));
            }
            for f in enumerate_mafs(&a, &b, k).unwrap() {
                assert!(is_maximal(&a, &b, &f.blocks));
            }
        }
    }
}

#[test]
fn approximation_brackets_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for i in 0..500 {
        let taxa = numbered_taxa(4 + i % 17);
        let a = random_tree(&taxa, &mut rng);
        let b = random_tree(&taxa, &mut rng);
        let d = tbr_distance(&a, &b).unwrap();
        let cuts = tbr_approx_cuts(&a, &b).unwrap();
        assert!(tbr_lower_bound_approx(&a, &b).unwrap() <= d);
        assert!(d <= cuts, "{a} {b}: {cuts} < {d}");
    }
}
