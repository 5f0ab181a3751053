use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treedist::eaf::replug_distance;
use treedist::generate::{numbered_taxa, random_tree, random_walk_pair};
use treedist::maf::tbr_distance;
use treedist::oracle::bfs_uspr;
use treedist::reduce::{reduce_pair, reduce_pair_with, ReduceOptions, ReductionKind};
use treedist::search::{uspr_distance, SearchOptions};
use treedist::{parse_newick, UTree};

fn three(a: &UTree, b: &UTree) -> (usize, usize, usize) {
    (tbr_distance(a, b).unwrap(), replug_distance(a, b).unwrap().0, bfs_uspr(a, b).unwrap())
}

#[test]
fn reduction_preserves_all_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let mut reduced_any = 0;
    for i in 0..200 {
        let taxa = numbered_taxa(rng.gen_range(5..=8));
        let (a, b) = if i % 2 == 0 {
            let steps = rng.gen_range(1..=3);
            random_walk_pair(&taxa, steps, &mut rng)
        } else {
            (random_tree(&taxa, &mut rng), random_tree(&taxa, &mut rng))
        };
        let before = three(&a, &b);
        let (ra, rb, receipt) = reduce_pair(&a, &b).unwrap();
        assert_eq!(three(&ra, &rb), before, "{a} {b}");
        assert_eq!(receipt.reduced_leaf_count, ra.leaf_count());
        assert!(receipt.reduced_leaf_count <= (28 * before.2).max(4));
        if receipt.reduced_leaf_count < receipt.original_leaf_count {
            reduced_any += 1;
        }
    }
    assert!(reduced_any > 50, "{reduced_any}");
}

#[test]
fn chain_reduction_preserves_spr_distance() {
    // a long common chain on both trees, with the ends rearranged
    let a = parse_newick("(x1,(c1,(c2,(c3,(c4,(c5,(c6,(y1,(x2,(y2,y3))))))))));").unwrap();
    let b = parse_newick("(x2,(c1,(c2,(c3,(c4,(c5,(c6,(y2,(x1,(y1,y3))))))))));")
        .unwrap()
        .with_taxa(a.taxa())
        .unwrap();
    let full = uspr_distance(&a, &b, SearchOptions::default()).unwrap().distance;
    let (ra, rb, receipt) = reduce_pair(&a, &b).unwrap();
    assert!(ra.leaf_count() < a.leaf_count());
    assert_eq!(uspr_distance(&ra, &rb, SearchOptions::default()).unwrap().distance, full);
    assert_eq!(tbr_distance(&ra, &rb).unwrap(), tbr_distance(&a, &b).unwrap());
    assert_eq!(replug_distance(&ra, &rb).unwrap().0, replug_distance(&a, &b).unwrap().0);
    let (na, nb, _) = reduce_pair_with(&a, &b, ReduceOptions { chains: false }).unwrap();
    assert_eq!(uspr_distance(&na, &nb, SearchOptions::default()).unwrap().distance, full);
    assert!(receipt.steps.iter().any(|s| s.kind == ReductionKind::Chain));
    assert!(na.leaf_count() > ra.leaf_count());
}

#[test]
fn chain_reduction_on_random_walks() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let taxa = numbered_taxa(14);
    let mut chains = 0;
    for _ in 0..30 {
        let (a, b) = random_walk_pair(&taxa, 2, &mut rng);
        let full = uspr_distance(&a, &b, SearchOptions::default()).unwrap().distance;
        let (ra, rb, receipt) = reduce_pair(&a, &b).unwrap();
        if receipt.steps.iter().any(|s| s.kind == ReductionKind::Chain) {
            chains += 1;
        }
        assert_eq!(uspr_distance(&ra, &rb, SearchOptions::default()).unwrap().distance, full, "{a} {b}");
        assert_eq!(tbr_distance(&ra, &rb).unwrap(), tbr_distance(&a, &b).unwrap());
    }
    eprintln!("{chains} of 30 pairs used a chain reduction");
}
