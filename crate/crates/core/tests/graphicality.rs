use p0dp::denoise::{denoise_l1, ORACLE_MAX_N};
use p0dp::graph::{is_bigraphical, DirectedGraph};
use p0dp::IntegerBiSequence;
use proptest::prelude::*;

fn digraph() -> impl Strategy<Value = DirectedGraph> {
    (2usize..12).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
            let edges = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && bits[i * n + j]);
            DirectedGraph::from_edges(n, edges.collect::<Vec<_>>()).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn realized_sequences_are_graphical(g in digraph()) {
        let d = g.bi_degree_sequence().to_integer();
        prop_assert!(is_bigraphical(d.out(), d.inn()));
        let r = denoise_l1(&d);
        prop_assert_eq!(r.l1_cost, 0);
        prop_assert_eq!(r.sequence.to_integer(), d);
    }

    #[test]
    fn unbalanced_sums_are_not_graphical(g in digraph(), k in 0usize..12) {
        let mut d = g.bi_degree_sequence().to_integer().values;
        let n = d.len() / 2;
        let k = k % n;
        if d[k] > 0 {
            d[k] -= 1;
            prop_assert!(!is_bigraphical(&d[..n], &d[n..]));
        }
    }

    #[test]
    fn denoising_is_idempotent(values in proptest::collection::vec(-5i64..20, 4..30)) {
        let mut values = values;
        if values.len() % 2 == 1 { values.pop(); }
        let z = IntegerBiSequence::new(values).unwrap();
        let once = denoise_l1(&z);
        prop_assert!(once.sequence.is_graphical());
        let twice = denoise_l1(&once.sequence.to_integer());
        prop_assert_eq!(twice.l1_cost, 0);
        prop_assert_eq!(&twice.sequence, &once.sequence);
        let cost: u64 = z.values.iter().zip(&once.sequence.to_integer().values).map(|(a, b)| (a - b).unsigned_abs()).sum();
        prop_assert_eq!(cost, once.l1_cost);
        if z.n() > ORACLE_MAX_N { prop_assert!(!once.exact); }
    }
}
