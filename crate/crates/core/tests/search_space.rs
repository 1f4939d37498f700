use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relnas::search_space::{
    decode, encode, random_arch, validate, ArchVector, Block, CellGenotype, CellType, GeneRole, Genotype,
    OperationKind, SearchSpaceScheme,
};
use relnas::Error;

fn random_genotype(rng: &mut ChaCha8Rng, scheme: &SearchSpaceScheme) -> Genotype {
    decode(&random_arch(rng, scheme), scheme).unwrap()
}

/// Gene vector built directly from a genotype's integer choices, without going
/// through `encode`.
fn integer_genes(g: &Genotype) -> Vec<f64> {
    [&g.normal, &g.reduction]
        .iter()
        .flat_map(|c| c.blocks.iter())
        .flat_map(|b| [b.pre1 as f64, b.op1.ordinal() as f64, b.pre2 as f64, b.op2.ordinal() as f64])
        .collect()
}

#[test]
fn genotypes_round_trip_through_encode() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for b in [1, 2, 4] {
        let scheme = SearchSpaceScheme::new(b).unwrap();
        for _ in 0..10_000 {
            let g = random_genotype(&mut rng, &scheme);
            assert_eq!(decode(&encode(&g, &scheme).unwrap(), &scheme).unwrap(), g);
        }
    }
}

#[test]
fn vectors_encode_to_their_midpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for b in [1, 2, 4] {
        let scheme = SearchSpaceScheme::new(b).unwrap();
        for _ in 0..10_000 {
            let v = random_arch(&mut rng, &scheme);
            let back = encode(&decode(&v, &scheme).unwrap(), &scheme).unwrap();
            let expected: Vec<f64> = v.as_slice().iter().map(|x| x.floor() + 0.5).collect();
            assert_eq!(back.as_slice(), expected.as_slice());
        }
    }
}

#[test]
fn encoded_genes_agree_with_integer_choices() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scheme = SearchSpaceScheme::new(4).unwrap();
    for _ in 0..1_000 {
        let g = random_genotype(&mut rng, &scheme);
        let expected: Vec<f64> = integer_genes(&g).iter().map(|k| k + 0.5).collect();
        assert_eq!(encode(&g, &scheme).unwrap().as_slice(), expected.as_slice());
    }
}

#[test]
fn three_block_cell_decodes_as_hand_wired() {
    let scheme = SearchSpaceScheme::new(3).unwrap();
    // Normal cell: node 2 = sep3(0) + max(1), node 3 = dil5(2) + id(0),
    // node 4 = avg(3) + sep5(2). Reduction cell mirrors it with other ops.
    let normal = [0.7, 3.4, 1.2, 0.0, 2.5, 6.999, 0.1, 2.0, 3.9, 1.5, 2.2, 4.0];
    let reduction = [1.0, 5.0, 0.0, 4.3, 1.99, 2.0, 2.0, 3.0, 0.0, 0.9, 3.5, 6.5];
    let genes: Vec<f64> = normal.iter().chain(&reduction).copied().collect();
    let g = decode(&ArchVector::new(genes, &scheme).unwrap(), &scheme).unwrap();

    use OperationKind::*;
    let expected_normal = CellGenotype::new(
        CellType::Normal,
        vec![
            Block::new(0, SepConv3, 1, MaxPool3),
            Block::new(2, DilConv5, 0, Identity),
            Block::new(3, AvgPool3, 2, SepConv5),
        ],
    )
    .unwrap();
    let expected_reduction = CellGenotype::new(
        CellType::Reduction,
        vec![
            Block::new(1, DilConv3, 0, SepConv5),
            Block::new(1, Identity, 2, SepConv3),
            Block::new(0, MaxPool3, 3, DilConv5),
        ],
    )
    .unwrap();
    assert_eq!(g.normal, expected_normal);
    assert_eq!(g.reduction, expected_reduction);

    let dag = g.normal.to_dag();
    assert_eq!(dag.node_count(), 6);
    assert_eq!(dag.in_degree(4), 2);
    assert_eq!(dag.topological_order().unwrap().last(), Some(&dag.output_node()));
    let dot = dag.to_dot();
    for label in ["sep_conv_3x3", "dil_conv_5x5", "identity", "avg_pool_3x3", "max_pool_3x3", "sep_conv_5x5"] {
        assert!(dot.contains(label), "{label} missing from\n{dot}");
    }
}

#[test]
fn out_of_range_gene_names_its_position() {
    let scheme = SearchSpaceScheme::new(1).unwrap();
    let err = ArchVector::new(vec![0.5, 0.5, 0.5, 7.0, 0.5, 0.5, 0.5, 0.5], &scheme).unwrap_err();
    assert!(matches!(err, Error::InvalidGene { position: 3, .. }), "{err:?}");
    let err = ArchVector::new(vec![2.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5], &scheme).unwrap_err();
    assert!(matches!(err, Error::InvalidGene { position: 0, .. }), "{err:?}");
}

#[test]
fn operation_frequencies_are_uniform() {
    let scheme = SearchSpaceScheme::new(4).unwrap();
    let op_positions: Vec<usize> =
        (0..scheme.len()).filter(|&p| scheme.slot(p).role == GeneRole::Operation).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; OperationKind::COUNT];
    let mut draws = 0usize;
    while draws < 70_000 {
        let v = random_arch(&mut rng, &scheme);
        for &p in &op_positions {
            counts[v.as_slice()[p].floor() as usize] += 1;
            draws += 1;
        }
    }
    let p = 1.0 / OperationKind::COUNT as f64;
    let n = draws as f64;
    let sigma = (n * p * (1.0 - p)).sqrt();
    let mut chi2 = 0.0;
    for (op, &c) in counts.iter().enumerate() {
        let dev = (c as f64 - n * p).abs();
        assert!(dev <= 3.0 * sigma, "op {op}: {c} draws, expected {:.0} +- {:.0}", n * p, 3.0 * sigma);
        chi2 += (c as f64 - n * p).powi(2) / (n * p);
    }
    // 6 degrees of freedom, 0.999 quantile.
    assert!(chi2 < 22.46, "chi-square {chi2}");
}

fn scheme_and_vector() -> impl Strategy<Value = (SearchSpaceScheme, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|b| {
        let scheme = SearchSpaceScheme::new(b).unwrap();
        let genes: Vec<_> = scheme
            .intervals()
            .map(|iv| (iv.lo..iv.hi).prop_filter("inside", move |x| iv.contains(*x)))
            .collect();
        (Just(scheme), genes)
    })
}

proptest! {
    #[test]
    fn decode_is_constant_inside_each_interval(
        (scheme, genes) in scheme_and_vector(),
        shifts in prop::collection::vec(0.0f64..1.0, 32),
    ) {
        let moved: Vec<f64> = genes
            .iter()
            .zip(&shifts)
            .map(|(x, s)| (x.floor() + s).min(x.floor() + 1.0 - 1e-12))
            .collect();
        let a = decode(&ArchVector::new(genes, &scheme).unwrap(), &scheme).unwrap();
        let b = decode(&ArchVector::new(moved, &scheme).unwrap(), &scheme).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn encode_of_decode_is_the_midpoint_form((scheme, genes) in scheme_and_vector()) {
        let v = ArchVector::new(genes.clone(), &scheme).unwrap();
        let back = encode(&decode(&v, &scheme).unwrap(), &scheme).unwrap();
        for (orig, mid) in genes.iter().zip(back.as_slice()) {
            prop_assert_eq!(*mid, orig.floor() + 0.5);
        }
        prop_assert!(validate(back.as_slice(), &scheme).unwrap().is_valid());
    }

    #[test]
    fn decoded_genotypes_are_valid_and_json_stable((scheme, genes) in scheme_and_vector()) {
        let g = decode(&ArchVector::new(genes, &scheme).unwrap(), &scheme).unwrap();
        prop_assert!(g.validate().is_ok());
        prop_assert_eq!(Genotype::from_json(&g.to_json()).unwrap(), g.clone());
        for cell in [&g.normal, &g.reduction] {
            prop_assert!(cell.to_dag().topological_order().is_some());
        }
    }
}
