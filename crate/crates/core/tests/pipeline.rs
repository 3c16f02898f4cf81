use fugnn_core::eigen::{full_dense_eigendecomposition, SpectralBasis};
use fugnn_core::experiment::{compute_basis, default_operator, run_seeds, EigenConfig};
use fugnn_core::graph::{generate_sbm, load_graph, make_splits, read_masks, write_edge_list, write_masks, write_node_table, SbmConfig};
use fugnn_core::model::{Architecture, ModelConfig};
use fugnn_core::trainer::TrainConfig;

fn small_sbm(seed: u64) -> SbmConfig {
    SbmConfig {
        n: 150,
        p_in: 0.1,
        p_out: 0.01,
        seed,
        ..Default::default()
    }
}

#[test]
fn written_graph_loads_back_identically() {
    let g = generate_sbm(&small_sbm(2)).unwrap();
    let splits = make_splits(g.labels(), 4).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let (e, v, m) = (tmp.path().join("e.txt"), tmp.path().join("v.csv"), tmp.path().join("m.json"));
    write_edge_list(&g, &e).unwrap();
    write_node_table(&g, &v).unwrap();
    write_masks(&splits, &m).unwrap();

    let back = load_graph(&e, &v, g.sensitive_name(), "label").unwrap();
    assert_eq!(back.n(), g.n());
    assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    assert_eq!(back.labels(), g.labels());
    assert_eq!(back.sensitive(), g.sensitive());
    assert_eq!(back.features(), g.features());
    assert_eq!(read_masks(&m, g.n()).unwrap(), splits);
}

#[test]
fn basis_agrees_with_dense_and_survives_serialization() {
    let g = generate_sbm(&small_sbm(3)).unwrap();
    let op = default_operator(&g);
    let basis = compute_basis(&op, 6, &EigenConfig::default()).unwrap();
    let dense = full_dense_eigendecomposition(&op.matrix().to_dense()).unwrap();
    for (a, b) in basis.eigenvalues().iter().zip(dense.eigenvalues()) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    // the normalized adjacency with self loops always has 1 as its top eigenvalue
    assert!((basis.eigenvalues()[0] - 1.0).abs() < 1e-10);
    let back = SpectralBasis::read_binary(basis.to_binary().as_slice()).unwrap();
    assert_eq!(back.eigenvalues(), basis.eigenvalues());
    assert_eq!(back.eigenvectors(), basis.eigenvectors());
}

#[test]
fn multi_seed_training_is_reproducible_and_aggregates_every_seed() {
    let g = generate_sbm(&small_sbm(5)).unwrap();
    let op = default_operator(&g);
    let basis = compute_basis(&op, 4, &EigenConfig::default()).unwrap();
    let model = ModelConfig {
        hidden: 8,
        d_e: 8,
        heads: 2,
        d_ff: 16,
        ..Default::default()
    };
    let cfg = TrainConfig {
        epochs: 20,
        ..Default::default()
    };
    let seeds = [0, 1, 2];
    let (a, pa) = run_seeds(&g, &basis, &op, Architecture::Fugnn, &model, &cfg, &seeds).unwrap();
    let (b, pb) = run_seeds(&g, &basis, &op, Architecture::Fugnn, &model, &cfg, &seeds).unwrap();
    assert_eq!(a, b);
    assert_eq!(pa, pb);
    assert_eq!(a.runs.len(), 3);
    assert_eq!(a.aggregate.accuracy.count, 3);
    for run in &a.runs {
        assert!((0.0..=1.0).contains(&run.test.accuracy));
    }
    let mean = a.runs.iter().map(|r| r.test.accuracy).sum::<f64>() / 3.0;
    assert!((a.aggregate.accuracy.mean - mean).abs() < 1e-15);

    let (base, _) = run_seeds(&g, &basis, &op, Architecture::Baseline { steps: 10 }, &model, &cfg, &seeds).unwrap();
    assert_eq!(base.runs.len(), 3);
}
