use lacon::model::{forward_deterministic, forward_stochastic, Hyper, ParameterStore, UnitFeatureSet};
use lacon::numerics::RngStream;

/// At large concentration the averaged Dirichlet draw sits on its mean,
/// which is the deterministic sparsemax weight vector.
#[test]
fn stochastic_weights_approach_sparsemax() {
    let hyper = Hyper {
        d_in: 3,
        global_dim: 2,
        embed_hidden: 4,
        embed_dim: 3,
        pred_hidden1: 5,
        pred_hidden2: 4,
        grid: 2,
        c_conc: 1e3,
        ..Hyper::default()
    };
    for seed in 0..5 {
        let mut rng = RngStream::new(seed, 31);
        let store = ParameterStore::init(hyper.clone(), &mut rng).unwrap();
        let rows = (0..6).map(|_| (0..3).map(|_| rng.range(-1.5, 1.5)).collect()).collect();
        let state = UnitFeatureSet::from_rows(rows, vec![rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)]);
        let (_, det) = forward_deterministic(&state, &store).unwrap();
        let (_, sto, _) = forward_stochastic(&state, &store, &mut RngStream::new(seed, 32), 10_000).unwrap();
        let gap = det.z.values().iter().zip(sto.z.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 0.02, "seed {seed}: L-inf gap {gap}");
    }
}
