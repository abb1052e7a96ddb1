use hra_core::ann::{
    init_weights, loss, loss_and_gradient, metrics, train_on_observations, Topology, TrainedPredictor, TrainingConfig,
    TrainingData, WeightSet,
};
use hra_core::dataset::bundled_table2;
use hra_core::psf::PsfId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_data(rng: &mut ChaCha8Rng, n: usize, k: usize) -> TrainingData {
    let inputs = (0..n)
        .map(|_| (0..k).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let targets = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
    TrainingData::new(inputs, targets).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for net in 0..20u64 {
        let k = 2 + (net as usize % 7);
        let topology = Topology::new(k, 1 + (net as usize % 5) * 2).unwrap();
        let data = random_data(&mut rng, 10, k);
        let w = init_weights(topology, net + 100);
        let (_, grad) = loss_and_gradient(&w, &data);
        let g = grad.to_vec();
        let base = w.to_vec();
        let h = 1e-5;
        for i in 0..base.len() {
            let mut up = base.clone();
            let mut down = base.clone();
            up[i] += h;
            down[i] -= h;
            let lu = loss(&WeightSet::from_vec(topology, &up).unwrap(), &data);
            let ld = loss(&WeightSet::from_vec(topology, &down).unwrap(), &data);
            let numeric = (lu - ld) / (2.0 * h);
            let err = (numeric - g[i]).abs() / numeric.abs().max(g[i].abs()).max(1e-8);
            assert!(err < 1e-6, "net {net} param {i}: analytic {} numeric {numeric}", g[i]);
        }
    }
}

fn trained() -> TrainedPredictor {
    train_on_observations(&bundled_table2(), &PsfId::ALL, &TrainingConfig::default()).unwrap()
}

#[test]
fn case_study_predictor_fits_the_observations() {
    let obs = bundled_table2();
    let p = trained();
    assert_eq!(p.ensemble().len(), 5);
    assert!(p.diverged().is_empty());

    let ins3 = obs.get("Ins 3").unwrap();
    let h = p.predict(&ins3.psfs).unwrap().value();
    assert!((h - 0.151).abs() <= 0.05, "Ins 3 predicted {h}");

    let predicted: Vec<f64> = p
        .predict_observations(&obs)
        .unwrap()
        .iter()
        .map(|q| q.value())
        .collect();
    let ensemble = metrics(&predicted, &obs.heps()).unwrap().mse;
    let mut member: Vec<f64> = p.ensemble().iter().map(|m| m.final_loss).collect();
    member.sort_by(f64::total_cmp);
    let median = member[member.len() / 2];
    assert!(ensemble <= median + 1e-4, "ensemble {ensemble}, median member {median}");
    assert!(ensemble <= 1e-3);

    let back = TrainedPredictor::from_text(&p.to_text()).unwrap();
    assert_eq!(
        back.predict_observations(&obs).unwrap(),
        p.predict_observations(&obs).unwrap()
    );
}

#[test]
fn single_pair_is_learned_exactly() {
    let data = TrainingData::new(vec![vec![0.3, 0.9, 0.1]], vec![0.2]).unwrap();
    let topology = Topology::square(3).unwrap();
    let o = hra_core::ann::train_one(&data, topology, &TrainingConfig::default(), 3).unwrap();
    assert!(o.final_loss() < 1e-6, "{}", o.final_loss());
    assert!(o.loss_trace.windows(2).all(|w| w[1] <= w[0]));
}
