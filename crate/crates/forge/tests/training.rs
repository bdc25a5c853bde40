//! Training on rendered illusion data.

use illusion_forge::build::render_planned;
use illusion_forge::preprocess::{features, PreprocSpec};
use illusion_forge_core::dataset::{plan_build, DatasetSpec, Split};
use illusion_forge_core::fusion::{FusionMode, SampleOrigin, Strategy};
use illusion_forge_core::trainer::{binary_mode, binary_origin, evaluate, train, MlpConfig, Samples};

/// Train and test samples of a balanced illusion-only build, each image as
/// both a binary origin and a fusion origin.
fn rendered(pairs: u32, seed: u64, size: u32) -> [(Samples, Samples); 2] {
    let spec = DatasetSpec { pairs_per_family: pairs, master_seed: seed, ..DatasetSpec::default() };
    let dim = (size * size) as usize;
    let mut out = [(Samples::new(dim), Samples::new(dim)), (Samples::new(dim), Samples::new(dim))];
    for p in plan_build(&spec).unwrap() {
        let x = features(&render_planned(&p).unwrap(), PreprocSpec { size }).unwrap();
        let positive = p.record.label == 1;
        let train_side = p.record.split == Split::Train;
        for (pair, origin) in out.iter_mut().zip([binary_origin(positive), SampleOrigin::Illusion(positive)]) {
            let side = if train_side { &mut pair.0 } else { &mut pair.1 };
            side.push(&x, origin);
        }
    }
    out
}

#[test]
fn depth_one_fits_two_thousand_samples() {
    let [(train_set, test_set), _] = rendered(250, 3, 56);
    let all = {
        let mut s = train_set.clone();
        for i in 0..test_set.len() {
            s.push(test_set.row(i), test_set.origins[i]);
        }
        s
    };
    assert_eq!(all.len(), 2500);
    let two_thousand: Vec<usize> = (0..2000).collect();
    let data = all.select(&two_thousand);
    let cfg = MlpConfig { epochs: 20, seed: 1, ..MlpConfig::new(data.dim, vec![64], binary_mode()) };
    let (net, run) = train(&cfg, &data, None).unwrap();
    let acc = evaluate(&net, &data, binary_mode()).unwrap().binary_accuracy().unwrap();
    assert!(acc > 0.95, "train accuracy {acc}");
    let losses: Vec<f64> = run.epochs.iter().map(|e| e.train_loss).collect();
    assert!(losses.last() < losses.first(), "{losses:?}");
}

#[test]
fn single_mode_agrees_with_binary_head() {
    let [(bin_train, bin_test), (fus_train, fus_test)] = rendered(100, 8, 32);
    let single = FusionMode::new(Strategy::Single, 10);
    let mut accs = Vec::new();
    for (mode, train_set, test_set) in [(binary_mode(), &bin_train, &bin_test), (single, &fus_train, &fus_test)] {
        let cfg = MlpConfig { epochs: 15, seed: 4, ..MlpConfig::new(train_set.dim, vec![64], mode) };
        let (net, _) = train(&cfg, train_set, None).unwrap();
        accs.push(evaluate(&net, test_set, mode).unwrap().binary_accuracy().unwrap());
    }
    assert!((accs[0] - accs[1]).abs() < 0.05, "binary {} vs single {}", accs[0], accs[1]);
}

#[test]
fn same_seed_replays_bit_for_bit() {
    let [(train_set, test_set), _] = rendered(20, 5, 32);
    let cfg = MlpConfig { epochs: 4, seed: 11, ..MlpConfig::new(train_set.dim, vec![32, 16], binary_mode()) };
    let (a, run_a) = train(&cfg, &train_set, Some(&test_set)).unwrap();
    let (b, run_b) = train(&cfg, &train_set, Some(&test_set)).unwrap();
    assert_eq!(run_a, run_b);
    assert_eq!(a.digest(), b.digest());
    let bits = |r: &illusion_forge_core::trainer::TrainRun| r.epochs.iter().map(|e| e.train_loss.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&run_a), bits(&run_b));
}
