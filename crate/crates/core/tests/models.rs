//! Model training, gradients and persistence through the public API.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sieve_core::ansfind::{AnsFindModel, MODEL_KIND as ANSFIND_KIND};
use sieve_core::bow::{BowExample, BowModel, MODEL_KIND as BOW_KIND};
use sieve_core::modelio::{ModelFile, ModelIoError};

fn examples(dim: usize, rng: &mut ChaCha8Rng) -> Vec<BowExample> {
    (0..10)
        .map(|i| BowExample {
            question: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            sentence: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            label: i % 3 == 0,
        })
        .collect()
}

#[test]
fn bow_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ex = examples(5, &mut rng);
    let batch: Vec<usize> = (0..ex.len()).collect();
    let mut model = BowModel::init(5, 7, 4);
    let (_, grad) = model.loss_and_grad(&ex, &batch);
    let h = 1e-5;
    for p in 0..4 {
        for _ in 0..6 {
            let i = rng.gen_range(0..model.params()[p].data.len());
            let orig = model.params()[p].data[i];
            model.params_mut()[p].data[i] = orig + h;
            let up = model.mean_loss(&ex);
            model.params_mut()[p].data[i] = orig - h;
            let down = model.mean_loss(&ex);
            model.params_mut()[p].data[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grad.params()[p].data[i];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-5, "param {p}[{i}]: {analytic} vs {numeric}");
        }
    }
}

#[test]
fn models_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let bow = BowModel::init(4, 3, 1);
    let af = AnsFindModel::init(4, 5, 0.05, 1);
    bow.save(dir.path().join("b.mdl")).unwrap();
    af.save(dir.path().join("a.mdl")).unwrap();
    assert_eq!(BowModel::load(dir.path().join("b.mdl")).unwrap(), bow);
    assert_eq!(AnsFindModel::load(dir.path().join("a.mdl")).unwrap(), af);
    assert_eq!(ModelFile::load(dir.path().join("b.mdl")).unwrap().kind, BOW_KIND);
    assert_eq!(ModelFile::load(dir.path().join("a.mdl")).unwrap().kind, ANSFIND_KIND);
    assert!(matches!(
        BowModel::load(dir.path().join("a.mdl")),
        Err(ModelIoError::Kind { .. })
    ));
}
