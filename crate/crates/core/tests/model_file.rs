use proptest::prelude::*;
use skillmem::baselines::{RnnModel, RnnVariant};
use skillmem::linalg::Matrix;
use skillmem::model_file::{load_model, read_model, save_model, write_model, ModelFileError, StoredModel, MODEL_MAGIC};
use skillmem::tpc::{Activation, TpcModel};

fn tpc() -> StoredModel<f64> {
    StoredModel::Tpc(TpcModel::init(5, 3, Activation::Tanh, 4))
}

fn rnn() -> StoredModel<f64> {
    StoredModel::Rnn(RnnModel::init(4, 3, 2, RnnVariant::SensoryToMotor, 9))
}

#[test]
fn tpc_round_trip_is_exact() {
    let m = tpc();
    assert_eq!(read_model::<f64>(&write_model(&m)).unwrap(), m);
    let linear = StoredModel::Tpc(TpcModel::init(3, 7, Activation::Linear, 1));
    assert_eq!(read_model::<f64>(&write_model(&linear)).unwrap(), linear);
}

#[test]
fn rnn_round_trip_is_exact() {
    let mut m = RnnModel::<f64>::init(4, 3, 2, RnnVariant::SensorimotorToSensorimotor, 2);
    m.b_h = vec![0.1, -1e-300, 3.5, f64::MIN_POSITIVE];
    let m = StoredModel::Rnn(m);
    assert_eq!(read_model::<f64>(&write_model(&m)).unwrap(), m);
    assert_eq!(read_model::<f64>(&write_model(&rnn())).unwrap(), rnn());
}

#[test]
fn f32_round_trip_is_exact() {
    let m = StoredModel::Tpc(TpcModel::<f32>::init(6, 2, Activation::Tanh, 3));
    assert_eq!(read_model::<f32>(&write_model(&m)).unwrap(), m);
}

#[test]
fn file_round_trip() {
    let path = std::env::temp_dir().join(format!("skillmem-model-{}.txt", std::process::id()));
    save_model(&path, &rnn()).unwrap();
    assert_eq!(load_model::<f64>(&path).unwrap(), rnn());
    std::fs::remove_file(&path).unwrap();
    assert!(matches!(load_model::<f64>(&path), Err(ModelFileError::Io(_))));
}

#[test]
fn header_errors_name_the_line() {
    let text = write_model(&tpc());
    let e = read_model::<f64>(&text.replacen(MODEL_MAGIC, "other-model 1", 1)).unwrap_err();
    assert_eq!((e.line, e.field.as_str()), (1, "magic"));

    let e = read_model::<f64>(&text.replacen("kind tpc", "kind hopfield", 1)).unwrap_err();
    assert_eq!((e.line, e.field.as_str()), (2, "kind"));

    let e = read_model::<f32>(&text).unwrap_err();
    assert_eq!((e.line, e.field.as_str()), (3, "scalar"));

    let e = read_model::<f64>(&text.replacen("activation tanh", "activation relu", 1)).unwrap_err();
    assert_eq!(e.field, "activation");
}

#[test]
fn body_errors_are_reported() {
    let text = write_model(&tpc());
    let e = read_model::<f64>(&text.replacen("matrix W_F 3 5", "matrix W_F 3 4", 1)).unwrap_err();
    assert_eq!(e.field, "matrix");

    let e = read_model::<f64>(&text.replace("\nend\n", "\n")).unwrap_err();
    assert_eq!(e.field, "end");

    let e = read_model::<f64>(&format!("{text}extra\n")).unwrap_err();
    assert_eq!(e.field, "end");
    assert!(e.message.contains("trailing"));

    let truncated: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
    assert!(read_model::<f64>(&truncated).is_err());
    assert!(read_model::<f64>("").is_err());
}

proptest! {
    #[test]
    fn random_weights_round_trip(h in 1usize..5, d in 1usize..5, seed in 0u64..1000, scale in -30i32..30) {
        let f = 10f64.powi(scale);
        let w_h = Matrix::from_fn(h, h, |i, j| f * ((seed as f64 + 1.0) * (i * 7 + j) as f64).sin());
        let w_f = Matrix::from_fn(d, h, |i, j| -f * ((seed as f64 + 2.0) * (i * 5 + j) as f64).cos());
        let m = StoredModel::Tpc(TpcModel::new(w_h, w_f, Activation::Tanh).unwrap());
        prop_assert_eq!(read_model::<f64>(&write_model(&m)).unwrap(), m);
    }
}
