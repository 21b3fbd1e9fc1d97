use super::*;
use ndarray::array;
use rand::Rng;

fn gaussian_rows(n: usize, mean: [f64; 2], sd: f64, seed: u64) -> Table {
    let mut r = rng::stream(seed, 77);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![mean[0] + sd * rng::standard_normal(&mut r), mean[1] + sd * rng::standard_normal(&mut r)])
        .collect();
    Table::from_rows(&rows, vec![1; n]).unwrap()
}

fn small_cfg() -> GanConfig {
    GanConfig {
        epochs: 3,
        generator_dims: vec![8],
        discriminator_dims: vec![8],
        embedding_dim: 4,
        batch_size: 16,
        ..GanConfig::default()
    }
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

#[test]
fn default_config_matches_tuned_values() {
    let cfg = GanConfig::default();
    assert_eq!(cfg.epochs, 200);
    assert_eq!(cfg.generator_dims, vec![32, 288]);
    assert_eq!(cfg.discriminator_dims, vec![224, 192]);
    assert_eq!(cfg.embedding_dim, 416);
    assert_eq!(cfg.generator_lr, 1.091e-3);
    assert_eq!(cfg.discriminator_lr, 5.402e-3);
    assert!(cfg.validate().is_ok());
}

#[test]
fn default_architecture_shapes() {
    let t = gaussian_rows(20, [0.0, 0.0], 1.0, 1);
    let cfg = GanConfig { epochs: 1, ..GanConfig::default() };
    let m = train_gan(&t, &cfg).unwrap();
    let widths: Vec<usize> = m.generator.layers.iter().map(|l| l.weights.ncols()).collect();
    assert_eq!(m.generator.input_width(), 416);
    assert_eq!(widths, vec![32, 288, 2]);
    let widths: Vec<usize> = m.discriminator.layers.iter().map(|l| l.weights.ncols()).collect();
    assert_eq!(m.discriminator.input_width(), 2);
    assert_eq!(widths, vec![224, 192, 1]);
}

#[test]
fn invalid_configs_rejected() {
    let t = gaussian_rows(10, [0.0, 0.0], 1.0, 1);
    for cfg in [
        GanConfig { epochs: 0, ..small_cfg() },
        GanConfig { batch_size: 1, ..small_cfg() },
        GanConfig { generator_lr: 0.0, ..small_cfg() },
        GanConfig { discriminator_dims: vec![0], ..small_cfg() },
    ] {
        assert!(matches!(train_gan(&t, &cfg), Err(GanError::InvalidConfig(_))));
    }
    let mixed = Table::from_rows(&[vec![0.0], vec![1.0]], vec![0, 1]).unwrap();
    assert!(matches!(train_gan(&mixed, &small_cfg()), Err(GanError::MixedLabels)));
    let single = Table::from_rows(&[vec![0.0]], vec![1]).unwrap();
    assert!(matches!(train_gan(&single, &small_cfg()), Err(GanError::TooFewRows(1))));
}

#[test]
fn one_epoch_full_batch_takes_one_step_each() {
    let t = gaussian_rows(30, [0.0, 0.0], 1.0, 2);
    let cfg = GanConfig { epochs: 1, batch_size: 30, ..small_cfg() };
    let m = train_gan(&t, &cfg).unwrap();
    assert_eq!(m.discriminator_steps, 1);
    assert_eq!(m.generator_steps, 1);
    assert_eq!(m.loss_history.len(), 1);
}

#[test]
fn partial_last_batch_is_used() {
    let t = gaussian_rows(33, [0.0, 0.0], 1.0, 2);
    let cfg = GanConfig { epochs: 2, batch_size: 16, ..small_cfg() };
    let m = train_gan(&t, &cfg).unwrap();
    assert_eq!(m.discriminator_steps, 6);
}

#[test]
fn loss_gradients_match_finite_differences() {
    let mut r = rng::stream(4, 4);
    let cfg = GanConfig { generator_dims: vec![5, 4], discriminator_dims: vec![6, 3], embedding_dim: 3, ..small_cfg() };
    let gen = build_generator(&cfg, 2, &mut r);
    let disc = build_discriminator(&cfg, 2, &mut r);
    let real = Array2::from_shape_simple_fn((5, 2), || r.random_range(-2.0..2.0));
    let noise = Array2::from_shape_simple_fn((4, 3), || rng::standard_normal(&mut r));
    let fake = gen.forward(&noise).unwrap().0;
    let h = 1e-5;

    let (_, d_grads) = discriminator_loss(&disc, &real, &fake).unwrap();
    for l in 0..disc.layers.len() {
        for (idx, _) in disc.layers[l].weights.indexed_iter() {
            let mut p = disc.clone();
            p.layers[l].weights[idx] += h;
            let mut m = disc.clone();
            m.layers[l].weights[idx] -= h;
            let numeric = (discriminator_loss(&p, &real, &fake).unwrap().0 - discriminator_loss(&m, &real, &fake).unwrap().0) / (2.0 * h);
            assert!(relative_error(d_grads.weights[l][idx], numeric) < 1e-4);
        }
    }

    let (_, g_grads) = generator_loss(&gen, &disc, &noise).unwrap();
    for l in 0..gen.layers.len() {
        for j in 0..gen.layers[l].bias.len() {
            let mut p = gen.clone();
            p.layers[l].bias[j] += h;
            let mut m = gen.clone();
            m.layers[l].bias[j] -= h;
            let numeric = (generator_loss(&p, &disc, &noise).unwrap().0 - generator_loss(&m, &disc, &noise).unwrap().0) / (2.0 * h);
            assert!(relative_error(g_grads.bias[l][j], numeric) < 1e-4);
        }
    }
}

#[test]
fn training_is_deterministic() {
    let t = gaussian_rows(40, [1.0, -1.0], 0.5, 3);
    let a = train_gan(&t, &small_cfg()).unwrap();
    let b = train_gan(&t, &small_cfg()).unwrap();
    assert_eq!(a, b);
    assert_eq!(sample_synthetic(&a, 25, 9).unwrap(), sample_synthetic(&b, 25, 9).unwrap());
    let c = train_gan(&t, &GanConfig { seed: 1, ..small_cfg() }).unwrap();
    assert_ne!(a.loss_history, c.loss_history);
}

#[test]
fn sampling_edges() {
    let t = gaussian_rows(40, [0.0, 3.0], 0.5, 5);
    let m = train_gan(&t, &small_cfg()).unwrap();
    let empty = sample_synthetic(&m, 0, 1).unwrap();
    assert_eq!(empty.row_count(), 0);
    assert_eq!(empty.feature_names(), t.feature_names());
    let s = sample_synthetic(&m, 500, 1).unwrap();
    assert!(s.labels().iter().all(|&l| l == 1));
    for j in 0..2 {
        let col = t.features().column(j);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(s.features().column(j).iter().all(|&v| v >= lo && v <= hi));
    }
}

#[test]
fn discriminator_output_is_a_probability() {
    let t = gaussian_rows(40, [0.0, 0.0], 1.0, 6);
    let m = train_gan(&t, &small_cfg()).unwrap();
    let probe = array![[0.0, 0.0], [1e3, -1e3], [-50.0, 50.0]];
    let (p, _) = m.discriminator.forward(&probe).unwrap();
    assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    assert!(m.loss_history.iter().all(|l| l.gen_loss.is_finite() && l.disc_loss.is_finite()));
}

#[test]
fn model_json_round_trip() {
    let t = gaussian_rows(20, [0.0, 0.0], 1.0, 7);
    let m = train_gan(&t, &GanConfig { epochs: 1, ..small_cfg() }).unwrap();
    let back = GanModel::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(back, m);
    let mut broken = m.clone();
    broken.feature_names.push("extra".into());
    assert!(GanModel::from_json(&broken.to_json().unwrap()).is_err());
}

#[test]
fn fidelity_examples() {
    let t = gaussian_rows(50, [0.0, 0.0], 1.0, 8);
    let same = fidelity_report(&t, &t).unwrap();
    assert!(same.mean_gaps.iter().chain(&same.std_gaps).all(|&g| g == 0.0));
    assert_eq!(same.max_correlation_gap, 0.0);

    let shifted = Table::new(t.feature_names().to_vec(), t.features() + 1.0, t.labels().to_vec()).unwrap();
    let r = fidelity_report(&t, &shifted).unwrap();
    assert!(r.mean_gaps.iter().all(|&g| (g - 1.0).abs() < 1e-12));
    assert!(r.std_gaps.iter().all(|&g| g < 1e-12));
    assert!(r.max_correlation_gap < 1e-12);

    let other = Table::from_rows(&[vec![0.0]], vec![1]).unwrap();
    assert!(fidelity_report(&t, &other).is_err());
}

#[test]
fn toy_gaussian_means_recovered() {
    let t = gaussian_rows(500, [0.0, 3.0], 0.5, 10);
    let cfg = GanConfig { epochs: 60, seed: 3, ..GanConfig::default() };
    let m = train_gan(&t, &cfg).unwrap();
    let s = sample_synthetic(&m, 2000, 1).unwrap();
    let report = fidelity_report(&t, &s).unwrap();
    assert!(report.max_mean_gap < 0.25, "{report:?}");
}
