use proptest::prelude::*;
use regretnet_core::rng::{self, streams};
use regretnet_core::valuations::{bundle_value, expected_utility_value, project_capped_simplex, SettingId, SettingSpec, ValuationClass};

fn spec(id: SettingId) -> SettingSpec {
    SettingSpec::from_id(id).unwrap()
}

#[test]
fn supports_of_named_settings() {
    let mut rng = rng::stream(3, streams::TEST_DATA);
    let one = spec(SettingId::I).sample_batch(1000, &mut rng);
    assert!(one.data().iter().all(|v| (0.0..=1.0).contains(v)));
    let two = spec(SettingId::II).sample_batch(1000, &mut rng);
    for r in 0..two.rows() {
        let row = two.row(r);
        assert!((4.0..=16.0).contains(&row[0]) && (4.0..=7.0).contains(&row[1]));
    }
    let five = spec(SettingId::V).sample_batch(10_000, &mut rng);
    assert!(five.data().iter().all(|v| (2.0..=3.0).contains(v)));
}

#[test]
fn triangle_draws() {
    let mut rng = rng::stream(4, streams::TEST_DATA);
    let b = spec(SettingId::III).sample_batch(100_000, &mut rng);
    let mut mean = 0.0;
    for r in 0..b.rows() {
        let row = b.row(r);
        assert!(row[0] >= 0.0 && row[1] >= 0.0 && row[0] + row[1] <= 1.0);
        mean += row[0];
    }
    mean /= b.rows() as f64;
    assert!((mean - 1.0 / 3.0).abs() < 0.01, "{mean}");
}

#[test]
fn complement_bundles_follow_generative_rule() {
    let s = spec(SettingId::VII);
    assert_eq!(s.width(), 3);
    let mut rng = rng::stream(5, streams::TEST_DATA);
    let b = s.sample_batch(5000, &mut rng);
    for r in 0..b.rows() {
        for i in 0..2 {
            let blk = &b.row(r)[i * 3..i * 3 + 3];
            let c = blk[2] - blk[0] - blk[1];
            assert!((-1.0..=1.0).contains(&c));
            assert!(s.in_support(i, blk, 1e-12));
        }
    }
}

#[test]
fn seeded_streams_are_reproducible() {
    let s = spec(SettingId::IX);
    let a = s.sample_batch(50, &mut rng::stream(9, streams::TRAIN_DATA));
    let b = s.sample_batch(50, &mut rng::stream(9, streams::TRAIN_DATA));
    let c = s.sample_batch(50, &mut rng::stream(9, streams::TEST_DATA));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn empirical_means_within_three_sigma() {
    let ids = [
        SettingId::I,
        SettingId::II,
        SettingId::IV,
        SettingId::V,
        SettingId::VI,
        SettingId::IX,
        SettingId::X,
        SettingId::XI,
        SettingId::SymmetricUniform,
        SettingId::AsymmetricUniform,
    ];
    for id in ids {
        let s = spec(id);
        let w = s.width();
        let count = 1_000_000 / s.row_width().max(1) * 2;
        let b = s.sample_batch(count, &mut rng::stream(21, streams::TEST_DATA));
        for i in 0..s.n {
            for j in 0..w {
                let col: Vec<f64> = (0..b.rows()).map(|r| b.row(r)[i * w + j]).collect();
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
                let se = (var / col.len() as f64).sqrt();
                let target = s.mean(i, j);
                assert!((mean - target).abs() < 3.0 * se, "{id:?} bidder {i} item {j}: {mean} vs {target}");
            }
        }
    }
}

#[test]
fn irregular_mass_split() {
    let s = spec(SettingId::Irregular);
    let b = s.sample_batch(100_000, &mut rng::stream(13, streams::TEST_DATA));
    let total = b.data().len() as f64;
    let low = b.data().iter().filter(|v| **v <= 3.0).count() as f64;
    assert!(b.data().iter().all(|v| (0.0..=8.0).contains(v)));
    let sigma = (total * 0.75 * 0.25).sqrt();
    assert!((low - 0.75 * total).abs() < 3.0 * sigma, "{low} of {total}");
}

#[test]
fn bundle_values() {
    let v = [0.2, 0.5];
    assert!((bundle_value(ValuationClass::Additive, &v, 0b11) - 0.7).abs() < 1e-15);
    assert_eq!(bundle_value(ValuationClass::UnitDemand, &v, 0b11), 0.5);
    for class in [ValuationClass::Additive, ValuationClass::UnitDemand, ValuationClass::Combinatorial] {
        assert_eq!(bundle_value(class, &[1.0, 2.0, 4.0], 0), 0.0);
    }
    assert_eq!(bundle_value(ValuationClass::Combinatorial, &[1.0, 2.0, 4.0], 0b11), 4.0);
}

#[test]
fn expected_utility_values() {
    assert_eq!(expected_utility_value(&[0.3, 0.9], &[0.0, 0.0]).unwrap(), 0.0);
    assert!((expected_utility_value(&[1.0, 1.0], &[0.3, 0.4]).unwrap() - 0.7).abs() < 1e-15);
    let third = 1.0 / 3.0;
    let u = expected_utility_value(&[1.0, 2.0, 4.0], &[third; 3]).unwrap();
    assert!((u - 7.0 / 3.0).abs() < 1e-12);
    assert!(expected_utility_value(&[1.0], &[0.5, 0.5]).is_err());
}

proptest! {
    #[test]
    fn capped_simplex_projection_is_feasible_and_idempotent(a in -2f64..2.0, b in -2f64..2.0) {
        let mut x = [a, b];
        project_capped_simplex(&mut x);
        prop_assert!(x[0] >= 0.0 && x[1] >= 0.0 && x[0] + x[1] <= 1.0 + 1e-12);
        let mut y = x;
        project_capped_simplex(&mut y);
        prop_assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
    }

    #[test]
    fn projection_lands_in_support(seed in 0u64..1000, scale in 0.5f64..4.0) {
        for id in [SettingId::I, SettingId::II, SettingId::III, SettingId::V, SettingId::VII, SettingId::VIII] {
            let s = spec(id);
            let mut rng = rng::stream(seed, streams::MISREPORT_INIT);
            let mut p = s.sample(&mut rng);
            for v in &mut p.values {
                *v = *v * scale - 1.5;
            }
            let w = s.width();
            for i in 0..s.n {
                let blk = &mut p.values[i * w..(i + 1) * w];
                s.project(i, blk);
                prop_assert!(s.in_support(i, blk, 1e-12), "{:?}", id);
            }
        }
    }
}
