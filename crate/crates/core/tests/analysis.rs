mod common;

use common::{rel_err, shoebox};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use roomwave::analysis::{
    augment_speech, band_response, compare_report, dataset_stats, read_wav, schroeder_edc, third_octave_bands,
    third_octave_centers, AugmentOptions, Band, PairRecord,
};
use roomwave::geom::Vec3;
use roomwave::rng::stream;
use roomwave::signal::{ImpulseResponse, IrOrigin};

const FS: f64 = 48_000.0;

fn ir(samples: Vec<f64>) -> ImpulseResponse {
    ImpulseResponse::new(samples, FS, IrOrigin::Measured)
}

/// Gaussian noise under an exponential envelope that loses 60 dB of
/// energy in `rt60` seconds.
fn decaying_noise(rt60: f64, duration: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, 0);
    let k = 3.0 * 10f64.ln() / (rt60 * FS);
    (0..(duration * FS) as usize)
        .map(|i| rng.sample::<f64, _>(StandardNormal) * (-k * i as f64).exp())
        .collect()
}

#[test]
fn rt60_of_synthetic_decay() {
    for seed in [1, 2, 3] {
        let h = ir(decaying_noise(0.5, 1.5, seed));
        let rt = schroeder_edc(&h).unwrap().rt60.unwrap();
        assert!(rel_err(rt, 0.5) < 0.05, "seed {seed}: {rt}");
    }
    let clean: Vec<f64> = (0..FS as usize)
        .map(|i| (-3.0 * 10f64.ln() * i as f64 / (0.3 * FS)).exp())
        .collect();
    let rt = schroeder_edc(&ir(clean)).unwrap().rt60.unwrap();
    assert!(rel_err(rt, 0.3) < 0.01, "{rt}");
}

#[test]
fn rt60_ignores_gain() {
    let x = decaying_noise(0.4, 1.2, 5);
    let a = schroeder_edc(&ir(x.clone())).unwrap();
    let b = schroeder_edc(&ir(x.iter().map(|v| v * 2.0).collect())).unwrap();
    assert_eq!(a.edc_db, b.edc_db);
    assert_eq!(a.rt60, b.rt60);
    let c = schroeder_edc(&ir(x.iter().map(|v| v * 10.0).collect())).unwrap();
    assert!(rel_err(c.rt60.unwrap(), a.rt60.unwrap()) < 1e-9);
}

#[test]
fn short_decay_fails_fit() {
    let d = schroeder_edc(&ir(vec![1.0, 0.5])).unwrap();
    assert!(d.fit_failed);
    assert!(d.rt60.is_none());
    assert!(schroeder_edc(&ir(vec![0.0; 16])).is_err());
    assert!(schroeder_edc(&ir(vec![])).is_err());
}

#[test]
fn third_octave_grid() {
    let c = third_octave_centers(63.0, 400.0);
    let nominal = [63.0, 80.0, 100.0, 125.0, 160.0, 200.0, 250.0, 315.0, 400.0];
    assert_eq!(c.len(), nominal.len());
    for (a, b) in c.iter().zip(nominal) {
        assert!(rel_err(*a, b) < 0.03, "{a} vs {b}");
    }
    let bands = third_octave_bands(&c);
    for w in bands.windows(2) {
        assert!(rel_err(w[0].hi, w[1].lo) < 1e-12);
    }
}

#[test]
fn unit_impulse_is_zero_db_everywhere() {
    let bands = third_octave_bands(&third_octave_centers(50.0, 10_000.0));
    let r = band_response(&ir(vec![1.0]), &bands).unwrap();
    for l in r.level_db {
        assert!(l.abs() < 1e-9, "{l}");
    }
}

#[test]
fn tone_burst_peaks_in_its_band() {
    let n = 4800;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
            w * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / FS).sin()
        })
        .collect();
    let bands = third_octave_bands(&third_octave_centers(100.0, 10_000.0));
    let r = band_response(&ir(x), &bands).unwrap();
    let best = (0..bands.len()).max_by(|&a, &b| r.level_db[a].total_cmp(&r.level_db[b])).unwrap();
    assert!((bands[best].center - 1000.0).abs() < 1e-9);
}

#[test]
fn tiled_bands_partition_energy() {
    let x = decaying_noise(0.2, 0.3, 9);
    let total: f64 = x.iter().map(|v| v * v).sum();
    let mut edges = vec![0.0, 20.0];
    edges.extend(third_octave_centers(25.0, 16_000.0).iter().map(|c| c * 2f64.powf(1.0 / 6.0)));
    edges.push(FS / 2.0 + 1.0);
    let bands: Vec<Band> = edges
        .windows(2)
        .map(|w| Band {
            center: (w[0] * w[1]).sqrt(),
            lo: w[0],
            hi: w[1],
        })
        .collect();
    let e: f64 = band_response(&ir(x), &bands).unwrap().energy.iter().sum();
    assert!(rel_err(e, total) < 0.01, "{e} vs {total}");
}

#[test]
fn comparison_of_scaled_copies() {
    let x = decaying_noise(0.3, 0.5, 4);
    let bands = third_octave_bands(&third_octave_centers(63.0, 4000.0));
    let irs = vec![
        ("a".to_string(), ir(x.clone())),
        ("a_again".to_string(), ir(x.clone())),
        ("double".to_string(), ir(x.iter().map(|v| v * 2.0).collect())),
    ];
    let r = compare_report(&irs, &bands, (63.0, 4000.0)).unwrap();
    assert_eq!(r.mean_abs_diff(0, 1), 0.0);
    for k in 0..bands.len() {
        assert!((r.levels[2][k] - r.levels[0][k] - 20.0 * 2f64.log10()).abs() < 1e-9);
    }
    assert!((r.mean_abs_diff(0, 2) - 6.0206).abs() < 1e-3);
    assert_eq!(r.pairwise.len(), 3);
    let csv = r.levels_csv();
    assert!(csv.starts_with("band_hz,a_db,a_again_db,double_db,a_again_minus_a_db,double_minus_a_db\n"));
    assert_eq!(csv.lines().count(), bands.len() + 1);
    assert!(compare_report(&irs[..1], &bands, (63.0, 4000.0)).is_err());
    let other = vec![irs[0].clone(), ("b".into(), ImpulseResponse::new(x, 44_100.0, IrOrigin::Ga))];
    assert!(compare_report(&other, &bands, (63.0, 4000.0)).is_err());
}

#[test]
fn augmentation_adds_noise_at_requested_snr() {
    let clean = decaying_noise(10.0, 0.1, 1);
    let h = decaying_noise(0.2, 0.05, 2);
    let noise = decaying_noise(100.0, 0.5, 3);
    let opts = AugmentOptions {
        offset: Some(1234),
        snr_db: 15.0,
        seed: 0,
    };
    let y = augment_speech(&clean, &h, &noise, &opts).unwrap();
    let rev = augment_speech(&clean, &h, &vec![0.0; 10], &opts).unwrap();
    assert_eq!(y.len(), clean.len() + h.len() - 1);
    let p = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    let added: Vec<f64> = y.iter().zip(&rev).map(|(a, b)| a - b).collect();
    let snr = 10.0 * (p(&rev) / p(&added)).log10();
    assert!((snr - 15.0).abs() < 1e-9, "{snr}");
    assert!((added[0] / noise[1234] - added[1] / noise[1235]).abs() < 1e-9);

    let drawn = AugmentOptions {
        offset: None,
        seed: 77,
        ..opts
    };
    assert_eq!(
        augment_speech(&clean, &h, &noise, &drawn).unwrap(),
        augment_speech(&clean, &h, &noise, &drawn).unwrap()
    );
    assert!(augment_speech(&[], &h, &noise, &opts).is_err());
    assert!(augment_speech(&clean, &[], &noise, &opts).is_err());
    assert!(augment_speech(&clean, &h, &[], &opts).is_err());
}

fn brute_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len() + b.len() - 1)
        .map(|n| {
            let lo = n.saturating_sub(b.len() - 1);
            (lo..=n.min(a.len() - 1)).map(|i| a[i] * b[n - i]).sum()
        })
        .collect()
}

#[test]
fn wav_reader_handles_int_and_float() {
    let dir = tempfile::tempdir().unwrap();
    let int_path = dir.path().join("int.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 16_000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&int_path, spec).unwrap();
    for v in [0i16, 16384, -32768] {
        w.write_sample(v).unwrap();
    }
    w.finalize().unwrap();
    let r = read_wav(&int_path).unwrap();
    assert_eq!(r.sample_rate, 16_000.0);
    assert_eq!(r.samples, vec![0.0, 0.5, -1.0]);

    let stereo = dir.path().join("stereo.wav");
    let mut w = hound::WavWriter::create(&stereo, hound::WavSpec { channels: 2, ..spec }).unwrap();
    w.write_sample(0i16).unwrap();
    w.write_sample(0i16).unwrap();
    w.finalize().unwrap();
    assert!(read_wav(&stereo).is_err());
    assert!(read_wav(dir.path().join("missing.wav")).is_err());
}

#[test]
fn dataset_statistics_match_direct_computation() {
    let recs: Vec<PairRecord> = (0..30)
        .map(|i| {
            let f = i as f64;
            PairRecord {
                scene_id: format!("s{}", i % 3),
                source: Vec3::new(0.1 * f, 0.0, 1.0),
                receiver: Vec3::new(0.0, 0.2 * f, 1.0),
                scene_volume: (i % 2 == 0).then_some(30.0),
                rt60: (i % 3 != 0).then_some(0.4),
            }
        })
        .collect();
    let st = dataset_stats(&recs, 0.5).unwrap();
    for (i, d) in st.distances.iter().enumerate() {
        let f = i as f64;
        assert!((d - ((0.1 * f).powi(2) + (0.2 * f).powi(2)).sqrt()).abs() < 1e-12);
    }
    assert_eq!(st.histogram.counts.iter().sum::<usize>(), 30);
    for (b, &c) in st.histogram.counts.iter().enumerate() {
        let lo = st.histogram.start + b as f64 * 0.5;
        let n = st.distances.iter().filter(|&&d| d >= lo && d < lo + 0.5).count();
        let last = b + 1 == st.histogram.counts.len();
        assert!(c == n || last, "bin {b}");
    }
    assert_eq!(st.volume_rt60.len(), (0..30).filter(|i| i % 2 == 0 && i % 3 != 0).count());
    assert!(st.svg().starts_with("<svg"));
    assert!(dataset_stats(&[], 0.5).is_err());
    assert!((shoebox(2.0, 2.0, 2.0).volume().unwrap() - 8.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn edc_never_increases(x in prop::collection::vec(-1.0f64..1.0, 2..2000)) {
        prop_assume!(x.iter().any(|&v| v != 0.0));
        let d = schroeder_edc(&ir(x)).unwrap();
        prop_assert!(d.edc_db[0].abs() < 1e-12);
        for w in d.edc_db.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        if let Some(rt) = d.rt60 {
            prop_assert!(rt > 0.0);
        }
    }

    #[test]
    fn comparison_is_symmetric(
        a in prop::collection::vec(-1.0f64..1.0, 64..512),
        b in prop::collection::vec(-1.0f64..1.0, 64..512),
    ) {
        prop_assume!(a.iter().any(|&v| v != 0.0) && b.iter().any(|&v| v != 0.0));
        let bands = third_octave_bands(&third_octave_centers(200.0, 8000.0));
        let r = compare_report(&[("a".into(), ir(a)), ("b".into(), ir(b))], &bands, (200.0, 8000.0)).unwrap();
        prop_assert_eq!(r.mean_abs_diff(0, 1), r.mean_abs_diff(1, 0));
        prop_assert_eq!(r.mean_abs_diff(0, 0), 0.0);
        prop_assert!(r.mean_abs_diff(0, 1) >= 0.0);
    }

    #[test]
    fn noiseless_augmentation_is_convolution(
        n in 1usize..4096,
        m in 1usize..4096,
        seed in any::<u64>(),
    ) {
        let mut rng = stream(seed, 3);
        let clean: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = augment_speech(&clean, &h, &[0.0], &AugmentOptions::default()).unwrap();
        let want = brute_convolve(&clean, &h);
        prop_assert_eq!(y.len(), want.len());
        for (a, b) in y.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn augmentation_is_linear_in_the_clean_signal(
        x in prop::collection::vec(-1.0f64..1.0, 1..300),
        h in prop::collection::vec(-1.0f64..1.0, 1..300),
        k in -4.0f64..4.0,
    ) {
        let opts = AugmentOptions::default();
        let y = augment_speech(&x, &h, &[0.0], &opts).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * k).collect();
        let ys = augment_speech(&xs, &h, &[0.0], &opts).unwrap();
        for (a, b) in y.iter().zip(&ys) {
            prop_assert!((a * k - b).abs() < 1e-9);
        }
    }
}
