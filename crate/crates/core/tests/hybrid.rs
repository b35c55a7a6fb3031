use proptest::prelude::*;
use roomwave::hybrid::{
    combine, dc_remove, dc_remove_sos, lr_crossover, sos_response, CrossoverSpec, FilterKind, HybridError,
};
use roomwave::signal::{spectrum, ImpulseResponse, IrOrigin};

const FS: f64 = 48_000.0;

fn impulse(n: usize, at: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[at] = 1.0;
    x
}

fn gain_db_at(x: &[f64], f: f64) -> f64 {
    let n = x.len().next_power_of_two();
    let s = spectrum(x, n);
    let k = (f / FS * n as f64).round() as usize;
    20.0 * s[k].norm().log10()
}

fn log_freqs(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn sine(f: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / FS).sin())
        .collect()
}

#[test]
fn crossover_branches_sum_flat() {
    for xo in [350.0, 1400.0] {
        let spec = CrossoverSpec {
            crossover_freq: xo,
            ..Default::default()
        };
        let x = impulse(1 << 16, 0);
        let lo = lr_crossover(&x, &spec, FS, FilterKind::Low).unwrap();
        let hi = lr_crossover(&x, &spec, FS, FilterKind::High).unwrap();
        let sum: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + b).collect();
        for f in log_freqs(20.0, 20_000.0, 60) {
            let g = gain_db_at(&sum, f);
            assert!(g.abs() <= 0.1, "crossover {xo}: {g} dB at {f} Hz");
        }
        assert!((gain_db_at(&lo, xo) + 6.02).abs() < 0.1);
    }
}

#[test]
fn sine_well_below_crossover() {
    let spec = CrossoverSpec::default();
    let x = sine(100.0, FS as usize);
    let steady = FS as usize / 2..;
    let lo = lr_crossover(&x, &spec, FS, FilterKind::Low).unwrap();
    let hi = lr_crossover(&x, &spec, FS, FilterKind::High).unwrap();
    let ref_rms = rms(&x[steady.clone()]);
    let loss = -20.0 * (rms(&lo[steady.clone()]) / ref_rms).log10();
    let atten = -20.0 * (rms(&hi[steady]) / ref_rms).log10();
    assert!(loss.abs() < 0.05, "{loss}");
    assert!(atten > 40.0, "{atten}");
}

#[test]
fn dc_removal_examples() {
    let y = dc_remove(&vec![0.5; 2 * FS as usize], 10.0, FS).unwrap();
    assert!(y[FS as usize..].iter().all(|v| v.abs() < 1e-4));
    assert!(sos_response(&dc_remove_sos(10.0, FS).unwrap(), 0.0, FS).norm() < 1e-9);
    let x = sine(1000.0, FS as usize);
    let y = dc_remove(&x, 10.0, FS).unwrap();
    let g = 20.0 * (rms(&y[FS as usize / 2..]) / rms(&x[FS as usize / 2..])).log10();
    assert!(g.abs() < 0.01, "{g}");
    assert!(dc_remove(&[1.0], 0.0, FS).is_err());
}

fn ir(samples: Vec<f64>, origin: IrOrigin) -> ImpulseResponse {
    ImpulseResponse::new(samples, FS, origin)
}

#[test]
fn identical_inputs_pass_through() {
    let spec = CrossoverSpec {
        crossover_freq: 500.0,
        ..Default::default()
    };
    let x = impulse(1 << 16, 0);
    let h = combine(&ir(x.clone(), IrOrigin::Fdtd), &ir(x, IrOrigin::Ga), 1.0, &spec).unwrap();
    assert_eq!(h.origin, IrOrigin::Hybrid);
    for f in log_freqs(50.0, 20_000.0, 80) {
        let g = gain_db_at(&h.samples, f);
        assert!(g.abs() <= 0.15, "{g} dB at {f} Hz");
    }
}

#[test]
fn eta_scales_only_the_wave_branch() {
    let spec = CrossoverSpec {
        crossover_freq: 500.0,
        ..Default::default()
    };
    let x = impulse(1 << 16, 0);
    let h = combine(&ir(x.clone(), IrOrigin::Fdtd), &ir(x, IrOrigin::Ga), 4.0, &spec).unwrap();
    let low = gain_db_at(&h.samples, 60.0);
    let high = gain_db_at(&h.samples, 8000.0);
    assert!((low - 20.0 * 4f64.log10()).abs() < 0.15, "{low}");
    assert!(high.abs() < 0.15, "{high}");
}

#[test]
fn silent_geometric_branch_leaves_low_branch() {
    let spec = CrossoverSpec {
        crossover_freq: 350.0,
        ..Default::default()
    };
    let x: Vec<f64> = (0..4000).map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5).collect();
    let h = combine(&ir(x.clone(), IrOrigin::Fdtd), &ir(vec![0.0; 10], IrOrigin::Ga), 2.5, &spec).unwrap();
    assert_eq!(h.len(), 4000);
    let scaled: Vec<f64> = x.iter().map(|v| v * 2.5).collect();
    let expect = lr_crossover(&dc_remove(&scaled, spec.dc_cutoff, FS).unwrap(), &spec, FS, FilterKind::Low).unwrap();
    for (a, b) in h.samples.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn output_is_causal_and_padded() {
    let spec = CrossoverSpec::default();
    let a = ir(impulse(3000, 120), IrOrigin::Fdtd);
    let b = ir(impulse(5000, 250), IrOrigin::Ga);
    let h = combine(&a, &b, 1.0, &spec).unwrap();
    assert_eq!(h.len(), 5000);
    assert!(h.samples[..120].iter().all(|&v| v == 0.0));
    assert!(h.samples[120] != 0.0);
}

#[test]
fn rejects_bad_inputs() {
    let a = ir(vec![1.0; 8], IrOrigin::Fdtd);
    let spec = CrossoverSpec::default();
    assert!(matches!(combine(&a, &a, f64::NAN, &spec), Err(HybridError::InvalidEta(_))));
    assert!(matches!(combine(&a, &a, -1.0, &spec), Err(HybridError::InvalidEta(_))));
    let odd = CrossoverSpec {
        lr_order: 3,
        ..Default::default()
    };
    assert!(matches!(combine(&a, &a, 1.0, &odd), Err(HybridError::InvalidSpec(_))));
    let high = CrossoverSpec {
        crossover_freq: 30_000.0,
        ..Default::default()
    };
    assert!(matches!(combine(&a, &a, 1.0, &high), Err(HybridError::InvalidSpec(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn combine_is_linear(
        x1 in prop::collection::vec(-1.0f64..1.0, 200),
        x2 in prop::collection::vec(-1.0f64..1.0, 200),
        g1 in prop::collection::vec(-1.0f64..1.0, 200),
        g2 in prop::collection::vec(-1.0f64..1.0, 200),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        eta in 0.1f64..20.0,
    ) {
        let spec = CrossoverSpec::default();
        let mix = |p: &[f64], q: &[f64]| -> Vec<f64> {
            let n = p.len().max(q.len());
            (0..n)
                .map(|i| a * p.get(i).unwrap_or(&0.0) + b * q.get(i).unwrap_or(&0.0))
                .collect()
        };
        let h1 = combine(&ir(x1.clone(), IrOrigin::Fdtd), &ir(g1.clone(), IrOrigin::Ga), eta, &spec).unwrap();
        let h2 = combine(&ir(x2.clone(), IrOrigin::Fdtd), &ir(g2.clone(), IrOrigin::Ga), eta, &spec).unwrap();
        let hm = combine(&ir(mix(&x1, &x2), IrOrigin::Fdtd), &ir(mix(&g1, &g2), IrOrigin::Ga), eta, &spec).unwrap();
        let n = hm.len();
        let get = |v: &[f64], i: usize| *v.get(i).unwrap_or(&0.0);
        let scale = 1.0 + eta;
        for i in 0..n {
            let expect = a * get(&h1.samples, i) + b * get(&h2.samples, i);
            prop_assert!((hm.samples[i] - expect).abs() < 1e-9 * scale, "i {} {} vs {}", i, hm.samples[i], expect);
        }
    }
}
