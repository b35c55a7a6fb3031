mod common;

use common::{box_response, nearest, rel_err, spectral_peaks};
use proptest::prelude::*;
use roomwave::fdtd::{band_limited_delay, band_limited_impulse, derive_grid_params, run, run_raw, FdtdConfig, Solver};
use roomwave::geom::Vec3;
use roomwave::scene::VoxelGrid;

fn cfg(f_max: f64, duration: f64) -> FdtdConfig {
    FdtdConfig {
        f_max,
        duration,
        ..Default::default()
    }
}

fn small_box(c: &FdtdConfig, beta: f64) -> VoxelGrid {
    let dx = derive_grid_params(c).dx;
    VoxelGrid::free_field(Vec3::ZERO, dx, [12, 14, 16], beta).unwrap()
}

#[test]
fn grid_parameters_follow_from_config() {
    let c = cfg(350.0, 1.0);
    let p = derive_grid_params(&c);
    assert!((p.dx - 343.0 / (350.0 * 10.5)).abs() < 1e-15);
    assert!((p.dt - 0.99 * p.dx / (343.0 * 3f64.sqrt())).abs() < 1e-18);
    assert!((p.sample_rate * p.dt - 1.0).abs() < 1e-12);
    assert!(p.lambda * 3f64.sqrt() <= 1.0);
    let q = derive_grid_params(&cfg(700.0, 1.0));
    assert!((2.0 * q.dx - p.dx).abs() < 1e-15);
    assert!((2.0 * q.dt - p.dt).abs() < 1e-18);
    assert_eq!(p.lambda, q.lambda);
}

#[test]
fn excitation_pulse_shape() {
    let fs = 10_000.0;
    let h = band_limited_impulse(250.0, fs).unwrap();
    assert_eq!(h.len(), 161);
    assert_eq!(band_limited_delay(&h), 80.0);
    assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for i in 0..h.len() / 2 {
        assert!((h[i] - h[h.len() - 1 - i]).abs() < 1e-15);
    }
    let centre = h.iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(centre, h[80]);
    assert_eq!(band_limited_impulse(1000.0, fs).unwrap().len(), 41);
}

fn peak(x: &[f64]) -> (usize, f64) {
    x.iter()
        .enumerate()
        .fold((0, 0.0), |a, (i, v)| if v.abs() > a.1 { (i, v.abs()) } else { a })
}

#[test]
fn free_field_amplitude_falls_as_inverse_distance() {
    let c = cfg(350.0, 0.03);
    let p = derive_grid_params(&c);
    let n = 2 * (5.0 / p.dx) as usize + 3;
    let g = VoxelGrid::free_field(Vec3::ZERO, p.dx, [n, n, n], 1.0).unwrap();
    let m = n / 2;
    let s = g.cell_center(m, m, m);
    let r1 = g.cell_center(m + (1.0 / p.dx).round() as usize, m, m);
    let r2 = g.cell_center(m + (2.0 / p.dx).round() as usize, m, m);
    let pulse = band_limited_impulse(255.0, p.sample_rate).unwrap();
    let (rec, _) = run_raw(&g, s, &[r1, r2], &pulse, &c).unwrap();
    let (i1, a1) = peak(&rec[0]);
    let (i2, a2) = peak(&rec[1]);
    let ratio = a1 / a2;
    let expect = r2.distance(s) / r1.distance(s);
    assert!(rel_err(ratio, expect) < 0.1, "ratio {ratio} vs {expect}");
    for (i, r) in [(i1, r1), (i2, r2)] {
        let t = band_limited_delay(&pulse) + r.distance(s) / 343.0 * p.sample_rate;
        assert!((i as f64 - t).abs() < 0.1 * t, "peak at {i}, expected {t}");
    }
}

#[test]
fn rigid_box_stays_bounded_for_ten_thousand_steps() {
    let c = cfg(350.0, 1.0);
    let g = small_box(&c, 0.0);
    let mut s = Solver::new(&g, &c).unwrap();
    s.step(Some((g.index(5, 6, 7), 1.0)));
    s.step(Some((g.index(3, 9, 4), -0.7)));
    let e0 = s.energy();
    for _ in 0..10_000 {
        s.step(None);
    }
    assert_eq!(s.steps(), 10_002);
    assert!(s.pressure().iter().all(|v| v.is_finite()));
    assert!(rel_err(s.energy(), e0) < 1e-8);
}

#[test]
fn rigid_box_modes_match_analytic() {
    let (l, w, h) = (2.0, 3.0, 4.0);
    let (x, fs) = box_response(Vec3::new(l, w, h), 350.0, 2.0);
    let peaks = spectral_peaks(&x, fs, 30.0, 110.0);
    let mode = |a: f64, b: f64, c: f64| 171.5 * ((a / l).powi(2) + (b / w).powi(2) + (c / h).powi(2)).sqrt();
    for f in [mode(0.0, 0.0, 1.0), mode(0.0, 1.0, 0.0), mode(0.0, 1.0, 1.0), mode(1.0, 0.0, 0.0)] {
        let e = nearest(&peaks, f);
        assert!(e < 0.02, "mode {f:.2} Hz: nearest peak off by {:.2}% in {peaks:?}", 100.0 * e);
    }
}

#[test]
fn mode_error_shrinks_with_grid_refinement() {
    let ext = Vec3::new(1.0, 1.0, 4.0);
    let f0 = 343.0 / 8.0;
    let err = |f_max| {
        let (x, fs) = box_response(ext, f_max, 2.0);
        nearest(&spectral_peaks(&x, fs, 30.0, 60.0), f0)
    };
    let coarse = err(250.0);
    let fine = err(500.0);
    assert!(fine < coarse, "coarse {coarse} fine {fine}");
    assert!(fine < 0.02, "{fine}");
}

#[test]
fn thread_count_does_not_change_output() {
    let c = FdtdConfig {
        output_sample_rate: Some(8000.0),
        ..cfg(350.0, 0.1)
    };
    let g = small_box(&c, 0.2);
    let (s, r) = (g.cell_center(3, 4, 5), g.cell_center(8, 9, 11));
    let go = |t| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| run(&g, s, &[r], &[1.0, 0.5], &c).unwrap())
    };
    assert_eq!(go(1), go(4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn response_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let c = cfg(350.0, 0.02);
        let g = small_box(&c, 0.3);
        let (s, r) = (g.cell_center(3, 4, 5), g.cell_center(8, 9, 11));
        let x = run_raw(&g, s, &[r], &[1.0, 0.0, 0.0], &c).unwrap().0.remove(0);
        let y = run_raw(&g, s, &[r], &[0.0, 0.0, 1.0], &c).unwrap().0.remove(0);
        let z = run_raw(&g, s, &[r], &[a, 0.0, b], &c).unwrap().0.remove(0);
        let scale = x.iter().chain(&y).fold(0.0f64, |m, v| m.max(v.abs())) * (a.abs() + b.abs() + 1.0);
        for i in 0..z.len() {
            prop_assert!((z[i] - (a * x[i] + b * y[i])).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn boundary_loss_never_adds_energy(beta in 0.0f64..1.0) {
        let c = cfg(350.0, 1.0);
        let g = small_box(&c, beta);
        let mut s = Solver::new(&g, &c).unwrap();
        s.step(Some((g.index(4, 5, 6), 1.0)));
        let mut last = s.energy();
        for _ in 0..300 {
            s.step(None);
            let e = s.energy();
            prop_assert!(e <= last * (1.0 + 1e-12) + 1e-300);
            last = e;
        }
    }
}
