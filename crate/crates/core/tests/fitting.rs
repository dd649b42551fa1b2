use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use qdswitch_core::cavity::{reflectivity_spectrum, CavityMode, ModeLabel};
use qdswitch_core::fitting::{
    fit_gaussian, fit_lorentzian_dip, least_squares, DataSeries, Gaussian, LorentzianDip, LsOptions, Model, Background,
};
use qdswitch_core::units::{kappa_from_quality_factor, Energy};

fn noisy_gaussian(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..50).map(|i| -20.0 + 40.0 * i as f64 / 49.0).collect();
    let truth = [80.0, 0.0, 4.0, 0.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.01 * 80.0).unwrap();
    let y = x.iter().map(|&x| Gaussian.eval(x, &truth) + noise.sample(&mut rng)).collect();
    (x, y)
}

/// Best (center, sigma) on a grid, with amplitude and offset solved exactly
/// by linear least squares at each node.
fn grid_search(x: &[f64], y: &[f64], step: f64) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let mut c = -1.0;
    while c <= 1.0 + 1e-12 {
        let mut s = 3.0;
        while s <= 5.0 + 1e-12 {
            let g: Vec<f64> = x.iter().map(|&x| (-(x - c).powi(2) / (2.0 * s * s)).exp()).collect();
            let n = x.len() as f64;
            let (sg, sgg, sy, sgy) = g.iter().zip(y).fold((0.0, 0.0, 0.0, 0.0), |acc, (g, y)| {
                (acc.0 + g, acc.1 + g * g, acc.2 + y, acc.3 + g * y)
            });
            let det = n * sgg - sg * sg;
            let a = (n * sgy - sg * sy) / det;
            let o = (sy - a * sg) / n;
            let sse: f64 = g.iter().zip(y).map(|(g, y)| (y - a * g - o).powi(2)).sum();
            if sse < best.0 {
                best = (sse, c, s);
            }
            s += step;
        }
        c += step;
    }
    best
}

#[test]
fn gaussian_with_one_percent_noise() {
    let (x, y) = noisy_gaussian(2024);
    let fit = fit_gaussian(&DataSeries::new(x.clone(), y.clone(), None).unwrap()).unwrap();
    let p = &fit.params;
    assert!((p[0] - 80.0).abs() / 80.0 < 0.02);
    assert!(p[1].abs() / 4.0 < 0.02);
    assert!((p[2] - 4.0).abs() / 4.0 < 0.02);
    assert!(p[3].abs() < 0.02 * 80.0);

    let step = 0.002;
    let (_, c, s) = grid_search(&x, &y, step);
    assert!((p[1] - c).abs() <= step, "center {} vs grid {c}", p[1]);
    assert!((p[2] - s).abs() <= step, "sigma {} vs grid {s}", p[2]);
}

#[test]
fn fits_ignore_point_order() {
    let (x, y) = noisy_gaussian(5);
    let ordered = fit_gaussian(&DataSeries::new(x.clone(), y.clone(), None).unwrap()).unwrap();
    let mut pts: Vec<(f64, f64)> = x.into_iter().zip(y).collect();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let shuffled = fit_gaussian(&DataSeries::from_unordered(pts).unwrap()).unwrap();
    for (a, b) in ordered.params.iter().zip(&shuffled.params) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn accepted_steps_never_increase_the_residual() {
    let (x, y) = noisy_gaussian(11);
    let d = DataSeries::new(x, y, None).unwrap();
    let fit = least_squares(&Gaussian, &d, &[50.0, 2.0, 7.0, 5.0], &LsOptions::default()).unwrap();
    assert!(fit.converged);
    assert!(fit.iterations > 1);
    assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn cavity_spectrum_round_trip() {
    let kappa = kappa_from_quality_factor(934.55, 5000.0).unwrap();
    let mode = CavityMode::with_alpha(Energy(0.0), kappa, 0.93, ModeLabel::V).unwrap();
    let grid: Vec<Energy<f64>> = (-200..=200).map(|i| Energy(4.0 * i as f64)).collect();
    let t = reflectivity_spectrum(&grid, &mode, None).unwrap();
    let d = DataSeries::new(t.column(0), t.column(1), None).unwrap();
    let fit = fit_lorentzian_dip(&d).unwrap();
    assert!((fit.get("alpha").unwrap() - 0.93).abs() < 1e-6);
    assert!((fit.get("kappa").unwrap() - kappa.0).abs() / kappa.0 < 1e-6);
    assert!(fit.get("center").unwrap().abs() < 1e-6);

    let model = LorentzianDip {
        background: Background::Flat,
        pivot: 0.0,
    };
    let worst = d
        .x()
        .iter()
        .zip(d.y())
        .map(|(x, y)| (model.eval(*x, &fit.params) - y).abs())
        .fold(0.0, f64::max);
    assert!(worst <= fit.residual_norm.max(1e-12));
}

#[test]
fn two_modes_split_by_six() {
    let kappa = kappa_from_quality_factor(934.55, 5000.0).unwrap();
    let grid: Vec<Energy<f64>> = (-200..=200).map(|i| Energy(4.0 * i as f64)).collect();
    let centers: Vec<f64> = [(6.0, ModeLabel::H), (0.0, ModeLabel::V)]
        .iter()
        .map(|&(c, label)| {
            let mode = CavityMode::with_alpha(Energy(c), kappa, 0.93, label).unwrap();
            let t = reflectivity_spectrum(&grid, &mode, None).unwrap();
            let fit = fit_lorentzian_dip(&DataSeries::new(t.column(0), t.column(1), None).unwrap()).unwrap();
            fit.get("center").unwrap()
        })
        .collect();
    assert!((centers[0] - centers[1] - 6.0).abs() <= 0.1);
}

#[test]
fn csv_with_header_and_weights() {
    let text = "photons,phase,weight\n1.0,80.0,1.0\n12.0,78.0,0.5\n100.0,65.5,0.25\n";
    let d = DataSeries::parse_csv(text).unwrap();
    assert_eq!(d.x(), &[1.0, 12.0, 100.0]);
    assert_eq!(d.weights().unwrap(), &[1.0, 0.5, 0.25]);
    assert!(DataSeries::parse_csv("1.0,2.0\n1.0,3.0\n").is_err());
}
