use rand::Rng;
use rand_distr::{Distribution, Exp1};
use stc_core::channel::*;
use stc_core::constellation::*;
use stc_core::rng::{complex_gaussian, rng_from_seed};
use stc_core::{CMatrix, Complex64};

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn isotropic() -> FadingModel {
    FadingModel::Isotropic { n: 2, exponents: vec![0.0, 2.0], tail: 1.0 }
}

#[test]
fn isotropic_law_is_invariant_under_right_rotation() {
    let n = 10_000;
    let model = isotropic();
    let snr = 10.0;
    let q_fixed = CMatrix::from_rows(&[
        vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
        vec![Complex64::new(0.0, 0.8), Complex64::new(0.6, 0.0)],
    ])
    .unwrap();
    let q_haar = haar_unitary(2, &mut rng_from_seed(99));
    // critical value of the two-sample test at level 0.001
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    for q in [q_fixed, q_haar] {
        let mut r1 = rng_from_seed(1);
        let mut r2 = rng_from_seed(2);
        let (mut mi_a, mut mi_b, mut e_a, mut e_b) = (vec![], vec![], vec![], vec![]);
        for _ in 0..n {
            let h = sample_channel(&model, &mut r1).unwrap();
            let g = sample_channel(&model, &mut r2).unwrap().mul(&q).unwrap();
            mi_a.push(mutual_info(&h, snr).unwrap());
            mi_b.push(mutual_info(&g, snr).unwrap());
            // a single entry depends on the right singular vectors
            e_a.push(h.get(0, 0).norm_sqr());
            e_b.push(g.get(0, 0).norm_sqr());
        }
        assert!(ks_statistic(mi_a, mi_b) < crit);
        assert!(ks_statistic(e_a, e_b) < crit);
    }
}

#[test]
fn ks_statistic_detects_a_shift() {
    let mut rng = rng_from_seed(3);
    let a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
    let b: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() + 0.1).collect();
    assert!((ks_statistic(a.clone(), b) - 0.1).abs() < 0.03);
    assert_eq!(ks_statistic(a.clone(), a), 0.0);
}

#[test]
fn smallest_singular_value_has_the_weakest_exponent() {
    let model = isotropic();
    let mut rng = rng_from_seed(4);
    let eps = [1e-2, 1e-3];
    let mut hits = [0u64; 2];
    let n = 400_000;
    for _ in 0..n {
        let h = sample_channel(&model, &mut rng).unwrap();
        let sv = h.singular_values().unwrap();
        let phi1 = sv.iter().fold(f64::INFINITY, |m, s| m.min(s * s));
        for (c, e) in hits.iter_mut().zip(eps) {
            *c += (phi1 <= e) as u64;
        }
    }
    assert!(hits[1] >= 100, "{hits:?}");
    let slope = (hits[0] as f64 / hits[1] as f64).log10();
    assert!((slope - 1.0).abs() <= 0.1, "slope {slope}");
}

/// Outage of the isotropic model with exponents `(0, 2)` and unit tail,
/// integrating out the `k = 2` draw in closed form. The draws are
/// `u^{1/(k+1)} (1 + E)` and outage only depends on their product form
/// `(1 + s a)(1 + s b) < 2^R`, so the order does not matter.
fn isotropic_outage_oracle(rate: f64, snr: f64, trials: u64, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut acc = 0.0;
    for _ in 0..trials {
        let ea: f64 = Exp1.sample(&mut rng);
        let eb: f64 = Exp1.sample(&mut rng);
        let a = (1.0 - rng.random::<f64>()) * (1.0 + ea);
        let x = (rate.exp2() / (1.0 + snr * a) - 1.0) / snr;
        if x > 0.0 {
            acc += (x / (1.0 + eb)).powi(3).min(1.0);
        }
    }
    acc / trials as f64
}

#[test]
fn isotropic_outage_slope_matches_analytic_curve() {
    let r = 0.5;
    let dbs = [20.0, 30.0, 40.0];
    let p: Vec<f64> = dbs
        .iter()
        .enumerate()
        .map(|(i, &db)| {
            let snr = db_to_linear(db);
            isotropic_outage_oracle(r * snr.log2(), snr, 1_000_000, 10 + i as u64)
        })
        .collect();
    let x: Vec<f64> = dbs.iter().map(|d| db_to_linear(*d).log2()).collect();
    let y: Vec<f64> = p.iter().map(|v| -v.log2()).collect();
    let fit = fit_slope(&x, &y).unwrap();
    let want = outage_curve_analytic(&[0.0, 2.0]).unwrap().eval(r);
    assert_eq!(want, 2.5);
    assert!((fit.slope - want).abs() <= 0.3, "slope {} vs {want}", fit.slope);

    // the sampler agrees with the oracle where plain Monte Carlo is feasible
    let snr = db_to_linear(10.0);
    let rate = 3.0;
    let o = isotropic_outage_oracle(rate, snr, 1_000_000, 20);
    let mc = outage_prob_mc(&isotropic(), rate, snr, 1_000_000, 21).unwrap();
    assert!(mc.events >= 100);
    assert!((mc.p - o).abs() <= 2.0 * mc.half_width, "{} vs {o}", mc.p);
}

#[test]
fn miso_outage_slope_at_fixed_rate() {
    let dbs = [20.0, 25.0, 30.0];
    let x: Vec<f64> = dbs.iter().map(|d| db_to_linear(*d).log2()).collect();
    let y: Vec<f64> = dbs
        .iter()
        .enumerate()
        .map(|(i, &db)| -outage_prob_is(2, 1, 1.0, db_to_linear(db), 200_000, i as u64).unwrap().p.log2())
        .collect();
    let fit = fit_slope(&x, &y).unwrap();
    let want = miso_outage_curve(1.0, 2).unwrap().eval(0.0);
    assert!((fit.slope - want).abs() <= 0.3, "slope {}", fit.slope);
    // the scalar closed form anchors the 2x1 rate: |h|^2 ~ Gamma(2, 1)
    let snr = db_to_linear(20.0);
    let t = 1.0 / snr;
    let exact = 1.0 - (-t).exp() * (1.0 + t);
    let is = outage_prob_is(2, 1, 1.0, snr, 200_000, 0).unwrap();
    assert!((is.p - exact).abs() <= 2.0 * is.half_width.max(1e-3 * exact));
}

#[test]
fn effective_dblast_curve_lies_below_base() {
    for n in 2..=4 {
        let base = outage_curve_analytic(&rayleigh_exponents(n, n)).unwrap();
        for t in n..=3 * n {
            let eff = dblast_effective_curve(&base, t, n).unwrap();
            for i in 0..=100 {
                let r = n as f64 * i as f64 / 100.0;
                assert!(eff.eval(r) <= base.eval(r) + 1e-12);
            }
        }
    }
}

/// Per-use input energy bound: mean codeword energy over the block length.
fn input_power(code: &Codebook) -> f64 {
    code.mean_energy() / code.t as f64
}

/// Fano: for a uniform message, `P(error | H) >= 1 - (I + 1) / (T R)`, and
/// the mutual information over `T` uses is at most
/// `T log2 det(I + SNR P H H*)` when the average input covariance has
/// trace `P`.
fn fano_bound(code: &Codebook, model: &FadingModel, snr: f64, trials: u64, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let tr = code.t as f64 * code.rate;
    let p = input_power(code);
    let mut acc = 0.0;
    for _ in 0..trials {
        let h = sample_channel(model, &mut rng).unwrap();
        let c = code.t as f64 * mutual_info(&h, snr * p).unwrap();
        acc += (1.0 - (c + 1.0) / tr).max(0.0);
    }
    acc / trials as f64
}

fn outage_cases() -> Vec<(Codebook, FadingModel)> {
    let pam2 = PamSpec::binary(2).unwrap();
    let stream = permutation_codebook(2, 4, &[alt_flip_reversal_perm(2)], &pam2).unwrap();
    vec![
        (make_qam(2).unwrap(), FadingModel::IidRayleigh { nt: 1, nr: 1 }),
        (make_qam(4).unwrap(), FadingModel::IidRayleigh { nt: 1, nr: 1 }),
        (alamouti_codebook(&make_qam(2).unwrap()).unwrap(), FadingModel::IidRayleigh { nt: 2, nr: 1 }),
        (diagonal_miso_codebook(&stream).unwrap(), FadingModel::IidRayleigh { nt: 2, nr: 1 }),
        (vblast_codebook(2, 2).unwrap(), FadingModel::IidRayleigh { nt: 2, nr: 2 }),
        (rotated_qam_codebook(4).unwrap(), FadingModel::IidRayleigh { nt: 2, nr: 2 }),
    ]
}

#[test]
fn error_probability_is_bounded_below_by_outage() {
    let trials = 20_000;
    for (code, model) in outage_cases() {
        let dbs = [0.0, 10.0, 20.0, 25.0];
        let sim = simulate_pe(&code, &model, &dbs, trials, 7).unwrap();
        for (i, &db) in dbs.iter().enumerate() {
            let snr = db_to_linear(db);
            // rigorous at every SNR
            let lb = fano_bound(&code, &model, snr, trials, 8);
            assert!(sim.p_e[i] + sim.ci[i] >= lb, "{} {db} dB: {} < {lb}", code.family, sim.p_e[i]);
            // Gaussian-input outage at the code's own rate in the high SNR regime
            if db >= 20.0 {
                let out = outage_prob_mc(&model, code.rate, snr, trials, 9).unwrap();
                assert!(
                    sim.p_e[i] + sim.ci[i] + out.half_width >= out.p,
                    "{} {db} dB: {} < {}",
                    code.family,
                    sim.p_e[i],
                    out.p
                );
            }
        }
    }
}

#[test]
fn scalar_qam_over_rayleigh_has_unit_diversity() {
    let code = make_qam(2).unwrap();
    let model = FadingModel::IidRayleigh { nt: 1, nr: 1 };
    let sim = simulate_pe(&code, &model, &[15.0, 20.0, 25.0, 30.0], 200_000, 5).unwrap();
    let fit = estimate_diversity(&sim).unwrap();
    assert_eq!(fit.points, 4);
    assert!((fit.slope - 1.0).abs() <= 0.15, "slope {}", fit.slope);
}

#[test]
fn staged_decoder_matches_joint_ml() {
    let d = DblastTwoStream::new(2, alt_flip_reversal_perm(2)).unwrap();
    let model = FadingModel::IidRayleigh { nt: 2, nr: 2 };
    let snr = db_to_linear(25.0);
    let a = snr.sqrt();
    let mut rng = rng_from_seed(6);
    let trials = 10_000;
    let (mut disagree, mut fallback, mut errors) = (0, 0, 0);
    for _ in 0..trials {
        let idx = rng.random_range(0..d.codebook().len());
        let h = sample_channel(&model, &mut rng).unwrap();
        let clean = h.mul(d.codebook().get(idx)).unwrap().scale_real(a);
        let noise = CMatrix::from_fn(2, 3, |_, _| complex_gaussian(&mut rng));
        let y = clean.add(&noise).unwrap();
        let s = staged_dblast_decode(&d, &y, &h, snr).unwrap();
        let ml = ml_decode(d.codebook(), &y, &h, snr).unwrap();
        disagree += (s.index != ml) as u32;
        fallback += s.used_fallback as u32;
        errors += (s.index != idx) as u32;
        assert_eq!(s.index, s.p * d.stream().len() + s.q);
    }
    assert!((disagree as f64) < 0.01 * trials as f64, "{disagree}");
    // the staged path does most of the work at this SNR
    assert!((fallback as f64) < 0.5 * trials as f64, "{fallback}");
    assert!(errors < trials / 10);
}

#[test]
fn simulations_are_reproducible_across_thread_counts() {
    let code = alamouti_codebook(&make_qam(2).unwrap()).unwrap();
    let model = FadingModel::IidRayleigh { nt: 2, nr: 1 };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_pe(&code, &model, &[5.0, 10.0], 10_000, 42).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.errors, b.errors);
    let c = simulate_pe(&code, &model, &[5.0, 10.0], 10_000, 43).unwrap();
    assert_ne!(a.errors, c.errors);
    let o1 = outage_prob_mc(&model, 2.0, 10.0, 10_000, 1).unwrap();
    let o2 = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| outage_prob_mc(&model, 2.0, 10.0, 10_000, 1).unwrap());
    assert_eq!(o1.events, o2.events);
}
