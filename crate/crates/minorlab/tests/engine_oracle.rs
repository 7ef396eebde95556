//! Dense-oracle checks for the incremental engine and the medium-cost
//! statistical contracts: semicircle agreement of the ensemble, chi-square
//! laws of the border projections, rigidity of a dense spectrum, the
//! deformed-ensemble density against the Dyson-equation solution, and
//! agreement between the full engine and the top-edge tracker on shared
//! seeds.

use minorlab::dense::{eigh_desc, eigvalsh_desc};
use minorlab::ensemble::seed::Stream;
use minorlab::ensemble::{
    materialize_deformed, materialize_wigner, sample_border, Beta, DeformationSpec, EnsembleSpec,
    EntryDist, ProfileSpec,
};
use minorlab::harness::{descend_spec, run_edge_trajectory};
use minorlab::minor_engine::{
    advance, arrowhead_eigen, build_arrowhead, run_trajectory, sample_border_scaled,
    solve_secular_top, AdvanceOptions, MinorState,
};
use minorlab::stats_lab::{
    chi_square_gof, ks_statistic, rigidity_residuals, semicircle_cdf, solve_dyson,
};
use num_complex::Complex64;
use rayon::prelude::*;

fn gspec(beta: Beta, dist: EntryDist, seed: u64) -> EnsembleSpec {
    EnsembleSpec { beta, entry_dist: dist, profile: None, deformation: None, master_seed: seed }
}

#[test]
fn ensemble_spectra_match_semicircle() {
    // pooled eigenvalue distribution of H^(256) against the analytic CDF
    let spec = gspec(Beta::One, EntryDist::Gaussian, 11);
    let n = 256;
    let spectra = 2000;
    let mut pooled: Vec<f64> = (0..spectra)
        .into_par_iter()
        .map(|k| {
            let (s, ctx) = descend_spec(&spec, 40, k as u64);
            let h = materialize_wigner::<f64>(n, &s, &ctx).unwrap();
            eigvalsh_desc(&h).unwrap().to_vec()
        })
        .flatten()
        .collect();
    let d = ks_statistic(&mut pooled, semicircle_cdf);
    assert!(d < 0.02, "KS distance {d}");
}

#[test]
fn arrowhead_similarity_oracle_sweep() {
    // assembled bordered system reproduces the dense spectrum of the
    // enlarged minor across sizes and both symmetry classes
    let sizes = [8usize, 16, 33, 64];
    for &n in &sizes {
        for inst in 0..12u64 {
            let spec = gspec(Beta::One, EntryDist::Gaussian, 700 + inst);
            let (s, ctx) = descend_spec(&spec, 41, n as u64 * 100 + inst);
            let state = MinorState::<f64>::dense_init(n, &s, &ctx).unwrap();
            let (border, corner) = sample_border_scaled::<f64>(n + 1, &s, &ctx).unwrap();
            let sys = build_arrowhead(&state, &border, corner).unwrap();
            let (vals, _) = arrowhead_eigen(&sys, 1e-13).unwrap();
            let top = solve_secular_top(&sys, 1e-13).unwrap();
            let h = materialize_wigner::<f64>(n + 1, &s, &ctx).unwrap();
            let dense = eigvalsh_desc(&h).unwrap();
            for k in 0..=n {
                assert!(
                    (vals[k] - dense[k]).abs() <= 1e-9 * (1.0 + dense[k].abs()),
                    "n {n} inst {inst} k {k}: {} vs {}",
                    vals[k],
                    dense[k]
                );
            }
            assert!((top - dense[0]).abs() <= 1e-10 * (1.0 + dense[0].abs()));
        }
    }
}

#[test]
fn decoupled_border_spectrum() {
    // zero border and corner: spectrum of the enlarged minor is {d} u {0}
    let spec = gspec(Beta::One, EntryDist::Gaussian, 5);
    let ctx = spec.context();
    let state = MinorState::<f64>::dense_init(10, &spec, &ctx).unwrap();
    let zero = ndarray::Array1::zeros(10);
    let sys = build_arrowhead(&state, &zero, 0.0).unwrap();
    let (vals, _) = arrowhead_eigen(&sys, 1e-13).unwrap();
    let mut expect: Vec<f64> = state.lambdas.iter().map(|l| l * (10f64 / 11.0).sqrt()).collect();
    expect.push(0.0);
    expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for (v, e) in vals.iter().zip(expect.iter()) {
        assert!((v - e).abs() < 1e-12);
    }
}

#[test]
fn advance_respects_interlacing_and_minor_scaling() {
    // lambda_{a+1}^(n+1) <= sqrt(n/(n+1)) lambda_a^(n) <= lambda_a^(n+1)
    let spec = gspec(Beta::Two, EntryDist::Uniform, 31);
    let ctx = spec.context();
    let opts = AdvanceOptions::default();
    let mut state = MinorState::<Complex64>::dense_init(6, &spec, &ctx).unwrap();
    for _ in 7..=72 {
        let prev = state.lambdas.clone();
        let n_prev = state.n;
        let adv = advance(state, &spec, &ctx, &opts).unwrap();
        state = adv.state;
        let shrink = (n_prev as f64 / (n_prev + 1) as f64).sqrt();
        for a in 0..n_prev {
            let d = prev[a] * shrink;
            assert!(state.lambdas[a + 1] <= d + 1e-10, "lower interlace a={a}");
            assert!(d <= state.lambdas[a] + 1e-10, "upper interlace a={a}");
        }
    }
}

#[test]
fn trajectory_corner_mass_bounds_and_scaling_column() {
    let spec = gspec(Beta::One, EntryDist::Gaussian, 77);
    let ctx = spec.context();
    let traj = run_trajectory::<f64>(4, 60, &spec, &ctx, &AdvanceOptions::default()).unwrap();
    for row in &traj.rows {
        assert!(row.corner_mass >= 0.0 && row.corner_mass <= 1.0 + 1e-12);
        let expect = (row.n as f64).powf(2.0 / 3.0) * (row.lambda_raw - 2.0);
        assert_eq!(row.lambda_scaled, expect);
    }
}

#[test]
fn xi_squares_have_unit_mean_complex() {
    // E|xi_1|^2 = 1 conditional on the basis; fix one eigenbasis and draw
    // many independent border columns
    let n = 200usize;
    let spec = gspec(Beta::Two, EntryDist::Gaussian, 123);
    let ctx = spec.context();
    let h = materialize_wigner::<Complex64>(n - 1, &spec, &ctx).unwrap();
    let (_, basis) = eigh_desc(&h).unwrap();
    let w1: Vec<Complex64> = (0..n - 1).map(|i| basis[[i, 0]]).collect();
    let draws = 100_000;
    let mean: f64 = (0..draws)
        .into_par_iter()
        .map(|k| {
            let (s, c) = descend_spec(&spec, 42, k as u64);
            let (border, _) = sample_border::<Complex64>(n, &s, &c).unwrap();
            let mut xi = Complex64::new(0.0, 0.0);
            for i in 0..n - 1 {
                xi += w1[i].conj() * border[i];
            }
            xi.norm_sqr()
        })
        .sum::<f64>()
        / draws as f64;
    assert!((mean - 1.0).abs() < 0.02, "mean |xi_1|^2 = {mean}");
}

#[test]
fn xi_squares_chi_square_laws() {
    // distributional check at n = 512: chi^2(2)/2 for the complex class,
    // chi^2(1) moments for the real class
    let n = 512usize;
    let cspec = gspec(Beta::Two, EntryDist::Gaussian, 321);
    let ctx = cspec.context();
    let h = materialize_wigner::<Complex64>(n - 1, &cspec, &ctx).unwrap();
    let (_, basis) = eigh_desc(&h).unwrap();
    let w1: Vec<Complex64> = (0..n - 1).map(|i| basis[[i, 0]]).collect();
    let samples: Vec<f64> = (0..10_000)
        .into_par_iter()
        .map(|k| {
            let (s, c) = descend_spec(&cspec, 43, k as u64);
            let (border, _) = sample_border::<Complex64>(n, &s, &c).unwrap();
            let mut xi = Complex64::new(0.0, 0.0);
            for i in 0..n - 1 {
                xi += w1[i].conj() * border[i];
            }
            xi.norm_sqr()
        })
        .collect();
    let rep = chi_square_gof(&samples, Beta::Two).unwrap();
    assert!(rep.ks < 0.03, "KS {}", rep.ks);

    let rspec = gspec(Beta::One, EntryDist::Gaussian, 654);
    let ctx = rspec.context();
    let h = materialize_wigner::<f64>(n - 1, &rspec, &ctx).unwrap();
    let (_, basis) = eigh_desc(&h).unwrap();
    let w1: Vec<f64> = (0..n - 1).map(|i| basis[[i, 0]]).collect();
    let samples: Vec<f64> = (0..10_000)
        .into_par_iter()
        .map(|k| {
            let (s, c) = descend_spec(&rspec, 44, k as u64);
            let (border, _) = sample_border::<f64>(n, &s, &c).unwrap();
            let xi: f64 = w1.iter().zip(border.iter()).map(|(a, b)| a * b).sum();
            xi * xi
        })
        .collect();
    let rep = chi_square_gof(&samples, Beta::One).unwrap();
    assert!((rep.mean - 1.0).abs() < 0.05, "mean {}", rep.mean);
    assert!((rep.variance - 2.0).abs() < 0.2, "variance {}", rep.variance);
}

#[test]
fn rigidity_quantile_calibration() {
    // 99th percentile of the max scaled residual stays below 10 over GOE draws
    let n = 512;
    let samples = 100;
    let mut maxima: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let spec = gspec(Beta::One, EntryDist::Gaussian, 2000 + k as u64);
            let h = materialize_wigner::<f64>(n, &spec, &spec.context()).unwrap();
            let vals = eigvalsh_desc(&h).unwrap();
            let res = rigidity_residuals(vals.as_slice().unwrap()).unwrap();
            res.into_iter().fold(0.0f64, f64::max)
        })
        .collect();
    maxima.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p99 = maxima[98];
    assert!(p99 < 10.0, "99th percentile of max rigidity residual: {p99}");
}

#[test]
fn deformed_two_band_density_matches_dyson_solution() {
    // alternating +-1 deformation with flat profile 0.4 splits the spectrum
    // into two bands; compare pooled eigenvalues with the scDOS
    let spec = EnsembleSpec {
        beta: Beta::One,
        entry_dist: EntryDist::Gaussian,
        profile: Some(ProfileSpec::Constant { value: 0.4 }),
        deformation: Some(DeformationSpec::Alternating { amplitude: 1.0 }),
        master_seed: 4040,
    };
    let n = 512;
    let mut pooled: Vec<f64> = (0..40)
        .into_par_iter()
        .map(|k| {
            let (s, ctx) = descend_spec(&spec, 45, k as u64);
            let h = materialize_deformed::<f64>(n, &s, &ctx).unwrap();
            eigvalsh_desc(&h).unwrap().to_vec()
        })
        .flatten()
        .collect();
    // spectrum splits: negligible mass near zero
    let near_zero = pooled.iter().filter(|v| v.abs() < 0.15).count();
    assert!(
        (near_zero as f64) < 0.005 * pooled.len() as f64,
        "gap not open: {near_zero} of {}",
        pooled.len()
    );

    // model CDF from the Dyson solution on a fine grid
    let a: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let s2 = 0.16;
    let grid: Vec<f64> = (0..600).map(|k| -2.2 + 4.4 * k as f64 / 599.0).collect();
    let dens: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&e| {
            let sol = solve_dyson(Complex64::new(e, 1e-3), &a, s2).unwrap();
            (e, sol.density)
        })
        .collect();
    let mut cum = vec![0.0; dens.len()];
    for k in 1..dens.len() {
        cum[k] = cum[k - 1] + 0.5 * (dens[k - 1].1 + dens[k].1) * (dens[k].0 - dens[k - 1].0);
    }
    let total = *cum.last().unwrap();
    let cdf = |x: f64| {
        if x <= dens[0].0 {
            0.0
        } else if x >= dens[dens.len() - 1].0 {
            1.0
        } else {
            let idx = dens.partition_point(|&(e, _)| e < x);
            let (e0, r0) = dens[idx - 1];
            let (e1, r1) = dens[idx];
            let t = (x - e0) / (e1 - e0);
            let rx = r0 + (r1 - r0) * t;
            (cum[idx - 1] + 0.5 * (r0 + rx) * (x - e0)) / total
        }
    };
    let d = ks_statistic(&mut pooled, cdf);
    assert!(d < 0.05, "KS vs scDOS: {d}");
}

#[test]
fn tracker_agrees_with_engine_on_shared_seeds() {
    // same array, two routes: full-basis engine vs warm Lanczos tracker
    let spec = gspec(Beta::One, EntryDist::Gaussian, 909);
    let ctx = spec.context();
    let opts = AdvanceOptions { refresh_every: 1000, ..Default::default() };
    let engine = run_trajectory::<f64>(40, 80, &spec, &ctx, &opts).unwrap();
    let tracker = run_edge_trajectory::<f64>(40, 80, &spec, &ctx, 1e-11).unwrap();
    assert_eq!(engine.rows.len(), tracker.rows.len());
    for (e, t) in engine.rows.iter().zip(tracker.rows.iter()) {
        assert_eq!(e.n, t.n);
        assert!((e.lambda_raw - t.lambda_raw).abs() < 1e-8, "n {}: lambda", e.n);
        assert!((e.xi1_sq - t.xi1_sq).abs() < 1e-6, "n {}: xi^2 {} vs {}", e.n, e.xi1_sq, t.xi1_sq);
        assert_eq!(e.h_nn, t.h_nn);
        assert!((e.corner_mass - t.corner_mass).abs() < 1e-6);
    }
}

#[test]
fn extension_tally_reduced_scale() {
    // complex-class tally over windows N_k = ceil(k^2.8) up to 500: events
    // should be rare (the interior threshold exceeds the endpoint threshold)
    use minorlab::stats_lab::extension_event_tally;
    let spec = gspec(Beta::Two, EntryDist::Gaussian, 240_811);
    let trajectories = 40;
    let results: Vec<(usize, usize)> = (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let (s, ctx) = descend_spec(&spec, 46, k as u64);
            let traj = run_edge_trajectory::<Complex64>(2, 500, &s, &ctx, 3e-6).unwrap();
            let tally = extension_event_tally(&traj, 2.8, 0.6, 0.2).unwrap();
            (tally.event_count, tally.windows.len())
        })
        .collect();
    let events: usize = results.iter().map(|r| r.0).sum();
    let windows: usize = results.iter().map(|r| r.1).sum();
    assert!(windows >= trajectories * 6, "expected several windows, got {windows}");
    let freq = events as f64 / windows as f64;
    assert!(freq < 0.05, "extension event frequency {freq} ({events}/{windows})");
}

#[test]
fn ou_noise_stream_is_separate_from_entries() {
    // the flow noise and the static array draw from disjoint streams
    let spec = gspec(Beta::One, EntryDist::Gaussian, 31337);
    let ctx = spec.context();
    let e = ctx.word_at(Stream::Entry, 2, 5);
    let o0 = ctx.word_at(Stream::OuNoise(0), 2, 5);
    let o1 = ctx.word_at(Stream::OuNoise(1), 2, 5);
    assert_ne!(e, o0);
    assert_ne!(o0, o1);
}
