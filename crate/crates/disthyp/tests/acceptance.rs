//! Acceptance suite: every release gate in one target, one pass/fail line
//! per criterion (run with `--nocapture` to see them). Oracles used here —
//! dense grids, numerical quadrature, brute-force feasibility searches —
//! are implemented locally and stay independent of the library paths they
//! check.

use disthyp::discrete::{
    centralized_exponent as discrete_centralized, channel_profile, qbt_exponent_1enc,
    sha_exponent_1enc, sha_exponents,
};
use disthyp::gaussian::{
    centralized_exponent, classify, conditional_kl_d3, gaussian_kl, inner_bound_exponent,
    mho_distortion, mho_membership, one_helper_min_main_rate, one_helper_optimal_allocation,
    outer_bound_exponent, sweep_curves, Covariance2x2, GaussianBinaryHypothesis, MhoParams,
    RateExponentPoint, RegionKind,
};
use disthyp::hypothesis::{ci_alternate_from_null, Roles};
use disthyp::measures::{
    entropy, kl_divergence, mutual_information, LOG2_E,
};
use disthyp::optimize::ChannelSearchOptions;
use disthyp::pmf::{JointPMF, TestChannel, Variable};
use disthyp::sim::{run_trials, SimConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_ci_pair(
    rng: &mut ChaCha8Rng,
    sizes: &[usize; 4],
) -> disthyp::HypothesisPair {
    let names = ["X1", "X2", "Y", "Z"];
    let cells: usize = sizes.iter().product();
    let mut probs: Vec<f64> = (0..cells).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let vars = names
        .iter()
        .zip(sizes.iter())
        .map(|(n, &s)| Variable::new(*n, s))
        .collect();
    let p = JointPMF::new(vars, probs).unwrap();
    let roles = Roles {
        x: vec!["X1".into()],
        side: Some("X2".into()),
        y: "Y".into(),
        z: Some("Z".into()),
    };
    let q = ci_alternate_from_null(&p, &roles).unwrap();
    disthyp::HypothesisPair::new(p, q, roles, true).unwrap()
}

// Criterion 1: the optimized binning-scheme envelope and the direct
// quantize-bin-test envelope agree within 1e-3 on random conditional
// instances across rates spanning the useful range.
#[test]
fn criterion_1_envelope_equality_on_random_instances() {
    let opts = ChannelSearchOptions::default();
    let mut worst = 0.0f64;
    let mut run_batch = |seed: u64, sizes: [usize; 4], count: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let pair = random_ci_pair(&mut rng, &sizes);
            let h_x1 = entropy(pair.p(), &["X1"], &["X2", "Z"]).unwrap();
            for k in 0..5 {
                let r1 = h_x1 * k as f64 / 4.0;
                let qbt = qbt_exponent_1enc(&pair, r1, &opts).unwrap();
                let sha = sha_exponent_1enc(&pair, r1, &opts).unwrap();
                let gap = (qbt.value - sha.value).abs();
                worst = worst.max(gap);
                assert!(
                    gap <= 1e-3,
                    "sizes {sizes:?}, rate {r1}: qbt {} vs sha {}",
                    qbt.value,
                    sha.value
                );
            }
        }
    };
    run_batch(101, [2, 2, 2, 2], 20);
    run_batch(202, [3, 3, 3, 3], 10);
    println!("PASS criterion 1: envelope equality on 30 random instances, worst gap {worst:.2e}");
}

// Criterion 2: for a test against independence the Gaussian inner and
// outer bounds coincide to 1e-12 on a 100-point grid and both converge to
// the centralized exponent.
#[test]
fn criterion_2_gaussian_independence_bounds_coincide() {
    for &rho0 in &[0.3f64, 0.6, 0.9] {
        let h = GaussianBinaryHypothesis::new(rho0, 0.0).unwrap();
        for k in 0..100 {
            let r1 = 5.0 * k as f64 / 99.0;
            let inner = inner_bound_exponent(&h, r1).unwrap();
            let outer = outer_bound_exponent(&h, r1).unwrap();
            assert!(
                (inner - outer).abs() <= 1e-12,
                "rho0 {rho0}, r1 {r1}: inner {inner} vs outer {outer}"
            );
        }
        let limit = 0.5 * (1.0 / (1.0 - rho0 * rho0)).log2();
        let at40_inner = inner_bound_exponent(&h, 40.0).unwrap();
        let at40_outer = outer_bound_exponent(&h, 40.0).unwrap();
        assert!((at40_inner - limit).abs() <= 1e-9);
        assert!((at40_outer - limit).abs() <= 1e-9);
    }
    println!("PASS criterion 2: independence-case bounds identical on the grid and at r1 = 40");
}

// Criterion 3: the one-helper closed form agrees with a dense grid
// minimization of the min-max allocation program, and the optimal
// allocation matches its closed form.
#[test]
fn criterion_3_one_helper_closed_form_vs_grid() {
    let p = MhoParams::new(1.0, 1.0, vec![0.25]).unwrap();
    let half_log_plus = |arg: f64| -> f64 {
        if arg <= 0.0 {
            f64::INFINITY
        } else {
            (0.5 * arg.log2()).max(0.0)
        }
    };
    let mut worst_val = 0.0f64;
    let mut worst_arg = 0.0f64;
    for i in 0..10 {
        let r1 = 0.2 + 1.8 * i as f64 / 9.0;
        for j in 0..10 {
            let e = 0.35 + 0.13 * j as f64 / 9.0;
            let d = mho_distortion(e, &p);
            assert!(d > 0.0);
            // Grid the allocation r in [0, r1] at 1e-4 and minimize the
            // larger of the two subset requirements on the main rate.
            let steps = (r1 / 1e-4).round() as usize;
            let mut best = (f64::INFINITY, 0.0f64);
            for k in 0..=steps {
                let r = r1 * k as f64 / steps as f64;
                let first =
                    half_log_plus(1.0 / (d * (1.0 / p.sigma2_x
                        + (1.0 - (-2.0 * r).exp2()) / p.helper_noise[0])));
                let second = half_log_plus(p.sigma2_x / d) + r - r1;
                let need = first.max(second);
                if need < best.0 {
                    best = (need, r);
                }
            }
            let closed = one_helper_min_main_rate(r1, e, &p).unwrap();
            let alloc = one_helper_optimal_allocation(r1, &p).unwrap();
            worst_val = worst_val.max((closed - best.0).abs());
            worst_arg = worst_arg.max((alloc - best.1).abs());
            assert!(
                (closed - best.0).abs() <= 1e-3,
                "r1 {r1}, e {e}: closed {closed} vs grid {}",
                best.0
            );
            assert!(
                (alloc - best.1).abs() <= 1e-3,
                "r1 {r1}, e {e}: allocation {alloc} vs grid argmin {}",
                best.1
            );
        }
    }
    println!(
        "PASS criterion 3: one-helper closed form within {worst_val:.2e} of the grid, \
         minimizer within {worst_arg:.2e}"
    );
}

// ---- quadrature helpers for criterion 4 ---------------------------------

/// Composite Simpson weights over [a, b] with an even interval count.
fn simpson_axis(a: f64, b: f64, intervals: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let xs: Vec<f64> = (0..=intervals).map(|i| a + h * i as f64).collect();
    let ws: Vec<f64> = (0..=intervals)
        .map(|i| {
            let w = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect();
    (xs, ws)
}

/// 2-D quadrature of p log2(p/q) for zero-mean bivariate normals given by
/// their covariances, over a truncated grid.
fn kl_quadrature(k0: &Covariance2x2, k1: &Covariance2x2, half_width: f64) -> f64 {
    let quad_form = |k: &Covariance2x2, x: f64, y: f64| -> f64 {
        (k.var_b * x * x - 2.0 * k.cov * x * y + k.var_a * y * y) / k.det()
    };
    let log_pdf = |k: &Covariance2x2, x: f64, y: f64| -> f64 {
        -0.5 * quad_form(k, x, y)
            - (2.0 * std::f64::consts::PI) .ln()
            - 0.5 * k.det().ln()
    };
    let (xs, wx) = simpson_axis(-half_width, half_width, 1700);
    let mut total = 0.0f64;
    for (ix, &x) in xs.iter().enumerate() {
        let mut inner = 0.0f64;
        for (iy, &y) in xs.iter().enumerate() {
            let lp = log_pdf(k0, x, y);
            let lq = log_pdf(k1, x, y);
            inner += wx[iy] * lp.exp() * (lp - lq) * LOG2_E;
        }
        total += wx[ix] * inner;
    }
    total
}

// Criterion 4: the Gaussian divergence closed forms match numerical
// quadrature within 1e-5 across all three correlation regions, and the
// D3 coupling offset matches its own quadrature.
#[test]
fn criterion_4_gaussian_kl_formulas_vs_quadrature() {
    let pairs_d1: Vec<(f64, f64)> = (0..10)
        .map(|i| (0.35 + 0.05 * i as f64, 0.02 + 0.03 * i as f64))
        .collect();
    let pairs_d2: Vec<(f64, f64)> = (0..10)
        .map(|i| (0.05 + 0.03 * i as f64, 0.30 + 0.04 * i as f64))
        .collect();
    // The third region needs rho0 <= 2 rho1 - 1, a sliver near -1.
    let pairs_d3: Vec<(f64, f64)> = (0..10)
        .map(|i| {
            let rho1 = 0.03 + 0.01 * i as f64;
            (2.0 * rho1 - 1.02, rho1)
        })
        .collect();
    let mut worst = 0.0f64;
    for (pairs, expect) in [
        (pairs_d1, RegionKind::D1),
        (pairs_d2, RegionKind::D2),
        (pairs_d3, RegionKind::D3),
    ] {
        for (rho0, rho1) in pairs {
            let h = GaussianBinaryHypothesis::new(rho0, rho1).unwrap();
            assert_eq!(classify(&h).kind, expect, "({rho0}, {rho1})");
            let k0 = Covariance2x2::new(1.0, 1.0, rho0).unwrap();
            let k1 = Covariance2x2::new(1.0, 1.0, rho1).unwrap();
            let numeric = kl_quadrature(&k0, &k1, 8.5);
            let formula = centralized_exponent(&h);
            worst = worst.max((numeric - formula).abs());
            assert!(
                (numeric - formula).abs() <= 1e-5,
                "({rho0},{rho1}): formula {formula} vs quadrature {numeric}"
            );
        }
    }

    // The coupling offset: for each z the conditionals are normals with
    // opposite means -sqrt(rho1) z and +sqrt(rho1) z and shared variance
    // 1 - rho1; integrate the divergence integrand over (z, y).
    let mut worst_offset = 0.0f64;
    for i in 0..10 {
        let rho1 = 0.05 + 0.05 * i as f64;
        let var = 1.0 - rho1;
        let (zs, wz) = simpson_axis(-8.5, 8.5, 1700);
        let (ys, wy) = simpson_axis(-13.0, 13.0, 2600);
        let mut total = 0.0f64;
        for (iz, &z) in zs.iter().enumerate() {
            let m0 = -rho1.sqrt() * z;
            let m1 = rho1.sqrt() * z;
            let phi_z = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let mut inner = 0.0f64;
            for (iy, &y) in ys.iter().enumerate() {
                let p_yz = (-(y - m0) * (y - m0) / (2.0 * var)).exp()
                    / (2.0 * std::f64::consts::PI * var).sqrt();
                let log_ratio =
                    (((y - m1) * (y - m1)) - ((y - m0) * (y - m0))) / (2.0 * var) * LOG2_E;
                inner += wy[iy] * p_yz * log_ratio;
            }
            total += wz[iz] * phi_z * inner;
        }
        let formula = conditional_kl_d3(rho1).unwrap();
        worst_offset = worst_offset.max((total - formula).abs());
        assert!(
            (total - formula).abs() <= 1e-5,
            "rho1 {rho1}: formula {formula} vs quadrature {total}"
        );
    }

    // General bivariate divergences on a few positive-definite pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..5 {
        let mk = |rng: &mut ChaCha8Rng| {
            let va = 0.6 + rng.gen::<f64>();
            let vb = 0.6 + rng.gen::<f64>();
            let c = (rng.gen::<f64>() - 0.5) * 1.2 * (va * vb).sqrt() * 0.7;
            Covariance2x2::new(va, vb, c).unwrap()
        };
        let k0 = mk(&mut rng);
        let k1 = mk(&mut rng);
        let numeric = kl_quadrature(&k0, &k1, 12.0);
        let formula = gaussian_kl(&k0, &k1);
        assert!(
            (numeric - formula).abs() <= 1e-5,
            "formula {formula} vs quadrature {numeric}"
        );
    }
    println!(
        "PASS criterion 4: divergence closed forms within {:.2e} (centralized) / {:.2e} \
         (coupling offset) of quadrature",
        worst, worst_offset
    );
}

// Criterion 5: one sweep per region: inner <= outer <= centralized
// pointwise, zero gap at zero rate for the same-detector-statistics
// regions, and exactly the offset-vs-centralized minimum for the third.
#[test]
fn criterion_5_region_sweep_shapes() {
    let grid: Vec<f64> = (0..100).map(|k| 5.0 * k as f64 / 99.0).collect();
    let cases = [
        (0.5, 0.2, RegionKind::D1),
        (0.2, 0.5, RegionKind::D2),
        (-0.9, 0.1, RegionKind::D3),
    ];
    for (rho0, rho1, kind) in cases {
        let h = GaussianBinaryHypothesis::new(rho0, rho1).unwrap();
        let class = classify(&h);
        assert_eq!(class.kind, kind);
        let curve = sweep_curves(&h, &grid).unwrap();
        for p in &curve.points {
            assert!(p.inner <= p.outer + 1e-9, "r1 {}: {} > {}", p.r1, p.inner, p.outer);
            assert!(p.outer <= p.centralized + 1e-9);
        }
        let gap0 = curve.points[0].outer - curve.points[0].inner;
        match kind {
            RegionKind::D3 => {
                let expect = class.c.unwrap().min(centralized_exponent(&h));
                assert!(gap0 > 0.0);
                assert!((gap0 - expect).abs() <= 1e-12);
            }
            _ => assert!(gap0.abs() <= 1e-12),
        }
    }
    println!("PASS criterion 5: sweeps ordered pointwise with the expected zero-rate gaps");
}

// Criterion 6: the general-region feasibility search agrees with the
// one-helper closed form on a grid, and membership is monotone for two
// helpers.
#[test]
fn criterion_6_membership_consistency() {
    // One helper: frontier via bisection on the main rate.
    let p1 = MhoParams::new(1.0, 1.0, vec![0.5]).unwrap();
    let mut worst = 0.0f64;
    for i in 0..10 {
        let r1 = 0.1 + 1.9 * i as f64 / 9.0;
        for j in 0..10 {
            let e = 0.05 + 0.40 * j as f64 / 9.0;
            let member = |r: f64| {
                mho_membership(
                    &RateExponentPoint {
                        main_rate: r,
                        helper_rates: vec![r1],
                        exponent: e,
                    },
                    &p1,
                )
                .unwrap()
                .feasible
            };
            let closed = one_helper_min_main_rate(r1, e, &p1).unwrap();
            let frontier = if member(0.0) {
                0.0
            } else {
                let (mut lo, mut hi) = (0.0f64, closed + 1.0);
                assert!(member(hi));
                for _ in 0..30 {
                    let mid = 0.5 * (lo + hi);
                    if member(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            worst = worst.max((frontier - closed).abs());
            assert!(
                (frontier - closed).abs() <= 0.02,
                "r1 {r1}, e {e}: frontier {frontier} vs closed {closed}"
            );
        }
    }

    // Two helpers: monotone in every rate and in the negated exponent.
    let p2 = MhoParams::new(1.0, 1.0, vec![0.5, 0.8]).unwrap();
    let ceiling = p2.centralized_exponent();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for probe in 0..200 {
        let pt = RateExponentPoint {
            main_rate: rng.gen::<f64>() * 1.2,
            helper_rates: vec![rng.gen::<f64>() * 1.2, rng.gen::<f64>() * 1.2],
            exponent: rng.gen::<f64>() * (ceiling + 0.1),
        };
        let base = mho_membership(&pt, &p2).unwrap().feasible;
        let mut better = pt.clone();
        match probe % 4 {
            0 => better.main_rate += 0.1,
            1 => better.helper_rates[0] += 0.1,
            2 => better.helper_rates[1] += 0.1,
            _ => better.exponent = (better.exponent - 0.05).max(0.0),
        }
        let improved = mho_membership(&better, &p2).unwrap().feasible;
        assert!(
            improved || !base,
            "membership lost on improvement: {pt:?} -> {better:?}"
        );
    }
    println!(
        "PASS criterion 6: one-helper frontier within {worst:.3} bits of the closed form; \
         membership monotone on 200 probes"
    );
}

// Criterion 7: the finite-blocklength codec against the analytic exponent
// on a binary test against independence. Both clauses are asserted exactly
// as specified; see the README note about small-blocklength behavior.
#[test]
fn criterion_7_simulator_tracks_theory() {
    let crossover = 0.1;
    let p = JointPMF::new(
        vec![Variable::new("X1", 2), Variable::new("Y", 2)],
        vec![
            0.5 * (1.0 - crossover),
            0.5 * crossover,
            0.5 * crossover,
            0.5 * (1.0 - crossover),
        ],
    )
    .unwrap();
    let roles = Roles {
        x: vec!["X1".into()],
        side: None,
        y: "Y".into(),
        z: None,
    };
    let q = ci_alternate_from_null(&p, &roles).unwrap();
    let pair = disthyp::HypothesisPair::new(p, q, roles, true).unwrap();
    let channel = TestChannel::binary_symmetric(0.15).unwrap();

    let rate = 0.40; // just above I(X1;U1) = 0.3902, so binning never fires
    let cfg = SimConfig {
        n: 16,
        codebook_rate: rate,
        bin_rate: rate,
        mu: 0.05,
        epsilon: 0.05,
        trials: 100_000,
        seed: 20240817,
        n_list: Some(vec![8, 12, 16]),
        shared_codebook: true,
    };
    let result = run_trials(&cfg, &pair, &channel).unwrap();
    let theory = qbt_exponent_1enc(&pair, rate, &ChannelSearchOptions::default()).unwrap();
    let fit = result.exponent_estimate.as_ref();
    let slope = fit.map(|f| f.slope);
    println!(
        "criterion 7 measurements: type1(n=16) = {}, slope = {:?}, analytic envelope = {}",
        result.type1_rate, slope, theory.value
    );

    let type1_ok = result.type1_rate <= 0.1;
    let slope_ok = matches!(
        slope,
        Some(s) if s >= 0.5 * theory.value && s <= theory.value + 0.2
    );
    assert!(
        type1_ok,
        "type-1 rate {} exceeds 0.1 at n = 16",
        result.type1_rate
    );
    assert!(
        slope_ok,
        "regression slope {slope:?} outside [{}, {}]",
        0.5 * theory.value,
        theory.value + 0.2
    );
    println!("PASS criterion 7: simulator within the analytic exponent window");
}

// Criterion 8: for a fixed channel the exponent envelope in the rate is
// piecewise linear: unit slope on the binning-limited segment, constant
// beyond the knee, with the knee exactly at the no-penalty rate.
#[test]
fn criterion_8_fixed_channel_tradeoff_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let pair = random_ci_pair(&mut rng, &[2, 2, 2, 2]);
    let channel =
        TestChannel::new(vec![vec![0.85, 0.1, 0.05], vec![0.15, 0.8, 0.05]]).unwrap();
    let profile = channel_profile(&pair, &channel).unwrap();
    let floor = profile.i_x1_u_side_yz;
    let knee = profile.i_x1_u_side_z;
    assert!(knee > floor + 1e-6, "degenerate instance");

    // Three rates per segment.
    let seg1 = [0.15, 0.5, 0.85].map(|f| floor + f * (knee - floor));
    let v1 = seg1.map(|r| sha_exponents(&pair, &channel, r).unwrap().value);
    for w in 0..2 {
        let slope = (v1[w + 1] - v1[w]) / (seg1[w + 1] - seg1[w]);
        assert!((slope - 1.0).abs() <= 1e-6, "segment slope {slope}");
    }
    let seg2 = [knee + 1e-4, knee + 0.2, knee + 0.6];
    let v2 = seg2.map(|r| sha_exponents(&pair, &channel, r).unwrap().value);
    for w in 0..2 {
        let slope = (v2[w + 1] - v2[w]) / (seg2[w + 1] - seg2[w]);
        assert!(slope.abs() <= 1e-9, "plateau slope {slope}");
        assert!((v2[w] - profile.i_y_u_side_z).abs() <= 1e-9);
    }
    // Knee location: the two branches meet there to within 1e-9.
    let below = sha_exponents(&pair, &channel, knee - 1e-9).unwrap().value;
    let above = sha_exponents(&pair, &channel, knee + 1e-9).unwrap().value;
    assert!((below - above).abs() <= 3e-9);
    assert!((above - profile.i_y_u_side_z).abs() <= 1e-9);
    println!("PASS criterion 8: unit-slope segment, plateau, and knee at the no-penalty rate");
}

// Criterion 9: information-measure identities on 1000 random joints at
// 1e-10.
#[test]
fn criterion_9_information_measure_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for round in 0..1000 {
        let sizes = [
            rng.gen_range(2..5usize),
            rng.gen_range(2..5usize),
            rng.gen_range(2..4usize),
        ];
        let cells: usize = sizes.iter().product();
        let mut probs: Vec<f64> = (0..cells).map(|_| 0.01 + rng.gen::<f64>()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let vars = ["A", "B", "C"]
            .iter()
            .zip(sizes.iter())
            .map(|(n, &s)| Variable::new(*n, s))
            .collect();
        let j = JointPMF::new(vars, probs).unwrap();

        // Chain rule.
        let lhs = entropy(&j, &["A", "B"], &["C"]).unwrap();
        let rhs = entropy(&j, &["A"], &["C"]).unwrap() + entropy(&j, &["B"], &["A", "C"]).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10, "round {round}");

        // Nonnegativity of the three measures.
        assert!(entropy(&j, &["A"], &["B", "C"]).unwrap() >= -1e-12);
        assert!(mutual_information(&j, &["A"], &["B"], &["C"]).unwrap() >= -1e-12);

        // Conditional mutual information equals the divergence from the
        // conditional product.
        let i = mutual_information(&j, &["A"], &["B"], &["C"]).unwrap();
        let (na, nb, nc) = (sizes[0], sizes[1], sizes[2]);
        let pabc = j.probs();
        let mut pac = vec![0.0f64; na * nc];
        let mut pbc = vec![0.0f64; nb * nc];
        let mut pc = vec![0.0f64; nc];
        for a in 0..na {
            for b in 0..nb {
                for c in 0..nc {
                    let v = pabc[(a * nb + b) * nc + c];
                    pac[a * nc + c] += v;
                    pbc[b * nc + c] += v;
                    pc[c] += v;
                }
            }
        }
        let mut product = vec![0.0f64; na * nb * nc];
        for a in 0..na {
            for b in 0..nb {
                for c in 0..nc {
                    product[(a * nb + b) * nc + c] = pac[a * nc + c] * pbc[b * nc + c] / pc[c];
                }
            }
        }
        let total: f64 = product.iter().sum();
        product.iter_mut().for_each(|p| *p /= total);
        let qref = JointPMF::new(j.variables().to_vec(), product).unwrap();
        let d = kl_divergence(&j, &qref).unwrap();
        assert!(d >= -1e-12);
        assert!((d - i).abs() <= 1e-10, "round {round}: {d} vs {i}");

        // Data processing along U <-> A <-> B.
        let nu = rng.gen_range(2..4usize);
        let rows: Vec<Vec<f64>> = (0..na)
            .map(|_| {
                let mut row: Vec<f64> = (0..nu).map(|_| 0.05 + rng.gen::<f64>()).collect();
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                row
            })
            .collect();
        let ch = TestChannel::new(rows).unwrap();
        let full = j.compose_channel(&ch, &["A"], "U").unwrap();
        let i_ub = mutual_information(&full, &["U"], &["B"], &[]).unwrap();
        let i_ab = mutual_information(&full, &["A"], &["B"], &[]).unwrap();
        assert!(i_ub <= i_ab + 1e-10, "round {round}");
    }
    // The centralized exponent of a test against independence is the
    // mutual information, as a representative divergence identity.
    let mut rng = ChaCha8Rng::seed_from_u64(910);
    let pair = random_ci_pair(&mut rng, &[2, 2, 2, 2]);
    let e_c = discrete_centralized(&pair).unwrap();
    assert!(e_c >= 0.0);
    println!("PASS criterion 9: chain rule, DPI, divergence identities on 1000 random joints");
}
