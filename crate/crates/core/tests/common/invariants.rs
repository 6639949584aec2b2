//! Property checks shared by the property-test target and the acceptance run.
//! Each check drives a deterministic proptest runner for `cases` cases and
//! reports the first failure as a message.

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smoothreg::cart::{best_split, RegressionTree, SampleCount, TreeParams};
use smoothreg::cheby::{build_design_matrix, column_count, BasisTerm, ChebyBasisConfig};
use smoothreg::chebypoly::ChebyPolyModel;
use smoothreg::chebytree::{ChebyTreeModel, ChebyTreeParams, LeafModel};
use smoothreg::data::{kfold_split, Dataset, MedianImputer, MinMaxScaler, Standardizer};
use smoothreg::erbf::{loss_and_grad, place_centers, ErbfConfig, ErbfModel, NRbf};
use smoothreg::harness::{clip_predictions, friedman_test, nested_cv_run, rank_models, CvConfig, FoldResult, SearchSpace};
use smoothreg::model::ModelKind;
use smoothreg::numkit::{kmeans, lbfgs_minimize, ridge_solve, LbfgsOptions};
use smoothreg::synth::{gen, SynthKind, SynthSpec};

use super::oracles::*;

pub type Check = fn(u32) -> Result<(), String>;

pub const MIN_CASES: u32 = 200;

/// Every invariant, by name.
pub const ALL: &[(&str, Check)] = &[
    ("data: standardizer round trip", standardizer_round_trip),
    ("data: minmax clip containment", minmax_clip_containment),
    ("data: fold plan partition", fold_plan_partition),
    ("data: imputation keeps observed values", imputation_keeps_observed),
    ("numkit: ridge shrinkage monotone", ridge_shrinkage_monotone),
    ("numkit: ridge matches normal equations", ridge_matches_normal_equations),
    ("numkit: lbfgs losses non-increasing", lbfgs_losses_non_increasing),
    ("numkit: kmeans sse non-increasing", kmeans_sse_non_increasing),
    ("cheby: column count exact", cheby_column_count),
    ("cheby: univariate columns match cosine", cheby_columns_match_cosine),
    ("cheby: conditioning beats monomials", cheby_conditioning),
    ("chebypoly: deterministic fit", chebypoly_deterministic),
    ("chebypoly: clip containment", chebypoly_clip_containment),
    ("chebypoly: ridge path shrinks", chebypoly_ridge_path),
    ("chebypoly: complexity 1 equals ridge", chebypoly_c1_is_ridge),
    ("cart: split matches brute force", cart_split_matches_brute_force),
    ("cart: deeper trees fit no worse", cart_deeper_not_worse),
    ("cart: leaves respect min_samples_leaf", cart_leaf_sizes),
    ("chebytree: complexity 1 leaves are affine", chebytree_c1_affine),
    ("chebytree: single leaf equals chebypoly", chebytree_single_leaf),
    ("chebytree: queries map to one leaf", chebytree_partition),
    ("erbf: widths positive and finite", erbf_widths_positive),
    ("erbf: width optimisation does not raise mse", erbf_mse_progress),
    ("erbf: gradient matches finite differences", erbf_gradient_fd),
    ("erbf: lipschitz placement concentrates", erbf_lipschitz_concentration),
    ("erbf: irrelevant feature gets wider widths", erbf_anisotropy),
    ("harness: gap is train minus test", harness_gap_exact),
    ("harness: rank rows sum to k(k+1)/2", harness_rank_sums),
    ("harness: friedman invariant under exp", harness_friedman_monotone),
    ("harness: nested cv deterministic", harness_nested_cv_deterministic),
    ("harness: clip idempotent", harness_clip_idempotent),
    ("synth: noise-free target is a function of features", synth_noise_free),
    ("synth: catalogue column counts", synth_column_counts),
];

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

fn ok_or_fail<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, TestCaseError> {
    r.map_err(|e| fail(e.to_string()))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn smooth_target(x: &DMatrix<f64>, rng: &mut impl Rng, noise: f64) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| {
            let row = x.row(i);
            let s: f64 = row.iter().enumerate().map(|(j, v)| (j as f64 + 1.0) * v).sum();
            s.sin() + 0.5 * row[0] * row[0] + noise * rng.random_range(-1.0..1.0)
        })
        .collect()
}

// ---- data ----

pub fn standardizer_round_trip(cases: u32) -> Result<(), String> {
    run(cases, (2usize..60, 1usize..6, any::<u64>()), |(n, d, seed)| {
        let mut r = rng(seed);
        let constant_col = r.random_bool(0.3).then(|| r.random_range(0..d));
        let x: DMatrix<f64> = DMatrix::from_fn(n, d, |_, j| {
            if Some(j) == constant_col { 7.25 } else { r.random_range(-100.0..100.0) * 0.1 + j as f64 * 10.0 }
        });
        let z = ok_or_fail(Standardizer::fit(&x).apply(&x))?;
        for j in 0..d {
            let col: Vec<f64> = z.column(j).iter().copied().collect();
            let (m, s) = population_mean_std(&col);
            prop_assert!(m.abs() < 1e-9, "column {} mean {}", j, m);
            let raw: Vec<f64> = x.column(j).iter().copied().collect();
            if population_mean_std(&raw).1 > 1e-9 {
                prop_assert!((s - 1.0).abs() < 1e-9, "column {} std {}", j, s);
            }
        }
        Ok(())
    })
}

pub fn minmax_clip_containment(cases: u32) -> Result<(), String> {
    run(cases, (1usize..40, 1usize..5, 1usize..40, any::<u64>()), |(n, d, m, seed)| {
        let mut r = rng(seed);
        let x: DMatrix<f64> = DMatrix::from_fn(n, d, |_, _| r.random_range(-5.0..5.0));
        let unclipped = ok_or_fail(MinMaxScaler::fit(&x, false).apply(&x))?;
        prop_assert!(unclipped.iter().all(|v| (-1.0..=1.0).contains(v)), "training data left [-1, 1]");
        let query: DMatrix<f64> = DMatrix::from_fn(m, d, |_, _| r.random_range(-1e6..1e6));
        let out = ok_or_fail(MinMaxScaler::fit(&x, true).apply(&query))?;
        prop_assert!(out.iter().all(|v| (-1.0..=1.0).contains(v)), "clipped query left [-1, 1]");
        Ok(())
    })
}

pub fn fold_plan_partition(cases: u32) -> Result<(), String> {
    run(cases, (2usize..300, 2usize..12, any::<u64>()), |(n, k, seed)| {
        let k = k.min(n);
        let plan = ok_or_fail(kfold_split(n, k, seed))?;
        let mut seen = vec![0usize; n];
        for f in 0..k {
            let test = plan.test_indices(f);
            prop_assert!(!test.is_empty(), "fold {} empty", f);
            for &i in &test {
                seen[i] += 1;
            }
            prop_assert_eq!(test.len() + plan.train_indices(f).len(), n);
        }
        prop_assert!(seen.iter().all(|&c| c == 1), "test folds do not partition 0..n");
        let sizes = plan.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(ok_or_fail(kfold_split(n, k, seed))?, plan);
        Ok(())
    })
}

pub fn imputation_keeps_observed(cases: u32) -> Result<(), String> {
    run(cases, (1usize..40, 1usize..5, 0.0f64..0.6, any::<u64>()), |(n, d, p_missing, seed)| {
        let mut r = rng(seed);
        let mut x: DMatrix<f64> = DMatrix::from_fn(n, d, |_, _| r.random_range(-3.0..3.0));
        for i in 0..n {
            for j in 0..d {
                // Row 0 stays observed so every column has a median.
                if i > 0 && r.random_bool(p_missing) {
                    x[(i, j)] = f64::NAN;
                }
            }
        }
        let imp = ok_or_fail(MedianImputer::fit(&x))?;
        let out = ok_or_fail(imp.apply(&x))?;
        for (a, b) in x.iter().zip(out.iter()) {
            prop_assert!(!b.is_nan(), "NaN survived imputation");
            if !a.is_nan() {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        Ok(())
    })
}

// ---- numkit ----

fn random_system(r: &mut ChaCha8Rng, n: usize, p: usize) -> (DMatrix<f64>, Vec<f64>) {
    let phi = normal_matrix(r, n, p).map(|v| v * 2.0);
    let y = normal_vec(r, n).iter().enumerate().map(|(i, e)| phi.row(i).sum() + e).collect();
    (phi, y)
}

pub fn ridge_shrinkage_monotone(cases: u32) -> Result<(), String> {
    run(cases, (1usize..10, -4.0f64..3.0, -4.0f64..3.0, any::<bool>(), any::<u64>()), |(p, la, lb, icpt, seed)| {
        let mut r = rng(seed);
        let n = p + 3 + r.random_range(0..30);
        let (phi, y) = random_system(&mut r, n, p);
        let (a1, a2) = (10f64.powf(la.min(lb)), 10f64.powf(la.max(lb)));
        let w1 = ok_or_fail(ridge_solve(&phi, &y, a1, icpt))?.weight_norm();
        let w2 = ok_or_fail(ridge_solve(&phi, &y, a2, icpt))?.weight_norm();
        prop_assert!(w2 <= w1 + 1e-10, "‖w({})‖ = {} > ‖w({})‖ = {}", a2, w2, a1, w1);
        Ok(())
    })
}

/// One random system as used by the ridge oracle comparison; returns the
/// relative error of `[b, w]` against the normal equations.
pub fn ridge_oracle_case(seed: u64, alpha: f64, intercept: bool) -> f64 {
    let mut r = rng(seed);
    let p = r.random_range(1..=10);
    let n = if alpha == 0.0 { r.random_range(p + 3..=50) } else { r.random_range(3..=50) };
    let (phi, y) = random_system(&mut r, n, p);
    let sol = ridge_solve(&phi, &y, alpha, intercept).expect("ridge_solve");
    let (b, w) = normal_equations_ridge(&phi, &y, alpha, intercept);
    let mut got = vec![sol.intercept];
    got.extend(&sol.weights);
    let mut want = vec![b];
    want.extend(&w);
    rel_error(&got, &want)
}

pub fn ridge_matches_normal_equations(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), prop::sample::select(vec![0.0, 0.3, 10.0]), any::<bool>()), |(seed, alpha, icpt)| {
        let err = ridge_oracle_case(seed, alpha, icpt);
        prop_assert!(err < 1e-8, "relative error {}", err);
        Ok(())
    })
}

pub fn lbfgs_losses_non_increasing(cases: u32) -> Result<(), String> {
    run(cases, (1usize..8, any::<bool>(), 1usize..60, any::<u64>()), |(dim, rosen, iters, seed)| {
        let mut r = rng(seed);
        let scales: Vec<f64> = (0..dim).map(|_| r.random_range(0.1..50.0)).collect();
        let centre: Vec<f64> = normal_vec(&mut r, dim);
        let x0: Vec<f64> = normal_vec(&mut r, dim).iter().map(|v| 2.0 * v).collect();
        let objective = |x: &[f64]| -> smoothreg::Result<(f64, Vec<f64>)> {
            if rosen {
                let mut f = 0.0;
                let mut g = vec![0.0; x.len()];
                for i in 0..x.len() {
                    f += (x[i] - 1.0).powi(2) + 0.01 * x[i].powi(4);
                    g[i] += 2.0 * (x[i] - 1.0) + 0.04 * x[i].powi(3);
                    if i + 1 < x.len() {
                        let t = x[i + 1] - x[i] * x[i];
                        f += 10.0 * t * t;
                        g[i + 1] += 20.0 * t;
                        g[i] -= 40.0 * t * x[i];
                    }
                }
                Ok((f, g))
            } else {
                let f = x.iter().zip(&centre).zip(&scales).map(|((v, c), s)| s * (v - c).powi(2)).sum();
                let g = x.iter().zip(&centre).zip(&scales).map(|((v, c), s)| 2.0 * s * (v - c)).collect();
                Ok((f, g))
            }
        };
        let res = ok_or_fail(lbfgs_minimize(objective, &x0, LbfgsOptions::with_max_iter(iters)))?;
        for w in res.loss_trace.windows(2) {
            prop_assert!(w[1] <= w[0], "accepted loss rose from {} to {}", w[0], w[1]);
        }
        prop_assert!(res.loss <= res.loss_trace[0] + 1e-12);
        Ok(())
    })
}

pub fn kmeans_sse_non_increasing(cases: u32) -> Result<(), String> {
    run(cases, (2usize..80, 1usize..4, 1usize..8, any::<u64>()), |(n, d, k, seed)| {
        let mut r = rng(seed);
        let x = normal_matrix(&mut r, n, d);
        let km = ok_or_fail(kmeans(&x, k.min(n), seed, 100))?;
        for w in km.sse_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].max(1.0), "sse rose from {} to {}", w[0], w[1]);
        }
        Ok(())
    })
}

// ---- cheby ----

pub fn cheby_column_count(cases: u32) -> Result<(), String> {
    run(cases, (1usize..6, 1usize..21, 1usize..15, any::<u64>()), |(n, d, c, seed)| {
        let mut r = rng(seed);
        let x: DMatrix<f64> = DMatrix::from_fn(n, d, |_, _| r.random_range(-1.0..=1.0));
        let cfg = ChebyBasisConfig::univariate(c);
        let dm = ok_or_fail(build_design_matrix(&x, &cfg))?;
        prop_assert_eq!(dm.values.ncols(), 1 + d * c);
        prop_assert_eq!(column_count(d, &cfg, 0), 1 + d * c);
        prop_assert!(dm.values.column(0).iter().all(|&v| v == 1.0));
        Ok(())
    })
}

pub fn cheby_columns_match_cosine(cases: u32) -> Result<(), String> {
    run(cases, (1usize..20, 1usize..4, 1usize..15, any::<u64>()), |(n, d, c, seed)| {
        let mut r = rng(seed);
        let x: DMatrix<f64> = DMatrix::from_fn(n, d, |_, _| r.random_range(-1.0..=1.0));
        let dm = ok_or_fail(build_design_matrix(&x, &ChebyBasisConfig::univariate(c)))?;
        for (col, term) in dm.columns.iter().enumerate() {
            let BasisTerm::Univariate { feature, degree } = *term else { continue };
            for i in 0..n {
                let (got, want) = (dm.values[(i, col)], cheb_cos(degree, x[(i, feature)]));
                prop_assert!((got - want).abs() <= 1e-12, "T_{}({}) = {} vs {}", degree, x[(i, feature)], got, want);
                prop_assert!((-1.0..=1.0).contains(&got));
            }
        }
        Ok(())
    })
}

/// Not randomised: 200 Chebyshev nodes, degree 12, one feature.
pub fn conditioning_ratio() -> f64 {
    let n = 200;
    let nodes: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * n) as f64).cos()).collect();
    let x = DMatrix::from_column_slice(n, 1, &nodes);
    let cheb = build_design_matrix(&x, &ChebyBasisConfig::univariate(12)).expect("design").values;
    let mono = DMatrix::from_fn(n, 13, |i, j| nodes[i].powi(j as i32));
    cond_number(&cheb) / cond_number(&mono)
}

pub fn cheby_conditioning(_cases: u32) -> Result<(), String> {
    let ratio = conditioning_ratio();
    if ratio <= 0.01 { Ok(()) } else { Err(format!("condition ratio {ratio} exceeds 1/100")) }
}

// ---- chebypoly ----

fn poly_data(seed: u64, n: usize, d: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let x: DMatrix<f64> = DMatrix::from_fn(n, d, |_, j| r.random_range(-2.0..2.0) * (j + 1) as f64);
    let y = smooth_target(&x, &mut r, 0.2);
    (x, y)
}

pub fn chebypoly_deterministic(cases: u32) -> Result<(), String> {
    run(cases, (3usize..60, 1usize..5, 1usize..8, any::<bool>(), any::<u64>()), |(n, d, c, inter, seed)| {
        let (x, y) = poly_data(seed, n, d);
        let basis = if inter { ChebyBasisConfig::with_interactions(c, 2) } else { ChebyBasisConfig::univariate(c) };
        let a = ok_or_fail(ChebyPolyModel::fit_xy(&x, &y, basis, 0.1))?;
        let b = ok_or_fail(ChebyPolyModel::fit_xy(&x, &y, basis, 0.1))?;
        prop_assert!(a == b, "refit differs");
        let (pa, pb) = (ok_or_fail(a.predict(&x))?, ok_or_fail(b.predict(&x))?);
        prop_assert!(pa.iter().zip(&pb).all(|(u, v)| u.to_bits() == v.to_bits()));
        Ok(())
    })
}

pub fn chebypoly_clip_containment(cases: u32) -> Result<(), String> {
    run(cases, (3usize..60, 1usize..4, 1usize..15, -6.0f64..1.0, any::<u64>()), |(n, d, c, log_alpha, seed)| {
        let (x, y) = poly_data(seed, n, d);
        let model = ok_or_fail(ChebyPolyModel::fit_xy(&x, &y, ChebyBasisConfig::univariate(c), 10f64.powf(log_alpha)))?;
        let mut r = rng(seed ^ 1);
        let q: DMatrix<f64> = DMatrix::from_fn(50, d, |_, _| r.random_range(-1e3..1e3));
        let (m, s) = population_mean_std(&y);
        for p in ok_or_fail(model.predict(&q))? {
            prop_assert!(p >= m - 3.0 * s && p <= m + 3.0 * s, "prediction {} outside window", p);
        }
        Ok(())
    })
}

pub fn chebypoly_ridge_path(cases: u32) -> Result<(), String> {
    run(cases, (5usize..60, 1usize..4, 1usize..8, -5.0f64..2.0, -5.0f64..2.0, any::<u64>()), |(n, d, c, la, lb, seed)| {
        let (x, y) = poly_data(seed, n, d);
        let basis = ChebyBasisConfig::univariate(c);
        let norm = |a: f64| ChebyPolyModel::fit_xy(&x, &y, basis, a).map(|m| m.solution.weight_norm());
        let (lo, hi) = (10f64.powf(la.min(lb)), 10f64.powf(la.max(lb)));
        let (w_lo, w_hi) = (ok_or_fail(norm(lo))?, ok_or_fail(norm(hi))?);
        prop_assert!(w_hi <= w_lo + 1e-10, "‖w({})‖ = {} > ‖w({})‖ = {}", hi, w_hi, lo, w_lo);
        Ok(())
    })
}

pub fn chebypoly_c1_is_ridge(cases: u32) -> Result<(), String> {
    run(cases, (3usize..60, 1usize..5, -4.0f64..2.0, any::<u64>()), |(n, d, log_alpha, seed)| {
        let (x, y) = poly_data(seed, n, d);
        let alpha = 10f64.powf(log_alpha);
        let model = ok_or_fail(ChebyPolyModel::fit_xy(&x, &y, ChebyBasisConfig::univariate(1), alpha))?;
        // Min-max scaling done by hand.
        let scaled = DMatrix::from_fn(n, d, |i, j| {
            let col = x.column(j);
            let (lo, hi) = (col.min(), col.max());
            if hi > lo { 2.0 * (x[(i, j)] - lo) / (hi - lo) - 1.0 } else { 0.0 }
        });
        let (b, w) = normal_equations_ridge(&scaled, &y, alpha, true);
        let want: Vec<f64> = (0..n).map(|i| b + (0..d).map(|j| w[j] * scaled[(i, j)]).sum::<f64>()).collect();
        let got = ok_or_fail(model.predict_unclipped(&x))?;
        let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (g, e) in got.iter().zip(&want) {
            prop_assert!((g - e).abs() <= 1e-8 * scale, "{} vs {}", g, e);
        }
        Ok(())
    })
}

// ---- cart ----

pub fn split_data(seed: u64) -> (DMatrix<f64>, Vec<f64>, usize) {
    let mut r = rng(seed);
    let n = r.random_range(2..=50);
    let d = r.random_range(1..=5);
    let coarse = r.random_bool(0.3);
    let x: DMatrix<f64> = DMatrix::from_fn(n, d, |_, _| {
        let v: f64 = r.random_range(-3.0..3.0);
        if coarse { (v * 2.0).round() / 2.0 } else { v }
    });
    let y = (0..n).map(|i| (2.0 * x[(i, 0)]).sin() + x[(i, d - 1)].abs() + r.random_range(-0.3..0.3)).collect();
    let min_leaf = r.random_range(1..=4);
    (x, y, min_leaf)
}

/// Compares the root split to the exhaustive oracle; `Err` describes a mismatch.
pub fn cart_root_case(seed: u64) -> Result<(), String> {
    let (x, y, min_leaf) = split_data(seed);
    let rows: Vec<usize> = (0..y.len()).collect();
    let got = best_split(&x, &y, &rows, min_leaf);
    let want = brute_force_split(&x, &y, &rows, min_leaf, 1e-10);
    match (got, want) {
        (None, None) => Ok(()),
        (Some(g), Some(w)) if g.feature == w.feature && g.threshold == w.threshold => {
            if (g.gain - w.gain).abs() <= 1e-9 * (1.0 + w.gain.abs()) {
                Ok(())
            } else {
                Err(format!("gain {} vs oracle {}", g.gain, w.gain))
            }
        }
        (g, w) => Err(format!("seed {seed}: split {g:?} vs oracle {w:?}")),
    }
}

pub fn cart_split_matches_brute_force(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        cart_root_case(seed).map_err(fail)?;
        // Also on a random subset of rows, as seen by inner nodes.
        let (x, y, min_leaf) = split_data(seed);
        let mut r = rng(seed ^ 7);
        let m = r.random_range(1..=y.len());
        let mut rows = sample(&mut r, y.len(), m).into_vec();
        rows.sort_unstable();
        let got = best_split(&x, &y, &rows, min_leaf).map(|s| (s.feature, s.threshold));
        let want = brute_force_split(&x, &y, &rows, min_leaf, 1e-10).map(|s| (s.feature, s.threshold));
        prop_assert_eq!(got, want);
        Ok(())
    })
}

pub fn cart_deeper_not_worse(cases: u32) -> Result<(), String> {
    run(cases, (1usize..8, 1usize..5, any::<u64>()), |(depth, min_leaf, seed)| {
        let (x, y, _) = split_data(seed);
        let fit = |k: usize| {
            RegressionTree::fit_xy(&x, &y, TreeParams::new(k, SampleCount::Count(min_leaf), SampleCount::Count(2)))
                .and_then(|t| t.predict(&x))
                .map(|p| mse(&y, &p))
        };
        let (shallow, deep) = (ok_or_fail(fit(depth))?, ok_or_fail(fit(depth + 1))?);
        prop_assert!(deep <= shallow + 1e-12, "depth {} mse {} > depth {} mse {}", depth + 1, deep, depth, shallow);
        Ok(())
    })
}

pub fn cart_leaf_sizes(cases: u32) -> Result<(), String> {
    let leaf = prop_oneof![(1usize..8).prop_map(SampleCount::Count), (0.01f64..0.4).prop_map(SampleCount::Fraction)];
    run(cases, (1usize..10, leaf, any::<u64>()), |(depth, min_leaf, seed)| {
        let (x, y, _) = split_data(seed);
        let n = y.len();
        let tree = ok_or_fail(RegressionTree::fit_xy(&x, &y, TreeParams::new(depth, min_leaf, SampleCount::Count(2))))?;
        let resolved = min_leaf.resolve(n);
        let mut seen = vec![0usize; n];
        let routed = ok_or_fail(tree.route_rows(&x))?;
        for (id, rows) in tree.leaf_rows().into_iter().enumerate() {
            // A root that cannot split keeps every row regardless of the minimum.
            prop_assert!(rows.len() >= resolved || tree.n_leaves == 1, "leaf {} has {} < {} rows", id, rows.len(), resolved);
            for &i in rows {
                seen[i] += 1;
                prop_assert_eq!(routed[i], id);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1), "training rows not partitioned");
        prop_assert!(tree.depth() <= depth);
        Ok(())
    })
}

// ---- chebytree ----

fn tree_data(seed: u64, n: usize, d: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let x: DMatrix<f64> = DMatrix::from_fn(n, d, |_, _| r.random_range(-2.0..2.0));
    let y = (0..n)
        .map(|i| {
            let base = if x[(i, 0)] > 0.3 { 2.0 + x[(i, d - 1)] } else { x[(i, 0)].powi(2) };
            base + 0.1 * r.random_range(-1.0..1.0)
        })
        .collect();
    (x, y)
}

pub fn chebytree_c1_affine(cases: u32) -> Result<(), String> {
    run(cases, (20usize..120, 1usize..4, 1usize..4, any::<u64>()), |(n, d, depth, seed)| {
        let (x, y) = tree_data(seed, n, d);
        let params = ChebyTreeParams { complexity: 1, max_depth: depth, min_samples_leaf: SampleCount::Count(5), alpha: 0.01 };
        let model = ok_or_fail(ChebyTreeModel::fit_xy(&x, &y, params))?;
        let preds = ok_or_fail(model.predict_unclipped(&x))?;
        for rows in model.tree.leaf_rows() {
            let leaf_x = DMatrix::from_fn(rows.len(), d, |i, j| x[(rows[i], j)]);
            let leaf_p: Vec<f64> = rows.iter().map(|&i| preds[i]).collect();
            let res = plane_residual(&leaf_x, &leaf_p);
            prop_assert!(res < 1e-8, "leaf residual {}", res);
        }
        Ok(())
    })
}

pub fn chebytree_single_leaf(cases: u32) -> Result<(), String> {
    run(cases, (10usize..80, 1usize..4, 1usize..10, -4.0f64..1.0, any::<u64>()), |(n, d, c, log_alpha, seed)| {
        let (x, y) = tree_data(seed, n, d);
        let alpha = 10f64.powf(log_alpha);
        let params = ChebyTreeParams { complexity: c, max_depth: 3, min_samples_leaf: SampleCount::Count(n), alpha };
        let tree = ok_or_fail(ChebyTreeModel::fit_xy(&x, &y, params))?;
        prop_assert_eq!(tree.tree.n_leaves, 1);
        if !matches!(tree.leaf_models[0], LeafModel::Poly(_)) {
            // Too few rows for a polynomial; nothing to compare.
            return Ok(());
        }
        let poly = ok_or_fail(ChebyPolyModel::fit_xy(&x, &y, ChebyBasisConfig::univariate(c), alpha))?;
        let mut r = rng(seed ^ 3);
        let q: DMatrix<f64> = DMatrix::from_fn(40, d, |_, _| r.random_range(-3.0..3.0));
        for (a, b) in ok_or_fail(tree.predict(&q))?.iter().zip(&ok_or_fail(poly.predict(&q))?) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
        Ok(())
    })
}

pub fn chebytree_partition(cases: u32) -> Result<(), String> {
    run(cases, (10usize..100, 1usize..4, 1usize..6, any::<u64>()), |(n, d, depth, seed)| {
        let (x, y) = tree_data(seed, n, d);
        let params = ChebyTreeParams { complexity: 3, max_depth: depth, min_samples_leaf: SampleCount::Count(2), alpha: 0.1 };
        let model = ok_or_fail(ChebyTreeModel::fit_xy(&x, &y, params))?;
        prop_assert_eq!(model.leaf_models.len(), model.tree.n_leaves);
        for m in &model.leaf_models {
            if let LeafModel::Poly(p) = m {
                prop_assert!(!p.basis.include_interactions);
            }
        }
        let mut r = rng(seed ^ 5);
        let q: DMatrix<f64> = DMatrix::from_fn(60, d, |_, _| r.random_range(-4.0..4.0));
        let leaves = ok_or_fail(model.tree.route_rows(&q))?;
        let preds = ok_or_fail(model.predict_unclipped(&q))?;
        for (i, &leaf) in leaves.iter().enumerate() {
            prop_assert!(leaf < model.tree.n_leaves);
            let row = q.rows(i, 1).into_owned();
            let own = match &model.leaf_models[leaf] {
                LeafModel::Constant(v) => *v,
                LeafModel::Poly(p) => ok_or_fail(p.predict_unclipped(&row))?[0],
            };
            prop_assert_eq!(own.to_bits(), preds[i].to_bits());
        }
        Ok(())
    })
}

// ---- erbf ----

fn erbf_data(seed: u64, n: usize, d: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let x = normal_matrix(&mut r, n, d);
    let y = smooth_target(&x, &mut r, 0.05);
    (x, y)
}

pub fn erbf_widths_positive(cases: u32) -> Result<(), String> {
    run(cases, (12usize..60, 1usize..4, 1usize..8, any::<u64>()), |(n, d, k, seed)| {
        let (x, y) = erbf_data(seed, n, d);
        let cfg = ErbfConfig { n_rbf: NRbf::Fixed(k), seed, ..ErbfConfig::default() };
        let model = ok_or_fail(ErbfModel::fit_xy(&x, &y, cfg))?;
        prop_assert!(model.widths.iter().all(|w| *w > 0.0 && w.is_finite()), "bad width");
        prop_assert!(model.n_centers() >= 1);
        Ok(())
    })
}

pub fn erbf_mse_progress(cases: u32) -> Result<(), String> {
    run(cases, (12usize..60, 1usize..4, 1usize..8, any::<bool>(), any::<u64>()), |(n, d, k, auto, seed)| {
        let (x, y) = erbf_data(seed, n, d);
        let n_rbf = if auto { NRbf::Auto } else { NRbf::Fixed(k) };
        let (_, trace) = ok_or_fail(ErbfModel::fit_traced(&x, &y, ErbfConfig { n_rbf, seed, ..ErbfConfig::default() }))?;
        prop_assert!(
            trace.mse_after_width_optim <= trace.mse_before_width_optim + 1e-12,
            "mse {} -> {}",
            trace.mse_before_width_optim,
            trace.mse_after_width_optim
        );
        Ok(())
    })
}

/// One random gradient instance (K ≤ 5, d ≤ 3, n ≤ 40); returns the relative
/// error of the analytic gradient against central differences.
pub fn erbf_gradient_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, d, k) = (r.random_range(2..=40), r.random_range(1..=3), r.random_range(1..=5));
    let x = normal_matrix(&mut r, n, d);
    let y = smooth_target(&x, &mut r, 0.1);
    let centers = normal_matrix(&mut r, k, d);
    let weights = normal_vec(&mut r, k);
    let bias: f64 = r.random_range(-1.0..1.0);
    let theta: Vec<f64> = (0..k * d).map(|_| r.random_range(-1.0..1.0)).collect();
    let (_, grad) = loss_and_grad(&theta, &x, &y, &centers, &weights, bias).expect("loss_and_grad");
    let loss = |t: &[f64]| loss_and_grad(t, &x, &y, &centers, &weights, bias).expect("loss").0;
    fd_rel_error(&grad, &central_diff(loss, &theta, 1e-6))
}

pub fn erbf_gradient_fd(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let err = erbf_gradient_case(seed);
        prop_assert!(err < 1e-5, "relative error {}", err);
        Ok(())
    })
}

/// Centres within |x| < 0.1 for Lipschitz and for uniform placement on
/// y = 1{x > 0}, one pair per seed.
pub fn lipschitz_vs_uniform(seed: u64) -> (usize, usize) {
    let (n, k) = (200, 10);
    let mut r = rng(seed);
    let x: DMatrix<f64> = DMatrix::from_fn(n, 1, |_, _| r.random_range(-1.0..1.0));
    let y: Vec<f64> = x.iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect();
    let near = |c: &[f64]| c.iter().filter(|v| v.abs() < 0.1).count();
    let cfg = ErbfConfig { seed, ..ErbfConfig::default() };
    let lips = place_centers(&x, &y, k, &cfg).expect("place_centers");
    let uniform: Vec<f64> = sample(&mut rng(seed ^ 0x9e37), n, k).iter().map(|i| x[(i, 0)]).collect();
    (near(lips.as_slice()), near(&uniform))
}

/// One-sided sign test p-value over 200 seeds.
pub fn lipschitz_sign_test() -> f64 {
    let (mut wins, mut trials) = (0, 0);
    for seed in 0..200 {
        let (l, u) = lipschitz_vs_uniform(seed);
        if l != u {
            trials += 1;
            wins += usize::from(l > u);
        }
    }
    binomial_half_upper_tail(trials, wins)
}

pub fn erbf_lipschitz_concentration(_cases: u32) -> Result<(), String> {
    let p = lipschitz_sign_test();
    if p < 0.01 { Ok(()) } else { Err(format!("sign test p = {p}")) }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) { 0.5 * (v[m - 1] + v[m]) } else { v[m] }
}

pub fn erbf_anisotropy(_cases: u32) -> Result<(), String> {
    for seed in 0..5 {
        let mut r = rng(seed);
        let x = normal_matrix(&mut r, 300, 2);
        let y: Vec<f64> = (0..300).map(|i| (2.0 * x[(i, 0)]).sin() + 0.05 * r.random_range(-1.0..1.0)).collect();
        let cfg = ErbfConfig { n_rbf: NRbf::Fixed(10), seed, ..ErbfConfig::default() };
        let model = ErbfModel::fit_xy(&x, &y, cfg).map_err(|e| e.to_string())?;
        let (m0, m1) = (median(model.widths.column(0).iter().copied().collect()), median(model.widths.column(1).iter().copied().collect()));
        if m1 <= m0 || m1.is_nan() {
            return Err(format!("seed {seed}: median width of noise feature {m1} <= signal feature {m0}"));
        }
    }
    Ok(())
}

// ---- harness ----

fn cv_dataset(seed: u64, n: usize, d: usize) -> Dataset {
    let mut r = rng(seed);
    let x = normal_matrix(&mut r, n, d);
    let y = smooth_target(&x, &mut r, 0.3);
    Dataset::from_xy(x, y).expect("dataset")
}

fn strip_timings(mut folds: Vec<FoldResult>) -> Vec<FoldResult> {
    for f in &mut folds {
        f.tune_seconds = 0.0;
        f.train_seconds = 0.0;
        f.predict_ms_per_1k = 0.0;
    }
    folds
}

fn cv_model() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(vec![ModelKind::Ridge, ModelKind::Dt, ModelKind::ChebyPoly, ModelKind::ChebyTree])
}

pub fn harness_gap_exact(cases: u32) -> Result<(), String> {
    run(cases, (30usize..70, 1usize..4, cv_model(), any::<u64>()), |(n, d, kind, seed)| {
        let ds = cv_dataset(seed, n, d);
        let cfg = CvConfig { outer_k: 3, outer_seed: seed, budget: Some(2), ..CvConfig::default() };
        for f in ok_or_fail(nested_cv_run(&ds, "prop", kind, &SearchSpace::for_model(kind), &cfg))? {
            prop_assert_eq!(f.gap.to_bits(), (f.train_r2 - f.test_r2).to_bits());
        }
        Ok(())
    })
}

pub fn harness_rank_sums(cases: u32) -> Result<(), String> {
    run(cases, (2usize..9, 1usize..12, any::<u64>()), |(k, n, seed)| {
        let mut r = rng(seed);
        let scores: Vec<Vec<Option<f64>>> = (0..n).map(|_| (0..k).map(|_| Some(r.random::<f64>())).collect()).collect();
        let table = ok_or_fail(rank_models(&scores))?;
        for (row, s) in table.ranks.iter().zip(&scores) {
            let sum: f64 = row.iter().sum();
            prop_assert_eq!(sum, (k * (k + 1)) as f64 / 2.0);
            let vals: Vec<f64> = s.iter().map(|v| v.unwrap()).collect();
            prop_assert_eq!(row, &average_ranks(&vals));
        }
        Ok(())
    })
}

pub fn harness_friedman_monotone(cases: u32) -> Result<(), String> {
    run(cases, (2usize..9, 2usize..25, any::<u64>()), |(k, n, seed)| {
        let mut r = rng(seed);
        // A coarse grid keeps ties in play.
        let scores: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| r.random_range(-30..30) as f64 / 10.0).collect()).collect();
        let wrap = |t: &[Vec<f64>]| -> Vec<Vec<Option<f64>>> { t.iter().map(|row| row.iter().map(|v| Some(*v)).collect()).collect() };
        let exp: Vec<Vec<f64>> = scores.iter().map(|row| row.iter().map(|v| v.exp()).collect()).collect();
        let a = ok_or_fail(rank_models(&wrap(&scores)).and_then(|t| friedman_test(&t.ranks)))?;
        let b = ok_or_fail(rank_models(&wrap(&exp)).and_then(|t| friedman_test(&t.ranks)))?;
        prop_assert_eq!(a, b);
        Ok(())
    })
}

pub fn harness_nested_cv_deterministic(cases: u32) -> Result<(), String> {
    run(cases, (30usize..60, 1usize..3, cv_model(), any::<u64>()), |(n, d, kind, seed)| {
        let ds = cv_dataset(seed, n, d);
        let cfg = CvConfig { outer_k: 3, outer_seed: seed, search_seed: seed >> 3, budget: Some(2), ..CvConfig::default() };
        let space = SearchSpace::for_model(kind);
        let a = ok_or_fail(nested_cv_run(&ds, "prop", kind, &space, &cfg))?;
        let b = ok_or_fail(nested_cv_run(&ds, "prop", kind, &space, &cfg))?;
        prop_assert_eq!(strip_timings(a), strip_timings(b));
        Ok(())
    })
}

pub fn harness_clip_idempotent(cases: u32) -> Result<(), String> {
    run(cases, (prop::collection::vec(-1e6f64..1e6, 1..40), prop::collection::vec(-10.0f64..10.0, 1..40)), |(preds, y)| {
        let once = clip_predictions(&preds, &y);
        let twice = clip_predictions(&once, &y);
        prop_assert!(once.iter().zip(&twice).all(|(a, b)| a.to_bits() == b.to_bits()));
        Ok(())
    })
}

// ---- synth ----

pub fn synth_noise_free(cases: u32) -> Result<(), String> {
    run(cases, (prop::sample::select(SynthKind::ALL.to_vec()), 10usize..60, any::<u64>()), |(kind, n, seed)| {
        let ds = ok_or_fail(gen(&SynthSpec::new(kind, n, seed).with_noise(0.0)))?;
        let x = ds.features();
        for i in 0..n {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            prop_assert_eq!(ds.target()[i].to_bits(), kind.target(&row).to_bits());
        }
        let again = ok_or_fail(gen(&SynthSpec::new(kind, n, seed).with_noise(0.0)))?;
        prop_assert!(again == ds, "same SynthSpec produced a different dataset");
        Ok(())
    })
}

pub fn synth_column_counts(_cases: u32) -> Result<(), String> {
    let expected = [
        (SynthKind::Friedman1, 5),
        (SynthKind::Friedman1D100, 100),
        (SynthKind::SyntheticStep, 8),
        (SynthKind::SyntheticPiecewise, 5),
        (SynthKind::SyntheticMultithreshold, 6),
    ];
    for (kind, d) in expected {
        let ds = gen(&SynthSpec::new(kind, 20, 1)).map_err(|e| e.to_string())?;
        if ds.d() != d {
            return Err(format!("{kind} has {} columns, expected {d}", ds.d()));
        }
    }
    Ok(())
}
