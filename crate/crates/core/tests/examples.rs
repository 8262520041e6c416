//! Statistical examples spanning several modules. Seeds are fixed, so each run is
//! deterministic; tolerances carry the stated Monte Carlo slack.

use fieldspec::field::Support;
use fieldspec::moments::{finite_moment, moment_polynomial};
use fieldspec::reconstruct::{sweep, SweepGrid, Topology};
use fieldspec::spectral::{
    empirical_cdf, empirical_moments, kappa_mirror_check, kappa_union_check, run_ensemble, EnsembleSpec, Histogram,
    DEFAULT_MIRROR_D,
};

#[test]
fn finite_moments_match_trace_averages() {
    for (i, beta) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let spec = EnsembleSpec::new(50, beta, 400, 40 + i as u64).unwrap();
        let ens = run_ensemble(&spec).unwrap();
        let est = empirical_moments(&ens, 4).unwrap();
        for e in &est {
            let exact = finite_moment(e.p, 50, spec.r).unwrap();
            let slack = 3.0 * e.std_err + 1e-12 * exact;
            assert!((e.mean - exact).abs() <= slack, "beta={beta} p={}: {} vs {exact} ± {slack}", e.p, e.mean);
        }
    }
}

#[test]
fn finite_moments_approach_the_limit() {
    for beta in [0.25f64, 0.5, 0.75] {
        let r = (401.0 / beta).round() as usize;
        for p in 1..=5 {
            let exact = finite_moment(p, 200, r).unwrap();
            let limit = moment_polynomial(p).unwrap().evaluate(beta);
            assert!((exact - limit).abs() / limit < 0.01, "beta={beta} p={p}: {exact} vs {limit}");
        }
    }
}

#[test]
fn large_ensemble_mean_is_one() {
    let spec = EnsembleSpec::new(200, 0.25, 200, 3).unwrap();
    let ens = run_ensemble(&spec).unwrap();
    assert_eq!(ens.failures, 0);
    let est = empirical_moments(&ens, 2).unwrap();
    assert!((est[0].mean - 1.0).abs() < 0.005);
    let second = 1.0 + spec.realized_beta;
    assert!((est[1].mean - second).abs() <= 3.0 * est[1].std_err + 1e-3, "{} vs {second}", est[1].mean);
}

#[test]
fn dense_ensembles_reach_machine_precision() {
    let spec = EnsembleSpec::new(200, 0.8, 100, 8).unwrap();
    let ens = run_ensemble(&spec).unwrap();
    let f = empirical_cdf(&ens.all_eigenvalues, &[1e-15]).unwrap();
    assert!(f[0].1 > 0.0);
}

fn half_histograms(spec: &EnsembleSpec) -> (Histogram, Histogram) {
    let ens = run_ensemble(spec).unwrap();
    let per = spec.dim();
    let half = ens.successful_trials() / 2 * per;
    let (a, b) = ens.all_eigenvalues.split_at(half);
    (Histogram::linear(a, 0.1).unwrap(), Histogram::linear(&b[..half], 0.1).unwrap())
}

#[test]
fn histograms_stabilize_between_seed_halves() {
    let small = EnsembleSpec::new(10, 0.25, 200, 21).unwrap();
    let large = EnsembleSpec::new(10, 0.25, 4000, 21).unwrap();
    let (a, b) = half_histograms(&small);
    let coarse = a.l1_distance(&b).unwrap();
    let (a, b) = half_histograms(&large);
    let fine = a.l1_distance(&b).unwrap();
    assert!(fine < 0.05, "L1 = {fine}");
    assert!(fine < coarse, "{fine} !< {coarse}");
}

#[test]
fn condition_number_density_mirrors_minimum_eigenvalue() {
    for m in [10, 20, 40] {
        let spec = EnsembleSpec::new(m, 0.25, 5000, 90 + m as u64).unwrap();
        let ens = run_ensemble(&spec).unwrap();
        assert!(ens.kappas.iter().all(|&k| k >= 1.0));
        let mirror = kappa_mirror_check(&ens, DEFAULT_MIRROR_D).unwrap();
        assert!(mirror.max_discrepancy < 0.5, "M={m}: {}", mirror.max_discrepancy);
        if m == 40 {
            let union = kappa_union_check(&ens, DEFAULT_MIRROR_D).unwrap();
            assert!(union.max_discrepancy < 0.7, "union: {}", union.max_discrepancy);
        }
    }
}

fn random_grid(samples: Vec<usize>, support: Support, trials: usize) -> SweepGrid {
    SweepGrid {
        harmonics: vec![10],
        samples,
        topology: Topology::Random(support),
        trials,
        weighted: false,
        kappa_max: fieldspec::linsys::DEFAULT_KAPPA_MAX,
    }
}

#[test]
fn success_grows_with_sample_count() {
    let cells = sweep(&random_grid(vec![25, 50, 100], Support::UNIT, 500), 17).unwrap();
    for w in cells.windows(2) {
        let (a, b) = (w[0].success_frac, w[1].success_frac);
        let sigma = ((a * (1.0 - a) + b * (1.0 - b)) / 500.0).sqrt();
        assert!(b + 2.0 * sigma >= a, "r={} {a} vs r={} {b}", w[0].r, w[1].r);
    }
}

#[test]
fn gapped_support_beats_critical_sampling() {
    let gapped = sweep(&random_grid(vec![26], Support::new(0.0, 0.8).unwrap(), 1000), 1).unwrap();
    let critical = sweep(&random_grid(vec![21], Support::UNIT, 1000), 2).unwrap();
    assert!(gapped[0].success_frac > critical[0].success_frac);
    assert!(critical[0].success_frac < 1.0);
}

#[test]
fn regular_cell_always_succeeds() {
    let grid = SweepGrid { topology: Topology::Regular, ..random_grid(vec![22], Support::UNIT, 5) };
    let cells = sweep(&grid, 0).unwrap();
    assert_eq!(cells[0].success_frac, 1.0);
}
