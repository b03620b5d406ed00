use crate::common::*;
use edsvc::estimator::{
    build_c_grid, build_q_grid, estimate, evaluate_candidate, read_scan_csv, write_scan_csv, ScanStage, FAILED_ANMI,
};
use edsvc::{
    datasets, edsvc, generate_ensemble, nmi, normalize_minmax, pairwise_sq_dists, scan_c, scan_q, EdsvcConfig,
    EdsvcError, KMeansConfig, ParamGrid, SvcSettings,
};
use rand::Rng;

fn small_config(seed: u64) -> EdsvcConfig {
    EdsvcConfig {
        master_seed: seed,
        n_q: 25,
        n_c: 12,
        ..EdsvcConfig::default()
    }
}

#[test]
fn two_blobs_recovered_without_labels() {
    let s = datasets::two_blobs(30, 8.0, 0.5, 3);
    let r = edsvc(&s.data, &small_config(0)).unwrap();
    assert_eq!(nmi(&r.final_labeling, &s.labels).unwrap(), 1.0);
    assert_eq!(r.final_labeling.n_clusters(), 2);
}

#[test]
fn selected_parameters_are_coordinate_argmax() {
    let s = datasets::two_moons(90, 0.05, 4);
    let r = edsvc(&s.data, &small_config(2)).unwrap();
    let best_q = r.q_scan.iter().map(|e| e.anmi).fold(f64::NEG_INFINITY, f64::max);
    let first = r.q_scan.iter().find(|e| e.anmi == best_q).unwrap();
    assert_eq!(first.param_value, r.q_hat);
    let best_c = r.c_scan.iter().map(|e| e.anmi).fold(f64::NEG_INFINITY, f64::max);
    let last = r.c_scan.iter().rev().find(|e| e.anmi == best_c).unwrap();
    assert_eq!(last.param_value, r.c_hat);
    assert!(r.q_scan.iter().all(|e| e.stage == ScanStage::Q));
    assert!(r.c_scan.iter().all(|e| e.stage == ScanStage::C));
    // final clustering is the C-scan winner, so its score is the C maximum
    assert_eq!(r.final_anmi, best_c);
    // C₀ = 1 is on the C grid, so the second stage can only improve
    assert!(best_c >= best_q);
}

#[test]
fn scan_entries_recompute_exactly() {
    let s = datasets::gaussian_blobs(&[[0.0, 0.0], [4.0, 0.0], [2.0, 3.5]], 20, 0.6, 5);
    let data = normalize_minmax(&s.data);
    let d = pairwise_sq_dists(&data);
    let ens = generate_ensemble(&data, 6, 1, &KMeansConfig::default()).unwrap();
    let settings = SvcSettings::default();
    let q_values: Vec<f64> = build_q_grid(&d, 5).unwrap();
    let c_values: Vec<f64> = build_c_grid(60, 5).unwrap();
    let mut r = rng(0);
    for _ in 0..5 {
        let q = q_values[r.random_range(0..5)];
        let c = c_values[r.random_range(0..5)];
        let (_, a) = evaluate_candidate(&data, &d, &ens, q, c, &settings).unwrap();
        let (_, b) = evaluate_candidate(&data, &d, &ens, q, c, &settings).unwrap();
        assert_eq!(a, b);
    }
    let (q_hat, entries) = scan_q(&data, &d, &ens, &q_values, 1.0, &settings).unwrap();
    for e in &entries {
        let (_, again) = evaluate_candidate(&data, &d, &ens, e.param_value, 1.0, &settings).unwrap();
        assert!((again.anmi - e.anmi).abs() <= 1e-10);
    }
    let (c_hat, c_entries) = scan_c(&data, &d, &ens, &c_values, q_hat, &settings).unwrap();
    assert!(c_values.contains(&c_hat));
    assert_eq!(c_entries.len(), 5);
}

#[test]
fn all_failed_candidates_is_an_error() {
    let s = datasets::two_blobs(15, 5.0, 0.5, 1);
    let data = normalize_minmax(&s.data);
    let d = pairwise_sq_dists(&data);
    let ens = generate_ensemble(&data, 3, 0, &KMeansConfig::default()).unwrap();
    let mut settings = SvcSettings::default();
    // one pass can never reach this gap, so every solve reports NotConverged
    settings.solver.max_passes = 1;
    settings.solver.kkt_tolerance = 1e-300;
    let grid = ParamGrid::build(&d, 4, 3, 1.0).unwrap();
    match scan_q(&data, &d, &ens, &grid.q_values, 1.0, &settings) {
        Err(EdsvcError::AllCandidatesFailed(4, _)) => {}
        other => panic!("expected all candidates to fail, got {other:?}"),
    }
}

#[test]
fn failed_candidates_are_recorded_and_skipped() {
    let s = datasets::two_blobs(15, 5.0, 0.5, 1);
    let data = normalize_minmax(&s.data);
    let d = pairwise_sq_dists(&data);
    let ens = generate_ensemble(&data, 3, 0, &KMeansConfig::default()).unwrap();
    let mut settings = SvcSettings::default();
    // enough passes for the easy small-q problems only
    settings.solver.max_passes = 2;
    let q_values = build_q_grid(&d, 12).unwrap();
    let (_, entries) = scan_q(&data, &d, &ens, &q_values, 1.0, &settings).unwrap();
    for e in entries.iter().filter(|e| e.failed()) {
        assert_eq!(e.anmi, FAILED_ANMI);
        assert_eq!(e.n_clusters, 0);
    }
}

#[test]
fn scan_csv_round_trips_bit_for_bit() {
    let s = datasets::two_blobs(20, 6.0, 0.5, 8);
    let r = edsvc(&s.data, &small_config(4)).unwrap();
    let mut buf = Vec::new();
    write_scan_csv(&mut buf, &r.q_scan).unwrap();
    let back = read_scan_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), r.q_scan.len());
    for (a, b) in back.iter().zip(&r.q_scan) {
        assert_eq!(a.param_value.to_bits(), b.param_value.to_bits());
        assert_eq!(a.anmi.to_bits(), b.anmi.to_bits());
        assert_eq!(a.n_clusters, b.n_clusters);
    }
}

#[test]
fn estimate_does_not_depend_on_how_the_ensemble_was_built() {
    let s = datasets::two_moons(60, 0.05, 1);
    let data = normalize_minmax(&s.data);
    let d = pairwise_sq_dists(&data);
    let ens = generate_ensemble(&data, 5, 9, &KMeansConfig::default()).unwrap();
    let mut csv = Vec::new();
    ens.write_csv(&mut csv).unwrap();
    let reread = edsvc::Ensemble::read_csv(csv.as_slice()).unwrap();
    let grid = ParamGrid::build(&d, 10, 5, 1.0).unwrap();
    let a = estimate(&data, &d, ens, grid.clone(), &SvcSettings::default()).unwrap();
    let b = estimate(&data, &d, reread, grid, &SvcSettings::default()).unwrap();
    assert_eq!((a.q_hat, a.c_hat), (b.q_hat, b.c_hat));
    assert_eq!(a.final_labeling, b.final_labeling);
}

#[test]
fn grids_span_the_documented_ranges() {
    let s = datasets::two_blobs(20, 6.0, 0.5, 8);
    let d = pairwise_sq_dists(&s.data);
    let mean = d.mean_nonzero().unwrap();
    let q = build_q_grid(&d, 100).unwrap();
    assert_eq!(q.len(), 100);
    assert!((q[0] * mean - 0.1).abs() < 1e-12 && (q[99] * mean - 100.0).abs() < 1e-9);
    let c = build_c_grid(40, 100).unwrap();
    assert_eq!(c.len(), 100);
    assert!(40.0 * c[0] >= 1.0 && c[99] == 1.0);
    let ratios: Vec<f64> = q.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-9));
}
