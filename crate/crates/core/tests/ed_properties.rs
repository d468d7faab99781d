//! Symmetry and continuity properties of the exact oracle away from Delta = 0.

use mie_core::ed_oracle::{self, MeasureMode};
use mie_core::geometry::RingLayout;

#[test]
fn enumerated_probabilities_sum_to_one() {
    for &(l, delta) in &[(8, -0.6), (10, 0.5), (12, 1.0)] {
        let gs = ed_oracle::xxz_ground_state(l, delta).unwrap().state;
        let region: Vec<usize> = (0..l).step_by(2).collect();
        let branches = ed_oracle::measure_sites(&gs, &region, &MeasureMode::Enumerate).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-12, "L = {l}, delta = {delta}: {total}");
    }
}

#[test]
fn mie_is_symmetric_under_flip_and_reflection() {
    let l = 12;
    let gs = ed_oracle::xxz_ground_state(l, 0.5).unwrap().state;
    let layout = RingLayout::antipodal(l, 2).unwrap();
    let ns = [1.0, 2.0];
    let base = ed_oracle::mie_exact_state(&gs, &layout, &ns).unwrap();
    let flipped = ed_oracle::mie_exact_state(&gs.flipped(), &layout, &ns).unwrap();
    // reflection j -> |A| - 1 - j maps A onto itself and swaps C1 with C2
    let a_len = layout.a.len;
    let map: Vec<usize> = (0..l).map(|j| (a_len + l - 1 - j) % l).collect();
    let reflected = ed_oracle::mie_exact_state(&gs.permuted(&map), &layout, &ns).unwrap();
    for k in 0..ns.len() {
        assert!((base[k] - flipped[k]).abs() < 1e-10);
        assert!((base[k] - reflected[k]).abs() < 1e-10);
    }
}

#[test]
fn mie_is_continuous_in_anisotropy() {
    let layout = RingLayout::antipodal(10, 2).unwrap();
    let deltas: Vec<f64> = (0..=8).map(|i| -0.8 + 0.2 * i as f64).collect();
    let values: Vec<f64> = deltas
        .iter()
        .map(|&d| ed_oracle::mie_exact(&layout, d, 1.0).unwrap())
        .collect();
    // a sector switch would show up as a jump, i.e. a spike in the
    // second difference on this 0.2-spaced grid
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|d| d.abs() < 0.15), "{values:?}");
    for w in steps.windows(2) {
        assert!((w[1] - w[0]).abs() < 0.05, "{values:?}");
    }
}

#[test]
fn lanczos_ground_state_is_an_eigenvector() {
    let gs = ed_oracle::xxz_ground_state(14, -0.3).unwrap();
    assert!(gs.residual < ed_oracle::RESIDUAL_TOLERANCE);
    assert!(gs.gap > 1e-3);
    assert!(gs.state.magnetization().abs() < 1e-12);
}

#[test]
fn enumeration_size_limit() {
    let gs = ed_oracle::xxz_ground_state(14, 0.0).unwrap().state;
    let region: Vec<usize> = (0..13).collect();
    assert!(ed_oracle::measure_sites(&gs, &region, &MeasureMode::Enumerate).is_err());
}
