//! Exact state-vector oracle for small XXZ rings,
//! `H = sum_j [X_j X_{j+1} + Y_j Y_{j+1} + Delta Z_j Z_{j+1}]`, periodic.
//!
//! Basis index bit `j` set means spin up (occupied) on site `j`. The
//! Hamiltonian is real, so amplitudes are stored as `f64`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::entropy::{check_index, entropy_from_probabilities};
use crate::error::{domain, MieError, Result};
use crate::gaussian_sim::{MeasurementRecord, FORBIDDEN_PROBABILITY};
use crate::geometry::RingLayout;

pub const MAX_SITES: usize = 14;

/// Sectors up to this dimension are diagonalized densely.
pub const DENSE_LIMIT: usize = 252;

/// Largest measured region for enumeration.
pub const MAX_ENUMERATED: usize = 12;

/// Residual `|H v - E v|` accepted for the iterative ground state.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Relative gap below which the ground state counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    sites: usize,
    amplitudes: DVector<f64>,
}

impl SpinState {
    /// Normalizes `amplitudes`, which must have length `2^sites`.
    pub fn new(sites: usize, amplitudes: DVector<f64>) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES || amplitudes.len() != 1 << sites {
            return Err(MieError::InvalidState(format!(
                "{} amplitudes for {sites} sites",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(MieError::InvalidState("zero or non-finite state".into()));
        }
        Ok(SpinState {
            sites,
            amplitudes: amplitudes / norm,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn amplitudes(&self) -> &DVector<f64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<sum_j Z_j>`.
    pub fn magnetization(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a * a * (2.0 * (i as u32).count_ones() as f64 - self.sites as f64))
            .sum()
    }

    /// Spin-flipped copy.
    pub fn flipped(&self) -> SpinState {
        let mask = (1usize << self.sites) - 1;
        let amps = DVector::from_fn(self.amplitudes.len(), |i, _| self.amplitudes[i ^ mask]);
        SpinState {
            sites: self.sites,
            amplitudes: amps,
        }
    }

    /// Copy relabelled by `site -> map[site]`.
    pub fn permuted(&self, map: &[usize]) -> SpinState {
        let mut amps = DVector::zeros(self.amplitudes.len());
        for (i, a) in self.amplitudes.iter().enumerate() {
            let j = (0..self.sites)
                .filter(|&s| i >> s & 1 == 1)
                .fold(0usize, |acc, s| acc | 1 << map[s]);
            amps[j] = *a;
        }
        SpinState {
            sites: self.sites,
            amplitudes: amps,
        }
    }
}

/// Ground state in the zero-magnetization sector with its energy and the
/// gap to the next level of that sector.
#[derive(Debug, Clone)]
pub struct XxzGroundState {
    pub state: SpinState,
    pub energy: f64,
    pub gap: f64,
    /// `|H v - E v|` of the returned vector.
    pub residual: f64,
}

/// Magnetization sector with half the spins up, as a sparse real symmetric
/// operator on its basis.
struct Sector {
    states: Vec<usize>,
    diag: Vec<f64>,
    /// Off-diagonal `(column, value)` lists per row.
    hops: Vec<Vec<(usize, f64)>>,
}

impl Sector {
    fn new(sites: usize, delta: f64) -> Sector {
        let states: Vec<usize> = (0usize..1 << sites)
            .filter(|s| s.count_ones() as usize == sites / 2)
            .collect();
        let index = |s: usize| states.binary_search(&s).expect("state in sector");
        let mut diag = vec![0.0; states.len()];
        let mut hops = vec![Vec::new(); states.len()];
        for (row, &s) in states.iter().enumerate() {
            for j in 0..sites {
                let k = (j + 1) % sites;
                let aligned = (s >> j & 1) == (s >> k & 1);
                diag[row] += if aligned { delta } else { -delta };
                if !aligned {
                    hops[row].push((index(s ^ (1 << j) ^ (1 << k)), 2.0));
                }
            }
        }
        Sector { states, diag, hops }
    }

    fn dim(&self) -> usize {
        self.states.len()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |r, _| {
            self.diag[r] * v[r] + self.hops[r].iter().map(|&(c, h)| h * v[c]).sum::<f64>()
        })
    }

    fn dense(&self) -> DMatrix<f64> {
        let mut h = DMatrix::from_diagonal(&DVector::from_vec(self.diag.clone()));
        for (r, row) in self.hops.iter().enumerate() {
            for &(c, v) in row {
                h[(r, c)] += v;
            }
        }
        h
    }
}

/// Lowest two eigenvalues and the lowest eigenvector, ascending.
fn lowest_dense(h: DMatrix<f64>) -> (f64, f64, DVector<f64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let e1 = order.get(1).map_or(f64::INFINITY, |&i| eig.eigenvalues[i]);
    (e0, e1, eig.eigenvectors.column(order[0]).into_owned())
}

/// Lanczos with full re-orthogonalization until the lowest Ritz pair has
/// residual below [`RESIDUAL_TOLERANCE`].
fn lowest_lanczos(sector: &Sector) -> Result<(f64, f64, DVector<f64>)> {
    let dim = sector.dim();
    let max_iter = dim.min(400);
    let mut rng = Pcg64::seed_from_u64(0x5eed);
    let mut q = DVector::from_fn(dim, |_, _| rng.gen::<f64>() - 0.5);
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;
    loop {
        let j = basis.len() - 1;
        let mut w = sector.apply(&basis[j]);
        alpha.push(basis[j].dot(&w));
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let b_next = w.norm();
        let m = alpha.len();
        let exhausted = b_next < 1e-12 || m == max_iter;
        if m.is_multiple_of(8) || exhausted {
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let (e0, e1, y) = lowest_dense(t);
            let mut v = DVector::zeros(dim);
            for (b, yi) in basis.iter().zip(y.iter()) {
                v.axpy(*yi, b, 1.0);
            }
            v /= v.norm();
            let residual = (sector.apply(&v) - &v * e0).norm();
            last_residual = residual;
            if residual < RESIDUAL_TOLERANCE {
                return Ok((e0, e1, v));
            }
        }
        if exhausted {
            return Err(MieError::EigenNonConvergence {
                residual: last_residual,
            });
        }
        beta.push(b_next);
        basis.push(w / b_next);
    }
}

/// Zero-magnetization ground state of the periodic XXZ ring.
pub fn xxz_ground_state(sites: usize, delta: f64) -> Result<XxzGroundState> {
    if sites < 2 || !sites.is_multiple_of(2) || sites > MAX_SITES {
        return Err(domain("L", sites as f64, "even integers in [2, 14]"));
    }
    if !(delta > -1.0 && delta <= 1.0) {
        return Err(domain("delta", delta, "(-1, 1]"));
    }
    let sector = Sector::new(sites, delta);
    let (energy, next, mut v) = if sector.dim() <= DENSE_LIMIT {
        lowest_dense(sector.dense())
    } else {
        lowest_lanczos(&sector)?
    };
    let gap = next - energy;
    if gap < DEGENERACY_GAP * energy.abs().max(1.0) {
        return Err(MieError::DegenerateGroundState { gap });
    }
    // deterministic sign: largest amplitude positive
    let imax = v.iamax();
    if v[imax] < 0.0 {
        v.neg_mut();
    }
    let residual = (sector.apply(&v) - &v * energy).norm();
    let mut amps = DVector::zeros(1 << sites);
    for (&s, a) in sector.states.iter().zip(v.iter()) {
        amps[s] = *a;
    }
    Ok(XxzGroundState {
        state: SpinState::new(sites, amps)?,
        energy,
        gap,
        residual,
    })
}

/// Luttinger parameter `g = arccos(-Delta) / pi`.
pub fn luttinger_g(delta: f64) -> Result<f64> {
    if !(delta > -1.0 && delta <= 1.0) {
        return Err(domain("delta", delta, "(-1, 1]"));
    }
    Ok((-delta).acos() / std::f64::consts::PI)
}

/// How measured outcomes are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureMode {
    /// Born sampling, `u < p(up)` with `u` from a PCG stream.
    Sample(u64),
    /// Post-selection; `pattern[i]` is the outcome at the `i`-th measured
    /// site in increasing site order.
    Forced(Vec<u8>),
    /// Every branch with probability above the null threshold.
    Enumerate,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub record: MeasurementRecord,
    pub state: SpinState,
    pub probability: f64,
}

/// Projects `state` on `Z_site = 2 outcome - 1`. Returns the renormalized
/// state and the Born probability.
fn project(state: &SpinState, site: usize, outcome: u8) -> (SpinState, f64) {
    let mut amps = state.amplitudes.clone();
    for (i, a) in amps.iter_mut().enumerate() {
        if (i >> site & 1) as u8 != outcome {
            *a = 0.0;
        }
    }
    let p = amps.norm_squared();
    if p > 0.0 {
        amps /= p.sqrt();
    }
    (
        SpinState {
            sites: state.sites,
            amplitudes: amps,
        },
        p,
    )
}

fn up_probability(state: &SpinState, site: usize) -> f64 {
    state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| i >> site & 1 == 1)
        .map(|(_, a)| a * a)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

fn sorted_sites(state: &SpinState, region: &[usize]) -> Result<Vec<usize>> {
    let mut s = region.to_vec();
    s.sort_unstable();
    if let Some(w) = s.windows(2).find(|w| w[0] == w[1]) {
        return Err(MieError::AlreadyMeasured(w[0]));
    }
    if let Some(&bad) = s.iter().find(|&&x| x >= state.sites) {
        return Err(MieError::InfeasibleLayout(format!(
            "site {bad} outside a ring of {} sites",
            state.sites
        )));
    }
    Ok(s)
}

/// `Z` measurements on `region_c`, site by site in increasing order.
pub fn measure_sites(state: &SpinState, region_c: &[usize], mode: &MeasureMode) -> Result<Vec<Branch>> {
    let sites = sorted_sites(state, region_c)?;
    match mode {
        MeasureMode::Sample(seed) => {
            let mut rng = Pcg64::seed_from_u64(*seed);
            let mut cur = state.clone();
            let mut record = MeasurementRecord::default();
            for &s in &sites {
                let outcome = (rng.gen::<f64>() < up_probability(&cur, s)) as u8;
                let (next, p) = project(&cur, s, outcome);
                record.log_prob += p.ln();
                record.entries.push((s, outcome));
                cur = next;
            }
            let probability = record.probability();
            Ok(vec![Branch {
                record,
                state: cur,
                probability,
            }])
        }
        MeasureMode::Forced(pattern) => {
            if pattern.len() != sites.len() || pattern.iter().any(|&o| o > 1) {
                return Err(MieError::Config(format!(
                    "forced pattern {pattern:?} does not match {} measured sites",
                    sites.len()
                )));
            }
            let mut cur = state.clone();
            let mut record = MeasurementRecord::default();
            for (&s, &outcome) in sites.iter().zip(pattern) {
                let (next, p) = project(&cur, s, outcome);
                if p < FORBIDDEN_PROBABILITY {
                    return Err(MieError::ForbiddenOutcome {
                        site: s,
                        outcome,
                        probability: p,
                    });
                }
                record.log_prob += p.ln();
                record.entries.push((s, outcome));
                cur = next;
            }
            let probability = record.probability();
            Ok(vec![Branch {
                record,
                state: cur,
                probability,
            }])
        }
        MeasureMode::Enumerate => {
            check_enumerable(sites.len())?;
            let mut out = Vec::new();
            walk(state.clone(), &sites, MeasurementRecord::default(), &mut |state, record| {
                out.push(Branch {
                    probability: record.probability(),
                    record: record.clone(),
                    state: state.clone(),
                });
                Ok(())
            })?;
            Ok(out)
        }
    }
}

fn check_enumerable(count: usize) -> Result<()> {
    if count > MAX_ENUMERATED {
        return Err(MieError::RegionTooLarge(format!(
            "{count} measured sites exceed the enumeration limit {MAX_ENUMERATED}"
        )));
    }
    Ok(())
}

fn walk<F>(state: SpinState, pending: &[usize], record: MeasurementRecord, leaf: &mut F) -> Result<()>
where
    F: FnMut(&SpinState, &MeasurementRecord) -> Result<()>,
{
    let Some((&site, rest)) = pending.split_first() else {
        return leaf(&state, &record);
    };
    for outcome in [0u8, 1] {
        let (next, p) = project(&state, site, outcome);
        if p < FORBIDDEN_PROBABILITY {
            continue;
        }
        let mut rec = record.clone();
        rec.log_prob += p.ln();
        rec.entries.push((site, outcome));
        walk(next, rest, rec, leaf)?;
    }
    Ok(())
}

/// Reduced-density-matrix spectrum of `region`. The smaller side of the
/// bipartition is traced out, which leaves the spectrum unchanged for a pure
/// state.
fn region_spectrum(state: &SpinState, region: &[usize]) -> Vec<f64> {
    let l = state.sites;
    let mut inside = vec![false; l];
    for &s in region {
        inside[s] = true;
    }
    let mut keep: Vec<usize> = (0..l).filter(|&s| inside[s]).collect();
    let mut rest: Vec<usize> = (0..l).filter(|&s| !inside[s]).collect();
    if keep.is_empty() || rest.is_empty() {
        return vec![1.0];
    }
    if keep.len() > rest.len() {
        std::mem::swap(&mut keep, &mut rest);
    }
    let gather = |i: usize, sites: &[usize]| {
        sites
            .iter()
            .enumerate()
            .fold(0usize, |acc, (b, &s)| acc | ((i >> s & 1) << b))
    };
    let mut m = DMatrix::zeros(1 << keep.len(), 1 << rest.len());
    for (i, a) in state.amplitudes.iter().enumerate() {
        if *a != 0.0 {
            m[(gather(i, &keep), gather(i, &rest))] = *a;
        }
    }
    let rho = &m * m.transpose();
    SymmetricEigen::new(rho).eigenvalues.iter().copied().collect()
}

/// `S_n` of the reduced density matrix of `region` (any site subset).
pub fn region_entropy(state: &SpinState, region: &[usize], n: f64) -> Result<f64> {
    check_index(n)?;
    sorted_sites(state, region)?;
    entropy_from_probabilities(&region_spectrum(state, region), n)
}

/// Exact Born-weighted MIE of `A` in `state` for several Renyi indices.
pub fn mie_exact_state(state: &SpinState, layout: &RingLayout, ns: &[f64]) -> Result<Vec<f64>> {
    ns.iter().try_for_each(|&n| check_index(n))?;
    if layout.sites != state.sites {
        return Err(MieError::InfeasibleLayout(format!(
            "layout on L = {} applied to a state on L = {}",
            layout.sites, state.sites
        )));
    }
    let measured = layout.measured_sites();
    check_enumerable(measured.len())?;
    let a = layout.region_a();
    let mut acc = vec![0.0; ns.len()];
    walk(state.clone(), &measured, MeasurementRecord::default(), &mut |s, rec| {
        let lambda = region_spectrum(s, &a);
        let p = rec.probability();
        for (v, &n) in acc.iter_mut().zip(ns) {
            *v += p * entropy_from_probabilities(&lambda, n)?;
        }
        Ok(())
    })?;
    Ok(acc)
}

/// Exact MIE of `A` in the XXZ ground state at anisotropy `delta`.
pub fn mie_exact(layout: &RingLayout, delta: f64, n: f64) -> Result<f64> {
    let gs = xxz_ground_state(layout.sites, delta)?;
    Ok(mie_exact_state(&gs.state, layout, &[n])?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_singlet() {
        let gs = xxz_ground_state(2, 0.0).unwrap();
        assert!((gs.energy + 4.0).abs() < 1e-12);
        let a = gs.state.amplitudes();
        // |up,down> = index 1, |down,up> = index 2
        assert!((a[1] + a[2]).abs() < 1e-12 && (a[1].abs() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let sector = Sector::new(10, 0.3);
        let (e_dense, e1_dense, _) = lowest_dense(sector.dense());
        let (e_lanczos, e1_lanczos, v) = lowest_lanczos(&sector).unwrap();
        assert!((e_dense - e_lanczos).abs() < 1e-10);
        assert!((e1_dense - e1_lanczos).abs() < 1e-6);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sector_and_norm() {
        let gs = xxz_ground_state(12, 0.5).unwrap();
        assert!(gs.state.magnetization().abs() < 1e-12);
        assert!((gs.state.norm() - 1.0).abs() < 1e-12);
        assert!(gs.residual < RESIDUAL_TOLERANCE);
        assert!(xxz_ground_state(9, 0.0).is_err());
        assert!(xxz_ground_state(16, 0.0).is_err());
        assert!(xxz_ground_state(8, -1.0).is_err());
    }

    #[test]
    fn luttinger_parameter() {
        assert!((luttinger_g(0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((luttinger_g(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((luttinger_g(-0.3).unwrap() - 0.3f64.acos() / std::f64::consts::PI).abs() < 1e-15);
        assert!((luttinger_g(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(luttinger_g(-1.0).is_err() && luttinger_g(1.2).is_err());
    }

    #[test]
    fn entropies_of_pure_pieces() {
        let gs = xxz_ground_state(8, 0.2).unwrap();
        let all: Vec<usize> = (0..8).collect();
        assert!(region_entropy(&gs.state, &all, 1.0).unwrap() < 1e-12);
        let m = measure_sites(&gs.state, &[2, 3], &MeasureMode::Forced(vec![1, 0])).unwrap();
        assert!(region_entropy(&m[0].state, &[2, 3], 2.0).unwrap() < 1e-10);
        let half = region_entropy(&gs.state, &[0, 1, 2, 3], 2.0).unwrap();
        let other = region_entropy(&gs.state, &[4, 5, 6, 7], 2.0).unwrap();
        assert!((half - other).abs() < 1e-10);
    }

    #[test]
    fn enumeration_is_complete() {
        let gs = xxz_ground_state(10, -0.4).unwrap();
        let branches = measure_sites(&gs.state, &[0, 3, 4, 8], &MeasureMode::Enumerate).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // magnetization conservation leaves every 4-site pattern allowed
        assert_eq!(branches.len(), 16);
    }

    #[test]
    fn forced_rejects_null_outcome() {
        let gs = xxz_ground_state(4, 0.0).unwrap();
        // three ups in a four-site zero-magnetization state are impossible
        let err = measure_sites(&gs.state, &[0, 1, 2], &MeasureMode::Forced(vec![1, 1, 1])).unwrap_err();
        assert!(matches!(err, MieError::ForbiddenOutcome { .. }));
    }

    #[test]
    fn mie_without_measurement_is_plain_entropy() {
        let gs = xxz_ground_state(8, 0.5).unwrap();
        let layout = RingLayout::new(
            8,
            crate::geometry::SiteInterval { start: 0, len: 4 },
            crate::geometry::SiteInterval { start: 4, len: 4 },
        )
        .unwrap();
        let v = mie_exact_state(&gs.state, &layout, &[2.0]).unwrap()[0];
        let s = region_entropy(&gs.state, &[0, 1, 2, 3], 2.0).unwrap();
        assert!((v - s).abs() < 1e-12);
    }
}
