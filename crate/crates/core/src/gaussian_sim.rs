//! Free-fermion engine for the XX ring (`Delta = 0`).
//!
//! After Jordan-Wigner the ring is a half-filled tight-binding chain, so the
//! ground state and every state reached by measuring local charges is a
//! Slater determinant fixed by its correlation matrix `C_jk = <c_j^+ c_k>`.
//! The XX ground state is real, and charge projections keep it real, so `C`
//! is stored as a real symmetric matrix.
//!
//! Sampling works on the marginal of `A` and the measured sites only: the
//! unmeasured partner block `B` never feeds back into `A`'s conditional state.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;

use crate::entropy::{check_index, entropy_from_occupations, entropy_from_probabilities};
use crate::error::{domain, MieError, Result};
use crate::geometry::{RingLayout, SiteInterval};

/// Outcomes less likely than this are treated as null events.
pub const FORBIDDEN_PROBABILITY: f64 = 1e-14;

/// Largest `|A| + |B|` accepted by [`spin_mutual_information`].
pub const MAX_SPIN_REGION: usize = 12;

/// Largest measured region accepted by exhaustive enumeration.
pub const MAX_ENUMERATED: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    c: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Wraps a square matrix that is symmetric to `1e-12`.
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if !c.is_square() || c.nrows() == 0 {
            return Err(MieError::InvalidState(format!(
                "correlation matrix must be square and non-empty, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        let asym = (&c - c.transpose()).amax();
        if !(asym <= 1e-12) {
            return Err(MieError::InvalidState(format!(
                "correlation matrix is not symmetric (max deviation {asym:e})"
            )));
        }
        Ok(CorrelationMatrix { c })
    }

    pub fn sites(&self) -> usize {
        self.c.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[(i, j)]
    }

    /// Expected particle number.
    pub fn trace(&self) -> f64 {
        self.c.trace()
    }

    /// Sub-block on `region`, rows and columns in the given order.
    pub fn block(&self, region: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(region.len(), region.len(), |i, j| {
            self.c[(region[i], region[j])]
        })
    }

    /// Eigenvalues, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        sorted_eigenvalues(self.c.clone())
    }
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Fermionic boundary condition inherited from the periodic spin ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Antiperiodic,
}

/// Single-particle energy of momentum `k` for `H = sum XX + YY`.
pub fn mode_energy(k: f64) -> f64 {
    4.0 * k.cos()
}

/// Half-filled Fermi sea of the XX ring with its real orbitals.
#[derive(Debug, Clone)]
pub struct XxGroundState {
    pub correlation: CorrelationMatrix,
    /// `L x L/2` orthonormal real orbitals; `C = orbitals * orbitals^T`.
    pub orbitals: DMatrix<f64>,
    pub energy: f64,
    pub boundary: Boundary,
}

impl XxGroundState {
    /// Both boundary sectors are tried; the one with the lower energy among
    /// those with a gap at the Fermi level wins.
    pub fn new(sites: usize) -> Result<Self> {
        if sites < 4 || !sites.is_multiple_of(2) {
            return Err(domain("L", sites as f64, "even integers >= 4"));
        }
        let filled = sites / 2;
        let mut best: Option<(f64, Boundary, Vec<f64>)> = None;
        for boundary in [Boundary::Periodic, Boundary::Antiperiodic] {
            let shift = match boundary {
                Boundary::Periodic => 0.0,
                Boundary::Antiperiodic => 0.5,
            };
            let mut ks: Vec<f64> = (0..sites)
                .map(|m| 2.0 * std::f64::consts::PI * (m as f64 + shift) / sites as f64)
                .collect();
            ks.sort_by(|a, b| mode_energy(*a).total_cmp(&mode_energy(*b)));
            if mode_energy(ks[filled]) - mode_energy(ks[filled - 1]) < 1e-9 {
                continue;
            }
            let energy: f64 = ks[..filled].iter().map(|&k| mode_energy(k)).sum();
            if best.as_ref().is_none_or(|b| energy < b.0) {
                ks.truncate(filled);
                best = Some((energy, boundary, ks));
            }
        }
        let (energy, boundary, occupied) = best.ok_or(MieError::DegenerateFermiLevel(sites))?;

        let l = sites as f64;
        let mut columns: Vec<DVector<f64>> = Vec::with_capacity(filled);
        for &k in &occupied {
            let s = k.sin();
            if s.abs() < 1e-12 {
                columns.push(DVector::from_fn(sites, |j, _| (k * j as f64).cos() / l.sqrt()));
            } else if s > 0.0 {
                let norm = (2.0 / l).sqrt();
                columns.push(DVector::from_fn(sites, |j, _| norm * (k * j as f64).cos()));
                columns.push(DVector::from_fn(sites, |j, _| norm * (k * j as f64).sin()));
            }
        }
        debug_assert_eq!(columns.len(), filled);
        let orbitals = DMatrix::from_columns(&columns);
        let c = &orbitals * orbitals.transpose();
        Ok(XxGroundState {
            correlation: CorrelationMatrix::new((&c + c.transpose()) * 0.5)?,
            orbitals,
            energy,
            boundary,
        })
    }
}

/// Ground-state correlation matrix of the periodic XX ring of `sites` sites.
pub fn xx_ground_state(sites: usize) -> Result<CorrelationMatrix> {
    Ok(XxGroundState::new(sites)?.correlation)
}

/// `p(n_site = 1)`. Panics if `site` is out of range.
pub fn born_probability(c: &CorrelationMatrix, site: usize) -> f64 {
    c.get(site, site).clamp(0.0, 1.0)
}

fn check_outcome(outcome: u8) -> Result<()> {
    if outcome > 1 {
        return Err(domain("outcome", outcome as f64, "{0, 1}"));
    }
    Ok(())
}

/// Conditional state after observing `n_site = outcome`.
pub fn project_occupation(c: &CorrelationMatrix, site: usize, outcome: u8) -> Result<CorrelationMatrix> {
    check_outcome(outcome)?;
    let p1 = born_probability(c, site);
    let p = if outcome == 1 { p1 } else { 1.0 - p1 };
    if p < FORBIDDEN_PROBABILITY {
        return Err(MieError::ForbiddenOutcome {
            site,
            outcome,
            probability: p,
        });
    }
    let n = c.sites();
    // particles for outcome 1, holes (1 - C) for outcome 0
    let col = DVector::from_fn(n, |i, _| {
        let v = c.get(i, site);
        if outcome == 1 {
            v
        } else if i == site {
            1.0 - v
        } else {
            -v
        }
    });
    let sign = if outcome == 1 { -1.0 } else { 1.0 };
    let mut next = c.matrix().clone();
    next.ger(sign / p, &col, &col, 1.0);
    for i in 0..n {
        next[(i, site)] = 0.0;
        next[(site, i)] = 0.0;
    }
    next[(site, site)] = outcome as f64;
    Ok(CorrelationMatrix { c: next })
}

/// `S_n` of `region` from the spectrum of its correlation block.
pub fn renyi_entropy(c: &CorrelationMatrix, region: &[usize], n: f64) -> Result<f64> {
    check_index(n)?;
    if region.is_empty() {
        return Ok(0.0);
    }
    entropy_from_occupations(&sorted_eigenvalues(c.block(region)), n)
}

/// Fermionic `I_n(A:B) = S_n(A) + S_n(B) - S_n(A u B)`.
pub fn mutual_information(c: &CorrelationMatrix, a: &[usize], b: &[usize], n: f64) -> Result<f64> {
    if a.iter().any(|s| b.contains(s)) {
        return Err(MieError::InfeasibleLayout("A and B overlap".into()));
    }
    let union: Vec<usize> = a.iter().chain(b).copied().collect();
    Ok(renyi_entropy(c, a, n)? + renyi_entropy(c, b, n)? - renyi_entropy(c, &union, n)?)
}

/// Ordered measurement outcomes and their joint Born log-probability.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementRecord {
    pub entries: Vec<(usize, u8)>,
    pub log_prob: f64,
}

impl MeasurementRecord {
    pub fn probability(&self) -> f64 {
        self.log_prob.exp()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trajectory `index` in a run seeded with `seed`.
pub fn trajectory_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

fn sorted_unique(sites: &[usize]) -> Result<Vec<usize>> {
    let mut s = sites.to_vec();
    s.sort_unstable();
    if let Some(w) = s.windows(2).find(|w| w[0] == w[1]) {
        return Err(MieError::AlreadyMeasured(w[0]));
    }
    Ok(s)
}

/// Measures `region_c` left to right with Born-sampled outcomes
/// (`u < p(1)` with `u` uniform from a PCG stream seeded by `rng_seed`).
pub fn sample_trajectory(
    c: &CorrelationMatrix,
    region_c: &[usize],
    rng_seed: u64,
) -> Result<(MeasurementRecord, CorrelationMatrix)> {
    let sites = sorted_unique(region_c)?;
    let mut rng = Pcg64::seed_from_u64(rng_seed);
    let mut state = c.clone();
    let mut record = MeasurementRecord::default();
    for site in sites {
        let p1 = born_probability(&state, site);
        let outcome = (rng.gen::<f64>() < p1) as u8;
        record.log_prob += if outcome == 1 { p1 } else { 1.0 - p1 }.ln();
        state = project_occupation(&state, site, outcome)?;
        record.entries.push((site, outcome));
    }
    Ok((record, state))
}

/// Marginal on the kept sites and the not-yet-measured sites, laid out as
/// `[kept..., pending in reverse measurement order]` so that the next site
/// to measure is always the last active index and measuring just shrinks
/// the active block.
#[derive(Clone)]
struct Conditioner {
    m: DMatrix<f64>,
    order: Vec<usize>,
    active: usize,
    kept: usize,
}

impl Conditioner {
    fn new(c: &CorrelationMatrix, kept: &[usize], measured: &[usize]) -> Self {
        let order: Vec<usize> = kept.iter().chain(measured.iter().rev()).copied().collect();
        Conditioner {
            m: c.block(&order),
            active: order.len(),
            order,
            kept: kept.len(),
        }
    }

    fn pending(&self) -> usize {
        self.active - self.kept
    }

    fn next_site(&self) -> usize {
        self.order[self.active - 1]
    }

    fn next_probability(&self) -> f64 {
        let j = self.active - 1;
        self.m[(j, j)].clamp(0.0, 1.0)
    }

    /// Projects the next site; returns the Born probability of `outcome`.
    fn measure(&mut self, outcome: u8) -> Result<f64> {
        let j = self.active - 1;
        let p1 = self.next_probability();
        let p = if outcome == 1 { p1 } else { 1.0 - p1 };
        if p < FORBIDDEN_PROBABILITY {
            return Err(MieError::ForbiddenOutcome {
                site: self.order[j],
                outcome,
                probability: p,
            });
        }
        let v = DVector::from_fn(j, |i, _| self.m[(i, j)]);
        let alpha = if outcome == 1 { -1.0 / p1 } else { 1.0 / (1.0 - p1) };
        self.m.view_mut((0, 0), (j, j)).ger(alpha, &v, &v, 1.0);
        self.active = j;
        Ok(p)
    }

    fn kept_spectrum(&self) -> Vec<f64> {
        sorted_eigenvalues(self.m.view((0, 0), (self.kept, self.kept)).clone_owned())
    }
}

/// Monte Carlo estimate of a Born-averaged entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MieEstimate {
    pub mean: f64,
    /// Sample standard deviation over trajectories divided by `sqrt(n_traj)`.
    pub stderr: f64,
    pub n_traj: usize,
    pub renyi_n: f64,
}

fn summarize(samples: &[f64], renyi_n: f64) -> MieEstimate {
    let n = samples.len();
    // shifted by the first sample: exact zero spread for identical samples
    let shift = samples[0];
    let sum: f64 = samples.iter().map(|s| s - shift).sum();
    let sum_sq: f64 = samples.iter().map(|s| (s - shift).powi(2)).sum();
    let mean = shift + sum / n as f64;
    let stderr = if n > 1 {
        let var = ((sum_sq - sum * sum / n as f64) / (n - 1) as f64).max(0.0);
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MieEstimate {
        mean,
        stderr,
        n_traj: n,
        renyi_n,
    }
}

fn check_indices(ns: &[f64]) -> Result<()> {
    if ns.is_empty() {
        return Err(MieError::Config("empty list of Renyi indices".into()));
    }
    ns.iter().try_for_each(|&n| check_index(n))
}

/// Born-sampled MIE of `A` for several Renyi indices sharing the same
/// trajectories. Trajectory `t` draws from [`trajectory_seed`]`(seed, t)`, so
/// the result does not depend on the thread count.
pub fn estimate_mie_multi(
    c: &CorrelationMatrix,
    layout: &RingLayout,
    ns: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<Vec<MieEstimate>> {
    check_indices(ns)?;
    if n_traj == 0 {
        return Err(MieError::Config("n_traj must be positive".into()));
    }
    check_layout(c, layout)?;
    let base = Conditioner::new(c, &layout.region_a(), &layout.measured_sites());
    let per_traj: Vec<Vec<f64>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|t| {
            let mut cond = base.clone();
            let mut rng = Pcg64::seed_from_u64(trajectory_seed(seed, t));
            while cond.pending() > 0 {
                let outcome = (rng.gen::<f64>() < cond.next_probability()) as u8;
                cond.measure(outcome)?;
            }
            let nu = cond.kept_spectrum();
            ns.iter().map(|&n| entropy_from_occupations(&nu, n)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(ns
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let samples: Vec<f64> = per_traj.iter().map(|s| s[i]).collect();
            summarize(&samples, n)
        })
        .collect())
}

/// Born-sampled MIE of `A` in the XX ground state.
pub fn estimate_mie(layout: &RingLayout, n: f64, n_traj: usize, seed: u64) -> Result<MieEstimate> {
    let c = xx_ground_state(layout.sites)?;
    Ok(estimate_mie_multi(&c, layout, &[n], n_traj, seed)?[0])
}

fn check_layout(c: &CorrelationMatrix, layout: &RingLayout) -> Result<()> {
    if layout.sites != c.sites() {
        return Err(MieError::InfeasibleLayout(format!(
            "layout on L = {} applied to a state on L = {}",
            layout.sites,
            c.sites()
        )));
    }
    Ok(())
}

/// Depth-first walk over all non-null outcome strings of the pending sites,
/// calling `leaf` with the probability of each complete branch.
fn enumerate_branches<F>(cond: Conditioner, prob: f64, record: &mut Vec<(usize, u8)>, leaf: &mut F) -> Result<()>
where
    F: FnMut(&Conditioner, f64, &[(usize, u8)]) -> Result<()>,
{
    if cond.pending() == 0 {
        return leaf(&cond, prob, record);
    }
    let p1 = cond.next_probability();
    let site = cond.next_site();
    for outcome in [0u8, 1] {
        let p = if outcome == 1 { p1 } else { 1.0 - p1 };
        if p < FORBIDDEN_PROBABILITY {
            continue;
        }
        let mut child = cond.clone();
        child.measure(outcome)?;
        record.push((site, outcome));
        enumerate_branches(child, prob * p, record, leaf)?;
        record.pop();
    }
    Ok(())
}

fn check_enumerable(count: usize) -> Result<()> {
    if count > MAX_ENUMERATED {
        return Err(MieError::RegionTooLarge(format!(
            "{count} measured sites exceed the enumeration limit {MAX_ENUMERATED}"
        )));
    }
    Ok(())
}

/// Every outcome record of `region_c` with non-negligible probability,
/// measured left to right.
pub fn enumerate_outcomes(c: &CorrelationMatrix, region_c: &[usize]) -> Result<Vec<MeasurementRecord>> {
    let sites = sorted_unique(region_c)?;
    check_enumerable(sites.len())?;
    let mut out = Vec::new();
    enumerate_branches(Conditioner::new(c, &[], &sites), 1.0, &mut Vec::new(), &mut |_, p, rec| {
        out.push(MeasurementRecord {
            entries: rec.to_vec(),
            log_prob: p.ln(),
        });
        Ok(())
    })?;
    Ok(out)
}

/// Exact Born-weighted MIE of `A` by enumerating every outcome on `C`.
pub fn exact_mie_multi(c: &CorrelationMatrix, layout: &RingLayout, ns: &[f64]) -> Result<Vec<f64>> {
    check_indices(ns)?;
    check_layout(c, layout)?;
    let measured = layout.measured_sites();
    check_enumerable(measured.len())?;
    let mut acc = vec![0.0; ns.len()];
    let base = Conditioner::new(c, &layout.region_a(), &measured);
    enumerate_branches(base, 1.0, &mut Vec::new(), &mut |cond, p, _| {
        let nu = cond.kept_spectrum();
        for (a, &n) in acc.iter_mut().zip(ns) {
            *a += p * entropy_from_occupations(&nu, n)?;
        }
        Ok(())
    })?;
    Ok(acc)
}

/// Neel outcome: occupied (spin up) on even sites.
pub fn neel_outcome(site: usize) -> u8 {
    site.is_multiple_of(2) as u8
}

/// Entropies of `A` after post-selecting `pattern(site)` on every measured
/// site, with the record of the forced outcomes.
pub fn forced_entropy<P: Fn(usize) -> u8>(
    c: &CorrelationMatrix,
    layout: &RingLayout,
    pattern: P,
    ns: &[f64],
) -> Result<(MeasurementRecord, Vec<f64>)> {
    check_indices(ns)?;
    check_layout(c, layout)?;
    let mut cond = Conditioner::new(c, &layout.region_a(), &layout.measured_sites());
    let mut record = MeasurementRecord::default();
    while cond.pending() > 0 {
        let site = cond.next_site();
        let outcome = pattern(site);
        check_outcome(outcome)?;
        record.log_prob += cond.measure(outcome)?.ln();
        record.entries.push((site, outcome));
    }
    let nu = cond.kept_spectrum();
    let s = ns
        .iter()
        .map(|&n| entropy_from_occupations(&nu, n))
        .collect::<Result<_>>()?;
    Ok((record, s))
}

/// Spin-chain mutual information `I_n(A:B)` of the XX ground state for two
/// blocks `A` before `B` (no wrap-around), `|A| + |B| <= 12`.
///
/// Single blocks have the same spin and fermion spectra. For `A u B` the
/// Jordan-Wigner strings of operators that move an odd number of particles
/// between `A` and `B` pick up the gap parity `P = (-1)^{N_gap}`, so those
/// matrix elements come from the `P`-weighted reduced state `<P> rho_P`,
/// itself Gaussian with correlation `Phi_R S^{-1} Phi_R^T`,
/// `S = Phi^T D Phi`, `D = diag(-1 on the gap, 1 elsewhere)`.
pub fn spin_mutual_information(ground: &XxGroundState, a: SiteInterval, b: SiteInterval, n: f64) -> Result<f64> {
    check_index(n)?;
    let sites = ground.correlation.sites();
    let a_end = a.start + a.len;
    if a.len == 0 || b.len == 0 || a_end > b.start || b.start + b.len > sites {
        return Err(MieError::InfeasibleLayout(format!(
            "need non-empty A = {a:?} strictly before B = {b:?} on L = {sites}"
        )));
    }
    if a.len + b.len > MAX_SPIN_REGION {
        return Err(MieError::RegionTooLarge(format!(
            "|A| + |B| = {} exceeds {MAX_SPIN_REGION}",
            a.len + b.len
        )));
    }
    let c = &ground.correlation;
    let ra: Vec<usize> = (a.start..a_end).collect();
    let rb: Vec<usize> = (b.start..b.start + b.len).collect();
    let s_a = renyi_entropy(c, &ra, n)?;
    let s_b = renyi_entropy(c, &rb, n)?;
    if a_end == b.start {
        let union: Vec<usize> = ra.iter().chain(&rb).copied().collect();
        return Ok(s_a + s_b - renyi_entropy(c, &union, n)?);
    }

    let phi = &ground.orbitals;
    let mut dphi = phi.clone();
    for r in a_end..b.start {
        dphi.row_mut(r).neg_mut();
    }
    let s = phi.transpose() * &dphi;
    let string = s.determinant();
    if string.abs() < 1e-10 {
        return Err(MieError::VanishingString(string));
    }
    let s_inv = s
        .try_inverse()
        .ok_or(MieError::VanishingString(string))?;
    let region: Vec<usize> = ra.iter().chain(&rb).copied().collect();
    let phi_r = DMatrix::from_fn(region.len(), phi.ncols(), |i, j| phi[(region[i], j)]);
    let c_p = &phi_r * s_inv * phi_r.transpose();
    let c_p = (&c_p + c_p.transpose()) * 0.5;

    let plain = gaussian_fock_sectors(&c.block(&region));
    let twisted = gaussian_fock_sectors(&c_p);
    let mut lambda = Vec::with_capacity(1 << region.len());
    for (sector, (r1, rp)) in plain.iter().zip(&twisted).enumerate() {
        let configs = combinations(region.len(), sector);
        let b_parity: Vec<usize> = configs
            .iter()
            .map(|x| x.iter().filter(|&&i| i >= a.len).count() % 2)
            .collect();
        let rho = DMatrix::from_fn(configs.len(), configs.len(), |i, j| {
            if b_parity[i] == b_parity[j] {
                r1[(i, j)]
            } else {
                string * rp[(i, j)]
            }
        });
        lambda.extend(sorted_eigenvalues(rho));
    }
    Ok(s_a + s_b - entropy_from_probabilities(&lambda, n)?)
}

/// All `k`-subsets of `0..r` in lexicographic order.
fn combinations(r: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, r: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=r - (k - cur.len()) {
            cur.push(i);
            rec(i + 1, r, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, r, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Fock-space density matrix of the Gaussian state with correlation `c`,
/// one block per particle number, basis `prod_{i in x} c_i^+ |0>` with `x`
/// from [`combinations`]. With `c = V diag(nu) V^T`,
/// `rho_N[x, y] = sum_s w_s det V[x, s] det V[y, s]`.
fn gaussian_fock_sectors(c: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let r = c.nrows();
    let eig = SymmetricEigen::new(c.clone());
    let (v, nu) = (eig.eigenvectors, eig.eigenvalues);
    (0..=r)
        .map(|k| {
            let configs = combinations(r, k);
            let weights: Vec<f64> = configs
                .iter()
                .map(|s| {
                    (0..r)
                        .map(|a| if s.contains(&a) { nu[a] } else { 1.0 - nu[a] })
                        .product()
                })
                .collect();
            let minors = DMatrix::from_fn(configs.len(), configs.len(), |x, s| {
                if k == 0 {
                    return 1.0;
                }
                DMatrix::from_fn(k, k, |i, j| v[(configs[x][i], configs[s][j])]).determinant()
            });
            let scaled = DMatrix::from_fn(configs.len(), configs.len(), |x, s| minors[(x, s)] * weights[s]);
            scaled * minors.transpose()
        })
        .collect()
}
