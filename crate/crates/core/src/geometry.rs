//! Ring layouts, the conformal cross-ratio and the finite-cylinder data
//! `h(zeta)`, `q_n` that every theory formula consumes.
//!
//! Lattice intervals map to continuum endpoints with the midpoint-of-bond
//! convention: sites `{j, ..., j + l - 1}` become `[j - 1/2, j + l - 1/2]`.

use std::f64::consts::PI;

use crate::error::{domain, MieError, Result};
use crate::special_fn::{elliptic_k_complementary, Nome};

/// Four ordered endpoints on a ring of `sites` sites.
///
/// `A = [x1, x2]`, `B = [x3, x4]`, and the measured region is
/// `C = [x2, x3] U [x4, x1 + L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingGeometry {
    sites: usize,
    x: [f64; 4],
}

impl RingGeometry {
    pub fn new(sites: usize, x: [f64; 4]) -> Result<Self> {
        let l = sites as f64;
        if sites == 0 || x.iter().any(|v| !v.is_finite()) {
            return Err(MieError::DegenerateGeometry(format!(
                "L = {sites}, endpoints {x:?}"
            )));
        }
        let ordered = x[0] < x[1] && x[1] < x[2] && x[2] < x[3] && x[3] < x[0] + l;
        if !ordered {
            return Err(MieError::DegenerateGeometry(format!(
                "endpoints {x:?} are not cyclically ordered with positive lengths on L = {sites}"
            )));
        }
        Ok(RingGeometry { sites, x })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn endpoints(&self) -> [f64; 4] {
        self.x
    }

    /// Chord length `(L / pi) sin(pi x_ij / L)` between endpoints `i < j`.
    pub fn chord(&self, i: usize, j: usize) -> f64 {
        let l = self.sites as f64;
        l / PI * (PI * (self.x[j] - self.x[i]) / l).sin()
    }
}

/// Conformal cross-ratio `zeta = w12 w34 / (w13 w24)`.
pub fn cross_ratio(geom: &RingGeometry) -> Result<f64> {
    let w12 = geom.chord(0, 1);
    let w34 = geom.chord(2, 3);
    let w13 = geom.chord(0, 2);
    let w24 = geom.chord(1, 3);
    if [w12, w34, w13, w24].iter().any(|w| *w <= 0.0) {
        return Err(MieError::DegenerateGeometry(format!(
            "vanishing chord in {:?}",
            geom.x
        )));
    }
    Ok(w12 * w34 / (w13 * w24))
}

/// Elliptic modulus `k = (1 - sqrt(1 - zeta)) / (1 + sqrt(1 - zeta))` and its
/// complement, both without cancellation.
fn moduli(zeta: f64) -> (f64, f64) {
    let s = (1.0 - zeta).sqrt();
    let k = zeta / ((1.0 + s) * (1.0 + s));
    let kp = 2.0 * s.sqrt() / (1.0 + s);
    (k, kp)
}

/// Inverse of the modulus map: the cross-ratio with `k(zeta) = k`.
pub fn zeta_from_modulus(k: f64) -> f64 {
    4.0 * k / ((1.0 + k) * (1.0 + k))
}

/// Cylinder height `h(zeta) = 2 pi K(k) / K(sqrt(1 - k^2))`.
pub fn cylinder_height(zeta: f64) -> Result<f64> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(domain("zeta", zeta, "(0, 1)"));
    }
    let (k, kp) = moduli(zeta);
    // K(k) is the complementary integral of k'
    let k_of_k = elliptic_k_complementary(kp)?;
    let k_of_kp = elliptic_k_complementary(k)?;
    Ok(2.0 * PI * k_of_k / k_of_kp)
}

/// `q_n = exp(-2 pi^2 n / h)`.
pub fn nome(h: f64, n: f64) -> Result<Nome> {
    if !(h > 0.0) {
        return Err(domain("h", h, "(0, inf)"));
    }
    if !(n > 0.0) {
        return Err(domain("n", n, "(0, inf)"));
    }
    Nome::from_log(-2.0 * PI * PI * n / h)
}

/// Cross-ratio together with the height of the cylinder it maps to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderData {
    pub zeta: f64,
    pub h: f64,
}

impl CylinderData {
    pub fn new(zeta: f64) -> Result<Self> {
        Ok(CylinderData {
            zeta,
            h: cylinder_height(zeta)?,
        })
    }

    pub fn nome(&self, n: f64) -> Result<Nome> {
        nome(self.h, n)
    }
}

/// A contiguous run of lattice sites on the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteInterval {
    pub start: usize,
    pub len: usize,
}

/// Lattice layout on a periodic chain: two unmeasured blocks `A` and `B`, with
/// everything else (`C1` between them, `C2` after `B`) measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingLayout {
    pub sites: usize,
    pub a: SiteInterval,
    pub b: SiteInterval,
}

impl RingLayout {
    /// `A` starts at `a.start`; `B` must start at or after the end of `A` and
    /// end at or before `A` comes round again.
    pub fn new(sites: usize, a: SiteInterval, b: SiteInterval) -> Result<Self> {
        if a.len == 0 || b.len == 0 {
            return Err(MieError::InfeasibleLayout("A and B must be non-empty".into()));
        }
        if a.start >= sites || b.start >= sites + a.start || b.start < a.start + a.len {
            return Err(MieError::InfeasibleLayout(format!(
                "B = {b:?} does not follow A = {a:?} on L = {sites}"
            )));
        }
        if b.start + b.len > a.start + sites {
            return Err(MieError::InfeasibleLayout(format!(
                "B = {b:?} overlaps A = {a:?} on L = {sites}"
            )));
        }
        Ok(RingLayout { sites, a, b })
    }

    /// Antipodal symmetric layout: `|A| = |B| = L/2 - m`, `|C1| = |C2| = m`,
    /// with `A` starting at site 0.
    pub fn antipodal(sites: usize, measured: usize) -> Result<Self> {
        if !sites.is_multiple_of(2) {
            return Err(MieError::InfeasibleLayout(format!(
                "antipodal layouts need an even ring, got L = {sites}"
            )));
        }
        let half = sites / 2;
        if measured == 0 || measured >= half {
            return Err(MieError::InfeasibleLayout(format!(
                "measured length {measured} must lie in [1, {}] for L = {sites}",
                half - 1
            )));
        }
        let len = half - measured;
        RingLayout::new(
            sites,
            SiteInterval { start: 0, len },
            SiteInterval { start: half, len },
        )
    }

    fn wrap(&self, s: usize) -> usize {
        s % self.sites
    }

    pub fn region_a(&self) -> Vec<usize> {
        (self.a.start..self.a.start + self.a.len).map(|s| self.wrap(s)).collect()
    }

    pub fn region_b(&self) -> Vec<usize> {
        (self.b.start..self.b.start + self.b.len).map(|s| self.wrap(s)).collect()
    }

    pub fn region_c1(&self) -> Vec<usize> {
        (self.a.start + self.a.len..self.b.start).map(|s| self.wrap(s)).collect()
    }

    pub fn region_c2(&self) -> Vec<usize> {
        (self.b.start + self.b.len..self.a.start + self.sites)
            .map(|s| self.wrap(s))
            .collect()
    }

    /// Measured sites in increasing site order.
    pub fn measured_sites(&self) -> Vec<usize> {
        let mut c = self.region_c1();
        c.extend(self.region_c2());
        c.sort_unstable();
        c
    }

    /// Same layout translated so that `A` starts at site 0. Entropies of `A`
    /// and `B` are then computed on blocks that are contiguous in site order.
    pub fn canonical(&self) -> RingLayout {
        let shift = self.a.start;
        RingLayout {
            sites: self.sites,
            a: SiteInterval { start: 0, len: self.a.len },
            b: SiteInterval {
                start: self.b.start - shift,
                len: self.b.len,
            },
        }
    }

    /// Continuum endpoints under the midpoint-of-bond convention.
    pub fn geometry(&self) -> Result<RingGeometry> {
        let x1 = self.a.start as f64 - 0.5;
        let x2 = (self.a.start + self.a.len) as f64 - 0.5;
        let x3 = self.b.start as f64 - 0.5;
        let x4 = (self.b.start + self.b.len) as f64 - 0.5;
        RingGeometry::new(self.sites, [x1, x2, x3, x4])
    }

    pub fn cross_ratio(&self) -> Result<f64> {
        cross_ratio(&self.geometry()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_layout_is_one_half() {
        let g = RingGeometry::new(16, [0.0, 4.0, 8.0, 12.0]).unwrap();
        assert!((cross_ratio(&g).unwrap() - 0.5).abs() < 1e-15);
        let layout = RingLayout::antipodal(16, 4).unwrap();
        assert_eq!(layout.a.len, 4);
        assert!((layout.cross_ratio().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shrinking_a_sends_zeta_to_zero() {
        let mut last = 1.0;
        for eps in [1.0, 0.1, 1e-3, 1e-6] {
            let g = RingGeometry::new(40, [0.0, eps, 20.0, 30.0]).unwrap();
            let z = cross_ratio(&g).unwrap();
            assert!(z < last);
            last = z;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn cross_ratio_is_invariant_under_rotation_and_scaling() {
        let base = RingGeometry::new(50, [1.0, 7.5, 19.0, 33.0]).unwrap();
        let z = cross_ratio(&base).unwrap();
        let rot = RingGeometry::new(50, [4.25, 10.75, 22.25, 36.25]).unwrap();
        assert!((cross_ratio(&rot).unwrap() - z).abs() < 1e-14);
        let scaled = RingGeometry::new(150, [3.0, 22.5, 57.0, 99.0]).unwrap();
        assert!((cross_ratio(&scaled).unwrap() - z).abs() < 1e-14);
    }

    #[test]
    fn bad_geometries_are_rejected() {
        assert!(RingGeometry::new(10, [0.0, 2.0, 2.0, 5.0]).is_err());
        assert!(RingGeometry::new(10, [0.0, 2.0, 5.0, 10.0]).is_err());
        assert!(RingLayout::antipodal(15, 3).is_err());
        assert!(RingLayout::antipodal(16, 8).is_err());
        assert!(RingLayout::antipodal(16, 0).is_err());
    }

    #[test]
    fn height_at_self_dual_modulus_is_two_pi() {
        let zeta = zeta_from_modulus(std::f64::consts::FRAC_1_SQRT_2);
        assert!((zeta - 0.970_562_748_5).abs() < 1e-10);
        let h = cylinder_height(zeta).unwrap();
        assert!((h - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn height_small_zeta_asymptotics() {
        let zeta = 1e-6;
        let h = cylinder_height(zeta).unwrap();
        let approx = PI * PI / (16.0 / zeta).ln();
        assert!((h - approx).abs() < 1e-5 * approx, "{h} vs {approx}");
        // far below the smallest argument the naive modulus formula survives
        assert!(cylinder_height(1e-200).unwrap() > 0.0);
    }

    #[test]
    fn height_duality() {
        for &k in &[0.05_f64, 0.2, 0.5, 0.9, 0.99] {
            let kp: f64 = (1.0 - k * k).sqrt();
            let h1 = cylinder_height(zeta_from_modulus(k)).unwrap();
            let h2 = cylinder_height(zeta_from_modulus(kp)).unwrap();
            // relative: for small k the dual cross-ratio sits within ~k^4 of 1
            let err = (h1 * h2 / (4.0 * PI * PI) - 1.0).abs();
            assert!(err < 1e-10, "{k}: {err}");
        }
    }

    #[test]
    fn height_domain() {
        assert!(cylinder_height(0.0).is_err());
        assert!(cylinder_height(1.0).is_err());
    }

    #[test]
    fn nome_values() {
        let q = nome(2.0 * PI * PI, 1.0).unwrap();
        assert!((q.q() - (-1.0_f64).exp()).abs() < 1e-16);
        let q1 = nome(3.7, 1.0).unwrap().q();
        let q25 = nome(3.7, 2.5).unwrap().q();
        assert!((q25 - q1.powf(2.5)).abs() < 1e-15);
        assert!(nome(1e12, 1.0).unwrap().q() < 1.0);
        assert!(nome(1e12, 1.0).unwrap().q() > 0.999_999);
        assert!(nome(-1.0, 1.0).is_err());
    }

    #[test]
    fn layout_regions_partition_the_ring() {
        let layout = RingLayout::new(
            20,
            SiteInterval { start: 17, len: 4 },
            SiteInterval { start: 24, len: 6 },
        )
        .unwrap();
        let mut all = layout.region_a();
        all.extend(layout.region_b());
        all.extend(layout.measured_sites());
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
        assert_eq!(layout.region_a(), vec![17, 18, 19, 0]);
        let canon = layout.canonical();
        assert_eq!(canon.region_a(), vec![0, 1, 2, 3]);
        assert_eq!(canon.region_b(), vec![7, 8, 9, 10, 11, 12]);
        assert!((canon.cross_ratio().unwrap() - layout.cross_ratio().unwrap()).abs() < 1e-14);
    }
}
