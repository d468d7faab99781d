//! End-to-end acceptance run: one PASS/FAIL line per criterion, non-zero
//! exit if any criterion fails.

use std::time::{Duration, Instant};

use mie_core::cft_mie::{self, TheoryParams};
use mie_core::ed_oracle;
use mie_core::fit::{linear_fit, log_space, loglog_fit};
use mie_core::gaussian_sim::{self as gs, XxGroundState};
use mie_core::geometry::{RingLayout, SiteInterval};
use mie_core::runner::{self, ExperimentConfig};
use mie_core::Result;

const NS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 3.0];
const ZETAS: [f64; 5] = [0.01, 0.1, 0.5, 0.9, 0.99];
const GS: [f64; 5] = [0.25, 0.4, 0.5, 2.0 / 3.0, 1.0];
const XX_G: f64 = 0.5;

type Check = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn grid() -> impl Iterator<Item = TheoryParams> {
    NS.iter().flat_map(|&n| {
        ZETAS
            .iter()
            .flat_map(move |&z| GS.iter().map(move |&g| TheoryParams::new(g, n, z).unwrap()))
    })
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn normalization() -> Result<Outcome> {
    let t = Instant::now();
    let mut worst = 0.0_f64;
    for p in grid() {
        worst = worst.max((cft_mie::winding_integral(&p, 0.0)? - 1.0).abs());
    }
    let el = t.elapsed();
    Ok(Outcome {
        pass: worst < 1e-12 && within(el, 1.0),
        detail: format!("max |W_(n,0) - 1| = {worst:.2e} over 125 points, {:.2}s", el.as_secs_f64()),
    })
}

fn replica_derivative() -> Result<Outcome> {
    let t = Instant::now();
    let mut worst = 0.0_f64;
    for p in grid() {
        let analytic = cft_mie::winding_derivative(&p)?;
        let fd = cft_mie::winding_derivative_fd(&p, 1e-4)?;
        worst = worst.max((analytic - fd).abs());
    }
    let el = t.elapsed();
    Ok(Outcome {
        pass: worst < 1e-6 && within(el, 10.0),
        detail: format!("max |W' - FD| = {worst:.2e}, {:.2}s", el.as_secs_f64()),
    })
}

// even measured lengths so that the L = 128 layout has exactly half of each
const MC_MEASURED: [usize; 12] = [8, 16, 24, 32, 44, 56, 64, 76, 88, 100, 112, 120];
const MC_NS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];
const MC_TRAJ: usize = 4000;

fn theory_vs_simulation() -> Result<Outcome> {
    let t = Instant::now();
    let c256 = gs::xx_ground_state(256)?;
    let c128 = gs::xx_ground_state(128)?;
    let (mut hits, mut total, mut collapsed) = (0, 0, 0);
    let mut worst_dev = (0.0_f64, 0.0, 0.0);
    let mut worst_collapse = (0.0_f64, 0.0, 0.0);
    for (i, &m) in MC_MEASURED.iter().enumerate() {
        let big = RingLayout::antipodal(256, m)?;
        let small = RingLayout::antipodal(128, m / 2)?;
        let zeta = big.cross_ratio()?;
        let seed = 1000 + i as u64;
        let est_big = gs::estimate_mie_multi(&c256, &big, &MC_NS, MC_TRAJ, seed)?;
        let est_small = gs::estimate_mie_multi(&c128, &small, &MC_NS, MC_TRAJ, seed + 500)?;
        for (k, &n) in MC_NS.iter().enumerate() {
            let theory = cft_mie::mie(&TheoryParams::new(XX_G, n, zeta)?)?;
            let (b, s) = (est_big[k], est_small[k]);
            let dev = (b.mean - theory).abs();
            total += 1;
            if dev <= 2.0 * b.stderr + 0.02 {
                hits += 1;
            }
            if dev > worst_dev.0 {
                worst_dev = (dev, zeta, n);
            }
            let joint = b.stderr.hypot(s.stderr);
            let gap = (b.mean - s.mean).abs();
            if gap <= 2.0 * joint + 0.03 {
                collapsed += 1;
            }
            if gap - 2.0 * joint > worst_collapse.0 {
                worst_collapse = (gap - 2.0 * joint, zeta, n);
            }
        }
    }
    let frac = hits as f64 / total as f64;
    Ok(Outcome {
        pass: frac >= 0.9 && collapsed == total,
        detail: format!(
            "{hits}/{total} within 2 stderr + 0.02 (worst |dev| {:.4} at zeta {:.4}, n {}); \
             L 128/256 collapse {collapsed}/{total} (worst excess over 2 joint stderr {:.4} at zeta {:.4}, n {}); {:.0}s",
            worst_dev.0,
            worst_dev.1,
            worst_dev.2,
            worst_collapse.0,
            worst_collapse.1,
            worst_collapse.2,
            t.elapsed().as_secs_f64()
        ),
    })
}

fn slope_of<F: Fn(f64) -> Result<f64>>(zetas: &[f64], f: F) -> Result<f64> {
    let y = zetas.iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
    Ok(loglog_fit(zetas, &y).expect("positive values").slope)
}

fn forced_asymptotics() -> Result<Outcome> {
    let t = Instant::now();
    let zetas = log_space(1e-6, 1e-3, 13);
    let mut pass = true;
    let mut parts = Vec::new();
    for &g in &[0.4, XX_G, 2.0 / 3.0] {
        for &n in &[0.25, 0.5, 3.0] {
            let slope = slope_of(&zetas, |z| cft_mie::mie_forced(&TheoryParams::new(g, n, z)?))?;
            let expected = cft_mie::forced_exponent(g, n);
            let rel = (slope / expected - 1.0).abs();
            pass &= rel < 0.05;
            parts.push(format!("g {g:.3} n {n}: {slope:.4}/{expected:.4}"));
        }
    }
    let el = t.elapsed();
    Ok(Outcome {
        pass: pass && within(el, 5.0),
        detail: format!("{}; {:.2}s", parts.join(", "), el.as_secs_f64()),
    })
}

fn born_asymptotics() -> Result<Outcome> {
    let t = Instant::now();
    let zetas = log_space(1e-16, 1e-8, 17);
    let lx: Vec<f64> = zetas.iter().map(|z| z.ln()).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for &g in &[0.4, XX_G, 2.0 / 3.0] {
        let sub = slope_of(&zetas, |z| cft_mie::mie_renyi(&TheoryParams::new(g, 0.25, z)?))?;
        let sub_expected = 2.0 * 0.25 * 0.75 * g;
        let values = zetas
            .iter()
            .map(|&z| cft_mie::mie_renyi(&TheoryParams::new(g, 2.0, z)?))
            .collect::<Result<Vec<_>>>()?;
        let plain: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let corrected: Vec<f64> = values
            .iter()
            .zip(&zetas)
            .map(|(v, z)| (v * (1.0 / z).ln().sqrt()).ln())
            .collect();
        let fit_c = linear_fit(&lx, &corrected).unwrap();
        let fit_p = linear_fit(&lx, &plain).unwrap();
        let ratio = fit_p.residual_norm / fit_c.residual_norm;
        let super_expected = 0.5 * g;
        pass &= (sub / sub_expected - 1.0).abs() < 0.05
            && (fit_c.slope / super_expected - 1.0).abs() < 0.05
            && ratio > 1.5;
        parts.push(format!(
            "g {g:.3}: n 0.25 {sub:.4}/{sub_expected:.4}, n 2 {:.4}/{super_expected:.4} (uncorrected {:.4}, residual ratio {ratio:.1})",
            fit_c.slope, fit_p.slope
        ));
    }
    let el = t.elapsed();
    Ok(Outcome {
        pass: pass && within(el, 10.0),
        detail: format!("{}; {:.2}s", parts.join("; "), el.as_secs_f64()),
    })
}

fn cross_module() -> Result<Outcome> {
    let t = Instant::now();
    let layout = RingLayout::antipodal(12, 3)?;
    let ns = [1.0, 2.0, 3.0];
    let ed = ed_oracle::xxz_ground_state(12, 0.0)?.state;
    let c = gs::xx_ground_state(12)?;
    let exact = ed_oracle::mie_exact_state(&ed, &layout, &ns)?;
    let gauss = gs::exact_mie_multi(&c, &layout, &ns)?;
    let diff = exact.iter().zip(&gauss).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut worst_z = 0.0_f64;
    for seed in [1, 2, 3] {
        let est = gs::estimate_mie_multi(&c, &layout, &ns, MC_TRAJ, seed)?;
        for (e, x) in est.iter().zip(&exact) {
            worst_z = worst_z.max((e.mean - x).abs() / e.stderr);
        }
    }
    let el = t.elapsed();
    Ok(Outcome {
        pass: diff < 1e-8 && worst_z < 3.0 && within(el, 30.0),
        detail: format!(
            "|C| = 6, max |ED - Gaussian| = {diff:.2e}, max MC |z| over 3 seeds = {worst_z:.2}; {:.1}s",
            el.as_secs_f64()
        ),
    })
}

fn mii_signs() -> Result<Outcome> {
    let t = Instant::now();
    let ground = XxGroundState::new(256)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for &len in &[2usize, 4, 6] {
        let layout = RingLayout::antipodal(256, 128 - len)?;
        let zeta = layout.cross_ratio()?;
        assert!(zeta <= 0.1);
        let a = SiteInterval { start: layout.a.start, len };
        let b = SiteInterval { start: layout.b.start, len };
        let mi = gs::spin_mutual_information(&ground, a, b, 1.0)?;
        let est = gs::estimate_mie_multi(&ground.correlation, &layout, &[1.0], MC_TRAJ, 77 + len as u64)?[0];
        let (_, forced) = gs::forced_entropy(&ground.correlation, &layout, gs::neel_outcome, &[1.0])?;
        let real = est.mean - mi;
        let forced_mii = forced[0] - mi;
        pass &= real > 2.0 * est.stderr && forced_mii < -2.0 * est.stderr;
        parts.push(format!(
            "|A| {len} zeta {zeta:.2e}: MIE-MI {real:+.4} (stderr {:.4}), forced-MI {forced_mii:+.4}",
            est.stderr
        ));
    }
    Ok(Outcome {
        pass,
        detail: format!("{}; {:.0}s", parts.join("; "), t.elapsed().as_secs_f64()),
    })
}

fn interacting_anchor() -> Result<Outcome> {
    let t = Instant::now();
    let deltas = [-0.3, 0.5];
    let ns = [1.0, 2.0];
    let mut pass = true;
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    let states = deltas
        .iter()
        .map(|&d| Ok((ed_oracle::xxz_ground_state(14, d)?.state, ed_oracle::luttinger_g(d)?)))
        .collect::<Result<Vec<_>>>()?;
    for &m in &[2usize, 3] {
        let layout = RingLayout::antipodal(14, m)?;
        let zeta = layout.cross_ratio()?;
        let mut ed = Vec::new();
        let mut th = Vec::new();
        for (state, g) in &states {
            ed.push(ed_oracle::mie_exact_state(state, &layout, &ns)?);
            th.push(
                ns.iter()
                    .map(|&n| cft_mie::mie(&TheoryParams::new(*g, n, zeta)?))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        for k in 0..ns.len() {
            let ordered = (ed[0][k] - ed[1][k]).signum() == (th[0][k] - th[1][k]).signum();
            pass &= ordered;
            for d in 0..deltas.len() {
                worst = worst.max((ed[d][k] - th[d][k]).abs());
            }
            parts.push(format!(
                "|C| {} n {}: ED {:.4}/{:.4} vs theory {:.4}/{:.4}",
                2 * m,
                ns[k],
                ed[0][k],
                ed[1][k],
                th[0][k],
                th[1][k]
            ));
        }
    }
    let el = t.elapsed();
    Ok(Outcome {
        pass: pass && worst <= 0.1 && within(el, 300.0),
        detail: format!("{}; max |ED - theory| {worst:.4}; {:.1}s", parts.join("; "), el.as_secs_f64()),
    })
}

fn determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let text = "mode = \"xx_mc\"\nL = 64\nrenyi_list = [0.5, 1.0, 2.0]\n\
                layout_sweep = { min_measured = 2, max_measured = 30, step = 4 }\n\
                n_traj = 500\nseed = 2024\noutput_path = \"run.csv\"\n";
    let mut bytes = Vec::new();
    for name in ["first.csv", "second.csv"] {
        let mut cfg = ExperimentConfig::from_toml(text)?;
        cfg.output_path = dir.path().join(name);
        let out = runner::run(&cfg)?;
        bytes.push(std::fs::read(out.dataset)?);
    }
    Ok(Outcome {
        pass: bytes[0] == bytes[1],
        detail: format!("two xx_mc runs, {} bytes each, identical: {}", bytes[0].len(), bytes[0] == bytes[1]),
    })
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("normalization W_(n,0) = 1", normalization),
        ("replica derivative vs finite difference", replica_derivative),
        ("theory vs XX Monte Carlo, L = 128/256 collapse", theory_vs_simulation),
        ("forced small-zeta slopes", forced_asymptotics),
        ("Born-averaged small-zeta slopes", born_asymptotics),
        ("ED vs Gaussian engine vs Monte Carlo", cross_module),
        ("MII signs", mii_signs),
        ("interacting ED anchor", interacting_anchor),
        ("simulate determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} criterion {}: {name} -- {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
