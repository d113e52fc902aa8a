//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use relay_bounds::bounds::{cutset_inner_inf, lower_bound, UpperBoundVars};
use relay_bounds::mc::{grid_search_scheme, verify_suite, MiExpr};
use relay_bounds::optimize::{optimize_scheme, OptimizerConfig};
use relay_bounds::rates::{mi_mac, mi_mac_given_v, mi_direct_given, mi_v_unconditional, Scheme};
use relay_bounds::sweep::{run_sweep, Quantity, SweepConfig, SweepResult};
use relay_bounds::{make_angle_channel, CMatrix, CovarianceProfile, HermitianPsd, RelayChannel, Topology, TopologyKind, C64};

/// Written to stderr directly so the line shows even when output is captured.
fn report(id: u32, name: &str, ok: bool, detail: &str) {
    let line = format!("criterion {id} [{}] {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn topology(kind: TopologyKind) -> Topology {
    Topology::new(kind, 0.5).unwrap()
}

fn grid17() -> Vec<f64> {
    (0..17).map(|i| PI * i as f64 / 16.0).collect()
}

/// The three default-budget sweeps shared by criteria 2 and 3.
fn sweeps() -> &'static Vec<SweepResult> {
    static CELL: OnceLock<Vec<SweepResult>> = OnceLock::new();
    CELL.get_or_init(|| {
        TopologyKind::ALL
            .iter()
            .map(|&k| {
                let mut cfg = SweepConfig::new(topology(k));
                cfg.theta_grid = grid17();
                cfg.quantities = Quantity::ALL.to_vec();
                run_sweep(&cfg, 1).unwrap()
            })
            .collect()
    })
}

#[test]
fn criterion_1_lower_bound_plateau() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for theta in grid17() {
        let ch = make_angle_channel(theta, 10.0, topology(TopologyKind::Equidistant)).unwrap();
        worst = worst.max((lower_bound(&ch).unwrap() - 1.0).abs());
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-6 && elapsed < Duration::from_secs(1);
    report(1, "lower bound = 1 bit at 17 angles", ok, &format!("max |lower - 1| = {worst:.3e}, {elapsed:?}"));
    assert!(ok);
}

#[test]
fn criterion_2_strategy_ordering() {
    let slack = 0.02;
    let mut failures = Vec::new();
    let mut worst = [f64::NEG_INFINITY; 3];
    for res in sweeps() {
        for r in &res.rows {
            let (lo, sc, pre, up) = (r.lower.unwrap(), r.r_sc.unwrap(), r.r_pre.unwrap(), r.upper.unwrap());
            worst[0] = worst[0].max(lo - sc);
            worst[1] = worst[1].max(sc - pre);
            worst[2] = worst[2].max(pre - up);
            if lo > sc + 1e-9 {
                failures.push(format!("{} θ={:.4}: lower {lo:.6} > r_sc {sc:.6}", res.topology.kind, r.theta));
            }
            if sc > pre + slack {
                failures.push(format!("{} θ={:.4}: r_sc {sc:.6} > r_pre {pre:.6}", res.topology.kind, r.theta));
            }
            if pre > up + slack {
                failures.push(format!("{} θ={:.4}: r_pre {pre:.6} > upper {up:.6}", res.topology.kind, r.theta));
            }
        }
    }
    let ok = failures.is_empty();
    report(
        2,
        "lower ≤ r_sc ≤ r_pre ≤ upper over 17 angles × 3 topologies",
        ok,
        &format!(
            "max(lower - r_sc) = {:.3e}, max(r_sc - r_pre) = {:.3e}, max(r_pre - upper) = {:.3e}, {} violation(s)",
            worst[0],
            worst[1],
            worst[2],
            failures.len()
        ),
    );
    for f in &failures {
        let _ = writeln!(std::io::stderr(), "    {f}");
    }
    assert!(ok);
}

fn max_rise(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn criterion_3_curve_shapes() {
    let first_half = |res: &SweepResult, get: fn(&relay_bounds::sweep::SweepRow) -> Option<f64>| -> Vec<f64> {
        res.rows
            .iter()
            .filter(|r| r.theta <= FRAC_PI_2 + 1e-12)
            .map(|r| get(r).unwrap())
            .collect()
    };
    let all = sweeps();
    let equi = all.iter().find(|r| r.topology.kind == TopologyKind::Equidistant).unwrap();
    let near_rx = all.iter().find(|r| r.topology.kind == TopologyKind::RelayNearRx).unwrap();
    let upper = first_half(equi, |r| r.upper);
    let lower = first_half(near_rx, |r| r.lower);
    let upper_rise = max_rise(&upper);
    let lower_drop = max_rise(&lower.iter().map(|v| -v).collect::<Vec<_>>());
    let ok = upper_rise <= 0.01 && lower_drop <= 0.01 && upper.len() == 9;
    report(
        3,
        "equidistant upper nonincreasing, relay-near-rx lower nondecreasing on [0, π/2]",
        ok,
        &format!("largest upper rise {upper_rise:.3e}, largest lower drop {lower_drop:.3e}"),
    );
    assert!(ok);
}

fn random_cmatrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Random channel and feasible profile: the joint (u, x2) and v covariances
/// come from random factors scaled to the power budgets.
fn random_case<R: Rng>(rng: &mut R, max: usize) -> (RelayChannel, CovarianceProfile) {
    let (mt, mr, nt, nr) = (
        rng.random_range(1..=max),
        rng.random_range(1..=max),
        rng.random_range(1..=max),
        rng.random_range(1..=max),
    );
    let ch = RelayChannel::new(
        random_cmatrix(rng, nr, mt),
        random_cmatrix(rng, nt, mt),
        random_cmatrix(rng, nt, mr),
        rng.random_range(0.1..3.0),
        rng.random_range(0.1..3.0),
        rng.random_range(0.1..3.0),
    )
    .unwrap();
    let f = random_cmatrix(rng, mt + mr, mt + mr);
    let mut joint = &f * f.adjoint();
    let fv = random_cmatrix(rng, mt, mt);
    let mut sv = &fv * fv.adjoint();
    let tr = |m: &CMatrix, r: std::ops::Range<usize>| r.map(|i| m[(i, i)].re).sum::<f64>();
    let split: f64 = rng.random_range(0.0..1.0);
    let su = split * mt as f64 / tr(&joint, 0..mt);
    let sx = rng.random_range(0.1..1.0) * mr as f64 / tr(&joint, mt..mt + mr);
    let d = DMatrix::from_fn(mt + mr, mt + mr, |i, j| {
        if i == j {
            C64::new(if i < mt { su.sqrt() } else { sx.sqrt() }, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    joint = &d * joint * &d;
    joint = (&joint + joint.adjoint()) * C64::new(0.5, 0.0);
    sv *= C64::new((1.0 - split) * mt as f64 / tr(&sv, 0..mt), 0.0);
    sv = (&sv + sv.adjoint()) * C64::new(0.5, 0.0);
    let p = CovarianceProfile::new(
        HermitianPsd::new(joint.view((0, 0), (mt, mt)).into_owned()).unwrap(),
        HermitianPsd::new(sv).unwrap(),
        HermitianPsd::new(joint.view((mt, mt), (mr, mr)).into_owned()).unwrap(),
        joint.view((0, mt), (mt, mr)).into_owned(),
    )
    .unwrap();
    (ch, p)
}

#[test]
fn criterion_4_chain_rule() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (ch, p) = random_case(&mut rng, 4);
        let lhs = mi_mac(&ch, &p).unwrap() + mi_direct_given(&ch, &p).unwrap();
        let rhs = mi_mac_given_v(&ch, &p).unwrap() + mi_v_unconditional(&ch, &p).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    let ok = worst <= 1e-9;
    report(
        4,
        "I(U,X2;Y) + I(V;Y|U,X2) = I(U,X2;Y|V) + I(V;Y) over 1000 profiles",
        ok,
        &format!("max deviation {worst:.3e}, {:?}", start.elapsed()),
    );
    assert!(ok);
}

#[test]
fn criterion_5_monte_carlo_agreement() {
    let start = Instant::now();
    let rep = verify_suite(100, 1_000_000, 7, 2, 1).unwrap();
    let elapsed = start.elapsed();
    let ok = rep.passed(0.95) && elapsed < Duration::from_secs(300);
    let counts: Vec<String> = rep.agree.iter().map(|(e, n)| format!("{e} {n}/100")).collect();
    report(5, "closed forms within 3 SE of 10^6-sample estimates", ok, &format!("{}; {elapsed:?}", counts.join(", ")));
    assert_eq!(rep.agree.len(), MiExpr::ALL.len());
    assert!(ok);
}

fn random_scalar_channel<R: Rng>(rng: &mut R) -> RelayChannel {
    let mut m = || CMatrix::from_element(1, 1, C64::new(rng.random_range(0.3..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0));
    let (h1, h2, h3) = (m(), m(), m());
    RelayChannel::new(h1, h2, h3, rng.random_range(0.2..2.0), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)).unwrap()
}

#[test]
fn criterion_6_optimizer_matches_grid_search() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = OptimizerConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let ch = random_scalar_channel(&mut rng);
        let opt = optimize_scheme(&ch, Scheme::Superposition, &cfg, &[]).unwrap().value();
        let grid = grid_search_scheme(&ch, Scheme::Superposition, 0.01).unwrap();
        worst = worst.max((opt - grid).abs());
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-2 && elapsed < Duration::from_secs(120);
    report(6, "optimized R_sc within 0.01 of 0.01-resolution grid on 10 scalar channels", ok, &format!("max |opt - grid| = {worst:.3e}, {elapsed:?}"));
    assert!(ok);
}

/// `log2 det(I + M)` by LU.
fn log2_det_plus_identity(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let a = CMatrix::identity(n, n) + m;
    a.determinant().re.log2()
}

#[test]
fn criterion_7_inner_infimum_matches_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (mt, mr, nt, nr) = (
            rng.random_range(1..=3),
            rng.random_range(1..=3),
            rng.random_range(1..=3),
            rng.random_range(1..=3),
        );
        let ch = RelayChannel::new(
            random_cmatrix(&mut rng, nr, mt),
            random_cmatrix(&mut rng, nt, mt),
            random_cmatrix(&mut rng, nt, mr),
            rng.random_range(0.1..3.0),
            rng.random_range(0.1..3.0),
            rng.random_range(0.1..3.0),
        )
        .unwrap();
        let f11 = random_cmatrix(&mut rng, mt, mt);
        let f22 = random_cmatrix(&mut rng, mr, mr);
        let s11 = HermitianPsd::from_factor(&f11);
        let s22 = HermitianPsd::from_factor(&f22);
        let s11 = s11.scaled(mt as f64 / s11.trace());
        let s22 = s22.scaled(mr as f64 / s22.trace());
        let rho: f64 = rng.random_range(0.05..0.95);
        let vars = UpperBoundVars { rho, sigma11: s11.clone(), sigma22: s22.clone() };
        let got = cutset_inner_inf(&ch, &vars).unwrap().bits;

        let a2 = &ch.h2 * s11.as_matrix() * ch.h2.adjoint();
        let a3 = &ch.h3 * s22.as_matrix() * ch.h3.adjoint();
        let g = (ch.gamma2 * ch.gamma3).sqrt();
        let n = 1_000_000;
        let mut best = f64::INFINITY;
        for k in 0..n {
            let a = 10f64.powf(-6.0 + 12.0 * k as f64 / (n - 1) as f64);
            let m = &a2 * C64::new(ch.gamma2 + rho * rho * g / a, 0.0) + &a3 * C64::new(ch.gamma3 + a * g, 0.0);
            best = best.min(log2_det_plus_identity(&m));
        }
        worst = worst.max((got - best).abs());
    }
    let ok = worst <= 1e-6;
    report(7, "inner infimum over a matches a 10^6-point log grid on 20 instances", ok, &format!("max deviation {worst:.3e}"));
    assert!(ok);
}
