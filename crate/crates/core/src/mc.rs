//! Monte Carlo estimates of the Gaussian mutual informations, and a
//! brute-force grid optimizer for scalar channels.
//!
//! Both are independent of the closed forms in [`crate::rates`]: the
//! estimator draws the signals and reads entropies off sample covariances,
//! and the grid search evaluates its own scalar formulas.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::RelayChannel;
use crate::error::{Error, Result};
use crate::matrix::{c, cholesky, nats_to_bits, psd_factor, CMatrix, HermitianPsd, C64};
use crate::rates::{self, CovarianceProfile, DecodeOrder, Scheme, Strategy};

pub const MIN_SAMPLES: usize = 10_000;
pub const BATCHES: usize = 20;
/// Ridge added to every sample covariance before its log-determinant.
pub const SAMPLE_RIDGE: f64 = 1e-9;
const RIDGE_GROWTH: f64 = 100.0;
const MAX_RIDGE_STEPS: usize = 8;
/// Smallest reported standard error.
const SE_FLOOR: f64 = 1e-12;

/// The mutual-information expressions behind the rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MiExpr {
    /// `I(U;Y1|X2)`, superposition coding.
    RelayLinkSc,
    /// `I(U,X2;Y)`.
    Mac,
    /// `I(V;Y|U,X2)`.
    DirectGiven,
    /// `I(V;Y)`.
    VUnconditional,
    /// `I(U,X2;Y|V)`.
    MacGivenV,
    /// `I(U;Y1|X2) − I(U;V|X2)` with `u = x1' + G v`.
    RelayLinkDpc,
}

impl MiExpr {
    pub const ALL: [MiExpr; 6] = [
        MiExpr::RelayLinkSc,
        MiExpr::Mac,
        MiExpr::DirectGiven,
        MiExpr::VUnconditional,
        MiExpr::MacGivenV,
        MiExpr::RelayLinkDpc,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            MiExpr::RelayLinkSc => "relay_link_sc",
            MiExpr::Mac => "mac",
            MiExpr::DirectGiven => "direct_given_u",
            MiExpr::VUnconditional => "v_unconditional",
            MiExpr::MacGivenV => "mac_given_v",
            MiExpr::RelayLinkDpc => "relay_link_dpc",
        }
    }

    /// The matching closed form from [`crate::rates`].
    pub fn closed_form(self, ch: &RelayChannel, p: &CovarianceProfile) -> Result<f64> {
        match self {
            MiExpr::RelayLinkSc => rates::mi_relay_link_sc(ch, p),
            MiExpr::Mac => rates::mi_mac(ch, p),
            MiExpr::DirectGiven => rates::mi_direct_given(ch, p),
            MiExpr::VUnconditional => rates::mi_v_unconditional(ch, p),
            MiExpr::MacGivenV => rates::mi_mac_given_v(ch, p),
            MiExpr::RelayLinkDpc => rates::mi_relay_link_dpc(ch, p),
        }
    }
}

impl fmt::Display for MiExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.tag())
    }
}

impl FromStr for MiExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MiExpr::ALL
            .into_iter()
            .find(|e| e.tag() == s)
            .ok_or_else(|| Error::Argument(format!("unknown expression '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// Estimate in bits, from the pooled sample covariance.
    pub value: f64,
    /// Batch-means standard error in bits.
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    /// A sample covariance needed more than the default ridge.
    pub ridged: bool,
}

/// Positions of each signal inside the stacked sample vector
/// `[x2, u, v, u_dpc, y1, y]`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    mr: usize,
    mt: usize,
    nr: usize,
    nt: usize,
}

#[derive(Debug, Clone, Copy)]
enum Sig {
    X2,
    U,
    V,
    Ud,
    Y1,
    Y,
}

impl Layout {
    fn dim(&self) -> usize {
        self.mr + 3 * self.mt + self.nr + self.nt
    }

    fn range(&self, s: Sig) -> std::ops::Range<usize> {
        let (mr, mt, nr) = (self.mr, self.mt, self.nr);
        let (start, len) = match s {
            Sig::X2 => (0, mr),
            Sig::U => (mr, mt),
            Sig::V => (mr + mt, mt),
            Sig::Ud => (mr + 2 * mt, mt),
            Sig::Y1 => (mr + 3 * mt, nr),
            Sig::Y => (mr + 3 * mt + nr, self.nt),
        };
        start..start + len
    }

    fn indices(&self, sigs: &[Sig]) -> Vec<usize> {
        sigs.iter().flat_map(|&s| self.range(s)).collect()
    }
}

/// Row-major dense matrix for the sampling loop.
struct Dense {
    cols: usize,
    data: Vec<C64>,
}

impl Dense {
    fn from(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let data = (0..rows).flat_map(|i| (0..cols).map(move |j| m[(i, j)])).collect();
        Self { cols, data }
    }

    /// `out += self · x`.
    fn mul_add(&self, x: &[C64], out: &mut [C64]) {
        if self.cols == 0 {
            return;
        }
        for (row, o) in self.data.chunks_exact(self.cols).zip(out.iter_mut()) {
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *o += acc;
        }
    }
}

/// `G = K H̃†(I + H̃ K H̃†)⁻¹ H̃` with `H̃ = √γ1 H1`, `K = Σ_x1'|x2`.
fn costa_matrix(ch: &RelayChannel, k: &HermitianPsd) -> Result<CMatrix> {
    let ht = &ch.h1 * c(ch.gamma1.sqrt());
    let kh = k.as_matrix() * ht.adjoint();
    let mut m = &ht * &kh;
    for i in 0..m.nrows() {
        m[(i, i)] += c(1.0);
    }
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Domain("precoding matrix is singular".into()))?;
    Ok(kh * inv * ht)
}

fn ln_det_sub(s: &CMatrix, idx: &[usize], ridge: f64) -> Option<f64> {
    if idx.is_empty() {
        return Some(0.0);
    }
    let n = idx.len();
    let mut m = CMatrix::from_fn(n, n, |i, j| s[(idx[i], idx[j])]);
    for i in 0..n {
        m[(i, i)] += c(ridge);
    }
    let l = cholesky(&m)?;
    Some(2.0 * (0..n).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// Evaluates entropy differences on one sample covariance, growing the ridge
/// if a block is not positive definite.
struct Entropies<'a> {
    s: &'a CMatrix,
    layout: Layout,
    ridged: bool,
}

impl Entropies<'_> {
    fn ld(&mut self, sigs: &[Sig]) -> Result<f64> {
        let idx = self.layout.indices(sigs);
        let mut ridge = SAMPLE_RIDGE;
        for step in 0..MAX_RIDGE_STEPS {
            if let Some(v) = ln_det_sub(self.s, &idx, ridge) {
                if step > 0 {
                    self.ridged = true;
                }
                return Ok(v);
            }
            ridge *= RIDGE_GROWTH;
        }
        Err(Error::Domain("sample covariance is not positive definite at any ridge".into()))
    }

    /// `h(target | given)` up to constants that cancel, in nats.
    fn h(&mut self, target: &[Sig], given: &[Sig]) -> Result<f64> {
        let mut all = given.to_vec();
        all.extend_from_slice(target);
        Ok(self.ld(&all)? - self.ld(given)?)
    }

    fn expr(&mut self, which: MiExpr) -> Result<f64> {
        use Sig::*;
        let nats = match which {
            MiExpr::RelayLinkSc => self.h(&[Y1], &[X2])? - self.h(&[Y1], &[U, X2])?,
            MiExpr::Mac => self.h(&[Y], &[])? - self.h(&[Y], &[U, X2])?,
            MiExpr::DirectGiven => self.h(&[Y], &[U, X2])? - self.h(&[Y], &[U, X2, V])?,
            MiExpr::VUnconditional => self.h(&[Y], &[])? - self.h(&[Y], &[V])?,
            MiExpr::MacGivenV => self.h(&[Y], &[V])? - self.h(&[Y], &[U, X2, V])?,
            MiExpr::RelayLinkDpc => {
                let link = self.h(&[Y1], &[X2])? - self.h(&[Y1], &[Ud, X2])?;
                let leak = self.h(&[Ud], &[X2])? - self.h(&[Ud], &[X2, V])?;
                link - leak
            }
        };
        Ok(nats_to_bits(nats))
    }
}

/// Second-moment sums of the stacked signal vector, one per batch.
fn sample_moments(ch: &RelayChannel, p: &CovarianceProfile, samples: usize, seed: u64) -> Result<(Layout, Vec<CMatrix>)> {
    let layout = Layout {
        mr: ch.mr(),
        mt: ch.mt(),
        nr: ch.nr(),
        nt: ch.nt(),
    };
    let (mt, mr) = (layout.mt, layout.mr);
    let d = layout.dim();

    let joint = psd_factor(&HermitianPsd::from_hermitian(p.joint()));
    let joint = Dense::from(&joint);
    let fv = Dense::from(&psd_factor(&p.sigma_v));
    let g = Dense::from(&costa_matrix(ch, &p.sigma_x1p_given_x2)?);
    let a1 = Dense::from(&(&ch.h1 * c(ch.gamma1.sqrt())));
    let a2 = Dense::from(&(&ch.h2 * c(ch.gamma2.sqrt())));
    let a3 = Dense::from(&(&ch.h3 * c(ch.gamma3.sqrt())));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let cn = move |rng: &mut ChaCha8Rng| {
        C64::new(rng.sample::<f64, _>(StandardNormal) * half, rng.sample::<f64, _>(StandardNormal) * half)
    };

    let batch_len = samples / BATCHES;
    let mut out = Vec::with_capacity(BATCHES);
    let mut n_joint = vec![C64::new(0.0, 0.0); mt + mr];
    let mut n_v = vec![C64::new(0.0, 0.0); mt];
    let mut ux2 = vec![C64::new(0.0, 0.0); mt + mr];
    let mut x1 = vec![C64::new(0.0, 0.0); mt];
    let mut w = vec![C64::new(0.0, 0.0); d];
    let (r_x2, r_u, r_v, r_ud, r_y1, r_y) = (
        layout.range(Sig::X2),
        layout.range(Sig::U),
        layout.range(Sig::V),
        layout.range(Sig::Ud),
        layout.range(Sig::Y1),
        layout.range(Sig::Y),
    );

    for b in 0..BATCHES {
        let n = if b + 1 == BATCHES { samples - batch_len * (BATCHES - 1) } else { batch_len };
        // Upper triangle, row-major.
        let mut acc = vec![C64::new(0.0, 0.0); d * d];
        for _ in 0..n {
            for z in n_joint.iter_mut().chain(n_v.iter_mut()) {
                *z = cn(&mut rng);
            }
            w.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            ux2.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            joint.mul_add(&n_joint, &mut ux2);
            w[r_u.clone()].copy_from_slice(&ux2[..mt]);
            w[r_x2.clone()].copy_from_slice(&ux2[mt..]);
            fv.mul_add(&n_v, &mut w[r_v.clone()]);
            let (u, v) = (w[r_u.clone()].to_vec(), w[r_v.clone()].to_vec());
            for i in 0..mt {
                x1[i] = u[i] + v[i];
            }
            w[r_ud.clone()].copy_from_slice(&u);
            g.mul_add(&v, &mut w[r_ud.clone()]);
            // y1 and y sit at the end of the vector.
            for z in w[r_y1.start..].iter_mut() {
                *z = cn(&mut rng);
            }
            a1.mul_add(&x1, &mut w[r_y1.clone()]);
            a2.mul_add(&x1, &mut w[r_y.clone()]);
            let x2 = w[r_x2.clone()].to_vec();
            a3.mul_add(&x2, &mut w[r_y.clone()]);
            for i in 0..d {
                let wi = w[i];
                let row = &mut acc[i * d..(i + 1) * d];
                for j in i..d {
                    row[j] += wi * w[j].conj();
                }
            }
        }
        let inv = 1.0 / n as f64;
        out.push(CMatrix::from_fn(d, d, |i, j| {
            if i <= j {
                acc[i * d + j] * inv
            } else {
                acc[j * d + i].conj() * inv
            }
        }));
    }
    Ok((layout, out))
}

/// Estimates every expression from one set of samples.
pub fn estimate_all(
    ch: &RelayChannel,
    p: &CovarianceProfile,
    samples: usize,
    seed: u64,
) -> Result<Vec<(MiExpr, McEstimate)>> {
    if samples < MIN_SAMPLES {
        return Err(Error::Argument(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    p.validate(ch.mt(), ch.mr())?;
    let (layout, batches) = sample_moments(ch, p, samples, seed)?;
    let batch_len = samples / BATCHES;
    let mut pooled = CMatrix::zeros(layout.dim(), layout.dim());
    for (b, m) in batches.iter().enumerate() {
        let n = if b + 1 == BATCHES { samples - batch_len * (BATCHES - 1) } else { batch_len };
        pooled += m * c(n as f64 / samples as f64);
    }

    MiExpr::ALL
        .into_iter()
        .map(|which| {
            let mut ent = Entropies { s: &pooled, layout, ridged: false };
            let value = ent.expr(which)?;
            let mut ridged = ent.ridged;
            let mut per_batch = Vec::with_capacity(BATCHES);
            for m in &batches {
                let mut e = Entropies { s: m, layout, ridged: false };
                per_batch.push(e.expr(which)?);
                ridged |= e.ridged;
            }
            let mean = per_batch.iter().sum::<f64>() / BATCHES as f64;
            let var = per_batch.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
            let std_error = (var / BATCHES as f64).sqrt().max(SE_FLOOR);
            Ok((
                which,
                McEstimate {
                    value,
                    std_error,
                    samples,
                    seed,
                    ridged,
                },
            ))
        })
        .collect()
}

/// Monte Carlo estimate of one expression for profile `p`.
pub fn estimate_mi(
    ch: &RelayChannel,
    p: &CovarianceProfile,
    which: MiExpr,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let all = estimate_all(ch, p, samples, seed)?;
    Ok(all.into_iter().find(|(e, _)| *e == which).map(|(_, est)| est).expect("every expression is estimated"))
}

/// Agreement counts of the Monte Carlo check over random instances.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub profiles: usize,
    pub samples: usize,
    /// Per expression: instances whose closed form lies within three
    /// standard errors of the estimate.
    pub agree: Vec<(MiExpr, usize)>,
    /// Largest `|closed − estimate| / std_error` per expression.
    pub worst_z: Vec<(MiExpr, f64)>,
}

impl VerifyReport {
    /// True when every expression agrees on at least `fraction` of instances.
    pub fn passed(&self, fraction: f64) -> bool {
        self.agree
            .iter()
            .all(|(_, n)| *n as f64 >= fraction * self.profiles as f64)
    }
}

/// Random channel and feasible profile with at most `max_antennas` antennas
/// per terminal and complex gains.
pub fn random_instance<R: Rng>(rng: &mut R, max_antennas: usize) -> Result<(RelayChannel, CovarianceProfile)> {
    let max = max_antennas.max(1);
    let mut dim = || rng.random_range(1..=max);
    let (mt, mr, nt, nr) = (dim(), dim(), dim(), dim());
    let mut cm = |r: usize, c: usize| {
        CMatrix::from_fn(r, c, |_, _| {
            C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        })
    };
    let (h1, h2, h3) = (cm(nr, mt), cm(nt, mt), cm(nt, mr));
    let mut g = || rng.random_range(0.2..2.0);
    let ch = RelayChannel::new(h1, h2, h3, g(), g(), g())?;
    let layout = crate::optimize::ProfileLayout::for_channel(&ch);
    let x: Vec<f64> = (0..layout.dim()).map(|_| rng.sample(StandardNormal)).collect();
    let p = layout.decode(&x)?;
    Ok((ch, p))
}

/// Compares every closed form with its Monte Carlo estimate on `profiles`
/// random instances, running up to `jobs` instances at once.
pub fn verify_suite(profiles: usize, samples: usize, seed: u64, max_antennas: usize, jobs: usize) -> Result<VerifyReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Vec<(MiExpr, f64)>> = pool.install(|| {
        (0..profiles)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64 + 1);
                let (ch, p) = random_instance(&mut rng, max_antennas)?;
                estimate_all(&ch, &p, samples, seed ^ (i as u64))?
                    .into_iter()
                    .map(|(e, est)| Ok((e, (e.closed_form(&ch, &p)? - est.value).abs() / est.std_error)))
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let agree = MiExpr::ALL
        .iter()
        .map(|&e| {
            let n = results.iter().flatten().filter(|(x, z)| *x == e && *z <= 3.0).count();
            (e, n)
        })
        .collect();
    let worst_z = MiExpr::ALL
        .iter()
        .map(|&e| {
            let z = results
                .iter()
                .flatten()
                .filter(|(x, _)| *x == e)
                .map(|(_, z)| *z)
                .fold(0.0, f64::max);
            (e, z)
        })
        .collect();
    Ok(VerifyReport {
        profiles,
        samples,
        agree,
        worst_z,
    })
}

fn scalar_gain(m: &CMatrix) -> f64 {
    m[(0, 0)].norm()
}

/// Best rate of `strategy` on a single-antenna channel over a grid of
/// `u` power, `v` power, relay power and `u`–`x2` correlation, each at step
/// `resolution` (powers on `[0, 1]` with `p_u + p_v ≤ 1`, correlation on
/// `[−1, 1]`).
pub fn grid_search_scalar(ch: &RelayChannel, strategy: Strategy, resolution: f64) -> Result<f64> {
    let [u_first, v_first] = grid_search_orders(ch, strategy.scheme(), resolution)?;
    Ok(match strategy.order() {
        DecodeOrder::UFirst => u_first,
        DecodeOrder::VFirst => v_first,
    })
}

/// [`grid_search_scalar`] for both decode orders of `scheme`, taking the better.
pub fn grid_search_scheme(ch: &RelayChannel, scheme: Scheme, resolution: f64) -> Result<f64> {
    let [a, b] = grid_search_orders(ch, scheme, resolution)?;
    Ok(a.max(b))
}

fn grid_search_orders(ch: &RelayChannel, scheme: Scheme, resolution: f64) -> Result<[f64; 2]> {
    if (ch.mt(), ch.mr(), ch.nt(), ch.nr()) != (1, 1, 1, 1) {
        return Err(Error::Argument("grid search needs a single-antenna channel".into()));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::Argument(format!("resolution {resolution} outside (0, 1]")));
    }
    let steps = (1.0 / resolution).round() as usize;
    let g1 = ch.gamma1 * scalar_gain(&ch.h1).powi(2);
    let g2 = ch.gamma2 * scalar_gain(&ch.h2).powi(2);
    let g3 = ch.gamma3 * scalar_gain(&ch.h3).powi(2);
    // With a free correlation phase only |h2 h3| matters.
    let coh = 2.0 * (g2 * g3).sqrt();
    let level = |k: usize| (k as f64 / steps as f64).min(1.0);
    let rhos: Vec<f64> = (0..=2 * steps).map(|k| -1.0 + k as f64 / steps as f64).collect();
    let dpc = scheme == Scheme::DirtyPaper;

    // Rates are tracked as arguments of log2; the maximum commutes with it.
    let best = (0..=steps)
        .into_par_iter()
        .map(|iu| {
            let pu = level(iu);
            let mut best = [1.0f64, 1.0f64];
            for iv in 0..=steps - iu {
                let pv = level(iv);
                let sv = 1.0 + g2 * pv;
                let relay_noise = 1.0 + g1 * pv;
                for iq in 0..=steps {
                    let q = level(iq);
                    let base_t = g2 * pu + g3 * q;
                    let cross = coh * (pu * q).sqrt();
                    for &rho in &rhos {
                        let cond = pu * (1.0 - rho * rho);
                        let relay = if dpc {
                            1.0 + g1 * cond
                        } else {
                            (relay_noise + g1 * cond) / relay_noise
                        };
                        let t = (base_t + rho * cross).max(0.0);
                        let all = sv + t;
                        // u first: min(relay, all / sv) · sv.
                        let a = (relay * sv).min(all);
                        // v first: min(relay, 1 + t) · all / (1 + t).
                        let b = relay.min(1.0 + t) * all / (1.0 + t);
                        best[0] = best[0].max(a);
                        best[1] = best[1].max(b);
                    }
                }
            }
            best
        })
        .reduce(|| [1.0, 1.0], |x, y| [x[0].max(y[0]), x[1].max(y[1])]);
    Ok([best[0].log2(), best[1].log2()])
}
