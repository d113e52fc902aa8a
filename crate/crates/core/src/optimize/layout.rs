//! Maps unconstrained real vectors onto feasible covariances.
//!
//! A covariance is carried as a lower-triangular factor `L` (real diagonal,
//! real or complex off-diagonal entries), so `L L†` is PSD for every vector.
//! The cooperative block is factored in the order `(x2, u)`: with
//! `L = [L11 0; L21 L22]` the conditional covariance of `u` given `x2` is
//! exactly `L22 L22†`, with no inversion even when `Σ_x2` is singular.
//! Power budgets are met by congruence scaling, which keeps the joint PSD.

use crate::bounds::LowerBoundTerms;
use crate::channel::RelayChannel;
use crate::error::{Error, Result};
use crate::matrix::{c, psd_factor, CMatrix, HermitianPsd, C64};
use crate::rates::{CovarianceProfile, Strategy};

use super::ParamVector;

fn tri_len(n: usize, complex: bool) -> usize {
    if complex {
        n * n
    } else {
        n * (n + 1) / 2
    }
}

fn read_tri(x: &[f64], n: usize, complex: bool) -> CMatrix {
    let mut l = CMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..=i {
            if i == j || !complex {
                l[(i, j)] = c(x[k]);
                k += 1;
            } else {
                l[(i, j)] = C64::new(x[k], x[k + 1]);
                k += 2;
            }
        }
    }
    l
}

fn write_tri(l: &CMatrix, complex: bool, out: &mut Vec<f64>) {
    let n = l.nrows();
    for i in 0..n {
        for j in 0..=i {
            let z = l[(i, j)];
            if i == j || !complex {
                out.push(z.re);
            } else {
                out.push(z.re);
                out.push(z.im);
            }
        }
    }
}

fn gram(l: &CMatrix) -> CMatrix {
    let m = l * l.adjoint();
    let adj = m.adjoint();
    (m + adj).scale(0.5)
}

/// Parameterization of a message-splitting profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileLayout {
    pub mt: usize,
    pub mr: usize,
    /// Complex off-diagonal factor entries; real channels only need real ones.
    pub complex: bool,
}

impl ProfileLayout {
    pub fn for_channel(ch: &RelayChannel) -> Self {
        Self {
            mt: ch.mt(),
            mr: ch.mr(),
            complex: !ch.is_real(),
        }
    }

    pub fn dim(&self) -> usize {
        tri_len(self.mt + self.mr, self.complex) + tri_len(self.mt, self.complex)
    }

    pub fn decode(&self, x: &[f64]) -> Result<CovarianceProfile> {
        if x.len() != self.dim() {
            return Err(Error::Argument(format!(
                "parameter vector has {} entries, layout needs {}",
                x.len(),
                self.dim()
            )));
        }
        let (mt, mr) = (self.mt, self.mr);
        let n = mt + mr;
        let split = tri_len(n, self.complex);
        let l = read_tri(&x[..split], n, self.complex);
        let fv = read_tri(&x[split..], mt, self.complex);

        let joint = gram(&l);
        let mut sigma_x2 = joint.view((0, 0), (mr, mr)).into_owned();
        let mut sigma_u = joint.view((mr, mr), (mt, mt)).into_owned();
        let mut cross = joint.view((mr, 0), (mt, mr)).into_owned();
        let mut cond = gram(&l.view((mr, mr), (mt, mt)).into_owned());
        let mut sigma_v = gram(&fv);

        let tr = |m: &CMatrix| m.diagonal().iter().map(|z| z.re).sum::<f64>();
        let tx = tr(&sigma_u) + tr(&sigma_v);
        let rx = tr(&sigma_x2);
        let st = if tx > mt as f64 { mt as f64 / tx } else { 1.0 };
        let sr = if rx > mr as f64 { mr as f64 / rx } else { 1.0 };
        if st != 1.0 {
            sigma_u = sigma_u.scale(st);
            sigma_v = sigma_v.scale(st);
            cond = cond.scale(st);
        }
        if sr != 1.0 {
            sigma_x2 = sigma_x2.scale(sr);
        }
        if st != 1.0 || sr != 1.0 {
            cross = cross.scale((st * sr).sqrt());
        }
        Ok(CovarianceProfile::from_parts(
            HermitianPsd::from_hermitian(sigma_u),
            HermitianPsd::from_hermitian(sigma_v),
            HermitianPsd::from_hermitian(sigma_x2),
            cross,
            HermitianPsd::from_hermitian(cond),
        ))
    }

    /// Inverse of [`decode`](Self::decode) for a profile within budget.
    /// Imaginary parts are dropped for real layouts.
    pub fn encode(&self, p: &CovarianceProfile) -> Result<ParamVector> {
        if p.mt() != self.mt || p.mr() != self.mr {
            return Err(Error::Argument("profile does not match layout".into()));
        }
        let (mt, mr) = (self.mt, self.mr);
        let mut joint = CMatrix::zeros(mt + mr, mt + mr);
        joint.view_mut((0, 0), (mr, mr)).copy_from(p.sigma_x2.as_matrix());
        joint.view_mut((mr, mr), (mt, mt)).copy_from(p.sigma_u.as_matrix());
        joint.view_mut((mr, 0), (mt, mr)).copy_from(&p.cross_ux2);
        joint.view_mut((0, mr), (mr, mt)).copy_from(&p.cross_ux2.adjoint());
        let l = psd_factor(&HermitianPsd::from_hermitian(joint));
        let fv = psd_factor(&p.sigma_v);
        let mut out = Vec::with_capacity(self.dim());
        write_tri(&l, self.complex, &mut out);
        write_tri(&fv, self.complex, &mut out);
        Ok(ParamVector(out))
    }
}

/// Unflattens `x` into a feasible profile for `strategy` on `ch`.
///
/// Under dirty-paper coding the `u` block is read as the `x1'` component; the
/// layout is the same for every strategy.
pub fn decode_profile(x: &ParamVector, ch: &RelayChannel, _strategy: Strategy) -> Result<CovarianceProfile> {
    ProfileLayout::for_channel(ch).decode(x.as_slice())
}

pub fn encode_profile(p: &CovarianceProfile, ch: &RelayChannel) -> Result<ParamVector> {
    ProfileLayout::for_channel(ch).encode(p)
}

/// The two degenerate splits: everything on the direct link (`v = x1`,
/// `u = 0`), and everything cooperative (`u = x1`, `v = 0`, independent relay).
pub(crate) fn degenerate_profiles(ch: &RelayChannel, lb: &LowerBoundTerms) -> [CovarianceProfile; 2] {
    let (mt, mr) = (ch.mt(), ch.mr());
    let direct = CovarianceProfile::from_parts(
        HermitianPsd::zeros(mt),
        lb.sigma11_direct.clone(),
        HermitianPsd::zeros(mr),
        CMatrix::zeros(mt, mr),
        HermitianPsd::zeros(mt),
    );
    let cooperative = CovarianceProfile::from_parts(
        lb.sigma11_star.clone(),
        HermitianPsd::zeros(mt),
        lb.sigma22_star.clone(),
        CMatrix::zeros(mt, mr),
        lb.sigma11_star.clone(),
    );
    [direct, cooperative]
}

/// Parameterization of the cut-set bound's `(ρ, Σ11, Σ22)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpperLayout {
    pub mt: usize,
    pub mr: usize,
    pub complex: bool,
}

/// Decoded cut-set variables as raw matrices.
pub(crate) struct UpperPoint {
    pub rho: f64,
    pub sigma11: CMatrix,
    pub sigma22: CMatrix,
}

impl UpperLayout {
    pub fn for_channel(ch: &RelayChannel) -> Self {
        Self {
            mt: ch.mt(),
            mr: ch.mr(),
            complex: !ch.is_real(),
        }
    }

    pub fn dim(&self) -> usize {
        1 + tri_len(self.mt, self.complex) + tri_len(self.mr, self.complex)
    }

    /// `ρ` is the first entry clamped to `[0, 1]`; each covariance is scaled
    /// down to its trace budget when over it.
    pub(crate) fn decode(&self, x: &[f64]) -> UpperPoint {
        let rho = x[0].clamp(0.0, 1.0);
        let a = 1 + tri_len(self.mt, self.complex);
        let project = |l: CMatrix, budget: f64| {
            let s = gram(&l);
            let tr: f64 = s.diagonal().iter().map(|z| z.re).sum();
            if tr > budget {
                s.scale(budget / tr)
            } else {
                s
            }
        };
        UpperPoint {
            rho,
            sigma11: project(read_tri(&x[1..a], self.mt, self.complex), self.mt as f64),
            sigma22: project(read_tri(&x[a..], self.mr, self.complex), self.mr as f64),
        }
    }

    pub fn decode_vars(&self, x: &ParamVector) -> Result<crate::bounds::UpperBoundVars> {
        if x.dim() != self.dim() {
            return Err(Error::Argument(format!(
                "parameter vector has {} entries, layout needs {}",
                x.dim(),
                self.dim()
            )));
        }
        let p = self.decode(x.as_slice());
        Ok(crate::bounds::UpperBoundVars {
            rho: p.rho,
            sigma11: HermitianPsd::from_hermitian(p.sigma11),
            sigma22: HermitianPsd::from_hermitian(p.sigma22),
        })
    }

    pub fn encode(&self, rho: f64, sigma11: &HermitianPsd, sigma22: &HermitianPsd) -> ParamVector {
        let mut out = vec![rho];
        write_tri(&psd_factor(sigma11), self.complex, &mut out);
        write_tri(&psd_factor(sigma22), self.complex, &mut out);
        ParamVector(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_angle_channel, Topology, TopologyKind};
    use crate::rates::{achievable_rate, test_util::random_channel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_vector_is_silent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = random_channel(&mut rng, 2, 2, 2, 2);
        let layout = ProfileLayout::for_channel(&ch);
        let p = layout.decode(&vec![0.0; layout.dim()]).unwrap();
        assert!(p.sigma_u.is_zero() && p.sigma_v.is_zero() && p.sigma_x2.is_zero());
        for s in Strategy::ALL {
            assert_eq!(achievable_rate(&ch, &p, s).unwrap().r_total, 0.0);
        }
    }

    #[test]
    fn identity_factor_fills_budgets() {
        let ch = make_angle_channel(0.4, 10.0, Topology::new(TopologyKind::Equidistant, 0.5).unwrap()).unwrap();
        let layout = ProfileLayout::for_channel(&ch);
        assert!(!layout.complex);
        // Identity joint factor (3x3) and identity v factor (2x2), row-major lower triangle.
        let x = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let p = layout.decode(&x).unwrap();
        assert!((p.sigma_u.trace() + p.sigma_v.trace() - 2.0).abs() < 1e-12);
        assert!((p.sigma_x2.trace() - 1.0).abs() < 1e-12);
        p.validate(2, 1).unwrap();
    }

    #[test]
    fn every_vector_decodes_to_a_feasible_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..10_000 {
            let (mt, mr) = (1 + trial % 3, 1 + (trial / 3) % 2);
            let complex = trial % 2 == 0;
            let layout = ProfileLayout { mt, mr, complex };
            let scale: f64 = 10f64.powf(rng.random_range(-3.0..2.0));
            let x: Vec<f64> = (0..layout.dim())
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let p = layout.decode(&x).unwrap();
            p.validate(mt, mr).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
        }
    }

    #[test]
    fn conditional_block_matches_schur_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let layout = ProfileLayout { mt: 2, mr: 2, complex: true };
            let x: Vec<f64> = (0..layout.dim()).map(|_| rng.sample(StandardNormal)).collect();
            let p = layout.decode(&x).unwrap();
            let q = CovarianceProfile::new(
                p.sigma_u.clone(),
                p.sigma_v.clone(),
                p.sigma_x2.clone(),
                p.cross_ux2.clone(),
            )
            .unwrap();
            let err = (p.sigma_x1p_given_x2.as_matrix() - q.sigma_x1p_given_x2.as_matrix()).norm();
            assert!(err < 1e-8, "{err}");
        }
    }

    #[test]
    fn encode_round_trips_feasible_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for complex in [false, true] {
            let layout = ProfileLayout { mt: 2, mr: 1, complex };
            for _ in 0..100 {
                let x: Vec<f64> = (0..layout.dim()).map(|_| rng.sample(StandardNormal)).collect();
                let p = layout.decode(&x).unwrap();
                let back = layout.decode(layout.encode(&p).unwrap().as_slice()).unwrap();
                assert!((back.joint() - p.joint()).norm() < 1e-9);
                assert!((back.sigma_v.as_matrix() - p.sigma_v.as_matrix()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn upper_layout_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = random_channel(&mut rng, 3, 2, 1, 1);
        let layout = UpperLayout::for_channel(&ch);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..layout.dim()).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let v = layout.decode_vars(&ParamVector(x)).unwrap();
            v.validate(&ch).unwrap();
        }
    }
}
