//! Standard and Lorentz-boosted semitroughs.
//!
//! The standard semitrough is z(x) = sqrt(f_k(x1)^2 + |xbar|^2) with Gauss
//! map image the open half ball {xi in B1 : xi_1 > 0}. Boosting by
//!
//!   x1' = (x1 - a x_{n+1}) / sqrt(1 - a^2),  x_{n+1}' = (x_{n+1} - a x1) / sqrt(1 - a^2)
//!
//! produces the semitrough whose Gauss image is the hull of the cap
//! {xi_1 > -a}; a cap of geodesic radius delta about e1 corresponds to
//! a = -cos(delta). A rotation carries e1 to the cap center.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{dot, norm};
use crate::profile::ProfileSolution;
use crate::sphere::{
    enclosing_ball, geodesic_distance, inscribed_balls, inscribed_radius, Direction, GeodesicCap,
    LightlikeSet,
};

/// Angular tolerance for classifying the perpendicular direction in limit
/// predictions; the predicted limit is discontinuous there.
pub const PERP_TOL: f64 = 1e-9;

/// Standard semitrough value and gradient at x.
pub fn eval_standard(profile: &ProfileSolution, x: &[f64]) -> (f64, Vec<f64>) {
    let (f, fp, _) = profile.eval(x[0]);
    let xbar2: f64 = x[1..].iter().map(|v| v * v).sum();
    let z = (f * f + xbar2).sqrt();
    let mut grad = Vec::with_capacity(x.len());
    grad.push(f * fp / z);
    for v in &x[1..] {
        grad.push(v / z);
    }
    (z, grad)
}

/// A boosted semitrough: profile + Gauss-image cap.
#[derive(Clone)]
pub struct Semitrough {
    pub profile: Arc<ProfileSolution>,
    pub cap: GeodesicCap,
    /// Boost parameter: -cos(cap radius).
    pub alpha: f64,
    /// Householder reflection taking the cap center to e1 (an involution).
    reflect: Option<Vec<f64>>, // unit vector v; H = I - 2 v v^T
}

impl Semitrough {
    pub fn new(profile: Arc<ProfileSolution>, cap: GeodesicCap) -> Result<Self> {
        let alpha = -cap.radius.cos();
        if alpha.abs() >= 1.0 {
            return Err(Error::domain("Semitrough: |alpha| must be < 1"));
        }
        let n = cap.dim();
        let c = cap.center.coords();
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let d = geodesic_distance(&cap.center, &Direction::axis(n, 0))?;
        let reflect = if d < 1e-15 {
            None
        } else {
            let mut v: Vec<f64> = c.iter().zip(&e1).map(|(a, b)| a - b).collect();
            let nv = norm(&v);
            for w in v.iter_mut() {
                *w /= nv;
            }
            Some(v)
        };
        Ok(Semitrough {
            profile,
            cap,
            alpha,
            reflect,
        })
    }

    /// Standard semitrough over the half sphere about e1.
    pub fn standard(profile: Arc<ProfileSolution>) -> Result<Self> {
        let n = 2.max(profile.params.n.min(4));
        let cap = GeodesicCap::new(Direction::axis(n, 0), std::f64::consts::FRAC_PI_2)?;
        Semitrough::new(profile, cap)
    }

    fn to_frame(&self, x: &[f64]) -> Vec<f64> {
        match &self.reflect {
            None => x.to_vec(),
            Some(v) => {
                let s = 2.0 * dot(v, x);
                x.iter().zip(v).map(|(xi, vi)| xi - s * vi).collect()
            }
        }
    }

    // the reflection is an involution, so frame <-> world use the same map
    fn from_frame(&self, x: &[f64]) -> Vec<f64> {
        self.to_frame(x)
    }

    /// Value and gradient at a world point.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let xf = self.to_frame(x);
        let (val, grad_f) = self.eval_frame(&xf)?;
        Ok((val, self.from_frame(&grad_f)))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let xf = self.to_frame(x);
        Ok(self.eval_frame(&xf)?.0)
    }

    /// Evaluate in the cap frame (center at e1): solve the implicit boost
    /// coordinate equation for x1, then apply the boosted-gradient formulas.
    fn eval_frame(&self, xp: &[f64]) -> Result<(f64, Vec<f64>)> {
        let a = self.alpha;
        let s = (1.0 - a * a).sqrt();
        let x1p = xp[0];
        let xbar = &xp[1..];
        let xbar2: f64 = xbar.iter().map(|v| v * v).sum();
        if a == 0.0 {
            let (f, fp, _) = self.profile.eval(x1p);
            let z = (f * f + xbar2).sqrt();
            let mut grad = Vec::with_capacity(xp.len());
            grad.push(f * fp / z);
            for v in xbar {
                grad.push(v / z);
            }
            return Ok((z, grad));
        }
        // residual of the coordinate equation; derivative (1 - a z_1)/s > 0
        let fdf = |x1: f64| -> (f64, f64) {
            let (f, fp, _) = self.profile.eval(x1);
            let z = (f * f + xbar2).sqrt();
            let z1 = f * fp / z;
            ((x1 - a * z) / s - x1p, (1.0 - a * z1) / s)
        };
        // initial guess from the asymptotic inverse, bracket by expansion
        let guess = s * x1p + a * (1.0 + s.abs() * x1p.abs().max(1.0) + xbar2.sqrt());
        let step = 1.0 + 0.5 * guess.abs();
        let (lo, hi) = crate::numerics::expand_bracket(|x1| fdf(x1).0, guess, step)?;
        let x1 = crate::numerics::newton_bracketed(fdf, lo, hi, 1e-13, 200)?;
        let (f, fp, _) = self.profile.eval(x1);
        let z = (f * f + xbar2).sqrt();
        let z1 = f * fp / z;
        let val = (z - a * x1) / s;
        let denom = 1.0 - a * z1;
        let mut grad = Vec::with_capacity(xp.len());
        grad.push((z1 - a) / denom);
        for v in xbar {
            grad.push(s * (v / z) / denom);
        }
        Ok((val, grad))
    }

    /// Support function of the Gauss-image cap.
    pub fn support(&self, x: &[f64]) -> f64 {
        self.cap.support(x)
    }

    /// Measured gap z - V at radius r in direction theta, and the predicted
    /// r -> infinity limit: sqrt(1 - alpha^2) l_k at the perpendicular
    /// non-member direction (the cap-center antipode), 0 elsewhere.
    pub fn limit_gap(&self, theta: &Direction, r: f64) -> Result<(f64, f64)> {
        let x: Vec<f64> = theta.coords().iter().map(|v| v * r).collect();
        let measured = self.value(&x)? - self.support(&x);
        let d = geodesic_distance(theta, &self.cap.center.antipode())?;
        let predicted = if d <= PERP_TOL {
            (1.0 - self.alpha * self.alpha).sqrt() * self.profile.params.l_k
        } else {
            0.0
        };
        Ok((measured, predicted))
    }
}

/// Drop caps contained in another cap of the family: by the comparison
/// theorem the semitrough of a larger Gauss-image cap dominates pointwise,
/// so dominated members never attain the sup.
fn prune_dominated(mut caps: Vec<GeodesicCap>) -> Vec<GeodesicCap> {
    let mut keep = vec![true; caps.len()];
    for i in 0..caps.len() {
        for j in 0..caps.len() {
            if i != j && keep[i] && keep[j] {
                let d = geodesic_distance(&caps[i].center, &caps[j].center).unwrap();
                let i_in_j = d + caps[i].radius <= caps[j].radius + 1e-12;
                if i_in_j && (caps[i].radius < caps[j].radius - 1e-12 || i > j) {
                    keep[i] = false;
                }
            }
        }
    }
    let mut idx = 0;
    caps.retain(|_| {
        idx += 1;
        keep[idx - 1]
    });
    caps
}

/// Keep only minimal elements (for enclosing families the smallest caps
/// dominate the inf).
fn prune_enclosing(mut caps: Vec<GeodesicCap>) -> Vec<GeodesicCap> {
    let mut keep = vec![true; caps.len()];
    for i in 0..caps.len() {
        for j in 0..caps.len() {
            if i != j && keep[i] && keep[j] {
                let d = geodesic_distance(&caps[i].center, &caps[j].center).unwrap();
                let j_in_i = d + caps[j].radius <= caps[i].radius + 1e-12;
                if j_in_i && (caps[j].radius < caps[i].radius - 1e-12 || i > j) {
                    keep[i] = false;
                }
            }
        }
    }
    let mut idx = 0;
    caps.retain(|_| {
        idx += 1;
        keep[idx - 1]
    });
    caps
}

/// Settings for the enumerated ball families.
#[derive(Debug, Clone)]
pub struct FamilySettings {
    pub budget: usize,
    pub refine: bool,
    pub refine_rounds: usize,
}

impl Default for FamilySettings {
    fn default() -> Self {
        FamilySettings {
            budget: 256,
            refine: true,
            refine_rounds: 2,
        }
    }
}

/// The inscribed-ball family realizing the lower envelope
/// sup over {cap in F, radius >= delta0} of z_cap.
pub struct SupFamily {
    pub f_set: LightlikeSet,
    pub members: Vec<Semitrough>,
    profile: Arc<ProfileSolution>,
    settings: FamilySettings,
}

impl SupFamily {
    pub fn new(
        f_set: LightlikeSet,
        profile: Arc<ProfileSolution>,
        settings: FamilySettings,
    ) -> Result<Self> {
        let caps = prune_dominated(inscribed_balls(&f_set, settings.budget)?);
        let members = caps
            .into_iter()
            .map(|c| Semitrough::new(profile.clone(), c))
            .collect::<Result<Vec<_>>>()?;
        Ok(SupFamily {
            f_set,
            members,
            profile,
            settings,
        })
    }

    pub fn support(&self, x: &[f64]) -> f64 {
        self.f_set.support(x)
    }

    /// sup over the family of z_cap(x), with optional coordinate-search
    /// refinement over (center, radius).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if self.members.is_empty() {
            return Err(Error::domain("family_sup: empty family"));
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_cap: Option<GeodesicCap> = None;
        for m in &self.members {
            let v = m.value(x)?;
            if v > best {
                best = v;
                best_cap = Some(m.cap.clone());
            }
        }
        if !self.settings.refine {
            return Ok(best);
        }
        let mut cap = best_cap.unwrap();
        let n = self.f_set.dim();
        let mut step: f64 = 0.2;
        for _ in 0..self.settings.refine_rounds {
            let mut improved = false;
            for axis in 0..n {
                for sgn in [-1.0, 1.0] {
                    let mut c = cap.center.coords().to_vec();
                    c[axis] += sgn * step;
                    if let Ok(center) = Direction::normalized(&c) {
                        if let Some(r) = inscribed_radius(&self.f_set, &center) {
                            let cand = GeodesicCap::new(center, r)?;
                            let m = Semitrough::new(self.profile.clone(), cand.clone())?;
                            let v = m.value(x)?;
                            if v > best {
                                best = v;
                                cap = cand;
                                improved = true;
                            }
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok(best)
    }
}

/// The enclosing-ball family realizing the upper envelope
/// inf over {cap containing F, radius <= pi - delta0} of z_cap.
pub struct InfFamily {
    pub f_set: LightlikeSet,
    pub members: Vec<Semitrough>,
    profile: Arc<ProfileSolution>,
    settings: FamilySettings,
}

impl InfFamily {
    pub fn new(
        f_set: LightlikeSet,
        profile: Arc<ProfileSolution>,
        settings: FamilySettings,
    ) -> Result<Self> {
        let n = f_set.dim();
        let mut caps: Vec<GeodesicCap> = Vec::new();
        // defining cap centers first, then a lattice of feasible centers
        for c in &f_set.caps {
            if let Ok(b) = enclosing_ball(&f_set, &c.center) {
                caps.push(b);
            }
        }
        for p in crate::numerics::sphere_lattice(n, settings.budget) {
            let center = Direction::new(p)?;
            if let Ok(b) = enclosing_ball(&f_set, &center) {
                caps.push(b);
            }
        }
        if caps.is_empty() {
            return Err(Error::infeasible(
                "family_inf: no feasible enclosing ball (delta0 too large)",
            ));
        }
        let caps = prune_enclosing(caps);
        let members = caps
            .into_iter()
            .map(|c| Semitrough::new(profile.clone(), c))
            .collect::<Result<Vec<_>>>()?;
        Ok(InfFamily {
            f_set,
            members,
            profile,
            settings,
        })
    }

    pub fn support(&self, x: &[f64]) -> f64 {
        self.f_set.support(x)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut best = f64::INFINITY;
        let mut best_center: Option<Direction> = None;
        for m in &self.members {
            let v = m.value(x)?;
            if v < best {
                best = v;
                best_center = Some(m.cap.center.clone());
            }
        }
        if !self.settings.refine {
            return Ok(best);
        }
        let mut center = best_center.unwrap();
        let n = self.f_set.dim();
        let mut step: f64 = 0.2;
        for _ in 0..self.settings.refine_rounds {
            let mut improved = false;
            for axis in 0..n {
                for sgn in [-1.0, 1.0] {
                    let mut c = center.coords().to_vec();
                    c[axis] += sgn * step;
                    if let Ok(cand_center) = Direction::normalized(&c) {
                        if let Ok(cand) = enclosing_ball(&self.f_set, &cand_center) {
                            let m = Semitrough::new(self.profile.clone(), cand)?;
                            let v = m.value(x)?;
                            if v < best {
                                best = v;
                                center = cand_center;
                                improved = true;
                            }
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok(best)
    }
}

/// Theorem-level translation limit for k = 1: z^1(-shift, xbar) against
/// sqrt(((n-1)/n)^2 + |xbar|^2).
pub fn translation_limit(
    profile: &ProfileSolution,
    xbar: &[f64],
    shift: f64,
) -> Result<(f64, f64)> {
    if profile.params.k != 1 {
        return Err(Error::domain("translation_limit: requires k = 1"));
    }
    if !(shift > 0.0) {
        return Err(Error::domain("translation_limit: shift must be positive"));
    }
    let n = profile.params.n as f64;
    let mut x = vec![-shift];
    x.extend_from_slice(xbar);
    let (measured, _) = eval_standard(profile, &x);
    let l1 = (n - 1.0) / n;
    let xbar2: f64 = xbar.iter().map(|v| v * v).sum();
    let predicted = (l1 * l1 + xbar2).sqrt();
    Ok((measured, predicted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::solve_default;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn profile21() -> Arc<ProfileSolution> {
        Arc::new(solve_default(2, 1).unwrap())
    }

    fn profile31() -> Arc<ProfileSolution> {
        Arc::new(solve_default(3, 1).unwrap())
    }

    #[test]
    fn standard_at_origin() {
        let p = profile21();
        let (f0, fp0, _) = p.eval(0.0);
        let (z, g) = eval_standard(&p, &[0.0, 0.0]);
        assert!((z - f0).abs() < 1e-14);
        assert!((g[0] - fp0).abs() < 1e-14);
        assert!(g[1].abs() < 1e-14);
    }

    #[test]
    fn standard_gradient_at_height_one() {
        let p = profile21();
        let t1 = p.time_of_height(1.0).unwrap();
        let (z, g) = eval_standard(&p, &[t1, 0.0]);
        assert!((z - 1.0).abs() < 1e-9);
        assert!((g[0] - 0.6).abs() < 1e-9);
    }

    #[test]
    fn standard_deep_negative_limit() {
        let p = profile21();
        let (z, _) = eval_standard(&p, &[-1e4, 3.0]);
        assert!((z - (0.25f64 + 9.0).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn boost_identity_when_alpha_zero() {
        let p = profile21();
        let st = Semitrough::standard(p.clone()).unwrap();
        let x = [1.3, -0.7];
        let (v1, g1) = st.eval(&x).unwrap();
        let (v2, g2) = eval_standard(&p, &x);
        assert!((v1 - v2).abs() < 1e-12);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn boost_round_trip_oracle() {
        // forward-boost graph points of the standard trough, then evaluate
        // the boosted trough there: heights must agree to 1e-10
        let p = profile21();
        let cap = GeodesicCap::new(Direction::axis(2, 0), 1.0).unwrap();
        let tr = Semitrough::new(p.clone(), cap).unwrap();
        let a = tr.alpha;
        let s = (1.0 - a * a).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x = [rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)];
            let (z, _) = eval_standard(&p, &x);
            let x1p = (x[0] - a * z) / s;
            let zp = (z - a * x[0]) / s;
            let (v, _) = tr.eval(&[x1p, x[1]]).unwrap();
            assert!((v - zp).abs() < 1e-10, "round trip {v} vs {zp}");
        }
    }

    #[test]
    fn boost_gradient_matches_finite_differences() {
        let p = profile31();
        let center = Direction::normalized(&[0.5, -0.6, 0.62449979983984]).unwrap();
        let cap = GeodesicCap::new(center, 2.2).unwrap();
        let tr = Semitrough::new(p, cap).unwrap();
        let x = [0.8, -1.1, 0.4];
        let (_, g) = tr.eval(&x).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (tr.value(&xp).unwrap() - tr.value(&xm).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "i={i}: {fd} vs {}", g[i]);
        }
        // spacelike and inside the Gauss-image hull
        assert!(norm(&g) < 1.0);
        let sup_g = tr.cap.support(&g);
        assert!(dot(&g, &g) <= sup_g + 1e-6, "gradient escapes Conv(cap)");
    }

    #[test]
    fn limit_gap_standard_and_boosted() {
        let p = profile21();
        let l = p.params.l_k;
        // standard: theta = -e1 -> l_k; theta = e1 -> 0
        let st = Semitrough::standard(p.clone()).unwrap();
        let (m, pred) = st
            .limit_gap(&Direction::axis(2, 0).antipode(), 1e4)
            .unwrap();
        assert!((pred - l).abs() < 1e-15);
        assert!((m - pred).abs() < 1e-3, "measured {m} predicted {pred}");
        let (m0, p0) = st.limit_gap(&Direction::axis(2, 0), 1e4).unwrap();
        assert_eq!(p0, 0.0);
        assert!(m0.abs() < 1e-3);

        // boosted cap radius pi/4: predicted sqrt(1 - alpha^2) l_k
        let cap = GeodesicCap::new(Direction::axis(2, 0), std::f64::consts::FRAC_PI_4).unwrap();
        let tr = Semitrough::new(p.clone(), cap).unwrap();
        let a = tr.alpha;
        let (mb, pb) = tr
            .limit_gap(&Direction::axis(2, 0).antipode(), 1e5)
            .unwrap();
        assert!((pb - (1.0 - a * a).sqrt() * l).abs() < 1e-15);
        assert!((mb - pb).abs() < 1e-3, "boosted measured {mb} predicted {pb}");
    }

    #[test]
    fn sandwich_and_k_order() {
        // g >= z_cap > V_cap, and z^1 > z^k for k >= 2
        let p1 = profile21();
        let p2 = Arc::new(solve_default(2, 2).unwrap());
        let cap = GeodesicCap::new(Direction::axis(2, 0), 1.9).unwrap();
        let t1 = Semitrough::new(p1, cap.clone()).unwrap();
        let t2 = Semitrough::new(p2, cap.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let x = [rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)];
            let g = (1.0 + dot(&x, &x)).sqrt();
            let z1 = t1.value(&x).unwrap();
            let z2 = t2.value(&x).unwrap();
            let v = cap.support(&x);
            assert!(g >= z1 - 1e-12, "g {g} < z1 {z1}");
            assert!(z1 > v, "z1 {z1} <= V {v}");
            // for k = n the gap underflows an ulp of V deep in the tail
            assert!(z2 >= v - 1e-12 * v.abs().max(1.0), "z2 {z2} < V {v}");
            assert!(z1 > z2, "k-order violated: z1 {z1} <= z2 {z2}");
        }
        // strictness where the gap is representable
        for x in [[0.0, 0.0], [3.0, 1.0], [-2.0, -4.0], [8.0, 0.5]] {
            assert!(t2.value(&x).unwrap() > cap.support(&x));
        }
    }

    #[test]
    fn spacelike_contraction_on_compact() {
        let p = profile21();
        let cap = GeodesicCap::new(Direction::axis(2, 0), 2.0).unwrap();
        let tr = Semitrough::new(p, cap).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut worst: f64 = 0.0;
        for _ in 0..300 {
            let x: [f64; 2] = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let y: [f64; 2] = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            if d < 1e-9 {
                continue;
            }
            let q = (tr.value(&x).unwrap() - tr.value(&y).unwrap()).abs() / d;
            worst = worst.max(q);
        }
        assert!(worst < 1.0, "not a contraction: {worst}");
        assert!(worst < 1.0 - 1e-4, "no uniform margin on compact: {worst}");
    }

    #[test]
    fn family_sup_single_cap_is_that_cap() {
        let p = profile21();
        let f = LightlikeSet::half_sphere(2);
        let fam = SupFamily::new(f, p.clone(), FamilySettings::default()).unwrap();
        assert_eq!(fam.members.len(), 1);
        let st = Semitrough::standard(p).unwrap();
        for x in [[0.0, 0.0], [2.0, -1.0], [-3.0, 4.0]] {
            assert!((fam.eval(&x).unwrap() - st.value(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn family_inf_dominates_family_sup() {
        let d0 = 0.35;
        let f = LightlikeSet::new(
            vec![
                GeodesicCap::new(Direction::axis(2, 0), 0.9).unwrap(),
                GeodesicCap::new(
                    Direction::normalized(&[-(0.5f64), 3.0f64.sqrt() / 2.0]).unwrap(),
                    d0,
                )
                .unwrap(),
            ],
            d0,
        )
        .unwrap();
        let p = profile21();
        let sup = SupFamily::new(f.clone(), p.clone(), FamilySettings::default()).unwrap();
        let inf = InfFamily::new(f, p, FamilySettings::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let x = [rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)];
            let lo = sup.eval(&x).unwrap();
            let hi = inf.eval(&x).unwrap();
            let v = sup.support(&x);
            assert!(hi >= lo - 1e-10, "inf {hi} < sup {lo} at {x:?}");
            assert!(hi >= v - 1e-12);
            assert!(lo > v);
        }
    }

    #[test]
    fn family_sup_gap_vanishes_inside_f() {
        let p = profile21();
        let f = LightlikeSet::half_sphere(2);
        let fam = SupFamily::new(f, p, FamilySettings::default()).unwrap();
        let th = Direction::normalized(&[0.8, 0.6]).unwrap();
        let x: Vec<f64> = th.coords().iter().map(|v| v * 1e4).collect();
        let gap = fam.eval(&x).unwrap() - fam.support(&x);
        assert!(gap > 0.0 && gap < 1e-2, "gap {gap}");
    }

    #[test]
    fn family_sup_strictly_convex_midpoints() {
        let p = profile21();
        let f = LightlikeSet::half_sphere(2);
        let fam = SupFamily::new(f, p, FamilySettings::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let x: [f64; 2] = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
            let y: [f64; 2] = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
            if ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt() < 0.5 {
                continue;
            }
            let mid = [(x[0] + y[0]) / 2.0, (x[1] + y[1]) / 2.0];
            let fm = fam.eval(&mid).unwrap();
            let avg = 0.5 * (fam.eval(&x).unwrap() + fam.eval(&y).unwrap());
            assert!(fm < avg, "midpoint not strictly below: {fm} vs {avg}");
        }
    }

    #[test]
    fn compact_lower_bound_positive() {
        let p = profile21();
        let f = LightlikeSet::half_sphere(2);
        let fam = SupFamily::new(f, p, FamilySettings::default()).unwrap();
        let mut min_gap = f64::INFINITY;
        for i in -10..=10 {
            for j in -10..=10 {
                let x = [i as f64 * 0.3, j as f64 * 0.3];
                min_gap = min_gap.min(fam.eval(&x).unwrap() - fam.support(&x));
            }
        }
        assert!(min_gap > 0.0, "no uniform gap on K: {min_gap}");
    }

    #[test]
    fn translation_limit_matches_theorem() {
        for n in [2usize, 3] {
            let p = Arc::new(solve_default(n, 1).unwrap());
            let xbar = vec![0.0; n - 1];
            let (m, pr) = translation_limit(&p, &xbar, 40.0).unwrap();
            assert!((pr - (n as f64 - 1.0) / n as f64).abs() < 1e-15);
            assert!((m - pr).abs() < 1e-4, "n={n}: {m} vs {pr}");
        }
        // substitution with |xbar| = 1
        let p = Arc::new(solve_default(2, 1).unwrap());
        let (_, pr) = translation_limit(&p, &[1.0], 40.0).unwrap();
        assert!((pr - (0.25f64 + 1.0).sqrt()).abs() < 1e-15);
        // k != 1 rejected
        let p2 = Arc::new(solve_default(2, 2).unwrap());
        assert!(translation_limit(&p2, &[0.0], 40.0).is_err());
    }
}
