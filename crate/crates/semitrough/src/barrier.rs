//! Barrier assembly: the subsolution
//!
//!   ubar u(x) = sup_y { q(y) - M + ubar z_F(x + p(y)) },
//!
//! the supersolution
//!
//!   bar u(x) = inf_{y in cap(x/|x|, delta)} { q(y) + M V_F(y) + bar z_F(x + p_hat(y)) },
//!
//! and the spacelike cutoff built from the piecewise cone function scaled by
//! M1 and pushed through the same Lorentz-boost and perturbation machinery.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{brent_root, dot, expand_bracket, norm, sphere_lattice, NelderMead};
use crate::perturb::Perturbation;
use crate::profile::ProfileSolution;
use crate::sphere::{geodesic_distance, Direction, HullDomain};
use crate::trough::{FamilySettings, InfFamily, Semitrough, SupFamily};

#[derive(Debug, Clone)]
pub struct BarrierSettings {
    /// Lattice seeds for the sup over y in the subsolution.
    pub seed_count: usize,
    /// Lattice seeds for the sup over y in the cutoff.
    pub cutoff_seed_count: usize,
    pub nm_restarts: usize,
    pub nm_max_iter: usize,
    pub family: FamilySettings,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        BarrierSettings {
            seed_count: 2048,
            cutoff_seed_count: 256,
            nm_restarts: 3,
            nm_max_iter: 120,
            family: FamilySettings::default(),
        }
    }
}

/// Calibrated cutoff constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CutoffConstants {
    pub lambda: f64,
    pub m1: f64,
    pub r0: f64,
    pub r1: f64,
    /// Measured minimum of cutoff - subsolution on the calibration box.
    pub c0: f64,
}

pub struct BarrierField {
    pub perturbation: Perturbation,
    pub profile: Arc<ProfileSolution>,
    pub sup_family: SupFamily,
    pub inf_family: InfFamily,
    pub settings: BarrierSettings,
    /// Search-cap radius for the supersolution's inf over y.
    pub delta_cap: f64,
    pub cutoff_constants: Option<CutoffConstants>,
}

impl BarrierField {
    pub fn new(
        perturbation: Perturbation,
        profile: Arc<ProfileSolution>,
        settings: BarrierSettings,
    ) -> Result<Self> {
        let f_set = perturbation.f_set.clone();
        let sup_family = SupFamily::new(f_set.clone(), profile.clone(), settings.family.clone())?;
        let inf_family = InfFamily::new(f_set.clone(), profile.clone(), settings.family.clone())?;
        // delta: half the minimal angular distance from the perpendicular
        // directions to F, floored at 1e-3 and kept below pi/2
        let hull = HullDomain::with_default_resolution(f_set.clone());
        let perps = hull.perpendicular_directions(16);
        let mut delta = std::f64::consts::FRAC_PI_4;
        for nu in &perps {
            let d_to_f = f_set
                .caps
                .iter()
                .map(|c| (geodesic_distance(nu, &c.center).unwrap() - c.radius).max(0.0))
                .fold(f64::INFINITY, f64::min);
            delta = delta.min(0.5 * d_to_f);
        }
        let delta_cap = delta.max(1e-3).min(std::f64::consts::FRAC_PI_2 - 1e-6);
        Ok(BarrierField {
            perturbation,
            profile,
            sup_family,
            inf_family,
            settings,
            delta_cap,
            cutoff_constants: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.perturbation.dim()
    }

    pub fn m_const(&self) -> f64 {
        self.perturbation.m_const
    }

    pub fn support(&self, x: &[f64]) -> f64 {
        self.perturbation.f_set.support(x)
    }

    fn tangent_basis(y: &Direction) -> Vec<Vec<f64>> {
        let n = y.dim();
        let yv = y.coords();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            // Gram-Schmidt against y and the collected tangents
            let mut t = e;
            let p = dot(&t, yv);
            for (j, v) in t.iter_mut().enumerate() {
                *v -= p * yv[j];
            }
            for b in &basis {
                let p2 = dot(&t, b);
                for (j, v) in t.iter_mut().enumerate() {
                    *v -= p2 * b[j];
                }
            }
            let tn = norm(&t);
            if tn > 1e-8 {
                for v in t.iter_mut() {
                    *v /= tn;
                }
                basis.push(t);
                if basis.len() == n - 1 {
                    break;
                }
            }
        }
        basis
    }

    /// Exponential map at y0 with tangent coordinates v.
    fn exp_map(y0: &Direction, basis: &[Vec<f64>], v: &[f64]) -> Direction {
        let n = y0.dim();
        let r = norm(v);
        if r < 1e-14 {
            return y0.clone();
        }
        let mut t = vec![0.0; n];
        for (b, &vi) in basis.iter().zip(v) {
            for j in 0..n {
                t[j] += b[j] * vi / r;
            }
        }
        let p: Vec<f64> = (0..n)
            .map(|j| y0.coords()[j] * r.cos() + t[j] * r.sin())
            .collect();
        Direction::normalized(&p).unwrap()
    }

    /// Maximize a function of y over the sphere: exact branch-and-bound scan
    /// over lattice seeds ordered by a sound upper bound, then Nelder-Mead
    /// refinement in tangent coordinates.
    fn sup_over_sphere(
        &self,
        seeds: usize,
        upper: impl Fn(&Direction) -> f64 + Sync,
        exact: impl Fn(&Direction) -> Result<f64> + Sync,
    ) -> Result<(f64, Direction)> {
        let n = self.dim();
        let lattice: Vec<Direction> = sphere_lattice(n, seeds)
            .into_iter()
            .map(|p| Direction::new(p).unwrap())
            .collect();
        let mut order: Vec<(f64, usize)> = lattice
            .iter()
            .enumerate()
            .map(|(i, y)| (upper(y), i))
            .collect();
        order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut best = f64::NEG_INFINITY;
        let mut top: Vec<(f64, usize)> = Vec::new();
        for &(ub, i) in &order {
            if ub < best {
                break;
            }
            let v = exact(&lattice[i])?;
            if v > best {
                best = v;
            }
            top.push((v, i));
        }
        top.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut best_y = lattice[top[0].1].clone();
        let nm = NelderMead {
            max_iter: self.settings.nm_max_iter,
            ftol: 1e-14,
            xtol: 1e-12,
        };
        for &(_, i) in top.iter().take(self.settings.nm_restarts) {
            let y0 = &lattice[i];
            let basis = Self::tangent_basis(y0);
            let obj = |v: &[f64]| -> f64 {
                let y = Self::exp_map(y0, &basis, v);
                -exact(&y).unwrap_or(f64::NEG_INFINITY)
            };
            let scale = 2.0 / (seeds as f64).powf(1.0 / (n as f64 - 1.0));
            let (v, negval) = nm.minimize(obj, &vec![0.0; n - 1], scale);
            if -negval > best {
                best = -negval;
                best_y = Self::exp_map(y0, &basis, &v);
            }
        }
        Ok((best, best_y))
    }

    /// ubar u(x): sup over y of q(y) - M + ubar z_F(x + p(y)).
    pub fn subsolution(&self, x: &[f64]) -> Result<f64> {
        Ok(self.subsolution_with_argmax(x)?.0)
    }

    pub fn subsolution_with_argmax(&self, x: &[f64]) -> Result<(f64, Direction)> {
        let m = self.m_const();
        let exact = |y: &Direction| -> Result<f64> {
            let p = self.perturbation.shift_p(y);
            let z: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
            Ok(self.perturbation.q(y) - m + self.sup_family.eval(&z)?)
        };
        // sound upper bound: every semitrough lies below sqrt(1 + |.|^2)
        let upper = |y: &Direction| -> f64 {
            let p = self.perturbation.shift_p(y);
            let z2: f64 = x.iter().zip(&p).map(|(a, b)| (a + b) * (a + b)).sum();
            self.perturbation.q(y) - m + (1.0 + z2).sqrt()
        };
        self.sup_over_sphere(self.settings.seed_count, upper, exact)
    }

    /// bar u(x): inf over y in cap(x/|x|, delta) of
    /// q(y) + M V_F(y) + bar z_F(x + p_hat(y)).
    pub fn supersolution(&self, x: &[f64]) -> Result<f64> {
        let r = norm(x);
        if r == 0.0 {
            return Err(Error::domain("supersolution: |x| must be positive"));
        }
        let theta = Direction::normalized(x)?;
        let m = self.m_const();
        let exact = |y: &Direction| -> Result<f64> {
            let ph = self.perturbation.shift_p_hat(y);
            let z: Vec<f64> = x.iter().zip(&ph).map(|(a, b)| a + b).collect();
            Ok(self.perturbation.q(y)
                + m * self.perturbation.f_set.support_unit(y)
                + self.inf_family.eval(&z)?)
        };
        let basis = Self::tangent_basis(&theta);
        let n = self.dim();
        let delta = self.delta_cap;
        let mut best = exact(&theta)?;
        let mut best_v = vec![0.0; n - 1];
        // polar seed rings inside the search cap
        let rings = 4;
        let spokes = if n == 2 { 2 } else { 8 };
        for ri in 1..=rings {
            let rad = delta * ri as f64 / rings as f64;
            for sj in 0..spokes {
                let ang = 2.0 * std::f64::consts::PI * sj as f64 / spokes as f64;
                let v: Vec<f64> = if n == 2 {
                    vec![if sj == 0 { rad } else { -rad }]
                } else {
                    let mut v = vec![0.0; n - 1];
                    v[0] = rad * ang.cos();
                    v[1] = rad * ang.sin();
                    if n - 1 >= 3 {
                        // tilt into the third tangent direction on odd rings
                        if ri % 2 == 1 {
                            v[2] = 0.3 * rad;
                        }
                    }
                    v
                };
                let y = Self::exp_map(&theta, &basis, &v);
                let val = exact(&y)?;
                if val < best {
                    best = val;
                    best_v = v;
                }
            }
        }
        let nm = NelderMead {
            max_iter: self.settings.nm_max_iter,
            ftol: 1e-14,
            xtol: 1e-12,
        };
        let obj = |v: &[f64]| -> f64 {
            if norm(v) > delta {
                return f64::INFINITY;
            }
            let y = Self::exp_map(&theta, &basis, v);
            exact(&y).unwrap_or(f64::INFINITY)
        };
        let (_, val) = nm.minimize(obj, &best_v, delta / 6.0);
        Ok(best.min(val))
    }

    // ---------------------------------------------------------------------
    // spacelike cutoff
    // ---------------------------------------------------------------------

    /// The half-disc cone cutoff (unscaled), Lemma-23 form.
    fn psi_half(lambda: f64, r0: f64, r1: f64, x: &[f64]) -> f64 {
        let r = norm(x);
        let xbar2: f64 = x[1..].iter().map(|v| v * v).sum();
        let v = if x[0] >= 0.0 { r } else { xbar2.sqrt() };
        let base = (lambda * lambda + v * v).sqrt();
        if r <= r0 {
            return base;
        }
        let vdir = if r > 0.0 { v / r } else { 1.0 };
        let second = (1.0 - vdir) / (1.0 + xbar2).sqrt();
        if r >= r1 {
            base + second
        } else {
            base + second * (r - r0) / (r1 - r0)
        }
    }

    /// psi of one enclosing cap: scale by M1, then Lorentz-boost into the
    /// cap frame (the scaled cone is spacelike, so the coordinate equation
    /// is monotone in x1).
    fn psi_member(&self, member: &Semitrough, cc: &CutoffConstants, x: &[f64]) -> Result<f64> {
        let a = member.alpha;
        let xf = reflect_like(member, x);
        let h = |x1: f64, xbar: &[f64]| -> f64 {
            let mut z = Vec::with_capacity(xf.len());
            z.push(x1 / cc.m1);
            for v in xbar {
                z.push(v / cc.m1);
            }
            cc.m1 * Self::psi_half(cc.lambda, cc.r0, cc.r1, &z)
        };
        if a == 0.0 {
            return Ok(h(xf[0], &xf[1..]));
        }
        let s = (1.0 - a * a).sqrt();
        let x1p = xf[0];
        let xbar = &xf[1..];
        let res = |x1: f64| (x1 - a * h(x1, xbar)) / s - x1p;
        let guess = s * x1p + a * (1.0 + x1p.abs() + norm(xbar));
        let (lo, hi) = expand_bracket(res, guess, 1.0 + 0.5 * guess.abs())?;
        let x1 = brent_root(res, lo, hi, 1e-11)?;
        Ok((h(x1, xbar) - a * x1) / s)
    }

    /// psi_F = inf over the enclosing family.
    fn psi_f(&self, cc: &CutoffConstants, x: &[f64]) -> Result<f64> {
        let mut best = f64::INFINITY;
        for m in &self.inf_family.members {
            best = best.min(self.psi_member(m, cc, x)?);
        }
        Ok(best)
    }

    /// The cutoff: sup over y of q(y) - M + psi_F(x + p(y)).
    pub fn cutoff(&self, x: &[f64]) -> Result<f64> {
        let cc = self
            .cutoff_constants
            .ok_or_else(|| Error::state("cutoff: constants not calibrated"))?;
        self.cutoff_with(&cc, x)
    }

    fn cutoff_with(&self, cc: &CutoffConstants, x: &[f64]) -> Result<f64> {
        let m = self.m_const();
        let exact = |y: &Direction| -> Result<f64> {
            let p = self.perturbation.shift_p(y);
            let z: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
            Ok(self.perturbation.q(y) - m + self.psi_f(&cc, &z)?)
        };
        // bound the inf by the first member's cone plus the second-term cap
        let member0 = &self.inf_family.members[0];
        let upper = |y: &Direction| -> f64 {
            let p = self.perturbation.shift_p(y);
            let z: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
            let v = member0.cap.support(&z);
            let s = (1.0 - member0.alpha * member0.alpha).sqrt();
            let cone = (cc.m1 * cc.m1 * cc.lambda * cc.lambda + v * v).sqrt();
            self.perturbation.q(y) - m + (cone + cc.m1 * (1.0 + member0.alpha.abs())) / s
        };
        Ok(self
            .sup_over_sphere(self.settings.cutoff_seed_count, upper, exact)?
            .0)
    }

    /// Search (lambda, M1, R0, R1) such that on the box [-k_half, k_half]^n
    /// the cutoff clears the subsolution, dominates the supersolution at
    /// sampled radii in [1e3, 1e5], and stays spacelike with margin 1e-6 on
    /// sampled difference quotients.
    pub fn calibrate_cutoff(&mut self, k_half: f64) -> Result<CutoffConstants> {
        let n = self.dim();
        let dirs: Vec<Direction> = sphere_lattice(n, 16)
            .into_iter()
            .map(|p| Direction::new(p).unwrap())
            .collect();
        let radii = [1e3, 3.16e3, 1e4, 3.16e4, 1e5];
        let lambda = 1.0;
        let mut last_fail = String::new();
        let mut m1 = 64.0;
        while m1 <= 8192.0 {
            let mut r0 = 8.0f64.max(2.0 * k_half / m1);
            let mut ok_space = false;
            let mut cc = CutoffConstants {
                lambda,
                m1,
                r0,
                r1: 10.0 * r0,
                c0: 0.0,
            };
            for _ in 0..3 {
                cc = CutoffConstants {
                    lambda,
                    m1,
                    r0,
                    r1: 10.0 * r0,
                    c0: 0.0,
                };
                match self.check_spacelike(&cc, &dirs) {
                    Ok(()) => {
                        ok_space = true;
                        break;
                    }
                    Err(e) => {
                        last_fail = format!("spacelikeness: {e}");
                        r0 *= 2.0;
                    }
                }
            }
            if ok_space {
                match self.check_domination(&cc, &dirs, &radii) {
                    Ok(()) => {
                        match self.measure_c0(&cc, k_half) {
                            Ok(c0) if c0 > 0.0 => {
                                let done = CutoffConstants { c0, ..cc };
                                self.cutoff_constants = Some(done);
                                return Ok(done);
                            }
                            Ok(c0) => {
                                last_fail =
                                    format!("compact clearance: min(cutoff - sub) = {c0:.3e} <= 0");
                            }
                            Err(e) => last_fail = format!("compact clearance: {e}"),
                        }
                    }
                    Err(e) => last_fail = format!("far-field domination: {e}"),
                }
            }
            m1 *= 2.0;
        }
        Err(Error::calibration(format!(
            "cutoff calibration exhausted (lambda = {lambda}); last violation: {last_fail}"
        )))
    }

    fn check_spacelike(&self, cc: &CutoffConstants, dirs: &[Direction]) -> Result<()> {
        let n = self.dim();
        let radii = [0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5];
        let steps: Vec<Vec<f64>> = sphere_lattice(n, 4);
        let h = 0.5;
        for th in dirs.iter().step_by(2) {
            for &r in &radii {
                let x: Vec<f64> = th.coords().iter().map(|v| v * r).collect();
                let fx = self.cutoff_with(cc, &x)?;
                for d in &steps {
                    let xh: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + h * b).collect();
                    let q = (self.cutoff_with(cc, &xh)? - fx).abs() / h;
                    if q > 1.0 - 1e-6 {
                        return Err(Error::calibration(format!(
                            "difference quotient {q:.9} at r = {r:.1e}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_domination(
        &self,
        cc: &CutoffConstants,
        dirs: &[Direction],
        radii: &[f64],
    ) -> Result<()> {
        for th in dirs {
            for &r in radii {
                let x: Vec<f64> = th.coords().iter().map(|v| v * r).collect();
                let cut = self.cutoff_with(cc, &x)?;
                let sup = self.supersolution(&x)?;
                if cut < sup {
                    return Err(Error::calibration(format!(
                        "cutoff {cut:.6} < supersolution {sup:.6} at r = {r:.1e}, theta = {:?}",
                        th.coords()
                    )));
                }
            }
        }
        Ok(())
    }

    fn measure_c0(&self, cc: &CutoffConstants, k_half: f64) -> Result<f64> {
        let n = self.dim();
        let per_axis = if n == 2 { 7 } else { 4 };
        let mut idx = vec![0usize; n];
        let mut min_gap = f64::INFINITY;
        loop {
            let x: Vec<f64> = idx
                .iter()
                .map(|&i| -k_half + 2.0 * k_half * i as f64 / (per_axis - 1) as f64)
                .collect();
            let gap = self.cutoff_with(cc, &x)? - self.subsolution(&x)?;
            min_gap = min_gap.min(gap);
            // odometer
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < per_axis {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == n {
                    return Ok(min_gap);
                }
            }
        }
    }

    /// Classify a direction for the asymptotic predictions: the
    /// perpendicular non-member limits are the half-disc formulas
    /// sqrt(l^2 + M^2) - M (sub) and l_k (super); elsewhere both tend to q.
    pub fn predicted_limits(&self, theta: &Direction, perps: &[Direction]) -> (f64, f64, bool) {
        let l = self.profile.params.l_k;
        let m = self.m_const();
        let is_perp = perps
            .iter()
            .any(|p| geodesic_distance(p, theta).unwrap() <= 1e-6);
        if is_perp {
            ((l * l + m * m).sqrt() - m, l, true)
        } else {
            let q = self.perturbation.q(theta);
            (q, q, false)
        }
    }
}

fn reflect_like(member: &Semitrough, x: &[f64]) -> Vec<f64> {
    // rebuild the member's frame map from its cap (Householder through the
    // midpoint of center and e1)
    let n = member.cap.dim();
    let c = member.cap.center.coords();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let mut v: Vec<f64> = c.iter().zip(&e1).map(|(a, b)| a - b).collect();
    let nv = norm(&v);
    if nv < 1e-12 {
        return x.to_vec();
    }
    for w in v.iter_mut() {
        *w /= nv;
    }
    let s = 2.0 * dot(&v, x);
    x.iter().zip(&v).map(|(xi, vi)| xi - s * vi).collect()
}

/// One row of the ordering/asymptotics report.
#[derive(Debug, Clone, Serialize)]
pub struct OrderingRow {
    pub theta: Vec<f64>,
    pub r: f64,
    pub sub: f64,
    pub sup: f64,
    pub cutoff: Option<f64>,
    pub support: f64,
    pub predicted_sub_limit: f64,
    pub predicted_sup_limit: f64,
    pub perpendicular: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    pub rows: Vec<OrderingRow>,
    pub max_order_violation: f64,
}

/// Tabulate sub/super/cutoff values with predicted limits; ordering
/// violations are recorded, not raised.
pub fn ordering_report(
    field: &BarrierField,
    directions: &[Direction],
    radii: &[f64],
) -> Result<OrderingReport> {
    let hull = HullDomain::with_default_resolution(field.perturbation.f_set.clone());
    let perps = hull.perpendicular_directions(16);
    let pairs: Vec<(usize, usize)> = (0..directions.len())
        .flat_map(|i| (0..radii.len()).map(move |j| (i, j)))
        .collect();
    let rows: Vec<OrderingRow> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let theta = &directions[i];
            let r = radii[j];
            let x: Vec<f64> = theta.coords().iter().map(|v| v * r).collect();
            let sub = field.subsolution(&x)?;
            let sup = field.supersolution(&x)?;
            let cutoff = match field.cutoff_constants {
                Some(_) => Some(field.cutoff(&x)?),
                None => None,
            };
            let support = field.support(&x);
            let (psub, psup, perp) = field.predicted_limits(theta, &perps);
            let mut violations = Vec::new();
            if sup < sub - 1e-9 * (1.0 + sub.abs()) {
                violations.push(format!("super {sup:.9e} < sub {sub:.9e}"));
            }
            if let Some(c) = cutoff {
                if r >= 1e3 && c < sup - 1e-9 * (1.0 + sup.abs()) {
                    violations.push(format!("cutoff {c:.9e} < super {sup:.9e}"));
                }
            }
            Ok(OrderingRow {
                theta: theta.coords().to_vec(),
                r,
                sub,
                sup,
                cutoff,
                support,
                predicted_sub_limit: psub,
                predicted_sup_limit: psup,
                perpendicular: perp,
                violations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_order_violation = rows
        .iter()
        .map(|row| (row.sub - row.sup).max(0.0))
        .fold(0.0, f64::max);
    Ok(OrderingReport {
        rows,
        max_order_violation,
    })
}
