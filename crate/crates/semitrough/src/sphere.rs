//! Directions on S^{n-1}, geodesic caps, lightlike sets F as finite cap
//! unions, support functions, and the convex-hull domain in the unit ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, sphere_lattice};

pub const UNIT_TOL: f64 = 1e-12;

/// Unit vector on S^{n-1}, 2 <= n <= 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let n = coords.len();
        if !(2..=4).contains(&n) {
            return Err(Error::domain(format!("Direction: dimension {n} not in 2..=4")));
        }
        let r = norm(&coords);
        if (r - 1.0).abs() > UNIT_TOL {
            return Err(Error::domain(format!(
                "Direction: |coords| = {r:.16} deviates from 1 by more than {UNIT_TOL:e}"
            )));
        }
        Ok(Direction(coords))
    }

    /// Normalize an arbitrary nonzero vector onto the sphere.
    pub fn normalized(v: &[f64]) -> Result<Self> {
        let r = norm(v);
        if r < 1e-14 {
            return Err(Error::domain("Direction::normalized: zero vector"));
        }
        Direction::new(v.iter().map(|x| x / r).collect())
    }

    pub fn axis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Direction(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn antipode(&self) -> Self {
        Direction(self.0.iter().map(|x| -x).collect())
    }
}

/// d_S(a, b) = arccos(a . b), in [0, pi].
pub fn geodesic_distance(a: &Direction, b: &Direction) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::domain("geodesic_distance: dimension mismatch"));
    }
    Ok(dot(a.coords(), b.coords()).clamp(-1.0, 1.0).acos())
}

/// Closed geodesic ball on S^{n-1}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicCap {
    pub center: Direction,
    pub radius: f64,
}

impl GeodesicCap {
    pub fn new(center: Direction, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < std::f64::consts::PI) {
            return Err(Error::domain(format!(
                "GeodesicCap: radius {radius} not in (0, pi)"
            )));
        }
        Ok(GeodesicCap { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, x: &Direction) -> bool {
        geodesic_distance(x, &self.center).map_or(false, |d| d <= self.radius + 1e-14)
    }

    /// Cap membership with explicit slack: radius - d_S(x, center).
    pub fn depth(&self, x: &Direction) -> f64 {
        self.radius - geodesic_distance(x, &self.center).unwrap_or(f64::INFINITY)
    }

    /// sup over the cap of x . lambda for an arbitrary point x of R^n:
    /// |x| when the angle theta from the center is within the radius, else
    /// |x| cos(theta - radius) = s cos(rho) + |x_perp| sin(rho), which stays
    /// well conditioned near the antipode.
    pub fn support(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        if r == 0.0 {
            return 0.0;
        }
        let c = self.center.coords();
        let s = dot(x, c);
        let perp2: f64 = x
            .iter()
            .zip(c)
            .map(|(xi, ci)| xi - s * ci)
            .map(|v| v * v)
            .sum();
        let perp = perp2.sqrt();
        let theta = perp.atan2(s);
        if theta <= self.radius {
            r
        } else {
            s * self.radius.cos() + perp * self.radius.sin()
        }
    }

    /// Argmax of x . lambda over the cap (the contact point of the
    /// supporting hyperplane with direction x).
    pub fn support_point(&self, x: &[f64]) -> Direction {
        let r = norm(x);
        if r == 0.0 {
            return self.center.clone();
        }
        let u: Vec<f64> = x.iter().map(|v| v / r).collect();
        let c = self.center.coords();
        let cosang = dot(&u, c).clamp(-1.0, 1.0);
        let theta = cosang.acos();
        if theta <= self.radius {
            return Direction::normalized(&u).unwrap();
        }
        // rotate u toward the center by (theta - radius) inside the (u, c) plane
        let t = theta - self.radius;
        let sin_th = theta.sin();
        if sin_th < 1e-14 {
            // u is antipodal to the center: contact set is the whole boundary
            // circle; pick a deterministic representative.
            let mut w = vec![0.0; u.len()];
            let k = (0..u.len())
                .min_by(|&i, &j| c[i].abs().partial_cmp(&c[j].abs()).unwrap())
                .unwrap();
            w[k] = 1.0;
            let proj = dot(&w, c);
            let mut tangent: Vec<f64> = w.iter().zip(c).map(|(wi, ci)| wi - proj * ci).collect();
            let tn = norm(&tangent);
            for v in tangent.iter_mut() {
                *v /= tn;
            }
            let pt: Vec<f64> = c
                .iter()
                .zip(&tangent)
                .map(|(ci, ti)| ci * self.radius.cos() + ti * self.radius.sin())
                .collect();
            return Direction::normalized(&pt).unwrap();
        }
        // slerp from u toward c by angle t
        let a = ((theta - t).sin() / sin_th, t.sin() / sin_th);
        let pt: Vec<f64> = u
            .iter()
            .zip(c)
            .map(|(ui, ci)| a.0 * ui + a.1 * ci)
            .collect();
        Direction::normalized(&pt).unwrap()
    }
}

/// Prescribed lightlike set F: a nonempty finite union of closed caps, each
/// of radius >= delta0 > 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LightlikeSet {
    pub caps: Vec<GeodesicCap>,
    pub delta0: f64,
}

impl LightlikeSet {
    pub fn new(caps: Vec<GeodesicCap>, delta0: f64) -> Result<Self> {
        if caps.is_empty() {
            return Err(Error::domain("LightlikeSet: empty cap list"));
        }
        if !(delta0 > 0.0) {
            return Err(Error::domain("LightlikeSet: delta0 must be positive"));
        }
        let n = caps[0].dim();
        for c in &caps {
            if c.dim() != n {
                return Err(Error::domain("LightlikeSet: mixed dimensions"));
            }
            if c.radius + 1e-14 < delta0 {
                return Err(Error::domain(format!(
                    "LightlikeSet: cap radius {} below delta0 {}",
                    c.radius, delta0
                )));
            }
        }
        Ok(LightlikeSet { caps, delta0 })
    }

    /// Half sphere {x1 >= 0}: the standard semitrough's Gauss-image sphere.
    pub fn half_sphere(n: usize) -> Self {
        let cap = GeodesicCap::new(Direction::axis(n, 0), std::f64::consts::FRAC_PI_2).unwrap();
        LightlikeSet::new(vec![cap], std::f64::consts::FRAC_PI_2).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.caps[0].dim()
    }

    pub fn contains(&self, x: &Direction) -> bool {
        self.caps.iter().any(|c| c.contains(x))
    }

    /// max over caps of (radius_i - d(x, center_i)); positive inside.
    pub fn depth(&self, x: &Direction) -> f64 {
        self.caps
            .iter()
            .map(|c| c.depth(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// V_F(x) = sup over F of x . lambda.
    pub fn support(&self, x: &[f64]) -> f64 {
        self.caps
            .iter()
            .map(|c| c.support(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Support value of the unit direction x/|x| (degree-1 homogeneity).
    pub fn support_unit(&self, theta: &Direction) -> f64 {
        self.support(theta.coords())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.dim(),
            "delta0": self.delta0,
            "caps": self.caps.iter().map(|c| serde_json::json!({
                "center": c.center.coords(),
                "radius": c.radius,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let n = v["n"]
            .as_u64()
            .ok_or_else(|| Error::config("LightlikeSet json: missing n"))? as usize;
        let delta0 = v["delta0"]
            .as_f64()
            .ok_or_else(|| Error::config("LightlikeSet json: missing delta0"))?;
        let caps_v = v["caps"]
            .as_array()
            .ok_or_else(|| Error::config("LightlikeSet json: missing caps"))?;
        let mut caps = Vec::new();
        for cv in caps_v {
            let center: Vec<f64> = cv["center"]
                .as_array()
                .ok_or_else(|| Error::config("cap json: missing center"))?
                .iter()
                .map(|x| x.as_f64().unwrap_or(f64::NAN))
                .collect();
            if center.len() != n {
                return Err(Error::config("cap json: center dimension mismatch"));
            }
            let radius = cv["radius"]
                .as_f64()
                .ok_or_else(|| Error::config("cap json: missing radius"))?;
            caps.push(GeodesicCap::new(Direction::new(center)?, radius)?);
        }
        LightlikeSet::new(caps, delta0)
    }
}

/// Inscribed-ball family for the lower semitrough envelope: caps contained in
/// F with radius in [delta0, pi/2]. Every defining cap is included (clipped
/// at pi/2); additional centers come from a lattice restricted to F with the
/// conservative single-cap containment radius.
pub fn inscribed_balls(f_set: &LightlikeSet, budget: usize) -> Result<Vec<GeodesicCap>> {
    if budget == 0 {
        return Err(Error::domain("inscribed_balls: budget must be >= 1"));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut out: Vec<GeodesicCap> = Vec::new();
    for c in &f_set.caps {
        let r = c.radius.min(half_pi);
        out.push(GeodesicCap::new(c.center.clone(), r)?);
    }
    let n = f_set.dim();
    if out.len() < budget {
        let lattice = sphere_lattice(n, budget.max(4) * 4);
        for p in lattice {
            if out.len() >= budget {
                break;
            }
            let dir = Direction::new(p)?;
            let depth = f_set.depth(&dir);
            let r = depth.min(half_pi);
            if r >= f_set.delta0 {
                // skip duplicates of defining caps
                let dup = out.iter().any(|c| {
                    geodesic_distance(&c.center, &dir).unwrap() < 1e-9 && (c.radius - r).abs() < 1e-9
                });
                if !dup {
                    out.push(GeodesicCap::new(dir, r)?);
                }
            }
        }
    }
    Ok(out)
}

/// Maximal admissible inscribed radius about `center` (conservative
/// single-cap bound), clipped to pi/2. Returns None when below delta0.
pub fn inscribed_radius(f_set: &LightlikeSet, center: &Direction) -> Option<f64> {
    let depth = f_set.depth(center);
    let r = depth.min(std::f64::consts::FRAC_PI_2);
    if r >= f_set.delta0 {
        Some(r)
    } else {
        None
    }
}

/// Smallest cap about `center` containing F. Radius = max over caps of
/// d(center, c_i) + r_i (cap-boundary extremal), clipped at pi.
pub fn enclosing_ball(f_set: &LightlikeSet, center: &Direction) -> Result<GeodesicCap> {
    let mut radius: f64 = 0.0;
    for c in &f_set.caps {
        let d = geodesic_distance(center, &c.center)?;
        radius = radius.max((d + c.radius).min(std::f64::consts::PI));
    }
    let max_radius = std::f64::consts::PI - f_set.delta0;
    if radius > max_radius + 1e-12 {
        return Err(Error::infeasible(format!(
            "enclosing_ball: required radius {radius:.6} exceeds pi - delta0 = {max_radius:.6}"
        )));
    }
    GeodesicCap::new(center.clone(), radius.min(max_radius))
}

/// Convex-hull domain F~ = Conv(F) in the closed unit ball, realized through
/// the support function on a direction grid.
#[derive(Debug, Clone)]
pub struct HullDomain {
    pub parent: LightlikeSet,
    grid: Vec<Direction>,
    support_values: Vec<f64>,
}

impl HullDomain {
    pub fn new(parent: LightlikeSet, resolution: usize) -> Self {
        let n = parent.dim();
        let grid: Vec<Direction> = sphere_lattice(n, resolution)
            .into_iter()
            .map(|p| Direction::new(p).unwrap())
            .collect();
        let support_values = grid.iter().map(|d| parent.support(d.coords())).collect();
        HullDomain {
            parent,
            grid,
            support_values,
        }
    }

    pub fn with_default_resolution(parent: LightlikeSet) -> Self {
        let res = match parent.dim() {
            2 => 720,
            _ => 10_000,
        };
        HullDomain::new(parent, res)
    }

    pub fn dim(&self) -> usize {
        self.parent.dim()
    }

    /// Exact support function (degree-1 homogeneous); the hull has the same
    /// support function as F itself.
    pub fn support(&self, x: &[f64]) -> f64 {
        self.parent.support(x)
    }

    /// min over the direction grid of V_F(x) - xi . x; nonnegative inside.
    pub fn slack(&self, xi: &[f64]) -> f64 {
        self.grid
            .iter()
            .zip(&self.support_values)
            .map(|(d, v)| v - dot(xi, d.coords()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        self.slack(xi) >= -tol
    }

    /// A strictly interior point: support-slack ascent from the cap-center
    /// average (n = 2 also works since the grid is fine).
    pub fn interior_point(&self) -> Vec<f64> {
        let n = self.dim();
        let mut c = vec![0.0; n];
        for cap in &self.parent.caps {
            for (ci, x) in c.iter_mut().zip(cap.center.coords()) {
                *ci += x / self.parent.caps.len() as f64;
            }
        }
        for v in c.iter_mut() {
            *v *= 0.5;
        }
        // coordinate-search ascent on the slack
        let mut best = self.slack(&c);
        let mut step = 0.25;
        while step > 1e-4 {
            let mut improved = false;
            for i in 0..n {
                for s in [-1.0, 1.0] {
                    let mut t = c.clone();
                    t[i] += s * step;
                    let sl = self.slack(&t);
                    if sl > best {
                        best = sl;
                        c = t;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        c
    }

    /// Sampled outward unit normals of the hull-boundary pieces that lie
    /// strictly inside the unit ball, excluding directions in F.
    ///
    /// n = 2 is exact (chord normals between consecutive merged arcs);
    /// n >= 3 combines cap antipodes with a lattice scan for multi-cap
    /// support ties.
    pub fn perpendicular_directions(&self, budget: usize) -> Vec<Direction> {
        let n = self.dim();
        let f_set = &self.parent;
        let mut out: Vec<Direction> = Vec::new();
        if n == 2 {
            // merge arcs, emit gap-midpoint normals
            let mut arcs: Vec<(f64, f64)> = f_set
                .caps
                .iter()
                .map(|c| {
                    let a = c.center.coords()[1].atan2(c.center.coords()[0]);
                    (a - c.radius, a + c.radius)
                })
                .collect();
            arcs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            // normalize into [0, 2pi) sweep with wraparound merge
            let tau = 2.0 * std::f64::consts::PI;
            let full = arcs.iter().any(|&(a, b)| b - a >= tau - 1e-12);
            if !full {
                let mut events: Vec<(f64, f64)> =
                    arcs.iter().map(|&(a, b)| (a.rem_euclid(tau), b - a)).collect();
                events.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                // merge overlapping arcs on the circle
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for &(start, len) in &events {
                    let end = start + len;
                    if let Some(last) = merged.last_mut() {
                        if start <= last.1 + 1e-12 {
                            last.1 = last.1.max(end);
                            continue;
                        }
                    }
                    merged.push((start, end));
                }
                // wraparound: last may swallow first
                if merged.len() > 1 {
                    let (fs, fe) = merged[0];
                    let le = merged.last().unwrap().1;
                    if le >= fs + tau - 1e-12 {
                        merged[0] = (fs, fe.max(le - tau));
                        merged.pop();
                    }
                }
                if merged.len() == 1 && merged[0].1 - merged[0].0 >= tau - 1e-12 {
                    return out;
                }
                let m = merged.len();
                for i in 0..m {
                    let gap_start = merged[i].1;
                    let gap_end = if i + 1 < m {
                        merged[i + 1].0
                    } else {
                        merged[0].0 + tau
                    };
                    if gap_end - gap_start > 1e-9 {
                        let mid = 0.5 * (gap_start + gap_end);
                        out.push(Direction::new(vec![mid.cos(), mid.sin()]).unwrap());
                    }
                }
            }
        } else {
            // candidates: antipodes of defining caps whose base disc is an
            // exposed face of the hull
            for c in &f_set.caps {
                let nu = c.center.antipode();
                if f_set.contains(&nu) {
                    continue;
                }
                let own = c.support(nu.coords());
                let global = f_set.support(nu.coords());
                if (global - own).abs() < 1e-10 {
                    out.push(nu);
                }
            }
            // lattice scan for two-cap support ties
            let scan = sphere_lattice(n, 4000);
            for p in scan {
                if out.len() >= budget {
                    break;
                }
                let nu = Direction::new(p).unwrap();
                if f_set.contains(&nu) {
                    continue;
                }
                let vals: Vec<f64> = f_set.caps.iter().map(|c| c.support(nu.coords())).collect();
                let vmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let close: Vec<usize> = (0..vals.len())
                    .filter(|&i| vmax - vals[i] < 5e-3)
                    .collect();
                if close.len() >= 2 {
                    // distinct contact points required
                    let p0 = f_set.caps[close[0]].support_point(nu.coords());
                    let p1 = f_set.caps[close[1]].support_point(nu.coords());
                    if geodesic_distance(&p0, &p1).unwrap() > 1e-3 {
                        let dup = out
                            .iter()
                            .any(|d| geodesic_distance(d, &nu).unwrap() < 0.05);
                        if !dup {
                            out.push(nu);
                        }
                    }
                }
            }
        }
        // drop any normals that fall in F and cap the budget
        out.retain(|d| !f_set.contains(d));
        out.truncate(budget);
        out
    }
}
