//! The boundary perturbation q on S^{n-1}: built-in C^{2,1} families
//! vanishing off the lightlike set, estimated constants a0, a1, a2, a4, the
//! shift constant M, and the shift maps p(y) = Dq(y) + M y and
//! p-hat(y) = Dq(y) - M y.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, sphere_lattice, sub};
use crate::sphere::{geodesic_distance, Direction, LightlikeSet};

/// Built-in perturbation families (closed-form value and gradient).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum QFamily {
    Zero,
    /// amplitude * (1 - (d/radius)^2)^3 inside the cap about `center`.
    CapBump {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
    },
    /// amplitude * y1^2 * smoothstep(y1 / width): supported on {y1 > 0},
    /// C^{2,1} across the equator.
    CosineCap { amplitude: f64, width: f64 },
}

impl QFamily {
    /// q at a unit direction.
    pub fn value(&self, y: &Direction) -> f64 {
        match self {
            QFamily::Zero => 0.0,
            QFamily::CapBump {
                center,
                radius,
                amplitude,
            } => {
                let c = Direction::new(center.clone()).expect("cap bump center");
                let d = geodesic_distance(y, &c).unwrap();
                let s = d / radius;
                if s >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - s * s).powi(3)
                }
            }
            QFamily::CosineCap { amplitude, width } => {
                let y1 = y.coords()[0];
                if y1 <= 0.0 {
                    0.0
                } else {
                    amplitude * y1 * y1 * smoothstep(y1 / width)
                }
            }
        }
    }

    /// Tangential gradient (the gradient of the degree-0 homogeneous
    /// extension, so y . Dq(y) = 0).
    pub fn gradient(&self, y: &Direction) -> Vec<f64> {
        let n = y.dim();
        match self {
            QFamily::Zero => vec![0.0; n],
            QFamily::CapBump {
                center,
                radius,
                amplitude,
            } => {
                let c = center;
                let yv = y.coords();
                let cy = dot(c, yv);
                let d = cy.clamp(-1.0, 1.0).acos();
                let s = d / radius;
                if s >= 1.0 {
                    return vec![0.0; n];
                }
                // dq/dd = amplitude * -6 (d/rho^2) (1-s^2)^2;
                // grad d = -P_y c / sin d, so grad q = factor * P_y c with
                // factor = 6 amplitude (1-s^2)^2 (d / sin d) / rho^2
                let sind = d.sin();
                let dd_over_sin = if d < 1e-8 { 1.0 } else { d / sind };
                let factor =
                    6.0 * amplitude * (1.0 - s * s).powi(2) * dd_over_sin / (radius * radius);
                (0..n).map(|i| factor * (c[i] - cy * yv[i])).collect()
            }
            QFamily::CosineCap { amplitude, width } => {
                let yv = y.coords();
                let y1 = yv[0];
                if y1 <= 0.0 {
                    return vec![0.0; n];
                }
                let s = y1 / width;
                let coeff =
                    amplitude * (2.0 * y1 * smoothstep(s) + y1 * y1 * smoothstep_d(s) / width);
                // tangential projection of e1
                (0..n)
                    .map(|i| coeff * ((i == 0) as usize as f64 - y1 * yv[i]))
                    .collect()
            }
        }
    }

    /// Central-difference gradient of the degree-0 extension (consistency
    /// fallback).
    pub fn gradient_fd(&self, y: &Direction) -> Vec<f64> {
        let n = y.dim();
        let h = 1e-6;
        let q_ext = |x: &[f64]| self.value(&Direction::normalized(x).unwrap());
        (0..n)
            .map(|i| {
                let mut xp = y.coords().to_vec();
                let mut xm = y.coords().to_vec();
                xp[i] += h;
                xm[i] -= h;
                (q_ext(&xp) - q_ext(&xm)) / (2.0 * h)
            })
            .collect()
    }
}

fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

fn smoothstep_d(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

/// Estimated perturbation constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QConstants {
    /// |q(y)| <= a0 s(y)^2
    pub a0: f64,
    /// |Dq(y)| <= a1 s(y)
    pub a1: f64,
    /// semiconvexity constant of q on the sphere
    pub a2: f64,
    /// |Dq(y) . e_m| <= a4 s(y)^2 along boundary-sphere axes
    pub a4: f64,
}

/// The perturbation bundle: q, its set F, constants, and M.
#[derive(Clone)]
pub struct Perturbation {
    pub family: QFamily,
    pub f_set: LightlikeSet,
    pub constants: QConstants,
    pub m_const: f64,
}

/// sin of the geodesic distance from y to the complement of F (conservative
/// per-cap depth); 0 outside F.
fn boundary_sine(f_set: &LightlikeSet, y: &Direction) -> f64 {
    let depth = f_set.depth(y).max(0.0);
    depth.min(std::f64::consts::FRAC_PI_2).sin()
}

/// Estimate (a0, a1, a2, a4) on a direction grid; `grid` is the lattice
/// resolution. Pair sampling for a2 is stratified into dyadic gap bins down
/// to 1e-4.
pub fn estimate_constants(q: &QFamily, f_set: &LightlikeSet, grid: usize) -> Result<QConstants> {
    let n = f_set.dim();
    let samples: Vec<Direction> = sphere_lattice(n, grid)
        .into_iter()
        .map(|p| Direction::new(p).unwrap())
        .collect();

    // C^{2,1}_0 membership proxy: q and Dq vanish on boundary samples
    for cap in &f_set.caps {
        for i in 0..64 {
            let b = boundary_point(cap, i, 64);
            if !f_set.contains(&b) || f_set.depth(&b) < 1e-9 {
                let qv = q.value(&b).abs();
                let gv = norm(&q.gradient(&b));
                if qv > 1e-8 || gv > 1e-8 {
                    return Err(Error::validation(format!(
                        "q does not vanish to first order on the boundary of F: |q| = {qv:.3e}, |Dq| = {gv:.3e} at {:?}",
                        b.coords()
                    )));
                }
            }
        }
    }

    let mut a0: f64 = 0.0;
    let mut a1: f64 = 0.0;
    let mut a4: f64 = 0.0;
    for y in &samples {
        let s = boundary_sine(f_set, y);
        if s <= 1e-6 {
            continue;
        }
        let qv = q.value(y).abs();
        let gv = q.gradient(y);
        a0 = a0.max(qv / (s * s));
        a1 = a1.max(norm(&gv) / s);
        for m in 1..n {
            a4 = a4.max(gv[m].abs() / (s * s));
        }
    }

    // a2: dyadic-gap pair battery
    let mut a2: f64 = 0.0;
    let mut per_bin: Vec<f64> = Vec::new();
    let mut worst_pair: Option<(Vec<f64>, Vec<f64>)> = None;
    let tangents = |y: &Direction| -> Vec<Vec<f64>> {
        let yv = y.coords();
        let mut dirs = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let proj = dot(&e, yv);
            let t: Vec<f64> = (0..n).map(|j| e[j] - proj * yv[j]).collect();
            let tn = norm(&t);
            if tn > 1e-6 {
                dirs.push(t.iter().map(|v| v / tn).collect());
            }
        }
        dirs
    };
    let mut gap = 1.0;
    while gap >= 1e-4 {
        let mut bin_sup: f64 = 0.0;
        for y in samples.iter().step_by(1 + samples.len() / 400) {
            let gy = q.gradient(y);
            let qy = q.value(y);
            for t in tangents(y) {
                for sgn in [-1.0, 1.0] {
                    let raw: Vec<f64> = (0..n)
                        .map(|i| y.coords()[i] + sgn * gap * t[i])
                        .collect();
                    let x = Direction::normalized(&raw).unwrap();
                    let dx = sub(x.coords(), y.coords());
                    let d2 = dot(&dx, &dx);
                    if d2 < 1e-30 {
                        continue;
                    }
                    let lhs = (q.value(&x) - qy - dot(&gy, &dx)).abs();
                    let ratio = lhs / d2;
                    if ratio > bin_sup {
                        bin_sup = ratio;
                        if ratio > a2 {
                            worst_pair = Some((x.coords().to_vec(), y.coords().to_vec()));
                        }
                    }
                }
            }
        }
        per_bin.push(bin_sup);
        a2 = a2.max(bin_sup);
        gap *= 0.5;
    }
    // C^{1,1} divergence guard: the smallest-gap bins must not blow up
    let coarse_sup = per_bin[..per_bin.len() / 2]
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let fine_sup = per_bin[per_bin.len() / 2..]
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    if fine_sup > 10.0 * coarse_sup.max(1e-12) && fine_sup > 1e-6 {
        let (x, y) = worst_pair.unwrap();
        return Err(Error::validation(format!(
            "second-difference quotient diverges at small gaps (q not C^<1,1>): \
             sup {fine_sup:.3e} vs coarse {coarse_sup:.3e}, offending pair x = {x:?}, y = {y:?}"
        )));
    }
    Ok(QConstants { a0, a1, a2, a4 })
}

fn boundary_point(cap: &crate::sphere::GeodesicCap, i: usize, total: usize) -> Direction {
    let n = cap.dim();
    let c = cap.center.coords();
    // tangent frame at the center
    let mut t1 = vec![0.0; n];
    let k = (0..n)
        .min_by(|&a, &b| c[a].abs().partial_cmp(&c[b].abs()).unwrap())
        .unwrap();
    t1[k] = 1.0;
    let proj = dot(&t1, c);
    for (j, v) in t1.iter_mut().enumerate() {
        *v -= proj * c[j];
    }
    let tn = norm(&t1);
    for v in t1.iter_mut() {
        *v /= tn;
    }
    let phi = 2.0 * std::f64::consts::PI * i as f64 / total as f64;
    let mut t = t1.clone();
    if n >= 3 {
        // rotate t1 inside the tangent plane spanned with a second frame leg
        let mut t2 = vec![0.0; n];
        let k2 = (0..n)
            .filter(|&a| a != k)
            .min_by(|&a, &b| c[a].abs().partial_cmp(&c[b].abs()).unwrap())
            .unwrap();
        t2[k2] = 1.0;
        let p1 = dot(&t2, c);
        for (j, v) in t2.iter_mut().enumerate() {
            *v -= p1 * c[j];
        }
        let p2 = dot(&t2, &t1);
        for (j, v) in t2.iter_mut().enumerate() {
            *v -= p2 * t1[j];
        }
        let t2n = norm(&t2);
        for v in t2.iter_mut() {
            *v /= t2n;
        }
        for j in 0..n {
            t[j] = t1[j] * phi.cos() + t2[j] * phi.sin();
        }
    } else if i % 2 == 1 {
        for v in t.iter_mut() {
            *v = -*v;
        }
    }
    let r = cap.radius;
    let p: Vec<f64> = (0..n).map(|j| c[j] * r.cos() + t[j] * r.sin()).collect();
    Direction::normalized(&p).unwrap()
}

/// M = max(2.2 a2, 10 a4, a1 + 1, 1).
pub fn choose_m(c: &QConstants) -> f64 {
    (2.2 * c.a2).max(10.0 * c.a4).max(c.a1 + 1.0).max(1.0)
}

impl Perturbation {
    pub fn new(family: QFamily, f_set: LightlikeSet, grid: usize) -> Result<Self> {
        let constants = estimate_constants(&family, &f_set, grid)?;
        let m_const = choose_m(&constants);
        Ok(Perturbation {
            family,
            f_set,
            constants,
            m_const,
        })
    }

    pub fn zero(f_set: LightlikeSet) -> Self {
        Perturbation {
            family: QFamily::Zero,
            f_set,
            constants: QConstants {
                a0: 0.0,
                a1: 0.0,
                a2: 0.0,
                a4: 0.0,
            },
            m_const: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.f_set.dim()
    }

    pub fn q(&self, y: &Direction) -> f64 {
        self.family.value(y)
    }

    pub fn grad_q(&self, y: &Direction) -> Vec<f64> {
        self.family.gradient(y)
    }

    /// p(y) = Dq(y) + M y.
    pub fn shift_p(&self, y: &Direction) -> Vec<f64> {
        let g = self.grad_q(y);
        g.iter()
            .zip(y.coords())
            .map(|(gi, yi)| gi + self.m_const * yi)
            .collect()
    }

    /// p-hat(y) = Dq(y) - M y.
    pub fn shift_p_hat(&self, y: &Direction) -> Vec<f64> {
        let g = self.grad_q(y);
        g.iter()
            .zip(y.coords())
            .map(|(gi, yi)| gi - self.m_const * yi)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::GeodesicCap;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn bump(amp: f64) -> QFamily {
        QFamily::CapBump {
            center: vec![1.0, 0.0],
            radius: 0.9,
            amplitude: amp,
        }
    }

    #[test]
    fn zero_family_constants() {
        let f = LightlikeSet::half_sphere(2);
        let c = estimate_constants(&QFamily::Zero, &f, 512).unwrap();
        assert_eq!((c.a0, c.a1, c.a2, c.a4), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(choose_m(&c), 1.0);
    }

    #[test]
    fn choose_m_rules() {
        let c = QConstants {
            a0: 0.0,
            a1: 0.0,
            a2: 1.0,
            a4: 0.0,
        };
        assert!((choose_m(&c) - 2.2).abs() < 1e-15);
        let c2 = QConstants {
            a0: 0.0,
            a1: 0.0,
            a2: 0.0,
            a4: 5.0,
        };
        assert!((choose_m(&c2) - 50.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_tangential_and_consistent() {
        let fams = [
            bump(0.7),
            QFamily::CosineCap {
                amplitude: 1.0,
                width: 0.3,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for fam in &fams {
            for _ in 0..200 {
                let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if norm(&v) < 0.1 {
                    continue;
                }
                let y = Direction::normalized(&v).unwrap();
                let g = fam.gradient(&y);
                assert!(
                    dot(&g, y.coords()).abs() <= 1e-10,
                    "y.Dq = {}",
                    dot(&g, y.coords())
                );
                let fd = fam.gradient_fd(&y);
                for (a, b) in g.iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-6, "analytic {a} vs fd {b}");
                }
            }
        }
    }

    #[test]
    fn gradient_tangential_n3() {
        let fam = QFamily::CapBump {
            center: vec![0.6, 0.0, 0.8],
            radius: 0.7,
            amplitude: 1.3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if norm(&v) < 0.1 {
                continue;
            }
            let y = Direction::normalized(&v).unwrap();
            let g = fam.gradient(&y);
            assert!(dot(&g, y.coords()).abs() <= 1e-10);
            let fd = fam.gradient_fd(&y);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn cosine_cap_a0_at_least_one() {
        let f = LightlikeSet::half_sphere(2);
        let q = QFamily::CosineCap {
            amplitude: 1.0,
            width: 0.3,
        };
        let c = estimate_constants(&q, &f, 2048).unwrap();
        assert!(c.a0 >= 1.0 - 1e-6, "a0 = {}", c.a0);
        assert!(c.a1 > 0.0 && c.a2 > 0.0);
    }

    #[test]
    fn a2_scales_linearly_in_amplitude() {
        let f = LightlikeSet::new(
            vec![GeodesicCap::new(Direction::axis(2, 0), 0.9).unwrap()],
            0.5,
        )
        .unwrap();
        let c1 = estimate_constants(&bump(0.5), &f, 1024).unwrap();
        let c2 = estimate_constants(&bump(1.0), &f, 1024).unwrap();
        assert!(
            (c2.a2 / c1.a2 - 2.0).abs() < 1e-6,
            "ratio {}",
            c2.a2 / c1.a2
        );
    }

    #[test]
    fn a2_bound_holds_on_held_out_pairs() {
        let f = LightlikeSet::half_sphere(2);
        let q = bump(1.0);
        let c = estimate_constants(&q, &f, 2048).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..5000 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let b = a + rng.gen_range(-0.5..0.5);
            let x = Direction::new(vec![a.cos(), a.sin()]).unwrap();
            let y = Direction::new(vec![b.cos(), b.sin()]).unwrap();
            let dx = sub(x.coords(), y.coords());
            let lhs = (q.value(&x) - q.value(&y) - dot(&q.gradient(&y), &dx)).abs();
            assert!(
                lhs <= 1.05 * c.a2 * dot(&dx, &dx) + 1e-12,
                "pair violates (a2 = {}): lhs {} vs {}",
                c.a2,
                lhs,
                c.a2 * dot(&dx, &dx)
            );
        }
    }

    #[test]
    fn std1_bounds_on_held_out_samples() {
        let f = LightlikeSet::half_sphere(2);
        let q = QFamily::CosineCap {
            amplitude: 0.8,
            width: 0.25,
        };
        let c = estimate_constants(&q, &f, 4096).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5000 {
            let a: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let y = Direction::new(vec![a.cos(), a.sin()]).unwrap();
            let y1 = y.coords()[0].max(0.0);
            assert!(q.value(&y).abs() <= 1.05 * c.a0 * y1 * y1 + 1e-12);
            assert!(norm(&q.gradient(&y)) <= 1.05 * c.a1 * y1 + 1e-12);
        }
    }

    #[test]
    fn shift_maps_and_bounds() {
        let f = LightlikeSet::half_sphere(2);
        let p = Perturbation::new(bump(0.6), f, 1024).unwrap();
        let m = p.m_const;
        assert!(m > 2.0 * p.constants.a2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let y = Direction::new(vec![a.cos(), a.sin()]).unwrap();
            let pv = p.shift_p(&y);
            let ph = p.shift_p_hat(&y);
            // p - p_hat = 2 M y
            for i in 0..2 {
                assert!((pv[i] - ph[i] - 2.0 * m * y.coords()[i]).abs() < 1e-12);
            }
            assert!(norm(&pv) <= p.constants.a1 + m + 1e-9);
            assert!(norm(&ph) <= p.constants.a1 + m + 1e-9);
            // off F: Dq = 0, so p = M y
            if y.coords()[0] < -1e-6 {
                for i in 0..2 {
                    assert!((pv[i] - m * y.coords()[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn non_vanishing_q_rejected() {
        // a bump overhanging the boundary of F fails the C^{2,1}_0 proxy
        let f = LightlikeSet::new(
            vec![GeodesicCap::new(Direction::axis(2, 0), 0.5).unwrap()],
            0.3,
        )
        .unwrap();
        let q = bump(1.0); // radius 0.9 > 0.5: does not vanish on the boundary
        assert!(estimate_constants(&q, &f, 512).is_err());
    }
}
