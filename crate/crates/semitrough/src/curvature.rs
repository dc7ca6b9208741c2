//! Elementary symmetric functions, principal curvatures of spacelike graphs
//! (rotational closed form and a finite-difference verifier), and the dual
//! Hessian-quotient operator on the unit ball.

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, sym_eigenvalues};
use crate::profile::ProfileSolution;

/// sigma_k of the values, via the coefficients of prod (1 + v_i t).
pub fn sigma(k: usize, values: &[f64]) -> Result<f64> {
    let n = values.len();
    if k > n {
        return Err(Error::domain(format!("sigma: k = {k} out of range for n = {n}")));
    }
    let mut coeff = vec![0.0; n + 1];
    coeff[0] = 1.0;
    for (i, &v) in values.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            coeff[j] += v * coeff[j - 1];
        }
    }
    Ok(coeff[k])
}

pub fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Normalized symmetric means (sigma_l / binom(n,l))^{1/l} for l = 1..=n,
/// verified non-increasing (Maclaurin).
pub fn maclaurin_check(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::domain("maclaurin_check: values must be positive"));
    }
    let n = values.len();
    let mut means = Vec::with_capacity(n);
    for l in 1..=n {
        let s = sigma(l, values)?;
        means.push((s / binomial(n, l)).powf(1.0 / l as f64));
    }
    for w in means.windows(2) {
        if w[1] > w[0] * (1.0 + 1e-12) {
            return Err(Error::numeric(format!(
                "maclaurin_check: means not non-increasing: {} < {}",
                w[0], w[1]
            )));
        }
    }
    Ok(means)
}

/// Principal curvatures and sigma_k data at one point of a graph.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    pub kappas: Vec<f64>,
    pub sigma_k: f64,
    pub target: f64,
    pub residual: f64,
}

/// Closed-form principal curvatures of the rotational graph
/// z = sqrt(f(x1)^2 + |xbar|^2):
/// kappa_1 = f'' / (1 - f'^2)^{3/2}, kappa_2..n = 1 / (f (1 - f'^2)^{1/2}).
/// They depend on x1 only; `xbar_norm` just places the report point.
pub fn rotational_curvatures(sol: &ProfileSolution, t: f64, xbar_norm: f64) -> Result<CurvatureReport> {
    let p = &sol.params;
    let (f, fp, fpp) = sol.eval(t);
    let w2 = 1.0 - fp * fp;
    if w2 <= 0.0 {
        return Err(Error::numeric("rotational_curvatures: |f'| >= 1"));
    }
    let k1 = fpp / w2.powf(1.5);
    let krest = 1.0 / (f * w2.sqrt());
    let mut kappas = vec![k1];
    kappas.extend(std::iter::repeat(krest).take(p.n - 1));
    let s = sigma(p.k, &kappas)?;
    let target = binomial(p.n, p.k);
    let mut point = vec![t];
    point.push(xbar_norm);
    Ok(CurvatureReport {
        point,
        kappas,
        sigma_k: s,
        target,
        residual: (s - target).abs(),
    })
}

/// Principal curvatures of a spacelike graph u from central differences:
/// eigenvalues of (1/w) gamma D2u gamma with w = sqrt(1 - |Du|^2) and
/// gamma = I + Du Du^T / (w (1 + w)). The rotational specialization
/// reproduces `rotational_curvatures`.
pub fn graph_curvatures<F: Fn(&[f64]) -> f64>(
    u: F,
    x: &[f64],
    k: usize,
    h: f64,
) -> Result<CurvatureReport> {
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    let u0 = u(x);
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let (up, um) = (u(&xp), u(&xm));
        grad[i] = (up - um) / (2.0 * h);
        hess[i][i] = (up - 2.0 * u0 + um) / (h * h);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut xpp = x.to_vec();
            let mut xpm = x.to_vec();
            let mut xmp = x.to_vec();
            let mut xmm = x.to_vec();
            xpp[i] += h;
            xpp[j] += h;
            xpm[i] += h;
            xpm[j] -= h;
            xmp[i] -= h;
            xmp[j] += h;
            xmm[i] -= h;
            xmm[j] -= h;
            let v = (u(&xpp) - u(&xpm) - u(&xmp) + u(&xmm)) / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    let g2 = dot(&grad, &grad);
    if g2 >= (1.0 - 1e-6) * (1.0 - 1e-6) {
        return Err(Error::numeric(format!(
            "graph_curvatures: near-lightlike gradient |Du| = {:.8}",
            g2.sqrt()
        )));
    }
    let w = (1.0 - g2).sqrt();
    // gamma = I + Du Du^T / (w (1 + w)); kappa = eig(gamma D2u gamma / w)
    let mut gamma = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            gamma[i][j] = if i == j { 1.0 } else { 0.0 };
            gamma[i][j] += grad[i] * grad[j] / (w * (1.0 + w));
        }
    }
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for p in 0..n {
                for q in 0..n {
                    s += gamma[i][p] * hess[p][q] * gamma[q][j];
                }
            }
            a[i][j] = s / w;
        }
    }
    let kappas = sym_eigenvalues(&a)?;
    let s = sigma(k, &kappas)?;
    let target = binomial(n, k);
    Ok(CurvatureReport {
        point: x.to_vec(),
        kappas,
        sigma_k: s,
        target,
        residual: (s - target).abs(),
    })
}

/// Dual operator value at a point of the unit ball.
#[derive(Debug, Clone)]
pub struct DualOperatorValue {
    pub xi: Vec<f64>,
    pub kappas: Vec<f64>,
    pub value: f64,
    pub target: f64,
}

/// gamma*_{ij} = delta_ij - xi_i xi_j / (1 + w*), w* = sqrt(1 - |xi|^2).
pub fn dual_gamma(xi: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let n = xi.len();
    let w = (1.0 - dot(xi, xi)).max(0.0).sqrt();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = if i == j { 1.0 } else { 0.0 };
            g[i][j] -= xi[i] * xi[j] / (1.0 + w);
        }
    }
    (w, g)
}

/// F(w* gamma* D2u* gamma*) = (sigma_n / sigma_{n-k})^{1/k} of the
/// eigenvalues, with the Hessian supplied explicitly.
pub fn dual_operator_from_hessian(xi: &[f64], hess: &[Vec<f64>], k: usize) -> Result<DualOperatorValue> {
    let n = xi.len();
    if norm(xi) >= 1.0 {
        return Err(Error::domain("dual_operator: xi outside the open unit ball"));
    }
    let (w, g) = dual_gamma(xi);
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for p in 0..n {
                for q in 0..n {
                    s += g[i][p] * hess[p][q] * g[q][j];
                }
            }
            a[i][j] = w * s;
        }
    }
    let kappas = sym_eigenvalues(&a)?;
    let s_n = sigma(n, &kappas)?;
    let s_nk = sigma(n - k, &kappas)?;
    if s_nk <= 0.0 {
        return Err(Error::numeric(format!(
            "dual_operator: sigma_(n-k) = {s_nk} <= 0 (outside the admissible cone)"
        )));
    }
    let value = (s_n / s_nk).powf(1.0 / k as f64);
    Ok(DualOperatorValue {
        xi: xi.to_vec(),
        kappas,
        value,
        target: binomial(n, k).powf(-1.0 / k as f64),
    })
}

/// F(w* gamma* D2u* gamma*) with the Hessian from central differences of a
/// callable on the disc.
pub fn dual_operator<F: Fn(&[f64]) -> f64>(
    ustar: F,
    xi: &[f64],
    k: usize,
    h: f64,
) -> Result<DualOperatorValue> {
    let n = xi.len();
    let u0 = ustar(xi);
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut xp = xi.to_vec();
        let mut xm = xi.to_vec();
        xp[i] += h;
        xm[i] -= h;
        hess[i][i] = (ustar(&xp) - 2.0 * u0 + ustar(&xm)) / (h * h);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut xpp = xi.to_vec();
            let mut xpm = xi.to_vec();
            let mut xmp = xi.to_vec();
            let mut xmm = xi.to_vec();
            xpp[i] += h;
            xpp[j] += h;
            xpm[i] += h;
            xpm[j] -= h;
            xmp[i] -= h;
            xmp[j] += h;
            xmm[i] -= h;
            xmm[j] -= h;
            let v = (ustar(&xpp) - ustar(&xpm) - ustar(&xmp) + ustar(&xmm)) / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    dual_operator_from_hessian(xi, &hess, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{solve_default, ProfileSolution};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigma_small_cases() {
        // sigma_2(1,2,3) = 2 + 3 + 6 = 11 (pair enumeration oracle)
        assert!((sigma(2, &[1.0, 2.0, 3.0]).unwrap() - 11.0).abs() < 1e-14);
        assert!((sigma(1, &[1.0, 2.0, 3.0]).unwrap() - 6.0).abs() < 1e-14);
        assert!((sigma(3, &[1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-14);
        assert!((sigma(2, &[1.0, 1.0, 1.0, 1.0]).unwrap() - 6.0).abs() < 1e-14);
        assert!(sigma(4, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sigma_matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(2..=4usize);
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for k in 1..=n {
                let mut brute = 0.0;
                for mask in 0u32..(1 << n) {
                    if mask.count_ones() as usize == k {
                        let mut p = 1.0;
                        for (i, v) in vals.iter().enumerate() {
                            if mask & (1 << i) != 0 {
                                p *= v;
                            }
                        }
                        brute += p;
                    }
                }
                let s = sigma(k, &vals).unwrap();
                assert!((s - brute).abs() < 1e-12 * (1.0 + brute.abs()));
            }
        }
    }

    #[test]
    fn maclaurin_means_decreasing() {
        let means = maclaurin_check(&[1.0, 2.0, 3.0]).unwrap();
        assert!((means[0] - 2.0).abs() < 1e-14);
        assert!((means[1] - (11.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((means[2] - 6.0f64.powf(1.0 / 3.0)).abs() < 1e-14);
        let ones = maclaurin_check(&[1.0; 4]).unwrap();
        for m in ones {
            assert!((m - 1.0).abs() < 1e-14);
        }
        assert!(maclaurin_check(&[1.0, -0.5]).is_err());
        // property sweep
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let n = rng.gen_range(2..=4usize);
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..10.0)).collect();
            maclaurin_check(&vals).unwrap();
        }
    }

    #[test]
    fn rotational_identity_along_profile() {
        for (n, k) in [(2, 1), (3, 2), (3, 3), (4, 2)] {
            let sol = solve_default(n, k).unwrap();
            for t in [-30.0, -5.0, -1.0, 0.0, 1.0, 5.0, 30.0] {
                let rep = rotational_curvatures(&sol, t, 0.7).unwrap();
                assert!(
                    rep.residual <= 1e-8,
                    "(n,k)=({n},{k}), t={t}: residual {}",
                    rep.residual
                );
            }
        }
    }

    #[test]
    fn rotational_unit_hyperboloid() {
        let sol = ProfileSolution::hyperboloid(3, 2).unwrap();
        let rep = rotational_curvatures(&sol, 1.3, 0.0).unwrap();
        for k in &rep.kappas {
            assert!((k - 1.0).abs() < 1e-12);
        }
        assert!((rep.sigma_k - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotational_example_n2_k1() {
        // at f = 1, f' = 0.6: kappa_2 = 1.25, kappa_1 = 2 - 1.25 = 0.75
        let sol = solve_default(2, 1).unwrap();
        let t1 = sol.time_of_height(1.0).unwrap();
        let rep = rotational_curvatures(&sol, t1, 0.0).unwrap();
        let mut ks = rep.kappas.clone();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ks[0] - 0.75).abs() < 1e-8, "kappa_1 = {}", ks[0]);
        assert!((ks[1] - 1.25).abs() < 1e-8, "kappa_2 = {}", ks[1]);
    }

    #[test]
    fn rotational_deep_tail_limit() {
        // t -> -inf: kappa_2..n -> 1/l_k, sigma_k residual -> 0
        let sol = solve_default(3, 1).unwrap();
        let rep = rotational_curvatures(&sol, -30.0, 0.0).unwrap();
        assert!(rep.residual < 1e-8);
        let l = sol.params.l_k;
        assert!((rep.kappas.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 1.0 / l).abs() < 1e-6);
    }

    #[test]
    fn graph_curvatures_hyperboloid() {
        let u = |x: &[f64]| (1.0 + dot(x, x)).sqrt();
        for x in [vec![0.0, 0.0], vec![0.5, -0.3], vec![2.0, 1.0]] {
            let rep = graph_curvatures(&u, &x, 1, 1e-3).unwrap();
            for kap in &rep.kappas {
                assert!((kap - 1.0).abs() < 1e-5, "kappa {kap}");
            }
        }
    }

    #[test]
    fn graph_curvatures_affine_is_flat() {
        let u = |x: &[f64]| 0.3 * x[0] - 0.2 * x[1] + 1.0;
        let rep = graph_curvatures(&u, &[0.4, -1.0], 1, 1e-3).unwrap();
        assert!(rep.sigma_k.abs() < 1e-8);
    }

    #[test]
    fn graph_curvatures_rejects_lightlike() {
        let u = |x: &[f64]| 0.9999999 * x[0];
        assert!(graph_curvatures(&u, &[0.0, 0.0], 1, 1e-4).is_err());
    }

    #[test]
    fn graph_matches_rotational_on_semitrough() {
        let sol = solve_default(2, 1).unwrap();
        let u = |x: &[f64]| {
            let (f, _, _) = sol.eval(x[0]);
            (f * f + x[1] * x[1]).sqrt()
        };
        let x = vec![0.7, 1.1];
        let rep = graph_curvatures(&u, &x, 1, 1e-3).unwrap();
        let rot = rotational_curvatures(&sol, 0.7, 1.1).unwrap();
        assert!(
            (rep.sigma_k - rot.sigma_k).abs() < 1e-3,
            "fd {} vs rotational {}",
            rep.sigma_k,
            rot.sigma_k
        );
        // O(h^2) improvement
        let rep2 = graph_curvatures(&u, &x, 1, 5e-4).unwrap();
        assert!(rep2.residual < rep.residual);
    }

    #[test]
    fn dual_operator_hyperboloid_dual() {
        // u*(xi) = -sqrt(1 - |xi|^2): A = I, F = (1/binom(n,k))^{1/k}
        let ustar = |xi: &[f64]| -(1.0 - dot(xi, xi)).sqrt();
        for k in [1, 2] {
            for xi in [vec![0.0, 0.0], vec![0.5, 0.0], vec![0.3, -0.35]] {
                let v = dual_operator(&ustar, &xi, k, 1e-4).unwrap();
                assert!(
                    (v.value - v.target).abs() < 1e-6,
                    "k={k} xi={xi:?}: {} vs {}",
                    v.value,
                    v.target
                );
                for kap in &v.kappas {
                    assert!((kap - 1.0).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn dual_operator_exact_hessian_identity() {
        // analytic Hessian of -sqrt(1-|xi|^2): (w^2 I + xi xi^T)/w^3
        for xi in [vec![0.0, 0.0], vec![0.5, 0.0], vec![0.2, 0.6]] {
            let w2 = 1.0 - dot(&xi, &xi);
            let w = w2.sqrt();
            let mut hess = vec![vec![0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    hess[i][j] = (if i == j { w2 } else { 0.0 }) + xi[i] * xi[j];
                    hess[i][j] /= w2 * w;
                }
            }
            let v = dual_operator_from_hessian(&xi, &hess, 2).unwrap();
            assert!((v.value - v.target).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_gamma_determinant_is_w() {
        // n = 2: det(gamma*) = w* (sampled identity)
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let r: f64 = rng.gen_range(0.0..0.999);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let xi = vec![r * th.cos(), r * th.sin()];
            let (w, g) = dual_gamma(&xi);
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            assert!((det - w).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_operator_rotation_invariance() {
        // conjugating xi by a rotation permutes the eigenvalues only
        let ustar = |xi: &[f64]| -(1.0 - dot(xi, xi)).sqrt() + 0.1 * (xi[0] * xi[0] - xi[1] * xi[1]);
        let r = 0.4;
        let a = dual_operator(&ustar, &[r, 0.0], 1, 1e-4);
        let ustar_rot = |xi: &[f64]| {
            // rotate by 90 degrees: (x, y) -> (y, -x)
            let rot = [xi[1], -xi[0]];
            -(1.0 - dot(&rot, &rot)).sqrt() + 0.1 * (rot[0] * rot[0] - rot[1] * rot[1])
        };
        let b = dual_operator(&ustar_rot, &[0.0, r], 1, 1e-4);
        if let (Ok(a), Ok(b)) = (a, b) {
            for (x, y) in a.kappas.iter().zip(b.kappas.iter()) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sigma_outside_cone_error() {
        let hess = vec![vec![-1.0, 0.0], vec![0.0, -1.0]];
        assert!(dual_operator_from_hessian(&[0.0, 0.0], &hess, 1).is_err());
    }
}
