//! Shared numerical kernels: quadrature, root finding, small-dimension
//! optimizers, Hermite tables, banded LU, and symmetric eigenvalues.
//!
//! Everything here is dimension-generic over slices; the callers never exceed
//! n = 4.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// small vector helpers
// ---------------------------------------------------------------------------

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Gauss-Kronrod 7-15 adaptive quadrature
// ---------------------------------------------------------------------------

// QK15 abscissae (positive half) and weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    (res_k * h, ((res_k - res_g) * h).abs(), res_abs * h.abs())
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The error budget is allocated proportionally to interval width, and
/// intervals whose error estimate sits at the f64 roundoff floor are
/// accepted outright; endpoint singularities of |x - c|^{-1/2} type are
/// resolved by bounded-depth bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let width = (b - a).abs();
    let tol = tol.max(1e-300);
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    let mut intervals = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        intervals += 1;
        if intervals > 400_000 {
            return Err(Error::numeric(format!(
                "integrate: interval budget exhausted on [{a:.6e}, {b:.6e}] (stuck near [{lo:.9e}, {hi:.9e}])"
            )));
        }
        let (val, err, resabs) = qk15(&f, lo, hi);
        if !val.is_finite() {
            return Err(Error::numeric(format!(
                "non-finite integrand on [{lo:.6e}, {hi:.6e}]"
            )));
        }
        let local_tol = tol * ((hi - lo).abs() / width);
        let floor = 50.0 * f64::EPSILON * resabs;
        if err <= local_tol.max(floor) || depth >= 48 {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// root finding
// ---------------------------------------------------------------------------

/// Grow a bracket geometrically around `x0` until `f` changes sign.
pub fn expand_bracket<F: Fn(f64) -> f64>(f: F, x0: f64, step0: f64) -> Result<(f64, f64)> {
    let f0 = f(x0);
    if f0 == 0.0 {
        return Ok((x0, x0));
    }
    let mut step = step0.abs().max(1e-12);
    for _ in 0..200 {
        let lo = x0 - step;
        let hi = x0 + step;
        let flo = f(lo);
        let fhi = f(hi);
        if flo == 0.0 {
            return Ok((lo, lo));
        }
        if fhi == 0.0 {
            return Ok((hi, hi));
        }
        if flo * f0 < 0.0 {
            return Ok((lo, x0));
        }
        if fhi * f0 < 0.0 {
            return Ok((x0, hi));
        }
        step *= 2.0;
    }
    Err(Error::numeric(
        "bracket expansion failed: no sign change after 200 doublings",
    ))
}

/// Safeguarded Newton on a bracketed root; falls back to bisection whenever a
/// Newton step leaves the bracket or stalls. `fdf` returns (value, derivative).
pub fn newton_bracketed<F: Fn(f64) -> (f64, f64)>(
    fdf: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if lo == hi {
        return Ok(lo);
    }
    let (mut flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::numeric("newton_bracketed: no sign change on bracket"));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx * flo < 0.0 {
            hi = x;
        } else {
            lo = x;
            flo = fx;
        }
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::numeric(format!(
        "newton_bracketed: no convergence (bracket width {:.3e})",
        hi - lo
    )))
}

/// Classic Brent root finder on a sign-changing bracket.
pub fn brent_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::numeric("brent_root: no sign change on bracket"));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0));
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1.copysign(xm)
        };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(Error::numeric("brent_root: iteration limit"))
}

// ---------------------------------------------------------------------------
// Nelder-Mead (minimization, dim <= 4)
// ---------------------------------------------------------------------------

pub struct NelderMead {
    pub max_iter: usize,
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_iter: 200,
            ftol: 1e-13,
            xtol: 1e-11,
        }
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        mut f: F,
        x0: &[f64],
        scale: f64,
    ) -> (Vec<f64>, f64) {
        let n = x0.len();
        if n == 0 {
            let v = f(x0);
            return (x0.to_vec(), v);
        }
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += scale;
            simplex.push(p);
        }
        let mut fv: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
        for _ in 0..self.max_iter {
            // order
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&i, &j| fv[i].partial_cmp(&fv[j]).unwrap_or(std::cmp::Ordering::Equal));
            let best = idx[0];
            let worst = idx[n];
            let second_worst = idx[n - 1];
            let spread = (fv[worst] - fv[best]).abs();
            let size: f64 = (0..n)
                .map(|d| {
                    simplex
                        .iter()
                        .map(|p| p[d])
                        .fold(f64::NEG_INFINITY, f64::max)
                        - simplex.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max);
            if spread < self.ftol && size < self.xtol {
                break;
            }
            // centroid of all but worst
            let mut cen = vec![0.0; n];
            for (i, p) in simplex.iter().enumerate() {
                if i != worst {
                    axpy(1.0 / n as f64, p, &mut cen);
                }
            }
            let refl: Vec<f64> = (0..n)
                .map(|d| cen[d] + (cen[d] - simplex[worst][d]))
                .collect();
            let fr = f(&refl);
            if fr < fv[best] {
                let exp: Vec<f64> = (0..n)
                    .map(|d| cen[d] + 2.0 * (cen[d] - simplex[worst][d]))
                    .collect();
                let fe = f(&exp);
                if fe < fr {
                    simplex[worst] = exp;
                    fv[worst] = fe;
                } else {
                    simplex[worst] = refl;
                    fv[worst] = fr;
                }
            } else if fr < fv[second_worst] {
                simplex[worst] = refl;
                fv[worst] = fr;
            } else {
                let contr: Vec<f64> = (0..n)
                    .map(|d| cen[d] + 0.5 * (simplex[worst][d] - cen[d]))
                    .collect();
                let fc = f(&contr);
                if fc < fv[worst] {
                    simplex[worst] = contr;
                    fv[worst] = fc;
                } else {
                    // shrink toward best
                    let b = simplex[best].clone();
                    for (i, p) in simplex.iter_mut().enumerate() {
                        if i != best {
                            for d in 0..n {
                                p[d] = b[d] + 0.5 * (p[d] - b[d]);
                            }
                            fv[i] = f(p);
                        }
                    }
                }
            }
        }
        let mut bi = 0;
        for i in 1..=n {
            if fv[i] < fv[bi] {
                bi = i;
            }
        }
        (simplex[bi].clone(), fv[bi])
    }
}

// ---------------------------------------------------------------------------
// BFGS (minimization with analytic gradient, dim <= 4)
// ---------------------------------------------------------------------------

pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize a smooth convex-ish function with BFGS and Armijo backtracking.
/// `fg` returns (value, gradient). Diverging iterates (|x| > escape) abort.
pub fn bfgs_minimize<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    mut fg: F,
    x0: &[f64],
    gtol: f64,
    max_iter: usize,
    escape: f64,
) -> Result<BfgsResult> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut gx) = fg(&x);
    // inverse Hessian approximation
    let mut h = vec![vec![0.0; n]; n];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it;
        let gn = norm(&gx);
        if gn <= gtol {
            return Ok(BfgsResult {
                x,
                value: fx,
                grad_norm: gn,
                iterations,
                converged: true,
            });
        }
        if norm(&x) > escape {
            return Err(Error::numeric(
                "bfgs_minimize: iterates diverged (objective appears unbounded)",
            ));
        }
        // direction p = -H g
        let mut p = vec![0.0; n];
        for i in 0..n {
            p[i] = -dot(&h[i], &gx);
        }
        let mut slope = dot(&p, &gx);
        if slope >= 0.0 {
            // reset to steepest descent
            for (i, row) in h.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { 0.0 };
                }
            }
            p = scaled(&gx, -1.0);
            slope = dot(&p, &gx);
        }
        // backtracking
        let mut t = 1.0;
        let mut xn;
        let mut fxn;
        let mut gxn;
        loop {
            xn = add(&x, &scaled(&p, t));
            let (f1, g1) = fg(&xn);
            fxn = f1;
            gxn = g1;
            if fxn <= fx + 1e-4 * t * slope || t < 1e-16 {
                break;
            }
            t *= 0.5;
        }
        if t < 1e-16 && fxn >= fx {
            // no progress possible
            return Ok(BfgsResult {
                x,
                value: fx,
                grad_norm: gn,
                iterations,
                converged: gn <= gtol * 10.0,
            });
        }
        // BFGS update
        let s = sub(&xn, &x);
        let yv = sub(&gxn, &gx);
        let sy = dot(&s, &yv);
        if sy > 1e-14 * norm(&s) * norm(&yv) {
            let rho = 1.0 / sy;
            // H = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let mut hy = vec![0.0; n];
            for i in 0..n {
                hy[i] = dot(&h[i], &yv);
            }
            let yhy = dot(&yv, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }
        x = xn;
        fx = fxn;
        gx = gxn;
    }
    let gn = norm(&gx);
    Ok(BfgsResult {
        x,
        value: fx,
        grad_norm: gn,
        iterations,
        converged: gn <= gtol,
    })
}

/// Maximize `fg` over the box `|x_i| <= side` by projected gradient ascent
/// with Barzilai-Borwein steps. Returns (x, value).
pub fn box_maximize<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    mut fg: F,
    x0: &[f64],
    side: f64,
    gtol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let clip = |x: &mut Vec<f64>| {
        for v in x.iter_mut() {
            *v = v.clamp(-side, side);
        }
    };
    let mut x = x0.to_vec();
    clip(&mut x);
    let (mut fx, mut gx) = fg(&x);
    let mut step = 1.0;
    let mut prev_x: Option<Vec<f64>> = None;
    let mut prev_g: Option<Vec<f64>> = None;
    for _ in 0..max_iter {
        // projected gradient
        let mut pg = 0.0;
        for i in 0..n {
            let free = (x[i] < side - 1e-15 || gx[i] < 0.0) && (x[i] > -side + 1e-15 || gx[i] > 0.0);
            if free {
                pg += gx[i] * gx[i];
            }
        }
        if pg.sqrt() <= gtol {
            break;
        }
        if let (Some(px), Some(pgr)) = (&prev_x, &prev_g) {
            let s = sub(&x, px);
            let yv = sub(&gx, pgr);
            let sy = -dot(&s, &yv); // ascent: g decreases along s for concave f
            let ss = dot(&s, &s);
            if sy > 1e-300 {
                step = (ss / sy).clamp(1e-12, 1e6);
            }
        }
        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            let mut xn = add(&x, &scaled(&gx, t));
            clip(&mut xn);
            let d = sub(&xn, &x);
            let gain_lin = dot(&gx, &d);
            if gain_lin <= 0.0 {
                break;
            }
            let (f1, g1) = fg(&xn);
            if f1 >= fx + 1e-4 * gain_lin {
                prev_x = Some(x.clone());
                prev_g = Some(gx.clone());
                x = xn;
                fx = f1;
                gx = g1;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, fx)
}

// ---------------------------------------------------------------------------
// cubic Hermite table on strictly increasing abscissae
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

impl HermiteTable {
    pub fn new(t: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != y.len() || t.len() != dy.len() {
            return Err(Error::domain("HermiteTable: inconsistent lengths"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("HermiteTable: abscissae not increasing"));
        }
        Ok(HermiteTable { t, y, dy })
    }

    pub fn t_min(&self) -> f64 {
        self.t[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// Index of the interval containing `x` (clamped).
    pub fn locate(&self, x: f64) -> usize {
        match self.t.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.t.len() - 2),
            Err(i) => i.clamp(1, self.t.len() - 1) - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.dy[i] * h, self.dy[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + m0 * (s3 - 2.0 * s2 + s)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + m1 * (s3 - s2)
    }
}

// ---------------------------------------------------------------------------
// banded LU with partial pivoting (LAPACK-style band storage)
// ---------------------------------------------------------------------------

pub struct BandedLu {
    n: usize,
    kl: usize,
    kv: usize, // kl + ku (upper bandwidth incl. fill)
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factor a banded matrix given by `entry(i, j)` for |i - j| within band.
    pub fn factor<F: Fn(usize, usize) -> f64>(
        n: usize,
        kl: usize,
        ku: usize,
        entry: F,
    ) -> Result<Self> {
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n - 1);
            for i in lo..=hi {
                ab[kv + i - j + j * ldab] = entry(i, j);
            }
        }
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = ab[kv + j * ldab].abs();
            for k in 1..=km {
                let v = ab[kv + k + j * ldab].abs();
                if v > best {
                    best = v;
                    jp = k;
                }
            }
            ipiv[j] = j + jp;
            let piv = ab[kv + jp + j * ldab];
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::numeric(format!(
                    "banded LU: zero/non-finite pivot at column {j}"
                )));
            }
            if jp != 0 {
                let cmax = (j + kv).min(n - 1);
                for c in j..=cmax {
                    let r1 = kv + j - c + c * ldab;
                    let r2 = kv + j + jp - c + c * ldab;
                    ab.swap(r1, r2);
                }
            }
            let pivot = ab[kv + j * ldab];
            for k in 1..=km {
                let m = ab[kv + k + j * ldab] / pivot;
                ab[kv + k + j * ldab] = m;
                let cmax = (j + kv).min(n - 1);
                for c in (j + 1)..=cmax {
                    let u = ab[kv + j - c + c * ldab];
                    ab[kv + (j + k) - c + c * ldab] -= m * u;
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            kv,
            ldab,
            ab,
            ipiv,
        })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let (n, kv, ldab) = (self.n, self.kv, self.ldab);
        // forward
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            for k in 1..=km {
                b[j + k] -= self.ab[kv + k + j * ldab] * b[j];
            }
        }
        // back substitution
        for j in (0..n).rev() {
            let cmax = (j + kv).min(n - 1);
            let mut s = b[j];
            for c in (j + 1)..=cmax {
                s -= self.ab[kv + j - c + c * ldab] * b[c];
            }
            b[j] = s / self.ab[kv + j * ldab];
        }
    }
}

// ---------------------------------------------------------------------------
// symmetric eigenvalues (Householder tridiagonalization + implicit QL)
// ---------------------------------------------------------------------------

/// Eigenvalues of a symmetric matrix (n <= 8), ascending.
pub fn sym_eigenvalues(a_in: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = a_in.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let mut a: Vec<Vec<f64>> = a_in.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    // Householder reduction (values only)
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        let mut scale = 0.0;
        if l > 0 {
            for k in 0..=l {
                scale += a[i][k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i][l];
            } else {
                for k in 0..=l {
                    a[i][k] /= scale;
                    h += a[i][k] * a[i][k];
                }
                let f = a[i][l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i][l] = f - g;
                let mut ff = 0.0;
                for j in 0..=l {
                    let mut g2 = 0.0;
                    for k in 0..=j {
                        g2 += a[j][k] * a[i][k];
                    }
                    for k in (j + 1)..=l {
                        g2 += a[k][j] * a[i][k];
                    }
                    e[j] = g2 / h;
                    ff += e[j] * a[i][j];
                }
                let hh = ff / (h + h);
                for j in 0..=l {
                    let f2 = a[i][j];
                    let g2 = e[j] - hh * f2;
                    e[j] = g2;
                    for k in 0..=j {
                        let delta = f2 * e[k] + g2 * a[i][k];
                        a[j][k] -= delta;
                    }
                }
            }
        } else {
            e[i] = a[i][l];
        }
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[i][i];
    }
    // shift e down: e[i] = subdiagonal between i and i+1
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // implicit QL with shifts
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::numeric("sym_eigenvalues: QL iteration limit"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(d)
}

// ---------------------------------------------------------------------------
// low-discrepancy direction lattices on S^{n-1}, n in {2, 3, 4}
// ---------------------------------------------------------------------------

/// Deterministic, roughly equidistributed directions on the unit sphere.
pub fn sphere_lattice(n: usize, count: usize) -> Vec<Vec<f64>> {
    assert!((2..=4).contains(&n), "sphere_lattice: n must be 2..=4");
    let mut out = Vec::with_capacity(count);
    match n {
        2 => {
            for i in 0..count {
                let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                out.push(vec![th.cos(), th.sin()]);
            }
        }
        3 => {
            const GOLD: f64 = 0.618_033_988_749_894_9;
            for i in 0..count {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let az = 2.0 * std::f64::consts::PI * ((i as f64 * GOLD) % 1.0);
                out.push(vec![r * az.cos(), r * az.sin(), z]);
            }
        }
        4 => {
            // Kronecker R3 sequence mapped through Hopf coordinates.
            const A1: f64 = 0.819_172_513_396_164_5;
            const A2: f64 = 0.671_043_606_703_789_3;
            const A3: f64 = 0.549_700_477_901_970_3;
            for i in 0..count {
                let u1 = (0.5 + (i as f64 + 1.0) * A1) % 1.0;
                let u2 = (0.5 + (i as f64 + 1.0) * A2) % 1.0;
                let u3 = (0.5 + (i as f64 + 1.0) * A3) % 1.0;
                let (sn, cn) = (u1.sqrt().asin().sin(), u1.sqrt().asin().cos());
                let x1 = 2.0 * std::f64::consts::PI * u2;
                let x2 = 2.0 * std::f64::consts::PI * u3;
                out.push(vec![cn * x1.cos(), cn * x1.sin(), sn * x2.cos(), sn * x2.sin()]);
            }
        }
        _ => unreachable!(),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_exact_on_polynomials() {
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-13).unwrap();
        // antiderivative x^4/4 - x^2 + x
        let exact = (81.0 / 4.0 - 9.0 + 3.0) - (1.0 / 4.0 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn quadrature_adaptive_sqrt_singularity() {
        let v = integrate(|x| x.abs().sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn brent_finds_cos_root() {
        let r = brent_root(|x| x.cos(), 1.0, 2.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn newton_bracketed_cubic() {
        let r = newton_bracketed(|x| (x * x * x - 8.0, 3.0 * x * x), 0.0, 10.0, 1e-14, 100).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nelder_mead_rosenbrock_2d() {
        let nm = NelderMead {
            max_iter: 4000,
            ..Default::default()
        };
        let (x, _) = nm.minimize(
            |p| {
                let (a, b) = (p[0], p[1]);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            &[-1.2, 1.0],
            0.5,
        );
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn bfgs_quadratic() {
        let res = bfgs_minimize(
            |x| {
                let g = vec![2.0 * (x[0] - 3.0), 8.0 * (x[1] + 1.0)];
                ((x[0] - 3.0).powi(2) + 4.0 * (x[1] + 1.0).powi(2), g)
            },
            &[0.0, 0.0],
            1e-12,
            200,
            1e9,
        )
        .unwrap();
        assert!(res.converged);
        assert!((res.x[0] - 3.0).abs() < 1e-9 && (res.x[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn box_maximize_clips_to_boundary() {
        // maximize x + y on [-2,2]^2 -> corner (2, 2)
        let (x, v) = box_maximize(
            |p| (p[0] + p[1], vec![1.0, 1.0]),
            &[0.0, 0.0],
            2.0,
            1e-12,
            200,
        );
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 2.0).abs() < 1e-9);
        assert!((v - 4.0).abs() < 1e-9);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let f = |x: f64| x * x * x - x;
        let df = |x: f64| 3.0 * x * x - 1.0;
        let tab = HermiteTable::new(
            t.clone(),
            t.iter().map(|&x| f(x)).collect(),
            t.iter().map(|&x| df(x)).collect(),
        )
        .unwrap();
        for i in 0..=60 {
            let x = i as f64 * 0.05;
            assert!((tab.eval(x) - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_lu_matches_dense_reference() {
        // random-ish banded system, compare with naive dense Gaussian elimination
        let n = 40;
        let (kl, ku) = (3, 2);
        let entry = |i: usize, j: usize| -> f64 {
            if j + kl < i || i + ku < j {
                0.0
            } else {
                let s = (i * 31 + j * 17 + 7) % 23;
                s as f64 / 7.0 - 1.3 + if i == j { 9.0 } else { 0.0 }
            }
        };
        let lu = BandedLu::factor(n, kl, ku, entry).unwrap();
        let xtrue: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        for (i, bi) in b.iter_mut().enumerate() {
            for (j, xj) in xtrue.iter().enumerate() {
                *bi += entry(i, j) * xj;
            }
        }
        lu.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - xtrue[i]).abs() < 1e-10, "i={i}: {} vs {}", b[i], xtrue[i]);
        }
    }

    #[test]
    fn eigenvalues_match_invariants() {
        let a = vec![
            vec![4.0, 1.0, -2.0, 0.3],
            vec![1.0, 3.0, 0.5, -0.7],
            vec![-2.0, 0.5, 5.0, 1.1],
            vec![0.3, -0.7, 1.1, 2.0],
        ];
        let ev = sym_eigenvalues(&a).unwrap();
        let trace: f64 = (0..4).map(|i| a[i][i]).sum();
        let det = {
            // dense determinant by elimination
            let mut m = a.clone();
            let mut d = 1.0;
            for c in 0..4 {
                let mut p = c;
                for r in c + 1..4 {
                    if m[r][c].abs() > m[p][c].abs() {
                        p = r;
                    }
                }
                if p != c {
                    m.swap(p, c);
                    d = -d;
                }
                d *= m[c][c];
                for r in c + 1..4 {
                    let f = m[r][c] / m[c][c];
                    for k in c..4 {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
            d
        };
        let s1: f64 = ev.iter().sum();
        let s4: f64 = ev.iter().product();
        assert!((s1 - trace).abs() < 1e-10);
        assert!((s4 - det).abs() < 1e-9);
    }

    #[test]
    fn lattice_points_are_unit() {
        for n in 2..=4 {
            for p in sphere_lattice(n, 64) {
                assert!((norm(&p) - 1.0).abs() < 1e-12);
            }
        }
    }
}
