//! The rotationally reduced profile f_k: the increasing solution of
//!
//!   k f'' / (f^{k-1} (1 - f'^2)^{k/2+1}) + (n-k) / (f^k (1 - f'^2)^{k/2}) = n
//!
//! computed through its autonomous first integral
//!
//!   (1 - f'^2)^{-k/2} = y^k + c_k y^{-(n-k)},   y = f(t),
//!
//! and normalized so that f is asymptotic to the unit hyperboloid
//! b(t) = sqrt(1 + t^2) at t -> +infinity.
//!
//! The slope variable is stored as w2 = 1 - f'^2 = phi(y)^{-2/k}; this keeps
//! the first-integral residual at machine precision where f' is within an
//! ulp of 1, and the strict bound f < b is certified through the positive
//! tail integral R(y) = f^{-1}(y) - b^{-1}(y) rather than by subtracting two
//! nearly equal heights.

use crate::error::{Error, Result};
use crate::numerics::{integrate, HermiteTable};

/// Parameters of the profile ODE (dimension n, curvature order k).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    pub n: usize,
    pub k: usize,
    /// Limit of f at t -> -infinity: ((n-k)/n)^{1/k}.
    pub l_k: f64,
    /// First-integral constant c_k = l_k^{n-k} (1 - l_k^k).
    pub c_k: f64,
    /// Reference mode: c = 0, y0 = 1, f = b exactly.
    pub hyperboloid: bool,
}

impl ProfileParams {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("ProfileParams: n must be >= 2"));
        }
        if k == 0 || k > n {
            return Err(Error::domain("ProfileParams: k must satisfy 1 <= k <= n"));
        }
        let l_k = (((n - k) as f64) / n as f64).powf(1.0 / k as f64);
        let c_k = if k == n {
            1.0
        } else {
            (k as f64 / n as f64) * l_k.powi((n - k) as i32)
        };
        Ok(ProfileParams {
            n,
            k,
            l_k,
            c_k,
            hyperboloid: false,
        })
    }

    /// Hyperboloid reference (c = 0, y0 = 1): the exact solution f = b.
    pub fn hyperboloid(n: usize, k: usize) -> Result<Self> {
        let mut p = ProfileParams::new(n, k)?;
        p.l_k = 1.0;
        p.c_k = 0.0;
        p.hyperboloid = true;
        Ok(p)
    }

    fn m(&self) -> i32 {
        (self.n - self.k) as i32
    }

    /// phi(y) - 1 evaluated stably (Taylor near the minimum y = l_k).
    fn phi_minus_one(&self, y: f64) -> f64 {
        if self.hyperboloid {
            return (self.k as f64 * y.ln()).exp_m1();
        }
        if self.k == self.n {
            // phi = y^n + 1 exactly
            return y.powi(self.n as i32);
        }
        let l = self.l_k;
        let z = y - l;
        if z < 1e-3 {
            let d2 = self.phi_d2_at_l();
            let d3 = self.phi_d3_at_l();
            let d4 = self.phi_d4_at_l();
            z * z * (0.5 * d2 + z * (d3 / 6.0 + z * d4 / 24.0))
        } else {
            y.powi(self.k as i32) + self.c_k * y.powi(-self.m()) - 1.0
        }
    }

    fn phi_d2_at_l(&self) -> f64 {
        let (k, m, l, c) = (self.k as f64, self.m() as f64, self.l_k, self.c_k);
        k * (k - 1.0) * l.powf(k - 2.0) + m * (m + 1.0) * c * l.powf(-m - 2.0)
    }

    fn phi_d3_at_l(&self) -> f64 {
        let (k, m, l, c) = (self.k as f64, self.m() as f64, self.l_k, self.c_k);
        k * (k - 1.0) * (k - 2.0) * l.powf(k - 3.0) - m * (m + 1.0) * (m + 2.0) * c * l.powf(-m - 3.0)
    }

    fn phi_d4_at_l(&self) -> f64 {
        let (k, m, l, c) = (self.k as f64, self.m() as f64, self.l_k, self.c_k);
        k * (k - 1.0) * (k - 2.0) * (k - 3.0) * l.powf(k - 4.0)
            + m * (m + 1.0) * (m + 2.0) * (m + 3.0) * c * l.powf(-m - 4.0)
    }

    /// Linearized slope rate near y = l_k: u ~ mu (y - l_k) (for k < n).
    pub fn mu(&self) -> f64 {
        (self.phi_d2_at_l() / self.k as f64).sqrt()
    }

    fn beta(&self) -> f64 {
        self.phi_d3_at_l() / (6.0 * self.phi_d2_at_l())
    }

    /// Stable first-integral data at height y > l_k:
    /// (phi - 1, w2 = phi^{-2/k}, u = sqrt(1 - w2)).
    pub fn slope_data(&self, y: f64) -> Result<(f64, f64, f64)> {
        if !(y > self.l_k) || !y.is_finite() {
            return Err(Error::domain(format!(
                "first integral: y = {y} not above l_k = {}",
                self.l_k
            )));
        }
        let pm1 = self.phi_minus_one(y);
        let e = (-2.0 / self.k as f64) * pm1.ln_1p();
        let w2 = e.exp();
        let u = (-e.exp_m1()).max(0.0).sqrt();
        Ok((pm1, w2, u))
    }
}

/// First integral: phi = y^k + c_k y^{-(n-k)} and slope u = sqrt(1 - phi^{-2/k}).
pub fn first_integral(params: &ProfileParams, y: f64) -> Result<(f64, f64)> {
    let (pm1, _, u) = params.slope_data(y)?;
    Ok((1.0 + pm1, u))
}

/// Lower tail model (analytic continuation of the table for t < t_min).
#[derive(Debug, Clone)]
enum LowerTail {
    /// k < n: y = l + z with z/(1 + beta z) = C exp(mu t).
    Exponential {
        t0: f64,
        z0: f64,
        mu: f64,
        beta: f64,
    },
    /// k = n = 2: y = y0 exp(t - t0).
    LogLinear { t0: f64, y0: f64 },
    /// k = n >= 3: y^{-(n-2)/2} = p0 + sigma (t0 - t).
    PowerLaw { t0: f64, p0: f64, sigma: f64 },
}

/// Tabulated profile with derivative access and asymptotic tail models.
#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub params: ProfileParams,
    t_nodes: Vec<f64>,
    y_nodes: Vec<f64>,
    u_nodes: Vec<f64>,
    w2_nodes: Vec<f64>,
    /// Tail integral R(y) = f^{-1}(y) - b^{-1}(y) for nodes with y >= 1.
    r_nodes: Vec<f64>,
    /// Stable per-node gap b(t) - f(t) for nodes with y >= 1.
    gap_nodes: Vec<f64>,
    idx_one: usize,
    t_to_y: HermiteTable,
    y_to_t: HermiteTable,
    /// Constant in the upper tail model f = b - C t^{-(n+1)}.
    c_upper: f64,
    lower: LowerTail,
}

const Z_SWITCH: f64 = 1e-4;

impl ProfileSolution {
    /// Exact hyperboloid reference solution f = b.
    pub fn hyperboloid(n: usize, k: usize) -> Result<Self> {
        let params = ProfileParams::hyperboloid(n, k)?;
        // minimal stub table (never consulted: eval short-circuits)
        let t_nodes = vec![0.0, 1.0];
        let y_nodes = vec![1.0, std::f64::consts::SQRT_2];
        let u_nodes = vec![0.0, 1.0 / std::f64::consts::SQRT_2];
        let w2_nodes = vec![1.0, 0.5];
        let t_to_y = HermiteTable::new(t_nodes.clone(), y_nodes.clone(), u_nodes.clone())?;
        let y_to_t = HermiteTable::new(y_nodes.clone(), t_nodes.clone(), vec![1.0, 1.0])?;
        Ok(ProfileSolution {
            params,
            t_nodes,
            y_nodes,
            u_nodes,
            w2_nodes,
            r_nodes: vec![],
            gap_nodes: vec![],
            idx_one: 0,
            t_to_y,
            y_to_t,
            c_upper: 0.0,
            lower: LowerTail::LogLinear { t0: 0.0, y0: 1.0 },
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_nodes[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.t_nodes.last().unwrap()
    }

    pub fn node_count(&self) -> usize {
        self.t_nodes.len()
    }

    /// (t, y, u, w2) at node i.
    pub fn node(&self, i: usize) -> (f64, f64, f64, f64) {
        (self.t_nodes[i], self.y_nodes[i], self.u_nodes[i], self.w2_nodes[i])
    }

    /// Relative first-integral residual |w2^{-k/2} - phi| / phi at node i.
    pub fn node_residual(&self, i: usize) -> f64 {
        let p = &self.params;
        let phi = 1.0 + p.phi_minus_one(self.y_nodes[i]);
        let lhs = self.w2_nodes[i].powf(-(p.k as f64) / 2.0);
        ((lhs - phi) / phi).abs()
    }

    pub fn max_node_residual(&self) -> f64 {
        (0..self.node_count())
            .map(|i| self.node_residual(i))
            .fold(0.0, f64::max)
    }

    /// Stable margins for the strict bounds max{l_k, t} < f(t) < b(t) at
    /// node i; both must be positive.
    pub fn bound_margins(&self, i: usize) -> (f64, f64) {
        let (t, y) = (self.t_nodes[i], self.y_nodes[i]);
        // f > max(l, t): the binding side is y - t once t > l
        let lower = if y >= 1.0 {
            // y - t = 1/(y + sqrt(y^2-1)) - R  (t = sqrt(y^2-1) + R)
            let r = self.r_nodes[i - self.idx_one];
            1.0 / (y + (y * y - 1.0).sqrt()) - r
        } else {
            (y - t).min(y - self.params.l_k)
        };
        let upper = if y >= 1.0 {
            self.r_nodes[i - self.idx_one]
        } else {
            (1.0 + t * t).sqrt() - y
        };
        (lower.min(y - self.params.l_k), upper)
    }

    /// f^{-1}(y) within the table range.
    pub fn time_of_height(&self, y: f64) -> Result<f64> {
        if self.params.hyperboloid {
            if y < 1.0 {
                return Err(Error::domain("time_of_height: y < 1 on hyperboloid"));
            }
            return Ok((y * y - 1.0).sqrt());
        }
        if y < self.y_nodes[0] || y > *self.y_nodes.last().unwrap() {
            return Err(Error::domain("time_of_height: y outside table range"));
        }
        Ok(self.y_to_t.eval(y))
    }

    /// (f, f', f'') at any real t; the table is continued by the tail models.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let p = &self.params;
        if p.hyperboloid {
            let b = (1.0 + t * t).sqrt();
            return (b, t / b, (1.0 + t * t).powf(-1.5));
        }
        if t < self.t_nodes[0] {
            return self.eval_lower_tail(t);
        }
        let y = if t > *self.t_nodes.last().unwrap() {
            let b = (1.0 + t * t).sqrt();
            b - self.c_upper * t.powi(-(p.n as i32) - 1)
        } else {
            self.t_to_y.eval(t)
        };
        let (_, w2, u) = p
            .slope_data(y.max(p.l_k + 1e-300))
            .unwrap_or((0.0, 1.0, 0.0));
        let fpp = self.fpp_from_ode(y, w2);
        (y, u, fpp)
    }

    fn eval_lower_tail(&self, t: f64) -> (f64, f64, f64) {
        let p = &self.params;
        match &self.lower {
            LowerTail::Exponential { t0, z0, mu, beta } => {
                let w = z0 / (1.0 + beta * z0) * (mu * (t - t0)).exp();
                let z = w / (1.0 - beta * w);
                let u = mu * z * (1.0 + beta * z);
                (p.l_k + z, u, mu * mu * z)
            }
            LowerTail::LogLinear { t0, y0 } => {
                let y = y0 * (t - t0).exp();
                // n = k = 2: u = y / sqrt(1 + y^2) exactly
                let u = y / (1.0 + y * y).sqrt();
                (y, u, y)
            }
            LowerTail::PowerLaw { t0, p0, sigma } => {
                let n = p.n as f64;
                let pp = p0 + sigma * (t0 - t);
                let y = pp.powf(-2.0 / (n - 2.0));
                let u = (2.0 / n).sqrt() * y.powf(n / 2.0);
                (y, u, y.powf(n - 1.0))
            }
        }
    }

    /// f'' solved from the curvature ODE given (f, w2 = 1 - f'^2).
    fn fpp_from_ode(&self, y: f64, w2: f64) -> f64 {
        let p = &self.params;
        let (nf, kf) = (p.n as f64, p.k as f64);
        let wk = w2.powf(kf / 2.0);
        let rest = (nf - kf) / (y.powi(p.k as i32) * wk);
        (nf - rest) * y.powf(kf - 1.0) * w2.powf((kf + 2.0) / 2.0) / kf
    }

    /// b(t) - f(t) for t > 0; uses the cancellation-safe per-node gaps deep
    /// in the tail.
    pub fn asymptotic_gap(&self, t: f64) -> f64 {
        if self.params.hyperboloid {
            return 0.0;
        }
        let b = (1.0 + t * t).sqrt();
        if t > *self.t_nodes.last().unwrap() {
            return self.c_upper * t.powi(-(self.params.n as i32) - 1);
        }
        let (f, _, _) = self.eval(t);
        let direct = b - f;
        if direct > 1e-8 || t < self.t_nodes[self.idx_one] {
            return direct;
        }
        // log-linear interpolation of the stable node gaps
        let i = self.t_to_y.locate(t).max(self.idx_one);
        let j = i - self.idx_one;
        if j + 1 >= self.gap_nodes.len() {
            return *self.gap_nodes.last().unwrap();
        }
        let (t0, t1) = (self.t_nodes[i], self.t_nodes[i + 1]);
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let (g0, g1) = (self.gap_nodes[j], self.gap_nodes[j + 1]);
        (g0.ln() * (1.0 - s) + g1.ln() * s).exp()
    }

    /// Least-squares slope of log(b - f) vs log t over t in [t_lo, t_hi].
    pub fn tail_log_slope(&self, t_lo: f64, t_hi: f64, samples: usize) -> f64 {
        let mut xs = Vec::with_capacity(samples);
        let mut ys = Vec::with_capacity(samples);
        for i in 0..samples {
            let t = t_lo * (t_hi / t_lo).powf(i as f64 / (samples - 1) as f64);
            let g = self.asymptotic_gap(t);
            if g > 0.0 {
                xs.push(t.ln());
                ys.push(g.ln());
            }
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }
}

/// Solve for the profile table with asymptotic normalization at y_max.
pub fn solve_profile(params: &ProfileParams, y_max: f64, samples: usize) -> Result<ProfileSolution> {
    if params.hyperboloid {
        return ProfileSolution::hyperboloid(params.n, params.k);
    }
    if y_max < 10.0 {
        return Err(Error::domain("solve_profile: y_max must be >= 10"));
    }
    if samples < 100 {
        return Err(Error::domain("solve_profile: samples must be >= 100"));
    }
    let p = *params;
    let l = p.l_k;
    let k_eq_n = p.k == p.n;

    // height grid: geometric in (y - l), with y = 1 inserted exactly
    let z_lo = if k_eq_n && p.n >= 3 { 1e-8 } else { 1e-12 };
    let z_hi = y_max - l;
    let ratio = (z_hi / z_lo).ln() / (samples - 1) as f64;
    let mut y_nodes: Vec<f64> = (0..samples)
        .map(|i| l + z_lo * (ratio * i as f64).exp())
        .collect();
    // replace the node nearest to 1.0 by exactly 1.0
    let idx_one = y_nodes
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - 1.0)
                .abs()
                .partial_cmp(&(b.1 - 1.0).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    y_nodes[idx_one] = 1.0;
    *y_nodes.last_mut().unwrap() = y_max;

    // slope data per node
    let mut u_nodes = Vec::with_capacity(samples);
    let mut w2_nodes = Vec::with_capacity(samples);
    for &y in &y_nodes {
        let (_, w2, u) = p.slope_data(y)?;
        u_nodes.push(u);
        w2_nodes.push(w2);
    }

    // stable integrand of R' = 1/v - 1/u for y >= 1
    let c = p.c_k;
    let tail_integrand = |y: f64| -> f64 {
        let v2 = 1.0 - y.powi(-2);
        let v = v2.max(0.0).sqrt();
        let (_, _, u) = p.slope_data(y).unwrap();
        let g = -((-2.0 / p.k as f64) * (c * y.powi(-(p.n as i32))).ln_1p()).exp_m1();
        y.powi(-2) * g / (u * v * (u + v))
    };

    // anchor: R(y_max) = int_{y_max}^inf (1/v - 1/u) dy via s = 1/y
    let s_max = 1.0 / y_max;
    let r_anchor = integrate(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let y = 1.0 / s;
            let v = (1.0 - s * s).max(0.0).sqrt();
            let (_, _, u) = p.slope_data(y).unwrap();
            let g = -((-2.0 / p.k as f64) * (c * s.powi(p.n as i32)).ln_1p()).exp_m1();
            g / (u * v * (u + v))
        },
        0.0,
        s_max,
        1e-14,
    )?;

    // R and t above y = 1
    let upper_len = samples - idx_one;
    let mut r_nodes = vec![0.0; upper_len];
    r_nodes[upper_len - 1] = r_anchor;
    for j in (0..upper_len - 1).rev() {
        let (a, b) = (y_nodes[idx_one + j], y_nodes[idx_one + j + 1]);
        let panel = if j == 0 {
            // v vanishes like sqrt(y - 1) at the left endpoint; substitute
            // y = 1 + s^2 and keep v = s sqrt(2 + s^2) / (1 + s^2) in terms
            // of s (the direct 1 - y^{-2} form cancels catastrophically)
            integrate(
                |s| {
                    let y = 1.0 + s * s;
                    let v = s * (2.0 + s * s).sqrt() / y;
                    let (_, _, u) = p.slope_data(y).unwrap();
                    let g = -((-2.0 / p.k as f64)
                        * (c * y.powi(-(p.n as i32))).ln_1p())
                    .exp_m1();
                    2.0 * y / (2.0 + s * s).sqrt() * y.powi(-2) * g / (u * (u + v))
                },
                0.0,
                (b - 1.0).sqrt(),
                1e-14,
            )?
        } else {
            integrate(&tail_integrand, a, b, 1e-14)?
        };
        r_nodes[j] = r_nodes[j + 1] + panel;
    }
    let mut t_nodes = vec![0.0; samples];
    for j in 0..upper_len {
        let y = y_nodes[idx_one + j];
        t_nodes[idx_one + j] = (y * y - 1.0).max(0.0).sqrt() + r_nodes[j];
    }

    // march below y = 1 with dt = dy / u; closed form under the switch
    let mu = if k_eq_n { 0.0 } else { p.mu() };
    let beta = if k_eq_n { 0.0 } else { p.beta() };
    let log_time = |z: f64| -> f64 {
        // antiderivative of 1/(mu z (1 + beta z)) = (ln z - ln(1 + beta z)) / mu
        (z.ln() - (beta * z).ln_1p()) / mu
    };
    let power_time = |y: f64| -> f64 {
        // antiderivative of 1 / (sqrt(2/n) y^{n/2})
        let n = p.n as f64;
        if p.n == 2 {
            y.ln()
        } else {
            -(n / 2.0).sqrt() * y.powf(1.0 - n / 2.0) / (n / 2.0 - 1.0)
        }
    };
    for i in (0..idx_one).rev() {
        let (a, b) = (y_nodes[i], y_nodes[i + 1]);
        let dt = if b - l <= Z_SWITCH {
            if k_eq_n {
                power_time(b) - power_time(a)
            } else {
                log_time(b - l) - log_time(a - l)
            }
        } else if a - l < Z_SWITCH {
            let mid = l + Z_SWITCH;
            let head = if k_eq_n {
                power_time(mid) - power_time(a)
            } else {
                log_time(mid - l) - log_time(a - l)
            };
            let tail = integrate(
                |y| 1.0 / p.slope_data(y).unwrap().2,
                mid,
                b,
                1e-13,
            )?;
            head + tail
        } else {
            integrate(|y| 1.0 / p.slope_data(y).unwrap().2, a, b, 1e-13)?
        };
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::numeric(format!(
                "solve_profile: nonpositive time step {dt} on panel [{a}, {b}]"
            )));
        }
        t_nodes[i] = t_nodes[i + 1] - dt;
    }

    // stable per-node gaps b(t) - f(t) for y >= 1
    let mut gap_nodes = vec![0.0; upper_len];
    for j in 0..upper_len {
        let y = y_nodes[idx_one + j];
        let r = r_nodes[j];
        let eps = (2.0 * (y * y - 1.0).max(0.0).sqrt() * r + r * r) / (y * y);
        gap_nodes[j] = y * eps / ((1.0 + eps).sqrt() + 1.0);
    }
    let c_upper = gap_nodes[upper_len - 1] * t_nodes[samples - 1].powi(p.n as i32 + 1);

    let lower = if k_eq_n {
        if p.n == 2 {
            LowerTail::LogLinear {
                t0: t_nodes[0],
                y0: y_nodes[0],
            }
        } else {
            let n = p.n as f64;
            LowerTail::PowerLaw {
                t0: t_nodes[0],
                p0: y_nodes[0].powf(-(n - 2.0) / 2.0),
                sigma: (n - 2.0) / (2.0 * n).sqrt(),
            }
        }
    } else {
        LowerTail::Exponential {
            t0: t_nodes[0],
            z0: y_nodes[0] - l,
            mu,
            beta,
        }
    };

    let t_to_y = HermiteTable::new(t_nodes.clone(), y_nodes.clone(), u_nodes.clone())?;
    let y_to_t = HermiteTable::new(
        y_nodes.clone(),
        t_nodes.clone(),
        u_nodes.iter().map(|&u| 1.0 / u.max(1e-300)).collect(),
    )?;

    Ok(ProfileSolution {
        params: p,
        t_nodes,
        y_nodes,
        u_nodes,
        w2_nodes,
        r_nodes,
        gap_nodes,
        idx_one,
        t_to_y,
        y_to_t,
        c_upper,
        lower,
    })
}

/// Convenience: default table (y_max = 1e3, 4096 samples).
pub fn solve_default(n: usize, k: usize) -> Result<ProfileSolution> {
    solve_profile(&ProfileParams::new(n, k)?, 1e3, 4096)
}
