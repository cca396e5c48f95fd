//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E1(x), x > 0.
pub fn e1(x: f64) -> f64 {
    if x < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum += term / k as f64;
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..300 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Heat-regularized Fourier series for the flat unit torus Green's function
/// at displacement (x, y): G = G_t − t + ∫₀ᵗ p_s ds, with the Fourier sum
/// truncated at |k| ≤ kmax and the heat-kernel integral summed over images.
pub fn torus_green_spectral(x: f64, y: f64, t: f64, kmax: i64) -> f64 {
    let mut g = 0.0;
    for kx in -kmax..=kmax {
        for ky in -kmax..=kmax {
            let k2 = (kx * kx + ky * ky) as f64;
            if k2 == 0.0 || k2 > (kmax * kmax) as f64 {
                continue;
            }
            let lam = 4.0 * PI * PI * k2;
            g += (-lam * t).exp() * (TAU * (kx as f64 * x + ky as f64 * y)).cos() / lam;
        }
    }
    for nx in -3..=3 {
        for ny in -3..=3 {
            let r2 = (x - nx as f64).powi(2) + (y - ny as f64).powi(2);
            g += e1(r2 / (4.0 * t)) / (4.0 * PI);
        }
    }
    g - t
}

/// Plain truncated Fourier sum Σ'_{|k|≤kmax} e^{2πik·x}/(4π²|k|²).
pub fn torus_green_fourier(x: f64, y: f64, kmax: i64) -> f64 {
    let mut g = 0.0;
    for kx in -kmax..=kmax {
        for ky in -kmax..=kmax {
            let k2 = (kx * kx + ky * ky) as f64;
            if k2 == 0.0 || k2 > (kmax * kmax) as f64 {
                continue;
            }
            g += (TAU * (kx as f64 * x + ky as f64 * y)).cos() / (4.0 * PI * PI * k2);
        }
    }
    g
}

/// Robin mass of the flat torus from the same regularized expansion.
pub fn torus_robin_spectral(t: f64, kmax: i64) -> f64 {
    let mut h = 0.0;
    for kx in -kmax..=kmax {
        for ky in -kmax..=kmax {
            let k2 = (kx * kx + ky * ky) as f64;
            if k2 == 0.0 || k2 > (kmax * kmax) as f64 {
                continue;
            }
            let lam = 4.0 * PI * PI * k2;
            h += (-lam * t).exp() / lam;
        }
    }
    for nx in -3i32..=3 {
        for ny in -3i32..=3 {
            if nx == 0 && ny == 0 {
                continue;
            }
            h += e1((nx * nx + ny * ny) as f64 / (4.0 * t)) / (4.0 * PI);
        }
    }
    h + ((4.0 * t).ln() - EULER_GAMMA) / (4.0 * PI) - t
}

/// Legendre polynomials P_0..P_lmax at x.
pub fn legendre_all(x: f64, lmax: usize) -> Vec<f64> {
    let mut p = vec![0.0; lmax + 1];
    p[0] = 1.0;
    if lmax >= 1 {
        p[1] = x;
    }
    for l in 1..lmax {
        p[l + 1] = ((2 * l + 1) as f64 * x * p[l] - l as f64 * p[l - 1]) / (l + 1) as f64;
    }
    p
}

/// Heat-regularized Legendre series for the unit-sphere Green's function at
/// cos θ (valid for θ well away from 0): Σ e^{−ℓ(ℓ+1)t}(2ℓ+1)P_ℓ/(4πℓ(ℓ+1)) − t/(4π).
pub fn sphere_green_spectral(cos_theta: f64, t: f64, lmax: usize) -> f64 {
    let p = legendre_all(cos_theta, lmax);
    let mut g = 0.0;
    for l in 1..=lmax {
        let lam = (l * (l + 1)) as f64;
        g += (-lam * t).exp() * (2 * l + 1) as f64 * p[l] / (4.0 * PI * lam);
    }
    g - t / (4.0 * PI)
}

/// Gauss–Legendre nodes and weights on [a, b] (Newton on the recurrence).
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w));
    }
    out
}

/// ∫ over the unit torus of f, where f may carry a logarithmic singularity
/// at `c`: polar coordinates about c over the periodic square centred at c,
/// with r = R u² to smooth the origin.
pub fn torus_polar_integral<F: Fn(f64, f64) -> f64>(c: (f64, f64), n: usize, f: F) -> f64 {
    let mut total = 0.0;
    let gu = gauss_legendre(n, 0.0, 1.0);
    for sector in 0..8 {
        let th0 = sector as f64 * PI / 4.0;
        for &(th, wt) in &gauss_legendre(n, th0, th0 + PI / 4.0) {
            let r_max = 0.5 / th.cos().abs().max(th.sin().abs());
            for &(u, wu) in &gu {
                let r = r_max * u * u;
                let jac = 2.0 * r_max * u;
                total += wt * wu * jac * r * f(c.0 + r * th.cos(), c.1 + r * th.sin());
            }
        }
    }
    total
}

/// ∫_{−1}^{1} f(t) dt with a logarithmic singularity allowed at t = 1.
pub fn zonal_integral<F: Fn(f64) -> f64>(n: usize, f: F) -> f64 {
    // t = 1 − 2u², dt = −4u du
    gauss_legendre(n, 0.0, 1.0).iter().map(|&(u, w)| w * 4.0 * u * f(1.0 - 2.0 * u * u)).sum()
}

/// Points spread over the unit torus / sphere from a fixed LCG.
pub struct Lcg(pub u64);
impl Lcg {
    pub fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
    pub fn sphere_point(&mut self) -> nalgebra::Vector3<f64> {
        let z = 2.0 * self.next() - 1.0;
        let ph = TAU * self.next();
        let r = (1.0 - z * z).sqrt();
        nalgebra::Vector3::new(r * ph.cos(), r * ph.sin(), z)
    }
    pub fn torus_point(&mut self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.next(), self.next(), 0.0)
    }
}
