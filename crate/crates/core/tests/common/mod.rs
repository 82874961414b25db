//! Test-side oracles, independent of the library's own quadrature code:
//! plain composite Simpson integration and brute-force correlation
//! quadratures for the two model systems.
#![allow(dead_code)]

/// Composite Simpson on [a, b] with 2·half_panels subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, half_panels: usize) -> f64 {
    let n = 2 * half_panels;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Oracle for μ(g · h∘Tᵏ) under the doubling map: branch-by-branch Simpson
/// over the 2ᵏ affine branches of Tᵏ.
pub fn doubling_corr(g: impl Fn(f64) -> f64, h: impl Fn(f64) -> f64, k: usize) -> f64 {
    let branches = 1usize << k;
    let width = 1.0 / branches as f64;
    let mut total = 0.0;
    for b in 0..branches {
        let lo = b as f64 * width;
        total += simpson(|t| g(lo + t * width) * h(t), 0.0, 1.0, 64) * width;
    }
    total
}

/// Oracle for μ(g(z) · h(Mᵏ z)) on the 2-torus for a trigonometric pair, by
/// tensor Simpson over the unit square (the integrand is smooth and
/// periodic, so modest panel counts give ~1e-12).
pub fn toral_corr(
    m: [[i64; 2]; 2],
    k: usize,
    g: impl Fn(f64, f64) -> f64,
    h: impl Fn(f64, f64) -> f64,
) -> f64 {
    // iterate the matrix k times
    let mut mk = [[1i64, 0], [0, 1]];
    for _ in 0..k {
        mk = [
            [
                m[0][0] * mk[0][0] + m[0][1] * mk[1][0],
                m[0][0] * mk[0][1] + m[0][1] * mk[1][1],
            ],
            [
                m[1][0] * mk[0][0] + m[1][1] * mk[1][0],
                m[1][0] * mk[0][1] + m[1][1] * mk[1][1],
            ],
        ];
    }
    let n = 256;
    let hgrid = 1.0 / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let x = (i as f64 + 0.5) * hgrid;
        for j in 0..n {
            let y = (j as f64 + 0.5) * hgrid;
            let tx = (mk[0][0] as f64 * x + mk[0][1] as f64 * y).rem_euclid(1.0);
            let ty = (mk[1][0] as f64 * x + mk[1][1] as f64 * y).rem_euclid(1.0);
            total += g(x, y) * h(tx, ty);
        }
    }
    total * hgrid * hgrid
}

/// E[f(Z)] for Z ~ N(0, σ²) by Simpson over ±10σ.
pub fn normal_expect(f: impl Fn(f64) -> f64, sigma2: f64) -> f64 {
    let s = sigma2.sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma2).sqrt();
    simpson(|t| norm * (-t * t / (2.0 * sigma2)).exp() * f(t), -10.0 * s, 10.0 * s, 4000)
}

/// Least-squares slope of y on x.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
