//! Test-only oracles that share no code with the library's closed forms.

#![allow(dead_code)]

use nalgebra::Matrix3;

pub type MetricFn = dyn Fn(&[f64; 3]) -> Matrix3<f64>;

/// `g = dr^2 + w(r)^2 (dθ^2 + sin^2 θ dφ^2)` as raw components.
pub fn warped_s2_metric(w: impl Fn(f64) -> f64 + 'static) -> Box<MetricFn> {
    Box::new(move |x: &[f64; 3]| {
        let w2 = w(x[0]).powi(2);
        Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, w2, w2 * x[1].sin().powi(2)))
    })
}

fn shifted(x: &[f64; 3], i: usize, h: f64) -> [f64; 3] {
    let mut y = *x;
    y[i] += h;
    y
}

/// Fourth-order central difference of a vector-valued function along `x_i`.
fn central4<T, F>(f: F, x: &[f64; 3], i: usize, h: f64) -> T
where
    F: Fn(&[f64; 3]) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let (p1, m1) = (f(&shifted(x, i, h)), f(&shifted(x, i, -h)));
    let (p2, m2) = (f(&shifted(x, i, 2.0 * h)), f(&shifted(x, i, -2.0 * h)));
    ((p1 - m1) * 8.0 - (p2 - m2)) * (1.0 / (12.0 * h))
}

/// `Γ^k_{ij}` with metric derivatives by fourth-order central differences of step `h`.
pub fn christoffel(g: &MetricFn, x: &[f64; 3], h: f64) -> [[[f64; 3]; 3]; 3] {
    let ginv = g(x).try_inverse().expect("metric is invertible");
    let dg: Vec<Matrix3<f64>> = (0..3).map(|l| central4(g, x, l, h)).collect();
    let mut gam = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gam[k][i][j] = 0.5 * s;
            }
        }
    }
    gam
}

/// Ricci tensor from `R^ρ_{σμν} = ∂_μ Γ^ρ_{νσ} - ∂_ν Γ^ρ_{μσ} + Γ^ρ_{μλ} Γ^λ_{νσ} - Γ^ρ_{νλ} Γ^λ_{μσ}`
/// contracted on `ρ = μ`, with the Christoffel derivatives by a second
/// layer of fourth-order central differences.
pub fn ricci(g: &MetricFn, x: &[f64; 3], h_outer: f64, h_inner: f64) -> Matrix3<f64> {
    let gam = christoffel(g, x, h_inner);
    let dgam: Vec<[[[f64; 3]; 3]; 3]> = (0..3)
        .map(|m| {
            let at = |dx: f64| christoffel(g, &shifted(x, m, dx), h_inner);
            let (p1, m1, p2, m2) = (at(h_outer), at(-h_outer), at(2.0 * h_outer), at(-2.0 * h_outer));
            let mut d = [[[0.0; 3]; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        d[a][b][c] = (8.0 * (p1[a][b][c] - m1[a][b][c]) - (p2[a][b][c] - m2[a][b][c])) / (12.0 * h_outer);
                    }
                }
            }
            d
        })
        .collect();
    let mut ric = Matrix3::zeros();
    for s in 0..3 {
        for nu in 0..3 {
            let mut v = 0.0;
            for rho in 0..3 {
                // μ = ρ
                v += dgam[rho][rho][nu][s] - dgam[nu][rho][rho][s];
                v += (0..3).map(|l| gam[rho][rho][l] * gam[l][nu][s] - gam[rho][nu][l] * gam[l][rho][s]).sum::<f64>();
            }
            ric[(s, nu)] = v;
        }
    }
    ric
}

/// `(Ric_rr, Ric_θθ / w^2, R)` at `(r, θ)` by brute force.
pub fn brute_force_curvature(g: &MetricFn, r: f64, theta: f64) -> (f64, f64, f64) {
    let x = [r, theta, 0.3];
    let ric = ricci(g, &x, 2e-3, 1e-3);
    let gx = g(&x);
    let ginv = gx.try_inverse().unwrap();
    let scalar = (ginv * ric).trace();
    (ric[(0, 0)], ric[(1, 1)] / gx[(1, 1)], scalar)
}

/// Elementary symmetric polynomial `e_k` of `xs` by the product expansion.
pub fn elementary_symmetric(xs: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for &x in xs {
        for j in (1..e.len()).rev() {
            e[j] += e[j - 1] * x;
        }
    }
    e[k]
}
