//! Eigenvalues of small dense nonsymmetric matrices.
//!
//! Both routines balance first, reduce to upper Hessenberg form with
//! Householder reflections, then run a shifted QR iteration on the active
//! window only (no Schur vectors are accumulated).

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, Hessenberg};

use super::{abs1, CMat, RMat, C64};
use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Parlett–Reinsch diagonal similarity scaling by powers of two.
fn balance<T, F>(a: &mut nalgebra::DMatrix<T>, mag: F)
where
    T: ComplexField<RealField = f64> + Copy,
    F: Fn(T) -> f64,
{
    let n = a.nrows();
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += mag(a[(j, i)]);
                    row += mag(a[(i, j)]);
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut cc = col;
            let mut g = row / 2.0;
            while cc < g {
                f *= 2.0;
                cc *= 4.0;
            }
            g = row * 2.0;
            while cc > g {
                f /= 2.0;
                cc /= 4.0;
            }
            if (col * f + row / f) < 0.95 * total {
                converged = false;
                let fr = T::from_real(1.0 / f);
                let fc = T::from_real(f);
                for j in 0..n {
                    a[(i, j)] *= fr;
                }
                for j in 0..n {
                    a[(j, i)] *= fc;
                }
            }
        }
    }
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues_complex(a: &CMat) -> Result<Vec<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![a[(0, 0)]]),
        _ => {}
    }
    let mut m = a.clone();
    balance(&mut m, abs1);
    let mut h = Hessenberg::new(m).unpack_h();
    complex_hessenberg_qr(&mut h)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = Complex::new(0.5, 0.0);
    let p = (a - d) * half;
    let disc = (p * p + b * c).sqrt();
    let mid = (a + d) * half;
    let e1 = mid + disc;
    let e2 = mid - disc;
    if (e1 - d).modulus() <= (e2 - d).modulus() {
        e1
    } else {
        e2
    }
}

fn complex_hessenberg_qr(h: &mut CMat) -> Result<Vec<C64>> {
    let n = h.nrows();
    let eps = f64::EPSILON;
    let zero = Complex::new(0.0, 0.0);
    let mut eig = vec![zero; n];
    let mut hi = n - 1;
    let mut its = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // Locate the top of the active unreduced block.
        let mut l = hi;
        while l > 0 {
            let mut s = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            if s == 0.0 {
                s = (0..=hi).map(|i| abs1(h[(i, i)])).sum::<f64>().max(f64::MIN_POSITIVE);
            }
            if abs1(h[(l, l - 1)]) <= eps * s {
                h[(l, l - 1)] = zero;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        if its > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(Error::EigenNoConvergence { iterations: its });
        }
        let shift = if its % 10 == 0 {
            // Exceptional shift to break cycles.
            let s = h[(hi, hi - 1)].re.abs() + if hi >= 2 { h[(hi - 1, hi - 2)].re.abs() } else { 0.0 };
            h[(hi, hi)] + Complex::new(0.75 * s, 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - shift, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (cs, sn, r) = givens(x, y);
            if k > l {
                h[(k, k - 1)] = r;
                h[(k + 1, k - 1)] = zero;
            }
            let start = if k > l { k } else { l };
            for j in start..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * cs + sn * b;
                h[(k + 1, j)] = b * cs - sn.conj() * a;
            }
            let stop = (k + 2).min(hi);
            for i in l..=stop {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * cs + sn.conj() * b;
                h[(i, k + 1)] = b * cs - sn * a;
            }
        }
    }
    Ok(eig)
}

/// Complex Givens rotation `[c s; -s̄ c]` with real `c` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64, C64) {
    let ax = x.modulus();
    let ay = y.modulus();
    if ay == 0.0 {
        return (1.0, Complex::new(0.0, 0.0), x);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay, Complex::new(ay, 0.0));
    }
    let r = ax.hypot(ay);
    let phase = x / ax;
    let cs = ax / r;
    let sn = phase * y.conj() / r;
    (cs, sn, phase * r)
}

/// Eigenvalues of a general real matrix (Francis double-shift QR).
pub fn eigenvalues_real(a: &RMat) -> Result<Vec<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Complex::new(a[(0, 0)], 0.0)]),
        _ => {}
    }
    let mut m = a.clone();
    balance(&mut m, |x: f64| x.abs());
    let mut h = Hessenberg::new(m).unpack_h();
    real_hessenberg_qr(&mut h)
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names)]
fn real_hessenberg_qr(a: &mut RMat) -> Result<Vec<C64>> {
    let n = a.nrows();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let budget = MAX_SWEEPS_PER_EIGENVALUE.max(30 * n);
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                let sub = a[(l, l - 1)].abs();
                if sub <= f64::EPSILON * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                // Ahues–Tisseur
                let hu = a[(l - 1, l)].abs();
                let (ab, ba) = (sub.max(hu), sub.min(hu));
                let d = (a[(l, l)] - a[(l - 1, l - 1)]).abs();
                let aa = a[(l, l)].abs().max(d);
                let bb = a[(l, l)].abs().min(d);
                let s2 = aa + ab;
                if ba * (ab / s2) <= f64::MIN_POSITIVE.max(f64::EPSILON * (bb * (aa / s2))) {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[(nu - 1, nu - 1)];
            let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if its >= budget {
                return Err(Error::EigenNoConvergence { iterations: its });
            }
            if its > 0 && its % 10 == 0 {
                t += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }
            let mut k = m;
            while k + 1 <= nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = 0.0;
                    if k + 1 != nu {
                        r = a[(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k + 1 != nu {
                            pp += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= pp * z;
                        }
                        a[(k + 1, j)] -= pp * y;
                        a[(k, j)] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k + 1 != nu {
                            pp += z * a[(i, k + 2)];
                            a[(i, k + 2)] -= pp * r;
                        }
                        a[(i, k + 1)] -= pp * q;
                        a[(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex::new(re, im)).collect())
}
