//! Damped Newton iterations in one and two complex variables.

use num_complex::Complex;

use super::real::{cabs, cfinite, Real};
use crate::error::{Error, Result};

/// Step halvings allowed while the residual fails to decrease.
const MAX_HALVINGS: usize = 20;
/// Condition estimate above which a Jacobian is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative finite-difference step for Jacobians.
pub const FD_STEP: f64 = 1e-7;

/// Solves `F(z) = 0` from `seed` until `|F(z)| <= tol`.
pub fn newton_1c<T, F, D>(f: F, df: D, seed: Complex<T>, tol: f64, max_iter: usize) -> Result<Complex<T>>
where
    T: Real,
    F: Fn(Complex<T>) -> Complex<T>,
    D: Fn(Complex<T>) -> Complex<T>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut z = seed;
    let mut fz = f(z);
    let mut r = cabs(fz).to_f64();
    for _ in 0..max_iter {
        if !r.is_finite() || !cfinite(z) {
            return Err(Error::NonFiniteInput);
        }
        if r <= tol {
            return Ok(z);
        }
        let d = df(z);
        if cabs(d).to_f64() < 1e-30 {
            return Err(Error::DerivativeVanished);
        }
        let step = fz / d;
        let mut lambda = T::one();
        let half = T::from_f64(0.5);
        // after the last halving the smallest step is taken even without decrease
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = z - step * lambda;
            let fc = f(cand);
            let rc = cabs(fc).to_f64();
            accepted = Some((cand, fc, rc));
            if rc < r {
                break;
            }
            lambda = lambda * half;
        }
        let (zn, fzn, rn) = accepted.expect("at least one trial step");
        z = zn;
        fz = fzn;
        r = rn;
    }
    if r <= tol {
        return Ok(z);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: r,
    })
}

pub type Pair<T> = [Complex<T>; 2];
pub type Jacobian<T> = [[Complex<T>; 2]; 2];

fn inf_norm<T: Real>(v: &Pair<T>) -> f64 {
    cabs(v[0]).to_f64().max(cabs(v[1]).to_f64())
}

/// Central finite-difference Jacobian with step `1e-7 * max(1, |x_j|)` per component.
pub fn fd_jacobian<T, G>(g: &G, x: Pair<T>) -> Result<Jacobian<T>>
where
    T: Real,
    G: Fn(Pair<T>) -> Result<Pair<T>>,
{
    let mut jac = [[Complex::new(T::zero(), T::zero()); 2]; 2];
    for j in 0..2 {
        let h = FD_STEP * cabs(x[j]).to_f64().max(1.0);
        let ht = T::from_f64(h);
        let mut xp = x;
        let mut xm = x;
        xp[j] = xp[j] + Complex::new(ht, T::zero());
        xm[j] = xm[j] - Complex::new(ht, T::zero());
        let gp = g(xp)?;
        let gm = g(xm)?;
        let two_h = T::from_f64(2.0) * ht;
        for i in 0..2 {
            jac[i][j] = (gp[i] - gm[i]) / two_h;
        }
    }
    Ok(jac)
}

/// Solves `J d = r` for a 2x2 complex system, returning `d` and an infinity-norm condition
/// estimate of `J`.
pub fn solve_2x2<T: Real>(jac: &Jacobian<T>, r: &Pair<T>) -> (Pair<T>, f64) {
    let [[a, b], [c, d]] = *jac;
    let det = a * d - b * c;
    let norm = |m: [[Complex<T>; 2]; 2]| {
        (0..2)
            .map(|i| cabs(m[i][0]).to_f64() + cabs(m[i][1]).to_f64())
            .fold(0.0, f64::max)
    };
    let nj = norm(*jac);
    if cabs(det).to_f64() == 0.0 || !cfinite(det) {
        return ([Complex::new(T::zero(), T::zero()); 2], f64::INFINITY);
    }
    let inv = [[d / det, -b / det], [-c / det, a / det]];
    let cond = nj * norm(inv);
    let x = [inv[0][0] * r[0] + inv[0][1] * r[1], inv[1][0] * r[0] + inv[1][1] * r[1]];
    (x, cond)
}

/// Solves `G(a, b) = 0` with a finite-difference Jacobian until `||G||_inf <= tol`.
pub fn newton_2c<T, G>(g: G, seed: Pair<T>, tol: f64, max_iter: usize) -> Result<Pair<T>>
where
    T: Real,
    G: Fn(Pair<T>) -> Result<Pair<T>>,
{
    newton_2c_with_jacobian(&g, |x| fd_jacobian(&g, x), seed, tol, max_iter)
}

/// Variant of [`newton_2c`] taking an explicit Jacobian.
pub fn newton_2c_with_jacobian<T, G, J>(
    g: &G,
    jacobian: J,
    seed: Pair<T>,
    tol: f64,
    max_iter: usize,
) -> Result<Pair<T>>
where
    T: Real,
    G: Fn(Pair<T>) -> Result<Pair<T>>,
    J: Fn(Pair<T>) -> Result<Jacobian<T>>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut x = seed;
    let mut gx = g(x)?;
    let mut r = inf_norm(&gx);
    for _ in 0..max_iter {
        if !r.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        if r <= tol {
            return Ok(x);
        }
        let jac = jacobian(x)?;
        let (step, cond) = solve_2x2(&jac, &gx);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::SingularJacobian { condition: cond });
        }
        let mut lambda = T::one();
        let half = T::from_f64(0.5);
        let mut accepted: Option<(Pair<T>, Pair<T>, f64)> = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = [x[0] - step[0] * lambda, x[1] - step[1] * lambda];
            if let Ok(gc) = g(cand) {
                let rc = inf_norm(&gc);
                if rc.is_finite() {
                    accepted = Some((cand, gc, rc));
                }
                if rc < r {
                    break;
                }
            }
            lambda = lambda * half;
        }
        match accepted {
            Some((xn, gn, rn)) => {
                x = xn;
                gx = gn;
                r = rn;
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations: max_iter,
                    residual: r,
                })
            }
        }
    }
    if r <= tol {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    #[test]
    fn square_root_of_one() {
        let z = newton_1c(|z: C| z * z - 1.0, |z: C| 2.0 * z, C::new(0.7, 0.0), 1e-14, 50).unwrap();
        assert!((z - 1.0).norm() < 1e-14);
    }

    #[test]
    fn cube_root_of_two() {
        let z = newton_1c(|z: C| z * z * z - 2.0, |z: C| 3.0 * z * z, C::new(1.2, 0.0), 1e-14, 50).unwrap();
        assert!((z.re - 1.2599210498948732).abs() < 1e-14);
    }

    #[test]
    fn degenerate_root_within_tolerance() {
        let z = newton_1c(|z: C| z * z, |z: C| 2.0 * z, C::new(1e-20, 0.0), 1e-12, 50).unwrap();
        assert!(z.norm() < 1e-6);
    }

    #[test]
    fn vanishing_derivative() {
        let r = newton_1c(|z: C| z * z + 1.0, |z: C| 2.0 * z, C::new(0.0, 0.0), 1e-12, 50);
        assert_eq!(r, Err(Error::DerivativeVanished));
    }

    #[test]
    fn linear_two_variable_system() {
        let x = newton_2c(
            |[a, b]: Pair<f64>| Ok([a - 1.0, b + 2.0]),
            [C::new(0.0, 0.0), C::new(0.0, 0.0)],
            1e-12,
            2,
        )
        .unwrap();
        assert!((x[0] - 1.0).norm() < 1e-12 && (x[1] + 2.0).norm() < 1e-12);
    }

    #[test]
    fn substitution_system() {
        let x = newton_2c(
            |[a, b]: Pair<f64>| Ok([a * a - b, b - 4.0]),
            [C::new(1.9, 0.0), C::new(3.8, 0.0)],
            1e-12,
            50,
        )
        .unwrap();
        assert!((x[0] - 2.0).norm() < 1e-10 && (x[1] - 4.0).norm() < 1e-12);
    }

    #[test]
    fn singular_system_reported() {
        let r = newton_2c(
            |[a, b]: Pair<f64>| Ok([a + b, 2.0 * a + 2.0 * b + 1.0]),
            [C::new(0.0, 0.0), C::new(0.0, 0.0)],
            1e-12,
            10,
        );
        assert!(matches!(r, Err(Error::SingularJacobian { .. })));
    }
}
