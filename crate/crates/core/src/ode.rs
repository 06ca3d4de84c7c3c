//! Classical fixed-step fourth-order Runge–Kutta integration.

use crate::scalar::Scalar;

/// Number of equal steps no longer than `max_step` that cover `[t0, t1]`.
pub fn step_count<T: Scalar>(t0: T, t1: T, max_step: T) -> usize {
    let span = (t1 - t0).abs();
    if span == T::zero() {
        return 0;
    }
    (span / max_step).ceil().to_usize().unwrap_or(1).max(1)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction) with RK4.
///
/// `rhs` writes the derivative into its last argument. `after_step` sees the
/// state after every step and may abort the integration.
pub fn rk4<T, E, F, G>(mut rhs: F, t0: T, t1: T, y0: &[T], max_step: T, mut after_step: G) -> Result<Vec<T>, E>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]) -> Result<(), E>,
    G: FnMut(T, &[T]) -> Result<(), E>,
{
    let n = y0.len();
    let steps = step_count(t0, t1, max_step);
    let mut y = y0.to_vec();
    if steps == 0 {
        return Ok(y);
    }
    let h = (t1 - t0) / T::lit(steps as f64);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let mut tmp = vec![T::zero(); n];
    for s in 0..steps {
        let t = t0 + h * T::lit(s as f64);
        rhs(t, &y, &mut k1)?;
        for i in 0..n {
            tmp[i] = y[i] + half * h * k1[i];
        }
        rhs(t + half * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + half * h * k2[i];
        }
        rhs(t + half * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4)?;
        for i in 0..n {
            y[i] = y[i] + h * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        let t_next = if s + 1 == steps { t1 } else { t0 + h * T::lit((s + 1) as f64) };
        after_step(t_next, &y)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn exponential_growth() {
        let y = rk4::<f64, Infallible, _, _>(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            1.0,
            &[1.0],
            1e-3,
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((y[0] - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn fourth_order_convergence() {
        let solve = |h: f64| {
            rk4::<f64, Infallible, _, _>(
                |t, y, dy| {
                    dy[0] = -t * y[0];
                    Ok(())
                },
                0.0,
                2.0,
                &[1.0],
                h,
                |_, _| Ok(()),
            )
            .unwrap()[0]
        };
        let exact = (-2.0f64).exp();
        let e1 = (solve(0.1) - exact).abs();
        let e2 = (solve(0.05) - exact).abs();
        let rate = (e1 / e2).log2();
        assert!(rate > 3.7 && rate < 4.3, "rate {rate}");
    }

    #[test]
    fn backward_integration_and_abort() {
        let r = rk4::<f64, f64, _, _>(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            -1.0,
            &[1.0],
            1e-2,
            |t, y| if y[0] < 0.5 { Err(t) } else { Ok(()) },
        );
        let t = r.unwrap_err();
        assert!((t - (-0.7)).abs() < 0.02, "aborted at {t}");
    }
}
