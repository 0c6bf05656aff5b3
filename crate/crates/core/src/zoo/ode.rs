//! Fixed-step RK4 for the competitive Lotka-Volterra vector field
//! `dx_i/dt = r_i x_i (1 - sum_j a_ij x_j)`.

use smallvec::SmallVec;

pub(crate) type Vector = SmallVec<[f64; 4]>;

fn field(a: &[Vec<f64>], r: &[f64], x: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        let s: f64 = a[i].iter().zip(x).map(|(aij, xj)| aij * xj).sum();
        out[i] = r[i] * x[i] * (1.0 - s);
    }
}

/// Flow `F(t, x0)` with `ceil(t / step)` equal RK4 steps.
pub(crate) fn lv_flow(a: &[Vec<f64>], r: &[f64], x0: &[f64], t: f64, step: f64) -> Vector {
    let d = x0.len();
    let steps = (t / step).round().max(1.0) as usize;
    let h = t / steps as f64;
    let mut x: Vector = x0.iter().copied().collect();
    let zero = || -> Vector { std::iter::repeat_n(0.0, d).collect() };
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zero(), zero(), zero(), zero(), zero());
    for _ in 0..steps {
        field(a, r, &x, &mut k1);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        field(a, r, &tmp, &mut k2);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        field(a, r, &tmp, &mut k3);
        for i in 0..d {
            tmp[i] = x[i] + h * k3[i];
        }
        field(a, r, &tmp, &mut k4);
        for i in 0..d {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(x0: f64, t: f64) -> f64 {
        x0 * t.exp() / (1.0 + x0 * (t.exp() - 1.0))
    }

    #[test]
    fn logistic_closed_form() {
        let a = vec![vec![1.0]];
        for x0 in [0.1, 0.5, 2.0] {
            let x = lv_flow(&a, &[1.0], &[x0], 1.0, 1e-3);
            assert!((x[0] - logistic(x0, 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn growth_rate_scales_time() {
        // With one species, rate r runs the unit-rate logistic for time r t.
        let a = vec![vec![2.0]];
        let x = lv_flow(&a, &[3.0], &[0.1], 0.5, 1e-3);
        let want = logistic(2.0 * 0.1, 1.5) / 2.0;
        assert!((x[0] - want).abs() < 1e-9, "{} vs {want}", x[0]);
    }

    #[test]
    fn zero_is_fixed() {
        let a = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let x = lv_flow(&a, &[1.0, 1.0], &[0.0, 0.0], 1.0, 1e-2);
        assert_eq!(x.as_slice(), &[0.0, 0.0]);
        let y = lv_flow(&a, &[1.0, 1.0], &[0.0, 0.3], 1.0, 1e-2);
        assert_eq!(y[0], 0.0);
    }
}
