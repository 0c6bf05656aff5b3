//! Right-hand sides of the geographic inequalities, in units of the gauge
//! `h(x) = |1/x - 1| + |1 - x|`.

fn h(x: f64) -> f64 {
    (1.0 / x - 1.0).abs() + (1.0 - x).abs()
}

fn ratio(a: usize, b: usize) -> f64 {
    a as f64 / b as f64
}

/// Single word: `h(|w| / n)`.
pub fn slicing_single(sliced_len: usize, n: usize) -> f64 {
    h(ratio(sliced_len, n))
}

/// List of `k` words of length `n` with slice lengths `w_i`:
/// `(1/k) sum_i [h(k |w_i| / |v|) + h(|w_i| / n)]`.
pub fn slicing_list(sliced_lens: &[usize], n: usize) -> f64 {
    let k = sliced_lens.len() as f64;
    let v: usize = sliced_lens.iter().sum();
    sliced_lens.iter().map(|&w| h(k * w as f64 / v as f64) + h(ratio(w, n))).sum::<f64>() / k
}

/// Stitching: `2 h(|v| / T)`.
pub fn stitching(fixed_len: usize, total: usize) -> f64 {
    2.0 * h(ratio(fixed_len, total))
}

/// Coupling: slicing of the list plus stitching at `T`.
pub fn coupling(sliced_lens: &[usize], n: usize, total: usize) -> f64 {
    slicing_list(sliced_lens, n) + stitching(sliced_lens.iter().sum(), total)
}

/// `f(eps, delta) = 4 h((1 - eps - delta)(1 - delta) / (1 + r delta)) + 3 delta`.
pub fn fine_coupling(eps: f64, delta: f64, r: usize) -> f64 {
    4.0 * h((1.0 - eps - delta) * (1.0 - delta) / (1.0 + r as f64 * delta)) + 3.0 * delta
}

/// Decoupling, one side: `h(|v| / |u|_gamma) + 2 h(|v| / T_gamma)`.
pub fn decoupling(fixed_len: usize, side_count: usize, total: usize) -> f64 {
    h(ratio(fixed_len, side_count)) + stitching(fixed_len, total)
}

/// `f_gamma(eps, delta)` for weight `lambda` on the side and `other` on the
/// opposite side.
pub fn fine_decoupling(eps: f64, delta: f64, lambda: f64, other: f64) -> f64 {
    h(lambda / (lambda + eps) - (eps + delta) / (lambda - eps))
        + 2.0 * h((lambda - eps - delta) / (lambda + 2.0 * eps))
        + eps / lambda * (1.0 + other)
        + delta * (1.0 + 1.0 / lambda)
}
