use super::flow::{deficiency_dinic, deficiency_line};
use super::{dist, tv_distance, EmpiricalMeasure};
use crate::error::{invalid, Error, Result};

/// Largest support enumerated by the subset route inside [`lp_distance`].
pub const SUBSET_ROUTE_MAX_ATOMS: usize = 15;
const SUBSET_ROUTE_MAX_WORK: usize = 1 << 24;
const SUBSET_HARD_LIMIT: usize = 24;

fn check_dims(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    Ok(())
}

/// `max_S [nu(S) - mu(N_r(S))]` over subsets `S` of the support of `nu`, where
/// `N_r(S)` collects the atoms of `mu` within distance `r` of `S` (strictly
/// when `strict`).
pub fn deficiency(nu: &EmpiricalMeasure, mu: &EmpiricalMeasure, r: f64, strict: bool) -> f64 {
    let adj = |d: f64| if strict { d < r } else { d <= r };
    if nu.dim() == 1 {
        let xs: Vec<f64> = nu.atoms().map(|(p, _)| p[0]).collect();
        let ys: Vec<f64> = mu.atoms().map(|(p, _)| p[0]).collect();
        return deficiency_line(&xs, nu.weights(), &ys, mu.weights(), r, strict);
    }
    deficiency_dinic(nu.weights(), mu.weights(), |i, j| adj(dist(nu.point(i), mu.point(j))))
}

/// Distinct pairwise distances with 0 prepended.
fn levels(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Vec<f64> {
    let mut ds = Vec::with_capacity(mu.len() * nu.len() + 1);
    ds.push(0.0);
    for (p, _) in nu.atoms() {
        for (q, _) in mu.atoms() {
            ds.push(dist(p, q));
        }
    }
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    ds
}

/// Lévy-Prokhorov distance via bipartite flow.
///
/// With levels `l_0 = 0 < l_1 < ...` running over the pairwise distances and
/// `g_k` the deficiency at adjacency `dist <= l_k`, the distance is
/// `min(1, min_k max(l_k, g_k))`. `g_k` is nonincreasing, so the minimum sits
/// at the crossing and is found by bisection.
pub fn lp_distance_flow(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    check_dims(mu, nu)?;
    let ls = levels(mu, nu);
    let g = |k: usize| deficiency(nu, mu, ls[k], false);
    // First k with l_k >= g_k (exists: the last level has g = 0).
    let (mut lo, mut hi) = (0usize, ls.len() - 1);
    let mut g_hi = g(hi);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let gm = g(mid);
        if ls[mid] >= gm {
            hi = mid;
            g_hi = gm;
        } else {
            lo = mid + 1;
        }
    }
    let mut best = ls[hi].max(g_hi);
    if hi > 0 {
        best = best.min(ls[hi - 1].max(g(hi - 1)));
    }
    Ok(best.min(1.0))
}

/// Lévy-Prokhorov distance by enumerating all nonempty subsets `S` of the
/// support of `nu`. For each `S` the infimal feasible radius is
/// `min_t max(t, nu(S) - mu{dist(., S) <= t})` over `t` in the distinct
/// values of `dist(., S)` and 0; the distance is the maximum over `S`.
pub fn lp_distance_subsets(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    check_dims(mu, nu)?;
    let m = nu.len();
    if m > SUBSET_HARD_LIMIT {
        return Err(invalid(format!("subset route limited to {SUBSET_HARD_LIMIT} atoms, got {m}")));
    }
    let n = mu.len();
    let mut worst = 0.0f64;
    let mut ds: Vec<(f64, f64)> = vec![(0.0, 0.0); n];
    for mask in 1u32..(1u32 << m) {
        let mut nu_s = 0.0;
        for (j, slot) in ds.iter_mut().enumerate() {
            *slot = (f64::INFINITY, mu.weight(j));
        }
        for i in 0..m {
            if mask & (1 << i) == 0 {
                continue;
            }
            nu_s += nu.weight(i);
            for (j, slot) in ds.iter_mut().enumerate() {
                slot.0 = slot.0.min(dist(nu.point(i), mu.point(j)));
            }
        }
        ds.sort_by(|a, b| a.0.total_cmp(&b.0));
        // t = 0 with the mass sitting exactly on S.
        let mut mass = 0.0;
        let mut k = 0;
        while k < n && ds[k].0 <= 0.0 {
            mass += ds[k].1;
            k += 1;
        }
        let mut a_s = (nu_s - mass).max(0.0);
        while k < n {
            let t = ds[k].0;
            while k < n && ds[k].0 == t {
                mass += ds[k].1;
                k += 1;
            }
            a_s = a_s.min(t.max(nu_s - mass));
        }
        worst = worst.max(a_s);
    }
    Ok(worst.min(1.0))
}

/// Lévy-Prokhorov distance with the route picked by support size: subset
/// enumeration over the smaller support when it has at most
/// [`SUBSET_ROUTE_MAX_ATOMS`] atoms, bipartite flow otherwise.
pub fn lp_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    check_dims(mu, nu)?;
    let (small, large) = if nu.len() <= mu.len() { (nu, mu) } else { (mu, nu) };
    let m = small.len();
    if m <= SUBSET_ROUTE_MAX_ATOMS && (1usize << m) * m * large.len() <= SUBSET_ROUTE_MAX_WORK {
        lp_distance_subsets(large, small)
    } else {
        lp_distance_flow(mu, nu)
    }
}

/// Mass of atoms of `nu` with no atom of `mu` in range.
fn isolated_mass(nu: &EmpiricalMeasure, mu: &EmpiricalMeasure, r: f64, strict: bool) -> f64 {
    nu.atoms()
        .filter(|(p, _)| {
            !mu.atoms().any(|(q, _)| {
                let d = dist(p, q);
                if strict {
                    d < r
                } else {
                    d <= r
                }
            })
        })
        .map(|(_, w)| w)
        .sum()
}

/// Decides `d_LP(mu, nu) < delta` (or `<= delta` when `closed`) with a single
/// deficiency evaluation after cheap certificates.
pub fn lp_within(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, delta: f64, closed: bool) -> Result<bool> {
    check_dims(mu, nu)?;
    let inside = |g: f64| if closed { g <= delta } else { g < delta };
    if delta > 1.0 || (closed && delta >= 1.0) {
        return Ok(true);
    }
    if delta < 0.0 || (!closed && delta <= 0.0) {
        return Ok(false);
    }
    if inside(tv_distance(mu, nu)?) {
        return Ok(true);
    }
    let strict = !closed;
    if !inside(isolated_mass(nu, mu, delta, strict)) || !inside(isolated_mass(mu, nu, delta, strict)) {
        return Ok(false);
    }
    // Work on the side with fewer atoms on the left of the network.
    let g = if nu.len() <= mu.len() { deficiency(nu, mu, delta, strict) } else { deficiency(mu, nu, delta, strict) };
    Ok(inside(g))
}

/// Lévy-Prokhorov ball around a finitely supported center.
#[derive(Debug, Clone)]
pub struct LpBall {
    pub center: EmpiricalMeasure,
    pub radius: f64,
    /// `d <= radius` when true, `d < radius` otherwise.
    pub closed: bool,
}

impl LpBall {
    pub fn open(center: EmpiricalMeasure, radius: f64) -> Self {
        Self { center, radius, closed: false }
    }

    pub fn closed(center: EmpiricalMeasure, radius: f64) -> Self {
        Self { center, radius, closed: true }
    }

    pub fn contains(&self, nu: &EmpiricalMeasure) -> Result<bool> {
        lp_within(&self.center, nu, self.radius, self.closed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Word;

    fn line(points: &[f64], weights: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::normalized(1, points.to_vec(), weights.to_vec()).unwrap()
    }

    #[test]
    fn diracs() {
        let z = EmpiricalMeasure::dirac(&[0.0]);
        for a in [0.1, 0.3, 0.9, 5.0] {
            let d = EmpiricalMeasure::dirac(&[a]);
            let want = a.min(1.0);
            assert!((lp_distance_flow(&z, &d).unwrap() - want).abs() < 1e-12);
            assert!((lp_distance_subsets(&z, &d).unwrap() - want).abs() < 1e-12);
            assert!((lp_distance(&d, &z).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_measures() {
        let m = line(&[0.0, 1.0, 2.5], &[1.0, 2.0, 3.0]);
        assert_eq!(lp_distance_flow(&m, &m).unwrap(), 0.0);
        assert_eq!(lp_distance_subsets(&m, &m).unwrap(), 0.0);
        assert!(lp_within(&m, &m, 0.0, true).unwrap());
        assert!(!lp_within(&m, &m, 0.0, false).unwrap());
    }

    #[test]
    fn mass_moved_far() {
        // Moving mass 0.2 far away costs exactly 0.2.
        let a = line(&[0.0, 1.0], &[0.8, 0.2]);
        let b = line(&[0.0, 10.0], &[0.8, 0.2]);
        assert!((lp_distance_flow(&a, &b).unwrap() - 0.2).abs() < 1e-12);
        assert!((lp_distance_subsets(&a, &b).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn small_shift_costs_shift() {
        let a = EmpiricalMeasure::of_word(&Word::line(&[0.0, 0.5, 1.0])).unwrap();
        let b = EmpiricalMeasure::of_word(&Word::line(&[0.05, 0.55, 1.05])).unwrap();
        let d = lp_distance_flow(&a, &b).unwrap();
        assert!((d - 0.05).abs() < 1e-12, "{d}");
    }

    #[test]
    fn within_matches_distance() {
        let a = line(&[0.0, 0.3, 0.7], &[0.2, 0.5, 0.3]);
        let b = line(&[0.1, 0.6, 3.0], &[0.4, 0.4, 0.2]);
        let d = lp_distance_flow(&a, &b).unwrap();
        assert!(lp_within(&a, &b, d, true).unwrap());
        assert!(!lp_within(&a, &b, d, false).unwrap());
        assert!(lp_within(&a, &b, d + 1e-9, false).unwrap());
        assert!(!lp_within(&a, &b, d - 1e-9, true).unwrap());
    }

    #[test]
    fn planar_flow_matches_subsets() {
        let a = EmpiricalMeasure::normalized(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![1.0, 1.0, 2.0]).unwrap();
        let b = EmpiricalMeasure::normalized(2, vec![0.1, 0.1, 0.9, 0.2, 3.0, 3.0], vec![2.0, 1.0, 1.0]).unwrap();
        let f = lp_distance_flow(&a, &b).unwrap();
        let s = lp_distance_subsets(&a, &b).unwrap();
        assert!((f - s).abs() < 1e-12, "{f} vs {s}");
    }

    #[test]
    fn dimension_mismatch() {
        let a = EmpiricalMeasure::dirac(&[0.0]);
        let b = EmpiricalMeasure::dirac(&[0.0, 0.0]);
        assert!(matches!(lp_distance(&a, &b), Err(Error::DimensionMismatch { .. })));
    }
}
