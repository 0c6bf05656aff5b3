use super::ClassStructure;
use crate::error::{Error, Result};
use crate::geometry::BoxMixture;
use crate::measures::{EmpiricalMeasure, MASS_TOL};
use serde::{Deserialize, Serialize};

/// Atoms of a density proxy may sit this far outside the class closures.
pub const PROXY_TOL: f64 = 1e-9;

/// Target measure handed to the admissibility check.
#[derive(Debug, Clone)]
pub enum MeasureDescriptor {
    /// Absolutely continuous, piecewise uniform on boxes.
    PiecewiseUniform(BoxMixture),
    /// Atomic measure; with `density_proxy` it stands in for a density.
    Empirical { measure: EmpiricalMeasure, density_proxy: bool },
}

impl MeasureDescriptor {
    fn dim(&self) -> usize {
        match self {
            MeasureDescriptor::PiecewiseUniform(m) => m.dim(),
            MeasureDescriptor::Empirical { measure, .. } => measure.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub absolutely_continuous: bool,
    pub support_in_closure: bool,
    pub charged_reachable: bool,
    pub charged_totally_ordered: bool,
    /// Mass per class.
    pub class_mass: Vec<f64>,
    /// Mass outside every class closure.
    pub uncovered_mass: f64,
    pub charged: Vec<usize>,
    pub notes: Vec<String>,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.absolutely_continuous && self.support_in_closure && self.charged_reachable && self.charged_totally_ordered
    }
}

/// Runs the four admissibility conditions against a class structure.
pub fn check_admissible(mu: &MeasureDescriptor, cs: &ClassStructure) -> Result<AdmissibilityReport> {
    if mu.dim() != cs.dim {
        return Err(Error::DimensionMismatch { expected: cs.dim, found: mu.dim() });
    }
    let mut notes = Vec::new();
    let m = cs.len();
    let mut class_mass = vec![0.0; m];
    let (absolutely_continuous, uncovered_mass) = match mu {
        MeasureDescriptor::PiecewiseUniform(mix) => {
            mix.validate()?;
            let mut uncovered = 0.0;
            for (b, w) in &mix.components {
                let vol = b.volume();
                let mut covered = 0.0;
                for (j, c) in cs.classes.iter().enumerate() {
                    let share = w * c.overlap_volume(b) / vol;
                    class_mass[j] += share;
                    covered += share;
                }
                uncovered += (w - covered).max(0.0);
            }
            (true, uncovered)
        }
        MeasureDescriptor::Empirical { measure, density_proxy } => {
            if !density_proxy {
                notes.push("measure has atoms".into());
            }
            let mut uncovered = 0.0;
            for (x, w) in measure.atoms() {
                match cs.classes.iter().position(|c| c.contains(x)) {
                    Some(j) => class_mass[j] += w,
                    None => {
                        let nearest = cs
                            .classes
                            .iter()
                            .map(|c| c.closure_distance(x))
                            .enumerate()
                            .min_by(|a, b| a.1.total_cmp(&b.1));
                        match nearest {
                            Some((j, d)) if d <= PROXY_TOL => class_mass[j] += w,
                            _ => uncovered += w,
                        }
                    }
                }
            }
            (*density_proxy, uncovered)
        }
    };
    let support_in_closure = uncovered_mass <= MASS_TOL;
    if !support_in_closure {
        notes.push(format!("mass {uncovered_mass} lies outside the closure of the classes"));
    }
    let charged: Vec<usize> = (0..m).filter(|&j| class_mass[j] > MASS_TOL).collect();
    let unreached: Vec<&str> = charged.iter().filter(|&&j| !cs.beta_reach[j]).map(|&j| cs.labels[j].as_str()).collect();
    let charged_reachable = unreached.is_empty();
    if !charged_reachable {
        notes.push(format!("charged classes not reachable from the initial law: {}", unreached.join(", ")));
    }
    let mut charged_totally_ordered = true;
    for (a, &i) in charged.iter().enumerate() {
        for &j in &charged[a + 1..] {
            if !cs.comparable(i, j) {
                charged_totally_ordered = false;
                notes.push(format!("classes {} and {} are incomparable", cs.labels[i], cs.labels[j]));
            }
        }
    }
    Ok(AdmissibilityReport {
        absolutely_continuous,
        support_in_closure,
        charged_reachable,
        charged_totally_ordered,
        class_mass,
        uncovered_mass,
        charged,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{discover_classes_1d, product_classes_extinction};
    use crate::geometry::BoxRegion;

    fn quadrant(lo: [f64; 2], hi: [f64; 2]) -> BoxRegion {
        BoxRegion::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn uniform_on_single_class() {
        let cs = discover_classes_1d(|x| x, (-5.0, 5.0), 0.01, None).unwrap();
        let mu = MeasureDescriptor::PiecewiseUniform(BoxMixture::uniform(BoxRegion::interval(0.0, 1.0)));
        let r = check_admissible(&mu, &cs).unwrap();
        assert!(r.admissible(), "{r:?}");
    }

    #[test]
    fn incomparable_orthants() {
        let cs = product_classes_extinction(2).unwrap();
        let mix =
            BoxMixture::new(vec![(quadrant([0.0, -1.0], [1.0, 0.0]), 0.5), (quadrant([-1.0, 0.0], [0.0, 1.0]), 0.5)])
                .unwrap();
        let r = check_admissible(&MeasureDescriptor::PiecewiseUniform(mix), &cs).unwrap();
        assert!(r.absolutely_continuous && r.support_in_closure && r.charged_reachable);
        assert!(!r.charged_totally_ordered);
        assert!(!r.admissible());
        // A chain I = {} ~> {2} is fine.
        let ok =
            BoxMixture::new(vec![(quadrant([0.0, 0.0], [1.0, 1.0]), 0.5), (quadrant([0.0, -1.0], [1.0, 0.0]), 0.5)])
                .unwrap();
        assert!(check_admissible(&MeasureDescriptor::PiecewiseUniform(ok), &cs).unwrap().admissible());
    }

    #[test]
    fn atoms_fail_absolute_continuity() {
        let cs = discover_classes_1d(|x| x, (-5.0, 5.0), 0.01, None).unwrap();
        let measure = EmpiricalMeasure::dirac(&[0.5]);
        let r = check_admissible(&MeasureDescriptor::Empirical { measure: measure.clone(), density_proxy: false }, &cs)
            .unwrap();
        assert!(!r.absolutely_continuous && !r.admissible());
        let r = check_admissible(&MeasureDescriptor::Empirical { measure, density_proxy: true }, &cs).unwrap();
        assert!(r.admissible());
    }

    #[test]
    fn uncovered_mass_fails_support() {
        let d = crate::zoo::DriftFn::two_class_example();
        let cs = discover_classes_1d(|x| d.eval(x), (-1.0, 4.0), 0.01, Some((2.2, 2.8))).unwrap();
        let mu = MeasureDescriptor::PiecewiseUniform(BoxMixture::uniform(BoxRegion::interval(0.5, 1.5)));
        let r = check_admissible(&mu, &cs).unwrap();
        assert!(!r.support_in_closure);
        assert!((r.uncovered_mass - 0.5).abs() < 1e-6);
        // Atom on the boundary of a class is inside its closure.
        let m = EmpiricalMeasure::dirac(&[1.0]);
        let r = check_admissible(&MeasureDescriptor::Empirical { measure: m, density_proxy: true }, &cs).unwrap();
        assert!(r.support_in_closure);
    }
}
