//! Minimal sufficient statistic: inputs grouped by their predictive row.

use serde::{Deserialize, Serialize};

use crate::prob::{entropy_of, EncoderKernel, JointPMF, SimplexPoint};

/// Default merge tolerance (total variation) for exact joints.
pub const DEFAULT_TAU_MSS: f64 = 1e-9;

/// Partition of the input alphabet by predictive equivalence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MssPartition {
    /// Input indices of each class, in order of first appearance.
    pub classes: Vec<Vec<usize>>,
    /// Predictive row `p(Y|x)` of each class's first member.
    pub representatives: Vec<SimplexPoint>,
    /// Probability of each class.
    pub class_mass: SimplexPoint,
    /// Class index of each input.
    pub assignment: Vec<usize>,
}

pub(crate) fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Groups inputs whose predictive rows lie within `tau_mss` (total variation)
/// of a class representative. Classes are formed greedily in input order.
pub fn minimal_sufficient_statistic(j: &JointPMF, tau_mss: f64) -> MssPartition {
    let rows = j.conditionals();
    let mut reps: Vec<usize> = Vec::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut assignment = Vec::with_capacity(j.nx());
    for (x, row) in rows.iter().enumerate() {
        match reps.iter().position(|&r| total_variation(&rows[r], row) <= tau_mss) {
            Some(c) => {
                classes[c].push(x);
                assignment.push(c);
            }
            None => {
                assignment.push(reps.len());
                reps.push(x);
                classes.push(vec![x]);
            }
        }
    }
    let mass: Vec<f64> = classes.iter().map(|c| c.iter().map(|&x| j.px()[x]).sum()).collect();
    MssPartition {
        representatives: reps
            .iter()
            .map(|&r| SimplexPoint::new(rows[r].clone()).expect("conditional row is a distribution"))
            .collect(),
        class_mass: SimplexPoint::new(mass).expect("class masses form a distribution"),
        classes,
        assignment,
    }
}

impl MssPartition {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// `H(W*)`.
    pub fn entropy(&self) -> f64 {
        entropy_of(self.class_mass.probs()).max(0.0)
    }

    /// `H(W*|Y) = H(W*, Y) - H(Y)`, computed from the joint of class and
    /// output.
    pub fn entropy_given_y(&self, j: &JointPMF) -> f64 {
        let ny = j.ny();
        let mut joint = vec![0.0; self.n_classes() * ny];
        for (x, &c) in self.assignment.iter().enumerate() {
            for y in 0..ny {
                joint[c * ny + y] += j.p(x, y);
            }
        }
        (entropy_of(&joint) - entropy_of(j.py())).max(0.0)
    }

    /// The deterministic encoder `x -> class(x)`.
    pub fn encoder(&self) -> EncoderKernel {
        EncoderKernel::deterministic(&self.assignment, self.n_classes()).expect("assignments index existing classes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks;

    #[test]
    fn binary_has_two_classes() {
        let m = minimal_sufficient_statistic(&tasks::binary(), DEFAULT_TAU_MSS);
        assert_eq!(m.classes, vec![vec![0, 1], vec![2, 3]]);
        assert!((m.entropy() - 2f64.ln()).abs() < 1e-12);
        assert!((m.entropy_given_y(&tasks::binary()) - 0.325083).abs() < 1e-6);
    }

    #[test]
    fn discrete_clusters_has_ten_classes() {
        let m = minimal_sufficient_statistic(&tasks::discrete_clusters(), DEFAULT_TAU_MSS);
        assert_eq!(m.n_classes(), 10);
        assert!((m.entropy() - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_rows_collapse_to_one_class() {
        let j = JointPMF::from_conditionals(&[0.2, 0.5, 0.3], &vec![vec![0.4, 0.6]; 3]).unwrap();
        let m = minimal_sufficient_statistic(&j, DEFAULT_TAU_MSS);
        assert_eq!(m.n_classes(), 1);
        assert_eq!(m.entropy(), 0.0);
    }

    #[test]
    fn tolerance_controls_merging() {
        let j = JointPMF::from_conditionals(&[1.0, 1.0], &[vec![0.5, 0.5], vec![0.5 + 1e-6, 0.5 - 1e-6]]).unwrap();
        assert_eq!(minimal_sufficient_statistic(&j, 1e-9).n_classes(), 2);
        assert_eq!(minimal_sufficient_statistic(&j, 1e-5).n_classes(), 1);
    }
}
