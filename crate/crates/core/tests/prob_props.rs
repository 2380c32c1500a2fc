//! Property tests for the exact information identities.

use iblab::prob::{conditional_mi_xy_given_w, information_terms, mutual_information, rate, EncoderKernel, JointPMF};
use proptest::prelude::*;

fn joint_strategy() -> impl Strategy<Value = JointPMF> {
    (2usize..7, 2usize..5).prop_flat_map(|(nx, ny)| {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, ny), nx).prop_map(|t| JointPMF::new(t).unwrap())
    })
}

fn encoder_for(nx: usize) -> impl Strategy<Value = EncoderKernel> {
    (1usize..6).prop_flat_map(move |nw| {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, nw), nx).prop_map(|mut rows| {
            for r in &mut rows {
                r[0] += 1e-3;
            }
            EncoderKernel::new(rows).unwrap()
        })
    })
}

fn joint_and_encoder() -> impl Strategy<Value = (JointPMF, EncoderKernel)> {
    joint_strategy().prop_flat_map(|j| {
        let nx = j.nx();
        (Just(j), encoder_for(nx))
    })
}

/// Independent oracle: sum over (x, w) of p(x,w) KL(p(y|x) || p(y|w)), with
/// p(y|w) assembled from scratch.
fn expected_distortion(j: &JointPMF, e: &EncoderKernel) -> f64 {
    let (nx, ny, nw) = (j.nx(), j.ny(), e.n_latent());
    let mut total = 0.0;
    for w in 0..nw {
        let pw: f64 = (0..nx).map(|x| j.px()[x] * e.get(x, w)).sum();
        if pw == 0.0 {
            continue;
        }
        let dec: Vec<f64> = (0..ny)
            .map(|y| (0..nx).map(|x| j.p(x, y) * e.get(x, w)).sum::<f64>() / pw)
            .collect();
        for x in 0..nx {
            let pxw = j.px()[x] * e.get(x, w);
            if pxw == 0.0 {
                continue;
            }
            let kl: f64 = (0..ny)
                .map(|y| {
                    let p = j.p(x, y) / j.px()[x];
                    if p > 0.0 {
                        p * (p / dec[y]).ln()
                    } else {
                        0.0
                    }
                })
                .sum();
            total += pxw * kl;
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn chain_rule((j, e) in joint_and_encoder()) {
        let t = information_terms(&j, &e).unwrap();
        prop_assert!((mutual_information(&j) - t.delta - t.epsilon).abs() < 1e-9);
    }

    #[test]
    fn distortion_equals_residual_information((j, e) in joint_and_encoder()) {
        let eps = conditional_mi_xy_given_w(&j, &e).unwrap();
        prop_assert!((expected_distortion(&j, &e) - eps).abs() < 1e-9);
    }

    #[test]
    fn data_processing((j, e) in joint_and_encoder()) {
        let t = information_terms(&j, &e).unwrap();
        prop_assert!(t.delta <= t.rate.min(t.ixy) + 1e-9);
        prop_assert!(t.epsilon <= t.ixy + 1e-9);
    }

    #[test]
    fn conditional_rate_identity((j, e) in joint_and_encoder()) {
        let t = information_terms(&j, &e).unwrap();
        prop_assert!((t.epsilon + t.rate - t.cond_rate - t.ixy).abs() < 1e-9);
    }

    #[test]
    fn mutual_information_bounds(j in joint_strategy()) {
        let i = mutual_information(&j);
        let hx = iblab::prob::entropy_x(&j);
        let hy = iblab::prob::entropy_y(&j);
        prop_assert!(i >= 0.0 && i <= hx.min(hy) + 1e-12);
    }

    #[test]
    fn json_round_trip(j in joint_strategy()) {
        let s = serde_json::to_string(&j).unwrap();
        let back: JointPMF = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(&back, &j);
    }

    #[test]
    fn rate_is_bounded_by_input_entropy((j, e) in joint_and_encoder()) {
        let r = rate(&j, &e).unwrap();
        prop_assert!(r >= 0.0 && r <= iblab::prob::entropy_x(&j) + 1e-12);
    }
}
