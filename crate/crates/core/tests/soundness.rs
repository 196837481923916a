//! Certified boxes of randomly generated polynomial systems: the decrease
//! condition must hold at every sampled interior point.

mod support;

use sampcert_core::bounds::BoundMethod;
use sampcert_core::geometry::HyperRect;
use sampcert_core::linalg::Mat;
use sampcert_core::system::CandidateV;
use sampcert_core::verifier::{construct_a, Objective, SerialExecutor};
use support::{check_certified, random_system, Tally};

const SYSTEMS: u64 = 20;
const POINTS: usize = 1000;

#[test]
fn certified_boxes_of_random_systems_are_sound() {
    let mut total = Tally::default();
    let mut systems_with_boxes = 0;
    for seed in 0..SYSTEMS {
        let sys = random_system(seed);
        let n = sys.n;
        let v = CandidateV::new(Mat::identity(n), 0.999).unwrap();
        let m = 1 + (seed as usize / 3) % 2;
        let s = HyperRect::symmetric(vec![0.0; n], &vec![0.5; n]).unwrap();
        let delta_min = [0.01, 0.03, 0.08][n - 1];
        let method = [BoundMethod::Split, BoundMethod::Combined, BoundMethod::Best][(seed as usize / 2) % 3];
        let obj = Objective::decrease(&sys, &v, m);
        let c = construct_a(&obj, &s, delta_min, method, 64, &[], &SerialExecutor);
        systems_with_boxes += usize::from(!c.ledger.good.is_empty());
        total.merge(check_certified(&obj, &c.ledger.good, POINTS, 1000 + seed));
    }
    assert!(total.violations.is_empty(), "{:#?}", &total.violations[..total.violations.len().min(10)]);
    assert!(systems_with_boxes >= SYSTEMS as usize / 2, "only {systems_with_boxes} systems had certified boxes");
    println!("{} certified boxes, {} points checked", total.boxes, total.points);
}
