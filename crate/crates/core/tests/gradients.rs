mod support;

use nlab_core::nn::grad_check;
use support::cases::{composite_cases, EPS, REL_TOL};

#[test]
fn composite_losses_match_finite_differences() {
    for seed in 0..20 {
        let (net, batch, cases) = composite_cases(seed);
        for (name, objective) in cases {
            let report = grad_check(&net, &batch, EPS, objective).unwrap();
            assert!(
                report.max_rel_error < REL_TOL,
                "{name}, net {seed}: relative error {} at parameter {} ({} vs {})",
                report.max_rel_error,
                report.worst_index,
                report.analytic[report.worst_index],
                report.numeric[report.worst_index]
            );
        }
    }
}
