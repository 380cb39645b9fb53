use nlab_core::nn::{ProbVector, Tensor};
use nlab_core::strategies::{co_guess, mixmatch_mix, r_schedule, refine_label, select_small_loss, sharpen};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn probs(classes: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(0.001f64..1.0, classes).prop_map(|v| ProbVector::normalized(v).unwrap())
}

fn valid(p: &ProbVector) -> bool {
    let s: f64 = p.as_slice().iter().sum();
    (s - 1.0).abs() < 1e-9 && p.as_slice().iter().all(|v| (0.0..=1.0).contains(v))
}

fn perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

type MixCase = (Tensor, Vec<ProbVector>, Tensor, Vec<ProbVector>, Vec<usize>);

/// Labeled rows with targets, unlabeled rows (possibly none) with targets, and a
/// permutation over the union.
fn mix_case() -> impl Strategy<Value = MixCase> {
    (1usize..6, 0usize..6, 1usize..10, 2usize..5).prop_flat_map(|(nx, nu, d, c)| {
        let rows = move |n: usize| prop::collection::vec(-3.0f64..3.0, n * d).prop_map(move |v| Tensor::new(vec![n, d], v).unwrap());
        (
            rows(nx),
            prop::collection::vec(probs(c), nx),
            rows(nu),
            prop::collection::vec(probs(c), nu),
            perm(nx + nu),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sharpening_never_adds_entropy(p in (2usize..9).prop_flat_map(probs), t in 0.05f64..=1.0) {
        let s = sharpen(&p, t).unwrap();
        prop_assert!(valid(&s));
        prop_assert!(s.entropy() <= p.entropy() + TOL, "{} > {}", s.entropy(), p.entropy());
        prop_assert_eq!(sharpen(&p, 1.0).unwrap(), p);
    }

    #[test]
    fn refinement_stays_a_distribution(
        (p, y) in (2usize..9).prop_flat_map(|c| (probs(c), 0..c)),
        w in 0.0f64..=1.0,
    ) {
        let onehot = ProbVector::one_hot(y, p.len());
        let r = refine_label(&onehot, &p, w).unwrap();
        prop_assert!(valid(&r));
        let expected = w + (1.0 - w) * p.as_slice()[y];
        prop_assert!((r.as_slice()[y] - expected).abs() < 1e-9);
    }

    #[test]
    fn co_guess_stays_a_distribution(
        views in (2usize..7, 1usize..5).prop_flat_map(|(c, m)| {
            (prop::collection::vec(probs(c), m), prop::collection::vec(probs(c), m))
        }),
    ) {
        let g = co_guess(&views.0, &views.1).unwrap();
        prop_assert!(valid(&g));
        let c = g.len();
        let m = views.0.len() as f64;
        for k in 0..c {
            let mean: f64 = views.0.iter().chain(&views.1).map(|p| p.as_slice()[k]).sum::<f64>() / (2.0 * m);
            prop_assert!((g.as_slice()[k] - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn mixup_is_convex((x, tx, u, tu, p) in mix_case(), lam in 0.0f64..=1.0) {
        let (nx, nu) = (x.batch_size(), u.batch_size());
        let unl = (nu > 0).then_some((&u, tu.as_slice()));
        let (mixed, mx, mu) = mixmatch_mix(&x, &tx, unl, lam, &p).unwrap();
        prop_assert_eq!(mx.len(), nx);
        prop_assert_eq!(mu.len(), nu);
        let src = |i: usize| if i < nx { x.row(i) } else { u.row(i - nx) };
        for i in 0..nx + nu {
            let (a, b) = (src(i), src(p[i]));
            for (j, &v) in mixed.row(i).iter().enumerate() {
                prop_assert!(v >= a[j].min(b[j]) - TOL && v <= a[j].max(b[j]) + TOL);
            }
        }
        prop_assert!(mx.iter().chain(&mu).all(valid));
    }

    #[test]
    fn keep_fraction_is_monotone_and_bounded(e1 in 0usize..100, e2 in 0usize..100, tk in 1usize..30, tau in 0.01f64..0.99) {
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let (r_lo, r_hi) = (r_schedule(lo, tk, tau), r_schedule(hi, tk, tau));
        prop_assert!(r_hi <= r_lo);
        for r in [r_lo, r_hi] {
            prop_assert!(r >= 1.0 - tau - TOL && r <= 1.0);
        }
    }

    #[test]
    fn small_loss_selection_keeps_the_smallest(losses in prop::collection::vec(0.0f64..10.0, 0..64), frac in 0.0f64..=1.0) {
        let chosen = select_small_loss(&losses, frac);
        let want = ((frac * losses.len() as f64) - 1e-9).ceil().max(0.0) as usize;
        prop_assert_eq!(chosen.len(), want.min(losses.len()));
        prop_assert!(chosen.windows(2).all(|w| w[0] < w[1]));
        let worst_kept = chosen.iter().map(|&i| losses[i]).fold(f64::MIN, f64::max);
        for (i, &l) in losses.iter().enumerate() {
            if !chosen.contains(&i) {
                prop_assert!(l >= worst_kept);
            }
        }
    }
}
