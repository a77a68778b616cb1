mod common;

use common::*;
use nalgebra::DMatrix;
use netsemi::evolve::{diffusion_evolve, diffusion_step, TransportFlow};
use netsemi::gridfn::{abs_state, Grid, NetworkState};
use netsemi::posit::{check_diffusion_positivity, diffusion_pmp_witness};
use netsemi::spectral::{char_det_transport, find_roots, Region};
use netsemi::transres::{solve_resolvent_transport, TransportMethod};
use netsemi::{Complex64, Error};
use rand::Rng;

/// `K = diag(2, 2)` with speeds `(1, 10)`: the fast edge wraps ten times by
/// `t = 1` and doubles at every wrap, while the dominating flow at the
/// minimal speed wraps once.
fn fast_edge_example() -> (netsemi::netmodel::TransportCoupling, NetworkState<f64>) {
    let tc = transport(DMatrix::from_diagonal_element(2, 2, 2.0), vec![1.0, 10.0]);
    let u0 = NetworkState::from_fn(Grid::uniform(10).unwrap(), 2, |j, _| if j == 1 { 1.0 } else { 0.0 });
    (tc, u0)
}

#[test]
fn min_speed_domination_fails_for_fast_edges() {
    let (tc, u0) = fast_edge_example();
    let slow = transport(tc.k.abs(), vec![1.0; 2]);
    let signed = TransportFlow::new(&u0, &tc, 1.0).unwrap().observables_at(1.0).unwrap().l1;
    let dominating = TransportFlow::new(&abs_state(&u0), &slow, 1.0).unwrap().observables_at(1.0).unwrap().l1;
    assert!((signed - 1024.0).abs() <= 1e-9, "{signed}");
    assert!((dominating - 2.0).abs() <= 1e-12, "{dominating}");
}

#[test]
fn min_speed_resolvent_bound_fails_between_growth_rates() {
    // growth bounds: 10 ln 2 for the fast edge, ln 2 at the minimal speed
    let (tc, u0) = fast_edge_example();
    let slow = transport(tc.k.abs(), vec![1.0; 2]);
    let lambda = Complex64::new(7.0, 0.0);
    let signed = solve_resolvent_transport(lambda, &tc, &u0, TransportMethod::Direct).unwrap();
    let dominating = solve_resolvent_transport(lambda, &slow, &u0, TransportMethod::Direct).unwrap();
    assert!(signed.u.l1() > 5.0 * dominating.u.l1(), "{} vs {}", signed.u.l1(), dominating.u.l1());
}

#[test]
fn min_speed_domination_holds_with_equal_speeds() {
    let mut rng = rng(401);
    for _ in 0..20 {
        let m = rng.gen_range(1..=4);
        let c = vec![rng.gen_range(0.5..2.0); m];
        let tc = transport(matrix(&mut rng, m, -1.5, 1.5), c);
        let u0 = rough_state(&mut rng, &Grid::uniform(30).unwrap(), m, -1.0, 1.0);
        let signed = TransportFlow::new(&u0, &tc, 1.0).unwrap();
        let dominating = TransportFlow::new(&abs_state(&u0), &tc.modulus(), 1.0).unwrap();
        for t in [0.25, 0.5, 1.0] {
            let (a, b) = (signed.observables_at(t).unwrap().l1, dominating.observables_at(t).unwrap().l1);
            assert!(a <= b + 1e-9, "{a} > {b}");
        }
    }
}

#[test]
fn diffusion_witness_turns_negative_at_short_times() {
    let mut rng = rng(402);
    let grid = Grid::uniform(400).unwrap();
    for _ in 0..10 {
        let m = rng.gen_range(1..=3);
        let s = sigmas(&mut rng, m);
        let dc = violating_coupling(&mut rng, m, 1.0, s);
        if m == 1 && check_diffusion_positivity(&dc).positive {
            continue;
        }
        let (u, spec) = diffusion_pmp_witness(&dc, &grid).unwrap();
        assert!(spec.certificate.verifies());
        assert!(u.min_value() >= 0.0);
        let at = |h: f64| {
            let next = diffusion_step(&u, &dc, h).unwrap();
            next.eval(spec.certificate.edge, spec.certificate.x0).unwrap()
        };
        let (coarse, fine) = (at(4e-4), at(1e-4));
        assert!(coarse < 0.0 && fine < 0.0, "{coarse}, {fine}");
        assert!(fine.abs() < coarse.abs(), "{coarse}, {fine}");
    }
}

#[test]
fn positive_couplings_keep_data_nonnegative() {
    let mut rng = rng(403);
    let grid = Grid::uniform(60).unwrap();
    for _ in 0..10 {
        let m = rng.gen_range(1..=3);
        let s = sigmas(&mut rng, m);
        let dc = positive_coupling(&mut rng, m, 2.0, s);
        let u0 = rough_state(&mut rng, &grid, m, 0.0, 1.0);
        let traj = diffusion_evolve(&u0, &dc, 0.1, 50, 1).unwrap();
        assert!(traj.states.iter().all(|s| s.min_value() >= -1e-9));
    }
}

fn transport_roots(tc: &netsemi::netmodel::TransportCoupling, region: Region, step: f64) -> Vec<Complex64> {
    find_roots(|z| Ok(char_det_transport(z, tc)), region, step, 1e-9)
        .unwrap()
        .into_iter()
        .map(|r| r.lambda)
        .collect()
}

#[test]
fn root_sets_are_stable_under_scan_refinement() {
    let mut rng = rng(404);
    let region = Region::new(-2.0, 2.0, -8.0, 8.0).unwrap();
    for _ in 0..5 {
        let m = rng.gen_range(1..=2);
        let tc = transport(matrix(&mut rng, m, 0.2, 1.5), speeds(&mut rng, m));
        let coarse = transport_roots(&tc, region, 0.1);
        let fine = transport_roots(&tc, region, 0.05);
        // roots on the region's edge may fall either way
        let inner = |v: &[Complex64]| -> Vec<Complex64> {
            v.iter().copied().filter(|z| z.re.abs() < 1.9 && z.im.abs() < 7.9).collect()
        };
        let (mut a, mut b) = (inner(&coarse), inner(&fine));
        for v in [&mut a, &mut b] {
            v.sort_by(|x, y| x.im.total_cmp(&y.im).then(x.re.total_cmp(&y.re)));
        }
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-8, "{x} vs {y}");
        }
    }
}

#[test]
fn every_root_is_flagged_by_the_resolvent() {
    let mut rng = rng(405);
    let region = Region::new(-2.0, 2.0, -8.0, 8.0).unwrap();
    let f = NetworkState::constant(Grid::uniform(8).unwrap(), 2, 1.0);
    let mut checked = 0;
    for _ in 0..5 {
        let tc = transport(matrix(&mut rng, 2, -1.5, 1.5), speeds(&mut rng, 2));
        for z in transport_roots(&tc, region, 0.05) {
            let err = solve_resolvent_transport(z, &tc, &f, TransportMethod::Direct).unwrap_err();
            assert!(matches!(err, Error::NearSpectrum { .. }), "{err:?}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}
