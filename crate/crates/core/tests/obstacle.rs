use std::f64::consts::PI;
use std::sync::Arc;

use renorm_core::obstacle::{
    barrier_check, coincidence_metrics, solve_h0, solve_obstacle, sweep_m, u_q, unit_disk_radius, verify_gradient_bound,
    verify_scale_law, BarrierKind, DomainGrid, GridFunction, RecordStatus, Shape, BOUNDARY_VALUE,
};
use renorm_core::{Error, Vec2};

const TOL: f64 = 1e-10;

fn grid(shape: Shape, h: f64) -> Arc<DomainGrid> {
    Arc::new(DomainGrid::new(shape, h).unwrap())
}

/// `1 - h_0` at the centre of `[-1, 1]^2` by its double sine series.
fn square_center_deficit() -> f64 {
    let mut s = 0.0;
    for j in (1..400).step_by(2) {
        for k in (1..400).step_by(2) {
            let sign = if ((j - 1) / 2 + (k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let (jf, kf) = (j as f64, k as f64);
            s += sign * 16.0 / (PI * PI * jf * kf) / (1.0 + PI * PI / 4.0 * (jf * jf + kf * kf));
        }
    }
    s
}

#[test]
fn h0_on_the_square_matches_its_sine_series() {
    let sq = Shape::polygon(vec![Vec2::new(-1.0, -1.0), Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0)])
        .unwrap();
    let s = solve_h0(&grid(sq, 1.0 / 64.0), TOL).unwrap();
    let oracle = 1.0 - square_center_deficit();
    assert!((s.h0_min - oracle).abs() < 1e-4, "{} vs {oracle}", s.h0_min);
    assert!(s.x0.norm() < 1e-12);
}

#[test]
fn h0_respects_the_symmetries_of_the_square() {
    let sq = Shape::polygon(vec![Vec2::new(-1.0, -1.0), Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0)])
        .unwrap();
    let g = grid(sq, 1.0 / 16.0);
    let s = solve_h0(&g, TOL).unwrap();
    for (k, n) in g.nodes().iter().enumerate() {
        let at = |x: f64, y: f64| g.node_at((x / g.h).round() as i32, (y / g.h).round() as i32).unwrap();
        for m in [at(-n.x.x, n.x.y), at(n.x.y, n.x.x), at(n.x.x, -n.x.y)] {
            assert!((s.values[k] - s.values[m]).abs() < 1e-9);
        }
    }
}

#[test]
fn ellipse_coincidence_set_follows_the_long_axis() {
    let g = grid(Shape::ellipse(1.5, 1.0).unwrap(), 1.0 / 32.0);
    let h0 = solve_h0(&g, TOL).unwrap();
    let f = solve_obstacle(&g, h0.h0_min + 0.05, TOL).unwrap();
    let mt = coincidence_metrics(&f);
    assert!(mt.axis_ratio > 1.05, "{}", mt.axis_ratio);
    assert!(mt.orientation.abs() < 1e-6 || (mt.orientation.abs() - PI).abs() < 1e-6);
    assert!(mt.centroid.norm() < 2.0 * g.h);
}

#[test]
fn full_obstacle_covers_any_domain() {
    let tri = Shape::polygon(vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(0.5, 1.5)]).unwrap();
    let g = grid(tri, 1.0 / 32.0);
    let f = solve_obstacle(&g, 1.0, TOL).unwrap();
    assert_eq!(f.active_count(), g.len());
    assert!((coincidence_metrics(&f).area - 1.5).abs() < 0.1);
}

#[test]
fn barrier_examples() {
    let g = grid(Shape::UnitDisk, 1.0 / 32.0);
    let h0 = solve_h0(&g, TOL).unwrap();
    let low = solve_obstacle(&g, h0.h0_min - 0.05, TOL).unwrap();
    let ext = barrier_check(&low, &h0.as_candidate(), BarrierKind::Exterior).unwrap();
    assert!(ext.hypotheses && ext.conclusion);
    let refl = barrier_check(&low, &low.as_candidate(), BarrierKind::Interior).unwrap();
    assert!(refl.hypotheses && refl.conclusion);

    let (m, mp) = (0.85, 0.9);
    let f = sweep_m(&g, &[m, mp], TOL).unwrap();
    let lifted = GridFunction { values: f[1].values.iter().map(|v| v + (mp - m)).collect(), boundary: BOUNDARY_VALUE + (mp - m) };
    let int = barrier_check(&f[0], &lifted, BarrierKind::Interior).unwrap();
    assert!(int.hypotheses && int.conclusion);

    // a candidate below the obstacle fails a hypothesis
    let sunk = GridFunction { values: vec![0.0; g.len()], boundary: BOUNDARY_VALUE };
    assert!(!barrier_check(&f[0], &sunk, BarrierKind::Interior).unwrap().hypotheses);

    let other = grid(Shape::UnitDisk, 1.0 / 16.0);
    let wrong = solve_h0(&other, TOL).unwrap().as_candidate();
    assert_eq!(barrier_check(&f[0], &wrong, BarrierKind::Interior).unwrap_err(), Error::GridMismatch);
}

#[test]
fn gradient_bound_on_the_disk() {
    let g = grid(Shape::UnitDisk, 1.0 / 32.0);
    let r = verify_gradient_bound(&sweep_m(&g, &[0.9, 0.95, 0.99, 1.0], TOL).unwrap());
    assert!(r.bounded, "{r:?}");
    assert_eq!(r.entries[3].sup_grad, 0.0);
    assert!(r.entries[3].ratio.is_none());
    let d: Vec<f64> = r.entries.iter().map(|e| e.deficit).collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn scale_law_skips_levels_below_the_minimum() {
    let g = grid(Shape::UnitDisk, 1.0 / 32.0);
    let h0 = solve_h0(&g, TOL).unwrap();
    let fields = sweep_m(&g, &[h0.h0_min - 0.01, h0.h0_min + 0.005, h0.h0_min + 0.1], TOL).unwrap();
    let r = verify_scale_law(&fields, h0.h0_min);
    assert_eq!(r.records[0].status, RecordStatus::EmptySet);
    assert!(r.records[0].ratio.is_none());
    assert_eq!(r.records[1].status, RecordStatus::UnderResolved);
    assert_eq!(r.records[2].status, RecordStatus::Resolved);
    assert!(r.records[2].ratio.unwrap().is_finite());
}

#[test]
fn ellipse_potential_closed_form() {
    let r0 = unit_disk_radius();
    assert!((PI * r0 * r0 - 1.0).abs() < 1e-15);
    let dq = 1.7;
    assert_eq!(u_q(r0, dq), 0.0);
    assert_eq!(u_q(0.3 * r0, dq), 0.0);
    let e = 1e-6;
    assert!((u_q(r0 + e, dq) - u_q(r0, dq)).abs() / e < 1e-5);
    // radial Laplacian equals dq / 2 outside the disk
    let r = 1.3;
    let lap = (u_q(r + e, dq) - 2.0 * u_q(r, dq) + u_q(r - e, dq)) / (e * e) + (u_q(r + e, dq) - u_q(r - e, dq)) / (2.0 * e * r);
    assert!((lap - dq / 2.0).abs() < 1e-3, "{lap}");
    let big = 1e4;
    assert!((u_q(big, dq) / (dq / 8.0 * big * big) - 1.0).abs() < 1e-6);
}
