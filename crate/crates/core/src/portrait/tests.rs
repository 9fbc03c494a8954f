use super::*;
use crate::field::BasisMode;
use proptest::prelude::*;

fn model3() -> PolyVectorField<f64> {
    PolyVectorField::planar(
        [-0.3570, -0.2243],
        &[-0.2637, 6.9566, -16.4522, 11.0347],
        &[1.2710, -6.9038, 13.6668, -8.6907],
    )
    .unwrap()
}

fn model3_literal() -> PolyVectorField<f64> {
    PolyVectorField::planar(
        [-0.3570, -0.2243],
        &[-0.2637, 6.9566, -16.4522, 11.0347],
        &[1.2710, 6.9038, 13.6668, -8.6907],
    )
    .unwrap()
}

fn model5() -> PolyVectorField<f64> {
    PolyVectorField::planar(
        [-0.2677, -0.4655],
        &[2.3520, -8.3986, 11.2901, -5.1815],
        &[1.1757, -1.7697, 0.7948, 0.0172],
    )
    .unwrap()
}

fn contraction() -> PolyVectorField<f64> {
    PolyVectorField::planar([-1.0, -1.0], &[0.0], &[0.0]).unwrap()
}

fn linear(rows: &[Vec<f64>]) -> PolyVectorField<f64> {
    PolyVectorField::linear(&Matrix::from_rows(rows).unwrap()).unwrap()
}

fn square(lo: f64, hi: f64) -> Domain<f64> {
    Domain::boxed(vec![lo, lo], vec![hi, hi]).unwrap()
}

/// Roots of `l^2 - tr l + det` for the planar Jacobian at the origin,
/// which is `[[e1, v1], [w1, e2]]`.
fn origin_roots(e: [f64; 2], v1: f64, w1: f64) -> (f64, f64, bool) {
    let tr = e[0] + e[1];
    let det = e[0] * e[1] - v1 * w1;
    let disc = tr * tr / 4.0 - det;
    if disc < 0.0 {
        (tr / 2.0, (-disc).sqrt(), true)
    } else {
        (tr / 2.0 - disc.sqrt(), tr / 2.0 + disc.sqrt(), false)
    }
}

#[test]
fn origin_of_published_model_is_spiral_attractor() {
    let (re, im, complex) = origin_roots([-0.3570, -0.2243], -0.2637, 1.2710);
    assert!(complex);
    let rec = classify_fixed_point(&model3(), &[0.0, 0.0], &FixedPointOptions::default()).unwrap();
    assert_eq!(rec.class, FixedPointClass::SpiralAttractor);
    let upper = rec.eigenvalues.iter().find(|l| l.im > 0.0).unwrap();
    assert!((upper.re - re).abs() < 1e-12 && (upper.im - im).abs() < 1e-12);
    assert!((upper.re + 0.2907).abs() < 1e-3 && (upper.im - 0.5751).abs() < 1e-3);
}

#[test]
fn origin_of_normalized_model_is_saddle() {
    let (lo, hi, complex) = origin_roots([-0.2677, -0.4655], 2.3520, 1.1757);
    assert!(!complex);
    let rec = classify_fixed_point(&model5(), &[0.0, 0.0], &FixedPointOptions::default()).unwrap();
    assert_eq!(rec.class, FixedPointClass::Saddle);
    let mut re: Vec<f64> = rec.eigenvalues.iter().map(|l| l.re).collect();
    re.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((re[0] - lo).abs() < 1e-12 && (re[1] - hi).abs() < 1e-12);
    assert!((re[0] + 2.032).abs() < 1e-3 && (re[1] - 1.299).abs() < 1e-3);
}

#[test]
fn diagonal_field_is_attractor_node() {
    let m = linear(&[vec![-1.0, 0.0], vec![0.0, -2.0]]);
    let rec = classify_fixed_point(&m, &[0.0, 0.0], &FixedPointOptions::default()).unwrap();
    assert_eq!(rec.class, FixedPointClass::AttractorNode);
    let re: Vec<f64> = rec.eigenvalues.iter().map(|l| l.re).collect();
    assert_eq!(re, vec![-2.0, -1.0]);
}

#[test]
fn class_table() {
    let c = |re: f64, im: f64| Complex::new(re, im);
    let t = 1e-8;
    assert_eq!(classify_eigenvalues(&[c(1.0, 0.0), c(2.0, 0.0)], t), FixedPointClass::RepellerNode);
    assert_eq!(classify_eigenvalues(&[c(1.0, 1.0), c(1.0, -1.0)], t), FixedPointClass::SpiralRepeller);
    assert_eq!(classify_eigenvalues(&[c(0.0, 1.0), c(0.0, -1.0)], t), FixedPointClass::NonHyperbolic);
    assert_eq!(classify_eigenvalues(&[c(-1.0, 0.0), c(1e-9, 0.0)], t), FixedPointClass::NonHyperbolic);
    assert_eq!(
        classify_eigenvalues(&[c(2.5, 0.0), c(-1.8, 10.3), c(-1.8, -10.3)], t),
        FixedPointClass::Saddle
    );
}

#[test]
fn non_fixed_point_rejected() {
    let e = classify_fixed_point(&model3(), &[0.5, 0.5], &FixedPointOptions::default()).unwrap_err();
    assert!(matches!(e, Error::NotFixedPoint { .. }));
}

#[test]
fn contraction_has_only_the_origin() {
    let fps = find_fixed_points(&contraction(), &square(-1.0, 1.0), &FixedPointOptions::default()).unwrap();
    assert_eq!(fps.len(), 1);
    assert_eq!(fps[0].location, vec![0.0, 0.0]);
}

#[test]
fn normalized_model_has_two_fixed_points() {
    let fps = find_fixed_points(&model5(), &square(0.0, 1.0), &FixedPointOptions::default()).unwrap();
    assert_eq!(fps.len(), 2, "{fps:?}");
    assert_eq!(fps[0].class, FixedPointClass::Saddle);
    let p = &fps[1].location;
    assert!(((p[0] - 0.6).powi(2) + (p[1] - 0.5).powi(2)).sqrt() < 0.1);
    assert!(fps[1].class.is_attractor());
}

#[test]
fn published_model_has_three_fixed_points() {
    let fps = find_fixed_points(&model3(), &square(0.0, 10.0), &FixedPointOptions::default()).unwrap();
    let classes: Vec<FixedPointClass> = fps.iter().map(|f| f.class).collect();
    assert_eq!(
        classes,
        vec![FixedPointClass::SpiralAttractor, FixedPointClass::Saddle, FixedPointClass::AttractorNode]
    );
    let (a, b) = (&fps[1].location, &fps[2].location);
    assert!(a[0] < b[0] && a[1] < b[1]);
    assert!(a.iter().all(|&v| v > 0.0 && v < 0.1));
}

#[test]
fn literal_reading_gives_a_spiral_b() {
    let fps = find_fixed_points(&model3_literal(), &square(0.0, 10.0), &FixedPointOptions::default()).unwrap();
    assert_eq!(fps.len(), 3);
    assert_eq!(fps[0].class, FixedPointClass::SpiralAttractor);
    assert_eq!(fps[2].class, FixedPointClass::SpiralAttractor);
}

#[test]
fn fixed_points_lie_on_both_nullclines() {
    let opts = FixedPointOptions::default();
    for (m, b) in [(model3(), square(0.0, 10.0)), (model5(), square(0.0, 1.0))] {
        for fp in find_fixed_points(&m, &b, &opts).unwrap() {
            assert!(fp.residual < opts.tol);
            let f = m.evaluate(&fp.location).unwrap();
            for i in 0..2 {
                assert!((f[i] / m.eps()[i]).abs() < 10.0 * opts.tol);
            }
        }
        let oracle = nullcline_intersections(&m, &b, 20_000).unwrap();
        assert!(oracle.len() >= 2);
    }
}

#[test]
fn newton_seeds_find_points_without_oracle() {
    // all self rates zero disables the nullcline cross-check
    let m = linear(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
    let fps = find_fixed_points(&m, &square(-1.0, 1.0), &FixedPointOptions::default()).unwrap();
    assert_eq!(fps.len(), 1);
    assert_eq!(fps[0].class, FixedPointClass::NonHyperbolic);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn class_survives_time_rescaling(
        e1 in -2.0f64..2.0, e2 in -2.0f64..2.0, v in -2.0f64..2.0, w in -2.0f64..2.0, c in 0.05f64..20.0,
    ) {
        let m = PolyVectorField::planar([e1, e2], &[v], &[w]).unwrap();
        let opts = FixedPointOptions::default();
        let a = classify_fixed_point(&m, &[0.0, 0.0], &opts).unwrap();
        prop_assume!(a.eigenvalues.iter().all(|l| l.re.abs() > 1e-6));
        let b = classify_fixed_point(&m.time_scaled(c), &[0.0, 0.0], &opts).unwrap();
        prop_assert_eq!(a.class, b.class);
    }
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    distance(p, &[a[0] + t * d[0], a[1] + t * d[1]])
}

fn polyline_distance(p: &[f64], line: &[Vec<f64>]) -> f64 {
    if line.len() == 1 {
        return distance(p, &line[0]);
    }
    line.windows(2)
        .map(|w| segment_distance(p, &w[0], &w[1]))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn linear_saddle_separatrix_is_the_vertical_axis() {
    let m = linear(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
    let b = square(-1.0, 1.0);
    let fps = find_fixed_points(&m, &b, &FixedPointOptions::default()).unwrap();
    let seps = separatrices(&m, &b, &fps, &SeparatrixOptions::default()).unwrap();
    assert_eq!(seps.len(), 1);
    let line = &seps[0].points;
    // Hausdorff distance to the segment x = 0, y in [-1, 1]
    let axis: Vec<Vec<f64>> = (0..=2000).map(|k| vec![0.0, -1.0 + k as f64 / 1000.0]).collect();
    let one_way = line.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
    let other_way = axis.iter().map(|q| polyline_distance(q, line)).fold(0.0, f64::max);
    assert!(one_way.max(other_way) < 1e-3, "{one_way} {other_way}");
}

#[test]
fn no_saddle_means_no_separatrix() {
    let b = square(0.0, 1.0);
    let fps = find_fixed_points(&contraction(), &b, &FixedPointOptions::default()).unwrap();
    assert!(separatrices(&contraction(), &b, &fps, &SeparatrixOptions::default()).unwrap().is_empty());
}

#[test]
fn contraction_basin_is_everything() {
    let b = square(0.0, 1.0);
    let m = contraction();
    let fps = find_fixed_points(&m, &b, &FixedPointOptions::default()).unwrap();
    let grid = GridSpec::over(&b, 6, false).unwrap();
    let (basins, seps) = basin_and_separatrix(&m, &b, &grid, &fps, &TrajectoryOptions::default()).unwrap();
    assert!(seps.is_empty());
    assert!(basins.labels.iter().all(|l| *l == SampleOutcome::Converged { point: 0 }));
}

fn model3_portrait() -> (PolyVectorField<f64>, Domain<f64>, Vec<FixedPointRecord<f64>>, Separatrix<f64>) {
    let m = model3();
    let b = square(0.0, 1.0);
    let fps = find_fixed_points(&m, &b, &FixedPointOptions::default()).unwrap();
    let mut seps = separatrices(&m, &b, &fps, &SeparatrixOptions::default()).unwrap();
    assert_eq!(seps.len(), 1);
    (m, b, fps, seps.remove(0))
}

#[test]
fn seeds_straddling_the_separatrix_part_ways() {
    let (m, b, fps, sep) = model3_portrait();
    let locs: Vec<Vec<f64>> = fps.iter().map(|f| f.location.clone()).collect();
    let b_index = fps.iter().position(|f| f.class == FixedPointClass::AttractorNode).unwrap();
    let saddle = &fps[sep.saddle].location;
    let centre = sep.points.iter().position(|p| p == saddle).unwrap();
    let mut checked = 0;
    for thr in [0.005, 0.01, 0.02] {
        let up = (centre..sep.points.len() - 1).find(|&i| distance(&sep.points[i], saddle) >= thr);
        let down = (1..=centre).rev().find(|&i| distance(&sep.points[i], saddle) >= thr);
        for i in [up, down].into_iter().flatten() {
            let (p, q) = (&sep.points[i], &sep.points[i + 1]);
            let d = [q[0] - p[0], q[1] - p[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let normal = [-d[1] / len, d[0] / len];
            let side = |s: f64| vec![p[0] + s * 0.002 * normal[0], p[1] + s * 0.002 * normal[1]];
            let (l, r) = (side(1.0), side(-1.0));
            assert!(b.contains(&l) && b.contains(&r));
            let fate = |x: &[f64]| {
                trajectory(&m, x, &b, &locs, &TrajectoryOptions { record_every: 0, ..Default::default() })
                    .unwrap()
                    .termination
            };
            let (tl, tr) = (fate(&l), fate(&r));
            let to_b = |t: &Termination<f64>| matches!(t, Termination::Converged { point, .. } if *point == b_index);
            let escaped = |t: &Termination<f64>| matches!(t, Termination::Escaped { .. });
            assert!((to_b(&tl) && escaped(&tr)) || (to_b(&tr) && escaped(&tl)), "{tl:?} vs {tr:?} at {p:?}");
            checked += 1;
        }
    }
    assert!(checked >= 4);
}

#[test]
fn separatrix_vertices_flow_to_the_saddle() {
    let (m, _, fps, sep) = model3_portrait();
    let saddle = &fps[sep.saddle].location;
    let lin = linear(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
    let lb = square(-1.0, 1.0);
    let lfps = find_fixed_points(&lin, &lb, &FixedPointOptions::default()).unwrap();
    let lsep = separatrices(&lin, &lb, &lfps, &SeparatrixOptions::default()).unwrap().remove(0);
    for (field, line, target) in [(&m, &sep.points, saddle.clone()), (&lin, &lsep.points, vec![0.0, 0.0])] {
        let count = line.len();
        for idx in [count / 8, count / 4, 3 * count / 4, 7 * count / 8] {
            let mut x = line[idx].clone();
            let mut last = distance(&x, &target);
            if last < 1e-3 {
                continue;
            }
            for _ in 0..20 {
                x = crate::integrate::advance(field, &x, 0.25, 0.005).unwrap();
                let d = distance(&x, &target);
                assert!(d < last, "distance grew from {last} to {d}");
                last = d;
            }
        }
    }
}

#[test]
fn basin_labels_stable_under_refinement() {
    let (m, b, fps, sep) = model3_portrait();
    let coarse = GridSpec::over(&b, 8, true).unwrap();
    let fine = GridSpec::over(&b, 16, true).unwrap();
    let opts = TrajectoryOptions::default();
    let (cb, _) = basin_and_separatrix(&m, &b, &coarse, &fps, &opts).unwrap();
    let (fb, _) = basin_and_separatrix(&m, &b, &fine, &fps, &opts).unwrap();
    let delta = 2.0 * coarse.spacing();
    let fine_pts = fine.points();
    let mut compared = 0;
    for (i, p) in coarse.points().iter().enumerate() {
        if polyline_distance(p, &sep.points) < delta {
            continue;
        }
        let j = (0..fine_pts.len())
            .min_by(|&a, &c| distance(&fine_pts[a], p).partial_cmp(&distance(&fine_pts[c], p)).unwrap())
            .unwrap();
        assert_eq!(cb.labels[i], fb.labels[j], "at {p:?}");
        compared += 1;
    }
    assert!(compared > 10);
}

#[test]
fn contraction_is_trending() {
    let b = square(0.0, 1.0);
    let g = GridSpec::over(&b, 21, false).unwrap();
    let r = trending_check(&contraction(), &b, &g, &[vec![0.0, 0.0]], &TrajectoryOptions::default()).unwrap();
    assert_eq!((r.converged, r.escaped, r.undecided), (441, 0, 0));
    assert_eq!(r.verdict, Verdict::TrendingWithinHorizon);
}

#[test]
fn rotation_is_undecided() {
    let m = linear(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
    let g = GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 5, true).unwrap();
    let opts = TrajectoryOptions {
        horizon: 50.0,
        ..TrajectoryOptions::default()
    };
    let r = trending_check(&m, &Domain::unbounded(2), &g, &[vec![0.0, 0.0]], &opts).unwrap();
    for (i, o) in r.outcomes.iter().enumerate() {
        if g.point(i).iter().any(|&v| v != 0.0) {
            assert_eq!(*o, SampleOutcome::Undecided);
        }
    }
    assert_eq!(r.verdict, Verdict::NotTrendingWithinHorizon);
    assert_eq!(r.theorem, None);
}

#[test]
fn nonnegative_rates_escape_and_cite_theorem() {
    let m = linear(&[vec![0.1, 1.0], vec![1.0, 0.1]]);
    let g = GridSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], 9, true).unwrap();
    let r = trending_check(&m, &square(0.0, 10.0), &g, &[vec![0.0, 0.0]], &TrajectoryOptions::default()).unwrap();
    assert_eq!((r.converged, r.escaped, r.undecided), (0, 81, 0));
    assert_eq!(r.verdict, Verdict::TrendingWithinHorizon);
    assert_eq!(r.theorem.as_deref(), Some("trending by cited theorem (ε≥0)"));
}

#[test]
fn grid_counts_and_placement() {
    let g = GridSpec::new(vec![0.0, 0.0], vec![1.0, 2.0], 3, false).unwrap();
    assert_eq!(g.len(), 9);
    assert_eq!(g.point(0), vec![0.0, 0.0]);
    assert_eq!(g.point(1), vec![0.0, 1.0]);
    assert_eq!(g.point(8), vec![1.0, 2.0]);
    let i = GridSpec::new(vec![0.0], vec![1.0], 3, true).unwrap();
    assert_eq!(i.points(), vec![vec![0.25], vec![0.5], vec![0.75]]);
    assert!(GridSpec::new(vec![0.0], vec![f64::INFINITY], 3, false).is_err());
}

#[test]
fn working_box_caps_unbounded_axes() {
    let b = working_box(&Domain::<f64>::nonnegative(2), &[1.0, 0.5], 10.0).unwrap();
    assert_eq!(b.lower, vec![0.0, 0.0]);
    assert_eq!(b.upper, vec![10.0, 5.0]);
}

fn quick_opts() -> PortraitOptions<f64> {
    PortraitOptions {
        grid: 10,
        trending_grid: Some(4),
        ..PortraitOptions::default()
    }
}

#[test]
fn export_counts_field_samples() {
    let d = export_portrait(&model5(), &square(0.0, 1.0), &quick_opts()).unwrap();
    assert_eq!(d.field_samples.len(), 100);
    assert_eq!(d.fixed_points.len(), 2);
    assert_eq!(d.nullclines.len(), 2);
    let json: serde_json::Value = serde_json::from_str(&d.to_json().unwrap()).unwrap();
    for key in ["model_ref", "box", "grid", "field_samples", "fixed_points", "nullclines", "separatrices", "trajectories", "trending_report"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn exported_nullclines_meet_at_fixed_points() {
    let d = export_portrait(&model5(), &square(0.0, 1.0), &quick_opts()).unwrap();
    for fp in &d.fixed_points {
        for nc in &d.nullclines {
            let dist = nc
                .segments
                .iter()
                .map(|s| polyline_distance(&fp.location, s))
                .fold(f64::INFINITY, f64::min);
            assert!(dist < 1e-3, "{:?} is {dist} from nullcline {}", fp.location, nc.component);
        }
    }
}

fn three_d() -> PolyVectorField<f64> {
    let n = 3;
    let components = (0..n)
        .map(|i| {
            basis(n, i, 2, BasisMode::Full)
                .into_iter()
                .enumerate()
                .map(|(k, monomial)| crate::field::Term {
                    monomial,
                    coefficient: 0.1 * ((k + i) % 3) as f64 - 0.05,
                })
                .collect()
        })
        .collect();
    PolyVectorField::new(vec![-0.5, -0.4, 0.2], 2, BasisMode::Full, components).unwrap()
}

use crate::field::basis;

#[test]
fn svg_panels_follow_dimension() {
    let d2 = export_portrait(&model5(), &square(0.0, 1.0), &quick_opts()).unwrap();
    let s2 = render_svg(&d2).unwrap();
    assert_eq!(s2.matches("<clipPath").count(), 1);
    assert!(s2.starts_with("<svg") && s2.trim_end().ends_with("</svg>"));
    let b3 = Domain::boxed(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let opts = PortraitOptions {
        grid: 4,
        trending_grid: None,
        trajectories_per_axis: 2,
        fixed_points: FixedPointOptions {
            seeds_per_axis: 6,
            ..FixedPointOptions::default()
        },
        ..PortraitOptions::default()
    };
    let d3 = export_portrait(&three_d(), &b3, &opts).unwrap();
    assert_eq!(d3.field_samples.len(), 64);
    assert!(d3.nullclines.is_empty());
    assert_eq!(render_svg(&d3).unwrap().matches("<clipPath").count(), 3);
    let mut d4 = d3.clone();
    d4.variables.push("x4".into());
    assert!(render_svg(&d4).is_none());
}

#[test]
fn export_is_deterministic() {
    let a = export_portrait(&model3(), &square(0.0, 1.0), &quick_opts()).unwrap();
    let b = export_portrait(&model3(), &square(0.0, 1.0), &quick_opts()).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(render_svg(&a), render_svg(&b));
}

