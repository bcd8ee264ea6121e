use std::collections::BTreeMap;

use proptest::prelude::*;

use parkbeam::calendar::LocalCalendar;
use parkbeam::cluster::{adjusted_rand, canonical_labels};
use parkbeam::coverage::{classify, coverage_quality, SelectionThresholds, Verdict};
use parkbeam::geom::{polygon_intersection, project, sector_split, unproject, voronoi_cells, GeoPoint, PlanarPoint, SectorSpec, SimplePolygon};
use parkbeam::metrics::{rca, rsca, UnitAppMatrix};
use parkbeam::stats::{levene, pearson, student_t, welch_t, LeveneCenter};
use parkbeam::tags::{relative_importance, tag_probability, TagTable};
use parkbeam::traffic::{daily_volumes, wd_we_ratio, zone_traffic, AppAxis, SeriesSet, TrafficSeries};

fn convex_polygon() -> impl Strategy<Value = SimplePolygon> {
    (
        -50.0..50.0f64,
        -50.0..50.0f64,
        5.0..40.0f64,
        prop::collection::vec(0.0..1.0f64, 3..10),
    )
        .prop_map(|(cx, cy, r, mut t)| {
            t.sort_by(f64::total_cmp);
            t.dedup_by(|a, b| (*a - *b).abs() < 0.02);
            if t.len() < 3 {
                t = vec![0.0, 0.33, 0.66];
            }
            let ring = t
                .iter()
                .map(|u| {
                    let a = u * std::f64::consts::TAU;
                    PlanarPoint::new(cx + r * a.cos(), cy + r * a.sin())
                })
                .collect();
            SimplePolygon::new(ring).unwrap()
        })
}

fn matrix() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2usize..6, 2usize..6).prop_flat_map(|(u, a)| (Just(u), Just(a), prop::collection::vec(1.0..1e6f64, u * a)))
}

fn labels() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..4, 2..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn area_is_translation_invariant(p in convex_polygon(), dx in -1e3..1e3f64, dy in -1e3..1e3f64) {
        let q = p.translated(dx, dy).unwrap();
        prop_assert!((p.area() - q.area()).abs() <= 1e-9 * p.area().max(1.0));
    }

    #[test]
    fn intersection_is_symmetric_and_bounded(a in convex_polygon(), b in convex_polygon()) {
        let ab: f64 = polygon_intersection(&a, &b).unwrap().iter().map(|p| p.area()).sum();
        let ba: f64 = polygon_intersection(&b, &a).unwrap().iter().map(|p| p.area()).sum();
        prop_assert!((ab - ba).abs() <= 1e-7 * a.area().max(b.area()));
        prop_assert!(ab <= a.area().min(b.area()) * (1.0 + 1e-9));
        let aa: f64 = polygon_intersection(&a, &a).unwrap().iter().map(|p| p.area()).sum();
        prop_assert!((aa - a.area()).abs() <= 1e-7 * a.area());
    }

    #[test]
    fn voronoi_cells_tile_the_box(pts in prop::collection::vec((1.0..99.0f64, 1.0..99.0f64), 1..25)) {
        let mut sites: Vec<PlanarPoint> = pts.into_iter().map(|(x, y)| PlanarPoint::new(x, y)).collect();
        sites.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        sites.dedup_by(|a, b| a.distance(b) < 1e-3);
        let bbox = SimplePolygon::rectangle(PlanarPoint::new(0.0, 0.0), PlanarPoint::new(100.0, 100.0)).unwrap();
        let cells = voronoi_cells(&sites, &bbox).unwrap();
        let total: f64 = cells.iter().map(|c| c.area()).sum();
        prop_assert!((total - 1e4).abs() < 1e-6 * 1e4);
        for (s, c) in sites.iter().zip(&cells) {
            prop_assert!(c.contains_or_touches(*s, 1e-9));
        }
    }

    #[test]
    fn wedges_partition_a_cell(k in 2usize..6, rot in 0.0..360.0f64, cell in convex_polygon()) {
        let site = cell.centroid();
        let az = (0..k).map(|j| (rot + 360.0 * j as f64 / k as f64) % 360.0);
        let spec = SectorSpec::new(site, az).unwrap();
        let wedges = sector_split(&cell, &spec).unwrap();
        let sum: f64 = wedges.iter().map(|(_, w)| w.area()).sum();
        prop_assert!((sum - cell.area()).abs() <= 1e-6 * cell.area());
    }

    #[test]
    fn projection_round_trips(lon in -10.0..10.0f64, lat in 30.0..60.0f64, dx in -0.2..0.2f64, dy in -0.2..0.2f64) {
        let o = GeoPoint::new(lon, lat);
        let p = project(lon + dx, lat + dy, o).unwrap();
        let g = unproject(p, o);
        prop_assert!((g.lon - lon - dx).abs() < 1e-9 && (g.lat - lat - dy).abs() < 1e-9);
    }

    #[test]
    fn quality_lies_between_its_inputs(cp in 1e-6..3.0f64, ip in 1e-6..1.0f64) {
        let q = coverage_quality(cp, ip).unwrap();
        prop_assert!(q >= cp.min(ip) * (1.0 - 1e-12) && q <= cp.max(ip) * (1.0 + 1e-12));
    }

    #[test]
    fn classification_is_monotone_in_quality(ip in 0.0..1.0f64, q in 0.0..1.0f64, dq in 0.0..0.5f64) {
        let t = SelectionThresholds::default();
        if classify(ip, q, &t) == Verdict::Selected {
            prop_assert_eq!(classify(ip, q + dq, &t), Verdict::Selected);
        }
    }

    #[test]
    fn rca_weighted_mean_is_one((u, a, v) in matrix(), c in 1e-3..1e3f64) {
        let units = (0..u).map(|i| format!("u{i}")).collect::<Vec<_>>();
        let cols = (0..a).map(|i| format!("a{i}")).collect::<Vec<_>>();
        let m = UnitAppMatrix::new(units.clone(), cols.clone(), v.clone()).unwrap();
        let r = rca(&m).unwrap();
        let w: Vec<f64> = m.col_sums().iter().map(|s| s / m.total()).collect();
        for i in 0..u {
            let s: f64 = (0..a).map(|j| w[j] * r.get(i, j)).sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            for j in 0..a {
                let x = rsca(r.get(i, j));
                prop_assert!((-1.0..=1.0).contains(&x));
            }
        }
        let scaled = rca(&m.scaled(c).unwrap()).unwrap();
        for i in 0..u {
            for j in 0..a {
                prop_assert!((scaled.get(i, j) - r.get(i, j)).abs() <= 1e-12 * r.get(i, j).max(1.0));
            }
        }
        // reversing the unit order reverses the rows
        let rev: Vec<f64> = (0..u).rev().flat_map(|i| v[i * a..(i + 1) * a].to_vec()).collect();
        let rr = rca(&UnitAppMatrix::new(units.iter().rev().cloned().collect(), cols, rev).unwrap()).unwrap();
        for i in 0..u {
            for j in 0..a {
                prop_assert!((rr.get(u - 1 - i, j) - r.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn welch_and_student_are_antisymmetric(
        x in prop::collection::vec(-100.0..100.0f64, 3..20),
        y in prop::collection::vec(-100.0..100.0f64, 3..20),
    ) {
        for f in [student_t, welch_t] {
            let a = f(&x, &y).unwrap();
            let b = f(&y, &x).unwrap();
            prop_assert!((a.statistic + b.statistic).abs() < 1e-9 * a.statistic.abs().max(1.0));
            prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.p_value));
        }
        let l = levene(&x, &y, LeveneCenter::Mean).unwrap();
        prop_assert!((0.0..=1.0).contains(&l.p_value));
    }

    #[test]
    fn pearson_is_bounded(pairs in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 4..40)) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(c) = pearson(&x, &y) {
            prop_assert!(c.rho.abs() <= 1.0 + 1e-12);
            prop_assert!((0.0..=1.0).contains(&c.p_value));
        }
    }

    #[test]
    fn tag_identity_holds(rows in prop::collection::vec((0usize..5, 0usize..8, 1u64..50), 1..40)) {
        let mut cells = BTreeMap::new();
        for (z, t, n) in rows {
            cells.insert((format!("z{z}"), format!("t{t}")), n);
        }
        let table = TagTable::from_counts(cells.into_iter().map(|((z, t), n)| (z, t, n))).unwrap();
        let p = tag_probability(&table);
        let r = relative_importance(&table);
        for z in table.zones() {
            let s: f64 = r.iter().filter(|((zz, _), _)| zz == z).map(|((_, t), v)| p[t] * v).sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ari_is_symmetric_and_relabeling_invariant(a in labels(), perm in Just([2usize, 0, 3, 1])) {
        let b: Vec<usize> = a.iter().rev().copied().collect();
        let ab = adjusted_rand(&a, &b).unwrap();
        let ba = adjusted_rand(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        let relabeled: Vec<usize> = a.iter().map(|&l| perm[l]).collect();
        prop_assert!((adjusted_rand(&a, &relabeled).unwrap() - 1.0).abs() < 1e-12);
        prop_assert_eq!(canonical_labels(&a), canonical_labels(&relabeled));
    }

    #[test]
    fn zone_traffic_is_linear_and_daily_partitions(
        vols in prop::collection::vec(0.0..1e4f64, 48),
        w in 0.01..1.0f64,
        c in 0.5..4.0f64,
    ) {
        let cal = LocalCalendar::paris_2023();
        let start = 1_686_002_400; // local midnight, Tuesday 2023-06-06
        let axis = AppAxis::new(vec!["x".into()]).unwrap();
        let mut set = SeriesSet::new(axis.clone());
        let mut doubled = SeriesSet::new(axis);
        let (mut s, mut s2) = (TrafficSeries::default(), TrafficSeries::default());
        for (h, v) in vols.iter().enumerate() {
            s.add(start + 3600 * h as i64, 0, 1, *v);
            s2.add(start + 3600 * h as i64, 0, 1, c * v);
        }
        set.insert("A".into(), s.clone());
        doubled.insert("A".into(), s2);
        let weights = BTreeMap::from([("Z".to_string(), vec![("A".to_string(), w)])]);
        let z = zone_traffic(&set, &weights).unwrap();
        let z2 = zone_traffic(&doubled, &weights).unwrap();
        let t1 = z.get("Z").unwrap().total();
        prop_assert!((z2.get("Z").unwrap().total() - c * t1).abs() <= 1e-9 * t1.max(1.0));
        let daily = daily_volumes(&s, &cal).unwrap();
        let sum: f64 = daily.values().sum();
        prop_assert!((sum - s.total()).abs() <= 1e-9 * sum.max(1.0));
        prop_assert_eq!(daily.len(), 2);
    }

    #[test]
    fn ratio_is_scale_invariant(wd in 1.0..1e6f64, we in 1.0..1e6f64, c in 1e-3..1e3f64) {
        let cal = LocalCalendar::paris_2023();
        let d0 = chrono::NaiveDate::from_ymd_opt(2023, 6, 5).unwrap();
        let daily: BTreeMap<_, _> = (0..7u64)
            .map(|i| {
                let d = d0 + chrono::Days::new(i);
                (d, if i < 5 { wd } else { we })
            })
            .collect();
        let scaled: BTreeMap<_, _> = daily.iter().map(|(d, v)| (*d, v * c)).collect();
        let a = wd_we_ratio(&daily, &cal).unwrap();
        let b = wd_we_ratio(&scaled, &cal).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert!((a - wd / we).abs() <= 1e-12 * a);
    }
}
