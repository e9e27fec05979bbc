// SPDX-License-Identifier: Apache-2.0

use std::sync::OnceLock;

use fuelctrl::*;
use proptest::prelude::*;

fn canonical() -> &'static [PiecewiseValue; 2] {
    static PV: OnceLock<[PiecewiseValue; 2]> = OnceLock::new();
    PV.get_or_init(|| {
        let (ls, ld) = (lambda_star(1.0, 1.0), lambda_dagger(1.0, 1.0).unwrap());
        let mk = |l: f64| PiecewiseValue::new(&ProblemParams::new(l, 1.0, 1.0).unwrap()).unwrap();
        [mk(0.5 * (ld + 1.0)), mk(0.5 * (ls + ld))]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn thresholds_ordered_and_f0_identities(a in 0.2f64..5.0, d in 0.2f64..5.0) {
        let ls = lambda_star(a, d);
        let ld = lambda_dagger(a, d).unwrap();
        prop_assert!(0.0 < ls && ls < ld && ld < a * d);
        let f_star = f0(&ProblemParams::new(ls, a, d).unwrap()).unwrap();
        let f_dag = f0(&ProblemParams::new(ld, a, d).unwrap()).unwrap();
        prop_assert!((f_star - 0.5 / d).abs() < 1e-10);
        prop_assert!((f_dag - a / (2.0 * ld)).abs() < 1e-10);
    }

    #[test]
    fn value_between_zero_and_stopping_cost(k in 0usize..2, x in -3.0f64..3.0, c in 0.0f64..2.5) {
        let pv = &canonical()[k];
        let q = pv.value(x, c);
        prop_assert!(q >= 0.0);
        prop_assert!(q <= pv.p.delta * x * x + 1e-12);
    }

    #[test]
    fn value_even_in_x(k in 0usize..2, x in 0.0f64..3.0, c in 0.0f64..2.5) {
        let pv = &canonical()[k];
        prop_assert_eq!(pv.value(x, c), pv.value(-x, c));
        prop_assert_eq!(pv.classify(x, c).tag, pv.classify(-x, c).tag);
    }

    #[test]
    fn more_fuel_never_costs_more(k in 0usize..2, x in 0.0f64..3.0, c in 0.001f64..2.5, dc in 0.0f64..0.5) {
        let pv = &canonical()[k];
        prop_assert!(pv.value(x, c + dc) <= pv.value(x, c) + 1e-9);
    }

    #[test]
    fn action_lands_on_reflecting_boundary(k in 0usize..2, x in 0.0f64..3.5, c in 0.001f64..2.5) {
        let pv = &canonical()[k];
        let b = pv.bnd.as_ref().unwrap();
        let r = pv.classify(x, c);
        prop_assert!(r.zeta >= 0.0 && r.zeta <= c);
        prop_assert!((r.x_land - (x - r.zeta)).abs() < 1e-15 && (r.c_land - (c - r.zeta)).abs() < 1e-15);
        match r.tag {
            RegionTag::IVa => prop_assert!((r.x_land - b.g(r.c_land)).abs() < 1e-7),
            RegionTag::IVb => prop_assert!((r.x_land - b.gbar(r.c_land).unwrap()).abs() < 1e-7),
            RegionTag::IVc => prop_assert!(r.c_land == 0.0),
            _ => prop_assert!(r.zeta == 0.0),
        }
    }

    #[test]
    fn regions_partition_the_slice(k in 0usize..2, x in 0.0f64..3.5, c in 0.001f64..2.5) {
        let pv = &canonical()[k];
        let sl = pv.slice(c);
        let in_ii = x > sl.f && x < sl.g;
        let in_iii = matches!((sl.fbar, sl.gbar), (Some(fb), Some(gb)) if x > fb && x < gb);
        let tag = pv.classify(x, c).tag;
        prop_assert_eq!(tag == RegionTag::I, x <= sl.f);
        prop_assert_eq!(tag == RegionTag::II, in_ii);
        prop_assert_eq!(tag == RegionTag::III, in_iii && !in_ii && x > sl.f);
        prop_assert_eq!(tag.is_action(), x > sl.f && !in_ii && !in_iii);
    }
}
