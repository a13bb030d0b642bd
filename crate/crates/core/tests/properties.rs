//! Randomized invariants of the dynamics, the strip return map and `φ`.

mod common;

use casse_briques::num::{q, Sign};
use casse_briques::plane::{record_orbit, Start};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(config())]

    #[test]
    fn angles_stay_in_the_four_directions_plane(c in plane_case()) {
        angle_closure_plane(c)?;
    }

    #[test]
    fn angles_stay_in_the_four_directions_strip(c in strip_case(1..=3)) {
        angle_closure_strip(c)?;
    }

    #[test]
    fn destruction_is_monotone_plane(c in plane_case()) {
        monotone_destruction_plane(c)?;
    }

    #[test]
    fn destruction_is_monotone_strip(c in strip_case_with(1..=3, filled_boxed)) {
        monotone_destruction_strip(c)?;
    }

    #[test]
    fn height_increments_are_bounded(c in strip_case(1..=3)) {
        height_bounds(c)?;
    }

    #[test]
    fn vertical_time_of_a_return(c in strip_case_with(1..=3, equilibrated_boxed)) {
        t_formula(c)?;
    }

    #[test]
    fn equilibrium_is_stable(c in strip_case_with(2..=3, equilibrated_boxed)) {
        equilibration_stability(c)?;
    }

    #[test]
    fn equilibrium_absorbs(c in strip_case_with(2..=3, filled_boxed)) {
        equilibration_absorption(c)?;
    }

    #[test]
    fn empty_band_is_invisible(c in strip_case_with(1..=3, equilibrated_boxed)) {
        band_removal(c)?;
    }

    #[test]
    fn plane_translation_commutes(c in plane_case(), u in (-6i64..=6, -6i64..=6)) {
        translation_plane((c, u))?;
    }

    #[test]
    fn strip_translation_commutes(c in strip_case(1..=3), m in 0i64..=3) {
        translation_strip((c, m))?;
    }

    #[test]
    fn psi_inverts_the_canonical_state(p in frontier_point(4)) {
        psi_round_trip(p)?;
    }

    #[test]
    fn phi_forms_agree_everywhere(p in frontier_point(4)) {
        phi_forms_agree(p)?;
    }

    #[test]
    fn mirrored_start_mirrors_the_log(c in plane_case()) {
        let (x, y, dir) = c;
        let a = record_orbit(Start::Exact { x, y }, dir, 200).unwrap();
        let mirrored = casse_briques::dynamics::Direction::new(
            dir.slope,
            if dir.sx == Sign::Pos { Sign::Neg } else { Sign::Pos },
            dir.sy,
        );
        let b = record_orbit(Start::Exact { x: q(1, 1) - x, y }, mirrored, 200).unwrap();
        prop_assert_eq!(a.cells.len(), b.cells.len());
        for (za, zb) in a.cells.iter().zip(&b.cells) {
            prop_assert_eq!((za.z1, za.z2), (-zb.z1, zb.z2));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..config() })]

    #[test]
    fn semiconjugacy_in_lockstep(c in strip_case(2..=3)) {
        conjugacy(c, 200)?;
    }
}
