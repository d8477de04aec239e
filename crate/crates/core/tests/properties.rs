mod props;

use proptest::prelude::*;

use props::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_conserved((k, eps, x0, plus) in energy_strategy()) {
        energy_conservation(k, eps, x0, branch(plus))?;
    }

    #[test]
    fn closed_orbits_are_mirror_symmetric((eps, depth) in mirror_strategy()) {
        pt_mirror(eps, depth)?;
    }

    #[test]
    fn matrix_is_symmetric_with_parity_pattern((k, eps) in matrix_strategy()) {
        matrix_structure(k, eps)?;
    }

    #[test]
    fn complex_levels_pair_up(eps in pairing_strategy()) {
        conjugate_pairing(eps)?;
    }

    #[test]
    fn mismatch_scales_with_seeds((eps, n, cl, cr) in scale_strategy()) {
        mismatch_scale(eps, n, cl, cr)?;
    }
}
