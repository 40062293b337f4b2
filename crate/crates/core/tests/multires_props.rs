//! Hierarchy construction, subsampling and interpolation properties.

mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tenfill::multires::{
    build_hierarchy, choose_selections, interpolate_continuous, interpolate_solution, subsample_continuous,
    subsample_problem,
};
use tenfill::{mtc_solve, CompletionProblem, CooObservations, Matrix, Mode, SolverConfig};

use common::instance;

fn small_cfg(rank: usize) -> SolverConfig {
    SolverConfig {
        coarse_level_iters: 4,
        fine_level_iters: 12,
        stage1_iters: 2,
        min_mode_size: 6,
        ..SolverConfig::with_rank(rank)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn subsampling_keeps_only_original_observations(
        a in 4usize..=16, b in 4usize..=16, c in 2usize..=16,
        frac in 0.0f64..0.6, seed in 0u64..1000,
    ) {
        let inst = instance([a, b, c], 2, frac, seed);
        let p = &inst.problem;
        let sel = choose_selections(p).unwrap();
        let Ok(low) = subsample_problem(p, &sel) else { return Ok(()) };
        let lift = |co: [usize; 3]| [0, 1, 2].map(|m| sel.fine[m].selected()[co[m]]);
        let original: std::collections::HashMap<[usize; 3], f64> = p.observations().iter().collect();
        for (co, x) in low.observations().iter() {
            prop_assert_eq!(original.get(&lift(co)), Some(&x));
        }
        let kept = original
            .keys()
            .filter(|co| (0..3).all(|m| sel.fine[m].selected().contains(&co[m])))
            .count();
        prop_assert_eq!(kept, low.observations().len());

        // The unknown-aggregation coarse tensor is a plain restriction.
        let high = &p.coarse_on(Mode::One).unwrap().tensor;
        let restricted = high
            .select([
                sel.coarse[0].as_ref().unwrap().selected(),
                sel.fine[1].selected(),
                sel.fine[2].selected(),
            ])
            .unwrap();
        prop_assert_eq!(&low.coarse_on(Mode::One).unwrap().tensor, &restricted);
    }

    #[test]
    fn every_hierarchy_level_validates(
        n in 8usize..=40, frac in 0.05f64..0.5, seed in 0u64..1000,
    ) {
        let inst = instance([n, n, n], 2, frac, seed);
        let h = build_hierarchy(&inst.problem, 4).unwrap();
        prop_assert_eq!(h.finest(), &inst.problem);
        prop_assert!(h.levels.last().unwrap().selections.is_none());
        for level in &h.levels {
            prop_assert!(level.problem.validate().is_ok());
        }
        for pair in h.levels.windows(2) {
            let sel = pair[0].selections.as_ref().unwrap();
            prop_assert_eq!(&subsample_problem(&pair[1].problem, sel).unwrap(), &pair[0].problem);
        }
    }

    #[test]
    fn continuous_interpolation_reproduces_affine_rows(
        half in 1usize..=20, a in -5.0f64..5.0, b in -2.0f64..2.0,
    ) {
        let n = 2 * half + 1;
        let full = Matrix::from_fn(n, 2, |i, r| a + b * i as f64 * (r as f64 + 1.0));
        let sel = subsample_continuous(n);
        let low = Matrix::from_fn(sel.len(), 2, |i, r| full[(sel.selected()[i], r)]);
        let up = interpolate_continuous(&low, n).unwrap();
        prop_assert!(up.max_abs_diff(&full) < 1e-12);
    }

    #[test]
    fn interpolated_rows_come_from_the_coarse_solution(
        n in 6usize..=20, seed in 0u64..1000,
    ) {
        let inst = instance([n, n + 1, n], 3, 0.3, seed);
        let p = &inst.problem;
        let sel = choose_selections(p).unwrap();
        let Ok(low_p) = subsample_problem(p, &sel) else { return Ok(()) };
        let low_inst_fs = {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let [a, b, c] = low_p.shape();
            let f = [a, b, c].map(|m| common::random_matrix(&mut rng, m, 3));
            let q1 = common::random_matrix(&mut rng, low_p.mode(Mode::One).aggregation.coarse_size().unwrap(), 3);
            let q2 = low_p.mode(Mode::Two).aggregation.known().unwrap().apply(&f[1]).unwrap();
            let [u, v, w] = f;
            tenfill::FactorSet::new(u, v, w).unwrap()
                .with_coarse(Mode::One, q1).unwrap()
                .with_coarse(Mode::Two, q2).unwrap()
        };
        let up = interpolate_solution(p, &sel, &low_inst_fs, seed).unwrap();
        prop_assert_eq!(up.shape(), p.shape());
        for m in 0..3 {
            for (low_row, &high_row) in sel.fine[m].selected().iter().enumerate() {
                prop_assert_eq!(up.fine[m].row(high_row), low_inst_fs.fine[m].row(low_row));
            }
        }
        let c1 = sel.coarse[0].as_ref().unwrap();
        for (low_row, &high_row) in c1.selected().iter().enumerate() {
            prop_assert_eq!(
                up.coarse_factor(Mode::One).unwrap().row(high_row),
                low_inst_fs.coarse_factor(Mode::One).unwrap().row(low_row)
            );
        }
        prop_assert_eq!(up.coarse_factor(Mode::Two).unwrap(), &inst.p2.apply(up.v()).unwrap());
        prop_assert!(up.is_finite());
    }
}

#[test]
fn interpolation_is_seeded() {
    let inst = instance([12, 12, 10], 3, 0.3, 4);
    let p = &inst.problem;
    let sel = choose_selections(p).unwrap();
    let low = subsample_problem(p, &sel).unwrap();
    let low_fs = {
        let [a, b, c] = low.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = [a, b, c].map(|m| common::random_matrix(&mut rng, m, 3));
        let q1 = common::random_matrix(&mut rng, low.mode(Mode::One).aggregation.coarse_size().unwrap(), 3);
        let q2 = low.mode(Mode::Two).aggregation.known().unwrap().apply(&f[1]).unwrap();
        let [u, v, w] = f;
        tenfill::FactorSet::new(u, v, w)
            .unwrap()
            .with_coarse(Mode::One, q1)
            .unwrap()
            .with_coarse(Mode::Two, q2)
            .unwrap()
    };
    let a = interpolate_solution(p, &sel, &low_fs, 11).unwrap();
    let b = interpolate_solution(p, &sel, &low_fs, 11).unwrap();
    let c = interpolate_solution(p, &sel, &low_fs, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.fine[0], c.fine[0]);
}

fn shuffled(p: &CompletionProblem, seed: u64) -> CompletionProblem {
    let mut entries: Vec<_> = p.observations().iter().collect();
    entries.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let obs = CooObservations::new(p.shape(), entries).unwrap();
    CompletionProblem::new(p.modes().clone(), obs, p.coarse().to_vec()).unwrap()
}

#[test]
fn solve_is_deterministic_and_ignores_observation_order() {
    let inst = instance([24, 24, 20], 3, 0.25, 31);
    let p = &inst.problem;
    let cfg = small_cfg(3);
    let (fs_a, rep_a) = mtc_solve(p, &cfg).unwrap();
    let (fs_b, rep_b) = mtc_solve(p, &cfg).unwrap();
    assert_eq!(fs_a, fs_b);
    assert_eq!(rep_a.to_csv(), rep_b.to_csv());
    assert!(rep_a.records.iter().any(|r| r.level == 0) && rep_a.records.iter().any(|r| r.level > 0));

    let (fs_c, rep_c) = mtc_solve(&shuffled(p, 99), &cfg).unwrap();
    assert_eq!(fs_a, fs_c);
    assert_eq!(rep_a.to_csv(), rep_c.to_csv());

    let other = SolverConfig { seed: 1, ..cfg };
    let (fs_d, _) = mtc_solve(p, &other).unwrap();
    assert_ne!(fs_a, fs_d);
}
