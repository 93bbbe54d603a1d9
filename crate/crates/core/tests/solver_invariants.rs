use gsnmf::datagen::{gen_fully_random, gen_middle_point};
use gsnmf::decomposition::accuracy;
use gsnmf::fgm::{gsfgm_solve, project_omega1, FgmConfig, OmegaSpec, Orientation};
use gsnmf::matrix::sinkhorn_scale_default;
use gsnmf::spa::{spa_c, spa_r};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gsfgm_ends_below_its_start() {
    for seed in 0..10 {
        let inst = gen_fully_random(25, 20, 3, 3, 0.05 * seed as f64, seed).unwrap();
        let ms = sinkhorn_scale_default(&inst.m).unwrap().scaled;
        for lt in [1e-3, 0.25, 3.0] {
            let cfg = FgmConfig {
                lambda_tilde: lt,
                ..FgmConfig::default()
            };
            let sol = gsfgm_solve(&ms, 3, 3, &cfg, None).unwrap();
            assert!(
                sol.final_objective() <= sol.objective_history[0],
                "seed {seed} lt {lt}: {} > {}",
                sol.final_objective(),
                sol.objective_history[0]
            );
        }
    }
}

#[test]
fn omega1_projection_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..10 {
        let w = Array1::from_shape_fn(n, |_| rng.random_range(0.05..20.0));
        let spec = OmegaSpec::new(w, Orientation::Rows).unwrap();
        let z = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..2.0));
        let p = project_omega1(z.view(), &spec);
        let pp = project_omega1(p.view(), &spec);
        let diff = (&pp - &p).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        assert!(diff <= 1e-12, "n={n}: {diff:e}");
        assert!(spec.violation(p.view()) <= 1e-12);
    }
}

#[test]
fn spa_r_beats_spa_c_on_middle_point() {
    let (mut acc_r, mut acc_c) = (0.0, 0.0);
    for seed in 0..10 {
        let inst = gen_middle_point(0.01, seed).unwrap();
        let (r1, r2) = inst.ranks();
        acc_r += accuracy(&spa_r(&inst.m, r1 + r2).unwrap(), &inst.truth.sets).unwrap();
        acc_c += accuracy(&spa_c(&inst.m, r1 + r2).unwrap(), &inst.truth.sets).unwrap();
    }
    assert!(acc_r > acc_c, "spa-r {acc_r} vs spa-c {acc_c}");
}
