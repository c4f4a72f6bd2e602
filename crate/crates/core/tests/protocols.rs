use xprob_core::experiments::{ergodicity_check, InitialState};
use xprob_core::propagator::energy_expectation;
use xprob_core::xjump::{default_shell_half_width, JumpMechanism};
use xprob_core::{CouplingForm, Observable, Pauli, PreparedSystem, SpinSystem, XJumpConfig};

fn cluster(n: usize) -> PreparedSystem {
    let couplings: Vec<_> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, 0.05 / ((j - i) as f64).powi(3)))
        .collect();
    PreparedSystem::new(SpinSystem::new(vec![1.0; n], couplings, CouplingForm::SecularDipolar).unwrap()).unwrap()
}

#[test]
fn ergodicity_identity_and_energy() {
    let p = cluster(6);
    let w = default_shell_half_width(&p.eigen);
    let cfg = XJumpConfig::new(0.2, w, JumpMechanism::ShellHaar).unwrap();
    let init = InitialState::RandomProduct.prepare(&p, 9).unwrap();
    let e0 = energy_expectation(&init, &p.eigen);

    let id = p.eigen_operator(&Observable::Identity).unwrap();
    let r = ergodicity_check(&p, &init, &id, &cfg, 200.0, 0.5, None, 3).unwrap();
    assert!((r.time_average - 1.0).abs() < 1e-10 && (r.ensemble_average - 1.0).abs() < 1e-10 && r.gap < 1e-10);

    let h = p.eigen_operator(&Observable::Hamiltonian).unwrap();
    let r = ergodicity_check(&p, &init, &h, &cfg, 200.0, 0.5, None, 3).unwrap();
    assert!((r.ensemble_average - e0).abs() <= 2.0 * w);
    assert!((r.time_average - e0).abs() <= 2.0 * w, "{r:?} vs {e0}");
}

#[test]
fn collective_magnetization_matches_shell_average() {
    let p = cluster(8);
    let cfg = XJumpConfig::new(0.125, default_shell_half_width(&p.eigen), JumpMechanism::ShellHaar).unwrap();
    let a = p.eigen_operator(&Observable::Collective(Pauli::Z)).unwrap();
    let range = 16.0;
    let seeds = 100;
    let mut gap = 0.0;
    for seed in 0..seeds {
        let init = InitialState::Basis(vec![true, false, false, true, false, false, true, false])
            .prepare(&p, seed)
            .unwrap();
        gap += ergodicity_check(&p, &init, &a, &cfg, 200.0, 1.0, None, seed).unwrap().gap;
    }
    gap /= seeds as f64;
    assert!(gap < 0.05 * range, "{gap}");
}
