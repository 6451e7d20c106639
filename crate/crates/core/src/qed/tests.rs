use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;

const GAMMA: f64 = 2.0 * PI * 2.5e3;
const OMEGA: f64 = 2.0 * PI * 45.2e9;

fn params(g: f64, kappa: f64, gamma: f64, drive: f64, delta: f64, n_max: usize) -> QedParams {
    QedParams {
        omega_a: OMEGA,
        omega_sigma: OMEGA,
        g,
        kappa,
        gamma,
        drive,
        delta,
        n_max,
    }
}

fn blockade_set(kappa_hz: f64) -> QedParams {
    params(832.0 * GAMMA, 2.0 * PI * kappa_hz, GAMMA, 12.0 * GAMMA, 0.0, 10)
}

#[test]
fn uncoupled_hamiltonian_is_diagonal() {
    let p = params(0.0, 0.0, 0.0, 0.0, 0.0, 4);
    let h = hamiltonian(&p);
    for i in 0..p.dim() {
        for j in 0..p.dim() {
            let expect = if i == j {
                (i / 2) as f64 * OMEGA + (i % 2) as f64 * OMEGA
            } else {
                0.0
            };
            assert_eq!(h[(i, j)], Complex64::new(expect, 0.0));
        }
    }
}

#[test]
fn single_excitation_splitting() {
    let g = 2.0 * PI * 2e6;
    let p = params(g, 0.0, 0.0, 0.0, 0.0, 3);
    let h = hamiltonian(&p);
    assert_eq!(h, h.adjoint());
    let (u, v) = (basis_index(1, false), basis_index(0, true));
    let block = DMatrix::from_fn(2, 2, |i, j| h[([u, v][i], [u, v][j])]);
    let mut ev: Vec<f64> = block.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    assert!((ev[0] - (OMEGA - g)).abs() < 1e-6 * g);
    assert!((ev[1] - (OMEGA + g)).abs() < 1e-6 * g);

    let driven = params(g, 0.0, 0.0, 1e5, 3e6, 3);
    let hd = hamiltonian(&driven);
    assert_eq!(hd, hd.adjoint());
}

#[test]
fn dark_state_is_stationary() {
    let p = params(1e7, 1e6, 1e4, 0.0, 0.0, 4);
    let rho = DensityState::fock(0, false, 4).unwrap();
    let d = lindblad_rhs(&rho, &p).unwrap();
    assert!(d.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn pure_cavity_decay_rate() {
    let kappa = 3e6;
    let p = params(0.0, kappa, 0.0, 0.0, 0.0, 4);
    let rho = DensityState::fock(1, false, 4).unwrap();
    let d = lindblad_rhs(&rho, &p).unwrap();
    let k = basis_index(1, false);
    assert!((d[(k, k)].re + kappa).abs() < 1e-9 * kappa);
}

#[test]
fn dimension_mismatch_is_reported() {
    let p = params(1.0, 1.0, 1.0, 0.0, 0.0, 4);
    let rho = DensityState::fock(0, false, 5).unwrap();
    assert!(matches!(lindblad_rhs(&rho, &p), Err(QedError::Dimension { .. })));
}

fn random_state(seed: u64, n_max: usize) -> DensityState {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = 2 * (n_max + 1);
    let m = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let rho = &m * m.adjoint();
    let tr = rho.trace();
    DensityState { rho: rho / tr, t: 0.0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rhs_is_traceless_and_matches_superoperator(
        seed in any::<u64>(),
        g in 0.0..1e7f64,
        kappa in 0.0..1e7f64,
        gamma in 0.0..1e6f64,
        drive in 0.0..1e6f64,
        delta in -1e7..1e7f64,
    ) {
        let p = params(g, kappa, gamma, drive, delta, 4);
        let rho = random_state(seed, 4);
        let d = lindblad_rhs(&rho, &p).unwrap();
        let scale = g + kappa + gamma + drive + delta.abs() + 1.0;
        prop_assert!(d.trace().norm() < 1e-12 * scale);

        let l = liouvillian(&p).unwrap();
        let dim = p.dim();
        let v: Vec<Complex64> = (0..dim * dim).map(|k| rho.rho[(k / dim, k % dim)]).collect();
        let lv = l.mul_vec(&v);
        for k in 0..dim * dim {
            prop_assert!((lv[k] - d[(k / dim, k % dim)]).norm() < 1e-12 * scale);
        }
    }
}

#[test]
fn undamped_rabi_oscillation() {
    let g = 832.0 * GAMMA;
    let p = params(g, 0.0, 0.0, 0.0, 0.0, 3);
    let rho0 = DensityState::fock(0, true, 3).unwrap();
    let periods = 10.0;
    let t_end = periods * PI / g;
    let mut worst_purity = 0.0f64;
    let s = evolve_observed(&rho0, t_end, &p, 1e-10, |st| {
        worst_purity = worst_purity.max((st.purity() - 1.0).abs());
    })
    .unwrap();
    let err = s
        .times
        .iter()
        .zip(&s.p_1g)
        .map(|(t, v)| (v - (g * t).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "max error {err:e}");
    assert!(worst_purity < 1e-8);
    // sampling resolves the Rabi period
    let dt = s.times[1] - s.times[0];
    assert!(dt <= 2.0 * PI / g / 40.0 * (1.0 + 1e-12));
    // first maximum near pi / (2 g) = 120 ns
    let first = s
        .times
        .iter()
        .zip(&s.p_1g)
        .take_while(|(t, _)| **t < PI / g)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert!((first.0 - PI / (2.0 * g)).abs() <= dt);
    assert!((PI / (2.0 * g) - 120e-9).abs() < 1e-9);
}

#[test]
fn evolved_states_stay_physical() {
    let p = QedParams { delta: 832.0 * GAMMA, ..blockade_set(4.5e5) };
    let rho0 = DensityState::fock(0, true, p.n_max).unwrap();
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    evolve_observed(&rho0, 2e-6, &p, 1e-10, |st| {
        worst.0 = worst.0.max((st.trace().re - 1.0).abs());
        worst.1 = worst.1.max(st.hermiticity_error());
        worst.2 = worst.2.min(st.min_eigenvalue());
    })
    .unwrap();
    assert!(worst.0 < 1e-9, "trace {}", worst.0);
    assert!(worst.1 < 1e-12, "hermiticity {}", worst.1);
    assert!(worst.2 >= -1e-9, "min eigenvalue {}", worst.2);
}

#[test]
fn t2_matches_envelope_rate() {
    let kappa = 2.0 * PI * 4.5e5;
    let p = params(832.0 * GAMMA, kappa, GAMMA, 0.0, 0.0, 3);
    let rho0 = DensityState::fock(0, true, 3).unwrap();
    let s = evolve(&rho0, 3e-6, &p, 1e-8).unwrap();
    let t2 = t2_decoherence(&s).unwrap();
    let oracle = 2.0 / (kappa + GAMMA);
    assert!((t2 / oracle - 1.0).abs() < 0.15, "T2 {t2:e} vs {oracle:e}");

    let p2 = QedParams { kappa: 2.0 * kappa, ..p };
    let s2 = evolve(&rho0, 1.5e-6, &p2, 1e-8).unwrap();
    let t2b = t2_decoherence(&s2).unwrap();
    assert!((t2 / t2b / 2.0 - 1.0).abs() < 0.2);
}

#[test]
fn t2_without_decay_is_infinite() {
    let p = params(832.0 * GAMMA, 0.0, 0.0, 0.0, 0.0, 3);
    let rho0 = DensityState::fock(0, true, 3).unwrap();
    let s = evolve(&rho0, 10.0 * PI / p.g, &p, 1e-10).unwrap();
    assert_eq!(t2_decoherence(&s).unwrap(), f64::INFINITY);
}

#[test]
fn steady_state_oracles() {
    // undriven, lossy: vacuum with ground-state atom
    let p = params(1e7, 1e6, 1e4, 0.0, 0.0, 5);
    let s = steady_state(&p).unwrap();
    let vac = DensityState::fock(0, false, 5).unwrap();
    assert!(s.trace_distance(&vac).unwrap() < 1e-12);

    // decoupled driven cavity: coherent state with n = 4 drive^2 / kappa^2
    let p = QedParams { g: 0.0, ..blockade_set(4.5e5) };
    let s = steady_state(&p).unwrap();
    let n = mean_photon_number(&s);
    let oracle = 4.0 * p.drive.powi(2) / p.kappa.powi(2);
    assert!((n / oracle - 1.0).abs() < 1e-9, "{n} vs {oracle}");
    assert!((n - 0.0178).abs() < 1e-4);
    assert!((g2_zero(&s).unwrap() - 1.0).abs() < 1e-6);
    assert!((s.trace().re - 1.0).abs() < 1e-12);
    assert!(s.min_eigenvalue() > -1e-9);
}

#[test]
fn lossless_driven_system_is_singular() {
    let p = params(1e7, 0.0, 0.0, 1e5, 0.0, 3);
    assert!(matches!(steady_state(&p), Err(QedError::SingularLiouvillian { .. })));
    let p = params(1e7, 0.0, 0.0, 0.0, 0.0, 3);
    assert!(matches!(steady_state(&p), Err(QedError::Parameter(_))));
}

#[test]
fn g2_oracles() {
    let coh = DensityState::coherent(Complex64::new(0.6, 0.3), 30).unwrap();
    assert!((g2_zero(&coh).unwrap() - 1.0).abs() < 1e-9);
    let fock = DensityState::fock(1, false, 4).unwrap();
    assert!(g2_zero(&fock).unwrap().abs() < 1e-9);
    let th = DensityState::thermal(0.5, 60).unwrap();
    assert!((g2_zero(&th).unwrap() - 2.0).abs() < 1e-9);
    assert!(matches!(
        g2_zero(&DensityState::fock(0, true, 4).unwrap()),
        Err(QedError::Vacuum(_))
    ));
}

#[test]
fn spectrum_is_symmetric_in_detuning() {
    let p = blockade_set(4.5e5);
    let grid = [-900.0 * GAMMA, -500.0 * GAMMA, 500.0 * GAMMA, 900.0 * GAMMA];
    let rows = blockade_spectrum(&p, &grid).unwrap();
    for (a, b) in [(0, 3), (1, 2)] {
        assert!((rows[a].g2_0 / rows[b].g2_0 - 1.0).abs() < 1e-6);
        assert!((rows[a].n_a / rows[b].n_a - 1.0).abs() < 1e-6);
    }
}

#[test]
fn coupling_chain_numbers() {
    let va = atomic_volume(GAMMA, OMEGA);
    assert!((va / 0.2004 - 1.0).abs() < 1e-3, "{va}");
    let lambda = crate::consts::SPEED_OF_LIGHT / 45.2e9;
    let g = coupling_from_mode(lambda.powi(3), GAMMA, OMEGA).unwrap();
    assert!((g / GAMMA / 828.7 - 1.0).abs() < 1e-3, "{}", g / GAMMA);
    let g4 = coupling_from_mode(4.0 * lambda.powi(3), GAMMA, OMEGA).unwrap();
    assert!((g4 / g - 0.5).abs() < 1e-12);

    let kappa = 2.0 * PI * 4.5e5;
    let c = cooperativity(832.0 * GAMMA, kappa, GAMMA).unwrap();
    assert!((c / 3845.7 - 1.0).abs() < 1e-3, "{c}");
    let c2 = cooperativity(832.0 * GAMMA, 2.0 * kappa, GAMMA).unwrap();
    assert!((c2 / c - 0.5).abs() < 1e-12);
}

#[test]
fn effective_nonlinearity_cases() {
    let p = params(0.0, 5.0, 1.0, 0.0, 0.0, 3);
    let e = effective_nonlinearity(&p, 1).unwrap();
    assert!((e.n_eff - Complex64::new(4.0 / 6.0, 0.0)).norm() < 1e-15);

    let p = params(832.0 * GAMMA, 2.0 * PI * 4.5e5, GAMMA, 0.0, 0.0, 3);
    let e = effective_nonlinearity(&p, 1).unwrap();
    assert_eq!(e.alpha.re, 0.0);
    assert!((e.n_eff.norm() - 18.36).abs() < 0.01, "{}", e.n_eff.norm());

    let p = params(3.0, 2.0, 2.0, 0.0, 0.0, 3);
    let e = effective_nonlinearity(&p, 2).unwrap();
    assert!((e.alpha - Complex64::new(0.0, 4.0 * 2f64.sqrt() * 3.0)).norm() < 1e-12);
    assert_eq!(e.beta, 8.0);
}
