use std::f64::consts::PI;

use super::*;
use crate::modes::{hermite_gauss, ModeIndex};

const T_CENTER: f64 = 1.7e-6;
const T_FLIP: f64 = 4.0e-6;
const T_END: f64 = 10.0e-6;

/// Loss-free memory with the light shift compensated.
fn lossless(beta: f64) -> MemoryParams {
    let mut p = MemoryParams {
        gamma: 0.0,
        gamma0: 0.0,
        diffusion: 0.0,
        ..MemoryParams::default()
    };
    p.compensate_light_shift();
    p.set_raman_depth(beta);
    p
}

fn pulse() -> PulseEnvelope {
    PulseEnvelope::gaussian(1e-6, T_CENTER, 5e-9).unwrap()
}

fn echo() -> GradientSchedule {
    GradientSchedule::standard_echo(MemoryParams::default().eta, T_FLIP, T_END).unwrap()
}

fn cfg(nz: usize) -> SolverConfig {
    SolverConfig {
        nz,
        ..SolverConfig::default()
    }
}

#[test]
fn zero_coupling_gives_no_echo() {
    let p = MemoryParams {
        g: 0.0,
        ..lossless(1.0)
    };
    let (rec, _) = simulate_echo_1d(&p, &pulse(), &echo(), &cfg(32)).unwrap();
    assert!(rec.total_efficiency < 1e-12);
    assert!((rec.transmitted_energy - rec.input_energy).abs() < 1e-6 * rec.input_energy);
}

#[test]
fn echo_is_delayed_by_twice_the_flip_interval() {
    let p = lossless(1.0);
    let (rec, _) = simulate_echo_1d(&p, &pulse(), &echo(), &cfg(128)).unwrap();
    let tau = T_FLIP - T_CENTER;
    let delay = rec.echo_peak_time().unwrap() - T_CENTER;
    assert!(
        delay > 1.8 * tau && delay < 2.2 * tau,
        "delay {delay:e}, tau {tau:e}"
    );
    let want = MemoryParams::broadband_efficiency(1.0);
    assert!(
        (rec.total_efficiency - want).abs() < 0.05,
        "{} vs {want}",
        rec.total_efficiency
    );
    assert!(rec.input_energy >= rec.transmitted_energy + rec.echo_energy - 1e-9 * rec.input_energy);
}

#[test]
fn efficiency_grows_with_depth() {
    let mut last = 0.0;
    for beta in [0.125, 0.25, 0.5, 1.0] {
        let (rec, _) = simulate_echo_1d(&lossless(beta), &pulse(), &echo(), &cfg(64)).unwrap();
        assert!(
            rec.total_efficiency > last,
            "beta {beta}: {}",
            rec.total_efficiency
        );
        last = rec.total_efficiency;
    }
}

#[test]
fn dark_recall_suppresses_the_echo() {
    let p = lossless(1.0);
    let eta = p.eta;
    let sched = GradientSchedule::dark_recall(eta, T_FLIP, T_END).unwrap();
    let (rec, _) = simulate_echo_1d(&p, &pulse(), &sched, &cfg(64)).unwrap();
    assert!(
        rec.echo_energy < 1e-3 * rec.input_energy,
        "{}",
        rec.echo_energy / rec.input_energy
    );
}

#[test]
fn stored_spin_wave_only_winds_while_dark() {
    let p = MemoryParams {
        delta0: 0.0,
        ..lossless(1.0)
    };
    let (t_write, t_flip) = (4.0e-6, 7.0e-6);
    let sched = GradientSchedule::with_storage(p.eta, t_write, t_flip, 12e-6).unwrap();
    let config = SolverConfig {
        snapshots: vec![t_write, 5.0e-6, t_flip],
        ..cfg(64)
    };
    let (_, snaps) = simulate_echo_1d(&p, &pulse(), &sched, &config).unwrap();
    assert_eq!(snaps.len(), 3);
    let base = &snaps[0];
    assert!(base.max_rho12() > 0.0);
    for s in &snaps[1..] {
        let dt = s.time - base.time;
        for (j, (a, b)) in base.rho12.iter().zip(&s.rho12).enumerate() {
            let expected = a * Complex64::from_polar(1.0, p.eta * base.z[j] * dt);
            assert!(
                (expected - b).norm() < 1e-10 * base.max_rho12(),
                "z index {j}"
            );
        }
    }
}

#[test]
fn point_grid_reduces_to_the_longitudinal_solver() {
    let p = lossless(0.5);
    let (one, _) = simulate_echo_1d(&p, &pulse(), &echo(), &cfg(32)).unwrap();
    let field = TransverseField::new(
        TransverseGrid::point(1.0, 1.0),
        vec![Complex64::new(1.0, 0.0)],
    )
    .unwrap();
    let c3 = Solver3dConfig {
        solver: cfg(32),
        ..Solver3dConfig::default()
    };
    let (three, _) = simulate_echo_3d(&p, &field, &pulse(), &echo(), &c3).unwrap();
    assert!((one.total_efficiency - three.total_efficiency).abs() < 1e-6);
    let peak = one
        .output
        .values
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    for (a, b) in one.output.values.iter().zip(&three.output.values) {
        assert!((a - b).norm() < 1e-6 * peak);
    }
}

#[test]
fn adiabatic_and_three_level_models_agree() {
    // Both models with the optical decay switched on, at a smaller detuning
    // to keep the three-level step affordable.
    let mut p = MemoryParams {
        delta: 2.0 * PI * 300e6,
        omega_c: 2.0 * PI * 8e6,
        gamma0: 0.0,
        diffusion: 0.0,
        ..MemoryParams::default()
    };
    p.compensate_light_shift();
    p.set_raman_depth(0.5);
    let (a, _) = simulate_echo_1d(&p, &pulse(), &echo(), &cfg(48)).unwrap();
    let three = SolverConfig {
        model: AtomicModel::ThreeLevel,
        ..cfg(48)
    };
    let (b, _) = simulate_echo_1d(&p, &pulse(), &echo(), &three).unwrap();
    let rel = (a.total_efficiency - b.total_efficiency).abs() / a.total_efficiency;
    assert!(
        rel < 0.02,
        "{} vs {}",
        a.total_efficiency,
        b.total_efficiency
    );
    let (ta, tb) = (a.echo_peak_time().unwrap(), b.echo_peak_time().unwrap());
    assert!((ta - tb).abs() < 0.05e-6);
}

#[test]
fn gradient_sign_does_not_matter() {
    let p = lossless(0.7);
    let (a, _) = simulate_echo_1d(&p, &pulse(), &echo(), &cfg(64)).unwrap();
    let (b, _) = simulate_echo_1d(&p, &pulse(), &echo().mirrored(), &cfg(64)).unwrap();
    assert!(
        (a.total_efficiency - b.total_efficiency).abs() < 1e-8,
        "{} vs {}",
        a.total_efficiency,
        b.total_efficiency
    );
}

#[test]
fn halving_the_step_converges() {
    let p = lossless(1.0);
    let coarse = SolverConfig {
        dt: Some(10e-9),
        ..cfg(128)
    };
    let fine = SolverConfig {
        dt: Some(5e-9),
        ..cfg(256)
    };
    let (a, _) = simulate_echo_1d(&p, &pulse(), &echo(), &coarse).unwrap();
    let (b, _) = simulate_echo_1d(&p, &pulse(), &echo(), &fine).unwrap();
    let rel = (a.total_efficiency - b.total_efficiency).abs() / b.total_efficiency;
    assert!(
        rel < 5e-3,
        "{} vs {}",
        a.total_efficiency,
        b.total_efficiency
    );
}

#[test]
fn no_flip_means_no_echo() {
    let p = lossless(1.0);
    let sched = GradientSchedule::new(vec![Segment::new(0.0, T_END, p.eta, true)]).unwrap();
    let (rec, _) = simulate_echo_1d(&p, &pulse(), &sched, &cfg(32)).unwrap();
    assert_eq!(rec.echo_energy, 0.0);
    assert_eq!(rec.total_efficiency, 0.0);
}

#[test]
fn large_3d_grids_are_refused() {
    let p = lossless(1.0);
    let g = TransverseGrid::square(96, 12e-3).unwrap();
    let f = hermite_gauss(ModeIndex::new(0, 0).unwrap(), 1.5e-3, &g).unwrap();
    let r = simulate_echo_3d(&p, &f, &pulse(), &echo(), &Solver3dConfig::default());
    assert!(matches!(r, Err(Error::GridTooLarge(_))));
}

#[test]
fn spatial_mode_does_not_change_recall_without_diffusion() {
    let p = lossless(0.5);
    let g = TransverseGrid::square(16, 12e-3).unwrap();
    let c3 = Solver3dConfig {
        solver: cfg(32),
        ..Solver3dConfig::default()
    };
    let mut eff = Vec::new();
    for (m, n) in [(0, 0), (1, 0), (2, 0)] {
        let f = hermite_gauss(ModeIndex::new(m, n).unwrap(), 1.5e-3, &g).unwrap();
        let (rec, _) = simulate_echo_3d(&p, &f, &pulse(), &echo(), &c3).unwrap();
        let (total, overlap) = recall_efficiencies(&rec, &f).unwrap();
        assert!((total - rec.total_efficiency).abs() < 1e-9);
        assert!(overlap <= total + 1e-9);
        eff.push(rec.total_efficiency);
    }
    for e in &eff[1..] {
        assert!((e - eff[0]).abs() < 0.01 * eff[0], "{eff:?}");
    }
}
