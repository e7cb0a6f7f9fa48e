use std::sync::Arc;

use approx::assert_relative_eq;
use ndarray::Array2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use istms::lindblad::*;
use istms::params::{squeezed_photons, SystemParams};
use istms::{Error, C64};

fn small_params() -> SystemParams {
    SystemParams { j: 2.0, g: 0.5, lambda: 0.2, ..SystemParams::default() }
}

fn check_invariants(rho: &DensityMatrix) {
    assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-9);
    assert!(rho.hermiticity_error() < 1e-9);
    assert!(rho.min_eigenvalue().unwrap() > -1e-8);
}

fn jc_full(p: &SystemParams, h: &HilbertConfig) -> Liouvillian {
    liouvillian_on(
        &build_h_jc(p, h).unwrap(),
        &cavity_dissipators(p, h).unwrap(),
        Arc::new(Selection::full(h).unwrap()),
    )
    .unwrap()
}

fn random_state(sel: &Selection, rng: &mut StdRng) -> Vec<C64> {
    let d = sel.dim();
    let a = Array2::from_shape_fn((d, d), |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut rho = a.dot(&a.t().mapv(|z| z.conj()));
    let tr: C64 = rho.diag().sum();
    rho.mapv_inplace(|z| z / tr);
    (0..sel.len()).map(|k| {
        let (i, j) = sel.pair(k);
        rho[[i, j]]
    }).collect()
}

#[test]
fn trace_row_vanishes() {
    let p = small_params();
    let h = HilbertConfig::adapted(4, p.lambda, p.kappa).unwrap();
    let d = cavity_dissipators(&p, &h).unwrap();
    let sels = [
        Selection::full(&h).unwrap(),
        Selection::coherence_window(&h, 2).unwrap(),
        Selection::qubit_ground(&h).unwrap(),
    ];
    for ham in [build_h_jc(&p, &h).unwrap(), build_h_dispersive(&p, &h).unwrap()] {
        for sel in &sels {
            let l = liouvillian_on(&ham, &d, Arc::new(sel.clone())).unwrap();
            assert!(l.trace_row_norm() < 1e-12, "trace row norm {}", l.trace_row_norm());
        }
    }
}

#[test]
fn undriven_vacuum() {
    let p = SystemParams { j: 10.0, ..SystemParams::default() };
    let h = hilbert_for(&p, 4).unwrap();
    let ss = dispersive_steady_state(&p, &h, &SolverOptions::default()).unwrap();
    check_invariants(&ss.rho);
    assert_relative_eq!(ss.rho.matrix()[[0, 0]].re, 1.0, epsilon = 1e-12);
    let m = Modes::new(&h).unwrap();
    assert!(ss.rho.expect(&m.n_even()).unwrap().norm() < 1e-12);
}

#[test]
fn squeezed_vacuum_photons() {
    // with g = 0 the steady state is the two-mode squeezed vacuum;
    // check it in the plain Fock basis where truncation matters
    let lambda = 0.2;
    let p = SystemParams { j: 10.0, lambda, ..SystemParams::default() };
    let h = HilbertConfig::new(14, 14).unwrap();
    let ss = dispersive_steady_state(&p, &h, &SolverOptions::default()).unwrap();
    check_invariants(&ss.rho);
    let m = Modes::new(&h).unwrap();
    let ne = ss.rho.expect(&m.n_even()).unwrap().re;
    let no = ss.rho.expect(&m.n_odd()).unwrap().re;
    let total = squeezed_photons(lambda, 1.0).unwrap();
    assert_relative_eq!(ne, no, max_relative = 1e-9);
    assert_relative_eq!(ne + no, total, max_relative = 1e-6);
}

#[test]
fn solvers_agree_and_time_evolution_forgets_initial_state() {
    let p = small_params();
    let h = HilbertConfig::new(3, 3).unwrap();
    let l = jc_full(&p, &h);
    let direct = steady_state_with(&l, &SolverOptions { method: Some(Method::Direct), ..Default::default() }).unwrap();
    let gmres = steady_state_with(&l, &SolverOptions { method: Some(Method::Gmres), ..Default::default() }).unwrap();
    check_invariants(&direct.rho);
    check_invariants(&gmres.rho);
    assert!(1.0 - state_fidelity(&direct.rho, &gmres.rho).unwrap() < 1e-10);

    let mut rng = StdRng::seed_from_u64(7);
    let mut evolved = vec![];
    for _ in 0..2 {
        let opts = SolverOptions {
            method: Some(Method::TimeEvolution),
            initial: Some(random_state(&l.selection, &mut rng)),
            ..Default::default()
        };
        let ss = steady_state_with(&l, &opts).unwrap();
        assert_eq!(ss.method, Method::TimeEvolution);
        check_invariants(&ss.rho);
        evolved.push(ss.rho);
    }
    assert!(state_fidelity(&evolved[0], &evolved[1]).unwrap() > 1.0 - 1e-8);
    assert!(state_fidelity(&evolved[0], &direct.rho).unwrap() > 1.0 - 1e-8);
}

#[test]
fn decoupled_qubit_has_no_unique_steady_state() {
    let p = SystemParams { g: 0.0, ..small_params() };
    let h = HilbertConfig::new(2, 2).unwrap();
    let l = jc_full(&p, &h);
    let e = steady_state_with(&l, &SolverOptions { method: Some(Method::Direct), ..Default::default() }).unwrap_err();
    assert!(matches!(e, Error::NonUniqueNullspace(_)), "{e}");
}

#[test]
fn single_excitation_shift_matches_dispersive() {
    // {|1,0,g⟩, |0,1,g⟩, |0,0,e⟩} block at λ = 0. The even mode sits above
    // the qubit and is pushed up by g²/(2J); the dispersive term χ n σz
    // carries that shift on the qubit label whose σz is +1.
    let p = SystemParams { j: 10.0, g: 1.0, ..SystemParams::default() };
    let h = HilbertConfig::new(1, 1).unwrap();
    let jc = build_h_jc(&p, &h).unwrap();
    let disp = build_h_dispersive(&p, &h).unwrap();
    let (e1, o1, q) = (h.index(1, 0, GROUND), h.index(0, 1, GROUND), h.index(0, 0, EXCITED));
    let c = jc.get(e1, q).re;
    assert_relative_eq!(c, 1.0 / 2f64.sqrt(), max_relative = 1e-12);
    assert_eq!(jc.get(o1, q).norm(), c.abs());
    let j = p.j;
    let det = |x: f64| (j - x) * (x * (j + x) - c * c) + c * c * (j + x);
    let mut x = j;
    for _ in 0..50 {
        let d = (det(x + 1e-7) - det(x - 1e-7)) / 2e-7;
        x -= det(x) / d;
    }
    let up = h.index(1, 0, EXCITED);
    let shifted = disp.get(up, up).re;
    assert!((x - shifted).abs() < 1e-3, "JC {x} vs dispersive {shifted}");
    assert_relative_eq!(disp.get(e1, e1).re - j, -(shifted - j), max_relative = 1e-12);
    assert_relative_eq!(disp.get(o1, o1).re + j, shifted - j, max_relative = 1e-12);
}

#[test]
fn text_dump_round_trip_is_deterministic() {
    let p = small_params();
    let h = HilbertConfig::new(3, 3).unwrap();
    let l = jc_full(&p, &h);
    let dump = |rho: &DensityMatrix| {
        let mut v = vec![];
        rho.write_text(&mut v).unwrap();
        String::from_utf8(v).unwrap()
    };
    let a = dump(&steady_state(&l).unwrap().rho);
    let b = dump(&steady_state(&l).unwrap().rho);
    assert_eq!(a, b);
    let back = DensityMatrix::read_text(a.as_bytes()).unwrap();
    assert_eq!(dump(&back), a);
    assert!(a.starts_with("32\n"));
}

#[test]
fn windowed_jc_matches_full_jc() {
    let p = small_params();
    let h = HilbertConfig::adapted(5, p.lambda, p.kappa).unwrap();
    let full = steady_state(&jc_full(&p, &h)).unwrap();
    let win = jc_steady_state(&p, &h, 4, &SolverOptions::default()).unwrap();
    check_invariants(&win.rho);
    assert!(win.unknowns < full.unknowns);
    assert!(1.0 - state_fidelity(&full.rho, &win.rho).unwrap() < 1e-6);
}

#[test]
fn comparison_small_cutoff() {
    let p = SystemParams::comparison_point(0.2);
    let c = jc_vs_dispersive_error(&p, &ComparisonOptions { n_max: 8, ..Default::default() }).unwrap();
    assert!(c.full_error > 0.0 && c.full_error < 0.015);
    assert!(c.p_excited > 0.0 && c.p_excited < 0.05);
    assert!(c.residual_jc < 1e-8 && c.residual_dispersive < 1e-8);
    assert!(hilbert_for(&SystemParams::comparison_point(0.5), 8).is_err());
}
