use approx::assert_relative_eq;

use istms::sweeps::*;

fn fixed(workers: usize) -> Execution {
    Execution { workers: Some(workers), timestamp: Some(1_700_000_000) }
}

#[test]
fn grids() {
    assert_eq!(Grid::List { values: vec![3.0, 2.0, 1.0] }.values().unwrap(), vec![3.0, 2.0, 1.0]);
    assert!(Grid::List { values: vec![] }.values().is_err());
    assert!(Grid::List { values: vec![1.0, 2.0, 2.0] }.values().is_err());
    assert!(Grid::List { values: vec![1.0, f64::NAN] }.values().is_err());
    assert!(Grid::Logspace { start: 0.0, stop: 10.0, n: 3 }.values().is_err());
    let v = Grid::Logspace { start: 1.0, stop: 100.0, n: 3 }.values().unwrap();
    assert_relative_eq!(v[1], 10.0, max_relative = 1e-14);
    let v = Grid::Linspace { start: -1.0, stop: 1.0, n: 5 }.values().unwrap();
    assert_eq!(v, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    let g: Grid = serde_json::from_str(r#"{"kind":"linspace","start":0,"stop":1,"n":2}"#).unwrap();
    assert_eq!(g.values().unwrap(), vec![0.0, 1.0]);
}

#[test]
fn zero_workers_rejected() {
    assert!(Execution { workers: Some(0), timestamp: None }.map(&[1, 2], |x| *x).is_err());
}

#[test]
fn reruns_are_byte_identical() {
    let a = fig2_spectrum(&Fig2Config::default(), &fixed(3)).unwrap().to_csv_string().unwrap();
    let b = fig2_spectrum(&Fig2Config::default(), &fixed(3)).unwrap().to_csv_string().unwrap();
    assert_eq!(a, b);
    let a = fig5_loss(&Fig5Config::default(), &fixed(2)).unwrap().to_csv_string().unwrap();
    let b = fig5_loss(&Fig5Config::default(), &fixed(2)).unwrap().to_csv_string().unwrap();
    assert_eq!(a, b);
}

#[test]
fn worker_count_does_not_change_output() {
    let cfg = Fig3Config::default();
    let one = fig3_tau_star(&cfg, &fixed(1)).unwrap().to_csv_string().unwrap();
    let many = fig3_tau_star(&cfg, &fixed(8)).unwrap().to_csv_string().unwrap();
    assert_eq!(one, many);
    let one = fig4_dos(&Fig4Config::default(), &fixed(1)).unwrap();
    let many = fig4_dos(&Fig4Config::default(), &fixed(5)).unwrap();
    assert_eq!(one, many);
}

#[test]
fn csv_format_and_round_trip() {
    let r = fig4_dos(&Fig4Config::default(), &fixed(2)).unwrap();
    let s = r.to_csv_string().unwrap();
    let mut lines = s.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: {"));
    assert_eq!(lines.next().unwrap(), "omega,dos_right,dos_left,status");
    assert!(!s.contains('\r'));
    // 17 significant digits
    let first = s.lines().nth(2).unwrap();
    assert_eq!(first.split(',').next().unwrap(), "-1.0000000000000000e1");
    let back = SweepResult::read_csv(&s).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.manifest.timestamp, 1_700_000_000);
    assert_eq!(back.manifest.tool, TOOL);
    assert!(SweepResult::read_csv("omega\n1\n").is_err());
}

#[test]
fn dos_zero_on_grid() {
    let r = fig4_dos(&Fig4Config::default(), &fixed(2)).unwrap();
    let w = r.column("omega").unwrap();
    let i = w.iter().position(|&x| x == 0.0).expect("grid contains zero");
    assert_eq!(r.column("dos_right").unwrap()[i], 0.0);
}

#[test]
fn invalid_rows_are_marked_not_dropped() {
    let cfg = Fig3Config::default();
    let r = fig3_tau_star(&cfg, &fixed(2)).unwrap();
    assert_eq!(r.rows.len(), 61);
    let nsq = r.column("n_sqz").unwrap()[0];
    for row in &r.rows {
        let n = row.values[0];
        if n < nsq + 1.0 {
            assert!(row.status.starts_with("invalid"), "{n}: {}", row.status);
            assert!(row.values[3].is_nan());
        } else {
            assert!(row.is_ok(), "{n}: {}", row.status);
        }
    }
    assert!(r.rows.iter().any(|row| !row.is_ok()));
    // failures survive the CSV round trip
    let back = SweepResult::read_csv(&r.to_csv_string().unwrap()).unwrap();
    assert_eq!(back.rows.iter().filter(|x| !x.is_ok()).count(), r.rows.iter().filter(|x| !x.is_ok()).count());
}

#[test]
fn standard_curve_decreases() {
    let cfg = Fig3Config { chi: 0.5, lambda_mode: LambdaMode::Zero, ..Default::default() };
    let r = fig3_tau_star(&cfg, &fixed(2)).unwrap();
    let t = r.column("tau_star_standard").unwrap();
    assert!(t.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn loss_rows() {
    let r = fig5_loss(&Fig5Config::default(), &fixed(4)).unwrap();
    assert_eq!(r.rows.len(), 5 * 61);
    let eps = r.column("epsilon").unwrap();
    let nsq = r.column("n_sqz").unwrap();
    let i = eps.iter().position(|&e| e == 0.1).unwrap();
    assert!((nsq[i] - 4.6).abs() < 0.46);
    let large: Vec<_> = r.rows.iter().filter(|row| row.values[4] > 500.0).collect();
    assert!(large.iter().all(|row| row.is_ok()));
}

#[test]
fn manifest_records_settings() {
    let r = fig2_spectrum(&Fig2Config::default(), &fixed(1)).unwrap();
    assert_eq!(r.manifest.sweep, "fig2");
    assert_eq!(r.manifest.params.lambda, 0.25);
    assert_eq!(r.rows.len(), 4 * 601);
    let mut json = vec![];
    r.write_json(&mut json).unwrap();
    let back: SweepResult = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, r);
}
