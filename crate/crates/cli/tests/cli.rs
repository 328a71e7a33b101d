use std::path::Path;
use std::process::Command;

use nmdot_cli::{emit_plot_script, parse_config, presets, run_coefficients, run_propagate, ConfigError, PlotLayout};

const SINGLE: &str = "\
model = single
omega0 = 50
lead.L.model = ou
lead.L.gamma = 100
lead.L.d = 1000
lead.L.occupied = true
lead.R.model = ou
lead.R.gamma = 100
lead.R.d = 1000
lead.R.occupied = false
grid.t_end = 0.5
grid.n_steps = 200
";

const DQD: &str = "\
model = dqd
omega1 = 50
omega2 = 50
coupling = 25
lead.L.model = ou
lead.L.gamma = 100
lead.L.d = 1000
lead.L.occupied = true
lead.R.model = ou
lead.R.gamma = 100
lead.R.d = 1000
lead.R.occupied = false
grid.t_end = 0.01
grid.t_unit = absolute
grid.n_steps = 60
";

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let data = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, data)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}

fn nmdot(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nmdot")).args(args).current_dir(dir).output().unwrap()
}

#[test]
fn parses_valid_config() {
    let c = parse_config(SINGLE).unwrap();
    assert_eq!(c.leads.len(), 2);
    assert_eq!(c.grid.n_steps, 200);
    assert!((c.t_end_absolute() - 0.5 * 2.0 * std::f64::consts::PI / 50.0).abs() < 1e-15);
}

#[test]
fn unknown_key_reports_line_and_suggestion() {
    let text = SINGLE.replace("omega0 = 50", "omega0 = 50\nomega_zero = 3");
    match parse_config(&text).unwrap_err() {
        ConfigError::UnknownKey { line, key, suggestion } => {
            assert_eq!(line, 3);
            assert_eq!(key, "omega_zero");
            assert_eq!(suggestion.as_deref(), Some("omega0"));
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn rejects_bad_values() {
    let zero_steps = SINGLE.replace("grid.n_steps = 200", "grid.n_steps = 0");
    assert!(matches!(parse_config(&zero_steps), Err(ConfigError::Invariant { line: 12, .. })));
    let word = SINGLE.replace("omega0 = 50", "omega0 = fifty");
    assert!(matches!(parse_config(&word), Err(ConfigError::BadValue { line: 2, .. })));
    let missing = SINGLE.replace("lead.R.d = 1000\n", "");
    assert!(matches!(parse_config(&missing), Err(ConfigError::Missing { .. })));
    let twice = format!("{SINGLE}omega0 = 51\n");
    assert!(matches!(parse_config(&twice), Err(ConfigError::Duplicate { .. })));
    let stray = format!("{SINGLE}coupling = 3\n");
    assert!(matches!(parse_config(&stray), Err(ConfigError::NotApplicable { .. })));
    let unnormalized = format!("{SINGLE}initial.rho.00 = 0.5\ninitial.rho.11 = 0.6\n");
    assert!(matches!(parse_config(&unnormalized), Err(ConfigError::Invariant { .. })));
}

#[test]
fn config_round_trips() {
    for text in [SINGLE.to_string(), DQD.to_string(), format!("{SINGLE}initial.rho.00 = 0.25\ninitial.rho.11 = 0.75\ninitial.rho.01 = 0.1, -0.2\n")] {
        let c = parse_config(&text).unwrap();
        assert_eq!(parse_config(&c.to_string()).unwrap(), c);
    }
}

#[test]
fn fig1_table_starts_at_zero_and_is_antisymmetric() {
    let mut config = presets::fig1(25.0);
    config.grid.n_steps = 300;
    let (h, data) = rows(&run_coefficients(&config).unwrap());
    assert_eq!(h[0], "t_over_t0");
    assert!(data[0][1..].iter().all(|&x| x == 0.0));
    let (r1, i1, r2, i2) = (column(&h, "re_gamma1"), column(&h, "im_gamma1"), column(&h, "re_gamma2"), column(&h, "im_gamma2"));
    for row in &data {
        assert!((row[r1] + row[r2]).abs() <= 1e-8 * row[r1].abs().max(1.0));
        assert!((row[i1] + row[i2]).abs() <= 1e-8 * row[i1].abs().max(1.0));
    }
}

#[test]
fn wide_band_coefficient_approaches_half_gamma() {
    let text = SINGLE.replace("d = 1000", "d = 20000").replace("grid.t_end = 0.5", "grid.t_end = 0.005\ngrid.t_unit = absolute").replace("n_steps = 200", "n_steps = 400");
    let (h, data) = rows(&run_coefficients(&parse_config(&text).unwrap()).unwrap());
    let last = data.last().unwrap()[column(&h, "re_gamma1")];
    assert!((last - 50.0).abs() < 1.0, "{last}");
}

#[test]
fn closed_dot_keeps_populations() {
    let text = "model = dqd\nomega1 = 40\nomega2 = 60\ncoupling = 0\ngrid.t_end = 2\ngrid.n_steps = 100\ninitial.rho.00 = 0.1\ninitial.rho.11 = 0.2\ninitial.rho.22 = 0.3\ninitial.rho.33 = 0.4\n";
    let (h, data) = rows(&run_propagate(&parse_config(text).unwrap()).unwrap());
    for (k, p) in [0.1, 0.2, 0.3, 0.4].iter().enumerate() {
        let c = column(&h, &format!("rho_{k}{k}"));
        assert!(data.iter().all(|r| (r[c] - p).abs() < 1e-12));
    }
}

#[test]
fn flat_leads_relax_to_half_filling() {
    let text = "model = single\nomega0 = 50\nlead.L.model = flat\nlead.L.gamma = 100\nlead.L.occupied = true\nlead.R.model = flat\nlead.R.gamma = 100\nlead.R.occupied = false\ngrid.t_end = 0.1\ngrid.t_unit = absolute\ngrid.n_steps = 1000\n";
    let (h, data) = rows(&run_propagate(&parse_config(text).unwrap()).unwrap());
    let last = data.last().unwrap();
    assert!((last[column(&h, "rho_11")] - 0.5).abs() < 1e-3);
    let tr = column(&h, "trace_dev");
    assert!(data.iter().all(|r| r[tr] <= 1e-9));
}

#[test]
fn propagation_of_double_dot_preserves_trace() {
    let (h, data) = rows(&run_propagate(&parse_config(DQD).unwrap()).unwrap());
    assert!(h.contains(&"re_rho_12".to_string()));
    let (tr, he) = (column(&h, "trace_dev"), column(&h, "herm_dev"));
    assert!(data.iter().all(|r| r[tr] <= 1e-9 && r[he] <= 1e-12));
}

#[test]
fn csv_format_is_stable() {
    let csv = run_coefficients(&parse_config(DQD).unwrap()).unwrap();
    assert!(!csv.contains('\r'));
    assert!(csv.ends_with('\n'));
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 17);
    assert_eq!(header[1], "re_gamma_L1");
    assert_eq!(header[16], "im_gamma_R4");
    let field = csv.lines().nth(5).unwrap().split(',').nth(3).unwrap();
    let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
    assert!(mantissa.contains('.') && mantissa.len() - 1 >= 12, "{field}");
}

#[test]
fn plot_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("dqd.csv");
    std::fs::write(&csv, run_coefficients(&parse_config(DQD).unwrap()).unwrap()).unwrap();
    let gp = emit_plot_script(&csv, PlotLayout::Double).unwrap();
    let first = std::fs::read_to_string(&gp).unwrap();
    assert!(first.contains("(a) Re") && first.contains("(b) Im"));
    assert_eq!(first.matches("with lines").count(), 16);
    emit_plot_script(&csv, PlotLayout::Double).unwrap();
    assert_eq!(std::fs::read_to_string(&gp).unwrap(), first);
    assert!(emit_plot_script(&dir.path().join("missing.csv"), PlotLayout::Single).is_err());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nmdot(&["validate"], dir.path()).status.code(), Some(0));

    let coarse = SINGLE.replace("d = 1000", "d = 5000").replace("n_steps = 200", "n_steps = 10");
    std::fs::write(dir.path().join("coarse.cfg"), coarse).unwrap();
    assert_eq!(nmdot(&["validate", "--config", "coarse.cfg"], dir.path()).status.code(), Some(1));

    std::fs::write(dir.path().join("bad.cfg"), "model = single\nomega_zero = 50\n").unwrap();
    let out = nmdot(&["coefficients", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega0"));

    std::fs::write(dir.path().join("ok.cfg"), SINGLE).unwrap();
    let out = nmdot(&["coefficients", "--config", "ok.cfg", "--out", "c.csv", "--plot"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("c.csv").exists() && dir.path().join("c.gp").exists());
}
