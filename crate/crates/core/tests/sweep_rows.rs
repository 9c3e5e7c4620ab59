use comma::experiments::{grid_points, run_sweep, write_csv, Kind, SweepSpec, HEADER};

fn parse(field: &str) -> Option<f64> {
    (!field.is_empty()).then(|| field.parse().unwrap())
}

fn check_derived_columns(spec: &SweepSpec) -> usize {
    let out = run_sweep(spec, false).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &out.rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, HEADER);
    assert_eq!(header.last(), Some(&"status"));
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), header.len(), "{line}");
        rows += 1;
        let k_a: f64 = f[col("k_a")].parse().unwrap();
        let (n, n_tot, power, b) = (parse(f[col("n")]), parse(f[col("n_tot")]), parse(f[col("power")]), parse(f[col("b")]));
        if let Some(s) = parse(f[col("s_eff")]) {
            assert_eq!(s, k_a * b.unwrap() / n_tot.unwrap(), "{line}");
        }
        if let Some(e) = parse(f[col("ebn0")]) {
            assert_eq!(e, n.unwrap() * power.unwrap() / b.unwrap(), "{line}");
        }
        for real in ["power", "eps", "bound", "s_eff", "ebn0"] {
            let v = f[col(real)];
            if !v.is_empty() {
                let mantissa = v.split('e').next().unwrap().replace(['-', '.'], "");
                assert_eq!(mantissa.len(), 17, "{real} = {v}");
            }
        }
    }
    rows
}

#[test]
fn achannel_rows_are_consistent_and_never_omitted() {
    let mut spec = SweepSpec::defaults(Kind::AchannelSeff);
    spec.k_a = vec![5, 60, 300];
    spec.mc_samples = 1_000;
    // K_a = 300 exceeds q = 256 and must still produce rows
    let rows = check_derived_columns(&spec);
    assert_eq!(rows, 3 * 2);
}

#[test]
fn ebn0_rows_are_consistent() {
    let mut spec = SweepSpec::defaults(Kind::AchannelEbn0);
    spec.k_a = vec![4, 30];
    spec.mc_samples = 1_000;
    assert_eq!(check_derived_columns(&spec), 2 * 2);
}

#[test]
fn comma_rows_are_consistent() {
    let mut spec = SweepSpec::defaults(Kind::CommaSeffPerfect);
    spec.k_a = vec![4];
    spec.frames = 30;
    spec.fbl_trials = 200;
    spec.mc_samples = 500;
    assert_eq!(check_derived_columns(&spec), 2);
}

#[test]
fn mf_rows_are_consistent() {
    let mut spec = SweepSpec::defaults(Kind::MfScaling);
    spec.k_a = vec![2, 4];
    spec.frames = 50;
    assert_eq!(check_derived_columns(&spec), 2 * 3);
}

#[test]
fn grid_order_puts_users_innermost() {
    let mut spec = SweepSpec::defaults(Kind::MfScaling);
    spec.k_a = vec![1, 2];
    spec.m = vec![4, 8];
    let pts: Vec<(usize, usize)> = grid_points(&spec).iter().map(|p| (p.m, p.k_a)).collect();
    assert_eq!(pts, vec![(4, 1), (4, 2), (8, 1), (8, 2)]);
}

#[test]
fn unused_dimensions_do_not_multiply_rows() {
    let mut spec = SweepSpec::defaults(Kind::AchannelSeff);
    spec.m = vec![1, 2, 3];
    spec.b = vec![10, 20];
    spec.k_a = vec![2];
    assert_eq!(grid_points(&spec).len(), 1);
}
