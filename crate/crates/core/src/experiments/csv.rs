//! Sweep rows and their CSV encoding.

use std::io::Write;

use crate::error::Result;

use super::config::Kind;

/// Column names, in order; `status` is always last.
pub const HEADER: [&str; 20] = [
    "kind", "series", "k_a", "q", "n", "m", "power", "b", "eps", "n_fa", "n_tot", "bound", "std_err", "p_md", "p_fa",
    "s_eff", "ebn0", "ebn0_db", "feasible", "status",
];

/// One output row. Empty fields are `None`.
///
/// When present, `s_eff = k_a * b / n_tot` and `ebn0 = n * power / b`,
/// evaluated in exactly that order in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: Kind,
    pub series: String,
    pub k_a: usize,
    pub q: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub power: Option<f64>,
    pub b: Option<u32>,
    pub eps: Option<f64>,
    pub n_fa: Option<usize>,
    pub n_tot: Option<usize>,
    pub bound: Option<f64>,
    pub std_err: Option<f64>,
    pub p_md: Option<f64>,
    pub p_fa: Option<f64>,
    pub s_eff: Option<f64>,
    pub ebn0: Option<f64>,
    pub ebn0_db: Option<f64>,
    pub feasible: bool,
    pub status: String,
}

impl SweepRow {
    pub fn new(kind: Kind, series: &str, k_a: usize) -> Self {
        SweepRow {
            kind,
            series: series.to_string(),
            k_a,
            q: None,
            n: None,
            m: None,
            power: None,
            b: None,
            eps: None,
            n_fa: None,
            n_tot: None,
            bound: None,
            std_err: None,
            p_md: None,
            p_fa: None,
            s_eff: None,
            ebn0: None,
            ebn0_db: None,
            feasible: false,
            status: "infeasible".into(),
        }
    }

    /// Mark feasible and fill the derived columns from `n`, `n_tot`, `power` and `b`.
    pub fn feasible(mut self) -> Self {
        self.feasible = true;
        self.status = "ok".into();
        if let (Some(n_tot), Some(b)) = (self.n_tot, self.b) {
            self.s_eff = Some(s_eff(self.k_a, b, n_tot));
        }
        if let (Some(n), Some(p), Some(b)) = (self.n, self.power, self.b) {
            let e = ebn0(n, p, b);
            self.ebn0 = Some(e);
            self.ebn0_db = Some(10.0 * e.log10());
        }
        self
    }

    pub fn error(mut self, message: &str) -> Self {
        self.feasible = false;
        self.status = format!("error: {}", message.replace([',', '\n', '\r'], ";"));
        self
    }

    fn fields(&self) -> Vec<String> {
        fn int<T: ToString>(v: Option<T>) -> String {
            v.map_or(String::new(), |x| x.to_string())
        }
        fn real(v: Option<f64>) -> String {
            v.map_or(String::new(), |x| format!("{x:.16e}"))
        }
        vec![
            self.kind.to_string(),
            self.series.clone(),
            self.k_a.to_string(),
            int(self.q),
            int(self.n),
            int(self.m),
            real(self.power),
            int(self.b),
            real(self.eps),
            int(self.n_fa),
            int(self.n_tot),
            real(self.bound),
            real(self.std_err),
            real(self.p_md),
            real(self.p_fa),
            real(self.s_eff),
            real(self.ebn0),
            real(self.ebn0_db),
            self.feasible.to_string(),
            self.status.clone(),
        ]
    }
}

/// `K_a B / n_tot`.
pub fn s_eff(k_a: usize, b: u32, n_tot: usize) -> f64 {
    k_a as f64 * b as f64 / n_tot as f64
}

/// `n P / B`.
pub fn ebn0(n: usize, p: f64, b: u32) -> f64 {
    n as f64 * p / b as f64
}

/// Write the header and all rows.
pub fn write_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{}", HEADER.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.fields().join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_for_no_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", HEADER.join(",")));
    }

    #[test]
    fn derived_columns_round_trip() {
        let mut row = SweepRow::new(Kind::CommaSeffPerfect, "comma", 37);
        row.n = Some(13);
        row.n_tot = Some(13 * 32 + 32);
        row.power = Some(0.3);
        row.b = Some(40);
        let row = row.feasible();
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let f: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        let (k, n, p, b, nt): (usize, usize, f64, u32, usize) =
            (f[2].parse().unwrap(), f[4].parse().unwrap(), f[6].parse().unwrap(), f[7].parse().unwrap(), f[10].parse().unwrap());
        assert_eq!(f[15].parse::<f64>().unwrap(), s_eff(k, b, nt));
        assert_eq!(f[16].parse::<f64>().unwrap(), ebn0(n, p, b));
        assert_eq!(*f.last().unwrap(), "ok");
    }

    #[test]
    fn error_status_has_no_separators() {
        let row = SweepRow::new(Kind::MimoFbl, "gaussian", 1).error("bad, worse\nworst");
        assert_eq!(row.status, "error: bad; worse;worst");
    }
}
