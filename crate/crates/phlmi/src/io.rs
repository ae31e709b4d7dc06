//! Design bundles and CSV exports.
//!
//! Bundles and all numeric text output carry 17 significant digits, which
//! round-trips `f64` exactly: a bundle written and reloaded reproduces the
//! design matrices bit for bit.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sim::ClosedLoopTrace;
use crate::synthesis::{ControllerRealization, PassivityCertificate};

/// 17-significant-digit decimal form of an `f64` (exact round-trip).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Observer gain + controller realization as written by the synthesis
/// pipeline and consumed by the simulate command.
#[derive(Debug, Clone)]
pub struct DesignBundle {
    pub l: DMatrix<f64>,
    pub ctrl: ControllerRealization,
    pub seed: u64,
    pub design: usize,
}

impl DesignBundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("[design]\n");
        out.push_str(&format!("design = {}\n", self.design));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("n = {}\n", self.ctrl.n()));
        out.push_str(&format!("m = {}\n", self.ctrl.m()));
        for (name, m) in self.matrices() {
            out.push_str(&format!("[{name}]\n"));
            for i in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|j| format_f64(m[(i, j)])).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    fn matrices(&self) -> Vec<(&'static str, &DMatrix<f64>)> {
        vec![
            ("L", &self.l),
            ("J_c", &self.ctrl.j_c),
            ("R_c", &self.ctrl.r_c),
            ("Q_c", &self.ctrl.q_c),
            ("B_c", &self.ctrl.b_c),
            ("K", &self.ctrl.k),
            ("S_c", &self.ctrl.s_c),
            ("B_r", &self.ctrl.b_r),
        ]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut design = 0usize;
        let mut seed = 0u64;
        let mut current: Option<String> = None;
        let mut blocks: std::collections::BTreeMap<String, Vec<Vec<f64>>> = Default::default();
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(name.to_string());
                if name != "design" {
                    blocks.entry(name.to_string()).or_default();
                }
                continue;
            }
            match current.as_deref() {
                Some("design") => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| Error::Config(format!("bundle: bad line '{line}'")))?;
                    match k.trim() {
                        "design" => design = v.trim().parse().unwrap_or(0),
                        "seed" => seed = v.trim().parse().unwrap_or(0),
                        "n" | "m" => {}
                        other => return Err(Error::Config(format!("bundle: unknown key '{other}'"))),
                    }
                }
                Some(name) => {
                    let row: Vec<f64> = line
                        .split(',')
                        .map(|e| {
                            e.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::Config(format!("bundle: bad number '{e}' in [{name}]")))
                        })
                        .collect::<Result<_>>()?;
                    blocks.get_mut(name).unwrap().push(row);
                }
                None => return Err(Error::Config("bundle: data before any section".into())),
            }
        }
        let fetch = |name: &str| -> Result<DMatrix<f64>> {
            let rows = blocks
                .get(name)
                .ok_or_else(|| Error::Config(format!("bundle: missing [{name}]")))?;
            let r = rows.len();
            let c = rows.first().map(|x| x.len()).unwrap_or(0);
            if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
                return Err(Error::Config(format!("bundle: ragged [{name}]")));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            Ok(DMatrix::from_row_slice(r, c, &flat))
        };
        let ctrl = ControllerRealization {
            j_c: fetch("J_c")?,
            r_c: fetch("R_c")?,
            q_c: fetch("Q_c")?,
            b_c: fetch("B_c")?,
            k: fetch("K")?,
            s_c: fetch("S_c")?,
            b_r: fetch("B_r")?,
        };
        Ok(DesignBundle { l: fetch("L")?, ctrl, seed, design })
    }
}

/// Plain CSV of one matrix (no header).
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Eigenvalue report: one row per eigenvalue, labeled by the matrix name.
pub fn write_eigenvalue_csv(path: &Path, groups: &[(&str, &[Complex64])]) -> Result<()> {
    let mut out = String::from("matrix,re,im\n");
    for (name, eigs) in groups {
        for z in *eigs {
            out.push_str(&format!("{name},{},{}\n", format_f64(z.re), format_f64(z.im)));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Closed-loop trace CSV with the header
/// `t,x0..,xhat0..,u0..,y0..,yc0..,H_plant,H_ctrl`.
pub fn write_trace_csv(path: &Path, trace: &ClosedLoopTrace) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    if trace.is_empty() {
        return Ok(());
    }
    let n = trace.plant_states[0].len();
    let n_c = trace.controller_states[0].len();
    let m = trace.u[0].len();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..n_c).map(|i| format!("xhat{i}")));
    header.extend((0..m).map(|i| format!("u{i}")));
    header.extend((0..m).map(|i| format!("y{i}")));
    header.extend((0..m).map(|i| format!("yc{i}")));
    header.push("H_plant".into());
    header.push("H_ctrl".into());
    writeln!(w, "{}", header.join(","))?;
    for k in 0..trace.len() {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        row.push(format_f64(trace.times[k]));
        row.extend(trace.plant_states[k].iter().map(|&v| format_f64(v)));
        row.extend(trace.controller_states[k].iter().map(|&v| format_f64(v)));
        row.extend(trace.u[k].iter().map(|&v| format_f64(v)));
        row.extend(trace.y[k].iter().map(|&v| format_f64(v)));
        row.extend(trace.y_c[k].iter().map(|&v| format_f64(v)));
        row.push(format_f64(trace.h_plant[k]));
        row.push(format_f64(trace.h_ctrl[k]));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Diagnostics CSV: `name,value` rows.
pub fn write_diagnostics_csv(path: &Path, entries: &[(&str, f64)]) -> Result<()> {
    let mut out = String::from("name,value\n");
    for (name, v) in entries {
        out.push_str(&format!("{name},{}\n", format_f64(*v)));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Long-format deflection surface: `t,zeta,w,w_hat` rows.
pub fn write_deflection_csv(
    path: &Path,
    times: &[f64],
    zeta: &[f64],
    w: &[Vec<f64>],
    w_hat: &[Vec<f64>],
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "t,zeta,w,w_hat")?;
    for (k, &t) in times.iter().enumerate() {
        for (i, &z) in zeta.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                format_f64(t),
                format_f64(z),
                format_f64(w[k][i]),
                format_f64(w_hat[k][i])
            )?;
        }
    }
    Ok(())
}

/// Human-readable synthesis summary.
pub fn synthesis_summary(
    design: usize,
    n: usize,
    m: usize,
    matching_residual: f64,
    cert: &PassivityCertificate,
    abscissas: &[(&str, f64)],
) -> String {
    let mut s = String::new();
    s.push_str(&format!("design {design}: controller order {n}, {m} port(s)\n"));
    s.push_str(&format!("matching residual: {:.3e}\n", matching_residual));
    s.push_str(&format!(
        "passivity: spr_epsilon = {:.6e}, osp_epsilon = {:.6e}, zsd = {}\n",
        cert.spr_epsilon, cert.osp_epsilon, cert.zsd
    ));
    s.push_str(&format!("lambda_min(R_c) = {:.6e}\n", cert.r_c_min_eig));
    for (name, a) in abscissas {
        s.push_str(&format!("spectral abscissa of {name}: {:.6e}\n", a));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn sample_bundle() -> DesignBundle {
        // irrational-ish entries exercise the 17-digit round-trip
        let q_c = DMatrix::from_row_slice(2, 2, &[2.0f64.sqrt(), 0.1, 0.1, std::f64::consts::PI]);
        let l = DMatrix::from_column_slice(2, 1, &[1.0 / 3.0, -7.0 / 11.0]);
        let ctrl = ControllerRealization {
            j_c: DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -0.5, 0.0]),
            r_c: DMatrix::identity(2, 2) * (1.0 / 7.0),
            q_c: q_c.clone(),
            b_c: l.clone(),
            k: l.transpose() * &q_c,
            s_c: DMatrix::from_row_slice(2, 2, &[-0.3, 0.2, 0.1, -0.4]),
            b_r: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        };
        DesignBundle { l, ctrl, seed: 17, design: 2 }
    }

    #[test]
    fn bundle_roundtrip_is_bit_exact() {
        let dir = std::env::temp_dir().join(format!("phlmi_bundle_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("design.bundle");
        let bundle = sample_bundle();
        bundle.save(&path).unwrap();
        let loaded = DesignBundle::load(&path).unwrap();
        assert_eq!(bundle.l, loaded.l);
        assert_eq!(bundle.ctrl.j_c, loaded.ctrl.j_c);
        assert_eq!(bundle.ctrl.r_c, loaded.ctrl.r_c);
        assert_eq!(bundle.ctrl.q_c, loaded.ctrl.q_c);
        assert_eq!(bundle.ctrl.b_c, loaded.ctrl.b_c);
        assert_eq!(bundle.ctrl.k, loaded.ctrl.k);
        assert_eq!(bundle.ctrl.s_c, loaded.ctrl.s_c);
        assert_eq!(bundle.ctrl.b_r, loaded.ctrl.b_r);
        assert_eq!(loaded.seed, 17);
        assert_eq!(loaded.design, 2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn seventeen_digits_roundtrip() {
        for v in [1.0 / 3.0, std::f64::consts::PI, 2.2250738585072014e-308, -1.7e308, 4.0363e-11] {
            let s = format_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "value {v} via '{s}'");
        }
    }

    #[test]
    fn trace_csv_layout() {
        let dir = std::env::temp_dir().join(format!("phlmi_trace_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.csv");
        let mut trace = ClosedLoopTrace {
            times: vec![0.0, 0.1],
            plant_states: vec![DVector::zeros(2), DVector::from_column_slice(&[1.0, 2.0])],
            controller_states: vec![DVector::zeros(2), DVector::from_column_slice(&[3.0, 4.0])],
            u: vec![DVector::zeros(1), DVector::from_element(1, 0.5)],
            y: vec![DVector::zeros(1), DVector::from_element(1, -0.5)],
            u_c: vec![DVector::zeros(1), DVector::from_element(1, -0.5)],
            y_c: vec![DVector::zeros(1), DVector::from_element(1, 0.25)],
            y_r: vec![DVector::zeros(1), DVector::from_element(1, 0.0)],
            r: vec![DVector::zeros(1), DVector::zeros(1)],
            h_plant: vec![0.0, 1.5],
            h_ctrl: vec![0.0, 2.5],
            est_err: vec![0.0, 0.1],
        };
        write_trace_csv(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x0,x1,xhat0,xhat1,u0,y0,yc0,H_plant,H_ctrl"
        );
        assert_eq!(lines.count(), 2);
        trace.times.clear();
        std::fs::remove_dir_all(&dir).ok();
    }
}
