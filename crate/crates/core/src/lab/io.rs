//! On-disk formats of the laboratory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lax::ActionTrajectory;
use crate::spectral::{Observables, RealState, Trajectory};

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const ACTIONS_CSV: &str = "actions.csv";
pub const ACTIONS_SUMMARY: &str = "actions_summary.json";
pub const MANIFEST: &str = "manifest.json";
pub const CERTIFICATE: &str = "certificate.json";
pub const SWEEP_REPORT: &str = "sweep_report.json";
pub const COEFF_DIR: &str = "coeffs";

pub fn write_trajectory_csv(path: &Path, times: &[f64], obs: &[Observables]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "H_BO", "momentum", "P_value", "H_total"])?;
    for (t, o) in times.iter().zip(obs) {
        w.write_record([t, &o.h_bo, &o.momentum, &o.p_value, &o.h_total].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<(f64, Observables)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("bad number {s}: {e}"))))
            .collect::<Result<_>>()?;
        if v.len() != 5 {
            return Err(Error::DimensionMismatch { expected: 5, found: v.len() });
        }
        out.push((v[0], Observables { h_bo: v[1], momentum: v[2], p_value: v[3], h_total: v[4] }));
    }
    Ok(out)
}

/// Little-endian dump: `u64 M`, `f64 t`, then `M` pairs `(re, im)` of `f64`.
pub fn write_coefficients(path: &Path, t: f64, u: &RealState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(u.modes() as u64).to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for c in u.coeffs() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_coefficients(path: &Path) -> Result<(f64, RealState)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let m = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * m {
        return Err(Error::DimensionMismatch { expected: 16 * m, found: bytes.len() });
    }
    let coeffs = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok((t, RealState::from_coeffs(coeffs)))
}

pub fn coefficient_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(COEFF_DIR).join(format!("sample_{index:06}.bin"))
}

pub fn write_coefficient_dumps(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir.join(COEFF_DIR))?;
    for (i, (t, u)) in traj.times.iter().zip(&traj.states).enumerate() {
        write_coefficients(&coefficient_path(dir, i), *t, u)?;
    }
    Ok(())
}

/// Reads every `coeffs/sample_*.bin` of a run directory in index order.
pub fn read_coefficient_dumps(dir: &Path) -> Result<Trajectory> {
    let cdir = dir.join(COEFF_DIR);
    if !cdir.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no coefficient dumps under {}", cdir.display()),
        )));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(&cdir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    files.sort();
    let mut traj = Trajectory { times: Vec::new(), states: Vec::new() };
    for f in files {
        let (t, u) = read_coefficients(&f)?;
        traj.times.push(t);
        traj.states.push(u);
    }
    Ok(traj)
}

pub fn write_actions_csv(path: &Path, actions: &ActionTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=actions.n_max).map(|n| format!("gamma_{n}")));
    header.extend(["tail_energy", "h_omega", "H4", "max_drift", "residual"].map(String::from));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for s in &actions.samples {
        let mut row = vec![s.t.to_string()];
        row.extend(s.gaps.iter().map(|g| g.to_string()));
        row.extend([
            s.tail_energy.to_string(),
            opt(s.h_omega),
            opt(s.h4),
            s.max_drift.to_string(),
            s.residual.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_roundtrip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let u = RealState::from_coeffs(vec![Complex64::new(0.5, -0.25), Complex64::new(1e-300, 3.0)]);
        let p = dir.path().join("a.bin");
        write_coefficients(&p, 1.5, &u).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 8 + 8 + 2 * 16);
        assert_eq!(u64::from_le_bytes(bytes[..8].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.5);
        assert_eq!(read_coefficients(&p).unwrap(), (1.5, u));
    }

    #[test]
    fn truncated_dump_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.bin");
        fs::write(&p, [2u64.to_le_bytes(), 0f64.to_le_bytes()].concat()).unwrap();
        assert!(read_coefficients(&p).is_err());
    }
}
