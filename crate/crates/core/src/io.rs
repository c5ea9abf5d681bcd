//! Snapshot dumps and JSON moment records.
//!
//! A snapshot file is CSV with a single `# {json}` header line carrying `t`,
//! `seed` and `params_hash`, then the column row `x1,p1,x2,p2` and one row per
//! trajectory.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sde::{EnsembleState, Quadratures};
use crate::stats::{CovarianceMatrix4, MadelungMoments, MomentErrors};

pub const SNAPSHOT_COLUMNS: &str = "x1,p1,x2,p2";

/// Hex SHA-256 of the compact JSON serialization of `value`.
pub fn params_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub t: f64,
    pub seed: u64,
    pub params_hash: String,
}

pub fn write_snapshot<W: Write>(mut w: W, header: &SnapshotHeader, s: &EnsembleState) -> Result<()> {
    writeln!(w, "# {}", serde_json::to_string(header)?)?;
    writeln!(w, "{SNAPSHOT_COLUMNS}")?;
    for q in &s.states {
        writeln!(w, "{:e},{:e},{:e},{:e}", q[0], q[1], q[2], q[3])?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<(SnapshotHeader, EnsembleState)> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Snapshot("empty input".into()))??;
    let json = first
        .strip_prefix("# ")
        .ok_or_else(|| Error::Snapshot("missing `# {json}` header line".into()))?;
    let header: SnapshotHeader = serde_json::from_str(json)?;
    let columns = lines
        .next()
        .ok_or_else(|| Error::Snapshot("missing column row".into()))??;
    if columns.trim() != SNAPSHOT_COLUMNS {
        return Err(Error::Snapshot(format!("expected columns {SNAPSHOT_COLUMNS}, got {columns}")));
    }
    let mut states = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut q: Quadratures = [0.0; 4];
        let mut fields = line.split(',');
        for v in q.iter_mut() {
            let field = fields
                .next()
                .ok_or_else(|| Error::Snapshot(format!("row {}: expected 4 columns", i + 1)))?;
            *v = field
                .trim()
                .parse()
                .map_err(|e| Error::Snapshot(format!("row {}: {e}", i + 1)))?;
        }
        if fields.next().is_some() {
            return Err(Error::Snapshot(format!("row {}: expected 4 columns", i + 1)));
        }
        states.push(q);
    }
    let state = EnsembleState::new(header.t, states).map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok((header, state))
}

/// Covariance in plain-array form for serialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRecord {
    pub sigma: [[f64; 4]; 4],
    pub means: [f64; 4],
    pub xi: f64,
    pub k: f64,
}

impl From<&CovarianceMatrix4> for CovarianceRecord {
    fn from(c: &CovarianceMatrix4) -> Self {
        let mut sigma = [[0.0; 4]; 4];
        for (i, row) in sigma.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = c.sigma[(i, j)];
            }
        }
        CovarianceRecord {
            sigma,
            means: c.means,
            xi: c.xi,
            k: c.k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsRecord {
    pub tau: f64,
    pub moments: MadelungMoments,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<MomentErrors>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceRecord>,
}

/// JSON object mapping the formatted `τ` of each record to the record.
pub fn records_by_tau(records: &[MomentsRecord]) -> Result<serde_json::Value> {
    let mut map = serde_json::Map::new();
    for r in records {
        map.insert(format!("{}", r.tau), serde_json::to_value(r)?);
    }
    Ok(serde_json::Value::Object(map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::covariance;

    fn sample() -> EnsembleState {
        let states = (0..150)
            .map(|i| {
                let x = i as f64 * 0.1;
                [x, -x, 1.0 / (1.0 + x), std::f64::consts::PI * x]
            })
            .collect();
        EnsembleState::new(2.5, states).unwrap()
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let s = sample();
        let header = SnapshotHeader {
            t: s.t,
            seed: 42,
            params_hash: params_hash(&"x").unwrap(),
        };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &header, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# {\"t\":2.5,\"seed\":42,"));
        assert_eq!(text.lines().nth(1), Some(SNAPSHOT_COLUMNS));
        let (h, back) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, s);
    }

    #[test]
    fn malformed_snapshots_are_rejected() {
        assert!(read_snapshot("".as_bytes()).is_err());
        assert!(read_snapshot("x1,p1,x2,p2\n".as_bytes()).is_err());
        let bad = "# {\"t\":0.0,\"seed\":1,\"params_hash\":\"a\"}\nx1,p1,x2,p2\n1,2,3\n";
        assert!(matches!(read_snapshot(bad.as_bytes()), Err(Error::Snapshot(_))));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = params_hash(&[1.0, 2.0]).unwrap();
        assert_eq!(a.len(), 64);
        assert_eq!(a, params_hash(&[1.0, 2.0]).unwrap());
        assert_ne!(a, params_hash(&[1.0, 2.0000001]).unwrap());
    }

    #[test]
    fn records_are_keyed_by_tau() {
        let s = sample();
        let cov = covariance(&s).unwrap();
        let rec = MomentsRecord {
            tau: 0.5,
            moments: MadelungMoments {
                rho_m: 1.0,
                c: 0.0,
                c12: 0.0,
                c_theta: None,
                circular_variance: None,
                n_samples: 150,
            },
            errors: None,
            covariance: Some((&cov).into()),
        };
        let v = records_by_tau(&[rec]).unwrap();
        assert_eq!(v["0.5"]["moments"]["n_samples"], 150);
        assert_eq!(v["0.5"]["covariance"]["sigma"][0][0], cov.sigma[(0, 0)]);
    }
}
