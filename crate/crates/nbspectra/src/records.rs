//! Long-format CSV records: one measured statistic per row.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const HEADER: [&str; 11] =
    ["experiment", "n", "d", "q", "kappa", "epsilon", "trial", "seed", "stat_name", "stat_value", "runtime_ms"];

/// One statistic. Aggregate rows leave `trial` and `seed` empty; sweep-level rows also
/// leave the grid columns empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment: String,
    pub n: Option<usize>,
    pub d: Option<f64>,
    pub q: Option<f64>,
    pub kappa: Option<f64>,
    pub epsilon: Option<f64>,
    pub trial: Option<usize>,
    /// Stream index of the trial's seed (the master seed comes from the config).
    pub seed: Option<u64>,
    pub stat_name: String,
    pub stat_value: f64,
    pub runtime_ms: u64,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn parse_opt<T: std::str::FromStr>(s: &str, col: &str, row: usize) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| anyhow::anyhow!("row {row}: bad {col} '{s}'"))
}

impl TrialRecord {
    fn fields(&self) -> [String; 11] {
        [
            self.experiment.clone(),
            opt(&self.n),
            opt(&self.d),
            opt(&self.q),
            opt(&self.kappa),
            opt(&self.epsilon),
            opt(&self.trial),
            opt(&self.seed),
            self.stat_name.clone(),
            self.stat_value.to_string(),
            self.runtime_ms.to_string(),
        ]
    }
}

/// Writes the header and all rows. Non-finite values are rejected.
pub fn write_records<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        let finite = [r.d, r.q, r.kappa, r.epsilon].iter().flatten().chain([&r.stat_value]).all(|x| x.is_finite());
        if !finite {
            bail!("non-finite value in record {} / {}", r.experiment, r.stat_name);
        }
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(records: &[TrialRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_records(records, std::io::BufWriter::new(file))
}

pub fn records_to_string(records: &[TrialRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(records, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(HEADER) {
        bail!("unexpected header {:?}", header);
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let f = |k: usize| rec.get(k).unwrap_or("");
        out.push(TrialRecord {
            experiment: f(0).to_string(),
            n: parse_opt(f(1), "n", row)?,
            d: parse_opt(f(2), "d", row)?,
            q: parse_opt(f(3), "q", row)?,
            kappa: parse_opt(f(4), "kappa", row)?,
            epsilon: parse_opt(f(5), "epsilon", row)?,
            trial: parse_opt(f(6), "trial", row)?,
            seed: parse_opt(f(7), "seed", row)?,
            stat_name: f(8).to_string(),
            stat_value: parse_opt(f(9), "stat_value", row)?.with_context(|| format!("row {row}: empty stat_value"))?,
            runtime_ms: parse_opt(f(10), "runtime_ms", row)?.unwrap_or(0),
        });
    }
    Ok(out)
}

pub fn read_results(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_records(file)
}

/// Values of the aggregate records named `stat_name`, filtered by `n` and `epsilon` when given.
pub fn find_stat(records: &[TrialRecord], stat_name: &str, n: Option<usize>, epsilon: Option<f64>) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.stat_name == stat_name && r.trial.is_none())
        .filter(|r| n.is_none() || r.n == n)
        .filter(|r| epsilon.is_none() || r.epsilon == epsilon)
        .map(|r| r.stat_value)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TrialRecord> {
        vec![
            TrialRecord {
                experiment: "crossover".into(),
                n: Some(100),
                d: Some(100f64.ln() * 0.1),
                q: Some(0.1f64.sqrt()),
                kappa: Some(1.0 + 1e-13),
                epsilon: None,
                trial: Some(3),
                seed: Some((1 << 32) | 3),
                stat_name: "opnorm_h".into(),
                stat_value: std::f64::consts::E,
                runtime_ms: 12,
            },
            TrialRecord {
                experiment: "tail-rho-b".into(),
                n: None,
                d: None,
                q: None,
                kappa: None,
                epsilon: Some(0.5),
                trial: None,
                seed: None,
                stat_name: "a,b \"quoted\"".into(),
                stat_value: -1e-300,
                runtime_ms: 0,
            },
        ]
    }

    #[test]
    fn round_trip_is_identity() {
        let recs = sample();
        let text = records_to_string(&recs).unwrap();
        assert!(text.starts_with("experiment,n,d,q,kappa,epsilon,trial,seed,stat_name,stat_value,runtime_ms\n"));
        let back = read_records(text.as_bytes()).unwrap();
        assert_eq!(back, recs);
        assert_eq!(records_to_string(&back).unwrap(), text);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.csv");
        write_results(&sample(), &path).unwrap();
        assert_eq!(read_results(&path).unwrap(), sample());
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut recs = sample();
        recs[0].stat_value = f64::NAN;
        assert!(records_to_string(&recs).is_err());
        let mut recs = sample();
        recs[1].epsilon = Some(f64::INFINITY);
        assert!(records_to_string(&recs).is_err());
    }

    #[test]
    fn bad_rows_are_reported() {
        let text = "experiment,n,d,q,kappa,epsilon,trial,seed,stat_name,stat_value,runtime_ms\nx,abc,,,,,,,s,1,0\n";
        let e = read_records(text.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("row 2"), "{e}");
        assert!(read_records("a,b\n".as_bytes()).is_err());
    }
}
