//! Seeded white noise, rational filtering and scenario data generators.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratfun::RatTF;

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<f64>,
    pub label: String,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, samples: Vec<f64>) -> Self {
        TimeSeries {
            samples,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Drops the first `k` samples.
    pub fn skip(&self, k: usize) -> TimeSeries {
        TimeSeries::new(
            self.label.clone(),
            self.samples[k.min(self.len())..].to_vec(),
        )
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn mean_square(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.len() as f64
    }
}

/// Gaussian white noise with variance `variance`, reproducible from `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(variance: f64, seed: u64) -> Self {
        NoiseSpec { variance, seed }
    }
}

/// SplitMix64 output function.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Child seed for stream `index` under `master`:
/// `splitmix64(master ^ splitmix64(index))`.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn gen_noise(n: usize, spec: NoiseSpec) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "noise length must be at least 1".into(),
        ));
    }
    if spec.variance < 0.0 || !spec.variance.is_finite() {
        return Err(Error::InvalidInput(format!(
            "noise variance {} must be >= 0",
            spec.variance
        )));
    }
    let sigma = spec.variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let samples = (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(TimeSeries::new("e", samples))
}

/// Output of the difference equation of a causal `W` driven by `u`, with
/// zero pre-history.
pub fn filter(w: &RatTF, u: &TimeSeries) -> Result<TimeSeries> {
    if !w.is_causal() {
        return Err(Error::InvalidInput(format!(
            "cannot filter through non-causal {w}"
        )));
    }
    let n = u.len();
    if w.is_zero() {
        return Ok(TimeSeries::new(u.label.clone(), vec![0.0; n]));
    }
    let (b, a) = w.to_delay_form()?;
    let mut y = vec![0.0; n];
    for t in 0..n {
        let mut acc = 0.0;
        for (j, &bj) in b.iter().enumerate().take(t + 1) {
            acc += bj * u.samples[t - j];
        }
        for (j, &aj) in a.iter().enumerate().skip(1).take(t) {
            acc -= aj * y[t - j];
        }
        if !acc.is_finite() {
            return Err(Error::NonFiniteOutput { sample: t });
        }
        y[t] = acc;
    }
    Ok(TimeSeries::new(u.label.clone(), y))
}

/// First `n` impulse-response coefficients of a causal `W`.
pub fn impulse_response(w: &RatTF, n: usize) -> Result<Vec<f64>> {
    let mut delta = vec![0.0; n];
    if n > 0 {
        delta[0] = 1.0;
    }
    Ok(filter(w, &TimeSeries::new("delta", delta))?.samples)
}

pub(crate) fn require_stable_causal(name: &str, w: &RatTF) -> Result<()> {
    if !w.is_causal() {
        return Err(Error::InvalidInput(format!("{name} = {w} is not causal")));
    }
    let cls = w.classify()?;
    if !cls.stable {
        let pole = w
            .poles()?
            .into_iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or_default();
        return Err(Error::InvalidInput(format!(
            "{name} = {w} is not stable (pole at {pole})"
        )));
    }
    Ok(())
}

/// `[y1; y2] = [W1; W2] e` driven by one shared noise path; the first
/// `burn_in` samples are dropped from both channels.
pub fn sim_low_rank(
    w1: &RatTF,
    w2: &RatTF,
    n: usize,
    spec: NoiseSpec,
    burn_in: usize,
) -> Result<(TimeSeries, TimeSeries)> {
    require_stable_causal("W1", w1)?;
    require_stable_causal("W2", w2)?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let e = gen_noise(burn_in + n, spec)?;
    let y1 = filter(w1, &e)?.skip(burn_in).relabel("y1");
    let y2 = filter(w2, &e)?.skip(burn_in).relabel("y2");
    Ok((y1, y2))
}

/// True system of the external-input model `y = F u + K e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSystem {
    pub f1: RatTF,
    pub f2: RatTF,
    pub k1: RatTF,
    pub k2: RatTF,
}

impl InputSystem {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("F1", &self.f1),
            ("F2", &self.f2),
            ("K1", &self.k1),
            ("K2", &self.k2),
        ] {
            require_stable_causal(name, w)?;
        }
        for (name, w) in [("F1", &self.f1), ("F2", &self.f2)] {
            if !w.is_strictly_causal() {
                return Err(Error::InvalidInput(format!(
                    "{name} = {w} must be strictly causal"
                )));
            }
        }
        Ok(())
    }
}

/// Simulates `yᵢ = Fᵢ u + Kᵢ e` with independent white `u` and `e`.
/// Returns `(y1, y2, u)`, all trimmed by `burn_in`.
pub fn sim_with_input(
    sys: &InputSystem,
    n: usize,
    u_spec: NoiseSpec,
    e_spec: NoiseSpec,
    burn_in: usize,
) -> Result<(TimeSeries, TimeSeries, TimeSeries)> {
    sys.validate()?;
    if u_spec.seed == e_spec.seed {
        return Err(Error::Config(
            "u and e share a seed; the input must be independent of the noise".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let u = gen_noise(burn_in + n, u_spec)?.relabel("u");
    let e = gen_noise(burn_in + n, e_spec)?;
    let channel = |f: &RatTF, k: &RatTF| -> Result<Vec<f64>> {
        let a = filter(f, &u)?;
        let b = filter(k, &e)?;
        Ok(a.samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| x + y)
            .collect())
    };
    let y1 = TimeSeries::new("y1", channel(&sys.f1, &sys.k1)?).skip(burn_in);
    let y2 = TimeSeries::new("y2", channel(&sys.f2, &sys.k2)?).skip(burn_in);
    Ok((y1, y2, u.skip(burn_in)))
}

/// Writes `t,<label>,<label>...` with one row per sample.
pub fn write_csv<W: Write>(out: &mut W, series: &[&TimeSeries]) -> std::io::Result<()> {
    let n = series.first().map_or(0, |s| s.len());
    assert!(
        series.iter().all(|s| s.len() == n),
        "channels differ in length"
    );
    write!(out, "t")?;
    for s in series {
        write!(out, ",{}", s.label)?;
    }
    writeln!(out)?;
    for t in 0..n {
        write!(out, "{t}")?;
        for s in series {
            write!(out, ",{}", crate::fmt_f64(s.samples[t]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a file written by [`write_csv`]; the `t` column is ignored.
pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<TimeSeries>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let names: Vec<&str> = header.trim().split(',').collect();
    if names.first() != Some(&"t") || names.len() < 2 {
        return Err(Error::InvalidInput(format!("bad CSV header '{header}'")));
    }
    let mut cols = vec![Vec::new(); names.len() - 1];
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::InvalidInput(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != names.len() {
            return Err(Error::InvalidInput(format!(
                "row {} has {} fields",
                row + 1,
                fields.len()
            )));
        }
        for (col, f) in cols.iter_mut().zip(&fields[1..]) {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::InvalidInput(format!("row {}: bad number '{f}'", row + 1)))?;
            col.push(v);
        }
    }
    Ok(names[1..]
        .iter()
        .zip(cols)
        .map(|(name, samples)| TimeSeries::new(*name, samples))
        .collect())
}
