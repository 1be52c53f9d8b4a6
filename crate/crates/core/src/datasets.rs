//! Windowed next-step regression tasks and sequence preprocessing.
//!
//! A window is a contiguous run of `len` observations starting at `start`;
//! its target is the observation at `start + len`.

use std::io::Read;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::sequence::{dot, Sequence};

/// Number of samples in the simulated sinusoid period.
pub const SINUSOID_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub t_fixed: usize,
    pub t_var: usize,
    pub noise_sigma: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// CSV tasks only: standardise with the mean and std of the train region.
    pub standardize: bool,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            t_fixed: 10,
            t_var: 10,
            noise_sigma: 0.05,
            n_train: 20,
            n_test: 5000,
            seed: 0,
            standardize: true,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_fixed < 1 || self.n_train < 1 || self.n_test < 1 {
            return Err(Error::InvalidParam(format!(
                "need t_fixed, n_train and n_test >= 1 (got {}, {}, {})",
                self.t_fixed, self.n_train, self.n_test
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParam(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        Ok(())
    }

    fn max_len(&self) -> usize {
        self.t_fixed + self.t_var
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

impl Window {
    pub fn target_index(&self) -> usize {
        self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Sequence,
    /// The observed next value.
    pub target: f64,
    /// The noiseless next value when known, otherwise the observation.
    pub truth: f64,
    pub window: Window,
}

impl Sample {
    /// Previous-time-step prediction: the last observed value of the first channel.
    pub fn previous_step(&self) -> f64 {
        self.input.step(self.input.len() - 1)[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedRegressionTask {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub config: TaskConfig,
    pub source: String,
    pub series_len: usize,
    /// First index of the test region for CSV tasks.
    pub split_index: Option<usize>,
    pub standardization: Option<Vec<Standardization>>,
}

/// Replayable description of a task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskManifest {
    pub source: String,
    pub config: TaskConfig,
    pub series_len: usize,
    pub split_index: Option<usize>,
    pub standardization: Option<Vec<Standardization>>,
    pub train: Vec<Window>,
    pub test: Vec<Window>,
}

impl WindowedRegressionTask {
    pub fn train_inputs(&self) -> Vec<Sequence> {
        self.train.iter().map(|s| s.input.clone()).collect()
    }

    pub fn test_inputs(&self) -> Vec<Sequence> {
        self.test.iter().map(|s| s.input.clone()).collect()
    }

    pub fn train_targets(&self) -> Vec<f64> {
        self.train.iter().map(|s| s.target).collect()
    }

    pub fn test_truth(&self) -> Vec<f64> {
        self.test.iter().map(|s| s.truth).collect()
    }

    pub fn manifest(&self) -> TaskManifest {
        TaskManifest {
            source: self.source.clone(),
            config: self.config.clone(),
            series_len: self.series_len,
            split_index: self.split_index,
            standardization: self.standardization.clone(),
            train: self.train.iter().map(|s| s.window).collect(),
            test: self.test.iter().map(|s| s.window).collect(),
        }
    }
}

/// Rows of a multichannel series, row-major `[time][channel]`.
struct Series {
    data: Vec<f64>,
    dim: usize,
}

impl Series {
    fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    fn window(&self, w: Window, id: String) -> Result<Sequence> {
        let slice = &self.data[w.start * self.dim..(w.start + w.len) * self.dim];
        Ok(Sequence::from_flat(slice.to_vec(), self.dim)?.with_id(id))
    }

    fn value(&self, t: usize) -> f64 {
        self.data[t * self.dim]
    }
}

/// Draws `count` windows whose target index lies in `[lo, hi]`.
fn draw_windows(cfg: &TaskConfig, count: usize, lo: usize, hi: usize, stream: &mut rng::Rng) -> Result<Vec<Window>> {
    // a window of length len needs start = target − len ≥ 0
    let lo = lo.max(cfg.t_fixed);
    if lo > hi {
        return Err(Error::InvalidParam(format!(
            "no room for a window of length {} with a target in the requested range",
            cfg.t_fixed
        )));
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = stream.random_range(cfg.t_fixed..=cfg.max_len());
        let target = stream.random_range(lo..=hi);
        // too long for this target: redraw
        if target >= len {
            out.push(Window { start: target - len, len });
        }
    }
    Ok(out)
}

fn samples(series: &Series, clean: Option<&[f64]>, windows: &[Window], prefix: &str) -> Result<Vec<Sample>> {
    windows
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let t = w.target_index();
            let target = series.value(t);
            Ok(Sample {
                input: series.window(w, format!("{prefix}{}", i + 1))?,
                target,
                truth: clean.map_or(target, |c| c[t]),
                window: w,
            })
        })
        .collect()
}

/// One noisy sinusoid period of 1000 samples, windows anywhere in it.
pub fn make_sinusoid_task(config: &TaskConfig) -> Result<WindowedRegressionTask> {
    config.validate()?;
    if config.max_len() >= SINUSOID_SAMPLES {
        return Err(Error::InvalidParam(format!(
            "windows up to {} steps do not fit a {SINUSOID_SAMPLES}-sample series",
            config.max_len()
        )));
    }
    let clean: Vec<f64> = (0..SINUSOID_SAMPLES)
        .map(|i| (2.0 * std::f64::consts::PI * i as f64 / SINUSOID_SAMPLES as f64).sin())
        .collect();
    let mut noise = rng::substream(config.seed, streams::NOISE, &[]);
    let noisy: Vec<f64> = rng::normal_vec(&mut noise, SINUSOID_SAMPLES)
        .iter()
        .zip(&clean)
        .map(|(z, s)| s + config.noise_sigma * z)
        .collect();
    let series = Series { data: noisy, dim: 1 };
    let last = SINUSOID_SAMPLES - 1;
    let train_w = draw_windows(
        config,
        config.n_train,
        0,
        last,
        &mut rng::substream(config.seed, streams::WINDOWS, &[0]),
    )?;
    let test_w = draw_windows(
        config,
        config.n_test,
        0,
        last,
        &mut rng::substream(config.seed, streams::WINDOWS, &[1]),
    )?;
    Ok(WindowedRegressionTask {
        train: samples(&series, Some(&clean), &train_w, "train-")?,
        test: samples(&series, Some(&clean), &test_w, "test-")?,
        config: config.clone(),
        source: "sinusoid".into(),
        series_len: SINUSOID_SAMPLES,
        split_index: None,
        standardization: None,
    })
}

/// Reads a numeric CSV, one row per time step and one column per channel.
/// A non-numeric first row is taken as a header.
pub fn read_series_csv<R: Read>(reader: R) -> Result<(Vec<f64>, usize)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut dim = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if line == 1 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    msg: format!("{e}: {:?}", rec.iter().collect::<Vec<_>>()),
                })
            }
        };
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite value {v}"),
            });
        }
        if dim == 0 {
            dim = row.len();
        } else if row.len() != dim {
            return Err(Error::Parse {
                line,
                msg: format!("expected {dim} columns, found {}", row.len()),
            });
        }
        data.extend(row);
    }
    if data.is_empty() {
        return Err(Error::Empty("CSV contains no numeric rows".into()));
    }
    Ok((data, dim))
}

/// Windowed task over a CSV series: train windows (and their targets) lie in
/// `[0, split_index)`, test targets in `[split_index, len)`. Test inputs may
/// reach back into the train region.
pub fn make_csv_task(path: &Path, split_index: usize, config: &TaskConfig) -> Result<WindowedRegressionTask> {
    let (data, dim) = read_series_csv(std::fs::File::open(path)?)?;
    let mut task = csv_task_from_series(data, dim, split_index, config)?;
    task.source = path.display().to_string();
    Ok(task)
}

pub fn csv_task_from_series(mut data: Vec<f64>, dim: usize, split_index: usize, config: &TaskConfig) -> Result<WindowedRegressionTask> {
    config.validate()?;
    let len = data.len() / dim;
    if split_index == 0 || split_index >= len {
        return Err(Error::InvalidParam(format!(
            "split index must be in [1, {}), got {split_index}",
            len
        )));
    }
    let standardization = if config.standardize {
        let stats: Vec<Standardization> = (0..dim)
            .map(|c| {
                let col: Vec<f64> = (0..split_index).map(|t| data[t * dim + c]).collect();
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
                Standardization { mean, std: var.sqrt() }
            })
            .collect();
        // a constant train region carries no scale; leave the data as is
        if stats.iter().all(|s| s.std > 0.0) {
            for (i, v) in data.iter_mut().enumerate() {
                let s = stats[i % dim];
                *v = (*v - s.mean) / s.std;
            }
            Some(stats)
        } else {
            None
        }
    } else {
        None
    };
    let series = Series { data, dim };
    let train_w = draw_windows(
        config,
        config.n_train,
        0,
        split_index - 1,
        &mut rng::substream(config.seed, streams::WINDOWS, &[0]),
    )?;
    let test_w = draw_windows(
        config,
        config.n_test,
        split_index,
        series.len() - 1,
        &mut rng::substream(config.seed, streams::WINDOWS, &[1]),
    )?;
    Ok(WindowedRegressionTask {
        train: samples(&series, None, &train_w, "train-")?,
        test: samples(&series, None, &test_w, "test-")?,
        config: config.clone(),
        source: "csv".into(),
        series_len: len,
        split_index: Some(split_index),
        standardization,
    })
}

/// Scales each flattened sequence to unit Euclidean norm.
pub fn normalize_sequences(data: &[Sequence]) -> Result<Vec<Sequence>> {
    data.iter()
        .enumerate()
        .map(|(i, s)| {
            let norm = dot(s.as_flat(), s.as_flat()).sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidParam(format!("sequence {} is all zeros", i + 1)));
            }
            let mut out = Sequence::from_flat(s.as_flat().iter().map(|v| v / norm).collect(), s.dim())?;
            out.id.clone_from(&s.id);
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_sinusoid_task() {
        let t = make_sinusoid_task(&TaskConfig::default()).unwrap();
        assert_eq!(t.train.len(), 20);
        assert_eq!(t.test.len(), 5000);
        for s in t.train.iter().chain(&t.test) {
            assert!((10..=20).contains(&s.input.len()));
            assert!(s.window.target_index() < SINUSOID_SAMPLES);
        }
        assert_eq!(t, make_sinusoid_task(&TaskConfig::default()).unwrap());
    }

    #[test]
    fn noiseless_fixed_length_windows() {
        let cfg = TaskConfig {
            noise_sigma: 0.0,
            t_var: 0,
            n_test: 50,
            ..TaskConfig::default()
        };
        let t = make_sinusoid_task(&cfg).unwrap();
        let grid = |i: usize| (2.0 * std::f64::consts::PI * i as f64 / SINUSOID_SAMPLES as f64).sin();
        for s in &t.test {
            assert_eq!(s.input.len(), 10);
            assert_eq!(s.target, s.truth);
            let i = s.window.target_index();
            assert_eq!(s.target, grid(i));
            // previous-step error is exactly the grid increment
            assert_eq!(s.target - s.previous_step(), grid(i) - grid(i - 1));
        }
    }

    #[test]
    fn constant_csv_series() {
        let cfg = TaskConfig {
            n_test: 10,
            ..TaskConfig::default()
        };
        let t = csv_task_from_series(vec![2.5; 200], 1, 150, &cfg).unwrap();
        assert!(t.standardization.is_none());
        assert!(t.train.iter().chain(&t.test).all(|s| s.target == 2.5));
    }

    #[test]
    fn csv_split_boundaries() {
        let data: Vec<f64> = (0..100).map(|i| (i as f64 * 0.1).sin()).collect();
        let cfg = TaskConfig {
            n_train: 30,
            n_test: 30,
            t_var: 5,
            ..TaskConfig::default()
        };
        let t = csv_task_from_series(data.clone(), 1, 70, &cfg).unwrap();
        assert!(t.train.iter().all(|s| s.window.target_index() < 70));
        assert!(t.test.iter().all(|s| s.window.target_index() >= 70));
        let st = t.standardization.as_ref().unwrap()[0];
        assert_abs_diff_eq!(
            t.train[0].target,
            (data[t.train[0].window.target_index()] - st.mean) / st.std,
            epsilon = 1e-12
        );

        // split at the last index with a fixed window: only one possible test window
        let fixed = TaskConfig { t_var: 0, ..cfg };
        let t = csv_task_from_series(data, 1, 99, &fixed).unwrap();
        assert!(t.test.iter().all(|s| s.window == Window { start: 89, len: 10 }));
    }

    #[test]
    fn csv_reproducible_for_an_ar1_series() {
        let mut rng = rng::substream(11, "ar1", &[]);
        let z = rng::normal_vec(&mut rng, 300);
        let mut x = vec![0.0];
        for e in &z[1..] {
            x.push(0.8 * x.last().unwrap() + e);
        }
        let cfg = TaskConfig {
            n_test: 40,
            seed: 3,
            ..TaskConfig::default()
        };
        let a = csv_task_from_series(x.clone(), 1, 200, &cfg).unwrap();
        let b = csv_task_from_series(x, 1, 200, &cfg).unwrap();
        assert_eq!(a.manifest(), b.manifest());
        assert_eq!(a, b);
    }

    #[test]
    fn csv_parsing() {
        let (d, dim) = read_series_csv("value\n1.0\n2\n\n3.5\n".as_bytes()).unwrap();
        assert_eq!((d, dim), (vec![1.0, 2.0, 3.5], 1));
        let (d, dim) = read_series_csv("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!((d, dim), (vec![1.0, 2.0, 3.0, 4.0], 2));
        match read_series_csv("1\n2\nabc\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_series_csv("1,2\n3\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(read_series_csv("x\n".as_bytes()).is_err());
    }

    #[test]
    fn normalization() {
        let s = Sequence::scalar(&[3.0, 4.0]).unwrap();
        let n = normalize_sequences(std::slice::from_ref(&s)).unwrap();
        assert_abs_diff_eq!(n[0].as_flat()[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(n[0].as_flat()[1], 0.8, epsilon = 1e-15);
        let twice = normalize_sequences(&n).unwrap();
        for (a, b) in twice[0].as_flat().iter().zip(n[0].as_flat()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let big = Sequence::scalar(&[15.0, 20.0]).unwrap();
        assert_eq!(normalize_sequences(&[big]).unwrap(), n);
        assert!(normalize_sequences(&[Sequence::scalar(&[0.0]).unwrap()]).is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad = TaskConfig {
            t_fixed: 0,
            ..TaskConfig::default()
        };
        assert!(make_sinusoid_task(&bad).is_err());
        let long = TaskConfig {
            t_fixed: 995,
            ..TaskConfig::default()
        };
        assert!(make_sinusoid_task(&long).is_err());
        assert!(csv_task_from_series(vec![1.0; 10], 1, 10, &TaskConfig::default()).is_err());
    }
}
