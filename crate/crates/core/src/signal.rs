//! Seeded complex signal sources.
//!
//! All synthetic processes are driven by doubly white Gaussian noise with
//! unit covariance `E[z z*] = 1` and pseudocovariance `E[z z] = λ`, built as
//! `z = sqrt((1+λ)/2) u + i sqrt((1-λ)/2) v` from two independent real
//! standard normal streams.
//!
//! | kind            | recursion                                                                     |
//! |-----------------|-------------------------------------------------------------------------------|
//! | `ar4`           | r(n) = 1.79r(n-1) - 1.85r(n-2) + 1.27r(n-3) - 0.41r(n-4) + z(n)               |
//! | `proper-ma`     | y(n) = 2z(n) + 0.5z*(n) + z(n-1) + 0.9z*(n-1), y(0) = 0                        |
//! | `improper-arma` | r(n) = 1.8r(n-1) - 1.85r(n-2) + 1.3r(n-3) - 0.5r(n-4) + 0.22r(n-5) + MA part, r(0) = 0 |
//! | `wl-arma-truth` | d(n) from fixed widely linear ARMA weights driven by noise input x(n)          |
//! | `wind-file`     | two-column text file, east + i north                                           |

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wl::{WeightVector, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Magnitude at which a recursive generator is declared divergent.
pub const GENERATION_LIMIT: f64 = 1e9;

pub const DEFAULT_BURN_IN: usize = 500;

const AR4_COEFFS: [f64; 4] = [1.79, -1.85, 1.27, -0.41];
const ARMA_COEFFS: [f64; 5] = [1.8, -1.85, 1.3, -0.5, 0.22];
/// Coefficients of z(n), z(n-1) and of z*(n), z*(n-1).
const MA_DIRECT: [f64; 2] = [2.0, 1.0];
const MA_CONJ: [f64; 2] = [0.5, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    Ar4,
    ProperMa,
    ImproperArma,
    WlArmaTruth,
    WindFile,
}

impl SignalKind {
    pub const ALL: [SignalKind; 5] = [
        SignalKind::Ar4,
        SignalKind::ProperMa,
        SignalKind::ImproperArma,
        SignalKind::WlArmaTruth,
        SignalKind::WindFile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SignalKind::Ar4 => "ar4",
            SignalKind::ProperMa => "proper-ma",
            SignalKind::ImproperArma => "improper-arma",
            SignalKind::WlArmaTruth => "wl-arma-truth",
            SignalKind::WindFile => "wind-file",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Noncircularity degree used when none is configured.
    pub fn default_lambda(self) -> f64 {
        match self {
            SignalKind::ImproperArma => 0.95,
            _ => 0.0,
        }
    }
}

/// Declarative description of a signal source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub kind: SignalKind,
    /// Noncircularity degree of the driving noise; `None` means the kind's default.
    pub lambda: Option<f64>,
    /// Samples returned per realization.
    pub length: usize,
    pub seed: u64,
    pub burn_in: usize,
    /// Ground-truth weights, `wl-arma-truth` only.
    pub truth_weights: Option<WeightVector>,
    /// Measurement noise variance added to the desired signal, `wl-arma-truth` only.
    pub sigma2: f64,
    /// Data file, `wind-file` only.
    pub path: Option<PathBuf>,
    /// Skip a non-numeric first row of the wind file.
    pub header: bool,
    /// Remove the sample mean of the wind series.
    pub remove_mean: bool,
}

impl SignalSpec {
    pub fn new(kind: SignalKind, length: usize, seed: u64) -> Self {
        Self {
            kind,
            lambda: None,
            length,
            seed,
            burn_in: DEFAULT_BURN_IN,
            truth_weights: None,
            sigma2: 0.0,
            path: None,
            header: true,
            remove_mean: true,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or_else(|| self.kind.default_lambda())
    }

    pub fn validate(&self) -> Result<()> {
        let lambda = self.lambda();
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        if self.length == 0 {
            return Err(Error::invalid("signal length must be at least 1"));
        }
        if !self.sigma2.is_finite() || self.sigma2 < 0.0 {
            return Err(Error::invalid(format!("sigma2 must be finite and non-negative, got {}", self.sigma2)));
        }
        match self.kind {
            SignalKind::WlArmaTruth if self.truth_weights.is_none() => {
                Err(Error::invalid("wl-arma-truth signal needs truth weights"))
            }
            SignalKind::WindFile if self.path.is_none() => Err(Error::invalid("wind-file signal needs a path")),
            _ => Ok(()),
        }
    }
}

/// Unit-covariance noise with pseudocovariance `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSource {
    pub lambda: f64,
    pub seed: u64,
}

pub fn draw_noise(src: NoiseSource, count: usize) -> Vec<C64> {
    let re = ((1.0 + src.lambda) / 2.0).sqrt();
    let im = ((1.0 - src.lambda) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(src.seed);
    (0..count)
        .map(|_| {
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            C64::new(re * u, im * v)
        })
        .collect()
}

/// Real AR part driven by a widely linear MA part of the noise.
struct WlArma<'a> {
    name: &'static str,
    ar: &'a [f64],
    ma: &'a [f64],
    ma_conj: &'a [f64],
    /// Force the first output sample to zero.
    zero_origin: bool,
}

impl WlArma<'_> {
    fn run(&self, noise: &[C64]) -> Result<Vec<C64>> {
        let mut out: Vec<C64> = Vec::with_capacity(noise.len());
        for n in 0..noise.len() {
            if n == 0 && self.zero_origin {
                out.push(ZERO);
                continue;
            }
            let mut r = ZERO;
            for (l, c) in self.ar.iter().enumerate() {
                if let Some(prev) = n.checked_sub(l + 1) {
                    r += out[prev] * *c;
                }
            }
            for (l, (c, cc)) in self.ma.iter().zip(self.ma_conj).enumerate() {
                if let Some(k) = n.checked_sub(l) {
                    r += noise[k] * *c + noise[k].conj() * *cc;
                }
            }
            if r.norm().is_nan() || r.norm() > GENERATION_LIMIT {
                return Err(Error::Generation(format!(
                    "{} recursion reached |r| = {:e} at sample {n}",
                    self.name,
                    r.norm()
                )));
            }
            out.push(r);
        }
        Ok(out)
    }
}

/// Runs the AR(4) recursion on explicit driving noise, zero prehistory.
pub fn ar4_from_noise(noise: &[C64]) -> Result<Vec<C64>> {
    WlArma {
        name: "AR(4)",
        ar: &AR4_COEFFS,
        ma: &[1.0],
        ma_conj: &[0.0],
        zero_origin: false,
    }
    .run(noise)
}

/// Runs the widely linear MA recursion on explicit driving noise; sample 0 is zero.
pub fn ma_from_noise(noise: &[C64]) -> Vec<C64> {
    WlArma {
        name: "MA",
        ar: &[],
        ma: &MA_DIRECT,
        ma_conj: &MA_CONJ,
        zero_origin: true,
    }
    .run(noise)
    // Without feedback the output is bounded by 4.4 max|z|.
    .unwrap_or_else(|_| noise.iter().map(|_| ZERO).collect())
}

/// Runs the improper ARMA recursion on explicit driving noise; sample 0 is zero.
pub fn arma_from_noise(noise: &[C64]) -> Result<Vec<C64>> {
    WlArma {
        name: "ARMA",
        ar: &ARMA_COEFFS,
        ma: &MA_DIRECT,
        ma_conj: &MA_CONJ,
        zero_origin: true,
    }
    .run(noise)
}

fn driving_noise(spec: &SignalSpec) -> Vec<C64> {
    draw_noise(
        NoiseSource {
            lambda: spec.lambda(),
            seed: spec.seed,
        },
        spec.burn_in + spec.length,
    )
}

fn expect_kind(spec: &SignalSpec, kind: SignalKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::invalid(format!(
            "expected a {} signal spec, got {}",
            kind.name(),
            spec.kind.name()
        )));
    }
    spec.validate()
}

fn drop_burn_in(mut v: Vec<C64>, burn_in: usize) -> Vec<C64> {
    v.drain(..burn_in.min(v.len()));
    v
}

pub fn gen_ar4(spec: &SignalSpec) -> Result<Vec<C64>> {
    expect_kind(spec, SignalKind::Ar4)?;
    Ok(drop_burn_in(ar4_from_noise(&driving_noise(spec))?, spec.burn_in))
}

pub fn gen_ma(spec: &SignalSpec) -> Result<Vec<C64>> {
    expect_kind(spec, SignalKind::ProperMa)?;
    Ok(drop_burn_in(ma_from_noise(&driving_noise(spec)), spec.burn_in))
}

pub fn gen_arma(spec: &SignalSpec) -> Result<Vec<C64>> {
    expect_kind(spec, SignalKind::ImproperArma)?;
    Ok(drop_burn_in(arma_from_noise(&driving_noise(spec))?, spec.burn_in))
}

/// Desired response of the widely linear ARMA model with fixed weights
/// driven by `input`, from zero prehistory:
/// `d(n) = Σ a_l d(n-l) + Σ b_l x(n-l) + Σ g_l d*(n-l) + Σ h_l x*(n-l)`.
pub fn gen_wl_truth(truth: &WeightVector, input: &[C64]) -> Result<Vec<C64>> {
    let mut d: Vec<C64> = Vec::with_capacity(input.len());
    for n in 0..input.len() {
        let mut v = ZERO;
        for (l, (a, g)) in truth.a().iter().zip(truth.g()).enumerate() {
            if let Some(k) = n.checked_sub(l + 1) {
                v += a * d[k] + g * d[k].conj();
            }
        }
        for (l, (b, h)) in truth.b().iter().zip(truth.h()).enumerate() {
            if let Some(k) = n.checked_sub(l) {
                v += b * input[k] + h * input[k].conj();
            }
        }
        if v.norm().is_nan() || v.norm() > GENERATION_LIMIT {
            return Err(Error::Generation(format!(
                "widely linear ARMA model reached |d| = {:e} at sample {n}",
                v.norm()
            )));
        }
        d.push(v);
    }
    Ok(d)
}

/// `u(n) = d(n) + v(n)` with `v` unit-covariance noise scaled to variance `sigma2`.
pub fn add_measurement_noise(d: &[C64], sigma2: f64, lambda: f64, seed: u64) -> Result<Vec<C64>> {
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::invalid(format!("measurement noise variance must be non-negative, got {sigma2}")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if sigma2 == 0.0 {
        return Ok(d.to_vec());
    }
    let scale = sigma2.sqrt();
    let v = draw_noise(NoiseSource { lambda, seed }, d.len());
    Ok(d.iter().zip(v).map(|(d, v)| d + v * scale).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindOptions {
    pub header: bool,
    pub remove_mean: bool,
}

/// Loads a two-column `east,north` text file as `east + i north`.
///
/// Blank lines are ignored. Every other row must hold exactly two
/// comma-separated decimal numbers. With `header` set, a first row that
/// does not parse is skipped.
pub fn load_wind(path: &Path, opts: WindOptions) -> Result<Vec<C64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_owned(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    let mut first_row = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = parse_row(line);
        let is_first = std::mem::replace(&mut first_row, false);
        match parsed {
            Ok(z) => out.push(z),
            Err(_) if is_first && opts.header => continue,
            Err(message) => {
                return Err(Error::Load {
                    path: path.to_owned(),
                    line: idx + 1,
                    message,
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Load {
            path: path.to_owned(),
            line: 0,
            message: "no data rows".into(),
        });
    }
    if opts.remove_mean {
        let mean = out.iter().sum::<C64>() / out.len() as f64;
        out.iter_mut().for_each(|z| *z -= mean);
    }
    Ok(out)
}

fn parse_row(line: &str) -> Result<C64, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 2 {
        return Err(format!("expected 2 fields, found {}", fields.len()));
    }
    let parse = |s: &str| -> Result<f64, String> {
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("field {s:?} is not a finite decimal number")),
        }
    };
    Ok(C64::new(parse(fields[0])?, parse(fields[1])?))
}

/// A signal spec resolved into something that can produce realizations.
/// Wind files are read once here.
#[derive(Debug, Clone)]
pub struct SignalSource {
    spec: SignalSpec,
    wind: Option<Vec<C64>>,
}

impl SignalSource {
    pub fn prepare(spec: &SignalSpec) -> Result<Self> {
        spec.validate()?;
        let wind = match (spec.kind, &spec.path) {
            (SignalKind::WindFile, Some(path)) => {
                let series = load_wind(
                    path,
                    WindOptions {
                        header: spec.header,
                        remove_mean: spec.remove_mean,
                    },
                )?;
                if series.len() < spec.length {
                    return Err(Error::invalid(format!(
                        "wind file {} holds {} samples, fewer than the requested length {}",
                        path.display(),
                        series.len(),
                        spec.length
                    )));
                }
                Some(series)
            }
            _ => None,
        };
        Ok(Self { spec: spec.clone(), wind })
    }

    pub fn spec(&self) -> &SignalSpec {
        &self.spec
    }

    /// One realization of `spec.length` samples for `seed`. For
    /// `wl-arma-truth` this is the noiseless desired signal; for wind
    /// files it is a window starting at a seed-dependent offset.
    pub fn signal(&self, seed: u64) -> Result<Vec<C64>> {
        let spec = SignalSpec {
            seed,
            ..self.spec.clone()
        };
        match spec.kind {
            SignalKind::Ar4 => gen_ar4(&spec),
            SignalKind::ProperMa => gen_ma(&spec),
            SignalKind::ImproperArma => gen_arma(&spec),
            SignalKind::WlArmaTruth => Ok(self.truth_pair(seed)?.2),
            SignalKind::WindFile => {
                let series = self.wind.as_deref().unwrap_or_default();
                let span = series.len() - spec.length + 1;
                let offset = ChaCha8Rng::seed_from_u64(seed).random_range(0..span);
                Ok(series[offset..offset + spec.length].to_vec())
            }
        }
    }

    /// `(x, u, d)` for the system-identification setting: noise input `x`,
    /// measured desired `u = d + v`, and the noiseless model output `d`.
    pub fn truth_pair(&self, seed: u64) -> Result<(Vec<C64>, Vec<C64>, Vec<C64>)> {
        let truth = self
            .spec
            .truth_weights
            .as_ref()
            .ok_or_else(|| Error::invalid("wl-arma-truth signal needs truth weights"))?;
        let lambda = self.spec.lambda();
        let burn = self.spec.burn_in;
        let x = draw_noise(NoiseSource { lambda, seed }, burn + self.spec.length);
        let d = drop_burn_in(gen_wl_truth(truth, &x)?, burn);
        let x = drop_burn_in(x, burn);
        let u = add_measurement_noise(&d, self.spec.sigma2, 0.0, seed ^ 0x6d65_6173_7572_6564)?;
        Ok((x, u, d))
    }
}
