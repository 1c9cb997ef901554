//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # exponential flights, isotropic scattering
//! n = 3
//! c = 0.5
//! kernel = isotropic
//! path_length = exponential
//! eps = 0.1, 0.01, 0.001
//! ```
//!
//! Unknown keys are errors. Table files are resolved against the directory
//! of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::coeffs::{CoefficientOptions, Regime, RegimeKind};
use crate::error::{NctkError, Result};
use crate::model::Model;
use crate::pathlen::{read_two_columns, PathLengthDistribution, PathLengthSpec};
use crate::scatter::{KernelSpec, ScatterKernel};
use crate::spectral::SourceSpec;

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("n", "dimension, 2 or 3"),
    ("c", "scattering ratio in (0, 1)"),
    ("kernel", "isotropic | linear | table"),
    ("anisotropy", "a in sigma = 1 + a mu, for kernel = linear"),
    ("kernel_table", "two-column (mu, sigma) file, for kernel = table"),
    ("path_length", "exponential | power_law | lorentz | table"),
    ("rate", "exponential rate (default 1)"),
    ("alpha", "tail exponent; required for power_law"),
    ("d0", "tail coefficient for power_law (default 1)"),
    ("path_table", "two-column (s, p) file, for path_length = table"),
    ("regime", "a | b | c; inferred from the path length when absent"),
    ("source", "gaussian | table"),
    ("source_width", "Gaussian width (default 1)"),
    ("source_amplitude", "Gaussian mass (default 1)"),
    ("source_table", "two-column (|xi|, q^) file, for source = table"),
    ("eps", "strictly decreasing list"),
    ("quad_order", "angular quadrature order (default 8)"),
    ("xi_max", "largest |xi| of the frequency grid (default 16 / source width)"),
    ("xi_count", "odd points per axis of the frequency grid (default 65)"),
    ("lambda_xi", "|xi| values of the Lambda sweep (default 10 values in [0.1, 10])"),
    ("seed", "Monte Carlo seed (default 1)"),
    ("particles", "Monte Carlo particles (default 100000)"),
    ("mc_eps", "eps of the Monte Carlo comparison (default 0.01)"),
    ("hist_extent", "histogram half-width (default 10)"),
    ("hist_bins", "histogram bins (default 80)"),
    ("d3_includes_d0", "borderline coefficient carries d0 (default true)"),
    ("output", "output directory (default out)"),
];

/// Parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub n: usize,
    pub c: f64,
    pub kernel: KernelSpec,
    pub path_length: PathLengthSpec,
    pub regime: Regime,
    pub source: SourceSpec,
    pub eps: Vec<f64>,
    pub quad_order: usize,
    pub xi_max: f64,
    pub xi_count: usize,
    pub lambda_xi: Vec<f64>,
    pub seed: u64,
    pub particles: u64,
    pub mc_eps: f64,
    pub hist_extent: f64,
    pub hist_bins: usize,
    pub d3_includes_d0: bool,
    pub output: PathBuf,
    entries: BTreeMap<String, String>,
}

impl ModelConfig {
    /// Builds the model; repeats the validation done while parsing.
    pub fn model(&self) -> Result<Model> {
        let path = PathLengthDistribution::new(self.path_length.clone())?;
        let kernel = ScatterKernel::new(self.kernel.clone(), self.n)?;
        let mut m = Model::new(self.n, self.c, kernel, path, self.regime, self.source.clone())?
            .with_quad_order(self.quad_order)?;
        m.coeff_opts = CoefficientOptions {
            d3_includes_d0: self.d3_includes_d0,
        };
        Ok(m)
    }

    /// `key = value` lines in key order, as parsed (after overrides).
    pub fn echo(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// First 16 hex digits of the SHA-256 of [`ModelConfig::echo`] without
    /// the output directory, which does not affect results.
    pub fn hash(&self) -> String {
        let text: String = self
            .entries
            .iter()
            .filter(|(k, _)| k.as_str() != "output")
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.entries.insert("seed".into(), seed.to_string());
    }

    pub fn set_output(&mut self, dir: PathBuf) {
        self.entries
            .insert("output".into(), dir.display().to_string());
        self.output = dir;
    }
}

/// Parses config text; table paths resolve against the working directory.
pub fn parse_config(text: &str) -> Result<ModelConfig> {
    parse_config_in(text, None)
}

pub fn parse_config_file(path: &Path) -> Result<ModelConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| NctkError::config("<file>", format!("cannot read {}: {e}", path.display())))?;
    parse_config_in(&text, path.parent())
}

pub fn parse_config_in(text: &str, base: Option<&Path>) -> Result<ModelConfig> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            NctkError::config(format!("line {}", lineno + 1), "expected `key = value`")
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(NctkError::config(k, "unknown key"));
        }
        if v.is_empty() {
            return Err(NctkError::config(k, "empty value"));
        }
        if entries.insert(k.to_string(), v.to_string()).is_some() {
            return Err(NctkError::config(k, "given more than once"));
        }
    }
    let r = Reader {
        entries: &entries,
        base,
    };

    let n: usize = r.required("n")?;
    if n != 2 && n != 3 {
        return Err(NctkError::config("n", format!("dimension {n} unsupported; use 2 or 3")));
    }
    let c: f64 = r.required("c")?;
    if !(c > 0.0 && c < 1.0) {
        return Err(NctkError::config(
            "c",
            format!("c = {c} must satisfy 0 < c < 1; c < 1 keeps a small amount of absorption"),
        ));
    }

    let kernel = match r.word("kernel")?.as_str() {
        "isotropic" => KernelSpec::Isotropic,
        "linear" => KernelSpec::LinearAnisotropic {
            a: r.required("anisotropy")?,
        },
        "table" => {
            let (mu, values) = r.table("kernel_table")?;
            KernelSpec::Tabulated { mu, values }
        }
        other => return Err(NctkError::config("kernel", format!("unknown kernel `{other}`"))),
    };
    ScatterKernel::new(kernel.clone(), n).map_err(|e| NctkError::config("kernel", e.to_string()))?;

    let alpha: Option<f64> = r.optional("alpha")?;
    let path_length = match r.word("path_length")?.as_str() {
        "exponential" => {
            if alpha.is_some() {
                return Err(NctkError::config("alpha", "exponential flights have no tail exponent"));
            }
            PathLengthSpec::Exponential {
                rate: r.optional("rate")?.unwrap_or(1.0),
            }
        }
        "power_law" => PathLengthSpec::PowerLawTail {
            alpha: alpha.ok_or_else(|| NctkError::config("alpha", "required for power_law"))?,
            d0: r.optional("d0")?.unwrap_or(1.0),
        },
        "lorentz" => {
            if alpha.is_some_and(|a| a != 2.0) {
                return Err(NctkError::config("alpha", "the Lorentz gas law has alpha = 2"));
            }
            if n != 2 {
                return Err(NctkError::config("n", "the Lorentz gas law is two-dimensional"));
            }
            PathLengthSpec::LorentzGas2D
        }
        "table" => {
            let (s, p) = r.table("path_table")?;
            PathLengthSpec::Tabulated { s, p }
        }
        other => {
            return Err(NctkError::config("path_length", format!("unknown family `{other}`")))
        }
    };
    for key in ["rate", "d0"] {
        let used = matches!(
            (&path_length, key),
            (PathLengthSpec::Exponential { .. }, "rate") | (PathLengthSpec::PowerLawTail { .. }, "d0")
        );
        if !used && entries.contains_key(key) {
            return Err(NctkError::config(key, "not used by this path_length"));
        }
    }
    let dist = PathLengthDistribution::new(path_length.clone())
        .map_err(|e| NctkError::config("path_length", e.to_string()))?;
    let regime = match entries.get("regime") {
        None => Regime::for_distribution(&dist),
        Some(tag) => {
            let kind = RegimeKind::from_tag(tag)
                .ok_or_else(|| NctkError::config("regime", format!("`{tag}` is not a, b or c")))?;
            let reg = Regime::new(kind, dist.tail_exponent()).map_err(|e| {
                NctkError::config("regime", format!("inconsistent with the path length: {e}"))
            })?;
            reg.check_distribution(&dist)
                .map_err(|e| NctkError::config("regime", e.to_string()))?;
            reg
        }
    };

    let source = match entries.get("source").map(String::as_str).unwrap_or("gaussian") {
        "gaussian" => SourceSpec::IsotropicGaussian {
            width: r.optional("source_width")?.unwrap_or(1.0),
            amplitude: r.optional("source_amplitude")?.unwrap_or(1.0),
        },
        "table" => {
            let (xi, q_hat) = r.table("source_table")?;
            SourceSpec::Tabulated { xi, q_hat }
        }
        other => return Err(NctkError::config("source", format!("unknown source `{other}`"))),
    };
    source
        .validate()
        .map_err(|e| NctkError::config("source", e.to_string()))?;

    let eps = r.list("eps")?;
    if eps.is_empty() {
        return Err(NctkError::config("eps", "needs at least one value"));
    }
    if eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(NctkError::config("eps", "values must lie in (0, 1)"));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(NctkError::config("eps", "values must be strictly decreasing"));
    }

    let quad_order = r.optional("quad_order")?.unwrap_or(8);
    crate::sphere::make_quadrature(n, quad_order)
        .map_err(|e| NctkError::config("quad_order", e.to_string()))?;
    let xi_max = r.optional("xi_max")?.unwrap_or(16.0 / source.width());
    if !(xi_max > 0.0 && f64::is_finite(xi_max)) {
        return Err(NctkError::config("xi_max", "must be positive"));
    }
    let xi_count: usize = r.optional("xi_count")?.unwrap_or(65);
    if xi_count < 3 || xi_count.is_multiple_of(2) {
        return Err(NctkError::config("xi_count", "must be odd and at least 3"));
    }
    let lambda_xi = match entries.get("lambda_xi") {
        Some(_) => r.list("lambda_xi")?,
        None => (0..10).map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / 9.0)).collect(),
    };
    if lambda_xi.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(NctkError::config("lambda_xi", "values must be finite and nonnegative"));
    }
    let seed = r.optional("seed")?.unwrap_or(1);
    let particles = r.optional("particles")?.unwrap_or(100_000);
    if particles == 0 {
        return Err(NctkError::config("particles", "must be at least 1"));
    }
    let mc_eps = r.optional("mc_eps")?.unwrap_or(0.01);
    if !(mc_eps > 0.0 && mc_eps < 1.0) {
        return Err(NctkError::config("mc_eps", "must lie in (0, 1)"));
    }
    let hist_extent = r.optional("hist_extent")?.unwrap_or(10.0);
    if !(hist_extent > 0.0 && f64::is_finite(hist_extent)) {
        return Err(NctkError::config("hist_extent", "must be positive"));
    }
    let hist_bins = r.optional("hist_bins")?.unwrap_or(80);
    if hist_bins == 0 {
        return Err(NctkError::config("hist_bins", "must be at least 1"));
    }
    let d3_includes_d0 = r.optional("d3_includes_d0")?.unwrap_or(true);
    let output = PathBuf::from(entries.get("output").map(String::as_str).unwrap_or("out"));

    let cfg = ModelConfig {
        n,
        c,
        kernel,
        path_length,
        regime,
        source,
        eps,
        quad_order,
        xi_max,
        xi_count,
        lambda_xi,
        seed,
        particles,
        mc_eps,
        hist_extent,
        hist_bins,
        d3_includes_d0,
        output,
        entries,
    };
    cfg.model().map_err(|e| NctkError::config("<model>", e.to_string()))?;
    Ok(cfg)
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, String>,
    base: Option<&'a Path>,
}

impl Reader<'_> {
    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                NctkError::config(
                    key,
                    format!("cannot parse `{v}` as {}", std::any::type_name::<T>()),
                )
            }),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.optional(key)?
            .ok_or_else(|| NctkError::config(key, "missing required key"))
    }

    fn word(&self, key: &str) -> Result<String> {
        self.required::<String>(key).map(|s| s.to_ascii_lowercase())
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self
            .entries
            .get(key)
            .ok_or_else(|| NctkError::config(key, "missing required key"))?;
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| NctkError::config(key, format!("cannot parse `{}` as a number", s.trim())))
            })
            .collect()
    }

    fn table(&self, key: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let name: String = self.required(key)?;
        let path = match self.base {
            Some(dir) => dir.join(&name),
            None => PathBuf::from(&name),
        };
        read_two_columns(&path).map_err(|e| NctkError::config(key, e.to_string()))
    }
}
