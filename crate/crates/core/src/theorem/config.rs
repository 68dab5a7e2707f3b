use serde::{Deserialize, Serialize};

use super::TheoremError;

/// Verdict thresholds; a verdict passes when its statistic is on the safe
/// side at every tested window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// ADR passes when every ratio lies in `[1/adr_c, adr_c]`.
    pub adr_c: f64,
    /// Flatness level of the UR tail statistic.
    pub ur_eps: f64,
    /// Largest admissible UR tail (mean Carleson increment of the two finest
    /// generations).
    pub ur_tail: f64,
    pub corkscrew_min: f64,
    pub curve_length_max: f64,
    pub curve_cigar_min: f64,
    pub exterior_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            adr_c: 8.0,
            ur_eps: 0.2,
            ur_tail: 0.35,
            corkscrew_min: 0.05,
            curve_length_max: 20.0,
            curve_cigar_min: 0.01,
            exterior_min: 0.05,
        }
    }
}

/// Analysis parameters. Unset scale bounds default to `[20h, diam/4]` and
/// the grid range to every trusted generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub h: f64,
    pub seed: u64,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub k_min: Option<i32>,
    pub k_max: Option<i32>,
    pub windows: usize,
    pub pairs: usize,
    pub lambda_max: f64,
    pub eps_grid: Vec<f64>,
    pub c0_grid: Vec<f64>,
    /// Corkscrew lattice step relative to the window radius.
    pub corkscrew_step: f64,
    /// Harnack-chain lattice step relative to the endpoint depth.
    pub curve_step: f64,
    pub dilation: f64,
    pub kappa: f64,
    pub energy_windows: usize,
    pub thresholds: Thresholds,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            h: 0.005,
            seed: 0,
            r_min: None,
            r_max: None,
            k_min: None,
            k_max: None,
            windows: 50,
            pairs: 20,
            lambda_max: 64.0,
            eps_grid: vec![0.05, 0.1, 0.2],
            c0_grid: vec![0.01, 0.05],
            corkscrew_step: 0.05,
            curve_step: 1.0 / 32.0,
            dilation: 2.0,
            kappa: 3.0,
            energy_windows: 3,
            thresholds: Thresholds::default(),
        }
    }
}

/// Keys accepted by [`AnalysisConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "h",
    "seed",
    "r_min",
    "r_max",
    "k_min",
    "k_max",
    "windows",
    "pairs",
    "lambda_max",
    "eps_grid",
    "c0_grid",
    "corkscrew_step",
    "curve_step",
    "dilation",
    "kappa",
    "energy_windows",
    "adr_c",
    "ur_eps",
    "ur_tail",
    "corkscrew_min",
    "curve_length_max",
    "curve_cigar_min",
    "exterior_min",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, TheoremError> {
    v.trim().parse().map_err(|_| TheoremError::Config(format!("{key}: cannot parse {v:?}")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, TheoremError> {
    v.split(',').map(|x| num(key, x)).collect()
}

impl AnalysisConfig {
    /// Sets one flat `key = value` entry; lists are comma separated.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), TheoremError> {
        let t = &mut self.thresholds;
        match key {
            "h" => self.h = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "r_min" => self.r_min = Some(num(key, value)?),
            "r_max" => self.r_max = Some(num(key, value)?),
            "k_min" => self.k_min = Some(num(key, value)?),
            "k_max" => self.k_max = Some(num(key, value)?),
            "windows" => self.windows = num(key, value)?,
            "pairs" => self.pairs = num(key, value)?,
            "lambda_max" => self.lambda_max = num(key, value)?,
            "eps_grid" => self.eps_grid = list(key, value)?,
            "c0_grid" => self.c0_grid = list(key, value)?,
            "corkscrew_step" => self.corkscrew_step = num(key, value)?,
            "curve_step" => self.curve_step = num(key, value)?,
            "dilation" => self.dilation = num(key, value)?,
            "kappa" => self.kappa = num(key, value)?,
            "energy_windows" => self.energy_windows = num(key, value)?,
            "adr_c" => t.adr_c = num(key, value)?,
            "ur_eps" => t.ur_eps = num(key, value)?,
            "ur_tail" => t.ur_tail = num(key, value)?,
            "corkscrew_min" => t.corkscrew_min = num(key, value)?,
            "curve_length_max" => t.curve_length_max = num(key, value)?,
            "curve_cigar_min" => t.curve_cigar_min = num(key, value)?,
            "exterior_min" => t.exterior_min = num(key, value)?,
            _ => return Err(TheoremError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` lines; `#` starts a comment. Keys outside
    /// [`CONFIG_KEYS`] are returned untouched for the caller.
    pub fn apply_text(&mut self, text: &str) -> Result<Vec<(String, String)>, TheoremError> {
        let mut rest = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| TheoremError::Config(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if CONFIG_KEYS.contains(&k) {
                self.set(k, v)?;
            } else {
                rest.push((k.to_string(), v.to_string()));
            }
        }
        Ok(rest)
    }

    pub fn validate(&self) -> Result<(), TheoremError> {
        let bad = |m: String| Err(TheoremError::Config(m));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if let Some(r) = self.r_min {
            if r < 10.0 * self.h * (1.0 - 1e-12) {
                return bad(format!("r_min = {r} is below 10h = {}", 10.0 * self.h));
            }
        }
        if let (Some(a), Some(b)) = (self.r_min, self.r_max) {
            if a > b {
                return bad(format!("r_min = {a} exceeds r_max = {b}"));
            }
        }
        if self.eps_grid.is_empty() || self.eps_grid.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad("eps_grid must be a nonempty list in (0, 1)".into());
        }
        if self.c0_grid.is_empty() || self.c0_grid.iter().any(|c| !(*c > 0.0 && *c < 0.125)) {
            return bad("c0_grid must be a nonempty list in (0, 1/8)".into());
        }
        if self.windows == 0 || self.pairs == 0 {
            return bad("windows and pairs must be positive".into());
        }
        if !(self.lambda_max >= 1.0) {
            return bad(format!("lambda_max must be at least 1, got {}", self.lambda_max));
        }
        if !(self.corkscrew_step > 0.0 && self.corkscrew_step <= 0.05) {
            return bad(format!("corkscrew_step must be in (0, 1/20], got {}", self.corkscrew_step));
        }
        if !(self.curve_step > 0.0 && self.curve_step < 1.0) {
            return bad(format!("curve_step must be in (0, 1), got {}", self.curve_step));
        }
        if self.kappa < 3.0 {
            return bad(format!("kappa must be at least 3, got {}", self.kappa));
        }
        if !(self.dilation >= 1.0) {
            return bad(format!("dilation must be at least 1, got {}", self.dilation));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_text_sets_fields() {
        let mut c = AnalysisConfig::default();
        let rest = c.apply_text("h = 0.002\n# comment\neps_grid = 0.1, 0.2\nspec = disk\nur_tail=0.5\n").unwrap();
        assert_eq!(c.h, 0.002);
        assert_eq!(c.eps_grid, vec![0.1, 0.2]);
        assert_eq!(c.thresholds.ur_tail, 0.5);
        assert_eq!(rest, vec![("spec".to_string(), "disk".to_string())]);
        c.validate().unwrap();
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut c = AnalysisConfig::default();
        assert!(c.set("windows", "many").is_err());
        assert!(c.set("nope", "1").is_err());
        c.set("r_min", "0.001").unwrap();
        assert!(c.validate().is_err());
        let mut c = AnalysisConfig::default();
        c.c0_grid = vec![0.2];
        assert!(c.validate().is_err());
        assert!(AnalysisConfig::default().apply_text("h 0.1").is_err());
    }
}
