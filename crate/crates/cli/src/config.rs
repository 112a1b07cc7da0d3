//! Settings resolution: flags, then config file, then defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

/// One layer of settings; `None` falls through to the next layer.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub model: Option<String>,
    pub m: Option<usize>,
    pub signature: Option<String>,
    pub tol: Option<f64>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub report: Option<PathBuf>,
    pub suite: Option<String>,
    pub jobs: Option<usize>,
    pub timing: Option<bool>,
}

impl Settings {
    fn or(self, other: Settings) -> Settings {
        Settings {
            model: self.model.or(other.model),
            m: self.m.or(other.m),
            signature: self.signature.or(other.signature),
            tol: self.tol.or(other.tol),
            points: self.points.or(other.points),
            seed: self.seed.or(other.seed),
            report: self.report.or(other.report),
            suite: self.suite.or(other.suite),
            jobs: self.jobs.or(other.jobs),
            timing: self.timing.or(other.timing),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub model: String,
    pub model_given: bool,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub tol: Option<f64>,
    pub points: usize,
    pub seed: u64,
    pub report: Option<PathBuf>,
    pub suite: Option<String>,
    pub jobs: Option<usize>,
    pub timing: bool,
}

pub fn parse_signature(s: &str) -> Result<(usize, usize), String> {
    let (p, q) = s.split_once(',').ok_or_else(|| format!("signature '{s}' is not of the form P,Q"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("signature '{s}' is not of the form P,Q"));
    Ok((parse(p)?, parse(q)?))
}

pub fn load_file(path: &Path) -> Result<Settings, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

/// Merges `flags`, the optional config file and defaults. `env_seed` is the
/// value of `TRACTORLAB_SEED`, used as the seed default.
pub fn resolve(flags: Settings, config: Option<&Path>, env_seed: Option<String>, default_model: &str) -> Result<Resolved, String> {
    let file = match config {
        Some(p) => load_file(p)?,
        None => Settings::default(),
    };
    let s = flags.or(file);
    let env_seed = match env_seed {
        Some(v) => Some(v.trim().parse::<u64>().map_err(|_| format!("TRACTORLAB_SEED '{v}' is not an unsigned integer"))?),
        None => None,
    };
    let model_given = s.model.is_some();
    let model = s.model.unwrap_or_else(|| default_model.to_string());
    let m = s.m.unwrap_or(1);
    let (p, q) = match &s.signature {
        Some(sig) => parse_signature(sig)?,
        None if model == "flat_projective" => (1, m),
        None => (m + 1, 0),
    };
    if p + q != m + 1 || p == 0 {
        return Err(format!("signature ({p},{q}) needs p >= 1 and p + q = m + 1 = {}", m + 1));
    }
    let points = s.points.unwrap_or(200);
    if points == 0 {
        return Err("--points must be positive".into());
    }
    if let Some(t) = s.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(format!("--tol {t} must be a finite non-negative number"));
        }
    }
    Ok(Resolved {
        model,
        model_given,
        m,
        p,
        q,
        tol: s.tol,
        points,
        seed: s.seed.or(env_seed).unwrap_or(0),
        report: s.report,
        suite: s.suite,
        jobs: s.jobs,
        timing: s.timing.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_config_beat_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 7\npoints = 30\nsignature = \"1,1\"\n").unwrap();
        let flags = Settings { points: Some(12), ..Default::default() };
        let r = resolve(flags, Some(&path), Some("99".into()), "round_sphere").unwrap();
        assert_eq!((r.points, r.seed, r.p, r.q), (12, 7, 1, 1));
        let r = resolve(Settings::default(), None, Some("99".into()), "round_sphere").unwrap();
        assert_eq!((r.seed, r.p, r.q), (99, 2, 0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_signature("2;0").is_err());
        let bad = Settings { signature: Some("1,0".into()), ..Default::default() };
        assert!(resolve(bad, None, None, "round_sphere").is_err());
        assert!(resolve(Settings::default(), None, Some("x".into()), "round_sphere").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "colour = 1\n").unwrap();
        assert!(resolve(Settings::default(), Some(&path), None, "round_sphere").is_err());
    }
}
