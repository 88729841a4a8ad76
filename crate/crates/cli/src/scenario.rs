//! Scenario files (flat `key = value` format) and the named presets that
//! encode the benchmark table scenarios.
//!
//! Recognized keys:
//!
//! ```text
//! n, p, q, r            positive integers (required)
//! design                iid_gaussian | ar1        (default iid_gaussian)
//! rho_x                 AR(1) correlation         (default 0.5, ar1 only)
//! noise                 gaussian | scaled_t | cauchy | contaminated (required)
//! noise_sd              gaussian sd               (default 1.0)
//! t_df, t_scale         scaled_t parameters       (defaults 3, 1.5)
//! contam_base           gaussian | scaled_t       (default gaussian)
//! contam_fraction       fraction of entries hit   (default 0.1)
//! contam_sd             outlier sd                (default 10)
//! contam_mode           additive | replace        (default additive)
//! missing_fraction      in [0, 1)                 (default 0)
//! n_test                test rows                 (default 5000)
//! seed                  base seed                 (default 0; --seed overrides)
//! ```
//!
//! `#` starts a comment; blank lines are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use rrr_core::{ContaminationMode, DesignSpec, NoiseSpec, SimScenario};

use crate::errors::{CliError, Result};

const DEFAULT_N_TEST: usize = 5000;

struct Entry {
    line: usize,
    value: String,
}

fn scenario_err(path: &Path, line: Option<usize>, msg: impl Into<String>) -> CliError {
    CliError::Scenario {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

pub fn parse_scenario_file(path: &Path) -> Result<SimScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::errors::io_err(path, e))?;
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(scenario_err(
                path,
                Some(line_no),
                format!("expected 'key = value', found '{line}'"),
            ));
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(scenario_err(
                path,
                Some(line_no),
                format!("key '{key}' has an empty value"),
            ));
        }
        if entries.contains_key(&key) {
            return Err(scenario_err(
                path,
                Some(line_no),
                format!("duplicate key '{key}'"),
            ));
        }
        entries.insert(
            key,
            Entry {
                line: line_no,
                value,
            },
        );
    }

    let known = [
        "n",
        "p",
        "q",
        "r",
        "design",
        "rho_x",
        "noise",
        "noise_sd",
        "t_df",
        "t_scale",
        "contam_base",
        "contam_fraction",
        "contam_sd",
        "contam_mode",
        "missing_fraction",
        "n_test",
        "seed",
    ];
    for (key, entry) in &entries {
        if !known.contains(&key.as_str()) {
            return Err(scenario_err(
                path,
                Some(entry.line),
                format!("unknown key '{key}'"),
            ));
        }
    }

    fn get_parsed<T: std::str::FromStr>(
        entries: &BTreeMap<String, Entry>,
        path: &Path,
        key: &str,
        what: &str,
    ) -> Result<Option<T>> {
        match entries.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                scenario_err(
                    path,
                    Some(e.line),
                    format!("'{}' is not a valid {what} for key '{key}'", e.value),
                )
            }),
        }
    }
    fn require<T>(path: &Path, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| scenario_err(path, None, format!("missing required key '{key}'")))
    }

    let n = require(path, "n", get_parsed::<usize>(&entries, path, "n", "integer")?)?;
    let p = require(path, "p", get_parsed::<usize>(&entries, path, "p", "integer")?)?;
    let q = require(path, "q", get_parsed::<usize>(&entries, path, "q", "integer")?)?;
    let r = require(path, "r", get_parsed::<usize>(&entries, path, "r", "integer")?)?;

    let design = match entries.get("design").map(|e| e.value.as_str()) {
        None | Some("iid_gaussian") => DesignSpec::IidGaussian,
        Some("ar1") => {
            let rho = get_parsed::<f64>(&entries, path, "rho_x", "number")?.unwrap_or(0.5);
            DesignSpec::Ar1 { rho }
        }
        Some(other) => {
            let line = entries.get("design").map(|e| e.line);
            return Err(scenario_err(
                path,
                line,
                format!("unknown design '{other}' (expected iid_gaussian or ar1)"),
            ));
        }
    };

    let noise_sd = get_parsed::<f64>(&entries, path, "noise_sd", "number")?.unwrap_or(1.0);
    let t_df = get_parsed::<f64>(&entries, path, "t_df", "number")?.unwrap_or(3.0);
    let t_scale = get_parsed::<f64>(&entries, path, "t_scale", "number")?.unwrap_or(1.5);

    let base_noise = |family: &str, line: Option<usize>| -> Result<NoiseSpec> {
        match family {
            "gaussian" => Ok(NoiseSpec::Gaussian { sd: noise_sd }),
            "scaled_t" => Ok(NoiseSpec::ScaledT {
                df: t_df,
                scale: t_scale,
            }),
            other => Err(scenario_err(
                path,
                line,
                format!("unknown base noise '{other}' (expected gaussian or scaled_t)"),
            )),
        }
    };

    let noise_entry = entries
        .get("noise")
        .ok_or_else(|| scenario_err(path, None, "missing required key 'noise'"))?;
    let noise = match noise_entry.value.as_str() {
        "gaussian" => NoiseSpec::Gaussian { sd: noise_sd },
        "scaled_t" => NoiseSpec::ScaledT {
            df: t_df,
            scale: t_scale,
        },
        "cauchy" => NoiseSpec::Cauchy,
        "contaminated" => {
            let base_name = entries
                .get("contam_base")
                .map(|e| e.value.as_str())
                .unwrap_or("gaussian");
            let base = base_noise(base_name, entries.get("contam_base").map(|e| e.line))?;
            let fraction =
                get_parsed::<f64>(&entries, path, "contam_fraction", "number")?.unwrap_or(0.1);
            let outlier_sd =
                get_parsed::<f64>(&entries, path, "contam_sd", "number")?.unwrap_or(10.0);
            let mode = match entries.get("contam_mode").map(|e| e.value.as_str()) {
                None | Some("additive") => ContaminationMode::Additive,
                Some("replace") => ContaminationMode::Replace,
                Some(other) => {
                    return Err(scenario_err(
                        path,
                        entries.get("contam_mode").map(|e| e.line),
                        format!("unknown contamination mode '{other}'"),
                    ));
                }
            };
            NoiseSpec::Contaminated {
                base: Box::new(base),
                fraction,
                outlier_sd,
                mode,
            }
        }
        other => {
            return Err(scenario_err(
                path,
                Some(noise_entry.line),
                format!(
                    "unknown noise '{other}' (expected gaussian, scaled_t, cauchy, or contaminated)"
                ),
            ));
        }
    };

    let scenario = SimScenario {
        n,
        p,
        q,
        r,
        design,
        noise,
        missing_fraction: get_parsed::<f64>(&entries, path, "missing_fraction", "number")?
            .unwrap_or(0.0),
        n_test: get_parsed::<usize>(&entries, path, "n_test", "integer")?.unwrap_or(DEFAULT_N_TEST),
        seed: get_parsed::<u64>(&entries, path, "seed", "integer")?.unwrap_or(0),
    };
    scenario
        .validate()
        .map_err(|e| scenario_err(path, None, e.to_string()))?;
    Ok(scenario)
}

fn base(n: usize, p: usize, q: usize, r: usize, noise: NoiseSpec) -> SimScenario {
    SimScenario {
        n,
        p,
        q,
        r,
        design: DesignSpec::IidGaussian,
        noise,
        missing_fraction: 0.0,
        n_test: DEFAULT_N_TEST,
        seed: 0,
    }
}

fn gauss(sd: f64) -> NoiseSpec {
    NoiseSpec::Gaussian { sd }
}

fn scaled_t(df: f64, scale: f64) -> NoiseSpec {
    NoiseSpec::ScaledT { df, scale }
}

fn contaminated(base: NoiseSpec, fraction: f64) -> NoiseSpec {
    NoiseSpec::Contaminated {
        base: Box::new(base),
        fraction,
        outlier_sd: 10.0,
        mode: ContaminationMode::Additive,
    }
}

/// Named presets reproducing the benchmark table scenarios at n = 200.
pub fn presets() -> Vec<(&'static str, &'static str, SimScenario)> {
    let mut list: Vec<(&'static str, &'static str, SimScenario)> = Vec::new();
    let mut push = |name: &'static str, desc: &'static str, s: SimScenario| {
        list.push((name, desc, s));
    };

    push(
        "table1-gauss-r2",
        "N(0,1) noise, p=12, q=7, rank 2",
        base(200, 12, 7, 2, gauss(1.0)),
    );
    push(
        "table1-gauss-r5",
        "N(0,1) noise, p=12, q=7, rank 5",
        base(200, 12, 7, 5, gauss(1.0)),
    );
    push(
        "table1-gauss3-r2",
        "N(0,3^2) noise, p=12, q=7, rank 2",
        base(200, 12, 7, 2, gauss(3.0)),
    );
    push(
        "table1-gauss3-r5",
        "N(0,3^2) noise, p=12, q=7, rank 5",
        base(200, 12, 7, 5, gauss(3.0)),
    );
    push(
        "table1-t-r2",
        "1.5*t_3 noise, p=12, q=7, rank 2",
        base(200, 12, 7, 2, scaled_t(3.0, 1.5)),
    );
    push(
        "table1-t-r5",
        "1.5*t_3 noise, p=12, q=7, rank 5",
        base(200, 12, 7, 5, scaled_t(3.0, 1.5)),
    );
    push(
        "table1-cauchy-r2",
        "Cauchy noise, p=12, q=7, rank 2",
        base(200, 12, 7, 2, NoiseSpec::Cauchy),
    );
    push(
        "table1-cauchy-r5",
        "Cauchy noise, p=12, q=7, rank 5",
        base(200, 12, 7, 5, NoiseSpec::Cauchy),
    );
    push(
        "table1-p120-gauss-r2",
        "N(0,1) noise, p=120, q=7, rank 2",
        base(200, 120, 7, 2, gauss(1.0)),
    );
    push(
        "table1-p120-t-r2",
        "1.5*t_3 noise, p=120, q=7, rank 2",
        base(200, 120, 7, 2, scaled_t(3.0, 1.5)),
    );
    push(
        "table1-p120-cauchy-r2",
        "Cauchy noise, p=120, q=7, rank 2",
        base(200, 120, 7, 2, NoiseSpec::Cauchy),
    );

    let ar1 = |mut s: SimScenario| {
        s.design = DesignSpec::Ar1 { rho: 0.5 };
        s
    };
    push(
        "table2-ar1-gauss-r2",
        "AR(1) design rho=0.5, N(0,1), p=12, q=7, rank 2",
        ar1(base(200, 12, 7, 2, gauss(1.0))),
    );
    push(
        "table2-ar1-gauss-r5",
        "AR(1) design rho=0.5, N(0,1), p=12, q=7, rank 5",
        ar1(base(200, 12, 7, 5, gauss(1.0))),
    );
    push(
        "table2-ar1-t-r2",
        "AR(1) design rho=0.5, t_3, p=12, q=7, rank 2",
        ar1(base(200, 12, 7, 2, scaled_t(3.0, 1.0))),
    );
    push(
        "table2-ar1-cauchy-r2",
        "AR(1) design rho=0.5, Cauchy, p=12, q=7, rank 2",
        ar1(base(200, 12, 7, 2, NoiseSpec::Cauchy)),
    );
    push(
        "table2-p40-gauss-r2",
        "N(0,1) noise, p=40, q=7, rank 2",
        base(200, 40, 7, 2, gauss(1.0)),
    );
    push(
        "table2-p40-t-r2",
        "t_3 noise, p=40, q=7, rank 2",
        base(200, 40, 7, 2, scaled_t(3.0, 1.0)),
    );

    push(
        "table3-outlier-5pct-r2",
        "N(0,1) + 5% additive N(0,10^2) outliers, rank 2",
        base(200, 12, 7, 2, contaminated(gauss(1.0), 0.05)),
    );
    push(
        "table3-outlier-10pct-r2",
        "N(0,1) + 10% additive N(0,10^2) outliers, rank 2",
        base(200, 12, 7, 2, contaminated(gauss(1.0), 0.10)),
    );
    push(
        "table3-outlier-20pct-r2",
        "N(0,1) + 20% additive N(0,10^2) outliers, rank 2",
        base(200, 12, 7, 2, contaminated(gauss(1.0), 0.20)),
    );
    push(
        "table3-outlier-10pct-r5",
        "N(0,1) + 10% additive N(0,10^2) outliers, rank 5",
        base(200, 12, 7, 5, contaminated(gauss(1.0), 0.10)),
    );
    push(
        "table3-t-outlier-5pct-r2",
        "t_3 + 5% additive N(0,10^2) outliers, rank 2",
        base(200, 12, 7, 2, contaminated(scaled_t(3.0, 1.0), 0.05)),
    );
    push(
        "table3-t-outlier-10pct-r2",
        "t_3 + 10% additive N(0,10^2) outliers, rank 2",
        base(200, 12, 7, 2, contaminated(scaled_t(3.0, 1.0), 0.10)),
    );

    let missing = |mut s: SimScenario, f: f64| {
        s.missing_fraction = f;
        s
    };
    push(
        "table4-missing-10pct-r2",
        "N(0,1), 10% missing responses, rank 2",
        missing(base(200, 12, 7, 2, gauss(1.0)), 0.10),
    );
    push(
        "table4-missing-20pct-r2",
        "N(0,1), 20% missing responses, rank 2",
        missing(base(200, 12, 7, 2, gauss(1.0)), 0.20),
    );
    push(
        "table4-missing-10pct-r5",
        "N(0,1), 10% missing responses, rank 5",
        missing(base(200, 12, 7, 5, gauss(1.0)), 0.10),
    );
    push(
        "table4-t-missing-10pct-r2",
        "1.5*t_3, 10% missing responses, rank 2",
        missing(base(200, 12, 7, 2, scaled_t(3.0, 1.5)), 0.10),
    );
    push(
        "table4-t-missing-20pct-r2",
        "1.5*t_3, 20% missing responses, rank 2",
        missing(base(200, 12, 7, 2, scaled_t(3.0, 1.5)), 0.20),
    );

    list
}

pub fn find_preset(name: &str) -> Option<SimScenario> {
    presets()
        .into_iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, _, s)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("rrr_cli_scenario_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn parses_a_full_scenario() {
        let path = write_temp(
            "full.cfg",
            "# comment\nn = 100\np = 8\nq = 5\nr = 2\ndesign = ar1\nrho_x = 0.5\n\
             noise = contaminated\ncontam_base = scaled_t\nt_df = 3\nt_scale = 1.0\n\
             contam_fraction = 0.05\ncontam_sd = 10\nmissing_fraction = 0.1\nn_test = 100\nseed = 9\n",
        );
        let s = parse_scenario_file(&path).unwrap();
        assert_eq!(s.n, 100);
        assert_eq!(s.design, DesignSpec::Ar1 { rho: 0.5 });
        assert_eq!(s.missing_fraction, 0.1);
        assert_eq!(s.seed, 9);
        match s.noise {
            NoiseSpec::Contaminated { fraction, .. } => assert_eq!(fraction, 0.05),
            other => panic!("wrong noise {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let path = write_temp("bad.cfg", "n = 10\np = 4\nq = hello\n");
        let err = parse_scenario_file(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");

        let path = write_temp("unknown.cfg", "n = 10\nbogus = 3\n");
        let err = parse_scenario_file(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let path = write_temp("noeq.cfg", "n 10\n");
        let err = parse_scenario_file(&path).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn missing_required_keys_are_reported() {
        let path = write_temp("missing.cfg", "n = 10\np = 4\nq = 3\nr = 1\n");
        let err = parse_scenario_file(&path).unwrap_err();
        assert!(err.to_string().contains("noise"), "{err}");
    }

    #[test]
    fn presets_are_valid_and_unique() {
        let all = presets();
        let mut names: Vec<&str> = all.iter().map(|(n, _, _)| *n).collect();
        let before = names.len();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), before, "duplicate preset names");
        for (name, _, scenario) in &all {
            scenario
                .validate()
                .unwrap_or_else(|e| panic!("preset {name} invalid: {e}"));
        }
        assert!(find_preset("table1-gauss-r2").is_some());
        assert!(find_preset("nope").is_none());
    }
}
