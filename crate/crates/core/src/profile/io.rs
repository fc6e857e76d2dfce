//! Profile JSON persistence.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "spmd-2018",
//!   "scenarios": {
//!     "highway": {
//!       "accel_limit": {"family": "gev", "params": {"k": 0.3711, "sigma": 0.1628, "mu": 0.5314}, "units": "m/s^2"},
//!       "mean_headway": {"family": "lognormal",
//!                        "params": {"arith_mean": 1.42, "arith_var": 0.08, "log_mu": 0.31, "log_sigma": 0.20},
//!                        "units": "s"},
//!       "init_ttc_recip": {"family": "laplace", "params": {"lambda": 16.537, "mu": -0.012}, "units": "1/s"},
//!       "pos_init_ttc_recip": {"family": "exponential", "params": {"mu": 0.0376}, "units": "1/s"},
//!       "gain_mean_curves": [{"range": 5.0, "kd_mean": 0.3, "kd_p25": 0.2, "kd_p75": 0.4,
//!                             "kp_mean": 0.05, "kp_p25": 0.04, "kp_p75": 0.06}]
//!     },
//!     "local": { }
//!   }
//! }
//! ```
//!
//! Distribution keys are the field names of [`ScenarioProfile`]. Missing
//! keys and missing scenario blocks load as absent.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EtiquetteProfile, GainCurvePoint, ProfileError, Result, ScenarioProfile};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct DistEntry {
    family: String,
    params: Value,
    units: String,
}

type ScenarioFile = BTreeMap<String, Value>;

#[derive(Serialize, Deserialize)]
struct ScenariosFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    highway: Option<ScenarioFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    local: Option<ScenarioFile>,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    schema_version: u64,
    name: String,
    scenarios: ScenariosFile,
}

fn entry<T: Serialize>(family: &str, params: &T, field: &str) -> Value {
    serde_json::to_value(DistEntry {
        family: family.into(),
        params: serde_json::to_value(params).expect("parameters serialize"),
        units: ScenarioProfile::units(field).into(),
    })
    .expect("entry serializes")
}

fn scenario_to_file(s: &ScenarioProfile) -> ScenarioFile {
    let mut d = BTreeMap::new();
    for f in ScenarioProfile::FIELDS {
        if let Some(g) = s.gev_field(f) {
            d.insert(f.to_string(), entry("gev", g, f));
        }
    }
    if let Some(p) = &s.mean_headway {
        d.insert("mean_headway".into(), entry("lognormal", p, "mean_headway"));
    }
    if let Some(p) = &s.init_ttc_recip {
        d.insert("init_ttc_recip".into(), entry("laplace", p, "init_ttc_recip"));
    }
    if let Some(p) = &s.pos_init_ttc_recip {
        d.insert(
            "pos_init_ttc_recip".into(),
            entry("exponential", p, "pos_init_ttc_recip"),
        );
    }
    if let Some(c) = &s.gain_mean_curves {
        d.insert(
            "gain_mean_curves".into(),
            serde_json::to_value(c).expect("curves serialize"),
        );
    }
    d
}

fn take_dist<T: for<'de> Deserialize<'de>>(
    d: &mut BTreeMap<String, Value>,
    scenario: &str,
    field: &str,
    family: &str,
) -> Result<Option<T>> {
    let Some(v) = d.remove(field) else {
        return Ok(None);
    };
    let e: DistEntry =
        serde_json::from_value(v).map_err(|err| ProfileError::Invalid(format!("{scenario}.{field}: {err}")))?;
    if e.family != family {
        return Err(ProfileError::Invalid(format!(
            "{scenario}.{field}: expected family '{family}', found '{}'",
            e.family
        )));
    }
    serde_json::from_value(e.params)
        .map(Some)
        .map_err(|err| ProfileError::Invalid(format!("{scenario}.{field}.params: {err}")))
}

fn scenario_from_file(f: ScenarioFile, scenario: &str) -> Result<ScenarioProfile> {
    let mut d = f;
    let gev = |d: &mut BTreeMap<String, Value>, field: &str| take_dist(d, scenario, field, "gev");
    let s = ScenarioProfile {
        accel_limit: gev(&mut d, "accel_limit")?,
        decel_limit: gev(&mut d, "decel_limit")?,
        mean_headway: take_dist(&mut d, scenario, "mean_headway", "lognormal")?,
        extreme_headway: gev(&mut d, "extreme_headway")?,
        brake_ttc: gev(&mut d, "brake_ttc")?,
        max_yaw_rate: gev(&mut d, "max_yaw_rate")?,
        init_range_recip: gev(&mut d, "init_range_recip")?,
        init_ttc_recip: take_dist(&mut d, scenario, "init_ttc_recip", "laplace")?,
        pos_init_ttc_recip: take_dist(&mut d, scenario, "pos_init_ttc_recip", "exponential")?,
        lc_duration: gev(&mut d, "lc_duration")?,
        gain_mean_curves: match d.remove("gain_mean_curves") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                serde_json::from_value::<Vec<GainCurvePoint>>(v)
                    .map_err(|e| ProfileError::Invalid(format!("{scenario}.gain_mean_curves: {e}")))?,
            ),
        },
    };
    if let Some(unknown) = d.keys().next() {
        return Err(ProfileError::Invalid(format!("{scenario}: unknown field '{unknown}'")));
    }
    s.validate()?;
    Ok(s)
}

pub fn profile_to_json(profile: &EtiquetteProfile) -> String {
    let file = ProfileFile {
        schema_version: SCHEMA_VERSION,
        name: profile.name.clone(),
        scenarios: ScenariosFile {
            highway: profile.highway.as_ref().map(scenario_to_file),
            local: profile.local.as_ref().map(scenario_to_file),
        },
    };
    let mut s = serde_json::to_string_pretty(&file).expect("profile serializes");
    s.push('\n');
    s
}

pub fn parse_profile(text: &str) -> Result<EtiquetteProfile> {
    let parse_err = |e: serde_json::Error| ProfileError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let raw: Value = serde_json::from_str(text).map_err(parse_err)?;
    let found = raw.get("schema_version").and_then(Value::as_u64);
    if found != Some(SCHEMA_VERSION) {
        return Err(ProfileError::SchemaVersion {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    let file: ProfileFile = serde_json::from_str(text).map_err(parse_err)?;
    Ok(EtiquetteProfile {
        name: file.name,
        highway: file
            .scenarios
            .highway
            .map(|s| scenario_from_file(s, "highway"))
            .transpose()?,
        local: file
            .scenarios
            .local
            .map(|s| scenario_from_file(s, "local"))
            .transpose()?,
    })
}

pub fn save_profile(profile: &EtiquetteProfile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, profile_to_json(profile))?;
    Ok(())
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<EtiquetteProfile> {
    parse_profile(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::builtin_profile;

    #[test]
    fn builtin_round_trip() {
        let p = builtin_profile("spmd-2018").unwrap();
        assert_eq!(parse_profile(&profile_to_json(&p)).unwrap(), p);
    }

    #[test]
    fn missing_scenario_is_absent() {
        let text = r#"{"schema_version": 1, "name": "x", "scenarios": {"highway": {
            "lc_duration": {"family": "gev", "params": {"k": 0.2, "sigma": 2.0, "mu": 4.0}, "units": "s"}}}}"#;
        let p = parse_profile(text).unwrap();
        assert!(p.local.is_none());
        let hw = p.highway.unwrap();
        assert!(hw.accel_limit.is_none());
        assert_eq!(hw.lc_duration.unwrap().mu, 4.0);
    }

    #[test]
    fn wrong_schema_version() {
        let text = r#"{"schema_version": 2, "name": "x", "scenarios": {}}"#;
        assert!(matches!(
            parse_profile(text),
            Err(ProfileError::SchemaVersion { found: Some(2), .. })
        ));
        assert!(matches!(
            parse_profile(r#"{"name": "x", "scenarios": {}}"#),
            Err(ProfileError::SchemaVersion { found: None, .. })
        ));
    }

    #[test]
    fn malformed_json_reports_location() {
        match parse_profile("{\n  \"schema_version\": 1,\n  \"name\": }") {
            Err(ProfileError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_family_rejected() {
        let text = r#"{"schema_version": 1, "name": "x", "scenarios": {"local": {
            "lc_duration": {"family": "laplace", "params": {"lambda": 1.0, "mu": 0.0}, "units": "s"}}}}"#;
        assert!(matches!(parse_profile(text), Err(ProfileError::Invalid(_))));
    }

    #[test]
    fn invalid_params_rejected() {
        let text = r#"{"schema_version": 1, "name": "x", "scenarios": {"local": {
            "lc_duration": {"family": "gev", "params": {"k": 0.1, "sigma": -1.0, "mu": 0.0}, "units": "s"}}}}"#;
        assert!(matches!(parse_profile(text), Err(ProfileError::Invalid(_))));
    }
}
