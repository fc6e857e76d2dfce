use serde_json::{Map, Value};

use etiquette_core::driver::DriverOptions;
use etiquette_core::extract::write_trajectory_csv;
use etiquette_core::sim::{simulate, SimError};
use etiquette_core::{RoadClass, SimConfig};

use crate::error::{CliError, CliResult, ResultExt};
use crate::inputs::{read_text, require_output, resolve_profile};
use crate::SimulateArgs;

/// `key=value` with a dotted key; the value is JSON when it parses as JSON
/// and a plain string otherwise.
fn parse_override(raw: &str) -> CliResult<(Vec<String>, Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override '{raw}' is not of the form KEY=VALUE")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Usage(format!("override '{raw}' has an empty key")));
    }
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key.split('.').map(String::from).collect(), value))
}

/// Recursively copies `from` into `into`; every key must already exist.
fn merge(into: &mut Map<String, Value>, from: &Map<String, Value>, prefix: &str) -> Result<(), String> {
    for (k, v) in from {
        let path = format!("{prefix}{k}");
        match (into.get_mut(k), v) {
            (None, _) => return Err(format!("unknown config key '{path}'")),
            (Some(Value::Object(dst)), Value::Object(src)) => merge(dst, src, &format!("{path}."))?,
            (Some(dst), _) => *dst = v.clone(),
        }
    }
    Ok(())
}

fn set_path(root: &mut Value, path: &[String], value: Value) -> Result<(), String> {
    let mut cur = root;
    for (i, seg) in path.iter().enumerate() {
        cur = cur
            .as_object_mut()
            .and_then(|m| m.get_mut(seg))
            .ok_or_else(|| format!("unknown config key '{}'", path[..=i].join(".")))?;
    }
    *cur = value;
    Ok(())
}

fn road_class_of(value: &Value) -> Result<RoadClass, String> {
    serde_json::from_value(value.clone()).map_err(|e| format!("road_class: {e}"))
}

/// Road-class defaults, then the config file, then the overrides.
pub fn build_config(file: Option<&Value>, overrides: &[(Vec<String>, Value)]) -> CliResult<SimConfig> {
    let file = match file {
        Some(Value::Object(m)) => Some(m),
        Some(_) => return Err(CliError::data("simulation config must be a JSON object")),
        None => None,
    };
    let from_override = overrides
        .iter()
        .rev()
        .find(|(k, _)| k.len() == 1 && k[0] == "road_class");
    let road_class = match (from_override, file.and_then(|f| f.get("road_class"))) {
        (Some((_, v)), _) => road_class_of(v).map_err(CliError::Usage)?,
        (None, Some(v)) => road_class_of(v).map_err(CliError::data)?,
        (None, None) => RoadClass::Highway,
    };

    let mut base = SimConfig::for_road_class(road_class, 0);
    base.driver = Some(DriverOptions::for_road_class(road_class));
    let mut value = serde_json::to_value(&base).internal("encoding default config")?;
    if let (Some(file), Value::Object(dst)) = (file, &mut value) {
        merge(dst, file, "").map_err(CliError::data)?;
        serde_json::from_value::<SimConfig>(value.clone()).data("invalid simulation config")?;
    }
    for (path, v) in overrides {
        set_path(&mut value, path, v.clone()).map_err(CliError::Usage)?;
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("invalid override: {e}")))
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    require_output(&args.out)?;
    let overrides = args
        .overrides
        .iter()
        .map(|o| parse_override(o))
        .collect::<CliResult<Vec<_>>>()?;
    let file = match &args.config {
        Some(path) => {
            Some(serde_json::from_str::<Value>(&read_text(path)?).data(format!("config '{}'", path.display()))?)
        }
        None => None,
    };
    let mut config = build_config(file.as_ref(), &overrides)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(p) = &args.profile {
        config.profile = p.clone();
    }
    config.record = true;
    let profile = resolve_profile(&config.profile)?;

    let out = match simulate(&config, &profile) {
        Ok(out) => out,
        Err(e @ SimError::Collision { .. }) => return Err(CliError::Internal(e.into())),
        Err(e) => return Err(e).data("simulation"),
    };
    write_trajectory_csv(&args.out, &out.trips).internal(format!("writing '{}'", args.out.display()))?;
    let s = &out.stats;
    println!(
        "{:.1} s simulated, {} vehicles spawned, {} cut-ins ({} skipped), {} trips written, min gap {:.2} m",
        s.simulated_time,
        s.spawned,
        s.cut_ins,
        s.cut_ins_skipped,
        out.trips.len(),
        s.min_gap
    );
    Ok(())
}
