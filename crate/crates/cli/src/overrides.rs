use toml::{Table, Value};

use arff_core::experiment::ExperimentConfig;

use crate::{CliResult, ExperimentArgs, Failure};

/// Config-file values with command-line flags layered on top.
pub struct Overrides {
    table: Table,
}

fn invalid(m: impl Into<String>) -> Failure {
    Failure::Invalid(m.into())
}

impl Overrides {
    /// Starts from `--config` (if any) and applies the common flags. A kind
    /// fixed by the subcommand must agree with the file.
    pub fn new(common: &ExperimentArgs, kind: Option<&str>) -> CliResult<Self> {
        let mut table = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
                toml::from_str(&text)
                    .map_err(|e| invalid(format!("{}: {e}", path.display())))?
            }
            None => Table::new(),
        };
        if let Some(kind) = kind {
            match table.get("kind").and_then(Value::as_str) {
                Some(k) if k != kind => {
                    return Err(invalid(format!(
                        "config kind {k:?} does not match this subcommand ({kind})"
                    )))
                }
                _ => {
                    table.insert("kind".into(), Value::String(kind.into()));
                }
            }
        }
        let mut o = Self { table };
        if common.paper_scale {
            o.set("scale", "paper")?;
        }
        o.set_opt("seed", common.seed.map(|s| s as i64))?;
        o.set_opt("realizations", common.realizations.map(|r| r as i64))?;
        Ok(o)
    }

    pub fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    pub fn remove(&mut self, key: &str) {
        self.table.remove(key);
    }

    /// Sets a possibly dotted key.
    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> CliResult {
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().filter(|s| !s.is_empty());
        let last = last.ok_or_else(|| invalid(format!("empty key in {key:?}")))?;
        let mut table = &mut self.table;
        for part in parts {
            let entry = table
                .entry(part.to_string())
                .or_insert_with(|| Value::Table(Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| invalid(format!("{part} is not a section")))?;
        }
        table.insert(last.into(), value.into());
        Ok(())
    }

    pub fn set_opt<V: Into<Value>>(&mut self, key: &str, value: Option<V>) -> CliResult {
        match value {
            Some(v) => self.set(key, v),
            None => Ok(()),
        }
    }

    pub fn set_list<V: Into<Value> + Clone>(&mut self, key: &str, values: &Option<Vec<V>>) -> CliResult {
        match values {
            Some(v) => self.set(
                key,
                Value::Array(v.iter().cloned().map(Into::into).collect()),
            ),
            None => Ok(()),
        }
    }

    /// Applies `key=value` assignments; values use TOML syntax, with bare
    /// words taken as strings.
    pub fn assign(&mut self, assignments: &[String]) -> CliResult {
        for a in assignments {
            let (key, raw) = a
                .split_once('=')
                .ok_or_else(|| invalid(format!("--set expects KEY=VALUE, got {a:?}")))?;
            self.set(key.trim(), parse_value(raw.trim()))?;
        }
        Ok(())
    }

    pub fn resolve(self) -> CliResult<ExperimentConfig> {
        if !self.table.contains_key("kind") {
            return Err(invalid("an experiment needs --kind or a config file with `kind`"));
        }
        let text = toml::to_string(&self.table).map_err(|e| invalid(e.to_string()))?;
        Ok(ExperimentConfig::from_toml_str(&text)?)
    }
}

pub fn parse_value(raw: &str) -> Value {
    match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// `full`, `m^(3/4)`, `cap:N` or a fixed size.
pub fn batch_value(raw: &str) -> CliResult<Value> {
    if let Ok(n) = raw.parse::<i64>() {
        return Ok(Value::Integer(n));
    }
    if let Some(cap) = raw.strip_prefix("cap:") {
        let cap: i64 = cap
            .parse()
            .map_err(|_| invalid(format!("bad batch cap {raw:?}")))?;
        let mut t = Table::new();
        t.insert("cap".into(), Value::Integer(cap));
        return Ok(Value::Table(t));
    }
    match raw {
        "full" | "m^(3/4)" => Ok(Value::String(raw.into())),
        _ => Err(invalid(format!(
            "batch size must be a number, full, m^(3/4) or cap:N, got {raw:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_fall_back_to_strings() {
        assert_eq!(parse_value("3"), Value::Integer(3));
        assert_eq!(parse_value("[1, 2]").as_array().map(Vec::len), Some(2));
        assert_eq!(parse_value("paper"), Value::String("paper".into()));
        assert_eq!(parse_value("true"), Value::Boolean(true));
    }

    #[test]
    fn batch_specs() {
        assert_eq!(batch_value("256").unwrap(), Value::Integer(256));
        assert!(batch_value("cap:10").unwrap().is_table());
        assert!(batch_value("half").is_err());
    }
}
