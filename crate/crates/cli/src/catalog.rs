//! Built-in data catalog: constant, linear and Gaussian fields, plus
//! separable and singular sources built from them.

use edes_wave_core::{SmoothData, SourceFunction, SpatialDim};

use crate::config::{ConfigError, RawConfig};

fn err(key: String, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key,
        message: message.into(),
    }
}

/// Keys under `prefix` that only some kinds read.
const SHAPE_KEYS: &[&str] = &["value", "slope", "offset", "center", "width", "amplitude"];

fn allowed_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "constant" => &["value"],
        "linear" => &["slope", "offset"],
        "gaussian" => &["center", "width", "amplitude"],
        _ => &[],
    }
}

/// A spatial field of the given `kind`, reading its parameters from
/// `prefix.*`. Parameters that the kind does not use are errors.
fn shape(
    raw: &RawConfig,
    prefix: &str,
    kind: &str,
    dim: SpatialDim,
) -> Result<SmoothData, ConfigError> {
    let key = |k: &str| format!("{prefix}.{k}");
    let allowed = allowed_keys(kind);
    for k in SHAPE_KEYS {
        if raw.contains(&key(k)) && !allowed.contains(k) {
            return Err(err(key(k), format!("not used by kind `{kind}`")));
        }
    }
    let n = dim.get();
    match kind {
        "constant" => Ok(SmoothData::constant(dim, raw.get_or(&key("value"), 1.0)?)),
        "linear" => {
            let slope = raw
                .list(&key("slope"))?
                .ok_or_else(|| err(key("slope"), "required"))?;
            SmoothData::affine(dim, &slope, raw.get_or(&key("offset"), 0.0)?)
                .map_err(|e| err(key("slope"), e.to_string()))
        }
        "gaussian" => {
            let center = raw.list(&key("center"))?.unwrap_or_else(|| vec![0.0; n]);
            SmoothData::gaussian(
                dim,
                &center,
                raw.get_or(&key("width"), 1.0)?,
                raw.get_or(&key("amplitude"), 1.0)?,
            )
            .map_err(|e| err(key("center"), e.to_string()))
        }
        other => Err(err(
            key("kind"),
            format!("unknown data kind `{other}` (expected none, constant, linear or gaussian)"),
        )),
    }
}

/// `phi0` or `phi1`; `None` when the kind is `none` or absent.
pub fn data(
    raw: &RawConfig,
    prefix: &str,
    dim: SpatialDim,
) -> Result<Option<SmoothData>, ConfigError> {
    let kind = raw.str(&format!("{prefix}.kind")).unwrap_or("none");
    if kind == "none" {
        if let Some(k) = SHAPE_KEYS
            .iter()
            .find(|k| raw.contains(&format!("{prefix}.{k}")))
        {
            return Err(err(
                format!("{prefix}.{k}"),
                format!("set but {prefix}.kind is none"),
            ));
        }
        return Ok(None);
    }
    shape(raw, prefix, kind, dim).map(Some)
}

/// The source term:
///
/// - `constant`: `f = value`
/// - `gaussian`: `f = t^exponent · gaussian(center, width, amplitude)`
/// - `log-singular`: `f = t^-2 f0`
/// - `power-singular`: `f = t^-a f0`
///
/// with `f0` selected by `source.f0` (`constant` or `gaussian`).
pub fn source(raw: &RawConfig, dim: SpatialDim) -> Result<Option<SourceFunction>, ConfigError> {
    let kind = raw.str("source.kind").unwrap_or("none");
    let reject = |keys: &[&str]| -> Result<(), ConfigError> {
        for k in keys {
            let full = format!("source.{k}");
            if raw.contains(&full) {
                return Err(err(full, format!("not used by source kind `{kind}`")));
            }
        }
        Ok(())
    };
    let wrap = |key: &str, e: edes_wave_core::Error| err(key.to_string(), e.to_string());
    match kind {
        "none" => {
            reject(&["value", "center", "width", "amplitude", "exponent", "a", "f0"])?;
            Ok(None)
        }
        "constant" => {
            reject(&["center", "width", "amplitude", "exponent", "a", "f0"])?;
            Ok(Some(SourceFunction::constant(dim, raw.get_or("source.value", 1.0)?)))
        }
        "gaussian" => {
            reject(&["value", "a", "f0"])?;
            let space = shape(raw, "source", "gaussian", dim)?;
            SourceFunction::separable(space, raw.get_or("source.exponent", 0.0)?)
                .map(Some)
                .map_err(|e| wrap("source.exponent", e))
        }
        "log-singular" | "power-singular" => {
            reject(&["exponent"])?;
            let f0_kind = raw.str("source.f0").unwrap_or("constant");
            let f0 = shape(raw, "source", f0_kind, dim)?;
            if kind == "log-singular" {
                reject(&["a"])?;
                SourceFunction::log_singular(f0, vec![])
                    .map(Some)
                    .map_err(|e| wrap("source.f0", e))
            } else {
                let a = raw.get::<f64>("source.a")?.ok_or_else(|| err("source.a".into(), "required"))?;
                SourceFunction::power_singular(a, f0, vec![])
                    .map(Some)
                    .map_err(|e| wrap("source.a", e))
            }
        }
        other => Err(err(
            "source.kind".into(),
            format!("unknown source kind `{other}` (expected none, constant, gaussian, log-singular or power-singular)"),
        )),
    }
}
