//! Portable `.dtrom` model files.
//!
//! A dtrom file is a versioned text document: a magic/version header line,
//! a TOML payload whose floats use Rust's shortest round-trip encoding
//! (import reproduces the model bit for bit), and a SHA-256 trailer over
//! everything above it.

use crate::error::TwinError;
use crate::sysid::{InputChannel, ModelMetadata, NarxModel, Normalization, Term};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const DTROM_VERSION: u32 = 1;
const MAGIC: &str = "cooktwin dtrom";
const TRAILER: &str = "[checksum]";

/// Parsed representation of a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub version: u32,
    pub model: NarxModel,
    /// Hex SHA-256 of the header plus payload.
    pub checksum: String,
}

#[derive(Serialize, Deserialize)]
struct Payload {
    model: ModelSection,
    normalization: Normalization,
    metadata: ModelMetadata,
}

#[derive(Serialize, Deserialize)]
struct ModelSection {
    output_lags: usize,
    input_lags: usize,
    dt_s: f64,
    #[serde(default)]
    input_channels: Vec<InputChannel>,
    output_min: f64,
    output_max: f64,
    terms: Vec<String>,
    coefficients: Vec<f64>,
}

/// Renders a model to the dtrom text form.
pub fn to_dtrom_string(model: &NarxModel) -> Result<String, TwinError> {
    let payload = Payload {
        model: ModelSection {
            output_lags: model.output_lags,
            input_lags: model.input_lags,
            dt_s: model.dt,
            input_channels: model.input_channels.clone(),
            output_min: model.output_min,
            output_max: model.output_max,
            terms: model
                .terms
                .iter()
                .map(|t| t.display_split(model.output_lags, model.input_lags))
                .collect(),
            coefficients: model.coefficients.clone(),
        },
        normalization: model.normalization,
        metadata: model.metadata.clone(),
    };
    let body = toml::to_string(&payload).map_err(|e| TwinError::Parse(e.to_string()))?;
    let head = format!("{MAGIC} {DTROM_VERSION}\n{body}");
    let checksum = sha256_hex(head.as_bytes());
    Ok(format!("{head}{TRAILER}\nsha256 = \"{checksum}\"\n"))
}

/// Parses a dtrom document, verifying version and checksum.
pub fn from_dtrom_string(text: &str) -> Result<ModelFile, TwinError> {
    let first_line = text.lines().next().unwrap_or("");
    let Some(version_text) = first_line.strip_prefix(MAGIC) else {
        return Err(TwinError::BadMagic(first_line.chars().take(40).collect()));
    };
    let version_text = version_text.trim();
    let version: u32 = version_text
        .parse()
        .map_err(|_| TwinError::Version { found: version_text.into(), supported: DTROM_VERSION })?;
    if version != DTROM_VERSION {
        return Err(TwinError::Version { found: version_text.into(), supported: DTROM_VERSION });
    }

    let marker = format!("\n{TRAILER}\n");
    let Some(pos) = text.rfind(&marker) else {
        return Err(TwinError::Checksum("checksum trailer missing (truncated file?)".into()));
    };
    let head = &text[..pos + 1];
    let trailer = &text[pos + marker.len()..];
    let recorded = trailer
        .lines()
        .find_map(|l| l.trim().strip_prefix("sha256").map(str::trim))
        .and_then(|l| l.strip_prefix('='))
        .map(|l| l.trim().trim_matches('"').to_string())
        .ok_or_else(|| TwinError::Checksum("sha256 line missing in trailer".into()))?;
    let actual = sha256_hex(head.as_bytes());
    if recorded != actual {
        return Err(TwinError::Checksum(format!(
            "recorded {recorded} but content hashes to {actual}"
        )));
    }

    let body = head.strip_prefix(first_line).unwrap_or(head).trim_start_matches('\n');
    let payload: Payload = toml::from_str(body).map_err(|e| TwinError::Parse(e.to_string()))?;

    let section = payload.model;
    let mut terms = Vec::with_capacity(section.terms.len());
    for t in &section.terms {
        terms.push(
            Term::parse(
                t,
                section.output_lags,
                section.input_lags,
                section.input_channels.len(),
            )
            .map_err(|e| TwinError::Parse(e.to_string()))?,
        );
    }
    if terms.len() != section.coefficients.len() {
        return Err(TwinError::Parse(format!(
            "{} terms but {} coefficients",
            terms.len(),
            section.coefficients.len()
        )));
    }
    let model = NarxModel {
        output_lags: section.output_lags,
        input_lags: section.input_lags,
        dt: section.dt_s,
        input_channels: section.input_channels,
        terms,
        coefficients: section.coefficients,
        normalization: payload.normalization,
        output_min: section.output_min,
        output_max: section.output_max,
        metadata: payload.metadata,
    };
    Ok(ModelFile { version, model, checksum: actual })
}

/// Writes the model atomically and returns the file representation.
pub fn export_model(model: &NarxModel, path: &Path) -> Result<ModelFile, crate::Error> {
    let text = to_dtrom_string(model).map_err(crate::Error::Twin)?;
    crate::io::write_atomic(path, text.as_bytes())?;
    from_dtrom_string(&text).map_err(crate::Error::Twin)
}

/// Reads and verifies a model file.
pub fn import_model(path: &Path) -> Result<NarxModel, crate::Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| crate::Error::io(path.display().to_string(), e))?;
    Ok(from_dtrom_string(&text).map_err(crate::Error::Twin)?.model)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
