//! Job files, pipeline orchestration and result documents.

mod job;
mod output;
mod run;

pub use job::{
    load_job, DistributionFile, DynamicsSource, JobFile, JobSpec, MonteCarloConfig, OutputSelection,
    RegionGridConfig, Source, DEFAULT_COEFFICIENT_DB, DEFAULT_N_SAMPLES,
};
pub use output::{
    band_csv, emit_outputs, render_svg, result_document, BandDoc, EnvelopeDoc, LobeDoc, LobePointDoc,
    ResultDocument, VerdictDoc, ZoneDoc, BAND_CSV_HEADER,
};
pub use run::{run_job, JobResult, Metadata};

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_path_to_error::Segment;

use crate::error::{Result, SldError};

/// Deserialises JSON, reporting schema violations with a JSON pointer to the
/// offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut pointer = String::new();
        for seg in e.path().iter() {
            match seg {
                Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                Segment::Map { key } => {
                    pointer.push('/');
                    pointer.push_str(&key.replace('~', "~0").replace('/', "~1"));
                }
                Segment::Enum { variant } => {
                    pointer.push('/');
                    pointer.push_str(variant);
                }
                Segment::Unknown => pointer.push_str("/?"),
            }
        }
        SldError::Schema {
            pointer,
            message: e.into_inner().to_string(),
        }
    })
}

/// Reads a UTF-8 file; a missing file is a not-found error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            SldError::NotFound(format!("file {}", path.display()))
        } else {
            SldError::io(path, e)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tool_model::ToolFile;

    #[test]
    fn schema_errors_carry_a_pointer() {
        let text = r#"{"name":"t","n_flutes":2,"helix_angle_deg":30,"overhang_mm":50,
            "segments":[{"length_mm":60,"diameter_mm":"wide","kind":"fluted"}],
            "material":{"name":"steel","youngs_modulus_gpa":210,"density_kg_m3":7800}}"#;
        match parse_json::<ToolFile>(text) {
            Err(SldError::Schema { pointer, .. }) => assert_eq!(pointer, "/segments/0/diameter_mm"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_is_not_found() {
        assert!(matches!(
            read_text(Path::new("/nonexistent/tool.json")),
            Err(SldError::NotFound(_))
        ));
    }
}
