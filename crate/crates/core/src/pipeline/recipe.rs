use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::codec::CodecSpec;
use crate::error::{Error, Result, StageName};
use crate::keystage::{PackMode, Tier1Mode, Tier1Params};
use crate::serde_dec::parse_canonical;
use crate::seriesmask::SeriesSpec;

pub const RECIPE_VERSION: u32 = 1;

/// Everything besides the key needed to run or reverse the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recipe {
    pub recipe_id: String,
    pub version: u32,
    pub tier1: Tier1Params,
    pub key_id: String,
    /// Radix used for the number-conversion stage.
    pub base: u32,
    pub codec: CodecSpec,
    pub series: SeriesSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecipeFile {
    version: u32,
    recipe_id: String,
    tier1: Json,
    base: Json,
    codec: Json,
    series: Json,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tier1File {
    mode: Tier1Mode,
    salt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factor: Option<String>,
    pack: PackMode,
    key_id: String,
}

fn decimal(field: &str, s: Option<String>) -> Result<Option<BigUint>> {
    s.map(|s| {
        parse_canonical(&s).ok_or_else(|| {
            Error::recipe(StageName::Tier1, format!("{field} is not a decimal: {s:?}"))
        })
    })
    .transpose()
}

impl Recipe {
    /// Parses the JSON recipe format, attributing section errors to the
    /// stage they configure.
    pub fn from_json(text: &str) -> Result<Recipe> {
        let file: RecipeFile = serde_json::from_str(text)?;
        if file.version != RECIPE_VERSION {
            return Err(Error::recipe(
                StageName::Tier1,
                format!("unsupported recipe version {}", file.version),
            ));
        }
        let tier1: Tier1File = serde_json::from_value(file.tier1)
            .map_err(|e| Error::recipe(StageName::Tier1, e.to_string()))?;
        let salt = decimal("salt", tier1.salt)?
            .ok_or_else(|| Error::recipe(StageName::Tier1, "missing salt"))?;
        let factor = decimal("factor", tier1.factor)?;
        let base = file
            .base
            .as_u64()
            .and_then(|b| u32::try_from(b).ok())
            .ok_or_else(|| Error::recipe(StageName::Radix, format!("bad base {}", file.base)))?;
        let codec: CodecSpec = serde_json::from_value(file.codec)
            .map_err(|e| Error::recipe(StageName::Codec, e.to_string()))?;
        let series: SeriesSpec = serde_json::from_value(file.series)
            .map_err(|e| Error::recipe(StageName::Series, e.to_string()))?;
        let recipe = Recipe {
            recipe_id: file.recipe_id,
            version: file.version,
            tier1: Tier1Params {
                mode: tier1.mode,
                salt,
                scalar_factor: factor,
                pack_mode: tier1.pack,
            },
            key_id: tier1.key_id,
            base,
            codec,
            series,
        };
        super::validate_recipe(&recipe)?;
        Ok(recipe)
    }

    pub fn to_json(&self) -> String {
        let tier1 = Tier1File {
            mode: self.tier1.mode,
            salt: Some(self.tier1.salt.to_string()),
            factor: self.tier1.scalar_factor.as_ref().map(ToString::to_string),
            pack: self.tier1.pack_mode,
            key_id: self.key_id.clone(),
        };
        let file = RecipeFile {
            version: self.version,
            recipe_id: self.recipe_id.clone(),
            tier1: serde_json::to_value(tier1).expect("serializable"),
            base: Json::from(self.base),
            codec: serde_json::to_value(self.codec).expect("serializable"),
            series: serde_json::to_value(self.series).expect("serializable"),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seriesmask::SeriesKind;

    const SAMPLE: &str = r#"{"version":1,"recipe_id":"r1",
        "tier1":{"mode":"textbook_rsa","salt":"34","pack":"big_endian","key_id":"k1"},
        "base":2,"codec":{"scheme":"B4B5"},"series":{"kind":"SIN","n":3}}"#;

    #[test]
    fn parses_and_reserializes() {
        let r = Recipe::from_json(SAMPLE).unwrap();
        assert_eq!(r.tier1.salt, BigUint::from(34u32));
        assert_eq!(r.key_id, "k1");
        assert_eq!(r.codec, CodecSpec::B4B5);
        assert_eq!(r.series, SeriesSpec::new(SeriesKind::Sin, 3).unwrap());
        assert_eq!(Recipe::from_json(&r.to_json()).unwrap(), r);
    }

    fn stage_of(text: &str) -> StageName {
        match Recipe::from_json(text).unwrap_err() {
            Error::RecipeInvalid { stage, .. } => stage,
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn section_errors_name_their_stage() {
        assert_eq!(
            stage_of(&SAMPLE.replace(r#""salt":"34","#, "")),
            StageName::Tier1
        );
        assert_eq!(
            stage_of(&SAMPLE.replace(r#""salt":"34""#, r#""salt":"034""#)),
            StageName::Tier1
        );
        assert_eq!(stage_of(&SAMPLE.replace("B4B5", "RZ")), StageName::Codec);
        assert_eq!(stage_of(&SAMPLE.replace("SIN", "TAN")), StageName::Series);
        assert_eq!(
            stage_of(&SAMPLE.replace(r#""base":2"#, r#""base":40"#)),
            StageName::Radix
        );
        assert_eq!(
            stage_of(&SAMPLE.replace(r#""base":2"#, r#""base":"2""#)),
            StageName::Radix
        );
        assert_eq!(
            stage_of(&SAMPLE.replace("big_endian", "paper_variable")),
            StageName::Tier1
        );
        // paper_scalar without a factor
        assert_eq!(
            stage_of(&SAMPLE.replace("textbook_rsa", "paper_scalar")),
            StageName::Tier1
        );
    }
}
