use std::collections::BTreeMap;
use std::path::Path;

use crate::dataset::QuestionCategory;
use crate::error::{Error, Result};

/// One surface form with `<slot>` markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub text: String,
}

impl Template {
    /// Substitute slot values; any `<slot>` left unfilled is an error.
    pub fn render(&self, slots: &[(&str, &str)]) -> Result<String> {
        let mut out = self.text.clone();
        for (name, value) in slots {
            out = out.replace(&format!("<{name}>"), value);
        }
        if let Some(start) = out.find('<') {
            if out[start..].contains('>') {
                return Err(Error::Data(format!(
                    "template {:?} references an unknown slot",
                    self.text
                )));
            }
        }
        Ok(out)
    }

    pub fn has_slot(&self, name: &str) -> bool {
        self.text.contains(&format!("<{name}>"))
    }
}

/// Editable set of question templates, keyed by evaluation category.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    map: BTreeMap<QuestionCategory, Vec<Template>>,
}

const DEFAULT_TEMPLATES: &str = include_str!("../../assets/templates.json");

impl TemplateSet {
    /// The bundled default templates.
    pub fn bundled() -> TemplateSet {
        Self::from_json(DEFAULT_TEMPLATES).expect("bundled templates are valid")
    }

    pub fn from_json(json: &str) -> Result<TemplateSet> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(json).map_err(|e| Error::Data(format!("template file: {e}")))?;
        let mut map = BTreeMap::new();
        for (key, forms) in raw {
            let category = QuestionCategory::from_id(&key)
                .ok_or_else(|| Error::Data(format!("unknown template category {key:?}")))?;
            if forms.is_empty() {
                return Err(Error::Data(format!("category {key:?} has no surface forms")));
            }
            map.insert(category, forms.into_iter().map(|text| Template { text }).collect());
        }
        Ok(TemplateSet { map })
    }

    pub fn load(path: &Path) -> Result<TemplateSet> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn forms(&self, category: QuestionCategory) -> &[Template] {
        self.map.get(&category).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Deterministically pick a surface form by index.
    pub fn pick(&self, category: QuestionCategory, index: usize) -> Result<&Template> {
        let forms = self.forms(category);
        if forms.is_empty() {
            return Err(Error::Data(format!("no templates for category {category}")));
        }
        Ok(&forms[index % forms.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_covers_all_categories() {
        let set = TemplateSet::bundled();
        for c in QuestionCategory::ALL {
            assert!(!set.forms(c).is_empty(), "missing templates for {c}");
        }
    }

    #[test]
    fn render_fills_slots() {
        let t = Template {
            text: "How many <label>s are there?".into(),
        };
        assert_eq!(t.render(&[("label", "dog")]).unwrap(), "How many dogs are there?");
    }

    #[test]
    fn unknown_slot_is_an_error() {
        let t = Template {
            text: "What color is the <thing>?".into(),
        };
        assert!(t.render(&[("label", "dog")]).is_err());
    }

    #[test]
    fn unknown_category_key_rejected() {
        assert!(TemplateSet::from_json(r#"{"bogus": ["x?"]}"#).is_err());
    }
}
