//! The QA dataset: evaluation categories, QA pairs, and their JSONL format.

use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 23 evaluation categories: open-form questions plus binary (Y/N)
/// presence splits of the object categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionCategory {
    Action,
    Animal,
    AnimalYn,
    ApplianceYn,
    ClothingYn,
    Color,
    Counting,
    ElectronicYn,
    Food,
    FoodYn,
    Holding,
    HouseholdYn,
    LandscapeYn,
    Location,
    PersonYn,
    PlantYn,
    Pose,
    Position,
    Scene,
    SportYn,
    StructureYn,
    Vehicle,
    VehicleYn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerForm {
    Open,
    Binary,
}

impl QuestionCategory {
    pub const ALL: [QuestionCategory; 23] = [
        QuestionCategory::Action,
        QuestionCategory::Animal,
        QuestionCategory::AnimalYn,
        QuestionCategory::ApplianceYn,
        QuestionCategory::ClothingYn,
        QuestionCategory::Color,
        QuestionCategory::Counting,
        QuestionCategory::ElectronicYn,
        QuestionCategory::Food,
        QuestionCategory::FoodYn,
        QuestionCategory::Holding,
        QuestionCategory::HouseholdYn,
        QuestionCategory::LandscapeYn,
        QuestionCategory::Location,
        QuestionCategory::PersonYn,
        QuestionCategory::PlantYn,
        QuestionCategory::Pose,
        QuestionCategory::Position,
        QuestionCategory::Scene,
        QuestionCategory::SportYn,
        QuestionCategory::StructureYn,
        QuestionCategory::Vehicle,
        QuestionCategory::VehicleYn,
    ];

    pub fn answer_form(&self) -> AnswerForm {
        match self {
            QuestionCategory::AnimalYn
            | QuestionCategory::ApplianceYn
            | QuestionCategory::ClothingYn
            | QuestionCategory::ElectronicYn
            | QuestionCategory::FoodYn
            | QuestionCategory::HouseholdYn
            | QuestionCategory::LandscapeYn
            | QuestionCategory::PersonYn
            | QuestionCategory::PlantYn
            | QuestionCategory::SportYn
            | QuestionCategory::StructureYn
            | QuestionCategory::VehicleYn => AnswerForm::Binary,
            _ => AnswerForm::Open,
        }
    }

    /// Stable machine identifier (the serde form).
    pub fn id(&self) -> &'static str {
        match self {
            QuestionCategory::Action => "action",
            QuestionCategory::Animal => "animal",
            QuestionCategory::AnimalYn => "animal_yn",
            QuestionCategory::ApplianceYn => "appliance_yn",
            QuestionCategory::ClothingYn => "clothing_yn",
            QuestionCategory::Color => "color",
            QuestionCategory::Counting => "counting",
            QuestionCategory::ElectronicYn => "electronic_yn",
            QuestionCategory::Food => "food",
            QuestionCategory::FoodYn => "food_yn",
            QuestionCategory::Holding => "holding",
            QuestionCategory::HouseholdYn => "household_yn",
            QuestionCategory::LandscapeYn => "landscape_yn",
            QuestionCategory::Location => "location",
            QuestionCategory::PersonYn => "person_yn",
            QuestionCategory::PlantYn => "plant_yn",
            QuestionCategory::Pose => "pose",
            QuestionCategory::Position => "position",
            QuestionCategory::Scene => "scene",
            QuestionCategory::SportYn => "sport_yn",
            QuestionCategory::StructureYn => "structure_yn",
            QuestionCategory::Vehicle => "vehicle",
            QuestionCategory::VehicleYn => "vehicle_yn",
        }
    }

    pub fn from_id(s: &str) -> Option<QuestionCategory> {
        QuestionCategory::ALL.iter().copied().find(|c| c.id() == s)
    }
}

impl fmt::Display for QuestionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id = self.id();
        match id.strip_suffix("_yn") {
            Some(base) => write!(f, "{base} Y/N"),
            None => write!(f, "{id}"),
        }
    }
}

/// One generated question/answer pair, the atom of the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub question_id: String,
    pub image_id: String,
    pub category: QuestionCategory,
    pub question: String,
    pub answer: String,
    pub answer_form: AnswerForm,
    #[serde(default)]
    pub is_negative: bool,
}

impl QaPair {
    /// Check the pair's own invariants (binary answers, form/category match).
    pub fn check(&self) -> Result<()> {
        if self.answer_form != self.category.answer_form() {
            return Err(Error::Data(format!(
                "{}: answer_form inconsistent with category {}",
                self.question_id, self.category
            )));
        }
        if self.answer_form == AnswerForm::Binary && self.answer != "yes" && self.answer != "no" {
            return Err(Error::Data(format!(
                "{}: binary answer must be yes/no, got {:?}",
                self.question_id, self.answer
            )));
        }
        Ok(())
    }
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<Vec<QaPair>> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: QaPair = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: idx + 1,
            message: e.to_string(),
        })?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn write_dataset<W: std::io::Write>(mut w: W, pairs: &[QaPair]) -> Result<()> {
    for pair in pairs {
        let line = serde_json::to_string(pair).map_err(|e| Error::Data(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io("<stream>", e))?;
    }
    Ok(())
}

/// Canonical dataset order: image, then category, then question id.
pub fn sort_canonical(pairs: &mut [QaPair]) {
    pairs.sort_by(|a, b| {
        (&a.image_id, a.category, &a.question_id).cmp(&(&b.image_id, b.category, &b.question_id))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_three_categories_with_splits() {
        assert_eq!(QuestionCategory::ALL.len(), 23);
        let binary = QuestionCategory::ALL
            .iter()
            .filter(|c| c.answer_form() == AnswerForm::Binary)
            .count();
        assert_eq!(binary, 12);
    }

    #[test]
    fn display_uses_yn_suffix() {
        assert_eq!(QuestionCategory::AnimalYn.to_string(), "animal Y/N");
        assert_eq!(QuestionCategory::Counting.to_string(), "counting");
    }

    #[test]
    fn id_round_trips() {
        for c in QuestionCategory::ALL {
            assert_eq!(QuestionCategory::from_id(c.id()), Some(c));
        }
    }

    #[test]
    fn binary_answer_invariant_enforced() {
        let mut pair = QaPair {
            question_id: "q1".into(),
            image_id: "img1".into(),
            category: QuestionCategory::AnimalYn,
            question: "Is there an animal in the image?".into(),
            answer: "yes".into(),
            answer_form: AnswerForm::Binary,
            is_negative: false,
        };
        assert!(pair.check().is_ok());
        pair.answer = "dog".into();
        assert!(pair.check().is_err());
    }

    #[test]
    fn dataset_roundtrip() {
        let pairs = vec![QaPair {
            question_id: "q1".into(),
            image_id: "img1".into(),
            category: QuestionCategory::Counting,
            question: "How many dogs are there?".into(),
            answer: "2".into(),
            answer_form: AnswerForm::Open,
            is_negative: false,
        }];
        let mut buf = Vec::new();
        write_dataset(&mut buf, &pairs).unwrap();
        let back = read_dataset(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, pairs);
    }
}
