use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::annotation::{ImageAnnotation, SemanticCategory, SpatialPosition};
use crate::dataset::{AnswerForm, QaPair, QuestionCategory};
use crate::error::{Error, Result};
use crate::forge::templates::TemplateSet;
use crate::util::derive_rng;

/// Binary presence category for a semantic category; `Other` has none.
fn presence_category(cat: SemanticCategory) -> Option<QuestionCategory> {
    match cat {
        SemanticCategory::Animal => Some(QuestionCategory::AnimalYn),
        SemanticCategory::Vehicle => Some(QuestionCategory::VehicleYn),
        SemanticCategory::Food => Some(QuestionCategory::FoodYn),
        SemanticCategory::Appliance => Some(QuestionCategory::ApplianceYn),
        SemanticCategory::Electronic => Some(QuestionCategory::ElectronicYn),
        SemanticCategory::Clothing => Some(QuestionCategory::ClothingYn),
        SemanticCategory::Household => Some(QuestionCategory::HouseholdYn),
        SemanticCategory::Plant => Some(QuestionCategory::PlantYn),
        SemanticCategory::SportEquipment => Some(QuestionCategory::SportYn),
        SemanticCategory::Structure => Some(QuestionCategory::StructureYn),
        SemanticCategory::LandscapeFeature => Some(QuestionCategory::LandscapeYn),
        SemanticCategory::Other => None,
    }
}

/// Open identity category (what animal/vehicle/food), where one exists.
fn identity_category(cat: SemanticCategory) -> Option<QuestionCategory> {
    match cat {
        SemanticCategory::Animal => Some(QuestionCategory::Animal),
        SemanticCategory::Vehicle => Some(QuestionCategory::Vehicle),
        SemanticCategory::Food => Some(QuestionCategory::Food),
        _ => None,
    }
}

/// Re-derive the grounded answer for a (category, slot) against an
/// annotation. Returns None when the annotation cannot answer it.
pub fn expected_answer(
    a: &ImageAnnotation,
    category: QuestionCategory,
    slot: Option<&str>,
) -> Option<String> {
    match category {
        QuestionCategory::Counting => {
            let obj = a.object(slot?)?;
            (obj.count > 0).then(|| obj.count.to_string())
        }
        QuestionCategory::Color => a.object(slot?)?.color.clone(),
        QuestionCategory::Position => match a.object(slot?)?.position {
            SpatialPosition::Foreground => Some("foreground".into()),
            SpatialPosition::Background => Some("background".into()),
            SpatialPosition::Unknown => None,
        },
        QuestionCategory::Animal | QuestionCategory::Vehicle | QuestionCategory::Food => {
            let obj = a.object(slot?)?;
            (identity_category(obj.semantic_category) == Some(category))
                .then(|| obj.label.clone())
        }
        QuestionCategory::PersonYn => Some(if a.persons.is_empty() { "no" } else { "yes" }.into()),
        QuestionCategory::Action => a.persons.iter().find_map(|p| p.action.clone()),
        QuestionCategory::Holding => a.persons.iter().find_map(|p| {
            p.interaction
                .as_ref()
                .filter(|i| i.verb == "holding")
                .map(|i| i.object_label.clone())
        }),
        QuestionCategory::Pose => a.persons.iter().find_map(|p| p.pose.clone()),
        QuestionCategory::Scene => a.scene.as_ref().map(|s| {
            match s.setting {
                crate::annotation::SceneSetting::Indoor => "indoor",
                crate::annotation::SceneSetting::Outdoor => "outdoor",
            }
            .into()
        }),
        QuestionCategory::Location => a.scene.as_ref()?.location.clone(),
        // binary presence over objects: yes iff some object of the
        // category carries the queried label with positive count
        _ => {
            let obj = a.object(slot?);
            Some(
                match obj {
                    Some(o) if o.count > 0 && presence_category(o.semantic_category) == Some(category) => "yes",
                    _ => "no",
                }
                .into(),
            )
        }
    }
}

/// Instantiate templates conditionally on the annotation's content. Every
/// emitted answer is derivable from the annotation; negatives are added
/// separately. Deterministic under (annotation, templates, seed).
pub fn generate_qa(
    a: &ImageAnnotation,
    templates: &TemplateSet,
    seed: u64,
) -> Result<Vec<QaPair>> {
    let mut rng = derive_rng(seed, &format!("gen/{}", a.image_id));
    let mut pairs = Vec::new();

    let emit = |rng: &mut rand_chacha::ChaCha8Rng,
                    pairs: &mut Vec<QaPair>,
                    category: QuestionCategory,
                    slot: Option<&str>,
                    answer: String|
     -> Result<()> {
        let template = templates.pick(category, rng.gen::<usize>())?;
        let question = match slot {
            Some(label) => template.render(&[("label", label)])?,
            None => template.render(&[])?,
        };
        let slot_id = slot.unwrap_or("-");
        pairs.push(QaPair {
            question_id: format!("{}:{}:{}", a.image_id, category.id(), slot_id),
            image_id: a.image_id.clone(),
            category,
            question,
            answer,
            answer_form: category.answer_form(),
            is_negative: false,
        });
        Ok(())
    };

    for obj in &a.objects {
        if obj.count <= 0 {
            continue;
        }
        let label = obj.label.as_str();
        if let Some(cat) = presence_category(obj.semantic_category) {
            emit(&mut rng, &mut pairs, cat, Some(label), "yes".into())?;
        }
        if let Some(cat) = identity_category(obj.semantic_category) {
            emit(&mut rng, &mut pairs, cat, Some(label), obj.label.clone())?;
        }
        emit(
            &mut rng,
            &mut pairs,
            QuestionCategory::Counting,
            Some(label),
            obj.count.to_string(),
        )?;
        if let Some(answer) = expected_answer(a, QuestionCategory::Color, Some(label)) {
            emit(&mut rng, &mut pairs, QuestionCategory::Color, Some(label), answer)?;
        }
        if let Some(answer) = expected_answer(a, QuestionCategory::Position, Some(label)) {
            emit(&mut rng, &mut pairs, QuestionCategory::Position, Some(label), answer)?;
        }
    }

    if !a.persons.is_empty() {
        emit(&mut rng, &mut pairs, QuestionCategory::PersonYn, None, "yes".into())?;
        for cat in [
            QuestionCategory::Action,
            QuestionCategory::Holding,
            QuestionCategory::Pose,
        ] {
            if let Some(answer) = expected_answer(a, cat, None) {
                emit(&mut rng, &mut pairs, cat, None, answer)?;
            }
        }
    }

    if a.scene.is_some() {
        for cat in [QuestionCategory::Scene, QuestionCategory::Location] {
            if let Some(answer) = expected_answer(a, cat, None) {
                emit(&mut rng, &mut pairs, cat, None, answer)?;
            }
        }
    }

    Ok(pairs)
}

/// Global label vocabulary with corpus frequencies, for negative sampling.
#[derive(Debug, Clone, Default)]
pub struct LabelVocab {
    /// label -> (corpus frequency, semantic category)
    pub entries: BTreeMap<String, (usize, SemanticCategory)>,
}

impl LabelVocab {
    pub fn from_annotations(annotations: &[ImageAnnotation]) -> LabelVocab {
        let mut entries: BTreeMap<String, (usize, SemanticCategory)> = BTreeMap::new();
        for a in annotations {
            for obj in &a.objects {
                if obj.count <= 0 {
                    continue;
                }
                let entry = entries
                    .entry(obj.label.clone())
                    .or_insert((0, obj.semantic_category));
                entry.0 += 1;
            }
        }
        LabelVocab { entries }
    }

    fn by_presence_category(&self) -> BTreeMap<QuestionCategory, Vec<(&str, usize)>> {
        let mut out: BTreeMap<QuestionCategory, Vec<(&str, usize)>> = BTreeMap::new();
        for (label, (freq, cat)) in &self.entries {
            if let Some(qcat) = presence_category(*cat) {
                out.entry(qcat).or_default().push((label.as_str(), *freq));
            }
        }
        out
    }
}

/// Targeted negatives for presence and counting: absent labels answered
/// "no" / "0". `ratio` is the target negative share within each touched
/// category; labels are drawn frequency-weighted from the vocabulary.
pub fn generate_negatives(
    dataset: &[QaPair],
    annotations: &[ImageAnnotation],
    vocab: &LabelVocab,
    templates: &TemplateSet,
    seed: u64,
    ratio: f64,
) -> Result<Vec<QaPair>> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::Config(format!("neg-ratio must be in [0,1), got {ratio}")));
    }
    if ratio == 0.0 || annotations.is_empty() {
        return Ok(Vec::new());
    }

    let mut positives: BTreeMap<QuestionCategory, usize> = BTreeMap::new();
    for pair in dataset {
        if !pair.is_negative {
            *positives.entry(pair.category).or_default() += 1;
        }
    }
    let target = |n_pos: usize| ((n_pos as f64) * ratio / (1.0 - ratio)).round() as usize;

    let image_ids: Vec<&str> = annotations.iter().map(|a| a.image_id.as_str()).collect();
    let by_image: BTreeMap<&str, &ImageAnnotation> = annotations
        .iter()
        .map(|a| (a.image_id.as_str(), a))
        .collect();
    let present_labels: BTreeMap<&str, BTreeSet<&str>> = annotations
        .iter()
        .map(|a| {
            (
                a.image_id.as_str(),
                a.objects
                    .iter()
                    .filter(|o| o.count > 0)
                    .map(|o| o.label.as_str())
                    .collect(),
            )
        })
        .collect();
    let pools = vocab.by_presence_category();

    let mut negatives = Vec::new();

    // presence Y/N negatives per object category
    for (qcat, pool) in &pools {
        let n_pos = positives.get(qcat).copied().unwrap_or(0);
        let n_neg = target(n_pos);
        let mut rng = derive_rng(seed, &format!("neg/{}", qcat.id()));
        let total_freq: usize = pool.iter().map(|(_, f)| f).sum();
        let mut chosen: BTreeSet<(String, String)> = BTreeSet::new();
        let mut attempts = 0usize;
        while chosen.len() < n_neg && attempts < n_neg.saturating_mul(50).max(200) {
            attempts += 1;
            let image_id = image_ids[rng.gen_range(0..image_ids.len())];
            let label = weighted_pick(&mut rng, pool, total_freq);
            if present_labels[image_id].contains(label) {
                continue;
            }
            if !chosen.insert((image_id.to_string(), label.to_string())) {
                continue;
            }
            let template = templates.pick(*qcat, rng.gen::<usize>())?;
            negatives.push(QaPair {
                question_id: format!("{image_id}:{}:neg:{label}", qcat.id()),
                image_id: image_id.to_string(),
                category: *qcat,
                question: template.render(&[("label", label)])?,
                answer: "no".into(),
                answer_form: AnswerForm::Binary,
                is_negative: true,
            });
        }
    }

    // person Y/N negatives from person-free images
    {
        let n_pos = positives.get(&QuestionCategory::PersonYn).copied().unwrap_or(0);
        let n_neg = target(n_pos);
        let mut rng = derive_rng(seed, "neg/person_yn");
        let mut pool: Vec<&str> = image_ids
            .iter()
            .copied()
            .filter(|id| by_image[id].persons.is_empty())
            .collect();
        for _ in 0..n_neg {
            if pool.is_empty() {
                break;
            }
            let image_id = pool.swap_remove(rng.gen_range(0..pool.len()));
            let template = templates.pick(QuestionCategory::PersonYn, rng.gen::<usize>())?;
            negatives.push(QaPair {
                question_id: format!("{image_id}:person_yn:neg"),
                image_id: image_id.to_string(),
                category: QuestionCategory::PersonYn,
                question: template.render(&[])?,
                answer: "no".into(),
                answer_form: AnswerForm::Binary,
                is_negative: true,
            });
        }
    }

    // counting negatives: absent label, answer "0"
    {
        let n_pos = positives.get(&QuestionCategory::Counting).copied().unwrap_or(0);
        let n_neg = target(n_pos);
        let mut rng = derive_rng(seed, "neg/counting");
        let pool: Vec<(&str, usize)> = vocab
            .entries
            .iter()
            .map(|(l, (f, _))| (l.as_str(), *f))
            .collect();
        let total_freq: usize = pool.iter().map(|(_, f)| f).sum();
        let mut chosen: BTreeSet<(String, String)> = BTreeSet::new();
        let mut attempts = 0usize;
        while chosen.len() < n_neg && attempts < n_neg.saturating_mul(50).max(200) {
            attempts += 1;
            if pool.is_empty() {
                break;
            }
            let image_id = image_ids[rng.gen_range(0..image_ids.len())];
            let label = weighted_pick(&mut rng, &pool, total_freq);
            if present_labels[image_id].contains(label) {
                continue;
            }
            if !chosen.insert((image_id.to_string(), label.to_string())) {
                continue;
            }
            let template = templates.pick(QuestionCategory::Counting, rng.gen::<usize>())?;
            negatives.push(QaPair {
                question_id: format!("{image_id}:counting:neg:{label}"),
                image_id: image_id.to_string(),
                category: QuestionCategory::Counting,
                question: template.render(&[("label", label)])?,
                answer: "0".into(),
                answer_form: AnswerForm::Open,
                is_negative: true,
            });
        }
    }

    Ok(negatives)
}

fn weighted_pick<'a>(
    rng: &mut rand_chacha::ChaCha8Rng,
    pool: &[(&'a str, usize)],
    total_freq: usize,
) -> &'a str {
    let mut pick = rng.gen_range(0..total_freq.max(1));
    for (label, freq) in pool {
        if pick < *freq {
            return label;
        }
        pick -= freq;
    }
    pool.last().expect("pool nonempty").0
}
